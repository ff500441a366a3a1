//! The CN-PI time-stepping scheme for the tempered problem.
//!
//! With `v = exp(kappa t) u` and `g = exp(kappa t) f` the model problem becomes
//!
//! ```text
//! v' + A v + sum_j (omega_{alpha_j} * B_j v)(t) - kappa v = g(t),   v(0) = u0
//! ```
//!
//! The first step is
//!
//! ```text
//! (V^1 - V^0)/k_1 + A V^1 + sum_j w_{11}^(j) k_1 B_j V^1 - kappa V^1 = g^{1/2}
//! ```
//!
//! and every later step applies Crank-Nicolson to all local terms while the memory term
//! uses the product-integration weights against the history `V^1, V^{3/2}, ..., V^{n-1/2}`.

use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Error, Result};
use crate::mesh::GradedMesh;
use crate::operators::OperatorBundle;
use crate::quadrature::{pi_weight_row, KernelSpec};

/// Largest `kappa * T` for which the factors `exp(+-kappa t)` are allowed.
pub const MAX_KAPPA_T: f64 = 30.0;

/// How `g^{n-1/2}` approximates the mean of `g` over a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum SourceRule {
    /// `g(t_{n-1/2})`
    Midpoint,
    /// `(g(t_{n-1}) + g(t_n)) / 2`; the benchmark studies use this rule.
    #[default]
    EndpointAverage,
}

impl fmt::Display for SourceRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceRule::Midpoint => "midpoint",
            SourceRule::EndpointAverage => "average",
        })
    }
}

impl FromStr for SourceRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "midpoint" => Ok(SourceRule::Midpoint),
            "average" | "endpoint-average" | "endpointaverage" => Ok(SourceRule::EndpointAverage),
            other => Err(domain(format!(
                "unknown source rule '{other}' (expected midpoint|average)"
            ))),
        }
    }
}

/// Transformed source `g(t)`, returning one value per interior point.
pub type SourceFn = Box<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// A fully specified discrete problem in the transformed variable.
pub struct ProblemSpec {
    kernel: KernelSpec,
    bundle: OperatorBundle,
    mesh: GradedMesh,
    source: SourceFn,
    u0: Vec<f64>,
    source_rule: SourceRule,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("kernel", &self.kernel)
            .field("bundle", &self.bundle.descriptor)
            .field("n_steps", &self.mesh.n_steps())
            .field("gamma", &self.mesh.gamma())
            .field("source_rule", &self.source_rule)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn new(
        kernel: KernelSpec,
        bundle: OperatorBundle,
        mesh: GradedMesh,
        source: SourceFn,
        u0: Vec<f64>,
        source_rule: SourceRule,
    ) -> Result<Self> {
        if kernel.m() != bundle.m() {
            return Err(Error::LengthMismatch {
                what: "memory operators vs kernel exponents",
                expected: kernel.m(),
                actual: bundle.m(),
            });
        }
        if u0.len() != bundle.dim() {
            return Err(Error::LengthMismatch {
                what: "initial condition",
                expected: bundle.dim(),
                actual: u0.len(),
            });
        }
        let kt = kernel.kappa() * mesh.t_final();
        if kt > MAX_KAPPA_T {
            return Err(domain(format!(
                "kappa * T = {kt} exceeds {MAX_KAPPA_T}; the exp(kappa t) transform would lose accuracy"
            )));
        }
        Ok(Self {
            kernel,
            bundle,
            mesh,
            source,
            u0,
            source_rule,
        })
    }

    /// Problem with `g = 0`.
    pub fn homogeneous(
        kernel: KernelSpec,
        bundle: OperatorBundle,
        mesh: GradedMesh,
        u0: Vec<f64>,
    ) -> Result<Self> {
        let dim = bundle.dim();
        Self::new(
            kernel,
            bundle,
            mesh,
            Box::new(move |_| vec![0.0; dim]),
            u0,
            SourceRule::Midpoint,
        )
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn bundle(&self) -> &OperatorBundle {
        &self.bundle
    }

    pub fn mesh(&self) -> &GradedMesh {
        &self.mesh
    }

    pub fn u0(&self) -> &[f64] {
        &self.u0
    }

    pub fn source_rule(&self) -> SourceRule {
        self.source_rule
    }

    /// Evaluates the transformed source at `t`.
    pub fn source(&self, t: f64) -> Result<Vec<f64>> {
        let g = (self.source)(t);
        if g.len() != self.bundle.dim() {
            return Err(Error::LengthMismatch {
                what: "source vector",
                expected: self.bundle.dim(),
                actual: g.len(),
            });
        }
        Ok(g)
    }

    /// `g^{n-1/2}` according to the configured rule.
    pub fn source_average(&self, n: usize) -> Result<Vec<f64>> {
        if n < 1 || n > self.mesh.n_steps() {
            return Err(Error::IndexOutOfRange {
                what: "n",
                index: n,
                lo: 1,
                hi: self.mesh.n_steps(),
            });
        }
        match self.source_rule {
            SourceRule::Midpoint => self.source(self.mesh.midpoint(n)),
            SourceRule::EndpointAverage => {
                let mut a = self.source(self.mesh.t(n - 1))?;
                let b = self.source(self.mesh.t(n))?;
                a.iter_mut().zip(&b).for_each(|(a, b)| *a = 0.5 * (*a + b));
                Ok(a)
            }
        }
    }

    /// Fresh state holding `V^0 = u0`.
    pub fn initial_state(&self) -> SchemeState {
        SchemeState::new(self.u0.clone(), self.bundle.norm_weight())
    }

    /// Computes `V^1`.
    pub fn step_first(&self, state: &mut SchemeState) -> Result<()> {
        if state.n != 0 {
            return Err(domain(format!(
                "first step expects a state at n = 0, got n = {}",
                state.n
            )));
        }
        self.check_state_dim(state)?;
        let k1 = self.mesh.step(1);
        let kappa = self.kernel.kappa();
        let c_b = self
            .kernel
            .alphas()
            .iter()
            .map(|&a| Ok(pi_weight_row(&self.mesh, a, 1)?.diagonal() * k1))
            .collect::<Result<Vec<_>>>()?;

        let mut rhs = self.source_average(1)?;
        rhs.iter_mut()
            .zip(&state.v[0])
            .for_each(|(r, v0)| *r += v0 / k1);

        let v1 = self
            .bundle
            .solve_shifted(1.0 / k1 - kappa, 1.0, &c_b, &rhs)?;
        state.push(v1.clone(), v1, k1);
        Ok(())
    }

    /// Advances a state at `n - 1 >= 1` to `n`.
    pub fn step_n(&self, state: &mut SchemeState) -> Result<()> {
        let n = state.n + 1;
        if state.n == 0 {
            return Err(domain("the general step needs V^1; call step_first first"));
        }
        if n > self.mesh.n_steps() {
            return Err(Error::IndexOutOfRange {
                what: "n",
                index: n,
                lo: 2,
                hi: self.mesh.n_steps(),
            });
        }
        self.check_state_dim(state)?;
        let kn = self.mesh.step(n);
        let kappa = self.kernel.kappa();
        let prev = &state.v[n - 1];

        let mut rhs = self.source_average(n)?;
        for (r, v) in rhs.iter_mut().zip(prev) {
            *r += (1.0 / kn + 0.5 * kappa) * v;
        }
        self.bundle.a.apply_add(-0.5, prev, &mut rhs);

        let mut c_b = Vec::with_capacity(self.kernel.m());
        let mut combined = vec![0.0; prev.len()];
        for (&alpha, op) in self.kernel.alphas().iter().zip(&self.bundle.b) {
            let row = pi_weight_row(&self.mesh, alpha, n)?;
            let half_diag = 0.5 * row.diagonal() * kn;
            c_b.push(half_diag);
            // B_j is applied once to the weighted history plus the explicit half of V^{n-1/2}
            combined
                .iter_mut()
                .zip(prev)
                .for_each(|(c, v)| *c = half_diag * v);
            row.accumulate(&self.mesh, &state.vbar, n - 1, &mut combined);
            op.apply_add(-1.0, &combined, &mut rhs);
        }

        let vn = self
            .bundle
            .solve_shifted(1.0 / kn - 0.5 * kappa, 0.5, &c_b, &rhs)?;
        let avg = vn.iter().zip(prev).map(|(a, b)| 0.5 * (a + b)).collect();
        state.push(vn, avg, kn);
        Ok(())
    }

    /// Runs all `N` steps from `V^0 = u0`.
    pub fn run(&self) -> Result<SchemeState> {
        let mut state = self.initial_state();
        self.step_first(&mut state)?;
        while state.n < self.mesh.n_steps() {
            self.step_n(&mut state)?;
        }
        Ok(state)
    }

    fn check_state_dim(&self, state: &SchemeState) -> Result<()> {
        let actual = state.v[0].len();
        if actual != self.bundle.dim() {
            return Err(Error::LengthMismatch {
                what: "state vector",
                expected: self.bundle.dim(),
                actual,
            });
        }
        Ok(())
    }
}

/// Solution history `V^0..V^n` plus the reconstruction used by the memory term.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeState {
    n: usize,
    v: Vec<Vec<f64>>,
    /// `vbar[0] = V^1`, `vbar[p - 1] = (V^p + V^{p-1}) / 2` for `p >= 2`.
    vbar: Vec<Vec<f64>>,
    /// `energy_terms[s] = sum_{r=1}^{s} k_r |V~^r|^2`.
    energy_terms: Vec<f64>,
    norm_weight: f64,
}

impl SchemeState {
    pub fn new(v0: Vec<f64>, norm_weight: f64) -> Self {
        Self {
            n: 0,
            v: vec![v0],
            vbar: Vec::new(),
            energy_terms: vec![0.0],
            norm_weight,
        }
    }

    fn push(&mut self, v: Vec<f64>, avg: Vec<f64>, k: f64) {
        let last = *self.energy_terms.last().unwrap_or(&0.0);
        self.energy_terms.push(last + k * self.norm_sq(&avg));
        self.v.push(v);
        self.vbar.push(avg);
        self.n += 1;
    }

    /// Index of the latest computed level.
    pub fn n(&self) -> usize {
        self.n
    }

    /// `V^n`.
    pub fn v(&self, n: usize) -> &[f64] {
        &self.v[n]
    }

    /// All levels `V^0..=V^n`.
    pub fn values(&self) -> &[Vec<f64>] {
        &self.v
    }

    /// Reconstruction value on `(t_{p-1}, t_p)`, `p >= 1`.
    pub fn vbar(&self, p: usize) -> &[f64] {
        &self.vbar[p - 1]
    }

    pub fn history(&self) -> &[Vec<f64>] {
        &self.vbar
    }

    fn norm_sq(&self, x: &[f64]) -> f64 {
        self.norm_weight * x.iter().map(|v| v * v).sum::<f64>()
    }

    /// Discrete `L2` norm of `V^n`.
    pub fn norm(&self, n: usize) -> f64 {
        self.norm_sq(&self.v[n]).sqrt()
    }

    /// `E^n = |V^n|^2 - 2 kappa sum_{s=1}^{n} k_s |V~^s|^2`, with `V~^1 = V^1` and
    /// `V~^s = V^{s-1/2}` otherwise.
    pub fn energy(&self, kappa: f64, n: usize) -> Result<f64> {
        if n > self.n {
            return Err(Error::IndexOutOfRange {
                what: "n",
                index: n,
                lo: 0,
                hi: self.n,
            });
        }
        Ok(self.norm_sq(&self.v[n]) - 2.0 * kappa * self.energy_terms[n])
    }

    /// `E^0..=E^n`.
    pub fn energy_sequence(&self, kappa: f64) -> Vec<f64> {
        (0..=self.n)
            .map(|n| self.norm_sq(&self.v[n]) - 2.0 * kappa * self.energy_terms[n])
            .collect()
    }

    /// Recomputes the reconstruction from `V` and compares bit for bit.
    pub fn history_is_consistent(&self) -> bool {
        if self.vbar.len() != self.n || self.v.len() != self.n + 1 {
            return false;
        }
        self.vbar.iter().enumerate().all(|(i, avg)| {
            let p = i + 1;
            if p == 1 {
                avg == &self.v[1]
            } else {
                avg.iter()
                    .zip(self.v[p].iter().zip(&self.v[p - 1]))
                    .all(|(a, (x, y))| *a == 0.5 * (x + y))
            }
        })
    }

    /// Maps the transformed solution back: `U^n = exp(-kappa t_n) V^n`.
    pub fn to_physical(&self, mesh: &GradedMesh, kappa: f64) -> Vec<Vec<f64>> {
        self.v
            .iter()
            .enumerate()
            .map(|(n, v)| {
                let damp = (-kappa * mesh.t(n)).exp();
                v.iter().map(|x| damp * x).collect()
            })
            .collect()
    }
}
