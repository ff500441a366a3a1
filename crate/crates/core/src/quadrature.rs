//! Kernels and product-integration (PI) weights.
//!
//! The memory term `(omega_alpha * phi)(t)` with the Abel kernel
//! `omega_alpha(t) = t^(alpha-1) / Gamma(alpha)` is averaged over each step and
//! integrated exactly against a piecewise-constant reconstruction of `phi`:
//!
//! ```text
//! (1/k_n) int_{t_{n-1}}^{t_n} (omega_alpha * phi_bar)(t) dt
//!     = w_{n1} k_1 phi^1 + sum_{p=2}^{n} w_{np} k_p phi^{p-1/2}
//! ```

use crate::error::{domain, Error, Result};
use crate::mesh::GradedMesh;

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Euler's Gamma function on `(0, 50]` by the Lanczos approximation (`g = 7`, 9 terms).
///
/// Arguments below `1/2` go through the reflection formula. Relative error stays
/// below `1e-13` on the supported range.
pub fn gamma_function(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(domain(format!(
            "Gamma is only implemented for x > 0, got {x}"
        )));
    }
    if x > 171.0 {
        return Err(domain(format!("Gamma({x}) overflows f64")));
    }
    Ok(gamma_positive(x))
}

fn gamma_positive(x: f64) -> f64 {
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return pi / ((pi * x).sin() * gamma_positive(1.0 - x));
    }
    // exact for small integers
    if x == x.trunc() && x <= 23.0 {
        return (1..x as u64).map(|i| i as f64).product();
    }
    let z = x - 1.0;
    let mut series = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        series += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    // split the power to stay clear of overflow near the top of the range
    let half = t.powf(0.5 * (z + 0.5));
    (2.0 * std::f64::consts::PI).sqrt() * half * (half * (-t).exp()) * series
}

/// The family of tempered kernels `beta_j(t) = exp(-kappa t) t^(alpha_j - 1) / Gamma(alpha_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    alphas: Vec<f64>,
    kappa: f64,
}

impl KernelSpec {
    pub fn new(alphas: Vec<f64>, kappa: f64) -> Result<Self> {
        if alphas.is_empty() {
            return Err(domain("at least one kernel exponent is required"));
        }
        if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(domain(format!(
                "kernel exponents must lie in (0, 1), got {a}"
            )));
        }
        if !kappa.is_finite() || kappa < 0.0 {
            return Err(domain(format!(
                "tempering parameter kappa must be >= 0, got {kappa}"
            )));
        }
        Ok(Self { alphas, kappa })
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Number of memory terms `m`.
    pub fn m(&self) -> usize {
        self.alphas.len()
    }

    /// `alpha = min_j alpha_j`, which governs the regularity of the solution at `t = 0`.
    pub fn alpha_min(&self) -> f64 {
        self.alphas.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn kernel(&self, j: usize, t: f64) -> Result<f64> {
        tempered_kernel(self.alphas[j], self.kappa, t)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(domain(format!(
            "kernel exponent must lie in (0, 1), got {alpha}"
        )))
    }
}

/// `exp(-kappa t) t^(alpha - 1) / Gamma(alpha)`, singular at `t = 0`.
pub fn tempered_kernel(alpha: f64, kappa: f64, t: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if kappa.is_nan() || kappa < 0.0 {
        return Err(domain(format!(
            "tempering parameter kappa must be >= 0, got {kappa}"
        )));
    }
    if !t.is_finite() || t <= 0.0 {
        return Err(domain(format!("kernel is singular at t <= 0, got t = {t}")));
    }
    Ok((-kappa * t).exp() * t.powf(alpha - 1.0) / gamma_positive(alpha))
}

/// `(base + step)^beta - base^beta` for `base >= 0`, `step > 0`.
///
/// When the two powers share leading digits the difference is formed as
/// `base^beta * expm1(beta * ln1p(step / base))`.
#[inline]
fn power_difference(base: f64, step: f64, beta: f64) -> f64 {
    if base <= 0.0 {
        step.powf(beta)
    } else if step <= 0.5 * base {
        base.powf(beta) * (beta * (step / base).ln_1p()).exp_m1()
    } else {
        (base + step).powf(beta) - base.powf(beta)
    }
}

/// `lambda_{n,p} = (t_n - t_{p-1})^(alpha+1) - (t_n - t_p)^(alpha+1)`.
#[inline]
fn lambda(mesh: &GradedMesh, beta: f64, n: usize, p: usize) -> f64 {
    power_difference(mesh.t(n) - mesh.t(p), mesh.step(p), beta)
}

#[inline]
fn weight_unchecked(mesh: &GradedMesh, alpha: f64, gamma_a2: f64, n: usize, p: usize) -> f64 {
    let beta = alpha + 1.0;
    let kn = mesh.step(n);
    if p == n {
        return kn.powf(alpha - 1.0) / gamma_a2;
    }
    let kp = mesh.step(p);
    (lambda(mesh, beta, n, p) - lambda(mesh, beta, n - 1, p)) / (kn * kp * gamma_a2)
}

fn check_indices(mesh: &GradedMesh, n: usize, p: usize) -> Result<()> {
    if n < 1 || n > mesh.n_steps() {
        return Err(Error::IndexOutOfRange {
            what: "n",
            index: n,
            lo: 1,
            hi: mesh.n_steps(),
        });
    }
    if p < 1 || p > n {
        return Err(Error::IndexOutOfRange {
            what: "p",
            index: p,
            lo: 1,
            hi: n,
        });
    }
    Ok(())
}

/// The PI weight `w_{np}`:
///
/// ```text
/// w_{np} = (lambda_{n,p} - lambda_{n-1,p}) / (k_n k_p Gamma(alpha + 2)),   p < n
/// w_{nn} = k_n^(alpha - 1) / Gamma(alpha + 2)
/// ```
pub fn pi_weight(mesh: &GradedMesh, alpha: f64, n: usize, p: usize) -> Result<f64> {
    check_alpha(alpha)?;
    check_indices(mesh, n, p)?;
    Ok(weight_unchecked(
        mesh,
        alpha,
        gamma_positive(alpha + 2.0),
        n,
        p,
    ))
}

/// The weights `w_{n1}, ..., w_{nn}` for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct PiWeightRow {
    pub n: usize,
    pub alpha: f64,
    /// `w[p - 1]` holds `w_{np}`.
    pub w: Vec<f64>,
}

impl PiWeightRow {
    /// `w_{np}`, one-based.
    #[inline]
    pub fn get(&self, p: usize) -> f64 {
        self.w[p - 1]
    }

    /// The diagonal weight `w_{nn}`.
    pub fn diagonal(&self) -> f64 {
        self.w[self.n - 1]
    }

    /// Accumulates `w_{n1} k_1 h^1 + sum_{p=2}^{upto} w_{np} k_p h^p` into `out`,
    /// where `history[p - 1]` holds `h^p`. Entries past `upto` are ignored.
    pub fn accumulate(
        &self,
        mesh: &GradedMesh,
        history: &[Vec<f64>],
        upto: usize,
        out: &mut [f64],
    ) {
        for (p, h) in history
            .iter()
            .enumerate()
            .take(upto)
            .map(|(i, h)| (i + 1, h))
        {
            let c = self.get(p) * mesh.step(p);
            for (o, x) in out.iter_mut().zip(h) {
                *o += c * x;
            }
        }
    }
}

pub fn pi_weight_row(mesh: &GradedMesh, alpha: f64, n: usize) -> Result<PiWeightRow> {
    check_alpha(alpha)?;
    check_indices(mesh, n, n)?;
    let g = gamma_positive(alpha + 2.0);
    let w = (1..=n)
        .map(|p| weight_unchecked(mesh, alpha, g, n, p))
        .collect();
    Ok(PiWeightRow { n, alpha, w })
}

/// Discrete fractional integral of a piecewise-constant history at step `n = row.n`.
///
/// `history[0]` is `V^1` and `history[p - 1]` for `p >= 2` is the half-step average
/// `V^{p-1/2}`; all entries must have the same length.
pub fn discrete_fractional_integral(
    row: &PiWeightRow,
    mesh: &GradedMesh,
    history: &[Vec<f64>],
) -> Result<Vec<f64>> {
    if history.len() != row.n {
        return Err(Error::LengthMismatch {
            what: "history entries vs weight row",
            expected: row.n,
            actual: history.len(),
        });
    }
    if row.n > mesh.n_steps() {
        return Err(Error::IndexOutOfRange {
            what: "n",
            index: row.n,
            lo: 1,
            hi: mesh.n_steps(),
        });
    }
    let dim = history[0].len();
    if let Some(h) = history.iter().find(|h| h.len() != dim) {
        return Err(Error::LengthMismatch {
            what: "history state vector",
            expected: dim,
            actual: h.len(),
        });
    }
    let mut out = vec![0.0; dim];
    row.accumulate(mesh, history, row.n, &mut out);
    Ok(out)
}

/// Every weight row of a mesh, `O(N^2)` storage. Used for cross-checks; the stepper
/// generates rows on demand instead.
#[derive(Debug, Clone)]
pub struct PiWeightTable {
    rows: Vec<PiWeightRow>,
}

impl PiWeightTable {
    pub fn new(mesh: &GradedMesh, alpha: f64) -> Result<Self> {
        let rows = (1..=mesh.n_steps())
            .map(|n| pi_weight_row(mesh, alpha, n))
            .collect::<Result<_>>()?;
        Ok(Self { rows })
    }

    pub fn row(&self, n: usize) -> &PiWeightRow {
        &self.rows[n - 1]
    }

    pub fn get(&self, n: usize, p: usize) -> f64 {
        self.rows[n - 1].get(p)
    }
}
