//! Randomised small problems and the PDE residual of the closed-form solutions.

use super::Dense;
use cnpi_core::stepper::SourceFn;
use cnpi_core::{
    ExampleId, GradedMesh, KernelSpec, ManufacturedCase, OperatorBundle, ProblemSpec, SourceRule,
    SpatialGrid,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random small problem together with dense copies of its operators.
pub struct Setup {
    pub alphas: Vec<f64>,
    pub kappa: f64,
    pub mesh: GradedMesh,
    pub bundle: OperatorBundle,
    pub a: Dense,
    pub b: Vec<Dense>,
    pub u0: Vec<f64>,
    pub coeffs: Vec<[f64; 3]>,
    pub rule: SourceRule,
}

impl Setup {
    pub fn random(seed: u64, kappa_range: (f64, f64)) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.gen_range(1..=3);
        let alphas: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..0.95)).collect();
        let kappa = if kappa_range.0 == kappa_range.1 {
            kappa_range.0
        } else {
            rng.gen_range(kappa_range.0..kappa_range.1)
        };
        let n_steps = rng.gen_range(1..=8);
        let mesh = GradedMesh::graded(n_steps, rng.gen_range(1.0..3.0), 1.0).unwrap();
        let (bundle, a, b) = if rng.gen_bool(0.3) {
            let av = rng.gen_range(0.0..5.0);
            let bv: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..5.0)).collect();
            let b = bv.iter().map(|&v| Dense::identity(1).scaled(v)).collect();
            (
                OperatorBundle::scalar(av, bv).unwrap(),
                Dense::identity(1).scaled(av),
                b,
            )
        } else {
            let cells = rng.gen_range(2..=6);
            let l = rng.gen_range(0.5..2.0);
            let grid = SpatialGrid::new(1, cells, l).unwrap();
            let lap = super::laplacian_1d(cells, l);
            (
                OperatorBundle::example_1d(grid, m).unwrap(),
                lap.clone(),
                vec![lap; m],
            )
        };
        let dim = a.n;
        let u0 = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let coeffs = (0..dim)
            .map(|_| {
                [
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(0.5..4.0),
                    rng.gen_range(-1.0..1.0),
                ]
            })
            .collect();
        let rule = if rng.gen_bool(0.5) {
            SourceRule::Midpoint
        } else {
            SourceRule::EndpointAverage
        };
        Self {
            alphas,
            kappa,
            mesh,
            bundle,
            a,
            b,
            u0,
            coeffs,
            rule,
        }
    }

    pub fn g(coeffs: &[[f64; 3]], t: f64) -> Vec<f64> {
        coeffs
            .iter()
            .map(|c| c[0] * (c[1] * t).cos() + c[2] * t)
            .collect()
    }

    pub fn spec(&self, scale_u0: f64, scale_g: f64) -> ProblemSpec {
        let coeffs = self.coeffs.clone();
        let source: SourceFn = Box::new(move |t| {
            Setup::g(&coeffs, t)
                .into_iter()
                .map(|v| scale_g * v)
                .collect()
        });
        ProblemSpec::new(
            KernelSpec::new(self.alphas.clone(), self.kappa).unwrap(),
            self.bundle.clone(),
            self.mesh.clone(),
            source,
            self.u0.iter().map(|v| scale_u0 * v).collect(),
            self.rule,
        )
        .unwrap()
    }

    pub fn oracle(&self) -> Vec<Vec<f64>> {
        let times = self.mesh.times();
        let g_half: Vec<Vec<f64>> = (1..=self.mesh.n_steps())
            .map(|n| match self.rule {
                SourceRule::Midpoint => Setup::g(&self.coeffs, 0.5 * (times[n - 1] + times[n])),
                SourceRule::EndpointAverage => Setup::g(&self.coeffs, times[n - 1])
                    .iter()
                    .zip(Setup::g(&self.coeffs, times[n]))
                    .map(|(x, y)| 0.5 * (x + y))
                    .collect(),
            })
            .collect();
        super::monolithic_solve(
            times,
            &self.alphas,
            self.kappa,
            &self.a,
            &self.b,
            &self.u0,
            &g_half,
        )
    }
}

pub fn homogeneous(
    bundle: OperatorBundle,
    alphas: Vec<f64>,
    kappa: f64,
    mesh: GradedMesh,
    u0: Vec<f64>,
) -> ProblemSpec {
    ProblemSpec::homogeneous(KernelSpec::new(alphas, kappa).unwrap(), bundle, mesh, u0).unwrap()
}

/// `u_t + A u + sum_j beta_j * (B_j u) - f` at `(x, t)`, every term evaluated numerically
/// from the closed-form solution alone.
pub fn residual(case: &ManufacturedCase, x: &[f64], t: f64) -> f64 {
    operator_part(case, x, t) - case.f(x, t)
}

/// `u_t + A u + sum_j beta_j * (B_j u)` for the solution of `case`.
pub fn operator_part(case: &ManufacturedCase, x: &[f64], t: f64) -> f64 {
    let kappa = case.kernel().kappa();
    let alphas = case.kernel().alphas().to_vec();
    let dim = x.len();
    let hx = 1e-2;
    let u_at = |y: &[f64], s: f64| case.exact_u(y, s);
    // -d^2/dx_axis^2 u(., s) at x
    let minus_dxx = |axis: usize, s: f64| {
        -super::d2(
            |z| {
                let mut y = x.to_vec();
                y[axis] = z;
                u_at(&y, s)
            },
            x[axis],
            hx,
        )
    };
    let ht = (t / 20.0).min(1e-3);
    let u_t = super::d1(|s| u_at(x, s), t, ht);
    let a_u: f64 = (0..dim).map(|axis| minus_dxx(axis, t)).sum();
    let memory: f64 = alphas
        .iter()
        .enumerate()
        .map(|(j, &alpha)| {
            let b_u = |s: f64| match case.id() {
                ExampleId::Example1 => minus_dxx(0, s),
                ExampleId::Example2 => minus_dxx(j, s),
            };
            super::tempered_convolution(alpha, kappa, t, b_u)
        })
        .sum();
    u_t + a_u + memory
}
