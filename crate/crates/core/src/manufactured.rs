//! Manufactured solutions with closed-form sources.
//!
//! Both cases have the separated form `u(x, t) = w(t) exp(-kappa t) phi(x)` where
//! `phi(x) = prod_i sin(pi x_i / L)` is an eigenfunction of every operator, so the
//! memory terms reduce to Riemann-Liouville integrals of powers of `t`:
//!
//! ```text
//! (beta_j * B_j u)(t) = exp(-kappa t) lambda_j (I^{alpha_j} w)(t) phi(x)
//! f(x, t) = exp(-kappa t) phi(x) [w' - kappa w + lambda_A w + sum_j lambda_j I^{alpha_j} w]
//! ```

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Error, Result};
use crate::mesh::GradedMesh;
use crate::operators::{OperatorBundle, SpatialGrid};
use crate::quadrature::{gamma_function, KernelSpec};
use crate::stepper::{ProblemSpec, SourceRule};

/// Riemann-Liouville integral of a power:
/// `int_0^t omega_alpha(t - s) s^mu ds = Gamma(mu + 1) / Gamma(mu + 1 + alpha) t^(mu + alpha)`.
pub fn frac_int_power(alpha: f64, mu: f64, t: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !mu.is_finite() || mu <= -1.0 {
        return Err(domain(format!("power mu must be > -1, got {mu}")));
    }
    if !t.is_finite() || t < 0.0 {
        return Err(domain(format!("t must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(gamma_function(mu + 1.0)? / gamma_function(mu + 1.0 + alpha)? * t.powf(mu + alpha))
}

/// The two test problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExampleId {
    /// 1D, `w(t) = t^(1+alpha_1) + t^(1+alpha_2)`, `u0 = 0`.
    Example1,
    /// 2D, `w(t) = t^(1+alpha) + 1` with `alpha = min alpha_j`, `u0 = phi`.
    Example2,
}

impl ExampleId {
    pub fn spatial_dim(self) -> usize {
        match self {
            ExampleId::Example1 => 1,
            ExampleId::Example2 => 2,
        }
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExampleId::Example1 => "1",
            ExampleId::Example2 => "2",
        })
    }
}

impl FromStr for ExampleId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" | "example1" => Ok(ExampleId::Example1),
            "2" | "example2" => Ok(ExampleId::Example2),
            other => Err(domain(format!(
                "unknown example '{other}' (expected 1 or 2)"
            ))),
        }
    }
}

/// Operator eigenvalues on the spatial profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenvalues {
    pub a: f64,
    pub b: Vec<f64>,
}

/// One term `coef * t^power` of the temporal factor `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct PowerTerm {
    coef: f64,
    power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedCase {
    id: ExampleId,
    kernel: KernelSpec,
    l: f64,
    eigen: Eigenvalues,
    terms: Vec<PowerTerm>,
    /// `ratios[j][i] = Gamma(p_i + 1) / Gamma(p_i + 1 + alpha_j)`
    ratios: Vec<Vec<f64>>,
}

impl ManufacturedCase {
    /// 1D case with `A = B_1 = B_2 = -d^2/dx^2` on `(0, L)`.
    pub fn example1(alphas: [f64; 2], kappa: f64, l: f64) -> Result<Self> {
        let kernel = KernelSpec::new(alphas.to_vec(), kappa)?;
        let terms = vec![
            PowerTerm {
                coef: 1.0,
                power: 1.0 + alphas[0],
            },
            PowerTerm {
                coef: 1.0,
                power: 1.0 + alphas[1],
            },
        ];
        Self::build(ExampleId::Example1, kernel, l, terms)
    }

    /// 2D case with `A = -Laplacian`, `B_j = -d^2/dx_j^2` on `(0, L)^2`.
    pub fn example2(alphas: [f64; 2], kappa: f64, l: f64) -> Result<Self> {
        let kernel = KernelSpec::new(alphas.to_vec(), kappa)?;
        let terms = vec![
            PowerTerm {
                coef: 1.0,
                power: 1.0 + kernel.alpha_min(),
            },
            PowerTerm {
                coef: 1.0,
                power: 0.0,
            },
        ];
        Self::build(ExampleId::Example2, kernel, l, terms)
    }

    pub fn new(id: ExampleId, alphas: [f64; 2], kappa: f64, l: f64) -> Result<Self> {
        match id {
            ExampleId::Example1 => Self::example1(alphas, kappa, l),
            ExampleId::Example2 => Self::example2(alphas, kappa, l),
        }
    }

    fn build(id: ExampleId, kernel: KernelSpec, l: f64, terms: Vec<PowerTerm>) -> Result<Self> {
        if !l.is_finite() || l <= 0.0 {
            return Err(domain(format!("domain length must be > 0, got {l}")));
        }
        let lam = (PI / l).powi(2);
        let eigen = Eigenvalues {
            a: id.spatial_dim() as f64 * lam,
            b: vec![lam; kernel.m()],
        };
        let ratios = kernel
            .alphas()
            .iter()
            .map(|&a| {
                terms
                    .iter()
                    .map(|term| {
                        Ok(gamma_function(term.power + 1.0)?
                            / gamma_function(term.power + 1.0 + a)?)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            id,
            kernel,
            l,
            eigen,
            terms,
            ratios,
        })
    }

    /// Replaces the continuum eigenvalues by those of the finite-difference operators on
    /// `grid`, so the sampled exact solution solves the semi-discrete problem exactly.
    pub fn with_discrete_eigenvalues(mut self, grid: &SpatialGrid) -> Result<Self> {
        if grid.dim() != self.id.spatial_dim() || grid.l() != self.l {
            return Err(domain("grid does not match the manufactured case geometry"));
        }
        let h = grid.h();
        let lam = 4.0 / (h * h) * (PI * h / (2.0 * self.l)).sin().powi(2);
        self.eigen = Eigenvalues {
            a: self.id.spatial_dim() as f64 * lam,
            b: vec![lam; self.kernel.m()],
        };
        Ok(self)
    }

    pub fn id(&self) -> ExampleId {
        self.id
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn eigen(&self) -> &Eigenvalues {
        &self.eigen
    }

    /// Spatial profile `phi(x) = prod_i sin(pi x_i / L)`.
    pub fn profile(&self, x: &[f64]) -> f64 {
        x.iter().map(|xi| (PI * xi / self.l).sin()).product()
    }

    /// Temporal factor `w(t)`.
    pub fn w(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|term| term.coef * pow(t, term.power))
            .sum()
    }

    /// `w'(t)`.
    pub fn w_prime(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .filter(|term| term.power != 0.0)
            .map(|term| term.coef * term.power * pow(t, term.power - 1.0))
            .sum()
    }

    /// `(I^{alpha_j} w)(t)`.
    pub fn frac_int_w(&self, j: usize, t: f64) -> f64 {
        let a = self.kernel.alphas()[j];
        self.terms
            .iter()
            .zip(&self.ratios[j])
            .map(|(term, r)| term.coef * r * pow(t, term.power + a))
            .sum()
    }

    /// Bracket `w' - kappa w + lambda_A w + sum_j lambda_j I^{alpha_j} w`, i.e. `g / phi`.
    pub fn source_factor(&self, t: f64) -> f64 {
        let w = self.w(t);
        let memory: f64 = (0..self.kernel.m())
            .map(|j| self.eigen.b[j] * self.frac_int_w(j, t))
            .sum();
        self.w_prime(t) - self.kernel.kappa() * w + self.eigen.a * w + memory
    }

    pub fn exact_u(&self, x: &[f64], t: f64) -> f64 {
        self.w(t) * (-self.kernel.kappa() * t).exp() * self.profile(x)
    }

    pub fn u0(&self, x: &[f64]) -> f64 {
        self.w(0.0) * self.profile(x)
    }

    /// Physical source `f(x, t)`.
    pub fn f(&self, x: &[f64], t: f64) -> f64 {
        (-self.kernel.kappa() * t).exp() * self.profile(x) * self.source_factor(t)
    }

    /// Transformed source `g(x, t) = exp(kappa t) f(x, t)`, formed without the exponentials.
    pub fn g(&self, x: &[f64], t: f64) -> f64 {
        self.profile(x) * self.source_factor(t)
    }

    pub fn exact_vector(&self, grid: &SpatialGrid, t: f64) -> Vec<f64> {
        let scale = self.w(t) * (-self.kernel.kappa() * t).exp();
        grid.sample(|x| scale * self.profile(x))
    }

    pub fn operator_bundle(&self, grid: &SpatialGrid) -> Result<OperatorBundle> {
        if grid.dim() != self.id.spatial_dim() {
            return Err(domain(format!(
                "example {} needs a {}D grid",
                self.id,
                self.id.spatial_dim()
            )));
        }
        match self.id {
            ExampleId::Example1 => OperatorBundle::example_1d(*grid, self.kernel.m()),
            ExampleId::Example2 => OperatorBundle::example_2d(*grid),
        }
    }

    /// The discrete problem on `grid` and `mesh`.
    pub fn problem_spec(
        &self,
        grid: &SpatialGrid,
        mesh: GradedMesh,
        rule: SourceRule,
    ) -> Result<ProblemSpec> {
        let bundle = self.operator_bundle(grid)?;
        let phi = grid.sample(|x| self.profile(x));
        let u0 = phi.iter().map(|p| self.w(0.0) * p).collect();
        let case = self.clone();
        let source = Box::new(move |t: f64| {
            let s = case.source_factor(t);
            phi.iter().map(|p| s * p).collect()
        });
        ProblemSpec::new(self.kernel.clone(), bundle, mesh, source, u0, rule)
    }
}

/// `t^p` with `0^0 = 1`.
#[inline]
fn pow(t: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else {
        t.powf(p)
    }
}

#[cfg(test)]
#[allow(clippy::excessive_precision, clippy::approx_constant)]
mod tests {
    use super::*;

    #[test]
    fn power_integral_values() {
        assert!((frac_int_power(0.5, 0.0, 1.0).unwrap() - 1.128_379_167_095_512_574).abs() < 1e-14);
        assert_eq!(frac_int_power(0.3, 1.2, 0.0).unwrap(), 0.0);
        assert!(
            (frac_int_power(0.3, 1.2, 0.7).unwrap() - 0.485_416_584_507_891_798_6).abs() < 1e-14
        );
        assert!(frac_int_power(0.3, -1.0, 0.7).is_err());
        assert!(frac_int_power(0.3, 0.5, -0.1).is_err());
        assert!(frac_int_power(1.3, 0.5, 0.1).is_err());
    }

    #[test]
    fn example1_source_vanishes_at_start() {
        let case = ManufacturedCase::example1([0.2, 0.8], 1.0, 1.0).unwrap();
        for x in [0.1, 0.5, 0.77] {
            assert_eq!(case.f(&[x], 0.0), 0.0);
            assert_eq!(case.u0(&[x]), 0.0);
        }
    }

    #[test]
    fn example1_source_symmetry() {
        let case = ManufacturedCase::example1([0.15, 0.85], 2.0, 1.0).unwrap();
        for (x, t) in [(0.1, 0.3), (0.37, 0.9), (0.45, 0.01)] {
            let a = case.f(&[x], t);
            let b = case.f(&[1.0 - x], t);
            assert!((a - b).abs() <= 1e-13 * a.abs());
        }
    }

    #[test]
    fn example2_initial_data() {
        let case = ManufacturedCase::example2([0.8, 0.75], 2.0, 1.0).unwrap();
        for x in [[0.1, 0.2], [0.5, 0.5], [0.9, 0.33]] {
            assert!((case.exact_u(&x, 0.0) - case.u0(&x)).abs() < 1e-14);
        }
        // f(x, 0) = phi(x) (2 pi^2 - kappa)
        let x = [0.3, 0.6];
        let expected = case.profile(&x) * (2.0 * PI * PI - 2.0);
        assert!((case.f(&x, 0.0) - expected).abs() < 1e-12);
    }

    #[test]
    fn discrete_eigenvalues_match_operators() {
        let grid = SpatialGrid::new(2, 10, 1.0).unwrap();
        let case = ManufacturedCase::example2([0.4, 0.4], 1.0, 1.0)
            .unwrap()
            .with_discrete_eigenvalues(&grid)
            .unwrap();
        let bundle = case.operator_bundle(&grid).unwrap();
        let phi = grid.sample(|x| case.profile(x));
        let ax = bundle.a.apply(&phi).unwrap();
        for (y, p) in ax.iter().zip(&phi) {
            assert!((y - case.eigen().a * p).abs() < 1e-11);
        }
        for (j, op) in bundle.b.iter().enumerate() {
            let bx = op.apply(&phi).unwrap();
            for (y, p) in bx.iter().zip(&phi) {
                assert!((y - case.eigen().b[j] * p).abs() < 1e-11);
            }
        }
        let wrong = SpatialGrid::new(1, 10, 1.0).unwrap();
        assert!(ManufacturedCase::example2([0.4, 0.4], 1.0, 1.0)
            .unwrap()
            .with_discrete_eigenvalues(&wrong)
            .is_err());
    }

    #[test]
    fn example_id_parsing() {
        assert_eq!("1".parse::<ExampleId>().unwrap(), ExampleId::Example1);
        assert_eq!("2".parse::<ExampleId>().unwrap(), ExampleId::Example2);
        assert!("3".parse::<ExampleId>().is_err());
    }
}
