//! Self-adjoint spatial operators and shifted linear solves.
//!
//! Concrete operators are second-order central differences with homogeneous Dirichlet
//! conditions on `(0, L)` or `(0, L)^2`, acting on the interior grid values, plus a
//! scalar multiple of the identity for hand-checkable model problems.

use crate::error::{domain, Error, Result};

/// Uniform grid with `M` partitions per dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    dim: usize,
    m: usize,
    l: f64,
    h: f64,
}

impl SpatialGrid {
    pub fn new(dim: usize, m: usize, l: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(domain(format!(
                "spatial dimension must be 1 or 2, got {dim}"
            )));
        }
        if m < 2 {
            return Err(domain(format!(
                "need at least 2 spatial partitions, got {m}"
            )));
        }
        if !l.is_finite() || l <= 0.0 {
            return Err(domain(format!("domain length must be > 0, got {l}")));
        }
        Ok(Self {
            dim,
            m,
            l,
            h: l / m as f64,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Partitions per dimension.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Interior points per dimension, `M - 1`.
    pub fn n_side(&self) -> usize {
        self.m - 1
    }

    pub fn interior_count(&self) -> usize {
        self.n_side().pow(self.dim as u32)
    }

    /// Quadrature weight `h^dim` of the discrete `L2` norm.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// Coordinates of every interior point, with the first coordinate varying fastest.
    pub fn interior_points(&self) -> Vec<Vec<f64>> {
        let n = self.n_side();
        let h = self.h;
        match self.dim {
            1 => (1..=n).map(|i| vec![i as f64 * h]).collect(),
            _ => (1..=n)
                .flat_map(|j| (1..=n).map(move |i| vec![i as f64 * h, j as f64 * h]))
                .collect(),
        }
    }

    /// Samples `f` at every interior point.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        self.interior_points().iter().map(|x| f(x)).collect()
    }

    /// Extreme eigenvalues of the 1D second difference `(2 x_i - x_{i-1} - x_{i+1}) / h^2`.
    fn second_difference_bounds(&self) -> (f64, f64) {
        let h = self.h;
        let s = (std::f64::consts::PI * h / (2.0 * self.l)).sin();
        let c = (std::f64::consts::PI * h / (2.0 * self.l)).cos();
        let scale = 4.0 / (h * h);
        (scale * s * s, scale * c * c)
    }
}

/// A concrete linear operator on interior-point vectors.
#[derive(Debug, Clone, PartialEq)]
pub enum Operator {
    /// `value * I` on vectors of length `dim`.
    Scalar { value: f64, dim: usize },
    /// `-d^2/dx^2` on a 1D grid.
    Laplacian1D(SpatialGrid),
    /// `-(d^2/dx_1^2 + d^2/dx_2^2)` on a 2D grid.
    Laplacian2D(SpatialGrid),
    /// `-d^2/dx_axis^2` on a 2D grid; `axis` 0 is `x_1`.
    SecondDerivative2D { grid: SpatialGrid, axis: usize },
}

impl Operator {
    pub fn dim(&self) -> usize {
        match self {
            Operator::Scalar { dim, .. } => *dim,
            Operator::Laplacian1D(g) | Operator::Laplacian2D(g) => g.interior_count(),
            Operator::SecondDerivative2D { grid, .. } => grid.interior_count(),
        }
    }

    /// `y = Op x`, checked.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("operator input", self.dim(), x.len())?;
        let mut y = vec![0.0; x.len()];
        self.apply_add(1.0, x, &mut y);
        Ok(y)
    }

    /// `y += c * Op x`; lengths are assumed to match.
    pub fn apply_add(&self, c: f64, x: &[f64], y: &mut [f64]) {
        match self {
            Operator::Scalar { value, .. } => {
                let s = c * value;
                y.iter_mut().zip(x).for_each(|(y, x)| *y += s * x);
            }
            Operator::Laplacian1D(g) => {
                let s = c / (g.h * g.h);
                let n = x.len();
                for i in 0..n {
                    let left = if i > 0 { x[i - 1] } else { 0.0 };
                    let right = if i + 1 < n { x[i + 1] } else { 0.0 };
                    y[i] += s * (2.0 * x[i] - left - right);
                }
            }
            Operator::Laplacian2D(g) => {
                second_difference_2d(g, 0, c, x, y);
                second_difference_2d(g, 1, c, x, y);
            }
            Operator::SecondDerivative2D { grid, axis } => {
                second_difference_2d(grid, *axis, c, x, y)
            }
        }
    }

    /// Lower and upper bounds on the spectrum.
    pub fn eigen_bounds(&self) -> (f64, f64) {
        match self {
            Operator::Scalar { value, .. } => (*value, *value),
            Operator::Laplacian1D(g) | Operator::SecondDerivative2D { grid: g, .. } => {
                g.second_difference_bounds()
            }
            Operator::Laplacian2D(g) => {
                let (lo, hi) = g.second_difference_bounds();
                (2.0 * lo, 2.0 * hi)
            }
        }
    }

    /// Constant (diagonal, off-diagonal) stencil when the operator is tridiagonal.
    fn tridiagonal(&self) -> Option<(f64, f64)> {
        match self {
            Operator::Scalar { value, .. } => Some((*value, 0.0)),
            Operator::Laplacian1D(g) => {
                let s = 1.0 / (g.h * g.h);
                Some((2.0 * s, -s))
            }
            _ => None,
        }
    }
}

fn second_difference_2d(g: &SpatialGrid, axis: usize, c: f64, x: &[f64], y: &mut [f64]) {
    let n = g.n_side();
    let s = c / (g.h * g.h);
    let stride = if axis == 0 { 1 } else { n };
    for j in 0..n {
        for i in 0..n {
            let idx = j * n + i;
            let pos = if axis == 0 { i } else { j };
            let lo = if pos > 0 { x[idx - stride] } else { 0.0 };
            let hi = if pos + 1 < n { x[idx + stride] } else { 0.0 };
            y[idx] += s * (2.0 * x[idx] - lo - hi);
        }
    }
}

fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            what,
            expected,
            actual,
        })
    }
}

/// Which concrete problem an [`OperatorBundle`] realises.
#[derive(Debug, Clone, PartialEq)]
pub enum Descriptor {
    /// `A = B_1 = ... = B_m = -d^2/dx^2` on `(0, L)`.
    Example1D(SpatialGrid),
    /// `A = -Laplacian`, `B_1 = -d^2/dx_1^2`, `B_2 = -d^2/dx_2^2` on `(0, L)^2`.
    Example2D(SpatialGrid),
    /// `A = a`, `B_j = b_j` acting on scalars.
    Scalar { a: f64, b: Vec<f64> },
}

/// The operators `A` and `B_1..B_m` of one problem.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorBundle {
    pub a: Operator,
    pub b: Vec<Operator>,
    pub descriptor: Descriptor,
}

impl OperatorBundle {
    /// 1D bundle with `m` memory operators, all equal to `-d^2/dx^2`.
    pub fn example_1d(grid: SpatialGrid, m: usize) -> Result<Self> {
        if grid.dim() != 1 {
            return Err(domain("the 1D example needs a 1D grid"));
        }
        if m == 0 {
            return Err(domain("need at least one memory operator"));
        }
        Ok(Self {
            a: Operator::Laplacian1D(grid),
            b: vec![Operator::Laplacian1D(grid); m],
            descriptor: Descriptor::Example1D(grid),
        })
    }

    /// 2D bundle: `A = -Laplacian`, `B_j = -d^2/dx_j^2` for `j = 1, 2`.
    pub fn example_2d(grid: SpatialGrid) -> Result<Self> {
        if grid.dim() != 2 {
            return Err(domain("the 2D example needs a 2D grid"));
        }
        Ok(Self {
            a: Operator::Laplacian2D(grid),
            b: (0..2)
                .map(|axis| Operator::SecondDerivative2D { grid, axis })
                .collect(),
            descriptor: Descriptor::Example2D(grid),
        })
    }

    /// Scalar model problem `u' + a u + sum_j b_j (beta_j * u) = f`.
    pub fn scalar(a: f64, b: Vec<f64>) -> Result<Self> {
        if b.is_empty() {
            return Err(domain("need at least one memory coefficient"));
        }
        if !a.is_finite() || b.iter().any(|x| !x.is_finite()) {
            return Err(domain("scalar operator coefficients must be finite"));
        }
        Ok(Self {
            a: Operator::Scalar { value: a, dim: 1 },
            b: b.iter()
                .map(|&value| Operator::Scalar { value, dim: 1 })
                .collect(),
            descriptor: Descriptor::Scalar { a, b },
        })
    }

    /// Number of memory operators `m`.
    pub fn m(&self) -> usize {
        self.b.len()
    }

    /// Length of the state vectors.
    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn grid(&self) -> Option<&SpatialGrid> {
        match &self.descriptor {
            Descriptor::Example1D(g) | Descriptor::Example2D(g) => Some(g),
            Descriptor::Scalar { .. } => None,
        }
    }

    /// Weight of the discrete `L2` norm (`h^dim`, or 1 for scalars).
    pub fn norm_weight(&self) -> f64 {
        self.grid().map_or(1.0, SpatialGrid::cell_volume)
    }

    /// Discrete `L2` norm `sqrt(h^dim sum x_i^2)`.
    pub fn norm(&self, x: &[f64]) -> f64 {
        (self.norm_weight() * x.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// `y = (c0 I + cA A + sum_j cB_j B_j) x`.
    pub fn apply_composite(&self, c0: f64, c_a: f64, c_b: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        check_len("state vector", self.dim(), x.len())?;
        check_len("memory shift coefficients", self.m(), c_b.len())?;
        let mut y = vec![0.0; x.len()];
        self.apply_composite_into(c0, c_a, c_b, x, &mut y);
        Ok(y)
    }

    fn apply_composite_into(&self, c0: f64, c_a: f64, c_b: &[f64], x: &[f64], y: &mut [f64]) {
        y.iter_mut().zip(x).for_each(|(y, x)| *y = c0 * x);
        if c_a != 0.0 {
            self.a.apply_add(c_a, x, y);
        }
        for (op, &c) in self.b.iter().zip(c_b) {
            if c != 0.0 {
                op.apply_add(c, x, y);
            }
        }
    }

    /// Lower bound on the smallest eigenvalue of `c0 I + cA A + sum_j cB_j B_j`.
    pub fn composite_lower_bound(&self, c0: f64, c_a: f64, c_b: &[f64]) -> f64 {
        let term = |c: f64, op: &Operator| {
            let (lo, hi) = op.eigen_bounds();
            if c >= 0.0 {
                c * lo
            } else {
                c * hi
            }
        };
        c0 + term(c_a, &self.a)
            + self
                .b
                .iter()
                .zip(c_b)
                .map(|(op, &c)| term(c, op))
                .sum::<f64>()
    }

    /// Solves `(c0 I + cA A + sum_j cB_j B_j) x = rhs`.
    ///
    /// Tridiagonal composites (scalar and 1D) are eliminated directly; the 2D composite goes
    /// through matrix-free conjugate gradients with relative residual tolerance `1e-12` and
    /// an iteration cap of `10 * dim`.
    pub fn solve_shifted(&self, c0: f64, c_a: f64, c_b: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
        check_len("right-hand side", self.dim(), rhs.len())?;
        check_len("memory shift coefficients", self.m(), c_b.len())?;
        let bound = self.composite_lower_bound(c0, c_a, c_b);
        if bound.is_nan() || bound <= 0.0 {
            return Err(Error::NotPositiveDefinite {
                c0,
                c_a,
                c_b: c_b.to_vec(),
                bound,
            });
        }

        let mut diag = c0;
        let mut off = 0.0;
        let mut tridiagonal = true;
        for (c, op) in std::iter::once((c_a, &self.a)).chain(c_b.iter().copied().zip(&self.b)) {
            match op.tridiagonal() {
                Some((d, o)) => {
                    diag += c * d;
                    off += c * o;
                }
                None => tridiagonal = false,
            }
        }
        if tridiagonal {
            Ok(solve_constant_tridiagonal(diag, off, rhs))
        } else {
            self.conjugate_gradient(c0, c_a, c_b, rhs)
        }
    }

    fn conjugate_gradient(&self, c0: f64, c_a: f64, c_b: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
        const TOL: f64 = 1e-12;
        let n = rhs.len();
        let rhs_norm = dot(rhs, rhs).sqrt();
        let mut x = vec![0.0; n];
        if rhs_norm == 0.0 {
            return Ok(x);
        }
        let max_iter = 10 * n;
        let mut r = rhs.to_vec();
        let mut q = vec![0.0; n];
        let mut iterations = 0;

        // the recursive residual can drift from the true one, so restart until they agree
        for _restart in 0..4 {
            let mut p = r.clone();
            let mut rr = dot(&r, &r);
            while rr.sqrt() > 0.5 * TOL * rhs_norm && iterations < max_iter {
                self.apply_composite_into(c0, c_a, c_b, &p, &mut q);
                let step = rr / dot(&p, &q);
                axpy(step, &p, &mut x);
                axpy(-step, &q, &mut r);
                let rr_new = dot(&r, &r);
                let beta = rr_new / rr;
                p.iter_mut().zip(&r).for_each(|(p, r)| *p = r + beta * *p);
                rr = rr_new;
                iterations += 1;
            }
            self.apply_composite_into(c0, c_a, c_b, &x, &mut q);
            r.iter_mut()
                .zip(rhs.iter().zip(&q))
                .for_each(|(r, (b, ax))| *r = b - ax);
            let true_res = dot(&r, &r).sqrt() / rhs_norm;
            if true_res <= TOL {
                return Ok(x);
            }
            if iterations >= max_iter {
                return Err(Error::IterationLimit {
                    iterations,
                    residual: true_res,
                });
            }
        }
        let true_res = dot(&r, &r).sqrt() / rhs_norm;
        Err(Error::IterationLimit {
            iterations,
            residual: true_res,
        })
    }
}

/// Thomas elimination for a symmetric Toeplitz tridiagonal matrix.
fn solve_constant_tridiagonal(diag: f64, off: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut c_prime = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut denom = diag;
    c_prime[0] = off / denom;
    x[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag - off * c_prime[i - 1];
        c_prime[i] = off / denom;
        x[i] = (rhs[i] - off * x[i - 1]) / denom;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        x[i] -= c_prime[i] * x[i + 1];
    }
    x
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += a * x);
}
