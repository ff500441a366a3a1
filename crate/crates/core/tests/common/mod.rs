//! Independent oracles shared by the integration tests.
//!
//! Nothing here calls into the weight, stepping or source code of the library: weights are
//! recomputed from their defining integrals, the scheme is assembled as one dense block
//! system, and derivatives of the manufactured solutions are taken numerically.

#![allow(dead_code, clippy::excessive_precision)]

pub mod cases;

use std::f64::consts::PI;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn adapt(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (val, err) = gk15(f, a, b);
    if err <= tol || err <= 50.0 * f64::EPSILON * val.abs() || depth == 0 {
        return val;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth - 1) + adapt(f, m, b, 0.5 * tol, depth - 1)
}

/// Adaptive Gauss-Kronrod (7/15) integration to an absolute tolerance.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64) -> f64 {
    adapt(&f, a, b, abs_tol, 60)
}

/// Integration to a relative tolerance, using a coarse estimate for the scale.
pub fn integrate_rel(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let (coarse, _) = gk15(&f, a, b);
    let scale = coarse.abs().max(1e-300);
    adapt(&f, a, b, rel_tol * scale, 60)
}

/// Gamma function from Stirling's series after shifting the argument above 10.
pub fn gamma(x: f64) -> f64 {
    assert!(x > 0.0);
    let mut shift = 1.0;
    let mut z = x;
    while z < 10.0 {
        shift *= z;
        z += 1.0;
    }
    let z2 = z * z;
    let series = 1.0 / (12.0 * z) - 1.0 / (360.0 * z * z2) + 1.0 / (1260.0 * z2 * z2 * z)
        - 1.0 / (1680.0 * z2 * z2 * z2 * z)
        + 1.0 / (1188.0 * z2 * z2 * z2 * z2 * z)
        - 691.0 / (360360.0 * z2 * z2 * z2 * z2 * z2 * z);
    let ln = (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + series;
    ln.exp() / shift
}

/// `w_{np}` from its defining double integral; the inner integral is the elementary
/// antiderivative of `(t - s)^(alpha-1)`, the outer one is adaptive quadrature.
pub fn weight_by_quadrature(times: &[f64], alpha: f64, n: usize, p: usize) -> f64 {
    let (a, b) = (times[n - 1], times[n]);
    let (lo, hi) = (times[p - 1], times[p]);
    let g1 = gamma(alpha + 1.0);
    let inner = |t: f64| {
        let upper = t.min(hi);
        if upper <= lo {
            return 0.0;
        }
        ((t - lo).powf(alpha) - (t - upper).powf(alpha)) / g1
    };
    integrate_rel(inner, a, b, 1e-13) / ((b - a) * (hi - lo))
}

/// `(1/k_n) int_{t_{n-1}}^{t_n} int_0^t omega_alpha(t - s) vbar(s) ds dt` for a scalar
/// piecewise-constant history `vbar[p - 1]` on `(t_{p-1}, t_p)`.
pub fn fractional_integral_by_quadrature(times: &[f64], alpha: f64, n: usize, vbar: &[f64]) -> f64 {
    let g1 = gamma(alpha + 1.0);
    let (a, b) = (times[n - 1], times[n]);
    // integrand as a function of d = t - t_{n-1}, so small offsets keep full precision
    let inner = |d: f64| {
        let mut acc = 0.0;
        for (i, v) in vbar.iter().enumerate().take(n) {
            let (lo, hi) = (times[i], times[i + 1]);
            let upper_gap = if i + 1 == n { 0.0 } else { (a - hi) + d };
            acc += v * (((a - lo) + d).powf(alpha) - upper_gap.powf(alpha)) / g1;
        }
        acc
    };
    // d = k_n s^q flattens the d^alpha endpoint behaviour
    let k = b - a;
    let q = 1.0 / alpha.min(0.5);
    let scale = vbar.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    integrate(
        |s| inner(k * s.powf(q)) * q * s.powf(q - 1.0),
        0.0,
        1.0,
        1e-13 * scale,
    )
}

/// `int_0^t (t - s)^(alpha-1) s^mu ds / Gamma(alpha)`, split at `t/2` with a substitution
/// on each half that removes the endpoint singularity.
pub fn power_integral_by_quadrature(alpha: f64, mu: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let half = 0.5 * t;
    // s = u^(1/(1+mu)) on [0, t/2]
    let e = 1.0 / (1.0 + mu);
    let left = integrate_rel(
        |u| (t - u.powf(e)).powf(alpha - 1.0) * e,
        0.0,
        half.powf(1.0 + mu),
        1e-14,
    );
    // t - s = r^(1/alpha) on [t/2, t]
    let right = integrate_rel(
        |r| (t - r.powf(1.0 / alpha)).powf(mu) / alpha,
        0.0,
        half.powf(alpha),
        1e-14,
    );
    (left + right) / gamma(alpha)
}

/// Tempered convolution `int_0^t exp(-kappa (t-s)) (t-s)^(alpha-1)/Gamma(alpha) phi(s) ds`
/// with the substitution `s = t - tau^(1/alpha)`.
pub fn tempered_convolution(alpha: f64, kappa: f64, t: f64, phi: impl Fn(f64) -> f64) -> f64 {
    let integrand = |tau: f64| {
        let lag = tau.powf(1.0 / alpha);
        (-kappa * lag).exp() * phi((t - lag).max(0.0))
    };
    integrate_rel(integrand, 0.0, t.powf(alpha), 1e-13) / (alpha * gamma(alpha))
}

/// Sixth-order central difference of the first derivative.
pub fn d1(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x - 3.0 * h) + 9.0 * f(x - 2.0 * h) - 45.0 * f(x - h) + 45.0 * f(x + h)
        - 9.0 * f(x + 2.0 * h)
        + f(x + 3.0 * h))
        / (60.0 * h)
}

/// Sixth-order central difference of the second derivative.
pub fn d2(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (2.0 * f(x - 3.0 * h) - 27.0 * f(x - 2.0 * h) + 270.0 * f(x - h) - 490.0 * f(x)
        + 270.0 * f(x + h)
        - 27.0 * f(x + 2.0 * h)
        + 2.0 * f(x + 3.0 * h))
        / (180.0 * h * h)
}

/// Dense row-major matrix.
#[derive(Debug, Clone)]
pub struct Dense {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Dense {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }
}

/// `(2 x_i - x_{i-1} - x_{i+1}) / h^2` with `m - 1` interior points.
pub fn laplacian_1d(m: usize, l: f64) -> Dense {
    let n = m - 1;
    let h = l / m as f64;
    let s = 1.0 / (h * h);
    let mut a = Dense::zeros(n);
    for i in 0..n {
        a.add(i, i, 2.0 * s);
        if i > 0 {
            a.add(i, i - 1, -s);
        }
        if i + 1 < n {
            a.add(i, i + 1, -s);
        }
    }
    a
}

/// Second difference along one axis of an `(m-1) x (m-1)` interior grid, x_1 fastest.
pub fn second_difference_2d(m: usize, l: f64, axis: usize) -> Dense {
    let n = m - 1;
    let h = l / m as f64;
    let s = 1.0 / (h * h);
    let mut a = Dense::zeros(n * n);
    for j in 0..n {
        for i in 0..n {
            let row = j * n + i;
            a.add(row, row, 2.0 * s);
            let (pos, stride) = if axis == 0 { (i, 1) } else { (j, n) };
            if pos > 0 {
                a.add(row, row - stride, -s);
            }
            if pos + 1 < n {
                a.add(row, row + stride, -s);
            }
        }
    }
    a
}

/// Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Dense, mut b: Vec<f64>) -> Vec<f64> {
    let n = a.n;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| {
                a.get(i, col)
                    .abs()
                    .partial_cmp(&a.get(j, col).abs())
                    .unwrap()
            })
            .unwrap();
        if piv != col {
            for k in 0..n {
                a.data.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let d = a.get(col, col);
        for i in col + 1..n {
            let f = a.get(i, col) / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                let v = a.get(col, k);
                a.data[i * n + k] -= f * v;
            }
            b[i] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a.get(i, k) * x[k]).sum();
        x[i] = (b[i] - s) / a.get(i, i);
    }
    x
}

/// Naive PI weight from the lambda second difference, no cancellation handling.
pub fn naive_weight(times: &[f64], alpha: f64, n: usize, p: usize) -> f64 {
    let beta = alpha + 1.0;
    let kn = times[n] - times[n - 1];
    let g2 = gamma(alpha + 2.0);
    if p == n {
        return kn.powf(alpha - 1.0) / g2;
    }
    let kp = times[p] - times[p - 1];
    let lam = |m: usize| (times[m] - times[p - 1]).powf(beta) - (times[m] - times[p]).powf(beta);
    (lam(n) - lam(n - 1)) / (kn * kp * g2)
}

/// Solves the whole scheme at once as a block lower-triangular system in `V^1..V^N`.
///
/// `g_half[n - 1]` is the source average `g^{n-1/2}`.
pub fn monolithic_solve(
    times: &[f64],
    alphas: &[f64],
    kappa: f64,
    a: &Dense,
    b: &[Dense],
    u0: &[f64],
    g_half: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    let d = u0.len();
    let nsteps = times.len() - 1;
    let size = nsteps * d;
    let mut mat = Dense::zeros(size);
    let mut rhs = vec![0.0; size];
    let k = |n: usize| times[n] - times[n - 1];
    // block (n, q) gets c * Op, unknown V^q at column block q-1
    let put = |mat: &mut Dense, n: usize, q: usize, c: f64, op: &Dense| {
        for i in 0..d {
            for j in 0..d {
                mat.add((n - 1) * d + i, (q - 1) * d + j, c * op.get(i, j));
            }
        }
    };
    let eye = Dense::identity(d);

    // n = 1
    let k1 = k(1);
    put(&mut mat, 1, 1, 1.0 / k1 - kappa, &eye);
    put(&mut mat, 1, 1, 1.0, a);
    for (j, bj) in b.iter().enumerate() {
        put(
            &mut mat,
            1,
            1,
            naive_weight(times, alphas[j], 1, 1) * k1,
            bj,
        );
    }
    for i in 0..d {
        rhs[i] = g_half[0][i] + u0[i] / k1;
    }

    for n in 2..=nsteps {
        let kn = k(n);
        // (V^n - V^{n-1})/k_n + (A - kappa)(V^n + V^{n-1})/2
        put(&mut mat, n, n, 1.0 / kn - 0.5 * kappa, &eye);
        put(&mut mat, n, n, 0.5, a);
        put(&mut mat, n, n - 1, -1.0 / kn - 0.5 * kappa, &eye);
        put(&mut mat, n, n - 1, 0.5, a);
        for (j, bj) in b.iter().enumerate() {
            let w = |p: usize| naive_weight(times, alphas[j], n, p);
            // p = 1 slot holds V^1 itself
            put(&mut mat, n, 1, w(1) * k(1), bj);
            for p in 2..=n {
                let c = 0.5 * w(p) * k(p);
                put(&mut mat, n, p, c, bj);
                put(&mut mat, n, p - 1, c, bj);
            }
        }
        rhs[(n - 1) * d..n * d].copy_from_slice(&g_half[n - 1]);
    }

    let x = dense_solve(mat, rhs);
    (0..nsteps)
        .map(|n| x[n * d..(n + 1) * d].to_vec())
        .collect()
}

/// Relative max-norm distance.
pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = b
        .iter()
        .chain(a)
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-300);
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        / scale
}
