//! Graded time meshes.
//!
//! The generated family is `t_n = (n k)^gamma` with `k = T^(1/gamma) / N`. For `gamma > 1`
//! the steps cluster near `t = 0`, where the exact solution has a weak singularity.

use crate::error::{domain, Result};

/// A time partition `0 = t_0 < t_1 < ... < t_N = T`.
///
/// Indices follow the usual convention: `t()[n]` is `t_n` for `n = 0..=N` and
/// [`GradedMesh::step`] returns `k_n = t_n - t_{n-1}` for `n = 1..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedMesh {
    n_steps: usize,
    gamma: f64,
    t_final: f64,
    times: Vec<f64>,
    steps: Vec<f64>,
    k_base: f64,
}

impl GradedMesh {
    /// Builds the graded mesh `t_n = (n k)^gamma`, `k = T^(1/gamma) / N`.
    pub fn graded(n_steps: usize, gamma: f64, t_final: f64) -> Result<Self> {
        if n_steps == 0 {
            return Err(domain("number of time steps N must be at least 1"));
        }
        if !gamma.is_finite() || gamma < 1.0 {
            return Err(domain(format!(
                "grading exponent gamma must be >= 1, got {gamma}"
            )));
        }
        if !t_final.is_finite() || t_final <= 0.0 {
            return Err(domain(format!("final time T must be > 0, got {t_final}")));
        }
        let k_base = t_final.powf(1.0 / gamma) / n_steps as f64;
        let mut times = Vec::with_capacity(n_steps + 1);
        times.push(0.0);
        for n in 1..n_steps {
            let s = n as f64 * k_base;
            let t = if gamma == 1.0 {
                s
            } else {
                (gamma * s.ln()).exp()
            };
            times.push(t);
        }
        times.push(t_final);
        Ok(Self::assemble(n_steps, gamma, t_final, times, k_base))
    }

    /// Uniform mesh with `N` equal steps on `[0, T]`.
    pub fn uniform(n_steps: usize, t_final: f64) -> Result<Self> {
        Self::graded(n_steps, 1.0, t_final)
    }

    /// Wraps an arbitrary user-supplied partition.
    ///
    /// `gamma` is the grading exponent the partition is meant to realise; it only enters
    /// the reference scale `k = T^(1/gamma) / N` used by [`GradedMesh::validate_hypotheses`].
    pub fn from_times(times: Vec<f64>, gamma: f64) -> Result<Self> {
        if times.len() < 2 {
            return Err(domain("a mesh needs at least two time levels"));
        }
        if times[0] != 0.0 {
            return Err(domain(format!(
                "mesh must start at t = 0, got {}",
                times[0]
            )));
        }
        if !gamma.is_finite() || gamma < 1.0 {
            return Err(domain(format!(
                "grading exponent gamma must be >= 1, got {gamma}"
            )));
        }
        if let Some(w) = times.windows(2).find(|w| !w[1].is_finite() || w[1] <= w[0]) {
            return Err(domain(format!(
                "mesh times must be finite and strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        let n_steps = times.len() - 1;
        let t_final = times[n_steps];
        let k_base = t_final.powf(1.0 / gamma) / n_steps as f64;
        Ok(Self::assemble(n_steps, gamma, t_final, times, k_base))
    }

    fn assemble(n_steps: usize, gamma: f64, t_final: f64, times: Vec<f64>, k_base: f64) -> Self {
        let steps = times.windows(2).map(|w| w[1] - w[0]).collect();
        Self {
            n_steps,
            gamma,
            t_final,
            times,
            steps,
            k_base,
        }
    }

    /// Number of time steps `N`.
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    /// Reference step `k = T^(1/gamma) / N`.
    pub fn k_base(&self) -> f64 {
        self.k_base
    }

    /// All time levels `t_0..=t_N`.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Step sizes `k_1..=k_N`, stored zero-based.
    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    /// `t_n`.
    #[inline]
    pub fn t(&self, n: usize) -> f64 {
        self.times[n]
    }

    /// `k_n = t_n - t_{n-1}` for `1 <= n <= N`.
    #[inline]
    pub fn step(&self, n: usize) -> f64 {
        self.steps[n - 1]
    }

    /// Midpoint `t_{n-1/2}`.
    #[inline]
    pub fn midpoint(&self, n: usize) -> f64 {
        0.5 * (self.times[n] + self.times[n - 1])
    }

    /// Scans the whole mesh for the tightest constants in the grading hypotheses
    ///
    /// ```text
    /// k_n <= C k min{1, t_n^(1 - 1/gamma)},                     n >= 1
    /// t_1 >= c k^gamma,   t_n <= C t_{n-1},                     n >= 2
    /// 0 <= k_{n+1} - k_n <= C k^2 min{1, t_n^(1 - 2/gamma)},    n >= 2
    /// ```
    pub fn validate_hypotheses(&self) -> MeshHypothesisReport {
        let k = self.k_base;
        let g = self.gamma;

        let c_gamma_lower = self.times[1] / k.powf(g);

        let c_gamma_31 = (1..=self.n_steps)
            .map(|n| self.step(n) / (k * self.t(n).powf(1.0 - 1.0 / g).min(1.0)))
            .fold(0.0, f64::max);

        let c_gamma_ratio = (2..=self.n_steps)
            .map(|n| self.t(n) / self.t(n - 1))
            .fold(0.0, f64::max);

        // increments within a few ulps of zero count as equal steps
        let k_max = self.steps.iter().copied().fold(0.0, f64::max);
        let tiny = 8.0 * f64::EPSILON * k_max;
        let mut monotone = true;
        let mut c_gamma_311: f64 = 0.0;
        for n in 2..self.n_steps {
            let mut dk = self.step(n + 1) - self.step(n);
            if dk.abs() <= tiny {
                dk = 0.0;
            }
            if dk < 0.0 {
                monotone = false;
                continue;
            }
            let scale = k * k * self.t(n).powf(1.0 - 2.0 / g).min(1.0);
            c_gamma_311 = c_gamma_311.max(dk / scale);
        }

        let ok = |c: f64| c.is_finite() && c >= 0.0;
        MeshHypothesisReport {
            c_gamma_lower,
            c_gamma_31,
            c_gamma_ratio,
            c_gamma_311,
            satisfied_step_bound: ok(c_gamma_31),
            satisfied_start_and_ratio: ok(c_gamma_lower)
                && c_gamma_lower > 0.0
                && ok(c_gamma_ratio),
            satisfied_increment: monotone && ok(c_gamma_311),
        }
    }
}

/// Tightest constants realising the three grading hypotheses on a given mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshHypothesisReport {
    /// Largest `c` with `t_1 >= c k^gamma`.
    pub c_gamma_lower: f64,
    /// Smallest `C` with `k_n <= C k min{1, t_n^(1-1/gamma)}`.
    pub c_gamma_31: f64,
    /// Smallest `C` with `t_n <= C t_{n-1}`, `n >= 2` (zero when `N = 1`).
    pub c_gamma_ratio: f64,
    /// Smallest `C` with `k_{n+1} - k_n <= C k^2 min{1, t_n^(1-2/gamma)}`, `n >= 2`.
    pub c_gamma_311: f64,
    pub satisfied_step_bound: bool,
    pub satisfied_start_and_ratio: bool,
    /// Also requires the increments `k_{n+1} - k_n` to be nonnegative.
    pub satisfied_increment: bool,
}

impl MeshHypothesisReport {
    pub fn all_satisfied(&self) -> bool {
        self.satisfied_step_bound && self.satisfied_start_and_ratio && self.satisfied_increment
    }
}
