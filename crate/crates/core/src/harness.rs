//! Convergence and stability studies on the manufactured cases.
//!
//! A study runs the scheme for each `N` of a doubling ladder, measures
//! `E(N) = max_n |U^n - u(t_n)|` in the discrete `L2` norm and reports
//! `rate = log2(E(N) / E(2N))`.

use std::fmt::{self, Write as _};
use std::io::{self, Write};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
pub use crate::manufactured::ExampleId;
use crate::manufactured::ManufacturedCase;
use crate::mesh::{GradedMesh, MeshHypothesisReport};
use crate::operators::SpatialGrid;
use crate::quadrature::KernelSpec;
use crate::stepper::{ProblemSpec, SourceRule, MAX_KAPPA_T};

/// Choice of grading exponent, relative to `alpha = min_j alpha_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaRule {
    Uniform,
    /// `2 / (1 + alpha)`
    Optimal,
    /// `2 / (1 + alpha) + 1`
    OptimalPlusOne,
    Explicit(f64),
}

impl GammaRule {
    pub fn resolve(self, alpha_min: f64) -> f64 {
        match self {
            GammaRule::Uniform => 1.0,
            GammaRule::Optimal => 2.0 / (1.0 + alpha_min),
            GammaRule::OptimalPlusOne => 2.0 / (1.0 + alpha_min) + 1.0,
            GammaRule::Explicit(g) => g,
        }
    }
}

impl fmt::Display for GammaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GammaRule::Uniform => f.write_str("uniform"),
            GammaRule::Optimal => f.write_str("optimal"),
            GammaRule::OptimalPlusOne => f.write_str("optimal+1"),
            GammaRule::Explicit(g) => write!(f, "{g}"),
        }
    }
}

impl FromStr for GammaRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(GammaRule::Uniform),
            "optimal" => Ok(GammaRule::Optimal),
            "optimal+1" | "optimal-plus-one" => Ok(GammaRule::OptimalPlusOne),
            other => other.parse::<f64>().map(GammaRule::Explicit).map_err(|_| {
                domain(format!(
                    "invalid grading rule '{s}' (uniform|optimal|optimal+1|<number>)"
                ))
            }),
        }
    }
}

/// Eigenvalues used when forming the manufactured source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenSource {
    /// Eigenvalues of the continuous operators (`pi^2 / L^2` per direction).
    #[default]
    Continuum,
    /// Eigenvalues of the finite-difference operators; removes the spatial error.
    Discrete,
}

impl fmt::Display for EigenSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EigenSource::Continuum => "continuum",
            EigenSource::Discrete => "discrete",
        })
    }
}

impl FromStr for EigenSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "continuum" => Ok(EigenSource::Continuum),
            "discrete" => Ok(EigenSource::Discrete),
            other => Err(domain(format!(
                "unknown eigenvalue source '{other}' (continuum|discrete)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    AlignedTable,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "table" | "aligned" | "alignedtable" => Ok(OutputFormat::AlignedTable),
            other => Err(domain(format!(
                "unknown output format '{other}' (csv|table)"
            ))),
        }
    }
}

/// Parameters of one convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub example: ExampleId,
    pub alphas: [f64; 2],
    pub kappa: f64,
    pub gamma_rule: GammaRule,
    pub n_list: Vec<usize>,
    /// Spatial partitions per dimension.
    pub m: usize,
    pub source_rule: SourceRule,
    pub eigen_source: EigenSource,
    pub t_final: f64,
    pub l: f64,
    /// Record wall-clock time per run; disable for byte-reproducible output.
    pub timing: bool,
    /// When set, a run at this `N` estimates the spatial-error floor.
    pub floor_reference_n: Option<usize>,
}

impl StudyConfig {
    /// Defaults matching the benchmark studies: `T = L = 1`, endpoint-average source
    /// rule, continuum eigenvalues in the source.
    pub fn new(
        example: ExampleId,
        alphas: [f64; 2],
        kappa: f64,
        gamma_rule: GammaRule,
        n_list: Vec<usize>,
        m: usize,
    ) -> Self {
        Self {
            example,
            alphas,
            kappa,
            gamma_rule,
            n_list,
            m,
            source_rule: SourceRule::EndpointAverage,
            eigen_source: EigenSource::Continuum,
            t_final: 1.0,
            l: 1.0,
            timing: true,
            floor_reference_n: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(domain("N list must not be empty"));
        }
        if self.n_list.iter().any(|&n| n < 2) {
            return Err(domain("every N must be at least 2"));
        }
        if self.n_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(domain("N list must be strictly increasing"));
        }
        if self.m < 2 {
            return Err(domain("M must be at least 2"));
        }
        KernelSpec::new(self.alphas.to_vec(), self.kappa)?;
        if self.kappa * self.t_final > MAX_KAPPA_T {
            return Err(domain(format!(
                "kappa * T = {} exceeds {MAX_KAPPA_T}",
                self.kappa * self.t_final
            )));
        }
        let gamma = self.gamma();
        if !gamma.is_finite() || gamma < 1.0 {
            return Err(domain(format!(
                "grading exponent must be >= 1, got {gamma}"
            )));
        }
        Ok(())
    }

    pub fn alpha_min(&self) -> f64 {
        self.alphas[0].min(self.alphas[1])
    }

    /// Resolved grading exponent.
    pub fn gamma(&self) -> f64 {
        self.gamma_rule.resolve(self.alpha_min())
    }

    pub fn grid(&self) -> Result<SpatialGrid> {
        SpatialGrid::new(self.example.spatial_dim(), self.m, self.l)
    }

    pub fn case(&self, grid: &SpatialGrid) -> Result<ManufacturedCase> {
        let case = ManufacturedCase::new(self.example, self.alphas, self.kappa, self.l)?;
        match self.eigen_source {
            EigenSource::Continuum => Ok(case),
            EigenSource::Discrete => case.with_discrete_eigenvalues(grid),
        }
    }

    /// `key=value` pairs echoed into report headers.
    pub fn metadata(&self) -> Vec<(String, String)> {
        let n_list = self
            .n_list
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(",");
        vec![
            ("example".into(), self.example.to_string()),
            (
                "alphas".into(),
                format!("{},{}", self.alphas[0], self.alphas[1]),
            ),
            ("kappa".into(), self.kappa.to_string()),
            ("gamma_rule".into(), self.gamma_rule.to_string()),
            ("gamma".into(), self.gamma().to_string()),
            ("N_list".into(), n_list),
            ("M".into(), self.m.to_string()),
            ("source_rule".into(), self.source_rule.to_string()),
            ("eigen_source".into(), self.eigen_source.to_string()),
            ("T".into(), self.t_final.to_string()),
            ("L".into(), self.l.to_string()),
        ]
    }
}

/// Discrete `L2` norm of `u - U` maximised over the time levels.
///
/// `numerical[n - 1]` holds `U^n` for `n = 1..=N`, in physical variables.
pub fn l2_error(
    numerical: &[Vec<f64>],
    case: &ManufacturedCase,
    mesh: &GradedMesh,
    grid: &SpatialGrid,
) -> Result<f64> {
    if numerical.len() != mesh.n_steps() {
        return Err(Error::LengthMismatch {
            what: "numerical time levels",
            expected: mesh.n_steps(),
            actual: numerical.len(),
        });
    }
    let weight = grid.cell_volume();
    let mut worst: f64 = 0.0;
    for (i, u) in numerical.iter().enumerate() {
        if u.len() != grid.interior_count() {
            return Err(Error::LengthMismatch {
                what: "numerical state vector",
                expected: grid.interior_count(),
                actual: u.len(),
            });
        }
        let exact = case.exact_vector(grid, mesh.t(i + 1));
        let sq: f64 = u.iter().zip(&exact).map(|(a, b)| (a - b) * (a - b)).sum();
        worst = worst.max((weight * sq).sqrt());
    }
    Ok(worst)
}

/// `rate[i] = log2(errors[i] / errors[i + 1])`.
pub fn convergence_rate(errors: &[f64]) -> Result<Vec<f64>> {
    if errors.len() < 2 {
        return Err(domain("need at least two errors to form a rate"));
    }
    if let Some(e) = errors.iter().find(|e| !e.is_finite() || **e <= 0.0) {
        return Err(domain(format!(
            "errors must be positive and finite, got {e}"
        )));
    }
    Ok(errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub error: f64,
    /// Absent on the first row.
    pub rate: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub config: StudyConfig,
    pub rows: Vec<ConvergenceRow>,
    /// Mesh hypothesis constants for each `N`, in `n_list` order.
    pub mesh_reports: Vec<(usize, MeshHypothesisReport)>,
    /// Ten times the error of the floor reference run, when requested.
    pub spatial_floor: Option<f64>,
    /// The smallest reported error is below the spatial floor.
    pub below_floor: bool,
    /// Set when a run failed; `rows` then holds the runs before the failure.
    pub failure: Option<String>,
}

impl ConvergenceReport {
    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.error).collect()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.rate).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.failure.is_none() && self.rows.len() == self.config.n_list.len()
    }

    fn header_lines(&self) -> Vec<String> {
        let mut lines: Vec<String> = self
            .config
            .metadata()
            .into_iter()
            .map(|(k, v)| format!("#{k}={v}"))
            .collect();
        for (n, rep) in &self.mesh_reports {
            lines.push(format!(
                "#mesh_N{n}=c_lower:{:.6e};C_step:{:.6e};C_ratio:{:.6e};C_increment:{:.6e};satisfied:{}",
                rep.c_gamma_lower,
                rep.c_gamma_31,
                rep.c_gamma_ratio,
                rep.c_gamma_311,
                rep.all_satisfied()
            ));
        }
        if let Some(floor) = self.spatial_floor {
            lines.push(format!("#spatial_floor={floor:.6e}"));
            lines.push(format!("#below_floor={}", self.below_floor));
        }
        lines
    }

    /// CSV with a `#key=value` header block and columns `N,error,rate,wall_ms`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for line in self.header_lines() {
            out.push_str(&line);
            out.push('\n');
        }
        out.push_str("N,error,rate,wall_ms\n");
        for row in &self.rows {
            let rate = row.rate.map(|r| format!("{r:.6}")).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{:.10e},{},{:.3}",
                row.n, row.error, rate, row.wall_ms
            );
        }
        if let Some(msg) = &self.failure {
            let _ = writeln!(out, "#error={}", msg.replace('\n', " "));
        }
        out
    }

    /// Plain-text table with `N`, error and rate columns.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "Example {}: kappa={}, alpha=({}, {}), gamma={} ({:.6}), M={}",
            self.config.example,
            self.config.kappa,
            self.config.alphas[0],
            self.config.alphas[1],
            self.config.gamma_rule,
            self.config.gamma(),
            self.config.m
        );
        let _ = writeln!(out, "{:>6}  {:>12}  {:>6}", "N", "E_CN", "rate");
        for row in &self.rows {
            let rate = row
                .rate
                .map(|r| format!("{r:.2}"))
                .unwrap_or_else(|| "*".into());
            let _ = writeln!(out, "{:>6}  {:>12.4e}  {:>6}", row.n, row.error, rate);
        }
        if let Some(floor) = self.spatial_floor {
            let _ = writeln!(
                out,
                "spatial floor {floor:.4e}{}",
                if self.below_floor { " (reached)" } else { "" }
            );
        }
        if let Some(msg) = &self.failure {
            let _ = writeln!(out, "error: {msg}");
        }
        out
    }

    pub fn write(&self, format: OutputFormat, mut sink: impl Write) -> io::Result<()> {
        match format {
            OutputFormat::Csv => sink.write_all(self.to_csv().as_bytes()),
            OutputFormat::AlignedTable => sink.write_all(self.to_table().as_bytes()),
        }
    }
}

/// Runs the scheme on the manufactured case for one `N` and returns the error.
pub fn solve_case(config: &StudyConfig, n: usize) -> Result<f64> {
    let grid = config.grid()?;
    let case = config.case(&grid)?;
    let mesh = GradedMesh::graded(n, config.gamma(), config.t_final)?;
    let spec = case.problem_spec(&grid, mesh, config.source_rule)?;
    let state = spec.run()?;
    let physical = state.to_physical(spec.mesh(), config.kappa);
    l2_error(&physical[1..], &case, spec.mesh(), &grid)
}

/// Runs a full convergence study. Runs for different `N` execute in parallel.
///
/// Invalid configurations are rejected; a failing run truncates the report at the
/// failure and records the message in [`ConvergenceReport::failure`].
pub fn run_study(config: &StudyConfig) -> Result<ConvergenceReport> {
    config.validate()?;
    let gamma = config.gamma();
    let mesh_reports = config
        .n_list
        .iter()
        .map(|&n| {
            Ok((
                n,
                GradedMesh::graded(n, gamma, config.t_final)?.validate_hypotheses(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let results: Vec<Result<(f64, f64)>> = config
        .n_list
        .par_iter()
        .map(|&n| {
            let start = Instant::now();
            let err = solve_case(config, n)?;
            let ms = if config.timing {
                start.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            };
            Ok((err, ms))
        })
        .collect();

    let mut rows = Vec::with_capacity(results.len());
    let mut failure = None;
    for (&n, res) in config.n_list.iter().zip(results) {
        match res {
            Ok((error, wall_ms)) => {
                let rate = rows
                    .last()
                    .map(|prev: &ConvergenceRow| (prev.error / error).log2());
                rows.push(ConvergenceRow {
                    n,
                    error,
                    rate,
                    wall_ms,
                });
            }
            Err(e) => {
                failure = Some(format!("N={n}: {e}"));
                break;
            }
        }
    }

    let spatial_floor = match config.floor_reference_n {
        Some(n_ref) if failure.is_none() => Some(10.0 * solve_case(config, n_ref)?),
        _ => None,
    };
    let below_floor = match (spatial_floor, rows.last()) {
        (Some(floor), Some(last)) => last.error < floor,
        _ => false,
    };

    Ok(ConvergenceReport {
        config: config.clone(),
        rows,
        mesh_reports,
        spatial_floor,
        below_floor,
        failure,
    })
}

/// Initial data for a stability run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialData {
    /// The sine profile of the example.
    #[default]
    Profile,
    Zero,
}

impl FromStr for InitialData {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "profile" => Ok(InitialData::Profile),
            "zero" => Ok(InitialData::Zero),
            other => Err(domain(format!(
                "unknown initial data '{other}' (profile|zero)"
            ))),
        }
    }
}

/// Homogeneous (`f = 0`) run used to check the discrete decay and energy properties.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityConfig {
    pub example: ExampleId,
    pub alphas: [f64; 2],
    pub kappa: f64,
    pub gamma_rule: GammaRule,
    pub steps: usize,
    pub m: usize,
    pub initial: InitialData,
    pub t_final: f64,
    pub l: f64,
}

impl StabilityConfig {
    pub fn new(
        example: ExampleId,
        alphas: [f64; 2],
        kappa: f64,
        gamma_rule: GammaRule,
        steps: usize,
        m: usize,
    ) -> Self {
        Self {
            example,
            alphas,
            kappa,
            gamma_rule,
            steps,
            m,
            initial: InitialData::Profile,
            t_final: 1.0,
            l: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub config: StabilityConfig,
    pub times: Vec<f64>,
    /// `|V^n|` for `n = 0..=N`.
    pub norms: Vec<f64>,
    /// `E^n` for `n = 0..=N`.
    pub energies: Vec<f64>,
    /// `|V^n| <= |V^0|` at every step, up to rounding. Stepwise decay is not expected:
    /// the memory term can make the norm oscillate below its initial value.
    pub norm_bounded: bool,
    /// `E^n <= E^0 (1 + 1e-12)` at every step.
    pub energy_bounded: bool,
    /// `max_n |E^n - E^0|`.
    pub max_energy_deviation: f64,
}

impl StabilityReport {
    pub fn to_csv(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let _ = writeln!(out, "#example={}", c.example);
        let _ = writeln!(out, "#alphas={},{}", c.alphas[0], c.alphas[1]);
        let _ = writeln!(out, "#kappa={}", c.kappa);
        let _ = writeln!(out, "#gamma_rule={}", c.gamma_rule);
        let _ = writeln!(out, "#steps={}", c.steps);
        let _ = writeln!(out, "#M={}", c.m);
        let _ = writeln!(out, "#norm_bounded={}", self.norm_bounded);
        let _ = writeln!(out, "#energy_bounded={}", self.energy_bounded);
        let _ = writeln!(
            out,
            "#max_energy_deviation={:.6e}",
            self.max_energy_deviation
        );
        out.push_str("n,t,norm,energy\n");
        for (n, ((t, v), e)) in self
            .times
            .iter()
            .zip(&self.norms)
            .zip(&self.energies)
            .enumerate()
        {
            let _ = writeln!(out, "{n},{t:.10e},{v:.10e},{e:.10e}");
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>6}  {:>12}  {:>14}  {:>14}",
            "n", "t", "|V^n|", "E^n"
        );
        for (n, ((t, v), e)) in self
            .times
            .iter()
            .zip(&self.norms)
            .zip(&self.energies)
            .enumerate()
        {
            let _ = writeln!(out, "{n:>6}  {t:>12.6}  {v:>14.6e}  {e:>14.6e}");
        }
        let _ = writeln!(
            out,
            "norm bounded: {}  energy bounded: {}  max |E^n - E^0|: {:.3e}",
            pass(self.norm_bounded),
            pass(self.energy_bounded),
            self.max_energy_deviation
        );
        out
    }
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

/// Decay flags computed from a norm and energy history.
pub fn stability_flags(norms: &[f64], energies: &[f64]) -> (bool, bool, f64) {
    const REL: f64 = 1e-12;
    let n0 = norms[0];
    let norm_bounded = norms
        .iter()
        .all(|&v| v <= n0 * (1.0 + REL) + f64::MIN_POSITIVE);
    let e0 = energies[0];
    let energy_bounded = energies
        .iter()
        .all(|&e| e <= e0 + REL * e0.abs() + f64::MIN_POSITIVE);
    let max_dev = energies.iter().fold(0.0f64, |m, &e| m.max((e - e0).abs()));
    (norm_bounded, energy_bounded, max_dev)
}

pub fn run_stability_experiment(config: &StabilityConfig) -> Result<StabilityReport> {
    if config.steps < 1 {
        return Err(domain("need at least one time step"));
    }
    let grid = SpatialGrid::new(config.example.spatial_dim(), config.m, config.l)?;
    let case = ManufacturedCase::new(config.example, config.alphas, config.kappa, config.l)?;
    let kernel = case.kernel().clone();
    let gamma = config.gamma_rule.resolve(kernel.alpha_min());
    let mesh = GradedMesh::graded(config.steps, gamma, config.t_final)?;
    let u0 = match config.initial {
        InitialData::Profile => grid.sample(|x| case.profile(x)),
        InitialData::Zero => vec![0.0; grid.interior_count()],
    };
    let bundle = case.operator_bundle(&grid)?;
    let spec = ProblemSpec::homogeneous(kernel, bundle, mesh, u0)?;
    let state = spec.run()?;
    let norms: Vec<f64> = (0..=state.n()).map(|n| state.norm(n)).collect();
    let energies = state.energy_sequence(config.kappa);
    let (norm_bounded, energy_bounded, max_energy_deviation) = stability_flags(&norms, &energies);
    Ok(StabilityReport {
        config: config.clone(),
        times: spec.mesh().times().to_vec(),
        norms,
        energies,
        norm_bounded,
        energy_bounded,
        max_energy_deviation,
    })
}
