//! `cnpi`: convergence studies, stability runs and mesh checks from the command line.
//!
//! Exit codes: 0 on success, 1 on a parameter error, 2 when a solve fails.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cnpi_core::{
    run_stability_experiment, run_study, EigenSource, Error, ExampleId, GammaRule, GradedMesh,
    InitialData, SourceRule, StabilityConfig, StudyConfig,
};

#[derive(Debug, Parser)]
#[command(
    name = "cnpi",
    version,
    about = "CN-PI solver for tempered multi-term Volterra equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one manufactured case at a single N and report its error.
    Solve {
        #[command(flatten)]
        common: ProblemArgs,
        #[arg(long = "N")]
        n: usize,
        #[command(flatten)]
        study: StudyArgs,
    },
    /// Run a convergence study over a ladder of N values.
    Study {
        #[command(flatten)]
        common: ProblemArgs,
        #[arg(long = "N-list", value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        /// Estimate the spatial-error floor from one extra run at this N.
        #[arg(long = "floor-N")]
        floor_n: Option<usize>,
        #[command(flatten)]
        study: StudyArgs,
    },
    /// Homogeneous run reporting |V^n| and the energy E^n per step.
    Stability {
        #[command(flatten)]
        common: ProblemArgs,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value = "profile")]
        initial: InitialData,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Build t_n = (n k)^gamma and report the grading constants.
    ValidateMesh {
        #[arg(long = "N")]
        n: usize,
        #[arg(long)]
        gamma: f64,
        #[arg(long = "T", default_value_t = 1.0)]
        t_final: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Args)]
struct ProblemArgs {
    /// 1 (1D, two memory terms) or 2 (2D, directional memory operators).
    #[arg(long)]
    example: ExampleId,
    /// Kernel exponents a1,a2 in (0, 1).
    #[arg(long, value_parser = parse_alphas)]
    alphas: [f64; 2],
    #[arg(long)]
    kappa: f64,
    /// uniform, optimal, optimal+1 or an explicit exponent >= 1.
    #[arg(long, default_value = "optimal")]
    gamma: GammaRule,
    /// Spatial partitions per dimension.
    #[arg(long = "M")]
    m: usize,
}

#[derive(Debug, Args)]
struct StudyArgs {
    #[arg(long, default_value = "average")]
    source: SourceRule,
    /// Eigenvalues used in the manufactured source.
    #[arg(long, default_value = "continuum")]
    eigen: EigenSource,
    /// Report wall_ms as 0 so that repeated runs produce identical output.
    #[arg(long)]
    no_timing: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Write the CSV report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `table` prints the aligned table to standard output.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Table,
}

fn parse_alphas(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("expected two comma-separated exponents, got '{s}'"));
    }
    let mut out = [0.0; 2];
    for (slot, p) in out.iter_mut().zip(parts) {
        *slot = p.parse().map_err(|_| format!("invalid exponent '{p}'"))?;
    }
    Ok(out)
}

/// Failure categories mapped onto exit codes.
enum Failure {
    Parameter(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_parameter_error() {
            Failure::Parameter(e.to_string())
        } else {
            Failure::Solver(e.to_string())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Solver(format!("i/o error: {e}"))
    }
}

fn emit(output: &OutputArgs, csv: &str, table: &str) -> Result<(), Failure> {
    if let Some(path) = &output.out {
        fs::write(path, csv)?;
    }
    let mut stdout = io::stdout().lock();
    match output.format {
        Format::Table => stdout.write_all(table.as_bytes())?,
        Format::Csv if output.out.is_none() => stdout.write_all(csv.as_bytes())?,
        Format::Csv => {}
    }
    Ok(())
}

fn study_config(common: &ProblemArgs, n_list: Vec<usize>, study: &StudyArgs) -> StudyConfig {
    let mut config = StudyConfig::new(
        common.example,
        common.alphas,
        common.kappa,
        common.gamma,
        n_list,
        common.m,
    );
    config.source_rule = study.source;
    config.eigen_source = study.eigen;
    config.timing = !study.no_timing;
    config
}

fn run_convergence(config: StudyConfig, output: &OutputArgs) -> Result<(), Failure> {
    let report = run_study(&config)?;
    emit(output, &report.to_csv(), &report.to_table())?;
    match report.failure {
        Some(msg) => Err(Failure::Solver(msg)),
        None => Ok(()),
    }
}

fn validate_mesh(n: usize, gamma: f64, t_final: f64, output: &OutputArgs) -> Result<(), Failure> {
    let mesh = GradedMesh::graded(n, gamma, t_final)?;
    let r = mesh.validate_hypotheses();
    let mut csv = String::new();
    let _ = writeln!(csv, "#N={n}\n#gamma={gamma}\n#T={t_final}");
    let _ = writeln!(
        csv,
        "#c_lower={:.6e}\n#C_step={:.6e}\n#C_ratio={:.6e}\n#C_increment={:.6e}",
        r.c_gamma_lower, r.c_gamma_31, r.c_gamma_ratio, r.c_gamma_311
    );
    let _ = writeln!(
        csv,
        "#step_bound={}\n#start_and_ratio={}\n#increment={}\n#satisfied={}",
        r.satisfied_step_bound,
        r.satisfied_start_and_ratio,
        r.satisfied_increment,
        r.all_satisfied()
    );
    csv.push_str("n,t,k\n");
    for i in 0..=n {
        let k = if i == 0 {
            String::new()
        } else {
            format!("{:.16e}", mesh.step(i))
        };
        let _ = writeln!(csv, "{i},{:.16e},{k}", mesh.t(i));
    }
    let mut table = String::new();
    let _ = writeln!(table, "mesh N={n} gamma={gamma} T={t_final}");
    let rows = [
        (
            "t_1 >= c k^gamma",
            r.c_gamma_lower,
            r.satisfied_start_and_ratio,
        ),
        (
            "k_n <= C k min(1, t_n^(1-1/gamma))",
            r.c_gamma_31,
            r.satisfied_step_bound,
        ),
        (
            "t_n <= C t_(n-1)",
            r.c_gamma_ratio,
            r.satisfied_start_and_ratio,
        ),
        (
            "k_(n+1) - k_n <= C k^2 min(1, t_n^(1-2/gamma))",
            r.c_gamma_311,
            r.satisfied_increment,
        ),
    ];
    for (label, value, ok) in rows {
        let _ = writeln!(table, "  {label:<48} {value:>12.6e}  {}", mark(ok));
    }
    emit(output, &csv, &table)?;
    if r.all_satisfied() {
        Ok(())
    } else {
        Err(Failure::Parameter(
            "mesh violates the grading hypotheses".into(),
        ))
    }
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "violated"
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve { common, n, study } => {
            run_convergence(study_config(&common, vec![n], &study), &study.output)
        }
        Command::Study {
            common,
            n_list,
            floor_n,
            study,
        } => {
            let mut config = study_config(&common, n_list, &study);
            config.floor_reference_n = floor_n;
            run_convergence(config, &study.output)
        }
        Command::Stability {
            common,
            steps,
            initial,
            output,
        } => {
            let mut config = StabilityConfig::new(
                common.example,
                common.alphas,
                common.kappa,
                common.gamma,
                steps,
                common.m,
            );
            config.initial = initial;
            let report = run_stability_experiment(&config)?;
            emit(&output, &report.to_csv(), &report.to_table())
        }
        Command::ValidateMesh {
            n,
            gamma,
            t_final,
            output,
        } => validate_mesh(n, gamma, t_final, &output),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Parameter(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver failure: {msg}");
            ExitCode::from(2)
        }
    }
}
