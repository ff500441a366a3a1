//! Runs the five benchmark convergence studies and prints their tables.
//!
//! ```text
//! cargo run --release -p cnpi-core --example benchmarks [continuum|discrete] [1|2|3|4|5] [average|midpoint]
//! ```

use cnpi_core::{run_study, EigenSource, ExampleId, GammaRule, SourceRule, StudyConfig};

#[allow(clippy::too_many_arguments)]
fn column(
    example: ExampleId,
    alphas: [f64; 2],
    kappa: f64,
    gamma: GammaRule,
    n_list: &[usize],
    m: usize,
    eigen: EigenSource,
    rule: SourceRule,
) {
    let mut config = StudyConfig::new(example, alphas, kappa, gamma, n_list.to_vec(), m);
    config.eigen_source = eigen;
    config.source_rule = rule;
    match run_study(&config) {
        Ok(report) => println!("{}", report.to_table()),
        Err(e) => eprintln!("study failed: {e}"),
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let eigen = args
        .get(1)
        .map(|s| s.parse().expect("continuum|discrete"))
        .unwrap_or_default();
    let which: Vec<u32> = match args.get(2) {
        Some(s) => vec![s.parse().expect("study number")],
        None => vec![1, 2, 3, 4, 5],
    };
    let rule: SourceRule = args
        .get(3)
        .map(|s| s.parse().expect("average|midpoint"))
        .unwrap_or_default();
    let ladder_1d = [16, 32, 64, 128, 256];
    let ladder_8 = [8, 16, 32, 64, 128];
    for table in which {
        println!("=== study {table} ===");
        match table {
            1 => {
                for g in [
                    GammaRule::Uniform,
                    GammaRule::Optimal,
                    GammaRule::OptimalPlusOne,
                ] {
                    column(
                        ExampleId::Example1,
                        [0.2, 0.8],
                        1.0,
                        g,
                        &ladder_1d,
                        256,
                        eigen,
                        rule,
                    );
                }
            }
            2 => {
                for a in [[0.15, 0.85], [0.10, 0.20], [0.80, 0.90]] {
                    column(
                        ExampleId::Example1,
                        a,
                        2.0,
                        GammaRule::Optimal,
                        &ladder_8,
                        512,
                        eigen,
                        rule,
                    );
                }
            }
            3 => {
                for kappa in [0.1, 1.0, 10.0] {
                    column(
                        ExampleId::Example1,
                        [0.5, 0.5],
                        kappa,
                        GammaRule::Optimal,
                        &ladder_8,
                        256,
                        eigen,
                        rule,
                    );
                }
            }
            4 => {
                for a in [[0.10, 0.90], [0.15, 0.20], [0.80, 0.75]] {
                    column(
                        ExampleId::Example2,
                        a,
                        2.0,
                        GammaRule::Optimal,
                        &[12, 24, 48, 96],
                        70,
                        eigen,
                        rule,
                    );
                }
            }
            5 => {
                for kappa in [0.1, 1.0, 10.0] {
                    column(
                        ExampleId::Example2,
                        [0.4, 0.4],
                        kappa,
                        GammaRule::Optimal,
                        &[20, 40, 80, 160],
                        80,
                        eigen,
                        rule,
                    );
                }
            }
            other => eprintln!("no study {other}"),
        }
    }
}
