//! `irg`: batch command line for sampling, analysing and sweeping
//! inhomogeneous random graphs.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 guard refusal.
//! Errors go to stderr prefixed with `irg-error:`.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use irg_core::bounds::{
    chernoff_rate, cut_bound_large_k, cut_bound_small_k, exact_connectivity_finite,
    gilbert_connectivity_exact, isolated_expectation_lower_bound, min_component_fraction, BoundInputs,
};
use irg_core::experiment::{
    counterexample_experiment, run_plan, window_experiment, write_records_csv, ExperimentPlan,
};
use irg_core::graph::{connected_components, isolated_in_region};
use irg_core::io::{read_edge_list, write_edge_list};
use irg_core::partition::{build_partition, build_partition_graph, irreducibility_probe};
use irg_core::svg::sweep_chart;
use irg_core::{IrgError, KernelSpec, Point, SampleMode, SpaceSpec};

/// Pair draws the naive sampler may make before `sample` refuses.
const NAIVE_PAIR_LIMIT: f64 = 5e10;

#[derive(Parser)]
#[command(name = "irg", version, about = "Inhomogeneous random graphs at intermediate density")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Naive,
    Accelerated,
    Banded,
}

impl From<Mode> for SampleMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Naive => SampleMode::Naive,
            Mode::Accelerated => SampleMode::Accelerated,
            Mode::Banded => SampleMode::Banded,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Formula {
    SmallK,
    LargeK,
    Delta,
    IsolatedLb,
    Rate,
}

#[derive(Subcommand)]
enum Command {
    /// Sample G(n, K) and write it in edge-list format.
    Sample {
        /// interval | torus | finite:w1,w2,... | JSON (default: the kernel's natural space)
        #[arg(long)]
        space: Option<String>,
        /// Kernel shorthand (e.g. constant:c=2) or JSON.
        #[arg(long)]
        kernel: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// Print the component summary of an edge-list file as JSON.
    Analyze {
        file: PathBuf,
        /// Region for the isolated count, e.g. `x<0.1`, `x>=0.5`, `atom=0`.
        #[arg(long)]
        region: Option<String>,
    },
    /// lambda*, sup lambda2 and the L2 verdict of a kernel.
    KernelInfo {
        #[arg(long)]
        kernel: String,
        /// Also report a quadrature estimate on a grid of this many cells.
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        space: Option<String>,
    },
    /// Evaluate one analytic bound; prints {formula, inputs, value}.
    Bounds {
        #[arg(long, value_enum)]
        formula: Formula,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        lambda_star: Option<f64>,
        #[arg(long)]
        lambda2: Option<f64>,
        /// Take lambda* and sup lambda2 from this kernel.
        #[arg(long)]
        kernel: Option<String>,
        #[arg(long)]
        space: Option<String>,
        /// Region threshold t in {lambda < t} for isolated-lb.
        #[arg(long, default_value_t = 1.0)]
        threshold: f64,
        /// Argument of the rate function.
        #[arg(long)]
        t: Option<f64>,
    },
    /// Dyadic partition graph of a kernel, optionally with the irreducibility probe.
    Partition {
        #[arg(long)]
        kernel: String,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        space: Option<String>,
        /// Run the probe over levels 1..=m instead of building one graph.
        #[arg(long)]
        probe: bool,
    },
    /// Run an experiment plan; write per-replicate CSV and print cell summaries.
    Sweep {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        reps: Option<usize>,
        /// Comma-separated graph sizes.
        #[arg(long, value_delimiter = ',')]
        n_grid: Option<Vec<usize>>,
        /// Comma-separated kernel scales.
        #[arg(long, value_delimiter = ',')]
        scale_grid: Option<Vec<f64>>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        #[arg(long)]
        budget: Option<f64>,
    },
    /// Isolation frequency for the diagonal-band kernel with lambda* = c/2.
    Counterexample {
        #[arg(long)]
        c: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        reps: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Connectivity of G(n, ln(n)/n) against the exact value.
    Window {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        reps: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Exact connection probabilities for small graphs.
    Oracle {
        #[command(subcommand)]
        which: Oracle,
    },
}

#[derive(Subcommand)]
enum Oracle {
    /// Pr[G(n, p) connected].
    Gilbert {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
    },
    /// Pr[G(n, K) connected] on a finite space, by enumeration.
    Finite {
        #[arg(long)]
        space: String,
        #[arg(long)]
        kernel: String,
        #[arg(long)]
        n: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            eprint!("irg-error: usage: {e}");
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("irg-error: {e}");
            ExitCode::from(if matches!(e, IrgError::Guard(_)) { 2 } else { 1 })
        }
    }
}

type Res<T> = std::result::Result<T, IrgError>;

fn usage(msg: impl Into<String>) -> IrgError {
    IrgError::InvalidInput(msg.into())
}

fn parse_kernel(s: &str) -> Res<KernelSpec> {
    s.parse()
}

/// The given space, or the kernel's natural one.
fn parse_space(s: Option<&str>, kernel: &KernelSpec) -> Res<SpaceSpec> {
    let space = match s {
        Some(s) => s.parse()?,
        None => kernel.default_space(),
    };
    kernel.check_space(&space)?;
    Ok(space)
}

/// Uses the given seed or draws one from the clock; either way reports it.
fn effective_seed(seed: Option<u64>) -> u64 {
    let seed = seed.unwrap_or_else(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0)
    });
    eprintln!("seed: {seed}");
    seed
}

fn print_json(v: &impl Serialize) -> Res<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

/// Parses `x<t`, `x<=t`, `x>t`, `x>=t` or `atom=i`.
fn parse_region(s: &str) -> Res<Box<dyn Fn(Point) -> bool>> {
    let s = s.replace(' ', "");
    if let Some(i) = s.strip_prefix("atom=") {
        let i: usize = i.parse().map_err(|_| usage(format!("bad atom index in region '{s}'")))?;
        return Ok(Box::new(move |p| p.atom() == Some(i)));
    }
    let rest = s
        .strip_prefix('x')
        .ok_or_else(|| usage(format!("region '{s}' must look like x<t or atom=i")))?;
    let (op, value) = ["<=", ">=", "<", ">"]
        .iter()
        .find_map(|op| rest.strip_prefix(op).map(|v| (*op, v)))
        .ok_or_else(|| usage(format!("region '{s}' has no comparison")))?;
    let t: f64 = value.parse().map_err(|_| usage(format!("bad threshold in region '{s}'")))?;
    let cmp: fn(f64, f64) -> bool = match op {
        "<=" => |x, t| x <= t,
        ">=" => |x, t| x >= t,
        "<" => |x, t| x < t,
        _ => |x, t| x > t,
    };
    Ok(Box::new(move |p| p.coord().is_some_and(|x| cmp(x, t))))
}

fn run(command: Command) -> Res<()> {
    match command {
        Command::Sample { space, kernel, n, seed, out, mode } => {
            let kernel = parse_kernel(&kernel)?;
            let space = parse_space(space.as_deref(), &kernel)?;
            let mode = mode.map(SampleMode::from).unwrap_or_else(|| SampleMode::fastest_for(&kernel));
            let pairs = n as f64 * (n as f64 - 1.0) / 2.0;
            if mode == SampleMode::Naive && pairs > NAIVE_PAIR_LIMIT {
                return Err(IrgError::Guard(format!(
                    "naive sampling of n = {n} needs {pairs:.3e} pair draws, limit is {NAIVE_PAIR_LIMIT:.0e}"
                )));
            }
            let seed = effective_seed(seed);
            let g = irg_core::sample_graph(&space, &kernel, n, seed, mode)?;
            let mut w = BufWriter::new(File::create(&out)?);
            write_edge_list(&g, &mut w)?;
            w.flush()?;
            eprintln!("wrote {} vertices, {} edges to {}", g.n, g.edges.len(), out.display());
            Ok(())
        }
        Command::Analyze { file, region } => {
            let g = read_edge_list(BufReader::new(File::open(&file)?))?;
            eprintln!("seed: {}", g.seed);
            let mut summary = connected_components(&g)?;
            if let Some(r) = region {
                let pred = parse_region(&r)?;
                summary.isolated_in_region = Some(isolated_in_region(&g, pred));
            }
            print_json(&summary)
        }
        Command::KernelInfo { kernel, grid, space } => {
            let kernel = parse_kernel(&kernel)?;
            let space = parse_space(space.as_deref(), &kernel)?;
            let f = kernel.isolation_parameter(&space, grid.unwrap_or(1024))?;
            let l2 = kernel.is_l2(&space)?;
            let mut report = json!({
                "kernel": kernel,
                "space": space,
                "lambda_star": f.lambda_star,
                "lambda2_sup": serde_json::to_value(&f)?["lambda2_sup"],
                "method": f.method,
                "l2": l2.is_l2,
                "l2_squared_norm": l2.squared_norm,
                "l2_diagnostic": l2.diagnostic,
            });
            if let Some(g) = grid.filter(|_| space.is_continuous()) {
                report["grid_estimate"] = serde_json::to_value(kernel.isolation_parameter_grid(&space, g)?)?;
            }
            print_json(&report)
        }
        Command::Bounds { formula, n, k, lambda_star, lambda2, kernel, space, threshold, t } => {
            let need_n = || n.ok_or_else(|| usage("--n is required for this formula"));
            let functionals = || -> Res<(f64, f64)> {
                if let Some(kernel) = &kernel {
                    let kernel = parse_kernel(kernel)?;
                    let space = parse_space(space.as_deref(), &kernel)?;
                    let f = kernel.isolation_parameter(&space, 1024)?;
                    Ok((lambda_star.unwrap_or(f.lambda_star), lambda2.unwrap_or(f.lambda2_sup)))
                } else {
                    match (lambda_star, lambda2) {
                        (Some(a), Some(b)) => Ok((a, b)),
                        _ => Err(usage("give --lambda-star and --lambda2, or --kernel")),
                    }
                }
            };
            let (name, inputs, value): (&str, Value, f64) = match formula {
                Formula::SmallK | Formula::LargeK => {
                    let (ls, l2) = functionals()?;
                    let k = k.ok_or_else(|| usage("--k is required for this formula"))?;
                    let inputs = BoundInputs::new(need_n()?, k, ls, l2)?;
                    let (name, value) = match formula {
                        Formula::SmallK => ("small-k", cut_bound_small_k(&inputs)),
                        _ => ("large-k", cut_bound_large_k(&inputs)?),
                    };
                    (name, serde_json::to_value(inputs)?, value)
                }
                Formula::Delta => {
                    let (ls, l2) = functionals()?;
                    ("delta", json!({"lambda_star": ls, "lambda2_sup": l2}), min_component_fraction(ls, l2)?)
                }
                Formula::IsolatedLb => {
                    let kernel = parse_kernel(
                        kernel.as_deref().ok_or_else(|| usage("--kernel is required for isolated-lb"))?,
                    )?;
                    let space = parse_space(space.as_deref(), &kernel)?;
                    let n = need_n()?;
                    let b = isolated_expectation_lower_bound(&kernel, &space, n, threshold)?;
                    if let Some(d) = &b.diagnostic {
                        eprintln!("note: {d}");
                    }
                    let inputs = json!({
                        "kernel": kernel, "space": space, "n": n,
                        "threshold": threshold, "region_measure": b.region_measure,
                    });
                    ("isolated-lb", inputs, b.value)
                }
                Formula::Rate => {
                    let t = t.ok_or_else(|| usage("--t is required for rate"))?;
                    ("rate", json!({ "t": t }), chernoff_rate(t)?)
                }
            };
            print_json(&json!({ "formula": name, "inputs": inputs, "value": value }))
        }
        Command::Partition { kernel, m, space, probe } => {
            let kernel = parse_kernel(&kernel)?;
            let space = parse_space(space.as_deref(), &kernel)?;
            if probe {
                print_json(&irreducibility_probe(&kernel, &space, m)?)
            } else {
                let partition = build_partition(&space, m)?;
                print_json(&build_partition_graph(&kernel, &partition)?)
            }
        }
        Command::Sweep { plan, out, svg, workers, seed, reps, n_grid, scale_grid, mode, budget } => {
            let mut plan: ExperimentPlan = serde_json::from_reader(BufReader::new(File::open(&plan)?))?;
            if let Some(s) = seed {
                plan.master_seed = s;
            }
            if let Some(r) = reps {
                plan.replicates = r;
            }
            if let Some(g) = n_grid {
                plan.n_grid = g;
            }
            if let Some(g) = scale_grid {
                plan.scale_grid = g;
            }
            if let Some(m) = mode {
                plan.mode = Some(m.into());
            }
            if let Some(b) = budget {
                plan.budget = b;
            }
            eprintln!("seed: {}", plan.master_seed);
            let outcome = run_plan(&plan, workers)?;
            write_records_csv(&outcome.records, BufWriter::new(File::create(&out)?))?;
            if let Some(path) = svg {
                std::fs::write(path, sweep_chart(&outcome.cells))?;
            }
            print_json(&json!({ "master_seed": outcome.master_seed, "cells": outcome.cells }))
        }
        Command::Counterexample { c, n, reps, seed } => {
            let seed = effective_seed(seed);
            print_json(&counterexample_experiment(c, n, reps, seed)?)
        }
        Command::Window { n, reps, seed } => {
            let seed = effective_seed(seed);
            print_json(&window_experiment(n, reps, seed)?)
        }
        Command::Oracle { which } => {
            let value = match which {
                Oracle::Gilbert { n, p } => gilbert_connectivity_exact(n, p)?,
                Oracle::Finite { space, kernel, n } => {
                    let kernel = parse_kernel(&kernel)?;
                    let space: SpaceSpec = space.parse()?;
                    exact_connectivity_finite(&space, &kernel, n)?
                }
            };
            println!("{value}");
            Ok(())
        }
    }
}
