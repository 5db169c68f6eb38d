//! Seeded Monte Carlo experiments: parameter sweeps over the kernel scale
//! and graph size, and the dedicated threshold-window, counterexample and
//! component-size-gap studies.
//!
//! Replicate `rep` of sweep cell `cell` is sampled from
//! [`derive_seed`]`(master_seed, cell, rep)`, so every record can be
//! re-derived on its own and results never depend on scheduling.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{gilbert_connectivity_exact, min_component_fraction, GILBERT_MAX_N};
use crate::error::{invalid, precondition, IrgError, Result};
use crate::graph::{connected_components, ComponentSummary};
use crate::kernel::KernelSpec;
use crate::rng::derive_seed;
use crate::sampler::{density_scale, sample_graph, SampleMode};
use crate::space::{Point, SpaceSpec};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Default ceiling on `sum n^2 * replicates` over a plan.
pub const DEFAULT_BUDGET: f64 = 1e11;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Connected,
    Isolated,
    Spectrum,
    MinComponent,
}

fn all_statistics() -> Vec<Statistic> {
    vec![Statistic::Connected, Statistic::Isolated, Statistic::Spectrum, Statistic::MinComponent]
}

fn default_budget() -> f64 {
    DEFAULT_BUDGET
}

/// A sweep over `scale_grid x n_grid`. Cell `(c, n)` samples
/// `G(n, c * base_kernel)`, so `lambda*` scales linearly with `c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub space: SpaceSpec,
    pub base_kernel: KernelSpec,
    pub scale_grid: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub master_seed: u64,
    #[serde(default = "all_statistics")]
    pub statistics: Vec<Statistic>,
    /// Sampling mode; the fastest exact mode for the kernel when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<SampleMode>,
    #[serde(default = "default_budget")]
    pub budget: f64,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return invalid("plan needs at least one replicate");
        }
        if self.scale_grid.is_empty() || self.n_grid.is_empty() {
            return invalid("plan grids must be non-empty");
        }
        if let Some(c) = self.scale_grid.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return invalid(format!("scale {c} must be finite and nonnegative"));
        }
        if self.n_grid.contains(&0) {
            return invalid("graph sizes must be at least 1");
        }
        self.base_kernel.check_space(&self.space)
    }

    /// `sum n^2 * replicates` over all cells.
    pub fn cost_estimate(&self) -> f64 {
        let per_scale: f64 = self.n_grid.iter().map(|n| (*n as f64).powi(2)).sum();
        per_scale * self.scale_grid.len() as f64 * self.replicates as f64
    }

    pub fn cell_count(&self) -> usize {
        self.scale_grid.len() * self.n_grid.len()
    }

    /// `(c, n)` of cell `cell`; cells run over `n` fastest.
    pub fn cell(&self, cell: usize) -> (f64, usize) {
        (self.scale_grid[cell / self.n_grid.len()], self.n_grid[cell % self.n_grid.len()])
    }

    pub fn kernel_at(&self, c: f64) -> Result<KernelSpec> {
        self.base_kernel.clone().scaled(c)
    }

    fn sample_mode(&self) -> SampleMode {
        self.mode.unwrap_or_else(|| SampleMode::fastest_for(&self.base_kernel))
    }

    fn wants(&self, s: Statistic) -> bool {
        self.statistics.contains(&s)
    }
}

/// One replicate of one sweep cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub c: f64,
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    pub connected: bool,
    pub isolated: usize,
    pub min_comp: usize,
    pub max_comp: usize,
}

/// Aggregates of one `(c, n)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub c: f64,
    pub n: usize,
    pub replicates: usize,
    pub connected: usize,
    pub p_connected: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_isolated: Option<f64>,
    /// Smallest component size -> number of replicates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_component_histogram: Option<BTreeMap<usize, usize>>,
    /// `k -> sum over replicates of N_k`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum_totals: Option<BTreeMap<usize, u64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub master_seed: u64,
    pub records: Vec<SweepRecord>,
    pub cells: Vec<CellSummary>,
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Standard error of a binomial proportion estimate.
pub fn proportion_se(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Samples one replicate and reduces it to a record.
pub fn run_replicate(
    space: &SpaceSpec,
    kernel: &KernelSpec,
    c: f64,
    n: usize,
    rep: usize,
    seed: u64,
    mode: SampleMode,
) -> Result<(SweepRecord, ComponentSummary)> {
    let g = sample_graph(space, kernel, n, seed, mode)?;
    let s = connected_components(&g)?;
    let record = SweepRecord {
        c,
        n,
        rep,
        seed,
        connected: s.is_connected,
        isolated: s.isolated_total,
        min_comp: s.min_component_size(),
        max_comp: s.max_component_size(),
    };
    Ok((record, s))
}

/// Re-derives record `rep` of cell `cell` from the plan alone.
pub fn rederive_record(plan: &ExperimentPlan, cell: usize, rep: usize) -> Result<SweepRecord> {
    let (c, n) = plan.cell(cell);
    let seed = derive_seed(plan.master_seed, cell as u64, rep as u64);
    Ok(run_replicate(&plan.space, &plan.kernel_at(c)?, c, n, rep, seed, plan.sample_mode())?.0)
}

/// Runs every replicate of every cell on `workers` threads (0 = rayon
/// default). Output is ordered by `(cell, rep)` whatever the worker count.
pub fn run_plan(plan: &ExperimentPlan, workers: usize) -> Result<SweepOutcome> {
    plan.validate()?;
    let cost = plan.cost_estimate();
    if cost > plan.budget {
        return Err(IrgError::Guard(format!(
            "plan needs about {cost:.3e} pair evaluations (sum n^2 x replicates), budget is {:.3e}",
            plan.budget
        )));
    }
    let kernels = plan
        .scale_grid
        .iter()
        .map(|c| plan.kernel_at(*c))
        .collect::<Result<Vec<_>>>()?;
    let mode = plan.sample_mode();
    let reps = plan.replicates;
    let total = plan.cell_count() * reps;
    let work = || {
        (0..total)
            .into_par_iter()
            .map(|idx| {
                let (cell, rep) = (idx / reps, idx % reps);
                let (c, n) = plan.cell(cell);
                let kernel = &kernels[cell / plan.n_grid.len()];
                let seed = derive_seed(plan.master_seed, cell as u64, rep as u64);
                run_replicate(&plan.space, kernel, c, n, rep, seed, mode)
            })
            .collect::<Result<Vec<_>>>()
    };
    let results = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| IrgError::InvalidInput(format!("cannot start worker pool: {e}")))?
        .install(work)?;

    let cells = results
        .chunks(reps)
        .enumerate()
        .map(|(cell, chunk)| summarize_cell(plan, cell, chunk))
        .collect();
    let records = results.into_iter().map(|(r, _)| r).collect();
    Ok(SweepOutcome { master_seed: plan.master_seed, records, cells })
}

fn summarize_cell(plan: &ExperimentPlan, cell: usize, chunk: &[(SweepRecord, ComponentSummary)]) -> CellSummary {
    let (c, n) = plan.cell(cell);
    let trials = chunk.len();
    let connected = chunk.iter().filter(|(r, _)| r.connected).count();
    let p = connected as f64 / trials as f64;
    let (ci_low, ci_high) = wilson_interval(connected, trials, Z95);
    let mean_isolated = plan
        .wants(Statistic::Isolated)
        .then(|| chunk.iter().map(|(r, _)| r.isolated as f64).sum::<f64>() / trials as f64);
    let min_component_histogram = plan.wants(Statistic::MinComponent).then(|| {
        let mut h = BTreeMap::new();
        for (r, _) in chunk {
            *h.entry(r.min_comp).or_insert(0) += 1;
        }
        h
    });
    let spectrum_totals = plan.wants(Statistic::Spectrum).then(|| {
        let mut t = BTreeMap::new();
        for (_, s) in chunk {
            for (k, count) in &s.size_spectrum {
                *t.entry(*k).or_insert(0u64) += *count as u64;
            }
        }
        t
    });
    CellSummary {
        c,
        n,
        replicates: trials,
        connected,
        p_connected: p,
        std_error: proportion_se(p, trials),
        ci_low,
        ci_high,
        mean_isolated,
        min_component_histogram,
        spectrum_totals,
    }
}

pub const CSV_HEADER: &str = "c,n,rep,seed,connected,isolated,min_comp,max_comp";

/// Writes records as CSV under [`CSV_HEADER`].
pub fn write_records_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Report of [`counterexample_experiment`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub c: f64,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub lambda_star: f64,
    pub disconnected: usize,
    pub disconnected_freq: f64,
    /// Replicates where some `E_k` holds: `X_k < 1/n` and every other `X_i > 2/n`.
    pub event_count: usize,
    pub event_freq: f64,
    /// `(1 - 2/n)^(n-1)`.
    pub event_expected: f64,
    pub event_std_error: f64,
    /// Event replicates in which vertex `k` is isolated.
    pub implication_holds: usize,
    pub implication_rate: f64,
    pub mean_isolated: f64,
}

/// Samples `G(n, K)` for the diagonal-band kernel whose `lambda* = c/2`
/// exceeds 1 but whose `lambda2` is not square integrable, and tracks how
/// often a single vertex near 0 is cut off.
pub fn counterexample_experiment(c: f64, n: usize, replicates: usize, seed: u64) -> Result<CounterexampleReport> {
    if !(c / 2.0 > 1.0) {
        return precondition(format!("need lambda* = c/2 > 1, got c = {c}"));
    }
    if n < 100 {
        return precondition(format!("need n >= 100, got {n}"));
    }
    if replicates == 0 {
        return invalid("need at least one replicate");
    }
    let space = SpaceSpec::Interval;
    let kernel = KernelSpec::counterexample(c)?;
    let lambda_star = kernel.isolation_parameter(&space, 2)?.lambda_star;
    let (one, two) = (1.0 / n as f64, 2.0 / n as f64);
    struct Outcome {
        connected: bool,
        isolated: usize,
        event: Option<bool>,
    }
    let outcomes = (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let g = sample_graph(&space, &kernel, n, derive_seed(seed, 0, rep as u64), SampleMode::Banded)?;
            let s = connected_components(&g)?;
            let low: Vec<usize> = (0..n)
                .filter(|i| g.positions[*i].coord().is_some_and(|x| x <= two))
                .collect();
            let event = match low.as_slice() {
                [k] if g.positions[*k].coord().is_some_and(|x| x < one) => {
                    Some(g.degree_sequence()[*k] == 0)
                }
                _ => None,
            };
            Ok(Outcome { connected: s.is_connected, isolated: s.isolated_total, event })
        })
        .collect::<Result<Vec<_>>>()?;
    let disconnected = outcomes.iter().filter(|o| !o.connected).count();
    let event_count = outcomes.iter().filter(|o| o.event.is_some()).count();
    let implication_holds = outcomes.iter().filter(|o| o.event == Some(true)).count();
    let event_expected = (1.0 - two).powi(n as i32 - 1);
    let reps = replicates as f64;
    Ok(CounterexampleReport {
        c,
        n,
        replicates,
        seed,
        lambda_star,
        disconnected,
        disconnected_freq: disconnected as f64 / reps,
        event_count,
        event_freq: event_count as f64 / reps,
        event_expected,
        event_std_error: proportion_se(event_expected, replicates),
        implication_holds,
        implication_rate: if event_count == 0 { 1.0 } else { implication_holds as f64 / event_count as f64 },
        mean_isolated: outcomes.iter().map(|o| o.isolated as f64).sum::<f64>() / reps,
    })
}

/// Report of [`window_experiment`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub connected: usize,
    pub empirical: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `Pr[G(n, ln(n)/n) connected]` from the exact recursion.
    pub exact: f64,
    /// Asymptotic value `1/e`; reported, not asserted.
    pub limit: f64,
    pub exact_gap_to_limit: f64,
    pub isolated_mean: f64,
    pub isolated_variance: f64,
    /// `n (1 - p_n)^(n-1)`.
    pub isolated_expected: f64,
    /// Variance over mean; 1 for a Poisson law.
    pub isolated_dispersion: f64,
}

/// `K = 1`, so `lambda* = 1`: the graph is `G(n, ln(n)/n)` and sits in the
/// window where the connection probability tends to `1/e`.
pub fn window_experiment(n: usize, replicates: usize, seed: u64) -> Result<WindowReport> {
    if !(2..=GILBERT_MAX_N).contains(&n) {
        return invalid(format!("window experiment needs 2 <= n <= {GILBERT_MAX_N}, got {n}"));
    }
    if replicates == 0 {
        return invalid("need at least one replicate");
    }
    let space = SpaceSpec::Interval;
    let kernel = KernelSpec::constant(1.0)?;
    let p = density_scale(n).min(1.0);
    let exact = gilbert_connectivity_exact(n, p)?;
    let runs = (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let g = sample_graph(&space, &kernel, n, derive_seed(seed, 0, rep as u64), SampleMode::Accelerated)?;
            let s = connected_components(&g)?;
            Ok((s.is_connected, s.isolated_total as f64))
        })
        .collect::<Result<Vec<_>>>()?;
    let connected = runs.iter().filter(|r| r.0).count();
    let reps = replicates as f64;
    let empirical = connected as f64 / reps;
    let isolated_mean = runs.iter().map(|r| r.1).sum::<f64>() / reps;
    let isolated_variance = if replicates > 1 {
        runs.iter().map(|r| (r.1 - isolated_mean).powi(2)).sum::<f64>() / (reps - 1.0)
    } else {
        0.0
    };
    let (ci_low, ci_high) = wilson_interval(connected, replicates, Z95);
    let limit = (-1.0f64).exp();
    Ok(WindowReport {
        n,
        replicates,
        seed,
        connected,
        empirical,
        std_error: proportion_se(exact, replicates),
        ci_low,
        ci_high,
        exact,
        limit,
        exact_gap_to_limit: exact - limit,
        isolated_mean,
        isolated_variance,
        isolated_expected: n as f64 * (1.0 - p).powi(n as i32 - 1),
        isolated_dispersion: if isolated_mean > 0.0 { isolated_variance / isolated_mean } else { f64::NAN },
    })
}

/// Report of [`size_gap_experiment`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeGapReport {
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub lambda_star: f64,
    pub lambda2_sup: f64,
    pub delta: f64,
    /// `floor(delta n)`.
    pub size_limit: usize,
    /// Replicates with a component of size in `[2, delta n]`.
    pub hits: usize,
    pub frequency: f64,
}

/// How often a component of intermediate size `2..=delta n` appears when
/// `lambda* > 1`.
pub fn size_gap_experiment(
    space: &SpaceSpec,
    kernel: &KernelSpec,
    n: usize,
    replicates: usize,
    seed: u64,
) -> Result<SizeGapReport> {
    let f = kernel.isolation_parameter(space, 1024)?;
    if !(f.lambda_star > 1.0) {
        return precondition(format!("size-gap experiment needs lambda* > 1, got {}", f.lambda_star));
    }
    if replicates == 0 || n < 2 {
        return invalid("need n >= 2 and at least one replicate");
    }
    let delta = min_component_fraction(f.lambda_star, f.lambda2_sup)?;
    let size_limit = (delta * n as f64).floor() as usize;
    let mode = SampleMode::fastest_for(kernel);
    let hits = (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let g = sample_graph(space, kernel, n, derive_seed(seed, 0, rep as u64), mode)?;
            let s = connected_components(&g)?;
            Ok(s.component_sizes.iter().any(|k| (2..=size_limit).contains(k)))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|h| *h)
        .count();
    Ok(SizeGapReport {
        n,
        replicates,
        seed,
        lambda_star: f.lambda_star,
        lambda2_sup: f.lambda2_sup,
        delta,
        size_limit,
        hits,
        frequency: hits as f64 / replicates as f64,
    })
}

/// Monte Carlo estimate of `Pr{A has no edge to A^c}` for `A = {1..k}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutEstimate {
    pub k: usize,
    pub hits: usize,
    pub replicates: usize,
    pub frequency: f64,
    pub std_error: f64,
}

/// Estimates the cut probability for each `k` in `ks` from the same
/// replicates.
pub fn cut_probability_experiment(
    space: &SpaceSpec,
    kernel: &KernelSpec,
    n: usize,
    ks: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<Vec<CutEstimate>> {
    if let Some(k) = ks.iter().find(|k| **k < 1 || **k >= n) {
        return invalid(format!("need 1 <= k < n, got k = {k}"));
    }
    if replicates == 0 {
        return invalid("need at least one replicate");
    }
    let mode = SampleMode::fastest_for(kernel);
    let per_rep = (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let g = sample_graph(space, kernel, n, derive_seed(seed, 0, rep as u64), mode)?;
            Ok(ks
                .iter()
                .map(|&k| !g.edges.iter().any(|&(i, j)| (i as usize <= k) != (j as usize <= k)))
                .collect::<Vec<bool>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ks
        .iter()
        .enumerate()
        .map(|(idx, &k)| {
            let hits = per_rep.iter().filter(|r| r[idx]).count();
            let frequency = hits as f64 / replicates as f64;
            // a zero-hit estimate gets the rule-of-three style floor of one hit
            let se = proportion_se(frequency.max(1.0 / replicates as f64), replicates);
            CutEstimate { k, hits, replicates, frequency, std_error: se }
        })
        .collect())
}

/// Mean `N_B` over replicates for `B = {x : region(x)}`, with its standard error.
pub fn isolated_in_region_mean(
    space: &SpaceSpec,
    kernel: &KernelSpec,
    n: usize,
    region: impl Fn(Point) -> bool + Sync,
    replicates: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if replicates < 2 {
        return invalid("need at least two replicates");
    }
    let mode = SampleMode::fastest_for(kernel);
    let counts = (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let g = sample_graph(space, kernel, n, derive_seed(seed, 0, rep as u64), mode)?;
            Ok(crate::graph::isolated_in_region(&g, &region) as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    let reps = replicates as f64;
    let mean = counts.iter().sum::<f64>() / reps;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (reps - 1.0);
    Ok((mean, (var / reps).sqrt()))
}
