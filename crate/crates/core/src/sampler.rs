//! Sampling `G(n, K)`: positions `X_1..X_n` i.i.d. from `mu`, then each pair
//! `{i, j}` joined independently with probability `min(1, K(X_i, X_j) ln(n)/n)`.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::kernel::KernelSpec;
use crate::rng::SplitMix64;
use crate::space::{Point, SpaceSpec};

/// Pair-generation strategy. Every mode samples the same distribution;
/// bit-exact output is only guaranteed for a fixed `(seed, mode)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    /// One uniform draw per pair, pairs in lexicographic order.
    Naive,
    /// Geometric skipping over the lexicographic pair sequence at the rate
    /// given by the kernel's global supremum, then thinning.
    #[default]
    Accelerated,
    /// Positions sorted; for each vertex, geometric skipping over the
    /// neighbours inside its declared diagonal band, then thinning. For
    /// unbounded kernels supported near the diagonal.
    Banded,
}

impl SampleMode {
    /// The cheapest mode that applies to `kernel` exactly.
    pub fn fastest_for(kernel: &KernelSpec) -> Self {
        if kernel.sup().is_some() {
            SampleMode::Accelerated
        } else if kernel.sorted_band(0.5).is_some() {
            SampleMode::Banded
        } else {
            SampleMode::Naive
        }
    }

    fn resolve(self, kernel: &KernelSpec, space: &SpaceSpec) -> Self {
        match self {
            SampleMode::Naive => SampleMode::Naive,
            SampleMode::Accelerated if kernel.sup().is_none() => {
                warn!("kernel {kernel} has no finite supremum; accelerated mode falls back to naive");
                SampleMode::Naive
            }
            SampleMode::Accelerated => SampleMode::Accelerated,
            SampleMode::Banded if !space.is_continuous() || kernel.sorted_band(0.5).is_none() => {
                let fallback = if kernel.sup().is_some() { SampleMode::Accelerated } else { SampleMode::Naive };
                warn!("kernel {kernel} declares no diagonal band; banded mode falls back to {fallback:?}");
                fallback
            }
            SampleMode::Banded => SampleMode::Banded,
        }
    }
}

/// A realisation of `G(n, K)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledGraph {
    pub n: usize,
    pub positions: Vec<Point>,
    /// Sorted, deduplicated pairs `(i, j)` with `1 <= i < j <= n`.
    pub edges: Vec<(u32, u32)>,
    pub seed: u64,
    pub kernel: KernelSpec,
    pub space: SpaceSpec,
}

impl SampledGraph {
    /// Assembles a graph from stored parts, validating every invariant.
    pub fn from_parts(
        space: SpaceSpec,
        kernel: KernelSpec,
        seed: u64,
        positions: Vec<Point>,
        mut edges: Vec<(u32, u32)>,
    ) -> Result<Self> {
        let n = positions.len();
        if n == 0 {
            return invalid("graphs need at least one vertex");
        }
        if n > u32::MAX as usize {
            return invalid("too many vertices");
        }
        for p in &positions {
            space.check_point(*p)?;
        }
        for &(i, j) in &edges {
            if i == 0 || j as usize > n || i >= j {
                return invalid(format!("edge ({i}, {j}) is not a pair 1 <= i < j <= {n}"));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(SampledGraph { n, positions, edges, seed, kernel, space })
    }

    /// Degree of every vertex, 0-based.
    pub fn degree_sequence(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(i, j) in &self.edges {
            deg[i as usize - 1] += 1;
            deg[j as usize - 1] += 1;
        }
        deg
    }
}

/// `p_n = ln(n) / n`.
#[inline]
pub fn density_scale(n: usize) -> f64 {
    (n as f64).ln() / n as f64
}

/// `min(1, K(x, y) ln(n)/n)`.
pub fn edge_probability(kernel: &KernelSpec, x: Point, y: Point, n: usize) -> Result<f64> {
    if n < 2 {
        return invalid(format!("edge probability needs n >= 2, got {n}"));
    }
    Ok(clip(kernel.evaluate(x, y)?, density_scale(n)))
}

#[inline]
fn clip(k: f64, pn: f64) -> f64 {
    if k == 0.0 {
        0.0
    } else {
        (k * pn).min(1.0)
    }
}

/// Samples `G(n, K)` from `seed`. Positions come from sub-stream 0 of the
/// seed and edges from sub-stream 1, so positions do not depend on `mode`.
pub fn sample_graph(
    space: &SpaceSpec,
    kernel: &KernelSpec,
    n: usize,
    seed: u64,
    mode: SampleMode,
) -> Result<SampledGraph> {
    if n == 0 {
        return invalid("graphs need at least one vertex");
    }
    if n > u32::MAX as usize {
        return invalid("too many vertices");
    }
    kernel.check_space(space)?;
    let positions = space.sample_points(n, &mut SplitMix64::stream(seed, 0));
    let edges = sample_edges(space, kernel, &positions, seed, mode)?;
    Ok(SampledGraph {
        n,
        positions,
        edges,
        seed,
        kernel: kernel.clone(),
        space: space.clone(),
    })
}

/// Edge set of `G(n, K)` given the positions, drawn from sub-stream 1 of
/// `seed`. Calling it with fresh seeds resamples edges conditionally on
/// fixed positions.
pub fn sample_edges(
    space: &SpaceSpec,
    kernel: &KernelSpec,
    positions: &[Point],
    seed: u64,
    mode: SampleMode,
) -> Result<Vec<(u32, u32)>> {
    if positions.len() > u32::MAX as usize {
        return invalid("too many vertices");
    }
    kernel.check_space(space)?;
    for p in positions {
        space.check_point(*p)?;
    }
    if positions.len() < 2 {
        return Ok(Vec::new());
    }
    let mut rng = SplitMix64::stream(seed, 1);
    let mut edges = match mode.resolve(kernel, space) {
        SampleMode::Naive => naive_edges(kernel, positions, &mut rng),
        SampleMode::Accelerated => skip_edges(kernel, positions, &mut rng),
        SampleMode::Banded => banded_edges(kernel, positions, &mut rng),
    };
    edges.sort_unstable();
    Ok(edges)
}

fn naive_edges(kernel: &KernelSpec, pos: &[Point], rng: &mut SplitMix64) -> Vec<(u32, u32)> {
    let n = pos.len();
    let pn = density_scale(n);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.bernoulli(clip(kernel.eval(pos[i], pos[j]), pn)) {
                edges.push((i as u32 + 1, j as u32 + 1));
            }
        }
    }
    edges
}

fn skip_edges(kernel: &KernelSpec, pos: &[Point], rng: &mut SplitMix64) -> Vec<(u32, u32)> {
    let n = pos.len();
    let pn = density_scale(n);
    let p_sup = clip(kernel.sup().unwrap_or(f64::INFINITY), pn);
    let mut edges = Vec::new();
    if p_sup == 0.0 {
        return edges;
    }
    // (i, j) is the last candidate visited; (0, 0) sits before (0, 1).
    let (mut i, mut j) = (0usize, 0usize);
    'outer: loop {
        let skip = if p_sup >= 1.0 { 0 } else { rng.geometric_skip(p_sup) };
        let mut remaining = skip.saturating_add(1);
        loop {
            let room = (n - 1 - j) as u64;
            if remaining <= room {
                j += remaining as usize;
                break;
            }
            remaining -= room;
            i += 1;
            if i >= n - 1 {
                break 'outer;
            }
            j = i;
        }
        let p = clip(kernel.eval(pos[i], pos[j]), pn);
        if p >= p_sup || rng.bernoulli(p / p_sup) {
            edges.push((i as u32 + 1, j as u32 + 1));
        }
    }
    edges
}

fn banded_edges(kernel: &KernelSpec, pos: &[Point], rng: &mut SplitMix64) -> Vec<(u32, u32)> {
    let n = pos.len();
    let pn = density_scale(n);
    let coord = |p: &Point| p.coord().unwrap_or(0.0);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| coord(&pos[*a]).total_cmp(&coord(&pos[*b])).then(a.cmp(b)));
    let xs: Vec<f64> = order.iter().map(|v| coord(&pos[*v])).collect();
    let mut edges = Vec::new();
    let mut push = |a: usize, b: usize| {
        let (u, v) = (order[a].min(order[b]), order[a].max(order[b]));
        edges.push((u as u32 + 1, v as u32 + 1));
    };
    for a in 0..n {
        let x = xs[a];
        // ties sit outside the open band and are drawn one by one
        let mut b = a + 1;
        while b < n && xs[b] == x {
            if rng.bernoulli(clip(kernel.eval(pos[order[a]], pos[order[b]]), pn)) {
                push(a, b);
            }
            b += 1;
        }
        let Some((hi, bound)) = kernel.sorted_band(x) else { continue };
        let p_sup = clip(bound, pn);
        if p_sup == 0.0 {
            continue;
        }
        let end = b + xs[b..].partition_point(|y| *y <= hi);
        let mut c = b;
        loop {
            let skip = if p_sup >= 1.0 { 0 } else { rng.geometric_skip(p_sup) };
            c = c.saturating_add(usize::try_from(skip).unwrap_or(usize::MAX));
            if c >= end {
                break;
            }
            let p = clip(kernel.eval(pos[order[a]], pos[order[c]]), pn);
            if p >= p_sup || rng.bernoulli(p / p_sup) {
                push(a, c);
            }
            c += 1;
        }
    }
    edges
}
