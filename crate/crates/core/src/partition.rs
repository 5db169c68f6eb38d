//! Discretization: dyadic partitions `P_m`, lower approximation kernels
//! `K_m` (cell-pair infima of `K`), partition graphs `H_m`, their main
//! component `C_m`, and the cell-occupancy check on sampled positions.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, IrgError, Result};
use crate::graph::UnionFind;
use crate::kernel::KernelSpec;
use crate::sampler::SampledGraph;
use crate::space::{Cell, Point, SpaceSpec};

pub const MAX_LEVEL: u32 = 20;
/// Largest level at which a full partition graph (all cell pairs) is built.
pub const MAX_GRAPH_LEVEL: u32 = 12;
/// Samples per cell side for the grid infimum.
pub const GRID_SAMPLES: usize = 64;

/// A finite partition of the space: dyadic intervals on `[0, 1)`, atoms on finite spaces.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    pub space: SpaceSpec,
    pub level: u32,
    pub cells: Vec<Cell>,
}

/// `P_m`. Finite spaces give their atoms at every level.
pub fn build_partition(space: &SpaceSpec, m: u32) -> Result<Partition> {
    if !(1..=MAX_LEVEL).contains(&m) {
        return invalid(format!("partition level must be in 1..={MAX_LEVEL}, got {m}"));
    }
    let cells = match space.weights() {
        Some(w) => (0..w.len()).map(Cell::Atom).collect(),
        None => (0..1u64 << m).map(|index| Cell::Dyadic { level: m, index }).collect(),
    };
    Ok(Partition { space: space.clone(), level: m, cells })
}

impl Partition {
    pub fn measure(&self, i: usize) -> f64 {
        self.space.cell_measure(self.cells[i]).unwrap_or(0.0)
    }

    /// Index of the cell containing `p`.
    pub fn locate(&self, p: Point) -> Result<usize> {
        self.space.check_point(p)?;
        Ok(match p {
            Point::Atom(i) => i,
            Point::Coord(x) => ((x * self.cells.len() as f64) as usize).min(self.cells.len() - 1),
        })
    }

    fn cell(&self, i: usize) -> Result<Cell> {
        self.cells
            .get(i)
            .copied()
            .ok_or_else(|| IrgError::InvalidInput(format!("cell {i} outside partition of {} cells", self.cells.len())))
    }
}

/// A cell-pair infimum and whether it was computed exactly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerValue {
    pub value: f64,
    pub exact: bool,
}

/// `inf { K(x, y) : x in cell i, y in cell j }`.
///
/// Built-in kernels are handled exactly from their piecewise structure.
pub fn lower_kernel(kernel: &KernelSpec, partition: &Partition, i: usize, j: usize) -> Result<LowerValue> {
    kernel.check_space(&partition.space)?;
    let (a, b) = (partition.cell(i)?, partition.cell(j)?);
    Ok(match exact_infimum(kernel, a, b) {
        Some(value) => LowerValue { value, exact: true },
        None => LowerValue { value: grid_infimum(kernel, a, b, GRID_SAMPLES), exact: false },
    })
}

fn exact_infimum(kernel: &KernelSpec, a: Cell, b: Cell) -> Option<f64> {
    match kernel {
        KernelSpec::Constant { c } => Some(*c),
        KernelSpec::Block { matrix } => match (a, b) {
            (Cell::Atom(i), Cell::Atom(j)) => Some(matrix[i.min(j)][i.max(j)]),
            _ => None,
        },
        KernelSpec::TorusBand { c, r } => {
            let (_, dmax) = torus_distance_range(a.bounds(), b.bounds());
            // inf is c iff the supremal distance stays within r, attained or not
            Some(if dmax.value <= *r { *c } else { 0.0 })
        }
        KernelSpec::TorusProfile { breakpoints, values } => {
            let (dmin, dmax) = torus_distance_range(a.bounds(), b.bounds());
            Some(profile_infimum(breakpoints, values, dmin, dmax))
        }
        KernelSpec::Counterexample { c } => {
            let (a0, a1) = a.bounds();
            let (b0, b1) = b.bounds();
            // the box lies inside {x/2 <= y <= 2x} iff b1 <= 2 a0 and a1 <= 2 b0;
            // there K = c / max(x, y) (2c/x on the diagonal), with infimum c / max(a1, b1)
            Some(if *c > 0.0 && b1 <= 2.0 * a0 && a1 <= 2.0 * b0 { c / a1.max(b1) } else { 0.0 })
        }
        KernelSpec::Scaled { base, factor } => {
            exact_infimum(base, a, b).map(|v| if *factor == 0.0 { 0.0 } else { factor * v })
        }
    }
}

/// An end point of the range of an expression over a product of cells.
#[derive(Clone, Copy, Debug)]
struct Bound {
    value: f64,
    attained: bool,
}

/// Range of the circular distance over `[a0, a1) x [b0, b1)`.
///
/// The difference `y - x` sweeps the open interval `(b0 - a1, b1 - a0)`;
/// the distance is the triangle wave `tri(t) = min(t mod 1, 1 - t mod 1)`
/// of it. Interior extrema of `tri` (integers, half-integers) are attained,
/// the values at the open ends are not.
fn torus_distance_range(a: (f64, f64), b: (f64, f64)) -> (Bound, Bound) {
    let lo = b.0 - a.1;
    let hi = b.1 - a.0;
    let tri = |t: f64| {
        let u = t.rem_euclid(1.0);
        u.min(1.0 - u)
    };
    let has_strictly_inside = |offset: f64| {
        let k = (lo - offset).floor() + 1.0 + offset;
        k < hi
    };
    let (e0, e1) = (tri(lo), tri(hi));
    let min = if has_strictly_inside(0.0) {
        Bound { value: 0.0, attained: true }
    } else {
        Bound { value: e0.min(e1), attained: false }
    };
    let max = if has_strictly_inside(0.5) {
        Bound { value: 0.5, attained: true }
    } else {
        Bound { value: e0.max(e1), attained: false }
    };
    (min, max)
}

/// Infimum of the profile `h` over distances in the range `[dmin, dmax]`
/// (ends included only when attained). Piece `i` of `h` covers
/// `(b[i-1], b[i]]`, the first piece `[0, b[0]]`.
fn profile_infimum(breakpoints: &[f64], values: &[f64], dmin: Bound, dmax: Bound) -> f64 {
    let mut best = f64::INFINITY;
    let mut lower = Bound { value: 0.0, attained: true };
    for (i, v) in values.iter().enumerate() {
        let upper = Bound { value: breakpoints.get(i).copied().unwrap_or(0.5), attained: true };
        let lo = tighter_lower(lower, dmin);
        let hi = tighter_upper(upper, dmax);
        if lo.value < hi.value || (lo.value == hi.value && lo.attained && hi.attained) {
            best = best.min(*v);
        }
        lower = Bound { value: upper.value, attained: false };
    }
    if best.is_finite() {
        best
    } else {
        0.0
    }
}

fn tighter_lower(x: Bound, y: Bound) -> Bound {
    if x.value > y.value {
        x
    } else if y.value > x.value {
        y
    } else {
        Bound { value: x.value, attained: x.attained && y.attained }
    }
}

fn tighter_upper(x: Bound, y: Bound) -> Bound {
    if x.value < y.value {
        x
    } else if y.value < x.value {
        y
    } else {
        Bound { value: x.value, attained: x.attained && y.attained }
    }
}

/// Minimum of `K` over a `g x g` grid of points `lo + s * width / g` in
/// the two cells. Approximate: at least the true infimum.
pub fn grid_infimum(kernel: &KernelSpec, a: Cell, b: Cell, g: usize) -> f64 {
    let samples = |c: Cell| -> Vec<Point> {
        match c {
            Cell::Atom(i) => vec![Point::Atom(i)],
            Cell::Dyadic { .. } => {
                let (lo, hi) = c.bounds();
                (0..g).map(|s| Point::Coord(lo + s as f64 * (hi - lo) / g as f64)).collect()
            }
        }
    };
    let ys = samples(b);
    samples(a)
        .into_iter()
        .flat_map(|x| ys.iter().map(move |y| kernel.eval(x, *y)))
        .fold(f64::INFINITY, f64::min)
}

/// Geometry of one cell, as serialized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellInfo {
    pub lo: f64,
    pub hi: f64,
    pub measure: f64,
}

/// `C_m` and the measure it covers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MainComponent {
    pub cells: Vec<usize>,
    pub measure: f64,
}

/// `H_m`: positive-measure cells, joined where the cell-pair infimum of `K` is positive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionGraph {
    pub m: u32,
    pub cells: Vec<CellInfo>,
    /// Indices of positive-measure cells.
    pub vertices: Vec<usize>,
    /// Pairs `i < j` with positive infimum.
    pub edges: Vec<[usize; 2]>,
    /// Positive infima of every edge, aligned with `edges`.
    pub kernel_inf: Vec<f64>,
    /// Diagonal infima `(i, inf)` for every vertex; they do not affect connectivity.
    pub self_pairs: Vec<(usize, f64)>,
    /// Whether every infimum was computed exactly.
    pub exact: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub main_component: Option<MainComponent>,
}

impl PartitionGraph {
    /// `kernel_inf(i, j)`, zero for non-edges.
    pub fn inf(&self, i: usize, j: usize) -> f64 {
        let key = [i.min(j), i.max(j)];
        self.edges
            .binary_search(&key)
            .map(|idx| self.kernel_inf[idx])
            .unwrap_or(0.0)
    }
}

fn cell_info(partition: &Partition, i: usize) -> CellInfo {
    let (lo, hi) = partition.cells[i].bounds();
    CellInfo { lo, hi, measure: partition.measure(i) }
}

/// Builds `H_m` for `kernel` on `partition`. Limited to levels up to
/// [`MAX_GRAPH_LEVEL`] since every cell pair is examined.
pub fn build_partition_graph(kernel: &KernelSpec, partition: &Partition) -> Result<PartitionGraph> {
    kernel.check_space(&partition.space)?;
    if partition.space.is_continuous() && partition.level > MAX_GRAPH_LEVEL {
        return Err(IrgError::Guard(format!(
            "partition graph at level {} has {} cells; limit is level {MAX_GRAPH_LEVEL}",
            partition.level,
            partition.cells.len()
        )));
    }
    let vertices: Vec<usize> = (0..partition.cells.len()).filter(|i| partition.measure(*i) > 0.0).collect();
    let mut edges = Vec::new();
    let mut kernel_inf = Vec::new();
    let mut self_pairs = Vec::new();
    let mut exact = true;
    for (a, &i) in vertices.iter().enumerate() {
        for &j in &vertices[a..] {
            let low = lower_kernel(kernel, partition, i, j)?;
            exact &= low.exact;
            if i == j {
                self_pairs.push((i, low.value));
            } else if low.value > 0.0 {
                edges.push([i, j]);
                kernel_inf.push(low.value);
            }
        }
    }
    let mut pg = PartitionGraph {
        m: partition.level,
        cells: (0..partition.cells.len()).map(|i| cell_info(partition, i)).collect(),
        vertices,
        edges,
        kernel_inf,
        self_pairs,
        exact,
        main_component: None,
    };
    pg.main_component = Some(main_component(&pg)?);
    Ok(pg)
}

/// The component of `H_m` with the largest total cell measure (lowest
/// cell index on ties).
pub fn main_component(pg: &PartitionGraph) -> Result<MainComponent> {
    if pg.vertices.is_empty() {
        return invalid("partition graph has no positive-measure cells");
    }
    let mut uf = UnionFind::new(pg.cells.len());
    for [i, j] in &pg.edges {
        uf.union(*i, *j);
    }
    let mut mass = vec![0.0; pg.cells.len()];
    for &v in &pg.vertices {
        let r = uf.find(v);
        mass[r] += pg.cells[v].measure;
    }
    let mut best_root = uf.find(pg.vertices[0]);
    for &v in &pg.vertices {
        let r = uf.find(v);
        if mass[r] > mass[best_root] {
            best_root = r;
        }
    }
    let cells: Vec<usize> = pg.vertices.iter().copied().filter(|v| uf.find(*v) == best_root).collect();
    Ok(MainComponent { cells, measure: mass[best_root] })
}

/// Verdict of [`irreducibility_probe`]. Evidence only, never a proof.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeVerdict {
    IrreducibleCompatible,
    ReducibleEvidence,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeLevel {
    pub m: u32,
    pub covered_measure: f64,
    pub components: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub levels: Vec<ProbeLevel>,
    pub verdict: ProbeVerdict,
    /// First level meeting the compatibility rule.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compatible_from: Option<u32>,
}

/// Cell pairs the probe may examine across all levels.
pub const PROBE_PAIR_BUDGET: u64 = 1 << 27;

/// Tracks the measure covered by the main component of `H_m` for
/// `m = 1..=m_max`.
///
/// * finite spaces: `H_m` is the exact kernel graph, so the verdict is
///   `irreducible-compatible` when it covers everything and
///   `reducible-evidence` otherwise;
/// * continuous spaces: `irreducible-compatible` when the uncovered
///   measure at `m_max` is zero or (for `m >= 2`) at most `2^(1-m)`, i.e.
///   two finest cells; `reducible-evidence` when it has not shrunk since
///   the middle level; `inconclusive` otherwise.
pub fn irreducibility_probe(kernel: &KernelSpec, space: &SpaceSpec, m_max: u32) -> Result<ProbeReport> {
    if !(1..=MAX_LEVEL).contains(&m_max) {
        return invalid(format!("m_max must be in 1..={MAX_LEVEL}, got {m_max}"));
    }
    kernel.check_space(space)?;
    let mut levels = Vec::new();
    let mut pairs_used: u64 = 0;
    let top = if space.is_continuous() { m_max } else { 1 };
    for m in 1..=top {
        let partition = build_partition(space, m)?;
        let (covered, components) = main_cover(kernel, &partition, &mut pairs_used)?;
        levels.push(ProbeLevel { m, covered_measure: covered, components });
    }
    let uncovered = |l: &ProbeLevel| (1.0 - l.covered_measure).max(0.0);
    let (verdict, compatible_from) = if !space.is_continuous() {
        if uncovered(&levels[0]) <= 1e-12 {
            (ProbeVerdict::IrreducibleCompatible, Some(1))
        } else {
            (ProbeVerdict::ReducibleEvidence, None)
        }
    } else {
        let compatible = |l: &ProbeLevel| {
            uncovered(l) <= 1e-12 || (l.m >= 2 && uncovered(l) <= (1.0 - l.m as f64).exp2() + 1e-12)
        };
        let first = levels.iter().find(|l| compatible(l)).map(|l| l.m);
        let last = levels.last().expect("at least one level");
        let middle = &levels[(levels.len() - 1) / 2];
        let stalled = uncovered(last) >= uncovered(middle) - 1e-12;
        if compatible(last) {
            (ProbeVerdict::IrreducibleCompatible, first)
        } else if stalled {
            (ProbeVerdict::ReducibleEvidence, None)
        } else {
            (ProbeVerdict::Inconclusive, None)
        }
    };
    Ok(ProbeReport { levels, verdict, compatible_from })
}

/// Covered measure of the main component and the number of components,
/// without materializing `H_m`. Stops scanning once everything is joined.
fn main_cover(kernel: &KernelSpec, partition: &Partition, pairs_used: &mut u64) -> Result<(f64, usize)> {
    let vertices: Vec<usize> = (0..partition.cells.len()).filter(|i| partition.measure(*i) > 0.0).collect();
    if vertices.is_empty() {
        return invalid("partition has no positive-measure cells");
    }
    let mut uf = UnionFind::new(partition.cells.len());
    let mut components = vertices.len();
    'scan: for (a, &i) in vertices.iter().enumerate() {
        for &j in &vertices[a + 1..] {
            if components == 1 {
                break 'scan;
            }
            *pairs_used += 1;
            if *pairs_used > PROBE_PAIR_BUDGET {
                return Err(IrgError::Guard(format!(
                    "irreducibility probe exceeded {PROBE_PAIR_BUDGET} cell pairs at level {}",
                    partition.level
                )));
            }
            if uf.find(i) != uf.find(j) && lower_kernel(kernel, partition, i, j)?.value > 0.0 {
                uf.union(i, j);
                components -= 1;
            }
        }
    }
    let mut mass = vec![0.0; partition.cells.len()];
    for &v in &vertices {
        let r = uf.find(v);
        mass[r] += partition.measure(v);
    }
    Ok((mass.iter().copied().fold(0.0, f64::max), components))
}

/// Occupancy of one cell: `N(A)` against `n mu(A)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellOccupancy {
    pub cell: usize,
    pub count: usize,
    pub expected: f64,
    pub ratio: f64,
    /// `1/2 < N(A) / (n mu(A)) < 2`.
    pub pass: bool,
}

/// Checks `n mu(A)/2 < N(A) < 2 n mu(A)` for every positive-measure cell.
pub fn occupancy_check(g: &SampledGraph, partition: &Partition) -> Result<Vec<CellOccupancy>> {
    if g.space != partition.space {
        return invalid("graph and partition live on different spaces");
    }
    let mut counts = vec![0usize; partition.cells.len()];
    for p in &g.positions {
        counts[partition.locate(*p)?] += 1;
    }
    Ok((0..partition.cells.len())
        .filter(|i| partition.measure(*i) > 0.0)
        .map(|i| {
            let expected = g.n as f64 * partition.measure(i);
            let ratio = counts[i] as f64 / expected;
            CellOccupancy { cell: i, count: counts[i], expected, ratio, pass: ratio > 0.5 && ratio < 2.0 }
        })
        .collect())
}
