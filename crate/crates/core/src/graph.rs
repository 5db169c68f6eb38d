//! Component analysis: union-find connectivity, component size spectrum
//! `N_k` and isolated-vertex counts `N`, `N_B`.

use std::collections::BTreeMap;
use std::mem;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::sampler::SampledGraph;
use crate::space::Point;

/// Disjoint sets with union by size and path halving.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    sets: usize,
}

impl UnionFind {
    pub fn new(len: usize) -> Self {
        UnionFind { parent: (0..len).collect(), size: vec![1; len], sets: len }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            let grandparent = self.parent[self.parent[x]];
            self.parent[x] = grandparent;
            x = grandparent;
        }
        x
    }

    /// Merges the sets of `x` and `y`; returns false if they were already joined.
    pub fn union(&mut self, x: usize, y: usize) -> bool {
        let mut a = self.find(x);
        let mut b = self.find(y);
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        self.sets -= 1;
        true
    }

    pub fn set_count(&self) -> usize {
        self.sets
    }

    pub fn set_size(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r]
    }

    /// Sizes of all sets.
    pub fn sizes(&mut self) -> Vec<usize> {
        (0..self.parent.len())
            .filter(|&x| self.parent[x] == x)
            .map(|r| self.size[r])
            .collect()
    }
}

/// Component structure of a graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentSummary {
    pub n: usize,
    #[serde(rename = "connected")]
    pub is_connected: bool,
    /// Component sizes, largest first.
    #[serde(rename = "sizes")]
    pub component_sizes: Vec<usize>,
    /// `N`, the number of isolated vertices.
    #[serde(rename = "isolated")]
    pub isolated_total: usize,
    /// `N_B` for a caller-supplied region, when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isolated_in_region: Option<usize>,
    /// `k -> N_k`, the number of components of size exactly `k`.
    #[serde(rename = "spectrum")]
    pub size_spectrum: BTreeMap<usize, usize>,
}

impl ComponentSummary {
    pub fn min_component_size(&self) -> usize {
        self.component_sizes.last().copied().unwrap_or(0)
    }

    pub fn max_component_size(&self) -> usize {
        self.component_sizes.first().copied().unwrap_or(0)
    }
}

/// Components of a graph given as `n` and 1-based edges.
pub fn components_from_edges(n: usize, edges: &[(u32, u32)]) -> Result<ComponentSummary> {
    if n == 0 {
        return invalid("graphs need at least one vertex");
    }
    let mut uf = UnionFind::new(n);
    let mut degree = vec![0usize; n];
    for &(i, j) in edges {
        let (i, j) = (i as usize, j as usize);
        if i == 0 || j == 0 || i > n || j > n {
            return invalid(format!("edge ({i}, {j}) out of range 1..={n}"));
        }
        uf.union(i - 1, j - 1);
        degree[i - 1] += 1;
        degree[j - 1] += 1;
    }
    let mut sizes = uf.sizes();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    let mut spectrum = BTreeMap::new();
    for s in &sizes {
        *spectrum.entry(*s).or_insert(0) += 1;
    }
    Ok(ComponentSummary {
        n,
        is_connected: sizes.len() == 1,
        isolated_total: spectrum.get(&1).copied().unwrap_or(0),
        isolated_in_region: None,
        size_spectrum: spectrum,
        component_sizes: sizes,
    })
}

/// Connected components of a sampled graph.
pub fn connected_components(g: &SampledGraph) -> Result<ComponentSummary> {
    components_from_edges(g.n, &g.edges)
}

/// `N_B`: isolated vertices whose position lies in `region`.
pub fn isolated_in_region(g: &SampledGraph, region: impl Fn(Point) -> bool) -> usize {
    g.degree_sequence()
        .iter()
        .zip(&g.positions)
        .filter(|(d, p)| **d == 0 && region(**p))
        .count()
}

/// Smallest component size.
pub fn min_component_size(summary: &ComponentSummary) -> usize {
    summary.min_component_size()
}
