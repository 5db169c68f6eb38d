//! Ground spaces `(S, mu)`: finite weighted sets, the unit interval and the
//! unit torus, each with a probability measure that can be sampled exactly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, IrgError, Result};
use crate::rng::SplitMix64;

const WEIGHT_TOL: f64 = 1e-12;

/// A ground space with its probability measure.
///
/// `Interval` and `Torus` both carry Lebesgue measure on `[0, 1)`; they
/// differ only in the metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", try_from = "RawSpace")]
pub enum SpaceSpec {
    Finite {
        weights: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
    },
    Interval,
    Torus,
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum RawSpace {
    Finite {
        weights: Vec<f64>,
        #[serde(default)]
        labels: Option<Vec<String>>,
    },
    Interval,
    Torus,
}

impl TryFrom<RawSpace> for SpaceSpec {
    type Error = IrgError;

    fn try_from(raw: RawSpace) -> Result<Self> {
        match raw {
            RawSpace::Finite { weights, labels } => {
                let space = SpaceSpec::finite(weights)?;
                match labels {
                    Some(labels) => space.with_labels(labels),
                    None => Ok(space),
                }
            }
            RawSpace::Interval => Ok(SpaceSpec::Interval),
            RawSpace::Torus => Ok(SpaceSpec::Torus),
        }
    }
}

/// A point of a ground space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Point {
    Atom(usize),
    Coord(f64),
}

impl Point {
    pub fn coord(self) -> Option<f64> {
        match self {
            Point::Coord(x) => Some(x),
            Point::Atom(_) => None,
        }
    }

    pub fn atom(self) -> Option<usize> {
        match self {
            Point::Atom(i) => Some(i),
            Point::Coord(_) => None,
        }
    }
}

/// A measurable cell of a partition: a single atom, or the dyadic interval
/// `[index * 2^-level, (index + 1) * 2^-level)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Cell {
    Atom(usize),
    Dyadic { level: u32, index: u64 },
}

impl Cell {
    /// `[lo, hi)` bounds of a dyadic cell; atoms map to `[i, i + 1)` in index space.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Cell::Atom(i) => (i as f64, i as f64 + 1.0),
            Cell::Dyadic { level, index } => {
                let w = (-(level as f64)).exp2();
                (index as f64 * w, (index + 1) as f64 * w)
            }
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        match (*self, p) {
            (Cell::Atom(i), Point::Atom(j)) => i == j,
            (Cell::Dyadic { .. }, Point::Coord(x)) => {
                let (lo, hi) = self.bounds();
                lo <= x && x < hi
            }
            _ => false,
        }
    }
}

impl SpaceSpec {
    /// Finite space with the given atom weights. Weights must be
    /// nonnegative and sum to one within `1e-12`.
    pub fn finite(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return invalid("finite space needs at least one atom");
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return invalid(format!("atom weight {w} is not a nonnegative number"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return invalid(format!("atom weights sum to {total}, expected 1"));
        }
        Ok(SpaceSpec::Finite { weights, labels: None })
    }

    pub fn with_labels(self, labels: Vec<String>) -> Result<Self> {
        match self {
            SpaceSpec::Finite { weights, .. } => {
                if labels.len() != weights.len() {
                    return invalid(format!(
                        "{} labels given for {} atoms",
                        labels.len(),
                        weights.len()
                    ));
                }
                Ok(SpaceSpec::Finite { weights, labels: Some(labels) })
            }
            _ => invalid("labels only apply to finite spaces"),
        }
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self, SpaceSpec::Finite { .. })
    }

    pub fn weights(&self) -> Option<&[f64]> {
        match self {
            SpaceSpec::Finite { weights, .. } => Some(weights),
            _ => None,
        }
    }

    /// Checks that `p` is a point of this space.
    pub fn check_point(&self, p: Point) -> Result<()> {
        match (self, p) {
            (SpaceSpec::Finite { weights, .. }, Point::Atom(i)) if i < weights.len() => Ok(()),
            (SpaceSpec::Interval | SpaceSpec::Torus, Point::Coord(x)) if (0.0..1.0).contains(&x) => {
                Ok(())
            }
            _ => invalid(format!("point {p:?} does not belong to space {self:?}")),
        }
    }

    /// `n` independent draws from `mu`.
    pub fn sample_points(&self, n: usize, rng: &mut SplitMix64) -> Vec<Point> {
        match self {
            SpaceSpec::Finite { weights, .. } => {
                let mut cumulative = Vec::with_capacity(weights.len());
                let mut acc = 0.0;
                for w in weights {
                    acc += w;
                    cumulative.push(acc);
                }
                // rounding can leave the last cumulative weight just below 1
                let last = weights.iter().rposition(|w| *w > 0.0).unwrap_or(0);
                (0..n)
                    .map(|_| {
                        let u = rng.next_f64();
                        let i = cumulative.partition_point(|c| *c <= u);
                        Point::Atom(i.min(last))
                    })
                    .collect()
            }
            SpaceSpec::Interval | SpaceSpec::Torus => {
                (0..n).map(|_| Point::Coord(rng.next_f64())).collect()
            }
        }
    }

    /// Metric of the space: `|x - y|` on the interval, circular distance on
    /// the torus, the discrete metric on finite spaces.
    pub fn distance(&self, x: Point, y: Point) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(match (self, x, y) {
            (SpaceSpec::Finite { .. }, Point::Atom(i), Point::Atom(j)) => {
                if i == j {
                    0.0
                } else {
                    1.0
                }
            }
            (SpaceSpec::Interval, Point::Coord(a), Point::Coord(b)) => (a - b).abs(),
            (SpaceSpec::Torus, Point::Coord(a), Point::Coord(b)) => torus_distance(a, b),
            _ => unreachable!("points checked above"),
        })
    }

    /// `mu(cell)`.
    pub fn cell_measure(&self, cell: Cell) -> Result<f64> {
        match (self, cell) {
            (SpaceSpec::Finite { weights, .. }, Cell::Atom(i)) => weights
                .get(i)
                .copied()
                .ok_or_else(|| IrgError::InvalidInput(format!("atom {i} outside space"))),
            (SpaceSpec::Interval | SpaceSpec::Torus, Cell::Dyadic { level, index }) => {
                if level > 62 || index >= 1u64 << level {
                    return invalid(format!("dyadic cell {index} at level {level} outside [0,1)"));
                }
                Ok((-(level as f64)).exp2())
            }
            _ => invalid(format!("cell {cell:?} does not belong to space {self:?}")),
        }
    }
}

/// Circular distance on `[0, 1)`.
#[inline]
pub fn torus_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    d.min(1.0 - d)
}

/// Shorthand `interval`, `torus` or `finite:w1,w2,...`; JSON is accepted
/// when the string starts with `{`.
impl FromStr for SpaceSpec {
    type Err = IrgError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return Ok(serde_json::from_str(s)?);
        }
        match s {
            "interval" => Ok(SpaceSpec::Interval),
            "torus" => Ok(SpaceSpec::Torus),
            _ => {
                let Some(rest) = s.strip_prefix("finite:") else {
                    return invalid(format!("unknown space '{s}' (interval, torus, finite:w1,w2,...)"));
                };
                let weights = rest
                    .split(',')
                    .map(|w| {
                        w.trim()
                            .parse::<f64>()
                            .map_err(|_| IrgError::InvalidInput(format!("bad atom weight '{w}'")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                SpaceSpec::finite(weights)
            }
        }
    }
}

impl fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceSpec::Interval => f.write_str("interval"),
            SpaceSpec::Torus => f.write_str("torus"),
            SpaceSpec::Finite { weights, .. } => {
                let w: Vec<String> = weights.iter().map(|w| w.to_string()).collect();
                write!(f, "finite:{}", w.join(","))
            }
        }
    }
}
