//! Edge-list file format.
//!
//! ```text
//! #irg v1
//! #space {"type":"interval"}
//! #kernel {"type":"constant","c":1.0}
//! #n 4
//! #seed 17
//! 1 2
//! 2 3
//! #pos 1 0.5377...
//! ...
//! ```
//!
//! Edges are 1-based pairs `i < j` in ascending order; positions follow as
//! `#pos i value` lines, with atom indices for finite spaces and shortest
//! round-trip decimals for coordinates.

use std::io::{BufRead, Write};

use crate::error::{IrgError, Result};
use crate::kernel::KernelSpec;
use crate::sampler::SampledGraph;
use crate::space::{Point, SpaceSpec};

pub const MAGIC: &str = "#irg v1";

pub fn write_edge_list<W: Write>(g: &SampledGraph, mut out: W) -> Result<()> {
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "#space {}", serde_json::to_string(&g.space)?)?;
    writeln!(out, "#kernel {}", serde_json::to_string(&g.kernel)?)?;
    writeln!(out, "#n {}", g.n)?;
    writeln!(out, "#seed {}", g.seed)?;
    for (i, j) in &g.edges {
        writeln!(out, "{i} {j}")?;
    }
    for (i, p) in g.positions.iter().enumerate() {
        match p {
            Point::Atom(a) => writeln!(out, "#pos {} {a}", i + 1)?,
            Point::Coord(x) => writeln!(out, "#pos {} {x}", i + 1)?,
        }
    }
    out.flush()?;
    Ok(())
}

pub fn edge_list_string(g: &SampledGraph) -> Result<String> {
    let mut buf = Vec::new();
    write_edge_list(g, &mut buf)?;
    Ok(String::from_utf8(buf).expect("edge lists are ASCII"))
}

fn parse_err(line: usize, msg: impl Into<String>) -> IrgError {
    IrgError::Parse { line, msg: msg.into() }
}

pub fn read_edge_list<R: BufRead>(input: R) -> Result<SampledGraph> {
    let mut space: Option<SpaceSpec> = None;
    let mut kernel: Option<KernelSpec> = None;
    let mut n: Option<usize> = None;
    let mut seed: Option<u64> = None;
    let mut edges = Vec::new();
    let mut positions: Vec<Option<Point>> = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim();
        if idx == 0 {
            if line != MAGIC {
                return Err(parse_err(lineno, format!("expected {MAGIC:?} header")));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let (key, value) = rest.split_once(' ').unwrap_or((rest, ""));
            match key {
                "space" => {
                    space = Some(serde_json::from_str(value).map_err(|e| parse_err(lineno, e.to_string()))?)
                }
                "kernel" => {
                    kernel = Some(serde_json::from_str(value).map_err(|e| parse_err(lineno, e.to_string()))?)
                }
                "n" => {
                    let v: usize = value.trim().parse().map_err(|_| parse_err(lineno, "bad vertex count"))?;
                    positions = vec![None; v];
                    n = Some(v);
                }
                "seed" => seed = Some(value.trim().parse().map_err(|_| parse_err(lineno, "bad seed"))?),
                "pos" => {
                    let (Some(n), Some(space)) = (n, space.as_ref()) else {
                        return Err(parse_err(lineno, "#pos before #n and #space"));
                    };
                    let (i, v) = value
                        .trim()
                        .split_once(' ')
                        .ok_or_else(|| parse_err(lineno, "expected '#pos i value'"))?;
                    let i: usize = i.parse().map_err(|_| parse_err(lineno, "bad vertex index"))?;
                    if i == 0 || i > n {
                        return Err(parse_err(lineno, format!("vertex {i} outside 1..={n}")));
                    }
                    let p = if space.is_continuous() {
                        Point::Coord(v.trim().parse().map_err(|_| parse_err(lineno, "bad coordinate"))?)
                    } else {
                        Point::Atom(v.trim().parse().map_err(|_| parse_err(lineno, "bad atom index"))?)
                    };
                    space.check_point(p).map_err(|e| parse_err(lineno, e.to_string()))?;
                    positions[i - 1] = Some(p);
                }
                other => return Err(parse_err(lineno, format!("unknown header #{other}"))),
            }
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(parse_err(lineno, "expected 'i j'"));
        };
        let a: u32 = a.parse().map_err(|_| parse_err(lineno, "bad vertex index"))?;
        let b: u32 = b.parse().map_err(|_| parse_err(lineno, "bad vertex index"))?;
        edges.push((a, b));
    }
    let missing = |what: &str| parse_err(0, format!("missing #{what} header"));
    let space = space.ok_or_else(|| missing("space"))?;
    let kernel = kernel.ok_or_else(|| missing("kernel"))?;
    n.ok_or_else(|| missing("n"))?;
    let seed = seed.ok_or_else(|| missing("seed"))?;
    let positions = positions
        .into_iter()
        .enumerate()
        .map(|(i, p)| p.ok_or_else(|| parse_err(0, format!("no position for vertex {}", i + 1))))
        .collect::<Result<Vec<_>>>()?;
    SampledGraph::from_parts(space, kernel, seed, positions, edges)
}
