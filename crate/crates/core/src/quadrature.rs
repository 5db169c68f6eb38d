//! Composite midpoint quadrature on panels split at declared breakpoints.

/// Absolute tolerance used by the kernel functionals.
pub const DEFAULT_TOL: f64 = 1e-9;

const MIN_PANELS: usize = 8;
const MAX_PANELS: usize = 1 << 22;

fn midpoint(f: &impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
}

/// Integrates `f` over one smooth segment, tripling the panel count until
/// successive estimates differ by less than `tol`.
pub fn integrate_segment(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut panels = MIN_PANELS;
    let mut prev = midpoint(f, a, b, panels);
    while panels < MAX_PANELS {
        panels *= 3;
        let next = midpoint(f, a, b, panels);
        if (next - prev).abs() < tol {
            return next;
        }
        prev = next;
    }
    prev
}

/// Integrates `f` over `[a, b]`, splitting at every breakpoint inside the
/// interval so no discontinuity falls inside a panel.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, breakpoints: &[f64], tol: f64) -> f64 {
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|x| *x > a && *x < b)
        .collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let segments = (cuts.len() - 1) as f64;
    cuts.windows(2)
        .map(|w| integrate_segment(&f, w[0], w[1], tol / segments))
        .sum()
}

/// Outcome of an integral that may diverge at a segment endpoint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Improper {
    Finite(f64),
    Divergent,
}

const SHELLS: usize = 40;

/// Integrates `f` over `[a, b]` (split at `breakpoints`), probing each
/// segment endpoint for a non-integrable singularity.
///
/// Each segment is cut into geometric shells approaching both endpoints.
/// The integral is declared divergent when the shell contributions stop
/// shrinking, i.e. the last shell carries at least 99% of the previous one.
pub fn integrate_improper(f: impl Fn(f64) -> f64, a: f64, b: f64, breakpoints: &[f64]) -> Improper {
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|x| *x > a && *x < b)
        .collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let half = 0.5 * (hi - lo);
        for toward_lo in [true, false] {
            let mut shells = Vec::with_capacity(SHELLS);
            for s in 0..SHELLS {
                let outer = half * (-(s as f64)).exp2();
                let inner = half * (-(s as f64 + 1.0)).exp2();
                let (x0, x1) = if toward_lo {
                    (lo + inner, lo + outer)
                } else {
                    (hi - outer, hi - inner)
                };
                let v = integrate_segment(&f, x0, x1, DEFAULT_TOL * 1e-3);
                if !v.is_finite() {
                    return Improper::Divergent;
                }
                shells.push(v.abs());
                total += v;
            }
            let last = shells[SHELLS - 1];
            let before = shells[SHELLS - 2];
            if last > 1e-12 && last >= 0.99 * before {
                return Improper::Divergent;
            }
        }
    }
    Improper::Finite(total)
}
