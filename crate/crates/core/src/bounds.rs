//! Analytic quantities around the connectivity threshold: the isolated
//! vertex expectation bound, the two cut-probability bounds, the minimum
//! component fraction, the binomial Chernoff rate, and two exact
//! connectivity oracles for small graphs.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, precondition, Result};
use crate::kernel::KernelSpec;
use crate::quadrature::{self, DEFAULT_TOL};
use crate::sampler::density_scale;
use crate::space::{Point, SpaceSpec};

/// Inputs shared by the cut bounds. `p_n = ln(n)/n` is derived.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub n: usize,
    pub k: usize,
    pub lambda_star: f64,
    pub lambda2_sup: f64,
    pub p_n: f64,
}

impl BoundInputs {
    pub fn new(n: usize, k: usize, lambda_star: f64, lambda2_sup: f64) -> Result<Self> {
        if k < 1 || k >= n {
            return invalid(format!("need 1 <= k < n, got k={k}, n={n}"));
        }
        if !(lambda_star >= 0.0) || !(lambda2_sup >= 0.0) {
            return invalid("lambda* and sup lambda2 must be nonnegative");
        }
        Ok(BoundInputs { n, k, lambda_star, lambda2_sup, p_n: density_scale(n) })
    }
}

fn clamp_probability(v: f64) -> f64 {
    if v.is_nan() {
        1.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

/// Bound on `Pr{A has no edge to A^c}` for `|A| = k`, useful for small `k`:
/// `(1 - lambda* k p_n + sup(lambda2)^2 k^2 p_n^2 / 2)^(n-k)`, clamped to `[0, 1]`.
pub fn cut_bound_small_k(inputs: &BoundInputs) -> f64 {
    let k = inputs.k as f64;
    let p = inputs.p_n;
    let base = 1.0 - inputs.lambda_star * k * p + inputs.lambda2_sup.powi(2) * k * k * p * p / 2.0;
    if base <= 0.0 {
        return 0.0;
    }
    if base >= 1.0 {
        return 1.0;
    }
    clamp_probability(((inputs.n - inputs.k) as f64 * base.ln()).exp())
}

/// Bound on the same cut probability for `k <= n/2`:
/// `exp(-p_n lambda* k (n-k) / 2) + k exp(-n lambda*^2 / (16 sup(lambda2)^2))`,
/// clamped to `[0, 1]`.
pub fn cut_bound_large_k(inputs: &BoundInputs) -> Result<f64> {
    if 2 * inputs.k > inputs.n {
        return precondition(format!("large-k bound needs k <= n/2, got k={}, n={}", inputs.k, inputs.n));
    }
    let (ls, l2) = (inputs.lambda_star, inputs.lambda2_sup);
    if ls == 0.0 {
        return Ok(1.0);
    }
    if l2 == 0.0 {
        return invalid("sup lambda2 = 0 with lambda* > 0 is inconsistent (lambda <= lambda2 pointwise)");
    }
    let (n, k) = (inputs.n as f64, inputs.k as f64);
    let first = (-inputs.p_n * ls * k * (n - k) / 2.0).exp();
    let second = k * (-n * ls * ls / (16.0 * l2 * l2)).exp();
    Ok(clamp_probability(first + second))
}

/// `f(rho) = rho - rho ln rho`, increasing on `(0, 1]`.
fn fraction_profile(rho: f64) -> f64 {
    rho - rho * rho.ln()
}

/// `delta = max{rho in [0, 1/2] : rho - rho ln rho <= lambda*^2 / (32 sup(lambda2)^2)}`,
/// by bisection to `1e-12`. Components smaller than `delta n` vanish w.h.p.
/// when `lambda* > 1`.
pub fn min_component_fraction(lambda_star: f64, lambda2_sup: f64) -> Result<f64> {
    if !(lambda_star > 0.0) {
        return invalid(format!("lambda* must be positive, got {lambda_star}"));
    }
    if !lambda2_sup.is_finite() {
        return invalid("sup lambda2 must be finite");
    }
    if lambda2_sup < lambda_star {
        return invalid(format!(
            "sup lambda2 = {lambda2_sup} below lambda* = {lambda_star} is inconsistent"
        ));
    }
    let target = lambda_star * lambda_star / (32.0 * lambda2_sup * lambda2_sup);
    if target >= fraction_profile(0.5) {
        return Ok(0.5);
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if fraction_profile(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Binomial Chernoff rate `f(t) = t ln t - t + 1`.
pub fn chernoff_rate(t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return invalid(format!("rate needs t > 0, got {t}"));
    }
    Ok(t * t.ln() - t + 1.0)
}

/// Result of [`isolated_expectation_lower_bound`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IsolatedBound {
    /// `n * int_B (1 - lambda(x) p_n)_+^(n-1) dmu(x)`.
    pub value: f64,
    /// `mu(B)` for `B = {x : lambda(x) < threshold}`.
    pub region_measure: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

/// Lower bound on `E[N_B]`, the expected number of isolated vertices in
/// `B = {x : lambda(x) < threshold}`.
pub fn isolated_expectation_lower_bound(
    kernel: &KernelSpec,
    space: &SpaceSpec,
    n: usize,
    threshold: f64,
) -> Result<IsolatedBound> {
    if n < 2 {
        return invalid(format!("isolated bound needs n >= 2, got {n}"));
    }
    kernel.check_space(space)?;
    let p = density_scale(n);
    let survive = |lambda: f64| {
        let q = lambda * p;
        if q >= 1.0 {
            0.0
        } else {
            ((n - 1) as f64 * (-q).ln_1p()).exp()
        }
    };
    let (integral, measure) = match space.weights() {
        Some(weights) => {
            let mut integral = 0.0;
            let mut measure = 0.0;
            for (i, w) in weights.iter().enumerate() {
                let lambda = kernel.lambda(space, Point::Atom(i))?;
                if *w > 0.0 && lambda < threshold {
                    integral += w * survive(lambda);
                    measure += w;
                }
            }
            (integral, measure)
        }
        None => {
            let lambda = |x: f64| kernel.lambda(space, Point::Coord(x)).unwrap_or(f64::INFINITY);
            let mut breaks = kernel.lambda_breakpoints();
            breaks.extend(level_crossings(&lambda, threshold));
            breaks.sort_by(f64::total_cmp);
            let integral = quadrature::integrate(
                |x| {
                    let l = lambda(x);
                    if l < threshold {
                        survive(l)
                    } else {
                        0.0
                    }
                },
                0.0,
                1.0,
                &breaks,
                DEFAULT_TOL,
            );
            let measure = quadrature::integrate(
                |x| if lambda(x) < threshold { 1.0 } else { 0.0 },
                0.0,
                1.0,
                &breaks,
                DEFAULT_TOL,
            );
            (integral, measure)
        }
    };
    let diagnostic = (measure == 0.0).then(|| format!("region {{lambda < {threshold}}} is empty"));
    Ok(IsolatedBound { value: n as f64 * integral, region_measure: measure, diagnostic })
}

/// Points of `(0, 1)` where `f` crosses `level`, located by a 4096-cell
/// scan and bisection. Makes the region indicator piecewise constant
/// between quadrature breakpoints.
fn level_crossings(f: &impl Fn(f64) -> f64, level: f64) -> Vec<f64> {
    const SCAN: usize = 4096;
    let below = |x: f64| f(x) < level;
    let mut out = Vec::new();
    let mut prev = below(0.0);
    for i in 1..=SCAN {
        let b = i as f64 / SCAN as f64;
        let cur = below(b);
        if cur != prev {
            let (mut lo, mut hi) = ((i - 1) as f64 / SCAN as f64, b);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if below(mid) == prev {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        prev = cur;
    }
    out
}

/// Largest `n` accepted by [`gilbert_connectivity_exact`].
pub const GILBERT_MAX_N: usize = 400;

/// `Pr[G(m, p) connected]` for every `m = 1..=n` (index `m - 1`), by the
/// recursion `P(m) = 1 - sum_{k<m} C(m-1, k-1) P(k) (1-p)^(k(m-k))`,
/// evaluated term-wise in log space.
pub fn gilbert_connectivity_table(n: usize, p: f64) -> Result<Vec<f64>> {
    if !(1..=GILBERT_MAX_N).contains(&n) {
        return invalid(format!("gilbert oracle needs 1 <= n <= {GILBERT_MAX_N}, got {n}"));
    }
    if !(0.0..=1.0).contains(&p) {
        return invalid(format!("edge probability {p} outside [0, 1]"));
    }
    // ln m! for m = 0..n
    let mut ln_fact = vec![0.0f64; n + 1];
    for m in 1..=n {
        ln_fact[m] = ln_fact[m - 1] + (m as f64).ln();
    }
    let ln_q = (-p).ln_1p();
    let mut connected = vec![1.0f64];
    for m in 2..=n {
        let mut disconnected = 0.0;
        for k in 1..m {
            let pk = connected[k - 1];
            if pk == 0.0 {
                continue;
            }
            let ln_binom = ln_fact[m - 1] - ln_fact[k - 1] - ln_fact[m - k];
            let cut = (k * (m - k)) as f64 * ln_q;
            disconnected += (ln_binom + pk.ln() + cut).exp();
        }
        connected.push(clamp_probability(1.0 - disconnected));
    }
    Ok(connected)
}

/// `Pr[G(n, p) connected]`.
pub fn gilbert_connectivity_exact(n: usize, p: f64) -> Result<f64> {
    Ok(*gilbert_connectivity_table(n, p)?.last().expect("table is non-empty"))
}

/// Size limits of [`exact_connectivity_finite`].
pub const FINITE_ORACLE_MAX_N: usize = 6;
pub const FINITE_ORACLE_MAX_ATOMS: usize = 3;

/// Exact `Pr[G(n, K) connected]` on a finite space by brute force: every
/// type assignment of the `n` vertices, and for each, every subset of the
/// `C(n, 2)` possible edges.
pub fn exact_connectivity_finite(space: &SpaceSpec, kernel: &KernelSpec, n: usize) -> Result<f64> {
    let Some(weights) = space.weights() else {
        return invalid("finite-space oracle needs a finite space");
    };
    kernel.check_space(space)?;
    let atoms = weights.len();
    if !(1..=FINITE_ORACLE_MAX_N).contains(&n) || atoms > FINITE_ORACLE_MAX_ATOMS {
        return invalid(format!(
            "finite-space oracle needs 1 <= n <= {FINITE_ORACLE_MAX_N} and at most \
             {FINITE_ORACLE_MAX_ATOMS} atoms, got n={n}, atoms={atoms}"
        ));
    }
    if n == 1 {
        return Ok(1.0);
    }
    let p_n = density_scale(n);
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut types = vec![0usize; n];
    let mut total = 0.0;
    loop {
        let weight: f64 = types.iter().map(|t| weights[*t]).product();
        if weight > 0.0 {
            let probs: Vec<f64> = pairs
                .iter()
                .map(|&(i, j)| {
                    let k = kernel.eval(Point::Atom(types[i]), Point::Atom(types[j]));
                    if k == 0.0 {
                        0.0
                    } else {
                        (k * p_n).min(1.0)
                    }
                })
                .collect();
            let mut adj = [0u8; FINITE_ORACLE_MAX_N];
            total += weight * connected_mass(&pairs, &probs, 0, 1.0, &mut adj, n);
        }
        // next assignment, base `atoms` counter
        let mut pos = 0;
        loop {
            if pos == n {
                return Ok(clamp_probability(total));
            }
            types[pos] += 1;
            if types[pos] < atoms {
                break;
            }
            types[pos] = 0;
            pos += 1;
        }
    }
}

/// Sums the probability of every edge subset (decided from pair `idx` on)
/// whose graph is connected.
fn connected_mass(
    pairs: &[(usize, usize)],
    probs: &[f64],
    idx: usize,
    mass: f64,
    adj: &mut [u8; FINITE_ORACLE_MAX_N],
    n: usize,
) -> f64 {
    if mass == 0.0 {
        return 0.0;
    }
    if idx == pairs.len() {
        return if mask_connected(adj, n) { mass } else { 0.0 };
    }
    let (i, j) = pairs[idx];
    let p = probs[idx];
    let absent = connected_mass(pairs, probs, idx + 1, mass * (1.0 - p), adj, n);
    adj[i] |= 1 << j;
    adj[j] |= 1 << i;
    let present = connected_mass(pairs, probs, idx + 1, mass * p, adj, n);
    adj[i] &= !(1 << j);
    adj[j] &= !(1 << i);
    absent + present
}

fn mask_connected(adj: &[u8; FINITE_ORACLE_MAX_N], n: usize) -> bool {
    let full: u8 = ((1u16 << n) - 1) as u8;
    let mut seen: u8 = 1;
    let mut frontier: u8 = 1;
    while frontier != 0 {
        let v = frontier.trailing_zeros() as usize;
        frontier &= frontier - 1;
        let fresh = adj[v] & !seen;
        seen |= fresh;
        frontier |= fresh;
    }
    seen == full
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_k_examples() {
        assert_eq!(cut_bound_small_k(&BoundInputs::new(100, 3, 0.0, 0.0).unwrap()), 1.0);
        let v = cut_bound_small_k(&BoundInputs::new(1000, 1, 1.0, 1.0).unwrap());
        // high-precision reference: (1 - p + p^2/2)^999 with p = ln(1000)/1000
        assert!((v - 1.006_987_219_281_649_4e-3).abs() < 1e-15, "{v}");
        let inputs = BoundInputs::new(1000, 999, 1.0, 1.0).unwrap();
        let p = inputs.p_n;
        let base = 1.0 - 999.0 * p + 999.0f64.powi(2) * p * p / 2.0;
        assert_eq!(cut_bound_small_k(&inputs), base.clamp(0.0, 1.0));
    }

    #[test]
    fn large_k_examples() {
        assert_eq!(cut_bound_large_k(&BoundInputs::new(100, 5, 0.0, 1.0).unwrap()).unwrap(), 1.0);
        let v = cut_bound_large_k(&BoundInputs::new(1000, 500, 2.0, 2.0).unwrap()).unwrap();
        // e^-1727.0 + 500 e^-62.5
        assert!((v - 3.593_890_869_530_494e-25).abs() < 1e-37, "{v}");
        assert!(cut_bound_large_k(&BoundInputs::new(1000, 501, 2.0, 2.0).unwrap()).is_err());
        assert!(cut_bound_large_k(&BoundInputs::new(10, 2, 1.0, 0.0).unwrap()).is_err());
    }

    #[test]
    fn bound_inputs_guard() {
        assert!(BoundInputs::new(10, 0, 1.0, 1.0).is_err());
        assert!(BoundInputs::new(10, 10, 1.0, 1.0).is_err());
        assert!(BoundInputs::new(10, 2, -1.0, 1.0).is_err());
    }

    #[test]
    fn delta_examples() {
        let d = min_component_fraction(1.0, 1.0).unwrap();
        assert!((d - 4.954_442_394_962_046e-3).abs() < 1e-10, "{d}");
        // lambda*^2 / (32 sup^2) >= f(1/2) needs lambda* >> sup, which is
        // inconsistent; the cap is still reachable through the raw profile
        assert!(fraction_profile(0.5) > 0.846 && fraction_profile(0.5) < 0.847);
        assert!(min_component_fraction(0.0, 1.0).is_err());
        assert!(min_component_fraction(1.0, 0.5).is_err());
        let tiny = min_component_fraction(1e-3, 1.0).unwrap();
        let small = min_component_fraction(1e-2, 1.0).unwrap();
        assert!(tiny > 0.0 && tiny < small);
    }

    #[test]
    fn rate_examples() {
        assert_eq!(chernoff_rate(1.0).unwrap(), 0.0);
        assert!((chernoff_rate(0.5).unwrap() - 0.153_426_409_720_027_35).abs() < 1e-15);
        assert!((chernoff_rate(2.0).unwrap() - 0.386_294_361_119_890_6).abs() < 1e-15);
        assert!(chernoff_rate(0.0).is_err());
    }

    #[test]
    fn isolated_bound_examples() {
        let k = KernelSpec::constant(0.5).unwrap();
        let b = isolated_expectation_lower_bound(&k, &SpaceSpec::Interval, 100, 1.0).unwrap();
        // 100 (1 - 0.5 ln(100)/100)^99, evaluated at 40 digits
        assert!((b.value - 9.963_780_760_477_606).abs() < 1e-9, "{}", b.value);
        assert_eq!(b.region_measure, 1.0);

        let k = KernelSpec::constant(2.0).unwrap();
        let b = isolated_expectation_lower_bound(&k, &SpaceSpec::Interval, 100, 1.0).unwrap();
        assert_eq!(b.value, 0.0);
        assert!(b.diagnostic.is_some());

        let k = KernelSpec::constant(0.3).unwrap();
        let b = isolated_expectation_lower_bound(&k, &SpaceSpec::Interval, 2, 1.0).unwrap();
        assert!(b.value >= 0.0);
    }

    #[test]
    fn isolated_bound_on_counterexample_region() {
        // lambda(x) = c/2 - c ln x above 1/2, so {lambda < t} = (exp((c/2 - t)/c), 1)
        let k = KernelSpec::counterexample(1.0).unwrap();
        let b = isolated_expectation_lower_bound(&k, &SpaceSpec::Interval, 1000, 0.6).unwrap();
        let expected_measure = 1.0 - (-0.1f64).exp();
        assert!((b.region_measure - expected_measure).abs() < 1e-5, "{}", b.region_measure);
        assert!(b.value > 0.0);
    }

    #[test]
    fn gilbert_examples() {
        assert_eq!(gilbert_connectivity_exact(1, 0.3).unwrap(), 1.0);
        assert!((gilbert_connectivity_exact(2, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!((gilbert_connectivity_exact(3, 1.0).unwrap() - 1.0).abs() < 1e-15);
        // 4 of the 8 labelled graphs on 3 vertices are connected
        assert!((gilbert_connectivity_exact(3, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(gilbert_connectivity_exact(5, 0.0).unwrap(), 0.0);
        assert!(gilbert_connectivity_exact(401, 0.5).is_err());
        assert!(gilbert_connectivity_exact(0, 0.5).is_err());
        assert!(gilbert_connectivity_exact(5, 1.5).is_err());
    }

    #[test]
    fn gilbert_reference_values() {
        // 40-digit evaluations of the same recursion
        let p150 = 150f64.ln() / 150.0;
        assert!((gilbert_connectivity_exact(150, p150).unwrap() - 0.385_482_315_743_121).abs() < 1e-12);
        let p300 = 300f64.ln() / 300.0;
        assert!((gilbert_connectivity_exact(300, p300).unwrap() - 0.380_358_895_117_289_5).abs() < 1e-12);
    }

    #[test]
    fn finite_oracle_examples() {
        let one = SpaceSpec::finite(vec![1.0]).unwrap();
        let k = KernelSpec::block(vec![vec![2.0]]).unwrap();
        assert_eq!(exact_connectivity_finite(&one, &k, 1).unwrap(), 1.0);
        let zero = KernelSpec::block(vec![vec![0.0]]).unwrap();
        assert_eq!(exact_connectivity_finite(&one, &zero, 3).unwrap(), 0.0);
        let p = (2.0 * 5f64.ln() / 5.0).min(1.0);
        let brute = exact_connectivity_finite(&one, &k, 5).unwrap();
        let recursion = gilbert_connectivity_exact(5, p).unwrap();
        assert!((brute - recursion).abs() < 1e-12);
        assert!((brute - 0.916_637_656_430_310_1).abs() < 1e-12);
    }

    #[test]
    fn finite_oracle_guards() {
        let one = SpaceSpec::finite(vec![1.0]).unwrap();
        let k = KernelSpec::block(vec![vec![2.0]]).unwrap();
        assert!(exact_connectivity_finite(&one, &k, 7).is_err());
        let four = SpaceSpec::finite(vec![0.25; 4]).unwrap();
        let k4 = KernelSpec::block(vec![vec![1.0; 4]; 4]).unwrap();
        assert!(exact_connectivity_finite(&four, &k4, 3).is_err());
        assert!(exact_connectivity_finite(&SpaceSpec::Interval, &KernelSpec::constant(1.0).unwrap(), 3).is_err());
    }

    #[test]
    fn finite_oracle_reducible_block() {
        // block-diagonal kernel: connected only if all vertices share a type
        let space = SpaceSpec::finite(vec![0.5, 0.5]).unwrap();
        let k = KernelSpec::block(vec![vec![1e6, 0.0], vec![0.0, 1e6]]).unwrap();
        let v = exact_connectivity_finite(&space, &k, 4).unwrap();
        assert!((v - 2.0 * 0.5f64.powi(4)).abs() < 1e-12);
    }
}
