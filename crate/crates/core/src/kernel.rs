//! Kernels `K` on `S x S` and their functionals `lambda`, `lambda2`, the
//! isolation parameter `lambda* = essinf lambda` and `sup lambda2`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, IrgError, Result};
use crate::quadrature::{self, Improper, DEFAULT_TOL};
use crate::space::{torus_distance, Point, SpaceSpec};

const SYMMETRY_TOL: f64 = 1e-12;

/// A symmetric nonnegative kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", try_from = "RawKernel")]
pub enum KernelSpec {
    /// `K = c` on any space.
    Constant { c: f64 },
    /// `K(i, j) = matrix[i][j]` on a finite space.
    Block { matrix: Vec<Vec<f64>> },
    /// `K(x, y) = c * 1[d(x, y) <= r]` on the torus.
    TorusBand { c: f64, r: f64 },
    /// `K(x, y) = h(d(x, y))` on the torus with `h` piecewise constant:
    /// `h(d) = values[i]` for `d` in `(breakpoints[i-1], breakpoints[i]]`,
    /// with implicit end points `0` and `1/2`.
    TorusProfile { breakpoints: Vec<f64>, values: Vec<f64> },
    /// `(c/x) 1[x/2 <= y <= x] + (c/y) 1[y/2 <= x <= y]` on the interval.
    /// Its `lambda*` is `c/2` but `lambda2` is unbounded near 0.
    Counterexample { c: f64 },
    Scaled { base: Box<KernelSpec>, factor: f64 },
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum RawKernel {
    Constant { c: f64 },
    Block { matrix: Vec<Vec<f64>> },
    TorusBand { c: f64, r: f64 },
    TorusProfile { breakpoints: Vec<f64>, values: Vec<f64> },
    Counterexample { c: f64 },
    Scaled { base: Box<KernelSpec>, factor: f64 },
}

impl TryFrom<RawKernel> for KernelSpec {
    type Error = IrgError;

    fn try_from(raw: RawKernel) -> Result<Self> {
        let k = match raw {
            RawKernel::Constant { c } => KernelSpec::Constant { c },
            RawKernel::Block { matrix } => KernelSpec::Block { matrix },
            RawKernel::TorusBand { c, r } => KernelSpec::TorusBand { c, r },
            RawKernel::TorusProfile { breakpoints, values } => {
                KernelSpec::TorusProfile { breakpoints, values }
            }
            RawKernel::Counterexample { c } => KernelSpec::Counterexample { c },
            RawKernel::Scaled { base, factor } => KernelSpec::Scaled { base, factor },
        };
        k.validate()?;
        Ok(k)
    }
}

fn check_scale(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return invalid(format!("{name} = {v} must be a finite nonnegative number"));
    }
    Ok(())
}

/// How a [`KernelFunctionals`] value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalMethod {
    ClosedForm,
    GridQuadrature,
}

/// `lambda*` and `sup lambda2` of a kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelFunctionals {
    pub lambda_star: f64,
    /// `f64::INFINITY` when `lambda2` is unbounded; serialized as `"inf"`.
    #[serde(serialize_with = "ser_extended", deserialize_with = "de_extended")]
    pub lambda2_sup: f64,
    pub method: FunctionalMethod,
}

fn ser_extended<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

fn de_extended<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Ext {
        Num(f64),
        Str(String),
    }
    match Ext::deserialize(d)? {
        Ext::Num(v) => Ok(v),
        Ext::Str(s) if s == "inf" => Ok(f64::INFINITY),
        Ext::Str(s) => Err(serde::de::Error::custom(format!("expected number or \"inf\", got {s}"))),
    }
}

/// Verdict of [`KernelSpec::is_l2`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct L2Verdict {
    pub is_l2: bool,
    /// `int lambda2^2 dmu = ||K||_2^2` when finite.
    pub squared_norm: Option<f64>,
    pub diagnostic: String,
}

impl KernelSpec {
    pub fn constant(c: f64) -> Result<Self> {
        let k = KernelSpec::Constant { c };
        k.validate()?;
        Ok(k)
    }

    pub fn block(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let k = KernelSpec::Block { matrix };
        k.validate()?;
        Ok(k)
    }

    pub fn torus_band(c: f64, r: f64) -> Result<Self> {
        let k = KernelSpec::TorusBand { c, r };
        k.validate()?;
        Ok(k)
    }

    pub fn torus_profile(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let k = KernelSpec::TorusProfile { breakpoints, values };
        k.validate()?;
        Ok(k)
    }

    pub fn counterexample(c: f64) -> Result<Self> {
        let k = KernelSpec::Counterexample { c };
        k.validate()?;
        Ok(k)
    }

    /// Pointwise multiple `factor * self`.
    pub fn scaled(self, factor: f64) -> Result<Self> {
        check_scale("factor", factor)?;
        Ok(KernelSpec::Scaled { base: Box::new(self), factor })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Constant { c } | KernelSpec::Counterexample { c } => check_scale("c", *c),
            KernelSpec::Block { matrix } => {
                let m = matrix.len();
                if m == 0 {
                    return invalid("block matrix is empty");
                }
                for (i, row) in matrix.iter().enumerate() {
                    if row.len() != m {
                        return invalid(format!("block matrix row {i} has {} entries, expected {m}", row.len()));
                    }
                    for (j, v) in row.iter().enumerate() {
                        check_scale("block entry", *v)?;
                        if (v - matrix[j][i]).abs() > SYMMETRY_TOL {
                            return invalid(format!("block matrix not symmetric at ({i},{j})"));
                        }
                    }
                }
                Ok(())
            }
            KernelSpec::TorusBand { c, r } => {
                check_scale("c", *c)?;
                if !(*r > 0.0 && *r <= 0.5) {
                    return invalid(format!("band radius {r} outside (0, 1/2]"));
                }
                Ok(())
            }
            KernelSpec::TorusProfile { breakpoints, values } => {
                if values.len() != breakpoints.len() + 1 {
                    return invalid(format!(
                        "profile has {} breakpoints and {} values; need one more value than breakpoints",
                        breakpoints.len(),
                        values.len()
                    ));
                }
                let mut prev = 0.0;
                for b in breakpoints {
                    if !(*b > prev && *b < 0.5) {
                        return invalid("profile breakpoints must increase strictly inside (0, 1/2)");
                    }
                    prev = *b;
                }
                values.iter().try_for_each(|v| check_scale("profile value", *v))
            }
            KernelSpec::Scaled { base, factor } => {
                check_scale("factor", *factor)?;
                base.validate()
            }
        }
    }

    fn root(&self) -> &KernelSpec {
        match self {
            KernelSpec::Scaled { base, .. } => base.root(),
            k => k,
        }
    }

    /// A natural space for this kernel when none is given.
    pub fn default_space(&self) -> SpaceSpec {
        match self.root() {
            KernelSpec::Constant { .. } | KernelSpec::Counterexample { .. } => SpaceSpec::Interval,
            KernelSpec::TorusBand { .. } | KernelSpec::TorusProfile { .. } => SpaceSpec::Torus,
            KernelSpec::Block { matrix } => {
                let m = matrix.len();
                SpaceSpec::Finite { weights: vec![1.0 / m as f64; m], labels: None }
            }
            KernelSpec::Scaled { .. } => unreachable!(),
        }
    }

    /// Checks that the kernel is defined on `space`.
    pub fn check_space(&self, space: &SpaceSpec) -> Result<()> {
        let ok = match (self.root(), space) {
            (KernelSpec::Constant { .. }, _) => true,
            (KernelSpec::Block { matrix }, SpaceSpec::Finite { weights, .. }) => matrix.len() == weights.len(),
            (KernelSpec::TorusBand { .. } | KernelSpec::TorusProfile { .. }, SpaceSpec::Torus) => true,
            (KernelSpec::Counterexample { .. }, SpaceSpec::Interval) => true,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            invalid(format!("kernel {self} is not defined on space {space:?}"))
        }
    }

    /// `K(x, y)`, checking that both points have the right kind.
    pub fn evaluate(&self, x: Point, y: Point) -> Result<f64> {
        let atoms = matches!(self.root(), KernelSpec::Block { .. });
        let ok = match (x, y) {
            (Point::Atom(i), Point::Atom(j)) => match self.root() {
                KernelSpec::Block { matrix } => i < matrix.len() && j < matrix.len(),
                KernelSpec::Constant { .. } => true,
                _ => false,
            },
            (Point::Coord(a), Point::Coord(b)) => {
                !atoms && (0.0..1.0).contains(&a) && (0.0..1.0).contains(&b)
            }
            _ => false,
        };
        if !ok {
            return invalid(format!("points {x:?}, {y:?} do not belong to the domain of {self}"));
        }
        Ok(self.eval(x, y))
    }

    /// `K(x, y)` without domain checks. Mismatched points evaluate to 0.
    #[inline]
    pub fn eval(&self, x: Point, y: Point) -> f64 {
        match self {
            KernelSpec::Constant { c } => *c,
            KernelSpec::Block { matrix } => match (x, y) {
                (Point::Atom(i), Point::Atom(j)) => matrix[i.min(j)][i.max(j)],
                _ => 0.0,
            },
            KernelSpec::Scaled { base, factor } => {
                if *factor == 0.0 {
                    0.0
                } else {
                    factor * base.eval(x, y)
                }
            }
            _ => match (x, y) {
                (Point::Coord(a), Point::Coord(b)) => self.eval_coords(a, b),
                _ => 0.0,
            },
        }
    }

    #[inline]
    fn eval_coords(&self, x: f64, y: f64) -> f64 {
        match self {
            KernelSpec::Constant { c } => *c,
            KernelSpec::TorusBand { c, r } => {
                if torus_distance(x, y) <= *r {
                    *c
                } else {
                    0.0
                }
            }
            KernelSpec::TorusProfile { breakpoints, values } => {
                profile_value(breakpoints, values, torus_distance(x, y))
            }
            KernelSpec::Counterexample { c } => counterexample_value(*c, x, y),
            KernelSpec::Scaled { base, factor } => {
                if *factor == 0.0 {
                    0.0
                } else {
                    factor * base.eval_coords(x, y)
                }
            }
            KernelSpec::Block { .. } => 0.0,
        }
    }

    /// Global supremum of `K`, if finite.
    pub fn sup(&self) -> Option<f64> {
        match self {
            KernelSpec::Constant { c } | KernelSpec::TorusBand { c, .. } => Some(*c),
            KernelSpec::Block { matrix } => {
                Some(matrix.iter().flatten().copied().fold(0.0, f64::max))
            }
            KernelSpec::TorusProfile { values, .. } => Some(values.iter().copied().fold(0.0, f64::max)),
            KernelSpec::Counterexample { c } => (*c == 0.0).then_some(0.0),
            KernelSpec::Scaled { base, factor } => {
                if *factor == 0.0 {
                    Some(0.0)
                } else {
                    base.sup().map(|s| s * factor)
                }
            }
        }
    }

    /// For kernels whose support hugs the diagonal on the interval: given
    /// `x`, returns `(hi, bound)` such that `K(x, y) = 0` for `y > hi` and
    /// `K(x, y) <= bound` for `x < y <= hi`.
    pub fn sorted_band(&self, x: f64) -> Option<(f64, f64)> {
        match self {
            KernelSpec::Counterexample { c } => {
                if x <= 0.0 || *c == 0.0 {
                    Some((x, 0.0))
                } else {
                    Some((2.0 * x, c / x))
                }
            }
            KernelSpec::Scaled { base, factor } => base.sorted_band(x).map(|(hi, b)| {
                if *factor == 0.0 {
                    (x, 0.0)
                } else {
                    (hi, b * factor)
                }
            }),
            _ => None,
        }
    }

    /// Discontinuities of `y -> K(x, y)` on `[0, 1)`.
    pub fn section_breakpoints(&self, x: f64) -> Vec<f64> {
        let wrap = |t: f64| t.rem_euclid(1.0);
        match self.root() {
            KernelSpec::TorusBand { r, .. } => vec![wrap(x - r), wrap(x + r), wrap(x + 0.5)],
            KernelSpec::TorusProfile { breakpoints, .. } => breakpoints
                .iter()
                .flat_map(|b| [wrap(x - b), wrap(x + b)])
                .chain([wrap(x + 0.5)])
                .collect(),
            KernelSpec::Counterexample { .. } => {
                vec![x / 2.0, x, 2.0 * x].into_iter().filter(|t| *t < 1.0).collect()
            }
            _ => Vec::new(),
        }
    }

    /// Points where `lambda` or `lambda2` may fail to be smooth.
    pub fn lambda_breakpoints(&self) -> Vec<f64> {
        match self.root() {
            KernelSpec::Counterexample { .. } => vec![0.5],
            _ => Vec::new(),
        }
    }

    /// `lambda(x) = int K(x, y) dmu(y)`, in closed form.
    pub fn lambda(&self, space: &SpaceSpec, x: Point) -> Result<f64> {
        self.check_space(space)?;
        space.check_point(x)?;
        Ok(self.lambda_closed(space, x))
    }

    /// `lambda2(x) = (int K(x, y)^2 dmu(y))^(1/2)`, in closed form.
    pub fn lambda2(&self, space: &SpaceSpec, x: Point) -> Result<f64> {
        self.check_space(space)?;
        space.check_point(x)?;
        Ok(self.lambda2_closed(space, x))
    }

    fn lambda_closed(&self, space: &SpaceSpec, x: Point) -> f64 {
        match self {
            KernelSpec::Constant { c } => *c,
            KernelSpec::Block { .. } => self.finite_moment(space, x, 1),
            KernelSpec::TorusBand { c, r } => c * 2.0 * r,
            KernelSpec::TorusProfile { breakpoints, values } => profile_moment(breakpoints, values, 1),
            KernelSpec::Counterexample { c } => {
                let x = x.coord().unwrap_or(0.0);
                if x <= 0.5 {
                    c / 2.0 + c * std::f64::consts::LN_2
                } else {
                    c / 2.0 - c * x.ln()
                }
            }
            KernelSpec::Scaled { base, factor } => {
                if *factor == 0.0 {
                    0.0
                } else {
                    factor * base.lambda_closed(space, x)
                }
            }
        }
    }

    fn lambda2_closed(&self, space: &SpaceSpec, x: Point) -> f64 {
        match self {
            KernelSpec::Constant { c } => *c,
            KernelSpec::Block { .. } => self.finite_moment(space, x, 2).sqrt(),
            KernelSpec::TorusBand { c, r } => c * (2.0 * r).sqrt(),
            KernelSpec::TorusProfile { breakpoints, values } => {
                profile_moment(breakpoints, values, 2).sqrt()
            }
            KernelSpec::Counterexample { c } => counterexample_lambda2_squared(*c, x.coord().unwrap_or(0.0)).sqrt(),
            KernelSpec::Scaled { base, factor } => {
                if *factor == 0.0 {
                    0.0
                } else {
                    factor * base.lambda2_closed(space, x)
                }
            }
        }
    }

    fn finite_moment(&self, space: &SpaceSpec, x: Point, power: i32) -> f64 {
        let weights = space.weights().unwrap_or(&[]);
        (0..weights.len())
            .map(|j| weights[j] * self.eval(x, Point::Atom(j)).powi(power))
            .sum()
    }

    /// `lambda(x)` by quadrature over `y` (exact sum on finite spaces).
    pub fn lambda_quadrature(&self, space: &SpaceSpec, x: Point) -> Result<f64> {
        self.moment_quadrature(space, x, 1)
    }

    /// `lambda2(x)` by quadrature over `y` (exact sum on finite spaces).
    pub fn lambda2_quadrature(&self, space: &SpaceSpec, x: Point) -> Result<f64> {
        Ok(self.moment_quadrature(space, x, 2)?.sqrt())
    }

    fn moment_quadrature(&self, space: &SpaceSpec, x: Point, power: i32) -> Result<f64> {
        self.check_space(space)?;
        space.check_point(x)?;
        match x {
            Point::Atom(_) => Ok(self.finite_moment(space, x, power)),
            Point::Coord(a) => Ok(quadrature::integrate(
                |y| self.eval_coords(a, y).powi(power),
                0.0,
                1.0,
                &self.section_breakpoints(a),
                DEFAULT_TOL,
            )),
        }
    }

    /// `lambda*` and `sup lambda2`.
    ///
    /// Finite spaces are handled exactly. On continuous spaces the built-in
    /// variants all have closed forms, which are authoritative; `grid_size`
    /// is only validated here (see [`Self::isolation_parameter_grid`]).
    pub fn isolation_parameter(&self, space: &SpaceSpec, grid_size: usize) -> Result<KernelFunctionals> {
        self.check_space(space)?;
        if let Some(weights) = space.weights() {
            return Ok(self.finite_functionals(space, weights));
        }
        if grid_size < 2 {
            return invalid("grid size must be at least 2 on continuous spaces");
        }
        match self.closed_functionals() {
            Some((lambda_star, lambda2_sup)) => Ok(KernelFunctionals {
                lambda_star,
                lambda2_sup,
                method: FunctionalMethod::ClosedForm,
            }),
            None => self.isolation_parameter_grid(space, grid_size),
        }
    }

    fn finite_functionals(&self, space: &SpaceSpec, weights: &[f64]) -> KernelFunctionals {
        let support = (0..weights.len()).filter(|i| weights[*i] > 0.0);
        let mut lambda_star = f64::INFINITY;
        let mut lambda2_sup: f64 = 0.0;
        for i in support {
            lambda_star = lambda_star.min(self.lambda_closed(space, Point::Atom(i)));
            lambda2_sup = lambda2_sup.max(self.lambda2_closed(space, Point::Atom(i)));
        }
        KernelFunctionals { lambda_star, lambda2_sup, method: FunctionalMethod::ClosedForm }
    }

    fn closed_functionals(&self) -> Option<(f64, f64)> {
        match self {
            KernelSpec::Constant { c } => Some((*c, *c)),
            KernelSpec::TorusBand { c, r } => Some((c * 2.0 * r, c * (2.0 * r).sqrt())),
            KernelSpec::TorusProfile { breakpoints, values } => Some((
                profile_moment(breakpoints, values, 1),
                profile_moment(breakpoints, values, 2).sqrt(),
            )),
            KernelSpec::Counterexample { c } => {
                Some((c / 2.0, if *c == 0.0 { 0.0 } else { f64::INFINITY }))
            }
            KernelSpec::Scaled { base, factor } => base.closed_functionals().map(|(l, l2)| {
                if *factor == 0.0 {
                    (0.0, 0.0)
                } else {
                    (factor * l, factor * l2)
                }
            }),
            KernelSpec::Block { .. } => None,
        }
    }

    /// Grid estimate of `lambda*` and `sup lambda2` on a continuous space:
    /// quadrature values at the `grid_size` cell midpoints of `[0, 1)` and at
    /// every declared breakpoint. An approximation of the essential infimum.
    pub fn isolation_parameter_grid(&self, space: &SpaceSpec, grid_size: usize) -> Result<KernelFunctionals> {
        self.check_space(space)?;
        if !space.is_continuous() {
            return invalid("grid estimate applies to continuous spaces only");
        }
        if grid_size < 2 {
            return invalid("grid size must be at least 2");
        }
        let grid = (0..grid_size)
            .map(|i| (i as f64 + 0.5) / grid_size as f64)
            .chain(self.lambda_breakpoints());
        let mut lambda_star = f64::INFINITY;
        let mut lambda2_sup: f64 = 0.0;
        for x in grid {
            let p = Point::Coord(x);
            lambda_star = lambda_star.min(self.lambda_quadrature(space, p)?);
            lambda2_sup = lambda2_sup.max(self.lambda2_quadrature(space, p)?);
        }
        Ok(KernelFunctionals { lambda_star, lambda2_sup, method: FunctionalMethod::GridQuadrature })
    }

    /// Whether `K` is in `L^2(mu x mu)`, via `int lambda2(x)^2 dmu(x)` with
    /// divergence probing at the ends of every smooth piece.
    pub fn is_l2(&self, space: &SpaceSpec) -> Result<L2Verdict> {
        self.check_space(space)?;
        if let Some(weights) = space.weights() {
            let norm = (0..weights.len())
                .map(|i| weights[i] * self.finite_moment(space, Point::Atom(i), 2))
                .sum::<f64>();
            return Ok(L2Verdict {
                is_l2: true,
                squared_norm: Some(norm),
                diagnostic: "finite space: K takes finitely many finite values".into(),
            });
        }
        let integrand = |x: f64| self.lambda2_closed(space, Point::Coord(x)).powi(2);
        Ok(match quadrature::integrate_improper(integrand, 0.0, 1.0, &self.lambda_breakpoints()) {
            Improper::Finite(v) => L2Verdict {
                is_l2: true,
                squared_norm: Some(v),
                diagnostic: format!("int lambda2^2 dmu = {v:.9}"),
            },
            Improper::Divergent => L2Verdict {
                is_l2: false,
                squared_norm: None,
                diagnostic: "lambda2^2 not in L1: int K^2 d(mu x mu) diverges, lambda2 unbounded".into(),
            },
        })
    }
}

#[inline]
fn profile_value(breakpoints: &[f64], values: &[f64], d: f64) -> f64 {
    values[breakpoints.partition_point(|b| *b < d)]
}

/// `int h(d)^power` against the law of the circular distance (uniform on `[0, 1/2]`, density 2).
fn profile_moment(breakpoints: &[f64], values: &[f64], power: i32) -> f64 {
    let mut lo = 0.0;
    let mut total = 0.0;
    for (i, v) in values.iter().enumerate() {
        let hi = breakpoints.get(i).copied().unwrap_or(0.5);
        total += 2.0 * (hi - lo) * v.powi(power);
        lo = hi;
    }
    total
}

#[inline]
fn counterexample_value(c: f64, x: f64, y: f64) -> f64 {
    if c == 0.0 {
        return 0.0;
    }
    let mut k = 0.0;
    if x / 2.0 <= y && y <= x {
        k += c / x;
    }
    if y / 2.0 <= x && x <= y {
        k += c / y;
    }
    k
}

/// `lambda2(x)^2`: `c^2/x` for `x <= 1/2`, `3c^2/(2x) - c^2` above.
fn counterexample_lambda2_squared(c: f64, x: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else if x <= 0.5 {
        c * c / x
    } else {
        1.5 * c * c / x - c * c
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Constant { c } => write!(f, "constant:c={c}"),
            KernelSpec::Counterexample { c } => write!(f, "counterexample:c={c}"),
            KernelSpec::TorusBand { c, r } => write!(f, "band:c={c},r={r}"),
            KernelSpec::TorusProfile { breakpoints, values } => {
                let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("/");
                write!(f, "profile:b={},v={}", join(breakpoints), join(values))
            }
            KernelSpec::Block { matrix } => {
                let rows: Vec<String> = matrix
                    .iter()
                    .map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
                    .collect();
                write!(f, "block:{}", rows.join(";"))
            }
            KernelSpec::Scaled { base, factor } => write!(f, "{factor}*{base}"),
        }
    }
}

fn parse_num(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| IrgError::InvalidInput(format!("not a number: {s:?}")))
}

fn parse_params(body: &str) -> Result<Vec<(&str, &str)>> {
    body.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| IrgError::InvalidInput(format!("expected key=value, got {p:?}")))
        })
        .collect()
}

fn param(params: &[(&str, &str)], key: &str) -> Result<f64> {
    let (_, v) = params
        .iter()
        .find(|(k, _)| *k == key)
        .ok_or_else(|| IrgError::InvalidInput(format!("missing parameter {key}")))?;
    parse_num(v)
}

impl FromStr for KernelSpec {
    type Err = IrgError;

    /// Parses JSON (`{"type":"constant","c":2}`) or shorthand:
    /// `constant:c=2`, `counterexample:c=4`, `band:c=4,r=0.25`,
    /// `profile:b=0.1/0.2,v=3/2/0`, `block:3,1;1,3`, and `t*<kernel>` for scaling.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return Ok(serde_json::from_str(s)?);
        }
        if let Some((factor, rest)) = s.split_once('*') {
            if !factor.contains(':') {
                return rest.parse::<KernelSpec>()?.scaled(parse_num(factor)?);
            }
        }
        let (name, body) = s.split_once(':').unwrap_or((s, ""));
        match name {
            "constant" => KernelSpec::constant(param(&parse_params(body)?, "c")?),
            "counterexample" => KernelSpec::counterexample(param(&parse_params(body)?, "c")?),
            "band" | "torus_band" => {
                let p = parse_params(body)?;
                KernelSpec::torus_band(param(&p, "c")?, param(&p, "r")?)
            }
            "profile" | "torus_profile" => {
                let p = parse_params(body)?;
                let list = |key: &str| -> Result<Vec<f64>> {
                    let (_, v) = p
                        .iter()
                        .find(|(k, _)| *k == key)
                        .ok_or_else(|| IrgError::InvalidInput(format!("missing parameter {key}")))?;
                    v.split('/').filter(|t| !t.is_empty()).map(parse_num).collect()
                };
                KernelSpec::torus_profile(list("b").unwrap_or_default(), list("v")?)
            }
            "block" => {
                let matrix = body
                    .split(';')
                    .map(|row| row.split(',').map(parse_num).collect::<Result<Vec<_>>>())
                    .collect::<Result<Vec<_>>>()?;
                KernelSpec::block(matrix)
            }
            other => invalid(format!("unknown kernel {other:?}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Point {
        Point::Coord(x)
    }

    #[test]
    fn evaluate_examples() {
        let k = KernelSpec::constant(3.0).unwrap();
        assert_eq!(k.evaluate(c(0.1), c(0.7)).unwrap(), 3.0);

        let cex = KernelSpec::counterexample(2.0).unwrap();
        // (2/0.5) * 1[0.25 <= 0.3 <= 0.5] + (2/0.3) * 1[0.15 <= 0.5 <= 0.3]
        assert_eq!(cex.evaluate(c(0.5), c(0.3)).unwrap(), 4.0);
        assert_eq!(cex.evaluate(c(0.3), c(0.5)).unwrap(), 4.0);
        assert_eq!(cex.evaluate(c(0.5), c(0.2)).unwrap(), 0.0);

        let band = KernelSpec::torus_band(4.0, 0.125).unwrap();
        assert_eq!(band.evaluate(c(0.0), c(0.9)).unwrap(), 4.0);
        assert_eq!(band.evaluate(c(0.0), c(0.5)).unwrap(), 0.0);
    }

    #[test]
    fn evaluate_rejects_foreign_points() {
        let block = KernelSpec::block(vec![vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(block.evaluate(Point::Atom(0), Point::Atom(2)).is_err());
        assert!(block.evaluate(c(0.1), c(0.2)).is_err());
        let band = KernelSpec::torus_band(1.0, 0.1).unwrap();
        assert!(band.evaluate(Point::Atom(0), c(0.2)).is_err());
    }

    #[test]
    fn lambda_examples() {
        let k = KernelSpec::constant(3.0).unwrap();
        assert_eq!(k.lambda(&SpaceSpec::Interval, c(0.4)).unwrap(), 3.0);
        assert_eq!(k.lambda2(&SpaceSpec::Interval, c(0.4)).unwrap(), 3.0);

        let cex = KernelSpec::counterexample(2.0).unwrap();
        let l = cex.lambda(&SpaceSpec::Interval, c(0.25)).unwrap();
        assert!((l - 2.386_294_361_119_891).abs() < 1e-12);

        let band = KernelSpec::torus_band(4.0, 0.125).unwrap();
        assert!((band.lambda(&SpaceSpec::Torus, c(0.3)).unwrap() - 1.0).abs() < 1e-15);
        assert!((band.lambda2(&SpaceSpec::Torus, c(0.3)).unwrap() - 2.0).abs() < 1e-15);

        let cex1 = KernelSpec::counterexample(1.0).unwrap();
        assert!((cex1.lambda2(&SpaceSpec::Interval, c(0.25)).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn quadrature_agrees_with_closed_forms() {
        let cex = KernelSpec::counterexample(2.0).unwrap();
        for x in [0.05, 0.25, 0.5, 0.51, 0.8, 0.99] {
            let closed = cex.lambda(&SpaceSpec::Interval, c(x)).unwrap();
            let quad = cex.lambda_quadrature(&SpaceSpec::Interval, c(x)).unwrap();
            assert!((closed - quad).abs() < 1e-6, "x={x}: {closed} vs {quad}");
            let closed2 = cex.lambda2(&SpaceSpec::Interval, c(x)).unwrap();
            let quad2 = cex.lambda2_quadrature(&SpaceSpec::Interval, c(x)).unwrap();
            assert!((closed2 - quad2).abs() < 1e-6, "x={x}: {closed2} vs {quad2}");
        }
    }

    #[test]
    fn functionals() {
        let k = KernelSpec::constant(2.0).unwrap();
        let f = k.isolation_parameter(&SpaceSpec::Interval, 16).unwrap();
        assert_eq!((f.lambda_star, f.lambda2_sup), (2.0, 2.0));

        let cex = KernelSpec::counterexample(2.0).unwrap();
        let f = cex.isolation_parameter(&SpaceSpec::Interval, 16).unwrap();
        assert_eq!(f.lambda_star, 1.0);
        assert!(f.lambda2_sup.is_infinite());
        assert_eq!(f.method, FunctionalMethod::ClosedForm);

        let block = KernelSpec::block(vec![vec![2.0, 0.5], vec![0.5, 2.0]]).unwrap();
        let space = SpaceSpec::finite(vec![0.5, 0.5]).unwrap();
        let f = block.isolation_parameter(&space, 0).unwrap();
        assert_eq!(f.lambda_star, 1.25);
    }

    #[test]
    fn finite_functionals_skip_null_atoms() {
        let block = KernelSpec::block(vec![vec![0.0, 0.0], vec![0.0, 3.0]]).unwrap();
        let space = SpaceSpec::finite(vec![0.0, 1.0]).unwrap();
        let f = block.isolation_parameter(&space, 0).unwrap();
        assert_eq!((f.lambda_star, f.lambda2_sup), (3.0, 3.0));
    }

    #[test]
    fn grid_estimate_of_counterexample() {
        let cex = KernelSpec::counterexample(2.0).unwrap();
        let f = cex.isolation_parameter_grid(&SpaceSpec::Interval, 200).unwrap();
        assert_eq!(f.method, FunctionalMethod::GridQuadrature);
        // grid minimum sits at x = 0.9975: c/2 - c ln x
        assert!((f.lambda_star - (1.0 - 2.0 * 0.9975f64.ln())).abs() < 1e-6);
        assert!(f.lambda_star >= 1.0);
        assert!(cex.isolation_parameter(&SpaceSpec::Interval, 1).is_err());
    }

    #[test]
    fn l2_verdicts() {
        let k = KernelSpec::constant(2.0).unwrap();
        let v = k.is_l2(&SpaceSpec::Interval).unwrap();
        assert!(v.is_l2);
        assert!((v.squared_norm.unwrap() - 4.0).abs() < 1e-9);
        assert!(KernelSpec::torus_band(4.0, 0.2).unwrap().is_l2(&SpaceSpec::Torus).unwrap().is_l2);
        let cex = KernelSpec::counterexample(1.0).unwrap().is_l2(&SpaceSpec::Interval).unwrap();
        assert!(!cex.is_l2);
        assert!(cex.diagnostic.contains("not in L1"));
    }

    #[test]
    fn profile_matches_band() {
        let band = KernelSpec::torus_band(3.0, 0.2).unwrap();
        let prof = KernelSpec::torus_profile(vec![0.2], vec![3.0, 0.0]).unwrap();
        for (x, y) in [(0.0, 0.2), (0.1, 0.35), (0.9, 0.05), (0.3, 0.8)] {
            assert_eq!(band.eval(c(x), c(y)), prof.eval(c(x), c(y)));
        }
        let s = SpaceSpec::Torus;
        assert!((band.lambda(&s, c(0.1)).unwrap() - prof.lambda(&s, c(0.1)).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn space_compatibility() {
        let band = KernelSpec::torus_band(1.0, 0.1).unwrap();
        assert!(band.check_space(&SpaceSpec::Interval).is_err());
        let block = KernelSpec::block(vec![vec![1.0]]).unwrap();
        assert!(block.check_space(&SpaceSpec::finite(vec![0.5, 0.5]).unwrap()).is_err());
        assert!(KernelSpec::counterexample(1.0).unwrap().check_space(&SpaceSpec::Torus).is_err());
    }

    #[test]
    fn validation() {
        assert!(KernelSpec::constant(-1.0).is_err());
        assert!(KernelSpec::block(vec![vec![1.0, 2.0], vec![3.0, 1.0]]).is_err());
        assert!(KernelSpec::torus_band(1.0, 0.6).is_err());
        assert!(KernelSpec::torus_profile(vec![0.3, 0.2], vec![1.0, 1.0, 1.0]).is_err());
        assert!(serde_json::from_str::<KernelSpec>(r#"{"type":"constant","c":-2}"#).is_err());
    }

    #[test]
    fn shorthand_round_trip() {
        for s in [
            "constant:c=2",
            "counterexample:c=4",
            "band:c=4,r=0.25",
            "profile:b=0.1/0.2,v=3/2/0",
            "block:3,1;1,3",
            "0.25*block:3,1;1,3",
        ] {
            let k: KernelSpec = s.parse().unwrap();
            assert_eq!(k.to_string(), s);
        }
        let j: KernelSpec = r#"{"type":"counterexample","c":4.0}"#.parse().unwrap();
        assert_eq!(j, KernelSpec::Counterexample { c: 4.0 });
        assert!("nonsense:c=1".parse::<KernelSpec>().is_err());
    }

    #[test]
    fn json_shape() {
        let k = KernelSpec::block(vec![vec![1.0]]).unwrap().scaled(2.0).unwrap();
        let s = serde_json::to_string(&k).unwrap();
        assert_eq!(s, r#"{"type":"scaled","base":{"type":"block","matrix":[[1.0]]},"factor":2.0}"#);
        let back: KernelSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, k);
        let f = KernelFunctionals { lambda_star: 1.0, lambda2_sup: f64::INFINITY, method: FunctionalMethod::ClosedForm };
        let js = serde_json::to_string(&f).unwrap();
        assert!(js.contains(r#""lambda2_sup":"inf""#));
        let back: KernelFunctionals = serde_json::from_str(&js).unwrap();
        assert!(back.lambda2_sup.is_infinite());
    }
}
