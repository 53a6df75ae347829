//! Exact rational Euclidean geometry: points, closed balls, affine
//! subspaces and their closed ε-neighborhoods.
//!
//! Every predicate here is decided with squared comparisons over the
//! rationals, so no floating point is involved and tangency is resolved
//! exactly (closed sets touching count as contained / avoiding).

pub mod linalg;

use std::fmt;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_dim, Error, Result};
use linalg::{dot, sq_norm, sub, RowReducer};

/// Arbitrary-precision rational, always kept in lowest terms by `num`.
pub type Scalar = BigRational;

/// `n/d` as a scalar. Panics if `d == 0`.
pub fn q(n: i64, d: i64) -> Scalar {
    Scalar::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Scalar {
    Scalar::from_integer(BigInt::from(n))
}

/// Parses `"p/q"`, an integer, or a finite decimal such as `"0.125"`.
pub fn parse_scalar(s: &str) -> Result<Scalar> {
    let s = s.trim();
    let bad = || Error::Input(format!("not a rational number: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::Input(format!("zero denominator in {s:?}")));
        }
        return Ok(Scalar::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let neg = whole.starts_with('-');
        let digits = format!("{}{}", whole.trim_start_matches(['-', '+']), frac);
        let n: BigInt = digits.parse().map_err(|_| bad())?;
        let d = num::pow(BigInt::from(10), frac.len());
        let v = Scalar::new(n, d);
        return Ok(if neg { -v } else { v });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Scalar::from_integer(n))
}

/// Canonical `"num/den"` rendering used in every serialized artifact.
pub fn fmt_scalar(x: &Scalar) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

pub fn to_f64(x: &Scalar) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Exact rational value of a finite double.
pub fn from_f64(x: f64) -> Scalar {
    Scalar::from_float(x).expect("finite float")
}

/// `serde(with = ...)` adapter for scalar fields.
pub mod serde_scalar {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Scalar, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_scalar(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Scalar, D::Error> {
        let s = String::deserialize(d)?;
        parse_scalar(&s).map_err(serde::de::Error::custom)
    }
}

/// `serde(with = ...)` adapter for rational vectors.
pub mod serde_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Scalar], s: S) -> std::result::Result<S::Ok, S::Error> {
        let strs: Vec<String> = v.iter().map(fmt_scalar).collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Scalar>, D::Error> {
        let strs = Vec::<String>::deserialize(d)?;
        strs.iter()
            .map(|s| parse_scalar(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// `serde(with = ...)` adapter for rational matrices (row-major).
pub mod serde_mat {
    use super::*;

    pub fn serialize<S: Serializer>(m: &[Vec<Scalar>], s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> = m.iter().map(|r| r.iter().map(fmt_scalar).collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Vec<Scalar>>, D::Error> {
        let rows = Vec::<Vec<String>>::deserialize(d)?;
        rows.iter()
            .map(|r| {
                r.iter()
                    .map(|s| parse_scalar(s).map_err(serde::de::Error::custom))
                    .collect()
            })
            .collect()
    }
}

/// A point of ℝᵈ with rational coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Point(pub Vec<Scalar>);

impl Point {
    pub fn new(coords: Vec<Scalar>) -> Self {
        Point(coords)
    }

    pub fn origin(d: usize) -> Self {
        Point(vec![Scalar::zero(); d])
    }

    pub fn from_ratios(coords: &[(i64, i64)]) -> Self {
        Point(coords.iter().map(|&(n, d)| q(n, d)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[Scalar] {
        &self.0
    }

    pub fn sq_dist(&self, other: &Point) -> Scalar {
        sq_norm(&sub(&self.0, &other.0))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(to_f64).collect()
    }

    pub fn from_f64(v: &[f64]) -> Self {
        Point(v.iter().map(|&x| from_f64(x)).collect())
    }

    pub fn offset(&self, dir: &[Scalar], t: &Scalar) -> Point {
        Point(self.0.iter().zip(dir).map(|(x, u)| x + u * t).collect())
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "({})", parts.join(", "))
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        serde_vec::serialize(&self.0, s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        serde_vec::deserialize(d).map(Point)
    }
}

/// Closed Euclidean ball with strictly positive rational radius.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    #[serde(with = "serde_scalar")]
    pub radius: Scalar,
}

impl Ball {
    pub fn new(center: Point, radius: Scalar) -> Result<Self> {
        if !radius.is_positive() {
            return Err(Error::Input(format!("ball radius must be positive, got {radius}")));
        }
        if center.dim() == 0 {
            return Err(Error::Input("ball center must have dimension >= 1".into()));
        }
        Ok(Ball { center, radius })
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn contains_point(&self, p: &Point) -> bool {
        self.center.sq_dist(p) <= &self.radius * &self.radius
    }

    /// Closed balls meet iff the center distance is at most the radius sum.
    pub fn meets(&self, other: &Ball) -> bool {
        let r = &self.radius + &other.radius;
        self.center.sq_dist(&other.center) <= &r * &r
    }
}

impl fmt::Display for Ball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "B({}, {})", self.center, self.radius)
    }
}

/// A k-dimensional affine flat `anchor + span(directions)`.
///
/// Hyperplanes (k = d − 1) additionally carry a primitive integer normal `n`
/// and offset `c` with the flat equal to `{x : n·x = c}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineSubspace {
    anchor: Point,
    directions: Vec<Vec<Scalar>>,
    normal: Option<(Vec<Scalar>, Scalar)>,
}

impl AffineSubspace {
    /// Builds the flat through `anchor` spanned by `directions`, which must be
    /// linearly independent and fewer than the ambient dimension.
    pub fn new(anchor: Point, directions: Vec<Vec<Scalar>>) -> Result<Self> {
        let d = anchor.dim();
        for v in &directions {
            check_dim(d, v.len())?;
        }
        if directions.len() >= d {
            return Err(Error::Input(format!(
                "subspace dimension {} must be below ambient dimension {d}",
                directions.len()
            )));
        }
        if linalg::rank(&directions) != directions.len() {
            return Err(Error::Input("subspace directions are linearly dependent".into()));
        }
        let normal = if directions.len() + 1 == d {
            let ns = linalg::null_space(&directions, d);
            let n = linalg::primitive(&ns[0]);
            let c = dot(&n, anchor.coords());
            Some((n, c))
        } else {
            None
        };
        Ok(AffineSubspace { anchor, directions, normal })
    }

    /// Like [`AffineSubspace::new`] but silently drops dependent directions.
    pub fn spanned_by(anchor: Point, directions: &[Vec<Scalar>]) -> Result<Self> {
        let mut rr = RowReducer::new();
        let kept: Vec<Vec<Scalar>> = directions
            .iter()
            .filter(|v| rr.try_add(v))
            .cloned()
            .collect();
        Self::new(anchor, kept)
    }

    /// The hyperplane `{x : normal·x = offset}`.
    pub fn hyperplane(normal: Vec<Scalar>, offset: Scalar) -> Result<Self> {
        let nn = sq_norm(&normal);
        if nn.is_zero() {
            return Err(Error::Input("hyperplane normal must be nonzero".into()));
        }
        let anchor = Point(normal.iter().map(|x| x * &offset / &nn).collect());
        let d = normal.len();
        let directions = linalg::null_space(&[normal], d);
        Self::new(anchor, directions)
    }

    /// The 0-dimensional flat `{p}`.
    pub fn point(p: Point) -> Self {
        Self::new(p, Vec::new()).expect("a point is a valid 0-flat")
    }

    pub fn dim(&self) -> usize {
        self.directions.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.anchor.dim()
    }

    pub fn anchor(&self) -> &Point {
        &self.anchor
    }

    pub fn directions(&self) -> &[Vec<Scalar>] {
        &self.directions
    }

    pub fn normal(&self) -> Option<(&[Scalar], &Scalar)> {
        self.normal.as_ref().map(|(n, c)| (n.as_slice(), c))
    }

    fn projection_coeffs(&self, v: &[Scalar]) -> Vec<Scalar> {
        let gram: Vec<Vec<Scalar>> = self
            .directions
            .iter()
            .map(|a| self.directions.iter().map(|b| dot(a, b)).collect())
            .collect();
        let rhs: Vec<Scalar> = self.directions.iter().map(|a| dot(a, v)).collect();
        linalg::solve(&gram, &rhs).expect("independent directions give a nonsingular Gram matrix")
    }

    /// Orthogonal projection of `p` onto the flat.
    pub fn project(&self, p: &Point) -> Result<Point> {
        check_dim(self.ambient_dim(), p.dim())?;
        let v = sub(p.coords(), self.anchor.coords());
        if self.directions.is_empty() {
            return Ok(self.anchor.clone());
        }
        let t = self.projection_coeffs(&v);
        let mut out = self.anchor.0.clone();
        for (ti, dir) in t.iter().zip(&self.directions) {
            for (o, u) in out.iter_mut().zip(dir) {
                *o += ti * u;
            }
        }
        Ok(Point(out))
    }

    pub fn contains(&self, p: &Point) -> Result<bool> {
        Ok(sq_dist_point_subspace(p, self)?.is_zero())
    }
}

impl Serialize for AffineSubspace {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("k", &self.dim())?;
        m.serialize_entry("anchor", &self.anchor)?;
        if let Some((n, c)) = &self.normal {
            let ns: Vec<String> = n.iter().map(fmt_scalar).collect();
            m.serialize_entry("normal", &ns)?;
            m.serialize_entry("offset", &fmt_scalar(c))?;
        }
        let dirs: Vec<Vec<String>> = self
            .directions
            .iter()
            .map(|v| v.iter().map(fmt_scalar).collect())
            .collect();
        m.serialize_entry("directions", &dirs)?;
        m.end()
    }
}

#[derive(Deserialize)]
struct SubspaceRepr {
    anchor: Point,
    #[serde(default)]
    directions: Option<Vec<Vec<String>>>,
    #[serde(default)]
    normal: Option<Vec<String>>,
    #[serde(default)]
    offset: Option<String>,
}

impl<'de> Deserialize<'de> for AffineSubspace {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = SubspaceRepr::deserialize(d)?;
        if let Some(dirs) = r.directions {
            let dirs: Vec<Vec<Scalar>> = dirs
                .iter()
                .map(|v| v.iter().map(|s| parse_scalar(s)).collect::<Result<Vec<_>>>())
                .collect::<Result<_>>()
                .map_err(D::Error::custom)?;
            return AffineSubspace::new(r.anchor, dirs).map_err(D::Error::custom);
        }
        match (r.normal, r.offset) {
            (Some(n), Some(c)) => {
                let n = n.iter().map(|s| parse_scalar(s)).collect::<Result<Vec<_>>>().map_err(D::Error::custom)?;
                let c = parse_scalar(&c).map_err(D::Error::custom)?;
                AffineSubspace::hyperplane(n, c).map_err(D::Error::custom)
            }
            _ => Ok(AffineSubspace::point(r.anchor)),
        }
    }
}

/// Closed neighborhood `{x : dist(x, subspace) ≤ width}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Neighborhood {
    pub subspace: AffineSubspace,
    #[serde(with = "serde_scalar")]
    pub width: Scalar,
}

impl Neighborhood {
    pub fn new(subspace: AffineSubspace, width: Scalar) -> Result<Self> {
        if width.is_negative() {
            return Err(Error::Input("neighborhood width must be nonnegative".into()));
        }
        Ok(Neighborhood { subspace, width })
    }

    pub fn contains_point(&self, p: &Point) -> Result<bool> {
        Ok(sq_dist_point_subspace(p, &self.subspace)? <= &self.width * &self.width)
    }
}

/// Exact squared distance from `p` to the flat `l`.
pub fn sq_dist_point_subspace(p: &Point, l: &AffineSubspace) -> Result<Scalar> {
    check_dim(l.ambient_dim(), p.dim())?;
    if let Some((n, c)) = l.normal() {
        let r = dot(n, p.coords()) - c;
        return Ok(&r * &r / sq_norm(n));
    }
    let v = sub(p.coords(), l.anchor.coords());
    let total = sq_norm(&v);
    if l.directions.is_empty() {
        return Ok(total);
    }
    let t = l.projection_coeffs(&v);
    let rhs: Vec<Scalar> = l.directions.iter().map(|a| dot(a, &v)).collect();
    Ok(total - dot(&rhs, &t))
}

/// `inner ⊂ outer` for closed balls.
pub fn ball_contains_ball(outer: &Ball, inner: &Ball) -> Result<bool> {
    check_dim(outer.dim(), inner.dim())?;
    if outer.radius < inner.radius {
        return Ok(false);
    }
    let gap = &outer.radius - &inner.radius;
    Ok(outer.center.sq_dist(&inner.center) <= &gap * &gap)
}

/// `b` is disjoint from the interior side of the neighborhood, tangency allowed:
/// `dist(center, L) ≥ width + radius`.
pub fn ball_avoids_neighborhood(b: &Ball, nbhd: &Neighborhood) -> Result<bool> {
    let sd = sq_dist_point_subspace(&b.center, &nbhd.subspace)?;
    let need = &nbhd.width + &b.radius;
    Ok(sd >= &need * &need)
}

/// A hyperplane containing every point of `pts` (at most `d` points).
///
/// The affine span of the points is completed to dimension `d − 1` with the
/// lexicographically first coordinate directions that keep full rank.
pub fn hyperplane_through_points(pts: &[Point]) -> Result<AffineSubspace> {
    let first = pts
        .first()
        .ok_or_else(|| Error::Input("need at least one point".into()))?;
    let d = first.dim();
    for p in pts {
        check_dim(d, p.dim())?;
    }
    if pts.len() > d {
        return Err(Error::Input(format!("at most {d} points define a hyperplane in dimension {d}")));
    }
    let mut rr = RowReducer::new();
    let mut dirs = Vec::new();
    for p in &pts[1..] {
        let v = sub(p.coords(), first.coords());
        if rr.try_add(&v) {
            dirs.push(v);
        }
    }
    for i in 0..d {
        if dirs.len() + 1 == d {
            break;
        }
        let e = linalg::unit(d, i);
        if rr.try_add(&e) {
            dirs.push(e);
        }
    }
    AffineSubspace::new(first.clone(), dirs)
}

/// Largest integer `m` with `m ≤ x`.
pub fn floor(x: &Scalar) -> BigInt {
    x.floor().to_integer()
}

pub fn ceil(x: &Scalar) -> BigInt {
    x.ceil().to_integer()
}

pub fn pow(x: &Scalar, e: u32) -> Scalar {
    let mut acc = Scalar::one();
    for _ in 0..e {
        acc *= x;
    }
    acc
}

/// Rational `s ≥ √x`, within a relative `2⁻⁴⁰` or so of it.
pub fn sqrt_upper(x: &Scalar) -> Scalar {
    if !x.is_positive() {
        return Scalar::zero();
    }
    let mut s = from_f64(to_f64(x).sqrt() * (1.0 + 1e-12));
    while &(&s * &s) < x {
        s = &s * q(1_000_001, 1_000_000);
    }
    s
}

/// Rational `s ≤ √x`, `s ≥ 0`.
pub fn sqrt_lower(x: &Scalar) -> Scalar {
    if !x.is_positive() {
        return Scalar::zero();
    }
    let mut s = from_f64(to_f64(x).sqrt() * (1.0 - 1e-12));
    while &(&s * &s) > x {
        s = &s * q(999_999, 1_000_000);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(c: &[(i64, i64)]) -> Point {
        Point::from_ratios(c)
    }

    fn ball(c: &[(i64, i64)], r: Scalar) -> Ball {
        Ball::new(pt(c), r).unwrap()
    }

    #[test]
    fn distance_examples() {
        let x_axis = AffineSubspace::hyperplane(vec![int(0), int(1)], int(0)).unwrap();
        assert_eq!(sq_dist_point_subspace(&pt(&[(0, 1), (0, 1)]), &x_axis).unwrap(), int(0));
        let y_axis = AffineSubspace::hyperplane(vec![int(1), int(0)], int(0)).unwrap();
        assert_eq!(sq_dist_point_subspace(&pt(&[(3, 1), (4, 1)]), &y_axis).unwrap(), int(9));
        let diag = AffineSubspace::new(Point::origin(2), vec![vec![int(1), int(1)]]).unwrap();
        assert_eq!(sq_dist_point_subspace(&pt(&[(1, 1), (1, 1)]), &diag).unwrap(), int(0));
        assert_eq!(sq_dist_point_subspace(&pt(&[(1, 1), (0, 1)]), &diag).unwrap(), q(1, 2));
    }

    #[test]
    fn diagonal_distance_matches_grid_minimisation() {
        // oracle: minimise |(1,0) - t(1,1)|^2 over t on a rational grid
        let best = (0..=2000)
            .map(|i| q(i, 1000))
            .map(|t| {
                let a = int(1) - &t;
                &a * &a + &t * &t
            })
            .min()
            .unwrap();
        assert_eq!(best, q(1, 2));
    }

    #[test]
    fn non_hyperplane_distance_in_3d() {
        let line = AffineSubspace::new(Point::origin(3), vec![vec![int(0), int(0), int(1)]]).unwrap();
        assert!(line.normal().is_none());
        assert_eq!(sq_dist_point_subspace(&pt(&[(3, 1), (4, 1), (7, 1)]), &line).unwrap(), int(25));
    }

    #[test]
    fn containment_examples() {
        let unit = ball(&[(0, 1)], int(1));
        assert!(ball_contains_ball(&unit, &unit).unwrap());
        assert!(ball_contains_ball(&unit, &ball(&[(1, 2)], q(1, 2))).unwrap());
        assert!(!ball_contains_ball(&unit, &ball(&[(1, 2)], q(5, 8))).unwrap());
        // the extreme point 1/2 + 5/8 = 9/8 of the inner ball lies outside
        assert!(!unit.contains_point(&pt(&[(9, 8)])));
    }

    #[test]
    fn avoidance_examples() {
        let y_axis = AffineSubspace::hyperplane(vec![int(1), int(0)], int(0)).unwrap();
        let nb = Neighborhood::new(y_axis, q(1, 2)).unwrap();
        assert!(ball_avoids_neighborhood(&ball(&[(1, 1), (0, 1)], q(1, 4)), &nb).unwrap());
        assert!(!ball_avoids_neighborhood(&ball(&[(0, 1), (0, 1)], q(1, 4)), &nb).unwrap());
        // tangency counts as avoidance
        assert!(ball_avoids_neighborhood(&ball(&[(3, 4), (0, 1)], q(1, 4)), &nb).unwrap());
        assert!(!ball_avoids_neighborhood(&ball(&[(3, 4), (0, 1)], q(1, 4) + q(1, 1000)), &nb).unwrap());
    }

    #[test]
    fn avoidance_agrees_with_dense_sampling() {
        let y_axis = AffineSubspace::hyperplane(vec![int(1), int(0)], int(0)).unwrap();
        let nb = Neighborhood::new(y_axis, q(1, 2)).unwrap();
        let b = ball(&[(1, 1), (0, 1)], q(1, 4));
        for i in -20..=20 {
            for j in -20..=20 {
                let p = pt(&[(40 + i, 40), (j, 80)]);
                if b.contains_point(&p) {
                    assert!(!nb.contains_point(&p).unwrap() || sq_dist_point_subspace(&p, &nb.subspace).unwrap() == q(1, 4));
                }
            }
        }
    }

    #[test]
    fn hyperplane_fitting() {
        let l = hyperplane_through_points(&[pt(&[(0, 1), (0, 1)]), pt(&[(1, 1), (1, 1)])]).unwrap();
        let (n, c) = l.normal().unwrap();
        assert_eq!(n, &[int(1), int(-1)]);
        assert_eq!(c, &int(0));

        let l = hyperplane_through_points(&[pt(&[(1, 3), (1, 2)])]).unwrap();
        assert_eq!(l.directions(), &[vec![int(1), int(0)]]);
        assert!(l.contains(&pt(&[(7, 1), (1, 2)])).unwrap());

        let l = hyperplane_through_points(&[
            pt(&[(0, 1), (0, 1), (0, 1)]),
            pt(&[(1, 1), (0, 1), (0, 1)]),
            pt(&[(0, 1), (1, 1), (0, 1)]),
        ])
        .unwrap();
        assert_eq!(l.normal().unwrap().0, &[int(0), int(0), int(1)]);

        assert!(hyperplane_through_points(&[]).is_err());
    }

    #[test]
    fn dimension_mismatch_is_an_input_error() {
        let l = AffineSubspace::point(Point::origin(2));
        assert!(matches!(
            sq_dist_point_subspace(&Point::origin(3), &l),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sqrt_bounds_bracket() {
        for x in [q(2, 1), q(1, 3), q(10_000_000_001, 7), q(1, 1_000_000_007)] {
            let (lo, hi) = (sqrt_lower(&x), sqrt_upper(&x));
            assert!(&lo * &lo <= x && &hi * &hi >= x);
            assert!(to_f64(&(&hi - &lo)) <= 1e-9 * to_f64(&hi));
        }
    }

    #[test]
    fn scalar_parsing() {
        assert_eq!(parse_scalar("3/6").unwrap(), q(1, 2));
        assert_eq!(parse_scalar("-0.125").unwrap(), q(-1, 8));
        assert_eq!(parse_scalar("7").unwrap(), int(7));
        assert!(parse_scalar("1/0").is_err());
        assert_eq!(fmt_scalar(&int(3)), "3/1");
    }

    #[test]
    fn subspace_json_roundtrip() {
        let l = hyperplane_through_points(&[pt(&[(1, 3), (1, 2)]), pt(&[(2, 1), (5, 7)])]).unwrap();
        let s = serde_json::to_string(&l).unwrap();
        let back: AffineSubspace = serde_json::from_str(&s).unwrap();
        assert_eq!(back, l);
    }
}
