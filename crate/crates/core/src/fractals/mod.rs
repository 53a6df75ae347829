//! Closed-set oracles `K` and the diffuseness toolkit built on them.
//!
//! Fractal queries are resolution limited: a cylinder of the defining IFS is
//! refined until its diameter is below the requested resolution, and every
//! point handed out is an exact rational point of `K` (an image of a fixed
//! point under a composition of the maps).

mod analysis;

pub use analysis::{
    count_packing, diffuse_samples, diffuseness_check, diffuseness_check_on, diffuseness_strong_form,
    diffuseness_strong_form_on, dimension_from_packing, dimension_from_packing_at, lemma_transport, microset_width, packing_ladder, sample_point,
    strong_beta, DiffuseParams, DiffuseSample, DiffusenessReport, PackingFit, PackingSample, SubspaceKind, WidthReport,
    Witness,
};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::linalg;
use crate::geometry::{q, serde_mat, serde_scalar, to_f64, Ball, Point, Scalar};
use num::{One, Signed, Zero};

/// Upper bound on the number of points a single net query may produce.
pub const NET_BUDGET: usize = 1 << 21;

/// `x ↦ ratio · O x + translation` with `O` a rational orthogonal matrix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "MapRepr")]
pub struct SimilarityMap {
    #[serde(with = "serde_scalar")]
    pub ratio: Scalar,
    pub translation: Point,
    #[serde(with = "serde_mat")]
    pub orthogonal: Vec<Vec<Scalar>>,
}

/// On input the orthogonal part may be omitted, meaning the identity.
#[derive(Deserialize)]
struct MapRepr {
    #[serde(with = "serde_scalar")]
    ratio: Scalar,
    translation: Point,
    #[serde(with = "serde_mat", default)]
    orthogonal: Vec<Vec<Scalar>>,
}

impl From<MapRepr> for SimilarityMap {
    fn from(r: MapRepr) -> Self {
        let orthogonal = if r.orthogonal.is_empty() { identity(r.translation.dim()) } else { r.orthogonal };
        SimilarityMap { ratio: r.ratio, translation: r.translation, orthogonal }
    }
}

impl SimilarityMap {
    /// A homothety `x ↦ ratio · x + translation`.
    pub fn scaling(ratio: Scalar, translation: Point) -> Self {
        let d = translation.dim();
        SimilarityMap { ratio, translation, orthogonal: identity(d) }
    }

    pub fn dim(&self) -> usize {
        self.translation.dim()
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim();
        if !(self.ratio.is_positive() && self.ratio < Scalar::one()) {
            return Err(Error::Input(format!("similarity ratio {} is not in (0,1)", self.ratio)));
        }
        check_dim(d, self.orthogonal.len())?;
        for row in &self.orthogonal {
            check_dim(d, row.len())?;
        }
        for i in 0..d {
            for j in 0..d {
                let s: Scalar = (0..d).map(|k| &self.orthogonal[k][i] * &self.orthogonal[k][j]).sum();
                let want = if i == j { Scalar::one() } else { Scalar::zero() };
                if s != want {
                    return Err(Error::Input("similarity linear part is not orthogonal".into()));
                }
            }
        }
        Ok(())
    }

    pub fn apply(&self, p: &Point) -> Point {
        Point(
            self.orthogonal
                .iter()
                .zip(&self.translation.0)
                .map(|(row, t)| &self.ratio * linalg::dot(row, &p.0) + t)
                .collect(),
        )
    }

    fn apply_f64(&self, p: &[f64]) -> Vec<f64> {
        let r = to_f64(&self.ratio);
        self.orthogonal
            .iter()
            .zip(&self.translation.0)
            .map(|(row, t)| r * row.iter().zip(p).map(|(a, x)| to_f64(a) * x).sum::<f64>() + to_f64(t))
            .collect()
    }

    /// The unique fixed point, an exact rational point of the attractor.
    pub fn fixed_point(&self) -> Point {
        let d = self.dim();
        let a: Vec<Vec<Scalar>> = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        let id = if i == j { Scalar::one() } else { Scalar::zero() };
                        id - &self.ratio * &self.orthogonal[i][j]
                    })
                    .collect()
            })
            .collect();
        Point(linalg::solve(&a, &self.translation.0).expect("contractions have a unique fixed point"))
    }
}

fn identity(d: usize) -> Vec<Vec<Scalar>> {
    (0..d).map(|i| linalg::unit(d, i)).collect()
}

/// Finite family of contracting similarities; `open_set` records the
/// user's declaration that the open set condition holds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "IfsRepr")]
pub struct Ifs {
    pub maps: Vec<SimilarityMap>,
    #[serde(default)]
    pub open_set: bool,
}

#[derive(Deserialize)]
struct IfsRepr {
    maps: Vec<SimilarityMap>,
    #[serde(default)]
    open_set: bool,
}

impl TryFrom<IfsRepr> for Ifs {
    type Error = Error;

    fn try_from(r: IfsRepr) -> Result<Self> {
        Ifs::new(r.maps, r.open_set)
    }
}

impl Ifs {
    pub fn new(maps: Vec<SimilarityMap>, open_set: bool) -> Result<Self> {
        let first = maps.first().ok_or_else(|| Error::Input("IFS needs at least one map".into()))?;
        let d = first.dim();
        for m in &maps {
            check_dim(d, m.dim())?;
            m.validate()?;
        }
        Ok(Ifs { maps, open_set })
    }

    pub fn dim(&self) -> usize {
        self.maps[0].dim()
    }

    /// Similarity dimension `s` with `Σ rᵢˢ = 1`, by bisection.
    pub fn similarity_dimension(&self) -> f64 {
        let rs: Vec<f64> = self.maps.iter().map(|m| to_f64(&m.ratio)).collect();
        let (mut lo, mut hi) = (0.0f64, 64.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if rs.iter().map(|r| r.powf(mid)).sum::<f64>() > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// A ball `B(c, R)` mapped into itself by every map, so it contains the
    /// attractor and each cylinder `f_w(K)` lies in `B(f_w(c), r_w R)`.
    fn invariant_ball(&self) -> (Vec<f64>, f64) {
        let d = self.dim();
        let fixed: Vec<Vec<f64>> = self.maps.iter().map(|m| m.fixed_point().to_f64()).collect();
        let c: Vec<f64> = (0..d)
            .map(|i| fixed.iter().map(|p| p[i]).sum::<f64>() / fixed.len() as f64)
            .collect();
        let r = self
            .maps
            .iter()
            .map(|m| {
                let img = m.apply_f64(&c);
                let dist = img.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                dist / (1.0 - to_f64(&m.ratio))
            })
            .fold(0.0f64, f64::max);
        (c, r * (1.0 + 1e-9) + 1e-12)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KOracle {
    FullSpace { d: usize },
    /// Middle-thirds Cantor set in `[0, 1]`.
    Cantor,
    SimilarityIfs { ifs: Ifs },
    FinitePointSet { points: Vec<Point> },
}

impl KOracle {
    pub fn full_space(d: usize) -> Self {
        KOracle::FullSpace { d }
    }

    pub fn cantor() -> Self {
        KOracle::Cantor
    }

    pub fn ifs(maps: Vec<SimilarityMap>, open_set: bool) -> Result<Self> {
        Ok(KOracle::SimilarityIfs { ifs: Ifs::new(maps, open_set)? })
    }

    pub fn finite(points: Vec<Point>) -> Result<Self> {
        if let Some(p) = points.first() {
            let d = p.dim();
            for x in &points {
                check_dim(d, x.dim())?;
            }
        } else {
            return Err(Error::Input("finite point set must be nonempty".into()));
        }
        Ok(KOracle::FinitePointSet { points })
    }

    /// Cantor × Cantor in the unit square.
    pub fn cantor_dust() -> Self {
        let mut maps = Vec::new();
        for &a in &[0, 2] {
            for &b in &[0, 2] {
                maps.push(SimilarityMap::scaling(q(1, 3), Point(vec![q(a, 3), q(b, 3)])));
            }
        }
        Self::ifs(maps, true).expect("valid IFS")
    }

    /// The eight-map carpet: unit square minus the open middle ninth, iterated.
    pub fn sierpinski_carpet() -> Self {
        let mut maps = Vec::new();
        for a in 0..3 {
            for b in 0..3 {
                if a == 1 && b == 1 {
                    continue;
                }
                maps.push(SimilarityMap::scaling(q(1, 3), Point(vec![q(a, 3), q(b, 3)])));
            }
        }
        Self::ifs(maps, true).expect("valid IFS")
    }

    fn cantor_ifs() -> Ifs {
        Ifs {
            maps: vec![
                SimilarityMap::scaling(q(1, 3), Point(vec![q(0, 1)])),
                SimilarityMap::scaling(q(1, 3), Point(vec![q(2, 3)])),
            ],
            open_set: true,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            KOracle::FullSpace { d } => *d,
            KOracle::Cantor => 1,
            KOracle::SimilarityIfs { ifs } => ifs.dim(),
            KOracle::FinitePointSet { points } => points[0].dim(),
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, KOracle::FinitePointSet { .. })
    }

    /// Membership of a rational point. Exact except for general IFS, where it
    /// means "some cylinder of diameter ≤ `resolution` comes within its own
    /// diameter of `p`".
    pub fn contains(&self, p: &Point, resolution: &Scalar) -> Result<bool> {
        check_dim(self.dim(), p.dim())?;
        Ok(match self {
            KOracle::FullSpace { .. } => true,
            KOracle::Cantor => cantor_contains(&p.0[0]),
            KOracle::FinitePointSet { points } => points.contains(p),
            KOracle::SimilarityIfs { ifs } => ifs_near(ifs, &p.to_f64(), to_f64(resolution)),
        })
    }

    /// Exact points of `K ∩ ball` forming a `resolution`-net of it (for the
    /// full space, a grid of that spacing).
    pub fn net(&self, ball: &Ball, resolution: &Scalar) -> Result<Vec<Point>> {
        check_dim(self.dim(), ball.dim())?;
        if !resolution.is_positive() {
            return Err(Error::Input("resolution must be positive".into()));
        }
        match self {
            KOracle::FullSpace { .. } => grid_in_ball(ball, resolution),
            KOracle::Cantor => ifs_net(&Self::cantor_ifs(), ball, resolution),
            KOracle::SimilarityIfs { ifs } => ifs_net(ifs, ball, resolution),
            KOracle::FinitePointSet { points } => {
                Ok(points.iter().filter(|p| ball.contains_point(p)).cloned().collect())
            }
        }
    }

    /// A point of `K` inside `ball` (the net point nearest the center), if any.
    pub fn point_in(&self, ball: &Ball, resolution: &Scalar) -> Result<Option<Point>> {
        if let KOracle::FullSpace { .. } = self {
            check_dim(self.dim(), ball.dim())?;
            return Ok(Some(ball.center.clone()));
        }
        let net = self.net(ball, resolution)?;
        Ok(net.into_iter().min_by(|a, b| a.sq_dist(&ball.center).cmp(&b.sq_dist(&ball.center))))
    }
}

/// Exact membership of a rational in the middle-thirds Cantor set: follow the
/// unique admissible ternary digit path until it leaves `[0,1]` or cycles.
fn cantor_contains(x: &Scalar) -> bool {
    let one = Scalar::one();
    let third = q(1, 3);
    let two_thirds = q(2, 3);
    let mut seen = std::collections::HashSet::new();
    let mut x = x.clone();
    loop {
        if x.is_negative() || x > one {
            return false;
        }
        if !seen.insert(x.clone()) {
            return true;
        }
        x = if x <= third {
            x * Scalar::from_integer(3.into())
        } else if x >= two_thirds {
            x * Scalar::from_integer(3.into()) - Scalar::from_integer(2.into())
        } else {
            return false;
        };
    }
}

fn dist_f64(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Float affine map `x ↦ A x + t` tracking a composition `f_w`.
#[derive(Clone)]
struct Aff {
    a: Vec<Vec<f64>>,
    t: Vec<f64>,
    ratio: f64,
}

impl Aff {
    fn identity(d: usize) -> Self {
        let a = (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        Aff { a, t: vec![0.0; d], ratio: 1.0 }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.t)
            .map(|(row, t)| row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + t)
            .collect()
    }

    /// `self ∘ m`
    fn then_inner(&self, m: &FloatMap) -> Aff {
        let d = self.t.len();
        let a = (0..d)
            .map(|i| (0..d).map(|j| (0..d).map(|k| self.a[i][k] * m.ratio * m.o[k][j]).sum()).collect())
            .collect();
        let t = self.apply(&m.t);
        Aff { a, t, ratio: self.ratio * m.ratio }
    }
}

/// A similarity converted to floats once per walk.
struct FloatMap {
    ratio: f64,
    o: Vec<Vec<f64>>,
    t: Vec<f64>,
}

impl From<&SimilarityMap> for FloatMap {
    fn from(m: &SimilarityMap) -> Self {
        FloatMap {
            ratio: to_f64(&m.ratio),
            o: m.orthogonal.iter().map(|row| row.iter().map(to_f64).collect()).collect(),
            t: m.translation.to_f64(),
        }
    }
}

/// Depth-first walk over cylinders `f_w(B(c, R))` that meet `target`
/// (center, radius), calling `leaf` once a cylinder's diameter is at most
/// `resolution`. `leaf` returns true to refine further, false to stop.
fn walk_cylinders(
    ifs: &Ifs,
    target: (&[f64], f64),
    resolution: f64,
    mut leaf: impl FnMut(&[usize], &Aff, f64) -> Result<bool>,
) -> Result<()> {
    let (c, r0) = ifs.invariant_ball();
    let maps: Vec<FloatMap> = ifs.maps.iter().map(FloatMap::from).collect();
    let mut stack: Vec<(Aff, Vec<usize>)> = vec![(Aff::identity(ifs.dim()), Vec::new())];
    while let Some((f, word)) = stack.pop() {
        let center = f.apply(&c);
        let r = f.ratio * r0;
        if dist_f64(&center, target.0) > (r + target.1) * (1.0 + 1e-9) + 1e-15 {
            continue;
        }
        if 2.0 * r <= resolution && !leaf(&word, &f, r)? {
            continue;
        }
        for (i, m) in maps.iter().enumerate().rev() {
            let mut w = word.clone();
            w.push(i);
            stack.push((f.then_inner(m), w));
        }
    }
    Ok(())
}

fn ifs_near(ifs: &Ifs, p: &[f64], resolution: f64) -> bool {
    let mut found = false;
    walk_cylinders(ifs, (p, 0.0), resolution, |_, _, _| {
        found = true;
        Ok(false)
    })
    .expect("membership walk is infallible");
    found
}

/// Exact image `f_w(p)` of a rational point under a word.
fn word_image(ifs: &Ifs, word: &[usize], p: &Point) -> Point {
    word.iter().rev().fold(p.clone(), |x, &i| ifs.maps[i].apply(&x))
}

fn ifs_net(ifs: &Ifs, ball: &Ball, resolution: &Scalar) -> Result<Vec<Point>> {
    let p0 = ifs.maps[0].fixed_point();
    let res = to_f64(resolution);
    let center = ball.center.to_f64();
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    walk_cylinders(ifs, (&center, to_f64(&ball.radius)), res, |word, _, r| {
        let x = word_image(ifs, word, &p0);
        if ball.contains_point(&x) {
            if seen.insert(x.clone()) {
                out.push(x);
                if out.len() > NET_BUDGET {
                    return Err(Error::Input("net exceeds point budget; coarsen the resolution".into()));
                }
            }
            Ok(false)
        } else {
            // cylinder straddles the boundary: refine a few more levels
            Ok(2.0 * r > res / 64.0)
        }
    })?;
    Ok(out)
}

/// Float version of [`ifs_net`]: words of leaf cylinders whose
/// representative `f_w(p₀)` lies in `B(center, radius)` up to rounding,
/// with that representative in floats. Callers re-check exactly.
fn ifs_leaves(ifs: &Ifs, center: &[f64], radius: f64, res: f64) -> Result<Vec<(Vec<usize>, Vec<f64>)>> {
    let p0 = ifs.maps[0].fixed_point().to_f64();
    let mut out = Vec::new();
    walk_cylinders(ifs, (center, radius), res, |word, f, r| {
        let x = f.apply(&p0);
        if dist_f64(&x, center) <= radius * (1.0 + 1e-12) {
            out.push((word.to_vec(), x));
            if out.len() > NET_BUDGET {
                return Err(Error::Input("net exceeds point budget; coarsen the resolution".into()));
            }
            Ok(false)
        } else {
            Ok(2.0 * r > res / 64.0)
        }
    })?;
    Ok(out)
}

fn grid_in_ball(ball: &Ball, step: &Scalar) -> Result<Vec<Point>> {
    let d = ball.dim();
    let m = crate::geometry::floor(&(&ball.radius / step));
    let m: i64 = num::ToPrimitive::to_i64(&m).unwrap_or(i64::MAX);
    let side = 2 * m as u128 + 1;
    if side.checked_pow(d as u32).map_or(true, |n| n > NET_BUDGET as u128 * 4) {
        return Err(Error::Input("grid exceeds point budget; coarsen the resolution".into()));
    }
    let mut out = Vec::new();
    let mut z = vec![-m; d];
    let r2 = &ball.radius * &ball.radius;
    loop {
        let off: Vec<Scalar> = z.iter().map(|&zi| step * Scalar::from_integer(zi.into())).collect();
        if linalg::sq_norm(&off) <= r2 {
            out.push(Point(ball.center.0.iter().zip(&off).map(|(c, o)| c + o).collect()));
        }
        let mut i = 0;
        loop {
            if i == d {
                return Ok(out);
            }
            if z[i] < m {
                z[i] += 1;
                break;
            }
            z[i] = -m;
            i += 1;
        }
    }
}
