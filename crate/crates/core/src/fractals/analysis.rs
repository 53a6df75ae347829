//! Packing counts, diffuseness probes and microset widths for a [`KOracle`].
//!
//! Everything here searches a resolution-limited net of `K`, so a failure is
//! a failure at that resolution. Points returned as witnesses are exact
//! points of `K`.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num::integer::Roots;
use num::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ifs_leaves, word_image, Ifs, KOracle};
use crate::error::{check_dim, Error, Result};
use crate::geometry::{
    floor, fmt_scalar, int, linalg, pow, q, serde_scalar, sq_dist_point_subspace, sqrt_upper, to_f64, AffineSubspace, Ball, Point, Scalar,
};

/// Net resolution used by the ladder fit, as a fraction of `βρ`.
const LADDER_RESOLUTION: i64 = 4;
/// Word length used to draw a point of a self-similar set.
const SAMPLE_DEPTH: usize = 24;
/// Denominator used when rounding float directions to rationals.
const DIR_DENOM: i64 = 1 << 24;
/// Microset nets are taken at this fraction of the ball radius.
const MICROSET_RESOLUTION: i64 = 64;

fn check_unit(beta: &Scalar) -> Result<()> {
    if beta.is_positive() && *beta < int(1) {
        Ok(())
    } else {
        Err(Error::Input(format!("β = {} is not in (0,1)", fmt_scalar(beta))))
    }
}

fn rational(x: f64) -> Scalar {
    q((x * DIR_DENOM as f64).round() as i64, DIR_DENOM)
}

/// An exact point of `K`. Self-similar sets give the image of a fixed point
/// under a random word; the full space gives a dyadic point of the unit cube.
pub fn sample_point(k: &KOracle, rng: &mut impl Rng) -> Point {
    match k {
        KOracle::FullSpace { d } => Point((0..*d).map(|_| q(rng.gen_range(0..1 << 20), 1 << 20)).collect()),
        KOracle::Cantor => sample_ifs(&KOracle::cantor_ifs(), rng),
        KOracle::SimilarityIfs { ifs } => sample_ifs(ifs, rng),
        KOracle::FinitePointSet { points } => points[rng.gen_range(0..points.len())].clone(),
    }
}

fn sample_ifs(ifs: &Ifs, rng: &mut impl Rng) -> Point {
    let word: Vec<usize> = (0..SAMPLE_DEPTH).map(|_| rng.gen_range(0..ifs.maps.len())).collect();
    word_image(ifs, &word, &ifs.maps[0].fixed_point())
}

/// The `3ᵈ` grid cells around `key`.
fn neighbor_keys(key: &[i64]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::with_capacity(key.len())];
    for &k in key {
        out = out
            .into_iter()
            .flat_map(|v| (-1..=1).map(move |o| {
                let mut w = v.clone();
                w.push(k + o);
                w
            }))
            .collect();
    }
    out
}

fn cell_key(p: &[f64], cell: f64) -> Vec<i64> {
    p.iter().map(|x| (x / cell).floor() as i64).collect()
}

/// Greedy packing in floats: scan in lexicographic order and keep each
/// point at distance at least `sep` from everything kept. Returns indices.
fn greedy_float(points: &[Vec<f64>], sep: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a].iter().zip(&points[b]).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    let cell = sep * (1.0 + 1e-9);
    let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    let mut kept = Vec::new();
    for i in order {
        let p = &points[i];
        let key = cell_key(p, cell);
        let clash = neighbor_keys(&key).iter().any(|nk| {
            grid.get(nk).is_some_and(|ids| {
                ids.iter().any(|&j| {
                    let d2: f64 = points[j].iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum();
                    d2 < sep * sep
                })
            })
        });
        if !clash {
            grid.entry(key).or_default().push(i);
            kept.push(i);
        }
    }
    kept
}

/// Exact greedy packing with centers at distance at least `2r`.
fn greedy_packing(mut points: Vec<Point>, r: &Scalar) -> Vec<Point> {
    points.sort_by(|a, b| a.coords().cmp(b.coords()));
    let sep2 = int(4) * r * r;
    let cell = 2.0 * to_f64(r) * (1.0 + 1e-9);
    let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    let mut kept: Vec<Point> = Vec::new();
    for p in points {
        let key = cell_key(&p.to_f64(), cell);
        let clash = neighbor_keys(&key)
            .iter()
            .any(|nk| grid.get(nk).is_some_and(|ids| ids.iter().any(|&i| kept[i].sq_dist(&p) < sep2)));
        if !clash {
            grid.entry(key).or_default().push(kept.len());
            kept.push(p);
        }
    }
    kept
}

/// Centers `x + 2βρ(z + s)` with `z ∈ ℤᵈ` and `s` either `0` or `½·𝟙`, kept
/// when the ball fits in `B(x, ρ)`; in doubled coordinates `w = 2(z + s)`
/// that is `‖w‖² ≤ ((1−β)/β)²` with all `wᵢ` of one parity.
fn lattice_count(d: usize, beta: &Scalar) -> Result<u64> {
    let t = (int(1) - beta) / beta;
    let bound = floor(&(&t * &t))
        .to_i128()
        .filter(|b| *b < 1 << 60)
        .ok_or_else(|| Error::Input("β too small for a lattice count".into()))?;
    fn count(d: usize, s: i128, parity: i128) -> u64 {
        if d == 0 {
            return 1;
        }
        let m = s.sqrt();
        (-m..=m).filter(|w| (w - parity).rem_euclid(2) == 0).map(|w| count(d - 1, s - w * w, parity)).sum()
    }
    Ok(count(d, bound, 0).max(count(d, bound, 1)))
}

/// Lower bound for the number of disjoint balls of radius `βρ` centered on
/// `K` inside `B(x, ρ)`, i.e. centers in `B(x, (1−β)ρ)` at separation
/// `≥ 2βρ` (balls may touch). Self-similar sets pack greedily over a
/// `resolution`-net, found in floats and re-verified exactly; the full space
/// uses a lattice packing.
pub fn count_packing(k: &KOracle, beta: &Scalar, x: &Point, rho: &Scalar, resolution: &Scalar) -> Result<u64> {
    check_unit(beta)?;
    check_dim(k.dim(), x.dim())?;
    if !rho.is_positive() || !resolution.is_positive() {
        return Err(Error::Input("ρ and the resolution must be positive".into()));
    }
    let r = beta * rho;
    if *resolution > r {
        return Err(Error::Input(format!(
            "resolution {} is coarser than βρ = {}",
            fmt_scalar(resolution),
            fmt_scalar(&r)
        )));
    }
    if !k.contains(x, resolution)? {
        return Err(Error::Input("x is not within resolution of K".into()));
    }
    let inner = Ball::new(x.clone(), rho - &r)?;
    let candidates = match k {
        KOracle::FullSpace { d } => return lattice_count(*d, beta),
        KOracle::FinitePointSet { .. } => k.net(&inner, resolution)?,
        KOracle::Cantor => float_candidates(&KOracle::cantor_ifs(), &inner, resolution, &r)?,
        KOracle::SimilarityIfs { ifs } => float_candidates(ifs, &inner, resolution, &r)?,
    };
    Ok(greedy_packing(candidates, &r).len() as u64)
}

fn float_candidates(ifs: &Ifs, inner: &Ball, resolution: &Scalar, r: &Scalar) -> Result<Vec<Point>> {
    let leaves = ifs_leaves(ifs, &inner.center.to_f64(), to_f64(&inner.radius), to_f64(resolution))?;
    let pts: Vec<Vec<f64>> = leaves.iter().map(|l| l.1.clone()).collect();
    let p0 = ifs.maps[0].fixed_point();
    // slightly permissive in floats; the exact pass drops any violator
    Ok(greedy_float(&pts, 2.0 * to_f64(r) * (1.0 - 1e-9))
        .into_iter()
        .map(|i| word_image(ifs, &leaves[i].0, &p0))
        .filter(|p| inner.contains_point(p))
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct PackingSample {
    pub x: Point,
    #[serde(with = "serde_scalar")]
    pub rho: Scalar,
    pub counts: Vec<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PackingFit {
    /// Slope of the lower envelope, so that `N ≥ M β^{−δ}` on every sample.
    pub delta: f64,
    pub m: f64,
    /// Slope of the per-rung mean of `log N`, for comparison.
    pub delta_mean: f64,
    pub ladder: Vec<String>,
    pub samples: Vec<PackingSample>,
}

/// `β₀, β₀², …, β₀^rungs`.
pub fn packing_ladder(beta0: &Scalar, rungs: u32) -> Vec<Scalar> {
    (1..=rungs).map(|m| pow(beta0, m)).collect()
}

/// Least-squares line through `(xs, ys)`: (slope, intercept).
fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Fits `log N_K(β, x, ρ) ≈ log M + δ·(−log β)` over a geometric ladder,
/// with `(x, ρ)` drawn from `K` and `ρ ∈ [1/4, 1/2]`. The fit runs through
/// the smallest count on each rung, matching a bound meant to hold at every
/// `x` and `ρ`.
pub fn dimension_from_packing(k: &KOracle, ladder: &[Scalar], samples: usize, seed: u64) -> Result<PackingFit> {
    dimension_from_packing_at(k, ladder, samples, seed, LADDER_RESOLUTION)
}

/// As [`dimension_from_packing`] with nets at resolution `βρ / refine`.
pub fn dimension_from_packing_at(k: &KOracle, ladder: &[Scalar], samples: usize, seed: u64, refine: i64) -> Result<PackingFit> {
    if refine < 1 {
        return Err(Error::Input("refinement factor must be at least 1".into()));
    }
    if ladder.len() < 3 {
        return Err(Error::Input("the ladder needs at least three rungs".into()));
    }
    check_unit(&ladder[0])?;
    if ladder.windows(2).any(|w| w[1] != &w[0] * &ladder[0]) {
        return Err(Error::Input("ladder is not geometric β₀, β₀², …".into()));
    }
    if samples == 0 {
        return Err(Error::Input("need at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(samples);
    for _ in 0..samples {
        let x = sample_point(k, &mut rng);
        let rho = q(64 + rng.gen_range(0..=64), 256);
        let counts = ladder
            .iter()
            .map(|beta| count_packing(k, beta, &x, &rho, &(beta * &rho / int(refine))))
            .collect::<Result<Vec<u64>>>()?;
        out.push(PackingSample { x, rho, counts });
    }
    let xs: Vec<f64> = ladder.iter().map(|b| -to_f64(b).ln()).collect();
    let log = |c: u64| (c.max(1) as f64).ln();
    let low: Vec<f64> = (0..ladder.len()).map(|i| out.iter().map(|s| log(s.counts[i])).fold(f64::INFINITY, f64::min)).collect();
    let mean: Vec<f64> = (0..ladder.len()).map(|i| out.iter().map(|s| log(s.counts[i])).sum::<f64>() / samples as f64).collect();
    let (delta, c) = fit_line(&xs, &low);
    let (delta_mean, _) = fit_line(&xs, &mean);
    Ok(PackingFit { delta, m: c.exp(), delta_mean, ladder: ladder.iter().map(fmt_scalar).collect(), samples: out })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffuseParams {
    pub k: usize,
    #[serde(with = "serde_scalar")]
    pub beta: Scalar,
    #[serde(with = "serde_scalar")]
    pub rho_k: Scalar,
}

impl DiffuseParams {
    pub fn new(k: usize, beta: Scalar, rho_k: Scalar) -> Result<Self> {
        check_unit(&beta)?;
        if !rho_k.is_positive() {
            return Err(Error::Input("ρ_K must be positive".into()));
        }
        Ok(DiffuseParams { k, beta, rho_k })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubspaceKind {
    ThroughX,
    BestFit,
    Random,
}

/// One probe `(x, ρ, 𝓛)` with `x ∈ K`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffuseSample {
    pub x: Point,
    #[serde(with = "serde_scalar")]
    pub rho: Scalar,
    pub subspace: AffineSubspace,
    pub kind: SubspaceKind,
}

#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub sample: DiffuseSample,
    /// Largest distance from a net point to `𝓛`, over the distance required.
    pub margin: f64,
    pub point: Option<Point>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiffusenessReport {
    pub strong: bool,
    pub beta: String,
    pub resolution: String,
    pub trials: usize,
    pub passes: usize,
    pub pass_ratio: f64,
    pub outcomes: Vec<bool>,
    pub worst: Option<Witness>,
}

impl DiffusenessReport {
    pub fn passed(&self) -> bool {
        self.passes == self.trials
    }
}

fn random_direction(d: usize, rng: &mut impl Rng) -> Vec<Scalar> {
    loop {
        let v: Vec<Scalar> = (0..d).map(|_| int(rng.gen_range(-8..=8))).collect();
        if v.iter().any(|c| !c.is_zero()) {
            return v;
        }
    }
}

fn random_flat(anchor: Point, k: usize, rng: &mut impl Rng) -> Result<AffineSubspace> {
    let d = anchor.dim();
    loop {
        let dirs: Vec<Vec<Scalar>> = (0..k).map(|_| random_direction(d, rng)).collect();
        let l = AffineSubspace::spanned_by(anchor.clone(), &dirs)?;
        if l.dim() == k {
            return Ok(l);
        }
    }
}

/// Centroid and principal directions (largest variance first) of a cloud.
fn principal_axes(points: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = points[0].len();
    let n = points.len() as f64;
    let c: Vec<f64> = (0..d).map(|i| points.iter().map(|p| p[i]).sum::<f64>() / n).collect();
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for p in points {
        for i in 0..d {
            for j in 0..d {
                cov[(i, j)] += (p[i] - c[i]) * (p[j] - c[j]);
            }
        }
    }
    let eig = SymmetricEigen::new(cov);
    let mut idx: Vec<usize> = (0..d).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let axes = idx.iter().map(|&i| eig.eigenvectors.column(i).iter().copied().collect()).collect();
    (c, axes)
}

fn best_fit_flat(k: &KOracle, x: &Point, rho: &Scalar, dim: usize, resolution: &Scalar, rng: &mut impl Rng) -> Result<AffineSubspace> {
    let pts = match k {
        KOracle::FullSpace { .. } => Vec::new(),
        _ => Cloud::new(k, &Ball::new(x.clone(), rho.clone())?, resolution)?.floats(),
    };
    if pts.len() < 2 {
        return random_flat(x.clone(), dim, rng);
    }
    let (c, axes) = principal_axes(&pts);
    let anchor = Point(c.iter().map(|&v| rational(v)).collect());
    let dirs: Vec<Vec<Scalar>> = axes.iter().take(dim).map(|a| a.iter().map(|&v| rational(v)).collect()).collect();
    let l = AffineSubspace::spanned_by(anchor.clone(), &dirs)?;
    if l.dim() == dim {
        Ok(l)
    } else {
        random_flat(anchor, dim, rng)
    }
}

/// Points of `K ∩ B` at a resolution: exact for finite sets, float leaves
/// with exact recovery for self-similar sets.
enum Cloud {
    Exact(Vec<Point>),
    Leaves { ifs: Ifs, ball: Ball, leaves: Vec<(Vec<usize>, Vec<f64>)> },
}

impl Cloud {
    fn new(k: &KOracle, ball: &Ball, resolution: &Scalar) -> Result<Self> {
        let ifs = match k {
            KOracle::Cantor => KOracle::cantor_ifs(),
            KOracle::SimilarityIfs { ifs } => ifs.clone(),
            _ => return Ok(Cloud::Exact(k.net(ball, resolution)?)),
        };
        let leaves = ifs_leaves(&ifs, &ball.center.to_f64(), to_f64(&ball.radius), to_f64(resolution))?;
        Ok(Cloud::Leaves { ifs, ball: ball.clone(), leaves })
    }

    fn floats(&self) -> Vec<Vec<f64>> {
        match self {
            Cloud::Exact(v) => v.iter().map(|p| p.to_f64()).collect(),
            Cloud::Leaves { leaves, .. } => leaves.iter().map(|l| l.1.clone()).collect(),
        }
    }

    /// The exact point behind entry `i`, if it really lies in the ball.
    fn exact(&self, i: usize) -> Option<Point> {
        match self {
            Cloud::Exact(v) => Some(v[i].clone()),
            Cloud::Leaves { ifs, ball, leaves } => {
                let p = word_image(ifs, &leaves[i].0, &ifs.maps[0].fixed_point());
                ball.contains_point(&p).then_some(p)
            }
        }
    }
}

/// Probes `(x, ρ, 𝓛)` with `x ∈ K`, `ρ ≤ ρ_K` spread over four triadic
/// scales and `𝓛` cycling through: a random flat through `x`, the local
/// best-fit flat, and a random flat through a random point of `B(x, ρ)`.
pub fn diffuse_samples(
    k: &KOracle,
    params: &DiffuseParams,
    trials: usize,
    resolution: &Scalar,
    seed: u64,
) -> Result<Vec<DiffuseSample>> {
    let d = k.dim();
    if params.k >= d {
        return Err(Error::Input(format!("k = {} must be below the dimension {d}", params.k)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(trials);
    for i in 0..trials {
        let x = sample_point(k, &mut rng);
        let scale = pow(&q(1, 3), rng.gen_range(0..4));
        let rho = &params.rho_k * scale * q(32 + rng.gen_range(0..=32), 64);
        let (kind, subspace) = match i % 3 {
            0 => (SubspaceKind::ThroughX, random_flat(x.clone(), params.k, &mut rng)?),
            1 => (SubspaceKind::BestFit, best_fit_flat(k, &x, &rho, params.k, resolution, &mut rng)?),
            _ => {
                let anchor = Point(
                    x.coords()
                        .iter()
                        .map(|c| c + &rho * q(rng.gen_range(-1024..=1024), 1024))
                        .collect(),
                );
                (SubspaceKind::Random, random_flat(anchor, params.k, &mut rng)?)
            }
        };
        out.push(DiffuseSample { x, rho, subspace, kind });
    }
    Ok(out)
}

/// Searches `pts` for a point strictly farther than `√need2` from `l`:
/// candidates are ranked by float distance and confirmed exactly. Returns
/// the point found and the best float distance over `√need2`.
fn farthest_from(
    pts: &[Vec<f64>],
    exact: impl Fn(usize) -> Option<Point>,
    l: &AffineSubspace,
    need2: &Scalar,
) -> Result<(Option<Point>, f64)> {
    let need = to_f64(need2).sqrt();
    let anchor = l.anchor().to_f64();
    let dirs: Vec<Vec<f64>> = l.directions().iter().map(|v| v.iter().map(to_f64).collect()).collect();
    let basis = orthonormalize(&dirs).ok_or_else(|| Error::Input("degenerate subspace".into()))?;
    let dist = |p: &Vec<f64>| flat_width(std::slice::from_ref(p), &anchor, &basis);
    let mut scored: Vec<(f64, usize)> = pts.iter().enumerate().map(|(i, p)| (dist(p), i)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let best = scored.first().map_or(0.0, |s| s.0);
    let margin = if need > 0.0 { best / need } else { f64::INFINITY };
    for (d, i) in scored {
        if d < need * (1.0 - 1e-9) - 1e-12 {
            break;
        }
        if let Some(p) = exact(i) {
            if sq_dist_point_subspace(&p, l)? > *need2 {
                return Ok((Some(p), margin));
            }
        }
    }
    Ok((None, margin))
}

/// The point at distance about `radius` from `x` pushed straight away from
/// `l`, never farther than `radius`. Only meaningful when `K` is everything.
fn away_point(x: &Point, l: &AffineSubspace, radius: &Scalar) -> Result<Point> {
    let foot = l.project(x)?;
    let mut u = linalg::sub(x.coords(), foot.coords());
    if u.iter().all(|c| c.is_zero()) {
        let d = x.dim();
        u = (0..d)
            .map(|i| {
                let e = linalg::unit(d, i);
                let tip = l.project(&Point(linalg::add(l.anchor().coords(), &e)))?;
                Ok(linalg::sub(&linalg::add(l.anchor().coords(), &e), tip.coords()))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .max_by(|a, b| linalg::sq_norm(a).cmp(&linalg::sq_norm(b)))
            .expect("nonempty");
    }
    let t = radius / sqrt_upper(&linalg::sq_norm(&u));
    Ok(x.offset(&u, &t))
}

fn run_probes(
    k: &KOracle,
    beta: &Scalar,
    samples: &[DiffuseSample],
    resolution: &Scalar,
    strong: bool,
) -> Result<DiffusenessReport> {
    check_unit(beta)?;
    let mut outcomes = Vec::with_capacity(samples.len());
    let mut worst: Option<Witness> = None;
    for s in samples {
        let br = beta * &s.rho;
        let (radius, need) = if strong { (&s.rho - &br, int(2) * &br) } else { (s.rho.clone(), br) };
        let need2 = &need * &need;
        let (point, margin) = if let KOracle::FullSpace { .. } = k {
            // every point of the ball is in K, and this one is farthest from 𝓛
            let cand = vec![away_point(&s.x, &s.subspace, &radius)?];
            farthest_from(&[cand[0].to_f64()], |i| Some(cand[i].clone()), &s.subspace, &need2)?
        } else {
            let cloud = Cloud::new(k, &Ball::new(s.x.clone(), radius)?, resolution)?;
            farthest_from(&cloud.floats(), |i| cloud.exact(i), &s.subspace, &need2)?
        };
        outcomes.push(point.is_some());
        if worst.as_ref().map_or(true, |w| margin < w.margin) {
            worst = Some(Witness { sample: s.clone(), margin, point });
        }
    }
    let passes = outcomes.iter().filter(|&&b| b).count();
    Ok(DiffusenessReport {
        strong,
        beta: fmt_scalar(beta),
        resolution: fmt_scalar(resolution),
        trials: samples.len(),
        passes,
        pass_ratio: if samples.is_empty() { 1.0 } else { passes as f64 / samples.len() as f64 },
        outcomes,
        worst,
    })
}

/// For each probe, looks for `x′ ∈ K ∩ B(x, ρ)` outside `𝓛^(βρ)`.
pub fn diffuseness_check_on(k: &KOracle, beta: &Scalar, samples: &[DiffuseSample], resolution: &Scalar) -> Result<DiffusenessReport> {
    run_probes(k, beta, samples, resolution, false)
}

/// For each probe, looks for `x′ ∈ K` with `B(x′, βρ) ⊂ B(x, ρ) ∖ 𝓛^(βρ)`,
/// that is `‖x′ − x‖ ≤ (1−β)ρ` and `dist(x′, 𝓛) > 2βρ`.
pub fn diffuseness_strong_form_on(
    k: &KOracle,
    beta: &Scalar,
    samples: &[DiffuseSample],
    resolution: &Scalar,
) -> Result<DiffusenessReport> {
    run_probes(k, beta, samples, resolution, true)
}

pub fn diffuseness_check(k: &KOracle, params: &DiffuseParams, trials: usize, resolution: &Scalar, seed: u64) -> Result<DiffusenessReport> {
    let samples = diffuse_samples(k, params, trials, resolution, seed)?;
    diffuseness_check_on(k, &params.beta, &samples, resolution)
}

/// `params.beta` is the strong-form parameter.
pub fn diffuseness_strong_form(
    k: &KOracle,
    params: &DiffuseParams,
    trials: usize,
    resolution: &Scalar,
    seed: u64,
) -> Result<DiffusenessReport> {
    let samples = diffuse_samples(k, params, trials, resolution, seed)?;
    diffuseness_strong_form_on(k, &params.beta, &samples, resolution)
}

/// `β′/(2+β′)`.
pub fn strong_beta(beta_prime: &Scalar) -> Scalar {
    beta_prime / (int(2) + beta_prime)
}

/// Rescales each probe radius by `1/(1−β)`. The strong form at `β` on the
/// result searches exactly the balls the plain check at `β′ = 2β/(1−β)`
/// searched on the originals, so a plain pass forces a strong pass.
pub fn lemma_transport(samples: &[DiffuseSample], beta: &Scalar) -> Vec<DiffuseSample> {
    let f = int(1) - beta;
    samples.iter().map(|s| DiffuseSample { rho: &s.rho / &f, ..s.clone() }).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct WidthReport {
    pub k: usize,
    /// k-dimensional width of the rescaled net about the best flat found.
    pub width: f64,
    /// Net spacing after rescaling; the rescaled `B ∩ K` has width at most
    /// `width + resolution_slack`.
    pub resolution_slack: f64,
    pub points: usize,
    pub method: String,
}

/// Largest distance from `pts` to the flat `a + span(u)` (`u` orthonormal).
fn flat_width(pts: &[Vec<f64>], a: &[f64], u: &[Vec<f64>]) -> f64 {
    pts.iter()
        .map(|p| {
            let mut v: Vec<f64> = p.iter().zip(a).map(|(x, y)| x - y).collect();
            for e in u {
                let t: f64 = e.iter().zip(&v).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(e).for_each(|(x, y)| *x -= t * y);
            }
            v.iter().map(|x| x * x).sum::<f64>().sqrt()
        })
        .fold(0.0, f64::max)
}

/// Gram–Schmidt; `None` if the vectors are (nearly) dependent.
fn orthonormalize(vs: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for v in vs {
        let mut w = v.clone();
        for e in &out {
            let t: f64 = e.iter().zip(&w).map(|(x, y)| x * y).sum();
            w.iter_mut().zip(e).for_each(|(x, y)| *x -= t * y);
        }
        let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n < 1e-12 {
            return None;
        }
        out.push(w.iter().map(|x| x / n).collect());
    }
    Some(out)
}

/// Heuristic upper bound on the k-dimensional width of `T_B(B ∩ K)`: best of
/// the least-squares flat, `samples` flats through random net points, and a
/// random local refinement of the winner.
pub fn microset_width(k: &KOracle, ball: &Ball, dim: usize, samples: usize, seed: u64) -> Result<WidthReport> {
    let d = k.dim();
    check_dim(d, ball.dim())?;
    if dim >= d {
        return Err(Error::Input(format!("k = {dim} must be below the dimension {d}")));
    }
    let res = &ball.radius / int(MICROSET_RESOLUTION);
    let net = k.net(ball, &res)?;
    if net.is_empty() {
        return Err(Error::Input("ball does not meet K at this resolution".into()));
    }
    let c = ball.center.to_f64();
    let r = to_f64(&ball.radius);
    let pts: Vec<Vec<f64>> = net
        .iter()
        .map(|p| p.to_f64().iter().zip(&c).map(|(x, y)| (x - y) / r).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let (centroid, axes) = principal_axes(&pts);
    let mut best_a = centroid;
    let mut best_u: Vec<Vec<f64>> = axes.into_iter().take(dim).collect();
    let mut best = flat_width(&pts, &best_a, &best_u);
    let mut method = "least_squares";

    for _ in 0..samples {
        let idx: Vec<usize> = (0..=dim).map(|_| rng.gen_range(0..pts.len())).collect();
        let a = pts[idx[0]].clone();
        let dirs: Vec<Vec<f64>> = idx[1..].iter().map(|&i| pts[i].iter().zip(&a).map(|(x, y)| x - y).collect()).collect();
        let Some(u) = orthonormalize(&dirs) else { continue };
        let w = flat_width(&pts, &a, &u);
        if w < best {
            (best, best_a, best_u, method) = (w, a, u, "random_restart");
        }
    }

    let mut step = 0.1;
    for _ in 0..400 {
        let a: Vec<f64> = best_a.iter().map(|x| x + step * rng.gen_range(-1.0..1.0)).collect();
        let perturbed: Vec<Vec<f64>> = best_u
            .iter()
            .map(|e| e.iter().map(|x| x + step * rng.gen_range(-1.0..1.0)).collect())
            .collect();
        if let Some(u) = orthonormalize(&perturbed) {
            let w = flat_width(&pts, &a, &u);
            if w < best {
                (best, best_a, best_u, method) = (w, a, u, "refined");
                continue;
            }
        }
        step *= 0.99;
    }

    Ok(WidthReport {
        k: dim,
        width: best,
        resolution_slack: 1.0 / MICROSET_RESOLUTION as f64,
        points: pts.len(),
        method: method.into(),
    })
}
