//! Alice for the orbit-avoidance target: points whose `R`-orbit on the torus
//! stays away from a fixed point `y`.
//!
//! The spectral data are computed in floating point. The guarantee is checked
//! after the game by the exact orbit certificate, not by these estimates.

use nalgebra::{Complex, DMatrix, DVector};
use num::{BigInt, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::certify::matrix_power;
use crate::engine::{dummy_move, AliceMove, AliceStrategy, GameConfig, Transcript};
use crate::error::{check_dim, Error, Result};
use crate::geometry::{
    from_f64, hyperplane_through_points, linalg, to_f64, AffineSubspace, Neighborhood, Point, Scalar,
};

use super::absolute_params;

/// Cap on `|zᵢ|` when searching lattice vectors for `t₀`.
pub const T0_LATTICE_CAP: i64 = 8;
/// Largest period tried when the spectral radius is 1.
const MAX_PERIOD: u32 = 1000;
/// Range of `j` over which the growth constants are taken.
const GROWTH_SAMPLES: i32 = 100;

#[derive(Clone, Debug)]
pub struct ToralSetup {
    pub r: Vec<Vec<BigInt>>,
    pub y: Point,
    pub beta: Scalar,
    pub lambda: f64,
    /// `N` with `R^N = I`, when `λ = 1`.
    pub period: Option<u32>,
    pub ell: u32,
    pub a: f64,
    pub b: f64,
    pub delta1: f64,
    pub delta2: f64,
    /// Orthonormal bases.
    pub v_basis: Vec<DVector<f64>>,
    pub w_basis: Vec<DVector<f64>>,
    pub m_proj: f64,
    pub t0: f64,
    r_inv: Vec<Vec<Scalar>>,
}

fn to_dmatrix(r: &[Vec<BigInt>]) -> DMatrix<f64> {
    let d = r.len();
    DMatrix::from_fn(d, d, |i, j| r[i][j].to_f64().expect("small entries"))
}

fn exact_inverse(r: &[Vec<BigInt>]) -> Result<Vec<Vec<Scalar>>> {
    let d = r.len();
    let a: Vec<Vec<Scalar>> = r.iter().map(|row| row.iter().map(|x| Scalar::from_integer(x.clone())).collect()).collect();
    let cols: Option<Vec<Vec<Scalar>>> = (0..d).map(|i| linalg::solve(&a, &linalg::unit(d, i))).collect();
    let cols = cols.ok_or_else(|| Error::Config("R must be nonsingular".into()))?;
    Ok((0..d).map(|i| (0..d).map(|j| cols[j][i].clone()).collect()).collect())
}

fn mat_vec(m: &[Vec<Scalar>], v: &[Scalar]) -> Vec<Scalar> {
    m.iter().map(|row| linalg::dot(row, v)).collect()
}

/// Orthonormal basis of the numerical kernel of `m`.
fn kernel(m: &DMatrix<f64>, tol: f64) -> Vec<DVector<f64>> {
    let d = m.ncols();
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("requested");
    let scale = svd.singular_values.max().max(1.0);
    (0..d).filter(|&i| svd.singular_values[i] <= tol * scale).map(|i| vt.row(i).transpose()).collect()
}

/// `∏ (R − μI)` over `mus`, with the real part returned.
fn poly_at(r: &DMatrix<f64>, mus: &[Complex<f64>]) -> DMatrix<f64> {
    let d = r.nrows();
    let rc = r.map(|x| Complex::new(x, 0.0));
    let mut acc = DMatrix::<Complex<f64>>::identity(d, d);
    for mu in mus {
        acc = acc * (&rc - DMatrix::<Complex<f64>>::identity(d, d) * *mu);
    }
    acc.map(|z| z.re)
}

fn op_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

fn min_singular(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.min()
}

fn columns(vs: &[DVector<f64>], d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, vs.len(), |i, j| vs[j][i])
}

impl ToralSetup {
    pub fn new(r: Vec<Vec<i64>>, y: Point, beta: Scalar) -> Result<Self> {
        let d = r.len();
        if d == 0 || r.iter().any(|row| row.len() != d) {
            return Err(Error::Input("R must be a square matrix".into()));
        }
        check_dim(d, y.dim())?;
        let r: Vec<Vec<BigInt>> = r.into_iter().map(|row| row.into_iter().map(BigInt::from).collect()).collect();
        let r_inv = exact_inverse(&r)?;
        let rf = to_dmatrix(&r);
        let eig: Vec<Complex<f64>> = rf.complex_eigenvalues().iter().copied().collect();
        let lambda = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);

        // distinct eigenvalues; semisimple iff their linear factors annihilate R
        let mut distinct: Vec<Complex<f64>> = Vec::new();
        for z in &eig {
            if distinct.iter().all(|w| (w - z).norm() > 1e-6 * (1.0 + z.norm())) {
                distinct.push(*z);
            }
        }
        let residual = op_norm(&poly_at(&rf, &distinct));
        let scale = (1.0 + op_norm(&rf)).powi(distinct.len() as i32);
        if residual > 1e-10 * scale {
            return Err(Error::Config(format!("R is not semisimple (minimal-polynomial residual {residual:.3e})")));
        }

        let mut setup = ToralSetup {
            r,
            y,
            beta,
            lambda,
            period: None,
            ell: 0,
            a: 1.0,
            b: 1.0,
            delta1: 1.0,
            delta2: 1.0,
            v_basis: Vec::new(),
            w_basis: Vec::new(),
            m_proj: 1.0,
            t0: 0.0,
            r_inv,
        };

        if (lambda - 1.0).abs() < 1e-9 {
            let id = matrix_power(&setup.r, 0);
            let n = (1..=MAX_PERIOD)
                .find(|&n| matrix_power(&setup.r, n) == id)
                .ok_or_else(|| Error::Config("spectral radius 1 but no power of R is the identity".into()))?;
            setup.period = Some(n);
            return Ok(setup);
        }
        if lambda < 1.0 {
            return Err(Error::Config("an integer matrix has spectral radius at least 1".into()));
        }

        let beta_f = to_f64(&setup.beta);
        setup.ell = (1..).find(|&l| lambda.powi(l as i32) * beta_f > 1.0).expect("λ > 1");
        let det = rf.determinant().abs();
        setup.a = det.powi(-(setup.ell as i32));
        let inv = rf.clone().try_inverse().ok_or_else(|| Error::Config("R must be nonsingular".into()))?;
        let mut pw = DMatrix::<f64>::identity(d, d);
        for _ in 0..=setup.ell {
            setup.b = setup.b.max(op_norm(&pw));
            pw = &inv * pw;
        }

        let top: Vec<Complex<f64>> =
            distinct.iter().copied().filter(|z| (z.norm() - lambda).abs() <= 1e-9 * lambda).collect();
        let low: Vec<Complex<f64>> =
            distinct.iter().copied().filter(|z| (z.norm() - lambda).abs() > 1e-9 * lambda).collect();
        setup.v_basis = kernel(&poly_at(&rf, &top), 1e-8);
        setup.w_basis = if low.is_empty() { Vec::new() } else { kernel(&poly_at(&rf, &low), 1e-8) };
        if setup.v_basis.len() + setup.w_basis.len() != d {
            return Err(Error::Config("invariant subspaces V and W do not span".into()));
        }

        let vmat = columns(&setup.v_basis, d);
        let mut both = vmat.clone();
        if !setup.w_basis.is_empty() {
            both = DMatrix::from_fn(d, d, |i, j| if j < setup.v_basis.len() { vmat[(i, j)] } else { setup.w_basis[j - setup.v_basis.len()][i] });
        }
        let both_inv = both.try_inverse().ok_or_else(|| Error::Config("V ⊕ W is degenerate".into()))?;
        let keep = DMatrix::from_fn(d, d, |i, j| if i < setup.v_basis.len() && i == j { 1.0 } else { 0.0 });
        let basis = DMatrix::from_fn(d, d, |i, j| if j < setup.v_basis.len() { vmat[(i, j)] } else { 0.0 });
        let p = basis * keep * both_inv;
        setup.m_proj = op_norm(&p);

        // growth constants, sup/inf over sampled j with a small safety margin
        let mut pw = DMatrix::<f64>::identity(d, d);
        let (mut d1, mut d2) = (0.0f64, f64::INFINITY);
        for j in 0..=GROWTH_SAMPLES {
            let s = lambda.powi(j);
            d1 = d1.max(op_norm(&(&pw * &vmat)) * s);
            d2 = d2.min(min_singular(&pw) * s);
            pw = &inv * pw;
        }
        setup.delta1 = d1 * (1.0 + 1e-6);
        setup.delta2 = d2 * (1.0 - 1e-6);

        setup.t0 = setup.compute_t0()?;
        Ok(setup)
    }

    /// Minimum positive `dist(y − R^{−j}y, a·z)/(3b)` over `j ≤ ℓ` and `|zᵢ| ≤ cap`.
    fn compute_t0(&self) -> Result<f64> {
        let d = self.y.dim();
        let yf = self.y.to_f64();
        let mut best = f64::INFINITY;
        let mut yj = self.y.0.clone();
        for _ in 0..=self.ell {
            let diff: Vec<f64> = yf.iter().zip(&yj).map(|(a, b)| a - to_f64(b)).collect();
            let mut z = vec![-T0_LATTICE_CAP; d];
            'odo: loop {
                let dist: f64 = diff.iter().zip(&z).map(|(v, zi)| (v - self.a * *zi as f64).powi(2)).sum::<f64>().sqrt();
                if dist > 1e-12 {
                    best = best.min(dist / (3.0 * self.b));
                }
                for zi in z.iter_mut() {
                    if *zi < T0_LATTICE_CAP {
                        *zi += 1;
                        continue 'odo;
                    }
                    *zi = -T0_LATTICE_CAP;
                }
                break;
            }
            yj = mat_vec(&self.r_inv, &yj);
        }
        if !best.is_finite() {
            return Err(Error::Assertion("t₀ has no positive candidate".into()));
        }
        Ok(best)
    }

    pub fn dim(&self) -> usize {
        self.r.len()
    }

    /// Sampled checks of the two growth bounds on `samples` random vectors
    /// for `j ≤ jmax`, with relative slack `slack`.
    pub fn sampled_growth_checks(&self, samples: usize, jmax: i32, slack: f64, seed: u64) -> (bool, bool) {
        let d = self.dim();
        if self.period.is_some() {
            return (true, true);
        }
        let inv = to_dmatrix(&self.r).try_inverse().expect("nonsingular");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut ok1, mut ok2) = (true, true);
        for _ in 0..samples {
            let coeffs: Vec<f64> = (0..self.v_basis.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v: DVector<f64> = self.v_basis.iter().zip(&coeffs).fold(DVector::zeros(d), |acc, (b, c)| acc + b * *c);
            let u = DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
            let (mut rv, mut ru) = (v.clone(), u.clone());
            for j in 0..=jmax {
                let s = self.lambda.powi(-j);
                ok1 &= rv.norm() <= self.delta1 * s * v.norm() * (1.0 + slack);
                ok2 &= ru.norm() >= self.delta2 * s * u.norm() * (1.0 - slack);
                rv = &inv * rv;
                ru = &inv * ru;
            }
        }
        (ok1, ok2)
    }

    /// Unit normals of hyperplanes containing a translate of `W`, plus the
    /// coordinate axes.
    fn normals(&self) -> Vec<DVector<f64>> {
        let d = self.dim();
        let mut out = Vec::new();
        if self.w_basis.is_empty() {
            out.extend((0..d).map(|i| DVector::from_fn(d, |k, _| if k == i { 1.0 } else { 0.0 })));
        } else {
            out.extend(kernel(&columns(&self.w_basis, d).transpose(), 1e-8));
            out.extend((0..d).map(|i| DVector::from_fn(d, |k, _| if k == i { 1.0 } else { 0.0 })));
        }
        out
    }

    /// Integer matrix `R^{-j}` as exact rationals.
    fn inv_power(&self, j: u32) -> Vec<Vec<Scalar>> {
        let d = self.dim();
        let mut acc: Vec<Vec<Scalar>> = (0..d).map(|i| linalg::unit(d, i)).collect();
        for _ in 0..j {
            acc = (0..d)
                .map(|i| (0..d).map(|k| (0..d).map(|m| &acc[i][m] * &self.r_inv[m][k]).sum()).collect())
                .collect();
        }
        acc
    }

    /// The countable set `{R^{−i}y + m}` near `x`, for `λ = 1`.
    fn periodic_points_near(&self, x: &Point, radius: &Scalar) -> Vec<Point> {
        let n = self.period.expect("λ = 1");
        let mut pts: Vec<Point> = Vec::new();
        let mut yi = self.y.0.clone();
        let r2 = radius * radius;
        for _ in 0..n {
            let shift: Vec<Scalar> = yi.iter().map(|c| c - c.floor()).collect();
            let ranges: Vec<(BigInt, BigInt)> = x
                .0
                .iter()
                .zip(&shift)
                .map(|(xc, s)| ((xc - radius - s).ceil().to_integer(), (xc + radius - s).floor().to_integer()))
                .collect();
            if ranges.iter().all(|(lo, hi)| lo <= hi) {
                let mut m: Vec<BigInt> = ranges.iter().map(|(lo, _)| lo.clone()).collect();
                'odo: loop {
                    let p = Point(shift.iter().zip(&m).map(|(s, mi)| s + Scalar::from_integer(mi.clone())).collect());
                    if p.sq_dist(x) <= r2 && !pts.contains(&p) {
                        pts.push(p);
                    }
                    for i in 0..m.len() {
                        if m[i] < ranges[i].1 {
                            m[i] += 1;
                            continue 'odo;
                        }
                        m[i] = ranges[i].0.clone();
                    }
                    break;
                }
            }
            yi = mat_vec(&self.r_inv, &yi);
        }
        pts.sort_by(|a, b| a.sq_dist(x).cmp(&b.sq_dist(x)));
        pts
    }

    /// Smallest singular value of `R^j` over one period (`λ = 1`).
    fn min_period_singular(&self) -> f64 {
        let n = self.period.unwrap_or(1);
        (0..n).map(|j| min_singular(&to_dmatrix(&matrix_power(&self.r, j)))).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Debug)]
struct LevelRecord {
    k: u32,
    turn: usize,
    pieces: usize,
    shortfall: bool,
}

pub struct ToralAlice {
    setup: ToralSetup,
    /// `(ρ at activation, t, Bob turn)`.
    active: Option<(f64, f64, usize)>,
    next_k: u32,
    levels: Vec<LevelRecord>,
    handled_points: usize,
}

pub fn toral_alice(r: Vec<Vec<i64>>, y: Point, beta: Scalar) -> Result<ToralAlice> {
    Ok(ToralAlice { setup: ToralSetup::new(r, y, beta)?, active: None, next_k: 0, levels: Vec::new(), handled_points: 0 })
}

impl ToralAlice {
    pub fn setup(&self) -> &ToralSetup {
        &self.setup
    }

    /// The set of `j` handled at level `k`: `β^{−k} ≤ λ^j < β^{−(k+1)}`.
    fn level_range(&self, k: u32) -> std::ops::Range<u32> {
        let s = &self.setup;
        let lb = -to_f64(&s.beta).ln() / s.lambda.ln();
        let first = |k: u32| ((k as f64 * lb) - 1e-12).ceil().max(0.0) as u32;
        first(k)..first(k + 1)
    }

    /// The removal for level `k` at Bob's ball, or `None` when nothing meets it.
    fn level_move(&self, b: &crate::geometry::Ball, k: u32, t: f64) -> Result<Option<(Neighborhood, bool, usize)>> {
        let s = &self.setup;
        let d = s.dim();
        let x = &b.center;
        let rf = to_f64(&b.radius);
        // pieces: (center offset from x, R^{-j})
        let mut pieces: Vec<(DVector<f64>, DMatrix<f64>)> = Vec::new();
        for j in self.level_range(k) {
            let rj = matrix_power(&s.r, j);
            let rjf = to_dmatrix(&rj);
            let reach = op_norm(&rjf) * rf + t;
            let image: Vec<Scalar> = rj
                .iter()
                .zip(&s.y.0)
                .map(|(row, yi)| row.iter().zip(&x.0).map(|(a, c)| Scalar::from_integer(a.clone()) * c).sum::<Scalar>() - yi)
                .collect();
            let ranges: Vec<(BigInt, BigInt)> = image
                .iter()
                .map(|v| ((v - from_f64(reach)).floor().to_integer(), (v + from_f64(reach)).ceil().to_integer()))
                .collect();
            let inv_j = s.inv_power(j);
            let inv_jf = DMatrix::from_fn(d, d, |a, c| to_f64(&inv_j[a][c]));
            let inv_norm = op_norm(&inv_jf);
            let mut m: Vec<BigInt> = ranges.iter().map(|(lo, _)| lo.clone()).collect();
            'odo: loop {
                let off: Vec<Scalar> = image.iter().zip(&m).map(|(v, mi)| v - Scalar::from_integer(mi.clone())).collect();
                let img_dist = off.iter().map(to_f64).map(|z| z * z).sum::<f64>().sqrt();
                if img_dist <= reach {
                    // center of the piece relative to x: −R^{−j}(R^j x − y − m)
                    let e: Vec<f64> = mat_vec(&inv_j, &off).iter().map(|z| -to_f64(z)).collect();
                    let ev = DVector::from_vec(e);
                    if ev.norm() <= rf + inv_norm * t {
                        pieces.push((ev, inv_jf.clone()));
                    }
                }
                for i in 0..d {
                    if m[i] < ranges[i].1 {
                        m[i] += 1;
                        continue 'odo;
                    }
                    m[i] = ranges[i].0.clone();
                }
                break;
            }
        }
        if pieces.is_empty() {
            return Ok(None);
        }
        // narrowest slab over the candidate normals
        let mut best: Option<(f64, f64, DVector<f64>)> = None;
        for n in s.normals() {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for (e, inv) in &pieces {
                let h = t * (inv.transpose() * &n).norm();
                let o = n.dot(e);
                lo = lo.min(o - h);
                hi = hi.max(o + h);
            }
            let half = (hi - lo) / 2.0;
            if best.as_ref().map_or(true, |(bh, _, _)| half < *bh) {
                best = Some((half, (hi + lo) / 2.0, n));
            }
        }
        let (half, mid, n) = best.expect("at least one normal");
        let nq: Vec<Scalar> = n.iter().map(|z| from_f64(*z)).collect();
        let nq_norm = nq.iter().map(to_f64).map(|z| z * z).sum::<f64>().sqrt();
        let offset = linalg::dot(&nq, &x.0) + from_f64(mid * nq_norm);
        let cap = &s.beta * &b.radius;
        let want = from_f64(half * (1.0 + 1e-9) + 1e-300);
        let shortfall = want > cap;
        let width = if shortfall { cap } else { want };
        let plane = AffineSubspace::hyperplane(nq, offset)?;
        Ok(Some((Neighborhood::new(plane, width)?, shortfall, pieces.len())))
    }

    fn periodic_move(&mut self, b: &crate::geometry::Ball) -> Result<Neighborhood> {
        let s = &self.setup;
        let d = s.dim();
        let eps = &s.beta * &b.radius;
        let near = s.periodic_points_near(&b.center, &(&b.radius + &eps));
        if near.is_empty() {
            return Ok(dummy_move(b, d - 1, &s.beta));
        }
        // a hyperplane through as many of the nearest points as stay independent
        let mut chosen: Vec<Point> = Vec::new();
        for p in near {
            if chosen.len() == d {
                break;
            }
            let mut trial = chosen.clone();
            trial.push(p);
            let diffs: Vec<Vec<Scalar>> = trial[1..].iter().map(|q| linalg::sub(&q.0, &trial[0].0)).collect();
            if linalg::rank(&diffs) == trial.len() - 1 {
                chosen = trial;
            }
        }
        self.handled_points += chosen.len();
        Neighborhood::new(hyperplane_through_points(&chosen)?, eps)
    }

    /// The avoidance radius `t` for the last Bob ball (`λ = 1`): every
    /// point of the countable set is at least `t/σ` from its center.
    fn periodic_t(&self, t: &Transcript) -> Option<f64> {
        let b = t.last_bob()?;
        let s = &self.setup;
        let eps = &s.beta * &b.radius;
        let mut t_x = to_f64(&eps);
        for p in s.periodic_points_near(&b.center, &(&b.radius + &eps)) {
            t_x = t_x.min(to_f64(&p.sq_dist(&b.center)).sqrt());
        }
        Some(t_x * s.min_period_singular())
    }

    /// The exported `t`, rounded down to a rational.
    pub fn certified_t(&self, t: &Transcript) -> Option<Scalar> {
        let tf = match self.setup.period {
            Some(_) => self.periodic_t(t)?,
            None => self.active?.1,
        };
        (tf > 0.0).then(|| from_f64(tf * (1.0 - 1e-9)))
    }

    /// Largest `j` covered by levels answered before the last Bob ball.
    pub fn covered_j(&self, t: &Transcript) -> Option<u32> {
        let turns = t.bob_turns();
        self.levels.iter().filter(|l| l.turn + 1 < turns).map(|l| self.level_range(l.k).end).max().map(|e| e.saturating_sub(1))
    }
}

impl AliceStrategy for ToralAlice {
    fn name(&self) -> String {
        format!("toral_alice(lambda={:.4})", self.setup.lambda)
    }

    fn validate(&self, config: &GameConfig) -> Result<()> {
        let (k, beta) = absolute_params(config)?;
        check_dim(self.setup.dim(), config.dim())?;
        if k + 1 != config.dim() {
            return Err(Error::Config("toral_alice plays the hyperplane game".into()));
        }
        if beta != self.setup.beta {
            return Err(Error::Config(format!("toral_alice was set up for β = {}", self.setup.beta)));
        }
        Ok(())
    }

    fn next_move(&mut self, t: &Transcript) -> Result<AliceMove> {
        let b = t.last_bob().ok_or_else(|| Error::Protocol("Alice moves after Bob".into()))?.clone();
        let turn = t.bob_turns() - 1;
        let d = self.setup.dim();
        if self.setup.period.is_some() {
            return Ok(AliceMove::Nbhd(self.periodic_move(&b)?));
        }
        let s = &self.setup;
        let beta = to_f64(&s.beta);
        let rho = to_f64(&b.radius);
        if self.active.is_none() {
            if rho > beta / 2.0 * s.delta2 * s.t0 {
                return Ok(AliceMove::Nbhd(dummy_move(&b, d - 1, &s.beta)));
            }
            let tt = s.t0.min(beta * rho / (2.0 * s.m_proj * s.b * s.delta1));
            self.active = Some((rho, tt, turn));
        }
        let (_, tt, _) = self.active.expect("activated");
        let k = self.next_k;
        let threshold = 0.5 * s.delta2 * s.t0 * beta.powi(k as i32 + 1);
        if rho >= threshold {
            return Ok(AliceMove::Nbhd(dummy_move(&b, d - 1, &s.beta)));
        }
        self.next_k += 1;
        match self.level_move(&b, k, tt)? {
            None => {
                self.levels.push(LevelRecord { k, turn, pieces: 0, shortfall: false });
                Ok(AliceMove::Nbhd(dummy_move(&b, d - 1, &self.setup.beta)))
            }
            Some((n, shortfall, pieces)) => {
                self.levels.push(LevelRecord { k, turn, pieces, shortfall });
                Ok(AliceMove::Nbhd(n))
            }
        }
    }

    fn reset(&mut self) {
        self.active = None;
        self.next_k = 0;
        self.levels.clear();
        self.handled_points = 0;
    }

    fn hints(&self, t: &Transcript) -> Value {
        let s = &self.setup;
        json!({
            "strategy": "toral_alice",
            "R": s.r.iter().map(|row| row.iter().map(|x| x.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "y": s.y,
            "beta": crate::geometry::fmt_scalar(&s.beta),
            "lambda": s.lambda,
            "period": s.period,
            "ell": s.ell,
            "a": s.a,
            "b": s.b,
            "delta1": s.delta1,
            "delta2": s.delta2,
            "M": s.m_proj,
            "t0": s.t0,
            "dim_V": s.v_basis.len(),
            "dim_W": s.w_basis.len(),
            "t": self.certified_t(t).map(|x| crate::geometry::fmt_scalar(&x)),
            "activation_turn": self.active.map(|a| a.2),
            "covered_j": self.covered_j(t),
            "levels": self.levels.iter().map(|l| json!({"k": l.k, "turn": l.turn, "pieces": l.pieces, "shortfall": l.shortfall})).collect::<Vec<_>>(),
            "shortfalls": self.levels.iter().filter(|l| l.shortfall).count(),
            "handled_points": self.handled_points,
        })
    }
}

/// `R` as a big-integer matrix, for the orbit certificate.
pub fn big_matrix(r: &[Vec<i64>]) -> Vec<Vec<BigInt>> {
    r.iter().map(|row| row.iter().map(|&x| BigInt::from(x)).collect()).collect()
}
