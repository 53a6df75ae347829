//! Adversaries: Bobs that probe Alice's strategies, and two simple Alices
//! used to exercise Bob-side constructions.

use num::{BigInt, Signed, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::unit_ball_grid;
use crate::engine::{
    legal_bob_move, AliceMove, AliceStrategy, Arena, BobMove, BobStrategy, GameKind, Transcript,
};
use crate::error::Result;
use crate::geometry::{
    linalg, q, sq_dist_point_subspace, sqrt_lower, sqrt_upper, AffineSubspace, Ball, Neighborhood, Point,
    Scalar,
};

/// Where Bob's next ball must go: inside `ball`, with one of `radii`.
struct Parent {
    ball: Ball,
    radii: Vec<Scalar>,
    forbidden: Option<Neighborhood>,
}

fn parent(t: &Transcript, factors: &[Scalar]) -> Option<Parent> {
    let prev = t.last_bob()?;
    Some(match (&t.config.kind, t.last_alice()?) {
        (GameKind::Absolute { beta, .. }, AliceMove::Nbhd(n)) => Parent {
            ball: prev.clone(),
            radii: factors.iter().map(|f| f * beta * &prev.radius).collect(),
            forbidden: Some(n.clone()),
        },
        (GameKind::Classic { beta, .. }, AliceMove::Ball(a)) => {
            Parent { ball: a.clone(), radii: vec![beta * &a.radius], forbidden: None }
        }
        _ => return None,
    })
}

/// Centers of radius-`r` balls inside `p`: a unit-ball grid scaled into
/// `B(center, ρ − r)`, or net points of `K` there when playing on a set.
fn candidate_centers(t: &Transcript, p: &Ball, r: &Scalar, m: i64) -> Result<Vec<Point>> {
    let room = &p.radius - r;
    if room.is_negative() {
        return Ok(Vec::new());
    }
    if let Arena::OnSet { oracle } = &t.config.arena {
        if room.is_zero() {
            return Ok(vec![p.center.clone()]);
        }
        let inner = Ball::new(p.center.clone(), room)?;
        let res = r / Scalar::from_integer(m.into());
        return oracle.net(&inner, &res);
    }
    Ok(unit_ball_grid(p.dim(), m).into_iter().map(|g| p.center.offset(&g, &room)).collect())
}

fn legal_candidates(t: &Transcript, par: &Parent, m: i64) -> Result<Vec<Ball>> {
    let mut out = Vec::new();
    for r in &par.radii {
        for c in candidate_centers(t, &par.ball, r, m)? {
            let b = Ball::new(c, r.clone())?;
            if legal_bob_move(t, &b)? {
                out.push(b);
            }
        }
    }
    Ok(out)
}

/// The opening ball: `opening` itself, moved onto `K` when playing on a set.
fn open(t: &Transcript, opening: &Ball) -> Result<BobMove> {
    match &t.config.arena {
        Arena::FullSpace { .. } => Ok(BobMove::Ball(opening.clone())),
        Arena::OnSet { oracle } => {
            let res = &opening.radius / Scalar::from_integer(64.into());
            Ok(match oracle.point_in(opening, &res)? {
                Some(c) => BobMove::Ball(Ball::new(c, opening.radius.clone())?),
                None => BobMove::NoMove,
            })
        }
    }
}

fn seeded_opening(rng: &mut ChaCha8Rng, d: usize) -> Ball {
    let c = (0..d).map(|_| q(rng.gen_range(0..64), 64)).collect();
    Ball::new(Point(c), q(1, 1)).expect("unit radius")
}

/// Picks uniformly among legal balls on a grid of candidates, with radii
/// `β·ρ`, `5/4·β·ρ` and `3/2·β·ρ` in the absolute game.
pub struct RandomBob {
    seed: u64,
    opening: Option<Ball>,
    rng: ChaCha8Rng,
    grid: i64,
}

pub fn random_bob(seed: u64) -> RandomBob {
    RandomBob { seed, opening: None, rng: ChaCha8Rng::seed_from_u64(seed), grid: 8 }
}

impl RandomBob {
    pub fn with_opening(mut self, b: Ball) -> Self {
        self.opening = Some(b);
        self
    }

    pub fn with_grid(mut self, m: i64) -> Self {
        self.grid = m;
        self
    }
}

impl BobStrategy for RandomBob {
    fn name(&self) -> String {
        format!("random_bob(seed={})", self.seed)
    }

    fn next_move(&mut self, t: &Transcript) -> Result<BobMove> {
        let factors = [q(1, 1), q(5, 4), q(3, 2)];
        let Some(par) = parent(t, &factors) else {
            let b = match &self.opening {
                Some(b) => b.clone(),
                None => seeded_opening(&mut self.rng, t.config.dim()),
            };
            return open(t, &b);
        };
        let cands = legal_candidates(t, &par, self.grid)?;
        Ok(match cands.choose(&mut self.rng) {
            Some(b) => BobMove::Ball(b.clone()),
            None => BobMove::NoMove,
        })
    }

    fn reset(&mut self) {
        self.rng = ChaCha8Rng::seed_from_u64(self.seed);
    }
}

/// Keeps the center and shrinks by the smallest legal factor; if Alice has
/// removed the center, falls back to the legal grid ball nearest to it.
pub struct ShrinkInPlaceBob {
    opening: Ball,
}

pub fn shrink_in_place_bob(opening: Ball) -> ShrinkInPlaceBob {
    ShrinkInPlaceBob { opening }
}

impl BobStrategy for ShrinkInPlaceBob {
    fn name(&self) -> String {
        "shrink_in_place_bob".into()
    }

    fn next_move(&mut self, t: &Transcript) -> Result<BobMove> {
        let Some(par) = parent(t, &[q(1, 1)]) else {
            return open(t, &self.opening);
        };
        let b = Ball::new(par.ball.center.clone(), par.radii[0].clone())?;
        if legal_bob_move(t, &b)? {
            return Ok(BobMove::Ball(b));
        }
        let target = par.ball.center.clone();
        Ok(nearest(legal_candidates(t, &par, 16)?, &target))
    }

    fn reset(&mut self) {}
}

fn nearest(cands: Vec<Ball>, target: &Point) -> BobMove {
    cands
        .into_iter()
        .min_by(|a, b| a.center.sq_dist(target).cmp(&b.center.sq_dist(target)))
        .map_or(BobMove::NoMove, BobMove::Ball)
}

/// Rational `p/q` with `q ≤ qmax` nearest to `x` (ties to the smaller `q`).
pub fn best_rational(x: &Point, qmax: u64) -> Point {
    let mut best: Option<(Scalar, Point)> = None;
    for qq in 1..=qmax.max(1) {
        let qs = Scalar::from_integer(BigInt::from(qq));
        let p = Point(x.0.iter().map(|c| (c * &qs).round() / &qs).collect());
        let d = p.sq_dist(x);
        if best.as_ref().map_or(true, |(bd, _)| &d < bd) {
            best = Some((d, p));
        }
    }
    best.expect("qmax ≥ 1").1
}

/// Steers every ball as close as the rules allow to the best rational
/// approximation (denominator at most `qmax`) of the current center.
pub struct RationalHuggerBob {
    qmax: u64,
    opening: Ball,
}

pub fn rational_hugger_bob(qmax: u64, opening: Ball) -> RationalHuggerBob {
    RationalHuggerBob { qmax, opening }
}

/// Candidate centers near `target` that respect the constraints: the target,
/// the target pushed just clear of the removed flat (both sides), and each of
/// those pulled radially into the containment ball.
fn steer(par: &Parent, r: &Scalar, target: &Point) -> Result<Vec<Point>> {
    let mut pts = vec![target.clone()];
    if let Some(n) = &par.forbidden {
        let l = &n.subspace;
        let foot = l.project(target)?;
        let mut u = linalg::sub(&target.0, &foot.0);
        if linalg::sq_norm(&u).is_zero() {
            u = match l.normal() {
                Some((nv, _)) => nv.to_vec(),
                None => {
                    let mut rr = linalg::RowReducer::new();
                    for v in l.directions() {
                        rr.try_add(v);
                    }
                    let e = (0..target.dim())
                        .map(|i| linalg::unit(target.dim(), i))
                        .find(|e| rr.is_independent(e))
                        .expect("a proper flat misses some coordinate direction");
                    let proj = l.project(&foot.offset(&e, &q(1, 1)))?;
                    linalg::sub(&foot.offset(&e, &q(1, 1)).0, &proj.0)
                }
            };
        }
        let need = (&n.width + r) * q(1_000_001, 1_000_000);
        let s = need / sqrt_lower(&linalg::sq_norm(&u));
        for sign in [1, -1] {
            pts.push(foot.offset(&u, &(&s * Scalar::from_integer(sign.into()))));
        }
    }
    let room = &par.ball.radius - r;
    let mut clamped = Vec::new();
    for p in &pts {
        let v = linalg::sub(&p.0, &par.ball.center.0);
        let len2 = linalg::sq_norm(&v);
        if len2 > &room * &room {
            let f = &room / sqrt_upper(&len2);
            clamped.push(par.ball.center.offset(&v, &f));
        }
    }
    pts.extend(clamped);
    Ok(pts)
}

impl BobStrategy for RationalHuggerBob {
    fn name(&self) -> String {
        format!("rational_hugger_bob(Q={})", self.qmax)
    }

    fn next_move(&mut self, t: &Transcript) -> Result<BobMove> {
        let Some(par) = parent(t, &[q(1, 1)]) else {
            return open(t, &self.opening);
        };
        let target = best_rational(&par.ball.center, self.qmax);
        let r = par.radii[0].clone();
        let mut cands = Vec::new();
        for c in steer(&par, &r, &target)? {
            let b = Ball::new(c, r.clone())?;
            if legal_bob_move(t, &b)? {
                cands.push(b);
            }
        }
        cands.extend(legal_candidates(t, &par, 16)?);
        Ok(nearest(cands, &target))
    }

    fn reset(&mut self) {}
}

/// Keeps every center on the flat `l`, as far from Alice's removed flat as
/// the grid allows; declares "no move" when no such ball is legal.
pub struct OnlineHyperplaneBob {
    l: AffineSubspace,
    opening_radius: Scalar,
    grid: i64,
}

pub fn online_hyperplane_bob(l: AffineSubspace) -> OnlineHyperplaneBob {
    OnlineHyperplaneBob { l, opening_radius: q(1, 1), grid: 16 }
}

impl OnlineHyperplaneBob {
    fn centers_on_flat(&self, c: &Point, room: &Scalar) -> Result<Vec<Point>> {
        let foot = self.l.project(c)?;
        // orthogonalise the directions so that the scaled grid stays in the ball
        let mut orth: Vec<Vec<Scalar>> = Vec::new();
        for v in self.l.directions() {
            let mut w = v.clone();
            for o in &orth {
                let f = linalg::dot(&w, o) / linalg::sq_norm(o);
                w = linalg::sub(&w, &linalg::scale(o, &f));
            }
            orth.push(w);
        }
        let scales: Vec<Scalar> = orth.iter().map(|o| room / sqrt_upper(&linalg::sq_norm(o))).collect();
        let mut out = Vec::new();
        for g in unit_ball_grid(orth.len(), self.grid) {
            let mut p = foot.clone();
            for ((gi, o), s) in g.iter().zip(&orth).zip(&scales) {
                p = p.offset(o, &(gi * s));
            }
            out.push(p);
        }
        Ok(out)
    }
}

impl BobStrategy for OnlineHyperplaneBob {
    fn name(&self) -> String {
        format!("online_hyperplane_bob(k={})", self.l.dim())
    }

    fn next_move(&mut self, t: &Transcript) -> Result<BobMove> {
        let Some(par) = parent(t, &[q(1, 1)]) else {
            let b = Ball::new(self.l.anchor().clone(), self.opening_radius.clone())?;
            return Ok(if legal_bob_move(t, &b)? { BobMove::Ball(b) } else { BobMove::NoMove });
        };
        let r = par.radii[0].clone();
        let room = &par.ball.radius - &r;
        if room.is_negative() {
            return Ok(BobMove::NoMove);
        }
        let mut best: Option<(Scalar, Ball)> = None;
        for c in self.centers_on_flat(&par.ball.center, &room)? {
            let b = Ball::new(c, r.clone())?;
            if !legal_bob_move(t, &b)? {
                continue;
            }
            let score = match &par.forbidden {
                Some(n) => sq_dist_point_subspace(&b.center, &n.subspace)?,
                None => Scalar::zero(),
            };
            if best.as_ref().map_or(true, |(s, _)| &score > s) {
                best = Some((score, b));
            }
        }
        Ok(best.map_or(BobMove::NoMove, |(_, b)| BobMove::Ball(b)))
    }

    fn reset(&mut self) {}
}

/// Uniformly random legal Alice moves from a grid: balls in the classic
/// game, hyperplane-direction flats of width `β·ρ` in the absolute game.
pub struct RandomAlice {
    seed: u64,
    rng: ChaCha8Rng,
}

pub fn random_alice(seed: u64) -> RandomAlice {
    RandomAlice { seed, rng: ChaCha8Rng::seed_from_u64(seed) }
}

impl AliceStrategy for RandomAlice {
    fn name(&self) -> String {
        format!("random_alice(seed={})", self.seed)
    }

    fn next_move(&mut self, t: &Transcript) -> Result<AliceMove> {
        let b = t.last_bob().expect("Alice answers a ball");
        let d = b.dim();
        let grid = unit_ball_grid(d, 8);
        let g = grid.choose(&mut self.rng).expect("grid is nonempty");
        match &t.config.kind {
            GameKind::Classic { alpha, .. } => {
                let r = alpha * &b.radius;
                let room = &b.radius - &r;
                Ok(AliceMove::Ball(Ball::new(b.center.offset(g, &room), r)?))
            }
            GameKind::Absolute { k, beta } => {
                let anchor = b.center.offset(g, &b.radius);
                let dirs: Vec<Vec<Scalar>> = (0..*k)
                    .map(|_| (0..d).map(|_| q(self.rng.gen_range(-4..=4), 1)).collect())
                    .collect();
                let l = AffineSubspace::spanned_by(anchor.clone(), &dirs)?;
                let l = if l.dim() == *k {
                    l
                } else {
                    AffineSubspace::new(anchor, (0..*k).map(|i| linalg::unit(d, i)).collect())?
                };
                Ok(AliceMove::Nbhd(Neighborhood::new(l, beta * &b.radius)?))
            }
        }
    }

    fn reset(&mut self) {
        self.rng = ChaCha8Rng::seed_from_u64(self.seed);
    }
}

/// Removes the widest allowed neighborhood of a coordinate k-flat through
/// Bob's center (classic game: plays the concentric ball).
pub struct CenterRemovingAlice;

pub fn center_removing_alice() -> CenterRemovingAlice {
    CenterRemovingAlice
}

impl AliceStrategy for CenterRemovingAlice {
    fn name(&self) -> String {
        "center_removing_alice".into()
    }

    fn next_move(&mut self, t: &Transcript) -> Result<AliceMove> {
        let b = t.last_bob().expect("Alice answers a ball");
        match &t.config.kind {
            GameKind::Classic { alpha, .. } => Ok(AliceMove::Ball(Ball::new(b.center.clone(), alpha * &b.radius)?)),
            GameKind::Absolute { k, beta } => {
                let dirs = (0..*k).map(|i| linalg::unit(b.dim(), i)).collect();
                let l = AffineSubspace::new(b.center.clone(), dirs)?;
                Ok(AliceMove::Nbhd(Neighborhood::new(l, beta * &b.radius)?))
            }
        }
    }

    fn reset(&mut self) {}
}

/// Ratio `ρᵢ₊₁/ρᵢ` of consecutive Bob radii, as floats (for diagnostics).
pub fn radius_ratios(t: &Transcript) -> Vec<f64> {
    let r: Vec<&Scalar> = t.bob_balls().map(|b| &b.radius).collect();
    r.windows(2).map(|w| (w[1] / w[0]).to_f64().unwrap_or(f64::NAN)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{play, GameConfig, Status};
    use crate::geometry::int;

    #[test]
    fn online_bob_survives_point_removal() {
        let l = AffineSubspace::new(Point::origin(2), vec![vec![int(0), int(1)]]).unwrap();
        let cfg = GameConfig::absolute(2, 0, q(1, 4), 20);
        let t = play(cfg, &mut center_removing_alice(), &mut online_hyperplane_bob(l.clone())).unwrap();
        assert_eq!(t.status, Status::AliceWinsAtHorizon);
        assert_eq!(t.bob_balls().count(), 20);
        for b in t.bob_balls() {
            assert!(l.contains(&b.center).unwrap());
        }
    }

    #[test]
    fn online_bob_is_stopped_by_hyperplane_removal() {
        let l = AffineSubspace::new(Point::origin(2), vec![vec![int(0), int(1)]]).unwrap();
        let cfg = GameConfig::absolute(2, 1, q(1, 4), 5);
        struct RemoveL(AffineSubspace);
        impl AliceStrategy for RemoveL {
            fn name(&self) -> String {
                "remove_l".into()
            }
            fn next_move(&mut self, t: &Transcript) -> Result<AliceMove> {
                let r = &t.last_bob().unwrap().radius;
                Ok(AliceMove::Nbhd(Neighborhood::new(self.0.clone(), q(1, 4) * r)?))
            }
            fn reset(&mut self) {}
        }
        let t = play(cfg, &mut RemoveL(l.clone()), &mut online_hyperplane_bob(l)).unwrap();
        // on the full space the engine knows a legal move exists, so the claim is illegal
        assert!(matches!(t.status, Status::IllegalMove { .. }));
        assert_eq!(t.bob_balls().count(), 1);
    }

    #[test]
    fn shrink_in_place_keeps_center_when_legal() {
        let cfg = GameConfig::absolute(1, 0, q(1, 4), 4);
        let open = Ball::new(Point(vec![q(1, 3)]), int(1)).unwrap();
        struct FarAway;
        impl AliceStrategy for FarAway {
            fn name(&self) -> String {
                "far".into()
            }
            fn next_move(&mut self, t: &Transcript) -> Result<AliceMove> {
                Ok(AliceMove::Nbhd(crate::engine::dummy_move(t.last_bob().unwrap(), 0, &q(1, 4))))
            }
            fn reset(&mut self) {}
        }
        let t = play(cfg, &mut FarAway, &mut shrink_in_place_bob(open)).unwrap();
        assert_eq!(t.status, Status::AliceWinsAtHorizon);
        assert!(t.bob_balls().all(|b| b.center == Point(vec![q(1, 3)])));
        // center removed: still legal via fallback
        let open = Ball::new(Point(vec![q(1, 3)]), int(1)).unwrap();
        let t = play(GameConfig::absolute(1, 0, q(1, 4), 6), &mut center_removing_alice(), &mut shrink_in_place_bob(open))
            .unwrap();
        assert_eq!(t.status, Status::AliceWinsAtHorizon);
    }

    #[test]
    fn random_bob_is_seed_deterministic() {
        let cfg = GameConfig::absolute(2, 1, q(1, 5), 6);
        let a = play(cfg.clone(), &mut random_alice(1), &mut random_bob(7)).unwrap();
        let b = play(cfg, &mut random_alice(1), &mut random_bob(7)).unwrap();
        assert_eq!(a.status, Status::AliceWinsAtHorizon);
        assert_eq!(serde_json::to_string(&a.to_json()).unwrap(), serde_json::to_string(&b.to_json()).unwrap());
        for r in radius_ratios(&a) {
            assert!(r >= 0.2 - 1e-12);
        }
    }

    #[test]
    fn hugger_approaches_target_rational() {
        assert_eq!(best_rational(&Point(vec![q(3141, 1000)]), 10), Point(vec![q(22, 7)]));
        let cfg = GameConfig::absolute(1, 0, q(1, 4), 6);
        let open = Ball::new(Point(vec![q(1, 3) + q(1, 100)]), q(1, 10)).unwrap();
        let t = play(cfg, &mut random_alice(3), &mut rational_hugger_bob(5, open)).unwrap();
        assert_eq!(t.status, Status::AliceWinsAtHorizon);
    }

    #[test]
    fn random_alice_classic_moves_are_legal() {
        let cfg = GameConfig::classic(2, q(1, 3), q(1, 3), 8);
        let t = play(cfg, &mut random_alice(5), &mut random_bob(5)).unwrap();
        assert_eq!(t.status, Status::AliceWinsAtHorizon);
    }
}
