//! Hyperplane-absolute strategy whose outcome is badly approximable.
//!
//! After activation at radius `ρ`, level `k` is handled on the first Bob turn
//! with `β^{k−1}ρ ≥ ρⱼ > β^kρ`: every rational `p/q` with
//! `β^{−d(k−1)/(d+1)} ≤ q < β^{−dk/(d+1)}` near the ball lies on one
//! hyperplane, whose `β^{k+1}ρ`-neighborhood Alice removes.

use num::{BigInt, One};
use serde_json::{json, Value};

use super::{denominator_bound, factorial, unit_ball_volume_upper};
use crate::engine::{dummy_move, AliceMove, AliceStrategy, GameConfig, GameKind, Transcript};
use crate::error::{Error, Result};
use crate::geometry::{
    ceil, floor, fmt_scalar, hyperplane_through_points, linalg, pow, AffineSubspace, Ball, Neighborhood,
    Point, Scalar,
};

#[derive(Clone, Debug)]
struct Level {
    k: usize,
    turn: usize,
    points: usize,
}

#[derive(Clone, Debug)]
struct Active {
    rho: Scalar,
    c: Scalar,
    turn: usize,
}

pub struct BaAlice {
    d: usize,
    beta: Scalar,
    active: Option<Active>,
    next_k: usize,
    levels: Vec<Level>,
}

pub fn ba_alice(d: usize, beta: Scalar) -> BaAlice {
    BaAlice { d, beta, active: None, next_k: 1, levels: Vec::new() }
}

/// Rationals `p/q` with `q_lo ≤ q < q_hi` inside `B(center, radius)`, by
/// value (so `2/4` and `1/2` are one point).
pub fn rationals_in_ball(center: &Point, radius: &Scalar, q_lo: &BigInt, q_hi: &BigInt) -> Vec<Point> {
    let d = center.dim();
    let r2 = radius * radius;
    let mut seen = std::collections::BTreeSet::new();
    let mut qq = q_lo.clone().max(BigInt::one());
    while &qq < q_hi {
        let qs = Scalar::from_integer(qq.clone());
        let ranges: Vec<(BigInt, BigInt)> = center
            .0
            .iter()
            .map(|c| (ceil(&((c - radius) * &qs)), floor(&((c + radius) * &qs))))
            .collect();
        if ranges.iter().all(|(lo, hi)| lo <= hi) {
            let mut p: Vec<BigInt> = ranges.iter().map(|(lo, _)| lo.clone()).collect();
            'odometer: loop {
                let pt = Point(p.iter().map(|pi| Scalar::new(pi.clone(), qq.clone())).collect());
                if pt.sq_dist(center) <= r2 {
                    seen.insert(pt.0);
                }
                for i in 0..d {
                    if p[i] < ranges[i].1 {
                        p[i] += 1;
                        continue 'odometer;
                    }
                    p[i] = ranges[i].0.clone();
                }
                break;
            }
        }
        qq += 1;
    }
    seen.into_iter().map(Point).collect()
}

/// A hyperplane containing all of `pts`, or an assertion error if they are
/// affinely spanning.
pub fn fit_hyperplane(pts: &[Point]) -> Result<AffineSubspace> {
    let d = pts[0].dim();
    let mut rr = linalg::RowReducer::new();
    let mut basis = vec![pts[0].clone()];
    for p in &pts[1..] {
        if rr.try_add(&linalg::sub(&p.0, &pts[0].0)) {
            basis.push(p.clone());
        }
    }
    if rr.rank() >= d {
        return Err(Error::Assertion(format!(
            "{} rational points of one denominator window span ℝ^{d}; simplex lemma violated",
            pts.len()
        )));
    }
    let l = hyperplane_through_points(&basis)?;
    for p in pts {
        if !l.contains(p)? {
            return Err(Error::Assertion("fitted hyperplane misses a point".into()));
        }
    }
    Ok(l)
}

impl BaAlice {
    /// Activation test `r^d · d! · V_d < β^d` for `r = ρ(1+β²)`, with `V_d`
    /// replaced by a rational upper bound.
    fn admits(&self, rho: &Scalar) -> bool {
        let r = rho * (Scalar::one() + &self.beta * &self.beta);
        pow(&r, self.d as u32) * factorial(self.d) * unit_ball_volume_upper(self.d) < pow(&self.beta, self.d as u32)
    }

    fn handle_level(&mut self, b: &Ball, act: &Active, turn: usize) -> Result<AliceMove> {
        let k = self.next_k;
        let width = pow(&self.beta, (k + 1) as u32) * &act.rho;
        let reach = &b.radius + &width;
        let q_lo = denominator_bound(&self.beta, self.d, k - 1);
        let q_hi = denominator_bound(&self.beta, self.d, k);
        let pts = rationals_in_ball(&b.center, &reach, &q_lo, &q_hi);
        self.levels.push(Level { k, turn, points: pts.len() });
        self.next_k += 1;
        if pts.is_empty() {
            return Ok(AliceMove::Nbhd(dummy_move(b, self.d - 1, &self.beta)));
        }
        let l = fit_hyperplane(&pts)?;
        Ok(AliceMove::Nbhd(Neighborhood::new(l, width)?))
    }

    pub fn constant(&self) -> Option<Scalar> {
        self.active.as_ref().map(|a| a.c.clone())
    }

    /// Highest level whose removal Bob has answered in `t`.
    pub fn answered_level(&self, t: &Transcript) -> usize {
        let bob_turns = t.bob_turns();
        self.levels.iter().filter(|l| l.turn + 1 < bob_turns).map(|l| l.k).max().unwrap_or(0)
    }
}

impl AliceStrategy for BaAlice {
    fn name(&self) -> String {
        format!("ba_alice(d={}, beta={})", self.d, self.beta)
    }

    fn validate(&self, cfg: &GameConfig) -> Result<()> {
        match &cfg.kind {
            GameKind::Absolute { k, beta } if *k + 1 == self.d && beta == &self.beta && cfg.dim() == self.d => Ok(()),
            _ => Err(Error::Config(format!(
                "ba_alice needs the hyperplane absolute game in dimension {} with β = {}",
                self.d, self.beta
            ))),
        }
    }

    fn next_move(&mut self, t: &Transcript) -> Result<AliceMove> {
        let b = t.last_bob().ok_or_else(|| Error::Protocol("no Bob ball to answer".into()))?.clone();
        let turn = t.bob_turns() - 1;
        if self.active.is_none() && self.admits(&b.radius) {
            let c = &self.beta * &self.beta * &b.radius;
            self.active = Some(Active { rho: b.radius.clone(), c, turn });
        }
        let Some(act) = self.active.clone() else {
            return Ok(AliceMove::Nbhd(dummy_move(&b, self.d - 1, &self.beta)));
        };
        let k = self.next_k;
        let upper = pow(&self.beta, (k - 1) as u32) * &act.rho;
        if b.radius > upper {
            return Ok(AliceMove::Nbhd(dummy_move(&b, self.d - 1, &self.beta)));
        }
        if b.radius <= &upper * &self.beta {
            return Err(Error::Assertion(format!("Bob's radius skipped the window of level {k}")));
        }
        self.handle_level(&b, &act, turn)
    }

    fn reset(&mut self) {
        self.active = None;
        self.next_k = 1;
        self.levels.clear();
    }

    fn hints(&self, t: &Transcript) -> Value {
        let k_max = self.answered_level(t);
        let levels: Vec<Value> =
            self.levels.iter().map(|l| json!({"k": l.k, "turn": l.turn, "points": l.points})).collect();
        json!({
            "strategy": "ba_alice",
            "d": self.d,
            "beta": fmt_scalar(&self.beta),
            "c": self.active.as_ref().map(|a| fmt_scalar(&a.c)),
            "rho": self.active.as_ref().map(|a| fmt_scalar(&a.rho)),
            "activation_turn": self.active.as_ref().map(|a| a.turn),
            "k_max": k_max,
            "Q": denominator_bound(&self.beta, self.d, k_max).to_string(),
            "levels": levels,
            "lemma_checks": self.levels.iter().filter(|l| l.points > 0).count(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::Signed;
    use crate::engine::{play, GameConfig, Status};
    use crate::geometry::{int, q};
    use crate::strategies::{random_bob, shrink_in_place_bob};

    #[test]
    fn activation_threshold_d1() {
        // r < (1/4)/2 = 1/8 with r = ρ(1 + 1/16)
        let a = ba_alice(1, q(1, 4));
        assert!(a.admits(&q(1, 9)));
        assert!(!a.admits(&q(2, 17)));
        assert!(a.admits(&(q(2, 17) - q(1, 1_000_000))));
    }

    #[test]
    fn activation_threshold_d2() {
        // β (2·π)^{-1/2} ≈ 0.0798 for β = 1/5, divided by 1 + 1/25
        let a = ba_alice(2, q(1, 5));
        let bound = 0.2 / (2.0 * std::f64::consts::PI).sqrt() / 1.04;
        assert!(a.admits(&crate::geometry::from_f64(bound * 0.9999)));
        assert!(!a.admits(&crate::geometry::from_f64(bound * 1.0001)));
    }

    #[test]
    fn d1_window_meets_small_ball_once() {
        // oracle: every pair of distinct rationals with 2^{k-1} ≤ q < 2^k is
        // farther apart than the diameter of a ball of radius 4^{-(k-1)}/8
        for k in 1..=6u32 {
            let (lo, hi) = (1i64 << (k - 1), 1i64 << k);
            let mut vals: Vec<(i64, i64)> = Vec::new();
            for qq in lo..hi {
                for p in 0..=qq {
                    vals.push((p, qq));
                }
            }
            let diam = q(1, 4 * 4i64.pow(k - 1));
            for (i, a) in vals.iter().enumerate() {
                for b in &vals[i + 1..] {
                    let (x, y) = (q(a.0, a.1), q(b.0, b.1));
                    if x != y {
                        assert!((x - y).abs() > diam);
                    }
                }
            }
            let pts = rationals_in_ball(&Point(vec![q(1, 3)]), &(diam / int(2)), &BigInt::from(lo), &BigInt::from(hi));
            assert!(pts.len() <= 1);
        }
    }

    #[test]
    fn enumeration_matches_brute_force() {
        let c = Point(vec![q(2, 7), q(3, 11)]);
        let r = q(1, 20);
        let got = rationals_in_ball(&c, &r, &BigInt::from(5), &BigInt::from(30));
        let mut want = std::collections::BTreeSet::new();
        for qq in 5..30 {
            for p1 in 0..qq {
                for p2 in 0..qq {
                    let pt = Point(vec![q(p1, qq), q(p2, qq)]);
                    if pt.sq_dist(&c) <= &r * &r {
                        want.insert(pt.0);
                    }
                }
            }
        }
        assert_eq!(got.into_iter().map(|p| p.0).collect::<std::collections::BTreeSet<_>>(), want);
    }

    #[test]
    fn spanning_points_trip_the_assertion() {
        let pts = vec![Point(vec![int(0), int(0)]), Point(vec![int(1), int(0)]), Point(vec![int(0), int(1)])];
        assert!(matches!(fit_hyperplane(&pts), Err(Error::Assertion(_))));
        let line = vec![Point(vec![int(0), int(0)]), Point(vec![int(1), int(1)]), Point(vec![int(2), int(2)])];
        assert!(fit_hyperplane(&line).is_ok());
    }

    #[test]
    fn plays_to_horizon_and_reports_levels() {
        let cfg = GameConfig::absolute(1, 0, q(1, 4), 12);
        let t = play(cfg, &mut ba_alice(1, q(1, 4)), &mut random_bob(11)).unwrap();
        assert_eq!(t.status, Status::AliceWinsAtHorizon);
        let k_max = t.hints["k_max"].as_u64().unwrap();
        assert!(k_max >= 3, "{}", t.hints);
        assert_eq!(t.hints["Q"].as_str().unwrap(), (1u64 << k_max).to_string());

        let open = Ball::new(Point(vec![q(1, 2)]), q(1, 1)).unwrap();
        let t = play(GameConfig::absolute(1, 0, q(1, 4), 10), &mut ba_alice(1, q(1, 4)), &mut shrink_in_place_bob(open))
            .unwrap();
        assert_eq!(t.status, Status::AliceWinsAtHorizon);
    }

    #[test]
    fn rejects_mismatched_game() {
        let a = ba_alice(2, q(1, 5));
        assert!(a.validate(&GameConfig::absolute(2, 0, q(1, 5), 3)).is_err());
        assert!(a.validate(&GameConfig::absolute(2, 1, q(1, 6), 3)).is_err());
        assert!(a.validate(&GameConfig::absolute(2, 1, q(1, 5), 3)).is_ok());
    }
}
