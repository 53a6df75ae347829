//! Alice for an intersection of targets, each won by its own strategy.
//!
//! With `n` components, component `i` answers the real turns `i, i+n, i+2n, …`
//! and sees only those Bob balls. Consecutive balls of that subsequence
//! shrink by at least `βⁿ`, and its own removals stay avoided, so the
//! component plays a legal `βⁿ`-absolute game of its own.

use serde_json::{json, Value};

use crate::engine::{AliceMove, AliceStrategy, GameConfig, Move, Transcript};
use crate::error::{Error, Result};
use crate::geometry::{fmt_scalar, pow, Scalar};

use super::absolute_params;

pub struct IntersectAlice {
    components: Vec<Box<dyn AliceStrategy>>,
    beta: Scalar,
    virtuals: Vec<Option<Transcript>>,
}

/// Combines strategies that each play the `βⁿ`-absolute game, `n` being
/// the number of components.
pub fn intersect_alices(components: Vec<Box<dyn AliceStrategy>>, beta: Scalar) -> Result<IntersectAlice> {
    if components.is_empty() {
        return Err(Error::Input("need at least one component strategy".into()));
    }
    let n = components.len();
    Ok(IntersectAlice { components, beta, virtuals: vec![None; n] })
}

impl IntersectAlice {
    /// The parameter each component plays with.
    pub fn component_beta(&self) -> Scalar {
        pow(&self.beta, self.components.len() as u32)
    }

    pub fn component_transcript(&self, i: usize) -> Option<&Transcript> {
        self.virtuals.get(i)?.as_ref()
    }

    fn virtual_config(&self, config: &GameConfig) -> Result<GameConfig> {
        let (k, _) = absolute_params(config)?;
        let mut v = config.clone();
        v.kind = crate::engine::GameKind::Absolute { k, beta: self.component_beta() };
        Ok(v)
    }
}

impl AliceStrategy for IntersectAlice {
    fn name(&self) -> String {
        let names: Vec<String> = self.components.iter().map(|c| c.name()).collect();
        format!("intersect[{}]", names.join(", "))
    }

    fn validate(&self, config: &GameConfig) -> Result<()> {
        let (_, beta) = absolute_params(config)?;
        if beta != self.beta {
            return Err(Error::Config(format!("intersection was set up for β = {}", fmt_scalar(&self.beta))));
        }
        let v = self.virtual_config(config)?;
        self.components.iter().try_for_each(|c| c.validate(&v))
    }

    fn next_move(&mut self, t: &Transcript) -> Result<AliceMove> {
        let b = t.last_bob().ok_or_else(|| Error::Protocol("Alice moves after Bob".into()))?.clone();
        let i = (t.bob_turns() - 1) % self.components.len();
        let v = self.virtual_config(&t.config)?;
        let vt = self.virtuals[i].get_or_insert_with(|| Transcript::new(v));
        vt.moves.push(Move::Bob(b));
        let m = self.components[i].next_move(vt)?;
        vt.moves.push(Move::Alice(m.clone()));
        Ok(m)
    }

    fn reset(&mut self) {
        self.components.iter_mut().for_each(|c| c.reset());
        self.virtuals.iter_mut().for_each(|v| *v = None);
    }

    fn hints(&self, _t: &Transcript) -> Value {
        let comps: Vec<Value> = self
            .components
            .iter()
            .zip(&self.virtuals)
            .map(|(c, v)| v.as_ref().map_or(Value::Null, |vt| c.hints(vt)))
            .collect();
        json!({
            "strategy": "intersection",
            "n": self.components.len(),
            "component_beta": fmt_scalar(&self.component_beta()),
            "components": comps,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::{ba_certificate, orbit_certificate, BA_BUDGET};
    use crate::engine::{final_ball, play, Status};
    use crate::geometry::{parse_scalar, q, Ball, Point};
    use crate::strategies::{ba_alice, big_matrix, random_bob, toral_alice};

    #[test]
    fn single_component_matches_plain_strategy() {
        let cfg = GameConfig::absolute(1, 0, q(1, 4), 10);
        let plain = play(cfg.clone(), &mut ba_alice(1, q(1, 4)), &mut random_bob(3)).unwrap();
        let mut wrapped = intersect_alices(vec![Box::new(ba_alice(1, q(1, 4)))], q(1, 4)).unwrap();
        let t = play(cfg, &mut wrapped, &mut random_bob(3)).unwrap();
        assert_eq!(plain.moves, t.moves);
        assert_eq!(plain.hints, t.hints["components"][0]);
    }

    #[test]
    fn ba_and_toral_both_certify() {
        let beta = q(1, 5);
        let cb = pow(&beta, 2);
        let r = vec![vec![2, 0], vec![0, 3]];
        for seed in 0..2 {
            let mut alice = intersect_alices(
                vec![Box::new(ba_alice(2, cb.clone())), Box::new(toral_alice(r.clone(), Point::origin(2), cb.clone()).unwrap())],
                beta.clone(),
            )
            .unwrap();
            let opening = Ball::new(Point(vec![q(3, 7), q(2, 7)]), q(1, 64)).unwrap();
            let t = play(GameConfig::absolute(2, 1, beta.clone(), 8), &mut alice, &mut random_bob(seed).with_opening(opening))
                .unwrap();
            assert_eq!(t.status, Status::AliceWinsAtHorizon, "{:?}", t.meta.reason);
            let fb = final_ball(&t).unwrap();
            let ba = &t.hints["components"][0];
            let c = parse_scalar(ba["c"].as_str().expect("BA activated")).unwrap();
            let qmax: u64 = ba["Q"].as_str().unwrap().parse().unwrap();
            assert!(ba_certificate(&fb, &c, qmax, BA_BUDGET).unwrap().passed());
            let tt = parse_scalar(t.hints["components"][1]["t"].as_str().expect("toral activated")).unwrap();
            assert!(orbit_certificate(&fb, &big_matrix(&r), &Point::origin(2), &tt, 20).unwrap().passed());
        }
    }

    #[test]
    fn wrong_beta_rejected() {
        let mut a = intersect_alices(vec![Box::new(ba_alice(1, q(1, 16)))], q(1, 4)).unwrap();
        assert!(play(GameConfig::absolute(1, 0, q(1, 4), 3), &mut a, &mut random_bob(0)).is_err());
    }
}
