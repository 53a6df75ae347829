//! Game state machines: the classic (α,β)-game and the k-dimensional
//! β-absolute game, on ℝᵈ or on a closed set `K`.
//!
//! The engine owns legality. Strategies propose moves after reading the
//! transcript; an illegal proposal (or a strategy error) ends the game with
//! the proposer recorded as the offender.

use std::fmt;

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::fractals::KOracle;
use crate::geometry::{
    ball_avoids_neighborhood, ball_contains_ball, fmt_scalar, linalg, parse_scalar, q, serde_scalar,
    AffineSubspace, Ball, Neighborhood, Point, Scalar,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GameKind {
    Classic {
        #[serde(with = "serde_scalar")]
        alpha: Scalar,
        #[serde(with = "serde_scalar")]
        beta: Scalar,
    },
    Absolute {
        k: usize,
        #[serde(with = "serde_scalar")]
        beta: Scalar,
    },
}

impl GameKind {
    pub fn beta(&self) -> &Scalar {
        match self {
            GameKind::Classic { beta, .. } | GameKind::Absolute { beta, .. } => beta,
        }
    }

    pub fn is_absolute(&self) -> bool {
        matches!(self, GameKind::Absolute { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Arena {
    FullSpace { d: usize },
    OnSet { oracle: KOracle },
}

impl Arena {
    pub fn dim(&self) -> usize {
        match self {
            Arena::FullSpace { d } => *d,
            Arena::OnSet { oracle } => oracle.dim(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameConfig {
    pub kind: GameKind,
    pub arena: Arena,
    /// Number of rounds; one round is a Bob move followed by an Alice move.
    pub horizon: usize,
    pub seed: u64,
    /// Membership resolution for resolution-limited oracles.
    #[serde(with = "serde_scalar", default = "default_resolution")]
    pub resolution: Scalar,
}

fn default_resolution() -> Scalar {
    q(1, 1 << 20)
}

impl GameConfig {
    pub fn new(kind: GameKind, arena: Arena, horizon: usize, seed: u64) -> Self {
        GameConfig { kind, arena, horizon, seed, resolution: default_resolution() }
    }

    pub fn absolute(d: usize, k: usize, beta: Scalar, horizon: usize) -> Self {
        Self::new(GameKind::Absolute { k, beta }, Arena::FullSpace { d }, horizon, 0)
    }

    pub fn classic(d: usize, alpha: Scalar, beta: Scalar, horizon: usize) -> Self {
        Self::new(GameKind::Classic { alpha, beta }, Arena::FullSpace { d }, horizon, 0)
    }

    pub fn dim(&self) -> usize {
        self.arena.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let zero = Scalar::zero();
        let one = Scalar::one();
        let d = self.dim();
        if d == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        match &self.kind {
            GameKind::Classic { alpha, beta } => {
                if !(alpha > &zero && alpha < &one && beta > &zero && beta < &one) {
                    return Err(Error::Config(format!("classic game needs 0<α<1, 0<β<1 (α={alpha}, β={beta})")));
                }
            }
            GameKind::Absolute { k, beta } => {
                if !(beta > &zero && beta < &q(1, 3)) {
                    return Err(Error::Config(format!("absolute game needs 0<β<1/3 (β={beta})")));
                }
                if *k >= d {
                    return Err(Error::Config(format!("flat dimension k={k} must be below d={d}")));
                }
            }
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if !self.resolution.is_positive() {
            return Err(Error::Config("resolution must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AliceMove {
    Ball(Ball),
    Nbhd(Neighborhood),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Move {
    Bob(Ball),
    Alice(AliceMove),
}

impl Move {
    pub fn to_json(&self) -> Value {
        let pts = |p: &Point| Value::from(p.0.iter().map(fmt_scalar).collect::<Vec<_>>());
        match self {
            Move::Bob(b) => json!({"who": "bob", "center": pts(&b.center), "radius": fmt_scalar(&b.radius)}),
            Move::Alice(AliceMove::Ball(b)) => {
                json!({"who": "alice", "center": pts(&b.center), "radius": fmt_scalar(&b.radius)})
            }
            Move::Alice(AliceMove::Nbhd(n)) => {
                let l = &n.subspace;
                let mut m = json!({"who": "alice", "k": l.dim(), "anchor": pts(l.anchor())});
                if let Some((nv, c)) = l.normal() {
                    m["normal"] = Value::from(nv.iter().map(fmt_scalar).collect::<Vec<_>>());
                    m["offset"] = Value::from(fmt_scalar(c));
                }
                m["directions"] = l
                    .directions()
                    .iter()
                    .map(|v| Value::from(v.iter().map(fmt_scalar).collect::<Vec<_>>()))
                    .collect();
                m["width"] = Value::from(fmt_scalar(&n.width));
                m
            }
        }
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |what: &str| Error::Input(format!("malformed move: {what}"));
        let vec = |v: &Value| -> Result<Vec<Scalar>> {
            v.as_array()
                .ok_or_else(|| bad("expected array"))?
                .iter()
                .map(|s| parse_scalar(s.as_str().ok_or_else(|| bad("expected string"))?))
                .collect()
        };
        let scalar = |v: &Value| parse_scalar(v.as_str().ok_or_else(|| bad("expected string"))?);
        let who = v["who"].as_str().ok_or_else(|| bad("missing who"))?;
        if let Some(r) = v.get("radius") {
            let b = Ball::new(Point(vec(&v["center"])?), scalar(r)?)?;
            return Ok(match who {
                "bob" => Move::Bob(b),
                "alice" => Move::Alice(AliceMove::Ball(b)),
                _ => return Err(bad("unknown player")),
            });
        }
        if who != "alice" {
            return Err(bad("bob moves are balls"));
        }
        let anchor = Point(vec(&v["anchor"])?);
        let dirs = match v.get("directions") {
            Some(ds) => ds
                .as_array()
                .ok_or_else(|| bad("directions"))?
                .iter()
                .map(&vec)
                .collect::<Result<Vec<_>>>()?,
            None => Vec::new(),
        };
        let sub = if dirs.is_empty() && v.get("normal").is_some() {
            AffineSubspace::hyperplane(vec(&v["normal"])?, scalar(&v["offset"])?)?
        } else {
            AffineSubspace::new(anchor, dirs)?
        };
        Ok(Move::Alice(AliceMove::Nbhd(Neighborhood::new(sub, scalar(&v["width"])?)?)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Player {
    Alice,
    Bob,
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Player::Alice => "alice",
            Player::Bob => "bob",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Running,
    AliceWinsAtHorizon,
    BobWinsNoMove,
    IllegalMove { who: Player, index: usize },
}

/// Bookkeeping that is not part of the game rules proper.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Meta {
    /// Bob declared "no move" on an oracle where non-existence is undecidable.
    pub unverified_no_move: bool,
    /// Rounds in which Bob did not shrink his ball at all.
    pub bob_stall_turns: usize,
    /// Why the game ended early, when it did.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default)]
    pub alice: String,
    #[serde(default)]
    pub bob: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transcript {
    pub config: GameConfig,
    pub moves: Vec<Move>,
    pub status: Status,
    pub meta: Meta,
    /// Certificate hints exported by Alice's strategy.
    pub hints: Value,
}

impl Transcript {
    pub fn new(config: GameConfig) -> Self {
        Transcript { config, moves: Vec::new(), status: Status::Running, meta: Meta::default(), hints: Value::Null }
    }

    pub fn to_move(&self) -> Player {
        if self.moves.len() % 2 == 0 {
            Player::Bob
        } else {
            Player::Alice
        }
    }

    pub fn bob_balls(&self) -> impl Iterator<Item = &Ball> + '_ {
        self.moves.iter().filter_map(|m| match m {
            Move::Bob(b) => Some(b),
            _ => None,
        })
    }

    pub fn alice_moves(&self) -> impl Iterator<Item = &AliceMove> + '_ {
        self.moves.iter().filter_map(|m| match m {
            Move::Alice(a) => Some(a),
            _ => None,
        })
    }

    pub fn last_bob(&self) -> Option<&Ball> {
        self.moves.iter().rev().find_map(|m| match m {
            Move::Bob(b) => Some(b),
            _ => None,
        })
    }

    pub fn last_alice(&self) -> Option<&AliceMove> {
        self.moves.iter().rev().find_map(|m| match m {
            Move::Alice(a) => Some(a),
            _ => None,
        })
    }

    /// Number of Bob balls played so far.
    pub fn bob_turns(&self) -> usize {
        self.moves.len().div_ceil(2)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "config": serde_json::to_value(&self.config).expect("config serializes"),
            "moves": self.moves.iter().map(Move::to_json).collect::<Vec<_>>(),
            "status": serde_json::to_value(&self.status).expect("status serializes"),
            "meta": serde_json::to_value(&self.meta).expect("meta serializes"),
            "hints": self.hints,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let err = |e: serde_json::Error| Error::Input(format!("malformed transcript: {e}"));
        let config: GameConfig = serde_json::from_value(v["config"].clone()).map_err(err)?;
        let moves = v["moves"]
            .as_array()
            .ok_or_else(|| Error::Input("transcript has no move list".into()))?
            .iter()
            .map(Move::from_json)
            .collect::<Result<Vec<_>>>()?;
        let status: Status = serde_json::from_value(v["status"].clone()).map_err(err)?;
        let meta: Meta = match v.get("meta") {
            Some(m) => serde_json::from_value(m.clone()).map_err(err)?,
            None => Meta::default(),
        };
        Ok(Transcript { config, moves, status, meta, hints: v.get("hints").cloned().unwrap_or(Value::Null) })
    }
}

pub enum BobMove {
    Ball(Ball),
    NoMove,
}

/// Alice's side of the strategy contract. State may only be derived from
/// the transcripts passed in.
pub trait AliceStrategy {
    fn name(&self) -> String;

    /// Rejects game configurations the strategy cannot play.
    fn validate(&self, _config: &GameConfig) -> Result<()> {
        Ok(())
    }

    fn next_move(&mut self, t: &Transcript) -> Result<AliceMove>;

    fn reset(&mut self);

    /// Certificate parameters, computed from the finished transcript.
    fn hints(&self, _t: &Transcript) -> Value {
        Value::Null
    }
}

pub trait BobStrategy {
    fn name(&self) -> String;

    fn validate(&self, _config: &GameConfig) -> Result<()> {
        Ok(())
    }

    fn next_move(&mut self, t: &Transcript) -> Result<BobMove>;

    fn reset(&mut self);
}

fn protocol(expected: Player, t: &Transcript) -> Result<()> {
    if t.to_move() != expected {
        return Err(Error::Protocol(format!("it is {}'s turn, not {expected}'s", t.to_move())));
    }
    Ok(())
}

/// Why `b` would be an illegal Bob move, or `None` if it is legal.
pub fn bob_move_violation(t: &Transcript, b: &Ball) -> Result<Option<String>> {
    protocol(Player::Bob, t)?;
    let cfg = &t.config;
    if b.dim() != cfg.dim() {
        return Ok(Some(format!("ball has dimension {}, game has {}", b.dim(), cfg.dim())));
    }
    if let Arena::OnSet { oracle } = &cfg.arena {
        if !oracle.contains(&b.center, &cfg.resolution)? {
            return Ok(Some("center is not a point of K".into()));
        }
    }
    let Some(prev) = t.last_bob() else {
        return Ok(None);
    };
    let alice = t.last_alice().expect("Alice has answered every earlier Bob ball");
    match (&cfg.kind, alice) {
        (GameKind::Absolute { beta, .. }, AliceMove::Nbhd(n)) => {
            if b.radius < beta * &prev.radius {
                return Ok(Some(format!("radius {} below β·ρ = {}", b.radius, beta * &prev.radius)));
            }
            if !ball_contains_ball(prev, b)? {
                return Ok(Some("ball leaves Bob's previous ball".into()));
            }
            if !ball_avoids_neighborhood(b, n)? {
                return Ok(Some("ball meets Alice's removed neighborhood".into()));
            }
        }
        (GameKind::Classic { beta, .. }, AliceMove::Ball(a)) => {
            if b.radius != beta * &a.radius {
                return Ok(Some(format!("radius {} is not β·ρ(A) = {}", b.radius, beta * &a.radius)));
            }
            if !ball_contains_ball(a, b)? {
                return Ok(Some("ball leaves Alice's ball".into()));
            }
        }
        _ => return Err(Error::Protocol("Alice's move does not match the game kind".into())),
    }
    Ok(None)
}

pub fn legal_bob_move(t: &Transcript, b: &Ball) -> Result<bool> {
    Ok(bob_move_violation(t, b)?.is_none())
}

/// Why `m` would be an illegal Alice move, or `None` if it is legal.
pub fn alice_move_violation(t: &Transcript, m: &AliceMove) -> Result<Option<String>> {
    protocol(Player::Alice, t)?;
    let cfg = &t.config;
    let b = t.last_bob().expect("Alice moves after a Bob ball");
    match (&cfg.kind, m) {
        (GameKind::Absolute { k, beta }, AliceMove::Nbhd(n)) => {
            if n.subspace.ambient_dim() != cfg.dim() {
                return Ok(Some("subspace has the wrong ambient dimension".into()));
            }
            if n.subspace.dim() != *k {
                return Ok(Some(format!("subspace has dimension {}, game removes {k}-flats", n.subspace.dim())));
            }
            if !n.width.is_positive() {
                return Ok(Some("width must be positive".into()));
            }
            if n.width > beta * &b.radius {
                return Ok(Some(format!("width {} exceeds β·ρ = {}", n.width, beta * &b.radius)));
            }
        }
        (GameKind::Classic { alpha, .. }, AliceMove::Ball(a)) => {
            if a.dim() != cfg.dim() {
                return Ok(Some("ball has the wrong dimension".into()));
            }
            if a.radius != alpha * &b.radius {
                return Ok(Some(format!("radius {} is not α·ρ(B) = {}", a.radius, alpha * &b.radius)));
            }
            if !ball_contains_ball(b, a)? {
                return Ok(Some("ball leaves Bob's ball".into()));
            }
        }
        _ => return Ok(Some("move type does not match the game kind".into())),
    }
    Ok(None)
}

pub fn legal_alice_move(t: &Transcript, m: &AliceMove) -> Result<bool> {
    Ok(alice_move_violation(t, m)?.is_none())
}

/// Whether Bob has some legal move on a finite `K`, decided exactly: a
/// smallest admissible ball around each point is the easiest to place.
fn finite_bob_move_exists(t: &Transcript, points: &[Point]) -> Result<bool> {
    let radius = match (t.last_bob(), t.last_alice(), &t.config.kind) {
        (None, _, _) => return Ok(!points.is_empty()),
        (Some(b), _, GameKind::Absolute { beta, .. }) => beta * &b.radius,
        (Some(_), Some(AliceMove::Ball(a)), GameKind::Classic { beta, .. }) => beta * &a.radius,
        _ => return Err(Error::Protocol("inconsistent transcript".into())),
    };
    for p in points {
        if legal_bob_move(t, &Ball::new(p.clone(), radius.clone())?)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Runs the game to `config.horizon` rounds.
pub fn play(config: GameConfig, alice: &mut dyn AliceStrategy, bob: &mut dyn BobStrategy) -> Result<Transcript> {
    config.validate()?;
    alice.validate(&config)?;
    bob.validate(&config)?;
    alice.reset();
    bob.reset();
    let mut t = Transcript::new(config);
    t.meta.alice = alice.name();
    t.meta.bob = bob.name();
    for _ in 0..t.config.horizon {
        let index = t.moves.len();
        match bob.next_move(&t) {
            Ok(BobMove::Ball(b)) => match bob_move_violation(&t, &b)? {
                None => {
                    if t.last_bob().is_some_and(|p| p.radius == b.radius) {
                        t.meta.bob_stall_turns += 1;
                    }
                    t.moves.push(Move::Bob(b));
                }
                Some(why) => return Ok(finish(t, alice, Status::IllegalMove { who: Player::Bob, index }, Some(why))),
            },
            Ok(BobMove::NoMove) => {
                let verdict = match &t.config.arena {
                    Arena::FullSpace { .. } => Some(false),
                    Arena::OnSet { oracle: KOracle::FinitePointSet { points } } => {
                        Some(finite_bob_move_exists(&t, &points.clone())?).map(|exists| !exists)
                    }
                    Arena::OnSet { .. } => None,
                };
                return Ok(match verdict {
                    Some(true) => finish(t, alice, Status::BobWinsNoMove, Some("Bob has no legal move".into())),
                    None => {
                        t.meta.unverified_no_move = true;
                        finish(t, alice, Status::BobWinsNoMove, Some("Bob declared no move (unverified)".into()))
                    }
                    Some(false) => finish(
                        t,
                        alice,
                        Status::IllegalMove { who: Player::Bob, index },
                        Some("Bob declared no move but a legal move exists".into()),
                    ),
                });
            }
            Err(e) => {
                return Ok(finish(t, alice, Status::IllegalMove { who: Player::Bob, index }, Some(e.to_string())))
            }
        }
        let index = t.moves.len();
        match alice.next_move(&t) {
            Ok(m) => match alice_move_violation(&t, &m)? {
                None => t.moves.push(Move::Alice(m)),
                Some(why) => {
                    return Ok(finish(t, alice, Status::IllegalMove { who: Player::Alice, index }, Some(why)))
                }
            },
            Err(e) => {
                return Ok(finish(t, alice, Status::IllegalMove { who: Player::Alice, index }, Some(e.to_string())))
            }
        }
    }
    Ok(finish(t, alice, Status::AliceWinsAtHorizon, None))
}

fn finish(mut t: Transcript, alice: &dyn AliceStrategy, status: Status, reason: Option<String>) -> Transcript {
    t.status = status;
    t.meta.reason = reason;
    t.hints = alice.hints(&t);
    t
}

/// The last Bob ball: the finite-horizon stand-in for `⋂ Bᵢ`.
pub fn final_ball(t: &Transcript) -> Result<Ball> {
    t.last_bob().cloned().ok_or_else(|| Error::Input("transcript has no Bob move".into()))
}

/// A neighborhood disjoint from `b` that constrains Bob not at all: the
/// k-flat through `center + (ρ + 2ε)e₁` spanned by `e₂, …, e_{k+1}`, with
/// `ε = βρ/2`.
pub fn dummy_move(b: &Ball, k: usize, beta: &Scalar) -> Neighborhood {
    let d = b.dim();
    let eps = beta * &b.radius / Scalar::from_integer(2.into());
    let shift = &b.radius + &eps + &eps;
    let anchor = b.center.offset(&linalg::unit(d, 0), &shift);
    let dirs = (1..=k).map(|i| linalg::unit(d, i)).collect();
    let sub = AffineSubspace::new(anchor, dirs).expect("coordinate directions are independent");
    Neighborhood::new(sub, eps).expect("positive width")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::int;

    struct Scripted {
        moves: Vec<Ball>,
        i: usize,
    }

    impl BobStrategy for Scripted {
        fn name(&self) -> String {
            "scripted".into()
        }
        fn next_move(&mut self, _t: &Transcript) -> Result<BobMove> {
            self.i += 1;
            Ok(self.moves.get(self.i - 1).cloned().map_or(BobMove::NoMove, BobMove::Ball))
        }
        fn reset(&mut self) {
            self.i = 0;
        }
    }

    struct Dummy;

    impl AliceStrategy for Dummy {
        fn name(&self) -> String {
            "dummy".into()
        }
        fn next_move(&mut self, t: &Transcript) -> Result<AliceMove> {
            let GameKind::Absolute { k, beta } = &t.config.kind else { unreachable!() };
            Ok(AliceMove::Nbhd(dummy_move(t.last_bob().unwrap(), *k, beta)))
        }
        fn reset(&mut self) {}
    }

    fn ball1(c: (i64, i64), r: Scalar) -> Ball {
        Ball::new(Point(vec![q(c.0, c.1)]), r).unwrap()
    }

    fn after(cfg: GameConfig, moves: Vec<Move>) -> Transcript {
        let mut t = Transcript::new(cfg);
        t.moves = moves;
        t
    }

    #[test]
    fn absolute_bob_legality() {
        let cfg = GameConfig::absolute(1, 0, q(1, 4), 3);
        let l = AffineSubspace::point(Point(vec![int(1)]));
        let a = AliceMove::Nbhd(Neighborhood::new(l, q(1, 8)).unwrap());
        let t = after(cfg, vec![Move::Bob(ball1((0, 1), int(1))), Move::Alice(a)]);
        assert!(legal_bob_move(&t, &ball1((-1, 2), q(1, 4))).unwrap());
        assert!(!legal_bob_move(&t, &ball1((-1, 2), q(1, 8))).unwrap());
        assert!(!legal_bob_move(&t, &ball1((3, 4), q(1, 4))).unwrap());
    }

    #[test]
    fn absolute_alice_width_bounds() {
        let cfg = GameConfig::absolute(2, 1, q(1, 5), 3);
        let t = after(cfg, vec![Move::Bob(Ball::new(Point::origin(2), int(1)).unwrap())]);
        let line = AffineSubspace::hyperplane(vec![int(1), int(0)], int(0)).unwrap();
        let m = |w| AliceMove::Nbhd(Neighborhood::new(line.clone(), w).unwrap());
        assert!(legal_alice_move(&t, &m(q(1, 5))).unwrap());
        assert!(!legal_alice_move(&t, &m(q(1, 4))).unwrap());
        assert!(!legal_alice_move(&t, &m(int(0))).unwrap());
        let pt = AffineSubspace::point(Point::origin(2));
        let wrong_k = AliceMove::Nbhd(Neighborhood::new(pt, q(1, 10)).unwrap());
        assert!(!legal_alice_move(&t, &wrong_k).unwrap());
    }

    #[test]
    fn classic_radii_are_exact() {
        let cfg = GameConfig::classic(1, q(1, 3), q(1, 2), 3);
        let t = after(cfg.clone(), vec![Move::Bob(ball1((0, 1), int(1)))]);
        assert!(legal_alice_move(&t, &AliceMove::Ball(ball1((0, 1), q(1, 3)))).unwrap());
        assert!(!legal_alice_move(&t, &AliceMove::Ball(ball1((0, 1), q(1, 4)))).unwrap());
        let t = after(
            cfg,
            vec![Move::Bob(ball1((0, 1), int(1))), Move::Alice(AliceMove::Ball(ball1((0, 1), q(1, 3))))],
        );
        assert!(legal_bob_move(&t, &ball1((0, 1), q(1, 6))).unwrap());
        assert!(!legal_bob_move(&t, &ball1((0, 1), q(1, 7))).unwrap());
    }

    #[test]
    fn wrong_turn_is_a_protocol_error() {
        let cfg = GameConfig::absolute(1, 0, q(1, 4), 3);
        let t = Transcript::new(cfg);
        let m = AliceMove::Nbhd(Neighborhood::new(AffineSubspace::point(Point::origin(1)), q(1, 8)).unwrap());
        assert!(matches!(legal_alice_move(&t, &m), Err(Error::Protocol(_))));
    }

    #[test]
    fn shrink_in_place_against_dummy_runs_to_horizon() {
        let cfg = GameConfig::absolute(2, 1, q(1, 4), 5);
        let balls = (0..5).map(|i| Ball::new(Point::origin(2), q(1, 4i64.pow(i))).unwrap()).collect();
        let t = play(cfg, &mut Dummy, &mut Scripted { moves: balls, i: 0 }).unwrap();
        assert_eq!(t.moves.len(), 10);
        assert_eq!(t.status, Status::AliceWinsAtHorizon);
        let radii: Vec<_> = t.bob_balls().map(|b| b.radius.clone()).collect();
        for w in radii.windows(2) {
            assert!(w[1] >= q(1, 4) * &w[0]);
        }
        assert_eq!(final_ball(&t).unwrap(), Ball::new(Point::origin(2), q(1, 256)).unwrap());
    }

    #[test]
    fn singleton_arena_bob_loses_his_move() {
        let k = KOracle::finite(vec![Point(vec![q(1, 2), q(1, 3)])]).unwrap();
        let cfg = GameConfig::new(GameKind::Absolute { k: 1, beta: q(1, 4) }, Arena::OnSet { oracle: k }, 5, 0);
        struct Remover;
        impl AliceStrategy for Remover {
            fn name(&self) -> String {
                "remover".into()
            }
            fn next_move(&mut self, t: &Transcript) -> Result<AliceMove> {
                let b = t.last_bob().unwrap();
                let l = AffineSubspace::new(b.center.clone(), vec![vec![int(1), int(0)]])?;
                Ok(AliceMove::Nbhd(Neighborhood::new(l, q(1, 4) * &b.radius)?))
            }
            fn reset(&mut self) {}
        }
        let b0 = Ball::new(Point(vec![q(1, 2), q(1, 3)]), int(1)).unwrap();
        // a lying Bob who keeps the first ball is caught; an honest one has no move
        let t = play(cfg, &mut Remover, &mut Scripted { moves: vec![b0], i: 0 }).unwrap();
        assert_eq!(t.status, Status::BobWinsNoMove);
        assert!(!t.meta.unverified_no_move);
    }

    #[test]
    fn false_no_move_claim_is_illegal() {
        let cfg = GameConfig::absolute(1, 0, q(1, 4), 3);
        let t = play(cfg, &mut Dummy, &mut Scripted { moves: vec![], i: 0 }).unwrap();
        assert_eq!(t.status, Status::IllegalMove { who: Player::Bob, index: 0 });
    }

    #[test]
    fn final_ball_of_short_transcripts() {
        let cfg = GameConfig::absolute(1, 0, q(1, 4), 3);
        assert!(final_ball(&Transcript::new(cfg.clone())).is_err());
        let b = ball1((0, 1), int(1));
        let d = Move::Alice(AliceMove::Nbhd(dummy_move(&b, 0, &q(1, 4))));
        let b2 = ball1((1, 8), q(1, 4));
        assert_eq!(final_ball(&after(cfg.clone(), vec![Move::Bob(b.clone())])).unwrap(), b);
        assert_eq!(final_ball(&after(cfg.clone(), vec![Move::Bob(b.clone()), d.clone()])).unwrap(), b);
        assert_eq!(final_ball(&after(cfg, vec![Move::Bob(b), d, Move::Bob(b2.clone())])).unwrap(), b2);
    }

    #[test]
    fn dummy_move_is_disjoint_and_legal() {
        let b = Ball::new(Point(vec![q(1, 3), q(2, 7), q(-1, 5)]), q(3, 4)).unwrap();
        for k in 0..3 {
            let n = dummy_move(&b, k, &q(1, 4));
            assert_eq!(n.subspace.dim(), k);
            assert!(ball_avoids_neighborhood(&b, &n).unwrap());
        }
    }

    #[test]
    fn transcript_json_roundtrip() {
        let cfg = GameConfig::absolute(2, 1, q(1, 4), 3);
        let balls = (0..3).map(|i| Ball::new(Point::origin(2), q(1, 4i64.pow(i))).unwrap()).collect();
        let t = play(cfg, &mut Dummy, &mut Scripted { moves: balls, i: 0 }).unwrap();
        let s = serde_json::to_string(&t.to_json()).unwrap();
        let back = Transcript::from_json(&serde_json::from_str(&s).unwrap()).unwrap();
        assert_eq!(back, t);
        assert_eq!(serde_json::to_string(&back.to_json()).unwrap(), s);
    }
}
