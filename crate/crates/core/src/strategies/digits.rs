//! Base-3 digit games in the plane (classic game).
//!
//! Digits are indexed so that `x = Σ xᵢ 3^{−i}`; `x₀` is the units digit.

use num::{BigInt, Integer, One, Signed};
use serde_json::{json, Value};

use crate::engine::{AliceMove, AliceStrategy, BobMove, BobStrategy, GameConfig, GameKind, Transcript};
use crate::error::{check_dim, Error, Result};
use crate::geometry::{floor, fmt_scalar, int, pow, q, to_f64, Ball, Point, Scalar};

fn three_pow_neg(i: u32) -> Scalar {
    Scalar::new(BigInt::one(), BigInt::from(3).pow(i))
}

/// `⌈a + jθ⌉` for `θ = −log₃(αβ)`, decided exactly as the least `i` with
/// `3^{i−a}·(αβ)^j ≥ 1`.
pub fn digit_index(a: u32, alpha_beta: &Scalar, j: u32) -> u32 {
    let ab = pow(alpha_beta, j);
    let theta = -to_f64(alpha_beta).ln() / 3f64.ln();
    let mut e = (j as f64 * theta).ceil().max(0.0) as u32;
    let ok = |e: u32| Scalar::from_integer(BigInt::from(3).pow(e)) * &ab >= Scalar::one();
    while !ok(e) {
        e += 1;
    }
    while e > 0 && ok(e - 1) {
        e -= 1;
    }
    a + e
}

/// Per coordinate, the cell index `j ≡ residue (mod 3)` at level `level`
/// whose cell center is nearest to `c`. Distance to a square is separable,
/// so the coordinatewise choice is the nearest such cell overall.
fn nearest_cell(c: &Point, level: u32, residue: i64) -> Vec<BigInt> {
    let s = three_pow_neg(level);
    c.0.iter()
        .map(|x| {
            let base = floor(&(x / &s));
            let mut best: Option<(Scalar, BigInt)> = None;
            for off in -3..=3 {
                let j: BigInt = &base + off;
                if j.mod_floor(&BigInt::from(3)) != BigInt::from(residue) {
                    continue;
                }
                let mid = (Scalar::from_integer(j.clone()) + q(1, 2)) * &s;
                let dist = (&mid - x).abs();
                if best.as_ref().map_or(true, |(b, _)| dist < *b) {
                    best = Some((dist, j));
                }
            }
            best.expect("a residue class occurs in any 3 consecutive integers").1
        })
        .collect()
}

fn cell_corner(j: &[BigInt], level: u32) -> Point {
    let s = three_pow_neg(level);
    Point(j.iter().map(|ji| Scalar::from_integer(ji.clone()) * &s).collect())
}

/// Whether the closed square `corner + [0, s]²` lies in `b`.
fn square_in_ball(corner: &Point, s: &Scalar, b: &Ball) -> bool {
    let r2 = &b.radius * &b.radius;
    (0..4).all(|m| {
        let v = Point(
            corner.0.iter().enumerate().map(|(i, x)| if m >> i & 1 == 1 { x + s } else { x.clone() }).collect(),
        );
        v.sq_dist(&b.center) <= r2
    })
}

fn classic_params(config: &GameConfig) -> Result<(Scalar, Scalar)> {
    check_dim(2, config.dim())?;
    match &config.kind {
        GameKind::Classic { alpha, beta } => Ok((alpha.clone(), beta.clone())),
        _ => Err(Error::Config("digit strategies play the classic game".into())),
    }
}

/// Alice forcing `xᵢ = yᵢ = 0` along `P_{a,θ}`, with `α = 1/108`.
pub struct DigitAlice {
    alpha: Scalar,
    beta: Scalar,
    /// `(a, Bob turn at activation)`.
    active: Option<(u32, usize)>,
    /// `(index, Bob turn answered)` for every stage played.
    emitted: Vec<(u32, usize)>,
}

pub fn digit_alice_s(beta: Scalar) -> DigitAlice {
    DigitAlice { alpha: q(1, 108), beta, active: None, emitted: Vec::new() }
}

impl DigitAlice {
    /// Indices whose cells contain the last Bob ball of `t`.
    pub fn certified_indices(&self, t: &Transcript) -> Vec<u64> {
        let turns = t.bob_turns();
        self.emitted.iter().filter(|(_, turn)| turn + 1 < turns).map(|(i, _)| *i as u64).collect()
    }
}

/// The integer `a ≥ 0` with `1/(6·3^{a+1}) ≤ αρ < 1/(6·3^a)`.
fn start_index(alpha_rho: &Scalar) -> u32 {
    let mut a = 0;
    while alpha_rho * int(6) < three_pow_neg(a + 1) {
        a += 1;
    }
    a
}

impl AliceStrategy for DigitAlice {
    fn name(&self) -> String {
        format!("digit_alice_s(beta={})", fmt_scalar(&self.beta))
    }

    fn validate(&self, config: &GameConfig) -> Result<()> {
        let (alpha, beta) = classic_params(config)?;
        if alpha != self.alpha || beta != self.beta {
            return Err(Error::Config(format!("digit_alice_s needs α = 1/108 and β = {}", fmt_scalar(&self.beta))));
        }
        Ok(())
    }

    fn next_move(&mut self, t: &Transcript) -> Result<AliceMove> {
        let b = t.last_bob().ok_or_else(|| Error::Protocol("Alice moves after Bob".into()))?;
        let turn = t.bob_turns() - 1;
        let alpha_rho = &self.alpha * &b.radius;
        if self.active.is_none() {
            if &alpha_rho * int(6) >= Scalar::one() {
                return Ok(AliceMove::Ball(Ball::new(b.center.clone(), &self.alpha * &b.radius)?));
            }
            self.active = Some((start_index(&(&self.alpha * &b.radius)), turn));
        }
        let (a, start) = self.active.expect("activated above");
        let stage = (turn - start) as u32;
        let i = digit_index(a, &(&self.alpha * &self.beta), stage);
        let s = three_pow_neg(i);
        if &alpha_rho * int(2) > s {
            return Err(Error::Assertion(format!("α·ρ = {alpha_rho} does not fit a level-{i} cell")));
        }
        let corner = cell_corner(&nearest_cell(&b.center, i, 0), i);
        let center = corner.offset(&[int(1), int(1)], &(&s / int(2)));
        let a_ball = Ball::new(center, alpha_rho)?;
        if !crate::geometry::ball_contains_ball(b, &a_ball)? {
            return Err(Error::Assertion(format!("no zero-digit cell of level {i} fits in Bob's ball at stage {stage}")));
        }
        self.emitted.push((i, turn));
        Ok(AliceMove::Ball(a_ball))
    }

    fn reset(&mut self) {
        self.active = None;
        self.emitted.clear();
    }

    fn hints(&self, t: &Transcript) -> Value {
        let theta = -to_f64(&(&self.alpha * &self.beta)).ln() / 3f64.ln();
        json!({
            "strategy": "digit_alice_s",
            "alpha": fmt_scalar(&self.alpha),
            "beta": fmt_scalar(&self.beta),
            "a": self.active.map(|(a, _)| a),
            "theta": theta,
            "activation_turn": self.active.map(|(_, turn)| turn),
            "indices": self.certified_indices(t),
        })
    }
}

/// Bob forcing `x_{i+n} = 1` or `yᵢ = 1` for every `i`, with
/// `α = 4·3⁻ⁿ` and `β = ¼·3⁻ⁿ`.
pub struct DigitBob {
    n: u32,
}

pub fn digit_bob(n: u32) -> DigitBob {
    DigitBob { n }
}

impl DigitBob {
    pub fn alpha(&self) -> Scalar {
        int(4) * three_pow_neg(self.n)
    }

    pub fn beta(&self) -> Scalar {
        q(1, 4) * three_pow_neg(self.n)
    }
}

impl BobStrategy for DigitBob {
    fn name(&self) -> String {
        format!("digit_bob(n={})", self.n)
    }

    fn validate(&self, config: &GameConfig) -> Result<()> {
        let (alpha, beta) = classic_params(config)?;
        if alpha != self.alpha() || beta != self.beta() {
            return Err(Error::Config(format!(
                "digit_bob({}) needs α = {} and β = {}",
                self.n,
                fmt_scalar(&self.alpha()),
                fmt_scalar(&self.beta())
            )));
        }
        Ok(())
    }

    fn next_move(&mut self, t: &Transcript) -> Result<BobMove> {
        let Some(AliceMove::Ball(a)) = t.last_alice() else {
            return Ok(BobMove::Ball(Ball::new(Point(vec![q(3, 2), q(3, 2)]), q(1, 2))?));
        };
        let k = t.bob_turns() as u32;
        let n = self.n;
        let m = (2 * k - 1) * n + 1;
        let top = 2 * k * n;
        let expected = int(2) * three_pow_neg((2 * k - 1) * n);
        if a.radius != expected {
            return Err(Error::Assertion(format!("Alice's radius {} is not 2·3^-{}", a.radius, (2 * k - 1) * n)));
        }
        let sm = three_pow_neg(m);
        let corner = cell_corner(&nearest_cell(&a.center, m, 1), m);
        if !square_in_ball(&corner, &sm, a) {
            return Err(Error::Assertion(format!("no digit-1 cell of level {m} inside Alice's ball")));
        }
        // digits m+1..=top equal to 1 as well
        let shift: Scalar = (m + 1..=top).map(three_pow_neg).sum();
        let st = three_pow_neg(top);
        let half = &st / int(2);
        let center = Point(corner.0.iter().map(|x| x + &shift + &half).collect());
        Ok(BobMove::Ball(Ball::new(center, half)?))
    }

    fn reset(&mut self) {}
}

/// The Bob turn count needed to fix digits through level `depth + n`.
pub fn digit_bob_horizon(n: u32, depth: u32) -> usize {
    ((depth + n).div_ceil(2 * n) + 1) as usize
}
