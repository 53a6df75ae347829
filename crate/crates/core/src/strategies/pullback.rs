//! Transports an Alice strategy for `S` through a C¹ map `f`, giving a
//! strategy for `f⁻¹(S) ∪ Uᶜ` in the β-absolute game.
//!
//! Alice runs a second game with parameter `β′ = βⁿ` alongside the real one:
//! every `n`-ish turns she maps Bob's ball forward, asks the inner strategy
//! for a removal, and pulls that flat back through the linearization of `f⁻¹`.

use nalgebra::DMatrix;
use num::{One, Signed};
use serde_json::{json, Value};

use crate::engine::{
    alice_move_violation, bob_move_violation, dummy_move, AliceMove, AliceStrategy, GameConfig, Move, Transcript,
};
use crate::error::{check_dim, Error, Result};
use crate::geometry::{
    ball_contains_ball, fmt_scalar, from_f64, linalg, pow, q, to_f64, AffineSubspace, Ball, Neighborhood, Point,
    Scalar,
};

use super::{absolute_params, unit_ball_grid};

/// A C¹ diffeomorphism onto its image, evaluated in floating point.
pub trait C1Map {
    fn dim(&self) -> usize;

    fn apply(&self, x: &[f64]) -> Vec<f64>;

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64>;

    /// `f⁻¹(y)`; the default runs Newton's method from `hint`.
    fn inverse(&self, y: &[f64], hint: &[f64]) -> Vec<f64> {
        let mut x = hint.to_vec();
        for _ in 0..100 {
            let fx = self.apply(&x);
            let r = nalgebra::DVector::from_iterator(x.len(), fx.iter().zip(y).map(|(a, b)| a - b));
            if r.norm() < 1e-15 * (1.0 + y.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
                break;
            }
            let Some(step) = self.jacobian(&x).lu().solve(&r) else { break };
            for (xi, s) in x.iter_mut().zip(step.iter()) {
                *xi -= s;
            }
        }
        x
    }

    /// The exact form, when `f` is affine with rational coefficients.
    fn exact(&self) -> Option<&AffineMap> {
        None
    }
}

/// `x ↦ Ax + b` with rational `A` and `b`.
#[derive(Clone, Debug)]
pub struct AffineMap {
    pub a: Vec<Vec<Scalar>>,
    pub b: Vec<Scalar>,
    a_inv: Vec<Vec<Scalar>>,
}

impl AffineMap {
    pub fn new(a: Vec<Vec<Scalar>>, b: Vec<Scalar>) -> Result<Self> {
        let d = b.len();
        if a.len() != d || a.iter().any(|row| row.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: a.len() });
        }
        let cols: Option<Vec<Vec<Scalar>>> = (0..d).map(|i| linalg::solve(&a, &linalg::unit(d, i))).collect();
        let cols = cols.ok_or_else(|| Error::Config("affine map must be nonsingular".into()))?;
        let a_inv = (0..d).map(|i| (0..d).map(|j| cols[j][i].clone()).collect()).collect();
        Ok(AffineMap { a, b, a_inv })
    }

    pub fn apply_exact(&self, x: &Point) -> Point {
        Point(self.a.iter().zip(&self.b).map(|(row, bi)| linalg::dot(row, &x.0) + bi).collect())
    }

    pub fn inverse_exact(&self, y: &Point) -> Point {
        Point(self.a_inv.iter().map(|row| linalg::dot(row, &linalg::sub(&y.0, &self.b))).collect())
    }

    pub fn linear_inverse(&self, v: &[Scalar]) -> Vec<Scalar> {
        self.a_inv.iter().map(|row| linalg::dot(row, v)).collect()
    }

    fn float_matrix(m: &[Vec<Scalar>]) -> DMatrix<f64> {
        let d = m.len();
        DMatrix::from_fn(d, d, |i, j| to_f64(&m[i][j]))
    }

    /// Exact `(‖A‖, ‖A⁻¹‖)` in dimension 1; rounded up otherwise.
    fn norms(&self) -> (Scalar, Scalar, bool) {
        if self.b.len() == 1 {
            return (self.a[0][0].abs(), self.a_inv[0][0].abs(), true);
        }
        let up = |m: &DMatrix<f64>| from_f64(m.clone().svd(false, false).singular_values.max() * (1.0 + 1e-12));
        (up(&Self::float_matrix(&self.a)), up(&Self::float_matrix(&self.a_inv)), false)
    }
}

impl C1Map for AffineMap {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.apply_exact(&Point::from_f64(x)).to_f64()
    }

    fn jacobian(&self, _x: &[f64]) -> DMatrix<f64> {
        Self::float_matrix(&self.a)
    }

    fn inverse(&self, y: &[f64], _hint: &[f64]) -> Vec<f64> {
        self.inverse_exact(&Point::from_f64(y)).to_f64()
    }

    fn exact(&self) -> Option<&AffineMap> {
        Some(self)
    }
}

type VecFn = Box<dyn Fn(&[f64]) -> Vec<f64>>;
type JacFn = Box<dyn Fn(&[f64]) -> DMatrix<f64>>;

/// A map given by closures for `f` and its Jacobian.
pub struct SmoothMap {
    d: usize,
    f: VecFn,
    jac: JacFn,
}

impl SmoothMap {
    pub fn new(d: usize, f: impl Fn(&[f64]) -> Vec<f64> + 'static, jac: impl Fn(&[f64]) -> DMatrix<f64> + 'static) -> Self {
        SmoothMap { d, f: Box::new(f), jac: Box::new(jac) }
    }

    /// `x ↦ x + sin(x)/10` on the line.
    pub fn sine_perturbation() -> Self {
        Self::new(1, |x| vec![x[0] + x[0].sin() / 10.0], |x| DMatrix::from_element(1, 1, 1.0 + x[0].cos() / 10.0))
    }
}

impl C1Map for SmoothMap {
    fn dim(&self) -> usize {
        self.d
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(x)
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        (self.jac)(x)
    }
}

/// Grid estimates are inflated by this factor.
pub const GRID_INFLATION: f64 = 1.25;
/// Largest `n` tried for `C(β+1)β^{n−2} < 1`.
pub const MAX_N: u32 = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct PullbackSetup {
    pub c1: Scalar,
    pub c2: Scalar,
    /// `2·C₁·C₂`.
    pub c: Scalar,
    pub n: u32,
    pub beta: Scalar,
    pub beta_prime: Scalar,
    /// `(1 + 1/β)·β′`.
    pub eta: Scalar,
    /// `"exact"` for rational affine maps, otherwise `"grid"`.
    pub method: &'static str,
}

impl PullbackSetup {
    /// Constants for `map` over `u`, estimated on a grid of step `1/grid`
    /// (in units of the radius) unless the map is exactly affine.
    pub fn estimate(map: &dyn C1Map, u: &Ball, beta: &Scalar, grid: i64) -> Result<Self> {
        check_dim(map.dim(), u.dim())?;
        if !(beta.is_positive() && *beta < q(1, 3)) {
            return Err(Error::Config("β must lie in (0, 1/3)".into()));
        }
        let (c1, c2, method) = match map.exact() {
            Some(aff) => {
                let (n1, n2, exact) = aff.norms();
                (n1, n2, if exact { "exact" } else { "affine" })
            }
            None => {
                let (mut s1, mut s2) = (0.0f64, 0.0f64);
                for g in unit_ball_grid(u.dim(), grid.max(1)) {
                    let x = u.center.offset(&g, &u.radius).to_f64();
                    let j = map.jacobian(&x);
                    let sv = j.clone().svd(false, false).singular_values;
                    let smin = sv.min();
                    if !(smin > 1e-12 * sv.max().max(1.0)) {
                        return Err(Error::Config(format!("Jacobian is singular near {x:?}")));
                    }
                    s1 = s1.max(sv.max());
                    s2 = s2.max(1.0 / smin);
                }
                (from_f64(s1 * GRID_INFLATION), from_f64(s2 * GRID_INFLATION), "grid")
            }
        };
        let c = Scalar::from_integer(2.into()) * &c1 * &c2;
        let n = (1..=MAX_N)
            .find(|&n| {
                let pw = if n >= 2 { pow(beta, n - 2) } else { Scalar::one() / beta };
                &c * (beta + Scalar::one()) * pw < Scalar::one()
            })
            .ok_or_else(|| Error::Config(format!("no n ≤ {MAX_N} with C(β+1)β^(n−2) < 1 (C = {})", fmt_scalar(&c))))?;
        let beta_prime = pow(beta, n);
        let eta = (Scalar::one() + Scalar::one() / beta) * &beta_prime;
        Ok(PullbackSetup { c1, c2, c, n, beta: beta.clone(), beta_prime, eta, method })
    }

    fn to_json(&self) -> Value {
        json!({
            "C1": fmt_scalar(&self.c1),
            "C2": fmt_scalar(&self.c2),
            "C": fmt_scalar(&self.c),
            "n": self.n,
            "beta": fmt_scalar(&self.beta),
            "beta_prime": fmt_scalar(&self.beta_prime),
            "eta": fmt_scalar(&self.eta),
            "method": self.method,
        })
    }
}

#[derive(Clone, Debug)]
struct Stage {
    turn: usize,
    rho: Scalar,
    /// `ρ_ℓ/ρ_{ℓ−1}`, absent for the first stage.
    ratio: Option<Scalar>,
    eps: Scalar,
}

pub struct PullbackAlice {
    inner: Box<dyn AliceStrategy>,
    map: Box<dyn C1Map>,
    u: Ball,
    setup: PullbackSetup,
    grid: i64,
    game2: Option<Transcript>,
    stages: Vec<Stage>,
    ratio_violations: usize,
    eps_violations: usize,
    game2_violations: Vec<String>,
}

pub fn pullback_alice(
    inner: Box<dyn AliceStrategy>,
    map: Box<dyn C1Map>,
    u: Ball,
    beta: Scalar,
    grid: i64,
) -> Result<PullbackAlice> {
    let setup = PullbackSetup::estimate(map.as_ref(), &u, &beta, grid)?;
    Ok(PullbackAlice {
        inner,
        map,
        u,
        setup,
        grid,
        game2: None,
        stages: Vec::new(),
        ratio_violations: 0,
        eps_violations: 0,
        game2_violations: Vec::new(),
    })
}

impl PullbackAlice {
    pub fn setup(&self) -> &PullbackSetup {
        &self.setup
    }

    /// The virtual game played by the inner strategy.
    pub fn inner_transcript(&self) -> Option<&Transcript> {
        self.game2.as_ref()
    }

    /// Turns `j_ℓ` at which the inner strategy was consulted.
    pub fn stage_turns(&self) -> Vec<usize> {
        self.stages.iter().map(|s| s.turn).collect()
    }

    fn image_center(&self, x: &Point) -> Point {
        match self.map.exact() {
            Some(aff) => aff.apply_exact(x),
            None => Point::from_f64(&self.map.apply(&x.to_f64())),
        }
    }

    /// A ball containing `f(b)`: exact for affine maps, otherwise inflated
    /// by `rel_slack` in radius plus an absolute floating-point margin.
    pub fn image_ball(&self, b: &Ball, rel_slack: f64) -> Result<(Ball, bool)> {
        let center = self.image_center(&b.center);
        let r = &self.setup.c1 * &b.radius;
        if self.map.exact().is_some() {
            return Ok((Ball::new(center, r)?, self.setup.method == "exact"));
        }
        let scale = center.to_f64().iter().map(|v| v.abs()).fold(1.0, f64::max);
        let r = r * from_f64(1.0 + rel_slack) + from_f64(64.0 * f64::EPSILON * scale);
        Ok((Ball::new(center, r)?, false))
    }

    /// Largest value of the linearization error ratio over a grid of `b`.
    fn distortion(&self, b: &Ball) -> f64 {
        let pts: Vec<Vec<f64>> =
            unit_ball_grid(b.dim(), 2).iter().map(|g| b.center.offset(g, &b.radius).to_f64()).collect();
        let imgs: Vec<Vec<f64>> = pts.iter().map(|x| self.map.apply(x)).collect();
        let mut worst = 0.0f64;
        for (j, x0) in pts.iter().enumerate() {
            let Some(jinv) = self.map.jacobian(x0).try_inverse() else { return f64::INFINITY };
            for (i, x) in pts.iter().enumerate() {
                let dy = nalgebra::DVector::from_iterator(x.len(), imgs[i].iter().zip(&imgs[j]).map(|(a, b)| a - b));
                if i == j || dy.norm() == 0.0 {
                    continue;
                }
                let lin = &jinv * &dy;
                let err = (0..x.len()).map(|k| (x0[k] + lin[k] - x[k]).powi(2)).sum::<f64>().sqrt();
                worst = worst.max(err / dy.norm());
            }
        }
        worst
    }

    fn ready(&self, b: &Ball) -> Result<bool> {
        if !ball_contains_ball(&self.u, b)? {
            return Ok(false);
        }
        if self.map.exact().is_some() {
            return Ok(true);
        }
        let bound = 2.0 * to_f64(&self.setup.c2) * to_f64(&self.setup.eta);
        Ok(self.distortion(b) < bound)
    }

    fn pull_back(&self, flat: &AffineSubspace, image_center: &Point, hint: &Point) -> Result<AffineSubspace> {
        let y0 = flat.project(image_center)?;
        match self.map.exact() {
            Some(aff) => {
                let anchor = aff.inverse_exact(&y0);
                let dirs = flat.directions().iter().map(|v| aff.linear_inverse(v)).collect();
                AffineSubspace::new(anchor, dirs)
            }
            None => {
                let anchor = self.map.inverse(&y0.to_f64(), &hint.to_f64());
                let jinv = self
                    .map
                    .jacobian(&anchor)
                    .try_inverse()
                    .ok_or_else(|| Error::Assertion("Jacobian singular at the pull-back anchor".into()))?;
                let dirs = flat
                    .directions()
                    .iter()
                    .map(|v| {
                        let vf = nalgebra::DVector::from_iterator(v.len(), v.iter().map(to_f64));
                        (&jinv * vf).iter().map(|z| from_f64(*z)).collect()
                    })
                    .collect();
                AffineSubspace::new(Point::from_f64(&anchor), dirs)
            }
        }
    }
}

impl AliceStrategy for PullbackAlice {
    fn name(&self) -> String {
        format!("pullback({}, n={})", self.inner.name(), self.setup.n)
    }

    fn validate(&self, config: &GameConfig) -> Result<()> {
        let (k, beta) = absolute_params(config)?;
        check_dim(self.u.dim(), config.dim())?;
        if beta != self.setup.beta {
            return Err(Error::Config(format!("pullback was set up for β = {}", fmt_scalar(&self.setup.beta))));
        }
        let inner_cfg = GameConfig::absolute(config.dim(), k, self.setup.beta_prime.clone(), config.horizon);
        self.inner.validate(&inner_cfg)
    }

    fn next_move(&mut self, t: &Transcript) -> Result<AliceMove> {
        let b = t.last_bob().ok_or_else(|| Error::Protocol("Alice moves after Bob".into()))?.clone();
        let (k, beta) = absolute_params(&t.config)?;
        let turn = t.bob_turns() - 1;
        let dummy = AliceMove::Nbhd(dummy_move(&b, k, &beta));
        let ratio = match self.stages.last() {
            None => {
                if !self.ready(&b)? {
                    return Ok(dummy);
                }
                None
            }
            Some(prev) => {
                let ratio = &b.radius / &prev.rho;
                if ratio >= pow(&beta, self.setup.n - 1) {
                    return Ok(dummy);
                }
                if ratio < self.setup.beta_prime {
                    self.ratio_violations += 1;
                }
                Some(ratio)
            }
        };
        let game2 = self.game2.get_or_insert_with(|| {
            Transcript::new(GameConfig::absolute(t.config.dim(), k, self.setup.beta_prime.clone(), t.config.horizon))
        });
        let image = Ball::new(
            match self.map.exact() {
                Some(aff) => aff.apply_exact(&b.center),
                None => Point::from_f64(&self.map.apply(&b.center.to_f64())),
            },
            &self.setup.c1 * &b.radius,
        )?;
        if let Some(why) = bob_move_violation(game2, &image)? {
            self.game2_violations.push(format!("turn {turn}: Bob {why}"));
        }
        game2.moves.push(Move::Bob(image.clone()));
        let inner_move = self.inner.next_move(game2)?;
        if let Some(why) = alice_move_violation(game2, &inner_move)? {
            self.game2_violations.push(format!("turn {turn}: Alice {why}"));
        }
        game2.moves.push(Move::Alice(inner_move.clone()));
        let AliceMove::Nbhd(removed) = inner_move else {
            return Err(Error::Protocol("inner strategy must remove a neighborhood".into()));
        };
        let flat = self.pull_back(&removed.subspace, &image.center, &b.center)?;
        let eps = &self.setup.c * &self.setup.eta * &b.radius;
        if eps >= &beta * &b.radius {
            self.eps_violations += 1;
        }
        self.stages.push(Stage { turn, rho: b.radius.clone(), ratio, eps: eps.clone() });
        Ok(AliceMove::Nbhd(Neighborhood::new(flat, eps)?))
    }

    fn reset(&mut self) {
        self.inner.reset();
        self.game2 = None;
        self.stages.clear();
        self.ratio_violations = 0;
        self.eps_violations = 0;
        self.game2_violations.clear();
    }

    fn hints(&self, _t: &Transcript) -> Value {
        let inner = match &self.game2 {
            Some(g) => self.inner.hints(g),
            None => Value::Null,
        };
        json!({
            "strategy": "pullback",
            "setup": self.setup.to_json(),
            "grid": self.grid,
            "stages": self.stages.iter().map(|s| json!({
                "turn": s.turn,
                "rho": fmt_scalar(&s.rho),
                "ratio": s.ratio.as_ref().map(fmt_scalar),
                "eps": fmt_scalar(&s.eps),
            })).collect::<Vec<_>>(),
            "ratio_violations": self.ratio_violations,
            "eps_violations": self.eps_violations,
            "game2_violations": self.game2_violations,
            "inner": inner,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::{ba_certificate, BA_BUDGET};
    use crate::engine::{final_ball, play, Status};
    use crate::geometry::{int, parse_scalar};
    use crate::strategies::{ba_alice, random_bob, shrink_in_place_bob};

    fn affine_3x() -> AffineMap {
        AffineMap::new(vec![vec![int(3)]], vec![q(1, 7)]).unwrap()
    }

    #[test]
    fn affine_constants_exact() {
        let s = PullbackSetup::estimate(&affine_3x(), &Ball::new(Point::origin(1), int(4)).unwrap(), &q(1, 4), 8).unwrap();
        assert_eq!((s.c1.clone(), s.c2.clone(), s.c.clone()), (int(3), q(1, 3), int(2)));
        assert_eq!(s.n, 3);
        assert_eq!(s.beta_prime, q(1, 64));
        assert_eq!(s.eta, q(5, 64));
        assert!(&s.c * &s.eta < s.beta);
        assert_eq!(s.method, "exact");
    }

    #[test]
    fn identity_constants() {
        let id = AffineMap::new(vec![vec![int(1), int(0)], vec![int(0), int(1)]], vec![int(0), int(0)]).unwrap();
        let s = PullbackSetup::estimate(&id, &Ball::new(Point::origin(2), int(4)).unwrap(), &q(1, 4), 8).unwrap();
        assert!((to_f64(&s.c1) - 1.0).abs() < 1e-9 && (to_f64(&s.c2) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sine_constants_bracket_truth() {
        let u = Ball::new(Point::origin(1), int(2)).unwrap();
        let s = PullbackSetup::estimate(&SmoothMap::sine_perturbation(), &u, &q(1, 4), 64).unwrap();
        assert!(to_f64(&s.c1) >= 1.1 && to_f64(&s.c1) <= 1.1 * GRID_INFLATION + 1e-9);
        let true_c2 = 1.0 / (1.0 + 2f64.cos() / 10.0);
        assert!(to_f64(&s.c2) >= true_c2);
        assert_eq!(s.n, 4);
    }

    #[test]
    fn exact_shrinking_bob_spaces_stages_by_n() {
        let opening = Ball::new(Point(vec![q(1, 3)]), q(1, 2)).unwrap();
        let mut alice =
            pullback_alice(Box::new(ba_alice(1, q(1, 64))), Box::new(affine_3x()), Ball::new(Point::origin(1), int(4)).unwrap(), q(1, 4), 8)
                .unwrap();
        let t = play(GameConfig::absolute(1, 0, q(1, 4), 13), &mut alice, &mut shrink_in_place_bob(opening)).unwrap();
        assert_eq!(t.status, Status::AliceWinsAtHorizon, "{:?}", t.meta.reason);
        let turns = alice.stage_turns();
        assert!(turns.len() >= 4, "{turns:?}");
        assert!(turns.windows(2).all(|w| w[1] - w[0] == 3), "{turns:?}");
    }

    #[test]
    fn affine_pullback_certifies_image() {
        for seed in 0..3 {
            let mut alice = pullback_alice(
                Box::new(ba_alice(1, q(1, 64))),
                Box::new(affine_3x()),
                Ball::new(Point::origin(1), int(4)).unwrap(),
                q(1, 4),
                8,
            )
            .unwrap();
            let t = play(GameConfig::absolute(1, 0, q(1, 4), 12), &mut alice, &mut random_bob(seed)).unwrap();
            assert_eq!(t.status, Status::AliceWinsAtHorizon, "{:?}", t.meta.reason);
            let h = &t.hints;
            assert_eq!(h["ratio_violations"], 0);
            assert_eq!(h["eps_violations"], 0);
            assert_eq!(h["game2_violations"].as_array().unwrap().len(), 0);
            let c = parse_scalar(h["inner"]["c"].as_str().expect("inner activated")).unwrap();
            let qmax: u64 = h["inner"]["Q"].as_str().unwrap().parse().unwrap();
            let (img, exact) = alice.image_ball(&final_ball(&t).unwrap(), 0.0).unwrap();
            assert!(exact);
            assert!(ba_certificate(&img, &c, qmax, BA_BUDGET).unwrap().passed());
        }
    }

    #[test]
    fn beta_mismatch_rejected() {
        let mut alice = pullback_alice(
            Box::new(ba_alice(1, q(1, 64))),
            Box::new(affine_3x()),
            Ball::new(Point::origin(1), int(4)).unwrap(),
            q(1, 4),
            8,
        )
        .unwrap();
        let r = play(GameConfig::absolute(1, 0, q(1, 5), 5), &mut alice, &mut random_bob(0));
        assert!(matches!(r, Err(Error::Config(_))));
    }
}
