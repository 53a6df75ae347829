//! Alice strategies from the winning proofs, and adversarial Bobs.
//!
//! Every strategy keeps only state derived from the transcripts it is shown;
//! `reset` returns it to the state it had at construction.

mod ba;
mod bobs;
mod digits;
mod intersect;
mod pullback;
mod toral;

pub use ba::{ba_alice, BaAlice};
pub use bobs::{
    center_removing_alice, online_hyperplane_bob, radius_ratios, random_alice, random_bob, rational_hugger_bob,
    shrink_in_place_bob, CenterRemovingAlice, OnlineHyperplaneBob, RandomAlice, RandomBob,
    RationalHuggerBob, ShrinkInPlaceBob,
};
pub use digits::{digit_alice_s, digit_bob, digit_bob_horizon, digit_index, DigitAlice, DigitBob};
pub use toral::{big_matrix, toral_alice, ToralAlice, ToralSetup};
pub use pullback::{pullback_alice, AffineMap, C1Map, PullbackAlice, PullbackSetup, SmoothMap};
pub use intersect::{intersect_alices, IntersectAlice};

use num::{BigInt, One, ToPrimitive};

use crate::engine::{GameConfig, GameKind};
use crate::error::{Error, Result};
use crate::geometry::{q, Scalar};

/// `(k, β)` of an absolute game, or a configuration error.
pub(crate) fn absolute_params(cfg: &GameConfig) -> Result<(usize, Scalar)> {
    match &cfg.kind {
        GameKind::Absolute { k, beta } => Ok((*k, beta.clone())),
        GameKind::Classic { .. } => Err(Error::Config("strategy plays the absolute game".into())),
    }
}

/// Integer offsets `z` with `‖z‖ ≤ m`, scaled by `1/m`: a grid of step
/// `1/m` in the closed unit ball, in lexicographic order.
pub(crate) fn unit_ball_grid(d: usize, m: i64) -> Vec<Vec<Scalar>> {
    let mut out = Vec::new();
    let mut z = vec![-m; d];
    loop {
        if z.iter().map(|x| x * x).sum::<i64>() <= m * m {
            out.push(z.iter().map(|&x| q(x, m)).collect());
        }
        let mut i = d;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if z[i] < m {
                z[i] += 1;
                break;
            }
            z[i] = -m;
        }
    }
}

/// A rational upper bound on π.
pub(crate) fn pi_upper() -> Scalar {
    q(355, 113)
}

/// Rational upper bound on the volume of the unit ball in ℝᵈ.
pub fn unit_ball_volume_upper(d: usize) -> Scalar {
    match d {
        0 => Scalar::one(),
        1 => q(2, 1),
        _ => unit_ball_volume_upper(d - 2) * pi_upper() * q(2, d as i64),
    }
}

pub(crate) fn factorial(d: usize) -> Scalar {
    Scalar::from_integer((1..=d as u64).map(BigInt::from).product())
}

/// Smallest integer `Q ≥ 1` with `Q^{d+1} · β^{d k} ≥ 1`, i.e.
/// `⌈β^{−dk/(d+1)}⌉` computed exactly.
pub fn denominator_bound(beta: &Scalar, d: usize, k: usize) -> BigInt {
    let target = crate::geometry::pow(beta, (d * k) as u32);
    let ok = |qq: &BigInt| -> bool {
        let qs = Scalar::from_integer(qq.clone());
        crate::geometry::pow(&qs, (d + 1) as u32) * &target >= Scalar::one()
    };
    let guess = (1.0 / beta.to_f64().unwrap()).powf((d * k) as f64 / (d + 1) as f64);
    let mut qq = BigInt::from(guess.max(1.0).floor() as u64).max(BigInt::one());
    while qq > BigInt::one() && ok(&(&qq - 1)) {
        qq -= 1;
    }
    while !ok(&qq) {
        qq += 1;
    }
    qq
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts() {
        assert_eq!(unit_ball_grid(1, 4).len(), 9);
        // lattice points in a disk of radius 2
        assert_eq!(unit_ball_grid(2, 2).len(), 13);
    }

    #[test]
    fn volume_bounds_dominate() {
        use std::f64::consts::PI;
        let exact = [2.0, PI, 4.0 * PI / 3.0, PI * PI / 2.0];
        for (d, v) in exact.iter().enumerate() {
            let up = unit_ball_volume_upper(d + 1).to_f64().unwrap();
            assert!(up >= *v && up < v * 1.0001, "d={}", d + 1);
        }
    }

    #[test]
    fn denominator_bounds_are_exact_ceilings() {
        assert_eq!(denominator_bound(&q(1, 4), 1, 5), BigInt::from(32));
        assert_eq!(denominator_bound(&q(1, 4), 1, 0), BigInt::from(1));
        // 5^{4/3} = 8.549...
        assert_eq!(denominator_bound(&q(1, 5), 2, 2), BigInt::from(9));
        // 5^{2} exactly
        assert_eq!(denominator_bound(&q(1, 5), 2, 3), BigInt::from(25));
    }
}
