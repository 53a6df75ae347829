//! Strategy-agnostic certificates for finite-depth game outcomes, and the
//! closed-form Hausdorff-dimension lower bounds.
//!
//! Certificates only read a ball and parameters; they never consult the
//! strategy that produced the ball.

use num::{BigInt, Integer, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{ceil, floor, fmt_scalar, from_f64, pow, to_f64, Ball, Point, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertKind {
    Ba,
    Orbit,
    Vwa,
    DigitS,
    DigitBob,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Not decidable from the given ball (digits not yet fixed).
    Partial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertKind,
    pub params: Value,
    pub verdict: Verdict,
    /// First violation found, when the verdict is not a pass.
    pub witness: Option<Value>,
    /// True when every comparison was done in exact rational arithmetic.
    pub exact: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Default cap on the number of `(p, q)` candidates a BA certificate visits.
pub const BA_BUDGET: u64 = 200_000_000;

/// Whether `p/q` keeps distance at least `c·q^{−(1+1/d)}` from every point of
/// `ball`. Exact for `d ≤ 2`; for larger `d` the power is bounded from
/// above in floating point, so a `true` is still trustworthy.
fn far_enough(ball: &Ball, p: &Point, qq: &BigInt, c: &Scalar) -> (bool, bool) {
    let d = ball.dim();
    let d2 = p.sq_dist(&ball.center);
    let rho = &ball.radius;
    let qs = Scalar::from_integer(qq.clone());
    match d {
        1 => {
            let t = c / (&qs * &qs);
            let need = rho + t;
            (d2 >= &need * &need, true)
        }
        2 => {
            // D − ρ ≥ c q^{-3/2}  ⇔  D ≥ ρ and (D − ρ)² ≥ c² q^{-3}
            if d2 < rho * rho {
                return (false, true);
            }
            let a = &d2 + rho * rho - c * c / pow(&qs, 3);
            if a.is_negative() {
                return (false, true);
            }
            (&a * &a >= Scalar::from_integer(4.into()) * rho * rho * &d2, true)
        }
        _ => {
            let e = 1.0 + 1.0 / d as f64;
            let t = to_f64(c) * to_f64(&qs).powf(-e) * (1.0 + 1e-9);
            let need = rho + from_f64(t);
            (d2 >= &need * &need, false)
        }
    }
}

/// Checks `dist(p/q, ball) ≥ c·q^{−(1+1/d)}` for all `q ≤ qmax` and all
/// integer `p`. Non-reduced fractions are skipped: their reduced form has a
/// smaller denominator and a larger required gap.
pub fn ba_certificate(ball: &Ball, c: &Scalar, qmax: u64, budget: u64) -> Result<Certificate> {
    if qmax == 0 {
        return Err(Error::Input("Q must be at least 1".into()));
    }
    if !c.is_positive() {
        return Err(Error::Input("c must be positive".into()));
    }
    let d = ball.dim();
    let params = json!({"c": fmt_scalar(c), "Q": qmax, "d": d, "ball": ball});
    let mut visited: u64 = 0;
    let mut exact = true;
    for qv in 1..=qmax {
        let qq = BigInt::from(qv);
        let qs = Scalar::from_integer(qq.clone());
        // every candidate closer than c/q ≥ c q^{-(1+1/d)} to the ball
        let reach = &ball.radius + c / &qs;
        let ranges: Vec<(BigInt, BigInt)> = ball
            .center
            .0
            .iter()
            .map(|x| (ceil(&((x - &reach) * &qs)), floor(&((x + &reach) * &qs))))
            .collect();
        if ranges.iter().any(|(lo, hi)| lo > hi) {
            continue;
        }
        let count: u64 = ranges
            .iter()
            .map(|(lo, hi)| (hi - lo + 1u32).to_u64().unwrap_or(u64::MAX))
            .fold(1u64, |a, b| a.saturating_mul(b));
        visited = visited.saturating_add(count);
        if visited > budget {
            return Err(Error::Budget { achieved: qv - 1 });
        }
        let mut p: Vec<BigInt> = ranges.iter().map(|(lo, _)| lo.clone()).collect();
        'odometer: loop {
            if p.iter().fold(qq.clone(), |g, x| g.gcd(x)).is_one() {
                let pt = Point(p.iter().map(|pi| Scalar::new(pi.clone(), qq.clone())).collect());
                let (ok, ex) = far_enough(ball, &pt, &qq, c);
                exact &= ex;
                if !ok {
                    let witness = json!({
                        "p": p.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
                        "q": qv,
                        "sq_center_distance": fmt_scalar(&pt.sq_dist(&ball.center)),
                    });
                    return Ok(Certificate { kind: CertKind::Ba, params, verdict: Verdict::Fail, witness: Some(witness), exact, note: None });
                }
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
    Ok(Certificate { kind: CertKind::Ba, params, verdict: Verdict::Pass, witness: None, exact, note: None })
}

/// Integer matrix power `R^j` (exact).
pub fn matrix_power(r: &[Vec<BigInt>], j: u32) -> Vec<Vec<BigInt>> {
    let d = r.len();
    let mut acc: Vec<Vec<BigInt>> =
        (0..d).map(|i| (0..d).map(|k| if i == k { BigInt::one() } else { BigInt::zero() }).collect()).collect();
    for _ in 0..j {
        acc = (0..d)
            .map(|i| (0..d).map(|k| (0..d).map(|m| &acc[i][m] * &r[m][k]).sum()).collect())
            .collect();
    }
    acc
}

/// Exact distance² from `v` to the lattice `ℤᵈ`.
pub fn sq_dist_to_lattice(v: &[Scalar]) -> Scalar {
    v.iter()
        .map(|x| {
            let w = x - x.round();
            &w * &w
        })
        .sum()
}

/// Checks, for `0 ≤ j ≤ J`, that the center of `ball` satisfies
/// `dist(Rʲx, y + ℤᵈ) ≥ t − Gⱼ·r` with `Gⱼ = ⌈‖Rʲ‖_F⌉ ≥ ‖Rʲ‖`, the bound
/// that every point within `r` of an orbit-avoiding limit point must meet.
pub fn orbit_certificate(ball: &Ball, r: &[Vec<BigInt>], y: &Point, t: &Scalar, jmax: u32) -> Result<Certificate> {
    let d = ball.dim();
    check_dim(d, r.len())?;
    check_dim(d, y.dim())?;
    if !t.is_positive() || jmax == 0 {
        return Err(Error::Input("orbit certificate needs t > 0 and J ≥ 1".into()));
    }
    let params = json!({
        "R": r.iter().map(|row| row.iter().map(|x| x.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "y": y, "t": fmt_scalar(t), "J": jmax, "ball": ball,
    });
    let mut worst: Option<(f64, u32)> = None;
    for j in 0..=jmax {
        let rj = matrix_power(r, j);
        let image: Vec<Scalar> = rj
            .iter()
            .zip(&y.0)
            .map(|(row, yi)| {
                row.iter().zip(&ball.center.0).map(|(a, x)| Scalar::from_integer(a.clone()) * x).sum::<Scalar>() - yi
            })
            .collect();
        let dist2 = sq_dist_to_lattice(&image);
        let frob2: BigInt = rj.iter().flatten().map(|a| a * a).sum();
        let g = frob2.sqrt() + if (frob2.sqrt().pow(2)) == frob2 { 0 } else { 1 };
        let need = t - Scalar::from_integer(g) * &ball.radius;
        let margin = to_f64(&dist2).sqrt() - to_f64(&need);
        if worst.map_or(true, |(m, _)| margin < m) {
            worst = Some((margin, j));
        }
        if need.is_positive() && dist2 < &need * &need {
            let witness = json!({"j": j, "sq_distance": fmt_scalar(&dist2), "required": fmt_scalar(&need)});
            return Ok(Certificate { kind: CertKind::Orbit, params, verdict: Verdict::Fail, witness: Some(witness), exact: true, note: None });
        }
    }
    let note = worst.map(|(m, j)| format!("smallest margin {m:.3e} at j = {j}"));
    Ok(Certificate { kind: CertKind::Orbit, params, verdict: Verdict::Pass, witness: None, exact: true, note })
}

/// Number of reduced `p/q` with `q ≤ Q` and `‖x − p/q‖ < q^{−τ}`, exactly.
pub fn vwa_count(x: &Point, tau: &Scalar, qmax: u64) -> Result<u64> {
    let d = x.dim() as i64;
    if *tau <= Scalar::new((d + 1).into(), d.into()) {
        return Err(Error::Input(format!("τ must exceed (d+1)/d, got {tau}")));
    }
    let (a, b) = (tau.numer().clone(), tau.denom().to_u32().ok_or_else(|| Error::Input("τ denominator too large".into()))?);
    let two_a = (a * 2u32).to_u32().ok_or_else(|| Error::Input("τ too large".into()))?;
    let mut count = 0;
    for qv in 1..=qmax {
        let qq = BigInt::from(qv);
        let qs = Scalar::from_integer(qq.clone());
        let ranges: Vec<(BigInt, BigInt)> =
            x.0.iter().map(|c| (floor(&(c * &qs)) - 1, ceil(&(c * &qs)) + 1)).collect();
        let mut p: Vec<BigInt> = ranges.iter().map(|(lo, _)| lo.clone()).collect();
        'odometer: loop {
            if p.iter().fold(qq.clone(), |g, v| g.gcd(v)).is_one() {
                let pt = Point(p.iter().map(|pi| Scalar::new(pi.clone(), qq.clone())).collect());
                // ‖·‖ < q^{−a/b}  ⇔  (‖·‖²)^b · q^{2a} < 1
                if pow(&pt.sq_dist(x), b) * pow(&qs, two_a) < Scalar::one() {
                    count += 1;
                }
            }
            for i in 0..x.dim() {
                if p[i] < ranges[i].1 {
                    p[i] += 1;
                    continue 'odometer;
                }
                p[i] = ranges[i].0.clone();
            }
            break;
        }
    }
    Ok(count)
}

/// `−log(k+2) / (log β − log(2+β))`: the dimension lower bound for winning
/// sets intersected with a k-dimensionally β-diffuse set.
pub fn dim_lower_bound_diffuse(k: usize, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Input("β must lie in (0,1)".into()));
    }
    // log β − log(2+β) = −log(1 + 2/β)
    Ok(((k + 2) as f64).ln() / (2.0 / beta).ln_1p())
}

/// The dimension lower bound from a `(C, γ)`-absolutely decaying measure is γ itself.
pub fn dim_lower_bound_decay(gamma: f64) -> Result<f64> {
    if gamma <= 0.0 {
        return Err(Error::Input("γ must be positive".into()));
    }
    Ok(gamma)
}

/// For each level `i = 0..=depth`, the base-3 digit of each coordinate at
/// `3^{−i}` shared by every point of the ball (through its closed level-`i`
/// cell), or `None` once the ball straddles cells.
pub fn stable_digits(ball: &Ball, depth: u32) -> Vec<Option<Vec<u8>>> {
    let mut out = Vec::new();
    let mut scale = Scalar::one();
    let three = Scalar::from_integer(3.into());
    for _ in 0..=depth {
        let digits: Option<Vec<u8>> = ball
            .center
            .0
            .iter()
            .map(|x| {
                let lo = (x - &ball.radius) * &scale;
                let hi = (x + &ball.radius) * &scale;
                let j = floor(&lo);
                if hi <= Scalar::from_integer(&j + 1) {
                    Some(j.mod_floor(&BigInt::from(3)).to_u8().expect("digit < 3"))
                } else {
                    None
                }
            })
            .collect();
        out.push(digits);
        scale *= &three;
    }
    out
}

fn stable_prefix(digits: &[Option<Vec<u8>>]) -> usize {
    digits.iter().take_while(|d| d.is_some()).count()
}

/// Every listed index carries digit 0 in both coordinates.
pub fn digit_certificate_s(ball: &Ball, indices: &[u64]) -> Result<Certificate> {
    check_dim(2, ball.dim())?;
    let depth = indices.iter().copied().max().unwrap_or(0) as u32;
    let digits = stable_digits(ball, depth);
    let prefix = stable_prefix(&digits);
    let params = json!({"indices": indices, "ball": ball});
    for &i in indices {
        match &digits[i as usize] {
            None => {
                return Ok(Certificate {
                    kind: CertKind::DigitS,
                    params,
                    verdict: Verdict::Partial,
                    witness: Some(json!({"stable_prefix": prefix})),
                    exact: true,
                    note: Some(format!("digits beyond level {} are not fixed by the ball", prefix.saturating_sub(1))),
                })
            }
            Some(dg) if dg.iter().any(|&x| x != 0) => {
                return Ok(Certificate {
                    kind: CertKind::DigitS,
                    params,
                    verdict: Verdict::Fail,
                    witness: Some(json!({"index": i, "digits": dg})),
                    exact: true,
                    note: None,
                })
            }
            _ => {}
        }
    }
    Ok(Certificate { kind: CertKind::DigitS, params, verdict: Verdict::Pass, witness: None, exact: true, note: None })
}

/// For `1 ≤ i ≤ depth`: `x_{i+n} = 1` or `y_i = 1`.
pub fn digit_certificate_bob(ball: &Ball, n: u32, depth: u32) -> Result<Certificate> {
    check_dim(2, ball.dim())?;
    let digits = stable_digits(ball, depth + n);
    let prefix = stable_prefix(&digits);
    let params = json!({"n": n, "depth": depth, "ball": ball});
    if prefix <= (depth + n) as usize {
        return Ok(Certificate {
            kind: CertKind::DigitBob,
            params,
            verdict: Verdict::Partial,
            witness: Some(json!({"stable_prefix": prefix})),
            exact: true,
            note: Some("ball too large to fix the required digits".into()),
        });
    }
    for i in 1..=depth {
        let x = digits[(i + n) as usize].as_ref().expect("stable")[0];
        let y = digits[i as usize].as_ref().expect("stable")[1];
        if x != 1 && y != 1 {
            return Ok(Certificate {
                kind: CertKind::DigitBob,
                params,
                verdict: Verdict::Fail,
                witness: Some(json!({"i": i, "x_i_plus_n": x, "y_i": y})),
                exact: true,
                note: None,
            });
        }
    }
    Ok(Certificate { kind: CertKind::DigitBob, params, verdict: Verdict::Pass, witness: None, exact: true, note: None })
}
