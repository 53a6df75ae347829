//! Acceptance run: one line per criterion, `PASS`/`FAIL` plus the measured
//! quantities and wall time. Runs as a plain binary (no libtest harness) so
//! the lines always reach stdout.

use std::time::Instant;

use num::{BigInt, One, Zero};

use schmidt::certify::{
    ba_certificate, digit_certificate_bob, digit_certificate_s, dim_lower_bound_diffuse, matrix_power, orbit_certificate, BA_BUDGET,
};
use schmidt::engine::{final_ball, play, AliceStrategy, Arena, BobStrategy, GameConfig, GameKind, Status, Transcript};
use schmidt::fractals::{
    diffuse_samples, diffuseness_check_on, diffuseness_strong_form_on, dimension_from_packing, lemma_transport, packing_ladder,
    strong_beta, DiffuseParams, KOracle,
};
use schmidt::geometry::{int, parse_scalar, pow, q, AffineSubspace, Ball, Point, Scalar};
use schmidt::measures::{build_decaying_measure, test_absolute_decay};
use schmidt::strategies::{
    ba_alice, big_matrix, center_removing_alice, digit_alice_s, digit_bob, digit_bob_horizon, intersect_alices, online_hyperplane_bob,
    pullback_alice, random_alice, random_bob, rational_hugger_bob, shrink_in_place_bob, toral_alice, AffineMap, SmoothMap, ToralSetup,
};
use schmidt::Result;

struct Line {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn line(id: &'static str, pass: bool, detail: impl Into<String>) -> Line {
    Line { id, pass, detail: detail.into() }
}

fn hint(h: &serde_json::Value, key: &str) -> Option<Scalar> {
    h[key].as_str().and_then(|s| parse_scalar(s).ok())
}

fn opening(d: usize) -> Ball {
    Ball::new(Point((0..d).map(|i| q(3 + i as i64, 11)).collect()), q(1, 100)).unwrap()
}

/// Adversaries shared by the BA criteria.
fn adversaries(d: usize) -> Vec<(String, Box<dyn BobStrategy>)> {
    let mut v: Vec<(String, Box<dyn BobStrategy>)> = Vec::new();
    for s in 0..3 {
        v.push((format!("random({s})"), Box::new(random_bob(s))));
    }
    v.push(("hugger(200)".into(), Box::new(rational_hugger_bob(200, opening(d)))));
    v.push(("shrink".into(), Box::new(shrink_in_place_bob(opening(d)))));
    v
}

/// Smallest integer `Q ≥ β^{−d·k/(d+1)}`, by exact integer powers.
fn q_oracle(beta: &Scalar, d: u32, k: u32) -> BigInt {
    // Q^{d+1} ≥ (1/β)^{d·k}
    let target = pow(&(Scalar::one() / beta), d * k);
    let mut lo = BigInt::one();
    while Scalar::from_integer(num::pow(lo.clone(), (d + 1) as usize)) < target {
        lo *= 2;
    }
    let mut hi = lo.clone();
    let mut lo = &lo / 2;
    while &hi - &lo > BigInt::one() {
        let mid: BigInt = (&lo + &hi) / 2;
        if Scalar::from_integer(num::pow(mid.clone(), (d + 1) as usize)) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if Scalar::from_integer(num::pow(lo.clone(), (d + 1) as usize)) >= target {
        lo
    } else {
        hi
    }
}

struct BaRun {
    ok: bool,
    lemma_checks: u64,
    detail: String,
}

fn ba_criterion(d: usize, beta: Scalar, horizon: usize) -> Result<BaRun> {
    let mut ok = true;
    let mut lemma_checks = 0;
    let mut notes = Vec::new();
    for (name, mut bob) in adversaries(d) {
        let cfg = GameConfig::absolute(d, d - 1, beta.clone(), horizon);
        let t = play(cfg, &mut ba_alice(d, beta.clone()), bob.as_mut())?;
        let h = &t.hints;
        let (Some(c), Some(rho)) = (hint(h, "c"), hint(h, "rho")) else {
            ok = false;
            notes.push(format!("{name}: not activated"));
            continue;
        };
        let k_max = h["k_max"].as_u64().unwrap_or(0) as u32;
        let qmax: u64 = h["Q"].as_str().and_then(|s| s.parse().ok()).unwrap_or(0);
        let q_ok = BigInt::from(qmax) == q_oracle(&beta, d as u32, k_max);
        let c_ok = c == &beta * &beta * &rho;
        let cert = ba_certificate(&final_ball(&t)?, &c, qmax, BA_BUDGET)?;
        lemma_checks += h["lemma_checks"].as_u64().unwrap_or(0);
        let good = t.status == Status::AliceWinsAtHorizon && q_ok && c_ok && cert.passed() && cert.exact;
        ok &= good;
        notes.push(format!("{name}: k_max={k_max} Q={qmax}{}", if good { "" } else { " FAILED" }));
    }
    Ok(BaRun { ok, lemma_checks, detail: notes.join(", ") })
}

fn c1_c2_c3() -> Result<Vec<Line>> {
    let t0 = Instant::now();
    let r1 = ba_criterion(1, q(1, 4), 12)?;
    let s1 = t0.elapsed().as_secs_f64();
    let t0 = Instant::now();
    let r2 = ba_criterion(2, q(1, 5), 8)?;
    let s2 = t0.elapsed().as_secs_f64();
    Ok(vec![
        line("1", r1.ok && s1 < 30.0, format!("BA d=1 β=1/4 horizon 12, c=β²ρ, Q=2^k_max, exact: {} ({s1:.1}s < 30s)", r1.detail)),
        line("2", r2.ok && s2 < 120.0, format!("BA d=2 β=1/5 horizon 8, Q=⌈β^(-2k/3)⌉: {} ({s2:.1}s < 120s)", r2.detail)),
        line(
            "3",
            r1.lemma_checks + r2.lemma_checks > 0,
            format!("coplanarity assertion never fired; {} constructive checks passed", r1.lemma_checks + r2.lemma_checks),
        ),
    ])
}

fn c4() -> Result<Line> {
    let mut ok = true;
    let mut notes = Vec::new();
    for seed in 0..3 {
        let map = AffineMap::new(vec![vec![int(3)]], vec![q(1, 7)])?;
        let u = Ball::new(Point::origin(1), int(4))?;
        let mut alice = pullback_alice(Box::new(ba_alice(1, q(1, 64))), Box::new(map), u, q(1, 4), 8)?;
        let t = play(GameConfig::absolute(1, 0, q(1, 4), 12), &mut alice, &mut random_bob(seed))?;
        let h = &t.hints;
        let books = h["ratio_violations"] == 0 && h["eps_violations"] == 0 && h["game2_violations"].as_array().is_some_and(|v| v.is_empty());
        let (img, exact) = alice.image_ball(&final_ball(&t)?, 0.0)?;
        let good = match (hint(&h["inner"], "c"), h["inner"]["Q"].as_str().and_then(|s| s.parse::<u64>().ok())) {
            (Some(c), Some(qm)) => {
                let cert = ba_certificate(&img, &c, qm, BA_BUDGET)?;
                cert.passed() && cert.exact && exact && books && t.status == Status::AliceWinsAtHorizon
            }
            _ => false,
        };
        ok &= good;
        notes.push(format!("seed {seed}: {}", if good { "ok" } else { "FAILED" }));
    }
    Ok(line("4", ok, format!("pullback f(x)=3x+1/7, β=1/4, inner β′=1/64, exact image certified, bookkeeping clean: {}", notes.join(", "))))
}

fn c5() -> Result<Line> {
    let mut ok = true;
    let mut notes = Vec::new();
    let u = Ball::new(Point::origin(1), int(2))?;
    for seed in 0..3 {
        let setup_alice = pullback_alice(Box::new(ba_alice(1, q(1, 4))), Box::new(SmoothMap::sine_perturbation()), u.clone(), q(1, 4), 64)?;
        let bp = setup_alice.setup().beta_prime.clone();
        let mut alice = pullback_alice(Box::new(ba_alice(1, bp.clone())), Box::new(SmoothMap::sine_perturbation()), u.clone(), q(1, 4), 64)?;
        let bob_open = Ball::new(Point(vec![q(1, 3)]), q(1, 2))?;
        let t = play(GameConfig::absolute(1, 0, q(1, 4), 28), &mut alice, &mut random_bob(seed).with_opening(bob_open))?;
        let h = &t.hints;
        let (img, exact) = alice.image_ball(&final_ball(&t)?, 1e-6)?;
        let good = match hint(&h["inner"], "c") {
            Some(c) => {
                let cert = ba_certificate(&img, &c, 50, BA_BUDGET)?;
                cert.passed() && !exact && t.status == Status::AliceWinsAtHorizon
            }
            None => false,
        };
        ok &= good;
        notes.push(format!("seed {seed}: {}", if good { "ok" } else { "FAILED" }));
    }
    Ok(line("5", ok, format!("pullback f(x)=x+sin(x)/10 on B(0,2), Q=50, slack 1e-6: {}", notes.join(", "))))
}

fn toral_game(r: &[Vec<i64>], beta: Scalar, horizon: usize, seed: u64) -> Result<(bool, Transcript)> {
    let mut alice = toral_alice(r.to_vec(), Point::origin(2), beta.clone())?;
    let t = play(GameConfig::absolute(2, 1, beta, horizon), &mut alice, &mut random_bob(seed))?;
    let ok = match hint(&t.hints, "t") {
        Some(tt) => orbit_certificate(&final_ball(&t)?, &big_matrix(r), &Point::origin(2), &tt, 20)?.passed(),
        None => false,
    };
    Ok((ok && t.status == Status::AliceWinsAtHorizon, t))
}

fn c6() -> Result<Line> {
    let diag = vec![vec![2, 0], vec![0, 3]];
    let mut ok = true;
    for seed in 0..3 {
        ok &= toral_game(&diag, q(1, 6), 15, seed)?.0;
    }
    let s = ToralSetup::new(diag, Point::origin(2), q(1, 6))?;
    let growth = s.sampled_growth_checks(1000, 30, 1e-8, 1);
    let rot = vec![vec![0, -1], vec![1, 0]];
    let sr = ToralSetup::new(rot.clone(), Point::origin(2), q(1, 6))?;
    let r4 = matrix_power(&big_matrix(&rot), 4);
    let identity = r4.iter().enumerate().all(|(i, row)| row.iter().enumerate().all(|(j, x)| if i == j { x.is_one() } else { x.is_zero() }));
    let mut rot_ok = true;
    for seed in 0..3 {
        rot_ok &= toral_game(&rot, q(1, 6), 15, seed)?.0;
    }
    let pass = ok && growth == (true, true) && sr.period == Some(4) && identity && rot_ok;
    Ok(line(
        "6",
        pass,
        format!(
            "toral diag(2,3) β=1/6 horizon 15, J=20: {ok}; δ₁/δ₂ sampled at 1e-8: {growth:?}; rotation period {:?}, R⁴=I exact: {identity}, certified: {rot_ok}",
            sr.period
        ),
    ))
}

fn c7() -> Result<Line> {
    let beta = q(1, 5);
    let cb = pow(&beta, 2);
    let r = vec![vec![2, 0], vec![0, 3]];
    let mut ok = true;
    for seed in 0..2 {
        let parts: Vec<Box<dyn AliceStrategy>> =
            vec![Box::new(ba_alice(2, cb.clone())), Box::new(toral_alice(r.clone(), Point::origin(2), cb.clone())?)];
        let mut alice = intersect_alices(parts, beta.clone())?;
        let open = Ball::new(Point(vec![q(3, 7), q(2, 7)]), q(1, 64))?;
        let t = play(GameConfig::absolute(2, 1, beta.clone(), 8), &mut alice, &mut random_bob(seed).with_opening(open))?;
        let fb = final_ball(&t)?;
        let ba = &t.hints["components"][0];
        let ba_ok = match (hint(ba, "c"), ba["Q"].as_str().and_then(|s| s.parse::<u64>().ok())) {
            (Some(c), Some(qm)) => ba_certificate(&fb, &c, qm, BA_BUDGET)?.passed(),
            _ => false,
        };
        let orbit_ok = match hint(&t.hints["components"][1], "t") {
            Some(tt) => orbit_certificate(&fb, &big_matrix(&r), &Point::origin(2), &tt, 20)?.passed(),
            None => false,
        };
        ok &= ba_ok && orbit_ok && t.status == Status::AliceWinsAtHorizon;
    }
    Ok(line("7", ok, "BA ∩ toral diag(2,3), d=2, β=1/5, horizon 8: both certificates pass for 2 seeds"))
}

fn c8() -> Result<Vec<Line>> {
    let mut ok = true;
    let mut reach = u64::MAX;
    for seed in 0..3 {
        let cfg = GameConfig::classic(2, q(1, 108), q(1, 3), 8);
        let t = play(cfg, &mut digit_alice_s(q(1, 3)), &mut random_bob(seed))?;
        let idx: Vec<u64> = t.hints["indices"].as_array().map(|a| a.iter().filter_map(|v| v.as_u64()).collect()).unwrap_or_default();
        let upto: Vec<u64> = idx.iter().copied().filter(|&i| i <= 30).collect();
        reach = reach.min(idx.iter().copied().max().unwrap_or(0));
        let cert = digit_certificate_s(&final_ball(&t)?, &upto)?;
        ok &= cert.passed() && cert.exact && t.status == Status::AliceWinsAtHorizon;
    }
    let a = line("8a", ok && reach >= 30, format!("digit_alice_S α=1/108 β=1/3 vs random Bob: zero digits at every ⌈a+jθ⌉ ≤ 30, exact (indices reach {reach})"));

    // n = 1 asks for α = 4/3, outside the classic game
    let attempt = digit_bob(1);
    let cfg = GameConfig::classic(2, attempt.alpha(), attempt.beta(), digit_bob_horizon(1, 20));
    let n1 = play(cfg, &mut random_alice(0), &mut digit_bob(1));
    let b1 = line(
        "8b",
        n1.is_ok(),
        match &n1 {
            Err(e) => format!("UNATTAINABLE at n=1: α=4/3 is not a valid classic-game parameter ({e})"),
            Ok(_) => "n=1 game ran".into(),
        },
    );
    let mut ok2 = true;
    for seed in 0..3 {
        let bob = digit_bob(2);
        let cfg = GameConfig::classic(2, bob.alpha(), bob.beta(), digit_bob_horizon(2, 20));
        let t = play(cfg, &mut random_alice(seed), &mut digit_bob(2))?;
        let cert = digit_certificate_bob(&final_ball(&t)?, 2, 20)?;
        ok2 &= cert.passed() && cert.exact && t.status == Status::AliceWinsAtHorizon;
    }
    let b2 = line("8b(n=2)", ok2, "digit_bob n=2 (α=4/9, β=1/36) vs random Alice, depth 20: x_{i+1}=1 or y_i=1 for all i ≤ 20, exact");
    Ok(vec![a, b1, b2])
}

fn c9() -> Result<Line> {
    // independent form: log(k+2) / log((2+β)/β)
    let oracle = |k: usize, b: f64| ((k + 2) as f64).ln() / ((2.0 + b) / b).ln();
    let v0 = dim_lower_bound_diffuse(0, 0.25)?;
    let v1 = dim_lower_bound_diffuse(1, 0.2)?;
    let close = (v0 - 0.3155).abs() < 1e-4
        && (v1 - 0.4582).abs() < 1e-4
        && (v0 - oracle(0, 0.25)).abs() < 1e-12
        && (v1 - oracle(1, 0.2)).abs() < 1e-12;
    let mut mono = true;
    for k in 0..2 {
        let mut prev = 0.0;
        for i in 1..=100 {
            let b = i as f64 / 101.0;
            let v = dim_lower_bound_diffuse(k, b)?;
            mono &= v > prev && v < k as f64 + 1.0;
            if k > 0 {
                mono &= v > dim_lower_bound_diffuse(k - 1, b)?;
            }
            prev = v;
        }
    }
    Ok(line("9", close && mono, format!("bound(k=0,β=1/4)={v0:.6}, bound(k=1,β=1/5)={v1:.6}; 100-point monotone grid: {mono}")))
}

fn c10() -> Result<Line> {
    let t0 = Instant::now();
    let fit = dimension_from_packing(&KOracle::cantor(), &packing_ladder(&q(1, 3), 5), 200, 10)?;
    let s = t0.elapsed().as_secs_f64();
    let pass = (0.61..=0.65).contains(&fit.delta) && s < 60.0;
    Ok(line("10", pass, format!("Cantor packing dimension {:.4} ∈ [0.61, 0.65] (log2/log3 = {:.4}), {s:.1}s < 60s", fit.delta, 2f64.ln() / 3f64.ln())))
}

fn c11() -> Result<Line> {
    let k = KOracle::cantor();
    let res = pow(&q(1, 3), 10);
    let bp = q(1, 4);
    let b = strong_beta(&bp);
    let p = DiffuseParams::new(0, bp.clone(), int(1))?;
    let samples = diffuse_samples(&k, &p, 500, &res, 11)?;
    let plain = diffuseness_check_on(&k, &bp, &samples, &res)?;
    let strong = diffuseness_strong_form_on(&k, &b, &lemma_transport(&samples, &b), &res)?;
    let exceptions = plain.outcomes.iter().zip(&strong.outcomes).filter(|(a, s)| **a && !**s).count();
    Ok(line(
        "11",
        exceptions == 0 && plain.outcomes.len() == 500,
        format!("Cantor k=0, β′=1/4 → β=1/9 on 500 shared samples: {} plain passes, {} strong passes, {exceptions} exceptions", plain.passes, strong.passes),
    ))
}

fn c12() -> Result<Line> {
    let u = Ball::new(Point(vec![q(1, 4)]), q(10, 9))?;
    let tree = build_decaying_measure(&KOracle::cantor(), &u, &q(1, 3), &q(1, 9), 8)?;
    let structure = tree.check_structure()?;
    let gamma = (0.5f64).ln() / (1.0f64 / 9.0).ln();
    let c = 2f64.powf(gamma) * 9f64.powf(gamma) * 2.0;
    let consts = (tree.gamma - gamma).abs() < 1e-12 && (tree.c - c).abs() < 1e-9;
    let leaf_sum: Scalar = tree.leaves().iter().map(|n| n.mass.clone()).sum();
    let rep = test_absolute_decay(&tree, c, gamma, 10_000, 12)?;
    let pass = consts && leaf_sum.is_one() && structure.leaves == 256 && rep.violations == 0 && rep.counting_violations == 0;
    Ok(line(
        "12",
        pass,
        format!(
            "Cantor tree depth 8, β=1/9: {} nodes exact, leaf mass {}, γ={gamma:.4}, C={c:.4}; 10⁴ trials: {} violations, {} stage-count violations",
            structure.nodes,
            leaf_sum,
            rep.violations,
            rep.counting_violations
        ),
    ))
}

fn c13() -> Result<Line> {
    let k = KOracle::finite(vec![Point(vec![q(1, 2)])])?;
    let cfg = GameConfig::new(GameKind::Absolute { k: 0, beta: q(1, 4) }, Arena::OnSet { oracle: k }, 5, 0);
    let t = play(cfg, &mut center_removing_alice(), &mut random_bob(0))?;
    Ok(line(
        "13",
        t.status == Status::BobWinsNoMove && !t.meta.unverified_no_move,
        format!("singleton K absolute game: {:?} after {} Bob move(s), verified", t.status, t.bob_turns()),
    ))
}

fn c14() -> Result<Line> {
    let l = AffineSubspace::new(Point::origin(2), vec![vec![int(0), int(1)]])?;
    let t = play(GameConfig::absolute(2, 0, q(1, 4), 20), &mut center_removing_alice(), &mut online_hyperplane_bob(l.clone()))?;
    let mut on = true;
    for b in t.bob_balls() {
        on &= l.contains(&b.center)?;
    }
    let n = t.bob_balls().count();
    Ok(line("14", t.status == Status::AliceWinsAtHorizon && n == 20 && on, format!("hyperplane Bob on {{0}}×ℝ survives {n} rounds of point removal, all centers on the line: {on}")))
}

fn main() {
    let t0 = Instant::now();
    let mut lines = Vec::new();
    let mut push = |r: Result<Vec<Line>>, id: &'static str| match r {
        Ok(v) => lines.extend(v),
        Err(e) => lines.push(line(id, false, format!("error: {e}"))),
    };
    push(c1_c2_c3(), "1-3");
    push(c4().map(|l| vec![l]), "4");
    push(c5().map(|l| vec![l]), "5");
    push(c6().map(|l| vec![l]), "6");
    push(c7().map(|l| vec![l]), "7");
    push(c8(), "8");
    push(c9().map(|l| vec![l]), "9");
    push(c10().map(|l| vec![l]), "10");
    push(c11().map(|l| vec![l]), "11");
    push(c12().map(|l| vec![l]), "12");
    push(c13().map(|l| vec![l]), "13");
    push(c14().map(|l| vec![l]), "14");
    let mut failed = 0;
    for l in &lines {
        let tag = if l.pass { "PASS" } else if l.detail.starts_with("UNATTAINABLE") { "FAIL (unattainable)" } else { "FAIL" };
        println!("criterion {:<8} {tag:<20} {}", l.id, l.detail);
        if !l.pass && !l.detail.starts_with("UNATTAINABLE") {
            failed += 1;
        }
    }
    let unattainable = lines.iter().filter(|l| !l.pass && l.detail.starts_with("UNATTAINABLE")).count();
    println!(
        "acceptance: {} passed, {failed} failed, {unattainable} unattainable, {:.1}s",
        lines.iter().filter(|l| l.pass).count(),
        t0.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
