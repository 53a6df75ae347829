//! Declarative experiment configs and the runners behind the `schmidt` CLI.
//!
//! A config is plain JSON with rational fields written as `"p/q"` strings.
//! Runners return an [`Outcome`] holding a JSON summary (with the fully
//! resolved config embedded) and the files to write; the binary only parses
//! flags, writes files and maps results to exit codes.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::certify::{
    ba_certificate, digit_certificate_bob, digit_certificate_s, dim_lower_bound_diffuse, orbit_certificate, Certificate, BA_BUDGET,
};
use crate::engine::{final_ball, play, AliceStrategy, Arena, BobStrategy, GameConfig, GameKind, Status, Transcript};
use crate::error::{Error, Result};
use crate::fractals::{
    diffuseness_check, diffuseness_strong_form, dimension_from_packing, microset_width, packing_ladder, DiffuseParams, KOracle,
};
use crate::geometry::{fmt_scalar, parse_scalar, pow, serde_mat, serde_scalar, serde_vec, AffineSubspace, Ball, Point, Scalar};
use crate::measures::{
    build_decaying_measure, fit_ahlfors_delta, test_absolute_decay, test_ahlfors, test_federer, AhlforsParams,
};
use crate::strategies::{
    ba_alice, big_matrix, center_removing_alice, digit_alice_s, digit_bob, intersect_alices, online_hyperplane_bob, pullback_alice,
    random_alice, random_bob, rational_hugger_bob, shrink_in_place_bob, toral_alice, AffineMap, C1Map, SmoothMap,
};

/// One experiment, tagged by subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum ExperimentConfig {
    Play(PlayConfig),
    Fractal(FractalConfig),
    Measure(MeasureConfig),
    Dims(DimsConfig),
    Certify(CertifyConfig),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlayConfig {
    pub game: GameSpec,
    pub alice: AliceSpec,
    pub bob: BobSpec,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub checks: CheckSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    pub d: usize,
    pub kind: GameKind,
    pub horizon: usize,
    /// Defaults to all of `ℝ^d`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arena: Option<KOracle>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum AliceSpec {
    Ba,
    Toral {
        r: Vec<Vec<i64>>,
        #[serde(with = "serde_vec")]
        y: Vec<Scalar>,
    },
    /// BA and toral strategies interleaved.
    BaToral {
        r: Vec<Vec<i64>>,
        #[serde(with = "serde_vec")]
        y: Vec<Scalar>,
    },
    PullbackAffine {
        #[serde(with = "serde_mat")]
        a: Vec<Vec<Scalar>>,
        #[serde(with = "serde_vec")]
        b: Vec<Scalar>,
        u: Ball,
        #[serde(with = "serde_scalar")]
        inner_beta: Scalar,
        grid: i64,
    },
    /// `x ↦ x + sin(x)/10` in one dimension.
    PullbackSine {
        u: Ball,
        #[serde(with = "serde_scalar")]
        inner_beta: Scalar,
        grid: i64,
    },
    DigitS,
    Random,
    CenterRemoving,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum BobSpec {
    Random {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        opening: Option<Ball>,
    },
    ShrinkInPlace { opening: Ball },
    RationalHugger { qmax: u64, opening: Ball },
    Digit { n: u32 },
    OnlineHyperplane {
        #[serde(with = "serde_vec")]
        normal: Vec<Scalar>,
        #[serde(with = "serde_scalar")]
        offset: Scalar,
    },
}

/// Certificate parameters that are not exported by the strategies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckSpec {
    /// Orbit certificates check `R^j y` for `j ≤ orbit_j`.
    pub orbit_j: u32,
    /// Denominator cap for BA certificates of inexact pullback images.
    pub image_q: u64,
    /// Relative radius slack for inexact pullback images.
    pub image_slack: f64,
    /// Digit depth for the digit-Bob certificate.
    pub digit_depth: u32,
    pub ba_budget: u64,
}

impl Default for CheckSpec {
    fn default() -> Self {
        CheckSpec { orbit_j: 20, image_q: 50, image_slack: 1e-6, digit_depth: 20, ba_budget: BA_BUDGET }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractalConfig {
    pub oracle: KOracle,
    pub task: FractalTask,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum FractalTask {
    Dimension {
        #[serde(with = "serde_scalar")]
        beta0: Scalar,
        rungs: u32,
        samples: usize,
    },
    Diffuse {
        k: usize,
        #[serde(with = "serde_scalar")]
        beta: Scalar,
        #[serde(with = "serde_scalar")]
        rho_k: Scalar,
        #[serde(with = "serde_scalar")]
        resolution: Scalar,
        trials: usize,
        #[serde(default)]
        strong: bool,
    },
    Microset { ball: Ball, dim: usize, samples: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureConfig {
    pub oracle: KOracle,
    pub u: Ball,
    #[serde(with = "serde_scalar")]
    pub beta0: Scalar,
    #[serde(with = "serde_scalar")]
    pub beta: Scalar,
    pub depth: u32,
    pub trials: usize,
    /// Multiplies the claimed decay constant; below 1 is a deliberate break.
    #[serde(default = "one")]
    pub c_scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub federer_d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ahlfors: Option<AhlforsParams>,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimsConfig {
    pub ks: Vec<usize>,
    pub beta_min: f64,
    pub beta_max: f64,
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyConfig {
    /// Output file of an earlier `play` run.
    pub transcript: PathBuf,
}

/// Result of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub summary: Value,
    /// `(file name, contents)` pairs to write into the output directory.
    pub files: Vec<(String, String)>,
    pub passed: bool,
}

/// Certificate verdict or bookkeeping check attached to a game.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: Value,
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| cfg_err(format!("malformed config: {e}")))
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("configs serialize")
    }

    fn seed_slot(&mut self) -> Option<&mut Option<u64>> {
        match self {
            ExperimentConfig::Play(c) => Some(&mut c.seed),
            ExperimentConfig::Fractal(c) => Some(&mut c.seed),
            ExperimentConfig::Measure(c) => Some(&mut c.seed),
            _ => None,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        self.clone().seed_slot().and_then(|s| *s)
    }

    /// Fills in an omitted seed from a hash of the config and returns it.
    pub fn resolve_seed(&mut self) -> Option<u64> {
        let derived = derive_seed(self);
        let slot = self.seed_slot()?;
        Some(*slot.get_or_insert(derived))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ExperimentConfig::Play(c) => {
                c.game_config(0)?.validate()?;
                if let AliceSpec::Toral { r, y } | AliceSpec::BaToral { r, y } = &c.alice {
                    if r.len() != c.game.d || r.iter().any(|row| row.len() != c.game.d) || y.len() != c.game.d {
                        return Err(cfg_err("R must be d×d and y must have d entries"));
                    }
                }
                Ok(())
            }
            ExperimentConfig::Fractal(c) => match &c.task {
                FractalTask::Dimension { rungs, samples, .. } if *rungs < 3 || *samples == 0 => {
                    Err(cfg_err("dimension fit needs at least 3 rungs and 1 sample"))
                }
                FractalTask::Diffuse { trials: 0, .. } | FractalTask::Microset { samples: 0, .. } => Err(cfg_err("need at least one trial")),
                _ => Ok(()),
            },
            ExperimentConfig::Measure(c) => {
                if c.trials == 0 || !(c.c_scale > 0.0) {
                    return Err(cfg_err("measure run needs trials ≥ 1 and c_scale > 0"));
                }
                Ok(())
            }
            ExperimentConfig::Dims(c) => {
                if !(0.0 < c.beta_min && c.beta_min < c.beta_max && c.beta_max < 1.0) || c.steps < 2 || c.ks.is_empty() {
                    return Err(cfg_err("dims needs 0 < beta_min < beta_max < 1, steps ≥ 2 and some k"));
                }
                Ok(())
            }
            ExperimentConfig::Certify(_) => Ok(()),
        }
    }

    /// Validates, resolves the seed and runs.
    pub fn run(&mut self) -> Result<Outcome> {
        self.validate()?;
        let seed = self.resolve_seed();
        let resolved = self.to_json();
        let mut out = match &*self {
            ExperimentConfig::Play(c) => run_play(c, seed.unwrap_or(0))?,
            ExperimentConfig::Fractal(c) => run_fractal(c, seed.unwrap_or(0))?,
            ExperimentConfig::Measure(c) => run_measure(c, seed.unwrap_or(0))?,
            ExperimentConfig::Dims(c) => run_dims(c)?,
            ExperimentConfig::Certify(c) => run_certify(c)?,
        };
        out.summary["config"] = resolved;
        if let Some(s) = seed {
            out.summary["seed"] = json!(s);
        }
        // these files are self-describing so `certify` can reload them
        let own = match self {
            ExperimentConfig::Play(_) => Some("transcript.json"),
            ExperimentConfig::Certify(_) => Some("certificates.json"),
            _ => None,
        };
        if let Some(name) = own {
            out.files.push((name.into(), serde_json::to_string_pretty(&out.summary).expect("json")));
        }
        Ok(out)
    }
}

/// First eight bytes of the SHA-256 of the config with its seed cleared.
pub fn derive_seed(cfg: &ExperimentConfig) -> u64 {
    let mut c = cfg.clone();
    if let Some(slot) = c.seed_slot() {
        *slot = None;
    }
    let digest = Sha256::digest(serde_json::to_string(&c).expect("configs serialize").as_bytes());
    u64::from_be_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Applies `key=value` overrides to a JSON config. Dotted keys address
/// nested fields; values are parsed as JSON and fall back to strings, so
/// `beta=1/4` stores the rational string `"1/4"`.
pub fn apply_override(cfg: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment.split_once('=').ok_or_else(|| cfg_err(format!("override {assignment:?} is not key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut slot = cfg;
    let parts: Vec<&str> = key.split('.').collect();
    for p in &parts[..parts.len() - 1] {
        if !slot.get(*p).is_some_and(Value::is_object) {
            slot[*p] = json!({});
        }
        slot = &mut slot[*p];
    }
    if !slot.is_object() {
        return Err(cfg_err(format!("cannot set {key}: parent is not an object")));
    }
    slot[parts[parts.len() - 1]] = value;
    Ok(())
}

impl PlayConfig {
    fn game_config(&self, seed: u64) -> Result<GameConfig> {
        let arena = match &self.game.arena {
            None => Arena::FullSpace { d: self.game.d },
            Some(k) => {
                if k.dim() != self.game.d {
                    return Err(cfg_err(format!("arena has dimension {}, game has {}", k.dim(), self.game.d)));
                }
                Arena::OnSet { oracle: k.clone() }
            }
        };
        Ok(GameConfig::new(self.game.kind.clone(), arena, self.game.horizon, seed))
    }

    fn beta(&self) -> Scalar {
        self.game.kind.beta().clone()
    }

    fn alice(&self, seed: u64) -> Result<Box<dyn AliceStrategy>> {
        let d = self.game.d;
        let beta = self.beta();
        Ok(match &self.alice {
            AliceSpec::Ba => Box::new(ba_alice(d, beta)),
            AliceSpec::Toral { r, y } => Box::new(toral_alice(r.clone(), Point(y.clone()), beta)?),
            AliceSpec::BaToral { r, y } => {
                // each of the two components plays every other turn, at β²
                let cb = pow(&beta, 2);
                let parts: Vec<Box<dyn AliceStrategy>> =
                    vec![Box::new(ba_alice(d, cb.clone())), Box::new(toral_alice(r.clone(), Point(y.clone()), cb)?)];
                Box::new(intersect_alices(parts, beta)?)
            }
            AliceSpec::PullbackAffine { a, b, u, inner_beta, grid } => Box::new(pullback_alice(
                Box::new(ba_alice(d, inner_beta.clone())),
                Box::new(AffineMap::new(a.clone(), b.clone())?),
                u.clone(),
                beta,
                *grid,
            )?),
            AliceSpec::PullbackSine { u, inner_beta, grid } => Box::new(pullback_alice(
                Box::new(ba_alice(d, inner_beta.clone())),
                Box::new(SmoothMap::sine_perturbation()),
                u.clone(),
                beta,
                *grid,
            )?),
            AliceSpec::DigitS => Box::new(digit_alice_s(beta)),
            AliceSpec::Random => Box::new(random_alice(seed.wrapping_add(1))),
            AliceSpec::CenterRemoving => Box::new(center_removing_alice()),
        })
    }

    fn bob(&self, seed: u64) -> Result<Box<dyn BobStrategy>> {
        Ok(match &self.bob {
            BobSpec::Random { opening: None } => Box::new(random_bob(seed)),
            BobSpec::Random { opening: Some(b) } => Box::new(random_bob(seed).with_opening(b.clone())),
            BobSpec::ShrinkInPlace { opening } => Box::new(shrink_in_place_bob(opening.clone())),
            BobSpec::RationalHugger { qmax, opening } => Box::new(rational_hugger_bob(*qmax, opening.clone())),
            BobSpec::Digit { n } => Box::new(digit_bob(*n)),
            BobSpec::OnlineHyperplane { normal, offset } => {
                Box::new(online_hyperplane_bob(AffineSubspace::hyperplane(normal.clone(), offset.clone())?))
            }
        })
    }

    /// Certificates and bookkeeping checks for a finished game.
    pub fn checks(&self, t: &Transcript) -> Result<Vec<Check>> {
        let mut out = Vec::new();
        if let Status::IllegalMove { who, index } = &t.status {
            out.push(Check { name: "legality".into(), passed: false, detail: json!({"who": format!("{who:?}"), "index": index}) });
            return Ok(out);
        }
        let fb = final_ball(t)?;
        let cs = &self.checks;
        let h = &t.hints;
        match &self.alice {
            AliceSpec::Ba => out.push(ba_check(&fb, h, cs.ba_budget)?),
            AliceSpec::Toral { r, y } => out.push(orbit_check(&fb, r, y, h, cs.orbit_j)?),
            AliceSpec::BaToral { r, y } => {
                out.push(ba_check(&fb, &h["components"][0], cs.ba_budget)?);
                out.push(orbit_check(&fb, r, y, &h["components"][1], cs.orbit_j)?);
            }
            AliceSpec::PullbackAffine { a, b, u, inner_beta, grid } => {
                let map = AffineMap::new(a.clone(), b.clone())?;
                out.push(bookkeeping_check(h));
                out.push(image_check(self, Box::new(map), u, inner_beta, *grid, &fb, h, None)?);
            }
            AliceSpec::PullbackSine { u, inner_beta, grid } => {
                out.push(bookkeeping_check(h));
                out.push(image_check(self, Box::new(SmoothMap::sine_perturbation()), u, inner_beta, *grid, &fb, h, Some(cs))?);
            }
            AliceSpec::DigitS => {
                let idx: Vec<u64> = h["indices"].as_array().map(|a| a.iter().filter_map(Value::as_u64).collect()).unwrap_or_default();
                out.push(cert_check("digit_s", digit_certificate_s(&fb, &idx)?));
            }
            AliceSpec::Random | AliceSpec::CenterRemoving => {}
        }
        if let BobSpec::Digit { n } = &self.bob {
            out.push(cert_check("digit_bob", digit_certificate_bob(&fb, *n, cs.digit_depth)?));
        }
        Ok(out)
    }
}

fn cert_check(name: &str, c: Certificate) -> Check {
    Check { name: name.into(), passed: c.passed(), detail: serde_json::to_value(&c).expect("certificates serialize") }
}

fn missing(name: &str, what: &str) -> Check {
    Check { name: name.into(), passed: false, detail: json!({"note": format!("strategy exported no {what}")}) }
}

fn hint_scalar(h: &Value, key: &str) -> Option<Scalar> {
    h[key].as_str().and_then(|s| parse_scalar(s).ok())
}

fn ba_check(fb: &Ball, h: &Value, budget: u64) -> Result<Check> {
    let (Some(c), Some(qmax)) = (hint_scalar(h, "c"), h["Q"].as_str().and_then(|s| s.parse::<u64>().ok())) else {
        return Ok(missing("ba", "(c, Q)"));
    };
    Ok(cert_check("ba", ba_certificate(fb, &c, qmax, budget)?))
}

fn orbit_check(fb: &Ball, r: &[Vec<i64>], y: &[Scalar], h: &Value, j: u32) -> Result<Check> {
    let Some(t) = hint_scalar(h, "t") else {
        return Ok(missing("orbit", "t"));
    };
    Ok(cert_check("orbit", orbit_certificate(fb, &big_matrix(r), &Point(y.to_vec()), &t, j)?))
}

fn bookkeeping_check(h: &Value) -> Check {
    let ok = h["ratio_violations"] == 0
        && h["eps_violations"] == 0
        && h["game2_violations"].as_array().is_some_and(|v| v.is_empty());
    Check {
        name: "pullback_bookkeeping".into(),
        passed: ok,
        detail: json!({
            "ratio_violations": h["ratio_violations"],
            "eps_violations": h["eps_violations"],
            "game2_violations": h["game2_violations"],
        }),
    }
}

#[allow(clippy::too_many_arguments)]
fn image_check(
    cfg: &PlayConfig,
    map: Box<dyn C1Map>,
    u: &Ball,
    inner_beta: &Scalar,
    grid: i64,
    fb: &Ball,
    h: &Value,
    inexact: Option<&CheckSpec>,
) -> Result<Check> {
    let alice = pullback_alice(Box::new(ba_alice(cfg.game.d, inner_beta.clone())), map, u.clone(), cfg.beta(), grid)?;
    let slack = inexact.map_or(0.0, |c| c.image_slack);
    let (img, _) = alice.image_ball(fb, slack)?;
    let inner = &h["inner"];
    let Some(c) = hint_scalar(inner, "c") else {
        return Ok(missing("ba_image", "inner c"));
    };
    let qmax = match inexact {
        Some(cs) => cs.image_q,
        None => match inner["Q"].as_str().and_then(|s| s.parse().ok()) {
            Some(q) => q,
            None => return Ok(missing("ba_image", "inner Q")),
        },
    };
    Ok(cert_check("ba_image", ba_certificate(&img, &c, qmax, cfg.checks.ba_budget)?))
}

fn run_play(c: &PlayConfig, seed: u64) -> Result<Outcome> {
    let cfg = c.game_config(seed)?;
    let mut alice = c.alice(seed)?;
    let mut bob = c.bob(seed)?;
    let t = play(cfg, alice.as_mut(), bob.as_mut())?;
    let checks = c.checks(&t)?;
    let passed = checks.iter().all(|k| k.passed);
    let summary = json!({
        "status": serde_json::to_value(&t.status).expect("status serializes"),
        "transcript": t.to_json(),
        "checks": checks,
        "passed": passed,
    });
    Ok(Outcome { files: Vec::new(), summary, passed })
}

fn run_certify(c: &CertifyConfig) -> Result<Outcome> {
    let text = std::fs::read_to_string(&c.transcript)
        .map_err(|e| cfg_err(format!("cannot read {}: {e}", c.transcript.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Error::Input(format!("malformed play output: {e}")))?;
    let ExperimentConfig::Play(pc) = ExperimentConfig::from_json(&v["config"].to_string())? else {
        return Err(cfg_err("the file was not written by `play`"));
    };
    let t = Transcript::from_json(&v["transcript"])?;
    let checks = pc.checks(&t)?;
    let stored: Vec<Check> = serde_json::from_value(v["checks"].clone()).unwrap_or_default();
    let reproduced = stored.iter().map(|k| (&k.name, k.passed)).eq(checks.iter().map(|k| (&k.name, k.passed)));
    let passed = checks.iter().all(|k| k.passed) && reproduced;
    let summary = json!({"checks": checks, "reproduced": reproduced, "passed": passed});
    Ok(Outcome { files: Vec::new(), summary, passed })
}

fn run_fractal(c: &FractalConfig, seed: u64) -> Result<Outcome> {
    let k = &c.oracle;
    match &c.task {
        FractalTask::Dimension { beta0, rungs, samples } => {
            let ladder = packing_ladder(beta0, *rungs);
            let fit = dimension_from_packing(k, &ladder, *samples, seed)?;
            let mut csv = String::from("sample,x,rho");
            for b in &fit.ladder {
                let _ = write!(csv, ",N[{b}]");
            }
            csv.push('\n');
            for (i, s) in fit.samples.iter().enumerate() {
                let x: Vec<String> = s.x.to_f64().iter().map(|v| format!("{v:.17e}")).collect();
                let counts: Vec<String> = s.counts.iter().map(u64::to_string).collect();
                let _ = writeln!(csv, "{i},{},{},{}", x.join(" "), fmt_scalar(&s.rho), counts.join(","));
            }
            let summary = json!({"delta": fit.delta, "delta_mean": fit.delta_mean, "m": fit.m, "ladder": fit.ladder, "passed": true});
            Ok(Outcome { files: vec![("packing.csv".into(), csv)], summary, passed: true })
        }
        FractalTask::Diffuse { k: kk, beta, rho_k, resolution, trials, strong } => {
            let params = DiffuseParams::new(*kk, beta.clone(), rho_k.clone())?;
            let rep = if *strong {
                diffuseness_strong_form(k, &params, *trials, resolution, seed)?
            } else {
                diffuseness_check(k, &params, *trials, resolution, seed)?
            };
            let mut csv = String::from("trial,pass\n");
            for (i, o) in rep.outcomes.iter().enumerate() {
                let _ = writeln!(csv, "{i},{o}");
            }
            let passed = rep.passed();
            let mut summary = serde_json::to_value(&rep).expect("report serializes");
            summary["passed"] = json!(passed);
            if let Some(o) = summary.as_object_mut() {
                o.remove("outcomes");
            }
            Ok(Outcome { files: vec![("diffuseness.csv".into(), csv)], summary, passed })
        }
        FractalTask::Microset { ball, dim, samples } => {
            let rep = microset_width(k, ball, *dim, *samples, seed)?;
            let csv = format!("k,width,resolution_slack,points,method\n{},{},{},{},{}\n", rep.k, rep.width, rep.resolution_slack, rep.points, rep.method);
            let mut summary = serde_json::to_value(&rep).expect("report serializes");
            summary["passed"] = json!(true);
            Ok(Outcome { files: vec![("microset.csv".into(), csv)], summary, passed: true })
        }
    }
}

fn run_measure(c: &MeasureConfig, seed: u64) -> Result<Outcome> {
    let tree = build_decaying_measure(&c.oracle, &c.u, &c.beta0, &c.beta, c.depth)?;
    let structure = tree.check_structure()?;
    let mut files = vec![("tree.json".into(), serde_json::to_string(&tree).expect("tree serializes"))];
    let mut summary = json!({
        "gamma": tree.gamma,
        "C": tree.c,
        "rho0": fmt_scalar(&tree.rho0),
        "nodes": structure.nodes,
        "leaves": structure.leaves,
        "total_leaf_mass": fmt_scalar(&structure.total_leaf_mass),
    });
    let mut passed = true;
    if c.depth >= 1 {
        let decay = test_absolute_decay(&tree, tree.c * c.c_scale, tree.gamma, c.trials, seed)?;
        passed &= decay.passed();
        summary["decay"] = json!({
            "c_tested": tree.c * c.c_scale,
            "violations": decay.violations,
            "counting_violations": decay.counting_violations,
            "scale_floor": decay.scale_floor,
            "worst": decay.witnesses().next(),
        });
        files.push(("decay.csv".into(), decay.to_csv()));
        if let Ok(delta) = fit_ahlfors_delta(&tree, c.trials.min(4000), seed ^ 0xA) {
            summary["ahlfors_delta_fit"] = json!(delta);
        }
    }
    if let Some(dd) = c.federer_d {
        let fed = test_federer(&tree, dd, c.trials, seed ^ 0xF)?;
        passed &= fed.passed();
        summary["federer"] = json!({"D": dd, "violations": fed.violations, "worst": fed.witnesses().next()});
        files.push(("federer.csv".into(), fed.to_csv()));
    }
    if let Some(p) = &c.ahlfors {
        let ah = test_ahlfors(&tree, p, c.trials, seed ^ 0xD)?;
        passed &= ah.passed();
        let floor = ah.witnesses().filter(|r| r.below_floor).count();
        summary["ahlfors"] = json!({"params": p, "violations": ah.violations, "below_floor": floor, "scale_floor": ah.scale_floor});
        files.push(("ahlfors.csv".into(), ah.to_csv()));
    }
    summary["passed"] = json!(passed);
    Ok(Outcome { files, summary, passed })
}

fn run_dims(c: &DimsConfig) -> Result<Outcome> {
    let betas: Vec<f64> = (0..c.steps)
        .map(|i| c.beta_min + (c.beta_max - c.beta_min) * i as f64 / (c.steps - 1) as f64)
        .collect();
    let mut csv = String::from("k,beta,bound\n");
    let mut curves = Vec::new();
    let mut monotone = true;
    for &k in &c.ks {
        let mut pts = Vec::new();
        for &b in &betas {
            let v = dim_lower_bound_diffuse(k, b)?;
            let _ = writeln!(csv, "{k},{b},{v}");
            pts.push((b, v));
        }
        monotone &= pts.windows(2).all(|w| w[1].1 >= w[0].1);
        curves.push((k, pts));
    }
    let svg = svg_plot(&curves);
    let summary = json!({"monotone": monotone, "passed": monotone});
    Ok(Outcome { files: vec![("bounds.csv".into(), csv), ("bounds.svg".into(), svg)], summary, passed: monotone })
}

/// A bare line chart of `bound(β)` per `k`.
fn svg_plot(curves: &[(usize, Vec<(f64, f64)>)]) -> String {
    let (w, h, m) = (640.0, 400.0, 50.0);
    let all = curves.iter().flat_map(|c| c.1.iter());
    let (mut x0, mut x1, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    let y1 = if y1 > 0.0 { y1 } else { 1.0 };
    let sx = |x: f64| m + (x - x0) / (x1 - x0).max(f64::MIN_POSITIVE) * (w - 2.0 * m);
    let sy = |y: f64| h - m - y / y1 * (h - 2.0 * m);
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
    let mut s = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"12\">\n");
    let _ = writeln!(s, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
    let _ = writeln!(s, "<line x1=\"{m}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>", h - m, w - m, h - m);
    let _ = writeln!(s, "<line x1=\"{m}\" y1=\"{m}\" x2=\"{m}\" y2=\"{}\" stroke=\"black\"/>", h - m);
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\">β</text>", w / 2.0, h - 15.0);
    let _ = writeln!(s, "<text x=\"{m}\" y=\"{}\">{x0:.3}</text><text x=\"{}\" y=\"{}\">{x1:.3}</text>", h - m + 15.0, w - m - 20.0, h - m + 15.0);
    let _ = writeln!(s, "<text x=\"5\" y=\"{}\">{y1:.3}</text><text x=\"5\" y=\"{}\">0</text>", m, h - m);
    for (i, (k, pts)) in curves.iter().enumerate() {
        let col = colors[i % colors.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(s, "<polyline fill=\"none\" stroke=\"{col}\" stroke-width=\"2\" points=\"{}\"/>", path.join(" "));
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" fill=\"{col}\">k = {k}</text>", w - m - 60.0, m + 15.0 * i as f64);
    }
    s.push_str("</svg>\n");
    s
}

/// Exit code for a finished run: 0 pass, 1 failed check.
pub fn exit_code(passed: bool) -> i32 {
    if passed {
        0
    } else {
        1
    }
}

/// Exit code for an error: 2 for bad configs or inputs, 3 for an exhausted
/// budget, 1 otherwise.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Input(_) | Error::DimensionMismatch { .. } => 2,
        Error::Budget { .. } => 3,
        _ => 1,
    }
}

/// Integer matrix from rows of `"p/q"`-free integer strings, for flags.
pub fn parse_int_matrix(s: &str) -> Result<Vec<Vec<i64>>> {
    s.split(';')
        .map(|row| {
            row.split(',')
                .map(|x| x.trim().parse::<i64>().map_err(|_| cfg_err(format!("bad integer {x:?} in matrix"))))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::q;

    fn ba_play() -> ExperimentConfig {
        ExperimentConfig::Play(PlayConfig {
            game: GameSpec { d: 1, kind: GameKind::Absolute { k: 0, beta: q(1, 4) }, horizon: 8, arena: None },
            alice: AliceSpec::Ba,
            bob: BobSpec::Random { opening: None },
            seed: Some(3),
            checks: CheckSpec::default(),
        })
    }

    #[test]
    fn json_round_trip() {
        let c = ba_play();
        let back = ExperimentConfig::from_json(&c.to_json().to_string()).unwrap();
        assert_eq!(back, c);
        assert!(c.to_json().to_string().contains("\"1/4\""));
    }

    #[test]
    fn omitted_seed_is_derived_and_stable() {
        let mut a = ba_play();
        if let ExperimentConfig::Play(p) = &mut a {
            p.seed = None;
        }
        let mut b = a.clone();
        let sa = a.resolve_seed().unwrap();
        assert_eq!(sa, b.resolve_seed().unwrap());
        assert_eq!(sa, derive_seed(&ba_play()));
        assert_eq!(a.seed(), Some(sa));
    }

    #[test]
    fn overrides() {
        let mut v = ba_play().to_json();
        apply_override(&mut v, "game.kind.beta=1/5").unwrap();
        apply_override(&mut v, "game.horizon=6").unwrap();
        let c = ExperimentConfig::from_json(&v.to_string()).unwrap();
        let ExperimentConfig::Play(p) = c else { panic!() };
        assert_eq!(p.game.kind.beta(), &q(1, 5));
        assert_eq!(p.game.horizon, 6);
        assert!(apply_override(&mut v, "noequals").is_err());
    }

    #[test]
    fn ba_play_passes_and_embeds_config() {
        let mut c = ba_play();
        let out = c.run().unwrap();
        assert!(out.passed, "{}", out.summary);
        assert_eq!(out.summary["config"]["command"], "play");
        assert_eq!(out.summary["seed"], 3);
    }

    #[test]
    fn invalid_beta_is_a_config_error() {
        let mut v = ba_play().to_json();
        apply_override(&mut v, "game.kind.beta=1/2").unwrap();
        let mut c = ExperimentConfig::from_json(&v.to_string()).unwrap();
        let e = c.run().unwrap_err();
        assert_eq!(error_exit_code(&e), 2);
    }

    #[test]
    fn dims_are_monotone() {
        let mut c = ExperimentConfig::Dims(DimsConfig { ks: vec![0, 1], beta_min: 0.01, beta_max: 0.3, steps: 20 });
        let out = c.run().unwrap();
        assert!(out.passed);
        assert!(out.files.iter().any(|(n, s)| n == "bounds.svg" && s.starts_with("<svg")));
    }

    #[test]
    fn broken_decay_constant_fails() {
        let u = Ball::new(Point(vec![q(1, 4)]), q(10, 9)).unwrap();
        let mk = |scale: f64| {
            ExperimentConfig::Measure(MeasureConfig {
                oracle: KOracle::cantor(),
                u: u.clone(),
                beta0: q(1, 3),
                beta: q(1, 9),
                depth: 8,
                trials: 5000,
                c_scale: scale,
                federer_d: None,
                ahlfors: None,
                seed: Some(3),
            })
        };
        assert!(mk(1.0).run().unwrap().passed);
        assert!(!mk(0.5).run().unwrap().passed);
        let mut flat = mk(1.0);
        if let ExperimentConfig::Measure(m) = &mut flat {
            m.depth = 0;
        }
        let out = flat.run().unwrap();
        assert_eq!(out.summary["nodes"], 1);
    }

    #[test]
    fn matrix_flag() {
        assert_eq!(parse_int_matrix("2,0;0,3").unwrap(), vec![vec![2, 0], vec![0, 3]]);
        assert!(parse_int_matrix("2,x").is_err());
    }
}
