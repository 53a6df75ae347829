//! `schmidt` command-line front end.
//!
//! Every subcommand starts from a built-in default config, replaces it with
//! `--config FILE` when given, then applies typed flags and finally generic
//! `--set key=value` overrides. Exit codes: 0 pass, 1 failed check,
//! 2 config error, 3 budget exceeded.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use schmidt::config::{apply_override, error_exit_code, exit_code, parse_int_matrix, ExperimentConfig, Outcome};
use schmidt::geometry::parse_scalar;
use schmidt::{Error, Result};

#[derive(Parser)]
#[command(name = "schmidt", version, about = "Schmidt and absolute game experiments with exact certificates")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// JSON config file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Generic override `key.path=value`, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Directory for output files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the resolved config and exit.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Play one game and check the certificates the strategies export.
    Play {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        d: Option<usize>,
        /// Flat dimension of the absolute game.
        #[arg(long)]
        k: Option<usize>,
        /// Rational, e.g. 1/4.
        #[arg(long)]
        beta: Option<String>,
        /// Rational; switches to the classic (α,β) game.
        #[arg(long)]
        alpha: Option<String>,
        #[arg(long)]
        horizon: Option<usize>,
        /// ba, toral, ba_toral, digit_s, random, center_removing.
        #[arg(long)]
        alice: Option<String>,
        /// random, digit (with --n).
        #[arg(long)]
        bob: Option<String>,
        /// Integer matrix for toral strategies, rows separated by `;`.
        #[arg(long)]
        r: Option<String>,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Packing dimension, diffuseness or microset width of a set.
    Fractal {
        #[command(flatten)]
        common: Common,
        /// cantor, dust, carpet, or `line`/`plane` for all of ℝ/ℝ².
        #[arg(long)]
        oracle: Option<String>,
        /// JSON oracle file (e.g. a similarity IFS).
        #[arg(long)]
        oracle_file: Option<PathBuf>,
        /// dimension, diffuse, microset.
        #[arg(long)]
        task: Option<String>,
        #[arg(long)]
        beta0: Option<String>,
        #[arg(long)]
        rungs: Option<u32>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        beta: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Build a decaying measure and sample its decay, doubling and regularity.
    Measure {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        depth: Option<u32>,
        #[arg(long)]
        beta0: Option<String>,
        #[arg(long)]
        beta: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        /// Scale the decay constant; values below 1 should fail.
        #[arg(long)]
        c_scale: Option<f64>,
        /// Also test the doubling bound with this constant.
        #[arg(long)]
        federer: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Tabulate and plot the dimension lower bound against β.
    Dims {
        #[command(flatten)]
        common: Common,
        /// Comma-separated flat dimensions.
        #[arg(long)]
        ks: Option<String>,
        #[arg(long)]
        beta_min: Option<f64>,
        #[arg(long)]
        beta_max: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Re-run the certificates stored in a `play` output file.
    Certify {
        #[command(flatten)]
        common: Common,
        /// transcript.json written by `play`.
        transcript: Option<PathBuf>,
    },
}

fn default_config(cmd: &Cmd) -> Value {
    match cmd {
        Cmd::Play { .. } => json!({
            "command": "play",
            "game": {"d": 1, "kind": {"type": "absolute", "k": 0, "beta": "1/4"}, "horizon": 12},
            "alice": {"name": "ba"},
            "bob": {"name": "random"},
        }),
        Cmd::Fractal { .. } => json!({
            "command": "fractal",
            "oracle": {"type": "cantor"},
            "task": {"task": "dimension", "beta0": "1/3", "rungs": 5, "samples": 200},
        }),
        Cmd::Measure { .. } => json!({
            "command": "measure",
            "oracle": {"type": "cantor"},
            "u": {"center": ["1/4"], "radius": "10/9"},
            "beta0": "1/3",
            "beta": "1/9",
            "depth": 8,
            "trials": 10000,
        }),
        Cmd::Dims { .. } => json!({"command": "dims", "ks": [0, 1], "beta_min": 0.01, "beta_max": 0.3, "steps": 30}),
        Cmd::Certify { .. } => json!({"command": "certify", "transcript": "transcript.json"}),
    }
}

fn rational(s: &str) -> Result<Value> {
    parse_scalar(s).map_err(|e| Error::Config(e.to_string()))?;
    Ok(Value::String(s.to_string()))
}

fn set(cfg: &mut Value, path: &str, v: Value) {
    let mut slot = cfg;
    for p in path.split('.') {
        if !slot.is_object() {
            *slot = json!({});
        }
        slot = &mut slot[p];
    }
    *slot = v;
}

fn oracle_value(name: &str) -> Result<Value> {
    Ok(match name {
        "cantor" => json!({"type": "cantor"}),
        "line" => json!({"type": "full_space", "d": 1}),
        "plane" => json!({"type": "full_space", "d": 2}),
        "dust" => serde_json::to_value(schmidt::fractals::KOracle::cantor_dust()).expect("oracle serializes"),
        "carpet" => serde_json::to_value(schmidt::fractals::KOracle::sierpinski_carpet()).expect("oracle serializes"),
        other => return Err(Error::Config(format!("unknown oracle {other:?}"))),
    })
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn task_defaults(task: &str) -> Result<Value> {
    Ok(match task {
        "dimension" => json!({"task": "dimension", "beta0": "1/3", "rungs": 5, "samples": 200}),
        "diffuse" => json!({"task": "diffuse", "k": 0, "beta": "1/10", "rho_k": "1", "resolution": "1/531441", "trials": 300}),
        "microset" => json!({"task": "microset", "ball": {"center": ["0"], "radius": "1"}, "dim": 0, "samples": 4}),
        other => return Err(Error::Config(format!("unknown task {other:?}"))),
    })
}

fn resolve(cli: &Cli) -> Result<(ExperimentConfig, &Common)> {
    let mut cfg = default_config(&cli.cmd);
    let common = match &cli.cmd {
        Cmd::Play { common, .. }
        | Cmd::Fractal { common, .. }
        | Cmd::Measure { common, .. }
        | Cmd::Dims { common, .. }
        | Cmd::Certify { common, .. } => common,
    };
    if let Some(p) = &common.config {
        cfg = read_json(p)?;
        if cfg.get("command").is_none() {
            cfg["command"] = default_config(&cli.cmd)["command"].clone();
        }
    }
    match &cli.cmd {
        Cmd::Play { d, k, beta, alpha, horizon, alice, bob, r, n, seed, .. } => {
            if let Some(d) = d {
                set(&mut cfg, "game.d", json!(d));
                if k.is_none() && alpha.is_none() && cfg["game"]["kind"]["type"] == "absolute" {
                    set(&mut cfg, "game.kind.k", json!(d - 1));
                }
            }
            if let Some(a) = alpha {
                let b = cfg["game"]["kind"]["beta"].clone();
                set(&mut cfg, "game.kind", json!({"type": "classic", "alpha": rational(a)?, "beta": b}));
            }
            if let Some(k) = k {
                set(&mut cfg, "game.kind.k", json!(k));
            }
            if let Some(b) = beta {
                set(&mut cfg, "game.kind.beta", rational(b)?);
            }
            if let Some(h) = horizon {
                set(&mut cfg, "game.horizon", json!(h));
            }
            if let Some(a) = alice {
                let d = cfg["game"]["d"].as_u64().unwrap_or(1) as usize;
                let mut v = json!({"name": a});
                if a == "toral" || a == "ba_toral" {
                    let m = parse_int_matrix(r.as_deref().unwrap_or("2,0;0,3"))?;
                    v["r"] = json!(m);
                    v["y"] = json!(vec!["0"; d]);
                }
                set(&mut cfg, "alice", v);
            }
            if let Some(b) = bob {
                let mut v = json!({"name": b});
                if b == "digit" {
                    v["n"] = json!(n.unwrap_or(1));
                }
                set(&mut cfg, "bob", v);
            }
            if let Some(s) = seed {
                set(&mut cfg, "seed", json!(s));
            }
        }
        Cmd::Fractal { oracle, oracle_file, task, beta0, rungs, samples, beta, trials, seed, .. } => {
            if let Some(o) = oracle {
                set(&mut cfg, "oracle", oracle_value(o)?);
            }
            if let Some(p) = oracle_file {
                set(&mut cfg, "oracle", read_json(p)?);
            }
            if let Some(t) = task {
                set(&mut cfg, "task", task_defaults(t)?);
            }
            if let Some(b) = beta0 {
                set(&mut cfg, "task.beta0", rational(b)?);
            }
            if let Some(r) = rungs {
                set(&mut cfg, "task.rungs", json!(r));
            }
            if let Some(s) = samples {
                set(&mut cfg, "task.samples", json!(s));
            }
            if let Some(b) = beta {
                set(&mut cfg, "task.beta", rational(b)?);
            }
            if let Some(t) = trials {
                set(&mut cfg, "task.trials", json!(t));
            }
            if let Some(s) = seed {
                set(&mut cfg, "seed", json!(s));
            }
        }
        Cmd::Measure { depth, beta0, beta, trials, c_scale, federer, seed, .. } => {
            if let Some(d) = depth {
                set(&mut cfg, "depth", json!(d));
            }
            if let Some(b) = beta0 {
                set(&mut cfg, "beta0", rational(b)?);
            }
            if let Some(b) = beta {
                set(&mut cfg, "beta", rational(b)?);
            }
            if let Some(t) = trials {
                set(&mut cfg, "trials", json!(t));
            }
            if let Some(c) = c_scale {
                set(&mut cfg, "c_scale", json!(c));
            }
            if let Some(f) = federer {
                set(&mut cfg, "federer_d", json!(f));
            }
            if let Some(s) = seed {
                set(&mut cfg, "seed", json!(s));
            }
        }
        Cmd::Dims { ks, beta_min, beta_max, steps, .. } => {
            if let Some(ks) = ks {
                let v: std::result::Result<Vec<usize>, _> = ks.split(',').map(|s| s.trim().parse::<usize>()).collect();
                set(&mut cfg, "ks", json!(v.map_err(|_| Error::Config(format!("bad --ks {ks:?}")))?));
            }
            if let Some(b) = beta_min {
                set(&mut cfg, "beta_min", json!(b));
            }
            if let Some(b) = beta_max {
                set(&mut cfg, "beta_max", json!(b));
            }
            if let Some(s) = steps {
                set(&mut cfg, "steps", json!(s));
            }
        }
        Cmd::Certify { transcript, .. } => {
            if let Some(p) = transcript {
                set(&mut cfg, "transcript", json!(p));
            }
        }
    }
    for s in &common.sets {
        apply_override(&mut cfg, s)?;
    }
    Ok((ExperimentConfig::from_json(&cfg.to_string())?, common))
}

fn write_outputs(dir: &Path, out: &Outcome) -> Result<()> {
    let io = |e: std::io::Error| Error::Config(format!("cannot write to {}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    for (name, contents) in &out.files {
        std::fs::write(dir.join(name), contents).map_err(io)?;
    }
    let summary = serde_json::to_string_pretty(&out.summary).expect("json");
    std::fs::write(dir.join("summary.json"), summary).map_err(io)
}

fn run(cli: &Cli) -> Result<i32> {
    let (mut cfg, common) = resolve(cli)?;
    if common.dry_run {
        cfg.validate()?;
        if let Some(s) = cfg.resolve_seed() {
            eprintln!("seed: {s}");
        }
        println!("{}", serde_json::to_string_pretty(&cfg.to_json()).expect("json"));
        return Ok(0);
    }
    let out = cfg.run()?;
    if let Some(s) = out.summary.get("seed") {
        eprintln!("seed: {s}");
    }
    if let Some(dir) = &common.out {
        write_outputs(dir, &out)?;
    }
    let mut brief = out.summary.clone();
    if let Some(o) = brief.as_object_mut() {
        o.remove("transcript");
    }
    println!("{}", serde_json::to_string_pretty(&brief).expect("json"));
    Ok(exit_code(out.passed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_exit_code(&e) as u8)
        }
    }
}
