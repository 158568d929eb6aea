//! `capdr`: solve, check, minimize, replay, report, train and measure.
//!
//! Exit codes: 20 SAFE, 10 UNSAFE, 1 FAIL or rejection, 2 I/O or usage
//! problems. `check-cert`, `replay` and the reporting commands exit 0 on
//! success.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::anyhow;
use capdr::certs::{
    lit_count, minimize_invariant, parse_safe_certificate, write_safe_certificate, write_witness,
};
use capdr::metrics::{csv_row, seed_instability, CostVector, CSV_HEADER};
use capdr::policy::{label_pairs, train, FailPenalty, DEFAULT_CAND_BUDGET, DEFAULT_FAIRNESS_BOUND};
use capdr::{
    load, replay, solve, Certificate, Checker, EngineConfig, ObjectiveWeights, Outcome, PolicyModel, Ranker,
    RankingEvent, ReplayLog,
};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "capdr",
    version,
    about = "Certificate-checked PDR model checking for AIGER circuits"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Debug)]
struct EngineOpts {
    /// Seed for solver randomness.
    #[arg(long, env = "CAPDR_SEED", default_value_t = 0)]
    seed: u64,
    /// Wall-clock budget per run.
    #[arg(long, env = "CAPDR_BUDGET_SECS")]
    budget_secs: Option<f64>,
    /// Trained ranking model; the deterministic baseline order otherwise.
    #[arg(long, env = "CAPDR_POLICY", conflicts_with = "random_ranking")]
    policy: Option<PathBuf>,
    /// Rank choice points pseudo-randomly from the seed (control runs).
    #[arg(long, env = "CAPDR_RANDOM_RANKING")]
    random_ranking: bool,
    #[arg(long, env = "CAPDR_FAIRNESS_BOUND", default_value_t = DEFAULT_FAIRNESS_BOUND)]
    fairness_bound: u32,
    #[arg(long, env = "CAPDR_CAND_BUDGET", default_value_t = DEFAULT_CAND_BUDGET)]
    cand_budget: usize,
    /// Skip invariant minimization before certification.
    #[arg(long, env = "CAPDR_NO_MINIMIZE")]
    no_minimize: bool,
    #[command(flatten)]
    weights: Weights,
}

#[derive(Args, Clone, Copy, Debug)]
struct Weights {
    #[arg(long, env = "CAPDR_ALPHA", default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, env = "CAPDR_BETA", default_value_t = 1e-3)]
    beta: f64,
    #[arg(long, env = "CAPDR_GAMMA", default_value_t = 1.0)]
    gamma: f64,
}

impl Weights {
    fn objective(self) -> ObjectiveWeights {
        ObjectiveWeights {
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Model check a circuit; writes certificate, replay log, events and a metrics row.
    Solve {
        input: PathBuf,
        #[command(flatten)]
        engine: EngineOpts,
        #[arg(long, env = "CAPDR_OUT_DIR", default_value = ".")]
        out_dir: PathBuf,
    },
    /// Validate a certificate (`.inv` invariant or AIGER witness) independently.
    CheckCert { input: PathBuf, cert: PathBuf },
    /// Shrink an accepted invariant; writes `<stem>.min.inv`.
    Minimize {
        input: PathBuf,
        cert: PathBuf,
        #[arg(long, env = "CAPDR_OUT_DIR", default_value = ".")]
        out_dir: PathBuf,
    },
    /// Re-execute a recorded run and report divergence.
    Replay {
        input: PathBuf,
        log: PathBuf,
        /// Recompute solver artifacts and compare digests instead of reusing them.
        #[arg(long, env = "CAPDR_STRICT_REPLAY")]
        strict_replay: bool,
    },
    /// Cost report from replay logs; writes `metrics.csv`.
    Metrics {
        #[arg(required = true)]
        logs: Vec<PathBuf>,
        #[command(flatten)]
        weights: Weights,
        #[arg(long, env = "CAPDR_OUT_DIR", default_value = ".")]
        out_dir: PathBuf,
    },
    /// Fit a ranking model to logged events.
    Train {
        #[arg(required = true)]
        events: Vec<PathBuf>,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        lambda: f64,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[arg(long, env = "CAPDR_SEED", default_value_t = 0)]
        seed: u64,
        /// Penalize failed runs with `factor · budget` instead of `1 + max cost`.
        #[arg(long, requires = "budget_secs")]
        par_factor: Option<f64>,
        #[arg(long, env = "CAPDR_BUDGET_SECS")]
        budget_secs: Option<f64>,
    },
    /// Median pairwise invariant distance across seeds; writes `stability.csv`.
    Stability {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, env = "CAPDR_SEEDS", default_value_t = 10)]
        seeds: u64,
        #[command(flatten)]
        engine: EngineOpts,
        #[arg(long, env = "CAPDR_OUT_DIR", default_value = ".")]
        out_dir: PathBuf,
    },
}

enum Failure {
    Io(anyhow::Error),
    Other(anyhow::Error),
}

type Res<T> = Result<T, Failure>;

fn io<T, E: Into<anyhow::Error>>(r: Result<T, E>, what: impl FnOnce() -> String) -> Res<T> {
    r.map_err(|e| Failure::Io(e.into().context(what())))
}

fn other<T, E: Into<anyhow::Error>>(r: Result<T, E>, what: impl FnOnce() -> String) -> Res<T> {
    r.map_err(|e| Failure::Other(e.into().context(what())))
}

fn read(path: &Path) -> Res<String> {
    io(fs::read_to_string(path), || format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Res<()> {
    io(fs::write(path, text), || format!("writing {}", path.display()))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into())
}

fn checker_for(input: &Path) -> Res<(String, Checker)> {
    let text = read(input)?;
    let ck = other(Checker::from_aiger_text(&text), || {
        format!("parsing {}", input.display())
    })?;
    Ok((text, ck))
}

fn engine_config(opts: &EngineOpts, echo: BTreeMap<String, String>) -> Res<EngineConfig> {
    let ranker = if let Some(p) = &opts.policy {
        let model = other(PolicyModel::from_text(&read(p)?), || {
            format!("loading {}", p.display())
        })?;
        Ranker::Linear(model)
    } else if opts.random_ranking {
        Ranker::Random { seed: opts.seed }
    } else {
        Ranker::Baseline
    };
    if let Some(b) = opts.budget_secs {
        if !(b >= 0.0 && b.is_finite()) {
            return Err(Failure::Io(anyhow!(
                "--budget-secs must be a non-negative number"
            )));
        }
    }
    Ok(EngineConfig {
        seed: opts.seed,
        fairness_bound: opts.fairness_bound,
        cand_budget: opts.cand_budget,
        budget: opts.budget_secs.map(Duration::from_secs_f64),
        minimize: !opts.no_minimize,
        ranker,
        log_events: true,
        objective: opts.weights.objective(),
        echo,
        ..EngineConfig::default()
    })
}

fn echo(input: &Path, opts: &EngineOpts, out_dir: &Path) -> BTreeMap<String, String> {
    let w = opts.weights;
    let mut m = BTreeMap::new();
    m.insert("input".into(), input.display().to_string());
    m.insert("seed".into(), opts.seed.to_string());
    m.insert(
        "budget_secs".into(),
        opts.budget_secs.map_or("none".into(), |b| b.to_string()),
    );
    m.insert(
        "policy".into(),
        opts.policy
            .as_ref()
            .map_or("none".into(), |p| p.display().to_string()),
    );
    m.insert("random_ranking".into(), opts.random_ranking.to_string());
    m.insert("fairness_bound".into(), opts.fairness_bound.to_string());
    m.insert("cand_budget".into(), opts.cand_budget.to_string());
    m.insert("minimize".into(), (!opts.no_minimize).to_string());
    m.insert("alpha".into(), w.alpha.to_string());
    m.insert("beta".into(), w.beta.to_string());
    m.insert("gamma".into(), w.gamma.to_string());
    m.insert("out_dir".into(), out_dir.display().to_string());
    m
}

fn append_metrics(out_dir: &Path, row: &str) -> Res<()> {
    let path = out_dir.join("metrics.csv");
    let fresh = !path.exists();
    let mut f = io(OpenOptions::new().create(true).append(true).open(&path), || {
        format!("opening {}", path.display())
    })?;
    let text = if fresh {
        format!("{CSV_HEADER}\n{row}\n")
    } else {
        format!("{row}\n")
    };
    io(f.write_all(text.as_bytes()), || {
        format!("writing {}", path.display())
    })
}

fn cmd_solve(input: &Path, opts: &EngineOpts, out_dir: &Path) -> Res<u8> {
    let (text, ck) = checker_for(input)?;
    let (circuit, sys) = other(load(&text), || format!("parsing {}", input.display()))?;
    let cfg = engine_config(opts, echo(input, opts, out_dir))?;
    io(fs::create_dir_all(out_dir), || {
        format!("creating {}", out_dir.display())
    })?;
    let r = solve(&circuit, &sys, &ck, cfg);
    let name = stem(input);
    let (code, cert_file) = match &r.outcome {
        Outcome::Safe(a) => {
            let Certificate::Safe(inv) = a.certificate() else {
                unreachable!()
            };
            let p = out_dir.join(format!("{name}.inv"));
            write(&p, &write_safe_certificate(circuit.num_latches(), inv))?;
            (20, Some(p))
        }
        Outcome::Unsafe(a) => {
            let Certificate::Unsafe(t) = a.certificate() else {
                unreachable!()
            };
            let p = out_dir.join(format!("{name}.wit"));
            write(&p, &write_witness(t))?;
            (10, Some(p))
        }
        Outcome::Fail(_) => (1, None),
    };
    write(&out_dir.join(format!("{name}.replay.jsonl")), &r.log.to_jsonl())?;
    let events: String = r
        .events
        .iter()
        .map(|e| serde_json::to_string(e).expect("events serialize") + "\n")
        .collect();
    write(&out_dir.join(format!("{name}.events.jsonl")), &events)?;
    append_metrics(
        out_dir,
        &csv_row(&name, r.outcome.verdict(), &r.cost, &opts.weights.objective()),
    )?;
    match &r.outcome {
        Outcome::Fail(reason) => println!("{name}: FAIL ({reason:?})"),
        o => println!(
            "{name}: {} accepted by checker; size {} t {:.3}s t_chk {:.3}s -> {}",
            o.verdict(),
            r.cost.size,
            r.cost.t,
            r.cost.t_chk,
            cert_file.unwrap().display()
        ),
    }
    Ok(code)
}

fn cmd_check_cert(input: &Path, cert: &Path) -> Res<u8> {
    let (_, ck) = checker_for(input)?;
    let text = read(cert)?;
    let is_inv = text
        .lines()
        .find(|l| !l.trim().is_empty() && !l.starts_with('c'))
        .is_some_and(|l| l.starts_with("p inv"));
    let verdict = if is_inv {
        let (nx, inv) = other(parse_safe_certificate(&text), || {
            format!("parsing {}", cert.display())
        })?;
        if nx != ck.system().num_latches() {
            println!(
                "REJECTED: certificate declares {nx} latches, circuit has {}",
                ck.system().num_latches()
            );
            return Ok(1);
        }
        ck.check_safe(&inv)
    } else {
        let trace = match ck.trace_from_witness(&text) {
            Ok(t) => t,
            Err(e) => {
                println!("REJECTED: {e}");
                return Ok(1);
            }
        };
        other(ck.check_unsafe(&trace), || "checking witness".into())?
    };
    if verdict.accepted {
        println!("ACCEPTED ({:.3}s)", verdict.checker_time.as_secs_f64());
        Ok(0)
    } else {
        println!(
            "REJECTED: {:?}",
            verdict.failing_condition.expect("rejections name a condition")
        );
        Ok(1)
    }
}

fn cmd_minimize(input: &Path, cert: &Path, out_dir: &Path) -> Res<u8> {
    let (_, ck) = checker_for(input)?;
    let (_, inv) = other(parse_safe_certificate(&read(cert)?), || {
        format!("parsing {}", cert.display())
    })?;
    let min = other(minimize_invariant(&ck, &inv), || "minimizing".into())?;
    io(fs::create_dir_all(out_dir), || {
        format!("creating {}", out_dir.display())
    })?;
    let out = out_dir.join(format!("{}.min.inv", stem(cert)));
    write(&out, &write_safe_certificate(ck.system().num_latches(), &min))?;
    println!(
        "lit {} -> {}, clauses {} -> {} -> {}",
        lit_count(&inv),
        lit_count(&min),
        inv.len(),
        min.len(),
        out.display()
    );
    Ok(0)
}

fn cmd_replay(input: &Path, log_path: &Path, strict: bool) -> Res<u8> {
    let (text, ck) = checker_for(input)?;
    let (circuit, sys) = other(load(&text), || format!("parsing {}", input.display()))?;
    let log = match ReplayLog::from_jsonl(&read(log_path)?) {
        Ok(l) => l,
        Err(e) => {
            println!("DIVERGED: {e}");
            return Ok(1);
        }
    };
    let (_, rep) = match replay(&circuit, &sys, &ck, &log, strict) {
        Ok(x) => x,
        Err(e) => {
            println!("DIVERGED: {e}");
            return Ok(1);
        }
    };
    let mode = if strict { "strict" } else { "reuse" };
    match &rep.divergence {
        None => {
            println!("EXACT REPLAY Δ=0");
            println!(
                "{mode} mode: {} verdict, {}/{} records, {} models and {} cores extracted",
                rep.replayed_verdict.as_deref().unwrap_or("?"),
                rep.records_consumed,
                rep.records_total,
                rep.model_extractions,
                rep.core_extractions
            );
            Ok(0)
        }
        Some(e) => {
            println!("DIVERGED: {e}");
            if let Some(d) = rep.invariant_distance {
                println!("invariant distance {d:.6}");
            }
            Ok(1)
        }
    }
}

fn cmd_metrics(logs: &[PathBuf], w: Weights, out_dir: &Path) -> Res<u8> {
    let mut rows = vec![CSV_HEADER.to_string()];
    for path in logs {
        let log = other(ReplayLog::from_jsonl(&read(path)?), || {
            format!("parsing {}", path.display())
        })?;
        other(log.verify(), || format!("verifying {}", path.display()))?;
        let config = other(log.config(), || format!("reading {}", path.display()))?;
        let name = config["config"]["echo"]["input"]
            .as_str()
            .map(|s| stem(Path::new(s)))
            .unwrap_or_else(|| stem(path).trim_end_matches(".replay").to_string());
        let cert = log
            .certificate()
            .ok_or_else(|| Failure::Other(anyhow!("{} has no certificate record", path.display())))?;
        let p = &cert.payload;
        let cv = CostVector {
            t: p["t"].as_f64().unwrap_or(0.0),
            size: p["size"].as_u64().unwrap_or(0),
            t_chk: p["t_chk"].as_f64().unwrap_or(0.0),
        };
        rows.push(csv_row(
            &name,
            p["verdict"].as_str().unwrap_or("FAIL"),
            &cv,
            &w.objective(),
        ));
    }
    io(fs::create_dir_all(out_dir), || {
        format!("creating {}", out_dir.display())
    })?;
    let text = rows.join("\n") + "\n";
    write(&out_dir.join("metrics.csv"), &text)?;
    print!("{text}");
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    files: &[PathBuf],
    out: &Path,
    lambda: f64,
    epochs: usize,
    seed: u64,
    par_factor: Option<f64>,
    budget_secs: Option<f64>,
) -> Res<u8> {
    let mut events: Vec<RankingEvent> = Vec::new();
    for path in files {
        for (i, line) in read(path)?.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            events.push(other(serde_json::from_str(line), || {
                format!("{}:{}", path.display(), i + 1)
            })?);
        }
    }
    let penalty = match (par_factor, budget_secs) {
        (Some(factor), Some(budget_secs)) => FailPenalty::Par { factor, budget_secs },
        _ => FailPenalty::Fixed,
    };
    let pairs = label_pairs(&events, penalty);
    let trained_on = files
        .iter()
        .map(|p| stem(p).trim_end_matches(".events").to_string())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect::<Vec<_>>()
        .join("+");
    let (model, report) = other(train(&pairs, lambda, epochs, seed, &trained_on), || {
        format!("training on {} events", events.len())
    })?;
    write(out, &model.to_text())?;
    println!(
        "{} events, {} pairs, loss {:.6} -> {:.6} over {} epochs; model {} -> {}",
        events.len(),
        pairs.len(),
        report.losses[0],
        report.losses.last().unwrap(),
        report.losses.len() - 1,
        &model.model_id[..12],
        out.display()
    );
    Ok(0)
}

fn cmd_stability(inputs: &[PathBuf], seeds: u64, opts: &EngineOpts, out_dir: &Path) -> Res<u8> {
    let mut rows = vec!["instance,safe_runs,delta_seed".to_string()];
    for input in inputs {
        let (text, ck) = checker_for(input)?;
        let (circuit, sys) = other(load(&text), || format!("parsing {}", input.display()))?;
        let mut invariants = Vec::new();
        for s in 0..seeds {
            let per_seed = EngineOpts {
                seed: opts.seed.wrapping_add(s),
                ..opts.clone()
            };
            let mut cfg = engine_config(&per_seed, echo(input, &per_seed, out_dir))?;
            cfg.log_events = false;
            let r = solve(&circuit, &sys, &ck, cfg);
            invariants.push(r.outcome.invariant().map(<[_]>::to_vec));
        }
        let safe = invariants.iter().flatten().count();
        let delta = seed_instability(&invariants).map_or("NA".to_string(), |d| format!("{d:.6}"));
        rows.push(format!("{},{safe},{delta}", stem(input)));
    }
    io(fs::create_dir_all(out_dir), || {
        format!("creating {}", out_dir.display())
    })?;
    let text = rows.join("\n") + "\n";
    write(&out_dir.join("stability.csv"), &text)?;
    print!("{text}");
    Ok(0)
}

fn run(cli: Cli) -> Res<u8> {
    match cli.cmd {
        Cmd::Solve {
            input,
            engine,
            out_dir,
        } => cmd_solve(&input, &engine, &out_dir),
        Cmd::CheckCert { input, cert } => cmd_check_cert(&input, &cert),
        Cmd::Minimize { input, cert, out_dir } => cmd_minimize(&input, &cert, &out_dir),
        Cmd::Replay {
            input,
            log,
            strict_replay,
        } => cmd_replay(&input, &log, strict_replay),
        Cmd::Metrics {
            logs,
            weights,
            out_dir,
        } => cmd_metrics(&logs, weights, &out_dir),
        Cmd::Train {
            events,
            out,
            lambda,
            epochs,
            seed,
            par_factor,
            budget_secs,
        } => cmd_train(&events, &out, lambda, epochs, seed, par_factor, budget_secs),
        Cmd::Stability {
            inputs,
            seeds,
            engine,
            out_dir,
        } => cmd_stability(&inputs, seeds, &engine, &out_dir),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Io(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
