use anyhow::{bail, Context as _, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use polmine_core::evaluation::{grid_csv, Metrics};
use polmine_core::io::{write_log, Context, Dataset, Request, RunConfig};
use polmine_core::languages::starbac::fixture::generate;
use polmine_core::miner::{Checkpoint, TraceRecord};
use polmine_core::oracle::{entropy_check, exact_min_loss, exact_posterior};
use polmine_core::pipeline::{self, build_problem, mine_problem, MineOptions, MinedPolicy};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "polmine", version, about = "Mine access-control policies by deterministic annealing")]
struct Cli {
    /// Worker threads for restarts, folds and grid cells.
    #[arg(long, global = true, env = "POLMINE_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the configuration.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Mine a policy from the configured dataset.
    Mine {
        #[command(flatten)]
        common: Common,
        /// Continue a restart from one of its checkpoints.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Score a mined policy on the configured dataset.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        policy: PathBuf,
    },
    /// K-fold cross-validation.
    Crossval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        folds: Option<usize>,
    },
    /// Grid search over the configured candidate values.
    Gridsearch {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        fpr_cap: Option<f64>,
    },
    /// Generate a labelled synthetic log.
    Synth {
        kind: SynthKind,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive minimum (and optionally the Gibbs posterior) of a small
    /// problem.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        beta: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Starbac,
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    write(path, serde_json::to_string_pretty(value)? + "\n")
}

fn metrics_csv(rows: &[(String, &Metrics)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["name", "tpr", "fpr", "precision", "complexity", "over_grant"])?;
    let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
    for (name, m) in rows {
        w.write_record([
            name.clone(),
            opt(m.tpr),
            opt(m.fpr),
            opt(m.precision),
            m.complexity.to_string(),
            opt(m.over_grant),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn trace_csv(trace: &[TraceRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["iteration", "beta", "expected_loss", "true_loss"])?;
    for t in trace {
        w.write_record([
            t.iteration.to_string(),
            t.beta.to_string(),
            t.expected_loss.to_string(),
            t.true_loss.to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

struct Loaded {
    config: RunConfig,
    data: Dataset,
    seed: u64,
}

fn load(c: &Common) -> Result<Loaded> {
    let config = RunConfig::load(&c.config)?;
    let data = config
        .data
        .load()
        .with_context(|| format!("loading the data of {}", c.config.display()))?;
    let seed = c.seed.unwrap_or(config.seed);
    Ok(Loaded { config, data, seed })
}

fn everything(data: &Dataset) -> Vec<usize> {
    (0..data.requests().len()).collect()
}

#[derive(Serialize)]
struct MineReport<'a> {
    language: &'a str,
    seed: u64,
    restart_seed: u64,
    loss: f64,
    expected_loss: Option<f64>,
    training: Metrics,
}

fn mine(c: &Common, resume: Option<&Path>) -> Result<()> {
    let Loaded { config, data, seed } = load(c)?;
    let problem = build_problem(&config, &data, &everything(&data))?;
    let resume: Option<Checkpoint> = resume
        .map(|p| -> Result<Checkpoint> {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        })
        .transpose()?;
    let dir = c.out_dir.join("checkpoints");
    let save = |i: usize, cp: &Checkpoint| {
        if let Err(e) = write_json(&dir.join(format!("restart-{i}.json")), cp) {
            log::warn!("checkpoint of restart {i} not written: {e:#}");
        }
    };
    let mined = mine_problem(
        &config,
        problem,
        seed,
        MineOptions {
            resume,
            on_checkpoint: (config.checkpoint_every > 0).then_some(&save as _),
        },
    )?;
    let training = pipeline::evaluate_policy(&mined.policy, &data, &everything(&data));
    let report = MineReport {
        language: config.language.name(),
        seed,
        restart_seed: mined.outcome.seed,
        loss: mined.outcome.loss,
        expected_loss: mined.outcome.trace.last().map(|t| t.expected_loss),
        training,
    };
    write_json(&c.out_dir.join("policy.json"), &mined.policy)?;
    write(&c.out_dir.join("trace.csv"), trace_csv(&mined.outcome.trace)?)?;
    write_json(&c.out_dir.join("metrics.json"), &report)?;
    println!(
        "loss {} complexity {} -> {}",
        report.loss,
        mined.policy.complexity(),
        c.out_dir.join("policy.json").display()
    );
    Ok(())
}

fn eval(c: &Common, policy: &Path) -> Result<()> {
    let Loaded { data, .. } = load(c)?;
    let text = fs::read_to_string(policy).with_context(|| format!("reading {}", policy.display()))?;
    let policy: MinedPolicy = serde_json::from_str(&text).with_context(|| format!("parsing {}", policy.display()))?;
    let m = pipeline::evaluate_policy(&policy, &data, &everything(&data));
    write_json(&c.out_dir.join("metrics.json"), &m)?;
    write(&c.out_dir.join("metrics.csv"), metrics_csv(&[("all".into(), &m)])?)?;
    println!("{}", serde_json::to_string(&m)?);
    Ok(())
}

fn crossval(c: &Common, folds: Option<usize>) -> Result<()> {
    let Loaded { config, data, seed } = load(c)?;
    let k = folds.unwrap_or(config.folds);
    let report = pipeline::crossval(&config, &data, k, seed)?;
    let mut rows: Vec<(String, &Metrics)> = report
        .folds
        .iter()
        .enumerate()
        .map(|(i, m)| (format!("fold{i}"), m))
        .collect();
    rows.push(("mean".into(), &report.mean));
    write_json(&c.out_dir.join("crossval.json"), &report)?;
    write(&c.out_dir.join("crossval.csv"), metrics_csv(&rows)?)?;
    println!("{}", serde_json::to_string(&report.mean)?);
    Ok(())
}

fn gridsearch(c: &Common, fpr_cap: Option<f64>) -> Result<()> {
    let Loaded { mut config, data, seed } = load(c)?;
    if let Some(cap) = fpr_cap {
        config.fpr_cap = cap;
    }
    if config.grid.is_empty() {
        bail!("the configuration has no `grid` to search");
    }
    let outcome = pipeline::grid_search(&config, &data, seed)?;
    write(&c.out_dir.join("grid.csv"), grid_csv(&outcome)?)?;
    write_json(&c.out_dir.join("grid.json"), &outcome)?;
    let best = outcome.best_row();
    if !outcome.meets_cap {
        eprintln!("warning: no cell meets FPR <= {}; reporting the lowest FPR", config.fpr_cap);
    }
    println!("{}", serde_json::to_string(best)?);
    Ok(())
}

fn synth(count: usize, seed: u64, out: Option<&Path>) -> Result<()> {
    let log: Vec<Request> = generate(seed, count)
        .into_iter()
        .map(|r| Request {
            user: r.user_name(),
            permission: r.object_name(),
            allowed: r.allowed,
            context: Some(Context {
                instant: r.instant,
                user_pos: r.user,
                perm_pos: r.object,
            }),
        })
        .collect();
    match out {
        Some(p) => {
            let mut buf = Vec::new();
            write_log(&mut buf, &log)?;
            write(p, buf)?;
        }
        None => write_log(std::io::stdout().lock(), &log)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct OracleReport {
    facts: usize,
    min_loss: f64,
    policy: MinedPolicy,
    beta: Option<f64>,
    log_partition: Option<f64>,
    entropy: Option<f64>,
    ordering_violations: Option<usize>,
}

fn oracle(c: &Common, beta: Option<f64>) -> Result<()> {
    let Loaded { config, data, .. } = load(c)?;
    let problem = build_problem(&config, &data, &everything(&data))?;
    let t = problem.base();
    let (min_loss, argmin) = exact_min_loss(&t.structure, &t.facts, &problem.loss)?;
    let mut report = OracleReport {
        facts: t.facts.len(),
        min_loss,
        policy: problem.extract(&argmin),
        beta,
        log_partition: None,
        entropy: None,
        ordering_violations: None,
    };
    if let Some(b) = beta {
        if !(b >= 0.0 && b.is_finite()) {
            bail!("beta must be a non-negative number");
        }
        let post = exact_posterior(&t.structure, &t.facts, &problem.loss, b)?;
        let check = entropy_check(&post);
        report.log_partition = Some(post.log_z);
        report.entropy = Some(check.entropy);
        report.ordering_violations = Some(check.ordering_violations);
    }
    write_json(&c.out_dir.join("oracle.json"), &report)?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if n == 0 {
            bail!("--workers must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match &cli.command {
        Command::Mine { common, resume } => mine(common, resume.as_deref()),
        Command::Eval { common, policy } => eval(common, policy),
        Command::Crossval { common, folds } => crossval(common, *folds),
        Command::Gridsearch { common, fpr_cap } => gridsearch(common, *fpr_cap),
        Command::Synth { kind: SynthKind::Starbac, count, seed, out } => synth(*count, *seed, out.as_deref()),
        Command::Oracle { common, beta } => oracle(common, *beta),
    }
}
