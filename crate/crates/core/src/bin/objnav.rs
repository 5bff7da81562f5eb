use std::fs;
use std::io::{self, BufReader};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use objnav::dataset::{build_split, CollectConfig, Split};
use objnav::harness::{
    evaluate_split, mean_scores, prediction_csv, render_episode, run_episode, run_suite, sample_target_episodes,
    write_report, AgentKind, AgentSpec, PredictionSource, RunConfig, SuiteConfig,
};
use objnav::predictor::{serve_echo, spawn_tcp_echo, EchoMode, Endpoint, FrontierConfig, RemotePredictor};
use objnav::world::{generate_world, TargetCategory, WorldGenParams, WorldGrid, DEFAULT_MAX_STEPS};

#[derive(Parser)]
#[command(name = "objnav", version, about = "Object-goal navigation on procedurally generated 2D semantic worlds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a world and save it as JSON.
    GenWorld {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// World generation parameters (JSON).
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Run one episode and print its result.
    Run(RunArgs),
    /// Run a navigation suite and write summary.json, episodes.csv and renders.
    EvalNav(EvalNavArgs),
    /// Score cost-map predictions against a dataset split.
    EvalPred(EvalPredArgs),
    /// Collect expert trajectories into a dataset split.
    Collect(CollectArgs),
    /// Serve the stub predictor over TCP or stdin/stdout.
    ServeEcho {
        /// `host:port` to listen on; stdin/stdout when absent.
        #[arg(long)]
        listen: Option<String>,
        /// `uniform` or `mirror`.
        #[arg(long, default_value = "uniform")]
        mode: String,
        /// Navigation cost returned in `uniform` mode.
        #[arg(long, default_value_t = 0.5)]
        value: f32,
    },
}

/// Controller overrides, applied on top of `--config`.
#[derive(Args, Clone, Default)]
struct ControlArgs {
    /// Run configuration (JSON); flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long = "q-v")]
    q_v: Option<f64>,
    #[arg(long = "q-omega")]
    q_omega: Option<f64>,
    #[arg(long = "theta-cost")]
    theta_cost: Option<f64>,
    #[arg(long = "theta-occ")]
    theta_occ: Option<f64>,
    /// Disable the turn-then-drive rollouts added to each batch.
    #[arg(long)]
    no_primitives: bool,
}

impl ControlArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        let m = &mut cfg.mpc;
        set(&mut m.horizon, self.horizon);
        set(&mut m.samples, self.samples);
        set(&mut m.lambda, self.lambda);
        set(&mut m.sigma, self.sigma);
        set(&mut m.q_v, self.q_v);
        set(&mut m.q_omega, self.q_omega);
        set(&mut cfg.goal.theta_cost, self.theta_cost);
        set(&mut cfg.theta_occ, self.theta_occ);
        if self.no_primitives {
            m.primitives = false;
        }
    }

    fn run_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => read_json(p)?,
            None => RunConfig::default(),
        };
        self.apply(&mut cfg);
        Ok(cfg)
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

#[derive(Args)]
struct AgentArgs {
    /// gt, frontier, random or remote.
    #[arg(long, default_value = "gt")]
    agent: AgentKind,
    /// Predictor endpoint for `remote`: `host:port` or `cmd:program args`.
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long, default_value_t = 5000)]
    timeout_ms: u64,
}

impl AgentArgs {
    fn spec(&self) -> AgentSpec {
        AgentSpec {
            kind: self.agent,
            endpoint: self.endpoint.clone(),
            timeout_ms: self.timeout_ms,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    agent: AgentArgs,
    #[arg(long, default_value_t = 1)]
    world_seed: u64,
    /// Load the world from a file instead of generating it.
    #[arg(long)]
    world: Option<PathBuf>,
    /// Target category; any reachable target when absent.
    #[arg(long)]
    target: Option<TargetCategory>,
    /// Selects among sampled starts.
    #[arg(long, default_value_t = 0)]
    episode_seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    max_steps: usize,
    /// Write a PNG of the trajectory.
    #[arg(long)]
    render: Option<PathBuf>,
    /// Write the full result as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    control: ControlArgs,
}

#[derive(Args)]
struct EvalNavArgs {
    #[command(flatten)]
    agent: AgentArgs,
    /// Suite configuration (JSON); the default is 8 worlds x 40 episodes.
    #[arg(long)]
    suite: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Override the suite's world count (seeds 1..=N).
    #[arg(long)]
    worlds: Option<u64>,
    #[arg(long)]
    episodes_per_world: Option<usize>,
    #[arg(long)]
    render: bool,
    #[command(flatten)]
    control: ControlArgs,
}

#[derive(Args)]
struct EvalPredArgs {
    /// Split directory containing manifest.json.
    #[arg(long)]
    data: PathBuf,
    /// labels, frontier, remote or dir.
    #[arg(long, default_value = "remote")]
    predictor: String,
    #[arg(long)]
    endpoint: Option<String>,
    /// Predictions laid out as `<dir>/<sample>/{nav,occ}.smt`.
    #[arg(long)]
    pred_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 5000)]
    timeout_ms: u64,
    #[arg(long, default_value_t = objnav::costfield::DEFAULT_THETA_OCC)]
    theta_occ: f64,
    /// CSV output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CollectArgs {
    /// train, val or test.
    #[arg(long)]
    split: Split,
    /// Use the first N of the split's default world seeds.
    #[arg(long)]
    worlds: Option<usize>,
    /// Explicit world seeds, comma separated.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 5)]
    episodes_per_world: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    max_steps: usize,
    #[command(flatten)]
    control: ControlArgs,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn gen_world(seed: u64, out: &Path, params: Option<&Path>) -> Result<()> {
    let p: WorldGenParams = match params {
        Some(p) => read_json(p)?,
        None => WorldGenParams::default(),
    };
    let w = generate_world(seed, &p)?;
    w.save(out)?;
    println!("wrote {}x{} world (seed {seed}) to {}", w.width(), w.height(), out.display());
    Ok(())
}

fn run(a: &RunArgs) -> Result<()> {
    let cfg = a.control.run_config()?;
    let world = match &a.world {
        Some(p) => WorldGrid::load(p)?,
        None => generate_world(a.world_seed, &WorldGenParams::default())?,
    };
    let episodes = match a.target {
        Some(t) => sample_target_episodes(&world, t, 1, a.episode_seed, a.max_steps, 1.5, cfg.inflation),
        None => objnav::harness::sample_episodes(&world, 1, a.episode_seed, a.max_steps, 1.5, cfg.inflation),
    }
    .context("no reachable start for the requested target")?;
    let ep = &episodes[0];
    let r = run_episode(&world, ep, 0, &a.agent.spec(), &cfg, a.episode_seed)?;
    println!(
        "agent={} target={} success={} steps={} path={:.2}m shortest={:.2}m final_distance={:.2}m dts={:.2}m",
        r.agent, r.target, r.success, r.steps, r.path_length, r.shortest_length, r.final_distance, r.dts
    );
    if let Some(f) = &r.failure {
        println!("failure: {f}");
    }
    if let Some(p) = &a.render {
        render_episode(&world, &r).save(p)?;
    }
    if let Some(p) = &a.out {
        fs::write(p, serde_json::to_string_pretty(&r)?)?;
    }
    Ok(())
}

fn eval_nav(a: &EvalNavArgs) -> Result<()> {
    let mut suite: SuiteConfig = match &a.suite {
        Some(p) => read_json(p)?,
        None => SuiteConfig::default(),
    };
    if let Some(n) = a.worlds {
        suite.world_seeds = (1..=n).collect();
    }
    set(&mut suite.episodes_per_world, a.episodes_per_world);
    suite.render |= a.render;
    if let Some(p) = &a.control.config {
        suite.run = read_json(p)?;
    }
    a.control.apply(&mut suite.run);
    let (report, results) = run_suite(&suite, &a.agent.spec())?;
    let worlds: Option<Vec<WorldGrid>> = if suite.render {
        Some(
            suite
                .world_seeds
                .iter()
                .map(|&s| generate_world(s, &suite.world))
                .collect::<objnav::Result<_>>()?,
        )
    } else {
        None
    };
    write_report(&a.out, &report, &results, worlds.as_deref())?;
    println!(
        "{}: {} episodes, SR {:.3}, SPL {:.3}, DTS {:.3} m",
        report.agent, report.episodes, report.sr, report.spl, report.dts
    );
    Ok(())
}

fn eval_pred(a: &EvalPredArgs) -> Result<()> {
    let mut source = match a.predictor.as_str() {
        "labels" => PredictionSource::Labels,
        "frontier" => PredictionSource::Frontier(FrontierConfig::default()),
        "remote" => {
            let ep: Endpoint = a.endpoint.as_deref().context("--endpoint is required for remote")?.parse()?;
            PredictionSource::Remote(RemotePredictor::with_timeout(ep, Duration::from_millis(a.timeout_ms)))
        }
        "dir" => PredictionSource::Dir(a.pred_dir.clone().context("--pred-dir is required for dir")?),
        other => bail!("unknown predictor `{other}`"),
    };
    let rows = evaluate_split(&a.data, &mut source, a.theta_occ)?;
    let csv = prediction_csv(&rows)?;
    match &a.out {
        Some(p) => fs::write(p, csv)?,
        None => print!("{csv}"),
    }
    if let Some(m) = mean_scores(&rows) {
        let pct = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.2}"));
        eprintln!(
            "{} samples: aAP5 {} aAP9 {} mPA {:.2} mF1 {:.2} mIoU {:.2} loss {:.4}",
            rows.len(),
            pct(m.aap5),
            pct(m.aap9),
            m.mpa,
            m.mf1,
            m.miou,
            m.total_loss
        );
    }
    Ok(())
}

fn collect(a: &CollectArgs) -> Result<()> {
    let seeds = if !a.seeds.is_empty() {
        a.seeds.clone()
    } else {
        let all = a.split.default_world_seeds();
        let n = a.worlds.unwrap_or(all.len());
        if n > all.len() {
            bail!("split {} has {} default worlds; pass --seeds for more", a.split.name(), all.len());
        }
        all[..n].to_vec()
    };
    let mut cfg = CollectConfig {
        max_steps: a.max_steps,
        ..CollectConfig::default()
    };
    if let Some(p) = &a.control.config {
        cfg.run = read_json(p)?;
    }
    a.control.apply(&mut cfg.run);
    let m = build_split(&seeds, a.episodes_per_world, a.split.name(), &a.out, &cfg)?;
    println!(
        "{}: {} episodes ({} failed), {} samples in {}",
        m.split,
        m.counts.episodes,
        m.counts.failed_episodes,
        m.counts.samples,
        a.out.join(&m.split).display()
    );
    Ok(())
}

fn serve(listen: Option<&str>, mode: &str, value: f32) -> Result<()> {
    let mode = match mode {
        "uniform" => EchoMode::Uniform(value),
        "mirror" => EchoMode::Mirror,
        other => bail!("unknown echo mode `{other}`"),
    };
    match listen {
        Some(addr) => {
            let (bound, handle) = spawn_tcp_echo(addr, mode)?;
            eprintln!("listening on {bound}");
            handle.join().map_err(|_| anyhow::anyhow!("echo server panicked"))?;
        }
        None => serve_echo(BufReader::new(io::stdin().lock()), io::stdout().lock(), mode)?,
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::GenWorld { seed, out, params } => gen_world(seed, &out, params.as_deref()),
        Command::Run(a) => run(&a),
        Command::EvalNav(a) => eval_nav(&a),
        Command::EvalPred(a) => eval_pred(&a),
        Command::Collect(a) => collect(&a),
        Command::ServeEcho { listen, mode, value } => serve(listen.as_deref(), &mode, value),
    }
}
