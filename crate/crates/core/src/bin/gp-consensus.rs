//! Command-line front-end: `run`, `montecarlo`, `appendix` and `validate`.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gp_consensus::analysis::{appendix_solution, average_state};
use gp_consensus::sim::config::{CaseId, ConfigError, SimConfig};
use gp_consensus::sim::engine::{run_episode, SimError};
use gp_consensus::sim::montecarlo::{run_monte_carlo, DEFAULT_RUNS};
use gp_consensus::sim::output::{
    episode_summary_csv, mc_meta, mc_summary_csv, montecarlo_csv, montecarlo_stats_csv, trajectory_csv,
    trajectory_file_name, write_atomic, RunMeta,
};
use gp_consensus::control::check_domain_containment;

#[derive(Parser)]
#[command(name = "gp-consensus", version, about = "Event-triggered GP learning for average consensus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (flat TOML); defaults to the benchmark scenario.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one episode and write trajectory and summary CSVs.
    Run {
        #[command(flatten)]
        common: Common,
        /// Controller/learning case a, b, c or d; omit to use the config as is.
        #[arg(long)]
        case: Option<CaseId>,
    },
    /// Repeat episodes with uniformly drawn initial states.
    Montecarlo {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = DEFAULT_RUNS)]
        runs: usize,
        /// Cases to run, e.g. `abcd` or `b,d`.
        #[arg(long, default_value = "abcd")]
        cases: String,
    },
    /// Two-agent conventional-law example against its closed form.
    Appendix {
        /// Initial states `x1,x2`.
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 0.0], allow_negative_numbers = true)]
        x0: Vec<f64>,
        /// Constant residual f − f̂.
        #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
        eps: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long = "t-end", default_value_t = 10.0)]
        t_end: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config and print the derived constants.
    Validate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        case: Option<CaseId>,
    },
}

enum Failure {
    Config(String),
    Numerical(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

fn io_failure(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Config(format!("cannot write {}: {e}", path.display()))
}

fn load(config: Option<&Path>, seed: Option<u64>) -> Result<SimConfig, Failure> {
    let mut cfg = match config {
        Some(p) => SimConfig::from_file(p)?,
        None => SimConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn parse_cases(list: &str) -> Result<Vec<CaseId>, Failure> {
    let mut cases = Vec::new();
    for ch in list.chars().filter(|c| !matches!(c, ',' | ' ')) {
        let case: CaseId = ch.to_string().parse()?;
        if !cases.contains(&case) {
            cases.push(case);
        }
    }
    if cases.is_empty() {
        return Err(Failure::Config("no cases selected".into()));
    }
    Ok(cases)
}

fn cmd_run(common: Common, case: Option<CaseId>) -> Result<(), Failure> {
    let mut cfg = load(common.config.as_deref(), common.seed)?;
    if let Some(c) = case {
        c.apply(&mut cfg);
    }
    let scenario = cfg.scenario::<f64>()?;
    let case_label = case.map(|c| c.to_string()).unwrap_or_else(|| "custom".into());
    let meta = RunMeta::from_scenario(&scenario).with("case", &case_label).with("seed", cfg.seed);
    let (traj, summary) = run_episode(&cfg)?;

    let traj_path = common.out.join(trajectory_file_name(case));
    write_atomic(&traj_path, &trajectory_csv(&traj, &meta)).map_err(io_failure(&traj_path))?;
    let summary_path = common.out.join("summary.csv");
    write_atomic(&summary_path, &episode_summary_csv(&case_label, cfg.seed, &summary, &meta))
        .map_err(io_failure(&summary_path))?;

    eprintln!(
        "case {case_label}: final error {:.6} (epsilon {:.6}), triggers {:?}, datasets {:?}",
        summary.final_error, summary.epsilon, summary.trigger_counts, summary.max_dataset_sizes
    );
    if !summary.domain_containment {
        eprintln!("warning: [x*-eps, x*+eps] is not contained in the domain");
    }
    if !summary.gamma_condition_holds() {
        eprintln!("warning: gamma condition for tau does not hold on every agent");
    }
    Ok(())
}

fn cmd_montecarlo(common: Common, runs: usize, cases: &str) -> Result<(), Failure> {
    let cfg = load(common.config.as_deref(), common.seed)?;
    let cases = parse_cases(cases)?;
    let mc = run_monte_carlo(&cfg, runs, &cases)?;
    let meta = mc_meta(&cfg, runs)?;
    let files = [
        ("montecarlo.csv", montecarlo_csv(&mc, &meta)),
        ("montecarlo_stats.csv", montecarlo_stats_csv(&mc, &meta)),
        ("summary.csv", mc_summary_csv(&mc, cfg.n_agents, &meta)),
    ];
    for (name, body) in files {
        let path = common.out.join(name);
        write_atomic(&path, &body).map_err(io_failure(&path))?;
    }
    for s in &mc.stats {
        let last = s.t.len().saturating_sub(1);
        eprintln!(
            "case {}: {} ok, {} failed, final error mean {:.6} median {:.6} max {:.6}",
            s.case,
            s.succeeded,
            s.failed,
            s.mean.get(last).copied().unwrap_or(f64::NAN),
            s.median.get(last).copied().unwrap_or(f64::NAN),
            s.max.get(last).copied().unwrap_or(f64::NAN),
        );
    }
    Ok(())
}

fn cmd_appendix(x0: &[f64], eps: f64, c: f64, t_end: f64, out: Option<PathBuf>) -> Result<(), Failure> {
    let [a, b] = x0 else {
        return Err(Failure::Config(format!("--x0 takes exactly two values, got {}", x0.len())));
    };
    let x0 = [*a, *b];
    let cfg = SimConfig::two_agent_example(x0, eps, c, t_end);
    let scenario = cfg.scenario::<f64>()?;
    let (traj, _) = run_episode(&cfg)?;
    let mut body = String::from("t,x_1,x_2,closed_1,closed_2\n");
    let mut sup = 0.0f64;
    for r in &traj.records {
        let closed = appendix_solution(x0, eps, c, r.t);
        sup = sup.max((r.x[0] - closed[0]).abs()).max((r.x[1] - closed[1]).abs());
        body.push_str(&format!("{},{},{},{},{}\n", r.t, r.x[0], r.x[1], closed[0], closed[1]));
    }
    let last = traj.records.last().expect("at least one record");
    let drift = average_state(&last.x).unwrap() - average_state(&x0).unwrap();
    println!("sup |x_sim - x_closed| = {sup:e}");
    println!("mean drift at t = {}: {drift} (eps * t = {})", last.t, eps * last.t);
    if let Some(dir) = out {
        let path = dir.join("appendix.csv");
        let mut text = String::new();
        let meta = RunMeta::from_scenario(&scenario).with("eps_bias", eps);
        for line in trajectory_csv(&traj, &meta).lines().take_while(|l| l.starts_with('#')) {
            text.push_str(line);
            text.push('\n');
        }
        text.push_str(&body);
        write_atomic(&path, &text).map_err(io_failure(&path))?;
    }
    Ok(())
}

fn cmd_validate(config: Option<PathBuf>, case: Option<CaseId>) -> Result<(), Failure> {
    let mut cfg = load(config.as_deref(), None)?;
    if let Some(c) = case {
        c.apply(&mut cfg);
    }
    let s = cfg.scenario::<f64>()?;
    println!("agents        {}", cfg.n_agents);
    println!("beta          {}", s.bound.beta);
    println!("eta_lower     {}", s.bound.eta_bar_lower);
    println!("epsilon       {}", s.epsilon);
    println!("lip_f         {}", s.bound.lip_f);
    println!("steps         {}", s.n_steps);
    println!("config_hash   {}", cfg.hash_hex());
    if let Some(x0) = &cfg.initial_states {
        let star = average_state(x0).unwrap();
        let ok = check_domain_containment(cfg.domain_lo, cfg.domain_hi, star, s.epsilon);
        println!("x_bar_star    {star}");
        println!("containment   {}", if ok { "ok" } else { "WARNING: eps-ball leaves the domain" });
    }
    let prior_gamma = s.bound.gamma();
    println!("gamma(prior)  {prior_gamma} (posterior Lipschitz terms are evaluated per episode)");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { common, case } => cmd_run(common, case),
        Command::Montecarlo { common, runs, cases } => cmd_montecarlo(common, runs, &cases),
        Command::Appendix { x0, eps, c, t_end, out } => cmd_appendix(&x0, eps, c, t_end, out),
        Command::Validate { config, case } => cmd_validate(config, case),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}
