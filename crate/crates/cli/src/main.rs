use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use uavconn::baselines::{exhaustive_plan, straight_flight_max_snr, straight_flight_plan};
use uavconn::experiments::{
    generate_scenario, run_cdf_experiment, run_time_sweep, ExperimentConfig, GbsCount, RunMetadata,
};
use uavconn::trajectory::trajectory_csv;
use uavconn::{
    bottleneck_max_snr, bottleneck_radius, build_feasibility_graph, check_feasibility, coverage_radius, from_db,
    plan_method1, plan_method2, to_db, PlanError, Point, Scenario,
};

/// Connectivity-constrained UAV trajectory planning.
#[derive(Parser)]
#[command(name = "uavconn", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random scenario as JSON.
    Gen(GenArgs),
    /// Check whether the mission is feasible at an SNR target.
    Feasibility {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        snr_db: f64,
    },
    /// Largest feasible SNR target and the straight-flight limit.
    MaxSnr {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Plan a trajectory.
    Plan(PlanArgs),
    /// Completion time versus SNR target for every method.
    Sweep(SweepArgs),
    /// Distribution of the largest feasible SNR target over random scenarios.
    Cdf(CdfArgs),
}

#[derive(Args, Clone)]
struct RandomArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// GBS density per km².
    #[arg(long, default_value_t = 0.25)]
    lambda: f64,
    #[arg(long, default_value_t = 10.0)]
    region_km: f64,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    random: RandomArgs,
    #[arg(long, default_value_t = 0)]
    trial: usize,
    /// Start point in meters, "x,y".
    #[arg(long, value_parser = parse_point, default_value = "1000,1000")]
    start: Point,
    #[arg(long, value_parser = parse_point, default_value = "9000,9000")]
    goal: Point,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Sf,
    M1,
    M2,
    Exhaustive,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_enum)]
    method: Method,
    #[arg(long)]
    snr_db: f64,
    /// Quantization levels for method m2.
    #[arg(long, default_value_t = 16)]
    q: usize,
    /// Path budget for the exhaustive planner.
    #[arg(long, default_value_t = uavconn::tolerance::DEFAULT_PATH_BUDGET)]
    budget: usize,
    /// Directory for plan.json and trajectory.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Time step of the trajectory CSV in seconds.
    #[arg(long, default_value_t = 1.0)]
    time_step: f64,
}

#[derive(Args)]
struct SweepArgs {
    /// Scenario file; a random scenario is generated when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[command(flatten)]
    random: RandomArgs,
    /// Comma-separated quantization levels for method m2.
    #[arg(long, value_delimiter = ',', default_value = "8,16")]
    q: Vec<usize>,
    #[arg(long, default_value_t = 0.25)]
    step_db: f64,
    /// Exhaustive search only runs with at most this many GBSs.
    #[arg(long, default_value_t = 8)]
    exhaustive_max_gbs: usize,
    #[arg(long, default_value_t = uavconn::tolerance::DEFAULT_PATH_BUDGET)]
    budget: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct CdfArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Comma-separated GBS densities per km².
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.8,1.6")]
    lambda: Vec<f64>,
    #[arg(long, default_value_t = 10.0)]
    region_km: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

fn parse_point(s: &str) -> Result<Point, String> {
    let (x, y) = s.split_once(',').ok_or("expected \"x,y\"")?;
    let x = x.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let y = y.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok(Point::new(x, y))
}

/// Outcome of a subcommand that may legitimately find the mission infeasible.
enum Outcome {
    Done,
    Infeasible,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Infeasible) => ExitCode::from(2),
        Err(e) => {
            if let Some(PlanError::Infeasible) = e.downcast_ref::<PlanError>() {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load(path: &Path) -> Result<Scenario> {
    Scenario::load(path).with_context(|| format!("loading scenario {}", path.display()))
}

fn base_config(random: &RandomArgs) -> ExperimentConfig {
    ExperimentConfig {
        region_km: random.region_km,
        gbs_count: GbsCount::Density(random.lambda),
        base_seed: random.seed,
        ..Default::default()
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Gen(args) => {
            let cfg = ExperimentConfig {
                start: args.start,
                goal: args.goal,
                ..base_config(&args.random)
            };
            let scenario = generate_scenario(&cfg, args.trial)?;
            let text = scenario.to_json() + "\n";
            match args.out {
                Some(path) => write(&path, &text)?,
                None => print!("{text}"),
            }
            Ok(Outcome::Done)
        }
        Command::Feasibility { scenario, snr_db } => {
            let s = load(&scenario)?;
            let req = coverage_radius(&s, from_db(snr_db))?;
            let feasible = check_feasibility(&build_feasibility_graph(&s, &req));
            let report = serde_json::json!({
                "snr_db": snr_db,
                "coverage_radius_m": req.radius,
                "feasible": feasible,
            });
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(if feasible { Outcome::Done } else { Outcome::Infeasible })
        }
        Command::MaxSnr { scenario } => {
            let s = load(&scenario)?;
            let report = serde_json::json!({
                "max_snr_db": to_db(bottleneck_max_snr(&s)),
                "bottleneck_radius_m": bottleneck_radius(&s),
                "sf_max_snr_db": to_db(straight_flight_max_snr(&s)),
            });
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(Outcome::Done)
        }
        Command::Plan(args) => plan(args),
        Command::Sweep(args) => {
            let cfg = ExperimentConfig {
                quant_levels: args.q.clone(),
                grid_step_db: args.step_db,
                exhaustive_max_gbs: args.exhaustive_max_gbs,
                path_budget: args.budget,
                ..base_config(&args.random)
            };
            let scenario = match &args.scenario {
                Some(p) => load(p)?,
                None => generate_scenario(&cfg, 0)?,
            };
            let report = run_time_sweep(&scenario, &cfg, args.workers)?;
            fs::create_dir_all(&args.out)?;
            write(&args.out.join("sweep.csv"), &report.csv())?;
            write(&args.out.join("scenario.json"), &(scenario.to_json() + "\n"))?;
            RunMetadata::new(&cfg, None).write(args.out.join("config.json"))?;
            println!(
                "max SNR {:.3} dB, straight-flight limit {:.3} dB, {} rows -> {}",
                report.max_snr_db,
                report.sf_max_snr_db,
                report.rows.len(),
                args.out.join("sweep.csv").display()
            );
            Ok(Outcome::Done)
        }
        Command::Cdf(args) => {
            if args.lambda.is_empty() {
                bail!("at least one density is required");
            }
            let cfg = ExperimentConfig {
                region_km: args.region_km,
                trials: args.trials,
                base_seed: args.seed,
                ..ExperimentConfig::cdf_defaults()
            };
            let report = run_cdf_experiment(&cfg, &args.lambda, args.workers)?;
            fs::create_dir_all(&args.out)?;
            write(&args.out.join("cdf_trials.csv"), &report.trials_csv())?;
            write(&args.out.join("cdf_curves.csv"), &report.cdf_csv())?;
            write(&args.out.join("cdf_summary.csv"), &report.summary_csv())?;
            RunMetadata::new(&cfg, Some(&args.lambda)).write(args.out.join("config.json"))?;
            for s in &report.summaries {
                println!(
                    "lambda {}: median max SNR {:.3} dB, straight flight {:.3} dB, gain {:.3} dB",
                    s.lambda, s.median_max_snr_db, s.median_sf_max_snr_db, s.median_gain_db
                );
            }
            Ok(Outcome::Done)
        }
    }
}

fn plan(args: PlanArgs) -> Result<Outcome> {
    let s = load(&args.scenario)?;
    let target = from_db(args.snr_db);
    let result = match args.method {
        Method::Sf => straight_flight_plan(&s, target),
        Method::M1 => plan_method1(&s, target),
        Method::M2 => plan_method2(&s, target, args.q),
        Method::Exhaustive => exhaustive_plan(&s, target, args.budget),
    };
    let plan = match result {
        Ok(p) => p,
        Err(PlanError::Infeasible) => {
            eprintln!("mission is infeasible at {} dB", args.snr_db);
            return Ok(Outcome::Infeasible);
        }
        Err(e) => return Err(e.into()),
    };
    let report = plan.report(&s, 1.0);
    let json = serde_json::to_string_pretty(&report)? + "\n";
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        write(&dir.join("plan.json"), &json)?;
        let csv = trajectory_csv(&s, &plan.trajectory, Some(&plan.sequence), args.time_step);
        write(&dir.join("trajectory.csv"), &csv)?;
    }
    print!("{json}");
    Ok(Outcome::Done)
}
