//! Random scenario generation and the two experiment protocols: the
//! distribution of the largest achievable SNR target versus the
//! straight-flight baseline, and completion time versus SNR target.
//!
//! Every trial draws from its own ChaCha8 stream (`seed_from_u64(base_seed)`
//! then `set_stream(trial_index)`), so results do not depend on how trials are
//! scheduled across workers. Outputs are sorted before they are written.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{exhaustive_plan, straight_flight_max_snr, straight_flight_plan};
use crate::conn_graph::bottleneck_max_snr;
use crate::error::{IoError, PlanError};
use crate::method1::{plan_method1, Plan};
use crate::method2::plan_method2;
use crate::scenario::{from_db, to_db, Point, Scenario};

pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.3); seed_from_u64(base_seed), set_stream(trial_index)";
pub const CSV_VERSION: u32 = 1;

/// How many GBSs a random scenario has.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GbsCount {
    /// GBSs per km²; the count is `round(lambda * D^2)`, at least one.
    Density(f64),
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub region_km: f64,
    pub gbs_count: GbsCount,
    pub start: Point,
    pub goal: Point,
    pub trials: usize,
    pub base_seed: u64,
    /// Explicit SNR grid in dB; `None` selects the default sweep grid.
    pub snr_grid_db: Option<Vec<f64>>,
    pub grid_step_db: f64,
    pub quant_levels: Vec<usize>,
    /// The exhaustive planner only runs on scenarios with at most this many GBSs.
    pub exhaustive_max_gbs: usize,
    pub path_budget: usize,
    pub uav_altitude_m: f64,
    pub gbs_altitude_m: f64,
    pub max_speed_mps: f64,
    pub ref_snr_db: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            region_km: 10.0,
            gbs_count: GbsCount::Density(0.25),
            start: Point::new(1000.0, 1000.0),
            goal: Point::new(9000.0, 9000.0),
            trials: 1000,
            base_seed: 1,
            snr_grid_db: None,
            grid_step_db: 0.25,
            quant_levels: vec![8, 16],
            exhaustive_max_gbs: 8,
            path_budget: crate::tolerance::DEFAULT_PATH_BUDGET,
            uav_altitude_m: 90.0,
            gbs_altitude_m: 12.5,
            max_speed_mps: 50.0,
            ref_snr_db: 80.0,
        }
    }
}

impl ExperimentConfig {
    /// Setup of the SNR-distribution experiment: endpoints at (2, 2) and (8, 8) km.
    pub fn cdf_defaults() -> Self {
        ExperimentConfig {
            start: Point::new(2000.0, 2000.0),
            goal: Point::new(8000.0, 8000.0),
            ..Default::default()
        }
    }

    pub fn num_gbs(&self) -> usize {
        match self.gbs_count {
            GbsCount::Density(lambda) => ((lambda * self.region_km * self.region_km).round() as usize).max(1),
            GbsCount::Fixed(m) => m.max(1),
        }
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        if self.trials == 0 {
            return Err(PlanError::InvalidInput("trial count must be at least 1".into()));
        }
        if !(self.region_km > 0.0 && self.region_km.is_finite()) {
            return Err(PlanError::InvalidInput("region side must be positive".into()));
        }
        if let GbsCount::Density(l) = self.gbs_count {
            if !(l > 0.0 && l.is_finite()) {
                return Err(PlanError::InvalidInput("density must be positive".into()));
            }
        }
        if !(self.grid_step_db > 0.0) {
            return Err(PlanError::InvalidInput("grid step must be positive".into()));
        }
        Ok(())
    }
}

/// Deterministic random scenario for `trial_index`: GBSs i.i.d. uniform over
/// the `D x D` km square, endpoints and radio parameters from the config.
pub fn generate_scenario(config: &ExperimentConfig, trial_index: usize) -> Result<Scenario, PlanError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.base_seed);
    rng.set_stream(trial_index as u64);
    let side = config.region_km * 1000.0;
    let gbs = (0..config.num_gbs())
        .map(|_| Point::new(rng.gen_range(0.0..side), rng.gen_range(0.0..side)))
        .collect();
    Scenario::new(
        gbs,
        config.start,
        config.goal,
        config.uav_altitude_m,
        config.gbs_altitude_m,
        config.max_speed_mps,
        from_db(config.ref_snr_db),
    )
}

fn pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfRecord {
    pub lambda: f64,
    pub trial: usize,
    pub num_gbs: usize,
    pub max_snr_db: f64,
    pub sf_max_snr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfSummary {
    pub lambda: f64,
    pub median_max_snr_db: f64,
    pub median_sf_max_snr_db: f64,
    pub median_gain_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdfReport {
    pub records: Vec<CdfRecord>,
    pub summaries: Vec<CdfSummary>,
}

/// Median of a sample (mean of the two middle values for even sizes).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Empirical CDF as sorted `(value, F(value))` steps.
pub fn empirical_cdf(values: &[f64]) -> Vec<(f64, f64)> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.into_iter().enumerate().map(|(i, x)| (x, (i + 1) as f64 / n)).collect()
}

/// Largest feasible SNR target against the straight-flight limit for
/// `config.trials` scenarios at each density.
pub fn run_cdf_experiment(config: &ExperimentConfig, densities: &[f64], workers: usize) -> Result<CdfReport, PlanError> {
    config.validate()?;
    let mut jobs = Vec::new();
    for &lambda in densities {
        let cfg = ExperimentConfig {
            gbs_count: GbsCount::Density(lambda),
            ..config.clone()
        };
        cfg.validate()?;
        for trial in 0..config.trials {
            jobs.push((lambda, cfg.clone(), trial));
        }
    }
    let records: Result<Vec<CdfRecord>, PlanError> = pool(workers).install(|| {
        jobs.par_iter()
            .map(|(lambda, cfg, trial)| {
                let s = generate_scenario(cfg, *trial)?;
                Ok(CdfRecord {
                    lambda: *lambda,
                    trial: *trial,
                    num_gbs: s.num_gbs(),
                    max_snr_db: to_db(bottleneck_max_snr(&s)),
                    sf_max_snr_db: to_db(straight_flight_max_snr(&s)),
                })
            })
            .collect()
    });
    let mut records = records?;
    records.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.trial.cmp(&b.trial)));
    let mut summaries = Vec::new();
    for &lambda in densities {
        let of = |f: fn(&CdfRecord) -> f64| -> Vec<f64> {
            records.iter().filter(|r| r.lambda == lambda).map(f).collect()
        };
        let m = median(&of(|r| r.max_snr_db));
        let sf = median(&of(|r| r.sf_max_snr_db));
        summaries.push(CdfSummary {
            lambda,
            median_max_snr_db: m,
            median_sf_max_snr_db: sf,
            median_gain_db: m - sf,
        });
    }
    Ok(CdfReport { records, summaries })
}

impl CdfReport {
    pub fn trials_csv(&self) -> String {
        let mut out = String::from("lambda,trial,num_gbs,max_snr_db,sf_max_snr_db\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{:.6},{:.6}",
                r.lambda, r.trial, r.num_gbs, r.max_snr_db, r.sf_max_snr_db
            );
        }
        out
    }

    pub fn cdf_csv(&self) -> String {
        let mut out = String::from("lambda,kind,snr_db,cdf\n");
        for s in &self.summaries {
            for (kind, f) in [
                ("max", (|r: &CdfRecord| r.max_snr_db) as fn(&CdfRecord) -> f64),
                ("sf_max", |r: &CdfRecord| r.sf_max_snr_db),
            ] {
                let vals: Vec<f64> = self.records.iter().filter(|r| r.lambda == s.lambda).map(f).collect();
                for (x, p) in empirical_cdf(&vals) {
                    let _ = writeln!(out, "{},{},{:.6},{:.6}", s.lambda, kind, x, p);
                }
            }
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("lambda,median_max_snr_db,median_sf_max_snr_db,median_gain_db\n");
        for s in &self.summaries {
            let _ = writeln!(
                out,
                "{},{:.6},{:.6},{:.6}",
                s.lambda, s.median_max_snr_db, s.median_sf_max_snr_db, s.median_gain_db
            );
        }
        out
    }
}

/// Outcome of one method at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub snr_db: f64,
    pub method: String,
    /// `ok`, `infeasible`, `budget_exhausted` or `error`.
    pub status: String,
    pub completion_time_s: Option<f64>,
    pub length_m: Option<f64>,
    pub sequence: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub max_snr_db: f64,
    pub sf_max_snr_db: f64,
    pub rows: Vec<SweepRow>,
}

/// Grid points closer than this to the largest feasible SNR target are
/// dropped: at the exact limit two coverage disks are tangent and the
/// feasibility verdict is decided by rounding.
pub const GRID_EDGE_DB: f64 = 1e-9;

/// Default grid: `step` dB apart from 5 dB below the straight-flight limit,
/// strictly below the largest feasible SNR target.
pub fn default_snr_grid(sf_max_db: f64, max_db: f64, step: f64) -> Vec<f64> {
    let first = sf_max_db - 5.0;
    let mut grid = Vec::new();
    let mut k = 0usize;
    loop {
        let x = first + k as f64 * step;
        if x > max_db - GRID_EDGE_DB {
            break;
        }
        grid.push(x);
        k += 1;
    }
    grid
}

fn row_from(snr_db: f64, method: &str, result: Result<Plan, PlanError>) -> SweepRow {
    let (status, plan) = match result {
        Ok(p) => ("ok", Some(p)),
        Err(PlanError::Infeasible) | Err(PlanError::UnachievableSnr { .. }) => ("infeasible", None),
        Err(PlanError::BudgetExhausted { .. }) => ("budget_exhausted", None),
        Err(e) => {
            log::warn!("{method} at {snr_db:.2} dB failed: {e}");
            ("error", None)
        }
    };
    SweepRow {
        snr_db,
        method: method.to_string(),
        status: status.to_string(),
        completion_time_s: plan.as_ref().map(|p| p.completion_time()),
        length_m: plan.as_ref().map(|p| p.length()),
        sequence: plan.map(|p| p.sequence.indices().to_vec()).unwrap_or_default(),
    }
}

/// Completion time of every method across the SNR grid.
pub fn run_time_sweep(scenario: &Scenario, config: &ExperimentConfig, workers: usize) -> Result<SweepReport, PlanError> {
    config.validate()?;
    let max_db = to_db(bottleneck_max_snr(scenario));
    let sf_db = to_db(straight_flight_max_snr(scenario));
    let grid = config
        .snr_grid_db
        .clone()
        .unwrap_or_else(|| default_snr_grid(sf_db, max_db, config.grid_step_db));
    let run_exhaustive = scenario.num_gbs() <= config.exhaustive_max_gbs;
    let rows: Vec<Vec<SweepRow>> = pool(workers).install(|| {
        grid.par_iter()
            .map(|&db| {
                let target = from_db(db);
                let mut rows = vec![
                    row_from(db, "sf", straight_flight_plan(scenario, target)),
                    row_from(db, "m1", plan_method1(scenario, target)),
                ];
                for &q in &config.quant_levels {
                    rows.push(row_from(db, &format!("m2-Q{q}"), plan_method2(scenario, target, q)));
                }
                if run_exhaustive {
                    rows.push(row_from(db, "exhaustive", exhaustive_plan(scenario, target, config.path_budget)));
                }
                rows
            })
            .collect()
    });
    let mut rows: Vec<SweepRow> = rows.into_iter().flatten().collect();
    rows.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db).then_with(|| a.method.cmp(&b.method)));
    Ok(SweepReport {
        max_snr_db: max_db,
        sf_max_snr_db: sf_db,
        rows,
    })
}

impl SweepReport {
    pub fn csv(&self) -> String {
        let mut out = String::from("snr_db,method,status,completion_time_s,length_m,sequence\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        for r in &self.rows {
            let seq: Vec<String> = r.sequence.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(
                out,
                "{:.4},{},{},{},{},{}",
                r.snr_db,
                r.method,
                r.status,
                opt(r.completion_time_s),
                opt(r.length_m),
                seq.join("-")
            );
        }
        out
    }
}

/// Provenance block written next to experiment CSVs.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata<'a> {
    pub csv_version: u32,
    pub rng: &'static str,
    pub base_seed: u64,
    pub config: &'a ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub densities: Option<&'a [f64]>,
}

impl<'a> RunMetadata<'a> {
    pub fn new(config: &'a ExperimentConfig, densities: Option<&'a [f64]>) -> Self {
        RunMetadata {
            csv_version: CSV_VERSION,
            rng: RNG_NAME,
            base_seed: config.base_seed,
            config,
            densities,
        }
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), IoError> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}
