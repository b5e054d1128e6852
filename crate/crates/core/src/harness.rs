//! Seeded Monte Carlo sweeps over strategy, swarm size and wind scenario,
//! with per-cell summaries and CSV/JSON output.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Pairing, SimConfig, SweepSpec, WindKind};
use crate::engine::{run_mission, RunRecord, Termination};
use crate::error::HarnessError;
use crate::exploration::Strategy;
use crate::rng;

pub const RUNS_HEADER: [&str; 9] = [
    "strategy",
    "n",
    "seed",
    "wind_scenario",
    "t_detect_s",
    "t_total_s",
    "error_m",
    "handoffs",
    "reason",
];

pub const SUMMARY_HEADER: [&str; 20] = [
    "strategy",
    "n",
    "wind_scenario",
    "runs",
    "successes",
    "success_rate",
    "t_detect_mean",
    "t_detect_std",
    "t_detect_min",
    "t_detect_max",
    "t_total_mean",
    "t_total_std",
    "t_total_min",
    "t_total_max",
    "error_mean",
    "error_std",
    "error_min",
    "error_max",
    "handoffs_mean",
    "distance_mean",
];

pub const TIME_HEADER: [&str; 8] = [
    "strategy",
    "wind_scenario",
    "n",
    "t_detect_mean",
    "t_detect_std",
    "t_total_mean",
    "t_total_std",
    "successes",
];

pub const SCATTER_HEADER: [&str; 5] = ["strategy", "n", "wind_scenario", "seed", "error_m"];

pub const OUTPUT_FILES: [&str; 5] = [
    "runs.csv",
    "summary.csv",
    "time_vs_n.csv",
    "error_scatter.csv",
    "manifest.json",
];

/// Plume condition shared by every cell for a given wind index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Condition {
    pub wind_index: usize,
    pub source_xy: [f64; 2],
    pub wind_mean_deg: f64,
}

/// Draws condition `wind_index` from the root seed alone.
pub fn condition(spec: &SweepSpec, wind_index: usize) -> Condition {
    let base = &spec.base;
    if !spec.vary_plume {
        return Condition {
            wind_index,
            source_xy: base.source_xy,
            wind_mean_deg: base.wind_mean_deg,
        };
    }
    let mut s = rng::indexed_stream(base.seed, "plume-condition", wind_index as u64);
    let half = base.area_size / 2.0 - spec.source_margin;
    let x = s.random_range(-half..=half);
    let y = s.random_range(-half..=half);
    Condition {
        wind_index,
        source_xy: [x, y],
        wind_mean_deg: s.random_range(0.0..360.0),
    }
}

/// One scheduled mission.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlannedRun {
    pub strategy: Strategy,
    pub n: usize,
    pub wind_scenario: WindKind,
    pub run_index: usize,
    pub wind_index: usize,
    pub seed: u64,
    pub source_xy: [f64; 2],
    pub wind_mean_deg: f64,
}

impl PlannedRun {
    pub fn config(&self, base: &SimConfig) -> SimConfig {
        SimConfig {
            seed: self.seed,
            strategy: self.strategy,
            n: self.n,
            wind: self.wind_scenario,
            source_xy: self.source_xy,
            wind_mean_deg: self.wind_mean_deg,
            ..base.clone()
        }
    }
}

/// Per-run seed from the root seed and the run coordinates.
pub fn run_seed(
    root: u64,
    strategy: Strategy,
    n: usize,
    scenario: WindKind,
    run_index: usize,
    wind_index: usize,
) -> u64 {
    rng::combine(&[
        root,
        rng::fnv1a(strategy.label().as_bytes()),
        n as u64,
        rng::fnv1a(scenario.label().as_bytes()),
        run_index as u64,
        wind_index as u64,
    ])
}

/// Expands a spec into its runs in output order: scenario, strategy, n,
/// then run and wind index.
pub fn plan_runs(spec: &SweepSpec) -> Result<Vec<PlannedRun>, HarnessError> {
    spec.validate().map_err(|e| HarnessError::InvalidSweep(e.to_string()))?;
    let conditions: Vec<Condition> = (0..spec.m_w).map(|w| condition(spec, w)).collect();
    let pairs: Vec<(usize, usize)> = match spec.pairing {
        Pairing::Nested => (0..spec.m_s).map(|k| (k, k % spec.m_w)).collect(),
        Pairing::Crossed => (0..spec.m_s).flat_map(|k| (0..spec.m_w).map(move |w| (k, w))).collect(),
    };
    let mut plan = Vec::new();
    for &scenario in &spec.scenarios {
        for &strategy in &spec.strategies {
            for &n in &spec.n_values {
                for &(run_index, wind_index) in &pairs {
                    let c = conditions[wind_index];
                    plan.push(PlannedRun {
                        strategy,
                        n,
                        wind_scenario: scenario,
                        run_index,
                        wind_index,
                        seed: run_seed(spec.base.seed, strategy, n, scenario, run_index, wind_index),
                        source_xy: c.source_xy,
                        wind_mean_deg: c.wind_mean_deg,
                    });
                }
            }
        }
    }
    let mut seeds: Vec<u64> = plan.iter().map(|r| r.seed).collect();
    seeds.sort_unstable();
    if seeds.windows(2).any(|w| w[0] == w[1]) {
        return Err(HarnessError::InvalidSweep("derived run seeds collide".into()));
    }
    Ok(plan)
}

/// The CSV view of a run record.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub strategy: Strategy,
    pub n: usize,
    pub seed: u64,
    pub wind_scenario: WindKind,
    pub t_detect: Option<f64>,
    pub t_total: Option<f64>,
    pub error: Option<f64>,
    pub handoffs: usize,
    pub reason: Termination,
    /// Mean path length per agent. Not part of runs.csv.
    pub mean_distance: Option<f64>,
}

impl From<&RunRecord> for RunRow {
    fn from(r: &RunRecord) -> Self {
        let mean_distance = (!r.distance.is_empty()).then(|| r.distance.iter().sum::<f64>() / r.distance.len() as f64);
        Self {
            strategy: r.strategy,
            n: r.n,
            seed: r.seed,
            wind_scenario: r.wind_scenario,
            t_detect: r.t_detect,
            t_total: r.t_total,
            error: r.error,
            handoffs: r.handoffs,
            reason: r.reason,
            mean_distance,
        }
    }
}

impl RunRow {
    pub fn succeeded(&self) -> bool {
        self.reason == Termination::Done
    }
}

/// Statistics of one sample; `None` when it is empty. `std` is the
/// population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k;
        Some(Self {
            mean,
            std: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

/// Aggregate of one (strategy, n, wind scenario) cell. Timing and error
/// statistics use successful runs only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub strategy: Strategy,
    pub n: usize,
    pub wind_scenario: WindKind,
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub t_detect: Option<Stats>,
    pub t_total: Option<Stats>,
    pub error: Option<Stats>,
    pub handoffs_mean: Option<f64>,
    pub distance_mean: Option<f64>,
}

/// Groups rows into cells in order of first appearance.
pub fn summarise(rows: &[RunRow]) -> Vec<CellSummary> {
    let mut keys: Vec<(Strategy, usize, WindKind)> = Vec::new();
    for r in rows {
        let k = (r.strategy, r.n, r.wind_scenario);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(strategy, n, wind_scenario)| {
            let cell: Vec<&RunRow> = rows
                .iter()
                .filter(|r| r.strategy == strategy && r.n == n && r.wind_scenario == wind_scenario)
                .collect();
            let ok: Vec<&RunRow> = cell.iter().copied().filter(|r| r.succeeded()).collect();
            let pick = |f: fn(&RunRow) -> Option<f64>| ok.iter().filter_map(|r| f(r)).collect::<Vec<f64>>();
            let handoffs: Vec<f64> = ok.iter().map(|r| r.handoffs as f64).collect();
            CellSummary {
                strategy,
                n,
                wind_scenario,
                runs: cell.len(),
                successes: ok.len(),
                success_rate: ok.len() as f64 / cell.len() as f64,
                t_detect: Stats::of(&pick(|r| r.t_detect)),
                t_total: Stats::of(&pick(|r| r.t_total)),
                error: Stats::of(&pick(|r| r.error)),
                handoffs_mean: Stats::of(&handoffs).map(|s| s.mean),
                distance_mean: Stats::of(&pick(|r| r.mean_distance)).map(|s| s.mean),
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub plan: Vec<PlannedRun>,
    pub records: Vec<RunRecord>,
    pub summaries: Vec<CellSummary>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| !r.succeeded()).count()
    }

    pub fn rows(&self) -> Vec<RunRow> {
        self.records.iter().map(RunRow::from).collect()
    }
}

/// Runs every planned mission on a pool of `jobs` threads (0 = all cores).
/// Output order follows the plan regardless of scheduling. A run that fails
/// hard is recorded with reason `hard_failure`.
pub fn run_sweep(spec: &SweepSpec, jobs: usize) -> Result<SweepResult, HarnessError> {
    let plan = plan_runs(spec)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| HarnessError::InvalidSweep(e.to_string()))?;
    let records: Vec<RunRecord> = pool.install(|| {
        plan.par_iter()
            .map(|p| {
                let cfg = p.config(&spec.base);
                run_mission(&cfg).unwrap_or_else(|_| RunRecord::hard_failure(&cfg))
            })
            .collect()
    });
    let rows: Vec<RunRow> = records.iter().map(RunRow::from).collect();
    let summaries = summarise(&rows);
    Ok(SweepResult {
        plan,
        records,
        summaries,
    })
}

fn num(v: f64) -> String {
    // Display prints the shortest string that parses back to the same bits
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn run_fields(r: &RunRow) -> Vec<String> {
    vec![
        r.strategy.label().to_string(),
        r.n.to_string(),
        r.seed.to_string(),
        r.wind_scenario.label().to_string(),
        opt(r.t_detect),
        opt(r.t_total),
        opt(r.error),
        r.handoffs.to_string(),
        r.reason.label().to_string(),
    ]
}

fn stats_fields(s: Option<Stats>) -> [String; 4] {
    match s {
        Some(s) => [num(s.mean), num(s.std), num(s.min), num(s.max)],
        None => Default::default(),
    }
}

fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<(), HarnessError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    artifact: &'static str,
    version: &'static str,
    root_seed: u64,
    runs_header: &'static [&'static str],
    files: &'static [&'static str],
    spec: &'a SweepSpec,
    runs: &'a [PlannedRun],
}

fn write_all(result: &SweepResult, spec: &SweepSpec, dir: &Path) -> Result<(), HarnessError> {
    let rows = result.rows();
    write_csv(&dir.join("runs.csv"), &RUNS_HEADER, rows.iter().map(run_fields))?;
    write_csv(
        &dir.join("summary.csv"),
        &SUMMARY_HEADER,
        result.summaries.iter().map(|c| {
            let mut f = vec![
                c.strategy.label().to_string(),
                c.n.to_string(),
                c.wind_scenario.label().to_string(),
                c.runs.to_string(),
                c.successes.to_string(),
                num(c.success_rate),
            ];
            f.extend(stats_fields(c.t_detect));
            f.extend(stats_fields(c.t_total));
            f.extend(stats_fields(c.error));
            f.push(opt(c.handoffs_mean));
            f.push(opt(c.distance_mean));
            f
        }),
    )?;
    write_csv(
        &dir.join("time_vs_n.csv"),
        &TIME_HEADER,
        result.summaries.iter().map(|c| {
            vec![
                c.strategy.label().to_string(),
                c.wind_scenario.label().to_string(),
                c.n.to_string(),
                opt(c.t_detect.map(|s| s.mean)),
                opt(c.t_detect.map(|s| s.std)),
                opt(c.t_total.map(|s| s.mean)),
                opt(c.t_total.map(|s| s.std)),
                c.successes.to_string(),
            ]
        }),
    )?;
    write_csv(
        &dir.join("error_scatter.csv"),
        &SCATTER_HEADER,
        rows.iter().filter(|r| r.succeeded()).map(|r| {
            vec![
                r.strategy.label().to_string(),
                r.n.to_string(),
                r.wind_scenario.label().to_string(),
                r.seed.to_string(),
                opt(r.error),
            ]
        }),
    )?;
    let manifest = Manifest {
        artifact: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        root_seed: spec.base.seed,
        runs_header: &RUNS_HEADER,
        files: &OUTPUT_FILES,
        spec,
        runs: &result.plan,
    };
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    fs::write(dir.join("manifest.json"), json)?;
    Ok(())
}

/// Writes every output file into `dir`, creating it if needed. On failure
/// the files written so far are removed.
pub fn emit_outputs(result: &SweepResult, spec: &SweepSpec, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir)?;
    let paths: Vec<PathBuf> = OUTPUT_FILES.iter().map(|f| dir.join(f)).collect();
    match write_all(result, spec, dir) {
        Ok(()) => Ok(paths),
        Err(e) => {
            for p in &paths {
                let _ = fs::remove_file(p);
            }
            Err(e)
        }
    }
}

fn parse_opt(field: &str, what: &str) -> Result<Option<f64>, HarnessError> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse()
        .map(Some)
        .map_err(|_| HarnessError::Malformed(format!("bad {what} `{field}`")))
}

fn parse_field<T: std::str::FromStr>(field: &str, what: &str) -> Result<T, HarnessError> {
    field
        .parse()
        .map_err(|_| HarnessError::Malformed(format!("bad {what} `{field}`")))
}

/// Reads runs.csv back into rows. `mean_distance` is not stored and comes
/// back as `None`.
pub fn read_runs_csv(path: &Path) -> Result<Vec<RunRow>, HarnessError> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header != RUNS_HEADER {
        return Err(HarnessError::Malformed(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let f = |i: usize| rec.get(i).unwrap_or("");
        rows.push(RunRow {
            strategy: f(0).parse().map_err(HarnessError::Malformed)?,
            n: parse_field(f(1), "n")?,
            seed: parse_field(f(2), "seed")?,
            wind_scenario: f(3).parse().map_err(HarnessError::Malformed)?,
            t_detect: parse_opt(f(4), "t_detect_s")?,
            t_total: parse_opt(f(5), "t_total_s")?,
            error: parse_opt(f(6), "error_m")?,
            handoffs: parse_field(f(7), "handoffs")?,
            reason: f(8).parse().map_err(HarnessError::Malformed)?,
            mean_distance: None,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SweepSpec {
        SweepSpec {
            strategies: vec![Strategy::Brownian],
            n_values: vec![4],
            m_s: 1,
            m_w: 1,
            ..Default::default()
        }
    }

    #[test]
    fn stats_of_known_sample() {
        let s = Stats::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert_eq!(s.std, 1.25f64.sqrt());
        assert_eq!((s.min, s.max), (1.0, 4.0));
        assert_eq!(Stats::of(&[]), None);
    }

    #[test]
    fn nested_and_crossed_plan_sizes() {
        let mut spec = SweepSpec {
            strategies: Strategy::ALL.to_vec(),
            n_values: vec![2, 4],
            m_s: 5,
            m_w: 3,
            ..Default::default()
        };
        let nested = plan_runs(&spec).unwrap();
        assert_eq!(nested.len(), 3 * 2 * 5);
        assert_eq!(
            nested.iter().take(5).map(|p| p.wind_index).collect::<Vec<_>>(),
            vec![0, 1, 2, 0, 1]
        );
        spec.pairing = Pairing::Crossed;
        assert_eq!(plan_runs(&spec).unwrap().len(), 3 * 2 * 15);
    }

    #[test]
    fn conditions_are_shared_across_cells() {
        let spec = SweepSpec {
            strategies: vec![Strategy::Scan, Strategy::Brownian],
            n_values: vec![2, 8],
            m_s: 4,
            m_w: 4,
            ..Default::default()
        };
        let plan = plan_runs(&spec).unwrap();
        for p in &plan {
            let c = condition(&spec, p.wind_index);
            assert_eq!(p.source_xy, c.source_xy);
            assert_eq!(p.wind_mean_deg, c.wind_mean_deg);
            let half = spec.base.area_size / 2.0 - spec.source_margin;
            assert!(c.source_xy.iter().all(|v| v.abs() <= half));
        }
    }

    #[test]
    fn single_run_summary_equals_record() {
        let spec = tiny();
        let res = run_sweep(&spec, 1).unwrap();
        assert_eq!(res.records.len(), 1);
        let r = &res.records[0];
        let c = &res.summaries[0];
        assert_eq!(c.runs, 1);
        if r.succeeded() {
            assert_eq!(c.t_detect.unwrap().mean, r.t_detect.unwrap());
            assert_eq!(c.error.unwrap().mean, r.error.unwrap());
            assert_eq!(c.error.unwrap().std, 0.0);
            assert_eq!(c.success_rate, 1.0);
        } else {
            assert_eq!(c.success_rate, 0.0);
            assert!(c.error.is_none());
        }
    }

    #[test]
    fn invalid_spec_is_rejected() {
        let spec = SweepSpec { m_s: 0, ..tiny() };
        assert!(matches!(plan_runs(&spec), Err(HarnessError::InvalidSweep(_))));
    }

    #[test]
    fn empty_outputs_have_headers_only() {
        let dir = tempfile::tempdir().unwrap();
        let result = SweepResult {
            plan: vec![],
            records: vec![],
            summaries: vec![],
        };
        emit_outputs(&result, &tiny(), dir.path()).unwrap();
        let runs = fs::read_to_string(dir.path().join("runs.csv")).unwrap();
        assert_eq!(runs, format!("{}\n", RUNS_HEADER.join(",")));
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["runs"].as_array().unwrap().len(), 0);
        assert!(read_runs_csv(&dir.path().join("runs.csv")).unwrap().is_empty());
    }

    #[test]
    fn failed_rows_have_empty_metrics() {
        let row = RunRow {
            strategy: Strategy::Scan,
            n: 3,
            seed: 7,
            wind_scenario: WindKind::Constant,
            t_detect: Some(12.0),
            t_total: None,
            error: None,
            handoffs: 51,
            reason: Termination::LocalisationGuard,
            mean_distance: None,
        };
        assert_eq!(
            run_fields(&row).join(","),
            "scan,3,7,constant,12,,,51,localisation_guard"
        );
    }

    #[test]
    fn unwritable_directory_leaves_no_files() {
        let dir = tempfile::tempdir().unwrap();
        // a directory named like the manifest makes the final write fail
        fs::create_dir(dir.path().join("manifest.json")).unwrap();
        let res = run_sweep(&tiny(), 1).unwrap();
        assert!(emit_outputs(&res, &tiny(), dir.path()).is_err());
        for f in &OUTPUT_FILES[..4] {
            assert!(!dir.path().join(f).exists(), "{f} left behind");
        }
    }
}
