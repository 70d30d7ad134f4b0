use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use super::cluster::{accuracy, cluster_from_z, relative_errors};
use super::config::SuiteConfig;
use super::synthetic::gen_synthetic;
use super::truth::ground_truth;
use crate::baselines::{solve_adm_lrr, solve_apg_lrr, solve_ladm_lrr, AdmConfig, ApgConfig};
use crate::error::{Error, Result};
use crate::ladmap::{ConvergenceTrace, LadmapConfig, SolveStatus};
use crate::linalg::{DenseMatrix, SkinnySvd};
use crate::lrr::{solve_lrr, LrrProblem, SvdMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// LADMAP with dense `N` (standard mode).
    Ladmap,
    /// LADMAP with the implicit `N` (accelerated mode).
    LadmapAcc,
    Adm,
    Ladm,
    Apg,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Apg,
        Method::Adm,
        Method::Ladm,
        Method::Ladmap,
        Method::LadmapAcc,
    ];

    /// Command-line spelling.
    pub fn key(self) -> &'static str {
        match self {
            Method::Ladmap => "ladmap",
            Method::LadmapAcc => "ladmap-acc",
            Method::Adm => "adm",
            Method::Ladm => "ladm",
            Method::Apg => "apg",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Ladmap => "LADMAP",
            Method::LadmapAcc => "LADMAP(A)",
            Method::Adm => "ADM",
            Method::Ladm => "LADM",
            Method::Apg => "APG",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.key().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown method {s:?}; expected one of ladmap, ladmap-acc, adm, ladm, apg"
                ))
            })
    }
}

/// Per-method parameters. The baselines take their tolerances and iteration
/// cap from the LADMAP settings.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSettings {
    pub ladmap: LadmapConfig,
    pub adm: AdmConfig,
    pub apg: ApgConfig,
}

impl MethodSettings {
    pub fn from_ladmap(ladmap: LadmapConfig) -> Self {
        let adm = AdmConfig {
            eps1: ladmap.eps1,
            eps2: ladmap.eps2,
            max_iter: ladmap.max_iter,
            track_objective: ladmap.track_objective,
            ..AdmConfig::default()
        };
        let apg = ApgConfig {
            eps1: ladmap.eps1,
            eps2: ladmap.eps2,
            max_iter: ladmap.max_iter,
            track_objective: ladmap.track_objective,
            ..ApgConfig::default()
        };
        Self { ladmap, adm, apg }
    }
}

impl Default for MethodSettings {
    fn default() -> Self {
        Self::from_ladmap(LadmapConfig::default())
    }
}

#[derive(Debug, Clone)]
pub struct MethodOutput {
    pub e: DenseMatrix,
    pub z: SkinnySvd,
    pub trace: ConvergenceTrace,
    pub status: SolveStatus,
    pub iterations: usize,
}

pub fn run_method(method: Method, problem: &LrrProblem, settings: &MethodSettings) -> Result<MethodOutput> {
    let lrr = |mode| {
        solve_lrr(problem, &settings.ladmap, mode).map(|s| MethodOutput {
            e: s.e,
            z: s.z,
            trace: s.trace,
            status: s.status,
            iterations: s.iterations,
        })
    };
    let baseline = |s: crate::baselines::BaselineSolution| MethodOutput {
        e: s.e,
        z: s.z,
        trace: s.trace,
        status: s.status,
        iterations: s.iterations,
    };
    match method {
        Method::Ladmap => lrr(SvdMode::Standard),
        Method::LadmapAcc => lrr(SvdMode::Accelerated),
        Method::Ladm => solve_ladm_lrr(problem, &settings.ladmap).map(|s| MethodOutput {
            e: s.e,
            z: s.z,
            trace: s.trace,
            status: s.status,
            iterations: s.iterations,
        }),
        Method::Adm => solve_adm_lrr(problem, &settings.adm).map(baseline),
        Method::Apg => solve_apg_lrr(problem, &settings.apg).map(baseline),
    }
}

/// One line of the comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub spec: String,
    pub seed: u64,
    pub method: Method,
    pub time_s: f64,
    pub iterations: usize,
    pub rel_err_z: f64,
    pub rel_err_e: f64,
    pub accuracy: f64,
    pub feasibility: f64,
    pub status: Option<SolveStatus>,
    /// Set when the method failed; the numeric fields are then NaN.
    pub error: Option<String>,
}

impl BenchRow {
    fn failed(spec: String, seed: u64, method: Method, err: &Error) -> Self {
        Self {
            spec,
            seed,
            method,
            time_s: f64::NAN,
            iterations: 0,
            rel_err_z: f64::NAN,
            rel_err_e: f64::NAN,
            accuracy: f64::NAN,
            feasibility: f64::NAN,
            status: None,
            error: Some(err.to_string()),
        }
    }
}

/// Generates each spec once, establishes its ground truth, runs every method
/// on the same data and scores it. Method failures become rows with `error`
/// set; only data or ground-truth failures abort.
pub fn run_benchmark(suite: &SuiteConfig) -> Result<Vec<BenchRow>> {
    let settings = MethodSettings::from_ladmap(suite.ladmap.clone());
    let mut rows = Vec::new();
    for spec in &suite.specs {
        let ds = gen_synthetic(spec)?;
        let problem = LrrProblem::new(ds.x, suite.mu)?;
        log::info!("{} seed {}: ground truth", spec.label(), spec.seed);
        let gt = ground_truth(&problem, suite.cache_dir.as_deref())?;
        for &method in &suite.methods {
            log::info!("{} seed {}: {method}", spec.label(), spec.seed);
            let started = Instant::now();
            let scored = run_method(method, &problem, &settings).and_then(|out| {
                let time_s = started.elapsed().as_secs_f64();
                let (rel_err_z, rel_err_e) = relative_errors(&out.e, &out.z, &gt.e, &gt.z)?;
                let labels = cluster_from_z(&out.z, spec.s, suite.cluster_seed)?;
                Ok(BenchRow {
                    spec: spec.label(),
                    seed: spec.seed,
                    method,
                    time_s,
                    iterations: out.iterations,
                    rel_err_z,
                    rel_err_e,
                    accuracy: accuracy(&labels, &ds.labels)?,
                    feasibility: problem.feasibility(&out.e, &out.z),
                    status: Some(out.status),
                    error: None,
                })
            });
            rows.push(scored.unwrap_or_else(|e| BenchRow::failed(spec.label(), spec.seed, method, &e)));
        }
    }
    Ok(rows)
}

fn status_name(row: &BenchRow) -> &'static str {
    match (row.status, &row.error) {
        (_, Some(_)) => "failed",
        (Some(SolveStatus::Converged), _) => "converged",
        (Some(SolveStatus::IterationCapped), _) => "capped",
        (None, None) => "",
    }
}

/// Aligned plain-text table with errors in percent.
pub fn format_table(rows: &[BenchRow]) -> String {
    let header = [
        "spec", "seed", "method", "time(s)", "iter", "errZ(%)", "errE(%)", "acc(%)", "status",
    ];
    let cells: Vec<[String; 9]> = rows
        .iter()
        .map(|r| {
            [
                r.spec.clone(),
                r.seed.to_string(),
                r.method.to_string(),
                format!("{:.4}", r.time_s),
                r.iterations.to_string(),
                format!("{:.4}", 100.0 * r.rel_err_z),
                format!("{:.4}", 100.0 * r.rel_err_e),
                format!("{:.1}", 100.0 * r.accuracy),
                status_name(r).to_string(),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, row: &[&str]| {
        let parts: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i < 3 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        out.push_str(parts.join("  ").trim_end());
        out.push('\n');
    };
    line(&mut out, &header);
    for row in &cells {
        line(&mut out, &row.each_ref().map(String::as_str));
    }
    out
}

pub fn write_csv<W: Write>(rows: &[BenchRow], mut out: W) -> Result<()> {
    writeln!(
        out,
        "spec,seed,method,time_s,iterations,rel_err_z,rel_err_e,accuracy,feasibility,status,error"
    )?;
    for r in rows {
        let error = r.error.as_deref().unwrap_or("").replace(['"', '\n'], " ");
        writeln!(
            out,
            "\"{}\",{},{},{:.6},{},{:e},{:e},{:.6},{:e},{},\"{}\"",
            r.spec,
            r.seed,
            r.method.key(),
            r.time_s,
            r.iterations,
            r.rel_err_z,
            r.rel_err_e,
            r.accuracy,
            r.feasibility,
            status_name(r),
            error
        )?;
    }
    Ok(())
}
