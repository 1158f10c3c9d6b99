use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use brp_core::offline::{optimal_cost, static_optimal};
use brp_core::{ratio, BrpError, CompetitiveRatio};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::runner::{execute, Execution, Fault, InvariantTally};
use crate::spec::{Oracle, RunSpec, Settings};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Costs {
    pub comm: u64,
    pub mig: u64,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub alg: String,
    pub source: String,
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub alpha: u64,
    pub delta: u32,
    pub seed: u64,
    pub steps: usize,
    pub online: Costs,
    pub oracle: String,
    pub off_cost: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_error: Option<String>,
    /// Exact ratio as `p/q`, or `inf` / `undefined`.
    pub ratio: Option<String>,
    pub ratio_decimal: Option<f64>,
    pub invariants: BTreeMap<String, InvariantTally>,
    pub invariants_hold: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_log: Option<String>,
    pub details: Value,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }
}

/// Offline cost on the realized sequence, or the reason there is none.
fn offline_cost(exec: &Execution) -> Option<Result<u64, BrpError>> {
    let requests = exec.transcript.requests();
    let params = exec.spec.offline_params();
    match exec.spec.oracle {
        Oracle::None => None,
        Oracle::Dp => Some(optimal_cost(&requests, &params, &exec.offline_initial).map(|s| s.cost)),
        Oracle::Static => Some(static_optimal(&requests, &params, &exec.offline_initial).map(|s| s.1)),
    }
}

pub fn build_report(exec: &Execution, step_log: Option<&Path>) -> Report {
    let spec = &exec.spec;
    let p = &spec.params;
    let ledger = &exec.transcript.ledger;
    let (off_cost, oracle_error) = match offline_cost(exec) {
        None => (None, None),
        Some(Ok(cost)) => (Some(cost), None),
        Some(Err(e)) => (None, Some(e.to_string())),
    };
    let r = off_cost.map(|off| ratio(ledger.total(), off));
    Report {
        alg: spec.alg.name().into(),
        source: spec.source.name().into(),
        n: p.n,
        k: p.k,
        l: p.l,
        alpha: p.alpha,
        delta: p.delta,
        seed: spec.seed,
        steps: exec.transcript.steps.len(),
        online: Costs { comm: ledger.comm, mig: ledger.mig, total: ledger.total() },
        oracle: spec.oracle.name().into(),
        off_cost,
        oracle_error,
        ratio: r.map(|r| r.to_string()),
        ratio_decimal: r.and_then(|r| match r {
            CompetitiveRatio::Finite(_) => Some(r.as_f64()),
            _ => None,
        }),
        invariants: exec.invariants.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        invariants_hold: exec.invariants_hold(),
        step_log: step_log.map(|p| p.display().to_string()),
        details: exec.details.clone(),
    }
}

fn step_log_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".steps");
    PathBuf::from(name)
}

pub struct RunOutcome {
    pub report: Report,
    pub execution: Execution,
}

/// Runs one spec. With `out` set, the report goes to that file and the step
/// records to a `.steps` file beside it.
pub fn cmd_run(spec: &RunSpec) -> Result<RunOutcome, CliError> {
    let execution = execute(spec, None)?;
    let log = spec.out.as_deref().map(step_log_path);
    let report = build_report(&execution, log.as_deref());
    if let (Some(out), Some(log)) = (&spec.out, &log) {
        write_file(out, &report.to_json())?;
        write_file(log, &execution.transcript.to_lines())?;
    }
    Ok(RunOutcome { report, execution })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOutcome {
    pub steps: usize,
    pub invariants: BTreeMap<&'static str, InvariantTally>,
}

impl VerifyOutcome {
    pub fn passed(&self) -> bool {
        self.invariants.values().all(|t| t.failures == 0)
    }

    /// One line per invariant, then the state dump at the earliest failure.
    pub fn render(&self) -> String {
        let mut text = String::new();
        for (name, t) in &self.invariants {
            match t.first_step {
                None => writeln!(text, "invariant {name}: PASS ({} checks)", t.checked),
                Some(step) => writeln!(
                    text,
                    "invariant {name}: FAIL ({} of {} checks, first at step {step}: {})",
                    t.failures,
                    t.checked,
                    t.first_message.as_deref().unwrap_or("")
                ),
            }
            .expect("writing to a string");
        }
        let earliest = self
            .invariants
            .iter()
            .filter_map(|(name, t)| Some((t.first_step?, *name, t.first_dump.as_deref()?)))
            .min();
        if let Some((step, name, dump)) = earliest {
            writeln!(text, "state after step {step} ({name}):\n{dump}").expect("writing to a string");
        }
        text
    }
}

pub fn cmd_verify(spec: &RunSpec) -> Result<VerifyOutcome, CliError> {
    cmd_verify_with(spec, None)
}

/// `cmd_verify` with a state corruption injected at one step.
pub fn cmd_verify_with(spec: &RunSpec, fault: Option<Fault>) -> Result<VerifyOutcome, CliError> {
    if !matches!(spec.alg, crate::spec::AlgSpec::Crep | crate::spec::AlgSpec::Greedy { .. }) {
        return Err(CliError::Spec(format!("{} has no invariants to verify", spec.alg.name())));
    }
    let execution = execute(spec, fault)?;
    Ok(VerifyOutcome { steps: execution.transcript.steps.len(), invariants: execution.invariants })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alg: String,
    pub source: String,
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub alpha: u64,
    pub seed: u64,
    pub on_cost: Option<u64>,
    pub off_cost: Option<u64>,
    pub ratio: Option<String>,
    pub error: Option<String>,
}

impl SweepRow {
    fn from_cell(spec: &RunSpec) -> (Self, bool) {
        let p = &spec.params;
        let mut row = SweepRow {
            alg: spec.alg.name().into(),
            source: spec.source.name().into(),
            n: p.n,
            k: p.k,
            l: p.l,
            alpha: p.alpha,
            seed: spec.seed,
            on_cost: None,
            off_cost: None,
            ratio: None,
            error: None,
        };
        let exec = match execute(spec, None) {
            Ok(exec) => exec,
            Err(e) => {
                row.error = Some(e.to_string());
                return (row, false);
            }
        };
        let report = build_report(&exec, None);
        row.on_cost = Some(report.online.total);
        row.off_cost = report.off_cost;
        row.ratio = report.ratio;
        let broken: Vec<String> = report
            .invariants
            .iter()
            .filter(|(_, t)| t.failures > 0)
            .map(|(name, t)| format!("{name} failed {} times", t.failures))
            .collect();
        row.error = if broken.is_empty() { report.oracle_error } else { Some(broken.join("; ")) };
        (row, broken.is_empty())
    }
}

pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    /// False if any cell broke an invariant.
    pub invariants_hold: bool,
}

impl SweepOutcome {
    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            writer.serialize(row).map_err(|e| CliError::Io(e.to_string()))?;
        }
        if self.rows.is_empty() {
            writer
                .write_record(["alg", "source", "n", "k", "l", "alpha", "seed", "on_cost", "off_cost", "ratio", "error"])
                .map_err(|e| CliError::Io(e.to_string()))?;
        }
        let bytes = writer.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Runs every cell of the grid in parallel. Cells that fail are recorded in
/// their row and the sweep goes on.
pub fn cmd_sweep(settings: &Settings) -> Result<SweepOutcome, CliError> {
    let specs = settings.expand()?;
    let mut cells: Vec<(RunSpec, (SweepRow, bool))> = specs
        .into_par_iter()
        .map(|spec| {
            let row = SweepRow::from_cell(&spec);
            (spec, row)
        })
        .collect();
    cells.sort_by(|a, b| a.0.key().cmp(&b.0.key()));
    let invariants_hold = cells.iter().all(|(_, (_, ok))| *ok);
    Ok(SweepOutcome { rows: cells.into_iter().map(|(_, (row, _))| row).collect(), invariants_hold })
}

/// Runs every listed algorithm on the same source and seed. Without an
/// explicit `alg`, all algorithms that fit the geometry take part.
pub fn cmd_compare(settings: &Settings) -> Result<Vec<Report>, CliError> {
    let mut settings = settings.clone();
    let explicit = settings.get("alg").is_some();
    if !explicit {
        settings.set("alg", "crep,greedy,threshold,null")?;
    }
    let mut specs = Vec::new();
    for alg in settings.get("alg").unwrap_or_default().split(',') {
        let mut single = settings.clone();
        single.set("alg", alg.trim())?;
        if !explicit {
            // Augmentation belongs to crep alone.
            let delta = if alg == "crep" { settings.get("delta").unwrap_or("4").to_string() } else { "1".into() };
            single.set("delta", &delta)?;
        }
        match single.expand() {
            Ok(cells) => specs.extend(cells),
            Err(e) if explicit => return Err(e),
            Err(_) => {}
        }
    }
    if specs.is_empty() {
        return Err(CliError::Spec("no algorithm fits this geometry".into()));
    }
    let mut reports: Vec<(RunSpec, Report)> = specs
        .into_par_iter()
        .map(|spec| {
            let exec = execute(&spec, None)?;
            Ok((spec, build_report(&exec, None)))
        })
        .collect::<Result<_, BrpError>>()?;
    reports.sort_by(|a, b| a.0.key().cmp(&b.0.key()));
    Ok(reports.into_iter().map(|(_, r)| r).collect())
}
