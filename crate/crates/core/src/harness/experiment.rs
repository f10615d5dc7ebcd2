//! Sweeps over `s` and damping profiles: simulate, fit, classify, and
//! optionally scan the resolvent, then write one bundle.

use std::path::Path;

use serde::Serialize;

use crate::damping::{make_profile, DampingKind};
use crate::error::Result;
use crate::harness::config::{ExperimentConfig, Validate};
use crate::harness::fit::{classify_decay, Classification, WindowPolicy, CLASSIFICATION_MARGIN, NO_DECAY_RATIO};
use crate::harness::report::{line_plot_svg, param_value_csv, Bundle, Format, Manifest, Series};
use crate::par;
use crate::resolvent::{assemble_generator_with_budget, lambda_ladder, resolvent_scan, ScanResult};
use crate::simulator::{simulate, EnergyTrace, TraceMetadata};
use crate::spectral::{Grid, GridSpec};
use crate::Error;

#[derive(Debug, Clone, Serialize)]
pub struct ResolventSummary {
    pub grid: GridSpec,
    pub exponent: f64,
    pub residual: f64,
    pub upper_half_spread: f64,
    pub lambda_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub name: String,
    pub s: f64,
    pub damping_index: usize,
    pub damping: DampingKind,
    pub grid: GridSpec,
    pub files: Vec<String>,
    pub metadata: Option<TraceMetadata>,
    pub classification: Option<Classification>,
    pub resolvent: Option<ResolventSummary>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub window_policy: WindowPolicy,
    pub classification_margin: f64,
    pub no_decay_ratio: f64,
    pub runs: Vec<RunReport>,
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub manifest: Manifest,
    pub traces: Vec<Option<EnergyTrace>>,
}

impl ExperimentOutcome {
    pub fn failed(&self) -> bool {
        !self.manifest.failures.is_empty()
    }
}

struct Member {
    report: RunReport,
    trace: Option<EnergyTrace>,
    scan: Option<ScanResult>,
}

/// Display `s` compactly for file names: `1`, `1.5`.
fn s_label(s: f64) -> String {
    format!("{s}")
}

fn run_member(config: &ExperimentConfig, s: f64, j: usize, kind: &DampingKind) -> Member {
    let grid_spec = config.grid_for(s);
    let name = format!("s{}_d{j}_{}", s_label(s), kind.name());
    let mut report = RunReport {
        name,
        s,
        damping_index: j,
        damping: kind.clone(),
        grid: grid_spec,
        files: Vec::new(),
        metadata: None,
        classification: None,
        resolvent: None,
        errors: Vec::new(),
    };
    let mut trace = None;
    let sim = (|| -> Result<(EnergyTrace, TraceMetadata)> {
        let grid = Grid::from_spec(grid_spec)?;
        let gamma = make_profile(kind, grid.clone())?;
        let initial = config.initial.build(grid.clone())?;
        let tr = simulate(&initial, &gamma, s, config.stepping)?;
        let meta = TraceMetadata::new(&tr, &grid, Some(&config.initial), Some(config.stepping));
        Ok((tr, meta))
    })();
    match sim {
        Ok((tr, meta)) => {
            report.metadata = Some(meta);
            match classify_decay(&tr, config.window) {
                Ok(c) => report.classification = Some(c),
                Err(e) => report.errors.push(format!("classification: {e}")),
            }
            trace = Some(tr);
        }
        Err(e) => report.errors.push(format!("simulation: {e}")),
    }
    let mut scan = None;
    if let Some(section) = &config.resolvent {
        let spec = section.grid.unwrap_or(config.grid);
        let res = (|| -> Result<ScanResult> {
            let grid = Grid::from_spec(spec)?;
            let gamma = make_profile(kind, grid.clone())?;
            let gen = assemble_generator_with_budget(&gamma, s, &grid, section.max_points)?;
            resolvent_scan(&gen, &lambda_ladder(section.lambda_max, section.count))
        })();
        match res {
            Ok(r) => {
                report.resolvent = Some(ResolventSummary {
                    grid: spec,
                    exponent: r.exponent,
                    residual: r.residual,
                    upper_half_spread: r.upper_half_spread(),
                    lambda_max: section.lambda_max,
                });
                scan = Some(r);
            }
            Err(e) => report.errors.push(format!("resolvent: {e}")),
        }
    }
    Member { report, trace, scan }
}

/// Run every `(s, damping)` member of the sweep in parallel and write the bundle
/// into `out`. Per-member errors are recorded in the manifest rather than
/// aborting; configuration errors abort before anything is written.
pub fn run_experiment(config: &ExperimentConfig, out: &Path, format: Format) -> Result<ExperimentOutcome> {
    run_experiment_as("sweep", config, out, format)
}

/// [`run_experiment`] with the command name recorded in the manifest.
pub fn run_experiment_as(command: &str, config: &ExperimentConfig, out: &Path, format: Format) -> Result<ExperimentOutcome> {
    let problems = config.problems();
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    let mut bundle = Bundle::create(out, command, serde_json::to_value(config)?, format)?;

    let jobs: Vec<(f64, usize)> = config
        .s
        .iter()
        .flat_map(|&s| (0..config.damping.len()).map(move |j| (s, j)))
        .collect();
    let members = par::map_collect(&jobs, |&(s, j)| run_member(config, s, j, &config.damping[j]));

    let base_grid = Grid::from_spec(config.grid)?;
    for (j, kind) in config.damping.iter().enumerate() {
        let rows: Vec<Vec<f64>> = match make_profile(kind, base_grid.clone()) {
            Ok(p) => (0..base_grid.len()).map(|i| vec![base_grid.x(i), p.samples()[i]]).collect(),
            Err(e) => {
                bundle.record_failure(format!("damping[{j}]: {e}"));
                continue;
            }
        };
        bundle.write_table(&format!("profile_d{j}"), &["x", "gamma"], &rows)?;
    }

    let mut runs = Vec::with_capacity(members.len());
    let mut traces = Vec::with_capacity(members.len());
    let mut series = Vec::new();
    let mut summary: Vec<(String, f64)> = Vec::new();
    for Member { mut report, trace, scan } in members {
        if let Some(tr) = &trace {
            let rows: Vec<Vec<f64>> = tr.times.iter().zip(&tr.energies).map(|(&t, &e)| vec![t, e]).collect();
            let file = bundle.write_table(&format!("trace_{}", report.name), &["t", "E"], &rows)?;
            report.files.push(file);
            series.push(Series {
                label: report.name.clone(),
                points: tr.times.iter().cloned().zip(tr.energies.iter().cloned()).collect(),
            });
        }
        if let Some(scan) = &scan {
            let rows: Vec<Vec<f64>> = scan
                .parameters
                .iter()
                .zip(&scan.values)
                .map(|(&l, &v)| vec![l, v])
                .collect();
            let file = bundle.write_table(&format!("resolvent_{}", report.name), &["lambda", "resolvent_norm"], &rows)?;
            report.files.push(file);
        }
        if let Some(c) = &report.classification {
            let code = match c.class.name() {
                "exponential" => 1.0,
                "polynomial" => 2.0,
                _ => 0.0,
            };
            summary.push((format!("{}.class", report.name), code));
            summary.push((format!("{}.exponential_rate", report.name), c.exponential.rate));
            summary.push((format!("{}.exponential_residual", report.name), c.exponential.residual));
            summary.push((format!("{}.polynomial_exponent", report.name), c.polynomial.rate));
            summary.push((format!("{}.polynomial_residual", report.name), c.polynomial.residual));
            summary.push((format!("{}.energy_ratio", report.name), c.energy_ratio));
        }
        if let Some(r) = &report.resolvent {
            summary.push((format!("{}.resolvent_exponent", report.name), r.exponent));
            summary.push((format!("{}.resolvent_upper_half_spread", report.name), r.upper_half_spread));
        }
        for e in &report.errors {
            bundle.record_failure(format!("{}: {e}", report.name));
        }
        traces.push(trace);
        runs.push(report);
    }

    match format {
        Format::Csv => bundle.write("summary.csv", param_value_csv(&summary).as_bytes())?,
        Format::Json => {
            let map: serde_json::Map<String, serde_json::Value> = summary
                .iter()
                .map(|(k, v)| (k.clone(), serde_json::json!(v)))
                .collect();
            bundle.write_json("summary.json", &map)?;
        }
    }
    if !series.is_empty() {
        let svg = line_plot_svg("Energy decay", "t", "E", &series, true);
        bundle.write("decay.svg", svg.as_bytes())?;
    }
    let report = ExperimentReport {
        window_policy: config.window,
        classification_margin: CLASSIFICATION_MARGIN,
        no_decay_ratio: NO_DECAY_RATIO,
        runs,
    };
    bundle.write_json("report.json", &report)?;
    let manifest = bundle.finish()?;
    Ok(ExperimentOutcome {
        report,
        manifest,
        traces,
    })
}
