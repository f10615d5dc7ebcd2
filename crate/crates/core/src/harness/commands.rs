//! One runner per command-line subcommand. Each writes a bundle and returns
//! its manifest together with the JSON report.

use std::path::Path;

use serde::Serialize;
use serde_json::json;

use crate::analysis::{
    a_lambda_asymptote, a_lambda_intervals, interval_growth_classification, lemma1_default_bounds, lemma1_report,
    log_space, ls_constant, power_difference_constant, sinc_translate_average_modulated, vanishing_damping_ratio,
    GrowthClass, Lemma1Report,
};
use crate::damping::{density_check, make_profile, DensityCheck};
use crate::error::{Error, Result};
use crate::harness::config::{
    CheckDampingConfig, ConstantsSection, FitConfig, IntervalsConfig, LemmaConfig, LsConstantConfig,
    ResolventScanConfig, Theorem2Config,
};
use crate::harness::fit::classify_decay;
use crate::harness::report::{line_plot_svg, param_value_csv, sha256_hex, Bundle, Format, Manifest, Series};
use crate::resolvent::{assemble_generator_with_budget, constant_scan, lambda_ladder, resolvent_scan, Observation};
use crate::simulator::EnergyTrace;
use crate::spectral::Grid;

#[derive(Debug)]
pub struct CommandOutcome {
    pub manifest: Manifest,
    pub report: serde_json::Value,
}

impl CommandOutcome {
    pub fn failed(&self) -> bool {
        !self.manifest.failures.is_empty()
    }
}

fn finish(mut bundle: Bundle, report: impl Serialize) -> Result<CommandOutcome> {
    let report = serde_json::to_value(report)?;
    bundle.write_json("report.json", &report)?;
    Ok(CommandOutcome {
        manifest: bundle.finish()?,
        report,
    })
}

fn write_params(bundle: &mut Bundle, stem: &str, rows: &[(String, f64)]) -> Result<()> {
    match bundle.format() {
        Format::Csv => bundle.write(&format!("{stem}.csv"), param_value_csv(rows).as_bytes()),
        Format::Json => {
            let map: serde_json::Map<String, serde_json::Value> =
                rows.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
            bundle.write_json(&format!("{stem}.json"), &map)
        }
    }
}

/// Fit both decay models to a `t,E` CSV and classify it.
pub fn fit_decay(trace_path: &Path, s: f64, cfg: &FitConfig, out: &Path, format: Format) -> Result<CommandOutcome> {
    let text = std::fs::read_to_string(trace_path).map_err(|e| Error::io(trace_path, e))?;
    let trace = EnergyTrace::from_csv(&text, s)?;
    let inputs = json!({
        "trace": trace_path.display().to_string(),
        "trace_sha256": sha256_hex(text.as_bytes()),
        "s": s,
        "config": cfg,
    });
    let mut bundle = Bundle::create(out, "fit-decay", inputs, format)?;
    let c = classify_decay(&trace, cfg.window)?;
    write_params(
        &mut bundle,
        "fit",
        &[
            ("exponential.rate".into(), c.exponential.rate),
            ("exponential.constant".into(), c.exponential.constant),
            ("exponential.residual".into(), c.exponential.residual),
            ("polynomial.exponent".into(), c.polynomial.rate),
            ("polynomial.constant".into(), c.polynomial.constant),
            ("polynomial.residual".into(), c.polynomial.residual),
            ("window.start".into(), c.window.start),
            ("window.end".into(), c.window.end),
            ("energy_ratio".into(), c.energy_ratio),
        ],
    )?;
    let svg = line_plot_svg(
        "Energy trace",
        "t",
        "E",
        &[Series {
            label: format!("s = {s}"),
            points: trace.times.iter().cloned().zip(trace.energies.iter().cloned()).collect(),
        }],
        true,
    );
    bundle.write("trace.svg", svg.as_bytes())?;
    finish(bundle, json!({ "class": c.class.name(), "classification": c }))
}

#[derive(Debug, Serialize)]
struct ResolventRow {
    s: f64,
    omega_max: f64,
    lambda_max: f64,
    exponent: Option<f64>,
    residual: Option<f64>,
    upper_half_spread: Option<f64>,
    min_constant: Option<f64>,
    error: Option<String>,
}

/// Resolvent norms along the imaginary axis for each `s`, plus optional best constants.
pub fn resolvent_scan_command(cfg: &ResolventScanConfig, out: &Path, format: Format) -> Result<CommandOutcome> {
    let mut bundle = Bundle::create(out, "resolvent-scan", serde_json::to_value(cfg)?, format)?;
    let grid = Grid::from_spec(cfg.grid)?;
    let gamma = make_profile(&cfg.damping, grid.clone())?;
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for &s in &cfg.s {
        let omega_max = (grid.max_frequency().powi(2) + 1.0).powf(s / 4.0);
        let lambda_max = cfg.lambda_max.unwrap_or(omega_max / 2.0);
        let lambdas = lambda_ladder(lambda_max, cfg.count);
        let mut row = ResolventRow {
            s,
            omega_max,
            lambda_max,
            exponent: None,
            residual: None,
            upper_half_spread: None,
            min_constant: None,
            error: None,
        };
        let scan = assemble_generator_with_budget(&gamma, s, &grid, cfg.max_points)
            .and_then(|gen| resolvent_scan(&gen, &lambdas));
        match scan {
            Ok(r) => {
                let table: Vec<Vec<f64>> = r.parameters.iter().zip(&r.values).map(|(&l, &v)| vec![l, v]).collect();
                bundle.write_table(&format!("resolvent_s{s}"), &["lambda", "resolvent_norm"], &table)?;
                series.push(Series {
                    label: format!("s = {s}"),
                    points: r.parameters.iter().cloned().zip(r.values.iter().cloned()).collect(),
                });
                row.exponent = Some(r.exponent);
                row.residual = Some(r.residual);
                row.upper_half_spread = Some(r.upper_half_spread());
            }
            Err(e) => {
                bundle.record_failure(format!("s = {s}: {e}"));
                row.error = Some(e.to_string());
            }
        }
        if let Some(ConstantsSection { kind, eps }) = &cfg.constants {
            let eps = eps.unwrap_or(gamma.default_epsilon());
            let set = gamma.level_set(eps);
            let mut ls = vec![0.0];
            ls.extend(&lambdas);
            let consts = Observation::with_budget(&set, s, &grid, cfg.max_points)
                .and_then(|obs| constant_scan(&obs, *kind, &ls));
            match consts {
                Ok(c) => {
                    let table: Vec<Vec<f64>> = c.iter().map(|&(l, v)| vec![l, v]).collect();
                    bundle.write_table(&format!("constants_s{s}"), &["lambda", "c"], &table)?;
                    row.min_constant = c.iter().map(|p| p.1).reduce(f64::min);
                }
                Err(e) => {
                    bundle.record_failure(format!("constants, s = {s}: {e}"));
                    row.error.get_or_insert(e.to_string());
                }
            }
        }
        rows.push(row);
    }
    if !series.is_empty() {
        let svg = line_plot_svg("Resolvent norm", "lambda", "norm", &series, true);
        bundle.write("resolvent.svg", svg.as_bytes())?;
    }
    finish(bundle, json!({ "damping": cfg.damping, "grid": cfg.grid, "scans": rows }))
}

/// Sampling constant of `{gamma >= eps}` for the configured bands, with placement shifts.
pub fn ls_constant_command(cfg: &LsConstantConfig, out: &Path, format: Format) -> Result<CommandOutcome> {
    let mut bundle = Bundle::create(out, "ls-constant", serde_json::to_value(cfg)?, format)?;
    let grid = Grid::from_spec(cfg.grid)?;
    let profile = make_profile(&cfg.set, grid.clone())?;
    let eps = cfg.eps.unwrap_or(profile.default_epsilon());
    let set = profile.level_set(eps);
    let c = ls_constant(&set, &cfg.bands, &grid)?;
    let mut params = vec![
        ("c".to_string(), c),
        ("eps".to_string(), eps),
        ("set_measure".to_string(), set.len() as f64 * grid.dx()),
        ("band_measure".to_string(), cfg.bands.iter().map(|b| b.length()).sum()),
    ];
    let mut shifted = Vec::new();
    for &shift in &cfg.shifts {
        let moved: Vec<usize> = set.iter().map(|&j| (j + shift) % grid.len()).collect();
        let cs = ls_constant(&moved, &cfg.bands, &grid)?;
        params.push((format!("shift_{shift}"), cs));
        shifted.push(json!({ "shift": shift, "c": cs }));
    }
    write_params(&mut bundle, "ls_constant", &params)?;
    finish(bundle, json!({ "c": c, "eps": eps, "shifts": shifted }))
}

#[derive(Debug, Serialize)]
struct ProfileChecks {
    index: usize,
    kind: &'static str,
    sup_norm: f64,
    checks: Vec<DensityCheck>,
    all_hold: bool,
}

/// Window-average infimum and level-set density for every profile and radius.
pub fn check_damping(cfg: &CheckDampingConfig, out: &Path, format: Format) -> Result<CommandOutcome> {
    let mut bundle = Bundle::create(out, "check-damping", serde_json::to_value(cfg)?, format)?;
    let grid = Grid::from_spec(cfg.grid)?;
    let mut params = Vec::new();
    let mut profiles = Vec::new();
    for (j, kind) in cfg.damping.iter().enumerate() {
        let p = make_profile(kind, grid.clone())?;
        let rows: Vec<Vec<f64>> = (0..grid.len()).map(|i| vec![grid.x(i), p.samples()[i]]).collect();
        bundle.write_table(&format!("profile_d{j}"), &["x", "gamma"], &rows)?;
        let eps = cfg.eps.unwrap_or(p.default_epsilon());
        let mut checks = Vec::new();
        for &r in &cfg.radii {
            if !(eps > 0.0) {
                // identically zero profile: the level set is empty for every eps
                continue;
            }
            let c = density_check(&p, eps, r)?;
            params.push((format!("d{j}.R{r}.window_average_infimum"), c.window_average_infimum));
            params.push((format!("d{j}.R{r}.level_set_density"), c.level_set_density));
            if !c.holds() {
                bundle.record_failure(format!("damping[{j}], R = {r}: density inequalities violated"));
            }
            checks.push(c);
        }
        profiles.push(ProfileChecks {
            index: j,
            kind: kind.name(),
            sup_norm: p.sup_norm(),
            all_hold: checks.iter().all(DensityCheck::holds),
            checks,
        });
    }
    write_params(&mut bundle, "damping_check", &params)?;
    finish(bundle, json!({ "grid": cfg.grid, "profiles": profiles }))
}

#[derive(Debug, Serialize)]
struct LemmaRow {
    #[serde(flatten)]
    report: Lemma1Report,
    relative_drift: f64,
    power_difference_constant: f64,
}

/// Grid-search infimum of the symbol-gap quotient and the power-difference constant.
pub fn lemma_verify(cfg: &LemmaConfig, out: &Path, format: Format) -> Result<CommandOutcome> {
    let mut bundle = Bundle::create(out, "lemma-verify", serde_json::to_value(cfg)?, format)?;
    let mut rows = Vec::new();
    let mut table = Vec::new();
    for &s in &cfg.s {
        let (tau_max, lambda_max) = lemma1_default_bounds(s, cfg.lambda_max);
        let report = lemma1_report(s, tau_max, lambda_max, cfg.resolution)?;
        let d = power_difference_constant(s, cfg.resolution)?;
        table.push(vec![
            s,
            report.base.value,
            report.base.tau,
            report.base.lambda,
            report.refined.value,
            report.enlarged.value,
            report.relative_drift(),
            d,
        ]);
        rows.push(LemmaRow {
            relative_drift: report.relative_drift(),
            report,
            power_difference_constant: d,
        });
    }
    bundle.write_table(
        "lemma1",
        &["s", "infimum", "tau", "lambda", "refined", "enlarged", "relative_drift", "power_difference"],
        &table,
    )?;
    finish(bundle, json!({ "rows": rows }))
}

/// Branch lengths of `A_lambda(K)` over a logarithmic `lambda` range.
pub fn intervals(cfg: &IntervalsConfig, out: &Path, format: Format) -> Result<CommandOutcome> {
    let mut bundle = Bundle::create(out, "intervals", serde_json::to_value(cfg)?, format)?;
    let lambdas = log_space(cfg.lambda_min, cfg.lambda_max, cfg.count);
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for &s in &cfg.s {
        let growth = interval_growth_classification(s, cfg.k, &lambdas)?;
        let mut table = Vec::new();
        for &l in &lambdas {
            let p = a_lambda_intervals(l, s, cfg.k)?;
            table.push(vec![l, p.lo, p.hi, p.length(), a_lambda_asymptote(l, s, cfg.k)]);
        }
        bundle.write_table(&format!("intervals_s{s}"), &["lambda", "lo", "hi", "length", "asymptote"], &table)?;
        series.push(Series {
            label: format!("s = {s}"),
            points: lambdas.iter().map(|l| l.log10()).zip(growth.lengths.iter().cloned()).collect(),
        });
        rows.push(json!({
            "s": s,
            "class": growth.class,
            "divergent": growth.class == GrowthClass::Divergent,
            "slope": growth.slope,
            "terminal_length": growth.terminal_length,
        }));
    }
    let svg = line_plot_svg("Branch length of A_lambda(K)", "log10 lambda", "length", &series, true);
    bundle.write("intervals.svg", svg.as_bytes())?;
    finish(bundle, json!({ "k": cfg.k, "rows": rows }))
}

/// The two mechanisms behind the necessity of the damping condition: the
/// band-truncation ratio for a profile with a zero set, and sinc translate averages.
pub fn theorem2_demo(cfg: &Theorem2Config, out: &Path, format: Format) -> Result<CommandOutcome> {
    let mut bundle = Bundle::create(out, "theorem2-demo", serde_json::to_value(cfg)?, format)?;
    let grid = Grid::from_spec(cfg.grid)?;
    let gamma = make_profile(&cfg.damping, grid.clone())?;
    let radii = log_space(grid.dxi(), grid.max_frequency(), cfg.count);
    let ratios = vanishing_damping_ratio(&gamma, &radii, cfg.envelope)?;
    let table: Vec<Vec<f64>> = ratios.iter().map(|&(r, q)| vec![r, q]).collect();
    bundle.write_table("truncation_ratio", &["R", "ratio"], &table)?;

    let mut sinc = Vec::new();
    let stride = (grid.len() / 16).max(1);
    for j in (0..grid.len()).step_by(stride) {
        let a = grid.x(j);
        let sp = sinc_translate_average_modulated(&gamma, cfg.sinc_bandwidth, cfg.modulation, a, cfg.sinc_radius)?;
        sinc.push(vec![a, sp.inside, sp.outside, sp.inside_bound, sp.outside_bound]);
    }
    bundle.write_table(
        "sinc_translates",
        &["a", "inside", "outside", "inside_bound", "outside_bound"],
        &sinc,
    )?;

    let q: Vec<f64> = ratios.iter().map(|p| p.1).collect();
    let start = q.len() / 4;
    let monotone_tail = q[start..].windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    let svg = line_plot_svg(
        "Damping seen by band truncations",
        "R",
        "ratio",
        &[Series {
            label: cfg.damping.name().to_string(),
            points: ratios.clone(),
        }],
        true,
    );
    bundle.write("truncation_ratio.svg", svg.as_bytes())?;
    finish(
        bundle,
        json!({
            "final_ratio": q.last(),
            "monotone_past_first_quartile": monotone_tail,
            "min_inside": sinc.iter().map(|r| r[1]).fold(f64::INFINITY, f64::min),
        }),
    )
}
