use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::estimates::{sample_pairs, MainTheoremSettings};
use crate::geometry::{radial_bounds, radial_distance, upper_bound, volume_scaling, OptimizerSettings};
use crate::kernel::{decay_exponent, diag_ratio_with_exponent};
use crate::linalg::Point;
use crate::report::VerificationReport;
use crate::rng::GENERATOR;

use super::config::{Format, RunConfig, SCHEMA_VERSION};
use super::suites::kernel_model;

pub const TABLES: [&str; 4] = ["diag_ratio", "offdiag_scatter", "volume_scaling", "radial_distance"];

#[derive(Serialize)]
struct SuiteDocument<'a> {
    schema_version: u32,
    generator: &'a str,
    suite: &'a str,
    pass: bool,
    config: &'a RunConfig,
    reports: &'a [VerificationReport],
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> LabError {
    LabError::OutOfRange(format!("cannot write {}: {e}", path.display()))
}

fn csv_error(e: csv::Error) -> LabError {
    LabError::OutOfRange(format!("csv: {e}"))
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| io_error(&path, e))?;
    Ok(path)
}

fn json(value: &impl Serialize) -> Result<String> {
    serde_json::to_string(value).map_err(|e| LabError::OutOfRange(format!("json: {e}")))
}

/// Renders a suite's reports in the configured format.
pub fn render_reports(suite: &str, cfg: &RunConfig, reports: &[VerificationReport]) -> Result<String> {
    let pass = reports.iter().all(|r| r.pass);
    match cfg.format {
        Format::Json => {
            let doc = SuiteDocument { schema_version: SCHEMA_VERSION, generator: GENERATOR, suite, pass, config: cfg, reports };
            let mut text = serde_json::to_string_pretty(&doc).map_err(|e| LabError::OutOfRange(format!("json: {e}")))?;
            text.push('\n');
            Ok(text)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "schema_version", "generator", "suite", "report", "n", "samples", "extrema_min", "extrema_max", "fitted_c",
                "fitted_epsilon", "violations", "inconclusive", "pass", "params", "metrics", "config",
            ])
            .map_err(csv_error)?;
            let config = json(cfg)?;
            for r in reports {
                let (c, eps) = r.fitted_constants.map_or((String::new(), String::new()), |f| (f.c.to_string(), f.epsilon.to_string()));
                w.write_record([
                    SCHEMA_VERSION.to_string(),
                    GENERATOR.to_string(),
                    suite.to_string(),
                    r.suite_name.clone(),
                    r.n.to_string(),
                    r.samples.to_string(),
                    r.extrema.min.to_string(),
                    r.extrema.max.to_string(),
                    c,
                    eps,
                    r.violations.to_string(),
                    r.inconclusive.to_string(),
                    r.pass.to_string(),
                    json(&r.params)?,
                    json(&r.metrics)?,
                    config.clone(),
                ])
                .map_err(csv_error)?;
            }
            let bytes = w.into_inner().map_err(|e| LabError::OutOfRange(format!("csv: {e}")))?;
            String::from_utf8(bytes).map_err(|e| LabError::OutOfRange(format!("csv: {e}")))
        }
    }
}

/// Writes `<output_dir>/<suite>.json` (or `.csv`).
pub fn write_reports(suite: &str, cfg: &RunConfig, reports: &[VerificationReport]) -> Result<PathBuf> {
    let text = render_reports(suite, cfg, reports)?;
    let ext = match cfg.format {
        Format::Json => "json",
        Format::Csv => "csv",
    };
    write_file(&cfg.output_dir, &format!("{suite}.{ext}"), text.as_bytes())
}

/// Header and rows of a plot-ready table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(csv_error)?;
        for row in &self.rows {
            w.write_record(row).map_err(csv_error)?;
        }
        let bytes = w.into_inner().map_err(|e| LabError::OutOfRange(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| LabError::OutOfRange(format!("csv: {e}")))
    }
}

fn point_text(p: &Point) -> String {
    p.coords().iter().map(|c| format!("{}{:+}i", c.re, c.im)).collect::<Vec<_>>().join(";")
}

fn nums(values: &[f64]) -> Vec<String> {
    values.iter().map(f64::to_string).collect()
}

/// Builds the named table.
pub fn build_table(quantity: &str, cfg: &RunConfig) -> Result<Table> {
    let n = cfg.n;
    match quantity {
        "diag_ratio" => {
            let model = kernel_model(cfg)?;
            let mut doubled = model.clone();
            doubled.extend_to(2 * model.k_max())?;
            let (e_h, e_l) = ((2 * n + 1) as f64, (3 * n) as f64);
            let mut t = Table::new(&["n", "t", "hessian_ratio", "laplacian_ratio", "hessian_ratio_doubled_order"]);
            for &x in cfg.grid("diag") {
                let z = Point::on_axis(n, x)?;
                let mut row = vec![n.to_string()];
                row.extend(nums(&[
                    x,
                    diag_ratio_with_exponent(&model, &z, e_h)?,
                    diag_ratio_with_exponent(&model, &z, e_l)?,
                    diag_ratio_with_exponent(&doubled, &z, e_h)?,
                ]));
                t.push(row);
            }
            Ok(t)
        }
        "offdiag_scatter" => {
            let model = kernel_model(cfg)?;
            let mut settings = MainTheoremSettings::new(cfg.count("pairs"), cfg.seed);
            settings.bracket_budget = cfg.count("bracket");
            settings.max_radius = settings.max_radius.min(model.radius_cap);
            let pairs = sample_pairs(n, &settings)?;
            let mut t = Table::new(&["index", "z", "w", "z_norm", "w_norm", "d_lower", "d_upper", "y"]);
            for (i, p) in pairs.iter().enumerate() {
                let y = decay_exponent(&model, &p.z, &p.w)?;
                let mut row = vec![i.to_string(), point_text(&p.z), point_text(&p.w)];
                row.extend(nums(&[p.z.norm(), p.w.norm(), p.d_lower, p.d_upper, y]));
                t.push(row);
            }
            Ok(t)
        }
        "volume_scaling" => {
            let mut t = Table::new(&[
                "r", "t", "log_gap", "vol_polycylinder", "vol_polycylinder_stderr", "vol_closed_form", "vol_ball",
                "vol_ball_stderr", "ball_inconclusive", "log_vol_polycylinder",
            ]);
            let mut slopes = Vec::new();
            for &r in cfg.grid("volume_r") {
                let v = volume_scaling(n, r, cfg.grid("volume_z"), cfg.count("volume_samples"), cfg.count("bracket"), cfg.seed)?;
                for row in &v.rows {
                    let mut line = nums(&[
                        r,
                        row.center_norm,
                        row.log_gap,
                        row.polycylinder.estimate,
                        row.polycylinder.stderr,
                        row.closed_form,
                        row.ball.estimate,
                        row.ball.stderr,
                    ]);
                    line.push(row.ball.inconclusive.to_string());
                    line.push(row.polycylinder.estimate.ln().to_string());
                    t.push(line);
                }
                slopes.push((r, v.slope));
            }
            for (r, slope) in slopes {
                let mut footer = vec![String::new(); t.header.len()];
                footer[0] = r.to_string();
                footer[1] = "slope".into();
                footer[9] = slope.to_string();
                t.push(footer);
            }
            Ok(t)
        }
        "radial_distance" => {
            let settings = OptimizerSettings::default();
            let mut t = Table::new(&["t", "distance", "sandwich_lower", "sandwich_upper", "optimizer_upper"]);
            for &x in cfg.grid("radial") {
                let d = radial_distance(x)?;
                let (lo, hi) = radial_bounds(x);
                let up = if x == 0.0 {
                    0.0
                } else {
                    upper_bound(&Point::origin(n)?, &Point::on_axis(n, x)?, cfg.count("bracket"), &settings)?.0
                };
                t.push(nums(&[x, d, lo, hi, up]));
            }
            Ok(t)
        }
        other => Err(LabError::OutOfRange(format!("unknown table '{other}'"))),
    }
}

/// Writes `<output_dir>/<quantity>.csv`.
pub fn write_table(quantity: &str, cfg: &RunConfig, table: &Table) -> Result<PathBuf> {
    write_file(&cfg.output_dir, &format!("{quantity}.csv"), table.to_csv()?.as_bytes())
}
