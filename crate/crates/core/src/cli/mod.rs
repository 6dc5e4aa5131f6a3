//! Command-line front end: `verify` runs suites and writes reports, `table`
//! writes plot-ready CSV.
//!
//! Every flag can also be set through an environment variable with the
//! `BERGMAN_LAB_` prefix (`BERGMAN_LAB_N`, `BERGMAN_LAB_SEED`, `BERGMAN_LAB_RADIUS_CAP`,
//! `BERGMAN_LAB_GRID`, `BERGMAN_LAB_BUDGET`, `BERGMAN_LAB_OUT`, `BERGMAN_LAB_FORMAT`,
//! `BERGMAN_LAB_SUITE`). Several grids or budgets in one variable are separated by `;`.

pub mod config;
pub mod output;
pub mod suites;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{
    default_budgets, default_grids, parse_budget, parse_grid, ConfigError, Format, RunConfig, MAX_BUDGET, MAX_GRID_LEN,
};
pub use output::{build_table, render_reports, write_reports, write_table, Table, TABLES};
pub use suites::{apply_inconclusive_budget, kernel_model, run_suite, SUITES};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "bergman-lab", version, about = "Verification harness for the psi-Hessian metric and weighted Bergman kernel")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a suite (metric, geometry, kernel, estimates or all) and write its reports.
    Verify {
        #[arg(value_name = "SUITE")]
        suite: Option<String>,
        #[arg(long = "suite", env = "BERGMAN_LAB_SUITE", value_name = "SUITE")]
        suite_flag: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Write a CSV table (diag_ratio, offdiag_scatter, volume_scaling, radial_distance).
    Table {
        #[arg(value_name = "QUANTITY")]
        quantity: String,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Complex dimension.
    #[arg(long, env = "BERGMAN_LAB_N", default_value_t = 2)]
    pub n: usize,
    #[arg(long, env = "BERGMAN_LAB_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Every grid value must lie below this; the kernel model is certified up to it.
    #[arg(long = "radius-cap", env = "BERGMAN_LAB_RADIUS_CAP", default_value_t = 0.99)]
    pub radius_cap: f64,
    /// `name=v1,v2,...` or `name=start:stop:step`; repeatable.
    #[arg(long = "grid", env = "BERGMAN_LAB_GRID", value_delimiter = ';')]
    pub grids: Vec<String>,
    /// `name=count`, count optionally suffixed k or M; repeatable.
    #[arg(long = "budget", env = "BERGMAN_LAB_BUDGET", value_delimiter = ';')]
    pub budgets: Vec<String>,
    #[arg(long = "out", env = "BERGMAN_LAB_OUT", default_value = "reports")]
    pub out: PathBuf,
    #[arg(long, env = "BERGMAN_LAB_FORMAT", value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

impl CommonArgs {
    pub fn config(&self) -> Result<RunConfig, ConfigError> {
        RunConfig::build(self.n, self.seed, self.radius_cap, &self.grids, &self.budgets, self.out.clone(), self.format)
    }
}

fn summary_line(suite: &str, reports: &[crate::report::VerificationReport]) -> String {
    let pass = reports.iter().all(|r| r.pass);
    let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.suite_name.as_str()).collect();
    let e = suites::overall_extrema(reports);
    let violations: u64 = reports.iter().map(|r| r.violations).sum();
    let inconclusive: u64 = reports.iter().map(|r| r.inconclusive).sum();
    let mut line = format!(
        "{suite}: {} reports={} violations={violations} inconclusive={inconclusive} extrema=[{:e}, {:e}]",
        if pass { "PASS" } else { "FAIL" },
        reports.len(),
        e.min,
        e.max
    );
    for r in reports {
        if let Some(f) = r.fitted_constants {
            line.push_str(&format!(" {}:C={:e},eps={:.6}", r.suite_name, f.c, f.epsilon));
        }
    }
    if !failed.is_empty() {
        line.push_str(&format!(" failed={}", failed.join(",")));
    }
    line
}

fn verify(suite: &str, cfg: &RunConfig, out: &mut impl Write, err: &mut impl Write) -> i32 {
    let names: Vec<&str> = match suite {
        "all" => SUITES.to_vec(),
        s if SUITES.contains(&s) => vec![s],
        other => {
            let _ = writeln!(err, "error: unknown suite '{other}' (expected metric, geometry, kernel, estimates or all)");
            return EXIT_CONFIG;
        }
    };
    let mut code = EXIT_PASS;
    for name in names {
        let mut reports = match run_suite(name, cfg) {
            Ok(r) => r,
            Err(e) => {
                let _ = writeln!(err, "error: {name}: {e}");
                return EXIT_CONFIG;
            }
        };
        apply_inconclusive_budget(&mut reports, cfg.budget("inconclusive_permille"));
        if let Err(e) = write_reports(name, cfg, &reports) {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
        let _ = writeln!(out, "{}", summary_line(name, &reports));
        if reports.iter().any(|r| !r.pass) {
            code = EXIT_FAIL;
        }
    }
    code
}

fn table(quantity: &str, cfg: &RunConfig, out: &mut impl Write, err: &mut impl Write) -> i32 {
    if !TABLES.contains(&quantity) {
        let _ = writeln!(err, "error: unknown table '{quantity}' (expected {})", TABLES.join(", "));
        return EXIT_CONFIG;
    }
    let result = build_table(quantity, cfg).and_then(|t| write_table(quantity, cfg, &t).map(|p| (p, t.rows.len())));
    match result {
        Ok((path, rows)) => {
            let _ = writeln!(out, "{quantity}: wrote {} ({rows} rows)", path.display());
            EXIT_PASS
        }
        Err(e) => {
            let _ = writeln!(err, "error: {quantity}: {e}");
            EXIT_CONFIG
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run_with<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    let (common, action) = match &cli.command {
        Command::Verify { suite, suite_flag, common } => {
            let name = match (suite, suite_flag) {
                (Some(a), Some(b)) if a != b => {
                    let _ = writeln!(err, "error: conflicting suites '{a}' and '{b}'");
                    return EXIT_CONFIG;
                }
                (Some(a), _) | (None, Some(a)) => a.clone(),
                (None, None) => "all".to_string(),
            };
            (common, (true, name))
        }
        Command::Table { quantity, common } => (common, (false, quantity.clone())),
    };
    let cfg = match common.config() {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    match action {
        (true, suite) => verify(&suite, &cfg, out, err),
        (false, quantity) => table(&quantity, &cfg, out, err),
    }
}

/// Entry point used by the binary.
pub fn main_exit_code() -> i32 {
    run_with(std::env::args_os(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
