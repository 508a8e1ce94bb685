//! `boomsim` command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::compliance::{equivalent_stiffness, StiffnessModel};
use crate::control::{schedule_gains, AdmittanceSpec, Phase};
use crate::harness::{
    fit_second_order, run_scenario, stability_bound, verify, DtScan, RunOptions, RunOutput, ScenarioConfig,
};
use crate::model::JointState;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DIVERGED: u8 = 2;
pub const EXIT_VERIFY_FAILED: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "boomsim",
    version,
    about = "Force-regulated surface sweeps with an extensible boom"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write trace.csv and summary.json.
    Run(RunArgs),
    /// Print scheduled gains and the stable force period for one pose.
    Gains(GainsArgs),
    /// Run one scenario per value of a config key.
    Sweep(SweepArgs),
    /// Run the built-in invariant checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario config (JSON).
    #[arg(long, short, default_value = "configs/paper_replica.json")]
    pub config: PathBuf,
    /// Override a config value, e.g. `--set spec.omega_n=5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Noise seed; defaults to the config's (42 unless set).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

impl ScenarioArgs {
    fn load(&self) -> Result<ScenarioConfig, String> {
        let mut overrides = self.overrides.clone();
        if let Some(seed) = self.seed {
            overrides.push(format!("world.seed={seed}"));
        }
        ScenarioConfig::load(&self.config, &overrides).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
}

#[derive(Debug, Args)]
pub struct GainsArgs {
    #[arg(long, default_value_t = 10.0)]
    pub omega_n: f64,
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mass: f64,
    #[arg(long, default_value_t = 60.0)]
    pub k_theta: f64,
    /// Pad stiffness; `inf` for a rigid pad.
    #[arg(long, default_value = "5000")]
    pub k_ee: String,
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_3, allow_hyphen_values = true)]
    pub theta1: f64,
    #[arg(long, default_value_t = 0.3)]
    pub d2: f64,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
    /// Also write gains.json here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Dotted config key to sweep, e.g. `setpoint.f_des`.
    #[arg(long)]
    pub key: String,
    /// Comma-separated values.
    #[arg(long, allow_hyphen_values = true)]
    pub values: String,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Print the check names and exit.
    #[arg(long)]
    pub list: bool,
    /// Also write verify.json here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, hide = true)]
    pub inject_sign_flip: bool,
}

pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    let code = match cli.command {
        Command::Run(a) => cmd_run(&a),
        Command::Gains(a) => cmd_gains(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Verify(a) => cmd_verify(&a),
    };
    ExitCode::from(code)
}

fn usage_error(msg: impl std::fmt::Display) -> u8 {
    eprintln!("error: {msg}");
    EXIT_USAGE
}

fn opt(v: Option<f64>, unit: &str) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4} {unit}"))
}

fn write_or_report(out: &RunOutput, dir: &Path) -> Result<(), u8> {
    out.write_artifacts(dir)
        .map_err(|e| usage_error(format!("cannot write artifacts to {}: {e}", dir.display())))
}

pub fn cmd_run(args: &RunArgs) -> u8 {
    let cfg = match args.scenario.load() {
        Ok(c) => c,
        Err(e) => return usage_error(e),
    };
    let dir = &args.scenario.out_dir;
    let out = match run_scenario(&cfg) {
        Ok(out) => out,
        Err(e) => {
            let _ =
                std::fs::create_dir_all(dir).and_then(|_| std::fs::write(dir.join("trace.csv"), e.partial.to_csv()));
            eprintln!("run aborted: {e}");
            return EXIT_DIVERGED;
        }
    };
    if let Err(code) = write_or_report(&out, dir) {
        return code;
    }
    let s = &out.summary;
    println!(
        "rms={} settle={} contact={} sweep={} diverged={}",
        opt(s.rms_force_error_after_contact, "N"),
        opt(s.settle_time, "s"),
        opt(s.phase_boundaries.t_contact, "s"),
        opt(s.phase_boundaries.t_sweep, "s"),
        s.diverged,
    );
    if let Some(reason) = &s.divergence_reason {
        eprintln!("diverged: {reason}");
        return EXIT_DIVERGED;
    }
    EXIT_OK
}

#[derive(Debug, Serialize)]
struct GainsReport {
    k_eq: f64,
    k_f: f64,
    b: f64,
    max_dt_force: f64,
    dt_resolution: f64,
}

fn parse_stiffness(s: &str) -> Option<f64> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" => Some(f64::INFINITY),
        other => other.parse().ok(),
    }
}

pub fn cmd_gains(args: &GainsArgs) -> u8 {
    let Some(k_ee) = parse_stiffness(&args.k_ee) else {
        return usage_error(format!("--k-ee: not a number: {}", args.k_ee));
    };
    let spec = AdmittanceSpec {
        omega_n: args.omega_n,
        eta: args.eta,
        mass: args.mass,
    };
    let model = StiffnessModel {
        k_theta: args.k_theta,
        k_ee,
    };
    let report = (|| {
        spec.validate()?;
        model.validate()?;
        let k_eq = equivalent_stiffness(&model, JointState::new(args.theta1, args.d2))?;
        let g = schedule_gains(&spec, k_eq)?;
        let bound = stability_bound(&spec, k_eq, DtScan::default())?;
        Ok::<_, crate::error::SimError>(GainsReport {
            k_eq,
            k_f: g.k_f,
            b: g.b,
            max_dt_force: bound.dt_max,
            dt_resolution: bound.resolution,
        })
    })();
    let report = match report {
        Ok(r) => r,
        Err(e) => return usage_error(e),
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    if args.json {
        println!("{json}");
    } else {
        println!("k_eq          {:.6} N/m", report.k_eq);
        println!("K_f           {:.6}", report.k_f);
        println!("B             {:.6} N*s/m", report.b);
        println!(
            "max dt_force  {:.4} s (scan step {:.1e} s)",
            report.max_dt_force, report.dt_resolution
        );
    }
    if let Some(dir) = &args.out_dir {
        if let Err(e) = std::fs::create_dir_all(dir).and_then(|_| std::fs::write(dir.join("gains.json"), json + "\n")) {
            return usage_error(format!("cannot write {}: {e}", dir.display()));
        }
    }
    EXIT_OK
}

struct SweepRow {
    value: String,
    rms: Option<f64>,
    settle_time: Option<f64>,
    diverged: bool,
    omega_n_fit: Option<f64>,
    eta_fit: Option<f64>,
}

fn cell(v: Option<f64>) -> String {
    v.map(crate::harness::fmt_sig9).unwrap_or_default()
}

pub fn cmd_sweep(args: &SweepArgs) -> u8 {
    let values: Vec<String> = args
        .values
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(String::from)
        .collect();
    if values.is_empty() {
        return usage_error("--values is empty");
    }
    let base = match args.scenario.load() {
        Ok(c) => c,
        Err(e) => return usage_error(e),
    };
    let mut configs = Vec::with_capacity(values.len());
    for v in &values {
        match base.with_overrides(&[format!("{}={v}", args.key)]) {
            Ok(c) => configs.push(c),
            Err(e) => return usage_error(format!("{}={v}: {e}", args.key)),
        }
    }

    let out_dir = &args.scenario.out_dir;
    let rows: Vec<Result<SweepRow, String>> = configs
        .par_iter()
        .zip(values.par_iter())
        .enumerate()
        .map(|(i, (cfg, value))| {
            let dir = out_dir.join(format!("run_{i:03}"));
            let (out, diverged) = match run_scenario(cfg) {
                Ok(out) => {
                    let d = out.summary.diverged;
                    (Some(out), d)
                }
                Err(_) => (None, true),
            };
            let mut row = SweepRow {
                value: value.clone(),
                rms: None,
                settle_time: None,
                diverged,
                omega_n_fit: None,
                eta_fit: None,
            };
            if let Some(out) = out {
                out.write_artifacts(&dir)
                    .map_err(|e| format!("{}: {e}", dir.display()))?;
                row.rms = out.summary.rms_force_error_after_contact;
                row.settle_time = out.summary.settle_time;
                // The fit assumes the transient starts at rest, which only
                // holds for runs that begin on the wall.
                let at_rest = cfg.control.initial_phase == Phase::Stabilize;
                if let (Some(t0), false, true) = (out.summary.phase_boundaries.t_contact, diverged, at_rest) {
                    let t1 = out.summary.phase_boundaries.t_sweep.unwrap_or(cfg.duration);
                    if let Ok(fit) = fit_second_order(&out.trace, cfg.setpoint.f_des, (t0, t1)) {
                        row.omega_n_fit = Some(fit.omega_n);
                        row.eta_fit = Some(fit.eta);
                    }
                }
            }
            Ok(row)
        })
        .collect();

    let mut csv = String::from("value,rms,settle_time,diverged,omega_n_fit,eta_fit\n");
    let mut any_diverged = false;
    for row in rows {
        let row = match row {
            Ok(r) => r,
            Err(e) => return usage_error(format!("cannot write artifacts: {e}")),
        };
        any_diverged |= row.diverged;
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.value,
            cell(row.rms),
            cell(row.settle_time),
            row.diverged,
            cell(row.omega_n_fit),
            cell(row.eta_fit)
        ));
    }
    if let Err(e) = std::fs::write(out_dir.join("sweep.csv"), &csv) {
        return usage_error(format!("cannot write sweep.csv: {e}"));
    }
    print!("{csv}");
    if any_diverged {
        EXIT_DIVERGED
    } else {
        EXIT_OK
    }
}

pub fn cmd_verify(args: &VerifyArgs) -> u8 {
    if args.list {
        for name in verify::CHECKS {
            println!("{name}");
        }
        return EXIT_OK;
    }
    let options = RunOptions {
        inject_sign_flip: args.inject_sign_flip,
    };
    let results = verify::run_all(options);
    for r in &results {
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    if let Some(dir) = &args.out_dir {
        let json = serde_json::to_string_pretty(&results).expect("results serialize");
        if let Err(e) = std::fs::create_dir_all(dir).and_then(|_| std::fs::write(dir.join("verify.json"), json + "\n"))
        {
            return usage_error(format!("cannot write {}: {e}", dir.display()));
        }
    }
    if results.iter().all(|r| r.passed) {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn stiffness_flag_accepts_inf() {
        assert_eq!(parse_stiffness("inf"), Some(f64::INFINITY));
        assert_eq!(parse_stiffness("5000"), Some(5000.0));
        assert_eq!(parse_stiffness("soft"), None);
    }

    #[test]
    fn gains_substitution_chain() {
        let args = GainsArgs {
            omega_n: 10.0,
            eta: 1.0,
            mass: 1.0,
            k_theta: 100.0,
            k_ee: "inf".into(),
            theta1: std::f64::consts::FRAC_PI_2,
            d2: 1.0,
            json: true,
            out_dir: None,
        };
        assert_eq!(cmd_gains(&args), EXIT_OK);
        let bad = GainsArgs { omega_n: -1.0, ..args };
        assert_eq!(cmd_gains(&bad), EXIT_USAGE);
    }
}
