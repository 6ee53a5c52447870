//! `sfwm` command-line interface: loads a JSON run configuration, dispatches
//! to the toolkit, writes CSV/JSON outputs atomically, and prints a single
//! JSON summary line to standard output.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric non-convergence
//! or runtime failure.

mod config;

use clap::{Parser, Subcommand};
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

use config::{
    build_detector, build_process, grid_spec_from, ConfigError, DesignTaskTag, FtModeTag,
    JsaRegimeTag, RunConfig,
};
use sfwm_core::charsim::{
    sim_dispersive_fiber, sim_ft_spectroscopy, sim_monochromator, sim_set, DispersiveConfig,
    FtConfig, FtMode, NoiseMode, SetConfig,
};
use sfwm_core::constants::lambda_to_omega;
use sfwm_core::design::{
    critical_power, factorable_search, surrogate_family, tuning_scan, ultrabroadband_search,
    FactorableSearchConfig,
};
use sfwm_core::io;
use sfwm_core::jsa::{
    jsa_counterprop, jsa_dualpump_walkoff, jsa_full, jsa_linearized, normalize_jsi, WalkoffForm,
};
use sfwm_core::phasematch::{
    group_delay_terms, linspace, trace_contour, CenterFrequencies, TermVariant,
};
use sfwm_core::quantum::{build_multiprocess_state, log_negativity, schmidt_decompose};

#[derive(Parser)]
#[command(name = "sfwm", about = "Photon-pair source design toolkit for fiber SFWM")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate n_eff, k derivatives, D, and zero-dispersion wavelengths.
    Dispersion(CommonArgs),
    /// Trace the Δk = 0 contour with branch labels.
    Contour(CommonArgs),
    /// Evaluate a joint spectral amplitude grid.
    Jsa(CommonArgs),
    /// Schmidt-decompose a stored JSA.
    Schmidt(CommonArgs),
    /// Logarithmic negativity of a multi-process state.
    Negativity(CommonArgs),
    /// Design-space searches.
    Design(CommonArgs),
    /// Spectral-characterization simulators.
    Charsim(CommonArgs),
    /// Validate a configuration without running anything.
    Validate(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Override the RNG seed of stochastic simulators.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress the summary line.
    #[arg(long, default_value_t = false)]
    quiet: bool,
}

#[derive(Debug, thiserror::Error)]
enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Numeric(String),
}

macro_rules! numeric {
    ($e:expr) => {
        $e.map_err(|err| RunError::Numeric(err.to_string()))?
    };
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    type Runner = fn(&RunConfig, &CommonArgs) -> Result<serde_json::Value, RunError>;
    let (args, name, runner): (&CommonArgs, &str, Runner) = match &cli.command {
        Command::Dispersion(a) => (a, "dispersion", run_dispersion),
        Command::Contour(a) => (a, "contour", run_contour),
        Command::Jsa(a) => (a, "jsa", run_jsa),
        Command::Schmidt(a) => (a, "schmidt", run_schmidt),
        Command::Negativity(a) => (a, "negativity", run_negativity),
        Command::Design(a) => (a, "design", run_design),
        Command::Charsim(a) => (a, "charsim", run_charsim),
        Command::Validate(a) => (a, "validate", run_validate),
    };
    let config = match RunConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(2);
        }
    };
    match runner(&config, args) {
        Ok(mut summary) => {
            if let Some(obj) = summary.as_object_mut() {
                obj.insert("status".into(), json!("ok"));
                obj.insert("subcommand".into(), json!(name));
            }
            if !args.quiet {
                println!("{summary}");
            }
            ExitCode::SUCCESS
        }
        Err(RunError::Config(e)) => {
            eprintln!("configuration error: {e}");
            ExitCode::from(2)
        }
        Err(RunError::Numeric(e)) => {
            eprintln!("numeric failure: {e}");
            ExitCode::from(3)
        }
    }
}

fn out_path(args: &CommonArgs, config: &RunConfig, name: &str) -> PathBuf {
    args.out.join(format!("{}.{}", config.out_prefix, name))
}

fn run_validate(_config: &RunConfig, _args: &CommonArgs) -> Result<serde_json::Value, RunError> {
    Ok(json!({ "outputs": [] }))
}

fn run_dispersion(config: &RunConfig, args: &CommonArgs) -> Result<serde_json::Value, RunError> {
    let section = config.dispersion.as_ref().ok_or(ConfigError::MissingSection("dispersion"))?;
    let fiber = config.build_fiber()?;
    let mode = sfwm_core::fiber::ModeId::parse(&section.mode);
    let mut csv = String::from(
        "lambda_um,n_eff,k_per_um,k1_fs_um,k2_fs2_um,k3_fs3_um,k4_fs4_um,d_ps_nm_km\n",
    );
    for k in 0..section.samples {
        let lam = section.lambda_min_um
            + (section.lambda_max_um - section.lambda_min_um) * k as f64
                / (section.samples - 1) as f64;
        let om = lambda_to_omega(lam);
        let sample = numeric!(fiber.mode_dispersion(&mode, om));
        let n_eff = numeric!(fiber.n_eff(&mode, om));
        let d = numeric!(fiber.dispersion_parameter(&mode, lam));
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            io::fmt17(lam),
            io::fmt17(n_eff),
            io::fmt17(sample.k),
            io::fmt17(sample.k1),
            io::fmt17(sample.k2),
            io::fmt17(sample.k3),
            io::fmt17(sample.k4),
            io::fmt17(d)
        ));
    }
    let path = out_path(args, config, "dispersion.csv");
    numeric!(io::write_atomic(&path, csv.as_bytes()));
    let zdws = numeric!(fiber.find_zdw(&mode, (section.lambda_min_um, section.lambda_max_um)));
    Ok(json!({
        "outputs": [path],
        "zero_dispersion_wavelengths_um": zdws,
    }))
}

fn run_contour(config: &RunConfig, args: &CommonArgs) -> Result<serde_json::Value, RunError> {
    let section = config.contour.as_ref().ok_or(ConfigError::MissingSection("contour"))?;
    let fiber = config.build_fiber()?;
    let process = config.build_process()?;
    let pump = linspace(
        lambda_to_omega(section.pump_lambda_max_um),
        lambda_to_omega(section.pump_lambda_min_um),
        section.n_pump,
    );
    let det = linspace(
        -section.detuning_max_rad_per_fs,
        section.detuning_max_rad_per_fs,
        section.n_detuning,
    );
    let contour = numeric!(trace_contour(&fiber, &process, &pump, &det));
    let path = out_path(args, config, "contour.csv");
    numeric!(io::export_contour(&contour, &path));
    Ok(json!({
        "outputs": [path],
        "empty": contour.empty,
        "closed_loops": contour.loops.iter().filter(|l| l.closed).count(),
        "column_area": contour.column_area(),
    }))
}

fn run_jsa(config: &RunConfig, args: &CommonArgs) -> Result<serde_json::Value, RunError> {
    let section = config.jsa.as_ref().ok_or(ConfigError::MissingSection("jsa"))?;
    let fiber = config.build_fiber()?;
    let process = config.build_process()?;
    let grid = grid_spec_from(section);
    let grid_out = match section.regime {
        JsaRegimeTag::Full => {
            let (p1, p2) = config.build_pumps()?;
            numeric!(jsa_full(&fiber, &process, &p1, &p2, &grid))
        }
        JsaRegimeTag::Counterprop => {
            let (p1, p2) = config.build_pumps()?;
            numeric!(jsa_counterprop(&fiber, &process, &p1, &p2, &grid))
        }
        JsaRegimeTag::Linearized | JsaRegimeTag::DualpumpErf | JsaRegimeTag::DualpumpGaussian => {
            let (p1, p2) = config.build_pumps()?;
            let centers = CenterFrequencies {
                omega_p1: p1.center_omega,
                omega_p2: p2.center_omega,
                omega_s: section.omega_s0_rad_per_fs,
                omega_i: section.omega_i0_rad_per_fs,
            };
            let variant = if section.regime == JsaRegimeTag::Linearized {
                TermVariant::PumpTwoReferenced
            } else {
                TermVariant::MeanPumpReferenced
            };
            let sigma1 = section.variant_sigma1_rad_per_fs.unwrap_or(p1.sigma);
            let sigma2 = section.variant_sigma2_rad_per_fs.unwrap_or(p2.sigma);
            let terms =
                numeric!(group_delay_terms(&fiber, &process, centers, sigma1, sigma2, variant));
            match section.regime {
                JsaRegimeTag::Linearized => numeric!(jsa_linearized(&terms, &grid)),
                JsaRegimeTag::DualpumpErf => numeric!(jsa_dualpump_walkoff(
                    &terms,
                    section.tau_fs,
                    WalkoffForm::Erf,
                    &grid
                )),
                _ => numeric!(jsa_dualpump_walkoff(
                    &terms,
                    section.tau_fs,
                    WalkoffForm::GaussianLimit,
                    &grid
                )),
            }
        }
    };
    let normalized = numeric!(normalize_jsi(&grid_out));
    let base = out_path(args, config, "jsa");
    numeric!(io::export_jsa(&normalized, &base));
    Ok(json!({
        "outputs": [format!("{}.real.csv", base.display()),
                     format!("{}.imag.csv", base.display()),
                     format!("{}.json", base.display())],
        "regime": normalized.regime.to_string(),
        "l2_norm": normalized.l2_norm(),
    }))
}

fn run_schmidt(config: &RunConfig, args: &CommonArgs) -> Result<serde_json::Value, RunError> {
    let section = config.schmidt.as_ref().ok_or(ConfigError::MissingSection("schmidt"))?;
    let grid = numeric!(io::import_jsa(&section.input_jsa_base));
    let report = numeric!(schmidt_decompose(&grid));
    let path = out_path(args, config, "schmidt.json");
    numeric!(io::export_schmidt(&report, &path));
    Ok(json!({
        "outputs": [path],
        "schmidt_number": report.schmidt_number,
        "purity": report.purity,
        "g2": report.g2,
        "hom_visibility": report.hom_visibility,
    }))
}

fn run_negativity(config: &RunConfig, args: &CommonArgs) -> Result<serde_json::Value, RunError> {
    let section = config.negativity.as_ref().ok_or(ConfigError::MissingSection("negativity"))?;
    let mut entries = Vec::new();
    for e in &section.entries {
        let grid = numeric!(io::import_jsa(&e.jsa_base));
        entries.push((
            build_process(&e.process),
            num_complex::Complex64::new(e.weight_re, e.weight_im),
            grid,
        ));
    }
    let state = numeric!(build_multiprocess_state(entries));
    let report = numeric!(log_negativity(&state, section.bins));
    let path = out_path(args, config, "negativity.json");
    numeric!(io::export_negativity(&report, &path));
    Ok(json!({
        "outputs": [path],
        "log_negativity_bits": report.log_negativity,
        "bins_used": report.bins_used,
        "converged": report.converged,
    }))
}

fn run_design(config: &RunConfig, args: &CommonArgs) -> Result<serde_json::Value, RunError> {
    let section = config.design.as_ref().ok_or(ConfigError::MissingSection("design"))?;
    let fiber = config.build_fiber()?;
    match section.task {
        DesignTaskTag::FactorableSearch => {
            let process = config.build_process()?;
            let fs_config = FactorableSearchConfig {
                pump_range_um: (
                    section.pump_lambda_max_um.ok_or(ConfigError::Invalid(
                        "factorable_search needs pump_lambda_max_um".into(),
                    ))?,
                    section.pump_lambda_min_um.ok_or(ConfigError::Invalid(
                        "factorable_search needs pump_lambda_min_um".into(),
                    ))?,
                ),
                detuning_max: section.detuning_max_rad_per_fs.unwrap_or(1.5),
                sigma1: section.sigma_rad_per_fs.unwrap_or(0.01),
                sigma2: section.sigma_rad_per_fs.unwrap_or(0.01),
                ..Default::default()
            };
            let candidates = numeric!(factorable_search(&fiber, &process, &fs_config));
            let mut csv = String::from(
                "omega_p_radfs,detuning_radfs,branch,segment_id,t_s_fs,t_i_fs,theta_deg,sigma_symmetric_radfs,symmetric_identity_residual,factorability_condition,degenerate,raman\n",
            );
            for c in &candidates {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{:?}\n",
                    io::fmt17(c.omega_p),
                    io::fmt17(c.detuning),
                    c.branch,
                    c.segment_id,
                    io::fmt17(c.t_s_fs),
                    io::fmt17(c.t_i_fs),
                    c.theta_deg.map(io::fmt17).unwrap_or_default(),
                    c.sigma_symmetric.map(io::fmt17).unwrap_or_default(),
                    c.symmetric_identity_residual.map(io::fmt17).unwrap_or_default(),
                    c.factorability_condition,
                    c.degenerate,
                    c.raman,
                ));
            }
            let path = out_path(args, config, "candidates.csv");
            numeric!(io::write_atomic(&path, csv.as_bytes()));
            Ok(json!({ "outputs": [path], "candidates": candidates.len() }))
        }
        DesignTaskTag::CriticalPower => {
            let process = config.build_process()?;
            let lam = section
                .pump_lambda_um
                .ok_or(ConfigError::Invalid("critical_power needs pump_lambda_um".into()))?;
            let cp = numeric!(critical_power(
                &fiber,
                &process,
                lam,
                section.detuning_max_rad_per_fs.unwrap_or(1.5)
            ));
            Ok(json!({
                "outputs": [],
                "critical_power_w": cp.power_w,
                "bracket_w": cp.bracket_w,
            }))
        }
        DesignTaskTag::TuningScan => {
            let process = config.build_process()?;
            let lam = section
                .pump_lambda_um
                .ok_or(ConfigError::Invalid("tuning_scan needs pump_lambda_um".into()))?;
            if section.scale_values.is_empty() {
                return Err(ConfigError::Invalid("tuning_scan needs scale_values".into()).into());
            }
            let rows = numeric!(tuning_scan(
                &fiber,
                &process,
                &section.scale_values,
                lam,
                section.detuning_max_rad_per_fs.unwrap_or(1.5)
            ));
            let mut csv = String::from("scale,lambda_s_um,lambda_i_um,phasematched\n");
            for r in &rows {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    io::fmt17(r.scale),
                    r.lambda_s_um.map(io::fmt17).unwrap_or_default(),
                    r.lambda_i_um.map(io::fmt17).unwrap_or_default(),
                    r.phasematched
                ));
            }
            let path = out_path(args, config, "tuning.csv");
            numeric!(io::write_atomic(&path, csv.as_bytes()));
            Ok(json!({ "outputs": [path], "rows": rows.len() }))
        }
        DesignTaskTag::Ultrabroadband => {
            let mode =
                sfwm_core::fiber::ModeId::parse(section.mode.as_deref().unwrap_or("HE11x"));
            let result = numeric!(ultrabroadband_search(
                surrogate_family(&fiber),
                &mode,
                (section.scale_min.unwrap_or(0.8), section.scale_max.unwrap_or(1.2)),
                (
                    section.pump_lambda_min_um.unwrap_or(0.6),
                    section.pump_lambda_max_um.unwrap_or(2.0)
                ),
            ));
            Ok(json!({
                "outputs": [],
                "scale": result.scale,
                "lambda_zd_um": result.lambda_zd_um,
                "k2_residual": result.k2_residual,
                "k4_residual": result.k4_residual,
                "k3_at_solution": result.k3_at_solution,
                "k3_small": result.k3_small,
            }))
        }
    }
}

fn run_charsim(config: &RunConfig, args: &CommonArgs) -> Result<serde_json::Value, RunError> {
    let section = config.charsim.as_ref().ok_or(ConfigError::MissingSection("charsim"))?;
    let truth = numeric!(io::import_jsa(&section.truth_jsa_base));
    let det = build_detector(&section.detector, args.seed.or(config.seed));
    let mode = if section.sampled { NoiseMode::Sampled } else { NoiseMode::Expectation };
    let rec = match section.method {
        config::CharsimMethodTag::Monochromator => {
            let truth_i = sfwm_core::charsim::IntensityGrid::from_jsa(&truth);
            numeric!(sim_monochromator(
                &truth_i,
                section.steps_s.unwrap_or(32),
                section.steps_i.unwrap_or(32),
                section.pair_budget.unwrap_or(1e6),
                &det,
                mode
            ))
        }
        config::CharsimMethodTag::Ft => {
            let ft_config = FtConfig {
                delay_step_fs: section.delay_step_fs.unwrap_or(1.0),
                n_delays: section.n_delays.unwrap_or(4096),
                ..Default::default()
            };
            let ft_mode = match section.ft_mode.unwrap_or(FtModeTag::TwoD) {
                FtModeTag::OneD => FtMode::OneD,
                FtModeTag::TwoD => FtMode::TwoD,
                FtModeTag::Diagonal => FtMode::Diagonal,
            };
            numeric!(sim_ft_spectroscopy(&truth, &ft_config, ft_mode, &det, mode))
        }
        config::CharsimMethodTag::Dispersive => {
            let d_config = DispersiveConfig {
                d_ps_per_nm_km: section.dispersion_ps_per_nm_km.unwrap_or(-120.0),
                length_km: section.fiber_length_km.unwrap_or(0.4),
                n_time_bins: section.n_time_bins.unwrap_or(160),
                ..Default::default()
            };
            numeric!(sim_dispersive_fiber(&truth, &d_config, &det, mode))
        }
        config::CharsimMethodTag::Set => {
            let truth_i = sfwm_core::charsim::IntensityGrid::from_jsa(&truth);
            let s_config = SetConfig {
                seed_steps: section.seed_steps.unwrap_or(64),
                seed_power: section.seed_power.unwrap_or(1.0),
                ..Default::default()
            };
            numeric!(sim_set(&truth_i, &s_config, &det, mode))
        }
    };
    let base = out_path(args, config, "reconstruction");
    numeric!(io::export_reconstruction(&rec, &base));
    let mut summary = json!({
        "outputs": [format!("{}.csv", base.display()), format!("{}.json", base.display())],
        "overlap": rec.metrics.overlap,
        "l1": rec.metrics.l1,
        "settings": rec.settings,
    });
    if let Some(d) = rec.diagonal {
        summary.as_object_mut().unwrap().insert(
            "diagonal".into(),
            json!({
                "sigma_d_radfs": d.sigma_d,
                "sigma_a_radfs": d.sigma_a,
                "r": d.r,
                "implied_purity": d.implied_purity,
            }),
        );
    }
    Ok(summary)
}
