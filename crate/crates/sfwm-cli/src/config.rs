//! Run configuration: one JSON document per run, schema-validated with
//! unknown keys rejected. All physical quantities carry explicit units in
//! their key names.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sfwm_core::charsim::DetectorModel;
use sfwm_core::fiber::{FiberModel, ModeId};
use sfwm_core::jsa::{GridSpec, PumpSpec};
use sfwm_core::phasematch::{Direction, ProcessSpec, WaveAssignment};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {0}: {1}")]
    Read(PathBuf, std::io::Error),
    #[error("config schema error: {0}")]
    Schema(String),
    #[error("config section `{0}` is required by this subcommand")]
    MissingSection(&'static str),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub fiber: FiberConfig,
    #[serde(default)]
    pub process: Option<ProcessConfig>,
    #[serde(default)]
    pub pumps: Vec<PumpConfig>,
    #[serde(default)]
    pub dispersion: Option<DispersionConfig>,
    #[serde(default)]
    pub contour: Option<ContourConfig>,
    #[serde(default)]
    pub jsa: Option<JsaConfig>,
    #[serde(default)]
    pub schmidt: Option<SchmidtConfig>,
    #[serde(default)]
    pub negativity: Option<NegativityConfig>,
    #[serde(default)]
    pub design: Option<DesignConfig>,
    #[serde(default)]
    pub charsim: Option<CharsimConfig>,
    /// Basename prefix for output files.
    #[serde(default = "default_prefix")]
    pub out_prefix: String,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_prefix() -> String {
    "run".to_string()
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub struct FiberConfig {
    pub kind: FiberKindTag,
    #[serde(default)]
    pub core_radius_um: Option<f64>,
    #[serde(default)]
    pub index_contrast: Option<f64>,
    #[serde(default)]
    pub table_path: Option<PathBuf>,
    #[serde(default)]
    pub birefringence_dn: f64,
    #[serde(default = "one")]
    pub scale_factor: f64,
    #[serde(default = "one")]
    pub length_m: f64,
    #[serde(default)]
    pub gamma_per_w_km: BTreeMap<String, GammaConfig>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FiberKindTag {
    StepIndexSurrogate,
    Tabulated,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GammaConfig {
    pub gamma1_per_w_km: f64,
    pub gamma2_per_w_km: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessConfig {
    pub label: String,
    pub pump1: WaveConfig,
    pub pump2: WaveConfig,
    pub signal: WaveConfig,
    pub idler: WaveConfig,
    #[serde(default)]
    pub p1_peak_w: f64,
    #[serde(default)]
    pub p2_peak_w: f64,
    #[serde(default = "one")]
    pub kappa_weight: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct WaveConfig {
    pub mode: String,
    #[serde(default)]
    pub backward: bool,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PumpConfig {
    pub center_lambda_um: f64,
    pub sigma_rad_per_fs: f64,
    #[serde(default)]
    pub average_power_w: f64,
    #[serde(default)]
    pub peak_power_w: f64,
    #[serde(default)]
    pub chirp_fs2: f64,
    #[serde(default)]
    pub delay_fs: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionConfig {
    pub mode: String,
    pub lambda_min_um: f64,
    pub lambda_max_um: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    200
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ContourConfig {
    pub pump_lambda_min_um: f64,
    pub pump_lambda_max_um: f64,
    #[serde(default = "default_n_pump")]
    pub n_pump: usize,
    pub detuning_max_rad_per_fs: f64,
    #[serde(default = "default_n_det")]
    pub n_detuning: usize,
}

fn default_n_pump() -> usize {
    96
}
fn default_n_det() -> usize {
    192
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub struct JsaConfig {
    pub regime: JsaRegimeTag,
    pub omega_s0_rad_per_fs: f64,
    pub omega_i0_rad_per_fs: f64,
    pub span_s_rad_per_fs: f64,
    pub span_i_rad_per_fs: f64,
    #[serde(default = "default_grid_n")]
    pub n: usize,
    /// Pump arrival delay for the dual-pump walk-off regime.
    #[serde(default)]
    pub tau_fs: f64,
    /// Pump bandwidths for the linearized/dual-pump regimes when no pump
    /// section applies (defaults to the pumps section).
    #[serde(default)]
    pub variant_sigma1_rad_per_fs: Option<f64>,
    #[serde(default)]
    pub variant_sigma2_rad_per_fs: Option<f64>,
}

fn default_grid_n() -> usize {
    256
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum JsaRegimeTag {
    Full,
    Linearized,
    DualpumpErf,
    DualpumpGaussian,
    Counterprop,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SchmidtConfig {
    /// Basename of a previously exported JSA (without `.real.csv` etc.).
    pub input_jsa_base: PathBuf,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NegativityConfig {
    pub entries: Vec<NegativityEntry>,
    #[serde(default = "default_bins")]
    pub bins: usize,
}

fn default_bins() -> usize {
    32
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NegativityEntry {
    pub process: ProcessConfig,
    pub weight_re: f64,
    #[serde(default)]
    pub weight_im: f64,
    pub jsa_base: PathBuf,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub struct DesignConfig {
    pub task: DesignTaskTag,
    #[serde(default)]
    pub pump_lambda_um: Option<f64>,
    #[serde(default)]
    pub pump_lambda_min_um: Option<f64>,
    #[serde(default)]
    pub pump_lambda_max_um: Option<f64>,
    #[serde(default)]
    pub detuning_max_rad_per_fs: Option<f64>,
    #[serde(default)]
    pub sigma_rad_per_fs: Option<f64>,
    #[serde(default)]
    pub scale_min: Option<f64>,
    #[serde(default)]
    pub scale_max: Option<f64>,
    #[serde(default)]
    pub scale_values: Vec<f64>,
    #[serde(default)]
    pub mode: Option<String>,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum DesignTaskTag {
    FactorableSearch,
    CriticalPower,
    TuningScan,
    Ultrabroadband,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub struct CharsimConfig {
    pub method: CharsimMethodTag,
    pub truth_jsa_base: PathBuf,
    #[serde(default)]
    pub detector: Option<DetectorConfig>,
    #[serde(default)]
    pub sampled: bool,
    #[serde(default)]
    pub steps_s: Option<usize>,
    #[serde(default)]
    pub steps_i: Option<usize>,
    #[serde(default)]
    pub pair_budget: Option<f64>,
    #[serde(default)]
    pub delay_step_fs: Option<f64>,
    #[serde(default)]
    pub n_delays: Option<usize>,
    #[serde(default)]
    pub ft_mode: Option<FtModeTag>,
    #[serde(default)]
    pub dispersion_ps_per_nm_km: Option<f64>,
    #[serde(default)]
    pub fiber_length_km: Option<f64>,
    #[serde(default)]
    pub n_time_bins: Option<usize>,
    #[serde(default)]
    pub seed_steps: Option<usize>,
    #[serde(default)]
    pub seed_power: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum CharsimMethodTag {
    Monochromator,
    Ft,
    Dispersive,
    Set,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum FtModeTag {
    OneD,
    TwoD,
    Diagonal,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub efficiency: f64,
    pub dark_count_rate_hz: f64,
    pub timing_jitter_ps: f64,
    pub coincidence_window_ps: f64,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError::Read(path.to_path_buf(), e))?;
        let config: RunConfig =
            serde_json::from_str(&text).map_err(|e| ConfigError::Schema(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self.fiber.kind {
            FiberKindTag::StepIndexSurrogate => {
                if self.fiber.core_radius_um.is_none() || self.fiber.index_contrast.is_none() {
                    return Err(ConfigError::Invalid(
                        "step_index_surrogate needs fiber.core_radius_um and fiber.index_contrast"
                            .into(),
                    ));
                }
            }
            FiberKindTag::Tabulated => {
                if self.fiber.table_path.is_none() {
                    return Err(ConfigError::Invalid("tabulated fiber needs fiber.table_path".into()));
                }
            }
        }
        for p in &self.pumps {
            if p.sigma_rad_per_fs <= 0.0 {
                return Err(ConfigError::Invalid("pump sigma_rad_per_fs must be positive".into()));
            }
            if p.center_lambda_um <= 0.0 {
                return Err(ConfigError::Invalid("pump center_lambda_um must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn build_fiber(&self) -> Result<FiberModel, ConfigError> {
        let mut fiber = match self.fiber.kind {
            FiberKindTag::StepIndexSurrogate => FiberModel::step_index(
                self.fiber.core_radius_um.unwrap(),
                self.fiber.index_contrast.unwrap(),
            )
            .map_err(|e| ConfigError::Invalid(e.to_string()))?,
            FiberKindTag::Tabulated => {
                FiberModel::load_dispersion_table(self.fiber.table_path.as_ref().unwrap())
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?
            }
        };
        fiber = fiber
            .with_birefringence(self.fiber.birefringence_dn)
            .with_length_m(self.fiber.length_m);
        if self.fiber.scale_factor != 1.0 {
            fiber = fiber
                .scaled(self.fiber.scale_factor)
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        for (label, g) in &self.fiber.gamma_per_w_km {
            fiber = fiber
                .with_gamma(label, g.gamma1_per_w_km, g.gamma2_per_w_km)
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        Ok(fiber)
    }

    pub fn build_process(&self) -> Result<ProcessSpec, ConfigError> {
        let p = self.process.as_ref().ok_or(ConfigError::MissingSection("process"))?;
        Ok(build_process(p))
    }

    pub fn build_pumps(&self) -> Result<(PumpSpec, PumpSpec), ConfigError> {
        if self.pumps.len() != 2 {
            return Err(ConfigError::Invalid(format!(
                "expected 2 pumps, got {}",
                self.pumps.len()
            )));
        }
        Ok((build_pump(&self.pumps[0]), build_pump(&self.pumps[1])))
    }
}

pub fn build_process(p: &ProcessConfig) -> ProcessSpec {
    let wave = |w: &WaveConfig| WaveAssignment {
        mode: ModeId::parse(&w.mode),
        direction: if w.backward { Direction::Backward } else { Direction::Forward },
    };
    ProcessSpec {
        label: p.label.clone(),
        pump1: wave(&p.pump1),
        pump2: wave(&p.pump2),
        signal: wave(&p.signal),
        idler: wave(&p.idler),
        p1_w: p.p1_peak_w,
        p2_w: p.p2_peak_w,
        kappa_weight: p.kappa_weight,
    }
}

pub fn build_pump(p: &PumpConfig) -> PumpSpec {
    PumpSpec::new(sfwm_core::constants::lambda_to_omega(p.center_lambda_um), p.sigma_rad_per_fs)
        .with_powers(p.average_power_w, p.peak_power_w)
        .with_chirp(p.chirp_fs2)
        .with_delay(p.delay_fs)
}

pub fn build_detector(d: &Option<DetectorConfig>, seed_override: Option<u64>) -> DetectorModel {
    let mut det = match d {
        Some(c) => DetectorModel {
            efficiency: c.efficiency,
            dark_count_rate_hz: c.dark_count_rate_hz,
            timing_jitter_ps: c.timing_jitter_ps,
            coincidence_window_ps: c.coincidence_window_ps,
            seed: c.seed,
        },
        None => DetectorModel::default(),
    };
    if let Some(s) = seed_override {
        det.seed = s;
    }
    det
}

pub fn grid_spec_from(j: &JsaConfig) -> GridSpec {
    GridSpec::symmetric(
        j.omega_s0_rad_per_fs,
        j.omega_i0_rad_per_fs,
        j.span_s_rad_per_fs,
        j.span_i_rad_per_fs,
        j.n,
    )
}
