//! Scenario files: a TOML tree mapping onto [`Scenario`], with `--set`
//! overrides applied to the tree before it is checked against the schema.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use ris_track::beamsplit::{PartitionAxis, PhaseMatching, SplitMethod, SplitSpec};
use ris_track::channel::{AntennaGains, CarrierSpec};
use ris_track::geometry::{PolarPoint, RisLayout, TrajectorySpec};
use ris_track::optimizer::{PhaseSet, SwitchModel, ON_AMPLITUDE};
use ris_track::sim::{Correction, Scenario, UwbMode};
use ris_track::uwb::{
    calibrate_noise, AnchorPair, NoiseCalibration, RangingNoise, DEFAULT_ANGLE_OFFSET_DEG,
    DEFAULT_BASELINE, DEFAULT_BETA_ANGLE, DEFAULT_BETA_DISTANCE,
};

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioFile {
    pub surface: SurfaceSection,
    pub carrier: CarrierSection,
    pub antennas: AntennaSection,
    pub tx: TxSection,
    pub trajectory: TrajectorySection,
    pub optimizer: OptimizerSection,
    pub split: SplitSection,
    pub uwb: UwbSection,
    pub correction: CorrectionSection,
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurfaceSection {
    pub modules_x: usize,
    pub modules_y: usize,
    pub elements_per_module_x: usize,
    pub elements_per_module_y: usize,
    pub module_width_m: f64,
    pub module_height_m: f64,
}

impl Default for SurfaceSection {
    fn default() -> Self {
        let l = RisLayout::default();
        Self {
            modules_x: l.modules_x(),
            modules_y: l.modules_y(),
            elements_per_module_x: l.elems_per_module_x(),
            elements_per_module_y: l.elems_per_module_y(),
            module_width_m: l.module_width(),
            module_height_m: l.module_height(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CarrierSection {
    pub frequency_hz: f64,
}

impl Default for CarrierSection {
    fn default() -> Self {
        Self {
            frequency_hz: CarrierSpec::default().frequency(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AntennaSection {
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    /// Linear reflection amplitude of the phase-shifting element state.
    pub on_amplitude: f64,
}

impl Default for AntennaSection {
    fn default() -> Self {
        let g = AntennaGains::default();
        Self {
            tx_gain_dbi: g.tx_gain_dbi,
            rx_gain_dbi: g.rx_gain_dbi,
            on_amplitude: ON_AMPLITUDE,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TxSection {
    pub distance_m: f64,
    pub angle_deg: f64,
    pub height_m: f64,
}

impl Default for TxSection {
    fn default() -> Self {
        Self {
            distance_m: 2.0,
            angle_deg: -30.0,
            height_m: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectorySection {
    pub start_distance_m: f64,
    pub start_angle_deg: f64,
    pub height_m: f64,
    pub radial_speed_m_per_s: f64,
    pub angular_speed_deg_per_s: f64,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
}

impl Default for TrajectorySection {
    fn default() -> Self {
        Self {
            start_distance_m: 2.0,
            start_angle_deg: -10.0,
            height_m: 0.0,
            radial_speed_m_per_s: 0.05,
            angular_speed_deg_per_s: 5.0,
            duration_s: 10.0,
            sample_rate_hz: 10.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSection {
    pub phase_count: usize,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        Self { phase_count: 8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum MethodName {
    #[serde(alias = "none", alias = "conventional")]
    None,
    #[serde(alias = "ASM", alias = "asm")]
    Asm,
    #[serde(alias = "DSM", alias = "dsm")]
    Dsm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchingName {
    Default,
    Exhaustive,
    SamePhase,
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisName {
    Columns,
    Rows,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSection {
    pub method: MethodName,
    pub beam_count: usize,
    /// Angular spread for ASM.
    pub factor_deg: f64,
    /// Radial spread for DSM.
    pub factor_m: f64,
    pub phase_matching: MatchingName,
    pub axis: AxisName,
}

impl Default for SplitSection {
    fn default() -> Self {
        Self {
            method: MethodName::None,
            beam_count: 2,
            factor_deg: 2.5,
            factor_m: 0.1,
            phase_matching: MatchingName::Default,
            axis: AxisName::Columns,
        }
    }
}

impl SplitSection {
    pub fn spec_for(&self, method: SplitMethod) -> Result<SplitSpec, CliError> {
        let factor = match method {
            SplitMethod::Asm => self.factor_deg,
            SplitMethod::Dsm => self.factor_m,
        };
        let mut spec = SplitSpec::new(method, factor, self.beam_count).map_err(config_err)?;
        spec = spec.with_axis(match self.axis {
            AxisName::Columns => PartitionAxis::Columns,
            AxisName::Rows => PartitionAxis::Rows,
        });
        let matching = match self.phase_matching {
            MatchingName::Default => PhaseMatching::default_for(method),
            MatchingName::Exhaustive => PhaseMatching::Exhaustive,
            MatchingName::SamePhase => PhaseMatching::SamePhase,
            MatchingName::Independent => PhaseMatching::Independent,
        };
        Ok(spec.with_matching(matching))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UwbModeName {
    Perfect,
    Noisy,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UwbSection {
    pub mode: UwbModeName,
    pub baseline_m: f64,
    pub anchor_height_offset_m: f64,
    /// Per-anchor ranging noise; calibrated from the targets below when unset.
    pub sigma_range_m: Option<f64>,
    /// Per-anchor constant range bias; derived from `angle_offset_deg` when unset.
    pub bias_range_m: Option<[f64; 2]>,
    pub seed: u64,
    pub calibration_distance_m: f64,
    pub calibration_angle_deg: f64,
    pub target_distance_range_m: f64,
    pub target_angle_range_deg: f64,
    pub angle_offset_deg: f64,
}

impl Default for UwbSection {
    fn default() -> Self {
        let cal = NoiseCalibration::default();
        Self {
            mode: UwbModeName::Perfect,
            baseline_m: DEFAULT_BASELINE,
            anchor_height_offset_m: 0.0,
            sigma_range_m: None,
            bias_range_m: None,
            seed: 0,
            calibration_distance_m: cal.position.distance(),
            calibration_angle_deg: cal.position.angle_deg(),
            target_distance_range_m: cal.distance_range_m,
            target_angle_range_deg: cal.angle_range_deg,
            angle_offset_deg: DEFAULT_ANGLE_OFFSET_DEG,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrectionSection {
    pub enabled: bool,
    pub beta_d: f64,
    pub beta_nu: f64,
}

impl Default for CorrectionSection {
    fn default() -> Self {
        Self {
            enabled: false,
            beta_d: DEFAULT_BETA_DISTANCE,
            beta_nu: DEFAULT_BETA_ANGLE,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub distance_m: f64,
    pub from_deg: f64,
    pub to_deg: f64,
    pub step_deg: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            distance_m: 2.25,
            from_deg: -90.0,
            to_deg: 90.0,
            step_deg: 1.0,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

/// Parses the right-hand side of `--set`: a TOML value when it is one,
/// otherwise a bare string.
fn override_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn apply_override(root: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Config(format!(
            "override key `{path}` is malformed"
        )));
    }
    let (last, parents) = keys.split_last().expect("non-empty split");
    let mut table = root;
    for key in parents {
        let entry = table
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| {
            CliError::Config(format!("override `{path}`: `{key}` is not a section"))
        })?;
    }
    table.insert(last.to_string(), override_value(raw.trim()));
    Ok(())
}

impl ScenarioFile {
    /// Reads `path` (defaults when `None`) and applies `overrides` in order.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let text = match path {
            Some(p) => fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?,
            None => String::new(),
        };
        let origin = path.map_or_else(|| "defaults".to_string(), |p| p.display().to_string());
        if overrides.is_empty() {
            return toml::from_str(&text).map_err(|e| CliError::Config(format!("{origin}: {e}")));
        }
        let mut root: toml::Table = text
            .parse()
            .map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
        for o in overrides {
            apply_override(&mut root, o)?;
        }
        ScenarioFile::deserialize(toml::Value::Table(root))
            .map_err(|e| CliError::Config(format!("{origin} with overrides: {e}")))
    }

    pub fn anchors(&self) -> Result<AnchorPair, CliError> {
        AnchorPair::new(self.uwb.baseline_m, self.uwb.anchor_height_offset_m).map_err(config_err)
    }

    fn noise(&self, anchors: &AnchorPair) -> Result<RangingNoise, CliError> {
        let u = &self.uwb;
        let cal = NoiseCalibration {
            position: PolarPoint::new(u.calibration_distance_m, u.calibration_angle_deg)
                .map_err(config_err)?,
            distance_range_m: u.target_distance_range_m,
            angle_range_deg: u.target_angle_range_deg,
            angle_offset_deg: u.angle_offset_deg,
            ..NoiseCalibration::default()
        };
        let (sigma, bias) = match (u.sigma_range_m, u.bias_range_m) {
            (Some(s), Some(b)) => (s, b),
            (s, b) => {
                let fitted = calibrate_noise(&cal, anchors).map_err(config_err)?;
                (
                    s.unwrap_or(fitted.sigma_range),
                    b.unwrap_or(fitted.bias_range),
                )
            }
        };
        RangingNoise::new(sigma, bias, u.seed).map_err(config_err)
    }

    pub fn scenario(&self) -> Result<Scenario, CliError> {
        let s = &self.surface;
        let layout = RisLayout::new(
            s.modules_x,
            s.modules_y,
            s.elements_per_module_x,
            s.elements_per_module_y,
            s.module_width_m,
            s.module_height_m,
        )
        .map_err(config_err)?;
        let t = &self.trajectory;
        let trajectory = TrajectorySpec {
            start: PolarPoint::with_height(t.start_distance_m, t.start_angle_deg, t.height_m)
                .map_err(config_err)?,
            radial_speed: t.radial_speed_m_per_s,
            angular_speed: t.angular_speed_deg_per_s,
            duration: t.duration_s,
            sample_rate: t.sample_rate_hz,
        };
        trajectory.validate().map_err(config_err)?;
        let split = match self.split.method {
            MethodName::None => None,
            MethodName::Asm => Some(self.split.spec_for(SplitMethod::Asm)?),
            MethodName::Dsm => Some(self.split.spec_for(SplitMethod::Dsm)?),
        };
        let anchors = self.anchors()?;
        let uwb = match self.uwb.mode {
            UwbModeName::Perfect => UwbMode::Perfect,
            UwbModeName::Noisy => UwbMode::Noisy(self.noise(&anchors)?),
        };
        let c = &self.correction;
        let correction = if c.enabled {
            for beta in [c.beta_d, c.beta_nu] {
                if !(0.0..=1.0).contains(&beta) {
                    return Err(CliError::Config(format!(
                        "correction beta {beta} outside [0, 1]"
                    )));
                }
            }
            Correction::On {
                beta_d: c.beta_d,
                beta_nu: c.beta_nu,
            }
        } else {
            Correction::Off
        };
        let on = self.antennas.on_amplitude;
        if !(0.0..=1.0).contains(&on) {
            return Err(CliError::Config(format!(
                "antennas.on_amplitude {on} outside [0, 1]"
            )));
        }
        Ok(Scenario {
            layout,
            carrier: CarrierSpec::new(self.carrier.frequency_hz).map_err(config_err)?,
            gains: AntennaGains {
                tx_gain_dbi: self.antennas.tx_gain_dbi,
                rx_gain_dbi: self.antennas.rx_gain_dbi,
            },
            switch: SwitchModel { on_amplitude: on },
            tx: PolarPoint::with_height(self.tx.distance_m, self.tx.angle_deg, self.tx.height_m)
                .map_err(config_err)?,
            trajectory,
            split,
            phases: PhaseSet::evenly_spaced(self.optimizer.phase_count).map_err(config_err)?,
            anchors,
            uwb,
            correction,
        })
    }
}
