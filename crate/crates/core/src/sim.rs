//! Scenario orchestration: tracking runs, stationary sweeps and summaries.
//!
//! Configurations are always optimized toward the (possibly erroneous)
//! position estimate and evaluated at the true receiver position.

use std::collections::HashMap;

use serde::Serialize;

use crate::beamsplit::{optimize_split, SplitMethod, SplitSpec};
use crate::channel::{effective_channel, effective_channel_for_states, AntennaGains, CarrierSpec};
use crate::error::{Error, Result};
use crate::geometry::{
    build_geometry, sample_trajectory, PolarPoint, RisGeometry, RisLayout, TrajectorySpec,
};
use crate::optimizer::{ElementState, LinkSetup, PhaseSet, RisConfig, SwitchModel};
use crate::uwb::{
    simulate_ranging, stream_rng, triangulate, AnchorPair, CorrectionState, RangingNoise,
    UwbEstimate, DEFAULT_BETA_ANGLE, DEFAULT_BETA_DISTANCE,
};

/// Method label of the all-OFF baseline records.
pub const OFF_LABEL: &str = "off";

/// Column order of the trace CSV.
pub const TRACE_COLUMNS: [&str; 11] = [
    "time_s",
    "true_d_m",
    "true_nu_deg",
    "est_d_m",
    "est_nu_deg",
    "corr_d_m",
    "corr_nu_deg",
    "method",
    "mag_db",
    "predicted_db",
    "skipped",
];

/// Sweep targets at ±90° are pulled this far inside the open angle range.
const GRAZING_MARGIN_DEG: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UwbMode {
    Perfect,
    Noisy(RangingNoise),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Correction {
    Off,
    On { beta_d: f64, beta_nu: f64 },
}

impl Correction {
    pub fn default_on() -> Self {
        Correction::On {
            beta_d: DEFAULT_BETA_DISTANCE,
            beta_nu: DEFAULT_BETA_ANGLE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub layout: RisLayout,
    pub carrier: CarrierSpec,
    pub gains: AntennaGains,
    pub switch: SwitchModel,
    pub tx: PolarPoint,
    pub trajectory: TrajectorySpec,
    pub split: Option<SplitSpec>,
    pub phases: PhaseSet,
    pub anchors: AnchorPair,
    pub uwb: UwbMode,
    pub correction: Correction,
}

impl Default for Scenario {
    /// Tx at 2 m / −30°, receiver from 2 m / −10° moving 0.05 m/s and 5°/s
    /// for 10 s sampled at 10 Hz, conventional optimization with `T = 8`,
    /// perfect estimates.
    fn default() -> Self {
        Self {
            layout: RisLayout::default(),
            carrier: CarrierSpec::default(),
            gains: AntennaGains::default(),
            switch: SwitchModel::default(),
            tx: PolarPoint::new(2.0, -30.0).expect("valid point"),
            trajectory: TrajectorySpec {
                start: PolarPoint::new(2.0, -10.0).expect("valid point"),
                radial_speed: 0.05,
                angular_speed: 5.0,
                duration: 10.0,
                sample_rate: 10.0,
            },
            split: None,
            phases: PhaseSet::default(),
            anchors: AnchorPair::default(),
            uwb: UwbMode::Perfect,
            correction: Correction::Off,
        }
    }
}

impl Scenario {
    pub fn method_label(&self) -> String {
        let base = match self.split.map(|s| s.method) {
            None => "conventional",
            Some(SplitMethod::Asm) => "asm",
            Some(SplitMethod::Dsm) => "dsm",
        };
        match self.correction {
            Correction::Off => base.to_string(),
            Correction::On { .. } => format!("{base}+corr"),
        }
    }

    pub fn link<'a>(&self, geom: &'a RisGeometry) -> Result<LinkSetup<'a>> {
        LinkSetup::with_switch(geom, self.tx, self.carrier, self.gains, self.switch)
    }

    /// Configuration toward `target` using this scenario's method.
    pub fn configure(&self, setup: &LinkSetup<'_>, target: &PolarPoint) -> Result<RisConfig> {
        match &self.split {
            None => setup.optimize(target, &self.phases),
            Some(spec) => Ok(optimize_split(setup, target, spec, &self.phases)?.combined),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// Zero-based sample index within the run.
    pub sample: usize,
    pub time: f64,
    pub true_pos: PolarPoint,
    pub estimate: UwbEstimate,
    pub corrected: Option<UwbEstimate>,
    pub method: String,
    /// Magnitude at the true receiver position.
    pub magnitude_db: f64,
    /// Magnitude predicted at the optimization target.
    pub predicted_db: f64,
    pub skipped: bool,
}

impl TraceRecord {
    /// Fields in [`TRACE_COLUMNS`] order.
    pub fn csv_fields(&self) -> [String; 11] {
        let (cd, cn) = match &self.corrected {
            Some(c) => (c.distance.to_string(), c.angle_deg.to_string()),
            None => (String::new(), String::new()),
        };
        [
            self.time.to_string(),
            self.true_pos.distance().to_string(),
            self.true_pos.angle_deg().to_string(),
            self.estimate.distance.to_string(),
            self.estimate.angle_deg.to_string(),
            cd,
            cn,
            self.method.clone(),
            self.magnitude_db.to_string(),
            self.predicted_db.to_string(),
            u8::from(self.skipped).to_string(),
        ]
    }
}

fn unavailable(sample_index: usize, timestamp: f64) -> UwbEstimate {
    UwbEstimate {
        distance: f64::NAN,
        angle_deg: f64::NAN,
        timestamp,
        sample_index,
    }
}

/// Runs the scenario's method along the trajectory, followed by the
/// off-state baseline records for the same samples.
///
/// A sample whose estimate cannot be triangulated or turned into a valid
/// target is flagged as skipped and keeps the previous configuration (the
/// off-state before the first valid sample).
pub fn run_tracking(scenario: &Scenario) -> Result<Vec<TraceRecord>> {
    let geom = build_geometry(&scenario.layout);
    let setup = scenario.link(&geom)?;
    let samples = sample_trajectory(&scenario.trajectory)?;
    let label = scenario.method_label();

    let mut rng = match scenario.uwb {
        UwbMode::Noisy(noise) => Some(stream_rng(noise.seed)),
        UwbMode::Perfect => None,
    };
    let mut filters = match scenario.correction {
        Correction::Off => None,
        Correction::On { beta_d, beta_nu } => Some((
            CorrectionState::new(beta_d)?,
            CorrectionState::new(beta_nu)?,
        )),
    };

    let off_states = vec![ElementState::Off; geom.len()];
    let mut config: Option<RisConfig> = None;
    let mut records = Vec::with_capacity(samples.len());
    let mut baseline = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        let k = i + 1;
        let raw = match (&scenario.uwb, rng.as_mut()) {
            (UwbMode::Noisy(noise), Some(rng)) => {
                let r = simulate_ranging(&s.position, &scenario.anchors, noise, rng);
                triangulate(r.r1, r.r2, &scenario.anchors)
                    .ok()
                    .map(|e| e.at(k, s.time))
            }
            _ => Some(UwbEstimate {
                distance: s.position.distance(),
                angle_deg: s.position.angle_deg(),
                timestamp: s.time,
                sample_index: k,
            }),
        };
        let corrected = match (raw, filters.as_mut()) {
            (Some(e), Some((fd, fa))) => Some(UwbEstimate {
                distance: fd.correct_step(e.distance),
                angle_deg: fa.correct_step(e.angle_deg),
                ..e
            }),
            _ => None,
        };
        let target = corrected.or(raw).and_then(|e| e.to_polar().ok());
        let fresh = target.and_then(|t| scenario.configure(&setup, &t).ok());
        let skipped = fresh.is_none();
        if let Some(c) = fresh {
            config = Some(c);
        }
        let active = match &config {
            Some(c) => c,
            None => {
                config = Some(setup.off_state(&s.position)?);
                config.as_ref().expect("just set")
            }
        };
        let estimate = raw.unwrap_or_else(|| unavailable(k, s.time));
        let chan = setup.channel_at(&s.position)?;
        let at_true = effective_channel(&chan, active, setup.gains())?;
        let off =
            effective_channel_for_states(&chan, &off_states, setup.switch_model(), setup.gains())?;
        records.push(TraceRecord {
            sample: i,
            time: s.time,
            true_pos: s.position,
            estimate,
            corrected,
            method: label.clone(),
            magnitude_db: at_true.magnitude_db,
            predicted_db: active.predicted().magnitude_db,
            skipped,
        });
        baseline.push(TraceRecord {
            sample: i,
            time: s.time,
            true_pos: s.position,
            estimate,
            corrected,
            method: OFF_LABEL.to_string(),
            magnitude_db: off.magnitude_db,
            predicted_db: off.magnitude_db,
            skipped: false,
        });
    }
    records.extend(baseline);
    Ok(records)
}

/// Stationary receiver at the trajectory start; one configuration per
/// swept angle toward `(fixed_distance, angle)`.
pub fn run_sweep(
    scenario: &Scenario,
    angles: &[f64],
    fixed_distance: f64,
) -> Result<Vec<TraceRecord>> {
    let geom = build_geometry(&scenario.layout);
    let setup = scenario.link(&geom)?;
    let receiver = scenario.trajectory.start;
    let label = scenario.method_label();
    let limit = 90.0 - GRAZING_MARGIN_DEG;
    angles
        .iter()
        .enumerate()
        .map(|(i, &angle)| {
            let target = PolarPoint::new(fixed_distance, angle.clamp(-limit, limit))?;
            let config = scenario.configure(&setup, &target)?;
            Ok(TraceRecord {
                sample: i,
                time: 0.0,
                true_pos: receiver,
                estimate: UwbEstimate {
                    distance: fixed_distance,
                    angle_deg: angle,
                    timestamp: 0.0,
                    sample_index: i + 1,
                },
                corrected: None,
                method: label.clone(),
                magnitude_db: setup.predict_at(&config, &receiver)?.magnitude_db,
                predicted_db: config.predicted().magnitude_db,
                skipped: false,
            })
        })
        .collect()
}

/// Evenly stepped angles from `from` to `to` inclusive.
pub fn sweep_angles(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite()) || !from.is_finite() || !to.is_finite() || to < from {
        return Err(Error::InvalidParameter(format!(
            "sweep needs from ≤ to and a positive step, got {from}..{to} step {step}"
        )));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| from + i as f64 * step).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub samples: usize,
    pub skipped: usize,
    pub mean_db: f64,
    pub worst_db: f64,
    /// Mean of `baseline − method` over shared samples; positive is a loss.
    pub gap_db: Option<f64>,
    /// Fraction of samples below the off-state record of the same sample.
    pub fraction_below_off: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub baseline: String,
    pub methods: Vec<MethodSummary>,
}

impl Summary {
    pub fn method(&self, label: &str) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == label)
    }
}

/// Per-method statistics in order of first appearance.
pub fn summarize(records: &[TraceRecord], baseline: &str) -> Result<Summary> {
    if records.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot summarize an empty trace".into(),
        ));
    }
    let mut order: Vec<&str> = Vec::new();
    let mut by_method: HashMap<&str, Vec<&TraceRecord>> = HashMap::new();
    for r in records {
        by_method
            .entry(r.method.as_str())
            .or_insert_with(|| {
                order.push(r.method.as_str());
                Vec::new()
            })
            .push(r);
    }
    let index = |label: &str| -> Option<HashMap<usize, f64>> {
        by_method
            .get(label)
            .map(|rs| rs.iter().map(|r| (r.sample, r.magnitude_db)).collect())
    };
    let base = index(baseline);
    let off = index(OFF_LABEL);

    let methods = order
        .iter()
        .map(|&label| {
            let rs = &by_method[label];
            let n = rs.len();
            let mean_db = rs.iter().map(|r| r.magnitude_db).sum::<f64>() / n as f64;
            let worst_db = rs
                .iter()
                .map(|r| r.magnitude_db)
                .fold(f64::INFINITY, f64::min);
            let gap_db = base.as_ref().and_then(|b| {
                let diffs: Vec<f64> = rs
                    .iter()
                    .filter_map(|r| b.get(&r.sample).map(|v| v - r.magnitude_db))
                    .collect();
                (!diffs.is_empty()).then(|| diffs.iter().sum::<f64>() / diffs.len() as f64)
            });
            let fraction_below_off = off.as_ref().and_then(|o| {
                let paired: Vec<bool> = rs
                    .iter()
                    .filter_map(|r| o.get(&r.sample).map(|v| r.magnitude_db < *v))
                    .collect();
                (!paired.is_empty())
                    .then(|| paired.iter().filter(|b| **b).count() as f64 / paired.len() as f64)
            });
            MethodSummary {
                method: label.to_string(),
                samples: n,
                skipped: rs.iter().filter(|r| r.skipped).count(),
                mean_db,
                worst_db,
                gap_db,
                fraction_below_off,
            }
        })
        .collect();
    Ok(Summary {
        baseline: baseline.to_string(),
        methods,
    })
}
