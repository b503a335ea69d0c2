//! Analytic binary configuration of the surface.
//!
//! For a target point the continuous optimum is `φ*_m(C) = C − φ'_m` with
//! `φ'_m = 2π (d^h_m + d^g_m) / λ`. The prototype can only realize 0 or π, so
//! `φ*_m` is rounded by [`quantize_rd`], and because there is no direct link
//! fixing the received phase reference, a set of candidate phases `C_t` is
//! swept and the best-performing binary configuration kept.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;

use crate::channel::{
    cascaded_from_distances, effective_channel_for_states, AntennaGains, CarrierSpec,
    ChannelVector, EffectiveChannel,
};
use crate::error::{Error, Result};
use crate::geometry::{element_distances, PolarPoint, RisGeometry};

/// Amplitude of a phase-shifting element (−3 dB in power).
pub const ON_AMPLITUDE: f64 = 0.5012;

/// Binary switch state of one element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ElementState {
    /// Neutral reflection, phase 0.
    #[default]
    Off,
    /// Phase-shifting reflection, phase π.
    On,
}

impl ElementState {
    pub fn phase(self) -> f64 {
        match self {
            ElementState::Off => 0.0,
            ElementState::On => PI,
        }
    }

    pub fn is_on(self) -> bool {
        self == ElementState::On
    }
}

/// Reflection response of the two switch states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchModel {
    pub on_amplitude: f64,
}

impl SwitchModel {
    /// Lossless switching, `A ≡ 1`.
    pub const LOSSLESS: SwitchModel = SwitchModel { on_amplitude: 1.0 };

    pub fn amplitude(&self, state: ElementState) -> f64 {
        match state {
            ElementState::Off => 1.0,
            ElementState::On => self.on_amplitude,
        }
    }

    /// `θ_m = A_m e^{jφ_m}`.
    pub fn reflection(&self, state: ElementState) -> Complex64 {
        match state {
            ElementState::Off => Complex64::new(1.0, 0.0),
            ElementState::On => Complex64::new(-self.on_amplitude, 0.0),
        }
    }
}

impl Default for SwitchModel {
    fn default() -> Self {
        Self {
            on_amplitude: ON_AMPLITUDE,
        }
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_phase(tau: f64) -> f64 {
    let r = tau.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Rounds a continuous phase to the nearest realizable state: π on
/// `[π/2, 3π/2)`, 0 otherwise.
pub fn quantize_rd(tau: f64) -> f64 {
    let t = wrap_phase(tau);
    if (FRAC_PI_2..3.0 * FRAC_PI_2).contains(&t) {
        PI
    } else {
        0.0
    }
}

/// Amplitude attached to a quantized phase.
pub fn amplitude(tau_quantized: f64) -> f64 {
    if tau_quantized == PI {
        ON_AMPLITUDE
    } else {
        1.0
    }
}

/// Switch state realizing `quantize_rd(tau)`.
pub fn rd_state(tau: f64) -> ElementState {
    if quantize_rd(tau) == PI {
        ElementState::On
    } else {
        ElementState::Off
    }
}

/// Candidate received phases `C_t = 2πt/T`, `t = 0..T`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSet {
    values: Vec<f64>,
}

impl PhaseSet {
    pub fn evenly_spaced(t_count: usize) -> Result<Self> {
        if t_count == 0 {
            return Err(Error::EmptyPhaseSet);
        }
        let n = t_count as f64;
        Ok(Self {
            values: (0..t_count).map(|t| TAU * t as f64 / n).collect(),
        })
    }

    pub fn t_count(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl Default for PhaseSet {
    fn default() -> Self {
        Self::evenly_spaced(8).expect("nonzero count")
    }
}

/// A deployable configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RisConfig {
    states: Vec<ElementState>,
    chosen_phase: f64,
    predicted: EffectiveChannel,
    switch: SwitchModel,
}

impl RisConfig {
    pub fn new(
        states: Vec<ElementState>,
        chosen_phase: f64,
        predicted: EffectiveChannel,
        switch: SwitchModel,
    ) -> Self {
        Self {
            states,
            chosen_phase,
            predicted,
            switch,
        }
    }

    pub fn states(&self) -> &[ElementState] {
        &self.states
    }

    /// Winning `C_t`. For split configurations this is the phase of the
    /// first beam.
    pub fn chosen_phase(&self) -> f64 {
        self.chosen_phase
    }

    /// Effective channel at the point the configuration was optimized for.
    pub fn predicted(&self) -> &EffectiveChannel {
        &self.predicted
    }

    pub fn switch_model(&self) -> &SwitchModel {
        &self.switch
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn on_count(&self) -> usize {
        self.states.iter().filter(|s| s.is_on()).count()
    }
}

/// Channel and ideal phases toward one point.
#[derive(Debug, Clone)]
pub struct TargetSolution {
    pub channel: ChannelVector,
    /// `φ'_m` wrapped into `[0, 2π)`.
    pub ideal_phases: Vec<f64>,
}

impl TargetSolution {
    /// Applies the `C_t` rule to every element.
    pub fn rule_states(&self, c: f64) -> Vec<ElementState> {
        self.ideal_phases.iter().map(|&p| rd_state(c - p)).collect()
    }
}

/// Fixed part of a link: surface, transmitter, carrier, gains and switch
/// response. Tx-side element distances are computed once.
#[derive(Debug, Clone)]
pub struct LinkSetup<'a> {
    geom: &'a RisGeometry,
    tx: PolarPoint,
    carrier: CarrierSpec,
    gains: AntennaGains,
    switch: SwitchModel,
    tx_distances: Vec<f64>,
}

impl<'a> LinkSetup<'a> {
    pub fn new(
        geom: &'a RisGeometry,
        tx: PolarPoint,
        carrier: CarrierSpec,
        gains: AntennaGains,
    ) -> Result<Self> {
        Self::with_switch(geom, tx, carrier, gains, SwitchModel::default())
    }

    pub fn with_switch(
        geom: &'a RisGeometry,
        tx: PolarPoint,
        carrier: CarrierSpec,
        gains: AntennaGains,
        switch: SwitchModel,
    ) -> Result<Self> {
        let tx_distances = element_distances(geom, &tx.to_cartesian())?;
        Ok(Self {
            geom,
            tx,
            carrier,
            gains,
            switch,
            tx_distances,
        })
    }

    pub fn geometry(&self) -> &RisGeometry {
        self.geom
    }
    pub fn tx(&self) -> &PolarPoint {
        &self.tx
    }
    pub fn carrier(&self) -> &CarrierSpec {
        &self.carrier
    }
    pub fn gains(&self) -> &AntennaGains {
        &self.gains
    }
    pub fn switch_model(&self) -> &SwitchModel {
        &self.switch
    }

    pub fn channel_at(&self, point: &PolarPoint) -> Result<ChannelVector> {
        let rx = element_distances(self.geom, &point.to_cartesian())?;
        Ok(cascaded_from_distances(
            &self.tx_distances,
            &rx,
            &self.carrier,
        ))
    }

    pub fn solve_target(&self, target: &PolarPoint) -> Result<TargetSolution> {
        let rx = element_distances(self.geom, &target.to_cartesian())?;
        let k = self.carrier.wavenumber();
        let ideal_phases = self
            .tx_distances
            .iter()
            .zip(&rx)
            .map(|(dh, dg)| wrap_phase(k * (dh + dg)))
            .collect();
        let channel = cascaded_from_distances(&self.tx_distances, &rx, &self.carrier);
        Ok(TargetSolution {
            channel,
            ideal_phases,
        })
    }

    /// Scales a raw element sum by the antenna gains.
    pub fn with_gains(&self, sum: Complex64) -> EffectiveChannel {
        EffectiveChannel::new(sum * self.gains.amplitude_factor())
    }

    pub fn optimize(&self, target: &PolarPoint, phases: &PhaseSet) -> Result<RisConfig> {
        let solution = self.solve_target(target)?;
        self.optimize_solution(&solution, phases)
    }

    pub fn optimize_solution(
        &self,
        solution: &TargetSolution,
        phases: &PhaseSet,
    ) -> Result<RisConfig> {
        let mut best: Option<(f64, Vec<ElementState>, EffectiveChannel)> = None;
        for &c in phases.values() {
            let states = solution.rule_states(c);
            let eff = effective_channel_for_states(
                &solution.channel,
                &states,
                &self.switch,
                &self.gains,
            )?;
            match &best {
                Some((_, _, b)) if eff.value.norm() <= b.value.norm() => {}
                _ => best = Some((c, states, eff)),
            }
        }
        let (c, states, eff) = best.ok_or(Error::EmptyPhaseSet)?;
        Ok(RisConfig::new(states, c, eff, self.switch))
    }

    /// Unquantized, lossless optimum: every element phase-aligned.
    pub fn continuous_optimum(&self, target: &PolarPoint, c: f64) -> Result<EffectiveChannel> {
        let solution = self.solve_target(target)?;
        let sum: Complex64 = solution
            .channel
            .coefficients()
            .iter()
            .zip(&solution.ideal_phases)
            .map(|(h, p)| h * Complex64::from_polar(1.0, c - p))
            .sum();
        Ok(self.with_gains(sum))
    }

    pub fn predict_at(
        &self,
        config: &RisConfig,
        eval_point: &PolarPoint,
    ) -> Result<EffectiveChannel> {
        let chan = self.channel_at(eval_point)?;
        effective_channel_for_states(&chan, config.states(), config.switch_model(), &self.gains)
    }

    /// All elements neutral: the surface acts as a plain reflector.
    pub fn off_state(&self, point: &PolarPoint) -> Result<RisConfig> {
        let states = vec![ElementState::Off; self.geom.len()];
        let chan = self.channel_at(point)?;
        let eff = effective_channel_for_states(&chan, &states, &self.switch, &self.gains)?;
        Ok(RisConfig::new(states, 0.0, eff, self.switch))
    }
}

/// `φ'_m` for every element, wrapped into `[0, 2π)`.
pub fn ideal_phases(
    geom: &RisGeometry,
    tx: &PolarPoint,
    target: &PolarPoint,
    carrier: &CarrierSpec,
) -> Result<Vec<f64>> {
    let setup = LinkSetup::new(geom, *tx, *carrier, AntennaGains::UNITY)?;
    Ok(setup.solve_target(target)?.ideal_phases)
}

pub fn optimize(
    geom: &RisGeometry,
    tx: &PolarPoint,
    target: &PolarPoint,
    carrier: &CarrierSpec,
    phases: &PhaseSet,
    gains: &AntennaGains,
) -> Result<RisConfig> {
    LinkSetup::new(geom, *tx, *carrier, *gains)?.optimize(target, phases)
}

pub fn predict_at(
    config: &RisConfig,
    geom: &RisGeometry,
    tx: &PolarPoint,
    eval_point: &PolarPoint,
    carrier: &CarrierSpec,
    gains: &AntennaGains,
) -> Result<EffectiveChannel> {
    if config.len() != geom.len() {
        return Err(Error::LengthMismatch {
            expected: geom.len(),
            actual: config.len(),
        });
    }
    LinkSetup::with_switch(geom, *tx, *carrier, *gains, *config.switch_model())?
        .predict_at(config, eval_point)
}
