//! Near-field cascaded channel through the surface.
//!
//! Each element contributes the product of two free-space links,
//! `λ/(4π d) · exp(j 2π d / λ)`, one from the transmitter and one to the
//! receiver. There is no direct Tx–Rx path.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{element_distances, PolarPoint, RisGeometry};
use crate::optimizer::{ElementState, RisConfig, SwitchModel};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarrierSpec {
    frequency: f64,
    speed_of_light: f64,
}

impl CarrierSpec {
    pub fn new(frequency: f64) -> Result<Self> {
        if !(frequency > 0.0 && frequency.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "carrier frequency must be positive, got {frequency}"
            )));
        }
        Ok(Self {
            frequency,
            speed_of_light: SPEED_OF_LIGHT,
        })
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn speed_of_light(&self) -> f64 {
        self.speed_of_light
    }

    pub fn wavelength(&self) -> f64 {
        self.speed_of_light / self.frequency
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength()
    }

    /// Complex free-space coefficient of a single link of length `d`.
    pub fn link(&self, d: f64) -> Complex64 {
        let amp = self.speed_of_light / (4.0 * PI * self.frequency * d);
        Complex64::from_polar(amp, self.wavenumber() * d)
    }
}

impl Default for CarrierSpec {
    /// 5.53 GHz, λ ≈ 5.42 cm.
    fn default() -> Self {
        Self {
            frequency: 5.53e9,
            speed_of_light: SPEED_OF_LIGHT,
        }
    }
}

/// Per-element cascaded coefficients `h_m g_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector {
    coefficients: Vec<Complex64>,
}

impl ChannelVector {
    pub fn new(coefficients: Vec<Complex64>) -> Self {
        Self { coefficients }
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn element_count(&self) -> usize {
        self.coefficients.len()
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self {
            coefficients: self.coefficients.iter().map(|c| c * s).collect(),
        }
    }

    /// `Σ |h_m g_m|`, the coherent-combining upper bound before gains.
    pub fn magnitude_sum(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm()).sum()
    }
}

/// Tx/Rx antenna gains in dBi.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntennaGains {
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
}

impl AntennaGains {
    pub const UNITY: AntennaGains = AntennaGains {
        tx_gain_dbi: 0.0,
        rx_gain_dbi: 0.0,
    };

    /// `√G_T · √G_R` with both gains in linear power units.
    pub fn amplitude_factor(&self) -> f64 {
        10f64.powf(self.tx_gain_dbi / 10.0).sqrt() * 10f64.powf(self.rx_gain_dbi / 10.0).sqrt()
    }
}

impl Default for AntennaGains {
    fn default() -> Self {
        Self {
            tx_gain_dbi: 16.89,
            rx_gain_dbi: 16.89,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveChannel {
    pub value: Complex64,
    pub magnitude_db: f64,
}

impl EffectiveChannel {
    pub fn new(value: Complex64) -> Self {
        Self {
            value,
            magnitude_db: magnitude_db(value),
        }
    }
}

/// `20 log10 |value|`; zero maps to negative infinity.
pub fn magnitude_db(value: Complex64) -> f64 {
    20.0 * value.norm().log10()
}

/// Cascaded coefficients from precomputed Tx-side and Rx-side distances.
pub fn cascaded_from_distances(
    tx_distances: &[f64],
    rx_distances: &[f64],
    carrier: &CarrierSpec,
) -> ChannelVector {
    debug_assert_eq!(tx_distances.len(), rx_distances.len());
    ChannelVector::new(
        tx_distances
            .iter()
            .zip(rx_distances)
            .map(|(&dh, &dg)| carrier.link(dh) * carrier.link(dg))
            .collect(),
    )
}

pub fn cascaded_channel(
    geom: &RisGeometry,
    tx: &PolarPoint,
    rx: &PolarPoint,
    carrier: &CarrierSpec,
) -> Result<ChannelVector> {
    let dh = element_distances(geom, &tx.to_cartesian())?;
    let dg = element_distances(geom, &rx.to_cartesian())?;
    Ok(cascaded_from_distances(&dh, &dg, carrier))
}

/// `Σ_m chan_m · θ_m` over the given element subset, before antenna gains.
pub(crate) fn partial_sum(
    chan: &[Complex64],
    states: &[ElementState],
    model: &SwitchModel,
    indices: impl IntoIterator<Item = usize>,
) -> Complex64 {
    indices
        .into_iter()
        .map(|m| chan[m] * model.reflection(states[m]))
        .sum()
}

/// Coherent sum of the cascaded channel weighted by the configured states.
pub fn effective_channel(
    chan: &ChannelVector,
    config: &RisConfig,
    gains: &AntennaGains,
) -> Result<EffectiveChannel> {
    effective_channel_for_states(chan, config.states(), config.switch_model(), gains)
}

pub fn effective_channel_for_states(
    chan: &ChannelVector,
    states: &[ElementState],
    model: &SwitchModel,
    gains: &AntennaGains,
) -> Result<EffectiveChannel> {
    if states.len() != chan.element_count() {
        return Err(Error::LengthMismatch {
            expected: chan.element_count(),
            actual: states.len(),
        });
    }
    let sum = partial_sum(&chan.coefficients, states, model, 0..states.len());
    Ok(EffectiveChannel::new(sum * gains.amplitude_factor()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_geometry, RisLayout};

    fn single() -> RisGeometry {
        build_geometry(&RisLayout::new(1, 1, 1, 1, 0.01, 0.01).unwrap())
    }

    #[test]
    fn carrier_defaults() {
        let c = CarrierSpec::default();
        assert!((c.wavelength() - 0.0542).abs() < 1e-4);
        assert!((c.wavelength() * c.frequency() / c.speed_of_light() - 1.0).abs() < 1e-6);
        assert!(CarrierSpec::new(0.0).is_err());
    }

    #[test]
    fn single_element_magnitude() {
        // (λ/(8π))² with λ = 0.0542 m, evaluated by hand: 4.651e-6
        let carrier = CarrierSpec::new(SPEED_OF_LIGHT / 0.0542).unwrap();
        let p = PolarPoint::new(2.0, 0.0).unwrap();
        let h = cascaded_channel(&single(), &p, &p, &carrier).unwrap();
        let expected = (0.0542 / (8.0 * PI)).powi(2);
        assert!((h.coefficients()[0].norm() - expected).abs() < 1e-15);
        assert!((expected - 4.651e-6).abs() < 1e-9);
    }

    #[test]
    fn phase_wraps_at_whole_wavelengths() {
        // 2 m + 2 m = 80 wavelengths exactly
        let carrier = CarrierSpec::new(SPEED_OF_LIGHT / 0.05).unwrap();
        let p = PolarPoint::new(2.0, 0.0).unwrap();
        let h = cascaded_channel(&single(), &p, &p, &carrier)
            .unwrap()
            .coefficients()[0];
        assert!(h.arg().abs() < 1e-9);
    }

    #[test]
    fn reciprocity() {
        let geom = build_geometry(&RisLayout::default());
        let carrier = CarrierSpec::default();
        let a = PolarPoint::new(2.0, -30.0).unwrap();
        let b = PolarPoint::new(2.3, 12.0).unwrap();
        assert_eq!(
            cascaded_channel(&geom, &a, &b, &carrier).unwrap(),
            cascaded_channel(&geom, &b, &a, &carrier).unwrap()
        );
    }

    #[test]
    fn far_distance_scaling() {
        let geom = build_geometry(&RisLayout::default());
        let carrier = CarrierSpec::default();
        let h1 = cascaded_channel(
            &geom,
            &PolarPoint::new(25.0, -30.0).unwrap(),
            &PolarPoint::new(25.0, 20.0).unwrap(),
            &carrier,
        )
        .unwrap();
        let h2 = cascaded_channel(
            &geom,
            &PolarPoint::new(50.0, -30.0).unwrap(),
            &PolarPoint::new(50.0, 20.0).unwrap(),
            &carrier,
        )
        .unwrap();
        for (a, b) in h1.coefficients().iter().zip(h2.coefficients()) {
            let ratio = b.norm() / a.norm();
            assert!((ratio * 4.0 - 1.0).abs() < 0.02, "ratio {ratio}");
        }
    }

    #[test]
    fn magnitude_db_values() {
        assert_eq!(magnitude_db(Complex64::new(1.0, 0.0)), 0.0);
        assert!((magnitude_db(Complex64::new(0.5012, 0.0)) + 6.0).abs() < 0.01);
        assert!((magnitude_db(Complex64::new(1e-5, 0.0)) + 100.0).abs() < 1e-9);
        assert_eq!(magnitude_db(Complex64::new(0.0, 0.0)), f64::NEG_INFINITY);
    }

    #[test]
    fn gains_conversion() {
        let g = AntennaGains::default();
        assert!((g.amplitude_factor() - 10f64.powf(16.89 / 10.0)).abs() < 1e-9);
        assert_eq!(AntennaGains::UNITY.amplitude_factor(), 1.0);
    }

    #[test]
    fn effective_channel_states() {
        let chan = ChannelVector::new(vec![
            Complex64::new(1e-5, 2e-5),
            Complex64::new(-3e-5, 1e-5),
        ]);
        let gains = AntennaGains::default();
        let g = gains.amplitude_factor();
        let model = SwitchModel::default();

        let off =
            effective_channel_for_states(&chan, &[ElementState::Off; 2], &model, &gains).unwrap();
        let sum: Complex64 = chan.coefficients().iter().sum();
        assert!((off.value - sum * g).norm() < 1e-18);

        let on = effective_channel_for_states(
            &chan,
            &[ElementState::On, ElementState::Off],
            &model,
            &gains,
        )
        .unwrap();
        let expected = (chan.coefficients()[0] * Complex64::from_polar(0.5012, PI)
            + chan.coefficients()[1])
            * g;
        assert!((on.value - expected).norm() < 1e-15);
        assert!((on.magnitude_db - magnitude_db(on.value)).abs() < 1e-9);

        assert_eq!(
            effective_channel_for_states(&chan, &[ElementState::On], &model, &gains),
            Err(Error::LengthMismatch {
                expected: 2,
                actual: 1
            })
        );
    }

    #[test]
    fn effective_channel_is_linear_in_channel() {
        let chan = ChannelVector::new(vec![
            Complex64::new(1.0, 2.0),
            Complex64::new(-0.5, 0.1),
            Complex64::new(0.2, -0.7),
        ]);
        let states = [ElementState::On, ElementState::Off, ElementState::On];
        let model = SwitchModel::default();
        let gains = AntennaGains::default();
        let s = Complex64::new(0.3, -1.7);
        let a = effective_channel_for_states(&chan, &states, &model, &gains).unwrap();
        let b = effective_channel_for_states(&chan.scaled(s), &states, &model, &gains).unwrap();
        assert!((a.value * s - b.value).norm() < 1e-9 * b.value.norm());
    }
}
