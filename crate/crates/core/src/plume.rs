//! Gaussian plume concentration field with ground reflection, wind
//! scenarios, the time-averaged field, and the saturating sensor.
//!
//! Coordinates are in the ground frame. The wind direction `phi` is the
//! bearing the wind blows *towards*; the downwind axis of the plume is
//! `(cos phi, sin phi)` from the source.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::PlumeError;
use crate::rng::Stream;
use crate::Vec3;

/// Reading at which the sensor saturates, in sensor-native units (ppm).
pub const SENSOR_SATURATION: f64 = 100.0;

/// Downwind distance at or below which the field is zero.
pub const UPWIND_FLOOR_M: f64 = 0.1;

/// Conversion from g/m^3 of benzene to ppm at 25 C and 1 atm
/// (1000 mg/g * 24.45 L/mol / 78.11 g/mol).
pub const BENZENE_PPM_PER_G_M3: f64 = 1000.0 * 24.45 / 78.11;

/// Power-law spread curves: `sigma_y = c x^d`, `sigma_z = a x^b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityCoeffs {
    pub a: f64,
    pub b_exp: f64,
    pub c: f64,
    pub d_exp: f64,
}

impl StabilityCoeffs {
    /// Briggs open-country class A ("very unstable") curves in their
    /// near-field power-law form: `sigma_y = 0.22 x`, `sigma_z = 0.20 x`.
    /// The `(1 + 1e-4 x)^-1/2` correction on `sigma_y` is within 5% of one
    /// over a 1 km domain and is dropped.
    pub const CLASS_A: StabilityCoeffs = StabilityCoeffs {
        a: 0.20,
        b_exp: 1.0,
        c: 0.22,
        d_exp: 1.0,
    };

    pub fn validate(&self) -> Result<(), PlumeError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !(ok(self.a) && ok(self.c) && ok(self.b_exp) && ok(self.d_exp)) {
            return Err(PlumeError::InvalidParam(format!(
                "stability coefficients must all be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

impl Default for StabilityCoeffs {
    fn default() -> Self {
        Self::CLASS_A
    }
}

/// Crosswind and vertical spreads at downwind distance `x`.
pub fn sigma(coeffs: &StabilityCoeffs, x_downwind: f64) -> Result<(f64, f64), PlumeError> {
    if !(x_downwind > 0.0) {
        return Err(PlumeError::NonPositiveDownwind(x_downwind));
    }
    Ok((
        coeffs.c * x_downwind.powf(coeffs.d_exp),
        coeffs.a * x_downwind.powf(coeffs.b_exp),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlumeParams {
    /// `(x_s, y_s, H_s)`.
    pub source: Vec3,
    /// Emission rate Q, g/s.
    pub emission_rate: f64,
    /// Wind speed w, m/s.
    pub wind_speed: f64,
    /// Bearing the wind blows towards, radians.
    pub wind_direction: f64,
    pub coeffs: StabilityCoeffs,
    /// Sensor-native units per g/m^3.
    pub sensor_gain: f64,
}

impl Default for PlumeParams {
    fn default() -> Self {
        Self {
            source: Vec3::new(0.0, 0.0, 3.0),
            emission_rate: 5.0,
            wind_speed: 3.0,
            wind_direction: 0.0,
            coeffs: StabilityCoeffs::CLASS_A,
            sensor_gain: BENZENE_PPM_PER_G_M3,
        }
    }
}

impl PlumeParams {
    pub fn validate(&self) -> Result<(), PlumeError> {
        self.coeffs.validate()?;
        if !(self.wind_speed > 0.0) {
            return Err(PlumeError::InvalidParam("wind speed must be > 0".into()));
        }
        if !(self.emission_rate > 0.0) {
            return Err(PlumeError::InvalidParam("emission rate must be > 0".into()));
        }
        if !(self.source.z >= 0.0) {
            return Err(PlumeError::InvalidParam("stack height must be >= 0".into()));
        }
        if !(self.sensor_gain > 0.0) {
            return Err(PlumeError::InvalidParam("sensor gain must be > 0".into()));
        }
        Ok(())
    }

    pub fn with_direction(&self, phi: f64) -> Self {
        Self {
            wind_direction: phi,
            ..*self
        }
    }

    /// `(downwind, crosswind)` coordinates of `p` relative to the source.
    pub fn wind_frame(&self, p: &Vec3) -> (f64, f64) {
        let dx = p.x - self.source.x;
        let dy = p.y - self.source.y;
        let (s, c) = self.wind_direction.sin_cos();
        (dx * c + dy * s, -dx * s + dy * c)
    }
}

/// Plume concentration at `p` in sensor-native units, before saturation.
pub fn concentration(p: &Vec3, params: &PlumeParams) -> f64 {
    let (xd, yc) = params.wind_frame(p);
    if xd <= UPWIND_FLOOR_M {
        return 0.0;
    }
    // xd > 0 here, so sigma cannot fail.
    let (sy, sz) = sigma(&params.coeffs, xd).unwrap_or((f64::NAN, f64::NAN));
    let h = params.source.z;
    let vertical = (-(p.z - h).powi(2) / (2.0 * sz * sz)).exp() + (-(p.z + h).powi(2) / (2.0 * sz * sz)).exp();
    let crosswind = (-yc * yc / (2.0 * sy * sy)).exp();
    params.sensor_gain * params.emission_rate / params.wind_speed / (2.0 * PI * sy * sz) * crosswind * vertical
}

pub fn saturate(value: f64) -> f64 {
    value.min(SENSOR_SATURATION)
}

/// Instantaneous sensor reading.
pub fn measure(p: &Vec3, params: &PlumeParams) -> f64 {
    saturate(concentration(p, params))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WindVariant {
    Constant(f64),
    FullyRandom,
    PrevailingRandom { mean: f64, spread: f64 },
}

impl WindVariant {
    pub fn label(&self) -> &'static str {
        match self {
            WindVariant::Constant(_) => "constant",
            WindVariant::FullyRandom => "random",
            WindVariant::PrevailingRandom { .. } => "prevailing",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindScenario {
    pub variant: WindVariant,
    /// Seconds between direction redraws for the random variants.
    pub resample_period: f64,
}

impl WindScenario {
    pub fn constant(phi: f64) -> Self {
        Self {
            variant: WindVariant::Constant(phi),
            resample_period: 1.0,
        }
    }
}

/// A wind scenario bound to its random stream. Queries must be made with
/// non-decreasing `t`.
#[derive(Debug, Clone)]
pub struct WindProcess {
    scenario: WindScenario,
    rng: Stream,
    current: f64,
    next_draw: f64,
}

impl WindProcess {
    pub fn new(scenario: WindScenario, rng: Stream) -> Self {
        Self {
            scenario,
            rng,
            current: 0.0,
            next_draw: 0.0,
        }
    }

    pub fn scenario(&self) -> &WindScenario {
        &self.scenario
    }

    /// Wind direction in effect at time `t`.
    pub fn sample_wind(&mut self, t: f64) -> f64 {
        match self.scenario.variant {
            WindVariant::Constant(phi) => phi,
            WindVariant::FullyRandom | WindVariant::PrevailingRandom { .. } => {
                while t >= self.next_draw {
                    self.current = self.draw();
                    self.next_draw += self.scenario.resample_period;
                }
                self.current
            }
        }
    }

    fn draw(&mut self) -> f64 {
        match self.scenario.variant {
            WindVariant::Constant(phi) => phi,
            WindVariant::FullyRandom => self.rng.random_range(0.0..TAU),
            WindVariant::PrevailingRandom { mean, spread } => {
                if spread > 0.0 {
                    self.rng.random_range(mean - spread..=mean + spread)
                } else {
                    mean
                }
            }
        }
    }
}

/// Running mean of sensor readings over every wind direction sampled so
/// far, evaluated lazily at query points.
#[derive(Debug, Clone, Default)]
pub struct AveragedField {
    /// Run-length encoded sample history: `(direction, repeats)`.
    samples: Vec<(f64, u64)>,
    sample_count: u64,
}

impl AveragedField {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_sample(&mut self, phi: f64) {
        match self.samples.last_mut() {
            Some((last, count)) if last.to_bits() == phi.to_bits() => *count += 1,
            _ => self.samples.push((phi, 1)),
        }
        self.sample_count += 1;
    }

    pub fn sample_count(&self) -> u64 {
        self.sample_count
    }

    pub fn averaged_measure(&self, p: &Vec3, params: &PlumeParams) -> Result<f64, PlumeError> {
        if self.sample_count == 0 {
            return Err(PlumeError::EmptyField);
        }
        let total: f64 = self
            .samples
            .iter()
            .map(|(phi, k)| measure(p, &params.with_direction(*phi)) * *k as f64)
            .sum();
        Ok(saturate(total / self.sample_count as f64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use approx::assert_relative_eq;

    fn unit_params() -> PlumeParams {
        PlumeParams {
            source: Vec3::new(0.0, 0.0, 3.0),
            emission_rate: 1.0,
            wind_speed: 1.0,
            wind_direction: 0.0,
            coeffs: StabilityCoeffs {
                a: 1.0,
                b_exp: 1.0,
                c: 1.0,
                d_exp: 1.0,
            },
            sensor_gain: 1.0,
        }
    }

    #[test]
    fn sigma_identity_and_sqrt() {
        let id = StabilityCoeffs {
            a: 1.0,
            b_exp: 1.0,
            c: 1.0,
            d_exp: 1.0,
        };
        assert_eq!(sigma(&id, 10.0).unwrap(), (10.0, 10.0));
        let half = StabilityCoeffs {
            a: 1.0,
            b_exp: 1.0,
            c: 2.0,
            d_exp: 0.5,
        };
        assert_relative_eq!(sigma(&half, 100.0).unwrap().0, 20.0, max_relative = 1e-15);
    }

    #[test]
    fn sigma_class_a_at_one_km() {
        // 0.22 * 1000 and 0.20 * 1000 by hand.
        let (sy, sz) = sigma(&StabilityCoeffs::CLASS_A, 1000.0).unwrap();
        assert_relative_eq!(sy, 220.0, max_relative = 1e-14);
        assert_relative_eq!(sz, 200.0, max_relative = 1e-14);
    }

    #[test]
    fn sigma_rejects_upwind() {
        assert!(sigma(&StabilityCoeffs::CLASS_A, 0.0).is_err());
        assert!(sigma(&StabilityCoeffs::CLASS_A, -3.0).is_err());
    }

    #[test]
    fn unit_centreline_value() {
        // Q/w = 1, sigma_y = sigma_z = 10 at x' = 10, y' = 0, z = H_s = 3:
        // C = (1 / (2 pi 100)) (1 + exp(-36/200)).
        let p = Vec3::new(10.0, 0.0, 3.0);
        let expected = (1.0 / (2.0 * PI * 100.0)) * (1.0 + (-4.0f64 * 9.0 / 200.0).exp());
        assert_relative_eq!(concentration(&p, &unit_params()), expected, max_relative = 1e-14);
        assert_relative_eq!(expected, 0.002920923260554117, max_relative = 1e-14);
    }

    #[test]
    fn default_reading_ten_metres_downwind() {
        let params = PlumeParams::default();
        let p = params.source + Vec3::new(10.0, 0.0, 0.0);
        assert_relative_eq!(measure(&p, &params), 19.080352993600821, max_relative = 1e-13);
        assert!(measure(&p, &params) > 0.03);
    }

    #[test]
    fn upwind_and_floor_are_zero() {
        let params = unit_params();
        assert_eq!(concentration(&Vec3::new(-5.0, 0.0, 3.0), &params), 0.0);
        assert_eq!(concentration(&Vec3::new(0.1, 0.0, 3.0), &params), 0.0);
        assert!(concentration(&Vec3::new(0.11, 0.0, 3.0), &params) > 0.0);
    }

    #[test]
    fn ground_level_reflection_doubles() {
        let params = unit_params();
        let p = Vec3::new(25.0, 4.0, 0.0);
        let (sy, sz) = sigma(&params.coeffs, 25.0).unwrap();
        let single = (1.0 / (2.0 * PI * sy * sz)) * (-16.0 / (2.0 * sy * sy)).exp() * (-9.0 / (2.0 * sz * sz)).exp();
        assert_relative_eq!(concentration(&p, &params), 2.0 * single, max_relative = 1e-13);
    }

    #[test]
    fn measure_saturates() {
        assert_eq!(saturate(150.0), 100.0);
        assert_eq!(saturate(0.0), 0.0);
        assert_eq!(saturate(99.9), 99.9);
        // right at the source the default plume is far above saturation
        let params = PlumeParams::default();
        assert_eq!(measure(&Vec3::new(0.5, 0.0, 3.0), &params), 100.0);
    }

    #[test]
    fn constant_wind_is_constant() {
        let mut w = WindProcess::new(WindScenario::constant(PI / 2.0), rng::stream(1, "wind"));
        for t in 0..50 {
            assert_eq!(w.sample_wind(t as f64), PI / 2.0);
        }
    }

    #[test]
    fn random_wind_is_reproducible_and_held_between_draws() {
        let sc = WindScenario {
            variant: WindVariant::FullyRandom,
            resample_period: 5.0,
        };
        let mut a = WindProcess::new(sc, rng::stream(9, "wind"));
        let mut b = WindProcess::new(sc, rng::stream(9, "wind"));
        let seq_a: Vec<f64> = (0..40).map(|t| a.sample_wind(t as f64)).collect();
        let seq_b: Vec<f64> = (0..40).map(|t| b.sample_wind(t as f64)).collect();
        assert_eq!(seq_a, seq_b);
        for chunk in seq_a.chunks(5) {
            assert!(chunk.iter().all(|v| *v == chunk[0]));
            assert!((0.0..TAU).contains(&chunk[0]));
        }
        assert_ne!(seq_a[0], seq_a[5]);
    }

    #[test]
    fn prevailing_wind_statistics() {
        let sc = WindScenario {
            variant: WindVariant::PrevailingRandom { mean: 0.0, spread: 0.3 },
            resample_period: 1.0,
        };
        let mut w = WindProcess::new(sc, rng::stream(3, "wind"));
        let n = 10_000;
        let draws: Vec<f64> = (0..n).map(|t| w.sample_wind(t as f64)).collect();
        assert!(draws.iter().all(|d| (-0.3..=0.3).contains(d)));
        let mean = draws.iter().sum::<f64>() / n as f64;
        // U(-a, a) has std a / sqrt(3); the mean of n draws has std a / sqrt(3n).
        let sd_mean = 0.3 / (3.0 * n as f64).sqrt();
        assert!(mean.abs() < 3.0 * sd_mean, "mean {mean}");
    }

    #[test]
    fn averaged_field_errors_when_empty() {
        let f = AveragedField::new();
        assert_eq!(
            f.averaged_measure(&Vec3::zeros(), &PlumeParams::default()),
            Err(PlumeError::EmptyField)
        );
    }

    #[test]
    fn averaged_field_is_mean_of_readings() {
        let params = PlumeParams::default();
        let p = Vec3::new(80.0, 5.0, 3.0);
        let mut f = AveragedField::new();
        f.add_sample(0.0);
        assert_relative_eq!(
            f.averaged_measure(&p, &params).unwrap(),
            measure(&p, &params),
            max_relative = 1e-14
        );
        f.add_sample(0.05);
        let expected = (measure(&p, &params) + measure(&p, &params.with_direction(0.05))) / 2.0;
        assert_relative_eq!(f.averaged_measure(&p, &params).unwrap(), expected, max_relative = 1e-15);
        assert_eq!(f.sample_count(), 2);
    }

    #[test]
    fn averaged_field_constant_wind_matches_instant() {
        let params = PlumeParams::default().with_direction(1.0);
        let mut f = AveragedField::new();
        let p = Vec3::new(60.0, 90.0, 3.0);
        for _ in 0..100 {
            f.add_sample(1.0);
            assert_relative_eq!(
                f.averaged_measure(&p, &params).unwrap(),
                measure(&p, &params),
                max_relative = 1e-14
            );
        }
    }
}
