//! Simulation and sweep configuration.
//!
//! Config files are TOML holding a flat set of dotted keys (`plume.Q = 5`,
//! or the same key inside a `[plume]` table). Every key is optional and
//! falls back to its default; an unrecognised key is an error.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::error::ConfigError;
use crate::exploration::{AreaBounds, RandomWalkParams, ScanFormation, Strategy};
use crate::localisation::{ProtocolSettings, SpiralParams};
use crate::plume::{PlumeParams, StabilityCoeffs, WindScenario, WindVariant, BENZENE_PPM_PER_G_M3};
use crate::swarm::Topology;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WindKind {
    Constant,
    Random,
    Prevailing,
}

impl WindKind {
    pub fn label(self) -> &'static str {
        match self {
            WindKind::Constant => "constant",
            WindKind::Random => "random",
            WindKind::Prevailing => "prevailing",
        }
    }
}

impl std::str::FromStr for WindKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "constant" => Ok(WindKind::Constant),
            "random" => Ok(WindKind::Random),
            "prevailing" => Ok(WindKind::Prevailing),
            other => Err(format!("unknown wind scenario `{other}`")),
        }
    }
}

/// Scalar field the agents sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    /// Gaussian plume under the configured wind scenario.
    Plume,
    /// `peak * exp(-|p - source|^2 / sigma^2)`, isotropic and unimodal.
    Radial,
}

impl std::str::FromStr for FieldKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plume" => Ok(FieldKind::Plume),
            "radial" => Ok(FieldKind::Radial),
            other => Err(format!("unknown field model `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Pairing {
    /// Run `k` uses wind condition `k mod m_w`.
    Nested,
    /// Every run index is paired with every wind condition.
    Crossed,
}

impl std::str::FromStr for Pairing {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nested" => Ok(Pairing::Nested),
            "crossed" => Ok(Pairing::Crossed),
            other => Err(format!("unknown pairing `{other}`")),
        }
    }
}

/// Everything one mission needs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub seed: u64,
    pub dt: f64,
    pub max_time: f64,
    pub max_speed: f64,

    pub emission_rate: f64,
    pub wind_speed: f64,
    pub stack_height: f64,
    pub source_xy: [f64; 2],
    pub coeffs: StabilityCoeffs,
    pub sensor_gain: f64,

    pub wind: WindKind,
    pub wind_mean_deg: f64,
    pub wind_spread_deg: f64,
    pub wind_resample: f64,

    pub field: FieldKind,
    pub radial_sigma: f64,
    pub radial_peak: f64,

    pub n: usize,
    pub gain: f64,
    pub topology: Topology,
    pub substeps: usize,

    pub strategy: Strategy,
    pub theta_max_deg: f64,
    pub theta_reentry_deg: f64,
    pub safety_distance: f64,
    pub lane_spacing: f64,
    pub threshold: f64,
    pub formation: ScanFormation,
    pub area_size: f64,
    pub altitude: f64,

    pub circle_radius: f64,
    pub gamma: f64,
    pub rho_m: f64,
    pub arc_speed: f64,
    pub max_handoffs: usize,
    pub slot_tolerance: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            dt: 1.0,
            max_time: 36000.0,
            max_speed: 3.0,
            emission_rate: 5.0,
            wind_speed: 3.0,
            stack_height: 3.0,
            source_xy: [150.0, 100.0],
            coeffs: StabilityCoeffs::CLASS_A,
            sensor_gain: BENZENE_PPM_PER_G_M3,
            wind: WindKind::Constant,
            wind_mean_deg: 0.0,
            wind_spread_deg: 30.0,
            wind_resample: 1.0,
            field: FieldKind::Plume,
            radial_sigma: 60.0,
            radial_peak: 1.0,
            n: 4,
            gain: 1.0,
            topology: Topology::Complete,
            substeps: 10,
            strategy: Strategy::Scan,
            theta_max_deg: 10.0,
            theta_reentry_deg: 75.0,
            safety_distance: 5.0,
            lane_spacing: 20.0,
            // 30 ppb expressed in the sensor's ppm scale
            threshold: 0.03,
            formation: ScanFormation::Line,
            area_size: 880.0,
            altitude: 3.0,
            circle_radius: 50.0,
            gamma: 0.25,
            rho_m: 5.0,
            arc_speed: 0.2,
            max_handoffs: 50,
            slot_tolerance: 1.0,
        }
    }
}

impl SimConfig {
    pub fn source(&self) -> Vec3 {
        Vec3::new(self.source_xy[0], self.source_xy[1], self.stack_height)
    }

    pub fn plume(&self) -> PlumeParams {
        PlumeParams {
            source: self.source(),
            emission_rate: self.emission_rate,
            wind_speed: self.wind_speed,
            wind_direction: self.wind_mean_deg.to_radians(),
            coeffs: self.coeffs,
            sensor_gain: self.sensor_gain,
        }
    }

    pub fn wind_scenario(&self) -> WindScenario {
        let mean = self.wind_mean_deg.to_radians();
        let variant = match self.wind {
            WindKind::Constant => WindVariant::Constant(mean),
            WindKind::Random => WindVariant::FullyRandom,
            WindKind::Prevailing => WindVariant::PrevailingRandom {
                mean,
                spread: self.wind_spread_deg.to_radians(),
            },
        };
        WindScenario {
            variant,
            resample_period: self.wind_resample,
        }
    }

    pub fn bounds(&self) -> AreaBounds {
        AreaBounds::square(self.area_size, self.altitude)
    }

    pub fn walk_params(&self) -> RandomWalkParams {
        RandomWalkParams {
            theta_max: self.theta_max_deg.to_radians(),
            theta_reentry: self.theta_reentry_deg.to_radians(),
            safety_distance: self.safety_distance,
        }
    }

    pub fn spiral(&self) -> Result<SpiralParams, ConfigError> {
        SpiralParams::new(self.n, self.circle_radius, self.gamma, self.rho_m)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn protocol(&self) -> ProtocolSettings {
        ProtocolSettings {
            speed: self.max_speed,
            arc_speed: self.arc_speed.min(self.max_speed),
            gain: self.gain,
            slot_tolerance: self.slot_tolerance,
            settle_steps: 3,
            max_handoffs: self.max_handoffs,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: &str| Err(ConfigError::Invalid(msg.to_string()));
        if self.n < 2 {
            return bad("swarm.n must be at least 2");
        }
        if !(self.dt > 0.0) {
            return bad("sim.dt must be positive");
        }
        if !(self.max_time > 0.0) {
            return bad("sim.max_time_s must be positive");
        }
        if !(self.max_speed > 0.0) {
            return bad("sim.v_m must be positive");
        }
        if self.substeps == 0 {
            return bad("swarm.substeps must be at least 1");
        }
        if !(self.gain > 0.0) {
            return bad("swarm.k_gain must be positive");
        }
        if self.wind != WindKind::Constant && self.wind_resample < self.dt {
            return bad("wind.resample_s must be at least sim.dt");
        }
        if !(self.wind_spread_deg >= 0.0) {
            return bad("wind.spread_deg must be nonnegative");
        }
        if !(self.theta_max_deg > 0.0 && self.theta_max_deg < 180.0) {
            return bad("explore.theta_M_deg must be in (0, 180)");
        }
        if !(self.theta_reentry_deg > 0.0 && self.theta_reentry_deg < 90.0) {
            return bad("explore.theta_r_deg must be in (0, 90)");
        }
        if !(self.safety_distance > 0.0) {
            return bad("explore.d_m must be positive");
        }
        if !(self.lane_spacing > 0.0) {
            return bad("explore.delta_y must be positive");
        }
        if !(self.threshold >= 0.0) {
            return bad("explore.h_m must be nonnegative");
        }
        if !(self.area_size > 0.0) {
            return bad("area.size_m must be positive");
        }
        if !(self.arc_speed > 0.0) {
            return bad("loc.arc_speed_mps must be positive");
        }
        if !(self.slot_tolerance > 0.0) {
            return bad("loc.slot_tolerance_m must be positive");
        }
        if !(self.radial_sigma > 0.0 && self.radial_peak > 0.0) {
            return bad("field.radial_sigma_m and field.radial_peak must be positive");
        }
        self.plume()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.spiral()?;
        if self.strategy == Strategy::Scan && (self.n - 1) as f64 * self.lane_spacing > self.area_size {
            return bad("scan line formation is wider than the area");
        }
        Ok(())
    }
}

/// Batch study description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub base: SimConfig,
    pub strategies: Vec<Strategy>,
    pub n_values: Vec<usize>,
    pub scenarios: Vec<WindKind>,
    /// Runs per cell.
    pub m_s: usize,
    /// Wind conditions per cell.
    pub m_w: usize,
    pub pairing: Pairing,
    /// Draw a fresh source position and mean wind bearing per condition.
    pub vary_plume: bool,
    /// Drawn sources keep at least this distance from the area edge, metres.
    pub source_margin: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            base: SimConfig::default(),
            strategies: Strategy::ALL.to_vec(),
            n_values: (2..=20).collect(),
            scenarios: vec![WindKind::Constant],
            m_s: 100,
            m_w: 100,
            pairing: Pairing::Nested,
            vary_plume: true,
            source_margin: 100.0,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.m_s == 0 || self.m_w == 0 {
            return Err(ConfigError::Invalid("sweep.m_s and sweep.m_w must be >= 1".into()));
        }
        if self.n_values.is_empty() || self.strategies.is_empty() || self.scenarios.is_empty() {
            return Err(ConfigError::Invalid(
                "sweep.n_values, sweep.strategies and sweep.scenarios must be nonempty".into(),
            ));
        }
        if !(self.source_margin >= 0.0 && 2.0 * self.source_margin < self.base.area_size) {
            return Err(ConfigError::Invalid(
                "sweep.source_margin_m does not fit the area".into(),
            ));
        }
        for &n in &self.n_values {
            for &s in &self.strategies {
                for &w in &self.scenarios {
                    let cfg = SimConfig {
                        n,
                        strategy: s,
                        wind: w,
                        ..self.base.clone()
                    };
                    cfg.validate()?;
                }
            }
        }
        Ok(())
    }
}

/// Every accepted key with a short description, for `validate-config` and
/// the README.
pub const KEYS: &[(&str, &str)] = &[
    ("seed", "root seed (u64)"),
    ("sim.dt", "sampling time, s"),
    ("sim.max_time_s", "mission time cap, s"),
    ("sim.v_m", "maximum agent speed, m/s"),
    ("plume.Q", "emission rate, g/s"),
    ("plume.w", "wind speed, m/s"),
    ("plume.Hs", "stack height, m"),
    ("plume.source_xy", "source position [x, y], m"),
    ("plume.coeffs.a", "sigma_z = a x^b"),
    ("plume.coeffs.b", "sigma_z exponent"),
    ("plume.coeffs.c", "sigma_y = c x^d"),
    ("plume.coeffs.d", "sigma_y exponent"),
    ("plume.sensor_gain", "sensor units (ppm) per g/m^3"),
    ("wind.scenario", "constant | random | prevailing"),
    ("wind.mean_dir_deg", "(mean) bearing the wind blows towards, deg"),
    ("wind.spread_deg", "half-spread of the prevailing scenario, deg"),
    ("wind.resample_s", "seconds between random direction draws"),
    ("field.model", "plume | radial"),
    ("field.radial_sigma_m", "radial field width, m"),
    ("field.radial_peak", "radial field peak value"),
    ("swarm.n", "number of agents"),
    ("swarm.k_gain", "tracking gain, 1/s"),
    ("swarm.topology", "complete | path | ring"),
    ("swarm.substeps", "control substeps per sampling step"),
    ("explore.strategy", "scan | randomwalk | brownian"),
    ("explore.theta_M_deg", "random-walk heading increment half-width, deg"),
    ("explore.theta_r_deg", "boundary re-entry cone half-angle, deg"),
    ("explore.d_m", "collision safety distance, m"),
    ("explore.delta_y", "scan lane spacing, m"),
    ("explore.h_m", "detection threshold, sensor units"),
    ("explore.formation", "line | wedge"),
    ("area.size_m", "side of the square search area, m"),
    ("area.z_f", "flight altitude, m"),
    ("loc.r", "initial circle radius, m"),
    ("loc.gamma", "spiral contraction ratio"),
    ("loc.rho_m", "tolerated localisation error, m"),
    ("loc.arc_speed_mps", "path speed on the terminal arc, m/s"),
    ("loc.max_handoffs", "handoff guard"),
    ("loc.slot_tolerance_m", "on-slot distance for circle completion, m"),
    ("sweep.strategies", "list of strategies"),
    ("sweep.n_values", "list of swarm sizes"),
    ("sweep.scenarios", "list of wind scenarios"),
    ("sweep.m_s", "runs per cell"),
    ("sweep.m_w", "wind conditions per cell"),
    ("sweep.pairing", "nested | crossed"),
    ("sweep.vary_plume", "draw source and wind bearing per condition"),
    (
        "sweep.source_margin_m",
        "minimum distance of drawn sources from the edge, m",
    ),
];

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, toml::Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

fn bad(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        msg: msg.into(),
    }
}

fn as_f64(key: &str, v: &toml::Value) -> Result<f64, ConfigError> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        _ => Err(bad(key, "expected a number")),
    }
}

fn as_usize(key: &str, v: &toml::Value) -> Result<usize, ConfigError> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(bad(key, "expected a nonnegative integer")),
    }
}

fn as_str<'a>(key: &str, v: &'a toml::Value) -> Result<&'a str, ConfigError> {
    v.as_str().ok_or_else(|| bad(key, "expected a string"))
}

fn as_bool(key: &str, v: &toml::Value) -> Result<bool, ConfigError> {
    v.as_bool().ok_or_else(|| bad(key, "expected a boolean"))
}

fn as_list<'a>(key: &str, v: &'a toml::Value) -> Result<&'a Vec<toml::Value>, ConfigError> {
    v.as_array().ok_or_else(|| bad(key, "expected an array"))
}

fn parse_enum<T: std::str::FromStr<Err = String>>(key: &str, v: &toml::Value) -> Result<T, ConfigError> {
    as_str(key, v)?.parse().map_err(|e: String| bad(key, e))
}

/// Parses config text into a sweep spec whose `base` is the single-run
/// config. Keys outside the known set are rejected.
pub fn parse_config(text: &str) -> Result<SweepSpec, ConfigError> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    let mut flat = BTreeMap::new();
    flatten("", &table, &mut flat);

    let mut spec = SweepSpec::default();
    let c = &mut spec.base;
    for (key, v) in &flat {
        let k = key.as_str();
        match k {
            "seed" => {
                c.seed = match v {
                    toml::Value::Integer(i) if *i >= 0 => *i as u64,
                    // seeds above i64::MAX may be given as strings
                    toml::Value::String(s) => s.parse().map_err(|_| bad(k, "expected a u64"))?,
                    _ => return Err(bad(k, "expected a nonnegative integer")),
                }
            }
            "sim.dt" => c.dt = as_f64(k, v)?,
            "sim.max_time_s" => c.max_time = as_f64(k, v)?,
            "sim.v_m" => c.max_speed = as_f64(k, v)?,
            "plume.Q" => c.emission_rate = as_f64(k, v)?,
            "plume.w" => c.wind_speed = as_f64(k, v)?,
            "plume.Hs" => c.stack_height = as_f64(k, v)?,
            "plume.source_xy" => {
                let l = as_list(k, v)?;
                if l.len() != 2 {
                    return Err(bad(k, "expected [x, y]"));
                }
                c.source_xy = [as_f64(k, &l[0])?, as_f64(k, &l[1])?];
            }
            "plume.coeffs.a" => c.coeffs.a = as_f64(k, v)?,
            "plume.coeffs.b" => c.coeffs.b_exp = as_f64(k, v)?,
            "plume.coeffs.c" => c.coeffs.c = as_f64(k, v)?,
            "plume.coeffs.d" => c.coeffs.d_exp = as_f64(k, v)?,
            "plume.sensor_gain" => c.sensor_gain = as_f64(k, v)?,
            "wind.scenario" => c.wind = parse_enum(k, v)?,
            "wind.mean_dir_deg" => c.wind_mean_deg = as_f64(k, v)?,
            "wind.spread_deg" => c.wind_spread_deg = as_f64(k, v)?,
            "wind.resample_s" => c.wind_resample = as_f64(k, v)?,
            "field.model" => c.field = parse_enum(k, v)?,
            "field.radial_sigma_m" => c.radial_sigma = as_f64(k, v)?,
            "field.radial_peak" => c.radial_peak = as_f64(k, v)?,
            "swarm.n" => c.n = as_usize(k, v)?,
            "swarm.k_gain" => c.gain = as_f64(k, v)?,
            "swarm.topology" => c.topology = parse_enum(k, v)?,
            "swarm.substeps" => c.substeps = as_usize(k, v)?,
            "explore.strategy" => c.strategy = parse_enum(k, v)?,
            "explore.theta_M_deg" => c.theta_max_deg = as_f64(k, v)?,
            "explore.theta_r_deg" => c.theta_reentry_deg = as_f64(k, v)?,
            "explore.d_m" => c.safety_distance = as_f64(k, v)?,
            "explore.delta_y" => c.lane_spacing = as_f64(k, v)?,
            "explore.h_m" => c.threshold = as_f64(k, v)?,
            "explore.formation" => c.formation = parse_enum(k, v)?,
            "area.size_m" => c.area_size = as_f64(k, v)?,
            "area.z_f" => c.altitude = as_f64(k, v)?,
            "loc.r" => c.circle_radius = as_f64(k, v)?,
            "loc.gamma" => c.gamma = as_f64(k, v)?,
            "loc.rho_m" => c.rho_m = as_f64(k, v)?,
            "loc.arc_speed_mps" => c.arc_speed = as_f64(k, v)?,
            "loc.max_handoffs" => c.max_handoffs = as_usize(k, v)?,
            "loc.slot_tolerance_m" => c.slot_tolerance = as_f64(k, v)?,
            "sweep.strategies" => {
                spec.strategies = as_list(k, v)?
                    .iter()
                    .map(|x| parse_enum(k, x))
                    .collect::<Result<_, _>>()?
            }
            "sweep.n_values" => {
                spec.n_values = as_list(k, v)?
                    .iter()
                    .map(|x| as_usize(k, x))
                    .collect::<Result<_, _>>()?
            }
            "sweep.scenarios" => {
                spec.scenarios = as_list(k, v)?
                    .iter()
                    .map(|x| parse_enum(k, x))
                    .collect::<Result<_, _>>()?
            }
            "sweep.m_s" => spec.m_s = as_usize(k, v)?,
            "sweep.m_w" => spec.m_w = as_usize(k, v)?,
            "sweep.pairing" => spec.pairing = parse_enum(k, v)?,
            "sweep.vary_plume" => spec.vary_plume = as_bool(k, v)?,
            "sweep.source_margin_m" => spec.source_margin = as_f64(k, v)?,
            _ => return Err(ConfigError::UnknownKey(key.clone())),
        }
    }
    Ok(spec)
}

pub fn load_config(path: &Path) -> Result<SweepSpec, ConfigError> {
    parse_config(&std::fs::read_to_string(path)?)
}
