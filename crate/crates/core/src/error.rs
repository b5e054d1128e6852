use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlumeError {
    #[error("downwind distance must be positive, got {0}")]
    NonPositiveDownwind(f64),
    #[error("averaged field has no samples")]
    EmptyField,
    #[error("invalid plume parameter: {0}")]
    InvalidParam(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SwarmError {
    #[error("formation needs at least 2 agents, got {0}")]
    TooFewAgents(usize),
    #[error("formation graph is disconnected")]
    Disconnected,
    #[error("agent {0} has no neighbours")]
    IsolatedAgent(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExploreError {
    #[error("scanning needs at least 2 agents, got {0}")]
    TooFewAgents(usize),
    #[error("line formation of width {width} m does not fit an area {extent} m tall")]
    FormationTooWide { width: f64, extent: f64 },
    #[error("scan plan exhausted without detection")]
    Exhausted,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LocaliseError {
    #[error("localisation needs at least 2 agents, got {0}")]
    TooFewAgents(usize),
    #[error("spiral contraction gamma*rho_m = {step} must be in (0, r = {r})")]
    BadContraction { step: f64, r: f64 },
    #[error("source estimate requested before the protocol finished")]
    NotDone,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("config key `{key}`: {msg}")]
    BadValue { key: String, msg: String },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("non-finite state at t = {t} s: {dump}")]
    NonFinite { t: f64, dump: String },
    #[error("cannot write trace: {0}")]
    Trace(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Swarm(#[from] SwarmError),
    #[error(transparent)]
    Explore(#[from] ExploreError),
    #[error(transparent)]
    Localise(#[from] LocaliseError),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed runs.csv: {0}")]
    Malformed(String),
}
