//! One complete mission: exploration until detection, then localisation.
//!
//! Every sampling step runs wind, field update, control, integration,
//! measurement and transitions in that order. Controls are evaluated in
//! `substeps` sub-intervals, each from a snapshot of the positions at its
//! start and the velocities realised in the previous sub-interval.

use std::f64::consts::TAU;
use std::io::Write;

use rand::Rng;
use serde::Serialize;

use crate::config::{FieldKind, SimConfig, WindKind};
use crate::error::{EngineError, ExploreError};
use crate::exploration::{
    detection_check, scan_setup, wrap_angle, AreaBounds, ScanLeg, ScanPlan, Strategy, WalkerStep,
};
use crate::localisation::{error_norm, FollowerCommand, LeaderRecord, Localiser, Outcome};
use crate::plume::{AveragedField, PlumeParams, WindProcess};
use crate::rng::{self, Stream};
use crate::swarm::{follower_input, leader_input, DesiredTrajectory, FormationGraph, Topology};
use crate::Vec3;

/// Radius of the start circle around the area centre, metres.
pub const START_RADIUS: f64 = 50.0;

/// Scan formation counts as assembled below this formation error, metres.
pub const ASSEMBLY_TOLERANCE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Done,
    ExplorationTimeout,
    ScanExhausted,
    LocalisationGuard,
    LocalisationTimeout,
    /// Non-finite state or another internal failure.
    HardFailure,
}

impl Termination {
    pub const ALL: [Termination; 6] = [
        Termination::Done,
        Termination::ExplorationTimeout,
        Termination::ScanExhausted,
        Termination::LocalisationGuard,
        Termination::LocalisationTimeout,
        Termination::HardFailure,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Termination::Done => "done",
            Termination::ExplorationTimeout => "exploration_timeout",
            Termination::ScanExhausted => "scan_exhausted",
            Termination::LocalisationGuard => "localisation_guard",
            Termination::LocalisationTimeout => "localisation_timeout",
            Termination::HardFailure => "hard_failure",
        }
    }
}

impl std::str::FromStr for Termination {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Termination::ALL
            .into_iter()
            .find(|t| t.label() == s)
            .ok_or_else(|| format!("unknown termination reason `{s}`"))
    }
}

/// Metrics of one mission.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub seed: u64,
    pub strategy: Strategy,
    pub n: usize,
    pub wind_scenario: WindKind,
    /// Time of the first above-threshold reading, seconds.
    pub t_detect: Option<f64>,
    /// Time the localisation finished, seconds since mission start.
    pub t_total: Option<f64>,
    /// Planar distance between the estimate and the true source, metres.
    pub error: Option<f64>,
    pub handoffs: usize,
    /// Path length per agent, metres.
    pub distance: Vec<f64>,
    pub reason: Termination,
}

impl RunRecord {
    pub fn succeeded(&self) -> bool {
        self.reason == Termination::Done
    }

    /// Record for a run that could not be simulated at all.
    pub fn hard_failure(cfg: &SimConfig) -> Self {
        Self {
            seed: cfg.seed,
            strategy: cfg.strategy,
            n: cfg.n,
            wind_scenario: cfg.wind,
            t_detect: None,
            t_total: None,
            error: None,
            handoffs: 0,
            distance: vec![],
            reason: Termination::HardFailure,
        }
    }
}

/// The sensed scalar field.
#[derive(Debug, Clone)]
pub enum Field {
    Plume {
        params: PlumeParams,
        wind: WindProcess,
        averaged: AveragedField,
    },
    Radial {
        centre: Vec3,
        sigma: f64,
        peak: f64,
    },
}

impl Field {
    pub fn from_config(cfg: &SimConfig) -> Self {
        match cfg.field {
            FieldKind::Plume => Field::Plume {
                params: cfg.plume(),
                wind: WindProcess::new(cfg.wind_scenario(), rng::stream(cfg.seed, "wind")),
                averaged: AveragedField::new(),
            },
            FieldKind::Radial => Field::Radial {
                centre: cfg.source(),
                sigma: cfg.radial_sigma,
                peak: cfg.radial_peak,
            },
        }
    }

    /// Samples the wind at `t` and folds it into the running average.
    pub fn update(&mut self, t: f64) {
        if let Field::Plume { wind, averaged, .. } = self {
            averaged.add_sample(wind.sample_wind(t));
        }
    }

    pub fn read(&self, p: &Vec3) -> f64 {
        match self {
            Field::Plume { params, averaged, .. } => averaged.averaged_measure(p, params).unwrap_or(0.0),
            Field::Radial { centre, sigma, peak } => {
                let d2 = (p.x - centre.x).powi(2) + (p.y - centre.y).powi(2);
                peak * (-d2 / (sigma * sigma)).exp()
            }
        }
    }
}

#[derive(Debug, Clone)]
enum Phase {
    Scanning {
        plan: ScanPlan,
        graph: FormationGraph,
        anchor: Vec3,
        exhausted: bool,
    },
    Walking,
    Localising(Box<Localiser>),
    Finished,
}

impl Phase {
    fn label(&self) -> &'static str {
        match self {
            Phase::Scanning { .. } | Phase::Walking => "explore",
            Phase::Localising(loc) => loc.phase().label(),
            Phase::Finished => "failed",
        }
    }
}

/// One row of the per-step trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: f64,
    pub agent_id: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub theta: f64,
    pub reading: f64,
    pub phase: &'static str,
    /// Localisation leader, or the scan leader while scanning; -1 otherwise.
    pub leader_id: i64,
}

/// Mutable world state of one mission.
#[derive(Debug, Clone)]
pub struct Mission {
    cfg: SimConfig,
    bounds: AreaBounds,
    field: Field,
    t: f64,
    step_count: u64,
    positions: Vec<Vec3>,
    velocities: Vec<Vec3>,
    headings: Vec<f64>,
    readings: Vec<f64>,
    distance: Vec<f64>,
    agent_rngs: Vec<Stream>,
    event_rng: Stream,
    phase: Phase,
    t_detect: Option<f64>,
    outcome: Option<Termination>,
}

/// Evenly spaced start positions on a circle with a random phase, random
/// headings.
pub fn initial_placement(n: usize, bounds: &AreaBounds, rng: &mut Stream) -> (Vec<Vec3>, Vec<f64>) {
    let phase = rng.random_range(0.0..TAU);
    let cx = (bounds.x_min + bounds.x_max) / 2.0;
    let cy = (bounds.y_min + bounds.y_max) / 2.0;
    let radius = START_RADIUS.min(bounds.width().min(bounds.height()) / 2.0);
    let positions = (0..n)
        .map(|i| {
            let a = phase + TAU * i as f64 / n as f64;
            Vec3::new(cx + radius * a.cos(), cy + radius * a.sin(), bounds.z_f)
        })
        .collect();
    let headings = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
    (positions, headings)
}

impl Mission {
    pub fn new(cfg: &SimConfig) -> Result<Self, EngineError> {
        cfg.validate()?;
        let n = cfg.n;
        let bounds = cfg.bounds();
        let mut place = rng::stream(cfg.seed, "placement");
        let (positions, headings) = initial_placement(n, &bounds, &mut place);
        let phase = match cfg.strategy {
            Strategy::Scan => {
                let (plan, offsets) = scan_setup(n, &bounds, cfg.lane_spacing, cfg.max_speed, cfg.formation)?;
                let graph = FormationGraph::with_topology(cfg.topology, offsets)?;
                let anchor = positions[plan.leader()];
                Phase::Scanning {
                    plan,
                    graph,
                    anchor,
                    exhausted: false,
                }
            }
            Strategy::RandomWalk | Strategy::Brownian => Phase::Walking,
        };
        let mut field = Field::from_config(cfg);
        field.update(0.0);
        let readings = positions.iter().map(|p| field.read(p)).collect();
        let mut mission = Self {
            cfg: cfg.clone(),
            bounds,
            field,
            t: 0.0,
            step_count: 0,
            positions,
            velocities: vec![Vec3::zeros(); n],
            headings,
            readings,
            distance: vec![0.0; n],
            agent_rngs: (0..n as u64)
                .map(|i| rng::indexed_stream(cfg.seed, "walk", i))
                .collect(),
            event_rng: rng::stream(cfg.seed, "events"),
            phase,
            t_detect: None,
            outcome: None,
        };
        mission.transitions()?;
        Ok(mission)
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn readings(&self) -> &[f64] {
        &self.readings
    }

    pub fn headings(&self) -> &[f64] {
        &self.headings
    }

    pub fn outcome(&self) -> Option<Termination> {
        self.outcome
    }

    pub fn t_detect(&self) -> Option<f64> {
        self.t_detect
    }

    pub fn localiser(&self) -> Option<&Localiser> {
        match &self.phase {
            Phase::Localising(loc) => Some(loc),
            _ => None,
        }
    }

    pub fn phase_label(&self) -> &'static str {
        self.phase.label()
    }

    fn leader_id(&self) -> i64 {
        match &self.phase {
            Phase::Scanning { plan, .. } => plan.leader() as i64,
            Phase::Localising(loc) => loc.leader().agent as i64,
            _ => -1,
        }
    }

    /// FNV-1a over the bit patterns of time, positions, headings and readings.
    pub fn state_hash(&self) -> u64 {
        let mut bytes = Vec::with_capacity(8 * (1 + 5 * self.positions.len()));
        bytes.extend_from_slice(&self.t.to_bits().to_le_bytes());
        for i in 0..self.positions.len() {
            for v in [
                self.positions[i].x,
                self.positions[i].y,
                self.positions[i].z,
                self.headings[i],
                self.readings[i],
            ] {
                bytes.extend_from_slice(&v.to_bits().to_le_bytes());
            }
        }
        rng::fnv1a(&bytes)
    }

    pub fn trace_rows(&self) -> Vec<TraceRow> {
        let phase = self.phase.label();
        let leader_id = self.leader_id();
        (0..self.positions.len())
            .map(|i| TraceRow {
                t: self.t,
                agent_id: i,
                x: self.positions[i].x,
                y: self.positions[i].y,
                z: self.positions[i].z,
                theta: self.headings[i],
                reading: self.readings[i],
                phase,
                leader_id,
            })
            .collect()
    }

    /// Advances one sampling step. Does nothing once the mission has ended.
    pub fn step(&mut self) -> Result<(), EngineError> {
        if self.outcome.is_some() {
            return Ok(());
        }
        let before = self.positions.clone();
        match &self.phase {
            Phase::Walking => self.walk(),
            Phase::Scanning { .. } => self.scan()?,
            Phase::Localising(_) => self.localise()?,
            Phase::Finished => {}
        }
        if matches!(self.phase, Phase::Walking) {
            for (d, (a, b)) in self.distance.iter_mut().zip(before.iter().zip(&self.positions)) {
                *d += (b - a).norm();
            }
        }
        self.step_count += 1;
        self.t = self.step_count as f64 * self.cfg.dt;
        self.field.update(self.t);
        self.readings = self.positions.iter().map(|p| self.field.read(p)).collect();
        self.check_finite()?;
        self.transitions()
    }

    fn check_finite(&self) -> Result<(), EngineError> {
        let ok = self.positions.iter().all(|p| p.iter().all(|v| v.is_finite()))
            && self.readings.iter().all(|r| r.is_finite())
            && self.headings.iter().all(|h| h.is_finite());
        if ok {
            return Ok(());
        }
        let dump = self
            .positions
            .iter()
            .zip(&self.readings)
            .enumerate()
            .map(|(i, (p, r))| format!("agent {i}: ({}, {}, {}) reading {r}", p.x, p.y, p.z))
            .collect::<Vec<_>>()
            .join("; ");
        Err(EngineError::NonFinite { t: self.t, dump })
    }

    fn sub_dt(&self) -> f64 {
        self.cfg.dt / self.cfg.substeps as f64
    }

    fn walk(&mut self) {
        let params = self.cfg.walk_params();
        let walker = WalkerStep {
            strategy: self.cfg.strategy,
            params: &params,
            bounds: &self.bounds,
            speed: self.cfg.max_speed,
            dt: self.cfg.dt,
            substeps: self.cfg.substeps,
        };
        walker.run(
            &mut self.positions,
            &mut self.headings,
            &mut self.agent_rngs,
            &mut self.event_rng,
        );
    }

    /// Integrates every agent one substep with the given inputs.
    fn integrate(&mut self, inputs: &[Vec3], dt: f64) {
        for (i, u) in inputs.iter().enumerate() {
            let old = self.positions[i];
            let moved = crate::swarm::step_agent(&old, u, dt, self.cfg.max_speed);
            let (mut clamped, _) = self.bounds.clamp(&moved);
            clamped.z = self.bounds.z_f;
            self.positions[i] = clamped;
            self.velocities[i] = (clamped - old) / dt;
            self.distance[i] += (clamped - old).norm();
            if self.velocities[i].x != 0.0 || self.velocities[i].y != 0.0 {
                self.headings[i] = wrap_angle(self.velocities[i].y.atan2(self.velocities[i].x));
            }
        }
    }

    fn scan(&mut self) -> Result<(), EngineError> {
        let dt = self.sub_dt();
        let n = self.cfg.n;
        for _ in 0..self.cfg.substeps {
            let Phase::Scanning {
                plan,
                graph,
                anchor,
                exhausted,
            } = &mut self.phase
            else {
                unreachable!()
            };
            let l = plan.leader();
            let traj = if plan.leg() == ScanLeg::Assemble {
                DesiredTrajectory::fixed(*anchor)
            } else {
                plan.desired()
            };
            let mut inputs = vec![Vec3::zeros(); n];
            for (i, u) in inputs.iter_mut().enumerate() {
                *u = if i == l {
                    leader_input(graph, &self.positions, i, &traj, self.cfg.gain)
                } else {
                    follower_input(graph, &self.velocities, &self.positions, i)?
                };
            }
            if plan.leg() == ScanLeg::Assemble {
                if graph.formation_error(&self.positions) <= ASSEMBLY_TOLERANCE {
                    plan.begin_transit(self.positions[l]);
                }
            } else if !*exhausted {
                match plan.advance(dt) {
                    Ok(()) => {}
                    Err(ExploreError::Exhausted) => *exhausted = true,
                    Err(e) => return Err(e.into()),
                }
                let offsets = plan.offsets();
                if offsets.as_slice() != graph.offsets() {
                    graph.set_offsets(offsets)?;
                }
            }
            self.integrate(&inputs, dt);
        }
        Ok(())
    }

    fn localise(&mut self) -> Result<(), EngineError> {
        let dt = self.sub_dt();
        let n = self.cfg.n;
        let gain = self.cfg.gain;
        for _ in 0..self.cfg.substeps {
            let Phase::Localising(loc) = &mut self.phase else {
                unreachable!()
            };
            let graph = FormationGraph::with_topology(Topology::Complete, loc.offsets())?;
            let anchor = loc.leader().anchor;
            let mut inputs = vec![Vec3::zeros(); n];
            for (i, u) in inputs.iter_mut().enumerate() {
                *u = match loc.command(i) {
                    None => gain * (anchor - self.positions[i]),
                    Some(FollowerCommand::Formation) => follower_input(&graph, &self.velocities, &self.positions, i)?,
                    Some(FollowerCommand::Track(traj)) => traj.velocity - gain * (self.positions[i] - traj.position),
                };
            }
            loc.advance(dt);
            self.integrate(&inputs, dt);
        }
        Ok(())
    }

    fn start_localisation(&mut self, agent: usize) -> Result<(), EngineError> {
        let leader = LeaderRecord {
            agent,
            anchor: self.positions[agent],
            reading: self.readings[agent],
        };
        let loc = Localiser::start(
            self.cfg.spiral()?,
            self.cfg.protocol(),
            self.bounds,
            leader,
            &self.positions,
        )?;
        self.velocities = vec![Vec3::zeros(); self.cfg.n];
        self.phase = Phase::Localising(Box::new(loc));
        Ok(())
    }

    fn transitions(&mut self) -> Result<(), EngineError> {
        let t = self.t;
        let timed_out = t >= self.cfg.max_time;
        match &mut self.phase {
            Phase::Scanning { .. } | Phase::Walking => {
                if let Some(ev) = detection_check(&self.positions, &self.readings, self.cfg.threshold, t) {
                    self.t_detect = Some(t);
                    return self.start_localisation(ev.agent);
                }
                if let Phase::Scanning { exhausted: true, .. } = self.phase {
                    self.finish(Termination::ScanExhausted);
                } else if timed_out {
                    self.finish(Termination::ExplorationTimeout);
                }
            }
            Phase::Localising(loc) => match loc.observe(t, &self.positions, &self.readings) {
                Outcome::Done => self.finish(Termination::Done),
                Outcome::GuardTripped => self.finish(Termination::LocalisationGuard),
                Outcome::Continue if timed_out => self.finish(Termination::LocalisationTimeout),
                Outcome::Continue => {}
            },
            Phase::Finished => {}
        }
        Ok(())
    }

    fn finish(&mut self, reason: Termination) {
        self.outcome = Some(reason);
        if !matches!(self.phase, Phase::Localising(_)) {
            self.phase = Phase::Finished;
        }
    }

    pub fn record(&self) -> RunRecord {
        let reason = self.outcome.unwrap_or(Termination::HardFailure);
        let (t_total, error, handoffs) = match &self.phase {
            Phase::Localising(loc) => {
                let error = loc.estimate_source().ok().map(|e| error_norm(e, &self.cfg.source()));
                let done = reason == Termination::Done;
                (done.then_some(self.t), error.filter(|_| done), loc.handoffs().len())
            }
            _ => (None, None, 0),
        };
        RunRecord {
            seed: self.cfg.seed,
            strategy: self.cfg.strategy,
            n: self.cfg.n,
            wind_scenario: self.cfg.wind,
            t_detect: self.t_detect,
            t_total,
            error,
            handoffs,
            distance: self.distance.clone(),
            reason,
        }
    }

    /// Runs to termination, passing every state (including the initial one)
    /// to `observer`.
    pub fn run_with(mut self, mut observer: impl FnMut(&Mission)) -> Result<RunRecord, EngineError> {
        observer(&self);
        while self.outcome.is_none() {
            self.step()?;
            observer(&self);
        }
        Ok(self.record())
    }
}

/// Runs one mission to completion.
pub fn run_mission(cfg: &SimConfig) -> Result<RunRecord, EngineError> {
    Mission::new(cfg)?.run_with(|_| {})
}

/// Runs one mission and writes the per-step trace as CSV.
pub fn run_mission_traced<W: Write>(cfg: &SimConfig, out: W) -> Result<RunRecord, EngineError> {
    let mut writer = csv::Writer::from_writer(out);
    let mut failure: Option<csv::Error> = None;
    let record = Mission::new(cfg)?.run_with(|m| {
        if failure.is_some() {
            return;
        }
        for row in m.trace_rows() {
            if let Err(e) = writer.serialize(row) {
                failure = Some(e);
                return;
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(EngineError::Trace(e.to_string()));
    }
    writer.flush().map_err(|e| EngineError::Trace(e.to_string()))?;
    Ok(record)
}
