//! Distributed source localisation.
//!
//! Once an agent detects the gas it anchors as leader and the others form a
//! circle of radius `r` around it. The circle then contracts along
//! synchronised logarithmic spirals; any follower that reads more than the
//! leader takes over and the procedure restarts around it. When the spiral
//! radius reaches `rho_m` the followers probe one arc of `2 pi / (n - 1)` on
//! the `rho_m` circle, handing over on higher readings, and the final leader
//! anchor is the source estimate.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::LocaliseError;
use crate::exploration::AreaBounds;
use crate::swarm::DesiredTrajectory;
use crate::Vec3;

/// Spiral coefficient `b = (n - 1) / (2 pi) ln((r - gamma rho_m) / r)`, so
/// that the radius shrinks by `gamma rho_m` between neighbouring slots.
pub fn spiral_coeff(n: usize, r: f64, gamma: f64, rho_m: f64) -> Result<f64, LocaliseError> {
    if n < 2 {
        return Err(LocaliseError::TooFewAgents(n));
    }
    let step = gamma * rho_m;
    if !(step > 0.0 && step < r) {
        return Err(LocaliseError::BadContraction { step, r });
    }
    Ok((n - 1) as f64 / TAU * (-step / r).ln_1p())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpiralParams {
    /// Initial circle radius, metres.
    pub radius: f64,
    pub gamma: f64,
    /// Tolerated localisation error, metres.
    pub rho_m: f64,
    pub n: usize,
    /// Spiral coefficient, negative.
    pub b: f64,
}

impl SpiralParams {
    pub fn new(n: usize, radius: f64, gamma: f64, rho_m: f64) -> Result<Self, LocaliseError> {
        let b = spiral_coeff(n, radius, gamma, rho_m)?;
        Ok(Self {
            radius,
            gamma,
            rho_m,
            n,
            b,
        })
    }

    pub fn radius_at(&self, beta: f64) -> f64 {
        self.radius * (self.b * beta).exp()
    }

    /// Swept angle at which the spiral radius equals `rho_m`.
    pub fn terminal_beta(&self) -> f64 {
        (self.rho_m / self.radius).ln() / self.b
    }

    /// Angular rate giving path speed `speed` along the spiral at `beta`.
    pub fn beta_rate(&self, beta: f64, speed: f64) -> f64 {
        speed / (self.radius_at(beta) * (1.0 + self.b * self.b).sqrt())
    }

    /// Angular width of each follower's terminal arc.
    pub fn arc_angle(&self) -> f64 {
        TAU / (self.n - 1) as f64
    }
}

/// Equally spaced slot bearings `2 pi k / (n - 1)`.
pub fn slot_angles(n: usize) -> Result<Vec<f64>, LocaliseError> {
    if n < 2 {
        return Err(LocaliseError::TooFewAgents(n));
    }
    let m = n - 1;
    Ok((0..m).map(|k| TAU * k as f64 / m as f64).collect())
}

/// Circle offsets around the leader for the `n - 1` followers.
pub fn circle_slots(r: f64, n: usize) -> Result<Vec<Vec3>, LocaliseError> {
    Ok(slot_angles(n)?
        .into_iter()
        .map(|a| Vec3::new(r * a.cos(), r * a.sin(), 0.0))
        .collect())
}

fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Greedy matching of followers to slot bearings by ascending angular
/// distance between each follower's bearing from `centre` and the slot.
/// Returns the slot index for each follower, in input order.
pub fn assign_slots(centre: &Vec3, followers: &[Vec3], angles: &[f64]) -> Vec<usize> {
    let bearings: Vec<f64> = followers
        .iter()
        .map(|p| {
            let (dx, dy) = (p.x - centre.x, p.y - centre.y);
            if dx == 0.0 && dy == 0.0 {
                0.0
            } else {
                dy.atan2(dx)
            }
        })
        .collect();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(followers.len() * angles.len());
    for (f, b) in bearings.iter().enumerate() {
        for (s, a) in angles.iter().enumerate() {
            pairs.push((angular_distance(*b, *a), f, s));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut slot_of = vec![usize::MAX; followers.len()];
    let mut taken = vec![false; angles.len()];
    for (_, f, s) in pairs {
        if slot_of[f] == usize::MAX && !taken[s] {
            slot_of[f] = s;
            taken[s] = true;
        }
    }
    slot_of
}

/// Point on the follower's spiral after sweeping `beta` from its slot.
pub fn spiral_target(leader: &Vec3, slot_angle: f64, beta: f64, params: &SpiralParams) -> Vec3 {
    let r = params.radius_at(beta);
    let psi = slot_angle + beta;
    Vec3::new(leader.x + r * psi.cos(), leader.y + r * psi.sin(), leader.z)
}

/// Time derivative of [`spiral_target`] when `beta` advances at `beta_dot`.
pub fn spiral_velocity(slot_angle: f64, beta: f64, beta_dot: f64, params: &SpiralParams) -> Vec3 {
    let r = params.radius_at(beta);
    let psi = slot_angle + beta;
    let (s, c) = psi.sin_cos();
    Vec3::new(params.b * c - s, params.b * s + c, 0.0) * (r * beta_dot)
}

/// Strictly higher reading takes over; ties keep the current leader.
pub fn handoff_check(candidate: f64, leader: f64) -> bool {
    candidate > leader
}

pub fn spiral_termination(params: &SpiralParams, beta: f64) -> bool {
    params.radius_at(beta) <= params.rho_m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LocalisationPhase {
    FormingCircle,
    Spiraling,
    ArcProbe,
    Done,
}

impl LocalisationPhase {
    pub fn label(self) -> &'static str {
        match self {
            LocalisationPhase::FormingCircle => "forming",
            LocalisationPhase::Spiraling => "spiral",
            LocalisationPhase::ArcProbe => "arc",
            LocalisationPhase::Done => "done",
        }
    }

    /// Whether `self -> next` is an edge of the protocol graph.
    pub fn may_transition_to(self, next: LocalisationPhase) -> bool {
        use LocalisationPhase::*;
        matches!(
            (self, next),
            (FormingCircle, Spiraling)
                | (Spiraling, FormingCircle)
                | (Spiraling, ArcProbe)
                | (ArcProbe, ArcProbe)
                | (ArcProbe, Done)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeaderRecord {
    pub agent: usize,
    pub anchor: Vec3,
    pub reading: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Handoff {
    pub time: f64,
    pub from: usize,
    pub to: usize,
    /// Outgoing leader's reading in the snapshot that triggered the handoff.
    pub leader_reading: f64,
    pub candidate_reading: f64,
    pub phase: LocalisationPhase,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseTransition {
    pub time: f64,
    pub from: LocalisationPhase,
    pub to: LocalisationPhase,
}

/// Tunables of the protocol beyond the spiral geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSettings {
    /// Path speed along the spiral, m/s.
    pub speed: f64,
    /// Path speed along the terminal arc, m/s.
    pub arc_speed: f64,
    pub gain: f64,
    /// Followers count as on-slot within this distance, metres.
    pub slot_tolerance: f64,
    /// Consecutive on-slot observations before the spiral starts.
    pub settle_steps: usize,
    pub max_handoffs: usize,
}

impl Default for ProtocolSettings {
    fn default() -> Self {
        Self {
            speed: 3.0,
            arc_speed: 0.2,
            gain: 1.0,
            slot_tolerance: 1.0,
            settle_steps: 3,
            max_handoffs: 50,
        }
    }
}

/// What the engine should do with a follower this substep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FollowerCommand {
    /// Converge on the slot offsets with the consensus follower law.
    Formation,
    /// Track this reference with feed-forward plus proportional correction.
    Track(DesiredTrajectory),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Continue,
    Done,
    GuardTripped,
}

#[derive(Debug, Clone)]
pub struct Localiser {
    params: SpiralParams,
    settings: ProtocolSettings,
    bounds: AreaBounds,
    phase: LocalisationPhase,
    leader: LeaderRecord,
    /// Slot bearing per agent; `None` for the leader.
    slot: Vec<Option<f64>>,
    /// Radius of the circle currently being formed.
    circle_radius: f64,
    beta: f64,
    /// Arc swept so far in the probe; `None` while approaching the circle.
    arc: Option<f64>,
    settled: usize,
    handoffs: Vec<Handoff>,
    transitions: Vec<PhaseTransition>,
    leaders: Vec<LeaderRecord>,
}

impl Localiser {
    /// Starts the protocol around the detecting agent.
    pub fn start(
        params: SpiralParams,
        settings: ProtocolSettings,
        bounds: AreaBounds,
        leader: LeaderRecord,
        positions: &[Vec3],
    ) -> Result<Self, LocaliseError> {
        if positions.len() < 2 {
            return Err(LocaliseError::TooFewAgents(positions.len()));
        }
        let mut loc = Self {
            params,
            settings,
            bounds,
            phase: LocalisationPhase::FormingCircle,
            leader,
            slot: vec![None; positions.len()],
            circle_radius: params.radius,
            beta: 0.0,
            arc: None,
            settled: 0,
            handoffs: vec![],
            transitions: vec![],
            leaders: vec![leader],
        };
        loc.assign(positions, params.radius);
        Ok(loc)
    }

    pub fn phase(&self) -> LocalisationPhase {
        self.phase
    }

    pub fn leader(&self) -> &LeaderRecord {
        &self.leader
    }

    pub fn leaders(&self) -> &[LeaderRecord] {
        &self.leaders
    }

    pub fn handoffs(&self) -> &[Handoff] {
        &self.handoffs
    }

    pub fn transitions(&self) -> &[PhaseTransition] {
        &self.transitions
    }

    pub fn params(&self) -> &SpiralParams {
        &self.params
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn arc_swept(&self) -> Option<f64> {
        self.arc
    }

    pub fn circle_radius(&self) -> f64 {
        self.circle_radius
    }

    /// Slot bearings around the current anchor. The ring is turned so the
    /// first slot faces the area centre, keeping slots inside near walls.
    fn assign(&mut self, positions: &[Vec3], radius: f64) {
        let b = &self.bounds;
        let dx = (b.x_min + b.x_max) / 2.0 - self.leader.anchor.x;
        let dy = (b.y_min + b.y_max) / 2.0 - self.leader.anchor.y;
        let base = if dx == 0.0 && dy == 0.0 { 0.0 } else { dy.atan2(dx) };
        let angles: Vec<f64> = slot_angles(self.params.n)
            .unwrap_or_default()
            .into_iter()
            .map(|a| a + base)
            .collect();
        let followers: Vec<usize> = (0..positions.len()).filter(|i| *i != self.leader.agent).collect();
        let fpos: Vec<Vec3> = followers.iter().map(|i| positions[*i]).collect();
        let slots = assign_slots(&self.leader.anchor, &fpos, &angles);
        self.slot = vec![None; positions.len()];
        for (f, s) in followers.iter().zip(slots) {
            self.slot[*f] = Some(angles[s]);
        }
        self.circle_radius = radius;
        self.settled = 0;
    }

    /// Formation offsets for the consensus law: zero for the leader, the
    /// circle slot (projected into the area) for each follower.
    pub fn offsets(&self) -> Vec<Vec3> {
        let anchor = self.leader.anchor;
        self.slot
            .iter()
            .map(|s| match s {
                None => Vec3::zeros(),
                Some(a) => {
                    let slot = anchor + Vec3::new(self.circle_radius * a.cos(), self.circle_radius * a.sin(), 0.0);
                    self.bounds.clamp(&slot).0 - anchor
                }
            })
            .collect()
    }

    fn raw_target(&self, i: usize) -> Vec3 {
        let anchor = self.leader.anchor;
        match (self.slot[i], self.phase) {
            (None, _) => anchor,
            (Some(a), LocalisationPhase::Spiraling) => spiral_target(&anchor, a, self.beta, &self.params),
            (Some(a), LocalisationPhase::ArcProbe) => {
                let psi = a + self.arc.unwrap_or(0.0);
                anchor + Vec3::new(self.circle_radius * psi.cos(), self.circle_radius * psi.sin(), 0.0)
            }
            (Some(a), _) => anchor + Vec3::new(self.circle_radius * a.cos(), self.circle_radius * a.sin(), 0.0),
        }
    }

    /// Where agent `i` should currently be, projected into the area.
    pub fn target(&self, i: usize) -> Vec3 {
        self.bounds.clamp(&self.raw_target(i)).0
    }

    /// Control mode for agent `i`; `None` means hold position (the leader).
    pub fn command(&self, i: usize) -> Option<FollowerCommand> {
        let a = self.slot[i]?;
        let anchor = self.leader.anchor;
        match self.phase {
            LocalisationPhase::Spiraling => {
                let rate = self.params.beta_rate(self.beta, self.settings.speed);
                Some(FollowerCommand::Track(DesiredTrajectory {
                    position: spiral_target(&anchor, a, self.beta, &self.params),
                    velocity: spiral_velocity(a, self.beta, rate, &self.params),
                }))
            }
            LocalisationPhase::ArcProbe => match self.arc {
                None => Some(FollowerCommand::Formation),
                Some(psi0) => {
                    let rho = self.circle_radius;
                    let psi = a + psi0;
                    let omega = if psi0 < self.params.arc_angle() {
                        self.settings.arc_speed / rho
                    } else {
                        0.0
                    };
                    Some(FollowerCommand::Track(DesiredTrajectory {
                        position: anchor + Vec3::new(rho * psi.cos(), rho * psi.sin(), 0.0),
                        velocity: Vec3::new(-psi.sin(), psi.cos(), 0.0) * (rho * omega),
                    }))
                }
            },
            LocalisationPhase::FormingCircle => Some(FollowerCommand::Formation),
            LocalisationPhase::Done => None,
        }
    }

    /// Advances the spiral angle or the arc sweep by one control substep.
    pub fn advance(&mut self, dt: f64) {
        match self.phase {
            LocalisationPhase::Spiraling => {
                let end = self.params.terminal_beta();
                let next = self.beta + self.params.beta_rate(self.beta, self.settings.speed) * dt;
                // stop one substep past the terminal radius at most
                self.beta = if self.beta >= end { self.beta } else { next };
            }
            LocalisationPhase::ArcProbe => {
                if let Some(psi) = self.arc.as_mut() {
                    let omega = self.settings.arc_speed / self.circle_radius;
                    *psi = (*psi + omega * dt).min(self.params.arc_angle());
                }
            }
            _ => {}
        }
    }

    fn set_phase(&mut self, time: f64, next: LocalisationPhase) {
        self.transitions.push(PhaseTransition {
            time,
            from: self.phase,
            to: next,
        });
        self.phase = next;
    }

    fn all_on_slot(&self, positions: &[Vec3]) -> bool {
        (0..positions.len())
            .filter(|i| self.slot[*i].is_some())
            .all(|i| (positions[i] - self.target(i)).norm() <= self.settings.slot_tolerance)
    }

    /// Best follower strictly above the leader's reading in this snapshot.
    /// Followers whose path point lies outside the area are held on the
    /// boundary rather than on their path and do not compete.
    fn challenger(&self, readings: &[f64]) -> Option<usize> {
        let lead = readings[self.leader.agent];
        let mut best: Option<usize> = None;
        for (i, r) in readings.iter().enumerate() {
            if self.slot[i].is_some() && self.bounds.contains(&self.raw_target(i)) && handoff_check(*r, lead) {
                match best {
                    Some(b) if readings[b] >= *r => {}
                    _ => best = Some(i),
                }
            }
        }
        best
    }

    fn hand_over(&mut self, time: f64, to: usize, positions: &[Vec3], readings: &[f64]) {
        let from = self.leader.agent;
        self.handoffs.push(Handoff {
            time,
            from,
            to,
            leader_reading: readings[from],
            candidate_reading: readings[to],
            phase: self.phase,
        });
        self.leader = LeaderRecord {
            agent: to,
            anchor: positions[to],
            reading: readings[to],
        };
        self.leaders.push(self.leader);
    }

    /// Evaluates the protocol transitions on the end-of-step snapshot.
    pub fn observe(&mut self, time: f64, positions: &[Vec3], readings: &[f64]) -> Outcome {
        if self.phase == LocalisationPhase::Done {
            return Outcome::Done;
        }
        self.leader.reading = readings[self.leader.agent];

        if self.phase == LocalisationPhase::FormingCircle
            || (self.phase == LocalisationPhase::ArcProbe && self.arc.is_none())
        {
            if self.all_on_slot(positions) {
                self.settled += 1;
            } else {
                self.settled = 0;
            }
            if self.settled >= self.settings.settle_steps {
                if self.phase == LocalisationPhase::FormingCircle {
                    self.beta = 0.0;
                    self.set_phase(time, LocalisationPhase::Spiraling);
                } else {
                    self.arc = Some(0.0);
                }
            }
        }

        match self.phase {
            LocalisationPhase::Spiraling => {
                if let Some(c) = self.challenger(readings) {
                    self.hand_over(time, c, positions, readings);
                    if self.handoffs.len() > self.settings.max_handoffs {
                        return Outcome::GuardTripped;
                    }
                    self.assign(positions, self.params.radius);
                    self.beta = 0.0;
                    self.set_phase(time, LocalisationPhase::FormingCircle);
                } else if spiral_termination(&self.params, self.beta) {
                    // followers keep their current bearings for the arc
                    let beta = self.beta;
                    for a in self.slot.iter_mut().flatten() {
                        *a += beta;
                    }
                    self.circle_radius = self.params.rho_m;
                    self.arc = Some(0.0);
                    self.set_phase(time, LocalisationPhase::ArcProbe);
                }
            }
            LocalisationPhase::ArcProbe => {
                if let Some(psi) = self.arc {
                    if let Some(c) = self.challenger(readings) {
                        self.hand_over(time, c, positions, readings);
                        if self.handoffs.len() > self.settings.max_handoffs {
                            return Outcome::GuardTripped;
                        }
                        self.assign(positions, self.params.rho_m);
                        self.arc = None;
                        self.set_phase(time, LocalisationPhase::ArcProbe);
                    } else if psi >= self.params.arc_angle() {
                        self.set_phase(time, LocalisationPhase::Done);
                        return Outcome::Done;
                    }
                }
            }
            _ => {}
        }
        Outcome::Continue
    }

    /// Planar source estimate: the final leader anchor.
    pub fn estimate_source(&self) -> Result<[f64; 2], LocaliseError> {
        if self.phase != LocalisationPhase::Done {
            return Err(LocaliseError::NotDone);
        }
        Ok([self.leader.anchor.x, self.leader.anchor.y])
    }
}

/// Planar distance between an estimate and the true source.
pub fn error_norm(estimate: [f64; 2], source: &Vec3) -> f64 {
    ((estimate[0] - source.x).powi(2) + (estimate[1] - source.y).powi(2)).sqrt()
}
