//! Exploration strategies: coordinated lawnmower scanning by a consensus
//! formation, random walk and Brownian motion, with the shared collision and
//! boundary rules and the detection trigger.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ExploreError;
use crate::rng::Stream;
use crate::swarm::DesiredTrajectory;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Hash, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Scan,
    RandomWalk,
    Brownian,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Scan, Strategy::RandomWalk, Strategy::Brownian];

    pub fn label(self) -> &'static str {
        match self {
            Strategy::Scan => "scan",
            Strategy::RandomWalk => "randomwalk",
            Strategy::Brownian => "brownian",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "scan" => Ok(Strategy::Scan),
            "randomwalk" => Ok(Strategy::RandomWalk),
            "brownian" => Ok(Strategy::Brownian),
            other => Err(format!("unknown strategy `{other}`")),
        }
    }
}

/// Axis-aligned search rectangle at a fixed flight altitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaBounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub z_f: f64,
}

impl AreaBounds {
    /// Square of side `size` centred on the origin.
    pub fn square(size: f64, z_f: f64) -> Self {
        let h = size / 2.0;
        Self {
            x_min: -h,
            x_max: h,
            y_min: -h,
            y_max: h,
            z_f,
        }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (self.x_min..=self.x_max).contains(&p.x) && (self.y_min..=self.y_max).contains(&p.y)
    }

    /// Projects `p` into the rectangle. When it had to move, also returns the
    /// bearing of the inward normal of the face (or corner) it crossed.
    pub fn clamp(&self, p: &Vec3) -> (Vec3, Option<f64>) {
        let mut q = *p;
        let mut nx = 0.0;
        let mut ny = 0.0;
        if q.x < self.x_min {
            q.x = self.x_min;
            nx = 1.0;
        } else if q.x > self.x_max {
            q.x = self.x_max;
            nx = -1.0;
        }
        if q.y < self.y_min {
            q.y = self.y_min;
            ny = 1.0;
        } else if q.y > self.y_max {
            q.y = self.y_max;
            ny = -1.0;
        }
        if nx == 0.0 && ny == 0.0 {
            (q, None)
        } else {
            (q, Some(f64::atan2(ny, nx)))
        }
    }
}

pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

// ---------------------------------------------------------------------------
// Coordinated scanning

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanFormation {
    Line,
    Wedge,
}

impl std::str::FromStr for ScanFormation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "line" => Ok(ScanFormation::Line),
            "wedge" => Ok(ScanFormation::Wedge),
            other => Err(format!("unknown formation `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanLeg {
    /// Followers converge on the line around the stationary leader.
    Assemble,
    /// Leader reference travels to the first lane start.
    Transit,
    East,
    West,
    North,
}

/// State of the lawnmower sweep.
#[derive(Debug, Clone)]
pub struct ScanPlan {
    n: usize,
    /// Zero-based index of the scan leader, `ceil(n/2) - 1`.
    leader: usize,
    lane_spacing: f64,
    speed: f64,
    bounds: AreaBounds,
    formation: ScanFormation,
    leg: ScanLeg,
    /// Direction of the last horizontal leg, +1 east, -1 west.
    sweep_sign: f64,
    leg_distance: f64,
    lane: usize,
    lane_count: usize,
    lanes_started: usize,
    reference: Vec3,
    velocity: Vec3,
}

/// Builds the scan plan and the initial line offsets.
pub fn scan_setup(
    n: usize,
    bounds: &AreaBounds,
    lane_spacing: f64,
    speed: f64,
    formation: ScanFormation,
) -> Result<(ScanPlan, Vec<Vec3>), ExploreError> {
    if n < 2 {
        return Err(ExploreError::TooFewAgents(n));
    }
    let width = (n - 1) as f64 * lane_spacing;
    if width > bounds.height() {
        return Err(ExploreError::FormationTooWide {
            width,
            extent: bounds.height(),
        });
    }
    let band = n as f64 * lane_spacing;
    let plan = ScanPlan {
        n,
        leader: n.div_ceil(2) - 1,
        lane_spacing,
        speed,
        bounds: *bounds,
        formation,
        leg: ScanLeg::Assemble,
        sweep_sign: 1.0,
        leg_distance: 0.0,
        lane: 0,
        lane_count: (bounds.height() / band).ceil() as usize,
        lanes_started: 0,
        reference: Vec3::zeros(),
        velocity: Vec3::zeros(),
    };
    let offsets = plan.offsets();
    Ok((plan, offsets))
}

impl ScanPlan {
    pub fn leader(&self) -> usize {
        self.leader
    }

    pub fn leg(&self) -> ScanLeg {
        self.leg
    }

    pub fn lane(&self) -> usize {
        self.lane
    }

    pub fn lane_count(&self) -> usize {
        self.lane_count
    }

    /// Horizontal legs begun so far.
    pub fn lanes_started(&self) -> usize {
        self.lanes_started
    }

    pub fn leg_distance(&self) -> f64 {
        self.leg_distance
    }

    /// North-step length, `n * lane_spacing`.
    pub fn band(&self) -> f64 {
        self.n as f64 * self.lane_spacing
    }

    /// `delta_i = (0, -(l - i) dy, 0)` in one-based indices; the wedge
    /// variant trails the wings behind the leader along the sweep direction.
    pub fn offsets(&self) -> Vec<Vec3> {
        (0..self.n)
            .map(|k| {
                let rel = k as f64 - self.leader as f64;
                let back = match self.formation {
                    ScanFormation::Line => 0.0,
                    ScanFormation::Wedge => -self.sweep_sign * rel.abs() * self.lane_spacing / 2.0,
                };
                Vec3::new(back, rel * self.lane_spacing, 0.0)
            })
            .collect()
    }

    pub fn desired(&self) -> DesiredTrajectory {
        DesiredTrajectory {
            position: self.reference,
            velocity: self.velocity,
        }
    }

    /// Leader reference at the start of lane `j`.
    pub fn lane_start(&self, j: usize) -> Vec3 {
        let y = self.bounds.y_min
            + self.lane_spacing / 2.0
            + self.leader as f64 * self.lane_spacing
            + j as f64 * self.band();
        let x = if j.is_multiple_of(2) {
            self.bounds.x_min
        } else {
            self.bounds.x_max
        };
        Vec3::new(x, y, self.bounds.z_f)
    }

    /// Ends assembly: the reference starts at the leader's position and heads
    /// for the first lane.
    pub fn begin_transit(&mut self, leader_position: Vec3) {
        self.reference = leader_position;
        self.reference.z = self.bounds.z_f;
        self.leg = ScanLeg::Transit;
        self.leg_distance = 0.0;
        self.velocity = self.transit_velocity();
    }

    fn transit_velocity(&self) -> Vec3 {
        let d = self.lane_start(0) - self.reference;
        let dist = d.norm();
        if dist > 0.0 {
            d * (self.speed / dist)
        } else {
            Vec3::zeros()
        }
    }

    /// Reference velocity for the current leg.
    pub fn scan_leader_velocity(&self) -> Vec3 {
        self.velocity
    }

    /// Moves the reference along the plan for `dt` seconds, switching legs at
    /// their end points. Leg ends are hit exactly; leftover time within the
    /// call is discarded.
    pub fn advance(&mut self, dt: f64) -> Result<(), ExploreError> {
        let step = self.speed * dt;
        match self.leg {
            ScanLeg::Assemble => {}
            ScanLeg::Transit => {
                let target = self.lane_start(0);
                let remaining = (target - self.reference).norm();
                if remaining <= step {
                    self.reference = target;
                    self.start_horizontal(1.0);
                } else {
                    self.reference += self.velocity * dt;
                    self.leg_distance += step;
                    self.velocity = self.transit_velocity();
                }
            }
            ScanLeg::East | ScanLeg::West => {
                let end = if self.leg == ScanLeg::East {
                    self.bounds.x_max
                } else {
                    self.bounds.x_min
                };
                let remaining = (end - self.reference.x).abs();
                if remaining <= step {
                    self.reference.x = end;
                    if self.lane + 1 >= self.lane_count {
                        self.velocity = Vec3::zeros();
                        return Err(ExploreError::Exhausted);
                    }
                    self.leg = ScanLeg::North;
                    self.leg_distance = 0.0;
                    self.velocity = Vec3::new(0.0, self.speed, 0.0);
                } else {
                    self.reference.x += self.sweep_sign * step;
                    self.leg_distance += step;
                }
            }
            ScanLeg::North => {
                let remaining = self.band() - self.leg_distance;
                if remaining <= step {
                    self.lane += 1;
                    self.reference = self.lane_start(self.lane);
                    self.start_horizontal(-self.sweep_sign);
                } else {
                    self.reference.y += step;
                    self.leg_distance += step;
                }
            }
        }
        Ok(())
    }

    fn start_horizontal(&mut self, sign: f64) {
        self.sweep_sign = sign;
        self.leg = if sign > 0.0 { ScanLeg::East } else { ScanLeg::West };
        self.leg_distance = 0.0;
        self.lanes_started += 1;
        self.velocity = Vec3::new(sign * self.speed, 0.0, 0.0);
    }
}

// ---------------------------------------------------------------------------
// Random walk and Brownian motion

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomWalkParams {
    /// Half-width of the per-step heading increment, radians.
    pub theta_max: f64,
    /// Half-angle of the re-entry cone about the inward normal, radians.
    pub theta_reentry: f64,
    /// Separation at or below which two agents repel, metres.
    pub safety_distance: f64,
}

impl Default for RandomWalkParams {
    fn default() -> Self {
        Self {
            theta_max: 10f64.to_radians(),
            theta_reentry: 75f64.to_radians(),
            safety_distance: 5.0,
        }
    }
}

/// `theta + nu`, `nu ~ U(-theta_max, theta_max)`, wrapped to `[0, 2 pi)`.
pub fn random_walk_heading(theta_prev: f64, params: &RandomWalkParams, rng: &mut Stream) -> f64 {
    if params.theta_max <= 0.0 {
        return wrap_angle(theta_prev);
    }
    let nu = rng.random_range(-params.theta_max..params.theta_max);
    wrap_angle(theta_prev + nu)
}

/// Heading drawn uniformly from the cone of half-angle `theta_reentry`
/// about the inward normal: `theta_in + (nu / theta_max) theta_reentry`.
pub fn boundary_reentry_heading(theta_in: f64, params: &RandomWalkParams, rng: &mut Stream) -> f64 {
    let scale = if params.theta_max > 0.0 {
        let nu = rng.random_range(-params.theta_max..=params.theta_max);
        nu / params.theta_max
    } else {
        0.0
    };
    wrap_angle(theta_in + scale * params.theta_reentry)
}

/// Repulsion headings for a pair closer than `safety_distance`: agent `i`
/// heads directly away from `j` and `j` the opposite way. Coincident agents
/// get a random axis.
pub fn collision_repulsion(pi: &Vec3, pj: &Vec3, safety_distance: f64, rng: &mut Stream) -> Option<(f64, f64)> {
    if (pi - pj).norm() > safety_distance {
        return None;
    }
    let (dx, dy) = (pi.x - pj.x, pi.y - pj.y);
    let theta_i = if dx == 0.0 && dy == 0.0 {
        rng.random_range(0.0..TAU)
    } else {
        wrap_angle(dy.atan2(dx))
    };
    Some((theta_i, wrap_angle(theta_i + PI)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HeadingEvent {
    None,
    /// Repulsion heading already computed for this agent.
    Collision(f64),
    /// Inward normal of the crossed face.
    Boundary(f64),
}

/// Brownian motion keeps a straight line until an event intervenes.
pub fn brownian_heading(current: f64, event: HeadingEvent, params: &RandomWalkParams, rng: &mut Stream) -> f64 {
    match event {
        HeadingEvent::None => current,
        HeadingEvent::Collision(theta) => theta,
        HeadingEvent::Boundary(theta_in) => boundary_reentry_heading(theta_in, params, rng),
    }
}

/// Walker kinematics for one engine step of the random strategies.
pub struct WalkerStep<'a> {
    pub strategy: Strategy,
    pub params: &'a RandomWalkParams,
    pub bounds: &'a AreaBounds,
    pub speed: f64,
    pub dt: f64,
    pub substeps: usize,
}

impl WalkerStep<'_> {
    /// Applies the heading increment (random walk only), then integrates in
    /// substeps with collision repulsion evaluated on each substep snapshot
    /// and boundary re-entry after each move. Returns the number of heading
    /// changes.
    pub fn run(
        &self,
        positions: &mut [Vec3],
        headings: &mut [f64],
        agent_rngs: &mut [Stream],
        event_rng: &mut Stream,
    ) -> usize {
        let n = positions.len();
        let mut changes = 0;
        let set = |h: &mut f64, v: f64, changes: &mut usize| {
            if h.to_bits() != v.to_bits() {
                *changes += 1;
            }
            *h = v;
        };
        if self.strategy == Strategy::RandomWalk {
            for i in 0..n {
                let next = random_walk_heading(headings[i], self.params, &mut agent_rngs[i]);
                set(&mut headings[i], next, &mut changes);
            }
        }
        let sub_dt = self.dt / self.substeps.max(1) as f64;
        for _ in 0..self.substeps.max(1) {
            let snapshot = positions.to_vec();
            for i in 0..n {
                for j in (i + 1)..n {
                    if let Some((ti, tj)) =
                        collision_repulsion(&snapshot[i], &snapshot[j], self.params.safety_distance, event_rng)
                    {
                        let hi = brownian_heading(headings[i], HeadingEvent::Collision(ti), self.params, event_rng);
                        let hj = brownian_heading(headings[j], HeadingEvent::Collision(tj), self.params, event_rng);
                        set(&mut headings[i], hi, &mut changes);
                        set(&mut headings[j], hj, &mut changes);
                    }
                }
            }
            for i in 0..n {
                let (s, c) = headings[i].sin_cos();
                let moved = snapshot[i] + Vec3::new(c, s, 0.0) * (self.speed * sub_dt);
                let (clamped, normal) = self.bounds.clamp(&moved);
                positions[i] = clamped;
                if let Some(theta_in) = normal {
                    let h = brownian_heading(
                        headings[i],
                        HeadingEvent::Boundary(theta_in),
                        self.params,
                        &mut agent_rngs[i],
                    );
                    set(&mut headings[i], h, &mut changes);
                }
            }
        }
        changes
    }
}

// ---------------------------------------------------------------------------
// Detection

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionEvent {
    pub agent: usize,
    pub position: Vec3,
    pub reading: f64,
    pub time: f64,
}

/// Lowest-id agent whose reading exceeds `threshold`.
pub fn detection_check(positions: &[Vec3], readings: &[f64], threshold: f64, time: f64) -> Option<DetectionEvent> {
    readings
        .iter()
        .position(|r| *r > threshold)
        .map(|agent| DetectionEvent {
            agent,
            position: positions[agent],
            reading: readings[agent],
            time,
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use approx::assert_relative_eq;

    fn area() -> AreaBounds {
        AreaBounds::square(880.0, 3.0)
    }

    #[test]
    fn scan_offsets_n4_and_n2() {
        let (plan, d) = scan_setup(4, &area(), 20.0, 3.0, ScanFormation::Line).unwrap();
        assert_eq!(plan.leader(), 1);
        assert_eq!(
            d,
            vec![
                Vec3::new(0.0, -20.0, 0.0),
                Vec3::zeros(),
                Vec3::new(0.0, 20.0, 0.0),
                Vec3::new(0.0, 40.0, 0.0)
            ]
        );
        let (plan, d) = scan_setup(2, &area(), 20.0, 3.0, ScanFormation::Line).unwrap();
        assert_eq!(plan.leader(), 0);
        assert_eq!(d, vec![Vec3::zeros(), Vec3::new(0.0, 20.0, 0.0)]);
    }

    #[test]
    fn scan_rejects_bad_sizes() {
        assert_eq!(
            scan_setup(1, &area(), 20.0, 3.0, ScanFormation::Line).unwrap_err(),
            ExploreError::TooFewAgents(1)
        );
        assert!(matches!(
            scan_setup(50, &area(), 20.0, 3.0, ScanFormation::Line),
            Err(ExploreError::FormationTooWide { .. })
        ));
    }

    #[test]
    fn wedge_trails_behind() {
        let (plan, d) = scan_setup(5, &area(), 20.0, 3.0, ScanFormation::Wedge).unwrap();
        assert_eq!(plan.leader(), 2);
        assert_eq!(d[2], Vec3::zeros());
        assert_eq!(d[0], Vec3::new(-20.0, -40.0, 0.0));
        assert_eq!(d[3], Vec3::new(-10.0, 20.0, 0.0));
    }

    fn run_to_exhaustion(n: usize) -> (ScanPlan, Vec<Vec3>, usize) {
        let (mut plan, _) = scan_setup(n, &area(), 20.0, 3.0, ScanFormation::Line).unwrap();
        plan.begin_transit(Vec3::new(0.0, 0.0, 3.0));
        let mut trace = vec![];
        let mut north_lengths = vec![];
        let mut steps = 0;
        loop {
            let before = plan.leg();
            let r = plan.advance(1.0);
            steps += 1;
            trace.push(plan.desired().position);
            if before == ScanLeg::North && plan.leg() != ScanLeg::North {
                north_lengths.push(plan.band());
            }
            if r.is_err() {
                break;
            }
            assert!(steps < 1_000_000);
        }
        assert!(north_lengths.iter().all(|l| *l == n as f64 * 20.0));
        (plan, trace, steps)
    }

    #[test]
    fn mid_leg_and_switch_velocities() {
        let (mut plan, _) = scan_setup(4, &area(), 20.0, 3.0, ScanFormation::Line).unwrap();
        plan.begin_transit(plan.lane_start(0));
        plan.advance(1.0).unwrap();
        assert_eq!(plan.leg(), ScanLeg::East);
        plan.advance(1.0).unwrap();
        assert_eq!(plan.scan_leader_velocity(), Vec3::new(3.0, 0.0, 0.0));
        while plan.leg() == ScanLeg::East {
            plan.advance(1.0).unwrap();
        }
        assert_eq!(plan.scan_leader_velocity(), Vec3::new(0.0, 3.0, 0.0));
        let y0 = plan.desired().position.y;
        while plan.leg() == ScanLeg::North {
            plan.advance(1.0).unwrap();
        }
        assert_relative_eq!(plan.desired().position.y - y0, 80.0, epsilon = 1e-9);
        assert_eq!(plan.scan_leader_velocity(), Vec3::new(-3.0, 0.0, 0.0));
    }

    #[test]
    fn full_scan_lane_count() {
        let (plan, trace, _) = run_to_exhaustion(4);
        // ceil(880 / (4 * 20)) = 11 horizontal lanes
        assert_eq!(plan.lane_count(), 11);
        assert_eq!(plan.lanes_started(), 11);
        assert!(trace.iter().all(|p| area().contains(p)));
    }

    #[test]
    fn scan_bands_cover_the_area() {
        for n in [2usize, 3, 4, 7, 8] {
            let (plan, _, _) = run_to_exhaustion(n);
            // each lane j covers [y_min + j n dy, y_min + (j + 1) n dy]
            let covered = plan.lanes_started() as f64 * plan.band();
            assert!(covered >= area().height(), "n = {n}");
            assert!(covered - plan.band() < area().height(), "n = {n}");
        }
    }

    #[test]
    fn walk_increment_zero_width() {
        let p = RandomWalkParams {
            theta_max: 0.0,
            ..Default::default()
        };
        let mut r = rng::stream(1, "t");
        assert_eq!(random_walk_heading(1.25, &p, &mut r), 1.25);
    }

    #[test]
    fn walk_is_reproducible() {
        let p = RandomWalkParams::default();
        let mut a = rng::stream(5, "agent");
        let mut b = rng::stream(5, "agent");
        let mut ha = 0.3;
        let mut hb = 0.3;
        for _ in 0..100 {
            ha = random_walk_heading(ha, &p, &mut a);
            hb = random_walk_heading(hb, &p, &mut b);
            assert_eq!(ha, hb);
        }
    }

    #[test]
    fn reentry_cone_is_inward() {
        let p = RandomWalkParams::default();
        let mut r = rng::stream(2, "wall");
        for _ in 0..10_000 {
            let h = boundary_reentry_heading(0.0, &p, &mut r);
            assert!(h.cos() > 0.0);
            let dev = if h > PI { h - TAU } else { h };
            assert!(dev.abs() <= p.theta_reentry + 1e-12);
        }
        let zero = RandomWalkParams { theta_max: 0.0, ..p };
        assert_eq!(boundary_reentry_heading(PI / 2.0, &zero, &mut r), PI / 2.0);
    }

    #[test]
    fn repulsion_cases() {
        let mut r = rng::stream(0, "c");
        let (ti, tj) = collision_repulsion(&Vec3::new(1.0, 0.0, 3.0), &Vec3::new(0.0, 0.0, 3.0), 2.0, &mut r).unwrap();
        assert_eq!(ti, 0.0);
        assert_relative_eq!(tj, PI);
        assert!(collision_repulsion(&Vec3::new(2.1, 0.0, 3.0), &Vec3::new(0.0, 0.0, 3.0), 2.0, &mut r).is_none());
        let (ti, tj) = collision_repulsion(&Vec3::zeros(), &Vec3::zeros(), 2.0, &mut r).unwrap();
        assert!((0.0..TAU).contains(&ti));
        assert_relative_eq!(wrap_angle(tj - ti), PI, epsilon = 1e-12);
    }

    #[test]
    fn clamp_reports_inward_normals() {
        let a = area();
        assert_eq!(a.clamp(&Vec3::new(0.0, 0.0, 3.0)).1, None);
        assert_eq!(a.clamp(&Vec3::new(-500.0, 0.0, 3.0)).1, Some(0.0));
        assert_eq!(a.clamp(&Vec3::new(500.0, 0.0, 3.0)).1, Some(PI));
        assert_eq!(a.clamp(&Vec3::new(0.0, -500.0, 3.0)).1, Some(PI / 2.0));
        assert_relative_eq!(a.clamp(&Vec3::new(-500.0, -500.0, 3.0)).1.unwrap(), PI / 4.0);
        assert_eq!(a.clamp(&Vec3::new(-500.0, 900.0, 3.0)).0, Vec3::new(-440.0, 440.0, 3.0));
    }

    #[test]
    fn detection_lowest_id_wins() {
        let pos = vec![Vec3::zeros(); 3];
        assert!(detection_check(&pos, &[0.0, 0.0, 0.0], 30.0, 0.0).is_none());
        let ev = detection_check(&pos, &[10.0, 31.0, 40.0], 30.0, 4.0).unwrap();
        assert_eq!(ev.agent, 1);
        assert_eq!(ev.reading, 31.0);
        assert_eq!(ev.time, 4.0);
        let ev = detection_check(&pos, &[40.0, 10.0, 31.0], 30.0, 0.0).unwrap();
        assert_eq!(ev.agent, 0);
        // threshold is strict
        assert!(detection_check(&pos, &[30.0, 30.0, 30.0], 30.0, 0.0).is_none());
    }
}
