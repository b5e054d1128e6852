//! Agent kinematics and the graph-consensus control laws.
//!
//! Each agent is a first-order integrator `x' = u` whose input is clamped to
//! the maximum speed. Formation behaviours are built from three laws over a
//! [`FormationGraph`]: the offset consensus term, the leader tracking law and
//! the follower law.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::SwarmError;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Leader,
    Follower,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub id: usize,
    pub position: Vec3,
    /// Heading used by the random strategies, radians.
    pub heading: f64,
    pub role: Role,
    pub last_reading: f64,
}

impl AgentState {
    pub fn new(id: usize, position: Vec3, heading: f64) -> Self {
        Self {
            id,
            position,
            heading,
            role: Role::Follower,
            last_reading: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Complete,
    Path,
    Ring,
}

impl std::str::FromStr for Topology {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "complete" => Ok(Topology::Complete),
            "path" => Ok(Topology::Path),
            "ring" => Ok(Topology::Ring),
            other => Err(format!("unknown topology `{other}`")),
        }
    }
}

impl Topology {
    pub fn adjacency(self, n: usize) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(n, n);
        match self {
            Topology::Complete => {
                for i in 0..n {
                    for j in 0..n {
                        if i != j {
                            a[(i, j)] = 1.0;
                        }
                    }
                }
            }
            Topology::Path | Topology::Ring => {
                for i in 0..n.saturating_sub(1) {
                    a[(i, i + 1)] = 1.0;
                    a[(i + 1, i)] = 1.0;
                }
                if self == Topology::Ring && n > 2 {
                    a[(0, n - 1)] = 1.0;
                    a[(n - 1, 0)] = 1.0;
                }
            }
        }
        a
    }
}

/// Communication graph plus the formation offsets it maintains.
#[derive(Debug, Clone, PartialEq)]
pub struct FormationGraph {
    adjacency: DMatrix<f64>,
    laplacian: DMatrix<f64>,
    offsets: Vec<Vec3>,
}

impl FormationGraph {
    pub fn new(adjacency: DMatrix<f64>, offsets: Vec<Vec3>) -> Result<Self, SwarmError> {
        let n = adjacency.nrows();
        if n < 2 {
            return Err(SwarmError::TooFewAgents(n));
        }
        if adjacency.ncols() != n || offsets.len() != n {
            return Err(SwarmError::Dimension(format!(
                "adjacency {}x{}, {} offsets",
                n,
                adjacency.ncols(),
                offsets.len()
            )));
        }
        for i in 0..n {
            if adjacency[(i, i)] != 0.0 {
                return Err(SwarmError::Dimension(format!("self loop on agent {i}")));
            }
            for j in 0..n {
                let w = adjacency[(i, j)];
                if !(w >= 0.0) || w != adjacency[(j, i)] {
                    return Err(SwarmError::Dimension(format!(
                        "adjacency must be symmetric and nonnegative at ({i}, {j})"
                    )));
                }
            }
        }
        if !is_connected(&adjacency) {
            return Err(SwarmError::Disconnected);
        }
        let degree = DMatrix::from_diagonal(&adjacency.column_sum());
        let laplacian = degree - &adjacency;
        Ok(Self {
            adjacency,
            laplacian,
            offsets,
        })
    }

    pub fn with_topology(topology: Topology, offsets: Vec<Vec3>) -> Result<Self, SwarmError> {
        Self::new(topology.adjacency(offsets.len()), offsets)
    }

    pub fn n(&self) -> usize {
        self.offsets.len()
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn laplacian(&self) -> &DMatrix<f64> {
        &self.laplacian
    }

    pub fn offsets(&self) -> &[Vec3] {
        &self.offsets
    }

    pub fn set_offsets(&mut self, offsets: Vec<Vec3>) -> Result<(), SwarmError> {
        if offsets.len() != self.n() {
            return Err(SwarmError::Dimension(format!(
                "{} offsets for {} agents",
                offsets.len(),
                self.n()
            )));
        }
        self.offsets = offsets;
        Ok(())
    }

    pub fn degree(&self, i: usize) -> f64 {
        self.laplacian[(i, i)]
    }

    /// Largest deviation of any connected pair from its prescribed relative
    /// offset, metres.
    pub fn formation_error(&self, positions: &[Vec3]) -> f64 {
        let n = self.n();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                if self.adjacency[(i, j)] > 0.0 {
                    let e = (positions[i] - positions[j]) - (self.offsets[i] - self.offsets[j]);
                    worst = worst.max(e.norm());
                }
            }
        }
        worst
    }
}

fn is_connected(a: &DMatrix<f64>) -> bool {
    let n = a.nrows();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(i) = queue.pop_front() {
        for j in 0..n {
            if a[(i, j)] > 0.0 && !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Reference point and velocity for a tracking agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesiredTrajectory {
    pub position: Vec3,
    pub velocity: Vec3,
}

impl DesiredTrajectory {
    pub fn fixed(position: Vec3) -> Self {
        Self {
            position,
            velocity: Vec3::zeros(),
        }
    }
}

/// Rescales `u` onto the sphere of radius `v_max` when it is longer.
pub fn clamp_speed(u: &Vec3, v_max: f64) -> Vec3 {
    let norm = u.norm();
    if norm > v_max {
        u * (v_max / norm)
    } else {
        *u
    }
}

/// One explicit Euler step of the integrator with the speed clamp.
pub fn step_agent(position: &Vec3, u: &Vec3, dt: f64, v_max: f64) -> Vec3 {
    position + clamp_speed(u, v_max) * dt
}

/// Offset consensus input, `-sum_j a_ij [(x_i - x_j) - (d_i - d_j)]`,
/// i.e. the Laplacian form with off-diagonal `l_ij = -a_ij` negated so the
/// agents contract onto the formation.
pub fn offset_consensus(graph: &FormationGraph, positions: &[Vec3], i: usize) -> Vec3 {
    let a = graph.adjacency();
    let d = graph.offsets();
    let mut acc = Vec3::zeros();
    for j in 0..graph.n() {
        let w = a[(i, j)];
        if w != 0.0 && j != i {
            acc -= w * ((positions[i] - positions[j]) - (d[i] - d[j]));
        }
    }
    acc
}

/// Leader law: feed-forward of the desired velocity, proportional pull onto
/// `traj + offset`, and the consensus coupling.
pub fn leader_input(graph: &FormationGraph, positions: &[Vec3], i: usize, traj: &DesiredTrajectory, gain: f64) -> Vec3 {
    traj.velocity - gain * (positions[i] - traj.position - graph.offsets()[i]) + offset_consensus(graph, positions, i)
}

/// Follower law: degree-normalised sum of neighbour velocities plus the
/// consensus term. `velocities` are the neighbours' last realised velocities.
pub fn follower_input(
    graph: &FormationGraph,
    velocities: &[Vec3],
    positions: &[Vec3],
    k: usize,
) -> Result<Vec3, SwarmError> {
    let deg = graph.degree(k);
    if !(deg > 0.0) {
        return Err(SwarmError::IsolatedAgent(k));
    }
    let a = graph.adjacency();
    let mut feed = Vec3::zeros();
    for j in 0..graph.n() {
        if a[(k, j)] > 0.0 {
            feed += a[(k, j)] * velocities[j];
        }
    }
    Ok((feed + offset_consensus(graph, positions, k)) / deg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn zeros(n: usize) -> Vec<Vec3> {
        vec![Vec3::zeros(); n]
    }

    #[test]
    fn step_agent_cases() {
        let p = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(step_agent(&p, &Vec3::zeros(), 1.0, 3.0), p);
        assert_eq!(
            step_agent(&p, &Vec3::new(3.0, 0.0, 0.0), 1.0, 3.0),
            p + Vec3::new(3.0, 0.0, 0.0)
        );
        let d = step_agent(&Vec3::zeros(), &Vec3::new(6.0, 8.0, 0.0), 1.0, 3.0);
        assert_relative_eq!(d.norm(), 3.0, max_relative = 1e-15);
        assert_relative_eq!(d, Vec3::new(1.8, 2.4, 0.0), max_relative = 1e-15);
    }

    #[test]
    fn laplacian_rows_sum_to_zero() {
        for topo in [Topology::Complete, Topology::Path, Topology::Ring] {
            for n in 2..10 {
                let g = FormationGraph::with_topology(topo, zeros(n)).unwrap();
                for i in 0..n {
                    assert_eq!(g.laplacian().row(i).sum(), 0.0);
                }
            }
        }
    }

    #[test]
    fn disconnected_graph_rejected() {
        let mut a = DMatrix::zeros(4, 4);
        a[(0, 1)] = 1.0;
        a[(1, 0)] = 1.0;
        a[(2, 3)] = 1.0;
        a[(3, 2)] = 1.0;
        assert_eq!(FormationGraph::new(a, zeros(4)).unwrap_err(), SwarmError::Disconnected);
        assert_eq!(
            FormationGraph::with_topology(Topology::Complete, zeros(1)).unwrap_err(),
            SwarmError::TooFewAgents(1)
        );
    }

    #[test]
    fn two_agent_consensus_pulls_together() {
        let g = FormationGraph::with_topology(Topology::Complete, zeros(2)).unwrap();
        let pos = [Vec3::zeros(), Vec3::new(2.0, 0.0, 0.0)];
        assert_eq!(offset_consensus(&g, &pos, 0), Vec3::new(2.0, 0.0, 0.0));
        assert_eq!(offset_consensus(&g, &pos, 1), Vec3::new(-2.0, 0.0, 0.0));
    }

    #[test]
    fn formation_fixed_point() {
        let offsets = vec![Vec3::new(0.0, -20.0, 0.0), Vec3::zeros(), Vec3::new(0.0, 20.0, 0.0)];
        let g = FormationGraph::with_topology(Topology::Path, offsets.clone()).unwrap();
        let base = Vec3::new(17.0, -4.0, 3.0);
        let pos: Vec<Vec3> = offsets.iter().map(|d| base + d).collect();
        for i in 0..3 {
            assert_eq!(offset_consensus(&g, &pos, i), Vec3::zeros());
        }
        assert_eq!(g.formation_error(&pos), 0.0);
    }

    #[test]
    fn leader_input_cases() {
        let offsets = vec![Vec3::zeros(), Vec3::new(0.0, 20.0, 0.0)];
        let g = FormationGraph::with_topology(Topology::Complete, offsets).unwrap();
        let traj = DesiredTrajectory {
            position: Vec3::new(5.0, 5.0, 3.0),
            velocity: Vec3::new(3.0, 0.0, 0.0),
        };
        let pos = vec![traj.position, traj.position + Vec3::new(0.0, 20.0, 0.0)];
        assert_eq!(leader_input(&g, &pos, 0, &traj, 1.0), traj.velocity);

        // static target, formation exact, leader displaced by e
        let e = Vec3::new(1.0, -2.0, 0.0);
        let still = DesiredTrajectory::fixed(traj.position);
        let pos = vec![traj.position + e, traj.position + e + Vec3::new(0.0, 20.0, 0.0)];
        assert_relative_eq!(leader_input(&g, &pos, 0, &still, 0.7), -0.7 * e);
    }

    #[test]
    fn follower_input_cases() {
        let offsets = vec![Vec3::zeros(), Vec3::new(0.0, 20.0, 0.0)];
        let g = FormationGraph::with_topology(Topology::Complete, offsets.clone()).unwrap();
        let pos: Vec<Vec3> = offsets.clone();
        let u = follower_input(&g, &zeros(2), &pos, 1).unwrap();
        assert_eq!(u, Vec3::zeros());
        let vel = vec![Vec3::new(1.0, 0.0, 0.0), Vec3::zeros()];
        assert_eq!(follower_input(&g, &vel, &pos, 1).unwrap(), Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn topology_parse() {
        assert_eq!("ring".parse::<Topology>().unwrap(), Topology::Ring);
        assert!("star".parse::<Topology>().is_err());
    }
}
