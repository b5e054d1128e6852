#![allow(dead_code)]

use rand::Rng;
use swarmloc::config::{SimConfig, SweepSpec, WindKind};
use swarmloc::exploration::Strategy;
use swarmloc::rng;
use swarmloc::swarm::{clamp_speed, offset_consensus, FormationGraph, Topology};
use swarmloc::Vec3;

/// Pure consensus dynamics `x' = u` with every agent on the offset law,
/// integrated with the engine's substep and speed clamp. Returns the first
/// time the formation error drops below `tol`, if within `horizon`.
pub fn consensus_settle_time(
    topology: Topology,
    offsets: Vec<Vec3>,
    mut positions: Vec<Vec3>,
    tol: f64,
    horizon: f64,
) -> Option<f64> {
    let graph = FormationGraph::with_topology(topology, offsets).unwrap();
    let h = 0.1;
    let v_max = 3.0;
    let steps = (horizon / h).round() as usize;
    for k in 0..=steps {
        if graph.formation_error(&positions) < tol {
            return Some(k as f64 * h);
        }
        let u: Vec<Vec3> = (0..positions.len())
            .map(|i| clamp_speed(&offset_consensus(&graph, &positions, i), v_max))
            .collect();
        for (p, v) in positions.iter_mut().zip(&u) {
            *p += v * h;
        }
    }
    None
}

/// Random start within `spread` metres of each formation slot.
pub fn perturbed(offsets: &[Vec3], spread: f64, rng: &mut impl Rng) -> Vec<Vec3> {
    offsets
        .iter()
        .map(|d| {
            d + Vec3::new(
                rng.random_range(-spread..=spread),
                rng.random_range(-spread..=spread),
                rng.random_range(-spread..=spread),
            )
        })
        .collect()
}

/// Line along y with 20 m spacing centred on the middle agent.
pub fn line_offsets(n: usize) -> Vec<Vec3> {
    let l = n.div_ceil(2) - 1;
    (0..n)
        .map(|i| Vec3::new(0.0, 20.0 * (i as f64 - l as f64), 0.0))
        .collect()
}

/// The constant-wind desk sweep: three strategies, n in {2, 4, 8}, 20 runs
/// over 20 plume conditions per cell.
pub fn desk_spec(seed: u64) -> SweepSpec {
    SweepSpec {
        base: SimConfig {
            seed,
            ..SimConfig::default()
        },
        strategies: Strategy::ALL.to_vec(),
        n_values: vec![2, 4, 8],
        scenarios: vec![WindKind::Constant],
        m_s: 20,
        m_w: 20,
        ..SweepSpec::default()
    }
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Double-double arithmetic, enough for a ~30 digit logarithm oracle.
#[derive(Debug, Clone, Copy)]
pub struct Dd(pub f64, pub f64);

impl Dd {
    pub fn from(x: f64) -> Self {
        Dd(x, 0.0)
    }

    pub fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        Dd(s, (a - (s - bb)) + (b - bb))
    }

    pub fn add(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.0, o.0);
        let t = Dd::two_sum(self.1, o.1);
        let hi = Dd::two_sum(s.0, s.1 + t.0);
        Dd::two_sum(hi.0, hi.1 + t.1)
    }

    pub fn neg(self) -> Dd {
        Dd(-self.0, -self.1)
    }

    pub fn mul(self, o: Dd) -> Dd {
        let p = self.0 * o.0;
        let e = self.0.mul_add(o.0, -p);
        let lo = e + self.0 * o.1 + self.1 * o.0;
        Dd::two_sum(p, lo)
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.0 / o.0;
        let r = self.add(o.mul(Dd::from(q1)).neg());
        let q2 = r.0 / o.0;
        let r = r.add(o.mul(Dd::from(q2)).neg());
        let q3 = r.0 / o.0;
        Dd::two_sum(q1, q2).add(Dd::from(q3))
    }

    pub fn to_f64(self) -> f64 {
        self.0 + self.1
    }
}

/// `ln(1 - q)` for `0 < q <= 0.5` by its Taylor series in double-double.
pub fn dd_ln1m(q: Dd) -> Dd {
    let mut acc = Dd::from(0.0);
    let mut pow = q;
    for k in 1..400 {
        let term = pow.div(Dd::from(k as f64));
        acc = acc.add(term.neg());
        if term.0.abs() < 1e-34 {
            break;
        }
        pow = pow.mul(q);
    }
    acc
}

/// 2 pi to double-double precision.
pub const TAU_DD: Dd = Dd(std::f64::consts::TAU, 2.4492935982947064e-16);

/// Spiral coefficient evaluated in double-double.
pub fn spiral_coeff_oracle(n: usize, r: f64, gamma: f64, rho: f64) -> f64 {
    let q = Dd::from(gamma).mul(Dd::from(rho)).div(Dd::from(r));
    Dd::from((n - 1) as f64).mul(dd_ln1m(q)).div(TAU_DD).to_f64()
}

/// Spiral target with the radius written as the contraction ratio raised to
/// the number of slot pitches swept, exponent and angle in double-double.
pub fn spiral_target_oracle(leader: &Vec3, n: usize, r: f64, gamma: f64, rho: f64, slot: f64, beta: f64) -> Vec3 {
    let q = Dd::from(gamma).mul(Dd::from(rho)).div(Dd::from(r));
    let pitches = Dd::from(beta).mul(Dd::from((n - 1) as f64)).div(TAU_DD);
    let e = pitches.mul(dd_ln1m(q));
    let radius = r * e.0.exp() * (1.0 + e.1);
    let psi = Dd::two_sum(slot, beta);
    let (s, c) = psi.0.sin_cos();
    let (cos, sin) = (c - s * psi.1, s + c * psi.1);
    Vec3::new(leader.x + radius * cos, leader.y + radius * sin, leader.z)
}

pub fn radial_config(seed: u64, strategy: Strategy, n: usize) -> SimConfig {
    let mut s = rng::stream(seed, "radial-source");
    SimConfig {
        seed,
        strategy,
        n,
        field: swarmloc::config::FieldKind::Radial,
        source_xy: [s.random_range(-300.0..=300.0), s.random_range(-300.0..=300.0)],
        ..SimConfig::default()
    }
}
