//! Straight-line reference implementations of the jet formulas: every
//! step recomputes every distance, nothing is cached.

#![allow(dead_code)]

use gisflow::jets::Particle;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleJet {
    /// `(E, px, py, pz)`
    pub p: [f64; 4],
    pub members: Vec<usize>,
}

fn four(p: &Particle) -> [f64; 4] {
    let (px, py) = (p.pt * p.phi.cos(), p.pt * p.phi.sin());
    let pz = p.pt * p.eta.sinh();
    [(p.pt * p.pt + pz * pz + p.mass * p.mass).sqrt(), px, py, pz]
}

fn add(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

fn pt2(p: [f64; 4]) -> f64 {
    p[1] * p[1] + p[2] * p[2]
}

fn eta_phi(p: [f64; 4]) -> (f64, f64) {
    let pt = pt2(p).sqrt();
    let eta = if pt == 0.0 { 0.0 } else { (p[3] / pt).asinh() };
    let mut phi = p[2].atan2(p[1]);
    if phi >= std::f64::consts::PI {
        phi -= 2.0 * std::f64::consts::PI;
    }
    (eta, phi)
}

fn dr2(a: (f64, f64), b: (f64, f64)) -> f64 {
    let mut dphi = (a.1 - b.1).abs();
    if dphi > std::f64::consts::PI {
        dphi = 2.0 * std::f64::consts::PI - dphi;
    }
    (a.0 - b.0).powi(2) + dphi * dphi
}

pub fn mass(p: [f64; 4]) -> f64 {
    (p[0] * p[0] - p[1] * p[1] - p[2] * p[2] - p[3] * p[3]).max(0.0).sqrt()
}

struct Proto {
    p: [f64; 4],
    coords: (f64, f64),
    members: Vec<usize>,
}

fn protos(particles: &[Particle]) -> Vec<Proto> {
    particles
        .iter()
        .enumerate()
        .filter(|(_, p)| p.pt > 0.0)
        .map(|(i, p)| Proto {
            p: four(p),
            coords: (p.eta, p.phi),
            members: vec![i],
        })
        .collect()
}

fn merge(list: &mut Vec<Proto>, i: usize, j: usize) {
    let b = list.remove(j.max(i));
    let a = &mut list[i.min(j)];
    a.p = add(a.p, b.p);
    a.coords = eta_phi(a.p);
    a.members.extend(b.members);
    a.members.sort_unstable();
}

/// O(n³) anti-kt.
pub fn brute_antikt(particles: &[Particle], r: f64) -> Vec<OracleJet> {
    let mut list = protos(particles);
    let mut jets = Vec::new();
    while !list.is_empty() {
        let mut best_pair = (f64::INFINITY, 0, 0);
        for i in 0..list.len() {
            for j in i + 1..list.len() {
                let kt = (1.0 / pt2(list[i].p)).min(1.0 / pt2(list[j].p));
                let d = kt * dr2(list[i].coords, list[j].coords) / (r * r);
                if d < best_pair.0 {
                    best_pair = (d, i, j);
                }
            }
        }
        let mut best_beam = (f64::INFINITY, 0);
        for (i, pj) in list.iter().enumerate() {
            let d = 1.0 / pt2(pj.p);
            if d < best_beam.0 {
                best_beam = (d, i);
            }
        }
        if best_pair.0 <= best_beam.0 {
            merge(&mut list, best_pair.1, best_pair.2);
        } else {
            let pj = list.remove(best_beam.1);
            jets.push(OracleJet {
                p: pj.p,
                members: pj.members,
            });
        }
    }
    jets.sort_by(|a, b| pt2(b.p).partial_cmp(&pt2(a.p)).unwrap());
    jets
}

/// Pairwise kt merging down to `n` axes.
pub fn brute_kt_axes(particles: &[Particle], n: usize) -> Vec<(f64, f64)> {
    let mut list: Vec<Proto> = particles
        .iter()
        .enumerate()
        .map(|(i, p)| Proto {
            p: four(p),
            coords: (p.eta, p.phi),
            members: vec![i],
        })
        .collect();
    while list.len() > n {
        let mut best = (f64::INFINITY, 0, 0);
        for i in 0..list.len() {
            for j in i + 1..list.len() {
                let d = pt2(list[i].p).min(pt2(list[j].p)) * dr2(list[i].coords, list[j].coords);
                if d < best.0 {
                    best = (d, i, j);
                }
            }
        }
        merge(&mut list, best.1, best.2);
    }
    list.iter().map(|p| p.coords).collect()
}

pub fn brute_tau(constituents: &[Particle], n: usize, r: f64) -> f64 {
    let axes = brute_kt_axes(constituents, n);
    let mut num = 0.0;
    let mut den = 0.0;
    for c in constituents {
        let d = axes
            .iter()
            .map(|&a| dr2(a, (c.eta, c.phi)).sqrt())
            .fold(f64::INFINITY, f64::min);
        num += c.pt * d;
        den += c.pt;
    }
    num / (r * den)
}

/// The whole feature pipeline, or `None` when the event is rejected.
pub fn brute_features(particles: &[Particle], r: f64, eta_max: f64) -> Option<[f64; 5]> {
    let jets: Vec<OracleJet> = brute_antikt(particles, r)
        .into_iter()
        .filter(|j| eta_phi(j.p).0.abs() < eta_max)
        .collect();
    if jets.len() < 2 || jets[0].members.len() < 2 || jets[1].members.len() < 2 {
        return None;
    }
    let consts = |j: &OracleJet| j.members.iter().map(|&m| particles[m]).collect::<Vec<_>>();
    let tau21 = |j: &OracleJet| {
        let c = consts(j);
        let t1 = brute_tau(&c, 1, r);
        if t1 == 0.0 {
            0.0
        } else {
            brute_tau(&c, 2, r) / t1
        }
    };
    let (m1, m2) = (mass(jets[0].p), mass(jets[1].p));
    Some([mass(add(jets[0].p, jets[1].p)), m1, m1 - m2, tau21(&jets[0]), tau21(&jets[1])])
}
