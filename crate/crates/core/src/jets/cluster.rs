//! Sequential recombination with a cached geometric nearest neighbour per
//! pseudojet. The smallest pairwise distance `min(k_i, k_j) ΔR²_ij` is
//! always attained by some `i` and its geometric nearest neighbour, so only
//! those pairs need to be compared at each step.

use super::{delta_r2, FourMomentum, Jet, Particle};
use crate::error::{Error, Result};

struct PseudoJet {
    p: FourMomentum,
    k: f64,
    eta: f64,
    phi: f64,
    members: Vec<usize>,
}

#[derive(Clone, Copy)]
enum Measure {
    /// `k = pt⁻²`
    AntiKt,
    /// `k = pt²`
    Kt,
}

impl Measure {
    fn k(self, pt2: f64) -> f64 {
        match self {
            Measure::AntiKt => 1.0 / pt2,
            Measure::Kt => pt2,
        }
    }
}

struct Clustering {
    measure: Measure,
    inv_r2: f64,
    jets: Vec<PseudoJet>,
    alive: Vec<bool>,
    nn: Vec<Option<usize>>,
    nn_dr2: Vec<f64>,
}

enum Step {
    Merge(usize, usize),
    Beam(usize),
}

impl Clustering {
    fn new(particles: &[(usize, Particle)], measure: Measure, radius: f64) -> Self {
        let jets: Vec<PseudoJet> = particles
            .iter()
            .map(|&(idx, p)| PseudoJet {
                p: p.four_momentum(),
                k: measure.k(p.pt * p.pt),
                eta: p.eta,
                phi: p.phi,
                members: vec![idx],
            })
            .collect();
        let n = jets.len();
        let mut c = Self {
            measure,
            inv_r2: 1.0 / (radius * radius),
            jets,
            alive: vec![true; n],
            nn: vec![None; n],
            nn_dr2: vec![f64::INFINITY; n],
        };
        for i in 0..n {
            c.refresh_nn(i);
        }
        c
    }

    fn dr2(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.jets[i], &self.jets[j]);
        delta_r2(a.eta, a.phi, b.eta, b.phi)
    }

    fn refresh_nn(&mut self, i: usize) {
        let mut best = (None, f64::INFINITY);
        for j in 0..self.jets.len() {
            if j != i && self.alive[j] {
                let d = self.dr2(i, j);
                if d < best.1 {
                    best = (Some(j), d);
                }
            }
        }
        self.nn[i] = best.0;
        self.nn_dr2[i] = best.1;
    }

    fn pair_distance(&self, i: usize) -> f64 {
        match self.nn[i] {
            Some(j) => self.jets[i].k.min(self.jets[j].k) * self.nn_dr2[i] * self.inv_r2,
            None => f64::INFINITY,
        }
    }

    fn n_alive(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }

    /// Smallest distance among all pairs and, with `beam`, all `d_iB = k_i`.
    /// Lowest index wins ties, a pair wins a tie against the beam.
    fn next_step(&self, beam: bool) -> Option<Step> {
        let mut best: Option<(f64, Step)> = None;
        for i in (0..self.jets.len()).filter(|&i| self.alive[i]) {
            let dij = self.pair_distance(i);
            let cand = match self.nn[i] {
                Some(j) if !beam || dij <= self.jets[i].k => (dij, Step::Merge(i, j)),
                _ if beam => (self.jets[i].k, Step::Beam(i)),
                _ => continue,
            };
            if best.as_ref().is_none_or(|b| cand.0 < b.0) {
                best = Some(cand);
            }
        }
        best.map(|b| b.1)
    }

    fn merge(&mut self, i: usize, j: usize) {
        let (lo, hi) = (i.min(j), i.max(j));
        let p = self.jets[lo].p + self.jets[hi].p;
        let mut members = std::mem::take(&mut self.jets[lo].members);
        members.append(&mut self.jets[hi].members);
        members.sort_unstable();
        self.jets[lo] = PseudoJet {
            k: self.measure.k(p.pt2()),
            eta: p.eta(),
            phi: p.phi(),
            p,
            members,
        };
        self.alive[hi] = false;
        self.refresh_nn(lo);
        for l in 0..self.jets.len() {
            if !self.alive[l] || l == lo {
                continue;
            }
            if self.nn[l] == Some(lo) || self.nn[l] == Some(hi) {
                self.refresh_nn(l);
            } else {
                let d = self.dr2(l, lo);
                if d < self.nn_dr2[l] {
                    self.nn[l] = Some(lo);
                    self.nn_dr2[l] = d;
                }
            }
        }
    }

    fn remove(&mut self, i: usize) {
        self.alive[i] = false;
        for l in 0..self.jets.len() {
            if self.alive[l] && self.nn[l] == Some(i) {
                self.refresh_nn(l);
            }
        }
    }
}

/// Anti-kt clustering with E-scheme recombination; jets sorted by
/// descending pt. Zero-pt particles carry no transverse momentum and are
/// left out, so `Jet::indices` can skip positions.
pub fn cluster_antikt(particles: &[Particle], radius: f64) -> Result<Vec<Jet>> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::input(format!("jet radius must be positive, got {radius}")));
    }
    if particles.is_empty() {
        return Err(Error::input("cannot cluster an empty event"));
    }
    let kept: Vec<(usize, Particle)> = particles
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, p)| p.pt > 0.0)
        .collect();
    let mut c = Clustering::new(&kept, Measure::AntiKt, radius);
    let mut out = Vec::new();
    while let Some(step) = c.next_step(true) {
        match step {
            Step::Merge(i, j) => c.merge(i, j),
            Step::Beam(i) => {
                let pj = &c.jets[i];
                let constituents = pj.members.iter().map(|&m| particles[m]).collect();
                out.push(Jet::new(pj.p, constituents, pj.members.clone(), radius));
                c.remove(i);
            }
        }
    }
    out.sort_by(|a, b| b.four_momentum.pt2().total_cmp(&a.four_momentum.pt2()).then(a.indices[0].cmp(&b.indices[0])));
    Ok(out)
}

/// `(η, φ)` of the `n` subjets left when the constituents are merged
/// pairwise with the kt measure. `None` if there are fewer than `n`.
pub fn exclusive_kt_axes(constituents: &[Particle], n: usize) -> Option<Vec<(f64, f64)>> {
    if n == 0 || constituents.len() < n {
        return None;
    }
    let indexed: Vec<(usize, Particle)> = constituents.iter().copied().enumerate().collect();
    // the radius only rescales every distance
    let mut c = Clustering::new(&indexed, Measure::Kt, 1.0);
    while c.n_alive() > n {
        match c.next_step(false) {
            Some(Step::Merge(i, j)) => c.merge(i, j),
            _ => unreachable!("more than one pseudojet always has a pair"),
        }
    }
    Some(
        (0..c.jets.len())
            .filter(|&i| c.alive[i])
            .map(|i| (c.jets[i].eta, c.jets[i].phi))
            .collect(),
    )
}
