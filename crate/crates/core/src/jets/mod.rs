//! Particle-level events to the five-feature dijet representation.
//!
//! Particles are clustered with anti-kt, the two leading jets (by pt) give
//! `(m_jj, m_j1, m_j1 − m_j2, τ21_1, τ21_2)`.

mod cluster;
mod features;
mod substructure;

use std::f64::consts::PI;
use std::ops::Add;

use crate::error::{Error, Result};

pub use cluster::{cluster_antikt, exclusive_kt_axes};
pub use features::{
    extract_features, read_particle_events, EventFeatures, ParticleEvents, RejectReason, DEFAULT_ETA_MAX,
    DEFAULT_RADIUS,
};
pub use substructure::{nsubjettiness, tau21};

/// Wraps an angle into `[−π, π)`.
pub fn wrap_phi(phi: f64) -> f64 {
    let mut r = phi - 2.0 * PI * ((phi + PI) / (2.0 * PI)).floor();
    if r >= PI {
        r -= 2.0 * PI;
    }
    if r < -PI {
        r += 2.0 * PI;
    }
    r
}

/// `Δη² + Δφ²` with the azimuthal difference wrapped.
pub fn delta_r2(eta1: f64, phi1: f64, eta2: f64, phi2: f64) -> f64 {
    let deta = eta1 - eta2;
    let dphi = wrap_phi(phi1 - phi2);
    deta * deta + dphi * dphi
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FourMomentum {
    pub e: f64,
    pub px: f64,
    pub py: f64,
    pub pz: f64,
}

impl FourMomentum {
    pub fn pt2(&self) -> f64 {
        self.px * self.px + self.py * self.py
    }

    pub fn pt(&self) -> f64 {
        self.pt2().sqrt()
    }

    /// Pseudorapidity; `±∞` along the beam, 0 for a null vector.
    pub fn eta(&self) -> f64 {
        let pt = self.pt();
        if pt == 0.0 {
            return match self.pz.partial_cmp(&0.0) {
                Some(std::cmp::Ordering::Greater) => f64::INFINITY,
                Some(std::cmp::Ordering::Less) => f64::NEG_INFINITY,
                _ => 0.0,
            };
        }
        (self.pz / pt).asinh()
    }

    pub fn phi(&self) -> f64 {
        wrap_phi(self.py.atan2(self.px))
    }

    /// Invariant mass, with small negative `m²` from rounding clipped to 0.
    pub fn mass(&self) -> f64 {
        let m2 = self.e * self.e - self.px * self.px - self.py * self.py - self.pz * self.pz;
        m2.max(0.0).sqrt()
    }
}

impl Add for FourMomentum {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            e: self.e + o.e,
            px: self.px + o.px,
            py: self.py + o.py,
            pz: self.pz + o.pz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub pt: f64,
    pub eta: f64,
    /// Always in `[−π, π)`.
    pub phi: f64,
    pub mass: f64,
}

impl Particle {
    pub fn new(pt: f64, eta: f64, phi: f64, mass: f64) -> Result<Self> {
        if ![pt, eta, phi, mass].iter().all(|v| v.is_finite()) {
            return Err(Error::input("particle coordinates must be finite"));
        }
        if pt < 0.0 || mass < 0.0 {
            return Err(Error::input(format!("negative pt or mass ({pt}, {mass})")));
        }
        Ok(Self {
            pt,
            eta,
            phi: wrap_phi(phi),
            mass,
        })
    }

    pub fn massless(pt: f64, eta: f64, phi: f64) -> Result<Self> {
        Self::new(pt, eta, phi, 0.0)
    }

    pub fn four_momentum(&self) -> FourMomentum {
        let pz = self.pt * self.eta.sinh();
        FourMomentum {
            e: (self.pt * self.pt + pz * pz + self.mass * self.mass).sqrt(),
            px: self.pt * self.phi.cos(),
            py: self.pt * self.phi.sin(),
            pz,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub four_momentum: FourMomentum,
    pub constituents: Vec<Particle>,
    /// Positions of the constituents in the clustered input, ascending.
    pub indices: Vec<usize>,
    pub radius: f64,
    pub pt: f64,
    pub eta: f64,
    pub phi: f64,
    pub mass: f64,
}

impl Jet {
    pub(crate) fn new(four_momentum: FourMomentum, constituents: Vec<Particle>, indices: Vec<usize>, radius: f64) -> Self {
        Self {
            pt: four_momentum.pt(),
            eta: four_momentum.eta(),
            phi: four_momentum.phi(),
            mass: four_momentum.mass(),
            four_momentum,
            constituents,
            indices,
            radius,
        }
    }
}

/// Keeps jets with `|η| < eta_max`, preserving order.
pub fn filter_jets(jets: Vec<Jet>, eta_max: f64) -> Vec<Jet> {
    jets.into_iter().filter(|j| j.eta.abs() < eta_max).collect()
}

pub fn invariant_mass_pair(j1: &Jet, j2: &Jet) -> f64 {
    (j1.four_momentum + j2.four_momentum).mass()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(pt: f64, eta: f64, phi: f64) -> Jet {
        let p = Particle::massless(pt, eta, phi).unwrap();
        Jet::new(p.four_momentum(), vec![p], vec![0], 1.0)
    }

    #[test]
    fn phi_wraps_into_half_open_range() {
        assert_eq!(wrap_phi(PI), -PI);
        assert_eq!(wrap_phi(-PI), -PI);
        assert!((wrap_phi(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((wrap_phi(0.3 + 4.0 * PI) - 0.3).abs() < 1e-14);
        for k in -50..50 {
            let w = wrap_phi(k as f64 * 0.37);
            assert!((-PI..PI).contains(&w));
        }
    }

    #[test]
    fn back_to_back_pair_has_mass_200() {
        // M² = 2 pt₁ pt₂ (cosh Δη − cos Δφ) = 2·10⁴·2
        let m = invariant_mass_pair(&single(100.0, 0.0, 0.0), &single(100.0, 0.0, PI));
        assert!((m - 200.0).abs() < 1e-9, "{m}");
    }

    #[test]
    fn mass_matches_closed_form() {
        let (a, b) = (single(80.0, 0.7, -1.1), single(130.0, -0.4, 2.0));
        let expected = (2.0 * 80.0 * 130.0 * ((0.7f64 + 0.4).cosh() - (-1.1f64 - 2.0).cos())).sqrt();
        assert!((invariant_mass_pair(&a, &b) - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn collinear_pair_is_massless() {
        let j = single(100.0, 0.3, 0.2);
        assert!(invariant_mass_pair(&j, &j) < 1e-5);
    }

    #[test]
    fn eta_filter() {
        let jets = vec![single(10.0, 3.0, 0.0), single(9.0, 0.0, 0.0), single(8.0, -2.4, 1.0)];
        let kept = filter_jets(jets, 2.5);
        assert_eq!(kept.len(), 2);
        assert_eq!(kept[0].pt, 9.0);
    }

    #[test]
    fn particle_round_trips_coordinates() {
        let p = Particle::new(42.0, -1.3, 2.9, 1.5).unwrap();
        let q = p.four_momentum();
        assert!((q.pt() - 42.0).abs() < 1e-12);
        assert!((q.eta() + 1.3).abs() < 1e-12);
        assert!((q.phi() - 2.9).abs() < 1e-12);
        assert!((q.mass() - 1.5).abs() < 1e-9);
        assert!(Particle::new(-1.0, 0.0, 0.0, 0.0).is_err());
        assert!(Particle::new(1.0, f64::NAN, 0.0, 0.0).is_err());
    }
}
