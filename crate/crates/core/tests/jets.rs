mod common;

use common::jet_oracle::{brute_antikt, brute_features};
use common::random_event;
use gisflow::jets::{
    cluster_antikt, extract_features, nsubjettiness, tau21, FourMomentum, Jet, Particle, RejectReason,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn total(parts: &[Particle]) -> FourMomentum {
    parts.iter().fold(FourMomentum::default(), |a, p| a + p.four_momentum())
}

fn as_array(p: FourMomentum) -> [f64; 4] {
    [p.e, p.px, p.py, p.pz]
}

#[test]
fn antikt_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for ev in 0..300 {
        let parts = random_event(&mut rng, 50);
        for r in [0.4, 1.0] {
            let fast = cluster_antikt(&parts, r).unwrap();
            let slow = brute_antikt(&parts, r);
            assert_eq!(fast.len(), slow.len(), "event {ev}, R {r}");
            for (f, s) in fast.iter().zip(&slow) {
                assert_eq!(f.indices, s.members, "event {ev}, R {r}");
                assert_eq!(as_array(f.four_momentum), s.p, "event {ev}, R {r}");
            }
        }
    }
}

#[test]
fn soft_particle_does_not_move_jets() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let parts = random_event(&mut rng, 30);
        let before = cluster_antikt(&parts, 1.0).unwrap();
        let mut with_soft = parts.clone();
        with_soft.push(Particle::massless(1e-9, 0.3, 1.0).unwrap());
        let after = cluster_antikt(&with_soft, 1.0).unwrap();
        let hard: Vec<&Jet> = after.iter().filter(|j| j.pt > 1e-6).collect();
        assert_eq!(hard.len(), before.len());
        for (a, b) in hard.iter().zip(&before) {
            for (x, y) in as_array(a.four_momentum).iter().zip(as_array(b.four_momentum)) {
                assert!((x - y).abs() <= 1e-6 * b.four_momentum.e, "{x} vs {y}");
            }
        }
    }
}

#[test]
fn phi_shift_by_two_pi_changes_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..50 {
        let parts = random_event(&mut rng, 40);
        let shifted: Vec<Particle> = parts
            .iter()
            .map(|p| Particle::new(p.pt, p.eta, p.phi + std::f64::consts::TAU, p.mass).unwrap())
            .collect();
        let a = cluster_antikt(&parts, 1.0).unwrap();
        let b = cluster_antikt(&shifted, 1.0).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.indices, y.indices);
            assert!((x.pt - y.pt).abs() < 1e-9 * x.pt);
            assert!((x.mass - y.mass).abs() < 1e-6 * x.four_momentum.e);
        }
    }
}

#[test]
fn clustering_conserves_four_momentum() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let parts = random_event(&mut rng, 50);
        let jets = cluster_antikt(&parts, 0.7).unwrap();
        let sum = jets.iter().fold(FourMomentum::default(), |a, j| a + j.four_momentum);
        let tot = total(&parts);
        for (x, y) in as_array(sum).iter().zip(as_array(tot)) {
            assert!((x - y).abs() <= 1e-9 * tot.e);
        }
        let n: usize = jets.iter().map(|j| j.constituents.len()).sum();
        assert_eq!(n, parts.len());
    }
}

#[test]
fn hand_built_dijet_event_matches_oracle() {
    let p = |pt, eta, phi| Particle::massless(pt, eta, phi).unwrap();
    let parts = [
        p(400.0, 0.2, 0.0),
        p(300.0, -0.1, 0.3),
        p(350.0, -0.3, 3.0),
        p(250.0, 0.1, -2.9),
    ];
    let f = extract_features(&parts, 1.0, 2.5).unwrap().unwrap().to_array();
    let o = brute_features(&parts, 1.0, 2.5).unwrap();
    for (a, b) in f.iter().zip(o) {
        assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{f:?} vs {o:?}");
    }
    // two constituents per jet: both are exact two-prong jets
    assert_eq!((f[3], f[4]), (0.0, 0.0));
    assert!(f[1] > 0.0 && f[0] > f[1]);
}

#[test]
fn random_events_match_feature_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut accepted = 0;
    for _ in 0..200 {
        let parts = random_event(&mut rng, 40);
        let ours = extract_features(&parts, 1.0, 2.5).unwrap();
        match (ours, brute_features(&parts, 1.0, 2.5)) {
            (Ok(f), Some(o)) => {
                accepted += 1;
                for (a, b) in f.to_array().iter().zip(o) {
                    assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{a} vs {b}");
                }
            }
            (Err(_), None) => {}
            (a, b) => panic!("pipeline disagrees: {a:?} vs {b:?}"),
        }
    }
    assert!(accepted > 50, "only {accepted} events accepted");
}

#[test]
fn tau_values_for_two_equal_prongs() {
    let parts = [
        Particle::massless(100.0, 0.0, 0.0).unwrap(),
        Particle::massless(100.0, 0.0, 0.8).unwrap(),
    ];
    let jet = &cluster_antikt(&parts, 1.0).unwrap()[0];
    assert!((nsubjettiness(jet, 1).unwrap() - 0.4).abs() < 1e-12);
    assert_eq!(tau21(jet), Some(0.0));
}

#[test]
fn rejection_codes() {
    let one = [Particle::massless(100.0, 0.0, 0.0).unwrap()];
    assert_eq!(extract_features(&one, 1.0, 2.5).unwrap(), Err(RejectReason::FewerThanTwoJets));
    let zero = [Particle::massless(0.0, 0.0, 0.0).unwrap()];
    assert_eq!(extract_features(&zero, 1.0, 2.5).unwrap(), Err(RejectReason::FewerThanTwoJets));
    assert!(extract_features(&one, -1.0, 2.5).is_err());
}
