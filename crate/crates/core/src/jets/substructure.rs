use super::cluster::exclusive_kt_axes;
use super::{delta_r2, Jet};

/// N-subjettiness `τ_n = Σ_k pt_k min_a ΔR(a, k) / (R Σ_k pt_k)` with
/// exclusive-kt axes. `None` when the jet has fewer than `n` constituents.
pub fn nsubjettiness(jet: &Jet, n: usize) -> Option<f64> {
    let axes = exclusive_kt_axes(&jet.constituents, n)?;
    let mut num = 0.0;
    let mut pt_sum = 0.0;
    for c in &jet.constituents {
        let dr2 = axes
            .iter()
            .map(|&(eta, phi)| delta_r2(eta, phi, c.eta, c.phi))
            .fold(f64::INFINITY, f64::min);
        num += c.pt * dr2.sqrt();
        pt_sum += c.pt;
    }
    if pt_sum == 0.0 {
        return Some(0.0);
    }
    Some(num / (jet.radius * pt_sum))
}

/// `τ₂ / τ₁`, taken as 0 when both vanish.
pub fn tau21(jet: &Jet) -> Option<f64> {
    let t1 = nsubjettiness(jet, 1)?;
    let t2 = nsubjettiness(jet, 2)?;
    Some(if t1 == 0.0 { 0.0 } else { t2 / t1 })
}
