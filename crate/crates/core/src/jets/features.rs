use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Lines};

use super::{cluster_antikt, filter_jets, invariant_mass_pair, tau21, Particle};
use crate::error::{Error, Result};

pub const DEFAULT_RADIUS: f64 = 1.0;
pub const DEFAULT_ETA_MAX: f64 = 2.5;

/// The dijet features of one event. J1 is the higher-pt jet, so
/// `m_j1_minus_m_j2` can be negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventFeatures {
    pub m_jj: f64,
    pub m_j1: f64,
    pub m_j1_minus_m_j2: f64,
    pub tau21_j1: f64,
    pub tau21_j2: f64,
}

impl EventFeatures {
    /// `(m_jj, m_j1, Δm, τ21_1, τ21_2)`.
    pub fn to_array(&self) -> [f64; 5] {
        [self.m_jj, self.m_j1, self.m_j1_minus_m_j2, self.tau21_j1, self.tau21_j2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RejectReason {
    FewerThanTwoJets,
    /// A leading jet has a single constituent, so τ₂ is undefined.
    MissingSubstructure,
    /// `m_jj` outside the analysis window; applied by the caller.
    OutsideWindow,
}

impl RejectReason {
    pub const ALL: [RejectReason; 3] = [
        RejectReason::FewerThanTwoJets,
        RejectReason::MissingSubstructure,
        RejectReason::OutsideWindow,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::FewerThanTwoJets => "fewer_than_two_jets",
            RejectReason::MissingSubstructure => "missing_substructure",
            RejectReason::OutsideWindow => "outside_window",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Clusters, applies the η cut and builds the features from the two
/// leading jets. The outer error is reserved for invalid arguments.
pub fn extract_features(
    particles: &[Particle],
    radius: f64,
    eta_max: f64,
) -> Result<std::result::Result<EventFeatures, RejectReason>> {
    if !(eta_max > 0.0) {
        return Err(Error::input(format!("eta_max must be positive, got {eta_max}")));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::input(format!("jet radius must be positive, got {radius}")));
    }
    if particles.iter().all(|p| p.pt == 0.0) {
        return Ok(Err(RejectReason::FewerThanTwoJets));
    }
    let jets = filter_jets(cluster_antikt(particles, radius)?, eta_max);
    let [j1, j2, ..] = jets.as_slice() else {
        return Ok(Err(RejectReason::FewerThanTwoJets));
    };
    let (Some(t1), Some(t2)) = (tau21(j1), tau21(j2)) else {
        return Ok(Err(RejectReason::MissingSubstructure));
    };
    Ok(Ok(EventFeatures {
        m_jj: invariant_mass_pair(j1, j2),
        m_j1: j1.mass,
        m_j1_minus_m_j2: j1.mass - j2.mass,
        tau21_j1: t1,
        tau21_j2: t2,
    }))
}

/// Streams `event_id,pt,eta,phi[,mass]` rows grouped into events. Rows of
/// one event must be contiguous.
pub struct ParticleEvents<R> {
    lines: Lines<R>,
    line_no: usize,
    has_mass: bool,
    current: Option<(u64, Vec<Particle>)>,
    finished: HashSet<u64>,
    done: bool,
}

pub fn read_particle_events<R: BufRead>(input: R) -> Result<ParticleEvents<R>> {
    let mut lines = input.lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => return Err(Error::parse(1, "missing header")),
    };
    let cols: Vec<&str> = header.trim().split(',').map(str::trim).collect();
    let has_mass = match cols.as_slice() {
        ["event_id", "pt", "eta", "phi"] => false,
        ["event_id", "pt", "eta", "phi", "mass"] => true,
        _ => return Err(Error::parse(1, "header must be `event_id,pt,eta,phi[,mass]`")),
    };
    Ok(ParticleEvents {
        lines,
        line_no: 1,
        has_mass,
        current: None,
        finished: HashSet::new(),
        done: false,
    })
}

impl<R: BufRead> ParticleEvents<R> {
    fn parse_row(&self, line: &str) -> Result<(u64, Particle)> {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let expected = if self.has_mass { 5 } else { 4 };
        if cells.len() != expected {
            return Err(Error::parse(
                self.line_no,
                format!("expected {expected} cells, found {}", cells.len()),
            ));
        }
        let id = cells[0]
            .parse()
            .map_err(|_| Error::parse(self.line_no, format!("bad event_id `{}`", cells[0])))?;
        let num = |i: usize| {
            cells[i]
                .parse::<f64>()
                .map_err(|_| Error::parse(self.line_no, format!("bad number `{}`", cells[i])))
        };
        let mass = if self.has_mass { num(4)? } else { 0.0 };
        let particle =
            Particle::new(num(1)?, num(2)?, num(3)?, mass).map_err(|e| Error::parse(self.line_no, e.to_string()))?;
        Ok((id, particle))
    }

    fn advance(&mut self) -> Result<Option<(u64, Vec<Particle>)>> {
        loop {
            let Some(line) = self.lines.next() else {
                self.done = true;
                return Ok(self.current.take());
            };
            let line = line?;
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            let (id, particle) = self.parse_row(&line)?;
            match &mut self.current {
                Some((cur, parts)) if *cur == id => parts.push(particle),
                _ => {
                    if self.finished.contains(&id) {
                        return Err(Error::parse(self.line_no, format!("rows of event {id} are not contiguous")));
                    }
                    let previous = self.current.replace((id, vec![particle]));
                    if let Some(prev) = previous {
                        self.finished.insert(prev.0);
                        return Ok(Some(prev));
                    }
                }
            }
        }
    }
}

impl<R: BufRead> Iterator for ParticleEvents<R> {
    type Item = Result<(u64, Vec<Particle>)>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.advance() {
            Ok(Some(ev)) => Some(Ok(ev)),
            Ok(None) => None,
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}
