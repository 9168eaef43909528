//! End-to-end geolocation of an arbitrary target IP against the landmark
//! database: pick the probes closest to the target, score all landmarks by
//! delay similarity, keep the best, add topology scores, and map the target
//! to the highest-scoring landmark's position.

use std::net::Ipv4Addr;

use thiserror::Error;

use crate::config::EngineConfig;
use crate::geo::GeoCoordinate;
use crate::measure::{DelayVector, MeasurementSource, ProbeId};
use crate::selection::{
    self, delay_similarity, LandmarkScore, SelectionError,
};

#[derive(Debug, Error, PartialEq)]
pub enum GeolocateError {
    #[error("landmark database is empty")]
    EmptyDatabase,
    #[error("target {0} is unreachable from every probe")]
    Unreachable(Ipv4Addr),
    #[error("no landmark has a usable similarity to the target")]
    NoUsableLandmark,
    #[error(transparent)]
    Selection(#[from] SelectionError),
}

/// How a landmark entered the database, ordered by trustworthiness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LandmarkSource {
    /// Selected among several geocoder candidates by measurements.
    OrgNameSelection,
    /// Organization name restricted to a region clue or CBG region.
    OrgNameRegion,
    /// Complete street address geocoded directly.
    FullAddress,
    /// Hand-curated ground truth.
    Manual,
}

impl LandmarkSource {
    pub fn code(&self) -> &'static str {
        match self {
            LandmarkSource::OrgNameSelection => "org-name+selection",
            LandmarkSource::OrgNameRegion => "org-name+region",
            LandmarkSource::FullAddress => "full-address",
            LandmarkSource::Manual => "manual",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "org-name+selection" => Some(LandmarkSource::OrgNameSelection),
            "org-name+region" => Some(LandmarkSource::OrgNameRegion),
            "full-address" => Some(LandmarkSource::FullAddress),
            "manual" => Some(LandmarkSource::Manual),
            _ => None,
        }
    }

    /// Ordinal confidence tier; higher is more trusted.
    pub fn tier(&self) -> u8 {
        match self {
            LandmarkSource::OrgNameSelection => 0,
            LandmarkSource::OrgNameRegion => 1,
            LandmarkSource::FullAddress => 2,
            LandmarkSource::Manual => 3,
        }
    }
}

/// An Internet host with a known position.
#[derive(Debug, Clone, PartialEq)]
pub struct Landmark {
    pub ip: Ipv4Addr,
    pub position: GeoCoordinate,
    pub source: LandmarkSource,
    pub confidence: u8,
}

impl Landmark {
    pub fn new(ip: Ipv4Addr, position: GeoCoordinate, source: LandmarkSource) -> Self {
        Self {
            ip,
            position,
            source,
            confidence: source.tier(),
        }
    }
}

/// Result of geolocating one target.
#[derive(Debug, Clone, PartialEq)]
pub struct GeolocationResult {
    pub target: Ipv4Addr,
    /// Always the chosen landmark's position (nearest-landmark semantics).
    pub position: GeoCoordinate,
    pub landmark_ip: Ipv4Addr,
    pub probes_used: Vec<ProbeId>,
    /// Scores of the final candidate set, sorted by descending score.
    pub score_table: Vec<LandmarkScore>,
    /// Landmarks dropped for missing measurements.
    pub unreachable_landmarks: usize,
}

/// The k probes with the smallest RTT to the target; ties keep the lower
/// probe id. Asking for more probes than exist returns them all.
pub fn select_probes(target_vector: &DelayVector, k: usize) -> Vec<ProbeId> {
    let mut entries: Vec<(ProbeId, f64)> = target_vector.iter().collect();
    entries.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite rtts").then(a.0.cmp(&b.0)));
    entries.into_iter().take(k.max(1)).map(|(p, _)| p).collect()
}

/// Geolocate a target against the landmark database.
///
/// Stage 1 selects the `k_probes` closest probes. Stage 2 scores every
/// reachable landmark by delay similarity and keeps the top `k_candidates`.
/// Stage 3 renormalizes delay scores over the kept set, adds topology
/// scores, and combines them; the landmark with the highest combined score
/// wins (ties: lexicographic position, then ip).
pub fn geolocate_target(
    target: Ipv4Addr,
    database: &[Landmark],
    source: &dyn MeasurementSource,
    config: &EngineConfig,
) -> Result<GeolocationResult, GeolocateError> {
    if database.is_empty() {
        return Err(GeolocateError::EmptyDatabase);
    }
    let full_vector = source
        .delay_vector(target)
        .ok_or(GeolocateError::Unreachable(target))?;
    let probes = select_probes(&full_vector, config.k_probes);
    let target_vector = full_vector
        .restricted(&probes)
        .ok_or(GeolocateError::Unreachable(target))?;

    // Stage 2: similarity over all landmarks; drop unreachable ones.
    let mut sims: Vec<(&Landmark, f64)> = Vec::new();
    let mut unreachable = 0usize;
    for lm in database {
        match source
            .delay_vector(lm.ip)
            .and_then(|v| v.restricted(&probes))
            .and_then(|v| delay_similarity(&v, &target_vector))
        {
            Some(sim) => sims.push((lm, sim.value)),
            None => unreachable += 1,
        }
    }
    if sims.is_empty() {
        return Err(GeolocateError::NoUsableLandmark);
    }
    // Keep the top k by similarity (equivalently by delay score), with a
    // deterministic tie order on ip.
    sims.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("finite similarities")
            .then_with(|| a.0.ip.cmp(&b.0.ip))
    });
    sims.truncate(config.k_candidates.max(1));

    // Stage 3: full measurement bundle for the kept set, renormalized
    // delay scores, topology scores, combination.
    let kept: Vec<(Ipv4Addr, GeoCoordinate)> =
        sims.iter().map(|(lm, _)| (lm.ip, lm.position)).collect();
    let measurements = selection::measure_landmarks(source, &probes, &kept);
    let (target_vec, target_routes) = selection::measure_target(source, &probes, target)
        .ok_or(GeolocateError::Unreachable(target))?;
    let mut scored = selection::score_landmarks(
        &measurements,
        &target_vec,
        &target_routes,
        config.alpha_delay,
        config.beta_topo,
    )?;
    scored.sort_by(|a, b| {
        b.combined
            .partial_cmp(&a.combined)
            .expect("finite scores")
            .then_with(|| {
                a.position
                    .lat()
                    .partial_cmp(&b.position.lat())
                    .expect("finite lat")
            })
            .then_with(|| {
                a.position
                    .lon()
                    .partial_cmp(&b.position.lon())
                    .expect("finite lon")
            })
            .then_with(|| a.ip.cmp(&b.ip))
    });
    let best = scored.first().ok_or(GeolocateError::NoUsableLandmark)?;

    Ok(GeolocationResult {
        target,
        position: best.position,
        landmark_ip: best.ip,
        probes_used: probes,
        score_table: scored.clone(),
        unreachable_landmarks: unreachable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netsim::{generate, host_ip, SimConfig, SimSource};
    use crate::util::median;

    fn vector(entries: &[(u32, f64)]) -> DelayVector {
        DelayVector::new(entries.iter().copied()).unwrap()
    }

    #[test]
    fn select_probes_takes_smallest_rtts() {
        let v = vector(&[(0, 10.0), (1, 5.0), (2, 20.0)]);
        assert_eq!(select_probes(&v, 2), vec![1, 0]);
        assert_eq!(select_probes(&v, 3), vec![1, 0, 2]);
        // More than available: all of them.
        assert_eq!(select_probes(&v, 10), vec![1, 0, 2]);
    }

    #[test]
    fn equal_rtts_prefer_lower_probe_ids() {
        let v = vector(&[(3, 7.0), (1, 7.0), (2, 7.0)]);
        assert_eq!(select_probes(&v, 2), vec![1, 2]);
    }

    fn sim_setup(
        seed: u64,
        landmark_count: usize,
    ) -> (crate::netsim::SimTopology, SimConfig, Vec<Landmark>) {
        let cfg = SimConfig {
            routers: 40,
            probes: 8,
            hosts: landmark_count + 5,
            seed,
            ..SimConfig::default()
        };
        let topo = generate(&cfg).unwrap();
        let landmarks: Vec<Landmark> = topo
            .plain_hosts()
            .take(landmark_count)
            .map(|id| {
                Landmark::new(
                    host_ip(id),
                    topo.hosts[id as usize].position,
                    LandmarkSource::Manual,
                )
            })
            .collect();
        (topo, cfg, landmarks)
    }

    #[test]
    fn colocated_landmark_wins_with_zero_error() {
        let (topo, cfg, mut landmarks) = sim_setup(3, 12);
        let source = SimSource::new(&topo, &cfg).unwrap();
        // The target IS one of the landmark hosts.
        let target_id = landmarks[4].ip;
        let engine = EngineConfig::default();
        let result = geolocate_target(target_id, &landmarks, &source, &engine).unwrap();
        assert_eq!(result.landmark_ip, target_id);
        assert_eq!(result.position, landmarks[4].position);
        // Doubling scores cannot change the winner (argmax invariance) --
        // exercised by scaling alpha/beta jointly.
        let mut scaled = engine.clone();
        scaled.alpha_delay *= 2.0;
        scaled.beta_topo *= 2.0;
        let result2 = geolocate_target(target_id, &landmarks, &source, &scaled).unwrap();
        assert_eq!(result2.landmark_ip, result.landmark_ip);
        // Estimated position always coincides with some db landmark.
        landmarks.sort_by_key(|l| l.ip);
        assert!(landmarks.iter().any(|l| l.position == result.position));
    }

    #[test]
    fn empty_database_rejected() {
        let (topo, cfg, _) = sim_setup(5, 4);
        let source = SimSource::new(&topo, &cfg).unwrap();
        let engine = EngineConfig::default();
        assert_eq!(
            geolocate_target(host_ip(9), &[], &source, &engine).unwrap_err(),
            GeolocateError::EmptyDatabase
        );
    }

    #[test]
    fn unreachable_target_rejected() {
        let (topo, cfg, landmarks) = sim_setup(7, 4);
        let source = SimSource::new(&topo, &cfg).unwrap();
        let engine = EngineConfig::default();
        let bogus: Ipv4Addr = "10.200.0.1".parse().unwrap();
        assert_eq!(
            geolocate_target(bogus, &landmarks, &source, &engine).unwrap_err(),
            GeolocateError::Unreachable(bogus)
        );
    }

    #[test]
    fn determinism_same_inputs_same_result() {
        let (topo, cfg, landmarks) = sim_setup(11, 15);
        let source = SimSource::new(&topo, &cfg).unwrap();
        let engine = EngineConfig::default();
        let target = host_ip(topo.probe_count as u32 + 16);
        let a = geolocate_target(target, &landmarks, &source, &engine).unwrap();
        let b = geolocate_target(target, &landmarks, &source, &engine).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn median_error_within_nearest_landmark_scale() {
        // Uniform landmarks, distance-proportional delays: the median error
        // over several targets stays within 3x the median nearest-landmark
        // distance (brute-force oracle).
        let cfg = SimConfig {
            routers: 50,
            probes: 8,
            hosts: 80,
            seed: 13,
            ..SimConfig::default()
        };
        let topo = generate(&cfg).unwrap();
        let source = SimSource::new(&topo, &cfg).unwrap();
        let engine = EngineConfig::default();
        let landmark_ids: Vec<u32> = topo.plain_hosts().take(60).collect();
        let landmarks: Vec<Landmark> = landmark_ids
            .iter()
            .map(|&id| {
                Landmark::new(
                    host_ip(id),
                    topo.hosts[id as usize].position,
                    LandmarkSource::Manual,
                )
            })
            .collect();
        let targets: Vec<u32> = topo.plain_hosts().skip(60).collect();
        let mut errors = Vec::new();
        let mut nearest = Vec::new();
        for t in targets {
            let true_pos = topo.hosts[t as usize].position;
            let result =
                geolocate_target(host_ip(t), &landmarks, &source, &engine).unwrap();
            errors.push(crate::geo::great_circle_distance(result.position, true_pos).km());
            nearest.push(
                landmarks
                    .iter()
                    .map(|l| crate::geo::great_circle_distance(l.position, true_pos).km())
                    .fold(f64::INFINITY, f64::min),
            );
        }
        let med_err = median(&errors);
        let med_nearest = median(&nearest);
        assert!(
            med_err <= 3.0 * med_nearest,
            "median error {med_err} km vs nearest-landmark median {med_nearest} km"
        );
    }
}
