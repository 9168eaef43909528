//! Constraint-based region filtering: per-probe constraint circles from
//! measured RTTs, iterative candidate filtering down to the overlap region,
//! and merging of near-duplicate candidates.

use thiserror::Error;

use crate::geo::{delay_to_distance, great_circle_distance, DistanceKm, GeoCoordinate, GeoError, MeasurementConstants};

#[derive(Debug, Error)]
pub enum CbgError {
    #[error("probe and RTT lists differ in length ({probes} vs {rtts})")]
    LengthMismatch { probes: usize, rtts: usize },
    #[error("at least one probe measurement is required")]
    EmptyProbes,
    #[error(transparent)]
    Geo(#[from] GeoError),
}

/// A circle centered on a probe; the target lies inside it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintCircle {
    pub center: GeoCoordinate,
    pub radius: DistanceKm,
}

impl ConstraintCircle {
    /// Boundary counts as inside.
    pub fn contains(&self, point: GeoCoordinate) -> bool {
        great_circle_distance(self.center, point).km() <= self.radius.km()
    }
}

/// A scored location hypothesis, possibly the merge of several raw ones.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateCoordinate {
    pub position: GeoCoordinate,
    pub label: Option<String>,
    pub merged_count: usize,
}

impl CandidateCoordinate {
    pub fn new(position: GeoCoordinate) -> Self {
        Self {
            position,
            label: None,
            merged_count: 1,
        }
    }

    pub fn labeled(position: GeoCoordinate, label: impl Into<String>) -> Self {
        Self {
            position,
            label: Some(label.into()),
            merged_count: 1,
        }
    }
}

/// Build constraint circles from probe positions and RTTs, sorted ascending
/// by radius (ties keep probe order).
pub fn build_circles(
    probe_positions: &[GeoCoordinate],
    rtts_ms: &[f64],
    consts: &MeasurementConstants,
) -> Result<Vec<ConstraintCircle>, CbgError> {
    if probe_positions.len() != rtts_ms.len() {
        return Err(CbgError::LengthMismatch {
            probes: probe_positions.len(),
            rtts: rtts_ms.len(),
        });
    }
    if probe_positions.is_empty() {
        return Err(CbgError::EmptyProbes);
    }
    let mut circles: Vec<ConstraintCircle> = probe_positions
        .iter()
        .zip(rtts_ms)
        .map(|(&center, &rtt)| {
            Ok(ConstraintCircle {
                center,
                radius: delay_to_distance(rtt, consts)?,
            })
        })
        .collect::<Result<_, CbgError>>()?;
    circles.sort_by(|a, b| a.radius.partial_cmp(&b.radius).expect("finite radii"));
    Ok(circles)
}

/// Keep exactly the candidates lying inside every circle. With no circles
/// the filter is vacuous. An empty result means no location is consistent
/// with all constraints.
pub fn filter_candidates(
    circles: &[ConstraintCircle],
    initial: &[CandidateCoordinate],
) -> Vec<CandidateCoordinate> {
    let mut surviving: Vec<CandidateCoordinate> = initial.to_vec();
    for circle in circles {
        surviving.retain(|c| circle.contains(c.position));
    }
    surviving
}

/// Smallest circle: the geocoder's search center and radius.
pub fn region_hint(circles: &[ConstraintCircle]) -> Result<(GeoCoordinate, DistanceKm), CbgError> {
    circles
        .iter()
        .min_by(|a, b| a.radius.partial_cmp(&b.radius).expect("finite radii"))
        .map(|c| (c.center, c.radius))
        .ok_or(CbgError::EmptyProbes)
}

/// Single-linkage clustering at `threshold_km`: chains of candidates closer
/// than the threshold collapse into one candidate at their centroid, with
/// `merged_count` totaling the absorbed raw candidates.
pub fn merge_close(
    candidates: &[CandidateCoordinate],
    threshold_km: f64,
) -> Vec<CandidateCoordinate> {
    let n = candidates.len();
    if n == 0 {
        return Vec::new();
    }
    // Union-find over pairs within the threshold.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let d = great_circle_distance(candidates[i].position, candidates[j].position).km();
            if d < threshold_km {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[rj.max(ri)] = rj.min(ri);
                }
            }
        }
    }
    // Clusters keyed by root, in first-member order.
    let mut order: Vec<usize> = Vec::new();
    let mut members: std::collections::BTreeMap<usize, Vec<usize>> = std::collections::BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        if !members.contains_key(&root) {
            order.push(root);
        }
        members.entry(root).or_default().push(i);
    }
    order
        .into_iter()
        .map(|root| {
            let idxs = &members[&root];
            let lat = idxs.iter().map(|&i| candidates[i].position.lat()).sum::<f64>()
                / idxs.len() as f64;
            let lon = idxs.iter().map(|&i| candidates[i].position.lon()).sum::<f64>()
                / idxs.len() as f64;
            CandidateCoordinate {
                position: GeoCoordinate::new(lat, lon).expect("centroid of valid coordinates"),
                label: candidates[idxs[0]].label.clone(),
                merged_count: idxs.iter().map(|&i| candidates[i].merged_count).sum(),
            }
        })
        .collect()
}
