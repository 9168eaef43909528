//! Measurement-based coordinate selection.
//!
//! Candidate coordinates are scored by redistributing landmark scores:
//! each landmark's score blends delay-vector similarity with shortest-route
//! topology, and flows to candidates through gates that favor proximity.
//!
//! The gate and topology formulas exponentiate their inputs, so raw
//! kilometers or milliseconds would overflow; every input set is divided by
//! its maximum (mapping into [0, 1]) before the exponential. Normalization
//! preserves order, which is all the scores consume.

use std::net::Ipv4Addr;

use thiserror::Error;

use crate::cbg::CandidateCoordinate;
use crate::geo::{great_circle_distance, GeoCoordinate};
use crate::measure::{DelayVector, MeasurementSource, ProbeId, TraceRoute};

#[derive(Debug, Error, PartialEq)]
pub enum SelectionError {
    #[error("no candidates to select from")]
    NoCandidates,
    #[error("no landmark has a usable delay similarity")]
    NoUsableLandmarks,
    #[error("all delay similarities are zero or negative; geometry is degenerate")]
    DegenerateSimilarities,
}

/// Cosine similarity over the probes present in both vectors, with the
/// shared-probe count for confidence flagging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelaySimilarity {
    pub value: f64,
    pub shared_probes: usize,
}

impl DelaySimilarity {
    /// Fewer than 3 shared probes makes the cosine poorly conditioned.
    pub fn low_confidence(&self) -> bool {
        self.shared_probes < 3
    }
}

/// Cosine similarity between two delay vectors on their shared probes.
/// `None` when the probe sets are disjoint or a vector is all zeros.
pub fn delay_similarity(a: &DelayVector, b: &DelayVector) -> Option<DelaySimilarity> {
    let mut dot = 0.0;
    let mut norm_a = 0.0;
    let mut norm_b = 0.0;
    let mut shared = 0usize;
    for (probe, va) in a.iter() {
        if let Some(vb) = b.get(probe) {
            dot += va * vb;
            norm_a += va * va;
            norm_b += vb * vb;
            shared += 1;
        }
    }
    if shared == 0 || norm_a == 0.0 || norm_b == 0.0 {
        return None;
    }
    Some(DelaySimilarity {
        value: (dot / (norm_a.sqrt() * norm_b.sqrt())).clamp(-1.0, 1.0),
        shared_probes: shared,
    })
}

/// Normalize similarities into delay scores summing to 1. Negative
/// similarities floor at zero first; if nothing positive remains the
/// geometry is degenerate and the caller must fail over.
pub fn delay_scores(similarities: &[f64]) -> Result<Vec<f64>, SelectionError> {
    if similarities.is_empty() {
        return Err(SelectionError::NoUsableLandmarks);
    }
    let floored: Vec<f64> = similarities.iter().map(|s| s.max(0.0)).collect();
    let sum: f64 = floored.iter().sum();
    if sum <= 0.0 {
        return Err(SelectionError::DegenerateSimilarities);
    }
    Ok(floored.iter().map(|s| s / sum).collect())
}

/// Shared core of the gate and topology formulas: `1 - e^{v_i} / sum e^{v_j}`.
/// Outputs sum to `len - 1`; smaller inputs get larger shares.
pub fn complement_softmax(values: &[f64]) -> Vec<f64> {
    let exps: Vec<f64> = values.iter().map(|v| v.exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| 1.0 - e / sum).collect()
}

/// Divide by the maximum, mapping into [0, 1]. All-zero input stays zero.
pub fn normalize_by_max(values: &[f64]) -> Vec<f64> {
    let max = values.iter().cloned().fold(0.0_f64, f64::max);
    if max <= 0.0 {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| v / max).collect()
}

/// Indirect route length between a landmark and the target through their
/// closest common router, minimized over probes.
///
/// Per probe: find every router appearing on both traceroutes; its detour
/// cost is the residual delay from the router to each endpoint (clamped at
/// zero to absorb jitter). Ties prefer the router deepest in the target
/// route, then the lowest router id. `None` when no probe shares a router.
pub fn shortest_route_length(
    routes_to_landmark: &[TraceRoute],
    routes_to_target: &[TraceRoute],
) -> Option<f64> {
    let mut best: Option<f64> = None;
    for lroute in routes_to_landmark {
        let Some(troute) = routes_to_target.iter().find(|t| t.probe == lroute.probe) else {
            continue;
        };
        let (Some(l_last), Some(t_last)) = (lroute.hops.last(), troute.hops.last()) else {
            continue;
        };
        let (l_total, t_total) = (l_last.cum_rtt_ms, t_last.cum_rtt_ms);
        // (length, depth in target route, router id) of the best router.
        let mut candidate: Option<(f64, usize, u32)> = None;
        for (l_router, l_cum) in lroute.router_hops() {
            for (t_depth, (t_router, t_cum)) in troute.router_hops().enumerate() {
                if l_router != t_router {
                    continue;
                }
                let length = (l_total - l_cum).max(0.0) + (t_total - t_cum).max(0.0);
                let better = match candidate {
                    None => true,
                    Some((best_len, best_depth, best_id)) => {
                        length < best_len
                            || (length == best_len
                                && (t_depth > best_depth
                                    || (t_depth == best_depth && t_router < best_id)))
                    }
                };
                if better {
                    candidate = Some((length, t_depth, t_router));
                }
            }
        }
        if let Some((length, _, _)) = candidate {
            best = Some(match best {
                None => length,
                Some(b) => b.min(length),
            });
        }
    }
    best
}

/// Topology scores from route lengths: max-normalize, then the complement
/// softmax. One landmark degenerates to a zero score.
pub fn topology_scores(route_lengths: &[f64]) -> Vec<f64> {
    if route_lengths.is_empty() {
        return Vec::new();
    }
    complement_softmax(&normalize_by_max(route_lengths))
}

/// Blend delay and topology scores: `s = alpha * s_d + beta * s_t`.
/// Landmarks without a topology score fall back to `(alpha, beta) = (1, 0)`.
pub fn combine_scores(
    s_d: &[f64],
    s_t: &[Option<f64>],
    alpha_delay: f64,
    beta_topo: f64,
) -> Vec<f64> {
    s_d.iter()
        .zip(s_t)
        .map(|(&d, t)| match t {
            Some(t) => alpha_delay * d + beta_topo * t,
            None => d,
        })
        .collect()
}

/// A landmark's position and scores, ready for redistribution.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkScore {
    pub ip: Ipv4Addr,
    pub position: GeoCoordinate,
    pub delay_score: f64,
    pub topology_score: Option<f64>,
    pub combined: f64,
    pub low_confidence: bool,
}

/// Per-candidate result of the redistribution step.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateScore {
    pub candidate: CandidateCoordinate,
    pub score: f64,
    /// Gate value per landmark, aligned with the landmark list.
    pub gates: Vec<f64>,
}

/// Redistribute landmark scores onto candidates through distance gates.
///
/// For each candidate the distances to all landmarks are max-normalized and
/// passed through the complement softmax; the candidate's score is the
/// gate-weighted sum of landmark scores. A single landmark gets gate 1, so
/// every candidate scores `s(l_1)` and selection falls back to candidate
/// order.
pub fn redistribute(
    candidates: &[CandidateCoordinate],
    landmarks: &[LandmarkScore],
) -> Result<Vec<CoordinateScore>, SelectionError> {
    if candidates.is_empty() {
        return Err(SelectionError::NoCandidates);
    }
    if landmarks.is_empty() {
        return Err(SelectionError::NoUsableLandmarks);
    }
    Ok(candidates
        .iter()
        .map(|cand| {
            let gates = if landmarks.len() == 1 {
                vec![1.0]
            } else {
                let distances: Vec<f64> = landmarks
                    .iter()
                    .map(|l| great_circle_distance(cand.position, l.position).km())
                    .collect();
                complement_softmax(&normalize_by_max(&distances))
            };
            let score = gates.iter().zip(landmarks).map(|(g, l)| g * l.combined).sum();
            CoordinateScore {
                candidate: cand.clone(),
                score,
                gates,
            }
        })
        .collect())
}

/// Landmark measurement bundle for scoring: delay vector plus traceroutes
/// from the scoring probes.
pub struct LandmarkMeasurements {
    pub ip: Ipv4Addr,
    pub position: GeoCoordinate,
    pub vector: DelayVector,
    pub routes: Vec<TraceRoute>,
}

/// Score a landmark set against a target: delay scores from cosine
/// similarity, topology scores from closest-common-router route lengths,
/// blended with the `(alpha, beta) -> (1, 0)` fallback for landmarks whose
/// routes share no router with the target's.
pub fn score_landmarks(
    landmarks: &[LandmarkMeasurements],
    target_vector: &DelayVector,
    target_routes: &[TraceRoute],
    alpha_delay: f64,
    beta_topo: f64,
) -> Result<Vec<LandmarkScore>, SelectionError> {
    let mut usable: Vec<(&LandmarkMeasurements, DelaySimilarity)> = Vec::new();
    for lm in landmarks {
        if let Some(sim) = delay_similarity(&lm.vector, target_vector) {
            usable.push((lm, sim));
        }
    }
    if usable.is_empty() {
        return Err(SelectionError::NoUsableLandmarks);
    }
    let sims: Vec<f64> = usable.iter().map(|(_, s)| s.value).collect();
    let s_d = delay_scores(&sims)?;

    let route_lengths: Vec<Option<f64>> = usable
        .iter()
        .map(|(lm, _)| shortest_route_length(&lm.routes, target_routes))
        .collect();
    let available: Vec<f64> = route_lengths.iter().filter_map(|l| *l).collect();
    let s_t_available = topology_scores(&available);
    let mut s_t: Vec<Option<f64>> = Vec::with_capacity(route_lengths.len());
    let mut cursor = 0usize;
    for l in &route_lengths {
        match l {
            Some(_) => {
                s_t.push(Some(s_t_available[cursor]));
                cursor += 1;
            }
            None => s_t.push(None),
        }
    }

    let combined = combine_scores(&s_d, &s_t, alpha_delay, beta_topo);
    Ok(usable
        .iter()
        .zip(s_d.iter().zip(s_t.iter().zip(combined.iter())))
        .map(|((lm, sim), (&d, (&t, &c)))| LandmarkScore {
            ip: lm.ip,
            position: lm.position,
            delay_score: d,
            topology_score: t,
            combined: c,
            low_confidence: sim.low_confidence(),
        })
        .collect())
}

/// Deterministic argmax over candidate scores: highest score, then highest
/// merged count, then lexicographic (lat, lon).
pub fn best_candidate(scores: &[CoordinateScore]) -> Option<&CoordinateScore> {
    scores.iter().max_by(|a, b| {
        a.score
            .partial_cmp(&b.score)
            .expect("finite scores")
            .then_with(|| a.candidate.merged_count.cmp(&b.candidate.merged_count))
            .then_with(|| {
                b.candidate
                    .position
                    .lat()
                    .partial_cmp(&a.candidate.position.lat())
                    .expect("finite lat")
            })
            .then_with(|| {
                b.candidate
                    .position
                    .lon()
                    .partial_cmp(&a.candidate.position.lon())
                    .expect("finite lon")
            })
    })
}

/// Full selection: score the landmarks against the target, redistribute on
/// the candidates, and return the winner plus the full score tables.
pub fn select_coordinate(
    candidates: &[CandidateCoordinate],
    landmarks: &[LandmarkMeasurements],
    target_vector: &DelayVector,
    target_routes: &[TraceRoute],
    alpha_delay: f64,
    beta_topo: f64,
) -> Result<(CandidateCoordinate, Vec<CoordinateScore>, Vec<LandmarkScore>), SelectionError> {
    if candidates.is_empty() {
        return Err(SelectionError::NoCandidates);
    }
    let scored = score_landmarks(
        landmarks,
        target_vector,
        target_routes,
        alpha_delay,
        beta_topo,
    )?;
    let table = redistribute(candidates, &scored)?;
    let best = best_candidate(&table).expect("candidates non-empty").clone();
    Ok((best.candidate, table, scored))
}

/// Collect landmark measurements from a source over a probe subset.
pub fn measure_landmarks(
    source: &dyn MeasurementSource,
    probes: &[ProbeId],
    landmarks: &[(Ipv4Addr, GeoCoordinate)],
) -> Vec<LandmarkMeasurements> {
    landmarks
        .iter()
        .filter_map(|&(ip, position)| {
            let vector = source.delay_vector(ip)?.restricted(probes)?;
            let routes: Vec<TraceRoute> = probes
                .iter()
                .filter_map(|&p| source.traceroute(p, ip))
                .collect();
            Some(LandmarkMeasurements {
                ip,
                position,
                vector,
                routes,
            })
        })
        .collect()
}

/// Measure the target over a probe subset.
pub fn measure_target(
    source: &dyn MeasurementSource,
    probes: &[ProbeId],
    target: Ipv4Addr,
) -> Option<(DelayVector, Vec<TraceRoute>)> {
    let vector = source.delay_vector(target)?.restricted(probes)?;
    let routes: Vec<TraceRoute> = probes
        .iter()
        .filter_map(|&p| source.traceroute(p, target))
        .collect();
    Some((vector, routes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{HopNode, TraceHop};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn vector(entries: &[(u32, f64)]) -> DelayVector {
        DelayVector::new(entries.iter().copied()).unwrap()
    }

    fn coord(lat: f64, lon: f64) -> GeoCoordinate {
        GeoCoordinate::new(lat, lon).unwrap()
    }

    #[test]
    fn identical_vectors_similarity_one() {
        let v = vector(&[(0, 10.0), (1, 20.0), (2, 30.0)]);
        let sim = delay_similarity(&v, &v).unwrap();
        assert!((sim.value - 1.0).abs() < 1e-12);
        assert_eq!(sim.shared_probes, 3);
        assert!(!sim.low_confidence());
    }

    #[test]
    fn parallel_vectors_similarity_one() {
        let a = vector(&[(0, 1.0), (1, 2.0), (2, 3.0)]);
        let b = vector(&[(0, 2.0), (1, 4.0), (2, 6.0)]);
        assert!((delay_similarity(&a, &b).unwrap().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_vectors_similarity_zero() {
        let a = vector(&[(0, 1.0), (1, 0.0)]);
        let b = vector(&[(0, 0.0), (1, 1.0)]);
        assert_eq!(delay_similarity(&a, &b).unwrap().value, 0.0);
    }

    #[test]
    fn disjoint_probe_sets_unavailable() {
        let a = vector(&[(0, 1.0)]);
        let b = vector(&[(1, 1.0)]);
        assert!(delay_similarity(&a, &b).is_none());
    }

    #[test]
    fn intersection_alignment_and_confidence() {
        let a = vector(&[(0, 1.0), (1, 2.0), (5, 9.0)]);
        let b = vector(&[(1, 4.0), (5, 18.0), (7, 3.0)]);
        let sim = delay_similarity(&a, &b).unwrap();
        assert_eq!(sim.shared_probes, 2);
        assert!(sim.low_confidence());
        assert!((sim.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn delay_scores_normalize() {
        let s = delay_scores(&[0.8, 0.2]).unwrap();
        assert!((s[0] - 0.8).abs() < 1e-12);
        assert!((s[1] - 0.2).abs() < 1e-12);
        assert_eq!(delay_scores(&[0.5]).unwrap(), vec![1.0]);
        let sum: f64 = delay_scores(&[0.3, 0.9, 0.1]).unwrap().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_similarities_floored_then_degenerate() {
        let s = delay_scores(&[-0.5, 0.5]).unwrap();
        assert_eq!(s[0], 0.0);
        assert_eq!(s[1], 1.0);
        assert_eq!(
            delay_scores(&[-0.5, -0.1]).unwrap_err(),
            SelectionError::DegenerateSimilarities
        );
    }

    #[test]
    fn complement_softmax_arithmetic() {
        // Inputs (0, ln 3): e-terms (1, 3), scores (0.75, 0.25).
        let s = complement_softmax(&[0.0, 3.0_f64.ln()]);
        assert!((s[0] - 0.75).abs() < 1e-12);
        assert!((s[1] - 0.25).abs() < 1e-12);
        // Equal inputs split evenly.
        let e = complement_softmax(&[2.0, 2.0]);
        assert!((e[0] - 0.5).abs() < 1e-12 && (e[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn topology_scores_sum_to_len_minus_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let n = rng.gen_range(2..12);
            let lengths: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..500.0)).collect();
            let s = topology_scores(&lengths);
            let sum: f64 = s.iter().sum();
            assert!((sum - (n as f64 - 1.0)).abs() < 1e-9);
        }
        // Single landmark: degenerate zero.
        assert_eq!(topology_scores(&[42.0]), vec![0.0]);
    }

    #[test]
    fn combine_scores_fallback() {
        let s = combine_scores(&[0.6, 0.3], &[Some(0.4), None], 0.5, 0.5);
        assert!((s[0] - 0.5).abs() < 1e-12);
        // Unavailable topology: alpha, beta become 1, 0.
        assert!((s[1] - 0.3).abs() < 1e-12);
        let identity = combine_scores(&[0.6], &[Some(0.9)], 1.0, 0.0);
        assert!((identity[0] - 0.6).abs() < 1e-12);
    }

    fn route(probe: u32, dst: &str, hops: &[(u32, f64)], total: f64) -> TraceRoute {
        let dst: std::net::Ipv4Addr = dst.parse().unwrap();
        let mut hop_list: Vec<TraceHop> = hops
            .iter()
            .map(|&(r, cum)| TraceHop {
                node: HopNode::Router(r),
                cum_rtt_ms: cum,
            })
            .collect();
        hop_list.push(TraceHop {
            node: HopNode::Host(dst),
            cum_rtt_ms: total,
        });
        TraceRoute::new(probe, dst, hop_list, true).unwrap()
    }

    #[test]
    fn shared_last_hop_router_route_length() {
        // Landmark and target share router 9 at cum 35; RTTs 40 and 50.
        let to_landmark = route(0, "10.0.0.1", &[(3, 20.0), (9, 35.0)], 40.0);
        let to_target = route(0, "10.0.0.2", &[(3, 22.0), (9, 35.0)], 50.0);
        let len = shortest_route_length(&[to_landmark], &[to_target]).unwrap();
        assert!((len - 20.0).abs() < 1e-12);
    }

    #[test]
    fn branching_topology_picks_shorter_indirect_route() {
        // Probe 1 reaches both endpoints through router 2 with residuals
        // 12 + 18; probe 2 through router 4 with residuals 5 + 9. The
        // shorter indirect route (through router 4) wins.
        let p1_landmark = route(1, "10.0.0.1", &[(1, 10.0), (2, 18.0)], 30.0);
        let p1_target = route(1, "10.0.0.2", &[(1, 10.0), (2, 20.0), (3, 30.0)], 38.0);
        let p2_landmark = route(2, "10.0.0.1", &[(5, 9.0), (4, 15.0)], 20.0);
        let p2_target = route(2, "10.0.0.2", &[(5, 9.0), (4, 16.0)], 25.0);
        let len =
            shortest_route_length(&[p1_landmark, p2_landmark], &[p1_target, p2_target]).unwrap();
        assert!((len - 14.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_routes_unavailable() {
        let to_landmark = route(0, "10.0.0.1", &[(1, 5.0)], 10.0);
        let to_target = route(0, "10.0.0.2", &[(2, 6.0)], 12.0);
        assert!(shortest_route_length(&[to_landmark], &[to_target]).is_none());
    }

    #[test]
    fn residuals_clamped_at_zero() {
        // Jitter inside the monotonicity tolerance can leave the router cum
        // a hair above the total; the residual clamps to 0 instead of going
        // negative.
        let to_landmark = route(0, "10.0.0.1", &[(9, 41.0)], 41.0 - 5e-10);
        let to_target = route(0, "10.0.0.2", &[(9, 35.0)], 50.0);
        let len = shortest_route_length(&[to_landmark], &[to_target]).unwrap();
        assert!((len - 15.0).abs() < 1e-9);
        assert!(len >= 15.0);
    }

    fn plain_candidates(positions: &[(f64, f64)]) -> Vec<CandidateCoordinate> {
        positions
            .iter()
            .map(|&(lat, lon)| CandidateCoordinate::new(coord(lat, lon)))
            .collect()
    }

    fn landmark_score(ip_last: u8, lat: f64, lon: f64, combined: f64) -> LandmarkScore {
        LandmarkScore {
            ip: std::net::Ipv4Addr::new(10, 0, 0, ip_last),
            position: coord(lat, lon),
            delay_score: combined,
            topology_score: None,
            combined,
            low_confidence: false,
        }
    }

    #[test]
    fn equidistant_candidate_gates_split_evenly() {
        let landmarks = vec![
            landmark_score(1, 40.0, -95.0, 0.6),
            landmark_score(2, 40.0, -93.0, 0.4),
        ];
        let candidates = plain_candidates(&[(40.0, -94.0)]);
        let scores = redistribute(&candidates, &landmarks).unwrap();
        assert!((scores[0].gates[0] - 0.5).abs() < 1e-9);
        assert!((scores[0].gates[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn gates_sum_to_len_minus_one_per_candidate() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let n = rng.gen_range(2..10);
            let landmarks: Vec<LandmarkScore> = (0..n)
                .map(|i| {
                    landmark_score(
                        i as u8,
                        rng.gen_range(35.0..45.0),
                        rng.gen_range(-100.0..-90.0),
                        rng.gen_range(0.0..1.0),
                    )
                })
                .collect();
            let candidates = plain_candidates(&[
                (rng.gen_range(35.0..45.0), rng.gen_range(-100.0..-90.0)),
                (rng.gen_range(35.0..45.0), rng.gen_range(-100.0..-90.0)),
            ]);
            for cs in redistribute(&candidates, &landmarks).unwrap() {
                let sum: f64 = cs.gates.iter().sum();
                assert!((sum - (n as f64 - 1.0)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn closer_landmark_gets_larger_gate() {
        let landmarks = vec![
            landmark_score(1, 40.0, -95.0, 0.5),
            landmark_score(2, 44.0, -95.0, 0.5),
        ];
        let candidates = plain_candidates(&[(40.2, -95.0)]);
        let scores = redistribute(&candidates, &landmarks).unwrap();
        assert!(scores[0].gates[0] > scores[0].gates[1]);
    }

    #[test]
    fn decreasing_distance_strictly_increases_gate() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.gen_range(2..8);
            let mut landmarks: Vec<LandmarkScore> = (0..n)
                .map(|i| {
                    landmark_score(
                        i as u8,
                        rng.gen_range(35.0..45.0),
                        rng.gen_range(-100.0..-90.0),
                        0.5,
                    )
                })
                .collect();
            let cand =
                plain_candidates(&[(rng.gen_range(35.0..45.0), rng.gen_range(-100.0..-90.0))]);
            let before = redistribute(&cand, &landmarks).unwrap()[0].clone();
            // Move landmark 0 halfway toward the candidate.
            let target = cand[0].position;
            let l = landmarks[0].position;
            let d_before = great_circle_distance(target, l).km();
            landmarks[0].position = coord(
                (l.lat() + target.lat()) / 2.0,
                (l.lon() + target.lon()) / 2.0,
            );
            let after = redistribute(&cand, &landmarks).unwrap()[0].clone();
            if d_before > 1.0 {
                assert!(
                    after.gates[0] > before.gates[0],
                    "gate did not increase: {} -> {}",
                    before.gates[0],
                    after.gates[0]
                );
            }
        }
    }

    #[test]
    fn single_landmark_gate_is_one() {
        let landmarks = vec![landmark_score(1, 40.0, -95.0, 0.7)];
        let candidates = plain_candidates(&[(41.0, -95.0), (39.0, -94.0)]);
        let scores = redistribute(&candidates, &landmarks).unwrap();
        for cs in &scores {
            assert_eq!(cs.gates, vec![1.0]);
            assert!((cs.score - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn scaling_scores_preserves_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..30 {
            let landmarks: Vec<LandmarkScore> = (0..5)
                .map(|i| {
                    landmark_score(
                        i as u8,
                        rng.gen_range(35.0..45.0),
                        rng.gen_range(-100.0..-90.0),
                        rng.gen_range(0.1..1.0),
                    )
                })
                .collect();
            let candidates = plain_candidates(&[
                (rng.gen_range(35.0..45.0), rng.gen_range(-100.0..-90.0)),
                (rng.gen_range(35.0..45.0), rng.gen_range(-100.0..-90.0)),
                (rng.gen_range(35.0..45.0), rng.gen_range(-100.0..-90.0)),
            ]);
            let base = redistribute(&candidates, &landmarks).unwrap();
            let mut scaled_landmarks = landmarks.clone();
            for l in &mut scaled_landmarks {
                l.combined *= 7.5;
            }
            let scaled = redistribute(&candidates, &scaled_landmarks).unwrap();
            let best_base = best_candidate(&base).unwrap().candidate.position;
            let best_scaled = best_candidate(&scaled).unwrap().candidate.position;
            assert_eq!(best_base, best_scaled);
        }
    }

    #[test]
    fn single_candidate_returned_unconditionally() {
        let landmarks = vec![LandmarkMeasurements {
            ip: "10.0.0.1".parse().unwrap(),
            position: coord(40.0, -95.0),
            vector: vector(&[(0, 10.0)]),
            routes: vec![],
        }];
        let candidates = plain_candidates(&[(40.5, -95.5)]);
        let (best, table, scored) = select_coordinate(
            &candidates,
            &landmarks,
            &vector(&[(0, 12.0)]),
            &[],
            0.5,
            0.5,
        )
        .unwrap();
        assert_eq!(best.position, candidates[0].position);
        assert_eq!(table.len(), 1);
        assert_eq!(scored.len(), 1);
        assert!(scored[0].topology_score.is_none());
    }

    #[test]
    fn argmax_tiebreak_prefers_merged_count() {
        let scores = vec![
            CoordinateScore {
                candidate: CandidateCoordinate::new(coord(40.0, -95.0)),
                score: 1.0,
                gates: vec![],
            },
            CoordinateScore {
                candidate: CandidateCoordinate {
                    position: coord(41.0, -96.0),
                    label: None,
                    merged_count: 3,
                },
                score: 1.0,
                gates: vec![],
            },
        ];
        let best = best_candidate(&scores).unwrap();
        assert_eq!(best.candidate.merged_count, 3);
    }

    #[test]
    fn route_length_scaling_leaves_topology_scores_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..30 {
            let n = rng.gen_range(2..8);
            let lengths: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..300.0)).collect();
            let scaled: Vec<f64> = lengths.iter().map(|l| l * 17.0).collect();
            let a = topology_scores(&lengths);
            let b = topology_scores(&scaled);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
