//! Landmark-density benchmark: median error distance as the landmark count
//! grows, with the brute-force nearest-landmark distance as the floor.

use anyhow::{bail, Result};
use geomark::config::EngineConfig;
use geomark::geo::great_circle_distance;
use geomark::geolocate::{geolocate_target, Landmark, LandmarkSource};
use geomark::netsim::{build_delay_model, generate, host_ip, snapshot, SimConfig};
use geomark::util::{median, subseed_n};

pub const MED_BENCH_HEADER: &str = "#geomark med-bench v1";

#[derive(Debug, Clone)]
pub struct MedBenchConfig {
    pub landmark_counts: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub region_km: f64,
    pub routers: usize,
    pub probes: usize,
}

impl Default for MedBenchConfig {
    fn default() -> Self {
        Self {
            landmark_counts: vec![10, 100, 1000],
            trials: 30,
            seed: 7,
            region_km: 500.0,
            routers: 250,
            probes: 24,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MedRow {
    pub landmarks: usize,
    pub trials: usize,
    pub med_km: f64,
    /// Median distance from each target to its nearest landmark
    /// (brute force), the geometric floor for any nearest-landmark mapper.
    pub nearest_med_km: f64,
    pub errors_km: Vec<f64>,
}

/// One trial: a fresh topology with `n` landmark hosts and one target,
/// distance-proportional delays. Returns (error km, nearest-landmark km).
fn run_trial(bench: &MedBenchConfig, n_landmarks: usize, trial: usize) -> Result<(f64, f64)> {
    let sim = SimConfig {
        region_km: bench.region_km,
        routers: bench.routers,
        probes: bench.probes,
        hosts: n_landmarks + 1,
        seed: subseed_n(bench.seed, "med-trial", (n_landmarks as u64) << 32 | trial as u64),
        ..SimConfig::default()
    };
    let topo = generate(&sim)?;
    let model = build_delay_model(&sim.delay)?;
    let source = snapshot(&topo, model.as_ref(), sim.trace_nonresponse_prob)?;
    let host_ids: Vec<u32> = topo.plain_hosts().collect();
    let (&target_id, landmark_ids) = host_ids.split_last().expect("hosts exist");
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
    let true_pos = topo.hosts[target_id as usize].position;
    let engine = EngineConfig::default();
    let result = geolocate_target(host_ip(target_id), &landmarks, &source, &engine)?;
    let error = great_circle_distance(result.position, true_pos).km();
    let nearest = landmarks
        .iter()
        .map(|l| great_circle_distance(l.position, true_pos).km())
        .fold(f64::INFINITY, f64::min);
    Ok((error, nearest))
}

pub fn run_med_bench(bench: &MedBenchConfig) -> Result<Vec<MedRow>> {
    if bench.trials == 0 || bench.landmark_counts.is_empty() {
        bail!("bench needs at least one trial and one landmark count");
    }
    let mut rows = Vec::new();
    for &n in &bench.landmark_counts {
        let mut errors = Vec::with_capacity(bench.trials);
        let mut nearests = Vec::with_capacity(bench.trials);
        for trial in 0..bench.trials {
            let (error, nearest) = run_trial(bench, n, trial)?;
            errors.push(error);
            nearests.push(nearest);
        }
        rows.push(MedRow {
            landmarks: n,
            trials: bench.trials,
            med_km: median(&errors),
            nearest_med_km: median(&nearests),
            errors_km: errors,
        });
    }
    Ok(rows)
}

/// Delimited report: one `med` row per landmark count plus the error CDF
/// per count (sorted errors with cumulative fractions).
pub fn med_report(rows: &[MedRow]) -> String {
    let mut out = String::from(MED_BENCH_HEADER);
    out.push('\n');
    out.push_str("med\tlandmarks\ttrials\tmed_km\tnearest_med_km\n");
    for row in rows {
        out.push_str(&format!(
            "med\t{}\t{}\t{:.4}\t{:.4}\n",
            row.landmarks, row.trials, row.med_km, row.nearest_med_km
        ));
    }
    for row in rows {
        let mut sorted = row.errors_km.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite errors"));
        for (i, err) in sorted.iter().enumerate() {
            out.push_str(&format!(
                "cdf\t{}\t{:.4}\t{:.4}\n",
                row.landmarks,
                err,
                (i + 1) as f64 / sorted.len() as f64
            ));
        }
    }
    out
}
