//! Deterministic synthetic-Internet generator.
//!
//! Routers are placed uniformly on a km-square patch and wired as a Gabriel
//! graph (planar, connected, with realistic detours); hosts attach to their
//! nearest router. Edge delays are propagation times at a configurable
//! fraction of light speed, so the CBG delay-distance bound can be made a
//! true upper bound by construction. Everything regenerates byte-identically
//! from (config, seed).

pub mod delay;

use std::collections::BTreeMap;
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geo::{GeoCoordinate, LIGHT_SPEED_KM_S};
use crate::measure::{
    DelayVector, HopNode, MeasurementSource, ProbeId, Snapshot, TraceHop, TraceRoute,
};
use crate::util::{subseed, subseed_n};

pub use delay::{build_delay_model, DelayModel, DelayModelConfig, MeasureContext, DELAY_MODEL_NAMES};

pub const TOPOLOGY_HEADER: &str = "#geomark topology v1";

/// Kilometers per degree of latitude on the mean Earth radius.
const KM_PER_DEG_LAT: f64 = 111.194_926_644_558_74;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("sim config key {key}: {reason}")]
    InvalidConfig { key: &'static str, reason: String },
    #[error("unknown delay model {name:?} (known: proportional, proportional-noise, proportional-lasthop)")]
    UnknownModel { name: String },
    #[error("unknown host id {0}")]
    UnknownHost(u32),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("sim config line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("topology line {line}: {reason}")]
    TopologyParse { line: usize, reason: String },
    #[error("file does not look like a topology (missing `{TOPOLOGY_HEADER}` header)")]
    BadHeader,
}

/// Simulator configuration: region geometry, node counts, delay model.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub region_km: f64,
    pub origin_lat: f64,
    pub origin_lon: f64,
    pub routers: usize,
    pub probes: usize,
    /// Non-probe hosts (landmark/target material).
    pub hosts: usize,
    pub delay: DelayModelConfig,
    /// Probability that a router hop stays silent in a traceroute.
    pub trace_nonresponse_prob: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            region_km: 500.0,
            origin_lat: 37.0,
            origin_lon: -97.0,
            routers: 60,
            probes: 10,
            hosts: 40,
            delay: DelayModelConfig::default(),
            trace_nonresponse_prob: 0.0,
            seed: 7,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.routers == 0 {
            return Err(SimError::InvalidConfig {
                key: "routers",
                reason: "need at least one router".to_string(),
            });
        }
        if self.probes == 0 {
            return Err(SimError::InvalidConfig {
                key: "probes",
                reason: "need at least one probe".to_string(),
            });
        }
        if !self.region_km.is_finite() || self.region_km <= 0.0 {
            return Err(SimError::InvalidConfig {
                key: "region_km",
                reason: format!("must be positive, got {}", self.region_km),
            });
        }
        if !(-80.0..=80.0).contains(&self.origin_lat) {
            return Err(SimError::InvalidConfig {
                key: "origin_lat",
                reason: "patch origin must stay away from the poles".to_string(),
            });
        }
        let f = self.delay.propagation_factor;
        if !f.is_finite() || f <= 0.0 || f > 1.0 {
            return Err(SimError::InvalidConfig {
                key: "delay.propagation_factor",
                reason: format!("must be in (0, 1], got {f}"),
            });
        }
        if self.delay.noise_stddev_ms < 0.0 || self.delay.lasthop_extra_ms < 0.0 {
            return Err(SimError::InvalidConfig {
                key: "delay.noise_stddev_ms",
                reason: "noise and last-hop terms must be non-negative".to_string(),
            });
        }
        if !(0.0..=1.0).contains(&self.trace_nonresponse_prob) {
            return Err(SimError::InvalidConfig {
                key: "trace.nonresponse_prob",
                reason: "probability must be in [0, 1]".to_string(),
            });
        }
        build_delay_model(&self.delay)?;
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, SimError> {
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let stripped = stripped.trim();
            if stripped.is_empty() {
                continue;
            }
            let (key, value) = stripped.split_once('=').ok_or_else(|| SimError::Parse {
                line,
                reason: format!("expected key=value, got {raw:?}"),
            })?;
            let key = key.trim();
            let value = value.trim();
            macro_rules! num {
                () => {
                    value.parse().map_err(|_| SimError::Parse {
                        line,
                        reason: format!("bad number {value:?} for {key}"),
                    })?
                };
            }
            match key {
                "region_km" => cfg.region_km = num!(),
                "origin_lat" => cfg.origin_lat = num!(),
                "origin_lon" => cfg.origin_lon = num!(),
                "routers" => cfg.routers = num!(),
                "probes" => cfg.probes = num!(),
                "hosts" => cfg.hosts = num!(),
                "delay.model" => cfg.delay.model = value.to_string(),
                "delay.propagation_factor" => cfg.delay.propagation_factor = num!(),
                "delay.noise_stddev_ms" => cfg.delay.noise_stddev_ms = num!(),
                "delay.lasthop_extra_ms" => cfg.delay.lasthop_extra_ms = num!(),
                "trace.nonresponse_prob" => cfg.trace_nonresponse_prob = num!(),
                "seed" => cfg.seed = num!(),
                _ => {
                    return Err(SimError::Parse {
                        line,
                        reason: format!("unknown key {key:?}"),
                    })
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|source| SimError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("region_km = {}\n", self.region_km));
        out.push_str(&format!("origin_lat = {}\n", self.origin_lat));
        out.push_str(&format!("origin_lon = {}\n", self.origin_lon));
        out.push_str(&format!("routers = {}\n", self.routers));
        out.push_str(&format!("probes = {}\n", self.probes));
        out.push_str(&format!("hosts = {}\n", self.hosts));
        out.push_str(&format!("delay.model = {}\n", self.delay.model));
        out.push_str(&format!(
            "delay.propagation_factor = {}\n",
            self.delay.propagation_factor
        ));
        out.push_str(&format!(
            "delay.noise_stddev_ms = {}\n",
            self.delay.noise_stddev_ms
        ));
        out.push_str(&format!(
            "delay.lasthop_extra_ms = {}\n",
            self.delay.lasthop_extra_ms
        ));
        out.push_str(&format!(
            "trace.nonresponse_prob = {}\n",
            self.trace_nonresponse_prob
        ));
        out.push_str(&format!("seed = {}\n", self.seed));
        out
    }

    /// Propagation speed in km per millisecond.
    pub fn speed_km_per_ms(&self) -> f64 {
        self.delay.propagation_factor * LIGHT_SPEED_KM_S / 1000.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Router {
    pub id: u32,
    pub position: GeoCoordinate,
    xy: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Host {
    pub id: u32,
    pub ip: Ipv4Addr,
    pub position: GeoCoordinate,
    pub router: u32,
    pub access_delay_ms: f64,
    xy: (f64, f64),
}

/// Immutable synthetic topology. The first `probe_count` hosts are probes.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTopology {
    pub routers: Vec<Router>,
    /// Undirected edges with one-way propagation delay.
    pub edges: Vec<(u32, u32, f64)>,
    pub hosts: Vec<Host>,
    pub probe_count: usize,
    pub seed: u64,
    pub speed_km_per_ms: f64,
    adjacency: Vec<Vec<(u32, f64)>>,
    ip_index: BTreeMap<Ipv4Addr, u32>,
}

/// Deterministic IP for a simulated host.
pub fn host_ip(id: u32) -> Ipv4Addr {
    let n = id + 1;
    Ipv4Addr::new(10, (n >> 16) as u8, (n >> 8) as u8, n as u8)
}

fn plane_to_geo(cfg: &SimConfig, x: f64, y: f64) -> GeoCoordinate {
    let lat = cfg.origin_lat + y / KM_PER_DEG_LAT;
    let lon = cfg.origin_lon + x / (KM_PER_DEG_LAT * cfg.origin_lat.to_radians().cos());
    GeoCoordinate::new(lat, lon).expect("patch stays on the sphere")
}

/// Generate the topology for a config: uniform routers, Gabriel-graph
/// wiring, uniform hosts attached to their nearest router.
pub fn generate(config: &SimConfig) -> Result<SimTopology, SimError> {
    config.validate()?;
    let speed = config.speed_km_per_ms();
    let mut rng = ChaCha8Rng::seed_from_u64(subseed(config.seed, "topology"));

    let routers: Vec<Router> = (0..config.routers)
        .map(|id| {
            let x = rng.gen_range(0.0..config.region_km);
            let y = rng.gen_range(0.0..config.region_km);
            Router {
                id: id as u32,
                position: plane_to_geo(config, x, y),
                xy: (x, y),
            }
        })
        .collect();

    // Gabriel graph: keep (i, j) iff no third point falls strictly inside
    // the circle with diameter ij. Distances on the plane coordinates.
    let d2 = |a: (f64, f64), b: (f64, f64)| -> f64 {
        let dx = a.0 - b.0;
        let dy = a.1 - b.1;
        dx * dx + dy * dy
    };
    let mut edges = Vec::new();
    for i in 0..routers.len() {
        for j in (i + 1)..routers.len() {
            let dij = d2(routers[i].xy, routers[j].xy);
            let blocked = (0..routers.len()).any(|k| {
                k != i
                    && k != j
                    && d2(routers[i].xy, routers[k].xy) + d2(routers[j].xy, routers[k].xy) < dij
            });
            if !blocked {
                let km =
                    crate::geo::great_circle_distance(routers[i].position, routers[j].position)
                        .km();
                edges.push((i as u32, j as u32, km / speed));
            }
        }
    }

    let total_hosts = config.probes + config.hosts;
    let hosts: Vec<Host> = (0..total_hosts)
        .map(|id| {
            let x = rng.gen_range(0.0..config.region_km);
            let y = rng.gen_range(0.0..config.region_km);
            let position = plane_to_geo(config, x, y);
            let nearest = routers
                .iter()
                .min_by(|a, b| {
                    d2((x, y), a.xy)
                        .partial_cmp(&d2((x, y), b.xy))
                        .expect("finite distances")
                })
                .expect("at least one router");
            let access_km = crate::geo::great_circle_distance(position, nearest.position).km();
            Host {
                id: id as u32,
                ip: host_ip(id as u32),
                position,
                router: nearest.id,
                access_delay_ms: access_km / speed,
                xy: (x, y),
            }
        })
        .collect();

    let mut adjacency = vec![Vec::new(); routers.len()];
    for &(u, v, w) in &edges {
        adjacency[u as usize].push((v, w));
        adjacency[v as usize].push((u, w));
    }
    let ip_index = hosts.iter().map(|h| (h.ip, h.id)).collect();

    Ok(SimTopology {
        routers,
        edges,
        hosts,
        probe_count: config.probes,
        seed: config.seed,
        speed_km_per_ms: speed,
        adjacency,
        ip_index,
    })
}

impl SimTopology {
    pub fn host(&self, id: u32) -> Result<&Host, SimError> {
        self.hosts.get(id as usize).ok_or(SimError::UnknownHost(id))
    }

    pub fn host_by_ip(&self, ip: Ipv4Addr) -> Option<&Host> {
        self.ip_index.get(&ip).map(|&id| &self.hosts[id as usize])
    }

    /// Host ids of the probes.
    pub fn probes(&self) -> impl Iterator<Item = u32> + '_ {
        0..self.probe_count as u32
    }

    /// Non-probe host ids.
    pub fn plain_hosts(&self) -> impl Iterator<Item = u32> + '_ {
        self.probe_count as u32..self.hosts.len() as u32
    }

    /// Dijkstra over the router graph: one-way delay from `src_router` to
    /// every router, plus the predecessor tree. O(V^2) selection keeps the
    /// tie-breaking (lowest router id) deterministic.
    fn router_distances(&self, src_router: u32) -> (Vec<f64>, Vec<u32>) {
        let n = self.routers.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut parent = vec![u32::MAX; n];
        let mut done = vec![false; n];
        dist[src_router as usize] = 0.0;
        for _ in 0..n {
            let mut best = usize::MAX;
            for v in 0..n {
                if !done[v] && dist[v].is_finite() && (best == usize::MAX || dist[v] < dist[best]) {
                    best = v;
                }
            }
            if best == usize::MAX {
                break;
            }
            done[best] = true;
            for &(to, w) in &self.adjacency[best] {
                let cand = dist[best] + w;
                if cand < dist[to as usize] {
                    dist[to as usize] = cand;
                    parent[to as usize] = best as u32;
                }
            }
        }
        (dist, parent)
    }

    /// Router path src_router -> dst_router along the predecessor tree.
    fn router_path(&self, parent: &[u32], src_router: u32, dst_router: u32) -> Vec<u32> {
        let mut path = vec![dst_router];
        let mut cur = dst_router;
        while cur != src_router {
            let p = parent[cur as usize];
            if p == u32::MAX {
                break;
            }
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// One-way delay given a precomputed shortest-path tree from the source
    /// host's router. Shared by the per-pair and per-probe paths so both
    /// produce bit-identical delays.
    fn one_way_with(
        &self,
        dist: &[f64],
        parent: &[u32],
        src_host: &Host,
        dst_host: &Host,
    ) -> (Vec<(u32, f64)>, f64) {
        if src_host.id == dst_host.id {
            return (Vec::new(), 0.0);
        }
        let path = self.router_path(parent, src_host.router, dst_host.router);
        let cum: Vec<(u32, f64)> = path
            .iter()
            .map(|&r| (r, src_host.access_delay_ms + dist[r as usize]))
            .collect();
        let total =
            src_host.access_delay_ms + dist[dst_host.router as usize] + dst_host.access_delay_ms;
        (cum, total)
    }

    /// One-way propagation delay between two hosts (access + router path +
    /// access), with the cumulative delay at every router on the way.
    fn one_way(&self, src: u32, dst: u32) -> Result<(Vec<(u32, f64)>, f64), SimError> {
        let src_host = self.host(src)?;
        let dst_host = self.host(dst)?;
        if src == dst {
            return Ok((Vec::new(), 0.0));
        }
        let (dist, parent) = self.router_distances(src_host.router);
        Ok(self.one_way_with(&dist, &parent, src_host, dst_host))
    }
}

/// Measured RTT between two hosts under a delay model.
pub fn ping(
    topo: &SimTopology,
    model: &dyn DelayModel,
    src: u32,
    dst: u32,
) -> Result<f64, SimError> {
    let (_, one_way) = topo.one_way(src, dst)?;
    let ctx = MeasureContext {
        seed: topo.seed,
        src,
        dst,
    };
    Ok(model.rtt_ms(2.0 * one_way, &ctx))
}

/// Simulated traceroute: cumulative RTT at every responding router along
/// the shortest path, then the destination host. Router hops go silent with
/// the configured probability, leaving the route incomplete.
pub fn traceroute(
    topo: &SimTopology,
    model: &dyn DelayModel,
    nonresponse_prob: f64,
    probe: u32,
    dst: u32,
) -> Result<TraceRoute, SimError> {
    let (router_cums, one_way) = topo.one_way(probe, dst)?;
    Ok(trace_from_path(
        topo,
        model,
        nonresponse_prob,
        probe,
        dst,
        &router_cums,
        one_way,
    ))
}

fn trace_from_path(
    topo: &SimTopology,
    model: &dyn DelayModel,
    nonresponse_prob: f64,
    probe: u32,
    dst: u32,
    router_cums: &[(u32, f64)],
    one_way: f64,
) -> TraceRoute {
    let ctx = MeasureContext {
        seed: topo.seed,
        src: probe,
        dst,
    };
    let dst_ip = topo.hosts[dst as usize].ip;
    let mut hops = Vec::with_capacity(router_cums.len() + 1);
    let mut complete = true;
    let mut noise_acc = 0.0;
    for (hop_idx, &(router, cum_one_way)) in router_cums.iter().enumerate() {
        noise_acc += model.hop_noise_ms(&ctx, hop_idx);
        let silent = if nonresponse_prob > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(subseed_n(
                topo.seed,
                "hop-drop",
                ((probe as u64) << 40) ^ ((dst as u64) << 16) ^ hop_idx as u64,
            ));
            rng.gen::<f64>() < nonresponse_prob
        } else {
            false
        };
        if silent {
            complete = false;
            continue;
        }
        hops.push(TraceHop {
            node: HopNode::Router(router),
            cum_rtt_ms: 2.0 * cum_one_way + noise_acc,
        });
    }
    noise_acc += model.hop_noise_ms(&ctx, router_cums.len());
    hops.push(TraceHop {
        node: HopNode::Host(dst_ip),
        cum_rtt_ms: 2.0 * one_way + noise_acc + model.last_hop_extra_ms(),
    });
    TraceRoute::new(probe, dst_ip, hops, complete).expect("cumulative delays non-decreasing")
}

/// Measure everything: delay vectors and traceroutes from every probe to
/// every host, bundled into an immutable snapshot. One shortest-path tree
/// per probe is shared across destinations, so the values are bit-identical
/// to per-pair [`ping`]/[`traceroute`] calls at a fraction of the cost.
pub fn snapshot(
    topo: &SimTopology,
    model: &dyn DelayModel,
    nonresponse_prob: f64,
) -> Result<Snapshot, SimError> {
    let mut snap = Snapshot {
        probe_count: topo.probe_count,
        ..Snapshot::default()
    };
    let mut entries: Vec<Vec<(ProbeId, f64)>> = vec![Vec::new(); topo.hosts.len()];
    for probe in topo.probes() {
        let probe_host = topo.host(probe)?;
        snap.probe_positions.insert(probe, probe_host.position);
        let (dist, parent) = topo.router_distances(probe_host.router);
        for dst in 0..topo.hosts.len() as u32 {
            let dst_host = &topo.hosts[dst as usize];
            let (router_cums, one_way) = topo.one_way_with(&dist, &parent, probe_host, dst_host);
            let ctx = MeasureContext {
                seed: topo.seed,
                src: probe,
                dst,
            };
            entries[dst as usize].push((probe, model.rtt_ms(2.0 * one_way, &ctx)));
            let trace = trace_from_path(
                topo,
                model,
                nonresponse_prob,
                probe,
                dst,
                &router_cums,
                one_way,
            );
            snap.traces.insert((probe, dst_host.ip), trace);
        }
    }
    for (dst, probe_entries) in entries.into_iter().enumerate() {
        snap.delays.insert(
            topo.hosts[dst].ip,
            DelayVector::new(probe_entries).expect("probes exist"),
        );
    }
    Ok(snap)
}

/// Live measurement source backed by the simulator.
pub struct SimSource<'a> {
    pub topo: &'a SimTopology,
    pub model: Box<dyn DelayModel>,
    pub nonresponse_prob: f64,
}

impl<'a> SimSource<'a> {
    pub fn new(topo: &'a SimTopology, config: &SimConfig) -> Result<Self, SimError> {
        Ok(Self {
            topo,
            model: build_delay_model(&config.delay)?,
            nonresponse_prob: config.trace_nonresponse_prob,
        })
    }
}

impl MeasurementSource for SimSource<'_> {
    fn kind(&self) -> &'static str {
        "sim"
    }

    fn probe_count(&self) -> usize {
        self.topo.probe_count
    }

    fn probe_position(&self, probe: ProbeId) -> Option<GeoCoordinate> {
        if (probe as usize) < self.topo.probe_count {
            Some(self.topo.hosts[probe as usize].position)
        } else {
            None
        }
    }

    fn rtt_ms(&self, probe: ProbeId, dst: Ipv4Addr) -> Option<f64> {
        let host = self.topo.host_by_ip(dst)?;
        ping(self.topo, self.model.as_ref(), probe, host.id).ok()
    }

    fn traceroute(&self, probe: ProbeId, dst: Ipv4Addr) -> Option<TraceRoute> {
        let host = self.topo.host_by_ip(dst)?;
        traceroute(
            self.topo,
            self.model.as_ref(),
            self.nonresponse_prob,
            probe,
            host.id,
        )
        .ok()
    }
}

/// Topology file: versioned, line-delimited, byte-stable.
pub fn topology_to_text(topo: &SimTopology) -> String {
    let mut out = String::from(TOPOLOGY_HEADER);
    out.push('\n');
    out.push_str(&format!("seed\t{}\n", topo.seed));
    out.push_str(&format!("speed_km_per_ms\t{}\n", topo.speed_km_per_ms));
    out.push_str(&format!("probes\t{}\n", topo.probe_count));
    for r in &topo.routers {
        out.push_str(&format!(
            "router\t{}\t{}\t{}\t{}\t{}\n",
            r.id,
            r.position.lat(),
            r.position.lon(),
            r.xy.0,
            r.xy.1
        ));
    }
    for &(u, v, w) in &topo.edges {
        out.push_str(&format!("edge\t{u}\t{v}\t{w}\n"));
    }
    for h in &topo.hosts {
        out.push_str(&format!(
            "host\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            h.id,
            h.ip,
            h.position.lat(),
            h.position.lon(),
            h.router,
            h.access_delay_ms,
            h.xy.0,
            h.xy.1
        ));
    }
    out
}

pub fn write_topology(topo: &SimTopology, path: &Path) -> Result<(), SimError> {
    std::fs::write(path, topology_to_text(topo)).map_err(|source| SimError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn topology_from_text(text: &str) -> Result<SimTopology, SimError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == TOPOLOGY_HEADER => {}
        _ => return Err(SimError::BadHeader),
    }
    let mut seed = 0u64;
    let mut speed = 0.0f64;
    let mut probe_count = 0usize;
    let mut routers = Vec::new();
    let mut edges = Vec::new();
    let mut hosts: Vec<Host> = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        let bad = |reason: &str| SimError::TopologyParse {
            line,
            reason: reason.to_string(),
        };
        macro_rules! field {
            ($i:expr, $what:expr) => {
                fields
                    .get($i)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad($what))?
            };
        }
        match fields[0] {
            "seed" => seed = field!(1, "bad seed"),
            "speed_km_per_ms" => speed = field!(1, "bad speed"),
            "probes" => probe_count = field!(1, "bad probe count"),
            "router" => {
                let id: u32 = field!(1, "bad router id");
                let lat: f64 = field!(2, "bad lat");
                let lon: f64 = field!(3, "bad lon");
                let x: f64 = field!(4, "bad x");
                let y: f64 = field!(5, "bad y");
                routers.push(Router {
                    id,
                    position: GeoCoordinate::new(lat, lon).map_err(|e| bad(&e.to_string()))?,
                    xy: (x, y),
                });
            }
            "edge" => {
                let u: u32 = field!(1, "bad edge endpoint");
                let v: u32 = field!(2, "bad edge endpoint");
                let w: f64 = field!(3, "bad edge delay");
                edges.push((u, v, w));
            }
            "host" => {
                let id: u32 = field!(1, "bad host id");
                let ip: Ipv4Addr = field!(2, "bad ip");
                let lat: f64 = field!(3, "bad lat");
                let lon: f64 = field!(4, "bad lon");
                let router: u32 = field!(5, "bad router");
                let access: f64 = field!(6, "bad access delay");
                let x: f64 = field!(7, "bad x");
                let y: f64 = field!(8, "bad y");
                hosts.push(Host {
                    id,
                    ip,
                    position: GeoCoordinate::new(lat, lon).map_err(|e| bad(&e.to_string()))?,
                    router,
                    access_delay_ms: access,
                    xy: (x, y),
                });
            }
            other => return Err(bad(&format!("unknown record {other:?}"))),
        }
    }
    let mut adjacency = vec![Vec::new(); routers.len()];
    for &(u, v, w) in &edges {
        adjacency[u as usize].push((v, w));
        adjacency[v as usize].push((u, w));
    }
    let ip_index = hosts.iter().map(|h| (h.ip, h.id)).collect();
    Ok(SimTopology {
        routers,
        edges,
        hosts,
        probe_count,
        seed,
        speed_km_per_ms: speed,
        adjacency,
        ip_index,
    })
}

pub fn read_topology(path: &Path) -> Result<SimTopology, SimError> {
    let text = std::fs::read_to_string(path).map_err(|source| SimError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    topology_from_text(&text)
}
