//! Delay vectors, traceroutes, and the measurement-source seam.
//!
//! A [`MeasurementSource`] abstracts where RTTs and routes come from: the
//! deterministic simulator answers live, a [`Snapshot`] replays a serialized
//! measurement bundle. Live Internet probing would be a third implementation
//! behind the same trait.

use std::collections::BTreeMap;
use std::fmt;
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

pub type ProbeId = u32;

pub const SNAPSHOT_HEADER: &str = "#geomark snapshot v1";

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("delay vector must contain at least one probe entry")]
    EmptyDelayVector,
    #[error("RTT for probe {probe} must be finite and non-negative, got {rtt}")]
    InvalidRtt { probe: ProbeId, rtt: f64 },
    #[error("traceroute cumulative RTTs must be non-decreasing (hop {hop})")]
    NonMonotoneTrace { hop: usize },
    #[error("cannot access snapshot {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("snapshot line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("file does not look like a snapshot (missing `{SNAPSHOT_HEADER}` header)")]
    BadHeader,
}

/// Per-probe RTTs toward one destination. Probes without a measurement are
/// simply absent.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayVector {
    rtts: BTreeMap<ProbeId, f64>,
}

impl DelayVector {
    pub fn new(entries: impl IntoIterator<Item = (ProbeId, f64)>) -> Result<Self, MeasureError> {
        let mut rtts = BTreeMap::new();
        for (probe, rtt) in entries {
            if !rtt.is_finite() || rtt < 0.0 {
                return Err(MeasureError::InvalidRtt { probe, rtt });
            }
            rtts.insert(probe, rtt);
        }
        if rtts.is_empty() {
            return Err(MeasureError::EmptyDelayVector);
        }
        Ok(Self { rtts })
    }

    pub fn get(&self, probe: ProbeId) -> Option<f64> {
        self.rtts.get(&probe).copied()
    }

    pub fn len(&self) -> usize {
        self.rtts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rtts.is_empty()
    }

    /// Entries in ascending probe order.
    pub fn iter(&self) -> impl Iterator<Item = (ProbeId, f64)> + '_ {
        self.rtts.iter().map(|(&p, &r)| (p, r))
    }

    pub fn probes(&self) -> impl Iterator<Item = ProbeId> + '_ {
        self.rtts.keys().copied()
    }

    /// Restrict to a probe subset; `None` if nothing remains.
    pub fn restricted(&self, probes: &[ProbeId]) -> Option<Self> {
        let rtts: BTreeMap<ProbeId, f64> = probes
            .iter()
            .filter_map(|p| self.rtts.get(p).map(|&r| (*p, r)))
            .collect();
        if rtts.is_empty() {
            None
        } else {
            Some(Self { rtts })
        }
    }
}

/// A node appearing on a traceroute path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HopNode {
    Router(u32),
    Host(Ipv4Addr),
}

impl fmt::Display for HopNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HopNode::Router(id) => write!(f, "r{id}"),
            HopNode::Host(ip) => write!(f, "h{ip}"),
        }
    }
}

impl HopNode {
    pub fn parse(s: &str) -> Option<Self> {
        if let Some(rest) = s.strip_prefix('r') {
            rest.parse().ok().map(HopNode::Router)
        } else if let Some(rest) = s.strip_prefix('h') {
            rest.parse().ok().map(HopNode::Host)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceHop {
    pub node: HopNode,
    pub cum_rtt_ms: f64,
}

/// One traceroute from a probe toward a destination. Hops carry cumulative
/// RTTs and must be non-decreasing; the final hop is the destination host
/// when the route is complete.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRoute {
    pub probe: ProbeId,
    pub destination: Ipv4Addr,
    pub hops: Vec<TraceHop>,
    pub complete: bool,
}

impl TraceRoute {
    pub fn new(
        probe: ProbeId,
        destination: Ipv4Addr,
        hops: Vec<TraceHop>,
        complete: bool,
    ) -> Result<Self, MeasureError> {
        let mut prev = 0.0_f64;
        for (i, hop) in hops.iter().enumerate() {
            if !hop.cum_rtt_ms.is_finite() || hop.cum_rtt_ms + 1e-9 < prev {
                return Err(MeasureError::NonMonotoneTrace { hop: i });
            }
            prev = hop.cum_rtt_ms;
        }
        Ok(Self {
            probe,
            destination,
            hops,
            complete,
        })
    }

    /// Router hops only (the destination host and any host hops excluded).
    pub fn router_hops(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.hops.iter().filter_map(|h| match h.node {
            HopNode::Router(id) => Some((id, h.cum_rtt_ms)),
            HopNode::Host(_) => None,
        })
    }
}

/// Where delay vectors and traceroutes come from.
pub trait MeasurementSource {
    /// Short name for reports ("sim", "snapshot", ...).
    fn kind(&self) -> &'static str;

    /// Number of probes; probe ids are `0..probe_count`.
    fn probe_count(&self) -> usize;

    /// Where a probe sits. Vantage-point positions are operator knowledge;
    /// the constraint-circle path cannot work without them.
    fn probe_position(&self, probe: ProbeId) -> Option<crate::geo::GeoCoordinate>;

    /// RTT in milliseconds from a probe to a destination, if measurable.
    fn rtt_ms(&self, probe: ProbeId, dst: Ipv4Addr) -> Option<f64>;

    /// Traceroute from a probe to a destination, if measurable.
    fn traceroute(&self, probe: ProbeId, dst: Ipv4Addr) -> Option<TraceRoute>;

    /// Full delay vector toward a destination over all probes.
    fn delay_vector(&self, dst: Ipv4Addr) -> Option<DelayVector> {
        let entries: Vec<(ProbeId, f64)> = (0..self.probe_count() as ProbeId)
            .filter_map(|p| self.rtt_ms(p, dst).map(|r| (p, r)))
            .collect();
        DelayVector::new(entries).ok()
    }
}

/// An immutable measurement bundle: every delay vector and traceroute taken
/// in one pass, replayable as a [`MeasurementSource`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Snapshot {
    pub probe_count: usize,
    pub probe_positions: BTreeMap<ProbeId, crate::geo::GeoCoordinate>,
    pub delays: BTreeMap<Ipv4Addr, DelayVector>,
    pub traces: BTreeMap<(ProbeId, Ipv4Addr), TraceRoute>,
}

impl MeasurementSource for Snapshot {
    fn kind(&self) -> &'static str {
        "snapshot"
    }

    fn probe_count(&self) -> usize {
        self.probe_count
    }

    fn probe_position(&self, probe: ProbeId) -> Option<crate::geo::GeoCoordinate> {
        self.probe_positions.get(&probe).copied()
    }

    fn rtt_ms(&self, probe: ProbeId, dst: Ipv4Addr) -> Option<f64> {
        self.delays.get(&dst).and_then(|v| v.get(probe))
    }

    fn traceroute(&self, probe: ProbeId, dst: Ipv4Addr) -> Option<TraceRoute> {
        self.traces.get(&(probe, dst)).cloned()
    }

    fn delay_vector(&self, dst: Ipv4Addr) -> Option<DelayVector> {
        self.delays.get(&dst).cloned()
    }
}

impl Snapshot {
    /// Serialize to the versioned line format. Deterministic: map iteration
    /// is ordered and floats use shortest-roundtrip formatting.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(SNAPSHOT_HEADER);
        out.push('\n');
        out.push_str(&format!("probes\t{}\n", self.probe_count));
        for (probe, pos) in &self.probe_positions {
            out.push_str(&format!("probe-pos\t{probe}\t{}\t{}\n", pos.lat(), pos.lon()));
        }
        for (ip, vector) in &self.delays {
            for (probe, rtt) in vector.iter() {
                out.push_str(&format!("rtt\t{ip}\t{probe}\t{rtt}\n"));
            }
        }
        for ((probe, ip), trace) in &self.traces {
            let hops: Vec<String> = trace
                .hops
                .iter()
                .map(|h| format!("{}:{}", h.node, h.cum_rtt_ms))
                .collect();
            out.push_str(&format!(
                "trace\t{probe}\t{ip}\t{}\t{}\n",
                if trace.complete { 1 } else { 0 },
                hops.join(" ")
            ));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), MeasureError> {
        std::fs::write(path, self.to_text()).map_err(|source| MeasureError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn from_text(text: &str) -> Result<Self, MeasureError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim_end() == SNAPSHOT_HEADER => {}
            _ => return Err(MeasureError::BadHeader),
        }
        let mut probe_count = 0usize;
        let mut probe_positions = BTreeMap::new();
        let mut delays: BTreeMap<Ipv4Addr, Vec<(ProbeId, f64)>> = BTreeMap::new();
        let mut traces = BTreeMap::new();
        for (idx, raw) in lines {
            let line = idx + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = raw.split('\t').collect();
            let parse_err = |reason: &str| MeasureError::Parse {
                line,
                reason: reason.to_string(),
            };
            match fields[0] {
                "probes" => {
                    probe_count = fields
                        .get(1)
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| parse_err("bad probe count"))?;
                }
                "probe-pos" => {
                    if fields.len() != 4 {
                        return Err(parse_err("probe-pos needs 4 fields"));
                    }
                    let probe: ProbeId =
                        fields[1].parse().map_err(|_| parse_err("bad probe"))?;
                    let lat: f64 = fields[2].parse().map_err(|_| parse_err("bad lat"))?;
                    let lon: f64 = fields[3].parse().map_err(|_| parse_err("bad lon"))?;
                    let pos = crate::geo::GeoCoordinate::new(lat, lon)
                        .map_err(|e| parse_err(&e.to_string()))?;
                    probe_positions.insert(probe, pos);
                }
                "rtt" => {
                    if fields.len() != 4 {
                        return Err(parse_err("rtt needs 4 fields"));
                    }
                    let ip: Ipv4Addr = fields[1].parse().map_err(|_| parse_err("bad ip"))?;
                    let probe: ProbeId = fields[2].parse().map_err(|_| parse_err("bad probe"))?;
                    let rtt: f64 = fields[3].parse().map_err(|_| parse_err("bad rtt"))?;
                    delays.entry(ip).or_default().push((probe, rtt));
                }
                "trace" => {
                    if fields.len() != 5 {
                        return Err(parse_err("trace needs 5 fields"));
                    }
                    let probe: ProbeId = fields[1].parse().map_err(|_| parse_err("bad probe"))?;
                    let ip: Ipv4Addr = fields[2].parse().map_err(|_| parse_err("bad ip"))?;
                    let complete = match fields[3] {
                        "1" => true,
                        "0" => false,
                        _ => return Err(parse_err("bad complete flag")),
                    };
                    let mut hops = Vec::new();
                    if !fields[4].is_empty() {
                        for part in fields[4].split(' ') {
                            let (node, rtt) = part
                                .rsplit_once(':')
                                .ok_or_else(|| parse_err("bad hop"))?;
                            let node =
                                HopNode::parse(node).ok_or_else(|| parse_err("bad hop node"))?;
                            let cum_rtt_ms: f64 =
                                rtt.parse().map_err(|_| parse_err("bad hop rtt"))?;
                            hops.push(TraceHop { node, cum_rtt_ms });
                        }
                    }
                    let trace = TraceRoute::new(probe, ip, hops, complete)
                        .map_err(|e| parse_err(&e.to_string()))?;
                    traces.insert((probe, ip), trace);
                }
                other => return Err(parse_err(&format!("unknown record kind {other:?}"))),
            }
        }
        let mut built = BTreeMap::new();
        for (ip, entries) in delays {
            built.insert(ip, DelayVector::new(entries)?);
        }
        Ok(Self {
            probe_count,
            probe_positions,
            delays: built,
            traces,
        })
    }

    pub fn read(path: &Path) -> Result<Self, MeasureError> {
        let text = std::fs::read_to_string(path).map_err(|source| MeasureError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_text(&text)
    }
}

/// Wrapper counting every measurement call; lets tests assert that pure
/// data-mining paths never touch the network.
pub struct CountingSource<'a> {
    inner: &'a dyn MeasurementSource,
    calls: AtomicU64,
}

impl<'a> CountingSource<'a> {
    pub fn new(inner: &'a dyn MeasurementSource) -> Self {
        Self {
            inner,
            calls: AtomicU64::new(0),
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

impl MeasurementSource for CountingSource<'_> {
    fn kind(&self) -> &'static str {
        self.inner.kind()
    }

    fn probe_count(&self) -> usize {
        self.inner.probe_count()
    }

    fn probe_position(&self, probe: ProbeId) -> Option<crate::geo::GeoCoordinate> {
        self.inner.probe_position(probe)
    }

    fn rtt_ms(&self, probe: ProbeId, dst: Ipv4Addr) -> Option<f64> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.rtt_ms(probe, dst)
    }

    fn traceroute(&self, probe: ProbeId, dst: Ipv4Addr) -> Option<TraceRoute> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.traceroute(probe, dst)
    }

    fn delay_vector(&self, dst: Ipv4Addr) -> Option<DelayVector> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.delay_vector(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ip(last: u8) -> Ipv4Addr {
        Ipv4Addr::new(10, 0, 0, last)
    }

    #[test]
    fn delay_vector_rejects_bad_entries() {
        assert!(matches!(
            DelayVector::new([]),
            Err(MeasureError::EmptyDelayVector)
        ));
        assert!(matches!(
            DelayVector::new([(0, -1.0)]),
            Err(MeasureError::InvalidRtt { .. })
        ));
        assert!(DelayVector::new([(0, 0.0), (3, 12.5)]).is_ok());
    }

    #[test]
    fn trace_monotonicity_enforced() {
        let hops = vec![
            TraceHop {
                node: HopNode::Router(1),
                cum_rtt_ms: 5.0,
            },
            TraceHop {
                node: HopNode::Router(2),
                cum_rtt_ms: 4.0,
            },
        ];
        assert!(matches!(
            TraceRoute::new(0, ip(1), hops, true),
            Err(MeasureError::NonMonotoneTrace { hop: 1 })
        ));
    }

    #[test]
    fn snapshot_text_roundtrip() {
        let mut snap = Snapshot {
            probe_count: 2,
            ..Snapshot::default()
        };
        snap.delays
            .insert(ip(5), DelayVector::new([(0, 10.25), (1, 11.5)]).unwrap());
        snap.traces.insert(
            (0, ip(5)),
            TraceRoute::new(
                0,
                ip(5),
                vec![
                    TraceHop {
                        node: HopNode::Router(3),
                        cum_rtt_ms: 4.5,
                    },
                    TraceHop {
                        node: HopNode::Host(ip(5)),
                        cum_rtt_ms: 10.25,
                    },
                ],
                true,
            )
            .unwrap(),
        );
        let text = snap.to_text();
        let back = Snapshot::from_text(&text).unwrap();
        assert_eq!(back, snap);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn snapshot_header_required() {
        assert!(matches!(
            Snapshot::from_text("probes\t3\n"),
            Err(MeasureError::BadHeader)
        ));
    }

    #[test]
    fn counting_source_counts() {
        let snap = Snapshot {
            probe_count: 1,
            ..Snapshot::default()
        };
        let counter = CountingSource::new(&snap);
        assert_eq!(counter.calls(), 0);
        let _ = counter.rtt_ms(0, ip(9));
        let _ = counter.delay_vector(ip(9));
        assert_eq!(counter.calls(), 2);
    }
}
