//! Landmark mining orchestration: pages in, landmarks out.
//!
//! Each page runs through proxy filtering, clue extraction (tagger plus
//! organization dictionary), and a decision ladder: a complete street
//! address geocodes directly; an organization name with a region clue
//! queries the geocoder inside that region; an organization name alone gets
//! a region from the CBG constraint circles. When several candidate
//! coordinates survive, the measurement-based selection picks one.
//!
//! Whois and crawling are file-backed fixtures behind explicit seams; the
//! geocoder is an exact-match (normalized) string table with great-circle
//! region filtering.

use std::collections::{BTreeMap, BTreeSet};
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::cbg::{self, CandidateCoordinate};
use crate::config::EngineConfig;
use crate::geo::{great_circle_distance, DistanceKm, GeoCoordinate};
use crate::geolocate::{select_probes, Landmark, LandmarkSource};
use crate::measure::MeasurementSource;
use crate::orgdict::OrgDictionary;
use crate::selection;
use crate::tagger::model::TaggerParams;
use crate::tagger::scheme::EntityType;
use crate::tagger::tokenize;

pub const MINING_REPORT_HEADER: &str = "#geomark mining-report v1";

/// Region radius around a geocoded ZIP clue.
pub const ZIP_REGION_RADIUS_KM: f64 = 10.0;
/// Region radius around a geocoded city clue.
pub const CITY_REGION_RADIUS_KM: f64 = 50.0;
/// Region radius around a geocoded state clue.
pub const STATE_REGION_RADIUS_KM: f64 = 500.0;

#[derive(Debug, Error)]
pub enum MineError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("page file name {0:?} is not <ipv4>_<home|contact>[.txt]")]
    BadPageName(String),
}

/// What kind of page a record came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PageKind {
    Home,
    Contact,
}

impl PageKind {
    pub fn code(&self) -> &'static str {
        match self {
            PageKind::Home => "home",
            PageKind::Contact => "contact",
        }
    }
}

/// One crawled page fixture.
#[derive(Debug, Clone, PartialEq)]
pub struct PageRecord {
    pub ip: Ipv4Addr,
    pub url: String,
    pub raw_text: String,
    pub kind: PageKind,
}

impl PageRecord {
    pub fn id(&self) -> String {
        format!("{}_{}", self.ip, self.kind.code())
    }
}

/// The five extractable clue slots for one page.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FormattedAddress {
    pub detailed: Option<String>,
    pub city: Option<String>,
    pub state: Option<String>,
    pub zip: Option<String>,
    pub organization: Option<String>,
}

impl FormattedAddress {
    /// The four-tuple (detailed, city, state, zip) decides a coordinate.
    pub fn is_complete(&self) -> bool {
        self.detailed.is_some() && self.city.is_some() && self.state.is_some() && self.zip.is_some()
    }

    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    /// Geocoder query string: detailed, city, state, zip, comma-separated.
    pub fn four_tuple_query(&self) -> Option<String> {
        if !self.is_complete() {
            return None;
        }
        Some(format!(
            "{}, {}, {} {}",
            self.detailed.as_deref().unwrap(),
            self.city.as_deref().unwrap(),
            self.state.as_deref().unwrap(),
            self.zip.as_deref().unwrap()
        ))
    }

    /// Region clues in decreasing specificity: zip, city, state.
    fn region_clues(&self) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        if let Some(z) = &self.zip {
            out.push((z.clone(), ZIP_REGION_RADIUS_KM));
        }
        if let Some(c) = &self.city {
            out.push((c.clone(), CITY_REGION_RADIUS_KM));
        }
        if let Some(s) = &self.state {
            out.push((s.clone(), STATE_REGION_RADIUS_KM));
        }
        out
    }
}

/// Deterministic file-backed geocoder: normalized exact-match queries with
/// optional great-circle region filtering.
#[derive(Debug, Clone, Default)]
pub struct GeocoderStub {
    entries: BTreeMap<String, Vec<(String, GeoCoordinate)>>,
}

/// Lowercase, strip punctuation, collapse whitespace.
pub fn normalize_query(query: &str) -> String {
    let lowered = query.to_lowercase();
    let stripped: String = lowered
        .chars()
        .map(|c| if ",.;:()\"'".contains(c) { ' ' } else { c })
        .collect();
    stripped.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl GeocoderStub {
    pub fn insert(&mut self, query: &str, name: &str, position: GeoCoordinate) {
        self.entries
            .entry(normalize_query(query))
            .or_default()
            .push((name.to_string(), position));
    }

    /// All entries for a query, optionally restricted to a region.
    pub fn geocode(
        &self,
        query: &str,
        region: Option<(GeoCoordinate, DistanceKm)>,
    ) -> Vec<(String, GeoCoordinate)> {
        let Some(hits) = self.entries.get(&normalize_query(query)) else {
            return Vec::new();
        };
        hits.iter()
            .filter(|(_, pos)| match region {
                None => true,
                Some((center, radius)) => great_circle_distance(center, *pos).km() <= radius.km(),
            })
            .cloned()
            .collect()
    }

    /// Load a TSV table: query, name, lat, lon.
    pub fn read(path: &Path) -> Result<Self, MineError> {
        let text = std::fs::read_to_string(path).map_err(|source| MineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut stub = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = raw.split('\t').collect();
            let bad = |reason: &str| MineError::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                reason: reason.to_string(),
            };
            if fields.len() != 4 {
                return Err(bad("expected 4 tab-separated fields"));
            }
            let lat: f64 = fields[2].parse().map_err(|_| bad("bad latitude"))?;
            let lon: f64 = fields[3].parse().map_err(|_| bad("bad longitude"))?;
            let pos = GeoCoordinate::new(lat, lon).map_err(|e| bad(&e.to_string()))?;
            stub.insert(fields[0], fields[1], pos);
        }
        Ok(stub)
    }
}

/// Whois fixture: ip -> organization name.
pub type WhoisTable = BTreeMap<Ipv4Addr, String>;

pub fn read_whois(path: &Path) -> Result<WhoisTable, MineError> {
    let text = std::fs::read_to_string(path).map_err(|source| MineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut table = WhoisTable::new();
    for (idx, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let (ip, org) = raw.split_once('\t').ok_or_else(|| MineError::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            reason: "expected ip<TAB>org".to_string(),
        })?;
        let ip: Ipv4Addr = ip.parse().map_err(|_| MineError::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            reason: format!("bad ip {ip:?}"),
        })?;
        table.insert(ip, org.trim().to_string());
    }
    Ok(table)
}

/// Proxy-provider blacklist: case-insensitive organization names.
#[derive(Debug, Clone, Default)]
pub struct Blacklist {
    names: BTreeSet<String>,
}

impl Blacklist {
    pub fn from_names<S: AsRef<str>>(names: impl IntoIterator<Item = S>) -> Self {
        Self {
            names: names
                .into_iter()
                .map(|n| n.as_ref().trim().to_lowercase())
                .filter(|n| !n.is_empty())
                .collect(),
        }
    }

    pub fn read(path: &Path) -> Result<Self, MineError> {
        let text = std::fs::read_to_string(path).map_err(|source| MineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::from_names(text.lines()))
    }

    pub fn contains(&self, org: &str) -> bool {
        self.names.contains(&org.trim().to_lowercase())
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Drop pages whose whois organization is blacklisted. Pages without a
/// whois entry pass through.
pub fn filter_proxies(
    pages: Vec<PageRecord>,
    whois: &WhoisTable,
    blacklist: &Blacklist,
) -> (Vec<PageRecord>, usize) {
    let before = pages.len();
    let kept: Vec<PageRecord> = pages
        .into_iter()
        .filter(|p| match whois.get(&p.ip) {
            Some(org) => !blacklist.contains(org),
            None => true,
        })
        .collect();
    let dropped = before - kept.len();
    (kept, dropped)
}

/// Read one page file named `<ip>_<kind>[.txt]`.
pub fn read_page(path: &Path) -> Result<PageRecord, MineError> {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| MineError::BadPageName(path.display().to_string()))?;
    let stem = name.strip_suffix(".txt").unwrap_or(name);
    let (ip, kind) = stem
        .rsplit_once('_')
        .ok_or_else(|| MineError::BadPageName(name.to_string()))?;
    let ip: Ipv4Addr = ip
        .parse()
        .map_err(|_| MineError::BadPageName(name.to_string()))?;
    let kind = match kind {
        "home" => PageKind::Home,
        "contact" => PageKind::Contact,
        _ => return Err(MineError::BadPageName(name.to_string())),
    };
    let raw_text = std::fs::read_to_string(path).map_err(|source| MineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(PageRecord {
        ip,
        url: format!("file://{name}"),
        raw_text,
        kind,
    })
}

/// Read every page file in a directory, sorted by file name.
pub fn read_pages_dir(dir: &Path) -> Result<Vec<PageRecord>, MineError> {
    let mut names: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|source| MineError::Io {
            path: dir.to_path_buf(),
            source,
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    names.sort();
    names.iter().map(|p| read_page(p)).collect()
}

/// Extract the five clue slots from a page: tagger entities take precedence;
/// the dictionary fills the organization when the tagger misses it.
pub fn extract_clues(
    page: &PageRecord,
    params: &TaggerParams,
    dict: &OrgDictionary,
) -> FormattedAddress {
    let tokens = tokenize(&page.raw_text);
    if tokens.is_empty() {
        return FormattedAddress::default();
    }
    let tags = params
        .predict_tags(&tokens)
        .expect("tokenized page is non-empty");
    let entities =
        crate::tagger::scheme::decode_bieso(&tokens, &tags).expect("aligned by construction");
    let mut out = FormattedAddress::default();
    for e in &entities {
        let slot = match e.entity_type {
            EntityType::Detailed => &mut out.detailed,
            EntityType::City => &mut out.city,
            EntityType::State => &mut out.state,
            EntityType::Zip => &mut out.zip,
            EntityType::Organization => &mut out.organization,
        };
        if slot.is_none() {
            *slot = Some(e.text.clone());
        }
    }
    if out.organization.is_none() {
        if let Some(m) = dict.match_organizations(&tokens).first() {
            out.organization = Some(m.entity.text.clone());
        }
    }
    out
}

/// Outcome of mining one page.
#[derive(Debug, Clone, PartialEq)]
pub enum MineOutcome {
    Mined(Landmark),
    /// No clues at all on the page.
    NoClues,
    /// Complete address that the geocoder does not know.
    GeocoderMiss,
    /// Organization path found no candidate coordinates.
    NoCandidates,
    /// Constraint circles left no consistent region.
    RegionInconsistent,
    /// Organization-only path needs RTTs but the target is unmeasurable.
    Unmeasurable,
}

impl MineOutcome {
    pub fn reason(&self) -> &'static str {
        match self {
            MineOutcome::Mined(_) => "mined",
            MineOutcome::NoClues => "no clues extracted",
            MineOutcome::GeocoderMiss => "geocoder miss on complete address",
            MineOutcome::NoCandidates => "no candidate coordinates",
            MineOutcome::RegionInconsistent => "constraint region inconsistent",
            MineOutcome::Unmeasurable => "target unmeasurable",
        }
    }
}

/// Branch (a): complete four-tuple, geocode directly. Never touches
/// measurements.
fn mine_full_address(
    ip: Ipv4Addr,
    extraction: &FormattedAddress,
    geocoder: &GeocoderStub,
) -> MineOutcome {
    let query = extraction.four_tuple_query().expect("checked complete");
    let hits = geocoder.geocode(&query, None);
    match hits.first() {
        Some((_, pos)) => MineOutcome::Mined(Landmark::new(ip, *pos, LandmarkSource::FullAddress)),
        None => MineOutcome::GeocoderMiss,
    }
}

/// Landmarks within the vicinity radius of a center, nearest first, capped.
fn vicinity_landmarks(
    db: &[Landmark],
    center: GeoCoordinate,
    radius_km: f64,
    cap: usize,
    exclude_ip: Ipv4Addr,
) -> Vec<(Ipv4Addr, GeoCoordinate)> {
    let mut with_distance: Vec<(f64, &Landmark)> = db
        .iter()
        .filter(|l| l.ip != exclude_ip)
        .map(|l| (great_circle_distance(center, l.position).km(), l))
        .filter(|(d, _)| *d <= radius_km)
        .collect();
    with_distance.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("finite distances")
            .then_with(|| a.1.ip.cmp(&b.1.ip))
    });
    with_distance
        .into_iter()
        .take(cap)
        .map(|(_, l)| (l.ip, l.position))
        .collect()
}

/// Shared tail of branches (b) and (c): merge close candidates, then decide
/// directly (one candidate) or by measurement-based selection (several).
/// When selection cannot run, the top candidate by merged count wins.
fn settle_candidates(
    ip: Ipv4Addr,
    candidates: Vec<CandidateCoordinate>,
    region_center: GeoCoordinate,
    region_radius_km: f64,
    db: &[Landmark],
    source: &dyn MeasurementSource,
    config: &EngineConfig,
) -> MineOutcome {
    let candidates = cbg::merge_close(&candidates, config.merge_threshold_km);
    match candidates.len() {
        0 => MineOutcome::NoCandidates,
        1 => MineOutcome::Mined(Landmark::new(
            ip,
            candidates[0].position,
            LandmarkSource::OrgNameRegion,
        )),
        _ => {
            let fallback = || {
                let mut best = &candidates[0];
                for c in &candidates[1..] {
                    let better = c.merged_count > best.merged_count
                        || (c.merged_count == best.merged_count
                            && (c.position.lat(), c.position.lon())
                                < (best.position.lat(), best.position.lon()));
                    if better {
                        best = c;
                    }
                }
                MineOutcome::Mined(Landmark::new(
                    ip,
                    best.position,
                    LandmarkSource::OrgNameRegion,
                ))
            };
            let Some(full_vector) = source.delay_vector(ip) else {
                return fallback();
            };
            let probes = select_probes(&full_vector, config.k_probes);
            let nearby = vicinity_landmarks(
                db,
                region_center,
                region_radius_km * config.vicinity_radius_factor,
                config.k_candidates,
                ip,
            );
            let measurements = selection::measure_landmarks(source, &probes, &nearby);
            let Some((target_vector, target_routes)) =
                selection::measure_target(source, &probes, ip)
            else {
                return fallback();
            };
            match selection::select_coordinate(
                &candidates,
                &measurements,
                &target_vector,
                &target_routes,
                config.alpha_delay,
                config.beta_topo,
            ) {
                Ok((winner, _, _)) => MineOutcome::Mined(Landmark::new(
                    ip,
                    winner.position,
                    LandmarkSource::OrgNameSelection,
                )),
                Err(_) => fallback(),
            }
        }
    }
}

/// The decision ladder for one page.
///
/// (a) complete four-tuple: geocode directly, measurement-free;
/// (b) organization plus a region clue: region-constrained geocoder query;
/// (c) organization only: CBG constraint circles bound the search region.
pub fn mine_landmark(
    page: &PageRecord,
    extraction: &FormattedAddress,
    geocoder: &GeocoderStub,
    source: &dyn MeasurementSource,
    db: &[Landmark],
    config: &EngineConfig,
) -> MineOutcome {
    if extraction.is_complete() {
        return mine_full_address(page.ip, extraction, geocoder);
    }
    let Some(org) = &extraction.organization else {
        return MineOutcome::NoClues;
    };

    // Branch (b): geocode the most specific region clue, query inside it.
    for (clue, radius_km) in extraction.region_clues() {
        let Some((_, center)) = geocoder.geocode(&clue, None).into_iter().next() else {
            continue;
        };
        let radius = DistanceKm::new(radius_km).expect("constant radius");
        let candidates: Vec<CandidateCoordinate> = geocoder
            .geocode(org, Some((center, radius)))
            .into_iter()
            .map(|(name, pos)| CandidateCoordinate::labeled(pos, name))
            .collect();
        if candidates.is_empty() {
            return MineOutcome::NoCandidates;
        }
        return settle_candidates(page.ip, candidates, center, radius_km, db, source, config);
    }

    // Branch (c): constraint circles from all probes that can reach the ip.
    let Some(vector) = source.delay_vector(page.ip) else {
        return MineOutcome::Unmeasurable;
    };
    let mut probe_positions = Vec::new();
    let mut rtts = Vec::new();
    for (probe, rtt) in vector.iter() {
        if let Some(pos) = source.probe_position(probe) {
            probe_positions.push(pos);
            rtts.push(rtt);
        }
    }
    let circles = match cbg::build_circles(&probe_positions, &rtts, &config.consts) {
        Ok(c) => c,
        Err(_) => return MineOutcome::Unmeasurable,
    };
    let (center, radius) = cbg::region_hint(&circles).expect("circles non-empty");
    let initial: Vec<CandidateCoordinate> = geocoder
        .geocode(org, Some((center, radius)))
        .into_iter()
        .map(|(name, pos)| CandidateCoordinate::labeled(pos, name))
        .collect();
    if initial.is_empty() {
        return MineOutcome::NoCandidates;
    }
    let surviving = cbg::filter_candidates(&circles, &initial);
    if surviving.is_empty() {
        return MineOutcome::RegionInconsistent;
    }
    settle_candidates(page.ip, surviving, center, radius.km(), db, source, config)
}

/// Mining report: tier counts plus per-page outcomes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MiningReport {
    pub pages: usize,
    pub proxy_filtered: usize,
    pub mined_full_address: usize,
    pub mined_org_region: usize,
    pub mined_org_selection: usize,
    pub skipped: Vec<(String, String)>,
}

impl MiningReport {
    pub fn mined(&self) -> usize {
        self.mined_full_address + self.mined_org_region + self.mined_org_selection
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from(MINING_REPORT_HEADER);
        out.push('\n');
        out.push_str(&format!("pages\t{}\n", self.pages));
        out.push_str(&format!("proxy_filtered\t{}\n", self.proxy_filtered));
        out.push_str(&format!("mined\t{}\n", self.mined()));
        out.push_str(&format!(
            "mined_full_address\t{}\n",
            self.mined_full_address
        ));
        out.push_str(&format!("mined_org_region\t{}\n", self.mined_org_region));
        out.push_str(&format!(
            "mined_org_selection\t{}\n",
            self.mined_org_selection
        ));
        let mut skipped = self.skipped.clone();
        skipped.sort();
        for (page, reason) in &skipped {
            out.push_str(&format!("skipped\t{page}\t{reason}\n"));
        }
        out
    }
}

/// Everything build_database needs besides the pages.
pub struct MiningDeps<'a> {
    pub params: &'a TaggerParams,
    pub dict: &'a OrgDictionary,
    pub geocoder: &'a GeocoderStub,
    pub whois: &'a WhoisTable,
    pub blacklist: &'a Blacklist,
    pub source: &'a dyn MeasurementSource,
    /// Landmarks known before this run (selection can score against them).
    pub seed_db: Vec<Landmark>,
}

/// Run the full pipeline over a page set.
///
/// Full-address pages are mined first in a pure data-mining pass, so the
/// measurement-based passes can score candidates against them. One landmark
/// per IP survives: the highest confidence tier wins.
pub fn build_database(
    pages: Vec<PageRecord>,
    deps: &MiningDeps<'_>,
    config: &EngineConfig,
) -> (Vec<Landmark>, MiningReport) {
    let mut report = MiningReport {
        pages: pages.len(),
        ..MiningReport::default()
    };
    let (kept, dropped) = filter_proxies(pages, deps.whois, deps.blacklist);
    report.proxy_filtered = dropped;

    let extractions: Vec<(PageRecord, FormattedAddress)> = kept
        .into_iter()
        .map(|p| {
            let e = extract_clues(&p, deps.params, deps.dict);
            (p, e)
        })
        .collect();

    fn absorb(mined: &mut BTreeMap<Ipv4Addr, Landmark>, lm: Landmark) {
        match mined.get(&lm.ip) {
            Some(existing) if existing.confidence >= lm.confidence => {}
            _ => {
                mined.insert(lm.ip, lm);
            }
        }
    }

    // Phase A: full-address pages, measurement-free.
    let mut mined: BTreeMap<Ipv4Addr, Landmark> = BTreeMap::new();
    let mut deferred: Vec<&(PageRecord, FormattedAddress)> = Vec::new();
    for pair in &extractions {
        let (page, extraction) = pair;
        if extraction.is_complete() {
            match mine_full_address(page.ip, extraction, deps.geocoder) {
                MineOutcome::Mined(lm) => {
                    report.mined_full_address += 1;
                    absorb(&mut mined, lm);
                }
                outcome => report
                    .skipped
                    .push((page.id(), outcome.reason().to_string())),
            }
        } else {
            deferred.push(pair);
        }
    }

    // Phase B: organization paths, scoring against seed + phase-A landmarks.
    let mut db: Vec<Landmark> = deps.seed_db.clone();
    db.extend(mined.values().cloned());
    for (page, extraction) in deferred {
        match mine_landmark(page, extraction, deps.geocoder, deps.source, &db, config) {
            MineOutcome::Mined(lm) => {
                match lm.source {
                    LandmarkSource::OrgNameRegion => report.mined_org_region += 1,
                    LandmarkSource::OrgNameSelection => report.mined_org_selection += 1,
                    _ => {}
                }
                absorb(&mut mined, lm);
            }
            outcome => report
                .skipped
                .push((page.id(), outcome.reason().to_string())),
        }
    }

    (mined.into_values().collect(), report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{CountingSource, Snapshot};

    fn coord(lat: f64, lon: f64) -> GeoCoordinate {
        GeoCoordinate::new(lat, lon).unwrap()
    }

    fn page(ip: &str, text: &str) -> PageRecord {
        PageRecord {
            ip: ip.parse().unwrap(),
            url: format!("file://{ip}_home.txt"),
            raw_text: text.to_string(),
            kind: PageKind::Home,
        }
    }

    fn complete_extraction() -> FormattedAddress {
        FormattedAddress {
            detailed: Some("800 Avenue O".into()),
            city: Some("Ely".into()),
            state: Some("NV".into()),
            zip: Some("89301".into()),
            organization: None,
        }
    }

    #[test]
    fn normalize_query_strips_punctuation_and_case() {
        assert_eq!(
            normalize_query("800 Avenue O, Ely, NV 89301"),
            "800 avenue o ely nv 89301"
        );
        assert_eq!(normalize_query("  Acme   Corp.  "), "acme corp");
    }

    #[test]
    fn geocoder_region_filtering() {
        let mut stub = GeocoderStub::default();
        stub.insert("Acme Corp", "Acme HQ", coord(40.0, -95.0));
        stub.insert("Acme Corp", "Acme Branch", coord(44.0, -95.0));
        let all = stub.geocode("acme corp", None);
        assert_eq!(all.len(), 2);
        let near = stub.geocode(
            "Acme Corp",
            Some((coord(40.1, -95.0), DistanceKm::new(50.0).unwrap())),
        );
        assert_eq!(near.len(), 1);
        assert_eq!(near[0].0, "Acme HQ");
        assert!(stub.geocode("Unknown Org", None).is_empty());
    }

    #[test]
    fn filter_proxies_set_semantics() {
        let whois: WhoisTable = [
            ("10.0.0.1".parse().unwrap(), "CloudFront Proxy".to_string()),
            ("10.0.0.2".parse().unwrap(), "Acme Corp".to_string()),
        ]
        .into_iter()
        .collect();
        let blacklist = Blacklist::from_names(["cloudfront proxy"]);
        let pages = vec![
            page("10.0.0.1", "a"),
            page("10.0.0.2", "b"),
            page("10.0.0.3", "c"),
        ];

        let (kept, dropped) = filter_proxies(pages.clone(), &whois, &blacklist);
        assert_eq!(dropped, 1);
        assert_eq!(kept.len(), 2);

        // Empty blacklist: identity.
        let (kept2, dropped2) = filter_proxies(pages.clone(), &whois, &Blacklist::default());
        assert_eq!(dropped2, 0);
        assert_eq!(kept2.len(), 3);

        // Everything blacklisted: only the page with no whois entry stays.
        let all = Blacklist::from_names(["cloudfront proxy", "acme corp"]);
        let (kept3, _) = filter_proxies(pages, &whois, &all);
        assert_eq!(kept3.len(), 1);
        assert_eq!(kept3[0].ip, "10.0.0.3".parse::<Ipv4Addr>().unwrap());
    }

    #[test]
    fn page_file_name_parsing() {
        let dir = std::env::temp_dir().join("geomark-mine-pages");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("10.0.0.9_contact.txt");
        std::fs::write(&path, "hello world").unwrap();
        let record = read_page(&path).unwrap();
        assert_eq!(record.ip, "10.0.0.9".parse::<Ipv4Addr>().unwrap());
        assert_eq!(record.kind, PageKind::Contact);
        assert_eq!(record.id(), "10.0.0.9_contact");
        std::fs::remove_file(&path).ok();
        let bad = dir.join("bogus.txt");
        std::fs::write(&bad, "x").unwrap();
        assert!(read_page(&bad).is_err());
        std::fs::remove_file(&bad).ok();
    }

    #[test]
    fn full_address_path_never_touches_measurements() {
        let mut stub = GeocoderStub::default();
        stub.insert(
            "800 Avenue O, Ely, NV 89301",
            "planted",
            coord(39.25, -114.89),
        );
        let empty = Snapshot::default();
        let counter = CountingSource::new(&empty);
        let config = EngineConfig::default();
        let outcome = mine_landmark(
            &page("10.0.0.5", "800 Avenue O, Ely, NV 89301"),
            &complete_extraction(),
            &stub,
            &counter,
            &[],
            &config,
        );
        match outcome {
            MineOutcome::Mined(lm) => {
                assert_eq!(lm.source, LandmarkSource::FullAddress);
                assert_eq!(lm.position, coord(39.25, -114.89));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(counter.calls(), 0);
    }

    #[test]
    fn geocoder_miss_on_complete_address_rejects() {
        let stub = GeocoderStub::default();
        let empty = Snapshot::default();
        let config = EngineConfig::default();
        let outcome = mine_landmark(
            &page("10.0.0.6", "text"),
            &complete_extraction(),
            &stub,
            &empty,
            &[],
            &config,
        );
        assert_eq!(outcome, MineOutcome::GeocoderMiss);
    }

    #[test]
    fn org_with_region_single_candidate() {
        let mut stub = GeocoderStub::default();
        stub.insert("Ely", "Ely, NV", coord(39.25, -114.89));
        stub.insert("Acme Corp", "Acme Ely Office", coord(39.30, -114.85));
        stub.insert("Acme Corp", "Acme Far Office", coord(45.0, -93.0));
        let extraction = FormattedAddress {
            city: Some("Ely".into()),
            organization: Some("Acme Corp".into()),
            ..FormattedAddress::default()
        };
        let empty = Snapshot::default();
        let config = EngineConfig::default();
        let outcome = mine_landmark(
            &page("10.0.0.7", "text"),
            &extraction,
            &stub,
            &empty,
            &[],
            &config,
        );
        match outcome {
            MineOutcome::Mined(lm) => {
                assert_eq!(lm.source, LandmarkSource::OrgNameRegion);
                assert_eq!(lm.position, coord(39.30, -114.85));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_extraction_is_no_clues() {
        let stub = GeocoderStub::default();
        let empty = Snapshot::default();
        let config = EngineConfig::default();
        let outcome = mine_landmark(
            &page("10.0.0.8", "nothing here"),
            &FormattedAddress::default(),
            &stub,
            &empty,
            &[],
            &config,
        );
        assert_eq!(outcome, MineOutcome::NoClues);
    }

    #[test]
    fn report_text_is_sorted_and_versioned() {
        let report = MiningReport {
            pages: 3,
            proxy_filtered: 1,
            mined_full_address: 1,
            skipped: vec![
                ("10.0.0.9_home".to_string(), "no clues extracted".to_string()),
                ("10.0.0.2_home".to_string(), "geocoder miss".to_string()),
            ],
            ..MiningReport::default()
        };
        let text = report.to_text();
        assert!(text.starts_with(MINING_REPORT_HEADER));
        let skip_lines: Vec<&str> = text.lines().filter(|l| l.starts_with("skipped")).collect();
        assert!(skip_lines[0].contains("10.0.0.2"));
        assert!(skip_lines[1].contains("10.0.0.9"));
    }
}
