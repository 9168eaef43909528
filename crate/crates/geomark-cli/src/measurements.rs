//! Measurement-source loading: one `--measurements` argument accepts either
//! a serialized snapshot or a simulator config; the file header decides.
//! A sim config is measured into a snapshot up front, so both paths answer
//! queries from the same immutable bundle.

use std::path::Path;

use anyhow::{Context, Result};
use geomark::measure::{Snapshot, SNAPSHOT_HEADER};
use geomark::netsim::{self, SimConfig};

/// An owned measurement backend selected at runtime.
pub struct Measurements {
    snapshot: Snapshot,
}

impl Measurements {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read measurements {}", path.display()))?;
        let snapshot = if text.starts_with(SNAPSHOT_HEADER) {
            Snapshot::from_text(&text)
                .with_context(|| format!("parsing snapshot {}", path.display()))?
        } else {
            let config = SimConfig::parse(&text)
                .with_context(|| format!("parsing sim config {}", path.display()))?;
            let topo = netsim::generate(&config).context("generating topology")?;
            let model = netsim::build_delay_model(&config.delay)?;
            netsim::snapshot(&topo, model.as_ref(), config.trace_nonresponse_prob)
                .context("measuring snapshot")?
        };
        Ok(Self { snapshot })
    }

    pub fn source(&self) -> &Snapshot {
        &self.snapshot
    }
}
