//! Landmark-based IP geolocation engine.
//!
//! The pipeline mines location-indicating clues (organization names, street
//! addresses, cities, states, ZIP codes) from web-page text, turns them into
//! a landmark database, and geolocates arbitrary IPs by scoring landmarks
//! against delay and topology measurements. A deterministic synthetic-network
//! simulator stands in for live Internet measurement so every experiment is
//! reproducible from a seed.
//!
//! Module map:
//! - [`geo`] — geodesic and delay-to-distance primitives
//! - [`tagger`] — Bi-LSTM sequence tagger with a self-adaptive loss, BIESO decoding
//! - [`orgdict`] — organization-name dictionary and longest-match extraction
//! - [`cbg`] — constraint-circle candidate filtering and merging
//! - [`selection`] — measurement-based coordinate selection
//! - [`geolocate`] — end-to-end geolocation of a target IP against the landmark db
//! - [`netsim`] — deterministic synthetic-Internet generator and delay models
//! - [`measure`] — delay vectors, traceroutes, and the measurement-source seam
//! - [`mine`] — page-to-landmark mining orchestration
//! - [`config`] — engine configuration file
//! - [`store`] — landmark database persistence

pub mod cbg;
pub mod config;
pub mod geo;
pub mod geolocate;
pub mod measure;
pub mod mine;
pub mod netsim;
pub mod orgdict;
pub mod selection;
pub mod store;
pub mod tagger;
pub mod util;

pub use config::EngineConfig;
pub use geo::{DistanceKm, GeoCoordinate, MeasurementConstants};
