//! Seeding, hashing, and small numeric helpers shared across modules.
//!
//! Everything here is deterministic and platform-independent: reproducible
//! output files are a hard requirement, so no use of `DefaultHasher` or
//! process-dependent state.

use rand::Rng;

/// FNV-1a 64-bit hash. Stable across platforms and releases.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Derive a sub-seed from a master seed and a label, so independent
/// components never share an RNG stream.
pub fn subseed(seed: u64, label: &str) -> u64 {
    let mut buf = Vec::with_capacity(8 + label.len());
    buf.extend_from_slice(&seed.to_le_bytes());
    buf.extend_from_slice(label.as_bytes());
    fnv1a(&buf)
}

/// Sub-seed keyed by a label and an index (trial numbers, hop numbers, ...).
pub fn subseed_n(seed: u64, label: &str, n: u64) -> u64 {
    let mut buf = Vec::with_capacity(16 + label.len());
    buf.extend_from_slice(&seed.to_le_bytes());
    buf.extend_from_slice(label.as_bytes());
    buf.extend_from_slice(&n.to_le_bytes());
    fnv1a(&buf)
}

/// Standard-normal sample via Box-Muller. Consumes two uniforms from `rng`.
pub fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    // u1 in (0, 1] so the log is finite.
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Median of a slice. Returns NaN on empty input.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("median over NaN"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Parse a float that was written with Rust's shortest-roundtrip formatting.
pub fn parse_f64(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}
