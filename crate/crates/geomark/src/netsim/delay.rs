//! Delay models: interchangeable strategies for turning noiseless
//! propagation time into measured RTTs. Selected by name from the sim
//! config, so experiments can swap models without code changes.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::util::{gaussian, subseed_n};

use super::SimError;

/// Identity of the endpoints a measurement runs between, plus the topology
/// seed. Noise is a pure function of this context, which keeps repeated
/// measurements identical and ping symmetric.
#[derive(Debug, Clone, Copy)]
pub struct MeasureContext {
    pub seed: u64,
    pub src: u32,
    pub dst: u32,
}

impl MeasureContext {
    fn pair_key(&self) -> u64 {
        let (a, b) = if self.src <= self.dst {
            (self.src, self.dst)
        } else {
            (self.dst, self.src)
        };
        (a as u64) << 32 | b as u64
    }
}

/// One way of mapping propagation delay to observed measurements.
pub trait DelayModel: fmt::Debug + Send + Sync {
    /// Registry name.
    fn name(&self) -> &'static str;

    /// Observed RTT given the noiseless round-trip propagation time.
    fn rtt_ms(&self, base_rtt_ms: f64, ctx: &MeasureContext) -> f64;

    /// Non-negative extra delay accumulated at traceroute hop `hop`.
    fn hop_noise_ms(&self, _ctx: &MeasureContext, _hop: usize) -> f64 {
        0.0
    }

    /// Inelastic delay added once at the destination.
    fn last_hop_extra_ms(&self) -> f64 {
        0.0
    }
}

/// RTT is exactly twice the one-way propagation time.
#[derive(Debug, Clone, Copy)]
pub struct Proportional;

impl DelayModel for Proportional {
    fn name(&self) -> &'static str {
        "proportional"
    }

    fn rtt_ms(&self, base_rtt_ms: f64, _ctx: &MeasureContext) -> f64 {
        base_rtt_ms
    }
}

/// Proportional plus Gaussian noise, deterministic per endpoint pair.
#[derive(Debug, Clone, Copy)]
pub struct ProportionalNoise {
    pub stddev_ms: f64,
}

impl DelayModel for ProportionalNoise {
    fn name(&self) -> &'static str {
        "proportional-noise"
    }

    fn rtt_ms(&self, base_rtt_ms: f64, ctx: &MeasureContext) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(subseed_n(ctx.seed, "ping-noise", ctx.pair_key()));
        (base_rtt_ms + gaussian(&mut rng) * self.stddev_ms).max(0.0)
    }

    fn hop_noise_ms(&self, ctx: &MeasureContext, hop: usize) -> f64 {
        let key = ctx.pair_key() ^ ((hop as u64) << 1 | 1).wrapping_mul(0x9e3779b97f4a7c15);
        let mut rng = ChaCha8Rng::seed_from_u64(subseed_n(ctx.seed, "hop-noise", key));
        (gaussian(&mut rng) * self.stddev_ms).abs()
    }
}

/// Proportional plus a fixed inelastic delay on the destination's last hop;
/// stresses the regime where access links break the delay-distance relation.
#[derive(Debug, Clone, Copy)]
pub struct ProportionalLastHop {
    pub extra_ms: f64,
}

impl DelayModel for ProportionalLastHop {
    fn name(&self) -> &'static str {
        "proportional-lasthop"
    }

    fn rtt_ms(&self, base_rtt_ms: f64, _ctx: &MeasureContext) -> f64 {
        base_rtt_ms + self.extra_ms
    }

    fn last_hop_extra_ms(&self) -> f64 {
        self.extra_ms
    }
}

/// Parameters for building a delay model by name.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayModelConfig {
    pub model: String,
    pub propagation_factor: f64,
    pub noise_stddev_ms: f64,
    pub lasthop_extra_ms: f64,
}

impl Default for DelayModelConfig {
    fn default() -> Self {
        Self {
            model: "proportional".to_string(),
            propagation_factor: 0.35,
            noise_stddev_ms: 0.0,
            lasthop_extra_ms: 0.0,
        }
    }
}

/// Names accepted by [`build_delay_model`].
pub const DELAY_MODEL_NAMES: [&str; 3] = [
    "proportional",
    "proportional-noise",
    "proportional-lasthop",
];

/// Instantiate the delay model registered under `config.model`.
pub fn build_delay_model(config: &DelayModelConfig) -> Result<Box<dyn DelayModel>, SimError> {
    match config.model.as_str() {
        "proportional" => Ok(Box::new(Proportional)),
        "proportional-noise" => Ok(Box::new(ProportionalNoise {
            stddev_ms: config.noise_stddev_ms,
        })),
        "proportional-lasthop" => Ok(Box::new(ProportionalLastHop {
            extra_ms: config.lasthop_extra_ms,
        })),
        other => Err(SimError::UnknownModel {
            name: other.to_string(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(src: u32, dst: u32) -> MeasureContext {
        MeasureContext { seed: 9, src, dst }
    }

    #[test]
    fn registry_resolves_all_names() {
        for name in DELAY_MODEL_NAMES {
            let cfg = DelayModelConfig {
                model: name.to_string(),
                ..DelayModelConfig::default()
            };
            assert_eq!(build_delay_model(&cfg).unwrap().name(), name);
        }
        let bad = DelayModelConfig {
            model: "warp".to_string(),
            ..DelayModelConfig::default()
        };
        assert!(matches!(
            build_delay_model(&bad),
            Err(SimError::UnknownModel { .. })
        ));
    }

    #[test]
    fn zero_stddev_noise_equals_proportional() {
        let noisy = ProportionalNoise { stddev_ms: 0.0 };
        assert_eq!(noisy.rtt_ms(12.5, &ctx(1, 2)), 12.5);
        assert_eq!(noisy.hop_noise_ms(&ctx(1, 2), 3), 0.0);
    }

    #[test]
    fn noise_is_deterministic_and_symmetric() {
        let noisy = ProportionalNoise { stddev_ms: 2.0 };
        let a = noisy.rtt_ms(20.0, &ctx(3, 8));
        let b = noisy.rtt_ms(20.0, &ctx(3, 8));
        let c = noisy.rtt_ms(20.0, &ctx(8, 3));
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert!(a >= 0.0);
    }

    #[test]
    fn lasthop_adds_fixed_extra() {
        let m = ProportionalLastHop { extra_ms: 7.0 };
        assert_eq!(m.rtt_ms(0.0, &ctx(1, 1)), 7.0);
        assert_eq!(m.rtt_ms(10.0, &ctx(1, 2)), 17.0);
        assert_eq!(m.last_hop_extra_ms(), 7.0);
    }

    #[test]
    fn hop_noise_varies_by_hop_but_not_by_call() {
        let noisy = ProportionalNoise { stddev_ms: 1.5 };
        let h0 = noisy.hop_noise_ms(&ctx(1, 2), 0);
        let h1 = noisy.hop_noise_ms(&ctx(1, 2), 1);
        assert_ne!(h0, h1);
        assert_eq!(h0, noisy.hop_noise_ms(&ctx(1, 2), 0));
        assert!(h0 >= 0.0 && h1 >= 0.0);
    }
}
