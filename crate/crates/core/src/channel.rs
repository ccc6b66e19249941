//! Additive Gaussian noise on the synchronization and information channels.
//!
//! Noise is drawn from ChaCha8 seeded with [`rand::SeedableRng::seed_from_u64`];
//! each channel role reads its own ChaCha stream (`set_stream`), so the two
//! channels get independent realizations from one seed. One value is drawn
//! per simulation step and held for that step.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::signals::Trace;

/// Which channels receive noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoisePlacement {
    SyncOnly,
    InfoOnly,
    Both,
    /// One line carrying both roles (circuit A).
    SingleSharedChannel,
}

impl NoisePlacement {
    pub fn affects(&self, role: ChannelRole) -> bool {
        matches!(
            (self, role),
            (
                NoisePlacement::Both | NoisePlacement::SingleSharedChannel,
                _
            ) | (NoisePlacement::SyncOnly, ChannelRole::Sync)
                | (NoisePlacement::InfoOnly, ChannelRole::Info)
        )
    }
}

impl fmt::Display for NoisePlacement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoisePlacement::SyncOnly => "sync",
            NoisePlacement::InfoOnly => "info",
            NoisePlacement::Both => "both",
            NoisePlacement::SingleSharedChannel => "shared",
        })
    }
}

impl FromStr for NoisePlacement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sync" => Ok(NoisePlacement::SyncOnly),
            "info" => Ok(NoisePlacement::InfoOnly),
            "both" => Ok(NoisePlacement::Both),
            "shared" => Ok(NoisePlacement::SingleSharedChannel),
            other => Err(Error::Config(format!(
                "unknown noise target `{other}` (expected sync, info, both or shared)"
            ))),
        }
    }
}

/// Role of a channel; doubles as the ChaCha stream id of its noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelRole {
    Sync = 1,
    Info = 2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Noise standard deviation as a percentage of the clean signal's mean
    /// absolute amplitude.
    pub amplitude_percent: f64,
    pub placement: NoisePlacement,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn noiseless(placement: NoisePlacement) -> Self {
        NoiseSpec {
            amplitude_percent: 0.0,
            placement,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=100.0).contains(&self.amplitude_percent) {
            return Err(Error::InvalidParameter(format!(
                "noise amplitude must lie in [0, 100] %, got {}",
                self.amplitude_percent
            )));
        }
        Ok(())
    }
}

/// Seeded generator for the noise of one channel role.
pub fn noise_rng(seed: u64, role: ChannelRole) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(role as u64);
    rng
}

/// Returns `clean + n` with `n` iid zero-mean Gaussian of standard deviation
/// `(A/100) * mean(|clean|)`.
pub fn add_noise(clean: &Trace, spec: &NoiseSpec, role: ChannelRole) -> Result<Trace> {
    spec.validate()?;
    if spec.amplitude_percent == 0.0 {
        return Ok(clean.clone());
    }
    let samples = clean.samples();
    let mean_abs = samples.iter().map(|v| v.abs()).sum::<f64>() / samples.len() as f64;
    if mean_abs == 0.0 {
        return Err(Error::Degenerate(
            "noise amplitude is relative to the mean signal amplitude, which is zero".into(),
        ));
    }
    let sigma = spec.amplitude_percent / 100.0 * mean_abs;
    let mut rng = noise_rng(spec.seed, role);
    let noisy = samples
        .iter()
        .map(|&v| {
            let z: f64 = StandardNormal.sample(&mut rng);
            v + sigma * z
        })
        .collect();
    Ok(Trace::from_finite(clean.dt(), clean.t0(), noisy))
}
