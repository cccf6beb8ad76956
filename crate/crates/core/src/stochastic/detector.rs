//! Detector imperfections and beam-splitter routing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::seed::derive_seed;
use super::stream::PhotonStream;
use crate::error::{Error, Result};
use crate::instrument::GAUSSIAN_FWHM_PER_SIGMA;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub efficiency: f64,
    /// Dark counts per second.
    pub dark_rate: f64,
    /// FWHM of the Gaussian timing jitter (s).
    pub jitter_fwhm: f64,
    /// Non-paralyzable dead time (s).
    #[serde(default)]
    pub dead_time: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self::IDEAL
    }
}

impl DetectorModel {
    pub const IDEAL: DetectorModel = DetectorModel {
        efficiency: 1.0,
        dark_rate: 0.0,
        jitter_fwhm: 0.0,
        dead_time: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        if !(self.efficiency >= 0.0 && self.efficiency <= 1.0) {
            return Err(Error::invalid("efficiency", "must lie in [0, 1]"));
        }
        for (name, v) in [
            ("dark_rate", self.dark_rate),
            ("jitter_fwhm", self.jitter_fwhm),
            ("dead_time", self.dead_time),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, "must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

/// Detected events: Bernoulli thinning, Gaussian jitter, Poisson dark
/// counts, then dead-time pruning. Events jittered outside `[0, duration)`
/// are lost and coincident events are merged.
pub fn apply_detector(stream: &PhotonStream, det: &DetectorModel, seed: u64) -> Result<PhotonStream> {
    stream.validate()?;
    det.validate()?;
    let mut thin = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
    let mut jit = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    let mut dark = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2));
    let sigma = det.jitter_fwhm / GAUSSIAN_FWHM_PER_SIGMA;
    let jitter = (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("finite sigma"));

    let mut out: Vec<f64> = stream
        .timestamps
        .iter()
        .filter(|_| det.efficiency >= 1.0 || thin.random::<f64>() < det.efficiency)
        .map(|&t| match &jitter {
            Some(n) => t + n.sample(&mut jit),
            None => t,
        })
        .collect();
    let mean_dark = det.dark_rate * stream.duration;
    if mean_dark > 0.0 {
        let n = Poisson::new(mean_dark).map_err(|e| Error::invalid("dark_rate", e.to_string()))?;
        let k = n.sample(&mut dark) as usize;
        out.extend((0..k).map(|_| dark.random::<f64>() * stream.duration));
    }
    out.retain(|&t| t >= 0.0 && t < stream.duration);
    out.sort_by(f64::total_cmp);
    out.dedup();
    if det.dead_time > 0.0 {
        let mut kept: Vec<f64> = Vec::with_capacity(out.len());
        for t in out {
            if kept.last().is_none_or(|&last| t - last >= det.dead_time) {
                kept.push(t);
            }
        }
        out = kept;
    }
    Ok(PhotonStream {
        timestamps: out,
        duration: stream.duration,
        channel: stream.channel.clone(),
        seed: stream.seed,
    })
}

/// Routes every event independently to channel `A` or `B` with probability ½.
pub fn hbt_split(stream: &PhotonStream, seed: u64) -> Result<(PhotonStream, PhotonStream)> {
    stream.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for &t in &stream.timestamps {
        if rng.random_bool(0.5) {
            a.push(t);
        } else {
            b.push(t);
        }
    }
    let make = |ts, ch: &str| PhotonStream {
        timestamps: ts,
        duration: stream.duration,
        channel: ch.into(),
        seed: stream.seed,
    };
    Ok((make(a, "A"), make(b, "B")))
}
