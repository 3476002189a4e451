//! Discrete-time FIR ISI channel with additive white Gaussian noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Named tap profiles.
pub const PRESETS: &[&str] = &["ideal", "two-tap", "three-tap"];

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    taps: Vec<f64>,
    pub noise_sigma: f64,
}

impl ChannelModel {
    pub fn new(taps: Vec<f64>, normalize: bool) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::InvalidChannel("empty tap vector".into()));
        }
        if taps[0] == 0.0 || taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidChannel("leading tap must be nonzero and all taps finite".into()));
        }
        let taps = if normalize {
            let e = taps.iter().map(|t| t * t).sum::<f64>().sqrt();
            taps.iter().map(|t| t / e).collect()
        } else {
            taps
        };
        Ok(ChannelModel { taps, noise_sigma: 0.0 })
    }

    /// `ideal` = [1], `two-tap` = [1, 0.5] and `three-tap` = [0.5, 0.707, 0.5],
    /// the latter two scaled to unit energy.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "ideal" => Self::new(vec![1.0], false),
            "two-tap" => Self::new(vec![1.0, 0.5], true),
            "three-tap" => Self::new(vec![0.5, 0.707, 0.5], true),
            other => Err(Error::InvalidChannel(format!("unknown preset {other:?}"))),
        }
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Channel memory `nu`.
    pub fn memory(&self) -> usize {
        self.taps.len() - 1
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t * t).sum()
    }
}

/// Full linear convolution from a zero initial state; the output has
/// `symbols.len() + nu` samples.
pub fn apply_isi(symbols: &[f64], taps: &[f64]) -> Result<Vec<f64>> {
    if taps.is_empty() {
        return Err(Error::InvalidChannel("empty tap vector".into()));
    }
    if symbols.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = vec![0.0; symbols.len() + taps.len() - 1];
    for (t, &a) in symbols.iter().enumerate() {
        for (i, &h) in taps.iter().enumerate() {
            out[t + i] += h * a;
        }
    }
    Ok(out)
}

/// Adds i.i.d. `N(0, sigma^2)` noise drawn from `rng`.
pub fn add_awgn<R: Rng + ?Sized>(samples: &[f64], sigma: f64, rng: &mut R) -> Result<Vec<f64>> {
    if sigma.is_nan() || sigma < 0.0 {
        return Err(Error::InvalidArgument(format!("noise sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(samples.to_vec());
    }
    Ok(samples
        .iter()
        .map(|&y| {
            let z: f64 = rng.sample(StandardNormal);
            y + sigma * z
        })
        .collect())
}

/// Noise standard deviation per real sample for a given `Eb/N0`, with
/// `Eb = Es / info_bits_per_symbol` and `sigma^2 = N0 / 2`.
pub fn ebn0_to_sigma(ebn0_db: f64, info_bits_per_symbol: f64, es: f64) -> Result<f64> {
    if info_bits_per_symbol.is_nan() || info_bits_per_symbol <= 0.0 || es.is_nan() || es <= 0.0 {
        return Err(Error::InvalidArgument(
            "info bits per symbol and Es must both be positive".into(),
        ));
    }
    let ebn0 = 10f64.powf(ebn0_db / 10.0);
    Ok((es / (2.0 * info_bits_per_symbol * ebn0)).sqrt())
}

/// Random stream `index` derived from `master`. Streams are ChaCha8
/// generators sharing the key expanded from `master` and differing in their
/// stream id, so they never overlap and do not depend on scheduling.
pub fn derive_stream(master: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}
