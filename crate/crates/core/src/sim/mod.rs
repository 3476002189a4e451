//! Monte Carlo BER harness.
//!
//! Every point simulates independent blocks until `min_errors` bit errors
//! or `max_bits` information bits are reached. A point with seed `s` draws
//! its information bits from stream 0 and its noise from stream 1 of `s`
//! (see [`derive_stream`]). A sweep gives SNR point `i` the seed
//! [`point_seed`]`(master, i)`, shared by all decoders, so every decoder sees
//! the same data and noise and the worker count never changes a result.
//!
//! `Eb/N0` is converted with the steady-state information rate of the
//! schedule (termination tails are not charged) and the received symbol
//! energy `Es * sum(h_i^2)`.

pub mod config;
pub mod selftest;
pub mod theory;

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::channel::{add_awgn, apply_isi, derive_stream, ebn0_to_sigma};
use crate::codec::Bit;
use crate::error::Result;
use crate::jointva::{build_super_trellis, ml_bruteforce, va_decode, DecoderConfig, SuperTrellis};
use crate::link::Link;
use crate::rsse::{complexity_report, rsse_decode, PartitionProfile};

pub use config::{CodeChoice, DecoderKind, SimConfig};

pub const CSV_HEADER: &str = "decoder,snr_db,bits,errors,ber,states_full,states_reduced,seconds";

#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub decoder: String,
    pub snr_db: f64,
    pub bits_simulated: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub states_full: usize,
    pub states_reduced: usize,
    /// Seconds of wall-clock time spent on the point.
    pub wall_time: f64,
}

impl BerRecord {
    /// CSV row without a trailing newline.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.3}",
            self.decoder,
            self.snr_db,
            self.bits_simulated,
            self.bit_errors,
            self.ber,
            self.states_full,
            self.states_reduced,
            self.wall_time
        )
    }
}

/// Seed of SNR point `index` in a sweep (SplitMix64 of the pair).
pub fn point_seed(master: u64, index: usize) -> u64 {
    let mut z = master.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

enum Prepared<'a> {
    Va(SuperTrellis<'a>),
    Rsse(PartitionProfile),
    Oracle,
}

fn decoder_config(cfg: &SimConfig, link: &Link) -> DecoderConfig {
    let mut d = DecoderConfig::default_for(link).with_termination(cfg.termination);
    if let Some(depth) = cfg.traceback_depth {
        d.traceback_depth = depth;
    }
    d
}

/// Simulates one SNR point with the first decoder of `cfg`.
pub fn run_point(cfg: &SimConfig, snr_db: f64, seed: u64) -> Result<BerRecord> {
    cfg.validate()?;
    run_point_with(cfg, &cfg.decoders[0], snr_db, seed)
}

/// Simulates one SNR point with the given decoder.
pub fn run_point_with(cfg: &SimConfig, decoder: &DecoderKind, snr_db: f64, seed: u64) -> Result<BerRecord> {
    let link = cfg.build_link()?;
    let started = Instant::now();
    let dcfg = decoder_config(cfg, &link);
    let full_profile = PartitionProfile::full(link.constellation(), link.channel_memory());
    let (prepared, profile) = match decoder {
        DecoderKind::Va => (Prepared::Va(build_super_trellis(&link)?), full_profile),
        DecoderKind::Oracle => (Prepared::Oracle, full_profile),
        DecoderKind::Rsse(j) => {
            let p = cfg.profile(&link, j)?;
            (Prepared::Rsse(p.clone()), p)
        }
    };
    let report = complexity_report(&link, &profile);
    let es = link.constellation().es() * link.taps().iter().map(|h| h * h).sum::<f64>();
    let sigma = ebn0_to_sigma(snr_db, link.info_bits_per_symbol(), es)?;
    let layout = link.layout(cfg.block_steps, cfg.termination);

    let mut data_rng = derive_stream(seed, 0);
    let mut noise_rng = derive_stream(seed, 1);
    let mut bits = 0u64;
    let mut errors = 0u64;
    let mut info: Vec<Bit> = vec![0; layout.info_bits];
    while errors < cfg.min_errors && bits < cfg.max_bits {
        for b in info.iter_mut() {
            *b = data_rng.random_range(0..2);
        }
        let ranks = link.transmit(&info, &layout)?;
        let clean = apply_isi(&link.amplitudes(&ranks), link.taps())?;
        let received = add_awgn(&clean, sigma, &mut noise_rng)?;
        let decided = match &prepared {
            Prepared::Va(st) => va_decode(&received, st, &layout, &dcfg)?,
            Prepared::Rsse(p) => rsse_decode(&received, &link, p, &layout, &dcfg)?,
            Prepared::Oracle => ml_bruteforce(&received, &link, &layout)?,
        };
        errors += info.iter().zip(&decided.info_bits).filter(|(a, b)| a != b).count() as u64;
        bits += info.len() as u64;
    }

    Ok(BerRecord {
        decoder: decoder.label(),
        snr_db,
        bits_simulated: bits,
        bit_errors: errors,
        ber: if bits == 0 { 0.0 } else { errors as f64 / bits as f64 },
        states_full: report.full_states,
        states_reduced: report.reduced_states,
        wall_time: started.elapsed().as_secs_f64(),
    })
}

/// Runs every (decoder, SNR) pair, in parallel, ordered by decoder then SNR.
pub fn run_sweep(cfg: &SimConfig) -> Result<Vec<BerRecord>> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> = (0..cfg.decoders.len())
        .flat_map(|d| (0..cfg.snr_db.len()).map(move |s| (d, s)))
        .collect();
    jobs.par_iter()
        .map(|&(d, s)| run_point_with(cfg, &cfg.decoders[d], cfg.snr_db[s], point_seed(cfg.seed, s)))
        .collect()
}

pub fn to_csv(records: &[BerRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

pub fn write_csv(records: &[BerRecord], path: &Path) -> Result<()> {
    std::fs::write(path, to_csv(records))?;
    Ok(())
}

/// SNR at which a BER curve crosses `target`, interpolating linearly in
/// `log10(BER)` between the first bracketing pair of points. Points must be
/// sorted by SNR.
pub fn snr_at_ber(points: &[(f64, f64)], target: f64) -> Option<f64> {
    points.windows(2).find_map(|w| {
        let ((s0, b0), (s1, b1)) = (w[0], w[1]);
        if b0 >= target && target >= b1 && b0 > b1 && b1 > 0.0 {
            let t = (b0.log10() - target.log10()) / (b0.log10() - b1.log10());
            Some(s0 + t * (s1 - s0))
        } else {
            None
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uncoded_bpsk() -> SimConfig {
        SimConfig::parse(
            "code.kind = uncoded\nmapping.bits = 1\nchannel.preset = ideal\nsim.block_steps = 1000\nsim.min_errors = 200",
        )
        .unwrap()
    }

    #[test]
    fn noiseless_point_has_no_errors() {
        let mut cfg = SimConfig::default();
        cfg.max_bits = 20_000;
        let r = run_point(&cfg, f64::INFINITY, 3).unwrap();
        assert_eq!(r.bit_errors, 0);
        assert_eq!(r.ber, 0.0);
        assert!(r.bits_simulated >= 20_000);
    }

    #[test]
    fn uncoded_bpsk_matches_q_function() {
        let cfg = uncoded_bpsk();
        let r = run_point(&cfg, 6.0, 17).unwrap();
        let p = theory::theoretical_ber_pam(2, 6.0);
        let sd = theory::binomial_sigma(p, r.bits_simulated);
        assert!(r.bit_errors >= 200);
        assert!((r.ber - p).abs() < 3.0 * sd, "ber {} vs {p}", r.ber);
    }

    #[test]
    fn points_are_deterministic() {
        let mut cfg = SimConfig::default();
        cfg.max_bits = 5_000;
        let a = run_point(&cfg, 4.0, 5).unwrap();
        let b = run_point(&cfg, 4.0, 5).unwrap();
        assert_eq!(BerRecord { wall_time: 0.0, ..a }, BerRecord { wall_time: 0.0, ..b });
    }

    #[test]
    fn single_point_sweep_equals_run_point() {
        let mut cfg = SimConfig::default();
        cfg.max_bits = 5_000;
        cfg.snr_db = vec![3.0];
        let sweep = run_sweep(&cfg).unwrap();
        let point = run_point(&cfg, 3.0, point_seed(cfg.seed, 0)).unwrap();
        assert_eq!(sweep.len(), 1);
        assert_eq!(BerRecord { wall_time: 0.0, ..sweep[0].clone() }, BerRecord { wall_time: 0.0, ..point });
    }

    #[test]
    fn stop_rule_holds() {
        let mut cfg = SimConfig::default();
        cfg.snr_db = vec![0.0, 10.0];
        cfg.min_errors = 50;
        cfg.max_bits = 4_000;
        for r in run_sweep(&cfg).unwrap() {
            assert!(r.bit_errors >= 50 || r.bits_simulated >= 4_000);
        }
    }

    #[test]
    fn interpolation() {
        let pts = [(0.0, 1e-1), (1.0, 1e-2), (2.0, 1e-4)];
        assert!((snr_at_ber(&pts, 1e-3).unwrap() - 1.5).abs() < 1e-12);
        assert!((snr_at_ber(&pts, 1e-2).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(snr_at_ber(&pts, 1e-6), None);
    }

    #[test]
    fn csv_layout() {
        let r = BerRecord {
            decoder: "rsse:2".into(),
            snr_db: 4.5,
            bits_simulated: 1000,
            bit_errors: 3,
            ber: 0.003,
            states_full: 16,
            states_reduced: 8,
            wall_time: 0.25,
        };
        assert_eq!(to_csv(&[r]), format!("{CSV_HEADER}\nrsse:2,4.5,1000,3,0.003,16,8,0.250\n"));
    }
}
