//! Oracle-equivalence checks: joint Viterbi decoding against exhaustive
//! maximum-likelihood search on short terminated blocks.

use rand::Rng;

use crate::channel::{add_awgn, derive_stream, ebn0_to_sigma, ChannelModel};
use crate::codec::{build_code_trellis, Bit, CodeSpec, PuncturePattern};
use crate::error::Result;
use crate::jointva::{build_super_trellis, ml_bruteforce, va_decode, DecoderConfig};
use crate::link::{Link, Termination};
use crate::mapping::build_constellation;

pub struct OracleCase {
    pub name: &'static str,
    pub link: Link,
    pub info_steps: usize,
    /// Chosen so that roughly one block in ten is decoded in error.
    pub ebn0_db: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleReport {
    pub trials: usize,
    pub agreements: usize,
    pub block_errors: usize,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.agreements == self.trials
    }
}

fn tcm_link(mask: &[&str], taps: Vec<f64>) -> Result<Link> {
    let code = build_code_trellis(&CodeSpec::feedforward(&[0o7, 0o5], 2))?;
    Link::new(
        code,
        PuncturePattern::from_strings(mask, 0)?,
        build_constellation(2, true)?,
        0,
        taps,
    )
}

/// The (7,5) 4-ASK link unpunctured and punctured to rate 2/3 over an ideal
/// channel, and unpunctured over the two-tap preset.
pub fn builtin_cases() -> Result<Vec<OracleCase>> {
    Ok(vec![
        OracleCase {
            name: "tcm-4ask-ideal",
            link: tcm_link(&["1", "1"], vec![1.0])?,
            info_steps: 10,
            ebn0_db: 2.75,
        },
        OracleCase {
            name: "tcm-4ask-punctured-ideal",
            link: tcm_link(&["11", "10"], vec![1.0])?,
            info_steps: 10,
            ebn0_db: 5.0,
        },
        OracleCase {
            name: "tcm-4ask-two-tap",
            link: tcm_link(&["1", "1"], ChannelModel::preset("two-tap")?.taps().to_vec())?,
            info_steps: 10,
            ebn0_db: 4.0,
        },
    ])
}

/// Decodes `trials` noisy terminated blocks with both the Viterbi decoder
/// and the exhaustive search and counts identical decisions.
pub fn oracle_equivalence(
    link: &Link,
    info_steps: usize,
    ebn0_db: f64,
    trials: usize,
    seed: u64,
) -> Result<OracleReport> {
    let st = build_super_trellis(link)?;
    let cfg = DecoderConfig::default_for(link);
    let layout = link.layout(info_steps, Termination::Known);
    let es = link.constellation().es() * link.taps().iter().map(|h| h * h).sum::<f64>();
    let sigma = ebn0_to_sigma(ebn0_db, link.info_bits_per_symbol(), es)?;
    let mut data = derive_stream(seed, 0);
    let mut noise = derive_stream(seed, 1);
    let mut report = OracleReport { trials, agreements: 0, block_errors: 0 };
    for _ in 0..trials {
        let info: Vec<Bit> = (0..layout.info_bits).map(|_| data.random_range(0..2)).collect();
        let y = add_awgn(&link.noiseless_output(&info, &layout)?, sigma, &mut noise)?;
        let va = va_decode(&y, &st, &layout, &cfg)?;
        let ml = ml_bruteforce(&y, link, &layout)?;
        if va.info_bits == ml.info_bits {
            report.agreements += 1;
        }
        if ml.info_bits != info {
            report.block_errors += 1;
        }
    }
    Ok(report)
}
