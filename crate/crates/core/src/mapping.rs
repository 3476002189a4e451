//! Set-partitioned PAM mapping and the per-symbol bit schedule induced by
//! puncturing.
//!
//! Labels are natural binary: label `i` is the amplitude of rank `i`
//! (`-(M-1)` has rank 0). Label bits are filled most-significant first from
//! the bit stream, so the last coded bit of a label is its LSB, which selects
//! the first partition level.

use crate::codec::{Bit, PuncturePattern};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    bits: usize,
    amplitudes: Vec<f64>,
    es: f64,
}

/// `M = 2^n` PAM levels on the odd integers, optionally scaled to unit
/// average energy.
pub fn build_constellation(n: usize, normalize: bool) -> Result<Constellation> {
    if !(1..=6).contains(&n) {
        return Err(Error::InvalidConstellation(n));
    }
    let m = 1usize << n;
    let raw: Vec<f64> = (0..m).map(|r| (2 * r) as f64 - (m - 1) as f64).collect();
    let es_raw = ((m * m - 1) as f64) / 3.0;
    let (amplitudes, es) = if normalize {
        let scale = es_raw.sqrt().recip();
        (raw.iter().map(|a| a * scale).collect(), 1.0)
    } else {
        (raw, es_raw)
    };
    Ok(Constellation { bits: n, amplitudes, es })
}

impl Constellation {
    pub fn order(&self) -> usize {
        self.amplitudes.len()
    }

    /// Label bits per symbol (`n`).
    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, rank: usize) -> f64 {
        self.amplitudes[rank]
    }

    /// Average symbol energy.
    pub fn es(&self) -> f64 {
        self.es
    }

    /// Spacing between adjacent levels.
    pub fn spacing(&self) -> f64 {
        if self.order() < 2 {
            0.0
        } else {
            self.amplitudes[1] - self.amplitudes[0]
        }
    }
}

/// Ungerboeck partition of a constellation by label LSBs.
#[derive(Debug, Clone)]
pub struct PartitionTree {
    order: usize,
    levels: usize,
    amplitudes: Vec<f64>,
}

pub fn set_partition(c: &Constellation) -> PartitionTree {
    PartitionTree { order: c.order(), levels: c.bits(), amplitudes: c.amplitudes().to_vec() }
}

impl PartitionTree {
    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Subset index of `rank` at `level` (its `level` least-significant bits).
    pub fn subset_of(&self, rank: usize, level: usize) -> usize {
        rank & ((1 << level) - 1)
    }

    /// Ranks grouped by subset index at `level`.
    pub fn subsets(&self, level: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); 1 << level];
        for r in 0..self.order {
            out[self.subset_of(r, level)].push(r);
        }
        out
    }

    /// Smallest distance between two amplitudes sharing a subset at `level`,
    /// or `None` when every subset is a singleton.
    pub fn min_intra_distance(&self, level: usize) -> Option<f64> {
        self.subsets(level)
            .iter()
            .flat_map(|s| s.windows(2).map(|w| (self.amplitudes[w[1]] - self.amplitudes[w[0]]).abs()))
            .min_by(|a, b| a.total_cmp(b))
    }
}

/// A run of encoder steps and symbols that starts and ends where a step
/// boundary coincides with a symbol boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    /// Offset of the first step within the schedule period.
    pub first_step: usize,
    pub steps: usize,
    pub symbols: usize,
    /// Per symbol, the coded label bits most-significant first, each as
    /// (step offset within the section, encoder output index).
    pub label_sources: Vec<Vec<(usize, usize)>>,
}

impl Section {
    /// True if some symbol takes bits from more than one encoder step.
    pub fn has_spanning_label(&self) -> bool {
        self.label_sources.iter().any(|src| src.iter().any(|&(s, _)| s != src[0].0))
    }
}

/// Periodic assignment of kept coded bits to symbol labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolSchedule {
    n_out: usize,
    bits_per_symbol: usize,
    uncoded_bits: usize,
    step_kept: Vec<Vec<usize>>,
    sections: Vec<Section>,
}

/// Schedule with every label bit taken from the coded stream.
pub fn build_symbol_schedule(pattern: &PuncturePattern, n_out: usize, n: usize) -> Result<SymbolSchedule> {
    SymbolSchedule::new(pattern, n_out, n, 0)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl SymbolSchedule {
    /// Builds the schedule for `n`-bit labels whose `uncoded_bits` most
    /// significant bits bypass the encoder.
    pub fn new(pattern: &PuncturePattern, n_out: usize, n: usize, uncoded_bits: usize) -> Result<Self> {
        if pattern.n_out() != n_out {
            return Err(Error::InvalidSchedule(format!(
                "pattern has {} rows for a code with {n_out} outputs",
                pattern.n_out()
            )));
        }
        if !(1..=6).contains(&n) {
            return Err(Error::InvalidConstellation(n));
        }
        if uncoded_bits >= n {
            return Err(Error::InvalidSchedule(format!(
                "{uncoded_bits} uncoded bits leave no coded bit in a {n}-bit label"
            )));
        }
        let coded = n - uncoded_bits;
        let kept = pattern.kept_per_period();
        let repeats = coded / gcd(kept, coded);
        let period_steps = repeats * pattern.period();
        let step_kept: Vec<Vec<usize>> = (0..period_steps).map(|s| pattern.kept_outputs(s)).collect();

        let mut sections = Vec::new();
        let mut first_step = 0;
        let mut pending: Vec<(usize, usize)> = Vec::new();
        let mut labels: Vec<Vec<(usize, usize)>> = Vec::new();
        for (step, outs) in step_kept.iter().enumerate() {
            for &j in outs {
                pending.push((step - first_step, j));
                if pending.len() == coded {
                    labels.push(std::mem::take(&mut pending));
                }
            }
            if pending.is_empty() {
                sections.push(Section {
                    first_step,
                    steps: step + 1 - first_step,
                    symbols: labels.len(),
                    label_sources: std::mem::take(&mut labels),
                });
                first_step = step + 1;
            }
        }
        debug_assert_eq!(first_step, period_steps);

        Ok(SymbolSchedule { n_out, bits_per_symbol: n, uncoded_bits, step_kept, sections })
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn uncoded_bits(&self) -> usize {
        self.uncoded_bits
    }

    /// Coded bits carried by each symbol label.
    pub fn coded_bits_per_symbol(&self) -> usize {
        self.bits_per_symbol - self.uncoded_bits
    }

    pub fn period_steps(&self) -> usize {
        self.step_kept.len()
    }

    pub fn period_symbols(&self) -> usize {
        self.sections.iter().map(|s| s.symbols).sum()
    }

    /// Kept coded bits per encoder step over one period.
    pub fn step_loads(&self) -> Vec<usize> {
        self.step_kept.iter().map(Vec::len).collect()
    }

    /// Kept output indices at step `step` of the period.
    pub fn kept_outputs(&self, step: usize) -> &[usize] {
        &self.step_kept[step % self.period_steps()]
    }

    pub fn sections(&self) -> &[Section] {
        &self.sections
    }

    /// Section type of the `index`-th section of a block.
    pub fn section(&self, index: usize) -> &Section {
        &self.sections[index % self.sections.len()]
    }

    /// Number of sections needed, counted from the start of a block, to cover
    /// at least `steps` encoder steps.
    pub fn sections_covering(&self, steps: usize) -> usize {
        let mut count = 0;
        let mut covered = 0;
        while covered < steps {
            covered += self.section(count).steps;
            count += 1;
        }
        count
    }

    /// Steps spanned by the first `sections` sections of a block.
    pub fn steps_in(&self, sections: usize) -> usize {
        (0..sections).map(|i| self.section(i).steps).sum()
    }

    /// Symbols emitted by the first `sections` sections of a block.
    pub fn symbols_in(&self, sections: usize) -> usize {
        (0..sections).map(|i| self.section(i).symbols).sum()
    }

    /// Information bits per symbol in steady state for a code with `k` inputs
    /// per step.
    pub fn info_bits_per_symbol(&self, k: usize) -> f64 {
        let syms = self.period_symbols() as f64;
        (k * self.period_steps()) as f64 / syms + self.uncoded_bits as f64
    }
}

/// Groups the punctured stream into labels (coded part) and prepends the
/// uncoded bits of each symbol as its most significant bits. A trailing
/// partial label is zero-padded, as are missing uncoded bits.
pub fn map_labels(punctured: &[Bit], uncoded: &[Bit], sched: &SymbolSchedule) -> Vec<usize> {
    let c = sched.coded_bits_per_symbol();
    let u = sched.uncoded_bits();
    let pack = |bits: &[Bit], width: usize| {
        (0..width).fold(0usize, |acc, i| (acc << 1) | bits.get(i).copied().unwrap_or(0) as usize)
    };
    punctured
        .chunks(c)
        .enumerate()
        .map(|(t, coded)| {
            let unc = uncoded.get(t * u..).unwrap_or(&[]);
            (pack(unc, u) << c) | pack(coded, c)
        })
        .collect()
}

/// Maps the punctured bit stream to PAM amplitudes.
pub fn map_block(punctured: &[Bit], uncoded: &[Bit], c: &Constellation, sched: &SymbolSchedule) -> Vec<f64> {
    map_labels(punctured, uncoded, sched).into_iter().map(|r| c.amplitude(r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::puncture;
    use proptest::prelude::*;

    #[test]
    fn constellation_levels() {
        let c = build_constellation(1, false).unwrap();
        assert_eq!(c.amplitudes(), &[-1.0, 1.0]);
        assert_eq!(c.es(), 1.0);

        let c = build_constellation(2, false).unwrap();
        assert_eq!(c.amplitudes(), &[-3.0, -1.0, 1.0, 3.0]);
        assert_eq!(c.es(), 5.0);

        let c = build_constellation(3, false).unwrap();
        assert_eq!(c.order(), 8);
        assert_eq!(c.es(), 21.0);

        assert!(build_constellation(0, false).is_err());
        assert!(build_constellation(7, false).is_err());
    }

    #[test]
    fn normalized_energy_is_one() {
        for n in 1..=6 {
            let c = build_constellation(n, true).unwrap();
            let mean: f64 = c.amplitudes().iter().map(|a| a * a).sum::<f64>() / c.order() as f64;
            assert!((mean - 1.0).abs() < 1e-12);
            assert!(c.amplitudes().windows(2).all(|w| w[1] > w[0]));
            assert!((c.amplitudes()[0] + c.amplitudes()[c.order() - 1]).abs() < 1e-12);
        }
    }

    #[test]
    fn partition_examples() {
        let c = build_constellation(2, false).unwrap();
        let p = set_partition(&c);
        let level1: Vec<Vec<f64>> =
            p.subsets(1).iter().map(|s| s.iter().map(|&r| c.amplitude(r)).collect()).collect();
        assert_eq!(level1, vec![vec![-3.0, 1.0], vec![-1.0, 3.0]]);
        assert_eq!(p.subsets(0), vec![vec![0, 1, 2, 3]]);
        assert!(p.subsets(2).iter().all(|s| s.len() == 1));
        assert_eq!(p.min_intra_distance(2), None);
    }

    #[test]
    fn partition_nesting_and_distance_doubling() {
        for n in 1..=6 {
            let c = build_constellation(n, false).unwrap();
            let p = set_partition(&c);
            for level in 0..n {
                let coarse = p.subsets(level);
                for fine in p.subsets(level + 1) {
                    let parents = coarse.iter().filter(|s| fine.iter().all(|r| s.contains(r))).count();
                    assert_eq!(parents, 1);
                }
                let d = p.min_intra_distance(level).unwrap();
                assert_eq!(d, (1u32 << (level + 1)) as f64, "n={n} level={level}");
            }
        }
    }

    #[test]
    fn unpunctured_schedule() {
        let p = PuncturePattern::all_ones(2);
        let s = build_symbol_schedule(&p, 2, 2).unwrap();
        assert_eq!(s.period_steps(), 1);
        assert_eq!(s.period_symbols(), 1);
        assert_eq!(s.sections().len(), 1);
        assert_eq!(s.sections()[0].label_sources, vec![vec![(0, 0), (0, 1)]]);
        assert_eq!(s.coded_bits_per_symbol(), 2);

        let p = PuncturePattern::all_ones(4);
        let s = build_symbol_schedule(&p, 4, 2).unwrap();
        assert_eq!(s.sections().len(), 1);
        assert_eq!((s.sections()[0].steps, s.sections()[0].symbols), (1, 2));
    }

    #[test]
    fn punctured_schedule_has_spanning_label() {
        // kept bits by hand: step0 c0 c1 | step1 c0 | step2 c0 c1 | step3 c0
        // labels: (s0c0 s0c1) (s1c0 s2c0) (s2c1 s3c0)
        let p = PuncturePattern::from_strings(&["11", "10"], 0).unwrap();
        let s = build_symbol_schedule(&p, 2, 2).unwrap();
        assert_eq!(s.step_loads(), vec![2, 1, 2, 1]);
        assert_eq!(s.period_steps(), 4);
        assert_eq!(s.period_symbols(), 3);
        let secs = s.sections();
        assert_eq!(secs.len(), 2);
        assert_eq!(secs[0].label_sources, vec![vec![(0, 0), (0, 1)]]);
        assert!(!secs[0].has_spanning_label());
        assert_eq!(secs[1].first_step, 1);
        assert_eq!(secs[1].label_sources, vec![vec![(0, 0), (1, 0)], vec![(1, 1), (2, 0)]]);
        assert!(secs[1].has_spanning_label());
        assert!((s.info_bits_per_symbol(1) - 4.0 / 3.0).abs() < 1e-12);

        // phase 1 starts on the punctured column
        let p = PuncturePattern::from_strings(&["11", "10"], 1).unwrap();
        let s = build_symbol_schedule(&p, 2, 2).unwrap();
        assert_eq!(s.step_loads(), vec![1, 2, 1, 2]);
    }

    #[test]
    fn uncoded_label_bits() {
        let p = PuncturePattern::all_ones(2);
        let s = SymbolSchedule::new(&p, 2, 3, 1).unwrap();
        assert_eq!(s.coded_bits_per_symbol(), 2);
        assert_eq!(map_labels(&[0, 1, 1, 1], &[1, 0], &s), vec![0b101, 0b011]);
        assert!(SymbolSchedule::new(&p, 2, 2, 2).is_err());
    }

    #[test]
    fn map_block_examples() {
        let c4 = build_constellation(2, false).unwrap();
        let s4 = build_symbol_schedule(&PuncturePattern::all_ones(2), 2, 2).unwrap();
        assert_eq!(map_block(&[0, 0, 0, 1, 1, 0, 1, 1], &[], &c4, &s4), vec![-3.0, -1.0, 1.0, 3.0]);
        assert!(map_block(&[], &[], &c4, &s4).is_empty());
        // trailing partial label is zero-padded: "1" -> "10"
        assert_eq!(map_block(&[1], &[], &c4, &s4), vec![1.0]);

        let c2 = build_constellation(1, false).unwrap();
        let s2 = build_symbol_schedule(&PuncturePattern::all_ones(1), 1, 1).unwrap();
        assert_eq!(map_block(&[1, 0, 1], &[], &c2, &s2), vec![1.0, -1.0, 1.0]);
    }

    proptest! {
        #[test]
        fn bit_conservation(steps in 0usize..60, phase in 0usize..3, n in 1usize..4) {
            let p = PuncturePattern::from_strings(&["111", "101"], phase).unwrap();
            let sched = build_symbol_schedule(&p, 2, n).unwrap();
            let coded: Vec<Bit> = (0..steps * 2).map(|i| (i % 3 == 0) as Bit).collect();
            let kept = puncture(&coded, &p).unwrap();
            let labels = map_labels(&kept, &[], &sched);
            prop_assert_eq!(labels.len(), kept.len().div_ceil(n));

            // one period of the schedule accounts for every kept bit exactly once
            let per_period: usize = sched.step_loads().iter().sum();
            prop_assert_eq!(per_period, sched.period_symbols() * sched.coded_bits_per_symbol());
            let from_sections: usize = sched.sections().iter()
                .flat_map(|s| s.label_sources.iter().map(Vec::len)).sum();
            prop_assert_eq!(from_sections, per_period);
            prop_assert!(sched.step_loads().iter().all(|&b| (1..=2).contains(&b)));
        }
    }
}
