//! Reduced-state sequence estimation.
//!
//! The symbol at lag `i` is tracked only up to its subset at partition level
//! `log2(J_i)`, i.e. `rank mod J_i`. Reduced states are indexed as
//! `code * prod(J) + sum(s_i * prod(J_1..J_{i-1}))`, which coincides with the
//! super-trellis index when every `J_i = M`. Each reduced state keeps the
//! last `nu` symbol ranks of its survivor, and branch outputs use those
//! decisions for the channel history. Add-compare-select follows the same
//! visiting order and tie rule as [`va_decode`](crate::jointva::va_decode).

use crate::codec::Bit;
use crate::error::{Error, Result};
use crate::jointva::{
    best_state, branch_metric, check_length, renormalize, ColumnKind, Column, Decision, DecoderConfig,
    Survivors,
};
use crate::link::{isi_sample, BlockLayout, Link, Termination};
use crate::mapping::Constellation;

/// Subset counts `J_1 >= J_2 >= .. >= J_nu` per channel tap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionProfile {
    subsets: Vec<usize>,
}

pub fn build_partition_profile(subsets: &[usize], c: &Constellation) -> Result<PartitionProfile> {
    let order = c.order();
    for &j in subsets {
        if !j.is_power_of_two() || j > order {
            return Err(Error::InvalidProfile(format!(
                "subset count {j} is not a power of two in 1..={order}"
            )));
        }
    }
    if subsets.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidProfile(format!(
            "{subsets:?} resolves an older symbol more finely than a newer one"
        )));
    }
    Ok(PartitionProfile { subsets: subsets.to_vec() })
}

impl PartitionProfile {
    /// `J_i = M` for every tap: no reduction.
    pub fn full(c: &Constellation, nu: usize) -> Self {
        PartitionProfile { subsets: vec![c.order(); nu] }
    }

    /// `J_i = 1` for every tap: code states only, pure decision feedback.
    pub fn code_only(nu: usize) -> Self {
        PartitionProfile { subsets: vec![1; nu] }
    }

    pub fn subsets(&self) -> &[usize] {
        &self.subsets
    }

    /// Partition level of each tap.
    pub fn levels(&self) -> Vec<usize> {
        self.subsets.iter().map(|j| j.trailing_zeros() as usize).collect()
    }

    /// Number of distinct subset histories, `prod(J_i)`.
    pub fn histories(&self) -> usize {
        self.subsets.iter().product()
    }

    pub fn validate_for(&self, link: &Link) -> Result<()> {
        if self.subsets.len() != link.channel_memory() {
            return Err(Error::InvalidProfile(format!(
                "profile has {} entries for a channel with memory {}",
                self.subsets.len(),
                link.channel_memory()
            )));
        }
        build_partition_profile(&self.subsets, link.constellation()).map(|_| ())
    }

    /// Every valid profile for `M`-ary symbols and channel memory `nu`.
    pub fn enumerate(order: usize, nu: usize) -> Vec<PartitionProfile> {
        let choices: Vec<usize> = (0..=order.trailing_zeros()).map(|l| 1 << l).collect();
        let mut out = vec![Vec::new()];
        for _ in 0..nu {
            out = out
                .into_iter()
                .flat_map(|p: Vec<usize>| {
                    let last = p.last().copied().unwrap_or(usize::MAX);
                    choices
                        .iter()
                        .filter(|&&j| j <= last)
                        .map(move |&j| {
                            let mut q = p.clone();
                            q.push(j);
                            q
                        })
                        .collect::<Vec<_>>()
                })
                .collect();
        }
        out.into_iter().map(|subsets| PartitionProfile { subsets }).collect()
    }

    /// Reduced-state index of `(code, history)` with history ranks newest first.
    fn index_of(&self, code: usize, history: &[u16]) -> usize {
        let mut idx = 0;
        let mut weight = 1;
        for (&r, &j) in history.iter().zip(&self.subsets) {
            idx += (r as usize & (j - 1)) * weight;
            weight *= j;
        }
        code * weight + idx
    }
}

impl std::fmt::Display for PartitionProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.subsets.iter().map(usize::to_string).collect();
        write!(f, "{}", parts.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedState {
    pub code_state: usize,
    /// `s_i = rank(a_{t-i}) mod J_i`.
    pub subsets: Vec<usize>,
}

/// Maps a full super-state (code state, history ranks newest first) to its
/// reduced state.
pub fn reduce_state(code_state: usize, history: &[usize], profile: &PartitionProfile) -> ReducedState {
    ReducedState {
        code_state,
        subsets: history.iter().zip(&profile.subsets).map(|(&r, &j)| r % j).collect(),
    }
}

impl ReducedState {
    pub fn index(&self, profile: &PartitionProfile) -> usize {
        let mut idx = 0;
        let mut weight = 1;
        for (&s, &j) in self.subsets.iter().zip(&profile.subsets) {
            idx += s * weight;
            weight *= j;
        }
        self.code_state * weight + idx
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityReport {
    pub full_states: usize,
    pub reduced_states: usize,
    /// Add-compare-select branch evaluations per received symbol.
    pub branches_per_step: f64,
    pub reduction_factor: f64,
}

pub fn complexity_report(link: &Link, profile: &PartitionProfile) -> ComplexityReport {
    let code_states = link.code().states();
    let full_states = code_states * link.constellation().order().pow(link.channel_memory() as u32);
    let reduced_states = code_states * profile.histories();
    let per_period: usize = link.tables().iter().map(|t| t.branches()).sum();
    let branches_per_step =
        (reduced_states * per_period) as f64 / link.schedule().period_symbols() as f64;
    ComplexityReport {
        full_states,
        reduced_states,
        branches_per_step,
        reduction_factor: full_states as f64 / reduced_states as f64,
    }
}

/// Stepwise RSSE decoder over one block.
pub struct RsseDecoder<'a> {
    link: &'a Link,
    profile: PartitionProfile,
    layout: BlockLayout,
    received: &'a [f64],
    nu: usize,
    states: usize,
    metrics: Vec<f64>,
    next_metrics: Vec<f64>,
    /// Survivor symbol ranks, `nu` per state, newest first.
    feedback: Vec<u16>,
    next_feedback: Vec<u16>,
    offset: f64,
    survivors: Survivors<'a>,
    section: usize,
    flushed: usize,
    tau: usize,
    first_step: usize,
}

impl<'a> RsseDecoder<'a> {
    pub fn new(
        received: &'a [f64],
        link: &'a Link,
        profile: &PartitionProfile,
        layout: &BlockLayout,
        cfg: &DecoderConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        profile.validate_for(link)?;
        let nu = link.channel_memory();
        check_length(received, layout, nu)?;
        let histories = profile.histories();
        let states = link.code().states() * histories;
        let mut metrics = vec![f64::INFINITY; states];
        metrics[0] = 0.0;
        Ok(RsseDecoder {
            link,
            profile: profile.clone(),
            layout: *layout,
            received,
            nu,
            states,
            metrics,
            next_metrics: vec![f64::INFINITY; states],
            feedback: vec![0; states * nu],
            next_feedback: vec![0; states * nu],
            offset: 0.0,
            survivors: Survivors::new(link, *layout, cfg, histories),
            section: 0,
            flushed: 0,
            tau: 0,
            first_step: 0,
        })
    }

    pub fn states(&self) -> usize {
        self.states
    }

    /// Path metric of `state` relative to the current best.
    pub fn metric(&self, state: usize) -> f64 {
        self.metrics[state]
    }

    /// Survivor decisions held by `state`, newest first.
    pub fn feedback(&self, state: usize) -> &[u16] {
        &self.feedback[state * self.nu..(state + 1) * self.nu]
    }

    /// Symbols on the survivor ending in `state`, traced back through the
    /// stored survivor memory, newest first.
    pub fn traced_symbols(&self, state: usize) -> Vec<usize> {
        self.survivors.traced_symbols(state)
    }

    pub fn is_done(&self) -> bool {
        self.section == self.layout.sections && self.flushed == self.nu
    }

    /// Processes the next section, or the next flush sample once all
    /// sections are consumed. Returns `false` when the block is complete.
    pub fn advance(&mut self) -> bool {
        if self.section < self.layout.sections {
            self.advance_section();
            true
        } else if self.flushed < self.nu {
            self.advance_flush();
            true
        } else {
            false
        }
    }

    fn advance_section(&mut self) {
        let link = self.link;
        let nu = self.nu;
        let index = self.section;
        let table = link.table(index);
        let taps = link.taps();
        let constellation = link.constellation();
        let amp = |r: u16| constellation.amplitude(r as usize);
        let forced = self.layout.termination == Termination::Known
            && self.first_step + table.steps > self.layout.info_steps;
        let y = &self.received[self.tau..self.tau + table.symbols];
        let histories = self.profile.histories();
        let mut column: Column = vec![(0, 0); self.states];
        let mut history = vec![0u16; table.symbols + nu];
        self.next_metrics.fill(f64::INFINITY);

        for s in 0..self.states {
            let pm = self.metrics[s];
            if !pm.is_finite() {
                continue;
            }
            let code = s / histories;
            let fb = &self.feedback[s * nu..(s + 1) * nu];
            for b in 0..table.branches() {
                if forced && !link.branch_allowed(index, self.first_step, code, b, &self.layout) {
                    continue;
                }
                let ranks = table.ranks(code, b);
                let mut bm = 0.0;
                for (j, &yj) in y.iter().enumerate() {
                    let expected = isi_sample(taps, self.tau + j, self.layout.symbols, |i| {
                        if i <= j {
                            amp(ranks[j - i])
                        } else {
                            amp(fb[i - j - 1])
                        }
                    });
                    bm += branch_metric(yj, expected);
                }
                let cand = pm + bm;
                // newest first: branch symbols reversed, then the old survivor
                for (slot, &r) in history.iter_mut().zip(ranks.iter().rev().chain(fb)) {
                    *slot = r;
                }
                let ns = self.profile.index_of(table.next_code(code, b), &history[..nu]);
                if cand < self.next_metrics[ns] {
                    self.next_metrics[ns] = cand;
                    column[ns] = (s as u32, b as u32);
                    self.next_feedback[ns * nu..(ns + 1) * nu].copy_from_slice(&history[..nu]);
                }
            }
        }
        self.finish_column(ColumnKind::Section { index, first_step: self.first_step }, column);
        self.tau += table.symbols;
        self.first_step += table.steps;
        self.section += 1;
    }

    fn advance_flush(&mut self) {
        let nu = self.nu;
        let taps = self.link.taps();
        let constellation = self.link.constellation();
        let histories = self.profile.histories();
        let y = self.received[self.tau];
        let mut column: Column = vec![(0, 0); self.states];
        let mut history = vec![0u16; nu];
        self.next_metrics.fill(f64::INFINITY);
        for s in 0..self.states {
            let pm = self.metrics[s];
            if !pm.is_finite() {
                continue;
            }
            let fb = &self.feedback[s * nu..(s + 1) * nu];
            let expected = isi_sample(taps, self.tau, self.layout.symbols, |i| {
                constellation.amplitude(fb[i - 1] as usize)
            });
            let cand = pm + branch_metric(y, expected);
            history[0] = 0;
            history[1..].copy_from_slice(&fb[..nu - 1]);
            let ns = self.profile.index_of(s / histories, &history);
            if cand < self.next_metrics[ns] {
                self.next_metrics[ns] = cand;
                column[ns] = (s as u32, 0);
                self.next_feedback[ns * nu..(ns + 1) * nu].copy_from_slice(&history);
            }
        }
        self.finish_column(ColumnKind::Flush, column);
        self.tau += 1;
        self.flushed += 1;
    }

    fn finish_column(&mut self, kind: ColumnKind, column: Column) {
        std::mem::swap(&mut self.metrics, &mut self.next_metrics);
        std::mem::swap(&mut self.feedback, &mut self.next_feedback);
        self.offset += renormalize(&mut self.metrics);
        self.survivors.push(kind, column, best_state(&self.metrics));
    }

    /// Runs any remaining steps and traces back the decision.
    pub fn finish(mut self, termination: Termination) -> Decision {
        while self.advance() {}
        let end = match termination {
            Termination::Known => 0,
            Termination::Free => best_state(&self.metrics),
        };
        let metric = self.metrics[end] + self.offset;
        let (info_bits, symbols): (Vec<Bit>, Vec<usize>) = self.survivors.finish(end);
        Decision { info_bits, symbols, metric }
    }
}

/// Reduced-state Viterbi decoding with per-survivor decision feedback.
pub fn rsse_decode(
    received: &[f64],
    link: &Link,
    profile: &PartitionProfile,
    layout: &BlockLayout,
    cfg: &DecoderConfig,
) -> Result<Decision> {
    Ok(RsseDecoder::new(received, link, profile, layout, cfg)?.finish(cfg.termination))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{add_awgn, derive_stream, ChannelModel};
    use crate::codec::{build_code_trellis, CodeSpec, CodeTrellis, PuncturePattern};
    use crate::jointva::{build_super_trellis, va_decode};
    use crate::mapping::build_constellation;
    use rand::Rng;

    fn link(mask: &[&str], taps: Vec<f64>) -> Link {
        let code = build_code_trellis(&CodeSpec::feedforward(&[0o7, 0o5], 2)).unwrap();
        let pattern = PuncturePattern::from_strings(mask, 0).unwrap();
        Link::new(code, pattern, build_constellation(2, true).unwrap(), 0, taps).unwrap()
    }

    fn profile(j: &[usize]) -> PartitionProfile {
        build_partition_profile(j, &build_constellation(2, true).unwrap()).unwrap()
    }

    #[test]
    fn profile_validation() {
        let c = build_constellation(2, false).unwrap();
        assert!(build_partition_profile(&[4, 4], &c).is_ok());
        assert!(build_partition_profile(&[1, 1], &c).is_ok());
        assert!(build_partition_profile(&[2, 4], &c).is_err());
        assert!(build_partition_profile(&[3], &c).is_err());
        assert!(build_partition_profile(&[8], &c).is_err());
        assert!(build_partition_profile(&[0], &c).is_err());
        assert_eq!(profile(&[4, 2]).levels(), vec![2, 1]);
        assert_eq!(PartitionProfile::enumerate(4, 2).len(), 6);
        assert_eq!(PartitionProfile::enumerate(4, 0), vec![PartitionProfile { subsets: vec![] }]);
    }

    #[test]
    fn state_reduction_examples() {
        let full = profile(&[4, 4]);
        let mut seen = std::collections::HashSet::new();
        for code in 0..4 {
            for h in 0..16 {
                let hist = [h % 4, h / 4];
                let r = reduce_state(code, &hist, &full);
                assert_eq!(r.subsets, hist.to_vec());
                // index coincides with the super-trellis numbering
                assert_eq!(r.index(&full), code * 16 + h);
                seen.insert(r.index(&full));
            }
        }
        assert_eq!(seen.len(), 64);

        let r = reduce_state(3, &[2, 1], &profile(&[1, 1]));
        assert_eq!(r, ReducedState { code_state: 3, subsets: vec![0, 0] });
        assert_eq!(reduce_state(0, &[3], &profile(&[2])).subsets, vec![1]);
    }

    #[test]
    fn complexity_examples() {
        let two_tap = link(&["1", "1"], ChannelModel::preset("two-tap").unwrap().taps().to_vec());
        let r = complexity_report(&two_tap, &profile(&[2]));
        assert_eq!((r.full_states, r.reduced_states, r.reduction_factor), (16, 8, 2.0));
        assert_eq!(r.branches_per_step, 16.0);

        let three_tap = link(&["1", "1"], ChannelModel::preset("three-tap").unwrap().taps().to_vec());
        let r = complexity_report(&three_tap, &profile(&[1, 1]));
        assert_eq!((r.full_states, r.reduced_states, r.reduction_factor), (64, 4, 16.0));
        let r = complexity_report(&three_tap, &profile(&[4, 4]));
        assert_eq!(r.reduction_factor, 1.0);
    }

    #[test]
    fn complexity_is_monotone_in_each_subset_count() {
        let l = link(&["1", "1"], vec![0.5, 0.7, 0.5]);
        for p in PartitionProfile::enumerate(4, 2) {
            let base = complexity_report(&l, &p).reduced_states;
            for i in 0..2 {
                if p.subsets[i] > 1 {
                    let mut q = p.subsets.clone();
                    q[i] /= 2;
                    if let Ok(q) = build_partition_profile(&q, l.constellation()) {
                        assert!(complexity_report(&l, &q).reduced_states < base);
                    }
                }
            }
        }
    }

    #[test]
    fn full_profile_reproduces_viterbi() {
        let mut rng = derive_stream(21, 0);
        for (mask, taps) in [
            (vec!["1", "1"], vec![1.0, 0.5]),
            (vec!["11", "10"], vec![0.5, 0.707, 0.5]),
        ] {
            let l = link(&mask, taps);
            let st = build_super_trellis(&l).unwrap();
            let full = PartitionProfile::full(l.constellation(), l.channel_memory());
            for termination in [Termination::Known, Termination::Free] {
                let cfg = DecoderConfig::default_for(&l).with_termination(termination);
                let layout = l.layout(300, termination);
                for _ in 0..5 {
                    let info: Vec<Bit> = (0..layout.info_bits).map(|_| rng.random_range(0..2)).collect();
                    let y = add_awgn(&l.noiseless_output(&info, &layout).unwrap(), 0.5, &mut rng).unwrap();
                    let va = va_decode(&y, &st, &layout, &cfg).unwrap();
                    let rs = rsse_decode(&y, &l, &full, &layout, &cfg).unwrap();
                    assert_eq!(va, rs);
                }
            }
        }
    }

    #[test]
    fn full_profile_reproduces_viterbi_on_random_links() {
        let mut rng = derive_stream(24, 0);
        let ff = |g: &[u32], m| build_code_trellis(&CodeSpec::feedforward(g, m)).unwrap();
        let setups: Vec<(CodeTrellis, Vec<&str>, usize, usize)> = vec![
            (ff(&[0o7, 0o5], 2), vec!["1", "1"], 2, 0),
            (ff(&[0o7, 0o5], 2), vec!["11", "10"], 2, 0),
            (ff(&[0o7, 0o5], 2), vec!["1", "1"], 3, 1),
            (ff(&[0o7, 0o5], 2), vec!["1", "1"], 1, 0),
            (ff(&[0o13, 0o15, 0o17], 3), vec!["1", "1", "1"], 3, 0),
            (ff(&[0o13, 0o15, 0o17], 3), vec!["11", "10", "01"], 2, 0),
            (build_code_trellis(&CodeSpec::systematic_feedback(&[0o5, 0o2], 2)).unwrap(), vec!["1", "1"], 2, 0),
            (CodeTrellis::uncoded(), vec!["1"], 2, 0),
        ];
        let mut configs = 0;
        for (code, mask, n, u) in &setups {
            for nu in [1, 2] {
                let taps: Vec<f64> = (0..=nu).map(|i| if i == 0 { 1.0 } else { rng.random_range(-0.8..0.8) }).collect();
                let pattern = PuncturePattern::from_strings(mask, 0).unwrap();
                let l = Link::new(code.clone(), pattern, build_constellation(*n, true).unwrap(), *u, taps).unwrap();
                let st = build_super_trellis(&l).unwrap();
                let full = PartitionProfile::full(l.constellation(), nu);
                for termination in [Termination::Known, Termination::Free] {
                    let cfg = DecoderConfig::default_for(&l).with_termination(termination);
                    let layout = l.layout(60, termination);
                    for _ in 0..3 {
                        let info: Vec<Bit> = (0..layout.info_bits).map(|_| rng.random_range(0..2)).collect();
                        let y = add_awgn(&l.noiseless_output(&info, &layout).unwrap(), 0.4, &mut rng).unwrap();
                        let va = va_decode(&y, &st, &layout, &cfg).unwrap();
                        let rs = rsse_decode(&y, &l, &full, &layout, &cfg).unwrap();
                        assert_eq!(va, rs);
                        assert_eq!(l.transmit(&rs.info_bits, &layout).unwrap(), rs.symbols);
                    }
                }
                configs += 1;
            }
        }
        assert!(configs >= 10);
    }

    #[test]
    fn feedback_matches_traced_survivors() {
        let mut rng = derive_stream(22, 0);
        let l = link(&["11", "10"], vec![0.5, 0.707, 0.5]);
        let cfg = DecoderConfig::default_for(&l);
        let layout = l.layout(12, Termination::Known);
        for p in PartitionProfile::enumerate(4, 2) {
            for _ in 0..10 {
                let info: Vec<Bit> = (0..layout.info_bits).map(|_| rng.random_range(0..2)).collect();
                let y = add_awgn(&l.noiseless_output(&info, &layout).unwrap(), 0.4, &mut rng).unwrap();
                let mut dec = RsseDecoder::new(&y, &l, &p, &layout, &cfg).unwrap();
                while dec.advance() {
                    for s in 0..dec.states() {
                        if !dec.metric(s).is_finite() {
                            continue;
                        }
                        let mut traced = dec.traced_symbols(s);
                        traced.resize(2, 0);
                        let fb: Vec<usize> = dec.feedback(s).iter().map(|&r| r as usize).collect();
                        assert_eq!(fb, traced[..2], "profile {p} state {s}");
                        // the survivor's symbols lie in the subsets the state resolves
                        let r = reduce_state(s / p.histories(), &fb, &p);
                        assert_eq!(r.index(&p), s);
                    }
                }
            }
        }
    }

    #[test]
    fn noiseless_recovery_any_profile() {
        let mut rng = derive_stream(23, 0);
        let l = link(&["11", "10"], vec![0.5, 0.707, 0.5]);
        for p in PartitionProfile::enumerate(4, 2) {
            for termination in [Termination::Known, Termination::Free] {
                let cfg = DecoderConfig::default_for(&l).with_termination(termination);
                let layout = l.layout(100, termination);
                for _ in 0..10 {
                    let info: Vec<Bit> = (0..layout.info_bits).map(|_| rng.random_range(0..2)).collect();
                    let y = l.noiseless_output(&info, &layout).unwrap();
                    let d = rsse_decode(&y, &l, &p, &layout, &cfg).unwrap();
                    assert_eq!(d.info_bits, info, "profile {p}");
                    assert_eq!(l.transmit(&d.info_bits, &layout).unwrap(), d.symbols);
                }
            }
        }
    }

    #[test]
    fn profile_length_must_match_channel() {
        let l = link(&["1", "1"], vec![1.0, 0.5]);
        let layout = l.layout(10, Termination::Known);
        let y = vec![0.0; layout.symbols + 1];
        let cfg = DecoderConfig::default_for(&l);
        assert!(rsse_decode(&y, &l, &profile(&[2, 2]), &layout, &cfg).is_err());
        assert!(rsse_decode(&y[1..], &l, &profile(&[2]), &layout, &cfg).is_err());
    }
}
