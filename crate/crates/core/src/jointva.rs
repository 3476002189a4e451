//! Joint code/channel super-trellis and maximum-likelihood sequence decoding.
//!
//! A super-state is `(code state, ranks of the last nu symbols)`, indexed as
//! `code * M^nu + sum(r_i * M^(i-1))` with `r_1` the newest symbol. One
//! trellis section covers one [`SectionTable`](crate::link::SectionTable):
//! its branches may carry several symbols when puncturing makes a label span
//! encoder steps. After the last section, `nu` flush steps consume the
//! channel transient with a silent input.
//!
//! Ties in add-compare-select go to the lowest predecessor state index, then
//! the lowest branch index, which is the lexicographic input order used by
//! [`ml_bruteforce`].

use std::collections::VecDeque;

use crate::channel::apply_isi;
use crate::codec::Bit;
use crate::error::{Error, Result};
use crate::link::{isi_sample, BlockLayout, Link, Termination};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecoderConfig {
    /// Decision delay in symbols for free-running blocks. Terminated blocks
    /// always use full traceback.
    pub traceback_depth: usize,
    pub termination: Termination,
}

impl DecoderConfig {
    /// `5 (m + nu)` symbols of traceback.
    pub fn default_for(link: &Link) -> Self {
        DecoderConfig {
            traceback_depth: default_traceback_depth(link),
            termination: Termination::Known,
        }
    }

    pub fn with_termination(mut self, termination: Termination) -> Self {
        self.termination = termination;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.traceback_depth == 0 {
            return Err(Error::InvalidArgument("traceback depth must be at least 1".into()));
        }
        Ok(())
    }
}

pub fn default_traceback_depth(link: &Link) -> usize {
    (5 * (link.code().memory() + link.channel_memory())).max(1)
}

/// Decoder output for one block.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub info_bits: Vec<Bit>,
    /// Ranks of the decided symbols.
    pub symbols: Vec<usize>,
    /// Accumulated squared Euclidean distance of the winning path.
    pub metric: f64,
}

/// Squared Euclidean distance.
#[inline]
pub fn branch_metric(y: f64, y_hat: f64) -> f64 {
    let d = y - y_hat;
    d * d
}

/// One section of the super-trellis.
#[derive(Debug, Clone)]
pub struct SuperSection {
    pub branches: usize,
    pub symbols: usize,
    next: Vec<u32>,
    y_hat: Vec<f64>,
}

impl SuperSection {
    pub fn next_state(&self, state: usize, branch: usize) -> usize {
        self.next[state * self.branches + branch] as usize
    }

    /// Steady-state noiseless outputs of a branch, one per symbol.
    pub fn y_hat(&self, state: usize, branch: usize) -> &[f64] {
        let at = (state * self.branches + branch) * self.symbols;
        &self.y_hat[at..at + self.symbols]
    }
}

#[derive(Debug, Clone)]
pub struct SuperTrellis<'a> {
    link: &'a Link,
    histories: usize,
    sections: Vec<SuperSection>,
}

/// Expands the link's code sections with the channel memory.
pub fn build_super_trellis(link: &Link) -> Result<SuperTrellis<'_>> {
    let m_order = link.constellation().order();
    let nu = link.channel_memory();
    let histories = m_order
        .checked_pow(nu as u32)
        .filter(|&h| h.saturating_mul(link.code().states()) <= 1 << 24)
        .ok_or_else(|| Error::InvalidSchedule("super-trellis too large".into()))?;
    let states = link.code().states() * histories;
    let taps = link.taps();
    let amp = |r: usize| link.constellation().amplitude(r);

    let sections = link
        .tables()
        .iter()
        .map(|table| {
            let branches = table.branches();
            let symbols = table.symbols;
            let mut next = Vec::with_capacity(states * branches);
            let mut y_hat = Vec::with_capacity(states * branches * symbols);
            let mut hist = vec![0usize; nu];
            for s in 0..states {
                let code = s / histories;
                unpack_history(s % histories, m_order, &mut hist);
                for b in 0..branches {
                    let ranks = table.ranks(code, b);
                    for j in 0..symbols {
                        let lag_amp = |i: usize| {
                            if i <= j {
                                amp(ranks[j - i] as usize)
                            } else {
                                amp(hist[i - j - 1])
                            }
                        };
                        y_hat.push(isi_sample(taps, usize::MAX / 2, usize::MAX, lag_amp));
                    }
                    let h = push_history(s % histories, ranks, m_order, histories);
                    next.push((table.next_code(code, b) * histories + h) as u32);
                }
            }
            SuperSection { branches, symbols, next, y_hat }
        })
        .collect();
    Ok(SuperTrellis { link, histories, sections })
}

/// Writes history digits (newest first) of `index` into `out`.
fn unpack_history(mut index: usize, order: usize, out: &mut [usize]) {
    for d in out.iter_mut() {
        *d = index % order;
        index /= order;
    }
}

/// History index after sending `ranks` (time order) from history `index`.
fn push_history(index: usize, ranks: &[u16], order: usize, histories: usize) -> usize {
    ranks.iter().fold(index, |h, &r| (h * order + r as usize) % histories)
}

impl<'a> SuperTrellis<'a> {
    pub fn link(&self) -> &'a Link {
        self.link
    }

    pub fn states(&self) -> usize {
        self.link.code().states() * self.histories
    }

    pub fn sections(&self) -> &[SuperSection] {
        &self.sections
    }

    pub fn section(&self, index: usize) -> &SuperSection {
        &self.sections[index % self.sections.len()]
    }

    pub fn code_state(&self, state: usize) -> usize {
        state / self.histories
    }

    /// Ranks of the last `nu` symbols of a super-state, newest first.
    pub fn history(&self, state: usize) -> Vec<usize> {
        let mut h = vec![0; self.link.channel_memory()];
        unpack_history(state % self.histories, self.link.constellation().order(), &mut h);
        h
    }
}

/// One ACS column: for every state the winning (predecessor, branch).
pub(crate) type Column = Vec<(u32, u32)>;

pub(crate) enum ColumnKind {
    /// Block section index and the global index of its first step.
    Section { index: usize, first_step: usize },
    Flush,
}

/// Survivor memory with optional sliding-window decisions.
pub(crate) struct Survivors<'a> {
    link: &'a Link,
    layout: BlockLayout,
    /// Divisor mapping a decoder state to its code state.
    code_divisor: usize,
    window: Option<usize>,
    columns: VecDeque<(ColumnKind, Column)>,
    info: Vec<Bit>,
    symbols: Vec<usize>,
}

impl<'a> Survivors<'a> {
    pub(crate) fn new(link: &'a Link, layout: BlockLayout, cfg: &DecoderConfig, code_divisor: usize) -> Self {
        let window = match cfg.termination {
            Termination::Known => None,
            Termination::Free => {
                // enough sections that any window holds >= D symbols
                let min_syms = link.tables().iter().map(|t| t.symbols).min().unwrap_or(1).max(1);
                Some(cfg.traceback_depth.div_ceil(min_syms))
            }
        };
        Survivors {
            link,
            layout,
            code_divisor,
            window,
            columns: VecDeque::new(),
            info: Vec::with_capacity(layout.info_bits),
            symbols: Vec::with_capacity(layout.symbols),
        }
    }

    /// Stores a column; in windowed mode, decides the oldest section once the
    /// window is full, tracing back from `best`.
    pub(crate) fn push(&mut self, kind: ColumnKind, column: Column, best: usize) {
        self.columns.push_back((kind, column));
        if let Some(w) = self.window {
            if self.columns.len() > w {
                let mut state = best;
                for (_, col) in self.columns.iter().skip(1).rev() {
                    state = col[state].0 as usize;
                }
                let (kind, col) = self.columns.pop_front().unwrap();
                self.emit(&kind, col[state]);
            }
        }
    }

    fn emit(&mut self, kind: &ColumnKind, (pred, branch): (u32, u32)) {
        if let ColumnKind::Section { index, first_step } = *kind {
            let code = pred as usize / self.code_divisor;
            let branch = branch as usize;
            self.link.branch_info(index, first_step, branch, &self.layout, &mut self.info);
            self.symbols
                .extend(self.link.table(index).ranks(code, branch).iter().map(|&r| r as usize));
        }
    }

    /// Traces back the remaining columns from `end` and returns all decisions.
    pub(crate) fn finish(mut self, end: usize) -> (Vec<Bit>, Vec<usize>) {
        let mut path = Vec::with_capacity(self.columns.len());
        let mut state = end;
        for (_, col) in self.columns.iter().rev() {
            path.push(col[state]);
            state = col[state].0 as usize;
        }
        let columns = std::mem::take(&mut self.columns);
        for ((kind, _), step) in columns.iter().zip(path.into_iter().rev()) {
            self.emit(kind, step);
        }
        (self.info, self.symbols)
    }

    /// Ranks along the survivor ending in `state` over the stored columns,
    /// newest first.
    pub(crate) fn traced_symbols(&self, state: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut s = state;
        for (kind, col) in self.columns.iter().rev() {
            let (pred, branch) = col[s];
            match *kind {
                ColumnKind::Section { index, .. } => {
                    let code = pred as usize / self.code_divisor;
                    let ranks = self.link.table(index).ranks(code, branch as usize);
                    out.extend(ranks.iter().rev().map(|&r| r as usize));
                }
                ColumnKind::Flush => out.push(0),
            }
            s = pred as usize;
        }
        out
    }
}

/// Subtracts the minimum finite metric; returns it (0 if none is finite).
pub(crate) fn renormalize(metrics: &mut [f64]) -> f64 {
    let min = metrics.iter().copied().fold(f64::INFINITY, f64::min);
    if min.is_finite() {
        for m in metrics.iter_mut() {
            *m -= min;
        }
        min
    } else {
        0.0
    }
}

/// Lowest-index state with the smallest metric.
pub(crate) fn best_state(metrics: &[f64]) -> usize {
    let mut best = 0;
    for (i, &m) in metrics.iter().enumerate() {
        if m < metrics[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn check_length(received: &[f64], layout: &BlockLayout, nu: usize) -> Result<()> {
    let expected = layout.symbols + nu;
    if received.len() != expected {
        return Err(Error::LengthMismatch { got: received.len(), expected });
    }
    Ok(())
}

/// Viterbi decoding over the full super-trellis.
pub fn va_decode(
    received: &[f64],
    st: &SuperTrellis<'_>,
    layout: &BlockLayout,
    cfg: &DecoderConfig,
) -> Result<Decision> {
    cfg.validate()?;
    let link = st.link;
    let nu = link.channel_memory();
    check_length(received, layout, nu)?;
    let order = link.constellation().order();
    let taps = link.taps();
    let states = st.states();
    let amp = |r: usize| link.constellation().amplitude(r);

    let mut metrics = vec![f64::INFINITY; states];
    metrics[0] = 0.0;
    let mut next_metrics = vec![f64::INFINITY; states];
    let mut offset = 0.0;
    let mut survivors = Survivors::new(link, *layout, cfg, st.histories);
    let mut hist = vec![0usize; nu];
    let mut y_hat = Vec::new();
    let mut tau = 0;
    let mut first_step = 0;

    for index in 0..layout.sections {
        let sec = st.section(index);
        let table = link.table(index);
        let forced = layout.termination == Termination::Known
            && first_step + table.steps > layout.info_steps;
        let startup = tau < nu;
        let y = &received[tau..tau + sec.symbols];
        let mut column: Column = vec![(0, 0); states];
        next_metrics.fill(f64::INFINITY);

        for s in 0..states {
            let pm = metrics[s];
            if !pm.is_finite() {
                continue;
            }
            let code = s / st.histories;
            if startup {
                unpack_history(s % st.histories, order, &mut hist);
            }
            for b in 0..sec.branches {
                if forced && !link.branch_allowed(index, first_step, code, b, layout) {
                    continue;
                }
                let expected = if startup {
                    let ranks = table.ranks(code, b);
                    y_hat.clear();
                    y_hat.extend((0..sec.symbols).map(|j| {
                        isi_sample(taps, tau + j, layout.symbols, |i| {
                            if i <= j {
                                amp(ranks[j - i] as usize)
                            } else {
                                amp(hist[i - j - 1])
                            }
                        })
                    }));
                    &y_hat[..]
                } else {
                    sec.y_hat(s, b)
                };
                let mut bm = 0.0;
                for (&yj, &ej) in y.iter().zip(expected) {
                    bm += branch_metric(yj, ej);
                }
                let cand = pm + bm;
                let ns = sec.next_state(s, b);
                if cand < next_metrics[ns] {
                    next_metrics[ns] = cand;
                    column[ns] = (s as u32, b as u32);
                }
            }
        }
        std::mem::swap(&mut metrics, &mut next_metrics);
        offset += renormalize(&mut metrics);
        survivors.push(ColumnKind::Section { index, first_step }, column, best_state(&metrics));
        tau += sec.symbols;
        first_step += table.steps;
    }

    for _ in 0..nu {
        let y = received[tau];
        let mut column: Column = vec![(0, 0); states];
        next_metrics.fill(f64::INFINITY);
        for s in 0..states {
            let pm = metrics[s];
            if !pm.is_finite() {
                continue;
            }
            unpack_history(s % st.histories, order, &mut hist);
            let expected = isi_sample(taps, tau, layout.symbols, |i| amp(hist[i - 1]));
            let cand = pm + branch_metric(y, expected);
            let ns = (s / st.histories) * st.histories + (s % st.histories) * order % st.histories;
            if cand < next_metrics[ns] {
                next_metrics[ns] = cand;
                column[ns] = (s as u32, 0);
            }
        }
        std::mem::swap(&mut metrics, &mut next_metrics);
        offset += renormalize(&mut metrics);
        survivors.push(ColumnKind::Flush, column, best_state(&metrics));
        tau += 1;
    }

    let end = match layout.termination {
        Termination::Known => 0,
        Termination::Free => best_state(&metrics),
    };
    let metric = metrics[end] + offset;
    let (info_bits, symbols) = survivors.finish(end);
    Ok(Decision { info_bits, symbols, metric })
}

/// Exhaustive maximum-likelihood decision: every candidate block is
/// re-encoded, mapped and convolved, and the one closest to `received` in
/// squared Euclidean distance wins. Candidates are tried in lexicographic
/// order and only a strictly smaller distance replaces the incumbent.
pub fn ml_bruteforce(received: &[f64], link: &Link, layout: &BlockLayout) -> Result<Decision> {
    let n = layout.info_bits;
    if n > 16 {
        return Err(Error::BlockTooLarge(n));
    }
    check_length(received, layout, link.channel_memory())?;
    let mut best: Option<Decision> = None;
    let mut bits = vec![0 as Bit; n];
    for candidate in 0u32..(1 << n) {
        for (i, b) in bits.iter_mut().enumerate() {
            *b = ((candidate >> (n - 1 - i)) & 1) as Bit;
        }
        let ranks = link.transmit(&bits, layout)?;
        let y = apply_isi(&link.amplitudes(&ranks), link.taps())?;
        let d: f64 = received.iter().zip(&y).map(|(&r, &e)| branch_metric(r, e)).sum();
        if best.as_ref().is_none_or(|b| d < b.metric) {
            best = Some(Decision { info_bits: bits.clone(), symbols: ranks, metric: d });
        }
    }
    Ok(best.expect("at least one candidate"))
}
