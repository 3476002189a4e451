//! A complete transmit chain: code, puncturing, schedule, constellation and
//! channel taps, plus the block layout shared by transmitter and decoders.
//!
//! Blocks always start at the first section of the schedule with the encoder
//! in state 0 and a silent channel history. Information bits are consumed
//! section by section: first the `k`-bit inputs of the section's information
//! steps, then the `u` uncoded bits of each of its symbols.

use crate::channel::apply_isi;
use crate::codec::{encode_block, puncture, Bit, CodeTrellis, PuncturePattern};
use crate::error::{Error, Result};
use crate::mapping::{map_labels, Constellation, SymbolSchedule};

/// Sections with more branches per state than this are rejected.
const MAX_SECTION_INPUT_BITS: usize = 16;

/// How a block ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Termination {
    /// The encoder is driven back to state 0 by tail steps and the decoder
    /// knows the final super-state.
    #[default]
    Known,
    /// No tail; the decoder picks the best final state.
    Free,
}

/// Where the information, tail and padding steps of one block sit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockLayout {
    /// Encoder steps driven by information bits.
    pub info_steps: usize,
    pub sections: usize,
    pub total_steps: usize,
    pub symbols: usize,
    pub info_bits: usize,
    pub termination: Termination,
}

impl BlockLayout {
    /// Steps at or after `info_steps` have their input fixed by termination.
    pub fn is_forced(&self, step: usize) -> bool {
        self.termination == Termination::Known && step >= self.info_steps
    }
}

/// Code branches of one schedule section, enumerated per starting code
/// state. Branch index `b` packs the section's step inputs (first step most
/// significant) followed by the uncoded bits of each symbol.
#[derive(Debug, Clone)]
pub struct SectionTable {
    pub steps: usize,
    pub symbols: usize,
    pub input_bits: usize,
    branches: usize,
    next_code: Vec<u32>,
    ranks: Vec<u16>,
}

impl SectionTable {
    pub fn branches(&self) -> usize {
        self.branches
    }

    pub fn next_code(&self, code: usize, branch: usize) -> usize {
        self.next_code[code * self.branches + branch] as usize
    }

    /// Symbol ranks emitted by the branch, in time order.
    pub fn ranks(&self, code: usize, branch: usize) -> &[u16] {
        let at = (code * self.branches + branch) * self.symbols;
        &self.ranks[at..at + self.symbols]
    }
}

#[derive(Debug, Clone)]
pub struct Link {
    code: CodeTrellis,
    pattern: PuncturePattern,
    schedule: SymbolSchedule,
    constellation: Constellation,
    taps: Vec<f64>,
    tables: Vec<SectionTable>,
}

impl Link {
    pub fn new(
        code: CodeTrellis,
        pattern: PuncturePattern,
        constellation: Constellation,
        uncoded_bits: usize,
        taps: Vec<f64>,
    ) -> Result<Self> {
        pattern.validate_for(&code)?;
        if taps.is_empty() {
            return Err(Error::InvalidChannel("empty tap vector".into()));
        }
        let schedule = SymbolSchedule::new(&pattern, code.outputs(), constellation.bits(), uncoded_bits)?;
        let tables = schedule
            .sections()
            .iter()
            .map(|sec| {
                let input_bits = code.inputs() * sec.steps + uncoded_bits * sec.symbols;
                if input_bits > MAX_SECTION_INPUT_BITS {
                    return Err(Error::InvalidSchedule(format!(
                        "a trellis section spans {} steps and {} symbols ({input_bits} input bits); \
                         at most {MAX_SECTION_INPUT_BITS} are supported",
                        sec.steps, sec.symbols
                    )));
                }
                Ok(build_section_table(&code, &schedule, sec.steps, &sec.label_sources, input_bits))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Link { code, pattern, schedule, constellation, taps, tables })
    }

    pub fn code(&self) -> &CodeTrellis {
        &self.code
    }

    pub fn pattern(&self) -> &PuncturePattern {
        &self.pattern
    }

    pub fn schedule(&self) -> &SymbolSchedule {
        &self.schedule
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Channel memory `nu`.
    pub fn channel_memory(&self) -> usize {
        self.taps.len() - 1
    }

    pub fn tables(&self) -> &[SectionTable] {
        &self.tables
    }

    /// Branch table of the `index`-th section of a block.
    pub fn table(&self, index: usize) -> &SectionTable {
        &self.tables[index % self.tables.len()]
    }

    pub fn info_bits_per_symbol(&self) -> f64 {
        self.schedule.info_bits_per_symbol(self.code.inputs())
    }

    /// Layout of a block with `info_steps` information steps. With
    /// [`Termination::Known`] tail steps follow, then zero-input padding up to
    /// the next section boundary. With [`Termination::Free`] the information
    /// steps are rounded up to a section boundary.
    pub fn layout(&self, info_steps: usize, termination: Termination) -> BlockLayout {
        let (needed, info_steps) = match termination {
            Termination::Known => (info_steps + self.code.memory(), info_steps),
            Termination::Free => {
                let s = self.schedule.sections_covering(info_steps);
                (info_steps, self.schedule.steps_in(s))
            }
        };
        let sections = self.schedule.sections_covering(needed);
        let symbols = self.schedule.symbols_in(sections);
        BlockLayout {
            info_steps,
            sections,
            total_steps: self.schedule.steps_in(sections),
            symbols,
            info_bits: self.code.inputs() * info_steps + self.schedule.uncoded_bits() * symbols,
            termination,
        }
    }

    /// Encodes, punctures and maps one block of information bits, returning
    /// the symbol ranks.
    pub fn transmit(&self, info: &[Bit], layout: &BlockLayout) -> Result<Vec<usize>> {
        if info.len() != layout.info_bits {
            return Err(Error::LengthMismatch { got: info.len(), expected: layout.info_bits });
        }
        let k = self.code.inputs();
        let u = self.schedule.uncoded_bits();
        let mut encoder_in = Vec::with_capacity(k * layout.info_steps);
        let mut uncoded = Vec::with_capacity(u * layout.symbols);
        let mut rest = info;
        let mut step = 0;
        for i in 0..layout.sections {
            let sec = self.schedule.section(i);
            for _ in 0..sec.steps {
                if !layout.is_forced(step) {
                    let (head, tail) = rest.split_at(k);
                    encoder_in.extend_from_slice(head);
                    rest = tail;
                }
                step += 1;
            }
            let (head, tail) = rest.split_at(u * sec.symbols);
            uncoded.extend_from_slice(head);
            rest = tail;
        }
        let terminate = layout.termination == Termination::Known;
        let mut coded = encode_block(&self.code, &encoder_in, terminate);
        // padding steps hold state 0 with zero input and emit zeros
        coded.resize(layout.total_steps * self.code.outputs(), 0);
        let kept = puncture(&coded, &self.pattern)?;
        let labels = map_labels(&kept, &uncoded, &self.schedule);
        debug_assert_eq!(labels.len(), layout.symbols);
        Ok(labels)
    }

    pub fn amplitudes(&self, ranks: &[usize]) -> Vec<f64> {
        ranks.iter().map(|&r| self.constellation.amplitude(r)).collect()
    }

    /// Noiseless channel output for a block, `symbols + nu` samples long.
    pub fn noiseless_output(&self, info: &[Bit], layout: &BlockLayout) -> Result<Vec<f64>> {
        let ranks = self.transmit(info, layout)?;
        apply_isi(&self.amplitudes(&ranks), &self.taps)
    }

    /// Checks that every forced step of branch `b` in block section `section`
    /// (starting at global step `first_step`, from code state `code`) uses the
    /// termination input.
    pub(crate) fn branch_allowed(
        &self,
        section: usize,
        first_step: usize,
        code: usize,
        branch: usize,
        layout: &BlockLayout,
    ) -> bool {
        let table = self.table(section);
        let k = self.code.inputs();
        let mut state = code;
        for j in 0..table.steps {
            let input = step_input(branch, table.input_bits, k, j);
            let step = first_step + j;
            if layout.is_forced(step) {
                let remaining = (layout.info_steps + self.code.memory()).saturating_sub(step);
                if self.code.termination_input(state, remaining) != Some(input) {
                    return false;
                }
            }
            state = self.code.next_state(state, input);
        }
        true
    }

    /// Appends the information bits carried by branch `b` of block section
    /// `section` to `out`, skipping forced steps.
    pub(crate) fn branch_info(
        &self,
        section: usize,
        first_step: usize,
        branch: usize,
        layout: &BlockLayout,
        out: &mut Vec<Bit>,
    ) {
        let table = self.table(section);
        let k = self.code.inputs();
        let u = self.schedule.uncoded_bits();
        for j in 0..table.steps {
            if !layout.is_forced(first_step + j) {
                let input = step_input(branch, table.input_bits, k, j);
                out.extend((0..k).rev().map(|i| ((input >> i) & 1) as Bit));
            }
        }
        let unc_bits = u * table.symbols;
        out.extend((0..unc_bits).rev().map(|i| ((branch >> i) & 1) as Bit));
    }
}

fn step_input(branch: usize, input_bits: usize, k: usize, step: usize) -> usize {
    (branch >> (input_bits - k * (step + 1))) & ((1 << k) - 1)
}

fn build_section_table(
    code: &CodeTrellis,
    schedule: &SymbolSchedule,
    steps: usize,
    label_sources: &[Vec<(usize, usize)>],
    input_bits: usize,
) -> SectionTable {
    let k = code.inputs();
    let u = schedule.uncoded_bits();
    let c = schedule.coded_bits_per_symbol();
    let symbols = label_sources.len();
    let branches = 1usize << input_bits;
    let mut next_code = Vec::with_capacity(code.states() * branches);
    let mut ranks = Vec::with_capacity(code.states() * branches * symbols);
    let mut outputs = vec![0u32; steps];
    for start in 0..code.states() {
        for b in 0..branches {
            let mut state = start;
            for (j, out) in outputs.iter_mut().enumerate() {
                let input = step_input(b, input_bits, k, j);
                *out = code.output(state, input);
                state = code.next_state(state, input);
            }
            next_code.push(state as u32);
            for (t, sources) in label_sources.iter().enumerate() {
                let coded = sources.iter().fold(0usize, |acc, &(s, j)| {
                    (acc << 1) | ((outputs[s] >> (code.outputs() - 1 - j)) & 1) as usize
                });
                let unc = (b >> (u * (symbols - 1 - t))) & ((1 << u) - 1);
                ranks.push(((unc << c) | coded) as u16);
            }
        }
    }
    SectionTable { steps, symbols, input_bits, branches, next_code, ranks }
}

/// Noiseless channel sample at symbol time `tau` of a block with `total`
/// symbols. `symbol_at_lag(i)` yields the amplitude sent at `tau - i`; lags
/// that fall before the block or after its last symbol are silent.
#[inline]
pub(crate) fn isi_sample(taps: &[f64], tau: usize, total: usize, symbol_at_lag: impl Fn(usize) -> f64) -> f64 {
    let mut acc = 0.0;
    for (i, &h) in taps.iter().enumerate() {
        if i > tau {
            break;
        }
        if tau - i >= total {
            continue;
        }
        acc += h * symbol_at_lag(i);
    }
    acc
}
