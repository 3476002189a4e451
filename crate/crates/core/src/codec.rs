//! Binary convolutional encoding and periodic puncturing.
//!
//! Generator polynomials are written in octal with the most-significant bit
//! acting on the current input: for memory `m`, bit `m` of the integer is the
//! coefficient of `D^0` and bit `0` is the coefficient of `D^m`. `0o7` with
//! `m = 2` is therefore `1 + D + D^2` and `0o5` is `1 + D^2`.
//!
//! Two realizations are supported:
//!
//! * feedforward, rate `1/n_out`: one shift register of past inputs, one
//!   generator per output bit;
//! * systematic feedback (parity-check form), rate `k/(k+1)`: the generator
//!   list holds the parity-check polynomials `h0, h1, .., hk`. The encoder is
//!   the observer-canonical realization with `m` cells and emits the output
//!   tuple `(x_k, .., x_1, x_0)`, i.e. the systematic bits first and the
//!   parity bit last.

use crate::error::{Error, Result};

/// A single binary digit, always 0 or 1.
pub type Bit = u8;

const MAX_MEMORY: usize = 16;
const MAX_INPUTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeSpec {
    /// Octal generator (or parity-check) polynomials, one per output bit.
    pub generators: Vec<u32>,
    /// Number of shift-register cells.
    pub memory: usize,
    /// Recursive parity-check realization instead of feedforward.
    pub systematic_feedback: bool,
    /// Information bits consumed per trellis step.
    pub inputs_per_step: usize,
}

impl CodeSpec {
    /// Rate `1/n` feedforward code.
    pub fn feedforward(generators: &[u32], memory: usize) -> Self {
        CodeSpec {
            generators: generators.to_vec(),
            memory,
            systematic_feedback: false,
            inputs_per_step: 1,
        }
    }

    /// Rate `k/(k+1)` systematic feedback code from parity-check polynomials
    /// `h0, h1, .., hk`.
    pub fn systematic_feedback(parity_checks: &[u32], memory: usize) -> Self {
        CodeSpec {
            generators: parity_checks.to_vec(),
            memory,
            systematic_feedback: true,
            inputs_per_step: parity_checks.len().saturating_sub(1),
        }
    }

    pub fn n_out(&self) -> usize {
        self.generators.len()
    }

    /// Coefficient of `D^delay` in generator `g`.
    fn coeff(&self, g: u32, delay: usize) -> u32 {
        (g >> (self.memory - delay)) & 1
    }

    pub fn validate(&self) -> Result<()> {
        let n_out = self.n_out();
        let k = self.inputs_per_step;
        if n_out < 2 || n_out <= k {
            return Err(Error::InvalidCode(format!(
                "code with {n_out} outputs and {k} inputs per step is not redundant"
            )));
        }
        if k == 0 || k > MAX_INPUTS {
            return Err(Error::InvalidCode(format!("inputs per step must be in 1..={MAX_INPUTS}")));
        }
        if self.memory == 0 || self.memory > MAX_MEMORY {
            return Err(Error::InvalidCode(format!("memory must be in 1..={MAX_MEMORY}")));
        }
        let limit = 1u32 << (self.memory + 1);
        if let Some(g) = self.generators.iter().find(|&&g| g >= limit) {
            return Err(Error::InvalidCode(format!(
                "polynomial {g:o} has degree above memory {}",
                self.memory
            )));
        }
        if !self.generators.iter().any(|&g| self.coeff(g, self.memory) == 1) {
            return Err(Error::InvalidCode(format!(
                "no polynomial reaches degree {}",
                self.memory
            )));
        }
        if self.systematic_feedback {
            if n_out != k + 1 {
                return Err(Error::InvalidCode(
                    "systematic feedback code needs exactly k+1 parity-check polynomials".into(),
                ));
            }
            if self.coeff(self.generators[0], 0) != 1 {
                return Err(Error::InvalidCode(
                    "feedback polynomial h0 must have a constant term".into(),
                ));
            }
        } else if k != 1 {
            return Err(Error::InvalidCode(
                "feedforward realization supports one input bit per step".into(),
            ));
        }
        Ok(())
    }
}

/// Full branch table of a convolutional code.
#[derive(Debug, Clone)]
pub struct CodeTrellis {
    memory: usize,
    inputs: usize,
    outputs: usize,
    next: Vec<u32>,
    out: Vec<u32>,
    /// `reach[r][s]`: state `s` can be driven to state 0 in exactly `r` steps.
    reach: Vec<Vec<bool>>,
    uncoded: bool,
}

/// Builds the branch table for a validated [`CodeSpec`].
pub fn build_code_trellis(spec: &CodeSpec) -> Result<CodeTrellis> {
    spec.validate()?;
    let m = spec.memory;
    let k = spec.inputs_per_step;
    let n_out = spec.n_out();
    let states = 1usize << m;
    let inputs = 1usize << k;
    let mut next = Vec::with_capacity(states * inputs);
    let mut out = Vec::with_capacity(states * inputs);

    for s in 0..states as u32 {
        for u in 0..inputs as u32 {
            let (ns, o) = if spec.systematic_feedback {
                feedback_step(spec, s, u)
            } else {
                let w = (u << m) | s;
                let o = spec
                    .generators
                    .iter()
                    .fold(0u32, |acc, &g| (acc << 1) | ((w & g).count_ones() & 1));
                (w >> 1, o)
            };
            next.push(ns);
            out.push(o);
        }
    }

    let mut trellis = CodeTrellis {
        memory: m,
        inputs: k,
        outputs: n_out,
        next,
        out,
        reach: Vec::new(),
        uncoded: false,
    };
    trellis.compute_reach();
    if trellis.reach[m].iter().any(|&r| !r) {
        return Err(Error::InvalidCode(format!(
            "encoder cannot be driven to the zero state in {m} steps"
        )));
    }
    Ok(trellis)
}

/// One step of the observer-canonical parity-check encoder.
fn feedback_step(spec: &CodeSpec, state: u32, input: u32) -> (u32, u32) {
    let m = spec.memory;
    let k = spec.inputs_per_step;
    let z = |j: usize| -> u32 {
        if j > m {
            0
        } else {
            (state >> (m - j)) & 1
        }
    };
    let x = |i: usize| -> u32 { (input >> (i - 1)) & 1 };
    let h = &spec.generators;

    let mut x0 = z(1);
    for i in 1..=k {
        x0 ^= spec.coeff(h[i], 0) & x(i);
    }
    let mut ns = 0u32;
    for j in 1..=m {
        let mut zj = z(j + 1) ^ (spec.coeff(h[0], j) & x0);
        for i in 1..=k {
            zj ^= spec.coeff(h[i], j) & x(i);
        }
        ns |= zj << (m - j);
    }
    (ns, (input << 1) | x0)
}

impl CodeTrellis {
    /// Identity "code" for uncoded transmission: one state, one bit in, the
    /// same bit out.
    pub fn uncoded() -> Self {
        let mut t = CodeTrellis {
            memory: 0,
            inputs: 1,
            outputs: 1,
            next: vec![0, 0],
            out: vec![0, 1],
            reach: Vec::new(),
            uncoded: true,
        };
        t.compute_reach();
        t
    }

    fn compute_reach(&mut self) {
        let states = self.states();
        let mut reach = vec![vec![false; states]];
        reach[0][0] = true;
        for r in 1..=self.memory.max(1) {
            let prev = &reach[r - 1];
            let row = (0..states)
                .map(|s| (0..self.branches_per_state()).any(|u| prev[self.next_state(s, u)]))
                .collect();
            reach.push(row);
        }
        self.reach = reach;
    }

    pub fn states(&self) -> usize {
        1 << self.memory
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    /// Information bits per step (`k`).
    pub fn inputs(&self) -> usize {
        self.inputs
    }

    /// Coded bits per step (`n_out`).
    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn branches_per_state(&self) -> usize {
        1 << self.inputs
    }

    pub fn is_uncoded(&self) -> bool {
        self.uncoded
    }

    pub fn next_state(&self, state: usize, input: usize) -> usize {
        self.next[(state << self.inputs) | input] as usize
    }

    /// Output tuple packed with output bit 0 in the most significant position.
    pub fn output(&self, state: usize, input: usize) -> u32 {
        self.out[(state << self.inputs) | input]
    }

    /// Output bit `j` of the branch `(state, input)`.
    pub fn output_bit(&self, state: usize, input: usize, j: usize) -> Bit {
        ((self.output(state, input) >> (self.outputs - 1 - j)) & 1) as Bit
    }

    /// Smallest input that keeps a path from `state` able to reach state 0
    /// within `remaining` steps (counting this one). `None` if no such input
    /// exists.
    pub fn termination_input(&self, state: usize, remaining: usize) -> Option<usize> {
        let r = remaining.clamp(1, self.reach.len() - 1);
        (0..self.branches_per_state()).find(|&u| self.reach[r - 1][self.next_state(state, u)])
    }

    /// Packs `k` bits (first bit most significant) into an input index.
    pub fn pack_input(&self, bits: &[Bit]) -> usize {
        bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize)
    }
}

/// Advances the encoder by one step.
pub fn encode_step(trellis: &CodeTrellis, state: usize, input: &[Bit]) -> Result<(usize, Vec<Bit>)> {
    if state >= trellis.states() {
        return Err(Error::StateOutOfRange { state, states: trellis.states() });
    }
    if input.len() != trellis.inputs() {
        return Err(Error::InvalidArgument(format!(
            "expected {} input bits, got {}",
            trellis.inputs(),
            input.len()
        )));
    }
    let u = trellis.pack_input(input);
    let out = (0..trellis.outputs()).map(|j| trellis.output_bit(state, u, j)).collect();
    Ok((trellis.next_state(state, u), out))
}

/// Encodes `bits` from the zero state. A trailing partial input tuple is
/// zero-padded. With `terminate`, `m` tail steps drive the encoder back to 0.
pub fn encode_block(trellis: &CodeTrellis, bits: &[Bit], terminate: bool) -> Vec<Bit> {
    encode_block_with_state(trellis, bits, terminate).0
}

/// Like [`encode_block`], also returning the final encoder state.
pub fn encode_block_with_state(
    trellis: &CodeTrellis,
    bits: &[Bit],
    terminate: bool,
) -> (Vec<Bit>, usize) {
    let k = trellis.inputs();
    let steps = bits.len().div_ceil(k);
    let tail = if terminate { trellis.memory() } else { 0 };
    let mut coded = Vec::with_capacity((steps + tail) * trellis.outputs());
    let mut state = 0;
    let emit = |state: usize, u: usize, coded: &mut Vec<Bit>| {
        coded.extend((0..trellis.outputs()).map(|j| trellis.output_bit(state, u, j)));
        trellis.next_state(state, u)
    };
    for chunk in bits.chunks(k) {
        let mut u = trellis.pack_input(chunk);
        u <<= k - chunk.len();
        state = emit(state, u, &mut coded);
    }
    for remaining in (1..=tail).rev() {
        let u = trellis
            .termination_input(state, remaining)
            .expect("trellis construction guarantees termination");
        state = emit(state, u, &mut coded);
    }
    (coded, state)
}

/// Periodic bit-deletion mask of shape `n_out x P`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PuncturePattern {
    rows: Vec<Vec<Bit>>,
    phase: usize,
}

impl PuncturePattern {
    pub fn new(rows: Vec<Vec<Bit>>, phase: usize) -> Result<Self> {
        let period = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || period == 0 {
            return Err(Error::InvalidPattern("empty mask".into()));
        }
        if rows.iter().any(|r| r.len() != period) {
            return Err(Error::InvalidPattern("rows have different lengths".into()));
        }
        if rows.iter().flatten().any(|&b| b > 1) {
            return Err(Error::InvalidPattern("mask entries must be 0 or 1".into()));
        }
        if phase >= period {
            return Err(Error::InvalidPattern(format!("phase {phase} outside period {period}")));
        }
        if let Some(col) = (0..period).find(|&c| rows.iter().all(|r| r[c] == 0)) {
            return Err(Error::InvalidPattern(format!("column {col} deletes every output")));
        }
        Ok(PuncturePattern { rows, phase })
    }

    /// No puncturing.
    pub fn all_ones(n_out: usize) -> Self {
        PuncturePattern { rows: vec![vec![1]; n_out], phase: 0 }
    }

    /// Parses rows written as bit strings, e.g. `["11", "10"]`.
    pub fn from_strings<S: AsRef<str>>(rows: &[S], phase: usize) -> Result<Self> {
        let rows = rows
            .iter()
            .map(|r| {
                r.as_ref()
                    .trim()
                    .chars()
                    .map(|c| match c {
                        '0' => Ok(0),
                        '1' => Ok(1),
                        other => Err(Error::InvalidPattern(format!("bad mask character {other:?}"))),
                    })
                    .collect::<Result<Vec<Bit>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows, phase)
    }

    /// Checks the pattern against the code it punctures.
    pub fn validate_for(&self, trellis: &CodeTrellis) -> Result<()> {
        if self.rows.len() != trellis.outputs() {
            return Err(Error::InvalidPattern(format!(
                "mask has {} rows, code has {} outputs",
                self.rows.len(),
                trellis.outputs()
            )));
        }
        let needed = trellis.inputs() * self.period() + 1;
        if !trellis.is_uncoded() && self.kept_per_period() < needed {
            return Err(Error::InvalidPattern(format!(
                "keeps {} bits per period, at least {needed} needed for a redundant code",
                self.kept_per_period()
            )));
        }
        Ok(())
    }

    pub fn rows(&self) -> &[Vec<Bit>] {
        &self.rows
    }

    pub fn n_out(&self) -> usize {
        self.rows.len()
    }

    pub fn period(&self) -> usize {
        self.rows[0].len()
    }

    pub fn phase(&self) -> usize {
        self.phase
    }

    pub fn kept_per_period(&self) -> usize {
        self.rows.iter().flatten().filter(|&&b| b == 1).count()
    }

    /// Mask column applied to encoder step `step` of a block.
    pub fn column(&self, step: usize) -> usize {
        (self.phase + step) % self.period()
    }

    /// Output indices kept at encoder step `step`, in output order.
    pub fn kept_outputs(&self, step: usize) -> Vec<usize> {
        let col = self.column(step);
        (0..self.n_out()).filter(|&j| self.rows[j][col] == 1).collect()
    }

    /// Number of bits that survive puncturing of `steps` encoder steps.
    pub fn punctured_len(&self, steps: usize) -> usize {
        let full = steps / self.period();
        let partial: usize = (0..steps % self.period()).map(|s| self.kept_outputs(s).len()).sum();
        full * self.kept_per_period() + partial
    }

    /// Effective code rate of `trellis` under this pattern.
    pub fn code_rate(&self, trellis: &CodeTrellis) -> f64 {
        (trellis.inputs() * self.period()) as f64 / self.kept_per_period() as f64
    }
}

/// Deletes the coded bits at mask-0 positions.
pub fn puncture(coded: &[Bit], pattern: &PuncturePattern) -> Result<Vec<Bit>> {
    let n_out = pattern.n_out();
    if !coded.len().is_multiple_of(n_out) {
        return Err(Error::LengthNotMultiple { len: coded.len(), n_out });
    }
    let mut out = Vec::with_capacity(pattern.punctured_len(coded.len() / n_out));
    for (step, chunk) in coded.chunks(n_out).enumerate() {
        let col = pattern.column(step);
        out.extend(chunk.iter().zip(pattern.rows()).filter(|(_, row)| row[col] == 1).map(|(&b, _)| b));
    }
    Ok(out)
}
