//! Flat `key = value` simulator configuration.
//!
//! ```text
//! # 4-state code, rate 2/3 after puncturing, 4-ASK over a two-tap channel
//! code.kind        = feedforward      # feedforward | feedback | uncoded
//! code.generators  = 7,5              # octal
//! code.memory      = 2
//! puncture.mask    = 11,10            # one bit string per code output
//! puncture.phase   = 0
//! mapping.bits     = 2
//! mapping.uncoded_bits = 0
//! mapping.normalize = true
//! channel.preset   = two-tap          # or channel.taps = 1,0.5
//! channel.normalize = true            # only with channel.taps
//! decoder.list     = va, rsse:2, rsse:1
//! decoder.profile  = 2                # profile for a bare `rsse` entry
//! decoder.traceback = 15
//! decoder.termination = known         # known | free
//! sim.snr_db       = 0,2,4
//! sim.min_errors   = 100
//! sim.max_bits     = 1000000
//! sim.block_steps  = 200
//! sim.seed         = 1
//! ```
//!
//! Unknown or repeated keys are errors. A `#` starts a comment.

use std::collections::BTreeMap;
use std::path::Path;

use crate::channel::ChannelModel;
use crate::codec::{build_code_trellis, CodeSpec, CodeTrellis, PuncturePattern};
use crate::error::{Error, Result};
use crate::link::{Link, Termination};
use crate::mapping::build_constellation;
use crate::rsse::{build_partition_profile, PartitionProfile};

const KEYS: &[&str] = &[
    "code.kind",
    "code.generators",
    "code.memory",
    "puncture.mask",
    "puncture.phase",
    "mapping.bits",
    "mapping.uncoded_bits",
    "mapping.normalize",
    "channel.preset",
    "channel.taps",
    "channel.normalize",
    "decoder.list",
    "decoder.profile",
    "decoder.traceback",
    "decoder.termination",
    "sim.snr_db",
    "sim.min_errors",
    "sim.max_bits",
    "sim.block_steps",
    "sim.seed",
];

#[derive(Debug, Clone, PartialEq)]
pub enum CodeChoice {
    Uncoded,
    Convolutional(CodeSpec),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecoderKind {
    Va,
    /// RSSE with the given subset counts.
    Rsse(Vec<usize>),
    Oracle,
}

impl DecoderKind {
    pub fn label(&self) -> String {
        match self {
            DecoderKind::Va => "va".into(),
            DecoderKind::Oracle => "oracle".into(),
            DecoderKind::Rsse(j) => {
                let parts: Vec<String> = j.iter().map(usize::to_string).collect();
                format!("rsse:{}", parts.join("/"))
            }
        }
    }

    fn parse(s: &str, default_profile: &Option<Vec<usize>>) -> Result<Self> {
        match s.trim() {
            "va" => Ok(DecoderKind::Va),
            "oracle" => Ok(DecoderKind::Oracle),
            "rsse" => default_profile
                .clone()
                .map(DecoderKind::Rsse)
                .ok_or_else(|| Error::Config("`rsse` needs decoder.profile or an inline profile".into())),
            other => match other.strip_prefix("rsse:") {
                Some(p) => Ok(DecoderKind::Rsse(parse_list(p, '/', "profile")?)),
                None => Err(Error::Config(format!("unknown decoder {other:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub code: CodeChoice,
    /// Mask rows as bit strings; `None` means no puncturing.
    pub puncture_mask: Option<Vec<String>>,
    pub puncture_phase: usize,
    pub bits_per_symbol: usize,
    pub uncoded_bits: usize,
    pub normalize_constellation: bool,
    pub taps: Vec<f64>,
    pub decoders: Vec<DecoderKind>,
    /// Overrides the `5 (m + nu)` default.
    pub traceback_depth: Option<usize>,
    pub termination: Termination,
    pub snr_db: Vec<f64>,
    /// Stop once this many bit errors are collected...
    pub min_errors: u64,
    /// ...or this many bits are simulated.
    pub max_bits: u64,
    /// Information steps per block.
    pub block_steps: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    /// 4-state (7,5) code on 4-ASK over the two-tap preset, full VA.
    fn default() -> Self {
        SimConfig {
            code: CodeChoice::Convolutional(CodeSpec::feedforward(&[0o7, 0o5], 2)),
            puncture_mask: None,
            puncture_phase: 0,
            bits_per_symbol: 2,
            uncoded_bits: 0,
            normalize_constellation: true,
            taps: ChannelModel::preset("two-tap").expect("preset").taps().to_vec(),
            decoders: vec![DecoderKind::Va],
            traceback_depth: None,
            termination: Termination::Known,
            snr_db: vec![6.0],
            min_errors: 100,
            max_bits: 1_000_000,
            block_steps: 200,
            seed: 1,
        }
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, sep: char, what: &str) -> Result<Vec<T>> {
    s.split(sep)
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(|_| Error::Config(format!("bad {what} entry {p:?}"))))
        .collect()
}

fn parse_scalar<T: std::str::FromStr>(s: &str, key: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Config(format!("bad value {s:?} for {key}")))
}

fn parse_snr(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" | "+inf" => Ok(f64::INFINITY),
        v => v.parse().map_err(|_| Error::Config(format!("bad SNR {v:?}"))),
    }
}

impl SimConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut kv: BTreeMap<&str, &str> = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(Error::Config(format!("line {}: unknown key {key:?}", n + 1)));
            }
            if kv.insert(key, value.trim()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key {key:?}", n + 1)));
            }
        }

        let mut cfg = SimConfig::default();
        let kind = kv.get("code.kind").copied().unwrap_or("feedforward");
        cfg.code = match kind {
            "uncoded" => {
                if kv.contains_key("code.generators") || kv.contains_key("code.memory") {
                    return Err(Error::Config("uncoded transmission takes no generators or memory".into()));
                }
                CodeChoice::Uncoded
            }
            "feedforward" | "feedback" => {
                let gens = match kv.get("code.generators") {
                    Some(g) => g
                        .split(',')
                        .map(|p| {
                            u32::from_str_radix(p.trim(), 8)
                                .map_err(|_| Error::Config(format!("bad octal generator {p:?}")))
                        })
                        .collect::<Result<Vec<u32>>>()?,
                    None => vec![0o7, 0o5],
                };
                let memory = match kv.get("code.memory") {
                    Some(m) => parse_scalar(m, "code.memory")?,
                    None => 2,
                };
                CodeChoice::Convolutional(if kind == "feedback" {
                    CodeSpec::systematic_feedback(&gens, memory)
                } else {
                    CodeSpec::feedforward(&gens, memory)
                })
            }
            other => return Err(Error::Config(format!("unknown code.kind {other:?}"))),
        };
        if let Some(mask) = kv.get("puncture.mask") {
            cfg.puncture_mask = Some(mask.split(',').map(|r| r.trim().to_string()).collect());
        }
        if let Some(p) = kv.get("puncture.phase") {
            cfg.puncture_phase = parse_scalar(p, "puncture.phase")?;
        }
        if let Some(b) = kv.get("mapping.bits") {
            cfg.bits_per_symbol = parse_scalar(b, "mapping.bits")?;
        }
        if let Some(u) = kv.get("mapping.uncoded_bits") {
            cfg.uncoded_bits = parse_scalar(u, "mapping.uncoded_bits")?;
        }
        if let Some(v) = kv.get("mapping.normalize") {
            cfg.normalize_constellation = parse_scalar(v, "mapping.normalize")?;
        }
        cfg.taps = match (kv.get("channel.preset"), kv.get("channel.taps")) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either channel.preset or channel.taps".into()))
            }
            (Some(name), None) => {
                if kv.contains_key("channel.normalize") {
                    return Err(Error::Config("channel.normalize applies to channel.taps only".into()));
                }
                ChannelModel::preset(name).map_err(|e| Error::Config(e.to_string()))?.taps().to_vec()
            }
            (None, Some(taps)) => {
                let normalize = match kv.get("channel.normalize") {
                    Some(v) => parse_scalar(v, "channel.normalize")?,
                    None => false,
                };
                ChannelModel::new(parse_list(taps, ',', "tap")?, normalize)
                    .map_err(|e| Error::Config(e.to_string()))?
                    .taps()
                    .to_vec()
            }
            (None, None) => cfg.taps,
        };
        let default_profile = kv.get("decoder.profile").map(|p| parse_list(p, ',', "profile")).transpose()?;
        if let Some(list) = kv.get("decoder.list") {
            cfg.decoders = list
                .split(',')
                .filter(|d| !d.trim().is_empty())
                .map(|d| DecoderKind::parse(d, &default_profile))
                .collect::<Result<_>>()?;
        } else if let Some(p) = default_profile {
            cfg.decoders = vec![DecoderKind::Rsse(p)];
        }
        if let Some(d) = kv.get("decoder.traceback") {
            cfg.traceback_depth = Some(parse_scalar(d, "decoder.traceback")?);
        }
        if let Some(t) = kv.get("decoder.termination") {
            cfg.termination = match *t {
                "known" => Termination::Known,
                "free" => Termination::Free,
                other => return Err(Error::Config(format!("unknown termination {other:?}"))),
            };
        }
        if let Some(s) = kv.get("sim.snr_db") {
            cfg.snr_db = s.split(',').map(parse_snr).collect::<Result<_>>()?;
        }
        if let Some(v) = kv.get("sim.min_errors") {
            cfg.min_errors = parse_scalar(v, "sim.min_errors")?;
        }
        if let Some(v) = kv.get("sim.max_bits") {
            cfg.max_bits = parse_scalar(v, "sim.max_bits")?;
        }
        if let Some(v) = kv.get("sim.block_steps") {
            cfg.block_steps = parse_scalar(v, "sim.block_steps")?;
        }
        if let Some(v) = kv.get("sim.seed") {
            cfg.seed = parse_scalar(v, "sim.seed")?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn code_trellis(&self) -> Result<CodeTrellis> {
        match &self.code {
            CodeChoice::Uncoded => Ok(CodeTrellis::uncoded()),
            CodeChoice::Convolutional(spec) => build_code_trellis(spec),
        }
    }

    pub fn build_link(&self) -> Result<Link> {
        let code = self.code_trellis()?;
        let pattern = match &self.puncture_mask {
            Some(rows) => PuncturePattern::from_strings(rows, self.puncture_phase)?,
            None if self.puncture_phase == 0 => PuncturePattern::all_ones(code.outputs()),
            None => return Err(Error::Config("puncture.phase given without puncture.mask".into())),
        };
        let constellation = build_constellation(self.bits_per_symbol, self.normalize_constellation)?;
        Link::new(code, pattern, constellation, self.uncoded_bits, self.taps.clone())
    }

    pub fn profile(&self, link: &Link, subsets: &[usize]) -> Result<PartitionProfile> {
        let p = build_partition_profile(subsets, link.constellation())?;
        p.validate_for(link)?;
        Ok(p)
    }

    /// Cross-module consistency checks. Every failure is reported as a
    /// configuration error.
    pub fn validate(&self) -> Result<()> {
        let inner = || -> Result<()> {
            let link = self.build_link()?;
            if self.snr_db.is_empty() {
                return Err(Error::Config("sim.snr_db is empty".into()));
            }
            if self.snr_db.iter().any(|s| s.is_nan()) {
                return Err(Error::Config("SNR values must be numbers".into()));
            }
            if self.decoders.is_empty() {
                return Err(Error::Config("no decoder selected".into()));
            }
            if self.min_errors == 0 || self.max_bits == 0 {
                return Err(Error::Config("sim.min_errors and sim.max_bits must be positive".into()));
            }
            if self.block_steps == 0 {
                return Err(Error::Config("sim.block_steps must be positive".into()));
            }
            if self.traceback_depth == Some(0) {
                return Err(Error::Config("decoder.traceback must be at least 1".into()));
            }
            let layout = link.layout(self.block_steps, self.termination);
            for d in &self.decoders {
                match d {
                    DecoderKind::Rsse(j) => {
                        self.profile(&link, j)?;
                    }
                    DecoderKind::Oracle if layout.info_bits > 16 => {
                        return Err(Error::Config(format!(
                            "oracle decoding needs at most 16 information bits per block, layout has {}",
                            layout.info_bits
                        )));
                    }
                    _ => {}
                }
            }
            Ok(())
        };
        inner().map_err(|e| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        })
    }
}
