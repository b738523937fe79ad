//! Trace text format: a header line
//! `# M=<m> T=<t> seed=<s> kind=<zipf|adversarial|coupled|perturbed>`
//! followed by one decimal block id per line.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use super::{BlockId, Trace};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Zipf,
    Adversarial,
    Coupled,
    Perturbed,
}

impl fmt::Display for TraceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TraceKind::Zipf => "zipf",
            TraceKind::Adversarial => "adversarial",
            TraceKind::Coupled => "coupled",
            TraceKind::Perturbed => "perturbed",
        })
    }
}

impl FromStr for TraceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zipf" => Ok(TraceKind::Zipf),
            "adversarial" => Ok(TraceKind::Adversarial),
            "coupled" => Ok(TraceKind::Coupled),
            "perturbed" => Ok(TraceKind::Perturbed),
            other => Err(Error::usage(format!("unknown trace kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceHeader {
    pub seed: u64,
    pub kind: TraceKind,
}

pub fn write_trace<W: Write>(mut out: W, trace: &Trace, header: TraceHeader) -> Result<()> {
    writeln!(
        out,
        "# M={} T={} seed={} kind={}",
        trace.universe_m(),
        trace.len(),
        header.seed,
        header.kind
    )?;
    for b in trace.requests() {
        writeln!(out, "{b}")?;
    }
    Ok(())
}

/// Parses a trace file. `source_name` only labels diagnostics.
pub fn read_trace<R: BufRead>(input: R, source_name: &str) -> Result<(Trace, TraceHeader)> {
    let mut lines = input.lines().enumerate();
    let (_, first) = lines
        .next()
        .ok_or_else(|| Error::parse(source_name, 1, "empty trace file"))?;
    let first = first?;
    let body = first.strip_prefix('#').ok_or_else(|| {
        Error::parse(
            source_name,
            1,
            "missing `# M=.. T=.. seed=.. kind=..` header",
        )
    })?;

    let (mut m, mut t, mut seed, mut kind) = (None, None, None, None);
    for field in body.split_whitespace() {
        let (key, value) = field.split_once('=').ok_or_else(|| {
            Error::parse(source_name, 1, format!("malformed header field `{field}`"))
        })?;
        let bad = |what: &str| Error::parse(source_name, 1, format!("invalid {what} `{value}`"));
        match key {
            "M" => m = Some(value.parse::<usize>().map_err(|_| bad("M"))?),
            "T" => t = Some(value.parse::<usize>().map_err(|_| bad("T"))?),
            "seed" => seed = Some(value.parse::<u64>().map_err(|_| bad("seed"))?),
            "kind" => kind = Some(value.parse::<TraceKind>().map_err(|_| bad("kind"))?),
            other => {
                return Err(Error::parse(
                    source_name,
                    1,
                    format!("unknown header key `{other}`"),
                ))
            }
        }
    }
    let missing = |k: &str| Error::parse(source_name, 1, format!("header lacks `{k}`"));
    let m = m.ok_or_else(|| missing("M"))?;
    let t = t.ok_or_else(|| missing("T"))?;
    let header = TraceHeader {
        seed: seed.ok_or_else(|| missing("seed"))?,
        kind: kind.ok_or_else(|| missing("kind"))?,
    };

    let mut requests = Vec::with_capacity(t);
    for (i, line) in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let id: u32 = line
            .parse()
            .map_err(|_| Error::parse(source_name, i + 1, format!("invalid block id `{line}`")))?;
        if id as usize >= m {
            return Err(Error::parse(
                source_name,
                i + 1,
                format!("block id {id} is not below M={m}"),
            ));
        }
        requests.push(BlockId(id));
    }
    if requests.len() != t {
        return Err(Error::parse(
            source_name,
            1,
            format!(
                "header declares T={t} but the file holds {} requests",
                requests.len()
            ),
        ));
    }
    Ok((Trace::new(requests, m)?, header))
}
