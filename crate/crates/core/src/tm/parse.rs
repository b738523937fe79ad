//! Machine definition files.
//!
//! ```text
//! # comment
//! start: q0
//! halt: done
//! blank: _
//! q0 1 -> q0 0 R
//! ```
//!
//! Symbols are single non-whitespace characters. The tape alphabet is the
//! blank plus every symbol read or written by a transition.

use std::collections::{BTreeSet, HashMap};

use super::{Move, TmSpec, Transition};
use crate::error::{Error, Result};

fn symbol(token: &str, source: &str, line: usize) -> Result<char> {
    let mut chars = token.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Ok(c),
        _ => Err(Error::parse(
            source,
            line,
            format!("symbol `{token}` must be a single character"),
        )),
    }
}

pub fn parse_machine(text: &str, source: &str) -> Result<TmSpec> {
    let mut start = None;
    let mut blank = None;
    let mut halt_states = BTreeSet::new();
    let mut transitions = HashMap::new();
    let mut states = BTreeSet::new();
    let mut alphabet = BTreeSet::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("start:") {
            let name = rest.trim();
            if name.is_empty() {
                return Err(Error::parse(source, line_no, "empty start state"));
            }
            start = Some(name.to_string());
            continue;
        }
        if let Some(rest) = line.strip_prefix("halt:") {
            halt_states.extend(rest.split_whitespace().map(str::to_string));
            continue;
        }
        if let Some(rest) = line.strip_prefix("blank:") {
            blank = Some(symbol(rest.trim(), source, line_no)?);
            continue;
        }

        let tokens: Vec<&str> = line.split_whitespace().collect();
        let [from, read, arrow, to, write, dir] = tokens[..] else {
            return Err(Error::parse(
                source,
                line_no,
                "expected `state symbol -> state' symbol' L|R`",
            ));
        };
        if arrow != "->" {
            return Err(Error::parse(
                source,
                line_no,
                format!("expected `->`, found `{arrow}`"),
            ));
        }
        let movement = match dir {
            "L" => Move::Left,
            "R" => Move::Right,
            other => {
                return Err(Error::parse(
                    source,
                    line_no,
                    format!("move must be L or R, got `{other}`"),
                ))
            }
        };
        let read = symbol(read, source, line_no)?;
        let write = symbol(write, source, line_no)?;
        alphabet.extend([read, write]);
        states.extend([from.to_string(), to.to_string()]);
        let previous = transitions.insert(
            (from.to_string(), read),
            Transition {
                next_state: to.to_string(),
                write,
                movement,
            },
        );
        if previous.is_some() {
            return Err(Error::parse(
                source,
                line_no,
                format!("duplicate transition for `{from}` on `{read}`"),
            ));
        }
    }

    let start_state =
        start.ok_or_else(|| Error::MalformedMachine("missing `start:` line".into()))?;
    let blank = blank.ok_or_else(|| Error::MalformedMachine("missing `blank:` line".into()))?;
    if halt_states.is_empty() {
        return Err(Error::MalformedMachine("missing `halt:` line".into()));
    }
    alphabet.insert(blank);
    states.insert(start_state.clone());
    states.extend(halt_states.iter().cloned());

    let tm = TmSpec {
        states,
        tape_alphabet: alphabet,
        blank,
        transitions,
        start_state,
        halt_states,
    };
    tm.validate()?;
    Ok(tm)
}
