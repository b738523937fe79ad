//! A single-tape Turing machine run over a block-addressed external store.
//!
//! The tape lives in fixed-size blocks keyed by address
//! (`floor(cell / B)`, negative cells included). The working context holds
//! one block at a time: a step fetches the head's block if it is not
//! already in context, applies the transition there, and writes the block
//! back when the head leaves it (only if it changed). Each fetch and each
//! write-back is one retrieval query; each step costs `B^2` attention
//! operations.

pub mod machines;
mod parse;

pub use parse::parse_machine;

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Left,
    Right,
}

impl Move {
    fn delta(self) -> i64 {
        match self {
            Move::Left => -1,
            Move::Right => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub next_state: String,
    pub write: char,
    pub movement: Move,
}

/// A deterministic single-tape machine over single-character symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TmSpec {
    pub states: BTreeSet<String>,
    pub tape_alphabet: BTreeSet<char>,
    pub blank: char,
    pub transitions: HashMap<(String, char), Transition>,
    pub start_state: String,
    pub halt_states: BTreeSet<String>,
}

impl TmSpec {
    /// Checks that the blank is in the alphabet, the start state is known,
    /// halt states have no outgoing transitions and every other state has a
    /// transition for every symbol.
    pub fn validate(&self) -> Result<()> {
        if !self.tape_alphabet.contains(&self.blank) {
            return Err(Error::MalformedMachine(
                "blank symbol missing from alphabet".into(),
            ));
        }
        if !self.states.contains(&self.start_state) {
            return Err(Error::MalformedMachine(format!(
                "start state `{}` is never defined",
                self.start_state
            )));
        }
        for (state, symbol) in self.transitions.keys() {
            if self.halt_states.contains(state) {
                return Err(Error::MalformedMachine(format!(
                    "halt state `{state}` has a transition on `{symbol}`"
                )));
            }
        }
        for state in self.states.difference(&self.halt_states) {
            for &symbol in &self.tape_alphabet {
                if !self.transitions.contains_key(&(state.clone(), symbol)) {
                    return Err(Error::MalformedMachine(format!(
                        "no transition for state `{state}` on symbol `{symbol}`"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Tape stored as blocks of exactly `block_b` symbols; absent addresses
/// read as blank.
#[derive(Debug, Clone)]
pub struct BlockedTape {
    store: HashMap<i64, Vec<char>>,
    block_b: usize,
    blank: char,
}

impl BlockedTape {
    pub fn new(block_b: usize, blank: char) -> Self {
        BlockedTape {
            store: HashMap::new(),
            block_b,
            blank,
        }
    }

    pub fn address_of(&self, cell: i64) -> i64 {
        cell.div_euclid(self.block_b as i64)
    }

    fn offset_of(&self, cell: i64) -> usize {
        cell.rem_euclid(self.block_b as i64) as usize
    }

    pub fn fetch(&self, address: i64) -> Vec<char> {
        self.store
            .get(&address)
            .cloned()
            .unwrap_or_else(|| vec![self.blank; self.block_b])
    }

    pub fn store(&mut self, address: i64, block: Vec<char>) {
        debug_assert_eq!(block.len(), self.block_b);
        self.store.insert(address, block);
    }

    /// Direct read, bypassing the context; used for loading and reporting.
    pub fn read(&self, cell: i64) -> char {
        self.store
            .get(&self.address_of(cell))
            .map_or(self.blank, |b| b[self.offset_of(cell)])
    }

    fn write_direct(&mut self, cell: i64, symbol: char) {
        let address = self.address_of(cell);
        let offset = self.offset_of(cell);
        let mut block = self.fetch(address);
        block[offset] = symbol;
        self.store(address, block);
    }

    pub fn blocks_stored(&self) -> usize {
        self.store.len()
    }
}

struct Context {
    address: i64,
    block: Vec<char>,
    dirty: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TmRunResult {
    pub halted: bool,
    pub steps: u64,
    pub final_state: String,
    /// Symbols from the leftmost to the rightmost cell that was visited or
    /// held input.
    pub tape_window: Vec<char>,
    /// Cell index of `tape_window[0]`.
    pub window_origin: i64,
    pub head: i64,
    pub attention_ops: u64,
    pub retrieval_queries: u64,
    blank: char,
}

impl TmRunResult {
    /// The tape window with leading and trailing blanks removed.
    pub fn tape_string(&self) -> String {
        let s: String = self.tape_window.iter().collect();
        s.trim_matches(self.blank).to_string()
    }
}

/// Runs `tm` on `input` (written from cell 0) with tape blocks of size
/// `block_b`, stopping at a halt state or after `max_steps` steps.
pub fn simulate_tm(
    tm: &TmSpec,
    input: &str,
    block_b: usize,
    max_steps: u64,
) -> Result<TmRunResult> {
    if block_b == 0 {
        return Err(Error::config("block size must be at least 1"));
    }
    if let Some(bad) = input.chars().find(|c| !tm.tape_alphabet.contains(c)) {
        return Err(Error::MalformedMachine(format!(
            "input symbol `{bad}` is not in the tape alphabet"
        )));
    }

    let mut tape = BlockedTape::new(block_b, tm.blank);
    let input_len = input.chars().count() as i64;
    for (i, c) in input.chars().enumerate() {
        tape.write_direct(i as i64, c);
    }

    let mut state = tm.start_state.clone();
    let mut head: i64 = 0;
    let (mut lo, mut hi) = (0i64, (input_len - 1).max(0));
    let mut steps = 0u64;
    let mut queries = 0u64;
    let mut context: Option<Context> = None;

    let halted = loop {
        if tm.halt_states.contains(&state) {
            break true;
        }
        if steps >= max_steps {
            break false;
        }
        let address = tape.address_of(head);
        let ctx = context.get_or_insert_with(|| {
            queries += 1;
            Context {
                address,
                block: tape.fetch(address),
                dirty: false,
            }
        });
        debug_assert_eq!(ctx.address, address);

        let offset = tape.offset_of(head);
        let symbol = ctx.block[offset];
        let rule = tm
            .transitions
            .get(&(state.clone(), symbol))
            .ok_or_else(|| {
                Error::MalformedMachine(format!(
                    "no transition for state `{state}` on symbol `{symbol}`"
                ))
            })?;
        if rule.write != symbol {
            ctx.block[offset] = rule.write;
            ctx.dirty = true;
        }
        state = rule.next_state.clone();
        head += rule.movement.delta();
        steps += 1;
        lo = lo.min(head);
        hi = hi.max(head);

        if tape.address_of(head) != ctx.address {
            let ctx = context.take().expect("context present");
            if ctx.dirty {
                tape.store(ctx.address, ctx.block);
                queries += 1;
            }
        }
    };
    if let Some(ctx) = context.take() {
        if ctx.dirty {
            tape.store(ctx.address, ctx.block);
            queries += 1;
        }
    }

    let b = block_b as u64;
    Ok(TmRunResult {
        halted,
        steps,
        final_state: state,
        tape_window: (lo..=hi).map(|cell| tape.read(cell)).collect(),
        window_origin: lo,
        head,
        attention_ops: steps * b * b,
        retrieval_queries: queries,
        blank: tm.blank,
    })
}

#[cfg(test)]
mod tests {
    use super::machines::*;
    use super::*;

    /// Flat-tape interpreter kept deliberately separate from the blocked one.
    fn reference(tm: &TmSpec, input: &str, max_steps: u64) -> (String, String, u64) {
        let mut cells: HashMap<i64, char> = input
            .chars()
            .enumerate()
            .map(|(i, c)| (i as i64, c))
            .collect();
        let (mut state, mut head, mut steps) = (tm.start_state.clone(), 0i64, 0u64);
        while !tm.halt_states.contains(&state) && steps < max_steps {
            let sym = *cells.get(&head).unwrap_or(&tm.blank);
            let rule = &tm.transitions[&(state.clone(), sym)];
            cells.insert(head, rule.write);
            state = rule.next_state.clone();
            head += match rule.movement {
                Move::Left => -1,
                Move::Right => 1,
            };
            steps += 1;
        }
        let lo = *cells.keys().min().unwrap_or(&0);
        let hi = *cells.keys().max().unwrap_or(&0);
        let s: String = (lo..=hi)
            .map(|i| *cells.get(&i).unwrap_or(&tm.blank))
            .collect();
        (s.trim_matches(tm.blank).to_string(), state, steps)
    }

    #[test]
    fn bit_flip_example() {
        let tm = bit_flip();
        let r = simulate_tm(&tm, "101", 4, 1000).unwrap();
        assert!(r.halted);
        assert_eq!(r.steps, 4);
        assert_eq!(r.tape_string(), "010");
        assert_eq!(r.attention_ops, 64);
    }

    #[test]
    fn immediate_halt() {
        let tm = parse_machine("start: h\nhalt: h\nblank: _\n", "inline").unwrap();
        let r = simulate_tm(&tm, "", 4, 10).unwrap();
        assert!(r.halted);
        assert_eq!((r.steps, r.attention_ops, r.retrieval_queries), (0, 0, 0));
    }

    #[test]
    fn block_size_does_not_change_semantics() {
        let tm = bit_flip();
        let small = simulate_tm(&tm, "1100101", 2, 100).unwrap();
        let large = simulate_tm(&tm, "1100101", 8, 100).unwrap();
        assert_eq!(small.tape_string(), large.tape_string());
        assert_eq!(small.steps, large.steps);
        assert_eq!(small.attention_ops, small.steps * 4);
        assert_eq!(large.attention_ops, large.steps * 64);
    }

    #[test]
    fn machines_match_reference() {
        let cases = [
            (bit_flip(), "1011001"),
            (unary_successor(), "1111"),
            (even_parity(), "110101"),
            (even_parity(), "1101"),
            (right_walker(), "111111111111"),
        ];
        for (tm, input) in cases {
            for b in [1, 2, 3, 4, 8] {
                let r = simulate_tm(&tm, input, b, 10_000).unwrap();
                let (tape, state, steps) = reference(&tm, input, 10_000);
                assert_eq!(r.tape_string(), tape, "B={b} input={input}");
                assert_eq!(r.final_state, state);
                assert_eq!(r.steps, steps);
                assert!(r.retrieval_queries <= 2 * r.steps);
            }
        }
    }

    #[test]
    fn walker_crosses_boundaries_both_ways() {
        let b = 4;
        let input = "1".repeat(3 * b);
        let r = simulate_tm(&right_walker(), &input, b, 10_000).unwrap();
        assert!(r.halted);
        assert_eq!(r.window_origin, -1);
        assert_eq!(r.tape_string(), "y".repeat(3 * b));
        // fetches and write-backs for 4 blocks going right, 4 going back
        assert!(r.retrieval_queries >= 8);
    }

    #[test]
    fn max_steps_reports_non_halt() {
        let tm = parse_machine("start: a\nhalt: h\nblank: _\na _ -> a _ R\n", "inline").unwrap();
        let r = simulate_tm(&tm, "", 2, 25).unwrap();
        assert!(!r.halted);
        assert_eq!(r.steps, 25);
        assert_eq!(r.attention_ops, 100);
    }

    #[test]
    fn negative_cells_use_floor_addresses() {
        let tape = BlockedTape::new(4, '_');
        assert_eq!(tape.address_of(-1), -1);
        assert_eq!(tape.address_of(-4), -1);
        assert_eq!(tape.address_of(-5), -2);
        assert_eq!(tape.address_of(3), 0);
        let tm = parse_machine(
            "start: a\nhalt: h\nblank: _\na _ -> b x L\nb _ -> c x L\nc _ -> h x L\nb x -> h x L\nc x -> h x L\na x -> h x L\n",
            "inline",
        )
        .unwrap();
        let r = simulate_tm(&tm, "", 2, 10).unwrap();
        assert_eq!(r.tape_string(), "xxx");
        assert_eq!(r.window_origin, -3);
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(
            simulate_tm(&bit_flip(), "102", 2, 10),
            Err(Error::MalformedMachine(_))
        ));
        assert!(matches!(
            simulate_tm(&bit_flip(), "1", 0, 10),
            Err(Error::Config(_))
        ));
    }
}
