//! Small machines used as simulation witnesses, in the text format accepted
//! by [`super::parse_machine`].

use super::{parse_machine, TmSpec};

/// Flips every bit moving right; halts on the first blank.
pub const BIT_FLIP: &str = "\
start: flip
halt: done
blank: _
flip 0 -> flip 1 R
flip 1 -> flip 0 R
flip _ -> done _ R
";

/// Appends one `1` to a unary number.
pub const UNARY_SUCCESSOR: &str = "\
start: scan
halt: done
blank: _
scan 1 -> scan 1 R
scan _ -> done 1 R
";

/// Halts in `accept` when the input holds an even number of `1`s, else in
/// `reject`.
pub const EVEN_PARITY: &str = "\
start: even
halt: accept reject
blank: _
even 0 -> even 0 R
even 1 -> odd 1 R
even _ -> accept _ R
odd 0 -> odd 0 R
odd 1 -> even 1 R
odd _ -> reject _ R
";

/// Marks a run of `1`s with `x` walking right, then walks back to the cell
/// before the input turning every `x` into `y`.
pub const RIGHT_WALKER: &str = "\
start: right
halt: done
blank: _
right 1 -> right x R
right x -> right x R
right y -> right y R
right _ -> left _ L
left 1 -> left 1 L
left x -> left y L
left y -> left y L
left _ -> done _ R
";

fn build(text: &str, name: &str) -> TmSpec {
    parse_machine(text, name).expect("bundled machine definitions are valid")
}

pub fn bit_flip() -> TmSpec {
    build(BIT_FLIP, "bit-flip")
}

pub fn unary_successor() -> TmSpec {
    build(UNARY_SUCCESSOR, "unary-successor")
}

pub fn even_parity() -> TmSpec {
    build(EVEN_PARITY, "even-parity")
}

pub fn right_walker() -> TmSpec {
    build(RIGHT_WALKER, "right-walker")
}

/// Every bundled machine with its name.
pub fn all() -> Vec<(&'static str, TmSpec)> {
    vec![
        ("bit-flip", bit_flip()),
        ("unary-successor", unary_successor()),
        ("even-parity", even_parity()),
        ("right-walker", right_walker()),
    ]
}
