//! Deterministic lexical vulnerability scorer.
//!
//! Stands in for a trained model: counts dangerous-API patterns in a function
//! body and maps the weighted count onto `[0, 1)` with `1 - exp(-x / 4)`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::cwe::Cwe;
use crate::inventory::lexer::{tokenize_lenient, Token, TokenKind};

const ALLOCATORS: &[&str] = &["malloc", "calloc", "realloc"];
const COPY_CALLS: &[&str] = &["strcpy", "memcpy", "sprintf", "strcat"];
const DEREF_CALLS: &[&str] = &[
    "memcpy", "memmove", "memset", "strcpy", "strncpy", "strcat", "strncat", "sprintf", "snprintf",
];
const NULLS: &[&str] = &["NULL", "0", "nullptr"];

/// Index of the format argument for printf-family calls.
fn format_arg_index(name: &str) -> Option<usize> {
    match name {
        "printf" | "vprintf" => Some(0),
        "fprintf" | "vfprintf" | "sprintf" | "vsprintf" | "dprintf" | "syslog" | "asprintf" | "vasprintf" => Some(1),
        "snprintf" | "vsnprintf" => Some(2),
        _ => None,
    }
}

fn is_deallocator(name: &str) -> bool {
    name.to_ascii_lowercase().ends_with("free")
}

/// Raw feature counts over one body.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexicalFeatures {
    /// Deallocator calls on an expression already released and not reassigned since.
    pub repeated_free: u32,
    /// Allocation results dereferenced with no null check in the body.
    pub unchecked_alloc: u32,
    /// `strcpy`/`memcpy`/`sprintf`/`strcat` calls.
    pub unsafe_copy: u32,
    /// printf-family calls whose format argument is not a string literal.
    pub nonliteral_format: u32,
}

impl LexicalFeatures {
    pub fn extract(body: &str) -> Self {
        let toks = tokenize_lenient(body);
        LexicalFeatures {
            repeated_free: repeated_frees(&toks),
            unchecked_alloc: unchecked_allocations(&toks),
            unsafe_copy: toks.windows(2).filter(|w| is_call(w, COPY_CALLS)).count() as u32,
            nonliteral_format: nonliteral_formats(&toks),
        }
    }

    pub fn weighted_sum(&self) -> f64 {
        2.0 * f64::from(self.repeated_free)
            + f64::from(self.unchecked_alloc)
            + f64::from(self.unsafe_copy)
            + 1.5 * f64::from(self.nonliteral_format)
    }

    pub fn score(&self) -> f64 {
        1.0 - (-self.weighted_sum() / 4.0).exp()
    }

    pub fn predicted_cwes(&self) -> Vec<Cwe> {
        let mut out = Vec::new();
        if self.repeated_free > 0 {
            out.push(Cwe::DOUBLE_FREE);
        }
        if self.unchecked_alloc > 0 {
            out.push(Cwe::NULL_DEREF);
        }
        if self.unsafe_copy > 0 {
            out.push(Cwe::OUT_OF_BOUNDS_WRITE);
        }
        if self.nonliteral_format > 0 {
            out.push(Cwe::FORMAT_STRING);
        }
        out
    }
}

/// Score and predicted weaknesses for one function body.
pub fn lexical_vuln_score(body: &str) -> (f64, Vec<Cwe>) {
    let features = LexicalFeatures::extract(body);
    (features.score(), features.predicted_cwes())
}

fn is_call(w: &[Token<'_>], names: &[&str]) -> bool {
    w[0].is_ident() && names.contains(&w[0].text) && w[1].is_punct("(")
}

/// Splits the argument list of the call whose `(` is at `open`.
/// Returns the per-argument token ranges and the index of the closing paren.
fn call_args(toks: &[Token<'_>], open: usize) -> (Vec<std::ops::Range<usize>>, usize) {
    let mut args = Vec::new();
    let mut depth = 0usize;
    let mut start = open + 1;
    for j in open..toks.len() {
        let t = &toks[j];
        if t.kind != TokenKind::Punct {
            continue;
        }
        match t.text {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => {
                depth -= 1;
                if depth == 0 {
                    if j > start || !args.is_empty() {
                        args.push(start..j);
                    }
                    return (args, j);
                }
            }
            "," if depth == 1 => {
                args.push(start..j);
                start = j + 1;
            }
            _ => {}
        }
    }
    if toks.len() > start {
        args.push(start..toks.len());
    }
    (args, toks.len())
}

fn texts<'a>(toks: &[Token<'a>]) -> Vec<&'a str> {
    toks.iter().map(|t| t.text).collect()
}

fn repeated_frees(toks: &[Token<'_>]) -> u32 {
    let mut freed: Vec<Vec<&str>> = Vec::new();
    let mut repeats = 0;
    let mut i = 0;
    while i + 1 < toks.len() {
        let t = &toks[i];
        if t.is_punct("=") {
            // Reassignment revives the expression.
            freed.retain(|expr| {
                let n = expr.len();
                !(i >= n && texts(&toks[i - n..i]) == *expr)
            });
        } else if t.is_ident() && toks[i + 1].is_punct("(") && is_deallocator(t.text) {
            let (args, close) = call_args(toks, i + 1);
            if let Some(first) = args.first() {
                let expr = texts(&toks[first.clone()]);
                if !expr.is_empty() {
                    if freed.contains(&expr) {
                        repeats += 1;
                    } else {
                        freed.push(expr);
                    }
                }
            }
            i = close;
            continue;
        }
        i += 1;
    }
    repeats
}

/// Finds the lvalue an allocation at `alloc` is assigned to, if any.
fn assigned_lvalue<'a>(toks: &[Token<'a>], alloc: usize) -> Option<Vec<&'a str>> {
    let mut j = alloc.checked_sub(1)?;
    if toks[j].is_punct(")") {
        // Skip a cast.
        let mut depth = 0usize;
        loop {
            if toks[j].is_punct(")") {
                depth += 1;
            } else if toks[j].is_punct("(") {
                depth -= 1;
                if depth == 0 {
                    break;
                }
            }
            j = j.checked_sub(1)?;
        }
        j = j.checked_sub(1)?;
    }
    if !toks[j].is_punct("=") {
        return None;
    }
    let end = j;
    let mut start = end;
    while start > 0 {
        let t = &toks[start - 1];
        if t.is_ident() || t.is_punct("->") || t.is_punct(".") {
            start -= 1;
        } else {
            break;
        }
    }
    if start == end {
        return None;
    }
    let mut lvalue = texts(&toks[start..end]);
    // `char *p = malloc(..)`: a declaration's last identifier is the variable.
    if lvalue.len() > 1 && !lvalue.iter().any(|s| *s == "->" || *s == ".") {
        lvalue = vec![lvalue[lvalue.len() - 1]];
    }
    Some(lvalue)
}

fn occurrences(toks: &[Token<'_>], expr: &[&str], from: usize) -> Vec<usize> {
    let n = expr.len();
    (from..toks.len().saturating_sub(n - 1))
        .filter(|&i| texts(&toks[i..i + n]) == expr)
        // Must not be the tail of a longer member chain.
        .filter(|&i| i == 0 || !(toks[i - 1].is_punct("->") || toks[i - 1].is_punct(".")))
        .collect()
}

fn is_null_checked(toks: &[Token<'_>], expr: &[&str]) -> bool {
    let n = expr.len();
    let text_at = |i: usize| toks.get(i).map(|t| t.text);
    occurrences(toks, expr, 0).into_iter().any(|i| {
        let prev = i.checked_sub(1).and_then(text_at);
        let prev2 = i.checked_sub(2).and_then(text_at);
        let next = text_at(i + n);
        let next2 = text_at(i + n + 1);
        let compared_to_null = matches!(next, Some("==" | "!=")) && next2.is_some_and(|s| NULLS.contains(&s))
            || matches!(prev, Some("==" | "!=")) && prev2.is_some_and(|s| NULLS.contains(&s));
        let negated = prev == Some("!");
        let truth_tested = matches!(next, Some(")" | "&&" | "||"))
            && (matches!(prev, Some("&&" | "||"))
                || prev == Some("(") && matches!(prev2, Some("if" | "while" | "assert")));
        compared_to_null || negated || truth_tested
    })
}

fn is_dereferenced(toks: &[Token<'_>], expr: &[&str], from: usize) -> bool {
    let n = expr.len();
    occurrences(toks, expr, from).into_iter().any(|i| {
        let next = toks.get(i + n);
        if next.is_some_and(|t| t.is_punct("[") || t.is_punct("->")) {
            return true;
        }
        if i >= 1 && toks[i - 1].is_punct("*") {
            let unary = i < 2
                || matches!(
                    toks[i - 2].text,
                    "=" | "(" | "," | ";" | "{" | "}" | "return" | "+" | "-" | "!" | "&&" | "||"
                );
            if unary {
                return true;
            }
        }
        // First argument of a memory/string routine.
        i >= 2
            && toks[i - 1].is_punct("(")
            && DEREF_CALLS.contains(&toks[i - 2].text)
            && toks.get(i + n).is_some_and(|t| t.is_punct(","))
    })
}

fn unchecked_allocations(toks: &[Token<'_>]) -> u32 {
    let mut seen = BTreeSet::new();
    let mut count = 0;
    for i in 0..toks.len().saturating_sub(1) {
        if !is_call(&toks[i..i + 2], ALLOCATORS) {
            continue;
        }
        let Some(lvalue) = assigned_lvalue(toks, i) else {
            continue;
        };
        if !seen.insert((lvalue.clone(), i)) {
            continue;
        }
        if is_dereferenced(toks, &lvalue, i) && !is_null_checked(toks, &lvalue) {
            count += 1;
        }
    }
    count
}

fn nonliteral_formats(toks: &[Token<'_>]) -> u32 {
    let mut count = 0;
    for i in 0..toks.len().saturating_sub(1) {
        if !(toks[i].is_ident() && toks[i + 1].is_punct("(")) {
            continue;
        }
        let Some(idx) = format_arg_index(toks[i].text) else {
            continue;
        };
        let (args, _) = call_args(toks, i + 1);
        if let Some(arg) = args.get(idx) {
            if toks.get(arg.start).is_some_and(|t| t.kind != TokenKind::Str) {
                count += 1;
            }
        }
    }
    count
}
