use std::collections::BTreeSet;

use super::lexer::{tokenize_lenient, Token, TokenKind};
use super::FunctionRecord;

const DECISION_KEYWORDS: &[&str] = &["if", "for", "while", "case"];
const DECISION_OPERATORS: &[&str] = &["&&", "||", "?"];

const NON_CALL_KEYWORDS: &[&str] = &[
    "if",
    "for",
    "while",
    "switch",
    "return",
    "sizeof",
    "_Alignof",
    "alignof",
    "__attribute__",
    "typeof",
    "__typeof__",
    "defined",
    "case",
    "do",
    "else",
    "_Static_assert",
    "_Generic",
    "__builtin_offsetof",
    "offsetof",
];

fn is_decision(t: &Token<'_>) -> bool {
    match t.kind {
        TokenKind::Ident => DECISION_KEYWORDS.contains(&t.text),
        TokenKind::Punct => DECISION_OPERATORS.contains(&t.text),
        _ => false,
    }
}

/// McCabe complexity of a body: 1 + decision keywords and short-circuit /
/// ternary operators outside literals, comments and preprocessor lines.
pub fn cyclomatic_complexity(body: &str) -> u32 {
    let decisions = tokenize_lenient(body).iter().filter(|t| is_decision(t)).count();
    1 + decisions as u32
}

/// Recomputes the record's complexity from its body and stores it.
pub fn compute_cyclomatic_complexity(record: &mut FunctionRecord) -> u32 {
    record.cyclomatic_complexity = cyclomatic_complexity(&record.body);
    record.cyclomatic_complexity
}

/// Number of distinct identifiers used in call position within `body`.
pub fn call_count(body: &str) -> u32 {
    let toks = tokenize_lenient(body);
    let callees: BTreeSet<&str> = toks
        .windows(2)
        .filter(|w| w[0].is_ident() && w[1].is_punct("(") && !NON_CALL_KEYWORDS.contains(&w[0].text))
        .map(|w| w[0].text)
        .collect();
    callees.len() as u32
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn base_value_is_one() {
        assert_eq!(cyclomatic_complexity("{ return 0; }"), 1);
    }

    #[test]
    fn two_ifs_and_a_for() {
        let body = "{ if (a) x(); for (i = 0; i < n; i++) { if (b) y(); } return 0; }";
        assert_eq!(cyclomatic_complexity(body), 4);
    }

    #[test]
    fn operators_and_cases_count() {
        let body = "{ switch (k) { case 1: case 2: break; default: break; } return a && b || c ? 1 : 0; }";
        assert_eq!(cyclomatic_complexity(body), 6);
    }

    #[test]
    fn literals_comments_and_directives_do_not_count() {
        let body = "{\n/* if while */ // for\n#if DEBUG\nputs(\"if && || ?\"); c = '?';\n#endif\nreturn 0; }";
        assert_eq!(cyclomatic_complexity(body), 1);
    }

    #[test]
    fn identifiers_containing_keywords_do_not_count() {
        assert_eq!(cyclomatic_complexity("{ int iffy = forx + while_ + cases; }"), 1);
    }

    #[test]
    fn unterminated_text_still_returns_a_value() {
        assert!(cyclomatic_complexity("{ if (x) \"oops") >= 1);
        assert_eq!(cyclomatic_complexity(""), 1);
    }

    #[test]
    fn distinct_callees() {
        let body = "{ p = malloc(4); if (!p) return; memcpy(p, q, 4); free(p); free(p); return sizeof(x); }";
        assert_eq!(call_count(body), 3);
    }

    fn statement() -> impl Strategy<Value = (String, u32)> {
        prop_oneof![
            Just(("if (a) b();".to_string(), 1)),
            Just(("while (n--) step();".to_string(), 1)),
            Just(("for (;;) break;".to_string(), 1)),
            Just(("x = a && b;".to_string(), 1)),
            Just(("x = a || b ? c : d;".to_string(), 2)),
            Just(("switch (k) { case 0: break; }".to_string(), 1)),
            Just(("x = y;".to_string(), 0)),
            Just(("s = \"if while for case && || ?\";".to_string(), 0)),
            Just(("/* if (x) while (y) */".to_string(), 0)),
            Just(("// for case ?\n".to_string(), 0)),
            Just(("c = '?';".to_string(), 0)),
        ]
    }

    proptest! {
        #[test]
        fn decoys_never_contribute(stmts in proptest::collection::vec(statement(), 0..24)) {
            let expected = 1 + stmts.iter().map(|(_, n)| n).sum::<u32>();
            let body = format!("{{\n{}\n}}", stmts.iter().map(|(s, _)| s.as_str()).collect::<Vec<_>>().join("\n"));
            prop_assert_eq!(cyclomatic_complexity(&body), expected);
        }

        #[test]
        fn appending_an_if_adds_exactly_one(stmts in proptest::collection::vec(statement(), 0..16)) {
            let inner = stmts.iter().map(|(s, _)| s.as_str()).collect::<Vec<_>>().join("\n");
            let before = format!("{{\n{inner}\n}}");
            let after = format!("{{\n{inner}\nif (z) return 1;\n}}");
            prop_assert_eq!(cyclomatic_complexity(&after), cyclomatic_complexity(&before) + 1);
        }
    }
}
