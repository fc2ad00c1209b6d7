use super::complexity::{call_count, cyclomatic_complexity};
use super::lexer::{tokenize, Token, TokenKind};
use super::{FunctionRecord, InventoryError, Param, SourceUnit};

const STORAGE_SPECIFIERS: &[&str] = &[
    "static",
    "inline",
    "extern",
    "__inline",
    "__inline__",
    "__forceinline",
    "_Noreturn",
    "register",
];

const NOT_A_NAME: &[&str] = &[
    "if",
    "for",
    "while",
    "switch",
    "return",
    "sizeof",
    "_Alignof",
    "alignof",
    "__attribute__",
    "__declspec",
    "defined",
    "do",
    "else",
    "case",
    "typeof",
    "__typeof__",
    "_Static_assert",
];

const TYPE_WORDS: &[&str] = &[
    "void",
    "char",
    "short",
    "int",
    "long",
    "float",
    "double",
    "signed",
    "unsigned",
    "_Bool",
    "bool",
    "const",
    "volatile",
    "restrict",
    "__restrict",
    "struct",
    "union",
    "enum",
    "_Complex",
];

/// Extracts every top-level function definition from `unit`.
///
/// Declarations, struct/enum bodies and brace initializers are skipped.
/// `extern "C" { ... }` blocks are transparent.
pub fn extract_functions(unit: &SourceUnit) -> Result<Vec<FunctionRecord>, InventoryError> {
    let unparsable = |reason: String| InventoryError::UnparsableSource {
        path: unit.path.clone(),
        reason,
    };
    if unit.content.trim().is_empty() {
        return Err(unparsable("empty source".into()));
    }
    let toks: Vec<Token<'_>> = tokenize(&unit.content)
        .map_err(|e| unparsable(e.to_string()))?
        .into_iter()
        .filter(|t| t.kind != TokenKind::Directive)
        .collect();

    let mut records = Vec::new();
    let mut header_start = 0;
    let mut extern_blocks = 0usize;
    let mut i = 0;
    while i < toks.len() {
        let t = &toks[i];
        if t.is_punct(";") {
            header_start = i + 1;
        } else if t.is_punct("}") {
            if extern_blocks == 0 {
                return Err(unparsable(format!("unbalanced '}}' on line {}", t.line)));
            }
            extern_blocks -= 1;
            header_start = i + 1;
        } else if t.is_punct("{") {
            let header = &toks[header_start..i];
            if is_extern_c(header) {
                extern_blocks += 1;
                header_start = i + 1;
                i += 1;
                continue;
            }
            let close =
                matching_brace(&toks, i).ok_or_else(|| unparsable(format!("unbalanced '{{' on line {}", t.line)))?;
            if let Some(header) = parse_header(header) {
                let body = &unit.content[t.start..toks[close].end()];
                records.push(FunctionRecord {
                    name: header.name,
                    return_type: header.return_type,
                    params: header.params,
                    source_path: unit.path.clone(),
                    line_span: (toks[header_start].line, toks[close].line),
                    body: body.to_string(),
                    cyclomatic_complexity: cyclomatic_complexity(body),
                    call_count: call_count(body),
                    variadic: header.variadic,
                    function_pointer_params: header.function_pointer_params,
                });
                header_start = close + 1;
            }
            // Aggregate bodies and initializers keep accumulating until ';'.
            i = close + 1;
            continue;
        }
        i += 1;
    }
    if extern_blocks > 0 {
        return Err(unparsable("unterminated extern block".into()));
    }
    Ok(records)
}

fn is_extern_c(header: &[Token<'_>]) -> bool {
    header.len() == 2 && header[0].text == "extern" && header[1].kind == TokenKind::Str
}

fn matching_brace(toks: &[Token<'_>], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (j, t) in toks.iter().enumerate().skip(open) {
        if t.is_punct("{") {
            depth += 1;
        } else if t.is_punct("}") {
            depth -= 1;
            if depth == 0 {
                return Some(j);
            }
        }
    }
    None
}

fn matching_open_paren(toks: &[Token<'_>], close: usize) -> Option<usize> {
    let mut depth = 0usize;
    for j in (0..=close).rev() {
        if toks[j].is_punct(")") {
            depth += 1;
        } else if toks[j].is_punct("(") {
            depth -= 1;
            if depth == 0 {
                return Some(j);
            }
        }
    }
    None
}

struct Header {
    name: String,
    return_type: String,
    params: Vec<Param>,
    variadic: bool,
    function_pointer_params: bool,
}

fn parse_header(header: &[Token<'_>]) -> Option<Header> {
    // Trailing C++ qualifiers after the parameter list.
    let mut end = header.len();
    while end > 0 && matches!(header[end - 1].text, "const" | "noexcept" | "override" | "final") {
        end -= 1;
    }
    let header = &header[..end];
    let close = header.len().checked_sub(1)?;
    if !header[close].is_punct(")") {
        return None;
    }
    if header.iter().any(|t| t.is_punct("=") || t.text == "typedef") {
        return None;
    }
    let open = matching_open_paren(header, close)?;
    let name_idx = open.checked_sub(1)?;
    let name_tok = &header[name_idx];
    if !name_tok.is_ident() || NOT_A_NAME.contains(&name_tok.text) {
        return None;
    }
    let mut name = name_tok.text.to_string();
    let mut ret_end = name_idx;
    // Qualified C++ names: A::b
    while ret_end >= 2 && header[ret_end - 1].is_punct("::") && header[ret_end - 2].is_ident() {
        name = format!("{}::{}", header[ret_end - 2].text, name);
        ret_end -= 2;
    }
    let ret_toks = strip_specifiers(&header[..ret_end]);
    if ret_toks.is_empty() {
        return None;
    }
    let (params, variadic, function_pointer_params) = parse_params(&header[open + 1..close]);
    Some(Header {
        name,
        return_type: canonical_type(&ret_toks),
        params,
        variadic,
        function_pointer_params,
    })
}

fn strip_specifiers<'a>(toks: &[Token<'a>]) -> Vec<Token<'a>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        let t = toks[i];
        if matches!(t.text, "__attribute__" | "__declspec") {
            // Skip the parenthesized attribute list.
            let mut depth = 0usize;
            i += 1;
            while i < toks.len() {
                if toks[i].is_punct("(") {
                    depth += 1;
                } else if toks[i].is_punct(")") {
                    depth = depth.saturating_sub(1);
                    if depth == 0 {
                        i += 1;
                        break;
                    }
                }
                i += 1;
            }
            continue;
        }
        if !STORAGE_SPECIFIERS.contains(&t.text) {
            out.push(t);
        }
        i += 1;
    }
    out
}

/// Canonical spacing: words separated by one space, `*` preceded by a space
/// (unless after another `*` or `(`), no space around brackets and parens.
pub(crate) fn canonical_type(toks: &[Token<'_>]) -> String {
    let mut out = String::new();
    let mut prev: Option<&str> = None;
    for t in toks {
        let s = t.text;
        let space = match (prev, s) {
            (None, _) => false,
            (_, "(" | ")" | "[" | "]" | ",") => false,
            (Some("(" | "["), _) => false,
            (Some("*"), "*") => false,
            (Some(_), "*") => true,
            (Some("*"), _) => true,
            _ => true,
        };
        if space {
            out.push(' ');
        }
        out.push_str(s);
        prev = Some(s);
    }
    out
}

fn split_top_level_commas<'a, 't>(toks: &'t [Token<'a>]) -> Vec<&'t [Token<'a>]> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (j, t) in toks.iter().enumerate() {
        match t.text {
            "(" | "[" | "{" if t.kind == TokenKind::Punct => depth += 1,
            ")" | "]" | "}" if t.kind == TokenKind::Punct => depth -= 1,
            "," if depth == 0 && t.kind == TokenKind::Punct => {
                parts.push(&toks[start..j]);
                start = j + 1;
            }
            _ => {}
        }
    }
    parts.push(&toks[start..]);
    parts
}

fn parse_params(toks: &[Token<'_>]) -> (Vec<Param>, bool, bool) {
    let mut params = Vec::new();
    let mut variadic = false;
    let mut fn_ptr = false;
    if toks.is_empty() || (toks.len() == 1 && toks[0].text == "void") {
        return (params, variadic, fn_ptr);
    }
    for part in split_top_level_commas(toks) {
        if part.is_empty() {
            continue;
        }
        if part.len() == 1 && part[0].is_punct("...") {
            variadic = true;
            continue;
        }
        let part = strip_specifiers(part);
        if let Some(p) = function_pointer_param(&part) {
            fn_ptr = true;
            params.push(p);
            continue;
        }
        params.push(plain_param(&part));
    }
    (params, variadic, fn_ptr)
}

/// `int (*cb)(int)` and friends.
fn function_pointer_param(part: &[Token<'_>]) -> Option<Param> {
    let open = part.iter().position(|t| t.is_punct("("))?;
    if !part.get(open + 1)?.is_punct("*") {
        return None;
    }
    let mut rest: Vec<Token<'_>> = part.to_vec();
    let mut name = String::new();
    if let Some(idx) = (open + 2..part.len()).find(|&j| part[j].is_punct(")")) {
        if idx == open + 3 && part[open + 2].is_ident() {
            name = part[open + 2].text.to_string();
            rest.remove(open + 2);
        }
    }
    Some(Param::new(name, canonical_type(&rest)))
}

fn plain_param(part: &[Token<'_>]) -> Param {
    // Array declarator: name precedes the first '['.
    if let Some(lb) = part.iter().position(|t| t.is_punct("[")) {
        if lb >= 2 && part[lb - 1].is_ident() && !TYPE_WORDS.contains(&part[lb - 1].text) {
            let mut ty: Vec<Token<'_>> = part[..lb - 1].to_vec();
            ty.extend_from_slice(&part[lb..]);
            return Param::new(part[lb - 1].text, canonical_type(&ty));
        }
        return Param::new("", canonical_type(part));
    }
    let last = part.len() - 1;
    let named = part.len() >= 2
        && part[last].is_ident()
        && !TYPE_WORDS.contains(&part[last].text)
        && !matches!(part[last - 1].text, "struct" | "union" | "enum");
    if named {
        Param::new(part[last].text, canonical_type(&part[..last]))
    } else {
        Param::new("", canonical_type(part))
    }
}
