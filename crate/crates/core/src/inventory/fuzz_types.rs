//! Type normalization and the fuzzing-interface signature match
//! (`(const uint8_t *data, size_t size)`).

use std::collections::BTreeMap;

use super::lexer::{tokenize_lenient, TokenKind};
use super::FunctionRecord;

/// typedef name -> underlying type text.
pub type TypeAliases = BTreeMap<String, String>;

pub fn default_type_aliases() -> TypeAliases {
    [
        ("uint8_t", "unsigned char"),
        ("int8_t", "signed char"),
        ("uint16_t", "unsigned short"),
        ("int16_t", "short"),
        ("uint32_t", "unsigned int"),
        ("int32_t", "int"),
        ("uint64_t", "unsigned long"),
        ("int64_t", "long"),
        ("size_t", "unsigned long"),
        ("ssize_t", "long"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

/// A type with qualifiers and spacing removed: base words plus pointer depth.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NormalizedType {
    pub base: String,
    pub pointer_depth: u8,
}

const QUALIFIERS: &[&str] = &["const", "volatile", "restrict", "__restrict", "__restrict__"];
const INT_WORDS: &[&str] = &["signed", "unsigned", "short", "long", "int", "char"];

const FUZZ_SIZE_TYPES: &[&str] = &[
    "int",
    "unsigned int",
    "short",
    "unsigned short",
    "long",
    "unsigned long",
    "long long",
    "unsigned long long",
];

const BYTE_TYPES: &[&str] = &["char", "signed char", "unsigned char"];

/// Strips qualifiers and whitespace, resolves `aliases` and spells integer
/// types canonically (`long unsigned int` becomes `unsigned long`).
pub fn normalize_type(text: &str, aliases: &TypeAliases) -> NormalizedType {
    normalize_with_depth(text, aliases, 0)
}

fn normalize_with_depth(text: &str, aliases: &TypeAliases, depth: u8) -> NormalizedType {
    let mut words = Vec::new();
    let mut pointers = 0u8;
    for tok in tokenize_lenient(text) {
        match tok.kind {
            TokenKind::Ident if QUALIFIERS.contains(&tok.text) => {}
            TokenKind::Ident => words.push(tok.text),
            TokenKind::Punct if tok.text == "*" || tok.text == "[" => pointers += 1,
            _ => {}
        }
    }
    let base = canonical_integer(&words).unwrap_or_else(|| words.join(" "));
    if depth < 4 {
        if let Some(target) = aliases.get(&base) {
            let mut resolved = normalize_with_depth(target, aliases, depth + 1);
            resolved.pointer_depth += pointers;
            return resolved;
        }
    }
    NormalizedType {
        base,
        pointer_depth: pointers,
    }
}

fn canonical_integer(words: &[&str]) -> Option<String> {
    if words.is_empty() || !words.iter().all(|w| INT_WORDS.contains(w)) {
        return None;
    }
    let unsigned = words.contains(&"unsigned");
    let signed = words.contains(&"signed");
    let longs = words.iter().filter(|w| **w == "long").count();
    let size = if words.contains(&"char") {
        "char"
    } else if words.contains(&"short") {
        "short"
    } else if longs >= 2 {
        "long long"
    } else if longs == 1 {
        "long"
    } else {
        "int"
    };
    Some(match (unsigned, signed, size) {
        (true, _, s) => format!("unsigned {s}"),
        (false, true, "char") => "signed char".to_string(),
        (_, _, s) => s.to_string(),
    })
}

pub fn is_byte_pointer(ty: &NormalizedType) -> bool {
    ty.pointer_depth == 1 && BYTE_TYPES.contains(&ty.base.as_str())
}

/// The `size_t`/`int`/`unsigned` family accepted as the length argument.
pub fn is_integer_type(ty: &NormalizedType) -> bool {
    ty.pointer_depth == 0 && FUZZ_SIZE_TYPES.contains(&ty.base.as_str())
}

/// Any integer type a flat byte buffer can be decoded into, including the
/// character types.
pub fn is_scalar_integer(ty: &NormalizedType) -> bool {
    is_integer_type(ty) || (ty.pointer_depth == 0 && BYTE_TYPES.contains(&ty.base.as_str()))
}

/// True iff the record takes exactly `(byte pointer, integer size)`.
pub fn match_fuzz_interface_types(record: &FunctionRecord, aliases: &TypeAliases) -> bool {
    match record.params.as_slice() {
        [data, size] => {
            is_byte_pointer(&normalize_type(&data.ty, aliases)) && is_integer_type(&normalize_type(&size.ty, aliases))
        }
        _ => false,
    }
}
