//! Deterministic harness generation for signatures built from integers and
//! one (byte pointer, length) pair.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::candidate::{DriverCandidate, Provenance, ENTRY_POINT};
use super::SynthesisError;
use crate::inventory::{
    default_type_aliases, is_byte_pointer, is_scalar_integer, normalize_type, FunctionRecord, Language, TypeAliases,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriverOptions {
    /// Headers to include instead of emitting a prototype. `<x.h>` and
    /// `"x.h"` are used verbatim; bare names get quotes.
    pub headers: Vec<String>,
    /// Called on a non-null pointer return value (e.g. `free`).
    pub release_return: Option<String>,
    pub type_aliases: TypeAliases,
}

impl Default for DriverOptions {
    fn default() -> Self {
        DriverOptions {
            headers: Vec::new(),
            release_return: None,
            type_aliases: default_type_aliases(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Slot {
    /// Decoded little-endian from the front of the input.
    Integer,
    /// Pointer to an integer the target writes through.
    OutInteger,
    BytesPointer {
        writable: bool,
    },
    BytesLength,
}

fn plan(record: &FunctionRecord, aliases: &TypeAliases) -> Result<Vec<Slot>, SynthesisError> {
    let unsupported = |i: usize, why: &str| SynthesisError::UnsupportedSignature {
        function: record.name.clone(),
        reason: format!("parameter {} `{}`: {why}", i + 1, record.params[i].ty),
    };
    if record.variadic {
        return Err(SynthesisError::UnsupportedSignature {
            function: record.name.clone(),
            reason: "variadic".into(),
        });
    }
    let normalized: Vec<_> = record.params.iter().map(|p| normalize_type(&p.ty, aliases)).collect();
    let mut slots = Vec::with_capacity(normalized.len());
    let mut have_pair = false;
    let mut i = 0;
    while i < normalized.len() {
        let n = &normalized[i];
        if is_byte_pointer(n) {
            if !normalized.get(i + 1).is_some_and(is_scalar_integer) {
                return Err(unsupported(i, "byte pointer without a following length"));
            }
            if have_pair {
                return Err(unsupported(i, "more than one buffer"));
            }
            have_pair = true;
            let writable = !record.params[i].ty.split_whitespace().any(|w| w == "const");
            slots.push(Slot::BytesPointer { writable });
            slots.push(Slot::BytesLength);
            i += 2;
            continue;
        }
        if is_scalar_integer(n) {
            slots.push(Slot::Integer);
        } else if n.pointer_depth == 1
            && is_scalar_integer(&crate::inventory::NormalizedType {
                base: n.base.clone(),
                pointer_depth: 0,
            })
        {
            slots.push(Slot::OutInteger);
        } else {
            return Err(unsupported(i, "no byte-buffer constructor for this type"));
        }
        i += 1;
    }
    Ok(slots)
}

fn include_line(header: &str) -> String {
    if header.starts_with('<') || header.starts_with('"') {
        format!("#include {header}")
    } else {
        format!("#include \"{header}\"")
    }
}

fn pointee(ty: &str) -> String {
    ty.trim_end().strip_suffix('*').unwrap_or(ty).trim_end().to_string()
}

/// Emits a C harness that slices the input into `record`'s parameters.
///
/// Integers are read first, in declaration order, little-endian at
/// `sizeof` width; the remaining bytes become the buffer argument.
pub fn template_driver(record: &FunctionRecord, options: &DriverOptions) -> Result<DriverCandidate, SynthesisError> {
    let slots = plan(record, &options.type_aliases)?;
    let integers = slots.contains(&Slot::Integer);
    let copies = slots.contains(&Slot::BytesPointer { writable: true });
    let returns_pointer = record.return_type.trim_end().ends_with('*');
    let release = options.release_return.as_deref().filter(|_| returns_pointer);

    let mut src = String::new();
    src.push_str("#include <stddef.h>\n#include <stdint.h>\n");
    if copies || release == Some("free") {
        src.push_str("#include <stdlib.h>\n");
    }
    if copies {
        src.push_str("#include <string.h>\n");
    }
    for h in &options.headers {
        src.push_str(&include_line(h));
        src.push('\n');
    }
    src.push('\n');
    if options.headers.is_empty() {
        let _ = writeln!(src, "{};\n", record.signature());
    }
    if integers {
        src.push_str(
            "static uint64_t read_le(const uint8_t **data, size_t *size, size_t width) {\n\
             \x20 uint64_t value = 0;\n\
             \x20 for (size_t i = 0; i < width && *size > 0; i++) {\n\
             \x20   value |= (uint64_t)(**data) << (8 * i);\n\
             \x20   (*data)++;\n\
             \x20   (*size)--;\n\
             \x20 }\n\
             \x20 return value;\n\
             }\n\n",
        );
    }
    let _ = writeln!(src, "int {ENTRY_POINT}(const uint8_t *data, size_t size) {{");

    let mut args = Vec::with_capacity(slots.len());
    let mut cleanup = Vec::new();
    for (i, (slot, param)) in slots.iter().zip(&record.params).enumerate() {
        let ty = param.ty.trim();
        match slot {
            Slot::Integer => {
                let _ = writeln!(src, "  {ty} arg{i} = ({ty})read_le(&data, &size, sizeof({ty}));");
                args.push(format!("arg{i}"));
            }
            Slot::OutInteger => {
                let _ = writeln!(src, "  {} arg{i} = 0;", pointee(ty));
                args.push(format!("&arg{i}"));
            }
            Slot::BytesPointer { writable: true } => {
                let _ = writeln!(src, "  uint8_t *arg{i} = (uint8_t *)malloc(size ? size : 1);");
                let _ = writeln!(src, "  if (arg{i} == NULL) {{\n    return 0;\n  }}");
                let _ = writeln!(src, "  memcpy(arg{i}, data, size);");
                args.push(format!("({ty})arg{i}"));
                cleanup.push(format!("  free(arg{i});"));
            }
            Slot::BytesPointer { writable: false } => {
                args.push(if ty == "const uint8_t *" {
                    "data".into()
                } else {
                    format!("({ty})data")
                });
            }
            Slot::BytesLength => {
                args.push(if ty == "size_t" {
                    "size".into()
                } else {
                    format!("({ty})size")
                });
            }
        }
    }
    let call = format!("{}({})", record.name, args.join(", "));
    match release {
        Some(f) => {
            let _ = writeln!(
                src,
                "  void *ret = (void *){call};\n  if (ret != NULL) {{\n    {f}(ret);\n  }}"
            );
        }
        None => {
            let _ = writeln!(src, "  {call};");
        }
    }
    for line in cleanup {
        src.push_str(&line);
        src.push('\n');
    }
    src.push_str("  return 0;\n}\n");

    Ok(DriverCandidate {
        source_text: src,
        provenance: Provenance::Template,
        attempt: 1,
        target_function: record.name.clone(),
        language: Language::C,
    })
}

/// Whether [`template_driver`] can handle `record`.
pub fn template_supported(record: &FunctionRecord, aliases: &TypeAliases) -> bool {
    plan(record, aliases).is_ok()
}
