use super::CrashKind;
use crate::cwe::Cwe;

/// Ordered rules; the first matching marker wins.
const RULES: &[(&[&str], CrashKind, Option<Cwe>)] = &[
    (
        &["attempting double-free"],
        CrashKind::DoubleFree,
        Some(Cwe::DOUBLE_FREE),
    ),
    (
        &["heap-use-after-free"],
        CrashKind::UseAfterFree,
        Some(Cwe::USE_AFTER_FREE),
    ),
    (
        &["heap-buffer-overflow"],
        CrashKind::HeapBufferOverflow,
        Some(Cwe::OUT_OF_BOUNDS_WRITE),
    ),
    (
        &["stack-buffer-overflow"],
        CrashKind::StackBufferOverflow,
        Some(Cwe::OUT_OF_BOUNDS_WRITE),
    ),
    (
        &[
            "SEGV on unknown address 0x000000000000",
            "null pointer",
            "address points to the zero page",
        ],
        CrashKind::NullDeref,
        Some(Cwe::NULL_DEREF),
    ),
    (&["LeakSanitizer"], CrashKind::MemoryLeak, Some(Cwe::MEMORY_LEAK)),
];

/// Maps a sanitizer report to a crash kind and CWE. Total: unrecognized text
/// is `(Unknown, None)`.
pub fn classify_crash(report: &str) -> (CrashKind, Option<Cwe>) {
    for (markers, kind, cwe) in RULES {
        if markers.iter().any(|m| report.contains(m)) {
            return (*kind, *cwe);
        }
    }
    if let Some(line) = report.lines().find(|l| l.contains("runtime error:")) {
        let cwe = line.contains("overflow").then_some(Cwe::INTEGER_OVERFLOW);
        return (CrashKind::Ubsan, cwe);
    }
    (CrashKind::Unknown, None)
}
