use super::OracleConfig;
use crate::inventory::{match_fuzz_interface_types, FunctionRecord};

/// Complex enough and named like a parser.
pub fn heuristic1(record: &FunctionRecord, config: &OracleConfig) -> bool {
    let name = record.name.to_lowercase();
    record.cyclomatic_complexity >= config.h1_complexity_threshold
        && config
            .h1_name_substrings
            .iter()
            .any(|s| name.contains(&s.to_lowercase()))
}

/// Takes the same argument types as the fuzzing entry point.
pub fn heuristic2(record: &FunctionRecord, config: &OracleConfig) -> bool {
    match_fuzz_interface_types(record, &config.type_aliases)
}
