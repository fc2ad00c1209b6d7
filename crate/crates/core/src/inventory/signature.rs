use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{render_signature, FunctionRecord, InventoryError, Param};
use crate::cwe::Cwe;

/// A pre-extracted function signature, as a fuzz-introspection tool would
/// emit it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignatureSpec {
    pub function_name: String,
    pub return_type: String,
    #[serde(default)]
    pub params: Vec<Param>,
    #[serde(default)]
    pub source_file: String,
    #[serde(default)]
    pub cwe_hints: Vec<Cwe>,
}

impl SignatureSpec {
    pub fn signature(&self) -> String {
        render_signature(&self.return_type, &self.function_name, &self.params, false)
    }

    /// A bodiless record for ranking and prompting; structural features are
    /// unknown and left at their minimum.
    pub fn to_record(&self) -> FunctionRecord {
        FunctionRecord {
            name: self.function_name.clone(),
            return_type: self.return_type.clone(),
            params: self.params.clone(),
            source_path: self.source_file.clone().into(),
            line_span: (0, 0),
            body: String::new(),
            cyclomatic_complexity: 1,
            call_count: 0,
            variadic: false,
            function_pointer_params: self.params.iter().any(|p| p.ty.contains("(*")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecFormat {
    Yaml,
    Json,
}

impl SpecFormat {
    /// `.json` is JSON; everything else is read as YAML.
    pub fn from_path(path: &Path) -> SpecFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => SpecFormat::Json,
            _ => SpecFormat::Yaml,
        }
    }
}

#[derive(Deserialize)]
struct RawSpec {
    function_name: Option<String>,
    return_type: Option<String>,
    #[serde(default)]
    params: Vec<Param>,
    #[serde(default)]
    source_file: String,
    #[serde(default)]
    cwe_hints: Option<Vec<Cwe>>,
}

pub fn load_signature_spec(document: &str, format: SpecFormat) -> Result<SignatureSpec, InventoryError> {
    let raw: RawSpec = match format {
        SpecFormat::Yaml => serde_yaml::from_str(document).map_err(|e| InventoryError::MalformedSpec(e.to_string()))?,
        SpecFormat::Json => serde_json::from_str(document).map_err(|e| InventoryError::MalformedSpec(e.to_string()))?,
    };
    let function_name = raw
        .function_name
        .filter(|n| !n.trim().is_empty())
        .ok_or_else(|| InventoryError::MalformedSpec("missing function_name".into()))?;
    let return_type = raw
        .return_type
        .filter(|t| !t.trim().is_empty())
        .ok_or_else(|| InventoryError::MalformedSpec("missing return_type".into()))?;
    Ok(SignatureSpec {
        function_name,
        return_type,
        params: raw.params,
        source_file: raw.source_file,
        cwe_hints: raw.cwe_hints.unwrap_or_default(),
    })
}

pub fn load_signature_spec_file(path: &Path) -> Result<SignatureSpec, InventoryError> {
    let text = std::fs::read_to_string(path).map_err(|source| InventoryError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    load_signature_spec(&text, SpecFormat::from_path(path))
}
