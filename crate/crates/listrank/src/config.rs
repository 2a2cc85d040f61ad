//! Pipeline configuration files.

use std::path::Path;

use listrank_core::distill::PipelineConfig;

use crate::io::{read_to_string, IoError};

/// Reads a JSON `PipelineConfig`; absent fields take their defaults and
/// unknown fields are rejected.
pub fn load_config(path: &Path) -> Result<PipelineConfig, IoError> {
    let text = read_to_string(path)?;
    parse_config(&text).map_err(|source| IoError::Json {
        path: path.into(),
        line: source.line(),
        source,
    })
}

pub fn parse_config(text: &str) -> Result<PipelineConfig, serde_json::Error> {
    serde_json::from_str(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use listrank_core::rerank::PromptMode;

    #[test]
    fn partial_config_uses_defaults() {
        let cfg = parse_config(
            r#"{"top_k": 5, "mode": "multimodal", "window": {"window_size": 4, "stride": 2}}"#,
        )
        .unwrap();
        assert_eq!(cfg.top_k, 5);
        assert_eq!(cfg.mode, PromptMode::Multimodal);
        assert_eq!(cfg.window.window_size, 4);
        assert_eq!(cfg.effective_budget(), 2_100);
        assert_eq!(cfg.quality_threshold, 0.25);
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(parse_config(r#"{"topk": 5}"#).is_err());
    }

    #[test]
    fn empty_object_is_default() {
        assert_eq!(parse_config("{}").unwrap(), PipelineConfig::default());
    }
}
