//! Tunable analysis parameters. Every field has a default, so partial
//! documents (TOML or JSON) deserialize.

use serde::{Deserialize, Serialize};

use crate::harmony::ChordParams;
use crate::rhythm::{BeatParams, TempoParams};
use crate::semantics::PluginClassifier;
use crate::structure::{InstrumentThresholds, StructureParams};
use crate::timbre::TimbreParams;

/// Every analyzer's parameters.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub tempo: TempoParams,
    pub beats: BeatParams,
    pub chords: ChordParams,
    pub timbre: TimbreParams,
    pub structure: StructureParams,
    pub instruments: InstrumentThresholds,
    /// External genre/theme classifier; the heuristic is used when absent.
    pub plugin: Option<PluginClassifier>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_document_keeps_defaults() {
        let cfg: AnalysisConfig =
            parse(r#"{"chords": {"self_transition": 0.8}, "plugin": {"command": "my-classifier"}}"#);
        assert_eq!(cfg.chords.self_transition, 0.8);
        assert_eq!(cfg.chords.min_duration_s, 0.25);
        assert_eq!(cfg.tempo, TempoParams::default());
        assert_eq!(cfg.plugin.unwrap().timeout.as_secs(), 10);
    }

    fn parse(json: &str) -> AnalysisConfig {
        serde_json::from_str(json).unwrap()
    }
}
