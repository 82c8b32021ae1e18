//! End-to-end workflows behind the command-line tool: configuration,
//! synthetic datasets, training, recognition, evaluation and benchmarking.

pub mod bench;
pub mod config;
pub mod confusion;
pub mod dataset;
pub mod team;
pub mod vision;

pub use bench::{run_bench, BenchReport};
pub use config::{parse_config, parse_config_str, FrameworkConfig};
pub use confusion::ConfusionMatrix;
pub use dataset::{generate_dataset, load_split, synth_split, LabeledScenario, Split};
pub use team::{run_team, train_team, TeamItem, TeamModels};
pub use vision::{run_vision, VisionItem};

use crate::error::Result;

/// `(predicted, actual)` pairs for every item that has both.
pub fn predictions(items: &[TeamItem]) -> Vec<(String, String)> {
    items
        .iter()
        .filter_map(|it| {
            let p = it.recognition.as_ref()?;
            let a = it.scenario.action?;
            Some((p.label.clone(), a.name().to_string()))
        })
        .collect()
}

/// Confusion matrix over the configured actions, or `None` when no item
/// carries ground truth.
pub fn confusion(cfg: &FrameworkConfig, items: &[TeamItem]) -> Result<Option<ConfusionMatrix>> {
    let preds = predictions(items);
    if preds.is_empty() {
        return Ok(None);
    }
    let labels: Vec<&str> = cfg.actions().iter().map(|a| a.name()).collect();
    ConfusionMatrix::evaluate(&labels, &preds).map(Some)
}
