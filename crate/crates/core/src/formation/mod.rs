//! Phalanx formation: initial grouping, permutation screening of the initial
//! groups, hierarchical merging into candidate phalanxes, forward-selection
//! screening of the candidates, and the final averaged ensemble.

mod assessor;
mod grouping;
mod merge;
pub mod mock;
mod pipeline;
mod screening;
mod selection;
mod trace;

pub use assessor::GroupAssessor;
pub use grouping::{
    correlation_dissimilarity, initial_groups_by_clustering, initial_groups_by_name,
    jaccard_dissimilarity, singleton_grouping, Group, Grouping, NameSchema, Stage,
};
pub use merge::{merge_phalanxes, merge_phalanxes_with, pair_scores, pair_scores_with, MergeOutcome, MergeStep, PairScore};
pub use pipeline::{
    base_assessment, ensemble_assessment, form_erpx, predict_erpx, ErpxModel, FormationConfig,
    FormationTrace, GroupingMode,
};
pub use screening::{
    screen_groups, screen_groups_with, ScreenOutcome, ScreeningOptions, ScreeningThresholds, Test5Rule,
};
pub use selection::{forward_select, screen_phalanxes, screen_phalanxes_with, SelectionOutcome};
pub use trace::{read_trace, read_trace_csv, write_trace, write_trace_csv, TraceRow};
