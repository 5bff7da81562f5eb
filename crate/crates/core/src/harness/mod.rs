//! Episode runner, navigation metrics, suites and reports.

mod episode;
mod metrics;
mod predeval;
mod render;
mod suite;

pub use episode::{
    field_at, mix_seed, run_episode, run_episode_observed, target_distance_field, AgentKind, AgentSpec,
    EpisodeResult, RunConfig, StepView,
};
pub use metrics::{dts, smoothness, spl, spl_term, Smoothness};
pub use predeval::{evaluate_split, mean_scores, prediction_csv, score_prediction, PredictionScores, PredictionSource};
pub use render::render_episode;
pub use suite::{
    episodes_csv, run_suite, sample_episodes, sample_target_episodes, suite_episodes, write_report, SuiteConfig, SuiteReport, TargetSummary,
};
