//! Built-in mission tasks: area search, target tracking and space coverage.

pub mod coverage;
pub mod search;
pub mod tracking;

use serde::{Deserialize, Serialize};

pub use coverage::{lloyd_relax, lloyd_step, voronoi_partition, CoverageTask, LloydOutcome, Polygon};
pub use search::{plan_area_search, SearchTask};
pub use tracking::{update_tracking, TrackTask, TrackingDecision};

/// A task that can be allocated to a group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum TaskSpec {
    Search(SearchTask),
    Track(TrackTask),
    Coverage(CoverageTask),
}

impl TaskSpec {
    pub fn name(&self) -> &'static str {
        match self {
            TaskSpec::Search(_) => "search",
            TaskSpec::Track(_) => "track",
            TaskSpec::Coverage(_) => "coverage",
        }
    }
}
