//! Benchmarking the correction: follow pattern corners into the user's view
//! for a set of rooms and compare them against a reference room.

mod benchmark;
mod metric;
mod scenes;

pub use benchmark::{
    evaluate_case, overlay_corners, render_case, run_benchmark, BenchmarkCase, BenchmarkConfig, BenchmarkReport,
    BenchmarkSetup, CaseImages, CaseOutcome, CaseReport, CaseSpec, GeometrySource, SceneSource, UnresolvedCorner,
};
pub use metric::{corner_dislocation, CornerSet, Dislocation};
pub use scenes::{StandardScene, WALL_DISTANCE_M};
