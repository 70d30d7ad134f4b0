//! Synthetic data, ground truth, metrics, clustering, matrix files and the
//! benchmark runner.

mod bench;
mod cluster;
mod config;
pub mod io;
mod synthetic;
mod truth;

pub use bench::{format_table, run_benchmark, run_method, write_csv, BenchRow, Method, MethodOutput, MethodSettings};
pub use cluster::{accuracy, affinity, cluster_from_z, kmeans, relative_errors, KMEANS_RESTARTS};
pub use config::{parse_key_values, SuiteConfig};
pub use synthetic::{gen_synthetic, random_rotation, Dataset, SyntheticSpec};
pub use truth::{
    cache_key, cache_path, compute_ground_truth, ground_truth, GroundTruth, GROUND_TRUTH_BETA_MAX,
    GROUND_TRUTH_ITERS, PROCEDURE_VERSION,
};
