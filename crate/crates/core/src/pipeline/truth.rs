use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use super::io::{read_matrix_bin, write_matrix_bin};
use crate::error::{Error, Result};
use crate::ladmap::LadmapConfig;
use crate::linalg::{DenseMatrix, SkinnySvd};
use crate::lrr::{LrrProblem, LrrSolver, SvdMode};

/// Iterations of the reference run.
pub const GROUND_TRUTH_ITERS: usize = 2000;
/// Penalty cap of the reference run.
pub const GROUND_TRUTH_BETA_MAX: f64 = 1e3;
/// Bumped whenever the reference procedure changes, invalidating caches.
pub const PROCEDURE_VERSION: &str = "lrr-ground-truth/1";

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub e: DenseMatrix,
    pub z: SkinnySvd,
    pub lambda: DenseMatrix,
}

/// Standard-mode LADMAP for exactly [`GROUND_TRUTH_ITERS`] iterations with
/// `β_max =` [`GROUND_TRUTH_BETA_MAX`], no early stopping.
pub fn compute_ground_truth(problem: &LrrProblem) -> Result<GroundTruth> {
    let config = LadmapConfig {
        beta_max: GROUND_TRUTH_BETA_MAX,
        max_iter: GROUND_TRUTH_ITERS,
        ..LadmapConfig::default()
    };
    let mut solver = LrrSolver::new(problem, config, SvdMode::Standard)?;
    solver.early_stop = false;
    let sol = solver.solve()?;
    Ok(GroundTruth {
        e: sol.e,
        z: sol.z,
        lambda: sol.lambda,
    })
}

/// Hex SHA-256 of the data bytes, `μ` and [`PROCEDURE_VERSION`].
pub fn cache_key(x: &DenseMatrix, mu: f64) -> String {
    let mut h = Sha256::new();
    h.update(PROCEDURE_VERSION.as_bytes());
    h.update((x.nrows() as u64).to_le_bytes());
    h.update((x.ncols() as u64).to_le_bytes());
    for v in x.iter() {
        h.update(v.to_le_bytes());
    }
    h.update(mu.to_le_bytes());
    hex::encode(h.finalize())
}

/// Cached [`compute_ground_truth`]; with `cache_dir = None` it always
/// recomputes.
pub fn ground_truth(problem: &LrrProblem, cache_dir: Option<&Path>) -> Result<GroundTruth> {
    let Some(dir) = cache_dir else {
        return compute_ground_truth(problem);
    };
    let path = cache_path(dir, &problem.x, problem.mu);
    if path.exists() {
        match load(&path) {
            Ok(gt) if gt.e.shape() == problem.x.shape() => return Ok(gt),
            Ok(_) | Err(_) => log::warn!("ignoring unreadable cache entry {}", path.display()),
        }
    }
    let gt = compute_ground_truth(problem)?;
    fs::create_dir_all(dir)?;
    // Write then rename so a concurrent reader never sees a partial file.
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    store(&gt, &tmp)?;
    fs::rename(&tmp, &path)?;
    Ok(gt)
}

pub fn cache_path(dir: &Path, x: &DenseMatrix, mu: f64) -> PathBuf {
    dir.join(format!("{}.gt", cache_key(x, mu)))
}

fn store(gt: &GroundTruth, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let sigma = DMatrix::from_column_slice(gt.z.rank(), 1, &gt.z.sigma);
    for m in [&gt.e, &gt.z.u, &sigma, &gt.z.v, &gt.lambda] {
        write_matrix_bin(m, &mut out)?;
    }
    out.flush()?;
    Ok(())
}

fn load(path: &Path) -> Result<GroundTruth> {
    let mut input = BufReader::new(File::open(path)?);
    let e = read_matrix_bin(&mut input)?;
    let u = read_matrix_bin(&mut input)?;
    let sigma = read_matrix_bin(&mut input)?;
    let v = read_matrix_bin(&mut input)?;
    let lambda = read_matrix_bin(&mut input)?;
    if input.read(&mut [0u8])? != 0 {
        return Err(Error::Format("trailing bytes in ground-truth file".into()));
    }
    let z = SkinnySvd::new(u, sigma.as_slice().to_vec(), v)?;
    Ok(GroundTruth { e, z, lambda })
}
