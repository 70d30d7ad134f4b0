use nalgebra::DVector;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{gaussian_matrix, random_orthonormal, DenseMatrix};

/// Parameters `(s, p, d, r̃)` of the union-of-subspaces generator plus the
/// corruption model.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    /// Number of subspaces.
    pub s: usize,
    /// Points per subspace.
    pub p: usize,
    /// Ambient dimension.
    pub d: usize,
    /// Rank of every subspace.
    pub r_tilde: usize,
    /// Fraction of columns that receive noise.
    pub corrupt_frac: f64,
    /// Noise standard deviation relative to the column norm.
    pub noise_scale: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(s: usize, p: usize, d: usize, r_tilde: usize, seed: u64) -> Self {
        Self {
            s,
            p,
            d,
            r_tilde,
            corrupt_frac: 0.2,
            noise_scale: 0.1,
            seed,
        }
    }

    pub fn n(&self) -> usize {
        self.s * self.p
    }

    pub fn validate(&self) -> Result<()> {
        if self.r_tilde > self.d {
            return Err(Error::Input(format!(
                "subspace rank {} exceeds ambient dimension {}",
                self.r_tilde, self.d
            )));
        }
        if self.s == 0 || self.p == 0 || self.r_tilde == 0 {
            return Err(Error::Input("s, p and rank must all be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.corrupt_frac) {
            return Err(Error::Input(format!(
                "corrupt_frac must lie in [0, 1], got {}",
                self.corrupt_frac
            )));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::Input(format!(
                "noise_scale must be finite and >= 0, got {}",
                self.noise_scale
            )));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        format!("({}, {}, {}, {})", self.s, self.p, self.d, self.r_tilde)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// `d × (s·p)` data, subspace blocks stored contiguously.
    pub x: DenseMatrix,
    pub labels: Vec<usize>,
    /// Columns that received noise, in increasing order.
    pub corrupted: Vec<usize>,
}

/// Uniformly random rotation: orthogonal factor of a Gaussian matrix with the
/// determinant forced to `+1`.
pub fn random_rotation(d: usize, rng: &mut impl Rng) -> DenseMatrix {
    let mut t = random_orthonormal(d, d, rng);
    if t.determinant() < 0.0 {
        t.column_mut(0).neg_mut();
    }
    t
}

/// Union of `s` rank-`r̃` subspaces with bases `U₁, TU₁, T²U₁, …`, `p`
/// Gaussian samples from each, and a `corrupt_frac` share of columns
/// perturbed by noise of standard deviation `noise_scale·‖x‖`.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (s, p, d, r) = (spec.s, spec.p, spec.d, spec.r_tilde);

    let mut basis = random_orthonormal(d, r, &mut rng);
    let rotation = random_rotation(d, &mut rng);
    let mut x = DenseMatrix::zeros(d, s * p);
    let mut labels = Vec::with_capacity(s * p);
    for i in 0..s {
        if i > 0 {
            basis = &rotation * &basis;
        }
        let coef = gaussian_matrix(r, p, &mut rng);
        x.columns_mut(i * p, p).copy_from(&(&basis * coef));
        labels.extend(std::iter::repeat_n(i, p));
    }

    let n = s * p;
    let count = (spec.corrupt_frac * n as f64).floor() as usize;
    let mut corrupted = sample(&mut rng, n, count).into_vec();
    corrupted.sort_unstable();
    for &j in &corrupted {
        let std = spec.noise_scale * x.column(j).norm();
        let noise = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal) * std);
        let mut col = x.column_mut(j);
        col += noise;
    }

    Ok(Dataset { x, labels, corrupted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense_svd;

    #[test]
    fn table_one_shape() {
        let ds = gen_synthetic(&SyntheticSpec::new(10, 20, 200, 5, 1)).unwrap();
        assert_eq!(ds.x.shape(), (200, 200));
        assert_eq!(ds.labels.len(), 200);
        for c in 0..10 {
            assert_eq!(ds.labels.iter().filter(|&&l| l == c).count(), 20);
        }
        assert_eq!(ds.corrupted.len(), 40);
    }

    #[test]
    fn clean_blocks_have_exact_rank() {
        let spec = SyntheticSpec {
            corrupt_frac: 0.0,
            ..SyntheticSpec::new(4, 12, 30, 3, 2)
        };
        let ds = gen_synthetic(&spec).unwrap();
        assert!(ds.corrupted.is_empty());
        for i in 0..4 {
            let block = ds.x.columns(i * 12, 12).into_owned();
            let (_, sv, _) = dense_svd(&block);
            assert!(sv[2] > 1e-6 * sv[0]);
            assert!(sv[3] < 1e-10 * sv[0]);
        }
        // Independent subspaces: total rank s·r̃.
        let (_, sv, _) = dense_svd(&ds.x);
        assert!(sv[11] > 1e-8 * sv[0]);
        assert!(sv[12] < 1e-8 * sv[0]);
    }

    #[test]
    fn deterministic_given_seed() {
        let spec = SyntheticSpec::new(3, 5, 10, 2, 77);
        assert_eq!(gen_synthetic(&spec).unwrap(), gen_synthetic(&spec).unwrap());
        let other = SyntheticSpec { seed: 78, ..spec.clone() };
        assert_ne!(gen_synthetic(&spec).unwrap().x, gen_synthetic(&other).unwrap().x);
    }

    #[test]
    fn rotation_is_proper() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = random_rotation(9, &mut rng);
        assert!((t.tr_mul(&t) - DenseMatrix::identity(9, 9)).amax() < 1e-12);
        assert!((t.determinant() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rank_above_dimension_rejected() {
        assert!(gen_synthetic(&SyntheticSpec::new(2, 3, 4, 5, 0)).is_err());
    }
}
