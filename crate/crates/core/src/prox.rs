//! Proximal operators of the l1 norm and the nuclear norm.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::svd::{leading_svd, svd, SkinnySvd};

/// Scalar soft shrinkage `sgn(x) * max(|x| - eta, 0)`.
#[inline]
pub fn shrink(x: f64, eta: f64) -> f64 {
    if x > eta {
        x - eta
    } else if x < -eta {
        x + eta
    } else {
        0.0
    }
}

/// Entrywise soft thresholding; the proximal operator of `eta * ‖·‖_l1`.
pub fn soft_threshold(m: &DenseMatrix, eta: f64) -> Result<DenseMatrix> {
    check_eta(eta)?;
    Ok(m.map(|x| shrink(x, eta)))
}

/// Singular value thresholding: `U * S_eta(Σ) * Vᵀ`, the minimizer of
/// `eta * ‖A‖_* + ½‖A - W‖_F²`.
pub fn svt(w: &DenseMatrix, eta: f64) -> Result<DenseMatrix> {
    check_eta(eta)?;
    let dec = svd(w, 0.0)?;
    Ok(shrink_spectrum(&dec, eta).0)
}

fn check_eta(eta: f64) -> Result<()> {
    if eta >= 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("threshold must be >= 0, got {eta}")))
    }
}

/// Applies `S_eta` to the singular values and rebuilds; returns the rank kept.
fn shrink_spectrum(dec: &SkinnySvd, eta: f64) -> (DenseMatrix, usize) {
    let keep = dec.sigma.iter().take_while(|&&s| s > eta).count();
    let kept = dec.truncate(keep);
    let shrunk: Vec<f64> = kept.sigma.iter().map(|s| s - eta).collect();
    (kept.reconstruct_with(&shrunk), keep)
}

/// How the SVD inside repeated SVT calls is computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SvdStrategy {
    /// Dense up to [`AUTO_DENSE_MAX_DIM`] on the smaller side, leading triplets
    /// above. The leading route itself goes dense once the kept rank nears
    /// half the smaller side.
    #[default]
    Auto,
    /// Always factorize the full matrix.
    Dense,
    /// Always compute only the triplets above the threshold.
    Leading,
}

/// Largest smaller-side dimension that [`SvdStrategy::Auto`] factorizes densely.
pub const AUTO_DENSE_MAX_DIM: usize = 32;

/// Stateful SVT for iterative solvers: predicts the rank of the next call and
/// warm-starts the leading-triplet SVD from the previous right vectors.
#[derive(Debug)]
pub(crate) struct SvtEngine {
    strategy: SvdStrategy,
    predicted: usize,
    warm: Option<DenseMatrix>,
}

impl SvtEngine {
    pub(crate) fn new(strategy: SvdStrategy) -> Self {
        Self { strategy, predicted: 1, warm: None }
    }

    /// Returns `svt(w, eta)` and the number of singular values kept.
    pub(crate) fn apply(&mut self, w: &DenseMatrix, eta: f64) -> Result<(DenseMatrix, usize)> {
        let leading = match self.strategy {
            SvdStrategy::Dense => false,
            SvdStrategy::Leading => true,
            SvdStrategy::Auto => w.rows().min(w.cols()) > AUTO_DENSE_MAX_DIM,
        };
        if !leading {
            let dec = svd(w, 0.0)?;
            return Ok(shrink_spectrum(&dec, eta));
        }
        let lead = leading_svd(w, eta, self.predicted, self.warm.as_ref())?;
        let kept = lead.svd.rank();
        let shrunk: Vec<f64> = lead.svd.sigma.iter().map(|s| s - eta).collect();
        let out = lead.svd.reconstruct_with(&shrunk);
        self.predicted = kept + 1;
        self.warm = Some(lead.block_v);
        Ok((out, kept))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::frobenius_norm;
    use crate::svd::nuclear_norm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shrink_examples() {
        assert_eq!(shrink(3.0, 1.0), 2.0);
        assert_eq!(shrink(-0.5, 1.0), 0.0);
        assert_eq!(shrink(-4.0, 1.5), -2.5);
        let m = DenseMatrix::from_rows(&[[1.5, -2.0], [0.0, 7.0]]).unwrap();
        assert_eq!(soft_threshold(&m, 0.0).unwrap(), m);
        assert!(soft_threshold(&m, -1.0).is_err());
    }

    #[test]
    fn svt_diagonal() {
        let w = DenseMatrix::diag(&[3.0, 1.0]);
        let a = svt(&w, 2.0).unwrap();
        let expect = DenseMatrix::diag(&[1.0, 0.0]);
        assert!(a.sub(&expect).unwrap().linf_norm() < 1e-14);
        assert!(svt(&w, 0.0).unwrap().sub(&w).unwrap().linf_norm() < 1e-14);
    }

    fn objective(a: &DenseMatrix, w: &DenseMatrix, eta: f64) -> f64 {
        eta * nuclear_norm(a).unwrap() + 0.5 * frobenius_norm(&a.sub(w).unwrap()).powi(2)
    }

    #[test]
    fn svt_random_probe_optimality() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let w = DenseMatrix::from_fn(8, 6, |_, _| rng.gen_range(-1.0..1.0));
        let eta = 0.5;
        let a = svt(&w, eta).unwrap();
        let best = objective(&a, &w, eta);
        assert!(best <= objective(&w, &w, eta));
        assert!(best <= objective(&DenseMatrix::zeros(8, 6), &w, eta));
        for _ in 0..200 {
            let scale = 10f64.powf(rng.gen_range(-4.0..0.0));
            let probe = DenseMatrix::from_fn(8, 6, |i, j| a.get(i, j) + scale * rng.gen_range(-1.0..1.0));
            assert!(best <= objective(&probe, &w, eta) + 1e-12);
        }
    }

    #[test]
    fn engine_strategies_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = DenseMatrix::from_fn(120, 4, |_, _| rng.gen_range(-1.0..1.0));
        let v = DenseMatrix::from_fn(4, 90, |_, _| rng.gen_range(-1.0..1.0));
        let w =
            u.matmul(&v).unwrap().add(&DenseMatrix::from_fn(120, 90, |_, _| 1e-3 * rng.gen_range(-1.0..1.0))).unwrap();
        let eta = 0.05;
        let (dense, kd) = SvtEngine::new(SvdStrategy::Dense).apply(&w, eta).unwrap();
        let mut lead = SvtEngine::new(SvdStrategy::Leading);
        let (fast, kl) = lead.apply(&w, eta).unwrap();
        assert_eq!(kd, kl);
        assert!(fast.sub(&dense).unwrap().frobenius_norm() < 1e-8 * dense.frobenius_norm());
        let (again, _) = lead.apply(&w, eta).unwrap();
        assert!(again.sub(&dense).unwrap().frobenius_norm() < 1e-8 * dense.frobenius_norm());
    }
}
