//! Skinny SVD backend and the helpers built on it.
//!
//! Two routes produce a [`SkinnySvd`]:
//!
//! * [`svd`] factorizes the whole matrix with faer's dense SVD and drops
//!   singular values below `rank_tol * sigma_max`.
//! * [`leading_svd`] returns only the triplets above an absolute threshold, using
//!   block subspace iteration with Rayleigh-Ritz extraction. Every returned
//!   triplet is checked against its residual `‖A v - σ u‖`, and the block always
//!   carries at least one Ritz value below the threshold, so nothing above the
//!   threshold is silently cut off. Iterative solvers pass the previous right
//!   singular vectors as a warm start.

use faer::{Mat, MatRef};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::{gemm, par, DenseMatrix};

/// Default numerical-rank cutoff relative to the largest singular value.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// `u * diag(sigma) * vᵀ` with orthonormal `u`, `v` and strictly positive,
/// nonincreasing `sigma`.
#[derive(Clone, Debug)]
pub struct SkinnySvd {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

impl SkinnySvd {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn rows(&self) -> usize {
        self.u.rows()
    }

    pub fn cols(&self) -> usize {
        self.v.rows()
    }

    /// Rebuilds `u * diag(sigma) * vᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        self.reconstruct_with(&self.sigma)
    }

    /// `u * diag(weights) * vᵀ` for caller-supplied weights (one per triplet).
    pub fn reconstruct_with(&self, weights: &[f64]) -> DenseMatrix {
        debug_assert_eq!(weights.len(), self.rank());
        let k = self.rank();
        if k == 0 {
            return DenseMatrix::zeros(self.rows(), self.cols());
        }
        let mut us = self.u.clone();
        for row in us.as_mut_slice().chunks_exact_mut(k) {
            for (x, w) in row.iter_mut().zip(weights) {
                *x *= w;
            }
        }
        gemm(us.as_faer(), self.v.as_faer().transpose())
    }

    /// Keeps the leading `k` triplets.
    pub fn truncate(&self, k: usize) -> SkinnySvd {
        let k = k.min(self.rank());
        let keep: Vec<usize> = (0..k).collect();
        SkinnySvd {
            u: self.u.select(&(0..self.rows()).collect::<Vec<_>>(), &keep).unwrap(),
            sigma: self.sigma[..k].to_vec(),
            v: self.v.select(&(0..self.cols()).collect::<Vec<_>>(), &keep).unwrap(),
        }
    }

    /// Largest deviation of `uᵀu` and `vᵀv` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        gram_deviation(&self.u).max(gram_deviation(&self.v))
    }
}

/// `max |aᵀa - I|` over all entries.
pub fn gram_deviation(a: &DenseMatrix) -> f64 {
    let g = gemm(a.as_faer().transpose(), a.as_faer());
    let k = g.rows();
    let mut dev: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((g.get(i, j) - target).abs());
        }
    }
    dev
}

/// Dense skinny SVD. Singular values `<= rank_tol * sigma_max` (and exact zeros)
/// are discarded together with their vectors.
pub fn svd(m: &DenseMatrix, rank_tol: f64) -> Result<SkinnySvd> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Ok(SkinnySvd { u: DenseMatrix::zeros(rows, 0), sigma: Vec::new(), v: DenseMatrix::zeros(cols, 0) });
    }
    let dec = m.as_faer().thin_svd().map_err(|_| Error::SvdConvergence { rows, cols })?;
    let s: Vec<f64> = dec.S().column_vector().iter().copied().collect();
    if s.iter().any(|x| !x.is_finite()) {
        return Err(Error::SvdConvergence { rows, cols });
    }
    let smax = s.first().copied().unwrap_or(0.0);
    let k = s.iter().take_while(|&&x| x > 0.0 && x > rank_tol * smax).count();
    Ok(SkinnySvd {
        u: DenseMatrix::from_faer(dec.U().subcols(0, k)),
        sigma: s[..k].to_vec(),
        v: DenseMatrix::from_faer(dec.V().subcols(0, k)),
    })
}

/// All singular values (nonincreasing), including zeros.
pub fn singular_values(m: &DenseMatrix) -> Result<Vec<f64>> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Ok(Vec::new());
    }
    m.as_faer().singular_values().map_err(|_| Error::SvdConvergence { rows, cols })
}

/// Sum of singular values.
pub fn nuclear_norm(m: &DenseMatrix) -> Result<f64> {
    Ok(singular_values(m)?.iter().sum())
}

/// Number of singular values above `rank_tol * sigma_max`.
pub fn numerical_rank(m: &DenseMatrix, rank_tol: f64) -> Result<usize> {
    let s = singular_values(m)?;
    let smax = s.first().copied().unwrap_or(0.0);
    Ok(s.iter().filter(|&&x| x > 0.0 && x > rank_tol * smax).count())
}

/// Applies the Moore-Penrose pseudo-inverse `v * diag(1/sigma) * uᵀ` to `rhs`.
pub fn pseudo_inverse_apply(svd: &SkinnySvd, rhs: &DenseMatrix) -> Result<DenseMatrix> {
    if rhs.rows() != svd.rows() {
        return Err(Error::dim(
            "pseudo_inverse_apply",
            format!("pinv is {}x{}, rhs has {} rows", svd.cols(), svd.rows(), rhs.rows()),
        ));
    }
    let k = svd.rank();
    let mut coeff = gemm(svd.u.as_faer().transpose(), rhs.as_faer());
    let c = coeff.cols();
    for (i, row) in coeff.as_mut_slice().chunks_exact_mut(c.max(1)).enumerate().take(k) {
        let inv = 1.0 / svd.sigma[i];
        row.iter_mut().for_each(|x| *x *= inv);
    }
    Ok(gemm(svd.v.as_faer(), coeff.as_faer()))
}

fn normal_block(rows: usize, cols: usize, seed: u64) -> Mat<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Mat::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
}

/// Power-iteration estimate of the spectral norm `‖m‖_2`.
///
/// Deterministic: the start vector comes from a fixed generator seed.
pub fn spectral_norm_estimate(m: &DenseMatrix) -> f64 {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    let a = m.as_faer();
    let mut v = normal_block(cols, 1, 0x5eed_0001);
    let mut est = 0.0;
    for _ in 0..100 {
        let nv = v.norm_l2();
        if nv == 0.0 {
            return 0.0;
        }
        v /= faer::Scale(nv);
        let av = a * &v;
        let next = av.norm_l2();
        v = a.transpose() * &av;
        if (next - est).abs() <= 1e-7 * next {
            return next;
        }
        est = next;
    }
    est
}

/// Result of [`leading_svd`].
#[derive(Clone, Debug)]
pub struct LeadingSvd {
    /// Triplets with `sigma > threshold`.
    pub svd: SkinnySvd,
    /// Right Ritz vectors of the final block, usable as the next warm start.
    pub block_v: DenseMatrix,
    /// Whether every returned triplet met the residual tolerance.
    pub converged: bool,
    pub sweeps: usize,
}

/// Residual tolerance on `‖A v - σ u‖` relative to `σ_max`.
const LEADING_RESIDUAL_TOL: f64 = 1e-10;
const LEADING_MAX_SWEEPS: usize = 40;

/// Singular triplets of `m` whose singular values exceed `threshold`.
///
/// `k_guess` is the expected count; `warm` holds right singular vectors from a
/// nearby matrix (n rows, any number of columns). Falls back to the dense
/// route when the requested block approaches half the smaller dimension.
pub fn leading_svd(m: &DenseMatrix, threshold: f64, k_guess: usize, warm: Option<&DenseMatrix>) -> Result<LeadingSvd> {
    let (rows, cols) = m.shape();
    let kmax = rows.min(cols);
    let a = m.as_faer();
    let mut k = k_guess.max(1);
    let mut warm_block: Option<Mat<f64>> = warm.map(|w| w.as_faer().to_owned());
    let mut total_sweeps = 0;
    loop {
        let block = (k + (k / 4).max(8)).min(kmax);
        if 2 * block >= kmax {
            return dense_above(m, threshold);
        }
        let mut v0 = normal_block(cols, block, 0x5eed_0002 ^ block as u64);
        if let Some(w) = &warm_block {
            if w.nrows() == cols {
                let take = w.ncols().min(block);
                v0.subcols_mut(0, take).copy_from(w.subcols(0, take));
            }
        }
        let mut y = gemm_mat(a, v0.as_ref());
        let mut state = None;
        for _ in 0..LEADING_MAX_SWEEPS {
            total_sweeps += 1;
            let q = y.qr().compute_thin_Q();
            let ct = gemm_mat(a.transpose(), q.as_ref()); // (Qᵀ A)ᵀ, cols x block
            let dec = ct.thin_svd().map_err(|_| Error::SvdConvergence { rows: cols, cols: block })?;
            let sigma: Vec<f64> = dec.S().column_vector().iter().copied().collect();
            let u = gemm_mat(q.as_ref(), dec.V());
            let v = dec.U().to_owned();
            y = gemm_mat(a, v.as_ref());
            let smax = sigma[0];
            let above = sigma.iter().take_while(|&&s| s > threshold).count();
            if above == block {
                state = Some((u, sigma, v, above, false));
                break;
            }
            let tol = LEADING_RESIDUAL_TOL * smax.max(f64::MIN_POSITIVE);
            let residual = |j: usize| {
                let mut r2 = 0.0;
                for i in 0..rows {
                    let d = y[(i, j)] - sigma[j] * u[(i, j)];
                    r2 += d * d;
                }
                r2.sqrt()
            };
            // Kept triplets must be accurate; the first dropped one only has
            // to be certifiably below the threshold.
            let converged = (0..above).all(|j| residual(j) <= tol)
                && (above == block || {
                    let r = residual(above);
                    r <= tol || sigma[above] + r < threshold
                });
            state = Some((u, sigma, v, above, converged));
            if converged {
                break;
            }
        }
        let (u, sigma, v, above, converged) = state.expect("at least one sweep");
        if above == block {
            k = 2 * block;
            warm_block = Some(v);
            continue;
        }
        let keep = sigma.iter().take(above).take_while(|&&s| s > 0.0).count();
        return Ok(LeadingSvd {
            svd: SkinnySvd {
                u: DenseMatrix::from_faer(u.subcols(0, keep)),
                sigma: sigma[..keep].to_vec(),
                v: DenseMatrix::from_faer(v.subcols(0, keep)),
            },
            block_v: DenseMatrix::from_faer(v.as_ref()),
            converged,
            sweeps: total_sweeps,
        });
    }
}

fn dense_above(m: &DenseMatrix, threshold: f64) -> Result<LeadingSvd> {
    let full = svd(m, 0.0)?;
    let keep = full.sigma.iter().take_while(|&&s| s > threshold).count();
    let block_v = full.v.clone();
    Ok(LeadingSvd { svd: full.truncate(keep), block_v, converged: true, sweeps: 0 })
}

fn gemm_mat(lhs: MatRef<'_, f64>, rhs: MatRef<'_, f64>) -> Mat<f64> {
    let mut out = Mat::<f64>::zeros(lhs.nrows(), rhs.ncols());
    faer::linalg::matmul::matmul(out.as_mut(), faer::Accum::Replace, lhs, rhs, 1.0, par());
    out
}
