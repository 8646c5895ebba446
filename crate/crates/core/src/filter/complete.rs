use crate::error::{Error, Result};
use crate::l1reg::{solve_l1reg_columnwise, ColumnFailure};
use crate::matrix::{gemm, DenseMatrix};
use crate::pcp::AdmConfig;
use crate::svd::{pseudo_inverse_apply, svd};

use super::seed::SeedRecovery;

/// Outcome of fitting a block onto the seed's singular vectors.
#[derive(Clone, Debug)]
pub struct FilteredBlock {
    /// Coefficients on the seed basis, `r' x k` with `k` the number of fitted vectors.
    pub coeffs: DenseMatrix,
    /// Sparse part, in the orientation of the block that was filtered.
    pub sparse: DenseMatrix,
    pub iterations: usize,
    pub failures: Vec<ColumnFailure>,
}

/// Column-filtered and row-filtered blocks of an l1-filtering solve.
#[derive(Clone, Debug)]
pub struct FilterResult {
    /// `Q̃`: `r' x (n - n')`, so that `L^c = U^s Q̃`.
    pub q_tilde: DenseMatrix,
    /// `P̃`: `r' x (m - m')`, so that `L^r = P̃ᵀ V^sᵀ`.
    pub p_tilde: DenseMatrix,
    /// Sparse part of the seed rows outside the seed columns, `m' x (n - n')`.
    pub s_col: DenseMatrix,
    /// Sparse part of the seed columns outside the seed rows, `(m - m') x n'`.
    pub s_row: DenseMatrix,
    pub iterations: usize,
    pub failures: usize,
}

/// Fits every column of `m_c` (the seed rows outside the seed columns) as
/// `U^s q + e` under an l1 penalty on `e`.
pub fn filter_columns(
    m_c: &DenseMatrix,
    u_s: &DenseMatrix,
    cfg: &AdmConfig,
    parallelism: usize,
) -> Result<FilteredBlock> {
    let sol = solve_l1reg_columnwise(m_c, u_s, cfg, parallelism)?;
    Ok(FilteredBlock { coeffs: sol.z, sparse: sol.e, iterations: sol.iterations, failures: sol.failures })
}

/// Fits every row of `m_r` (the seed columns outside the seed rows) as
/// `(V^s p)ᵀ + e`. The returned sparse part has the orientation of `m_r`;
/// failure indices refer to rows of `m_r`.
pub fn filter_rows(m_r: &DenseMatrix, v_s: &DenseMatrix, cfg: &AdmConfig, parallelism: usize) -> Result<FilteredBlock> {
    let mut block = filter_columns(&m_r.transpose(), v_s, cfg, parallelism)?;
    block.sparse = block.sparse.transpose();
    Ok(block)
}

/// Complement of a strictly increasing index set in `0..n`.
pub fn complement(idx: &[usize], n: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(n.saturating_sub(idx.len()));
    let mut it = idx.iter().peekable();
    for i in 0..n {
        if it.peek() == Some(&&i) {
            it.next();
        } else {
            out.push(i);
        }
    }
    out
}

/// Filters the seed rows and seed columns of `m` against the recovered seed.
/// The two sides are independent and run concurrently unless `parallelism == 1`.
pub fn filter_seed(m: &DenseMatrix, seed: &SeedRecovery, cfg: &AdmConfig, parallelism: usize) -> Result<FilterResult> {
    let rest_rows = complement(&seed.row_idx, m.rows());
    let rest_cols = complement(&seed.col_idx, m.cols());
    let m_c = m.select(&seed.row_idx, &rest_cols)?;
    let m_r = m.select(&rest_rows, &seed.col_idx)?;
    let u_s = &seed.seed_svd.u;
    let v_s = &seed.seed_svd.v;
    let (cols, rows) = if parallelism == 1 {
        (filter_columns(&m_c, u_s, cfg, 1), filter_rows(&m_r, v_s, cfg, 1))
    } else {
        rayon::join(|| filter_columns(&m_c, u_s, cfg, parallelism), || filter_rows(&m_r, v_s, cfg, parallelism))
    };
    let (cols, rows) = (cols?, rows?);
    Ok(FilterResult {
        iterations: cols.iterations.max(rows.iterations),
        failures: cols.failures.len() + rows.failures.len(),
        q_tilde: cols.coeffs,
        p_tilde: rows.coeffs,
        s_col: cols.sparse,
        s_row: rows.sparse,
    })
}

/// Low-rank completion of the block outside the seed rows and columns:
/// `P̃ᵀ Σ⁻¹ Q̃`.
pub fn nystrom_complete(seed: &SeedRecovery, fr: &FilterResult) -> Result<DenseMatrix> {
    let k = seed.r_prime;
    if k == 0 {
        return Err(Error::SeedRankZero);
    }
    if fr.p_tilde.rows() != k || fr.q_tilde.rows() != k {
        return Err(Error::dim(
            "nystrom_complete",
            format!("coefficients have {} and {} rows, seed rank is {k}", fr.p_tilde.rows(), fr.q_tilde.rows()),
        ));
    }
    let mut q = fr.q_tilde.clone();
    let c = q.cols();
    if c > 0 {
        for (row, s) in q.as_mut_slice().chunks_exact_mut(c).zip(&seed.seed_svd.sigma) {
            let inv = 1.0 / s;
            row.iter_mut().for_each(|x| *x *= inv);
        }
    }
    Ok(gemm(fr.p_tilde.as_faer().transpose(), q.as_faer()))
}

/// The same completion through the explicit blocks: `L^r pinv(L^s) L^c`,
/// with the pseudo-inverse taken from a fresh SVD of `l_s`.
pub fn nystrom_complete_pinv(
    l_r: &DenseMatrix,
    l_s: &DenseMatrix,
    l_c: &DenseMatrix,
    rank_tol: f64,
) -> Result<DenseMatrix> {
    if l_r.cols() != l_s.cols() || l_c.rows() != l_s.rows() {
        return Err(Error::dim(
            "nystrom_complete_pinv",
            format!(
                "L^r is {}x{}, L^s is {}x{}, L^c is {}x{}",
                l_r.rows(),
                l_r.cols(),
                l_s.rows(),
                l_s.cols(),
                l_c.rows(),
                l_c.cols()
            ),
        ));
    }
    let dec = svd(l_s, rank_tol)?;
    let right = pseudo_inverse_apply(&dec, l_c)?;
    l_r.matmul(&right)
}

/// `L^c = U^s Q̃`, the low-rank part of the seed rows outside the seed columns.
pub fn column_block(seed: &SeedRecovery, fr: &FilterResult) -> DenseMatrix {
    gemm(seed.seed_svd.u.as_faer(), fr.q_tilde.as_faer())
}

/// `L^r = P̃ᵀ V^sᵀ`, the low-rank part of the seed columns outside the seed rows.
pub fn row_block(seed: &SeedRecovery, fr: &FilterResult) -> DenseMatrix {
    gemm(fr.p_tilde.as_faer().transpose(), seed.seed_svd.v.as_faer().transpose())
}

fn check_index_set(idx: &[usize], n: usize, what: &str) -> Result<()> {
    if idx.windows(2).any(|w| w[0] >= w[1]) || idx.last().is_some_and(|&i| i >= n) {
        return Err(Error::InvalidArgument(format!("{what} index set is not strictly increasing within 0..{n}")));
    }
    Ok(())
}

/// Places the four low-rank blocks at their original positions in an
/// `rows x cols` matrix.
pub fn assemble(
    seed: &SeedRecovery,
    fr: &FilterResult,
    completion: &DenseMatrix,
    rows: usize,
    cols: usize,
) -> Result<DenseMatrix> {
    check_index_set(&seed.row_idx, rows, "row")?;
    check_index_set(&seed.col_idx, cols, "column")?;
    let (mp, np) = (seed.row_idx.len(), seed.col_idx.len());
    let (mr, nr) = (rows - mp, cols - np);
    let l_c = column_block(seed, fr);
    let l_r = row_block(seed, fr);
    let expect = [
        ("seed", seed.seed_l.shape(), (mp, np)),
        ("column", l_c.shape(), (mp, nr)),
        ("row", l_r.shape(), (mr, np)),
        ("completion", completion.shape(), (mr, nr)),
    ];
    for (what, got, want) in expect {
        if got != want {
            return Err(Error::dim(
                "assemble",
                format!("{what} block is {}x{}, expected {}x{}", got.0, got.1, want.0, want.1),
            ));
        }
    }

    let rest_cols = complement(&seed.col_idx, cols);
    let mut out = DenseMatrix::zeros(rows, cols);
    let mut next_seed_row = seed.row_idx.iter().copied().enumerate().peekable();
    let mut rest_row = 0;
    for (i, dst) in out.as_mut_slice().chunks_exact_mut(cols.max(1)).enumerate() {
        let (left, right) = match next_seed_row.peek() {
            Some(&(pos, r)) if r == i => {
                next_seed_row.next();
                (seed.seed_l.row(pos), l_c.row(pos))
            }
            _ => {
                rest_row += 1;
                (l_r.row(rest_row - 1), completion.row(rest_row - 1))
            }
        };
        for (&j, &v) in seed.col_idx.iter().zip(left) {
            dst[j] = v;
        }
        for (&j, &v) in rest_cols.iter().zip(right) {
            dst[j] = v;
        }
    }
    Ok(out)
}

/// The full low-rank matrix as one product `F Gᵀ` of rank `r'` factors,
/// without forming the completion block separately. Row `i` of `F` is `U^s_i`
/// for a seed row and `P̃_iᵀ Σ⁻¹` otherwise; row `j` of `G` is `Σ V^s_j` for
/// a seed column and `Q̃_j` otherwise. Agrees with [`assemble`] up to rounding.
pub fn assemble_factored(seed: &SeedRecovery, fr: &FilterResult, rows: usize, cols: usize) -> Result<DenseMatrix> {
    check_index_set(&seed.row_idx, rows, "row")?;
    check_index_set(&seed.col_idx, cols, "column")?;
    let k = seed.r_prime;
    let (mp, np) = (seed.row_idx.len(), seed.col_idx.len());
    let expect = [
        ("P~", fr.p_tilde.shape(), (k, rows - mp)),
        ("Q~", fr.q_tilde.shape(), (k, cols - np)),
        ("U", seed.seed_svd.u.shape(), (mp, k)),
        ("V", seed.seed_svd.v.shape(), (np, k)),
    ];
    for (what, got, want) in expect {
        if got != want {
            return Err(Error::dim(
                "assemble_factored",
                format!("{what} is {}x{}, expected {}x{}", got.0, got.1, want.0, want.1),
            ));
        }
    }
    let sigma = &seed.seed_svd.sigma;
    let factor =
        |n: usize, idx: &[usize], seed_row: &dyn Fn(usize, usize) -> f64, rest: &dyn Fn(usize, usize) -> f64| {
            let mut data = vec![0.0; n * k];
            let mut it = idx.iter().copied().enumerate().peekable();
            let mut t = 0;
            for (i, dst) in data.chunks_exact_mut(k.max(1)).enumerate().take(n) {
                match it.peek() {
                    Some(&(pos, r)) if r == i => {
                        it.next();
                        dst.iter_mut().enumerate().for_each(|(c, d)| *d = seed_row(pos, c));
                    }
                    _ => {
                        dst.iter_mut().enumerate().for_each(|(c, d)| *d = rest(t, c));
                        t += 1;
                    }
                }
            }
            DenseMatrix::from_vec_unchecked(n, k, data)
        };
    let f = factor(rows, &seed.row_idx, &|p, c| seed.seed_svd.u.get(p, c), &|t, c| fr.p_tilde.get(c, t) / sigma[c]);
    let g = factor(cols, &seed.col_idx, &|q, c| sigma[c] * seed.seed_svd.v.get(q, c), &|t, c| fr.q_tilde.get(c, t));
    if k == 0 {
        return Ok(DenseMatrix::zeros(rows, cols));
    }
    Ok(gemm(f.as_faer(), g.as_faer().transpose()))
}
