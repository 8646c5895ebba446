//! Exact finish for a single least-absolute-deviation column.
//!
//! Some minimizer of `‖x - A z‖_1` interpolates `r` rows exactly. Starting
//! from the vertex nearest a given `z`, each step releases one interpolated
//! row and slides along the resulting edge to the weighted-median breakpoint
//! of the objective. At the optimum the multipliers
//! `w = A_Bᵀ⁻¹ Σ_{i∉B} sign(res_i) a_i` satisfy `|w| ≤ 1`.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;

use crate::matrix::DenseMatrix;

/// Relative pivot size for a row to join the starting basis.
const BASIS_PIVOT_TOL: f64 = 1e-6;
/// Residuals at or below this multiple of `‖x‖_∞` count as interpolated.
const ZERO_RES_TOL: f64 = 1e-13;
/// Residuals at or below this multiple of `‖x‖_∞` are treated as zero when
/// building the dual certificate.
const NEAR_ZERO_RES: f64 = 1e-4;
/// Slack on the multiplier bound, which is 1.
const MULT_TOL: f64 = 1e-10;

pub(super) struct Vertex {
    pub z: Vec<f64>,
    pub objective: f64,
}

/// Gap between `‖x - A z‖_1` and a dual lower bound built at `z`.
///
/// Rows with `|res_i| > NEAR_ZERO_RES * ‖x‖_∞` get `u_i = sign(res_i)`; the
/// rest get the least-norm `u_Z` with `A_Zᵀ u_Z = -A_Nᵀ u_N`. After scaling
/// `u` into the unit box, `Aᵀu = 0` and `uᵀx` bounds the optimum from below.
pub(super) fn duality_gap(x: &[f64], a: &DenseMatrix, z: &[f64]) -> f64 {
    let (m, r) = (x.len(), a.cols());
    let scale = x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let near = NEAR_ZERO_RES * scale;
    let res: Vec<f64> = (0..m).map(|i| x[i] - dot(a.row(i), z)).collect();
    let primal: f64 = res.iter().map(|v| v.abs()).sum();
    let zset: Vec<usize> = (0..m).filter(|&i| res[i].abs() <= near).collect();
    let mut g = vec![0.0; r];
    let mut bound = 0.0;
    for i in (0..m).filter(|&i| res[i].abs() > near) {
        let s = res[i].signum();
        g.iter_mut().zip(a.row(i)).for_each(|(gk, &aik)| *gk += s * aik);
        bound += s * x[i];
    }
    let mut u_max = 1.0f64;
    if g.iter().any(|&v| v != 0.0) {
        if zset.len() < r {
            return f64::INFINITY;
        }
        let gram = Mat::from_fn(r, r, |p, q| zset.iter().map(|&i| a.get(i, p) * a.get(i, q)).sum::<f64>());
        let v = solve(&gram.partial_piv_lu(), |p| g[p], r, false);
        if !v.iter().all(|t| t.is_finite()) {
            return f64::INFINITY;
        }
        for &i in &zset {
            let ui = -dot(a.row(i), &v);
            u_max = u_max.max(ui.abs());
            bound += ui * x[i];
        }
    }
    primal - bound / u_max
}

/// Descends from the vertex nearest `z0` to an l1 minimizer. Returns `None`
/// when no well-posed starting basis exists or the step budget runs out.
pub(super) fn descend(x: &[f64], a: &DenseMatrix, z0: &[f64]) -> Option<Vertex> {
    let (m, r) = (x.len(), a.cols());
    if r == 0 || m < r {
        return None;
    }
    let scale = x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let zero = ZERO_RES_TOL * scale;
    let mut basis = initial_basis(x, a, z0)?;
    let mut res = vec![0.0; m];
    let mut c = vec![0.0; m];
    let mut in_basis = vec![false; m];

    for _ in 0..(10 * m).max(50) {
        in_basis.iter_mut().for_each(|b| *b = false);
        basis.iter().for_each(|&i| in_basis[i] = true);
        let a_b = Mat::from_fn(r, r, |p, k| a.get(basis[p], k));
        let lu = a_b.partial_piv_lu();
        let z = solve(&lu, |p| x[basis[p]], r, false);
        if !z.iter().all(|v| v.is_finite()) {
            return None;
        }
        for i in 0..m {
            res[i] = if in_basis[i] { 0.0 } else { x[i] - dot(a.row(i), &z) };
        }
        let mut g = vec![0.0; r];
        for i in (0..m).filter(|&i| !in_basis[i] && res[i].abs() > zero) {
            let s = res[i].signum();
            g.iter_mut().zip(a.row(i)).for_each(|(gk, &aik)| *gk += s * aik);
        }
        let w = solve(&lu, |p| g[p], r, true);
        // Most negative edge slope over the released rows, degenerate rows included.
        let mut best: Option<(usize, f64, f64)> = None;
        for k in (0..r).filter(|&k| w[k].abs() > 1.0 + MULT_TOL) {
            let s = w[k].signum();
            let d = solve(&lu, |p| if p == k { s } else { 0.0 }, r, false);
            let mut slope = 1.0 - w[k].abs();
            for i in (0..m).filter(|&i| !in_basis[i] && res[i].abs() <= zero) {
                slope += dot(a.row(i), &d).abs();
            }
            if slope < -MULT_TOL && best.is_none_or(|(_, b, _)| slope < b) {
                best = Some((k, slope, s));
            }
        }
        let Some((k, slope0, s)) = best else {
            let objective = res.iter().map(|v| v.abs()).sum();
            return Some(Vertex { z, objective });
        };

        let d = solve(&lu, |p| if p == k { s } else { 0.0 }, r, false);
        let mut breaks: Vec<(f64, usize)> = Vec::new();
        for i in (0..m).filter(|&i| !in_basis[i]) {
            c[i] = dot(a.row(i), &d);
            if res[i].abs() > zero && c[i] != 0.0 {
                let t = res[i] / c[i];
                if t > 0.0 {
                    breaks.push((t, i));
                }
            }
        }
        breaks.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));
        let mut slope = slope0;
        let mut entering = None;
        for &(_, i) in &breaks {
            slope += 2.0 * c[i].abs();
            if slope >= 0.0 {
                entering = Some(i);
                break;
            }
        }
        basis[k] = entering?;
    }
    None
}

/// Picks `r` independent rows in order of increasing `|x_i - a_i z0|`.
fn initial_basis(x: &[f64], a: &DenseMatrix, z0: &[f64]) -> Option<Vec<usize>> {
    let (m, r) = (x.len(), a.cols());
    let mut order: Vec<(f64, usize)> = (0..m).map(|i| ((x[i] - dot(a.row(i), z0)).abs(), i)).collect();
    order.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));
    let mut basis = Vec::with_capacity(r);
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(r);
    for &(_, i) in &order {
        let row = a.row(i);
        let norm = dot(row, row).sqrt();
        if norm == 0.0 {
            continue;
        }
        let mut v = row.to_vec();
        for u in &q {
            let p = dot(u, &v);
            v.iter_mut().zip(u).for_each(|(vk, uk)| *vk -= p * uk);
        }
        let left = dot(&v, &v).sqrt();
        if left > BASIS_PIVOT_TOL * norm {
            v.iter_mut().for_each(|vk| *vk /= left);
            q.push(v);
            basis.push(i);
            if basis.len() == r {
                return Some(basis);
            }
        }
    }
    None
}

fn solve(lu: &PartialPivLu<f64>, rhs: impl Fn(usize) -> f64, r: usize, transpose: bool) -> Vec<f64> {
    let b = Mat::from_fn(r, 1, |p, _| rhs(p));
    let sol = if transpose { lu.solve_transpose(&b) } else { lu.solve(&b) };
    (0..r).map(|p| sol[(p, 0)]).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
