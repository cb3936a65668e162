//! Thin wrappers over the dense backend.
//!
//! Everything is carried as `Mat<c64>`. Inputs whose imaginary parts are all
//! exactly zero are routed through the real kernels, so real data yields
//! exactly conjugate-closed spectra.

use std::sync::Once;

use faer::linalg::solvers::{Solve, SolveLstsq};
use faer::{c64, Mat, MatRef, Par};

use crate::error::{DmdError, Result};

pub type CMat = Mat<c64>;

pub const EPS: f64 = f64::EPSILON / 2.0;

static INIT: Once = Once::new();

/// Pins the backend to sequential kernels.
///
/// Parallelism lives only in the per-shift refinement loop, which merges by
/// index; keeping the kernels sequential makes every result independent of
/// the thread count.
pub fn init_backend() {
    INIT.call_once(|| faer::set_global_parallelism(Par::Seq));
}

pub fn czero() -> c64 {
    c64::new(0.0, 0.0)
}

pub fn creal(x: f64) -> c64 {
    c64::new(x, 0.0)
}

pub fn is_real(a: MatRef<'_, c64>) -> bool {
    (0..a.ncols()).all(|j| (0..a.nrows()).all(|i| a[(i, j)].im == 0.0))
}

pub fn real_part(a: MatRef<'_, c64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)].re)
}

pub fn complexify(a: MatRef<'_, f64>) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| creal(a[(i, j)]))
}

pub fn all_finite(a: MatRef<'_, c64>) -> bool {
    (0..a.ncols()).all(|j| (0..a.nrows()).all(|i| a[(i, j)].re.is_finite() && a[(i, j)].im.is_finite()))
}

pub fn col_norm(a: MatRef<'_, c64>, j: usize) -> f64 {
    a.col(j).norm_l2()
}

pub fn vec_norm(v: &[c64]) -> f64 {
    // hypot-style accumulation through the backend keeps over/underflow safe
    let m = Mat::from_fn(v.len(), 1, |i, _| v[i]);
    m.norm_l2()
}

pub fn column(a: MatRef<'_, c64>, j: usize) -> Vec<c64> {
    (0..a.nrows()).map(|i| a[(i, j)]).collect()
}

pub fn from_columns(n: usize, cols: &[Vec<c64>]) -> CMat {
    Mat::from_fn(n, cols.len(), |i, j| cols[j][i])
}

pub fn col_vec(v: &[c64]) -> CMat {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

/// Scales column `j` of `a` by `s[j]`.
pub fn scale_cols(a: MatRef<'_, c64>, s: &[f64]) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s[j])
}

pub fn hstack(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMat {
    assert_eq!(a.nrows(), b.nrows());
    let k = a.ncols();
    Mat::from_fn(a.nrows(), k + b.ncols(), |i, j| if j < k { a[(i, j)] } else { b[(i, j - k)] })
}

/// Thin SVD with singular values as reals, sorted descending.
pub struct Svd {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v: CMat,
}

fn svd_err(e: impl std::fmt::Debug) -> DmdError {
    DmdError::Backend(format!("SVD did not converge: {e:?}"))
}

fn raw_thin_svd(a: MatRef<'_, c64>) -> Result<Svd> {
    init_backend();
    if is_real(a) {
        let ar = real_part(a);
        let svd = ar.thin_svd().map_err(svd_err)?;
        Ok(Svd {
            u: complexify(svd.U()),
            s: svd.S().column_vector().iter().copied().collect(),
            v: complexify(svd.V()),
        })
    } else {
        let svd = a.thin_svd().map_err(svd_err)?;
        Ok(Svd {
            u: svd.U().to_owned(),
            s: svd.S().column_vector().iter().map(|x| x.re).collect(),
            v: svd.V().to_owned(),
        })
    }
}

/// Ratio of the largest to the smallest nonzero column norm.
fn column_norm_span(a: MatRef<'_, c64>) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for j in 0..a.ncols() {
        let c = col_norm(a, j);
        if c > 0.0 {
            lo = lo.min(c);
            hi = hi.max(c);
        }
    }
    if hi == 0.0 {
        1.0
    } else {
        hi / lo
    }
}

/// Column norm spread above which the SVD is preceded by a pivoted QR.
pub const PIVOT_SPAN: f64 = 1e8;

/// Thin SVD `a = U diag(s) V*`.
///
/// When the column norms of `a` are strongly graded the matrix is first
/// reduced as `a P = Q R` with column pivoting, and the SVD is taken of `R`.
/// Values and vectors always come out of the same call.
pub fn thin_svd(a: MatRef<'_, c64>) -> Result<Svd> {
    let (n, m) = (a.nrows(), a.ncols());
    if m == 0 || n == 0 {
        return Ok(Svd {
            u: Mat::zeros(n, 0),
            s: vec![],
            v: Mat::zeros(m, 0),
        });
    }
    if n < m || column_norm_span(a) <= PIVOT_SPAN {
        return raw_thin_svd(a);
    }
    let (q, r, perm) = col_piv_qr(a);
    let inner = raw_thin_svd(r.as_ref())?;
    let u = &q * &inner.u;
    // a P = Q R with (a P)(:, j) = a(:, perm[j]), so V = P V_r.
    let mut v = Mat::zeros(m, inner.v.ncols());
    for (j, &pj) in perm.iter().enumerate() {
        for c in 0..inner.v.ncols() {
            v[(pj, c)] = inner.v[(j, c)];
        }
    }
    Ok(Svd { u, s: inner.s, v })
}

/// Column-pivoted thin QR, returning `(Q, R, perm)` with `a(:, perm[j]) = Q R(:, j)`.
pub fn col_piv_qr(a: MatRef<'_, c64>) -> (CMat, CMat, Vec<usize>) {
    init_backend();
    if is_real(a) {
        let ar = real_part(a);
        let qr = ar.col_piv_qr();
        let perm = qr.P().arrays().0.to_vec();
        (complexify(qr.compute_thin_Q().as_ref()), complexify(qr.thin_R()), perm)
    } else {
        let qr = a.col_piv_qr();
        let perm = qr.P().arrays().0.to_vec();
        (qr.compute_thin_Q(), qr.thin_R().to_owned(), perm)
    }
}

/// Thin Householder QR. `Q` is only formed when asked for.
pub fn thin_qr(a: MatRef<'_, c64>, want_q: bool) -> (Option<CMat>, CMat) {
    init_backend();
    if is_real(a) {
        let ar = real_part(a);
        let qr = ar.qr();
        let q = want_q.then(|| complexify(qr.compute_thin_Q().as_ref()));
        (q, complexify(qr.thin_R()))
    } else {
        let qr = a.qr();
        let q = want_q.then(|| qr.compute_thin_Q());
        (q, qr.thin_R().to_owned())
    }
}

/// Least-squares solve `min ‖a x − b‖` through the column-pivoted QR.
pub fn lstsq(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMat {
    init_backend();
    if is_real(a) && is_real(b) {
        let x = real_part(a).col_piv_qr().solve_lstsq(real_part(b));
        complexify(x.as_ref())
    } else {
        a.col_piv_qr().solve_lstsq(b)
    }
}

/// Solves the square system `a x = b` by partial-pivoting LU.
pub fn solve(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMat {
    init_backend();
    if is_real(a) && is_real(b) {
        complexify(real_part(a).partial_piv_lu().solve(real_part(b)).as_ref())
    } else {
        a.partial_piv_lu().solve(b)
    }
}

fn evd_err(e: impl std::fmt::Debug) -> DmdError {
    DmdError::Backend(format!("eigensolver did not converge: {e:?}"))
}

/// Eigenvalues and unit-norm eigenvectors of a square matrix.
pub fn eig(a: MatRef<'_, c64>) -> Result<(Vec<c64>, CMat)> {
    init_backend();
    let k = a.nrows();
    if k == 0 {
        return Ok((vec![], Mat::zeros(0, 0)));
    }
    let (vals, mut vecs): (Vec<c64>, CMat) = if is_real(a) {
        let e = real_part(a).eigen().map_err(evd_err)?;
        (e.S().column_vector().iter().copied().collect(), e.U().to_owned())
    } else {
        let e = a.eigen().map_err(evd_err)?;
        (e.S().column_vector().iter().copied().collect(), e.U().to_owned())
    };
    for j in 0..k {
        let nrm = col_norm(vecs.as_ref(), j);
        if nrm > 0.0 {
            for i in 0..k {
                vecs[(i, j)] /= nrm;
            }
        }
    }
    Ok((vals, vecs))
}

pub fn eigvals(a: MatRef<'_, c64>) -> Result<Vec<c64>> {
    init_backend();
    if a.nrows() == 0 {
        return Ok(vec![]);
    }
    if is_real(a) {
        real_part(a).eigenvalues().map_err(evd_err)
    } else {
        a.eigenvalues().map_err(evd_err)
    }
}

/// Spectral norm.
pub fn norm2(a: MatRef<'_, c64>) -> Result<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(0.0);
    }
    Ok(raw_thin_svd(a)?.s.first().copied().unwrap_or(0.0))
}

/// Smallest singular value and the matching right singular vector.
pub fn smallest_right_singular(a: MatRef<'_, c64>) -> Result<(f64, Vec<c64>)> {
    let svd = raw_thin_svd(a)?;
    let last = svd.s.len() - 1;
    Ok((svd.s[last], column(svd.v.as_ref(), last)))
}

/// Spectral condition number; infinite for rank-deficient input.
pub fn cond2(a: MatRef<'_, c64>) -> Result<f64> {
    let svd = raw_thin_svd(a)?;
    let lo = *svd.s.last().unwrap_or(&0.0);
    Ok(if lo == 0.0 { f64::INFINITY } else { svd.s[0] / lo })
}

/// `a.adjoint() * b` without forming the adjoint.
pub fn adj_mul(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMat {
    a.adjoint() * b
}

/// Solves `u x = b` in place for upper-triangular `u`.
pub fn solve_upper(u: MatRef<'_, c64>, b: &mut CMat) {
    faer::linalg::triangular_solve::solve_upper_triangular_in_place(u, b.as_mut(), Par::Seq);
}

/// Orders complex numbers by modulus, then argument.
pub fn cmp_modulus_arg(a: &c64, b: &c64) -> std::cmp::Ordering {
    a.norm()
        .total_cmp(&b.norm())
        .then_with(|| a.arg().total_cmp(&b.arg()))
}

/// Minimal-cost matching distance between two equally sized point sets.
///
/// Returns the largest pairwise distance under the assignment minimizing that
/// maximum (bottleneck matching), which is the natural multiset distance.
pub fn matching_distance(a: &[c64], b: &[c64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    if n == 0 {
        return 0.0;
    }
    let mut dists: Vec<f64> = a.iter().flat_map(|x| b.iter().map(move |y| (x - y).norm())).collect();
    dists.sort_by(f64::total_cmp);
    dists.dedup();
    let feasible = |t: f64| -> bool {
        let adj: Vec<Vec<usize>> = (0..n)
            .map(|i| (0..n).filter(|&j| (a[i] - b[j]).norm() <= t).collect())
            .collect();
        let mut owner = vec![usize::MAX; n];
        fn augment(i: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [usize]) -> bool {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    if owner[j] == usize::MAX || augment(owner[j], adj, seen, owner) {
                        owner[j] = i;
                        return true;
                    }
                }
            }
            false
        }
        (0..n).all(|i| augment(i, &adj, &mut vec![false; n], &mut owner))
    };
    let (mut lo, mut hi) = (0usize, dists.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(dists[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    dists[lo]
}
