//! Rayleigh–Ritz extraction: Rayleigh quotients, Ritz pairs, data-driven
//! residuals and refined Ritz vectors.

use faer::{c64, Mat, MatRef};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DmdError, Result};
use crate::linalg::{self, CMat};
use crate::pod::PodBasis;
use crate::weighted::InnerProduct;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Dmd,
    Rrr,
    RrrCompressed,
    Exact,
    Fb,
    Weighted,
    TwoSided,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Dmd => "dmd",
            Variant::Rrr => "rrr",
            Variant::RrrCompressed => "rrr-compressed",
            Variant::Exact => "exact",
            Variant::Fb => "fb",
            Variant::Weighted => "weighted",
            Variant::TwoSided => "weighted2",
        }
    }
}

/// Result of minimizing `‖A U w − λ U w‖` over unit `w` for a fixed shift.
#[derive(Clone, Debug, PartialEq)]
pub struct Refinement {
    pub w: Vec<c64>,
    pub sigma_min: f64,
    pub rho: c64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RitzPair {
    pub lambda: c64,
    /// Data-driven residual of the returned pair, in the ambient norm.
    pub residual: Option<f64>,
    pub refined: Option<Refinement>,
    pub koopman: Option<c64>,
    pub has_vector: bool,
}

/// Ritz values and vectors with their residual certificates.
///
/// `vectors` are stored in the coordinates of `weight` (the plain vectors
/// when there is none); `modes()` lifts them to ambient space.
#[derive(Clone, Debug)]
pub struct RitzDecomposition {
    pub variant: Variant,
    pub pairs: Vec<RitzPair>,
    pub vectors: CMat,
    /// Eigenvector coefficients `W` in the POD basis, same column order as `pairs`.
    pub coeffs: CMat,
    /// `ordering[i]` is the eigensolver index of `pairs[i]`.
    pub ordering: Vec<usize>,
    pub pod: PodBasis,
    pub weight: Option<InnerProduct>,
    pub n: usize,
    pub m: usize,
    pub scaled: bool,
}

impl RitzDecomposition {
    pub fn k(&self) -> usize {
        self.pairs.len()
    }

    pub fn lambdas(&self) -> Vec<c64> {
        self.pairs.iter().map(|p| p.lambda).collect()
    }

    pub fn residuals(&self) -> Vec<Option<f64>> {
        self.pairs.iter().map(|p| p.residual).collect()
    }

    /// Ritz vectors in ambient coordinates.
    pub fn modes(&self) -> Result<CMat> {
        match &self.weight {
            None => Ok(self.vectors.clone()),
            Some(w) => w.lift(self.vectors.as_ref()),
        }
    }

    /// Sorts by ascending residual, breaking ties by `|λ|` then `arg λ`.
    /// Pairs without a residual go last.
    pub(crate) fn finalize(mut self) -> Self {
        let k = self.pairs.len();
        let mut idx: Vec<usize> = (0..k).collect();
        idx.sort_by(|&a, &b| {
            let (pa, pb) = (&self.pairs[a], &self.pairs[b]);
            let by_res = match (pa.residual, pb.residual) {
                (Some(x), Some(y)) => x.total_cmp(&y),
                (Some(_), None) => std::cmp::Ordering::Less,
                (None, Some(_)) => std::cmp::Ordering::Greater,
                (None, None) => std::cmp::Ordering::Equal,
            };
            by_res.then_with(|| linalg::cmp_modulus_arg(&pa.lambda, &pb.lambda))
        });
        let pairs = idx.iter().map(|&i| self.pairs[i].clone()).collect();
        let n = self.vectors.nrows();
        let vectors = Mat::from_fn(n, k, |r, c| self.vectors[(r, idx[c])]);
        let kw = self.coeffs.nrows();
        let coeffs = Mat::from_fn(kw, k, |r, c| self.coeffs[(r, idx[c])]);
        let ordering = idx.iter().map(|&i| self.ordering[i]).collect();
        self.pairs = pairs;
        self.vectors = vectors;
        self.coeffs = coeffs;
        self.ordering = ordering;
        self
    }

    /// Attaches `𝔎 = log λ / (2π dt)` to every nonzero Ritz value.
    pub(crate) fn with_koopman(mut self, dt: Option<f64>) -> Result<Self> {
        if let Some(dt) = dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(DmdError::Domain(format!("time step must be positive, got {dt}")));
            }
            for p in &mut self.pairs {
                p.koopman = koopman_log_map(&[p.lambda], dt).ok().map(|v| v[0]);
            }
        }
        Ok(self)
    }
}

/// `B_k = Y V_k Σ_k⁻¹`, the data-driven image `A U_k`.
pub fn action_on_basis(y: MatRef<'_, c64>, v: MatRef<'_, c64>, sigma: &[f64]) -> Result<CMat> {
    if y.ncols() != v.nrows() || v.ncols() != sigma.len() {
        return Err(DmdError::Shape(format!(
            "Y is {}x{}, V is {}x{}, {} singular values",
            y.nrows(),
            y.ncols(),
            v.nrows(),
            v.ncols(),
            sigma.len()
        )));
    }
    if let Some(i) = sigma.iter().position(|&s| !(s > 0.0)) {
        return Err(DmdError::conditioning(format!("division by singular value {}", i + 1), sigma[i]));
    }
    let inv: Vec<f64> = sigma.iter().map(|s| 1.0 / s).collect();
    Ok(y * linalg::scale_cols(v, &inv))
}

/// Blocks of the triangular factor of `(U_k  B_k) = Q R`, rows rescaled so the
/// diagonal is real and nonnegative.
#[derive(Clone, Debug)]
pub struct QrStack {
    pub r11: CMat,
    pub r12: CMat,
    /// `k′ × k` with `k′ = min(n − k, k)`.
    pub r22: CMat,
    /// Unimodular diagonal of `R11` before rescaling.
    pub phi: Vec<c64>,
}

impl QrStack {
    pub fn k(&self) -> usize {
        self.r11.nrows()
    }

    /// `[R12 − λ R11; R22]`.
    pub fn shifted(&self, lambda: c64) -> CMat {
        let k = self.k();
        let kp = self.r22.nrows();
        Mat::from_fn(k + kp, k, |i, j| {
            if i < k {
                self.r12[(i, j)] - lambda * self.r11[(i, j)]
            } else {
                self.r22[(i - k, j)]
            }
        })
    }
}

fn unit_phase(z: c64) -> c64 {
    let a = z.norm();
    if a == 0.0 {
        linalg::creal(1.0)
    } else {
        z / a
    }
}

pub fn qr_stack(u: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Result<QrStack> {
    if u.nrows() != b.nrows() || u.ncols() != b.ncols() {
        return Err(DmdError::Shape(format!(
            "U is {}x{} but B is {}x{}",
            u.nrows(),
            u.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let (n, k) = (u.nrows(), u.ncols());
    let (_, mut r) = linalg::thin_qr(linalg::hstack(u, b).as_ref(), false);
    let rows = r.nrows();
    let mut phi = Vec::with_capacity(k);
    for i in 0..rows.min(2 * k) {
        let ph = unit_phase(r[(i, i)]);
        if i < k {
            phi.push(ph);
        }
        let c = ph.conj();
        for j in i..2 * k {
            r[(i, j)] *= c;
        }
        // the scaled diagonal is real up to rounding in the product
        r[(i, i)] = linalg::creal(r[(i, i)].re);
    }
    let kp = (n - k).min(k);
    Ok(QrStack {
        r11: r.submatrix(0, 0, k, k).to_owned(),
        r12: r.submatrix(0, k, k, k).to_owned(),
        r22: r.submatrix(k, k, kp, k).to_owned(),
        phi,
    })
}

/// The Rayleigh quotient `S_k = U_k* B_k = Φ* R12`.
///
/// The row rescaling in [`qr_stack`] already applied `Φ*`, so this is `R12`.
pub fn rayleigh_from_qr(stack: &QrStack) -> CMat {
    stack.r12.clone()
}

/// Eigenpairs of `S_k` lifted through `U_k`; eigenvectors have unit norm.
pub fn ritz_pairs(s: MatRef<'_, c64>, u: MatRef<'_, c64>) -> Result<(Vec<c64>, CMat, CMat)> {
    if s.nrows() != s.ncols() || u.ncols() != s.nrows() {
        return Err(DmdError::Shape("Rayleigh quotient must be k x k with U having k columns".into()));
    }
    let (lambdas, w) = linalg::eig(s)?;
    let z = u * &w;
    Ok((lambdas, w, z))
}

/// `r_i = ‖B_k w_i − λ_i U_k w_i‖` with unit `w_i`.
pub fn data_driven_residuals(
    b: MatRef<'_, c64>,
    u: MatRef<'_, c64>,
    w: MatRef<'_, c64>,
    lambdas: &[c64],
) -> Vec<f64> {
    let bw = b * w;
    let uw = u * w;
    (0..lambdas.len())
        .map(|i| {
            let nrm = w.col(i).norm_l2();
            let d = bw.col(i) - uw.col(i) * faer::Scale(lambdas[i]);
            if nrm > 0.0 {
                d.norm_l2() / nrm
            } else {
                d.norm_l2()
            }
        })
        .collect()
}

/// Smallest right singular pair of `[R12 − λR11; R22]`.
///
/// The returned `sigma_min` is recomputed as `‖R_λ w‖` rather than taken
/// from the SVD.
pub fn refine_ritz(stack: &QrStack, lambda: c64) -> Result<(Vec<c64>, f64)> {
    let r = stack.shifted(lambda);
    let (_, w) = linalg::smallest_right_singular(r.as_ref())?;
    let sigma = (&r * linalg::col_vec(&w)).norm_l2();
    Ok((w, sigma))
}

/// `ρ = w* S_k w`.
pub fn refined_rayleigh_value(s: MatRef<'_, c64>, w: &[c64]) -> c64 {
    let wv = linalg::col_vec(w);
    (wv.adjoint() * s * &wv)[(0, 0)]
}

/// Refines every listed shift, in parallel when a pool is available.
/// Output order follows the input order regardless of scheduling.
pub fn refine_all(stack: &QrStack, s: MatRef<'_, c64>, lambdas: &[c64]) -> Result<Vec<Refinement>> {
    lambdas
        .par_iter()
        .map(|&l| {
            let (w, sigma_min) = refine_ritz(stack, l)?;
            let rho = refined_rayleigh_value(s, &w);
            Ok(Refinement { w, sigma_min, rho })
        })
        .collect()
}

/// Continuous-time frequencies `(ln|λ| + i arg λ) / (2π dt)` on the principal branch.
pub fn koopman_log_map(lambdas: &[c64], dt: f64) -> Result<Vec<c64>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(DmdError::Domain(format!("time step must be positive, got {dt}")));
    }
    let scale = 1.0 / (std::f64::consts::TAU * dt);
    lambdas
        .iter()
        .map(|l| {
            if l.norm() == 0.0 {
                Err(DmdError::Domain("log of a zero eigenvalue".into()))
            } else {
                Ok(c64::new(l.norm().ln(), l.arg()) * scale)
            }
        })
        .collect()
}
