//! Elliptic inner products `(x, y)_M = y* M x` and the weighted pipelines.

use faer::{c64, Mat, MatRef};

use crate::error::{DmdError, Result};
use crate::linalg::{self, CMat};
use crate::ritz::{RitzDecomposition, Variant};
use crate::snapshots::SnapshotPair;
use crate::variants::{dmd, VariantConfig};

#[derive(Clone, Debug, PartialEq)]
pub enum Factor {
    Dense(CMat),
    /// Diagonal entries of `L`, strictly positive.
    Diagonal(Vec<f64>),
}

/// Which matrix the stored factor belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    /// `M = L L*`.
    M,
    /// `M⁻¹ = L L*`.
    MInverse,
}

/// A positive definite weight held through a factor `L`.
///
/// With orientation `M` the data map is `x ↦ L* x` and modes are lifted by
/// `L⁻*`. With orientation `M⁻¹` the data map is `x ↦ L⁻¹ x` and modes are
/// lifted by `L`. Either way `‖x‖_M` is the 2-norm of the mapped vector.
#[derive(Clone, Debug, PartialEq)]
pub struct InnerProduct {
    pub factor: Factor,
    pub orientation: Orientation,
}

impl InnerProduct {
    pub fn identity(n: usize) -> Self {
        InnerProduct {
            factor: Factor::Diagonal(vec![1.0; n]),
            orientation: Orientation::M,
        }
    }

    /// Diagonal weight from the entries of `M` (or of `M⁻¹`).
    pub fn diagonal(weights: &[f64], orientation: Orientation) -> Result<Self> {
        if let Some(i) = weights.iter().position(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(DmdError::InvalidWeight(format!(
                "diagonal weight {i} is {}, must be positive",
                weights[i]
            )));
        }
        Ok(InnerProduct {
            factor: Factor::Diagonal(weights.iter().map(|w| w.sqrt()).collect()),
            orientation,
        })
    }

    /// Accepts a caller-supplied factor; it need not be triangular.
    pub fn from_factor(l: CMat, orientation: Orientation) -> Result<Self> {
        if l.nrows() != l.ncols() {
            return Err(DmdError::Shape(format!("weight factor is {}x{}, must be square", l.nrows(), l.ncols())));
        }
        if !linalg::all_finite(l.as_ref()) {
            return Err(DmdError::InvalidWeight("weight factor has non-finite entries".into()));
        }
        Ok(InnerProduct {
            factor: Factor::Dense(l),
            orientation,
        })
    }

    /// Cholesky factor of a Hermitian positive definite Gram matrix.
    pub fn from_gram(g: MatRef<'_, c64>, orientation: Orientation) -> Result<Self> {
        linalg::init_backend();
        if g.nrows() != g.ncols() {
            return Err(DmdError::Shape(format!("weight is {}x{}, must be square", g.nrows(), g.ncols())));
        }
        let bad = |e: faer::linalg::cholesky::llt::factor::LltError| {
            DmdError::InvalidWeight(format!("weight is not positive definite: {e:?}"))
        };
        let l = if linalg::is_real(g) {
            let llt = linalg::real_part(g).llt(faer::Side::Lower).map_err(bad)?;
            linalg::complexify(llt.L())
        } else {
            g.llt(faer::Side::Lower).map_err(bad)?.L().to_owned()
        };
        Self::from_factor(l, orientation)
    }

    pub fn dim(&self) -> usize {
        match &self.factor {
            Factor::Dense(l) => l.nrows(),
            Factor::Diagonal(d) => d.len(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.factor, Factor::Diagonal(_))
    }

    fn check_rows(&self, a: MatRef<'_, c64>) -> Result<()> {
        if a.nrows() != self.dim() {
            return Err(DmdError::Shape(format!(
                "weight acts on dimension {} but the operand has {} rows",
                self.dim(),
                a.nrows()
            )));
        }
        Ok(())
    }

    fn checked(out: CMat, what: &str) -> Result<CMat> {
        if linalg::all_finite(out.as_ref()) {
            Ok(out)
        } else {
            Err(DmdError::InvalidWeight(format!("weight factor is singular ({what})")))
        }
    }

    /// `L* a`.
    fn mul_adj(&self, a: MatRef<'_, c64>) -> CMat {
        match &self.factor {
            Factor::Dense(l) => l.adjoint() * a,
            Factor::Diagonal(d) => Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * d[i]),
        }
    }

    /// `L a`.
    fn mul(&self, a: MatRef<'_, c64>) -> CMat {
        match &self.factor {
            Factor::Dense(l) => l * a,
            Factor::Diagonal(d) => Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * d[i]),
        }
    }

    /// `L⁻¹ a`.
    fn solve(&self, a: MatRef<'_, c64>) -> Result<CMat> {
        let out = match &self.factor {
            Factor::Dense(l) => linalg::solve(l.as_ref(), a),
            Factor::Diagonal(d) => Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] / d[i]),
        };
        Self::checked(out, "L^-1")
    }

    /// `L⁻* a`.
    fn solve_adj(&self, a: MatRef<'_, c64>) -> Result<CMat> {
        let out = match &self.factor {
            Factor::Dense(l) => linalg::solve(l.adjoint().to_owned().as_ref(), a),
            Factor::Diagonal(d) => Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] / d[i]),
        };
        Self::checked(out, "L^-*")
    }

    /// Maps data into coordinates where the weight is Euclidean.
    pub fn to_inner(&self, a: MatRef<'_, c64>) -> Result<CMat> {
        self.check_rows(a)?;
        match self.orientation {
            Orientation::M => Ok(self.mul_adj(a)),
            Orientation::MInverse => self.solve(a),
        }
    }

    /// Inverse of [`Self::to_inner`].
    pub fn lift(&self, a: MatRef<'_, c64>) -> Result<CMat> {
        self.check_rows(a)?;
        match self.orientation {
            Orientation::M => self.solve_adj(a),
            Orientation::MInverse => Ok(self.mul(a)),
        }
    }

    /// Adjoint of the lift: `L⁻¹ a` or `L* a`.
    fn lift_adj(&self, a: MatRef<'_, c64>) -> Result<CMat> {
        self.check_rows(a)?;
        match self.orientation {
            Orientation::M => self.solve(a),
            Orientation::MInverse => Ok(self.mul_adj(a)),
        }
    }

    /// Column-wise `‖·‖_M`.
    pub fn col_norms(&self, a: MatRef<'_, c64>) -> Result<Vec<f64>> {
        let t = self.to_inner(a)?;
        Ok((0..t.ncols()).map(|j| t.col(j).norm_l2()).collect())
    }

    /// The Gram matrix `M` formed explicitly.
    pub fn gram(&self) -> Result<CMat> {
        let n = self.dim();
        let i = Mat::<c64>::identity(n, n);
        let t = self.to_inner(i.as_ref())?;
        Ok(t.adjoint() * &t)
    }
}

/// DMD in the `M` inner product: Schmid's pipeline on the mapped data, with
/// residuals measured in `‖·‖_M` and modes lifted on demand.
pub fn weighted_dmd(pair: &SnapshotPair, m: &InnerProduct, config: &VariantConfig) -> Result<RitzDecomposition> {
    let tx = m.to_inner(pair.x.as_ref())?;
    let ty = m.to_inner(pair.y.as_ref())?;
    let mut inner = SnapshotPair::new(tx, ty)?;
    inner.provenance = pair.provenance;
    let cfg = VariantConfig {
        policy: Some(config.resolved_policy(pair.n(), pair.m())),
        ..config.clone()
    };
    let mut dec = dmd(&inner, &cfg)?;
    dec.variant = Variant::Weighted;
    dec.pod.weight = Some(m.clone());
    dec.weight = Some(m.clone());
    Ok(dec)
}

/// `X ↦ X K⁻*`: the right action of the snapshot-space weight `N = K K*`.
fn right_map(n_ip: &InnerProduct, a: MatRef<'_, c64>) -> Result<CMat> {
    let t = n_ip.lift_adj(a.adjoint().to_owned().as_ref())?;
    Ok(t.adjoint().to_owned())
}

/// Weighted DMD with a second weight `N` on the snapshot index space.
pub fn two_sided_weighted_dmd(
    pair: &SnapshotPair,
    m: &InnerProduct,
    n_ip: &InnerProduct,
    config: &VariantConfig,
) -> Result<RitzDecomposition> {
    if n_ip.dim() != pair.m() {
        return Err(DmdError::Shape(format!(
            "snapshot weight is {0}x{0} but there are {1} snapshot pairs",
            n_ip.dim(),
            pair.m()
        )));
    }
    let xk = right_map(n_ip, pair.x.as_ref())?;
    let yk = right_map(n_ip, pair.y.as_ref())?;
    let mut mapped = SnapshotPair::new(xk, yk)?;
    mapped.provenance = pair.provenance;
    let mut dec = weighted_dmd(&mapped, m, config)?;
    dec.variant = Variant::TwoSided;
    Ok(dec)
}

/// The `N`-orthonormal right factor `V̂ = K⁻* Ṽ` of a two-sided decomposition.
pub fn n_unitary_factor(dec: &RitzDecomposition, n_ip: &InnerProduct) -> Result<CMat> {
    n_ip.lift(dec.pod.v.as_ref())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KappaAssumption {
    /// `A` is taken to be M-normal, so `κ_M(S) = 1`.
    AssumedOne,
    Given(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub residual_m: f64,
    /// `κ₂(D M D)` with `D` scaling `M` to unit diagonal; an upper proxy for `μ₂(M)`.
    pub mu2_estimate: f64,
    pub kappa_m_s: f64,
    pub kappa_assumed: bool,
    pub bound: f64,
    /// `√μ₂ · κ · ‖A⁻¹ δA‖_M`, present when that quantity was supplied.
    pub relative_bound: Option<f64>,
}

/// Distance bound from a Ritz value to the spectrum under an `M`-norm residual.
pub fn weighted_bauer_fike(
    residual_m: f64,
    m: &InnerProduct,
    kappa: KappaAssumption,
    relative_residual: Option<f64>,
) -> Result<BoundReport> {
    if !(residual_m >= 0.0) {
        return Err(DmdError::Domain(format!("residual must be nonnegative, got {residual_m}")));
    }
    let mu2 = equilibrated_condition(m)?;
    let (kappa_m_s, kappa_assumed) = match kappa {
        KappaAssumption::AssumedOne => (1.0, true),
        KappaAssumption::Given(k) if k >= 1.0 => (k, false),
        KappaAssumption::Given(k) => {
            return Err(DmdError::Domain(format!("condition number must be at least 1, got {k}")))
        }
    };
    let factor = mu2.sqrt() * kappa_m_s;
    Ok(BoundReport {
        residual_m,
        mu2_estimate: mu2,
        kappa_m_s,
        kappa_assumed,
        bound: factor * residual_m,
        relative_bound: relative_residual.map(|r| factor * r),
    })
}

/// `κ₂(D M D)` with `D = diag(M_ii^{-1/2})`.
pub fn equilibrated_condition(m: &InnerProduct) -> Result<f64> {
    if m.is_diagonal() {
        return Ok(1.0);
    }
    let g = m.gram()?;
    let n = g.nrows();
    let mut d = vec![0.0; n];
    for i in 0..n {
        let gi = g[(i, i)].re;
        if !(gi > 0.0) {
            return Err(DmdError::InvalidWeight(format!("diagonal entry {i} of M is {gi}")));
        }
        d[i] = 1.0 / gi.sqrt();
    }
    let e = Mat::from_fn(n, n, |i, j| g[(i, j)] * (d[i] * d[j]));
    let ev: Vec<f64> = if linalg::is_real(e.as_ref()) {
        linalg::real_part(e.as_ref())
            .self_adjoint_eigenvalues(faer::Side::Lower)
            .map_err(|err| DmdError::Backend(format!("{err:?}")))?
    } else {
        e.self_adjoint_eigenvalues(faer::Side::Lower)
            .map_err(|err| DmdError::Backend(format!("{err:?}")))?
    };
    let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().copied().fold(0.0, f64::max);
    if !(lo > 0.0) {
        return Err(DmdError::InvalidWeight("equilibrated weight is not positive definite".into()));
    }
    Ok((hi / lo).max(1.0))
}
