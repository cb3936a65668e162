//! Oracle harness: explicit operators with known spectra, trajectories, and
//! residual audits against the explicit operator.
//!
//! This is the only part of the crate that ever touches an explicit `A`.

pub mod suite;

use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{DmdError, Result};
use crate::linalg::{self, creal, czero, CMat, EPS};
use crate::ritz::RitzDecomposition;
use crate::rng::Stream;
use crate::snapshots::SequentialTrajectory;
use crate::weighted::InnerProduct;

/// How the oracle spectrum is drawn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpectrumSpec {
    /// Conjugate pairs with log-uniform moduli in `[r_min, r_max]`.
    Disc { r_min: f64, r_max: f64 },
    UnitCircle,
    /// Given values as `(re, im)`; a set not closed under conjugation yields a complex `A`.
    Explicit { values: Vec<(f64, f64)> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    PrescribedSpectrum,
    Normal,
    MUnitary,
    Raw,
}

#[derive(Clone, Debug)]
pub struct OracleOperator {
    pub a: CMat,
    pub eigenvalues: Vec<c64>,
    /// Eigenvector basis `S` with `A S = S diag(α)`, when known.
    pub eigenvectors: Option<CMat>,
    pub kind: OracleKind,
}

impl OracleOperator {
    /// `A = diag(values)` with `S = I`.
    pub fn diagonal(values: &[c64]) -> Self {
        let n = values.len();
        OracleOperator {
            a: Mat::from_fn(n, n, |i, j| if i == j { values[i] } else { czero() }),
            eigenvalues: values.to_vec(),
            eigenvectors: Some(Mat::identity(n, n)),
            kind: OracleKind::PrescribedSpectrum,
        }
    }

    /// An explicit operator whose spectrum is taken from the dense eigensolver.
    pub fn raw(a: CMat) -> Result<Self> {
        let eigenvalues = eigen_reference(a.as_ref())?;
        Ok(OracleOperator {
            a,
            eigenvalues,
            eigenvectors: None,
            kind: OracleKind::Raw,
        })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Distance from `z` to the nearest eigenvalue.
    pub fn spectral_distance(&self, z: c64) -> f64 {
        self.eigenvalues.iter().map(|a| (a - z).norm()).fold(f64::INFINITY, f64::min)
    }
}

fn gaussian(n: usize, m: usize, s: &mut Stream, complex: bool) -> CMat {
    Mat::from_fn(n, m, |_, _| {
        if complex {
            c64::new(s.normal(), s.normal())
        } else {
            creal(s.normal())
        }
    })
}

/// Haar-distributed orthogonal (or unitary) matrix.
fn random_unitary(n: usize, s: &mut Stream, complex: bool) -> CMat {
    let g = gaussian(n, n, s, complex);
    let (q, r) = linalg::thin_qr(g.as_ref(), true);
    let mut q = q.unwrap();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() == 0.0 { creal(1.0) } else { d / d.norm() };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    q
}

fn spectrum_values(n: usize, spec: &SpectrumSpec, s: &mut Stream) -> Result<Vec<c64>> {
    let draw_modulus = |s: &mut Stream, lo: f64, hi: f64| (s.uniform_in(lo.ln(), hi.ln())).exp();
    match spec {
        SpectrumSpec::Explicit { values } => {
            if values.len() != n {
                return Err(DmdError::Shape(format!("{} eigenvalues given for n = {n}", values.len())));
            }
            Ok(values.iter().map(|&(re, im)| c64::new(re, im)).collect())
        }
        SpectrumSpec::Disc { r_min, r_max } => {
            if !(*r_min > 0.0 && r_min <= r_max) {
                return Err(DmdError::Domain(format!("invalid disc radii [{r_min}, {r_max}]")));
            }
            let mut out = Vec::with_capacity(n);
            for _ in 0..n / 2 {
                let r = draw_modulus(s, *r_min, *r_max);
                let t = s.uniform_in(0.0, std::f64::consts::PI);
                let z = c64::from_polar(r, t);
                out.push(z);
                out.push(z.conj());
            }
            if n % 2 == 1 {
                let r = draw_modulus(s, *r_min, *r_max);
                out.push(creal(if s.uniform() < 0.5 { -r } else { r }));
            }
            Ok(out)
        }
        SpectrumSpec::UnitCircle => {
            let mut out = Vec::with_capacity(n);
            for _ in 0..n / 2 {
                let z = c64::from_polar(1.0, s.uniform_in(0.0, std::f64::consts::PI));
                out.push(z);
                out.push(z.conj());
            }
            if n % 2 == 1 {
                out.push(creal(if s.uniform() < 0.5 { -1.0 } else { 1.0 }));
            }
            Ok(out)
        }
    }
}

/// Splits a spectrum into real values and conjugate pairs `(a+ib, a−ib)` with
/// `b > 0`, or `None` when it is not closed under conjugation.
fn conjugate_blocks(values: &[c64]) -> Option<(Vec<f64>, Vec<c64>)> {
    let mut reals = Vec::new();
    let mut upper: Vec<c64> = Vec::new();
    let mut lower: Vec<c64> = Vec::new();
    for &v in values {
        if v.im == 0.0 {
            reals.push(v.re);
        } else if v.im > 0.0 {
            upper.push(v);
        } else {
            lower.push(v);
        }
    }
    if upper.len() != lower.len() {
        return None;
    }
    let mut used = vec![false; lower.len()];
    for u in &upper {
        let hit = lower
            .iter()
            .enumerate()
            .position(|(j, l)| !used[j] && (l.conj() - u).norm() <= 1e-14 * u.norm().max(1.0))?;
        used[hit] = true;
    }
    Some((reals, upper))
}

/// `A = S diag(α) S⁻¹` with `κ₂(S) = conditioning`.
///
/// Real spectra closed under conjugation give a real `A` built from 2×2
/// rotation-scaling blocks; `conditioning = 1` makes `A` normal.
pub fn make_oracle(n: usize, spec: &SpectrumSpec, conditioning: f64, seed: u64) -> Result<OracleOperator> {
    if n < 2 {
        return Err(DmdError::Shape(format!("oracle dimension must be at least 2, got {n}")));
    }
    if !(conditioning >= 1.0 && conditioning <= 1e14) {
        return Err(DmdError::Domain(format!(
            "infeasible conditioning target {conditioning}; must lie in [1, 1e14]"
        )));
    }
    linalg::init_backend();
    let root = Stream::new(seed);
    let mut spec_stream = root.split(1);
    let mut basis_stream = root.split(2);
    let values = spectrum_values(n, spec, &mut spec_stream)?;
    let blocks = conjugate_blocks(&values);
    let complex = blocks.is_none();
    let q1 = random_unitary(n, &mut basis_stream, complex);
    let q2 = random_unitary(n, &mut basis_stream, complex);
    let s: Vec<f64> = (0..n)
        .map(|i| conditioning.powf(-(i as f64) / (n - 1) as f64))
        .collect();
    let t = linalg::scale_cols(q1.as_ref(), &s) * q2.adjoint();
    let inv_s: Vec<f64> = s.iter().map(|v| 1.0 / v).collect();
    let t_inv = linalg::scale_cols(q2.as_ref(), &inv_s) * q1.adjoint();

    let (core, local_vecs, ordered) = match blocks {
        Some((reals, upper)) => {
            let mut core = Mat::<c64>::zeros(n, n);
            let mut vecs = Mat::<c64>::zeros(n, n);
            let mut ordered = Vec::with_capacity(n);
            let h = std::f64::consts::FRAC_1_SQRT_2;
            let mut at = 0;
            for z in &upper {
                let (a, b) = (z.re, z.im);
                core[(at, at)] = creal(a);
                core[(at, at + 1)] = creal(-b);
                core[(at + 1, at)] = creal(b);
                core[(at + 1, at + 1)] = creal(a);
                // [a −b; b a] (1, −i)ᵀ = (a + ib)(1, −i)ᵀ
                vecs[(at, at)] = creal(h);
                vecs[(at + 1, at)] = c64::new(0.0, -h);
                vecs[(at, at + 1)] = creal(h);
                vecs[(at + 1, at + 1)] = c64::new(0.0, h);
                ordered.push(*z);
                ordered.push(z.conj());
                at += 2;
            }
            for r in reals {
                core[(at, at)] = creal(r);
                vecs[(at, at)] = creal(1.0);
                ordered.push(creal(r));
                at += 1;
            }
            (core, vecs, ordered)
        }
        None => (
            Mat::from_fn(n, n, |i, j| if i == j { values[i] } else { czero() }),
            Mat::identity(n, n),
            values.clone(),
        ),
    };
    let a = &t * &core * &t_inv;
    let a = if complex { a } else { linalg::complexify(linalg::real_part(a.as_ref()).as_ref()) };
    Ok(OracleOperator {
        a,
        eigenvalues: ordered,
        eigenvectors: Some(&t * &local_vecs),
        kind: if conditioning == 1.0 {
            OracleKind::Normal
        } else {
            OracleKind::PrescribedSpectrum
        },
    })
}

/// An `M`-unitary operator `A*MA = M` with unit-circle spectrum.
pub fn m_unitary_oracle(weight: &InnerProduct, seed: u64) -> Result<OracleOperator> {
    let n = weight.dim();
    let base = make_oracle(n, &SpectrumSpec::UnitCircle, 1.0, seed)?;
    let to_inner = weight.to_inner(Mat::<c64>::identity(n, n).as_ref())?;
    let a = weight.lift((&base.a * &to_inner).as_ref())?;
    let vecs = match &base.eigenvectors {
        Some(s) => Some(weight.lift(s.as_ref())?),
        None => None,
    };
    Ok(OracleOperator {
        a,
        eigenvalues: base.eigenvalues,
        eigenvectors: vecs,
        kind: OracleKind::MUnitary,
    })
}

/// Real Gaussian start vector.
pub fn random_start(n: usize, seed: u64) -> CMat {
    let mut s = Stream::new(seed).split(3);
    gaussian(n, 1, &mut s, false)
}

/// `F = (f_1, A f_1, …, A^m f_1)`.
pub fn trajectory(a: MatRef<'_, c64>, f1: MatRef<'_, c64>, m: usize) -> Result<SequentialTrajectory> {
    let n = a.nrows();
    if a.ncols() != n || f1.nrows() != n || f1.ncols() != 1 {
        return Err(DmdError::Shape("trajectory needs square A and an n x 1 start".into()));
    }
    if m == 0 {
        return Err(DmdError::Shape("trajectory needs m >= 1".into()));
    }
    let mut f = Mat::<c64>::zeros(n, m + 1);
    f.col_mut(0).copy_from(f1.col(0));
    for j in 0..m {
        let next = a * f.col(j);
        f.col_mut(j + 1).copy_from(&next);
    }
    SequentialTrajectory::new(f)
}

/// Explicit residual of one Ritz pair and its ratio to the data-driven value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExplicitResidual {
    pub true_residual: Option<f64>,
    /// Data-driven residual over the explicit one; `None` for 0/0.
    pub eta: Option<f64>,
}

/// `‖A z − λ z‖` for every pair that carries a vector, in the norm of the
/// decomposition's weight.
pub fn explicit_residuals(a: MatRef<'_, c64>, dec: &RitzDecomposition) -> Result<Vec<ExplicitResidual>> {
    let modes = dec.modes()?;
    let az = a * &modes;
    let a_scale = a.norm_l2().max(f64::MIN_POSITIVE);
    let mut out = Vec::with_capacity(dec.k());
    let mut diff = Mat::<c64>::zeros(modes.nrows(), dec.k());
    for (j, p) in dec.pairs.iter().enumerate() {
        for i in 0..modes.nrows() {
            diff[(i, j)] = az[(i, j)] - p.lambda * modes[(i, j)];
        }
    }
    let (num, den) = match &dec.weight {
        None => (
            (0..dec.k()).map(|j| diff.col(j).norm_l2()).collect::<Vec<_>>(),
            (0..dec.k()).map(|j| modes.col(j).norm_l2()).collect::<Vec<_>>(),
        ),
        Some(w) => (w.col_norms(diff.as_ref())?, w.col_norms(modes.as_ref())?),
    };
    for (j, p) in dec.pairs.iter().enumerate() {
        if !p.has_vector || den[j] == 0.0 {
            out.push(ExplicitResidual {
                true_residual: None,
                eta: None,
            });
            continue;
        }
        let t = num[j] / den[j];
        let eta = match p.residual {
            Some(r) if t > EPS * a_scale => Some(r / t),
            _ => None,
        };
        out.push(ExplicitResidual {
            true_residual: Some(t),
            eta,
        });
    }
    Ok(out)
}

/// Full spectrum from the dense eigensolver, with each pair checked to
/// `‖A s − α s‖ ≤ 1e−8 ‖A‖`.
pub fn eigen_reference(a: MatRef<'_, c64>) -> Result<Vec<c64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(DmdError::Shape("reference spectrum needs a square matrix".into()));
    }
    if n > 2000 {
        return Err(DmdError::Unsupported(format!("dense reference limited to n <= 2000, got {n}")));
    }
    let (vals, vecs) = linalg::eig(a)?;
    let anorm = a.norm_l2();
    let r = a * &vecs;
    for j in 0..n {
        let res = (r.col(j) - vecs.col(j) * faer::Scale(vals[j])).norm_l2();
        if res > 1e-8 * anorm {
            return Err(DmdError::Backend(format!(
                "reference eigenpair {j} has residual {res:e} against |A| = {anorm:e}"
            )));
        }
    }
    Ok(vals)
}

/// One generated fixture as listed in `manifest.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub name: String,
    pub files: Vec<String>,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub spectrum: Option<SpectrumSpec>,
    pub conditioning: Option<f64>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureManifest {
    pub format: String,
    pub fixtures: Vec<FixtureEntry>,
}

impl FixtureManifest {
    pub fn from_json(text: &str) -> Result<Self> {
        let m: FixtureManifest =
            serde_json::from_str(text).map_err(|e| DmdError::Format(format!("bad fixture manifest: {e}")))?;
        if m.format != "DMM1" {
            return Err(DmdError::Format(format!("unsupported fixture format {:?}", m.format)));
        }
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}
