//! End-to-end decomposition pipelines.

use faer::{c64, Mat, MatRef};

use crate::error::{DmdError, Result};
use crate::linalg::{self, CMat, EPS};
use crate::pod::{truncated_svd, PodBasis, RankPolicy};
use crate::ritz::{
    action_on_basis, data_driven_residuals, qr_stack, rayleigh_from_qr, refine_all, ritz_pairs, Refinement,
    RitzDecomposition, RitzPair, Variant,
};
use crate::snapshots::{
    companion_decomposition, scale_columns, Provenance, SequentialTrajectory, SnapshotPair,
};

/// Which Ritz pairs get a refined vector.
#[derive(Clone, Debug, PartialEq)]
pub enum Refine {
    None,
    All,
    Selected(Selection),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Selection {
    /// Refine pairs whose unrefined residual is at most the cap.
    ResidualCap(f64),
    /// Refine Ritz values inside a closed disk.
    Disk { center: c64, radius: f64 },
}

impl Selection {
    fn accepts(&self, lambda: c64, residual: f64) -> bool {
        match *self {
            Selection::ResidualCap(cap) => residual <= cap,
            Selection::Disk { center, radius } => (lambda - center).norm() <= radius,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Compression {
    /// Compress sequential data when `n > 4(m+1)`.
    Auto,
    Always,
    Never,
}

#[derive(Clone, Debug)]
pub struct VariantConfig {
    /// `None` picks the default spectral threshold for the input size.
    pub policy: Option<RankPolicy>,
    pub scale: bool,
    pub refine: Refine,
    pub dt: Option<f64>,
    pub compress: Compression,
}

impl Default for VariantConfig {
    fn default() -> Self {
        VariantConfig {
            policy: None,
            scale: true,
            refine: Refine::All,
            dt: None,
            compress: Compression::Auto,
        }
    }
}

impl VariantConfig {
    pub fn resolved_policy(&self, n: usize, m: usize) -> RankPolicy {
        self.policy.unwrap_or_else(|| RankPolicy::default_for(n, m))
    }
}

/// Optionally column-scaled copy of the pair.
fn prepared(pair: &SnapshotPair, scale: bool) -> SnapshotPair {
    if scale {
        scale_columns(pair).0
    } else {
        pair.clone()
    }
}

/// `S_k = ((U_k* Y) V_k) Σ_k⁻¹`.
fn schmid_quotient(y: MatRef<'_, c64>, pod: &PodBasis) -> CMat {
    let inv: Vec<f64> = pod.sigma.iter().map(|s| 1.0 / s).collect();
    let uy = pod.u.adjoint() * y;
    linalg::scale_cols((&uy * &pod.v).as_ref(), &inv)
}

fn plain_pairs(lambdas: &[c64], residuals: Option<&[f64]>) -> Vec<RitzPair> {
    lambdas
        .iter()
        .enumerate()
        .map(|(i, &lambda)| RitzPair {
            lambda,
            residual: residuals.map(|r| r[i]),
            refined: None,
            koopman: None,
            has_vector: true,
        })
        .collect()
}

fn assemble(
    variant: Variant,
    pairs: Vec<RitzPair>,
    vectors: CMat,
    coeffs: CMat,
    pod: PodBasis,
    n: usize,
    m: usize,
    scaled: bool,
) -> RitzDecomposition {
    let k = pairs.len();
    RitzDecomposition {
        variant,
        pairs,
        vectors,
        coeffs,
        ordering: (0..k).collect(),
        weight: pod.weight.clone(),
        pod,
        n,
        m,
        scaled,
    }
}

/// Schmid's DMD with data-driven residuals attached.
pub fn dmd(pair: &SnapshotPair, config: &VariantConfig) -> Result<RitzDecomposition> {
    let policy = config.resolved_policy(pair.n(), pair.m());
    let p = prepared(pair, config.scale);
    let pod = truncated_svd(p.x.as_ref(), policy)?;
    let b = action_on_basis(p.y.as_ref(), pod.v.as_ref(), &pod.sigma)?;
    let s = schmid_quotient(p.y.as_ref(), &pod);
    let (lambdas, w, z) = ritz_pairs(s.as_ref(), pod.u.as_ref())?;
    let res = data_driven_residuals(b.as_ref(), pod.u.as_ref(), w.as_ref(), &lambdas);
    let pairs = plain_pairs(&lambdas, Some(&res));
    assemble(Variant::Dmd, pairs, z, w, pod, pair.n(), pair.m(), config.scale)
        .finalize()
        .with_koopman(config.dt)
}

fn should_compress(pair: &SnapshotPair, mode: Compression) -> bool {
    match mode {
        Compression::Never => false,
        Compression::Always => pair.provenance == Provenance::Sequential,
        Compression::Auto => pair.provenance == Provenance::Sequential && pair.n() > 4 * (pair.m() + 1),
    }
}

/// Refined Rayleigh–Ritz DMD.
///
/// Sequential pairs are routed through the QR-compressed pipeline according
/// to `config.compress`.
pub fn ddmd_rrr(pair: &SnapshotPair, config: &VariantConfig) -> Result<RitzDecomposition> {
    if should_compress(pair, config.compress) {
        return ddmd_rrr_compressed(&CompressedInput::Pair(pair), config);
    }
    let policy = config.resolved_policy(pair.n(), pair.m());
    let p = prepared(pair, config.scale);
    let pod = truncated_svd(p.x.as_ref(), policy)?;
    let mut dec = rrr_from_basis(p.y.as_ref(), pod, &config.refine)?;
    dec.n = pair.n();
    dec.m = pair.m();
    dec.scaled = config.scale;
    dec.with_koopman(config.dt)
}

/// The refinement stage on a precomputed POD basis of (possibly scaled) `X`.
///
/// `y` must carry the same column scaling as the data the basis came from.
pub fn rrr_from_basis(y: MatRef<'_, c64>, pod: PodBasis, refine: &Refine) -> Result<RitzDecomposition> {
    let b = action_on_basis(y, pod.v.as_ref(), &pod.sigma)?;
    let stack = qr_stack(pod.u.as_ref(), b.as_ref())?;
    let s = rayleigh_from_qr(&stack);
    let k = pod.k;

    let (lambdas, mut w, mut residuals, mut refined): (Vec<c64>, CMat, Vec<f64>, Vec<Option<Refinement>>);
    match refine {
        Refine::All => {
            lambdas = linalg::eigvals(s.as_ref())?;
            let refs = refine_all(&stack, s.as_ref(), &lambdas)?;
            w = Mat::from_fn(k, k, |i, j| refs[j].w[i]);
            residuals = refs.iter().map(|r| r.sigma_min).collect();
            refined = refs.into_iter().map(Some).collect();
        }
        Refine::None | Refine::Selected(_) => {
            let (l, wv) = linalg::eig(s.as_ref())?;
            residuals = data_driven_residuals(b.as_ref(), pod.u.as_ref(), wv.as_ref(), &l);
            lambdas = l;
            w = wv;
            refined = vec![None; k];
        }
    }
    if let Refine::Selected(sel) = refine {
        let chosen: Vec<usize> = (0..k).filter(|&i| sel.accepts(lambdas[i], residuals[i])).collect();
        let shifts: Vec<c64> = chosen.iter().map(|&i| lambdas[i]).collect();
        let refs = refine_all(&stack, s.as_ref(), &shifts)?;
        for (&i, r) in chosen.iter().zip(refs) {
            for row in 0..k {
                w[(row, i)] = r.w[row];
            }
            residuals[i] = r.sigma_min;
            refined[i] = Some(r);
        }
    }
    let z = &pod.u * &w;
    let pairs = lambdas
        .iter()
        .enumerate()
        .map(|(i, &lambda)| RitzPair {
            lambda,
            residual: Some(residuals[i]),
            refined: refined[i].clone(),
            koopman: None,
            has_vector: true,
        })
        .collect();
    let n = pod.u.nrows();
    let m = pod.v.nrows();
    Ok(assemble(Variant::Rrr, pairs, z, w, pod, n, m, false).finalize())
}

/// Input to the compressed pipeline.
pub enum CompressedInput<'a> {
    Trajectory(&'a SequentialTrajectory),
    Pair(&'a SnapshotPair),
}

/// Refined DMD on the triangular factor of a thin QR of the data.
///
/// Sequential data uses `F = Q R_f` with `R_x`, `R_y` the leading and
/// trailing `m` columns of `R_f`; general pairs use the QR of `(X Y)`.
pub fn ddmd_rrr_compressed(input: &CompressedInput<'_>, config: &VariantConfig) -> Result<RitzDecomposition> {
    let (q, rx, ry, n, m) = match input {
        CompressedInput::Trajectory(f) => {
            let (q, r) = linalg::thin_qr(f.matrix(), true);
            let m = f.m();
            let rx = r.subcols(0, m).to_owned();
            let ry = r.subcols(1, m).to_owned();
            (q.unwrap(), rx, ry, f.n(), m)
        }
        CompressedInput::Pair(p) if p.provenance == Provenance::Sequential => {
            let f = reassemble(p);
            let (q, r) = linalg::thin_qr(f.as_ref(), true);
            let m = p.m();
            let rx = r.subcols(0, m).to_owned();
            let ry = r.subcols(1, m).to_owned();
            (q.unwrap(), rx, ry, p.n(), m)
        }
        CompressedInput::Pair(p) => {
            let stacked = linalg::hstack(p.x.as_ref(), p.y.as_ref());
            let (q, r) = linalg::thin_qr(stacked.as_ref(), true);
            let m = p.m();
            let rx = r.subcols(0, m).to_owned();
            let ry = r.subcols(m, m).to_owned();
            (q.unwrap(), rx, ry, p.n(), m)
        }
    };
    let policy = config.resolved_policy(n, m);
    let inner_cfg = VariantConfig {
        policy: Some(policy),
        compress: Compression::Never,
        dt: None,
        ..config.clone()
    };
    let inner = SnapshotPair::new(rx, ry)?;
    let mut dec = ddmd_rrr(&inner, &inner_cfg)?;
    dec.vectors = &q * &dec.vectors;
    dec.variant = Variant::RrrCompressed;
    dec.n = n;
    dec.m = m;
    dec.with_koopman(config.dt)
}

/// `F = (X, Y(:, m))` for a sequential pair.
fn reassemble(p: &SnapshotPair) -> CMat {
    let (n, m) = (p.n(), p.m());
    Mat::from_fn(n, m + 1, |i, j| if j < m { p.x[(i, j)] } else { p.y[(i, m - 1)] })
}

/// Exact DMD: the Ritz values of [`dmd`] with vectors `Y V Σ⁻¹ W Λ⁻¹` taken
/// from the range of `Y`.
///
/// Residuals are not data-computable for these vectors and are left empty.
/// Vectors for Ritz values with `|λ| ≤ 10³·u·‖S_k‖₂` are flagged absent.
pub fn exact_dmd(pair: &SnapshotPair, config: &VariantConfig) -> Result<RitzDecomposition> {
    let policy = config.resolved_policy(pair.n(), pair.m());
    let p = prepared(pair, config.scale);
    let pod = truncated_svd(p.x.as_ref(), policy)?;
    let b = action_on_basis(p.y.as_ref(), pod.v.as_ref(), &pod.sigma)?;
    let s = schmid_quotient(p.y.as_ref(), &pod);
    let (lambdas, w) = linalg::eig(s.as_ref())?;
    let guard = 1e3 * EPS * linalg::norm2(s.as_ref())?;
    let bw = &b * &w;
    let n = pair.n();
    let k = lambdas.len();
    let mut z = Mat::<c64>::zeros(n, k);
    let mut pairs = plain_pairs(&lambdas, None);
    for j in 0..k {
        if lambdas[j].norm() <= guard {
            pairs[j].has_vector = false;
            continue;
        }
        let col = bw.col(j) * faer::Scale(lambdas[j].inv());
        let nrm = col.norm_l2();
        if nrm == 0.0 {
            pairs[j].has_vector = false;
            continue;
        }
        for i in 0..n {
            z[(i, j)] = col[i] / nrm;
        }
    }
    if pairs.iter().all(|p| !p.has_vector) {
        return Err(DmdError::Domain("every Ritz value is zero; exact DMD has no vectors".into()));
    }
    assemble(Variant::Exact, pairs, z, w, pod, n, pair.m(), config.scale)
        .finalize()
        .with_koopman(config.dt)
}

/// Computable factors of `‖A y − λ y‖ = |η_m|·‖A r_{m+1}‖` for an exact DMD vector `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct SequentialDiagnostic {
    /// Last coefficient of `y` in the basis of the columns of `Y`.
    pub eta_m: Option<c64>,
    pub r_norm: f64,
    /// `‖Y η − y‖ / ‖y‖` for the coefficient solve.
    pub solve_residual: Option<f64>,
}

pub fn exact_dmd_sequential_diagnostic(
    pair: &SnapshotPair,
    dec: &RitzDecomposition,
) -> Result<Vec<SequentialDiagnostic>> {
    if pair.provenance != Provenance::Sequential {
        return Err(DmdError::Unsupported("the sequential diagnostic needs sequential snapshots".into()));
    }
    if dec.variant != Variant::Exact {
        return Err(DmdError::Unsupported(format!(
            "the sequential diagnostic applies to exact DMD, got {}",
            dec.variant.name()
        )));
    }
    let f = SequentialTrajectory::new(reassemble(pair))?;
    let comp = companion_decomposition(&f)?;
    let m = pair.m();
    let modes = dec.modes()?;
    let eta = linalg::lstsq(pair.y.as_ref(), modes.as_ref());
    let recon = &pair.y * &eta;
    Ok(dec
        .pairs
        .iter()
        .enumerate()
        .map(|(j, p)| {
            if !p.has_vector {
                return SequentialDiagnostic {
                    eta_m: None,
                    r_norm: comp.r_norm,
                    solve_residual: None,
                };
            }
            let yn = modes.col(j).norm_l2();
            let diff = (recon.col(j) - modes.col(j)).norm_l2();
            SequentialDiagnostic {
                eta_m: Some(eta[(m - 1, j)]),
                r_norm: comp.r_norm,
                solve_residual: Some(diff / yn),
            }
        })
        .collect())
}

/// Eigenvalues of `M_k = S_k S_back⁻¹` and their signed square roots.
#[derive(Clone, Debug, PartialEq)]
pub struct FbSpectrum {
    pub omegas: Vec<c64>,
    pub lambdas: Vec<c64>,
    /// `w* S_k w` for the vector used to choose each sign.
    pub sign_evidence: Vec<c64>,
}

fn principal_sqrt(z: c64) -> c64 {
    z.sqrt()
}

/// Groups indices whose values agree within `tol`.
fn clusters(values: &[c64], tol: f64) -> Vec<Vec<usize>> {
    let mut seen = vec![false; values.len()];
    let mut out = Vec::new();
    for i in 0..values.len() {
        if seen[i] {
            continue;
        }
        let mut group = vec![i];
        seen[i] = true;
        let mut head = 0;
        while head < group.len() {
            let a = values[group[head]];
            for j in 0..values.len() {
                if !seen[j] && (values[j] - a).norm() <= tol {
                    seen[j] = true;
                    group.push(j);
                }
            }
            head += 1;
        }
        out.push(group);
    }
    out
}

/// Matrix-root-free forward–backward DMD.
///
/// The backward quotient is the DMD of the swapped pair after projecting
/// both matrices onto the forward POD basis, with the rank pinned to the
/// forward `k`. When several `ω` coincide (as for `±iβ`), the sign evidence
/// is taken from the Rayleigh quotient of `S_k` restricted to their common
/// eigenspace.
pub fn fb_dmd_mrf(pair: &SnapshotPair, config: &VariantConfig) -> Result<(RitzDecomposition, FbSpectrum)> {
    let policy = config.resolved_policy(pair.n(), pair.m());
    let p = prepared(pair, config.scale);
    let pod = truncated_svd(p.x.as_ref(), policy)?;
    let k = pod.k;
    let b = action_on_basis(p.y.as_ref(), pod.v.as_ref(), &pod.sigma)?;
    let s = schmid_quotient(p.y.as_ref(), &pod);

    let (s_back, s_forward) = rayon::join(
        || backward_quotient(&pod, p.x.as_ref(), p.y.as_ref(), policy),
        || s.clone(),
    );
    let s_back = s_back?;
    // M S_back = S  <=>  S_back* M* = S*
    let m_adj = linalg::solve(s_back.adjoint().to_owned().as_ref(), s_forward.adjoint().to_owned().as_ref());
    let mk = m_adj.adjoint().to_owned();
    if !linalg::all_finite(mk.as_ref()) {
        return Err(DmdError::conditioning("S_back solve produced non-finite values; sigma_min(S_back)", 0.0));
    }
    let (omegas, mut w) = linalg::eig(mk.as_ref())?;

    let scale = omegas.iter().map(|o| o.norm()).fold(0.0, f64::max);
    let tol = 1e-8 * scale.max(f64::MIN_POSITIVE);
    let mut lambdas = vec![c64::new(0.0, 0.0); k];
    let mut evidence = vec![c64::new(0.0, 0.0); k];
    for group in clusters(&omegas, tol) {
        if group.len() == 1 {
            let i = group[0];
            let e = crate::ritz::refined_rayleigh_value(s.as_ref(), &linalg::column(w.as_ref(), i));
            let r = principal_sqrt(omegas[i]);
            lambdas[i] = if (r - e).norm() <= (-r - e).norm() { r } else { -r };
            evidence[i] = e;
            continue;
        }
        let wc = Mat::from_fn(k, group.len(), |r, c| w[(r, group[c])]);
        let (qc, _) = linalg::thin_qr(wc.as_ref(), true);
        let qc = qc.unwrap();
        let sc = qc.adjoint() * &s * &qc;
        let (mu, vc) = linalg::eig(sc.as_ref())?;
        let newvecs = &qc * &vc;
        // pair each restricted eigenvalue with the closest ω of the cluster
        let mut free: Vec<usize> = group.clone();
        for (c, &target) in mu.iter().enumerate() {
            let sq = target * target;
            let (pos, _) = free
                .iter()
                .enumerate()
                .min_by(|a, b| (omegas[*a.1] - sq).norm().total_cmp(&(omegas[*b.1] - sq).norm()))
                .unwrap();
            let i = free.remove(pos);
            let r = principal_sqrt(omegas[i]);
            lambdas[i] = if (r - target).norm() <= (-r - target).norm() { r } else { -r };
            evidence[i] = target;
            let nrm = newvecs.col(c).norm_l2();
            for row in 0..k {
                w[(row, i)] = newvecs[(row, c)] / nrm;
            }
        }
    }

    let z = &pod.u * &w;
    let res = data_driven_residuals(b.as_ref(), pod.u.as_ref(), w.as_ref(), &lambdas);
    let pairs = plain_pairs(&lambdas, Some(&res));
    let spectrum = FbSpectrum {
        omegas: omegas.clone(),
        lambdas: lambdas.clone(),
        sign_evidence: evidence,
    };
    let dec = assemble(Variant::Fb, pairs, z, w, pod, pair.n(), pair.m(), config.scale)
        .finalize()
        .with_koopman(config.dt)?;
    // keep the spectrum aligned with the sorted pairs
    let ord = &dec.ordering;
    let spectrum = FbSpectrum {
        omegas: ord.iter().map(|&i| spectrum.omegas[i]).collect(),
        lambdas: ord.iter().map(|&i| spectrum.lambdas[i]).collect(),
        sign_evidence: ord.iter().map(|&i| spectrum.sign_evidence[i]).collect(),
    };
    Ok((dec, spectrum))
}

/// `S_back` in the coordinates of the forward basis.
fn backward_quotient(pod: &PodBasis, x: MatRef<'_, c64>, y: MatRef<'_, c64>, policy: RankPolicy) -> Result<CMat> {
    let k = pod.k;
    let xt = pod.u.adjoint() * x;
    let yt = pod.u.adjoint() * y;
    let svd = linalg::thin_svd(yt.as_ref())?;
    let s1 = svd.s.first().copied().unwrap_or(0.0);
    let threshold = policy.epsilon().unwrap_or(k.max(y.ncols()) as f64 * EPS);
    if svd.s.len() < k || s1 == 0.0 || !(svd.s[k - 1] > threshold * s1) {
        let sk = svd.s.get(k - 1).copied().unwrap_or(0.0);
        return Err(DmdError::conditioning(
            format!("S_back is singular: the backward data cannot support rank {k}; sigma_min(S_back)/sigma_1"),
            if s1 > 0.0 { sk / s1 } else { 0.0 },
        ));
    }
    let ub = svd.u.subcols(0, k).to_owned();
    let vb = svd.v.subcols(0, k);
    let inv: Vec<f64> = svd.s[..k].iter().map(|s| 1.0 / s).collect();
    let sb = ub.adjoint() * linalg::scale_cols((&xt * vb).as_ref(), &inv);
    let s_back = &ub * &sb * ub.adjoint();
    let sv = linalg::thin_svd(s_back.as_ref())?;
    let smin = *sv.s.last().unwrap();
    if !(smin > k as f64 * EPS * sv.s[0]) {
        return Err(DmdError::conditioning("S_back is numerically singular; sigma_min(S_back)", smin));
    }
    Ok(s_back)
}

/// Keeps pairs with residual at most `cap`, preserving order.
///
/// Pairs without a residual survive only an infinite cap.
pub fn select_pairs(dec: &RitzDecomposition, cap: f64) -> RitzDecomposition {
    let keep: Vec<usize> = (0..dec.k())
        .filter(|&i| match dec.pairs[i].residual {
            Some(r) => r <= cap,
            None => cap == f64::INFINITY,
        })
        .collect();
    let n = dec.vectors.nrows();
    let kw = dec.coeffs.nrows();
    RitzDecomposition {
        variant: dec.variant,
        pairs: keep.iter().map(|&i| dec.pairs[i].clone()).collect(),
        vectors: Mat::from_fn(n, keep.len(), |r, c| dec.vectors[(r, keep[c])]),
        coeffs: Mat::from_fn(kw, keep.len(), |r, c| dec.coeffs[(r, keep[c])]),
        ordering: keep.iter().map(|&i| dec.ordering[i]).collect(),
        pod: dec.pod.clone(),
        weight: dec.weight.clone(),
        n: dec.n,
        m: dec.m,
        scaled: dec.scaled,
    }
}
