//! Truncated SVD (POD) with numerical-rank policies.

use faer::{c64, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{DmdError, Result};
use crate::linalg::{self, CMat, EPS};
use crate::weighted::InnerProduct;

/// How the numerical rank `k` is read off the singular values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RankPolicy {
    /// `k = max{i : σ_i > ε σ_1}`.
    SpectralThreshold { epsilon: f64 },
    /// `k = max{i : Σ_{j≥i} σ_j² > ε² Σ_j σ_j²}`.
    EnergyThreshold { epsilon: f64 },
    Fixed { k: usize },
}

impl RankPolicy {
    pub fn spectral(epsilon: f64) -> Result<Self> {
        check_eps(epsilon)?;
        Ok(RankPolicy::SpectralThreshold { epsilon })
    }

    pub fn energy(epsilon: f64) -> Result<Self> {
        check_eps(epsilon)?;
        Ok(RankPolicy::EnergyThreshold { epsilon })
    }

    pub fn fixed(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(DmdError::Domain("fixed rank must be positive".into()));
        }
        Ok(RankPolicy::Fixed { k })
    }

    /// Spectral threshold with `ε = max(n, m+1)·u`.
    pub fn default_for(n: usize, m: usize) -> Self {
        RankPolicy::SpectralThreshold {
            epsilon: n.max(m + 1) as f64 * EPS,
        }
    }

    pub fn epsilon(&self) -> Option<f64> {
        match *self {
            RankPolicy::SpectralThreshold { epsilon } | RankPolicy::EnergyThreshold { epsilon } => Some(epsilon),
            RankPolicy::Fixed { .. } => None,
        }
    }

    /// Applies the policy to a descending singular spectrum.
    pub fn rank(&self, sigma: &[f64]) -> Result<usize> {
        let s1 = sigma.first().copied().unwrap_or(0.0);
        if s1 == 0.0 {
            return Err(DmdError::RankZero("all singular values are zero".into()));
        }
        match *self {
            RankPolicy::SpectralThreshold { epsilon } => Ok(sigma.iter().take_while(|&&s| s > epsilon * s1).count()),
            RankPolicy::EnergyThreshold { epsilon } => {
                let total: f64 = sigma.iter().map(|s| s * s).sum();
                let mut tail = total;
                let mut k = 0;
                for s in sigma {
                    if tail > epsilon * epsilon * total && *s > 0.0 {
                        k += 1;
                    } else {
                        break;
                    }
                    tail -= s * s;
                }
                Ok(k)
            }
            RankPolicy::Fixed { k } => {
                if k > sigma.len() {
                    return Err(DmdError::Shape(format!(
                        "fixed rank {k} exceeds min(n, m) = {}",
                        sigma.len()
                    )));
                }
                let sk = sigma[k - 1];
                if !(sk > 0.0) {
                    return Err(DmdError::conditioning(
                        format!("fixed rank {k} hits a zero singular value; sigma_k/sigma_1"),
                        sk / s1,
                    ));
                }
                Ok(k)
            }
        }
    }
}

fn check_eps(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(DmdError::Domain(format!("rank threshold must lie in (0, 1), got {epsilon}")));
    }
    Ok(())
}

/// Leading singular triplets of a snapshot matrix.
///
/// For a weighted basis `u` holds `Ũ_k`, the orthonormal factor of the
/// transformed data; the M-orthonormal modes are `weight.lift(Ũ_k)`.
#[derive(Clone, Debug)]
pub struct PodBasis {
    pub u: CMat,
    pub sigma: Vec<f64>,
    pub v: CMat,
    pub k: usize,
    pub sigma_all: Vec<f64>,
    pub policy: RankPolicy,
    pub weight: Option<InnerProduct>,
}

impl PodBasis {
    /// The basis in ambient coordinates, lifting through the weight factor when present.
    pub fn basis(&self) -> Result<CMat> {
        match &self.weight {
            None => Ok(self.u.clone()),
            Some(w) => w.lift(self.u.as_ref()),
        }
    }
}

pub fn truncated_svd(x: MatRef<'_, c64>, policy: RankPolicy) -> Result<PodBasis> {
    let svd = linalg::thin_svd(x)?;
    if svd.s.first().copied().unwrap_or(0.0) == 0.0 {
        return Err(DmdError::RankZero("snapshot matrix X is zero".into()));
    }
    let k = policy.rank(&svd.s)?;
    if k == 0 {
        return Err(DmdError::RankZero("rank policy retained no singular values".into()));
    }
    Ok(PodBasis {
        u: svd.u.subcols(0, k).to_owned(),
        sigma: svd.s[..k].to_vec(),
        v: svd.v.subcols(0, k).to_owned(),
        k,
        sigma_all: svd.s,
        policy,
        weight: None,
    })
}

/// POD in the inner product `(x, y)_M = y* M x`.
pub fn weighted_pod(x: MatRef<'_, c64>, m: &InnerProduct, policy: RankPolicy) -> Result<PodBasis> {
    if m.dim() != x.nrows() {
        return Err(DmdError::Shape(format!(
            "weight is {0}x{0} but snapshots have {1} rows",
            m.dim(),
            x.nrows()
        )));
    }
    let tx = m.to_inner(x)?;
    let mut pod = truncated_svd(tx.as_ref(), policy)?;
    pod.weight = Some(m.clone());
    Ok(pod)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::creal;
    use crate::rng::Stream;
    use faer::Mat;

    fn random(n: usize, m: usize, seed: u64) -> CMat {
        let mut s = Stream::new(seed);
        Mat::from_fn(n, m, |_, _| creal(s.normal()))
    }

    #[test]
    fn forced_truncation() {
        let x = Mat::from_fn(2, 2, |i, j| creal(if i == j { [1.0, 1e-20][i] } else { 0.0 }));
        let p = truncated_svd(x.as_ref(), RankPolicy::spectral(1e-8).unwrap()).unwrap();
        assert_eq!(p.k, 1);
        assert_eq!(p.sigma, vec![1.0]);
        assert_eq!(p.sigma_all.len(), 2);
    }

    #[test]
    fn isometry_keeps_everything() {
        let (q, _) = linalg::thin_qr(random(7, 4, 1).as_ref(), true);
        let p = truncated_svd(q.unwrap().as_ref(), RankPolicy::default_for(7, 4)).unwrap();
        assert_eq!(p.k, 4);
        for s in &p.sigma {
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn threshold_is_strict() {
        let sigma = [1.0, 0.5, 0.25];
        assert_eq!(RankPolicy::spectral(0.5).unwrap().rank(&sigma).unwrap(), 1);
        assert_eq!(RankPolicy::spectral(0.49).unwrap().rank(&sigma).unwrap(), 2);
    }

    #[test]
    fn energy_policy() {
        let sigma = [3.0, 4.0f64.sqrt(), 1e-3];
        // tails: 9+4+1e-6, 4+1e-6, 1e-6 against eps² total
        let total: f64 = 13.0 + 1e-6;
        let eps = (2.0 / total).sqrt();
        assert_eq!(RankPolicy::energy(eps).unwrap().rank(&sigma).unwrap(), 2);
        assert_eq!(RankPolicy::energy(1e-4).unwrap().rank(&sigma).unwrap(), 3);
    }

    #[test]
    fn policy_validation() {
        assert!(RankPolicy::spectral(0.0).is_err());
        assert!(RankPolicy::spectral(1.0).is_err());
        assert!(RankPolicy::fixed(0).is_err());
        let z = Mat::<c64>::zeros(3, 2);
        assert!(matches!(
            truncated_svd(z.as_ref(), RankPolicy::default_for(3, 2)),
            Err(DmdError::RankZero(_))
        ));
    }

    #[test]
    fn eckart_young() {
        let x = random(8, 5, 11);
        let full = truncated_svd(x.as_ref(), RankPolicy::fixed(5).unwrap()).unwrap();
        for k in 1..5 {
            let p = truncated_svd(x.as_ref(), RankPolicy::fixed(k).unwrap()).unwrap();
            let approx = linalg::scale_cols(p.u.as_ref(), &p.sigma) * p.v.adjoint();
            let err = linalg::norm2((&x - &approx).as_ref()).unwrap();
            assert!((err - full.sigma_all[k]).abs() <= 1e-12, "k={k}");
        }
    }

    #[test]
    fn orthonormal_factors() {
        let x = random(40, 12, 3);
        let p = truncated_svd(x.as_ref(), RankPolicy::default_for(40, 12)).unwrap();
        let g = p.u.adjoint() * &p.u - Mat::<c64>::identity(p.k, p.k);
        assert!(g.norm_l2() <= 1e-12 * (p.k as f64).sqrt());
    }

    // Rank from the direct SVD agrees with an independent scan of eig(XᵀX).
    #[test]
    fn rank_matches_gram_eigenvalues() {
        let mut s = Stream::new(4);
        let x = Mat::from_fn(30, 8, |_, j| creal(s.normal() * 10f64.powi(-(j as i32))));
        let policy = RankPolicy::spectral(1e-5).unwrap();
        let p = truncated_svd(x.as_ref(), policy).unwrap();
        let xr = linalg::real_part(x.as_ref());
        let gram = xr.transpose() * &xr;
        let mut ev = gram.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
        ev.sort_by(|a, b| b.total_cmp(a));
        let sv: Vec<f64> = ev.iter().map(|e| e.max(0.0).sqrt()).collect();
        let brute = sv.iter().filter(|&&v| v > 1e-5 * sv[0]).count();
        assert_eq!(p.k, brute);
    }
}
