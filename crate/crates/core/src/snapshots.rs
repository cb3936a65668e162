//! Snapshot matrices, column scaling and the companion decomposition.

use faer::{c64, Mat, MatRef};

use crate::error::{DmdError, Result};
use crate::linalg::{self, CMat, EPS};

/// Columns `f_1 .. f_{m+1}` of a trajectory `f_{i+1} = A f_i`.
#[derive(Clone, Debug)]
pub struct SequentialTrajectory {
    f: CMat,
}

impl SequentialTrajectory {
    pub fn new(f: CMat) -> Result<Self> {
        if f.ncols() < 2 {
            return Err(DmdError::Shape(format!(
                "a trajectory needs at least 2 snapshots, got {}",
                f.ncols()
            )));
        }
        if f.nrows() == 0 {
            return Err(DmdError::Shape("snapshots have zero length".into()));
        }
        if !linalg::all_finite(f.as_ref()) {
            return Err(DmdError::Data("trajectory contains non-finite entries".into()));
        }
        Ok(SequentialTrajectory { f })
    }

    pub fn from_real(f: MatRef<'_, f64>) -> Result<Self> {
        Self::new(linalg::complexify(f))
    }

    pub fn matrix(&self) -> MatRef<'_, c64> {
        self.f.as_ref()
    }

    pub fn into_matrix(self) -> CMat {
        self.f
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.f.nrows()
    }

    /// Number of snapshot pairs.
    pub fn m(&self) -> usize {
        self.f.ncols() - 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Sequential,
    General,
}

/// Per-column 2-norms of `X` before scaling.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnScaling {
    pub d: Vec<f64>,
}

impl ColumnScaling {
    /// Entries of the pseudoinverse `D⁺`; zero norms map to zero.
    pub fn pinv(&self) -> Vec<f64> {
        self.d.iter().map(|&d| if d == 0.0 { 0.0 } else { 1.0 / d }).collect()
    }
}

#[derive(Clone, Debug)]
pub struct SnapshotPair {
    pub x: CMat,
    pub y: CMat,
    pub provenance: Provenance,
    pub scaling: Option<ColumnScaling>,
}

impl SnapshotPair {
    /// A general pair `Y = A X` with no sequential structure assumed.
    pub fn new(x: CMat, y: CMat) -> Result<Self> {
        if x.nrows() != y.nrows() || x.ncols() != y.ncols() {
            return Err(DmdError::Shape(format!(
                "X is {}x{} but Y is {}x{}",
                x.nrows(),
                x.ncols(),
                y.nrows(),
                y.ncols()
            )));
        }
        if x.ncols() == 0 || x.nrows() == 0 {
            return Err(DmdError::Shape("empty snapshot matrices".into()));
        }
        if !linalg::all_finite(x.as_ref()) || !linalg::all_finite(y.as_ref()) {
            return Err(DmdError::Data("snapshot pair contains non-finite entries".into()));
        }
        Ok(SnapshotPair {
            x,
            y,
            provenance: Provenance::General,
            scaling: None,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn m(&self) -> usize {
        self.x.ncols()
    }
}

/// `X = F(:, 1..m)`, `Y = F(:, 2..m+1)`.
pub fn from_sequential(f: &SequentialTrajectory) -> SnapshotPair {
    let (n, m) = (f.n(), f.m());
    let fm = f.matrix();
    SnapshotPair {
        x: fm.submatrix(0, 0, n, m).to_owned(),
        y: fm.submatrix(0, 1, n, m).to_owned(),
        provenance: Provenance::Sequential,
        scaling: None,
    }
}

/// Pairs odd snapshots with their successors: `X = (f_1, f_3, ..)`, `Y = (f_2, f_4, ..)`.
pub fn odd_even_split(f: &SequentialTrajectory) -> Result<SnapshotPair> {
    let cols = f.matrix().ncols();
    if cols % 2 != 0 {
        return Err(DmdError::Shape(format!(
            "odd/even split needs an even number of snapshots, got {cols}"
        )));
    }
    let fm = f.matrix();
    let half = cols / 2;
    Ok(SnapshotPair {
        x: Mat::from_fn(f.n(), half, |i, j| fm[(i, 2 * j)]),
        y: Mat::from_fn(f.n(), half, |i, j| fm[(i, 2 * j + 1)]),
        provenance: Provenance::General,
        scaling: None,
    })
}

/// Scales every column of `X` to unit norm and applies the same factors to `Y`.
///
/// Zero columns of `X` keep a zero factor, so `X D⁺` and `Y D⁺` both have a
/// zero column there.
pub fn scale_columns(p: &SnapshotPair) -> (SnapshotPair, ColumnScaling) {
    let d: Vec<f64> = (0..p.m()).map(|j| linalg::col_norm(p.x.as_ref(), j)).collect();
    let scaling = ColumnScaling { d };
    let inv = scaling.pinv();
    let out = SnapshotPair {
        x: linalg::scale_cols(p.x.as_ref(), &inv),
        y: linalg::scale_cols(p.y.as_ref(), &inv),
        provenance: p.provenance,
        scaling: Some(scaling.clone()),
    };
    (out, scaling)
}

/// Krylov decomposition `A X = X C + r e_mᵀ` of a sequential trajectory.
#[derive(Clone, Debug)]
pub struct KrylovCompanion {
    pub c: Vec<c64>,
    pub companion: CMat,
    pub r: Vec<c64>,
    pub r_norm: f64,
}

/// Rank gate shared by the companion construction: `σ_min > max(n,m)·u·σ₁`.
pub(crate) fn full_column_rank_check(x: MatRef<'_, c64>, what: &str) -> Result<()> {
    let (n, m) = (x.nrows(), x.ncols());
    if n < m {
        return Err(DmdError::conditioning(
            format!("{what} has more columns ({m}) than rows ({n}); sigma_min/sigma_1"),
            0.0,
        ));
    }
    let svd = linalg::thin_svd(x)?;
    let s1 = svd.s[0];
    let smin = *svd.s.last().unwrap();
    if s1 == 0.0 {
        return Err(DmdError::RankZero(format!("{what} is the zero matrix")));
    }
    let ratio = smin / s1;
    if ratio <= n.max(m) as f64 * EPS {
        return Err(DmdError::conditioning(
            format!("{what} is numerically rank deficient; sigma_min/sigma_1"),
            ratio,
        ));
    }
    Ok(())
}

/// Least-squares coefficients `c = argmin ‖f_{m+1} − X c‖` and the companion matrix.
pub fn companion_decomposition(f: &SequentialTrajectory) -> Result<KrylovCompanion> {
    let (n, m) = (f.n(), f.m());
    let fm = f.matrix();
    let x = fm.submatrix(0, 0, n, m);
    let last = fm.submatrix(0, m, n, 1);
    full_column_rank_check(x, "X")?;
    let c_mat = linalg::lstsq(x, last);
    let c: Vec<c64> = (0..m).map(|i| c_mat[(i, 0)]).collect();
    let resid = last - x * &c_mat;
    let r = linalg::column(resid.as_ref(), 0);
    let r_norm = resid.norm_l2();
    let companion = Mat::from_fn(m, m, |i, j| {
        if j == m - 1 {
            c[i]
        } else if i == j + 1 {
            linalg::creal(1.0)
        } else {
            linalg::czero()
        }
    });
    Ok(KrylovCompanion {
        c,
        companion,
        r,
        r_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::creal;
    use crate::rng::Stream;

    fn random_real(n: usize, m: usize, seed: u64) -> CMat {
        let mut s = Stream::new(seed);
        Mat::from_fn(n, m, |_, _| creal(s.normal()))
    }

    #[test]
    fn sequential_split_is_a_shift() {
        let f = SequentialTrajectory::new(random_real(4, 6, 1)).unwrap();
        let p = from_sequential(&f);
        assert_eq!(p.provenance, Provenance::Sequential);
        for j in 0..5 {
            for i in 0..4 {
                assert_eq!(p.y[(i, j)], f.matrix()[(i, j + 1)]);
                assert_eq!(p.x[(i, j)], f.matrix()[(i, j)]);
            }
        }
    }

    #[test]
    fn identity_trajectory_bookkeeping() {
        let f = SequentialTrajectory::new(Mat::from_fn(3, 3, |i, j| creal((i == j) as u8 as f64))).unwrap();
        let p = from_sequential(&f);
        assert_eq!(p.x.ncols(), 2);
        assert_eq!(p.x[(0, 0)], creal(1.0));
        assert_eq!(p.y[(1, 0)], creal(1.0));
        assert_eq!(p.y[(2, 1)], creal(1.0));
    }

    #[test]
    fn minimal_trajectory() {
        let f = SequentialTrajectory::new(random_real(5, 2, 2)).unwrap();
        let p = from_sequential(&f);
        assert_eq!((p.x.ncols(), p.y.ncols()), (1, 1));
    }

    #[test]
    fn trajectory_rejects_bad_input() {
        assert!(matches!(
            SequentialTrajectory::new(random_real(3, 1, 0)),
            Err(DmdError::Shape(_))
        ));
        let mut f = random_real(3, 3, 0);
        f[(1, 1)] = creal(f64::NAN);
        assert!(matches!(SequentialTrajectory::new(f), Err(DmdError::Data(_))));
    }

    #[test]
    fn odd_even_pairs() {
        let f = SequentialTrajectory::new(random_real(3, 100, 3)).unwrap();
        let p = odd_even_split(&f).unwrap();
        assert_eq!(p.m(), 50);
        for j in 0..50 {
            assert_eq!(p.x[(0, j)], f.matrix()[(0, 2 * j)]);
            assert_eq!(p.y[(0, j)], f.matrix()[(0, 2 * j + 1)]);
        }
        let odd = SequentialTrajectory::new(random_real(3, 5, 3)).unwrap();
        assert!(matches!(odd_even_split(&odd), Err(DmdError::Shape(_))));
    }

    #[test]
    fn scaling_normalizes_and_keeps_zero_columns() {
        let x = Mat::from_fn(2, 3, |i, j| match (i, j) {
            (0, 0) => creal(2.0),
            (1, 1) => creal(0.5),
            _ => creal(0.0),
        });
        let y = Mat::from_fn(2, 3, |_, _| creal(1.0));
        let p = SnapshotPair::new(x, y).unwrap();
        let (s, d) = scale_columns(&p);
        assert_eq!(d.d, vec![2.0, 0.5, 0.0]);
        assert!((linalg::col_norm(s.x.as_ref(), 0) - 1.0).abs() <= 2.0 * f64::EPSILON);
        assert!((linalg::col_norm(s.x.as_ref(), 1) - 1.0).abs() <= 2.0 * f64::EPSILON);
        assert_eq!(linalg::col_norm(s.x.as_ref(), 2), 0.0);
        assert_eq!(s.y[(0, 0)], creal(0.5));
        assert_eq!(s.y[(0, 1)], creal(2.0));
        assert_eq!(s.y[(0, 2)], creal(0.0));
    }

    #[test]
    fn scaling_is_idempotent() {
        let p = SnapshotPair::new(random_real(6, 4, 5), random_real(6, 4, 6)).unwrap();
        let (once, _) = scale_columns(&p);
        let (_, d) = scale_columns(&once);
        for v in d.d {
            assert!((v - 1.0).abs() <= 2.0 * f64::EPSILON);
        }
    }

    // Unit column norms are within a factor √m of the best diagonal scaling.
    #[test]
    fn scaling_is_near_optimal_on_small_instances() {
        for seed in 0..5u64 {
            let mut s = Stream::new(100 + seed);
            let grade = [1.0, 1e-3, 1e3];
            let x = Mat::from_fn(5, 3, |_, j| creal(s.normal() * grade[j]));
            let p = SnapshotPair::new(x.clone(), x.clone()).unwrap();
            let (sc, _) = scale_columns(&p);
            let scaled = linalg::cond2(sc.x.as_ref()).unwrap();
            let grid: Vec<f64> = (-40..=40).map(|e| 10f64.powf(e as f64 / 5.0)).collect();
            let mut best = f64::INFINITY;
            for &a in &grid {
                for &b in &grid {
                    let xd = linalg::scale_cols(x.as_ref(), &[1.0, a, b]);
                    best = best.min(linalg::cond2(xd.as_ref()).unwrap());
                }
            }
            assert!(scaled <= 3f64.sqrt() * best * (1.0 + 1e-12), "{scaled} vs {best}");
        }
    }

    #[test]
    fn companion_with_residual_free_trajectory() {
        let f = Mat::from_fn(3, 4, |i, j| creal((i == j % 3) as u8 as f64));
        let k = companion_decomposition(&SequentialTrajectory::new(f).unwrap()).unwrap();
        assert!((k.c[0] - creal(1.0)).norm() < 1e-15);
        assert!(k.c[1].norm() < 1e-15 && k.c[2].norm() < 1e-15);
        assert!(k.r_norm < 1e-15);
        for i in 0..3 {
            for j in 0..3 {
                let want = if j == 2 {
                    k.c[i]
                } else if i == j + 1 {
                    creal(1.0)
                } else {
                    creal(0.0)
                };
                assert_eq!(k.companion[(i, j)], want);
            }
        }
    }

    #[test]
    fn companion_residual_is_orthogonal() {
        for seed in 0..10u64 {
            let f = SequentialTrajectory::new(random_real(100, 21, seed)).unwrap();
            let k = companion_decomposition(&f).unwrap();
            let x = f.matrix().submatrix(0, 0, 100, 20);
            let xr = x.adjoint() * linalg::col_vec(&k.r);
            let bound = 1e-10 * linalg::norm2(x).unwrap() * k.r_norm;
            assert!(xr.norm_l2() <= bound);
        }
    }

    #[test]
    fn duplicate_columns_are_a_conditioning_error() {
        let mut f = random_real(6, 4, 9);
        for i in 0..6 {
            f[(i, 1)] = f[(i, 0)];
        }
        let err = companion_decomposition(&SequentialTrajectory::new(f).unwrap()).unwrap_err();
        assert!(matches!(err, DmdError::Conditioning { .. }));
    }
}
