//! Small dense matrices stored as row vectors.

use crate::error::{Error, Result};
use crate::interval::{add_up, IMat, Interval};
use nalgebra::DMatrix;

pub type Mat = Vec<Vec<f64>>;

pub fn identity(n: usize) -> Mat {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

pub fn diag(v: &[f64]) -> Mat {
    let n = v.len();
    (0..n).map(|i| (0..n).map(|j| if i == j { v[i] } else { 0.0 }).collect()).collect()
}

pub fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    let (r, k, c) = (a.len(), b.len(), b[0].len());
    (0..r).map(|i| (0..c).map(|j| (0..k).map(|t| a[i][t] * b[t][j]).sum()).collect()).collect()
}

pub fn mat_vec(a: &Mat, v: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

pub fn transpose(a: &Mat) -> Mat {
    let (r, c) = (a.len(), a[0].len());
    (0..c).map(|j| (0..r).map(|i| a[i][j]).collect()).collect()
}

pub fn to_na(a: &Mat) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), a[0].len(), |i, j| a[i][j])
}

pub fn from_na(m: &DMatrix<f64>) -> Mat {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

pub fn det(a: &Mat) -> f64 {
    to_na(a).determinant()
}

pub fn inverse(a: &Mat) -> Result<Mat> {
    to_na(a).try_inverse().map(|m| from_na(&m)).ok_or_else(|| Error::InvalidInput("singular matrix".into()))
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Exact determinant of a small integer matrix by cofactor expansion.
pub fn int_det(a: &[Vec<i64>]) -> i128 {
    let n = a.len();
    if n == 1 {
        return a[0][0] as i128;
    }
    (0..n)
        .map(|j| {
            let minor: Vec<Vec<i64>> = a[1..]
                .iter()
                .map(|row| row.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, &v)| v).collect())
                .collect();
            let s = if j % 2 == 0 { 1 } else { -1 };
            s * a[0][j] as i128 * int_det(&minor)
        })
        .sum()
}

/// Integer inverse of a unimodular matrix via the adjugate.
pub fn int_inverse(a: &[Vec<i64>]) -> Option<Vec<Vec<i64>>> {
    let n = a.len();
    let d = int_det(a);
    if d.abs() != 1 {
        return None;
    }
    if n == 1 {
        return Some(vec![vec![(d * a[0][0] as i128).signum() as i64]]);
    }
    let mut inv = vec![vec![0i64; n]; n];
    for i in 0..n {
        for j in 0..n {
            let minor: Vec<Vec<i64>> =
                (0..n).filter(|&r| r != i).map(|r| (0..n).filter(|&c| c != j).map(|c| a[r][c]).collect()).collect();
            let s = if (i + j) % 2 == 0 { 1 } else { -1 };
            inv[j][i] = (s * int_det(&minor) * d) as i64;
        }
    }
    Some(inv)
}

/// Interval matrix enclosing `a^{-1}`: a floating inverse `G` corrected by the
/// Neumann bound on `I - G a`.
pub fn verified_inverse(a: &Mat) -> Result<IMat> {
    let n = a.len();
    let g = inverse(a)?;
    let gi = IMat::from_rows(&g);
    let e = IMat::identity(n).sub(&gi.mul(&IMat::from_rows(a)));
    let t = (0..n).map(|i| e.row_abs_sum(i)).fold(0.0, f64::max);
    if t >= 0.5 {
        return Err(Error::InvalidInput("matrix too ill-conditioned for a verified inverse".into()));
    }
    let factor = add_up(t / (1.0 - t), t * 1e-15) * (1.0 + 1e-15);
    let mut out = IMat::zeros(n, n);
    for j in 0..n {
        let colmax = (0..n).map(|k| g[k][j].abs()).fold(0.0, f64::max);
        let r = factor * colmax * (1.0 + 1e-15);
        for i in 0..n {
            out.set(i, j, Interval::new((g[i][j] - r).next_down(), (g[i][j] + r).next_up()));
        }
    }
    Ok(out)
}

/// Central finite-difference Jacobian of `f` at `p`.
pub fn fd_jacobian(f: impl Fn(&[f64]) -> Vec<f64>, p: &[f64], h: f64) -> Mat {
    let n = p.len();
    let mut jac = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut a = p.to_vec();
        let mut b = p.to_vec();
        a[j] += h;
        b[j] -= h;
        let (fa, fb) = (f(&a), f(&b));
        for i in 0..n {
            jac[i][j] = (fa[i] - fb[i]) / (2.0 * h);
        }
    }
    jac
}

/// Eigen-aligned frame for a matrix with real spectrum: unit eigenvectors as
/// columns, ordered by decreasing modulus of the eigenvalue. Returns `None` for
/// complex or repeated spectra.
pub fn eigen_frame(a: &Mat) -> Option<(Vec<f64>, Mat)> {
    let n = a.len();
    let m = to_na(a);
    let ev = m.clone().complex_eigenvalues();
    let mut lams: Vec<f64> = Vec::with_capacity(n);
    for z in ev.iter() {
        if z.im.abs() > 1e-9 * (1.0 + z.re.abs()) {
            return None;
        }
        lams.push(z.re);
    }
    lams.sort_by(|x, y| y.abs().partial_cmp(&x.abs()).unwrap());
    for w in lams.windows(2) {
        if (w[0] - w[1]).abs() < 1e-9 {
            return None;
        }
    }
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    for &l in &lams {
        let shifted = &m - DMatrix::identity(n, n) * l;
        let svd = shifted.svd(false, true);
        let vt = svd.v_t?;
        let (k, _) = svd.singular_values.iter().enumerate().min_by(|x, y| x.1.partial_cmp(y.1).unwrap())?;
        let mut v: Vec<f64> = (0..n).map(|j| vt[(k, j)]).collect();
        let s = norm(&v);
        v.iter_mut().for_each(|x| *x /= s);
        // sign convention: first nonzero component positive
        if let Some(&first) = v.iter().find(|x| x.abs() > 1e-12) {
            if first < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        cols.push(v);
    }
    Some((lams, transpose(&cols)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_inverse_of_cat_map() {
        let a = vec![vec![2, 1], vec![1, 1]];
        assert_eq!(int_det(&a), 1);
        assert_eq!(int_inverse(&a), Some(vec![vec![1, -1], vec![-1, 2]]));
        assert_eq!(int_inverse(&[vec![2, 0], vec![0, 2]]), None);
        let b = vec![vec![0, 1, 0], vec![0, 0, 1], vec![1, 1, 0]];
        assert_eq!(int_det(&b), 1);
        let inv = int_inverse(&b).unwrap();
        let prod: Vec<Vec<i64>> =
            (0..3).map(|i| (0..3).map(|j| (0..3).map(|k| b[i][k] * inv[k][j]).sum()).collect()).collect();
        assert_eq!(prod, vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
    }

    #[test]
    fn verified_inverse_encloses() {
        let a = vec![vec![0.3, 0.1], vec![-0.2, 0.7]];
        let g = verified_inverse(&a).unwrap();
        let exact = inverse(&a).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!(g.get(i, j).contains(exact[i][j]));
                assert!(g.get(i, j).width() < 1e-12);
            }
        }
    }

    #[test]
    fn cat_eigen_frame() {
        let (lams, f) = eigen_frame(&vec![vec![2.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((lams[0] - phi * phi).abs() < 1e-12);
        assert!((f[1][0] / f[0][0] - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-12);
        assert!(eigen_frame(&vec![vec![0.0, -1.0], vec![1.0, 0.0]]).is_none());
    }
}
