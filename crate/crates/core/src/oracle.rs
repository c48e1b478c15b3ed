//! Independent reference computations: the exact shadow of a pseudo-orbit of a
//! hyperbolic linear map, and brute-force searches for periodic points and
//! shadows.

use crate::dynamics::{Direction, MapSpec};
use crate::error::{Error, Result};
use crate::geometry::{point_distance, wrap01, wrap_centered, AxisBox, Space};
use crate::linalg::{self, Mat};
use crate::shadowing::PseudoOrbit;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Eigen-decomposition `A = V diag(λ) V^{-1}` with real simple eigenvalues,
/// sorted by decreasing modulus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicSplitting {
    pub matrix: Mat,
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvectors as columns.
    pub basis: Mat,
    pub basis_inv: Mat,
    pub unstable_dim: usize,
}

impl HyperbolicSplitting {
    pub fn new(a: &Mat) -> Result<Self> {
        let n = a.len();
        if n == 0 || a.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("matrix must be square".into()));
        }
        let (eigenvalues, basis) =
            linalg::eigen_frame(a).ok_or_else(|| Error::NotHyperbolic("eigenvalues are not real and simple".into()))?;
        if eigenvalues[0].abs() <= 1.0 + 1e-9 {
            return Err(Error::NotHyperbolic(format!("no expanding eigenvalue in {eigenvalues:?}")));
        }
        if eigenvalues.iter().any(|l| (l.abs() - 1.0).abs() <= 1e-9) {
            return Err(Error::NotHyperbolic(format!("eigenvalue on the unit circle in {eigenvalues:?}")));
        }
        let basis_inv = linalg::inverse(&basis)?;
        let unstable_dim = eigenvalues.iter().filter(|l| l.abs() > 1.0).count();
        Ok(HyperbolicSplitting { matrix: a.clone(), eigenvalues, basis, basis_inv, unstable_dim })
    }

    /// Splitting of the linear part of an unperturbed affine or toral map.
    pub fn of_map(f: &MapSpec) -> Result<Self> {
        match f.affine_part() {
            Some((a, _, eta)) if eta == 0.0 => HyperbolicSplitting::new(&a),
            _ => Err(Error::InvalidInput("map has no exact linear part".into())),
        }
    }

    pub fn lambda_u(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_s(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    pub fn to_eigen(&self, v: &[f64]) -> Vec<f64> {
        linalg::mat_vec(&self.basis_inv, v)
    }

    /// Largest `|A v - λ v|` over the stored eigenpairs.
    pub fn residual(&self) -> f64 {
        let n = self.eigenvalues.len();
        (0..n)
            .map(|j| {
                let v: Vec<f64> = (0..n).map(|i| self.basis[i][j]).collect();
                let av = linalg::mat_vec(&self.matrix, &v);
                av.iter().zip(&v).map(|(a, b)| (a - self.eigenvalues[j] * b).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearShadow {
    /// `x_k = y_k + w_k` (reduced mod 1 on the torus).
    pub points: Vec<Vec<f64>>,
    pub corrections: Vec<Vec<f64>>,
    /// Corrections in eigen coordinates.
    pub corrections_eigen: Vec<Vec<f64>>,
    /// Per-step bound on the distance to the bi-infinite shadow, from the
    /// series cut at the window edges.
    pub truncation: Vec<f64>,
    /// `max_k max_j |w_k^j|` in eigen coordinates.
    pub sup_eigen: f64,
    pub max_err: f64,
}

/// Exact shadow of a pseudo-orbit of `x -> A x + b` given as raw points.
/// Errors `e_k = y_{k+1} - A y_k - b` are split along the eigenbasis; the
/// expanding part is summed forward, `w_k = Σ_{i≥0} λ^{-(i+1)} e_{k+i}`, the
/// contracting part backward, `w_k = -Σ_{i≥1} λ^{i-1} e_{k-i}`.
pub fn linear_shadow_raw(
    split: &HyperbolicSplitting,
    b: &[f64],
    points: &[Vec<f64>],
    torus: bool,
) -> Result<LinearShadow> {
    let n = split.eigenvalues.len();
    let len = points.len();
    if len == 0 || points.iter().any(|p| p.len() != n) || b.len() != n {
        return Err(Error::InvalidInput("pseudo-orbit and matrix dimensions differ".into()));
    }
    let errs: Vec<Vec<f64>> = (0..len.saturating_sub(1))
        .map(|k| {
            let ay = linalg::mat_vec(&split.matrix, &points[k]);
            let e: Vec<f64> = points[k + 1].iter().zip(&ay).zip(b).map(|((y, a), c)| y - a - c).collect();
            let e = if torus { e.into_iter().map(wrap_centered).collect() } else { e };
            split.to_eigen(&e)
        })
        .collect();
    let mut w = vec![vec![0.0; n]; len];
    let mut trunc = vec![vec![0.0; n]; len];
    for j in 0..n {
        let lam = split.eigenvalues[j];
        let emax = errs.iter().map(|e| e[j].abs()).fold(0.0, f64::max);
        if lam.abs() > 1.0 {
            // w_k = (w_{k+1} + e_k) / λ with w_last = 0
            for k in (0..len.saturating_sub(1)).rev() {
                w[k][j] = (w[k + 1][j] + errs[k][j]) / lam;
            }
            for (k, t) in trunc.iter_mut().enumerate() {
                t[j] = lam.abs().powi(-((len - 1 - k) as i32)) * emax / (lam.abs() - 1.0);
            }
        } else {
            // w_{k+1} = λ w_k - e_k with w_first = 0
            for k in 0..len - 1 {
                w[k + 1][j] = lam * w[k][j] - errs[k][j];
            }
            for (k, t) in trunc.iter_mut().enumerate() {
                t[j] = lam.abs().powi(k as i32) * emax / (1.0 - lam.abs());
            }
        }
    }
    let corrections: Vec<Vec<f64>> = w.iter().map(|we| linalg::mat_vec(&split.basis, we)).collect();
    let pts: Vec<Vec<f64>> = points
        .iter()
        .zip(&corrections)
        .map(|(y, c)| y.iter().zip(c).map(|(a, d)| if torus { wrap01(a + d) } else { a + d }).collect())
        .collect();
    let space = if torus { Space::Torus } else { Space::Cube };
    let max_err = pts.iter().zip(points).map(|(x, y)| point_distance(space, x, y)).fold(0.0, f64::max);
    let sup_eigen = w.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
    let truncation = trunc
        .iter()
        .map(|t| {
            linalg::norm(&linalg::mat_vec(
                &split.basis.iter().map(|r| r.iter().map(|v| v.abs()).collect()).collect(),
                t,
            ))
        })
        .collect();
    Ok(LinearShadow { points: pts, corrections, corrections_eigen: w, truncation, sup_eigen, max_err })
}

/// Exact shadow of a pseudo-orbit of an unperturbed linear or toral map.
pub fn linear_shadow(f: &MapSpec, p: &PseudoOrbit) -> Result<LinearShadow> {
    p.validate(f)?;
    let (_, b, eta) = f.affine_part().ok_or_else(|| Error::InvalidInput("map is not affine".into()))?;
    if eta != 0.0 {
        return Err(Error::InvalidInput("map is perturbed".into()));
    }
    let split = HyperbolicSplitting::of_map(f)?;
    linear_shadow_raw(&split, &b, &p.points, f.space() == Space::Torus)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointSearch {
    pub period: usize,
    pub points: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    /// Set when `f^P - id` is singular at some point found or every lattice
    /// point qualifies.
    pub degenerate: bool,
}

fn iterate(f: &MapSpec, p: &[f64], times: usize) -> Result<Vec<f64>> {
    let mut x = p.to_vec();
    for _ in 0..times {
        x = f.eval_point(Direction::Forward, &x)?;
    }
    Ok(x)
}

fn return_vec(f: &MapSpec, p: &[f64], period: usize) -> Result<Vec<f64>> {
    let q = iterate(f, p, period)?;
    Ok(q.iter().zip(p).map(|(a, b)| if f.space() == Space::Torus { wrap_centered(a - b) } else { a - b }).collect())
}

fn jacobian_power(f: &MapSpec, p: &[f64], period: usize) -> Result<Mat> {
    let mut x = p.to_vec();
    let mut jac = linalg::identity(p.len());
    for _ in 0..period {
        jac = linalg::mat_mul(&f.jacobian(Direction::Forward, &x)?, &jac);
        x = f.eval_point(Direction::Forward, &x)?;
    }
    Ok(jac)
}

fn lattice(region: &AxisBox, grid: usize) -> Vec<Vec<f64>> {
    let n = region.dim();
    let total = grid.pow(n as u32);
    (0..total)
        .map(|mut flat| {
            let mut p = vec![0.0; n];
            for d in (0..n).rev() {
                let i = flat % grid;
                flat /= grid;
                let (lo, hi) = (region.lo()[d], region.hi()[d]);
                p[d] = lo + (hi - lo) * (i as f64 + 0.5) / grid as f64;
            }
            p
        })
        .collect()
}

/// Periodic points of period dividing `P` in `region`: local minima of
/// `dist(f^P(p), p)` over a `grid^n` lattice, polished by Newton steps.
pub fn brute_force_fixed_points(f: &MapSpec, region: &AxisBox, period: usize, grid: usize) -> Result<FixedPointSearch> {
    if grid < 2 || period == 0 {
        return Err(Error::InvalidInput("grid must be at least 2 and period at least 1".into()));
    }
    let n = f.dim();
    if region.dim() != n {
        return Err(Error::InvalidInput("region dimension does not match the map".into()));
    }
    let total = grid.checked_pow(n as u32).filter(|&t| t <= 1 << 26).ok_or(Error::ResourceLimit {
        what: "lattice points".into(),
        needed: (grid as u128).saturating_pow(n as u32),
        budget: 1 << 26,
    })?;
    let pts = lattice(region, grid);
    let res: Vec<f64> =
        pts.par_iter().map(|p| return_vec(f, p, period).map(|v| linalg::norm(&v))).collect::<Result<_>>()?;
    let pitch = region.widths().iter().fold(0.0f64, |a, &w| a.max(w)) / grid as f64;
    let lip = f.lipschitz_bound(Direction::Forward)?;
    let threshold = (lip.powi(period as i32) + 1.0) * pitch * (n as f64).sqrt();
    let index = |multi: &[i64]| -> Option<usize> {
        multi.iter().try_fold(0usize, |acc, &i| (0..grid as i64).contains(&i).then(|| acc * grid + i as usize))
    };
    let mut minima = Vec::new();
    for (flat, &r) in res.iter().enumerate() {
        if r > threshold {
            continue;
        }
        let mut multi = vec![0i64; n];
        let mut rest = flat;
        for d in (0..n).rev() {
            multi[d] = (rest % grid) as i64;
            rest /= grid;
        }
        let is_min = (0..3usize.pow(n as u32)).all(|code| {
            let mut c = code;
            let nb: Vec<i64> = multi
                .iter()
                .map(|&m| {
                    let o = (c % 3) as i64 - 1;
                    c /= 3;
                    m + o
                })
                .collect();
            index(&nb).is_none_or(|j| res[j] >= r)
        });
        if is_min {
            minima.push(flat);
        }
    }
    let mut degenerate = minima.len() == total;
    let mut found: Vec<(Vec<f64>, f64)> = Vec::new();
    for &flat in &minima {
        let mut x = pts[flat].clone();
        let mut r = res[flat];
        for _ in 0..50 {
            if r <= 1e-12 {
                break;
            }
            let mut jac = jacobian_power(f, &x, period)?;
            for (i, row) in jac.iter_mut().enumerate() {
                row[i] -= 1.0;
            }
            let Ok(inv) = linalg::inverse(&jac) else { break };
            let step = linalg::mat_vec(&inv, &return_vec(f, &x, period)?);
            x = f.space().reduce(&x.iter().zip(&step).map(|(a, s)| a - s).collect::<Vec<_>>());
            r = linalg::norm(&return_vec(f, &x, period)?);
        }
        if r > 1e-9 {
            continue;
        }
        let mut jac = jacobian_power(f, &x, period)?;
        for (i, row) in jac.iter_mut().enumerate() {
            row[i] -= 1.0;
        }
        if linalg::det(&jac).abs() < 1e-9 {
            degenerate = true;
        }
        let x: Vec<f64> =
            x.iter().map(|&v| if f.space() == Space::Torus && (1.0 - v) < 1e-12 { 0.0 } else { v }).collect();
        if found.iter().all(|(q, _)| point_distance(f.space(), q, &x) > 1e-6) {
            found.push((x, r));
        }
    }
    found.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(FixedPointSearch {
        period,
        residuals: found.iter().map(|(_, r)| *r).collect(),
        points: found.into_iter().map(|(p, _)| p).collect(),
        degenerate,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BruteShadow {
    pub point: Vec<f64>,
    pub max_err: f64,
    pub ok: bool,
    pub evaluated: usize,
}

fn window_error(f: &MapSpec, x: &[f64], p: &PseudoOrbit) -> Result<f64> {
    let space = f.space();
    let mut err = point_distance(space, x, p.at(0).unwrap());
    let mut c = x.to_vec();
    for k in 1..=p.end() {
        c = f.eval_point(Direction::Forward, &c)?;
        err = err.max(point_distance(space, &c, p.at(k).unwrap()));
    }
    let mut c = x.to_vec();
    for k in (p.start..0).rev() {
        c = f.eval_point(Direction::Inverse, &c)?;
        err = err.max(point_distance(space, &c, p.at(k).unwrap()));
    }
    Ok(err)
}

/// Lattice point of `region` minimizing `max_k dist(f^k(·), y_k)`. Each of
/// the `zoom` extra rounds repeats the search on a box of four pitches
/// around the previous best point.
pub fn brute_force_shadow(
    f: &MapSpec,
    p: &PseudoOrbit,
    region: &AxisBox,
    grid: usize,
    eps: f64,
    zoom: usize,
) -> Result<BruteShadow> {
    p.validate(f)?;
    if grid < 1 || region.dim() != f.dim() {
        return Err(Error::InvalidInput("grid must be positive and region must match the map".into()));
    }
    let mut region = region.clone();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut evaluated = 0usize;
    for round in 0..=zoom {
        let pts = lattice(&region, grid);
        evaluated += pts.len();
        let errs: Vec<f64> = pts.par_iter().map(|x| window_error(f, x, p)).collect::<Result<_>>()?;
        // min by value, then by lexicographic point
        let (i, e) = errs
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1).then_with(|| pts[a.0].partial_cmp(&pts[b.0]).unwrap()))
            .map(|(i, &e)| (i, e))
            .unwrap();
        if best.as_ref().is_none_or(|(be, _)| e < *be) {
            best = Some((e, pts[i].clone()));
        }
        if round < zoom {
            let c = &best.as_ref().unwrap().1;
            let half: Vec<f64> = region.widths().iter().map(|w| 2.0 * w / grid as f64).collect();
            let (lo, hi): (Vec<f64>, Vec<f64>) = c
                .iter()
                .zip(&half)
                .map(|(&x, &h)| match f.space() {
                    Space::Cube => ((x - h).max(0.0), (x + h).min(1.0)),
                    Space::Torus => (x - h, x + h),
                })
                .unzip();
            region = AxisBox::new(lo, hi, f.space())?;
        }
    }
    let (max_err, point) = best.unwrap();
    Ok(BruteShadow { point: f.space().reduce(&point), max_err, ok: max_err < eps, evaluated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::builtin_map;
    use crate::shadowing::{generate_pseudo_orbit, PerturbMode};

    #[test]
    fn doubling_constant_error() {
        let split = HyperbolicSplitting::new(&vec![vec![2.0]]).unwrap();
        let d = 1e-3;
        // y_{k+1} = 2 y_k + d with y_k = -d throughout
        let ys = vec![vec![-d]; 120];
        let s = linear_shadow_raw(&split, &[0.0], &ys, false).unwrap();
        for k in 0..120 {
            assert!((s.corrections[k][0] - d).abs() <= s.truncation[k] + 1e-18);
        }
        for k in 0..60 {
            assert_eq!(s.corrections[k][0], d);
            assert_eq!(s.points[k][0], ys[k][0] + d);
        }
    }

    #[test]
    fn zero_error_zero_correction() {
        let f = builtin_map("toral [[2,1],[1,1]]").unwrap();
        let p = generate_pseudo_orbit(&f, &[0.3, 0.1], 0.0, 15, &PerturbMode::UniformNoise { seed: 0 }, false).unwrap();
        let s = linear_shadow(&f, &p).unwrap();
        assert!(s.sup_eigen < 1e-12);
    }

    #[test]
    fn cat_splitting() {
        let split = HyperbolicSplitting::new(&vec![vec![2.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!((split.lambda_u() - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!((split.lambda_u() * split.lambda_s() - 1.0).abs() < 1e-12);
        assert!(split.residual() < 1e-12);
        assert!(HyperbolicSplitting::new(&linalg::identity(2)).is_err());
        assert!(matches!(
            HyperbolicSplitting::new(&vec![vec![1.0, 1.0], vec![0.0, 1.0]]),
            Err(Error::NotHyperbolic(_))
        ));
    }

    #[test]
    fn cat_oracle_is_an_orbit() {
        let f = builtin_map("toral [[2,1],[1,1]]").unwrap();
        let p =
            generate_pseudo_orbit(&f, &[0.3, 0.1], 1e-4, 100, &PerturbMode::UniformNoise { seed: 1 }, true).unwrap();
        let s = linear_shadow(&f, &p).unwrap();
        for w in s.points.windows(2) {
            let fx = f.eval_point(Direction::Forward, &w[0]).unwrap();
            assert!(point_distance(Space::Torus, &fx, &w[1]) < 1e-10);
        }
        let split = HyperbolicSplitting::of_map(&f).unwrap();
        let lu = split.lambda_u();
        let ls = split.lambda_s().abs();
        assert!(s.sup_eigen <= 1e-4 * (1.0 / (lu - 1.0)).max(1.0 / (1.0 - ls)));
    }

    #[test]
    fn cat_fixed_points() {
        let f = builtin_map("toral [[2,1],[1,1]]").unwrap();
        let whole = AxisBox::unit(2, Space::Torus);
        let one = brute_force_fixed_points(&f, &whole, 1, 64).unwrap();
        assert_eq!(one.points, vec![vec![0.0, 0.0]]);
        let two = brute_force_fixed_points(&f, &whole, 2, 64).unwrap();
        assert_eq!(two.points.len(), 5);
        assert!(two.points.iter().any(|p| point_distance(Space::Torus, p, &[0.2, 0.4]) < 1e-9));
        assert!(!two.degenerate);
    }

    #[test]
    fn identity_is_degenerate() {
        let f = builtin_map("identity space=cube").unwrap();
        let r = brute_force_fixed_points(&f, &AxisBox::unit(2, Space::Cube), 1, 8).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.points.len(), 64);
    }

    #[test]
    fn drift_is_not_shadowable() {
        let f = builtin_map("identity space=cube").unwrap();
        let p = generate_pseudo_orbit(
            &f,
            &[0.25, 0.5],
            0.005,
            100,
            &PerturbMode::Drift { direction: vec![1.0, 0.0] },
            false,
        )
        .unwrap();
        let b = brute_force_shadow(&f, &p, &AxisBox::unit(2, Space::Cube), 64, 0.1, 0).unwrap();
        assert!(b.max_err >= 0.24 && b.max_err <= 0.26, "{}", b.max_err);
        assert!(!b.ok);
    }

    #[test]
    fn exact_orbit_brute_force() {
        let f = builtin_map("toral [[2,1],[1,1]]").unwrap();
        let p = generate_pseudo_orbit(&f, &[0.3, 0.1], 0.0, 3, &PerturbMode::UniformNoise { seed: 0 }, false).unwrap();
        let region = AxisBox::new(vec![0.25, 0.0625], vec![0.3125, 0.125], Space::Torus).unwrap();
        let b = brute_force_shadow(&f, &p, &region, 32, 1.0, 0).unwrap();
        let half_pitch = 0.0625 / 64.0 * 2f64.sqrt();
        assert!(point_distance(Space::Torus, &b.point, &[0.3, 0.1]) <= half_pitch);
        assert!(b.max_err <= 3f64.powi(3) * half_pitch);
    }
}
