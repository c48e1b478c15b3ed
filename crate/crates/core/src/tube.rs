//! Tubes of eigen-aligned rectangles around a pseudo-orbit and localization of
//! a true orbit inside them.

use crate::covering::{check_covering, compose_chain, CoveringCertificate, CoveringConfig, CoveringOutcome, Rectangle};
use crate::dynamics::{Direction, MapSpec};
use crate::error::{Error, Result};
use crate::geometry::Space;
use crate::hp::Hp;
use crate::interval::{IMat, Interval};
use crate::linalg::{self, Mat};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TubeConfig {
    /// Growth factor applied at every step of the size recursions (> 1).
    pub safety: f64,
    /// Extra attempts with defects inflated by 1.5 each time.
    pub retries: usize,
    /// Floor for per-step defects, so true orbits get nondegenerate tubes.
    pub min_defect: f64,
    /// Stop refining once every normalized image width is below this.
    pub resolve: f64,
    /// Cell evaluations before giving up.
    pub max_cells: usize,
    pub covering: CoveringConfig,
}

impl Default for TubeConfig {
    fn default() -> Self {
        TubeConfig {
            safety: 1.25,
            retries: 6,
            min_defect: 1e-7,
            resolve: 1e-6,
            max_cells: 200_000,
            covering: CoveringConfig::default(),
        }
    }
}

/// Certified chain `R_0 => R_1 => ...` around points `y_0, y_1, ...`.
#[derive(Clone, Debug)]
pub struct Tube {
    pub rects: Vec<Rectangle>,
    pub certs: Vec<CoveringCertificate>,
    /// Inflation applied to the defects in the accepted attempt.
    pub inflation: f64,
}

fn lift_diff(space: Space, a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            if space == Space::Torus {
                d - d.round()
            } else {
                d
            }
        })
        .collect()
}

/// Eigen frame of the Jacobian at `y`, expanding column first. Exactly one
/// expanding direction is required.
pub(crate) fn hyperbolic_frame(f: &MapSpec, y: &[f64]) -> Result<(Vec<f64>, Mat)> {
    let jac = f.jacobian(Direction::Forward, y)?;
    let (vals, frame) =
        linalg::eigen_frame(&jac).ok_or_else(|| Error::NotHyperbolic(format!("no real simple eigenbasis at {y:?}")))?;
    let unstable = vals.iter().filter(|l| l.abs() > 1.0 + 1e-9).count();
    let neutral = vals.iter().any(|l| (l.abs() - 1.0).abs() <= 1e-9);
    if unstable != 1 || neutral {
        return Err(Error::NotHyperbolic(format!("eigenvalues {vals:?} at {y:?}; need one expanding direction")));
    }
    Ok((vals, frame))
}

struct StepData {
    /// |diagonal| of the linearized step in eigen coordinates
    gain: Vec<f64>,
    defect: Vec<f64>,
}

fn step_data(f: &MapSpec, frames: &[Mat], pts: &[Vec<f64>], k: usize, next: usize) -> Result<StepData> {
    let vinv = linalg::inverse(&frames[next])?;
    let jac = f.jacobian(Direction::Forward, &pts[k])?;
    let m = linalg::mat_mul(&vinv, &linalg::mat_mul(&jac, &frames[k]));
    let fy = f.lift(Direction::Forward, &pts[k])?;
    let e = linalg::mat_vec(&vinv, &lift_diff(f.space(), &fy, &pts[next]));
    Ok(StepData { gain: (0..m.len()).map(|i| m[i][i].abs()).collect(), defect: e.iter().map(|v| v.abs()).collect() })
}

fn certify_steps(
    f: &MapSpec,
    rects: &[Rectangle],
    cyclic: bool,
    cfg: &TubeConfig,
) -> Result<std::result::Result<Vec<CoveringCertificate>, String>> {
    let steps = if cyclic { rects.len() } else { rects.len() - 1 };
    let mut certs = Vec::with_capacity(steps);
    for k in 0..steps {
        let next = (k + 1) % rects.len();
        match check_covering(f, &rects[k], &rects[next], &cfg.covering)? {
            CoveringOutcome::Certified(c) => certs.push(c),
            CoveringOutcome::Inconclusive { reason } => return Ok(Err(format!("step {k}: {reason}"))),
        }
    }
    if !certs.is_empty() {
        compose_chain(&certs)?;
    }
    Ok(Ok(certs))
}

/// Builds and certifies a tube around `pts`. With `cyclic` the sizes are
/// constant and the last rectangle covers the first.
pub fn build_tube(f: &MapSpec, pts: &[Vec<f64>], cyclic: bool, cfg: &TubeConfig) -> Result<Tube> {
    let len = pts.len();
    if len == 0 || (len == 1 && !cyclic) {
        return Err(Error::InvalidInput("tube needs at least one step".into()));
    }
    if !(cfg.safety > 1.0) {
        return Err(Error::InvalidInput("tube safety factor must exceed 1".into()));
    }
    let n = f.dim();
    let frames: Vec<Mat> = pts.iter().map(|y| hyperbolic_frame(f, y).map(|(_, v)| v)).collect::<Result<_>>()?;
    let steps = if cyclic { len } else { len - 1 };
    let data: Vec<StepData> =
        (0..steps).map(|k| step_data(f, &frames, pts, k, (k + 1) % len)).collect::<Result<_>>()?;
    let s = cfg.safety;
    let gu = data.iter().map(|d| d.gain[0]).fold(f64::INFINITY, f64::min);
    let gs: Vec<f64> = (1..n).map(|j| data.iter().map(|d| d.gain[j]).fold(0.0, f64::max)).collect();
    if !(gu > s) || gs.iter().any(|&g| !(g * s < 1.0)) {
        return Err(Error::NotHyperbolic(format!(
            "expansion {gu:.4} / contraction {gs:?} too weak for safety factor {s}"
        )));
    }
    let mut last = String::new();
    for attempt in 0..=cfg.retries {
        let infl = 1.5f64.powi(attempt as i32);
        let e = |k: usize, j: usize| infl * data[k].defect[j].max(cfg.min_defect);
        let emax = |j: usize| (0..steps).map(|k| e(k, j)).fold(0.0, f64::max);
        let mut rho = vec![vec![0.0; n]; len];
        let steady_u = s * emax(0) / (gu - s);
        let steady_s: Vec<f64> = (1..n).map(|j| s * emax(j) / (1.0 - s * gs[j - 1])).collect();
        if cyclic {
            for r in rho.iter_mut() {
                r[0] = steady_u;
                r[1..].copy_from_slice(&steady_s);
            }
        } else {
            rho[len - 1][0] = steady_u;
            for k in (0..len - 1).rev() {
                rho[k][0] = s * (rho[k + 1][0] + e(k, 0)) / data[k].gain[0];
            }
            rho[0][1..].copy_from_slice(&steady_s);
            for k in 0..len - 1 {
                for j in 1..n {
                    rho[k + 1][j] = s * (data[k].gain[j] * rho[k][j] + e(k, j));
                }
            }
        }
        let rects: Vec<Rectangle> = (0..len)
            .map(|k| {
                let fr: Mat =
                    frames[k].iter().map(|row| row.iter().zip(&rho[k]).map(|(v, r)| v * r).collect()).collect();
                Rectangle::new(f.space().reduce(&pts[k]), fr, 0, 1)
            })
            .collect::<Result<_>>()?;
        if cyclic && rects.iter().any(|r| r.bounding_box().iter().any(|iv| iv.width() >= 1.0)) {
            return Err(Error::NotCertified("periodic tube wider than the torus".into()));
        }
        match certify_steps(f, &rects, cyclic, cfg)? {
            Ok(certs) => return Ok(Tube { rects, certs, inflation: infl }),
            Err(reason) => last = reason,
        }
    }
    Err(Error::NotCertified(format!("tube covering failed after {} attempts; {last}", cfg.retries + 1)))
}

fn hp_interval(v: &Hp) -> Interval {
    let x = v.to_f64();
    let pad = x.abs() * 4.5e-16 + 1e-300;
    Interval::new(x - pad, x + pad)
}

/// Chart data for one time of the tube.
struct Slot {
    y: Vec<Hp>,
    ginv: IMat,
}

/// A cell `center + G_0 · diag(h) · [-1,1]^n` in the chart of the time-0
/// rectangle; `t` is the center in chart coordinates.
#[derive(Clone)]
struct Cell {
    t: Vec<Hp>,
    h: Vec<f64>,
    depth: usize,
}

struct Eval {
    width: Vec<f64>,
    /// Distance from 0 of the boundary coordinates (expanding at the last
    /// time, contracting at the first), then the size of their midpoints.
    miss: f64,
    mid: f64,
}

/// Orbit search inside a tube. `forward[k]` is the chart at time `k+1`,
/// `backward[k]` the chart at time `-(k+1)`.
pub(crate) struct Localizer<'a> {
    f: &'a MapSpec,
    origin: Vec<Hp>,
    g0: Mat,
    forward: Vec<Slot>,
    backward: Vec<Slot>,
    /// Closing condition for periodic orbits: `f^P(x) = x`.
    fixed_point: Option<IMat>,
    resolve: f64,
    max_cells: usize,
}

/// Rounding slack added per iterate for the 512-bit center images.
const HP_SLACK: f64 = 1e-120;

impl<'a> Localizer<'a> {
    /// `rects[origin]` is time 0; earlier rectangles are reached with `f^{-1}`.
    pub fn new(f: &'a MapSpec, rects: &[Rectangle], origin: usize, cfg: &TubeConfig) -> Result<Self> {
        let slot = |r: &Rectangle| -> Result<Slot> {
            Ok(Slot {
                y: r.center.iter().map(|&v| Hp::from_f64(v)).collect(),
                ginv: linalg::verified_inverse(&r.frame)?,
            })
        };
        let forward = rects[origin + 1..].iter().map(slot).collect::<Result<_>>()?;
        let backward = rects[..origin].iter().rev().map(slot).collect::<Result<Vec<_>>>()?;
        if !backward.is_empty() && !f.is_invertible() {
            return Err(Error::NotInvertible);
        }
        let r0 = &rects[origin];
        Ok(Localizer {
            f,
            origin: r0.center.iter().map(|&v| Hp::from_f64(v)).collect(),
            g0: r0.frame.clone(),
            forward,
            backward,
            fixed_point: None,
            resolve: cfg.resolve,
            max_cells: cfg.max_cells,
        })
    }

    /// Periodic search: the last forward chart is time 0 again and the image
    /// at that time must return to the starting point.
    pub fn periodic(f: &'a MapSpec, rects: &[Rectangle], cfg: &TubeConfig) -> Result<Self> {
        let mut cyc = rects.to_vec();
        cyc.push(rects[0].clone());
        let mut loc = Localizer::new(f, &cyc, 0, cfg)?;
        loc.fixed_point = Some(linalg::verified_inverse(&rects[0].frame)?);
        Ok(loc)
    }

    fn center(&self, t: &[Hp]) -> Vec<Hp> {
        let n = t.len();
        (0..n).map(|i| (0..n).fold(self.origin[i].clone(), |acc, d| acc + t[d].mul_f64(self.g0[i][d]))).collect()
    }

    /// Chart coordinates at `slot` of the image `c + p · diag(h) · [-1,1]^n`,
    /// one candidate per integer translate on the torus. `None` when the image
    /// is too wide for translates to be told apart.
    fn chart(&self, slot: &Slot, c: &[Hp], p: &IMat, h: &[f64], err: f64) -> (Option<Vec<Vec<Interval>>>, IMat) {
        let n = h.len();
        let hz: Vec<Interval> = h.iter().map(|&w| Interval::sym(w)).collect();
        let gp = slot.ginv.mul(p);
        let torus = self.f.space() == Space::Torus;
        if torus && p.mul_vec(&hz).iter().any(|iv| iv.mag() + err >= 0.25) {
            return (None, gp);
        }
        let d: Vec<Interval> = c
            .iter()
            .zip(&slot.y)
            .map(|(a, b)| {
                let diff = a - b;
                let diff = if torus { diff.wrap_centered() } else { diff };
                hp_interval(&diff) + Interval::sym(err)
            })
            .collect();
        let spread = gp.mul_vec(&hz);
        let shifts = if torus { 3usize.pow(n as u32) } else { 1 };
        let out = (0..shifts)
            .map(|mut code| {
                let shifted: Vec<Interval> = d
                    .iter()
                    .map(|iv| {
                        let s = if torus { (code % 3) as f64 - 1.0 } else { 0.0 };
                        code /= 3;
                        iv.add_f64(s)
                    })
                    .collect();
                slot.ginv.mul_vec(&shifted).into_iter().zip(&spread).map(|(a, &b)| a + b).collect()
            })
            .collect();
        (Some(out), gp)
    }

    /// `None` when some image provably misses its rectangle.
    fn evaluate(&self, cell: &Cell) -> Result<Option<Eval>> {
        let n = cell.h.len();
        let x0 = self.center(&cell.t);
        let mut width: Vec<f64> = cell.h.clone();
        let mut miss = 0.0f64;
        let mut mid = 0.0f64;
        let mut aim = |iv: Interval| {
            miss += if iv.contains(0.0) { 0.0 } else { iv.mig() };
            mid += iv.mid().abs();
        };
        if self.backward.is_empty() && self.fixed_point.is_none() {
            for d in 1..n {
                aim(Interval::new(cell.t[d].to_f64() - cell.h[d], cell.t[d].to_f64() + cell.h[d]));
            }
        }
        let meets = |z: &Vec<Interval>| z.iter().all(|iv| iv.hi >= -1.0 && iv.lo <= 1.0);
        for (dir, slots) in [(Direction::Forward, &self.forward), (Direction::Inverse, &self.backward)] {
            let mut c = x0.clone();
            let mut p = IMat::from_rows(&self.g0);
            let mut err = 0.0f64;
            let last = slots.len();
            let hz: Vec<Interval> = cell.h.iter().map(|&w| Interval::sym(w)).collect();
            for (k, slot) in slots.iter().enumerate() {
                let xbox: Vec<Interval> =
                    c.iter().zip(p.mul_vec(&hz)).map(|(a, dv)| hp_interval(a) + dv + Interval::sym(err)).collect();
                let jac = self.f.jacobian_box(dir, &xbox)?;
                let lip = (0..n).map(|i| jac.row_abs_sum(i)).fold(0.0, f64::max);
                c = self.f.eval_hp(dir, &c)?;
                p = jac.mul(&p);
                err = err * lip + HP_SLACK;
                let (zs, gp) = self.chart(slot, &c, &p, &cell.h, err);
                if let Some(zs) = zs {
                    match zs.iter().find(|z| meets(z)) {
                        Some(z) if k + 1 == last && self.fixed_point.is_none() => match dir {
                            Direction::Forward => aim(z[0]),
                            Direction::Inverse => z[1..].iter().for_each(|&iv| aim(iv)),
                        },
                        Some(_) => {}
                        None => return Ok(None),
                    }
                }
                for (d, w) in width.iter_mut().enumerate() {
                    let col: f64 = (0..n).map(|i| gp.get(i, d).mag()).sum();
                    *w = w.max(col * cell.h[d]);
                }
                if k + 1 == last && dir == Direction::Forward {
                    if let Some(ginv0) = &self.fixed_point {
                        // f^P(x) - x in the time-0 chart must contain 0
                        let g0i = IMat::from_rows(&self.g0);
                        let home = Slot { y: x0.clone(), ginv: ginv0.clone() };
                        if let (Some(zs), _) = self.chart(&home, &c, &p.sub(&g0i), &cell.h, err) {
                            if !zs.iter().any(|z| z.iter().all(|iv| iv.contains(0.0))) {
                                return Ok(None);
                            }
                        }
                    }
                }
            }
        }
        Ok(Some(Eval { width, miss, mid }))
    }

    /// Depth-first bisection; returns the center of the first resolved cell.
    pub fn search(&self) -> Result<Localized> {
        let n = self.g0.len();
        let root = Cell { t: vec![Hp::zero(); n], h: vec![1.0; n], depth: 0 };
        let mut stack: Vec<(Cell, Eval)> = Vec::new();
        let mut evals = 0usize;
        let mut deepest = 0usize;
        if let Some(e) = self.evaluate(&root)? {
            stack.push((root, e));
        }
        evals += 1;
        while let Some((cell, ev)) = stack.pop() {
            deepest = deepest.max(cell.depth);
            let (axis, wmax) =
                ev.width.iter().enumerate().fold((0, 0.0), |acc, (d, &w)| if w > acc.1 { (d, w) } else { acc });
            if wmax < self.resolve {
                let center = self.center(&cell.t);
                let radius: Vec<f64> =
                    (0..n).map(|i| (0..n).map(|d| self.g0[i][d].abs() * cell.h[d]).sum::<f64>()).collect();
                return Ok(Localized { center, radius, depth: cell.depth, evaluations: evals });
            }
            if evals >= self.max_cells {
                break;
            }
            let mut kids = Vec::with_capacity(2);
            for sign in [-1i64, 1] {
                let mut h = cell.h.clone();
                h[axis] *= 0.5;
                let mut t = cell.t.clone();
                t[axis] = &t[axis] + &Hp::from_f64(h[axis]).mul_int(sign);
                let kid = Cell { t, h, depth: cell.depth + 1 };
                evals += 1;
                if let Some(e) = self.evaluate(&kid)? {
                    kids.push((kid, e));
                }
            }
            // child nearest the boundary targets on top
            kids.sort_by(|a, b| b.1.miss.total_cmp(&a.1.miss).then(b.1.mid.total_cmp(&a.1.mid)));
            stack.extend(kids);
        }
        Err(Error::NoSurvivingCell { depth: deepest })
    }
}

pub(crate) struct Localized {
    pub center: Vec<Hp>,
    pub radius: Vec<f64>,
    pub depth: usize,
    pub evaluations: usize,
}
