//! Pseudo-orbits, itineraries, finite-window and periodic shadowing, and
//! splicing of orbit segments into one periodic pseudo-orbit.
//!
//! Shadows are found inside a tube of eigen-aligned rectangles built around
//! the pseudo-orbit itself. Every consecutive pair of rectangles carries a
//! covering certificate, so a true orbit through the whole tube exists; it is
//! then located by bisection with 512-bit cell centers.

use crate::dynamics::{Direction, MapSpec};
use crate::error::{Error, Result};
use crate::geometry::{point_distance, Space};
use crate::hp::Hp;
use crate::interval::Interval;
use crate::linalg;
use crate::transition::TransitionGraph;
use crate::tube::{build_tube, Localizer, TubeConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// How each step of a generated pseudo-orbit is perturbed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PerturbMode {
    RoundToGrid { m: u32 },
    UniformNoise { seed: u64 },
    Drift { direction: Vec<f64> },
}

/// Points `y_k` for `k = start, start+1, ...` with every step defect below
/// `delta`. Periodic orbits start at 0 and store whole periods.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoOrbit {
    pub map_id: String,
    pub space: Space,
    pub start: i64,
    pub points: Vec<Vec<f64>>,
    pub delta: f64,
    pub periodic: Option<usize>,
}

impl PseudoOrbit {
    pub fn new(f: &MapSpec, start: i64, points: Vec<Vec<f64>>, delta: f64, periodic: Option<usize>) -> Result<Self> {
        let p = PseudoOrbit { map_id: f.descriptor(), space: f.space(), start, points, delta, periodic };
        p.validate(f)?;
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Last time index.
    pub fn end(&self) -> i64 {
        self.start + self.points.len() as i64 - 1
    }

    pub fn at(&self, k: i64) -> Option<&[f64]> {
        usize::try_from(k - self.start).ok().and_then(|i| self.points.get(i)).map(|v| v.as_slice())
    }

    /// Step defects `dist(f(y_k), y_{k+1})`, including the wrap step when periodic.
    pub fn defects(&self, f: &MapSpec) -> Result<Vec<f64>> {
        let len = self.points.len();
        let steps = if self.periodic.is_some() { len } else { len.saturating_sub(1) };
        (0..steps)
            .map(|k| {
                let fy = f.eval_point(Direction::Forward, &self.points[k])?;
                Ok(point_distance(self.space, &fy, &self.points[(k + 1) % len]))
            })
            .collect()
    }

    pub fn max_defect(&self, f: &MapSpec) -> Result<f64> {
        Ok(self.defects(f)?.into_iter().fold(0.0, f64::max))
    }

    pub fn validate(&self, f: &MapSpec) -> Result<()> {
        if self.map_id != f.descriptor() {
            return Err(Error::InvalidInput(format!(
                "pseudo-orbit is for '{}', not '{}'",
                self.map_id,
                f.descriptor()
            )));
        }
        if self.space != f.space() {
            return Err(Error::InvalidInput("pseudo-orbit space does not match the map".into()));
        }
        if self.points.is_empty() || self.start > 0 || self.end() < 0 {
            return Err(Error::InvalidInput("pseudo-orbit window must contain time 0".into()));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidInput(format!("delta = {} is not a nonnegative number", self.delta)));
        }
        for y in &self.points {
            if y.len() != f.dim() || !f.space().contains(y) {
                return Err(Error::InvalidInput(format!("point {y:?} is not in the phase space")));
            }
        }
        if let Some(p) = self.periodic {
            if p == 0 || self.start != 0 || self.points.len() % p != 0 {
                return Err(Error::InvalidInput(format!("period {p} must divide the stored length and start at 0")));
            }
        }
        if self.start < 0 && !f.is_invertible() {
            return Err(Error::NotInvertible);
        }
        for (k, d) in self.defects(f)?.into_iter().enumerate() {
            if !(d < self.delta || (self.delta == 0.0 && d == 0.0)) {
                return Err(Error::InvalidInput(format!(
                    "step {} has defect {d:e} >= delta {:e}",
                    self.start + k as i64,
                    self.delta
                )));
            }
        }
        Ok(())
    }

    /// Same points restricted to the window `[lo, hi]`.
    pub fn window(&self, lo: i64, hi: i64) -> Result<PseudoOrbit> {
        if lo < self.start || hi > self.end() || lo > 0 || hi < 0 {
            return Err(Error::InvalidInput(format!(
                "window [{lo}, {hi}] not inside [{}, {}]",
                self.start,
                self.end()
            )));
        }
        let a = (lo - self.start) as usize;
        let b = (hi - self.start) as usize;
        Ok(PseudoOrbit { points: self.points[a..=b].to_vec(), start: lo, periodic: None, ..self.clone() })
    }
}

fn reduce_into(space: Space, p: &mut [f64]) {
    for v in p.iter_mut() {
        *v = match space {
            Space::Torus => crate::geometry::wrap01(*v),
            Space::Cube => v.clamp(0.0, 1.0),
        };
    }
}

fn perturb(space: Space, mode: &PerturbMode, delta: f64, rng: &mut ChaCha8Rng, base: &[f64]) -> Vec<f64> {
    let n = base.len();
    let r = delta * (1.0 - 1e-6);
    let mut q: Vec<f64> = match mode {
        PerturbMode::RoundToGrid { m } => {
            let s = (1u64 << m) as f64;
            base.iter().map(|v| (v * s).round() / s).collect()
        }
        PerturbMode::UniformNoise { .. } => loop {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if linalg::norm(&v) <= 1.0 {
                break base.iter().zip(&v).map(|(b, d)| b + r * d).collect();
            }
        },
        PerturbMode::Drift { direction } => {
            let len = linalg::norm(direction);
            base.iter().zip(direction).map(|(b, d)| b + r * d / len).collect()
        }
    };
    reduce_into(space, &mut q);
    q
}

/// Generates `y_0 = x0` and `N` perturbed steps forward (and backward when
/// `two_sided`). A perturbation that would reach `delta` is dropped.
pub fn generate_pseudo_orbit(
    f: &MapSpec,
    x0: &[f64],
    delta: f64,
    steps: usize,
    mode: &PerturbMode,
    two_sided: bool,
) -> Result<PseudoOrbit> {
    let space = f.space();
    if x0.len() != f.dim() || !x0.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidInput("x0 has the wrong dimension".into()));
    }
    if space == Space::Cube && !space.contains(x0) {
        return Err(Error::InvalidInput("x0 is outside the unit cube".into()));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidInput(format!("delta = {delta} is not a nonnegative number")));
    }
    if two_sided && !f.is_invertible() {
        return Err(Error::NotInvertible);
    }
    if let PerturbMode::Drift { direction } = mode {
        if direction.len() != f.dim() || !(linalg::norm(direction) > 0.0) {
            return Err(Error::InvalidInput("drift direction must be a nonzero vector of dimension n".into()));
        }
    }
    let seed = if let PerturbMode::UniformNoise { seed } = mode { *seed } else { 0 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y0 = space.reduce(x0);
    let mut fwd = vec![y0.clone()];
    for _ in 0..steps {
        let base = f.eval_point(Direction::Forward, fwd.last().unwrap())?;
        let q = perturb(space, mode, delta, &mut rng, &base);
        fwd.push(if point_distance(space, &base, &q) < delta { q } else { base });
    }
    let mut back: Vec<Vec<f64>> = Vec::new();
    if two_sided {
        let mut next = y0;
        for _ in 0..steps {
            let z = f.eval_point(Direction::Inverse, &next)?;
            let q = perturb(space, mode, delta, &mut rng, &z);
            let mut pick = z.clone();
            // shrink the perturbation until the forward step meets delta
            let step: Vec<f64> = q
                .iter()
                .zip(&z)
                .map(|(a, b)| if space == Space::Torus { crate::geometry::wrap_centered(a - b) } else { a - b })
                .collect();
            for t in 0..60 {
                let scale = 0.5f64.powi(t);
                let mut cand: Vec<f64> = z.iter().zip(&step).map(|(a, s)| a + scale * s).collect();
                reduce_into(space, &mut cand);
                let fc = f.eval_point(Direction::Forward, &cand)?;
                if point_distance(space, &fc, &next) < delta {
                    pick = cand;
                    break;
                }
            }
            back.push(pick.clone());
            next = pick;
        }
    }
    back.reverse();
    let start = -(back.len() as i64);
    back.extend(fwd);
    let mut p = PseudoOrbit { map_id: f.descriptor(), space, start, points: back, delta, periodic: None };
    let worst = p.max_defect(f)?;
    if delta == 0.0 && worst > 0.0 {
        // inverse steps are exact only up to rounding
        p.delta = worst.next_up();
    }
    p.validate(f)?;
    Ok(p)
}

/// Cube indices `i_k` with `y_k ∈ C_{i_k}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Itinerary {
    pub start: i64,
    pub indices: Vec<usize>,
}

fn itinerary_indices(p: &PseudoOrbit, g: &TransitionGraph) -> Result<Itinerary> {
    if g.map_id() != p.map_id {
        return Err(Error::InvalidInput("graph and pseudo-orbit are for different maps".into()));
    }
    let sub = g.subdivision();
    if sub.dim() != p.points[0].len() || sub.space() != p.space {
        return Err(Error::InvalidInput("subdivision does not match the pseudo-orbit".into()));
    }
    Ok(Itinerary { start: p.start, indices: p.points.iter().map(|y| sub.cube_of_point(y)).collect() })
}

/// Itinerary of `p`; requires `p.delta` below the graph's δ bound and checks
/// that no consecutive pair is a certified-empty edge.
pub fn itinerary(p: &PseudoOrbit, g: &TransitionGraph) -> Result<Itinerary> {
    let bound = g.delta_bound(false)?;
    if !(p.delta < bound) {
        return Err(Error::DeltaTooLarge { delta: p.delta, bound });
    }
    let it = itinerary_indices(p, g)?;
    let len = it.indices.len();
    let steps = if p.periodic.is_some() { len } else { len - 1 };
    for k in 0..steps {
        let (a, b) = (it.indices[k], it.indices[(k + 1) % len]);
        if g.edge(a, b).is_empty() {
            return Err(Error::BrokenChain { step: k, from: a, to: b });
        }
    }
    Ok(it)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShadowConfig {
    pub tube: TubeConfig,
    /// Enforce `delta < delta_bound` before shadowing.
    pub require_delta_bound: bool,
    pub fp_tol: f64,
}

impl Default for ShadowConfig {
    fn default() -> Self {
        ShadowConfig { tube: TubeConfig::default(), require_delta_bound: true, fp_tol: 1e-9 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShadowResult {
    pub map_id: String,
    /// `x*` rounded to f64; `point_hex` is the full 512-bit value.
    pub point: Vec<f64>,
    pub point_hex: Vec<String>,
    pub window: [i64; 2],
    pub eps: f64,
    pub eps_achieved: f64,
    pub argmax_k: i64,
    pub chi: f64,
    pub surviving_box: Vec<Interval>,
    pub periodic: Option<usize>,
    pub min_period: Option<usize>,
    pub fp_residual: Option<f64>,
    pub itinerary: Vec<usize>,
    pub depth: usize,
    pub evaluations: usize,
    pub tube_inflation: f64,
}

impl ShadowResult {
    pub fn point_hp(&self) -> Result<Vec<Hp>> {
        self.point_hex
            .iter()
            .map(|s| Hp::from_hex(s).ok_or_else(|| Error::InvalidInput(format!("bad point encoding '{s}'"))))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShadowReport {
    pub ok: bool,
    pub max_err: f64,
    pub argmax_k: i64,
    /// `dist(f^k(x), y_k)` for every `k` of the window.
    pub errors: Vec<f64>,
}

/// `f^k(x)` for every time of the window, reduced, computed at 512 bits.
pub fn orbit_hp(f: &MapSpec, x: &[Hp], start: i64, end: i64) -> Result<Vec<Vec<Hp>>> {
    let reduce = |v: Vec<Hp>| -> Vec<Hp> {
        if f.space() == Space::Torus {
            v.iter().map(|c| c.frac()).collect()
        } else {
            v
        }
    };
    let x = reduce(x.to_vec());
    let mut fwd = vec![x.clone()];
    for _ in 0..end.max(0) {
        let next = reduce(f.eval_hp(Direction::Forward, fwd.last().unwrap())?);
        fwd.push(next);
    }
    let mut back = Vec::new();
    let mut cur = x;
    for _ in 0..(-start).max(0) {
        cur = reduce(f.eval_hp(Direction::Inverse, &cur)?);
        back.push(cur.clone());
    }
    back.reverse();
    back.extend(fwd);
    Ok(back)
}

/// Ground-truth check: iterates `x` directly and measures the distance to
/// every `y_k`.
pub fn verify_shadow(f: &MapSpec, x: &[Hp], p: &PseudoOrbit, eps: f64) -> Result<ShadowReport> {
    if x.len() != f.dim() {
        return Err(Error::InvalidInput("shadow point has the wrong dimension".into()));
    }
    let orbit = orbit_hp(f, x, p.start, p.end())?;
    let errors: Vec<f64> =
        orbit.iter().zip(&p.points).map(|(o, y)| point_distance(f.space(), &crate::hp::to_f64_vec(o), y)).collect();
    let (arg, max_err) =
        errors.iter().enumerate().fold((0, 0.0f64), |acc, (i, &e)| if e > acc.1 { (i, e) } else { acc });
    Ok(ShadowReport { ok: max_err < eps, max_err, argmax_k: p.start + arg as i64, errors })
}

pub fn verify_shadow_f64(f: &MapSpec, x: &[f64], p: &PseudoOrbit, eps: f64) -> Result<ShadowReport> {
    verify_shadow(f, &crate::hp::hp_vec(x), p, eps)
}

fn check_window(f: &MapSpec, p: &PseudoOrbit, g: &TransitionGraph, cfg: &ShadowConfig) -> Result<Itinerary> {
    p.validate(f)?;
    if g.map_id() != f.descriptor() {
        return Err(Error::InvalidInput("graph was built for a different map".into()));
    }
    if cfg.require_delta_bound {
        itinerary(p, g)
    } else {
        itinerary_indices(p, g)
    }
}

fn finish(
    f: &MapSpec,
    x: Vec<Hp>,
    radius: &[f64],
    p: &PseudoOrbit,
    g: &TransitionGraph,
    eps: f64,
    it: Itinerary,
    depth: usize,
    evaluations: usize,
    inflation: f64,
) -> Result<ShadowResult> {
    let report = verify_shadow(f, &x, p, eps)?;
    if !report.ok {
        return Err(Error::NotCertified(format!(
            "located orbit reaches error {:e} at k = {}, not below eps = {eps:e}",
            report.max_err, report.argmax_k
        )));
    }
    let x = if f.space() == Space::Torus { x.iter().map(|c| c.frac()).collect() } else { x };
    let point = crate::hp::to_f64_vec(&x);
    let surviving_box = point
        .iter()
        .zip(radius)
        .map(|(&c, &r)| {
            let pad = c.abs() * 4.5e-16 + 1e-300;
            Interval::new(c - r - pad, c + r + pad)
        })
        .collect();
    Ok(ShadowResult {
        map_id: f.descriptor(),
        point,
        point_hex: x.iter().map(|c| c.to_hex()).collect(),
        window: [p.start, p.end()],
        eps,
        eps_achieved: report.max_err,
        argmax_k: report.argmax_k,
        chi: g.subdivision().chi(),
        surviving_box,
        periodic: None,
        min_period: None,
        fp_residual: None,
        itinerary: it.indices,
        depth,
        evaluations,
        tube_inflation: inflation,
    })
}

/// Finds a true orbit `f^k(x*)` within `eps` of `y_k` over the whole window.
pub fn shadow(f: &MapSpec, p: &PseudoOrbit, g: &TransitionGraph, eps: f64, cfg: &ShadowConfig) -> Result<ShadowResult> {
    let it = check_window(f, p, g, cfg)?;
    if p.points.len() < 2 {
        return Err(Error::InvalidInput("shadowing needs at least one step".into()));
    }
    let tube = build_tube(f, &p.points, false, &cfg.tube)?;
    let loc = Localizer::new(f, &tube.rects, (-p.start) as usize, &cfg.tube)?;
    let found = loc.search()?;
    finish(f, found.center, &found.radius, p, g, eps, it, found.depth, found.evaluations, tube.inflation)
}

fn hp_diff(space: Space, a: &[Hp], b: &[Hp]) -> Vec<Hp> {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            if space == Space::Torus {
                d.wrap_centered()
            } else {
                d
            }
        })
        .collect()
}

fn hp_norm(v: &[Hp]) -> f64 {
    crate::hp::to_f64_vec(v).iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn return_gap(f: &MapSpec, x: &[Hp], q: usize) -> Result<f64> {
    let mut c = x.to_vec();
    for _ in 0..q {
        c = f.eval_hp(Direction::Forward, &c)?;
    }
    Ok(hp_norm(&hp_diff(f.space(), &c, x)))
}

/// Newton iteration on `f^P(x) - x` at 512 bits with the f64 Jacobian.
fn polish(f: &MapSpec, x: Vec<Hp>, period: usize) -> Result<Vec<Hp>> {
    let n = x.len();
    let mut x = x;
    let mut best = (f64::INFINITY, x.clone());
    for _ in 0..40 {
        let mut c = x.clone();
        let mut jac = linalg::identity(n);
        for _ in 0..period {
            let jk = f.jacobian(Direction::Forward, &crate::hp::to_f64_vec(&c))?;
            jac = linalg::mat_mul(&jk, &jac);
            c = f.eval_hp(Direction::Forward, &c)?;
        }
        let g = hp_diff(f.space(), &c, &x);
        let res = hp_norm(&g);
        if res < best.0 {
            best = (res, x.clone());
        } else {
            break;
        }
        if res < 1e-60 {
            break;
        }
        for (i, row) in jac.iter_mut().enumerate() {
            row[i] -= 1.0;
        }
        let inv = linalg::inverse(&jac)?;
        // refine the step itself so it is accurate beyond f64
        let step = linalg::mat_vec(&inv, &crate::hp::to_f64_vec(&g));
        x = x.iter().zip(&step).map(|(a, s)| a - &Hp::from_f64(*s)).collect();
    }
    Ok(best.1)
}

/// Finds a periodic orbit of period `P` (a fixed point of `f^P`) within
/// `eps` of a periodic pseudo-orbit.
pub fn periodic_shadow(
    f: &MapSpec,
    p: &PseudoOrbit,
    g: &TransitionGraph,
    eps: f64,
    cfg: &ShadowConfig,
) -> Result<ShadowResult> {
    let period = p.periodic.ok_or_else(|| Error::InvalidInput("pseudo-orbit is not periodic".into()))?;
    let it = check_window(f, p, g, cfg)?;
    let tube = build_tube(f, &p.points[..period], true, &cfg.tube)?;
    let loc = Localizer::periodic(f, &tube.rects, &cfg.tube)?;
    let found = loc.search()?;
    let x = polish(f, found.center, period)?;
    let residual = return_gap(f, &x, period)?;
    if !(residual <= cfg.fp_tol) {
        return Err(Error::FixedPointTolUnreached { residual, tol: cfg.fp_tol });
    }
    let mut min_period = period;
    for q in 1..period {
        if period % q == 0 && return_gap(f, &x, q)? <= cfg.fp_tol {
            min_period = q;
            break;
        }
    }
    let mut r = finish(f, x, &found.radius, p, g, eps, it, found.depth, found.evaluations, tube.inflation)?;
    r.periodic = Some(period);
    r.min_period = Some(min_period);
    r.fp_residual = Some(residual);
    Ok(r)
}

/// A periodic pseudo-orbit through several orbit segments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Splice {
    pub orbit: PseudoOrbit,
    /// Index of each segment's first point within `orbit.points`.
    pub offsets: Vec<usize>,
    /// Cube-center waypoints inserted after each segment.
    pub waypoints: Vec<usize>,
}

/// Joins true-orbit segments cyclically through cube paths of at most `gap`
/// edges, using cube centers as waypoints.
pub fn specification_splice(
    f: &MapSpec,
    g: &TransitionGraph,
    segments: &[Vec<Vec<f64>>],
    gap: usize,
) -> Result<Splice> {
    if segments.is_empty() || segments.iter().any(|s| s.is_empty()) {
        return Err(Error::InvalidInput("segments must be nonempty".into()));
    }
    if gap == 0 {
        return Err(Error::InvalidInput("gap must be at least 1".into()));
    }
    if g.map_id() != f.descriptor() {
        return Err(Error::InvalidInput("graph was built for a different map".into()));
    }
    let sub = g.subdivision();
    let space = f.space();
    for (i, s) in segments.iter().enumerate() {
        for y in s {
            if y.len() != f.dim() || !space.contains(y) {
                return Err(Error::InvalidInput(format!("segment {i}: point {y:?} is not in the phase space")));
            }
        }
        for (k, w) in s.windows(2).enumerate() {
            let d = point_distance(space, &f.eval_point(Direction::Forward, &w[0])?, &w[1]);
            if d > 1e-9 {
                return Err(Error::InvalidInput(format!("segment {i} is not an orbit at step {k} (defect {d:e})")));
            }
        }
    }
    let mut points = Vec::new();
    let mut offsets = Vec::new();
    let mut waypoints = Vec::new();
    for (i, s) in segments.iter().enumerate() {
        let next = &segments[(i + 1) % segments.len()];
        let from = sub.cube_of_point(&f.eval_point(Direction::Forward, s.last().unwrap())?);
        let to = sub.cube_of_point(&next[0]);
        let path = g.find_path(from, to, gap)?;
        offsets.push(points.len());
        points.extend(s.iter().cloned());
        waypoints.push(path.len() - 1);
        points.extend(path[..path.len() - 1].iter().map(|&c| sub.cube_center(c)));
    }
    let period = points.len();
    let mut orbit = PseudoOrbit { map_id: f.descriptor(), space, start: 0, points, delta: 0.0, periodic: Some(period) };
    let worst = orbit.max_defect(f)?;
    orbit.delta = if worst > 0.0 { (worst * (1.0 + 1e-12)).next_up() } else { 0.0 };
    orbit.validate(f)?;
    Ok(Splice { orbit, offsets, waypoints })
}

/// CSV rows `k,y_1..y_n[,x_1..x_n,err]`.
pub fn orbit_csv(f: &MapSpec, p: &PseudoOrbit, x: Option<&[Hp]>) -> Result<String> {
    let n = f.dim();
    let mut out = String::from("k");
    for d in 1..=n {
        write!(out, ",y_{d}").unwrap();
    }
    let orbit = match x {
        Some(x) => {
            for d in 1..=n {
                write!(out, ",x_{d}").unwrap();
            }
            out.push_str(",err");
            Some(orbit_hp(f, x, p.start, p.end())?)
        }
        None => None,
    };
    out.push('\n');
    for (i, y) in p.points.iter().enumerate() {
        write!(out, "{}", p.start + i as i64).unwrap();
        for v in y {
            write!(out, ",{v:?}").unwrap();
        }
        if let Some(o) = &orbit {
            let xf = crate::hp::to_f64_vec(&o[i]);
            for v in &xf {
                write!(out, ",{v:?}").unwrap();
            }
            write!(out, ",{:?}", point_distance(f.space(), &xf, y)).unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}
