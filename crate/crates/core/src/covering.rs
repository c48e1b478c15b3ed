//! Covering relations between rectangles, their robustness margin, chain
//! composition and the chained property on a subdivision.

use crate::dynamics::{Direction, MapSpec};
use crate::error::{Error, Result};
use crate::geometry::{AxisBox, Space};
use crate::interval::{IMat, Interval};
use crate::linalg::{self, Mat};
use crate::transition::TransitionGraph;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Parallelepiped `center + frame · [-1,1]^n`. Columns of `frame` are the
/// half-edge vectors; the faces `z[exit_axis] = ±orientation` are `R^±`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    pub center: Vec<f64>,
    pub frame: Mat,
    pub exit_axis: usize,
    pub orientation: i8,
}

impl Rectangle {
    pub fn new(center: Vec<f64>, frame: Mat, exit_axis: usize, orientation: i8) -> Result<Self> {
        let n = center.len();
        if n == 0 || frame.len() != n || frame.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("rectangle frame must be n x n".into()));
        }
        if exit_axis >= n || !(orientation == 1 || orientation == -1) {
            return Err(Error::InvalidInput("exit axis out of range or orientation not ±1".into()));
        }
        if center.iter().chain(frame.iter().flatten()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("rectangle has non-finite entries".into()));
        }
        let det = linalg::det(&frame);
        let scale: f64 = frame.iter().map(|r| linalg::norm(r)).product();
        if det == 0.0 || det.abs() <= 1e-12 * scale {
            return Err(Error::InvalidInput("degenerate rectangle".into()));
        }
        Ok(Rectangle { center, frame, exit_axis, orientation })
    }

    /// Axis-aligned rectangle filling `b`.
    pub fn from_box(b: &AxisBox, exit_axis: usize, orientation: i8) -> Result<Self> {
        let half: Vec<f64> = b.widths().iter().map(|w| 0.5 * w).collect();
        Rectangle::new(b.center(), linalg::diag(&half), exit_axis, orientation)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn point(&self, z: &[f64]) -> Vec<f64> {
        linalg::mat_vec(&self.frame, z).iter().zip(&self.center).map(|(a, c)| a + c).collect()
    }

    /// Outward enclosure of `center + frame · z` for an interval vector `z`.
    pub fn image_of(&self, z: &[Interval]) -> Vec<Interval> {
        IMat::from_rows(&self.frame).mul_vec(z).into_iter().zip(&self.center).map(|(v, &c)| v.add_f64(c)).collect()
    }

    /// Axis-aligned hull (the rectangle's `Box`).
    pub fn bounding_box(&self) -> Vec<Interval> {
        self.image_of(&vec![Interval::UNIT_SYM; self.dim()])
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match linalg::inverse(&self.frame) {
            Ok(g) => {
                let d: Vec<f64> = x.iter().zip(&self.center).map(|(a, c)| a - c).collect();
                linalg::mat_vec(&g, &d).iter().all(|z| z.abs() <= 1.0)
            }
            Err(_) => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoveringConfig {
    /// Dyadic strip depth along the source exit axis.
    pub depth: u32,
    /// Minimal slack (length units) for every strict inequality.
    pub min_margin: f64,
}

impl Default for CoveringConfig {
    fn default() -> Self {
        CoveringConfig { depth: 6, min_margin: 1e-9 }
    }
}

/// Witness that `f` maps the strip `H` of `source` across `target`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringCertificate {
    pub map_id: String,
    pub source: Rectangle,
    pub target: Rectangle,
    /// Strip `H` as a range of the source exit coordinate within `[-1, 1]`.
    pub h_range: [f64; 2],
    pub exit_margin: f64,
    pub confinement_margin: f64,
    /// `+1` when `f(H^+)` leaves through `R^+` of the target.
    pub orientation: i8,
    /// Integer lift used on the torus (zero on the cube).
    pub shift: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum CoveringOutcome {
    Certified(CoveringCertificate),
    Inconclusive { reason: String },
}

impl CoveringOutcome {
    pub fn certificate(&self) -> Option<&CoveringCertificate> {
        match self {
            CoveringOutcome::Certified(c) => Some(c),
            CoveringOutcome::Inconclusive { .. } => None,
        }
    }
}

/// `min(exit_margin, confinement_margin)`: any map within this sup distance
/// of `f` satisfies the same covering on the same strip.
pub fn certificate_margin(c: &CoveringCertificate) -> f64 {
    c.exit_margin.min(c.confinement_margin)
}

/// Data shared by every strip of one `source => target` check.
struct Pair {
    center: Vec<f64>,
    shift: Vec<f64>,
    frame: IMat,
    ginv: IMat,
    row_norm: Vec<f64>,
    affine: Option<AffineForm>,
}

struct AffineForm {
    a: IMat,
    b: Vec<f64>,
    /// `G^{-1} A F`
    lin: IMat,
    noise: Option<Vec<Interval>>,
}

impl Pair {
    fn new(f: &MapSpec, src: &Rectangle, dst: &Rectangle, shift: Option<&[f64]>) -> Result<Self> {
        let ginv = linalg::verified_inverse(&dst.frame)?;
        let row_norm = (0..dst.dim()).map(|i| ginv.row_abs_sum(i)).collect();
        let frame = IMat::from_rows(&src.frame);
        let shift = match shift {
            Some(k) => k.to_vec(),
            None if f.space() == Space::Cube => vec![0.0; src.dim()],
            None => {
                let y = f.lift(Direction::Forward, &src.center)?;
                y.iter().zip(&dst.center).map(|(a, c)| (a - c).round()).collect()
            }
        };
        let affine = f.affine_part().map(|(a, b, eta)| {
            let a = IMat::from_rows(&a);
            let lin = ginv.mul(&a).mul(&frame);
            let noise = (eta > 0.0).then(|| ginv.mul_vec(&vec![Interval::sym(eta); src.dim()]));
            AffineForm { a, b, lin, noise }
        });
        Ok(Pair { center: dst.center.clone(), shift, frame, ginv, row_norm, affine })
    }

    fn offset(&self, v: Vec<Interval>) -> Vec<Interval> {
        v.into_iter().zip(&self.center).zip(&self.shift).map(|((a, &c), &k)| a.add_f64(-c).add_f64(-k)).collect()
    }
}

enum StripCheck {
    Pass { exit_margin: f64, confinement_margin: f64, orientation: i8 },
    Fail(StripFail),
}

enum StripFail {
    FaceInside { axis: usize, at: f64, target_axis: usize },
    NoCrossing { target_axis: usize, slack: f64 },
    NotConfined { slack: f64 },
}

impl std::fmt::Display for StripFail {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StripFail::FaceInside { axis, at, target_axis } => {
                write!(f, "face z{axis}={at} does not leave target axis {target_axis}")
            }
            StripFail::NoCrossing { target_axis, slack } => {
                write!(f, "faces do not exit on opposite sides of target axis {target_axis} (slack {slack:.3e})")
            }
            StripFail::NotConfined { slack } => write!(f, "strip image not confined (slack {slack:.3e})"),
        }
    }
}

fn sub_mid(z: &[Interval]) -> (Vec<Interval>, Vec<Interval>) {
    let mid: Vec<Interval> = z.iter().map(|i| Interval::point(i.mid())).collect();
    let dev: Vec<Interval> = z.iter().zip(&mid).map(|(&a, &b)| a - b).collect();
    (mid, dev)
}

fn intersect_all(a: Vec<Interval>, b: &[Interval]) -> Vec<Interval> {
    a.into_iter().zip(b).map(|(x, &y)| x.intersect(y).unwrap_or(x)).collect()
}

/// Enclosure of the target chart coordinates of `f(src(z))` for `z` in `zbox`.
fn chart_image(f: &MapSpec, src: &Rectangle, pair: &Pair, zbox: &[Interval]) -> Result<Vec<Interval>> {
    let (zmid, dev) = sub_mid(zbox);
    let x0 = src.image_of(&zmid);
    let sum =
        |p: Vec<Interval>, q: Vec<Interval>| -> Vec<Interval> { p.into_iter().zip(q).map(|(a, b)| a + b).collect() };
    // affine part plus a bounded remainder
    let aff = pair.affine.as_ref().map(|af| {
        let ax0: Vec<Interval> = af.a.mul_vec(&x0).into_iter().zip(&af.b).map(|(v, &t)| v.add_f64(t)).collect();
        let out = sum(pair.ginv.mul_vec(&pair.offset(ax0)), af.lin.mul_vec(&dev));
        match &af.noise {
            Some(noise) => sum(out, noise.clone()),
            None => out,
        }
    });
    if let (Some(out), Some(AffineForm { noise: None, .. })) = (&aff, &pair.affine) {
        return Ok(out.clone());
    }
    let xbox = src.image_of(zbox);
    // mean value form
    let fx0 = f.eval_intervals(Direction::Forward, &x0)?;
    let jac = f.jacobian_box(Direction::Forward, &xbox)?;
    let lin = pair.ginv.mul(&jac).mul(&pair.frame);
    let mv = sum(pair.ginv.mul_vec(&pair.offset(fx0)), lin.mul_vec(&dev));
    // natural form
    let naive = pair.ginv.mul_vec(&pair.offset(f.eval_intervals(Direction::Forward, &xbox)?));
    let out = intersect_all(mv, &naive);
    Ok(match aff {
        Some(a) => intersect_all(out, &a),
        None => out,
    })
}

fn check_strip(
    f: &MapSpec,
    src: &Rectangle,
    dst: &Rectangle,
    pair: &Pair,
    h: [f64; 2],
    cfg: &CoveringConfig,
) -> Result<StripCheck> {
    let n = src.dim();
    let e = src.exit_axis;
    let te = dst.exit_axis;
    let mut zbox = vec![Interval::UNIT_SYM; n];
    zbox[e] = Interval::new(h[0], h[1]);
    let mut lo_face = zbox.clone();
    lo_face[e] = Interval::point(h[0]);
    let mut hi_face = zbox.clone();
    hi_face[e] = Interval::point(h[1]);
    let norm_e = pair.row_norm[te];
    let beyond_plus = |i: Interval| (i.lo - 1.0) / norm_e;
    let beyond_minus = |i: Interval| (-1.0 - i.hi) / norm_e;
    let ilo = chart_image(f, src, pair, &lo_face)?[te];
    if !(beyond_plus(ilo).max(beyond_minus(ilo)) >= cfg.min_margin) {
        return Ok(StripCheck::Fail(StripFail::FaceInside { axis: e, at: h[0], target_axis: te }));
    }
    let ihi = chart_image(f, src, pair, &hi_face)?[te];
    let strip = chart_image(f, src, pair, &zbox)?;
    let up = beyond_plus(ihi).min(beyond_minus(ilo));
    let down = beyond_plus(ilo).min(beyond_minus(ihi));
    let (exit_margin, hi_goes_plus) = if up >= down { (up, true) } else { (down, false) };
    if !(exit_margin >= cfg.min_margin) {
        return Ok(StripCheck::Fail(StripFail::NoCrossing { target_axis: te, slack: exit_margin }));
    }
    let mut confinement_margin = f64::INFINITY;
    for d in (0..n).filter(|&d| d != te) {
        let i = strip[d];
        let slack = (1.0 - i.hi).min(i.lo + 1.0) / pair.row_norm[d];
        confinement_margin = confinement_margin.min(slack);
    }
    if n == 1 {
        confinement_margin = exit_margin;
    }
    if !(confinement_margin >= cfg.min_margin) {
        return Ok(StripCheck::Fail(StripFail::NotConfined { slack: confinement_margin }));
    }
    let sign = if hi_goes_plus { 1 } else { -1 };
    Ok(StripCheck::Pass { exit_margin, confinement_margin, orientation: sign * src.orientation * dst.orientation })
}

/// Sufficient affine-chart test for a covering `src => dst`. Dyadic strips of
/// the source exit coordinate are tried in order of depth, then position.
pub fn check_covering(f: &MapSpec, src: &Rectangle, dst: &Rectangle, cfg: &CoveringConfig) -> Result<CoveringOutcome> {
    if src.dim() != f.dim() || dst.dim() != f.dim() {
        return Err(Error::InvalidInput("rectangle dimension does not match the map".into()));
    }
    let pair = Pair::new(f, src, dst, None)?;
    let mut last = None;
    for depth in 0..=cfg.depth {
        let count = 1u32 << depth;
        let step = 2.0 / count as f64;
        for k in 0..count {
            let h = [-1.0 + step * k as f64, -1.0 + step * (k + 1) as f64];
            match check_strip(f, src, dst, &pair, h, cfg)? {
                StripCheck::Pass { exit_margin, confinement_margin, orientation } => {
                    return Ok(CoveringOutcome::Certified(CoveringCertificate {
                        map_id: f.descriptor(),
                        source: src.clone(),
                        target: dst.clone(),
                        h_range: h,
                        exit_margin,
                        confinement_margin,
                        orientation,
                        shift: pair.shift.clone(),
                    }));
                }
                StripCheck::Fail(r) => last = Some(r),
            }
        }
    }
    let last = last.map(|r| r.to_string()).unwrap_or_default();
    Ok(CoveringOutcome::Inconclusive { reason: format!("no strip up to depth {} certified; last: {last}", cfg.depth) })
}

/// Re-checks a certificate from its stored data alone (same strip and lift).
/// Returns the recomputed certificate when the covering still holds.
pub fn recheck_certificate(f: &MapSpec, c: &CoveringCertificate, cfg: &CoveringConfig) -> Result<CoveringOutcome> {
    let src =
        Rectangle::new(c.source.center.clone(), c.source.frame.clone(), c.source.exit_axis, c.source.orientation)?;
    let dst =
        Rectangle::new(c.target.center.clone(), c.target.frame.clone(), c.target.exit_axis, c.target.orientation)?;
    if c.h_range[0] >= c.h_range[1] || c.h_range[0] < -1.0 || c.h_range[1] > 1.0 {
        return Err(Error::InvalidInput("strip range must be a subinterval of [-1, 1]".into()));
    }
    if c.shift.len() != src.dim() {
        return Err(Error::InvalidInput("certificate lift has the wrong dimension".into()));
    }
    let pair = Pair::new(f, &src, &dst, Some(&c.shift))?;
    Ok(match check_strip(f, &src, &dst, &pair, c.h_range, cfg)? {
        StripCheck::Pass { exit_margin, confinement_margin, orientation } => {
            CoveringOutcome::Certified(CoveringCertificate {
                map_id: f.descriptor(),
                exit_margin,
                confinement_margin,
                orientation,
                ..c.clone()
            })
        }
        StripCheck::Fail(r) => CoveringOutcome::Inconclusive { reason: r.to_string() },
    })
}

/// Endpoints of a validated chain of coverings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainValidity {
    pub length: usize,
    pub source: Rectangle,
    pub target: Rectangle,
}

/// Checks that each certificate's target is exactly the next one's source.
pub fn compose_chain(certs: &[CoveringCertificate]) -> Result<ChainValidity> {
    let first = certs.first().ok_or_else(|| Error::InvalidInput("empty chain".into()))?;
    for (k, w) in certs.windows(2).enumerate() {
        if w[0].target != w[1].source || w[0].map_id != w[1].map_id {
            return Err(Error::MismatchedChain { index: k });
        }
    }
    Ok(ChainValidity {
        length: certs.len(),
        source: first.source.clone(),
        target: certs.last().unwrap().target.clone(),
    })
}

/// Covering data for one graph edge; rectangles are referenced by cube index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeCertificate {
    pub from: usize,
    pub to: usize,
    pub h_range: [f64; 2],
    pub exit_margin: f64,
    pub confinement_margin: f64,
    pub orientation: i8,
    pub shift: Vec<f64>,
}

impl EdgeCertificate {
    fn from_cert(from: usize, to: usize, c: &CoveringCertificate) -> Self {
        EdgeCertificate {
            from,
            to,
            h_range: c.h_range,
            exit_margin: c.exit_margin,
            confinement_margin: c.confinement_margin,
            orientation: c.orientation,
            shift: c.shift.clone(),
        }
    }

    pub fn expand(&self, map_id: &str, rects: &[Rectangle]) -> CoveringCertificate {
        CoveringCertificate {
            map_id: map_id.to_string(),
            source: rects[self.from].clone(),
            target: rects[self.to].clone(),
            h_range: self.h_range,
            exit_margin: self.exit_margin,
            confinement_margin: self.confinement_margin,
            orientation: self.orientation,
            shift: self.shift.clone(),
        }
    }
}

/// Per-cube rectangles with a covering for every nonempty edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainedCertificate {
    pub map_id: String,
    pub n: usize,
    pub m: u32,
    pub space: Space,
    pub shape: String,
    pub rects: Vec<Rectangle>,
    pub edges: Vec<EdgeCertificate>,
}

impl ChainedCertificate {
    pub fn covering(&self, i: usize, j: usize) -> Option<CoveringCertificate> {
        self.edges
            .binary_search_by(|e| (e.from, e.to).cmp(&(i, j)))
            .ok()
            .map(|k| self.edges[k].expand(&self.map_id, &self.rects))
    }

    pub fn min_margin(&self) -> Option<f64> {
        self.edges.iter().map(|e| e.exit_margin.min(e.confinement_margin)).reduce(f64::min)
    }
}

/// Why no chained certificate was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureReport {
    pub map_id: String,
    pub n: usize,
    pub m: u32,
    pub space: Space,
    pub shapes_tried: Vec<String>,
    /// Shape whose full evaluation is reported below.
    pub shape: Option<String>,
    pub nonempty_edges: usize,
    pub failing: Vec<(usize, usize)>,
    pub rects: Vec<Rectangle>,
    pub certified: Vec<EdgeCertificate>,
    /// Coverings between edge-specific rectangles (one attempt per edge).
    pub local: Vec<CoveringCertificate>,
}

impl FailureReport {
    pub fn min_local_margin(&self) -> Option<f64> {
        self.local.iter().map(certificate_margin).reduce(f64::min)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ChainOutcome {
    Certified(ChainedCertificate),
    Failed(FailureReport),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainConfig {
    pub covering: CoveringConfig,
    pub ratios: Vec<f64>,
    pub eigen_hint: bool,
    /// Fail on uncertain graph edges instead of ignoring them.
    pub strict: bool,
    /// Also attempt edge-specific coverings for the failure report.
    pub local_certificates: bool,
    pub local_samples: usize,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            covering: CoveringConfig { depth: 4, ..CoveringConfig::default() },
            ratios: vec![0.5, 0.25, 0.125],
            eigen_hint: true,
            strict: true,
            local_certificates: true,
            local_samples: 16,
        }
    }
}

/// Eigen-aligned frame of the Jacobian at `p`, expanding direction first,
/// scaled so its bounding box has half-width `half` in the sup norm.
pub fn eigen_hint(f: &MapSpec, p: &[f64], half: f64) -> Option<Mat> {
    let jac = linalg::fd_jacobian(|x| f.lift(Direction::Forward, x).unwrap_or_else(|_| x.to_vec()), p, 1e-6);
    let (_, frame) = linalg::eigen_frame(&jac)?;
    let rows = (0..frame.len()).map(|i| frame[i].iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let s = half / rows;
    Some(frame.iter().map(|r| r.iter().map(|v| v * s).collect()).collect())
}

struct Shape {
    label: String,
    rects: Vec<Rectangle>,
}

fn candidate_shapes(f: &MapSpec, g: &TransitionGraph, cfg: &ChainConfig) -> Result<Vec<Shape>> {
    let sub = g.subdivision();
    let n = sub.dim();
    let side = sub.side();
    let mut shapes = Vec::new();
    for &r in &cfg.ratios {
        let half = 0.5 * r * side;
        for e in 0..n {
            let rects = (0..sub.count())
                .map(|i| Rectangle::new(sub.cube_center(i), linalg::diag(&vec![half; n]), e, 1))
                .collect::<Result<Vec<_>>>()?;
            shapes.push(Shape { label: format!("box ratio={r} exit={e}"), rects });
        }
        if cfg.eigen_hint {
            let rects: Option<Vec<Rectangle>> = (0..sub.count())
                .map(|i| {
                    let c = sub.cube_center(i);
                    eigen_hint(f, &c, half).and_then(|fr| Rectangle::new(c, fr, 0, 1).ok())
                })
                .collect();
            if let Some(rects) = rects {
                shapes.push(Shape { label: format!("eigen ratio={r}"), rects });
            }
        }
    }
    Ok(shapes)
}

/// Sub-rectangles for one edge: centered at the centroid of sampled points of
/// `C_i` landing in `C_j`, and at the image of that centroid.
fn local_attempt(
    f: &MapSpec,
    g: &TransitionGraph,
    i: usize,
    j: usize,
    cfg: &ChainConfig,
) -> Result<Option<CoveringCertificate>> {
    let sub = g.subdivision();
    let (ci, cj) = (sub.cube_box(i), sub.cube_box(j));
    let s = cfg.local_samples.max(2);
    let n = sub.dim();
    let mut sum = vec![0.0; n];
    let mut count = 0usize;
    let total = s.pow(n as u32);
    for mut flat in 0..total {
        let mut p = vec![0.0; n];
        for d in (0..n).rev() {
            let t = flat % s;
            flat /= s;
            p[d] = ci.lo()[d] + (ci.hi()[d] - ci.lo()[d]) * (t as f64 + 0.5) / s as f64;
        }
        if cj.contains_point(&f.eval_point(Direction::Forward, &p)?) {
            sum.iter_mut().zip(&p).for_each(|(a, b)| *a += b);
            count += 1;
        }
    }
    if count == 0 {
        return Ok(None);
    }
    let p: Vec<f64> = sum.iter().map(|v| v / count as f64).collect();
    let q = f.eval_point(Direction::Forward, &p)?;
    if !cj.contains_point(&q) {
        return Ok(None);
    }
    let room = |b: &AxisBox, x: &[f64]| -> f64 {
        (0..n)
            .map(|d| {
                let (l, h) = (b.lo()[d], b.hi()[d]);
                let xd = if b.space() == Space::Torus { l + crate::geometry::wrap01(x[d] - l) } else { x[d] };
                (xd - l).min(h - xd)
            })
            .fold(f64::INFINITY, f64::min)
    };
    let (ri, rj) = (room(&ci, &p), room(&cj, &q));
    if ri <= 0.0 || rj <= 0.0 {
        return Ok(None);
    }
    // keep the two sizes comparable so expansion and contraction both fit
    let ri = ri.min(2.0 * rj);
    let rj = rj.min(1.5 * ri);
    let (Some(fi), Some(fj)) = (eigen_hint(f, &p, ri), eigen_hint(f, &q, rj)) else {
        return Ok(None);
    };
    let src = Rectangle::new(p, fi, 0, 1)?;
    let dst = Rectangle::new(q, fj, 0, 1)?;
    Ok(check_covering(f, &src, &dst, &cfg.covering)?.certificate().cloned())
}

/// Attempts to certify the chained property of `f` on the graph's
/// subdivision: one rectangle per cube and a covering for every nonempty edge.
pub fn certify_chained(f: &MapSpec, g: &TransitionGraph, cfg: &ChainConfig) -> Result<ChainOutcome> {
    let sub = g.subdivision();
    if f.descriptor() != g.map_id() {
        return Err(Error::InvalidInput("graph was built for a different map".into()));
    }
    if cfg.strict {
        let un = g.uncertain_edges().len();
        if un > 0 {
            return Err(Error::UncertainEdges { count: un });
        }
    }
    let edges = g.nonempty_edges();
    let shapes = candidate_shapes(f, g, cfg)?;
    let check = |rects: &[Rectangle], (i, j): (usize, usize)| -> Result<Option<CoveringCertificate>> {
        Ok(check_covering(f, &rects[i], &rects[j], &cfg.covering)?.certificate().cloned())
    };
    // screen every shape until its first failing edge
    let mut best: Option<(usize, usize)> = None;
    for (s, shape) in shapes.iter().enumerate() {
        let mut passed = 0usize;
        for &e in &edges {
            if check(&shape.rects, e)?.is_none() {
                break;
            }
            passed += 1;
        }
        if passed == edges.len() {
            let certs: Vec<EdgeCertificate> = edges
                .par_iter()
                .map(|&(i, j)| Ok(EdgeCertificate::from_cert(i, j, &check(&shape.rects, (i, j))?.unwrap())))
                .collect::<Result<_>>()?;
            return Ok(ChainOutcome::Certified(ChainedCertificate {
                map_id: f.descriptor(),
                n: sub.dim(),
                m: sub.order(),
                space: sub.space(),
                shape: shape.label.clone(),
                rects: shape.rects.clone(),
                edges: certs,
            }));
        }
        if best.is_none_or(|(_, p)| passed > p) {
            best = Some((s, passed));
        }
    }
    let mut report = FailureReport {
        map_id: f.descriptor(),
        n: sub.dim(),
        m: sub.order(),
        space: sub.space(),
        shapes_tried: shapes.iter().map(|s| s.label.clone()).collect(),
        shape: None,
        nonempty_edges: edges.len(),
        failing: edges.clone(),
        rects: Vec::new(),
        certified: Vec::new(),
        local: Vec::new(),
    };
    if let Some((s, _)) = best {
        let shape = &shapes[s];
        let results: Vec<Option<CoveringCertificate>> =
            edges.par_iter().map(|&e| check(&shape.rects, e)).collect::<Result<_>>()?;
        report.shape = Some(shape.label.clone());
        report.rects = shape.rects.clone();
        report.failing = Vec::new();
        for (&(i, j), r) in edges.iter().zip(&results) {
            match r {
                Some(c) => report.certified.push(EdgeCertificate::from_cert(i, j, c)),
                None => report.failing.push((i, j)),
            }
        }
    }
    if cfg.local_certificates {
        let local: Vec<Option<CoveringCertificate>> =
            edges.par_iter().map(|&(i, j)| local_attempt(f, g, i, j, cfg)).collect::<Result<_>>()?;
        report.local = local.into_iter().flatten().collect();
    }
    Ok(ChainOutcome::Failed(report))
}
