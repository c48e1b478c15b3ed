//! Builtin maps with point, inverse, high-precision and interval evaluation.
//!
//! Descriptor grammar (one line, whitespace separated, brackets balanced):
//!
//! ```text
//! identity    [n=2] [space=torus|cube]
//! translation [v_1,...,v_n] [space=torus|cube]
//! toral       [[a11,...],...,[an1,...]]                  (|det| = 1)
//! standard    K=<real>                                   (n = 2, torus)
//! perturbed   [[a11,...],...] eta=<real> freq=<int>      (torus)
//! affine      [[m11,...],...] [b_1,...,b_n] [space=cube|torus]
//! ```

use crate::error::{Error, Result};
use crate::geometry::{wrap01, AxisBox, Space};
use crate::hp::Hp;
use crate::interval::{IMat, Interval};
use crate::linalg::{self, Mat};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MapKind {
    Identity,
    Translation(Vec<f64>),
    ToralAutomorphism(Vec<Vec<i64>>),
    StandardMap { k: f64 },
    PerturbedAutomorphism { a: Vec<Vec<i64>>, eta: f64, freq: i64 },
    Affine { a: Mat, b: Vec<f64> },
}

/// A validated map of the cube or torus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MapRepr", into = "MapRepr")]
pub struct MapSpec {
    kind: MapKind,
    n: usize,
    space: Space,
    inverse: Option<Vec<Vec<i64>>>,
}

#[derive(Serialize, Deserialize)]
struct MapRepr {
    descriptor: String,
    n: usize,
    space: Space,
    invertible: bool,
}

impl From<MapSpec> for MapRepr {
    fn from(m: MapSpec) -> Self {
        MapRepr { descriptor: m.descriptor(), n: m.n, space: m.space, invertible: m.is_invertible() }
    }
}

impl TryFrom<MapRepr> for MapSpec {
    type Error = Error;
    fn try_from(r: MapRepr) -> Result<Self> {
        builtin_map(&r.descriptor)
    }
}

/// Enclosure of an image box as an unwrapped lift; `wrapped[d]` is set when
/// axis `d` crosses an integer and needs splitting on the torus.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxImage {
    pub lift: Vec<Interval>,
    pub wrapped: Vec<bool>,
    pub space: Space,
}

impl BoxImage {
    /// Pieces of the image inside the fundamental domain (at most `2^n`).
    pub fn split(&self) -> Vec<AxisBox> {
        let mut axes: Vec<Vec<(f64, f64)>> = Vec::with_capacity(self.lift.len());
        for iv in &self.lift {
            let pieces = match self.space {
                Space::Cube => vec![(iv.lo.max(0.0), iv.hi.min(1.0))],
                Space::Torus => {
                    if iv.width() >= 1.0 {
                        vec![(0.0, 1.0)]
                    } else {
                        let k = iv.lo.floor();
                        let (l, h) = (iv.lo - k, iv.hi - k);
                        if h <= 1.0 {
                            vec![(l, h)]
                        } else {
                            vec![(l, 1.0), (0.0, (h - 1.0).min(1.0))]
                        }
                    }
                }
            };
            if pieces.iter().any(|&(l, h)| l > h) {
                return Vec::new();
            }
            axes.push(pieces);
        }
        let mut out: Vec<(Vec<f64>, Vec<f64>)> = vec![(Vec::new(), Vec::new())];
        for pieces in &axes {
            out = out
                .into_iter()
                .flat_map(|(lo, hi)| {
                    pieces.iter().map(move |&(l, h)| {
                        let (mut lo, mut hi) = (lo.clone(), hi.clone());
                        lo.push(l);
                        hi.push(h);
                        (lo, hi)
                    })
                })
                .collect();
        }
        out.into_iter().filter_map(|(lo, hi)| AxisBox::new(lo, hi, self.space).ok()).collect()
    }
}

fn check_square<T>(a: &[Vec<T>], what: &str) -> Result<usize> {
    let n = a.len();
    if n == 0 || a.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidMap(format!("{what} matrix must be square and nonempty")));
    }
    Ok(n)
}

fn int_mat_f64(a: &[Vec<i64>]) -> Mat {
    a.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect()
}

impl MapSpec {
    pub fn new(kind: MapKind, n: usize, space: Space) -> Result<Self> {
        let mut inverse = None;
        match &kind {
            MapKind::Identity => {
                if n == 0 {
                    return Err(Error::InvalidMap("dimension must be at least 1".into()));
                }
            }
            MapKind::Translation(v) => {
                if v.len() != n || v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidMap("translation vector must have n finite entries".into()));
                }
            }
            MapKind::ToralAutomorphism(a) | MapKind::PerturbedAutomorphism { a, .. } => {
                if check_square(a, "toral")? != n {
                    return Err(Error::InvalidMap("matrix size does not match n".into()));
                }
                if space != Space::Torus {
                    return Err(Error::InvalidMap("toral maps live on the torus".into()));
                }
                let d = linalg::int_det(a);
                if d.abs() != 1 {
                    return Err(Error::InvalidMap(format!("|det| = {} but must be 1", d.abs())));
                }
                if let MapKind::PerturbedAutomorphism { eta, freq, .. } = &kind {
                    if !(eta.is_finite() && *eta >= 0.0) {
                        return Err(Error::InvalidMap("eta must be finite and nonnegative".into()));
                    }
                    if *freq == 0 && *eta != 0.0 {
                        // sin(0) vanishes; harmless but almost surely a typo
                        return Err(Error::InvalidMap("freq must be nonzero".into()));
                    }
                } else {
                    inverse = linalg::int_inverse(a);
                }
            }
            MapKind::StandardMap { k } => {
                if n != 2 || space != Space::Torus {
                    return Err(Error::InvalidMap("the standard map is defined on the 2-torus".into()));
                }
                if !k.is_finite() {
                    return Err(Error::InvalidMap("K must be finite".into()));
                }
            }
            MapKind::Affine { a, b } => {
                if check_square(a, "affine")? != n || b.len() != n {
                    return Err(Error::InvalidMap("affine matrix/offset size does not match n".into()));
                }
                if a.iter().flatten().chain(b).any(|x| !x.is_finite()) {
                    return Err(Error::InvalidMap("affine entries must be finite".into()));
                }
            }
        }
        Ok(MapSpec { kind, n, space, inverse })
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn is_invertible(&self) -> bool {
        match self.kind {
            MapKind::Identity | MapKind::Translation(_) | MapKind::StandardMap { .. } => true,
            MapKind::ToralAutomorphism(_) => self.inverse.is_some(),
            MapKind::PerturbedAutomorphism { .. } | MapKind::Affine { .. } => false,
        }
    }

    /// Canonical descriptor; also used as the map identifier.
    pub fn descriptor(&self) -> String {
        let sp = match self.space {
            Space::Cube => "cube",
            Space::Torus => "torus",
        };
        let fm = |v: &[f64]| format!("[{}]", v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(","));
        let im = |a: &[Vec<i64>]| {
            format!(
                "[{}]",
                a.iter()
                    .map(|r| format!("[{}]", r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")))
                    .collect::<Vec<_>>()
                    .join(",")
            )
        };
        match &self.kind {
            MapKind::Identity => format!("identity n={} space={sp}", self.n),
            MapKind::Translation(v) => format!("translation {} space={sp}", fm(v)),
            MapKind::ToralAutomorphism(a) => format!("toral {}", im(a)),
            MapKind::StandardMap { k } => format!("standard K={k:?}"),
            MapKind::PerturbedAutomorphism { a, eta, freq } => format!("perturbed {} eta={eta:?} freq={freq}", im(a)),
            MapKind::Affine { a, b } => {
                format!("affine [{}] {} space={sp}", a.iter().map(|r| fm(r)).collect::<Vec<_>>().join(","), fm(b))
            }
        }
    }

    fn require(&self, dir: Direction) -> Result<()> {
        if dir == Direction::Inverse && !self.is_invertible() {
            return Err(Error::NotInvertible);
        }
        Ok(())
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::InvalidInput(format!("point has {len} coordinates, map has dimension {}", self.n)));
        }
        Ok(())
    }

    /// Unreduced image (a lift on the torus).
    pub fn lift(&self, dir: Direction, p: &[f64]) -> Result<Vec<f64>> {
        self.require(dir)?;
        self.check_dim(p.len())?;
        Ok(match (&self.kind, dir) {
            (MapKind::Identity, _) => p.to_vec(),
            (MapKind::Translation(v), Direction::Forward) => p.iter().zip(v).map(|(x, t)| x + t).collect(),
            (MapKind::Translation(v), Direction::Inverse) => p.iter().zip(v).map(|(x, t)| x - t).collect(),
            (MapKind::ToralAutomorphism(a), Direction::Forward) => linalg::mat_vec(&int_mat_f64(a), p),
            (MapKind::ToralAutomorphism(_), Direction::Inverse) => {
                linalg::mat_vec(&int_mat_f64(self.inverse.as_ref().unwrap()), p)
            }
            (MapKind::StandardMap { k }, Direction::Forward) => {
                let y = p[1] + k / TAU * (TAU * p[0]).sin();
                vec![p[0] + y, y]
            }
            (MapKind::StandardMap { k }, Direction::Inverse) => {
                let x = p[0] - p[1];
                vec![x, p[1] - k / TAU * (TAU * x).sin()]
            }
            (MapKind::PerturbedAutomorphism { a, eta, freq }, _) => {
                let lin = linalg::mat_vec(&int_mat_f64(a), p);
                lin.iter().zip(p).map(|(l, x)| l + eta * (TAU * *freq as f64 * x).sin()).collect()
            }
            (MapKind::Affine { a, b }, _) => linalg::mat_vec(a, p).iter().zip(b).map(|(x, t)| x + t).collect(),
        })
    }

    /// `f(p)` or `f^{-1}(p)`, reduced mod 1 on the torus.
    pub fn eval_point(&self, dir: Direction, p: &[f64]) -> Result<Vec<f64>> {
        let q = self.lift(dir, p)?;
        Ok(match self.space {
            Space::Cube => q,
            Space::Torus => q.into_iter().map(wrap01).collect(),
        })
    }

    /// High-precision lift.
    pub fn eval_hp(&self, dir: Direction, p: &[Hp]) -> Result<Vec<Hp>> {
        self.require(dir)?;
        self.check_dim(p.len())?;
        let int_apply = |a: &[Vec<i64>], p: &[Hp]| -> Vec<Hp> {
            a.iter().map(|row| row.iter().zip(p).fold(Hp::zero(), |acc, (&c, x)| acc + x.mul_int(c))).collect()
        };
        Ok(match (&self.kind, dir) {
            (MapKind::Identity, _) => p.to_vec(),
            (MapKind::Translation(v), Direction::Forward) => {
                p.iter().zip(v).map(|(x, &t)| x + &Hp::from_f64(t)).collect()
            }
            (MapKind::Translation(v), Direction::Inverse) => {
                p.iter().zip(v).map(|(x, &t)| x - &Hp::from_f64(t)).collect()
            }
            (MapKind::ToralAutomorphism(a), Direction::Forward) => int_apply(a, p),
            (MapKind::ToralAutomorphism(_), Direction::Inverse) => int_apply(self.inverse.as_ref().unwrap(), p),
            (MapKind::StandardMap { k }, Direction::Forward) => {
                let c = Hp::from_f64(*k).mul(&Hp::inv_two_pi());
                let y = &p[1] + &c.mul(&p[0].sin_2pi());
                vec![&p[0] + &y, y]
            }
            (MapKind::StandardMap { k }, Direction::Inverse) => {
                let c = Hp::from_f64(*k).mul(&Hp::inv_two_pi());
                let x = &p[0] - &p[1];
                let y = &p[1] - &c.mul(&x.sin_2pi());
                vec![x, y]
            }
            (MapKind::PerturbedAutomorphism { a, eta, freq }, _) => {
                let e = Hp::from_f64(*eta);
                int_apply(a, p).iter().zip(p).map(|(l, x)| l + &e.mul(&x.mul_int(*freq).sin_2pi())).collect()
            }
            (MapKind::Affine { a, b }, _) => a
                .iter()
                .zip(b)
                .map(|(row, &t)| row.iter().zip(p).fold(Hp::from_f64(t), |acc, (&c, x)| acc + x.mul_f64(c)))
                .collect(),
        })
    }

    /// Outward enclosure of the image of an interval vector (unwrapped lift).
    pub fn eval_intervals(&self, dir: Direction, x: &[Interval]) -> Result<Vec<Interval>> {
        self.require(dir)?;
        self.check_dim(x.len())?;
        let int_apply = |a: &[Vec<i64>], x: &[Interval]| -> Vec<Interval> {
            a.iter()
                .map(|row| row.iter().zip(x).fold(Interval::ZERO, |acc, (&c, &v)| acc + v.scale(c as f64)))
                .collect()
        };
        Ok(match (&self.kind, dir) {
            (MapKind::Identity, _) => x.to_vec(),
            (MapKind::Translation(v), Direction::Forward) => x.iter().zip(v).map(|(i, &t)| i.add_f64(t)).collect(),
            (MapKind::Translation(v), Direction::Inverse) => x.iter().zip(v).map(|(i, &t)| i.add_f64(-t)).collect(),
            (MapKind::ToralAutomorphism(a), Direction::Forward) => int_apply(a, x),
            (MapKind::ToralAutomorphism(_), Direction::Inverse) => int_apply(self.inverse.as_ref().unwrap(), x),
            (MapKind::StandardMap { k }, Direction::Forward) => {
                let c = Interval::point(*k).div(Interval::two_pi());
                let y = x[1] + c * x[0].sin_2pi();
                vec![x[0] + y, y]
            }
            (MapKind::StandardMap { k }, Direction::Inverse) => {
                let c = Interval::point(*k).div(Interval::two_pi());
                let xx = x[0] - x[1];
                vec![xx, x[1] - c * xx.sin_2pi()]
            }
            (MapKind::PerturbedAutomorphism { a, eta, freq }, _) => int_apply(a, x)
                .into_iter()
                .zip(x)
                .map(|(l, &v)| l + v.scale(*freq as f64).sin_2pi().scale(*eta))
                .collect(),
            (MapKind::Affine { a, b }, _) => a
                .iter()
                .zip(b)
                .map(|(row, &t)| row.iter().zip(x).fold(Interval::point(t), |acc, (&c, &v)| acc + v.scale(c)))
                .collect(),
        })
    }

    /// Rigorous enclosure `E ⊇ f(b)` as a lift with wrap flags.
    pub fn eval_box(&self, dir: Direction, b: &AxisBox) -> Result<BoxImage> {
        let lift = self.eval_intervals(dir, &b.intervals())?;
        let wrapped = lift
            .iter()
            .map(|iv| self.space == Space::Torus && (iv.width() >= 1.0 || iv.lo.floor() != iv.hi.floor()))
            .collect();
        Ok(BoxImage { lift, wrapped, space: self.space })
    }

    /// Floating Jacobian at a point.
    pub fn jacobian(&self, dir: Direction, p: &[f64]) -> Result<Mat> {
        let iv: Vec<Interval> = p.iter().map(|&x| Interval::point(x)).collect();
        let j = self.jacobian_box(dir, &iv)?;
        Ok((0..self.n).map(|r| (0..self.n).map(|c| j.get(r, c).mid()).collect()).collect())
    }

    /// Interval Jacobian over a box.
    pub fn jacobian_box(&self, dir: Direction, x: &[Interval]) -> Result<IMat> {
        self.require(dir)?;
        self.check_dim(x.len())?;
        let n = self.n;
        Ok(match (&self.kind, dir) {
            (MapKind::Identity, _) | (MapKind::Translation(_), _) => IMat::identity(n),
            (MapKind::ToralAutomorphism(a), Direction::Forward) => IMat::from_rows(&int_mat_f64(a)),
            (MapKind::ToralAutomorphism(_), Direction::Inverse) => {
                IMat::from_rows(&int_mat_f64(self.inverse.as_ref().unwrap()))
            }
            (MapKind::StandardMap { k }, Direction::Forward) => {
                let s = x[0].cos_2pi().scale(*k);
                let one = Interval::point(1.0);
                IMat { rows: 2, cols: 2, data: vec![one + s, one, s, one] }
            }
            (MapKind::StandardMap { k }, Direction::Inverse) => {
                let s = (x[0] - x[1]).cos_2pi().scale(*k);
                let one = Interval::point(1.0);
                IMat { rows: 2, cols: 2, data: vec![one, -one, -s, one + s] }
            }
            (MapKind::PerturbedAutomorphism { a, eta, freq }, _) => {
                let mut m = IMat::from_rows(&int_mat_f64(a));
                let amp = Interval::two_pi().scale(*eta).scale(*freq as f64);
                for d in 0..n {
                    let extra = amp * x[d].scale(*freq as f64).cos_2pi();
                    m.set(d, d, m.get(d, d) + extra);
                }
                m
            }
            (MapKind::Affine { a, .. }, _) => IMat::from_rows(a),
        })
    }

    /// Decomposition `f(x) = A x + b + eta * s(x)` with `|s_d| <= 1`, when the
    /// map has that form (forward direction).
    pub fn affine_part(&self) -> Option<(Mat, Vec<f64>, f64)> {
        let n = self.n;
        match &self.kind {
            MapKind::Identity => Some((linalg::identity(n), vec![0.0; n], 0.0)),
            MapKind::Translation(v) => Some((linalg::identity(n), v.clone(), 0.0)),
            MapKind::ToralAutomorphism(a) => Some((int_mat_f64(a), vec![0.0; n], 0.0)),
            MapKind::PerturbedAutomorphism { a, eta, .. } => Some((int_mat_f64(a), vec![0.0; n], *eta)),
            MapKind::Affine { a, b } => Some((a.clone(), b.clone(), 0.0)),
            MapKind::StandardMap { .. } => None,
        }
    }

    /// Upper bound on the Lipschitz constant (max row sum of the Jacobian).
    pub fn lipschitz_bound(&self, dir: Direction) -> Result<f64> {
        let whole: Vec<Interval> = vec![Interval::new(0.0, 1.0); self.n];
        let j = self.jacobian_box(dir, &whole)?;
        Ok((0..self.n).map(|i| j.row_abs_sum(i)).fold(0.0, f64::max))
    }

    /// On the cube, checks that the enclosure of the whole space stays inside it.
    pub fn check_endomorphism(&self) -> Result<()> {
        if self.space == Space::Torus {
            if let MapKind::Affine { a, .. } = &self.kind {
                if a.iter().flatten().any(|x| x.fract() != 0.0) {
                    return Err(Error::NotEndomorphism("affine map with non-integer matrix on the torus".into()));
                }
            }
            return Ok(());
        }
        let img = self.eval_box(Direction::Forward, &AxisBox::unit(self.n, Space::Cube))?;
        if img.lift.iter().all(|iv| iv.lo >= 0.0 && iv.hi <= 1.0) {
            Ok(())
        } else {
            Err(Error::NotEndomorphism(format!("image enclosure {:?} leaves the unit cube", img.lift)))
        }
    }
}

fn tokenize(s: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut depth = 0i32;
    for ch in s.chars() {
        match ch {
            '[' => depth += 1,
            ']' => depth -= 1,
            _ => {}
        }
        if depth < 0 {
            return Err(Error::InvalidMap("unbalanced ']'".into()));
        }
        if ch.is_whitespace() && depth == 0 {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
        } else {
            cur.push(ch);
        }
    }
    if depth != 0 {
        return Err(Error::InvalidMap("unbalanced '['".into()));
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    Ok(out)
}

fn parse_json<T: serde::de::DeserializeOwned>(tok: &str, what: &str) -> Result<T> {
    serde_json::from_str(tok).map_err(|e| Error::InvalidMap(format!("cannot parse {what} '{tok}': {e}")))
}

/// Parses a one-line map descriptor and validates the resulting map.
pub fn builtin_map(descriptor: &str) -> Result<MapSpec> {
    let toks = tokenize(descriptor)?;
    let (kind, rest) = toks.split_first().ok_or_else(|| Error::InvalidMap("empty descriptor".into()))?;
    let mut positional: Vec<&str> = Vec::new();
    let mut keys: Vec<(&str, &str)> = Vec::new();
    for t in rest {
        match t.split_once('=') {
            Some((k, v)) if !t.starts_with('[') => keys.push((k, v)),
            _ => positional.push(t),
        }
    }
    let mut n: Option<usize> = None;
    let mut space: Option<Space> = None;
    let mut k_param: Option<f64> = None;
    let mut eta: Option<f64> = None;
    let mut freq: Option<i64> = None;
    for (k, v) in keys {
        let bad = |e: String| Error::InvalidMap(format!("{k}={v}: {e}"));
        match k {
            "n" => n = Some(v.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?),
            "space" => {
                space = Some(match v {
                    "cube" => Space::Cube,
                    "torus" => Space::Torus,
                    _ => return Err(bad("expected cube or torus".into())),
                })
            }
            "K" | "k" => k_param = Some(v.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?),
            "eta" => eta = Some(v.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?),
            "freq" => freq = Some(v.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?),
            _ => return Err(Error::InvalidMap(format!("unknown parameter '{k}'"))),
        }
    }
    let expect_pos = |count: usize| -> Result<()> {
        if positional.len() != count {
            return Err(Error::InvalidMap(format!(
                "'{kind}' takes {count} bracketed argument(s), got {}",
                positional.len()
            )));
        }
        Ok(())
    };
    match kind.as_str() {
        "identity" => {
            expect_pos(0)?;
            MapSpec::new(MapKind::Identity, n.unwrap_or(2), space.unwrap_or(Space::Torus))
        }
        "translation" => {
            expect_pos(1)?;
            let v: Vec<f64> = parse_json(positional[0], "vector")?;
            let dim = v.len();
            MapSpec::new(MapKind::Translation(v), dim, space.unwrap_or(Space::Torus))
        }
        "toral" => {
            expect_pos(1)?;
            let a: Vec<Vec<i64>> = parse_json(positional[0], "integer matrix")?;
            let dim = check_square(&a, "toral")?;
            MapSpec::new(MapKind::ToralAutomorphism(a), dim, space.unwrap_or(Space::Torus))
        }
        "standard" => {
            expect_pos(0)?;
            let k = k_param.ok_or_else(|| Error::InvalidMap("standard map needs K=<real>".into()))?;
            MapSpec::new(MapKind::StandardMap { k }, 2, space.unwrap_or(Space::Torus))
        }
        "perturbed" => {
            expect_pos(1)?;
            let a: Vec<Vec<i64>> = parse_json(positional[0], "integer matrix")?;
            let dim = check_square(&a, "perturbed")?;
            let kind = MapKind::PerturbedAutomorphism { a, eta: eta.unwrap_or(0.0), freq: freq.unwrap_or(1) };
            MapSpec::new(kind, dim, space.unwrap_or(Space::Torus))
        }
        "affine" => {
            expect_pos(2)?;
            let a: Mat = parse_json(positional[0], "matrix")?;
            let b: Vec<f64> = parse_json(positional[1], "offset")?;
            let dim = check_square(&a, "affine")?;
            MapSpec::new(MapKind::Affine { a, b }, dim, space.unwrap_or(Space::Cube))
        }
        other => Err(Error::InvalidMap(format!("unknown map kind '{other}'"))),
    }
}
