//! Boxes, dyadic subdivisions and distances on the unit cube and flat torus.

use crate::error::{Error, Result};
use crate::interval::{add_down, add_up, mul_down, sub_down, Interval};
use serde::{Deserialize, Serialize};

/// Phase space: the closed unit cube `[0,1]^n` or the torus `R^n / Z^n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Cube,
    Torus,
}

impl Space {
    /// Largest distance between two points of the space.
    pub fn diameter(self, n: usize) -> f64 {
        match self {
            Space::Cube => (n as f64).sqrt(),
            Space::Torus => 0.5 * (n as f64).sqrt(),
        }
    }

    /// Reduces a point into the fundamental domain (mod 1 on the torus).
    pub fn reduce(self, p: &[f64]) -> Vec<f64> {
        match self {
            Space::Cube => p.to_vec(),
            Space::Torus => p.iter().map(|&x| wrap01(x)).collect(),
        }
    }

    pub fn contains(self, p: &[f64]) -> bool {
        match self {
            Space::Cube => p.iter().all(|&x| (0.0..=1.0).contains(&x)),
            Space::Torus => p.iter().all(|x| x.is_finite()),
        }
    }
}

/// `x mod 1` in `[0, 1)`.
pub fn wrap01(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Signed representative of `x mod 1` in `[-1/2, 1/2]`.
pub fn wrap_centered(x: f64) -> f64 {
    x - x.round()
}

/// Distance between two points in the space metric.
pub fn point_distance(space: Space, p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&a, &b)| {
            let d = a - b;
            let d = if space == Space::Torus { wrap_centered(d) } else { d };
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Axis-aligned box. On the torus, coordinates are read mod 1 and a box spans
/// at most one full turn per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
    space: Space,
}

impl AxisBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, space: Space) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidInput(format!("box bounds have lengths {} and {}", lo.len(), hi.len())));
        }
        for (d, (&l, &h)) in lo.iter().zip(&hi).enumerate() {
            if !(l.is_finite() && h.is_finite() && l <= h) {
                return Err(Error::InvalidInput(format!("axis {d}: [{l}, {h}] is not an interval")));
            }
            match space {
                Space::Cube if l < 0.0 || h > 1.0 => {
                    return Err(Error::InvalidInput(format!("axis {d}: [{l}, {h}] leaves the unit cube")));
                }
                Space::Torus if h - l > 1.0 => {
                    return Err(Error::InvalidInput(format!("axis {d}: [{l}, {h}] wraps more than once")));
                }
                _ => {}
            }
        }
        Ok(AxisBox { lo, hi, space })
    }

    pub fn unit(n: usize, space: Space) -> Self {
        AxisBox { lo: vec![0.0; n], hi: vec![1.0; n], space }
    }

    pub fn from_intervals(iv: &[Interval], space: Space) -> Result<Self> {
        AxisBox::new(iv.iter().map(|i| i.lo).collect(), iv.iter().map(|i| i.hi).collect(), space)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn interval(&self, d: usize) -> Interval {
        Interval::new(self.lo[d], self.hi[d])
    }

    pub fn intervals(&self) -> Vec<Interval> {
        (0..self.dim()).map(|d| self.interval(d)).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).collect()
    }

    /// Euclidean diameter (length of the main diagonal).
    pub fn diameter(&self) -> f64 {
        self.widths().iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub fn contains_point(&self, p: &[f64]) -> bool {
        self.lo.iter().zip(&self.hi).zip(p).all(|((&l, &h), &x)| match self.space {
            Space::Cube => l <= x && x <= h,
            Space::Torus => {
                let x = wrap01(x);
                (l <= x && x <= h) || (l <= x + 1.0 && x + 1.0 <= h) || (l <= x - 1.0 && x - 1.0 <= h)
            }
        })
    }

    /// Containment of boxes read in the same lift.
    pub fn contains_box(&self, other: &AxisBox) -> bool {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(other.lo.iter().zip(&other.hi))
            .all(|((&l, &h), (&ol, &oh))| l <= ol && oh <= h)
    }

    /// Halves the box across `axis`.
    pub fn bisect(&self, axis: usize) -> (AxisBox, AxisBox) {
        let mid = 0.5 * (self.lo[axis] + self.hi[axis]);
        let mut left = self.clone();
        let mut right = self.clone();
        left.hi[axis] = mid;
        right.lo[axis] = mid;
        (left, right)
    }

    /// The `2^n` children obtained by halving every axis.
    pub fn children(&self) -> Vec<AxisBox> {
        let n = self.dim();
        (0..1usize << n)
            .map(|mask| {
                let mut b = self.clone();
                for d in 0..n {
                    let mid = 0.5 * (self.lo[d] + self.hi[d]);
                    if mask >> (n - 1 - d) & 1 == 0 {
                        b.hi[d] = mid;
                    } else {
                        b.lo[d] = mid;
                    }
                }
                b
            })
            .collect()
    }
}

/// Lower bound on the gap between two intervals along one axis.
pub fn axis_gap(space: Space, a: Interval, b: Interval) -> f64 {
    match space {
        Space::Cube => sub_down(b.lo, a.hi).max(sub_down(a.lo, b.hi)).max(0.0),
        Space::Torus => {
            if a.width() + b.width() >= 1.0 {
                return 0.0;
            }
            let k0 = ((a.lo + a.hi) * 0.5 - (b.lo + b.hi) * 0.5).round();
            (-1..=1)
                .map(|dk| {
                    let k = k0 + dk as f64;
                    let (bl, bh) = (add_down(b.lo, k), add_up(b.hi, k));
                    sub_down(bl, a.hi).max(sub_down(a.lo, bh)).max(0.0)
                })
                .fold(f64::INFINITY, f64::min)
        }
    }
}

/// Certified lower bound on `inf { dist(x, y) : x in a, y in b }`, computed
/// from per-axis gaps in `space`. Inputs may be unwrapped lifts.
pub fn interval_distance_lb(space: Space, a: &[Interval], b: &[Interval]) -> f64 {
    combine_gaps_lb(a.iter().zip(b).map(|(&ia, &ib)| axis_gap(space, ia, ib)))
}

/// Euclidean combination of per-axis gap lower bounds, rounded down.
pub fn combine_gaps_lb(gaps: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    for g in gaps {
        sum = add_down(sum, mul_down(g, g));
    }
    let s = sum.sqrt();
    if s * s > sum {
        s.next_down()
    } else {
        s
    }
}

/// Certified lower bound on the distance between two boxes; zero iff the boxes
/// touch or may overlap.
pub fn set_distance_lb(a: &AxisBox, b: &AxisBox) -> f64 {
    interval_distance_lb(a.space, &a.intervals(), &b.intervals())
}

/// Cube `prod_d [k_d / 2^m, (k_d + 1) / 2^m]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicCube {
    pub order: u32,
    pub index: Vec<u32>,
}

impl DyadicCube {
    pub fn to_box(&self, space: Space) -> AxisBox {
        let side = (-(self.order as f64)).exp2();
        let lo: Vec<f64> = self.index.iter().map(|&k| k as f64 * side).collect();
        let hi: Vec<f64> = self.index.iter().map(|&k| (k + 1) as f64 * side).collect();
        AxisBox { lo, hi, space }
    }
}

pub const DEFAULT_CUBE_BUDGET: u128 = 1 << 24;

/// The dyadic subdivision `D_m` of the cube or torus. Cubes are indexed
/// lexicographically by multi-index, axis 0 most significant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SubdivisionRepr", into = "SubdivisionRepr")]
pub struct Subdivision {
    n: usize,
    m: u32,
    space: Space,
}

#[derive(Serialize, Deserialize)]
struct SubdivisionRepr {
    n: usize,
    m: u32,
    space: Space,
    count: u64,
}

impl From<Subdivision> for SubdivisionRepr {
    fn from(s: Subdivision) -> Self {
        SubdivisionRepr { n: s.n, m: s.m, space: s.space, count: s.count() as u64 }
    }
}

impl TryFrom<SubdivisionRepr> for Subdivision {
    type Error = Error;
    fn try_from(r: SubdivisionRepr) -> Result<Self> {
        let s = make_subdivision(r.n, r.m, r.space)?;
        if s.count() as u64 != r.count {
            return Err(Error::InvalidInput(format!("count {} does not match 2^(n m) = {}", r.count, s.count())));
        }
        Ok(s)
    }
}

pub fn make_subdivision(n: usize, m: u32, space: Space) -> Result<Subdivision> {
    make_subdivision_with_budget(n, m, space, DEFAULT_CUBE_BUDGET)
}

pub fn make_subdivision_with_budget(n: usize, m: u32, space: Space, budget: u128) -> Result<Subdivision> {
    if n == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    let exp = n as u128 * m as u128;
    if exp >= 127 || (1u128 << exp) > budget {
        return Err(Error::ResourceLimit {
            what: "dyadic subdivision",
            needed: if exp >= 127 { u128::MAX } else { 1u128 << exp },
            budget,
        });
    }
    Ok(Subdivision { n, m, space })
}

impl Subdivision {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> u32 {
        self.m
    }

    pub fn space(&self) -> Space {
        self.space
    }

    /// `p_m = 2^(n m)`.
    pub fn count(&self) -> usize {
        1usize << (self.n as u32 * self.m)
    }

    pub fn side(&self) -> f64 {
        (-(self.m as f64)).exp2()
    }

    fn per_axis(&self) -> usize {
        1usize << self.m
    }

    pub fn multi_index(&self, flat: usize) -> Vec<u32> {
        let k = self.per_axis();
        let mut idx = vec![0u32; self.n];
        let mut rest = flat;
        for d in (0..self.n).rev() {
            idx[d] = (rest % k) as u32;
            rest /= k;
        }
        idx
    }

    pub fn flat_index(&self, multi: &[u32]) -> usize {
        let k = self.per_axis();
        multi.iter().fold(0usize, |acc, &i| acc * k + i as usize)
    }

    pub fn cube(&self, flat: usize) -> DyadicCube {
        DyadicCube { order: self.m, index: self.multi_index(flat) }
    }

    pub fn cube_box(&self, flat: usize) -> AxisBox {
        self.cube(flat).to_box(self.space)
    }

    pub fn cube_center(&self, flat: usize) -> Vec<f64> {
        self.cube_box(flat).center()
    }

    /// Index of a closed cube containing `p`; on shared boundaries the
    /// lexicographically smallest multi-index wins.
    pub fn cube_of_point(&self, p: &[f64]) -> usize {
        let k = self.per_axis();
        let scale = k as f64;
        let multi: Vec<u32> = p
            .iter()
            .map(|&x| {
                let x = if self.space == Space::Torus { wrap01(x) } else { x.clamp(0.0, 1.0) };
                let s = x * scale;
                let mut i = s.floor() as i64;
                if s == s.floor() && i > 0 {
                    i -= 1;
                }
                i.clamp(0, k as i64 - 1) as u32
            })
            .collect();
        self.flat_index(&multi)
    }

    /// Largest cube diameter `chi(D_m)`.
    pub fn chi(&self) -> f64 {
        let d = (self.n as f64).sqrt() * self.side();
        match self.space {
            Space::Cube => d,
            Space::Torus => d.min(self.space.diameter(self.n)),
        }
    }

    /// Whether two closed cubes share at least one boundary point.
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        let (ia, ib) = (self.multi_index(a), self.multi_index(b));
        let k = self.per_axis() as i64;
        ia.iter().zip(&ib).all(|(&x, &y)| {
            let d = (x as i64 - y as i64).abs();
            match self.space {
                Space::Cube => d <= 1,
                Space::Torus => d <= 1 || d == k - 1,
            }
        })
    }
}
