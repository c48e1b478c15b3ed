//! Closed real intervals with outward rounding.
//!
//! Basic operations emulate directed rounding: the round-to-nearest result is
//! paired with its exact residual (TwoSum / FMA), and the bound is moved by one
//! ulp only when the residual says the true value lies on the other side. Exact
//! dyadic results therefore stay point intervals. Library transcendentals carry
//! no such guarantee and are inflated by a configurable number of ulps.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::atomic::{AtomicU32, Ordering};

static TRANSCENDENTAL_ULPS: AtomicU32 = AtomicU32::new(4);

/// Sets the outward inflation (in ulps) applied to `sin`/`cos` enclosures.
pub fn set_transcendental_inflation_ulps(ulps: u32) {
    TRANSCENDENTAL_ULPS.store(ulps, Ordering::Relaxed);
}

pub fn transcendental_inflation_ulps() -> u32 {
    TRANSCENDENTAL_ULPS.load(Ordering::Relaxed)
}

const TINY: f64 = 1e-290;

/// Fused multiply-add, using the hardware instruction when the CPU has one.
#[inline]
fn fma(a: f64, b: f64, c: f64) -> f64 {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("fma") {
            // SAFETY: the feature was detected at runtime.
            return unsafe { fma_hw(a, b, c) };
        }
    }
    a.mul_add(b, c)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "fma")]
unsafe fn fma_hw(a: f64, b: f64, c: f64) -> f64 {
    a.mul_add(b, c)
}

fn two_sum_err(a: f64, b: f64, s: f64) -> f64 {
    let bb = s - a;
    (a - (s - bb)) + (b - bb)
}

pub fn add_down(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return s;
    }
    if two_sum_err(a, b, s) < 0.0 {
        s.next_down()
    } else {
        s
    }
}

pub fn add_up(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return s;
    }
    if two_sum_err(a, b, s) > 0.0 {
        s.next_up()
    } else {
        s
    }
}

pub fn sub_down(a: f64, b: f64) -> f64 {
    add_down(a, -b)
}

pub fn sub_up(a: f64, b: f64) -> f64 {
    add_up(a, -b)
}

pub fn mul_down(a: f64, b: f64) -> f64 {
    let p = a * b;
    if !p.is_finite() {
        return p;
    }
    if p.abs() < TINY {
        return if p == 0.0 && (a == 0.0 || b == 0.0) { 0.0 } else { p.next_down() };
    }
    if fma(a, b, -p) < 0.0 {
        p.next_down()
    } else {
        p
    }
}

pub fn mul_up(a: f64, b: f64) -> f64 {
    let p = a * b;
    if !p.is_finite() {
        return p;
    }
    if p.abs() < TINY {
        return if p == 0.0 && (a == 0.0 || b == 0.0) { 0.0 } else { p.next_up() };
    }
    if fma(a, b, -p) > 0.0 {
        p.next_up()
    } else {
        p
    }
}

fn div_down(a: f64, b: f64) -> f64 {
    let q = a / b;
    if !q.is_finite() || q.abs() < TINY {
        return q.next_down();
    }
    let r = fma(-q, b, a);
    if r / b < 0.0 {
        q.next_down()
    } else {
        q
    }
}

fn div_up(a: f64, b: f64) -> f64 {
    let q = a / b;
    if !q.is_finite() || q.abs() < TINY {
        return q.next_up();
    }
    let r = fma(-q, b, a);
    if r / b > 0.0 {
        q.next_up()
    } else {
        q
    }
}

fn sqrt_down(x: f64) -> f64 {
    let s = x.sqrt();
    if s == 0.0 || !s.is_finite() {
        return s;
    }
    if fma(-s, s, x) < 0.0 {
        s.next_down()
    } else {
        s
    }
}

fn sqrt_up(x: f64) -> f64 {
    let s = x.sqrt();
    if !s.is_finite() {
        return s;
    }
    if fma(-s, s, x) > 0.0 {
        s.next_up()
    } else {
        s
    }
}

fn inflate_ulps(v: f64, ulps: u32, up: bool) -> f64 {
    let step = v.abs() * f64::EPSILON * ulps as f64 + f64::MIN_POSITIVE;
    if up {
        add_up(v, step)
    } else {
        sub_down(v, step)
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl Interval {
    pub const ENTIRE: Interval = Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY };
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const UNIT_SYM: Interval = Interval { lo: -1.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "inverted interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// Symmetric interval `[-r, r]`.
    pub fn sym(r: f64) -> Self {
        Interval { lo: -r, hi: r }
    }

    pub fn width(self) -> f64 {
        sub_up(self.hi, self.lo)
    }

    pub fn rad(self) -> f64 {
        mul_up(self.width(), 0.5)
    }

    pub fn mid(self) -> f64 {
        0.5 * self.lo + 0.5 * self.hi
    }

    /// Largest absolute value.
    pub fn mag(self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Smallest absolute value.
    pub fn mig(self) -> f64 {
        if self.lo > 0.0 {
            self.lo
        } else if self.hi < 0.0 {
            -self.hi
        } else {
            0.0
        }
    }

    pub fn contains(self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_subset_of(self, other: Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn intersects(self, other: Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn intersect(self, other: Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn hull(self, other: Interval) -> Interval {
        Interval { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    pub fn add_f64(self, c: f64) -> Interval {
        Interval { lo: add_down(self.lo, c), hi: add_up(self.hi, c) }
    }

    pub fn scale(self, c: f64) -> Interval {
        self * Interval::point(c)
    }

    pub fn sqr(self) -> Interval {
        let m = self.mig();
        let g = self.mag();
        Interval { lo: mul_down(m, m), hi: mul_up(g, g) }
    }

    pub fn sqrt(self) -> Interval {
        Interval { lo: sqrt_down(self.lo.max(0.0)), hi: sqrt_up(self.hi.max(0.0)) }
    }

    pub fn div(self, d: Interval) -> Interval {
        if d.contains(0.0) {
            return Interval::ENTIRE;
        }
        let c = [
            (div_down(self.lo, d.lo), div_up(self.lo, d.lo)),
            (div_down(self.lo, d.hi), div_up(self.lo, d.hi)),
            (div_down(self.hi, d.lo), div_up(self.hi, d.lo)),
            (div_down(self.hi, d.hi), div_up(self.hi, d.hi)),
        ];
        Interval {
            lo: c.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
            hi: c.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Enclosure of `2π`.
    pub fn two_pi() -> Interval {
        let c = std::f64::consts::TAU;
        Interval { lo: c, hi: c.next_up() }
    }

    fn pi() -> Interval {
        let c = std::f64::consts::PI;
        Interval { lo: c, hi: c.next_up() }
    }

    /// Enclosure of `sin(t)` for `t` ranging over the interval.
    pub fn sin(self) -> Interval {
        if !self.lo.is_finite() || !self.hi.is_finite() || self.width() >= 6.28 {
            return Interval::UNIT_SYM;
        }
        let ulps = transcendental_inflation_ulps();
        let a = self.lo.sin();
        let b = self.hi.sin();
        let mut lo = inflate_ulps(a.min(b), ulps, false);
        let mut hi = inflate_ulps(a.max(b), ulps, true);
        // extrema at pi/2 + 2k pi (max) and -pi/2 + 2k pi (min); test with a
        // slightly widened argument so that rounding in the quotient never
        // hides a crossing
        let two_pi = std::f64::consts::TAU;
        let half_pi = std::f64::consts::FRAC_PI_2;
        let slack = 1e-9 * (1.0 + self.mag());
        let contains_crit = |offset: f64| {
            let k = ((self.lo - slack - offset) / two_pi).ceil();
            offset + k * two_pi <= self.hi + slack
        };
        if contains_crit(half_pi) {
            hi = 1.0;
        }
        if contains_crit(-half_pi) {
            lo = -1.0;
        }
        Interval { lo: lo.max(-1.0), hi: hi.min(1.0) }
    }

    pub fn cos(self) -> Interval {
        (self + Interval::pi() * Interval::point(0.5)).sin()
    }

    /// Enclosure of `sin(2π x)`.
    pub fn sin_2pi(self) -> Interval {
        (self * Interval::two_pi()).sin()
    }

    /// Enclosure of `cos(2π x)`.
    pub fn cos_2pi(self) -> Interval {
        (self * Interval::two_pi()).cos()
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, o: Interval) -> Interval {
        Interval { lo: add_down(self.lo, o.lo), hi: add_up(self.hi, o.hi) }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, o: Interval) -> Interval {
        Interval { lo: sub_down(self.lo, o.hi), hi: sub_up(self.hi, o.lo) }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, o: Interval) -> Interval {
        if self.lo == self.hi && o.lo == o.hi {
            let (a, b) = (self.lo, o.lo);
            return Interval { lo: mul_down(a, b), hi: mul_up(a, b) };
        }
        let (a, b, c, d) = (self.lo, self.hi, o.lo, o.hi);
        let lo = mul_down(a, c).min(mul_down(a, d)).min(mul_down(b, c)).min(mul_down(b, d));
        let hi = mul_up(a, c).max(mul_up(a, d)).max(mul_up(b, c)).max(mul_up(b, d));
        Interval { lo, hi }
    }
}

/// Dense interval matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct IMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Interval>,
}

impl IMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IMat { rows, cols, data: vec![Interval::ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IMat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Interval::point(1.0);
        }
        m
    }

    /// Point matrix from row vectors.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let data = rows.iter().flat_map(|row| row.iter().map(|&v| Interval::point(v))).collect();
        IMat { rows: r, cols: c, data }
    }

    pub fn get(&self, i: usize, j: usize) -> Interval {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Interval) {
        self.data[i * self.cols + j] = v;
    }

    pub fn mul(&self, other: &IMat) -> IMat {
        assert_eq!(self.cols, other.rows);
        let mut out = IMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = Interval::ZERO;
                for k in 0..self.cols {
                    acc = acc + self.get(i, k) * other.get(k, j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Interval]) -> Vec<Interval> {
        assert_eq!(self.cols, v.len());
        (0..self.rows).map(|i| (0..self.cols).fold(Interval::ZERO, |acc, k| acc + self.get(i, k) * v[k])).collect()
    }

    pub fn sub(&self, other: &IMat) -> IMat {
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect();
        IMat { rows: self.rows, cols: self.cols, data }
    }

    /// Upper bound on the absolute row sum of row `i`.
    pub fn row_abs_sum(&self, i: usize) -> f64 {
        (0..self.cols).fold(0.0, |acc, j| add_up(acc, self.get(i, j).mag()))
    }

    pub fn max_width(&self) -> f64 {
        self.data.iter().map(|x| x.width()).fold(0.0, f64::max)
    }
}

pub fn ivec(v: &[f64]) -> Vec<Interval> {
    v.iter().map(|&x| Interval::point(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_sums_stay_points() {
        let a = Interval::point(0.25) + Interval::point(0.5);
        assert_eq!(a, Interval::point(0.75));
        let p = Interval::point(2.0) * Interval::point(0.125);
        assert_eq!(p, Interval::point(0.25));
    }

    #[test]
    fn inexact_sum_brackets_true_value() {
        let a = Interval::point(0.1) + Interval::point(0.2);
        assert!(a.lo < a.hi);
        assert!(a.lo <= 0.30000000000000004 && a.hi >= 0.30000000000000004);
        // 0.1 + 0.2 rounds up, so the true sum sits below the float result
        assert_eq!(a.hi, 0.1 + 0.2);
    }

    #[test]
    fn mul_with_mixed_signs() {
        let r = Interval::new(-1.0, 2.0) * Interval::new(-3.0, 0.5);
        assert!(r.lo <= -6.0 && r.hi >= 3.0);
    }

    #[test]
    fn sin_covers_extrema() {
        let s = Interval::new(0.2, 0.3).sin_2pi();
        assert_eq!(s.hi, 1.0);
        let c = Interval::new(-0.1, 0.1).cos_2pi();
        assert_eq!(c.hi, 1.0);
        let s2 = Interval::new(0.0, 0.1).sin_2pi();
        assert!(s2.lo <= 0.0 && s2.hi >= (0.2 * std::f64::consts::PI).sin());
    }

    #[test]
    fn sin_samples_inside_enclosure() {
        for k in 0..200 {
            let lo = -3.0 + k as f64 * 0.037;
            let iv = Interval::new(lo, lo + 0.13);
            let e = iv.sin_2pi();
            for s in 0..=20 {
                let x = lo + 0.13 * s as f64 / 20.0;
                let v = (std::f64::consts::TAU * x).sin();
                assert!(e.contains(v), "{x} -> {v} not in {e:?}");
            }
        }
    }

    #[test]
    fn division_excludes_zero_denominator() {
        assert_eq!(Interval::point(1.0).div(Interval::new(-1.0, 1.0)), Interval::ENTIRE);
        let q = Interval::point(1.0).div(Interval::point(3.0));
        assert!(q.contains(1.0 / 3.0) && q.width() < 1e-15);
    }
}
