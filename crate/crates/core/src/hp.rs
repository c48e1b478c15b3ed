//! 512-bit binary fixed point numbers for long orbit iteration.
//!
//! Hyperbolic maps amplify rounding errors geometrically, so points whose
//! orbits are followed over hundreds of steps are carried with 512 fractional
//! bits. Every `f64` is converted exactly (down to 2^-512). Products truncate
//! toward negative infinity at the last bit.

use num_bigint::{BigInt, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::sync::OnceLock;

pub const FRAC_BITS: u64 = 512;
const GUARD_BITS: u64 = 64;
const WORK_BITS: u64 = FRAC_BITS + GUARD_BITS;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Hp(BigInt);

impl fmt::Debug for Hp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hp({:e})", self.to_f64())
    }
}

fn pi_work() -> &'static BigInt {
    static PI: OnceLock<BigInt> = OnceLock::new();
    PI.get_or_init(|| {
        // Machin: pi = 16 atan(1/5) - 4 atan(1/239), with extra guard bits
        let bits = WORK_BITS + 32;
        let atan_inv = |x: u32| -> BigInt {
            let one = BigInt::one() << bits;
            let x2 = BigInt::from(x) * BigInt::from(x);
            let mut power = &one / BigInt::from(x);
            let mut sum = BigInt::zero();
            let mut k = 0u32;
            while !power.is_zero() {
                let term = &power / BigInt::from(2 * k + 1);
                if k % 2 == 0 {
                    sum += term;
                } else {
                    sum -= term;
                }
                power /= &x2;
                k += 1;
            }
            sum
        };
        let pi = atan_inv(5) * 16 - atan_inv(239) * 4;
        pi >> 32
    })
}

impl Hp {
    pub fn zero() -> Self {
        Hp(BigInt::zero())
    }

    pub fn from_int(i: i64) -> Self {
        Hp(BigInt::from(i) << FRAC_BITS)
    }

    pub fn from_bigint(i: BigInt) -> Self {
        Hp(i << FRAC_BITS)
    }

    /// Exact conversion (bits below 2^-512 are truncated).
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "non-finite value {x}");
        if x == 0.0 {
            return Hp::zero();
        }
        let bits = x.to_bits();
        let negative = bits >> 63 == 1;
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
        let mut v = BigInt::from(mant);
        let shift = e + FRAC_BITS as i64;
        if shift >= 0 {
            v <<= shift as u64;
        } else {
            v >>= (-shift) as u64;
        }
        Hp(if negative { -v } else { v })
    }

    pub fn to_f64(&self) -> f64 {
        // keep 64 significant bits before the conversion to avoid overflow of
        // huge intermediate values and preserve relative accuracy
        let bits = self.0.bits();
        if bits <= 1000 {
            self.0.to_f64().unwrap_or(f64::NAN) * 2f64.powi(-(FRAC_BITS as i32))
        } else {
            let drop = bits - 900;
            (&self.0 >> drop).to_f64().unwrap_or(f64::NAN) * 2f64.powi(drop as i32 - FRAC_BITS as i32)
        }
    }

    pub fn is_negative(&self) -> bool {
        self.0.sign() == Sign::Minus
    }

    pub fn abs(&self) -> Hp {
        Hp(self.0.abs())
    }

    /// Integer part, rounded toward negative infinity.
    pub fn floor_int(&self) -> BigInt {
        &self.0 >> FRAC_BITS
    }

    /// Nearest integer (ties up).
    pub fn round_int(&self) -> BigInt {
        (&self.0 + (BigInt::one() << (FRAC_BITS - 1))) >> FRAC_BITS
    }

    /// Fractional part in `[0, 1)`.
    pub fn frac(&self) -> Hp {
        let mask = (BigInt::one() << FRAC_BITS) - 1;
        let r = &self.0 - ((&self.0 >> FRAC_BITS) << FRAC_BITS);
        debug_assert!(r >= BigInt::zero() && r <= mask);
        Hp(r)
    }

    /// Signed distance to the nearest integer, in `[-1/2, 1/2)`.
    pub fn wrap_centered(&self) -> Hp {
        let r = self.round_int();
        self - &Hp::from_bigint(r)
    }

    pub fn mul(&self, other: &Hp) -> Hp {
        Hp((&self.0 * &other.0) >> FRAC_BITS)
    }

    pub fn mul_int(&self, k: i64) -> Hp {
        Hp(&self.0 * BigInt::from(k))
    }

    pub fn mul_f64(&self, c: f64) -> Hp {
        if c == c.trunc() && c.abs() < 9.0e15 {
            return self.mul_int(c as i64);
        }
        self.mul(&Hp::from_f64(c))
    }

    /// `sin(2π x)`.
    pub fn sin_2pi(&self) -> Hp {
        // reduce to r in [-1/2, 1/2), then theta = 2 pi r in [-pi, pi)
        let r = self.wrap_centered();
        let r_work = &r.0 << GUARD_BITS;
        let theta: BigInt = (pi_work() * r_work * 2) >> WORK_BITS;
        let theta2 = (&theta * &theta) >> WORK_BITS;
        let mut term = theta.clone();
        let mut sum = theta;
        let mut k: u64 = 1;
        loop {
            term = -((&term * &theta2) >> WORK_BITS) / BigInt::from((2 * k) * (2 * k + 1));
            if term.is_zero() {
                break;
            }
            sum += &term;
            k += 1;
        }
        Hp(sum >> GUARD_BITS)
    }

    /// `cos(2π x)`.
    pub fn cos_2pi(&self) -> Hp {
        let quarter = Hp(BigInt::one() << (FRAC_BITS - 2));
        (self + &quarter).sin_2pi()
    }

    /// `1 / (2π)`.
    pub fn inv_two_pi() -> Hp {
        static V: OnceLock<BigInt> = OnceLock::new();
        let v = V.get_or_init(|| (BigInt::one() << (FRAC_BITS + WORK_BITS)) / (pi_work() * 2));
        Hp(v.clone())
    }

    pub fn pi() -> Hp {
        Hp(pi_work() >> GUARD_BITS)
    }

    /// Mantissa as a signed hexadecimal string; the value is `mantissa / 2^512`.
    pub fn to_hex(&self) -> String {
        let s = self.0.magnitude().to_str_radix(16);
        if self.is_negative() {
            format!("-{s}")
        } else {
            s
        }
    }

    pub fn from_hex(s: &str) -> Option<Hp> {
        let (neg, digits) = match s.strip_prefix('-') {
            Some(d) => (true, d),
            None => (false, s),
        };
        let v = BigInt::parse_bytes(digits.as_bytes(), 16)?;
        Some(Hp(if neg { -v } else { v }))
    }
}

impl Add for &Hp {
    type Output = Hp;
    fn add(self, o: &Hp) -> Hp {
        Hp(&self.0 + &o.0)
    }
}

impl Sub for &Hp {
    type Output = Hp;
    fn sub(self, o: &Hp) -> Hp {
        Hp(&self.0 - &o.0)
    }
}

impl Add for Hp {
    type Output = Hp;
    fn add(self, o: Hp) -> Hp {
        Hp(self.0 + o.0)
    }
}

impl Sub for Hp {
    type Output = Hp;
    fn sub(self, o: Hp) -> Hp {
        Hp(self.0 - o.0)
    }
}

impl Neg for Hp {
    type Output = Hp;
    fn neg(self) -> Hp {
        Hp(-self.0)
    }
}

pub fn hp_vec(v: &[f64]) -> Vec<Hp> {
    v.iter().map(|&x| Hp::from_f64(x)).collect()
}

pub fn to_f64_vec(v: &[Hp]) -> Vec<f64> {
    v.iter().map(Hp::to_f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_round_trip_is_exact() {
        for x in [0.0, 1.0, -2.5, 0.1, 1e-30, -3.7e12, 0.999_999_999] {
            assert_eq!(Hp::from_f64(x).to_f64(), x);
        }
    }

    #[test]
    fn frac_and_floor() {
        let x = Hp::from_f64(-1.25);
        assert_eq!(x.floor_int(), BigInt::from(-2));
        assert_eq!(x.frac().to_f64(), 0.75);
        assert_eq!(Hp::from_f64(0.75).wrap_centered().to_f64(), -0.25);
    }

    #[test]
    fn sin_matches_f64() {
        for k in -20..20 {
            let x = k as f64 * 0.0731;
            let v = Hp::from_f64(x).sin_2pi().to_f64();
            assert!((v - (std::f64::consts::TAU * x).sin()).abs() < 1e-15, "{x}");
            let c = Hp::from_f64(x).cos_2pi().to_f64();
            assert!((c - (std::f64::consts::TAU * x).cos()).abs() < 1e-15, "{x}");
        }
    }

    #[test]
    fn pi_digits() {
        let pi = Hp::pi();
        assert!((Hp::inv_two_pi().to_f64() - 0.5 / std::f64::consts::PI).abs() < 1e-17);
        // pi/4 via sin(2 pi / 8) = sqrt(2)/2
        let s = Hp::from_f64(0.125).sin_2pi();
        let two = s.mul(&s).mul_int(2);
        let err = (&two - &Hp::from_int(1)).abs();
        assert!(err.to_f64() < 1e-150);
        assert!((pi.to_f64() - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn hex_round_trip() {
        let x = Hp::from_f64(-0.3).mul(&Hp::from_f64(0.7));
        assert_eq!(Hp::from_hex(&x.to_hex()), Some(x));
    }
}
