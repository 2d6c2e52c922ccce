//! Exact arithmetic in `Q(√r₁, √r₂, …)` for positive integers `r`.
//!
//! A [`RadicalNumber`] is a finite sum `Σ q_r √r` over square-free radicands
//! `r` with rational coefficients. Square roots of distinct square-free
//! integers are linearly independent over `Q`, so the canonical map is zero
//! exactly when the number is zero; equality is structural.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::field::FieldElem;
use crate::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct RadicalNumber {
    terms: BTreeMap<u64, BigRational>,
}

/// `m = g² · r` with `r` square-free. Returns `(g, r)`.
pub fn square_free_split(m: u64) -> (u64, u64) {
    let mut g = 1u64;
    let mut r = 1u64;
    let mut rest = m;
    let mut p = 2u64;
    while p.saturating_mul(p) <= rest {
        let mut e = 0;
        while rest % p == 0 {
            rest /= p;
            e += 1;
        }
        for _ in 0..e / 2 {
            g *= p;
        }
        if e % 2 == 1 {
            r *= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    (g, r * rest)
}

fn smallest_prime_factor(m: u64) -> u64 {
    if m % 2 == 0 {
        return 2;
    }
    let mut p = 3u64;
    while p.saturating_mul(p) <= m {
        if m % p == 0 {
            return p;
        }
        p += 2;
    }
    m
}

fn rational(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// `√m` in canonical form.
pub fn radical_sqrt_int(m: u64) -> Result<RadicalNumber> {
    if m == 0 {
        return Err(Error::invalid("radical_sqrt_int needs m >= 1"));
    }
    let (g, r) = square_free_split(m);
    Ok(RadicalNumber::term(BigRational::from_integer(BigInt::from(g)), r))
}

/// Exact product; fails only when a radicand leaves `u64`.
pub fn radical_mul(x: &RadicalNumber, y: &RadicalNumber) -> Result<RadicalNumber> {
    let mut out = BTreeMap::<u64, BigRational>::new();
    for (&r, a) in &x.terms {
        for (&s, b) in &y.terms {
            // √r·√s = g·√((r/g)(s/g)), g = gcd(r, s); the cofactors are
            // coprime and square-free, so their product is square-free.
            let g = r.gcd(&s);
            let rad = (r / g).checked_mul(s / g).ok_or_else(|| {
                Error::Capacity(format!("radicand product {r} * {s} overflows u64"))
            })?;
            let coeff = a * b * BigRational::from_integer(BigInt::from(g));
            let e = out.entry(rad).or_insert_with(BigRational::zero);
            *e += coeff;
        }
    }
    Ok(RadicalNumber::from_map(out))
}

pub fn radical_is_zero(x: &RadicalNumber) -> bool {
    x.is_zero()
}

pub fn radical_to_float(x: &RadicalNumber) -> f64 {
    x.to_f64()
}

impl RadicalNumber {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn from_int(n: i64) -> Self {
        Self::term(rational(n), 1)
    }

    pub fn from_rational(q: BigRational) -> Self {
        Self::term(q, 1)
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Self::term(BigRational::new(BigInt::from(num), BigInt::from(den)), 1)
    }

    /// `q·√r`; `r` is assumed square-free.
    fn term(q: BigRational, r: u64) -> Self {
        let mut terms = BTreeMap::new();
        if !q.is_zero() {
            terms.insert(r, q);
        }
        Self { terms }
    }

    fn from_map(mut terms: BTreeMap<u64, BigRational>) -> Self {
        terms.retain(|_, q| !q.is_zero());
        Self { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_rational(&self) -> bool {
        self.terms.keys().all(|&r| r == 1)
    }

    /// The coefficient of `√1`.
    pub fn rational_part(&self) -> BigRational {
        self.terms.get(&1).cloned().unwrap_or_else(BigRational::zero)
    }

    /// `Some(n)` when the number is the integer `n`.
    pub fn as_integer(&self) -> Option<BigInt> {
        if !self.is_rational() {
            return None;
        }
        let q = self.rational_part();
        q.is_integer().then(|| q.to_integer())
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, &BigRational)> {
        self.terms.iter().map(|(&r, q)| (r, q))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        if q.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(&r, c)| (r, c * q)).collect(),
        }
    }

    pub fn scale_int(&self, n: i64) -> Self {
        self.scale(&rational(n))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        radical_mul(self, other)
    }

    pub fn square(&self) -> Self {
        self * self
    }

    /// Exact multiplicative inverse.
    ///
    /// Eliminates one prime `p` at a time: writing `x = α + β√p` with `α, β`
    /// free of `√p`, `x·(α − β√p) = α² − pβ²` no longer involves `√p`.
    pub fn inverse(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::invalid("inverse of zero radical number"));
        }
        if self.is_rational() {
            return Ok(Self::from_rational(self.rational_part().recip()));
        }
        let p = self
            .terms
            .keys()
            .filter(|&&r| r > 1)
            .map(|&r| smallest_prime_factor(r))
            .max()
            .expect("irrational number has a radicand > 1");
        let mut alpha = BTreeMap::new();
        let mut beta = BTreeMap::new();
        for (&r, q) in &self.terms {
            if r % p == 0 {
                beta.insert(r / p, q.clone());
            } else {
                alpha.insert(r, q.clone());
            }
        }
        let alpha = Self::from_map(alpha);
        let beta = Self::from_map(beta);
        let sqrt_p = Self::term(BigRational::one(), p);
        let conj = &alpha - &beta.checked_mul(&sqrt_p)?;
        let norm = &alpha.checked_mul(&alpha)? - &beta.checked_mul(&beta)?.scale_int(p as i64);
        let inv_norm = norm.inverse()?;
        conj.checked_mul(&inv_norm)
    }

    /// Interval enclosure at `bits` fractional bits: the value lies in
    /// `[(c − e)/2^bits, (c + e)/2^bits]`.
    fn enclose(&self, bits: u32) -> (BigInt, BigInt) {
        let mut center = BigInt::zero();
        let mut err = BigInt::zero();
        for (&r, q) in &self.terms {
            let scaled_root = (BigInt::from(r) << (2 * bits as usize)).sqrt();
            let num = q.numer() * &scaled_root;
            let den = q.denom();
            let (t, _) = num.div_mod_floor(den);
            center += t;
            // floor error < 1, root truncation < 1 contributes |q| < |numer|/den + 1
            err += q.numer().abs().div_ceil(den) + BigInt::from(2);
        }
        (center, err)
    }

    /// Exact sign: `-1`, `0` or `1`.
    pub fn signum(&self) -> i32 {
        if self.is_zero() {
            return 0;
        }
        let mut bits = 64;
        loop {
            let (c, e) = self.enclose(bits);
            if c.abs() > e {
                return if c.sign() == Sign::Minus { -1 } else { 1 };
            }
            bits *= 2;
        }
    }

    /// Double-precision value, accurate to a few ulps even under heavy
    /// cancellation between terms.
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        if self.is_rational() {
            return self.rational_part().to_f64().unwrap_or(f64::NAN);
        }
        let mut bits = 128;
        loop {
            let (c, e) = self.enclose(bits);
            if c.abs() > (e << 64usize) {
                let q = BigRational::new(c, BigInt::one() << bits as usize);
                return q.to_f64().unwrap_or(f64::NAN);
            }
            bits *= 2;
        }
    }
}

impl fmt::Display for RadicalNumber {
    /// `q1*sqrt(r1) + q2*sqrt(r2) + …`, radicands ascending; zero is `0`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (r, q)) in self.terms.iter().enumerate() {
            if i == 0 {
                write!(f, "{q}*sqrt({r})")?;
            } else if q.is_negative() {
                write!(f, " - {}*sqrt({r})", -q)?;
            } else {
                write!(f, " + {q}*sqrt({r})")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for RadicalNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for RadicalNumber {
    type Err = Error;

    /// Parses the textual form produced by `Display`. Radicands need not be
    /// square-free; a bare rational is accepted as a `sqrt(1)` term.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "0" {
            return Ok(Self::zero());
        }
        let mut out = Self::zero();
        let normalized = s.replace(" - ", " + -");
        for tok in normalized.split(" + ") {
            let tok = tok.trim();
            let (q, r) = match tok.split_once("*sqrt(") {
                Some((q, rest)) => {
                    let r = rest
                        .strip_suffix(')')
                        .ok_or_else(|| Error::invalid(format!("bad radical term `{tok}`")))?;
                    (q, r.parse::<u64>().map_err(|e| Error::invalid(format!("{tok}: {e}")))?)
                }
                None => (tok, 1),
            };
            let q: BigRational = q
                .parse()
                .map_err(|e| Error::invalid(format!("bad rational `{q}`: {e:?}")))?;
            out = &out + &radical_sqrt_int(r)?.scale(&q);
        }
        Ok(out)
    }
}

impl Add for &RadicalNumber {
    type Output = RadicalNumber;
    fn add(self, rhs: &RadicalNumber) -> RadicalNumber {
        let mut terms = self.terms.clone();
        for (&r, q) in &rhs.terms {
            *terms.entry(r).or_insert_with(BigRational::zero) += q;
        }
        RadicalNumber::from_map(terms)
    }
}

impl Sub for &RadicalNumber {
    type Output = RadicalNumber;
    fn sub(self, rhs: &RadicalNumber) -> RadicalNumber {
        self + &(-rhs)
    }
}

impl Neg for &RadicalNumber {
    type Output = RadicalNumber;
    fn neg(self) -> RadicalNumber {
        RadicalNumber {
            terms: self.terms.iter().map(|(&r, q)| (r, -q)).collect(),
        }
    }
}

impl Mul for &RadicalNumber {
    type Output = RadicalNumber;
    /// Panics if a radicand overflows `u64`; use [`radical_mul`] to get an error.
    fn mul(self, rhs: &RadicalNumber) -> RadicalNumber {
        radical_mul(self, rhs).expect("radicand overflow in RadicalNumber product")
    }
}

impl Div for &RadicalNumber {
    type Output = RadicalNumber;
    fn div(self, rhs: &RadicalNumber) -> RadicalNumber {
        self * &rhs.inverse().expect("division by zero RadicalNumber")
    }
}

macro_rules! forward_owned {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for RadicalNumber {
            type Output = RadicalNumber;
            fn $m(self, rhs: RadicalNumber) -> RadicalNumber { (&self).$m(&rhs) }
        }
    )*};
}
forward_owned!(Add add, Sub sub, Mul mul, Div div);

impl Neg for RadicalNumber {
    type Output = RadicalNumber;
    fn neg(self) -> RadicalNumber {
        -&self
    }
}

impl FieldElem for RadicalNumber {
    fn zero() -> Self {
        RadicalNumber::zero()
    }
    fn one() -> Self {
        RadicalNumber::one()
    }
    fn is_exact_zero(&self) -> bool {
        self.is_zero()
    }
    fn fadd(&self, o: &Self) -> Self {
        self + o
    }
    fn fsub(&self, o: &Self) -> Self {
        self - o
    }
    fn fmul(&self, o: &Self) -> Self {
        self * o
    }
    fn fdiv(&self, o: &Self) -> Self {
        self / o
    }
    fn fneg(&self) -> Self {
        -self
    }
}
