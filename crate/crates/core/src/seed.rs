//! Linear seed solutions and the nonlinearity they are continued through.

use serde::{Deserialize, Serialize};

use crate::lattice::{convolution_power, convolve, LatticePoint, SpectralCoeffs};
use crate::radical::{radical_sqrt_int, RadicalNumber};
use crate::{Complex, Error, Real, Result};

/// `u⁽⁰⁾ = Σ_k a_k e^{−iω_k t} e^{i j_k·x}` with `ω_k = √(|j_k|²+1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSeed {
    b: usize,
    d: usize,
    sites: Vec<Vec<i64>>,
    amplitudes: Vec<f64>,
    omega0: Vec<RadicalNumber>,
    p: u32,
}

/// Serialized form; `omega0` is informational and recomputed on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub sites: Vec<Vec<i64>>,
    pub amplitudes: Vec<f64>,
    pub p: u32,
    pub omega0: Vec<String>,
}

impl LinearSeed {
    /// Validates the seed invariants: at least one site, equal site
    /// dimensions, `j_k ≠ 0`, `j_k ≠ j_k'` for `k ≠ k'`, positive amplitudes
    /// and `p ≥ 1`.
    pub fn new(sites: Vec<Vec<i64>>, amplitudes: Vec<f64>, p: u32) -> Result<Self> {
        let b = sites.len();
        if b == 0 {
            return Err(Error::invalid("seed needs at least one site (b >= 1)"));
        }
        let d = sites[0].len();
        if d == 0 {
            return Err(Error::invalid("sites must have dimension d >= 1"));
        }
        if let Some(k) = sites.iter().position(|s| s.len() != d) {
            return Err(Error::invalid(format!("site j_{} has dimension {}, expected {d}", k + 1, sites[k].len())));
        }
        if amplitudes.len() != b {
            return Err(Error::DimensionMismatch {
                expected: format!("{b} amplitudes"),
                found: amplitudes.len().to_string(),
            });
        }
        for (k, s) in sites.iter().enumerate() {
            if s.iter().all(|&x| x == 0) {
                return Err(Error::invalid(format!("site j_{} = 0 violates j_k != 0", k + 1)));
            }
            for (k2, s2) in sites.iter().enumerate().skip(k + 1) {
                if s == s2 {
                    return Err(Error::invalid(format!(
                        "sites j_{} and j_{} coincide; need j_k != j_k' for k != k'",
                        k + 1,
                        k2 + 1
                    )));
                }
            }
        }
        if let Some(k) = amplitudes.iter().position(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::invalid(format!("amplitude a_{} must be a positive finite real", k + 1)));
        }
        if p == 0 {
            return Err(Error::invalid("nonlinearity degree p must be >= 1"));
        }
        let omega0 = sites
            .iter()
            .map(|s| {
                let m: i64 = s.iter().map(|x| x * x).sum::<i64>() + 1;
                radical_sqrt_int(m as u64)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            b,
            d,
            sites,
            amplitudes,
            omega0,
            p,
        })
    }

    /// Same sites and `p`, new amplitudes.
    pub fn with_amplitudes(&self, amplitudes: Vec<f64>) -> Result<Self> {
        Self::new(self.sites.clone(), amplitudes, self.p)
    }

    pub fn with_p(&self, p: u32) -> Result<Self> {
        Self::new(self.sites.clone(), self.amplitudes.clone(), p)
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn sites(&self) -> &[Vec<i64>] {
        &self.sites
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn omega0(&self) -> &[RadicalNumber] {
        &self.omega0
    }

    pub fn omega0_f64(&self) -> Vec<f64> {
        self.omega0.iter().map(|w| w.to_f64()).collect()
    }

    /// `‖a‖_∞`.
    pub fn delta(&self) -> f64 {
        self.amplitudes.iter().cloned().fold(0.0, f64::max)
    }

    /// `B = (d+1)(d+2)/2 + b(b+1)`.
    pub fn bound_b(&self) -> usize {
        (self.d + 1) * (self.d + 2) / 2 + self.b * (self.b + 1)
    }

    /// `B' = (d+1)(d+2)/2`.
    pub fn bound_b_prime(&self) -> usize {
        (self.d + 1) * (self.d + 2) / 2
    }

    /// `(−e_k, j_k)`.
    pub fn mode(&self, k: usize) -> LatticePoint {
        LatticePoint::seed_mode(self.b, k, &self.sites[k])
    }

    /// `supp u⁽⁰⁾`, in site order.
    pub fn support(&self) -> Vec<LatticePoint> {
        (0..self.b).map(|k| self.mode(k)).collect()
    }

    /// `𝒮 = supp u⁽⁰⁾ ∪ supp ū⁽⁰⁾`, sorted.
    pub fn resonant_set(&self) -> Vec<LatticePoint> {
        let mut s: Vec<_> = self.support().into_iter().flat_map(|x| [-&x, x]).collect();
        s.sort();
        s
    }

    /// `n·ω⁽⁰⁾` exactly.
    pub fn n_dot_omega0(&self, n: &[i64]) -> RadicalNumber {
        n.iter()
            .zip(&self.omega0)
            .filter(|(c, _)| **c != 0)
            .fold(RadicalNumber::zero(), |acc, (c, w)| &acc + &w.scale_int(*c))
    }

    pub fn u0<T: Real>(&self) -> SpectralCoeffs<T> {
        SpectralCoeffs::from_entries(
            self.b,
            self.d,
            (0..self.b).map(|k| (self.mode(k), Complex::new(T::lit(self.amplitudes[k]), T::zero()))),
        )
        .expect("seed modes have seed dimensions")
    }

    /// `u⁽⁰⁾ + ū⁽⁰⁾`, tagged real-representing.
    pub fn u0_plus_conj<T: Real>(&self) -> SpectralCoeffs<T> {
        let u = self.u0::<T>();
        let mut s = u.add(&u.conj_reflect()).expect("same dims");
        s.tag_real_representing(T::zero());
        s
    }

    pub fn to_record(&self) -> SeedRecord {
        SeedRecord {
            sites: self.sites.clone(),
            amplitudes: self.amplitudes.clone(),
            p: self.p,
            omega0: self.omega0.iter().map(|w| w.to_string()).collect(),
        }
    }

    pub fn from_record(r: &SeedRecord) -> Result<Self> {
        Self::new(r.sites.clone(), r.amplitudes.clone(), r.p)
    }
}

/// One analytic correction term `α_m * w^{*(p+m)}`, `m ≥ 2`, with
/// `w = (u+ū)/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct HTerm<T> {
    pub m: u32,
    pub alpha: SpectralCoeffs<T>,
}

/// `N(w) = coupling·w^{*(p+1)} + Σ_m α_m * w^{*(p+m)}`.
///
/// `coupling = 0` with no `H` terms is the linear problem.
#[derive(Clone, Debug, PartialEq)]
pub struct Nonlinearity<T> {
    pub p: u32,
    pub coupling: T,
    pub h_terms: Vec<HTerm<T>>,
}

impl<T: Real> Nonlinearity<T> {
    pub fn power(p: u32) -> Self {
        Self {
            p,
            coupling: T::one(),
            h_terms: Vec::new(),
        }
    }

    pub fn linear(p: u32) -> Self {
        Self {
            p,
            coupling: T::zero(),
            h_terms: Vec::new(),
        }
    }

    /// Adds `α_m * w^{*(p+m)}`. The coefficient series must be
    /// real-representing (a real function of `x`) and `m ≥ 2`.
    pub fn with_term(mut self, m: u32, mut alpha: SpectralCoeffs<T>) -> Result<Self> {
        if m < 2 {
            return Err(Error::invalid("H terms start at m = 2"));
        }
        if !alpha.tag_real_representing(T::lit(1e-12)) {
            return Err(Error::invalid(format!("alpha_{m} is not conjugate symmetric")));
        }
        self.h_terms.push(HTerm { m, alpha });
        Ok(self)
    }

    pub fn is_linear(&self) -> bool {
        self.coupling == T::zero() && self.h_terms.is_empty()
    }

    /// `N(w)` as a series.
    pub fn eval(&self, w: &SpectralCoeffs<T>) -> Result<SpectralCoeffs<T>> {
        let (b, d) = w.dims();
        let mut out = SpectralCoeffs::new(b, d);
        if self.is_linear() || w.is_empty() {
            return Ok(out);
        }
        let base = convolution_power(w, self.p + 1)?;
        if self.coupling != T::zero() {
            out = out.add(&base.scale_real(self.coupling))?;
        }
        let mut pow = base;
        let mut cur = self.p + 1;
        for t in self.sorted_terms() {
            while cur < self.p + t.m {
                pow = convolve(&pow, w)?;
                cur += 1;
            }
            out = out.add(&convolve(&t.alpha, &pow)?)?;
        }
        Ok(out)
    }

    /// Kernel `K` of the derivative: `dN = K * dw`, i.e.
    /// `(p+1)·coupling·w^{*p} + Σ (p+m)·α_m * w^{*(p+m−1)}`.
    pub fn derivative_kernel(&self, w: &SpectralCoeffs<T>) -> Result<SpectralCoeffs<T>> {
        let (b, d) = w.dims();
        let mut out = SpectralCoeffs::new(b, d);
        if self.is_linear() {
            return Ok(out);
        }
        let mut pow = if self.p == 0 {
            SpectralCoeffs::identity(b, d)
        } else {
            convolution_power(w, self.p)?
        };
        let mut cur = self.p;
        if self.coupling != T::zero() {
            out = out.add(&pow.scale_real(self.coupling * T::lit(f64::from(self.p + 1))))?;
        }
        for t in self.sorted_terms() {
            while cur < self.p + t.m - 1 {
                pow = convolve(&pow, w)?;
                cur += 1;
            }
            let k = convolve(&t.alpha, &pow)?.scale_real(T::lit(f64::from(self.p + t.m)));
            out = out.add(&k)?;
        }
        Ok(out)
    }

    fn sorted_terms(&self) -> Vec<&HTerm<T>> {
        let mut v: Vec<_> = self.h_terms.iter().collect();
        v.sort_by_key(|t| t.m);
        v
    }
}
