//! Space-time Fourier lattice: points `(n, j) ∈ Z^b × Z^d`, sparse series
//! over them and the exponentially weighted ℓ¹ norm.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::{Complex, Error, Real, Result};

/// A space-time Fourier mode: time harmonic `n ∈ Z^b` and spatial mode `j ∈ Z^d`.
///
/// Ordering is lexicographic in `(n, j)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticePoint {
    pub n: Vec<i64>,
    pub j: Vec<i64>,
}

impl LatticePoint {
    pub fn new(n: Vec<i64>, j: Vec<i64>) -> Self {
        Self { n, j }
    }

    pub fn zero(b: usize, d: usize) -> Self {
        Self {
            n: vec![0; b],
            j: vec![0; d],
        }
    }

    /// `(−e_k, j)`: the Fourier position of the k-th seed mode.
    pub fn seed_mode(b: usize, k: usize, j: &[i64]) -> Self {
        let mut n = vec![0; b];
        n[k] = -1;
        Self { n, j: j.to_vec() }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n.len(), self.j.len())
    }

    pub fn is_zero(&self) -> bool {
        self.n.iter().all(|&x| x == 0) && self.j.iter().all(|&x| x == 0)
    }

    pub fn n_l1(&self) -> i64 {
        self.n.iter().map(|x| x.abs()).sum()
    }

    pub fn j_l1(&self) -> i64 {
        self.j.iter().map(|x| x.abs()).sum()
    }

    pub fn n_linf(&self) -> i64 {
        self.n.iter().map(|x| x.abs()).max().unwrap_or(0)
    }

    pub fn j_linf(&self) -> i64 {
        self.j.iter().map(|x| x.abs()).max().unwrap_or(0)
    }

    /// `|j|²`.
    pub fn j_sq(&self) -> i64 {
        self.j.iter().map(|x| x * x).sum()
    }

    pub fn scaled(&self, alpha: i64) -> Self {
        Self {
            n: self.n.iter().map(|x| x * alpha).collect(),
            j: self.j.iter().map(|x| x * alpha).collect(),
        }
    }

    fn zip(&self, other: &Self, f: impl Fn(i64, i64) -> i64) -> Self {
        debug_assert_eq!(self.dims(), other.dims());
        Self {
            n: self.n.iter().zip(&other.n).map(|(a, b)| f(*a, *b)).collect(),
            j: self.j.iter().zip(&other.j).map(|(a, b)| f(*a, *b)).collect(),
        }
    }
}

impl fmt::Debug for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?};{:?})", self.n, self.j)
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Add for &LatticePoint {
    type Output = LatticePoint;
    fn add(self, rhs: &LatticePoint) -> LatticePoint {
        self.zip(rhs, |a, b| a + b)
    }
}

impl Sub for &LatticePoint {
    type Output = LatticePoint;
    fn sub(self, rhs: &LatticePoint) -> LatticePoint {
        self.zip(rhs, |a, b| a - b)
    }
}

impl Neg for &LatticePoint {
    type Output = LatticePoint;
    fn neg(self) -> LatticePoint {
        self.scaled(-1)
    }
}

/// Strip-width weight of the analytic norm `Σ |c(n,j)| e^{ρ(‖n‖₁ + ‖j‖₁)}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticNorm<T> {
    rho: T,
}

impl<T: Real> AnalyticNorm<T> {
    pub fn new(rho: T) -> Result<Self> {
        if !(rho > T::zero()) {
            return Err(Error::invalid(format!("analytic norm needs rho > 0, got {rho}")));
        }
        Ok(Self { rho })
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn weight(&self, p: &LatticePoint) -> T {
        (self.rho * T::lit((p.n_l1() + p.j_l1()) as f64)).exp()
    }
}

impl<T: Real> Default for AnalyticNorm<T> {
    fn default() -> Self {
        Self { rho: T::lit(0.5) }
    }
}

/// One entry of the JSON form of a series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoeffRecord {
    pub n: Vec<i64>,
    pub j: Vec<i64>,
    pub re: f64,
    pub im: f64,
}

/// Sparse space-time Fourier series `Σ c(n,j) e^{i n·ω t} e^{i j·x}`.
///
/// Entries are kept in canonical form: no stored value has modulus below
/// `1e-300`. The optional real-representing tag records that the series
/// satisfies `c(−n,−j) = conj c(n,j)`; it survives products.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralCoeffs<T> {
    b: usize,
    d: usize,
    entries: BTreeMap<LatticePoint, Complex<T>>,
    real_representing: bool,
}

impl<T: Real> SpectralCoeffs<T> {
    pub fn new(b: usize, d: usize) -> Self {
        Self {
            b,
            d,
            entries: BTreeMap::new(),
            real_representing: false,
        }
    }

    /// The convolution identity `δ_{(0,0)}`.
    pub fn identity(b: usize, d: usize) -> Self {
        let mut s = Self::delta(LatticePoint::zero(b, d), Complex::new(T::one(), T::zero()));
        s.real_representing = true;
        s
    }

    pub fn delta(p: LatticePoint, value: Complex<T>) -> Self {
        let (b, d) = p.dims();
        let mut s = Self::new(b, d);
        s.entries.insert(p, value);
        s.canonicalize();
        s
    }

    pub fn from_entries(
        b: usize,
        d: usize,
        entries: impl IntoIterator<Item = (LatticePoint, Complex<T>)>,
    ) -> Result<Self> {
        let mut s = Self::new(b, d);
        for (p, v) in entries {
            s.check_point(&p)?;
            *s.entries.entry(p).or_insert_with(Complex::default) += v;
        }
        s.canonicalize();
        Ok(s)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.b, self.d)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, p: &LatticePoint) -> Complex<T> {
        self.entries.get(p).copied().unwrap_or_default()
    }

    pub fn contains(&self, p: &LatticePoint) -> bool {
        self.entries.contains_key(p)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LatticePoint, &Complex<T>)> {
        self.entries.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &LatticePoint> {
        self.entries.keys()
    }

    pub fn is_tagged_real(&self) -> bool {
        self.real_representing
    }

    /// Sets the value at `p` (zero removes the entry). Clears the real tag.
    pub fn set(&mut self, p: LatticePoint, value: Complex<T>) -> Result<()> {
        self.check_point(&p)?;
        self.real_representing = false;
        if is_negligible(value) {
            self.entries.remove(&p);
        } else {
            self.entries.insert(p, value);
        }
        Ok(())
    }

    /// Adds `value` at `p`. Clears the real tag.
    pub fn add_at(&mut self, p: LatticePoint, value: Complex<T>) -> Result<()> {
        let v = self.get(&p) + value;
        self.set(p, v)
    }

    /// Checks conjugate symmetry `c(−x) = conj c(x)` to absolute tolerance
    /// `tol` and sets the tag if it holds.
    pub fn tag_real_representing(&mut self, tol: T) -> bool {
        self.real_representing = self.conjugate_symmetry_defect() <= tol;
        self.real_representing
    }

    /// `max_x |c(−x) − conj c(x)|`.
    pub fn conjugate_symmetry_defect(&self) -> T {
        self.entries
            .iter()
            .map(|(p, v)| (self.get(&-p) - v.conj()).norm())
            .fold(T::zero(), T::max)
    }

    /// The series of the complex conjugate function: `x ↦ conj c(−x)`.
    pub fn conj_reflect(&self) -> Self {
        Self {
            b: self.b,
            d: self.d,
            entries: self.entries.iter().map(|(p, v)| (-p, v.conj())).collect(),
            real_representing: self.real_representing,
        }
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        let mut out = Self {
            b: self.b,
            d: self.d,
            entries: self.entries.iter().map(|(p, v)| (p.clone(), v * s)).collect(),
            real_representing: self.real_representing && s.im == T::zero(),
        };
        out.canonicalize();
        out
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.scale(Complex::new(s, T::zero()))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        let mut out = self.clone();
        for (p, v) in &other.entries {
            *out.entries.entry(p.clone()).or_insert_with(Complex::default) += v;
        }
        out.real_representing = self.real_representing && other.real_representing;
        out.canonicalize();
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale_real(-T::one()))
    }

    /// Keeps only the entries accepted by `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&LatticePoint) -> bool) -> Self {
        Self {
            b: self.b,
            d: self.d,
            entries: self
                .entries
                .iter()
                .filter(|(p, _)| keep(p))
                .map(|(p, v)| (p.clone(), *v))
                .collect(),
            real_representing: false,
        }
    }

    pub fn max_abs(&self) -> T {
        self.entries.values().map(|v| v.norm()).fold(T::zero(), T::max)
    }

    /// Records sorted lexicographically by `(n, j)`.
    pub fn to_records(&self) -> Vec<CoeffRecord> {
        self.entries
            .iter()
            .map(|(p, v)| CoeffRecord {
                n: p.n.clone(),
                j: p.j.clone(),
                re: v.re.to_f64_lossy(),
                im: v.im.to_f64_lossy(),
            })
            .collect()
    }

    pub fn from_records(b: usize, d: usize, records: &[CoeffRecord]) -> Result<Self> {
        Self::from_entries(
            b,
            d,
            records.iter().map(|r| {
                (
                    LatticePoint::new(r.n.clone(), r.j.clone()),
                    Complex::new(T::lit(r.re), T::lit(r.im)),
                )
            }),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_records()).expect("records serialize")
    }

    pub fn from_json(b: usize, d: usize, s: &str) -> Result<Self> {
        let records: Vec<CoeffRecord> = serde_json::from_str(s)?;
        Self::from_records(b, d, &records)
    }

    fn check_point(&self, p: &LatticePoint) -> Result<()> {
        if p.dims() != (self.b, self.d) {
            return Err(Error::DimensionMismatch {
                expected: format!("(b, d) = ({}, {})", self.b, self.d),
                found: format!("{:?}", p.dims()),
            });
        }
        Ok(())
    }

    fn check_dims(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: format!("{:?}", self.dims()),
                found: format!("{:?}", other.dims()),
            });
        }
        Ok(())
    }

    fn canonicalize(&mut self) {
        self.entries.retain(|_, v| !is_negligible(*v));
    }
}

fn is_negligible<T: Real>(v: Complex<T>) -> bool {
    v.norm() < T::lit(1e-300) || v.norm() == T::zero()
}

/// Fourier-space product (the series of the pointwise product of functions).
pub fn convolve<T: Real>(f: &SpectralCoeffs<T>, g: &SpectralCoeffs<T>) -> Result<SpectralCoeffs<T>> {
    f.check_dims(g)?;
    // Accumulation order follows the (sorted) iteration of f and g, so the
    // result does not depend on hash order.
    let mut acc: HashMap<LatticePoint, Complex<T>> = HashMap::with_capacity(f.len() * g.len());
    for (p, a) in &f.entries {
        for (q, c) in &g.entries {
            *acc.entry(p + q).or_insert_with(Complex::default) += a * c;
        }
    }
    let mut out = SpectralCoeffs {
        b: f.b,
        d: f.d,
        entries: acc.into_iter().collect(),
        real_representing: f.real_representing && g.real_representing,
    };
    out.canonicalize();
    Ok(out)
}

/// `m`-fold convolution power, `m ≥ 1`.
pub fn convolution_power<T: Real>(f: &SpectralCoeffs<T>, m: u32) -> Result<SpectralCoeffs<T>> {
    if m == 0 {
        return Err(Error::invalid(
            "convolution power 0 requested; use SpectralCoeffs::identity explicitly",
        ));
    }
    let mut out = f.clone();
    for _ in 1..m {
        out = convolve(&out, f)?;
    }
    Ok(out)
}

/// `Σ |c(n,j)| e^{ρ(‖n‖₁+‖j‖₁)}`.
pub fn weighted_norm<T: Real>(f: &SpectralCoeffs<T>, norm: &AnalyticNorm<T>) -> T {
    f.entries.iter().map(|(p, v)| v.norm() * norm.weight(p)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(n: i64, j: i64) -> LatticePoint {
        LatticePoint::new(vec![n], vec![j])
    }

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    fn two_point(a: f64) -> SpectralCoeffs<f64> {
        SpectralCoeffs::from_entries(1, 1, [(pt(-1, 1), c(a)), (pt(1, -1), c(a))]).unwrap()
    }

    #[test]
    fn single_mode_product() {
        let a = 0.3;
        let f = SpectralCoeffs::delta(pt(-1, 1), c(a));
        let g = SpectralCoeffs::delta(pt(1, -1), c(a));
        let h = convolve(&f, &g).unwrap();
        assert_eq!(h.len(), 1);
        assert!((h.get(&pt(0, 0)) - c(a * a)).norm() < 1e-15);
    }

    #[test]
    fn square_of_two_point_series() {
        let f = two_point(1.0);
        let h = convolve(&f, &f).unwrap();
        let expect = [(pt(-2, 2), 1.0), (pt(0, 0), 2.0), (pt(2, -2), 1.0)];
        assert_eq!(h.len(), 3);
        for (p, v) in expect {
            assert_eq!(h.get(&p), c(v));
        }
    }

    #[test]
    fn identity_is_neutral() {
        let f = two_point(0.7);
        let h = convolve(&f, &SpectralCoeffs::identity(1, 1)).unwrap();
        assert_eq!(h, f);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let f = two_point(1.0);
        let g = SpectralCoeffs::<f64>::identity(2, 1);
        assert!(matches!(convolve(&f, &g), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn cube_coefficient_counts_arrangements() {
        let a = 0.2;
        let f = two_point(a);
        let h = convolution_power(&f, 3).unwrap();
        assert!((h.get(&pt(-1, 1)).re - 3.0 * a * a * a).abs() < 1e-15);
        assert!((h.get(&pt(-3, 3)).re - a * a * a).abs() < 1e-15);
        assert_eq!(convolution_power(&f, 1).unwrap(), f);
        assert!(convolution_power(&f, 0).is_err());
    }

    #[test]
    fn real_tag_survives_products() {
        let mut f = two_point(0.5);
        assert!(f.tag_real_representing(1e-14));
        let h = convolution_power(&f, 4).unwrap();
        assert!(h.is_tagged_real());
        assert!(h.conjugate_symmetry_defect() < 1e-15);
    }

    #[test]
    fn weighted_norm_values() {
        let nrm = AnalyticNorm::new(0.5).unwrap();
        assert_eq!(weighted_norm(&SpectralCoeffs::<f64>::new(1, 1), &nrm), 0.0);
        let one = SpectralCoeffs::delta(pt(0, 0), c(2.0));
        for rho in [0.1, 0.5, 3.0] {
            assert_eq!(weighted_norm(&one, &AnalyticNorm::new(rho).unwrap()), 2.0);
        }
        let v = weighted_norm(&two_point(1.0), &nrm);
        assert!((v - 2.0 * std::f64::consts::E).abs() < 1e-12);
        assert!((v - 5.43656).abs() < 1e-5);
        assert!(AnalyticNorm::new(0.0).is_err());
    }

    #[test]
    fn json_is_sorted_and_round_trips() {
        let f = SpectralCoeffs::from_entries(
            1,
            1,
            [(pt(2, 0), c(1.5)), (pt(-1, 3), Complex::new(0.0, -2.0)), (pt(-1, -3), c(0.25))],
        )
        .unwrap();
        let s = f.to_json();
        assert!(s.starts_with(r#"[{"n":[-1],"j":[-3]"#));
        let g = SpectralCoeffs::from_json(1, 1, &s).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn zero_entries_dropped() {
        let f = SpectralCoeffs::from_entries(1, 1, [(pt(1, 1), c(1.0)), (pt(1, 1), c(-1.0))]).unwrap();
        assert!(f.is_empty());
    }

    fn arb_series() -> impl Strategy<Value = SpectralCoeffs<f64>> {
        prop::collection::vec(((-3i64..=3, -3i64..=3), (-2.0f64..2.0, -2.0f64..2.0)), 1..6).prop_map(|v| {
            SpectralCoeffs::from_entries(
                1,
                1,
                v.into_iter().map(|((n, j), (re, im))| (pt(n, j), Complex::new(re, im))),
            )
            .unwrap()
        })
    }

    fn close(a: &SpectralCoeffs<f64>, b: &SpectralCoeffs<f64>, tol: f64) -> bool {
        let scale = 1.0 + a.max_abs().max(b.max_abs());
        a.support().chain(b.support()).all(|p| (a.get(p) - b.get(p)).norm() <= tol * scale)
    }

    proptest! {
        #[test]
        fn submultiplicative(f in arb_series(), g in arb_series(), rho in 0.01f64..2.0) {
            let nrm = AnalyticNorm::new(rho).unwrap();
            let h = convolve(&f, &g).unwrap();
            prop_assert!(weighted_norm(&h, &nrm) <= weighted_norm(&f, &nrm) * weighted_norm(&g, &nrm) * (1.0 + 1e-12));
        }

        #[test]
        fn commutative_associative(f in arb_series(), g in arb_series(), h in arb_series()) {
            let fg = convolve(&f, &g).unwrap();
            prop_assert!(close(&fg, &convolve(&g, &f).unwrap(), 1e-12));
            let l = convolve(&fg, &h).unwrap();
            let r = convolve(&f, &convolve(&g, &h).unwrap()).unwrap();
            prop_assert!(close(&l, &r, 1e-12));
        }

        #[test]
        fn power_adds_exponents(f in arb_series(), m1 in 1u32..4, m2 in 1u32..4) {
            let lhs = convolution_power(&f, m1 + m2).unwrap();
            let rhs = convolve(&convolution_power(&f, m1).unwrap(), &convolution_power(&f, m2).unwrap()).unwrap();
            prop_assert!(close(&lhs, &rhs, 1e-12));
        }

        #[test]
        fn real_representing_closed(f in arb_series(), m in 1u32..4) {
            let mut sym = f.add(&f.conj_reflect()).unwrap();
            prop_assert!(sym.tag_real_representing(1e-12));
            let p = convolution_power(&sym, m).unwrap();
            prop_assert!(p.is_tagged_real());
            prop_assert!(p.conjugate_symmetry_defect() <= 1e-12 * (1.0 + p.max_abs()));
        }
    }
}
