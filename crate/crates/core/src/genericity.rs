//! Difference sets of a seed and exact certification of the genericity
//! conditions.
//!
//! * `Γ = supp (u⁽⁰⁾+ū⁽⁰⁾)^{*p}`, the stencil of the linearized convolution.
//! * `𝒜`: sums of at most `B` elements of `Γ`.
//! * `𝒢`: the one-parameter families `α(e_k'−e_k, j_k−j_k')`, `α(−e_k, j_k)`.
//!
//! Every element of `Γ` (hence of `𝒜`) is determined by its time part:
//! `Δn = −c` and `Δj = Σ c_k j_k` for an integer vector `c`. Membership in
//! `𝒢` is decided from `c` exactly.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::characteristics::{characteristic_expr, membership};
use crate::field::{Ball, FieldElem, MinorCache};
use crate::lattice::LatticePoint;
use crate::radical::RadicalNumber;
use crate::seed::{LinearSeed, SeedRecord};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DifferenceKind {
    Gamma,
    AlgebraA,
    ExceptionalG,
}

/// A finite set of lattice differences. For the algebra each element carries
/// its minimal length `|σ|`; for `Γ` and `𝒢` the length is 1.
#[derive(Clone, Debug, PartialEq)]
pub struct DifferenceSet {
    pub kind: DifferenceKind,
    pub elements: BTreeMap<LatticePoint, usize>,
    /// Set when a capacity guard stopped the construction early.
    pub partial: bool,
}

impl DifferenceSet {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, p: &LatticePoint) -> bool {
        self.elements.contains_key(p)
    }

    pub fn points(&self) -> impl Iterator<Item = &LatticePoint> {
        self.elements.keys()
    }

    pub fn nonzero(&self) -> impl Iterator<Item = &LatticePoint> {
        self.elements.keys().filter(|p| !p.is_zero())
    }
}

/// Default capacity for [`build_algebra`].
pub const DEFAULT_ALGEBRA_CAP: usize = 1_000_000;

/// `Γ`: all `Σ p_k(−e_k, j_k) + Σ p'_k(e_k, −j_k)` with `Σ(p_k+p'_k) = p`.
pub fn build_gamma(seed: &LinearSeed) -> DifferenceSet {
    let s = seed.resonant_set();
    let mut level: BTreeSet<LatticePoint> = s.iter().cloned().collect();
    for _ in 1..seed.p() {
        level = level.iter().flat_map(|x| s.iter().map(move |y| x + y)).collect();
    }
    DifferenceSet {
        kind: DifferenceKind::Gamma,
        elements: level.into_iter().map(|x| (x, 1)).collect(),
        partial: false,
    }
}

/// Sums of at most `bound` elements of `gamma` (the empty sum is `(0,0)`),
/// each annotated with its minimal length. Stops with `partial = true` once
/// more than `cap` elements exist.
pub fn build_algebra(gamma: &DifferenceSet, bound: usize, cap: usize) -> DifferenceSet {
    let zero = match gamma.points().next() {
        Some(p) => {
            let (b, d) = p.dims();
            LatticePoint::zero(b, d)
        }
        None => {
            return DifferenceSet {
                kind: DifferenceKind::AlgebraA,
                elements: BTreeMap::new(),
                partial: false,
            }
        }
    };
    let mut elements = BTreeMap::new();
    elements.insert(zero.clone(), 0usize);
    let mut frontier = vec![zero];
    let mut partial = false;
    'outer: for len in 1..=bound {
        let mut next = Vec::new();
        for x in &frontier {
            for g in gamma.points() {
                let y = x + g;
                if !elements.contains_key(&y) {
                    elements.insert(y.clone(), len);
                    next.push(y);
                    if elements.len() > cap {
                        partial = true;
                        break 'outer;
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort();
        frontier = next;
    }
    DifferenceSet {
        kind: DifferenceKind::AlgebraA,
        elements,
        partial,
    }
}

/// Explicit listing of `𝒢` for `0 < |α| ≤ bound`.
pub fn build_exceptional_g(seed: &LinearSeed, bound: i64) -> DifferenceSet {
    let b = seed.b();
    let mut elements = BTreeMap::new();
    for alpha in (-bound..=bound).filter(|&a| a != 0) {
        for k in 0..b {
            elements.insert(seed.mode(k).scaled(alpha), 1);
            for k2 in (0..b).filter(|&k2| k2 != k) {
                elements.insert((&seed.mode(k) - &seed.mode(k2)).scaled(alpha), 1);
            }
        }
    }
    DifferenceSet {
        kind: DifferenceKind::ExceptionalG,
        elements,
        partial: false,
    }
}

/// Exact membership in the infinite set `𝒢`.
pub fn in_exceptional_g(seed: &LinearSeed, x: &LatticePoint) -> bool {
    let c: Vec<i64> = x.n.iter().map(|v| -v).collect();
    let nz: Vec<usize> = (0..c.len()).filter(|&k| c[k] != 0).collect();
    let sites = seed.sites();
    match nz.as_slice() {
        [k] => {
            let alpha = c[*k];
            x.j.iter().zip(&sites[*k]).all(|(dj, jk)| *dj == alpha * jk)
        }
        [k, k2] if c[*k] == -c[*k2] => {
            let alpha = c[*k];
            x.j
                .iter()
                .zip(sites[*k].iter().zip(&sites[*k2]))
                .all(|(dj, (a, b))| *dj == alpha * (a - b))
        }
        _ => false,
    }
}

/// The functions `L = ({a_m}, {b_mm'}, {c_m})` and `W` of an element.
#[derive(Clone, Debug, PartialEq)]
pub struct LwValues {
    pub l: Vec<RadicalNumber>,
    pub w: RadicalNumber,
    /// `(Δn·ω⁽⁰⁾)²`
    pub x: RadicalNumber,
    /// `|Δj|²`
    pub dj_sq: i64,
}

pub fn lw_functions(elem: &LatticePoint, seed: &LinearSeed) -> LwValues {
    lw_with_omega(elem, seed.omega0())
}

fn n_dot(n: &[i64], omega: &[RadicalNumber]) -> RadicalNumber {
    n.iter()
        .zip(omega)
        .filter(|(c, _)| **c != 0)
        .fold(RadicalNumber::zero(), |acc, (c, w)| &acc + &w.scale_int(*c))
}

fn lw_with_omega(elem: &LatticePoint, omega: &[RadicalNumber]) -> LwValues {
    let s = n_dot(&elem.n, omega);
    let x = s.square();
    let dj = &elem.j;
    let d = dj.len();
    let dj_sq = elem.j_sq();
    let four_x = x.scale_int(4);
    let base = &RadicalNumber::from_int(4 * dj_sq) - &four_x;
    let mut l = Vec::with_capacity(d * (d + 3) / 2);
    for m in 0..d {
        l.push(&RadicalNumber::from_int(4 * dj[m] * dj[m]) - &four_x);
    }
    for m in 0..d {
        for m2 in m + 1..d {
            l.push(RadicalNumber::from_int(8 * dj[m] * dj[m2]));
        }
    }
    for m in 0..d {
        l.push(base.scale_int(dj[m]));
    }
    let diff = &RadicalNumber::from_int(dj_sq) - &x;
    let w = &diff.square() - &four_x;
    LwValues { l, w, x, dj_sq }
}

/// A refutation witness; `value` is the exact textual form of the quantity
/// that vanished.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub quantity: String,
    pub elements: Vec<LatticePoint>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rows: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cols: Vec<usize>,
    pub value: String,
}

impl Witness {
    /// Recomputes the witnessed quantity from scratch; true iff it is zero.
    pub fn reverify(&self, seed: &LinearSeed) -> bool {
        self.recompute(seed).map(|v| v.is_zero()).unwrap_or(false)
    }

    fn recompute(&self, seed: &LinearSeed) -> Option<RadicalNumber> {
        let first = self.elements.first()?;
        match self.quantity.as_str() {
            "sigma_plus" | "sigma_minus" | "W" => {
                let v = lw_functions(first, seed);
                let dj = RadicalNumber::from_int(v.dj_sq);
                Some(match self.quantity.as_str() {
                    "sigma_plus" => &dj + &v.x,
                    "sigma_minus" => &dj - &v.x,
                    _ => v.w,
                })
            }
            "det_LW" => {
                let rows: Vec<LwValues> = self
                    .rows
                    .iter()
                    .map(|&r| self.elements.get(r).map(|e| lw_functions(e, seed)))
                    .collect::<Option<_>>()?;
                let m: Vec<Vec<RadicalNumber>> = rows
                    .iter()
                    .map(|v| {
                        let mut r: Vec<RadicalNumber> = self.cols.iter().map(|&c| v.l[c].clone()).collect();
                        r.push(v.w.clone());
                        r
                    })
                    .collect();
                Some(crate::field::bareiss_det(m))
            }
            "characteristic_plus" => Some(characteristic_expr(seed, first, 1)),
            "characteristic_minus" => Some(characteristic_expr(seed, first, -1)),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Holds { tested: u64 },
    Fails { tested: u64, witness: Witness },
    PartiallyVerified { tested: u64, total: f64, coverage: f64 },
}

impl Verdict {
    pub fn is_fail(&self) -> bool {
        matches!(self, Verdict::Fails { .. })
    }

    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds { .. })
    }

    pub fn tested(&self) -> u64 {
        match self {
            Verdict::Holds { tested } | Verdict::Fails { tested, .. } | Verdict::PartiallyVerified { tested, .. } => *tested,
        }
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Verdict::Fails { witness, .. } => Some(witness),
            _ => None,
        }
    }
}

/// Condition (i): `Σ± = Δj² ± (Δn·ω⁽⁰⁾)² ≠ 0` and `W ≠ 0` on `𝒜 ∖ {0}`.
pub fn check_condition_i(seed: &LinearSeed, algebra: &DifferenceSet) -> Verdict {
    check_condition_i_with(seed.omega0(), algebra)
}

/// Condition (i) for an arbitrary exact frequency vector. Exposed so the
/// checker can be exercised on frequencies that are not of seed form.
pub fn check_condition_i_with(omega: &[RadicalNumber], algebra: &DifferenceSet) -> Verdict {
    let mut tested = 0u64;
    for e in algebra.nonzero() {
        let v = lw_with_omega(e, omega);
        let dj = RadicalNumber::from_int(v.dj_sq);
        let checks = [("sigma_plus", &dj + &v.x), ("sigma_minus", &dj - &v.x), ("W", v.w)];
        tested += 1;
        for (name, val) in checks {
            if val.is_zero() {
                return Verdict::Fails {
                    tested,
                    witness: Witness {
                        quantity: name.into(),
                        elements: vec![e.clone()],
                        rows: vec![],
                        cols: vec![],
                        value: val.to_string(),
                    },
                };
            }
        }
    }
    if algebra.partial {
        Verdict::PartiallyVerified {
            tested,
            total: f64::NAN,
            coverage: f64::NAN,
        }
    } else {
        Verdict::Holds { tested }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IiMode {
    /// All subsets up to `cap`; beyond it, `fallback_samples` seeded samples.
    Exhaustive { cap: u64, fallback_samples: u64, rng_seed: u64 },
    Sampled { count: u64, rng_seed: u64 },
}

impl Default for IiMode {
    fn default() -> Self {
        IiMode::Exhaustive {
            cap: 1_000_000,
            fallback_samples: 2_000,
            rng_seed: 0,
        }
    }
}

/// Elements of `𝒜 ∖ 𝒢` eligible for condition (ii): nonzero with `Δj ≠ 0`,
/// one per pair `±x`.
///
/// `a`, `b` and `W` are even in `x` while `c` is odd, so a subset holding
/// both `x` and `−x` has `det [[a, W]] = 0` on those two rows whatever the
/// seed. Such subsets are dropped rather than counted as refutations.
pub fn condition_ii_pool(seed: &LinearSeed, algebra: &DifferenceSet) -> Vec<LatticePoint> {
    algebra
        .nonzero()
        .filter(|e| is_sign_representative(e) && e.j.iter().any(|&x| x != 0) && !in_exceptional_g(seed, e))
        .cloned()
        .collect()
}

/// First nonzero coordinate of `(n, j)` is positive.
fn is_sign_representative(e: &LatticePoint) -> bool {
    e.n.iter().chain(&e.j).find(|&&c| c != 0).is_some_and(|&c| c > 0)
}

fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Condition (ii) on `B'`-subsets of `𝒜 ∖ 𝒢`.
pub fn check_condition_ii(seed: &LinearSeed, algebra: &DifferenceSet, mode: IiMode) -> Verdict {
    let pool = condition_ii_pool(seed, algebra);
    let bp = seed.bound_b_prime();
    let total = binomial(pool.len() as u64, bp as u64);
    if pool.len() < bp {
        return Verdict::Holds { tested: 0 };
    }
    let lw: Vec<LwValues> = pool.par_iter().map(|e| lw_functions(e, seed)).collect();
    let ball = |x: &RadicalNumber| Ball::with_rel(x.to_f64(), 4.0 * f64::EPSILON);
    let balls: Vec<(Vec<Ball>, Ball)> = lw.iter().map(|v| (v.l.iter().map(ball).collect(), ball(&v.w))).collect();

    let (subsets, exhaustive): (Vec<Vec<usize>>, bool) = match mode {
        IiMode::Exhaustive { cap, .. } if total <= cap as f64 => (combinations(pool.len(), bp), true),
        IiMode::Exhaustive {
            fallback_samples, rng_seed, ..
        } => (sample_subsets(pool.len(), bp, fallback_samples, rng_seed), false),
        IiMode::Sampled { count, rng_seed } => (sample_subsets(pool.len(), bp, count, rng_seed), false),
    };
    let tested = subsets.len() as u64;
    let failure = subsets
        .par_iter()
        .map(|sigma| check_subset(sigma, &lw, &balls))
        .find_first(|r| r.is_some())
        .flatten();
    if let Some((sigma, rows, cols, value)) = failure {
        return Verdict::Fails {
            tested,
            witness: Witness {
                quantity: "det_LW".into(),
                elements: sigma.iter().map(|&i| pool[i].clone()).collect(),
                rows,
                cols,
                value: value.to_string(),
            },
        };
    }
    if exhaustive && !algebra.partial {
        Verdict::Holds { tested }
    } else {
        Verdict::PartiallyVerified {
            tested,
            total,
            coverage: tested as f64 / total,
        }
    }
}

type SubsetFailure = (Vec<usize>, Vec<usize>, Vec<usize>, RadicalNumber);

/// Checks one subset; on failure returns (subset, row positions, L columns,
/// determinant).
///
/// Every zero test first runs on rounding-safe enclosures; exact radical
/// arithmetic only settles the cases where the enclosure contains zero.
fn check_subset(sigma: &[usize], lw: &[LwValues], balls: &[(Vec<Ball>, Ball)]) -> Option<SubsetFailure> {
    let bp = sigma.len();
    let ncols = bp - 1;
    let l_rows: Vec<Vec<RadicalNumber>> = sigma.iter().map(|&i| lw[i].l.clone()).collect();
    let b_rows: Vec<Vec<Ball>> = sigma.iter().map(|&i| balls[i].0.clone()).collect();
    let w: Vec<&RadicalNumber> = sigma.iter().map(|&i| &lw[i].w).collect();
    let wb: Vec<Ball> = sigma.iter().map(|&i| balls[i].1).collect();
    let mut cache = MinorCache::new(&l_rows);
    let mut bcache = MinorCache::new(&b_rows);
    for rho in 1..bp {
        for rmask in masks(bp, rho + 1) {
            let rows: Vec<usize> = bits(rmask);
            'cols: for cmask in masks(ncols, rho) {
                let mut bminors = Vec::with_capacity(rows.len());
                for &r in &rows {
                    let m = bcache.minor(rmask & !(1 << r), cmask);
                    if m.contains_zero() && cache.minor(rmask & !(1 << r), cmask).is_zero() {
                        continue 'cols;
                    }
                    bminors.push(m);
                }
                // Expansion of det [[L_{R,C}, W_R]] along the last column.
                let mut bdet = Ball::zero();
                for (pos, (&r, m)) in rows.iter().zip(&bminors).enumerate() {
                    let term = wb[r].fmul(m);
                    bdet = if (pos + rho) % 2 == 0 { bdet.fadd(&term) } else { bdet.fsub(&term) };
                }
                if !bdet.contains_zero() {
                    continue;
                }
                let mut det = RadicalNumber::zero();
                for (pos, &r) in rows.iter().enumerate() {
                    let term = w[r] * &cache.minor(rmask & !(1 << r), cmask);
                    det = if (pos + rho) % 2 == 0 { &det + &term } else { &det - &term };
                }
                if det.is_zero() {
                    return Some((sigma.to_vec(), rows, bits(cmask), det));
                }
            }
        }
    }
    None
}

fn bits(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

/// All `k`-subsets of `0..n` as bit masks, ascending.
fn masks(n: usize, k: usize) -> Vec<u32> {
    (0u32..(1u32 << n)).filter(|m| m.count_ones() as usize == k).collect()
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for t in i + 1..k {
            idx[t] = idx[t - 1] + 1;
        }
    }
}

fn sample_subsets(n: usize, k: usize, count: u64, rng_seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    (0..count)
        .map(|_| {
            let mut s = sample(&mut rng, n, k).into_vec();
            s.sort_unstable();
            s
        })
        .collect()
}

/// Support of `(u⁽⁰⁾+ū⁽⁰⁾)^{*(p+1)}`, computed as a convolution power of the
/// seed with unit amplitudes (all coefficients are positive, so nothing
/// cancels).
pub fn cube_support(seed: &LinearSeed) -> Result<Vec<LatticePoint>> {
    let unit = seed.with_amplitudes(vec![1.0; seed.b()])?;
    let s = unit.u0_plus_conj::<f64>();
    let pow = crate::lattice::convolution_power(&s, seed.p() + 1)?;
    Ok(pow.support().cloned().collect())
}

/// Condition (iii): `supp (u⁽⁰⁾+ū⁽⁰⁾)^{*(p+1)} ∩ (𝒞 ∖ 𝒮) = ∅`.
pub fn check_condition_iii(seed: &LinearSeed) -> Result<Verdict> {
    let support = cube_support(seed)?;
    let s: BTreeSet<LatticePoint> = seed.resonant_set().into_iter().collect();
    let mut tested = 0u64;
    for x in support.iter().filter(|x| !s.contains(x)) {
        tested += 1;
        if let Some(sign) = membership(seed, x) {
            let value = characteristic_expr(seed, x, sign);
            return Ok(Verdict::Fails {
                tested,
                witness: Witness {
                    quantity: if sign > 0 { "characteristic_plus" } else { "characteristic_minus" }.into(),
                    elements: vec![x.clone()],
                    rows: vec![],
                    cols: vec![],
                    value: value.to_string(),
                },
            });
        }
    }
    Ok(Verdict::Holds { tested })
}

/// Options for [`certify`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenericityOptions {
    pub mode_ii: IiMode,
    pub algebra_cap: usize,
}

impl Default for GenericityOptions {
    fn default() -> Self {
        Self {
            mode_ii: IiMode::default(),
            algebra_cap: DEFAULT_ALGEBRA_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenericityCertificate {
    pub seed: SeedRecord,
    pub bound_b: usize,
    pub bound_b_prime: usize,
    pub gamma_size: usize,
    pub algebra_size: usize,
    pub algebra_partial: bool,
    /// `|𝒜 ∖ 𝒢|` restricted to `Δj ≠ 0`.
    pub pool_ii_size: usize,
    pub condition_i: Verdict,
    pub condition_ii: Verdict,
    pub condition_iii: Verdict,
}

impl GenericityCertificate {
    /// No condition refuted.
    pub fn is_generic(&self) -> bool {
        !(self.condition_i.is_fail() || self.condition_ii.is_fail() || self.condition_iii.is_fail())
    }

    /// Every condition fully certified.
    pub fn fully_certified(&self) -> bool {
        self.condition_i.holds() && self.condition_ii.holds() && self.condition_iii.holds()
    }

    pub fn witnesses(&self) -> Vec<&Witness> {
        [&self.condition_i, &self.condition_ii, &self.condition_iii]
            .into_iter()
            .filter_map(|v| v.witness())
            .collect()
    }
}

pub fn certify(seed: &LinearSeed, opts: &GenericityOptions) -> Result<GenericityCertificate> {
    let gamma = build_gamma(seed);
    let algebra = build_algebra(&gamma, seed.bound_b(), opts.algebra_cap);
    let pool = condition_ii_pool(seed, &algebra);
    Ok(GenericityCertificate {
        seed: seed.to_record(),
        bound_b: seed.bound_b(),
        bound_b_prime: seed.bound_b_prime(),
        gamma_size: gamma.len(),
        algebra_size: algebra.len(),
        algebra_partial: algebra.partial,
        pool_ii_size: pool.len(),
        condition_i: check_condition_i(seed, &algebra),
        condition_ii: check_condition_ii(seed, &algebra, opts.mode_ii),
        condition_iii: check_condition_iii(seed)?,
    })
}

/// Does a real (floating) site configuration come within `threshold` of the
/// zero sets of the condition (i) functions on the algebra?
///
/// Elements are parametrized by their time part `c` (`‖c‖₁ ≤ pB`, parity of
/// `p` when `p` is odd-closed), which is how they arise from `Γ`.
pub fn violates_condition_i_float(sites: &[Vec<f64>], coeffs: &[Vec<i64>], threshold: f64) -> bool {
    let omega: Vec<f64> = sites.iter().map(|s| (s.iter().map(|x| x * x).sum::<f64>() + 1.0).sqrt()).collect();
    let d = sites[0].len();
    coeffs.iter().any(|c| {
        let s: f64 = c.iter().zip(&omega).map(|(ci, w)| *ci as f64 * w).sum();
        let x = s * s;
        let dj_sq: f64 = (0..d)
            .map(|m| {
                let v: f64 = c.iter().zip(sites).map(|(ci, jk)| *ci as f64 * jk[m]).sum();
                v * v
            })
            .sum();
        let w = (dj_sq - x).powi(2) - 4.0 * x;
        (dj_sq + x).abs() < threshold || (dj_sq - x).abs() < threshold || w.abs() < threshold
    })
}

/// The time parts `c` of the nonzero elements of `𝒜` for `(b, p, B)`.
pub fn algebra_coefficients(b: usize, p: u32, bound: usize) -> Vec<Vec<i64>> {
    // Γ ↔ {c : ‖c‖₁ ≤ p, ‖c‖₁ ≡ p (mod 2)}; build 𝒜 in c-space.
    let mut gamma = Vec::new();
    let r = p as i64;
    let mut c = vec![-r; b];
    loop {
        let l1: i64 = c.iter().map(|x| x.abs()).sum();
        if l1 <= r && (l1 - r) % 2 == 0 {
            gamma.push(c.clone());
        }
        let Some(i) = (0..b).find(|&i| c[i] < r) else { break };
        c[i] += 1;
        for t in 0..i {
            c[t] = -r;
        }
    }
    let mut seen: BTreeSet<Vec<i64>> = BTreeSet::new();
    seen.insert(vec![0; b]);
    let mut frontier = vec![vec![0; b]];
    for _ in 0..bound {
        let mut next = Vec::new();
        for x in &frontier {
            for g in &gamma {
                let y: Vec<i64> = x.iter().zip(g).map(|(a, b)| a + b).collect();
                if seen.insert(y.clone()) {
                    next.push(y);
                }
            }
        }
        frontier = next;
    }
    seen.into_iter().filter(|c| c.iter().any(|&x| x != 0)).collect()
}

/// Monte Carlo estimate of the fraction of real site configurations (drawn
/// uniformly from `[−box_radius, box_radius]^{d·b}`) that come within
/// `threshold` of the condition (i) zero sets.
pub fn nongeneric_measure_estimate(
    d: usize,
    b: usize,
    p: u32,
    samples: u64,
    rng_seed: u64,
    box_radius: f64,
    threshold: f64,
) -> Result<f64> {
    use rand::Rng;
    if samples == 0 {
        return Err(Error::invalid("nongeneric_measure_estimate needs samples >= 1"));
    }
    if d == 0 || b == 0 {
        return Err(Error::invalid("dimensions must be positive"));
    }
    let bound = (d + 1) * (d + 2) / 2 + b * (b + 1);
    let coeffs = algebra_coefficients(b, p, bound);
    let violating: u64 = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            rng.set_stream(i);
            let sites: Vec<Vec<f64>> = (0..b)
                .map(|_| (0..d).map(|_| rng.random_range(-box_radius..=box_radius)).collect())
                .collect();
            u64::from(violates_condition_i_float(&sites, &coeffs, threshold))
        })
        .sum();
    Ok(violating as f64 / samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pell(p: u32) -> LinearSeed {
        LinearSeed::new(vec![vec![1]], vec![0.01], p).unwrap()
    }

    fn pt(n: i64, j: i64) -> LatticePoint {
        LatticePoint::new(vec![n], vec![j])
    }

    #[test]
    fn gamma_examples() {
        let g = build_gamma(&pell(2));
        let got: Vec<_> = g.points().cloned().collect();
        assert_eq!(got, vec![pt(-2, 2), pt(0, 0), pt(2, -2)]);
        let g1 = build_gamma(&pell(1));
        let got: Vec<_> = g1.points().cloned().collect();
        assert_eq!(got, vec![pt(-1, 1), pt(1, -1)]);
        for p in [2, 4] {
            let s = LinearSeed::new(vec![vec![1, 2], vec![-1, 0]], vec![0.1, 0.1], p).unwrap();
            assert!(build_gamma(&s).contains(&LatticePoint::zero(2, 2)));
        }
    }

    #[test]
    fn algebra_examples() {
        let g = build_gamma(&pell(2));
        assert_eq!(pell(2).bound_b(), 5);
        let a = build_algebra(&g, 5, DEFAULT_ALGEBRA_CAP);
        let want: BTreeSet<_> = (-5..=5).map(|t| pt(2 * t, -2 * t)).collect();
        assert_eq!(a.points().cloned().collect::<BTreeSet<_>>(), want);
        assert_eq!(a.elements[&pt(6, -6)], 3);
        let a0 = build_algebra(&g, 0, DEFAULT_ALGEBRA_CAP);
        assert_eq!(a0.len(), 1);
        let capped = build_algebra(&g, 5, 4);
        assert!(capped.partial);
    }

    #[test]
    fn exceptional_examples() {
        let g = build_exceptional_g(&pell(2), 5);
        let want: BTreeSet<_> = (-5..=5).filter(|&a| a != 0).map(|a| pt(-a, a)).collect();
        assert_eq!(g.points().cloned().collect::<BTreeSet<_>>(), want);
        let s = LinearSeed::new(vec![vec![1], vec![2]], vec![0.1, 0.1], 2).unwrap();
        let g = build_exceptional_g(&s, 1);
        assert_eq!(g.len(), 6);
        assert!(g.contains(&LatticePoint::new(vec![-1, 1], vec![-1])));
        assert!(g.contains(&LatticePoint::new(vec![1, -1], vec![1])));
        for e in g.points() {
            assert!(in_exceptional_g(&s, e));
        }
        assert!(!in_exceptional_g(&s, &LatticePoint::new(vec![-1, -1], vec![3])));
        assert!(!in_exceptional_g(&s, &LatticePoint::new(vec![-2, 0], vec![3])));
    }

    #[test]
    fn lw_examples() {
        let v = lw_functions(&pt(2, -2), &pell(2));
        assert_eq!(v.l, vec![RadicalNumber::from_int(-16), RadicalNumber::from_int(32)]);
        assert_eq!(v.w, RadicalNumber::from_int(-16));
        let v = lw_functions(&pt(0, 3), &pell(2));
        assert_eq!(v.w, RadicalNumber::from_int(81));
        assert_eq!(v.l[0], RadicalNumber::from_int(36));
        let v = lw_functions(&pt(3, 0), &pell(2));
        // X = 18: a = −72, c = 0, W = 18² − 72
        assert_eq!(v.l, vec![RadicalNumber::from_int(-72), RadicalNumber::zero()]);
        assert_eq!(v.w, RadicalNumber::from_int(324 - 72));
    }

    #[test]
    fn condition_i_pell_closed_forms() {
        let s = pell(2);
        let a = build_algebra(&build_gamma(&s), s.bound_b(), DEFAULT_ALGEBRA_CAP);
        assert_eq!(check_condition_i(&s, &a), Verdict::Holds { tested: 10 });
        for t in (-5i64..=5).filter(|&t| t != 0) {
            let v = lw_functions(&pt(2 * t, -2 * t), &s);
            let sm = &RadicalNumber::from_int(v.dj_sq) - &v.x;
            assert_eq!(sm, RadicalNumber::from_int(-4 * t * t));
            assert_eq!(v.w, RadicalNumber::from_int(16 * t * t * (t * t - 2)));
        }
    }

    #[test]
    fn condition_i_detects_engineered_zero() {
        // rational ω = 1: element (1, 1) has Δj² − (Δn·ω)² = 0
        let mut elements = BTreeMap::new();
        elements.insert(pt(0, 0), 0);
        elements.insert(pt(1, 1), 1);
        let a = DifferenceSet {
            kind: DifferenceKind::AlgebraA,
            elements,
            partial: false,
        };
        let v = check_condition_i_with(&[RadicalNumber::one()], &a);
        let w = v.witness().expect("fails");
        assert_eq!(w.quantity, "sigma_minus");
        assert_eq!(w.value, "0");
    }

    #[test]
    fn condition_ii_vacuous_for_single_frequency() {
        let s = pell(2);
        let a = build_algebra(&build_gamma(&s), s.bound_b(), DEFAULT_ALGEBRA_CAP);
        assert!(condition_ii_pool(&s, &a).is_empty());
        assert_eq!(check_condition_ii(&s, &a, IiMode::default()), Verdict::Holds { tested: 0 });
        let s2 = LinearSeed::new(vec![vec![1, 0]], vec![0.01], 2).unwrap();
        let a2 = build_algebra(&build_gamma(&s2), s2.bound_b(), DEFAULT_ALGEBRA_CAP);
        let v = check_condition_ii(&s2, &a2, IiMode::Sampled { count: 500, rng_seed: 7 });
        assert!(!v.is_fail());
    }

    #[test]
    fn condition_ii_two_frequencies_sampled() {
        let s = LinearSeed::new(vec![vec![1], vec![2]], vec![0.01, 0.01], 2).unwrap();
        let a = build_algebra(&build_gamma(&s), s.bound_b(), DEFAULT_ALGEBRA_CAP);
        let pool = condition_ii_pool(&s, &a);
        assert!(!pool.is_empty());
        let v = check_condition_ii(&s, &a, IiMode::Sampled { count: 200, rng_seed: 7 });
        if let Some(w) = v.witness() {
            assert!(w.reverify(&s));
        }
        assert_eq!(v.tested(), 200);
    }

    #[test]
    fn combinatorics() {
        assert_eq!(combinations(5, 3).len(), 10);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
        assert_eq!(binomial(6, 3), 20.0);
        assert_eq!(masks(4, 2).len(), 6);
    }

    #[test]
    fn condition_iii_examples() {
        assert_eq!(cube_support(&pell(2)).unwrap(), vec![pt(-3, 3), pt(-1, 1), pt(1, -1), pt(3, -3)]);
        assert_eq!(check_condition_iii(&pell(2)).unwrap(), Verdict::Holds { tested: 2 });
        assert_eq!(check_condition_iii(&pell(1)).unwrap(), Verdict::Holds { tested: 3 });
        // (n, j) = ((4,−1), (0,1)) lies on 𝒞₋ for sites (1,0), (4,1)
        let s = LinearSeed::new(vec![vec![1, 0], vec![4, 1]], vec![0.1, 0.1], 4).unwrap();
        let v = check_condition_iii(&s).unwrap();
        let w = v.witness().expect("refuted");
        let hit = LatticePoint::new(vec![4, -1], vec![0, 1]);
        assert!(w.elements[0] == hit || w.elements[0] == -&hit);
        assert_eq!(membership(&s, &hit), Some(-1));
        assert!(w.reverify(&s));
    }

    #[test]
    fn pell_certificate() {
        let c = certify(&pell(2), &GenericityOptions::default()).unwrap();
        assert!(c.fully_certified());
        assert_eq!(c.pool_ii_size, 0);
        let json = serde_json::to_string(&c).unwrap();
        let back: GenericityCertificate = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn measure_estimate() {
        assert!(nongeneric_measure_estimate(1, 1, 2, 0, 1, 5.0, 1e-9).is_err());
        let f = nongeneric_measure_estimate(1, 1, 2, 2000, 3, 5.0, 1e-9).unwrap();
        assert!(f < 0.01);
        let coeffs = algebra_coefficients(1, 2, 5);
        assert_eq!(coeffs.len(), 10);
        assert!(!violates_condition_i_float(&[vec![1.0]], &coeffs, 1e-9));
    }
}
