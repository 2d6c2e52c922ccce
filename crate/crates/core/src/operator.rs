//! The doubled linearized operator `F′ = D′ + A` on truncated boxes, the
//! projection onto the characteristics, block inverses of `P A₀ P`, Schur
//! complement reduction and spectral gap diagnostics.
//!
//! Rows are ordered as all `u`-rows (one per box point) followed by all
//! `ū`-rows. The projection `P` selects `u`-rows on `𝒞₊` and `ū`-rows on
//! `𝒞₋`, which are exactly the rows whose diagonal vanishes at `ω = ω⁽⁰⁾`.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::characteristics::{membership, CharacteristicSet, DiophantineProfile};
use crate::lattice::{convolution_power, LatticePoint, SpectralCoeffs};
use crate::linalg::{CMatrix, Matrix};
use crate::seed::{LinearSeed, Nonlinearity};
use crate::{Complex, Error, Real, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    U,
    Ubar,
}

/// `A₀`'s kernel `(u⁽⁰⁾+ū⁽⁰⁾)^{*p}`; every block of `A₀` is convolution by it.
pub fn assemble_a0<T: Real>(seed: &LinearSeed) -> Result<SpectralCoeffs<T>> {
    convolution_power(&seed.u0_plus_conj::<T>(), seed.p())
}

/// Spatial/temporal truncation of the operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpBox {
    /// `‖n‖₁ ≤ n_l1`
    pub n_l1: i64,
    /// `‖j‖_∞ ≤ j_inf`
    pub j_inf: i64,
}

/// All box points, sorted.
pub fn box_points(b: usize, d: usize, bx: OpBox) -> Vec<LatticePoint> {
    let ns = crate::characteristics::n_vectors(b, bx.n_l1);
    let side = (2 * bx.j_inf + 1) as usize;
    let mut out = Vec::with_capacity(ns.len() * side.pow(d as u32));
    for n in &ns {
        for idx in 0..side.pow(d as u32) {
            let mut rest = idx;
            let j: Vec<i64> = (0..d)
                .map(|_| {
                    let c = (rest % side) as i64 - bx.j_inf;
                    rest /= side;
                    c
                })
                .collect();
            out.push(LatticePoint::new(n.clone(), j));
        }
    }
    out.sort();
    out
}

/// The truncated doubled operator `F′_N`.
#[derive(Clone, Debug)]
pub struct OperatorBox<T> {
    pub points: Vec<LatticePoint>,
    pub bx: OpBox,
    pub omega: Vec<T>,
    /// Per row: `n·ω + √(j²+1)` on `u`-rows, `−n·ω + √(j²+1)` on `ū`-rows.
    pub diag: Vec<T>,
    /// Row lies on the characteristic sheet of its kind (exact test at `ω⁽⁰⁾`).
    pub exact_zero: Vec<bool>,
    /// Off-diagonal (nonlinear) part, including the `D^{-1}` row weights.
    pub conv: CMatrix<T>,
    pub p_rows: Vec<usize>,
    pub pc_rows: Vec<usize>,
}

impl<T: Real> OperatorBox<T> {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn row(&self, r: usize) -> (&LatticePoint, RowKind) {
        let n = self.points.len();
        if r < n {
            (&self.points[r], RowKind::U)
        } else {
            (&self.points[r - n], RowKind::Ubar)
        }
    }

    /// `D′ + A` as a dense complex matrix.
    pub fn full(&self) -> CMatrix<T> {
        let mut m = self.conv.clone();
        for (i, d) in self.diag.iter().enumerate() {
            m.re[(i, i)] += *d;
        }
        m
    }

    /// `√(j²+1)` per row.
    pub fn d_weights(&self) -> Vec<T> {
        (0..self.len()).map(|r| T::lit(((self.row(r).0.j_sq() + 1) as f64).sqrt())).collect()
    }

    /// Hermitian defect of `diag(D)·A`. The row weights `D^{-1}` make `A`
    /// itself non-symmetric; the convolution part is Hermitian when the
    /// linearization point is real-representing.
    pub fn conv_hermitian_defect(&self) -> T {
        let w = self.d_weights();
        let mut m = self.conv.clone();
        for i in 0..self.len() {
            for j in 0..self.len() {
                m.re[(i, j)] *= w[i];
                m.im[(i, j)] *= w[i];
            }
        }
        m.hermitian_defect()
    }
}

/// Assembles `F′_N` on the box at frequency `omega`, linearized at `u`
/// (`u⁽⁰⁾` when `None`), with the exact Jacobian of `nl`.
pub fn assemble_fprime_n<T: Real>(
    seed: &LinearSeed,
    omega: &[T],
    bx: OpBox,
    nl: &Nonlinearity<T>,
    u: Option<&SpectralCoeffs<T>>,
) -> Result<OperatorBox<T>> {
    if omega.len() != seed.b() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} frequencies", seed.b()),
            found: omega.len().to_string(),
        });
    }
    let u0;
    let u = match u {
        Some(u) => {
            if u.dims() != (seed.b(), seed.d()) {
                return Err(Error::DimensionMismatch {
                    expected: format!("{:?}", (seed.b(), seed.d())),
                    found: format!("{:?}", u.dims()),
                });
            }
            u
        }
        None => {
            u0 = seed.u0::<T>();
            &u0
        }
    };
    let w = u.add(&u.conj_reflect())?.scale_real(T::lit(0.5));
    // dN = K * dw and dw = (du + dū)/2
    let half_k = nl.derivative_kernel(&w)?.scale_real(T::lit(0.5));

    let points = box_points(seed.b(), seed.d(), bx);
    let npts = points.len();
    let nrows = 2 * npts;
    let mut diag = vec![T::zero(); nrows];
    let mut exact_zero = vec![false; nrows];
    for (i, x) in points.iter().enumerate() {
        let nw: T = x.n.iter().zip(omega).map(|(c, w)| T::lit(*c as f64) * *w).sum();
        let r = T::lit(((x.j_sq() + 1) as f64).sqrt());
        diag[i] = nw + r;
        diag[npts + i] = -nw + r;
        match membership(seed, x) {
            Some(1) => exact_zero[i] = true,
            Some(_) => exact_zero[npts + i] = true,
            None => {}
        }
    }
    let mut conv = CMatrix::zeros(nrows, nrows);
    if !half_k.is_empty() {
        let index: HashMap<&LatticePoint, usize> = points.iter().enumerate().map(|(i, p)| (p, i)).collect();
        for (i, x) in points.iter().enumerate() {
            let dinv = T::one() / T::lit(((x.j_sq() + 1) as f64).sqrt());
            for (z, kv) in half_k.iter() {
                // entry (x, y) = K(x − y)/2 with y = x − z
                let y = x - z;
                if let Some(&jdx) = index.get(&y) {
                    let v = *kv * dinv;
                    for (ro, co) in [(0, 0), (0, npts), (npts, 0), (npts, npts)] {
                        let cur = conv.get(ro + i, co + jdx);
                        conv.set(ro + i, co + jdx, cur + v);
                    }
                }
            }
        }
    }
    let p_rows: Vec<usize> = (0..nrows).filter(|&r| exact_zero[r]).collect();
    let pc_rows: Vec<usize> = (0..nrows).filter(|&r| !exact_zero[r]).collect();
    Ok(OperatorBox {
        points,
        bx,
        omega: omega.to_vec(),
        diag,
        exact_zero,
        conv,
        p_rows,
        pc_rows,
    })
}

/// A diagonal block of `P A₀ P`.
#[derive(Clone, Debug, PartialEq)]
pub struct Block<T> {
    pub rows: Vec<(LatticePoint, RowKind)>,
    pub matrix: Matrix<T>,
}

/// The principal submatrix of `A₀` on the characteristic rows of `cs`, split
/// into its connected blocks.
pub fn restrict_pa0p<T: Real>(kernel: &SpectralCoeffs<T>, cs: &CharacteristicSet) -> Vec<Block<T>> {
    let rows: Vec<(LatticePoint, RowKind)> = cs
        .plus
        .iter()
        .map(|x| (x.clone(), RowKind::U))
        .chain(cs.minus.iter().map(|x| (x.clone(), RowKind::Ubar)))
        .collect();
    let n = rows.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for i in 0..n {
        for k in i + 1..n {
            if kernel.contains(&(&rows[i].0 - &rows[k].0)) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, k));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut blocks: Vec<Block<T>> = groups
        .into_values()
        .map(|idx| {
            let matrix = Matrix::from_fn(idx.len(), idx.len(), |a, b| kernel.get(&(&rows[idx[a]].0 - &rows[idx[b]].0)).re);
            Block {
                rows: idx.iter().map(|&i| rows[i].clone()).collect(),
                matrix,
            }
        })
        .collect();
    blocks.sort_by(|a, b| a.rows.cmp(&b.rows));
    blocks
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockCondition {
    pub size: usize,
    pub inverse_norm: f64,
    pub condition: f64,
    pub first_point: Option<LatticePoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport<T> {
    pub inverse_norm: T,
    pub bound: T,
    pub epsilon: T,
    pub a_inf: T,
    pub pass: bool,
    pub blocks: Vec<BlockCondition>,
    /// Blocks whose inverse does not exist.
    pub singular_blocks: Vec<Vec<LatticePoint>>,
}

/// `max_blocks ‖B^{-1}‖₂` against `(ε‖a‖_∞^p)^{-1}`.
pub fn block_gap<T: Real>(blocks: &[Block<T>], epsilon: T, a_inf: T, p: u32) -> GapReport<T> {
    let bound = T::one() / (epsilon * a_inf.powi(p as i32));
    let conds: Vec<(BlockCondition, bool)> = blocks
        .par_iter()
        .map(|b| {
            let sv = b.matrix.singular_values();
            let smax = sv.first().copied().unwrap_or(T::zero());
            let smin = sv.last().copied().unwrap_or(T::zero());
            let singular = smin <= smax * T::epsilon() * T::lit(b.matrix.rows() as f64);
            let inv = if singular { T::infinity() } else { T::one() / smin };
            (
                BlockCondition {
                    size: b.rows.len(),
                    inverse_norm: inv.to_f64_lossy(),
                    condition: (smax * inv).to_f64_lossy(),
                    first_point: b.rows.first().map(|r| r.0.clone()),
                },
                singular,
            )
        })
        .collect();
    let inverse_norm = conds
        .iter()
        .map(|(c, _)| T::lit(c.inverse_norm))
        .fold(T::zero(), T::max);
    let singular_blocks = blocks
        .iter()
        .zip(&conds)
        .filter(|(_, (_, s))| *s)
        .map(|(b, _)| b.rows.iter().map(|r| r.0.clone()).collect())
        .collect();
    GapReport {
        inverse_norm,
        bound,
        epsilon,
        a_inf,
        pass: inverse_norm <= bound,
        blocks: conds.into_iter().map(|(c, _)| c).collect(),
        singular_blocks,
    }
}

/// Fraction of amplitude vectors `a ∈ (0, a_inf]^b` for which the block gap
/// holds at `epsilon`.
pub fn measure_estimate_prop1(
    seed: &LinearSeed,
    cs: &CharacteristicSet,
    epsilon: f64,
    a_inf: f64,
    samples: u64,
    rng_seed: u64,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::invalid("measure_estimate_prop1 needs samples >= 1"));
    }
    if seed.p() % 2 != 0 {
        return Err(Error::invalid("the block gap estimate assumes even p"));
    }
    let passed: Result<Vec<bool>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            rng.set_stream(i);
            let a: Vec<f64> = (0..seed.b())
                .map(|_| loop {
                    let v: f64 = rng.random_range(0.0..=a_inf);
                    if v > 0.0 {
                        break v;
                    }
                })
                .collect();
            let s = seed.with_amplitudes(a)?;
            let blocks = restrict_pa0p(&assemble_a0::<f64>(&s)?, cs);
            Ok(block_gap(&blocks, epsilon, s.delta(), s.p()).pass)
        })
        .collect();
    let passed = passed?;
    Ok(passed.iter().filter(|&&b| b).count() as f64 / samples as f64)
}

/// The four blocks of `M` for the row split `(P, P^c)`.
#[derive(Clone, Debug)]
pub struct SchurParts<T> {
    pub pp: Matrix<T>,
    pub pc: Matrix<T>,
    pub cp: Matrix<T>,
    pub cc: Matrix<T>,
}

pub fn schur_parts<T: Real>(m: &Matrix<T>, p: &[usize]) -> SchurParts<T> {
    let c: Vec<usize> = (0..m.rows()).filter(|i| !p.contains(i)).collect();
    SchurParts {
        pp: m.submatrix(p, p),
        pc: m.submatrix(p, &c),
        cp: m.submatrix(&c, p),
        cc: m.submatrix(&c, &c),
    }
}

/// Half the smallest singular value of the complement block: the radius of
/// the interval on which the reduction is analytic.
pub fn analyticity_radius<T: Real>(m: &Matrix<T>, p: &[usize]) -> T {
    let parts = schur_parts(m, p);
    if parts.cc.rows() == 0 {
        return T::infinity();
    }
    parts.cc.singular_values().last().copied().unwrap_or(T::zero()) / T::lit(2.0)
}

/// `H(λ) = M_PP − λ − M_PC (M_CC − λ)^{-1} M_CP`.
///
/// Rejects `λ` when `M_CC − λ` has smallest singular value below `1e-12`.
pub fn schur_reduce<T: Real>(m: &Matrix<T>, p: &[usize], lambda: T) -> Result<Matrix<T>> {
    let parts = schur_parts(m, p);
    let h = parts.pp.shift(lambda);
    if parts.cc.rows() == 0 {
        return Ok(h);
    }
    let shifted = parts.cc.shift(lambda);
    let smin = shifted.singular_values().last().copied().unwrap_or(T::zero());
    if smin < T::lit(1e-12) {
        return Err(Error::OutsideWindow {
            lambda: lambda.to_f64_lossy(),
            radius: analyticity_radius(m, p).to_f64_lossy(),
            sigma_min: smin.to_f64_lossy(),
        });
    }
    let coupling = parts.pc.matmul(&shifted.inverse()?)?.matmul(&parts.cp)?;
    Ok(h.sub(&coupling))
}

/// `‖M_PC (M_CC − λ)^{-1} M_CP‖₂`.
pub fn coupling_norm<T: Real>(m: &Matrix<T>, p: &[usize], lambda: T) -> Result<T> {
    let parts = schur_parts(m, p);
    if parts.cc.rows() == 0 || parts.pp.rows() == 0 {
        return Ok(T::zero());
    }
    let inv = parts.cc.shift(lambda).inverse()?;
    Ok(parts.pc.matmul(&inv)?.matmul(&parts.cp)?.norm2())
}

/// Eigenvalues of a symmetric `M` inside the analyticity window, found as
/// the zeros of the eigenvalue branches of `H(λ)`. Each branch is strictly
/// decreasing (`H′(λ) = −I − M_PC (M_CC−λ)^{-2} M_CP`), so bisection on
/// every sign change recovers all of them.
pub fn schur_window_eigenvalues<T: Real>(m: &Matrix<T>, p: &[usize], tol: T) -> Result<Vec<T>> {
    let r = analyticity_radius(m, p);
    let r = if r.is_finite() { r } else { m.norm2() + T::one() };
    let lo = -r * T::lit(1.0 - 1e-12);
    let hi = r * T::lit(1.0 - 1e-12);
    let branch = |lambda: T, i: usize| -> Result<T> {
        let h = schur_reduce(m, p, lambda)?;
        Ok(h.sym_eigen()?.0[i])
    };
    let mut roots = Vec::new();
    for i in 0..p.len() {
        let (mut a, mut b) = (lo, hi);
        let (fa, fb) = (branch(a, i)?, branch(b, i)?);
        if !(fa > T::zero() && fb <= T::zero()) {
            continue;
        }
        for _ in 0..200 {
            if b - a <= tol * (T::one() + a.abs().max(b.abs())) {
                break;
            }
            let mid = (a + b) / T::lit(2.0);
            if branch(mid, i)? > T::zero() {
                a = mid;
            } else {
                b = mid;
            }
        }
        roots.push((a + b) / T::lit(2.0));
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    Ok(roots)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop3Report {
    pub n: i64,
    pub delta: f64,
    pub epsilon: f64,
    pub q: f64,
    /// `‖(F′_N)^{-1}‖₂`, `+∞` when singular.
    pub inverse_norm: f64,
    /// `N^q/(ε δ^p)`
    pub bound: f64,
    pub pass: bool,
    /// `δN` within the configured smallness threshold.
    pub smallness_ok: bool,
    pub pc_inverse_norm: f64,
    /// `C′N^q` from the fitted profile.
    pub pc_bound: f64,
    pub coupling_norm: f64,
    /// `‖(P F′_N P)^{-1}‖₂`
    pub pfp_inverse_norm: f64,
    pub p_rows: usize,
    pub pc_rows: usize,
    /// Points whose diagonal vanishes exactly at `ω⁽⁰⁾`.
    pub exact_zero_rows: Vec<(LatticePoint, RowKind)>,
    /// `1/min |diag|` over rows with nonzero diagonal.
    pub diag_inverse_norm: f64,
}

/// Spectral gap diagnostics for the truncated operator.
pub fn gap_prop3(
    op: &OperatorBox<f64>,
    p: u32,
    delta: f64,
    epsilon: f64,
    profile: &DiophantineProfile,
    smallness: f64,
) -> Result<Prop3Report> {
    let n = op.bx.n_l1;
    let full = op.full();
    let m = full.as_real_operator();
    let embed = !full.is_real();
    let lift = |rows: &[usize]| -> Vec<usize> {
        if embed {
            rows.iter().copied().chain(rows.iter().map(|r| r + op.len())).collect()
        } else {
            rows.to_vec()
        }
    };
    let p_rows = lift(&op.p_rows);
    let inv_norm = |mat: &Matrix<f64>| -> Result<f64> {
        if mat.rows() == 0 {
            return Ok(0.0);
        }
        let s = mat.smallest_singular_value(1e-10, 2000)?;
        Ok(if s == 0.0 { f64::INFINITY } else { 1.0 / s })
    };
    let inverse_norm = inv_norm(&m)?;
    let parts = schur_parts(&m, &p_rows);
    let pc_inverse_norm = inv_norm(&parts.cc)?;
    let pfp_inverse_norm = inv_norm(&parts.pp)?;
    let coupling = if pc_inverse_norm.is_finite() {
        coupling_norm(&m, &p_rows, 0.0)?
    } else {
        f64::INFINITY
    };
    let q = profile.q;
    let bound = (n as f64).powf(q) / (epsilon * delta.powi(p as i32));
    let diag_min = op
        .diag
        .iter()
        .zip(&op.exact_zero)
        .filter(|(_, z)| !**z)
        .map(|(d, _)| d.abs())
        .fold(f64::INFINITY, f64::min);
    Ok(Prop3Report {
        n,
        delta,
        epsilon,
        q,
        inverse_norm,
        bound,
        pass: inverse_norm <= bound,
        smallness_ok: delta * n as f64 <= smallness,
        pc_inverse_norm,
        pc_bound: profile.inverse_bound(n),
        coupling_norm: coupling,
        pfp_inverse_norm,
        p_rows: op.p_rows.len(),
        pc_rows: op.pc_rows.len(),
        exact_zero_rows: op.p_rows.iter().map(|&r| (op.row(r).0.clone(), op.row(r).1)).collect(),
        diag_inverse_norm: 1.0 / diag_min,
    })
}

/// Value of a complex entry as `(re, im)`; convenience for reports.
pub fn entry_pair<T: Real>(v: Complex<T>) -> (f64, f64) {
    (v.re.to_f64_lossy(), v.im.to_f64_lossy())
}
