//! Lyapunov-Schmidt Newton solver for the lattice equations.
//!
//! Only the `u`-rows are stored: the `ū`-rows are their conjugate mirror
//! whenever the nonlinearity maps real functions to real functions, so
//! `ū = conj_reflect(u)` throughout.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::lattice::{weighted_norm, AnalyticNorm, LatticePoint, SpectralCoeffs};
use crate::linalg::Matrix;
use crate::seed::{LinearSeed, Nonlinearity, SeedRecord};
use crate::{Complex, Error, Real, Result};

fn sqrt_d<T: Real>(x: &LatticePoint) -> T {
    T::lit(((x.j_sq() + 1) as f64).sqrt())
}

fn n_dot<T: Real>(x: &LatticePoint, omega: &[T]) -> T {
    x.n.iter().zip(omega).map(|(c, w)| T::lit(*c as f64) * *w).sum()
}

/// Frequencies stored as `ω⁽⁰⁾ + shift`. Diagonal entries are formed as
/// `(n·ω⁽⁰⁾ + √(j²+1)) + n·shift`, so they vanish exactly on the
/// characteristics when the shift is zero and carry no cancellation error
/// from `ω − ω⁽⁰⁾`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frequencies<T> {
    pub omega0: Vec<T>,
    pub shift: Vec<T>,
}

impl<T: Real> Frequencies<T> {
    pub fn unshifted(seed: &LinearSeed) -> Self {
        Self {
            omega0: seed.omega0_f64().iter().map(|w| T::lit(*w)).collect(),
            shift: vec![T::zero(); seed.b()],
        }
    }

    pub fn with_shift(seed: &LinearSeed, shift: Vec<T>) -> Result<Self> {
        if shift.len() != seed.b() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} frequencies", seed.b()),
                found: shift.len().to_string(),
            });
        }
        Ok(Self {
            shift,
            ..Self::unshifted(seed)
        })
    }

    /// From absolute frequencies; the shift inherits their rounding.
    pub fn from_omega(seed: &LinearSeed, omega: &[T]) -> Result<Self> {
        let base = Self::unshifted(seed);
        Self::with_shift(seed, omega.iter().zip(&base.omega0).map(|(w, w0)| *w - *w0).collect())
    }

    pub fn omega(&self) -> Vec<T> {
        self.omega0.iter().zip(&self.shift).map(|(a, b)| *a + *b).collect()
    }

    /// `n·ω + √(j²+1)`
    pub fn diag(&self, x: &LatticePoint) -> T {
        (n_dot(x, &self.omega0) + sqrt_d::<T>(x)) + n_dot(x, &self.shift)
    }

    /// `−n·ω + √(j²+1)`
    pub fn diag_conj(&self, x: &LatticePoint) -> T {
        (-n_dot(x, &self.omega0) + sqrt_d::<T>(x)) - n_dot(x, &self.shift)
    }
}

/// `w = (u + ū)/2`, tagged real.
pub fn real_part<T: Real>(u: &SpectralCoeffs<T>) -> Result<SpectralCoeffs<T>> {
    let mut w = u.add(&u.conj_reflect())?.scale_real(T::lit(0.5));
    w.tag_real_representing(T::lit(1e-12));
    Ok(w)
}

/// Both rows of the lattice system.
#[derive(Clone, Debug, PartialEq)]
pub struct DoubledResidual<T> {
    pub u_rows: SpectralCoeffs<T>,
    pub ubar_rows: SpectralCoeffs<T>,
}

impl<T: Real> DoubledResidual<T> {
    /// `ū`-rows minus the conjugate mirror of the `u`-rows.
    pub fn mirror_defect(&self) -> Result<T> {
        Ok(self.ubar_rows.sub(&self.u_rows.conj_reflect())?.max_abs())
    }
}

/// `u`-rows: `(n·ω + √(j²+1))u + D^{-1}N((u+ū)/2)`.
pub fn residual_u_rows<T: Real>(
    u: &SpectralCoeffs<T>,
    freq: &Frequencies<T>,
    seed: &LinearSeed,
    nl: &Nonlinearity<T>,
) -> Result<SpectralCoeffs<T>> {
    let nw = nl.eval(&real_part(u)?)?;
    let mut out = SpectralCoeffs::new(seed.b(), seed.d());
    for (x, v) in u.iter() {
        out.add_at(x.clone(), *v * freq.diag(x))?;
    }
    for (x, v) in nw.iter() {
        out.add_at(x.clone(), *v / sqrt_d::<T>(x))?;
    }
    Ok(out)
}

/// The doubled residual of the system.
pub fn residual_f<T: Real>(
    u: &SpectralCoeffs<T>,
    freq: &Frequencies<T>,
    seed: &LinearSeed,
    nl: &Nonlinearity<T>,
) -> Result<DoubledResidual<T>> {
    let u_rows = residual_u_rows(u, freq, seed, nl)?;
    let ubar = u.conj_reflect();
    let nw = nl.eval(&real_part(u)?)?;
    let mut ubar_rows = SpectralCoeffs::new(seed.b(), seed.d());
    for (x, v) in ubar.iter() {
        ubar_rows.add_at(x.clone(), *v * freq.diag_conj(x))?;
    }
    for (x, v) in nw.iter() {
        ubar_rows.add_at(x.clone(), *v / sqrt_d::<T>(x))?;
    }
    Ok(DoubledResidual { u_rows, ubar_rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Row {
    U,
    Ubar,
}

/// The row partition of a box: `Q` is the resonant set, `P` the rest.
#[derive(Clone, Debug, PartialEq)]
pub struct LsSplit {
    pub p_rows: BTreeSet<(LatticePoint, Row)>,
    pub q_rows: BTreeSet<(LatticePoint, Row)>,
}

/// Splits the doubled rows over `points` into `P`- and `Q`-equations.
/// `Q` consists of the `u`-rows at `(−e_k, j_k)` and the `ū`-rows at
/// `(e_k, −j_k)`.
pub fn lyapunov_schmidt_split(points: &[LatticePoint], seed: &LinearSeed) -> Result<LsSplit> {
    let set: BTreeSet<&LatticePoint> = points.iter().collect();
    let mut q_rows = BTreeSet::new();
    for k in 0..seed.b() {
        let m = seed.mode(k);
        let mm = -&m;
        if !set.contains(&m) || !set.contains(&mm) {
            return Err(Error::invalid(format!("box does not contain the resonant point {m}")));
        }
        q_rows.insert((m, Row::U));
        q_rows.insert((mm, Row::Ubar));
    }
    let p_rows = points
        .iter()
        .flat_map(|x| [(x.clone(), Row::U), (x.clone(), Row::Ubar)])
        .filter(|r| !q_rows.contains(r))
        .collect();
    Ok(LsSplit { p_rows, q_rows })
}

/// Newton box: `‖n‖_∞ ≤ n_radius`, `‖j‖_∞ ≤ j_radius`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewtonBox {
    pub n_radius: i64,
    pub j_radius: i64,
}

impl NewtonBox {
    pub fn new(n_radius: i64, j_radius: i64) -> Result<Self> {
        if n_radius < 1 || j_radius < 1 {
            return Err(Error::invalid("Newton box radii must be >= 1"));
        }
        Ok(Self { n_radius, j_radius })
    }

    /// `⌈|ln δ|^{1.5}⌉` in every direction.
    pub fn default_for(delta: f64) -> Self {
        let r = (delta.ln().abs().powf(1.5).ceil() as i64).max(1);
        Self {
            n_radius: r,
            j_radius: r,
        }
    }

    pub fn contains(&self, x: &LatticePoint) -> bool {
        x.n_linf() <= self.n_radius && x.j_linf() <= self.j_radius
    }
}

/// Box points reachable from the resonant set by the seed modes and the
/// spatial supports of the `H` coefficients. The solution lives there.
pub fn reachable_points<T: Real>(seed: &LinearSeed, nl: &Nonlinearity<T>, bx: NewtonBox) -> Vec<LatticePoint> {
    let mut gens: BTreeSet<LatticePoint> = BTreeSet::new();
    for m in seed.support() {
        gens.insert(-&m);
        gens.insert(m);
    }
    for t in &nl.h_terms {
        for x in t.alpha.support() {
            let g = LatticePoint::new(vec![0; seed.b()], x.j.clone());
            if !g.is_zero() {
                gens.insert(-&g);
                gens.insert(g);
            }
        }
    }
    let mut seen: BTreeSet<LatticePoint> = seed.resonant_set().into_iter().filter(|x| bx.contains(x)).collect();
    let mut queue: VecDeque<LatticePoint> = seen.iter().cloned().collect();
    while let Some(x) = queue.pop_front() {
        for g in &gens {
            let y = &x + g;
            if bx.contains(&y) && !seen.contains(&y) {
                seen.insert(y.clone());
                queue.push_back(y);
            }
        }
    }
    seen.into_iter().collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonState<T> {
    pub u: SpectralCoeffs<T>,
    pub freq: Frequencies<T>,
    pub iterate: usize,
    pub residual_norm: T,
    pub bx: NewtonBox,
    pub history: Vec<T>,
    pub omega_history: Vec<Vec<T>>,
    /// Set when the last step failed to decrease the residual.
    pub rejected: bool,
}

impl<T: Real> NewtonState<T> {
    pub fn initial(seed: &LinearSeed, nl: &Nonlinearity<T>, bx: NewtonBox, norm: &AnalyticNorm<T>) -> Result<Self> {
        let u = seed.u0::<T>();
        let freq = Frequencies::unshifted(seed);
        let r = weighted_norm(&residual_u_rows(&u, &freq, seed, nl)?, norm);
        Ok(Self {
            u,
            omega_history: vec![freq.omega()],
            freq,
            iterate: 0,
            residual_norm: r,
            bx,
            history: vec![r],
            rejected: false,
        })
    }

    pub fn omega(&self) -> Vec<T> {
        self.freq.omega()
    }
}

/// One `Q`-update: `ω_k ← ω_k + F(u;ω)(−e_k, j_k)/a_k`.
///
/// The diagonal term at a pinned row is `(ω⁽⁰⁾_k − ω_k)a_k`, so the update
/// reduces to `ω_k = √(j_k²+1) + D^{-1}N(−e_k, j_k)/a_k`, which is how the
/// shift is formed here.
pub fn q_equation_update<T: Real>(u: &SpectralCoeffs<T>, seed: &LinearSeed, nl: &Nonlinearity<T>) -> Result<Frequencies<T>> {
    let nw = nl.eval(&real_part(u)?)?;
    let mut shift = Vec::with_capacity(seed.b());
    for k in 0..seed.b() {
        let m = seed.mode(k);
        let a = u.get(&m);
        if a.norm() == T::zero() {
            return Err(Error::invalid(format!("amplitude a_{k} vanishes")));
        }
        shift.push((nw.get(&m) / (a * sqrt_d::<T>(&m))).re);
    }
    Frequencies::with_shift(seed, shift)
}

/// One Newton correction on the `P`-equations at frozen `ω`. Rejects the
/// step (state unchanged, `rejected` set) if the residual does not drop.
pub fn newton_step<T: Real>(
    state: &NewtonState<T>,
    seed: &LinearSeed,
    nl: &Nonlinearity<T>,
    norm: &AnalyticNorm<T>,
) -> Result<NewtonState<T>> {
    let pinned: BTreeSet<LatticePoint> = seed.support().into_iter().collect();
    let unknowns: Vec<LatticePoint> = reachable_points(seed, nl, state.bx)
        .into_iter()
        .filter(|x| !pinned.contains(x))
        .collect();
    let index: BTreeMap<&LatticePoint, usize> = unknowns.iter().enumerate().map(|(i, x)| (x, i)).collect();
    let n = unknowns.len();
    let f = residual_u_rows(&state.u, &state.freq, seed, nl)?;
    let kernel = nl.derivative_kernel(&real_part(&state.u)?)?;

    // real unknowns: (Re du_i, Im du_i) at 2i, 2i+1
    let mut jac = Matrix::<T>::zeros(2 * n, 2 * n);
    let half = T::lit(0.5);
    for (i, x) in unknowns.iter().enumerate() {
        let dg = state.freq.diag(x);
        jac[(2 * i, 2 * i)] += dg;
        jac[(2 * i + 1, 2 * i + 1)] += dg;
        let dinv = T::one() / sqrt_d::<T>(x);
        for (z, kv) in kernel.iter() {
            let y = x - z;
            let c = *kv * dinv * half;
            // c·du(y)
            if let Some(&jy) = index.get(&y) {
                jac[(2 * i, 2 * jy)] += c.re;
                jac[(2 * i, 2 * jy + 1)] -= c.im;
                jac[(2 * i + 1, 2 * jy)] += c.im;
                jac[(2 * i + 1, 2 * jy + 1)] += c.re;
            }
            // c·conj du(−y)
            if let Some(&jm) = index.get(&-&y) {
                jac[(2 * i, 2 * jm)] += c.re;
                jac[(2 * i, 2 * jm + 1)] += c.im;
                jac[(2 * i + 1, 2 * jm)] += c.im;
                jac[(2 * i + 1, 2 * jm + 1)] -= c.re;
            }
        }
    }
    let mut rhs = vec![T::zero(); 2 * n];
    for (i, x) in unknowns.iter().enumerate() {
        let v = f.get(x);
        rhs[2 * i] = -v.re;
        rhs[2 * i + 1] = -v.im;
    }
    let du = jac.lu().and_then(|lu| lu.solve(&rhs)).map_err(|_| Error::Singular {
        context: format!("linearized P-block on {} points is singular at iterate {}", n, state.iterate),
    })?;
    let mut u = state.u.clone();
    for (i, x) in unknowns.iter().enumerate() {
        u.add_at(x.clone(), Complex::new(du[2 * i], du[2 * i + 1]))?;
    }
    let r = weighted_norm(&residual_u_rows(&u, &state.freq, seed, nl)?, norm);
    let mut next = state.clone();
    if !(r < state.residual_norm) {
        next.rejected = true;
        return Ok(next);
    }
    next.u = u;
    next.iterate += 1;
    next.residual_norm = r;
    next.history.push(r);
    next.rejected = false;
    Ok(next)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub bx: Option<NewtonBox>,
    /// Double the `n`-radius on stagnation, up to this radius.
    pub grow_to: Option<i64>,
    pub rho: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_iter: 30,
            bx: None,
            grow_to: None,
            rho: 0.5,
        }
    }
}

/// A converged (or partial) solution with its provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionArtifact<T> {
    pub seed: SeedRecord,
    pub nonlinear_p: u32,
    pub h_terms: usize,
    pub bx: NewtonBox,
    pub rho: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub converged: bool,
    pub failure: Option<String>,
    pub iterations: usize,
    pub omega: Vec<T>,
    pub omega_shift: Vec<T>,
    pub residual: T,
    pub remainder_norm: T,
    pub remainder_bound: f64,
    pub history: Vec<T>,
    pub omega_history: Vec<Vec<T>>,
    /// Fitted `q` in `r_{m+1} ≈ K r_m^q` over the last three residuals.
    pub order: Option<f64>,
    pub quadratic_constant: Option<f64>,
    pub certificate_hash: Option<String>,
    pub certificate_status: Option<String>,
    pub coefficients: Vec<crate::lattice::CoeffRecord>,
}

impl SolutionArtifact<f64> {
    pub fn u(&self) -> Result<SpectralCoeffs<f64>> {
        let d = self.seed.sites.first().map_or(0, Vec::len);
        SpectralCoeffs::from_records(self.seed.sites.len(), d, &self.coefficients)
    }

    pub fn frequencies(&self) -> Result<Frequencies<f64>> {
        Frequencies::with_shift(&LinearSeed::from_record(&self.seed)?, self.omega_shift.clone())
    }

    /// Conjugate symmetry defect of the doubled series `u + ū`.
    pub fn symmetry_defect(&self) -> Result<f64> {
        let u = self.u()?;
        Ok(u.add(&u.conj_reflect())?.conjugate_symmetry_defect())
    }
}

/// Fit of `ln r_{m+1} = q ln r_m + ln K` through the last three residuals.
pub fn convergence_order(history: &[f64]) -> Option<(f64, f64)> {
    let h: Vec<f64> = history.iter().copied().filter(|r| *r > 0.0).collect();
    if h.len() < 3 {
        return None;
    }
    let tail = &h[h.len() - 3..];
    let (x0, x1, x2) = (tail[0].ln(), tail[1].ln(), tail[2].ln());
    let q = (x2 - x1) / (x1 - x0);
    Some((q, (x2 - q * x1).exp()))
}

/// Alternates `Q`-updates and Newton steps until the weighted residual
/// drops below `tol`.
///
/// The `Q`-update comes first in each sweep, so `ω⁽ᵐ⁺¹⁾` is computed from
/// `u⁽ᵐ⁾`; the following Newton step solves the `P`-equations at that `ω`.
pub fn solve(seed: &LinearSeed, nl: &Nonlinearity<f64>, opts: &SolveOptions) -> Result<SolutionArtifact<f64>> {
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let norm = AnalyticNorm::new(opts.rho)?;
    let mut bx = opts.bx.unwrap_or_else(|| NewtonBox::default_for(seed.delta()));
    let points = reachable_points(seed, nl, bx);
    lyapunov_schmidt_split(&points, seed)?;
    let mut state = NewtonState::initial(seed, nl, bx, &norm)?;
    let mut failure = None;
    while state.residual_norm > opts.tol {
        if state.iterate >= opts.max_iter {
            failure = Some(format!("no convergence in {} iterations", opts.max_iter));
            break;
        }
        let freq = q_equation_update(&state.u, seed, nl)?;
        let mut trial = state.clone();
        trial.residual_norm = weighted_norm(&residual_u_rows(&trial.u, &freq, seed, nl)?, &norm);
        trial.freq = freq;
        let next = match newton_step(&trial, seed, nl, &norm) {
            Ok(n) => n,
            Err(e) => {
                failure = Some(e.to_string());
                break;
            }
        };
        if next.rejected || !(next.residual_norm < state.residual_norm) {
            match opts.grow_to {
                Some(cap) if bx.n_radius * 2 <= cap => {
                    bx.n_radius *= 2;
                    state.bx = bx;
                    continue;
                }
                _ => {
                    failure = Some(format!(
                        "residual stagnated at {:.3e} after {} iterations",
                        state.residual_norm, state.iterate
                    ));
                    break;
                }
            }
        }
        state = next;
        state.omega_history.push(state.freq.omega());
    }
    let remainder = weighted_norm(&state.u.sub(&seed.u0::<f64>())?, &norm);
    let fit = convergence_order(&state.history);
    let converged = state.residual_norm <= opts.tol;
    Ok(SolutionArtifact {
        seed: seed.to_record(),
        nonlinear_p: nl.p,
        h_terms: nl.h_terms.len(),
        bx,
        rho: opts.rho,
        tol: opts.tol,
        max_iter: opts.max_iter,
        converged,
        failure: if converged { None } else { failure },
        iterations: state.iterate,
        omega: state.omega(),
        omega_shift: state.freq.shift.clone(),
        residual: state.residual_norm,
        remainder_norm: remainder,
        remainder_bound: seed.delta().powf(1.5),
        history: state.history.clone(),
        omega_history: state.omega_history.clone(),
        order: fit.map(|f| f.0),
        quadratic_constant: fit.map(|f| f.1),
        certificate_hash: None,
        certificate_status: None,
        coefficients: state.u.to_records(),
    })
}

/// Re-evaluates the residual of a stored solution from scratch.
pub fn reverify(art: &SolutionArtifact<f64>, nl: &Nonlinearity<f64>) -> Result<f64> {
    let seed = LinearSeed::from_record(&art.seed)?;
    let norm = AnalyticNorm::new(art.rho)?;
    Ok(weighted_norm(&residual_u_rows(&art.u()?, &art.frequencies()?, &seed, nl)?, &norm))
}

/// `sup |v_tt − Δv + v + v^{p+1}|` for `v = Re u` synthesized on an
/// `nt × nx` grid over one period of `ω₁` and `x₁ ∈ [0, 2π)` (other
/// spatial coordinates zero).
///
/// `v^{p+1}` is formed pointwise from the synthesized values, independent of
/// the lattice convolution. `H` terms are not supported here.
pub fn time_domain_residual(art: &SolutionArtifact<f64>, nt: usize, nx: usize) -> Result<f64> {
    if art.h_terms != 0 {
        return Err(Error::invalid("time-domain check supports the pure power nonlinearity"));
    }
    let w = real_part(&art.u()?)?;
    let omega = &art.omega;
    let period = 2.0 * std::f64::consts::PI / omega[0];
    let p1 = art.nonlinear_p as i32 + 1;
    let mut worst: f64 = 0.0;
    for it in 0..nt {
        let t = period * it as f64 / nt as f64;
        for ix in 0..nx {
            let x1 = 2.0 * std::f64::consts::PI * ix as f64 / nx as f64;
            let (mut v, mut lv) = (0.0, 0.0);
            for (pt, c) in w.iter() {
                let nw: f64 = pt.n.iter().zip(omega).map(|(n, o)| *n as f64 * o).sum();
                let phase = nw * t + pt.j[0] as f64 * x1;
                let val = (c * Complex::new(phase.cos(), phase.sin())).re;
                v += val;
                lv += (-(nw * nw) + (pt.j_sq() + 1) as f64) * val;
            }
            worst = worst.max((lv + v.powi(p1)).abs());
        }
    }
    Ok(worst)
}


#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransversalityRow {
    pub delta: f64,
    /// Jacobian of `ω⁽¹⁾` in rescaled amplitudes `a/δ`, row-major.
    pub jacobian: Vec<Vec<f64>>,
    pub log_det: f64,
    pub log_det_unrescaled: f64,
    /// Largest `|J_kl/J_kk|` off the diagonal.
    pub off_diagonal_ratio: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransversalityReport {
    pub rows: Vec<TransversalityRow>,
    pub slope: Option<f64>,
    pub slope_unrescaled: Option<f64>,
    pub expected_slope: f64,
    pub expected_unrescaled: f64,
}

/// `ω⁽¹⁾ − ω⁽⁰⁾` as a function of the amplitudes (first `Q`-update from
/// `u⁽⁰⁾`).
pub fn first_shift(seed: &LinearSeed, nl: &Nonlinearity<f64>) -> Result<Vec<f64>> {
    let u = seed.u0::<f64>();
    Ok(q_equation_update(&u, seed, nl)?.shift)
}

/// Central-difference Jacobian `∂ω⁽¹⁾/∂a` with relative step `rel`.
pub fn shift_jacobian(seed: &LinearSeed, nl: &Nonlinearity<f64>, rel: f64) -> Result<Vec<Vec<f64>>> {
    let b = seed.b();
    let a = seed.amplitudes().to_vec();
    let mut jac = vec![vec![0.0; b]; b];
    for l in 0..b {
        let h = rel * a[l].abs();
        let mut ap = a.clone();
        let mut am = a.clone();
        ap[l] += h;
        am[l] -= h;
        let fp = first_shift(&seed.with_amplitudes(ap)?, nl)?;
        let fm = first_shift(&seed.with_amplitudes(am)?, nl)?;
        for k in 0..b {
            jac[k][l] = (fp[k] - fm[k]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Transversality of the amplitude-frequency map over a `δ` grid. The
/// template amplitudes are rescaled to `‖a‖_∞ = δ`.
pub fn transversality(seed: &LinearSeed, nl: &Nonlinearity<f64>, deltas: &[f64]) -> Result<TransversalityReport> {
    let b = seed.b();
    let tmpl: Vec<f64> = seed.amplitudes().iter().map(|a| a / seed.delta()).collect();
    let mut rows = Vec::new();
    for &delta in deltas {
        let s = seed.with_amplitudes(tmpl.iter().map(|t| t * delta).collect())?;
        match shift_jacobian(&s, nl, 1e-5) {
            Ok(jac) => {
                let m = Matrix::from_rows(&jac)?;
                let det_unres = m.det();
                // ∂/∂ã = δ ∂/∂a columnwise
                let det = det_unres * delta.powi(b as i32);
                let mut off: f64 = 0.0;
                for k in 0..b {
                    for l in 0..b {
                        if k != l && jac[k][k] != 0.0 {
                            off = off.max((jac[k][l] / jac[k][k]).abs());
                        }
                    }
                }
                rows.push(TransversalityRow {
                    delta,
                    jacobian: jac.iter().map(|r| r.iter().map(|v| v * delta).collect()).collect(),
                    log_det: det.abs().ln(),
                    log_det_unrescaled: det_unres.abs().ln(),
                    off_diagonal_ratio: off,
                    error: None,
                });
            }
            Err(e) => rows.push(TransversalityRow {
                delta,
                jacobian: Vec::new(),
                log_det: f64::NAN,
                log_det_unrescaled: f64::NAN,
                off_diagonal_ratio: f64::NAN,
                error: Some(e.to_string()),
            }),
        }
    }
    let ok: Vec<&TransversalityRow> = rows.iter().filter(|r| r.error.is_none() && r.log_det.is_finite()).collect();
    let fit = |f: &dyn Fn(&TransversalityRow) -> f64| -> Option<f64> {
        if ok.len() < 2 {
            return None;
        }
        let x: Vec<f64> = ok.iter().map(|r| r.delta.ln()).collect();
        let y: Vec<f64> = ok.iter().map(|r| f(r)).collect();
        Some(crate::characteristics::least_squares(&x, &y).1)
    };
    let p = f64::from(seed.p());
    Ok(TransversalityReport {
        slope: fit(&|r| r.log_det),
        slope_unrescaled: fit(&|r| r.log_det_unrescaled),
        rows,
        expected_slope: p * b as f64,
        expected_unrescaled: (p - 1.0) * b as f64,
    })
}
