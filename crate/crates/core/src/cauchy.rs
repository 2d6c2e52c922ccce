//! Pseudospectral Strang-split integrator for
//! `v_tt − Δv + v + δ v^{p+1} = 0` on the torus `[0, 2π)^d`.
//!
//! The state is `(v̂, ŵ)` with `w = −D^{-1} v_t`. The linear flow rotates
//! each mode by `θ = √(k²+1)·t`; the nonlinear flow kicks
//! `ŵ += dt·δ·D^{-1}·P[(Pv)^{p+1}]^` where `P` is the 2/3-rule projector.
//! Both substeps are exact flows of a discrete Hamiltonian, so the scheme is
//! symplectic and time reversible.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::seed::LinearSeed;
use crate::{Complex, Error, Real, Result};

/// Axis-wise FFT on an `m^d` grid, row-major, last axis fastest.
struct GridFft<T: Real> {
    m: usize,
    d: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for GridFft<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GridFft({}^{})", self.m, self.d)
    }
}

impl<T: Real> GridFft<T> {
    fn new(m: usize, d: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            m,
            d,
            fwd: planner.plan_fft_forward(m),
            inv: planner.plan_fft_inverse(m),
        }
    }

    fn apply(&self, data: &mut [Complex<T>], forward: bool) {
        let m = self.m;
        let plan = if forward { &self.fwd } else { &self.inv };
        let mut line = vec![Complex::new(T::zero(), T::zero()); m];
        for axis in 0..self.d {
            let stride = m.pow((self.d - 1 - axis) as u32);
            let block = stride * m;
            for start in 0..data.len() / m {
                let base = (start / stride) * block + start % stride;
                for (i, l) in line.iter_mut().enumerate() {
                    *l = data[base + i * stride];
                }
                plan.process(&mut line);
                for (i, l) in line.iter().enumerate() {
                    data[base + i * stride] = *l;
                }
            }
        }
        if forward {
            let s = T::one() / T::lit(data.len() as f64);
            data.iter_mut().for_each(|v| *v = *v * s);
        }
    }
}

/// Wave number of FFT index `i` on an `m`-point axis.
fn wavenumber(i: usize, m: usize) -> i64 {
    if i <= m / 2 {
        i as i64
    } else {
        i as i64 - m as i64
    }
}

fn index_of(k: &[i64], m: usize) -> Option<usize> {
    let mut idx = 0;
    for &c in k {
        if c.unsigned_abs() as usize > (m - 1) / 2 {
            return None;
        }
        idx = idx * m + c.rem_euclid(m as i64) as usize;
    }
    Some(idx)
}

/// Initial data as spatial Fourier coefficients of `v` and `w = −D^{-1}v_t`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InitialData {
    pub d: usize,
    pub v_hat: BTreeMap<Vec<i64>, Complex<f64>>,
    pub w_hat: BTreeMap<Vec<i64>, Complex<f64>>,
}

impl InitialData {
    /// Time-zero slice of the linear solution `Re u⁽⁰⁾`, i.e.
    /// `v = Σ a_k cos(j_k·x − ω_k t)`.
    pub fn from_seed(seed: &LinearSeed) -> Self {
        let mut out = Self {
            d: seed.d(),
            ..Default::default()
        };
        for (j, a) in seed.sites().iter().zip(seed.amplitudes()) {
            let neg: Vec<i64> = j.iter().map(|c| -c).collect();
            *out.v_hat.entry(j.clone()).or_default() += Complex::new(a / 2.0, 0.0);
            *out.v_hat.entry(neg.clone()).or_default() += Complex::new(a / 2.0, 0.0);
            // −sin(j·x) has coefficients ±i/2
            *out.w_hat.entry(j.clone()).or_default() += Complex::new(0.0, a / 2.0);
            *out.w_hat.entry(neg).or_default() += Complex::new(0.0, -a / 2.0);
        }
        out
    }

    /// Adds a real perturbation `c e^{ik·x} + conj` to `v` (and `w`).
    pub fn with_perturbation(mut self, k: Vec<i64>, dv: Complex<f64>, dw: Complex<f64>) -> Self {
        let neg: Vec<i64> = k.iter().map(|c| -c).collect();
        *self.v_hat.entry(k.clone()).or_default() += dv;
        *self.v_hat.entry(neg.clone()).or_default() += dv.conj();
        *self.w_hat.entry(k).or_default() += dw;
        *self.w_hat.entry(neg).or_default() += dw.conj();
        self
    }
}

#[derive(Clone, Debug)]
pub struct CauchyState<T: Real> {
    pub d: usize,
    pub m: usize,
    pub v_hat: Vec<Complex<T>>,
    pub w_hat: Vec<Complex<T>>,
    pub t: T,
    pub delta: T,
    pub p: u32,
    /// `√(k²+1)` per grid index.
    dk: Vec<T>,
    /// `|k|₁` per grid index.
    k_l1: Vec<i64>,
    /// 2/3-rule mask.
    keep: Vec<bool>,
    fft: Arc<GridFft<T>>,
}

impl<T: Real> CauchyState<T> {
    pub fn new(data: &InitialData, m: usize, delta: T, p: u32) -> Result<Self> {
        let d = data.d;
        if d == 0 || m < 4 {
            return Err(Error::invalid("grid needs d >= 1 and m >= 4"));
        }
        if !(delta >= T::zero()) {
            return Err(Error::invalid("delta must be >= 0"));
        }
        let len = m.pow(d as u32);
        let mut dk = Vec::with_capacity(len);
        let mut k_l1 = Vec::with_capacity(len);
        let mut keep = Vec::with_capacity(len);
        for idx in 0..len {
            let mut rest = idx;
            let mut ks = vec![0i64; d];
            for a in (0..d).rev() {
                ks[a] = wavenumber(rest % m, m);
                rest /= m;
            }
            let sq: i64 = ks.iter().map(|c| c * c).sum();
            dk.push(T::lit(((sq + 1) as f64).sqrt()));
            k_l1.push(ks.iter().map(|c| c.abs()).sum());
            keep.push(ks.iter().all(|c| 3 * c.unsigned_abs() as usize <= m));
        }
        let zero = Complex::new(T::zero(), T::zero());
        let mut v_hat = vec![zero; len];
        let mut w_hat = vec![zero; len];
        for (target, src) in [(&mut v_hat, &data.v_hat), (&mut w_hat, &data.w_hat)] {
            for (k, c) in src {
                if k.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: format!("{d}-dimensional wave numbers"),
                        found: format!("{k:?}"),
                    });
                }
                let i = index_of(k, m).filter(|i| keep[*i]).ok_or_else(|| {
                    Error::invalid(format!("mode {k:?} lies outside the dealiased grid of size {m}"))
                })?;
                target[i] += Complex::new(T::lit(c.re), T::lit(c.im));
            }
        }
        Ok(Self {
            d,
            m,
            v_hat,
            w_hat,
            t: T::zero(),
            delta,
            p,
            dk,
            k_l1,
            keep,
            fft: Arc::new(GridFft::new(m, d)),
        })
    }

    fn rotate(&mut self, dt: T) {
        for i in 0..self.v_hat.len() {
            let (s, c) = (self.dk[i] * dt).sin_cos();
            let (v, w) = (self.v_hat[i], self.w_hat[i]);
            self.v_hat[i] = v * c - w * s;
            self.w_hat[i] = v * s + w * c;
        }
    }

    /// Real values of the dealiased `v` on the grid.
    fn projected_values(&self) -> Vec<Complex<T>> {
        let zero = Complex::new(T::zero(), T::zero());
        let mut buf: Vec<Complex<T>> = self
            .v_hat
            .iter()
            .zip(&self.keep)
            .map(|(v, k)| if *k { *v } else { zero })
            .collect();
        self.fft.apply(&mut buf, false);
        buf.iter_mut().for_each(|v| v.im = T::zero());
        buf
    }

    fn kick(&mut self, dt: T) {
        if self.delta == T::zero() {
            return;
        }
        let mut buf = self.projected_values();
        buf.iter_mut().for_each(|v| v.re = v.re.powi(self.p as i32 + 1));
        self.fft.apply(&mut buf, true);
        let zero = Complex::new(T::zero(), T::zero());
        for i in 0..buf.len() {
            let f = if self.keep[i] { buf[i] } else { zero };
            self.w_hat[i] += f * (dt * self.delta / self.dk[i]);
        }
    }

    /// One Strang step; negative `dt` runs backwards.
    pub fn step(&mut self, dt: T) -> Result<()> {
        self.rotate(dt / T::lit(2.0));
        self.kick(dt);
        self.rotate(dt / T::lit(2.0));
        self.t += dt;
        let bad = self
            .v_hat
            .iter()
            .chain(&self.w_hat)
            .any(|c| !c.re.is_finite() || !c.im.is_finite() || c.norm() > T::lit(1e150));
        if bad {
            return Err(Error::invalid(format!("blow-up detected at t = {}", self.t)));
        }
        Ok(())
    }

    /// `(‖v̂‖_ρ, ‖ŵ‖_ρ)` with weights `e^{ρ|k|₁}`.
    pub fn norms(&self, rho: T) -> (T, T) {
        let mut nv = T::zero();
        let mut nw = T::zero();
        for i in 0..self.v_hat.len() {
            let w = (rho * T::lit(self.k_l1[i] as f64)).exp();
            nv += self.v_hat[i].norm() * w;
            nw += self.w_hat[i].norm() * w;
        }
        (nv, nw)
    }

    /// `½‖v_t‖² + ½‖Dv‖² + δ/(p+2)∫(Pv)^{p+2}` on `[0, 2π)^d`.
    pub fn energy(&self) -> T {
        let vol = T::lit((2.0 * std::f64::consts::PI).powi(self.d as i32));
        let mut quad = T::zero();
        for i in 0..self.v_hat.len() {
            quad += self.dk[i] * self.dk[i] * (self.v_hat[i].norm_sqr() + self.w_hat[i].norm_sqr());
        }
        let mut e = vol * quad / T::lit(2.0);
        if self.delta != T::zero() {
            let vals = self.projected_values();
            let s: T = vals.iter().map(|v| v.re.powi(self.p as i32 + 2)).sum();
            e += self.delta / T::lit(f64::from(self.p + 2)) * vol * s / T::lit(vals.len() as f64);
        }
        e
    }

    /// Largest `|ĉ(−k) − conj ĉ(k)|` over both components.
    pub fn symmetry_defect(&self) -> T {
        let m = self.m;
        let len = self.v_hat.len();
        let mut worst = T::zero();
        for i in 0..len {
            let mut rest = i;
            let mut j = 0;
            let mut mul = 1;
            for _ in 0..self.d {
                let c = rest % m;
                rest /= m;
                j += ((m - c) % m) * mul;
                mul *= m;
            }
            for arr in [&self.v_hat, &self.w_hat] {
                worst = worst.max((arr[j] - arr[i].conj()).norm());
            }
        }
        worst
    }

    /// Coefficient of `e^{ik·x}` in `v`.
    pub fn v_mode(&self, k: &[i64]) -> Complex<T> {
        index_of(k, self.m).map_or(Complex::new(T::zero(), T::zero()), |i| self.v_hat[i])
    }

    /// Values of `v` on the grid.
    pub fn v_values(&self) -> Vec<T> {
        let mut buf = self.v_hat.clone();
        self.fft.apply(&mut buf, false);
        buf.into_iter().map(|c| c.re).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LifetimeOptions {
    pub m: Option<usize>,
    pub dt: Option<f64>,
    pub rho: f64,
    /// Pass iff `max excess ≤ k·δ`.
    pub k: f64,
    /// Number of checkpoints recorded.
    pub checkpoints: usize,
}

impl Default for LifetimeOptions {
    fn default() -> Self {
        Self {
            m: None,
            dt: None,
            rho: 0.5,
            k: 10.0,
            checkpoints: 500,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LifetimeRow {
    pub t: f64,
    pub norm_v: f64,
    pub norm_vt: f64,
    pub excess: f64,
    pub energy_drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LifetimeReport {
    pub delta: f64,
    pub p: u32,
    pub a_exp: f64,
    pub t_final: f64,
    pub dt: f64,
    pub m: usize,
    pub steps: u64,
    pub s0: f64,
    pub max_excess: f64,
    pub threshold: f64,
    pub pass: bool,
    pub blowup_time: Option<f64>,
    pub max_energy_drift: f64,
    pub max_symmetry_defect: f64,
    pub rows: Vec<LifetimeRow>,
}

impl LifetimeReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,norm_v,norm_vt,excess,energy_drift\n");
        for r in &self.rows {
            s.push_str(&format!("{:e},{:e},{:e},{:e},{:e}\n", r.t, r.norm_v, r.norm_vt, r.excess, r.energy_drift));
        }
        s
    }
}

/// `min(0.01, 0.1/√δ)`.
pub fn default_dt(delta: f64) -> f64 {
    if delta > 0.0 {
        0.01f64.min(0.1 / delta.sqrt())
    } else {
        0.01
    }
}

pub fn default_grid(d: usize) -> usize {
    if d == 1 {
        64
    } else {
        32
    }
}

/// Integrates to `T = δ^{-A}`, or to `t_final` when given, and records the
/// norm excess `s(t) − s(0)`. `δ = 0` requires `t_final`.
pub fn lifetime_run(
    data: &InitialData,
    delta: f64,
    p: u32,
    a_exp: f64,
    t_final: Option<f64>,
    opts: &LifetimeOptions,
) -> Result<LifetimeReport> {
    let horizon = match t_final {
        Some(t) => t,
        None if delta > 0.0 => delta.powf(-a_exp),
        None => return Err(Error::invalid("delta = 0 needs an explicit final time")),
    };
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::invalid("final time must be positive and finite"));
    }
    let m = opts.m.unwrap_or_else(|| default_grid(data.d));
    let dt0 = opts.dt.unwrap_or_else(|| default_dt(delta));
    let steps = (horizon / dt0).ceil() as u64;
    let dt = horizon / steps as f64;
    let mut st = CauchyState::<f64>::new(data, m, delta, p)?;
    let (v0, w0) = st.norms(opts.rho);
    let s0 = v0 + w0;
    let e0 = st.energy();
    let every = (steps / opts.checkpoints.max(1) as u64).max(1);
    let mut rows = vec![LifetimeRow {
        t: 0.0,
        norm_v: v0,
        norm_vt: w0,
        excess: 0.0,
        energy_drift: 0.0,
    }];
    let (mut max_excess, mut max_drift, mut max_sym) = (0.0f64, 0.0f64, st.symmetry_defect());
    let mut blowup = None;
    for s in 1..=steps {
        if st.step(dt).is_err() {
            blowup = Some(st.t);
            break;
        }
        let (nv, nw) = st.norms(opts.rho);
        max_excess = max_excess.max(nv + nw - s0);
        if s % every == 0 || s == steps {
            let drift = ((st.energy() - e0) / e0).abs();
            max_drift = max_drift.max(drift);
            max_sym = max_sym.max(st.symmetry_defect());
            rows.push(LifetimeRow {
                t: st.t,
                norm_v: nv,
                norm_vt: nw,
                excess: nv + nw - s0,
                energy_drift: drift,
            });
        }
    }
    let threshold = opts.k * delta;
    Ok(LifetimeReport {
        delta,
        p,
        a_exp,
        t_final: horizon,
        dt,
        m,
        steps,
        s0,
        max_excess,
        threshold,
        pass: blowup.is_none() && max_excess <= threshold.max(1e-10),
        blowup_time: blowup,
        max_energy_drift: max_drift,
        max_symmetry_defect: max_sym,
        rows,
    })
}

/// Runs to `T` and back to `0`; returns the largest coefficient deviation
/// from the initial data.
pub fn time_reversal_defect(data: &InitialData, delta: f64, p: u32, t_final: f64, dt: f64, m: usize) -> Result<f64> {
    let mut st = CauchyState::<f64>::new(data, m, delta, p)?;
    let init = (st.v_hat.clone(), st.w_hat.clone());
    let steps = (t_final / dt).ceil() as u64;
    let h = t_final / steps as f64;
    for _ in 0..steps {
        st.step(h)?;
    }
    for _ in 0..steps {
        st.step(-h)?;
    }
    Ok(st
        .v_hat
        .iter()
        .zip(&init.0)
        .chain(st.w_hat.iter().zip(&init.1))
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    pub verdict: String,
    pub max_excess: f64,
    pub max_energy_drift: f64,
    pub blowup_time: Option<f64>,
}

/// Lifetime runs for a list of `(label, seed, certificate verdict)`,
/// tabulated side by side. Observational only.
pub fn compare_generic_vs_tuned(
    seeds: &[(String, LinearSeed, String)],
    delta: f64,
    a_exp: f64,
    opts: &LifetimeOptions,
) -> Result<Vec<ComparisonRow>> {
    seeds
        .par_iter()
        .map(|(label, seed, verdict)| {
            let rep = lifetime_run(&InitialData::from_seed(seed), delta, seed.p(), a_exp, None, opts)?;
            Ok(ComparisonRow {
                label: label.clone(),
                verdict: verdict.clone(),
                max_excess: rep.max_excess,
                max_energy_drift: rep.max_energy_drift,
                blowup_time: rep.blowup_time,
            })
        })
        .collect()
}
