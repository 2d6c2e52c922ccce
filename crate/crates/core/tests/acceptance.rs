//! Acceptance suite. Each test prints one PASS/FAIL line (straight to stderr,
//! so it survives output capture) with its runtime against the budget.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use num_bigint::BigInt;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hyperwave_core::cauchy::{lifetime_run, InitialData, LifetimeOptions};
use hyperwave_core::characteristics::{
    connected_components, enumerate_characteristics, verify_prop2_bound, Adjacency, CharBox,
};
use hyperwave_core::config::LoadedConfig;
use hyperwave_core::field::bareiss_det;
use hyperwave_core::genericity::{
    build_algebra, build_gamma, check_condition_i, check_condition_ii, check_condition_iii, certify,
    lw_functions, GenericityOptions, IiMode, DEFAULT_ALGEBRA_CAP,
};
use hyperwave_core::lattice::LatticePoint;
use hyperwave_core::linalg::Matrix;
use hyperwave_core::operator::{
    analyticity_radius, assemble_a0, assemble_fprime_n, block_gap, gap_prop3, measure_estimate_prop1,
    restrict_pa0p, schur_window_eigenvalues, OpBox,
};
use hyperwave_core::pipeline;
use hyperwave_core::radical::radical_sqrt_int;
use hyperwave_core::solver::{
    convergence_order, shift_jacobian, solve, time_domain_residual, transversality, SolveOptions,
};
use hyperwave_core::characteristics::diophantine_profile;
use hyperwave_core::{LinearSeed, Nonlinearity, RadicalNumber};

type Outcome = Result<String, String>;

fn criterion(n: u32, title: &str, budget_s: f64, f: impl FnOnce() -> Outcome) {
    let t = Instant::now();
    let out = f();
    let el = t.elapsed().as_secs_f64();
    let (pass, detail) = match out {
        Ok(d) if el <= budget_s => (true, d),
        Ok(d) => (false, format!("{d}; over the {budget_s} s budget")),
        Err(d) => (false, d),
    };
    let line = format!(
        "{} criterion {n:>2} [{title}] {detail} ({el:.2} s / {budget_s} s)\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
    assert!(pass, "{line}");
}

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn pell(a: f64) -> LinearSeed {
    LinearSeed::new(vec![vec![1]], vec![a], 2).unwrap()
}

// ---------------------------------------------------------------- 1

const BITS: usize = 200;

#[derive(Clone, Debug)]
enum Expr {
    Ratio(i64, i64),
    Sqrt(u64),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Inv(Box<Expr>),
}

fn exact(e: &Expr) -> RadicalNumber {
    match e {
        Expr::Ratio(p, q) => RadicalNumber::from_ratio(*p, *q),
        Expr::Sqrt(m) => radical_sqrt_int(*m).unwrap(),
        Expr::Add(a, b) => &exact(a) + &exact(b),
        Expr::Sub(a, b) => &exact(a) - &exact(b),
        Expr::Mul(a, b) => &exact(a) * &exact(b),
        Expr::Inv(a) => exact(a).inverse().unwrap(),
    }
}

/// Fixed point with `BITS` fractional bits; each operation is off by at most
/// a couple of units in the last place.
fn fixed(e: &Expr) -> BigInt {
    match e {
        Expr::Ratio(p, q) => (BigInt::from(*p) << BITS) / BigInt::from(*q),
        Expr::Sqrt(m) => (BigInt::from(*m) << (2 * BITS)).sqrt(),
        Expr::Add(a, b) => fixed(a) + fixed(b),
        Expr::Sub(a, b) => fixed(a) - fixed(b),
        Expr::Mul(a, b) => (fixed(a) * fixed(b)) >> BITS,
        Expr::Inv(a) => (BigInt::from(1) << (2 * BITS)) / fixed(a),
    }
}

fn oracle_is_zero(e: &Expr) -> bool {
    // 2^-120 leaves 80 bits of slack for accumulated rounding
    fixed(e).magnitude().bits() < (BITS - 120) as u64
}

fn random_expr(rng: &mut ChaCha8Rng, depth: u32) -> Expr {
    let b = |e: Expr| Box::new(e);
    if depth == 0 || rng.random_bool(0.3) {
        return if rng.random_bool(0.5) {
            Expr::Ratio(rng.random_range(-6..=6), rng.random_range(1..=4))
        } else {
            Expr::Sqrt(rng.random_range(1..=30))
        };
    }
    let x = random_expr(rng, depth - 1);
    match rng.random_range(0..4) {
        0 => Expr::Add(b(x), b(random_expr(rng, depth - 1))),
        1 => Expr::Sub(b(x), b(random_expr(rng, depth - 1))),
        2 => Expr::Mul(b(x), b(random_expr(rng, depth - 1))),
        _ if !exact(&x).is_zero() => Expr::Inv(b(x)),
        _ => Expr::Add(b(x), b(Expr::Sqrt(2))),
    }
}

/// Expressions that vanish by an algebraic identity.
fn random_identity(rng: &mut ChaCha8Rng) -> Expr {
    let b = |e: Expr| Box::new(e);
    let (x, y, z) = (random_expr(rng, 2), random_expr(rng, 2), random_expr(rng, 2));
    match rng.random_range(0..6) {
        0 => Expr::Sub(
            b(Expr::Mul(b(Expr::Add(b(x.clone()), b(y.clone()))), b(Expr::Sub(b(x.clone()), b(y.clone()))))),
            b(Expr::Sub(b(Expr::Mul(b(x.clone()), b(x))), b(Expr::Mul(b(y.clone()), b(y))))),
        ),
        1 => Expr::Sub(
            b(Expr::Mul(b(x.clone()), b(Expr::Add(b(y.clone()), b(z.clone()))))),
            b(Expr::Add(b(Expr::Mul(b(x.clone()), b(y))), b(Expr::Mul(b(x), b(z))))),
        ),
        2 => Expr::Sub(
            b(Expr::Mul(b(Expr::Mul(b(x.clone()), b(y.clone()))), b(z.clone()))),
            b(Expr::Mul(b(x), b(Expr::Mul(b(y), b(z))))),
        ),
        3 => {
            let (m, n) = (rng.random_range(1..=20u64), rng.random_range(1..=20u64));
            Expr::Sub(b(Expr::Mul(b(Expr::Sqrt(m)), b(Expr::Sqrt(n)))), b(Expr::Sqrt(m * n)))
        }
        4 if !exact(&x).is_zero() => Expr::Sub(b(Expr::Mul(b(x.clone()), b(Expr::Inv(b(x))))), b(Expr::Ratio(1, 1))),
        _ => {
            let m = rng.random_range(1..=12u64);
            Expr::Sub(b(Expr::Mul(b(Expr::Sqrt(m)), b(Expr::Sqrt(m)))), b(Expr::Ratio(m as i64, 1)))
        }
    }
}

#[test]
fn criterion_01_exact_arithmetic() {
    criterion(1, "exact zero test vs 200-bit oracle", 10.0, || {
        let mut rng = ChaCha8Rng::seed_from_u64(20240501);
        let (mut zeros, mut disagreements) = (0, 0);
        for i in 0..10_000 {
            let e = if i % 5 < 2 { random_identity(&mut rng) } else { random_expr(&mut rng, 3) };
            let z = exact(&e).is_zero();
            zeros += z as usize;
            if z != oracle_is_zero(&e) {
                disagreements += 1;
            }
        }
        check(disagreements == 0, format!("{disagreements} disagreements"))?;
        check(zeros > 3000, format!("only {zeros} zero cases exercised"))?;
        Ok(format!("10000 cases, {zeros} exact zeros, 0 disagreements"))
    });
}

// ---------------------------------------------------------------- 2

#[test]
fn criterion_02_pell_enumeration() {
    criterion(2, "Pell characteristics", 1.0, || {
        let cs = enumerate_characteristics(&pell(0.01), CharBox::new(30, 45).unwrap()).map_err(|e| e.to_string())?;
        // brute-force scan of 2n² = j² + 1
        let (mut plus, mut minus) = (BTreeSet::new(), BTreeSet::new());
        for n in -30i64..=30 {
            for j in -45i64..=45 {
                if 2 * n * n == j * j + 1 {
                    let x = LatticePoint::new(vec![n], vec![j]);
                    if n < 0 {
                        plus.insert(x);
                    } else {
                        minus.insert(x);
                    }
                }
            }
        }
        let expect: BTreeSet<_> = [(-1, 1), (-1, -1), (-5, 7), (-5, -7), (-29, 41), (-29, -41)]
            .iter()
            .map(|&(n, j)| LatticePoint::new(vec![n], vec![j]))
            .collect();
        check(plus == expect, "scan disagrees with the listed points")?;
        check(cs.plus == plus, format!("C+ = {:?}", cs.plus))?;
        check(cs.minus == minus, format!("C- = {:?}", cs.minus))?;
        Ok("C+ = {(-1,±1),(-5,±7),(-29,±41)}, C- mirrored".into())
    });
}

// ---------------------------------------------------------------- 3

#[test]
fn criterion_03_pell_certificate() {
    criterion(3, "Pell genericity certificate", 1.0, || {
        let s = pell(0.01);
        let cert = certify(&s, &GenericityOptions::default()).map_err(|e| e.to_string())?;
        check(cert.condition_i.holds(), "(i) not certified")?;
        check(cert.condition_ii.holds() && cert.condition_ii.tested() == 0, "(ii) not vacuous")?;
        check(cert.pool_ii_size == 0, "A minus G nonempty")?;
        check(cert.condition_iii.holds(), "(iii) not certified")?;
        // closed forms on the algebra {(2t, -2t)}
        let algebra = build_algebra(&build_gamma(&s), s.bound_b(), DEFAULT_ALGEBRA_CAP);
        let mut seen = 0;
        for x in algebra.nonzero() {
            let t = x.n[0] / 2;
            check(x.n[0] == 2 * t && x.j[0] == -2 * t, format!("unexpected element {x:?}"))?;
            let lw = lw_functions(x, &s);
            let sigma_minus = &RadicalNumber::from_int(lw.dj_sq) - &lw.x;
            check(sigma_minus == RadicalNumber::from_int(-4 * t * t), format!("Σ₋ at t={t}"))?;
            check(lw.w == RadicalNumber::from_int(16 * t * t * (t * t - 2)), format!("W at t={t}"))?;
            seen += 1;
        }
        check(seen == 10, format!("{seen} algebra elements"))?;
        Ok("(i) holds with Σ₋ = -4t², W = 16t²(t²-2); (ii) vacuous; (iii) holds".into())
    });
}

// ---------------------------------------------------------------- 4

fn seed_suite() -> Vec<Vec<Vec<i64>>> {
    let mut out: Vec<Vec<Vec<i64>>> = Vec::new();
    // d = 1 up to reflection j -> -j and site order
    for j in 1..=5 {
        out.push(vec![vec![j]]);
    }
    for j1 in 1..=5i64 {
        for j2 in -5..=5i64 {
            if j2.abs() > j1 {
                out.push(vec![vec![j1], vec![j2]]);
            }
        }
    }
    // d = 2, b = 1 up to the symmetries of the square
    for a in 1..=5i64 {
        for b in 0..=a {
            out.push(vec![vec![a, b]]);
        }
    }
    // d = 2, b = 2: seeded sample of pairs
    let pts: Vec<Vec<i64>> = (-5..=5)
        .flat_map(|a| (-5..=5).map(move |b| vec![a, b]))
        .filter(|v| v[0] != 0 || v[1] != 0)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut pairs = BTreeSet::new();
    while pairs.len() < 24 {
        let mut pick: Vec<Vec<i64>> = pts.choose_multiple(&mut rng, 2).cloned().collect();
        pick.sort();
        pairs.insert(pick);
    }
    out.extend(pairs);
    out
}

#[test]
fn criterion_04_component_bound() {
    criterion(4, "component sizes on generic seeds", 120.0, || {
        let (mut generic, mut refuted, mut worst) = (0, 0, (0usize, 1usize));
        for p in [2u32, 4] {
            for sites in seed_suite() {
                let b = sites.len();
                let seed = LinearSeed::new(sites.clone(), vec![0.01; b], p).map_err(|e| e.to_string())?;
                let algebra = build_algebra(&build_gamma(&seed), seed.bound_b(), DEFAULT_ALGEBRA_CAP);
                let generic_here = !check_condition_i(&seed, &algebra).is_fail()
                    && !check_condition_iii(&seed).map_err(|e| e.to_string())?.is_fail()
                    && !check_condition_ii(&seed, &algebra, IiMode::Sampled { count: 2000, rng_seed: 1 }).is_fail();
                if !generic_here {
                    refuted += 1;
                    continue;
                }
                generic += 1;
                let cs = enumerate_characteristics(&seed, CharBox::new(40, 60).unwrap()).map_err(|e| e.to_string())?;
                let rep = connected_components(&cs, &build_gamma(&seed), Adjacency::GammaStep, seed.bound_b());
                let chk = verify_prop2_bound(&rep);
                check(chk.holds, format!("{sites:?} p={p}: size {} > B = {}", chk.max_size, chk.bound_b))?;
                if chk.max_size * worst.1 > worst.0 * chk.bound_b {
                    worst = (chk.max_size, chk.bound_b);
                }
            }
        }
        check(generic > 50, format!("only {generic} generic seeds"))?;
        Ok(format!(
            "{generic} generic seeds ({refuted} refuted and skipped), largest component {} vs B = {}",
            worst.0, worst.1
        ))
    });
}

// ---------------------------------------------------------------- 5

#[test]
fn criterion_05_block_mechanics() {
    criterion(5, "block determinant, homogeneity, Monte Carlo", 60.0, || {
        // a₁²[[2,1,0],[1,2,1],[0,1,2]]: Leibniz gives 2·3 − 1·2 = 4
        let a1 = RadicalNumber::from_ratio(1, 100);
        let a2 = &a1 * &a1;
        let t = [[2, 1, 0], [1, 2, 1], [0, 1, 2]];
        let m: Vec<Vec<RadicalNumber>> =
            t.iter().map(|r| r.iter().map(|&v| a2.scale_int(v)).collect()).collect();
        let det = bareiss_det(m);
        check(det == RadicalNumber::from_ratio(4, 1_000_000_000_000), format!("det = {det}"))?;
        let a = 0.37f64;
        let mf: Matrix<f64> = Matrix::from_fn(3, 3, |i, j| a * a * t[i][j] as f64);
        let rel = (mf.det() - 4.0 * a.powi(6)).abs() / (4.0 * a.powi(6));
        check(rel < 1e-12, format!("float det off by {rel:e}"))?;

        // homogeneity of max ‖B⁻¹‖ on a two-mode seed
        let s = LinearSeed::new(vec![vec![1], vec![2]], vec![0.01, 0.007], 2).unwrap();
        let cs = enumerate_characteristics(&s, CharBox::new(30, 45).unwrap()).map_err(|e| e.to_string())?;
        let inv = |s: &LinearSeed| block_gap(&restrict_pa0p(&assemble_a0::<f64>(s).unwrap(), &cs), 0.1, s.delta(), 2).inverse_norm;
        let base = inv(&s);
        let mut worst: f64 = 0.0;
        for tt in [0.25, 0.5, 3.0, 7.5] {
            let st = s.with_amplitudes(s.amplitudes().iter().map(|x| x * tt).collect()).unwrap();
            worst = worst.max((inv(&st) * tt.powi(2) / base - 1.0).abs());
        }
        check(worst < 1e-10, format!("homogeneity defect {worst:e}"))?;

        let mut fr = Vec::new();
        for eps in [0.1, 0.03, 0.01] {
            fr.push(measure_estimate_prop1(&s, &cs, eps, 0.1, 10_000, 11).map_err(|e| e.to_string())?);
        }
        check(fr[0] >= 0.9, format!("pass fraction {} at ε = 0.1", fr[0]))?;
        check(fr[1] >= fr[0] && fr[2] >= fr[1], format!("fractions not monotone: {fr:?}"))?;
        Ok(format!("det = 4a₁⁶ exactly, homogeneity defect {worst:.1e}, pass fractions {fr:?}"))
    });
}

// ---------------------------------------------------------------- 6

fn random_split_matrix(rng: &mut ChaCha8Rng) -> (Matrix<f64>, Vec<usize>) {
    let n = 12;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let p: Vec<usize> = {
        let mut v = idx[..4].to_vec();
        v.sort();
        v
    };
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let (pi, pj) = (p.contains(&i), p.contains(&j));
            let v = match (pi, pj) {
                (true, true) => rng.random_range(-0.3..0.3),
                (false, false) if i == j => {
                    let s = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    s * rng.random_range(1.0..3.0)
                }
                (false, false) => rng.random_range(-0.05..0.05),
                _ => rng.random_range(-0.2..0.2),
            };
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    (m, p)
}

#[test]
fn criterion_06_schur() {
    criterion(6, "Schur reduction", 30.0, || {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let (mut found, mut worst) = (0usize, 0.0f64);
        for k in 0..100 {
            let (m, p) = random_split_matrix(&mut rng);
            let r = analyticity_radius(&m, &p);
            let direct: Vec<f64> = m.sym_eigen().map_err(|e| e.to_string())?.0.into_iter().filter(|l| l.abs() < r).collect();
            let mut direct = direct;
            direct.sort_by(f64::total_cmp);
            let schur = schur_window_eigenvalues(&m, &p, 1e-14).map_err(|e| e.to_string())?;
            check(schur.len() == direct.len(), format!("matrix {k}: {} vs {} eigenvalues", schur.len(), direct.len()))?;
            for (a, b) in schur.iter().zip(&direct) {
                worst = worst.max((a - b).abs());
            }
            found += direct.len();
        }
        check(worst < 1e-9, format!("max eigenvalue error {worst:e}"))?;
        check(found > 100, format!("only {found} eigenvalues in the windows"))?;

        // coupling of the Pell operator at δ and δ/2
        let nl = Nonlinearity::power(2);
        let profile = diophantine_profile(&pell(0.01), CharBox::new(30, 45).unwrap()).map_err(|e| e.to_string())?;
        let coupling = |d: f64| -> Result<f64, String> {
            let s = pell(d);
            let op = assemble_fprime_n(&s, &s.omega0_f64(), OpBox { n_l1: 3, j_inf: 10 }, &nl, None).map_err(|e| e.to_string())?;
            Ok(gap_prop3(&op, 2, d, 0.1, &profile, 0.1).map_err(|e| e.to_string())?.coupling_norm)
        };
        let (c1, c2) = (coupling(0.01)?, coupling(0.005)?);
        let slope = (c1 / c2).ln() / 2f64.ln();
        check((slope - 4.0).abs() <= 0.4, format!("coupling slope {slope}"))?;
        Ok(format!("100 matrices, {found} window eigenvalues, max error {worst:.1e}; coupling slope {slope:.4} (2p = 4)"))
    });
}

// ---------------------------------------------------------------- 7

#[test]
fn criterion_07_newton() {
    criterion(7, "Newton solve on the Pell seed", 30.0, || {
        let a = 0.01;
        let s = pell(a);
        let nl = Nonlinearity::power(2);
        let art = solve(&s, &nl, &SolveOptions::default()).map_err(|e| e.to_string())?;
        check(art.converged, format!("not converged: {:?}", art.failure))?;
        check(art.residual < 1e-11, format!("residual {:e}", art.residual))?;
        check(art.iterations <= 8, format!("{} iterations", art.iterations))?;
        let (q, _) = convergence_order(&art.history).ok_or("no order fit")?;
        check(q >= 1.8, format!("order {q:.3} from {:?}", art.history))?;
        // first Q-update from u⁽⁰⁾
        let closed = 2f64.sqrt() + 3.0 * a * a / (8.0 * 2f64.sqrt());
        let w1 = art.omega_history.get(1).ok_or("no first update")?[0];
        check((w1 - closed).abs() < 1e-8, format!("ω⁽¹⁾ = {w1}, closed form {closed}"))?;
        let td = time_domain_residual(&art, 64, 64).map_err(|e| e.to_string())?;
        check(td < 1e-9, format!("time-domain residual {td:e}"))?;
        Ok(format!(
            "residual {:.2e} after {} iterations, order {q:.2}, |ω⁽¹⁾ − closed form| = {:.1e}, pointwise residual {td:.1e}",
            art.residual,
            art.iterations,
            (w1 - closed).abs()
        ))
    });
}

// ---------------------------------------------------------------- 8

#[test]
fn criterion_08_scaling() {
    criterion(8, "δ-scaling of shift and remainder", 120.0, || {
        let nl = Nonlinearity::power(2);
        let (mut x, mut y, mut rem) = (Vec::new(), Vec::new(), Vec::new());
        for d in [1e-2, 5e-3, 2.5e-3] {
            let art = solve(&pell(d), &nl, &SolveOptions::default()).map_err(|e| e.to_string())?;
            check(art.converged, format!("δ = {d}: not converged"))?;
            let shift = art.omega[0] - 2f64.sqrt();
            check(art.remainder_norm <= d.powf(1.5), format!("δ = {d}: remainder {:e}", art.remainder_norm))?;
            x.push(d.ln());
            y.push(shift.abs().ln());
            rem.push(art.remainder_norm);
        }
        let slope = hyperwave_core::characteristics::least_squares(&x, &y).1;
        check((slope - 2.0).abs() <= 0.2, format!("shift slope {slope}"))?;
        let rem: Vec<String> = rem.iter().map(|r| format!("{r:.2e}")).collect();
        Ok(format!("shift slope {slope:.4} (p = 2), remainders [{}] below δ^1.5", rem.join(", ")))
    });
}

// ---------------------------------------------------------------- 9

#[test]
fn criterion_09_transversality() {
    criterion(9, "transversality", 60.0, || {
        let a = 0.01;
        let nl = Nonlinearity::power(2);
        let fd = shift_jacobian(&pell(a), &nl, 1e-5).map_err(|e| e.to_string())?[0][0];
        let analytic = 3.0 * a / (4.0 * 2f64.sqrt());
        let rel = (fd / analytic - 1.0).abs();
        check(rel < 1e-6, format!("∂ω/∂a = {fd}, analytic {analytic}"))?;
        let rep = transversality(&pell(a), &nl, &[1e-2, 5e-3, 2.5e-3]).map_err(|e| e.to_string())?;
        let slope = rep.slope.ok_or("no slope")?;
        check((slope - 2.0).abs() <= 0.3, format!("rescaled slope {slope}"))?;
        Ok(format!(
            "FD relative error {rel:.1e}; rescaled log-det slope {slope:.4} (p·b = 2), unrescaled {:.4}",
            rep.slope_unrescaled.unwrap_or(f64::NAN)
        ))
    });
}

// ---------------------------------------------------------------- 10

#[test]
fn criterion_10_lifetime() {
    criterion(10, "lifetime to T = δ^-A", 300.0, || {
        let data = InitialData::from_seed(&pell(1.0));
        let opts = LifetimeOptions::default();
        let delta = 0.02;
        let rep = lifetime_run(&data, delta, 2, 1.5, None, &opts).map_err(|e| e.to_string())?;
        check(rep.blowup_time.is_none(), "blow-up")?;
        check(rep.max_excess <= 10.0 * delta, format!("excess {:e}", rep.max_excess))?;
        check(rep.max_energy_drift <= 1e-6, format!("energy drift {:e}", rep.max_energy_drift))?;
        let lin = lifetime_run(&data, 0.0, 2, 1.5, Some(rep.t_final), &opts).map_err(|e| e.to_string())?;
        let s0 = lin.rows.first().map(|r| r.norm_v + r.norm_vt).ok_or("no checkpoints")?;
        let iso = lin.rows.iter().map(|r| (r.norm_v + r.norm_vt - s0).abs() / s0).fold(0.0, f64::max);
        check(iso <= 1e-10, format!("δ = 0 norm deviation {iso:e}"))?;
        Ok(format!(
            "T = {:.1}, excess {:.3e} ≤ {:.2}, drift {:.1e}, δ = 0 relative norm deviation {:.1e}",
            rep.t_final,
            rep.max_excess,
            10.0 * delta,
            rep.max_energy_drift,
            iso
        ))
    });
}

// ---------------------------------------------------------------- 11

#[test]
fn criterion_11_determinism() {
    criterion(11, "byte-identical reruns", 60.0, || {
        let text = "rng_seed = 3\n[seed]\np = 2\nsites = [[1]]\namplitudes = [0.01]\n[evolve]\na_exp = 1.0\n";
        let run = || -> Result<Vec<Vec<u8>>, String> {
            let cfg = LoadedConfig::from_str_in(text, Path::new(".")).map_err(|e| e.to_string())?;
            let e = |e: hyperwave_core::Error| e.to_string();
            let outs = [
                pipeline::run_genericity(&cfg, None, None, None).map_err(e)?,
                pipeline::run_charset(&cfg, None, None).map_err(e)?,
                pipeline::run_gap(&cfg, None, None, None).map_err(e)?,
                pipeline::run_solve(&cfg, None, None, None, None).map_err(e)?,
                pipeline::run_evolve(&cfg, None, None).map_err(e)?,
                pipeline::run_measure(&cfg, Some(500), None).map_err(e)?,
            ];
            Ok(outs.into_iter().flat_map(|o| o.files.into_iter().map(|f| f.bytes)).collect())
        };
        let (a, b) = (run()?, run()?);
        check(a == b, "artifacts differ between reruns")?;
        Ok(format!("{} artifacts identical across two runs", a.len()))
    });
}
