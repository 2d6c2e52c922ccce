//! Condition checks against independent code paths.

use std::collections::BTreeSet;

use hyperwave_core::genericity::{
    build_algebra, build_gamma, certify, check_condition_ii, check_condition_iii, condition_ii_pool, cube_support,
    GenericityOptions, IiMode, DEFAULT_ALGEBRA_CAP,
};
use hyperwave_core::characteristics::membership;
use hyperwave_core::{LatticePoint, LinearSeed};

/// (p+1)-fold sumset of the resonant set, built directly from the sites.
fn sumset(seed: &LinearSeed) -> BTreeSet<(Vec<i64>, Vec<i64>)> {
    let (b, d) = (seed.b(), seed.d());
    let mut base = Vec::new();
    for (k, j) in seed.sites().iter().enumerate() {
        let mut n = vec![0i64; b];
        n[k] = -1;
        base.push((n.clone(), j.clone()));
        base.push((n.iter().map(|x| -x).collect(), j.iter().map(|x| -x).collect()));
    }
    let mut level: BTreeSet<(Vec<i64>, Vec<i64>)> = [(vec![0; b], vec![0; d])].into_iter().collect();
    for _ in 0..=seed.p() {
        level = level
            .iter()
            .flat_map(|(n, j)| {
                base.iter().map(move |(bn, bj)| {
                    (
                        n.iter().zip(bn).map(|(x, y)| x + y).collect(),
                        j.iter().zip(bj).map(|(x, y)| x + y).collect(),
                    )
                })
            })
            .collect();
    }
    level
}

fn suite() -> Vec<LinearSeed> {
    let mut out = Vec::new();
    for p in 1..=3 {
        for j1 in 1..=5i64 {
            out.push(LinearSeed::new(vec![vec![j1]], vec![0.01], p).unwrap());
            for j2 in -5..=5i64 {
                if j2.abs() > j1 {
                    out.push(LinearSeed::new(vec![vec![j1], vec![j2]], vec![0.01, 0.01], p).unwrap());
                }
            }
        }
    }
    // equal frequencies at p = 4 refute (iii); nothing with p ≤ 3 above does
    for sites in [vec![vec![-1, 0], vec![0, -1]], vec![vec![-2, -1], vec![-1, -2]], vec![vec![1, 0], vec![2, -1]]] {
        out.push(LinearSeed::new(sites, vec![0.01, 0.01], 4).unwrap());
    }
    out
}

#[test]
fn condition_iii_matches_sumset_oracle() {
    let mut refuted = 0;
    for seed in suite() {
        let oracle = sumset(&seed);
        let support: BTreeSet<(Vec<i64>, Vec<i64>)> =
            cube_support(&seed).unwrap().into_iter().map(|x| (x.n, x.j)).collect();
        assert_eq!(support, oracle, "support of {:?}", seed.sites());
        let resonant: BTreeSet<LatticePoint> = seed.resonant_set().into_iter().collect();
        let hits = oracle
            .iter()
            .map(|(n, j)| LatticePoint::new(n.clone(), j.clone()))
            .filter(|x| !resonant.contains(x) && membership(&seed, x).is_some())
            .count();
        let v = check_condition_iii(&seed).unwrap();
        assert_eq!(v.is_fail(), hits > 0, "{:?} p={}", seed.sites(), seed.p());
        refuted += v.is_fail() as usize;
    }
    assert_eq!(refuted, 2);
}

#[test]
fn pool_excludes_sign_pairs() {
    let s = LinearSeed::new(vec![vec![1], vec![2]], vec![0.01, 0.01], 2).unwrap();
    let algebra = build_algebra(&build_gamma(&s), s.bound_b(), DEFAULT_ALGEBRA_CAP);
    let pool = condition_ii_pool(&s, &algebra);
    assert!(!pool.is_empty());
    for x in &pool {
        assert!(!pool.contains(&x.scaled(-1)));
    }
}

#[test]
fn two_mode_line_seed_is_generic() {
    let s = LinearSeed::new(vec![vec![1], vec![2]], vec![0.01, 0.01], 2).unwrap();
    let cert = certify(&s, &GenericityOptions::default()).unwrap();
    assert!(cert.fully_certified(), "{cert:?}");
}

#[test]
fn fail_witnesses_reverify() {
    // rational frequencies: |j|² + 1 a square on both sites
    let s = LinearSeed::new(vec![vec![2, 2], vec![1, 1]], vec![0.01, 0.01], 2).unwrap();
    let algebra = build_algebra(&build_gamma(&s), s.bound_b(), DEFAULT_ALGEBRA_CAP);
    let opts = GenericityOptions {
        mode_ii: IiMode::Sampled { count: 50, rng_seed: 2 },
        ..Default::default()
    };
    let cert = certify(&s, &opts).unwrap();
    assert!(!cert.is_generic());
    for w in cert.witnesses() {
        assert!(w.reverify(&s), "{w:?}");
    }
    let v = check_condition_ii(&s, &algebra, IiMode::Sampled { count: 50, rng_seed: 2 });
    if let Some(w) = v.witness() {
        assert!(w.reverify(&s));
    }
}
