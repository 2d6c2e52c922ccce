//! Bi-characteristics `𝒞± = {(n, j) : ±n·ω⁽⁰⁾ + √(|j|²+1) = 0}` on lattice
//! boxes, their connected pieces, and the empirical small-divisor profile.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::genericity::DifferenceSet;
use crate::lattice::LatticePoint;
use crate::radical::{radical_sqrt_int, RadicalNumber};
use crate::seed::{LinearSeed, SeedRecord};
use crate::{Error, Result};

/// `±n·ω⁽⁰⁾ + √(|j|²+1)` with `sign = ±1`.
pub fn characteristic_expr(seed: &LinearSeed, x: &LatticePoint, sign: i8) -> RadicalNumber {
    let s = seed.n_dot_omega0(&x.n).scale_int(i64::from(sign));
    let r = radical_sqrt_int((x.j_sq() + 1) as u64).expect("j² + 1 >= 1");
    &s + &r
}

/// `Some(+1)` on `𝒞₊`, `Some(−1)` on `𝒞₋`, `None` off `𝒞`. Exact.
pub fn membership(seed: &LinearSeed, x: &LatticePoint) -> Option<i8> {
    if x.n.iter().all(|&c| c == 0) {
        return None;
    }
    let s = seed.n_dot_omega0(&x.n);
    // ±s + √(j²+1) = 0 forces s² = j² + 1; only then is the full test run.
    let k = s.square().as_integer()?;
    if k != (x.j_sq() + 1).into() {
        return None;
    }
    let sign: i8 = if s.signum() < 0 { 1 } else { -1 };
    characteristic_expr(seed, x, sign).is_zero().then_some(sign)
}

/// Truncation: `‖n‖₁ ≤ n_l1` and `‖j‖_∞ ≤ j_inf`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharBox {
    pub n_l1: i64,
    pub j_inf: i64,
}

impl CharBox {
    pub fn new(n_l1: i64, j_inf: i64) -> Result<Self> {
        if n_l1 < 1 || j_inf < 1 {
            return Err(Error::invalid("box radii must be >= 1"));
        }
        Ok(Self { n_l1, j_inf })
    }

    pub fn contains(&self, x: &LatticePoint) -> bool {
        x.n_l1() <= self.n_l1 && x.j_linf() <= self.j_inf
    }
}

/// All `n ∈ Z^b` with `‖n‖₁ ≤ radius`, lexicographically sorted.
pub fn n_vectors(b: usize, radius: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(b);
    fn rec(b: usize, budget: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if cur.len() == b {
            out.push(cur.clone());
            return;
        }
        for v in -budget..=budget {
            cur.push(v);
            rec(b, budget - v.abs(), cur, out);
            cur.pop();
        }
    }
    rec(b, radius, &mut cur, &mut out);
    out
}

/// All `j ∈ Z^d` with `‖j‖_∞ ≤ radius`, grouped by `|j|²`.
fn j_table(d: usize, radius: i64) -> HashMap<i64, Vec<Vec<i64>>> {
    let mut table: HashMap<i64, Vec<Vec<i64>>> = HashMap::new();
    let side = (2 * radius + 1) as usize;
    let total = side.pow(d as u32);
    for idx in 0..total {
        let mut rest = idx;
        let j: Vec<i64> = (0..d)
            .map(|_| {
                let c = (rest % side) as i64 - radius;
                rest /= side;
                c
            })
            .collect();
        table.entry(j.iter().map(|x| x * x).sum()).or_default().push(j);
    }
    for v in table.values_mut() {
        v.sort();
    }
    table
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicSet {
    pub plus: BTreeSet<LatticePoint>,
    pub minus: BTreeSet<LatticePoint>,
    #[serde(rename = "box")]
    pub bx: CharBox,
    pub seed: SeedRecord,
}

impl CharacteristicSet {
    pub fn len(&self) -> usize {
        self.plus.len() + self.minus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `𝒞₊ ∪ 𝒞₋`, sorted.
    pub fn all(&self) -> Vec<LatticePoint> {
        let mut v: Vec<_> = self.plus.iter().chain(&self.minus).cloned().collect();
        v.sort();
        v
    }

    /// `Some(±1)` for members.
    pub fn sign_of(&self, x: &LatticePoint) -> Option<i8> {
        if self.plus.contains(x) {
            Some(1)
        } else if self.minus.contains(x) {
            Some(-1)
        } else {
            None
        }
    }

    /// The mirror `(n, j) ↦ (−n, j)` exchanges the two sheets, and
    /// `j ↦ −j` preserves each.
    pub fn symmetry_defects(&self) -> usize {
        let flip_n = |x: &LatticePoint| LatticePoint::new(x.n.iter().map(|v| -v).collect(), x.j.clone());
        let flip_j = |x: &LatticePoint| LatticePoint::new(x.n.clone(), x.j.iter().map(|v| -v).collect());
        self.plus.iter().filter(|x| !self.minus.contains(&flip_n(x))).count()
            + self.minus.iter().filter(|x| !self.plus.contains(&flip_n(x))).count()
            + self.plus.iter().filter(|x| !self.plus.contains(&flip_j(x))).count()
            + self.minus.iter().filter(|x| !self.minus.contains(&flip_j(x))).count()
    }
}

/// Exact enumeration of `𝒞 ∩ box`.
pub fn enumerate_characteristics(seed: &LinearSeed, bx: CharBox) -> Result<CharacteristicSet> {
    let table = j_table(seed.d(), bx.j_inf);
    let ns = n_vectors(seed.b(), bx.n_l1);
    let hits: Vec<(LatticePoint, i8)> = ns
        .par_iter()
        .filter(|n| n.iter().any(|&c| c != 0))
        .flat_map_iter(|n| {
            let s = seed.n_dot_omega0(n);
            let mut found = Vec::new();
            if let Some(k) = s.square().as_integer().and_then(|k| i64::try_from(k).ok()) {
                if let Some(js) = table.get(&(k - 1)) {
                    let sign: i8 = if s.signum() < 0 { 1 } else { -1 };
                    for j in js {
                        let x = LatticePoint::new(n.clone(), j.clone());
                        if characteristic_expr(seed, &x, sign).is_zero() {
                            found.push((x, sign));
                        }
                    }
                }
            }
            found
        })
        .collect();
    let mut plus = BTreeSet::new();
    let mut minus = BTreeSet::new();
    for (x, s) in hits {
        if s > 0 {
            plus.insert(x);
        } else {
            minus.insert(x);
        }
    }
    Ok(CharacteristicSet {
        plus,
        minus,
        bx,
        seed: seed.to_record(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Adjacency {
    GammaStep,
    AlgebraStep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentReport {
    pub components: Vec<Vec<LatticePoint>>,
    pub max_size: usize,
    pub bound_b: usize,
    pub adjacency_mode: Adjacency,
    /// The difference set used for adjacency was truncated.
    pub adjacency_partial: bool,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Components of `𝒞 ∩ box` where two points are adjacent iff their
/// difference lies in `diffs ∖ {0}` (`Γ` for gamma-step, `𝒜` for
/// algebra-step).
pub fn connected_components(cs: &CharacteristicSet, diffs: &DifferenceSet, mode: Adjacency, bound_b: usize) -> ComponentReport {
    let points = cs.all();
    let index: HashMap<&LatticePoint, usize> = points.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let steps: Vec<&LatticePoint> = diffs.nonzero().collect();
    let pairwise = points.len() * points.len() < points.len() * steps.len();
    let edges: Vec<(usize, usize)> = (0..points.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut e = Vec::new();
            if pairwise {
                for k in i + 1..points.len() {
                    if diffs.contains(&(&points[k] - &points[i])) {
                        e.push((i, k));
                    }
                }
            } else {
                for g in &steps {
                    if let Some(&k) = index.get(&(&points[i] + g)) {
                        e.push((i, k));
                    }
                }
            }
            e
        })
        .collect();
    let mut uf = UnionFind::new(points.len());
    for (a, b) in edges {
        uf.union(a, b);
    }
    let mut groups: HashMap<usize, Vec<LatticePoint>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        let r = uf.find(i);
        groups.entry(r).or_default().push(p.clone());
    }
    let mut components: Vec<Vec<LatticePoint>> = groups.into_values().collect();
    components.sort();
    let max_size = components.iter().map(Vec::len).max().unwrap_or(0);
    ComponentReport {
        components,
        max_size,
        bound_b,
        adjacency_mode: mode,
        adjacency_partial: diffs.partial,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop2Check {
    pub holds: bool,
    pub max_size: usize,
    pub bound_b: usize,
    pub counterexample: Option<Vec<LatticePoint>>,
}

/// Component sizes against `B`.
pub fn verify_prop2_bound(report: &ComponentReport) -> Prop2Check {
    let counterexample = report.components.iter().find(|c| c.len() > report.bound_b).cloned();
    Prop2Check {
        holds: counterexample.is_none(),
        max_size: report.max_size,
        bound_b: report.bound_b,
        counterexample,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiophantineRow {
    pub n_max: i64,
    /// `m(N)`: smallest nonzero divisor with `1 ≤ ‖n‖₁ ≤ N`, `j` in the box.
    pub m: f64,
    pub argmin: LatticePoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiophantineProfile {
    pub rows: Vec<DiophantineRow>,
    /// Exponent: minus the least-squares slope of `log m` against `log N`.
    pub q: f64,
    /// Largest `c′` with `m(N) ≥ c′ N^{−q}` on the whole table.
    pub cprime: f64,
    /// `exp` of the least-squares intercept.
    pub cprime_lsq: f64,
    #[serde(rename = "box")]
    pub bx: CharBox,
}

impl DiophantineProfile {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("N,m,argmin_n,argmin_j\n");
        for r in &self.rows {
            let join = |v: &[i64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
            s.push_str(&format!("{},{:e},{},{}\n", r.n_max, r.m, join(&r.argmin.n), join(&r.argmin.j)));
        }
        s
    }

    /// Bound `C′N^q` on the inverse of the off-characteristic diagonal.
    pub fn inverse_bound(&self, n: i64) -> f64 {
        (n.max(1) as f64).powf(self.q) / self.cprime
    }
}

/// Least-squares line `y = α + βx`; returns `(α, β)`.
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let beta = sxy / sxx;
    (my - beta * mx, beta)
}

/// Empirical small-divisor profile `m(N)` for `N = 1..=box.n_l1` with fitted
/// constants.
pub fn diophantine_profile(seed: &LinearSeed, bx: CharBox) -> Result<DiophantineProfile> {
    if bx.n_l1 < 2 {
        return Err(Error::DegenerateFit("need N >= 2 for a profile".into()));
    }
    let table = j_table(seed.d(), bx.j_inf);
    let mut ks: Vec<i64> = table.keys().cloned().collect();
    ks.sort_unstable();
    let roots: Vec<f64> = ks.iter().map(|k| ((k + 1) as f64).sqrt()).collect();

    let per_n: Vec<(i64, f64, LatticePoint)> = n_vectors(seed.b(), bx.n_l1)
        .par_iter()
        .filter(|n| n.iter().any(|&c| c != 0))
        .filter_map(|n| {
            let s = seed.n_dot_omega0(n);
            let abs_s = if s.signum() < 0 { -&s } else { s.clone() };
            let sf = abs_s.to_f64();
            let exact_k = s.square().as_integer().and_then(|k| i64::try_from(k).ok()).map(|k| k - 1);
            let pos = roots.partition_point(|r| *r < sf);
            let lo = pos.saturating_sub(2);
            let hi = (pos + 2).min(roots.len());
            let mut best: Option<(f64, i64)> = None;
            for idx in lo..hi {
                let k = ks[idx];
                if Some(k) == exact_k {
                    continue;
                }
                let exact = &abs_s - &radical_sqrt_int((k + 1) as u64).expect("k + 1 >= 1");
                let v = exact.to_f64().abs();
                if best.map_or(true, |(b, _)| v < b) {
                    best = Some((v, k));
                }
            }
            let (v, k) = best?;
            let j = table[&k][0].clone();
            Some((n.iter().map(|c| c.abs()).sum::<i64>(), v, LatticePoint::new(n.clone(), j)))
        })
        .collect();

    let mut rows = Vec::new();
    let mut cur: Option<(f64, LatticePoint)> = None;
    for nmax in 1..=bx.n_l1 {
        for (_, v, x) in per_n.iter().filter(|(l1, _, _)| *l1 == nmax) {
            if cur.as_ref().map_or(true, |(b, bx)| *v < *b || (*v == *b && x < bx)) {
                cur = Some((*v, x.clone()));
            }
        }
        if let Some((m, x)) = &cur {
            rows.push(DiophantineRow {
                n_max: nmax,
                m: *m,
                argmin: x.clone(),
            });
        }
    }
    if rows.len() < 3 {
        return Err(Error::DegenerateFit(format!("only {} profile points", rows.len())));
    }
    let lx: Vec<f64> = rows.iter().map(|r| (r.n_max as f64).ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.m.ln()).collect();
    let (alpha, beta) = least_squares(&lx, &ly);
    let q = -beta;
    let cprime = rows
        .iter()
        .map(|r| r.m * (r.n_max as f64).powf(q))
        .fold(f64::INFINITY, f64::min);
    Ok(DiophantineProfile {
        rows,
        q,
        cprime,
        cprime_lsq: alpha.exp(),
        bx,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genericity::{build_algebra, build_gamma, DEFAULT_ALGEBRA_CAP};

    fn pt(n: i64, j: i64) -> LatticePoint {
        LatticePoint::new(vec![n], vec![j])
    }

    fn seed1(j: i64) -> LinearSeed {
        LinearSeed::new(vec![vec![j]], vec![0.01], 2).unwrap()
    }

    #[test]
    fn pell_sqrt2() {
        let cs = enumerate_characteristics(&seed1(1), CharBox::new(30, 45).unwrap()).unwrap();
        let want: BTreeSet<_> = [(-1, 1), (-1, -1), (-5, 7), (-5, -7), (-29, 41), (-29, -41)]
            .iter()
            .map(|&(n, j)| pt(n, j))
            .collect();
        assert_eq!(cs.plus, want);
        assert_eq!(cs.minus.len(), 6);
        assert!(cs.minus.contains(&pt(29, -41)));
        assert_eq!(cs.symmetry_defects(), 0);
    }

    #[test]
    fn pell_sqrt5() {
        let cs = enumerate_characteristics(&seed1(2), CharBox::new(30, 70).unwrap()).unwrap();
        let want: BTreeSet<_> = [(-1, 2), (-1, -2), (-17, 38), (-17, -38)].iter().map(|&(n, j)| pt(n, j)).collect();
        assert_eq!(cs.plus, want);
    }

    #[test]
    fn seed_modes_are_characteristic() {
        let s = LinearSeed::new(vec![vec![1, 2], vec![3, -1]], vec![0.1, 0.1], 2).unwrap();
        for k in 0..2 {
            assert_eq!(membership(&s, &s.mode(k)), Some(1));
            assert_eq!(membership(&s, &-&s.mode(k)), Some(-1));
        }
        assert_eq!(membership(&s, &LatticePoint::zero(2, 2)), None);
    }

    #[test]
    fn pell_components() {
        let s = seed1(1);
        let cs = enumerate_characteristics(&s, CharBox::new(30, 45).unwrap()).unwrap();
        let g = build_gamma(&s);
        let rep = connected_components(&cs, &g, Adjacency::GammaStep, s.bound_b());
        assert_eq!(rep.max_size, 2);
        assert!(rep.components.contains(&vec![pt(-1, 1), pt(1, -1)]));
        assert_eq!(rep.components.len(), 11);
        assert!(verify_prop2_bound(&rep).holds);
        let a = build_algebra(&g, s.bound_b(), DEFAULT_ALGEBRA_CAP);
        let rep_a = connected_components(&cs, &a, Adjacency::AlgebraStep, s.bound_b());
        assert!(rep_a.components.len() <= rep.components.len());
    }

    #[test]
    fn empty_box_report() {
        let s = seed1(3);
        let cs = enumerate_characteristics(&s, CharBox::new(1, 1).unwrap()).unwrap();
        assert!(cs.is_empty());
        let rep = connected_components(&cs, &build_gamma(&s), Adjacency::GammaStep, 5);
        assert_eq!(rep.max_size, 0);
        assert!(rep.components.is_empty());
    }

    #[test]
    fn profile_small_range() {
        let p = diophantine_profile(&seed1(1), CharBox::new(3, 10).unwrap()).unwrap();
        let want = 3.0 * 2f64.sqrt() - 17f64.sqrt();
        assert!((p.rows[2].m - want).abs() < 1e-12, "{:?}", p.rows);
        assert!((want - 1.1953e-1).abs() < 1e-4);
        assert!(p.rows.windows(2).all(|w| w[1].m <= w[0].m));
        for r in &p.rows {
            assert!(r.m >= p.cprime * (r.n_max as f64).powf(-p.q) * (1.0 - 1e-12));
        }
        assert!(diophantine_profile(&seed1(1), CharBox::new(1, 10).unwrap()).is_err());
    }

    #[test]
    fn n_vector_counts() {
        assert_eq!(n_vectors(1, 3).len(), 7);
        assert_eq!(n_vectors(2, 1).len(), 5);
        assert_eq!(n_vectors(2, 2).len(), 13);
    }
}
