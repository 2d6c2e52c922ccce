//! Determinants over exact or floating fields.

use std::collections::HashMap;
use std::fmt::Debug;

/// Minimal field interface shared by [`crate::RadicalNumber`] and `f64`.
pub trait FieldElem: Clone + Debug + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    /// Structural zero. For floats this is `== 0.0`; callers supply their own
    /// tolerance where that matters.
    fn is_exact_zero(&self) -> bool;
    fn fadd(&self, o: &Self) -> Self;
    fn fsub(&self, o: &Self) -> Self;
    fn fmul(&self, o: &Self) -> Self;
    fn fdiv(&self, o: &Self) -> Self;
    fn fneg(&self) -> Self;
}

impl FieldElem for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn is_exact_zero(&self) -> bool {
        *self == 0.0
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

/// Midpoint-radius enclosure `[mid − rad, mid + rad]` of a real number,
/// with rounding of every operation absorbed into the radius. Used to settle
/// most nonzero tests before falling back to exact arithmetic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ball {
    pub mid: f64,
    pub rad: f64,
}

const U: f64 = f64::EPSILON;

impl Ball {
    pub fn exact(x: f64) -> Self {
        Self { mid: x, rad: 0.0 }
    }

    /// Enclosure of a value known to within `rel` relative error.
    pub fn with_rel(x: f64, rel: f64) -> Self {
        Self {
            mid: x,
            rad: x.abs() * rel,
        }
    }

    pub fn contains_zero(&self) -> bool {
        !(self.mid.abs() > self.rad) || !self.mid.is_finite() || !self.rad.is_finite()
    }

    fn rounded(mid: f64, rad: f64) -> Self {
        Self {
            mid,
            rad: (rad + U * mid.abs()) * (1.0 + 4.0 * U) + f64::MIN_POSITIVE,
        }
    }
}

impl FieldElem for Ball {
    fn zero() -> Self {
        Ball::exact(0.0)
    }
    fn one() -> Self {
        Ball::exact(1.0)
    }
    fn is_exact_zero(&self) -> bool {
        self.mid == 0.0 && self.rad == 0.0
    }
    fn fadd(&self, o: &Self) -> Self {
        Ball::rounded(self.mid + o.mid, self.rad + o.rad)
    }
    fn fsub(&self, o: &Self) -> Self {
        Ball::rounded(self.mid - o.mid, self.rad + o.rad)
    }
    fn fmul(&self, o: &Self) -> Self {
        Ball::rounded(
            self.mid * o.mid,
            self.mid.abs() * o.rad + self.rad * o.mid.abs() + self.rad * o.rad,
        )
    }
    fn fdiv(&self, o: &Self) -> Self {
        if o.contains_zero() {
            return Ball {
                mid: 0.0,
                rad: f64::INFINITY,
            };
        }
        // |x/y − m/n| ≤ (|x − m| + |m/n|·|y − n|) / (|n| − r)
        let q = self.mid / o.mid;
        Ball::rounded(q, (self.rad + q.abs() * o.rad) / (o.mid.abs() - o.rad))
    }
    fn fneg(&self) -> Self {
        Ball {
            mid: -self.mid,
            rad: self.rad,
        }
    }
}

/// Fraction-free (Bareiss) determinant of a square matrix.
///
/// Each elimination step divides exactly by the previous pivot, so over an
/// integral domain the intermediate entries are themselves minors and stay
/// small; over a field the divisions are exact anyway.
pub fn bareiss_det<F: FieldElem>(mut m: Vec<Vec<F>>) -> F {
    let n = m.len();
    if n == 0 {
        return F::one();
    }
    assert!(m.iter().all(|r| r.len() == n), "bareiss_det needs a square matrix");
    let mut sign_flip = false;
    let mut prev = F::one();
    for k in 0..n - 1 {
        if m[k][k].is_exact_zero() {
            let Some(swap) = (k + 1..n).find(|&i| !m[i][k].is_exact_zero()) else {
                return F::zero();
            };
            m.swap(k, swap);
            sign_flip = !sign_flip;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = m[i][j].fmul(&m[k][k]).fsub(&m[i][k].fmul(&m[k][j]));
                m[i][j] = num.fdiv(&prev);
            }
        }
        prev = m[k][k].clone();
    }
    let d = m[n - 1][n - 1].clone();
    if sign_flip {
        d.fneg()
    } else {
        d
    }
}

/// Memoized minors of a fixed rectangular matrix, by Laplace expansion along
/// the first selected row. Keys are (row mask, column mask); at most 32 rows
/// and columns.
pub struct MinorCache<'a, F: FieldElem> {
    rows: &'a [Vec<F>],
    memo: HashMap<(u32, u32), F>,
}

impl<'a, F: FieldElem> MinorCache<'a, F> {
    pub fn new(rows: &'a [Vec<F>]) -> Self {
        assert!(rows.len() <= 32 && rows.iter().all(|r| r.len() <= 32));
        Self {
            rows,
            memo: HashMap::new(),
        }
    }

    /// Determinant of the submatrix selected by the two masks, which must
    /// have equal popcounts.
    pub fn minor(&mut self, row_mask: u32, col_mask: u32) -> F {
        debug_assert_eq!(row_mask.count_ones(), col_mask.count_ones());
        if row_mask == 0 {
            return F::one();
        }
        if let Some(v) = self.memo.get(&(row_mask, col_mask)) {
            return v.clone();
        }
        let r = row_mask.trailing_zeros() as usize;
        let rest_rows = row_mask & !(1 << r);
        let mut acc = F::zero();
        let mut sign = false;
        let mut cols = col_mask;
        while cols != 0 {
            let c = cols.trailing_zeros() as usize;
            cols &= cols - 1;
            let entry = &self.rows[r][c];
            if !entry.is_exact_zero() {
                let sub = self.minor(rest_rows, col_mask & !(1 << c));
                let term = entry.fmul(&sub);
                acc = if sign { acc.fsub(&term) } else { acc.fadd(&term) };
            }
            sign = !sign;
        }
        self.memo.insert((row_mask, col_mask), acc.clone());
        acc
    }

    pub fn cached(&self) -> usize {
        self.memo.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radical::radical_sqrt_int;
    use crate::RadicalNumber;

    fn as_rows(v: &[&[f64]]) -> Vec<Vec<f64>> {
        v.iter().map(|r| r.to_vec()).collect()
    }

    #[test]
    fn ball_encloses() {
        let third = Ball::exact(1.0).fdiv(&Ball::exact(3.0));
        let x = third.fmul(&Ball::exact(3.0)).fsub(&Ball::one());
        assert!(x.contains_zero());
        assert!(x.rad < 1e-15);
        let y = Ball::exact(2f64.sqrt()).fmul(&Ball::exact(2f64.sqrt()));
        assert!((y.mid - 2.0).abs() <= y.rad + 4.0 * f64::EPSILON);
        assert!(!Ball::with_rel(1e-300, 1e-15).contains_zero());
    }

    #[test]
    fn float_bareiss() {
        let m = as_rows(&[&[2.0, 1.0, 0.0], &[1.0, 2.0, 1.0], &[0.0, 1.0, 2.0]]);
        assert!((bareiss_det(m) - 4.0).abs() < 1e-12);
        let m = as_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(bareiss_det(m), -1.0);
        let m = as_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert_eq!(bareiss_det(m), 0.0);
    }

    #[test]
    fn radical_bareiss_and_minors_agree() {
        let s2 = radical_sqrt_int(2).unwrap();
        let s3 = radical_sqrt_int(3).unwrap();
        let one = RadicalNumber::one();
        let m = vec![
            vec![s2.clone(), one.clone(), s3.clone()],
            vec![one.clone(), s3.clone(), s2.clone()],
            vec![s3.clone(), s2.clone(), one.clone()],
        ];
        let d = bareiss_det(m.clone());
        let mut cache = MinorCache::new(&m);
        assert_eq!(cache.minor(0b111, 0b111), d);
        // 3·√6 − 1 − 2√6·... cross-check numerically
        let f: Vec<Vec<f64>> = m.iter().map(|r| r.iter().map(|x| x.to_f64()).collect()).collect();
        assert!((bareiss_det(f) - d.to_f64()).abs() < 1e-12);
        // rank-deficient exactly
        let sing = vec![vec![s2.clone(), s3.clone()], vec![&s2 * &s2, &s2 * &s3]];
        assert!(bareiss_det(sing).is_zero());
    }
}
