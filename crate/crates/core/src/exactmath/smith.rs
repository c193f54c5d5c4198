use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use super::IntMatrix;

/// `u * a * v == d` with `u`, `v` unimodular and `d` in Smith normal form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmithDecomposition {
    pub u: IntMatrix,
    pub d: IntMatrix,
    pub v: IntMatrix,
}

impl SmithDecomposition {
    /// The diagonal of `d`, of length `min(rows, cols)`.
    pub fn diagonal(&self) -> Vec<BigInt> {
        (0..self.d.rows().min(self.d.cols()))
            .map(|i| self.d.get(i, i).clone())
            .collect()
    }

    pub fn rank(&self) -> usize {
        self.diagonal().iter().filter(|x| !x.is_zero()).count()
    }
}

fn add_row_multiple(m: &mut IntMatrix, target: usize, source: usize, factor: &BigInt) {
    for c in 0..m.cols() {
        let v = m.get(target, c) + factor * m.get(source, c);
        m.set(target, c, v);
    }
}

fn add_col_multiple(m: &mut IntMatrix, target: usize, source: usize, factor: &BigInt) {
    for r in 0..m.rows() {
        let v = m.get(r, target) + factor * m.get(r, source);
        m.set(r, target, v);
    }
}

/// Smallest nonzero |entry| in the trailing submatrix, ties broken by
/// row-major position.
fn pivot_position(d: &IntMatrix, t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize, BigInt)> = None;
    for r in t..d.rows() {
        for c in t..d.cols() {
            let x = d.get(r, c);
            if x.is_zero() {
                continue;
            }
            let a = x.abs();
            if best.as_ref().is_none_or(|(_, _, b)| a < *b) {
                best = Some((r, c, a));
            }
        }
    }
    best.map(|(r, c, _)| (r, c))
}

/// Smith normal form with a fixed pivoting rule, so equal inputs give equal
/// transforms.
pub fn smith_normal_form(a: &IntMatrix) -> SmithDecomposition {
    let (m, n) = (a.rows(), a.cols());
    let mut d = a.clone();
    let mut u = IntMatrix::identity(m);
    let mut v = IntMatrix::identity(n);

    'outer: for t in 0..m.min(n) {
        loop {
            let Some((pr, pc)) = pivot_position(&d, t) else {
                break 'outer;
            };
            d.swap_rows(t, pr);
            u.swap_rows(t, pr);
            d.swap_cols(t, pc);
            v.swap_cols(t, pc);

            let pivot = d.get(t, t).clone();
            let mut dirty = false;
            for r in t + 1..m {
                let q = d.get(r, t) / &pivot;
                if !q.is_zero() {
                    let f = -q;
                    add_row_multiple(&mut d, r, t, &f);
                    add_row_multiple(&mut u, r, t, &f);
                }
                dirty |= !d.get(r, t).is_zero();
            }
            for c in t + 1..n {
                let q = d.get(t, c) / &pivot;
                if !q.is_zero() {
                    let f = -q;
                    add_col_multiple(&mut d, c, t, &f);
                    add_col_multiple(&mut v, c, t, &f);
                }
                dirty |= !d.get(t, c).is_zero();
            }
            if dirty {
                continue;
            }
            // pivot must divide the rest of the block
            let bad_row = (t + 1..m)
                .find(|&r| (t + 1..n).any(|c| !(d.get(r, c) % &pivot).is_zero()));
            match bad_row {
                Some(r) => {
                    let one = BigInt::from(1);
                    add_row_multiple(&mut d, t, r, &one);
                    add_row_multiple(&mut u, t, r, &one);
                }
                None => break,
            }
        }
        if d.get(t, t).is_negative() {
            for c in 0..n {
                let x = -d.get(t, c).clone();
                d.set(t, c, x);
            }
            for c in 0..m {
                let x = -u.get(t, c).clone();
                u.set(t, c, x);
            }
        }
    }
    SmithDecomposition { u, d, v }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(a: &IntMatrix) -> SmithDecomposition {
        let s = smith_normal_form(a);
        assert_eq!(&(&s.u * a) * &s.v, s.d);
        assert_eq!(s.u.det().abs(), BigInt::from(1));
        assert_eq!(s.v.det().abs(), BigInt::from(1));
        s
    }

    #[test]
    fn identity_is_fixed() {
        let a = IntMatrix::identity(2);
        let s = check(&a);
        assert_eq!(s.d, a);
        assert!(s.u.is_identity());
        assert!(s.v.is_identity());
    }

    #[test]
    fn gamma2_minus_identity() {
        let a = IntMatrix::from_i64(&[&[-2, 0], &[0, -2]]);
        let s = check(&a);
        assert_eq!(s.diagonal(), vec![BigInt::from(2), BigInt::from(2)]);
    }

    #[test]
    fn gamma6_minus_identity() {
        let a = IntMatrix::from_i64(&[&[-1, 1], &[-1, -1]]);
        let s = check(&a);
        assert_eq!(s.diagonal(), vec![BigInt::from(1), BigInt::from(2)]);
    }

    #[test]
    fn divisibility_repair() {
        // diag(2, 3) is diagonal but not in normal form
        let a = IntMatrix::from_i64(&[&[2, 0], &[0, 3]]);
        let s = check(&a);
        assert_eq!(s.diagonal(), vec![BigInt::from(1), BigInt::from(6)]);
    }

    #[test]
    fn rectangular_and_zero() {
        let s = check(&IntMatrix::from_i64(&[&[0, 0, 0], &[0, 0, 0]]));
        assert_eq!(s.rank(), 0);
        let s = check(&IntMatrix::from_i64(&[&[4, 6, 8], &[2, 2, 2]]));
        assert_eq!(s.diagonal(), vec![BigInt::from(2), BigInt::from(2)]);
    }
}
