use num_traits::{One, Zero};

use super::{ExactError, Rat, RatMatrix, RatVector};

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter().zip(b).fold(Rat::zero(), |acc, (x, y)| acc + x * y)
}

/// Basis of `{x : a x = 0}`, one vector per free column of the reduced row
/// echelon form (free coordinate set to one).
pub fn kernel_basis(a: &RatMatrix) -> Vec<RatVector> {
    let (red, pivots) = a.rref();
    let n = a.cols();
    let mut basis = Vec::new();
    let mut pivot_iter = pivots.iter().peekable();
    for free in 0..n {
        if pivot_iter.peek() == Some(&&free) {
            pivot_iter.next();
            continue;
        }
        let mut v = vec![Rat::zero(); n];
        v[free] = Rat::one();
        for (row, &p) in pivots.iter().enumerate() {
            v[p] = -red.get(row, free).clone();
        }
        basis.push(v);
    }
    basis
}

/// Basis of the common fixed space `⋂ ker(M - I)` of square matrices acting
/// on `Q^dim`.
pub fn invariant_subspace(dim: usize, mats: &[RatMatrix]) -> Result<Vec<RatVector>, ExactError> {
    let mut stacked = RatMatrix::zeros(0, dim);
    for m in mats {
        if m.rows() != dim || m.cols() != dim {
            return Err(ExactError::Shape(format!(
                "{}x{} matrix in a family acting on dimension {}",
                m.rows(),
                m.cols(),
                dim
            )));
        }
        stacked = stacked.vstack(&m.minus_identity())?;
    }
    Ok(kernel_basis(&stacked))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmath::{rat, rat_vec};

    #[test]
    fn kernel_of_identity_is_empty() {
        assert!(kernel_basis(&RatMatrix::identity(3)).is_empty());
    }

    #[test]
    fn kernel_of_zero_is_everything() {
        let k = kernel_basis(&RatMatrix::zeros(2, 3));
        assert_eq!(k, vec![rat_vec(&[1, 0, 0]), rat_vec(&[0, 1, 0]), rat_vec(&[0, 0, 1])]);
    }

    #[test]
    fn kernel_of_difference() {
        let k = kernel_basis(&RatMatrix::from_i64(&[&[1, -1]]));
        assert_eq!(k, vec![rat_vec(&[1, 1])]);
    }

    #[test]
    fn invariant_subspaces() {
        assert_eq!(invariant_subspace(3, &[RatMatrix::identity(3)]).unwrap().len(), 3);
        let swap = RatMatrix::from_i64(&[&[0, 1], &[1, 0]]);
        assert_eq!(invariant_subspace(2, &[swap]).unwrap(), vec![rat_vec(&[1, 1])]);
        let neg = RatMatrix::identity(2).scale(&rat(-1));
        assert!(invariant_subspace(2, &[neg]).unwrap().is_empty());
        assert!(invariant_subspace(3, &[RatMatrix::identity(2)]).is_err());
    }
}
