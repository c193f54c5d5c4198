//! Exact integer and rational linear algebra.
//!
//! Everything here is arbitrary precision; there is no floating point in the
//! crate. Chamber membership and strictness of inequalities are boundary
//! sensitive, so rounding is never acceptable.

mod linalg;
mod lp;
mod matrix;
mod smith;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub use linalg::{dot, invariant_subspace, kernel_basis};
pub use lp::{in_cone, irredundant_rows, lp_strict_feasible, LpProblem};
pub use matrix::{IntMatrix, Matrix, RatMatrix};
pub use smith::{smith_normal_form, SmithDecomposition};

pub type Int = BigInt;
pub type Rat = BigRational;
pub type RatVector = Vec<Rat>;
pub type IntVector = Vec<Int>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExactError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("cannot parse {0:?} as an exact rational")]
    Parse(String),
}

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_vec(xs: &[i64]) -> RatVector {
    xs.iter().map(|&x| rat(x)).collect()
}

pub fn int_vec(xs: &[i64]) -> IntVector {
    xs.iter().map(|&x| BigInt::from(x)).collect()
}

/// Parses `"p"` or `"p/q"` (optionally signed) into a reduced rational.
pub fn parse_rat(s: &str) -> Result<Rat, ExactError> {
    let err = || ExactError::Parse(s.to_string());
    let t = s.trim();
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| err())?;
    let den: BigInt = den.parse().map_err(|_| err())?;
    if den.is_zero() {
        return Err(err());
    }
    Ok(Rat::new(num, den))
}

pub fn parse_int(s: &str) -> Result<Int, ExactError> {
    s.trim()
        .parse()
        .map_err(|_| ExactError::Parse(s.to_string()))
}

/// Formats a rational as `p` or `p/q`.
pub fn format_rat(x: &Rat) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Clears denominators and divides by the content, giving a primitive
/// integer vector on the same ray. Returns `None` for the zero vector.
pub fn primitive_ray(v: &[Rat]) -> Option<IntVector> {
    if v.iter().all(Zero::is_zero) {
        return None;
    }
    let lcm = v
        .iter()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v
        .iter()
        .map(|x| (x * Rat::from_integer(lcm.clone())).to_integer())
        .collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    Some(ints.into_iter().map(|x| x / &g).collect())
}

/// Primitive vector spanning the same line, with first nonzero entry positive.
pub fn primitive_line(v: &[Rat]) -> Option<IntVector> {
    let mut p = primitive_ray(v)?;
    if p.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative()) {
        for x in p.iter_mut() {
            *x = -x.clone();
        }
    }
    Some(p)
}

pub fn to_rat_vec(v: &[Int]) -> RatVector {
    v.iter().map(|x| Rat::from_integer(x.clone())).collect()
}

/// Reduces a rational into `[0, 1)`.
pub fn frac_part(x: &Rat) -> Rat {
    x - x.floor()
}
