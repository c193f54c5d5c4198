//! Closed-form counts for symmetric powers of du Val singularities.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::exactmath::Rat;
use crate::torusquot::{cyclic_group, singular_orbits};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("count for {ty} at n = {n} is not an integer: {value}")]
    NonIntegralCount { ty: String, n: u64, value: String },
    #[error("n must be at least 1")]
    ZeroN,
    #[error("invalid du Val type {0:?}")]
    InvalidType(String),
    #[error("no cyclic symplectic group of order {0} on a 2-torus")]
    UnsupportedOrder(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DuValType {
    A(u32),
    D(u32),
    E6,
    E7,
    E8,
}

impl DuValType {
    pub fn a(l: u32) -> Result<Self, FormulaError> {
        if l >= 1 {
            Ok(DuValType::A(l))
        } else {
            Err(FormulaError::InvalidType(format!("A{l}")))
        }
    }

    pub fn d(l: u32) -> Result<Self, FormulaError> {
        if l >= 4 {
            Ok(DuValType::D(l))
        } else {
            Err(FormulaError::InvalidType(format!("D{l}")))
        }
    }

    pub fn rank(&self) -> u32 {
        match *self {
            DuValType::A(l) | DuValType::D(l) => l,
            DuValType::E6 => 6,
            DuValType::E7 => 7,
            DuValType::E8 => 8,
        }
    }

    pub fn coxeter_number(&self) -> u32 {
        match *self {
            DuValType::A(l) => l + 1,
            DuValType::D(l) => 2 * l - 2,
            DuValType::E6 => 12,
            DuValType::E7 => 18,
            DuValType::E8 => 30,
        }
    }

    pub fn exponents(&self) -> Vec<u32> {
        match *self {
            DuValType::A(l) => (1..=l).collect(),
            DuValType::D(l) => {
                let mut e: Vec<u32> = (1..l).map(|i| 2 * i - 1).collect();
                e.push(l - 1);
                e.sort_unstable();
                e
            }
            DuValType::E6 => vec![1, 4, 5, 7, 8, 11],
            DuValType::E7 => vec![1, 5, 7, 9, 11, 13, 17],
            DuValType::E8 => vec![1, 7, 11, 13, 17, 19, 23, 29],
        }
    }
}

impl fmt::Display for DuValType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DuValType::A(l) => write!(f, "A{l}"),
            DuValType::D(l) => write!(f, "D{l}"),
            DuValType::E6 => f.write_str("E6"),
            DuValType::E7 => f.write_str("E7"),
            DuValType::E8 => f.write_str("E8"),
        }
    }
}

impl FromStr for DuValType {
    type Err = FormulaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || FormulaError::InvalidType(s.to_string());
        let (head, tail) = s.split_at(s.char_indices().nth(1).map_or(s.len(), |(i, _)| i));
        let l: u32 = tail.parse().map_err(|_| bad())?;
        match head {
            "A" => DuValType::a(l),
            "D" => DuValType::d(l),
            "E" => match l {
                6 => Ok(DuValType::E6),
                7 => Ok(DuValType::E7),
                8 => Ok(DuValType::E8),
                _ => Err(bad()),
            },
            _ => Err(bad()),
        }
    }
}

fn to_count(value: Rat, ty: &DuValType, n: u64) -> Result<BigUint, FormulaError> {
    if !value.is_integer() || value.is_negative() {
        return Err(FormulaError::NonIntegralCount {
            ty: ty.to_string(),
            n,
            value: value.to_string(),
        });
    }
    Ok(value.to_integer().to_biguint().expect("nonnegative"))
}

/// Number of projective crepant resolutions of Sym^n of the singularity:
/// the product of (n-1)h/(e_i+1) + 1 over the exponents.
pub fn bellamy_count(t: DuValType, n: u64) -> Result<BigUint, FormulaError> {
    if n == 0 {
        return Err(FormulaError::ZeroN);
    }
    let h = Rat::from_integer(t.coxeter_number().into());
    let nm1 = Rat::from_integer(BigInt::from(n - 1));
    let value = t.exponents().iter().fold(Rat::one(), |acc, &e| {
        acc * (&nm1 * &h / Rat::from_integer((e + 1).into()) + Rat::one())
    });
    to_count(value, &t, n)
}

/// Closed polynomials for the exceptional types, evaluated exactly.
pub fn e_polynomial_check(t: DuValType, n: u64) -> Result<BigUint, FormulaError> {
    let (denominator, coefficients): (i64, &[i64]) = match t {
        DuValType::E6 => (30, &[1728, -4320, 4140, -1900, 417, -35]),
        DuValType::E7 => (280, &[59049, -183708, 229635, -147420, 51156, -9072, 640]),
        DuValType::E8 => (1344, &[1265625, -4725000, 7323750, -6100500, 2943325, -820260, 121796, -7392]),
        other => return Err(FormulaError::InvalidType(other.to_string())),
    };
    if n == 0 {
        return Err(FormulaError::ZeroN);
    }
    let x = BigInt::from(n);
    let horner = coefficients
        .iter()
        .fold(BigInt::zero(), |acc, &c| acc * &x + BigInt::from(c));
    to_count(Rat::new(x * horner, BigInt::from(denominator)), &t, n)
}

/// Multiset of du Val singular points of a surface.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SurfaceProfile {
    pub points: Vec<DuValType>,
}

impl SurfaceProfile {
    pub fn new(mut points: Vec<DuValType>) -> Self {
        points.sort();
        SurfaceProfile { points }
    }
}

impl fmt::Display for SurfaceProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.points.iter().map(ToString::to_string).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Resolution count of Sym^n of a surface: the local counts multiply.
pub fn sym_duval_count(p: &SurfaceProfile, n: u64) -> Result<BigUint, FormulaError> {
    if n == 0 {
        return Err(FormulaError::ZeroN);
    }
    p.points
        .iter()
        .try_fold(BigUint::one(), |acc, t| Ok(acc * bellamy_count(*t, n)?))
}

/// Singular points of the quotient of a 2-torus by the cyclic group of
/// order m, read off the isolated orbits: stabilizer C_d gives A_{d-1}.
pub fn torus_surface_profile(m: u32) -> Result<SurfaceProfile, FormulaError> {
    let group = cyclic_group(m).ok_or(FormulaError::UnsupportedOrder(m))?;
    let report = singular_orbits(&group);
    let points = report
        .orbits
        .iter()
        .map(|o| DuValType::A(o.stabilizer.order() as u32 - 1))
        .collect();
    Ok(SurfaceProfile::new(points))
}
