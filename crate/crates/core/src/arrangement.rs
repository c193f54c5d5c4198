//! Rational central hyperplane arrangements inside polyhedral cones.
//!
//! A chamber is a sign vector over the arrangement's hyperplanes that is
//! realized by some point strictly inside the ambient cone. Chambers are
//! stored with an exact interior witness and kept in lexicographic
//! sign-vector order (`+` before `-`).

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::exactmath::{
    dot, lp_strict_feasible, primitive_line, primitive_ray, to_rat_vec, ExactError, IntVector,
    LpProblem, RatMatrix, RatVector,
};

/// Largest arrangement accepted by [`brute_force_chambers`].
pub const BRUTE_FORCE_LIMIT: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArrangementError {
    #[error("zero normal vector at position {0}")]
    ZeroNormal(usize),
    #[error("vector of length {found} in a {expected}-dimensional arrangement")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("ambient cone has empty interior")]
    EmptyAmbient,
    #[error("{0} hyperplanes exceed the brute-force limit")]
    TooManyHyperplanes(usize),
    #[error("point lies on hyperplane {0}")]
    OnWall(usize),
    #[error("point violates ambient halfspace {0}")]
    OutsideAmbient(usize),
    #[error("point does not lie in any chamber of the set")]
    UnknownChamber,
    #[error("matrix is not a symmetry of the arrangement: {0}")]
    NotArrangementSymmetry(String),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// Hyperplane through the origin, stored by its primitive sign-canonical
/// integer normal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Hyperplane {
    normal: IntVector,
}

impl Hyperplane {
    pub fn normal(&self) -> &IntVector {
        &self.normal
    }

    pub fn rat_normal(&self) -> RatVector {
        to_rat_vec(&self.normal)
    }
}

/// Intersection of closed halfspaces `<n, x> >= 0`. No halfspaces means the
/// whole space.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Cone {
    halfspaces: Vec<IntVector>,
}

impl Cone {
    pub fn halfspaces(&self) -> &[IntVector] {
        &self.halfspaces
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arrangement {
    dimension: usize,
    hyperplanes: Vec<Hyperplane>,
    ambient: Cone,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chamber {
    signs: Vec<Sign>,
    witness: RatVector,
}

impl Chamber {
    pub(crate) fn from_parts(signs: Vec<Sign>, witness: RatVector) -> Self {
        Chamber { signs, witness }
    }

    pub fn signs(&self) -> &[Sign] {
        &self.signs
    }

    /// Exact point strictly inside the chamber and the ambient cone.
    pub fn interior_point(&self) -> &RatVector {
        &self.witness
    }

    /// Sign string such as `[+-]`; the unique chamber of an empty
    /// arrangement is `[]`.
    pub fn label(&self) -> String {
        sign_label(&self.signs)
    }
}

pub fn sign_label(signs: &[Sign]) -> String {
    let mut s = String::with_capacity(signs.len() + 2);
    s.push('[');
    s.extend(signs.iter().map(|x| x.as_char()));
    s.push(']');
    s
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChamberSet {
    arrangement: Arrangement,
    chambers: Vec<Chamber>,
}

fn check_len(expected: usize, v: &[impl Sized]) -> Result<(), ArrangementError> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(ArrangementError::DimensionMismatch {
            expected,
            found: v.len(),
        })
    }
}

/// Builds a canonical arrangement: normals made primitive with positive
/// leading entry, proportional normals merged, hyperplanes that miss the
/// interior of the ambient cone dropped. Order of first occurrence is kept.
pub fn normalize(
    dimension: usize,
    raw_normals: &[RatVector],
    raw_cone: &[RatVector],
) -> Result<Arrangement, ArrangementError> {
    let mut halfspaces: Vec<IntVector> = Vec::new();
    for (i, c) in raw_cone.iter().enumerate() {
        check_len(dimension, c)?;
        let ray = primitive_ray(c).ok_or(ArrangementError::ZeroNormal(i))?;
        if !halfspaces.contains(&ray) {
            halfspaces.push(ray);
        }
    }
    let ambient = Cone { halfspaces };

    let mut normals: Vec<IntVector> = Vec::new();
    for (i, n) in raw_normals.iter().enumerate() {
        check_len(dimension, n)?;
        let line = primitive_line(n).ok_or(ArrangementError::ZeroNormal(i))?;
        if !normals.contains(&line) {
            normals.push(line);
        }
    }

    let mut arrangement = Arrangement {
        dimension,
        hyperplanes: Vec::new(),
        ambient,
    };
    let cuts_interior = |n: &IntVector, a: &Arrangement| -> Result<bool, ArrangementError> {
        let rn = to_rat_vec(n);
        let neg: RatVector = rn.iter().map(|x| -x.clone()).collect();
        let mut plus = a.ambient_program();
        plus.strict.push(rn);
        let mut minus = a.ambient_program();
        minus.strict.push(neg);
        Ok(lp_strict_feasible(&plus)?.is_some() && lp_strict_feasible(&minus)?.is_some())
    };
    let ambient_ok =
        arrangement.ambient.halfspaces.is_empty() || arrangement.ambient_interior_point()?.is_some();
    for n in normals {
        // with an empty ambient interior nothing can be decided; keep the
        // hyperplane and let enumeration report the problem
        if arrangement.ambient.halfspaces.is_empty() || !ambient_ok || cuts_interior(&n, &arrangement)? {
            arrangement.hyperplanes.push(Hyperplane { normal: n });
        }
    }
    Ok(arrangement)
}

impl Arrangement {
    /// Normalized arrangement from small integer data.
    pub fn from_i64(dimension: usize, normals: &[&[i64]], cone: &[&[i64]]) -> Result<Self, ArrangementError> {
        let n: Vec<RatVector> = normals.iter().map(|v| crate::exactmath::rat_vec(v)).collect();
        let c: Vec<RatVector> = cone.iter().map(|v| crate::exactmath::rat_vec(v)).collect();
        normalize(dimension, &n, &c)
    }

    /// Arrangement taken as given; the caller guarantees primitive,
    /// canonical, pairwise non-proportional normals.
    pub(crate) fn from_parts(dimension: usize, normals: Vec<IntVector>, cone: Vec<IntVector>) -> Self {
        Arrangement {
            dimension,
            hyperplanes: normals.into_iter().map(|normal| Hyperplane { normal }).collect(),
            ambient: Cone { halfspaces: cone },
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn hyperplanes(&self) -> &[Hyperplane] {
        &self.hyperplanes
    }

    pub fn ambient(&self) -> &Cone {
        &self.ambient
    }

    fn ambient_program(&self) -> LpProblem {
        let mut p = LpProblem::new(self.dimension);
        p.strict
            .extend(self.ambient.halfspaces.iter().map(|c| to_rat_vec(c)));
        p
    }

    pub fn ambient_interior_point(&self) -> Result<Option<RatVector>, ArrangementError> {
        Ok(lp_strict_feasible(&self.ambient_program())?)
    }

    /// Strict inequalities cutting out the open chamber with these signs.
    pub fn chamber_inequalities(&self, signs: &[Sign]) -> Vec<RatVector> {
        let mut rows: Vec<RatVector> = self
            .hyperplanes
            .iter()
            .zip(signs)
            .map(|(h, s)| {
                let n = h.rat_normal();
                match s {
                    Sign::Plus => n,
                    Sign::Minus => n.into_iter().map(|x| -x).collect(),
                }
            })
            .collect();
        rows.extend(self.ambient.halfspaces.iter().map(|c| to_rat_vec(c)));
        rows
    }

    /// Interior witness for the sign vector, if it is realized.
    pub fn realize(&self, signs: &[Sign]) -> Result<Option<RatVector>, ArrangementError> {
        check_len(self.hyperplanes.len(), signs)?;
        let mut p = LpProblem::new(self.dimension);
        p.strict = self.chamber_inequalities(signs);
        Ok(lp_strict_feasible(&p)?)
    }

    /// Sign vector of a point strictly inside the ambient cone and off every
    /// hyperplane.
    pub fn sign_vector(&self, p: &[crate::exactmath::Rat]) -> Result<Vec<Sign>, ArrangementError> {
        check_len(self.dimension, p)?;
        for (i, c) in self.ambient.halfspaces.iter().enumerate() {
            if !dot(&to_rat_vec(c), p).is_positive() {
                return Err(ArrangementError::OutsideAmbient(i));
            }
        }
        self.hyperplanes
            .iter()
            .enumerate()
            .map(|(i, h)| {
                let v = dot(&h.rat_normal(), p);
                if v.is_zero() {
                    Err(ArrangementError::OnWall(i))
                } else if v.is_positive() {
                    Ok(Sign::Plus)
                } else {
                    Ok(Sign::Minus)
                }
            })
            .collect()
    }

    fn chamber(&self, signs: Vec<Sign>) -> Result<Option<Chamber>, ArrangementError> {
        Ok(self
            .realize(&signs)?
            .map(|witness| Chamber { signs, witness }))
    }
}

/// Chambers by wall-crossing search from one seed chamber.
pub fn enumerate_chambers(a: &Arrangement) -> Result<ChamberSet, ArrangementError> {
    if a.ambient_interior_point()?.is_none() {
        return Err(ArrangementError::EmptyAmbient);
    }
    let m = a.hyperplanes.len();

    // seed: fix signs one at a time, keeping the region open and nonempty
    let mut seed = Vec::with_capacity(m);
    let mut p = a.ambient_program();
    for h in &a.hyperplanes {
        let n = h.rat_normal();
        let mut trial = p.clone();
        trial.strict.push(n.clone());
        if lp_strict_feasible(&trial)?.is_some() {
            seed.push(Sign::Plus);
            p = trial;
        } else {
            seed.push(Sign::Minus);
            p.strict.push(n.into_iter().map(|x| -x).collect());
        }
    }

    let mut found: BTreeMap<Vec<Sign>, Chamber> = BTreeMap::new();
    let mut rejected: BTreeSet<Vec<Sign>> = BTreeSet::new();
    let mut queue = VecDeque::new();
    let first = a
        .chamber(seed)?
        .expect("greedy seed is realizable by construction");
    queue.push_back(first.signs.clone());
    found.insert(first.signs.clone(), first);
    while let Some(signs) = queue.pop_front() {
        for i in 0..m {
            let mut next = signs.clone();
            next[i] = next[i].flip();
            if found.contains_key(&next) || rejected.contains(&next) {
                continue;
            }
            match a.chamber(next.clone())? {
                Some(c) => {
                    queue.push_back(next.clone());
                    found.insert(next, c);
                }
                None => {
                    rejected.insert(next);
                }
            }
        }
    }
    Ok(ChamberSet {
        arrangement: a.clone(),
        chambers: found.into_values().collect(),
    })
}

/// Chambers by testing every sign vector; the reference the wall-crossing
/// search is checked against.
pub fn brute_force_chambers(a: &Arrangement) -> Result<ChamberSet, ArrangementError> {
    let m = a.hyperplanes.len();
    if m > BRUTE_FORCE_LIMIT {
        return Err(ArrangementError::TooManyHyperplanes(m));
    }
    let Some(start) = a.ambient_interior_point()? else {
        return Err(ArrangementError::EmptyAmbient);
    };
    let mut chambers = Vec::new();
    let mut prefix = Vec::with_capacity(m);
    brute_force_extend(a, &mut prefix, &start, &mut chambers)?;
    Ok(ChamberSet {
        arrangement: a.clone(),
        chambers,
    })
}

/// Depth-first over sign prefixes, Plus before Minus, so leaves come out in
/// lexicographic order. Unrealizable prefixes are cut; `witness` lies in the
/// open region of the current prefix.
fn brute_force_extend(
    a: &Arrangement,
    prefix: &mut Vec<Sign>,
    witness: &RatVector,
    out: &mut Vec<Chamber>,
) -> Result<(), ArrangementError> {
    let depth = prefix.len();
    if depth == a.hyperplanes.len() {
        if let Some(c) = a.chamber(prefix.clone())? {
            out.push(c);
        }
        return Ok(());
    }
    let value = dot(&a.hyperplanes[depth].rat_normal(), witness);
    for sign in [Sign::Plus, Sign::Minus] {
        prefix.push(sign);
        let same_side = match sign {
            Sign::Plus => value.is_positive(),
            Sign::Minus => value.is_negative(),
        };
        let child = if same_side {
            Some(witness.clone())
        } else {
            let mut p = LpProblem::new(a.dimension);
            p.strict = a.chamber_inequalities(prefix);
            lp_strict_feasible(&p)?
        };
        if let Some(x) = child {
            brute_force_extend(a, prefix, &x, out)?;
        }
        prefix.pop();
    }
    Ok(())
}

impl ChamberSet {
    pub fn arrangement(&self) -> &Arrangement {
        &self.arrangement
    }

    pub fn chambers(&self) -> &[Chamber] {
        &self.chambers
    }

    pub fn len(&self) -> usize {
        self.chambers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chambers.is_empty()
    }

    pub fn get(&self, i: usize) -> &Chamber {
        &self.chambers[i]
    }

    pub fn index_of(&self, signs: &[Sign]) -> Option<usize> {
        self.chambers
            .binary_search_by(|c| c.signs.as_slice().cmp(signs))
            .ok()
    }

    pub fn index_of_label(&self, label: &str) -> Option<usize> {
        self.chambers.iter().position(|c| c.label() == label)
    }

    /// Index of the chamber containing `p`.
    pub fn locate_chamber(&self, p: &[crate::exactmath::Rat]) -> Result<usize, ArrangementError> {
        let signs = self.arrangement.sign_vector(p)?;
        self.index_of(&signs).ok_or(ArrangementError::UnknownChamber)
    }

    /// Builds a set from chambers already known to be realized, e.g. products
    /// of chambers of factor arrangements. Chambers are re-sorted.
    pub(crate) fn from_known(arrangement: Arrangement, mut chambers: Vec<Chamber>) -> Self {
        chambers.sort_by(|a, b| a.signs.cmp(&b.signs));
        ChamberSet {
            arrangement,
            chambers,
        }
    }

    /// The permutation `C -> chamber of M * interior_point(C)`, after checking
    /// that `M` is invertible, maps the ambient cone onto itself and permutes
    /// the hyperplanes.
    pub fn induced_chamber_permutation(&self, m: &RatMatrix) -> Result<Vec<usize>, ArrangementError> {
        let a = &self.arrangement;
        let d = a.dimension;
        let bad = |msg: String| ArrangementError::NotArrangementSymmetry(msg);
        if m.rows() != d || m.cols() != d {
            return Err(bad(format!(
                "{}x{} matrix on a {}-dimensional arrangement",
                m.rows(),
                m.cols(),
                d
            )));
        }
        let inv = m.inverse().ok_or_else(|| bad("matrix is singular".into()))?;
        let inv_t = inv.transpose();
        let normals: BTreeSet<&IntVector> = a.hyperplanes.iter().map(|h| &h.normal).collect();
        for h in &a.hyperplanes {
            let image = inv_t.mul_vec(&h.rat_normal())?;
            let line = primitive_line(&image).expect("invertible image of a nonzero vector");
            if !normals.contains(&line) {
                return Err(bad(format!(
                    "image of hyperplane {:?} is not in the arrangement",
                    h.normal
                )));
            }
        }
        if !a.ambient.halfspaces.is_empty() {
            for (map, name) in [(m, "M"), (&inv, "M^-1")] {
                let mt = map.transpose();
                for c in &a.ambient.halfspaces {
                    // is there an interior x with <c, map x> < 0 ?
                    let pulled = mt.mul_vec(&to_rat_vec(c))?;
                    let mut p = a.ambient_program();
                    p.strict.push(pulled.into_iter().map(|x| -x).collect());
                    if lp_strict_feasible(&p)?.is_some() {
                        return Err(bad(format!("{name} moves the ambient cone off itself")));
                    }
                }
            }
        }
        let mut perm = Vec::with_capacity(self.chambers.len());
        let mut hit = vec![false; self.chambers.len()];
        for c in &self.chambers {
            let image = m.mul_vec(&c.witness)?;
            let j = self.locate_chamber(&image)?;
            if hit[j] {
                return Err(bad("induced map on chambers is not injective".into()));
            }
            hit[j] = true;
            perm.push(j);
        }
        Ok(perm)
    }
}

impl fmt::Display for Arrangement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "arrangement in dim {} with {} hyperplanes",
            self.dimension,
            self.hyperplanes.len()
        )
    }
}
