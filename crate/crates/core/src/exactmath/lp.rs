//! Strict linear feasibility by exact primal simplex.
//!
//! A point with `A_eq x = b` and `<a_i, x> > 0` exists iff the program
//! `max t  s.t.  A_eq x = b,  <a_i, x> >= t,  0 <= t <= 1` has optimum `t > 0`.
//! Free variables are split into nonnegative parts and the program is solved
//! by the two-phase method. Bland's rule is used in both phases, so the
//! method terminates on degenerate inputs.

use num_traits::{One, Signed, Zero};

use super::{ExactError, Rat, RatVector};

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub dimension: usize,
    /// `(a, b)` meaning `<a, x> = b`.
    pub equalities: Vec<(RatVector, Rat)>,
    /// `a` meaning `<a, x> > 0`.
    pub strict: Vec<RatVector>,
}

impl LpProblem {
    pub fn new(dimension: usize) -> Self {
        LpProblem {
            dimension,
            equalities: Vec::new(),
            strict: Vec::new(),
        }
    }

    fn check(&self) -> Result<(), ExactError> {
        let bad = self
            .equalities
            .iter()
            .map(|(a, _)| a)
            .chain(&self.strict)
            .find(|a| a.len() != self.dimension);
        match bad {
            Some(a) => Err(ExactError::Shape(format!(
                "constraint of length {} in a {}-dimensional program",
                a.len(),
                self.dimension
            ))),
            None => Ok(()),
        }
    }

    /// True when `x` satisfies every equality and strict inequality exactly.
    pub fn is_satisfied_by(&self, x: &[Rat]) -> bool {
        x.len() == self.dimension
            && self
                .equalities
                .iter()
                .all(|(a, b)| &super::dot(a, x) == b)
            && self.strict.iter().all(|a| super::dot(a, x).is_positive())
    }
}

/// Returns an exact point satisfying all constraints of `p`, or `None` when
/// none exists.
pub fn lp_strict_feasible(p: &LpProblem) -> Result<Option<RatVector>, ExactError> {
    p.check()?;
    let d = p.dimension;
    let k = p.strict.len();
    // columns: x+ (d) | x- (d) | t | s_i (k) | s_t
    let n = 2 * d + 2 + k;
    let t = 2 * d;
    let s_t = n - 1;

    let mut rows: Vec<Vec<Rat>> = Vec::new();
    let mut rhs: Vec<Rat> = Vec::new();
    let mut basic: Vec<Option<usize>> = Vec::new();
    for (a, b) in &p.equalities {
        let mut row = vec![Rat::zero(); n];
        for (j, x) in a.iter().enumerate() {
            row[j] = x.clone();
            row[d + j] = -x.clone();
        }
        rows.push(row);
        rhs.push(b.clone());
        basic.push(None);
    }
    // t - <a_i, x> + s_i = 0, so each slack starts basic at zero
    for (i, a) in p.strict.iter().enumerate() {
        let mut row = vec![Rat::zero(); n];
        for (j, x) in a.iter().enumerate() {
            row[j] = -x.clone();
            row[d + j] = x.clone();
        }
        row[t] = Rat::one();
        row[2 * d + 1 + i] = Rat::one();
        rows.push(row);
        rhs.push(Rat::zero());
        basic.push(Some(2 * d + 1 + i));
    }
    let mut bound = vec![Rat::zero(); n];
    bound[t] = Rat::one();
    bound[s_t] = Rat::one();
    rows.push(bound);
    rhs.push(Rat::one());
    basic.push(Some(s_t));

    let mut cost = vec![Rat::zero(); n];
    cost[t] = -Rat::one();

    let Some(z) = Simplex::minimize(rows, rhs, &cost, &basic) else {
        return Ok(None);
    };
    if !z[t].is_positive() {
        return Ok(None);
    }
    let x: RatVector = (0..d).map(|j| &z[j] - &z[d + j]).collect();
    debug_assert!(p.is_satisfied_by(&x));
    Ok(Some(x))
}

/// True when `target` is a nonnegative combination of `generators`.
pub fn in_cone(target: &[Rat], generators: &[RatVector]) -> Result<bool, ExactError> {
    if let Some(g) = generators.iter().find(|g| g.len() != target.len()) {
        return Err(ExactError::Shape(format!(
            "generator of length {} for a target of length {}",
            g.len(),
            target.len()
        )));
    }
    if target.iter().all(Zero::is_zero) {
        return Ok(true);
    }
    if generators.is_empty() {
        return Ok(false);
    }
    let rows = (0..target.len())
        .map(|i| generators.iter().map(|g| g[i].clone()).collect())
        .collect();
    let cost = vec![Rat::zero(); generators.len()];
    Ok(Simplex::minimize(rows, target.to_vec(), &cost, &vec![None; target.len()]).is_some())
}

/// Drops rows implied by the others, keeping a subset that cuts out the same
/// open cone `{x : <a, x> > 0 for all rows a}`. The cone must be nonempty.
pub fn irredundant_rows(rows: &[RatVector]) -> Result<Vec<RatVector>, ExactError> {
    let mut kept: Vec<RatVector> = rows.to_vec();
    let mut i = 0;
    while i < kept.len() {
        let others: Vec<RatVector> = kept
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, r)| r.clone())
            .collect();
        if in_cone(&kept[i], &others)? {
            kept.remove(i);
        } else {
            i += 1;
        }
    }
    Ok(kept)
}

/// Dense tableau for `min c.z  s.t.  A z = b, z >= 0`.
struct Simplex {
    /// `m` rows of `n + 1` entries, last entry is the right-hand side.
    tab: Vec<Vec<Rat>>,
    /// reduced-cost row, last entry is minus the objective value
    obj: Vec<Rat>,
    basis: Vec<usize>,
    n: usize,
}

enum Step {
    Optimal,
    Unbounded,
    Pivoted,
}

impl Simplex {
    /// Returns an optimal vertex, or `None` when infeasible. The programs
    /// built in this module are bounded, so unboundedness is reported as a
    /// panic rather than folded into the result.
    ///
    /// `basic[i] = Some(j)` promises that column `j` is the `i`-th unit
    /// vector and `b[i] >= 0`; such rows start with `j` basic instead of an
    /// artificial variable.
    fn minimize(a: Vec<Vec<Rat>>, mut b: Vec<Rat>, cost: &[Rat], basic: &[Option<usize>]) -> Option<Vec<Rat>> {
        let m = a.len();
        let n = cost.len();
        let artificial: Vec<usize> = (0..m).filter(|&i| basic[i].is_none()).collect();
        let width = n + artificial.len();
        // phase one: artificial column per row without a starting basic column
        let mut tab = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        for (i, mut row) in a.into_iter().enumerate() {
            match basic[i] {
                Some(j) => {
                    debug_assert!(!b[i].is_negative() && row[j].is_one());
                    row.extend((0..artificial.len()).map(|_| Rat::zero()));
                    basis.push(j);
                }
                None => {
                    if b[i].is_negative() {
                        for x in row.iter_mut() {
                            *x = -x.clone();
                        }
                        b[i] = -b[i].clone();
                    }
                    let slot = artificial.iter().position(|&r| r == i).expect("artificial row");
                    row.extend((0..artificial.len()).map(|j| if j == slot { Rat::one() } else { Rat::zero() }));
                    basis.push(n + slot);
                }
            }
            row.push(b[i].clone());
            tab.push(row);
        }
        let mut obj = vec![Rat::zero(); width + 1];
        for &i in &artificial {
            for (j, x) in tab[i].iter().enumerate() {
                if j < n || j == width {
                    obj[j] -= x;
                }
            }
        }
        let mut s = Simplex {
            tab,
            obj,
            basis,
            n: width,
        };
        loop {
            match s.step() {
                Step::Optimal => break,
                Step::Pivoted => {}
                Step::Unbounded => unreachable!("phase one is bounded below by zero"),
            }
        }
        if !s.obj[width].is_zero() {
            return None;
        }

        // drive artificial variables out of the basis, dropping redundant rows
        let mut r = 0;
        while r < s.tab.len() {
            if s.basis[r] >= n {
                match (0..n).find(|&j| !s.tab[r][j].is_zero()) {
                    Some(j) => s.pivot(r, j),
                    None => {
                        s.tab.remove(r);
                        s.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
        for row in s.tab.iter_mut() {
            let rhs = row.pop().expect("nonempty row");
            row.truncate(n);
            row.push(rhs);
        }
        s.n = n;

        // phase two
        let mut obj: Vec<Rat> = cost.to_vec();
        obj.push(Rat::zero());
        for (r, &bv) in s.basis.iter().enumerate() {
            let c = obj[bv].clone();
            if c.is_zero() {
                continue;
            }
            for (j, x) in s.tab[r].iter().enumerate() {
                obj[j] -= &c * x;
            }
        }
        s.obj = obj;
        loop {
            match s.step() {
                Step::Optimal => break,
                Step::Pivoted => {}
                Step::Unbounded => panic!("strict-feasibility program is bounded by t <= 1"),
            }
        }
        let mut z = vec![Rat::zero(); n];
        for (r, &bv) in s.basis.iter().enumerate() {
            z[bv] = s.tab[r][n].clone();
        }
        Some(z)
    }

    /// One Bland's-rule pivot: lowest-index improving column, lowest-index
    /// basic variable among tied ratios.
    fn step(&mut self) -> Step {
        let Some(enter) = (0..self.n).find(|&j| self.obj[j].is_negative()) else {
            return Step::Optimal;
        };
        let mut leave: Option<(usize, Rat)> = None;
        for r in 0..self.tab.len() {
            let a = &self.tab[r][enter];
            if !a.is_positive() {
                continue;
            }
            let ratio = &self.tab[r][self.n] / a;
            let better = match &leave {
                None => true,
                Some((lr, best)) => {
                    ratio < *best || (ratio == *best && self.basis[r] < self.basis[*lr])
                }
            };
            if better {
                leave = Some((r, ratio));
            }
        }
        match leave {
            Some((r, _)) => {
                self.pivot(r, enter);
                Step::Pivoted
            }
            None => Step::Unbounded,
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let width = self.tab[r].len();
        let inv = self.tab[r][c].recip();
        for j in 0..width {
            if !self.tab[r][j].is_zero() {
                self.tab[r][j] = &self.tab[r][j] * &inv;
            }
        }
        let pivot_row = self.tab[r].clone();
        for (i, row) in self.tab.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (j, p) in pivot_row.iter().enumerate() {
                if !p.is_zero() {
                    row[j] -= &f * p;
                }
            }
        }
        if !self.obj[c].is_zero() {
            let f = self.obj[c].clone();
            for (j, p) in pivot_row.iter().enumerate() {
                if !p.is_zero() {
                    self.obj[j] -= &f * p;
                }
            }
        }
        self.basis[r] = c;
    }
}
