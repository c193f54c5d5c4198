//! Finite subgroups of GL(k, Z) acting on the torus (C^*)^k through their
//! weight matrices. Points are handled additively in (Q/Z)^k.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::exactmath::{frac_part, smith_normal_form, IntMatrix, IntVector, Rat, RatVector};

pub const DEFAULT_GROUP_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TorusError {
    #[error("group closure exceeded {0} elements or met an element of infinite order")]
    GroupNotFinite(usize),
    #[error("generator {0} is not invertible over the integers")]
    NotInvertible(usize),
    #[error("expected a {expected}x{expected} matrix, found {rows}x{cols}")]
    Shape { expected: usize, rows: usize, cols: usize },
    #[error("symplectic check needs even rank, found {0}")]
    OddRank(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixGroup {
    rank: usize,
    generators: Vec<IntMatrix>,
    /// Closure in breadth-first order, identity first.
    elements: Vec<IntMatrix>,
    index: HashMap<IntMatrix, usize>,
}

impl MatrixGroup {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn generators(&self) -> &[IntMatrix] {
        &self.generators
    }

    pub fn elements(&self) -> &[IntMatrix] {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, g: &IntMatrix) -> bool {
        self.index.contains_key(g)
    }

    pub fn is_trivial(&self) -> bool {
        self.elements.len() == 1
    }

    /// True when some single element generates the group.
    pub fn is_cyclic(&self) -> bool {
        self.elements.iter().any(|g| element_order(g) == self.order())
    }

    /// Orders, ranks of g - I and traces of all elements, as a comparable key.
    pub fn fingerprint(&self) -> Fingerprint {
        let mut traces = BTreeMap::new();
        for g in &self.elements {
            *traces.entry(g.trace().to_i64().expect("small trace")).or_insert(0usize) += 1;
        }
        Fingerprint {
            order: self.order(),
            rank: self.rank,
            traces,
        }
    }

    fn from_elements(rank: usize, generators: Vec<IntMatrix>, elements: Vec<IntMatrix>) -> Self {
        let index = elements.iter().cloned().enumerate().map(|(i, g)| (g, i)).collect();
        MatrixGroup {
            rank,
            generators,
            elements,
            index,
        }
    }

    /// Subgroup generated by `gens`, all of which must lie in this group.
    pub fn subgroup(&self, gens: Vec<IntMatrix>) -> MatrixGroup {
        close_group(self.rank, &gens, self.order()).expect("subgroup of a finite group")
    }
}

pub fn element_order(g: &IntMatrix) -> usize {
    let id = IntMatrix::identity(g.rows());
    let mut p = g.clone();
    let mut n = 1;
    while p != id {
        p = &p * g;
        n += 1;
    }
    n
}

/// Breadth-first closure under right multiplication by the generators.
/// Elements of finite order in GL(k, Z) have |trace| <= k, which detects
/// most infinite groups long before the cap.
pub fn close_group(k: usize, generators: &[IntMatrix], cap: usize) -> Result<MatrixGroup, TorusError> {
    for (i, g) in generators.iter().enumerate() {
        if g.rows() != k || g.cols() != k {
            return Err(TorusError::Shape {
                expected: k,
                rows: g.rows(),
                cols: g.cols(),
            });
        }
        if !g.det().abs().is_one() {
            return Err(TorusError::NotInvertible(i));
        }
    }
    let bound = BigInt::from(k);
    let id = IntMatrix::identity(k);
    let mut seen: HashMap<IntMatrix, usize> = HashMap::new();
    let mut elements = vec![id.clone()];
    seen.insert(id.clone(), 0);
    let mut queue = VecDeque::from([id]);
    while let Some(x) = queue.pop_front() {
        for g in generators {
            let y = &x * g;
            if seen.contains_key(&y) {
                continue;
            }
            if y.trace().abs() > bound || elements.len() >= cap {
                return Err(TorusError::GroupNotFinite(cap));
            }
            seen.insert(y.clone(), elements.len());
            elements.push(y.clone());
            queue.push_back(y);
        }
    }
    Ok(MatrixGroup {
        rank: k,
        generators: generators.to_vec(),
        elements,
        index: seen,
    })
}

fn standard_j(k: usize) -> IntMatrix {
    let h = k / 2;
    let mut j = IntMatrix::zeros(k, k);
    for i in 0..h {
        j.set(i, h + i, BigInt::one());
        j.set(h + i, i, -BigInt::one());
    }
    j
}

/// Whether `g` preserves the standard symplectic form; in rank 2 this is
/// det g = 1.
pub fn is_symplectic(g: &IntMatrix) -> Result<bool, TorusError> {
    let k = g.rows();
    if g.cols() != k {
        return Err(TorusError::Shape {
            expected: k,
            rows: g.rows(),
            cols: g.cols(),
        });
    }
    if k % 2 == 1 {
        return Err(TorusError::OddRank(k));
    }
    let j = standard_j(k);
    Ok(&(&g.transpose() * &j) * g == j)
}

/// Whether `g^T omega g = omega`.
pub fn preserves_form(g: &IntMatrix, omega: &IntMatrix) -> bool {
    &(&g.transpose() * omega) * g == *omega
}

/// A point of (Q/Z)^k, coordinates reduced into [0, 1).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TorsionPoint {
    coords: RatVector,
}

impl TorsionPoint {
    pub fn new(coords: RatVector) -> Self {
        TorsionPoint {
            coords: coords.iter().map(frac_part).collect(),
        }
    }

    pub fn origin(k: usize) -> Self {
        TorsionPoint {
            coords: vec![Rat::zero(); k],
        }
    }

    pub fn coords(&self) -> &[Rat] {
        &self.coords
    }

    /// The image `g x` of the point.
    pub fn act(&self, g: &IntMatrix) -> TorsionPoint {
        let image: RatVector = (0..g.rows())
            .map(|r| {
                g.row(r)
                    .iter()
                    .zip(&self.coords)
                    .fold(Rat::zero(), |acc, (a, x)| acc + Rat::from_integer(a.clone()) * x)
            })
            .collect();
        TorsionPoint::new(image)
    }

    /// Least common denominator, the order of the point in the torus.
    pub fn order(&self) -> BigInt {
        use num_integer::Integer;
        self.coords.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
    }
}

impl fmt::Display for TorsionPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords.iter().map(crate::exactmath::format_rat).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Solutions of (g - I) x = 0 in (Q/Z)^k: one torsion point per component
/// and integer directions spanning the identity component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedLocus {
    pub torsion_reps: Vec<TorsionPoint>,
    pub subtorus_basis: Vec<IntVector>,
}

impl FixedLocus {
    pub fn is_finite(&self) -> bool {
        self.subtorus_basis.is_empty()
    }
}

/// Fixed locus through the Smith form U (g - I) V = D: with x = V y the
/// conditions become d_i y_i in Z, so y_i runs over multiples of 1/d_i and
/// is free where d_i = 0.
pub fn fixed_locus(g: &IntMatrix) -> FixedLocus {
    let k = g.rows();
    let snf = smith_normal_form(&g.minus_identity());
    let diag = snf.diagonal();
    let rank = snf.rank();
    let subtorus_basis = (rank..k).map(|c| snf.v.column(c)).collect();
    let moduli: Vec<u64> = diag[..rank]
        .iter()
        .map(|d| d.to_u64().expect("fixed locus too large to enumerate"))
        .collect();
    let mut points = Vec::new();
    let mut digits = vec![0u64; rank];
    loop {
        let mut y = vec![Rat::zero(); k];
        for i in 0..rank {
            y[i] = Rat::new(BigInt::from(digits[i]), BigInt::from(moduli[i]));
        }
        let x: RatVector = (0..k)
            .map(|r| {
                snf.v
                    .row(r)
                    .iter()
                    .zip(&y)
                    .fold(Rat::zero(), |acc, (a, b)| acc + Rat::from_integer(a.clone()) * b)
            })
            .collect();
        points.push(TorsionPoint::new(x));
        let mut i = rank;
        loop {
            if i == 0 {
                points.sort();
                return FixedLocus {
                    torsion_reps: points,
                    subtorus_basis,
                };
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < moduli[i] {
                break;
            }
            digits[i] = 0;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ResolvabilityVerdict {
    Resolvable(String),
    Nonresolvable,
    Inconclusive,
}

impl fmt::Display for ResolvabilityVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResolvabilityVerdict::Resolvable(tag) => write!(f, "Resolvable({tag})"),
            ResolvabilityVerdict::Nonresolvable => f.write_str("Nonresolvable"),
            ResolvabilityVerdict::Inconclusive => f.write_str("Inconclusive"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitReport {
    pub orbit: Vec<TorsionPoint>,
    /// Stabilizer of `orbit[0]`.
    pub stabilizer: MatrixGroup,
    pub verdict: ResolvabilityVerdict,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SingularOrbits {
    pub orbits: Vec<OrbitReport>,
    /// Indices into the group's elements of non-identity elements fixing a
    /// positive-dimensional subtorus; when nonempty the orbit list covers
    /// only isolated points.
    pub positive_dimensional: Vec<usize>,
}

impl SingularOrbits {
    pub fn is_partial(&self) -> bool {
        !self.positive_dimensional.is_empty()
    }
}

pub fn stabilizer(g: &MatrixGroup, x: &TorsionPoint) -> MatrixGroup {
    let elements: Vec<IntMatrix> = g
        .elements()
        .iter()
        .filter(|h| x.act(h) == *x)
        .cloned()
        .collect();
    let gens = small_generating_set(g.rank(), &elements);
    MatrixGroup::from_elements(g.rank(), gens, elements)
}

pub fn orbit(g: &MatrixGroup, x: &TorsionPoint) -> Vec<TorsionPoint> {
    let set: BTreeSet<TorsionPoint> = g.elements().iter().map(|h| x.act(h)).collect();
    set.into_iter().collect()
}

/// Greedy generating set: scan the elements and keep each one not yet in
/// the span of those kept.
fn small_generating_set(k: usize, elements: &[IntMatrix]) -> Vec<IntMatrix> {
    let mut gens: Vec<IntMatrix> = Vec::new();
    let mut span: BTreeSet<Vec<BigInt>> = BTreeSet::from([IntMatrix::identity(k).entries().to_vec()]);
    for h in elements {
        if span.contains(h.entries()) {
            continue;
        }
        gens.push(h.clone());
        let closed = close_group(k, &gens, elements.len().max(1)).expect("subgroup of a finite group");
        span = closed.elements().iter().map(|e| e.entries().to_vec()).collect();
    }
    gens
}

/// Isolated torsion points with nontrivial stabilizer, grouped into orbits.
pub fn singular_orbits(g: &MatrixGroup) -> SingularOrbits {
    let mut points = BTreeSet::new();
    let mut positive_dimensional = Vec::new();
    for (i, h) in g.elements().iter().enumerate() {
        if h.is_identity() {
            continue;
        }
        let locus = fixed_locus(h);
        if locus.is_finite() {
            points.extend(locus.torsion_reps);
        } else {
            positive_dimensional.push(i);
        }
    }
    let mut orbits = Vec::new();
    let mut done = BTreeSet::new();
    for x in &points {
        if done.contains(x) {
            continue;
        }
        let orb = orbit(g, x);
        done.extend(orb.iter().cloned());
        let stab = stabilizer(g, &orb[0]);
        let verdict = resolvability_verdict(&stab);
        orbits.push(OrbitReport {
            orbit: orb,
            stabilizer: stab,
            verdict,
        });
    }
    SingularOrbits {
        orbits,
        positive_dimensional,
    }
}

pub fn is_symplectic_reflection(h: &IntMatrix) -> bool {
    h.minus_identity().to_rat().rank() == 2
}

/// Verdict for the singularity with stabilizer `stab`: reflections must
/// generate the group; rank-2 cyclic groups give A-type singularities; a few
/// larger groups are recognized by fingerprint; everything else is left open.
pub fn resolvability_verdict(stab: &MatrixGroup) -> ResolvabilityVerdict {
    if stab.is_trivial() {
        return ResolvabilityVerdict::Inconclusive;
    }
    let reflections: Vec<IntMatrix> = stab
        .elements()
        .iter()
        .filter(|h| is_symplectic_reflection(h))
        .cloned()
        .collect();
    if stab.subgroup(reflections).order() < stab.order() {
        return ResolvabilityVerdict::Nonresolvable;
    }
    let m = stab.order();
    if stab.rank() == 2 && stab.is_cyclic() && [2, 3, 4, 6].contains(&m) {
        return ResolvabilityVerdict::Resolvable(format!("A{}", m - 1));
    }
    let fp = stab.fingerprint();
    match fingerprint_table().iter().find(|(_, f)| *f == fp) {
        Some((tag, _)) => ResolvabilityVerdict::Resolvable(tag.clone()),
        None => ResolvabilityVerdict::Inconclusive,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Fingerprint {
    pub order: usize,
    pub rank: usize,
    /// trace -> number of elements
    pub traces: BTreeMap<i64, usize>,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Fingerprint of S_m acting on (Z^2)^m by permuting factors, extended by
/// C_l acting on each factor through gamma_l. The trace of an element only
/// sees the factors fixed by its permutation.
fn wreath_fingerprint(m: usize, l: u32) -> Fingerprint {
    let g = gamma(l).expect("l is 2, 3, 4 or 6");
    let mut power_traces = Vec::new();
    let mut p = IntMatrix::identity(2);
    for _ in 0..l {
        power_traces.push(p.trace().to_i64().expect("small"));
        p = &p * &g;
    }
    let mut traces = BTreeMap::new();
    for perm in permutations(m) {
        let fixed = (0..m).filter(|&i| perm[i] == i).count();
        let moved = m - fixed;
        // each fixed factor contributes one of the power traces; moved
        // factors contribute 0 but still carry l choices each
        let weight = (l as usize).pow(moved as u32);
        let mut sums: BTreeMap<i64, usize> = BTreeMap::from([(0, 1)]);
        for _ in 0..fixed {
            let mut next = BTreeMap::new();
            for (s, c) in &sums {
                for t in &power_traces {
                    *next.entry(s + t).or_insert(0) += c;
                }
            }
            sums = next;
        }
        for (s, c) in sums {
            *traces.entry(s).or_insert(0) += c * weight;
        }
    }
    Fingerprint {
        order: (1..=m).product::<usize>() * (l as usize).pow(m as u32),
        rank: 2 * m,
        traces,
    }
}

/// Fingerprint of S_{m+1} acting diagonally on two copies of the A_m root
/// lattice, where a permutation with f fixed letters has trace 2(f - 1).
fn diagonal_fingerprint(m: usize) -> Fingerprint {
    let mut traces = BTreeMap::new();
    for perm in permutations(m + 1) {
        let f = (0..=m).filter(|&i| perm[i] == i).count() as i64;
        *traces.entry(2 * (f - 1)).or_insert(0) += 1;
    }
    Fingerprint {
        order: (1..=m + 1).product(),
        rank: 2 * m,
        traces,
    }
}

/// Built-in resolvable groups recognized by fingerprint.
pub fn fingerprint_table() -> &'static [(String, Fingerprint)] {
    static TABLE: std::sync::OnceLock<Vec<(String, Fingerprint)>> = std::sync::OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::new();
        for m in 2..=4 {
            for l in [2, 3, 4, 6] {
                t.push((format!("S{m} wreath C{l}"), wreath_fingerprint(m, l)));
            }
        }
        for m in 2..=3 {
            t.push((format!("diagonal S{}", m + 1), diagonal_fingerprint(m)));
        }
        assert!(fingerprint_audit(&t), "fingerprint table entries collide");
        t
    })
}

/// True when no two table entries share a fingerprint.
pub fn fingerprint_audit(table: &[(String, Fingerprint)]) -> bool {
    let distinct: BTreeSet<&Fingerprint> = table.iter().map(|(_, f)| f).collect();
    distinct.len() == table.len()
}

/// The rank-2 generators gamma_m of cyclic symplectic groups, m in {1,2,3,4,6}.
pub fn gamma(m: u32) -> Option<IntMatrix> {
    let rows: &[&[i64]] = match m {
        1 => &[&[1, 0], &[0, 1]],
        2 => &[&[-1, 0], &[0, -1]],
        3 => &[&[-1, 1], &[-1, 0]],
        4 => &[&[0, 1], &[-1, 0]],
        6 => &[&[0, 1], &[-1, 1]],
        _ => return None,
    };
    Some(IntMatrix::from_i64(rows))
}

pub fn cyclic_group(m: u32) -> Option<MatrixGroup> {
    let g = gamma(m)?;
    Some(close_group(2, &[g], DEFAULT_GROUP_CAP).expect("finite"))
}

/// S_3 acting diagonally on two copies of the A_2 root lattice, in the
/// coordinates x_i = t_i / t_0 of the maximal torus of PGL_3.
pub fn pgl3_group() -> MatrixGroup {
    // a permutation of {0,1,2} sends x_j to x_{s(j)} / x_{s(0)}, where s is
    // the inverse permutation and x_0 = 1
    let block = |s: [usize; 3]| -> IntMatrix {
        let mut m = IntMatrix::zeros(2, 2);
        for j in 1..=2 {
            let mut row = [0i64; 3];
            row[s[j]] += 1;
            row[s[0]] -= 1;
            m.set(j - 1, 0, BigInt::from(row[1]));
            m.set(j - 1, 1, BigInt::from(row[2]));
        }
        m
    };
    let cycle = block([2, 0, 1]);
    let swap = block([1, 0, 2]);
    let gens = vec![cycle.direct_sum(&cycle), swap.direct_sum(&swap)];
    close_group(4, &gens, DEFAULT_GROUP_CAP).expect("finite")
}

/// Quaternion with rational coordinates (1, i, j, k).
type Quaternion = [Rat; 4];

fn qmul(a: &Quaternion, b: &Quaternion) -> Quaternion {
    let [a0, a1, a2, a3] = a;
    let [b0, b1, b2, b3] = b;
    [
        a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
        a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
        a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
        a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
    ]
}

/// Hurwitz basis (w, i, j, k) with w = (1 + i + j + k) / 2.
fn from_hurwitz(c: &[Rat]) -> Quaternion {
    let half = &c[0] / Rat::from_integer(2.into());
    [half.clone(), &half + &c[1], &half + &c[2], &half + &c[3]]
}

fn to_hurwitz(q: &Quaternion) -> Vec<Rat> {
    let two = Rat::from_integer(2.into());
    vec![&q[0] * two, &q[1] - &q[0], &q[2] - &q[0], &q[3] - &q[0]]
}

/// Matrix of left multiplication by `q` on the Hurwitz lattice.
pub fn hurwitz_left_multiplication(q: &Quaternion) -> IntMatrix {
    let mut m = IntMatrix::zeros(4, 4);
    for c in 0..4 {
        let mut e = vec![Rat::zero(); 4];
        e[c] = Rat::one();
        let image = to_hurwitz(&qmul(q, &from_hurwitz(&e)));
        for (r, x) in image.iter().enumerate() {
            assert!(x.is_integer(), "Hurwitz lattice not preserved");
            m.set(r, c, x.to_integer());
        }
    }
    m
}

/// The binary tetrahedral group generated by i, j and (1 + i + j + k)/2,
/// acting by left multiplication on the Hurwitz quaternions.
pub fn binary_tetrahedral_model() -> MatrixGroup {
    let r = |n: i64, d: i64| Rat::new(n.into(), d.into());
    let i = [r(0, 1), r(1, 1), r(0, 1), r(0, 1)];
    let j = [r(0, 1), r(0, 1), r(1, 1), r(0, 1)];
    let w = [r(1, 2), r(1, 2), r(1, 2), r(1, 2)];
    let gens = vec![
        hurwitz_left_multiplication(&i),
        hurwitz_left_multiplication(&j),
        hurwitz_left_multiplication(&w),
    ];
    close_group(4, &gens, DEFAULT_GROUP_CAP).expect("finite")
}
