//! Combinatorial models of stratified spaces.
//!
//! A model is a finite set of strata, each carrying a stalk (an explicit
//! labeled set, or the chambers of an arrangement in its rational Picard
//! space) and monodromy generators, together with generalization arrows from
//! deeper to shallower strata. The declared arrows are taken to generate all
//! exit-path constraints; parallel arrows between the same pair of strata
//! (distinguished by `tag`) model closures that are not unibranch.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::Zero;
use thiserror::Error;

use crate::arrangement::{Arrangement, ArrangementError, Chamber, ChamberSet};
use crate::exactmath::{lp_strict_feasible, LpProblem, RatMatrix, RatVector};

pub type StratumId = String;

/// Label of the singleton stalk on open strata.
pub const IDENTITY_RESOLUTION: &str = "identity-resolution";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stalk {
    Explicit(Vec<String>),
    Chambers(ChamberSet),
}

impl Stalk {
    pub fn singleton() -> Stalk {
        Stalk::Explicit(vec![IDENTITY_RESOLUTION.to_string()])
    }

    pub fn explicit<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Stalk {
        Stalk::Explicit(labels.into_iter().map(Into::into).collect())
    }

    /// Chamber stalk of an arrangement, enumerating its chambers.
    pub fn chambers(arrangement: &Arrangement) -> Result<Stalk, ArrangementError> {
        Ok(Stalk::Chambers(crate::arrangement::enumerate_chambers(arrangement)?))
    }

    pub fn len(&self) -> usize {
        match self {
            Stalk::Explicit(labels) => labels.len(),
            Stalk::Chambers(cs) => cs.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn label(&self, i: usize) -> String {
        match self {
            Stalk::Explicit(labels) => labels[i].clone(),
            Stalk::Chambers(cs) => cs.get(i).label(),
        }
    }

    pub fn index_of_label(&self, label: &str) -> Option<usize> {
        match self {
            Stalk::Explicit(labels) => labels.iter().position(|l| l == label),
            Stalk::Chambers(cs) => cs.index_of_label(label),
        }
    }

    /// Dimension of the rational Picard space; explicit stalks have none.
    pub fn picard_dim(&self) -> usize {
        match self {
            Stalk::Explicit(_) => 0,
            Stalk::Chambers(cs) => cs.arrangement().dimension(),
        }
    }

    /// True for chamber stalks and for explicit singletons, which behave as
    /// the unique chamber of a zero-dimensional Picard space.
    pub fn has_picard_layer(&self) -> bool {
        match self {
            Stalk::Explicit(labels) => labels.len() == 1,
            Stalk::Chambers(_) => true,
        }
    }

    /// Interior point of element `i` in the Picard space, when the stalk has
    /// a Picard layer.
    pub fn interior_point(&self, i: usize) -> Option<RatVector> {
        match self {
            Stalk::Explicit(labels) if labels.len() == 1 => Some(Vec::new()),
            Stalk::Explicit(_) => None,
            Stalk::Chambers(cs) => Some(cs.get(i).interior_point().clone()),
        }
    }

    /// Strict inequalities describing element `i` inside its Picard space.
    pub fn chamber_inequalities(&self, i: usize) -> Option<Vec<RatVector>> {
        match self {
            Stalk::Explicit(labels) if labels.len() == 1 => Some(Vec::new()),
            Stalk::Explicit(_) => None,
            Stalk::Chambers(cs) => Some(cs.arrangement().chamber_inequalities(cs.get(i).signs())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MonodromyGenerator {
    /// Action on the Picard space.
    pub matrix: Option<RatMatrix>,
    /// Action on the stalk, `permutation[i]` being the image of element `i`.
    pub permutation: Option<Vec<usize>>,
}

impl MonodromyGenerator {
    pub fn matrix(m: RatMatrix) -> Self {
        MonodromyGenerator {
            matrix: Some(m),
            permutation: None,
        }
    }

    pub fn permutation(p: Vec<usize>) -> Self {
        MonodromyGenerator {
            matrix: None,
            permutation: Some(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stratum {
    pub id: StratumId,
    pub dim: u32,
    pub stalk: Stalk,
    pub monodromy: Vec<MonodromyGenerator>,
    pub basepoint_note: String,
}

impl Stratum {
    pub fn new(id: impl Into<String>, dim: u32, stalk: Stalk) -> Self {
        Stratum {
            id: id.into(),
            dim,
            stalk,
            monodromy: Vec::new(),
            basepoint_note: String::new(),
        }
    }

    pub fn with_monodromy(mut self, g: MonodromyGenerator) -> Self {
        self.monodromy.push(g);
        self
    }

    /// Permutation of the stalk induced by monodromy generator `g`. On
    /// chamber stalks a matrix is authoritative and the declared permutation
    /// is only a cross-check.
    pub fn generator_permutation(&self, g: usize) -> Result<Vec<usize>, ModelError> {
        let gen = &self.monodromy[g];
        match (&self.stalk, &gen.matrix, &gen.permutation) {
            (Stalk::Chambers(cs), Some(m), _) => Ok(cs.induced_chamber_permutation(m)?),
            (_, _, Some(p)) => Ok(p.clone()),
            _ => Err(ModelError::MissingPermutation {
                stratum: self.id.clone(),
                generator: g,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Generalization {
    /// `table[i]` is the image of source element `i`.
    Explicit(Vec<usize>),
    /// Restriction map from the source Picard space to the target one;
    /// chambers are carried by their interior points.
    Linear(RatMatrix),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HasseArrow {
    pub source: StratumId,
    pub target: StratumId,
    pub tag: u32,
    pub gen: Generalization,
}

impl HasseArrow {
    pub fn explicit(source: &str, target: &str, table: Vec<usize>) -> Self {
        HasseArrow {
            source: source.to_string(),
            target: target.to_string(),
            tag: 0,
            gen: Generalization::Explicit(table),
        }
    }

    pub fn linear(source: &str, target: &str, map: RatMatrix) -> Self {
        HasseArrow {
            source: source.to_string(),
            target: target.to_string(),
            tag: 0,
            gen: Generalization::Linear(map),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Flags {
    pub q_factorial_symplectic: bool,
    pub h2_units_trivial: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StratifiedModel {
    pub strata: Vec<Stratum>,
    pub arrows: Vec<HasseArrow>,
    pub flags: Flags,
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown stratum {0:?}")]
    UnknownStratum(String),
    #[error("arrow index {0} out of range")]
    UnknownArrow(usize),
    #[error("element {element} is not in the stalk of {stratum:?}")]
    ElementOutOfRange { stratum: String, element: usize },
    #[error("monodromy generator {generator} of {stratum:?} has neither a usable matrix nor a permutation")]
    MissingPermutation { stratum: String, generator: usize },
    #[error("restriction along {arrow} is not generic: {detail}")]
    NonGenericRestriction { arrow: String, detail: String },
    #[error("linear generalization along {0} needs Picard layers on both ends")]
    LinearMapUnsupported(String),
    #[error("model is invalid:\n{0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Arrangement(#[from] ArrangementError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    EmptyId,
    DuplicateStratum,
    UnknownStratum,
    DuplicateArrow,
    DimOrder,
    Cycle,
    PermutationMissing,
    PermutationNotBijection,
    PermMatrixMismatch,
    MonodromyNotSymmetry,
    MatrixOnExplicitStalk,
    ExplicitMapNotTotal,
    LinearMapShape,
    LinearMapUnsupported,
    NonGenericRestriction,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Stratum or arrow the violation is attached to.
    pub location: String,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.kind, self.location, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    fn push(&mut self, kind: ViolationKind, location: impl Into<String>, detail: impl Into<String>) {
        self.violations.push(Violation {
            kind,
            location: location.into(),
            detail: detail.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

pub(crate) fn is_permutation(p: &[usize], n: usize) -> bool {
    if p.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &x in p {
        if x >= n || seen[x] {
            return false;
        }
        seen[x] = true;
    }
    true
}

impl StratifiedModel {
    pub fn stratum_index(&self, id: &str) -> Option<usize> {
        self.strata.iter().position(|s| s.id == id)
    }

    pub fn stratum(&self, id: &str) -> Result<&Stratum, ModelError> {
        self.strata
            .iter()
            .find(|s| s.id == id)
            .ok_or_else(|| ModelError::UnknownStratum(id.to_string()))
    }

    pub fn arrow_name(&self, i: usize) -> String {
        match self.arrows.get(i) {
            Some(a) => format!("arrow #{i} ({} -> {}, tag {})", a.source, a.target, a.tag),
            None => format!("arrow #{i}"),
        }
    }

    /// Strata with no incoming arrows.
    pub fn minimal_strata(&self) -> Vec<usize> {
        let targets: BTreeSet<&str> = self.arrows.iter().map(|a| a.target.as_str()).collect();
        (0..self.strata.len())
            .filter(|&i| !targets.contains(self.strata[i].id.as_str()))
            .collect()
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }

    pub fn validated(self) -> Result<Self, ModelError> {
        let report = validate(&self);
        if report.is_valid() {
            Ok(self)
        } else {
            Err(ModelError::Invalid(report))
        }
    }
}

/// Checks every structural invariant of the model and reports each failure
/// with the stratum or arrow it belongs to.
pub fn validate(m: &StratifiedModel) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut ids: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, s) in m.strata.iter().enumerate() {
        if s.id.is_empty() {
            report.push(ViolationKind::EmptyId, format!("stratum #{i}"), "empty identifier");
        }
        if ids.insert(s.id.as_str(), i).is_some() {
            report.push(ViolationKind::DuplicateStratum, &s.id, "identifier used twice");
        }
        validate_monodromy(s, &mut report);
    }

    let mut arrow_keys = BTreeSet::new();
    let mut edges = Vec::new();
    for (k, a) in m.arrows.iter().enumerate() {
        let name = m.arrow_name(k);
        let (Some(&si), Some(&ti)) = (ids.get(a.source.as_str()), ids.get(a.target.as_str())) else {
            report.push(ViolationKind::UnknownStratum, &name, "endpoint is not a stratum of the model");
            continue;
        };
        if !arrow_keys.insert((si, ti, a.tag)) {
            report.push(ViolationKind::DuplicateArrow, &name, "same endpoints and tag declared twice");
        }
        let (src, tgt) = (&m.strata[si], &m.strata[ti]);
        if src.dim >= tgt.dim {
            report.push(
                ViolationKind::DimOrder,
                &name,
                format!("source dimension {} is not below target dimension {}", src.dim, tgt.dim),
            );
        }
        edges.push((si, ti));
        validate_generalization(m, k, &mut report);
    }

    // Kahn's algorithm; leftovers lie on or behind a cycle
    let n = m.strata.len();
    let mut indeg = vec![0usize; n];
    for &(_, t) in &edges {
        indeg[t] += 1;
    }
    let mut stack: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut done = 0;
    while let Some(i) = stack.pop() {
        done += 1;
        for &(s, t) in &edges {
            if s == i {
                indeg[t] -= 1;
                if indeg[t] == 0 {
                    stack.push(t);
                }
            }
        }
    }
    if done < n {
        let stuck: Vec<&str> = (0..n)
            .filter(|&i| indeg[i] > 0)
            .map(|i| m.strata[i].id.as_str())
            .collect();
        report.push(ViolationKind::Cycle, stuck.join(", "), "arrows do not generate a partial order");
    }
    report
}

fn validate_monodromy(s: &Stratum, report: &mut ValidationReport) {
    let n = s.stalk.len();
    for (g, gen) in s.monodromy.iter().enumerate() {
        let loc = format!("{} monodromy #{g}", s.id);
        if let Some(p) = &gen.permutation {
            if !is_permutation(p, n) {
                report.push(
                    ViolationKind::PermutationNotBijection,
                    &loc,
                    format!("{p:?} is not a permutation of {n} elements"),
                );
                continue;
            }
        }
        match (&s.stalk, &gen.matrix) {
            (Stalk::Chambers(cs), Some(mat)) => match cs.induced_chamber_permutation(mat) {
                Ok(induced) => {
                    if let Some(p) = &gen.permutation {
                        if *p != induced {
                            report.push(
                                ViolationKind::PermMatrixMismatch,
                                &loc,
                                format!("declared {p:?}, matrix induces {induced:?}"),
                            );
                        }
                    }
                }
                Err(e) => report.push(ViolationKind::MonodromyNotSymmetry, &loc, e.to_string()),
            },
            (Stalk::Explicit(_), Some(_)) => report.push(
                ViolationKind::MatrixOnExplicitStalk,
                &loc,
                "explicit stalks carry no Picard space",
            ),
            (_, None) => {
                if gen.permutation.is_none() {
                    report.push(ViolationKind::PermutationMissing, &loc, "no permutation given");
                }
            }
        }
    }
}

fn validate_generalization(m: &StratifiedModel, k: usize, report: &mut ValidationReport) {
    let a = &m.arrows[k];
    let name = m.arrow_name(k);
    let (Ok(src), Ok(tgt)) = (m.stratum(&a.source), m.stratum(&a.target)) else {
        return;
    };
    match &a.gen {
        Generalization::Explicit(table) => {
            if table.len() != src.stalk.len() {
                report.push(
                    ViolationKind::ExplicitMapNotTotal,
                    &name,
                    format!("table has {} entries for a stalk of {}", table.len(), src.stalk.len()),
                );
            } else if let Some(bad) = table.iter().find(|&&x| x >= tgt.stalk.len()) {
                report.push(
                    ViolationKind::ExplicitMapNotTotal,
                    &name,
                    format!("image {bad} outside a target stalk of {}", tgt.stalk.len()),
                );
            }
        }
        Generalization::Linear(map) => {
            if !src.stalk.has_picard_layer() || !tgt.stalk.has_picard_layer() {
                report.push(
                    ViolationKind::LinearMapUnsupported,
                    &name,
                    "linear generalization between stalks without Picard layers",
                );
                return;
            }
            let (sd, td) = (src.stalk.picard_dim(), tgt.stalk.picard_dim());
            if map.rows() != td || map.cols() != sd {
                report.push(
                    ViolationKind::LinearMapShape,
                    &name,
                    format!("{}x{} map from dimension {sd} to {td}", map.rows(), map.cols()),
                );
                return;
            }
            for i in 0..src.stalk.len() {
                if let Err(detail) = check_chamber_image(&src.stalk, i, &tgt.stalk, map) {
                    report.push(ViolationKind::NonGenericRestriction, &name, detail);
                }
            }
        }
    }
}

/// Checks that `map` carries the whole open chamber `i` into one target
/// chamber, not only its stored interior point.
fn check_chamber_image(src: &Stalk, i: usize, tgt: &Stalk, map: &RatMatrix) -> Result<usize, String> {
    let label = src.label(i);
    let point = src.interior_point(i).expect("source has a Picard layer");
    let j = locate_in(tgt, &map.mul_vec(&point).map_err(|e| e.to_string())?)
        .map_err(|e| format!("image of chamber {label}: {e}"))?;
    let source_rows = src.chamber_inequalities(i).expect("source has a Picard layer");
    let mt = map.transpose();
    for row in tgt.chamber_inequalities(j).expect("target has a Picard layer") {
        let pulled = mt.mul_vec(&row).map_err(|e| e.to_string())?;
        if pulled.iter().all(Zero::is_zero) {
            return Err(format!("chamber {label} is mapped onto a wall"));
        }
        let mut p = LpProblem::new(point.len());
        p.strict = source_rows.clone();
        p.strict.push(pulled.into_iter().map(|x| -x).collect());
        if lp_strict_feasible(&p).map_err(|e| e.to_string())?.is_some() {
            return Err(format!(
                "chamber {label} straddles a wall of target chamber {}",
                tgt.label(j)
            ));
        }
    }
    Ok(j)
}

fn locate_in(stalk: &Stalk, p: &RatVector) -> Result<usize, ArrangementError> {
    match stalk {
        Stalk::Chambers(cs) => cs.locate_chamber(p),
        Stalk::Explicit(_) => Ok(0),
    }
}

/// Image of stalk element `element` under the generalization map of arrow
/// `arrow`.
pub fn gen_eval(m: &StratifiedModel, arrow: usize, element: usize) -> Result<usize, ModelError> {
    let a = m.arrows.get(arrow).ok_or(ModelError::UnknownArrow(arrow))?;
    let src = m.stratum(&a.source)?;
    let tgt = m.stratum(&a.target)?;
    if element >= src.stalk.len() {
        return Err(ModelError::ElementOutOfRange {
            stratum: src.id.clone(),
            element,
        });
    }
    match &a.gen {
        Generalization::Explicit(table) => table.get(element).copied().ok_or_else(|| {
            ModelError::ElementOutOfRange {
                stratum: src.id.clone(),
                element,
            }
        }),
        Generalization::Linear(map) => {
            let point = src
                .stalk
                .interior_point(element)
                .ok_or_else(|| ModelError::LinearMapUnsupported(m.arrow_name(arrow)))?;
            if !tgt.stalk.has_picard_layer() {
                return Err(ModelError::LinearMapUnsupported(m.arrow_name(arrow)));
            }
            let image = map
                .mul_vec(&point)
                .map_err(|e| ModelError::LinearMapUnsupported(format!("{}: {e}", m.arrow_name(arrow))))?;
            locate_in(&tgt.stalk, &image).map_err(|e| ModelError::NonGenericRestriction {
                arrow: m.arrow_name(arrow),
                detail: e.to_string(),
            })
        }
    }
}

/// The Picard-layer view of a stalk used by products: chamber stalks as they
/// are, explicit singletons as the single chamber of a point.
fn as_chamber_set(stalk: &Stalk) -> Option<ChamberSet> {
    match stalk {
        Stalk::Chambers(cs) => Some(cs.clone()),
        Stalk::Explicit(l) if l.len() == 1 => Some(crate::arrangement::enumerate_chambers(
            &Arrangement::from_parts(0, Vec::new(), Vec::new()),
        )
        .expect("zero-dimensional arrangement has one chamber")),
        Stalk::Explicit(_) => None,
    }
}

fn product_chambers(a: &ChamberSet, b: &ChamberSet) -> ChamberSet {
    let (aa, ba) = (a.arrangement(), b.arrangement());
    let (da, db) = (aa.dimension(), ba.dimension());
    let zeros = |n: usize| vec![num_bigint::BigInt::zero(); n];
    let pad_left = |v: &Vec<num_bigint::BigInt>| {
        let mut out = v.clone();
        out.extend(zeros(db));
        out
    };
    let pad_right = |v: &Vec<num_bigint::BigInt>| {
        let mut out = zeros(da);
        out.extend(v.iter().cloned());
        out
    };
    let normals = aa
        .hyperplanes()
        .iter()
        .map(|h| pad_left(h.normal()))
        .chain(ba.hyperplanes().iter().map(|h| pad_right(h.normal())))
        .collect();
    let cone = aa
        .ambient()
        .halfspaces()
        .iter()
        .map(pad_left)
        .chain(ba.ambient().halfspaces().iter().map(pad_right))
        .collect();
    let arrangement = Arrangement::from_parts(da + db, normals, cone);
    let mut chambers = Vec::with_capacity(a.len() * b.len());
    for ca in a.chambers() {
        for cb in b.chambers() {
            let mut signs = ca.signs().to_vec();
            signs.extend_from_slice(cb.signs());
            let mut witness = ca.interior_point().clone();
            witness.extend(cb.interior_point().iter().cloned());
            chambers.push(Chamber::from_parts(signs, witness));
        }
    }
    ChamberSet::from_known(arrangement, chambers)
}

/// Stalk of a product stratum; element `(i, j)` sits at `i * |b| + j`.
fn product_stalk(a: &Stalk, b: &Stalk) -> Stalk {
    if let (Stalk::Explicit(la), Stalk::Explicit(lb)) = (a, b) {
        if la.len() == 1 && lb.len() == 1 {
            return Stalk::Explicit(vec![format!("({},{})", la[0], lb[0])]);
        }
    }
    match (as_chamber_set(a), as_chamber_set(b)) {
        (Some(ca), Some(cb)) => Stalk::Chambers(product_chambers(&ca, &cb)),
        _ => {
            let mut labels = Vec::with_capacity(a.len() * b.len());
            for i in 0..a.len() {
                for j in 0..b.len() {
                    labels.push(format!("({},{})", a.label(i), b.label(j)));
                }
            }
            Stalk::Explicit(labels)
        }
    }
}

pub fn product_id(a: &str, b: &str) -> String {
    format!("({a},{b})")
}

/// Product of two valid models: strata are pairs, stalks are products (chamber
/// stalks combine in the direct-sum Picard space), arrows and monodromy act
/// factorwise.
pub fn product_model(m1: &StratifiedModel, m2: &StratifiedModel) -> Result<StratifiedModel, ModelError> {
    for m in [m1, m2] {
        let report = validate(m);
        if !report.is_valid() {
            return Err(ModelError::Invalid(report));
        }
    }
    let mut strata = Vec::new();
    for s in &m1.strata {
        for t in &m2.strata {
            let stalk = product_stalk(&s.stalk, &t.stalk);
            let chamberlike = matches!(stalk, Stalk::Chambers(_));
            let (ns, nt) = (s.stalk.len(), t.stalk.len());
            let (ds, dt) = (s.stalk.picard_dim(), t.stalk.picard_dim());
            let mut monodromy = Vec::new();
            for g in 0..s.monodromy.len() {
                let p = s.generator_permutation(g)?;
                let permutation = (0..ns * nt).map(|k| p[k / nt] * nt + k % nt).collect();
                let matrix = match (&s.monodromy[g].matrix, chamberlike) {
                    (Some(mat), true) => Some(mat.direct_sum(&RatMatrix::identity(dt))),
                    _ => None,
                };
                monodromy.push(MonodromyGenerator {
                    matrix,
                    permutation: Some(permutation),
                });
            }
            for g in 0..t.monodromy.len() {
                let p = t.generator_permutation(g)?;
                let permutation = (0..ns * nt).map(|k| (k / nt) * nt + p[k % nt]).collect();
                let matrix = match (&t.monodromy[g].matrix, chamberlike) {
                    (Some(mat), true) => Some(RatMatrix::identity(ds).direct_sum(mat)),
                    _ => None,
                };
                monodromy.push(MonodromyGenerator {
                    matrix,
                    permutation: Some(permutation),
                });
            }
            let note = match (s.basepoint_note.is_empty(), t.basepoint_note.is_empty()) {
                (true, true) => String::new(),
                _ => format!("{} x {}", s.basepoint_note, t.basepoint_note),
            };
            strata.push(Stratum {
                id: product_id(&s.id, &t.id),
                dim: s.dim + t.dim,
                stalk,
                monodromy,
                basepoint_note: note,
            });
        }
    }
    let mut model = StratifiedModel {
        strata,
        arrows: Vec::new(),
        flags: Flags {
            q_factorial_symplectic: m1.flags.q_factorial_symplectic && m2.flags.q_factorial_symplectic,
            h2_units_trivial: m1.flags.h2_units_trivial && m2.flags.h2_units_trivial,
        },
        metadata: BTreeMap::new(),
    };
    for (k, a) in m1.arrows.iter().enumerate() {
        let src = m1.stratum(&a.source)?;
        let table: Vec<usize> = (0..src.stalk.len())
            .map(|i| gen_eval(m1, k, i))
            .collect::<Result<_, _>>()?;
        for t in &m2.strata {
            let nt = t.stalk.len();
            let new_src = product_id(&a.source, &t.id);
            let new_tgt = product_id(&a.target, &t.id);
            let linear = match &a.gen {
                Generalization::Linear(map) => chamber_pair(&model, &new_src, &new_tgt)
                    .then(|| map.direct_sum(&RatMatrix::identity(t.stalk.picard_dim()))),
                Generalization::Explicit(_) => None,
            };
            let gen = match linear {
                Some(map) => Generalization::Linear(map),
                None => Generalization::Explicit(
                    (0..src.stalk.len() * nt).map(|x| table[x / nt] * nt + x % nt).collect(),
                ),
            };
            model.arrows.push(HasseArrow {
                source: new_src,
                target: new_tgt,
                tag: a.tag,
                gen,
            });
        }
    }
    for (k, b) in m2.arrows.iter().enumerate() {
        let (src, tgt) = (m2.stratum(&b.source)?, m2.stratum(&b.target)?);
        let table: Vec<usize> = (0..src.stalk.len())
            .map(|i| gen_eval(m2, k, i))
            .collect::<Result<_, _>>()?;
        let (nsrc, ntgt) = (src.stalk.len(), tgt.stalk.len());
        for s in &m1.strata {
            let new_src = product_id(&s.id, &b.source);
            let new_tgt = product_id(&s.id, &b.target);
            let linear = match &b.gen {
                Generalization::Linear(map) => chamber_pair(&model, &new_src, &new_tgt)
                    .then(|| RatMatrix::identity(s.stalk.picard_dim()).direct_sum(map)),
                Generalization::Explicit(_) => None,
            };
            let gen = match linear {
                Some(map) => Generalization::Linear(map),
                None => Generalization::Explicit(
                    (0..s.stalk.len() * nsrc)
                        .map(|x| (x / nsrc) * ntgt + table[x % nsrc])
                        .collect(),
                ),
            };
            model.arrows.push(HasseArrow {
                source: new_src,
                target: new_tgt,
                tag: b.tag,
                gen,
            });
        }
    }
    for (k, v) in &m1.metadata {
        model.metadata.insert(format!("left.{k}"), v.clone());
    }
    for (k, v) in &m2.metadata {
        model.metadata.insert(format!("right.{k}"), v.clone());
    }
    Ok(model)
}

fn chamber_pair(m: &StratifiedModel, a: &str, b: &str) -> bool {
    let has = |id: &str| {
        m.stratum(id)
            .map(|s| s.stalk.has_picard_layer())
            .unwrap_or(false)
    };
    has(a) && has(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrangement::brute_force_chambers;
    use crate::exactmath::RatMatrix;

    fn a1_germ() -> StratifiedModel {
        let arr = Arrangement::from_i64(1, &[&[1]], &[]).unwrap();
        StratifiedModel {
            strata: vec![Stratum::new("p", 0, Stalk::chambers(&arr).unwrap())],
            ..Default::default()
        }
    }

    fn point() -> StratifiedModel {
        StratifiedModel {
            strata: vec![Stratum::new("pt", 0, Stalk::singleton())],
            ..Default::default()
        }
    }

    fn explicit_single(n: usize) -> StratifiedModel {
        StratifiedModel {
            strata: vec![Stratum::new("s", 0, Stalk::explicit((0..n).map(|i| format!("e{i}"))))],
            ..Default::default()
        }
    }

    #[test]
    fn single_singleton_is_valid() {
        assert!(point().validate().is_valid());
    }

    #[test]
    fn dim_order_violation() {
        let mut m = point();
        m.strata.push(Stratum::new("q", 0, Stalk::singleton()));
        m.arrows.push(HasseArrow::explicit("pt", "q", vec![0]));
        let r = m.validate();
        assert!(r.has(ViolationKind::DimOrder), "{r}");
        assert!(r.violations[0].location.contains("pt -> q"));
    }

    #[test]
    fn perm_matrix_mismatch() {
        let mut m = a1_germ();
        m.strata[0].monodromy.push(MonodromyGenerator {
            matrix: Some(RatMatrix::from_i64(&[&[-1]])),
            permutation: Some(vec![0, 1]),
        });
        assert!(m.validate().has(ViolationKind::PermMatrixMismatch));
        m.strata[0].monodromy[0].permutation = Some(vec![1, 0]);
        assert!(m.validate().is_valid());
    }

    #[test]
    fn cycles_and_bad_tables_are_reported() {
        let mut m = StratifiedModel {
            strata: vec![
                Stratum::new("a", 0, Stalk::singleton()),
                Stratum::new("b", 1, Stalk::singleton()),
            ],
            ..Default::default()
        };
        m.arrows.push(HasseArrow::explicit("a", "b", vec![0]));
        m.arrows.push(HasseArrow::explicit("b", "a", vec![0, 0]));
        let r = m.validate();
        assert!(r.has(ViolationKind::Cycle));
        assert!(r.has(ViolationKind::ExplicitMapNotTotal));
        assert!(r.has(ViolationKind::DimOrder));
    }

    #[test]
    fn non_generic_restriction_detected() {
        // the chambers of {x=0, y=0} do not map into chambers of {t=0} under (x,y) -> x+y
        let src = Arrangement::from_i64(2, &[&[1, 0], &[0, 1]], &[]).unwrap();
        let tgt = Arrangement::from_i64(1, &[&[1]], &[]).unwrap();
        let m = StratifiedModel {
            strata: vec![
                Stratum::new("deep", 0, Stalk::chambers(&src).unwrap()),
                Stratum::new("open", 2, Stalk::chambers(&tgt).unwrap()),
            ],
            arrows: vec![HasseArrow::linear("deep", "open", RatMatrix::from_i64(&[&[1, 1]]))],
            ..Default::default()
        };
        assert!(m.validate().has(ViolationKind::NonGenericRestriction));
    }

    #[test]
    fn gen_eval_examples() {
        let mut m = explicit_single(3);
        m.strata.push(Stratum::new("t", 1, Stalk::explicit(["e0", "e1", "e2"])));
        m.arrows.push(HasseArrow::explicit("s", "t", vec![0, 1, 2]));
        for i in 0..3 {
            assert_eq!(gen_eval(&m, 0, i).unwrap(), i);
        }

        let mut g = a1_germ();
        g.strata.push(Stratum::new("open", 2, Stalk::singleton()));
        g.arrows.push(HasseArrow::linear("p", "open", RatMatrix::zeros(0, 1)));
        assert!(g.validate().is_valid());
        assert_eq!(gen_eval(&g, 0, 0).unwrap(), 0);
        assert_eq!(gen_eval(&g, 0, 1).unwrap(), 0);
        assert!(matches!(gen_eval(&g, 0, 2), Err(ModelError::ElementOutOfRange { .. })));
    }

    #[test]
    fn product_with_point_is_identity_on_stalks() {
        let m = a1_germ();
        let p = product_model(&m, &point()).unwrap();
        assert_eq!(p.strata.len(), 1);
        assert_eq!(p.strata[0].stalk.len(), 2);
        assert_eq!(p.strata[0].stalk.picard_dim(), 1);
        assert!(p.validate().is_valid());
    }

    #[test]
    fn product_of_explicit_stalks_multiplies() {
        let p = product_model(&explicit_single(2), &explicit_single(3)).unwrap();
        assert_eq!(p.strata[0].stalk.len(), 6);
        assert_eq!(p.strata[0].stalk.label(4), "(e1,e1)");
    }

    #[test]
    fn product_of_a1_germs_is_coordinate_arrangement() {
        let p = product_model(&a1_germ(), &a1_germ()).unwrap();
        let Stalk::Chambers(cs) = &p.strata[0].stalk else { panic!() };
        let oracle = brute_force_chambers(&Arrangement::from_i64(2, &[&[1, 0], &[0, 1]], &[]).unwrap()).unwrap();
        assert_eq!(cs.len(), 4);
        let labels: Vec<_> = cs.chambers().iter().map(|c| c.label()).collect();
        let expected: Vec<_> = oracle.chambers().iter().map(|c| c.label()).collect();
        assert_eq!(labels, expected);
        assert_eq!(cs.arrangement(), oracle.arrangement());
    }

    #[test]
    fn product_embeds_monodromy_and_arrows() {
        let mut m = a1_germ();
        m.strata[0].monodromy.push(MonodromyGenerator::matrix(RatMatrix::from_i64(&[&[-1]])));
        m.strata.push(Stratum::new("open", 1, Stalk::singleton()));
        m.arrows.push(HasseArrow::linear("p", "open", RatMatrix::zeros(0, 1)));
        let p = product_model(&m, &explicit_single(2)).unwrap();
        assert!(p.validate().is_valid(), "{}", p.validate());
        let s = p.stratum("(p,s)").unwrap();
        assert_eq!(s.stalk.len(), 4);
        assert_eq!(s.monodromy[0].permutation, Some(vec![2, 3, 0, 1]));
        assert_eq!(p.arrows.len(), 1);
        assert_eq!(p.arrows[0].gen, Generalization::Explicit(vec![0, 1, 0, 1]));
    }
}
