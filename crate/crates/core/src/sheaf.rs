//! Global sections of the resolution sheaf of a stratified model and the
//! ample-section test deciding global projectivity.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::exactmath::{irredundant_rows, lp_strict_feasible, ExactError, LpProblem, Rat, RatMatrix, RatVector};
use crate::stratspace::{gen_eval, validate, Generalization, ModelError, Stalk, StratifiedModel};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SheafError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("ample-section test does not apply: {0}")]
    NotApplicableExplicitStalks(String),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// One stalk element per stratum, indexed like `StratifiedModel::strata`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Section {
    pub assignment: Vec<usize>,
}

impl Section {
    /// Stratum id to element label.
    pub fn labels(&self, m: &StratifiedModel) -> BTreeMap<String, String> {
        m.strata
            .iter()
            .zip(&self.assignment)
            .map(|(s, &e)| (s.id.clone(), s.stalk.label(e)))
            .collect()
    }
}

/// Model data reduced to finite tables: the monodromy-invariant elements of
/// every stratum and the element map of every arrow.
#[derive(Debug, Clone)]
struct Compiled {
    allowed: Vec<Vec<bool>>,
    /// (source, target, table)
    arrows: Vec<(usize, usize, Vec<usize>)>,
    dims: Vec<u32>,
}

impl Compiled {
    fn new(m: &StratifiedModel) -> Result<Self, SheafError> {
        let report = validate(m);
        if !report.is_valid() {
            return Err(ModelError::Invalid(report).into());
        }
        let mut allowed = Vec::with_capacity(m.strata.len());
        for s in &m.strata {
            let mut ok = vec![true; s.stalk.len()];
            for g in 0..s.monodromy.len() {
                let p = s.generator_permutation(g)?;
                for (e, flag) in ok.iter_mut().enumerate() {
                    if p[e] != e {
                        *flag = false;
                    }
                }
            }
            allowed.push(ok);
        }
        let mut arrows = Vec::with_capacity(m.arrows.len());
        for (k, a) in m.arrows.iter().enumerate() {
            let si = m.stratum_index(&a.source).expect("validated");
            let ti = m.stratum_index(&a.target).expect("validated");
            let table = (0..m.strata[si].stalk.len())
                .map(|e| gen_eval(m, k, e))
                .collect::<Result<Vec<_>, _>>()?;
            arrows.push((si, ti, table));
        }
        Ok(Compiled {
            allowed,
            arrows,
            dims: m.strata.iter().map(|s| s.dim).collect(),
        })
    }

    fn is_section(&self, assignment: &[usize]) -> bool {
        assignment.len() == self.allowed.len()
            && assignment
                .iter()
                .zip(&self.allowed)
                .all(|(&e, ok)| e < ok.len() && ok[e])
            && self
                .arrows
                .iter()
                .all(|(s, t, table)| table[assignment[*s]] == assignment[*t])
    }
}

/// Backtracking search restricted to a set of strata. Strata with incoming
/// arrows are determined by their sources; only the rest are branched on.
struct Search<'a> {
    c: &'a Compiled,
    /// Processing order; branch points are strata without incoming arrows.
    order: Vec<usize>,
    incoming: Vec<Vec<usize>>,
}

impl<'a> Search<'a> {
    fn new(c: &'a Compiled, members: &[usize], arrows: &[usize]) -> Self {
        let n = c.allowed.len();
        let mut incoming = vec![Vec::new(); n];
        for &k in arrows {
            incoming[c.arrows[k].1].push(k);
        }
        let mut sorted = members.to_vec();
        sorted.sort_by_key(|&i| (c.dims[i], i));
        // interleave so each determined stratum follows its last source
        let mut placed = vec![false; n];
        let mut order = Vec::with_capacity(sorted.len());
        for &root in sorted.iter().filter(|&&i| incoming[i].is_empty()) {
            order.push(root);
            placed[root] = true;
            loop {
                let next = sorted.iter().copied().find(|&i| {
                    !placed[i]
                        && !incoming[i].is_empty()
                        && incoming[i].iter().all(|&k| placed[c.arrows[k].0])
                });
                match next {
                    Some(i) => {
                        order.push(i);
                        placed[i] = true;
                    }
                    None => break,
                }
            }
        }
        debug_assert_eq!(order.len(), sorted.len());
        Search { c, order, incoming }
    }

    fn run(&self, visit: &mut dyn FnMut(&[usize]) -> bool) {
        let mut assignment = vec![usize::MAX; self.c.allowed.len()];
        self.step(0, &mut assignment, visit);
    }

    /// Returns false once the visitor asks to stop.
    fn step(&self, depth: usize, assignment: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if depth == self.order.len() {
            return visit(assignment);
        }
        let i = self.order[depth];
        let allowed = &self.c.allowed[i];
        if self.incoming[i].is_empty() {
            for (e, &ok) in allowed.iter().enumerate() {
                if ok {
                    assignment[i] = e;
                    if !self.step(depth + 1, assignment, visit) {
                        return false;
                    }
                }
            }
            assignment[i] = usize::MAX;
            true
        } else {
            let mut value = None;
            for &k in &self.incoming[i] {
                let (s, _, table) = &self.c.arrows[k];
                let v = table[assignment[*s]];
                match value {
                    None => value = Some(v),
                    Some(w) if w != v => return true,
                    _ => {}
                }
            }
            let v = value.expect("determined stratum");
            if !allowed[v] {
                return true;
            }
            assignment[i] = v;
            let go_on = self.step(depth + 1, assignment, visit);
            assignment[i] = usize::MAX;
            go_on
        }
    }
}

/// Calls `visit` on every global section in deterministic order (minimal
/// strata by dimension then declaration order, elements in stalk order)
/// until it returns false.
pub fn for_each_section(m: &StratifiedModel, mut visit: impl FnMut(Section) -> bool) -> Result<(), SheafError> {
    let c = Compiled::new(m)?;
    let members: Vec<usize> = (0..m.strata.len()).collect();
    let arrows: Vec<usize> = (0..c.arrows.len()).collect();
    Search::new(&c, &members, &arrows).run(&mut |a| {
        visit(Section {
            assignment: a.to_vec(),
        })
    });
    Ok(())
}

pub fn global_sections(m: &StratifiedModel) -> Result<Vec<Section>, SheafError> {
    let mut out = Vec::new();
    for_each_section(m, |s| {
        out.push(s);
        true
    })?;
    Ok(out)
}

/// Number of global sections. Arrows into strata with a single stalk element
/// only filter their sources, so the search splits into independent
/// components linked by the remaining arrows and the counts multiply.
pub fn count_sections(m: &StratifiedModel) -> Result<BigUint, SheafError> {
    let mut c = Compiled::new(m)?;
    let n = c.allowed.len();
    let mut linking = Vec::new();
    for k in 0..c.arrows.len() {
        let (s, t, table) = c.arrows[k].clone();
        if c.allowed[t].len() == 1 {
            let target_ok = c.allowed[t][0];
            for (e, flag) in c.allowed[s].iter_mut().enumerate() {
                if !target_ok || table[e] != 0 {
                    *flag = false;
                }
            }
        } else {
            linking.push(k);
        }
    }
    // union-find over linking arrows
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    for &k in &linking {
        let (s, t, _) = c.arrows[k];
        let (rs, rt) = (find(&mut parent, s), find(&mut parent, t));
        if rs != rt {
            parent[rs.max(rt)] = rs.min(rt);
        }
    }
    let mut components: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        components.entry(r).or_default().push(i);
    }
    let mut total = BigUint::one();
    for (root, members) in components {
        let arrows: Vec<usize> = linking
            .iter()
            .copied()
            .filter(|&k| find(&mut parent, c.arrows[k].0) == root)
            .collect();
        let mut count = BigUint::zero();
        Search::new(&c, &members, &arrows).run(&mut |_| {
            count += 1u32;
            true
        });
        if count.is_zero() {
            return Ok(count);
        }
        total *= count;
    }
    Ok(total)
}

/// Exhaustive oracle: every assignment in the product of stalks, filtered by
/// monodromy invariance and arrow compatibility.
pub fn brute_force_sections(m: &StratifiedModel) -> Result<Vec<Section>, SheafError> {
    let c = Compiled::new(m)?;
    let sizes: Vec<usize> = c.allowed.iter().map(Vec::len).collect();
    let mut out = Vec::new();
    if sizes.contains(&0) {
        return Ok(out);
    }
    let mut current = vec![0usize; sizes.len()];
    loop {
        if c.is_section(&current) {
            out.push(Section {
                assignment: current.clone(),
            });
        }
        let mut i = sizes.len();
        loop {
            if i == 0 {
                out.sort();
                return Ok(out);
            }
            i -= 1;
            current[i] += 1;
            if current[i] < sizes[i] {
                break;
            }
            current[i] = 0;
        }
    }
}

/// Independent re-check of the section invariants.
pub fn is_section(m: &StratifiedModel, s: &Section) -> Result<bool, SheafError> {
    Ok(Compiled::new(m)?.is_section(&s.assignment))
}

/// Rational Picard classes, one per stratum with a chamber stalk.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AmpleWitness {
    pub vectors: BTreeMap<String, RatVector>,
}

struct AmpleProgram {
    lp: LpProblem,
    offsets: Vec<usize>,
}

/// Facet rows of chambers already seen, keyed by (stratum, chamber).
type FacetCache = HashMap<(usize, usize), Vec<RatVector>>;

/// Builds the feasibility program of a section. With a cache, each chamber
/// contributes only its facet rows; without one, every wall row.
fn ample_program(m: &StratifiedModel, s: &Section, mut facets: Option<&mut FacetCache>) -> Result<AmpleProgram, SheafError> {
    for st in &m.strata {
        if let Stalk::Explicit(labels) = &st.stalk {
            if labels.len() > 1 {
                return Err(SheafError::NotApplicableExplicitStalks(format!(
                    "stratum {} has an explicit stalk of {} elements",
                    st.id,
                    labels.len()
                )));
            }
        }
    }
    let mut offsets = Vec::with_capacity(m.strata.len());
    let mut total = 0;
    for st in &m.strata {
        offsets.push(total);
        total += st.stalk.picard_dim();
    }
    let mut lp = LpProblem::new(total);
    let embed = |row: &[Rat], offset: usize| -> RatVector {
        let mut v = vec![Rat::zero(); total];
        v[offset..offset + row.len()].clone_from_slice(row);
        v
    };
    for (k, a) in m.arrows.iter().enumerate() {
        let si = m.stratum_index(&a.source).expect("validated");
        let ti = m.stratum_index(&a.target).expect("validated");
        let (sd, td) = (m.strata[si].stalk.picard_dim(), m.strata[ti].stalk.picard_dim());
        match &a.gen {
            Generalization::Linear(map) => {
                for r in 0..td {
                    let mut row = embed(map.row(r), offsets[si]);
                    row[offsets[ti] + r] -= Rat::one();
                    lp.equalities.push((row, Rat::zero()));
                }
            }
            Generalization::Explicit(_) if td == 0 => {}
            Generalization::Explicit(_) => {
                return Err(SheafError::NotApplicableExplicitStalks(format!(
                    "{} carries no linear restriction into a {td}-dimensional Picard space (source {sd})",
                    m.arrow_name(k)
                )))
            }
        }
    }
    for (i, st) in m.strata.iter().enumerate() {
        for g in &st.monodromy {
            if let Some(mat) = &g.matrix {
                let fixed = mat - &RatMatrix::identity(mat.rows());
                for r in 0..fixed.rows() {
                    lp.equalities.push((embed(fixed.row(r), offsets[i]), Rat::zero()));
                }
            }
        }
        let all_rows = || {
            st.stalk
                .chamber_inequalities(s.assignment[i])
                .expect("explicit stalks rejected above")
        };
        let rows = match facets.as_deref_mut() {
            Some(cache) => match cache.get(&(i, s.assignment[i])) {
                Some(rows) => rows.clone(),
                None => {
                    let rows = irredundant_rows(&all_rows())?;
                    cache.insert((i, s.assignment[i]), rows.clone());
                    rows
                }
            },
            None => all_rows(),
        };
        for row in rows {
            lp.strict.push(embed(&row, offsets[i]));
        }
    }
    Ok(AmpleProgram { lp, offsets })
}

/// Searches a compatible, monodromy-fixed family of classes lying in the
/// chambers chosen by the section.
pub fn ample_section(m: &StratifiedModel, s: &Section) -> Result<Option<AmpleWitness>, SheafError> {
    let report = validate(m);
    if !report.is_valid() {
        return Err(ModelError::Invalid(report).into());
    }
    ample_section_prevalidated(m, s, &mut FacetCache::new())
}

fn ample_section_prevalidated(
    m: &StratifiedModel,
    s: &Section,
    facets: &mut FacetCache,
) -> Result<Option<AmpleWitness>, SheafError> {
    let program = ample_program(m, s, Some(facets))?;
    let Some(x) = lp_strict_feasible(&program.lp)? else {
        return Ok(None);
    };
    let mut vectors = BTreeMap::new();
    for (i, st) in m.strata.iter().enumerate() {
        if let Stalk::Chambers(_) = st.stalk {
            let o = program.offsets[i];
            vectors.insert(st.id.clone(), x[o..o + st.stalk.picard_dim()].to_vec());
        }
    }
    Ok(Some(AmpleWitness { vectors }))
}

/// Substitutes the witness into every equality and strict inequality.
pub fn verify_witness(m: &StratifiedModel, s: &Section, w: &AmpleWitness) -> Result<bool, SheafError> {
    let program = ample_program(m, s, None)?;
    let mut x = vec![Rat::zero(); program.lp.dimension];
    for (i, st) in m.strata.iter().enumerate() {
        let d = st.stalk.picard_dim();
        if d == 0 {
            continue;
        }
        let Some(v) = w.vectors.get(&st.id) else {
            return Ok(false);
        };
        if v.len() != d {
            return Ok(false);
        }
        x[program.offsets[i]..program.offsets[i] + d].clone_from_slice(v);
    }
    Ok(program.lp.is_satisfied_by(&x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verdict {
    GloballyProjective,
    AmpleSectionExistsGerbeUnchecked,
    NoAmpleSection,
    NotApplicableExplicitStalks,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::GloballyProjective => "GloballyProjective",
            Verdict::AmpleSectionExistsGerbeUnchecked => "AmpleSectionExists_GerbeUnchecked",
            Verdict::NoAmpleSection => "NoAmpleSection",
            Verdict::NotApplicableExplicitStalks => "NotApplicable_ExplicitStalks",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Projectivity verdict for one section, with the witness when one exists.
pub fn projectivity_verdict(m: &StratifiedModel, s: &Section) -> Result<(Verdict, Option<AmpleWitness>), SheafError> {
    let report = validate(m);
    if !report.is_valid() {
        return Err(ModelError::Invalid(report).into());
    }
    verdict_prevalidated(m, s, &mut FacetCache::new())
}

fn verdict_prevalidated(
    m: &StratifiedModel,
    s: &Section,
    facets: &mut FacetCache,
) -> Result<(Verdict, Option<AmpleWitness>), SheafError> {
    match ample_section_prevalidated(m, s, facets) {
        Ok(None) => Ok((Verdict::NoAmpleSection, None)),
        Ok(Some(w)) => {
            let v = if m.flags.q_factorial_symplectic || m.flags.h2_units_trivial {
                Verdict::GloballyProjective
            } else {
                Verdict::AmpleSectionExistsGerbeUnchecked
            };
            Ok((v, Some(w)))
        }
        Err(SheafError::NotApplicableExplicitStalks(_)) => Ok((Verdict::NotApplicableExplicitStalks, None)),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectionVerdict {
    pub section: Section,
    pub verdict: Verdict,
    pub witness: Option<AmpleWitness>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerdictReport {
    pub section_count: BigUint,
    /// Present when the count does not exceed the listing limit.
    pub sections: Option<Vec<SectionVerdict>>,
}

/// Counts sections and, when there are at most `max_list`, lists each with
/// its projectivity verdict.
pub fn classify(m: &StratifiedModel, max_list: usize) -> Result<VerdictReport, SheafError> {
    let section_count = count_sections(m)?;
    if section_count > BigUint::from(max_list) {
        return Ok(VerdictReport {
            section_count,
            sections: None,
        });
    }
    let mut sections = Vec::new();
    let mut facets = FacetCache::new();
    for section in global_sections(m)? {
        let (verdict, witness) = verdict_prevalidated(m, &section, &mut facets)?;
        sections.push(SectionVerdict {
            section,
            verdict,
            witness,
        });
    }
    Ok(VerdictReport {
        section_count,
        sections: Some(sections),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrangement::Arrangement;
    use crate::exactmath::rat;
    use crate::stratspace::{HasseArrow, MonodromyGenerator, Stratum};

    fn single(stalk: Stalk) -> StratifiedModel {
        StratifiedModel {
            strata: vec![Stratum::new("s", 0, stalk)],
            ..Default::default()
        }
    }

    fn line_germ() -> Stalk {
        Stalk::chambers(&Arrangement::from_i64(1, &[&[1]], &[]).unwrap()).unwrap()
    }

    #[test]
    fn swapped_pair_has_no_section() {
        let mut m = single(Stalk::explicit(["A", "B"]));
        assert_eq!(count_sections(&m).unwrap(), BigUint::from(2u32));
        m.strata[0].monodromy.push(MonodromyGenerator::permutation(vec![1, 0]));
        assert!(global_sections(&m).unwrap().is_empty());
        assert_eq!(count_sections(&m).unwrap(), BigUint::zero());
    }

    #[test]
    fn empty_stalk_gives_zero() {
        let mut m = single(Stalk::explicit(["A", "B"]));
        m.strata.push(Stratum::new("e", 1, Stalk::Explicit(Vec::new())));
        assert_eq!(count_sections(&m).unwrap(), BigUint::zero());
        assert!(brute_force_sections(&m).unwrap().is_empty());
    }

    #[test]
    fn positive_chamber_witness() {
        let m = single(line_germ());
        let plus = Section { assignment: vec![0] };
        assert_eq!(m.strata[0].stalk.label(0), "[+]");
        let w = ample_section(&m, &plus).unwrap().unwrap();
        assert!(w.vectors["s"][0] > rat(0));
        assert!(verify_witness(&m, &plus, &w).unwrap());
        let (v, _) = projectivity_verdict(&m, &plus).unwrap();
        assert_eq!(v, Verdict::AmpleSectionExistsGerbeUnchecked);
    }

    #[test]
    fn minus_identity_monodromy_kills_witness() {
        let mut m = single(line_germ());
        m.strata[0].monodromy.push(MonodromyGenerator::matrix(RatMatrix::from_i64(&[&[-1]])));
        for e in 0..2 {
            let s = Section { assignment: vec![e] };
            assert_eq!(ample_section(&m, &s).unwrap(), None);
            assert_eq!(projectivity_verdict(&m, &s).unwrap().0, Verdict::NoAmpleSection);
        }
    }

    #[test]
    fn two_isolated_germs_admit_all_witnesses() {
        let m = StratifiedModel {
            strata: vec![
                Stratum::new("p", 0, line_germ()),
                Stratum::new("q", 0, line_germ()),
                Stratum::new("open", 2, Stalk::singleton()),
            ],
            arrows: vec![
                HasseArrow::linear("p", "open", RatMatrix::zeros(0, 1)),
                HasseArrow::linear("q", "open", RatMatrix::zeros(0, 1)),
            ],
            ..Default::default()
        };
        let sections = global_sections(&m).unwrap();
        assert_eq!(sections.len(), 4);
        for s in &sections {
            let w = ample_section(&m, s).unwrap().expect("witness");
            assert!(verify_witness(&m, s, &w).unwrap());
        }
    }

    #[test]
    fn explicit_stalks_are_not_applicable() {
        let m = single(Stalk::explicit(["A", "B"]));
        let s = Section { assignment: vec![0] };
        assert!(matches!(ample_section(&m, &s), Err(SheafError::NotApplicableExplicitStalks(_))));
        assert_eq!(
            projectivity_verdict(&m, &s).unwrap().0,
            Verdict::NotApplicableExplicitStalks
        );
    }

    #[test]
    fn flags_upgrade_verdict() {
        let mut m = single(line_germ());
        m.flags.h2_units_trivial = true;
        let s = Section { assignment: vec![1] };
        assert_eq!(projectivity_verdict(&m, &s).unwrap().0, Verdict::GloballyProjective);
    }

    #[test]
    fn classify_respects_listing_limit() {
        let m = single(Stalk::explicit(["A", "B", "C"]));
        let r = classify(&m, 2).unwrap();
        assert_eq!(r.section_count, BigUint::from(3u32));
        assert!(r.sections.is_none());
        let r = classify(&m, 3).unwrap();
        assert_eq!(r.sections.unwrap().len(), 3);
    }
}
