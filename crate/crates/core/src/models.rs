//! Builders for the worked examples, as validated stratified models.

use std::collections::BTreeMap;

use num_traits::ToPrimitive;
use thiserror::Error;

use crate::arrangement::Arrangement;
use crate::exactmath::RatMatrix;
use crate::formulas::{bellamy_count, torus_surface_profile, FormulaError, SurfaceProfile};
use crate::stratspace::{Flags, HasseArrow, ModelError, MonodromyGenerator, Stalk, StratifiedModel, Stratum};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("unknown builder {0:?}")]
    UnknownBuilder(String),
    #[error("builder {name} expects {expected} parameter(s), got {found}")]
    Arity { name: String, expected: usize, found: usize },
    #[error("invalid parameter {value:?} for {name}: {reason}")]
    Parameter { name: String, value: String, reason: String },
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn line_germ() -> Stalk {
    Stalk::chambers(&Arrangement::from_i64(1, &[&[1]], &[]).expect("valid")).expect("two chambers")
}

/// One stratum whose two local resolutions are exchanged by monodromy, over
/// an open stratum.
pub fn monodromy_swap_model() -> StratifiedModel {
    let singular = Stratum {
        basepoint_note: "loop around the stratum exchanges the two small resolutions".into(),
        ..Stratum::new("curve", 2, line_germ())
            .with_monodromy(MonodromyGenerator::matrix(RatMatrix::from_i64(&[&[-1]])))
    };
    StratifiedModel {
        strata: vec![singular, Stratum::new("open", 4, Stalk::singleton())],
        arrows: vec![HasseArrow::linear("curve", "open", RatMatrix::zeros(0, 1))],
        flags: Flags::default(),
        metadata: BTreeMap::from([("builder".into(), "monodromy-swap".into())]),
    }
    .validated()
    .expect("builder output is valid")
}

/// Three minimal strata with stalks {1,2}^2 (choices (r_j, r_k) for the two
/// indices other than i), three joins with stalks {1,2} fed by the shared
/// coordinate, and the open stratum.
pub fn min_orbit_cube_model() -> StratifiedModel {
    let pairs: Vec<String> = [(1, 1), (1, 2), (2, 1), (2, 2)]
        .iter()
        .map(|(a, b)| format!("({a},{b})"))
        .collect();
    let mut strata = Vec::new();
    for i in 1..=3 {
        strata.push(Stratum::new(format!("L{i}"), 4, Stalk::explicit(pairs.clone())));
    }
    for (a, b) in [(1, 2), (1, 3), (2, 3)] {
        strata.push(Stratum::new(format!("J{a}{b}"), 8, Stalk::explicit(["1", "2"])));
    }
    strata.push(Stratum::new("open", 12, Stalk::singleton()));
    // element index 2*x + y encodes the pair (x+1, y+1)
    let first = vec![0, 0, 1, 1];
    let second = vec![0, 1, 0, 1];
    let arrows = vec![
        // L1 carries (r2, r3), L2 (r1, r3), L3 (r1, r2)
        HasseArrow::explicit("L1", "J12", second.clone()),
        HasseArrow::explicit("L2", "J12", second.clone()),
        HasseArrow::explicit("L1", "J13", first.clone()),
        HasseArrow::explicit("L3", "J13", second),
        HasseArrow::explicit("L2", "J23", first.clone()),
        HasseArrow::explicit("L3", "J23", first),
        HasseArrow::explicit("J12", "open", vec![0, 0]),
        HasseArrow::explicit("J13", "open", vec![0, 0]),
        HasseArrow::explicit("J23", "open", vec![0, 0]),
    ];
    StratifiedModel {
        strata,
        arrows,
        flags: Flags::default(),
        metadata: BTreeMap::from([("builder".into(), "min-orbit-cube".into())]),
    }
    .validated()
    .expect("builder output is valid")
}

/// Sym^n of a surface with four A_1 points. Each deepest point carries a
/// 2-dimensional Picard space (x, y) with the quadrant as ambient cone and
/// walls x = k y for k = 1..n-1, so n chambers; x is the exceptional class
/// shared with the diagonal stratum.
pub fn bn_wreath_model(n: u32) -> Result<StratifiedModel, BuildError> {
    if n == 0 {
        return Err(BuildError::Parameter {
            name: "bn-wreath".into(),
            value: "0".into(),
            reason: "n must be at least 1".into(),
        });
    }
    let walls: Vec<Vec<i64>> = (1..n as i64).map(|k| vec![1, -k]).collect();
    let wall_refs: Vec<&[i64]> = walls.iter().map(Vec::as_slice).collect();
    let quadrant = Arrangement::from_i64(2, &wall_refs, &[&[1, 0], &[0, 1]]).map_err(ModelError::from)?;
    let stalk = Stalk::chambers(&quadrant).map_err(ModelError::from)?;
    let open_dim = 2 * n;
    let mut strata = Vec::new();
    let mut arrows = Vec::new();
    let has_diagonal = n > 1;
    if has_diagonal {
        let half_line = Arrangement::from_i64(1, &[], &[&[1]]).map_err(ModelError::from)?;
        strata.push(Stratum::new(
            "diagonal",
            open_dim - 2,
            Stalk::chambers(&half_line).map_err(ModelError::from)?,
        ));
        arrows.push(HasseArrow::linear("diagonal", "open", RatMatrix::zeros(0, 1)));
    }
    for (sx, sy) in [("+", "+"), ("+", "-"), ("-", "+"), ("-", "-")] {
        let id = format!("D({sx}1,{sy}1)");
        strata.push(Stratum::new(id.clone(), 0, stalk.clone()));
        if has_diagonal {
            arrows.push(HasseArrow::linear(&id, "diagonal", RatMatrix::from_i64(&[&[1, 0]])));
        } else {
            arrows.push(HasseArrow::linear(&id, "open", RatMatrix::zeros(0, 2)));
        }
    }
    strata.push(Stratum::new("open", open_dim, Stalk::singleton()));
    let metadata = BTreeMap::from([
        ("builder".into(), format!("bn-wreath:{n}")),
        (
            "picard_encoding".into(),
            "deepest points use coordinates (x, y) on the quadrant with walls x = k y; x is the shared exceptional class restricted to the diagonal stratum".into(),
        ),
    ]);
    Ok(StratifiedModel {
        strata,
        arrows,
        flags: Flags {
            q_factorial_symplectic: true,
            h2_units_trivial: false,
        },
        metadata,
    }
    .validated()?)
}

/// k isolated nodes, each with its two small resolutions as the chambers of
/// a line, over an open stratum.
pub fn nodal_smallres_model(k: u32) -> Result<StratifiedModel, BuildError> {
    if k == 0 {
        return Err(BuildError::Parameter {
            name: "nodal-smallres".into(),
            value: "0".into(),
            reason: "k must be at least 1".into(),
        });
    }
    let mut strata: Vec<Stratum> = (1..=k)
        .map(|i| Stratum::new(format!("node{i}"), 0, line_germ()))
        .collect();
    strata.push(Stratum::new("open", 3, Stalk::singleton()));
    let arrows = (1..=k)
        .map(|i| HasseArrow::linear(&format!("node{i}"), "open", RatMatrix::zeros(0, 1)))
        .collect();
    Ok(StratifiedModel {
        strata,
        arrows,
        flags: Flags::default(),
        metadata: BTreeMap::from([("builder".into(), format!("nodal-smallres:{k}"))]),
    }
    .validated()?)
}

/// Essential model of Sym^n of a surface with the given du Val points: one
/// minimal stratum per point whose explicit stalk has one element per
/// resolution of the local symmetric power.
pub fn sym_duval_model(profile: &SurfaceProfile, n: u32) -> Result<StratifiedModel, BuildError> {
    let open_dim = 2 * n.max(1);
    let mut strata = Vec::new();
    let mut arrows = Vec::new();
    for (i, t) in profile.points.iter().enumerate() {
        let size = bellamy_count(*t, n as u64)?
            .to_usize()
            .ok_or_else(|| BuildError::Parameter {
                name: "sym-duval".into(),
                value: n.to_string(),
                reason: "stalk too large to materialize".into(),
            })?;
        let id = format!("p{}:{t}", i + 1);
        strata.push(Stratum::new(id.clone(), 0, Stalk::explicit((1..=size).map(|r| format!("R{r}")))));
        arrows.push(HasseArrow::explicit(&id, "open", vec![0; size]));
    }
    strata.push(Stratum::new("open", open_dim, Stalk::singleton()));
    Ok(StratifiedModel {
        strata,
        arrows,
        flags: Flags::default(),
        metadata: BTreeMap::from([
            ("builder".into(), format!("sym-duval:{n}")),
            ("profile".into(), profile.to_string()),
        ]),
    }
    .validated()?)
}

/// Sym^n of the quotient of a 2-torus by the cyclic group of order m.
pub fn wreath_torus_model(m: u32, n: u32) -> Result<StratifiedModel, BuildError> {
    if ![2, 3, 4, 6].contains(&m) {
        return Err(BuildError::Parameter {
            name: "wreath-torus".into(),
            value: m.to_string(),
            reason: "m must be 2, 3, 4 or 6".into(),
        });
    }
    if n == 0 {
        return Err(BuildError::Parameter {
            name: "wreath-torus".into(),
            value: "0".into(),
            reason: "n must be at least 1".into(),
        });
    }
    let mut model = sym_duval_model(&torus_surface_profile(m)?, n)?;
    model.metadata.insert("builder".into(), format!("wreath-torus:{m}:{n}"));
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuilderInfo {
    pub name: &'static str,
    pub params: &'static [&'static str],
    pub description: &'static str,
}

pub const CATALOG: &[BuilderInfo] = &[
    BuilderInfo {
        name: "monodromy-swap",
        params: &[],
        description: "two local resolutions exchanged by monodromy",
    },
    BuilderInfo {
        name: "min-orbit-cube",
        params: &[],
        description: "three minimal strata with pairwise shared choices",
    },
    BuilderInfo {
        name: "bn-wreath",
        params: &["n"],
        description: "Sym^n of a surface with four A1 points, with Picard layer",
    },
    BuilderInfo {
        name: "nodal-smallres",
        params: &["k"],
        description: "k nodes with two small resolutions each",
    },
    BuilderInfo {
        name: "wreath-torus",
        params: &["m", "n"],
        description: "Sym^n of a 2-torus quotient by the cyclic group of order m",
    },
];

/// Builds a catalog model from a spec such as `bn-wreath:3` or
/// `wreath-torus:6:2`.
pub fn build(spec: &str) -> Result<StratifiedModel, BuildError> {
    let mut parts = spec.split(':');
    let name = parts.next().unwrap_or_default();
    let info = CATALOG
        .iter()
        .find(|b| b.name == name)
        .ok_or_else(|| BuildError::UnknownBuilder(name.to_string()))?;
    let raw: Vec<&str> = parts.collect();
    if raw.len() != info.params.len() {
        return Err(BuildError::Arity {
            name: name.to_string(),
            expected: info.params.len(),
            found: raw.len(),
        });
    }
    let params = raw
        .iter()
        .map(|v| {
            v.parse::<u32>().map_err(|e| BuildError::Parameter {
                name: name.to_string(),
                value: v.to_string(),
                reason: e.to_string(),
            })
        })
        .collect::<Result<Vec<u32>, _>>()?;
    match name {
        "monodromy-swap" => Ok(monodromy_swap_model()),
        "min-orbit-cube" => Ok(min_orbit_cube_model()),
        "bn-wreath" => bn_wreath_model(params[0]),
        "nodal-smallres" => nodal_smallres_model(params[0]),
        "wreath-torus" => wreath_torus_model(params[0], params[1]),
        _ => unreachable!("catalog and dispatch agree"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulas::DuValType;
    use crate::sheaf::{brute_force_sections, count_sections, global_sections, projectivity_verdict, Verdict};
    use crate::stratspace::gen_eval;
    use num_bigint::BigUint;

    fn count(m: &StratifiedModel) -> u64 {
        count_sections(m).unwrap().to_u64().unwrap()
    }

    #[test]
    fn monodromy_swap() {
        let mut m = monodromy_swap_model();
        assert!(m.validate().is_valid());
        assert_eq!(count(&m), 0);
        m.strata[0].monodromy.clear();
        assert_eq!(count(&m), 2);
    }

    #[test]
    fn min_orbit_cube() {
        let m = min_orbit_cube_model();
        assert_eq!(count(&m), 8);
        assert_eq!(brute_force_sections(&m).unwrap().len(), 8);
        let minimal: usize = m.minimal_strata().iter().map(|&i| m.strata[i].stalk.len()).product();
        assert_eq!(minimal, 64);
        // L1 = (r2, r3) projects to r3 on J12
        let l1 = m.stratum("L1").unwrap();
        let e = l1.stalk.index_of_label("(1,2)").unwrap();
        let image = gen_eval(&m, 0, e).unwrap();
        assert_eq!(m.stratum("J12").unwrap().stalk.label(image), "2");
    }

    #[test]
    fn min_orbit_cube_without_one_minimal_stratum() {
        let mut m = min_orbit_cube_model();
        m.strata.retain(|s| s.id != "L3");
        m.arrows.retain(|a| a.source != "L3");
        assert_eq!(brute_force_sections(&m).unwrap().len(), 8);
        assert_eq!(count(&m), 8);
    }

    #[test]
    fn bn_counts_and_verdicts() {
        for n in 1..=6u32 {
            let m = bn_wreath_model(n).unwrap();
            assert_eq!(count(&m), (n as u64).pow(4), "n = {n}");
        }
        for n in 1..=3 {
            let m = bn_wreath_model(n).unwrap();
            for s in global_sections(&m).unwrap() {
                assert_eq!(projectivity_verdict(&m, &s).unwrap().0, Verdict::GloballyProjective);
            }
        }
    }

    #[test]
    fn nodal_smallres() {
        for k in 2..=4u32 {
            let m = nodal_smallres_model(k).unwrap();
            let sections = global_sections(&m).unwrap();
            assert_eq!(sections.len(), 1 << k);
            for s in &sections {
                let (v, w) = projectivity_verdict(&m, s).unwrap();
                assert_eq!(v, Verdict::AmpleSectionExistsGerbeUnchecked);
                assert!(w.is_some());
            }
        }
    }

    #[test]
    fn wreath_torus_counts() {
        for n in 1..=6 {
            assert_eq!(
                count(&wreath_torus_model(2, n).unwrap()),
                count(&bn_wreath_model(n).unwrap())
            );
        }
        assert_eq!(count(&wreath_torus_model(3, 1).unwrap()), 1);
        assert_eq!(count_sections(&wreath_torus_model(6, 2).unwrap()).unwrap(), BigUint::from(132u32 * 5 * 2));
        assert_eq!(bellamy_count(DuValType::A(5), 2).unwrap(), BigUint::from(132u32));
    }

    #[test]
    fn sym_duval_essential() {
        let p = SurfaceProfile::new(vec![DuValType::A(1), DuValType::A(2)]);
        assert_eq!(count(&sym_duval_model(&p, 2).unwrap()), 10);
    }

    #[test]
    fn catalog_dispatch() {
        assert_eq!(count(&build("bn-wreath:3").unwrap()), 81);
        assert_eq!(count(&build("wreath-torus:2:2").unwrap()), 16);
        assert!(matches!(build("nope"), Err(BuildError::UnknownBuilder(_))));
        assert!(matches!(build("bn-wreath"), Err(BuildError::Arity { .. })));
        assert!(matches!(build("bn-wreath:x"), Err(BuildError::Parameter { .. })));
        assert!(matches!(build("wreath-torus:5:2"), Err(BuildError::Parameter { .. })));
        for b in CATALOG {
            let spec = std::iter::once(b.name.to_string())
                .chain(b.params.iter().map(|_| "2".to_string()))
                .collect::<Vec<_>>()
                .join(":");
            assert!(build(&spec).unwrap().validate().is_valid());
        }
    }
}
