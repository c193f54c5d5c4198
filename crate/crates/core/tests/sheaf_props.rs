use std::collections::BTreeMap;

use num_bigint::BigUint;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod common;

use stratasheaf::models::{bn_wreath_model, min_orbit_cube_model, nodal_smallres_model, wreath_torus_model};
use stratasheaf::sheaf::{
    ample_section, brute_force_sections, count_sections, global_sections, is_section, verify_witness,
};
use stratasheaf::stratspace::{gen_eval, product_model, HasseArrow, Stalk, StratifiedModel, Stratum};

fn valid_random_model(seed: u64) -> StratifiedModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = common::random_model(&mut rng);
    assert!(m.validate().is_valid(), "{}", m.validate());
    m
}

#[test]
fn engine_matches_brute_force_on_random_models() {
    for seed in 0..150 {
        let m = valid_random_model(seed);
        let fast = global_sections(&m).unwrap();
        let mut sorted = fast.clone();
        sorted.sort();
        assert_eq!(sorted, brute_force_sections(&m).unwrap(), "seed {seed}");
        assert_eq!(count_sections(&m).unwrap(), BigUint::from(fast.len()), "seed {seed}");
    }
}

#[test]
fn sections_are_sound() {
    for seed in 200..260 {
        let m = valid_random_model(seed);
        for s in global_sections(&m).unwrap() {
            assert!(is_section(&m, &s).unwrap());
        }
    }
}

#[test]
fn enumeration_order_is_deterministic() {
    let m = valid_random_model(7);
    assert_eq!(global_sections(&m).unwrap(), global_sections(&m).unwrap());
}

#[test]
fn minimal_strata_determine_sections() {
    // no monodromy and every non-minimal stratum reached by an arrow
    for seed in 300..400 {
        let mut m = valid_random_model(seed);
        for s in &mut m.strata {
            s.monodromy.clear();
        }
        let minimal = m.minimal_strata();
        let mut seen = BTreeMap::new();
        for s in global_sections(&m).unwrap() {
            let key: Vec<usize> = minimal.iter().map(|&i| s.assignment[i]).collect();
            assert!(seen.insert(key, s).is_none(), "seed {seed}");
        }
    }
}

/// Adds an open stratum with a singleton stalk above every stratum that has
/// no outgoing arrow, so each stratum generalizes to it.
fn with_open_stratum(mut m: StratifiedModel) -> StratifiedModel {
    let sinks: Vec<(String, usize)> = m
        .strata
        .iter()
        .filter(|s| !m.arrows.iter().any(|a| a.source == s.id))
        .map(|s| (s.id.clone(), s.stalk.len()))
        .collect();
    m.strata.push(Stratum::new("open", 10, Stalk::singleton()));
    for (id, len) in sinks {
        m.arrows.push(HasseArrow::explicit(&id, "open", vec![0; len]));
    }
    m
}

#[test]
fn product_counts_multiply() {
    // with a common open stratum a product section splits into its factors
    let mut checked = 0;
    for seed in 400..480 {
        let a = with_open_stratum(valid_random_model(seed));
        let b = with_open_stratum(valid_random_model(seed + 1000));
        if a.strata.len() * b.strata.len() > 20 {
            continue;
        }
        let p = product_model(&a, &b).unwrap();
        assert!(p.validate().is_valid(), "{}", p.validate());
        for s in &a.strata {
            for t in &b.strata {
                let id = format!("({},{})", s.id, t.id);
                assert_eq!(p.stratum(&id).unwrap().stalk.len(), s.stalk.len() * t.stalk.len());
            }
        }
        assert_eq!(
            count_sections(&p).unwrap(),
            count_sections(&a).unwrap() * count_sections(&b).unwrap(),
            "seeds {seed}"
        );
        checked += 1;
    }
    assert!(checked >= 20, "only {checked} products checked");
}

#[test]
fn builder_products_multiply() {
    let a = nodal_smallres_model(2).unwrap();
    let b = min_orbit_cube_model();
    let p = product_model(&a, &b).unwrap();
    assert_eq!(count_sections(&p).unwrap(), BigUint::from(4u32 * 8));
}

#[test]
fn composite_arrows_compose() {
    // declare L1 -> open next to L1 -> J12 -> open and compare
    let mut m = min_orbit_cube_model();
    let direct = m.arrows.len();
    m.arrows.push(HasseArrow::explicit("L1", "open", vec![0; 4]));
    assert!(m.validate().is_valid());
    let first = m.arrows.iter().position(|a| a.source == "L1" && a.target == "J12").unwrap();
    let second = m.arrows.iter().position(|a| a.source == "J12" && a.target == "open").unwrap();
    for e in 0..4 {
        let via = gen_eval(&m, second, gen_eval(&m, first, e).unwrap()).unwrap();
        assert_eq!(gen_eval(&m, direct, e).unwrap(), via);
    }
    let bn = bn_wreath_model(3).unwrap();
    let mut with_composite = bn.clone();
    with_composite.arrows.push(HasseArrow::linear(
        "D(+1,+1)",
        "open",
        stratasheaf::exactmath::RatMatrix::zeros(0, 2),
    ));
    assert_eq!(count_sections(&with_composite).unwrap(), count_sections(&bn).unwrap());
}

#[test]
fn witnesses_reverify() {
    for m in [nodal_smallres_model(3).unwrap(), bn_wreath_model(2).unwrap()] {
        for s in global_sections(&m).unwrap() {
            let w = ample_section(&m, &s).unwrap().unwrap();
            assert!(verify_witness(&m, &s, &w).unwrap());
            let mut broken = w.clone();
            for v in broken.vectors.values_mut() {
                for x in v.iter_mut() {
                    *x = -x.clone();
                }
            }
            assert!(!verify_witness(&m, &s, &broken).unwrap());
        }
    }
}

#[test]
fn random_models_with_germs_give_checkable_witnesses() {
    for seed in 500..560 {
        let m = valid_random_model(seed);
        for s in global_sections(&m).unwrap() {
            if let Ok(Some(w)) = ample_section(&m, &s) {
                assert!(verify_witness(&m, &s, &w).unwrap(), "seed {seed}");
            }
        }
    }
}

#[test]
fn wreath_torus_matches_bn() {
    for n in 1..=6 {
        assert_eq!(
            count_sections(&wreath_torus_model(2, n).unwrap()).unwrap(),
            count_sections(&bn_wreath_model(n).unwrap()).unwrap()
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn count_equals_listing(seed in any::<u64>()) {
        let m = valid_random_model(seed);
        prop_assert_eq!(
            count_sections(&m).unwrap(),
            BigUint::from(global_sections(&m).unwrap().len())
        );
    }
}
