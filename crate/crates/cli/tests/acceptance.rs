//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stratasheaf::arrangement::{brute_force_chambers, enumerate_chambers};
use stratasheaf::exactmath::{ratio, IntMatrix};
use stratasheaf::formulas::{bellamy_count, e_polynomial_check, sym_duval_count, torus_surface_profile, DuValType};
use stratasheaf::models::{
    bn_wreath_model, min_orbit_cube_model, monodromy_swap_model, nodal_smallres_model, wreath_torus_model,
};
use stratasheaf::sheaf::{
    brute_force_sections, classify, count_sections, global_sections, verify_witness, Verdict,
};
use stratasheaf::torusquot::{
    binary_tetrahedral_model, element_order, fixed_locus, gamma, pgl3_group, singular_orbits, stabilizer,
    ResolvabilityVerdict, TorsionPoint,
};
use stratasheaf_cli::{cmd_classify, ClassifyOptions, Input};

#[path = "../../core/tests/common/mod.rs"]
mod common;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn bellamy_polynomials() -> Outcome {
    for t in [DuValType::E6, DuValType::E7, DuValType::E8] {
        for n in 1..=50 {
            let product = bellamy_count(t, n).map_err(|e| e.to_string())?;
            let poly = e_polynomial_check(t, n).map_err(|e| e.to_string())?;
            ensure(product == poly, || format!("{t} n={n}: {product} != {poly}"))?;
        }
    }
    let e6 = bellamy_count(DuValType::E6, 2).map_err(|e| e.to_string())?;
    ensure(e6 == BigUint::from(833u32), || format!("E6 n=2 gives {e6}"))?;
    Ok("E6, E7, E8 agree for n = 1..50; E6 at n = 2 is 833".into())
}

fn bn_counts() -> Outcome {
    let mut counts = Vec::new();
    for n in 1..=6u32 {
        let count_only = ClassifyOptions {
            list_sections: false,
            max_list: 0,
        };
        let report = cmd_classify(&Input::Builtin(format!("bn-wreath:{n}")), count_only)
            .map_err(|e| e.to_string())?
            .report;
        let count = report["results"]["section_count"].as_str().unwrap_or_default().to_string();
        let expected = (n as u64).pow(4).to_string();
        ensure(count == expected, || format!("n={n}: {count} sections, expected {expected}"))?;
        let m = bn_wreath_model(n).map_err(|e| e.to_string())?;
        let verdicts = classify(&m, 10_000).map_err(|e| e.to_string())?;
        let sections = verdicts.sections.ok_or("listing skipped")?;
        ensure(sections.iter().all(|s| s.verdict == Verdict::GloballyProjective), || {
            format!("n={n}: a section is not GloballyProjective")
        })?;
        ensure(
            sections
                .iter()
                .all(|s| s.witness.as_ref().is_some_and(|w| verify_witness(&m, &s.section, w).unwrap_or(false))),
            || format!("n={n}: a witness fails to verify"),
        )?;
        counts.push(count);
    }
    Ok(format!("section counts {} for n = 1..6, all GloballyProjective", counts.join(", ")))
}

fn incompatibility() -> Outcome {
    let m = min_orbit_cube_model();
    let space: usize = m.strata.iter().filter(|s| s.stalk.len() > 1 && s.dim == 4).map(|s| s.stalk.len()).product();
    let count = count_sections(&m).map_err(|e| e.to_string())?;
    let brute = brute_force_sections(&m).map_err(|e| e.to_string())?.len();
    ensure(space == 64, || format!("search space {space}"))?;
    ensure(count == BigUint::from(8u32) && brute == 8, || format!("{count} sections ({brute} by brute force)"))?;
    Ok(format!("{count} of {space} assignments on the minimal strata"))
}

fn monodromy_obstruction() -> Outcome {
    let m = monodromy_swap_model();
    let with = count_sections(&m).map_err(|e| e.to_string())?;
    let mut free = m.clone();
    for s in &mut free.strata {
        s.monodromy.clear();
    }
    let without = count_sections(&free).map_err(|e| e.to_string())?;
    ensure(with.is_zero() && without == BigUint::from(2u32), || {
        format!("{with} with monodromy, {without} without")
    })?;
    Ok("0 sections with the swap, 2 without".into())
}

/// Fixed points of `g` found by scanning `(1/d) Z^k / Z^k`.
fn scan_fixed_points(g: &IntMatrix, d: i64) -> usize {
    let k = g.rows();
    let mut count = 0;
    let mut idx = vec![0i64; k];
    loop {
        let p = TorsionPoint::new(idx.iter().map(|&a| ratio(a, d)).collect());
        if p.act(g) == p {
            count += 1;
        }
        let mut i = 0;
        while i < k {
            idx[i] += 1;
            if idx[i] < d {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
        if i == k {
            return count;
        }
    }
}

fn torus_fixed_points() -> Outcome {
    let mut seen = Vec::new();
    for (m, expected) in [(2u32, 4usize), (3, 3), (4, 2), (6, 1)] {
        let g = gamma(m).ok_or(format!("no gamma{m}"))?;
        let locus = fixed_locus(&g);
        let det = g.minus_identity().det().abs();
        let d: i64 = det.to_string().parse().map_err(|_| "det overflow".to_string())?;
        let scanned = scan_fixed_points(&g, d);
        ensure(locus.is_finite(), || format!("gamma{m}: fixed locus not finite"))?;
        ensure(
            locus.torsion_reps.len() == expected && scanned == expected && det == BigInt::from(expected),
            || format!("gamma{m}: snf {}, scan {scanned}, |det| {det}", locus.torsion_reps.len()),
        )?;
        seen.push(expected.to_string());
    }
    Ok(format!("gamma2, gamma3, gamma4, gamma6 fix {} points", seen.join(", ")))
}

fn pgl3_example() -> Outcome {
    let g = pgl3_group();
    let cycle = g
        .elements()
        .iter()
        .find(|h| element_order(h) == 3)
        .ok_or("no element of order 3")?;
    let fixed = fixed_locus(cycle);
    ensure(fixed.is_finite() && fixed.torsion_reps.len() == 9, || {
        format!("3-cycle fixes {} points", fixed.torsion_reps.len())
    })?;
    let report = singular_orbits(&g);
    let c3: Vec<_> = report
        .orbits
        .iter()
        .filter(|o| o.stabilizer.order() == 3 && o.stabilizer.is_cyclic())
        .collect();
    ensure(c3.len() == 4, || format!("{} orbits with stabilizer C3", c3.len()))?;
    ensure(c3.iter().all(|o| o.verdict == ResolvabilityVerdict::Nonresolvable), || {
        "a C3 orbit is not Nonresolvable".into()
    })?;
    let points: usize = c3.iter().map(|o| o.orbit.len()).sum();
    Ok(format!(
        "3-cycle fixes 9 points; 4 Nonresolvable C3 singularities ({points} torus points in 4 orbits)"
    ))
}

fn binary_tetrahedral() -> Outcome {
    let g = binary_tetrahedral_model();
    ensure(g.order() == 24, || format!("order {}", g.order()))?;
    let minus = IntMatrix::identity(4).map(|x| -x.clone());
    ensure(g.contains(&minus), || "-I missing".into())?;
    let fix = fixed_locus(&minus);
    ensure(fix.torsion_reps.len() == 16, || format!("-I fixes {}", fix.torsion_reps.len()))?;
    let exactly_c2: Vec<&TorsionPoint> = fix
        .torsion_reps
        .iter()
        .filter(|p| stabilizer(&g, p).order() == 2)
        .collect();
    ensure(exactly_c2.len() == 12, || format!("{} points with stabilizer C2", exactly_c2.len()))?;
    let report = singular_orbits(&g);
    let c2: Vec<_> = report.orbits.iter().filter(|o| o.stabilizer.order() == 2).collect();
    ensure(c2.len() == 1 && c2[0].orbit.len() == 12, || format!("{} C2 orbits", c2.len()))?;
    ensure(c2[0].verdict == ResolvabilityVerdict::Nonresolvable, || c2[0].verdict.to_string())?;
    Ok("order 24; -I fixes 16 points; 12 have stabilizer C2, one Nonresolvable orbit".into())
}

fn chamber_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0008);
    let mut checked = 0;
    let mut attempts = 0;
    while checked < 200 {
        attempts += 1;
        ensure(attempts < 2000, || "too many rejected arrangements".into())?;
        let a = common::random_arrangement(&mut rng);
        let (Ok(fast), Ok(slow)) = (enumerate_chambers(&a), brute_force_chambers(&a)) else {
            continue;
        };
        ensure(fast == slow, || format!("mismatch on {a:?}"))?;
        checked += 1;
    }
    let cases = common::general_position_cases();
    for (a, expected) in &cases {
        let got = enumerate_chambers(a).map_err(|e| e.to_string())?.len() as u64;
        ensure(got == *expected, || format!("general position: {got} != {expected} on {a:?}"))?;
    }
    Ok(format!("{checked} random arrangements agree; {} general-position counts match", cases.len()))
}

fn sheaf_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0009);
    let mut checked = 0;
    let mut nonzero = 0;
    while checked < 100 {
        let m = common::random_model(&mut rng);
        let (Ok(fast), Ok(slow)) = (global_sections(&m), brute_force_sections(&m)) else {
            continue;
        };
        let mut sorted = fast.clone();
        sorted.sort();
        ensure(sorted == slow, || format!("mismatch on model #{checked}"))?;
        let count = count_sections(&m).map_err(|e| e.to_string())?;
        ensure(count == BigUint::from(fast.len()), || format!("count {count} vs listing {}", fast.len()))?;
        nonzero += usize::from(!fast.is_empty());
        checked += 1;
    }
    Ok(format!("{checked} random models agree ({nonzero} with sections)"))
}

fn projectivity_layers() -> Outcome {
    let mut total = 0;
    for k in 1..=5u32 {
        let m = nodal_smallres_model(k).map_err(|e| e.to_string())?;
        let report = classify(&m, 10_000).map_err(|e| e.to_string())?;
        let sections = report.sections.ok_or("listing skipped")?;
        ensure(sections.len() == 1 << k, || format!("k={k}: {} sections", sections.len()))?;
        for s in &sections {
            ensure(s.verdict == Verdict::AmpleSectionExistsGerbeUnchecked, || {
                format!("k={k}: verdict {}", s.verdict)
            })?;
            let w = s.witness.as_ref().ok_or("missing witness")?;
            ensure(verify_witness(&m, &s.section, w).map_err(|e| e.to_string())?, || {
                format!("k={k}: witness fails")
            })?;
            ensure(w.vectors.values().flatten().all(|x| !x.is_zero()), || "degenerate witness".into())?;
        }
        total += sections.len();
    }
    Ok(format!("2^k sections for k = 1..5 ({total} total), all witnessed, none GloballyProjective"))
}

fn cross_module() -> Outcome {
    let mut checked = 0;
    for m in [2u32, 3, 4, 6] {
        let profile = torus_surface_profile(m).map_err(|e| e.to_string())?;
        for n in 1..=5u32 {
            let formula = sym_duval_count(&profile, n as u64).map_err(|e| e.to_string())?;
            let model = wreath_torus_model(m, n).map_err(|e| e.to_string())?;
            let engine = count_sections(&model).map_err(|e| e.to_string())?;
            ensure(formula == engine, || format!("m={m} n={n}: formula {formula}, engine {engine}"))?;
            ensure(!formula.is_zero(), || format!("m={m} n={n}: zero count"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} (m, n) pairs agree"))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("Bellamy counts equal the E-type polynomials", bellamy_polynomials),
        ("B_n wreath model has n^4 globally projective sections", bn_counts),
        ("incompatible minimal strata leave 8 sections", incompatibility),
        ("monodromy swap kills every section", monodromy_obstruction),
        ("torus fixed points of gamma_m", torus_fixed_points),
        ("PGL3 torus quotient", pgl3_example),
        ("binary tetrahedral torus quotient", binary_tetrahedral),
        ("chamber enumeration matches brute force", chamber_oracle),
        ("section engine matches brute force", sheaf_oracle),
        ("nodal small resolutions: ample but not proven projective", projectivity_layers),
        ("surface formula matches wreath-torus engine count", cross_module),
    ];
    let start = Instant::now();
    let mut failures = 0;
    std::panic::set_hook(Box::new(|_| {}));
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1}s]", i + 1),
            Err(why) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {why} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.1}s",
        criteria.len() - failures,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
