//! Random inputs shared by the property tests and the acceptance suite.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use stratasheaf::arrangement::{normalize, Arrangement};
use stratasheaf::exactmath::{rat_vec, RatMatrix, RatVector};
use stratasheaf::stratspace::{
    Generalization, HasseArrow, MonodromyGenerator, Stalk, StratifiedModel, Stratum,
};

fn nonzero_vec(rng: &mut ChaCha8Rng, dim: usize, bound: i64) -> RatVector {
    loop {
        let v: Vec<i64> = (0..dim).map(|_| rng.gen_range(-bound..=bound)).collect();
        if v.iter().any(|&x| x != 0) {
            return rat_vec(&v);
        }
    }
}

/// Dimension 1 to 4, up to 8 hyperplanes, sometimes inside a random cone.
pub fn random_arrangement(rng: &mut ChaCha8Rng) -> Arrangement {
    let dim = rng.gen_range(1..=4);
    let m = rng.gen_range(0..=8);
    let normals: Vec<RatVector> = (0..m).map(|_| nonzero_vec(rng, dim, 3)).collect();
    let cone: Vec<RatVector> = if rng.gen_bool(0.4) {
        (0..rng.gen_range(1..=dim)).map(|_| nonzero_vec(rng, dim, 2)).collect()
    } else {
        Vec::new()
    };
    normalize(dim, &normals, &cone).unwrap()
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Arrangements in general position with their expected chamber counts:
/// central ones (2 * sum_{i<d} C(m-1, i)) and affine ones in R^d
/// (sum_{i<=d} C(m, i)), the latter homogenized into the half-space
/// x_{d+1} > 0 of R^{d+1}.
pub fn general_position_cases() -> Vec<(Arrangement, u64)> {
    let central: &[(usize, &[&[i64]])] = &[
        (2, &[&[1, 0], &[0, 1], &[1, 1], &[1, -2]]),
        (3, &[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1], &[1, 1, 1], &[1, 2, 5]]),
        (3, &[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1], &[1, 1, 1]]),
        (4, &[&[1, 0, 0, 0], &[0, 1, 0, 0], &[0, 0, 1, 0], &[0, 0, 0, 1], &[1, 1, 1, 1], &[1, 2, 3, 5]]),
    ];
    // affine hyperplanes a.x = b written as (a, -b)
    let affine: &[(usize, &[&[i64]])] = &[
        (1, &[&[1, 0], &[1, -1], &[1, -3]]),
        (2, &[&[1, 0, 0], &[0, 1, 0], &[1, 1, -1], &[1, -1, -3]]),
        (2, &[&[1, 0, 0], &[0, 1, 0], &[1, 1, -1], &[1, -1, -3], &[1, 2, -7]]),
        (3, &[&[1, 0, 0, 0], &[0, 1, 0, 0], &[0, 0, 1, 0], &[1, 1, 1, -1], &[1, 2, 4, -3]]),
    ];
    let mut out = Vec::new();
    for (d, normals) in central {
        let n: Vec<RatVector> = normals.iter().map(|v| rat_vec(v)).collect();
        let m = normals.len() as u64;
        let expected = 2 * (0..*d as u64).map(|i| binomial(m - 1, i)).sum::<u64>();
        out.push((normalize(*d, &n, &[]).unwrap(), expected));
    }
    for (d, normals) in affine {
        let n: Vec<RatVector> = normals.iter().map(|v| rat_vec(v)).collect();
        let mut up = vec![0i64; d + 1];
        up[*d] = 1;
        let m = normals.len() as u64;
        let expected = (0..=*d as u64).map(|i| binomial(m, i)).sum::<u64>();
        out.push((normalize(d + 1, &n, &[rat_vec(&up)]).unwrap(), expected));
    }
    out
}

fn line_germ() -> Stalk {
    Stalk::chambers(&Arrangement::from_i64(1, &[&[1]], &[]).unwrap()).unwrap()
}

/// Up to 6 strata with stalks of at most 4 elements: explicit stalks,
/// occasionally a line germ with two chambers. Arrows go up in dimension
/// with random tables, sometimes in parallel; monodromy is random.
pub fn random_model(rng: &mut ChaCha8Rng) -> StratifiedModel {
    let n = rng.gen_range(1..=6);
    let mut strata = Vec::new();
    for i in 0..n {
        let dim = rng.gen_range(0..=3);
        let stalk = if rng.gen_bool(0.2) {
            line_germ()
        } else {
            let size = if rng.gen_bool(0.05) { 0 } else { rng.gen_range(1..=4) };
            Stalk::explicit((0..size).map(|e| format!("e{e}")))
        };
        let mut s = Stratum::new(format!("s{i}"), dim, stalk);
        if s.stalk.len() > 1 && rng.gen_bool(0.3) {
            let g = match &s.stalk {
                Stalk::Chambers(_) => MonodromyGenerator::matrix(RatMatrix::from_i64(&[&[-1]])),
                Stalk::Explicit(_) => {
                    let mut p: Vec<usize> = (0..s.stalk.len()).collect();
                    p.shuffle(rng);
                    MonodromyGenerator::permutation(p)
                }
            };
            s.monodromy.push(g);
        }
        strata.push(s);
    }
    let mut arrows = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if strata[i].dim >= strata[j].dim || !rng.gen_bool(0.45) {
                continue;
            }
            let parallel = if rng.gen_bool(0.15) { 2 } else { 1 };
            for tag in 0..parallel {
                let (src, tgt) = (&strata[i], &strata[j]);
                let both_germs = matches!(src.stalk, Stalk::Chambers(_)) && matches!(tgt.stalk, Stalk::Chambers(_));
                let gen = if both_germs && rng.gen_bool(0.7) {
                    let c = *[-2i64, -1, 1, 3].choose(rng).unwrap();
                    Generalization::Linear(RatMatrix::from_i64(&[&[c]]))
                } else if tgt.stalk.is_empty() && !src.stalk.is_empty() {
                    // no total map into an empty stalk; skip the arrow
                    continue;
                } else {
                    let t = tgt.stalk.len();
                    Generalization::Explicit((0..src.stalk.len()).map(|_| rng.gen_range(0..t)).collect())
                };
                arrows.push(HasseArrow {
                    source: src.id.clone(),
                    target: tgt.id.clone(),
                    tag,
                    gen,
                });
            }
        }
    }
    StratifiedModel {
        strata,
        arrows,
        ..Default::default()
    }
}
