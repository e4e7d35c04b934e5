#![allow(dead_code)]

use qcoord_core::{
    Complex64, ComplexMatrix, DensityMatrix, InfoMap, JointDistribution, LatentModel, LocalModel, ProcessSpec,
};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dirichlet(1) sample via normalized exponentials.
pub fn simplex(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..len).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

/// Simplex sample mixed with the uniform row, so every entry is at least
/// `floor / len`.
pub fn interior_simplex(rng: &mut impl Rng, len: usize, floor: f64) -> Vec<f64> {
    simplex(rng, len)
        .into_iter()
        .map(|p| (1.0 - floor) * p + floor / len as f64)
        .collect()
}

/// Random information maps: each stage gets between 1 and `max_labels`
/// labels, assigned to prefixes uniformly.
pub fn random_process(rng: &mut impl Rng, alphabets: Vec<usize>, max_labels: usize) -> ProcessSpec {
    let mut maps = Vec::with_capacity(alphabets.len());
    let mut prefixes = 1usize;
    for &a in &alphabets {
        let labels = rng.gen_range(1..=max_labels.min(prefixes).max(1));
        maps.push(InfoMap::new((0..prefixes).map(|_| rng.gen_range(0..labels)).collect(), labels).unwrap());
        prefixes *= a;
    }
    ProcessSpec::new(alphabets, maps).unwrap()
}

/// Like `random_process`, but stage `shared_stage` (>= 1) is forced to give
/// prefixes 0 and 1 the same label, so the structure is not perfect recall.
pub fn process_with_shared_label(rng: &mut impl Rng, alphabets: Vec<usize>, shared_stage: usize) -> ProcessSpec {
    let mut maps = Vec::with_capacity(alphabets.len());
    let mut prefixes = 1usize;
    for (k, &a) in alphabets.iter().enumerate() {
        let labels = rng.gen_range(1..=prefixes.min(3));
        let mut map: Vec<usize> = (0..prefixes).map(|_| rng.gen_range(0..labels)).collect();
        if k == shared_stage {
            map[1] = map[0];
        }
        maps.push(InfoMap::new(map, labels).unwrap());
        prefixes *= a;
    }
    ProcessSpec::new(alphabets, maps).unwrap()
}

pub fn random_local(rng: &mut impl Rng, proc: &ProcessSpec, floor: f64) -> LocalModel {
    let tables = (0..proc.stages())
        .map(|k| {
            (0..proc.label_count(k))
                .map(|_| interior_simplex(rng, proc.alphabet(k), floor))
                .collect()
        })
        .collect();
    LocalModel::new(tables).unwrap()
}

pub fn random_latent(rng: &mut impl Rng, proc: &ProcessSpec, latent: usize) -> LatentModel {
    let tables = (0..proc.stages())
        .map(|k| {
            (0..latent)
                .map(|_| {
                    (0..proc.label_count(k))
                        .map(|_| simplex(rng, proc.alphabet(k)))
                        .collect()
                })
                .collect()
        })
        .collect();
    LatentModel::new(simplex(rng, latent), tables).unwrap()
}

pub fn random_target(rng: &mut impl Rng, proc: &ProcessSpec) -> JointDistribution {
    JointDistribution::new(proc.alphabet_sizes().to_vec(), simplex(rng, proc.outcome_count())).unwrap()
}

/// Random mixed state of dimension `dim` (Ginibre with `dim` columns).
pub fn random_state(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
    let g = ComplexMatrix::from_rows(
        &(0..dim)
            .map(|_| {
                (0..dim)
                    .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                    .collect()
            })
            .collect::<Vec<_>>(),
    )
    .unwrap();
    let m = &g * &g.adjoint();
    let tr = m.trace().re;
    let m = m.scale_real(1.0 / tr);
    // Symmetrize away rounding so validation sees an exactly Hermitian matrix.
    (&m + &m.adjoint()).scale_real(0.5)
}

pub fn density(m: ComplexMatrix) -> DensityMatrix {
    DensityMatrix::validate(m).unwrap()
}

/// Random single-qubit unitary from Euler angles.
pub fn random_qubit_unitary(rng: &mut impl Rng) -> ComplexMatrix {
    use std::f64::consts::PI;
    let (a, b, c) = (
        rng.gen::<f64>() * 2.0 * PI,
        rng.gen::<f64>() * PI,
        rng.gen::<f64>() * 2.0 * PI,
    );
    let (s, co) = (b / 2.0).sin_cos();
    let e = |x: f64| Complex64::from_polar(1.0, x);
    ComplexMatrix::from_rows(&[
        vec![e(-(a + c) / 2.0) * co, -e(-(a - c) / 2.0) * s],
        vec![e((a - c) / 2.0) * s, e((a + c) / 2.0) * co],
    ])
    .unwrap()
}

/// Moves `delta` of conditional probability from outcome 0 to outcome 1 at
/// `stage` within the branch `prefix`, leaving every later conditional
/// unchanged.
pub fn shift_branch(
    target: &JointDistribution,
    proc: &ProcessSpec,
    stage: usize,
    prefix: usize,
    delta: f64,
) -> JointDistribution {
    let rows = qcoord_core::conditionals(target, proc, stage).unwrap();
    let row = &rows.iter().find(|r| r.prefix_index == prefix).unwrap().row;
    assert!(row[0] > delta, "branch row too close to the boundary");
    let probs = (0..proc.outcome_count())
        .map(|i| {
            let p = target.prob(i);
            if proc.prefix_of(i, stage) != prefix {
                return p;
            }
            match proc.decode(i)[stage] {
                0 => p * (row[0] - delta) / row[0],
                1 => p * (row[1] + delta) / row[1],
                _ => p,
            }
        })
        .collect();
    JointDistribution::new(proc.alphabet_sizes().to_vec(), probs).unwrap()
}
