//! Quantum implementations built from latent-variable descriptions.
//!
//! * [`build_thm1`]: a latent-variable model becomes a state that is diagonal
//!   in a product basis, with each subsystem carrying a copy of the latent
//!   label, and diagonal POVMs whose entries are the model's conditional
//!   rules.
//! * [`build_diag_universal`]: the same construction with the complete
//!   outcome tuple as latent label, so every fixed joint distribution is
//!   reproduced under every information structure.
//! * [`build_thm2`]: a two-stage construction in which the second subsystem
//!   holds pure states that need not be diagonal in any fixed basis.
//! * [`worked_example`]: the three concrete two- and three-qubit examples.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::classical::{eval_latent, LatentModel};
use crate::distribution::JointDistribution;
use crate::error::{structural, Error, Result};
use crate::linalg::{inner, norm, span_projector, ComplexMatrix};
use crate::process::ProcessSpec;
use crate::quantum::{born_joint, commutation_witness, DensityMatrix, Povm, QuantumModel};

/// Tolerance for orthonormality, unit norm and cross-class orthogonality.
pub const VECTOR_TOL: f64 = 1e-10;

/// An explicit convex combination of product states,
/// `sum_i weights[i] * factors[i][0] ⊗ factors[i][1] ⊗ ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableDecomposition {
    pub weights: Vec<f64>,
    pub factors: Vec<Vec<ComplexMatrix>>,
}

impl SeparableDecomposition {
    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn subsystem_dims(&self) -> Vec<usize> {
        self.factors
            .first()
            .map(|f| f.iter().map(ComplexMatrix::rows).collect())
            .unwrap_or_default()
    }

    /// The density matrix this decomposition describes.
    pub fn state(&self) -> Result<DensityMatrix> {
        let dim: usize = self.subsystem_dims().iter().product();
        let mut rho = ComplexMatrix::zeros(dim, dim);
        for (w, fs) in self.weights.iter().zip(&self.factors) {
            if *w == 0.0 {
                continue;
            }
            rho = &rho + &ComplexMatrix::kron_all(fs).scale_real(*w);
        }
        DensityMatrix::validate(rho)
    }
}

/// Validates and returns a separable decomposition: `weights` must be a
/// probability vector and every component must list one density matrix per
/// subsystem, with the same subsystem dimensions throughout.
pub fn separable_state(weights: Vec<f64>, factors: Vec<Vec<ComplexMatrix>>) -> Result<SeparableDecomposition> {
    if weights.len() != factors.len() || weights.is_empty() {
        return Err(Error::Construction(format!(
            "{} weights for {} product components",
            weights.len(),
            factors.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0)
        || (weights.iter().sum::<f64>() - 1.0).abs() > crate::distribution::NORMALIZATION_TOL
    {
        return Err(Error::Construction(format!(
            "weights {weights:?} are not a probability vector"
        )));
    }
    let dims: Vec<usize> = factors[0].iter().map(ComplexMatrix::rows).collect();
    for (i, fs) in factors.iter().enumerate() {
        let these: Vec<usize> = fs.iter().map(ComplexMatrix::rows).collect();
        if these != dims {
            return Err(Error::Construction(format!(
                "component {i} has subsystem dims {these:?}, expected {dims:?}"
            )));
        }
        for (k, f) in fs.iter().enumerate() {
            DensityMatrix::validate(f.clone())
                .map_err(|e| Error::Construction(format!("component {i} subsystem {k}: {e}")))?;
        }
    }
    Ok(SeparableDecomposition { weights, factors })
}

/// A quantum model together with the product decomposition of its state.
#[derive(Debug, Clone, PartialEq)]
pub struct Construction {
    pub model: QuantumModel,
    pub decomposition: SeparableDecomposition,
}

fn basis_projector(dim: usize, i: usize) -> ComplexMatrix {
    let mut d = vec![0.0; dim];
    d[i] = 1.0;
    ComplexMatrix::diagonal(&d)
}

/// Every subsystem gets dimension `|S|`; the state is
/// `sum_s p(s) |s><s| ⊗ ... ⊗ |s><s|` and the POVM of stage `k` at label `y`
/// is `M_x = sum_s P_k(x | s, y) |s><s|`.
pub fn build_thm1(model: &LatentModel, proc: &ProcessSpec) -> Result<Construction> {
    model.check_against(proc)?;
    let n = proc.stages();
    let ns = model.latent_count();

    let decomposition = SeparableDecomposition {
        weights: model.latent_probs().to_vec(),
        factors: (0..ns).map(|s| vec![basis_projector(ns, s); n]).collect(),
    };
    // Diagonal entry of |s s ... s>: s * (1 + S + S^2 + ...).
    let repeat: usize = (0..n).map(|k| ns.pow(k as u32)).sum();
    let mut diag = vec![0.0; ns.pow(n as u32)];
    for (s, &p) in model.latent_probs().iter().enumerate() {
        diag[s * repeat] = p;
    }
    let state = DensityMatrix::validate(ComplexMatrix::diagonal(&diag))?;

    let mut measurements = Vec::with_capacity(n);
    for k in 0..n {
        let mut per_label = Vec::with_capacity(proc.label_count(k));
        for y in 0..proc.label_count(k) {
            let elements = (0..proc.alphabet(k))
                .map(|x| {
                    let d: Vec<f64> = (0..ns).map(|s| model.row(k, s, y)[x]).collect();
                    ComplexMatrix::diagonal(&d)
                })
                .collect();
            per_label.push(Povm::validate(elements, ns)?);
        }
        measurements.push(per_label);
    }
    Ok(Construction {
        model: QuantumModel::new(vec![ns; n], state, measurements)?,
        decomposition,
    })
}

/// Uses every outcome tuple as a latent label with `p(s) = target(s)` and
/// deterministic rules `x_k = s_k`.
pub fn build_diag_universal(target: &JointDistribution, proc: &ProcessSpec) -> Result<Construction> {
    target.check_against(proc)?;
    let tuples: Vec<Vec<usize>> = (0..proc.outcome_count()).map(|i| proc.decode(i)).collect();
    let maps: Vec<Vec<usize>> = (0..proc.stages())
        .map(|k| tuples.iter().map(|t| t[k]).collect())
        .collect();
    let latent = LatentModel::deterministic(target.probs().to_vec(), &maps, proc)?;
    build_thm1(&latent, proc)
}

/// Inputs of the two-stage construction with pure second-stage states.
#[derive(Debug, Clone, PartialEq)]
pub struct Thm2Spec {
    pub latent_probs: Vec<f64>,
    /// First-stage outcome for each latent value.
    pub g: Vec<usize>,
    /// Second-stage outcome for each latent value.
    pub h: Vec<usize>,
    /// Orthonormal vectors `|s>` on the first subsystem, one per latent value.
    pub basis_a: Vec<Vec<Complex64>>,
    /// Unit vectors `|phi_s>` on the second subsystem.
    pub states_b: Vec<Vec<Complex64>>,
    /// Orthonormal basis of the second subsystem against which diagonality
    /// is reported. Empty means the computational basis.
    pub declared_basis_b: Vec<Vec<Complex64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Thm2Construction {
    pub construction: Construction,
    pub process: ProcessSpec,
    /// `sum_s p(s) delta(x1, g(s)) delta(x2, h(s))`.
    pub target: JointDistribution,
    /// Largest commutator norm among the projectors `|phi_s><phi_s|`.
    pub commutation_witness: f64,
    /// Largest off-diagonal modulus of any `|phi_s><phi_s|` written in the
    /// declared basis.
    pub declared_basis_offdiag: f64,
}

impl Thm2Construction {
    pub fn diagonal_in_declared_basis(&self) -> bool {
        self.declared_basis_offdiag <= VECTOR_TOL
    }
}

fn check_orthonormal(vectors: &[Vec<Complex64>], what: &str) -> Result<usize> {
    let dim = vectors.first().map_or(0, Vec::len);
    for (i, v) in vectors.iter().enumerate() {
        if v.len() != dim {
            return Err(structural(format!(
                "{what} vector {i} has length {}, expected {dim}",
                v.len()
            )));
        }
        for (j, w) in vectors.iter().enumerate().skip(i) {
            let expected = if i == j { 1.0 } else { 0.0 };
            let dev = (inner(v, w) - Complex64::new(expected, 0.0)).norm();
            if dev > VECTOR_TOL {
                return Err(Error::Construction(format!(
                    "{what} vectors {i} and {j} are not orthonormal (deviation {dev:e})"
                )));
            }
        }
    }
    Ok(dim)
}

pub fn build_thm2(spec: &Thm2Spec) -> Result<Thm2Construction> {
    let ns = spec.latent_probs.len();
    if ns == 0 {
        return Err(Error::Construction("latent alphabet is empty".into()));
    }
    for (what, len) in [
        ("g", spec.g.len()),
        ("h", spec.h.len()),
        ("basis_a", spec.basis_a.len()),
        ("states_b", spec.states_b.len()),
    ] {
        if len != ns {
            return Err(structural(format!("{what} has {len} entries, expected {ns}")));
        }
    }
    let da = check_orthonormal(&spec.basis_a, "basis_a")?;
    let db = spec.states_b[0].len();
    for (s, phi) in spec.states_b.iter().enumerate() {
        if phi.len() != db {
            return Err(structural(format!(
                "states_b vector {s} has length {}, expected {db}",
                phi.len()
            )));
        }
        let n = norm(phi);
        if (n - 1.0).abs() > VECTOR_TOL {
            return Err(Error::Construction(format!("states_b vector {s} has norm {n}")));
        }
    }
    for s in 0..ns {
        for t in s + 1..ns {
            if spec.h[s] != spec.h[t] {
                let overlap = inner(&spec.states_b[s], &spec.states_b[t]).norm();
                if overlap > VECTOR_TOL {
                    return Err(Error::NotDistinguishable {
                        first: s,
                        second: t,
                        overlap,
                    });
                }
            }
        }
    }
    let declared: Vec<Vec<Complex64>> = if spec.declared_basis_b.is_empty() {
        (0..db)
            .map(|i| {
                (0..db)
                    .map(|j| Complex64::new(f64::from(u8::from(i == j)), 0.0))
                    .collect()
            })
            .collect()
    } else {
        spec.declared_basis_b.clone()
    };
    if check_orthonormal(&declared, "declared_basis_b")? != db || declared.len() != db {
        return Err(Error::Construction(format!(
            "declared_basis_b must hold {db} vectors of length {db}"
        )));
    }

    let a1 = spec.g.iter().max().map_or(1, |m| m + 1);
    let a2 = spec.h.iter().max().map_or(1, |m| m + 1);
    let process = ProcessSpec::oblivious(vec![a1, a2])?;
    let target = eval_latent(
        &LatentModel::deterministic(spec.latent_probs.clone(), &[spec.g.clone(), spec.h.clone()], &process)?,
        &process,
    )?;

    let proj_a: Vec<ComplexMatrix> = spec.basis_a.iter().map(|v| ComplexMatrix::outer(v)).collect();
    let proj_b: Vec<ComplexMatrix> = spec.states_b.iter().map(|v| ComplexMatrix::outer(v)).collect();
    let decomposition = separable_state(
        spec.latent_probs.clone(),
        proj_a
            .iter()
            .zip(&proj_b)
            .map(|(a, b)| vec![a.clone(), b.clone()])
            .collect(),
    )?;
    let state = decomposition.state()?;

    let mut stage1 = vec![ComplexMatrix::zeros(da, da); a1];
    for (s, p) in proj_a.iter().enumerate() {
        stage1[spec.g[s]] = &stage1[spec.g[s]] + p;
    }
    let mut stage2: Vec<ComplexMatrix> = (0..a2)
        .map(|x| {
            let members: Vec<&[Complex64]> = (0..ns)
                .filter(|&s| spec.h[s] == x)
                .map(|s| spec.states_b[s].as_slice())
                .collect();
            span_projector(&members, db, VECTOR_TOL)
        })
        .collect();
    complete_with_residual(&mut stage1, da);
    complete_with_residual(&mut stage2, db);

    let model = QuantumModel::new(
        vec![da, db],
        state,
        vec![vec![Povm::validate(stage1, da)?], vec![Povm::validate(stage2, db)?]],
    )?;

    let declared_matrix = ComplexMatrix::from_rows(&declared)?.adjoint();
    let declared_basis_offdiag = proj_b
        .iter()
        .map(|p| (&(&declared_matrix.adjoint() * p) * &declared_matrix).max_off_diagonal())
        .fold(0.0, f64::max);

    Ok(Thm2Construction {
        commutation_witness: commutation_witness(&proj_b)?,
        declared_basis_offdiag,
        construction: Construction { model, decomposition },
        process,
        target,
    })
}

/// Adds `1 - sum(elements)` to outcome 0.
fn complete_with_residual(elements: &mut [ComplexMatrix], dim: usize) {
    let sum = elements.iter().fold(ComplexMatrix::zeros(dim, dim), |acc, e| &acc + e);
    let residual = &ComplexMatrix::identity(dim) - &sum;
    elements[0] = &elements[0] + &residual;
}

/// The named worked examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkedExample {
    /// `1/2 (|0><0| ⊗ |+><+| + |1><1| ⊗ |-><-|)`, computational measurement on
    /// A, `{|+>, |->}` on B with `|+> -> 1`.
    Illex2,
    /// `1/2 (|00><00| + |11><11|)` with a flipped computational readout on B.
    DiagonalFlip,
    /// Three qubits; the first and third match the latent bit, the second
    /// (measured in the `±` basis) anti-matches it.
    ThreeStage,
}

impl WorkedExample {
    pub const ALL: [WorkedExample; 3] = [
        WorkedExample::Illex2,
        WorkedExample::DiagonalFlip,
        WorkedExample::ThreeStage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WorkedExample::Illex2 => "illex2",
            WorkedExample::DiagonalFlip => "diagonal-flip",
            WorkedExample::ThreeStage => "three-stage",
        }
    }

    pub fn bundle(self) -> Result<ExampleBundle> {
        match self {
            WorkedExample::Illex2 => illex2(),
            WorkedExample::DiagonalFlip => diagonal_flip(),
            WorkedExample::ThreeStage => three_stage(),
        }
    }
}

impl fmt::Display for WorkedExample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WorkedExample {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::UnknownExample {
                name: s.to_string(),
                valid: Self::ALL.map(Self::name).join(", "),
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExampleBundle {
    pub model: QuantumModel,
    pub process: ProcessSpec,
    pub target: JointDistribution,
    pub decomposition: SeparableDecomposition,
}

/// Looks up a worked example by name.
pub fn worked_example(name: &str) -> Result<ExampleBundle> {
    name.parse::<WorkedExample>()?.bundle()
}

fn ket(bits: [f64; 2]) -> Vec<Complex64> {
    bits.iter().map(|&b| Complex64::new(b, 0.0)).collect()
}

fn ket0() -> Vec<Complex64> {
    ket([1.0, 0.0])
}
fn ket1() -> Vec<Complex64> {
    ket([0.0, 1.0])
}
fn ket_plus() -> Vec<Complex64> {
    ket([FRAC_1_SQRT_2, FRAC_1_SQRT_2])
}
fn ket_minus() -> Vec<Complex64> {
    ket([FRAC_1_SQRT_2, -FRAC_1_SQRT_2])
}

fn anti_correlated_target() -> Result<JointDistribution> {
    JointDistribution::new(vec![2, 2], vec![0.0, 0.5, 0.5, 0.0])
}

fn illex2() -> Result<ExampleBundle> {
    let c = build_thm2(&Thm2Spec {
        latent_probs: vec![0.5, 0.5],
        g: vec![0, 1],
        h: vec![1, 0],
        basis_a: vec![ket0(), ket1()],
        states_b: vec![ket_plus(), ket_minus()],
        declared_basis_b: Vec::new(),
    })?;
    Ok(ExampleBundle {
        model: c.construction.model,
        process: c.process,
        target: anti_correlated_target()?,
        decomposition: c.construction.decomposition,
    })
}

fn diagonal_flip() -> Result<ExampleBundle> {
    let process = ProcessSpec::oblivious(vec![2, 2])?;
    let latent = LatentModel::deterministic(vec![0.5, 0.5], &[vec![0, 1], vec![1, 0]], &process)?;
    let c = build_thm1(&latent, &process)?;
    Ok(ExampleBundle {
        model: c.model,
        process,
        target: anti_correlated_target()?,
        decomposition: c.decomposition,
    })
}

fn three_stage() -> Result<ExampleBundle> {
    let p = |v: Vec<Complex64>| ComplexMatrix::outer(&v);
    let decomposition = separable_state(
        vec![0.5, 0.5],
        vec![
            vec![p(ket0()), p(ket_plus()), p(ket0())],
            vec![p(ket1()), p(ket_minus()), p(ket1())],
        ],
    )?;
    let pm = Povm::from_basis(&[ket_minus(), ket_plus()])?;
    let model = QuantumModel::new(
        vec![2, 2, 2],
        decomposition.state()?,
        vec![vec![Povm::computational(2)], vec![pm], vec![Povm::computational(2)]],
    )?;
    let process = ProcessSpec::oblivious(vec![2, 2, 2])?;
    let mut probs = vec![0.0; 8];
    probs[process.encode(&[0, 1, 0])] = 0.5;
    probs[process.encode(&[1, 0, 1])] = 0.5;
    Ok(ExampleBundle {
        model,
        process,
        target: JointDistribution::new(vec![2, 2, 2], probs)?,
        decomposition,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub pass: bool,
    pub max_abs_error: f64,
    pub tolerance: f64,
    /// `born_joint - target`, per outcome tuple in lexicographic order.
    pub residuals: Vec<f64>,
}

pub fn verify_model(
    q: &QuantumModel,
    proc: &ProcessSpec,
    target: &JointDistribution,
    tol: f64,
) -> Result<VerificationReport> {
    target.check_against(proc)?;
    let p = born_joint(q, proc)?;
    let residuals: Vec<f64> = p.probs().iter().zip(target.probs()).map(|(a, b)| a - b).collect();
    let max_abs_error = residuals.iter().map(|r| r.abs()).fold(0.0, f64::max);
    Ok(VerificationReport {
        pass: max_abs_error <= tol,
        max_abs_error,
        tolerance: tol,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::LocalModel;

    #[test]
    fn diagonal_flip_state_and_readout() {
        let b = worked_example("diagonal-flip").unwrap();
        let expected = ComplexMatrix::diagonal(&[0.5, 0.0, 0.0, 0.5]);
        assert_eq!(b.model.state().matrix(), &expected);
        let flip = b.model.measurement(1, 0);
        assert_eq!(flip.element(0), &ComplexMatrix::diagonal(&[0.0, 1.0]));
        assert_eq!(flip.element(1), &ComplexMatrix::diagonal(&[1.0, 0.0]));
        assert_eq!(born_joint(&b.model, &b.process).unwrap(), b.target);
    }

    #[test]
    fn single_latent_value_gives_product_state() {
        let proc = ProcessSpec::perfect_recall(vec![2, 2]).unwrap();
        let local = LocalModel::new(vec![vec![vec![0.3, 0.7]], vec![vec![0.6, 0.4], vec![0.1, 0.9]]]).unwrap();
        let c = build_thm1(&LatentModel::from_local(&local), &proc).unwrap();
        assert_eq!(c.model.subsystem_dims(), &[1, 1]);
        let p = born_joint(&c.model, &proc).unwrap();
        let q = crate::classical::eval_classical(&local, &proc).unwrap();
        assert!(p.max_abs_diff(&q) < 1e-15);
    }

    #[test]
    fn universal_construction_on_uniform_target() {
        let proc = ProcessSpec::oblivious(vec![2, 2]).unwrap();
        let c = build_diag_universal(&JointDistribution::uniform(vec![2, 2]), &proc).unwrap();
        assert_eq!(c.model.subsystem_dims(), &[4, 4]);
        // Only |ss> carries weight, each 1/4.
        let rho = c.model.state().matrix();
        for i in 0..16 {
            let expected = if i % 5 == 0 { 0.25 } else { 0.0 };
            assert_eq!(rho[(i, i)].re, expected);
        }
    }

    #[test]
    fn thm2_reproduces_illex2() {
        let b = worked_example("illex2").unwrap();
        assert!(born_joint(&b.model, &b.process).unwrap().max_abs_diff(&b.target) < 1e-12);
        let m1 = b.model.measurement(1, 0).element(1);
        assert!(m1.max_abs_diff(&ComplexMatrix::outer(&ket_plus())) < 1e-15);
    }

    #[test]
    fn thm2_rejects_overlapping_states() {
        let err = build_thm2(&Thm2Spec {
            latent_probs: vec![0.5, 0.5],
            g: vec![0, 1],
            h: vec![0, 1],
            basis_a: vec![ket0(), ket1()],
            states_b: vec![ket0(), ket_plus()],
            declared_basis_b: Vec::new(),
        })
        .unwrap_err();
        match err {
            Error::NotDistinguishable { first, second, overlap } => {
                assert_eq!((first, second), (0, 1));
                assert!((overlap - FRAC_1_SQRT_2).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn thm2_identity_maps_give_weighted_diagonal() {
        let c = build_thm2(&Thm2Spec {
            latent_probs: vec![0.25, 0.75],
            g: vec![0, 1],
            h: vec![0, 1],
            basis_a: vec![ket0(), ket1()],
            states_b: vec![ket0(), ket1()],
            declared_basis_b: Vec::new(),
        })
        .unwrap();
        let p = born_joint(&c.construction.model, &c.process).unwrap();
        assert_eq!(p.probs(), &[0.25, 0.0, 0.0, 0.75]);
        assert_eq!(c.commutation_witness, 0.0);
        assert!(c.diagonal_in_declared_basis());
    }

    #[test]
    fn thm2_diagnostics_distinguish_declared_basis_from_commutation() {
        let c = build_thm2(&Thm2Spec {
            latent_probs: vec![0.5, 0.5],
            g: vec![0, 1],
            h: vec![1, 0],
            basis_a: vec![ket0(), ket1()],
            states_b: vec![ket_plus(), ket_minus()],
            declared_basis_b: Vec::new(),
        })
        .unwrap();
        // Not diagonal in the computational basis, yet the ensemble commutes.
        assert!(!c.diagonal_in_declared_basis());
        assert!((c.declared_basis_offdiag - 0.5).abs() < 1e-15);
        assert!(c.commutation_witness < 1e-15);
    }

    #[test]
    fn thm2_same_class_states_may_overlap() {
        // Two latent values share h = 0 with overlapping states; the
        // stage-2 projector covers their span.
        let c = build_thm2(&Thm2Spec {
            latent_probs: vec![0.2, 0.3, 0.5],
            g: vec![0, 1, 1],
            h: vec![0, 0, 1],
            basis_a: vec![
                ket([1.0, 0.0]).into_iter().chain([Complex64::new(0.0, 0.0)]).collect(),
                vec![
                    Complex64::new(0.0, 0.0),
                    Complex64::new(1.0, 0.0),
                    Complex64::new(0.0, 0.0),
                ],
                vec![
                    Complex64::new(0.0, 0.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(1.0, 0.0),
                ],
            ],
            states_b: vec![
                vec![
                    Complex64::new(1.0, 0.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(0.0, 0.0),
                ],
                vec![
                    Complex64::new(FRAC_1_SQRT_2, 0.0),
                    Complex64::new(FRAC_1_SQRT_2, 0.0),
                    Complex64::new(0.0, 0.0),
                ],
                vec![
                    Complex64::new(0.0, 0.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(1.0, 0.0),
                ],
            ],
            declared_basis_b: Vec::new(),
        })
        .unwrap();
        let p = born_joint(&c.construction.model, &c.process).unwrap();
        assert!(p.max_abs_diff(&c.target) < 1e-12);
        assert!(c.commutation_witness > 0.1);
        assert!((c.construction.decomposition.weight_sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn three_stage_mass_sits_on_two_tuples() {
        let b = worked_example("three-stage").unwrap();
        let p = born_joint(&b.model, &b.process).unwrap();
        assert!(p.max_abs_diff(&b.target) < 1e-12);
    }

    #[test]
    fn unknown_example_lists_valid_names() {
        match worked_example("bell") {
            Err(Error::UnknownExample { valid, .. }) => assert_eq!(valid, "illex2, diagonal-flip, three-stage"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn oblivious_examples_carry_one_measurement_per_stage() {
        for e in WorkedExample::ALL {
            let b = e.bundle().unwrap();
            for k in 1..b.process.stages() {
                assert!(b.process.info_map(k).is_constant());
                assert_eq!(b.model.measurements()[k].len(), 1);
            }
        }
    }

    #[test]
    fn verification_reports_max_error() {
        let b = worked_example("illex2").unwrap();
        let ok = verify_model(&b.model, &b.process, &b.target, 1e-10).unwrap();
        assert!(ok.pass && ok.max_abs_error < 1e-12);
        let uniform = JointDistribution::uniform(vec![2, 2]);
        let bad = verify_model(&b.model, &b.process, &uniform, 1e-10).unwrap();
        assert!(!bad.pass);
        assert!((bad.max_abs_error - 0.25).abs() < 1e-12);
        let own = born_joint(&b.model, &b.process).unwrap();
        let same = verify_model(&b.model, &b.process, &own, 1e-10).unwrap();
        assert_eq!(same.max_abs_error, 0.0);
    }

    #[test]
    fn separable_state_rejects_bad_weights() {
        let p0 = ComplexMatrix::outer(&ket0());
        assert!(separable_state(vec![0.7, 0.7], vec![vec![p0.clone()], vec![p0.clone()]]).is_err());
        assert!(separable_state(vec![1.0], vec![vec![p0.scale_real(2.0)]]).is_err());
    }
}
