//! Density matrices, POVMs, the Born-rule joint distribution of a sequence of
//! local measurements, and two nonclassicality diagnostics.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::distribution::{JointDistribution, NORMALIZATION_TOL};
use crate::error::{structural, Error, Result};
use crate::linalg::{hermitian_eigenvalues, shannon_entropy, von_neumann_entropy, ComplexMatrix, ZERO};
use crate::process::ProcessSpec;

/// Entrywise tolerance for Hermiticity and POVM completeness.
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
/// Smallest eigenvalue accepted as positive semidefinite is `-PSD_TOL`.
pub const PSD_TOL: f64 = 1e-10;
pub const COMPLETENESS_TOL: f64 = 1e-10;
/// Largest imaginary part tolerated in a Born-rule probability.
pub const IMAGINARY_TOL: f64 = 1e-10;

/// A validated quantum state.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Checks, in order: square, Hermitian, unit trace, positive semidefinite.
    pub fn validate(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(structural(format!(
                "state must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let deviation = matrix.hermiticity_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::Trace { trace });
        }
        let eigenvalue = min_eigenvalue(&matrix);
        if eigenvalue < -PSD_TOL {
            return Err(Error::NotPositive { eigenvalue });
        }
        Ok(Self { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }
}

/// Alias of [`DensityMatrix::validate`].
pub fn validate_state(m: ComplexMatrix) -> Result<DensityMatrix> {
    DensityMatrix::validate(m)
}

fn min_eigenvalue(m: &ComplexMatrix) -> f64 {
    hermitian_eigenvalues(m).first().copied().unwrap_or(0.0)
}

/// A validated measurement: one positive operator per outcome, summing to
/// the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    dim: usize,
    elements: Vec<ComplexMatrix>,
}

impl Povm {
    pub fn validate(elements: Vec<ComplexMatrix>, dim: usize) -> Result<Self> {
        if elements.is_empty() {
            return Err(structural("a POVM needs at least one element"));
        }
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for (x, e) in elements.iter().enumerate() {
            if e.rows() != dim || e.cols() != dim {
                return Err(structural(format!(
                    "POVM element {x} is {}x{}, expected {dim}x{dim}",
                    e.rows(),
                    e.cols()
                )));
            }
            let deviation = e.hermiticity_deviation();
            if deviation > HERMITIAN_TOL {
                return Err(Error::NotHermitian { deviation });
            }
            let eigenvalue = min_eigenvalue(e);
            if eigenvalue < -PSD_TOL {
                return Err(Error::NotPositive { eigenvalue });
            }
            sum = &sum + e;
        }
        let deviation = sum.max_abs_diff(&ComplexMatrix::identity(dim));
        if deviation > COMPLETENESS_TOL {
            return Err(Error::Completeness { deviation });
        }
        Ok(Self { dim, elements })
    }

    /// Projective measurement onto the computational basis.
    pub fn computational(dim: usize) -> Self {
        let elements = (0..dim)
            .map(|i| {
                let mut d = vec![0.0; dim];
                d[i] = 1.0;
                ComplexMatrix::diagonal(&d)
            })
            .collect();
        Self { dim, elements }
    }

    /// Projective measurement onto the given orthonormal vectors, outcome `x`
    /// for `vectors[x]`.
    pub fn from_basis(vectors: &[Vec<Complex64>]) -> Result<Self> {
        let dim = vectors.first().map_or(0, Vec::len);
        Self::validate(vectors.iter().map(|v| ComplexMatrix::outer(v)).collect(), dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn element(&self, outcome: usize) -> &ComplexMatrix {
        &self.elements[outcome]
    }
}

/// Alias of [`Povm::validate`].
pub fn validate_povm(elements: Vec<ComplexMatrix>, dim: usize) -> Result<Povm> {
    Povm::validate(elements, dim)
}

/// A shared state plus, for each stage and each information label, the
/// measurement that stage performs on its own subsystem.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumModel {
    subsystem_dims: Vec<usize>,
    state: DensityMatrix,
    /// `[stage][label]`.
    measurements: Vec<Vec<Povm>>,
}

impl QuantumModel {
    pub fn new(subsystem_dims: Vec<usize>, state: DensityMatrix, measurements: Vec<Vec<Povm>>) -> Result<Self> {
        let total: usize = subsystem_dims.iter().product();
        if subsystem_dims.is_empty() || state.dim() != total {
            return Err(structural(format!(
                "state dimension {} does not match subsystem dims {subsystem_dims:?}",
                state.dim()
            )));
        }
        if measurements.len() != subsystem_dims.len() {
            return Err(structural(format!(
                "{} subsystems but measurements for {} stages",
                subsystem_dims.len(),
                measurements.len()
            )));
        }
        for (k, per_label) in measurements.iter().enumerate() {
            if let Some((y, p)) = per_label.iter().enumerate().find(|(_, p)| p.dim() != subsystem_dims[k]) {
                return Err(structural(format!(
                    "stage {} label {y} measurement acts on dimension {}, subsystem has {}",
                    k + 1,
                    p.dim(),
                    subsystem_dims[k]
                )));
            }
        }
        Ok(Self {
            subsystem_dims,
            state,
            measurements,
        })
    }

    pub fn subsystem_dims(&self) -> &[usize] {
        &self.subsystem_dims
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    pub fn measurements(&self) -> &[Vec<Povm>] {
        &self.measurements
    }

    pub fn measurement(&self, stage: usize, label: usize) -> &Povm {
        &self.measurements[stage][label]
    }

    /// Every (stage, label) of `proc` has a measurement with the right number
    /// of outcomes.
    pub fn check_against(&self, proc: &ProcessSpec) -> Result<()> {
        if self.measurements.len() != proc.stages() {
            return Err(structural(format!(
                "model has {} stages, process has {}",
                self.measurements.len(),
                proc.stages()
            )));
        }
        for (k, per_label) in self.measurements.iter().enumerate() {
            if per_label.len() != proc.label_count(k) {
                return Err(structural(format!(
                    "stage {} has {} measurements, process declares {} labels",
                    k + 1,
                    per_label.len(),
                    proc.label_count(k)
                )));
            }
            if let Some((y, p)) = per_label
                .iter()
                .enumerate()
                .find(|(_, p)| p.outcomes() != proc.alphabet(k))
            {
                return Err(structural(format!(
                    "stage {} label {y} measurement has {} outcomes, alphabet size is {}",
                    k + 1,
                    p.outcomes(),
                    proc.alphabet(k)
                )));
            }
        }
        Ok(())
    }
}

type SparseEntries = Vec<(usize, usize, Complex64)>;

fn sparse(m: &ComplexMatrix) -> SparseEntries {
    let mut out = Vec::new();
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            let z = m[(r, c)];
            if z != ZERO {
                out.push((r, c, z));
            }
        }
    }
    out
}

/// `Tr[(M_1 ⊗ ... ⊗ M_n) rho]` contracted factor by factor, skipping zero
/// entries of the local operators.
fn born_probability(factors: &[&SparseEntries], strides: &[usize], rho: &ComplexMatrix) -> Complex64 {
    fn go(
        factors: &[&SparseEntries],
        strides: &[usize],
        rho: &ComplexMatrix,
        row: usize,
        col: usize,
        weight: Complex64,
    ) -> Complex64 {
        match factors.split_first() {
            None => weight * rho[(col, row)],
            Some((first, rest)) => first
                .iter()
                .map(|&(i, j, z)| {
                    go(
                        rest,
                        &strides[1..],
                        rho,
                        row + i * strides[0],
                        col + j * strides[0],
                        weight * z,
                    )
                })
                .sum(),
        }
    }
    go(factors, strides, rho, 0, 0, Complex64::new(1.0, 0.0))
}

/// Joint distribution of the outcomes when stage `k` measures subsystem `k`
/// with the POVM selected by its information label.
///
/// Probabilities with imaginary residue above [`IMAGINARY_TOL`] are errors.
/// Real parts are clamped to `[0, 1]`; if the clamped values then miss unit
/// mass by more than the normalization tolerance the model is reported as
/// drifting instead of being renormalized.
pub fn born_joint(q: &QuantumModel, proc: &ProcessSpec) -> Result<JointDistribution> {
    q.check_against(proc)?;
    let dims = &q.subsystem_dims;
    let mut strides = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let sparse_elems: Vec<Vec<Vec<SparseEntries>>> = q
        .measurements
        .iter()
        .map(|per_label| {
            per_label
                .iter()
                .map(|p| p.elements.iter().map(sparse).collect())
                .collect()
        })
        .collect();

    let rho = q.state.matrix();
    let mut probs = Vec::with_capacity(proc.outcome_count());
    for idx in 0..proc.outcome_count() {
        let x = proc.decode(idx);
        let factors: Vec<&SparseEntries> = x
            .iter()
            .enumerate()
            .map(|(k, &xk)| &sparse_elems[k][proc.label_at(k, idx)][xk])
            .collect();
        let z = born_probability(&factors, &strides, rho);
        if z.im.abs() > IMAGINARY_TOL {
            return Err(Error::ImaginaryProbability {
                index: idx,
                imaginary: z.im,
            });
        }
        probs.push(z.re.clamp(0.0, 1.0));
    }
    let drift = probs.iter().sum::<f64>() - 1.0;
    if drift.abs() > NORMALIZATION_TOL {
        return Err(Error::NormalizationDrift { drift });
    }
    JointDistribution::new(proc.alphabet_sizes().to_vec(), probs)
}

/// Largest spectral norm of a pairwise commutator `[A_i, A_j]`. For Hermitian
/// families this is zero exactly when the family is jointly diagonalizable.
pub fn commutation_witness(states: &[ComplexMatrix]) -> Result<f64> {
    if let Some(first) = states.first() {
        let d = first.rows();
        if let Some((i, m)) = states.iter().enumerate().find(|(_, m)| !m.is_square() || m.rows() != d) {
            return Err(structural(format!(
                "ensemble member {i} is {}x{}, expected {d}x{d}",
                m.rows(),
                m.cols()
            )));
        }
    }
    let mut worst: f64 = 0.0;
    for (i, a) in states.iter().enumerate() {
        for b in &states[i + 1..] {
            worst = worst.max(a.commutator(b).spectral_norm());
        }
    }
    Ok(worst)
}

/// Which half of a bipartite state is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscordReport {
    /// Discord in bits, clamped at zero.
    pub discord: f64,
    pub mutual_information: f64,
    /// Best classical correlation found over projective measurements.
    pub classical_correlation: f64,
    /// Bloch angles of the optimal projector on the measured qubit.
    pub theta: f64,
    pub phi: f64,
}

/// Golden-section iterations per angle after the grid search.
pub const DISCORD_REFINEMENT_ROUNDS: usize = 20;

/// One-sided discord `I(A:B) - max_Pi J(A|Pi)` where `Pi` ranges over rank-1
/// projective measurements on the measured qubit.
///
/// The maximization scans a `resolution x resolution` grid of Bloch angles
/// (`theta` in `[0, pi]` endpoints included, `phi` in `[0, 2 pi)`), then
/// refines the best grid point by golden-section search on each angle.
/// Entropies are in bits.
pub fn discord_one_sided(
    rho: &DensityMatrix,
    dims: (usize, usize),
    measured: Side,
    resolution: usize,
) -> Result<DiscordReport> {
    let (da, db) = dims;
    if da * db != rho.dim() {
        return Err(structural(format!(
            "subsystem dims {da}x{db} do not match state dimension {}",
            rho.dim()
        )));
    }
    if resolution < 2 {
        return Err(structural("discord grid resolution must be at least 2"));
    }
    // Bring the measured qubit to the second slot.
    let (rho_um, d_unmeasured, d_measured) = match measured {
        Side::B => (rho.matrix().clone(), da, db),
        Side::A => (rho.matrix().permute_subsystems(&[da, db], &[1, 0])?, db, da),
    };
    if d_measured != 2 {
        return Err(Error::UnsupportedDimension(format!(
            "measured side has dimension {d_measured}; only qubits are supported"
        )));
    }
    let sub = [d_unmeasured, 2];
    let s_joint = von_neumann_entropy(&rho_um);
    let s_unmeasured = von_neumann_entropy(&rho_um.partial_trace(&sub, &[0])?);
    let s_measured = von_neumann_entropy(&rho_um.partial_trace(&sub, &[1])?);
    let mutual_information = s_unmeasured + s_measured - s_joint;

    let blocks = ConditionalBlocks::new(&rho_um, d_unmeasured);
    let f = |theta: f64, phi: f64| blocks.conditional_entropy(theta, phi);

    let theta_step = PI / (resolution - 1) as f64;
    let phi_step = 2.0 * PI / resolution as f64;
    let (mut best_theta, mut best_phi, mut best) = (0.0, 0.0, f64::INFINITY);
    for i in 0..resolution {
        let theta = i as f64 * theta_step;
        for j in 0..resolution {
            let phi = j as f64 * phi_step;
            let v = f(theta, phi);
            if v < best {
                best = v;
                best_theta = theta;
                best_phi = phi;
            }
        }
    }

    let (t, v) = golden_min(
        |t| f(t, best_phi),
        (best_theta - theta_step).max(0.0),
        (best_theta + theta_step).min(PI),
    );
    if v < best {
        best = v;
        best_theta = t;
    }
    let (p, v) = golden_min(|p| f(best_theta, p), best_phi - phi_step, best_phi + phi_step);
    if v < best {
        best = v;
        best_phi = p.rem_euclid(2.0 * PI);
    }

    let classical_correlation = s_unmeasured - best;
    Ok(DiscordReport {
        discord: (mutual_information - classical_correlation).max(0.0),
        mutual_information,
        classical_correlation,
        theta: best_theta,
        phi: best_phi,
    })
}

fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..DISCORD_REFINEMENT_ROUNDS {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Blocks `B[c][b]_{a a'} = rho_{(a c), (a' b)}` of a state whose second
/// factor is a qubit, so that `Tr_B[(1 ⊗ |n><n|) rho] = sum_{b,c} n_b conj(n_c) B[c][b]`.
struct ConditionalBlocks {
    dim: usize,
    blocks: [[ComplexMatrix; 2]; 2],
}

impl ConditionalBlocks {
    fn new(rho: &ComplexMatrix, dim: usize) -> Self {
        let block = |c: usize, b: usize| {
            let mut m = ComplexMatrix::zeros(dim, dim);
            for a in 0..dim {
                for a2 in 0..dim {
                    m[(a, a2)] = rho[(a * 2 + c, a2 * 2 + b)];
                }
            }
            m
        };
        Self {
            dim,
            blocks: [[block(0, 0), block(0, 1)], [block(1, 0), block(1, 1)]],
        }
    }

    /// `sum_i p_i S(rho_A|i)` for the measurement `{|n><n|, |n_perp><n_perp|}`.
    fn conditional_entropy(&self, theta: f64, phi: f64) -> f64 {
        let (s, c) = (theta / 2.0).sin_cos();
        let e = Complex64::from_polar(1.0, phi);
        let n = [Complex64::new(c, 0.0), e * s];
        let n_perp = [Complex64::new(s, 0.0), -e * c];
        [n, n_perp]
            .iter()
            .map(|v| {
                let mut sigma = ComplexMatrix::zeros(self.dim, self.dim);
                for b in 0..2 {
                    for cc in 0..2 {
                        let w = v[b] * v[cc].conj();
                        if w != ZERO {
                            sigma = &sigma + &self.blocks[cc][b].scale(w);
                        }
                    }
                }
                let p = sigma.trace().re;
                if p <= 1e-15 {
                    return 0.0;
                }
                let eig: Vec<f64> = hermitian_eigenvalues(&sigma).iter().map(|l| l / p).collect();
                p * shannon_entropy(&eig)
            })
            .sum()
    }
}
