//! JSON document formats for processes, distributions and models.
//!
//! Complex numbers are `[re, im]` pairs and matrices are row-major nested
//! arrays. Distributions are flat arrays in lexicographic outcome order, first
//! stage most significant.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use qcoord_core::{
    ComplexMatrix, DensityMatrix, ExampleBundle, InfoGenerator, InfoMap, JointDistribution, LatentModel, LocalModel,
    Povm, ProcessSpec, QuantumModel, Thm2Spec,
};

use crate::error::CliError;

pub type ComplexDoc = [f64; 2];
pub type MatrixDoc = Vec<Vec<ComplexDoc>>;

fn parse_json<'a, T: Deserialize<'a>>(what: &str, text: &'a str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse(format!("{what}: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InfoDoc {
    Generator {
        gen: String,
    },
    Map {
        map: BTreeMap<String, usize>,
        labels: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessDoc {
    pub n: usize,
    pub alphabets: Vec<usize>,
    pub info: Vec<InfoDoc>,
}

fn prefix_key(prefix: &[usize]) -> String {
    prefix.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

fn parse_prefix(key: &str) -> Option<Vec<usize>> {
    let key = key.trim();
    if key.is_empty() {
        return Some(Vec::new());
    }
    key.split(',').map(|t| t.trim().parse().ok()).collect()
}

impl ProcessDoc {
    pub fn into_spec(self) -> Result<ProcessSpec, CliError> {
        if self.n == 0 || self.n != self.alphabets.len() {
            return Err(CliError::Parse(format!(
                "process: n = {} but {} alphabets given",
                self.n,
                self.alphabets.len()
            )));
        }
        if self.info.len() != self.n {
            return Err(CliError::Parse(format!(
                "process: n = {} but {} info entries given",
                self.n,
                self.info.len()
            )));
        }
        if let Some(k) = self.alphabets.iter().position(|&a| a == 0) {
            return Err(CliError::Parse(format!("process: alphabets[{k}] must be at least 1")));
        }
        let mut maps = Vec::with_capacity(self.n);
        let mut prefix_count = 1usize;
        for (k, info) in self.info.into_iter().enumerate() {
            let ctx = |msg: String| CliError::Parse(format!("process: info[{k}] (stage {}): {msg}", k + 1));
            let map = match info {
                InfoDoc::Generator { gen } => match gen.as_str() {
                    "constant" => InfoMap::generate(InfoGenerator::Constant, prefix_count),
                    "perfect-recall" => InfoMap::generate(InfoGenerator::PerfectRecall, prefix_count),
                    other => {
                        return Err(ctx(format!(
                            "unknown generator `{other}` (expected \"constant\" or \"perfect-recall\")"
                        )))
                    }
                },
                InfoDoc::Map { map, labels } => {
                    let radices = &self.alphabets[..k];
                    let mut table: Vec<Option<usize>> = vec![None; prefix_count];
                    for (key, label) in map {
                        let prefix = parse_prefix(&key)
                            .filter(|p| p.len() == k && p.iter().zip(radices).all(|(x, a)| x < a))
                            .ok_or_else(|| ctx(format!("key \"{key}\" is not a prefix of length {k}")))?;
                        if label >= labels {
                            return Err(ctx(format!(
                                "prefix ({key}) maps to label {label}, but labels = {labels}"
                            )));
                        }
                        let idx = prefix.iter().zip(radices).fold(0, |acc, (x, a)| acc * a + x);
                        if table[idx].replace(label).is_some() {
                            return Err(ctx(format!("prefix ({}) is listed twice", prefix_key(&prefix))));
                        }
                    }
                    let mut out = Vec::with_capacity(prefix_count);
                    for (idx, slot) in table.into_iter().enumerate() {
                        match slot {
                            Some(l) => out.push(l),
                            None => {
                                let prefix = decode(idx, radices);
                                return Err(ctx(format!("map is missing prefix ({})", prefix_key(&prefix))));
                            }
                        }
                    }
                    InfoMap::new(out, labels).map_err(|e| ctx(e.to_string()))?
                }
            };
            maps.push(map);
            prefix_count *= self.alphabets[k];
        }
        ProcessSpec::new(self.alphabets, maps).map_err(|e| CliError::Parse(format!("process: {e}")))
    }

    pub fn from_spec(proc: &ProcessSpec) -> Self {
        let info = (0..proc.stages())
            .map(|k| {
                let map = proc.info_map(k);
                let count = proc.prefix_count(k);
                if *map == InfoMap::generate(InfoGenerator::Constant, count) {
                    InfoDoc::Generator { gen: "constant".into() }
                } else if *map == InfoMap::generate(InfoGenerator::PerfectRecall, count) {
                    InfoDoc::Generator {
                        gen: "perfect-recall".into(),
                    }
                } else {
                    InfoDoc::Map {
                        map: (0..count)
                            .map(|p| (prefix_key(&proc.decode_prefix(k, p)), map.label(p)))
                            .collect(),
                        labels: map.label_count(),
                    }
                }
            })
            .collect();
        Self {
            n: proc.stages(),
            alphabets: proc.alphabet_sizes().to_vec(),
            info,
        }
    }
}

fn decode(mut idx: usize, radices: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radices.len()];
    for (slot, &r) in out.iter_mut().zip(radices).rev() {
        *slot = idx % r;
        idx /= r;
    }
    out
}

pub fn parse_process_file(text: &str) -> Result<ProcessSpec, CliError> {
    parse_json::<ProcessDoc>("process", text)?.into_spec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionDoc {
    pub alphabets: Vec<usize>,
    pub probs: Vec<f64>,
}

impl DistributionDoc {
    pub fn into_distribution(self) -> Result<JointDistribution, CliError> {
        JointDistribution::new(self.alphabets, self.probs).map_err(|e| CliError::Parse(format!("distribution: {e}")))
    }

    pub fn from_distribution(d: &JointDistribution) -> Self {
        Self {
            alphabets: d.alphabet_sizes().to_vec(),
            probs: d.probs().to_vec(),
        }
    }
}

pub fn parse_distribution_file(text: &str) -> Result<JointDistribution, CliError> {
    parse_json::<DistributionDoc>("distribution", text)?.into_distribution()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalModelDoc {
    pub tables: Vec<Vec<Vec<f64>>>,
}

impl LocalModelDoc {
    pub fn into_model(self) -> Result<LocalModel, CliError> {
        LocalModel::new(self.tables).map_err(|e| CliError::Parse(format!("local model: {e}")))
    }

    pub fn from_model(m: &LocalModel) -> Self {
        Self {
            tables: m.tables().to_vec(),
        }
    }
}

pub fn parse_local_model_file(text: &str) -> Result<LocalModel, CliError> {
    parse_json::<LocalModelDoc>("local model", text)?.into_model()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatentModelDoc {
    pub latent_probs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tables: Option<Vec<Vec<Vec<Vec<f64>>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deterministic: Option<Vec<Vec<usize>>>,
}

impl LatentModelDoc {
    /// Deterministic shorthand needs the process to know how many labels
    /// each stage has.
    pub fn into_model(self, proc: &ProcessSpec) -> Result<LatentModel, CliError> {
        let ctx = |e: qcoord_core::Error| CliError::Parse(format!("latent model: {e}"));
        match (self.tables, self.deterministic) {
            (Some(t), None) => LatentModel::new(self.latent_probs, t).map_err(ctx),
            (None, Some(d)) => LatentModel::deterministic(self.latent_probs, &d, proc).map_err(ctx),
            _ => Err(CliError::Parse(
                "latent model: give exactly one of `tables` and `deterministic`".into(),
            )),
        }
    }

    pub fn from_model(m: &LatentModel) -> Self {
        Self {
            latent_probs: m.latent_probs().to_vec(),
            tables: Some(m.tables().to_vec()),
            deterministic: None,
        }
    }
}

pub fn parse_latent_model_file(text: &str, proc: &ProcessSpec) -> Result<LatentModel, CliError> {
    parse_json::<LatentModelDoc>("latent model", text)?.into_model(proc)
}

pub fn matrix_to_doc(m: &ComplexMatrix) -> MatrixDoc {
    m.to_rows()
        .into_iter()
        .map(|r| r.into_iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

pub fn matrix_from_doc(doc: &MatrixDoc) -> Result<ComplexMatrix, qcoord_core::Error> {
    let rows: Vec<Vec<Complex64>> = doc
        .iter()
        .map(|r| r.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
        .collect();
    ComplexMatrix::from_rows(&rows)
}

pub fn vector_from_doc(doc: &[ComplexDoc]) -> Vec<Complex64> {
    doc.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumModelDoc {
    pub dims: Vec<usize>,
    pub state: MatrixDoc,
    /// `[stage][label][outcome]`.
    pub povms: Vec<Vec<Vec<MatrixDoc>>>,
}

impl QuantumModelDoc {
    pub fn into_model(self) -> Result<QuantumModel, CliError> {
        let state = matrix_from_doc(&self.state)
            .and_then(DensityMatrix::validate)
            .map_err(|e| CliError::Validation(format!("quantum model state: {e}")))?;
        if self.povms.len() != self.dims.len() {
            return Err(CliError::Parse(format!(
                "quantum model: {} dims but povms for {} stages",
                self.dims.len(),
                self.povms.len()
            )));
        }
        let mut measurements = Vec::with_capacity(self.povms.len());
        for (k, per_label) in self.povms.iter().enumerate() {
            let mut row = Vec::with_capacity(per_label.len());
            for (y, elems) in per_label.iter().enumerate() {
                let ctx = |e: qcoord_core::Error| {
                    CliError::Validation(format!("quantum model povms[{k}][{y}] (stage {}): {e}", k + 1))
                };
                let mats = elems
                    .iter()
                    .map(matrix_from_doc)
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(ctx)?;
                row.push(Povm::validate(mats, self.dims[k]).map_err(ctx)?);
            }
            measurements.push(row);
        }
        QuantumModel::new(self.dims, state, measurements).map_err(|e| CliError::Parse(format!("quantum model: {e}")))
    }

    pub fn from_model(q: &QuantumModel) -> Self {
        Self {
            dims: q.subsystem_dims().to_vec(),
            state: matrix_to_doc(q.state().matrix()),
            povms: q
                .measurements()
                .iter()
                .map(|per_label| {
                    per_label
                        .iter()
                        .map(|p| p.elements().iter().map(matrix_to_doc).collect())
                        .collect()
                })
                .collect(),
        }
    }
}

pub fn parse_quantum_model_file(text: &str) -> Result<QuantumModel, CliError> {
    parse_json::<QuantumModelDoc>("quantum model", text)?.into_model()
}

/// A process, a quantum model and its target, as emitted by `construct`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleDoc {
    pub process: ProcessDoc,
    pub model: QuantumModelDoc,
    pub target: DistributionDoc,
    /// Product decomposition of the state, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<DecompositionDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionDoc {
    pub weights: Vec<f64>,
    pub factors: Vec<Vec<MatrixDoc>>,
}

impl DecompositionDoc {
    pub fn from_decomposition(d: &qcoord_core::SeparableDecomposition) -> Self {
        Self {
            weights: d.weights.clone(),
            factors: d
                .factors
                .iter()
                .map(|fs| fs.iter().map(matrix_to_doc).collect())
                .collect(),
        }
    }
}

pub struct Bundle {
    pub process: ProcessSpec,
    pub model: QuantumModel,
    pub target: JointDistribution,
}

impl BundleDoc {
    pub fn from_example(b: &ExampleBundle) -> Self {
        Self {
            process: ProcessDoc::from_spec(&b.process),
            model: QuantumModelDoc::from_model(&b.model),
            target: DistributionDoc::from_distribution(&b.target),
            decomposition: Some(DecompositionDoc::from_decomposition(&b.decomposition)),
            diagnostics: None,
        }
    }

    pub fn into_bundle(self) -> Result<Bundle, CliError> {
        Ok(Bundle {
            process: self.process.into_spec()?,
            model: self.model.into_model()?,
            target: self.target.into_distribution()?,
        })
    }
}

pub fn parse_bundle_file(text: &str) -> Result<Bundle, CliError> {
    parse_json::<BundleDoc>("bundle", text)?.into_bundle()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thm2SpecDoc {
    pub latent_probs: Vec<f64>,
    pub g: Vec<usize>,
    pub h: Vec<usize>,
    pub basis_a: Vec<Vec<ComplexDoc>>,
    pub states_b: Vec<Vec<ComplexDoc>>,
    #[serde(default)]
    pub declared_basis_b: Vec<Vec<ComplexDoc>>,
}

impl Thm2SpecDoc {
    pub fn into_spec(self) -> Thm2Spec {
        let vecs = |v: &[Vec<ComplexDoc>]| v.iter().map(|x| vector_from_doc(x)).collect();
        Thm2Spec {
            latent_probs: self.latent_probs,
            g: self.g,
            h: self.h,
            basis_a: vecs(&self.basis_a),
            states_b: vecs(&self.states_b),
            declared_basis_b: vecs(&self.declared_basis_b),
        }
    }
}

pub fn parse_thm2_spec_file(text: &str) -> Result<Thm2Spec, CliError> {
    Ok(parse_json::<Thm2SpecDoc>("theorem-2 spec", text)?.into_spec())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatesDoc {
    pub states: Vec<MatrixDoc>,
}

pub fn parse_states_file(text: &str) -> Result<Vec<ComplexMatrix>, CliError> {
    parse_json::<StatesDoc>("states", text)?
        .states
        .iter()
        .map(|m| matrix_from_doc(m).map_err(|e| CliError::Parse(format!("states: {e}"))))
        .collect()
}
