//! Classical local models, latent-variable models, and the exact decision of
//! whether a target distribution factorizes over an information structure.

use crate::distribution::{JointDistribution, NORMALIZATION_TOL};
use crate::error::{structural, Result};
use crate::process::ProcessSpec;

/// Prefixes with marginal mass at or below this are treated as unreachable.
pub const SUPPORT_TOL: f64 = 1e-12;
/// Two conditional rows agree when their max-abs difference is at most this.
pub const AGREEMENT_TOL: f64 = 1e-9;

/// Per-stage conditional rules `P_k(x | y)`, indexed `[stage][label][outcome]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalModel {
    tables: Vec<Vec<Vec<f64>>>,
}

impl LocalModel {
    pub fn new(tables: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        for (k, stage) in tables.iter().enumerate() {
            for (y, row) in stage.iter().enumerate() {
                check_row(row).map_err(|m| structural(format!("stage {} label {y}: {m}", k + 1)))?;
            }
        }
        Ok(Self { tables })
    }

    /// Uniform rows for every (stage, label) of `proc`.
    pub fn uniform(proc: &ProcessSpec) -> Self {
        let tables = (0..proc.stages())
            .map(|k| {
                let a = proc.alphabet(k);
                vec![vec![1.0 / a as f64; a]; proc.label_count(k)]
            })
            .collect();
        Self { tables }
    }

    pub fn tables(&self) -> &[Vec<Vec<f64>>] {
        &self.tables
    }

    pub fn row(&self, stage: usize, label: usize) -> &[f64] {
        &self.tables[stage][label]
    }

    pub fn check_against(&self, proc: &ProcessSpec) -> Result<()> {
        check_table_shape(&self.tables, proc)
    }
}

/// A latent variable `s ~ p(s)` plus rules `P_k(x | s, y)`, indexed
/// `[stage][s][label][outcome]`. The latent value is never part of any
/// stage's information.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentModel {
    latent_probs: Vec<f64>,
    tables: Vec<Vec<Vec<Vec<f64>>>>,
}

impl LatentModel {
    pub fn new(latent_probs: Vec<f64>, tables: Vec<Vec<Vec<Vec<f64>>>>) -> Result<Self> {
        check_row(&latent_probs).map_err(|m| structural(format!("latent distribution: {m}")))?;
        for (k, stage) in tables.iter().enumerate() {
            if stage.len() != latent_probs.len() {
                return Err(structural(format!(
                    "stage {} has tables for {} latent values, expected {}",
                    k + 1,
                    stage.len(),
                    latent_probs.len()
                )));
            }
            for (s, per_s) in stage.iter().enumerate() {
                for (y, row) in per_s.iter().enumerate() {
                    check_row(row).map_err(|m| structural(format!("stage {} latent {s} label {y}: {m}", k + 1)))?;
                }
            }
        }
        Ok(Self { latent_probs, tables })
    }

    /// Expands deterministic maps `s -> x_k(s)` (one list per stage) into
    /// point-mass rows, identical across labels.
    pub fn deterministic(latent_probs: Vec<f64>, maps: &[Vec<usize>], proc: &ProcessSpec) -> Result<Self> {
        if maps.len() != proc.stages() {
            return Err(structural(format!(
                "{} deterministic maps for {} stages",
                maps.len(),
                proc.stages()
            )));
        }
        let mut tables = Vec::with_capacity(maps.len());
        for (k, map) in maps.iter().enumerate() {
            if map.len() != latent_probs.len() {
                return Err(structural(format!(
                    "stage {} deterministic map has {} entries, expected {}",
                    k + 1,
                    map.len(),
                    latent_probs.len()
                )));
            }
            let a = proc.alphabet(k);
            let mut per_s = Vec::with_capacity(map.len());
            for (s, &x) in map.iter().enumerate() {
                if x >= a {
                    return Err(structural(format!(
                        "stage {} maps latent {s} to outcome {x}, alphabet size {a}",
                        k + 1
                    )));
                }
                let mut row = vec![0.0; a];
                row[x] = 1.0;
                per_s.push(vec![row; proc.label_count(k)]);
            }
            tables.push(per_s);
        }
        Self::new(latent_probs, tables)
    }

    /// The same rules with a one-point latent alphabet.
    pub fn from_local(model: &LocalModel) -> Self {
        Self {
            latent_probs: vec![1.0],
            tables: model.tables.iter().map(|t| vec![t.clone()]).collect(),
        }
    }

    pub fn latent_probs(&self) -> &[f64] {
        &self.latent_probs
    }

    pub fn latent_count(&self) -> usize {
        self.latent_probs.len()
    }

    pub fn tables(&self) -> &[Vec<Vec<Vec<f64>>>] {
        &self.tables
    }

    pub fn row(&self, stage: usize, latent: usize, label: usize) -> &[f64] {
        &self.tables[stage][latent][label]
    }

    pub fn check_against(&self, proc: &ProcessSpec) -> Result<()> {
        if self.tables.len() != proc.stages() {
            return Err(structural(format!(
                "latent model has {} stages, process has {}",
                self.tables.len(),
                proc.stages()
            )));
        }
        for s in 0..self.latent_count() {
            let slice: Vec<Vec<Vec<f64>>> = self.tables.iter().map(|t| t[s].clone()).collect();
            check_table_shape(&slice, proc).map_err(|e| structural(format!("latent {s}: {e}")))?;
        }
        Ok(())
    }
}

fn check_row(row: &[f64]) -> std::result::Result<(), String> {
    if row.is_empty() {
        return Err("empty probability row".into());
    }
    if let Some(v) = row.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(format!("entry {v} is not a probability"));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOL {
        return Err(format!("row sums to {sum}"));
    }
    Ok(())
}

fn check_table_shape(tables: &[Vec<Vec<f64>>], proc: &ProcessSpec) -> Result<()> {
    if tables.len() != proc.stages() {
        return Err(structural(format!(
            "model has {} stages, process has {}",
            tables.len(),
            proc.stages()
        )));
    }
    for (k, stage) in tables.iter().enumerate() {
        if stage.len() != proc.label_count(k) {
            return Err(structural(format!(
                "stage {} has {} rows, process declares {} labels",
                k + 1,
                stage.len(),
                proc.label_count(k)
            )));
        }
        if let Some((y, row)) = stage.iter().enumerate().find(|(_, r)| r.len() != proc.alphabet(k)) {
            return Err(structural(format!(
                "stage {} label {y} row has {} entries, alphabet size is {}",
                k + 1,
                row.len(),
                proc.alphabet(k)
            )));
        }
    }
    Ok(())
}

/// `P(x) = prod_k P_k(x_k | f_k(x_<k))` without shape checks.
pub(crate) fn eval_tables(tables: &[Vec<Vec<f64>>], proc: &ProcessSpec, out: &mut Vec<f64>) {
    out.clear();
    for idx in 0..proc.outcome_count() {
        let x = proc.decode(idx);
        let mut p = 1.0;
        for (k, &xk) in x.iter().enumerate() {
            p *= tables[k][proc.label_at(k, idx)][xk];
            if p == 0.0 {
                break;
            }
        }
        out.push(p);
    }
}

/// Joint distribution induced by a local model.
pub fn eval_classical(model: &LocalModel, proc: &ProcessSpec) -> Result<JointDistribution> {
    model.check_against(proc)?;
    let mut probs = Vec::with_capacity(proc.outcome_count());
    eval_tables(&model.tables, proc, &mut probs);
    JointDistribution::new(proc.alphabet_sizes().to_vec(), probs)
}

/// Joint distribution induced by a latent-variable model:
/// `P(x) = sum_s p(s) prod_k P_k(x_k | s, y_k)`.
pub fn eval_latent(model: &LatentModel, proc: &ProcessSpec) -> Result<JointDistribution> {
    model.check_against(proc)?;
    let mut probs = vec![0.0; proc.outcome_count()];
    for (idx, slot) in probs.iter_mut().enumerate() {
        let x = proc.decode(idx);
        let labels = proc.labels_along(idx);
        *slot = model
            .latent_probs
            .iter()
            .enumerate()
            .map(|(s, &ps)| {
                x.iter()
                    .enumerate()
                    .fold(ps, |acc, (k, &xk)| acc * model.tables[k][s][labels[k]][xk])
            })
            .sum();
    }
    JointDistribution::new(proc.alphabet_sizes().to_vec(), probs)
}

/// Conditional distribution of one stage given one reachable prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalRow {
    pub prefix: Vec<usize>,
    pub prefix_index: usize,
    /// Marginal probability of the prefix.
    pub mass: f64,
    /// `P(x_stage | prefix)`.
    pub row: Vec<f64>,
}

/// Marginals of the prefixes of length `stage` and of length `stage + 1`.
fn prefix_marginals(target: &JointDistribution, proc: &ProcessSpec, stage: usize) -> (Vec<f64>, Vec<f64>) {
    let a = proc.alphabet(stage);
    let mut extended = vec![0.0; proc.prefix_count(stage) * a];
    for (idx, &p) in target.probs().iter().enumerate() {
        extended[proc.prefix_of(idx, stage + 1)] += p;
    }
    let prefix = extended.chunks(a).map(|c| c.iter().sum()).collect();
    (prefix, extended)
}

/// `P(x_stage | x_<stage)` for every prefix with mass above [`SUPPORT_TOL`],
/// in prefix order.
pub fn conditionals(target: &JointDistribution, proc: &ProcessSpec, stage: usize) -> Result<Vec<ConditionalRow>> {
    target.check_against(proc)?;
    if stage >= proc.stages() {
        return Err(structural(format!(
            "stage {} out of range for a {}-stage process",
            stage + 1,
            proc.stages()
        )));
    }
    let a = proc.alphabet(stage);
    let (prefix_mass, extended) = prefix_marginals(target, proc, stage);
    Ok(prefix_mass
        .iter()
        .enumerate()
        .filter(|(_, &m)| m > SUPPORT_TOL)
        .map(|(h, &mass)| ConditionalRow {
            prefix: proc.decode_prefix(stage, h),
            prefix_index: h,
            mass,
            row: extended[h * a..(h + 1) * a].iter().map(|p| p / mass).collect(),
        })
        .collect())
}

/// Kuhn's behavioral conversion under perfect recall: each label's row is the
/// conditional of the target on the unique prefix carrying that label.
/// Labels whose prefix is unreachable, or that no prefix carries, get uniform
/// rows.
pub fn behavioral_from_joint(target: &JointDistribution, proc: &ProcessSpec) -> Result<LocalModel> {
    target.check_against(proc)?;
    proc.require_perfect_recall()?;
    let mut model = LocalModel::uniform(proc);
    for stage in 0..proc.stages() {
        for c in conditionals(target, proc, stage)? {
            let label = proc.info_map(stage).label(c.prefix_index);
            model.tables[stage][label] = c.row;
        }
    }
    Ok(model)
}

/// Two reachable prefixes that share an information label but demand
/// different rules.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub stage: usize,
    pub label: usize,
    pub prefix: Vec<usize>,
    pub other_prefix: Vec<usize>,
    /// Max-abs difference between the two conditional rows.
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImplementabilityReport {
    pub feasible: bool,
    /// Present iff `feasible`.
    pub certificate: Option<LocalModel>,
    /// The pair with the largest discrepancy; present whenever some label is
    /// shared by two reachable prefixes.
    pub witness: Option<Witness>,
}

impl ImplementabilityReport {
    pub fn max_discrepancy(&self) -> f64 {
        self.witness.as_ref().map_or(0.0, |w| w.discrepancy)
    }
}

/// Decides whether `target` factorizes as `prod_k P_k(x_k | y_k)`.
///
/// A local model exists iff, at every stage, all reachable prefixes carrying
/// the same label have the same conditional row. Unreachable prefixes
/// constrain nothing. When feasible, the certificate uses `P(x_k | y_k)` on
/// reached labels and uniform rows elsewhere.
pub fn check_classical_implementable(target: &JointDistribution, proc: &ProcessSpec) -> Result<ImplementabilityReport> {
    target.check_against(proc)?;
    let mut certificate = LocalModel::uniform(proc);
    let mut worst: Option<Witness> = None;

    for stage in 0..proc.stages() {
        let map = proc.info_map(stage);
        let mut by_label: Vec<Vec<ConditionalRow>> = vec![Vec::new(); map.label_count()];
        for c in conditionals(target, proc, stage)? {
            by_label[map.label(c.prefix_index)].push(c);
        }
        for (label, rows) in by_label.iter().enumerate() {
            if rows.is_empty() {
                continue;
            }
            for (i, r1) in rows.iter().enumerate() {
                for r2 in &rows[i + 1..] {
                    let d = crate::distribution::max_abs_diff(&r1.row, &r2.row);
                    if worst.as_ref().is_none_or(|w| d > w.discrepancy) {
                        worst = Some(Witness {
                            stage,
                            label,
                            prefix: r1.prefix.clone(),
                            other_prefix: r2.prefix.clone(),
                            discrepancy: d,
                        });
                    }
                }
            }
            certificate.tables[stage][label] = if let [only] = rows.as_slice() {
                only.row.clone()
            } else {
                let total: f64 = rows.iter().map(|r| r.mass).sum();
                (0..proc.alphabet(stage))
                    .map(|x| rows.iter().map(|r| r.mass * r.row[x]).sum::<f64>() / total)
                    .collect()
            };
        }
    }

    let feasible = worst.as_ref().is_none_or(|w| w.discrepancy <= AGREEMENT_TOL);
    Ok(ImplementabilityReport {
        feasible,
        certificate: feasible.then_some(certificate),
        witness: worst,
    })
}
