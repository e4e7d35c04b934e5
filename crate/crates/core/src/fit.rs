//! Nearest local model to a target distribution.
//!
//! Deterministic multistart coordinate descent. Restart 0 starts from the
//! label-conditional rows `P(x_k | y_k)` of the target (exact whenever the
//! target is implementable); the remaining restarts start from random rows
//! drawn from a seeded stream. Each sweep visits rows stage-major,
//! label-minor, and improves one row at a time by line searches that move
//! mass between two outcomes. The objective is linear in any single row, so
//! for every metric here each line search is over a convex function of one
//! variable: a coarse grid followed by golden-section refinement.
//!
//! The returned distance is an upper bound on the true gap; nothing here
//! proves global optimality.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classical::{conditionals, eval_tables, LocalModel};
use crate::distribution::JointDistribution;
use crate::error::{structural, Error, Result};
use crate::process::ProcessSpec;

/// Smoothing added to both arguments of the KL divergence.
pub const KL_EPSILON: f64 = 1e-12;

const GOLDEN_ITERATIONS: usize = 40;
const SWEEP_IMPROVEMENT_TOL: f64 = 1e-14;
/// A restart that reaches this distance cannot be beaten.
const EXACT_FIT: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// `1/2 sum |p - q|`.
    TotalVariation,
    /// Euclidean distance between probability vectors.
    L2,
    /// `KL(target || model)` in nats, both arguments smoothed by
    /// [`KL_EPSILON`].
    Kl,
}

impl Metric {
    pub fn distance(self, target: &[f64], model: &[f64]) -> f64 {
        match self {
            Metric::TotalVariation => 0.5 * target.iter().zip(model).map(|(a, b)| (a - b).abs()).sum::<f64>(),
            Metric::L2 => target
                .iter()
                .zip(model)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            Metric::Kl => target
                .iter()
                .zip(model)
                .map(|(t, m)| {
                    let t = t + KL_EPSILON;
                    t * (t / (m + KL_EPSILON)).ln()
                })
                .sum::<f64>()
                .max(0.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::TotalVariation => "tv",
            Metric::L2 => "l2",
            Metric::Kl => "kl",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tv" | "total-variation" => Ok(Metric::TotalVariation),
            "l2" => Ok(Metric::L2),
            "kl" => Ok(Metric::Kl),
            other => Err(structural(format!("unknown metric `{other}` (expected tv, l2 or kl)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchParams {
    pub seed: u64,
    /// Total number of starts, including the conditional-row start.
    pub restarts: usize,
    /// Spacing of the coarse line-search grid, as a fraction of the mass
    /// being moved.
    pub grid_step: f64,
    /// Maximum sweeps per restart.
    pub max_iterations: usize,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: 4,
            grid_step: 0.05,
            max_iterations: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub best_model: LocalModel,
    pub distance: f64,
    pub metric: Metric,
    /// Starts actually run; the search stops early on an exact fit.
    pub restarts_used: usize,
    /// Sweeps summed over all starts.
    pub iterations: usize,
    pub best_restart: usize,
}

pub fn fit_local_model(
    target: &JointDistribution,
    proc: &ProcessSpec,
    metric: Metric,
    params: &SearchParams,
) -> Result<FitReport> {
    target.check_against(proc)?;
    if params.restarts == 0 {
        return Err(structural("at least one restart is required"));
    }
    if !(params.grid_step > 0.0 && params.grid_step <= 1.0) {
        return Err(structural(format!("grid step {} must lie in (0, 1]", params.grid_step)));
    }

    let mut best: Option<(f64, usize, Vec<Vec<Vec<f64>>>)> = None;
    let mut iterations = 0;
    let mut restarts_used = 0;
    for restart in 0..params.restarts {
        let start = if restart == 0 {
            conditional_start(target, proc)?
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(restart as u64);
            random_start(proc, &mut rng)
        };
        let mut search = Search::new(target.probs(), proc, metric, params, start);
        iterations += search.run();
        restarts_used += 1;
        let d = search.value;
        if best.as_ref().is_none_or(|(bd, _, _)| d < *bd) {
            best = Some((d, restart, search.tables));
        }
        if d <= EXACT_FIT {
            break;
        }
    }

    let (_, best_restart, tables) = best.expect("at least one restart ran");
    let best_model = LocalModel::new(tables)?;
    let fitted = crate::classical::eval_classical(&best_model, proc)?;
    Ok(FitReport {
        distance: metric.distance(target.probs(), fitted.probs()),
        best_model,
        metric,
        restarts_used,
        iterations,
        best_restart,
    })
}

/// Rows `P(x_k | y_k)` of the target; uniform on unreached labels.
fn conditional_start(target: &JointDistribution, proc: &ProcessSpec) -> Result<Vec<Vec<Vec<f64>>>> {
    let mut tables = LocalModel::uniform(proc).tables().to_vec();
    for stage in 0..proc.stages() {
        let a = proc.alphabet(stage);
        let mut acc = vec![vec![0.0; a]; proc.label_count(stage)];
        let mut mass = vec![0.0; proc.label_count(stage)];
        for c in conditionals(target, proc, stage)? {
            let y = proc.info_map(stage).label(c.prefix_index);
            mass[y] += c.mass;
            for (slot, r) in acc[y].iter_mut().zip(&c.row) {
                *slot += c.mass * r;
            }
        }
        for (y, row) in acc.into_iter().enumerate() {
            if mass[y] > 0.0 {
                tables[stage][y] = renormalize(row.into_iter().map(|v| v / mass[y]).collect());
            }
        }
    }
    Ok(tables)
}

fn random_start(proc: &ProcessSpec, rng: &mut ChaCha8Rng) -> Vec<Vec<Vec<f64>>> {
    (0..proc.stages())
        .map(|k| {
            (0..proc.label_count(k))
                .map(|_| {
                    let w: Vec<f64> = (0..proc.alphabet(k)).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
                    renormalize(w)
                })
                .collect()
        })
        .collect()
}

fn renormalize(mut row: Vec<f64>) -> Vec<f64> {
    let total: f64 = row.iter().sum();
    row.iter_mut().for_each(|v| *v /= total);
    row
}

struct Search<'a> {
    target: &'a [f64],
    proc: &'a ProcessSpec,
    metric: Metric,
    params: &'a SearchParams,
    tables: Vec<Vec<Vec<f64>>>,
    value: f64,
    scratch: Vec<f64>,
}

impl<'a> Search<'a> {
    fn new(
        target: &'a [f64],
        proc: &'a ProcessSpec,
        metric: Metric,
        params: &'a SearchParams,
        tables: Vec<Vec<Vec<f64>>>,
    ) -> Self {
        let mut s = Self {
            target,
            proc,
            metric,
            params,
            tables,
            value: f64::INFINITY,
            scratch: Vec::new(),
        };
        s.value = s.objective();
        s
    }

    fn objective(&mut self) -> f64 {
        eval_tables(&self.tables, self.proc, &mut self.scratch);
        self.metric.distance(self.target, &self.scratch)
    }

    /// Runs sweeps until one improves by less than the tolerance; returns the
    /// number of sweeps.
    fn run(&mut self) -> usize {
        let mut sweeps = 0;
        while sweeps < self.params.max_iterations {
            sweeps += 1;
            let before = self.value;
            for stage in 0..self.proc.stages() {
                for label in 0..self.proc.label_count(stage) {
                    self.improve_row(stage, label);
                }
            }
            if before - self.value < SWEEP_IMPROVEMENT_TOL || self.value <= EXACT_FIT {
                break;
            }
        }
        sweeps
    }

    fn improve_row(&mut self, stage: usize, label: usize) {
        let a = self.proc.alphabet(stage);
        for i in 0..a {
            for j in i + 1..a {
                self.pair_line_search(stage, label, i, j);
            }
        }
    }

    /// Optimizes the split of `row[i] + row[j]` between outcomes `i` and `j`.
    fn pair_line_search(&mut self, stage: usize, label: usize, i: usize, j: usize) {
        let total = self.tables[stage][label][i] + self.tables[stage][label][j];
        if total <= 0.0 {
            return;
        }
        let current = self.tables[stage][label][i];
        let eval = |s: &mut Self, t: f64| {
            s.tables[stage][label][i] = t;
            s.tables[stage][label][j] = total - t;
            s.objective()
        };

        let steps = (1.0 / self.params.grid_step).ceil() as usize;
        let mut best_t = current;
        let mut best_v = self.value;
        for g in 0..=steps {
            let t = (total * g as f64 / steps as f64).min(total);
            let v = eval(self, t);
            if v < best_v {
                best_v = v;
                best_t = t;
            }
        }

        let width = total / steps as f64;
        let (mut lo, mut hi) = ((best_t - width).max(0.0), (best_t + width).min(total));
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = hi - ratio * (hi - lo);
        let mut x2 = lo + ratio * (hi - lo);
        let mut f1 = eval(self, x1);
        let mut f2 = eval(self, x2);
        for _ in 0..GOLDEN_ITERATIONS {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - ratio * (hi - lo);
                f1 = eval(self, x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + ratio * (hi - lo);
                f2 = eval(self, x2);
            }
        }
        for (t, v) in [(x1, f1), (x2, f2)] {
            if v < best_v {
                best_v = v;
                best_t = t;
            }
        }

        self.tables[stage][label][i] = best_t;
        self.tables[stage][label][j] = total - best_t;
        self.value = best_v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{check_classical_implementable, eval_classical};

    fn anti_correlated() -> JointDistribution {
        JointDistribution::new(vec![2, 2], vec![0.0, 0.5, 0.5, 0.0]).unwrap()
    }

    /// Brute-force oracle: TV between the anti-correlated target and the
    /// product a x b over a 0.001 grid.
    fn grid_optimum_tv() -> f64 {
        let target = [0.0, 0.5, 0.5, 0.0];
        let mut best = f64::INFINITY;
        for i in 0..=1000 {
            for j in 0..=1000 {
                let a = i as f64 / 1000.0;
                let b = j as f64 / 1000.0;
                let p = [a * b, a * (1.0 - b), (1.0 - a) * b, (1.0 - a) * (1.0 - b)];
                let tv = 0.5 * p.iter().zip(&target).map(|(x, y)| (x - y).abs()).sum::<f64>();
                best = best.min(tv);
            }
        }
        best
    }

    #[test]
    fn metrics_on_simple_vectors() {
        let p = [0.5, 0.5];
        let q = [1.0, 0.0];
        assert!((Metric::TotalVariation.distance(&p, &q) - 0.5).abs() < 1e-15);
        assert!((Metric::L2.distance(&p, &q) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(Metric::Kl.distance(&p, &p) < 1e-15);
        assert!(Metric::Kl.distance(&p, &q) > 10.0);
    }

    #[test]
    fn feasible_target_is_fit_exactly() {
        let proc = ProcessSpec::oblivious(vec![2, 3]).unwrap();
        let m = LocalModel::new(vec![vec![vec![0.4, 0.6]], vec![vec![0.1, 0.2, 0.7]]]).unwrap();
        let t = eval_classical(&m, &proc).unwrap();
        assert!(check_classical_implementable(&t, &proc).unwrap().feasible);
        for metric in [Metric::TotalVariation, Metric::L2, Metric::Kl] {
            let r = fit_local_model(&t, &proc, metric, &SearchParams::default()).unwrap();
            assert!(r.distance < 1e-6, "{metric}: {}", r.distance);
        }
    }

    #[test]
    fn random_starts_alone_converge_on_smooth_metric() {
        let proc = ProcessSpec::oblivious(vec![2, 2]).unwrap();
        let m = LocalModel::new(vec![vec![vec![0.35, 0.65]], vec![vec![0.8, 0.2]]]).unwrap();
        let t = eval_classical(&m, &proc).unwrap();
        let params = SearchParams {
            max_iterations: 500,
            ..SearchParams::default()
        };
        let mut search = Search::new(
            t.probs(),
            &proc,
            Metric::L2,
            &params,
            vec![vec![vec![0.9, 0.1]], vec![vec![0.3, 0.7]]],
        );
        search.run();
        assert!(search.value < 1e-6, "{}", search.value);
    }

    #[test]
    fn anti_correlation_gap_matches_grid_optimum() {
        let proc = ProcessSpec::oblivious(vec![2, 2]).unwrap();
        let r = fit_local_model(
            &anti_correlated(),
            &proc,
            Metric::TotalVariation,
            &SearchParams::default(),
        )
        .unwrap();
        let oracle = grid_optimum_tv();
        assert!((r.distance - oracle).abs() < 2e-3, "fit {} oracle {oracle}", r.distance);
    }

    #[test]
    fn point_mass_with_recall_is_fit_exactly() {
        let proc = ProcessSpec::perfect_recall(vec![2, 2, 2]).unwrap();
        let t = JointDistribution::point_mass(&proc, &[1, 0, 1]);
        let r = fit_local_model(&t, &proc, Metric::TotalVariation, &SearchParams::default()).unwrap();
        assert!(r.distance < 1e-6);
    }

    #[test]
    fn fit_is_no_worse_than_uniform_model() {
        let proc = ProcessSpec::oblivious(vec![3, 2]).unwrap();
        let t = JointDistribution::new(vec![3, 2], vec![0.3, 0.0, 0.0, 0.3, 0.2, 0.2]).unwrap();
        for metric in [Metric::TotalVariation, Metric::L2, Metric::Kl] {
            let uniform = eval_classical(&LocalModel::uniform(&proc), &proc).unwrap();
            let r = fit_local_model(&t, &proc, metric, &SearchParams::default()).unwrap();
            assert!(r.distance <= metric.distance(t.probs(), uniform.probs()) + 1e-15);
        }
    }

    #[test]
    fn fits_are_deterministic() {
        let proc = ProcessSpec::oblivious(vec![2, 2]).unwrap();
        let p = SearchParams {
            seed: 42,
            ..SearchParams::default()
        };
        let a = fit_local_model(&anti_correlated(), &proc, Metric::L2, &p).unwrap();
        let b = fit_local_model(&anti_correlated(), &proc, Metric::L2, &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn reported_distance_is_recomputed_from_model() {
        let proc = ProcessSpec::oblivious(vec![2, 2]).unwrap();
        let r = fit_local_model(&anti_correlated(), &proc, Metric::Kl, &SearchParams::default()).unwrap();
        let fitted = eval_classical(&r.best_model, &proc).unwrap();
        assert!((Metric::Kl.distance(anti_correlated().probs(), fitted.probs()) - r.distance).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_params() {
        let proc = ProcessSpec::oblivious(vec![2, 2]).unwrap();
        let bad = SearchParams {
            grid_step: 0.0,
            ..SearchParams::default()
        };
        assert!(fit_local_model(&anti_correlated(), &proc, Metric::L2, &bad).is_err());
        assert!("hellinger".parse::<Metric>().is_err());
    }
}
