//! Sequential processes and their information structures.
//!
//! Stages are indexed from 0 in the library. Outcome tuples are indexed
//! lexicographically with stage 0 most significant, and the prefixes seen by
//! stage `k` (tuples of length `k`) are indexed the same way.

use crate::error::{structural, Error, Result};

/// Named information-structure generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfoGenerator {
    /// Every prefix maps to label 0.
    Constant,
    /// Every prefix gets its own label (its lexicographic index).
    PerfectRecall,
}

/// The map from the prefixes of one stage to information labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfoMap {
    labels: Vec<usize>,
    label_count: usize,
}

impl InfoMap {
    /// `labels[p]` is the label of prefix index `p`.
    pub fn new(labels: Vec<usize>, label_count: usize) -> Result<Self> {
        if label_count == 0 {
            return Err(structural("an information map needs at least one label"));
        }
        if let Some((p, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= label_count) {
            return Err(structural(format!(
                "prefix index {p} maps to label {l}, but only {label_count} labels are declared"
            )));
        }
        Ok(Self { labels, label_count })
    }

    pub fn generate(generator: InfoGenerator, prefix_count: usize) -> Self {
        match generator {
            InfoGenerator::Constant => Self {
                labels: vec![0; prefix_count],
                label_count: 1,
            },
            InfoGenerator::PerfectRecall => Self {
                labels: (0..prefix_count).collect(),
                label_count: prefix_count.max(1),
            },
        }
    }

    pub fn label(&self, prefix_index: usize) -> usize {
        self.labels[prefix_index]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label_count(&self) -> usize {
        self.label_count
    }

    pub fn is_constant(&self) -> bool {
        self.labels.windows(2).all(|w| w[0] == w[1])
    }
}

/// A sequential process: per-stage alphabets plus the information map of
/// every stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessSpec {
    alphabet_sizes: Vec<usize>,
    info_maps: Vec<InfoMap>,
}

impl ProcessSpec {
    pub fn new(alphabet_sizes: Vec<usize>, info_maps: Vec<InfoMap>) -> Result<Self> {
        if alphabet_sizes.is_empty() {
            return Err(structural("a process needs at least one stage"));
        }
        if let Some(k) = alphabet_sizes.iter().position(|&a| a == 0) {
            return Err(structural(format!("stage {} has an empty alphabet", k + 1)));
        }
        if info_maps.len() != alphabet_sizes.len() {
            return Err(structural(format!(
                "{} stages but {} information maps",
                alphabet_sizes.len(),
                info_maps.len()
            )));
        }
        let mut prefixes = 1usize;
        for (k, map) in info_maps.iter().enumerate() {
            if map.labels.len() != prefixes {
                return Err(structural(format!(
                    "stage {} information map covers {} prefixes, expected {prefixes}",
                    k + 1,
                    map.labels.len()
                )));
            }
            prefixes *= alphabet_sizes[k];
        }
        Ok(Self {
            alphabet_sizes,
            info_maps,
        })
    }

    pub fn from_generators(alphabet_sizes: Vec<usize>, generators: &[InfoGenerator]) -> Result<Self> {
        if generators.len() != alphabet_sizes.len() {
            return Err(structural(format!(
                "{} stages but {} generators",
                alphabet_sizes.len(),
                generators.len()
            )));
        }
        let mut prefixes = 1usize;
        let mut maps = Vec::with_capacity(generators.len());
        for (k, &g) in generators.iter().enumerate() {
            maps.push(InfoMap::generate(g, prefixes));
            prefixes *= alphabet_sizes[k].max(1);
        }
        Self::new(alphabet_sizes, maps)
    }

    /// No stage sees anything about earlier outcomes.
    pub fn oblivious(alphabet_sizes: Vec<usize>) -> Result<Self> {
        let g = vec![InfoGenerator::Constant; alphabet_sizes.len()];
        Self::from_generators(alphabet_sizes, &g)
    }

    /// Every stage sees the full history.
    pub fn perfect_recall(alphabet_sizes: Vec<usize>) -> Result<Self> {
        let g = vec![InfoGenerator::PerfectRecall; alphabet_sizes.len()];
        Self::from_generators(alphabet_sizes, &g)
    }

    pub fn stages(&self) -> usize {
        self.alphabet_sizes.len()
    }

    pub fn alphabet_sizes(&self) -> &[usize] {
        &self.alphabet_sizes
    }

    pub fn alphabet(&self, stage: usize) -> usize {
        self.alphabet_sizes[stage]
    }

    pub fn info_maps(&self) -> &[InfoMap] {
        &self.info_maps
    }

    pub fn info_map(&self, stage: usize) -> &InfoMap {
        &self.info_maps[stage]
    }

    pub fn label_count(&self, stage: usize) -> usize {
        self.info_maps[stage].label_count
    }

    /// Number of complete outcome tuples.
    pub fn outcome_count(&self) -> usize {
        self.alphabet_sizes.iter().product()
    }

    /// Number of prefixes of length `stage`, i.e. histories seen by `stage`.
    pub fn prefix_count(&self, stage: usize) -> usize {
        self.alphabet_sizes[..stage].iter().product()
    }

    /// Number of tuples sharing one prefix of length `stage`.
    fn suffix_count(&self, stage: usize) -> usize {
        self.alphabet_sizes[stage..].iter().product()
    }

    pub fn decode(&self, index: usize) -> Vec<usize> {
        decode_mixed(index, &self.alphabet_sizes)
    }

    pub fn encode(&self, outcome: &[usize]) -> usize {
        debug_assert_eq!(outcome.len(), self.stages());
        outcome
            .iter()
            .zip(&self.alphabet_sizes)
            .fold(0, |acc, (&x, &a)| acc * a + x)
    }

    pub fn decode_prefix(&self, stage: usize, prefix_index: usize) -> Vec<usize> {
        decode_mixed(prefix_index, &self.alphabet_sizes[..stage])
    }

    /// Index of the length-`stage` prefix of the tuple with index `index`.
    pub fn prefix_of(&self, index: usize, stage: usize) -> usize {
        index / self.suffix_count(stage)
    }

    /// Information label observed at `stage` along the tuple `index`.
    pub fn label_at(&self, stage: usize, index: usize) -> usize {
        self.info_maps[stage].label(self.prefix_of(index, stage))
    }

    /// Labels of every stage along tuple `index`.
    pub fn labels_along(&self, index: usize) -> Vec<usize> {
        (0..self.stages()).map(|k| self.label_at(k, index)).collect()
    }

    /// Fails with the first label shared by two distinct prefixes.
    pub fn require_perfect_recall(&self) -> Result<()> {
        for (stage, map) in self.info_maps.iter().enumerate() {
            let mut owner: Vec<Option<usize>> = vec![None; map.label_count];
            for (p, &l) in map.labels.iter().enumerate() {
                if let Some(first) = owner[l] {
                    return Err(Error::NotPerfectRecall {
                        stage,
                        label: l,
                        first: self.decode_prefix(stage, first),
                        second: self.decode_prefix(stage, p),
                    });
                }
                owner[l] = Some(p);
            }
        }
        Ok(())
    }

    pub fn has_perfect_recall(&self) -> bool {
        self.require_perfect_recall().is_ok()
    }
}

fn decode_mixed(mut index: usize, radices: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radices.len()];
    for (slot, &r) in out.iter_mut().zip(radices).rev() {
        *slot = index % r;
        index /= r;
    }
    out
}
