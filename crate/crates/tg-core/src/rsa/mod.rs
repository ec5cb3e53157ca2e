//! Representational similarity: dissimilarity matrices over probe responses,
//! RDM-to-RDM correlation, and the teacher-guidance scores that drive the
//! search.
//!
//! For an activation matrix `F` (rows = probe inputs, columns = features),
//! the RDM entry is `M[i][j] = 1 - corr(F_i, F_j)` with Pearson correlation
//! over features. A candidate is scored against a teacher by taking, for each
//! teacher layer, the best upper-triangle correlation over all candidate
//! layers, averaging those into a teacher-guidance value, and combining with
//! premature accuracy as `P + alpha * TG`.
//!
//! All sums use exactly rounded summation, so RDMs are bit-for-bit invariant
//! under feature permutations. Everything here is pure and safe to call from
//! any number of workers.

mod io;

pub use io::{
    load_teacher_from_manifest, probe_set_hash, read_activation_matrix, read_rdm, save_teacher,
    write_activation_matrix, write_rdm, FormatError, TeacherManifest, TeacherManifestEntry,
};

use crate::util::{exact_mean, exact_sum, mix_seed, pearson};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum RsaError {
    #[error("activation row {input_id} has zero variance")]
    ZeroVarianceRow { input_id: String },
    #[error("need at least 3 rows to form an RDM, got {n}")]
    TooFewRows { n: usize },
    #[error("input ids are not unique: {id} repeats")]
    DuplicateInputId { id: String },
    #[error("row count {rows} does not match id count {ids}")]
    IdCountMismatch { rows: usize, ids: usize },
    #[error("activation values must be finite")]
    NonFiniteValue,
    #[error("category ids are required for a category RDM")]
    MissingCategoryIds,
    #[error("RDM dimensions differ: {a} vs {b}")]
    DimensionMismatch { a: usize, b: usize },
    #[error("RDMs are not aligned on the same probe set")]
    AlignmentMismatch,
    #[error("upper triangle has zero variance")]
    ZeroVarianceTriangle,
    #[error("RDM invariant violated: {0}")]
    InvalidRdm(String),
    #[error("teacher spec needs at least one RDM")]
    EmptyTeacher,
    #[error("candidate RDM list is empty")]
    NoCandidateLayers,
}

/// Responses of one representational layer to a fixed probe input set.
/// `values` is row-major, rows = probe inputs, columns = features.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationMatrix {
    values: Vec<f64>,
    n_inputs: usize,
    n_features: usize,
    input_ids: Vec<String>,
    category_ids: Option<Vec<String>>,
}

impl ActivationMatrix {
    pub fn new(
        values: Vec<f64>,
        n_inputs: usize,
        n_features: usize,
        input_ids: Vec<String>,
        category_ids: Option<Vec<String>>,
    ) -> Result<Self, RsaError> {
        assert_eq!(values.len(), n_inputs * n_features, "value buffer shape mismatch");
        if input_ids.len() != n_inputs {
            return Err(RsaError::IdCountMismatch { rows: n_inputs, ids: input_ids.len() });
        }
        if let Some(cats) = &category_ids {
            if cats.len() != n_inputs {
                return Err(RsaError::IdCountMismatch { rows: n_inputs, ids: cats.len() });
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(RsaError::NonFiniteValue);
        }
        let mut seen = std::collections::HashSet::new();
        for id in &input_ids {
            if !seen.insert(id) {
                return Err(RsaError::DuplicateInputId { id: id.clone() });
            }
        }
        Ok(ActivationMatrix { values, n_inputs, n_features, input_ids, category_ids })
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn input_ids(&self) -> &[String] {
        &self.input_ids
    }

    pub fn category_ids(&self) -> Option<&[String]> {
        self.category_ids.as_deref()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_features..(i + 1) * self.n_features]
    }

    /// Rows averaged within each category, categories in first-appearance
    /// order; input ids of the result are the category labels.
    pub fn category_means(&self) -> Result<ActivationMatrix, RsaError> {
        let cats = self.category_ids.as_ref().ok_or(RsaError::MissingCategoryIds)?;
        let mut order: Vec<&String> = Vec::new();
        for c in cats {
            if !order.contains(&c) {
                order.push(c);
            }
        }
        let mut values = Vec::with_capacity(order.len() * self.n_features);
        for cat in &order {
            let members: Vec<usize> =
                (0..self.n_inputs).filter(|&i| &cats[i] == *cat).collect();
            for col in 0..self.n_features {
                let column: Vec<f64> =
                    members.iter().map(|&i| self.values[i * self.n_features + col]).collect();
                values.push(exact_mean(&column));
            }
        }
        ActivationMatrix::new(
            values,
            order.len(),
            self.n_features,
            order.into_iter().cloned().collect(),
            None,
        )
    }
}

/// Seeded without-replacement column subsample applied before the RDM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureSubsample {
    pub size: usize,
    pub seed: u64,
}

/// Default feature-subsample size when a config does not override it.
pub const DEFAULT_FEATURE_SUBSAMPLE: usize = 512;

/// Symmetric dissimilarity embedding of a representation: zero diagonal,
/// entries in `[0, 2]`, rows aligned with `ids`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rdm {
    values: Vec<f64>,
    n: usize,
    ids: Vec<String>,
}

impl Rdm {
    /// Builds an RDM from raw values, enforcing every invariant.
    pub fn new(values: Vec<f64>, ids: Vec<String>) -> Result<Self, RsaError> {
        let n = ids.len();
        if values.len() != n * n {
            return Err(RsaError::InvalidRdm(format!(
                "value count {} is not {n}x{n}",
                values.len()
            )));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(RsaError::InvalidRdm(format!("diagonal entry {i} is not 0")));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !v.is_finite() {
                    return Err(RsaError::InvalidRdm(format!("entry ({i},{j}) is not finite")));
                }
                if !(0.0..=2.0).contains(&v) {
                    return Err(RsaError::InvalidRdm(format!(
                        "entry ({i},{j}) = {v} outside [0, 2]"
                    )));
                }
                if values[i * n + j] != values[j * n + i] {
                    return Err(RsaError::InvalidRdm(format!("entry ({i},{j}) not symmetric")));
                }
            }
        }
        Ok(Rdm { values, n, ids })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Strictly upper triangle in row-major order (diagonal excluded).
    pub fn upper_triangle(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * (self.n - 1) / 2);
        for i in 0..self.n {
            for j in i + 1..self.n {
                out.push(self.values[i * self.n + j]);
            }
        }
        out
    }
}

fn select_columns(m: &ActivationMatrix, subsample: Option<FeatureSubsample>) -> Vec<usize> {
    match subsample {
        Some(s) if s.size < m.n_features => {
            let mut rng = ChaCha20Rng::seed_from_u64(s.seed);
            let mut cols: Vec<usize> = (0..m.n_features).collect();
            cols.shuffle(&mut rng);
            cols.truncate(s.size);
            cols
        }
        // A subsample covering all columns is a no-op so the result is
        // bit-identical to the unsubsampled RDM.
        _ => (0..m.n_features).collect(),
    }
}

/// Computes the RDM of an activation matrix, optionally over a seeded column
/// subsample. Rows with zero variance are an error, not silently dropped,
/// so RDMs stay aligned across layers.
pub fn compute_rdm(
    m: &ActivationMatrix,
    subsample: Option<FeatureSubsample>,
) -> Result<Rdm, RsaError> {
    if m.n_inputs < 3 {
        return Err(RsaError::TooFewRows { n: m.n_inputs });
    }
    let cols = select_columns(m, subsample);
    let n = m.n_inputs;

    // Per-row centering over the selected columns.
    let mut centered: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut norms: Vec<f64> = Vec::with_capacity(n);
    for i in 0..n {
        let row = m.row(i);
        let selected: Vec<f64> = cols.iter().map(|&c| row[c]).collect();
        let mean = exact_mean(&selected);
        let c: Vec<f64> = selected.iter().map(|v| v - mean).collect();
        let ss = exact_sum(&c.iter().map(|v| v * v).collect::<Vec<_>>());
        if ss == 0.0 {
            return Err(RsaError::ZeroVarianceRow { input_id: m.input_ids[i].clone() });
        }
        centered.push(c);
        norms.push(ss);
    }

    let mut values = vec![0.0; n * n];
    let rows: Vec<(usize, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; n];
            for j in i + 1..n {
                let prods: Vec<f64> =
                    centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).collect();
                let sxy = exact_sum(&prods);
                let r = (sxy / (norms[i] * norms[j]).sqrt()).clamp(-1.0, 1.0);
                row[j] = (1.0 - r).clamp(0.0, 2.0);
            }
            (i, row)
        })
        .collect();
    for (i, row) in rows {
        for j in i + 1..n {
            values[i * n + j] = row[j];
            values[j * n + i] = row[j];
        }
    }
    Rdm::new(values, m.input_ids.clone())
}

/// RDM over category-mean rows (categories in first-appearance order).
pub fn compute_category_rdm(
    m: &ActivationMatrix,
    subsample: Option<FeatureSubsample>,
) -> Result<Rdm, RsaError> {
    let means = m.category_means()?;
    compute_rdm(&means, subsample)
}

/// Pearson correlation of the strictly-upper-triangle entries of two aligned
/// RDMs.
pub fn rdm_similarity(a: &Rdm, b: &Rdm) -> Result<f64, RsaError> {
    if a.n != b.n {
        return Err(RsaError::DimensionMismatch { a: a.n, b: b.n });
    }
    if a.ids != b.ids {
        return Err(RsaError::AlignmentMismatch);
    }
    pearson(&a.upper_triangle(), &b.upper_triangle()).ok_or(RsaError::ZeroVarianceTriangle)
}

/// Where a teacher RDM came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TeacherProvenance {
    InternalModel,
    ExternalFile,
}

/// One named teacher layer RDM.
#[derive(Debug, Clone)]
pub struct TeacherRdm {
    pub name: String,
    pub rdm: Rdm,
    pub provenance: TeacherProvenance,
}

/// A named list of teacher RDMs sharing one probe set.
#[derive(Debug, Clone)]
pub struct TeacherSpec {
    entries: Vec<TeacherRdm>,
}

impl TeacherSpec {
    pub fn new(entries: Vec<TeacherRdm>) -> Result<Self, RsaError> {
        let first = entries.first().ok_or(RsaError::EmptyTeacher)?;
        for e in &entries[1..] {
            if e.rdm.ids() != first.rdm.ids() {
                return Err(RsaError::AlignmentMismatch);
            }
        }
        Ok(TeacherSpec { entries })
    }

    pub fn entries(&self) -> &[TeacherRdm] {
        &self.entries
    }

    pub fn probe_ids(&self) -> &[String] {
        self.entries[0].rdm.ids()
    }
}

/// Per-teacher-layer scores and their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TgScore {
    /// For each teacher layer: best candidate-layer similarity.
    pub s: Vec<(String, f64)>,
    /// Mean of the per-layer scores.
    pub tg: f64,
}

/// Scores candidate RDMs against every teacher layer: each teacher layer gets
/// the maximum similarity over all candidate layers, and TG is their mean.
pub fn tg_score(
    candidate_rdms: &[(String, Rdm)],
    teacher: &TeacherSpec,
) -> Result<TgScore, RsaError> {
    if candidate_rdms.is_empty() {
        return Err(RsaError::NoCandidateLayers);
    }
    let mut s = Vec::with_capacity(teacher.entries.len());
    for entry in &teacher.entries {
        let mut best = f64::NEG_INFINITY;
        for (_, rdm) in candidate_rdms {
            let r = rdm_similarity(&entry.rdm, rdm)?;
            if r > best {
                best = r;
            }
        }
        s.push((entry.name.clone(), best));
    }
    let tg = exact_mean(&s.iter().map(|(_, v)| *v).collect::<Vec<_>>());
    Ok(TgScore { s, tg })
}

/// The combined search objective `P + alpha * TG`.
pub fn combined_score(p: f64, tg: f64, alpha: f64) -> f64 {
    debug_assert!(alpha >= 0.0);
    p + alpha * tg
}

/// Whether RDMs are computed per probe input or per category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RdmMode {
    PerInput,
    PerCategory,
}

/// Full scoring record of one candidate: premature accuracy, per-teacher-layer
/// similarities, their mean, and the combined objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuidanceScore {
    pub p: f64,
    pub alpha: f64,
    pub s: Vec<(String, f64)>,
    pub tg: f64,
    pub combined: f64,
}

impl GuidanceScore {
    pub fn new(p: f64, alpha: f64, tg: TgScore) -> Self {
        let combined = combined_score(p, tg.tg, alpha);
        GuidanceScore { p, alpha, s: tg.s, tg: tg.tg, combined }
    }

    /// Score without a teacher: TG is zero and the combined value equals P.
    pub fn performance_only(p: f64, alpha: f64) -> Self {
        GuidanceScore { p, alpha, s: Vec::new(), tg: 0.0, combined: p }
    }
}

/// A scored candidate with the intermediate RDMs kept for the tracker.
#[derive(Debug, Clone)]
pub struct ScoredCandidate {
    pub rdms: Vec<(String, Rdm)>,
    pub score: GuidanceScore,
}

/// Composes RDM computation, teacher scoring, and the combined objective for
/// one candidate's per-layer activations.
pub fn score_candidate(
    activations: &[(String, ActivationMatrix)],
    p: f64,
    teacher: &TeacherSpec,
    alpha: f64,
    mode: RdmMode,
    subsample: Option<FeatureSubsample>,
) -> Result<ScoredCandidate, RsaError> {
    let mut rdms = Vec::with_capacity(activations.len());
    for (idx, (name, m)) in activations.iter().enumerate() {
        // Independent column draw per layer, deterministic in the base seed.
        let sub = subsample
            .map(|s| FeatureSubsample { size: s.size, seed: mix_seed(s.seed, idx as u64) });
        let rdm = match mode {
            RdmMode::PerInput => compute_rdm(m, sub)?,
            RdmMode::PerCategory => compute_category_rdm(m, sub)?,
        };
        rdms.push((name.clone(), rdm));
    }
    let tg = tg_score(&rdms, teacher)?;
    let score = GuidanceScore::new(p, alpha, tg);
    Ok(ScoredCandidate { rdms, score })
}
