//! End-to-end fusion classifier over M feature sets: per-set quantization,
//! per-set discriminative trees, thickening via boosting, and binary or
//! one-vs-all multi-class inference with outlier rejection.
//!
//! Tie rules are fixed and deterministic: a binary score exactly at tau goes
//! to the q side; a multi-class argmax tie goes to the lowest class index.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::boost::{thicken, BoostConfig, BoostedModel};
use crate::distributions::{Quantizer, WeightedDataset};
use crate::error::{Error, Result};
use crate::features::{FeatureLayout, FeatureMatrix};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Quantile bins per feature dimension.
    pub bins: usize,
    /// Binary decision threshold stored on the trained model.
    pub tau: f64,
    /// Give both classes equal total weight instead of their natural
    /// empirical proportions (matters for pooled one-vs-all complements).
    pub rebalance: bool,
    pub boost: BoostConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            bins: 8,
            tau: 0.0,
            rebalance: false,
            boost: BoostConfig::default(),
        }
    }
}

/// Training data for one class: M feature matrices with equal row counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassData {
    pub name: String,
    pub sets: Vec<FeatureMatrix>,
}

impl ClassData {
    pub fn n_samples(&self) -> usize {
        self.sets.first().map_or(0, |m| m.rows())
    }

    fn validate(&self) -> Result<()> {
        if self.sets.is_empty() {
            return Err(Error::Data(format!("class {:?} has no feature sets", self.name)));
        }
        let n = self.sets[0].rows();
        if self.sets.iter().any(|m| m.rows() != n) {
            return Err(Error::ShapeMismatch(
                format!("{n} rows"),
                format!("ragged feature sets in class {:?}", self.name),
            ));
        }
        Ok(())
    }

    /// Flat feature row of sample `i` (sets concatenated).
    pub fn flat_row(&self, i: usize) -> Vec<f64> {
        let mut row = Vec::new();
        for m in &self.sets {
            row.extend_from_slice(m.row(i));
        }
        row
    }
}

/// Binary fusion classifier: per-set quantizers plus the boosted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryFusionModel {
    pub p_label: String,
    pub q_label: String,
    pub quantizers: Vec<Quantizer>,
    pub boosted: BoostedModel,
}

impl BinaryFusionModel {
    pub fn layout(&self) -> &FeatureLayout {
        &self.boosted.layout
    }

    pub fn tau(&self) -> f64 {
        self.boosted.tau
    }

    /// Quantizes per-set feature slices into the concatenated symbol row.
    pub fn quantize_sets(&self, sets: &[&[f64]]) -> Result<Vec<u16>> {
        if sets.len() != self.quantizers.len() {
            return Err(Error::DimensionMismatch {
                expected: self.quantizers.len(),
                got: sets.len(),
            });
        }
        let mut symbols = Vec::with_capacity(self.layout().n_total());
        for (q, &set) in self.quantizers.iter().zip(sets) {
            symbols.extend(q.quantize(set)?);
        }
        Ok(symbols)
    }

    /// Strong log-likelihood-ratio score for per-set feature slices.
    pub fn score_sets(&self, sets: &[&[f64]]) -> Result<f64> {
        let symbols = self.quantize_sets(sets)?;
        self.boosted.strong_llr(&symbols)
    }

    /// Score for a flat feature row (sets concatenated per the layout).
    pub fn score_flat(&self, flat: &[f64]) -> Result<f64> {
        let layout = self.layout().clone();
        let sets = layout.split(flat)?;
        self.score_sets(&sets)
    }
}

/// Classifies per-set feature vectors: p-label when the score is strictly
/// above tau, q-label otherwise. Returns the raw score alongside.
pub fn classify<'m>(model: &'m BinaryFusionModel, sets: &[&[f64]]) -> Result<(&'m str, f64)> {
    let score = model.score_sets(sets)?;
    let label = if score > model.tau() {
        model.p_label.as_str()
    } else {
        model.q_label.as_str()
    };
    Ok((label, score))
}

/// Trains the binary pipeline: pooled per-dimension quantizers, per-set
/// discriminative tree pairs concatenated into the initial forest, then the
/// thickening loop.
pub fn train_binary(
    features_p: &[FeatureMatrix],
    features_q: &[FeatureMatrix],
    labels: (&str, &str),
    config: &TrainConfig,
) -> Result<BinaryFusionModel> {
    if features_p.len() != features_q.len() || features_p.is_empty() {
        return Err(Error::ShapeMismatch(
            format!("{} feature sets", features_p.len()),
            format!("{} feature sets", features_q.len()),
        ));
    }
    let n_p = features_p[0].rows();
    let n_q = features_q[0].rows();
    if n_p < 2 || n_q < 2 {
        return Err(Error::Data(format!(
            "need at least 2 samples per class, got {n_p} and {n_q}"
        )));
    }
    for (mp, mq) in features_p.iter().zip(features_q) {
        if mp.cols() != mq.cols() {
            return Err(Error::ShapeMismatch(
                format!("{} columns", mp.cols()),
                format!("{} columns", mq.cols()),
            ));
        }
        if mp.rows() != n_p || mq.rows() != n_q {
            return Err(Error::ShapeMismatch(
                "consistent per-set row counts".into(),
                "ragged feature sets".into(),
            ));
        }
    }
    let layout = FeatureLayout::new(features_p.iter().map(|m| m.cols()).collect())?;

    // Quantizers are fitted on pooled p+q data so both classes share one
    // symbol alphabet per dimension.
    let mut quantizers = Vec::with_capacity(features_p.len());
    for (mp, mq) in features_p.iter().zip(features_q) {
        let pooled = FeatureMatrix::vstack(&[mp, mq])?;
        quantizers.push(Quantizer::fit(&pooled, config.bins)?);
    }

    let n = n_p + n_q;
    let mut symbols = Vec::with_capacity(n * layout.n_total());
    for (matrices, rows) in [(features_p, n_p), (features_q, n_q)] {
        for i in 0..rows {
            for (q, m) in quantizers.iter().zip(matrices) {
                symbols.extend(q.quantize(m.row(i))?);
            }
        }
    }
    let mut labels_vec = vec![1i8; n_p];
    labels_vec.extend(vec![-1i8; n_q]);

    let cells: Vec<usize> = quantizers.iter().flat_map(|q| q.cells()).collect();
    let weights = if config.rebalance {
        let mut w = vec![0.5 / n_p as f64; n_p];
        w.extend(vec![0.5 / n_q as f64; n_q]);
        w
    } else {
        vec![1.0 / n as f64; n]
    };
    let ds = WeightedDataset::new(symbols, cells, labels_vec, weights)?;

    let mut boosted = thicken(&ds, &layout, &config.boost)?;
    boosted.tau = config.tau;
    Ok(BinaryFusionModel {
        p_label: labels.0.to_string(),
        q_label: labels.1.to_string(),
        quantizers,
        boosted,
    })
}

/// K one-vs-all binary fusion models plus the outlier threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassModel {
    pub class_names: Vec<String>,
    pub submodels: Vec<BinaryFusionModel>,
    pub tau_out: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelEnvelope {
    format_version: u32,
    #[serde(flatten)]
    model: MulticlassModel,
}

impl MulticlassModel {
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn layout(&self) -> &FeatureLayout {
        self.submodels[0].layout()
    }

    /// One strong LLR per class, in class order.
    pub fn scores_flat(&self, flat: &[f64]) -> Result<Vec<f64>> {
        self.submodels.iter().map(|m| m.score_flat(flat)).collect()
    }

    /// Argmax decision; ties break to the lowest class index.
    pub fn classify_flat(&self, flat: &[f64]) -> Result<(usize, Vec<f64>)> {
        let scores = self.scores_flat(flat)?;
        let mut best = 0;
        for (k, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = k;
            }
        }
        Ok((best, scores))
    }

    /// True when every class score falls below tau_out. Without a threshold
    /// nothing is rejected.
    pub fn reject_outlier_flat(&self, flat: &[f64]) -> Result<bool> {
        let Some(tau_out) = self.tau_out else {
            return Ok(false);
        };
        let scores = self.scores_flat(flat)?;
        Ok(scores.iter().all(|&s| s < tau_out))
    }

    /// Adds class K+1: trains exactly one new submodel (the new class
    /// against the pooled existing data) and leaves every existing submodel
    /// untouched. `existing` must carry the training data of the current
    /// classes in model order.
    pub fn add_class(
        &self,
        existing: &[ClassData],
        new_class: &ClassData,
        config: &TrainConfig,
    ) -> Result<MulticlassModel> {
        let names: Vec<&str> = existing.iter().map(|c| c.name.as_str()).collect();
        let expect: Vec<&str> = self.class_names.iter().map(|s| s.as_str()).collect();
        if names != expect {
            return Err(Error::Data(
                "existing class data does not match the model's classes".into(),
            ));
        }
        if self.class_names.iter().any(|n| *n == new_class.name) {
            return Err(Error::Data(format!(
                "class {:?} already present",
                new_class.name
            )));
        }
        let complement = pool_complement(existing, usize::MAX)?;
        let submodel = train_binary(
            &new_class.sets,
            &complement,
            (&new_class.name, "rest"),
            config,
        )?;
        let mut out = self.clone();
        out.class_names.push(new_class.name.clone());
        out.submodels.push(submodel);
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        if let Some(t) = self.tau_out {
            if !t.is_finite() {
                return Err(Error::InvalidParameter(
                    "tau_out must be finite for serialization".into(),
                ));
            }
        }
        let envelope = ModelEnvelope {
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        };
        Ok(serde_json::to_string_pretty(&envelope)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let envelope: ModelEnvelope = serde_json::from_str(text)?;
        if envelope.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Data(format!(
                "unsupported model format version {}",
                envelope.format_version
            )));
        }
        Ok(envelope.model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        MulticlassModel::from_json(&text)
    }
}

/// Vertically pools every class except `skip` (pass usize::MAX to pool all).
/// Classes pool in name order, so the result is invariant to the order the
/// classes were supplied in.
fn pool_complement(classes: &[ClassData], skip: usize) -> Result<Vec<FeatureMatrix>> {
    let mut members: Vec<&ClassData> = classes
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != skip)
        .map(|(_, c)| c)
        .collect();
    members.sort_by(|a, b| a.name.cmp(&b.name));
    let m = classes[0].sets.len();
    let mut pooled = Vec::with_capacity(m);
    for s in 0..m {
        let parts: Vec<&FeatureMatrix> = members.iter().map(|c| &c.sets[s]).collect();
        pooled.push(FeatureMatrix::vstack(&parts)?);
    }
    Ok(pooled)
}

/// Trains K one-vs-all submodels (class k against the pooled complement).
/// Submodels are independent; they train in parallel and the result does not
/// depend on the schedule.
pub fn train_multiclass(classes: &[ClassData], config: &TrainConfig) -> Result<MulticlassModel> {
    if classes.len() < 2 {
        return Err(Error::Data(format!(
            "multi-class training needs K >= 2 classes, got {}",
            classes.len()
        )));
    }
    let mut seen = std::collections::BTreeSet::new();
    for c in classes {
        c.validate()?;
        if c.n_samples() == 0 {
            return Err(Error::Data(format!("class {:?} is empty", c.name)));
        }
        if !seen.insert(c.name.as_str()) {
            return Err(Error::Data(format!("duplicate class name {:?}", c.name)));
        }
    }
    let m = classes[0].sets.len();
    if classes.iter().any(|c| c.sets.len() != m) {
        return Err(Error::ShapeMismatch(
            format!("{m} feature sets"),
            "ragged class data".into(),
        ));
    }

    let submodels: Vec<BinaryFusionModel> = classes
        .par_iter()
        .enumerate()
        .map(|(k, class)| {
            let complement = pool_complement(classes, k)?;
            train_binary(&class.sets, &complement, (&class.name, "rest"), config)
        })
        .collect::<Result<_>>()?;

    Ok(MulticlassModel {
        class_names: classes.iter().map(|c| c.name.clone()).collect(),
        submodels,
        tau_out: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boost::{weak_llr, Margin};
    use approx::assert_abs_diff_eq;

    fn xorshift(state: &mut u64) -> f64 {
        *state ^= *state << 13;
        *state ^= *state >> 7;
        *state ^= *state << 17;
        (*state >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Two classes over M sets of `dim` features; class p tilts low, class q
    /// tilts high, with a cross-set agreement signal under p only.
    fn toy_classes(n: usize, m: usize, dim: usize, seed: u64) -> (Vec<FeatureMatrix>, Vec<FeatureMatrix>) {
        let mut state = seed.max(1);
        let mut make = |tilt: f64, couple: bool| -> Vec<FeatureMatrix> {
            let mut sets = vec![Vec::with_capacity(n * dim); m];
            for _ in 0..n {
                let shared = if xorshift(&mut state) < 0.5 { 0.0 } else { 1.0 };
                for (s, set) in sets.iter_mut().enumerate() {
                    for d in 0..dim {
                        let base = if xorshift(&mut state) < tilt { 0.0 } else { 1.0 };
                        let v = if couple && d == 0 { shared } else { base };
                        let jitter = 0.2 * xorshift(&mut state);
                        set.push(v + jitter + s as f64 * 0.0);
                    }
                }
            }
            sets.into_iter()
                .map(|data| FeatureMatrix::new(n, dim, data).unwrap())
                .collect()
        };
        (make(0.7, true), make(0.3, false))
    }

    fn default_config(t_max: usize) -> TrainConfig {
        TrainConfig {
            bins: 4,
            boost: BoostConfig {
                t_max,
                alpha: 0.5,
                ..BoostConfig::default()
            },
            ..TrainConfig::default()
        }
    }

    #[test]
    fn single_set_t0_model_is_one_tree_pair() {
        let (p, q) = toy_classes(120, 1, 3, 42);
        let model = train_binary(&p, &q, ("p", "q"), &default_config(0)).unwrap();
        assert_eq!(model.boosted.rounds.len(), 1);
        let round = &model.boosted.rounds[0];
        // The strong score is beta_0 times the single pair's weak LLR.
        for i in 0..10 {
            let sets: Vec<&[f64]> = vec![p[0].row(i)];
            let symbols = model.quantize_sets(&sets).unwrap();
            let expect = round.beta * weak_llr(&round.pair, &symbols, 10.0).unwrap();
            assert_abs_diff_eq!(model.score_sets(&sets).unwrap(), expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn huge_tau_always_yields_q_label() {
        let (p, q) = toy_classes(80, 2, 2, 7);
        let mut config = default_config(1);
        config.tau = 1e18;
        let model = train_binary(&p, &q, ("tank", "clutter"), &config).unwrap();
        for i in 0..20 {
            let sets: Vec<&[f64]> = p.iter().map(|m| m.row(i)).collect();
            let (label, _) = classify(&model, &sets).unwrap();
            assert_eq!(label, "clutter");
        }
    }

    #[test]
    fn zero_betas_break_ties_to_q() {
        let (p, q) = toy_classes(80, 1, 2, 9);
        let mut model = train_binary(&p, &q, ("p", "q"), &default_config(0)).unwrap();
        model.boosted.rounds.iter_mut().for_each(|r| r.beta = 0.0);
        let sets: Vec<&[f64]> = p.iter().map(|m| m.row(0)).collect();
        let (label, score) = classify(&model, &sets).unwrap();
        assert_eq!(score, 0.0);
        assert_eq!(label, "q");
    }

    #[test]
    fn hand_built_two_node_model_scores_match_hand_llr() {
        use crate::distributions::EmpiricalModel;
        use crate::tree::{ClassSide, Provenance, TreeGraph, TreeKind, TreePair};

        // Two binary variables; p strongly diagonal, q anti-diagonal.
        let pj = [0.45, 0.05, 0.05, 0.45];
        let qj = [0.05, 0.45, 0.45, 0.05];
        let pm = EmpiricalModel::from_joint(&[0, 1], &[2, 2], &pj).unwrap();
        let qm = EmpiricalModel::from_joint(&[0, 1], &[2, 2], &qj).unwrap();
        let prov = |side| Provenance {
            kind: TreeKind::Discriminative,
            side,
            iteration: 0,
        };
        let pair = TreePair {
            tree_p: TreeGraph::from_model(&pm, vec![(0, 1)], prov(ClassSide::P)).unwrap(),
            tree_q: TreeGraph::from_model(&qm, vec![(0, 1)], prov(ClassSide::Q)).unwrap(),
            iteration: 0,
            j_divergence: 0.0,
        };
        let model = BinaryFusionModel {
            p_label: "p".into(),
            q_label: "q".into(),
            quantizers: vec![Quantizer::from_edges(vec![vec![0.5], vec![0.5]]).unwrap()],
            boosted: BoostedModel {
                rounds: vec![crate::boost::BoostRound {
                    pair,
                    epsilon: 0.25,
                    beta: 1.0,
                    z_norm: 1.0,
                }],
                layout: FeatureLayout::new(vec![2]).unwrap(),
                tau: 0.0,
                clamp: 10.0,
                margin: Margin::Sign,
            },
        };
        // Sample (0.2, 0.7) quantizes to symbols (0, 1): both trees factor
        // as p(a) p(b) p_ab/(p_a p_b) = p_ab, so the score is ln(p01/q01).
        let sets: Vec<&[f64]> = vec![&[0.2, 0.7]];
        let expect = (0.05f64 / 0.45).ln();
        assert_abs_diff_eq!(model.score_sets(&sets).unwrap(), expect, epsilon = 1e-12);
        let (label, _) = classify(&model, &sets).unwrap();
        assert_eq!(label, "q");
    }

    #[test]
    fn label_swap_negates_scores_with_llr_margin() {
        let (p, q) = toy_classes(150, 2, 3, 31);
        let mut config = default_config(3);
        config.boost.margin = Margin::ClampedLlr;
        let ab = train_binary(&p, &q, ("a", "b"), &config).unwrap();
        let ba = train_binary(&q, &p, ("b", "a"), &config).unwrap();
        let mut checked = 0;
        for i in 0..40 {
            let sets: Vec<&[f64]> = p.iter().map(|m| m.row(i)).collect();
            let s1 = ab.score_sets(&sets).unwrap();
            let s2 = ba.score_sets(&sets).unwrap();
            assert_abs_diff_eq!(s1, -s2, epsilon = 1e-9);
            if s1.abs() > 1e-9 {
                // Decisions negate side-wise, so the predicted class name is
                // preserved across the swap.
                let (l1, _) = classify(&ab, &sets).unwrap();
                let (l2, _) = classify(&ba, &sets).unwrap();
                assert_eq!(l1, l2);
                checked += 1;
            }
        }
        assert!(checked > 0);
    }

    fn toy_multiclass(k: usize, n: usize, seed: u64) -> Vec<ClassData> {
        let mut state = seed.max(1);
        (0..k)
            .map(|c| {
                let center = c as f64 * 1.5;
                let sets = (0..2)
                    .map(|_| {
                        let mut data = Vec::with_capacity(n * 2);
                        for _ in 0..n {
                            for _ in 0..2 {
                                data.push(center + xorshift(&mut state));
                            }
                        }
                        FeatureMatrix::new(n, 2, data).unwrap()
                    })
                    .collect();
                ClassData {
                    name: format!("c{c}"),
                    sets,
                }
            })
            .collect()
    }

    #[test]
    fn two_class_multiclass_agrees_with_binary_argmax() {
        let classes = toy_multiclass(2, 100, 17);
        let mut config = default_config(2);
        config.boost.margin = Margin::ClampedLlr;
        let multi = train_multiclass(&classes, &config).unwrap();
        let binary = train_binary(
            &classes[0].sets,
            &classes[1].sets,
            ("c0", "c1"),
            &config,
        )
        .unwrap();
        for c in &classes {
            for i in 0..30 {
                let flat = c.flat_row(i);
                let (k_star, scores) = multi.classify_flat(&flat).unwrap();
                let s = binary.score_flat(&flat).unwrap();
                if s.abs() > 1e-9 {
                    let binary_pick = if s > 0.0 { 0 } else { 1 };
                    assert_eq!(k_star, binary_pick, "scores {scores:?} vs binary {s}");
                }
            }
        }
    }

    #[test]
    fn multiclass_scores_have_k_entries_and_identical_models_tie_low() {
        let classes = toy_multiclass(3, 60, 5);
        let config = default_config(1);
        let model = train_multiclass(&classes, &config).unwrap();
        let flat = classes[1].flat_row(0);
        let (_, scores) = model.classify_flat(&flat).unwrap();
        assert_eq!(scores.len(), 3);

        // Identical submodels tie; the tie goes to class 0.
        let mut rigged = model.clone();
        rigged.submodels = vec![model.submodels[0].clone(); 3];
        let (k_star, _) = rigged.classify_flat(&flat).unwrap();
        assert_eq!(k_star, 0);
    }

    #[test]
    fn adding_a_class_keeps_existing_submodels_byte_identical() {
        let classes = toy_multiclass(4, 50, 23);
        let config = default_config(1);
        let base = train_multiclass(&classes[..3], &config).unwrap();
        let extended = base.add_class(&classes[..3], &classes[3], &config).unwrap();
        assert_eq!(extended.num_classes(), 4);
        for k in 0..3 {
            let before = serde_json::to_string(&base.submodels[k]).unwrap();
            let after = serde_json::to_string(&extended.submodels[k]).unwrap();
            assert_eq!(before, after);
        }
        assert!(extended.add_class(&classes[..3], &classes[2], &config).is_err());
    }

    #[test]
    fn argmax_is_invariant_to_uniform_tau_shift() {
        let classes = toy_multiclass(3, 60, 41);
        let config = default_config(1);
        let model = train_multiclass(&classes, &config).unwrap();
        let mut shifted = model.clone();
        for sub in &mut shifted.submodels {
            sub.boosted.tau += 7.5;
        }
        for c in &classes {
            for i in 0..20 {
                let flat = c.flat_row(i);
                assert_eq!(
                    model.classify_flat(&flat).unwrap().0,
                    shifted.classify_flat(&flat).unwrap().0
                );
            }
        }
    }

    #[test]
    fn outlier_rejection_thresholds() {
        let classes = toy_multiclass(2, 60, 3);
        let config = default_config(1);
        let mut model = train_multiclass(&classes, &config).unwrap();
        let flat = classes[0].flat_row(0);
        assert!(!model.reject_outlier_flat(&flat).unwrap());
        model.tau_out = Some(f64::NEG_INFINITY);
        assert!(!model.reject_outlier_flat(&flat).unwrap());
        model.tau_out = Some(f64::INFINITY);
        assert!(model.reject_outlier_flat(&flat).unwrap());
    }

    #[test]
    fn class_order_permutation_permutes_submodels() {
        let classes = toy_multiclass(3, 50, 13);
        let config = default_config(1);
        let a = train_multiclass(&classes, &config).unwrap();
        let permuted: Vec<ClassData> = vec![classes[2].clone(), classes[0].clone(), classes[1].clone()];
        let b = train_multiclass(&permuted, &config).unwrap();
        for (name, sub) in a.class_names.iter().zip(&a.submodels) {
            let k = b.class_names.iter().position(|n| n == name).unwrap();
            assert_eq!(
                serde_json::to_string(sub).unwrap(),
                serde_json::to_string(&b.submodels[k]).unwrap()
            );
        }
    }

    #[test]
    fn model_roundtrip_reproduces_scores_bit_exactly() {
        let classes = toy_multiclass(3, 60, 29);
        let config = default_config(2);
        let mut model = train_multiclass(&classes, &config).unwrap();
        model.tau_out = Some(-3.25);
        let json = model.to_json().unwrap();
        let back = MulticlassModel::from_json(&json).unwrap();
        for c in &classes {
            for i in 0..25 {
                let flat = c.flat_row(i);
                let s1 = model.scores_flat(&flat).unwrap();
                let s2 = back.scores_flat(&flat).unwrap();
                for (a, b) in s1.iter().zip(&s2) {
                    assert_eq!(a.to_bits(), b.to_bits());
                }
            }
        }
        assert!(MulticlassModel::from_json(&json.replace(
            "\"format_version\": 1",
            "\"format_version\": 9"
        ))
        .is_err());
    }

    #[test]
    fn shape_and_emptiness_errors() {
        let (p, q) = toy_classes(10, 2, 2, 3);
        assert!(train_binary(&p[..1], &q, ("p", "q"), &default_config(0)).is_err());
        let single = toy_multiclass(1, 10, 3);
        assert!(train_multiclass(&single, &default_config(0)).is_err());
    }
}
