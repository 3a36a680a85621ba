//! Real-AdaBoost over discriminative tree-pair weak learners, and the
//! graph-thickening loop that accumulates the edges learned across rounds.
//!
//! Round 0 is the concatenated per-feature-set forest pair; it participates
//! fully in boosting (it has its own epsilon, beta and weight update).
//! Rounds 1..T re-learn a discriminative pair over all nodes against the
//! re-weighted sample distribution. The strong score is the beta-weighted
//! sum of clamped per-round log-likelihood ratios; the thickened edge sets
//! are the unions of the per-round edge sets.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{EmpiricalModel, WeightedDataset};
use crate::error::{Error, Result};
use crate::features::FeatureLayout;
use crate::tree::{
    learn_discriminative_tree_pair, ClassSide, Provenance, TreeGraph, TreeKind, TreePair,
};

/// Margin fed into the weight update `exp(-beta * y * margin)`. The strong
/// score always uses the clamped real-valued LLR; `Sign` (the default) keeps
/// the update itself to hard decisions, which is markedly more stable when
/// LLR magnitudes are large.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Margin {
    #[serde(rename = "sign")]
    Sign,
    #[serde(rename = "llr")]
    ClampedLlr,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostConfig {
    /// Maximum number of boosted rounds after round 0.
    pub t_max: usize,
    /// Relative change in the J-divergence below which the loop stops.
    pub j_tol: f64,
    /// Total smoothing pseudocount spread uniformly over each table.
    pub alpha: f64,
    /// Weak LLRs are clamped to [-clamp, clamp] nats.
    pub clamp: f64,
    pub margin: Margin,
    /// Drop non-positive-weight edges after Kruskal instead of keeping the
    /// full spanning tree.
    pub allow_forest: bool,
    /// When set, each round fits its models on a resampled (by the current
    /// weights) copy of the training set instead of weighting the counts.
    pub resample: Option<u64>,
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig {
            t_max: 10,
            j_tol: 1e-3,
            alpha: 1.0,
            clamp: 10.0,
            margin: Margin::Sign,
            allow_forest: false,
            resample: None,
        }
    }
}

/// One boosting round: the learned tree pair plus the AdaBoost bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostRound {
    pub pair: TreePair,
    pub epsilon: f64,
    pub beta: f64,
    pub z_norm: f64,
}

impl BoostRound {
    pub fn j_divergence(&self) -> f64 {
        self.pair.j_divergence
    }
}

/// beta = ln((1 - eps) / eps) / 2.
pub fn beta_from_epsilon(epsilon: f64) -> f64 {
    0.5 * ((1.0 - epsilon) / epsilon).ln()
}

/// Weak confidence: clamped log-likelihood ratio of the pair's trees.
pub fn weak_llr(pair: &TreePair, sample: &[u16], clamp: f64) -> Result<f64> {
    let h = pair.tree_p.log_likelihood(sample)? - pair.tree_q.log_likelihood(sample)?;
    Ok(h.clamp(-clamp, clamp))
}

/// The boosted strong classifier: round 0's disjoint forest pair plus the
/// thickening rounds, with the decision threshold tau.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub rounds: Vec<BoostRound>,
    pub layout: FeatureLayout,
    pub tau: f64,
    pub clamp: f64,
    pub margin: Margin,
}

impl BoostedModel {
    pub fn n_total(&self) -> usize {
        self.layout.n_total()
    }

    /// sum_t beta_t * h_t(x) over all rounds including round 0.
    pub fn strong_llr(&self, sample: &[u16]) -> Result<f64> {
        Ok(self.score_counted(sample)?.0)
    }

    /// Strong score plus the number of node/edge table lookups performed.
    pub fn score_counted(&self, sample: &[u16]) -> Result<(f64, usize)> {
        let mut score = 0.0;
        let mut lookups = 0;
        for round in &self.rounds {
            let (lp, np) = round.pair.tree_p.log_likelihood_counted(sample)?;
            let (lq, nq) = round.pair.tree_q.log_likelihood_counted(sample)?;
            score += round.beta * (lp - lq).clamp(-self.clamp, self.clamp);
            lookups += np + nq;
        }
        Ok((score, lookups))
    }

    /// Margin-consistent training score: uses the same per-round margin as
    /// the weight update, so the classical exponential-loss bound applies to
    /// its sign exactly.
    pub fn margin_score(&self, sample: &[u16]) -> Result<f64> {
        let mut score = 0.0;
        for round in &self.rounds {
            let h = weak_llr(&round.pair, sample, self.clamp)?;
            score += round.beta * margin_value(h, self.margin);
        }
        Ok(score)
    }

    /// True for the p side: strong score strictly above tau (ties go to q).
    pub fn decide(&self, sample: &[u16]) -> Result<bool> {
        Ok(self.strong_llr(sample)? > self.tau)
    }
}

/// Number of per-node and per-edge table lookups `strong_llr` performs.
pub fn factor_evaluation_count(model: &BoostedModel, sample: &[u16]) -> Result<usize> {
    Ok(model.score_counted(sample)?.1)
}

pub fn strong_llr(model: &BoostedModel, sample: &[u16]) -> Result<f64> {
    model.strong_llr(sample)
}

/// Thickened edge sets: the union over rounds of each class's edges.
pub fn edge_union(model: &BoostedModel) -> (BTreeSet<(usize, usize)>, BTreeSet<(usize, usize)>) {
    let mut p = BTreeSet::new();
    let mut q = BTreeSet::new();
    for round in &model.rounds {
        p.extend(round.pair.tree_p.edges().iter().copied());
        q.extend(round.pair.tree_q.edges().iter().copied());
    }
    (p, q)
}

fn margin_value(h: f64, margin: Margin) -> f64 {
    match margin {
        Margin::Sign => {
            if h > 0.0 {
                1.0
            } else {
                -1.0
            }
        }
        Margin::ClampedLlr => h,
    }
}

/// Fits the two class models, honoring the optional resampling mode.
fn fit_class_models(
    ds: &WeightedDataset,
    variables: &[usize],
    config: &BoostConfig,
    iteration: usize,
) -> Result<(EmpiricalModel, EmpiricalModel)> {
    if let Some(seed) = config.resample {
        let mut rng = ChaCha8Rng::seed_from_u64(
            seed.wrapping_add((iteration as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        );
        let idx = sample_categorical(ds.weights(), ds.n(), &mut rng);
        let resampled = ds.subset(&idx)?;
        let p = EmpiricalModel::fit(&resampled, 1, variables, config.alpha)?;
        let q = EmpiricalModel::fit(&resampled, -1, variables, config.alpha)?;
        Ok((p, q))
    } else {
        let p = EmpiricalModel::fit(ds, 1, variables, config.alpha)?;
        let q = EmpiricalModel::fit(ds, -1, variables, config.alpha)?;
        Ok((p, q))
    }
}

/// Draws `n` indices from the categorical distribution given by `weights`.
fn sample_categorical(weights: &[f64], n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    use rand::Rng;
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for &w in weights {
        acc += w;
        cdf.push(acc);
    }
    (0..n)
        .map(|_| {
            let u: f64 = rng.random::<f64>() * acc;
            cdf.partition_point(|&c| c < u).min(weights.len() - 1)
        })
        .collect()
}

enum RoundPolicy {
    /// Round 0 is always kept; epsilon clamps into (0, 0.5] so beta >= 0.
    Initial,
    /// Rounds >= 1 are rejected outright when no better than chance.
    RejectAtChance,
}

/// Completes a round from its learned pair: weighted error, beta, and the
/// re-weighted distribution D_{t+1}(i) = D_t(i) exp(-beta y_i m(h_t(x_i))) / Z_t.
fn finish_round(
    ds: &WeightedDataset,
    pair: TreePair,
    config: &BoostConfig,
    policy: RoundPolicy,
) -> Result<(BoostRound, Vec<f64>)> {
    let n = ds.n();
    let mut llrs = Vec::with_capacity(n);
    for i in 0..n {
        llrs.push(weak_llr(&pair, ds.row(i), config.clamp)?);
    }
    let raw_epsilon: f64 = (0..n)
        .filter(|&i| {
            let predicted: i8 = if llrs[i] > 0.0 { 1 } else { -1 };
            predicted != ds.label(i)
        })
        .map(|i| ds.weights()[i])
        .sum();

    let epsilon = match policy {
        RoundPolicy::RejectAtChance => {
            if raw_epsilon >= 0.5 {
                return Err(Error::WeakLearnerAtChance {
                    epsilon: raw_epsilon,
                });
            }
            raw_epsilon.clamp(1e-6, 1.0 - 1e-6)
        }
        RoundPolicy::Initial => raw_epsilon.clamp(1e-6, 0.5),
    };
    let beta = beta_from_epsilon(epsilon);

    let mut next: Vec<f64> = (0..n)
        .map(|i| {
            let m = margin_value(llrs[i], config.margin);
            ds.weights()[i] * (-beta * ds.label(i) as f64 * m).exp()
        })
        .collect();
    let z_norm: f64 = next.iter().sum();
    next.iter_mut().for_each(|w| *w /= z_norm);

    Ok((
        BoostRound {
            pair,
            epsilon,
            beta,
            z_norm,
        },
        next,
    ))
}

/// One boosting iteration (t >= 1): fit both class models on the current
/// weights, learn the discriminative pair over all variables, and compute
/// the AdaBoost update. Fails with `WeakLearnerAtChance` when the weighted
/// error reaches 0.5.
pub fn boost_round(
    ds: &WeightedDataset,
    iteration: usize,
    config: &BoostConfig,
) -> Result<(BoostRound, Vec<f64>)> {
    let variables: Vec<usize> = (0..ds.n_vars()).collect();
    let (p_model, q_model) = fit_class_models(ds, &variables, config, iteration)?;
    let pair = learn_discriminative_tree_pair(
        &p_model,
        &q_model,
        &variables,
        iteration,
        config.allow_forest,
    )?;
    finish_round(ds, pair, config, RoundPolicy::RejectAtChance)
}

/// The full thickening loop. Round 0 learns one discriminative pair per
/// feature set and concatenates them into a disjoint forest pair; further
/// rounds run over all nodes until `t_max`, a chance-level round, or a
/// relative J-divergence change below `j_tol` (that round is kept).
pub fn thicken(
    ds: &WeightedDataset,
    layout: &FeatureLayout,
    config: &BoostConfig,
) -> Result<BoostedModel> {
    if layout.n_total() != ds.n_vars() {
        return Err(Error::DimensionMismatch {
            expected: layout.n_total(),
            got: ds.n_vars(),
        });
    }
    let mut work = ds.clone();

    let mut trees_p = Vec::with_capacity(layout.num_sets());
    let mut trees_q = Vec::with_capacity(layout.num_sets());
    let mut j0 = 0.0;
    for s in 0..layout.num_sets() {
        let variables: Vec<usize> = layout.set_range(s).collect();
        let (p_model, q_model) = fit_class_models(&work, &variables, config, 0)?;
        let pair =
            learn_discriminative_tree_pair(&p_model, &q_model, &variables, 0, config.allow_forest)?;
        j0 += pair.j_divergence;
        trees_p.push(pair.tree_p);
        trees_q.push(pair.tree_q);
    }
    let forest = TreePair {
        tree_p: TreeGraph::concatenate(
            &trees_p,
            Provenance {
                kind: TreeKind::Discriminative,
                side: ClassSide::P,
                iteration: 0,
            },
        )?,
        tree_q: TreeGraph::concatenate(
            &trees_q,
            Provenance {
                kind: TreeKind::Discriminative,
                side: ClassSide::Q,
                iteration: 0,
            },
        )?,
        iteration: 0,
        j_divergence: j0,
    };

    let (round0, weights) = finish_round(&work, forest, config, RoundPolicy::Initial)?;
    let round0_at_chance = round0.epsilon >= 0.5;
    work.set_weights(weights)?;
    let mut last_j = round0.j_divergence();
    let mut rounds = vec![round0];

    if !round0_at_chance {
        for t in 1..=config.t_max {
            match boost_round(&work, t, config) {
                Ok((round, weights)) => {
                    work.set_weights(weights)?;
                    let j = round.j_divergence();
                    rounds.push(round);
                    let rel = (j - last_j).abs() / last_j.abs().max(1e-12);
                    last_j = j;
                    if rel < config.j_tol {
                        break;
                    }
                }
                Err(Error::WeakLearnerAtChance { .. }) => break,
                Err(other) => return Err(other),
            }
        }
    }

    Ok(BoostedModel {
        rounds,
        layout: layout.clone(),
        tau: 0.0,
        clamp: config.clamp,
        margin: config.margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn one_node_pair(p: Vec<f64>, q: Vec<f64>) -> TreePair {
        let pm = EmpiricalModel::from_marginal(0, p).unwrap();
        let qm = EmpiricalModel::from_marginal(0, q).unwrap();
        let prov = |side| Provenance {
            kind: TreeKind::Discriminative,
            side,
            iteration: 0,
        };
        TreePair {
            tree_p: TreeGraph::from_model(&pm, vec![], prov(ClassSide::P)).unwrap(),
            tree_q: TreeGraph::from_model(&qm, vec![], prov(ClassSide::Q)).unwrap(),
            iteration: 0,
            j_divergence: 0.0,
        }
    }

    #[test]
    fn beta_formula_values() {
        assert_abs_diff_eq!(beta_from_epsilon(0.5), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(beta_from_epsilon(0.1), 0.5 * 9.0f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(0.5 * 9.0f64.ln(), 1.098612, epsilon = 1e-6);
    }

    #[test]
    fn weak_llr_identical_trees_is_zero() {
        let pair = one_node_pair(vec![0.3, 0.7], vec![0.3, 0.7]);
        assert_abs_diff_eq!(weak_llr(&pair, &[0], 10.0).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(weak_llr(&pair, &[1], 10.0).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn weak_llr_closed_form_and_clamp() {
        let pair = one_node_pair(vec![0.9, 0.1], vec![0.1, 0.9]);
        assert_abs_diff_eq!(
            weak_llr(&pair, &[0], 10.0).unwrap(),
            9.0f64.ln(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(9.0f64.ln(), 2.197225, epsilon = 1e-6);

        // A raw difference of ~27.6 nats clamps to 10.
        let wide = one_node_pair(vec![1.0 - 1e-12, 1e-12], vec![1e-12, 1.0 - 1e-12]);
        assert_abs_diff_eq!(weak_llr(&wide, &[0], 10.0).unwrap(), 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(weak_llr(&wide, &[1], 10.0).unwrap(), -10.0, epsilon = 1e-12);
    }

    #[test]
    fn boost_round_matches_hand_executed_update() {
        // Samples (0,+) (0,+) (1,-) (0,-): the learned single-node pair
        // predicts p on symbol 0, q on symbol 1, so only the last sample is
        // misclassified: eps = 1/4, beta = ln(3)/2, and the exact update is
        // D_2 = (1/6, 1/6, 1/6, 1/2) with Z = sqrt(3)/2.
        let ds = WeightedDataset::with_uniform_weights(
            vec![0, 0, 1, 0],
            vec![2],
            vec![1, 1, -1, -1],
        )
        .unwrap();
        let config = BoostConfig {
            alpha: 1e-9,
            ..BoostConfig::default()
        };
        let (round, next) = boost_round(&ds, 1, &config).unwrap();
        assert_abs_diff_eq!(round.epsilon, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(round.beta, 0.5 * 3.0f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(round.z_norm, 3.0f64.sqrt() / 2.0, epsilon = 1e-12);
        let expect = [1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 2.0];
        for (&got, want) in next.iter().zip(expect) {
            assert_abs_diff_eq!(got, want, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(next.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        // Misclassified weight rose relative to the correct ones.
        assert!(next[3] / 0.25 > next[0] / 0.25);
    }

    #[test]
    fn chance_level_round_is_rejected() {
        // Labels uncorrelated with the single binary variable and symmetric
        // counts: the weak learner cannot beat 0.5.
        let ds = WeightedDataset::with_uniform_weights(
            vec![0, 1, 0, 1],
            vec![2],
            vec![1, 1, -1, -1],
        )
        .unwrap();
        let config = BoostConfig::default();
        match boost_round(&ds, 1, &config) {
            Err(Error::WeakLearnerAtChance { epsilon }) => assert!(epsilon >= 0.5),
            other => panic!("expected chance-level rejection, got {other:?}"),
        }
    }

    fn synthetic_binary_ds(n: usize, vars: usize, seed: u64) -> WeightedDataset {
        // Class +1 skews symbols low, class -1 high, with mild coupling
        // between consecutive variables.
        let mut state = seed.max(1);
        let mut uniform = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut symbols = Vec::with_capacity(n * vars);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let label: i8 = if i % 2 == 0 { 1 } else { -1 };
            labels.push(label);
            let tilt = if label == 1 { 0.65 } else { 0.35 };
            let mut prev = 0u16;
            for v in 0..vars {
                let base = if uniform() < tilt { 0u16 } else { 1 };
                let sym = if v > 0 && uniform() < 0.3 { prev } else { base };
                symbols.push(sym);
                prev = sym;
            }
        }
        WeightedDataset::with_uniform_weights(symbols, vec![2; vars], labels).unwrap()
    }

    #[test]
    fn adaboost_contract_holds_over_rounds() {
        let ds = synthetic_binary_ds(400, 4, 77);
        let layout = FeatureLayout::new(vec![2, 2]).unwrap();
        let config = BoostConfig {
            t_max: 6,
            j_tol: 0.0,
            alpha: 0.05,
            ..BoostConfig::default()
        };
        let model = thicken(&ds, &layout, &config).unwrap();
        assert!(model.rounds.len() >= 2);

        let mut z_product = 1.0;
        for (t, round) in model.rounds.iter().enumerate() {
            assert_abs_diff_eq!(
                round.beta,
                beta_from_epsilon(round.epsilon),
                epsilon = 1e-12
            );
            assert!(round.z_norm > 0.0);
            let prev = z_product;
            z_product *= round.z_norm;
            assert!(z_product <= prev + 1e-12, "Z product increased at round {t}");

            // Margin-consistent training error of the prefix classifier is
            // bounded by the Z product.
            let prefix = BoostedModel {
                rounds: model.rounds[..=t].to_vec(),
                layout: layout.clone(),
                tau: 0.0,
                clamp: config.clamp,
                margin: config.margin,
            };
            let err: f64 = (0..ds.n())
                .filter(|&i| {
                    let f = prefix.margin_score(ds.row(i)).unwrap();
                    let yhat: i8 = if f > 0.0 { 1 } else { -1 };
                    yhat != ds.label(i)
                })
                .map(|i| ds.weights()[i])
                .sum();
            assert!(
                err <= z_product + 1e-10,
                "round {t}: err {err} > Z product {z_product}"
            );
        }
    }

    #[test]
    fn t_max_zero_keeps_only_the_forest_round() {
        let ds = synthetic_binary_ds(200, 4, 5);
        let layout = FeatureLayout::new(vec![2, 2]).unwrap();
        let config = BoostConfig {
            t_max: 0,
            ..BoostConfig::default()
        };
        let model = thicken(&ds, &layout, &config).unwrap();
        assert_eq!(model.rounds.len(), 1);
        // No edge crosses the feature-set boundary in round 0.
        for &(i, j) in model.rounds[0].pair.tree_p.edges() {
            assert_eq!(i / 2, j / 2, "cross-set edge ({i}, {j}) in round 0");
        }
        // Strong score reduces to beta_0 * weak_llr.
        let sample = ds.row(0);
        let expect = model.rounds[0].beta
            * weak_llr(&model.rounds[0].pair, sample, config.clamp).unwrap();
        assert_abs_diff_eq!(model.strong_llr(sample).unwrap(), expect, epsilon = 1e-12);
    }

    #[test]
    fn strong_llr_is_weighted_sum_of_hand_rounds() {
        let pair_a = one_node_pair(vec![0.9, 0.1], vec![0.1, 0.9]);
        let pair_b = one_node_pair(vec![0.6, 0.4], vec![0.4, 0.6]);
        let model = BoostedModel {
            rounds: vec![
                BoostRound {
                    pair: pair_a,
                    epsilon: 0.2,
                    beta: 1.5,
                    z_norm: 1.0,
                },
                BoostRound {
                    pair: pair_b,
                    epsilon: 0.4,
                    beta: 0.25,
                    z_norm: 1.0,
                },
            ],
            layout: FeatureLayout::new(vec![1]).unwrap(),
            tau: 0.0,
            clamp: 10.0,
            margin: Margin::Sign,
        };
        let expect = 1.5 * 9.0f64.ln() + 0.25 * 1.5f64.ln();
        assert_abs_diff_eq!(model.strong_llr(&[0]).unwrap(), expect, epsilon = 1e-12);
        assert_abs_diff_eq!(model.strong_llr(&[1]).unwrap(), -expect, epsilon = 1e-12);
        // Degenerate all-zero betas: score 0, decision falls to the tie rule.
        let mut zeroed = model.clone();
        zeroed.rounds.iter_mut().for_each(|r| r.beta = 0.0);
        assert_abs_diff_eq!(zeroed.strong_llr(&[0]).unwrap(), 0.0, epsilon = 1e-15);
        assert!(!zeroed.decide(&[0]).unwrap());
    }

    #[test]
    fn single_beta_one_round_equals_weak_llr() {
        let pair = one_node_pair(vec![0.7, 0.3], vec![0.2, 0.8]);
        let model = BoostedModel {
            rounds: vec![BoostRound {
                pair: pair.clone(),
                epsilon: 0.3,
                beta: 1.0,
                z_norm: 1.0,
            }],
            layout: FeatureLayout::new(vec![1]).unwrap(),
            tau: 0.0,
            clamp: 10.0,
            margin: Margin::Sign,
        };
        for sym in [0u16, 1] {
            assert_abs_diff_eq!(
                model.strong_llr(&[sym]).unwrap(),
                weak_llr(&pair, &[sym], 10.0).unwrap(),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn edge_union_collapses_duplicates_and_bounds_hold() {
        let ds = synthetic_binary_ds(300, 6, 11);
        let layout = FeatureLayout::new(vec![3, 3]).unwrap();
        let config = BoostConfig {
            t_max: 4,
            j_tol: 0.0,
            alpha: 0.1,
            ..BoostConfig::default()
        };
        let model = thicken(&ds, &layout, &config).unwrap();
        let (ep, _eq) = edge_union(&model);
        let round0_p: BTreeSet<_> =
            model.rounds[0].pair.tree_p.edges().iter().copied().collect();
        assert!(ep.is_superset(&round0_p));
        let with_multiplicity: usize =
            model.rounds.iter().map(|r| r.pair.tree_p.edges().len()).sum();
        assert!(ep.len() <= with_multiplicity);

        // Monotone growth of the union over round prefixes.
        let mut prev = BTreeSet::new();
        for t in 0..model.rounds.len() {
            let prefix = BoostedModel {
                rounds: model.rounds[..=t].to_vec(),
                ..model.clone()
            };
            let (p_edges, _) = edge_union(&prefix);
            assert!(p_edges.is_superset(&prev));
            prev = p_edges;
        }
    }

    #[test]
    fn trivial_edge_union_of_two_hand_rounds() {
        // Round edge sets {(0,1)} and {(0,1),(2,3)} union to {(0,1),(2,3)}.
        let joint = vec![1.0 / 16.0; 16];
        let m = EmpiricalModel::from_joint(&[0, 1, 2, 3], &[2; 4], &joint).unwrap();
        let prov = |side, iteration| Provenance {
            kind: TreeKind::Discriminative,
            side,
            iteration,
        };
        let make_pair = |edges: Vec<(usize, usize)>, iteration| TreePair {
            tree_p: TreeGraph::from_model(&m, edges.clone(), prov(ClassSide::P, iteration))
                .unwrap(),
            tree_q: TreeGraph::from_model(&m, edges, prov(ClassSide::Q, iteration)).unwrap(),
            iteration,
            j_divergence: 0.0,
        };
        let model = BoostedModel {
            rounds: vec![
                BoostRound {
                    pair: make_pair(vec![(0, 1)], 0),
                    epsilon: 0.4,
                    beta: 0.1,
                    z_norm: 1.0,
                },
                BoostRound {
                    pair: make_pair(vec![(0, 1), (2, 3)], 1),
                    epsilon: 0.4,
                    beta: 0.1,
                    z_norm: 1.0,
                },
            ],
            layout: FeatureLayout::new(vec![4]).unwrap(),
            tau: 0.0,
            clamp: 10.0,
            margin: Margin::Sign,
        };
        let (ep, _) = edge_union(&model);
        assert_eq!(ep.into_iter().collect::<Vec<_>>(), vec![(0, 1), (2, 3)]);
    }

    #[test]
    fn factor_count_formula_and_bound() {
        // M = 3 sets of 4 binary variables, spanning per-set trees: round 0
        // has 12 nodes and 9 edges per class, so 2 * (12 + 9) = 42 lookups.
        let ds = synthetic_binary_ds(600, 12, 33);
        let layout = FeatureLayout::new(vec![4, 4, 4]).unwrap();
        let config = BoostConfig {
            t_max: 0,
            alpha: 0.2,
            ..BoostConfig::default()
        };
        let model = thicken(&ds, &layout, &config).unwrap();
        assert_eq!(model.rounds[0].pair.tree_p.edges().len(), 9);
        let count = factor_evaluation_count(&model, ds.row(0)).unwrap();
        assert_eq!(count, 42);

        // Single node, single round: two lookups per tree pair per round.
        let tiny = BoostedModel {
            rounds: vec![BoostRound {
                pair: one_node_pair(vec![0.5, 0.5], vec![0.5, 0.5]),
                epsilon: 0.5,
                beta: 0.0,
                z_norm: 1.0,
            }],
            layout: FeatureLayout::new(vec![1]).unwrap(),
            tau: 0.0,
            clamp: 10.0,
            margin: Margin::Sign,
        };
        assert_eq!(factor_evaluation_count(&tiny, &[0]).unwrap(), 2);

        // Hard bound on a thicker model.
        let config = BoostConfig {
            t_max: 5,
            j_tol: 0.0,
            alpha: 0.2,
            ..BoostConfig::default()
        };
        let model = thicken(&ds, &layout, &config).unwrap();
        let n_total = layout.n_total();
        let t = model.rounds.len() - 1;
        let bound = 2 * (t + 1) * (2 * n_total - 1);
        assert!(factor_evaluation_count(&model, ds.row(1)).unwrap() <= bound);
    }

    #[test]
    fn thicken_is_deterministic() {
        let ds = synthetic_binary_ds(250, 4, 21);
        let layout = FeatureLayout::new(vec![2, 2]).unwrap();
        let config = BoostConfig {
            t_max: 3,
            alpha: 0.3,
            ..BoostConfig::default()
        };
        let a = thicken(&ds, &layout, &config).unwrap();
        let b = thicken(&ds, &layout, &config).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn resampling_mode_is_seeded_and_deterministic() {
        let ds = synthetic_binary_ds(300, 4, 9);
        let layout = FeatureLayout::new(vec![2, 2]).unwrap();
        let config = BoostConfig {
            t_max: 2,
            alpha: 0.3,
            resample: Some(1234),
            ..BoostConfig::default()
        };
        let a = thicken(&ds, &layout, &config).unwrap();
        let b = thicken(&ds, &layout, &config).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        let other = BoostConfig {
            resample: Some(99),
            ..config
        };
        let c = thicken(&ds, &layout, &other).unwrap();
        assert_ne!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&c).unwrap()
        );
    }

    #[test]
    fn giant_j_tol_stops_after_first_boosted_round() {
        let ds = synthetic_binary_ds(300, 4, 13);
        let layout = FeatureLayout::new(vec![2, 2]).unwrap();
        let config = BoostConfig {
            t_max: 10,
            j_tol: 1e9,
            alpha: 0.3,
            ..BoostConfig::default()
        };
        let model = thicken(&ds, &layout, &config).unwrap();
        assert!(model.rounds.len() <= 2);
    }
}
