//! Behavior of the thickening loop on constructed generators: no invented
//! cross-set structure when the feature sets are class-conditionally
//! independent, and reliable discovery of a planted cross-set correlation.

mod common;

use common::XorShift;
use treefuse::boost::BoostConfig;
use treefuse::distributions::{EmpiricalModel, Quantizer, WeightedDataset};
use treefuse::features::FeatureMatrix;
use treefuse::fusion::{train_binary, ClassData, TrainConfig};
use treefuse::synth::{generate, SynthSpec};
use treefuse::tree::discriminative_edge_weight;

/// Quantizes two classes the way `train_binary` does and fits one empirical
/// model per class on uniform weights.
fn fit_initial_models(
    classes: &[ClassData],
    bins: usize,
    alpha: f64,
) -> (EmpiricalModel, EmpiricalModel, usize) {
    let m = classes[0].sets.len();
    let pooled: Vec<FeatureMatrix> = (0..m)
        .map(|s| FeatureMatrix::vstack(&[&classes[0].sets[s], &classes[1].sets[s]]).unwrap())
        .collect();
    let quantizers: Vec<Quantizer> = pooled.iter().map(|p| Quantizer::fit(p, bins).unwrap()).collect();
    let mut symbols = Vec::new();
    let mut labels = Vec::new();
    for (ci, class) in classes.iter().enumerate() {
        for i in 0..class.n_samples() {
            for (q, matrix) in quantizers.iter().zip(&class.sets) {
                symbols.extend(q.quantize(matrix.row(i)).unwrap());
            }
            labels.push(if ci == 0 { 1i8 } else { -1 });
        }
    }
    let cells: Vec<usize> = quantizers.iter().flat_map(|q| q.cells()).collect();
    let n_vars = cells.len();
    let ds = WeightedDataset::with_uniform_weights(symbols, cells, labels).unwrap();
    let vars: Vec<usize> = (0..n_vars).collect();
    let p = EmpiricalModel::fit(&ds, 1, &vars, alpha).unwrap();
    let q = EmpiricalModel::fit(&ds, -1, &vars, alpha).unwrap();
    (p, q, n_vars)
}

/// Sets are independent given the class; each class has strong within-set
/// structure of a different kind (diagonal vs shifted-diagonal chains) over
/// uniform marginals, so the classes separate cleanly while every cross-set
/// pair stays uninformative.
fn independent_sets_spec() -> SynthSpec {
    SynthSpec {
        sets: vec![20, 20, 20],
        planted_pairs: vec![],
        rho: 0.0,
        n_per_class: 2500,
        root_tilt: vec![0.25, 0.25, 0.25, 0.25],
        chain_stay: 0.9,
        chain_stay_q: Some(0.9),
        chain_shift_q: 1,
        ..SynthSpec::default()
    }
}

#[test]
fn independent_sets_have_negligible_cross_weights() {
    let classes = generate(&independent_sets_spec(), 42).unwrap();
    let (p, q, n_vars) = fit_initial_models(&classes, 8, 0.05);
    let set_of = |v: usize| v / 20;
    let mut cross_max: f64 = 0.0;
    let mut within = Vec::new();
    for i in 0..n_vars {
        for j in (i + 1)..n_vars {
            for (a, b) in [(&p, &q), (&q, &p)] {
                let psi = discriminative_edge_weight(a, b, i, j).unwrap();
                if set_of(i) == set_of(j) {
                    within.push(psi);
                } else {
                    cross_max = cross_max.max(psi.abs());
                }
            }
        }
    }
    within.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let within_median = within[within.len() / 2];
    assert!(
        cross_max < 0.06,
        "cross-set discriminative weight {cross_max} is not negligible"
    );
    assert!(
        within_median > 5.0 * cross_max,
        "within-set structure ({within_median}) does not dominate cross noise ({cross_max})"
    );
}

#[test]
fn independent_sets_add_almost_no_cross_edges() {
    let config = TrainConfig {
        boost: BoostConfig {
            allow_forest: true,
            alpha: 0.05,
            ..BoostConfig::default()
        },
        ..TrainConfig::default()
    };
    let classes = generate(&independent_sets_spec(), 42).unwrap();
    let model = train_binary(&classes[0].sets, &classes[1].sets, ("p", "q"), &config).unwrap();

    // Round 0 is structurally cross-free.
    for tree in [
        &model.boosted.rounds[0].pair.tree_p,
        &model.boosted.rounds[0].pair.tree_q,
    ] {
        assert!(tree.edges().iter().all(|&(a, b)| a / 20 == b / 20));
    }

    let mut added = 0usize;
    let mut cross = 0usize;
    for round in &model.boosted.rounds[1..] {
        for tree in [&round.pair.tree_p, &round.pair.tree_q] {
            for &(a, b) in tree.edges() {
                added += 1;
                if a / 20 != b / 20 {
                    cross += 1;
                }
            }
        }
    }
    let fraction = cross as f64 / added.max(1) as f64;
    assert!(
        fraction < 0.05,
        "{cross} of {added} added edges cross feature sets ({fraction:.4})"
    );
}

#[test]
fn planted_cross_correlation_is_discovered() {
    let mut hits = 0;
    for seed in 0..20u64 {
        let spec = SynthSpec {
            n_per_class: 2000,
            ..SynthSpec::default()
        };
        let classes = generate(&spec, seed).unwrap();
        let model = train_binary(
            &classes[0].sets,
            &classes[1].sets,
            ("p", "q"),
            &TrainConfig::default(),
        )
        .unwrap();
        let layout = spec.layout().unwrap();
        let offsets = layout.offsets();
        let set_of = |v: usize| offsets.iter().rposition(|&o| o <= v).unwrap();
        let planted: Vec<(usize, usize)> = spec
            .planted_pairs
            .iter()
            .map(|&(u, v)| (set_of(u), set_of(v)))
            .collect();
        let mut hit = false;
        for round in &model.boosted.rounds[1..] {
            for &(a, b) in round.pair.tree_p.edges() {
                if planted.contains(&(set_of(a), set_of(b)))
                    || planted.contains(&(set_of(b), set_of(a)))
                {
                    hit = true;
                }
            }
        }
        if hit {
            hits += 1;
        }
    }
    assert!(hits >= 18, "cross-set edge discovered in only {hits}/20 seeds");
}

#[test]
fn trained_accuracy_beats_forest_on_paired_runs() {
    // Smaller paired version of the fusion-gain experiment, exercising
    // train_binary end to end on five seeds.
    let thick_config = TrainConfig::default();
    let flat_config = TrainConfig {
        boost: BoostConfig {
            t_max: 0,
            ..BoostConfig::default()
        },
        ..TrainConfig::default()
    };
    let mut rng = XorShift::new(9);
    for _ in 0..5 {
        let seed = rng.next_u64() % 1000;
        let train = generate(
            &SynthSpec {
                n_per_class: 500,
                ..SynthSpec::default()
            },
            seed,
        )
        .unwrap();
        let test = generate(
            &SynthSpec {
                n_per_class: 1000,
                ..SynthSpec::default()
            },
            seed + 5000,
        )
        .unwrap();
        let accuracy = |config: &TrainConfig| {
            let model = train_binary(&train[0].sets, &train[1].sets, ("p", "q"), config).unwrap();
            let mut correct = 0;
            let mut total = 0;
            for (ci, class) in test.iter().enumerate() {
                for i in 0..class.n_samples() {
                    let s = model.score_flat(&class.flat_row(i)).unwrap();
                    if (s > 0.0) == (ci == 0) {
                        correct += 1;
                    }
                    total += 1;
                }
            }
            correct as f64 / total as f64
        };
        assert!(accuracy(&thick_config) >= accuracy(&flat_config));
    }
}
