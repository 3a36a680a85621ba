//! Evaluation machinery: confusion matrices, ROC sweeps over the decision
//! threshold, and accuracy-versus-training-size sweeps with stratified
//! subsampling.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Dataset, FeatureMatrix};
use crate::fusion::{train_multiclass, ClassData, MulticlassModel, TrainConfig};

/// K x K count grid; rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    class_names: Vec<String>,
    counts: Vec<usize>,
}

impl ConfusionMatrix {
    pub fn new(class_names: Vec<String>) -> Self {
        let k = class_names.len();
        ConfusionMatrix {
            class_names,
            counts: vec![0; k * k],
        }
    }

    pub fn k(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn record(&mut self, true_class: usize, predicted: usize) {
        let k = self.k();
        self.counts[true_class * k + predicted] += 1;
    }

    pub fn count(&self, true_class: usize, predicted: usize) -> usize {
        self.counts[true_class * self.k() + predicted]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn row_sums(&self) -> Vec<usize> {
        (0..self.k())
            .map(|r| self.counts[r * self.k()..(r + 1) * self.k()].iter().sum())
            .collect()
    }

    /// trace / total.
    pub fn accuracy(&self) -> f64 {
        let trace: usize = (0..self.k()).map(|i| self.count(i, i)).sum();
        trace as f64 / self.total().max(1) as f64
    }

    /// Row-normalized probabilities; all-zero rows stay zero.
    pub fn row_normalized(&self) -> Vec<f64> {
        let k = self.k();
        let sums = self.row_sums();
        let mut out = vec![0.0; k * k];
        for r in 0..k {
            if sums[r] > 0 {
                for c in 0..k {
                    out[r * k + c] = self.counts[r * k + c] as f64 / sums[r] as f64;
                }
            }
        }
        out
    }

    /// CSV with a `true\predicted` header row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "true\\predicted")?;
        for name in &self.class_names {
            write!(w, ",{name}")?;
        }
        writeln!(w)?;
        for r in 0..self.k() {
            write!(w, "{}", self.class_names[r])?;
            for c in 0..self.k() {
                write!(w, ",{}", self.count(r, c))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Runs the classifier over a labeled dataset.
pub fn evaluate(model: &MulticlassModel, data: &Dataset) -> Result<(ConfusionMatrix, f64)> {
    let mut cm = ConfusionMatrix::new(model.class_names.clone());
    for i in 0..data.len() {
        let label = &data.labels[i];
        let true_k = model
            .class_names
            .iter()
            .position(|n| n == label)
            .ok_or_else(|| Error::Data(format!("unknown label {label:?}")))?;
        let (pred, _) = model.classify_flat(&data.flat_row(i))?;
        cm.record(true_k, pred);
    }
    let accuracy = cm.accuracy();
    Ok((cm, accuracy))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub p_fa: f64,
    pub p_d: f64,
}

/// Step ROC curve: thresholds strictly increase and both rates are
/// non-increasing along the list, from (p_fa, p_d) = (1, 1) at the low
/// sentinel down to (0, 0) at the high one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

impl RocCurve {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "threshold,p_fa,p_d")?;
        for p in &self.points {
            writeln!(w, "{},{},{}", p.threshold, p.p_fa, p.p_d)?;
        }
        Ok(())
    }
}

/// Sweeps the decision threshold over all distinct score midpoints plus
/// sentinels; detection means score strictly above the threshold.
pub fn roc_sweep(scores: &[f64], truth: &[bool]) -> Result<RocCurve> {
    if scores.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: scores.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("scores".into()));
    }
    let positives = truth.iter().filter(|&&t| t).count();
    let negatives = truth.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Data(
            "ROC needs at least one positive and one negative sample".into(),
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite"));
    let sorted: Vec<(f64, bool)> = order.iter().map(|&i| (scores[i], truth[i])).collect();
    // Suffix counts: how many positives/negatives sit at index >= i.
    let n = sorted.len();
    let mut pos_suffix = vec![0usize; n + 1];
    let mut neg_suffix = vec![0usize; n + 1];
    for i in (0..n).rev() {
        pos_suffix[i] = pos_suffix[i + 1] + usize::from(sorted[i].1);
        neg_suffix[i] = neg_suffix[i + 1] + usize::from(!sorted[i].1);
    }

    let mut distinct: Vec<f64> = sorted.iter().map(|&(s, _)| s).collect();
    distinct.dedup();
    let mut thresholds = Vec::with_capacity(distinct.len() + 1);
    thresholds.push(f64::NEG_INFINITY);
    for w in distinct.windows(2) {
        thresholds.push(0.5 * (w[0] + w[1]));
    }
    thresholds.push(f64::INFINITY);

    let points = thresholds
        .into_iter()
        .map(|threshold| {
            // Scores strictly above the threshold count as detections.
            let idx = sorted.partition_point(|&(s, _)| s <= threshold);
            RocPoint {
                threshold,
                p_fa: neg_suffix[idx] as f64 / negatives as f64,
                p_d: pos_suffix[idx] as f64 / positives as f64,
            }
        })
        .collect();
    Ok(RocCurve { points })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub size: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub seeds: u32,
}

impl SweepResult {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "size,mean_accuracy,std_accuracy")?;
        for p in &self.points {
            writeln!(w, "{},{},{}", p.size, p.mean_accuracy, p.std_accuracy)?;
        }
        Ok(())
    }
}

/// Groups a labeled dataset into per-class blocks, in order of first
/// appearance.
pub fn dataset_to_classes(data: &Dataset) -> Result<Vec<ClassData>> {
    if data.is_empty() {
        return Err(Error::Data("no samples".into()));
    }
    let mut names: Vec<String> = Vec::new();
    for label in &data.labels {
        if !names.contains(label) {
            names.push(label.clone());
        }
    }
    let mut classes = Vec::with_capacity(names.len());
    for name in names {
        let idx: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] == name).collect();
        let sets: Vec<FeatureMatrix> = data.sets.iter().map(|m| m.select_rows(&idx)).collect();
        classes.push(ClassData { name, sets });
    }
    Ok(classes)
}

/// Flattens per-class blocks back into one labeled dataset (classes
/// concatenated in order).
pub fn classes_to_dataset(classes: &[ClassData]) -> Result<Dataset> {
    if classes.is_empty() {
        return Err(Error::Data("no classes".into()));
    }
    let m = classes[0].sets.len();
    let mut sets = Vec::with_capacity(m);
    for s in 0..m {
        let parts: Vec<&FeatureMatrix> = classes.iter().map(|c| &c.sets[s]).collect();
        sets.push(FeatureMatrix::vstack(&parts)?);
    }
    let mut labels = Vec::new();
    for c in classes {
        labels.extend(std::iter::repeat_n(c.name.clone(), c.n_samples()));
    }
    Ok(Dataset { sets, labels })
}

/// Splits every class into (train, held-out) with the given held-out
/// fraction, shuffled by a seeded generator. Both sides keep at least one
/// sample per class.
pub fn stratified_split(
    classes: &[ClassData],
    holdout_frac: f64,
    seed: u64,
) -> Result<(Vec<ClassData>, Vec<ClassData>)> {
    if !(0.0..1.0).contains(&holdout_frac) || holdout_frac <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "holdout fraction must lie in (0, 1), got {holdout_frac}"
        )));
    }
    let mut train = Vec::with_capacity(classes.len());
    let mut held = Vec::with_capacity(classes.len());
    for (k, class) in classes.iter().enumerate() {
        let n = class.n_samples();
        if n < 2 {
            return Err(Error::Data(format!(
                "class {:?} needs at least 2 samples to split",
                class.name
            )));
        }
        let n_hold = ((n as f64 * holdout_frac).round() as usize).clamp(1, n - 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
        let mut idx: Vec<usize> = (0..n).collect();
        shuffle(&mut idx, &mut rng);
        let (hold_idx, train_idx) = idx.split_at(n_hold);
        let select = |rows: &[usize]| -> ClassData {
            let mut rows = rows.to_vec();
            rows.sort_unstable();
            ClassData {
                name: class.name.clone(),
                sets: class.sets.iter().map(|m| m.select_rows(&rows)).collect(),
            }
        };
        held.push(select(hold_idx));
        train.push(select(train_idx));
    }
    Ok((train, held))
}

fn shuffle(idx: &mut [usize], rng: &mut ChaCha8Rng) {
    use rand::Rng;
    for i in (1..idx.len()).rev() {
        let j = rng.random_range(0..=i);
        idx.swap(i, j);
    }
}

/// For each size and seed, draws a stratified random training subset, trains
/// a multi-class model, and evaluates it on the fixed held-out set. The
/// reported deviation is the population standard deviation over seeds.
pub fn training_size_sweep(
    train_classes: &[ClassData],
    test: &Dataset,
    sizes: &[usize],
    seeds: u32,
    config: &TrainConfig,
    master_seed: u64,
) -> Result<SweepResult> {
    if seeds == 0 {
        return Err(Error::InvalidParameter("seeds must be >= 1".into()));
    }
    let min_class = train_classes
        .iter()
        .map(|c| c.n_samples())
        .min()
        .unwrap_or(0);
    for &size in sizes {
        if size == 0 || size > min_class {
            return Err(Error::Data(format!(
                "size {size} exceeds the smallest class count {min_class}"
            )));
        }
    }

    let mut points = Vec::with_capacity(sizes.len());
    for (si, &size) in sizes.iter().enumerate() {
        let mut accuracies = Vec::with_capacity(seeds as usize);
        for rep in 0..seeds {
            let cell_seed = master_seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add((si as u64) << 32)
                .wrapping_add(rep as u64);
            let subset: Vec<ClassData> = train_classes
                .iter()
                .enumerate()
                .map(|(k, class)| {
                    let mut rng =
                        ChaCha8Rng::seed_from_u64(cell_seed.wrapping_add(1 + k as u64));
                    let mut idx: Vec<usize> = (0..class.n_samples()).collect();
                    shuffle(&mut idx, &mut rng);
                    let mut keep = idx[..size].to_vec();
                    keep.sort_unstable();
                    ClassData {
                        name: class.name.clone(),
                        sets: class.sets.iter().map(|m| m.select_rows(&keep)).collect(),
                    }
                })
                .collect();
            let model = train_multiclass(&subset, config)?;
            let (_, accuracy) = evaluate(&model, test)?;
            accuracies.push(accuracy);
        }
        let mean = accuracies.iter().sum::<f64>() / accuracies.len() as f64;
        let var = accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>()
            / accuracies.len() as f64;
        points.push(SweepPoint {
            size,
            mean_accuracy: mean,
            std_accuracy: var.sqrt(),
        });
    }
    Ok(SweepResult {
        points,
        seeds,
    })
}
