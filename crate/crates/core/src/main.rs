//! Command-line harness: train/predict/eval/roc/sweep plus feature
//! extraction and synthetic data generation.
//!
//! Exit codes: 0 on success, 2 for data errors, 3 for configuration errors.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use treefuse::boost::{BoostConfig, Margin};
use treefuse::error::{Error, Result};
use treefuse::eval::{
    classes_to_dataset, dataset_to_classes, evaluate, roc_sweep, stratified_split,
    training_size_sweep,
};
use treefuse::features::{
    dwt2_subbands, load_manifest, load_pgm, load_tabular_features, normalize_chip,
    save_tabular_features, subband_feature_row, subband_layout, Dataset, FeatureLayout,
    FeatureMatrix, Wavelet,
};
use treefuse::fusion::{train_multiclass, MulticlassModel, TrainConfig};
use treefuse::synth::{generate, SynthSpec};

#[derive(Parser)]
#[command(name = "treefuse", version, about = "Feature-fusion classifier built on boosted discriminative tree graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MarginArg {
    Sign,
    Llr,
}

impl From<MarginArg> for Margin {
    fn from(m: MarginArg) -> Margin {
        match m {
            MarginArg::Sign => Margin::Sign,
            MarginArg::Llr => Margin::ClampedLlr,
        }
    }
}

#[derive(Debug, Args)]
struct TrainOpts {
    /// Quantile bins per feature dimension.
    #[arg(long, default_value_t = 8)]
    bins: usize,
    /// Maximum boosted rounds after the initial forest round.
    #[arg(long, default_value_t = 10)]
    tmax: usize,
    /// Smoothing pseudocount per table.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Relative J-divergence change that stops boosting.
    #[arg(long, default_value_t = 1e-3)]
    j_tol: f64,
    /// Keep only positive-weight edges (forests) instead of spanning trees.
    #[arg(long)]
    allow_forest: bool,
    /// Weight-update margin.
    #[arg(long, value_enum, default_value_t = MarginArg::Sign)]
    margin: MarginArg,
    /// Give both classes equal total weight in each binary subproblem.
    #[arg(long)]
    rebalance: bool,
    /// Fit each round on a weight-resampled copy of the training set
    /// (seeded by --seed) instead of weighting the counts.
    #[arg(long)]
    resample: bool,
}

#[derive(Debug, Args)]
struct DataOpts {
    /// Input: tabular features CSV, or an image manifest with path,label.
    #[arg(long)]
    data: PathBuf,
    /// Per-set dimensions m1,m2,... (required for tabular data).
    #[arg(long)]
    layout: Option<String>,
    /// Label column name in tabular data.
    #[arg(long, default_value = "label")]
    label_column: String,
    /// Wavelet used when --data is an image manifest.
    #[arg(long, default_value = "haar")]
    wavelet: String,
    /// Decomposition levels for image data.
    #[arg(long, default_value_t = 2)]
    levels: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Train a one-vs-all fusion model.
    Train {
        #[command(flatten)]
        data: DataOpts,
        #[command(flatten)]
        train: TrainOpts,
        /// Binary decision threshold stored per submodel.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        tau: f64,
        /// Outlier-rejection threshold stored on the model.
        #[arg(long, allow_negative_numbers = true)]
        tau_out: Option<f64>,
        /// Seed for the optional resampling mode.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score samples with a trained model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataOpts,
        /// Override every submodel's binary threshold for the detect flags.
        #[arg(long, allow_negative_numbers = true)]
        tau: Option<f64>,
        /// Override the model's outlier-rejection threshold.
        #[arg(long, allow_negative_numbers = true)]
        tau_out: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Confusion matrix and accuracy on a labeled set.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataOpts,
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        confusion: PathBuf,
    },
    /// ROC sweep of one class's one-vs-all score.
    Roc {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataOpts,
        /// The class treated as positive.
        #[arg(long)]
        positive: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Accuracy as a function of training-set size.
    Sweep {
        #[command(flatten)]
        data: DataOpts,
        #[command(flatten)]
        train: TrainOpts,
        /// Comma-separated per-class training sizes.
        #[arg(long)]
        sizes: String,
        #[arg(long, default_value_t = 10)]
        seeds: u32,
        /// Held-out fraction carved from --data for evaluation.
        #[arg(long, default_value_t = 0.3)]
        holdout: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Wavelet sub-band features from an image manifest.
    ExtractFeatures {
        #[arg(long)]
        images: PathBuf,
        #[arg(long, default_value = "haar")]
        wavelet: String,
        #[arg(long, default_value_t = 2)]
        levels: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample a labeled dataset from a synthetic generator spec.
    Synth {
        /// JSON generator spec.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

const CHIP_SIDE: usize = 64;

fn is_manifest(path: &Path) -> Result<bool> {
    let file = std::fs::File::open(path)?;
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(std::io::BufReader::new(file));
    let headers = rd
        .headers()
        .map_err(|e| Error::Data(format!("header: {e}")))?;
    let has = |name: &str| headers.iter().any(|h| h == name);
    Ok(has("path") && has("label"))
}

fn load_images(manifest_path: &Path, wavelet: Wavelet, levels: usize) -> Result<Dataset> {
    let entries = load_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let layout = subband_layout(CHIP_SIDE, levels)?;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(entries.len());
    let mut labels = Vec::with_capacity(entries.len());
    for entry in &entries {
        let path = base.join(&entry.path);
        let chip = load_pgm(&path)?;
        let chip = normalize_chip(&chip, CHIP_SIDE)?;
        let features = dwt2_subbands(&chip, levels, wavelet)?;
        rows.push(subband_feature_row(&features));
        labels.push(entry.label.clone());
    }
    let flat = FeatureMatrix::from_rows(rows)?;
    let sets = (0..layout.num_sets())
        .map(|s| {
            let range = layout.set_range(s);
            let mut data = Vec::with_capacity(flat.rows() * range.len());
            for i in 0..flat.rows() {
                data.extend_from_slice(&flat.row(i)[range.clone()]);
            }
            FeatureMatrix::new(flat.rows(), range.len(), data)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { sets, labels })
}

fn load_input(opts: &DataOpts) -> Result<Dataset> {
    if is_manifest(&opts.data)? {
        let wavelet = Wavelet::parse(&opts.wavelet)?;
        return load_images(&opts.data, wavelet, opts.levels);
    }
    let layout_str = opts.layout.as_ref().ok_or_else(|| {
        Error::InvalidParameter("--layout is required for tabular data".into())
    })?;
    let layout = FeatureLayout::parse(layout_str)?;
    load_tabular_features(&opts.data, &layout, &opts.label_column)
}

fn train_config(opts: &TrainOpts, tau: f64, rebalance_seed: Option<u64>) -> TrainConfig {
    TrainConfig {
        bins: opts.bins,
        tau,
        rebalance: opts.rebalance,
        boost: BoostConfig {
            t_max: opts.tmax,
            j_tol: opts.j_tol,
            alpha: opts.alpha,
            margin: opts.margin.into(),
            allow_forest: opts.allow_forest,
            resample: if opts.resample { rebalance_seed } else { None },
            ..BoostConfig::default()
        },
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            data,
            train,
            tau,
            tau_out,
            seed,
            out,
        } => {
            let dataset = load_input(&data)?;
            let classes = dataset_to_classes(&dataset)?;
            let config = train_config(&train, tau, Some(seed));
            let mut model = train_multiclass(&classes, &config)?;
            model.tau_out = tau_out;
            model.save(&out)?;
            eprintln!(
                "trained {} classes on {} samples -> {}",
                model.num_classes(),
                dataset.len(),
                out.display()
            );
            Ok(())
        }
        Command::Predict {
            model,
            data,
            tau,
            tau_out,
            out,
        } => {
            let mut model = MulticlassModel::load(&model)?;
            if let Some(t) = tau {
                for sub in &mut model.submodels {
                    sub.boosted.tau = t;
                }
            }
            if tau_out.is_some() {
                model.tau_out = tau_out;
            }
            let dataset = load_input(&data)?;
            let mut w = std::io::BufWriter::new(std::fs::File::create(&out)?);
            write!(w, "index,label,predicted,outlier,max_score")?;
            for name in &model.class_names {
                write!(w, ",score_{name}")?;
            }
            for name in &model.class_names {
                write!(w, ",detect_{name}")?;
            }
            writeln!(w)?;
            for i in 0..dataset.len() {
                let flat = dataset.flat_row(i);
                let (k_star, scores) = model.classify_flat(&flat)?;
                let outlier = model.reject_outlier_flat(&flat)?;
                write!(
                    w,
                    "{i},{},{},{},{}",
                    dataset.labels[i],
                    model.class_names[k_star],
                    u8::from(outlier),
                    scores[k_star]
                )?;
                for &s in &scores {
                    write!(w, ",{s}")?;
                }
                for (sub, &s) in model.submodels.iter().zip(&scores) {
                    write!(w, ",{}", u8::from(s > sub.tau()))?;
                }
                writeln!(w)?;
            }
            Ok(())
        }
        Command::Eval {
            model,
            data,
            report,
            confusion,
        } => {
            let model = MulticlassModel::load(&model)?;
            let dataset = load_input(&data)?;
            let (cm, accuracy) = evaluate(&model, &dataset)?;
            cm.write_csv(std::io::BufWriter::new(std::fs::File::create(&confusion)?))?;

            #[derive(serde::Serialize)]
            struct Report {
                accuracy: f64,
                n_samples: usize,
                classes: Vec<String>,
                per_class_counts: Vec<usize>,
                confusion_row_normalized: Vec<f64>,
            }
            let body = Report {
                accuracy,
                n_samples: dataset.len(),
                classes: cm.class_names().to_vec(),
                per_class_counts: cm.row_sums(),
                confusion_row_normalized: cm.row_normalized(),
            };
            std::fs::write(&report, serde_json::to_string_pretty(&body)?)?;
            eprintln!("accuracy {accuracy:.4} over {} samples", dataset.len());
            Ok(())
        }
        Command::Roc {
            model,
            data,
            positive,
            out,
        } => {
            let model = MulticlassModel::load(&model)?;
            let k = model
                .class_names
                .iter()
                .position(|n| *n == positive)
                .ok_or_else(|| Error::InvalidParameter(format!("unknown class {positive:?}")))?;
            let dataset = load_input(&data)?;
            let mut scores = Vec::with_capacity(dataset.len());
            let mut truth = Vec::with_capacity(dataset.len());
            for i in 0..dataset.len() {
                scores.push(model.submodels[k].score_flat(&dataset.flat_row(i))?);
                truth.push(dataset.labels[i] == positive);
            }
            let curve = roc_sweep(&scores, &truth)?;
            curve.write_csv(std::io::BufWriter::new(std::fs::File::create(&out)?))?;
            Ok(())
        }
        Command::Sweep {
            data,
            train,
            sizes,
            seeds,
            holdout,
            seed,
            out,
        } => {
            let sizes: Vec<usize> = sizes
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::InvalidParameter(format!("bad size {t:?}")))
                })
                .collect::<Result<_>>()?;
            let dataset = load_input(&data)?;
            let classes = dataset_to_classes(&dataset)?;
            let (train_classes, held) = stratified_split(&classes, holdout, seed)?;
            let test = classes_to_dataset(&held)?;
            let config = train_config(&train, 0.0, Some(seed));
            let result = training_size_sweep(&train_classes, &test, &sizes, seeds, &config, seed)?;
            result.write_csv(std::io::BufWriter::new(std::fs::File::create(&out)?))?;
            Ok(())
        }
        Command::ExtractFeatures {
            images,
            wavelet,
            levels,
            out,
        } => {
            let wavelet = Wavelet::parse(&wavelet)?;
            let dataset = load_images(&images, wavelet, levels)?;
            save_tabular_features(&out, &dataset)?;
            let dims: Vec<String> = dataset.sets.iter().map(|m| m.cols().to_string()).collect();
            eprintln!("layout: {}", dims.join(","));
            Ok(())
        }
        Command::Synth { spec, seed, out } => {
            let text = std::fs::read_to_string(&spec)?;
            let spec: SynthSpec =
                serde_json::from_str(&text).map_err(|e| Error::Data(format!("spec: {e}")))?;
            let classes = generate(&spec, seed)?;
            let dataset = classes_to_dataset(&classes)?;
            save_tabular_features(&out, &dataset)?;
            Ok(())
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprint!("{e}");
            std::process::exit(3);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
