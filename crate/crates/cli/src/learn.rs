//! train, eval and gen-dataset.

use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use handswarm::gesture::dataset::write_keypoints_jsonl;
use handswarm::gesture::{evaluate, synth, train as fit, ClassifierModel, Dataset, GestureKind, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq, Debug)]
pub enum ModelKind {
    Static,
    Dynamic,
}

impl From<ModelKind> for GestureKind {
    fn from(k: ModelKind) -> Self {
        match k {
            ModelKind::Static => GestureKind::Static,
            ModelKind::Dynamic => GestureKind::Dynamic,
        }
    }
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum, default_value = "static")]
    kind: ModelKind,
    /// JSON training configuration; defaults apply to missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long, default_value = "model.json")]
    out: PathBuf,
    /// Metrics report path; printed to stdout either way.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq, Debug)]
pub enum GenKind {
    Static,
    Dynamic,
    /// Keypoint frames (JSON lines) following `--script`.
    Recording,
}

#[derive(Args)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value = "static")]
    kind: GenKind,
    /// Number of static classes, taken from the front of the label table.
    #[arg(long, default_value_t = 8)]
    classes: usize,
    #[arg(long, default_value_t = 200)]
    per_class: usize,
    #[arg(long, default_value_t = synth::DEFAULT_NOISE_SIGMA)]
    sigma: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// For recordings: comma-separated LABEL:FRAMES, e.g. "victory:40,rock:40".
    /// Dynamic labels always span one gesture window.
    #[arg(long)]
    script: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

fn read_dataset(path: &PathBuf) -> Result<Dataset> {
    let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Dataset::read_csv(std::io::BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

fn emit_report(text: &str, path: &Option<PathBuf>) -> Result<()> {
    print!("{text}");
    if let Some(p) = path {
        std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

pub fn train(a: TrainArgs) -> Result<()> {
    let data = read_dataset(&a.dataset)?;
    let mut cfg: TrainConfig = match &a.config {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)
            .with_context(|| format!("parsing {}", p.display()))?,
        None => TrainConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(e) = a.epochs {
        cfg.epochs = e;
    }
    let start = std::time::Instant::now();
    let (model, report) = fit(&data, a.kind.into(), &cfg)?;
    log::info!("trained in {:.2} s", start.elapsed().as_secs_f64());
    model.save(&a.out)?;
    let mut text = format!(
        "model {} ({:?}, layers {:?}, {} train / {} validation rows)\n",
        a.out.display(),
        model.kind,
        model.layer_sizes,
        report.train_rows,
        report.validation_rows
    );
    text += &report.train.table("MLP (train)");
    if let Some(v) = &report.validation {
        text += &v.table("MLP (validation)");
    }
    emit_report(&text, &a.report)
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let model = ClassifierModel::load(&a.model)?;
    let data = read_dataset(&a.dataset)?;
    let m = evaluate(&model, &data)?;
    let text = m.table(&format!("MLP ({})", a.dataset.display()));
    emit_report(&text, &a.report)
}

pub fn gen_dataset(a: GenArgs) -> Result<()> {
    let file = std::fs::File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let out = BufWriter::new(file);
    match a.kind {
        GenKind::Static => {
            let labels = synth::static_labels(a.classes);
            if labels.len() != a.classes {
                bail!("only {} static labels exist", labels.len());
            }
            synth::static_dataset(&labels, a.per_class, a.sigma, a.seed)?.write_csv(out)?;
        }
        GenKind::Dynamic => synth::dynamic_dataset(a.per_class, a.sigma, a.seed)?.write_csv(out)?,
        GenKind::Recording => {
            let script = a.script.as_deref().context("--script is required for recordings")?;
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            let mut frames = Vec::new();
            for item in script.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let (label, n) = item
                    .split_once(':')
                    .with_context(|| format!("expected LABEL:FRAMES, got {item:?}"))?;
                let n: usize = n.parse().with_context(|| format!("bad frame count in {item:?}"))?;
                let first = frames.len() as u64;
                if handswarm::gesture::DYNAMIC_LABELS.contains(&label) {
                    frames.extend(synth::dynamic_sequence(label, first, handswarm::gesture::DYNAMIC_WINDOW, a.sigma, &mut rng)?);
                } else {
                    frames.extend(synth::static_hold(label, first, n, a.sigma, &mut rng)?);
                }
            }
            write_keypoints_jsonl(out, &frames)?;
        }
    }
    log::info!("wrote {}", a.out.display());
    Ok(())
}
