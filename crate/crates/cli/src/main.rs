//! `teamflow`: generate synthetic datasets, train models, recognize team
//! actions, evaluate predictions and benchmark backends.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use teamflow_core::harness::bench::{run_bench, Workload};
use teamflow_core::harness::dataset::{load_clip, synth_clip, Split, CLIP_CLASSES};
use teamflow_core::harness::team::{load_team_models, role_accuracy, save_team_models};
use teamflow_core::harness::vision::{blob_log, track_log, train_blob_classifier};
use teamflow_core::harness::{
    confusion, generate_dataset, load_split, parse_config, run_team, run_vision, synth_split, train_team,
    ConfusionMatrix, FrameworkConfig,
};
use teamflow_core::runtime::{Backend, Execution};
use teamflow_core::svm::{load_model, save_model};

#[derive(Parser, Debug)]
#[command(name = "teamflow", version, about = "Teamwork activity recognition pipeline")]
struct Cli {
    /// Flat `section.key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// `sequential`, `parallel` or `parallel:N`.
    #[arg(long, global = true)]
    backend: Option<Backend>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Write a seeded synthetic dataset (train/test scenarios and a clip).
    Generate,
    /// Train role, action and blob models from a generated dataset.
    Train {
        /// Dataset root (containing `train/`) or a directory of scenarios.
        #[arg(long)]
        data: PathBuf,
    },
    /// Label scenarios with actions and roles; track objects in a clip.
    Recognize {
        /// Scenario directory tree to recognize.
        #[arg(long)]
        data: PathBuf,
        /// Directory written by `train`.
        #[arg(long)]
        models: PathBuf,
        /// Frame directory for the vision stages.
        #[arg(long)]
        clip: Option<PathBuf>,
    },
    /// Build a confusion matrix from a predictions file.
    Eval {
        /// `scenario predicted actual` lines as written by `recognize`.
        #[arg(long)]
        predictions: PathBuf,
    },
    /// Time the sequential reference against a parallel pipelined run.
    Bench {
        /// Repetitions per configuration; the fastest is reported.
        #[arg(long, default_value_t = 3)]
        reps: usize,
    },
}

fn load_config(cli: &Cli) -> Result<FrameworkConfig> {
    let mut cfg = match &cli.config {
        Some(p) => parse_config(p).with_context(|| format!("loading config {}", p.display()))?,
        None => FrameworkConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(b) = cli.backend {
        cfg.backend = b;
    }
    Ok(cfg)
}

fn write(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

fn write_matrix(out: &Path, m: &ConfusionMatrix) -> Result<()> {
    write(&out.join("confusion.txt"), &m.to_text())?;
    write(&out.join("confusion.csv"), &m.to_csv())?;
    print!("{}", m.to_text());
    if let Some(r) = m.macro_recall() {
        println!("macro_recall {:.1}%", r * 100.0);
    }
    Ok(())
}

fn generate(cfg: &FrameworkConfig, out: &Path) -> Result<()> {
    let s = generate_dataset(cfg, out)?;
    println!(
        "wrote {} train and {} test scenarios, {} clip frames to {}",
        s.train,
        s.test,
        s.clip_frames,
        out.display()
    );
    Ok(())
}

fn train(cfg: &FrameworkConfig, data: &Path, out: &Path) -> Result<()> {
    let train_dir = if data.join("train").is_dir() {
        data.join("train")
    } else {
        data.to_path_buf()
    };
    let scenarios = load_split(&train_dir).with_context(|| format!("loading dataset {}", train_dir.display()))?;
    if scenarios.is_empty() {
        bail!("no scenarios found under {}", train_dir.display());
    }
    let (models, mut log) = train_team(cfg, &scenarios, &cfg.backend)?;
    save_team_models(out, &models)?;
    if cfg.stages.classification {
        let clip_dir = data.join("clip");
        let clip = load_clip(&clip_dir).with_context(|| format!("loading clip {}", clip_dir.display()))?;
        let (svm, line) = train_blob_classifier(cfg, &clip, &cfg.backend)?;
        save_model(&out.join("blobs.svm"), &svm)?;
        log.lines.push(line);
    }
    write(&out.join("train.log"), &log.text())?;
    print!("{}", log.text());
    println!("models written to {}", out.display());
    Ok(())
}

fn recognize(cfg: &FrameworkConfig, data: &Path, models: &Path, clip: Option<&Path>, out: &Path) -> Result<()> {
    let team_models =
        load_team_models(models, cfg).with_context(|| format!("loading models from {}", models.display()))?;
    let scenarios = load_split(data).with_context(|| format!("loading scenarios {}", data.display()))?;
    let (items, timing) = run_team(
        cfg,
        Arc::new(team_models),
        scenarios,
        cfg.backend,
        cfg.execution,
        teamflow_core::harness::bench::TEAM_BATCH,
    )?;

    let mut preds = String::from("# scenario predicted actual\n");
    for it in &items {
        if let Some(r) = &it.recognition {
            let actual = it.scenario.action.map_or("-", |a| a.name());
            preds.push_str(&format!("{} {} {actual}\n", it.scenario.id, r.label));
            println!("{} {}", it.scenario.id, r.label);
        }
        if let Some(text) = it.roles_text() {
            write(&out.join("roles").join(&it.scenario.id).join("roles.txt"), &text)?;
        }
    }
    if cfg.stages.hmm {
        write(&out.join("predictions.txt"), &preds)?;
    }
    if items.iter().all(|it| it.scenario.action.is_some()) {
        if let Some(m) = confusion(cfg, &items)? {
            write_matrix(out, &m)?;
        }
    }
    if let Some(acc) = role_accuracy(&items) {
        println!("role_accuracy {:.1}%", acc * 100.0);
    }
    let mut report = timing.table();

    if cfg.stages.motion {
        if let Some(dir) = clip {
            let c = load_clip(dir).with_context(|| format!("loading clip {}", dir.display()))?;
            let svm = if cfg.stages.classification {
                let p = models.join("blobs.svm");
                Some(Arc::new(
                    load_model(&p).with_context(|| format!("loading {}", p.display()))?,
                ))
            } else {
                None
            };
            let (v, vt) = run_vision(cfg, svm, c.frames, cfg.backend, cfg.execution)?;
            write(&out.join("tracks.txt"), &track_log(&v))?;
            write(&out.join("blobs.txt"), &blob_log(&v, &CLIP_CLASSES))?;
            report = format!("{}{report}", vt.table());
        }
    }
    write(&out.join("timing.txt"), &report)?;
    Ok(())
}

fn parse_predictions(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            bail!("line {}: expected `scenario predicted actual`", i + 1);
        }
        if f[2] == "-" {
            bail!("line {}: scenario {} has no ground truth", i + 1, f[0]);
        }
        out.push((f[1].to_string(), f[2].to_string()));
    }
    Ok(out)
}

fn eval(cfg: &FrameworkConfig, predictions: &Path, out: &Path) -> Result<()> {
    let text = fs::read_to_string(predictions).with_context(|| format!("reading {}", predictions.display()))?;
    let pairs = parse_predictions(&text)?;
    let labels: Vec<&str> = cfg.actions().iter().map(|a| a.name()).collect();
    let m = ConfusionMatrix::evaluate(&labels, &pairs)?;
    write_matrix(out, &m)
}

fn bench(cfg: &FrameworkConfig, reps: usize, out: &Path) -> Result<()> {
    let backend = match cfg.backend {
        Backend::Sequential => Backend::parallel(4)?,
        b => b,
    };
    let train = synth_split(cfg, Split::Train)?;
    let test = synth_split(cfg, Split::Test)?;
    let (models, _) = train_team(cfg, &train, &Backend::Sequential)?;
    let (svm, frames) = if cfg.stages.motion {
        let clip = synth_clip(cfg)?;
        let svm = if cfg.stages.classification {
            Some(Arc::new(train_blob_classifier(cfg, &clip, &Backend::Sequential)?.0))
        } else {
            None
        };
        (svm, clip.frames)
    } else {
        (None, Vec::new())
    };
    let w = Workload {
        models: Arc::new(models),
        svm,
        scenarios: test,
        frames,
    };
    let r = run_bench(cfg, &w, backend, reps)?;
    let text = r.text();
    write(&out.join("bench.txt"), &text)?;
    print!("{text}");
    if !r.identical {
        bail!("parallel outputs differ from the sequential reference");
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let mut cfg = load_config(&cli)?;
    let out = cli.out.clone();
    match cli.cmd {
        Cmd::Generate => generate(&cfg, &out),
        Cmd::Train { data } => train(&cfg, &data, &out),
        Cmd::Recognize { data, models, clip } => recognize(&cfg, &data, &models, clip.as_deref(), &out),
        Cmd::Eval { predictions } => eval(&cfg, &predictions, &out),
        Cmd::Bench { reps } => {
            cfg.execution = Execution::Pipelined;
            bench(&cfg, reps, &out)
        }
    }
}
