use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use antimuclass::bundle::{load_bundle, load_labels, save_bundle, save_labels, Layout, SampleType};
use antimuclass::config::{format_config, parse_config};
use antimuclass::core::evaluation::confusion;
use antimuclass::core::pipeline::{classify_raster, train};
use antimuclass::core::{LabelMap, RunConfig, UNKNOWN};
use antimuclass::model_io::{load_model, save_model};
use antimuclass::palette::{render_labels, Palette};
use antimuclass::report::{confusion_tsv, human_report, summary_tsv};
use antimuclass::synth::{synth_scene, RegionLayout, SceneSpec};
use antimuclass::sweep::{sweep, SweepSpec};
use antimuclass::{Error, Result};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "antimuclass", version, about = "Clonal-selection and ant-foraging RBF classifier for multiband rasters")]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the configuration file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path (meaning depends on the command).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model on a labeled raster bundle.
    Train {
        /// Raster bundle header.
        #[arg(long)]
        bundle: PathBuf,
        /// Label graymap; defaults to the bundle's own labels.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Label every pixel of a raster bundle.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        bundle: PathBuf,
        /// Also write a color rendering here.
        #[arg(long)]
        render: Option<PathBuf>,
    },
    /// Compare a label map against ground truth.
    Evaluate {
        /// Predicted label graymap.
        #[arg(long)]
        pred: PathBuf,
        /// Ground-truth label graymap.
        #[arg(long)]
        truth: PathBuf,
        /// Exclude this model's training pixels from the evaluation.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Train and evaluate over a grid of one parameter.
    Sweep {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Configuration key to vary, e.g. NbrItr.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Seeds per grid value.
        #[arg(long, default_value_t = 3)]
        seeds: usize,
    },
    /// Generate a labeled synthetic scene.
    Synth {
        #[arg(long, default_value_t = 12)]
        classes: usize,
        #[arg(long, default_value_t = 128)]
        width: usize,
        #[arg(long, default_value_t = 128)]
        height: usize,
        #[arg(long, default_value_t = 7)]
        bands: usize,
        /// Minimum signature distance over within-class noise (`inf` for none).
        #[arg(long, default_value_t = 6.0)]
        separation: f64,
        #[arg(long, default_value_t = 0.3)]
        min_distance: f64,
        #[arg(long, value_enum, default_value_t = LayoutArg::Voronoi)]
        layout: LayoutArg,
        #[arg(long, value_enum, default_value_t = FormatArg::Bsq)]
        format: FormatArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LayoutArg {
    Voronoi,
    Blocks,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Bsq,
    Pgm,
    Text,
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|source| Error::Io { path: p.clone(), source })?;
            parse_config(&text, RunConfig::default())?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_config(cfg: &RunConfig) {
    println!("# resolved configuration");
    print!("{}", format_config(cfg));
    println!();
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn scene_labels(bundle: &Path, labels: Option<&Path>) -> Result<(antimuclass::core::Raster, LabelMap)> {
    let b = load_bundle(bundle)?;
    let labels = match labels {
        Some(p) => load_labels(p)?,
        None => b.labels.ok_or_else(|| Error::Format {
            path: bundle.to_path_buf(),
            offset: 0,
            msg: "the bundle has no labels; pass --labels".into(),
        })?,
    };
    Ok((b.raster, labels))
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Train { bundle, labels } => {
            let cfg = resolve_config(&cli)?;
            print_config(&cfg);
            let (raster, labels) = scene_labels(bundle, labels.as_deref())?;
            let tm = train(&raster, &labels, &cfg)?;
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("model.txt"));
            save_model(&out, &tm)?;
            let m = &tm.metrics;
            println!("hidden units         {}", tm.model.hidden_count());
            println!("ridge training rate  {:.2} %", 100.0 * m.ridge_rate);
            println!("API evaluations      {}", m.api_evaluations);
            print!("{}", human_report("training pixels", &m.confusion));
            write(&with_suffix(&out, ".metrics.tsv"), summary_tsv(&m.confusion))?;
            println!("model written to {}", out.display());
        }
        Command::Classify { model, bundle, render } => {
            let tm = load_model(model)?;
            print_config(&tm.config);
            let b = load_bundle(bundle)?;
            let pred = classify_raster(&tm, &b.raster)?;
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("classified.pgm"));
            save_labels(&out, &pred)?;
            if let Some(r) = render {
                write(r, render_labels(&pred, &Palette::for_classes(tm.class_count()))?)?;
            }
            println!("{} pixels, {} unknown", pred.labels.len(), pred.unknown_count());
            if let Some(truth) = &b.labels {
                let m = antimuclass::core::pipeline::held_out_confusion(&tm, &pred, truth)?;
                print!("{}", human_report("held-out pixels", &m));
            }
            println!("labels written to {}", out.display());
        }
        Command::Evaluate { pred, truth, model } => {
            let pred = load_labels(pred)?;
            let truth = load_labels(truth)?;
            let (mask, k) = match model {
                Some(m) => {
                    let tm = load_model(m)?;
                    print_config(&tm.config);
                    (tm.held_out_mask(&truth), tm.class_count())
                }
                None => {
                    let k = truth.max_class().max(pred.labels.iter().copied().filter(|&l| l != UNKNOWN).max().unwrap_or(0));
                    (truth.labeled_mask(), k as usize)
                }
            };
            let m = confusion(&pred, &truth, &mask, k)?;
            print!("{}", human_report("evaluation", &m));
            if let Some(out) = &cli.out {
                write(&with_suffix(out, ".metrics.tsv"), summary_tsv(&m))?;
                write(&with_suffix(out, ".confusion.tsv"), confusion_tsv(&m))?;
            }
        }
        Command::Sweep { bundle, labels, param, values, seeds } => {
            let cfg = resolve_config(&cli)?;
            print_config(&cfg);
            let (raster, labels) = scene_labels(bundle, labels.as_deref())?;
            let spec = SweepSpec { param: param.clone(), values: values.clone(), seeds: *seeds, master_seed: cfg.seed, base: cfg };
            let table = sweep(&spec, &raster, &labels)?;
            let tsv = table.to_tsv();
            print!("{tsv}");
            if let Some(out) = &cli.out {
                write(out, &tsv)?;
            }
        }
        Command::Synth { classes, width, height, bands, separation, min_distance, layout, format } => {
            let spec = SceneSpec {
                classes: *classes,
                width: *width,
                height: *height,
                bands: *bands,
                separation: *separation,
                min_distance: *min_distance,
                layout: match layout {
                    LayoutArg::Voronoi => RegionLayout::Voronoi,
                    LayoutArg::Blocks => RegionLayout::Blocks,
                },
                seed: cli.seed.unwrap_or(0),
            };
            println!("# scene: {spec:?}");
            let scene = synth_scene(&spec)?;
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("scene.hdr"));
            let layout = match format {
                FormatArg::Bsq => Layout::Bsq,
                FormatArg::Pgm => Layout::Pgm,
                FormatArg::Text => Layout::Text,
            };
            for f in save_bundle(&out, &scene.bundle, SampleType::U8, layout)? {
                println!("wrote {}", f.display());
            }
            println!("within-class noise {}", scene.noise);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
