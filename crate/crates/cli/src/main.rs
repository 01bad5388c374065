//! `xstune`: encode, decode and tune the wavelet codec from the shell.
//!
//! Exit codes: 0 success, 1 other failure, 2 usage, 3 I/O or unreadable
//! input, 4 infeasible bit budget, 5 malformed bitstream, 6 bad run spec.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};

use xstune_core::codec::{self, Bitstream};
use xstune_core::harness::{
    self, folds, interpolate_bitrates, list_corpus, load_run_spec, run_optimization, Corpus,
    Evaluator, Metric, RunRecord, RunSpec, SEARCH_EVALS,
};
use xstune_core::pixel;
use xstune_core::weights::{default_table, parse_config, table_to_config, WeightTable};
use xstune_core::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_IO: u8 = 3;
const EXIT_INFEASIBLE: u8 = 4;
const EXIT_BITSTREAM: u8 = 5;
const EXIT_SPEC: u8 = 6;

#[derive(Parser)]
#[command(name = "xstune", version, about = "Wavelet codec with tunable band weights")]
struct Cli {
    /// Worker threads for parallel evaluation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a PGM/PPM image; prints the achieved payload bpp.
    Encode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        bpp: f64,
        /// Weight table file; the default table when omitted.
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Decode a bitstream to PGM/PPM.
    Decode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Print the weight table embedded in the bitstream.
        #[arg(long)]
        show_weights: bool,
    },
    /// Run an optimization described by a spec file.
    Optimize {
        #[arg(long)]
        spec: PathBuf,
        /// Output directory; overrides the spec's `output` key.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the mean score of a weight table over a corpus.
    Evaluate {
        /// Weight table file; the default table when omitted.
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long, value_enum)]
        metric: MetricArg,
        /// Directory of PGM/PPM images, or a single image.
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        bpp: f64,
        /// Ground-truth label maps (iou).
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Prediction or scoring command (iou, external).
        #[arg(long)]
        command: Option<String>,
    },
    /// Derive tables for new bitrates from optimized anchor runs.
    Interpolate {
        /// Run directories written by `optimize`.
        #[arg(long, num_args = 0..)]
        anchors: Vec<PathBuf>,
        /// Target bitrates, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        bpp: Vec<f64>,
        /// Spec providing metric, corpus and seed.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Evaluations of the short search run per target.
        #[arg(long, default_value_t = SEARCH_EVALS)]
        search_evals: usize,
    },
    /// Print the default weight table.
    DefaultWeights,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Psnr,
    #[value(name = "ms_ssim", alias = "ms-ssim")]
    MsSsim,
    Iou,
    External,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Psnr => Metric::Psnr,
            MetricArg::MsSsim => Metric::MsSsim,
            MetricArg::Iou => Metric::Iou,
            MetricArg::External => Metric::External,
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

type CmdResult = Result<(), Failure>;

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } | Error::ImageFormat(_) | Error::InvalidImage(_) | Error::Weights(_) => {
            EXIT_IO
        }
        Error::BudgetInfeasible { .. } => EXIT_INFEASIBLE,
        Error::Bitstream(_) => EXIT_BITSTREAM,
        Error::Spec(_) => EXIT_SPEC,
        Error::Optimizer(_) | Error::Metric(_) | Error::External(_) => EXIT_FAILURE,
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Failure {
            code: exit_code(&err),
            message: err.to_string(),
        }
    }
}

fn with_code(code: u8) -> impl Fn(Error) -> Failure {
    move |err| Failure {
        code,
        message: err.to_string(),
    }
}

fn io_failure(path: &Path, err: std::io::Error) -> Failure {
    Failure {
        code: EXIT_IO,
        message: format!("{}: {err}", path.display()),
    }
}

fn load_weights(path: Option<&Path>) -> Result<WeightTable, Failure> {
    match path {
        None => Ok(default_table()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| io_failure(p, e))?;
            parse_config(&text).map_err(|e| Failure {
                code: EXIT_IO,
                message: format!("{}: {e}", p.display()),
            })
        }
    }
}

fn cmd_encode(input: &Path, output: &Path, bpp: f64, weights: Option<&Path>) -> CmdResult {
    if !(bpp > 0.0 && bpp < 256.0) {
        return Err(Failure {
            code: 2,
            message: format!("--bpp must lie in (0, 256), got {bpp}"),
        });
    }
    let table = load_weights(weights)?;
    let img = pixel::load_image(input)?;
    let bs = codec::encode(&img, &table, bpp)?;
    fs::write(output, bs.to_bytes()).map_err(|e| io_failure(output, e))?;
    println!("{:.6}", bs.achieved_bpp());
    Ok(())
}

fn cmd_decode(input: &Path, output: &Path, show_weights: bool) -> CmdResult {
    let bytes = fs::read(input).map_err(|e| io_failure(input, e))?;
    let bs = Bitstream::from_bytes(&bytes).map_err(with_code(EXIT_BITSTREAM))?;
    let img = codec::decode(&bs).map_err(with_code(EXIT_BITSTREAM))?;
    pixel::store_image(&img, output)?;
    if show_weights {
        print!("{}", table_to_config(&bs.header.table));
    }
    Ok(())
}

fn load_spec(path: &Path) -> Result<RunSpec, Failure> {
    load_run_spec(path).map_err(|e| Failure {
        code: match e {
            Error::Io { .. } if !path.exists() => EXIT_IO,
            _ => EXIT_SPEC,
        },
        message: format!("{}: {e}", path.display()),
    })
}

fn evaluator_for(spec: &RunSpec) -> Result<Evaluator, Failure> {
    Evaluator::new(&spec.fitness).map_err(|e| Failure {
        code: match e {
            Error::Io { .. } | Error::ImageFormat(_) => EXIT_IO,
            _ => EXIT_SPEC,
        },
        message: e.to_string(),
    })
}

fn cmd_optimize(spec_path: &Path, out: Option<&Path>) -> CmdResult {
    let spec = load_spec(spec_path)?;
    let out_dir = out
        .map(Path::to_path_buf)
        .or_else(|| spec.output.clone())
        .unwrap_or_else(|| PathBuf::from("run"));
    fs::create_dir_all(&out_dir).map_err(|e| io_failure(&out_dir, e))?;

    if let Some(plan) = &spec.folds {
        let summary = folds::run_folds(plan, &spec.fitness, spec.seed, spec.evals)?;
        let mut csv = String::from("fold,test_group,test_images,train_loss,test_loss\n");
        for (i, r) in summary.folds.iter().enumerate() {
            let dir = out_dir.join(format!("fold{i}"));
            r.record.save(&dir, Some(&spec.source))?;
            csv.push_str(&format!(
                "{i},{},{},{:?},{:?}\n",
                r.fold.test, r.test_count, r.record.best_loss, r.test_loss
            ));
        }
        let path = out_dir.join("folds.csv");
        fs::write(&path, csv).map_err(|e| io_failure(&path, e))?;
        println!("weighted_test_loss {:.6}", summary.weighted_loss);
        println!("folds {}", path.display());
        return Ok(());
    }

    let ev = evaluator_for(&spec)?;
    let record = run_optimization(&ev, spec.seed, spec.evals)?;
    record.save(&out_dir, Some(&spec.source))?;
    println!("best_loss {:.6}", record.best_loss);
    println!("weights {}", out_dir.join("best.weights").display());
    Ok(())
}

fn cmd_evaluate(
    weights: Option<&Path>,
    metric: Metric,
    corpus: &Path,
    bpp: f64,
    labels: Option<&Path>,
    command: Option<String>,
) -> CmdResult {
    let table = load_weights(weights)?;
    let images = if corpus.is_dir() {
        list_corpus(corpus)?
    } else {
        vec![corpus.to_path_buf()]
    };
    let mut spec = harness::FitnessSpec::new(metric, images, bpp);
    spec.labels_dir = labels.map(Path::to_path_buf);
    spec.command = command;
    spec.validate()?;
    let corpus = Corpus::load(&spec.images, spec.labels_dir.as_deref())?;
    let ev = Evaluator::with_corpus(metric, bpp, Arc::new(corpus), spec.command.clone())?;
    let score = ev.mean_score(&table)?;
    if score.is_infinite() && score > 0.0 {
        println!("inf");
    } else {
        println!("{score:.6}");
    }
    Ok(())
}

fn cmd_interpolate(
    anchors: &[PathBuf],
    targets: &[f64],
    spec_path: &Path,
    out: Option<&Path>,
    search_evals: usize,
) -> CmdResult {
    if anchors.is_empty() {
        return Err(Failure {
            code: EXIT_SPEC,
            message: "no anchor runs given".into(),
        });
    }
    let spec = load_spec(spec_path)?;
    let records = anchors
        .iter()
        .map(|dir| RunRecord::load(dir).map_err(with_code(EXIT_SPEC)))
        .collect::<Result<Vec<_>, _>>()?;
    let ev = evaluator_for(&spec)?;
    let results = interpolate_bitrates(&records, targets, &ev, spec.seed, search_evals)?;

    let out_dir = out
        .map(Path::to_path_buf)
        .or_else(|| spec.output.clone())
        .unwrap_or_else(|| PathBuf::from("interpolated"));
    fs::create_dir_all(&out_dir).map_err(|e| io_failure(&out_dir, e))?;
    let mut csv = String::from("bpp,loss,anchor_bpp,weights\n");
    for r in &results {
        let name = format!("bpp_{:.3}.weights", r.target_bpp);
        let path = out_dir.join(&name);
        fs::write(&path, table_to_config(&r.table)).map_err(|e| io_failure(&path, e))?;
        csv.push_str(&format!("{},{:?},{},{name}\n", r.target_bpp, r.loss, r.anchor_bpp));
    }
    let path = out_dir.join("interpolated.csv");
    fs::write(&path, &csv).map_err(|e| io_failure(&path, e))?;
    print!("{csv}");
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Encode {
            input,
            output,
            bpp,
            weights,
        } => cmd_encode(&input, &output, bpp, weights.as_deref()),
        Command::Decode {
            input,
            output,
            show_weights,
        } => cmd_decode(&input, &output, show_weights),
        Command::Optimize { spec, out } => cmd_optimize(&spec, out.as_deref()),
        Command::Evaluate {
            weights,
            metric,
            corpus,
            bpp,
            labels,
            command,
        } => cmd_evaluate(
            weights.as_deref(),
            metric.into(),
            &corpus,
            bpp,
            labels.as_deref(),
            command,
        ),
        Command::Interpolate {
            anchors,
            bpp,
            spec,
            out,
            search_evals,
        } => cmd_interpolate(&anchors, &bpp, &spec, out.as_deref(), search_evals),
        Command::DefaultWeights => {
            print!("{}", table_to_config(&default_table()));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("xstune: {e}");
            return ExitCode::from(EXIT_FAILURE);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("xstune: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
