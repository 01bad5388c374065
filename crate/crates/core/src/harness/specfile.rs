//! Run spec files: `key = value` lines, `#` comments.
//!
//! ```text
//! metric = ms_ssim
//! bpp = 1.0
//! corpus = images/        # every .ppm/.pgm in the directory
//! seed = 7
//! evals = 300
//! output = runs/msssim-1bpp
//! ```
//!
//! Optional keys: `labels` (iou ground truth), `command` (iou and external),
//! `folds` (fold plan file, replaces `corpus`). Relative paths resolve
//! against the spec file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use super::folds::FoldPlan;
use super::{FitnessSpec, Metric};
use crate::error::{Error, Result};

pub const DEFAULT_EVALS: usize = 4000;

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub fitness: FitnessSpec,
    pub seed: u64,
    pub evals: usize,
    pub folds: Option<FoldPlan>,
    pub output: Option<PathBuf>,
    /// The spec text as read.
    pub source: String,
}

/// Images in `dir` with a .ppm or .pgm extension, sorted by file name.
pub fn list_corpus(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        if path.is_file() && (ext.eq_ignore_ascii_case("ppm") || ext.eq_ignore_ascii_case("pgm")) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

pub fn parse_run_spec(text: &str, base_dir: &Path) -> Result<RunSpec> {
    let mut metric = None;
    let mut bpp = None;
    let mut corpus = None;
    let mut labels = None;
    let mut command = None;
    let mut seed = 0u64;
    let mut evals = DEFAULT_EVALS;
    let mut folds = None;
    let mut output = None;

    for (lineno, raw) in text.lines().enumerate() {
        let n = lineno + 1;
        // commands may legitimately contain '#', so only strip comments elsewhere
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed
            .split_once('=')
            .ok_or_else(|| Error::Spec(format!("line {n}: expected key = value")))?;
        let key = key.trim();
        let value = if key == "command" {
            value.trim()
        } else {
            value.split('#').next().unwrap_or("").trim()
        };
        let bad = |what: &str| Error::Spec(format!("line {n}: bad {what} {value:?}"));
        match key {
            "metric" => metric = Some(value.parse::<Metric>()?),
            "bpp" => bpp = Some(value.parse::<f64>().map_err(|_| bad("bpp"))?),
            "corpus" => corpus = Some(base_dir.join(value)),
            "labels" => labels = Some(base_dir.join(value)),
            "command" => command = Some(value.to_string()),
            "seed" => seed = value.parse().map_err(|_| bad("seed"))?,
            "evals" => evals = value.parse().map_err(|_| bad("evals"))?,
            "folds" => folds = Some(FoldPlan::load(&base_dir.join(value))?),
            "output" => output = Some(base_dir.join(value)),
            other => return Err(Error::Spec(format!("line {n}: unknown key {other:?}"))),
        }
    }

    let metric = metric.ok_or_else(|| Error::Spec("missing metric".into()))?;
    let bpp = bpp.ok_or_else(|| Error::Spec("missing bpp".into()))?;
    let images = match (&corpus, &folds) {
        (Some(dir), _) => list_corpus(dir)?,
        (None, Some(_)) => Vec::new(),
        (None, None) => return Err(Error::Spec("missing corpus".into())),
    };
    let mut fitness = FitnessSpec::new(metric, images, bpp);
    fitness.labels_dir = labels;
    fitness.command = command;
    if folds.is_none() {
        fitness.validate()?;
    }
    Ok(RunSpec {
        fitness,
        seed,
        evals,
        folds,
        output,
        source: text.to_string(),
    })
}

pub fn load_run_spec(path: &Path) -> Result<RunSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_run_spec(&text, path.parent().unwrap_or(Path::new(".")))
}
