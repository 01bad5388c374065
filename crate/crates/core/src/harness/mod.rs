//! Fitness evaluation of weight vectors over an image corpus, and the
//! optimization runs built on it.

pub mod external;
pub mod folds;
pub mod interpolate;
pub mod run;
pub mod specfile;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::codec::{self, PreparedImage};
use crate::error::{Error, Result};
use crate::metrics;
use crate::pixel::{self, LabelMap, RasterImage};
use crate::weights::{vector_to_table, WeightTable, WeightVector};

pub use folds::{run_folds, weighted_mean, Fold, FoldPlan, FoldResult, FoldSummary};
pub use interpolate::{interpolate_bitrates, nearest_anchor, Interpolated, SEARCH_EVALS};
pub use run::{initial_point, run_optimization, run_optimization_from, RunRecord, TOP_K};
pub use specfile::{list_corpus, load_run_spec, parse_run_spec, RunSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Psnr,
    MsSsim,
    Iou,
    External,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Psnr => "psnr",
            Metric::MsSsim => "ms_ssim",
            Metric::Iou => "iou",
            Metric::External => "external",
        }
    }

    /// Score as reported to people (higher is better), given a loss.
    pub fn score_from_loss(self, loss: f64) -> f64 {
        match self {
            Metric::Psnr => -loss,
            Metric::MsSsim | Metric::Iou => 1.0 - loss,
            Metric::External => loss,
        }
    }

    /// Loss of a reconstruction the metric can't score at all.
    fn worst_loss(self) -> f64 {
        match self {
            Metric::Psnr => 0.0,
            Metric::MsSsim | Metric::Iou => 1.0,
            Metric::External => 0.0,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "psnr" => Ok(Metric::Psnr),
            "ms_ssim" | "ms-ssim" | "msssim" => Ok(Metric::MsSsim),
            "iou" => Ok(Metric::Iou),
            "external" => Ok(Metric::External),
            other => Err(Error::Spec(format!(
                "unknown metric {other:?}; expected psnr, ms_ssim, iou or external"
            ))),
        }
    }
}

/// Identical reconstructions have infinite PSNR; the loss caps it so the
/// optimizer can still rank candidates.
pub const PSNR_CAP_DB: f64 = 100.0;
/// Added on top of the metric's worst loss for an image whose budget is
/// infeasible under the candidate table.
pub const FAILURE_PENALTY: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FitnessSpec {
    pub metric: Metric,
    pub images: Vec<PathBuf>,
    /// Directory of `<image stem>.pgm` ground-truth label maps (iou only).
    pub labels_dir: Option<PathBuf>,
    /// Command template. iou uses `{decoded}` and `{predictions}`, external
    /// uses `{decoded}` and `{original}`.
    pub command: Option<String>,
    pub target_bpp: f64,
}

impl FitnessSpec {
    pub fn new(metric: Metric, images: Vec<PathBuf>, target_bpp: f64) -> Self {
        Self {
            metric,
            images,
            labels_dir: None,
            command: None,
            target_bpp,
        }
    }

    pub fn with_labels(mut self, dir: impl Into<PathBuf>) -> Self {
        self.labels_dir = Some(dir.into());
        self
    }

    pub fn with_command(mut self, command: impl Into<String>) -> Self {
        self.command = Some(command.into());
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.images.is_empty() {
            return Err(Error::Spec("corpus is empty".into()));
        }
        validate_bpp(self.target_bpp)?;
        match self.metric {
            Metric::Iou if self.labels_dir.is_none() => {
                Err(Error::Spec("metric iou needs a labels directory".into()))
            }
            Metric::Iou | Metric::External if self.command.is_none() => Err(Error::Spec(format!(
                "metric {} needs a command",
                self.metric
            ))),
            _ => Ok(()),
        }
    }
}

fn validate_bpp(bpp: f64) -> Result<()> {
    if bpp.is_finite() && bpp > 0.0 && bpp < 256.0 {
        Ok(())
    } else {
        Err(Error::Spec(format!("bpp must lie in (0, 256), got {bpp}")))
    }
}

pub fn image_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

#[derive(Debug)]
pub struct CorpusItem {
    pub name: String,
    pub image: RasterImage,
    pub prepared: PreparedImage,
    pub labels: Option<LabelMap>,
}

/// Preloaded corpus with the table-independent codec work already done.
#[derive(Debug, Default)]
pub struct Corpus {
    items: Vec<CorpusItem>,
}

impl Corpus {
    pub fn from_images(images: Vec<(String, RasterImage)>) -> Result<Self> {
        let items = images
            .into_par_iter()
            .map(|(name, image)| {
                Ok(CorpusItem {
                    prepared: codec::prepare(&image)?,
                    name,
                    image,
                    labels: None,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { items })
    }

    pub fn load(paths: &[PathBuf], labels_dir: Option<&Path>) -> Result<Self> {
        let named = paths
            .iter()
            .map(|p| Ok((image_stem(p), pixel::load_image(p)?)))
            .collect::<Result<Vec<_>>>()?;
        let mut corpus = Self::from_images(named)?;
        if let Some(dir) = labels_dir {
            for item in &mut corpus.items {
                let map = pixel::load_label_map(dir.join(format!("{}.pgm", item.name)))?;
                if (map.width(), map.height()) != (item.image.width(), item.image.height()) {
                    return Err(Error::Spec(format!(
                        "label map for {} is {}x{}, image is {}x{}",
                        item.name,
                        map.width(),
                        map.height(),
                        item.image.width(),
                        item.image.height()
                    )));
                }
                item.labels = Some(map);
            }
        }
        Ok(corpus)
    }

    pub fn items(&self) -> &[CorpusItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Loss of one reconstruction for the in-process image metrics.
pub fn image_loss(metric: Metric, original: &RasterImage, decoded: &RasterImage) -> Result<f64> {
    match metric {
        Metric::Psnr => Ok(-metrics::psnr(original, decoded)?.value.min(PSNR_CAP_DB)),
        Metric::MsSsim => Ok(1.0 - metrics::ms_ssim(original, decoded)?.value),
        other => Err(Error::Metric(format!(
            "{other} is not computed per image in process"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    /// Per-image losses in corpus order; empty for external fitness.
    pub per_image: Vec<f64>,
    /// Images whose budget was infeasible under the table.
    pub failures: usize,
}

/// Scores weight tables on a corpus at one target bitrate.
#[derive(Debug, Clone)]
pub struct Evaluator {
    metric: Metric,
    target_bpp: f64,
    command: Option<String>,
    corpus: Arc<Corpus>,
    originals: Option<Arc<tempfile::TempDir>>,
}

impl Evaluator {
    pub fn new(spec: &FitnessSpec) -> Result<Self> {
        spec.validate()?;
        let corpus = Corpus::load(&spec.images, spec.labels_dir.as_deref())?;
        Self::with_corpus(spec.metric, spec.target_bpp, Arc::new(corpus), spec.command.clone())
    }

    pub fn with_corpus(
        metric: Metric,
        target_bpp: f64,
        corpus: Arc<Corpus>,
        command: Option<String>,
    ) -> Result<Self> {
        validate_bpp(target_bpp)?;
        if corpus.is_empty() {
            return Err(Error::Spec("corpus is empty".into()));
        }
        match metric {
            Metric::MsSsim => {
                for item in corpus.items() {
                    let side = item.image.width().min(item.image.height());
                    if side < metrics::MS_SSIM_MIN_SIZE {
                        return Err(Error::Spec(format!(
                            "{} is too small for ms_ssim (minimum side {})",
                            item.name,
                            metrics::MS_SSIM_MIN_SIZE
                        )));
                    }
                }
            }
            Metric::Iou => {
                if corpus.items().iter().any(|i| i.labels.is_none()) {
                    return Err(Error::Spec("metric iou needs a label map per image".into()));
                }
            }
            _ => {}
        }
        if matches!(metric, Metric::Iou | Metric::External) && command.is_none() {
            return Err(Error::Spec(format!("metric {metric} needs a command")));
        }
        let originals = if metric == Metric::External {
            let dir = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
            for item in corpus.items() {
                pixel::store_image(&item.image, dir.path().join(pnm_name(item)))?;
            }
            Some(Arc::new(dir))
        } else {
            None
        };
        Ok(Self {
            metric,
            target_bpp,
            command,
            corpus,
            originals,
        })
    }

    /// Same corpus and metric at another bitrate.
    pub fn at_bpp(&self, target_bpp: f64) -> Result<Self> {
        validate_bpp(target_bpp)?;
        Ok(Self {
            target_bpp,
            ..self.clone()
        })
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn target_bpp(&self) -> f64 {
        self.target_bpp
    }

    pub fn corpus(&self) -> &Arc<Corpus> {
        &self.corpus
    }

    pub fn evaluate(&self, v: &WeightVector) -> Result<Evaluation> {
        self.evaluate_table(&vector_to_table(v)?)
    }

    /// Loss for the optimizer: evaluation errors map to +inf, which the
    /// optimizer ranks below every finite candidate.
    pub fn objective(&self, x: &[f64]) -> f64 {
        match self.evaluate(&WeightVector(x.to_vec())) {
            Ok(e) => e.loss,
            Err(err) => {
                log::warn!("evaluation failed: {err}");
                f64::INFINITY
            }
        }
    }

    /// Encode and decode every image with `table`, then score. Images are
    /// processed in parallel and aggregated in corpus order.
    pub fn evaluate_table(&self, table: &WeightTable) -> Result<Evaluation> {
        let decoded: Vec<Option<RasterImage>> = self
            .corpus
            .items()
            .par_iter()
            .map(|item| match item.prepared.encode(table, self.target_bpp) {
                Ok(bs) => {
                    debug_assert_eq!(&bs.header.table, table);
                    codec::decode(&bs).map(Some)
                }
                Err(Error::BudgetInfeasible { .. }) => Ok(None),
                Err(e) => Err(e),
            })
            .collect::<Result<_>>()?;
        let failures = decoded.iter().filter(|d| d.is_none()).count();
        let failed_loss = self.metric.worst_loss() + FAILURE_PENALTY;

        match self.metric {
            Metric::Psnr | Metric::MsSsim => {
                let per_image = self
                    .corpus
                    .items()
                    .par_iter()
                    .zip(&decoded)
                    .map(|(item, dec)| match dec {
                        Some(d) => image_loss(self.metric, &item.image, d),
                        None => Ok(failed_loss),
                    })
                    .collect::<Result<Vec<f64>>>()?;
                Ok(Evaluation {
                    loss: mean(&per_image),
                    per_image,
                    failures,
                })
            }
            Metric::Iou => {
                let per_image = self.iou_losses(&decoded, failed_loss)?;
                Ok(Evaluation {
                    loss: mean(&per_image),
                    per_image,
                    failures,
                })
            }
            Metric::External => {
                let dir = self.write_decoded(&decoded)?;
                let original = self.originals.as_ref().expect("external keeps originals");
                let command = self.command.as_deref().expect("validated");
                let scalar = external::with_retry(|| {
                    external::external_fitness(command, dir.path(), original.path())
                })?;
                let penalty = FAILURE_PENALTY * failures as f64 / self.corpus.len() as f64;
                Ok(Evaluation {
                    loss: scalar + penalty,
                    per_image: Vec::new(),
                    failures,
                })
            }
        }
    }

    /// Mean score as reported to people: dB for psnr (uncapped, so
    /// identical reconstructions give +inf), similarity for ms_ssim and iou,
    /// the command's loss for external. Infeasible budgets are errors here.
    pub fn mean_score(&self, table: &WeightTable) -> Result<f64> {
        if self.metric == Metric::Psnr {
            let scores = self
                .corpus
                .items()
                .par_iter()
                .map(|item| {
                    let dec = codec::decode(&item.prepared.encode(table, self.target_bpp)?)?;
                    Ok(metrics::psnr(&item.image, &dec)?.value)
                })
                .collect::<Result<Vec<f64>>>()?;
            return Ok(mean(&scores));
        }
        let e = self.evaluate_table(table)?;
        if e.failures > 0 {
            // re-encode the first failing image to surface its error
            for item in self.corpus.items() {
                item.prepared.encode(table, self.target_bpp)?;
            }
        }
        Ok(self.metric.score_from_loss(e.loss))
    }

    fn write_decoded(&self, decoded: &[Option<RasterImage>]) -> Result<tempfile::TempDir> {
        let dir = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
        for (item, dec) in self.corpus.items().iter().zip(decoded) {
            if let Some(img) = dec {
                pixel::store_image(img, dir.path().join(pnm_name(item)))?;
            }
        }
        Ok(dir)
    }

    fn iou_losses(&self, decoded: &[Option<RasterImage>], failed_loss: f64) -> Result<Vec<f64>> {
        let dir = self.write_decoded(decoded)?;
        let predictions = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
        let template = self.command.as_deref().expect("validated");
        let command = external::substitute(
            template,
            &[("decoded", dir.path()), ("predictions", predictions.path())],
        );
        external::with_retry(|| external::run_command(&command))?;
        self.corpus
            .items()
            .iter()
            .zip(decoded)
            .map(|(item, dec)| {
                if dec.is_none() {
                    return Ok(failed_loss);
                }
                let truth = item.labels.as_ref().expect("validated");
                let pred = pixel::load_label_map(predictions.path().join(format!("{}.pgm", item.name)))?;
                let classes = truth.num_classes().max(pred.num_classes());
                Ok(1.0 - metrics::iou(&pred, truth, classes)?.value)
            })
            .collect()
    }
}

fn pnm_name(item: &CorpusItem) -> String {
    let ext = if item.image.channels() == 1 { "pgm" } else { "ppm" };
    format!("{}.{ext}", item.name)
}

/// Mean accumulated in index order so results don't depend on scheduling.
pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Evaluate a table on the spec's corpus.
pub fn evaluate_weights(v: &WeightVector, spec: &FitnessSpec) -> Result<f64> {
    Ok(Evaluator::new(spec)?.evaluate(v)?.loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::desktop_corpus;
    use crate::weights::default_table;

    fn corpus(n: usize, size: usize) -> Arc<Corpus> {
        Arc::new(Corpus::from_images(desktop_corpus(n, size, size, 40)).unwrap())
    }

    #[test]
    fn metric_names_roundtrip() {
        for m in [Metric::Psnr, Metric::MsSsim, Metric::Iou, Metric::External] {
            assert_eq!(m.name().parse::<Metric>().unwrap(), m);
        }
        assert!("ssim".parse::<Metric>().is_err());
    }

    #[test]
    fn lossless_regime_scores_perfectly() {
        let c = corpus(2, 192);
        let ev = Evaluator::with_corpus(Metric::MsSsim, 16.0, c.clone(), None).unwrap();
        let e = ev.evaluate_table(&default_table()).unwrap();
        assert_eq!(e.loss, 0.0);
        assert_eq!(e.failures, 0);
        let ev = Evaluator::with_corpus(Metric::Psnr, 16.0, c, None).unwrap();
        assert_eq!(ev.evaluate_table(&default_table()).unwrap().loss, -PSNR_CAP_DB);
        assert_eq!(ev.mean_score(&default_table()).unwrap(), f64::INFINITY);
    }

    #[test]
    fn mean_score_reports_similarity_and_infeasibility() {
        let ev = Evaluator::with_corpus(Metric::MsSsim, 1.0, corpus(2, 192), None).unwrap();
        let e = ev.evaluate_table(&default_table()).unwrap();
        assert_eq!(ev.mean_score(&default_table()).unwrap(), 1.0 - e.loss);
        let greedy = vector_to_table(&WeightVector(vec![15.5; 30])).unwrap();
        let tight = ev.at_bpp(0.05).unwrap();
        assert!(matches!(
            tight.mean_score(&greedy),
            Err(Error::BudgetInfeasible { .. })
        ));
    }

    #[test]
    fn loss_is_mean_and_deterministic() {
        let ev = Evaluator::with_corpus(Metric::MsSsim, 1.0, corpus(3, 192), None).unwrap();
        let v = default_table().to_vector();
        let a = ev.evaluate(&v).unwrap();
        let b = ev.evaluate(&v).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.loss, mean(&a.per_image));
        assert!(a.loss > 0.0 && a.loss < 0.2, "{}", a.loss);
        assert_eq!(mean(&[0.02, 0.04]), 0.03);
    }

    #[test]
    fn infeasible_images_are_penalized() {
        let ev = Evaluator::with_corpus(Metric::MsSsim, 0.05, corpus(1, 192), None).unwrap();
        let greedy = WeightVector(vec![15.5; 30]);
        let e = ev.evaluate(&greedy).unwrap();
        assert_eq!(e.failures, 1);
        assert_eq!(e.loss, 1.0 + FAILURE_PENALTY);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(Evaluator::with_corpus(Metric::MsSsim, 1.0, corpus(1, 96), None).is_err());
        assert!(Evaluator::with_corpus(Metric::External, 1.0, corpus(1, 96), None).is_err());
        assert!(Evaluator::with_corpus(Metric::Psnr, 0.0, corpus(1, 96), None).is_err());
        assert!(Evaluator::with_corpus(Metric::Psnr, 1.0, Arc::new(Corpus::default()), None).is_err());
        let spec = FitnessSpec::new(Metric::Iou, vec!["a.ppm".into()], 1.0).with_command("true");
        assert!(spec.validate().is_err());
        assert!(FitnessSpec::new(Metric::Psnr, vec![], 1.0).validate().is_err());
    }

    #[test]
    fn external_metric_reads_command_output() {
        let c = corpus(2, 64);
        let ev = Evaluator::with_corpus(
            Metric::External,
            2.0,
            c,
            Some("ls {decoded} | wc -l; test -f {original}/desk40.ppm && echo 0.375".into()),
        )
        .unwrap();
        assert_eq!(ev.evaluate_table(&default_table()).unwrap().loss, 0.375);
    }

    #[test]
    fn iou_via_prediction_command() {
        let dir = tempfile::tempdir().unwrap();
        let labels = dir.path().join("labels");
        std::fs::create_dir(&labels).unwrap();
        let (w, h) = (64, 32);
        let truth: Vec<u8> = (0..w * h).map(|i| ((i % w) / 16) as u8).collect();
        let map = LabelMap::new(w, h, truth.clone()).unwrap();
        pixel::store_label_map(&map, labels.join("seg.pgm")).unwrap();
        let img_path = dir.path().join("seg.pgm");
        pixel::store_image(&RasterImage::new(w, h, 1, truth).unwrap(), &img_path).unwrap();

        // the "model" predicts each class id straight from the decoded gray value
        let spec = FitnessSpec::new(Metric::Iou, vec![img_path], 16.0)
            .with_labels(&labels)
            .with_command("cp {decoded}/seg.pgm {predictions}/seg.pgm");
        let ev = Evaluator::new(&spec).unwrap();
        assert_eq!(ev.evaluate_table(&default_table()).unwrap().loss, 0.0);
        let failing = Evaluator::new(&spec.clone().with_command("exit 3")).unwrap();
        assert!(failing.evaluate_table(&default_table()).is_err());
    }
}
