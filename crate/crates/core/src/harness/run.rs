//! Single optimization runs and their on-disk record.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use super::{Evaluator, Metric};
use crate::cma::{self, CmaConfig, GenerationRecord};
use crate::error::{Error, Result};
use crate::weights::{default_table, table_to_config, truncated_gain, vector_to_table, WeightVector, NUM_ENTRIES};

/// Number of best candidates kept from each run.
pub const TOP_K: usize = 10;

/// Starting point and step size: the default table, with sigma the
/// population standard deviation of its integer gains.
pub fn initial_point() -> (WeightVector, f64) {
    let v = default_table().to_vector();
    let sigma = gain_std(&v.0);
    (v, sigma)
}

/// Population standard deviation of the integer gains encoded in `v`.
pub fn gain_std(v: &[f64]) -> f64 {
    let gains: Vec<f64> = v.iter().map(|&x| truncated_gain(x) as f64).collect();
    let n = gains.len() as f64;
    let mean = gains.iter().sum::<f64>() / n;
    (gains.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / n).sqrt()
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub metric: Metric,
    pub target_bpp: f64,
    pub seed: u64,
    pub budget: usize,
    pub evals: usize,
    /// Loss of the starting point.
    pub baseline_loss: f64,
    pub best: WeightVector,
    pub best_loss: f64,
    pub history: Vec<GenerationRecord>,
    /// Best evaluated candidates, ascending by loss.
    pub top: Vec<(WeightVector, f64)>,
    pub wall_clock: Duration,
}

pub fn run_optimization(ev: &Evaluator, seed: u64, budget: usize) -> Result<RunRecord> {
    let (x0, sigma0) = initial_point();
    run_optimization_from(ev, &x0, sigma0, seed, budget)
}

/// CMA-ES over weight vectors starting at `x0`.
pub fn run_optimization_from(
    ev: &Evaluator,
    x0: &WeightVector,
    sigma0: f64,
    seed: u64,
    budget: usize,
) -> Result<RunRecord> {
    let config = CmaConfig::new(x0.0.clone(), sigma0)
        .with_seed(seed)
        .with_max_evals(budget);
    if budget < config.lambda {
        return Err(Error::Spec(format!(
            "budget below one generation: {budget} < {}",
            config.lambda
        )));
    }
    let start = Instant::now();
    let out = cma::optimize(&config, |x| ev.objective(x), true)?;
    log::info!(
        "{} at {} bpp: best loss {} after {} evaluations",
        ev.metric(),
        ev.target_bpp(),
        out.best_f,
        out.evals
    );
    Ok(RunRecord {
        metric: ev.metric(),
        target_bpp: ev.target_bpp(),
        seed,
        budget,
        evals: out.evals,
        baseline_loss: out.history[0].best_f,
        best: WeightVector(out.best_x),
        best_loss: out.best_f,
        history: out.history,
        top: out.top.into_iter().map(|(x, f)| (WeightVector(x), f)).collect(),
        wall_clock: start.elapsed(),
    })
}

fn vector_header() -> String {
    (0..NUM_ENTRIES).map(|i| format!(",v{i:02}")).collect()
}

fn push_vector(out: &mut String, v: &[f64]) {
    for x in v {
        write!(out, ",{x:?}").unwrap();
    }
}

fn parse_row(line: &str, path: &Path) -> Result<Vec<f64>> {
    line.split(',')
        .map(|f| {
            f.trim().parse::<f64>().map_err(|_| {
                Error::Spec(format!("{}: bad number {f:?}", path.display()))
            })
        })
        .collect()
}

impl RunRecord {
    /// Per-generation CSV: counters, losses, step size and the best vector.
    /// Contains nothing timing-dependent.
    pub fn history_csv(&self) -> String {
        let mut out = format!("{}{}\n", cma::HISTORY_HEADER, vector_header());
        for r in &self.history {
            write!(
                out,
                "{},{},{:?},{:?},{:?}",
                r.generation, r.evals, r.best_f, r.median_f, r.sigma
            )
            .unwrap();
            push_vector(&mut out, &r.best_x);
            out.push('\n');
        }
        out
    }

    pub fn top_csv(&self) -> String {
        let mut out = format!("rank,loss{}\n", vector_header());
        for (rank, (v, loss)) in self.top.iter().enumerate() {
            write!(out, "{rank},{loss:?}").unwrap();
            push_vector(&mut out, &v.0);
            out.push('\n');
        }
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "metric={}\nbpp={}\nseed={}\nbudget={}\nevals={}\nbaseline_loss={:?}\nbest_loss={:?}\nwall_clock_s={:.3}\n",
            self.metric,
            self.target_bpp,
            self.seed,
            self.budget,
            self.evals,
            self.baseline_loss,
            self.best_loss,
            self.wall_clock.as_secs_f64()
        )
    }

    /// Write history.csv, top10.csv, top10/rankNN.weights, best.weights,
    /// summary.txt and, if given, the spec text as spec.txt.
    pub fn save(&self, dir: &Path, spec_text: Option<&str>) -> Result<()> {
        let top_dir = dir.join("top10");
        fs::create_dir_all(&top_dir).map_err(|e| Error::io(&top_dir, e))?;
        let write = |name: &Path, text: &str| fs::write(name, text).map_err(|e| Error::io(name, e));
        write(&dir.join("history.csv"), &self.history_csv())?;
        write(&dir.join("top10.csv"), &self.top_csv())?;
        write(&dir.join("summary.txt"), &self.summary())?;
        write(
            &dir.join("best.weights"),
            &table_to_config(&vector_to_table(&self.best)?),
        )?;
        for (rank, (v, _)) in self.top.iter().enumerate() {
            write(
                &top_dir.join(format!("rank{rank:02}.weights")),
                &table_to_config(&vector_to_table(v)?),
            )?;
        }
        if let Some(text) = spec_text {
            write(&dir.join("spec.txt"), text)?;
        }
        Ok(())
    }

    /// Read back a record written by `save`. Wall-clock time is restored
    /// from the summary to millisecond precision.
    pub fn load(dir: &Path) -> Result<Self> {
        let read = |name: &str| {
            let p = dir.join(name);
            fs::read_to_string(&p).map_err(|e| Error::io(&p, e))
        };
        let summary = read("summary.txt")?;
        let get = |key: &str| -> Result<&str> {
            summary
                .lines()
                .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
                .ok_or_else(|| Error::Spec(format!("{}: summary lacks {key}", dir.display())))
        };
        let num = |key: &str| -> Result<f64> {
            get(key)?
                .parse::<f64>()
                .map_err(|_| Error::Spec(format!("{}: bad {key}", dir.display())))
        };

        let history_path = dir.join("history.csv");
        let mut history = Vec::new();
        for line in read("history.csv")?.lines().skip(1) {
            let f = parse_row(line, &history_path)?;
            if f.len() != 5 + NUM_ENTRIES {
                return Err(Error::Spec(format!("{}: short row", history_path.display())));
            }
            history.push(GenerationRecord {
                generation: f[0] as usize,
                evals: f[1] as usize,
                best_f: f[2],
                median_f: f[3],
                sigma: f[4],
                best_x: f[5..].to_vec(),
            });
        }
        let top_path = dir.join("top10.csv");
        let mut top = Vec::new();
        for line in read("top10.csv")?.lines().skip(1) {
            let f = parse_row(line, &top_path)?;
            if f.len() != 2 + NUM_ENTRIES {
                return Err(Error::Spec(format!("{}: short row", top_path.display())));
            }
            top.push((WeightVector(f[2..].to_vec()), f[1]));
        }
        let best = history
            .last()
            .map(|r| WeightVector(r.best_x.clone()))
            .ok_or_else(|| Error::Spec(format!("{}: empty history", history_path.display())))?;
        Ok(Self {
            metric: get("metric")?.parse()?,
            target_bpp: num("bpp")?,
            seed: num("seed")? as u64,
            budget: num("budget")? as usize,
            evals: num("evals")? as usize,
            baseline_loss: num("baseline_loss")?,
            best,
            best_loss: num("best_loss")?,
            history,
            top,
            wall_clock: Duration::from_secs_f64(num("wall_clock_s")?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Corpus;
    use crate::synthetic::desktop_corpus;
    use std::sync::Arc;

    fn evaluator() -> Evaluator {
        let corpus = Corpus::from_images(desktop_corpus(2, 192, 192, 70)).unwrap();
        Evaluator::with_corpus(Metric::MsSsim, 1.0, Arc::new(corpus), None).unwrap()
    }

    #[test]
    fn sigma_is_std_of_default_gains() {
        let (x0, sigma) = initial_point();
        let gains: Vec<f64> = default_table().gains().iter().map(|&g| g as f64).collect();
        let mean = gains.iter().sum::<f64>() / 30.0;
        let var = gains.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / 30.0;
        assert_eq!(sigma, var.sqrt());
        assert_eq!(vector_to_table(&x0).unwrap(), default_table());
    }

    #[test]
    fn small_budget_is_rejected() {
        let err = run_optimization(&evaluator(), 1, 13).unwrap_err();
        assert!(err.to_string().contains("budget below one generation"), "{err}");
    }

    #[test]
    fn run_never_loses_to_baseline_and_roundtrips() {
        let ev = evaluator();
        let rec = run_optimization(&ev, 3, 1 + 3 * 14).unwrap();
        assert_eq!(rec.evals, 43);
        assert_eq!(rec.history.len(), 4);
        assert!(rec.best_loss <= rec.baseline_loss);
        assert_eq!(rec.baseline_loss, ev.evaluate_table(&default_table()).unwrap().loss);
        assert_eq!(rec.top.len(), TOP_K);
        assert_eq!(rec.top[0].1, rec.best_loss);
        assert!(rec.top.windows(2).all(|w| w[0].1 <= w[1].1));

        let again = run_optimization(&ev, 3, 43).unwrap();
        assert_eq!(rec.history_csv(), again.history_csv());

        let dir = tempfile::tempdir().unwrap();
        rec.save(dir.path(), Some("metric=ms_ssim\n")).unwrap();
        let back = RunRecord::load(dir.path()).unwrap();
        assert_eq!(back.history_csv(), rec.history_csv());
        assert_eq!(back.top_csv(), rec.top_csv());
        assert_eq!(back.best_loss, rec.best_loss);
        assert_eq!(back.best.0, rec.best.0);
        assert_eq!(back.target_bpp, 1.0);
        let best = crate::weights::parse_config(
            &fs::read_to_string(dir.path().join("top10/rank00.weights")).unwrap(),
        )
        .unwrap();
        assert_eq!(ev.evaluate_table(&best).unwrap().loss, rec.best_loss);
    }
}
