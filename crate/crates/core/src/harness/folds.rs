//! Train/test folds over named image groups.
//!
//! Plan files list groups and folds, one per line:
//!
//! ```text
//! group city_a a1.ppm a2.ppm
//! group city_b b1.ppm
//! fold city_a city_b   # test group first, then the training groups
//! ```

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use super::{run::run_optimization, Evaluator, FitnessSpec, RunRecord};
use crate::error::{Error, Result};
use crate::weights::vector_to_table;

#[derive(Debug, Clone, PartialEq)]
pub struct Fold {
    pub train: Vec<String>,
    pub test: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldPlan {
    groups: Vec<(String, Vec<PathBuf>)>,
    folds: Vec<Fold>,
}

impl FoldPlan {
    pub fn new(groups: Vec<(String, Vec<PathBuf>)>, folds: Vec<Fold>) -> Result<Self> {
        let plan = Self { groups, folds };
        plan.validate()?;
        Ok(plan)
    }

    fn validate(&self) -> Result<()> {
        if self.folds.is_empty() {
            return Err(Error::Spec("fold plan has no folds".into()));
        }
        let mut names = HashSet::new();
        for (name, images) in &self.groups {
            if images.is_empty() {
                return Err(Error::Spec(format!("group {name} is empty")));
            }
            if !names.insert(name.as_str()) {
                return Err(Error::Spec(format!("group {name} defined twice")));
            }
        }
        let mut covered = HashSet::new();
        for (i, fold) in self.folds.iter().enumerate() {
            if fold.train.is_empty() {
                return Err(Error::Spec(format!("fold {i} has no training groups")));
            }
            for g in fold.train.iter().chain([&fold.test]) {
                if !names.contains(g.as_str()) {
                    return Err(Error::Spec(format!("fold {i} names unknown group {g}")));
                }
                covered.insert(g.as_str());
            }
            if fold.train.contains(&fold.test) {
                return Err(Error::Spec(format!(
                    "fold {i}: group {} is both training and test",
                    fold.test
                )));
            }
            let train: HashSet<&PathBuf> = fold.train.iter().flat_map(|g| self.images(g)).collect();
            if self.images(&fold.test).iter().any(|p| train.contains(p)) {
                return Err(Error::Spec(format!(
                    "fold {i}: test images overlap the training images"
                )));
            }
        }
        if let Some((name, _)) = self.groups.iter().find(|(n, _)| !covered.contains(n.as_str())) {
            return Err(Error::Spec(format!("group {name} is not used by any fold")));
        }
        Ok(())
    }

    /// Parse a plan; relative image paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut groups = Vec::new();
        let mut folds = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            let mut words = line.split_whitespace();
            match words.next() {
                None => {}
                Some("group") => {
                    let name = words
                        .next()
                        .ok_or_else(|| Error::Spec(format!("line {}: group needs a name", lineno + 1)))?;
                    groups.push((name.to_string(), words.map(|w| base_dir.join(w)).collect()));
                }
                Some("fold") => {
                    let test = words
                        .next()
                        .ok_or_else(|| Error::Spec(format!("line {}: fold needs a test group", lineno + 1)))?;
                    folds.push(Fold {
                        test: test.to_string(),
                        train: words.map(String::from).collect(),
                    });
                }
                Some(other) => {
                    return Err(Error::Spec(format!(
                        "line {}: expected group or fold, found {other:?}",
                        lineno + 1
                    )))
                }
            }
        }
        Self::new(groups, folds)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn folds(&self) -> &[Fold] {
        &self.folds
    }

    pub fn images(&self, group: &str) -> &[PathBuf] {
        self.groups
            .iter()
            .find(|(n, _)| n == group)
            .map(|(_, v)| v.as_slice())
            .unwrap_or(&[])
    }
}

/// Σ score·count / Σ count.
pub fn weighted_mean(scores: &[f64], counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    let sum: f64 = scores.iter().zip(counts).map(|(s, &n)| s * n as f64).sum();
    sum / total as f64
}

#[derive(Debug, Clone)]
pub struct FoldResult {
    pub fold: Fold,
    pub record: RunRecord,
    /// Loss of the run's best table on the test group.
    pub test_loss: f64,
    pub test_count: usize,
}

#[derive(Debug, Clone)]
pub struct FoldSummary {
    pub folds: Vec<FoldResult>,
    pub weighted_loss: f64,
}

/// Optimize on each fold's training groups and score the best table on
/// its test group. Fold `i` uses seed `seed + i`.
pub fn run_folds(plan: &FoldPlan, template: &FitnessSpec, seed: u64, budget: usize) -> Result<FoldSummary> {
    let mut results = Vec::with_capacity(plan.folds().len());
    for (i, fold) in plan.folds().iter().enumerate() {
        let train_spec = FitnessSpec {
            images: fold.train.iter().flat_map(|g| plan.images(g).to_vec()).collect(),
            ..template.clone()
        };
        let test_spec = FitnessSpec {
            images: plan.images(&fold.test).to_vec(),
            ..template.clone()
        };
        let record = run_optimization(&Evaluator::new(&train_spec)?, seed + i as u64, budget)?;
        let test_loss = Evaluator::new(&test_spec)?
            .evaluate_table(&vector_to_table(&record.best)?)?
            .loss;
        log::info!("fold {i} (test {}): test loss {test_loss}", fold.test);
        results.push(FoldResult {
            fold: fold.clone(),
            record,
            test_loss,
            test_count: test_spec.images.len(),
        });
    }
    let scores: Vec<f64> = results.iter().map(|r| r.test_loss).collect();
    let counts: Vec<usize> = results.iter().map(|r| r.test_count).collect();
    Ok(FoldSummary {
        weighted_loss: weighted_mean(&scores, &counts),
        folds: results,
    })
}
