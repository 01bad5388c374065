//! Weight tables for bitrates between optimized anchors.

use super::run::{gain_std, run_optimization_from, RunRecord};
use super::Evaluator;
use crate::error::{Error, Result};
use crate::weights::{vector_to_table, WeightTable, WeightVector};

/// Evaluation budget of the short search run at each target.
pub const SEARCH_EVALS: usize = 150;
/// Step size used when the anchor's gains are all equal.
const FALLBACK_SIGMA: f64 = 0.5;

/// Index of the anchor closest to `target`; ties go to the lower bitrate.
pub fn nearest_anchor(anchor_bpps: &[f64], target: f64) -> Option<usize> {
    (0..anchor_bpps.len()).min_by(|&a, &b| {
        let (da, db) = ((anchor_bpps[a] - target).abs(), (anchor_bpps[b] - target).abs());
        da.total_cmp(&db)
            .then(anchor_bpps[a].total_cmp(&anchor_bpps[b]))
            .then(a.cmp(&b))
    })
}

#[derive(Debug, Clone)]
pub struct Interpolated {
    pub target_bpp: f64,
    pub anchor_bpp: f64,
    pub vector: WeightVector,
    pub table: WeightTable,
    pub loss: f64,
    /// Losses of the anchor's top candidates at the target bitrate.
    pub reevaluated: Vec<f64>,
    /// Best loss of the short search seeded at the anchor's best vector.
    pub search_loss: f64,
}

/// For each target: re-score the nearest anchor's top candidates at the
/// target bitrate, run a short search from the anchor's best vector, and
/// keep whichever candidate scores lowest (earlier candidates win ties).
pub fn interpolate_bitrates(
    anchors: &[RunRecord],
    targets: &[f64],
    ev: &Evaluator,
    seed: u64,
    search_evals: usize,
) -> Result<Vec<Interpolated>> {
    if anchors.is_empty() {
        return Err(Error::Spec("no anchor runs given".into()));
    }
    let bpps: Vec<f64> = anchors.iter().map(|a| a.target_bpp).collect();
    targets
        .iter()
        .map(|&target| {
            let anchor = &anchors[nearest_anchor(&bpps, target).expect("anchors not empty")];
            if anchor.top.is_empty() {
                return Err(Error::Spec(format!(
                    "anchor at {} bpp has no top candidates",
                    anchor.target_bpp
                )));
            }
            let at_target = ev.at_bpp(target)?;
            let mut candidates: Vec<(WeightVector, f64)> = anchor
                .top
                .iter()
                .map(|(v, _)| Ok((v.clone(), at_target.evaluate(v)?.loss)))
                .collect::<Result<_>>()?;
            let reevaluated: Vec<f64> = candidates.iter().map(|c| c.1).collect();

            let sigma = match gain_std(&anchor.best.0) {
                s if s > 0.0 => s,
                _ => FALLBACK_SIGMA,
            };
            let search = run_optimization_from(&at_target, &anchor.best, sigma, seed, search_evals)?;
            candidates.push((search.best.clone(), search.best_loss));

            let (vector, loss) = candidates
                .into_iter()
                .reduce(|best, c| if c.1 < best.1 { c } else { best })
                .expect("at least one candidate");
            log::info!("{target} bpp from anchor {}: loss {loss}", anchor.target_bpp);
            Ok(Interpolated {
                target_bpp: target,
                anchor_bpp: anchor.target_bpp,
                table: vector_to_table(&vector)?,
                vector,
                loss,
                reevaluated,
                search_loss: search.best_loss,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_optimization, Corpus, Metric};
    use crate::synthetic::desktop_corpus;
    use std::sync::Arc;

    #[test]
    fn nearest_with_lower_tie() {
        assert_eq!(nearest_anchor(&[1.0, 3.0], 2.0), Some(0));
        assert_eq!(nearest_anchor(&[3.0, 1.0], 2.0), Some(1));
        assert_eq!(nearest_anchor(&[1.0, 3.0, 5.0], 4.2), Some(2));
        assert_eq!(nearest_anchor(&[1.0, 3.0, 5.0], 0.5), Some(0));
        assert_eq!(nearest_anchor(&[], 1.0), None);
    }

    #[test]
    fn target_at_anchor_never_worse() {
        let corpus = Arc::new(Corpus::from_images(desktop_corpus(2, 64, 64, 11)).unwrap());
        let ev = Evaluator::with_corpus(Metric::Psnr, 2.0, corpus, None).unwrap();
        let anchor = run_optimization(&ev, 1, 43).unwrap();
        let out = interpolate_bitrates(&[anchor.clone()], &[2.0, 1.5], &ev, 2, 29).unwrap();
        assert_eq!(out.len(), 2);
        assert!(out[0].loss <= anchor.best_loss);
        for r in &out {
            let min = r.reevaluated.iter().copied().fold(f64::INFINITY, f64::min);
            assert!(r.loss <= min && r.loss <= r.search_loss);
            assert_eq!(ev.at_bpp(r.target_bpp).unwrap().evaluate_table(&r.table).unwrap().loss, r.loss);
        }
        assert!(interpolate_bitrates(&[], &[2.0], &ev, 2, 29).is_err());
    }
}
