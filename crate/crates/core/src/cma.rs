//! CMA-ES with the ask/tell interface.
//!
//! Constants follow the defaults of Hansen, "The CMA Evolution Strategy: A
//! Tutorial" (arXiv:1604.00772), without active covariance updates.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// `4 + floor(3 ln n)`.
pub fn default_population(n: usize) -> usize {
    assert!(n >= 1, "dimension must be positive");
    4 + (3.0 * (n as f64).ln()).floor() as usize
}

#[derive(Debug, Clone)]
pub struct CmaConfig {
    pub x0: Vec<f64>,
    pub sigma0: f64,
    pub lambda: usize,
    pub seed: u64,
    /// Total objective evaluations, the initial mean included.
    pub max_evals: usize,
    /// Number of best evaluated points kept across the whole run.
    pub archive_size: usize,
}

impl CmaConfig {
    pub fn new(x0: Vec<f64>, sigma0: f64) -> Self {
        let lambda = default_population(x0.len().max(1));
        Self {
            x0,
            sigma0,
            lambda,
            seed: 0,
            max_evals: 1000,
            archive_size: 10,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_evals(mut self, max_evals: usize) -> Self {
        self.max_evals = max_evals;
        self
    }

    pub fn with_lambda(mut self, lambda: usize) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn dimension(&self) -> usize {
        self.x0.len()
    }

    fn validate(&self) -> Result<()> {
        if self.x0.is_empty() {
            return Err(Error::Optimizer("dimension must be positive".into()));
        }
        if self.x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Optimizer("initial mean must be finite".into()));
        }
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return Err(Error::Optimizer(format!(
                "initial step size must be positive, got {}",
                self.sigma0
            )));
        }
        if self.lambda < 2 {
            return Err(Error::Optimizer(format!(
                "population must be at least 2, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Strategy parameters derived from `n` and `lambda`.
#[derive(Debug, Clone)]
pub struct StrategyParams {
    pub mu: usize,
    pub weights: Vec<f64>,
    pub mu_eff: f64,
    pub c_sigma: f64,
    pub d_sigma: f64,
    pub c_c: f64,
    pub c_1: f64,
    pub c_mu: f64,
    pub chi_n: f64,
    pub eigen_interval: usize,
}

impl StrategyParams {
    pub fn new(n: usize, lambda: usize) -> Self {
        let nf = n as f64;
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu)
            .map(|i| ((lambda as f64 + 1.0) / 2.0).ln() - (i as f64).ln())
            .collect();
        let sum: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / sum).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

        let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
        let c_1 = 2.0 / ((nf + 1.3).powi(2) + mu_eff);
        let c_mu = (1.0 - c_1)
            .min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0).powi(2) + mu_eff));
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
        let eigen_interval = ((1.0 / (10.0 * nf * (c_1 + c_mu))).floor() as usize).max(1);
        Self {
            mu,
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c_1,
            c_mu,
            chi_n,
            eigen_interval,
        }
    }
}

/// Best points seen so far, ascending by fitness; earlier points win ties.
#[derive(Debug, Clone, Default)]
pub struct Archive {
    capacity: usize,
    entries: Vec<(Vec<f64>, f64)>,
}

impl Archive {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            entries: Vec::with_capacity(capacity + 1),
        }
    }

    pub fn offer(&mut self, x: &[f64], f: f64) {
        if self.capacity == 0 {
            return;
        }
        let pos = self.entries.partition_point(|(_, g)| *g <= f);
        if pos >= self.capacity {
            return;
        }
        self.entries.insert(pos, (x.to_vec(), f));
        self.entries.truncate(self.capacity);
    }

    pub fn entries(&self) -> &[(Vec<f64>, f64)] {
        &self.entries
    }
}

#[derive(Debug, Clone)]
pub struct CmaState {
    params: StrategyParams,
    mean: DVector<f64>,
    sigma: f64,
    cov: DMatrix<f64>,
    basis: DMatrix<f64>,
    scales: DVector<f64>,
    inv_sqrt_cov: DMatrix<f64>,
    p_sigma: DVector<f64>,
    p_c: DVector<f64>,
    generation: usize,
    eigen_generation: usize,
    lambda: usize,
    rng: ChaCha8Rng,
    best: Option<(Vec<f64>, f64)>,
    archive: Archive,
}

impl CmaState {
    pub fn new(config: &CmaConfig) -> Result<Self> {
        config.validate()?;
        let n = config.dimension();
        Ok(Self {
            params: StrategyParams::new(n, config.lambda),
            mean: DVector::from_column_slice(&config.x0),
            sigma: config.sigma0,
            cov: DMatrix::identity(n, n),
            basis: DMatrix::identity(n, n),
            scales: DVector::from_element(n, 1.0),
            inv_sqrt_cov: DMatrix::identity(n, n),
            p_sigma: DVector::zeros(n),
            p_c: DVector::zeros(n),
            generation: 0,
            eigen_generation: 0,
            lambda: config.lambda,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            best: None,
            archive: Archive::new(config.archive_size),
        })
    }

    pub fn dimension(&self) -> usize {
        self.mean.len()
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn params(&self) -> &StrategyParams {
        &self.params
    }

    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn best(&self) -> Option<(&[f64], f64)> {
        self.best.as_ref().map(|(x, f)| (x.as_slice(), *f))
    }

    pub fn archive(&self) -> &Archive {
        &self.archive
    }

    /// Record an evaluation made outside `tell`, such as the initial mean.
    pub fn observe(&mut self, x: &[f64], f: f64) {
        if !f.is_finite() {
            return;
        }
        if self.best.as_ref().is_none_or(|(_, b)| f < *b) {
            self.best = Some((x.to_vec(), f));
        }
        self.archive.offer(x, f);
    }

    fn check_finite(&self) -> Result<()> {
        let ok = self.sigma.is_finite()
            && self.mean.iter().all(|v| v.is_finite())
            && self.cov.iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Optimizer("diverged".into()))
        }
    }

    /// Sample one generation: `m + sigma * B * D * z`.
    pub fn ask(&mut self) -> Result<Vec<Vec<f64>>> {
        self.check_finite()?;
        let n = self.dimension();
        let bd = &self.basis * DMatrix::from_diagonal(&self.scales);
        let mut out = Vec::with_capacity(self.lambda);
        for _ in 0..self.lambda {
            let z = DVector::from_iterator(
                n,
                (0..n).map(|_| StandardNormal.sample(&mut self.rng)),
            );
            let x = &self.mean + (&bd * z) * self.sigma;
            out.push(x.as_slice().to_vec());
        }
        Ok(out)
    }

    /// Update the distribution from index-aligned fitnesses. Ties rank by
    /// candidate index; non-finite values are replaced by the worst finite
    /// value plus ten percent.
    pub fn tell(&mut self, candidates: &[Vec<f64>], fitness: &[f64]) -> Result<()> {
        if candidates.len() != self.lambda || fitness.len() != self.lambda {
            return Err(Error::Optimizer(format!(
                "expected {} candidates and fitnesses, got {} and {}",
                self.lambda,
                candidates.len(),
                fitness.len()
            )));
        }
        let n = self.dimension();
        if candidates.iter().any(|c| c.len() != n) {
            return Err(Error::Optimizer("candidate dimension mismatch".into()));
        }
        let fitness = sanitize_fitness(fitness)?;
        for (x, &f) in candidates.iter().zip(&fitness) {
            self.observe(x, f);
        }

        let mut order: Vec<usize> = (0..self.lambda).collect();
        order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]).then(a.cmp(&b)));

        let p = &self.params;
        let old_mean = self.mean.clone();
        let steps: Vec<DVector<f64>> = order[..p.mu]
            .iter()
            .map(|&k| (DVector::from_column_slice(&candidates[k]) - &old_mean) / self.sigma)
            .collect();
        let mut y_w = DVector::zeros(n);
        for (w, y) in p.weights.iter().zip(&steps) {
            y_w.axpy(*w, y, 1.0);
        }
        self.mean = &old_mean + &y_w * self.sigma;

        let cs = p.c_sigma;
        self.p_sigma = &self.p_sigma * (1.0 - cs)
            + (&self.inv_sqrt_cov * &y_w) * (cs * (2.0 - cs) * p.mu_eff).sqrt();
        let g = (self.generation + 1) as f64;
        let ps_norm = self.p_sigma.norm();
        let h_sigma = ps_norm / (1.0 - (1.0 - cs).powf(2.0 * g)).sqrt() / p.chi_n
            < 1.4 + 2.0 / (n as f64 + 1.0);
        let cc = p.c_c;
        self.p_c = &self.p_c * (1.0 - cc);
        if h_sigma {
            self.p_c += &y_w * (cc * (2.0 - cc) * p.mu_eff).sqrt();
        }

        let delta_h = if h_sigma { 0.0 } else { cc * (2.0 - cc) };
        let mut rank_mu = DMatrix::zeros(n, n);
        for (w, y) in p.weights.iter().zip(&steps) {
            rank_mu.ger(*w, y, y, 1.0);
        }
        let rank_one = &self.p_c * self.p_c.transpose();
        self.cov = &self.cov * (1.0 - p.c_1 - p.c_mu + p.c_1 * delta_h)
            + rank_one * p.c_1
            + rank_mu * p.c_mu;

        self.sigma *= ((cs / p.d_sigma) * (ps_norm / p.chi_n - 1.0)).exp();
        self.generation += 1;
        self.check_finite()?;

        if self.generation - self.eigen_generation >= p.eigen_interval {
            self.refresh_eigen();
        }
        Ok(())
    }

    fn refresh_eigen(&mut self) {
        self.eigen_generation = self.generation;
        let sym = (&self.cov + self.cov.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let max = eig.eigenvalues.max().max(f64::MIN_POSITIVE);
        let floor = max * 1e-20;
        let values = eig.eigenvalues.map(|v| v.max(floor));
        let basis = eig.eigenvectors;
        self.cov = &basis * DMatrix::from_diagonal(&values) * basis.transpose();
        self.scales = values.map(f64::sqrt);
        self.inv_sqrt_cov =
            &basis * DMatrix::from_diagonal(&self.scales.map(|d| 1.0 / d)) * basis.transpose();
        self.basis = basis;
    }
}

fn sanitize_fitness(fitness: &[f64]) -> Result<Vec<f64>> {
    let worst = fitness
        .iter()
        .copied()
        .filter(|f| f.is_finite())
        .fold(None, |acc: Option<f64>, f| Some(acc.map_or(f, |a| a.max(f))));
    let Some(worst) = worst else {
        return Err(Error::Optimizer("every fitness value is non-finite".into()));
    };
    let penalty = worst + 0.1 * worst.abs().max(f64::MIN_POSITIVE);
    Ok(fitness
        .iter()
        .map(|&f| if f.is_finite() { f } else { penalty })
        .collect())
}

/// One row of the optimization history. Generation 0 is the initial mean.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub generation: usize,
    pub evals: usize,
    pub best_f: f64,
    pub median_f: f64,
    pub sigma: f64,
    pub best_x: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CmaOutcome {
    pub best_x: Vec<f64>,
    pub best_f: f64,
    pub history: Vec<GenerationRecord>,
    /// Best evaluated points of the whole run, ascending by fitness.
    pub top: Vec<(Vec<f64>, f64)>,
    pub evals: usize,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Minimize `objective`. The initial mean is evaluated first; generations
/// run while a full population still fits in `max_evals`. With `parallel`
/// set, candidates of a generation are evaluated on the rayon pool; results
/// are consumed by index, so the run is identical either way.
pub fn optimize<F>(config: &CmaConfig, objective: F, parallel: bool) -> Result<CmaOutcome>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let mut state = CmaState::new(config)?;
    let f0 = objective(&config.x0);
    if !f0.is_finite() {
        return Err(Error::Optimizer(format!(
            "objective is not finite at the initial mean: {f0}"
        )));
    }
    state.observe(&config.x0, f0);
    let mut evals = 1;
    let mut history = vec![GenerationRecord {
        generation: 0,
        evals,
        best_f: f0,
        median_f: f0,
        sigma: state.sigma(),
        best_x: config.x0.clone(),
    }];

    while evals + state.lambda() <= config.max_evals {
        let candidates = state.ask()?;
        let fitness: Vec<f64> = if parallel {
            candidates.par_iter().map(|x| objective(x)).collect()
        } else {
            candidates.iter().map(|x| objective(x)).collect()
        };
        evals += candidates.len();
        state.tell(&candidates, &fitness)?;
        let (bx, bf) = state.best().expect("best is set after observing x0");
        history.push(GenerationRecord {
            generation: state.generation(),
            evals,
            best_f: bf,
            median_f: median(&sanitize_fitness(&fitness)?),
            sigma: state.sigma(),
            best_x: bx.to_vec(),
        });
        log::debug!(
            "generation {} evals {} best {:e} sigma {:e}",
            state.generation(),
            evals,
            bf,
            state.sigma()
        );
    }

    let (bx, bf) = state.best().expect("best is set after observing x0");
    Ok(CmaOutcome {
        best_x: bx.to_vec(),
        best_f: bf,
        history,
        top: state.archive().entries().to_vec(),
        evals,
    })
}

pub const HISTORY_HEADER: &str = "generation,evals,best_f,median_f,sigma";

/// History as CSV with shortest round-trip float formatting.
pub fn history_csv(history: &[GenerationRecord]) -> String {
    let mut out = String::from(HISTORY_HEADER);
    out.push('\n');
    for r in history {
        out.push_str(&format!(
            "{},{},{:?},{:?},{:?}\n",
            r.generation, r.evals, r.best_f, r.median_f, r.sigma
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    fn rosenbrock(x: &[f64]) -> f64 {
        x.windows(2)
            .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
            .sum()
    }

    fn ellipsoid(x: &[f64]) -> f64 {
        let n = x.len();
        x.iter()
            .enumerate()
            .map(|(i, v)| 10f64.powf(6.0 * i as f64 / (n - 1) as f64) * v * v)
            .sum()
    }

    fn evals_to_reach(config: &CmaConfig, f: impl Fn(&[f64]) -> f64 + Sync, target: f64) -> usize {
        let out = optimize(config, f, false).unwrap();
        out.history
            .iter()
            .find(|r| r.best_f < target)
            .map(|r| r.evals)
            .unwrap_or(usize::MAX)
    }

    #[test]
    fn population_rule() {
        assert_eq!(default_population(30), 14);
        assert_eq!(default_population(10), 10);
        assert_eq!(default_population(1), 4);
        assert_eq!(default_population(2), 6);
    }

    #[test]
    fn weights_are_normalized_and_decreasing() {
        for lambda in [4, 10, 14, 100] {
            let p = StrategyParams::new(30, lambda);
            assert_eq!(p.mu, lambda / 2);
            assert!((p.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.weights.windows(2).all(|w| w[0] > w[1]));
            assert!(p.c_1 + p.c_mu <= 1.0);
        }
    }

    #[test]
    fn rejects_bad_config() {
        assert!(CmaState::new(&CmaConfig::new(vec![], 1.0)).is_err());
        assert!(CmaState::new(&CmaConfig::new(vec![0.0], 0.0)).is_err());
        assert!(CmaState::new(&CmaConfig::new(vec![0.0], 1.0).with_lambda(1)).is_err());
        let mut s = CmaState::new(&CmaConfig::new(vec![0.0; 3], 1.0)).unwrap();
        let c = s.ask().unwrap();
        assert!(s.tell(&c[..2], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn sphere_converges() {
        let config = CmaConfig::new(vec![1.0; 10], 0.5).with_seed(1).with_max_evals(5000);
        let out = optimize(&config, sphere, false).unwrap();
        assert!(out.best_f < 1e-10, "best {}", out.best_f);
        assert!(out.evals <= 5000);
        assert!(out.history.windows(2).all(|w| w[1].best_f <= w[0].best_f));
    }

    #[test]
    fn rosenbrock_converges() {
        let config = CmaConfig::new(vec![0.0; 5], 0.3).with_seed(2).with_max_evals(30_000);
        let out = optimize(&config, rosenbrock, false).unwrap();
        assert!(out.best_f < 1e-8, "best {}", out.best_f);
    }

    #[test]
    fn rotation_costs_at_most_twice() {
        let n = 8;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let g: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
        let q: DMatrix<f64> = g.qr().q();
        let rotated = move |x: &[f64]| ellipsoid((&q * DVector::<f64>::from_column_slice(x)).as_slice());
        let config = CmaConfig::new(vec![1.0; n], 1.0).with_seed(5).with_max_evals(40_000);
        let plain = evals_to_reach(&config, ellipsoid, 1e-10);
        let rot = evals_to_reach(&config, rotated, 1e-10);
        assert!(plain < 40_000 && rot < 40_000, "{plain} {rot}");
        assert!(rot <= 2 * plain && plain <= 2 * rot, "{plain} vs {rot}");
    }

    #[test]
    fn deterministic_and_parallel_safe() {
        let config = CmaConfig::new(vec![0.5; 6], 0.3).with_seed(11).with_max_evals(800);
        let a = optimize(&config, rosenbrock, false).unwrap();
        let b = optimize(&config, rosenbrock, false).unwrap();
        let c = optimize(&config, rosenbrock, true).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.history, c.history);
        assert_eq!(history_csv(&a.history), history_csv(&c.history));
        assert_eq!(a.top, c.top);
    }

    #[test]
    fn offset_objective_gives_same_search() {
        let config = CmaConfig::new(vec![2.0; 5], 0.7).with_seed(3).with_max_evals(600);
        let a = optimize(&config, sphere, false).unwrap();
        let b = optimize(&config, |x: &[f64]| sphere(x) + 1000.0, false).unwrap();
        assert_eq!(a.best_x, b.best_x);
        for (ra, rb) in a.history.iter().zip(&b.history) {
            assert_eq!(ra.sigma, rb.sigma);
            assert_eq!(ra.best_x, rb.best_x);
        }
    }

    #[test]
    fn zero_budget_evaluates_initial_mean() {
        let config = CmaConfig::new(vec![3.0, 4.0], 1.0).with_max_evals(0);
        let out = optimize(&config, sphere, false).unwrap();
        assert_eq!(out.best_f, 25.0);
        assert_eq!(out.evals, 1);
        assert_eq!(out.history.len(), 1);
    }

    #[test]
    fn tiny_sigma_collapses_samples() {
        let mut s = CmaState::new(&CmaConfig::new(vec![1.0, -2.0, 0.5], 1e-300)).unwrap();
        for c in s.ask().unwrap() {
            assert_eq!(c, vec![1.0, -2.0, 0.5]);
        }
    }

    #[test]
    fn sample_mean_matches_distribution_mean() {
        let m = vec![1.0, -3.0, 0.25];
        let sigma = 2.0;
        let mut s =
            CmaState::new(&CmaConfig::new(m.clone(), sigma).with_lambda(100_000).with_seed(4))
                .unwrap();
        let c = s.ask().unwrap();
        for (i, &mi) in m.iter().enumerate() {
            let mean = c.iter().map(|x| x[i]).sum::<f64>() / c.len() as f64;
            assert!((mean - mi).abs() < 4.0 * sigma / (1e5f64).sqrt(), "{i}: {mean}");
        }
    }

    #[test]
    fn same_seed_same_samples() {
        let config = CmaConfig::new(vec![0.0; 4], 1.0).with_seed(8);
        let mut a = CmaState::new(&config).unwrap();
        let mut b = CmaState::new(&config).unwrap();
        assert_eq!(a.ask().unwrap(), b.ask().unwrap());
    }

    #[test]
    fn equal_fitness_and_non_finite_values() {
        let mut s = CmaState::new(&CmaConfig::new(vec![0.0; 4], 1.0)).unwrap();
        for _ in 0..20 {
            let c = s.ask().unwrap();
            let f = vec![1.0; c.len()];
            s.tell(&c, &f).unwrap();
        }
        assert!(s.sigma().is_finite() && s.sigma() > 0.0);

        let mut s = CmaState::new(&CmaConfig::new(vec![0.0; 4], 1.0)).unwrap();
        let c = s.ask().unwrap();
        let mut f: Vec<f64> = (0..c.len()).map(|i| i as f64).collect();
        f[0] = f64::NAN;
        f[1] = f64::INFINITY;
        s.tell(&c, &f).unwrap();
        assert_eq!(s.best().unwrap().1, 2.0);
        assert_eq!(s.best().unwrap().0, c[2].as_slice());
        let worst = (c.len() - 1) as f64;
        assert_eq!(sanitize_fitness(&f).unwrap()[0], worst + 0.1 * worst);
        assert!(sanitize_fitness(&[f64::NAN, f64::NAN]).is_err());
    }

    #[test]
    fn covariance_stays_symmetric_positive_definite() {
        let config = CmaConfig::new(vec![1.0; 5], 1.0).with_seed(6);
        let mut s = CmaState::new(&config).unwrap();
        for _ in 0..200 {
            let c = s.ask().unwrap();
            let f: Vec<f64> = c.iter().map(|x| ellipsoid(x)).collect();
            s.tell(&c, &f).unwrap();
            let cov = s.covariance();
            assert!((cov - cov.transpose()).abs().max() <= 1e-12 * cov.abs().max());
        }
        let eig = SymmetricEigen::new(s.covariance().clone());
        assert!(eig.eigenvalues.min() > 0.0);
    }

    #[test]
    fn archive_keeps_best_in_order() {
        let mut a = Archive::new(3);
        for (i, f) in [5.0, 1.0, 3.0, 1.0, 0.5, 9.0].into_iter().enumerate() {
            a.offer(&[i as f64], f);
        }
        let got: Vec<(f64, f64)> = a.entries().iter().map(|(x, f)| (x[0], *f)).collect();
        assert_eq!(got, vec![(4.0, 0.5), (1.0, 1.0), (3.0, 1.0)]);
    }

    #[test]
    fn history_csv_format() {
        let h = vec![GenerationRecord {
            generation: 0,
            evals: 1,
            best_f: 0.5,
            median_f: 0.5,
            sigma: 1.25,
            best_x: vec![],
        }];
        assert_eq!(history_csv(&h), "generation,evals,best_f,median_f,sigma\n0,1,0.5,0.5,1.25\n");
    }
}
