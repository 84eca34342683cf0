//! Seeded Monte Carlo evaluation of the MLE against its normal approximation.
//!
//! Every trial draws from its own ChaCha8 stream (`seed`, stream = trial
//! index), so results do not depend on how trials are scheduled across
//! threads. Per-trial estimates are collected in trial order and reduced
//! sequentially with compensated summation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{FisherAtTheta0, PoissonC};
use crate::error::{Error, Result};
use crate::models::{BoundOptions, Model, ModelKind};
use crate::msebound::{beta_b3, beta_minimal_n, BetaParams};
use crate::specfun::{normal_expectation, normal_expectation_fn};
use crate::steincore::{conservative_ci, kolmogorov_from_bw, BoundBreakdown, HWeights, TestFunction};

/// Identifier of the random-number scheme recorded in every report.
pub const RNG_ALGORITHM: &str = "chacha8/seed_from_u64/stream=trial";

/// Above this mean the Poisson sampler switches from sequential inversion
/// to `rand_distr`'s rejection sampler.
const POISSON_INVERSION_LIMIT: f64 = 30.0;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// The RNG for one trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

enum Sampler {
    ExpRate(f64),
    ExpMean(f64),
    PoissonZero,
    PoissonInversion { theta: f64, p0: f64 },
    PoissonRejection(Poisson<f64>),
    Beta(Gamma<f64>, Gamma<f64>),
}

impl Sampler {
    fn new(model: &Model) -> Result<Self> {
        model.validate()?;
        let t = model.theta0;
        Ok(match model.kind {
            ModelKind::ExpCanonical => Sampler::ExpRate(t),
            ModelKind::ExpNoncanonical => Sampler::ExpMean(t),
            ModelKind::Poisson if t == 0.0 => Sampler::PoissonZero,
            ModelKind::Poisson if t <= POISSON_INVERSION_LIMIT => Sampler::PoissonInversion {
                theta: t,
                p0: (-t).exp(),
            },
            ModelKind::Poisson => Sampler::PoissonRejection(
                Poisson::new(t).map_err(|e| Error::domain("sample", format!("poisson({t}): {e}")))?,
            ),
            ModelKind::Beta => {
                let beta = model.beta.expect("validated");
                let g = |shape: f64| {
                    Gamma::new(shape, 1.0).map_err(|e| Error::domain("sample", format!("gamma({shape}): {e}")))
                };
                Sampler::Beta(g(t)?, g(beta)?)
            }
        })
    }

    #[inline]
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::ExpRate(rate) => -(1.0 - rng.random::<f64>()).ln() / rate,
            Sampler::ExpMean(mean) => -(1.0 - rng.random::<f64>()).ln() * mean,
            Sampler::PoissonZero => 0.0,
            Sampler::PoissonInversion { theta, p0 } => {
                let u: f64 = rng.random();
                let mut k = 0u32;
                let mut p = *p0;
                let mut cdf = p;
                // the cdf can stall just below 1 in floating point; p then underflows
                while u > cdf && p > 0.0 {
                    k += 1;
                    p *= theta / k as f64;
                    cdf += p;
                }
                k as f64
            }
            Sampler::PoissonRejection(d) => d.sample(rng),
            Sampler::Beta(g1, g2) => {
                let a = g1.sample(rng);
                let b = g2.sample(rng);
                a / (a + b)
            }
        }
    }
}

/// n independent draws from the model at θ₀.
pub fn sample<R: Rng + ?Sized>(model: &Model, n: u64, rng: &mut R) -> Result<Vec<f64>> {
    let s = Sampler::new(model)?;
    Ok((0..n).map(|_| s.draw(rng)).collect())
}

/// The MLE of a sample under the model.
pub fn mle(model: &Model, sample: &[f64]) -> Result<f64> {
    model.mle(sample)
}

/// Draw one sample of size n and return its MLE without storing the sample.
/// Agrees exactly with `mle(model, &sample(model, n, rng)?)`.
fn streamed_mle(model: &Model, sampler: &Sampler, n: u64, rng: &mut ChaCha8Rng, trial: u64) -> Result<f64> {
    let wrap = |e: Error| match e {
        Error::Domain { detail, .. } => Error::DegenerateSample { trial, detail },
        other => other,
    };
    match model.kind {
        ModelKind::Beta => {
            let beta = model.beta.expect("validated");
            if beta == 1.0 {
                let mut sum_log = 0.0;
                for _ in 0..n {
                    let x = sampler.draw(rng);
                    if !(x > 0.0 && x < 1.0) {
                        return Err(Error::DegenerateSample {
                            trial,
                            detail: format!("beta draw {x} outside (0, 1)"),
                        });
                    }
                    sum_log += x.ln();
                }
                Ok(-(n as f64) / sum_log)
            } else {
                let xs: Vec<f64> = (0..n).map(|_| sampler.draw(rng)).collect();
                model.mle(&xs).map_err(wrap)
            }
        }
        _ => {
            let mut sum = 0.0;
            for _ in 0..n {
                sum += sampler.draw(rng);
            }
            model.mle_from_sum(sum, n).map_err(wrap)
        }
    }
}

/// MLE of trial `trial` under the given master seed.
pub fn trial_mle(model: &Model, n: u64, seed: u64, trial: u64) -> Result<f64> {
    let sampler = Sampler::new(model)?;
    let mut rng = trial_rng(seed, trial);
    streamed_mle(model, &sampler, n, &mut rng, trial)
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::Validation("thread count must be >= 1".into())),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::Validation(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// MLEs of trials `0..trials`, in trial order.
fn simulate_mles(model: &Model, n: u64, trials: u64, seed: u64, threads: Option<usize>) -> Result<Vec<f64>> {
    let sampler = Sampler::new(model)?;
    let results: Vec<Result<f64>> = with_threads(threads, || {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(seed, t);
                streamed_mle(model, &sampler, n, &mut rng, t)
            })
            .collect()
    })?;
    results.into_iter().collect()
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub model: Model,
    pub n: u64,
    pub trials: u64,
    pub seed: u64,
    pub test_function: TestFunction,
    /// Worker threads; `None` uses the global rayon pool. Results do not depend on it.
    pub threads: Option<usize>,
    pub bound_options: BoundOptions,
}

impl SimulationConfig {
    pub const DEFAULT_TRIALS: u64 = 10_000;

    pub fn new(model: Model, n: u64, seed: u64) -> Self {
        SimulationConfig {
            model,
            n,
            trials: Self::DEFAULT_TRIALS,
            seed,
            test_function: TestFunction::reciprocal_quadratic(),
            threads: None,
            bound_options: BoundOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.n == 0 {
            return Err(Error::Validation("sample size n must be >= 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::Validation("trials must be >= 1".into()));
        }
        Ok(())
    }
}

/// What the empirical column of a report measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantityKind {
    /// |Ê h(standardised MLE) - E h(target)| for the configured h.
    HSpecificDiscrepancy,
    /// Ê(θ̂ - θ₀)² against an MSE bound.
    Mse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub model: String,
    pub theta0: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub beta: Option<f64>,
    pub n: u64,
    pub trials: u64,
    pub seed: u64,
    pub rng: String,
    pub quantity: QuantityKind,
    pub test_function: String,
    pub h_sup_norm: f64,
    pub h_lip_norm: f64,
    /// E h(target) by quadrature.
    pub reference_expectation: f64,
    pub mean_h: f64,
    pub empirical_distance: f64,
    /// Standard error of `mean_h`; unavailable for a single trial.
    pub standard_error: Option<f64>,
    pub empirical_mse: f64,
    pub standardized_mean: f64,
    pub standardized_variance: Option<f64>,
    /// None when the model's bound does not exist at this n.
    pub bound_total: Option<f64>,
    pub bound_terms: Option<BoundBreakdown>,
    /// bound_total minus the empirical quantity.
    pub error: Option<f64>,
}

impl SimulationReport {
    /// The empirical value compared against the bound.
    pub fn empirical(&self) -> f64 {
        match self.quantity {
            QuantityKind::HSpecificDiscrepancy => self.empirical_distance,
            QuantityKind::Mse => self.empirical_mse,
        }
    }
}

/// Scale s with s(θ̂ - θ₀) compared to the target, and E h(target).
fn standardization(model: &Model, n: u64, h: &TestFunction) -> Result<(f64, f64)> {
    let nf = n as f64;
    if model.has_unit_normal_target() {
        let i = match model.fisher_info()? {
            FisherAtTheta0::Finite(i) => i,
            FisherAtTheta0::Degenerate => unreachable!("only poisson is degenerate"),
        };
        Ok(((nf * i).sqrt(), normal_expectation(h)?))
    } else if model.theta0 == 0.0 {
        Ok((nf.sqrt(), h.eval(0.0)))
    } else {
        let sd = model.theta0.sqrt();
        let hh = h.clone();
        Ok((nf.sqrt(), normal_expectation_fn(move |z| hh.eval(sd * z))?))
    }
}

fn optional_bound(result: Result<BoundBreakdown>) -> Result<Option<BoundBreakdown>> {
    match result {
        Ok(b) => Ok(Some(b)),
        Err(Error::BelowMinimalN { .. }) | Err(Error::Validation(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

struct TrialSummary {
    mean_h: f64,
    standard_error: Option<f64>,
    mse: f64,
    z_mean: f64,
    z_var: Option<f64>,
}

fn summarize(mles: &[f64], theta0: f64, scale: f64, h: &TestFunction) -> TrialSummary {
    let [mut sh, mut sh2, mut se, mut sz, mut sz2] = [CompensatedSum::default(); 5];
    for &m in mles {
        let d = m - theta0;
        let z = scale * d;
        let hz = h.eval(z);
        sh.add(hz);
        sh2.add(hz * hz);
        se.add(d * d);
        sz.add(z);
        sz2.add(z * z);
    }
    let t = mles.len() as f64;
    let mean_h = sh.value() / t;
    let z_mean = sz.value() / t;
    let sample_var = |s2: f64, mean: f64| ((s2 - t * mean * mean) / (t - 1.0)).max(0.0);
    let (standard_error, z_var) = if mles.len() > 1 {
        (
            Some((sample_var(sh2.value(), mean_h) / t).sqrt()),
            Some(sample_var(sz2.value(), z_mean)),
        )
    } else {
        (None, None)
    };
    TrialSummary {
        mean_h,
        standard_error,
        mse: se.value() / t,
        z_mean,
        z_var,
    }
}

/// Simulate `trials` samples, standardise each MLE, and compare the mean of
/// h with its value under the target normal law.
pub fn run_simulation(cfg: &SimulationConfig) -> Result<SimulationReport> {
    cfg.validate()?;
    let model = &cfg.model;
    let h = &cfg.test_function;
    let (scale, reference) = standardization(model, cfg.n, h)?;
    let mles = simulate_mles(model, cfg.n, cfg.trials, cfg.seed, cfg.threads)?;
    let s = summarize(&mles, model.theta0, scale, h);
    let empirical_distance = (s.mean_h - reference).abs();
    let bound = optional_bound(model.bound(cfg.n, h.weights(), &cfg.bound_options))?;
    let bound_total = bound.as_ref().map(|b| b.total);
    Ok(SimulationReport {
        model: model.name().to_string(),
        theta0: model.theta0,
        beta: model.beta,
        n: cfg.n,
        trials: cfg.trials,
        seed: cfg.seed,
        rng: RNG_ALGORITHM.to_string(),
        quantity: QuantityKind::HSpecificDiscrepancy,
        test_function: h.label().to_string(),
        h_sup_norm: h.sup_norm(),
        h_lip_norm: h.lip_norm(),
        reference_expectation: reference,
        mean_h: s.mean_h,
        empirical_distance,
        standard_error: s.standard_error,
        empirical_mse: s.mse,
        standardized_mean: s.z_mean,
        standardized_variance: s.z_var,
        bound_total,
        bound_terms: bound,
        error: bound_total.map(|b| b - empirical_distance),
    })
}

/// Empirical MSE of the Beta MLE against (B₃)²/n for each n.
pub fn run_mse_sweep(
    p: &BetaParams,
    ns: impl IntoIterator<Item = u64>,
    trials: u64,
    seed: u64,
    threads: Option<usize>,
) -> Result<Vec<SimulationReport>> {
    p.validate()?;
    let ns: Vec<u64> = ns.into_iter().collect();
    let min_n = beta_minimal_n(p)?;
    if let Some(&n) = ns.iter().find(|&&n| n < min_n) {
        return Err(Error::BelowMinimalN { n, minimal_n: min_n });
    }
    let model = Model::with_beta(ModelKind::Beta, p.theta0, Some(p.beta))?;
    let mut reports = Vec::with_capacity(ns.len());
    for n in ns {
        let mut cfg = SimulationConfig::new(model, n, seed);
        cfg.trials = trials;
        cfg.threads = threads;
        let mut r = run_simulation(&cfg)?;
        let b3 = beta_b3(p, n)?;
        let bound = b3 * b3 / n as f64;
        r.quantity = QuantityKind::Mse;
        r.bound_total = Some(bound);
        r.bound_terms = Some(BoundBreakdown::from_terms([("mse_bound", bound)])?);
        r.error = Some(bound - r.empirical_mse);
        reports.push(r);
    }
    Ok(reports)
}

/// Monte Carlo estimates of E[f(M) | M <= ε] and E[f(M)].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub lhs_standard_error: f64,
    pub rhs_standard_error: f64,
    /// Trials with M <= ε.
    pub hits: u64,
    pub trials: u64,
}

impl ConditionalCheck {
    /// lhs <= rhs up to `k` combined standard errors.
    pub fn holds_within(&self, k: f64) -> bool {
        let se = (self.lhs_standard_error.powi(2) + self.rhs_standard_error.powi(2)).sqrt();
        self.lhs <= self.rhs + k * se
    }
}

/// Estimate both sides of E[f(M) | M <= ε] <= E[f(M)] for a nonnegative M
/// drawn by `sampler` and an increasing, nonnegative f.
pub fn conditional_expectation_check<S, F>(
    sampler: S,
    f: F,
    eps: f64,
    trials: u64,
    seed: u64,
) -> Result<ConditionalCheck>
where
    S: Fn(&mut ChaCha8Rng, u64) -> Result<f64> + Sync,
    F: Fn(f64) -> f64 + Sync,
{
    if !(eps > 0.0) {
        return Err(Error::Validation(format!("eps must be > 0, got {eps}")));
    }
    if trials < 2 {
        return Err(Error::Validation("trials must be >= 2".into()));
    }
    let draws: Vec<Result<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            sampler(&mut rng, t)
        })
        .collect();
    let [mut all, mut all2, mut cond, mut cond2] = [CompensatedSum::default(); 4];
    let mut hits = 0u64;
    for d in draws {
        let m = d?;
        let v = f(m);
        all.add(v);
        all2.add(v * v);
        if m <= eps {
            hits += 1;
            cond.add(v);
            cond2.add(v * v);
        }
    }
    if hits == 0 {
        return Err(Error::EmptyConditioning { eps, trials });
    }
    let se = |s: CompensatedSum, s2: CompensatedSum, k: u64| -> (f64, f64) {
        let kf = k as f64;
        let mean = s.value() / kf;
        let var = if k > 1 {
            ((s2.value() - kf * mean * mean) / (kf - 1.0)).max(0.0)
        } else {
            0.0
        };
        (mean, (var / kf).sqrt())
    };
    let (lhs, lhs_se) = se(cond, cond2, hits);
    let (rhs, rhs_se) = se(all, all2, trials);
    Ok(ConditionalCheck {
        lhs,
        rhs,
        lhs_standard_error: lhs_se,
        rhs_standard_error: rhs_se,
        hits,
        trials,
    })
}

/// Sampler of M = |θ̂ - θ₀| for use with [`conditional_expectation_check`].
pub fn mle_deviation_sampler(model: Model, n: u64) -> Result<impl Fn(&mut ChaCha8Rng, u64) -> Result<f64> + Sync> {
    let sampler = Sampler::new(&model)?;
    Ok(
        move |rng: &mut ChaCha8Rng, trial: u64| {
            Ok((streamed_mle(&model, &sampler, n, rng, trial)? - model.theta0).abs())
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub model: ModelKind,
    pub theta0: f64,
    pub n: u64,
    pub alpha: f64,
    pub trials: u64,
    pub seed: u64,
    /// d_bW bound with unit weights.
    pub bw_bound: f64,
    /// Kolmogorov bound 2√d_bW.
    pub b_k: f64,
    /// The interval is the whole line in every trial.
    pub whole_line: bool,
    pub coverage: f64,
    pub standard_error: f64,
}

/// Fraction of trials whose conservative interval contains θ₀.
pub fn ci_coverage(
    model: &Model,
    n: u64,
    alpha: f64,
    trials: u64,
    seed: u64,
    threads: Option<usize>,
) -> Result<CoverageReport> {
    model.validate()?;
    if !model.has_unit_normal_target() {
        return Err(Error::Validation(format!(
            "{} bounds target N(0, θ₀), not N(0, 1); the Kolmogorov interval does not apply",
            model.kind
        )));
    }
    if trials == 0 {
        return Err(Error::Validation("trials must be >= 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Validation(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let opts = BoundOptions {
        epsilon: None,
        c: PoissonC::Auto,
    };
    let bw = model.bound(n, HWeights::UNIT, &opts)?.total;
    let b_k = kolmogorov_from_bw(bw)?;
    let i = match model.fisher_info()? {
        FisherAtTheta0::Finite(i) => i,
        FisherAtTheta0::Degenerate => unreachable!("unit-normal targets have finite information"),
    };
    let whole_line = conservative_ci(model.theta0, n, i, alpha, b_k)?.is_whole_line();
    let covered = if whole_line {
        trials
    } else {
        let mles = simulate_mles(model, n, trials, seed, threads)?;
        let mut k = 0u64;
        for m in mles {
            if conservative_ci(m, n, i, alpha, b_k)?.contains(model.theta0) {
                k += 1;
            }
        }
        k
    };
    let coverage = covered as f64 / trials as f64;
    Ok(CoverageReport {
        model: model.kind,
        theta0: model.theta0,
        n,
        alpha,
        trials,
        seed,
        bw_bound: bw,
        b_k,
        whole_line,
        coverage,
        standard_error: (coverage * (1.0 - coverage) / trials as f64).sqrt(),
    })
}
