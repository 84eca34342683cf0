//! Perturbation of boundary parameters and data for discrete models, and the
//! Poisson bound built on it.
//!
//! The target here is `K ~ N(0, 1/i(θ₀))` for `√n(θ̂ - θ₀)`, which stays
//! meaningful when θ₀ sits on the boundary of Θ and `i(θ₀)` is infinite.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solve::golden_section_min;
use crate::steincore::{BoundBreakdown, BoundIngredients, HWeights};

/// Stable labels of the terms produced by [`general_perturbed_bound`] and [`poisson_bound`].
pub mod labels {
    pub const PARAM_SHIFT: &str = "param_shift";
    pub const MLE_GAP: &str = "mle_gap";
    pub const SCORE_MISMATCH: &str = "score_mismatch";
    pub const PERTURBED_SCORE: &str = "perturbed_score";
    pub const MARKOV_TAIL: &str = "markov_tail";
    pub const PERTURBED_TAYLOR: &str = "perturbed_taylor";

    pub const ALL: [&str; 6] = [
        PARAM_SHIFT,
        MLE_GAP,
        SCORE_MISMATCH,
        PERTURBED_SCORE,
        MARKOV_TAIL,
        PERTURBED_TAYLOR,
    ];
}

/// The affine map that pushes `[a, b]` into its interior by `c/n` at each end.
///
/// Either endpoint may be infinite; a half-line is shifted by `c/n` towards
/// its interior and the whole line is left unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub n: u64,
}

impl PerturbationSpec {
    pub fn new(a: f64, b: f64, c: f64, n: u64) -> Result<Self> {
        let spec = PerturbationSpec { a, b, c, n };
        spec.validate()?;
        Ok(spec)
    }

    /// The half-line `[a, ∞)`.
    pub fn half_line(a: f64, c: f64, n: u64) -> Result<Self> {
        PerturbationSpec::new(a, f64::INFINITY, c, n)
    }

    pub fn validate(&self) -> Result<()> {
        let PerturbationSpec { a, b, c, n } = *self;
        if a.is_nan() || b.is_nan() || a == f64::INFINITY || b == f64::NEG_INFINITY || a >= b {
            return Err(Error::domain("perturbation", format!("need a < b, got [{a}, {b}]")));
        }
        if n == 0 {
            return Err(Error::Validation("sample size n must be >= 1".into()));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::domain(
                "perturbation",
                format!("c must be finite and > 0, got {c}"),
            ));
        }
        if a.is_finite() && b.is_finite() && c >= n as f64 * (b - a) / 2.0 {
            return Err(Error::domain(
                "perturbation",
                format!("c = {c} must be below n(b-a)/2 = {}", n as f64 * (b - a) / 2.0),
            ));
        }
        Ok(())
    }

    /// The shift size c/n.
    pub fn shift(&self) -> f64 {
        self.c / self.n as f64
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.a && x <= self.b
    }

    /// q(x) - x, defined on the whole interval.
    fn displacement(&self, x: f64) -> f64 {
        let eps = self.shift();
        match (self.a.is_finite(), self.b.is_finite()) {
            (true, true) => eps - 2.0 * eps * (x - self.a) / (self.b - self.a),
            (true, false) => eps,
            (false, true) => -eps,
            (false, false) => 0.0,
        }
    }
}

/// q(x) for x in the interval.
pub fn perturb(spec: &PerturbationSpec, x: f64) -> Result<f64> {
    spec.validate()?;
    if !spec.contains(x) {
        return Err(Error::domain(
            "perturb",
            format!("x = {x} outside [{}, {}]", spec.a, spec.b),
        ));
    }
    Ok(x + spec.displacement(x))
}

/// θ₀* = q(θ₀) for the parameter interval Θ.
pub fn perturbed_theta(theta0: f64, spec: &PerturbationSpec) -> Result<f64> {
    perturb(spec, theta0).map_err(|e| match e {
        Error::Domain { detail, .. } => Error::domain("perturbed_theta", detail),
        other => other,
    })
}

/// Fisher information at θ₀, with the convention 1/i(θ₀) = 0 when it is
/// infinite or undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum FisherAtTheta0 {
    Finite(f64),
    Degenerate,
}

impl FisherAtTheta0 {
    /// Whether 1/i(θ₀) > 0.
    pub fn is_finite(&self) -> bool {
        matches!(self, FisherAtTheta0::Finite(_))
    }
}

/// Mean, variance and third absolute central moment of
/// `Yᵢ = l'(θ₀*; q(Xᵢ)) / (√n i(θ₀*))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbedScoreStats {
    pub w1: f64,
    pub w2: f64,
    pub third_abs_central: f64,
}

/// Bound on `d_bW(√n(θ̂ - θ₀), K)` through perturbation of parameter and data.
///
/// `perturbed` carries the ingredients evaluated at θ₀* with the perturbed data:
/// `fisher_info = i(θ₀*)`, `mse = E(θ̂* - θ₀*)²`, the fourth moment, the
/// conditional third-derivative bound and the conditional R₂ bound.
#[allow(clippy::too_many_arguments)]
pub fn general_perturbed_bound(
    theta0: f64,
    n: u64,
    spec_param: &PerturbationSpec,
    stats: &PerturbedScoreStats,
    fisher_at_theta0: FisherAtTheta0,
    mle_gap_expectation: f64,
    perturbed: &BoundIngredients,
    weights: HWeights,
) -> Result<BoundBreakdown> {
    spec_param.validate()?;
    perturbed.validate()?;
    if spec_param.n != n || perturbed.n != n {
        return Err(Error::Validation(format!(
            "sample sizes disagree: n = {n}, perturbation n = {}, ingredient n = {}",
            spec_param.n, perturbed.n
        )));
    }
    let theta_star = perturbed_theta(theta0, spec_param)?;
    let (lo, hi) = (theta_star - perturbed.epsilon, theta_star + perturbed.epsilon);
    if lo < spec_param.a || hi > spec_param.b {
        return Err(Error::domain(
            "general_perturbed_bound",
            format!(
                "(θ₀*-ε, θ₀*+ε) = ({lo}, {hi}) not inside [{}, {}]",
                spec_param.a, spec_param.b
            ),
        ));
    }
    if !(mle_gap_expectation >= 0.0) {
        return Err(Error::domain(
            "general_perturbed_bound",
            format!("E|θ̂ - θ̂*| must be >= 0, got {mle_gap_expectation}"),
        ));
    }

    let nf = n as f64;
    let sqrt_n = nf.sqrt();
    let lip = weights.lip_norm;
    let param_shift = lip * sqrt_n * spec_param.displacement(theta0).abs();
    let mle_gap = lip * sqrt_n * mle_gap_expectation;

    let (score_mismatch, perturbed_score) = match fisher_at_theta0 {
        FisherAtTheta0::Degenerate => (0.0, 0.0),
        FisherAtTheta0::Finite(i0) => {
            if !(i0 > 0.0 && i0.is_finite()) {
                return Err(Error::domain(
                    "general_perturbed_bound",
                    format!("finite Fisher information must be > 0, got {i0}"),
                ));
            }
            let PerturbedScoreStats {
                w1,
                w2,
                third_abs_central,
            } = *stats;
            if !(w2 > 0.0) {
                return Err(Error::domain(
                    "general_perturbed_bound",
                    format!("w2 = {w2} must be > 0 when 1/i(θ₀) > 0"),
                ));
            }
            let mismatch = (1.0 - 1.0 / (w2 * nf * i0).sqrt()).abs() * (nf * w2 + (nf * w1).powi(2)).sqrt()
                + sqrt_n * w1.abs() / (w2 * i0).sqrt();
            let score = (2.0 + third_abs_central / w2.powf(1.5)) / sqrt_n;
            (lip * mismatch, lip * score)
        }
    };

    let markov = 2.0 * weights.sup_norm * perturbed.mse / perturbed.epsilon.powi(2);
    let moment = if perturbed.sup_third_is_deterministic {
        perturbed.mse
    } else {
        perturbed.fourth_mle_moment.sqrt()
    };
    let taylor = lip / (sqrt_n * perturbed.fisher_info)
        * (perturbed.r2_conditional_bound + 0.5 * perturbed.sup_third_deriv * moment);

    BoundBreakdown::from_terms([
        (labels::PARAM_SHIFT, param_shift),
        (labels::MLE_GAP, mle_gap),
        (labels::SCORE_MISMATCH, score_mismatch),
        (labels::PERTURBED_SCORE, perturbed_score),
        (labels::MARKOV_TAIL, markov),
        (labels::PERTURBED_TAYLOR, taylor),
    ])
}

/// Choice of the perturbation constant for the Poisson bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoissonC {
    /// Minimise the bound over c > 0.
    Auto,
    Fixed(f64),
}

fn check_poisson(theta0: f64, n: u64) -> Result<f64> {
    if !(theta0 >= 0.0 && theta0.is_finite()) {
        return Err(Error::domain(
            "poisson_bound",
            format!("theta0 must be finite and >= 0, got {theta0}"),
        ));
    }
    if n == 0 {
        return Err(Error::Validation("sample size n must be >= 1".into()));
    }
    Ok(n as f64)
}

fn poisson_terms(theta0: f64, n: u64, c: f64, w: HWeights) -> [(&'static str, f64); 6] {
    let nf = n as f64;
    let sqrt_n = nf.sqrt();
    let theta_star = theta0 + c / nf;
    let lip = w.lip_norm;
    [
        (labels::PARAM_SHIFT, lip * c / sqrt_n),
        (labels::MLE_GAP, lip * c / sqrt_n),
        (labels::SCORE_MISMATCH, 0.0),
        (
            labels::PERTURBED_SCORE,
            lip * (2.0 + (3.0 * theta0 + 1.0).powf(0.75) / theta0.powf(0.75)) / sqrt_n,
        ),
        (
            labels::MARKOV_TAIL,
            w.sup_norm * 8.0 * theta0 / (nf * theta_star * theta_star),
        ),
        (
            labels::PERTURBED_TAYLOR,
            lip * (theta0 / (sqrt_n * theta_star)
                + 12.0 / (sqrt_n * theta_star) * (theta0 / nf + 3.0 * theta0 * theta0).sqrt()),
        ),
    ]
}

fn poisson_total(theta0: f64, n: u64, c: f64, w: HWeights) -> f64 {
    poisson_terms(theta0, n, c, w).iter().map(|(_, v)| v).sum()
}

/// The c > 0 minimising the Poisson bound: a log-grid scan followed by
/// golden-section refinement around the best grid point.
///
/// The grid spans [1e-6, max(nθ₀, c_cap)], where at c_cap the two shift terms
/// alone exceed the bound at c = 1e-6, so no larger c can be optimal.
pub fn poisson_optimal_c(theta0: f64, n: u64) -> Result<f64> {
    poisson_optimal_c_weighted(theta0, n, HWeights::UNIT)
}

pub fn poisson_optimal_c_weighted(theta0: f64, n: u64, w: HWeights) -> Result<f64> {
    let nf = check_poisson(theta0, n)?;
    if theta0 == 0.0 {
        return Err(Error::domain("poisson_optimal_c", "c is not defined at theta0 = 0"));
    }
    const GRID: usize = 200;
    let lo = 1e-6_f64;
    let f = |c: f64| poisson_total(theta0, n, c, w);
    let c_cap = if w.lip_norm > 0.0 {
        f(lo) * nf.sqrt() / (2.0 * w.lip_norm)
    } else {
        0.0
    };
    let hi = (nf * theta0).max(c_cap).max(2.0 * lo);
    let step = (hi / lo).ln() / (GRID - 1) as f64;
    let grid: Vec<f64> = (0..GRID).map(|k| lo * (step * k as f64).exp()).collect();
    let (best, best_val) = grid
        .iter()
        .enumerate()
        .map(|(k, &c)| (k, f(c)))
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("grid is non-empty");
    let left = if best == 0 { 0.0 } else { grid[best - 1] };
    let right = grid[(best + 1).min(GRID - 1)];
    let (c, val) = golden_section_min(f, left, right, 1e-10);
    if c > 0.0 && val <= best_val {
        Ok(c)
    } else {
        Ok(grid[best])
    }
}

/// Poisson bound with test-function weights.
pub fn poisson_bound_weighted(theta0: f64, n: u64, c: PoissonC, w: HWeights) -> Result<BoundBreakdown> {
    check_poisson(theta0, n)?;
    if theta0 == 0.0 {
        // the MLE is identically 0 and K is point mass at 0
        return Ok(BoundBreakdown::zero(labels::ALL));
    }
    let c = match c {
        PoissonC::Auto => poisson_optimal_c_weighted(theta0, n, w)?,
        PoissonC::Fixed(c) => {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::domain(
                    "poisson_bound",
                    format!("c must be finite and > 0, got {c}"),
                ));
            }
            c
        }
    };
    BoundBreakdown::from_terms(poisson_terms(theta0, n, c, w))
}

/// Bound on `d_bW(√n(θ̂ - θ₀), K)`, K ~ N(0, θ₀), for Poisson(θ₀) with Θ = [0, ∞).
/// The parameter-shift and MLE-gap terms each equal c/√n.
pub fn poisson_bound(theta0: f64, n: u64, c: PoissonC) -> Result<BoundBreakdown> {
    poisson_bound_weighted(theta0, n, c, HWeights::UNIT)
}

/// Stein bound for `√n(X̄ - θ₀)` against N(0, θ₀) treating the MLE as a sum.
pub fn poisson_direct_bound(theta0: f64, n: u64) -> Result<f64> {
    let nf = check_poisson(theta0, n)?;
    if theta0 == 0.0 {
        return Err(Error::domain("poisson_direct_bound", "theta0 must be > 0"));
    }
    Ok((2.0 + (3.0 * theta0 + 1.0).powf(0.75) / theta0.powf(0.75)) / nf.sqrt())
}

/// Inputs of [`general_perturbed_bound`] for Poisson(θ₀) on Θ = [0, ∞) with
/// c₁ = c₂ = c and ε = θ₀*/2.
pub fn poisson_perturbed_inputs(
    theta0: f64,
    n: u64,
    c: f64,
) -> Result<(
    PerturbationSpec,
    PerturbedScoreStats,
    FisherAtTheta0,
    f64,
    BoundIngredients,
)> {
    let nf = check_poisson(theta0, n)?;
    let spec = PerturbationSpec::half_line(0.0, c, n)?;
    let theta_star = perturbed_theta(theta0, &spec)?;
    if theta0 == 0.0 {
        return Err(Error::domain("poisson_perturbed_inputs", "theta0 must be > 0"));
    }
    let stats = PerturbedScoreStats {
        w1: 0.0,
        w2: theta0 / nf,
        // Hölder: E|X - θ₀|³ <= (θ₀ + 3θ₀²)^{3/4}
        third_abs_central: (theta0 * (1.0 + 3.0 * theta0)).powf(0.75) / nf.powf(1.5),
    };
    let ing = BoundIngredients {
        theta0: theta_star,
        n,
        fisher_info: 1.0 / theta_star,
        third_abs_score_moment: 0.0,
        mse: theta0 / nf,
        fourth_mle_moment: theta0 / nf.powi(3) + 3.0 * theta0 * theta0 / (nf * nf),
        // on |X̄* - θ₀*| <= θ₀*/2: sup 2nX̄*/θ³ <= 2n(3θ₀*/2)/(θ₀*/2)³
        sup_third_deriv: 24.0 * nf / (theta_star * theta_star),
        r2_conditional_bound: theta0 / (theta_star * theta_star),
        epsilon: theta_star / 2.0,
        sup_third_is_deterministic: false,
    };
    Ok((spec, stats, FisherAtTheta0::Finite(1.0 / theta0), c / nf, ing))
}
