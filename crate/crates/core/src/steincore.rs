//! Generic distance bounds assembled from model-supplied ingredients.
//!
//! All bounds here are upper bounds on `|E h(G) - E h(Z)|` for a test function
//! `h` with sup-norm `‖h‖` and derivative sup-norm `‖h'‖`. With both weights
//! equal to one the bound covers the whole bounded-Wasserstein class
//! `{h : ‖h‖_Lip + ‖h‖ <= 1}` and hence bounds `d_bW`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::std_normal_quantile;

/// Stable labels of the terms produced by [`mle_bound_general`].
pub mod labels {
    pub const SCORE: &str = "score";
    pub const MARKOV_TAIL: &str = "markov_tail";
    pub const R2: &str = "r2";
    pub const TAYLOR_REMAINDER: &str = "taylor_remainder";
}

/// The norms of a test function that enter the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HWeights {
    /// ‖h‖, the sup-norm.
    pub sup_norm: f64,
    /// ‖h'‖, the sup-norm of the derivative (Lipschitz constant).
    pub lip_norm: f64,
}

impl HWeights {
    /// Weights covering the whole bounded-Wasserstein class.
    pub const UNIT: HWeights = HWeights {
        sup_norm: 1.0,
        lip_norm: 1.0,
    };

    pub fn new(sup_norm: f64, lip_norm: f64) -> Result<Self> {
        if !(sup_norm.is_finite() && sup_norm >= 0.0 && lip_norm.is_finite() && lip_norm >= 0.0) {
            return Err(Error::Validation(format!(
                "test-function norms must be finite and >= 0, got ({sup_norm}, {lip_norm})"
            )));
        }
        Ok(HWeights { sup_norm, lip_norm })
    }

    /// Norms of h(x) = 1/(x² + 2): ‖h‖ = 1/2, ‖h'‖ = 3√1.5/16.
    pub fn reciprocal_quadratic() -> Self {
        HWeights {
            sup_norm: 0.5,
            lip_norm: 3.0 * 1.5f64.sqrt() / 16.0,
        }
    }
}

impl Default for HWeights {
    fn default() -> Self {
        HWeights::UNIT
    }
}

/// A bounded test function together with its norms.
#[derive(Clone)]
pub struct TestFunction {
    evaluator: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    sup_norm: f64,
    lip_norm: f64,
    label: String,
}

impl TestFunction {
    pub fn new(
        label: impl Into<String>,
        evaluator: impl Fn(f64) -> f64 + Send + Sync + 'static,
        sup_norm: f64,
        lip_norm: f64,
    ) -> Result<Self> {
        HWeights::new(sup_norm, lip_norm)?;
        Ok(TestFunction {
            evaluator: Arc::new(evaluator),
            sup_norm,
            lip_norm,
            label: label.into(),
        })
    }

    /// h(x) = 1/(x² + 2), the function used for the simulation tables.
    pub fn reciprocal_quadratic() -> Self {
        let w = HWeights::reciprocal_quadratic();
        TestFunction {
            evaluator: Arc::new(|x: f64| 1.0 / (x * x + 2.0)),
            sup_norm: w.sup_norm,
            lip_norm: w.lip_norm,
            label: "1/(x^2+2)".to_string(),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.evaluator)(x)
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn lip_norm(&self) -> f64 {
        self.lip_norm
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn weights(&self) -> HWeights {
        HWeights {
            sup_norm: self.sup_norm,
            lip_norm: self.lip_norm,
        }
    }

    /// Whether `‖h‖ + ‖h'‖ <= 1`.
    pub fn in_bounded_wasserstein_class(&self) -> bool {
        self.sup_norm + self.lip_norm <= 1.0
    }
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("label", &self.label)
            .field("sup_norm", &self.sup_norm)
            .field("lip_norm", &self.lip_norm)
            .finish()
    }
}

/// Per-model quantities consumed by [`mle_bound_general`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundIngredients {
    pub theta0: f64,
    pub n: u64,
    /// Expected Fisher information of a single observation, i(θ₀).
    pub fisher_info: f64,
    /// E|∂/∂θ log f(X₁|θ₀)|³, or an upper bound for it.
    pub third_abs_score_moment: f64,
    /// E(θ̂ - θ₀)².
    pub mse: f64,
    /// E(θ̂ - θ₀)⁴. Unused when `sup_third_is_deterministic` is set.
    pub fourth_mle_moment: f64,
    /// Bound on sup_{|θ-θ₀|<=ε} |l'''(θ; X)| for the full sample, already scaled by n.
    pub sup_third_deriv: f64,
    /// Bound on E(|R₂| given |θ̂ - θ₀| <= ε).
    pub r2_conditional_bound: f64,
    pub epsilon: f64,
    /// The third-derivative bound does not depend on the data, so the
    /// remainder term is `sup · MSE` instead of the Cauchy-Schwarz product.
    pub sup_third_is_deterministic: bool,
}

impl BoundIngredients {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Validation("sample size n must be >= 1".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Validation(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if !(self.fisher_info > 0.0) {
            return Err(Error::Validation(format!(
                "Fisher information must be > 0, got {}",
                self.fisher_info
            )));
        }
        for (name, v) in [
            ("third_abs_score_moment", self.third_abs_score_moment),
            ("mse", self.mse),
            ("fourth_mle_moment", self.fourth_mle_moment),
            ("sup_third_deriv", self.sup_third_deriv),
            ("r2_conditional_bound", self.r2_conditional_bound),
        ] {
            if v < 0.0 {
                return Err(Error::Validation(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// One labelled additive term of a bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundTerm {
    pub label: String,
    pub value: f64,
}

/// A bound decomposed into labelled, non-negative terms plus their sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundBreakdown {
    pub terms: Vec<BoundTerm>,
    pub total: f64,
}

impl BoundBreakdown {
    /// Build from `(label, value)` pairs. Every value must be finite and >= 0;
    /// the total is their left-to-right sum.
    pub fn from_terms<'a>(terms: impl IntoIterator<Item = (&'a str, f64)>) -> Result<Self> {
        let mut out = Vec::new();
        let mut total = 0.0;
        for (label, value) in terms {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::NonFinite {
                    label: label.to_string(),
                    value,
                });
            }
            total += value;
            out.push(BoundTerm {
                label: label.to_string(),
                value,
            });
        }
        Ok(BoundBreakdown { terms: out, total })
    }

    pub fn zero<'a>(labels: impl IntoIterator<Item = &'a str>) -> Self {
        BoundBreakdown::from_terms(labels.into_iter().map(|l| (l, 0.0))).expect("zeros are valid")
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.label == label).map(|t| t.value)
    }
}

fn check_n(n: u64) -> Result<f64> {
    if n == 0 {
        Err(Error::Validation("sample size n must be >= 1".into()))
    } else {
        Ok(n as f64)
    }
}

/// Stein bound for a standardised sum: `(1/√n)(2 + E|Y₁|³/σ³)` for
/// `W = n^{-1/2} Σ Yᵢ` against N(0, σ²).
pub fn direct_sum_bound(sigma: f64, third_abs_moment: f64, n: u64) -> Result<f64> {
    let nf = check_n(n)?;
    if !(sigma > 0.0) || !(third_abs_moment >= 0.0) {
        return Err(Error::domain(
            "direct_sum_bound",
            format!("need sigma > 0 and moment >= 0, got ({sigma}, {third_abs_moment})"),
        ));
    }
    Ok((2.0 + third_abs_moment / sigma.powi(3)) / nf.sqrt())
}

/// Hölder bound E|Y|³ <= (E Y⁴)^{3/4}.
pub fn holder_third_from_fourth(fourth_moment: f64) -> Result<f64> {
    if !(fourth_moment >= 0.0) {
        return Err(Error::domain(
            "holder_third_from_fourth",
            format!("fourth moment must be >= 0, got {fourth_moment}"),
        ));
    }
    Ok(fourth_moment.powf(0.75))
}

fn score_term(ing: &BoundIngredients, w: HWeights) -> f64 {
    let n = ing.n as f64;
    w.lip_norm * (2.0 + ing.third_abs_score_moment / ing.fisher_info.powf(1.5)) / n.sqrt()
}

/// Bound on the distance between the standardised score `l'(θ₀)/√(n i(θ₀))`
/// and N(0,1).
pub fn score_bound(ing: &BoundIngredients, w: HWeights) -> Result<BoundBreakdown> {
    ing.validate()?;
    BoundBreakdown::from_terms([(labels::SCORE, score_term(ing, w))])
}

/// Bound on `|E h(√(n i(θ₀))(θ̂ - θ₀)) - E h(Z)|` for a general MLE.
///
/// Terms, in order: the score term; `2‖h‖ MSE/ε²`; the R₂ term
/// `‖h'‖ E|R₂|/√(n i)`; and the Taylor-remainder term
/// `‖h'‖/(2√(n i)) · sup|l'''| · √E(θ̂-θ₀)⁴` (or `· MSE` when the
/// third-derivative bound is deterministic).
pub fn mle_bound_general(ing: &BoundIngredients, w: HWeights) -> Result<BoundBreakdown> {
    ing.validate()?;
    let n = ing.n as f64;
    let scale = w.lip_norm / (n * ing.fisher_info).sqrt();
    let markov = 2.0 * w.sup_norm * ing.mse / (ing.epsilon * ing.epsilon);
    let r2 = scale * ing.r2_conditional_bound;
    let moment = if ing.sup_third_is_deterministic {
        ing.mse
    } else {
        ing.fourth_mle_moment.sqrt()
    };
    let taylor = scale * 0.5 * ing.sup_third_deriv * moment;
    BoundBreakdown::from_terms([
        (labels::SCORE, score_term(ing, w)),
        (labels::MARKOV_TAIL, markov),
        (labels::R2, r2),
        (labels::TAYLOR_REMAINDER, taylor),
    ])
}

/// Kolmogorov bound `2√d_bW` from a bounded-Wasserstein bound.
pub fn kolmogorov_from_bw(bw_bound: f64) -> Result<f64> {
    if !(bw_bound >= 0.0) {
        return Err(Error::domain(
            "kolmogorov_from_bw",
            format!("bound must be >= 0, got {bw_bound}"),
        ));
    }
    Ok(2.0 * bw_bound.sqrt())
}

/// A confidence interval that may be the whole real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConfidenceInterval {
    Bounded {
        lower: f64,
        upper: f64,
    },
    /// The widened quantile levels left (0, 1).
    WholeLine,
}

impl ConfidenceInterval {
    pub fn contains(&self, x: f64) -> bool {
        match *self {
            ConfidenceInterval::Bounded { lower, upper } => lower < x && x < upper,
            ConfidenceInterval::WholeLine => true,
        }
    }

    pub fn width(&self) -> f64 {
        match *self {
            ConfidenceInterval::Bounded { lower, upper } => upper - lower,
            ConfidenceInterval::WholeLine => f64::INFINITY,
        }
    }

    pub fn is_whole_line(&self) -> bool {
        matches!(self, ConfidenceInterval::WholeLine)
    }
}

/// Conservative 100(1-α)% interval for θ₀ from a Kolmogorov bound `b_k`:
/// `(θ̂ - Φ⁻¹(1-α/2+B_K)/√(n i), θ̂ - Φ⁻¹(α/2-B_K)/√(n i))`.
pub fn conservative_ci(theta_hat: f64, n: u64, fisher_info: f64, alpha: f64, b_k: f64) -> Result<ConfidenceInterval> {
    let nf = check_n(n)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(
            "conservative_ci",
            format!("alpha must lie in (0,1), got {alpha}"),
        ));
    }
    if !(b_k >= 0.0) {
        return Err(Error::domain("conservative_ci", format!("B_K must be >= 0, got {b_k}")));
    }
    if !(fisher_info > 0.0) {
        return Err(Error::domain(
            "conservative_ci",
            format!("Fisher information must be > 0, got {fisher_info}"),
        ));
    }
    let lower_level = alpha / 2.0 - b_k;
    let upper_level = 1.0 - alpha / 2.0 + b_k;
    if lower_level <= 0.0 || upper_level >= 1.0 {
        return Ok(ConfidenceInterval::WholeLine);
    }
    let scale = (nf * fisher_info).sqrt();
    Ok(ConfidenceInterval::Bounded {
        lower: theta_hat - std_normal_quantile(upper_level)? / scale,
        upper: theta_hat - std_normal_quantile(lower_level)? / scale,
    })
}
