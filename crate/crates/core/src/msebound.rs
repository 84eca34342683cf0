//! MSE bound for maximum likelihood estimators without a closed form, and the
//! Beta(θ₀, β) model with known β.
//!
//! For bounded support the MSE bound solves a quadratic inequality in
//! `√E(θ̂ - θ₀)²`; [`mse_upper_bound_a1`] returns its positive root A₁.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solve::newton_bisect;
use crate::specfun::{digamma, polygamma, trigamma, PolygammaOrder};
use crate::steincore::{labels, BoundBreakdown, HWeights};

/// Quantities the implicit-MLE bound needs from a model with bounded support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImplicitModelIngredients {
    pub fisher_info: f64,
    pub third_abs_score_moment: f64,
    /// Var[l''(θ₀; X₁)].
    pub var_l2: f64,
    /// C₁ with sup_{|θ-θ₀|<=ε} |l'''(θ; x)| <= C₁ for a single observation.
    pub c1_const: f64,
    /// ‖x‖, sup of |x| over the support.
    pub sup_x_norm: f64,
    /// ‖x²‖.
    pub sup_x2_norm: f64,
    pub epsilon: f64,
}

impl ImplicitModelIngredients {
    pub fn validate(&self) -> Result<()> {
        if !(self.fisher_info > 0.0 && self.fisher_info.is_finite()) {
            return Err(Error::Validation(format!(
                "Fisher information must be finite and > 0, got {}",
                self.fisher_info
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Validation(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        for (name, v) in [
            ("third_abs_score_moment", self.third_abs_score_moment),
            ("var_l2", self.var_l2),
            ("c1_const", self.c1_const),
            ("sup_x_norm", self.sup_x_norm),
            ("sup_x2_norm", self.sup_x2_norm),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// D₁ = 1 - 2‖x²‖/(n i ε²) - ‖x‖C₁/(√n i^{3/2}). Positive exactly when n >= minimal n.
pub fn d1(ing: &ImplicitModelIngredients, n: u64) -> f64 {
    let nf = n as f64;
    let i = ing.fisher_info;
    1.0 - 2.0 * ing.sup_x2_norm / (nf * i * ing.epsilon * ing.epsilon)
        - ing.sup_x_norm * ing.c1_const / (nf.sqrt() * i.powf(1.5))
}

/// The real threshold on n above which D₁ > 0: the square of the positive
/// root of D₁ viewed as a quadratic in √n.
pub fn minimal_n_threshold(ing: &ImplicitModelIngredients) -> Result<f64> {
    ing.validate()?;
    let i = ing.fisher_info;
    let eps = ing.epsilon;
    let lin = ing.sup_x_norm * ing.c1_const * eps;
    let root = (lin + (lin * lin + 8.0 * ing.sup_x2_norm * i * i).sqrt()) / (2.0 * i.powf(1.5) * eps);
    Ok(root * root)
}

/// Smallest integer n with D₁ > 0.
pub fn minimal_n(ing: &ImplicitModelIngredients) -> Result<u64> {
    let threshold = minimal_n_threshold(ing)?;
    if !threshold.is_finite() || threshold > 9.0e15 {
        return Err(Error::domain(
            "minimal_n",
            format!("threshold {threshold} is not representable"),
        ));
    }
    let mut n = (threshold.floor() as u64 + 1).max(1);
    // guard against rounding at the threshold in either direction
    while d1(ing, n) <= 0.0 {
        n += 1;
    }
    while n > 1 && d1(ing, n - 1) > 0.0 {
        n -= 1;
    }
    Ok(n)
}

fn require_minimal_n(ing: &ImplicitModelIngredients, n: u64) -> Result<()> {
    let m = minimal_n(ing)?;
    if n < m {
        return Err(Error::BelowMinimalN { n, minimal_n: m });
    }
    Ok(())
}

/// Coefficients of the quadratic `D₁ x² - b x - c <= 0` in x = √E(θ̂ - θ₀)².
pub fn quadratic_coefficients(ing: &ImplicitModelIngredients, n: u64) -> (f64, f64, f64) {
    let nf = n as f64;
    let i = ing.fisher_info;
    let b = 2.0 * ing.sup_x_norm * ing.var_l2.sqrt() / (nf * i.powf(1.5));
    let c = (1.0 + 2.0 * ing.sup_x_norm / nf.sqrt() * (2.0 + ing.third_abs_score_moment / i.powf(1.5))) / (nf * i);
    (d1(ing, n), b, c)
}

/// A₁, an upper bound on the root-MSE √E(θ̂ - θ₀)².
pub fn mse_upper_bound_a1(ing: &ImplicitModelIngredients, n: u64) -> Result<f64> {
    ing.validate()?;
    require_minimal_n(ing, n)?;
    let (d, b, c) = quadratic_coefficients(ing, n);
    Ok((b + (b * b + 4.0 * d * c).sqrt()) / (2.0 * d))
}

/// Distance bound for an implicit MLE given A₁, with test-function weights.
pub fn implicit_distance_bound_weighted(
    ing: &ImplicitModelIngredients,
    n: u64,
    a1: f64,
    w: HWeights,
) -> Result<BoundBreakdown> {
    ing.validate()?;
    if n == 0 {
        return Err(Error::Validation("sample size n must be >= 1".into()));
    }
    if !(a1 >= 0.0) {
        return Err(Error::domain(
            "implicit_distance_bound",
            format!("A1 must be >= 0, got {a1}"),
        ));
    }
    let nf = n as f64;
    let i = ing.fisher_info;
    let a2 = a1 * a1;
    BoundBreakdown::from_terms([
        (
            labels::SCORE,
            w.lip_norm * (2.0 + ing.third_abs_score_moment / i.powf(1.5)) / nf.sqrt(),
        ),
        (labels::MARKOV_TAIL, w.sup_norm * 2.0 * a2 / (ing.epsilon * ing.epsilon)),
        (
            labels::TAYLOR_REMAINDER,
            w.lip_norm * nf.sqrt() * ing.c1_const * a2 / (2.0 * i.sqrt()),
        ),
        (labels::R2, w.lip_norm * ing.var_l2.sqrt() * a1 / i.sqrt()),
    ])
}

/// Distance bound on `d_bW(√(n i)(θ̂ - θ₀), Z)` for an implicit MLE given A₁.
pub fn implicit_distance_bound(ing: &ImplicitModelIngredients, n: u64, a1: f64) -> Result<BoundBreakdown> {
    implicit_distance_bound_weighted(ing, n, a1, HWeights::UNIT)
}

/// Beta(θ₀, β) with β known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub theta0: f64,
    pub beta: f64,
}

impl BetaParams {
    pub fn new(theta0: f64, beta: f64) -> Result<Self> {
        let p = BetaParams { theta0, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta0 > 0.0 && self.theta0.is_finite() && self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::domain(
                "beta",
                format!("shapes must be finite and > 0, got ({}, {})", self.theta0, self.beta),
            ));
        }
        Ok(())
    }
}

/// D_Ψ1 = Ψ₁(θ₀) - Ψ₁(θ₀+β), the Fisher information of one observation.
pub fn beta_d_psi1(p: &BetaParams) -> Result<f64> {
    p.validate()?;
    Ok(trigamma(p.theta0)? - trigamma(p.theta0 + p.beta)?)
}

/// B₁ = 8(Ψ₃(θ₀) + Ψ₃(θ₀+β) + 3Ψ₁(θ₀)² + 3Ψ₁(θ₀+β)²), an upper bound on E[l'(θ₀; X₁)⁴].
pub fn beta_b1(p: &BetaParams) -> Result<f64> {
    p.validate()?;
    let (a, b) = (p.theta0, p.theta0 + p.beta);
    Ok(8.0 * (log_gamma_fourth_central_moment(a)? + log_gamma_fourth_central_moment(b)?))
}

/// B₂ = (96β + 6.6βθ₀⁴)/θ₀⁴, the C₁ constant at ε = θ₀/2.
pub fn beta_b2(p: &BetaParams) -> Result<f64> {
    p.validate()?;
    let t4 = p.theta0.powi(4);
    Ok((96.0 * p.beta + 6.6 * p.beta * t4) / t4)
}

/// C₁(ε) = 6β/(θ₀-ε)⁴ + 6.6β, bounding β|Ψ₃(θ₀-ε)|.
pub fn beta_c1(p: &BetaParams, epsilon: f64) -> Result<f64> {
    p.validate()?;
    if !(epsilon > 0.0 && epsilon < p.theta0) {
        return Err(Error::domain(
            "beta_c1",
            format!("epsilon must lie in (0, theta0), got {epsilon}"),
        ));
    }
    Ok(6.0 * p.beta / (p.theta0 - epsilon).powi(4) + 6.6 * p.beta)
}

/// E[(log Y - E log Y)⁴] = Ψ₃(α) + 3Ψ₁(α)² for Y ~ Gamma(α, λ).
pub fn log_gamma_fourth_central_moment(alpha: f64) -> Result<f64> {
    let t = trigamma(alpha)?;
    Ok(polygamma(PolygammaOrder::PENTAGAMMA, alpha)? + 3.0 * t * t)
}

/// Implicit-MLE ingredients for Beta(θ₀, β). `epsilon = None` selects θ₀/2.
pub fn beta_ingredients(p: &BetaParams, epsilon: Option<f64>) -> Result<ImplicitModelIngredients> {
    p.validate()?;
    let epsilon = epsilon.unwrap_or(p.theta0 / 2.0);
    Ok(ImplicitModelIngredients {
        fisher_info: beta_d_psi1(p)?,
        // Hölder route: E|l'|³ <= (E l'⁴)^{3/4} <= B₁^{3/4}
        third_abs_score_moment: beta_b1(p)?.powf(0.75),
        // l'' does not depend on the data
        var_l2: 0.0,
        c1_const: beta_c1(p, epsilon)?,
        sup_x_norm: 1.0,
        sup_x2_norm: 1.0,
        epsilon,
    })
}

/// Minimal n for Beta(θ₀, β) at ε = θ₀/2.
pub fn beta_minimal_n(p: &BetaParams) -> Result<u64> {
    minimal_n(&beta_ingredients(p, None)?)
}

/// B₃, an upper bound on √(n E(θ̂ - θ₀)²), in its closed form.
pub fn beta_b3(p: &BetaParams, n: u64) -> Result<f64> {
    let ing = beta_ingredients(p, None)?;
    require_minimal_n(&ing, n)?;
    let d = ing.fisher_info;
    let b1 = beta_b1(p)?;
    let b2 = beta_b2(p)?;
    let nf = n as f64;
    let sn = nf.sqrt();
    let th2 = p.theta0 * p.theta0;
    let first = 4.0 + 8.0 / sn * (2.0 + b1.powf(0.75) / d.powf(1.5));
    let second = 1.0 - 8.0 / (nf * th2 * d) - b2 / (sn * d.powf(1.5));
    let denom = 2.0 * (d.sqrt() - 8.0 / (nf * th2 * d.sqrt()) - b2 / (sn * d));
    if !(second > 0.0 && denom > 0.0) {
        let m = minimal_n(&ing)?;
        return Err(Error::BelowMinimalN { n, minimal_n: m });
    }
    Ok((first * second).sqrt() / denom)
}

/// Distance bound for Beta(θ₀, β) with test-function weights.
pub fn beta_distance_bound_weighted(p: &BetaParams, n: u64, w: HWeights) -> Result<BoundBreakdown> {
    let b3 = beta_b3(p, n)?;
    let d = beta_d_psi1(p)?;
    let b1 = beta_b1(p)?;
    let b2 = beta_b2(p)?;
    let nf = n as f64;
    let b3sq = b3 * b3;
    BoundBreakdown::from_terms([
        (
            labels::SCORE,
            w.lip_norm * (2.0 + b1.powf(0.75) / d.powf(1.5)) / nf.sqrt(),
        ),
        (
            labels::MARKOV_TAIL,
            w.sup_norm * 8.0 * b3sq / (nf * p.theta0 * p.theta0),
        ),
        (
            labels::TAYLOR_REMAINDER,
            w.lip_norm * b2 * b3sq / (2.0 * nf.sqrt() * d.sqrt()),
        ),
    ])
}

/// Bound on `d_bW(√(n i)(θ̂ - θ₀), Z)` for Beta(θ₀, β).
pub fn beta_distance_bound(p: &BetaParams, n: u64) -> Result<BoundBreakdown> {
    beta_distance_bound_weighted(p, n, HWeights::UNIT)
}

/// The Beta constants, for audit output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaConstants {
    #[serde(rename = "B1")]
    pub b1: f64,
    #[serde(rename = "B2")]
    pub b2: f64,
    /// Present when a sample size at or above the minimal n was supplied.
    #[serde(rename = "B3")]
    pub b3: Option<f64>,
    #[serde(rename = "D_psi1")]
    pub d_psi1: f64,
    pub minimal_n: u64,
}

pub fn beta_constants(p: &BetaParams, n: Option<u64>) -> Result<BetaConstants> {
    Ok(BetaConstants {
        b1: beta_b1(p)?,
        b2: beta_b2(p)?,
        b3: n.map(|n| beta_b3(p, n)).transpose()?,
        d_psi1: beta_d_psi1(p)?,
        minimal_n: beta_minimal_n(p)?,
    })
}

/// Score of a Beta(θ, β) sample with `sum_log = Σ log xᵢ`:
/// n[Ψ(θ+β) - Ψ(θ)] + Σ log xᵢ.
pub fn beta_score(theta: f64, beta: f64, n: u64, sum_log: f64) -> Result<f64> {
    Ok(n as f64 * (digamma(theta + beta)? - digamma(theta)?) + sum_log)
}

/// Maximum likelihood estimate of θ for a Beta(θ, β) sample with β known.
///
/// β = 1 uses the closed form -n/Σ log xᵢ; otherwise the strictly decreasing
/// score is solved by safeguarded Newton on [1e-8, 1e8].
pub fn beta_mle(sample: &[f64], beta: f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::domain("beta_mle", "empty sample"));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::domain(
            "beta_mle",
            format!("beta must be finite and > 0, got {beta}"),
        ));
    }
    let mut sum_log = 0.0;
    for (k, &x) in sample.iter().enumerate() {
        if !(x > 0.0 && x < 1.0) {
            return Err(Error::domain(
                "beta_mle",
                format!("observation {k} = {x} outside (0, 1)"),
            ));
        }
        sum_log += x.ln();
    }
    let nf = sample.len() as f64;
    if beta == 1.0 {
        return Ok(-nf / sum_log);
    }
    let mean_log = sum_log / nf;
    let g = |theta: f64| -> (f64, f64) {
        let v = match (digamma(theta + beta), digamma(theta)) {
            (Ok(a), Ok(b)) => a - b + mean_log,
            _ => f64::NAN,
        };
        let dv = match (trigamma(theta + beta), trigamma(theta)) {
            (Ok(a), Ok(b)) => a - b,
            _ => f64::NAN,
        };
        (v, dv)
    };
    newton_bisect(g, 1e-8, 1e8, 1e-14, 500).map_err(|e| match e {
        Error::NonConvergence { detail, .. } => Error::NonConvergence { op: "beta_mle", detail },
        other => other,
    })
}
