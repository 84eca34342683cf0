//! Registry of the built-in models: exponential (two parametrisations),
//! Poisson and Beta with known second shape.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::boundary::{
    poisson_bound_weighted, poisson_optimal_c_weighted, poisson_perturbed_inputs, FisherAtTheta0, PoissonC,
};
use crate::error::{Error, Result};
use crate::expfam::{exp_canonical_ingredients_with_eps, exp_noncanonical_ingredients_with_eps};
use crate::msebound::{
    beta_constants, beta_distance_bound_weighted, beta_ingredients, beta_mle, implicit_distance_bound_weighted,
    mse_upper_bound_a1, BetaParams,
};
use crate::steincore::{mle_bound_general, BoundBreakdown, BoundIngredients, HWeights};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Exp(θ) with rate θ, canonical parametrisation; MLE 1/X̄.
    ExpCanonical,
    /// Exp(1/θ) with mean θ; MLE X̄.
    ExpNoncanonical,
    /// Poisson(θ) on Θ = [0, ∞); MLE X̄.
    Poisson,
    /// Beta(θ, β) with β known.
    Beta,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::ExpCanonical,
        ModelKind::ExpNoncanonical,
        ModelKind::Poisson,
        ModelKind::Beta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::ExpCanonical => "exp-canonical",
            ModelKind::ExpNoncanonical => "exp-noncanonical",
            ModelKind::Poisson => "poisson",
            ModelKind::Beta => "beta",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<_> = ModelKind::ALL.iter().map(|k| k.name()).collect();
            Error::Validation(format!("unknown model `{s}` (expected one of {})", names.join(", ")))
        })
    }
}

/// Optional overrides for bound evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundOptions {
    /// ε override; the default is θ₀/2.
    pub epsilon: Option<f64>,
    /// Poisson perturbation constant.
    pub c: PoissonC,
}

impl Default for BoundOptions {
    fn default() -> Self {
        BoundOptions {
            epsilon: None,
            c: PoissonC::Auto,
        }
    }
}

/// A model together with its true parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub kind: ModelKind,
    pub theta0: f64,
    /// Known second shape, Beta only.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub beta: Option<f64>,
}

impl Model {
    /// A model without extra parameters; Beta defaults to β = 1.
    pub fn new(kind: ModelKind, theta0: f64) -> Result<Self> {
        let beta = (kind == ModelKind::Beta).then_some(1.0);
        Model::with_beta(kind, theta0, beta)
    }

    pub fn with_beta(kind: ModelKind, theta0: f64, beta: Option<f64>) -> Result<Self> {
        let beta = match (kind, beta) {
            (ModelKind::Beta, None) => Some(1.0),
            (ModelKind::Beta, b) => b,
            (_, Some(_)) => {
                return Err(Error::Validation(format!(
                    "--beta only applies to the beta model, not {kind}"
                )));
            }
            (_, None) => None,
        };
        let m = Model { kind, theta0, beta };
        m.validate()?;
        Ok(m)
    }

    pub fn beta_params(&self) -> Option<BetaParams> {
        self.beta.map(|beta| BetaParams {
            theta0: self.theta0,
            beta,
        })
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.theta0;
        match self.kind {
            ModelKind::Poisson => {
                if !(t >= 0.0 && t.is_finite()) {
                    return Err(Error::Validation(format!("poisson needs theta0 >= 0, got {t}")));
                }
            }
            ModelKind::Beta => {
                let p = self
                    .beta_params()
                    .ok_or_else(|| Error::Validation("beta model needs beta".into()))?;
                p.validate().map_err(|_| {
                    Error::Validation(format!("beta needs theta0 > 0 and beta > 0, got ({t}, {})", p.beta))
                })?;
            }
            _ => {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(Error::Validation(format!("{} needs theta0 > 0, got {t}", self.kind)));
                }
            }
        }
        Ok(())
    }

    /// Whether the MLE has a closed form (Beta only for β = 1).
    pub fn closed_form_mle(&self) -> bool {
        self.kind != ModelKind::Beta || self.beta == Some(1.0)
    }

    /// i(θ₀) per observation.
    pub fn fisher_info(&self) -> Result<FisherAtTheta0> {
        let t = self.theta0;
        Ok(match self.kind {
            ModelKind::ExpCanonical | ModelKind::ExpNoncanonical => FisherAtTheta0::Finite(1.0 / (t * t)),
            ModelKind::Poisson if t == 0.0 => FisherAtTheta0::Degenerate,
            ModelKind::Poisson => FisherAtTheta0::Finite(1.0 / t),
            ModelKind::Beta => {
                let p = self.beta_params().expect("validated");
                FisherAtTheta0::Finite(crate::msebound::beta_d_psi1(&p)?)
            }
        })
    }

    /// Whether the bound targets N(0, 1) for `√(n i)(θ̂ - θ₀)`. The Poisson
    /// bound targets N(0, θ₀) for `√n(θ̂ - θ₀)` instead.
    pub fn has_unit_normal_target(&self) -> bool {
        self.kind != ModelKind::Poisson
    }

    /// The MLE from a sample.
    pub fn mle(&self, sample: &[f64]) -> Result<f64> {
        if sample.is_empty() {
            return Err(Error::domain("mle", "empty sample"));
        }
        match self.kind {
            ModelKind::Beta => beta_mle(sample, self.beta.expect("validated")),
            _ => self.mle_from_sum(sample.iter().sum(), sample.len() as u64),
        }
    }

    /// The MLE of the non-Beta models from Σxᵢ.
    pub(crate) fn mle_from_sum(&self, sum: f64, n: u64) -> Result<f64> {
        let mean = sum / n as f64;
        match self.kind {
            ModelKind::ExpCanonical => {
                if !(mean > 0.0) {
                    return Err(Error::domain(
                        "mle",
                        format!("exp-canonical needs a positive sample mean, got {mean}"),
                    ));
                }
                Ok(1.0 / mean)
            }
            ModelKind::ExpNoncanonical | ModelKind::Poisson => Ok(mean),
            ModelKind::Beta => unreachable!("beta MLE uses Σ log x"),
        }
    }

    /// Ingredients of the general bound for the exponential models.
    pub fn bound_ingredients(&self, n: u64, epsilon: Option<f64>) -> Result<BoundIngredients> {
        let t = self.theta0;
        let eps = epsilon.unwrap_or(t / 2.0);
        match self.kind {
            ModelKind::ExpCanonical => exp_canonical_ingredients_with_eps(t, n, eps),
            ModelKind::ExpNoncanonical => exp_noncanonical_ingredients_with_eps(t, n, eps),
            _ => Err(Error::Validation(format!(
                "{} does not use the general-bound ingredients",
                self.kind
            ))),
        }
    }

    /// The model's distance bound with test-function weights.
    pub fn bound(&self, n: u64, w: HWeights, opts: &BoundOptions) -> Result<BoundBreakdown> {
        self.validate()?;
        if n == 0 {
            return Err(Error::Validation("sample size n must be >= 1".into()));
        }
        match self.kind {
            ModelKind::ExpCanonical | ModelKind::ExpNoncanonical => {
                mle_bound_general(&self.bound_ingredients(n, opts.epsilon)?, w)
            }
            ModelKind::Poisson => {
                if opts.epsilon.is_some() {
                    return Err(Error::Validation(
                        "poisson fixes epsilon at theta0*/2; drop --epsilon".into(),
                    ));
                }
                poisson_bound_weighted(self.theta0, n, opts.c, w)
            }
            ModelKind::Beta => {
                let p = self.beta_params().expect("validated");
                match opts.epsilon {
                    None => beta_distance_bound_weighted(&p, n, w),
                    Some(eps) => {
                        let ing = beta_ingredients(&p, Some(eps))?;
                        let a1 = mse_upper_bound_a1(&ing, n)?;
                        implicit_distance_bound_weighted(&ing, n, a1, w)
                    }
                }
            }
        }
    }

    /// Ingredient values behind [`Model::bound`], for audit.
    pub fn ingredients_json(&self, n: u64, opts: &BoundOptions) -> Result<serde_json::Value> {
        self.validate()?;
        Ok(match self.kind {
            ModelKind::ExpCanonical | ModelKind::ExpNoncanonical => {
                serde_json::to_value(self.bound_ingredients(n, opts.epsilon)?).expect("plain struct")
            }
            ModelKind::Poisson if self.theta0 == 0.0 => json!({ "theta0": 0.0, "n": n, "degenerate": true }),
            ModelKind::Poisson => {
                let c = match opts.c {
                    PoissonC::Auto => poisson_optimal_c_weighted(self.theta0, n, HWeights::UNIT)?,
                    PoissonC::Fixed(c) => c,
                };
                let (spec, stats, fisher, gap, ing) = poisson_perturbed_inputs(self.theta0, n, c)?;
                json!({
                    "c": c,
                    "perturbation": spec,
                    "score_stats": stats,
                    "fisher_at_theta0": fisher,
                    "mle_gap_expectation": gap,
                    "perturbed_ingredients": ing,
                })
            }
            ModelKind::Beta => {
                let p = self.beta_params().expect("validated");
                let ing = beta_ingredients(&p, opts.epsilon)?;
                let min_n = crate::msebound::minimal_n(&ing)?;
                json!({
                    "implicit_ingredients": ing,
                    "minimal_n": min_n,
                    "constants": beta_constants(&p, (n >= min_n).then_some(n))?,
                })
            }
        })
    }
}
