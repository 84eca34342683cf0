//! One-parameter exponential families `exp{k(θ)T(x) - A(θ) + S(x)}` and the two
//! closed-form exponential-distribution models.

use crate::error::{Error, Result};
use crate::steincore::BoundIngredients;

/// Upper bound on E|1 - X|³ for X ~ Exp(1); scales as 1/θ₀³ for Exp(θ₀).
/// The exact value is 12/e - 2 = 2.414553...
pub const EXP_THIRD_ABS_CENTRAL: f64 = 2.41456;

/// A one-parameter exponential family given by its component functions.
#[derive(Debug, Clone, Copy)]
pub struct ExpFamilySpec {
    pub k: fn(f64) -> f64,
    pub k_prime: fn(f64) -> f64,
    pub a: fn(f64) -> f64,
    pub a_prime: fn(f64) -> f64,
    /// Natural observation T(x).
    pub t: fn(f64) -> f64,
    pub s: fn(f64) -> f64,
    /// Support B, as a closed interval (endpoints may be infinite).
    pub support: (f64, f64),
    /// Open parameter interval (a, b).
    pub theta_space: (f64, f64),
}

impl ExpFamilySpec {
    /// Exp(θ) with rate θ: k(θ) = θ, T(x) = -x, A(θ) = -log θ.
    pub fn exponential_canonical() -> Self {
        ExpFamilySpec {
            k: |th| th,
            k_prime: |_| 1.0,
            a: |th| -th.ln(),
            a_prime: |th| -1.0 / th,
            t: |x| -x,
            s: |_| 0.0,
            support: (0.0, f64::INFINITY),
            theta_space: (0.0, f64::INFINITY),
        }
    }

    /// Exp(1/θ) with mean θ: k(θ) = 1/θ, T(x) = -x, A(θ) = log θ.
    pub fn exponential_noncanonical() -> Self {
        ExpFamilySpec {
            k: |th| 1.0 / th,
            k_prime: |th| -1.0 / (th * th),
            a: |th| th.ln(),
            a_prime: |th| 1.0 / th,
            t: |x| -x,
            s: |_| 0.0,
            support: (0.0, f64::INFINITY),
            theta_space: (0.0, f64::INFINITY),
        }
    }

    pub fn contains_theta(&self, theta: f64) -> bool {
        theta > self.theta_space.0 && theta < self.theta_space.1
    }

    /// D(θ) = A'(θ)/k'(θ), the mean of T(X).
    pub fn mean_t(&self, theta: f64) -> Result<f64> {
        let kp = self.checked_k_prime(theta)?;
        Ok((self.a_prime)(theta) / kp)
    }

    /// Log-density `k(θ)T(x) - A(θ) + S(x)`.
    pub fn log_density(&self, theta: f64, x: f64) -> f64 {
        (self.k)(theta) * (self.t)(x) - (self.a)(theta) + (self.s)(x)
    }

    fn checked_k_prime(&self, theta: f64) -> Result<f64> {
        if !self.contains_theta(theta) {
            return Err(Error::domain(
                "expfam",
                format!("theta0 = {theta} outside the parameter space {:?}", self.theta_space),
            ));
        }
        let kp = (self.k_prime)(theta);
        if kp == 0.0 || !kp.is_finite() {
            return Err(Error::domain("expfam", format!("k'(θ) = {kp} at θ = {theta}")));
        }
        Ok(kp)
    }
}

/// i(θ₀) = k'(θ₀)² Var[T(X)].
pub fn expfam_fisher_info(spec: &ExpFamilySpec, theta0: f64, var_t: f64) -> Result<f64> {
    if !(var_t > 0.0) {
        return Err(Error::domain(
            "expfam_fisher_info",
            format!("degenerate family: Var[T(X)] = {var_t} must be > 0"),
        ));
    }
    let kp = spec.checked_k_prime(theta0)?;
    Ok(kp * kp * var_t)
}

/// E|l'(θ₀; X₁)|³ = |k'(θ₀)|³ E|T(X₁) - D(θ₀)|³.
pub fn expfam_third_score_moment(spec: &ExpFamilySpec, theta0: f64, third_abs_central_t: f64) -> Result<f64> {
    if !(third_abs_central_t >= 0.0 && third_abs_central_t.is_finite()) {
        return Err(Error::domain(
            "expfam_third_score_moment",
            format!("central moment must be finite and >= 0, got {third_abs_central_t}"),
        ));
    }
    let kp = spec.checked_k_prime(theta0)?;
    Ok(kp.abs().powi(3) * third_abs_central_t)
}

/// Model-specific quantities that the family structure alone does not determine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpFamilyMoments {
    pub var_t: f64,
    pub third_abs_central_t: f64,
    pub mse: f64,
    pub fourth_mle_moment: f64,
    pub sup_third_deriv: f64,
    pub r2_conditional_bound: f64,
    pub epsilon: f64,
    pub sup_third_is_deterministic: bool,
}

/// Ingredients for a general exponential family: Fisher information and the
/// third score moment come from the family, the rest is caller-supplied.
pub fn expfam_ingredients(spec: &ExpFamilySpec, theta0: f64, n: u64, m: &ExpFamilyMoments) -> Result<BoundIngredients> {
    let lo = theta0 - m.epsilon;
    let hi = theta0 + m.epsilon;
    if !(m.epsilon > 0.0) || lo < spec.theta_space.0 || hi > spec.theta_space.1 {
        return Err(Error::domain(
            "expfam_ingredients",
            format!("(θ₀-ε, θ₀+ε) = ({lo}, {hi}) not inside the parameter space"),
        ));
    }
    let ing = BoundIngredients {
        theta0,
        n,
        fisher_info: expfam_fisher_info(spec, theta0, m.var_t)?,
        third_abs_score_moment: expfam_third_score_moment(spec, theta0, m.third_abs_central_t)?,
        mse: m.mse,
        fourth_mle_moment: m.fourth_mle_moment,
        sup_third_deriv: m.sup_third_deriv,
        r2_conditional_bound: m.r2_conditional_bound,
        epsilon: m.epsilon,
        sup_third_is_deterministic: m.sup_third_is_deterministic,
    };
    ing.validate()?;
    Ok(ing)
}

fn check_theta_eps(op: &'static str, theta0: f64, epsilon: f64) -> Result<()> {
    if !(theta0 > 0.0 && theta0.is_finite()) {
        return Err(Error::domain(
            op,
            format!("theta0 must be finite and > 0, got {theta0}"),
        ));
    }
    if !(epsilon > 0.0 && epsilon < theta0) {
        return Err(Error::domain(
            op,
            format!("epsilon must lie in (0, theta0), got {epsilon}"),
        ));
    }
    Ok(())
}

/// Exp(θ₀) in the canonical parametrisation with ε = θ₀/2.
pub fn exp_canonical_ingredients(theta0: f64, n: u64) -> Result<BoundIngredients> {
    exp_canonical_ingredients_with_eps(theta0, n, theta0 / 2.0)
}

/// Exp(θ₀), canonical, MLE 1/X̄. Requires n >= 3 for a finite MSE.
pub fn exp_canonical_ingredients_with_eps(theta0: f64, n: u64, epsilon: f64) -> Result<BoundIngredients> {
    check_theta_eps("exp_canonical_ingredients", theta0, epsilon)?;
    if n < 3 {
        return Err(Error::Validation(format!(
            "exp-canonical needs n >= 3 for a finite MSE, got n = {n}"
        )));
    }
    let spec = ExpFamilySpec::exponential_canonical();
    let nf = n as f64;
    let moments = ExpFamilyMoments {
        var_t: 1.0 / (theta0 * theta0),
        third_abs_central_t: EXP_THIRD_ABS_CENTRAL / theta0.powi(3),
        mse: (nf + 2.0) * theta0 * theta0 / ((nf - 1.0) * (nf - 2.0)),
        fourth_mle_moment: 0.0,
        // |l'''(θ)| = 2n/θ³ is largest at θ₀ - ε
        sup_third_deriv: 2.0 * nf / (theta0 - epsilon).powi(3),
        r2_conditional_bound: 0.0,
        epsilon,
        sup_third_is_deterministic: true,
    };
    expfam_ingredients(&spec, theta0, n, &moments)
}

/// Exp(1/θ₀) (mean θ₀) with ε = θ₀/2.
pub fn exp_noncanonical_ingredients(theta0: f64, n: u64) -> Result<BoundIngredients> {
    exp_noncanonical_ingredients_with_eps(theta0, n, theta0 / 2.0)
}

/// Exp(1/θ₀), MLE X̄, whose law is Gamma(n, θ₀/n).
pub fn exp_noncanonical_ingredients_with_eps(theta0: f64, n: u64, epsilon: f64) -> Result<BoundIngredients> {
    check_theta_eps("exp_noncanonical_ingredients", theta0, epsilon)?;
    if n == 0 {
        return Err(Error::Validation("sample size n must be >= 1".into()));
    }
    let spec = ExpFamilySpec::exponential_noncanonical();
    let nf = n as f64;
    let moments = ExpFamilyMoments {
        var_t: theta0 * theta0,
        third_abs_central_t: EXP_THIRD_ABS_CENTRAL * theta0.powi(3),
        mse: theta0 * theta0 / nf,
        fourth_mle_moment: 3.0 * theta0.powi(4) / (nf * nf) * (2.0 / nf + 1.0),
        sup_third_deriv: 4.0 * nf * (2.0 * theta0 + epsilon) / (theta0 - epsilon).powi(4),
        r2_conditional_bound: 2.0 / theta0,
        epsilon,
        sup_third_is_deterministic: false,
    };
    expfam_ingredients(&spec, theta0, n, &moments)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;
    use crate::steincore::{direct_sum_bound, mle_bound_general, HWeights};
    use approx::assert_abs_diff_eq;

    #[test]
    fn fisher_info_examples() {
        let can = ExpFamilySpec::exponential_canonical();
        assert_eq!(expfam_fisher_info(&can, 1.0, 1.0).unwrap(), 1.0);
        let non = ExpFamilySpec::exponential_noncanonical();
        assert_abs_diff_eq!(expfam_fisher_info(&non, 2.0, 4.0).unwrap(), 0.25, epsilon = 1e-15);
        assert!(expfam_fisher_info(&can, 1.0, 0.0).is_err());
        assert!(expfam_fisher_info(&can, -1.0, 1.0).is_err());
        let doubled = ExpFamilySpec {
            k_prime: |_| 2.0,
            ..can
        };
        assert_eq!(expfam_fisher_info(&doubled, 1.0, 1.0).unwrap(), 4.0);
    }

    #[test]
    fn third_moment_examples() {
        let can = ExpFamilySpec::exponential_canonical();
        assert_eq!(expfam_third_score_moment(&can, 1.0, 2.41456).unwrap(), 2.41456);
        assert_eq!(expfam_third_score_moment(&can, 1.0, 0.0).unwrap(), 0.0);
        let holder = crate::steincore::holder_third_from_fourth(9.0).unwrap();
        assert_abs_diff_eq!(
            expfam_third_score_moment(&can, 1.0, holder).unwrap(),
            9f64.powf(0.75),
            epsilon = 1e-14
        );
    }

    #[test]
    fn mean_t_matches_exponential_mean() {
        let can = ExpFamilySpec::exponential_canonical();
        assert_abs_diff_eq!(can.mean_t(4.0).unwrap(), -0.25, epsilon = 1e-15);
        let non = ExpFamilySpec::exponential_noncanonical();
        assert_abs_diff_eq!(non.mean_t(4.0).unwrap(), -4.0, epsilon = 1e-15);
        // density integrates to 1
        let r = quad::integrate(&|x: f64| can.log_density(2.0, x).exp(), 0.0, 40.0, 1e-12, 200).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn exp_third_abs_central_constant_is_an_upper_bound() {
        // E|1/θ - X|³ for X ~ Exp(θ), by quadrature
        for &theta in &[0.5, 1.0, 3.0] {
            let f = |x: f64| (1.0 / theta - x).abs().powi(3) * theta * (-theta * x).exp();
            let kink = 1.0 / theta;
            let left = quad::integrate(&f, 0.0, kink, 1e-13, 500).unwrap().value;
            let right = quad::integrate(&f, kink, 80.0 / theta, 1e-13, 2000).unwrap().value;
            let scaled = (left + right) * theta.powi(3);
            assert!(scaled <= EXP_THIRD_ABS_CENTRAL);
            assert!(EXP_THIRD_ABS_CENTRAL - scaled < 1e-3);
            assert_abs_diff_eq!(scaled, 12.0 / std::f64::consts::E - 2.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn canonical_ingredients() {
        let ing = exp_canonical_ingredients(1.0, 10).unwrap();
        assert_eq!(ing.fisher_info, 1.0);
        assert_abs_diff_eq!(ing.sup_third_deriv, 160.0, epsilon = 1e-12);
        assert!(ing.sup_third_is_deterministic);
        let b = mle_bound_general(&ing, HWeights::UNIT).unwrap();
        assert_abs_diff_eq!(b.total, 6.9457, epsilon = 1e-4);
        let table = mle_bound_general(
            &exp_canonical_ingredients(1.0, 100_000).unwrap(),
            HWeights::reciprocal_quadratic(),
        )
        .unwrap();
        assert_abs_diff_eq!(table.total, 0.009, epsilon = 1e-3);
        assert!(exp_canonical_ingredients(1.0, 2).is_err());
        assert!(exp_canonical_ingredients(0.0, 10).is_err());
        assert!(exp_canonical_ingredients_with_eps(1.0, 10, 1.0).is_err());
    }

    #[test]
    fn noncanonical_ingredients() {
        let ing = exp_noncanonical_ingredients(2.0, 10).unwrap();
        assert_abs_diff_eq!(ing.fisher_info, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(ing.sup_third_deriv, 160.0 * 10.0 / 8.0, epsilon = 1e-12);
        let b = mle_bound_general(&ing, HWeights::reciprocal_quadratic()).unwrap();
        assert_abs_diff_eq!(b.total, 11.888, epsilon = 5e-3);
        let b = mle_bound_general(
            &exp_noncanonical_ingredients(2.0, 100_000).unwrap(),
            HWeights::reciprocal_quadratic(),
        )
        .unwrap();
        assert_abs_diff_eq!(b.total, 0.105, epsilon = 1e-3);
    }

    #[test]
    fn noncanonical_closed_form_with_unit_weights() {
        for &n in &[1u64, 7, 10, 1000, 123_456] {
            let nf = n as f64;
            let want =
                4.41456 / nf.sqrt() + 8.0 / nf + 2.0 / nf.sqrt() + 80.0 * (3.0 * (2.0 / nf + 1.0)).sqrt() / nf.sqrt();
            let got = mle_bound_general(&exp_noncanonical_ingredients(0.7, n).unwrap(), HWeights::UNIT)
                .unwrap()
                .total;
            assert!((got - want).abs() <= 1e-12 * want, "n={n}");
        }
    }

    #[test]
    fn model_invariants() {
        for n in (3u64..2000).step_by(37).chain([10_000, 1_000_000]) {
            let totals = |f: fn(f64, u64) -> Result<BoundIngredients>| -> Vec<f64> {
                [0.1, 1.0, 7.0]
                    .iter()
                    .map(|&th| mle_bound_general(&f(th, n).unwrap(), HWeights::UNIT).unwrap().total)
                    .collect()
            };
            let can = totals(exp_canonical_ingredients);
            let non = totals(exp_noncanonical_ingredients);
            for v in [&can, &non] {
                for x in v.iter() {
                    assert!(((x - v[1]) / v[1]).abs() < 1e-12, "θ₀-invariance at n={n}");
                }
            }
            assert!(non[1] > can[1], "dominance at n={n}");
            assert!(direct_sum_bound(1.0, EXP_THIRD_ABS_CENTRAL, n).unwrap() <= non[1]);
        }
    }

    #[test]
    fn canonical_rate_limit() {
        let n = 1e8 as u64;
        let total = mle_bound_general(&exp_canonical_ingredients(1.0, n).unwrap(), HWeights::UNIT)
            .unwrap()
            .total;
        assert_abs_diff_eq!(total * (n as f64).sqrt(), 12.41456, epsilon = 0.01);
    }
}
