//! Checks shared by the property suites and the acceptance target. Each
//! returns `Err(reason)` on the first violation.

#![allow(dead_code)]

use std::f64::consts::PI;

use rand::Rng;
use steinmle::boundary::{perturb, poisson_bound, PerturbationSpec, PoissonC};
use steinmle::models::{BoundOptions, Model, ModelKind};
use steinmle::montecarlo::{ci_coverage, conditional_expectation_check, mle_deviation_sampler, sample, trial_rng};
use steinmle::msebound::{
    beta_ingredients, beta_minimal_n, beta_mle, beta_score, mse_upper_bound_a1, quadratic_coefficients, BetaParams,
};
use steinmle::solve::newton_bisect;
use steinmle::specfun::{polygamma, PolygammaOrder};
use steinmle::steincore::{kolmogorov_from_bw, HWeights};

pub type Check = Result<(), String>;
pub type NamedCheck = (&'static str, fn() -> Check);

pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel_close(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol * want.abs().max(1e-300)
}

fn psi(m: u8, x: f64) -> f64 {
    polygamma(PolygammaOrder::new(m).unwrap(), x).unwrap()
}

/// Recurrence Ψ_m(x+1) = Ψ_m(x) + (-1)^m m!/x^{m+1}, duplication
/// Ψ_m(2x) 2^{m+1} = Ψ_m(x) + Ψ_m(x+1/2) (m >= 1), and special values.
pub fn polygamma_identities() -> Check {
    const ZETA3: f64 = 1.202_056_903_159_594_3;
    const EULER: f64 = 0.577_215_664_901_532_9;
    let fact = [1.0, 1.0, 2.0, 6.0];
    let xs = [1e-3, 0.01, 0.37, 1.0, 2.5, 9.9, 47.0, 1234.5, 9.9e5];
    for m in 0..=3u8 {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        for &x in &xs {
            let lhs = psi(m, x + 1.0);
            let step = sign * fact[m as usize] / x.powi(m as i32 + 1);
            let rhs = psi(m, x) + step;
            // cancellation in Ψ(x) + 1/x near the digamma root needs an absolute floor
            let scale = lhs.abs().max(step.abs()).max(psi(m, x).abs());
            ensure((lhs - rhs).abs() <= 1e-10 * scale, || {
                format!("recurrence m={m} x={x}: {lhs} vs {rhs}")
            })?;
            if m >= 1 {
                let dup = psi(m, 2.0 * x) * 2f64.powi(m as i32 + 1);
                let sum = psi(m, x) + psi(m, x + 0.5);
                ensure(rel_close(dup, sum, 1e-10), || {
                    format!("duplication m={m} x={x}: {dup} vs {sum}")
                })?;
            }
        }
    }
    let specials = [
        (0u8, 1.0, -EULER),
        (1, 0.5, PI * PI / 2.0),
        (1, 1.0, PI * PI / 6.0),
        (2, 1.0, -2.0 * ZETA3),
        (3, 0.5, PI.powi(4)),
        (3, 1.0, PI.powi(4) / 15.0),
    ];
    for (m, x, want) in specials {
        let got = psi(m, x);
        ensure(rel_close(got, want, 1e-10), || {
            format!("Ψ_{m}({x}) = {got}, expected {want}")
        })?;
    }
    Ok(())
}

/// q maps [a, b] into the open interval and moves no point by more than c/n,
/// with the maximum attained at the endpoints.
pub fn perturbation_interiority() -> Check {
    let mut rng = trial_rng(11, 0);
    for _ in 0..2000 {
        let a: f64 = rng.random_range(-50.0..50.0);
        let b = a + rng.random_range(1e-3..100.0);
        let n: u64 = rng.random_range(1..100_000);
        let c = rng.random_range(1e-6..1.0) * n as f64 * (b - a) / 2.0;
        let spec = PerturbationSpec::new(a, b, c, n).map_err(|e| e.to_string())?;
        let gap = c / n as f64;
        for x in [a, b, a + rng.random::<f64>() * (b - a)] {
            let q = perturb(&spec, x).map_err(|e| e.to_string())?;
            ensure(q > a && q < b, || format!("q({x}) = {q} not inside ({a}, {b})"))?;
            // q - x carries rounding of order ulp(x)
            let slack = 4.0 * f64::EPSILON * x.abs().max(q.abs());
            ensure((q - x).abs() <= gap * (1.0 + 1e-12) + slack, || {
                format!("|q({x}) - {x}| = {} > c/n = {gap}", (q - x).abs())
            })?;
        }
        let end_gap = (perturb(&spec, a).unwrap() - a).abs();
        ensure(
            (end_gap - gap).abs() <= 1e-9 * gap + 4.0 * f64::EPSILON * a.abs(),
            || format!("sup gap {end_gap} != c/n = {gap}"),
        )?;
    }
    for (a, c, n) in [(0.0, 1.0, 10u64), (-3.0, 0.25, 7)] {
        let spec = PerturbationSpec::half_line(a, c, n).unwrap();
        for x in [a, a + 1.0, a + 1e6] {
            let q = perturb(&spec, x).unwrap();
            ensure(q > a && rel_close(q - x, c / n as f64, 1e-9), || {
                format!("half-line q({x}) = {q}")
            })?;
        }
    }
    Ok(())
}

pub fn poisson_zero_bound() -> Check {
    for n in [1u64, 2, 50, 1000, 1_000_000] {
        for c in [
            PoissonC::Auto,
            PoissonC::Fixed(0.1),
            PoissonC::Fixed(1.0),
            PoissonC::Fixed(10.0),
        ] {
            let b = poisson_bound(0.0, n, c).map_err(|e| e.to_string())?;
            ensure(b.total == 0.0 && b.terms.iter().all(|t| t.value == 0.0), || {
                format!("θ₀=0, n={n}, {c:?}: {b:?}")
            })?;
        }
    }
    Ok(())
}

pub fn poisson_auto_c() -> Check {
    for theta in [0.01, 0.3, 1.0, 4.0, 25.0] {
        for n in [10u64, 100, 1000, 100_000] {
            let auto = poisson_bound(theta, n, PoissonC::Auto)
                .map_err(|e| e.to_string())?
                .total;
            for c in [0.1, 1.0, 10.0] {
                let fixed = poisson_bound(theta, n, PoissonC::Fixed(c))
                    .map_err(|e| e.to_string())?
                    .total;
                ensure(auto <= fixed * (1.0 + 1e-12), || {
                    format!("θ={theta} n={n}: auto {auto} > c={c} {fixed}")
                })?;
            }
        }
    }
    Ok(())
}

/// β = 1: the closed form agrees with an independent root solve of the score.
/// β = 2: the root solver agrees with a grid search of the log-likelihood
/// n log(θ(θ+1)) + (θ-1) Σ log x on [1e-4, 50] with 10⁶ points.
pub fn beta_mle_oracles() -> Check {
    let m1 = Model::with_beta(ModelKind::Beta, 1.5, Some(1.0)).unwrap();
    for t in 0..20 {
        let xs = sample(&m1, 200, &mut trial_rng(5, t)).unwrap();
        let closed = beta_mle(&xs, 1.0).map_err(|e| e.to_string())?;
        let n = xs.len() as u64;
        let s: f64 = xs.iter().map(|x| x.ln()).sum();
        let root = newton_bisect(
            |th| (beta_score(th, 1.0, n, s).unwrap(), -(n as f64) / (th * th)),
            1e-6,
            1e6,
            1e-15,
            500,
        )
        .map_err(|e| e.to_string())?;
        ensure(rel_close(closed, root, 1e-10), || {
            format!("β=1 trial {t}: closed {closed} vs root {root}")
        })?;
    }
    let m2 = Model::with_beta(ModelKind::Beta, 2.3, Some(2.0)).unwrap();
    let (lo, hi, points) = (1e-4, 50.0, 1_000_000usize);
    let step = (hi - lo) / (points - 1) as f64;
    for t in 0..5 {
        let xs = sample(&m2, 300, &mut trial_rng(6, t)).unwrap();
        let got = beta_mle(&xs, 2.0).map_err(|e| e.to_string())?;
        let n = xs.len() as f64;
        let s: f64 = xs.iter().map(|x| x.ln()).sum();
        let ll = |th: f64| n * (th * (th + 1.0)).ln() + (th - 1.0) * s;
        let best = (0..points)
            .map(|k| lo + k as f64 * step)
            .max_by(|a, b| ll(*a).partial_cmp(&ll(*b)).unwrap())
            .unwrap();
        ensure((got - best).abs() <= step, || {
            format!("β=2 trial {t}: root {got} vs grid {best}")
        })?;
    }
    Ok(())
}

/// A₁ is the positive root of D₁x² - bx - c.
pub fn a1_quadratic_residual() -> Check {
    for (theta0, beta) in [(1.5, 1.0), (0.8, 2.0), (3.0, 0.5)] {
        let p = BetaParams::new(theta0, beta).unwrap();
        let ing = beta_ingredients(&p, None).unwrap();
        let n0 = beta_minimal_n(&p).unwrap();
        for n in [n0, n0 + 1, n0 + 500, 10 * n0, 1000 * n0] {
            let a1 = mse_upper_bound_a1(&ing, n).map_err(|e| e.to_string())?;
            let (d, b, c) = quadratic_coefficients(&ing, n);
            let resid = d * a1 * a1 - b * a1 - c;
            let scale = (d * a1 * a1).abs().max((b * a1).abs()).max(c.abs());
            ensure(resid.abs() <= 1e-9 * scale, || {
                format!("({theta0},{beta}) n={n}: residual {resid:e} of scale {scale:e}")
            })?;
        }
    }
    Ok(())
}

/// E[f(M) | M <= ε] <= E[f(M)] for M = |θ̂ - θ₀| and increasing f.
pub fn conditional_expectation_inequality() -> Check {
    let cases = [
        (Model::new(ModelKind::ExpCanonical, 1.0).unwrap(), 20u64, 0.5),
        (Model::new(ModelKind::ExpNoncanonical, 2.0).unwrap(), 10, 0.5),
        (Model::new(ModelKind::Poisson, 3.0).unwrap(), 15, 0.4),
    ];
    for (m, n, eps) in cases {
        for (name, f) in [("x^2", (|x: f64| x * x) as fn(f64) -> f64), ("x^4", |x: f64| x.powi(4))] {
            let s = mle_deviation_sampler(m, n).unwrap();
            let r = conditional_expectation_check(s, f, eps, 20_000, 17).map_err(|e| e.to_string())?;
            ensure(r.holds_within(3.0), || format!("{} n={n} f={name}: {r:?}", m.name()))?;
        }
    }
    Ok(())
}

pub fn kolmogorov_conversion() -> Check {
    ensure(kolmogorov_from_bw(0.0).unwrap() == 0.0, || "d_K(0) != 0".into())?;
    let mut prev = 0.0;
    for k in 1..=1000 {
        let b = k as f64 * 1e-3;
        let v = kolmogorov_from_bw(b).unwrap();
        ensure(v > prev, || format!("not increasing at {b}"))?;
        prev = v;
    }
    Ok(())
}

/// Coverage of the conservative interval is at least 1-α minus three
/// binomial standard errors, and exactly 1 when the interval is the whole line.
pub fn ci_coverage_checks() -> Check {
    let cases = [
        (
            Model::new(ModelKind::ExpCanonical, 1.0).unwrap(),
            100_000u64,
            0.9,
            1000u64,
        ),
        (Model::new(ModelKind::ExpCanonical, 1.0).unwrap(), 100_000, 0.05, 1000),
        (Model::new(ModelKind::ExpNoncanonical, 2.0).unwrap(), 1000, 0.05, 2000),
        (
            Model::with_beta(ModelKind::Beta, 1.5, Some(1.0)).unwrap(),
            200_000,
            0.95,
            500,
        ),
    ];
    for (m, n, alpha, trials) in cases {
        let r = ci_coverage(&m, n, alpha, trials, 7, None).map_err(|e| e.to_string())?;
        let se = (alpha * (1.0 - alpha) / trials as f64).sqrt();
        ensure(r.coverage >= 1.0 - alpha - 3.0 * se, || {
            format!("{} n={n} α={alpha}: {r:?}", m.name())
        })?;
        if r.whole_line {
            ensure(r.coverage == 1.0, || format!("whole-line coverage {}", r.coverage))?;
        }
    }
    Ok(())
}

/// bound(4n)/bound(n) within 5% of 1/2 at n >= 10⁶ for both exponential models.
pub fn sqrt_n_rate() -> Check {
    for kind in [ModelKind::ExpCanonical, ModelKind::ExpNoncanonical] {
        let m = Model::new(kind, 1.3).unwrap();
        for n in [1_000_000u64, 10_000_000, 1_000_000_000] {
            for w in [HWeights::UNIT, HWeights::reciprocal_quadratic()] {
                let b = |n| m.bound(n, w, &BoundOptions::default()).unwrap().total;
                let ratio = b(4 * n) / b(n);
                ensure((ratio - 0.5).abs() <= 0.025, || format!("{kind} n={n}: ratio {ratio}"))?;
            }
        }
    }
    Ok(())
}

pub const PROPERTY_SUITES: [NamedCheck; 10] = [
    ("polygamma recurrences and identities", polygamma_identities),
    ("perturbation interiority and sup-gap c/n", perturbation_interiority),
    ("poisson theta0 = 0 bound is exactly 0", poisson_zero_bound),
    ("poisson auto-c no worse than c in {0.1, 1, 10}", poisson_auto_c),
    ("beta MLE vs closed form and grid oracle", beta_mle_oracles),
    ("A1 quadratic-root residual", a1_quadratic_residual),
    (
        "conditional expectation inequality (Monte Carlo)",
        conditional_expectation_inequality,
    ),
    ("Kolmogorov conversion monotone, zero at zero", kolmogorov_conversion),
    ("conservative CI coverage", ci_coverage_checks),
    ("sqrt(n) rate of the exponential bounds", sqrt_n_rate),
];
