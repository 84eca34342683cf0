//! Special functions: log-gamma, digamma and polygamma of orders 1..=3, and
//! standard-normal utilities.
//!
//! The polygamma family is evaluated by shifting the argument upward with the
//! recurrence `Ψ_m(x) = Ψ_m(x + 1) - (-1)^m m! / x^(m+1)` until `x >= 12` and
//! then summing the Bernoulli asymptotic series. [`polygamma_series`] keeps the
//! defining series `Ψ_m(z) = (-1)^(m+1) m! Σ_k 1/(z+k)^(m+1)` as a slow,
//! independent reference.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::quad;
use crate::steincore::TestFunction;

/// Arguments are shifted above this before the asymptotic series is used.
const ASYMPTOTIC_THRESHOLD: f64 = 12.0;

/// Even Bernoulli numbers B_2, B_4, ..., B_20.
const BERNOULLI_EVEN: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Order of the polygamma function; order 0 is the digamma function itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PolygammaOrder(u8);

impl PolygammaOrder {
    pub const DIGAMMA: PolygammaOrder = PolygammaOrder(0);
    pub const TRIGAMMA: PolygammaOrder = PolygammaOrder(1);
    pub const TETRAGAMMA: PolygammaOrder = PolygammaOrder(2);
    pub const PENTAGAMMA: PolygammaOrder = PolygammaOrder(3);

    pub fn new(m: u8) -> Result<Self> {
        if m <= 3 {
            Ok(PolygammaOrder(m))
        } else {
            Err(Error::domain("polygamma", format!("order {m} not in 0..=3")))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

impl fmt::Display for PolygammaOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn check_positive(op: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(op, format!("argument must be finite and > 0, got {x}")))
    }
}

/// Natural logarithm of the Gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    check_positive("log_gamma", x)?;
    if x == 1.0 || x == 2.0 {
        return Ok(0.0);
    }
    let mut z = x;
    let mut log_prod = 0.0;
    let mut prod = 1.0;
    while z < ASYMPTOTIC_THRESHOLD {
        prod *= z;
        // keep the running product away from overflow/underflow
        if !(1e-200..=1e200).contains(&prod) {
            log_prod += prod.ln();
            prod = 1.0;
        }
        z += 1.0;
    }
    log_prod += prod.ln();

    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let mut series = 0.0;
    let mut pow = inv;
    for (k, b) in BERNOULLI_EVEN.iter().enumerate() {
        let two_k = 2.0 * (k as f64 + 1.0);
        series += b / (two_k * (two_k - 1.0)) * pow;
        pow *= inv2;
    }
    Ok((z - 0.5) * z.ln() - z + HALF_LN_2PI + series - log_prod)
}

/// Digamma function Ψ(x) for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    polygamma(PolygammaOrder::DIGAMMA, x)
}

/// Trigamma function Ψ₁(x) for `x > 0`.
pub fn trigamma(x: f64) -> Result<f64> {
    polygamma(PolygammaOrder::TRIGAMMA, x)
}

fn factorial(m: u8) -> f64 {
    (1..=m as u32).map(f64::from).product()
}

/// Polygamma function Ψ_m(x), `m` in 0..=3, for `x > 0`.
pub fn polygamma(order: PolygammaOrder, x: f64) -> Result<f64> {
    check_positive("polygamma", x)?;
    let m = order.get();
    let m_i = m as i32;
    let mfact = factorial(m);

    // Recurrence shift. For m >= 1 every shift term has the same sign, so the
    // accumulation is cancellation-free.
    let mut z = x;
    let mut shift = 0.0;
    while z < ASYMPTOTIC_THRESHOLD {
        shift += 1.0 / z.powi(m_i + 1);
        z += 1.0;
    }

    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let asymptotic = if m == 0 {
        let mut s = 0.0;
        let mut pow = inv2;
        for (k, b) in BERNOULLI_EVEN.iter().enumerate() {
            let two_k = 2.0 * (k as f64 + 1.0);
            s += b / two_k * pow;
            pow *= inv2;
        }
        z.ln() - 0.5 * inv - s
    } else {
        // (m-1)!/z^m + m!/(2 z^(m+1)) + Σ_k B_2k (2k+m-1)!/(2k)! / z^(2k+m)
        let lead = factorial(m - 1) * inv.powi(m_i) + 0.5 * mfact * inv.powi(m_i + 1);
        let mut s = 0.0;
        let mut pow = inv.powi(m_i + 2);
        for (k, b) in BERNOULLI_EVEN.iter().enumerate() {
            let two_k = 2 * (k as u32 + 1);
            // (2k+m-1)!/(2k)! = prod_{j=1}^{m-1} (2k+j)
            let ratio: f64 = (1..m as u32).map(|j| f64::from(two_k + j)).product();
            s += b * ratio * pow;
            pow *= inv2;
        }
        let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
        sign * (lead + s)
    };

    // Ψ_m(x) = Ψ_m(z) - (-1)^m m! Σ 1/(x+j)^(m+1)
    let shift_sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(asymptotic - shift_sign * mfact * shift)
}

/// Reference evaluation of Ψ_m from the defining series, summed directly for
/// `terms` terms with an Euler-Maclaurin tail correction. Slow; intended for
/// cross-checking [`polygamma`].
///
/// Order 0 uses `Ψ(z) = -γ + Σ_k (1/(k+1) - 1/(z+k))`.
pub fn polygamma_series(order: PolygammaOrder, x: f64, terms: usize) -> Result<f64> {
    check_positive("polygamma_series", x)?;
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let m = order.get() as i32;
    let k_end = terms as f64;
    if m == 0 {
        let mut s = 0.0;
        let mut c = 0.0;
        for k in 0..terms {
            let k = k as f64;
            let t = 1.0 / (k + 1.0) - 1.0 / (x + k);
            // Kahan
            let y = t - c;
            let u = s + y;
            c = (u - s) - y;
            s = u;
        }
        // tail Σ_{k>=K} f(k), f(k) = 1/(k+1) - 1/(x+k)
        let f = |k: f64| 1.0 / (k + 1.0) - 1.0 / (x + k);
        let df = |k: f64| -1.0 / (k + 1.0).powi(2) + 1.0 / (x + k).powi(2);
        let integral = ((x + k_end) / (k_end + 1.0)).ln();
        let tail = integral + 0.5 * f(k_end) - df(k_end) / 12.0;
        return Ok(-EULER_GAMMA + s + tail);
    }
    let p = m + 1;
    let mut s = 0.0;
    // sum the smallest terms first
    for k in (0..terms).rev() {
        s += 1.0 / (x + k as f64).powi(p);
    }
    let a = x + k_end;
    let pf = p as f64;
    let tail = 1.0 / ((pf - 1.0) * a.powi(p - 1)) + 0.5 / a.powi(p) + pf / (12.0 * a.powi(p + 1))
        - pf * (pf + 1.0) * (pf + 2.0) / (720.0 * a.powi(p + 3));
    let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
    Ok(sign * factorial(m as u8) * (s + tail))
}

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal distribution function Φ(x).
pub fn std_normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Upper tail 1 - Φ(x), accurate in the far right tail.
pub fn std_normal_sf(x: f64) -> f64 {
    std_normal_cdf(-x)
}

/// Standard normal quantile Φ⁻¹(p) for `0 < p < 1`.
///
/// A rational initial estimate (absolute error below 5e-4) is refined by
/// bracketed Newton steps on the lower tail of Φ.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(
            "std_normal_quantile",
            format!("p must lie in (0,1), got {p}"),
        ));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    // Work in the lower tail: x = -Φ⁻¹(q) with q = min(p, 1-p). 1-p is exact for p > 1/2.
    let (q, flip) = if p < 0.5 { (p, false) } else { (1.0 - p, true) };
    let t = (-2.0 * q.ln()).sqrt();
    let mut x = -(t
        - (2.515_517 + 0.802_853 * t + 0.010_328 * t * t)
            / (1.0 + 1.432_788 * t + 0.189_269 * t * t + 0.001_308 * t * t * t));
    let mut lo = -40.0_f64;
    let mut hi = 0.0_f64;
    for _ in 0..60 {
        let f = std_normal_cdf(x) - q;
        if f > 0.0 {
            hi = hi.min(x);
        } else {
            lo = lo.max(x);
        }
        let d = std_normal_pdf(x);
        let mut next = if d > 0.0 { x - f / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - x).abs();
        x = next;
        if step <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    Ok(if flip { -x } else { x })
}

/// E[h(Z)] for Z ~ N(0,1), by adaptive Gauss-Kronrod quadrature on [-12, 12].
///
/// The Gaussian mass outside [-12, 12] is below 1e-32.
pub fn normal_expectation(h: &TestFunction) -> Result<f64> {
    normal_expectation_fn(|x| h.eval(x))
}

/// E[f(Z)] for Z ~ N(0,1) and a bounded, piecewise continuous `f`.
pub fn normal_expectation_fn(f: impl Fn(f64) -> f64) -> Result<f64> {
    let integrand = |x: f64| f(x) * std_normal_pdf(x);
    // split at 0 so kinks at the origin land on a node boundary
    let left = quad::integrate(&integrand, -12.0, 0.0, 5e-10, 4000)?;
    let right = quad::integrate(&integrand, 0.0, 12.0, 5e-10, 4000)?;
    Ok(left.value + right.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // Reference values computed at 40 significant digits.
    const LOG_GAMMA_REF: [(f64, f64); 7] = [
        (0.001, 6.907_178_885_383_853_682_5),
        (0.5, 0.572_364_942_924_700_087_07),
        (1.461_632_144_968_362_3, -0.121_486_290_535_849_608_1),
        (3.7, 1.428_072_326_665_387_921_9),
        (12.5, 18.734_347_511_936_445_702),
        (150.25, 601.261_504_032_499_725_98),
        (1e6, 12_815_504.569_147_611_66),
    ];

    const PSI_REF: [[(f64, f64); 8]; 4] = [
        [
            (0.001, -1_000.575_571_931_810_300_5),
            (0.5, -1.963_510_026_021_423_479_4),
            (1.5, 0.036_489_973_978_576_520_559),
            (2.5, 0.703_156_640_645_243_187_23),
            (7.25, 1.910_453_526_883_736_028_4),
            (33.3, 3.490_467_238_520_242_863_9),
            (1000.0, 6.907_255_195_648_812_052_1),
            (1e6, 13.815_510_057_964_190_771),
        ],
        [
            (0.001, 1_000_001.642_533_195_869),
            (0.5, 4.934_802_200_544_679_309_4),
            (1.5, 0.934_802_200_544_679_309_42),
            (2.5, 0.490_357_756_100_234_864_97),
            (7.25, 0.147_879_233_158_932_169_65),
            (33.3, 0.030_485_444_095_338_885_149),
            (1000.0, 0.001_000_500_166_666_633_333_4),
            (1e6, 1.000_000_500_000_166_666_7e-6),
        ],
        [
            (0.001, -2_000_000_002.397_632_289_7),
            (0.5, -16.828_796_644_234_319_996),
            (1.5, -0.828_796_644_234_319_995_6),
            (2.5, -0.236_204_051_641_727_403),
            (7.25, -0.021_828_952_295_197_739_222),
            (33.3, -0.000_929_290_367_811_517_120_57),
            (1000.0, -1.001_000_499_999_833_333_5e-6),
            (1e6, -1.000_001_000_000_5e-12),
        ],
        [
            (0.001, 6_000_000_000_006.469_114_1),
            (0.5, 97.409_091_034_002_437_236),
            (1.5, 1.409_091_034_002_437_236_4),
            (2.5, 0.223_905_848_817_252_051_26),
            (7.25, 0.006_433_037_597_940_156_658_7),
            (33.3, 0.000_056_650_890_622_924_338_217),
            (1000.0, 2.003_001_999_999_000_001_3e-9),
            (1e6, 2.000_003_000_002e-18),
        ],
    ];

    #[test]
    fn log_gamma_matches_reference() {
        for (x, want) in LOG_GAMMA_REF {
            let got = log_gamma(x).unwrap();
            assert!(
                (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                "x={x}: {got} vs {want}"
            );
        }
        assert_eq!(log_gamma(1.0).unwrap(), 0.0);
        assert_eq!(log_gamma(2.0).unwrap(), 0.0);
    }

    #[test]
    fn log_gamma_agrees_with_statrs() {
        let mut x = 1e-3;
        while x < 1e6 {
            let ours = log_gamma(x).unwrap();
            let theirs = statrs::function::gamma::ln_gamma(x);
            assert!((ours - theirs).abs() <= 1e-11 * theirs.abs().max(1.0), "x={x}");
            x *= 1.37;
        }
    }

    #[test]
    fn log_gamma_rejects_bad_input() {
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-1.5).is_err());
        assert!(log_gamma(f64::NAN).is_err());
        assert!(log_gamma(f64::INFINITY).is_err());
    }

    #[test]
    fn polygamma_matches_reference() {
        for (m, row) in PSI_REF.iter().enumerate() {
            let order = PolygammaOrder::new(m as u8).unwrap();
            for &(x, want) in row {
                let got = polygamma(order, x).unwrap();
                assert!(rel(got, want) <= 1e-12, "m={m} x={x}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn polygamma_closed_forms() {
        let euler = 0.577_215_664_901_532_9;
        assert!((digamma(1.0).unwrap() + euler).abs() < 1e-14);
        assert!(rel(trigamma(0.5).unwrap(), PI * PI / 2.0) < 1e-13);
        assert!(rel(polygamma(PolygammaOrder::PENTAGAMMA, 0.5).unwrap(), PI.powi(4)) < 1e-13);
    }

    #[test]
    fn polygamma_agrees_with_series_oracle() {
        for m in 0..=3u8 {
            let order = PolygammaOrder::new(m).unwrap();
            for &x in &[0.01, 0.3, 1.5, 2.5, 4.0, 11.9, 12.1, 40.0] {
                let fast = polygamma(order, x).unwrap();
                let slow = polygamma_series(order, x, 20_000).unwrap();
                let tol = if m == 0 {
                    1e-11 * fast.abs().max(1.0)
                } else {
                    1e-11 * fast.abs()
                };
                assert!((fast - slow).abs() <= tol, "m={m} x={x}: {fast} vs {slow}");
            }
        }
    }

    #[test]
    fn polygamma_order_bounds() {
        assert!(PolygammaOrder::new(4).is_err());
        assert!(polygamma(PolygammaOrder::TRIGAMMA, 0.0).is_err());
        assert!(polygamma(PolygammaOrder::TRIGAMMA, -2.0).is_err());
    }

    #[test]
    fn normal_cdf_values() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert!((std_normal_cdf(8.0) - 1.0).abs() < 1e-12);
        assert!((std_normal_cdf(1.0) - 0.841_344_746_068_542_948_59).abs() < 1e-14);
        assert!(rel(std_normal_cdf(-7.5), 3.190_891_672_910_896_227_8e-14) < 1e-10);
    }

    #[test]
    fn normal_quantile_values() {
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        assert!((std_normal_quantile(0.975).unwrap() - 1.959_963_984_540_054_235_5).abs() < 1e-12);
        assert!((std_normal_quantile(0.985).unwrap() - 2.170_090_377_584_560_529_7).abs() < 1e-12);
        for &p in &[1e-12, 1e-5, 0.01, 0.2, 0.49] {
            // pair 1-p with its exactly representable complement
            let upper = 1.0 - p;
            let a = std_normal_quantile(1.0 - upper).unwrap();
            let b = std_normal_quantile(upper).unwrap();
            assert!((a + b).abs() < 1e-9, "p={p}");
        }
        assert!(std_normal_quantile(0.0).is_err());
        assert!(std_normal_quantile(1.0).is_err());
        assert!(std_normal_quantile(f64::NAN).is_err());
    }

    #[test]
    fn normal_expectation_basics() {
        let one = normal_expectation_fn(|_| 1.0).unwrap();
        assert!((one - 1.0).abs() < 1e-8);
        let var = normal_expectation_fn(|x| x * x).unwrap();
        assert!((var - 1.0).abs() < 1e-8);
        let h = TestFunction::reciprocal_quadratic();
        let eh = normal_expectation(&h).unwrap();
        assert!((eh - 0.378_936_078_070_656_053).abs() < 1e-9);
        assert_eq!((eh * 1000.0).round() / 1000.0, 0.379);
    }

    #[test]
    fn normal_expectation_of_step_function() {
        // piecewise continuous: P(Z <= 0.3)
        let got = normal_expectation_fn(|x| if x <= 0.3 { 1.0 } else { 0.0 }).unwrap();
        assert!((got - std_normal_cdf(0.3)).abs() < 1e-8);
    }
}
