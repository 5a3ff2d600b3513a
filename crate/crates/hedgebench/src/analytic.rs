//! Closed-form Black-Scholes quantities, the Leland volatility adjustment,
//! and the leading-order discrete-hedging wealth approximation.

use crate::error::{HedgeError, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Parameters of the simulated GBM world.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    /// Initial price, normalized to 1 in the experiments.
    pub s0: f64,
    /// Annual drift under the real-world measure.
    pub mu: f64,
    /// Annual volatility.
    pub sigma: f64,
    /// Continuously-compounded annual risk-free rate.
    pub r: f64,
    /// Option maturity in years.
    pub maturity_t: f64,
}

impl MarketParams {
    pub fn new(s0: f64, mu: f64, sigma: f64, r: f64, maturity_t: f64) -> Result<Self> {
        if !(s0 > 0.0) {
            return Err(HedgeError::invalid(format!("s0 must be > 0, got {s0}")));
        }
        if !(sigma > 0.0) {
            return Err(HedgeError::invalid(format!("sigma must be > 0, got {sigma}")));
        }
        if !(maturity_t > 0.0) {
            return Err(HedgeError::invalid(format!(
                "maturity_T must be > 0, got {maturity_t}"
            )));
        }
        Ok(Self {
            s0,
            mu,
            sigma,
            r,
            maturity_t,
        })
    }
}

/// European call specification. Strike is expressed as moneyness
/// (strike divided by the initial spot).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionSpec {
    pub strike_k: f64,
    pub maturity_t: f64,
}

impl OptionSpec {
    /// A European call. Only calls are supported.
    pub fn call(strike_k: f64, maturity_t: f64) -> Result<Self> {
        if !(strike_k > 0.0) {
            return Err(HedgeError::invalid(format!(
                "strike_K must be > 0, got {strike_k}"
            )));
        }
        if !(maturity_t > 0.0) {
            return Err(HedgeError::invalid(format!(
                "maturity_T must be > 0, got {maturity_t}"
            )));
        }
        Ok(Self {
            strike_k,
            maturity_t,
        })
    }
}

/// Proportional transaction-cost model: `tc_alpha` per unit of currency traded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub tc_alpha: f64,
}

impl CostModel {
    pub fn new(tc_alpha: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&tc_alpha) {
            return Err(HedgeError::invalid(format!(
                "tc_alpha must satisfy 0 <= alpha < 1, got {tc_alpha}"
            )));
        }
        Ok(Self { tc_alpha })
    }

    pub fn none() -> Self {
        Self { tc_alpha: 0.0 }
    }
}

// Error-function evaluation ported from FreeBSD's msun s_erf.c (via the Go
// standard library), a rational approximation whose absolute error is below
// 1e-15 on all of R. This keeps norm_cdf well inside the 1e-12 budget that
// the delta computations rely on.

const ERX: f64 = 8.450_629_115_104_675_3e-1;
const EFX: f64 = 1.283_791_670_955_125_9e-1;
const EFX8: f64 = 1.027_033_336_764_100_7;
const PP0: f64 = 1.283_791_670_955_125_6e-1;
const PP1: f64 = -3.250_421_072_470_015e-1;
const PP2: f64 = -2.848_174_957_559_851e-2;
const PP3: f64 = -5.770_270_296_489_442e-3;
const PP4: f64 = -2.376_301_665_665_016_3e-5;
const QQ1: f64 = 3.979_172_239_591_553_5e-1;
const QQ2: f64 = 6.502_224_998_876_729e-2;
const QQ3: f64 = 5.081_306_281_875_766e-3;
const QQ4: f64 = 1.324_947_380_043_216_5e-4;
const QQ5: f64 = -3.960_228_278_775_368e-6;
const PA0: f64 = -2.362_118_560_752_659_4e-3;
const PA1: f64 = 4.148_561_186_837_483e-1;
const PA2: f64 = -3.722_078_760_357_013_3e-1;
const PA3: f64 = 3.183_466_199_011_617_5e-1;
const PA4: f64 = -1.108_946_942_823_966_8e-1;
const PA5: f64 = 3.547_830_432_561_823_6e-2;
const PA6: f64 = -2.166_375_594_868_790_8e-3;
const QA1: f64 = 1.064_208_804_008_442_3e-1;
const QA2: f64 = 5.403_979_177_021_710_5e-1;
const QA3: f64 = 7.182_865_441_419_627e-2;
const QA4: f64 = 1.261_712_198_087_616_4e-1;
const QA5: f64 = 1.363_708_391_202_905_1e-2;
const QA6: f64 = 1.198_449_984_679_910_7e-2;
const RA0: f64 = -9.864_944_034_847_148e-3;
const RA1: f64 = -6.938_585_727_071_818e-1;
const RA2: f64 = -1.055_862_622_532_329_1e1;
const RA3: f64 = -6.237_533_245_032_601e1;
const RA4: f64 = -1.623_966_694_625_734_7e2;
const RA5: f64 = -1.846_050_929_067_110_4e2;
const RA6: f64 = -8.128_743_550_630_659e1;
const RA7: f64 = -9.814_329_344_169_146;
const SA1: f64 = 1.965_127_166_743_925_7e1;
const SA2: f64 = 1.376_577_541_435_190_4e2;
const SA3: f64 = 4.345_658_774_752_292e2;
const SA4: f64 = 6.453_872_717_332_679e2;
const SA5: f64 = 4.290_081_400_275_678_3e2;
const SA6: f64 = 1.086_350_055_417_794_4e2;
const SA7: f64 = 6.570_249_770_319_282;
const SA8: f64 = -6.042_441_521_485_81e-2;
const RB0: f64 = -9.864_942_924_700_099e-3;
const RB1: f64 = -7.992_832_376_805_23e-1;
const RB2: f64 = -1.775_795_491_775_475_2e1;
const RB3: f64 = -1.606_363_848_558_219_2e2;
const RB4: f64 = -6.375_664_433_683_896e2;
const RB5: f64 = -1.025_095_131_611_077_2e3;
const RB6: f64 = -4.835_191_916_086_514e2;
const SB1: f64 = 3.033_806_074_348_246e1;
const SB2: f64 = 3.257_925_129_965_739_2e2;
const SB3: f64 = 1.536_729_586_084_437e3;
const SB4: f64 = 3.199_858_219_508_595_4e3;
const SB5: f64 = 2.553_050_406_433_164_4e3;
const SB6: f64 = 4.745_285_412_069_553_7e2;
const SB7: f64 = -2.244_095_244_658_581_8e1;
const VERY_TINY: f64 = 2.848_094_538_889_218e-306;
const TINY: f64 = 1.387_778_780_781_445_7e-17; // 2^-56
const SMALL: f64 = 3.725_290_298_461_914e-9; // 2^-28

/// Error function.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return -1.0;
    }
    let sign = x < 0.0;
    let x = x.abs();
    if x < 0.84375 {
        let temp = if x < SMALL {
            if x < VERY_TINY {
                0.125 * (8.0 * x + EFX8 * x)
            } else {
                x + EFX * x
            }
        } else {
            let z = x * x;
            let r = PP0 + z * (PP1 + z * (PP2 + z * (PP3 + z * PP4)));
            let s = 1.0 + z * (QQ1 + z * (QQ2 + z * (QQ3 + z * (QQ4 + z * QQ5))));
            x + x * (r / s)
        };
        return if sign { -temp } else { temp };
    }
    if x < 1.25 {
        let s = x - 1.0;
        let p = PA0 + s * (PA1 + s * (PA2 + s * (PA3 + s * (PA4 + s * (PA5 + s * PA6)))));
        let q = 1.0 + s * (QA1 + s * (QA2 + s * (QA3 + s * (QA4 + s * (QA5 + s * QA6)))));
        return if sign { -ERX - p / q } else { ERX + p / q };
    }
    if x >= 6.0 {
        return if sign { -1.0 } else { 1.0 };
    }
    let s = 1.0 / (x * x);
    let (r, q) = if x < 1.0 / 0.35 {
        (
            RA0 + s * (RA1 + s * (RA2 + s * (RA3 + s * (RA4 + s * (RA5 + s * (RA6 + s * RA7)))))),
            1.0 + s
                * (SA1
                    + s * (SA2 + s * (SA3 + s * (SA4 + s * (SA5 + s * (SA6 + s * (SA7 + s * SA8))))))),
        )
    } else {
        (
            RB0 + s * (RB1 + s * (RB2 + s * (RB3 + s * (RB4 + s * (RB5 + s * RB6))))),
            1.0 + s * (SB1 + s * (SB2 + s * (SB3 + s * (SB4 + s * (SB5 + s * (SB6 + s * SB7)))))),
        )
    };
    // Split x into a high part with zeroed low mantissa bits, as in msun.
    let z = f64::from_bits(x.to_bits() & 0xffff_ffff_0000_0000);
    let v = (-z * z - 0.5625).exp() * ((z - x) * (z + x) + r / q).exp();
    if sign {
        v / x - 1.0
    } else {
        1.0 - v / x
    }
}

/// Complementary error function, accurate in the tails where `1 - erf(x)`
/// would cancel.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x == f64::INFINITY {
        return 0.0;
    }
    if x == f64::NEG_INFINITY {
        return 2.0;
    }
    let sign = x < 0.0;
    let x = x.abs();
    if x < 0.84375 {
        let temp = if x < TINY {
            x
        } else {
            let z = x * x;
            let r = PP0 + z * (PP1 + z * (PP2 + z * (PP3 + z * PP4)));
            let s = 1.0 + z * (QQ1 + z * (QQ2 + z * (QQ3 + z * (QQ4 + z * QQ5))));
            let y = x * (r / s);
            if x < 0.25 {
                x + y
            } else {
                0.5 + (y + (x - 0.5))
            }
        };
        return if sign { 1.0 + temp } else { 1.0 - temp };
    }
    if x < 1.25 {
        let s = x - 1.0;
        let p = PA0 + s * (PA1 + s * (PA2 + s * (PA3 + s * (PA4 + s * (PA5 + s * PA6)))));
        let q = 1.0 + s * (QA1 + s * (QA2 + s * (QA3 + s * (QA4 + s * (QA5 + s * QA6)))));
        return if sign {
            1.0 + ERX + p / q
        } else {
            1.0 - ERX - p / q
        };
    }
    if x < 28.0 {
        let s = 1.0 / (x * x);
        let (r, q) = if x < 1.0 / 0.35 {
            (
                RA0 + s
                    * (RA1 + s * (RA2 + s * (RA3 + s * (RA4 + s * (RA5 + s * (RA6 + s * RA7)))))),
                1.0 + s
                    * (SA1
                        + s * (SA2
                            + s * (SA3 + s * (SA4 + s * (SA5 + s * (SA6 + s * (SA7 + s * SA8))))))),
            )
        } else {
            if sign && x > 6.0 {
                return 2.0;
            }
            (
                RB0 + s * (RB1 + s * (RB2 + s * (RB3 + s * (RB4 + s * (RB5 + s * RB6))))),
                1.0 + s * (SB1 + s * (SB2 + s * (SB3 + s * (SB4 + s * (SB5 + s * (SB6 + s * SB7)))))),
            )
        };
        let z = f64::from_bits(x.to_bits() & 0xffff_ffff_0000_0000);
        let v = (-z * z - 0.5625).exp() * ((z - x) * (z + x) + r / q).exp();
        return if sign { 2.0 - v / x } else { v / x };
    }
    if sign {
        2.0
    } else {
        0.0
    }
}

/// Standard normal cumulative distribution function.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

fn d1(spot: f64, strike: f64, ttm: f64, r: f64, vol: f64) -> f64 {
    ((spot / strike).ln() + (r + 0.5 * vol * vol) * ttm) / (vol * ttm.sqrt())
}

fn check_spot_vol(spot: f64, vol: f64) -> Result<()> {
    if !(spot > 0.0) {
        return Err(HedgeError::invalid(format!("spot must be > 0, got {spot}")));
    }
    if !(vol > 0.0) {
        return Err(HedgeError::invalid(format!("vol must be > 0, got {vol}")));
    }
    Ok(())
}

/// Black-Scholes price of a European call; at `ttm = 0` returns the payoff.
pub fn bs_price(spot: f64, spec: &OptionSpec, ttm: f64, r: f64, vol: f64) -> Result<f64> {
    check_spot_vol(spot, vol)?;
    if ttm < 0.0 {
        return Err(HedgeError::invalid(format!("ttm must be >= 0, got {ttm}")));
    }
    if ttm == 0.0 {
        return Ok((spot - spec.strike_k).max(0.0));
    }
    let d1 = d1(spot, spec.strike_k, ttm, r, vol);
    let d2 = d1 - vol * ttm.sqrt();
    Ok(spot * norm_cdf(d1) - spec.strike_k * (-r * ttm).exp() * norm_cdf(d2))
}

/// Black-Scholes call delta, `Phi(d1)`. Undefined at expiry: the engine
/// handles settlement separately and never queries `ttm = 0`.
pub fn bs_delta(spot: f64, spec: &OptionSpec, ttm: f64, r: f64, vol: f64) -> Result<f64> {
    check_spot_vol(spot, vol)?;
    if !(ttm > 0.0) {
        return Err(HedgeError::invalid(format!("ttm must be > 0, got {ttm}")));
    }
    Ok(norm_cdf(d1(spot, spec.strike_k, ttm, r, vol)))
}

/// Black-Scholes call gamma, `phi(d1) / (spot * vol * sqrt(ttm))`.
pub fn bs_gamma(spot: f64, spec: &OptionSpec, ttm: f64, r: f64, vol: f64) -> Result<f64> {
    check_spot_vol(spot, vol)?;
    if !(ttm > 0.0) {
        return Err(HedgeError::invalid(format!("ttm must be > 0, got {ttm}")));
    }
    let d1 = d1(spot, spec.strike_k, ttm, r, vol);
    Ok(norm_pdf(d1) / (spot * vol * ttm.sqrt()))
}

/// Leland's adjusted volatility: `nu*^2 = sigma^2 + alpha*sigma*sqrt(2/(pi*dt))`.
///
/// Strictly increasing in `tc_alpha`, strictly decreasing in `dt`, and equal
/// to `sigma` when `tc_alpha = 0`.
pub fn leland_vol(sigma: f64, tc_alpha: f64, dt: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(HedgeError::invalid(format!("sigma must be > 0, got {sigma}")));
    }
    if tc_alpha < 0.0 {
        return Err(HedgeError::invalid(format!(
            "tc_alpha must be >= 0, got {tc_alpha}"
        )));
    }
    if !(dt > 0.0) {
        return Err(HedgeError::invalid(format!("dt must be > 0, got {dt}")));
    }
    Ok((sigma * sigma + tc_alpha * sigma * (2.0 / (PI * dt)).sqrt()).sqrt())
}

/// Leading-order trader wealth of a discrete `nu`-hedge along `path`:
///
/// `1/2 * sum_i exp(-r*t_{i+1}) * Gamma_nu(X_i, t_i) * X_i^2
///      * [nu^2*dt - ((X_{i+1}-X_i)/X_i)^2] - C0_nu`
///
/// Sign convention is WEALTH; the hedging engine's `Z_T` is cost, the
/// negative of this up to the `O(sqrt(dt))` remainder. The path must sit on
/// the uniform grid `t_i = i*dt` with `n*dt` equal to the option maturity.
pub fn leland_pnl_approx(
    path: &[f64],
    spec: &OptionSpec,
    r: f64,
    nu: f64,
    dt: f64,
) -> Result<f64> {
    if path.len() < 2 {
        return Err(HedgeError::invalid(
            "path must have at least 2 points".to_string(),
        ));
    }
    let n = path.len() - 1;
    if (n as f64 * dt - spec.maturity_t).abs() > 1e-9 * spec.maturity_t {
        return Err(HedgeError::invalid(format!(
            "non-uniform grid: {n} steps of dt={dt} do not span maturity {}",
            spec.maturity_t
        )));
    }
    let c0 = bs_price(path[0], spec, spec.maturity_t, r, nu)?;
    let mut gamma_term = 0.0;
    for i in 0..n {
        let t_i = i as f64 * dt;
        let ttm = spec.maturity_t - t_i;
        let x = path[i];
        let ret = (path[i + 1] - x) / x;
        let g = bs_gamma(x, spec, ttm, r, nu)?;
        gamma_term += (-r * (t_i + dt)).exp() * g * x * x * (nu * nu * dt - ret * ret);
    }
    Ok(0.5 * gamma_term - c0)
}
