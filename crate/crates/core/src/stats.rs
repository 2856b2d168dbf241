//! Binomial intervals, reproducible per-trial random streams, and exact
//! decimal rendering of rationals.

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Two-sided 95% normal quantile used for every Wilson interval.
pub const WILSON_Z: f64 = 1.959964;

/// Wilson score interval for `hits` successes out of `trials`.
pub fn wilson_interval(hits: u64, trials: u64) -> (f64, f64) {
    assert!(trials > 0 && hits <= trials);
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = p + z2 / (2.0 * n);
    let rad = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if hits == 0 {
        0.0
    } else {
        ((center - rad) / denom).clamp(0.0, p)
    };
    let hi = if hits == trials {
        1.0
    } else {
        ((center + rad) / denom).clamp(p, 1.0)
    };
    (lo, hi)
}

/// Random stream for trial `trial` of a run seeded with `seed`.
///
/// ChaCha8 keyed by `seed` with the trial number as its stream id, so every
/// trial's draws are fixed by `(seed, trial)` alone, whatever the scheduling.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// `num/den` in decimal with `sig` significant digits (round half up).
pub fn decimal_string(value: &BigRational, sig: usize) -> String {
    if value.is_zero() {
        return "0".to_string();
    }
    let neg = value.is_negative();
    let num = value.numer().abs().to_biguint().unwrap();
    let den = value.denom().to_biguint().unwrap();
    let ten = BigUint::from(10u32);
    // exponent e with 10^e <= v < 10^(e+1)
    let mut e: i64 = num.to_string().len() as i64 - den.to_string().len() as i64;
    let pow10 = |k: i64| num_traits::pow(ten.clone(), k.unsigned_abs() as usize);
    let ge = |e: i64| -> bool {
        if e >= 0 {
            num >= &den * pow10(e)
        } else {
            &num * pow10(e) >= den
        }
    };
    while !ge(e) {
        e -= 1;
    }
    while ge(e + 1) {
        e += 1;
    }
    let shift = sig as i64 - 1 - e;
    let (n, d) = if shift >= 0 {
        (&num * pow10(shift), den.clone())
    } else {
        (num.clone(), &den * pow10(shift))
    };
    let (q, r) = n.div_rem(&d);
    let mut digits = if r * 2u32 >= d { q + 1u32 } else { q };
    let mut shift = shift;
    if digits.to_string().len() > sig {
        digits /= 10u32;
        shift -= 1;
    }
    let s = digits.to_string();
    let body = if shift <= 0 {
        format!("{s}{}", "0".repeat((-shift) as usize))
    } else if (shift as usize) < s.len() {
        let (int, frac) = s.split_at(s.len() - shift as usize);
        format!("{int}.{frac}")
    } else {
        format!("0.{}{s}", "0".repeat(shift as usize - s.len()))
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

pub fn to_f64(value: &BigRational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}
