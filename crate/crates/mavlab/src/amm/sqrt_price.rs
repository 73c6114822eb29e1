//! Exact decoding of the Q64.96 `sqrtPriceX96` value carried by swap
//! event logs.
//!
//! The decoded price is `(sqrtPriceX96 / 2^96)^2 * 10^(d0 - d1)`, quoted
//! as token1 per token0. Squaring a 160-bit value needs 320 bits, so the
//! decoder keeps the price as an exact integer ratio and only rounds when
//! rendering: `to_f64` goes through a 40-significant-digit decimal string
//! (Rust's float parser rounds correctly), and `to_decimal_string` rounds
//! half-even at the requested digit.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::TokenMeta;
use crate::{MavError, Result};

/// Exact decoded spot price as an integer ratio `num / den`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedPrice {
    num: BigUint,
    den: BigUint,
}

fn pow10(exp: u32) -> BigUint {
    BigUint::from(10u8).pow(exp)
}

/// Decodes `sqrtPriceX96` into an exact token1-per-token0 price.
///
/// Fails on zero input and on values wider than 160 bits.
pub fn decode_sqrt_price(
    sqrt_price_x96: &BigUint,
    token0: &TokenMeta,
    token1: &TokenMeta,
) -> Result<DecodedPrice> {
    if sqrt_price_x96.is_zero() {
        return Err(MavError::InvalidPrice("sqrtPriceX96 is zero".into()));
    }
    if sqrt_price_x96.bits() > 160 {
        return Err(MavError::InvalidInput(format!(
            "sqrtPriceX96 has {} bits, exceeds 160",
            sqrt_price_x96.bits()
        )));
    }
    let num = sqrt_price_x96 * sqrt_price_x96 * pow10(u32::from(token0.decimals));
    let den = (BigUint::one() << 192u32) * pow10(u32::from(token1.decimals));
    Ok(DecodedPrice { num, den })
}

/// Convenience wrapper returning the price at working (`f64`) precision.
pub fn decode_spot_price(
    sqrt_price_x96: &BigUint,
    token0: &TokenMeta,
    token1: &TokenMeta,
) -> Result<f64> {
    Ok(decode_sqrt_price(sqrt_price_x96, token0, token1)?.to_f64())
}

impl DecodedPrice {
    /// Rounds to `f64`. The 40-digit intermediate keeps the result
    /// correctly rounded for every representable input.
    pub fn to_f64(&self) -> f64 {
        self.to_decimal_string(40)
            .parse()
            .expect("scientific rendering always parses")
    }

    /// Renders the exact price in scientific notation with `sig_digits`
    /// significant digits, rounding half-even at the last digit.
    pub fn to_decimal_string(&self, sig_digits: usize) -> String {
        let sig = sig_digits.max(1);
        let (digits, exp) = self.scientific_digits(sig);
        if sig == 1 {
            return format!("{digits}e{exp}");
        }
        format!("{}.{}e{}", &digits[..1], &digits[1..], exp)
    }

    /// Exact ordering between two decoded prices.
    pub fn cmp_exact(&self, other: &DecodedPrice) -> std::cmp::Ordering {
        (&self.num * &other.den).cmp(&(&other.num * &self.den))
    }

    /// Returns `sig` decimal digits `d` and exponent `e` such that the
    /// price equals `0.d1 d2 ... × 10^(e+1)` up to half-even rounding.
    fn scientific_digits(&self, sig: usize) -> (String, i64) {
        let ten = BigUint::from(10u8);

        // Locate the leading digit: find e with den*10^e <= num < den*10^(e+1).
        let mut exp: i64 = 0;
        let mut den_scaled = self.den.clone();
        let mut num_scaled = self.num.clone();
        if self.num >= self.den {
            while num_scaled >= &den_scaled * &ten {
                den_scaled *= &ten;
                exp += 1;
            }
        } else {
            while num_scaled < den_scaled {
                num_scaled *= &ten;
                exp -= 1;
            }
        }

        // q = round_half_even(num_scaled * 10^(sig-1) / den_scaled) has
        // exactly `sig` digits because num_scaled/den_scaled is in [1, 10).
        let t = num_scaled * pow10((sig - 1) as u32);
        let mut q = &t / &den_scaled;
        let r = &t % &den_scaled;
        let twice = &r * 2u8;
        let round_up = match twice.cmp(&den_scaled) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Equal => (&q % 2u8) == BigUint::one(),
            std::cmp::Ordering::Less => false,
        };
        if round_up {
            q += 1u8;
        }
        let mut digits = q.to_string();
        if digits.len() > sig {
            // Carried into a new leading digit (9.99... -> 10.0...).
            digits.truncate(sig);
            exp += 1;
        }
        (digits, exp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn token(decimals: u8) -> TokenMeta {
        TokenMeta::new("T", decimals, false).unwrap()
    }

    fn q96() -> BigUint {
        BigUint::one() << 96u32
    }

    #[test]
    fn unit_sqrt_price_decodes_to_one() {
        let p = decode_sqrt_price(&q96(), &token(18), &token(18)).unwrap();
        assert_eq!(p.to_f64(), 1.0);
        assert_eq!(p.to_decimal_string(6), "1.00000e0");
    }

    #[test]
    fn doubled_sqrt_price_decodes_to_four() {
        let sp = BigUint::one() << 97u32;
        let p = decode_sqrt_price(&sp, &token(6), &token(6)).unwrap();
        assert_eq!(p.to_f64(), 4.0);
    }

    #[test]
    fn zero_input_is_rejected() {
        let err = decode_sqrt_price(&BigUint::zero(), &token(6), &token(18)).unwrap_err();
        assert!(matches!(err, MavError::InvalidPrice(_)));
    }

    #[test]
    fn oversized_input_is_rejected() {
        let sp = BigUint::one() << 161u32;
        let err = decode_sqrt_price(&sp, &token(6), &token(18)).unwrap_err();
        assert!(matches!(err, MavError::InvalidInput(_)));
    }

    #[test]
    fn half_even_rounding_at_last_digit() {
        // 0.125 rounds to 0.12 at two significant digits (even neighbor).
        let p = DecodedPrice {
            num: BigUint::from(125u32),
            den: BigUint::from(1000u32),
        };
        assert_eq!(p.to_decimal_string(2), "1.2e-1");
        // 0.135 rounds to 0.14 (again the even neighbor).
        let p = DecodedPrice {
            num: BigUint::from(135u32),
            den: BigUint::from(1000u32),
        };
        assert_eq!(p.to_decimal_string(2), "1.4e-1");
    }

    #[test]
    fn real_shaped_input_matches_long_division_oracle() {
        // A 6/18-decimal pair, sqrtPriceX96 in the realistic magnitude
        // range for such pools. The oracle below recomputes the decimal
        // expansion by schoolbook long division, one digit at a time,
        // sharing no code with the decoder.
        let sp: BigUint = "1584563250285286751870879006720113".parse().unwrap();
        let token0 = token(6);
        let token1 = token(18);

        let num = &sp * &sp * pow10(6);
        let den = (BigUint::one() << 192u32) * pow10(18);

        // Long-division oracle: 35 truncated significant digits.
        let sig = 35usize;
        let ten = BigUint::from(10u8);
        let mut exp: i64 = 0;
        let mut aligned = num.clone();
        let mut den_shifted = den.clone();
        if num >= den {
            while aligned >= &den_shifted * &ten {
                den_shifted *= &ten;
                exp += 1;
            }
        } else {
            while aligned < den_shifted {
                aligned *= &ten;
                exp -= 1;
            }
        }
        let mut digits = String::new();
        let mut r = aligned;
        for _ in 0..sig {
            let d = &r / &den_shifted;
            digits.push_str(&d.to_string());
            r = (&r % &den_shifted) * &ten;
        }

        let decoded = decode_sqrt_price(&sp, &token0, &token1).unwrap();
        let rendered = decoded.to_decimal_string(sig);
        let (mantissa, rexp) = rendered.split_once('e').unwrap();
        let impl_digits: u128 = mantissa.replace('.', "").parse().unwrap();
        let oracle_digits: u128 = digits.parse().unwrap();

        assert_eq!(rexp.parse::<i64>().unwrap(), exp);
        // Half-even rounding differs from truncation by at most one ulp.
        assert!(impl_digits == oracle_digits || impl_digits == oracle_digits + 1);
        assert!(digits.len() >= 30);
    }

    #[test]
    fn decimal_adjustment_orientation() {
        // sqrtPriceX96 = 2^96 with (d0=6, d1=18) means a raw price of 1
        // and an adjusted price of 10^(6-18) = 1e-12.
        let p = decode_sqrt_price(&q96(), &token(6), &token(18)).unwrap();
        assert_eq!(p.to_f64(), 1e-12);
    }
}
