//! Classical side of order finding: modular exponentiation, co-primes,
//! order recovery from a measured argument register, and factor extraction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// `c^x mod n` by square-and-multiply.
pub fn mod_exp(c: u64, mut x: u64, n: u64) -> Result<u64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "modulus must be >= 2, got {n}"
        )));
    }
    let n128 = n as u128;
    let mut base = (c % n) as u128;
    let mut acc: u128 = 1;
    while x > 0 {
        if x & 1 == 1 {
            acc = acc * base % n128;
        }
        base = base * base % n128;
        x >>= 1;
    }
    Ok(acc as u64)
}

/// All `1 < c < n` with `gcd(c, n) = 1`, ascending.
pub fn coprimes(n: u64) -> Vec<u64> {
    (2..n).filter(|&c| gcd(c, n) == 1).collect()
}

/// Smallest order consistent with `z = a 2^n / r`; `None` for `z = 0`.
pub fn order_from_measurement(z: u64, n: u32) -> Result<Option<u64>> {
    let m = 1u64
        .checked_shl(n)
        .ok_or_else(|| Error::InvalidArgument(format!("register width {n} too large")))?;
    if z >= m {
        return Err(Error::InvalidArgument(format!(
            "measured value {z} does not fit in {n} bits"
        )));
    }
    if z == 0 {
        return Ok(None);
    }
    Ok(Some(m / gcd(z, m)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorStatus {
    Success,
    Failure,
    Trivial,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorResult {
    pub status: FactorStatus,
    pub order: Option<u64>,
    /// Ascending.
    pub factors: Option<(u64, u64)>,
}

impl FactorResult {
    fn failure(order: Option<u64>) -> Self {
        FactorResult {
            status: FactorStatus::Failure,
            order,
            factors: None,
        }
    }
}

/// Factors from a candidate order: odd `r` fails; otherwise the nontrivial
/// divisor among `gcd(c^{r/2} ∓ 1, n)` is returned, and `trivial` reports
/// that both divisors are 1 or `n`.
pub fn factors_from_order(c: u64, r: u64, n: u64) -> Result<FactorResult> {
    if r == 0 {
        return Err(Error::InvalidArgument("order must be >= 1".into()));
    }
    if r % 2 == 1 {
        return Ok(FactorResult::failure(Some(r)));
    }
    let h = mod_exp(c, r / 2, n)?;
    let minus = gcd((h + n - 1) % n, n);
    let plus = gcd((h + 1) % n, n);
    for p in [minus, plus] {
        if 1 < p && p < n {
            let q = n / p;
            return Ok(FactorResult {
                status: FactorStatus::Success,
                order: Some(r),
                factors: Some((p.min(q), p.max(q))),
            });
        }
    }
    Ok(FactorResult {
        status: FactorStatus::Trivial,
        order: Some(r),
        factors: None,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShorInstance {
    pub n: u64,
    pub c: u64,
    /// Argument-register width.
    pub arg_bits: u32,
    /// Function-register width.
    pub fn_bits: u32,
}

impl ShorInstance {
    /// Generic widths `2⌈log2 N⌉` and `⌈log2 N⌉`.
    pub fn new(n: u64, c: u64) -> Result<Self> {
        if !(1 < c && c < n) || gcd(n, c) != 1 {
            return Err(Error::InvalidArgument(format!(
                "C={c} is not a co-prime base for N={n}"
            )));
        }
        let w = 64 - (n - 1).leading_zeros();
        Ok(ShorInstance {
            n,
            c,
            arg_bits: 2 * w,
            fn_bits: w,
        })
    }

    /// The two compiled N = 15 circuits use a 2-qubit argument register.
    pub fn compiled(c: u64) -> Result<Self> {
        let fn_bits = match c {
            11 => 4,
            2 => 2,
            other => return Err(Error::NotCompiled(other)),
        };
        Ok(ShorInstance {
            n: 15,
            c,
            arg_bits: 2,
            fn_bits,
        })
    }

    /// Argument-register outputs the compiled circuit can produce, as
    /// reported bit strings.
    pub fn reachable_outputs(&self) -> Result<Vec<String>> {
        match (self.n, self.c) {
            (15, 11) => Ok(vec!["00".into(), "10".into()]),
            (15, 2) => Ok(vec!["00".into(), "01".into(), "10".into(), "11".into()]),
            (_, c) => Err(Error::NotCompiled(c)),
        }
    }
}

/// One argument-register readout. `raw_bits` follow the register ket order
/// (x_{n-1} … x0); the reported string is its reversal, read as a binary
/// number to give `z`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementOutcome {
    pub raw_bits: Vec<u8>,
    pub reported_bits: Vec<u8>,
    pub z: u64,
}

impl MeasurementOutcome {
    pub fn from_raw(raw_bits: Vec<u8>) -> Self {
        let reported_bits: Vec<u8> = raw_bits.iter().rev().cloned().collect();
        let z = reported_bits
            .iter()
            .fold(0u64, |acc, &b| (acc << 1) | b as u64);
        MeasurementOutcome {
            raw_bits,
            reported_bits,
            z,
        }
    }

    pub fn from_reported(reported: &str) -> Result<Self> {
        let bits: Vec<u8> = reported
            .chars()
            .map(|ch| match ch {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(Error::InvalidArgument(format!(
                    "not a bit string: {reported}"
                ))),
            })
            .collect::<Result<_>>()?;
        Ok(Self::from_raw(bits.into_iter().rev().collect()))
    }

    pub fn reported_string(&self) -> String {
        self.reported_bits.iter().map(|b| b.to_string()).collect()
    }

    pub fn raw_string(&self) -> String {
        self.raw_bits.iter().map(|b| b.to_string()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifiedOutcome {
    pub outcome: MeasurementOutcome,
    pub result: FactorResult,
}

/// Classification of every reachable output of a compiled instance, in
/// ascending order of the reported string.
pub fn classify_outcomes(instance: &ShorInstance) -> Result<Vec<ClassifiedOutcome>> {
    instance
        .reachable_outputs()?
        .iter()
        .map(|s| classify_reported(instance, s))
        .collect()
}

pub fn classify_reported(instance: &ShorInstance, reported: &str) -> Result<ClassifiedOutcome> {
    let outcome = MeasurementOutcome::from_reported(reported)?;
    let result = match order_from_measurement(outcome.z, instance.arg_bits)? {
        None => FactorResult::failure(None),
        // a candidate that is not a period of C^x mod N yields no factors
        Some(r) if mod_exp(instance.c, r, instance.n)? != 1 => FactorResult {
            status: FactorStatus::Trivial,
            order: Some(r),
            factors: None,
        },
        Some(r) => factors_from_order(instance.c, r, instance.n)?,
    };
    Ok(ClassifiedOutcome { outcome, result })
}

pub const TABLE1_EXPONENTS: [u64; 4] = [0, 1, 2, 4];

/// `C^x mod 15` for each co-prime `C` (columns) and `x ∈ {0, 1, 2, 4}` (rows).
pub fn table1() -> Vec<(u64, Vec<u64>)> {
    let cs = coprimes(15);
    TABLE1_EXPONENTS
        .iter()
        .map(|&x| {
            let row = cs
                .iter()
                .map(|&c| mod_exp(c, x, 15).expect("modulus 15"))
                .collect();
            (x, row)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mod_exp_examples() {
        assert_eq!(mod_exp(2, 4, 15).unwrap(), 1);
        assert_eq!(mod_exp(7, 2, 15).unwrap(), 4);
        for c in coprimes(15) {
            assert_eq!(mod_exp(c, 0, 15).unwrap(), 1);
        }
        assert!(mod_exp(3, 2, 1).is_err());
        assert_eq!(mod_exp(u64::MAX - 1, 3, u64::MAX).unwrap(), u64::MAX - 1);
    }

    #[test]
    fn coprime_sets() {
        assert_eq!(coprimes(15), vec![2, 4, 7, 8, 11, 13, 14]);
        assert_eq!(coprimes(4), vec![3]);
        assert_eq!(coprimes(13), (2..13).collect::<Vec<_>>());
    }

    #[test]
    fn orders_from_measurements() {
        assert_eq!(order_from_measurement(2, 2).unwrap(), Some(2));
        assert_eq!(order_from_measurement(0, 2).unwrap(), None);
        assert_eq!(order_from_measurement(1, 2).unwrap(), Some(4));
        assert_eq!(order_from_measurement(3, 2).unwrap(), Some(4));
        assert!(order_from_measurement(4, 2).is_err());
    }

    #[test]
    fn factor_examples() {
        let r = factors_from_order(11, 2, 15).unwrap();
        assert_eq!(r.status, FactorStatus::Success);
        assert_eq!(r.factors, Some((3, 5)));
        assert_eq!(factors_from_order(2, 4, 15).unwrap().factors, Some((3, 5)));
        assert_eq!(
            factors_from_order(2, 3, 15).unwrap().status,
            FactorStatus::Failure
        );
        // 14 ≡ −1: both gcds are degenerate
        assert_eq!(
            factors_from_order(14, 2, 15).unwrap().status,
            FactorStatus::Trivial
        );
    }

    #[test]
    fn bit_reversal() {
        let o = MeasurementOutcome::from_raw(vec![0, 1]);
        assert_eq!(o.reported_bits, vec![1, 0]);
        assert_eq!(o.z, 2);
        assert_eq!(o.reported_string(), "10");
        assert_eq!(MeasurementOutcome::from_reported("10").unwrap(), o);
    }

    #[test]
    fn not_compiled_instance() {
        assert!(matches!(
            ShorInstance::compiled(7),
            Err(Error::NotCompiled(7))
        ));
        assert!(ShorInstance::new(15, 5).is_err());
        let i = ShorInstance::new(15, 7).unwrap();
        assert_eq!((i.arg_bits, i.fn_bits), (8, 4));
    }

    mod properties {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn mod_exp_matches_repeated_multiplication(c in 0u64..1000, x in 0u64..40, n in 2u64..1000) {
                let naive = (0..x).fold(1 % n, |acc, _| acc * (c % n) % n);
                prop_assert_eq!(mod_exp(c, x, n).unwrap(), naive);
            }

            #[test]
            fn recovered_factors_divide_n(n in 3u64..200) {
                for c in coprimes(n) {
                    prop_assert_eq!(gcd(c, n), 1);
                    let r = (1..=n).find(|&r| mod_exp(c, r, n).unwrap() == 1).unwrap();
                    let res = factors_from_order(c, r, n).unwrap();
                    if let Some((p, q)) = res.factors {
                        prop_assert_eq!(p * q, n);
                        prop_assert!(p > 1 && q > 1);
                        prop_assert_eq!(res.status, FactorStatus::Success);
                    }
                }
            }

            #[test]
            fn extracted_orders_divide_the_register_size(bits in 1u32..8, z in 0u64..256) {
                let z = z % (1u64 << bits);
                if let Some(r) = order_from_measurement(z, bits).unwrap() {
                    prop_assert!(r >= 1);
                    prop_assert_eq!((1u64 << bits) % r, 0);
                }
            }
        }
    }
}
