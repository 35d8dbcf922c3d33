use serde::{Deserialize, Serialize};

use super::SiteSet;
use crate::error::{Error, Result};

/// Single-site distribution. Every family has `0` as the infimum of its
/// support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "lowercase", deny_unknown_fields)]
pub enum DisorderFamily {
    #[serde(rename = "uniform01")]
    Uniform01,
    /// Value `1` with probability `p`, else `0`.
    Bernoulli {
        p: f64,
    },
    Exponential {
        rate: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderSpec {
    pub family: DisorderFamily,
    pub coupling: f64,
    pub master_seed: u64,
}

impl DisorderSpec {
    pub fn new(family: DisorderFamily, coupling: f64, master_seed: u64) -> Result<Self> {
        let spec = DisorderSpec {
            family,
            coupling,
            master_seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.coupling >= 0.0 && self.coupling.is_finite()) {
            return Err(Error::invalid(format!(
                "coupling must be finite and >= 0, got {}",
                self.coupling
            )));
        }
        match self.family {
            DisorderFamily::Uniform01 => Ok(()),
            // p = 1 would move the infimum of the support to 1
            DisorderFamily::Bernoulli { p } if (0.0..1.0).contains(&p) => Ok(()),
            DisorderFamily::Bernoulli { p } => Err(Error::invalid(format!("Bernoulli p must lie in [0, 1), got {p}"))),
            DisorderFamily::Exponential { rate } if rate > 0.0 && rate.is_finite() => Ok(()),
            DisorderFamily::Exponential { rate } => {
                Err(Error::invalid(format!("exponential rate must be positive, got {rate}")))
            }
        }
    }

    /// Whether `P([0, ε)) >= C ε^κ` holds with `κ = 1`. Bernoulli has an atom
    /// at 0 but no mass in `(0, ε)`, so only the upper tail bound applies.
    pub fn satisfies_regularity(&self) -> bool {
        !matches!(self.family, DisorderFamily::Bernoulli { .. })
    }

    /// Largest possible single-site value, if bounded.
    pub fn support_sup(&self) -> Option<f64> {
        match self.family {
            DisorderFamily::Uniform01 | DisorderFamily::Bernoulli { .. } => Some(1.0),
            DisorderFamily::Exponential { .. } => None,
        }
    }

    fn inverse_cdf(&self, u: f64) -> f64 {
        match self.family {
            DisorderFamily::Uniform01 => u,
            DisorderFamily::Bernoulli { p } => {
                if u < p {
                    1.0
                } else {
                    0.0
                }
            }
            DisorderFamily::Exponential { rate } => -(-u).ln_1p() / rate,
        }
    }
}

/// SplitMix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform variate in `(0, 1)` attached to `(seed, realization, index)`.
///
/// `h = mix(mix(mix(seed) ^ realization) ^ index)` with the SplitMix64
/// finaliser as `mix`; the top 53 bits of `h` give `u = (⌊h / 2^11⌋ + 1/2) 2^-53`.
pub fn site_uniform(seed: u64, realization: u64, index: u64) -> f64 {
    let h = splitmix64(splitmix64(splitmix64(seed) ^ realization) ^ index);
    ((h >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Potential values `ω(n)` (before the coupling) for one realization.
pub fn sample_disorder(spec: &DisorderSpec, set: &SiteSet, realization: u64) -> Vec<f64> {
    (0..set.len() as u64)
        .map(|i| spec.inverse_cdf(site_uniform(spec.master_seed, realization, i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::centered_box;

    #[test]
    fn degenerate_bernoulli_is_zero() {
        let s = DisorderSpec::new(DisorderFamily::Bernoulli { p: 0.0 }, 1.0, 3).unwrap();
        let v = sample_disorder(&s, &centered_box(2, 3).unwrap(), 0);
        assert!(v.iter().all(|&x| x == 0.0));
        assert!(!s.satisfies_regularity());
    }

    #[test]
    fn deterministic_and_order_free() {
        let s = DisorderSpec::new(DisorderFamily::Uniform01, 1.0, 42).unwrap();
        let set = centered_box(1, 10).unwrap();
        let forward: Vec<_> = (0..5).map(|r| sample_disorder(&s, &set, r)).collect();
        let backward: Vec<_> = (0..5).rev().map(|r| sample_disorder(&s, &set, r)).collect();
        for r in 0..5 {
            assert_eq!(forward[r], backward[4 - r]);
        }
        assert_ne!(forward[0], forward[1]);
    }

    #[test]
    fn uniform_mean() {
        let s = DisorderSpec::new(DisorderFamily::Uniform01, 1.0, 7).unwrap();
        let set = centered_box(1, 4999).unwrap();
        let v = sample_disorder(&s, &set, 0);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
        assert!(v.iter().all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn exponential_mean() {
        let s = DisorderSpec::new(DisorderFamily::Exponential { rate: 2.0 }, 1.0, 9).unwrap();
        let set = centered_box(1, 4999).unwrap();
        let v = sample_disorder(&s, &set, 3);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        assert!((mean - 0.5).abs() < 0.03, "mean {mean}");
    }

    #[test]
    fn mixer_reference_values() {
        // SplitMix64 with state 0: first output of the reference generator
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
    }

    #[test]
    fn validation() {
        assert!(DisorderSpec::new(DisorderFamily::Bernoulli { p: 1.0 }, 1.0, 0).is_err());
        assert!(DisorderSpec::new(DisorderFamily::Exponential { rate: 0.0 }, 1.0, 0).is_err());
        assert!(DisorderSpec::new(DisorderFamily::Uniform01, -1.0, 0).is_err());
    }
}
