use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CVec};
use crate::rng::{stream_rng, Stream};

/// Multiple-access schemes compared by the sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Moma,
    Repetition,
    RandomSpreading,
    Fdma,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Moma => "moma",
            Scheme::Repetition => "repetition",
            Scheme::RandomSpreading => "random-spreading",
            Scheme::Fdma => "fdma",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "moma" => Ok(Scheme::Moma),
            "repetition" => Ok(Scheme::Repetition),
            "random-spreading" => Ok(Scheme::RandomSpreading),
            "fdma" => Ok(Scheme::Fdma),
            other => Err(Error::UnknownScheme(other.to_string())),
        }
    }
}

/// What a baseline scheme assigns to its users.
#[derive(Debug, Clone, PartialEq)]
pub enum BaselineAssignment {
    /// One length-`N` unit-norm spreading code per user.
    Spread(Vec<CVec>),
    /// No spreading: each user gets a fraction of the usable bandwidth.
    Narrowband { share: f64 },
}

/// Codes of the comparison schemes.
///
/// Repetition gives every user `1_N/√N`. Random spreading draws independent
/// `±1/√N` chips per user from a `(seed, user)` stream, so the code of user
/// `k` does not depend on how many users exist. FDMA splits
/// `1 − guard_fraction` of the band evenly over the `k` users.
pub fn baseline_codes(scheme: Scheme, n: usize, k: usize, seed: u64, guard_fraction: f64) -> Result<BaselineAssignment> {
    if n == 0 {
        return Err(Error::InvalidSize("spreading length must be positive".into()));
    }
    let amp = 1.0 / (n as f64).sqrt();
    match scheme {
        Scheme::Repetition => Ok(BaselineAssignment::Spread(vec![CVec::from_elem(n, c(amp, 0.0)); k])),
        Scheme::RandomSpreading => Ok(BaselineAssignment::Spread(
            (0..k)
                .map(|u| {
                    let mut rng = stream_rng(seed, Stream::BaselineCodes, u as u64, 0);
                    CVec::from_shape_fn(n, |_| c(if rng.random::<bool>() { amp } else { -amp }, 0.0))
                })
                .collect(),
        )),
        Scheme::Fdma => {
            if k == 0 {
                return Err(Error::InvalidSize("FDMA needs at least one user".into()));
            }
            Ok(BaselineAssignment::Narrowband { share: (1.0 - guard_fraction) / k as f64 })
        }
        Scheme::Moma => Err(Error::UnknownScheme("moma is not a baseline scheme".into())),
    }
}

/// FDMA rate `β log2(1 + snr ‖h‖² / β)` with the per-user power concentrated
/// on its bandwidth share `β` and matched-filter combining of a perfectly
/// known channel `h`.
pub fn fdma_rate(share: f64, snr: f64, channel_energy: f64) -> f64 {
    share * (1.0 + snr * channel_energy / share).log2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vec_norm_sqr;

    #[test]
    fn names_round_trip() {
        for s in [Scheme::Moma, Scheme::Repetition, Scheme::RandomSpreading, Scheme::Fdma] {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!(matches!("cdma".parse::<Scheme>(), Err(Error::UnknownScheme(_))));
    }

    #[test]
    fn baseline_codes_are_unit_norm() {
        for scheme in [Scheme::Repetition, Scheme::RandomSpreading] {
            let BaselineAssignment::Spread(codes) = baseline_codes(scheme, 6, 10, 3, 0.1).unwrap() else {
                panic!("expected codes")
            };
            assert_eq!(codes.len(), 10);
            for code in &codes {
                assert!((vec_norm_sqr(&code.view()) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn random_codes_are_prefix_stable() {
        let BaselineAssignment::Spread(a) = baseline_codes(Scheme::RandomSpreading, 6, 4, 9, 0.1).unwrap() else { panic!() };
        let BaselineAssignment::Spread(b) = baseline_codes(Scheme::RandomSpreading, 6, 9, 9, 0.1).unwrap() else { panic!() };
        assert_eq!(a[..], b[..4]);
    }

    #[test]
    fn fdma_share_and_moma_rejection() {
        assert_eq!(baseline_codes(Scheme::Fdma, 6, 9, 0, 0.1).unwrap(), BaselineAssignment::Narrowband { share: 0.1 });
        assert!(matches!(baseline_codes(Scheme::Moma, 6, 9, 0, 0.1), Err(Error::UnknownScheme(_))));
    }

    #[test]
    fn fdma_rate_limits() {
        assert!((fdma_rate(1.0, 1.0, 1.0) - 1.0).abs() < 1e-15);
        // Shrinking the share trades bandwidth for SNR and always loses rate.
        assert!(fdma_rate(0.5, 3.0, 1.0) < fdma_rate(1.0, 3.0, 1.0));
    }
}
