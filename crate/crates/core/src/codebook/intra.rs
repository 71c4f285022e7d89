//! Intra-class signature matrices `W_c` (`N_c × K_c`, unit-norm columns).

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64};
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntraClassMethod {
    /// i.i.d. uniform phases, every entry of modulus `1/√N_c`.
    UnitModulusRandom,
    /// `±1/√N_c` entries taken from Gold pseudo-noise sequences, one
    /// initialization per column.
    BinaryPn,
}

const MAX_DRAWS_PER_COLUMN: usize = 1 << 16;

/// Builds `W_c`. `stream` separates classes that share a seed.
pub fn build_intra_class_codes(
    width: usize,
    users: usize,
    method: IntraClassMethod,
    seed: u64,
    stream: u64,
) -> Result<CMat> {
    if width == 0 {
        return Err(Error::InvalidSize("intra-class code length must be positive".into()));
    }
    if method == IntraClassMethod::BinaryPn {
        let available = if width >= 127 { u128::MAX } else { 1u128 << width };
        if users as u128 > available {
            return Err(Error::ExhaustedCodespace {
                requested: users,
                length: width,
                available,
            });
        }
    }
    let scale = 1.0 / (width as f64).sqrt();
    let mut out = CMat::zeros((width, users));
    let mut rng = stream_rng(seed, Stream::IntraClassCodes, stream, 0);
    let mut pn_init = (seed ^ stream.wrapping_mul(0x9E37_79B9)) as u32 & 0x7FFF_FFFF;
    for k in 0..users {
        let mut draws = 0;
        let column = loop {
            draws += 1;
            if draws > MAX_DRAWS_PER_COLUMN {
                return Err(Error::ExhaustedCodespace {
                    requested: users,
                    length: width,
                    available: k as u128,
                });
            }
            let candidate: CVec = match method {
                IntraClassMethod::UnitModulusRandom => CVec::from_shape_fn(width, |_| {
                    C64::from_polar(scale, rng.random::<f64>() * 2.0 * PI)
                }),
                IntraClassMethod::BinaryPn => {
                    let bits = gold_sequence(pn_init, width);
                    pn_init = pn_init.wrapping_add(1) & 0x7FFF_FFFF;
                    CVec::from_iter(
                        bits.into_iter()
                            .map(|b| C64::new(if b { -scale } else { scale }, 0.0)),
                    )
                }
            };
            let duplicate = (0..k).any(|j| {
                out.column(j)
                    .iter()
                    .zip(candidate.iter())
                    .all(|(a, b)| (a - b).norm() < 1e-12)
            });
            if !duplicate {
                break candidate;
            }
        };
        out.column_mut(k).assign(&column);
    }
    Ok(out)
}

/// Length-`len` Gold sequence with the LTE generator polynomials and a
/// 1600-sample fast-forward, initialized with `c_init`.
pub fn gold_sequence(c_init: u32, len: usize) -> Vec<bool> {
    const NC: usize = 1600;
    let total = NC + len + 31;
    let mut x1 = vec![0u8; total];
    let mut x2 = vec![0u8; total];
    x1[0] = 1;
    for (i, bit) in x2.iter_mut().take(31).enumerate() {
        *bit = ((c_init >> i) & 1) as u8;
    }
    for n in 0..total - 31 {
        x1[n + 31] = (x1[n + 3] + x1[n]) % 2;
        x2[n + 31] = (x2[n + 3] + x2[n + 2] + x2[n + 1] + x2[n]) % 2;
    }
    (0..len).map(|n| (x1[n + NC] + x2[n + NC]) % 2 == 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column_norms(w: &CMat) -> Vec<f64> {
        w.columns()
            .into_iter()
            .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .collect()
    }

    #[test]
    fn unit_modulus_columns_have_unit_norm() {
        let w = build_intra_class_codes(3, 6, IntraClassMethod::UnitModulusRandom, 1, 0).unwrap();
        assert_eq!(w.dim(), (3, 6));
        for z in w.iter() {
            assert!((z.norm() - 1.0 / 3f64.sqrt()).abs() < 1e-14);
        }
        for n in column_norms(&w) {
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_entry_is_a_unit_phasor() {
        for method in [IntraClassMethod::UnitModulusRandom, IntraClassMethod::BinaryPn] {
            let w = build_intra_class_codes(1, 1, method, 5, 0).unwrap();
            assert!((w[[0, 0]].norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn binary_pn_exhausts_small_codespace() {
        let err = build_intra_class_codes(2, 5, IntraClassMethod::BinaryPn, 1, 0).unwrap_err();
        assert!(matches!(err, Error::ExhaustedCodespace { available: 4, .. }));
    }

    #[test]
    fn binary_pn_fills_the_whole_codespace_with_distinct_columns() {
        let w = build_intra_class_codes(2, 4, IntraClassMethod::BinaryPn, 3, 0).unwrap();
        for i in 0..4 {
            for j in 0..i {
                let same = w.column(i).iter().zip(w.column(j)).all(|(a, b)| a == b);
                assert!(!same, "columns {i} and {j} coincide");
            }
        }
        assert!(w.iter().all(|z| (z.re.abs() - 0.5f64.sqrt()).abs() < 1e-15 && z.im == 0.0));
    }

    #[test]
    fn same_seed_reproduces_bit_identical_codes() {
        let a = build_intra_class_codes(3, 18, IntraClassMethod::UnitModulusRandom, 42, 2).unwrap();
        let b = build_intra_class_codes(3, 18, IntraClassMethod::UnitModulusRandom, 42, 2).unwrap();
        assert_eq!(a, b);
        let other = build_intra_class_codes(3, 18, IntraClassMethod::UnitModulusRandom, 42, 1).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn more_users_extend_without_changing_earlier_columns() {
        let a = build_intra_class_codes(3, 4, IntraClassMethod::UnitModulusRandom, 9, 1).unwrap();
        let b = build_intra_class_codes(3, 10, IntraClassMethod::UnitModulusRandom, 9, 1).unwrap();
        assert_eq!(a, b.slice(ndarray::s![.., 0..4]));
    }

    #[test]
    fn gold_sequence_depends_on_initialization() {
        assert_ne!(gold_sequence(1, 32), gold_sequence(2, 32));
        assert_eq!(gold_sequence(77, 16), gold_sequence(77, 16));
    }
}
