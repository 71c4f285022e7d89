use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseKind {
    Dft,
    WalshHadamard,
}

/// `N × N` matrix with orthonormal columns.
#[derive(Debug, Clone)]
pub struct OrthogonalBase {
    pub kind: BaseKind,
    columns: CMat,
}

impl OrthogonalBase {
    pub fn len(&self) -> usize {
        self.columns.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn matrix(&self) -> &CMat {
        &self.columns
    }
}

/// Unit-norm DFT or Sylvester Walsh-Hadamard base of size `n`.
pub fn build_orthogonal_base(n: usize, kind: BaseKind) -> Result<OrthogonalBase> {
    if n == 0 {
        return Err(Error::InvalidSize("spreading length must be positive".into()));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let columns = match kind {
        BaseKind::Dft => CMat::from_shape_fn((n, n), |(u, v)| {
            let phase = -2.0 * PI * ((u * v) % n) as f64 / n as f64;
            C64::from_polar(scale, phase)
        }),
        BaseKind::WalshHadamard => {
            if !n.is_power_of_two() {
                return Err(Error::InvalidSize(format!(
                    "Walsh-Hadamard base needs a power-of-two length, got {n}"
                )));
            }
            // Sylvester ordering: H[u][v] = (-1)^{popcount(u & v)}
            CMat::from_shape_fn((n, n), |(u, v)| {
                let sign = if (u & v).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                C64::new(sign * scale, 0.0)
            })
        }
    };
    Ok(OrthogonalBase { kind, columns })
}

/// Contiguous, class-ordered column slices of the base.
pub fn partition_base(base: &OrthogonalBase, dims: &[usize]) -> Result<Vec<CMat>> {
    let total: usize = dims.iter().sum();
    if total != base.len() {
        return Err(Error::DimensionMismatch(format!(
            "sub-base widths sum to {total}, base has {} columns",
            base.len()
        )));
    }
    if let Some(pos) = dims.iter().position(|&d| d == 0) {
        return Err(Error::DimensionMismatch(format!(
            "class {} has an empty sub-base",
            pos + 1
        )));
    }
    let mut start = 0;
    Ok(dims
        .iter()
        .map(|&d| {
            let slice = base.columns.slice(ndarray::s![.., start..start + d]).to_owned();
            start += d;
            slice
        })
        .collect())
}
