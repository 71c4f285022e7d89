//! Per-path spatial correlation `R_{k,l}^α` for a uniform linear array.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SpatialModel {
    /// `R = σ_l² I_M`.
    Identity,
    /// Physical model: `P = round(dims_ratio · M)` steering directions.
    Physical {
        #[serde(default = "default_ratio")]
        dims_ratio: f64,
    },
}

fn default_ratio() -> f64 {
    0.5
}

impl Default for SpatialModel {
    fn default() -> Self {
        SpatialModel::Physical { dims_ratio: default_ratio() }
    }
}

/// Unit-norm half-wavelength ULA response at angle `theta` (radians from broadside).
pub fn steering_vector(antennas: usize, theta: f64) -> Vec<C64> {
    let scale = 1.0 / (antennas as f64).sqrt();
    (0..antennas)
        .map(|m| C64::from_polar(scale, -PI * m as f64 * theta.sin()))
        .collect()
}

/// `R = (σ² M / P) A A^H` with `A` the `P` steering vectors at `angles`.
pub fn build_spatial_corr(antennas: usize, angles: &[f64], variance: f64) -> Result<CMat> {
    let dims = angles.len();
    if dims == 0 || dims > antennas {
        return Err(Error::InvalidDims(format!(
            "need 1 <= P <= M, got P = {dims}, M = {antennas}"
        )));
    }
    let scale = variance * antennas as f64 / dims as f64;
    let mut r = CMat::zeros((antennas, antennas));
    for &theta in angles {
        let a = steering_vector(antennas, theta);
        for i in 0..antennas {
            let ai = a[i] * scale;
            for j in 0..antennas {
                r[[i, j]] += ai * a[j].conj();
            }
        }
    }
    Ok(r)
}

/// `P` angles uniformly spaced on `[-π/2, π/2)` with a random common offset.
pub fn uniform_angles<R: Rng + ?Sized>(dims: usize, rng: &mut R) -> Vec<f64> {
    let offset: f64 = rng.random();
    (0..dims)
        .map(|p| -PI / 2.0 + (p as f64 + offset) * PI / dims as f64)
        .collect()
}

/// Number of physical dimensions for an `M`-element array.
pub fn physical_dims(antennas: usize, ratio: f64) -> Result<usize> {
    let p = (ratio * antennas as f64).round() as usize;
    if p == 0 || p > antennas {
        return Err(Error::InvalidDims(format!(
            "dims ratio {ratio} gives P = {p} for M = {antennas}"
        )));
    }
    Ok(p)
}

/// Spatial correlation of every path of one user. Angle offsets are drawn
/// from a `(user, path)` stream of `seed`.
pub fn user_spatial_corrs(
    model: SpatialModel,
    antennas: usize,
    variances: &[f64],
    user: usize,
    seed: u64,
) -> Result<Vec<CMat>> {
    variances
        .iter()
        .enumerate()
        .map(|(l, &var)| match model {
            SpatialModel::Identity => Ok(CMat::eye(antennas).mapv(|z| z * var)),
            SpatialModel::Physical { dims_ratio } => {
                let dims = physical_dims(antennas, dims_ratio)?;
                let mut rng = stream_rng(seed, Stream::SpatialAngles, user as u64, l as u64);
                build_spatial_corr(antennas, &uniform_angles(dims, &mut rng), var)
            }
        })
        .collect()
}
