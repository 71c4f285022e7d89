//! Pilot patterns, noisy pilot observation and LMMSE interpolation onto the
//! data resource elements.
//!
//! The pilot grid reserves, inside every resource block, the OFDM symbols
//! that carry no data. User `k` gets one pilot RE per block: symbol row
//! `k / n_sc` of the reserved symbols and subcarrier `(k + b·stagger) mod n_sc`
//! in block `b`. A user's pilot positions therefore do not depend on how many
//! other users are scheduled.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelRealization, SecondOrderStats};
use crate::codebook::{RbGeometry, Re, ResourceMap};
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec};
use crate::rng::complex_normal;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PilotPolicy {
    /// Subcarrier shift applied from one resource block to the next.
    #[serde(default = "default_stagger")]
    pub stagger: usize,
}

fn default_stagger() -> usize {
    1
}

impl Default for PilotPolicy {
    fn default() -> Self {
        PilotPolicy { stagger: default_stagger() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PilotPattern {
    pub geometry: RbGeometry,
    per_user: Vec<Vec<Re>>,
}

impl PilotPattern {
    /// `𝒫_k`, one RE per resource block, in block order.
    pub fn user(&self, k: usize) -> Result<&[Re]> {
        self.per_user.get(k).map(|v| v.as_slice()).ok_or(Error::UnassignedUser(k))
    }

    pub fn users(&self) -> usize {
        self.per_user.len()
    }

    /// `N_p`
    pub fn total(&self) -> usize {
        self.per_user.iter().map(|p| p.len()).sum()
    }

    /// `N_k^p`
    pub fn per_user_count(&self) -> usize {
        self.geometry.blocks
    }

    pub fn all(&self) -> Vec<Re> {
        self.per_user.iter().flatten().copied().collect()
    }
}

/// Symbols (within a block) that no data RE occupies in any block.
pub fn reserved_symbols(data: &ResourceMap) -> Vec<usize> {
    let g = data.geometry;
    let used: BTreeSet<usize> = data.elements().iter().map(|re| re.t % g.symbols).collect();
    (0..g.symbols).filter(|s| !used.contains(s)).collect()
}

/// Number of users the pilot grid can host for this data map.
pub fn pilot_capacity(data: &ResourceMap) -> usize {
    reserved_symbols(data).len() * data.geometry.subcarriers
}

pub fn build_pilot_pattern(data: &ResourceMap, users: usize, policy: &PilotPolicy) -> Result<PilotPattern> {
    let g = data.geometry;
    let rows = reserved_symbols(data);
    let capacity = rows.len() * g.subcarriers;
    if users > capacity {
        return Err(Error::CapacityExceeded { users, capacity });
    }
    let per_user = (0..users)
        .map(|k| {
            let symbol = rows[k / g.subcarriers];
            (0..g.blocks)
                .map(|b| Re::new(b * g.symbols + symbol, (k + b * policy.stagger) % g.subcarriers))
                .collect()
        })
        .collect();
    Ok(PilotPattern { geometry: g, per_user })
}

/// How the receiver learns the channel.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CsiMode {
    /// Noisy pilots (`γ^CE = g P / σ²`) followed by LMMSE interpolation.
    #[default]
    Lmmse,
    /// Noise-free pilots, still interpolated.
    NoiselessPilots,
    /// Genie: `Ĥ_k = H_k`.
    Perfect,
}

/// `Ĥ^p = H^p + n / √γ`. `gamma = None` returns the pilots untouched.
pub fn observe_pilots<R: Rng + ?Sized>(pilots: &CVec, gamma: Option<f64>, rng: &mut R) -> CVec {
    match gamma {
        None => pilots.clone(),
        Some(g) => {
            let scale = 1.0 / g.sqrt();
            pilots.mapv(|h| h + complex_normal(rng) * scale)
        }
    }
}

/// `Ĥ = R^{𝒩𝒫} Q^𝒫 Ĥ^p`.
pub fn lmmse_interpolate(observed: &CVec, r_np: &CMat, q: &CMat) -> Result<CVec> {
    if r_np.ncols() != q.nrows() || q.ncols() != observed.len() {
        return Err(Error::DimensionMismatch(format!(
            "R^NP {:?}, Q {:?}, pilots {}",
            r_np.dim(),
            q.dim(),
            observed.len()
        )));
    }
    Ok(r_np.dot(&q.dot(observed)))
}

#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    pub pilots: CVec,
    pub data: CVec,
    pub gamma_ce: Option<f64>,
}

/// Estimate one user's data-RE channel. `stats` must come from
/// [`SecondOrderStats::build`] unless `mode` is [`CsiMode::Perfect`].
pub fn estimate_channel<R: Rng + ?Sized>(
    stats: &SecondOrderStats,
    realization: &ChannelRealization,
    gamma_ce: f64,
    mode: CsiMode,
    rng: &mut R,
) -> Result<ChannelEstimate> {
    let gamma = match mode {
        CsiMode::Perfect => {
            return Ok(ChannelEstimate {
                pilots: realization.pilots.clone(),
                data: realization.data.clone(),
                gamma_ce: None,
            })
        }
        CsiMode::NoiselessPilots => None,
        CsiMode::Lmmse => Some(gamma_ce),
    };
    let observed = observe_pilots(&realization.pilots, gamma, rng);
    let a = stats.interpolator.as_ref().ok_or_else(|| {
        Error::ModePreconditionViolated("LMMSE estimation needs pilot statistics".into())
    })?;
    if a.ncols() != observed.len() {
        return Err(Error::DimensionMismatch(format!(
            "interpolator {:?}, pilots {}",
            a.dim(),
            observed.len()
        )));
    }
    let data = a.dot(&observed);
    Ok(ChannelEstimate { pilots: observed, data, gamma_ce: gamma })
}
