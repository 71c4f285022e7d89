//! Resource-element geometry: where the `N` spread samples of one data symbol
//! sit in the OFDM grid.
//!
//! The grid is a single-RB-wide sub-band made of `blocks` resource blocks that
//! are adjacent in time (TTI bundling). A resource element is addressed by a
//! global OFDM symbol index `t` and a subcarrier index `n` inside the sub-band.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CVec, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Re {
    /// OFDM symbol index.
    pub t: usize,
    /// Subcarrier index.
    pub n: usize,
}

impl Re {
    pub fn new(t: usize, n: usize) -> Self {
        Re { t, n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbGeometry {
    /// Subcarriers per resource block.
    #[serde(default = "default_subcarriers")]
    pub subcarriers: usize,
    /// OFDM symbols per resource block.
    #[serde(default = "default_symbols")]
    pub symbols: usize,
    /// Number of time-adjacent resource blocks in the region.
    pub blocks: usize,
}

fn default_subcarriers() -> usize {
    12
}

fn default_symbols() -> usize {
    14
}

impl RbGeometry {
    pub fn contains(&self, re: Re) -> bool {
        re.n < self.subcarriers && re.t < self.symbols * self.blocks
    }

    pub fn block_of(&self, re: Re) -> usize {
        re.t / self.symbols
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataLayout {
    /// Consecutive OFDM symbols on one subcarrier.
    Time,
    /// Consecutive subcarriers in one OFDM symbol.
    Frequency,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPlacement {
    /// Resource block hosting the spread samples.
    pub block: usize,
    /// First OFDM symbol inside that block.
    pub first_symbol: usize,
    /// First subcarrier.
    pub first_subcarrier: usize,
    pub layout: DataLayout,
}

/// The ordered data resource-element set `𝒩`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceMap {
    pub geometry: RbGeometry,
    elements: Vec<Re>,
}

impl ResourceMap {
    /// `len` neighbouring REs laid out from `placement`.
    pub fn contiguous(geometry: RbGeometry, placement: DataPlacement, len: usize) -> Result<Self> {
        let t0 = placement.block * geometry.symbols + placement.first_symbol;
        let elements = (0..len)
            .map(|i| match placement.layout {
                DataLayout::Time => Re::new(t0 + i, placement.first_subcarrier),
                DataLayout::Frequency => Re::new(t0, placement.first_subcarrier + i),
            })
            .collect::<Vec<_>>();
        if placement.block >= geometry.blocks {
            return Err(Error::InvalidConfig(format!(
                "data block {} outside the {}-block region",
                placement.block, geometry.blocks
            )));
        }
        let inside_block = match placement.layout {
            DataLayout::Time => placement.first_symbol + len <= geometry.symbols,
            DataLayout::Frequency => placement.first_symbol < geometry.symbols,
        };
        if !inside_block {
            return Err(Error::InvalidConfig(
                "data REs must stay inside their resource block".into(),
            ));
        }
        Self::from_elements(geometry, elements)
    }

    pub fn from_elements(geometry: RbGeometry, elements: Vec<Re>) -> Result<Self> {
        if let Some(bad) = elements.iter().find(|re| !geometry.contains(**re)) {
            return Err(Error::InvalidConfig(format!(
                "RE (t={}, n={}) outside the configured region",
                bad.t, bad.n
            )));
        }
        let mut sorted = elements.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != elements.len() {
            return Err(Error::InvalidConfig("data REs must be distinct".into()));
        }
        Ok(ResourceMap { geometry, elements })
    }

    pub fn elements(&self) -> &[Re] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// OFDM symbols touched by the data REs.
    pub fn symbols(&self) -> Vec<usize> {
        let mut t: Vec<usize> = self.elements.iter().map(|re| re.t).collect();
        t.sort_unstable();
        t.dedup();
        t
    }
}

/// Scaled spread samples `x_{k,t,n} = √P_c [c_k]_i s_k` on each RE of `𝒩`.
pub fn map_to_resources(
    code: &CVec,
    symbol: C64,
    power_w: f64,
    map: &ResourceMap,
) -> Result<Vec<(Re, C64)>> {
    if code.len() != map.len() {
        return Err(Error::MapSizeMismatch {
            map: map.len(),
            code: code.len(),
        });
    }
    let amp = power_w.sqrt();
    Ok(map
        .elements
        .iter()
        .zip(code.iter())
        .map(|(re, ci)| (*re, *ci * symbol * amp))
        .collect())
}
