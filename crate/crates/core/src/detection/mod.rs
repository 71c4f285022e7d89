//! Linear receivers and the exact instantaneous SINR.
//!
//! Everything here works on *effective* channels `C_k H_k`, stacked over
//! the `N` data REs with `M` antennas each. The inter-class structure of the
//! codebook is not assumed anywhere; it only shows up through the numbers.

mod montecarlo;

pub use montecarlo::{
    ergodic_rate, ergodic_rate_mc, sinr_records, symbol_level_check, write_sinr_csv, ChannelDraws, RateEstimate,
    SinrRecord, SymbolLevelResult, UserChannel,
};

use serde::{Deserialize, Serialize};

use crate::codebook::signature_diagonal;
use crate::error::{Error, Result};
use crate::linalg::{hpd_solve, CMat, CVec, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Detector {
    Mf,
    Mmse,
}

impl Detector {
    pub fn name(self) -> &'static str {
        match self {
            Detector::Mf => "mf",
            Detector::Mmse => "mmse",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverSpec {
    /// Detector per class position.
    pub detectors: Vec<Detector>,
    /// `σ²` in watts.
    pub noise_w: f64,
    /// Let the MMSE inverse include every user instead of the own class only.
    /// Off by default; not part of the analyzed receiver.
    #[serde(default)]
    pub mmse_all_classes: bool,
}

impl ReceiverSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_w > 0.0) || !self.noise_w.is_finite() {
            return Err(Error::InvalidConfig(format!("noise power must be positive, got {}", self.noise_w)));
        }
        Ok(())
    }

    pub fn detector(&self, class: usize) -> Result<Detector> {
        self.detectors
            .get(class)
            .copied()
            .ok_or_else(|| Error::InvalidConfig(format!("no detector configured for class {}", class + 1)))
    }
}

/// Static per-user description of the uplink: codes, amplitudes `√(g_k P_c)`
/// and class positions.
#[derive(Debug, Clone)]
pub struct MultiUserSystem {
    pub antennas: usize,
    pub codes: Vec<CVec>,
    pub amps: Vec<f64>,
    pub classes: Vec<usize>,
}

impl MultiUserSystem {
    pub fn new(antennas: usize, codes: Vec<CVec>, amps: Vec<f64>, classes: Vec<usize>) -> Result<Self> {
        if codes.len() != amps.len() || codes.len() != classes.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} codes, {} amplitudes, {} class labels",
                codes.len(),
                amps.len(),
                classes.len()
            )));
        }
        if let Some(c) = codes.iter().find(|c| c.len() != codes[0].len()) {
            return Err(Error::DimensionMismatch(format!(
                "code lengths {} and {} differ",
                c.len(),
                codes[0].len()
            )));
        }
        Ok(MultiUserSystem { antennas, codes, amps, classes })
    }

    pub fn users(&self) -> usize {
        self.codes.len()
    }

    /// `NM`
    pub fn dim(&self) -> usize {
        self.codes.first().map(|c| c.len()).unwrap_or(0) * self.antennas
    }

    /// `C_k h`.
    pub fn spread(&self, k: usize, h: &CVec) -> CVec {
        let d = signature_diagonal(&self.codes[k], self.antennas);
        &d * h
    }

    pub fn spread_all(&self, h: &[CVec]) -> Vec<CVec> {
        (0..self.users()).map(|k| self.spread(k, &h[k])).collect()
    }

    fn members(&self, class: usize, all: bool) -> Vec<usize> {
        (0..self.users()).filter(|&j| all || self.classes[j] == class).collect()
    }
}

fn column_matrix(cols: &[CVec], scale: &[f64]) -> CMat {
    let dim = cols.first().map(|c| c.len()).unwrap_or(0);
    CMat::from_shape_fn((dim, cols.len()), |(i, j)| cols[j][i] * scale[j])
}

/// `r_k` for every user.
///
/// The MMSE vectors of one class come from a single Hermitian factorization:
/// with `G = [√(g_j P) C_j Ĥ_j]_{j∈𝒦}`,
/// `(G G^H + σ² I)^{-1} G = G (G^H G + σ² I)^{-1}`, so only a `|𝒦| × |𝒦|`
/// system is solved per class.
pub fn receiver_vectors(system: &MultiUserSystem, h_hat_eff: &[CVec], spec: &ReceiverSpec) -> Result<Vec<CVec>> {
    spec.validate()?;
    let k_total = system.users();
    let mut out: Vec<Option<CVec>> = vec![None; k_total];
    let n_classes = system.classes.iter().copied().max().map(|c| c + 1).unwrap_or(0);
    for class in 0..n_classes {
        let users: Vec<usize> = (0..k_total).filter(|&k| system.classes[k] == class).collect();
        if users.is_empty() {
            continue;
        }
        match spec.detector(class)? {
            Detector::Mf => {
                for &k in &users {
                    out[k] = Some(h_hat_eff[k].mapv(|z| z * system.amps[k]));
                }
            }
            Detector::Mmse => {
                let members = system.members(class, spec.mmse_all_classes);
                let cols: Vec<CVec> = members.iter().map(|&j| h_hat_eff[j].clone()).collect();
                let amps: Vec<f64> = members.iter().map(|&j| system.amps[j]).collect();
                let g = column_matrix(&cols, &amps);
                let mut gram = g.t().mapv(|z| z.conj()).dot(&g);
                for i in 0..gram.nrows() {
                    gram[[i, i]] += C64::new(spec.noise_w, 0.0);
                }
                let rhs = CMat::eye(members.len());
                let sol = hpd_solve(&gram.view(), &rhs.view())?;
                for &k in &users {
                    let pos = members.iter().position(|&j| j == k).expect("member of own class");
                    out[k] = Some(g.dot(&sol.column(pos)));
                }
            }
        }
    }
    Ok(out.into_iter().map(|r| r.expect("every user has a class")).collect())
}

/// Dense, literal MMSE vector `(Σ_j g_j P C_j Ĥ_j Ĥ_j^H C_j^H + σ² I)^{-1} √(g_k P) C_k Ĥ_k`.
/// Used as a cross-check of [`receiver_vectors`].
pub fn mmse_receiver_dense(system: &MultiUserSystem, h_hat_eff: &[CVec], k: usize, spec: &ReceiverSpec) -> Result<CVec> {
    let dim = system.dim();
    let mut cov = CMat::eye(dim).mapv(|z| z * spec.noise_w);
    for j in system.members(system.classes[k], spec.mmse_all_classes) {
        let a2 = system.amps[j] * system.amps[j];
        let h = &h_hat_eff[j];
        for r in 0..dim {
            let hr = h[r] * a2;
            for c in 0..dim {
                cov[[r, c]] += hr * h[c].conj();
            }
        }
    }
    let rhs = h_hat_eff[k].mapv(|z| z * system.amps[k]).insert_axis(ndarray::Axis(1));
    Ok(hpd_solve(&cov.view(), &rhs.view())?.column(0).to_owned())
}

/// Value and decomposition of one instantaneous SINR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrBreakdown {
    pub gamma: f64,
    pub signal: f64,
    /// `σ² ‖r_k‖²`
    pub noise: f64,
    /// `g_k P |r_k^H C_k H̃_k|²`
    pub self_error: f64,
    /// `Σ_{j≠k} g_j P |r_k^H C_j H_j|²`
    pub interference: f64,
    /// `g_k P |r_k^H C_k H_k|²`, subtracted and re-added in the literal form.
    pub own_term: f64,
    /// The literal denominator, including `+own_term − own_term`.
    pub denominator: f64,
}

impl SinrBreakdown {
    /// SINR with the `j = k` cancellation done symbolically.
    pub fn gamma_cancelled(&self) -> f64 {
        self.signal / (self.noise + self.self_error + self.interference)
    }
}

/// Exact SINR of user `k` for receiver `r`, evaluating the denominator term
/// by term as `σ²‖r‖² + P g_k|r^H C_kH̃_k|² − P g_k|r^H C_kH_k|² + Σ_j P g_j|r^H C_jH_j|²`.
pub fn instantaneous_sinr(
    system: &MultiUserSystem,
    k: usize,
    r: &CVec,
    h_eff: &[CVec],
    h_hat_eff: &[CVec],
    noise_w: f64,
) -> Result<SinrBreakdown> {
    let proj = |v: &CVec| -> C64 { r.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum() };
    let a2 = system.amps[k] * system.amps[k];
    let signal = a2 * proj(&h_hat_eff[k]).norm_sqr();
    let noise = noise_w * r.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let err = &h_eff[k] - &h_hat_eff[k];
    let self_error = a2 * proj(&err).norm_sqr();
    let own_term = a2 * proj(&h_eff[k]).norm_sqr();
    let mut interference = 0.0;
    for j in 0..system.users() {
        if j != k {
            interference += system.amps[j] * system.amps[j] * proj(&h_eff[j]).norm_sqr();
        }
    }
    let denominator = noise + self_error - own_term + (interference + own_term);
    if !(denominator > 0.0) {
        return Err(Error::NonpositiveDenominator { user: k, value: denominator });
    }
    Ok(SinrBreakdown { gamma: signal / denominator, signal, noise, self_error, interference, own_term, denominator })
}

/// Receivers and SINRs of all users for one realization.
pub fn evaluate_realization(
    system: &MultiUserSystem,
    spec: &ReceiverSpec,
    h: &[CVec],
    h_hat: &[CVec],
) -> Result<Vec<SinrBreakdown>> {
    let h_eff = system.spread_all(h);
    let h_hat_eff = system.spread_all(h_hat);
    let rs = receiver_vectors(system, &h_hat_eff, spec)?;
    (0..system.users())
        .map(|k| instantaneous_sinr(system, k, &rs[k], &h_eff, &h_hat_eff, spec.noise_w))
        .collect()
}
