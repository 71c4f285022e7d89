use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{evaluate_realization, receiver_vectors, MultiUserSystem, ReceiverSpec, SinrBreakdown};
use crate::channel::{ChannelSampler, SecondOrderStats};
use crate::codebook::{map_to_resources, ResourceMap};
use crate::error::{Error, Result};
use crate::estimation::{estimate_channel, CsiMode};
use crate::linalg::{CVec, C64};
use crate::rng::{complex_normal, stream_rng, Stream};

/// Everything needed to draw and estimate one user's channel.
#[derive(Debug, Clone)]
pub struct UserChannel {
    pub user: usize,
    pub sampler: ChannelSampler,
    pub stats: SecondOrderStats,
    /// `γ_k^CE = g_k P_c / σ²`
    pub gamma_ce: f64,
}

/// Cached channel draws and their estimates, indexed `[trial][user]`.
///
/// Draw `t` of user `k` depends only on `(seed, k, t)`, so a cache built for
/// `K` users contains the draws of every smaller user prefix.
#[derive(Debug, Clone)]
pub struct ChannelDraws {
    pub h: Vec<Vec<CVec>>,
    pub h_hat: Vec<Vec<CVec>>,
}

impl ChannelDraws {
    pub fn generate(users: &[UserChannel], csi: CsiMode, seed: u64, trials: usize) -> Result<Self> {
        let mut h = Vec::with_capacity(trials);
        let mut h_hat = Vec::with_capacity(trials);
        for t in 0..trials as u64 {
            let mut row = Vec::with_capacity(users.len());
            let mut row_hat = Vec::with_capacity(users.len());
            for u in users {
                let real = u.sampler.draw(seed, t);
                let mut rng = stream_rng(seed, Stream::PilotNoise, u.user as u64, t);
                let est = estimate_channel(&u.stats, &real, u.gamma_ce, csi, &mut rng)?;
                row.push(real.data);
                row_hat.push(est.data);
            }
            h.push(row);
            h_hat.push(row_hat);
        }
        Ok(ChannelDraws { h, h_hat })
    }

    pub fn trials(&self) -> usize {
        self.h.len()
    }

    pub fn users(&self) -> usize {
        self.h.first().map(|r| r.len()).unwrap_or(0)
    }

    /// SINRs `[trial][user]` for the first `system.users()` users.
    pub fn evaluate(&self, system: &MultiUserSystem, spec: &ReceiverSpec) -> Result<Vec<Vec<SinrBreakdown>>> {
        let k = system.users();
        if k > self.users() {
            return Err(Error::DimensionMismatch(format!("system has {k} users, cache has {}", self.users())));
        }
        (0..self.trials())
            .map(|t| evaluate_realization(system, spec, &self.h[t][..k], &self.h_hat[t][..k]))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    /// Sample mean of `log2(1 + γ)`.
    pub mean: f64,
    pub std_err: f64,
    pub trials: usize,
}

pub fn ergodic_rate(gammas: &[f64]) -> RateEstimate {
    let n = gammas.len();
    if n == 0 {
        return RateEstimate { mean: f64::NAN, std_err: f64::NAN, trials: 0 };
    }
    let rates: Vec<f64> = gammas.iter().map(|g| (1.0 + g).log2()).collect();
    let mean = rates.iter().sum::<f64>() / n as f64;
    let std_err = if n > 1 {
        let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    RateEstimate { mean, std_err, trials: n }
}

/// Monte Carlo ergodic rate of `user` over all cached trials.
pub fn ergodic_rate_mc(system: &MultiUserSystem, spec: &ReceiverSpec, draws: &ChannelDraws, user: usize) -> Result<RateEstimate> {
    if user >= system.users() {
        return Err(Error::UnassignedUser(user));
    }
    let table = draws.evaluate(system, spec)?;
    let gammas: Vec<f64> = table.iter().map(|row| row[user].gamma).collect();
    Ok(ergodic_rate(&gammas))
}

/// One CSV row of per-trial SINR output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinrRecord {
    pub trial: usize,
    pub user: usize,
    pub class: usize,
    pub detector: String,
    pub gamma_linear: f64,
    pub rate_bits: f64,
}

pub fn sinr_records(system: &MultiUserSystem, spec: &ReceiverSpec, table: &[Vec<SinrBreakdown>]) -> Result<Vec<SinrRecord>> {
    let mut out = Vec::new();
    for (trial, row) in table.iter().enumerate() {
        for (user, s) in row.iter().enumerate() {
            let class = system.classes[user];
            out.push(SinrRecord {
                trial,
                user,
                class: class + 1,
                detector: spec.detector(class)?.name().to_string(),
                gamma_linear: s.gamma,
                rate_bits: (1.0 + s.gamma).log2(),
            });
        }
    }
    Ok(out)
}

pub fn write_sinr_csv<W: Write>(records: &[SinrRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolLevelResult {
    pub user: usize,
    /// Exact SINR evaluated from the channel and its estimate.
    pub analytic: f64,
    /// `|r^H √(gP) C Ĥ|² / mean |ŝ − r^H √(gP) C Ĥ s|²` from simulated symbols.
    pub empirical: f64,
    /// Mean power of everything except the desired term.
    pub impairment_power: f64,
}

/// Transmits QPSK symbols through one realization sample by sample and
/// measures each user's SINR after the linear receiver.
///
/// The received vector is assembled from the per-RE transmit samples
/// `x_{k,t,n}` and `√g_k H_{k,t,n}`, independently of the vectorized form
/// used in [`super::instantaneous_sinr`].
#[allow(clippy::too_many_arguments)]
pub fn symbol_level_check(
    system: &MultiUserSystem,
    spec: &ReceiverSpec,
    powers_w: &[f64],
    map: &ResourceMap,
    h: &[CVec],
    h_hat: &[CVec],
    symbols: usize,
    inject_noise: bool,
    seed: u64,
) -> Result<Vec<SymbolLevelResult>> {
    let k_total = system.users();
    let m = system.antennas;
    let n = map.len();
    if powers_w.len() != k_total || h.len() != k_total || h_hat.len() != k_total {
        return Err(Error::DimensionMismatch("per-user inputs differ in length".into()));
    }
    let gains: Vec<f64> = (0..k_total)
        .map(|k| if powers_w[k] > 0.0 { system.amps[k].powi(2) / powers_w[k] } else { 0.0 })
        .collect();
    let h_hat_eff = system.spread_all(h_hat);
    let h_eff = system.spread_all(h);
    let rs = receiver_vectors(system, &h_hat_eff, spec)?;
    let desired: Vec<C64> = (0..k_total)
        .map(|k| rs[k].iter().zip(h_hat_eff[k].iter()).map(|(a, b)| a.conj() * b).sum::<C64>() * system.amps[k])
        .collect();
    let mut rng = stream_rng(seed, Stream::DataSymbols, 0, 0);
    let mut noise_rng = stream_rng(seed, Stream::ReceiverNoise, 0, 0);
    let sigma = spec.noise_w.sqrt();
    let mut err_power = vec![0.0; k_total];
    let qpsk = |rng: &mut dyn rand::RngCore| -> C64 {
        let b: u8 = rng.random_range(0..4);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        C64::new(if b & 1 == 0 { s } else { -s }, if b & 2 == 0 { s } else { -s })
    };
    let mut y = CVec::zeros(n * m);
    let mut data = vec![C64::new(0.0, 0.0); k_total];
    for _ in 0..symbols {
        y.fill(C64::new(0.0, 0.0));
        for k in 0..k_total {
            data[k] = qpsk(&mut rng);
            let samples = map_to_resources(&system.codes[k], data[k], powers_w[k], map)?;
            let sg = gains[k].sqrt();
            for (i, (_, x)) in samples.iter().enumerate() {
                for a in 0..m {
                    y[i * m + a] += h[k][i * m + a] * (*x * sg);
                }
            }
        }
        if inject_noise {
            for v in y.iter_mut() {
                *v += complex_normal(&mut noise_rng) * sigma;
            }
        }
        for k in 0..k_total {
            let s_hat: C64 = rs[k].iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum();
            err_power[k] += (s_hat - desired[k] * data[k]).norm_sqr();
        }
    }
    let mut out = Vec::with_capacity(k_total);
    for k in 0..k_total {
        let analytic = super::instantaneous_sinr(system, k, &rs[k], &h_eff, &h_hat_eff, spec.noise_w)?.gamma;
        let impairment_power = err_power[k] / symbols as f64;
        out.push(SymbolLevelResult { user: k, analytic, empirical: desired[k].norm_sqr() / impairment_power, impairment_power });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{RbGeometry, Re};
    use crate::detection::Detector;
    use crate::linalg::c;

    #[test]
    fn deterministic_rates() {
        let r = ergodic_rate(&[1.0; 10]);
        assert_eq!(r.mean, 1.0);
        assert_eq!(r.std_err, 0.0);
        assert_eq!(ergodic_rate(&[0.0; 4]).mean, 0.0);
        let r = ergodic_rate(&[1.0, 3.0]);
        assert!((r.mean - 1.5).abs() < 1e-15);
        assert!((r.std_err - 0.5).abs() < 1e-15);
    }

    fn two_re_map() -> ResourceMap {
        ResourceMap::from_elements(RbGeometry { subcarriers: 12, symbols: 14, blocks: 1 }, vec![Re::new(2, 6), Re::new(3, 6)]).unwrap()
    }

    #[test]
    fn single_user_without_noise_has_no_impairment() {
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        let sys = MultiUserSystem::new(2, vec![CVec::from(vec![c(inv, 0.0), c(0.0, inv)])], vec![0.5], vec![0]).unwrap();
        let h = vec![CVec::from(vec![c(0.3, 0.1), c(-1.0, 0.4), c(0.2, 0.2), c(0.9, -0.5)])];
        let spec = ReceiverSpec { detectors: vec![Detector::Mf], noise_w: 0.1, mmse_all_classes: false };
        let out = symbol_level_check(&sys, &spec, &[0.25], &two_re_map(), &h, &h, 200, false, 1).unwrap();
        assert!(out[0].impairment_power < 1e-28);
    }

    #[test]
    fn csv_has_the_documented_header() {
        let rec = SinrRecord { trial: 0, user: 1, class: 2, detector: "mf".into(), gamma_linear: 3.0, rate_bits: 2.0 };
        let mut buf = Vec::new();
        write_sinr_csv(&[rec], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "trial,user,class,detector,gamma_linear,rate_bits");
        assert_eq!(text.lines().count(), 2);
    }
}
