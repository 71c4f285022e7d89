//! Assembly of one scenario at a fixed antenna count: user link models,
//! samplers, second-order statistics and the matrices consumed by the
//! detectors and the deterministic equivalents.

use log::debug;

use super::config::Scenario;
use super::schemes::{baseline_codes, BaselineAssignment, Scheme};
use crate::channel::{user_spatial_corrs, ChannelSampler, FlatStats, SecondOrderStats, SpatialModel, UserLinkModel};
use crate::codebook::{Codebook, CodebookSpec, ResourceMap};
use crate::detection::{ChannelDraws, MultiUserSystem, ReceiverSpec, UserChannel};
use crate::detequiv::{DeScenario, DeUser, FlatScenario, FlatUser, MmseOptions};
use crate::error::{Error, Result};
use crate::estimation::{build_pilot_pattern, CsiMode, PilotPattern};
use crate::linalg::CVec;
use crate::units::dbm_to_watts;

/// Estimation SNR standing in for noise-free pilots when building the
/// interpolator, which keeps `Q` invertible for rank-deficient `R^𝒫`.
pub const NOISELESS_PILOT_SNR: f64 = 1e10;

/// Codes of one scheme with the intra-class signatures when they exist.
#[derive(Debug, Clone)]
pub struct CodeAssignment {
    pub codes: Vec<CVec>,
    /// `w_k`, MOMA only.
    pub signatures: Option<Vec<CVec>>,
}

/// A scenario prepared for one antenna count and one set of class sizes.
#[derive(Debug, Clone)]
pub struct PreparedLink {
    pub antennas: usize,
    pub class_sizes: Vec<usize>,
    pub map: ResourceMap,
    pub pilots: PilotPattern,
    /// Class position (0-based) of every user.
    pub classes: Vec<usize>,
    pub powers_w: Vec<f64>,
    pub gains: Vec<f64>,
    pub noise_w: f64,
    pub models: Vec<UserLinkModel>,
    pub channels: Vec<UserChannel>,
}

impl PreparedLink {
    pub fn new(sc: &Scenario, antennas: usize, class_sizes: &[usize]) -> Result<Self> {
        if class_sizes.len() != sc.classes.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} class sizes for {} classes",
                class_sizes.len(),
                sc.classes.len()
            )));
        }
        let n = sc.spreading_length();
        let map = sc.resources.data_map(n)?;
        let total: usize = class_sizes.iter().sum();
        let pilots = build_pilot_pattern(&map, total, &sc.resources.pilots)?;
        let profile = sc.channel.profile.build()?;
        let noise_w = sc.noise_w();
        let mut classes = Vec::with_capacity(total);
        let mut powers_w = Vec::with_capacity(total);
        let mut gains = Vec::with_capacity(total);
        let mut models = Vec::with_capacity(total);
        let mut channels = Vec::with_capacity(total);
        let mut user = 0;
        for (ci, &size) in class_sizes.iter().enumerate() {
            let cfg = &sc.classes[ci];
            let power = dbm_to_watts(cfg.power_dbm);
            let gain = sc.gain(ci);
            for _ in 0..size {
                let spatial = user_spatial_corrs(sc.channel.spatial, antennas, profile.variances(), user, sc.seed)?;
                let model = UserLinkModel {
                    user,
                    class: ci,
                    gain,
                    doppler_hz: cfg.doppler_hz,
                    profile: profile.clone(),
                    spatial,
                };
                let own_pilots = pilots.user(user)?;
                let sampler = ChannelSampler::new(&model, &sc.numerology, map.elements(), own_pilots)?;
                let gamma_ce = gain * power / noise_w;
                let stats = match sc.estimation.csi {
                    CsiMode::Perfect => SecondOrderStats::perfect(crate::channel::build_r_k(&model, &sc.numerology, map.elements())),
                    CsiMode::Lmmse | CsiMode::NoiselessPilots => {
                        let g = if sc.estimation.csi == CsiMode::Lmmse { gamma_ce } else { NOISELESS_PILOT_SNR };
                        SecondOrderStats::build(&model, &sc.numerology, map.elements(), own_pilots, g, sc.estimation.pilot_covariance)?
                    }
                };
                channels.push(UserChannel { user, sampler, stats, gamma_ce });
                models.push(model);
                classes.push(ci);
                powers_w.push(power);
                gains.push(gain);
                user += 1;
            }
        }
        debug!("prepared {total} users at M = {antennas}");
        Ok(PreparedLink { antennas, class_sizes: class_sizes.to_vec(), map, pilots, classes, powers_w, gains, noise_w, models, channels })
    }

    pub fn users(&self) -> usize {
        self.classes.len()
    }

    /// Spreading codes of a code-domain scheme. FDMA has none.
    pub fn codes(&self, sc: &Scenario, scheme: Scheme) -> Result<CodeAssignment> {
        self.codes_for_sizes(sc, scheme, &self.class_sizes)
    }

    /// Codes for a user prefix described by smaller class sizes. Users keep
    /// their global numbering only when every class but the last is full.
    pub fn codes_for_sizes(&self, sc: &Scenario, scheme: Scheme, sizes: &[usize]) -> Result<CodeAssignment> {
        let users: usize = sizes.iter().sum();
        if users > self.users() {
            return Err(Error::DimensionMismatch(format!("{users} users requested, {} prepared", self.users())));
        }
        match scheme {
            Scheme::Moma => {
                let spec = CodebookSpec { base: sc.codebook.base, method: sc.codebook.method, seed: sc.seed };
                let book = Codebook::build(&spec, &sc.service_classes(sizes))?;
                let signatures = (0..users).map(|k| book.intra_signature(k)).collect::<Result<Vec<_>>>()?;
                Ok(CodeAssignment { codes: book.codes(), signatures: Some(signatures) })
            }
            other => match baseline_codes(other, sc.spreading_length(), users, sc.seed, sc.fdma.guard_fraction)? {
                BaselineAssignment::Spread(codes) => Ok(CodeAssignment { codes, signatures: None }),
                BaselineAssignment::Narrowband { .. } => {
                    Err(Error::InvalidConfig("FDMA uses the narrowband rate model, not spreading codes".into()))
                }
            },
        }
    }

    /// The system formed by the first `codes.len()` users.
    pub fn system(&self, codes: &[CVec]) -> Result<MultiUserSystem> {
        let k = codes.len();
        if k > self.users() {
            return Err(Error::DimensionMismatch(format!("{k} codes for {} users", self.users())));
        }
        let amps = (0..k).map(|j| (self.powers_w[j] * self.gains[j]).sqrt()).collect();
        MultiUserSystem::new(self.antennas, codes.to_vec(), amps, self.classes[..k].to_vec())
    }

    pub fn receiver(&self, sc: &Scenario) -> ReceiverSpec {
        ReceiverSpec { detectors: sc.detectors(), noise_w: self.noise_w, mmse_all_classes: sc.receiver.mmse_all_classes }
    }

    pub fn draws(&self, sc: &Scenario, trials: usize) -> Result<ChannelDraws> {
        ChannelDraws::generate(&self.channels, sc.estimation.csi, sc.seed, trials)
    }

    /// Statistics of the first `codes.len()` users.
    pub fn de_scenario(&self, codes: &[CVec]) -> DeScenario {
        let users = (0..codes.len().min(self.users()))
            .map(|k| DeUser {
                class: self.classes[k],
                power_gain: self.powers_w[k] * self.gains[k],
                code: codes[k].clone(),
                r: self.channels[k].stats.r.clone(),
                phi: self.channels[k].stats.phi.clone(),
            })
            .collect();
        DeScenario { antennas: self.antennas, noise_w: self.noise_w, users }
    }

    /// Flat reductions referenced to the first data RE.
    pub fn flat_scenario(&self, sc: &Scenario, assignment: &CodeAssignment) -> Result<FlatScenario> {
        let signatures = assignment
            .signatures
            .as_ref()
            .ok_or_else(|| Error::ModePreconditionViolated("flat reductions need intra-class signatures".into()))?;
        let first = self.map.elements()[0];
        let users = (0..self.users())
            .map(|k| {
                let q = self.channels[k].stats.q.as_ref();
                let stats = FlatStats::build(&self.models[k], &sc.numerology, first, self.pilots.user(k)?, q);
                Ok(FlatUser {
                    class: self.classes[k],
                    power_gain: self.powers_w[k] * self.gains[k],
                    signature: signatures[k].clone(),
                    code: assignment.codes[k].clone(),
                    stats,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FlatScenario {
            antennas: self.antennas,
            noise_w: self.noise_w,
            users,
            identity_spatial: sc.channel.spatial == SpatialModel::Identity,
        })
    }
}

/// Deterministic-equivalent options selected by the scenario.
pub fn mmse_options(sc: &Scenario) -> MmseOptions {
    MmseOptions { rho: sc.detequiv.rho, f_argument: sc.detequiv.f_argument, intra_class_only: false, solver: Default::default() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{relative_frobenius_error, vec_norm_sqr};

    fn small() -> Scenario {
        let mut sc = Scenario::default();
        sc.classes[0].users = 2;
        sc.classes[1].users = 3;
        sc
    }

    #[test]
    fn users_are_numbered_class_by_class() {
        let sc = small();
        let link = PreparedLink::new(&sc, 4, &sc.class_sizes()).unwrap();
        assert_eq!(link.classes, vec![0, 0, 1, 1, 1]);
        let sys = link.system(&link.codes(&sc, Scheme::Moma).unwrap().codes).unwrap();
        assert_eq!(sys.dim(), 24);
        let gamma_ce = link.channels[0].gamma_ce;
        assert!((gamma_ce - 10f64.powf(1.5)).abs() < 1e-9);
    }

    #[test]
    fn adding_users_keeps_existing_statistics() {
        let sc = small();
        let a = PreparedLink::new(&sc, 4, &[2, 3]).unwrap();
        let b = PreparedLink::new(&sc, 4, &[2, 7]).unwrap();
        for k in 0..a.users() {
            assert_eq!(relative_frobenius_error(&b.channels[k].stats.phi.view(), &a.channels[k].stats.phi.view()), 0.0);
        }
        let da = a.draws(&sc, 2).unwrap();
        let db = b.draws(&sc, 2).unwrap();
        assert_eq!(da.h[1][4], db.h[1][4]);
    }

    #[test]
    fn fdma_has_no_codes() {
        let sc = small();
        let link = PreparedLink::new(&sc, 2, &[1, 1]).unwrap();
        assert!(link.codes(&sc, Scheme::Fdma).is_err());
        let rep = link.codes(&sc, Scheme::Repetition).unwrap();
        assert!(rep.signatures.is_none());
        assert!((vec_norm_sqr(&rep.codes[1].view()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_reductions_need_signatures() {
        let sc = small();
        let link = PreparedLink::new(&sc, 2, &[1, 1]).unwrap();
        let rep = link.codes(&sc, Scheme::Repetition).unwrap();
        assert!(matches!(link.flat_scenario(&sc, &rep), Err(Error::ModePreconditionViolated(_))));
        let moma = link.codes(&sc, Scheme::Moma).unwrap();
        assert_eq!(link.flat_scenario(&sc, &moma).unwrap().users.len(), 2);
    }
}
