use std::collections::BTreeMap;

use ndarray::{s, Array2};

use crate::channel::profile::{temporal_corr, Numerology};
use crate::channel::stats::UserLinkModel;
use crate::codebook::Re;
use crate::error::Result;
use crate::linalg::{psd_sqrt, CMat, CVec, C64};
use crate::rng::{complex_normal, stream_rng, Stream};

/// Relative eigenvalue clip used for the correlated-Gaussian square roots.
pub const SQRT_CLIP: f64 = 1e-10;

/// One draw of a user's channel at its data and pilot REs.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// `H_k` stacked over the data REs (RE-major, antenna-minor).
    pub data: CVec,
    /// Channel at the user's pilot REs, same stacking.
    pub pilots: CVec,
}

/// Draws `H_k` for one user, with cached square roots of the temporal and
/// spatial covariances.
///
/// Path gains are `α_l = R_l^{1/2} Z_l (Γ^{1/2})^T` with `Z_l` i.i.d. `CN(0,1)`
/// of size `M × T`, so that `vec(α_l)` has covariance `Γ ⊗ R_l`.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    user: usize,
    antennas: usize,
    symbols: Vec<usize>,
    gamma_sqrt: CMat,
    spatial_sqrt: Vec<CMat>,
    /// `e^{-2πi τ_l n / (N_FFT T_s)}` per RE and path.
    phases: Array2<C64>,
    /// Symbol column of each RE.
    columns: Vec<usize>,
    data_len: usize,
}

impl ChannelSampler {
    pub fn new(
        model: &UserLinkModel,
        numerology: &Numerology,
        data: &[Re],
        pilots: &[Re],
    ) -> Result<Self> {
        model.validate(numerology)?;
        let res: Vec<Re> = data.iter().chain(pilots.iter()).copied().collect();
        let mut index = BTreeMap::new();
        for re in &res {
            index.entry(re.t).or_insert(0usize);
        }
        let symbols: Vec<usize> = index.keys().copied().collect();
        for (col, t) in symbols.iter().enumerate() {
            index.insert(*t, col);
        }
        let nt = symbols.len();
        let gamma = CMat::from_shape_fn((nt, nt), |(i, j)| {
            let dt = symbols[i] as i64 - symbols[j] as i64;
            C64::new(temporal_corr(model.doppler_hz, dt, numerology), 0.0)
        });
        let gamma_sqrt = psd_sqrt(&gamma.view(), SQRT_CLIP)?;
        let spatial_sqrt = model
            .spatial
            .iter()
            .map(|r| psd_sqrt(&r.view(), SQRT_CLIP))
            .collect::<Result<Vec<_>>>()?;
        let tu = numerology.useful_duration_s();
        let phases = Array2::from_shape_fn((res.len(), model.profile.len()), |(i, l)| {
            let tau = model.profile.delays_s()[l];
            C64::from_polar(1.0, -2.0 * std::f64::consts::PI * tau * res[i].n as f64 / tu)
        });
        let columns = res.iter().map(|re| index[&re.t]).collect();
        Ok(ChannelSampler {
            user: model.user,
            antennas: model.antennas(),
            symbols,
            gamma_sqrt,
            spatial_sqrt,
            phases,
            columns,
            data_len: data.len(),
        })
    }

    /// Distinct OFDM symbols touched by the data and pilot REs.
    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    /// Draw for `trial`, reproducible from `(seed, user, trial)` alone.
    pub fn draw(&self, seed: u64, trial: u64) -> ChannelRealization {
        let mut rng = stream_rng(seed, Stream::ChannelPaths, self.user as u64, trial);
        let m = self.antennas;
        let nt = self.symbols.len();
        let n_re = self.columns.len();
        let mut stacked = CVec::zeros(n_re * m);
        let gamma_t = self.gamma_sqrt.t();
        for (l, r_sqrt) in self.spatial_sqrt.iter().enumerate() {
            let z = CMat::from_shape_fn((m, nt), |_| complex_normal(&mut rng));
            let alpha = r_sqrt.dot(&z).dot(&gamma_t);
            for (i, &col) in self.columns.iter().enumerate() {
                let ph = self.phases[[i, l]];
                let mut seg = stacked.slice_mut(s![i * m..(i + 1) * m]);
                seg.zip_mut_with(&alpha.column(col), |h, a| *h += ph * a);
            }
        }
        let pilots = stacked.slice(s![self.data_len * m..]).to_owned();
        let data = stacked.slice(s![..self.data_len * m]).to_owned();
        ChannelRealization { data, pilots }
    }
}

/// Convenience wrapper: builds a sampler and draws one realization.
pub fn draw_channel(
    model: &UserLinkModel,
    numerology: &Numerology,
    data: &[Re],
    pilots: &[Re],
    seed: u64,
    trial: u64,
) -> Result<ChannelRealization> {
    Ok(ChannelSampler::new(model, numerology, data, pilots)?.draw(seed, trial))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::profile::PathProfile;
    use crate::channel::spatial::{user_spatial_corrs, SpatialModel};
    use crate::channel::stats::{build_r_k, covariance_between};
    use crate::linalg::relative_frobenius_error;

    fn model(doppler: f64, profile: PathProfile) -> UserLinkModel {
        let corrs = user_spatial_corrs(SpatialModel::default(), 4, profile.variances(), 2, 9).unwrap();
        UserLinkModel { user: 2, class: 0, gain: 1.0, doppler_hz: doppler, profile, spatial: corrs }
    }

    #[test]
    fn zero_doppler_freezes_the_path_gains() {
        let mdl = model(0.0, PathProfile::single_path());
        let data: Vec<Re> = (0..5).map(|t| Re::new(t * 7, 3)).collect();
        let h = draw_channel(&mdl, &Numerology::default(), &data, &[], 4, 0).unwrap();
        for i in 1..5 {
            for m in 0..4 {
                assert!((h.data[i * 4 + m] - h.data[m]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn zero_delay_is_flat_in_frequency() {
        let mdl = model(70.0, PathProfile::single_path());
        let data: Vec<Re> = (0..6).map(|n| Re::new(5, n)).collect();
        let h = draw_channel(&mdl, &Numerology::default(), &data, &[], 4, 3).unwrap();
        for i in 1..6 {
            for m in 0..4 {
                assert_eq!(h.data[i * 4 + m], h.data[m]);
            }
        }
    }

    #[test]
    fn draws_are_reproducible_and_trial_indexed() {
        let mdl = model(70.0, PathProfile::etu());
        let data = [Re::new(30, 6), Re::new(31, 6)];
        let pilots = [Re::new(28, 2)];
        let s = ChannelSampler::new(&mdl, &Numerology::default(), &data, &pilots).unwrap();
        let a = s.draw(1, 5);
        let b = s.draw(1, 5);
        let c = s.draw(1, 6);
        assert_eq!(a.data, b.data);
        assert_eq!(a.pilots, b.pilots);
        assert_ne!(a.data, c.data);
        assert_eq!(a.pilots.len(), 4);
    }

    #[test]
    fn empirical_covariance_of_data_and_pilots() {
        let mdl = model(300.0, PathProfile::etu());
        let num = Numerology::default();
        let data = [Re::new(30, 6), Re::new(32, 6), Re::new(32, 9)];
        let pilots = [Re::new(14, 1), Re::new(44, 11)];
        let s = ChannelSampler::new(&mdl, &num, &data, &pilots).unwrap();
        let all: Vec<Re> = data.iter().chain(pilots.iter()).copied().collect();
        let truth = covariance_between(&mdl, &num, &all, &all);
        let dim = all.len() * 4;
        let mut emp = CMat::zeros((dim, dim));
        let trials = 20_000;
        for t in 0..trials {
            let h = s.draw(8, t);
            let v: Vec<C64> = h.data.iter().chain(h.pilots.iter()).copied().collect();
            for i in 0..dim {
                for j in 0..dim {
                    emp[[i, j]] += v[i] * v[j].conj();
                }
            }
        }
        emp.mapv_inplace(|z| z / trials as f64);
        let err = relative_frobenius_error(&emp.view(), &truth.view());
        assert!(err < 0.05, "relative error {err}");
        let r = build_r_k(&mdl, &num, &data);
        assert!(relative_frobenius_error(&emp.slice(s![..12, ..12]), &r.view()) < 0.05);
    }
}
