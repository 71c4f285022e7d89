//! Second-order channel statistics: `R_k`, pilot cross-covariances,
//! `Q_k^𝒫` and the LMMSE estimate covariance `Φ_k`.

use ndarray::s;
use serde::{Deserialize, Serialize};

use crate::channel::profile::{temporal_corr, Numerology, PathProfile};
use crate::codebook::Re;
use crate::error::{Error, Result};
use crate::linalg::{adjoint, eye, hermitize, hpd_inverse, CMat, C64};

/// Everything that determines one user's channel law.
#[derive(Debug, Clone)]
pub struct UserLinkModel {
    pub user: usize,
    /// Class position (0-based).
    pub class: usize,
    /// Large-scale gain `g_k` (linear).
    pub gain: f64,
    pub doppler_hz: f64,
    pub profile: PathProfile,
    /// `R_{k,l}^α` for every path.
    pub spatial: Vec<CMat>,
}

impl UserLinkModel {
    pub fn antennas(&self) -> usize {
        self.spatial.first().map(|r| r.nrows()).unwrap_or(0)
    }

    pub fn validate(&self, numerology: &Numerology) -> Result<()> {
        if !(self.gain > 0.0) {
            return Err(Error::InvalidConfig(format!("user {} has non-positive gain", self.user)));
        }
        if !(self.doppler_hz >= 0.0) {
            return Err(Error::InvalidConfig(format!("user {} has negative Doppler", self.user)));
        }
        if self.spatial.len() != self.profile.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} spatial matrices for {} paths",
                self.spatial.len(),
                self.profile.len()
            )));
        }
        self.profile.check_against(numerology)
    }

    /// Time/frequency correlation of path `l` between two REs.
    fn path_coefficient(&self, l: usize, a: Re, b: Re, numerology: &Numerology) -> C64 {
        let dt = a.t as i64 - b.t as i64;
        let dn = a.n as f64 - b.n as f64;
        let tau = self.profile.delays_s()[l];
        let phase = -2.0 * std::f64::consts::PI * tau * dn / numerology.useful_duration_s();
        C64::from_polar(temporal_corr(self.doppler_hz, dt, numerology), phase)
    }
}

/// `E[H(rows) H(cols)^H]`: block `(i, j)` is
/// `Σ_l r^α(t_i − t_j) R_{k,l}^α e^{−2πi τ_l (n_i − n_j)/(N_FFT T_s)}`.
pub fn covariance_between(
    model: &UserLinkModel,
    numerology: &Numerology,
    rows: &[Re],
    cols: &[Re],
) -> CMat {
    let m = model.antennas();
    let mut out = CMat::zeros((rows.len() * m, cols.len() * m));
    for (i, a) in rows.iter().enumerate() {
        for (j, b) in cols.iter().enumerate() {
            let mut block = out.slice_mut(s![i * m..(i + 1) * m, j * m..(j + 1) * m]);
            for (l, r_l) in model.spatial.iter().enumerate() {
                let coef = model.path_coefficient(l, *a, *b, numerology);
                block.zip_mut_with(r_l, |acc, r| *acc += coef * r);
            }
        }
    }
    out
}

/// `R_k` over the data REs.
pub fn build_r_k(model: &UserLinkModel, numerology: &Numerology, data: &[Re]) -> CMat {
    hermitize(&covariance_between(model, numerology, data, data).view())
}

/// How the pilot-side covariance inside `Q_k^𝒫` is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PilotCovConvention {
    /// `Q = ((1/γ) I + R^𝒫)^{-1}` where `R^𝒫` is the covariance of the true
    /// channel at the pilot REs. This is the standard LMMSE interpolator.
    #[default]
    TrueChannel,
    /// `R^𝒫 = E[Ĥ^p Ĥ^{pH}]`, i.e. the noisy observation covariance, with the
    /// extra `(1/γ) I` added on top (noise counted twice).
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimationQuality {
    /// Effective estimation SNR `γ_k^CE` (linear).
    Noisy(f64),
    /// Noise-free pilots.
    Perfect,
}

/// `(R_k^{𝒩𝒫}, Q_k^𝒫)`.
pub fn build_pilot_second_order(
    model: &UserLinkModel,
    numerology: &Numerology,
    data: &[Re],
    pilots: &[Re],
    quality: EstimationQuality,
    convention: PilotCovConvention,
) -> Result<(CMat, CMat)> {
    let r_np = covariance_between(model, numerology, data, pilots);
    let r_p = hermitize(&covariance_between(model, numerology, pilots, pilots).view());
    let dim = r_p.nrows();
    let q_inv = match quality {
        EstimationQuality::Perfect => r_p,
        EstimationQuality::Noisy(gamma) => {
            if !(gamma > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "estimation SNR must be positive, got {gamma}"
                )));
            }
            let extra = match convention {
                PilotCovConvention::TrueChannel => 1.0 / gamma,
                PilotCovConvention::Literal => 2.0 / gamma,
            };
            r_p + eye(dim).mapv(|z| z * extra)
        }
    };
    let q = hpd_inverse(&q_inv.view())?;
    Ok((r_np, q))
}

/// `Φ_k = R_k^{𝒩𝒫} Q_k^𝒫 (R_k^{𝒩𝒫})^H`.
pub fn build_phi_k(r_np: &CMat, q: &CMat) -> Result<CMat> {
    if r_np.ncols() != q.nrows() || q.nrows() != q.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "R^NP is {:?}, Q is {:?}",
            r_np.dim(),
            q.dim()
        )));
    }
    let phi = r_np.dot(q).dot(&adjoint(&r_np.view()));
    Ok(hermitize(&phi.view()))
}

/// Per-user statistics consumed by estimation, detection and the
/// deterministic equivalents.
#[derive(Debug, Clone)]
pub struct SecondOrderStats {
    pub r: CMat,
    pub phi: CMat,
    /// `R_k^{𝒩𝒫}`, absent under perfect estimation.
    pub r_np: Option<CMat>,
    pub q: Option<CMat>,
    /// `R_k^{𝒩𝒫} Q_k^𝒫`, the LMMSE interpolation matrix.
    pub interpolator: Option<CMat>,
}

impl SecondOrderStats {
    /// Perfect channel knowledge: `Ĥ_k = H_k`, `Φ_k = R_k`.
    pub fn perfect(r: CMat) -> Self {
        SecondOrderStats { phi: r.clone(), r, r_np: None, q: None, interpolator: None }
    }

    pub fn build(
        model: &UserLinkModel,
        numerology: &Numerology,
        data: &[Re],
        pilots: &[Re],
        gamma_ce: f64,
        convention: PilotCovConvention,
    ) -> Result<Self> {
        let r = build_r_k(model, numerology, data);
        let (r_np, q) = build_pilot_second_order(
            model,
            numerology,
            data,
            pilots,
            EstimationQuality::Noisy(gamma_ce),
            convention,
        )?;
        let interpolator = r_np.dot(&q);
        let phi = hermitize(&interpolator.dot(&adjoint(&r_np.view())).view());
        Ok(SecondOrderStats { r, phi, r_np: Some(r_np), q: Some(q), interpolator: Some(interpolator) })
    }

    /// `R_k − Φ_k`.
    pub fn error_covariance(&self) -> CMat {
        &self.r - &self.phi
    }
}

/// `M × M` reductions used when time/frequency correlation is flat over `𝒩`.
#[derive(Debug, Clone)]
pub struct FlatStats {
    /// `Ř_k = Σ_l R_{k,l}^α`
    pub r_check: CMat,
    /// `Ř_{k,j}^{𝒩𝒫}`, one block per pilot RE, referenced to the first data RE.
    pub r_np_check: Vec<CMat>,
    /// `Φ̌_k = Σ_{i,j} Ř_{k,i}^{𝒩𝒫} [Q]_{ij} (Ř_{k,j}^{𝒩𝒫})^H`
    pub phi_check: CMat,
}

impl FlatStats {
    /// Reductions built from the path model. `q` is `Q_k^𝒫`; `None` means
    /// perfect estimation (`Φ̌ = Ř`).
    pub fn build(
        model: &UserLinkModel,
        numerology: &Numerology,
        first_data: Re,
        pilots: &[Re],
        q: Option<&CMat>,
    ) -> Self {
        let m = model.antennas();
        let mut r_check = CMat::zeros((m, m));
        for r_l in &model.spatial {
            r_check += r_l;
        }
        let r_np_check: Vec<CMat> = pilots
            .iter()
            .map(|p| covariance_between(model, numerology, &[first_data], &[*p]))
            .collect();
        let phi_check = match q {
            None => r_check.clone(),
            Some(q) => {
                let mut acc = CMat::zeros((m, m));
                for (i, ri) in r_np_check.iter().enumerate() {
                    for (j, rj) in r_np_check.iter().enumerate() {
                        let qij = q.slice(s![i * m..(i + 1) * m, j * m..(j + 1) * m]);
                        acc += &ri.dot(&qij).dot(&adjoint(&rj.view()));
                    }
                }
                hermitize(&acc.view())
            }
        };
        FlatStats { r_check, r_np_check, phi_check }
    }

    /// `1_{N×N} ⊗ X` for an `M×M` block.
    pub fn expand(block: &CMat, n: usize) -> CMat {
        let m = block.nrows();
        let mut out = CMat::zeros((n * m, n * m));
        for i in 0..n {
            for j in 0..n {
                out.slice_mut(s![i * m..(i + 1) * m, j * m..(j + 1) * m]).assign(block);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::spatial::{user_spatial_corrs, SpatialModel};
    use crate::linalg::{frobenius_norm, hermitian_deviation, min_eigenvalue, spectral_norm_hermitian};

    fn model(m: usize, doppler: f64, profile: PathProfile, spatial: SpatialModel) -> UserLinkModel {
        let corrs = user_spatial_corrs(spatial, m, profile.variances(), 0, 17).unwrap();
        UserLinkModel { user: 0, class: 0, gain: 1.0, doppler_hz: doppler, profile, spatial: corrs }
    }

    fn time_res(t0: usize, n: usize, sc: usize) -> Vec<Re> {
        (0..n).map(|i| Re::new(t0 + i, sc)).collect()
    }

    fn pilots() -> Vec<Re> {
        vec![Re::new(0, 3), Re::new(14, 4), Re::new(28, 5), Re::new(42, 6)]
    }

    #[test]
    fn diagonal_blocks_sum_the_path_correlations() {
        let mdl = model(4, 70.0, PathProfile::etu(), SpatialModel::default());
        let data = time_res(16, 3, 2);
        let r = build_r_k(&mdl, &Numerology::default(), &data);
        let mut sum = CMat::zeros((4, 4));
        for r_l in &mdl.spatial {
            sum += r_l;
        }
        for i in 0..3 {
            let block = r.slice(s![i * 4..(i + 1) * 4, i * 4..(i + 1) * 4]);
            assert!(frobenius_norm(&(&block - &sum).view()) < 1e-12);
        }
        assert!(hermitian_deviation(&r.view()) < 1e-12);
    }

    #[test]
    fn flat_case_is_a_kronecker_product() {
        // f_D = 0 and a single zero-delay path
        let mdl = model(4, 0.0, PathProfile::single_path(), SpatialModel::default());
        let num = Numerology::default();
        let data = time_res(10, 5, 7);
        let r = build_r_k(&mdl, &num, &data);
        let flat = FlatStats::build(&mdl, &num, data[0], &pilots(), None);
        let expanded = FlatStats::expand(&flat.r_check, data.len());
        assert_eq!(frobenius_norm(&(&r - &expanded).view()), 0.0);
    }

    #[test]
    fn single_re_reduces_to_the_sum_of_paths() {
        let mdl = model(3, 70.0, PathProfile::etu(), SpatialModel::default());
        let r = build_r_k(&mdl, &Numerology::default(), &[Re::new(5, 5)]);
        let flat = FlatStats::build(&mdl, &Numerology::default(), Re::new(5, 5), &[], None);
        assert!(frobenius_norm(&(&r - &flat.r_check).view()) < 1e-12);
    }

    #[test]
    fn perfect_pilots_on_data_recover_the_full_covariance() {
        let mdl = model(2, 70.0, PathProfile::etu(), SpatialModel::Identity);
        let num = Numerology::default();
        let data = time_res(3, 3, 1);
        let (r_np, q) = build_pilot_second_order(
            &mdl, &num, &data, &data, EstimationQuality::Perfect, PilotCovConvention::TrueChannel,
        )
        .unwrap();
        let r = build_r_k(&mdl, &num, &data);
        let phi = build_phi_k(&r_np, &q).unwrap();
        // R is nearly singular at 70 Hz over three adjacent symbols, which
        // costs a few digits in Q = R^{-1}
        let max_err = (&phi - &r).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(max_err < 1e-8, "{max_err:e}");
        let rq = r.dot(&q);
        let max_id = (&rq - &eye(rq.nrows())).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(max_id < 1e-8);
    }

    #[test]
    fn single_pilot_single_path_q_is_scalar() {
        let mdl = model(3, 0.0, PathProfile::single_path(), SpatialModel::Identity);
        let gamma = 4.0;
        let (_, q) = build_pilot_second_order(
            &mdl,
            &Numerology::default(),
            &[Re::new(2, 0)],
            &[Re::new(0, 0)],
            EstimationQuality::Noisy(gamma),
            PilotCovConvention::TrueChannel,
        )
        .unwrap();
        let expect = 1.0 / (1.0 / gamma + 1.0);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { expect } else { 0.0 };
                assert!((q[[i, j]] - C64::new(e, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn vanishing_snr_kills_the_estimate() {
        let mdl = model(2, 70.0, PathProfile::etu(), SpatialModel::default());
        let st = SecondOrderStats::build(
            &mdl, &Numerology::default(), &time_res(4, 2, 1), &pilots(), 1e-12, PilotCovConvention::TrueChannel,
        )
        .unwrap();
        assert!(frobenius_norm(&st.phi.view()) < 1e-10);
    }

    #[test]
    fn phi_is_psd_and_below_r() {
        for (doppler, spatial) in [(70.0, SpatialModel::default()), (300.0, SpatialModel::Identity), (0.0, SpatialModel::default())] {
            let mdl = model(4, doppler, PathProfile::etu(), spatial);
            let st = SecondOrderStats::build(
                &mdl, &Numerology::default(), &time_res(44, 6, 6), &pilots(), 31.6, PilotCovConvention::TrueChannel,
            )
            .unwrap();
            let scale = spectral_norm_hermitian(&st.r.view()).unwrap();
            assert!(min_eigenvalue(&st.phi.view()).unwrap() >= -1e-10 * scale);
            assert!(min_eigenvalue(&st.error_covariance().view()).unwrap() >= -1e-10 * scale);
            assert!(hermitian_deviation(&st.phi.view()) < 1e-12);
        }
    }

    #[test]
    fn flat_phi_matches_the_full_phi() {
        let mdl = model(4, 0.0, PathProfile::single_path(), SpatialModel::default());
        let num = Numerology::default();
        let data = time_res(44, 6, 6);
        let st = SecondOrderStats::build(&mdl, &num, &data, &pilots(), 10.0, PilotCovConvention::TrueChannel).unwrap();
        let flat = FlatStats::build(&mdl, &num, data[0], &pilots(), st.q.as_ref());
        let expanded = FlatStats::expand(&flat.phi_check, data.len());
        assert!(frobenius_norm(&(&st.phi - &expanded).view()) < 1e-10);
        // block structure of R^NP
        let r_np = st.r_np.as_ref().unwrap();
        for i in 0..data.len() {
            for (j, blk) in flat.r_np_check.iter().enumerate() {
                let got = r_np.slice(s![i * 4..(i + 1) * 4, j * 4..(j + 1) * 4]);
                assert!(frobenius_norm(&(&got - blk).view()) < 1e-12);
            }
        }
    }

    #[test]
    fn literal_convention_shrinks_the_estimate() {
        let mdl = model(2, 70.0, PathProfile::etu(), SpatialModel::Identity);
        let num = Numerology::default();
        let data = time_res(44, 2, 6);
        let a = SecondOrderStats::build(&mdl, &num, &data, &pilots(), 2.0, PilotCovConvention::TrueChannel).unwrap();
        let b = SecondOrderStats::build(&mdl, &num, &data, &pilots(), 2.0, PilotCovConvention::Literal).unwrap();
        assert!(crate::linalg::trace(&b.phi.view()).re < crate::linalg::trace(&a.phi.view()).re);
    }

    #[test]
    fn phi_dimension_mismatch() {
        assert!(matches!(
            build_phi_k(&CMat::zeros((4, 2)), &CMat::zeros((3, 3))),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
