//! Deterministic equivalents of the MF and MMSE SINRs.
//!
//! Inputs are second-order statistics only: per-user `R_k`, `Φ_k`, codes and
//! received powers `P_c g_k`. The MMSE equivalent is built on the resolvent
//! fixed point in [`fixed_point`].

pub mod fixed_point;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use fixed_point::{
    build_t, build_t_prime, build_t_prime_identity, delta_primes, fixed_point_deltas, DeltaPrime,
    FixedPointProblem, FixedPointSolution, SignatureProducts, SolverOptions,
};

use crate::channel::FlatStats;
use crate::codebook::signature_diagonal;
use crate::error::{Error, Result};
use crate::linalg::{congruence_diag, trace, trace_product, CMat, CVec};

#[derive(Debug, Clone)]
pub struct DeUser {
    /// Class position (0-based).
    pub class: usize,
    /// `P_c g_k`
    pub power_gain: f64,
    pub code: CVec,
    pub r: CMat,
    pub phi: CMat,
}

#[derive(Debug, Clone)]
pub struct DeScenario {
    pub antennas: usize,
    pub noise_w: f64,
    pub users: Vec<DeUser>,
}

/// `C_j R_j C_j^H` and `C_j Φ_j C_j^H` for every user.
struct Spread {
    e: Vec<CMat>,
    f: Vec<CMat>,
}

impl DeScenario {
    /// `I = NM`
    pub fn dim(&self) -> usize {
        self.users.first().map(|u| u.code.len() * self.antennas).unwrap_or(0)
    }

    fn validate(&self) -> Result<()> {
        let dim = self.dim();
        for (k, u) in self.users.iter().enumerate() {
            if u.r.dim() != (dim, dim) || u.phi.dim() != (dim, dim) || u.code.len() * self.antennas != dim {
                return Err(Error::DimensionMismatch(format!("user {k} statistics do not match NM = {dim}")));
            }
        }
        if !(self.noise_w > 0.0) {
            return Err(Error::InvalidConfig("noise power must be positive".into()));
        }
        Ok(())
    }

    fn spread(&self) -> Spread {
        let mut e = Vec::with_capacity(self.users.len());
        let mut f = Vec::with_capacity(self.users.len());
        for u in &self.users {
            let d = signature_diagonal(&u.code, self.antennas);
            e.push(congruence_diag(&d.view(), &u.r.view()));
            f.push(congruence_diag(&d.view(), &u.phi.view()));
        }
        Spread { e, f }
    }

    fn class_members(&self, class: usize) -> Vec<usize> {
        (0..self.users.len()).filter(|&j| self.users[j].class == class).collect()
    }
}

/// How the `j = k` term of the MF interference sum is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MfSelfTerm {
    /// `P g_k (1/I) tr E_k F_k`, the same as every other user.
    #[default]
    Printed,
    /// `P g_k (1/I) tr (E_k − F_k) F_k`: only the estimation error of the
    /// user's own channel leaks into the denominator. This is the limit of
    /// the exact SINR at fixed `K` and is kept as a diagnostic.
    ErrorOnly,
}

/// MF deterministic equivalent for every user:
/// `P g_k ((1/I) tr F_k)² / (σ²/I² tr F_k + (1/I) Σ_j P g_j (1/I) tr E_j F_k)`
/// with `F_k = C_kΦ_kC_k^H`, `E_j = C_jR_jC_j^H`, `I = NM`.
pub fn mf_det_sinr(sc: &DeScenario) -> Result<Vec<f64>> {
    mf_det_sinr_with(sc, MfSelfTerm::Printed)
}

pub fn mf_det_sinr_with(sc: &DeScenario, self_term: MfSelfTerm) -> Result<Vec<f64>> {
    sc.validate()?;
    let dim = sc.dim() as f64;
    let sp = sc.spread();
    Ok((0..sc.users.len())
        .map(|k| {
            let tr_f = trace(&sp.f[k].view()).re;
            let mut interference = 0.0;
            for (j, u) in sc.users.iter().enumerate() {
                let mut t = trace_product(&sp.e[j].view(), &sp.f[k].view()).re;
                if j == k && self_term == MfSelfTerm::ErrorOnly {
                    t -= trace_product(&sp.f[k].view(), &sp.f[k].view()).re;
                }
                interference += u.power_gain * t / dim;
            }
            let num = sc.users[k].power_gain * (tr_f / dim).powi(2);
            let den = sc.noise_w / (dim * dim) * tr_f + interference / dim;
            if num == 0.0 {
                0.0
            } else {
                num / den
            }
        })
        .collect())
}

/// Regularizer used for the MMSE fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhoConvention {
    /// `ρ = σ²/(NM)`: the MMSE inverse divided by `I = NM`.
    #[default]
    PerDimension,
    /// `ρ = σ²/M`.
    PerAntenna,
}

impl RhoConvention {
    pub fn rho(self, noise_w: f64, spreading: usize, antennas: usize) -> f64 {
        match self {
            RhoConvention::PerDimension => noise_w / (spreading * antennas) as f64,
            RhoConvention::PerAntenna => noise_w / antennas as f64,
        }
    }
}

/// The `F` argument of `δ'_{ck}` and `T'_{ck}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FArgument {
    /// `F = P_c g_k C_kΦ_kC_k^H`, the `k`-th signature of the fixed point.
    #[default]
    ScaledSignature,
    /// `F = Φ_k`.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MmseOptions {
    pub rho: RhoConvention,
    pub f_argument: FArgument,
    /// Keep only the `j ∈ 𝒦_c` terms of the `μ` sum.
    pub intra_class_only: bool,
    pub solver: SolverOptions,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmseUserTerms {
    pub user: usize,
    pub gamma: f64,
    /// `δ_{ck}`
    pub delta: f64,
    /// `δ'_{ck,k}`
    pub delta_prime: f64,
    /// `σ²/I² tr P g_k C_kΦ_kC_k^H T̄'_c`
    pub noise_term: f64,
    /// `(1/I) Σ_j μ_{c c̃ k j}`
    pub mu_sum: f64,
}

#[derive(Debug, Clone)]
pub struct MmseClassResult {
    pub class: usize,
    pub users: Vec<MmseUserTerms>,
    pub iterations: usize,
    pub residual: f64,
    pub delta: Vec<f64>,
    /// Condition number of `I_J − J`.
    pub condition: f64,
}

/// MMSE deterministic equivalent for every user of `class`.
pub fn mmse_det_sinr(sc: &DeScenario, class: usize, opts: &MmseOptions) -> Result<MmseClassResult> {
    sc.validate()?;
    let sp = sc.spread();
    mmse_class(sc, &sp, class, opts)
}

fn mmse_class(sc: &DeScenario, sp: &Spread, class: usize, opts: &MmseOptions) -> Result<MmseClassResult> {
    let members = sc.class_members(class);
    let dim = sc.dim();
    let inv = 1.0 / dim as f64;
    let spreading = sc.users.first().map(|u| u.code.len()).unwrap_or(0);
    let rho = opts.rho.rho(sc.noise_w, spreading, sc.antennas);
    let signatures: Vec<CMat> = members.iter().map(|&j| sp.f[j].mapv(|z| z * sc.users[j].power_gain)).collect();
    let problem = FixedPointProblem::new(rho, dim, signatures)?;
    let sol = fixed_point_deltas(&problem, &opts.solver)?;
    let products = SignatureProducts::new(&problem, &sol)?;
    let (_, t_bar) = build_t_prime_identity(&problem, &sol, &products);
    // ϑ_{c c̃ j} = (1/I) tr S_j T_c
    let theta: Vec<f64> = problem.signatures.iter().map(|s| trace_product(&s.view(), &sol.t.view()).re * inv).collect();
    let others: Vec<usize> = if opts.intra_class_only {
        members.clone()
    } else {
        (0..sc.users.len()).collect()
    };
    let mut users = Vec::with_capacity(members.len());
    for (a, &k) in members.iter().enumerate() {
        let (dp, f) = match opts.f_argument {
            FArgument::ScaledSignature => (products.delta_primes_for_signature(&problem, &sol, a), problem.signatures[a].clone()),
            FArgument::Literal => {
                let f = sc.users[k].phi.clone();
                (products.delta_primes(&problem, &sol, &f), f)
            }
        };
        let t_prime = build_t_prime(&problem, &sol, &dp.delta_prime, &f);
        let mut mu_sum = 0.0;
        for &j in &others {
            let mut mu = sc.users[j].power_gain * inv * trace_product(&sp.e[j].view(), &t_prime.view()).re;
            if let Some(b) = members.iter().position(|&m| m == j) {
                let theta_p = trace_product(&problem.signatures[b].view(), &t_prime.view()).re * inv;
                let d = sol.delta[b];
                mu -= (2.0 * theta[b] * theta_p * (1.0 + d) - theta[b] * theta[b] * dp.delta_prime[b]) / (1.0 + d).powi(2);
            }
            mu_sum += mu;
        }
        mu_sum *= inv;
        let noise_term = sc.noise_w * inv * inv * trace_product(&problem.signatures[a].view(), &t_bar.view()).re;
        let delta = sol.delta[a];
        let den = noise_term + mu_sum;
        let gamma = if delta == 0.0 { 0.0 } else { delta * delta / den };
        users.push(MmseUserTerms { user: k, gamma, delta, delta_prime: dp.delta_prime[a], noise_term, mu_sum });
    }
    Ok(MmseClassResult {
        class,
        users,
        iterations: sol.iterations,
        residual: sol.residual,
        delta: sol.delta.clone(),
        condition: products.condition,
    })
}

/// MMSE equivalents for several classes, sharing the spread statistics.
pub fn mmse_det_sinr_classes(sc: &DeScenario, classes: &[usize], opts: &MmseOptions) -> Result<Vec<MmseClassResult>> {
    sc.validate()?;
    let sp = sc.spread();
    classes.iter().map(|&c| mmse_class(sc, &sp, c, opts)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReducedMode {
    MfFlat,
    MmseFlat,
    MfIid,
}

#[derive(Debug, Clone)]
pub struct FlatUser {
    pub class: usize,
    pub power_gain: f64,
    /// `w_k`
    pub signature: CVec,
    /// `c_k`
    pub code: CVec,
    pub stats: FlatStats,
}

#[derive(Debug, Clone)]
pub struct FlatScenario {
    pub antennas: usize,
    pub noise_w: f64,
    pub users: Vec<FlatUser>,
    /// Set when every `R_{k,l}^α = σ_l² I_M`.
    pub identity_spatial: bool,
}

impl FlatScenario {
    /// The full `NM × NM` statistics `1_{N×N} ⊗ Ř_k`, `1_{N×N} ⊗ Φ̌_k`.
    pub fn expand(&self) -> DeScenario {
        let users = self
            .users
            .iter()
            .map(|u| {
                let n = u.code.len();
                DeUser {
                    class: u.class,
                    power_gain: u.power_gain,
                    code: u.code.clone(),
                    r: FlatStats::expand(&u.stats.r_check, n),
                    phi: FlatStats::expand(&u.stats.phi_check, n),
                }
            })
            .collect();
        DeScenario { antennas: self.antennas, noise_w: self.noise_w, users }
    }
}

/// Reduced deterministic equivalents for flat time/frequency correlation.
pub fn det_sinr_reduced(mode: ReducedMode, sc: &FlatScenario, opts: &MmseOptions) -> Result<Vec<f64>> {
    let m = sc.antennas as f64;
    let k_total = sc.users.len();
    match mode {
        ReducedMode::MfFlat => Ok((0..k_total)
            .map(|k| {
                let uk = &sc.users[k];
                let tr_phi = trace(&uk.stats.phi_check.view()).re;
                let mut interference = 0.0;
                for uj in sc.users.iter().filter(|u| u.class == uk.class) {
                    let overlap: f64 = uj
                        .signature
                        .iter()
                        .zip(uk.signature.iter())
                        .map(|(a, b)| a.conj() * b)
                        .sum::<num_complex::Complex64>()
                        .norm_sqr();
                    interference += uj.power_gain / m * overlap * trace_product(&uj.stats.r_check.view(), &uk.stats.phi_check.view()).re;
                }
                let num = uk.power_gain * (tr_phi / m).powi(2);
                if num == 0.0 {
                    0.0
                } else {
                    num / (sc.noise_w / (m * m) * tr_phi + interference / m)
                }
            })
            .collect()),
        ReducedMode::MmseFlat => {
            let full = sc.expand();
            let classes: Vec<usize> = {
                let mut c: Vec<usize> = sc.users.iter().map(|u| u.class).collect();
                c.sort_unstable();
                c.dedup();
                c
            };
            let opts = MmseOptions { intra_class_only: true, ..*opts };
            let mut out = vec![f64::NAN; k_total];
            for res in mmse_det_sinr_classes(&full, &classes, &opts)? {
                for u in res.users {
                    out[u.user] = u.gamma;
                }
            }
            Ok(out)
        }
        ReducedMode::MfIid => {
            if !sc.identity_spatial || sc.users.iter().any(|u| !is_identity(&u.stats.r_check)) {
                return Err(Error::ModePreconditionViolated(
                    "the i.i.d. reduction needs R_{k,l} = σ_l² I_M for every user and path".into(),
                ));
            }
            Ok((0..k_total)
                .map(|k| {
                    let uk = &sc.users[k];
                    let class: Vec<&FlatUser> = sc.users.iter().filter(|u| u.class == uk.class).collect();
                    let k_c = class.len() as f64;
                    let mean_pg = class.iter().map(|u| u.power_gain).sum::<f64>() / k_c;
                    let n_c = uk.signature.len() as f64;
                    let tr_phi = trace(&uk.stats.phi_check.view()).re / m;
                    uk.power_gain * tr_phi / (sc.noise_w / m + mean_pg * k_c / (n_c * m))
                })
                .collect())
        }
    }
}

fn is_identity(r: &CMat) -> bool {
    r.indexed_iter().all(|((i, j), z)| {
        let e = if i == j { 1.0 } else { 0.0 };
        (z.re - e).abs() < 1e-9 && z.im.abs() < 1e-9
    })
}

/// Scalar closed form of the i.i.d. reduction.
pub fn mf_iid_closed_form(snr: f64, trace_ratio: f64, antennas: usize, users: usize, width: usize) -> f64 {
    // with σ² = 1 and ḡ = g
    let m = antennas as f64;
    snr * trace_ratio / (1.0 / m + snr * users as f64 / (width as f64 * m))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub class: usize,
    pub iterations: usize,
    pub residual: f64,
    /// `δ` values separated by `;`.
    pub deltas: String,
    pub condition_number: f64,
}

impl From<&MmseClassResult> for DiagnosticsRow {
    fn from(r: &MmseClassResult) -> Self {
        DiagnosticsRow {
            class: r.class + 1,
            iterations: r.iterations,
            residual: r.residual,
            deltas: r.delta.iter().map(|d| format!("{d:.12e}")).collect::<Vec<_>>().join(";"),
            condition_number: r.condition,
        }
    }
}

pub fn write_diagnostics_csv<W: Write>(rows: &[DiagnosticsRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
