use serde::{Deserialize, Serialize};

use crate::channel::bessel::bessel_j0;
use crate::error::{Error, Result};

/// OFDM numerology.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerology {
    #[serde(default = "default_fft")]
    pub fft_size: usize,
    #[serde(default = "default_cp")]
    pub cp_len: usize,
    /// `T_s = 1/W` in seconds.
    #[serde(default = "default_ts")]
    pub sample_period_s: f64,
}

fn default_fft() -> usize {
    1024
}
fn default_cp() -> usize {
    72
}
fn default_ts() -> f64 {
    1e-7
}

impl Default for Numerology {
    fn default() -> Self {
        Numerology { fft_size: default_fft(), cp_len: default_cp(), sample_period_s: default_ts() }
    }
}

impl Numerology {
    /// `(N_FFT + N_CP) T_s`
    pub fn symbol_duration_s(&self) -> f64 {
        (self.fft_size + self.cp_len) as f64 * self.sample_period_s
    }

    /// `N_FFT T_s`; subcarrier `n` of path delay `τ` rotates by `e^{-2πiτn/(N_FFT T_s)}`.
    pub fn useful_duration_s(&self) -> f64 {
        self.fft_size as f64 * self.sample_period_s
    }

    pub fn subcarrier_spacing_hz(&self) -> f64 {
        1.0 / self.useful_duration_s()
    }

    pub fn cp_duration_s(&self) -> f64 {
        self.cp_len as f64 * self.sample_period_s
    }
}

/// `r^α(Δt) = J0(2π f_D (N_FFT + N_CP) T_s Δt)`.
pub fn temporal_corr(doppler_hz: f64, dt_symbols: i64, numerology: &Numerology) -> f64 {
    bessel_j0(2.0 * std::f64::consts::PI * doppler_hz * numerology.symbol_duration_s() * dt_symbols as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathProfile {
    delays_s: Vec<f64>,
    variances: Vec<f64>,
}

/// Extended Typical Urban taps: (delay in ns, relative power in dB).
pub const ETU_TAPS: [(f64, f64); 9] = [
    (0.0, -1.0),
    (50.0, -1.0),
    (120.0, -1.0),
    (200.0, 0.0),
    (230.0, 0.0),
    (500.0, 0.0),
    (1600.0, -3.0),
    (2300.0, -5.0),
    (5000.0, -7.0),
];

impl PathProfile {
    /// Variances must already sum to one.
    pub fn new(delays_s: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        if delays_s.is_empty() || delays_s.len() != variances.len() {
            return Err(Error::InvalidConfig(
                "path profile needs matching, non-empty delay and variance lists".into(),
            ));
        }
        if delays_s.iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::InvalidConfig("path delays must be non-negative".into()));
        }
        if delays_s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("path delays must be strictly increasing".into()));
        }
        if variances.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidConfig("path variances must be non-negative".into()));
        }
        let total: f64 = variances.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "path variances sum to {total}, expected 1"
            )));
        }
        Ok(PathProfile { delays_s, variances })
    }

    /// Rescales arbitrary non-negative powers to unit total.
    pub fn normalized(delays_s: Vec<f64>, powers: Vec<f64>) -> Result<Self> {
        let total: f64 = powers.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidConfig("path powers must have positive sum".into()));
        }
        Self::new(delays_s, powers.into_iter().map(|p| p / total).collect())
    }

    pub fn etu() -> Self {
        let delays = ETU_TAPS.iter().map(|(ns, _)| ns * 1e-9).collect();
        let powers = ETU_TAPS.iter().map(|(_, db)| 10f64.powf(db / 10.0)).collect();
        Self::normalized(delays, powers).expect("static table")
    }

    pub fn single_path() -> Self {
        PathProfile { delays_s: vec![0.0], variances: vec![1.0] }
    }

    pub fn len(&self) -> usize {
        self.delays_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays_s.is_empty()
    }

    pub fn delays_s(&self) -> &[f64] {
        &self.delays_s
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn max_delay_s(&self) -> f64 {
        self.delays_s.last().copied().unwrap_or(0.0)
    }

    /// No inter-symbol interference: every delay fits in the cyclic prefix.
    pub fn check_against(&self, numerology: &Numerology) -> Result<()> {
        if self.max_delay_s() > numerology.cp_duration_s() * (1.0 + 1e-12) {
            return Err(Error::InvalidConfig(format!(
                "max path delay {:.3e}s exceeds the cyclic prefix {:.3e}s",
                self.max_delay_s(),
                numerology.cp_duration_s()
            )));
        }
        Ok(())
    }
}
