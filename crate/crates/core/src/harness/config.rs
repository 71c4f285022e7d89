//! Scenario configuration. Every field has a default matching the reference
//! two-class scenario, so an empty TOML file is a valid configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{Numerology, PathProfile, PilotCovConvention, SpatialModel};
use crate::codebook::{BaseKind, DataLayout, DataPlacement, IntraClassMethod, RbGeometry, ResourceMap, ServiceClass};
use crate::detection::Detector;
use crate::detequiv::{FArgument, RhoConvention};
use crate::error::{Error, Result};
use crate::estimation::{CsiMode, PilotPolicy};
use crate::harness::Scheme;
use crate::units::{db_to_linear, dbm_to_watts};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    /// Master seed for codes, angles, channels and noise.
    pub seed: u64,
    /// Monte Carlo trials per sweep point.
    pub trials: usize,
    /// Antenna counts swept by `rate-vs-antennas`.
    pub antennas: Vec<usize>,
    pub schemes: Vec<Scheme>,
    pub numerology: Numerology,
    pub resources: ResourceConfig,
    pub channel: ChannelConfig,
    pub noise: NoiseConfig,
    pub codebook: CodebookConfig,
    pub classes: Vec<ClassConfig>,
    pub estimation: EstimationConfig,
    pub receiver: ReceiverConfig,
    pub detequiv: DetEquivConfig,
    pub fdma: FdmaConfig,
    pub capacity: CapacityConfig,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            seed: 2024,
            trials: 100,
            antennas: vec![16, 32, 64],
            schemes: vec![Scheme::Moma, Scheme::RandomSpreading, Scheme::Repetition, Scheme::Fdma],
            numerology: Numerology::default(),
            resources: ResourceConfig::default(),
            channel: ChannelConfig::default(),
            noise: NoiseConfig::default(),
            codebook: CodebookConfig::default(),
            classes: vec![
                ClassConfig { users: 6, width: 3, power_dbm: 23.0, snr_db: 15.0, target_rate: 2.0, detector: Detector::Mmse, doppler_hz: 70.0 },
                ClassConfig { users: 18, width: 3, power_dbm: 17.0, snr_db: 1.5, target_rate: 0.5, detector: Detector::Mf, doppler_hz: 70.0 },
            ],
            estimation: EstimationConfig::default(),
            receiver: ReceiverConfig::default(),
            detequiv: DetEquivConfig::default(),
            fdma: FdmaConfig::default(),
            capacity: CapacityConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResourceConfig {
    pub blocks: usize,
    pub subcarriers: usize,
    pub symbols: usize,
    /// Resource block (0-based) carrying the spread samples.
    pub data_block: usize,
    pub first_symbol: usize,
    pub first_subcarrier: usize,
    pub layout: DataLayout,
    pub pilots: PilotPolicy,
}

impl Default for ResourceConfig {
    fn default() -> Self {
        ResourceConfig {
            blocks: 6,
            subcarriers: 12,
            symbols: 14,
            data_block: 3,
            first_symbol: 2,
            first_subcarrier: 6,
            layout: DataLayout::Time,
            pilots: PilotPolicy::default(),
        }
    }
}

impl ResourceConfig {
    pub fn geometry(&self) -> RbGeometry {
        RbGeometry { subcarriers: self.subcarriers, symbols: self.symbols, blocks: self.blocks }
    }

    pub fn data_map(&self, len: usize) -> Result<ResourceMap> {
        let placement = DataPlacement {
            block: self.data_block,
            first_symbol: self.first_symbol,
            first_subcarrier: self.first_subcarrier,
            layout: self.layout,
        };
        ResourceMap::contiguous(self.geometry(), placement, len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tap {
    pub delay_ns: f64,
    pub power_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ProfileConfig {
    Etu,
    SinglePath,
    Taps { taps: Vec<Tap> },
}

impl ProfileConfig {
    pub fn build(&self) -> Result<PathProfile> {
        match self {
            ProfileConfig::Etu => Ok(PathProfile::etu()),
            ProfileConfig::SinglePath => Ok(PathProfile::single_path()),
            ProfileConfig::Taps { taps } => PathProfile::normalized(
                taps.iter().map(|t| t.delay_ns * 1e-9).collect(),
                taps.iter().map(|t| db_to_linear(t.power_db)).collect(),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    pub profile: ProfileConfig,
    pub spatial: SpatialModel,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig { profile: ProfileConfig::Etu, spatial: SpatialModel::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    /// Noise power spectral density `N_0`.
    pub psd_dbm_hz: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig { psd_dbm_hz: -174.0 }
    }
}

impl NoiseConfig {
    /// `σ² = N_0 Δf` per subcarrier.
    pub fn noise_w(&self, numerology: &Numerology) -> f64 {
        dbm_to_watts(self.psd_dbm_hz) * numerology.subcarrier_spacing_hz()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CodebookConfig {
    pub base: BaseKind,
    pub method: IntraClassMethod,
}

impl Default for CodebookConfig {
    fn default() -> Self {
        CodebookConfig { base: BaseKind::Dft, method: IntraClassMethod::UnitModulusRandom }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassConfig {
    /// `K_c`
    pub users: usize,
    /// `N_c`
    pub width: usize,
    pub power_dbm: f64,
    /// Received SNR `P_c g_k / σ²` in dB; fixes `g_k`.
    pub snr_db: f64,
    /// `r_c` in bits/s/Hz.
    pub target_rate: f64,
    pub detector: Detector,
    #[serde(default = "default_doppler")]
    pub doppler_hz: f64,
}

fn default_doppler() -> f64 {
    70.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimationConfig {
    pub csi: CsiMode,
    pub pilot_covariance: PilotCovConvention,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        EstimationConfig { csi: CsiMode::Lmmse, pilot_covariance: PilotCovConvention::TrueChannel }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReceiverConfig {
    /// Extend the MMSE inverse over every class.
    pub mmse_all_classes: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetEquivConfig {
    pub rho: RhoConvention,
    pub f_argument: FArgument,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FdmaConfig {
    /// Fraction of the band lost to guards.
    pub guard_fraction: f64,
}

impl Default for FdmaConfig {
    fn default() -> Self {
        FdmaConfig { guard_fraction: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CapacityConfig {
    pub antennas: usize,
    /// Class-1 users kept fixed during the search.
    pub class1_users: usize,
    /// Target rates `r_2` in bits/s/Hz.
    pub target_rates: Vec<f64>,
    /// Largest `K_2` tried.
    pub ceiling: usize,
}

impl Default for CapacityConfig {
    fn default() -> Self {
        CapacityConfig {
            antennas: 64,
            class1_users: 3,
            target_rates: vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0],
            ceiling: 64,
        }
    }
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let sc: Scenario = toml::from_str(text)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.classes.is_empty() {
            return Err(Error::InvalidConfig("at least one class is required".into()));
        }
        if self.antennas.iter().any(|m| *m == 0) {
            return Err(Error::InvalidConfig("antenna counts must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.fdma.guard_fraction) {
            return Err(Error::InvalidConfig(format!(
                "FDMA guard fraction must lie in [0, 1), got {}",
                self.fdma.guard_fraction
            )));
        }
        for (i, c) in self.classes.iter().enumerate() {
            if c.doppler_hz < 0.0 {
                return Err(Error::InvalidConfig(format!("class {} has negative Doppler", i + 1)));
            }
        }
        self.channel.profile.build()?.check_against(&self.numerology)?;
        self.resources.data_map(self.spreading_length())?;
        let classes = self.service_classes(&self.class_sizes());
        if classes.windows(2).any(|w| w[0].target_rate <= w[1].target_rate) {
            return Err(Error::InvalidConfig("classes must be listed in strictly decreasing target rate".into()));
        }
        Ok(())
    }

    /// `N = Σ_c N_c`
    pub fn spreading_length(&self) -> usize {
        self.classes.iter().map(|c| c.width).sum()
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        self.classes.iter().map(|c| c.users).collect()
    }

    pub fn noise_w(&self) -> f64 {
        self.noise.noise_w(&self.numerology)
    }

    pub fn service_classes(&self, sizes: &[usize]) -> Vec<ServiceClass> {
        self.classes
            .iter()
            .zip(sizes)
            .enumerate()
            .map(|(i, (c, &users))| ServiceClass {
                index: i + 1,
                users,
                width: c.width,
                power_w: dbm_to_watts(c.power_dbm),
                target_rate: c.target_rate,
            })
            .collect()
    }

    /// Large-scale gain giving the configured received SNR.
    pub fn gain(&self, class: usize) -> f64 {
        let c = &self.classes[class];
        db_to_linear(c.snr_db) * self.noise_w() / dbm_to_watts(c.power_dbm)
    }

    pub fn detectors(&self) -> Vec<Detector> {
        self.classes.iter().map(|c| c.detector).collect()
    }
}
