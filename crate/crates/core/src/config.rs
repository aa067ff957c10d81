//! System configuration: physical constants, geometry, budgets and solver
//! tolerances. All internal math is in SI units; dBm/GHz conversions happen
//! at this boundary only.

use crate::error::{PassError, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Logarithm base used for rates. Base-2 yields bit/s/Hz; the natural-log
/// variant is provided for comparison against nats-based conventions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    Base2,
    Natural,
}

impl LogBase {
    /// Scale factor `s` such that rate = ln(1 + x) / s.
    pub fn scale(self) -> f64 {
        match self {
            LogBase::Base2 => std::f64::consts::LN_2,
            LogBase::Natural => 1.0,
        }
    }
}

impl std::str::FromStr for LogBase {
    type Err = PassError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "base2" | "log2" | "2" => Ok(LogBase::Base2),
            "natural" | "ln" | "e" => Ok(LogBase::Natural),
            other => Err(PassError::Config(format!("unknown log base `{other}`"))),
        }
    }
}

/// Convert a dBm level to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Convert watts to a dBm level.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// All physical and algorithmic constants of one system instance.
///
/// The waveguide runs along the x-axis at height `waveguide_height`, spanning
/// `[0, waveguide_length]`; the service region is the rectangle of side
/// `waveguide_length` x `region_depth` centered under it.
#[derive(Debug, Clone)]
pub struct SystemConfig {
    /// Carrier frequency, Hz.
    pub carrier_frequency: f64,
    /// Effective refractive index of the waveguide.
    pub refractive_index: f64,
    /// Waveguide length L, meters; equals the region side D_x.
    pub waveguide_length: f64,
    /// Deployment height a of the waveguide, meters.
    pub waveguide_height: f64,
    /// Region depth D_y, meters.
    pub region_depth: f64,
    /// Number of pinching elements N.
    pub num_elements: usize,
    /// Minimum spacing between elements, meters.
    pub min_spacing: f64,
    /// Number of users K.
    pub num_users: usize,
    /// Circuit power per RF chain, watts.
    pub circuit_power: f64,
    /// Noise power per user, watts (uniform default).
    pub noise_power: f64,
    /// Attenuation amplitude per user (uniform default).
    pub attenuation_amplitude: f64,
    /// Per-slot average input power limit P_0, watts.
    pub power_budget_per_slot: f64,
    /// Grid resolution Q for location search.
    pub grid_points: usize,
    /// Number of sampled frames m per coherence window.
    pub samples_per_window: usize,
    /// Dinkelbach stopping tolerance on the subtractive residual.
    pub dinkelbach_tolerance: f64,
    /// Gradient-ascent step size for coupling tuning.
    pub gradient_step: f64,
    /// Relative objective-change tolerance for the outer loops.
    pub outer_tolerance: f64,
    /// Cap on outer block-coordinate iterations.
    pub max_outer_iterations: usize,
    /// Coupling constant kappa, rad/m; only needed for length conversions.
    pub coupling_constant: Option<f64>,
    /// Seed for scenario sampling.
    pub rng_seed: u64,
    /// Rate logarithm base.
    pub log_base: LogBase,
    /// Disable backtracking line search in the coupling tuner.
    pub plain_gradient: bool,
}

impl SystemConfig {
    /// Parameter set used for the reference experiments: K=6 users in a
    /// 50 m x 20 m region, 28 GHz carrier, lambda/2 spacing, 0 dBm circuit
    /// power, -90 dBm noise, Q=10^4 grid.
    pub fn paper_v() -> Self {
        let carrier_frequency = 28e9;
        let wavelength = SPEED_OF_LIGHT / carrier_frequency;
        SystemConfig {
            carrier_frequency,
            refractive_index: 1.4,
            waveguide_length: 50.0,
            waveguide_height: 3.0,
            region_depth: 20.0,
            num_elements: 10,
            min_spacing: wavelength / 2.0,
            num_users: 6,
            circuit_power: dbm_to_watts(0.0),
            noise_power: dbm_to_watts(-90.0),
            attenuation_amplitude: wavelength / (4.0 * std::f64::consts::PI),
            power_budget_per_slot: dbm_to_watts(10.0),
            grid_points: 10_000,
            samples_per_window: 50,
            dinkelbach_tolerance: 1e-6,
            gradient_step: 0.01,
            outer_tolerance: 1e-6,
            max_outer_iterations: 50,
            coupling_constant: None,
            rng_seed: 42,
            log_base: LogBase::Base2,
            plain_gradient: false,
        }
    }

    /// Desk-scale profile for CI: same physics as `paper_v` with m=20
    /// frames and a Q=2000 grid.
    pub fn ci() -> Self {
        SystemConfig {
            grid_points: 2_000,
            samples_per_window: 20,
            outer_tolerance: 1e-5,
            ..Self::paper_v()
        }
    }

    /// Check all field invariants.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier_frequency", self.carrier_frequency),
            ("refractive_index", self.refractive_index),
            ("waveguide_length", self.waveguide_length),
            ("waveguide_height", self.waveguide_height),
            ("min_spacing", self.min_spacing),
            ("circuit_power", self.circuit_power),
            ("noise_power", self.noise_power),
            ("attenuation_amplitude", self.attenuation_amplitude),
            ("power_budget_per_slot", self.power_budget_per_slot),
            ("dinkelbach_tolerance", self.dinkelbach_tolerance),
            ("gradient_step", self.gradient_step),
            ("outer_tolerance", self.outer_tolerance),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(PassError::Config(format!(
                    "{name} must be strictly positive and finite, got {value}"
                )));
            }
        }
        if self.region_depth < 0.0 || !self.region_depth.is_finite() {
            return Err(PassError::Config(format!(
                "region_depth must be nonnegative, got {}",
                self.region_depth
            )));
        }
        if self.num_elements == 0 {
            return Err(PassError::Config("num_elements must be at least 1".into()));
        }
        if self.num_users == 0 {
            return Err(PassError::Config("num_users must be at least 1".into()));
        }
        if self.grid_points < 2 {
            return Err(PassError::Config("grid_points must be at least 2".into()));
        }
        if self.samples_per_window == 0 {
            return Err(PassError::Config(
                "samples_per_window must be at least 1".into(),
            ));
        }
        if self.max_outer_iterations == 0 {
            return Err(PassError::Config(
                "max_outer_iterations must be at least 1".into(),
            ));
        }
        if let Some(kappa) = self.coupling_constant {
            if !(kappa > 0.0) || !kappa.is_finite() {
                return Err(PassError::Config(format!(
                    "coupling_constant must be strictly positive, got {kappa}"
                )));
            }
        }
        // The feasible location set must be nonempty.
        let span = (self.num_elements as f64 - 1.0) * self.min_spacing;
        if span > self.waveguide_length {
            return Err(PassError::Config(format!(
                "(N-1)*min_spacing = {span} m exceeds waveguide_length = {} m",
                self.waveguide_length
            )));
        }
        Ok(())
    }

    /// Free-space wavelength lambda = c / f_c, meters.
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    /// Free-space wavenumber alpha = 2 pi / lambda, rad/m.
    pub fn free_space_wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavelength()
    }

    /// In-guide wavenumber beta = 2 pi i_ref / lambda, rad/m.
    pub fn guide_wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.refractive_index / self.wavelength()
    }

    /// Per-user link constant Gamma = xi^2 / sigma^2, 1/watts.
    pub fn link_constant(&self) -> f64 {
        self.attenuation_amplitude * self.attenuation_amplitude / self.noise_power
    }

    /// Total input-power budget per slot sum: K * P_0, watts.
    pub fn budget_total(&self) -> f64 {
        self.num_users as f64 * self.power_budget_per_slot
    }

    /// Total circuit power K * P_cir, watts.
    pub fn circuit_power_total(&self) -> f64 {
        self.num_users as f64 * self.circuit_power
    }
}
