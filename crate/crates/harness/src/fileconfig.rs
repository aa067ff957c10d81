//! TOML experiment configs: a `[system]` table whose keys mirror the
//! runtime config, layered on top of a named profile. Powers may be given
//! in watts or dBm (`*_dbm` keys), the carrier in Hz or GHz — but not both
//! spellings at once.

use serde::Deserialize;
use std::path::Path;
use std::str::FromStr;

use pass_core::{dbm_to_watts, LogBase, PassError, Result, SystemConfig};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub system: Option<SystemTable>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemTable {
    pub carrier_frequency: Option<f64>,
    pub carrier_frequency_ghz: Option<f64>,
    pub refractive_index: Option<f64>,
    pub waveguide_length: Option<f64>,
    pub waveguide_height: Option<f64>,
    pub region_depth: Option<f64>,
    pub num_elements: Option<usize>,
    pub min_spacing: Option<f64>,
    pub num_users: Option<usize>,
    pub circuit_power: Option<f64>,
    pub circuit_power_dbm: Option<f64>,
    pub noise_power: Option<f64>,
    pub noise_power_dbm: Option<f64>,
    pub attenuation_amplitude: Option<f64>,
    pub power_budget_per_slot: Option<f64>,
    pub power_budget_per_slot_dbm: Option<f64>,
    pub grid_points: Option<usize>,
    pub samples_per_window: Option<usize>,
    pub dinkelbach_tolerance: Option<f64>,
    pub gradient_step: Option<f64>,
    pub outer_tolerance: Option<f64>,
    pub max_outer_iterations: Option<usize>,
    pub coupling_constant: Option<f64>,
    pub rng_seed: Option<u64>,
    pub log_base: Option<String>,
    pub plain_gradient: Option<bool>,
}

pub fn load(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| PassError::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| PassError::Config(format!("{}: {e}", path.display())))
}

fn pick(
    name: &str,
    plain: Option<f64>,
    dbm: Option<f64>,
) -> Result<Option<f64>> {
    match (plain, dbm) {
        (Some(_), Some(_)) => Err(PassError::Config(format!(
            "both {name} and {name}_dbm set; pick one"
        ))),
        (Some(w), None) => Ok(Some(w)),
        (None, Some(d)) => Ok(Some(dbm_to_watts(d))),
        (None, None) => Ok(None),
    }
}

impl FileConfig {
    /// Layer the file's values onto `config`. A changed carrier frequency
    /// re-derives the wavelength-based spacing and attenuation amplitude
    /// unless the file pins them explicitly.
    pub fn apply(&self, config: &mut SystemConfig) -> Result<()> {
        let Some(sys) = &self.system else {
            return Ok(());
        };

        let freq = match (sys.carrier_frequency, sys.carrier_frequency_ghz) {
            (Some(_), Some(_)) => {
                return Err(PassError::Config(
                    "both carrier_frequency and carrier_frequency_ghz set; pick one".into(),
                ))
            }
            (Some(hz), None) => Some(hz),
            (None, Some(ghz)) => Some(ghz * 1e9),
            (None, None) => None,
        };
        if let Some(hz) = freq {
            config.carrier_frequency = hz;
            let lambda = config.wavelength();
            config.min_spacing = lambda / 2.0;
            config.attenuation_amplitude = lambda / (4.0 * std::f64::consts::PI);
        }

        macro_rules! set {
            ($field:ident) => {
                if let Some(v) = sys.$field {
                    config.$field = v;
                }
            };
        }
        set!(refractive_index);
        set!(waveguide_length);
        set!(waveguide_height);
        set!(region_depth);
        set!(num_elements);
        set!(min_spacing);
        set!(num_users);
        set!(attenuation_amplitude);
        set!(grid_points);
        set!(samples_per_window);
        set!(dinkelbach_tolerance);
        set!(gradient_step);
        set!(outer_tolerance);
        set!(max_outer_iterations);
        set!(rng_seed);
        set!(plain_gradient);
        if sys.coupling_constant.is_some() {
            config.coupling_constant = sys.coupling_constant;
        }

        if let Some(w) = pick("circuit_power", sys.circuit_power, sys.circuit_power_dbm)? {
            config.circuit_power = w;
        }
        if let Some(w) = pick("noise_power", sys.noise_power, sys.noise_power_dbm)? {
            config.noise_power = w;
        }
        if let Some(w) = pick(
            "power_budget_per_slot",
            sys.power_budget_per_slot,
            sys.power_budget_per_slot_dbm,
        )? {
            config.power_budget_per_slot = w;
        }
        if let Some(base) = &sys.log_base {
            config.log_base = LogBase::from_str(base)?;
        }
        config.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> FileConfig {
        toml::from_str(text).unwrap()
    }

    #[test]
    fn dbm_fields_convert() {
        let fc = parse(
            "[system]\npower_budget_per_slot_dbm = 20.0\nnoise_power_dbm = -90.0\n",
        );
        let mut config = SystemConfig::ci();
        fc.apply(&mut config).unwrap();
        assert!((config.power_budget_per_slot - 0.1).abs() < 1e-12);
        assert!((config.noise_power - 1e-12).abs() < 1e-24);
    }

    #[test]
    fn both_spellings_rejected() {
        let fc = parse(
            "[system]\npower_budget_per_slot = 0.1\npower_budget_per_slot_dbm = 20.0\n",
        );
        let mut config = SystemConfig::ci();
        assert!(fc.apply(&mut config).is_err());
    }

    #[test]
    fn frequency_rederives_wavelength_constants() {
        let fc = parse("[system]\ncarrier_frequency_ghz = 14.0\n");
        let mut config = SystemConfig::ci();
        fc.apply(&mut config).unwrap();
        let lambda = 299_792_458.0 / 14e9;
        assert!((config.min_spacing - lambda / 2.0).abs() < 1e-12);
        assert!(
            (config.attenuation_amplitude - lambda / (4.0 * std::f64::consts::PI)).abs() < 1e-15
        );
    }

    #[test]
    fn explicit_spacing_wins_over_derivation() {
        let fc = parse("[system]\ncarrier_frequency_ghz = 14.0\nmin_spacing = 0.25\n");
        let mut config = SystemConfig::ci();
        fc.apply(&mut config).unwrap();
        assert_eq!(config.min_spacing, 0.25);
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        assert!(toml::from_str::<FileConfig>("[system]\nwibble = 3\n").is_err());
    }
}
