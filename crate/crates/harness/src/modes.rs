//! Design-mode labels used on the CLI and in CSV rows.
//!
//! A label is `<placement>-<objective>-<coupling>` out of
//! `dynamic|static`, `ee|se`, `tunable|fixed`, or the standalone
//! `fixed-antenna` baseline. `fixed` pins every split coefficient at 0.5.

use pass_core::{
    AllocationObjective, CouplingPolicy, DesignMode, PassError, PlacementPolicy, Result,
};

pub const FIXED_SPLIT: f64 = 0.5;

/// All nine labels, in the order the default sweeps run them.
pub const ALL: [&str; 9] = [
    "dynamic-ee-tunable",
    "dynamic-ee-fixed",
    "dynamic-se-tunable",
    "dynamic-se-fixed",
    "static-ee-tunable",
    "static-ee-fixed",
    "static-se-tunable",
    "static-se-fixed",
    "fixed-antenna",
];

pub fn parse(label: &str) -> Result<DesignMode> {
    if label == "fixed-antenna" {
        return Ok(DesignMode {
            placement: PlacementPolicy::FixedCenterAntenna,
            coupling: CouplingPolicy::Fixed(0.0),
            allocation_objective: AllocationObjective::EnergyEfficiency,
        });
    }
    let parts: Vec<&str> = label.split('-').collect();
    let [placement, objective, coupling] = parts.as_slice() else {
        return Err(PassError::Config(format!(
            "unknown design mode '{label}' (expected placement-objective-coupling or fixed-antenna)"
        )));
    };
    let placement = match *placement {
        "dynamic" => PlacementPolicy::Dynamic,
        "static" => PlacementPolicy::Static,
        other => {
            return Err(PassError::Config(format!(
                "unknown placement '{other}' in mode '{label}'"
            )))
        }
    };
    let allocation_objective = match *objective {
        "ee" => AllocationObjective::EnergyEfficiency,
        "se" => AllocationObjective::SpectralEfficiency,
        other => {
            return Err(PassError::Config(format!(
                "unknown objective '{other}' in mode '{label}'"
            )))
        }
    };
    let coupling = match *coupling {
        "tunable" => CouplingPolicy::Tunable,
        "fixed" => CouplingPolicy::Fixed(FIXED_SPLIT),
        other => {
            return Err(PassError::Config(format!(
                "unknown coupling '{other}' in mode '{label}'"
            )))
        }
    };
    Ok(DesignMode {
        placement,
        allocation_objective,
        coupling,
    })
}

pub fn parse_list(spec: &str) -> Result<Vec<(String, DesignMode)>> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|label| Ok((label.to_string(), parse(label)?)))
        .collect()
}

pub fn default_modes() -> Vec<(String, DesignMode)> {
    ALL.iter()
        .map(|label| (label.to_string(), parse(label).expect("built-in label")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_labels_round_trip() {
        for label in ALL {
            parse(label).unwrap();
        }
    }

    #[test]
    fn rejects_junk() {
        assert!(parse("dynamic-ee").is_err());
        assert!(parse("dynamic-xx-tunable").is_err());
        assert!(parse("hover-ee-tunable").is_err());
        assert!(parse("dynamic-ee-loose").is_err());
    }

    #[test]
    fn list_parsing_skips_blanks() {
        let modes = parse_list("dynamic-ee-tunable, static-se-fixed,").unwrap();
        assert_eq!(modes.len(), 2);
        assert_eq!(modes[1].0, "static-se-fixed");
    }
}
