//! Fast self-contained invariant suite behind `pass-sim validate`: one
//! line per check, all independent of any config file.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pass_core::coupling::{ee_gradient, ee_value, CouplingObjective, CouplingSample};
use pass_core::power::{dinkelbach_allocate, water_fill, AllocationProblem};
use pass_core::{
    em, generate_scenario, solve, AllocationObjective, CouplingPolicy, DesignMode, Layout,
    LogBase, PlacementPolicy, SplitVector, SystemConfig,
};

type Check = (&'static str, fn() -> Result<(), String>);

fn power_conservation() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..2000 {
        let n = rng.random_range(1..=20);
        let delta: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..=1.0)).collect();
        let sv = SplitVector::new(delta).map_err(|e| e.to_string())?;
        let captured: f64 = sv.effective_splits().iter().map(|a| a * a).sum();
        let total = captured + sv.residual_power_fraction();
        if (total - 1.0).abs() > 1e-12 {
            return Err(format!("power sums to {total} for n = {n}"));
        }
    }
    Ok(())
}

fn symmetric_residual_exact() -> Result<(), String> {
    for n in 1..=20 {
        let sv = SplitVector::uniform(n, 0.5).map_err(|e| e.to_string())?;
        let expect = 0.25f64.powi(n as i32);
        if sv.residual_power_fraction() != expect {
            return Err(format!("residual at n = {n} is not exactly 0.25^{n}"));
        }
    }
    Ok(())
}

fn water_fill_slackness() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let k = rng.random_range(1..=6);
        let prob = AllocationProblem {
            a: (0..k).map(|_| rng.random_range(0.0..10.0)).collect(),
            budget: rng.random_range(0.5..20.0),
            circuit_power_total: 1.0,
            tolerance: 1e-6,
            log_base: LogBase::Base2,
        };
        let lambda = rng.random_range(0.01..2.0);
        let p = water_fill(&prob, lambda).map_err(|e| e.to_string())?;
        let spent: f64 = p.iter().sum();
        if spent > prob.budget + 1e-9 {
            return Err(format!("overspent: {spent} > {}", prob.budget));
        }
        let tight = (spent - prob.budget).abs() <= 1e-6 * prob.budget;
        if !tight {
            // slack case: level must be the multiplier itself
            let level = lambda * prob.log_base.scale();
            for (&pi, &ai) in p.iter().zip(&prob.a) {
                if pi > 0.0 && ai > 0.0 {
                    let implied = 1.0 / (pi + 1.0 / ai);
                    if (implied - level).abs() > 1e-9 * level {
                        return Err(format!("slack water level {implied} vs {level}"));
                    }
                }
            }
        }
    }
    Ok(())
}

fn ratio_iteration_monotone() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..200 {
        let k = rng.random_range(1..=6);
        let prob = AllocationProblem {
            a: (0..k).map(|_| rng.random_range(0.0..50.0)).collect(),
            budget: rng.random_range(0.1..100.0),
            circuit_power_total: rng.random_range(0.1..10.0),
            tolerance: 1e-6,
            log_base: LogBase::Base2,
        };
        let got = dinkelbach_allocate(&prob).map_err(|e| e.to_string())?;
        if got.trace.windows(2).any(|w| w[1] < w[0]) {
            return Err(format!("ratio trace decreased: {:?}", got.trace));
        }
        if got.residual.abs() > prob.tolerance {
            return Err(format!("final gap {} above tolerance", got.residual));
        }
    }
    Ok(())
}

fn channel_reconstruction() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut config = SystemConfig::paper_v();
    config.num_elements = 5;
    config.num_users = 3;
    for _ in 0..20 {
        let positions: Vec<f64> = (0..config.num_elements)
            .map(|_| rng.random_range(0.0..config.waveguide_length))
            .collect();
        let layout = Layout::new(positions, &config).map_err(|e| e.to_string())?;
        let splits = SplitVector::new(
            (0..config.num_elements)
                .map(|_| rng.random_range(0.0..1.0))
                .collect(),
        )
        .map_err(|e| e.to_string())?;
        let users: Vec<[f64; 3]> = (0..config.num_users)
            .map(|_| {
                [
                    rng.random_range(0.0..config.waveguide_length),
                    rng.random_range(-config.region_depth / 2.0..config.region_depth / 2.0),
                    0.0,
                ]
            })
            .collect();
        let frame = pass_core::UserFrame::new(users.clone(), &config).map_err(|e| e.to_string())?;
        let eval = em::evaluate_channel(&frame, &layout, &splits, &config)
            .map_err(|e| e.to_string())?;
        // independent accumulation with bare trig
        let alpha = config.free_space_wavenumber();
        let beta = config.guide_wavenumber();
        let amp = splits.effective_splits();
        for (u, &want) in users.iter().zip(&eval.gains) {
            let (mut re, mut im) = (0.0, 0.0);
            for (&x, &a) in layout.positions().iter().zip(&amp) {
                let d = ((u[0] - x).powi(2) + u[1] * u[1]
                    + (u[2] - config.waveguide_height).powi(2))
                .sqrt();
                let phase = -(alpha * d + beta * x);
                re += a * phase.cos() / d;
                im += a * phase.sin() / d;
            }
            let got = re * re + im * im;
            if (got - want).abs() > 1e-10 * want.abs() {
                return Err(format!("gain {got} vs model {want}"));
            }
        }
    }
    Ok(())
}

fn gradient_spot_check() -> Result<(), String> {
    let mut config = SystemConfig::paper_v();
    config.num_elements = 4;
    config.num_users = 2;
    let layout = Layout::new(vec![10.0, 20.0, 30.0, 40.0], &config).map_err(|e| e.to_string())?;
    let frame = pass_core::UserFrame::new(vec![[12.0, 3.0, 0.0], [33.0, -5.0, 0.0]], &config)
        .map_err(|e| e.to_string())?;
    let powers = vec![4e-3, 6e-3];
    let objective = CouplingObjective {
        samples: vec![CouplingSample {
            frame: &frame,
            layout: &layout,
            powers: &powers,
            power_sum: config.circuit_power_total() + 1e-2,
        }],
        config: &config,
    };
    let delta = SplitVector::new(vec![0.55, 0.4, 0.7, 0.3]).map_err(|e| e.to_string())?;
    let grad = ee_gradient(&objective, &delta).map_err(|e| e.to_string())?;
    let h = 1e-6;
    for i in 0..4 {
        let mut lo = delta.as_slice().to_vec();
        let mut hi = lo.clone();
        lo[i] -= h;
        hi[i] += h;
        let flo = ee_value(&objective, &SplitVector::new(lo).unwrap()).map_err(|e| e.to_string())?;
        let fhi = ee_value(&objective, &SplitVector::new(hi).unwrap()).map_err(|e| e.to_string())?;
        let fd = (fhi - flo) / (2.0 * h);
        if (grad[i] - fd).abs() > 1e-4 * fd.abs().max(1e-9) {
            return Err(format!("coordinate {i}: analytic {} vs fd {fd}", grad[i]));
        }
    }
    Ok(())
}

fn scenario_determinism() -> Result<(), String> {
    let mut config = SystemConfig::ci();
    config.samples_per_window = 8;
    let a = generate_scenario(&config).map_err(|e| e.to_string())?;
    let b = generate_scenario(&config).map_err(|e| e.to_string())?;
    for (fa, fb) in a.frames.iter().zip(&b.frames) {
        if fa.positions != fb.positions {
            return Err("same seed produced different frames".into());
        }
        for p in &fa.positions {
            if !(0.0..=config.waveguide_length).contains(&p[0])
                || p[1].abs() > config.region_depth / 2.0
            {
                return Err(format!("user at {p:?} outside the region"));
            }
        }
    }
    Ok(())
}

fn replay_consistency() -> Result<(), String> {
    let mut config = SystemConfig::ci();
    config.samples_per_window = 4;
    config.grid_points = 200;
    config.num_elements = 4;
    config.num_users = 3;
    let scenario = generate_scenario(&config).map_err(|e| e.to_string())?;
    let mode = DesignMode {
        placement: PlacementPolicy::Dynamic,
        coupling: CouplingPolicy::Tunable,
        allocation_objective: AllocationObjective::EnergyEfficiency,
    };
    let outcome = solve(&scenario, &mode, &config).map_err(|e| e.to_string())?;
    let (ee, se) = outcome.replay(&scenario, &config).map_err(|e| e.to_string())?;
    if (ee - outcome.windowed_ee).abs() > 1e-9 * outcome.windowed_ee.abs().max(1.0) {
        return Err(format!("replayed EE {ee} vs reported {}", outcome.windowed_ee));
    }
    if (se - outcome.windowed_se).abs() > 1e-9 * outcome.windowed_se.abs().max(1.0) {
        return Err(format!("replayed SE {se} vs reported {}", outcome.windowed_se));
    }
    if outcome.trace.windows(2).any(|w| w[1] < w[0] - 1e-9 * w[0].abs()) {
        return Err(format!("objective trace regressed: {:?}", outcome.trace));
    }
    Ok(())
}

/// Run every check, print one line each, return whether all passed.
pub fn run_all() -> bool {
    let checks: [Check; 8] = [
        ("power-conservation", power_conservation),
        ("symmetric-residual-exact", symmetric_residual_exact),
        ("water-fill-slackness", water_fill_slackness),
        ("ratio-iteration-monotone", ratio_iteration_monotone),
        ("channel-reconstruction", channel_reconstruction),
        ("gradient-spot-check", gradient_spot_check),
        ("scenario-determinism", scenario_determinism),
        ("replay-consistency", replay_consistency),
    ];
    let mut ok = true;
    for (name, check) in checks {
        match check() {
            Ok(()) => println!("ok   {name}"),
            Err(why) => {
                ok = false;
                println!("FAIL {name}: {why}");
            }
        }
    }
    ok
}

#[cfg(test)]
mod tests {
    #[test]
    fn suite_passes() {
        assert!(super::run_all());
    }
}
