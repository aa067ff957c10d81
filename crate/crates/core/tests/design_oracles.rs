//! End-to-end check of the static design against an exhaustive coarse
//! layout search on a two-cluster user population.

use pass_core::placement::{PlacementMode, PlacementObjective};
use pass_core::{
    solve_static, AllocationObjective, CouplingPolicy, DesignMode, Layout, PlacementPolicy,
    Scenario, SystemConfig, UserFrame,
};

#[test]
fn static_two_cluster_layout_matches_exhaustive_search() {
    let mut config = SystemConfig::paper_v();
    config.num_users = 2;
    config.num_elements = 2;
    config.samples_per_window = 12;

    // one user near x=10, one near x=40, with a deterministic jitter cycle
    let jitter = [-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, -1.2, 1.2, -0.7, 0.7, 0.2];
    let frames: Vec<UserFrame> = jitter
        .iter()
        .enumerate()
        .map(|(i, &j)| {
            let y = if i % 2 == 0 { 1.0 } else { -1.0 };
            UserFrame::new(
                vec![[10.0 + j, y, 0.0], [40.0 - j, -y, 0.0]],
                &config,
            )
            .unwrap()
        })
        .collect();
    let scenario = Scenario {
        frames,
        seed: 0,
        region: (config.waveguide_length, config.region_depth),
    };

    let mode = DesignMode {
        placement: PlacementPolicy::Static,
        coupling: CouplingPolicy::Tunable,
        allocation_objective: AllocationObjective::EnergyEfficiency,
    };
    let out = solve_static(&scenario, &mode, &config).unwrap();
    assert!(out.converged);

    let xs = out.layouts[0].positions();
    assert!(
        (xs[0] - 10.0).abs() < 2.5 && (xs[1] - 40.0).abs() < 2.5,
        "elements at {xs:?}, expected one near each cluster center"
    );

    // exhaustive scan over element pairs on a coarse grid, scored with the
    // same window objective at the converged powers and splits
    let power_sums: Vec<f64> = out
        .allocations
        .iter()
        .map(|p| config.circuit_power_total() + p.iter().sum::<f64>())
        .collect();
    let objective = PlacementObjective {
        mode: PlacementMode::Static {
            frames: &scenario.frames,
            powers: &out.allocations,
            power_sums: &power_sums,
        },
        delta: &out.delta_final,
        config: &config,
    };
    let solver_value = objective.value(&out.layouts[0]).unwrap();

    let coarse: Vec<f64> = (0..100)
        .map(|i| i as f64 * config.waveguide_length / 99.0)
        .collect();
    let mut best = f64::MIN;
    for (i, &x1) in coarse.iter().enumerate() {
        for &x2 in &coarse[i + 1..] {
            if x2 - x1 < config.min_spacing {
                continue;
            }
            let layout = Layout::new(vec![x1, x2], &config).unwrap();
            best = best.max(objective.value(&layout).unwrap());
        }
    }
    assert!(
        solver_value >= best * (1.0 - 1e-3),
        "solver layout value {solver_value} below coarse exhaustive best {best}"
    );
}
