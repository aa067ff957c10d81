//! Per-user transmit power allocation.
//!
//! For fixed channels the rate of user k is log(1 + a_k p_k) with slope
//! a_k = Gamma_k G_k, so maximizing the rate-to-power ratio is a concave
//! fractional program: Dinkelbach's method turns it into a sequence of
//! subtractive problems R(p) - lambda * (P_cir_total + sum p), each solved
//! in closed form by water-filling.

use crate::config::LogBase;
use crate::error::{PassError, Result};

/// One power-allocation instance over fixed channel slopes.
#[derive(Debug, Clone)]
pub struct AllocationProblem {
    /// Effective SNR slopes a_k = Gamma_k * G_k, 1/watts.
    pub a: Vec<f64>,
    /// Bound on the summed input power, watts.
    pub budget: f64,
    /// Total circuit draw added to the denominator, watts.
    pub circuit_power_total: f64,
    /// Stopping tolerance on the subtractive residual.
    pub tolerance: f64,
    /// Rate logarithm base.
    pub log_base: LogBase,
}

impl AllocationProblem {
    pub fn validate(&self) -> Result<()> {
        if self.a.is_empty() {
            return Err(PassError::InvalidInput("no users to allocate".into()));
        }
        for (k, &a) in self.a.iter().enumerate() {
            if a < 0.0 || !a.is_finite() {
                return Err(PassError::InvalidInput(format!(
                    "slope a[{k}] = {a} must be finite and nonnegative"
                )));
            }
        }
        if !(self.budget > 0.0) || !self.budget.is_finite() {
            return Err(PassError::InvalidInput(format!(
                "budget must be positive, got {}",
                self.budget
            )));
        }
        if !(self.circuit_power_total > 0.0) || !self.circuit_power_total.is_finite() {
            return Err(PassError::InvalidInput(format!(
                "circuit_power_total must be positive, got {}",
                self.circuit_power_total
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(PassError::InvalidInput(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }

    /// Sum rate at an allocation.
    pub fn sum_rate(&self, p: &[f64]) -> f64 {
        let scale = self.log_base.scale();
        self.a
            .iter()
            .zip(p)
            .map(|(&a, &pk)| (1.0 + a * pk).ln() / scale)
            .sum()
    }

    /// Rate per watt drawn at an allocation.
    pub fn efficiency(&self, p: &[f64]) -> f64 {
        let spent: f64 = p.iter().sum();
        self.sum_rate(p) / (self.circuit_power_total + spent)
    }
}

/// Outcome of an allocation solve.
#[derive(Debug, Clone)]
pub struct AllocationResult {
    /// Per-user input powers, watts.
    pub p: Vec<f64>,
    /// Converged rate-per-watt ratio.
    pub lambda_star: f64,
    /// Number of water-filling solves performed.
    pub iterations: usize,
    /// Ratio after each update; nondecreasing.
    pub trace: Vec<f64>,
    /// Final subtractive residual R - lambda * (P_cir + sum p).
    pub residual: f64,
}

/// Powers for a given water level: p_k = max{0, 1/level - 1/a_k}.
/// a_k = 0 maps to 1/a_k = inf and hence p_k = 0.
fn fill_at_level(a: &[f64], level: f64) -> Vec<f64> {
    a.iter()
        .map(|&ak| (1.0 / level - 1.0 / ak).max(0.0))
        .collect()
}

fn total(p: &[f64]) -> f64 {
    p.iter().sum()
}

/// Water-filling step of the subtractive problem at a fixed ratio `lambda`:
/// maximize R(p) - lambda * sum p over {p >= 0, sum p <= budget}.
///
/// The unconstrained stationary level is lambda scaled by ln 2 for base-2
/// rates (lambda itself for natural-log rates); if that overspends the
/// budget, the level is raised by bisection until the budget is met.
pub fn water_fill(problem: &AllocationProblem, lambda: f64) -> Result<Vec<f64>> {
    problem.validate()?;
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(PassError::InvalidInput(format!(
            "lambda must be finite and nonnegative, got {lambda}"
        )));
    }
    let a_max = problem.a.iter().cloned().fold(0.0_f64, f64::max);
    if a_max == 0.0 {
        return Ok(vec![0.0; problem.a.len()]);
    }

    let slack_level = lambda * problem.log_base.scale();
    if slack_level > 0.0 {
        let p = fill_at_level(&problem.a, slack_level);
        if total(&p) <= problem.budget {
            return Ok(p);
        }
    }

    // Tight budget: spend exactly `budget`. The spend is continuous and
    // decreasing in the level; at level = a_max nothing is spent, at the
    // lower bracket the best user alone absorbs the whole budget.
    let mut lo = 1.0 / (problem.budget + 1.0 / a_max);
    let mut hi = a_max;
    for _ in 0..200 {
        if hi - lo <= 1e-12 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if total(&fill_at_level(&problem.a, mid)) > problem.budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // The upper end of the bracket never overspends.
    Ok(fill_at_level(&problem.a, hi))
}

const DINKELBACH_CAP: usize = 1000;

/// Maximize the rate-per-watt ratio by Dinkelbach iteration: starting at
/// lambda = 0, repeatedly water-fill at the current ratio and update the
/// ratio to the value achieved, stopping once the subtractive residual
/// falls within tolerance.
pub fn dinkelbach_allocate(problem: &AllocationProblem) -> Result<AllocationResult> {
    problem.validate()?;
    let mut lambda = 0.0;
    let mut trace = Vec::new();
    for it in 1..=DINKELBACH_CAP {
        let p = water_fill(problem, lambda)?;
        let rate = problem.sum_rate(&p);
        let denom = problem.circuit_power_total + total(&p);
        let residual = rate - lambda * denom;
        lambda = rate / denom;
        trace.push(lambda);
        if residual.abs() <= problem.tolerance {
            return Ok(AllocationResult {
                p,
                lambda_star: lambda,
                iterations: it,
                trace,
                residual,
            });
        }
    }
    Err(PassError::IterationCap {
        solver: "dinkelbach",
        iterations: DINKELBACH_CAP,
    })
}

/// Rate-maximizing allocation: water-filling against the full budget
/// (the zero-ratio subtractive problem spends everything whenever any
/// user has a usable channel).
pub fn se_allocate(problem: &AllocationProblem) -> Result<AllocationResult> {
    let p = water_fill(problem, 0.0)?;
    let rate = problem.sum_rate(&p);
    let denom = problem.circuit_power_total + total(&p);
    let lambda_star = rate / denom;
    Ok(AllocationResult {
        p,
        lambda_star,
        iterations: 1,
        trace: vec![lambda_star],
        residual: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(a: Vec<f64>, budget: f64) -> AllocationProblem {
        AllocationProblem {
            a,
            budget,
            circuit_power_total: 1.0,
            tolerance: 1e-9,
            log_base: LogBase::Base2,
        }
    }

    #[test]
    fn symmetric_users_split_budget() {
        let p = water_fill(&problem(vec![1.0, 1.0], 4.0), 0.0).unwrap();
        assert!((p[0] - 2.0).abs() < 1e-9);
        assert!((p[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn hopeless_channel_gets_nothing() {
        let p = water_fill(&problem(vec![1e12, 1e-12], 1e-3), 0.0).unwrap();
        assert!(p[0] > 0.999e-3);
        assert_eq!(p[1], 0.0);
    }

    #[test]
    fn slack_level_matches_ratio_times_ln2() {
        // generous budget, positive ratio -> interior stationary point
        let pr = problem(vec![2.0, 1.0, 0.5], 10.0);
        let p = water_fill(&pr, 0.5).unwrap();
        let level = 0.5 * std::f64::consts::LN_2;
        for (pk, &ak) in p.iter().zip(&pr.a) {
            assert!((pk - (1.0 / level - 1.0 / ak).max(0.0)).abs() < 1e-12);
        }
        assert!(total(&p) < 10.0);
        // natural-log variant drops the ln 2
        let mut nat = pr.clone();
        nat.log_base = LogBase::Natural;
        let pn = water_fill(&nat, 0.5).unwrap();
        assert!((pn[0] - (1.0 / 0.5 - 1.0 / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn tight_budget_is_spent_exactly() {
        let pr = problem(vec![5.0, 3.0, 1.0], 0.7);
        let p = water_fill(&pr, 0.01).unwrap();
        let spent = total(&p);
        assert!(spent <= 0.7);
        assert!((spent - 0.7).abs() < 1e-9);
        // stronger channels never get less water
        assert!(p[0] >= p[1] && p[1] >= p[2]);
    }

    #[test]
    fn all_dead_channels_yield_zero() {
        let pr = problem(vec![0.0, 0.0], 5.0);
        assert_eq!(water_fill(&pr, 0.3).unwrap(), vec![0.0, 0.0]);
        let res = dinkelbach_allocate(&pr).unwrap();
        assert_eq!(res.p, vec![0.0, 0.0]);
        assert_eq!(res.lambda_star, 0.0);
    }

    #[test]
    fn dinkelbach_trace_is_nondecreasing_and_residual_small() {
        let pr = problem(vec![8.0, 2.5, 0.9, 4.1], 2.0);
        let res = dinkelbach_allocate(&pr).unwrap();
        for w in res.trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
        assert!(res.residual.abs() <= pr.tolerance);
        assert!((res.lambda_star - pr.efficiency(&res.p)).abs() < 1e-9);
        assert!(total(&res.p) <= pr.budget + 1e-9);
    }

    #[test]
    fn doubling_slopes_never_hurts() {
        let base = problem(vec![3.0, 0.4, 1.7], 1.5);
        let mut doubled = base.clone();
        for a in &mut doubled.a {
            *a *= 2.0;
        }
        let lo = dinkelbach_allocate(&base).unwrap().lambda_star;
        let hi = dinkelbach_allocate(&doubled).unwrap().lambda_star;
        assert!(hi >= lo - 1e-12);
    }

    #[test]
    fn se_allocation_spends_everything() {
        let pr = problem(vec![1.0, 1.0], 4.0);
        let res = se_allocate(&pr).unwrap();
        assert!((res.p[0] - 2.0).abs() < 1e-9 && (res.p[1] - 2.0).abs() < 1e-9);
        assert!((total(&res.p) - 4.0).abs() < 1e-9);
    }

    #[test]
    fn se_beats_ee_on_rate_and_loses_on_efficiency() {
        let pr = problem(vec![6.0, 2.0, 0.3], 5.0);
        let ee = dinkelbach_allocate(&pr).unwrap();
        let se = se_allocate(&pr).unwrap();
        assert!(pr.sum_rate(&se.p) >= pr.sum_rate(&ee.p) - 1e-9);
        assert!(pr.efficiency(&se.p) <= pr.efficiency(&ee.p) + 1e-9);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(water_fill(&problem(vec![1.0], 1.0), -0.1).is_err());
        assert!(water_fill(&problem(vec![-1.0], 1.0), 0.0).is_err());
        assert!(water_fill(&problem(vec![1.0], 0.0), 0.0).is_err());
    }
}
