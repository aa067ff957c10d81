//! Split-coefficient tuning by projected gradient ascent on the
//! window-averaged rate-per-watt.
//!
//! The coefficients are static over a window, so the objective averages m
//! sampled frames. Per frame the channel sum is linear in the effective
//! amplitudes, Xi_k = sum_r eta_{k,r} A_r, which makes the gain gradient a
//! chain through dA_n/ddelta_i. The partials are expanded as products so
//! that delta_i = 0 stays finite, and the lone singular factor at
//! delta_n = 1 is magnitude-clamped: the projection pulls the iterate
//! straight back into [0, 1], so only the sign matters there.

use num_complex::Complex64;

use crate::config::SystemConfig;
use crate::em::{self, Layout, SplitVector, UserFrame};
use crate::error::{PassError, Result};

/// Clamp on |delta / sqrt(1 - delta^2)| near delta = 1.
const BOUNDARY_SLOPE_CAP: f64 = 1e8;

const TUNE_CAP: usize = 5000;
const MAX_HALVINGS: usize = 30;

/// One sampled frame with its frozen layout and allocation.
#[derive(Debug, Clone)]
pub struct CouplingSample<'a> {
    pub frame: &'a UserFrame,
    pub layout: &'a Layout,
    /// Per-user input powers for this frame, watts.
    pub powers: &'a [f64],
    /// Frame denominator: total circuit power plus the input powers, watts.
    pub power_sum: f64,
}

/// Window-averaged objective the split coefficients are tuned against.
#[derive(Debug, Clone)]
pub struct CouplingObjective<'a> {
    pub samples: Vec<CouplingSample<'a>>,
    pub config: &'a SystemConfig,
}

/// Bookkeeping for one projected ascent step.
#[derive(Debug, Clone)]
pub struct GradientStepReport {
    pub objective_before: f64,
    pub objective_after: f64,
    pub step_size_used: f64,
    /// Coordinates the projection pulled back into [0, 1].
    pub clamped_indices: Vec<usize>,
}

impl<'a> CouplingObjective<'a> {
    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(PassError::InvalidInput("no samples in window".into()));
        }
        for (i, s) in self.samples.iter().enumerate() {
            if s.frame.num_users() != s.powers.len() {
                return Err(PassError::InvalidInput(format!(
                    "sample {i}: {} users but {} powers",
                    s.frame.num_users(),
                    s.powers.len()
                )));
            }
            if !(s.power_sum > 0.0) {
                return Err(PassError::InvalidInput(format!(
                    "sample {i}: power sum must be positive, got {}",
                    s.power_sum
                )));
            }
        }
        Ok(())
    }

    fn num_elements(&self) -> usize {
        self.samples[0].layout.len()
    }
}

/// Per-element channel coefficients of one sample:
/// eta_{k,n} = exp(-j(alpha*dist + beta*x_n)) / dist, a K x N matrix.
pub fn eta_coefficients(
    sample: &CouplingSample<'_>,
    config: &SystemConfig,
) -> Result<Vec<Vec<Complex64>>> {
    let alpha = config.free_space_wavenumber();
    let beta = config.guide_wavenumber();
    let height = config.waveguide_height;
    sample
        .frame
        .positions
        .iter()
        .map(|user| {
            sample
                .layout
                .positions()
                .iter()
                .map(|&x| {
                    let dist = em::distance(user, x, height);
                    if dist < em::MIN_USER_DISTANCE {
                        return Err(PassError::DegenerateGeometry { distance: dist });
                    }
                    Ok(em::element_term(dist, x, alpha, beta))
                })
                .collect()
        })
        .collect()
}

/// Jacobian dA_n/ddelta_i as an N x N lower-triangular matrix, in product
/// form (row n, column i):
///   i < n: sqrt(1 - delta_n^2) * prod_{j<n, j!=i} delta_j
///   i = n: -delta_n / sqrt(1 - delta_n^2) * prod_{j<n} delta_j (clamped)
///   i > n: 0
pub fn split_partials(delta: &SplitVector) -> Vec<Vec<f64>> {
    let d = delta.as_slice();
    let n = d.len();
    let mut out = vec![vec![0.0; n]; n];
    for row in 0..n {
        // leave-one-out products over d[0..row] via prefix/suffix arrays
        let mut pre = vec![1.0; row + 1];
        for j in 0..row {
            pre[j + 1] = pre[j] * d[j];
        }
        let mut suf = vec![1.0; row + 1];
        for j in (0..row).rev() {
            suf[j] = suf[j + 1] * d[j];
        }
        let radiated = (1.0 - d[row] * d[row]).sqrt();
        for i in 0..row {
            out[row][i] = radiated * pre[i] * suf[i + 1];
        }
        let slope = if radiated > 0.0 {
            (d[row] / radiated).min(BOUNDARY_SLOPE_CAP)
        } else {
            BOUNDARY_SLOPE_CAP
        };
        out[row][row] = -slope * pre[row];
    }
    out
}

/// Gains G_k = |Xi_k|^2 and their gradients dG_k/ddelta_i for one sample's
/// eta matrix: Xi_k = sum_r eta_{k,r} A_r, dG = 2 Re{conj(Xi) dXi}.
pub fn gain_and_gradient_from_eta(
    eta: &[Vec<Complex64>],
    delta: &SplitVector,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = delta.len();
    let effective = delta.effective_splits();
    let partials = split_partials(delta);
    let mut gains = Vec::with_capacity(eta.len());
    let mut grads = Vec::with_capacity(eta.len());
    for row in eta {
        debug_assert_eq!(row.len(), n);
        let xi_sum: Complex64 = row
            .iter()
            .zip(&effective)
            .map(|(&e, &a)| e * a)
            .sum();
        let mut grad = vec![0.0; n];
        for (i, g) in grad.iter_mut().enumerate() {
            // A_n depends on delta_i only for n >= i
            let mut dxi = Complex64::new(0.0, 0.0);
            for r in i..n {
                dxi += row[r] * partials[r][i];
            }
            *g = 2.0 * (xi_sum.conj() * dxi).re;
        }
        gains.push(xi_sum.norm_sqr());
        grads.push(grad);
    }
    (gains, grads)
}

/// Gain gradient of one sample, K x N.
pub fn gain_gradient(
    sample: &CouplingSample<'_>,
    delta: &SplitVector,
    config: &SystemConfig,
) -> Result<Vec<Vec<f64>>> {
    let eta = eta_coefficients(sample, config)?;
    Ok(gain_and_gradient_from_eta(&eta, delta).1)
}

/// Window-averaged rate-per-watt at the given coefficients.
pub fn ee_value(objective: &CouplingObjective<'_>, delta: &SplitVector) -> Result<f64> {
    objective.validate()?;
    let scale = objective.config.log_base.scale();
    let effective = delta.effective_splits();
    let m = objective.samples.len() as f64;
    let mut total = 0.0;
    for s in &objective.samples {
        let mut rate = 0.0;
        for ((user, &p), &g) in s
            .frame
            .positions
            .iter()
            .zip(s.powers.iter())
            .zip(&s.frame.gamma)
        {
            let gain =
                em::user_channel_sum(user, s.layout, &effective, objective.config)?.norm_sqr();
            rate += (1.0 + g * p * gain).ln() / scale;
        }
        total += rate / s.power_sum;
    }
    Ok(total / m)
}

/// Gradient of the window-averaged rate-per-watt with respect to the split
/// coefficients.
pub fn ee_gradient(objective: &CouplingObjective<'_>, delta: &SplitVector) -> Result<Vec<f64>> {
    objective.validate()?;
    let scale = objective.config.log_base.scale();
    let n = delta.len();
    let m = objective.samples.len() as f64;
    let mut total = vec![0.0; n];
    for s in &objective.samples {
        let eta = eta_coefficients(s, objective.config)?;
        let (gains, grads) = gain_and_gradient_from_eta(&eta, delta);
        for ((&gain, grad), (&p, &g)) in gains
            .iter()
            .zip(&grads)
            .zip(s.powers.iter().zip(&s.frame.gamma))
        {
            let w = g * p / (scale * (1.0 + g * p * gain) * s.power_sum * m);
            for (t, &dg) in total.iter_mut().zip(grad) {
                *t += w * dg;
            }
        }
    }
    Ok(total)
}

fn project(raw: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut clamped = Vec::new();
    let proj = raw
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if (0.0..=1.0).contains(&v) {
                v
            } else {
                clamped.push(i);
                v.clamp(0.0, 1.0)
            }
        })
        .collect();
    (proj, clamped)
}

/// One projected ascent step delta <- clamp(delta + mu * grad), with the
/// step halved until the objective does not decrease (unless the plain
/// fixed-step mode is on). Returns None when no ascent step exists.
fn gradient_step(
    objective: &CouplingObjective<'_>,
    delta: &SplitVector,
    value: f64,
    grad: &[f64],
    base_mu: f64,
) -> Result<Option<(SplitVector, GradientStepReport)>> {
    let mut mu = base_mu;
    let halvings = if objective.config.plain_gradient {
        0
    } else {
        MAX_HALVINGS
    };
    for _ in 0..=halvings {
        let raw: Vec<f64> = delta
            .as_slice()
            .iter()
            .zip(grad)
            .map(|(&d, &g)| d + mu * g)
            .collect();
        let (proj, clamped_indices) = project(&raw);
        let cand = SplitVector::new(proj)?;
        let cand_value = ee_value(objective, &cand)?;
        if cand_value >= value || objective.config.plain_gradient {
            return Ok(Some((
                cand,
                GradientStepReport {
                    objective_before: value,
                    objective_after: cand_value,
                    step_size_used: mu,
                    clamped_indices,
                },
            )));
        }
        mu *= 0.5;
    }
    Ok(None)
}

/// Projected gradient ascent on the window objective, starting from
/// `delta_init`. Stops on a relative objective change below the outer
/// tolerance, when no step improves, or at the iteration cap (with a
/// warning); always returns the best iterate seen.
pub fn tune_coupling(
    objective: &CouplingObjective<'_>,
    delta_init: &SplitVector,
) -> Result<SplitVector> {
    objective.validate()?;
    if delta_init.len() != objective.num_elements() {
        return Err(PassError::InvalidInput(format!(
            "{} split coefficients vs {} elements",
            delta_init.len(),
            objective.num_elements()
        )));
    }
    let tol = objective.config.outer_tolerance;
    let base = objective.config.gradient_step;
    let mut mu = base;
    let mut delta = delta_init.clone();
    let mut value = ee_value(objective, &delta)?;
    let mut best = (delta.clone(), value);
    let cap = base * 1024.0;
    for _ in 0..TUNE_CAP {
        let grad = ee_gradient(objective, &delta)?;
        let trial = mu;
        let Some((next, report)) = gradient_step(objective, &delta, value, &grad, trial)? else {
            return Ok(best.0); // no ascent direction left
        };
        let halved = report.step_size_used < trial;
        if !objective.config.plain_gradient {
            // grow the trial step around whatever size last worked, so flat
            // directions (tiny gradients late in the split chain) still make
            // progress; backtracking pulls it down again when it overshoots
            mu = (report.step_size_used * 2.0).min(cap);
        }
        let change = report.objective_after - value;
        delta = next;
        value = report.objective_after;
        if value > best.1 {
            best = (delta.clone(), value);
        }
        let rel_ok = if value != 0.0 {
            change.abs() <= tol * value.abs()
        } else {
            change.abs() <= tol
        };
        // a small change only counts as converged once the trial step has no
        // room to grow (ran at the cap or was cut by the line search): a short
        // move at a still-growing step says nothing about stationarity
        let expandable = !objective.config.plain_gradient && !halved && trial < cap;
        if rel_ok && !expandable {
            return Ok(best.0);
        }
    }
    log::warn!("coupling tuner hit the {TUNE_CAP}-iteration cap; returning best iterate");
    Ok(best.0)
}
