//! Uniform (single-mass) frequency model: post-fault time-domain simulation
//! and the three security requirements derived from it.
//!
//! After a generation loss `P_L`, frequency deviation follows
//!
//! ```text
//! 2·H·dΔf/dt + D·P_D·Δf(t) = ΔP(t) − P_L
//! ```
//!
//! with response delivered as a ramp reaching `R` at `t_delivery`. From this
//! one equation come the RoCoF inertia floor `H ≥ |P_L / (2·RoCoF_max)|`,
//! the nadir requirement `H·R ≥ k*`, and the quasi-steady-state response
//! floor `R ≥ P_L − D·P_D·Δf_qss_max`. `k*` has no usable closed form once
//! damping acts, so it is pinned down numerically: bisection on `k`, where a
//! candidate is accepted when the worst point along the constraint boundary
//! keeps the simulated nadir above the limit. The undamped closed form
//! `P_L²·T_d / (4·Δf_max)` is kept as a fast path and cross-check.
//!
//! The bilinear `H·R ≥ k*` enters the MILP as tangent cuts: `R ≥ 2k*/H_i −
//! (k*/H_i²)·H` underestimates the convex curve `R = k*/H` everywhere, so a
//! finite cut set is an outer approximation that never excludes a feasible
//! pair.
//!
//! Everything here is a pure function of its inputs and safe to call
//! concurrently.

use crate::domain::{PowerSystem, SystemParams};
use std::collections::HashMap;
use std::sync::Mutex;
use thiserror::Error;

/// Default integration step (s).
pub const DEFAULT_DT: f64 = 0.01;
/// Default simulation horizon (s).
pub const DEFAULT_HORIZON: f64 = 60.0;

#[derive(Debug, Error)]
pub enum FrequencyError {
    #[error("inertia must be positive, got {0} MW·s²")]
    NonPositiveInertia(f64),
    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("horizon {horizon}s shorter than delivery time {t_delivery}s")]
    HorizonBeforeDelivery { horizon: f64, t_delivery: f64 },
    #[error("frequency state became non-finite at t={0}s")]
    NonFiniteState(f64),
    #[error("class {class}: {online} units online exceeds fleet count {count}")]
    CountsExceedFleet {
        class: String,
        online: u32,
        count: u32,
    },
    #[error("generation loss {loss} MW exceeds committed capacity {committed} MW")]
    LossExceedsCommitment { loss: f64, committed: f64 },
    #[error("loss removes more inertia than committed (post-fault H = {0} MW·s²)")]
    NegativeInertia(f64),
    #[error("no feasible nadir constant within search bounds")]
    NoFeasibleK,
    #[error("nadir cuts need 0 < h_floor < h_max, got [{h_floor}, {h_max}]")]
    BadCutRange { h_floor: f64, h_max: f64 },
    #[error("nadir cuts need at least 2 tangent points, got {0}")]
    TooFewCuts(usize),
}

/// Inputs of one post-fault simulation.
#[derive(Debug, Clone, Copy)]
pub struct FrequencyCase {
    /// Post-fault system inertia (MW·s²).
    pub inertia: f64,
    /// Total response reached at `t_delivery` (MW).
    pub response: f64,
    /// Response delivery time (s).
    pub t_delivery: f64,
    /// Load damping (1/Hz).
    pub damping: f64,
    /// Demand the damping acts on (MW).
    pub demand: f64,
    /// Generation loss (MW).
    pub p_loss: f64,
}

impl FrequencyCase {
    pub fn from_params(params: &SystemParams, demand: f64, inertia: f64, response: f64) -> Self {
        FrequencyCase {
            inertia,
            response,
            t_delivery: params.t_delivery,
            damping: params.damping,
            demand,
            p_loss: params.p_loss_max,
        }
    }
}

/// Simulated deviation trace with its three security figures.
#[derive(Debug, Clone)]
pub struct FrequencyTrajectory {
    pub time: Vec<f64>,
    pub delta_f: Vec<f64>,
    /// Minimum of `delta_f` over the grid (Hz, ≤ 0 for a net loss).
    pub nadir: f64,
    /// Largest magnitude of the derivative over the grid (Hz/s).
    pub max_rocof: f64,
    /// Deviation at the end of the horizon (Hz).
    pub qss_deviation: f64,
}

#[inline]
fn delivered(case: &FrequencyCase, t: f64) -> f64 {
    if t < case.t_delivery {
        case.response * t / case.t_delivery
    } else {
        case.response
    }
}

#[inline]
fn deriv(case: &FrequencyCase, t: f64, delta_f: f64) -> f64 {
    (delivered(case, t) - case.p_loss - case.damping * case.demand * delta_f)
        / (2.0 * case.inertia)
}

/// Classic fixed-step RK4 over [0, horizon] with the delivery kink pinned to
/// a grid point; the observer sees every (t, Δf, Δf').
fn integrate(
    case: &FrequencyCase,
    dt: f64,
    horizon: f64,
    mut observe: impl FnMut(f64, f64, f64),
) -> Result<(), FrequencyError> {
    if case.inertia <= 0.0 {
        return Err(FrequencyError::NonPositiveInertia(case.inertia));
    }
    if dt <= 0.0 {
        return Err(FrequencyError::NonPositiveStep(dt));
    }
    if horizon < case.t_delivery {
        return Err(FrequencyError::HorizonBeforeDelivery {
            horizon,
            t_delivery: case.t_delivery,
        });
    }

    let mut t = 0.0_f64;
    let mut f = 0.0_f64;
    observe(t, f, deriv(case, t, f));

    let segments = [(case.t_delivery, true), (horizon, false)];
    for &(end, _) in &segments {
        if end <= t {
            continue;
        }
        let steps = ((end - t) / dt).ceil().max(1.0) as usize;
        let h = (end - t) / steps as f64;
        for _ in 0..steps {
            let k1 = deriv(case, t, f);
            let k2 = deriv(case, t + 0.5 * h, f + 0.5 * h * k1);
            let k3 = deriv(case, t + 0.5 * h, f + 0.5 * h * k2);
            let k4 = deriv(case, t + h, f + h * k3);
            f += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += h;
            if !f.is_finite() {
                return Err(FrequencyError::NonFiniteState(t));
            }
            observe(t, f, deriv(case, t, f));
        }
    }
    Ok(())
}

/// Integrates the post-fault deviation and reports the full trace.
pub fn simulate_frequency(
    case: &FrequencyCase,
    dt: f64,
    horizon: f64,
) -> Result<FrequencyTrajectory, FrequencyError> {
    let cap = ((horizon / dt).ceil() as usize).saturating_add(4);
    let mut time = Vec::with_capacity(cap);
    let mut delta_f = Vec::with_capacity(cap);
    let mut nadir = f64::INFINITY;
    let mut max_rocof = 0.0_f64;
    integrate(case, dt, horizon, |t, f, df| {
        time.push(t);
        delta_f.push(f);
        nadir = nadir.min(f);
        max_rocof = max_rocof.max(df.abs());
    })?;
    let qss_deviation = *delta_f.last().expect("at least the initial point");
    Ok(FrequencyTrajectory {
        time,
        delta_f,
        nadir,
        max_rocof,
        qss_deviation,
    })
}

/// Same integration without keeping the trace: (nadir, max |RoCoF|, final deviation).
pub fn simulate_extremes(
    case: &FrequencyCase,
    dt: f64,
    horizon: f64,
) -> Result<(f64, f64, f64), FrequencyError> {
    let mut nadir = f64::INFINITY;
    let mut max_rocof = 0.0_f64;
    let mut last = 0.0_f64;
    integrate(case, dt, horizon, |_, f, df| {
        nadir = nadir.min(f);
        max_rocof = max_rocof.max(df.abs());
        last = f;
    })?;
    Ok((nadir, max_rocof, last))
}

/// Post-fault inertia of a committed fleet:
/// `(Σ_g H_g·P_g_max·N_g_up − loss_mw·loss_h) / f0 + extra_inertia` in MW·s².
///
/// `extra_inertia` models freely added inertia from auxiliary providers.
pub fn post_fault_inertia(
    system: &PowerSystem,
    online_counts: &[u32],
    extra_inertia: f64,
    loss_mw: f64,
    loss_h: f64,
) -> Result<f64, FrequencyError> {
    let mut kinetic = 0.0;
    let mut committed = 0.0;
    for (class, &online) in system.classes().iter().zip(online_counts) {
        if online > class.unit_count {
            return Err(FrequencyError::CountsExceedFleet {
                class: class.name.clone(),
                online,
                count: class.unit_count,
            });
        }
        kinetic += class.inertia_constant * class.p_max * f64::from(online);
        committed += class.p_max * f64::from(online);
    }
    if loss_mw > committed {
        return Err(FrequencyError::LossExceedsCommitment {
            loss: loss_mw,
            committed,
        });
    }
    let h = (kinetic - loss_mw * loss_h) / system.params().f0 + extra_inertia;
    if h < 0.0 {
        return Err(FrequencyError::NegativeInertia(h));
    }
    Ok(h)
}

/// Minimum post-fault inertia keeping the initial RoCoF within bounds:
/// `|p_loss_max / (2·rocof_max)|` in MW·s².
pub fn rocof_inertia_floor(p_loss_max: f64, rocof_max: f64) -> f64 {
    assert!(rocof_max > 0.0, "rocof_max must be positive");
    (p_loss_max / (2.0 * rocof_max)).abs()
}

/// Response floor from the steady-state balance with the deviation pinned at
/// the quasi-steady-state limit: `max(0, p_loss_max − D·demand·Δf_qss_max)`.
pub fn qss_response_floor(params: &SystemParams, demand: f64) -> f64 {
    (params.p_loss_max - params.damping * demand * params.delta_f_qss_max).max(0.0)
}

/// Undamped nadir constant `p_loss² · t_delivery / (4·Δf_max)`.
fn k_star_closed_form(params: &SystemParams) -> f64 {
    params.p_loss_max * params.p_loss_max * params.t_delivery / (4.0 * params.delta_f_max)
}

/// Deepest simulated nadir over the boundary of `{H·R ≥ k, R ≥ qss_floor}`.
///
/// The boundary is walked by response level: along `H = k/R` from generous
/// response down to the quasi-steady-state floor, then into the fixed-`R`
/// tail where only inertia grows (nadir improves monotonically there, so two
/// tail probes suffice).
fn worst_boundary_nadir(params: &SystemParams, demand: f64, k: f64) -> Result<f64, FrequencyError> {
    // The search runs on a modestly coarser grid than the reference
    // simulator; the bisection tolerance dominates the overall error.
    const SCAN_DT: f64 = 0.02;
    let p_loss = params.p_loss_max;
    let qss_floor = qss_response_floor(params, demand);
    let r_hi = 6.0 * p_loss;
    let r_lo = qss_floor.max(1e-3 * p_loss).min(r_hi * 0.999);
    let n = 17;
    let ratio = (r_hi / r_lo).powf(1.0 / (n - 1) as f64);

    let mut worst = f64::INFINITY;
    let mut r = r_hi;
    for _ in 0..n {
        let case = FrequencyCase {
            inertia: k / r,
            response: r,
            t_delivery: params.t_delivery,
            damping: params.damping,
            demand,
            p_loss,
        };
        let (nadir, _, _) = simulate_extremes(&case, SCAN_DT, DEFAULT_HORIZON)?;
        worst = worst.min(nadir);
        r /= ratio;
    }
    if qss_floor > 0.0 {
        for mult in [2.0, 8.0] {
            let case = FrequencyCase {
                inertia: mult * k / qss_floor,
                response: qss_floor,
                t_delivery: params.t_delivery,
                damping: params.damping,
                demand,
                p_loss,
            };
            let (nadir, _, _) = simulate_extremes(&case, SCAN_DT, DEFAULT_HORIZON)?;
            worst = worst.min(nadir);
        }
    }
    Ok(worst)
}

/// Minimal `k` such that every committed pair with `H·R ≥ k` and the
/// quasi-steady-state floor satisfied keeps the simulated nadir above
/// `−Δf_max`, found by bisection against the simulator.
pub fn nadir_k_star_bisection(
    params: &SystemParams,
    demand: f64,
) -> Result<f64, FrequencyError> {
    // Strong damping alone can hold the deviation above both limits; the
    // first-order dynamics cannot overshoot the quasi-static envelope.
    if params.damping * demand * params.delta_f_qss_max >= params.p_loss_max
        && params.delta_f_qss_max <= params.delta_f_max
    {
        return Ok(0.0);
    }
    let limit = -params.delta_f_max;
    let k0 = k_star_closed_form(params);

    let mut hi = k0 * 1.001;
    let mut grow = 0;
    while worst_boundary_nadir(params, demand, hi)? < limit {
        hi *= 2.0;
        grow += 1;
        if grow > 4 {
            return Err(FrequencyError::NoFeasibleK);
        }
    }
    let mut lo = hi / 64.0;
    while worst_boundary_nadir(params, demand, lo)? >= limit {
        hi = lo;
        lo *= 0.25;
        if lo < k0 * 1e-6 {
            return Ok(hi);
        }
    }
    for _ in 0..60 {
        if (hi - lo) <= 2e-4 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if worst_boundary_nadir(params, demand, mid)? >= limit {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// The nadir constant `k*` for a demand level. Without damping the closed
/// form is exact and returned directly; with damping the simulator-backed
/// bisection defines the value.
pub fn nadir_k_star(params: &SystemParams, demand: f64) -> Result<f64, FrequencyError> {
    if params.damping * demand == 0.0 {
        Ok(k_star_closed_form(params))
    } else {
        nadir_k_star_bisection(params, demand)
    }
}

/// One tangent `R ≥ a − b·H` of the curve `R = k*/H`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NadirCut {
    pub a: f64,
    pub b: f64,
}

impl NadirCut {
    /// Response required by this cut at inertia `h`.
    pub fn required_response(&self, h: f64) -> f64 {
        self.a - self.b * h
    }

    /// Tangent to `R = k/H` at `h`.
    pub fn tangent_at(k_star: f64, h: f64) -> NadirCut {
        NadirCut {
            a: 2.0 * k_star / h,
            b: k_star / (h * h),
        }
    }
}

/// Outer approximation of `{(H, R) : H·R ≥ k*, H > 0}` by tangent cuts.
#[derive(Debug, Clone)]
pub struct NadirCutSet {
    pub k_star: f64,
    pub cuts: Vec<NadirCut>,
    /// Smallest tangent point; cuts under-approximate the curve below it
    /// exactly as they do between tangents.
    pub h_floor: f64,
}

impl NadirCutSet {
    /// Largest response any cut demands at inertia `h`.
    pub fn required_response(&self, h: f64) -> f64 {
        self.cuts
            .iter()
            .map(|c| c.required_response(h))
            .fold(0.0, f64::max)
    }

    pub fn satisfied(&self, h: f64, r: f64, tol: f64) -> bool {
        r + tol >= self.required_response(h)
    }
}

/// Tangent points spaced geometrically on `[h_floor, h_max]`: the curvature
/// of `k/H` concentrates at small `H`, so geometric spacing balances the
/// one-sided approximation gap across the range.
pub fn build_nadir_cuts(
    k_star: f64,
    h_floor: f64,
    h_max: f64,
    n_cuts: usize,
) -> Result<NadirCutSet, FrequencyError> {
    if !(h_floor > 0.0 && h_floor < h_max) {
        return Err(FrequencyError::BadCutRange { h_floor, h_max });
    }
    if n_cuts < 2 {
        return Err(FrequencyError::TooFewCuts(n_cuts));
    }
    if k_star <= 0.0 {
        return Ok(NadirCutSet {
            k_star: 0.0,
            cuts: Vec::new(),
            h_floor,
        });
    }
    let ratio = (h_max / h_floor).powf(1.0 / (n_cuts - 1) as f64);
    let mut cuts = Vec::with_capacity(n_cuts);
    let mut h = h_floor;
    for _ in 0..n_cuts {
        cuts.push(NadirCut::tangent_at(k_star, h));
        h *= ratio;
    }
    Ok(NadirCutSet {
        k_star,
        cuts,
        h_floor,
    })
}

/// Memoizes `nadir_k_star` per demand level (the bisection is the costly
/// piece of model assembly and demands repeat across tree nodes and rolling
/// hours). Keyed on demand quantized to 1/8 MW; `k*` varies smoothly and
/// weakly with demand at that resolution.
#[derive(Debug, Default)]
pub struct KStarCache {
    map: Mutex<HashMap<i64, f64>>,
}

impl KStarCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, params: &SystemParams, demand: f64) -> Result<f64, FrequencyError> {
        let key = (demand * 8.0).round() as i64;
        if let Some(&k) = self.map.lock().expect("k* cache lock").get(&key) {
            return Ok(k);
        }
        let k = nadir_k_star(params, demand)?;
        self.map.lock().expect("k* cache lock").insert(key, k);
        Ok(k)
    }
}
