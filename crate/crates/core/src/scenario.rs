//! Quantile-based scenario trees over net demand, branching only at the
//! current-time node: the root carries realized wind, each user-defined
//! quantile spawns one branch, and every branch extends as a chain whose
//! wind is the per-lead quantile of the predictive distribution (a quantile
//! fan rather than sampled paths, which keeps branches orderable).
//!
//! Wind itself is a truncated AR(1) process in capacity-fraction units — the
//! simplest process with tunable forecast-error growth. Demand is treated as
//! deterministic; the uncertain quantity is wind.

use crate::domain::{DomainError, TreeNode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("quantiles must be strictly increasing within (0,1); got {0:?}")]
    BadQuantiles(Vec<f64>),
    #[error("wind process: {field} violates `{requirement}`")]
    BadProcess {
        field: &'static str,
        requirement: &'static str,
    },
    #[error("horizon must be at least 1 hour")]
    ZeroHorizon,
    #[error("demand profile has {got} hours, horizon needs {need}")]
    ShortProfile { got: usize, need: usize },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Synthetic wind generation: AR(1) around `mean_cf·capacity` with per-hour
/// innovation `sigma_step` (capacity fraction), clipped to `[0, capacity]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindProcess {
    pub capacity: f64,
    pub mean_cf: f64,
    pub persistence: f64,
    pub sigma_step: f64,
    pub seed: u64,
}

impl WindProcess {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let fail = |field: &'static str, requirement: &'static str| {
            Err(ScenarioError::BadProcess { field, requirement })
        };
        if self.capacity < 0.0 {
            return fail("capacity", "capacity >= 0");
        }
        if !(0.0..=1.0).contains(&self.mean_cf) {
            return fail("mean_cf", "0 <= mean_cf <= 1");
        }
        if !(0.0..1.0).contains(&self.persistence) {
            return fail("persistence", "0 <= persistence < 1");
        }
        if self.sigma_step < 0.0 {
            return fail("sigma_step", "sigma_step >= 0");
        }
        Ok(())
    }

    /// Predictive mean/std (MW) `lead` hours ahead of `current_wind`:
    /// the mean reverts with `persistence^lead`, the variance accumulates as
    /// `sigma_step²·Σ persistence^(2j)`.
    pub fn forecast_distribution(&self, current_wind: f64, lead: u32) -> LeadForecast {
        let mean_mw = self.mean_cf * self.capacity;
        let rho_l = self.persistence.powi(lead as i32);
        let mean = mean_mw + rho_l * (current_wind - mean_mw);
        let rho2 = self.persistence * self.persistence;
        let var_frac = if self.persistence == 0.0 {
            if lead >= 1 {
                self.sigma_step * self.sigma_step
            } else {
                0.0
            }
        } else {
            self.sigma_step * self.sigma_step * (1.0 - rho2.powi(lead as i32)) / (1.0 - rho2)
        };
        LeadForecast {
            mean: mean.clamp(0.0, self.capacity),
            std: var_frac.sqrt() * self.capacity,
        }
    }

    /// Quantile `q` of the lead-`lead` predictive distribution, clipped to
    /// the capacity range.
    pub fn forecast_quantile(&self, current_wind: f64, lead: u32, q: f64) -> f64 {
        let fc = self.forecast_distribution(current_wind, lead);
        (fc.mean + fc.std * inverse_normal_cdf(q)).clamp(0.0, self.capacity)
    }

    /// Deterministic realized trace of `len` hours starting from the
    /// stationary mean; same seed, same trace.
    pub fn generate_trace(&self, len: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mean = self.mean_cf * self.capacity;
        let mut w = mean;
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            let z = inverse_normal_cdf(rng.random_range(1e-12..=(1.0 - 1e-12)));
            w = mean
                + self.persistence * (w - mean)
                + self.sigma_step * self.capacity * z;
            w = w.clamp(0.0, self.capacity);
            out.push(w);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadForecast {
    pub mean: f64,
    pub std: f64,
}

/// Ordered quantile levels with the branch probabilities they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileSpec {
    quantiles: Vec<f64>,
    probabilities: Vec<f64>,
}

impl QuantileSpec {
    pub fn new(quantiles: Vec<f64>) -> Result<Self, ScenarioError> {
        let probabilities = quantile_probabilities(&quantiles)?;
        Ok(QuantileSpec {
            quantiles,
            probabilities,
        })
    }

    pub fn quantiles(&self) -> &[f64] {
        &self.quantiles
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.quantiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quantiles.is_empty()
    }

    /// The single-scenario spec: one median branch with probability 1.
    pub fn deterministic() -> Self {
        QuantileSpec::new(vec![0.5]).expect("median is valid")
    }
}

/// Midpoint partition of (0,1): the boundary between adjacent quantiles is
/// their midpoint, the outer boundaries are 0 and 1, and each quantile owns
/// the probability mass of its cell.
pub fn quantile_probabilities(quantiles: &[f64]) -> Result<Vec<f64>, ScenarioError> {
    let ok = !quantiles.is_empty()
        && quantiles.iter().all(|q| (0.0..1.0).contains(q) && *q > 0.0)
        && quantiles.windows(2).all(|w| w[0] < w[1]);
    if !ok {
        return Err(ScenarioError::BadQuantiles(quantiles.to_vec()));
    }
    let k = quantiles.len();
    let mut probs = Vec::with_capacity(k);
    let mut prev_boundary = 0.0;
    for i in 0..k {
        let boundary = if i + 1 < k {
            0.5 * (quantiles[i] + quantiles[i + 1])
        } else {
            1.0
        };
        probs.push(boundary - prev_boundary);
        prev_boundary = boundary;
    }
    Ok(probs)
}

/// Rooted tree of net-demand outcomes. Node 0 is the current-time node with
/// realized wind; probabilities of the leaves sum to 1.
#[derive(Debug, Clone)]
pub struct ScenarioTree {
    pub nodes: Vec<TreeNode>,
    children: Vec<Vec<usize>>,
}

impl ScenarioTree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn children(&self, id: usize) -> &[usize] {
        &self.children[id]
    }

    pub fn leaves(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes
            .iter()
            .filter(|n| self.children[n.id].is_empty())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes ordered root-first (construction order is already topological).
    pub fn topological(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter()
    }

    /// Degenerate one-node tree for a fixed demand-wind condition.
    pub fn single(demand: f64, wind_available: f64) -> ScenarioTree {
        ScenarioTree {
            nodes: vec![TreeNode {
                id: 0,
                parent: None,
                probability: 1.0,
                time_step_hours: 1.0,
                lead_time: 0,
                demand,
                wind_available,
            }],
            children: vec![Vec::new()],
        }
    }
}

/// Builds the quantile-fan tree: root at the current hour with realized
/// wind, one chain of `horizon` hourly nodes per quantile. Demand at lead
/// `l` reads `demand_profile[l]` (clamped to the last entry).
pub fn build_tree(
    process: &WindProcess,
    current_wind: f64,
    demand_profile: &[f64],
    spec: &QuantileSpec,
    horizon: u32,
) -> Result<ScenarioTree, ScenarioError> {
    if horizon == 0 {
        return Err(ScenarioError::ZeroHorizon);
    }
    if demand_profile.len() < horizon as usize {
        return Err(ScenarioError::ShortProfile {
            got: demand_profile.len(),
            need: horizon as usize,
        });
    }
    process.validate()?;

    let demand_at = |lead: u32| -> f64 {
        let idx = (lead as usize).min(demand_profile.len() - 1);
        demand_profile[idx]
    };

    let n_nodes = 1 + spec.len() * horizon as usize;
    let mut nodes = Vec::with_capacity(n_nodes);
    let mut children = vec![Vec::new(); n_nodes];

    nodes.push(TreeNode {
        id: 0,
        parent: None,
        probability: 1.0,
        time_step_hours: 1.0,
        lead_time: 0,
        demand: demand_at(0),
        wind_available: current_wind.clamp(0.0, process.capacity.max(current_wind)),
    });

    for (b, (&q, &prob)) in spec
        .quantiles()
        .iter()
        .zip(spec.probabilities())
        .enumerate()
    {
        let mut parent = 0usize;
        for lead in 1..=horizon {
            let id = 1 + b * horizon as usize + (lead - 1) as usize;
            nodes.push(TreeNode {
                id,
                parent: Some(parent),
                probability: prob,
                time_step_hours: 1.0,
                lead_time: lead,
                demand: demand_at(lead),
                wind_available: process.forecast_quantile(current_wind, lead, q),
            });
            children[parent].push(id);
            parent = id;
        }
    }

    Ok(ScenarioTree { nodes, children })
}

/// Inverse standard normal CDF (Acklam's rational approximation, relative
/// error below 1.2e-9 over (0,1)).
pub fn inverse_normal_cdf(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "probability must be in (0,1), got {p}");
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    x
}
