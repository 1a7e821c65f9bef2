//! Shared domain types: generator classes, system-wide parameters, scenario
//! tree nodes and per-node schedule points, all validated on construction.
//!
//! Units of identical type are aggregated per class with integer online
//! counts rather than per-unit binaries, which keeps commitment MILPs small.
//! Everything here is immutable after validation and safe to share read-only
//! across concurrent solver runs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("fleet must contain at least one generator class")]
    EmptyFleet,
    #[error("class `{class}`: {field} violates `{requirement}`")]
    InvalidClass {
        class: String,
        field: &'static str,
        requirement: &'static str,
    },
    #[error("system params: {field} violates `{requirement}`")]
    InvalidParams {
        field: &'static str,
        requirement: &'static str,
    },
    #[error("sized loss {p_loss_max} MW is smaller than the largest unit ({largest} MW)")]
    LossBelowLargestUnit { p_loss_max: f64, largest: f64 },
    #[error("scenario tree: {0}")]
    InvalidTree(String),
    #[error("schedule point: {0}")]
    InvalidPoint(String),
}

/// One class of identical thermal units: ratings, costs, dynamics and
/// response capability. Costs are per unit (no-load, startup) or per MWh
/// (marginal); `inertia_constant` is the machine H in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorClass {
    pub name: String,
    pub unit_count: u32,
    /// Rated power per unit (MW).
    pub p_max: f64,
    /// Minimum stable generation per unit (MW).
    pub p_min_stable: f64,
    /// No-load cost (£/h per online unit).
    pub no_load_cost: f64,
    /// Marginal cost (£/MWh).
    pub marginal_cost: f64,
    /// Startup cost (£ per start).
    pub startup_cost: f64,
    /// Hours between the start decision and the unit generating.
    pub startup_time: u32,
    pub min_up_time: u32,
    pub min_down_time: u32,
    /// Inertia constant H (s).
    pub inertia_constant: f64,
    /// Primary frequency response headroom cap per unit (MW).
    pub max_response: f64,
    /// Fraction of spare headroom deliverable as response.
    pub response_slope: f64,
    /// kg CO2 per MWh.
    pub emissions_rate: f64,
    /// Never cycled: online count pinned to `unit_count`, no start/stop
    /// decisions. Encodes fleets whose largest units do not participate in
    /// commitment (startup data n/a).
    #[serde(default)]
    pub must_run: bool,
}

impl GeneratorClass {
    fn validate(&self) -> Result<(), DomainError> {
        let fail = |field: &'static str, requirement: &'static str| {
            Err(DomainError::InvalidClass {
                class: self.name.clone(),
                field,
                requirement,
            })
        };
        if !(self.p_min_stable > 0.0) {
            return fail("p_min_stable", "p_min_stable > 0");
        }
        if !(self.p_min_stable <= self.p_max) {
            return fail("p_min_stable", "p_min_stable <= p_max");
        }
        if self.no_load_cost < 0.0 {
            return fail("no_load_cost", "cost >= 0");
        }
        if self.marginal_cost < 0.0 {
            return fail("marginal_cost", "cost >= 0");
        }
        if self.startup_cost < 0.0 {
            return fail("startup_cost", "cost >= 0");
        }
        if !(0.0..=1.0).contains(&self.response_slope) {
            return fail("response_slope", "0 <= response_slope <= 1");
        }
        if !(self.inertia_constant > 0.0) {
            return fail("inertia_constant", "inertia_constant > 0");
        }
        if self.max_response < 0.0 {
            return fail("max_response", "max_response >= 0");
        }
        if self.max_response > self.p_max {
            return fail("max_response", "max_response <= p_max");
        }
        if self.emissions_rate < 0.0 {
            return fail("emissions_rate", "emissions_rate >= 0");
        }
        Ok(())
    }

    /// MW-rescaled copy: ratings, response and per-unit costs scale with
    /// `factor`, intensive quantities (H, slopes, £/MWh) stay fixed. Used to
    /// build desk-scale replicas of a reference fleet.
    pub fn scaled_mw(&self, factor: f64) -> GeneratorClass {
        GeneratorClass {
            name: self.name.clone(),
            unit_count: self.unit_count,
            p_max: self.p_max * factor,
            p_min_stable: self.p_min_stable * factor,
            no_load_cost: self.no_load_cost * factor,
            marginal_cost: self.marginal_cost,
            startup_cost: self.startup_cost * factor,
            startup_time: self.startup_time,
            min_up_time: self.min_up_time,
            min_down_time: self.min_down_time,
            inertia_constant: self.inertia_constant,
            max_response: self.max_response * factor,
            response_slope: self.response_slope,
            emissions_rate: self.emissions_rate,
            must_run: self.must_run,
        }
    }
}

/// System-wide constants of the frequency model and the cost penalties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Nominal frequency (Hz).
    pub f0: f64,
    /// Load damping D (1/Hz), applied multiplicatively to demand.
    pub damping: f64,
    /// Admissible rate of change of frequency (Hz/s).
    pub rocof_max: f64,
    /// Admissible frequency nadir deviation (Hz).
    pub delta_f_max: f64,
    /// Admissible quasi-steady-state deviation (Hz).
    pub delta_f_qss_max: f64,
    /// Primary frequency response delivery time T_d (s).
    pub t_delivery: f64,
    /// Sized generation loss (MW), at least the largest unit.
    pub p_loss_max: f64,
    /// Inertia constant of the sized loss (s).
    pub h_loss_max: f64,
    /// £ per ton CO2.
    pub emissions_price: f64,
    /// Value of lost load (£/MWh) on the shed slack.
    pub voll: f64,
    /// Installed wind capacity (MW).
    pub wind_capacity: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            f0: 50.0,
            damping: 0.005,
            rocof_max: 0.25,
            delta_f_max: 0.8,
            delta_f_qss_max: 0.5,
            t_delivery: 10.0,
            p_loss_max: 1800.0,
            h_loss_max: 5.0,
            emissions_price: 150.0,
            voll: 30_000.0,
            wind_capacity: 15_000.0,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<(), DomainError> {
        let fail = |field: &'static str, requirement: &'static str| {
            Err(DomainError::InvalidParams { field, requirement })
        };
        if !(self.f0 > 0.0) {
            return fail("f0", "f0 > 0");
        }
        if !(self.rocof_max > 0.0) {
            return fail("rocof_max", "rocof_max > 0");
        }
        if !(self.delta_f_max > 0.0) {
            return fail("delta_f_max", "delta_f_max > 0");
        }
        if !(self.delta_f_qss_max > 0.0) {
            return fail("delta_f_qss_max", "delta_f_qss_max > 0");
        }
        if !(self.t_delivery > 0.0) {
            return fail("t_delivery", "t_delivery > 0");
        }
        if !(self.p_loss_max > 0.0) {
            return fail("p_loss_max", "p_loss_max > 0");
        }
        if self.h_loss_max < 0.0 {
            return fail("h_loss_max", "h_loss_max >= 0");
        }
        if self.damping < 0.0 {
            return fail("damping", "damping >= 0");
        }
        if self.voll < 0.0 {
            return fail("voll", "voll >= 0");
        }
        if self.emissions_price < 0.0 {
            return fail("emissions_price", "emissions_price >= 0");
        }
        if self.wind_capacity < 0.0 {
            return fail("wind_capacity", "wind_capacity >= 0");
        }
        Ok(())
    }
}

/// A validated fleet plus system parameters. Construction via
/// [`validate_fleet`] is the only way to obtain one.
#[derive(Debug, Clone)]
pub struct PowerSystem {
    classes: Vec<GeneratorClass>,
    params: SystemParams,
    largest_unit_class: usize,
}

impl PowerSystem {
    pub fn classes(&self) -> &[GeneratorClass] {
        &self.classes
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    /// Index of the class holding the largest single unit.
    pub fn largest_unit_class(&self) -> usize {
        self.largest_unit_class
    }

    pub fn largest_unit_mw(&self) -> f64 {
        self.classes[self.largest_unit_class].p_max
    }

    /// Kinetic energy of the whole fleet at full commitment, as post-fault
    /// inertia units (MW·s²): sum of H_g·P_max·count / f0.
    pub fn full_commitment_inertia(&self) -> f64 {
        self.classes
            .iter()
            .map(|c| c.inertia_constant * c.p_max * f64::from(c.unit_count))
            .sum::<f64>()
            / self.params.f0
    }

    /// Total deliverable response at full commitment (MW).
    pub fn total_max_response(&self) -> f64 {
        self.classes
            .iter()
            .map(|c| c.max_response * f64::from(c.unit_count))
            .sum()
    }

    pub fn total_capacity(&self) -> f64 {
        self.classes
            .iter()
            .map(|c| c.p_max * f64::from(c.unit_count))
            .sum()
    }

    /// Replica of the system with every MW quantity multiplied by `factor`
    /// (unit ratings, sized loss, wind capacity). Unit counts and per-MWh
    /// economics are unchanged, so commitment structure is preserved.
    pub fn scaled_mw(&self, factor: f64) -> PowerSystem {
        let classes: Vec<_> = self.classes.iter().map(|c| c.scaled_mw(factor)).collect();
        let params = SystemParams {
            p_loss_max: self.params.p_loss_max * factor,
            wind_capacity: self.params.wind_capacity * factor,
            ..self.params.clone()
        };
        validate_fleet(classes, params).expect("MW rescaling preserves validity")
    }

    pub fn with_params(&self, params: SystemParams) -> Result<PowerSystem, DomainError> {
        validate_fleet(self.classes.clone(), params)
    }
}

/// Validates every class and the system parameters, identifies the largest
/// unit and checks the sized loss covers it. First violation wins.
pub fn validate_fleet(
    classes: Vec<GeneratorClass>,
    params: SystemParams,
) -> Result<PowerSystem, DomainError> {
    if classes.is_empty() {
        return Err(DomainError::EmptyFleet);
    }
    params.validate()?;
    for class in &classes {
        class.validate()?;
    }
    let largest_unit_class = classes
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.p_max.total_cmp(&b.p_max))
        .map(|(i, _)| i)
        .expect("non-empty");
    let largest = classes[largest_unit_class].p_max;
    if params.p_loss_max < largest {
        return Err(DomainError::LossBelowLargestUnit {
            p_loss_max: params.p_loss_max,
            largest,
        });
    }
    Ok(PowerSystem {
        classes,
        params,
        largest_unit_class,
    })
}

/// One node of a scenario tree: a net-demand outcome with its probability
/// and position in time. `wind_available` is realized wind for the root and
/// a forecast quantile for future nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub id: usize,
    pub parent: Option<usize>,
    /// Probability of reaching this node; children of one parent sum to the
    /// parent's probability, the root carries 1.
    pub probability: f64,
    pub time_step_hours: f64,
    /// Hours from the root.
    pub lead_time: u32,
    pub demand: f64,
    pub wind_available: f64,
}

/// Per-class decisions at one node.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClassDecision {
    /// Units online.
    pub n_up: u32,
    /// Start decisions committed at this node (enter the startup pipeline;
    /// the units begin generating `startup_time` hours later). Startup cost
    /// is charged here.
    pub n_start_gen: u32,
    /// Dispatched power (MW).
    pub dispatch: f64,
    /// Scheduled response (MW).
    pub response: f64,
}

/// The full decision set at one node, after integer snapping and bound checks.
#[derive(Debug, Clone, PartialEq)]
pub struct SchedulePoint {
    pub node: usize,
    pub per_class: Vec<ClassDecision>,
    pub wind_used: f64,
    pub shed: f64,
}

impl SchedulePoint {
    /// Checks the point against the fleet: count limits, dispatch bounds,
    /// non-negative response/shed and wind within availability.
    pub fn validate(
        &self,
        classes: &[GeneratorClass],
        wind_available: f64,
    ) -> Result<(), DomainError> {
        if self.per_class.len() != classes.len() {
            return Err(DomainError::InvalidPoint(format!(
                "{} class decisions for {} classes",
                self.per_class.len(),
                classes.len()
            )));
        }
        for (dec, class) in self.per_class.iter().zip(classes) {
            if dec.n_up > class.unit_count {
                return Err(DomainError::InvalidPoint(format!(
                    "class `{}`: {} units online of {}",
                    class.name, dec.n_up, class.unit_count
                )));
            }
            let lo = f64::from(dec.n_up) * class.p_min_stable;
            let hi = f64::from(dec.n_up) * class.p_max;
            if dec.dispatch < lo - 1e-6 || dec.dispatch > hi + 1e-6 {
                return Err(DomainError::InvalidPoint(format!(
                    "class `{}`: dispatch {} outside [{}, {}]",
                    class.name, dec.dispatch, lo, hi
                )));
            }
            if dec.response < 0.0 {
                return Err(DomainError::InvalidPoint(format!(
                    "class `{}`: negative response",
                    class.name
                )));
            }
        }
        if self.wind_used < -1e-9 || self.wind_used > wind_available + 1e-6 {
            return Err(DomainError::InvalidPoint(format!(
                "wind_used {} outside [0, {}]",
                self.wind_used, wind_available
            )));
        }
        if self.shed < -1e-9 {
            return Err(DomainError::InvalidPoint("negative shed".into()));
        }
        Ok(())
    }

    pub fn total_response(&self) -> f64 {
        self.per_class.iter().map(|d| d.response).sum()
    }

    pub fn total_dispatch(&self) -> f64 {
        self.per_class.iter().map(|d| d.dispatch).sum()
    }
}

/// The GB-style reference fleet: three classes of identical units covering
/// baseload, mid-merit and peaking duty.
pub fn gb_reference_fleet() -> Vec<GeneratorClass> {
    vec![
        GeneratorClass {
            name: "nuclear".into(),
            unit_count: 6,
            p_max: 1800.0,
            p_min_stable: 1800.0,
            no_load_cost: 0.0,
            marginal_cost: 10.0,
            startup_cost: 0.0,
            startup_time: 0,
            min_up_time: 0,
            min_down_time: 0,
            inertia_constant: 5.0,
            max_response: 0.0,
            response_slope: 0.0,
            emissions_rate: 0.0,
            must_run: true,
        },
        GeneratorClass {
            name: "ccgt".into(),
            unit_count: 110,
            p_max: 500.0,
            p_min_stable: 200.0,
            no_load_cost: 7809.0,
            marginal_cost: 51.0,
            startup_cost: 9000.0,
            startup_time: 4,
            min_up_time: 4,
            min_down_time: 1,
            inertia_constant: 5.0,
            max_response: 50.0,
            response_slope: 0.5,
            emissions_rate: 368.0,
            must_run: false,
        },
        GeneratorClass {
            name: "ocgt".into(),
            unit_count: 30,
            p_max: 200.0,
            p_min_stable: 50.0,
            no_load_cost: 8000.0,
            marginal_cost: 110.0,
            startup_cost: 0.0,
            startup_time: 0,
            min_up_time: 0,
            min_down_time: 0,
            inertia_constant: 5.0,
            max_response: 20.0,
            response_slope: 0.5,
            emissions_rate: 833.0,
            must_run: false,
        },
    ]
}
