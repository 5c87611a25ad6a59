//! Problem instances: horizon, maintenance tasks, costs and optional
//! demand/capacity data for the coupling rows.

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaintenanceTask {
    pub id: String,
    /// Number of consecutive periods the task occupies.
    pub duration: usize,
    /// Generator capacity in MW taken offline while the task runs.
    pub capacity: f64,
}

/// A maintenance scheduling instance over periods `1..=horizon`.
///
/// `cost[t - 1][m]` is the cost of task `m` being in maintenance during
/// period `t`. The coupling rows, when enabled, read
/// `sum_m capacity_m * X[t][m] <= total_capacity - demand[t - 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub horizon: usize,
    pub tasks: Vec<MaintenanceTask>,
    pub cost: Vec<Vec<f64>>,
    #[serde(default)]
    pub demand: Option<Vec<f64>>,
    #[serde(default)]
    pub total_capacity: Option<f64>,
    #[serde(default)]
    pub coupling_enabled: bool,
}

/// One broken instance invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    fn new(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

/// Start period of every task, keyed by task id.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Schedule {
    pub start: BTreeMap<String, usize>,
}

impl Schedule {
    pub fn from_starts(instance: &Instance, starts: &[usize]) -> Self {
        let start = instance
            .tasks
            .iter()
            .zip(starts)
            .map(|(task, &s)| (task.id.clone(), s))
            .collect();
        Self { start }
    }

    /// Starts in the instance's task order.
    pub fn starts(&self, instance: &Instance) -> Result<Vec<usize>> {
        instance
            .tasks
            .iter()
            .map(|task| {
                self.start
                    .get(&task.id)
                    .copied()
                    .ok_or_else(|| Error::Parameter(format!("schedule has no start for task {}", task.id)))
            })
            .collect()
    }
}

impl Instance {
    /// Instance without demand data; coupling disabled.
    pub fn new(horizon: usize, tasks: Vec<MaintenanceTask>, cost: Vec<Vec<f64>>) -> Self {
        Self {
            horizon,
            tasks,
            cost,
            demand: None,
            total_capacity: None,
            coupling_enabled: false,
        }
    }

    /// Single task `m1` of the given duration with one cost per period.
    pub fn single_task(duration: usize, cost: &[f64]) -> Self {
        let task = MaintenanceTask {
            id: "m1".to_string(),
            duration,
            capacity: 0.0,
        };
        Self::new(cost.len(), vec![task], cost.iter().map(|&c| vec![c]).collect())
    }

    pub fn n_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn duration(&self, task: usize) -> usize {
        self.tasks[task].duration
    }

    /// Cost of task `task` (0-based) in period `t` (1-based).
    pub fn cost_at(&self, t: usize, task: usize) -> f64 {
        self.cost[t - 1][task]
    }

    /// Last period in which `task` may start.
    pub fn last_start(&self, task: usize) -> usize {
        self.horizon + 1 - self.duration(task)
    }

    /// Right-hand side of the coupling row for period `t`, if coupling is on.
    pub fn coupling_rhs(&self, t: usize) -> Option<f64> {
        if !self.coupling_enabled {
            return None;
        }
        let demand = self.demand.as_ref()?;
        Some(self.total_capacity? - demand[t - 1])
    }

    pub fn with_coupling(mut self, enabled: bool) -> Self {
        self.coupling_enabled = enabled;
        self
    }

    /// Number of start-time combinations, saturating.
    pub fn placement_count(&self) -> u64 {
        self.tasks.iter().fold(1u64, |acc, task| {
            let choices = (self.horizon + 1).saturating_sub(task.duration) as u64;
            acc.saturating_mul(choices)
        })
    }

    /// Short content hash used to tag models built from this instance.
    pub fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(self).unwrap_or_default();
        let digest = Sha256::digest(&bytes);
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json_string(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("instance serializes");
        text.push('\n');
        text
    }
}

/// Checks every instance invariant; an empty list means the instance is valid.
pub fn validate(instance: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();
    let horizon = instance.horizon;
    if horizon == 0 {
        out.push(Violation::new("horizon", "horizon must be positive"));
    }

    let mut seen = HashSet::new();
    for (m, task) in instance.tasks.iter().enumerate() {
        let field = format!("tasks[{m}]");
        if !seen.insert(task.id.as_str()) {
            out.push(Violation::new(format!("{field}.id"), format!("duplicate task id {:?}", task.id)));
        }
        if task.duration == 0 {
            out.push(Violation::new(format!("{field}.duration"), "duration must be at least 1"));
        } else if task.duration > horizon {
            out.push(Violation::new(format!("{field}.duration"), "duration exceeds horizon"));
        }
        if !task.capacity.is_finite() || task.capacity < 0.0 {
            out.push(Violation::new(format!("{field}.capacity"), "capacity must be a nonnegative number"));
        }
    }

    if instance.cost.len() != horizon {
        out.push(Violation::new(
            "cost",
            format!("cost matrix has {} rows, expected {horizon}", instance.cost.len()),
        ));
    }
    for (t, row) in instance.cost.iter().enumerate() {
        if row.len() != instance.n_tasks() {
            out.push(Violation::new(
                format!("cost[{t}]"),
                format!("cost row has {} entries, expected {}", row.len(), instance.n_tasks()),
            ));
        }
        if row.iter().any(|c| !c.is_finite()) {
            out.push(Violation::new(format!("cost[{t}]"), "cost entries must be finite"));
        }
    }

    if let Some(demand) = &instance.demand {
        if demand.iter().any(|d| !d.is_finite()) {
            out.push(Violation::new("demand", "demand entries must be finite"));
        }
    }
    if let Some(total) = instance.total_capacity {
        if !total.is_finite() {
            out.push(Violation::new("total_capacity", "total capacity must be finite"));
        }
    }

    if instance.coupling_enabled {
        match &instance.demand {
            None => out.push(Violation::new("demand", "coupling requires demand")),
            Some(demand) if demand.len() != horizon => {
                out.push(Violation::new("demand", "demand length mismatch"));
            }
            Some(_) => {}
        }
        match (instance.total_capacity, &instance.demand) {
            (None, _) => out.push(Violation::new("total_capacity", "coupling requires total capacity")),
            (Some(total), Some(demand)) => {
                let peak = demand.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if demand.is_empty() || total <= peak {
                    out.push(Violation::new("total_capacity", "total capacity must exceed peak demand"));
                }
            }
            (Some(_), None) => {}
        }
    }
    out
}

/// Knobs for [`generate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationProfile {
    /// Enable the capacity coupling rows in the generated instance.
    pub coupled: bool,
    /// Relative swing of the sinusoidal demand around its mean.
    pub amplitude: f64,
    /// Headroom at peak demand as a fraction of total maintained capacity.
    pub reserve: f64,
    /// Mean demand as a multiple of total maintained capacity.
    pub load: f64,
}

impl Default for GenerationProfile {
    fn default() -> Self {
        Self {
            coupled: false,
            amplitude: 0.3,
            reserve: 0.25,
            load: 2.0,
        }
    }
}

impl GenerationProfile {
    pub fn coupled() -> Self {
        Self {
            coupled: true,
            ..Self::default()
        }
    }
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

/// Seeded random instance with a sinusoidal demand profile.
///
/// Durations are uniform on `1..=horizon / 2`. Costs follow demand, so
/// maintenance is cheapest in the demand trough.
pub fn generate(seed: u64, horizon: usize, n_tasks: usize, profile: &GenerationProfile) -> Result<Instance> {
    if horizon < 2 {
        return Err(Error::Parameter(format!("horizon must be at least 2, got {horizon}")));
    }
    if n_tasks == 0 {
        return Err(Error::Parameter("at least one task is required".into()));
    }
    if !(0.0..1.0).contains(&profile.amplitude) || profile.reserve <= 0.0 || !profile.reserve.is_finite() {
        return Err(Error::Parameter("amplitude must lie in [0, 1) and reserve must be positive".into()));
    }
    if profile.load <= 0.0 || !profile.load.is_finite() {
        return Err(Error::Parameter("load must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_duration = horizon / 2;

    let tasks: Vec<MaintenanceTask> = (0..n_tasks)
        .map(|m| MaintenanceTask {
            id: format!("m{}", m + 1),
            duration: rng.gen_range(1..=max_duration),
            capacity: round4(rng.gen_range(50.0..300.0)),
        })
        .collect();
    let fleet: f64 = tasks.iter().map(|t| t.capacity).sum();

    let phase = rng.gen_range(0.0..2.0 * PI);
    let demand: Vec<f64> = (0..horizon)
        .map(|t| {
            let angle = 2.0 * PI * t as f64 / horizon as f64 + phase;
            round4(profile.load * fleet * (1.0 + profile.amplitude * angle.sin()))
        })
        .collect();
    let peak = demand.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total_capacity = round4(peak + profile.reserve * fleet);

    let cost = demand
        .iter()
        .map(|d| {
            tasks
                .iter()
                .map(|task| {
                    let noise = rng.gen_range(0.9..1.1);
                    round4(d / peak * task.capacity / 100.0 * noise).max(1e-4)
                })
                .collect()
        })
        .collect();

    Ok(Instance {
        horizon,
        tasks,
        cost,
        demand: Some(demand),
        total_capacity: Some(total_capacity),
        coupling_enabled: profile.coupled,
    })
}

/// Total maintenance cost of a schedule under the canonical objective.
pub fn schedule_cost(instance: &Instance, schedule: &Schedule) -> Result<f64> {
    let starts = schedule.starts(instance)?;
    let mut order: Vec<usize> = (0..instance.n_tasks()).collect();
    order.sort_by(|&a, &b| instance.tasks[a].id.cmp(&instance.tasks[b].id));

    let mut total = 0.0;
    for m in order {
        let s = starts[m];
        if s < 1 || s > instance.last_start(m) {
            return Err(Error::Parameter(format!(
                "start {s} of task {} outside 1..={}",
                instance.tasks[m].id,
                instance.last_start(m)
            )));
        }
        total += (s..s + instance.duration(m)).map(|t| instance.cost_at(t, m)).sum::<f64>();
    }
    Ok(total)
}

/// Whether the schedule satisfies every coupling row (always true when
/// coupling is disabled).
pub fn coupling_feasible(instance: &Instance, starts: &[usize]) -> bool {
    (1..=instance.horizon).all(|t| match instance.coupling_rhs(t) {
        None => true,
        Some(rhs) => {
            let load: f64 = starts
                .iter()
                .enumerate()
                .filter(|&(m, &s)| s <= t && t < s + instance.duration(m))
                .map(|(m, _)| instance.tasks[m].capacity)
                .sum();
            load <= rhs + crate::tol::FEASIBILITY
        }
    })
}

/// Calls `visit` with every start combination in lexicographic order.
pub(crate) fn for_each_start_combination(instance: &Instance, mut visit: impl FnMut(&[usize])) -> Result<()> {
    let count = instance.placement_count();
    if count > crate::ENUMERATION_BUDGET {
        return Err(Error::TooLarge {
            count,
            budget: crate::ENUMERATION_BUDGET,
        });
    }
    if count == 0 {
        return Ok(());
    }
    let n = instance.n_tasks();
    let mut starts = vec![1usize; n];
    loop {
        visit(&starts);
        let mut m = n;
        loop {
            if m == 0 {
                return Ok(());
            }
            m -= 1;
            if starts[m] < instance.last_start(m) {
                starts[m] += 1;
                break;
            }
            starts[m] = 1;
        }
    }
}
