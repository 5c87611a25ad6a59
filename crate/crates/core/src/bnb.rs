//! Best-bound branch and bound over the simplex, plus the exhaustive
//! start-time oracle.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::instance::{coupling_feasible, for_each_start_combination, schedule_cost, Instance, Schedule};
use crate::model::{is_integral, residuals_dense, FractionalPoint, MipModel};
use crate::simplex::{lp_solve_with_bounds, LpSolution, LpStatus};
use crate::{tol, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MipStatus {
    Optimal,
    Infeasible,
    NodeLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MipSolution {
    pub status: MipStatus,
    /// Incumbent objective; `+inf` without an incumbent.
    pub objective: f64,
    pub incumbent: Option<FractionalPoint>,
    /// Lower bound on the optimum.
    pub best_bound: f64,
    /// LP relaxations solved.
    pub nodes: usize,
    /// LP relaxation value at the root, before any branching.
    pub root_bound: f64,
}

/// One solved node, for the optional CSV trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeTrace {
    pub node: usize,
    pub depth: usize,
    pub bound: f64,
    pub fractional: usize,
}

impl NodeTrace {
    pub const CSV_HEADER: &'static str = "node,depth,bound,fractional";

    pub fn csv_line(&self) -> String {
        format!("{},{},{},{}", self.node, self.depth, self.bound, self.fractional)
    }
}

struct Node {
    id: usize,
    depth: usize,
    bound: f64,
    down: bool,
    lower: Vec<f64>,
    upper: Vec<f64>,
    values: Vec<f64>,
}

// Max-heap order: lowest bound first, then down branches, then oldest.
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.down.cmp(&other.down))
            .then(other.id.cmp(&self.id))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

fn fractional_count(model: &MipModel, values: &[f64]) -> usize {
    model
        .variables
        .iter()
        .zip(values)
        .filter(|(v, &x)| v.integral && (x - x.round()).abs() > tol::INTEGRALITY)
        .count()
}

/// Most fractional integral variable, ties to the lowest index.
fn branching_variable(model: &MipModel, values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, (v, &x)) in model.variables.iter().zip(values).enumerate() {
        let dist = (x - x.round()).abs();
        if !v.integral || dist <= tol::INTEGRALITY {
            continue;
        }
        if best.is_none_or(|(_, d)| dist > d) {
            best = Some((j, dist));
        }
    }
    best.map(|(j, _)| j)
}

/// Integral variables snapped to the nearest integer when that keeps the
/// point feasible.
fn snapped(model: &MipModel, values: &[f64]) -> Vec<f64> {
    let snapped: Vec<f64> = model
        .variables
        .iter()
        .zip(values)
        .map(|(v, &x)| if v.integral { x.round() } else { x })
        .collect();
    if residuals_dense(model, &snapped).is_feasible(tol::FEASIBILITY) {
        snapped
    } else {
        values.to_vec()
    }
}

/// Solves `model` to optimality or until `node_limit` LPs have been solved.
pub fn bnb_solve(model: &MipModel, node_limit: usize) -> MipSolution {
    bnb_solve_traced(model, node_limit, |_| {})
}

enum Evaluated {
    /// Infeasible or integral; nothing left to explore.
    Closed,
    Open(Node),
    /// The LP hit its iteration limit.
    Failed,
}

/// [`bnb_solve`] reporting every solved node to `trace`.
pub fn bnb_solve_traced(model: &MipModel, node_limit: usize, mut trace: impl FnMut(NodeTrace)) -> MipSolution {
    let mut nodes = 0usize;
    let mut incumbent: Option<(f64, Vec<f64>)> = None;

    let mut evaluate = |lower: Vec<f64>,
                        upper: Vec<f64>,
                        depth: usize,
                        down: bool,
                        nodes: &mut usize,
                        incumbent: &mut Option<(f64, Vec<f64>)>|
     -> (Evaluated, LpSolution) {
        let lp = lp_solve_with_bounds(model, &lower, &upper);
        let id = *nodes;
        *nodes += 1;
        match lp.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return (Evaluated::Closed, lp),
            _ => return (Evaluated::Failed, lp),
        }
        trace(NodeTrace {
            node: id,
            depth,
            bound: lp.objective,
            fractional: fractional_count(model, &lp.dense),
        });
        if is_integral(model, &lp.dense) {
            let values = snapped(model, &lp.dense);
            let objective = model.objective_value(&values);
            if incumbent.as_ref().is_none_or(|(best, _)| objective < *best) {
                *incumbent = Some((objective, values));
            }
            return (Evaluated::Closed, lp);
        }
        let node = Node {
            id,
            depth,
            bound: lp.objective,
            down,
            lower,
            upper,
            values: lp.dense.clone(),
        };
        (Evaluated::Open(node), lp)
    };

    let lower: Vec<f64> = model.variables.iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = model.variables.iter().map(|v| v.upper).collect();
    let (root, root_lp) = evaluate(lower, upper, 0, true, &mut nodes, &mut incumbent);
    let root_bound = match root_lp.status {
        LpStatus::Optimal => root_lp.objective,
        LpStatus::Infeasible => f64::INFINITY,
        _ => f64::NEG_INFINITY,
    };

    // lowest bound of any subtree abandoned because its LP failed
    let mut lost_bound = f64::INFINITY;
    let mut heap = BinaryHeap::new();
    match root {
        Evaluated::Open(node) => heap.push(node),
        Evaluated::Failed => lost_bound = f64::NEG_INFINITY,
        Evaluated::Closed => {}
    }

    let prune = |bound: f64, incumbent: &Option<(f64, Vec<f64>)>| match incumbent {
        Some((best, _)) => bound >= best - 1e-9 * best.abs().max(1.0),
        None => false,
    };

    let mut limit_hit = false;
    while let Some(node) = heap.pop() {
        if prune(node.bound, &incumbent) {
            heap.clear();
            break;
        }
        if nodes >= node_limit {
            heap.push(node);
            limit_hit = true;
            break;
        }
        let j = branching_variable(model, &node.values).expect("open nodes are fractional");
        let x = node.values[j];
        for down in [true, false] {
            let (mut lo, mut up) = (node.lower.clone(), node.upper.clone());
            if down {
                up[j] = x.floor();
            } else {
                lo[j] = x.ceil();
            }
            match evaluate(lo, up, node.depth + 1, down, &mut nodes, &mut incumbent).0 {
                Evaluated::Open(child) if !prune(child.bound, &incumbent) => heap.push(child),
                Evaluated::Failed => lost_bound = lost_bound.min(node.bound),
                _ => {}
            }
        }
    }

    let (objective, point) = match &incumbent {
        Some((obj, values)) => (*obj, Some(model.point_from_values(values))),
        None => (f64::INFINITY, None),
    };
    let unresolved = lost_bound < objective;
    let status = if limit_hit || unresolved {
        MipStatus::NodeLimit
    } else if incumbent.is_some() {
        MipStatus::Optimal
    } else {
        MipStatus::Infeasible
    };
    let open_bound = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let best_bound = match status {
        MipStatus::Optimal => objective,
        MipStatus::Infeasible => f64::INFINITY,
        MipStatus::NodeLimit => open_bound.min(lost_bound).min(objective),
    };
    MipSolution {
        status,
        objective,
        incumbent: point,
        best_bound,
        nodes,
        root_bound,
    }
}

/// Cheapest schedule by exhaustive enumeration of start combinations,
/// respecting the coupling rows when they are enabled.
pub fn brute_force_solve(instance: &Instance) -> Result<(f64, Schedule)> {
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut failure = None;
    for_each_start_combination(instance, |starts| {
        if failure.is_some() || !coupling_feasible(instance, starts) {
            return;
        }
        match schedule_cost(instance, &Schedule::from_starts(instance, starts)) {
            Ok(cost) => {
                if best.as_ref().is_none_or(|(b, _)| cost < *b) {
                    best = Some((cost, starts.to_vec()));
                }
            }
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    best.map(|(cost, starts)| (cost, Schedule::from_starts(instance, &starts)))
        .ok_or(Error::Infeasible)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulation::{build, FormulationId};

    fn example() -> Instance {
        Instance::single_task(2, &[3.0, 1.0, 2.0, 5.0])
    }

    #[test]
    fn brute_force_picks_the_cheapest_window() {
        let (cost, schedule) = brute_force_solve(&example()).unwrap();
        assert_eq!(cost, 3.0);
        assert_eq!(schedule.start["m1"], 2);
    }

    #[test]
    fn forced_placement_costs_everything() {
        let inst = Instance::single_task(4, &[1.5, 2.0, 0.25, 4.0]);
        let (cost, schedule) = brute_force_solve(&inst).unwrap();
        assert_eq!(cost, 7.75);
        assert_eq!(schedule.start["m1"], 1);
    }

    #[test]
    fn brute_force_reports_infeasible_coupling() {
        let mut inst = example();
        inst.tasks[0].capacity = 10.0;
        inst.demand = Some(vec![95.0; 4]);
        inst.total_capacity = Some(100.0);
        inst.coupling_enabled = true;
        assert!(matches!(brute_force_solve(&inst), Err(Error::Infeasible)));
    }

    #[test]
    fn bnb_matches_the_example_for_every_formulation() {
        for id in FormulationId::ALL {
            let sol = bnb_solve(&build(id, &example()).unwrap(), 1000);
            assert_eq!(sol.status, MipStatus::Optimal, "{id}");
            assert!((sol.objective - 3.0).abs() < 1e-9, "{id}: {}", sol.objective);
            assert!(sol.root_bound <= sol.objective + 1e-6);
            let x = sol.incumbent.unwrap().series(crate::VarKind::X, 0, 4);
            if id.has_x() {
                assert_eq!(x, vec![0.0, 1.0, 1.0, 0.0], "{id}");
            }
        }
    }

    #[test]
    fn infeasible_model_reports_infeasible() {
        let mut inst = example();
        inst.tasks[0].capacity = 10.0;
        inst.demand = Some(vec![95.0; 4]);
        inst.total_capacity = Some(100.0);
        inst.coupling_enabled = true;
        let sol = bnb_solve(&build(FormulationId::F1, &inst).unwrap(), 1000);
        assert_eq!(sol.status, MipStatus::Infeasible);
        assert!(sol.incumbent.is_none());
    }
}
