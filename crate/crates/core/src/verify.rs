//! The full verification program: both printed counterexamples, every
//! proven tightness relation, the bound ordering on a seeded family and the
//! two lemmas, each reported as a named pass/fail check.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::formulation::{build, FormulationId};
use crate::instance::{generate, GenerationProfile, Instance};
use crate::model::{residuals, FractionalPoint, RowFamily, VarKind};
use crate::simplex::{feasibility_probe, lp_solve, LpStatus, ProbeOutcome};
use crate::tightness::{
    compare_with_witnesses, lemma2_deviation, membership, verify_lemma1, verify_lemma2, CandidateWitness, LemmaId,
    LemmaReport, Membership, PinMode, Verdict, GAP_TOLERANCE,
};
use crate::Result;

/// Seed used when the caller does not pick one.
pub const DEFAULT_SEED: u64 = 1;

/// Residual tolerance for the printed counterexample arithmetic.
const EXACT: f64 = 1e-9;

use FormulationId::{F1, F2, F3, F4, F5, F6, F7};

/// Single task with `W = 2` on four periods and the fractional point
/// `X = (1/3, 2/3, 2/3, 1/3)`, `S = (2/3, 1/3, 0, 0)`.
pub fn counterexample1() -> (Instance, FractionalPoint) {
    let instance = Instance::single_task(2, &[3.0, 1.0, 2.0, 5.0]);
    let point = FractionalPoint::new()
        .with_series(VarKind::X, 0, &[1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0])
        .with_series(VarKind::S, 0, &[2.0 / 3.0, 1.0 / 3.0, 0.0, 0.0]);
    (instance, point)
}

/// Single task with `W = 3` on ten periods and the execution pattern
/// `X = 1/3` at `t = 1, 2, 3, 6, 7, 8` and `X = 1/4` at `t = 4, 5, 9, 10`.
pub fn counterexample2() -> (Instance, FractionalPoint) {
    let instance = Instance::single_task(3, &[3.0, 1.0, 2.0, 5.0, 4.0, 1.0, 2.0, 6.0, 3.0, 2.0]);
    let (a, b) = (1.0 / 3.0, 0.25);
    let point = FractionalPoint::new().with_series(VarKind::X, 0, &[a, a, a, b, b, a, a, a, b, b]);
    (instance, point)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PaperReport {
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<Check>,
    /// Worst lemma reports over the seeded family.
    pub lemmas: Vec<LemmaReport>,
}

impl PaperReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    /// One aligned line per check, then a summary line.
    pub fn to_text(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        let mut out = String::new();
        for c in &self.checks {
            let status = if c.pass { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "{status}  {:<width$}  {}", c.name, c.detail);
        }
        let failed = self.failures().count();
        let _ = writeln!(
            out,
            "{} of {} checks passed (seed {})",
            self.checks.len() - failed,
            self.checks.len(),
            self.seed
        );
        out
    }
}

fn check(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        pass,
        detail: detail.into(),
    }
}

fn probe_name(outcome: &ProbeOutcome) -> String {
    match outcome {
        ProbeOutcome::Feasible { .. } => "feasible".into(),
        ProbeOutcome::Infeasible => "infeasible".into(),
        ProbeOutcome::Undecided { status } => format!("undecided ({status:?})"),
    }
}

/// Violation of the window-sum row of F7 at period `t` for task 0.
fn window_row_violation(instance: &Instance, point: &FractionalPoint, t: usize) -> Result<f64> {
    let model = build(F7, instance)?;
    let report = residuals(&model, point);
    Ok(report
        .rows
        .iter()
        .find(|r| r.tag.family == RowFamily::F7b && r.tag.period == Some(t))
        .map_or(f64::NAN, |r| r.violation))
}

fn counterexample1_checks(out: &mut Vec<Check>) -> Result<()> {
    let (inst, point) = counterexample1();
    let f1 = residuals(&build(F1, &inst)?, &point);
    out.push(check(
        "counterexample 1 satisfies every F1 row",
        f1.max_violation() <= EXACT,
        format!("max residual {:.3e}", f1.max_violation()),
    ));
    let activity = f1
        .rows
        .iter()
        .find(|r| r.tag.family == RowFamily::F1c && r.tag.period == Some(2))
        .map_or(f64::NAN, |r| r.activity);
    let x = point.series(VarKind::X, 0, inst.horizon);
    let rise = x[1] - x[0];
    out.push(check(
        "counterexample 1 start-link row at t=2 is tight",
        (rise - 1.0 / 3.0).abs() <= EXACT && activity.abs() <= EXACT,
        format!("X2 - X1 = {rise:.12} <= S2 = 1/3, slack {:.3e}", 0.0 - activity),
    ));
    let v2 = window_row_violation(&inst, &point, 2)?;
    let v3 = window_row_violation(&inst, &point, 3)?;
    out.push(check(
        "counterexample 1 violates the F7 window sum at t=2 and t=3",
        (v2 - 1.0 / 3.0).abs() <= EXACT && (v3 - 1.0 / 3.0).abs() <= EXACT,
        format!("violation {v2:.12} at t=2, {v3:.12} at t=3"),
    ));
    let full = feasibility_probe(&build(F7, &inst)?, &point)?;
    out.push(check(
        "counterexample 1 is infeasible for F7",
        full.is_infeasible(),
        format!("probe with X and S pinned: {}", probe_name(&full)),
    ));
    let f6 = build(F6, &inst)?;
    let in_f6 = membership(F6, &f6, &inst, &point, PinMode::FullPoint)?;
    out.push(check(
        "counterexample 1 is infeasible for F6",
        in_f6 == Membership::NonMember,
        format!("probe with S pinned and X as window sums: {in_f6:?}"),
    ));
    let x_only = feasibility_probe(&build(F7, &inst)?, &point.only(VarKind::X))?;
    out.push(check(
        "counterexample 1 execution values alone extend to an F7 point",
        x_only.is_feasible(),
        format!("probe with X pinned, S free: {}", probe_name(&x_only)),
    ));
    Ok(())
}

fn counterexample2_checks(out: &mut Vec<Check>) -> Result<()> {
    let (inst, point) = counterexample2();
    for id in [F2, F3, F5] {
        let report = residuals(&build(id, &inst)?, &point);
        out.push(check(
            format!("counterexample 2 satisfies every {id} row"),
            report.max_violation() <= EXACT,
            format!("max residual {:.3e}", report.max_violation()),
        ));
    }
    let f5 = residuals(&build(F5, &inst)?, &point);
    let first = f5
        .rows
        .iter()
        .find(|r| r.tag.family == RowFamily::F5b && r.tag.period == Some(1))
        .map_or(f64::NAN, |r| r.activity);
    out.push(check(
        "counterexample 2 aggregated look-ahead row at t=1 holds with equality",
        first.abs() <= EXACT,
        format!("3*(1/3 - 0) - (X1 + X2 + X3) = {first:.3e}, bound 0"),
    ));
    let total: f64 = point.series(VarKind::X, 0, inst.horizon).iter().sum();
    out.push(check(
        "counterexample 2 executes exactly W periods in total",
        (total - 3.0).abs() <= EXACT,
        format!("6*(1/3) + 4*(1/4) = {total:.12}"),
    ));
    let lemma2 = lemma2_deviation(&inst, &point);
    out.push(check(
        "counterexample 2 satisfies the rise inequality of lemma 2",
        lemma2 <= GAP_TOLERANCE,
        format!("max deviation {lemma2:.3e}"),
    ));
    for id in [F7, F6] {
        let model = build(id, &inst)?;
        let got = membership(id, &model, &inst, &point, PinMode::Projection)?;
        out.push(check(
            format!("counterexample 2 is infeasible for {id}"),
            got == Membership::NonMember,
            format!("probe with X pinned: {got:?}"),
        ));
    }
    Ok(())
}

/// Seeded instances for the relation and bound checks.
pub fn instance_family(seed: u64, count: usize, max_horizon: usize, max_tasks: usize) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let horizon = rng.gen_range(4..=max_horizon);
            let tasks = rng.gen_range(1..=max_tasks);
            let profile = if k % 2 == 0 {
                GenerationProfile::coupled()
            } else {
                GenerationProfile::default()
            };
            generate(rng.gen(), horizon, tasks, &profile).expect("family parameters are valid")
        })
        .collect()
}

/// A proven relation, checked on a counterexample instance and
/// on a seeded family.
struct Relation {
    name: &'static str,
    a: FormulationId,
    b: FormulationId,
    strict: bool,
}

const RELATIONS: [Relation; 11] = [
    Relation { name: "F7 is strictly tighter than F1", a: F7, b: F1, strict: true },
    Relation { name: "F6 is strictly tighter than F1", a: F6, b: F1, strict: true },
    Relation { name: "F7 is strictly tighter than F2", a: F7, b: F2, strict: true },
    Relation { name: "F6 is strictly tighter than F2", a: F6, b: F2, strict: true },
    Relation { name: "F7 is strictly tighter than F3", a: F7, b: F3, strict: true },
    Relation { name: "F6 is strictly tighter than F3", a: F6, b: F3, strict: true },
    Relation { name: "F7 is equivalent to F4", a: F7, b: F4, strict: false },
    Relation { name: "F6 is equivalent to F4", a: F6, b: F4, strict: false },
    Relation { name: "F7 is strictly tighter than F5", a: F7, b: F5, strict: true },
    Relation { name: "F6 is strictly tighter than F5", a: F6, b: F5, strict: true },
    Relation { name: "F6 and F7 have identical relaxations", a: F6, b: F7, strict: false },
];

fn relation_check(rel: &Relation, family: &[Instance], n_samples: usize, seed: u64) -> Result<Check> {
    let (inst, witness) = if rel.b == F1 { counterexample1() } else { counterexample2() };
    let mode = if rel.b == F1 { PinMode::FullPoint } else { PinMode::Projection };
    let injected = [CandidateWitness { point: witness, mode }];
    let mut detail = Vec::new();
    let mut pass = true;
    if rel.strict {
        let v = compare_with_witnesses(rel.a, rel.b, &inst, n_samples, seed, &injected)?;
        let ok = v.verdict == Verdict::AStrictlyTighter && v.witnesses.iter().any(|w| w.injected);
        pass &= ok;
        detail.push(format!("counterexample instance: {} ({} witnesses)", v.verdict, v.witness_count()));
    }
    let inclusion = |v: Verdict| {
        if rel.strict {
            matches!(v, Verdict::AStrictlyTighter | Verdict::AAtLeastAsTight | Verdict::Equivalent)
        } else {
            v == Verdict::Equivalent
        }
    };
    let verdicts: Vec<Verdict> = family
        .par_iter()
        .enumerate()
        .map(|(k, inst)| {
            compare_with_witnesses(rel.a, rel.b, inst, n_samples, seed.wrapping_add(k as u64), &[]).map(|v| v.verdict)
        })
        .collect::<Result<_>>()?;
    let bad: Vec<String> = verdicts
        .iter()
        .enumerate()
        .filter(|(_, v)| !inclusion(**v))
        .map(|(k, v)| format!("#{k}: {v}"))
        .collect();
    pass &= bad.is_empty();
    let strict_count = verdicts.iter().filter(|v| **v == Verdict::AStrictlyTighter).count();
    if bad.is_empty() {
        if rel.strict {
            detail.push(format!(
                "family: inclusion on {} instances, strict on {strict_count}",
                family.len()
            ));
        } else {
            detail.push(format!("family: equivalent on {} instances", family.len()));
        }
    } else {
        detail.push(format!("family violations {}", bad.join(", ")));
    }
    Ok(check(rel.name, pass, detail.join("; ")))
}

fn lp_bound(id: FormulationId, inst: &Instance) -> Result<f64> {
    let sol = lp_solve(&build(id, inst)?);
    Ok(match sol.status {
        LpStatus::Optimal => sol.objective,
        LpStatus::Infeasible => f64::INFINITY,
        _ => f64::NAN,
    })
}

/// `a >= b - tolerance`, with `+inf` for empty relaxations.
fn at_least(a: f64, b: f64) -> bool {
    a == b || a >= b - GAP_TOLERANCE
}

fn bound_checks(family: &[Instance], out: &mut Vec<Check>) -> Result<()> {
    let bounds: Vec<[f64; 7]> = family
        .par_iter()
        .map(|inst| {
            let mut z = [0.0; 7];
            for id in FormulationId::ALL {
                z[id as usize] = lp_bound(id, inst)?;
            }
            Ok(z)
        })
        .collect::<Result<_>>()?;
    let z = |row: &[f64; 7], id: FormulationId| row[id as usize];
    let count_bad = |pred: &dyn Fn(&[f64; 7]) -> bool| bounds.iter().filter(|row| !pred(row)).count();
    let n = family.len();

    let tight = [F4, F6, F7];
    let bad = count_bad(&|row| tight.iter().all(|&a| tight.iter().all(|&b| at_least(z(row, a), z(row, b)))));
    out.push(check(
        "bound ordering: z(F6) = z(F7) = z(F4)",
        bad == 0,
        format!("{} of {n} instances agree within {GAP_TOLERANCE:e}", n - bad),
    ));
    let bad = count_bad(&|row| {
        tight
            .iter()
            .all(|&a| [F1, F2, F3, F5].iter().all(|&k| at_least(z(row, a), z(row, k))))
    });
    out.push(check(
        "bound ordering: z(F4), z(F6), z(F7) dominate z(F1), z(F2), z(F3), z(F5)",
        bad == 0,
        format!("{} of {n} instances ordered", n - bad),
    ));
    let bad = count_bad(&|row| at_least(z(row, F2), z(row, F3)));
    out.push(check(
        "bound ordering: z(F2) dominates z(F3)",
        bad == 0,
        format!("{} of {n} instances ordered", n - bad),
    ));
    Ok(())
}

fn worst(reports: &[LemmaReport], lemma: LemmaId) -> LemmaReport {
    LemmaReport {
        lemma,
        points_checked: reports.iter().map(|r| r.points_checked).sum(),
        max_deviation: reports.iter().map(|r| r.max_deviation).fold(0.0, f64::max),
        pass: reports.iter().all(|r| r.pass),
    }
}

fn lemma_checks(family: &[Instance], seed: u64, out: &mut Vec<Check>) -> Result<Vec<LemmaReport>> {
    let runs: Vec<(LemmaReport, LemmaReport)> = family
        .par_iter()
        .enumerate()
        .map(|(k, inst)| {
            let s = seed.wrapping_add(k as u64);
            Ok((verify_lemma1(inst, 50, s)?, verify_lemma2(inst, 50, s)?))
        })
        .collect::<Result<_>>()?;
    let (l1, l2): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    let reports = vec![worst(&l1, LemmaId::L1), worst(&l2, LemmaId::L2)];
    let names = [
        "lemma 1: every F7 relaxation point executes W periods",
        "lemma 2: every rise is covered by the next W execution values",
    ];
    for (r, name) in reports.iter().zip(names) {
        let vacuous = r.points_checked == 0;
        out.push(check(
            name,
            r.pass && !vacuous,
            format!("{} points, max deviation {:.3e}", r.points_checked, r.max_deviation),
        ));
    }
    Ok(reports)
}

/// Samples per relaxation in the relation checks.
pub const RELATION_SAMPLES: usize = 60;

/// Runs every check with instances and samples derived from `seed`.
pub fn verify_paper(seed: u64) -> Result<PaperReport> {
    let mut checks = Vec::new();
    counterexample1_checks(&mut checks)?;
    counterexample2_checks(&mut checks)?;

    let family = instance_family(seed, 8, 12, 3);
    for rel in &RELATIONS {
        checks.push(relation_check(rel, &family, RELATION_SAMPLES, seed)?);
    }

    let bound_family = instance_family(seed ^ 0xb0, 20, 26, 5);
    bound_checks(&bound_family, &mut checks)?;
    let lemma_family = instance_family(seed ^ 0x1e, 10, 26, 5);
    let lemmas = lemma_checks(&lemma_family, seed, &mut checks)?;

    Ok(PaperReport {
        seed,
        pass: checks.iter().all(|c| c.pass),
        checks,
        lemmas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counterexample_points_have_the_printed_values() {
        let (inst, p) = counterexample1();
        assert_eq!(inst.horizon, 4);
        assert_eq!(p.series(VarKind::S, 0, 4), vec![2.0 / 3.0, 1.0 / 3.0, 0.0, 0.0]);
        let (inst, p) = counterexample2();
        assert_eq!((inst.horizon, inst.duration(0)), (10, 3));
        assert_eq!(p.get(&crate::VarLabel::x(4, 0)), 0.25);
    }

    #[test]
    fn text_report_is_aligned() {
        let report = PaperReport {
            seed: 1,
            pass: false,
            checks: vec![check("short", true, "a"), check("a longer name", false, "b")],
            lemmas: Vec::new(),
        };
        let text = report.to_text();
        assert_eq!(
            text,
            "PASS  short          a\nFAIL  a longer name  b\n1 of 2 checks passed (seed 1)\n"
        );
    }

    #[test]
    fn family_is_deterministic() {
        assert_eq!(instance_family(5, 4, 12, 3), instance_family(5, 4, 12, 3));
    }
}
