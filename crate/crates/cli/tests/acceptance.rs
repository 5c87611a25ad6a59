//! The seven acceptance criteria, each printed as one PASS/FAIL line.
//! Exits nonzero if any criterion fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use gms_core::verify::{counterexample1, counterexample2};
use gms_core::{
    bnb_solve, brute_force_solve, build, feasibility_probe, generate, lp_solve, residuals, verify_lemma1,
    verify_lemma2, Error, FormulationId, GenerationProfile, Instance, LpStatus, MipStatus, RowFamily, VarKind,
};
use FormulationId::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn row_value(report: &gms_core::ResidualReport, family: RowFamily, t: usize) -> Option<&gms_core::model::RowResidual> {
    report.rows.iter().find(|r| r.tag.family == family && r.tag.period == Some(t))
}

fn criterion1() -> Outcome {
    let (inst, point) = counterexample1();
    let f1 = residuals(&build(F1, &inst).unwrap(), &point).max_violation();
    let f7 = build(F7, &inst).unwrap();
    let probe = feasibility_probe(&f7, &point).unwrap();
    let at2 = row_value(&residuals(&f7, &point), RowFamily::F7b, 2).map_or(f64::NAN, |r| r.violation);
    let pass = f1 <= 1e-9 && probe.is_infeasible() && (at2 - 1.0 / 3.0).abs() <= 1e-9;
    outcome(
        pass,
        format!("F1 max residual {f1:.2e}, F7 probe infeasible={}, F7 window row at t=2 off by {at2:.12}", probe.is_infeasible()),
    )
}

fn criterion2() -> Outcome {
    let (inst, point) = counterexample2();
    let f2 = residuals(&build(F2, &inst).unwrap(), &point).max_violation();
    let f5_report = residuals(&build(F5, &inst).unwrap(), &point);
    let f5 = f5_report.max_violation();
    let x = point.series(VarKind::X, 0, inst.horizon);
    let lhs = 3.0 * (x[0] - 0.0);
    let rhs: f64 = x[..3].iter().sum();
    let row_ok = row_value(&f5_report, RowFamily::F5b, 1).is_some_and(|r| r.violation <= 1e-9);
    let probe = feasibility_probe(&build(F7, &inst).unwrap(), &point).unwrap();
    let pass = f2 <= 1e-9 && f5 <= 1e-9 && row_ok && (lhs - 1.0).abs() <= 1e-12 && lhs <= rhs + 1e-9 && probe.is_infeasible();
    outcome(
        pass,
        format!(
            "F2 max residual {f2:.2e}, F5 max residual {f5:.2e}, 3*(1/3 - 0) = {lhs:.12} <= {rhs:.12}, F7 probe infeasible={}",
            probe.is_infeasible()
        ),
    )
}

fn criterion3() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    let mut min_points = usize::MAX;
    let mut all = true;
    for seed in 0..20u64 {
        let horizon = 8 + (seed as usize * 7) % 19;
        let tasks = 1 + seed as usize % 5;
        let profile = if seed % 2 == 0 {
            GenerationProfile::coupled()
        } else {
            GenerationProfile::default()
        };
        let inst = generate(seed, horizon, tasks, &profile).unwrap();
        let l1 = verify_lemma1(&inst, 50, seed).unwrap();
        let l2 = verify_lemma2(&inst, 50, seed).unwrap();
        worst = (worst.0.max(l1.max_deviation), worst.1.max(l2.max_deviation));
        min_points = min_points.min(l1.points_checked).min(l2.points_checked);
        all &= l1.pass && l2.pass && l1.points_checked >= 50 && l2.points_checked >= 50;
    }
    outcome(
        all,
        format!(
            "20 instances, min points {min_points}, max deviation L1 {:.2e}, L2 {:.2e}",
            worst.0, worst.1
        ),
    )
}

fn lp_bound(id: FormulationId, inst: &Instance) -> f64 {
    let sol = lp_solve(&build(id, inst).unwrap());
    match sol.status {
        LpStatus::Optimal => sol.objective,
        LpStatus::Infeasible => f64::INFINITY,
        _ => f64::NAN,
    }
}

fn at_least(a: f64, b: f64) -> bool {
    a == b || a >= b - 1e-6
}

fn criterion4() -> Outcome {
    let mut violations = Vec::new();
    let mut empty = 0;
    for seed in 0..100u64 {
        let inst = generate(seed, 26, 5, &GenerationProfile::coupled()).unwrap();
        let z: Vec<f64> = FormulationId::ALL.iter().map(|&id| lp_bound(id, &inst)).collect();
        let zf = |id: FormulationId| z[id as usize];
        if zf(F6).is_infinite() {
            empty += 1;
        }
        let tight = [F4, F6, F7];
        let mut ok = tight.iter().all(|&a| tight.iter().all(|&b| at_least(zf(a), zf(b))));
        ok &= tight.iter().all(|&a| [F1, F2, F3, F5].iter().all(|&k| at_least(zf(a), zf(k))));
        ok &= at_least(zf(F2), zf(F3));
        if !ok {
            violations.push(format!("seed {seed}: {z:?}"));
        }
    }
    outcome(
        violations.is_empty(),
        format!(
            "100 coupled instances, {} violations, {empty} with empty relaxations {}",
            violations.len(),
            violations.join("; ")
        ),
    )
}

fn criterion5() -> Outcome {
    let mut mismatches = Vec::new();
    let mut infeasible = 0;
    for seed in 0..50u64 {
        let horizon = 2 + (seed as usize * 5) % 11;
        let tasks = 1 + seed as usize % 3;
        let profile = if seed % 2 == 0 {
            GenerationProfile::coupled()
        } else {
            GenerationProfile::default()
        };
        let inst = generate(seed, horizon, tasks, &profile).unwrap();
        let oracle = brute_force_solve(&inst);
        if matches!(oracle, Err(Error::Infeasible)) {
            infeasible += 1;
        }
        for id in FormulationId::ALL {
            let sol = bnb_solve(&build(id, &inst).unwrap(), 100_000);
            let ok = match &oracle {
                Ok((cost, _)) => sol.status == MipStatus::Optimal && (sol.objective - cost).abs() <= 1e-6,
                Err(Error::Infeasible) => sol.status == MipStatus::Infeasible,
                Err(_) => false,
            };
            if !ok {
                mismatches.push(format!("seed {seed} {id}: {:?} {}", sol.status, sol.objective));
            }
        }
    }
    outcome(
        mismatches.is_empty(),
        format!(
            "50 instances x 7 formulations, {infeasible} infeasible, {} mismatches {}",
            mismatches.len(),
            mismatches.join("; ")
        ),
    )
}

fn criterion6() -> Outcome {
    let mut bad = Vec::new();
    for seed in 0..50u64 {
        let horizon = 4 + seed as usize % 23;
        let tasks = 1 + seed as usize % 5;
        let inst = generate(seed, horizon, tasks, &GenerationProfile::default()).unwrap();
        let sol = bnb_solve(&build(F6, &inst).unwrap(), 100_000);
        let integral = sol
            .incumbent
            .as_ref()
            .is_some_and(|p| p.values.values().all(|v| (v - v.round()).abs() <= 1e-6));
        if sol.status != MipStatus::Optimal || sol.nodes != 1 || !integral {
            bad.push(format!("seed {seed}: {:?} nodes {}", sol.status, sol.nodes));
        }
    }
    outcome(bad.is_empty(), format!("50 instances, {} exceptions {}", bad.len(), bad.join("; ")))
}

fn criterion7() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let report_path = dir.path().join("report.json");
    let status = Command::new(env!("CARGO_BIN_EXE_gms"))
        .args(["verify-paper", "--out"])
        .arg(&report_path)
        .output()
        .unwrap();
    let report: serde_json::Value = match std::fs::read_to_string(&report_path) {
        Ok(text) => serde_json::from_str(&text).unwrap(),
        Err(e) => return outcome(false, format!("no report written: {e}")),
    };
    let checks = report["checks"].as_array().cloned().unwrap_or_default();
    let passing = |name: &str| checks.iter().any(|c| c["name"] == name && c["pass"] == true);
    let claims = [
        "F7 is strictly tighter than F1",
        "F6 is strictly tighter than F1",
        "F7 is strictly tighter than F2",
        "F6 is strictly tighter than F2",
        "F7 is strictly tighter than F3",
        "F6 is strictly tighter than F3",
        "F7 is equivalent to F4",
        "F6 is equivalent to F4",
        "F7 is strictly tighter than F5",
        "F6 is strictly tighter than F5",
        "F6 and F7 have identical relaxations",
        "lemma 1: every F7 relaxation point executes W periods",
        "lemma 2: every rise is covered by the next W execution values",
    ];
    let missing: Vec<&str> = claims.iter().copied().filter(|c| !passing(c)).collect();
    let code = status.status.code();
    outcome(
        code == Some(0) && missing.is_empty() && report["pass"] == true,
        format!(
            "exit {code:?}, {} checks, {} of {} claims passing{}",
            checks.len(),
            claims.len() - missing.len(),
            claims.len(),
            if missing.is_empty() { String::new() } else { format!(", missing {missing:?}") }
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("counterexample 1 reproduction", criterion1, Duration::from_secs(1)),
        ("counterexample 2 reproduction", criterion2, Duration::from_secs(1)),
        ("lemma suites", criterion3, Duration::from_secs(30)),
        ("bound-ordering matrix", criterion4, Duration::from_secs(300)),
        ("oracle equivalence", criterion5, Duration::from_secs(120)),
        ("integral root of F6", criterion6, Duration::from_secs(u64::MAX / 4)),
        ("verify-paper end to end", criterion7, Duration::from_secs(u64::MAX / 4)),
    ];
    let mut failed = 0;
    for (k, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *budget;
        let pass = result.pass && in_time;
        if !pass {
            failed += 1;
        }
        let timing = if *budget < Duration::from_secs(3600) {
            format!("{:.3}s of {}s", elapsed.as_secs_f64(), budget.as_secs())
        } else {
            format!("{:.3}s", elapsed.as_secs_f64())
        };
        println!(
            "acceptance {}: {} {name} [{timing}] {}",
            k + 1,
            if pass { "PASS" } else { "FAIL" },
            result.detail
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
