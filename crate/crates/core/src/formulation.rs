//! The seven model builders.
//!
//! Every builder declares `X[t, m]` and/or `S[t, m]` for `t = 1..=|T|`, adds
//! its row families expanded over periods and tasks, and attaches the shared
//! objective `sum c[t, m] X[t, m]` plus the optional coupling rows. Terms
//! that fall outside the horizon (`X[0, m]`, `X[t > |T|, m]`, `S[t < 1, m]`)
//! are read as the constant 0. Start variables that would run past the
//! horizon (`t >= |T| - W + 2`) get upper bound 0.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::instance::{coupling_feasible, for_each_start_combination, validate, Instance, Schedule};
use crate::model::{residuals, FractionalPoint, MipModel, Provenance, RowFamily, RowSense, RowTag, VarLabel};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FormulationId {
    /// Execution + start variables linked by `X[t] - X[t-1] <= S[t]`.
    F1,
    /// Execution only; every rise is followed by `W` executed periods.
    F2,
    /// Execution only; a rise at `t` forces execution at `t + W - 1`.
    F3,
    /// Execution + start; execution needs a start in the last `W` periods.
    F4,
    /// Execution only; aggregated look-ahead of `F2`.
    F5,
    /// Start variables only; execution is the window sum of starts.
    F6,
    /// Start + execution with execution defined as the window sum.
    F7,
}

impl FormulationId {
    pub const ALL: [FormulationId; 7] = [
        FormulationId::F1,
        FormulationId::F2,
        FormulationId::F3,
        FormulationId::F4,
        FormulationId::F5,
        FormulationId::F6,
        FormulationId::F7,
    ];

    pub fn has_x(self) -> bool {
        self != FormulationId::F6
    }

    pub fn has_s(self) -> bool {
        matches!(
            self,
            FormulationId::F1 | FormulationId::F4 | FormulationId::F6 | FormulationId::F7
        )
    }

    /// All 21 unordered pairs, in lexicographic order.
    pub fn pairs() -> Vec<(FormulationId, FormulationId)> {
        let mut out = Vec::new();
        for (i, &a) in Self::ALL.iter().enumerate() {
            for &b in &Self::ALL[i + 1..] {
                out.push((a, b));
            }
        }
        out
    }
}

impl fmt::Display for FormulationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for FormulationId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        let digits = upper.strip_prefix('F').unwrap_or(&upper);
        match digits {
            "1" => Ok(FormulationId::F1),
            "2" => Ok(FormulationId::F2),
            "3" => Ok(FormulationId::F3),
            "4" => Ok(FormulationId::F4),
            "5" => Ok(FormulationId::F5),
            "6" => Ok(FormulationId::F6),
            "7" => Ok(FormulationId::F7),
            _ => Err(Error::Parameter(format!("unknown formulation {s:?} (expected F1..F7)"))),
        }
    }
}

struct Builder<'a> {
    inst: &'a Instance,
    model: MipModel,
    x: Vec<Vec<usize>>,
    s: Vec<Vec<usize>>,
}

impl<'a> Builder<'a> {
    fn new(id: FormulationId, inst: &'a Instance) -> Self {
        let model = MipModel::new(Provenance {
            formulation: id.to_string(),
            instance: inst.fingerprint(),
        });
        let mut b = Self {
            inst,
            model,
            x: Vec::new(),
            s: Vec::new(),
        };
        if id.has_x() {
            for m in 0..inst.n_tasks() {
                let col = (1..=inst.horizon)
                    .map(|t| b.model.add_variable(VarLabel::x(t, m), 0.0, 1.0, true))
                    .collect();
                b.x.push(col);
            }
        }
        if id.has_s() {
            for m in 0..inst.n_tasks() {
                let last = inst.last_start(m);
                let col = (1..=inst.horizon)
                    .map(|t| {
                        let upper = if t > last { 0.0 } else { 1.0 };
                        b.model.add_variable(VarLabel::s(t, m), 0.0, upper, true)
                    })
                    .collect();
                b.s.push(col);
            }
        }
        b
    }

    fn horizon(&self) -> usize {
        self.inst.horizon
    }

    /// `X[t, m]` with out-of-horizon periods reading as nothing.
    fn x(&self, t: usize, m: usize) -> Option<usize> {
        (1..=self.horizon()).contains(&t).then(|| self.x[m][t - 1])
    }

    fn s(&self, t: usize, m: usize) -> Option<usize> {
        (1..=self.horizon()).contains(&t).then(|| self.s[m][t - 1])
    }

    /// Terms of `sum_{t' = t - W + 1}^{t} S[t', m]`.
    fn start_window(&self, t: usize, m: usize) -> Vec<(usize, f64)> {
        let w = self.inst.duration(m);
        let first = (t + 1).saturating_sub(w).max(1);
        (first..=t).filter_map(|tp| self.s(tp, m)).map(|j| (j, 1.0)).collect()
    }

    /// `X[t, m] - X[t - 1, m]` as terms.
    fn rise(&self, t: usize, m: usize) -> Vec<(usize, f64)> {
        let mut terms: Vec<(usize, f64)> = self.x(t, m).map(|j| (j, 1.0)).into_iter().collect();
        if t > 1 {
            terms.extend(self.x(t - 1, m).map(|j| (j, -1.0)));
        }
        terms
    }

    fn execution_total(&mut self, family: RowFamily) {
        for m in 0..self.inst.n_tasks() {
            let terms: Vec<_> = self.x[m].iter().map(|&j| (j, 1.0)).collect();
            let w = self.inst.duration(m) as f64;
            self.model.add_row(terms, RowSense::Eq, w, RowTag::new(family).task(m));
        }
    }

    fn single_start(&mut self, family: RowFamily) {
        for m in 0..self.inst.n_tasks() {
            let terms: Vec<_> = self.s[m].iter().map(|&j| (j, 1.0)).collect();
            self.model.add_row(terms, RowSense::Eq, 1.0, RowTag::new(family).task(m));
        }
    }

    /// Execution of task `m` in period `t` as terms over the model's own
    /// variables (the start window for F6).
    fn execution_terms(&self, t: usize, m: usize) -> Vec<(usize, f64)> {
        if self.x.is_empty() {
            self.start_window(t, m)
        } else {
            self.x(t, m).map(|j| (j, 1.0)).into_iter().collect()
        }
    }

    fn objective_and_coupling(&mut self) {
        let inst = self.inst;
        let mut objective = Vec::new();
        for m in 0..inst.n_tasks() {
            for t in 1..=inst.horizon {
                let c = inst.cost_at(t, m);
                objective.extend(self.execution_terms(t, m).into_iter().map(|(j, a)| (j, a * c)));
            }
        }
        self.model.set_objective(objective);

        for t in 1..=inst.horizon {
            let Some(rhs) = inst.coupling_rhs(t) else { continue };
            let mut terms = Vec::new();
            for (m, task) in inst.tasks.iter().enumerate() {
                terms.extend(
                    self.execution_terms(t, m)
                        .into_iter()
                        .map(|(j, a)| (j, a * task.capacity)),
                );
            }
            self.model
                .add_row(terms, RowSense::Le, rhs, RowTag::new(RowFamily::Coupling).period(t));
        }
    }

    fn f1(&mut self) {
        self.execution_total(RowFamily::F1a);
        self.single_start(RowFamily::F1b);
        for m in 0..self.inst.n_tasks() {
            for t in 1..=self.horizon() {
                let mut terms = self.rise(t, m);
                terms.push((self.s[m][t - 1], -1.0));
                let tag = RowTag::new(RowFamily::F1c).period(t).task(m);
                self.model.add_row(terms, RowSense::Le, 0.0, tag);
            }
        }
    }

    fn f2(&mut self) {
        self.execution_total(RowFamily::F2a);
        for m in 0..self.inst.n_tasks() {
            let w = self.inst.duration(m);
            for t in 1..=self.horizon() {
                let mut clamped = false;
                for tl in t..t + w {
                    let tag = RowTag::new(RowFamily::F2b).period(t).task(m);
                    match self.x(tl, m) {
                        Some(j) => {
                            let mut terms = self.rise(t, m);
                            terms.push((j, -1.0));
                            self.model.add_row(terms, RowSense::Le, 0.0, tag.lag(tl));
                        }
                        // every look-ahead past the horizon yields the same row
                        None if !clamped => {
                            clamped = true;
                            self.model.add_row(self.rise(t, m), RowSense::Le, 0.0, tag);
                        }
                        None => {}
                    }
                }
            }
        }
    }

    fn f3(&mut self) {
        self.execution_total(RowFamily::F3a);
        for m in 0..self.inst.n_tasks() {
            let w = self.inst.duration(m);
            for t in 1..=self.horizon() {
                let mut terms = self.rise(t, m);
                terms.extend(self.x(t + w - 1, m).map(|j| (j, -1.0)));
                let tag = RowTag::new(RowFamily::F3b).period(t).task(m);
                self.model.add_row(terms, RowSense::Le, 0.0, tag);
            }
        }
    }

    fn f4(&mut self) {
        self.execution_total(RowFamily::F4a);
        self.single_start(RowFamily::F4b);
        for m in 0..self.inst.n_tasks() {
            for t in 1..=self.horizon() {
                let mut terms = self.start_window(t, m);
                terms.push((self.x[m][t - 1], -1.0));
                let tag = RowTag::new(RowFamily::F4c).period(t).task(m);
                self.model.add_row(terms, RowSense::Ge, 0.0, tag);
            }
        }
    }

    fn f5(&mut self) {
        self.execution_total(RowFamily::F5a);
        for m in 0..self.inst.n_tasks() {
            let w = self.inst.duration(m);
            for t in 1..=self.horizon() {
                let mut terms: Vec<_> = self.rise(t, m).into_iter().map(|(j, a)| (j, a * w as f64)).collect();
                terms.extend((t..t + w).filter_map(|tp| self.x(tp, m)).map(|j| (j, -1.0)));
                let tag = RowTag::new(RowFamily::F5b).period(t).task(m);
                self.model.add_row(terms, RowSense::Le, 0.0, tag);
            }
        }
    }

    fn f6(&mut self) {
        self.single_start(RowFamily::F6a);
    }

    fn f7(&mut self) {
        self.single_start(RowFamily::F7a);
        for m in 0..self.inst.n_tasks() {
            for t in 1..=self.horizon() {
                let mut terms: Vec<_> = self.start_window(t, m).into_iter().map(|(j, a)| (j, -a)).collect();
                terms.push((self.x[m][t - 1], 1.0));
                let tag = RowTag::new(RowFamily::F7b).period(t).task(m);
                self.model.add_row(terms, RowSense::Eq, 0.0, tag);
            }
        }
    }
}

/// Builds formulation `id` for `instance`.
pub fn build(id: FormulationId, instance: &Instance) -> Result<MipModel> {
    let violations = validate(instance);
    if !violations.is_empty() {
        return Err(Error::InvalidInstance(violations));
    }
    let mut b = Builder::new(id, instance);
    match id {
        FormulationId::F1 => b.f1(),
        FormulationId::F2 => b.f2(),
        FormulationId::F3 => b.f3(),
        FormulationId::F4 => b.f4(),
        FormulationId::F5 => b.f5(),
        FormulationId::F6 => b.f6(),
        FormulationId::F7 => b.f7(),
    }
    b.objective_and_coupling();
    debug_assert_eq!(b.model.check(), Ok(()));
    Ok(b.model)
}

/// The 0/1 point (`X` and `S`) encoding a start vector.
pub fn schedule_point(instance: &Instance, starts: &[usize]) -> FractionalPoint {
    let mut p = FractionalPoint::new();
    for (m, &s) in starts.iter().enumerate() {
        let w = instance.duration(m);
        for t in 1..=instance.horizon {
            let on = (s..s + w).contains(&t);
            p.set(VarLabel::x(t, m), if on { 1.0 } else { 0.0 });
            p.set(VarLabel::s(t, m), if t == s { 1.0 } else { 0.0 });
        }
    }
    p
}

/// Execution values implied by start values through the window sum.
pub fn execution_from_starts(instance: &Instance, point: &FractionalPoint) -> FractionalPoint {
    let mut out = FractionalPoint::new();
    for m in 0..instance.n_tasks() {
        let w = instance.duration(m);
        for t in 1..=instance.horizon {
            let first = (t + 1).saturating_sub(w).max(1);
            let x: f64 = (first..=t).map(|tp| point.get(&VarLabel::s(tp, m))).sum();
            out.set(VarLabel::x(t, m), x);
        }
    }
    out
}

/// Every schedule whose 0/1 encoding satisfies all rows and bounds of the
/// formulation.
pub fn integer_feasible_set(id: FormulationId, instance: &Instance) -> Result<BTreeSet<Schedule>> {
    let model = build(id, instance)?;
    let mut out = BTreeSet::new();
    for_each_start_combination(instance, |starts| {
        let point = schedule_point(instance, starts);
        if residuals(&model, &point).is_feasible(1e-9) {
            debug_assert!(coupling_feasible(instance, starts));
            out.insert(Schedule::from_starts(instance, starts));
        }
    })?;
    Ok(out)
}
