//! Formulation-agnostic sparse MIP representation.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VarKind {
    /// Task in maintenance during the period.
    X,
    /// Task starts in the period.
    S,
}

/// `kind[period, task]`, with 1-based periods and 0-based task positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarLabel {
    pub kind: VarKind,
    pub period: usize,
    pub task: usize,
}

impl VarLabel {
    pub fn x(period: usize, task: usize) -> Self {
        Self {
            kind: VarKind::X,
            period,
            task,
        }
    }

    pub fn s(period: usize, task: usize) -> Self {
        Self {
            kind: VarKind::S,
            period,
            task,
        }
    }
}

impl fmt::Display for VarLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}_t{}_m{}", self.kind, self.period, self.task)
    }
}

impl FromStr for VarLabel {
    type Err = String;

    /// Parses the `Display` form, `X_t3_m0`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("malformed variable label {s:?}");
        let mut parts = s.split('_');
        let kind = match parts.next() {
            Some("X") => VarKind::X,
            Some("S") => VarKind::S,
            _ => return Err(bad()),
        };
        let mut number = |prefix: char| -> Result<usize, String> {
            parts
                .next()
                .and_then(|p| p.strip_prefix(prefix))
                .and_then(|d| d.parse().ok())
                .ok_or_else(bad)
        };
        let period = number('t')?;
        let task = number('m')?;
        if parts.next().is_some() || period == 0 {
            return Err(bad());
        }
        Ok(VarLabel { kind, period, task })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub label: VarLabel,
    pub lower: f64,
    pub upper: f64,
    pub integral: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

impl RowSense {
    pub fn symbol(self) -> &'static str {
        match self {
            RowSense::Le => "<=",
            RowSense::Eq => "=",
            RowSense::Ge => ">=",
        }
    }
}

/// Constraint family a row was expanded from. `F2b` is family `b` of
/// formulation F2, and so on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RowFamily {
    F1a,
    F1b,
    F1c,
    F2a,
    F2b,
    F3a,
    F3b,
    F4a,
    F4b,
    F4c,
    F5a,
    F5b,
    F6a,
    F7a,
    F7b,
    /// Shared capacity/demand row.
    Coupling,
    /// Row added to pin an implicit expression to a value.
    Projection,
}

impl RowFamily {
    pub fn code(self) -> &'static str {
        match self {
            RowFamily::F1a => "F1a",
            RowFamily::F1b => "F1b",
            RowFamily::F1c => "F1c",
            RowFamily::F2a => "F2a",
            RowFamily::F2b => "F2b",
            RowFamily::F3a => "F3a",
            RowFamily::F3b => "F3b",
            RowFamily::F4a => "F4a",
            RowFamily::F4b => "F4b",
            RowFamily::F4c => "F4c",
            RowFamily::F5a => "F5a",
            RowFamily::F5b => "F5b",
            RowFamily::F6a => "F6a",
            RowFamily::F7a => "F7a",
            RowFamily::F7b => "F7b",
            RowFamily::Coupling => "coupling",
            RowFamily::Projection => "projection",
        }
    }
}

/// Where a row came from: family plus the indices it was expanded over.
/// `lag` is the look-ahead period of `F2b` rows (`None` for the clamped
/// row that replaces all out-of-horizon look-aheads).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RowTag {
    pub family: RowFamily,
    pub period: Option<usize>,
    pub task: Option<usize>,
    pub lag: Option<usize>,
}

impl RowTag {
    pub fn new(family: RowFamily) -> Self {
        Self {
            family,
            period: None,
            task: None,
            lag: None,
        }
    }

    pub fn task(mut self, task: usize) -> Self {
        self.task = Some(task);
        self
    }

    pub fn period(mut self, period: usize) -> Self {
        self.period = Some(period);
        self
    }

    pub fn lag(mut self, lag: usize) -> Self {
        self.lag = Some(lag);
        self
    }
}

impl fmt::Display for RowTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.family.code())?;
        if let Some(t) = self.period {
            write!(f, "_t{t}")?;
        }
        if let Some(m) = self.task {
            write!(f, "_m{m}")?;
        }
        if let Some(l) = self.lag {
            write!(f, "_l{l}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintRow {
    /// Sorted by variable index, no duplicates, no zero coefficients.
    pub terms: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
    pub tag: RowTag,
}

impl ConstraintRow {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * values[j]).sum()
    }

    /// Amount by which the row is violated at `activity` (0 if satisfied).
    pub fn violation(&self, activity: f64) -> f64 {
        match self.sense {
            RowSense::Le => (activity - self.rhs).max(0.0),
            RowSense::Ge => (self.rhs - activity).max(0.0),
            RowSense::Eq => (activity - self.rhs).abs(),
        }
    }
}

/// Merges duplicate indices and drops zero coefficients.
pub(crate) fn normalize_terms(terms: impl IntoIterator<Item = (usize, f64)>) -> Vec<(usize, f64)> {
    let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
    for (j, a) in terms {
        *merged.entry(j).or_insert(0.0) += a;
    }
    merged.into_iter().filter(|&(_, a)| a != 0.0).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub formulation: String,
    pub instance: String,
}

/// A minimization MIP with box-bounded variables and sparse rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MipModel {
    pub variables: Vec<Variable>,
    pub rows: Vec<ConstraintRow>,
    pub objective: Vec<(usize, f64)>,
    pub provenance: Provenance,
    #[serde(skip)]
    index: HashMap<VarLabel, usize>,
}

impl MipModel {
    pub fn new(provenance: Provenance) -> Self {
        Self {
            variables: Vec::new(),
            rows: Vec::new(),
            objective: Vec::new(),
            provenance,
            index: HashMap::new(),
        }
    }

    pub fn add_variable(&mut self, label: VarLabel, lower: f64, upper: f64, integral: bool) -> usize {
        assert!(lower <= upper, "variable {label} has empty bounds");
        assert!(!self.index.contains_key(&label), "duplicate variable {label}");
        let j = self.variables.len();
        self.variables.push(Variable {
            label,
            lower,
            upper,
            integral,
        });
        self.index.insert(label, j);
        j
    }

    /// Adds a row after normalizing its terms. Rows left without terms that
    /// hold trivially (`0 <= 0`, `0 <= 5`) are dropped; the return value says
    /// whether the row was kept.
    pub fn add_row(
        &mut self,
        terms: impl IntoIterator<Item = (usize, f64)>,
        sense: RowSense,
        rhs: f64,
        tag: RowTag,
    ) -> bool {
        let terms = normalize_terms(terms);
        debug_assert!(terms.iter().all(|&(j, _)| j < self.variables.len()));
        let row = ConstraintRow {
            terms,
            sense,
            rhs,
            tag,
        };
        if row.terms.is_empty() && row.violation(0.0) == 0.0 {
            return false;
        }
        self.rows.push(row);
        true
    }

    pub fn set_objective(&mut self, terms: impl IntoIterator<Item = (usize, f64)>) {
        self.objective = normalize_terms(terms);
    }

    pub fn var_index(&self, label: &VarLabel) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn has_kind(&self, kind: VarKind) -> bool {
        self.variables.iter().any(|v| v.label.kind == kind)
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|&(j, c)| c * values[j]).sum()
    }

    /// Dense value vector for a point; labels missing from the point are 0.
    pub fn dense_values(&self, point: &FractionalPoint) -> Vec<f64> {
        self.variables.iter().map(|v| point.get(&v.label)).collect()
    }

    pub fn point_from_values(&self, values: &[f64]) -> FractionalPoint {
        FractionalPoint {
            values: self
                .variables
                .iter()
                .zip(values)
                .map(|(v, &x)| (v.label, x))
                .collect(),
        }
    }

    /// Rebuilds the label index, e.g. after deserialization.
    pub fn reindex(&mut self) {
        self.index = self
            .variables
            .iter()
            .enumerate()
            .map(|(j, v)| (v.label, j))
            .collect();
    }

    /// Checks the structural invariants; returns a description of the first
    /// broken one.
    pub fn check(&self) -> Result<(), String> {
        for v in &self.variables {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(format!("variable {} has lower > upper", v.label));
            }
            if v.integral && (v.lower < 0.0 || v.upper > 1.0) {
                return Err(format!("binary variable {} has bounds outside [0, 1]", v.label));
            }
        }
        let n = self.variables.len();
        for row in &self.rows {
            if row.terms.iter().any(|&(j, _)| j >= n) {
                return Err(format!("row {} references a missing variable", row.tag));
            }
            if row.terms.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(format!("row {} has unsorted or duplicate terms", row.tag));
            }
            if row.terms.iter().any(|&(_, a)| a == 0.0) {
                return Err(format!("row {} stores a zero coefficient", row.tag));
            }
        }
        if self.objective.iter().any(|&(j, _)| j >= n) {
            return Err("objective references a missing variable".into());
        }
        Ok(())
    }

    /// Same model with every integrality flag cleared.
    pub fn relax(&self) -> MipModel {
        let mut out = self.clone();
        for v in &mut out.variables {
            v.integral = false;
        }
        out
    }
}

/// LP relaxation of `model`.
pub fn relax(model: &MipModel) -> MipModel {
    model.relax()
}

/// Values for a subset of labelled variables; absent labels read as 0.
///
/// Serializes as a JSON object keyed by label, e.g. `{"X_t1_m0": 0.5}`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FractionalPoint {
    pub values: BTreeMap<VarLabel, f64>,
}

impl Serialize for FractionalPoint {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_map(self.values.iter().map(|(l, v)| (l.to_string(), v)))
    }
}

impl<'de> Deserialize<'de> for FractionalPoint {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw: BTreeMap<String, f64> = BTreeMap::deserialize(deserializer)?;
        let values = raw
            .into_iter()
            .map(|(k, v)| k.parse::<VarLabel>().map(|l| (l, v)).map_err(serde::de::Error::custom))
            .collect::<Result<_, _>>()?;
        Ok(FractionalPoint { values })
    }
}

impl FractionalPoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, label: &VarLabel) -> f64 {
        self.values.get(label).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, label: VarLabel, value: f64) {
        self.values.insert(label, value);
    }

    /// Sets `kind[t, task]` for `t = 1..=series.len()`.
    pub fn with_series(mut self, kind: VarKind, task: usize, series: &[f64]) -> Self {
        for (i, &v) in series.iter().enumerate() {
            self.set(
                VarLabel {
                    kind,
                    period: i + 1,
                    task,
                },
                v,
            );
        }
        self
    }

    /// Values of `kind` for one task over `1..=horizon`.
    pub fn series(&self, kind: VarKind, task: usize, horizon: usize) -> Vec<f64> {
        (1..=horizon)
            .map(|t| {
                self.get(&VarLabel {
                    kind,
                    period: t,
                    task,
                })
            })
            .collect()
    }

    /// Restriction to labels of one kind.
    pub fn only(&self, kind: VarKind) -> FractionalPoint {
        FractionalPoint {
            values: self
                .values
                .iter()
                .filter(|(l, _)| l.kind == kind)
                .map(|(&l, &v)| (l, v))
                .collect(),
        }
    }

    pub fn has_kind(&self, kind: VarKind) -> bool {
        self.values.keys().any(|l| l.kind == kind)
    }

    /// `(1 - w) * self + w * other` over the union of labels.
    pub fn blend(&self, other: &FractionalPoint, w: f64) -> FractionalPoint {
        let mut out = FractionalPoint::new();
        for label in self.values.keys().chain(other.values.keys()) {
            out.set(*label, (1.0 - w) * self.get(label) + w * other.get(label));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowResidual {
    pub tag: RowTag,
    pub activity: f64,
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundResidual {
    pub label: VarLabel,
    pub value: f64,
    pub violation: f64,
}

/// Per-row and per-bound violations of a point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub rows: Vec<RowResidual>,
    pub max_row_violation: f64,
    /// First row attaining the maximum row violation.
    pub worst_row: Option<RowTag>,
    pub bounds: Vec<BoundResidual>,
    pub max_bound_violation: f64,
}

impl ResidualReport {
    pub fn max_violation(&self) -> f64 {
        self.max_row_violation.max(self.max_bound_violation)
    }

    pub fn is_feasible(&self, tolerance: f64) -> bool {
        self.max_violation() <= tolerance
    }

    pub fn row(&self, tag: &RowTag) -> Option<&RowResidual> {
        self.rows.iter().find(|r| &r.tag == tag)
    }

    /// Rows with a positive violation.
    pub fn violated(&self) -> impl Iterator<Item = &RowResidual> {
        self.rows.iter().filter(|r| r.violation > 0.0)
    }
}

/// Row and bound violations of `point` against `model`.
pub fn residuals(model: &MipModel, point: &FractionalPoint) -> ResidualReport {
    let values = model.dense_values(point);
    residuals_dense(model, &values)
}

pub(crate) fn residuals_dense(model: &MipModel, values: &[f64]) -> ResidualReport {
    let mut rows = Vec::with_capacity(model.rows.len());
    let mut max_row_violation = 0.0;
    let mut worst_row = None;
    for row in &model.rows {
        let activity = row.activity(values);
        let violation = row.violation(activity);
        if violation > max_row_violation {
            max_row_violation = violation;
            worst_row = Some(row.tag);
        }
        rows.push(RowResidual {
            tag: row.tag,
            activity,
            violation,
        });
    }
    let mut bounds = Vec::new();
    let mut max_bound_violation = 0.0f64;
    for (v, &x) in model.variables.iter().zip(values) {
        let violation = (v.lower - x).max(x - v.upper).max(0.0);
        if violation > 0.0 {
            max_bound_violation = max_bound_violation.max(violation);
            bounds.push(BoundResidual {
                label: v.label,
                value: x,
                violation,
            });
        }
    }
    ResidualReport {
        rows,
        max_row_violation,
        worst_row,
        bounds,
        max_bound_violation,
    }
}

/// Whether every integral variable is within tolerance of an integer.
pub(crate) fn is_integral(model: &MipModel, values: &[f64]) -> bool {
    model
        .variables
        .iter()
        .zip(values)
        .all(|(v, &x)| !v.integral || (x - x.round()).abs() <= tol::INTEGRALITY)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> MipModel {
        let mut m = MipModel::new(Provenance {
            formulation: "test".into(),
            instance: "0".into(),
        });
        let a = m.add_variable(VarLabel::x(1, 0), 0.0, 1.0, true);
        let b = m.add_variable(VarLabel::x(2, 0), 0.0, 1.0, true);
        m.add_row([(a, 1.0), (b, 1.0), (a, 0.0)], RowSense::Eq, 1.0, RowTag::new(RowFamily::F2a).task(0));
        m.add_row([(b, 1.0), (a, 2.0), (b, -1.0)], RowSense::Le, 1.0, RowTag::new(RowFamily::F2b));
        m.set_objective([(a, 1.0), (b, 2.0)]);
        m
    }

    #[test]
    fn rows_are_normalized() {
        let m = tiny();
        assert_eq!(m.rows[0].terms, vec![(0, 1.0), (1, 1.0)]);
        assert_eq!(m.rows[1].terms, vec![(0, 2.0)]);
        m.check().unwrap();
    }

    #[test]
    fn trivially_satisfied_empty_rows_are_dropped() {
        let mut m = tiny();
        assert!(!m.add_row([(0, 1.0), (0, -1.0)], RowSense::Le, 0.0, RowTag::new(RowFamily::F2b)));
        assert!(m.add_row([], RowSense::Le, -1.0, RowTag::new(RowFamily::Coupling)));
    }

    #[test]
    fn relax_clears_integrality_only() {
        let m = tiny();
        let r = m.relax();
        assert!(r.variables.iter().all(|v| !v.integral));
        assert_eq!(r.rows, m.rows);
        assert_eq!(r.objective, m.objective);
        assert_eq!(r.relax(), r);
    }

    #[test]
    fn residual_report_names_the_worst_row() {
        let m = tiny();
        let p = FractionalPoint::new().with_series(VarKind::X, 0, &[1.0, 1.0]);
        let rep = residuals(&m, &p);
        assert_eq!(rep.max_row_violation, 1.0);
        assert_eq!(rep.worst_row.unwrap().family, RowFamily::F2a);
        assert_eq!(rep.max_bound_violation, 0.0);

        let p = FractionalPoint::new().with_series(VarKind::X, 0, &[-0.5, 1.5]);
        let rep = residuals(&m, &p);
        assert_eq!(rep.bounds.len(), 2);
        assert_eq!(rep.max_bound_violation, 0.5);
    }

    #[test]
    fn points_serialize_with_label_keys() {
        let p = FractionalPoint::new().with_series(VarKind::S, 2, &[0.25, 0.75]);
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(text, r#"{"S_t1_m2":0.25,"S_t2_m2":0.75}"#);
        assert_eq!(serde_json::from_str::<FractionalPoint>(&text).unwrap(), p);
        assert!("S_t0_m1".parse::<VarLabel>().is_err());
        assert!("Y_t1_m1".parse::<VarLabel>().is_err());
        assert!("X_t1_m1_z".parse::<VarLabel>().is_err());
    }

    #[test]
    fn missing_labels_read_as_zero() {
        let m = tiny();
        let rep = residuals(&m, &FractionalPoint::new());
        assert_eq!(rep.row(&RowTag::new(RowFamily::F2a).task(0)).unwrap().violation, 1.0);
    }
}
