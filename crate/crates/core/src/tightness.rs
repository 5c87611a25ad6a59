//! Sampled comparison of relaxation polytopes and the two lemma checks.
//!
//! Every formulation is compared in the space of the execution variables
//! `X`. A point of one relaxation is mapped to its `X` values (for F6 through
//! the window sum of the start variables) and tested for membership in the
//! other relaxation: by a residual check when the target has no start
//! variables, and by a feasibility LP over the start variables otherwise.

use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::formulation::{build, execution_from_starts, FormulationId};
use crate::instance::Instance;
use crate::model::{residuals, FractionalPoint, MipModel, RowFamily, RowSense, RowTag, VarKind, VarLabel};
use crate::simplex::{feasibility_probe, lp_solve, sample_vertex, LpStatus, ProbeOutcome};
use crate::{tol, Result};

/// Default number of sampled vertices per relaxation.
pub const DEFAULT_SAMPLES: usize = 200;

/// Tolerance on bound gaps and lemma deviations.
pub const GAP_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "A_at_least_as_tight")]
    AAtLeastAsTight,
    #[serde(rename = "B_at_least_as_tight")]
    BAtLeastAsTight,
    #[serde(rename = "equivalent")]
    Equivalent,
    #[serde(rename = "A_strictly_tighter")]
    AStrictlyTighter,
    #[serde(rename = "B_strictly_tighter")]
    BStrictlyTighter,
    #[serde(rename = "noncomparable")]
    Noncomparable,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::AAtLeastAsTight => "A_at_least_as_tight",
            Verdict::BAtLeastAsTight => "B_at_least_as_tight",
            Verdict::Equivalent => "equivalent",
            Verdict::AStrictlyTighter => "A_strictly_tighter",
            Verdict::BStrictlyTighter => "B_strictly_tighter",
            Verdict::Noncomparable => "noncomparable",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Which relaxation a witness belongs to and which one excludes it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WitnessDirection {
    /// Feasible for B, infeasible for A: B is not contained in A.
    #[serde(rename = "in_B_not_A")]
    InBNotA,
    /// Feasible for A, infeasible for B: A is not contained in B.
    #[serde(rename = "in_A_not_B")]
    InANotB,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub direction: WitnessDirection,
    /// Supplied by the caller rather than sampled.
    pub injected: bool,
    pub point: FractionalPoint,
}

/// How a point is tested against a formulation that has start variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PinMode {
    /// Pin `X` only and let the start variables be re-chosen.
    Projection,
    /// Pin every variable of the point that the formulation has.
    FullPoint,
}

/// A caller-supplied point tested against both relaxations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateWitness {
    pub point: FractionalPoint,
    pub mode: PinMode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightnessVerdict {
    pub a: FormulationId,
    pub b: FormulationId,
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
    /// Distinct points whose membership was tested, both sides together.
    pub samples_used: usize,
    /// `z_LP(A) - z_LP(B)` under the canonical objective.
    pub bound_gap: f64,
    /// Membership tests whose LP stopped without a verdict.
    pub undecided: usize,
}

impl TightnessVerdict {
    pub fn witness_count(&self) -> usize {
        self.witnesses.len()
    }

    pub const CSV_HEADER: &'static str = "A,B,verdict,bound_gap,samples_used,witness_count";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.a,
            self.b,
            self.verdict,
            self.bound_gap,
            self.samples_used,
            self.witness_count()
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Membership {
    Member,
    NonMember,
    Undecided(LpStatus),
}

/// The `X` values of a point of formulation `id`.
pub fn x_projection(id: FormulationId, instance: &Instance, point: &FractionalPoint) -> FractionalPoint {
    if id.has_x() {
        point.only(VarKind::X)
    } else {
        execution_from_starts(instance, point)
    }
}

fn from_probe(outcome: ProbeOutcome) -> Membership {
    match outcome {
        ProbeOutcome::Feasible { .. } => Membership::Member,
        ProbeOutcome::Infeasible => Membership::NonMember,
        ProbeOutcome::Undecided { status } => Membership::Undecided(status),
    }
}

/// F6 with extra rows equating each window sum of starts to a given `X`.
fn with_projection_rows(model: &MipModel, instance: &Instance, x: &FractionalPoint) -> MipModel {
    let mut out = model.clone();
    for m in 0..instance.n_tasks() {
        let w = instance.duration(m);
        for t in 1..=instance.horizon {
            let first = (t + 1).saturating_sub(w).max(1);
            let terms: Vec<(usize, f64)> = (first..=t)
                .filter_map(|tp| out.var_index(&VarLabel::s(tp, m)))
                .map(|j| (j, 1.0))
                .collect();
            let tag = RowTag::new(RowFamily::Projection).period(t).task(m);
            out.add_row(terms, RowSense::Eq, x.get(&VarLabel::x(t, m)), tag);
        }
    }
    out
}

/// Whether `point` lies in the relaxation of `model` (built as `id` for
/// `instance`), in the sense selected by `mode`.
///
/// `point` must carry `X` values unless `id` is F6 and the mode pins the
/// start variables.
pub fn membership(
    id: FormulationId,
    model: &MipModel,
    instance: &Instance,
    point: &FractionalPoint,
    mode: PinMode,
) -> Result<Membership> {
    if !id.has_s() {
        let ok = residuals(model, &point.only(VarKind::X)).is_feasible(tol::FEASIBILITY);
        return Ok(if ok { Membership::Member } else { Membership::NonMember });
    }
    let mut fixed = match mode {
        PinMode::Projection => point.only(VarKind::X),
        PinMode::FullPoint => FractionalPoint {
            values: point
                .values
                .iter()
                .filter(|(l, _)| model.var_index(l).is_some())
                .map(|(&l, &v)| (l, v))
                .collect(),
        },
    };
    if id.has_x() {
        return feasibility_probe(model, &fixed).map(from_probe);
    }
    let target = if point.has_kind(VarKind::X) {
        with_projection_rows(model, instance, point)
    } else {
        model.clone()
    };
    fixed.values.retain(|l, _| l.kind == VarKind::S);
    feasibility_probe(&target, &fixed).map(from_probe)
}

/// Vertices sampled from one relaxation, mapped to `X`.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub id: FormulationId,
    pub model: MipModel,
    /// Canonical LP value; `+inf` if the relaxation is empty.
    pub bound: f64,
    pub status: LpStatus,
    /// `X` projections of the canonical optimum and the sampled vertices,
    /// without duplicates.
    pub points: Vec<FractionalPoint>,
    /// Vertex samples whose LP stopped without an optimum.
    pub failed: usize,
}

fn point_key(p: &FractionalPoint) -> Vec<i64> {
    p.values.values().map(|v| (v * 1e9).round() as i64).collect()
}

fn sample_seeds(seed: u64, stream: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..n).map(|_| rng.gen()).collect()
}

/// Samples `n_samples` random vertices of `id`'s relaxation plus the
/// canonical optimum.
pub fn sample_relaxation(id: FormulationId, instance: &Instance, n_samples: usize, seed: u64) -> Result<SampleSet> {
    let model = build(id, instance)?;
    let root = lp_solve(&model);
    let bound = match root.status {
        LpStatus::Optimal => root.objective,
        LpStatus::Infeasible => f64::INFINITY,
        _ => f64::NAN,
    };
    let mut set = SampleSet {
        id,
        bound,
        status: root.status,
        points: Vec::new(),
        failed: 0,
        model,
    };
    if root.status == LpStatus::Infeasible {
        return Ok(set);
    }
    let seeds = sample_seeds(seed, id as u64, n_samples);
    let vertices: Vec<_> = seeds.par_iter().map(|&s| sample_vertex(&set.model, s)).collect();
    let mut seen = BTreeSet::new();
    for sol in std::iter::once(root).chain(vertices) {
        if sol.status != LpStatus::Optimal {
            set.failed += 1;
            continue;
        }
        let x = x_projection(id, instance, &sol.values);
        if seen.insert(point_key(&x)) {
            set.points.push(x);
        }
    }
    if set.failed > 0 {
        log::warn!("{id}: {} vertex samples stopped without an optimum", set.failed);
    }
    Ok(set)
}

/// Membership of every sample of `source` in `target`.
fn cross_membership(source: &SampleSet, target: &SampleSet, instance: &Instance) -> Result<Vec<Membership>> {
    source
        .points
        .par_iter()
        .map(|p| membership(target.id, &target.model, instance, p, PinMode::Projection))
        .collect()
}

fn bound_gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        a - b
    }
}

#[derive(Default)]
struct Evidence {
    witnesses: Vec<Witness>,
    /// A-points whose membership in B is unknown.
    unknown_ab: usize,
    /// B-points whose membership in A is unknown.
    unknown_ba: usize,
    undecided: usize,
    tested: usize,
}

impl Evidence {
    fn record(&mut self, point: &FractionalPoint, in_a: Membership, in_b: Membership, injected: bool) {
        use Membership::*;
        self.tested += 1;
        self.undecided += [in_a, in_b].iter().filter(|m| matches!(m, Undecided(_))).count();
        let direction = match (in_a, in_b) {
            (NonMember, Member) => Some(WitnessDirection::InBNotA),
            (Member, NonMember) => Some(WitnessDirection::InANotB),
            (Member, Undecided(_)) => {
                self.unknown_ab += 1;
                None
            }
            (Undecided(_), Member) => {
                self.unknown_ba += 1;
                None
            }
            _ => None,
        };
        if let Some(direction) = direction {
            self.witnesses.push(Witness {
                direction,
                injected,
                point: point.clone(),
            });
        }
    }

    fn verdict(&self, gap: f64) -> Verdict {
        let count = |d| self.witnesses.iter().filter(|w| w.direction == d).count();
        let b_not_a = count(WitnessDirection::InBNotA);
        let a_not_b = count(WitnessDirection::InANotB);
        let a_inside = self.unknown_ab == 0;
        let b_inside = self.unknown_ba == 0;
        let gap_ok_a = gap.is_nan() || gap >= -GAP_TOLERANCE;
        let gap_ok_b = gap.is_nan() || gap <= GAP_TOLERANCE;
        match (b_not_a > 0, a_not_b > 0) {
            (true, true) => Verdict::Noncomparable,
            (true, false) if a_inside && gap_ok_a => Verdict::AStrictlyTighter,
            (false, true) if b_inside && gap_ok_b => Verdict::BStrictlyTighter,
            (false, false) if a_inside && b_inside && gap.abs() <= GAP_TOLERANCE => Verdict::Equivalent,
            (false, false) if a_inside && !b_inside && gap_ok_a => Verdict::AAtLeastAsTight,
            (false, false) if !a_inside && b_inside && gap_ok_b => Verdict::BAtLeastAsTight,
            _ => Verdict::Inconclusive,
        }
    }
}

fn test_injected(
    a: &SampleSet,
    b: &SampleSet,
    instance: &Instance,
    injected: &[CandidateWitness],
    evidence: &mut Evidence,
) -> Result<()> {
    for cand in injected {
        let in_a = membership(a.id, &a.model, instance, &cand.point, cand.mode)?;
        let in_b = membership(b.id, &b.model, instance, &cand.point, cand.mode)?;
        evidence.record(&cand.point, in_a, in_b, true);
    }
    Ok(())
}

fn combine(a: &SampleSet, b: &SampleSet, a_in_b: &[Membership], b_in_a: &[Membership], evidence: &mut Evidence) {
    for (p, &m) in a.points.iter().zip(a_in_b) {
        evidence.record(p, Membership::Member, m, false);
    }
    for (p, &m) in b.points.iter().zip(b_in_a) {
        evidence.record(p, m, Membership::Member, false);
    }
}

fn finish(a: &SampleSet, b: &SampleSet, evidence: Evidence) -> TightnessVerdict {
    let gap = bound_gap(a.bound, b.bound);
    TightnessVerdict {
        a: a.id,
        b: b.id,
        verdict: evidence.verdict(gap),
        samples_used: evidence.tested,
        bound_gap: gap,
        undecided: evidence.undecided,
        witnesses: evidence.witnesses,
    }
}

/// Compares the relaxations of `a` and `b` on `instance` from `n_samples`
/// sampled vertices of each.
pub fn compare(
    a: FormulationId,
    b: FormulationId,
    instance: &Instance,
    n_samples: usize,
    seed: u64,
) -> Result<TightnessVerdict> {
    compare_with_witnesses(a, b, instance, n_samples, seed, &[])
}

/// [`compare`] with caller-supplied candidate witnesses tested alongside
/// the samples.
pub fn compare_with_witnesses(
    a: FormulationId,
    b: FormulationId,
    instance: &Instance,
    n_samples: usize,
    seed: u64,
    injected: &[CandidateWitness],
) -> Result<TightnessVerdict> {
    let (sa, sb) = rayon::join(
        || sample_relaxation(a, instance, n_samples, seed),
        || sample_relaxation(b, instance, n_samples, seed),
    );
    let (sa, sb) = (sa?, sb?);
    let (a_in_b, b_in_a) = rayon::join(
        || cross_membership(&sa, &sb, instance),
        || cross_membership(&sb, &sa, instance),
    );
    let mut evidence = Evidence::default();
    test_injected(&sa, &sb, instance, injected, &mut evidence)?;
    combine(&sa, &sb, &a_in_b?, &b_in_a?, &mut evidence);
    Ok(finish(&sa, &sb, evidence))
}

/// Verdicts for all 21 unordered pairs, sampling each relaxation once.
pub fn compare_all(instance: &Instance, n_samples: usize, seed: u64) -> Result<Vec<TightnessVerdict>> {
    let sets: Vec<SampleSet> = FormulationId::ALL
        .par_iter()
        .map(|&id| sample_relaxation(id, instance, n_samples, seed))
        .collect::<Result<_>>()?;
    let set = |id: FormulationId| &sets[id as usize];
    let ordered: Vec<(FormulationId, FormulationId)> = FormulationId::ALL
        .iter()
        .flat_map(|&s| FormulationId::ALL.iter().filter(move |&&t| t != s).map(move |&t| (s, t)))
        .collect();
    let memberships: Vec<Vec<Membership>> = ordered
        .par_iter()
        .map(|&(s, t)| cross_membership(set(s), set(t), instance))
        .collect::<Result<_>>()?;
    let lookup = |s: FormulationId, t: FormulationId| {
        let k = ordered.iter().position(|&p| p == (s, t)).expect("ordered pair present");
        &memberships[k]
    };
    Ok(FormulationId::pairs()
        .into_iter()
        .map(|(a, b)| {
            let mut evidence = Evidence::default();
            combine(set(a), set(b), lookup(a, b), lookup(b, a), &mut evidence);
            finish(set(a), set(b), evidence)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LemmaId {
    L1,
    L2,
}

impl fmt::Display for LemmaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LemmaId::L1 => "L1",
            LemmaId::L2 => "L2",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma: LemmaId,
    pub points_checked: usize,
    pub max_deviation: f64,
    pub pass: bool,
}

/// `max_m |sum_t X[t, m] - W_m|`.
pub fn lemma1_deviation(instance: &Instance, point: &FractionalPoint) -> f64 {
    (0..instance.n_tasks())
        .map(|m| {
            let total: f64 = point.series(VarKind::X, m, instance.horizon).iter().sum();
            (total - instance.duration(m) as f64).abs()
        })
        .fold(0.0, f64::max)
}

/// `max (X[t] - X[t-1] - X[t+j])` over tasks, periods and
/// `j < W_m`, reading out-of-horizon values as 0.
pub fn lemma2_deviation(instance: &Instance, point: &FractionalPoint) -> f64 {
    let horizon = instance.horizon;
    let mut worst = f64::NEG_INFINITY;
    for m in 0..instance.n_tasks() {
        let x = point.series(VarKind::X, m, horizon);
        let at = |t: usize| if (1..=horizon).contains(&t) { x[t - 1] } else { 0.0 };
        for t in 1..=horizon {
            let rise = at(t) - at(t - 1);
            for j in 0..instance.duration(m) {
                worst = worst.max(rise - at(t + j));
            }
        }
    }
    worst
}

/// Feasible points of F7's relaxation: sampled vertices followed by random
/// convex combinations of vertex pairs, `n_points` in total.
pub fn f7_points(instance: &Instance, n_points: usize, seed: u64) -> Result<Vec<FractionalPoint>> {
    let model = build(FormulationId::F7, instance)?;
    let n_vertices = n_points.div_ceil(2).max(1).min(n_points);
    let seeds = sample_seeds(seed, 0x4c, n_vertices);
    let vertices: Vec<FractionalPoint> = seeds
        .par_iter()
        .map(|&s| sample_vertex(&model, s))
        .collect::<Vec<_>>()
        .into_iter()
        .filter(|sol| sol.status == LpStatus::Optimal)
        .map(|sol| sol.values)
        .collect();
    if vertices.is_empty() {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0x4d);
    let mut points = vertices.clone();
    while points.len() < n_points {
        let i = rng.gen_range(0..vertices.len());
        let j = rng.gen_range(0..vertices.len());
        let w: f64 = rng.gen();
        points.push(vertices[i].blend(&vertices[j], w));
    }
    Ok(points)
}

fn lemma_report(lemma: LemmaId, points: &[FractionalPoint], deviation: impl Fn(&FractionalPoint) -> f64) -> LemmaReport {
    let max_deviation = points.iter().map(deviation).fold(0.0, f64::max);
    LemmaReport {
        lemma,
        points_checked: points.len(),
        max_deviation,
        pass: max_deviation <= GAP_TOLERANCE,
    }
}

/// Checks that `sum_t X[t, m] = W_m` on `n_points` points of F7's relaxation.
pub fn verify_lemma1(instance: &Instance, n_points: usize, seed: u64) -> Result<LemmaReport> {
    let points = f7_points(instance, n_points, seed)?;
    Ok(lemma_report(LemmaId::L1, &points, |p| lemma1_deviation(instance, p)))
}

/// Checks that `X[t] - X[t-1] <= X[t+j]` for `j < W_m` on `n_points` points
/// of F7's relaxation.
pub fn verify_lemma2(instance: &Instance, n_points: usize, seed: u64) -> Result<LemmaReport> {
    let points = f7_points(instance, n_points, seed)?;
    Ok(lemma_report(LemmaId::L2, &points, |p| lemma2_deviation(instance, p)))
}
