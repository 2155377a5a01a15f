//! Experiment drivers and metrics: relative squared error against oracle
//! curves, known-DAG and perturbed-DAG method comparisons, causal-strength
//! ranking, and stability selection.

use std::time::Instant;

use serde::Serialize;

use crate::curve::EffectCurve;
use crate::data::{mean, quantile, std_dev, Dataset};
pub use crate::data::deciles;
use crate::error::{Error, Result};
use crate::estimator::{additive_effect, smint_estimate, SmintConfig};
use crate::graph::{order_superset, perturb_dag, random_dag, AdjustmentSet, Dag};
use crate::pathsim::{entire_path_effect, fit_sem, partial_path_effect, FittedSem, PathSimConfig};
use crate::seed::{mix2, mix3, rng2};
use crate::sem::{make_gp_sem, make_sigmoid_sem, oracle_effect, simulate, Sem, DEFAULT_GP_FEATURES};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

/// Relative squared error of estimated curves against references, summed
/// over pairs and grid points: `sum (est - ref)^2 / sum ref^2`.
pub fn relative_squared_error(estimates: &[EffectCurve], references: &[EffectCurve]) -> Result<f64> {
    if estimates.len() != references.len() || estimates.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "{} estimated curves for {} references",
            estimates.len(),
            references.len()
        )));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (e, r) in estimates.iter().zip(references) {
        if e.grid() != r.grid() {
            return Err(Error::ShapeMismatch("estimate and reference grids differ".into()));
        }
        for (&ev, &rv) in e.values().iter().zip(r.values()) {
            num += (ev - rv) * (ev - rv);
            den += rv * rv;
        }
    }
    if den == 0.0 {
        return Err(Error::NumericGuard("all reference values are zero".into()));
    }
    Ok(num / den)
}

/// Relative causal strength: the range-normalized sum of relative
/// deviations of the intervention curve from the observational mean,
/// `(1/range) * sum_i |m - curve_i| / |m|`.
///
/// `scale` guards the denominator: a mean below `1e-8 * scale` is treated
/// as numerically zero and rejected.
pub fn causal_strength(
    observational_mean: f64,
    curve: &EffectCurve,
    range: f64,
    scale: f64,
) -> Result<f64> {
    if !(range.is_finite() && range > 0.0) {
        return Err(Error::InvalidParam(format!("intervention range {range} must be positive")));
    }
    if observational_mean.abs() < 1e-8 * scale.abs() {
        return Err(Error::NumericGuard(format!(
            "observational mean {observational_mean} is numerically zero"
        )));
    }
    let m = observational_mean;
    let sum: f64 = curve.values().iter().map(|&v| (m - v).abs() / m.abs()).sum();
    Ok(sum / range)
}

/// Equally spaced grid over the central range of `xs`, from the 10th to
/// the 90th percentile.
pub fn central_grid(xs: &[f64], points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::InvalidParam("need at least two grid points".into()));
    }
    let lo = quantile(xs, 0.1)?;
    let hi = quantile(xs, 0.9)?;
    if !(hi > lo) {
        return Err(Error::InvalidParam(format!("degenerate central range [{lo}, {hi}]")));
    }
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points).map(|i| lo + step * i as f64).collect())
}

/// Mean squared gap between two curves on the same grid, the integrated
/// squared error up to the constant grid-spacing factor.
pub fn mean_squared_deviation(a: &EffectCurve, b: &EffectCurve) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(Error::ShapeMismatch("curves live on different grids".into()));
    }
    let n = a.values().len() as f64;
    Ok(a.values().iter().zip(b.values()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MechFamily {
    Sigmoid,
    Gp,
}

impl MechFamily {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sigmoid" => Ok(MechFamily::Sigmoid),
            "gp" => Ok(MechFamily::Gp),
            _ => Err(Error::InvalidParam(format!("unknown mechanism family {s:?}"))),
        }
    }

    fn build(self, dag: &Dag, seed: u64) -> Result<Sem> {
        match self {
            MechFamily::Sigmoid => make_sigmoid_sem(dag, seed),
            MechFamily::Gp => make_gp_sem(dag, seed, DEFAULT_GP_FEATURES),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Smint,
    Additive,
    PathEntire,
    PathPartial,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Smint => "smint",
            Method::Additive => "additive",
            Method::PathEntire => "path-entire",
            Method::PathPartial => "path-partial",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "smint" => Ok(Method::Smint),
            "additive" => Ok(Method::Additive),
            "path-entire" | "path-full" => Ok(Method::PathEntire),
            "path-partial" => Ok(Method::PathPartial),
            _ => Err(Error::InvalidParam(format!("unknown method {s:?}"))),
        }
    }

    pub const ALL: [Method; 4] =
        [Method::Smint, Method::Additive, Method::PathEntire, Method::PathPartial];
}

/// How a study picks its (intervention, response) pairs among those with a
/// directed path in the generating DAG.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairRule {
    /// Every ordered pair connected by a directed path.
    AllDirected,
    /// A random subset of them, drawn with the replication seed.
    RandomDirected(usize),
}

/// Perturbation distance per replication: a fixed even edit count, or a
/// multiple of the generating DAG's edge count (rounded down to even).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerturbLevel {
    Fixed(usize),
    EdgeMultiple(f64),
}

impl PerturbLevel {
    fn resolve(self, n_edges: usize) -> Result<usize> {
        let h = match self {
            PerturbLevel::Fixed(h) => h,
            PerturbLevel::EdgeMultiple(m) => {
                if !(m.is_finite() && m >= 0.0) {
                    return Err(Error::InvalidParam(format!("edge multiple {m} must be nonnegative")));
                }
                let raw = (m * n_edges as f64).floor() as usize;
                raw - raw % 2
            }
        };
        if h % 2 != 0 {
            return Err(Error::InvalidParam(format!("perturbation distance {h} must be even")));
        }
        Ok(h)
    }
}

#[derive(Debug, Clone)]
pub struct StudySpec {
    pub p: usize,
    pub n: usize,
    /// Probability of including each forward pair as an edge.
    pub pc: f64,
    pub mech: MechFamily,
    pub replications: usize,
    pub methods: Vec<Method>,
    pub pair_rule: PairRule,
    /// Perturbation distances; empty means estimation uses the true DAG.
    pub perturb: Vec<PerturbLevel>,
    /// Oracle Monte-Carlo replications per reference curve; default `5n`.
    pub oracle_b: Option<usize>,
    /// Replications per path-method curve; default 1000.
    pub path_b: Option<usize>,
    pub seed: u64,
}

impl StudySpec {
    fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::InvalidParam("need at least two nodes".into()));
        }
        if self.n < 10 {
            return Err(Error::InvalidParam("need at least ten observations".into()));
        }
        if self.replications == 0 {
            return Err(Error::InvalidParam("need at least one replication".into()));
        }
        if !(0.0..=1.0).contains(&self.pc) {
            return Err(Error::InvalidParam(format!("edge probability {} outside [0, 1]", self.pc)));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParam("no methods requested".into()));
        }
        if let PairRule::RandomDirected(0) = self.pair_rule {
            return Err(Error::InvalidParam("pair subset size must be positive".into()));
        }
        Ok(())
    }
}

/// One method evaluation on one replication.
#[derive(Debug, Clone, Serialize)]
pub struct StudyRow {
    pub replication: usize,
    /// Perturbation distance, absent for known-DAG studies.
    pub h: Option<usize>,
    pub method: String,
    pub pairs: usize,
    pub error: f64,
    pub seconds: f64,
}

#[derive(Debug, Default)]
pub struct StudyResult {
    pub rows: Vec<StudyRow>,
    /// Replication-level failures, recorded instead of aborting the study.
    pub failures: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct StudySummary {
    pub method: String,
    pub h: Option<usize>,
    pub runs: usize,
    pub median_error: f64,
    pub q1_error: f64,
    pub q3_error: f64,
    pub median_seconds: f64,
}

impl StudyResult {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for row in &self.rows {
            wtr.serialize(row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Per-(method, h) medians and quartiles.
    pub fn summaries(&self) -> Vec<StudySummary> {
        let mut keys: Vec<(String, Option<usize>)> = Vec::new();
        for row in &self.rows {
            let key = (row.method.clone(), row.h);
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
        keys.into_iter()
            .map(|(method, h)| {
                let errs: Vec<f64> = self
                    .rows
                    .iter()
                    .filter(|r| r.method == method && r.h == h)
                    .map(|r| r.error)
                    .collect();
                let secs: Vec<f64> = self
                    .rows
                    .iter()
                    .filter(|r| r.method == method && r.h == h)
                    .map(|r| r.seconds)
                    .collect();
                StudySummary {
                    method,
                    h,
                    runs: errs.len(),
                    median_error: quantile(&errs, 0.5).unwrap(),
                    q1_error: quantile(&errs, 0.25).unwrap(),
                    q3_error: quantile(&errs, 0.75).unwrap(),
                    median_seconds: quantile(&secs, 0.5).unwrap(),
                }
            })
            .collect()
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "rows": self.rows.len(),
            "failures": self.failures,
            "summaries": self.summaries(),
        })
    }

    pub fn median_error(&self, method: Method, h: Option<usize>) -> Option<f64> {
        self.summaries()
            .into_iter()
            .find(|s| s.method == method.label() && s.h == h)
            .map(|s| s.median_error)
    }
}

/// Ordered pairs with a directed path, lexicographic.
fn directed_pairs(dag: &Dag) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for x in 0..dag.p() {
        for y in dag.descendants(x).unwrap() {
            pairs.push((x, y));
        }
    }
    pairs.sort_unstable();
    pairs
}

fn select_pairs(dag: &Dag, rule: PairRule, seed: u64) -> Vec<(usize, usize)> {
    let mut pairs = directed_pairs(dag);
    if let PairRule::RandomDirected(k) = rule {
        if k < pairs.len() {
            let mut rng = rng2(seed, 0x7061_6972);
            pairs.shuffle(&mut rng);
            pairs.truncate(k);
            pairs.sort_unstable();
        }
    }
    pairs
}

/// Runs one method over the pairs against the fixed per-pair grids,
/// estimating with `est_dag` (which may differ from the generating DAG).
#[allow(clippy::too_many_arguments)]
fn run_method(
    method: Method,
    data: &Dataset,
    est_dag: &Dag,
    pairs: &[(usize, usize)],
    grids: &[Vec<f64>],
    fitted: &mut Option<(FittedSem, f64)>,
    path_b: usize,
    seed: u64,
) -> Result<(Vec<EffectCurve>, f64)> {
    let start = Instant::now();
    let mut curves = Vec::with_capacity(pairs.len());
    match method {
        Method::Smint | Method::Additive => {
            for (i, &(x, y)) in pairs.iter().enumerate() {
                let mut s = AdjustmentSet::parents_of(est_dag, x)?;
                if s.contains(y) {
                    log::warn!("estimation DAG lists the response {y} as a parent of {x}; dropping it");
                    s = s.without(y);
                }
                let cfg = SmintConfig::default();
                let curve = match method {
                    Method::Smint => smint_estimate(data, x, y, &s, Some(&grids[i]), &cfg)?.curve,
                    _ => additive_effect(data, x, y, &s, Some(&grids[i]), &cfg)?,
                };
                curves.push(curve);
            }
            Ok((curves, start.elapsed().as_secs_f64()))
        }
        Method::PathEntire | Method::PathPartial => {
            if fitted.is_none() {
                let t = Instant::now();
                let f = fit_sem(data, est_dag)?;
                *fitted = Some((f, t.elapsed().as_secs_f64()));
            }
            let (f, fit_secs) = fitted.as_ref().unwrap();
            let start = Instant::now();
            for (i, &(x, y)) in pairs.iter().enumerate() {
                let cfg = PathSimConfig { b: path_b, seed: mix2(seed, i as u64), ..Default::default() };
                let effect = match method {
                    Method::PathEntire => entire_path_effect(f, x, y, &grids[i], &cfg)?,
                    _ => partial_path_effect(f, x, y, &grids[i], &cfg)?,
                };
                curves.push(effect.curve);
            }
            // Each path method is charged as if it had fitted the model
            // itself.
            Ok((curves, fit_secs + start.elapsed().as_secs_f64()))
        }
    }
}

fn replication_inputs(spec: &StudySpec, rep: usize) -> Result<(Sem, Dataset)> {
    let rep_seed = mix2(spec.seed, rep as u64);
    let dag = random_dag(spec.p, spec.pc, mix2(rep_seed, 1))?;
    let sem = spec.mech.build(&dag, mix2(rep_seed, 2))?;
    let data = simulate(&sem, spec.n, mix2(rep_seed, 3))?;
    Ok((sem, data))
}

fn reference_curves(
    spec: &StudySpec,
    sem: &Sem,
    data: &Dataset,
    pairs: &[(usize, usize)],
    rep_seed: u64,
) -> Result<(Vec<Vec<f64>>, Vec<EffectCurve>)> {
    let oracle_b = spec.oracle_b.unwrap_or(5 * spec.n);
    let mut grids = Vec::with_capacity(pairs.len());
    let mut refs = Vec::with_capacity(pairs.len());
    for (i, &(x, y)) in pairs.iter().enumerate() {
        let grid = deciles(data.col(x))?;
        refs.push(oracle_effect(sem, x, y, &grid, oracle_b, mix3(rep_seed, 5, i as u64))?);
        grids.push(grid);
    }
    Ok((grids, refs))
}

/// Folds per-replication outcomes into a result in replication order, so
/// parallel and sequential execution produce identical tables.
fn collect_rows(outcomes: Vec<(usize, Result<Vec<StudyRow>>)>) -> StudyResult {
    let mut out = StudyResult::default();
    for (rep, outcome) in outcomes {
        match outcome {
            Ok(rows) => out.rows.extend(rows),
            Err(e) => {
                log::warn!("replication {rep} failed: {e}");
                out.failures.push(format!("replication {rep}: {e}"));
            }
        }
    }
    out
}

/// Method comparison with the generating DAG given to every estimator:
/// per replication, a fresh random SEM, oracle references at the nine
/// deciles per pair, and one `e(D)` + wall-time row per method.
pub fn known_dag_study(spec: &StudySpec) -> Result<StudyResult> {
    spec.validate()?;
    let outcomes: Vec<(usize, Result<Vec<StudyRow>>)> = (0..spec.replications)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = mix2(spec.seed, rep as u64);
            let run = || -> Result<Vec<StudyRow>> {
                let (sem, data) = replication_inputs(spec, rep)?;
                let pairs = select_pairs(sem.dag(), spec.pair_rule, mix2(rep_seed, 4));
                if pairs.is_empty() {
                    return Err(Error::InvalidParam("no directed pairs in this replication".into()));
                }
                let (grids, refs) = reference_curves(spec, &sem, &data, &pairs, rep_seed)?;
                let mut fitted = None;
                let mut rows = Vec::new();
                for &method in &spec.methods {
                    // Distance 0: estimation uses the generating DAG itself.
                    let (curves, seconds) = run_method(
                        method,
                        &data,
                        sem.dag(),
                        &pairs,
                        &grids,
                        &mut fitted,
                        spec.path_b.unwrap_or(1000),
                        mix3(rep_seed, 7, 0),
                    )?;
                    rows.push(StudyRow {
                        replication: rep,
                        h: None,
                        method: method.label().into(),
                        pairs: pairs.len(),
                        error: relative_squared_error(&curves, &refs)?,
                        seconds,
                    });
                }
                Ok(rows)
            };
            (rep, run())
        })
        .collect();
    Ok(collect_rows(outcomes))
}

/// Method comparison under DAG misspecification: estimators receive a
/// perturbed DAG at each structural Hamming distance while references come
/// from the true mechanisms.
pub fn perturbed_dag_study(spec: &StudySpec) -> Result<StudyResult> {
    spec.validate()?;
    if spec.perturb.is_empty() {
        return Err(Error::InvalidParam("no perturbation distances given".into()));
    }
    let outcomes: Vec<(usize, Result<Vec<StudyRow>>)> = (0..spec.replications)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = mix2(spec.seed, rep as u64);
            let run = || -> Result<Vec<StudyRow>> {
                let (sem, data) = replication_inputs(spec, rep)?;
                let pairs = select_pairs(sem.dag(), spec.pair_rule, mix2(rep_seed, 4));
                if pairs.is_empty() {
                    return Err(Error::InvalidParam("no directed pairs in this replication".into()));
                }
                let (grids, refs) = reference_curves(spec, &sem, &data, &pairs, rep_seed)?;
                let mut rows = Vec::new();
                for &level in &spec.perturb {
                    let h = level.resolve(sem.dag().n_edges())?;
                    let est_dag = perturb_dag(sem.dag(), h, mix3(rep_seed, 6, h as u64))?;
                    let mut fitted = None;
                    for &method in &spec.methods {
                        let (curves, seconds) = run_method(
                            method,
                            &data,
                            &est_dag,
                            &pairs,
                            &grids,
                            &mut fitted,
                            spec.path_b.unwrap_or(1000),
                            mix3(rep_seed, 7, h as u64),
                        )?;
                        rows.push(StudyRow {
                            replication: rep,
                            h: Some(h),
                            method: method.label().into(),
                            pairs: pairs.len(),
                            error: relative_squared_error(&curves, &refs)?,
                            seconds,
                        });
                    }
                }
                Ok(rows)
            };
            (rep, run())
        })
        .collect();
    Ok(collect_rows(outcomes))
}

/// One method's error against the oracle on a preset model.
#[derive(Debug, Clone, Serialize)]
pub struct PresetRow {
    pub seed: u64,
    pub method: String,
    pub error: f64,
    pub seconds: f64,
}

/// Intervention-on-`X1` contrast on the `nonadd` preset: marginal
/// integration with the empty adjustment set against the entire-path
/// method built on additive fits. The grid is `grid_points` equally
/// spaced values over the central range of the observed `X1`.
pub fn nonadd_misspec_experiment(n: usize, grid_points: usize, seed: u64) -> Result<Vec<PresetRow>> {
    let sem = crate::sem::preset_sem("nonadd")?;
    let data = simulate(&sem, n, mix2(seed, 1))?;
    let (x, y) = (0, 3);
    let grid = central_grid(data.col(x), grid_points)?;
    let oracle = oracle_effect(&sem, x, y, &grid, 5 * n, mix2(seed, 2))?;
    let mut rows = Vec::new();

    let t = Instant::now();
    let fit = smint_estimate(&data, x, y, &AdjustmentSet::empty(), Some(&grid), &SmintConfig::default())?;
    rows.push(PresetRow {
        seed,
        method: Method::Smint.label().into(),
        error: relative_squared_error(&[fit.curve], &[oracle.clone()])?,
        seconds: t.elapsed().as_secs_f64(),
    });

    let t = Instant::now();
    let fitted = fit_sem(&data, sem.dag())?;
    let cfg = PathSimConfig { seed: mix2(seed, 3), ..Default::default() };
    let effect = entire_path_effect(&fitted, x, y, &grid, &cfg)?;
    rows.push(PresetRow {
        seed,
        method: Method::PathEntire.label().into(),
        error: relative_squared_error(&[effect.curve], &[oracle])?,
        seconds: t.elapsed().as_secs_f64(),
    });
    Ok(rows)
}

/// Boosting payoff on the `interaction` preset: squared error against the
/// oracle for the boosted curve and for its additive start, intervening on
/// `X3` with adjustment set `{X1, X2}` at the deciles of `X3`.
#[derive(Debug, Clone, Serialize)]
pub struct InteractionRow {
    pub seed: u64,
    pub ise_boosted: f64,
    pub ise_additive: f64,
    pub iterations: u32,
    pub stop: String,
}

pub fn interaction_boost_experiment(n: usize, seed: u64) -> Result<InteractionRow> {
    let sem = crate::sem::preset_sem("interaction")?;
    let data = simulate(&sem, n, mix2(seed, 1))?;
    let (x, y) = (2, 3);
    let grid = deciles(data.col(x))?;
    let oracle = oracle_effect(&sem, x, y, &grid, 5 * n, mix2(seed, 2))?;
    let s = AdjustmentSet::explicit([0, 1]);
    let fit = smint_estimate(&data, x, y, &s, Some(&grid), &SmintConfig::default())?;
    Ok(InteractionRow {
        seed,
        ise_boosted: mean_squared_deviation(&fit.curve, &oracle)?,
        ise_additive: mean_squared_deviation(&fit.additive_curve, &oracle)?,
        iterations: fit.iterations,
        stop: fit.stop.label().into(),
    })
}

/// Structure available for ranking: a DAG (parents become adjustment sets)
/// or a causal order (nearest predecessors do).
#[derive(Debug, Clone)]
pub enum StructureSpec {
    Dag(Dag),
    Order(Vec<usize>),
}

#[derive(Debug, Clone)]
pub struct RankConfig {
    pub runs: usize,
    pub keep_top: usize,
    pub threshold: f64,
    /// Adjustment-set size cap for order supersets.
    pub p_max: usize,
    pub seed: u64,
}

impl Default for RankConfig {
    fn default() -> Self {
        RankConfig { runs: 100, keep_top: 30, threshold: 0.66, p_max: 3, seed: 0 }
    }
}

/// A pair that survived stability selection.
#[derive(Debug, Clone, Serialize)]
pub struct RankedEffect {
    pub from: usize,
    pub to: usize,
    /// Mean relative causal strength over the runs that scored the pair.
    pub strength: f64,
    /// Fraction of runs ranking the pair among the top `keep_top`.
    pub frequency: f64,
}

fn eligible_pairs(data: &Dataset, structure: &StructureSpec, p_max: usize) -> Result<Vec<((usize, usize), AdjustmentSet)>> {
    let p = data.p();
    let mut out = Vec::new();
    match structure {
        StructureSpec::Dag(dag) => {
            if dag.p() != p {
                return Err(Error::ShapeMismatch(format!(
                    "{} graph nodes for {p} columns",
                    dag.p()
                )));
            }
            for k in 0..p {
                let ancestors = dag.ancestors(k)?;
                let s = AdjustmentSet::parents_of(dag, k)?;
                for j in 0..p {
                    if j == k || ancestors.binary_search(&j).is_ok() {
                        continue;
                    }
                    let s_kj = if s.contains(j) {
                        log::warn!("target {j} is a listed parent of {k}; dropping it from the adjustment set");
                        s.without(j)
                    } else {
                        s.clone()
                    };
                    out.push(((k, j), s_kj));
                }
            }
        }
        StructureSpec::Order(order) => {
            if order.len() != p {
                return Err(Error::InvalidOrder(format!(
                    "order lists {} nodes for {p} columns",
                    order.len()
                )));
            }
            for (pos_k, &k) in order.iter().enumerate() {
                let s = order_superset(order, k, p_max)?;
                for &j in &order[pos_k + 1..] {
                    out.push(((k, j), s.clone()));
                }
            }
        }
    }
    out.sort_by_key(|&((k, j), _)| (k, j));
    Ok(out)
}

/// Stability selection over causal strengths: rank all eligible ordered
/// pairs on each half-subsample, keep the top `keep_top`, and return the
/// pairs kept in at least `threshold` of the runs.
pub fn stability_select(
    data: &Dataset,
    structure: &StructureSpec,
    rc: &RankConfig,
) -> Result<Vec<RankedEffect>> {
    if rc.runs == 0 {
        return Err(Error::InvalidParam("need at least one subsample run".into()));
    }
    if !(rc.threshold > 0.0 && rc.threshold <= 1.0) {
        return Err(Error::InvalidParam(format!(
            "selection threshold {} outside (0, 1]",
            rc.threshold
        )));
    }
    let pairs = eligible_pairs(data, structure, rc.p_max)?;
    if rc.keep_top == 0 || rc.keep_top > pairs.len() {
        return Err(Error::InvalidParam(format!(
            "keep_top {} outside 1..={} eligible pairs",
            rc.keep_top,
            pairs.len()
        )));
    }
    let n = data.n();
    let half = n / 2;
    if half < 10 {
        return Err(Error::InvalidParam("subsamples would have fewer than 10 rows".into()));
    }
    let mut hits = vec![0usize; pairs.len()];
    let mut strength_sum = vec![0.0f64; pairs.len()];
    let mut strength_runs = vec![0usize; pairs.len()];
    let cfg = SmintConfig::default();
    for run in 0..rc.runs {
        let mut rng = rng2(rc.seed, run as u64);
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..half {
            let j = rng.random_range(i..n);
            idx.swap(i, j);
        }
        let mut rows = idx[..half].to_vec();
        rows.sort_unstable();
        let sub = data.subset_rows(&rows)?;
        let mut scored: Vec<(usize, f64)> = Vec::with_capacity(pairs.len());
        for (pi, ((k, j), s)) in pairs.iter().enumerate() {
            let strength = (|| -> Result<f64> {
                let grid = deciles(sub.col(*k))?;
                let range = grid[8] - grid[0];
                let fit = smint_estimate(&sub, *k, *j, s, Some(&grid), &cfg)?;
                causal_strength(mean(sub.col(*j)), &fit.curve, range, std_dev(sub.col(*j)))
            })();
            match strength {
                Ok(v) => {
                    scored.push((pi, v));
                    strength_sum[pi] += v;
                    strength_runs[pi] += 1;
                }
                Err(e) => {
                    log::warn!("run {run}: pair ({k}, {j}) skipped: {e}");
                }
            }
        }
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        for &(pi, _) in scored.iter().take(rc.keep_top) {
            hits[pi] += 1;
        }
    }
    let mut selected: Vec<RankedEffect> = pairs
        .iter()
        .enumerate()
        .filter_map(|(pi, ((k, j), _))| {
            let frequency = hits[pi] as f64 / rc.runs as f64;
            if frequency >= rc.threshold && strength_runs[pi] > 0 {
                Some(RankedEffect {
                    from: *k,
                    to: *j,
                    strength: strength_sum[pi] / strength_runs[pi] as f64,
                    frequency,
                })
            } else {
                None
            }
        })
        .collect();
    selected.sort_by(|a, b| {
        b.frequency
            .partial_cmp(&a.frequency)
            .unwrap()
            .then(b.strength.partial_cmp(&a.strength).unwrap())
            .then((a.from, a.to).cmp(&(b.from, b.to)))
    });
    Ok(selected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::CurveMeta;
    use crate::seed::rng3;
    use rand_distr::{Distribution, StandardNormal};

    fn curve(grid: &[f64], values: &[f64]) -> EffectCurve {
        EffectCurve::new(grid.to_vec(), values.to_vec(), CurveMeta::default()).unwrap()
    }

    #[test]
    fn relative_squared_error_matches_the_formula() {
        let grid: Vec<f64> = (1..=9).map(f64::from).collect();
        let refs = vec![curve(&grid, &[1.0, 2.0, 3.0, 4.0, 5.0, 4.0, 3.0, 2.0, 1.0])];
        assert_eq!(relative_squared_error(&refs.clone(), &refs).unwrap(), 0.0);
        let zeros = vec![curve(&grid, &[0.0; 9])];
        assert!((relative_squared_error(&zeros, &refs).unwrap() - 1.0).abs() < 1e-15);
        let delta: Vec<f64> = refs[0].values().iter().map(|v| v + 0.5).collect();
        let shifted = vec![curve(&grid, &delta)];
        let den: f64 = refs[0].values().iter().map(|v| v * v).sum();
        let want = 9.0 * 0.25 / den;
        assert!((relative_squared_error(&shifted, &refs).unwrap() - want).abs() < 1e-15);
        // Scale invariance under a common factor.
        let scale = |c: &EffectCurve, f: f64| {
            curve(c.grid(), &c.values().iter().map(|v| v * f).collect::<Vec<_>>())
        };
        let a = relative_squared_error(&shifted, &refs).unwrap();
        let b = relative_squared_error(
            &[scale(&shifted[0], 3.0)],
            &[scale(&refs[0], 3.0)],
        )
        .unwrap();
        assert!((a - b).abs() < 1e-14);
        assert!(relative_squared_error(&refs, &zeros).is_err());
        let other_grid: Vec<f64> = (2..=10).map(f64::from).collect();
        let mismatched = vec![curve(&other_grid, refs[0].values())];
        assert!(relative_squared_error(&mismatched, &refs).is_err());
    }

    #[test]
    fn causal_strength_matches_the_formula_and_guards() {
        let grid: Vec<f64> = (1..=9).map(f64::from).collect();
        let m = 2.0;
        let flat = curve(&grid, &[m; 9]);
        assert_eq!(causal_strength(m, &flat, 8.0, 1.0).unwrap(), 0.0);
        let bumped = curve(&grid, &[m + 0.4; 9]);
        let want = 9.0 * 0.4 / (8.0 * m);
        assert!((causal_strength(m, &bumped, 8.0, 1.0).unwrap() - want).abs() < 1e-12);
        // Reordering the deviations leaves the sum unchanged.
        let vals = [2.1, 1.7, 2.9, 2.0, 1.2, 2.5, 2.2, 1.9, 2.6];
        let mut rev = vals;
        rev.reverse();
        let a = causal_strength(m, &curve(&grid, &vals), 8.0, 1.0).unwrap();
        let b = causal_strength(m, &curve(&grid, &rev), 8.0, 1.0).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!(causal_strength(m, &flat, 0.0, 1.0).is_err());
        assert!(matches!(
            causal_strength(1e-12, &flat, 8.0, 1.0),
            Err(Error::NumericGuard(_))
        ));
    }

    #[test]
    fn central_grid_spans_the_inner_deciles() {
        let xs: Vec<f64> = (1..=10).map(f64::from).collect();
        let grid = central_grid(&xs, 51).unwrap();
        assert_eq!(grid.len(), 51);
        assert!((grid[0] - 1.9).abs() < 1e-12);
        assert!((grid[50] - 9.1).abs() < 1e-12);
        assert!(grid.windows(2).all(|w| w[1] > w[0]));
        assert!(central_grid(&xs, 1).is_err());
        assert!(central_grid(&[5.0; 20], 3).is_err());
    }

    #[test]
    fn mean_squared_deviation_is_the_mean_of_squared_gaps() {
        let grid: Vec<f64> = (1..=9).map(f64::from).collect();
        let a = curve(&grid, &[1.0; 9]);
        let mut vals = [1.0; 9];
        vals[4] = 4.0;
        let b = curve(&grid, &vals);
        assert_eq!(mean_squared_deviation(&a, &a).unwrap(), 0.0);
        assert!((mean_squared_deviation(&a, &b).unwrap() - 1.0).abs() < 1e-15);
        let other: Vec<f64> = (2..=10).map(f64::from).collect();
        assert!(mean_squared_deviation(&a, &curve(&other, &vals)).is_err());
    }

    #[test]
    fn nonadd_experiment_separates_the_methods_even_at_small_n() {
        let rows = nonadd_misspec_experiment(400, 11, 21).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].method, "smint");
        assert_eq!(rows[1].method, "path-entire");
        // The additive-SEM path method carries a structural bias here (the
        // first mechanism is strongly non-additive), so marginal
        // integration must come out ahead.
        assert!(rows[0].error < rows[1].error, "{} vs {}", rows[0].error, rows[1].error);
        assert!(rows[0].error < 0.1, "marginal integration error {}", rows[0].error);
    }

    #[test]
    fn interaction_experiment_reports_both_errors() {
        let row = interaction_boost_experiment(500, 4).unwrap();
        assert!(row.ise_boosted.is_finite() && row.ise_additive.is_finite());
        assert!(row.iterations >= 1);
        assert!(!row.stop.is_empty());
        assert!(row.ise_boosted < row.ise_additive, "{} vs {}", row.ise_boosted, row.ise_additive);
    }

    #[test]
    fn perturb_levels_resolve_to_even_distances() {
        assert_eq!(PerturbLevel::Fixed(4).resolve(10).unwrap(), 4);
        assert!(PerturbLevel::Fixed(3).resolve(10).is_err());
        assert_eq!(PerturbLevel::EdgeMultiple(1.0).resolve(10).unwrap(), 10);
        assert_eq!(PerturbLevel::EdgeMultiple(1.0).resolve(11).unwrap(), 10);
        assert_eq!(PerturbLevel::EdgeMultiple(0.5).resolve(10).unwrap(), 4);
        assert!(PerturbLevel::EdgeMultiple(-1.0).resolve(10).is_err());
    }

    fn base_spec() -> StudySpec {
        StudySpec {
            p: 2,
            n: 2000,
            pc: 1.0,
            mech: MechFamily::Sigmoid,
            replications: 1,
            methods: Method::ALL.to_vec(),
            pair_rule: PairRule::AllDirected,
            perturb: Vec::new(),
            oracle_b: Some(8000),
            path_b: Some(500),
            seed: 11,
        }
    }

    #[test]
    fn single_edge_study_fits_well_for_every_method() {
        let result = known_dag_study(&base_spec()).unwrap();
        assert!(result.failures.is_empty(), "{:?}", result.failures);
        assert_eq!(result.rows.len(), 4);
        for row in &result.rows {
            assert!(row.error < 0.1, "{} error {}", row.method, row.error);
            assert!(row.seconds > 0.0);
            assert_eq!(row.pairs, 1);
        }
        // Summaries carry one entry per method.
        assert_eq!(result.summaries().len(), 4);
    }

    #[test]
    fn perturbed_study_runs_all_levels_and_honors_h_zero() {
        let spec = StudySpec {
            p: 6,
            n: 300,
            pc: 0.4,
            replications: 2,
            methods: vec![Method::Smint, Method::PathPartial],
            pair_rule: PairRule::RandomDirected(3),
            perturb: vec![PerturbLevel::Fixed(0), PerturbLevel::Fixed(4)],
            oracle_b: Some(2000),
            path_b: Some(300),
            seed: 5,
            ..base_spec()
        };
        let known = known_dag_study(&StudySpec { perturb: Vec::new(), ..spec.clone() }).unwrap();
        let perturbed = perturbed_dag_study(&spec).unwrap();
        assert!(perturbed.failures.is_empty(), "{:?}", perturbed.failures);
        // Two replications, two levels, two methods.
        assert_eq!(perturbed.rows.len(), 8);
        // At h = 0 the perturbed study reduces to the known-DAG study.
        for row in perturbed.rows.iter().filter(|r| r.h == Some(0)) {
            let twin = known
                .rows
                .iter()
                .find(|k| k.replication == row.replication && k.method == row.method)
                .unwrap();
            assert_eq!(row.error, twin.error, "{} at rep {}", row.method, row.replication);
        }
        assert!(perturbed.rows.iter().any(|r| r.h == Some(4)));
        let mut buf = Vec::new();
        perturbed.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("replication,h,method,pairs,error,seconds"));
        assert_eq!(text.lines().count(), 9);
        assert!(perturbed.summary_json()["summaries"].as_array().unwrap().len() == 4);
    }

    fn planted_effect_data(n: usize, seed: u64) -> (Dataset, Dag) {
        // Strong planted effect 0 -> 3; columns 1 and 2 are noise.
        let dag = Dag::new(4, &[(0, 3)]).unwrap();
        let mut rng = rng3(seed, 0, 0);
        let mut cols: Vec<Vec<f64>> = (0..4).map(|_| Vec::with_capacity(n)).collect();
        for _ in 0..n {
            let x: f64 = StandardNormal.sample(&mut rng);
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            let e: f64 = StandardNormal.sample(&mut rng);
            cols[0].push(x + 2.0);
            cols[1].push(z1 + 2.0);
            cols[2].push(z2 + 2.0);
            cols[3].push(3.0 * (x + 2.0) + 0.3 * e);
        }
        let names = (0..4).map(|j| format!("X{j}")).collect();
        (Dataset::new(names, cols).unwrap(), dag)
    }

    #[test]
    fn stability_selection_finds_a_planted_effect_across_seeds() {
        let (data, dag) = planted_effect_data(300, 3);
        let rc = RankConfig { runs: 30, keep_top: 2, threshold: 0.9, seed: 1, ..Default::default() };
        let a = stability_select(&data, &StructureSpec::Dag(dag.clone()), &rc).unwrap();
        let b = stability_select(
            &data,
            &StructureSpec::Dag(dag),
            &RankConfig { seed: 99, ..rc },
        )
        .unwrap();
        for sel in [&a, &b] {
            assert!(!sel.is_empty());
            assert_eq!((sel[0].from, sel[0].to), (0, 3), "top pair {:?}", (sel[0].from, sel[0].to));
            assert!(sel[0].frequency >= 0.9);
            assert!(sel[0].strength > 0.0);
        }
    }

    #[test]
    fn stability_selection_with_one_run_keeps_exactly_the_top_q() {
        let (data, _) = planted_effect_data(200, 7);
        let order = vec![0usize, 1, 2, 3];
        let rc = RankConfig { runs: 1, keep_top: 3, threshold: 1.0, seed: 2, ..Default::default() };
        let sel = stability_select(&data, &StructureSpec::Order(order), &rc).unwrap();
        assert_eq!(sel.len(), 3);
        assert!(sel.iter().all(|r| r.frequency == 1.0));
        assert_eq!((sel[0].from, sel[0].to), (0, 3));
    }

    #[test]
    fn stability_selection_rejects_bad_configs() {
        let (data, dag) = planted_effect_data(100, 9);
        let structure = StructureSpec::Dag(dag);
        let rc = RankConfig { keep_top: 500, ..Default::default() };
        assert!(stability_select(&data, &structure, &rc).is_err());
        let rc = RankConfig { threshold: 1.5, ..Default::default() };
        assert!(stability_select(&data, &structure, &rc).is_err());
        let rc = RankConfig { runs: 0, ..Default::default() };
        assert!(stability_select(&data, &structure, &rc).is_err());
    }

    #[test]
    fn order_mode_restricts_to_forward_pairs() {
        let (data, _) = planted_effect_data(100, 13);
        let pairs = eligible_pairs(&data, &StructureSpec::Order(vec![3, 2, 1, 0]), 2).unwrap();
        // 6 forward pairs under the reversed order.
        assert_eq!(pairs.len(), 6);
        for ((k, j), s) in &pairs {
            assert!(!s.contains(*j), "adjustment for ({k}, {j}) contains the target");
        }
        let dag_pairs =
            eligible_pairs(&data, &StructureSpec::Dag(Dag::new(4, &[]).unwrap()), 2).unwrap();
        assert_eq!(dag_pairs.len(), 12);
    }
}
