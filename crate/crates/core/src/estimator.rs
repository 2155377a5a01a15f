//! Marginal-integration estimation of intervention effects: an additive
//! start, locally constant L2-boosting of its residuals, and averaging the
//! fitted surface over the adjustment variables' empirical distribution.
//!
//! For adjustment set `S` the target is `E[t(Y) | do(X = v)] =
//! E[m(v, X_S)]` with `m(x, x_S) = E[t(Y) | X = x, X_S = x_S]`, estimated by
//! `n^-1 sum_k m_hat(v, X_S^(k))`. With empty `S` the whole pipeline
//! collapses to the univariate smoother fit of `t(Y)` on `X`.

use crate::curve::{CurveMeta, EffectCurve};
use crate::data::{deciles, mean, Dataset};
use crate::error::{Error, Result};
use crate::graph::{order_superset, AdjustmentSet};
use crate::smoothers::{
    fit_additive, inv_2h2, rule_bandwidth, AdditiveConfig, AdditiveModel, KernelSpec,
};

/// Response transformation applied before fitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transform {
    Identity,
    /// Second moments: the curve estimates `E[Y^2 | do(X = v)]`.
    Square,
    /// Distribution function: the curve estimates `P[Y <= c | do(X = v)]`.
    Indicator(f64),
}

impl Transform {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Transform::Identity => v,
            Transform::Square => v * v,
            Transform::Indicator(c) => {
                if v <= c {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Metadata label; identity is left implicit.
    pub fn label(self) -> Option<String> {
        match self {
            Transform::Identity => None,
            Transform::Square => Some("square".into()),
            Transform::Indicator(c) => Some(format!("indicator:{c}")),
        }
    }

    /// Parses "identity", "square", or "indicator:<c>".
    pub fn parse(s: &str) -> Result<Transform> {
        match s {
            "identity" => Ok(Transform::Identity),
            "square" => Ok(Transform::Square),
            _ => match s.strip_prefix("indicator:") {
                Some(c) => c
                    .parse::<f64>()
                    .ok()
                    .filter(|c| c.is_finite())
                    .map(Transform::Indicator)
                    .ok_or_else(|| {
                        Error::InvalidParam(format!("bad indicator threshold in {s:?}"))
                    }),
                None => Err(Error::InvalidParam(format!("unknown transform {s:?}"))),
            },
        }
    }
}

/// Why boosting ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Empty adjustment set: nothing to boost against.
    EmptyAdjustment,
    /// Rule 1: integrated increment below `stop_abs` of the response scale.
    AbsoluteThreshold,
    /// Rule 2: integrated increment below `stop_rel` of the first one.
    RelativeThreshold,
    MaxIterations,
}

impl StopReason {
    pub fn label(self) -> &'static str {
        match self {
            StopReason::EmptyAdjustment => "empty-adjustment",
            StopReason::AbsoluteThreshold => "abs-threshold",
            StopReason::RelativeThreshold => "rel-initial",
            StopReason::MaxIterations => "max-iterations",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SmintConfig {
    /// Bandwidth override; the rule `factor * std` applies per coordinate
    /// when absent.
    pub kernel: Option<KernelSpec>,
    pub bandwidth_factor: f64,
    pub b_max: u32,
    /// Rule 1 threshold, as a fraction of the response standard deviation.
    pub stop_abs: f64,
    /// Rule 2 threshold, as a fraction of the first integrated increment.
    pub stop_rel: f64,
    pub transform: Transform,
    pub max_sweeps: usize,
    pub tol: f64,
}

impl Default for SmintConfig {
    fn default() -> Self {
        SmintConfig {
            kernel: None,
            bandwidth_factor: crate::smoothers::BANDWIDTH_FACTOR,
            b_max: 20,
            stop_abs: 0.01,
            stop_rel: 0.05,
            transform: Transform::Identity,
            max_sweeps: 50,
            tol: 1e-6,
        }
    }
}

impl SmintConfig {
    fn validate(&self) -> Result<()> {
        if self.b_max < 1 {
            return Err(Error::InvalidParam("b_max must be at least 1".into()));
        }
        for (v, what) in [
            (self.stop_abs, "stop_abs"),
            (self.stop_rel, "stop_rel"),
            (self.bandwidth_factor, "bandwidth factor"),
            (self.tol, "tolerance"),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParam(format!("{what} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    fn additive(&self, bandwidths: Vec<f64>) -> AdditiveConfig {
        AdditiveConfig {
            bandwidths: Some(bandwidths),
            bandwidth_factor: self.bandwidth_factor,
            max_sweeps: self.max_sweeps,
            tol: self.tol,
        }
    }
}

/// A fitted marginal-integration estimate: the boosted curve, the curve of
/// the additive start alone, and the boosting trace.
#[derive(Debug, Clone)]
pub struct SmintFit {
    pub curve: EffectCurve,
    pub additive_curve: EffectCurve,
    /// Integrated absolute increment per boosting iteration.
    pub boost_diffs: Vec<f64>,
    pub iterations: u32,
    pub stop: StopReason,
}

/// Integrated absolute increment: the sum over grid points of the absolute
/// marginally integrated boosting step.
pub fn boost_diff(increments: &[f64]) -> f64 {
    increments.iter().map(|v| v.abs()).sum()
}

fn check_columns(data: &Dataset, x: usize, y: usize, s: &AdjustmentSet) -> Result<()> {
    let p = data.p();
    for node in [x, y] {
        if node >= p {
            return Err(Error::NodeOutOfRange { node, p });
        }
    }
    if x == y {
        return Err(Error::InvalidParam("intervention and response columns coincide".into()));
    }
    if s.contains(x) {
        return Err(Error::AdjustmentContains { node: x, role: "intervention" });
    }
    if s.contains(y) {
        return Err(Error::AdjustmentContains { node: y, role: "response" });
    }
    if let Some(node) = s.members().find(|&m| m >= p) {
        return Err(Error::NodeOutOfRange { node, p });
    }
    Ok(())
}

fn resolve_grid(xcol: &[f64], grid: Option<&[f64]>) -> Result<Vec<f64>> {
    let grid = match grid {
        Some(g) => g.to_vec(),
        None => deciles(xcol)?,
    };
    let lo = xcol.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = xcol.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if grid.iter().any(|&v| v < lo || v > hi) {
        log::warn!("grid extends outside the observed intervention range [{lo}, {hi}]");
    }
    Ok(grid)
}

/// Univariate smoother fit of `t(Y)` on `X` over the grid: the additive
/// pipeline with a single component and no integration step.
fn univariate_values(
    xcol: &[f64],
    z: &[f64],
    grid: &[f64],
    h1: f64,
    cfg: &SmintConfig,
) -> Result<(Vec<f64>, AdditiveModel)> {
    let model = fit_additive(z, &[xcol], &cfg.additive(vec![h1]))?;
    let mut vals = Vec::with_capacity(grid.len());
    for &v in grid {
        vals.push(model.intercept() + model.component(0).value(v)?);
    }
    Ok((vals, model))
}

fn resolve_h1(xcol: &[f64], cfg: &SmintConfig, s_dim: usize) -> Result<(f64, Vec<f64>)> {
    match &cfg.kernel {
        Some(ks) => {
            if ks.h2.len() != s_dim {
                return Err(Error::ShapeMismatch(format!(
                    "{} adjustment bandwidths for an adjustment set of size {s_dim}",
                    ks.h2.len()
                )));
            }
            Ok((ks.h1, ks.h2.clone()))
        }
        None => Ok((
            rule_bandwidth(xcol, cfg.bandwidth_factor, "intervention coordinate")?,
            Vec::new(),
        )),
    }
}

/// The univariate smoother fit of `t(Y)` on `X` as an effect curve. This is
/// what marginal integration reduces to when no adjustment is needed.
pub fn univariate_effect(
    data: &Dataset,
    x: usize,
    y: usize,
    grid: Option<&[f64]>,
    cfg: &SmintConfig,
) -> Result<EffectCurve> {
    cfg.validate()?;
    check_columns(data, x, y, &AdjustmentSet::empty())?;
    let xcol = data.col(x);
    let grid = resolve_grid(xcol, grid)?;
    let z: Vec<f64> = data.col(y).iter().map(|&v| cfg.transform.apply(v)).collect();
    let (h1, _) = resolve_h1(xcol, cfg, 0)?;
    let (vals, _) = univariate_values(xcol, &z, &grid, h1, cfg)?;
    EffectCurve::new(
        grid,
        vals,
        CurveMeta {
            method: "univariate".into(),
            x: data.name(x).into(),
            y: data.name(y).into(),
            transform: cfg.transform.label(),
            ..CurveMeta::default()
        },
    )
}

/// The additive start with its bandwidths and fit, shared by the plain
/// additive method and the boosted estimate.
struct AdditiveStart {
    grid: Vec<f64>,
    z: Vec<f64>,
    members: Vec<usize>,
    h1: f64,
    h2: Vec<f64>,
    add_vals: Vec<f64>,
    model: AdditiveModel,
}

fn additive_start(
    data: &Dataset,
    x: usize,
    y: usize,
    s: &AdjustmentSet,
    grid: Option<&[f64]>,
    cfg: &SmintConfig,
) -> Result<AdditiveStart> {
    let xcol = data.col(x);
    let grid = resolve_grid(xcol, grid)?;
    let z: Vec<f64> = data.col(y).iter().map(|&v| cfg.transform.apply(v)).collect();
    let members = s.to_vec();
    let scols: Vec<&[f64]> = members.iter().map(|&j| data.col(j)).collect();
    let (h1, mut h2) = resolve_h1(xcol, cfg, members.len())?;
    if cfg.kernel.is_none() {
        for (c, col) in scols.iter().enumerate() {
            h2.push(rule_bandwidth(col, cfg.bandwidth_factor, &format!("adjustment coordinate {c}"))?);
        }
    }
    let mut predictors = vec![xcol];
    predictors.extend(scols.iter().copied());
    let mut bandwidths = vec![h1];
    bandwidths.extend(h2.iter().copied());
    let model = fit_additive(&z, &predictors, &cfg.additive(bandwidths))?;

    // The additive surface integrates to intercept + m_x(v) + the mean of
    // each adjustment component over the sample (zero up to centering
    // roundoff, carried along for honesty).
    let center_shift: f64 = (1..predictors.len()).map(|l| mean(model.component_fitted(l))).sum();
    let mut add_vals = Vec::with_capacity(grid.len());
    for &v in &grid {
        add_vals.push(model.intercept() + model.component(0).value(v)? + center_shift);
    }
    Ok(AdditiveStart { grid, z, members, h1, h2, add_vals, model })
}

fn base_meta(data: &Dataset, x: usize, y: usize, s: &AdjustmentSet, cfg: &SmintConfig) -> CurveMeta {
    CurveMeta {
        method: "smint".into(),
        x: data.name(x).into(),
        y: data.name(y).into(),
        adjustment: s.to_vec().iter().map(|&j| data.name(j).to_string()).collect(),
        transform: cfg.transform.label(),
        ..CurveMeta::default()
    }
}

/// The additive start alone: backfit of `t(Y)` on `(X, X_S)` and marginal
/// integration, with no boosting refinement.
pub fn additive_effect(
    data: &Dataset,
    x: usize,
    y: usize,
    s: &AdjustmentSet,
    grid: Option<&[f64]>,
    cfg: &SmintConfig,
) -> Result<EffectCurve> {
    cfg.validate()?;
    check_columns(data, x, y, s)?;
    let meta = CurveMeta { method: "additive".into(), ..base_meta(data, x, y, s, cfg) };
    if s.is_empty() {
        let xcol = data.col(x);
        let grid = resolve_grid(xcol, grid)?;
        let z: Vec<f64> = data.col(y).iter().map(|&v| cfg.transform.apply(v)).collect();
        let (h1, _) = resolve_h1(xcol, cfg, 0)?;
        let (vals, _) = univariate_values(xcol, &z, &grid, h1, cfg)?;
        return EffectCurve::new(grid, vals, meta);
    }
    let st = additive_start(data, x, y, s, grid, cfg)?;
    EffectCurve::new(st.grid, st.add_vals, meta)
}

/// Marginal-integration estimate of `E[t(Y) | do(X = v)]` over `grid`
/// (default: the nine deciles of `X`), adjusting for `s`.
pub fn smint_estimate(
    data: &Dataset,
    x: usize,
    y: usize,
    s: &AdjustmentSet,
    grid: Option<&[f64]>,
    cfg: &SmintConfig,
) -> Result<SmintFit> {
    cfg.validate()?;
    check_columns(data, x, y, s)?;
    let meta = base_meta(data, x, y, s, cfg);

    if s.is_empty() {
        let xcol = data.col(x);
        let grid = resolve_grid(xcol, grid)?;
        let z: Vec<f64> = data.col(y).iter().map(|&v| cfg.transform.apply(v)).collect();
        let (h1, _) = resolve_h1(xcol, cfg, 0)?;
        let (vals, _) = univariate_values(xcol, &z, &grid, h1, cfg)?;
        let meta = CurveMeta {
            iterations: Some(0),
            stop_rule: Some(StopReason::EmptyAdjustment.label().into()),
            ..meta
        };
        let curve = EffectCurve::new(grid, vals, meta)?;
        return Ok(SmintFit {
            additive_curve: curve.clone(),
            curve,
            boost_diffs: Vec::new(),
            iterations: 0,
            stop: StopReason::EmptyAdjustment,
        });
    }

    let st = additive_start(data, x, y, s, grid, cfg)?;
    let AdditiveStart { grid, z, members, h1, h2, add_vals, model } = st;
    let xcol = data.col(x);
    let scols: Vec<&[f64]> = members.iter().map(|&j| data.col(j)).collect();
    let additive_curve = EffectCurve::new(
        grid.clone(),
        add_vals.clone(),
        CurveMeta { method: "additive".into(), ..meta.clone() },
    )?;

    let mut resid: Vec<f64> = z.iter().zip(model.fitted()).map(|(&zi, &fi)| zi - fi).collect();
    let mut curve_vals = add_vals;
    let mut boost_diffs: Vec<f64> = Vec::new();
    let scale = model.response_std();
    let n = xcol.len();
    let g = grid.len();
    let inv1 = inv_2h2(h1);
    let inv2: Vec<f64> = h2.iter().map(|&h| inv_2h2(h)).collect();

    // Grid kernel in the intervention coordinate, reused every iteration.
    let mut a_mat = vec![0.0f64; g * n];
    for (v, &gv) in grid.iter().enumerate() {
        let row = &mut a_mat[v * n..(v + 1) * n];
        for (j, &xj) in xcol.iter().enumerate() {
            let d = xj - gv;
            row[j] = (-(d * d * inv1)).exp();
        }
    }
    // Denominators of the grid fits depend only on the data; filled once.
    let mut den_g = vec![0.0f64; g * n];
    let mut num_g = vec![0.0f64; g * n];
    let mut vrow = vec![0.0f64; n];
    let mut num_t = vec![0.0f64; n];
    let mut den_t = vec![0.0f64; n];
    let mut inc = vec![0.0f64; g];

    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;
    for b in 1..=cfg.b_max {
        let first = b == 1;
        num_g.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..n {
            for k in 0..n {
                let mut e = 0.0;
                for (col, &inv) in scols.iter().zip(&inv2) {
                    let d = col[j] - col[k];
                    e += d * d * inv;
                }
                vrow[k] = (-e).exp();
            }
            let rj = resid[j];
            for v in 0..g {
                let a = a_mat[v * n + j];
                let row = &mut num_g[v * n..(v + 1) * n];
                let avr = a * rj;
                for k in 0..n {
                    row[k] += avr * vrow[k];
                }
                if first {
                    let drow = &mut den_g[v * n..(v + 1) * n];
                    for k in 0..n {
                        drow[k] += a * vrow[k];
                    }
                }
            }
        }
        // Locally constant fit of the residuals at every training point.
        for i in 0..n {
            num_t[i] = resid[i];
            den_t[i] = 1.0;
        }
        for i in 0..n {
            let xi = xcol[i];
            for j in (i + 1)..n {
                let d = xcol[j] - xi;
                let mut e = d * d * inv1;
                for (col, &inv) in scols.iter().zip(&inv2) {
                    let d = col[j] - col[i];
                    e += d * d * inv;
                }
                let w = (-e).exp();
                num_t[i] += w * resid[j];
                num_t[j] += w * resid[i];
                den_t[i] += w;
                den_t[j] += w;
            }
        }
        // Marginally integrated increment at each grid value.
        for v in 0..g {
            let nrow = &num_g[v * n..(v + 1) * n];
            let drow = &den_g[v * n..(v + 1) * n];
            let mut acc = 0.0;
            for k in 0..n {
                if drow[k] <= 0.0 || !drow[k].is_finite() {
                    return Err(Error::ZeroKernelWeight { x: grid[v], index: k });
                }
                acc += nrow[k] / drow[k];
            }
            inc[v] = acc / n as f64;
        }
        let d = boost_diff(&inc);
        boost_diffs.push(d);
        for v in 0..g {
            curve_vals[v] += inc[v];
        }
        for i in 0..n {
            resid[i] -= num_t[i] / den_t[i];
        }
        iterations = b;
        if d <= cfg.stop_abs * scale {
            stop = StopReason::AbsoluteThreshold;
            break;
        }
        if d <= cfg.stop_rel * boost_diffs[0] {
            stop = StopReason::RelativeThreshold;
            break;
        }
    }

    let meta = CurveMeta {
        iterations: Some(iterations),
        stop_rule: Some(stop.label().into()),
        ..meta
    };
    Ok(SmintFit {
        curve: EffectCurve::new(grid, curve_vals, meta)?,
        additive_curve,
        boost_diffs,
        iterations,
        stop,
    })
}

/// Marginal integration with the adjustment set taken as the `p_max`
/// nearest predecessors of `x` in a causal order. The response is dropped
/// from the set if the order places it before `x`.
pub fn smint_with_order(
    data: &Dataset,
    x: usize,
    y: usize,
    order: &[usize],
    p_max: usize,
    grid: Option<&[f64]>,
    cfg: &SmintConfig,
) -> Result<SmintFit> {
    if order.len() != data.p() {
        return Err(Error::InvalidOrder(format!(
            "order lists {} nodes for {} columns",
            order.len(),
            data.p()
        )));
    }
    let mut s = order_superset(order, x, p_max)?;
    if s.contains(y) {
        log::warn!("response column {} appears among the predecessors of {}; dropping it", y, x);
        s = s.without(y);
    }
    smint_estimate(data, x, y, &s, grid, cfg)
}

/// Variance curve `Var(Y | do(X = v))` from two passes: second moments
/// minus the squared mean curve.
pub fn variance_effect(
    data: &Dataset,
    x: usize,
    y: usize,
    s: &AdjustmentSet,
    grid: Option<&[f64]>,
    cfg: &SmintConfig,
) -> Result<EffectCurve> {
    let mean_fit = smint_estimate(
        data,
        x,
        y,
        s,
        grid,
        &SmintConfig { transform: Transform::Identity, kernel: cfg.kernel.clone(), ..cfg.clone() },
    )?;
    let second_fit = smint_estimate(
        data,
        x,
        y,
        s,
        grid,
        &SmintConfig { transform: Transform::Square, kernel: cfg.kernel.clone(), ..cfg.clone() },
    )?;
    crate::curve::variance_curve(&mean_fit.curve, &second_fit.curve)
}
