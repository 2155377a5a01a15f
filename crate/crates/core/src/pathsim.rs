//! Path-based intervention simulation with estimated mechanisms: fit one
//! additive regression per node on its parents, then propagate a pinned
//! intervention value forward.
//!
//! The entire-path variant simulates every variable lying on a root path to
//! the response in the mutilated graph (equivalently, the response's
//! remaining ancestry). The partial variant simulates only the nodes on
//! directed paths from the intervention to the response and substitutes
//! bootstrap draws from the observed columns for any other needed parent.

use crate::curve::{CurveMeta, EffectCurve};
use crate::data::{mean, std_dev, Dataset};
use crate::error::{Error, Result};
use crate::graph::{directed_paths, root_paths, Dag, DEFAULT_PATH_CAP};
use crate::seed::{mix2, rng3};
use crate::sem::{Mechanism, Sem};
use crate::smoothers::{fit_additive, AdditiveConfig, AdditiveModel};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn snorm<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// How non-intervened stochasticity enters fitted nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    /// Centered Gaussian with the fitted residual standard deviation.
    Gaussian,
    /// Resampling of the centered fitted residuals.
    ResidualBootstrap,
}

#[derive(Debug, Clone)]
pub struct PathSimConfig {
    /// Monte-Carlo replications per grid value.
    pub b: usize,
    pub noise: NoiseMode,
    pub seed: u64,
    pub path_cap: usize,
}

impl Default for PathSimConfig {
    fn default() -> Self {
        PathSimConfig {
            b: 1000,
            noise: NoiseMode::Gaussian,
            seed: 0,
            path_cap: DEFAULT_PATH_CAP,
        }
    }
}

enum NodeModel {
    /// Root with its observed marginal.
    Root { mean: f64, sd: f64 },
    /// Additive fit on the parents, with centered residuals.
    Fitted { model: AdditiveModel, resid: Vec<f64>, sigma: f64 },
    /// The generating mechanism itself (population surrogate).
    True(Mechanism),
}

/// A structural model with per-node regressions, ready for intervention
/// simulation. Keeps the observed data for residual and marginal bootstrap.
pub struct FittedSem {
    dag: Dag,
    nodes: Vec<NodeModel>,
    data: Dataset,
}

impl FittedSem {
    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    /// Fitted residual standard deviation of a node (observed spread for
    /// roots, generating sigma for true-mechanism surrogates).
    pub fn sigma(&self, j: usize) -> f64 {
        match &self.nodes[j] {
            NodeModel::Root { sd, .. } => *sd,
            NodeModel::Fitted { sigma, .. } => *sigma,
            NodeModel::True(m) => m.sigma(),
        }
    }

    /// Wraps the generating mechanisms instead of regression fits, keeping
    /// `data` as the observational sample for bootstrap substitution.
    pub fn from_true(sem: &Sem, data: Dataset) -> Result<Self> {
        if data.p() != sem.p() {
            return Err(Error::ShapeMismatch(format!(
                "{} data columns for {} model nodes",
                data.p(),
                sem.p()
            )));
        }
        let nodes = (0..sem.p()).map(|j| NodeModel::True(sem.mechanism(j).clone())).collect();
        Ok(FittedSem { dag: sem.dag().clone(), nodes, data })
    }
}

/// Fits one additive regression per non-root node on its parents; roots
/// keep their observed marginal.
pub fn fit_sem(data: &Dataset, dag: &Dag) -> Result<FittedSem> {
    if data.p() != dag.p() {
        return Err(Error::ShapeMismatch(format!(
            "{} data columns for {} graph nodes",
            data.p(),
            dag.p()
        )));
    }
    let mut nodes = Vec::with_capacity(dag.p());
    for j in 0..dag.p() {
        let parents = dag.parents(j)?;
        if parents.is_empty() {
            nodes.push(NodeModel::Root { mean: mean(data.col(j)), sd: std_dev(data.col(j)) });
            continue;
        }
        let cols: Vec<&[f64]> = parents.iter().map(|&q| data.col(q)).collect();
        let model = fit_additive(data.col(j), &cols, &AdditiveConfig::default())?;
        let mut resid: Vec<f64> =
            data.col(j).iter().zip(model.fitted()).map(|(&v, &f)| v - f).collect();
        let rbar = mean(&resid);
        for r in &mut resid {
            *r -= rbar;
        }
        let sigma = std_dev(&resid);
        if sigma == 0.0 {
            log::warn!("node {j} fits its parents exactly; simulated draws will be degenerate");
        }
        nodes.push(NodeModel::Fitted { model, resid, sigma });
    }
    Ok(FittedSem { dag: dag.clone(), nodes, data: data.clone() })
}

/// A simulated effect curve with per-point Monte-Carlo standard errors and
/// per-replication work counters.
pub struct PathEffect {
    pub curve: EffectCurve,
    /// Standard error of each curve point (spread of draws over sqrt(B)).
    pub se: Vec<f64>,
    /// Simulated nodes per replication (the intervened node is pinned, not
    /// simulated).
    pub nodes_per_replication: usize,
    /// Off-path parent substitutions per replication.
    pub bootstrap_draws_per_replication: usize,
}

/// Per-node payload of B pre-drawn noise values, shared across grid values
/// so that curves differ only through the intervention.
fn noise_payload(fitted: &FittedSem, sim_nodes: &[usize], cfg: &PathSimConfig) -> Vec<Vec<f64>> {
    let mut payload = vec![Vec::new(); fitted.dag.p()];
    for &j in sim_nodes {
        let mut rng = rng3(cfg.seed, j as u64, 0);
        let draws: Vec<f64> = match &fitted.nodes[j] {
            NodeModel::True(_) => {
                (0..cfg.b).map(|_| snorm(&mut rng)).collect()
            }
            NodeModel::Root { mean, sd } => match cfg.noise {
                NoiseMode::Gaussian => (0..cfg.b)
                    .map(|_| mean + sd * snorm(&mut rng))
                    .collect(),
                NoiseMode::ResidualBootstrap => {
                    let col = fitted.data.col(j);
                    (0..cfg.b).map(|_| col[rng.random_range(0..col.len())]).collect()
                }
            },
            NodeModel::Fitted { resid, sigma, .. } => match cfg.noise {
                NoiseMode::Gaussian => (0..cfg.b)
                    .map(|_| sigma * snorm(&mut rng))
                    .collect(),
                NoiseMode::ResidualBootstrap => {
                    (0..cfg.b).map(|_| resid[rng.random_range(0..resid.len())]).collect()
                }
            },
        };
        payload[j] = draws;
    }
    payload
}

/// Node value given assembled parent values and this replication's noise.
fn node_value(model: &NodeModel, parent_values: &[f64], noise: f64) -> Result<f64> {
    match model {
        NodeModel::True(mech) => Ok(mech.eval(parent_values, noise)),
        NodeModel::Root { .. } => Ok(noise),
        NodeModel::Fitted { model, .. } => Ok(model.predict(parent_values)? + noise),
    }
}

fn constant_curve(
    fitted: &FittedSem,
    x: usize,
    y: usize,
    values: &[f64],
    method: &str,
    cfg: &PathSimConfig,
) -> Result<PathEffect> {
    let ycol = fitted.data.col(y);
    let ybar = mean(ycol);
    let se = std_dev(ycol) / (ycol.len() as f64).sqrt();
    let curve = EffectCurve::new(
        values.to_vec(),
        vec![ybar; values.len()],
        CurveMeta {
            method: method.into(),
            x: fitted.data.name(x).into(),
            y: fitted.data.name(y).into(),
            seed: Some(cfg.seed),
            mc_reps: Some(cfg.b),
            ..CurveMeta::default()
        },
    )?;
    Ok(PathEffect {
        curve,
        se: vec![se; values.len()],
        nodes_per_replication: 0,
        bootstrap_draws_per_replication: 0,
    })
}

fn check_pair(fitted: &FittedSem, x: usize, y: usize, cfg: &PathSimConfig) -> Result<()> {
    let p = fitted.dag.p();
    for node in [x, y] {
        if node >= p {
            return Err(Error::NodeOutOfRange { node, p });
        }
    }
    if x == y {
        return Err(Error::InvalidParam("intervention and response nodes coincide".into()));
    }
    if cfg.b < 1 {
        return Err(Error::InvalidParam("need at least one replication".into()));
    }
    Ok(())
}

/// Runs one simulation pass: for each grid value and replication, assemble
/// each simulation node's parents from (pinned x, simulated values,
/// bootstrap substitutes) and draw the response.
#[allow(clippy::too_many_arguments)]
fn simulate_curve(
    fitted: &FittedSem,
    x: usize,
    y: usize,
    values: &[f64],
    sim_order: &[usize],
    parent_source: &[Vec<ParentSource>],
    payload: &[Vec<f64>],
    boot: &BootstrapDraws,
    cfg: &PathSimConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = fitted.dag.p();
    let mut node_val = vec![0.0f64; p];
    let mut curve = Vec::with_capacity(values.len());
    let mut se = Vec::with_capacity(values.len());
    let mut pa_buf: Vec<f64> = Vec::new();
    for &v in values {
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for rep in 0..cfg.b {
            node_val[x] = v;
            for &j in sim_order {
                pa_buf.clear();
                for src in &parent_source[j] {
                    pa_buf.push(match *src {
                        ParentSource::Node(q) => node_val[q],
                        ParentSource::Bootstrap(slot) => boot.value(slot, rep),
                    });
                }
                node_val[j] = node_value(&fitted.nodes[j], &pa_buf, payload[j][rep])?;
            }
            let draw = node_val[y];
            sum += draw;
            sumsq += draw * draw;
        }
        let m = sum / cfg.b as f64;
        let var = (sumsq / cfg.b as f64 - m * m).max(0.0);
        curve.push(m);
        se.push((var / cfg.b as f64).sqrt());
    }
    Ok((curve, se))
}

#[derive(Clone, Copy)]
enum ParentSource {
    /// Pinned or simulated in this replication.
    Node(usize),
    /// Off-path substitute: index into the bootstrap table.
    Bootstrap(usize),
}

/// Pre-drawn off-path substitutes, one independent stream per needing
/// (child, parent) pair. Fitted models resample the observed column with
/// replacement; a true-mechanism surrogate instead draws from the exact
/// marginal by simulating the parent's ancestry with fresh noise, so that
/// the population-level equivalence of the two path algorithms is not
/// polluted by empirical-marginal error.
struct BootstrapDraws {
    draws: Vec<Vec<f64>>,
}

impl BootstrapDraws {
    fn new(fitted: &FittedSem, needs: &[(usize, usize)], cfg: &PathSimConfig) -> Result<Self> {
        let boot_seed = mix2(cfg.seed, 0x626f_6f74);
        let mut draws = Vec::with_capacity(needs.len());
        for &(child, parent) in needs {
            let mut rng = rng3(boot_seed, child as u64, parent as u64);
            let vals: Vec<f64> = if matches!(fitted.nodes[parent], NodeModel::True(_)) {
                let mut member = vec![false; fitted.dag.p()];
                member[parent] = true;
                for a in fitted.dag.ancestors(parent)? {
                    member[a] = true;
                }
                // Ancestors of ancestors are ancestors, so the closure is
                // self-contained under this topological order.
                let closure: Vec<(usize, &Mechanism, Vec<usize>)> = fitted
                    .dag
                    .topological_order()
                    .into_iter()
                    .filter(|&v| member[v])
                    .map(|v| match &fitted.nodes[v] {
                        NodeModel::True(mech) => (v, mech, mech.parents()),
                        _ => unreachable!("surrogate models are homogeneous"),
                    })
                    .collect();
                let mut val = vec![0.0f64; fitted.dag.p()];
                let mut pa_buf = Vec::new();
                (0..cfg.b)
                    .map(|_| {
                        for (v, mech, parents) in &closure {
                            pa_buf.clear();
                            pa_buf.extend(parents.iter().map(|&q| val[q]));
                            val[*v] = mech.eval(&pa_buf, snorm(&mut rng));
                        }
                        val[parent]
                    })
                    .collect()
            } else {
                let col = fitted.data.col(parent);
                (0..cfg.b).map(|_| col[rng.random_range(0..col.len())]).collect()
            };
            draws.push(vals);
        }
        Ok(BootstrapDraws { draws })
    }

    fn value(&self, slot: usize, rep: usize) -> f64 {
        self.draws[slot][rep]
    }
}

fn effect_meta(fitted: &FittedSem, x: usize, y: usize, method: &str, cfg: &PathSimConfig) -> CurveMeta {
    CurveMeta {
        method: method.into(),
        x: fitted.data.name(x).into(),
        y: fitted.data.name(y).into(),
        seed: Some(cfg.seed),
        mc_reps: Some(cfg.b),
        ..CurveMeta::default()
    }
}

/// Entire-path effect: pins `x`, removes its in-edges, and simulates every
/// node on a root path to `y` (the response's remaining ancestry), averaging
/// B response draws per grid value. Without a directed path the
/// observational mean of `y` is returned at every value.
pub fn entire_path_effect(
    fitted: &FittedSem,
    x: usize,
    y: usize,
    values: &[f64],
    cfg: &PathSimConfig,
) -> Result<PathEffect> {
    check_pair(fitted, x, y, cfg)?;
    let paths = if fitted.dag.descendants(x)?.binary_search(&y).is_ok() {
        root_paths(&fitted.dag, x, y, cfg.path_cap)?
    } else {
        Vec::new()
    };
    if paths.is_empty() {
        return constant_curve(fitted, x, y, values, "path-entire", cfg);
    }
    let mut on_path = vec![false; fitted.dag.p()];
    for path in &paths {
        for &j in path.nodes() {
            on_path[j] = true;
        }
    }
    let mutilated = fitted.dag.without_in_edges(x)?;
    let sim_order: Vec<usize> = mutilated
        .topological_order()
        .into_iter()
        .filter(|&j| on_path[j] && j != x)
        .collect();
    // Every parent of a simulated node lies on some root path itself, so
    // parents always resolve to pinned or simulated values.
    let parent_source: Vec<Vec<ParentSource>> = (0..fitted.dag.p())
        .map(|j| {
            if !on_path[j] || j == x {
                return Vec::new();
            }
            mutilated.parents(j).unwrap().iter().map(|&q| ParentSource::Node(q)).collect()
        })
        .collect();
    let payload = noise_payload(fitted, &sim_order, cfg);
    let boot = BootstrapDraws { draws: Vec::new() };
    let (curve_vals, se) =
        simulate_curve(fitted, x, y, values, &sim_order, &parent_source, &payload, &boot, cfg)?;
    let curve = EffectCurve::new(
        values.to_vec(),
        curve_vals,
        effect_meta(fitted, x, y, "path-entire", cfg),
    )?;
    Ok(PathEffect {
        curve,
        se,
        nodes_per_replication: sim_order.len(),
        bootstrap_draws_per_replication: 0,
    })
}

/// Partial-path effect: simulates only the nodes on directed paths from `x`
/// to `y`; any other parent a path node needs is replaced by an independent
/// bootstrap draw from its observed column, per replication and per
/// (child, parent) pair.
pub fn partial_path_effect(
    fitted: &FittedSem,
    x: usize,
    y: usize,
    values: &[f64],
    cfg: &PathSimConfig,
) -> Result<PathEffect> {
    check_pair(fitted, x, y, cfg)?;
    let paths = directed_paths(&fitted.dag, x, y, cfg.path_cap)?;
    if paths.is_empty() {
        return constant_curve(fitted, x, y, values, "path-partial", cfg);
    }
    let mut on_path = vec![false; fitted.dag.p()];
    for path in &paths {
        for &j in path.nodes() {
            on_path[j] = true;
        }
    }
    let sim_order: Vec<usize> = fitted
        .dag
        .topological_order()
        .into_iter()
        .filter(|&j| on_path[j] && j != x)
        .collect();
    let mut needs: Vec<(usize, usize)> = Vec::new();
    let parent_source: Vec<Vec<ParentSource>> = (0..fitted.dag.p())
        .map(|j| {
            if !on_path[j] || j == x {
                return Vec::new();
            }
            fitted
                .dag
                .parents(j)
                .unwrap()
                .iter()
                .map(|&q| {
                    if on_path[q] {
                        ParentSource::Node(q)
                    } else {
                        needs.push((j, q));
                        ParentSource::Bootstrap(needs.len() - 1)
                    }
                })
                .collect()
        })
        .collect();
    let payload = noise_payload(fitted, &sim_order, cfg);
    let boot = BootstrapDraws::new(fitted, &needs, cfg)?;
    let (curve_vals, se) =
        simulate_curve(fitted, x, y, values, &sim_order, &parent_source, &payload, &boot, cfg)?;
    let curve = EffectCurve::new(
        values.to_vec(),
        curve_vals,
        effect_meta(fitted, x, y, "path-partial", cfg),
    )?;
    Ok(PathEffect {
        curve,
        se,
        nodes_per_replication: sim_order.len(),
        bootstrap_draws_per_replication: needs.len(),
    })
}
