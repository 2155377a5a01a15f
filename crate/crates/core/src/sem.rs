//! Structural equation models over a DAG: construction, simulation and the
//! true-mechanism intervention oracle.
//!
//! Noise discipline: every stochastic quantity is drawn from a stream seeded
//! by `seed::mix3(master, node, replication)`, so results are reproducible
//! and independent of evaluation order.

use std::f64::consts::SQRT_2;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::curve::{CurveMeta, EffectCurve};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::seed;

/// Number of Fourier features used to realize a squared-exponential
/// Gaussian-process edge function.
pub const DEFAULT_GP_FEATURES: usize = 64;

/// A univariate edge function applied to one parent value.
#[derive(Debug, Clone, PartialEq)]
pub enum EdgeFn {
    /// `slope * x`.
    Linear { slope: f64 },
    /// `a * b(x + c) / (1 + |b(x + c)|)`.
    Sigmoid { a: f64, b: f64, c: f64 },
    /// `sum_l amps[l] * cos(freqs[l] * x + phases[l])`: a stationary random
    /// function with squared-exponential covariance (bandwidth one, unit
    /// variance in expectation over the feature draw).
    Fourier { amps: Vec<f64>, freqs: Vec<f64>, phases: Vec<f64> },
}

impl EdgeFn {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            EdgeFn::Linear { slope } => slope * x,
            EdgeFn::Sigmoid { a, b, c } => {
                let u = b * (x + c);
                a * u / (1.0 + u.abs())
            }
            EdgeFn::Fourier { amps, freqs, phases } => {
                let mut acc = 0.0;
                for ((&a, &w), &ph) in amps.iter().zip(freqs).zip(phases) {
                    acc += a * (w * x + ph).cos();
                }
                acc
            }
        }
    }
}

type CustomFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

/// How a node is generated from its parents and one noise draw.
#[derive(Clone)]
pub enum Mechanism {
    /// `X_j = sigma * Z`.
    Root { sigma: f64 },
    /// `X_j = sum_k f_k(X_k) + sigma * Z`, terms keyed by parent index.
    Additive { terms: Vec<(usize, EdgeFn)>, sigma: f64 },
    /// `X_j = f(parent values, sigma * Z)`; the noise may enter
    /// non-additively. Parent values are passed in ascending index order.
    Custom { parents: Vec<usize>, sigma: f64, f: CustomFn },
}

impl std::fmt::Debug for Mechanism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mechanism::Root { sigma } => write!(f, "Root {{ sigma: {sigma} }}"),
            Mechanism::Additive { terms, sigma } => f
                .debug_struct("Additive")
                .field("terms", terms)
                .field("sigma", sigma)
                .finish(),
            Mechanism::Custom { parents, sigma, .. } => f
                .debug_struct("Custom")
                .field("parents", parents)
                .field("sigma", sigma)
                .finish_non_exhaustive(),
        }
    }
}

impl Mechanism {
    pub fn parents(&self) -> Vec<usize> {
        match self {
            Mechanism::Root { .. } => Vec::new(),
            Mechanism::Additive { terms, .. } => terms.iter().map(|&(k, _)| k).collect(),
            Mechanism::Custom { parents, .. } => parents.clone(),
        }
    }

    pub fn sigma(&self) -> f64 {
        match self {
            Mechanism::Root { sigma }
            | Mechanism::Additive { sigma, .. }
            | Mechanism::Custom { sigma, .. } => *sigma,
        }
    }

    /// Evaluates the mechanism for parent values (ascending parent index)
    /// and a standard normal draw `z`.
    pub fn eval(&self, parent_values: &[f64], z: f64) -> f64 {
        match self {
            Mechanism::Root { sigma } => sigma * z,
            Mechanism::Additive { terms, sigma } => {
                let mut acc = sigma * z;
                for ((_, f), &x) in terms.iter().zip(parent_values) {
                    acc += f.eval(x);
                }
                acc
            }
            Mechanism::Custom { sigma, f, .. } => f(parent_values, sigma * z),
        }
    }
}

/// A structural equation model: a DAG plus one mechanism per node.
#[derive(Debug, Clone)]
pub struct Sem {
    dag: Dag,
    mechanisms: Vec<Mechanism>,
    names: Vec<String>,
}

impl Sem {
    /// Validates that each mechanism's parent list matches the graph
    /// (ascending) and that noise scales are positive and finite.
    pub fn new(dag: Dag, mechanisms: Vec<Mechanism>, names: Vec<String>) -> Result<Self> {
        if mechanisms.len() != dag.p() {
            return Err(Error::ShapeMismatch(format!(
                "{} mechanisms for {} nodes",
                mechanisms.len(),
                dag.p()
            )));
        }
        if names.len() != dag.p() {
            return Err(Error::ShapeMismatch(format!(
                "{} names for {} nodes",
                names.len(),
                dag.p()
            )));
        }
        for (j, mech) in mechanisms.iter().enumerate() {
            let expected = dag.parents(j)?;
            let got = mech.parents();
            if got != expected {
                return Err(Error::MechanismMismatch {
                    node: j,
                    detail: format!("parents {got:?}, graph has {expected:?}"),
                });
            }
            let sigma = mech.sigma();
            if !(sigma.is_finite() && sigma > 0.0) {
                return Err(Error::MechanismMismatch {
                    node: j,
                    detail: format!("noise scale {sigma} must be positive"),
                });
            }
        }
        Ok(Sem { dag, mechanisms, names })
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn p(&self) -> usize {
        self.dag.p()
    }

    pub fn mechanism(&self, j: usize) -> &Mechanism {
        &self.mechanisms[j]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

fn default_names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("X{}", j + 1)).collect()
}

/// Draws one standard normal per (node, row) from `mix3(seed, node, row)`.
pub fn simulate(sem: &Sem, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidParam("need at least one sample".into()));
    }
    let p = sem.p();
    let order = sem.dag.topological_order();
    let mut columns = vec![vec![0.0f64; n]; p];
    let mut parent_buf = Vec::new();
    for i in 0..n {
        for &j in &order {
            let mech = &sem.mechanisms[j];
            parent_buf.clear();
            for &k in sem.dag.parents(j)? {
                parent_buf.push(columns[k][i]);
            }
            let mut rng = seed::rng3(seed, j as u64, i as u64);
            let z: f64 = StandardNormal.sample(&mut rng);
            columns[j][i] = mech.eval(&parent_buf, z);
        }
    }
    for (j, col) in columns.iter().enumerate() {
        if let Some(i) = col.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("simulated node {j}, row {i}")));
        }
    }
    Dataset::new(sem.names.clone(), columns)
}

fn root_sigma<R: Rng>(rng: &mut R) -> f64 {
    rng.random_range(1.0..SQRT_2)
}

fn inner_sigma<R: Rng>(rng: &mut R) -> f64 {
    rng.random_range(0.2..SQRT_2 / 5.0)
}

/// Random SEM with sigmoid-shaped edge functions: for each edge,
/// `f(x) = a * b(x + c) / (1 + |b(x + c)|)` with `a ~ 1 + Exp(rate 4)`,
/// `|b| ~ U[0.5, 2]` with random sign, `c ~ U[-2, 2]`. Root noise scales are
/// `U[1, sqrt(2)]`, non-root scales `U[1/5, sqrt(2)/5]`.
pub fn make_sigmoid_sem(dag: &Dag, seed: u64) -> Result<Sem> {
    let exp4 = Exp::new(4.0).expect("valid rate");
    let mut mechanisms = Vec::with_capacity(dag.p());
    for j in 0..dag.p() {
        let mut rng = seed::rng3(seed, j as u64, 0);
        let parents = dag.parents(j)?;
        if parents.is_empty() {
            mechanisms.push(Mechanism::Root { sigma: root_sigma(&mut rng) });
        } else {
            let sigma = inner_sigma(&mut rng);
            let mut terms = Vec::with_capacity(parents.len());
            for &k in parents {
                let a = 1.0 + exp4.sample(&mut rng);
                let magnitude = rng.random_range(0.5..2.0);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let c = rng.random_range(-2.0..2.0);
                terms.push((k, EdgeFn::Sigmoid { a, b: sign * magnitude, c }));
            }
            mechanisms.push(Mechanism::Additive { terms, sigma });
        }
    }
    Sem::new(dag.clone(), mechanisms, default_names(dag.p()))
}

/// Random SEM whose edge functions are draws from a zero-mean Gaussian
/// process with squared-exponential covariance (bandwidth one, unit
/// variance), realized with `features` random Fourier features per edge.
/// Noise scales follow the same laws as [`make_sigmoid_sem`].
pub fn make_gp_sem(dag: &Dag, seed: u64, features: usize) -> Result<Sem> {
    if features == 0 {
        return Err(Error::InvalidParam("need at least one Fourier feature".into()));
    }
    let scale = (2.0 / features as f64).sqrt();
    let mut mechanisms = Vec::with_capacity(dag.p());
    for j in 0..dag.p() {
        let mut rng = seed::rng3(seed, j as u64, 0);
        let parents = dag.parents(j)?;
        if parents.is_empty() {
            mechanisms.push(Mechanism::Root { sigma: root_sigma(&mut rng) });
        } else {
            let sigma = inner_sigma(&mut rng);
            let mut terms = Vec::with_capacity(parents.len());
            for &k in parents {
                let mut amps = Vec::with_capacity(features);
                let mut freqs = Vec::with_capacity(features);
                let mut phases = Vec::with_capacity(features);
                for _ in 0..features {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let w: f64 = StandardNormal.sample(&mut rng);
                    let ph = rng.random_range(0.0..std::f64::consts::TAU);
                    amps.push(scale * z);
                    freqs.push(w);
                    phases.push(ph);
                }
                terms.push((k, EdgeFn::Fourier { amps, freqs, phases }));
            }
            mechanisms.push(Mechanism::Additive { terms, sigma });
        }
    }
    Sem::new(dag.clone(), mechanisms, default_names(dag.p()))
}

/// Named four-variable benchmark models over nodes `X1, X2, X3, Y`
/// (indices 0..3), all with `sigma1 = sigma2 = 0.7`, `sigma3 = sigma4 = 0.2`:
///
/// * `nonadd`: `X3 = cos(4(X1 + X2)) * exp(X1/2 + X2/4) + e3`,
///   `Y = cos(X3) * exp(X3/4) + e4`; edges `X1 -> X3 <- X2`, `X3 -> Y`.
/// * `interaction`: `X3 = X1 + X2 + e3`, `Y = X1 * X2 * X3 + e4`; edges
///   additionally `X1 -> Y`, `X2 -> Y`.
/// * `nonadd-noise`: as `interaction` but `Y = exp(X1) * cos(X2 * X3 + e4)`.
/// * `bandwidth`: as `interaction` but `Y = X1 + sin(X2 * X3) + e4`.
pub fn preset_sem(name: &str) -> Result<Sem> {
    let names = vec!["X1".to_string(), "X2".to_string(), "X3".to_string(), "Y".to_string()];
    let chain_dag = Dag::new(4, &[(0, 2), (1, 2), (2, 3)])?;
    let full_dag = Dag::new(4, &[(0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])?;
    let (s12, s34) = (0.7, 0.2);
    let roots = |mechs: &mut Vec<Mechanism>| {
        mechs.push(Mechanism::Root { sigma: s12 });
        mechs.push(Mechanism::Root { sigma: s12 });
    };
    match name {
        "nonadd" => {
            let mut mechs = Vec::new();
            roots(&mut mechs);
            mechs.push(Mechanism::Custom {
                parents: vec![0, 1],
                sigma: s34,
                f: Arc::new(|x, e| (4.0 * (x[0] + x[1])).cos() * (x[0] / 2.0 + x[1] / 4.0).exp() + e),
            });
            mechs.push(Mechanism::Custom {
                parents: vec![2],
                sigma: s34,
                f: Arc::new(|x, e| x[0].cos() * (x[0] / 4.0).exp() + e),
            });
            Sem::new(chain_dag, mechs, names)
        }
        "interaction" => {
            let mut mechs = Vec::new();
            roots(&mut mechs);
            mechs.push(Mechanism::Custom {
                parents: vec![0, 1],
                sigma: s34,
                f: Arc::new(|x, e| x[0] + x[1] + e),
            });
            mechs.push(Mechanism::Custom {
                parents: vec![0, 1, 2],
                sigma: s34,
                f: Arc::new(|x, e| x[0] * x[1] * x[2] + e),
            });
            Sem::new(full_dag, mechs, names)
        }
        "nonadd-noise" => {
            let mut mechs = Vec::new();
            roots(&mut mechs);
            mechs.push(Mechanism::Custom {
                parents: vec![0, 1],
                sigma: s34,
                f: Arc::new(|x, e| x[0] + x[1] + e),
            });
            mechs.push(Mechanism::Custom {
                parents: vec![0, 1, 2],
                sigma: s34,
                f: Arc::new(|x, e| x[0].exp() * (x[1] * x[2] + e).cos()),
            });
            Sem::new(full_dag, mechs, names)
        }
        "bandwidth" => {
            let mut mechs = Vec::new();
            roots(&mut mechs);
            mechs.push(Mechanism::Custom {
                parents: vec![0, 1],
                sigma: s34,
                f: Arc::new(|x, e| x[0] + x[1] + e),
            });
            mechs.push(Mechanism::Custom {
                parents: vec![0, 1, 2],
                sigma: s34,
                f: Arc::new(|x, e| x[0] + (x[1] * x[2]).sin() + e),
            });
            Sem::new(full_dag, mechs, names)
        }
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}

pub const PRESET_NAMES: [&str; 4] = ["nonadd", "interaction", "nonadd-noise", "bandwidth"];

/// Monte-Carlo reference for `E[Y | do(X = x)]` using the true mechanisms.
///
/// When `y` descends from `x`, the in-edges of `x` are removed and the
/// ancestors of `y` are forward-simulated `b` times per grid value with
/// common noise across values. Otherwise the intervention cannot influence
/// `y` and the curve is constant at a Monte-Carlo estimate of `E[Y]`.
pub fn oracle_effect(
    sem: &Sem,
    x: usize,
    y: usize,
    grid: &[f64],
    b: usize,
    seed: u64,
) -> Result<EffectCurve> {
    let p = sem.p();
    if x >= p {
        return Err(Error::NodeOutOfRange { node: x, p });
    }
    if y >= p {
        return Err(Error::NodeOutOfRange { node: y, p });
    }
    if x == y {
        return Err(Error::InvalidParam("x and y must differ".into()));
    }
    if b == 0 {
        return Err(Error::InvalidParam("need at least one replication".into()));
    }
    let meta = CurveMeta {
        method: "oracle".into(),
        x: sem.names[x].clone(),
        y: sem.names[y].clone(),
        seed: Some(seed),
        mc_reps: Some(b),
        ..Default::default()
    };

    let is_descendant = sem.dag.descendants(x)?.binary_search(&y).is_ok();
    if !is_descendant {
        let obs = simulate(sem, b, seed)?;
        let mean = crate::data::mean(obs.col(y));
        return EffectCurve::new(grid.to_vec(), vec![mean; grid.len()], meta);
    }

    let cut = sem.dag.without_in_edges(x)?;
    let mut needed = vec![false; p];
    needed[y] = true;
    needed[x] = true;
    for a in cut.ancestors(y)? {
        needed[a] = true;
    }
    let order: Vec<usize> =
        cut.topological_order().into_iter().filter(|&j| needed[j] && j != x).collect();

    // One standard normal per (node, replication), shared across grid values.
    let mut noise = vec![vec![0.0f64; order.len()]; b];
    for (slot, &j) in order.iter().enumerate() {
        for (rep, row) in noise.iter_mut().enumerate() {
            let mut rng = seed::rng3(seed, j as u64, rep as u64);
            row[slot] = StandardNormal.sample(&mut rng);
        }
    }

    let mut values = Vec::with_capacity(grid.len());
    let mut state = vec![0.0f64; p];
    let mut parent_buf = Vec::new();
    for &v in grid {
        let mut acc = 0.0;
        for row in &noise {
            state[x] = v;
            for (slot, &j) in order.iter().enumerate() {
                parent_buf.clear();
                for &k in sem.dag.parents(j)? {
                    parent_buf.push(state[k]);
                }
                state[j] = sem.mechanisms[j].eval(&parent_buf, row[slot]);
            }
            acc += state[y];
        }
        let mean = acc / b as f64;
        if !mean.is_finite() {
            return Err(Error::NonFinite(format!("oracle mean at grid value {v}")));
        }
        values.push(mean);
    }
    EffectCurve::new(grid.to_vec(), values, meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_chain(slope: f64, sigma_x: f64, sigma_y: f64) -> Sem {
        let dag = Dag::new(2, &[(0, 1)]).unwrap();
        Sem::new(
            dag,
            vec![
                Mechanism::Root { sigma: sigma_x },
                Mechanism::Additive { terms: vec![(0, EdgeFn::Linear { slope })], sigma: sigma_y },
            ],
            vec!["X".into(), "Y".into()],
        )
        .unwrap()
    }

    /// Ordinary least squares slope, computed directly from the definition.
    fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
        let mx = crate::data::mean(x);
        let my = crate::data::mean(y);
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
        sxy / sxx
    }

    #[test]
    fn mechanism_parent_lists_must_match_graph() {
        let dag = Dag::new(2, &[(0, 1)]).unwrap();
        let bad = Sem::new(
            dag,
            vec![Mechanism::Root { sigma: 1.0 }, Mechanism::Root { sigma: 1.0 }],
            vec!["a".into(), "b".into()],
        );
        assert!(matches!(bad, Err(Error::MechanismMismatch { node: 1, .. })));
    }

    #[test]
    fn simulation_is_deterministic_and_seed_sensitive() {
        let sem = preset_sem("nonadd").unwrap();
        let a = simulate(&sem, 50, 9).unwrap();
        let b = simulate(&sem, 50, 9).unwrap();
        let c = simulate(&sem, 50, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn simulated_rows_extend_under_larger_n() {
        // Per-(node, row) noise streams: the first rows do not depend on n.
        let sem = preset_sem("interaction").unwrap();
        let small = simulate(&sem, 10, 4).unwrap();
        let large = simulate(&sem, 25, 4).unwrap();
        for j in 0..4 {
            assert_eq!(small.col(j), &large.col(j)[..10]);
        }
    }

    #[test]
    fn linear_sem_reproduces_its_slope() {
        let sem = linear_chain(2.0, 1.0, 0.5);
        let data = simulate(&sem, 4000, 11).unwrap();
        let slope = ols_slope(data.col(0), data.col(1));
        assert!((slope - 2.0).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn sigmoid_family_draws_stay_in_documented_ranges() {
        let dag = crate::graph::random_dag(10, 2.0 / 9.0, 5).unwrap();
        for seed in 0..30 {
            let sem = make_sigmoid_sem(&dag, seed).unwrap();
            for j in 0..sem.p() {
                match sem.mechanism(j) {
                    Mechanism::Root { sigma } => {
                        assert!((1.0..SQRT_2).contains(sigma));
                    }
                    Mechanism::Additive { terms, sigma } => {
                        assert!((0.2..SQRT_2 / 5.0).contains(sigma));
                        for (_, f) in terms {
                            match f {
                                EdgeFn::Sigmoid { a, b, c } => {
                                    assert!(*a >= 1.0);
                                    assert!((0.5..2.0).contains(&b.abs()));
                                    assert!((-2.0..2.0).contains(c));
                                }
                                other => panic!("unexpected edge function {other:?}"),
                            }
                        }
                    }
                    other => panic!("unexpected mechanism {other:?}"),
                }
            }
        }
    }

    #[test]
    fn gp_edge_functions_match_their_covariance() {
        // A two-node chain so node 1 carries a single GP edge function.
        let dag = Dag::new(2, &[(0, 1)]).unwrap();
        let mut f0 = Vec::new();
        let mut f1 = Vec::new();
        for seed in 0..2000 {
            let sem = make_gp_sem(&dag, seed, DEFAULT_GP_FEATURES).unwrap();
            if let Mechanism::Additive { terms, .. } = sem.mechanism(1) {
                f0.push(terms[0].1.eval(0.0));
                f1.push(terms[0].1.eval(1.0));
            } else {
                panic!("expected additive mechanism");
            }
        }
        let var0 = crate::data::std_dev(&f0).powi(2);
        assert!((var0 - 1.0).abs() < 0.1, "variance at 0: {var0}");
        let m0 = crate::data::mean(&f0);
        let m1 = crate::data::mean(&f1);
        let cov: f64 =
            f0.iter().zip(&f1).map(|(a, b)| (a - m0) * (b - m1)).sum::<f64>() / f0.len() as f64;
        let corr = cov / (crate::data::std_dev(&f0) * crate::data::std_dev(&f1));
        let target = (-0.5f64).exp();
        assert!((corr - target).abs() < 0.05, "corr {corr} vs {target}");
    }

    #[test]
    fn presets_have_documented_shapes() {
        for name in PRESET_NAMES {
            let sem = preset_sem(name).unwrap();
            assert_eq!(sem.p(), 4);
            assert_eq!(sem.names()[3], "Y");
            let data = simulate(&sem, 3000, 1).unwrap();
            let s1 = crate::data::std_dev(data.col(0));
            assert!((s1 - 0.7).abs() < 0.05, "{name}: std(X1) = {s1}");
        }
        let nonadd = preset_sem("nonadd").unwrap();
        assert_eq!(nonadd.dag().edges(), &[(0, 2), (1, 2), (2, 3)]);
        let inter = preset_sem("interaction").unwrap();
        assert_eq!(inter.dag().edges(), &[(0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert!(matches!(preset_sem("unknown"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn oracle_matches_plugin_conditional_mean_on_a_chain() {
        // X -> Y with Y = 2X + e and no confounding: E[Y | do(X=x)] = 2x.
        let sem = linear_chain(2.0, 1.0, 0.5);
        let grid = [-1.0, 0.0, 1.5];
        let curve = oracle_effect(&sem, 0, 1, &grid, 40_000, 3).unwrap();
        for (&g, &v) in grid.iter().zip(curve.values()) {
            assert!((v - 2.0 * g).abs() < 0.02, "at {g}: {v}");
        }
    }

    #[test]
    fn oracle_on_non_descendant_is_flat_at_the_observational_mean() {
        let sem = linear_chain(2.0, 1.0, 0.5);
        let curve = oracle_effect(&sem, 1, 0, &[-1.0, 0.0, 1.0], 20_000, 3).unwrap();
        let first = curve.values()[0];
        assert!(curve.values().iter().all(|&v| v == first), "constant curve");
        assert!(first.abs() < 0.02, "observational mean of X is 0, got {first}");
    }

    #[test]
    fn oracle_adjusts_for_confounding() {
        // Z -> X, Z -> Y, X -> Y, all unit coefficients and unit noise:
        // E[Y | do(X=x)] = x while the naive regression slope is 1.5.
        let dag = Dag::new(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
        let sem = Sem::new(
            dag,
            vec![
                Mechanism::Root { sigma: 1.0 },
                Mechanism::Additive { terms: vec![(0, EdgeFn::Linear { slope: 1.0 })], sigma: 1.0 },
                Mechanism::Additive {
                    terms: vec![
                        (0, EdgeFn::Linear { slope: 1.0 }),
                        (1, EdgeFn::Linear { slope: 1.0 }),
                    ],
                    sigma: 1.0,
                },
            ],
            vec!["Z".into(), "X".into(), "Y".into()],
        )
        .unwrap();
        let grid = [-2.0, 0.0, 2.0];
        let curve = oracle_effect(&sem, 1, 2, &grid, 60_000, 5).unwrap();
        let slope = ols_slope(curve.grid(), curve.values());
        assert!((slope - 1.0).abs() < 0.02, "do-slope {slope}");
        let data = simulate(&sem, 60_000, 6).unwrap();
        let naive = ols_slope(data.col(1), data.col(2));
        assert!((naive - 1.5).abs() < 0.03, "naive slope {naive}");
    }
}
