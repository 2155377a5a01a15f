//! Effect-curve estimation: marginal integration (smint), its additive
//! start, or simulation along causal paths of a fitted structural model.

use crate::util::{check_bandwidth, load_dag_for, load_order, parse_bandwidths, parse_grid};
use clap::Args;
use smint::curve::sidecar_path;
use smint::data::deciles;
use smint::estimator::{additive_effect, smint_estimate, variance_effect, SmintConfig, Transform};
use smint::graph::{is_valid_backdoor_set, order_superset, DEFAULT_PATH_CAP};
use smint::harness::Method;
use smint::pathsim::{entire_path_effect, fit_sem, partial_path_effect, NoiseMode, PathSimConfig};
use smint::smoothers::KernelSpec;
use smint::{AdjustmentSet, Dataset, Error, Result};
use std::path::PathBuf;

#[derive(Args)]
pub struct EffectArgs {
    /// Dataset CSV with a header row.
    #[arg(long)]
    data: PathBuf,

    /// Intervention column (name or zero-based index).
    #[arg(long)]
    x: String,

    /// Response column (name or zero-based index).
    #[arg(long)]
    y: String,

    /// smint | additive | path-entire (alias path-full) | path-partial.
    #[arg(long, default_value = "smint")]
    method: String,

    /// Comma-separated adjustment columns; pass "" for the empty set.
    #[arg(long, conflicts_with = "order")]
    adjust: Option<String>,

    /// DAG edge-list: adjustment = parents of x (smint/additive), or the
    /// simulation structure (path methods).
    #[arg(long, conflicts_with = "order")]
    dag: Option<PathBuf>,

    /// Causal order file (one column per line): adjustment = up to --p-max
    /// nearest predecessors of x.
    #[arg(long)]
    order: Option<PathBuf>,

    /// Predecessor cap for --order.
    #[arg(long, default_value_t = 3)]
    p_max: usize,

    /// Check the adjustment set against the backdoor criterion of --dag.
    #[arg(long, requires = "dag")]
    validate: bool,

    /// Comma-separated intervention values (default: deciles of x).
    #[arg(long)]
    grid: Option<String>,

    /// identity | square | indicator:<c> | variance (smint only).
    #[arg(long, default_value = "identity")]
    transform: String,

    /// Bandwidth rule factor (bandwidth = factor * std); default 0.5.
    #[arg(long)]
    bandwidth_factor: Option<f64>,

    /// Explicit bandwidth for the intervention coordinate.
    #[arg(long)]
    h1: Option<f64>,

    /// Comma-separated bandwidths for the adjustment coordinates.
    #[arg(long, requires = "h1")]
    h2: Option<String>,

    /// Boosting iteration cap (smint).
    #[arg(long, default_value_t = 20)]
    b_max: u32,

    /// Stop when the integrated increment falls below this fraction of the
    /// response standard deviation (smint).
    #[arg(long, default_value_t = 0.01)]
    stop_abs: f64,

    /// Stop when the integrated increment falls below this fraction of the
    /// first increment (smint).
    #[arg(long, default_value_t = 0.05)]
    stop_rel: f64,

    /// Monte-Carlo replications per grid value (path methods).
    #[arg(long, default_value_t = 1000)]
    b: usize,

    /// gaussian | bootstrap residual noise (path methods).
    #[arg(long, default_value = "gaussian")]
    noise: String,

    /// Cap on enumerated paths (path methods).
    #[arg(long, default_value_t = DEFAULT_PATH_CAP)]
    path_cap: usize,

    /// Simulation seed (path methods).
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output curve CSV; metadata goes to a .meta.jsonl sidecar.
    #[arg(long, default_value = "effect.csv")]
    out: PathBuf,
}

pub fn run(a: EffectArgs) -> Result<()> {
    let data = Dataset::read_csv_path(&a.data)?;
    let x = data.resolve_column(&a.x)?;
    let y = data.resolve_column(&a.y)?;
    let grid = a.grid.as_deref().map(parse_grid).transpose()?;
    let method = Method::parse(&a.method)?;

    let curve = match method {
        Method::Smint | Method::Additive => {
            let s = resolve_adjustment(&a, &data, x, y)?;
            let cfg = smint_config(&a, s.len())?;
            match (method, a.transform.as_str()) {
                (Method::Smint, "variance") => {
                    variance_effect(&data, x, y, &s, grid.as_deref(), &cfg)?
                }
                (Method::Additive, "variance") => {
                    return Err(Error::InvalidParam(
                        "variance curves are computed with --method smint".into(),
                    ))
                }
                (Method::Smint, _) => {
                    let fit = smint_estimate(&data, x, y, &s, grid.as_deref(), &cfg)?;
                    println!(
                        "boosting stopped after {} iteration(s): {}",
                        fit.iterations,
                        fit.stop.label()
                    );
                    fit.curve
                }
                (Method::Additive, _) => additive_effect(&data, x, y, &s, grid.as_deref(), &cfg)?,
                _ => unreachable!("outer match restricts the method"),
            }
        }
        Method::PathEntire | Method::PathPartial => {
            if a.adjust.is_some() || a.order.is_some() {
                return Err(Error::InvalidParam(
                    "path methods take the structure from --dag, not --adjust or --order".into(),
                ));
            }
            if a.validate {
                return Err(Error::InvalidParam(
                    "--validate applies to the adjustment methods (smint, additive)".into(),
                ));
            }
            if a.transform != "identity" {
                return Err(Error::InvalidParam(
                    "--transform applies to the adjustment methods (smint, additive)".into(),
                ));
            }
            let dag = match &a.dag {
                Some(path) => load_dag_for(path, &data)?,
                None => return Err(Error::InvalidParam("path methods need --dag".into())),
            };
            let values = match grid {
                Some(g) => g,
                None => deciles(data.col(x))?,
            };
            let noise = match a.noise.as_str() {
                "gaussian" => NoiseMode::Gaussian,
                "bootstrap" => NoiseMode::ResidualBootstrap,
                other => {
                    return Err(Error::InvalidParam(format!(
                        "unknown noise mode '{other}' (gaussian | bootstrap)"
                    )))
                }
            };
            let cfg =
                PathSimConfig { b: a.b, noise, seed: a.seed, path_cap: a.path_cap };
            let fitted = fit_sem(&data, &dag)?;
            let eff = match method {
                Method::PathEntire => entire_path_effect(&fitted, x, y, &values, &cfg)?,
                _ => partial_path_effect(&fitted, x, y, &values, &cfg)?,
            };
            let max_se = eff.se.iter().cloned().fold(0.0, f64::max);
            println!(
                "simulated {} node value(s) per replication; max pointwise se {max_se:.4}",
                eff.nodes_per_replication
            );
            eff.curve
        }
    };

    curve.write_with_sidecar(&a.out)?;
    println!("wrote {} and {}", a.out.display(), sidecar_path(&a.out).display());
    Ok(())
}

/// The adjustment set for the smoother methods: explicit columns, the
/// parents of x in a DAG, or the nearest predecessors in an order.
fn resolve_adjustment(a: &EffectArgs, data: &Dataset, x: usize, y: usize) -> Result<AdjustmentSet> {
    let dag = a.dag.as_ref().map(|p| load_dag_for(p, data)).transpose()?;
    let s = if let Some(list) = &a.adjust {
        if dag.is_some() && !a.validate {
            log::warn!("--dag is only consulted for --validate when --adjust is given");
        }
        let mut members = Vec::new();
        for tok in list.split(',') {
            let tok = tok.trim();
            if tok.is_empty() {
                continue;
            }
            members.push(data.resolve_column(tok)?);
        }
        AdjustmentSet::explicit(members)
    } else if let Some(path) = &a.order {
        let order = load_order(path, data)?;
        drop_response(order_superset(&order, x, a.p_max)?, data, x, y)
    } else if let Some(dag) = &dag {
        drop_response(AdjustmentSet::parents_of(dag, x)?, data, x, y)
    } else {
        return Err(Error::InvalidParam(
            "pass an adjustment specification: --adjust (possibly \"\"), --dag or --order".into(),
        ));
    };
    if a.validate {
        let dag = dag.as_ref().expect("--validate requires --dag");
        if !is_valid_backdoor_set(dag, x, y, &s)? {
            let names: Vec<&str> = s.members().map(|j| data.name(j)).collect();
            return Err(Error::InvalidParam(format!(
                "adjustment set {{{}}} fails the backdoor criterion for {} -> {}",
                names.join(", "),
                data.name(x),
                data.name(y)
            )));
        }
    }
    Ok(s)
}

fn drop_response(s: AdjustmentSet, data: &Dataset, x: usize, y: usize) -> AdjustmentSet {
    if s.contains(y) {
        log::warn!(
            "response column '{}' precedes '{}' in the structure; dropping it from the adjustment set",
            data.name(y),
            data.name(x)
        );
        s.without(y)
    } else {
        s
    }
}

fn smint_config(a: &EffectArgs, s_dim: usize) -> Result<SmintConfig> {
    let transform = if a.transform == "variance" {
        Transform::Identity
    } else {
        Transform::parse(&a.transform)?
    };
    let kernel = match (a.h1, &a.h2) {
        (None, None) => None,
        (Some(h1), h2) => {
            check_bandwidth(h1)?;
            let h2 = match h2 {
                Some(list) => parse_bandwidths(list)?,
                None => Vec::new(),
            };
            if h2.len() != s_dim {
                return Err(Error::InvalidParam(format!(
                    "--h2 lists {} bandwidth(s) for an adjustment set of size {s_dim}",
                    h2.len()
                )));
            }
            Some(KernelSpec::new(h1, h2)?)
        }
        (None, Some(_)) => return Err(Error::InvalidParam("--h2 needs --h1".into())),
    };
    let mut cfg = SmintConfig {
        kernel,
        b_max: a.b_max,
        stop_abs: a.stop_abs,
        stop_rel: a.stop_rel,
        transform,
        ..Default::default()
    };
    if let Some(f) = a.bandwidth_factor {
        cfg.bandwidth_factor = f;
    }
    Ok(cfg)
}
