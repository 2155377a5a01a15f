//! Stability-selected ranking of pairwise intervention effects.

use crate::util::{load_dag_for, load_order};
use clap::Args;
use smint::data::format_real;
use smint::harness::{stability_select, RankConfig, RankedEffect, StructureSpec};
use smint::{Dataset, Error, Result};
use std::path::PathBuf;

#[derive(Args)]
pub struct RankArgs {
    /// Dataset CSV with a header row.
    #[arg(long)]
    data: PathBuf,

    /// DAG edge-list; eligible pairs adjust for the parent sets.
    #[arg(long, conflicts_with = "order")]
    dag: Option<PathBuf>,

    /// Causal order file (one column per line); eligible pairs adjust for
    /// nearest predecessors.
    #[arg(long)]
    order: Option<PathBuf>,

    /// Half-sample subsampling runs.
    #[arg(long, default_value_t = 100)]
    runs: usize,

    /// Pairs kept per run, ranked by relative causal strength.
    #[arg(long, default_value_t = 30)]
    keep_top: usize,

    /// Selection frequency threshold.
    #[arg(long, default_value_t = 0.66)]
    threshold: f64,

    /// Predecessor cap for --order adjustment sets.
    #[arg(long, default_value_t = 3)]
    p_max: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output table: from,to,from_name,to_name,strength,frequency.
    #[arg(long, default_value = "rank.csv")]
    out: PathBuf,
}

pub fn run(a: RankArgs) -> Result<()> {
    let data = Dataset::read_csv_path(&a.data)?;
    let structure = match (&a.dag, &a.order) {
        (Some(path), None) => StructureSpec::Dag(load_dag_for(path, &data)?),
        (None, Some(path)) => StructureSpec::Order(load_order(path, &data)?),
        _ => return Err(Error::InvalidParam("pass exactly one of --dag or --order".into())),
    };
    let selected: Vec<RankedEffect> = if a.threshold > 1.0 {
        log::warn!("selection threshold {} exceeds 1; no pair can reach it", a.threshold);
        Vec::new()
    } else {
        let rc = RankConfig {
            runs: a.runs,
            keep_top: a.keep_top,
            threshold: a.threshold,
            p_max: a.p_max,
            seed: a.seed,
        };
        stability_select(&data, &structure, &rc)?
    };

    let mut w = csv::Writer::from_path(&a.out)?;
    w.write_record(["from", "to", "from_name", "to_name", "strength", "frequency"])?;
    for r in &selected {
        w.write_record([
            r.from.to_string(),
            r.to.to_string(),
            data.name(r.from).to_string(),
            data.name(r.to).to_string(),
            format_real(r.strength),
            format_real(r.frequency),
        ])?;
    }
    w.flush()?;
    println!("selected {} pair(s); wrote {}", selected.len(), a.out.display());
    Ok(())
}
