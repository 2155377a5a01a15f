//! Synthetic data: simulate a preset or random structural model to CSV,
//! alongside its generating DAG and optional oracle reference curves.

use clap::Args;
use smint::data::deciles;
use smint::graph::{random_dag, write_edge_list};
use smint::seed::{mix2, mix3};
use smint::sem::{
    make_gp_sem, make_sigmoid_sem, oracle_effect, preset_sem, simulate, Sem, DEFAULT_GP_FEATURES,
    PRESET_NAMES,
};
use smint::{Dataset, Error, Result};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

#[derive(Args)]
pub struct SimulateArgs {
    /// Named generating model: nonadd | interaction | nonadd-noise | bandwidth.
    #[arg(long, conflicts_with_all = ["p", "pc", "mech"])]
    preset: Option<String>,

    /// Nodes of a random DAG (forward pairs become edges with probability --pc).
    #[arg(long)]
    p: Option<usize>,

    /// Edge probability per forward pair; default 2/(p-1).
    #[arg(long, requires = "p")]
    pc: Option<f64>,

    /// Mechanism family for random DAGs: sigmoid | gp.
    #[arg(long, default_value = "sigmoid", requires = "p")]
    mech: String,

    /// Observations to draw.
    #[arg(long)]
    n: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Directory receiving data.csv, dag.edges and oracle curves.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,

    /// Pair "X:Y" (names or zero-based indices) whose reference curve
    /// E[Y | do(X = x)] is Monte-Carlo estimated on the deciles of X.
    /// Repeatable.
    #[arg(long)]
    oracle: Vec<String>,

    /// Monte-Carlo replications per oracle curve; default 5n.
    #[arg(long)]
    oracle_b: Option<usize>,
}

pub fn run(a: SimulateArgs) -> Result<()> {
    let sem = build_sem(&a)?;
    let data = simulate(&sem, a.n, mix2(a.seed, 2))?;
    std::fs::create_dir_all(&a.out_dir)?;

    let data_path = a.out_dir.join("data.csv");
    data.write_csv_path(&data_path)?;
    println!("wrote {}", data_path.display());

    let dag_path = a.out_dir.join("dag.edges");
    let mut w = BufWriter::new(File::create(&dag_path)?);
    write_edge_list(sem.dag(), &mut w)?;
    w.flush()?;
    println!("wrote {}", dag_path.display());

    let b = a.oracle_b.unwrap_or(5 * a.n);
    for spec in &a.oracle {
        let (x, y) = parse_pair(spec, &data)?;
        let grid = deciles(data.col(x))?;
        // Seeded by the pair itself, so curves do not depend on flag order.
        let seed = mix3(a.seed, 3, (x * data.p() + y) as u64);
        let curve = oracle_effect(&sem, x, y, &grid, b, seed)?;
        let name = format!("oracle_{}_{}.csv", file_token(data.name(x)), file_token(data.name(y)));
        let path = a.out_dir.join(name);
        curve.write_with_sidecar(&path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn build_sem(a: &SimulateArgs) -> Result<Sem> {
    match (&a.preset, a.p) {
        (Some(name), _) => preset_sem(name),
        (None, Some(p)) => {
            if p < 2 {
                return Err(Error::InvalidParam("a random DAG needs at least two nodes".into()));
            }
            let pc = a.pc.unwrap_or(2.0 / (p as f64 - 1.0));
            let dag = random_dag(p, pc, mix2(a.seed, 0))?;
            match a.mech.as_str() {
                "sigmoid" => make_sigmoid_sem(&dag, mix2(a.seed, 1)),
                "gp" => make_gp_sem(&dag, mix2(a.seed, 1), DEFAULT_GP_FEATURES),
                other => Err(Error::InvalidParam(format!("unknown mechanism family '{other}'"))),
            }
        }
        (None, None) => Err(Error::InvalidParam(format!(
            "pass --preset ({}) or --p for a random DAG",
            PRESET_NAMES.join(" | ")
        ))),
    }
}

fn parse_pair(spec: &str, data: &Dataset) -> Result<(usize, usize)> {
    let (xs, ys) = spec
        .split_once(':')
        .ok_or_else(|| Error::InvalidParam(format!("oracle pair '{spec}' is not of form X:Y")))?;
    let x = data.resolve_column(xs.trim())?;
    let y = data.resolve_column(ys.trim())?;
    if x == y {
        return Err(Error::InvalidParam(format!("oracle pair '{spec}' repeats a column")));
    }
    Ok((x, y))
}

/// Column names become file-name tokens; anything exotic maps to '_'.
fn file_token(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}
