//! Benchmark experiments: replicated studies on random DAGs (with the true
//! or a perturbed structure) and the two fixed-model comparisons. Writes
//! results.csv and summary.json; error columns are deterministic given
//! --seed, wall-clock columns are not.

use clap::Args;
use smint::data::format_real;
use smint::harness::{
    interaction_boost_experiment, known_dag_study, nonadd_misspec_experiment, perturbed_dag_study,
    MechFamily, Method, PairRule, PerturbLevel, StudyResult, StudySpec,
};
use smint::{Error, Result};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Args)]
pub struct BenchmarkArgs {
    /// known-dag | perturbed | nonadd | interaction.
    #[arg(long)]
    experiment: String,

    /// Nodes of the random DAGs (known-dag, perturbed); default 10.
    #[arg(long)]
    p: Option<usize>,

    /// Observations per replication; default 500 (studies) or 10000 (fixed models).
    #[arg(long)]
    n: Option<usize>,

    /// Edge probability per forward pair; default 2/(p-1).
    #[arg(long)]
    pc: Option<f64>,

    /// Mechanism family (known-dag, perturbed): sigmoid | gp; default sigmoid.
    #[arg(long)]
    mech: Option<String>,

    /// Replications; default 20 (studies) or 1 (fixed models).
    #[arg(long)]
    replications: Option<usize>,

    /// Comma-separated methods (known-dag, perturbed); default all four.
    #[arg(long)]
    methods: Option<String>,

    /// Evaluate only this many randomly chosen connected pairs per
    /// replication (default: all of them).
    #[arg(long)]
    pairs: Option<usize>,

    /// Comma-separated perturbation distances (perturbed experiment; even
    /// integers, 0 reproduces the known-DAG study).
    #[arg(long)]
    hr: Option<String>,

    /// Monte-Carlo replications per reference curve; default 5n.
    #[arg(long)]
    oracle_b: Option<usize>,

    /// Simulation replications per path-method curve; default 1000.
    #[arg(long)]
    path_b: Option<usize>,

    /// Grid points of the fixed-model contrast (nonadd); default 51.
    #[arg(long)]
    grid_points: Option<usize>,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Directory receiving results.csv and summary.json.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

pub fn run(a: BenchmarkArgs) -> Result<()> {
    std::fs::create_dir_all(&a.out_dir)?;
    match a.experiment.as_str() {
        "known-dag" => study(&a, false),
        "perturbed" => study(&a, true),
        "nonadd" => nonadd(&a),
        "interaction" => interaction(&a),
        other => Err(Error::InvalidParam(format!(
            "unknown experiment '{other}' (known-dag | perturbed | nonadd | interaction)"
        ))),
    }
}

fn study(a: &BenchmarkArgs, perturbed: bool) -> Result<()> {
    let perturb = match (&a.hr, perturbed) {
        (Some(list), true) => parse_hr(list)?,
        (None, true) => {
            return Err(Error::InvalidParam(
                "the perturbed experiment needs --hr (e.g. --hr 0,2,4)".into(),
            ))
        }
        (Some(_), false) => {
            return Err(Error::InvalidParam("only the perturbed experiment takes --hr".into()))
        }
        (None, false) => Vec::new(),
    };
    if a.grid_points.is_some() {
        return Err(Error::InvalidParam("--grid-points applies to the nonadd experiment".into()));
    }
    let p = a.p.unwrap_or(10);
    let methods =
        parse_methods(a.methods.as_deref().unwrap_or("smint,additive,path-entire,path-partial"))?;
    let spec = StudySpec {
        p,
        n: a.n.unwrap_or(500),
        pc: a.pc.unwrap_or(2.0 / (p as f64 - 1.0)),
        mech: MechFamily::parse(a.mech.as_deref().unwrap_or("sigmoid"))?,
        replications: a.replications.unwrap_or(20),
        methods,
        pair_rule: match a.pairs {
            Some(k) => PairRule::RandomDirected(k),
            None => PairRule::AllDirected,
        },
        perturb,
        oracle_b: a.oracle_b,
        path_b: a.path_b,
        seed: a.seed,
    };
    let result = if perturbed { perturbed_dag_study(&spec)? } else { known_dag_study(&spec)? };
    for f in &result.failures {
        log::warn!("{f}");
    }
    write_study(&a.out_dir, &result)?;
    for s in result.summaries() {
        let h = s.h.map_or("-".to_string(), |v| v.to_string());
        println!(
            "method={} h={} runs={} median_error={} q1={} q3={}",
            s.method,
            h,
            s.runs,
            format_real(s.median_error),
            format_real(s.q1_error),
            format_real(s.q3_error)
        );
    }
    Ok(())
}

fn nonadd(a: &BenchmarkArgs) -> Result<()> {
    reject_study_flags(a)?;
    let n = a.n.unwrap_or(10_000);
    let grid_points = a.grid_points.unwrap_or(51);
    let mut rows = Vec::new();
    for r in 0..a.replications.unwrap_or(1) {
        rows.extend(nonadd_misspec_experiment(n, grid_points, a.seed.wrapping_add(r as u64))?);
    }
    for row in &rows {
        println!(
            "seed={} method={} error={} seconds={:.2}",
            row.seed,
            row.method,
            format_real(row.error),
            row.seconds
        );
    }
    write_rows(&a.out_dir, &rows, "nonadd", n, a.seed)
}

fn interaction(a: &BenchmarkArgs) -> Result<()> {
    reject_study_flags(a)?;
    if a.grid_points.is_some() {
        return Err(Error::InvalidParam("--grid-points applies to the nonadd experiment".into()));
    }
    let n = a.n.unwrap_or(10_000);
    let mut rows = Vec::new();
    for r in 0..a.replications.unwrap_or(1) {
        rows.push(interaction_boost_experiment(n, a.seed.wrapping_add(r as u64))?);
    }
    for row in &rows {
        println!(
            "seed={} ise_boosted={} ise_additive={} iterations={} stop={}",
            row.seed,
            format_real(row.ise_boosted),
            format_real(row.ise_additive),
            row.iterations,
            row.stop
        );
    }
    write_rows(&a.out_dir, &rows, "interaction", n, a.seed)
}

/// The fixed-model experiments have their generating model baked in.
fn reject_study_flags(a: &BenchmarkArgs) -> Result<()> {
    for (set, flag) in [
        (a.p.is_some(), "--p"),
        (a.pc.is_some(), "--pc"),
        (a.hr.is_some(), "--hr"),
        (a.pairs.is_some(), "--pairs"),
        (a.mech.is_some(), "--mech"),
        (a.methods.is_some(), "--methods"),
        (a.oracle_b.is_some(), "--oracle-b"),
        (a.path_b.is_some(), "--path-b"),
    ] {
        if set {
            return Err(Error::InvalidParam(format!(
                "{flag} applies to the known-dag and perturbed experiments"
            )));
        }
    }
    Ok(())
}

fn parse_hr(list: &str) -> Result<Vec<PerturbLevel>> {
    let mut out = Vec::new();
    for tok in list.split(',') {
        let tok = tok.trim();
        if tok.is_empty() {
            continue;
        }
        let h: usize = tok
            .parse()
            .map_err(|_| Error::InvalidParam(format!("bad perturbation distance '{tok}'")))?;
        out.push(PerturbLevel::Fixed(h));
    }
    if out.is_empty() {
        return Err(Error::InvalidParam("--hr lists no distances".into()));
    }
    Ok(out)
}

fn parse_methods(list: &str) -> Result<Vec<Method>> {
    let mut out = Vec::new();
    for tok in list.split(',') {
        let tok = tok.trim();
        if tok.is_empty() {
            continue;
        }
        let m = Method::parse(tok)?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidParam("--methods lists no methods".into()));
    }
    Ok(out)
}

fn write_study(dir: &Path, result: &StudyResult) -> Result<()> {
    let results = dir.join("results.csv");
    result.write_csv(BufWriter::new(File::create(&results)?))?;
    println!("wrote {}", results.display());
    let summary = dir.join("summary.json");
    write_json(&summary, &result.summary_json())?;
    println!("wrote {}", summary.display());
    Ok(())
}

fn write_rows<T: serde::Serialize>(
    dir: &Path,
    rows: &[T],
    experiment: &str,
    n: usize,
    seed: u64,
) -> Result<()> {
    let results = dir.join("results.csv");
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&results)?));
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    println!("wrote {}", results.display());
    let summary = dir.join("summary.json");
    let value = serde_json::json!({
        "experiment": experiment,
        "n": n,
        "seed": seed,
        "rows": rows,
    });
    write_json(&summary, &value)?;
    println!("wrote {}", summary.display());
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| Error::DataFormat(format!("cannot serialize summary: {e}")))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
