//! Command-line harness: graph generation, predicate checks, structure
//! extraction, size solving and sweeps, the achievable-size oracle,
//! anti-concentration engines, and config-driven experiments with
//! deterministic CSV/JSON reports.
//!
//! Exit codes: 0 = pass, 1 = assertion failures (enumerated in the
//! report), 2 = usage or config error.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use sizespan::anticonc::{
    binomial_mod_distribution, collision_probability_estimate, empirical_band_threshold,
    max_point_probability, CollisionEvent,
};
use sizespan::bitset::Bitset;
use sizespan::generate::{generate, GraphModel, GraphSpec};
use sizespan::graph::{BipartiteGraph, Side};
use sizespan::metrics::{
    degree_typical_vertices, density_in_bounds, diversity_violations,
    find_private_neighborhood_seq, is_c_ramsey, pair_diversity_violations_sampled,
    richness_check, RamseyParams, RamseyVerdict, RichnessReport,
};
use sizespan::rng::{derive_seed, RNG_ALGORITHM};
use sizespan::solver::{achievable_sizes_oracle, Solver, SolverConfig};
use sizespan::structure::extract_disjoint_family;

#[derive(Parser)]
#[command(name = "sizespan", version, about = "Induced-subgraph edge-size toolkit for bipartite graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a bipartite graph and write its edge-list file.
    Gen(GenArgs),
    /// Run structural predicates and emit a JSON verdict report.
    Check(CheckArgs),
    /// Extract a vertex-disjoint family of pair structures as JSON.
    Extract(ExtractArgs),
    /// Find a verified witness for a single target edge count.
    Solve(SolveArgs),
    /// Solve every target in a range; write coverage CSV and witnesses.
    Sweep(SweepArgs),
    /// Exact achievable-size set by exhaustive search (small graphs).
    Oracle(OracleArgs),
    /// Anti-concentration engines emitting (engine, params-hash, value,
    /// radius, seed) CSV rows.
    Anticonc(AnticoncArgs),
    /// Run a config-file-driven experiment; reports under --out.
    Experiment(ExperimentArgs),
}

/// How to obtain the input graph: an edge-list file or a generator model.
#[derive(Args, Clone)]
struct GraphArgs {
    /// Edge-list file (`p bip <n1> <n2>` header, `e <i> <j>` lines).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Generator model: uniform | complete | edgeless.
    #[arg(long, default_value = "uniform")]
    model: String,
    #[arg(long, default_value_t = 64)]
    n1: usize,
    #[arg(long, default_value_t = 64)]
    n2: usize,
    /// Edge probability for the uniform model.
    #[arg(long, default_value_t = 0.5)]
    p: f64,
}

impl GraphArgs {
    fn resolve(&self, seed: u64) -> Result<BipartiteGraph> {
        if let Some(path) = &self.input {
            let file = fs::File::open(path).with_context(|| format!("open {}", path.display()))?;
            return Ok(BipartiteGraph::read_edge_list(std::io::BufReader::new(file))?);
        }
        build_graph(&self.model, self.n1, self.n2, self.p, seed)
    }
}

fn build_graph(model: &str, n1: usize, n2: usize, p: f64, seed: u64) -> Result<BipartiteGraph> {
    let model = match model {
        "uniform" => GraphModel::Uniform { p },
        "complete" => GraphModel::Complete,
        "edgeless" => GraphModel::Edgeless,
        other => bail!("unknown model '{other}' (expected uniform | complete | edgeless)"),
    };
    Ok(generate(&GraphSpec { model, n1, n2, seed })?)
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; the graph goes to `<out>/graph.edges` (stdout
    /// if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Ramsey constant.
    #[arg(long)]
    c: Option<f64>,
    /// Diversity radius as a fraction of the opposite class.
    #[arg(long, default_value_t = 0.1)]
    diversity_c: f64,
    /// Richness parameters (refutation search above exhaustive scale).
    #[arg(long, default_value_t = 0.5)]
    richness_delta: f64,
    #[arg(long, default_value_t = 0.05)]
    richness_eps: f64,
    #[arg(long, default_value_t = 200)]
    richness_trials: usize,
    /// Pair-diversity covering radius; defaults to alpha * eps / 2, the
    /// radius richness actually controls.
    #[arg(long)]
    pair_c: Option<f64>,
    #[arg(long, default_value_t = 0.25)]
    pair_alpha: f64,
    /// Base pairs are sampled beyond this cap.
    #[arg(long, default_value_t = 2000)]
    pair_cap: usize,
    /// Private-neighborhood sequence shape to attempt.
    #[arg(long, default_value_t = 4)]
    seq_len: usize,
    #[arg(long, default_value_t = 2)]
    seq_min_private: usize,
}

#[derive(Args)]
struct ExtractArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    /// Members per structure.
    #[arg(long, default_value_t = 8)]
    size: usize,
    /// Number of vertex-disjoint structures.
    #[arg(long, default_value_t = 4)]
    family: usize,
    /// Class to extract from: v1 | v2.
    #[arg(long, default_value = "v1")]
    side: String,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Target induced edge count.
    #[arg(long)]
    target: u64,
    #[arg(long)]
    c: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    from: u64,
    #[arg(long)]
    to: u64,
    #[arg(long)]
    c: Option<f64>,
    /// Fail (exit 1) unless every target in range is solved.
    #[arg(long)]
    assert_full: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Largest enumerable class size.
    #[arg(long, default_value_t = 20)]
    budget: usize,
    /// Also run the solver on every target and assert exact agreement.
    #[arg(long)]
    compare_solver: bool,
    #[arg(long)]
    c: Option<f64>,
}

#[derive(Args)]
struct AnticoncArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// binomial-mod | litoff | collision.
    #[arg(long)]
    engine: String,
    #[arg(long, default_value_t = 2)]
    d_from: usize,
    #[arg(long, default_value_t = 6)]
    d_to: usize,
    #[arg(long, default_value_t = 50)]
    n_from: usize,
    #[arg(long, default_value_t = 200)]
    n_to: usize,
    /// Graph size for the collision engine.
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 50)]
    pairs: usize,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Flat key-value config file (see `docs/config-format.md`).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the `out` key of the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the `seed` key of the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Check(a) => cmd_check(a),
        Command::Extract(a) => cmd_extract(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Anticonc(a) => cmd_anticonc(a),
        Command::Experiment(a) => cmd_experiment(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn out_file(out: &Option<PathBuf>, name: &str) -> Result<Option<PathBuf>> {
    match out {
        None => Ok(None),
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("create {}", dir.display()))?;
            Ok(Some(dir.join(name)))
        }
    }
}

fn emit(path: Option<PathBuf>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(&p, bytes).with_context(|| format!("write {}", p.display())),
        None => {
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("write {}", path.display()))
}

fn merged_u64(flag: Option<u64>, cfg: &FlatConfig, key: &str, default: u64) -> Result<u64> {
    match flag {
        Some(v) => Ok(v),
        None => cfg.u64_or(key, default),
    }
}

fn merged_f64(flag: Option<f64>, cfg: &FlatConfig, key: &str, default: f64) -> Result<f64> {
    match flag {
        Some(v) => Ok(v),
        None => cfg.f64_or(key, default),
    }
}

fn fnv1a(data: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in data.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

fn f(x: f64) -> String {
    format!("{x:.6}")
}

fn cmd_gen(a: GenArgs) -> Result<bool> {
    let cfg = FlatConfig::load_opt(&a.config)?;
    let seed = merged_u64(a.seed, &cfg, "seed", 0)?;
    let g = a.graph.resolve(seed)?;
    let mut bytes = Vec::new();
    g.write_edge_list(&mut bytes)?;
    emit(out_file(&a.out, "graph.edges")?, &bytes)?;
    eprintln!("generated {}x{} graph with {} edges", g.n1(), g.n2(), g.edge_count());
    Ok(true)
}

fn cmd_check(a: CheckArgs) -> Result<bool> {
    let cfg = FlatConfig::load_opt(&a.config)?;
    let seed = merged_u64(a.seed, &cfg, "seed", 0)?;
    let c = merged_f64(a.c, &cfg, "c", 2.0)?;
    let g = a.graph.resolve(seed)?;
    let params = RamseyParams::new(c)?;
    let mut report = Vec::new();

    let ramsey = is_c_ramsey(&g, &params);
    report.push(json!({
        "predicate": "is_c_ramsey",
        "params": {"c": c},
        "verdict": match &ramsey {
            RamseyVerdict::Ramsey => "ramsey",
            RamseyVerdict::NotRamsey(_) => "not-ramsey",
            RamseyVerdict::DegenerateThreshold => "degenerate-threshold",
            RamseyVerdict::Unknown => "unknown",
        },
        "witness": match &ramsey {
            RamseyVerdict::NotRamsey(w) => serde_json::to_value(w)?,
            _ => serde_json::Value::Null,
        },
    }));

    report.push(json!({
        "predicate": "density_in_bounds",
        "params": {"c": c, "density": g.density()},
        "verdict": density_in_bounds(&g, &params),
        "witness": null,
    }));

    for side in [Side::V1, Side::V2] {
        let typical = degree_typical_vertices(&g, side, &params);
        report.push(json!({
            "predicate": "degree_typical_vertices",
            "params": {"c": c, "side": format!("{side}")},
            "verdict": 3 * typical.count() >= 2 * g.class_size(side),
            "witness": {"count": typical.count()},
        }));
    }

    let dc = cfg.f64_or("diversity_c", a.diversity_c)?;
    for side in [Side::V1, Side::V2] {
        let violations = diversity_violations(&g, side, dc);
        report.push(json!({
            "predicate": "diversity_violations",
            "params": {"c": dc, "side": format!("{side}")},
            "verdict": violations.is_empty(),
            "witness": violations,
        }));
    }

    for side in [Side::V1, Side::V2] {
        let outcome = richness_check(
            &g,
            side,
            a.richness_delta,
            a.richness_eps,
            a.richness_trials,
            derive_seed(seed, 3),
        );
        let (verdict, witness) = match &outcome {
            RichnessReport::Violated { w, deficient } => (
                "violated",
                json!({"w": w.indices(), "deficient": deficient.indices()}),
            ),
            RichnessReport::ExhaustivelyRich { subsets_checked } => {
                ("rich", json!({"subsets_checked": subsets_checked}))
            }
            RichnessReport::NoViolationFound { trials } => {
                ("no-violation-found", json!({"trials": trials}))
            }
        };
        report.push(json!({
            "predicate": "richness",
            "params": {
                "delta": a.richness_delta,
                "eps": a.richness_eps,
                "side": format!("{side}"),
            },
            "verdict": verdict,
            "witness": witness,
        }));
    }

    let pair_c = a.pair_c.unwrap_or(a.pair_alpha * a.richness_eps / 2.0);
    for side in [Side::V1, Side::V2] {
        let violations = pair_diversity_violations_sampled(
            &g,
            side,
            pair_c,
            a.pair_alpha,
            a.pair_cap,
            derive_seed(seed, 4),
        );
        let listed: Vec<serde_json::Value> = violations
            .iter()
            .map(|(p, k)| json!({"u": p.u, "v": p.v, "packed": k}))
            .collect();
        report.push(json!({
            "predicate": "pair_diversity_violations",
            "params": {
                "c": pair_c,
                "alpha": a.pair_alpha,
                "cap": a.pair_cap,
                "side": format!("{side}"),
            },
            "verdict": violations.is_empty(),
            "witness": listed,
        }));
    }

    let seq_report = match find_private_neighborhood_seq(&g, a.seq_len, a.seq_min_private) {
        Ok(seq) => {
            seq.verify(&g, a.seq_min_private)?;
            json!({
                "predicate": "private_neighborhood_seq",
                "params": {"l": a.seq_len, "min_private": a.seq_min_private},
                "verdict": true,
                "witness": {"vertices": seq.vertices},
            })
        }
        Err(sizespan::Error::PrivateSeqFailure { step }) => json!({
            "predicate": "private_neighborhood_seq",
            "params": {"l": a.seq_len, "min_private": a.seq_min_private},
            "verdict": false,
            "witness": {"failed_at_step": step},
        }),
        Err(e) => return Err(e.into()),
    };
    report.push(seq_report);

    let bytes = serde_json::to_vec_pretty(&report)?;
    emit(out_file(&a.out, "check.json")?, &bytes)?;
    Ok(true)
}

fn parse_side(s: &str) -> Result<Side> {
    match s {
        "v1" | "V1" => Ok(Side::V1),
        "v2" | "V2" => Ok(Side::V2),
        other => bail!("unknown side '{other}'"),
    }
}

fn cmd_extract(a: ExtractArgs) -> Result<bool> {
    let cfg = FlatConfig::load_opt(&a.config)?;
    let seed = merged_u64(a.seed, &cfg, "seed", 0)?;
    let g = a.graph.resolve(seed)?;
    let side = parse_side(&a.side)?;
    let forbidden = Bitset::new(g.class_size(side));
    match extract_disjoint_family(&g, side, a.eps, a.size, a.family, &forbidden, seed) {
        Ok(family) => {
            for s in &family {
                s.verify(&g)?;
            }
            let bytes = serde_json::to_vec_pretty(&family)?;
            emit(out_file(&a.out, "structures.json")?, &bytes)?;
            eprintln!("extracted {} structures", family.len());
            Ok(true)
        }
        Err(sizespan::Error::FamilyFailure { achieved, wanted }) => {
            let bytes = serde_json::to_vec_pretty(&achieved)?;
            emit(out_file(&a.out, "structures.json")?, &bytes)?;
            eprintln!("extraction fell short: {}/{} structures", achieved.len(), wanted);
            Ok(false)
        }
        Err(e) => Err(e.into()),
    }
}

fn solver_config(cfg: &FlatConfig, seed: u64, c: f64) -> Result<SolverConfig> {
    let mut sc = SolverConfig { seed, ramsey_c: c, ..SolverConfig::default() };
    if let Some(v) = cfg.f64_opt("eps")? {
        sc.eps = v;
    }
    if let Some(v) = cfg.f64_opt("delta")? {
        sc.delta = v;
    }
    if let Some(v) = cfg.u64_opt("d0")? {
        sc.d0 = v as u32;
    }
    if let Some(v) = cfg.u64_opt("fallback_budget")? {
        sc.fallback_budget = v as usize;
    }
    if let Some(v) = cfg.u64_opt("good_w_attempts")? {
        sc.good_w_attempts = v as usize;
    }
    Ok(sc)
}

fn witness_json(target: u64, w: &sizespan::solver::SizeWitness) -> serde_json::Value {
    json!({
        "target": target,
        "u1": w.u1.indices(),
        "u2": w.u2.indices(),
        "provenance": serde_json::to_value(&w.provenance).unwrap(),
    })
}

fn cmd_solve(a: SolveArgs) -> Result<bool> {
    let cfg = FlatConfig::load_opt(&a.config)?;
    let seed = merged_u64(a.seed, &cfg, "seed", 0)?;
    let c = merged_f64(a.c, &cfg, "c", 2.0)?;
    let g = a.graph.resolve(seed)?;
    let sc = solver_config(&cfg, seed, c)?;
    let mut solver = Solver::new(&g, sc);
    match solver.solve_target(a.target) {
        Ok(w) => {
            w.verify(&g)?;
            let mut bytes = serde_json::to_vec_pretty(&witness_json(a.target, &w))?;
            bytes.push(b'\n');
            emit(out_file(&a.out, "witness.json")?, &bytes)?;
            Ok(true)
        }
        Err(sizespan::Error::Unsolved { target, attempted }) => {
            eprintln!("target {target} unsolved (paths: {})", attempted.join(", "));
            Ok(false)
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_sweep(a: SweepArgs) -> Result<bool> {
    let cfg = FlatConfig::load_opt(&a.config)?;
    let seed = merged_u64(a.seed, &cfg, "seed", 0)?;
    let c = merged_f64(a.c, &cfg, "c", 2.0)?;
    let g = a.graph.resolve(seed)?;
    let sc = solver_config(&cfg, seed, c)?;
    let mut solver = Solver::new(&g, sc);
    let mut rows = Vec::new();
    let mut witness_lines = Vec::new();
    let mut covered = 0u64;
    for m in a.from..=a.to {
        match solver.solve_target(m) {
            Ok(w) => {
                w.verify(&g)?;
                covered += 1;
                let path = provenance_name(&w.provenance);
                rows.push(vec![m.to_string(), "1".into(), path.into()]);
                witness_lines.push(serde_json::to_string(&witness_json(m, &w))?);
            }
            Err(sizespan::Error::Unsolved { .. }) => {
                rows.push(vec![m.to_string(), "0".into(), "".into()]);
            }
            Err(e) => return Err(e.into()),
        }
    }
    let total = a.to - a.from + 1;
    let fraction = covered as f64 / total as f64;
    if let Some(path) = out_file(&a.out, "sweep.csv")? {
        write_csv(&path, &["target", "solved", "path"], &rows)?;
    }
    if let Some(path) = out_file(&a.out, "witnesses.jsonl")? {
        fs::write(path, witness_lines.join("\n") + "\n")?;
    }
    if let Some(path) = out_file(&a.out, "intervals.csv")? {
        let interval_rows: Vec<Vec<String>> = solver
            .interval_summaries()
            .iter()
            .map(|s| {
                vec![
                    s.grid.map_or_else(|| "full".into(), |(a, b)| format!("{a}x{b}")),
                    s.lo.to_string(),
                    s.hi.to_string(),
                    s.stats.w_size.to_string(),
                    s.stats.structures.to_string(),
                    s.stats.progression_d.to_string(),
                ]
            })
            .collect();
        write_csv(
            &path,
            &["grid", "lo", "hi", "w_size", "structures", "progression_d"],
            &interval_rows,
        )?;
    }
    println!("covered {covered}/{total} targets (fraction {})", f(fraction));
    Ok(!a.assert_full || covered == total)
}

fn provenance_name(p: &sizespan::solver::Provenance) -> &'static str {
    use sizespan::solver::Provenance::*;
    match p {
        Empty => "empty",
        StarSlice { .. } => "star-slice",
        Pipeline { grid: None, .. } => "pipeline",
        Pipeline { grid: Some(_), .. } => "pipeline-grid",
        Oracle => "oracle",
        Fallback { .. } => "fallback",
    }
}

fn cmd_oracle(a: OracleArgs) -> Result<bool> {
    let cfg = FlatConfig::load_opt(&a.config)?;
    let seed = merged_u64(a.seed, &cfg, "seed", 0)?;
    let g = a.graph.resolve(seed)?;
    let sizes = achievable_sizes_oracle(&g, a.budget)?;
    let rows: Vec<Vec<String>> = sizes.iter().map(|s| vec![s.to_string()]).collect();
    if let Some(path) = out_file(&a.out, "oracle.csv")? {
        write_csv(&path, &["size"], &rows)?;
    } else {
        let list: Vec<String> = sizes.iter().map(|s| s.to_string()).collect();
        println!("{}", list.join(","));
    }
    if a.compare_solver {
        let sc = solver_config(&cfg, seed, merged_f64(a.c, &cfg, "c", 2.0)?)?;
        let mut solver = Solver::new(&g, sc);
        let cap = (g.n1() * g.n2()) as u64;
        for m in 0..=cap {
            let solved = solver.solve_target(m).is_ok();
            if solved != sizes.contains(&m) {
                eprintln!("disagreement at {m}: solver={solved}, oracle={}", sizes.contains(&m));
                return Ok(false);
            }
        }
        println!("solver agrees with oracle on all {} targets", cap + 1);
    }
    Ok(true)
}

fn cmd_anticonc(a: AnticoncArgs) -> Result<bool> {
    let cfg = FlatConfig::load_opt(&a.config)?;
    let seed = merged_u64(a.seed, &cfg, "seed", 0)?;
    let header = ["engine", "params_hash", "value", "radius", "seed"];
    let mut rows = Vec::new();
    let mut pass = true;
    match a.engine.as_str() {
        "binomial-mod" => {
            for d in a.d_from..=a.d_to {
                // Record where the band first settles for this modulus.
                let threshold = empirical_band_threshold(d, a.n_to.max(400));
                let hash = fnv1a(&format!("binomial-mod-threshold d={d}"));
                rows.push(vec![
                    "binomial-mod-threshold".into(),
                    hash,
                    threshold.map_or_else(|| "unsettled".into(), |n| n.to_string()),
                    f(0.0),
                    "0".into(),
                ]);
                for n in a.n_from..=a.n_to {
                    let dist = binomial_mod_distribution(n, d);
                    pass &= dist.within_band();
                    for (k, p) in dist.probabilities().iter().enumerate() {
                        let hash = fnv1a(&format!("binomial-mod n={n} d={d} k={k}"));
                        rows.push(vec![
                            "binomial-mod".into(),
                            hash,
                            format!("{p:.12}"),
                            f(0.0),
                            "0".into(),
                        ]);
                    }
                }
            }
        }
        "litoff" => {
            for n in [a.n_from, a.n_to] {
                let p = max_point_probability(&vec![1i64; n], &vec![0.5; n])?;
                let hash = fnv1a(&format!("litoff n={n}"));
                rows.push(vec!["litoff".into(), hash, format!("{p:.12}"), f(0.0), "0".into()]);
            }
        }
        "collision" => {
            let g = build_graph("uniform", a.n, a.n, a.p, seed)?;
            let mut found = 0usize;
            let mut u = 0usize;
            while found < a.pairs && u + 1 < a.n {
                let v = u + 1;
                let div = g.div(Side::V1, u, v)?.count();
                if div * 4 >= a.n {
                    let est = collision_probability_estimate(
                        &g,
                        &CollisionEvent::Vertices { side: Side::V1, x: u, y: v },
                        a.trials,
                        derive_seed(seed, found as u64),
                    )?;
                    let hash = fnv1a(&format!("collision n={} pair=({u},{v})", a.n));
                    rows.push(vec![
                        "collision".into(),
                        hash,
                        f(est.estimate),
                        f(est.radius),
                        derive_seed(seed, found as u64).to_string(),
                    ]);
                    pass &= est.estimate <= 5.0 / (a.n as f64).sqrt();
                    found += 1;
                }
                u += 2;
            }
        }
        other => bail!("unknown engine '{other}'"),
    }
    if let Some(path) = out_file(&a.out, "anticonc.csv")? {
        write_csv(&path, &header, &rows)?;
    } else {
        let mut text = header.join(",") + "\n";
        for row in &rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        print!("{text}");
    }
    Ok(pass)
}

// ---------------------------------------------------------------------
// Flat key-value config files
// ---------------------------------------------------------------------

/// `key = value` per line; `#` starts a comment; keys are validated by
/// the consumer. Identical files always replay to identical reports.
#[derive(Default)]
struct FlatConfig {
    values: BTreeMap<String, String>,
}

impl FlatConfig {
    fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("read {}", path.display()))?;
        let mut values = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("{}:{}: expected 'key = value'", path.display(), lineno + 1);
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FlatConfig { values })
    }

    fn load_opt(path: &Option<PathBuf>) -> Result<Self> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(FlatConfig::default()),
        }
    }

    fn str_opt(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    fn str_or(&self, key: &str, default: &str) -> String {
        self.str_opt(key).unwrap_or(default).to_string()
    }

    fn u64_opt(&self, key: &str) -> Result<Option<u64>> {
        self.values
            .get(key)
            .map(|v| v.parse().map_err(|_| anyhow!("config key '{key}': bad integer '{v}'")))
            .transpose()
    }

    fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        Ok(self.u64_opt(key)?.unwrap_or(default))
    }

    fn f64_opt(&self, key: &str) -> Result<Option<f64>> {
        self.values
            .get(key)
            .map(|v| v.parse().map_err(|_| anyhow!("config key '{key}': bad number '{v}'")))
            .transpose()
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }
}

// ---------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------

const KNOWN_KEYS: &[&str] = &[
    "rng", "pipeline", "model", "n1", "n2", "p", "seed", "trials", "out", "c", "budget",
    "target_from", "target_to", "assert_coverage", "eps", "delta", "d0", "size", "family",
    "d_from", "d_to", "n_from", "n_to", "assert_band", "fallback_budget", "good_w_attempts",
    "graph_file", "assert_agree",
];

fn cmd_experiment(a: ExperimentArgs) -> Result<bool> {
    let cfg = FlatConfig::load(&a.config)?;
    for key in cfg.values.keys() {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            bail!("unknown config key '{key}'");
        }
    }
    let rng_name = cfg.str_or("rng", RNG_ALGORITHM);
    if rng_name != RNG_ALGORITHM {
        bail!("unsupported rng '{rng_name}' (this build provides '{RNG_ALGORITHM}')");
    }
    let out = match (&a.out, cfg.str_opt("out")) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => PathBuf::from(o),
        (None, None) => bail!("no output directory: pass --out or set 'out' in the config"),
    };
    fs::create_dir_all(&out).with_context(|| format!("create {}", out.display()))?;
    let seed = match a.seed {
        Some(s) => s,
        None => cfg.u64_or("seed", 0)?,
    };
    let pipeline = cfg
        .str_opt("pipeline")
        .ok_or_else(|| anyhow!("config key 'pipeline' is required"))?
        .to_string();
    let trials = cfg.u64_or("trials", 10)? as usize;

    let (header, rows, failures): (Vec<&str>, Vec<Vec<String>>, Vec<String>) =
        match pipeline.as_str() {
            "oracle-compare" => run_oracle_compare(&cfg, seed, trials)?,
            "solve-sweep" => run_solve_sweep(&cfg, seed, trials)?,
            "check" => run_check_cells(&cfg, seed, trials)?,
            "extract" => run_extract_cells(&cfg, seed, trials)?,
            "anticonc-sweep" => run_anticonc_sweep(&cfg)?,
            other => bail!("unknown pipeline '{other}'"),
        };

    write_csv(&out.join("report.csv"), &header, &rows)?;
    let summary = json!({
        "pipeline": pipeline,
        "rng": rng_name,
        "seed": seed,
        "trials": trials,
        "rows": rows.len(),
        "failures": failures,
        "pass": failures.is_empty(),
    });
    fs::write(out.join("summary.json"), serde_json::to_vec_pretty(&summary)?)?;
    if failures.is_empty() {
        println!("experiment passed ({} rows)", rows.len());
        Ok(true)
    } else {
        println!("experiment FAILED: {} assertion(s)", failures.len());
        for failure in &failures {
            println!("  {failure}");
        }
        Ok(false)
    }
}

type CellReport = (Vec<&'static str>, Vec<Vec<String>>, Vec<String>);

fn cell_graph(cfg: &FlatConfig, seed: u64, cell: usize) -> Result<(u64, BipartiteGraph)> {
    let cell_seed = derive_seed(seed, cell as u64);
    if let Some(path) = cfg.str_opt("graph_file") {
        let file = fs::File::open(path)?;
        return Ok((cell_seed, BipartiteGraph::read_edge_list(std::io::BufReader::new(file))?));
    }
    let g = build_graph(
        &cfg.str_or("model", "uniform"),
        cfg.u64_or("n1", 8)? as usize,
        cfg.u64_or("n2", 8)? as usize,
        cfg.f64_or("p", 0.5)?,
        cell_seed,
    )?;
    Ok((cell_seed, g))
}

fn run_oracle_compare(cfg: &FlatConfig, seed: u64, trials: usize) -> Result<CellReport> {
    let budget = cfg.u64_or("budget", 20)? as usize;
    let c = cfg.f64_or("c", 2.0)?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for cell in 0..trials {
        let (cell_seed, g) = cell_graph(cfg, seed, cell)?;
        let sizes = achievable_sizes_oracle(&g, budget)?;
        let sc = solver_config(cfg, cell_seed, c)?;
        let mut solver = Solver::new(&g, sc);
        let cap = (g.n1() * g.n2()) as u64;
        let mut missed = 0u64;
        let mut false_success = 0u64;
        for m in 0..=cap {
            let solved = solver.solve_target(m).is_ok();
            match (solved, sizes.contains(&m)) {
                (true, false) => false_success += 1,
                (false, true) => missed += 1,
                _ => {}
            }
        }
        let agree = missed == 0 && false_success == 0;
        if !agree {
            failures.push(format!(
                "cell {cell}: {missed} missed, {false_success} false successes"
            ));
        }
        rows.push(vec![
            cell.to_string(),
            cell_seed.to_string(),
            sizes.len().to_string(),
            missed.to_string(),
            false_success.to_string(),
            if agree { "agree" } else { "disagree" }.to_string(),
        ]);
    }
    Ok((
        vec!["cell", "seed", "achievable", "missed", "false_successes", "verdict"],
        rows,
        failures,
    ))
}

fn run_solve_sweep(cfg: &FlatConfig, seed: u64, trials: usize) -> Result<CellReport> {
    let c = cfg.f64_or("c", 2.0)?;
    let from = cfg.u64_or("target_from", 0)?;
    let to = cfg.u64_or("target_to", 64)?;
    let assert_coverage = cfg.f64_opt("assert_coverage")?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for cell in 0..trials {
        let (cell_seed, g) = cell_graph(cfg, seed, cell)?;
        let sc = solver_config(cfg, cell_seed, c)?;
        let mut solver = Solver::new(&g, sc);
        let mut covered = 0u64;
        for m in from..=to {
            if let Ok(w) = solver.solve_target(m) {
                w.verify(&g)?;
                covered += 1;
            }
        }
        let total = to - from + 1;
        let fraction = covered as f64 / total as f64;
        if let Some(floor) = assert_coverage {
            if fraction < floor {
                failures.push(format!("cell {cell}: coverage {} below {}", f(fraction), f(floor)));
            }
        }
        rows.push(vec![
            cell.to_string(),
            cell_seed.to_string(),
            covered.to_string(),
            total.to_string(),
            f(fraction),
        ]);
    }
    Ok((
        vec!["cell", "seed", "covered", "total", "coverage_fraction"],
        rows,
        failures,
    ))
}

fn run_check_cells(cfg: &FlatConfig, seed: u64, trials: usize) -> Result<CellReport> {
    let c = cfg.f64_or("c", 2.0)?;
    let params = RamseyParams::new(c)?;
    let mut rows = Vec::new();
    for cell in 0..trials {
        let (cell_seed, g) = cell_graph(cfg, seed, cell)?;
        let verdict = match is_c_ramsey(&g, &params) {
            RamseyVerdict::Ramsey => "ramsey",
            RamseyVerdict::NotRamsey(_) => "not-ramsey",
            RamseyVerdict::DegenerateThreshold => "degenerate-threshold",
            RamseyVerdict::Unknown => "unknown",
        };
        rows.push(vec![
            cell.to_string(),
            cell_seed.to_string(),
            verdict.to_string(),
            if density_in_bounds(&g, &params) { "1" } else { "0" }.to_string(),
            f(g.density()),
        ]);
    }
    Ok((
        vec!["cell", "seed", "ramsey", "density_in_bounds", "density"],
        rows,
        Vec::new(),
    ))
}

fn run_extract_cells(cfg: &FlatConfig, seed: u64, trials: usize) -> Result<CellReport> {
    let eps = cfg.f64_or("eps", 0.01)?;
    let size = cfg.u64_or("size", 8)? as usize;
    let family = cfg.u64_or("family", 4)? as usize;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for cell in 0..trials {
        let (cell_seed, g) = cell_graph(cfg, seed, cell)?;
        let forbidden = Bitset::new(g.n1());
        let outcome =
            extract_disjoint_family(&g, Side::V1, eps, size, family, &forbidden, cell_seed);
        let (achieved, ok) = match &outcome {
            Ok(f) => (f.len(), true),
            Err(sizespan::Error::FamilyFailure { achieved, .. }) => (achieved.len(), false),
            Err(e) => bail!("cell {cell}: {e}"),
        };
        if let Ok(f) = &outcome {
            for s in f {
                s.verify(&g).map_err(|e| anyhow!("cell {cell}: invariant failure: {e}"))?;
            }
        }
        if !ok {
            failures.push(format!("cell {cell}: extracted {achieved}/{family}"));
        }
        rows.push(vec![
            cell.to_string(),
            cell_seed.to_string(),
            achieved.to_string(),
            family.to_string(),
        ]);
    }
    Ok((vec!["cell", "seed", "achieved", "family"], rows, failures))
}

fn run_anticonc_sweep(cfg: &FlatConfig) -> Result<CellReport> {
    let d_from = cfg.u64_or("d_from", 2)? as usize;
    let d_to = cfg.u64_or("d_to", 6)? as usize;
    let n_from = cfg.u64_or("n_from", 50)? as usize;
    let n_to = cfg.u64_or("n_to", 200)? as usize;
    let assert_band = cfg.str_or("assert_band", "true") == "true";
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for d in d_from..=d_to {
        for n in n_from..=n_to {
            let dist = binomial_mod_distribution(n, d);
            let ok = dist.within_band();
            if assert_band && !ok {
                failures.push(format!("band violated at n={n}, d={d}"));
            }
            let probs = dist.probabilities();
            let min = probs.iter().copied().fold(f64::INFINITY, f64::min);
            let max = probs.iter().copied().fold(0.0f64, f64::max);
            rows.push(vec![
                d.to_string(),
                n.to_string(),
                format!("{min:.12}"),
                format!("{max:.12}"),
                if ok { "1" } else { "0" }.to_string(),
            ]);
        }
    }
    Ok((vec!["d", "n", "p_min", "p_max", "within_band"], rows, failures))
}
