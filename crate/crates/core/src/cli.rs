//! Command-line front end: argument parsing, report envelopes, exit codes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::coordinator::{alternating_best_response, p2_brute_force, solve_coordinator, verify_dominance, verify_equivalence_p2};
use crate::engine::{expected_distortion_exact_with, simulate_mc_with, trace_rollout, SystemAssembly};
use crate::error::Error;
use crate::model::{validate, Instance, MemoryMode};
use crate::oracle::{
    enumerate_global_optimum, verify_lemma3_markov, verify_no_randomization_gain, verify_theorem1, verify_theorem2, BeliefVariant, SearchBudget, GAP_TOL,
};
use crate::policies::{Decoder, EncoderPolicy, PolicyFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "mtcode", version, about = "Exact evaluation, brute-force verification and dynamic programming for real-time multi-encoder coding")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads for Monte Carlo shards and brute-force partitions.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here; stdout then gets a short summary table.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct BudgetArgs {
    #[arg(long, default_value_t = 10_000_000)]
    pub max_strategies: u128,
    #[arg(long, default_value_t = 100_000_000)]
    pub max_atoms: u128,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check an instance file against the schema and probability constraints.
    Validate {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Exact expected distortion of a policy.
    Exact {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        policy: PathBuf,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Monte Carlo estimate of the expected distortion.
    Mc {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        policy: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Global optimum over all encoders, memory rules and decoders.
    Brute {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        budget: BudgetArgs,
        /// Write the optimal policy here.
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Structural checks; with no selection, every check applicable to the inputs runs.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        /// Fixed policy (decoder check; fixed encoders for the coordinator checks).
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long)]
        theorem1: bool,
        #[arg(long)]
        theorem2: bool,
        #[arg(long)]
        lemma3: bool,
        #[arg(long)]
        randomization: bool,
        #[arg(long)]
        equivalence: bool,
        #[arg(long)]
        dominance: bool,
        #[arg(long, default_value_t = 50)]
        mixtures: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        target: usize,
        #[arg(long, default_value_t = 100_000)]
        max_histories: usize,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Solve the coordinator dynamic program for one encoder, the others fixed.
    Dp {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        policy: PathBuf,
        #[arg(long, default_value_t = 0)]
        target: usize,
        /// Snap latent beliefs to a grid of this resolution (approximate).
        #[arg(long)]
        grid: Option<usize>,
        /// Write the policy with the optimized encoder here.
        #[arg(long)]
        extract: Option<PathBuf>,
        /// Write the state graph as diagnostic JSON here.
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Compare against brute force over the same strategy class.
        #[arg(long)]
        cross_check: bool,
        /// Alternating best-response sweeps over all encoders (heuristic).
        #[arg(long, default_value_t = 0)]
        sweeps: usize,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Dump one sampled trajectory.
    Trace {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        policy: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Outcome of a command before it is rendered.
pub struct Outcome {
    pub command: &'static str,
    pub instance_hash: Option<String>,
    pub seed: Option<u64>,
    pub budget: Option<SearchBudget>,
    pub pass: Option<bool>,
    pub result: Value,
}

fn to_value<T: Serialize>(v: &T) -> crate::Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn load_instance(p: &Path) -> crate::Result<Instance> {
    Instance::from_json_str(&fs::read_to_string(p)?)
}

fn load_assembly(inst: &Instance, p: &Path) -> crate::Result<SystemAssembly> {
    SystemAssembly::from_policy(inst.clone(), PolicyFile::from_json_str(&fs::read_to_string(p)?)?)
}

fn budget_of(b: &BudgetArgs, workers: usize) -> SearchBudget {
    SearchBudget { max_strategies: b.max_strategies, max_atoms: b.max_atoms, workers, ..SearchBudget::default() }
}

fn write_json<T: Serialize>(p: &Path, v: &T) -> crate::Result<()> {
    fs::write(p, serde_json::to_string_pretty(v)? + "\n")?;
    Ok(())
}

pub fn execute(cli: &Cli) -> crate::Result<Outcome> {
    let workers = cli.workers.max(1);
    match &cli.command {
        Command::Validate { instance } => {
            let text = fs::read_to_string(instance)?;
            let inst: Instance = serde_json::from_str(&text)?;
            let rep = validate(&inst);
            if !rep.ok() {
                return Err(Error::Invalid(rep));
            }
            Ok(Outcome {
                command: "validate",
                instance_hash: Some(inst.content_hash()),
                seed: None,
                budget: None,
                pass: Some(true),
                result: json!({ "violations": [] }),
            })
        }
        Command::Exact { instance, policy, budget } => {
            let inst = load_instance(instance)?;
            let asm = load_assembly(&inst, policy)?;
            let rep = expected_distortion_exact_with(&asm, budget.max_atoms)?;
            Ok(Outcome { command: "exact", instance_hash: Some(inst.content_hash()), seed: None, budget: Some(budget_of(budget, workers)), pass: None, result: to_value(&rep)? })
        }
        Command::Mc { instance, policy, samples, seed } => {
            let inst = load_instance(instance)?;
            let asm = load_assembly(&inst, policy)?;
            let rep = simulate_mc_with(&asm, *samples, *seed, workers)?;
            Ok(Outcome { command: "mc", instance_hash: Some(inst.content_hash()), seed: Some(*seed), budget: None, pass: None, result: to_value(&rep)? })
        }
        Command::Brute { instance, budget, witness } => {
            let inst = load_instance(instance)?;
            let b = budget_of(budget, workers);
            let opt = enumerate_global_optimum(&inst, &b)?;
            let pf = opt.witness.policy_file();
            if let Some(p) = witness {
                write_json(p, &pf)?;
            }
            let result = json!({
                "cost": opt.cost,
                "witness_cost": opt.witness_cost,
                "defaulted_decoder_entries": opt.defaulted_decoder_entries,
                "counts": to_value(&opt.counts)?,
                "witness": to_value(&pf)?,
            });
            Ok(Outcome { command: "brute", instance_hash: Some(inst.content_hash()), seed: None, budget: Some(b), pass: None, result })
        }
        Command::Verify { instance, policy, theorem1, theorem2, lemma3, randomization, equivalence, dominance, mixtures, seed, target, max_histories, budget } => {
            let inst = load_instance(instance)?;
            let b = budget_of(budget, workers);
            let asm = policy.as_ref().map(|p| load_assembly(&inst, p)).transpose()?;
            let perfect = inst.receiver.mode == MemoryMode::Perfect;
            let any = *theorem1 || *theorem2 || *lemma3 || *randomization || *equivalence || *dominance;
            let mut out = Map::new();
            let mut pass = true;
            if *theorem1 || (!any && !perfect) {
                let r = verify_theorem1(&inst, &b)?;
                pass &= r.pass;
                out.insert("theorem1".into(), to_value(&r)?);
            }
            if *theorem2 || (!any && asm.is_some()) {
                let a = asm.as_ref().ok_or_else(|| Error::InvalidArgument("--theorem2 needs --policy".into()))?;
                let r = verify_theorem2(a, &b)?;
                pass &= r.pass;
                out.insert("theorem2".into(), to_value(&r)?);
            }
            if *lemma3 || (!any && !perfect) {
                let mut per = Vec::new();
                for i in 0..inst.n() {
                    let exact = verify_lemma3_markov(&inst, &inst.receiver, i, BeliefVariant::Exact, *max_histories)?;
                    let control = verify_lemma3_markov(&inst, &inst.receiver, i, BeliefVariant::DropPrevious, *max_histories)?;
                    pass &= exact.pass;
                    per.push(json!({ "exact": to_value(&exact)?, "negative_control": to_value(&control)? }));
                }
                out.insert("lemma3".into(), Value::Array(per));
            }
            if *randomization || (!any && !perfect) {
                let r = verify_no_randomization_gain(&inst, *mixtures, *seed, &b)?;
                pass &= r.pass;
                out.insert("randomization".into(), to_value(&r)?);
            }
            let fixed = || -> crate::Result<&SystemAssembly> { asm.as_ref().ok_or_else(|| Error::InvalidArgument("coordinator checks need --policy for the fixed encoders".into())) };
            if *equivalence || (!any && perfect && asm.is_some()) {
                let a = fixed()?;
                let r = verify_equivalence_p2(&inst, &a.encoders, &a.receiver, *target, &b)?;
                pass &= r.pass;
                out.insert("equivalence".into(), to_value(&r)?);
            }
            if *dominance || (!any && perfect && asm.is_some()) {
                let a = fixed()?;
                let r = verify_dominance(&inst, &a.encoders, &a.receiver, *target, &b)?;
                pass &= r.pass;
                out.insert("dominance".into(), to_value(&r)?);
            }
            if out.is_empty() {
                return Err(Error::InvalidArgument("no check applies to these inputs".into()));
            }
            Ok(Outcome { command: "verify", instance_hash: Some(inst.content_hash()), seed: Some(*seed), budget: Some(b), pass: Some(pass), result: Value::Object(out) })
        }
        Command::Dp { instance, policy, target, grid, extract, graph, cross_check, sweeps, budget } => {
            let inst = load_instance(instance)?;
            let b = budget_of(budget, workers);
            let asm = load_assembly(&inst, policy)?;
            let sol = solve_coordinator(&inst, &asm.encoders, &asm.receiver, *target, &b, *grid)?;
            let mut encoders = asm.encoders.clone();
            encoders[*target] = EncoderPolicy::XiStructured(sol.encoder.clone());
            let optimized = SystemAssembly { instance: inst.clone(), encoders, receiver: asm.receiver.clone(), decoder: Decoder::Tau };
            let exact = expected_distortion_exact_with(&optimized, b.max_atoms)?;
            if let Some(p) = extract {
                write_json(p, &optimized.policy_file())?;
            }
            if let Some(p) = graph {
                write_json(p, &sol.graph)?;
            }
            let mut res = Map::new();
            res.insert("target".into(), json!(target));
            res.insert("value".into(), json!(sol.values.v0));
            res.insert("exact_cost".into(), json!(exact.total));
            res.insert("per_stage".into(), json!(exact.per_stage));
            res.insert("states_per_stage".into(), json!(sol.graph.catalog.stages.iter().map(Vec::len).collect::<Vec<_>>()));
            res.insert("edges".into(), json!(sol.graph.edge_count()));
            res.insert("latent_beliefs".into(), json!(sol.graph.catalog.b_set.len()));
            res.insert("grid".into(), json!(grid));
            let mut pass = None;
            let replay_gap = (exact.total - sol.values.v0).abs();
            res.insert("replay_gap".into(), json!(replay_gap));
            if *cross_check {
                let bf = p2_brute_force(&inst, &asm.encoders, &asm.receiver, *target, &b)?;
                let gap = (bf.min_cost - sol.values.v0).abs();
                res.insert("brute_force".into(), json!({ "min_cost": bf.min_cost, "strategies": bf.strategies, "gap": gap }));
                pass = Some(grid.is_some() || (gap <= GAP_TOL && replay_gap <= GAP_TOL));
            }
            if *sweeps > 0 {
                let h = alternating_best_response(&inst, &asm.encoders, &asm.receiver, &b, *sweeps, 1e-12)?;
                res.insert(
                    "heuristic_best_response".into(),
                    json!({ "heuristic": true, "steps": to_value(&h.steps)?, "final_cost": h.final_cost, "converged": h.converged }),
                );
            }
            Ok(Outcome { command: "dp", instance_hash: Some(inst.content_hash()), seed: None, budget: Some(b), pass, result: Value::Object(res) })
        }
        Command::Trace { instance, policy, seed } => {
            let inst = load_instance(instance)?;
            let asm = load_assembly(&inst, policy)?;
            let tr = trace_rollout(&asm, *seed)?;
            Ok(Outcome { command: "trace", instance_hash: Some(inst.content_hash()), seed: Some(*seed), budget: None, pass: None, result: to_value(&tr)? })
        }
    }
}

/// Report envelope; keys come out sorted so reruns are byte-identical.
pub fn envelope(o: &Outcome) -> Value {
    let budgets = o.budget.as_ref().map(|b| json!({ "max_strategies": u64::try_from(b.max_strategies).unwrap_or(u64::MAX), "max_atoms": u64::try_from(b.max_atoms).unwrap_or(u64::MAX), "workers": b.workers }));
    json!({
        "tool": "mtcode",
        "version": env!("CARGO_PKG_VERSION"),
        "command": o.command,
        "instance_hash": o.instance_hash,
        "seed": o.seed,
        "budgets": budgets,
        "status": match o.pass { Some(true) => "pass", Some(false) => "fail", None => "ok" },
        "result": o.result,
    })
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") }, x, rows);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, rows);
            }
        }
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}

pub fn render(report: &Value, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(report).expect("serializable") + "\n",
        Format::Csv => {
            let mut rows = Vec::new();
            flatten("", report, &mut rows);
            let mut s = String::from("key,value\n");
            for (k, v) in rows {
                let v = if v.contains([',', '"', '\n']) { format!("\"{}\"", v.replace('"', "\"\"")) } else { v };
                s.push_str(&format!("{k},{v}\n"));
            }
            s
        }
    }
}

/// Scalar top-level result fields in fixed-width columns.
pub fn summary_table(report: &Value) -> String {
    let mut s = format!("{:<32} {:>26}\n", "field", "value");
    for key in ["command", "status", "instance_hash"] {
        if let Some(v) = report.get(key).and_then(Value::as_str) {
            s.push_str(&format!("{key:<32} {v:>26.26}\n"));
        }
    }
    if let Some(Value::Object(m)) = report.get("result") {
        for (k, v) in m {
            let cell = match v {
                Value::Number(_) | Value::Bool(_) => v.to_string(),
                Value::String(x) => x.clone(),
                _ => continue,
            };
            s.push_str(&format!("{k:<32} {cell:>26}\n"));
        }
    }
    s
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::BudgetExceeded { .. } => EXIT_BUDGET,
        _ => EXIT_USAGE,
    }
}

/// Parse, execute and print; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match execute(&cli) {
        Ok(outcome) => {
            let report = envelope(&outcome);
            let text = render(&report, cli.format);
            let written = match &cli.output {
                Some(p) => fs::write(p, &text).map(|_| summary_table(&report)),
                None => Ok(text),
            };
            match written {
                Ok(s) => {
                    let _ = std::io::stdout().write_all(s.as_bytes());
                    if outcome.pass == Some(false) {
                        EXIT_FAIL
                    } else {
                        EXIT_OK
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_USAGE
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
