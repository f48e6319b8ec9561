//! `fairdiv`: run the allocation procedures and fairness checks from the
//! command line. Everything printed is canonical JSON (or CSV on request).

use std::path::Path;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use fairdiv_core::allocator::{
    deterministic_envy_cycles, fair_envy_cycles_enumerate_with, fair_envy_cycles_sample_with, phase_one,
    rsd_enumerate, rsd_sample, verify_execution, DEFAULT_MAX_LEAVES,
};
use fairdiv_core::eating::multi_step_ps_lottery;
use fairdiv_core::experiment::{rsd_experiment, tight_experiment, to_csv};
use fairdiv_core::fairness::{allocation_report, expost_report};
use fairdiv_core::io;
use fairdiv_core::model::{check_class, ClassVerdict, CATALOG};
use fairdiv_core::rational::parse_rational;
use fairdiv_core::twoagents::{balanced_partition, efx_partition, impossibility_frontier, two_agent_lottery, LotteryTarget};
use fairdiv_core::{
    pad_with_dummies, paper_instance, AllocationDistribution, Error, Instance, InstanceParams, Rational, UnenviedRule,
    ValuationClass,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "fairdiv", version, about = "Randomized envy-cycle allocation with exact fairness checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// An instance file, or a catalog family name with its parameters.
#[derive(Args, Clone)]
struct InstanceArg {
    /// Path to an instance JSON file or a catalog name (see `instances list`).
    instance: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Rational such as 1/100.
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long = "big-k")]
    big_k: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one allocation procedure and report the fairness of the result.
    Allocate {
        #[command(flatten)]
        instance: InstanceArg,
        #[arg(long, value_enum, default_value = "fair")]
        algorithm: Algorithm,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Include the eating trace, matching lottery and step log.
        #[arg(long)]
        trace: bool,
        /// For `rsd`: print the exact distribution over all agent orders.
        #[arg(long)]
        exact: bool,
        /// Fail with exit code 3 unless the declared class verifies.
        #[arg(long)]
        verify_class: bool,
    },
    /// Expand every random choice of the procedure and check all guarantees.
    Enumerate {
        #[command(flatten)]
        instance: InstanceArg,
        #[arg(long, env = "FAIRDIV_MAX_LEAVES", default_value_t = DEFAULT_MAX_LEAVES)]
        max_leaves: usize,
        #[arg(long, value_enum, default_value = "lowest")]
        rule: Rule,
        #[arg(long)]
        verify_class: bool,
    },
    /// Re-check a stored distribution against an instance.
    Verify {
        #[command(flatten)]
        instance: InstanceArg,
        /// Distribution JSON file.
        distribution: String,
    },
    /// Partition search for one of two agents.
    Partition {
        #[command(flatten)]
        instance: InstanceArg,
        #[arg(long, default_value_t = 0)]
        agent: usize,
        #[arg(long, value_enum, default_value = "balanced")]
        kind: PartitionKind,
    },
    /// One of the two-agent lotteries.
    TwoAgent {
        #[command(flatten)]
        instance: InstanceArg,
        #[arg(long, value_enum, default_value = "ef")]
        target: Target,
    },
    /// Best ex-ante ratio over lotteries of allocations meeting an EFX level.
    Frontier {
        #[command(flatten)]
        instance: InstanceArg,
        /// Required ex-post EFX level; defaults to `--beta`, then 1.
        #[arg(long)]
        efx_level: Option<String>,
    },
    /// Monte Carlo experiments.
    Experiment {
        #[command(subcommand)]
        which: Experiment,
    },
    /// The built-in instance families.
    Instances {
        #[command(subcommand)]
        action: Instances,
    },
    /// Exhaustively check each valuation against a class.
    CheckValuation {
        #[command(flatten)]
        instance: InstanceArg,
        /// Class to check; defaults to the declared one.
        #[arg(long, value_enum)]
        class: Option<Class>,
    },
}

#[derive(Subcommand)]
enum Experiment {
    /// Random serial dictatorship on the serial-dictatorship family.
    Rsd {
        #[command(flatten)]
        run: RunArgs,
    },
    /// The envy-cycle procedure on the tight-analysis family.
    Tight {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value = "uniform")]
        rule: Rule,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print CSV instead of JSON.
    #[arg(long)]
    csv: bool,
}

#[derive(Subcommand)]
enum Instances {
    List,
    /// Print a family instance, or re-emit an instance file canonically.
    Emit {
        name: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        eps: Option<String>,
        #[arg(long)]
        beta: Option<String>,
        #[arg(long = "big-k")]
        big_k: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Algorithm {
    Fair,
    Det,
    PsLottery,
    Rsd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    Lowest,
    Highest,
    Uniform,
}

impl From<Rule> for UnenviedRule {
    fn from(r: Rule) -> Self {
        match r {
            Rule::Lowest => UnenviedRule::LowestIndex,
            Rule::Highest => UnenviedRule::HighestIndex,
            Rule::Uniform => UnenviedRule::UniformRandom,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PartitionKind {
    Balanced,
    Efx,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Ef,
    Efx,
    Additive,
}

#[derive(Clone, Copy, ValueEnum)]
enum Class {
    Additive,
    Submodular,
    Subadditive,
    Monotone,
}

impl From<Class> for ValuationClass {
    fn from(c: Class) -> Self {
        match c {
            Class::Additive => ValuationClass::Additive,
            Class::Submodular => ValuationClass::Submodular,
            Class::Subadditive => ValuationClass::Subadditive,
            Class::Monotone => ValuationClass::Monotone,
        }
    }
}

/// Declared class does not verify.
#[derive(Debug)]
struct ClassCheckFailed(String);

impl std::fmt::Display for ClassCheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "class verification failed: {}", self.0)
    }
}

impl std::error::Error for ClassCheckFailed {}

fn rational_arg(s: &Option<String>, name: &str) -> anyhow::Result<Option<Rational>> {
    s.as_deref().map(|x| parse_rational(x).with_context(|| format!("--{name}"))).transpose()
}

fn params(
    n: Option<usize>,
    k: Option<usize>,
    eps: &Option<String>,
    beta: &Option<String>,
    big_k: &Option<String>,
) -> anyhow::Result<InstanceParams> {
    Ok(InstanceParams {
        n,
        k,
        eps: rational_arg(eps, "eps")?,
        beta: rational_arg(beta, "beta")?,
        big_k: rational_arg(big_k, "big-k")?,
    })
}

fn load(arg: &InstanceArg) -> anyhow::Result<Instance> {
    let path = Path::new(&arg.instance);
    if path.is_file() {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return Ok(io::parse_instance(&text)?);
    }
    let p = params(arg.n, arg.k, &arg.eps, &arg.beta, &arg.big_k)?;
    Ok(paper_instance(&arg.instance, &p)?)
}

fn verify_declared(instance: &Instance) -> anyhow::Result<()> {
    if let Some((agent, w)) = instance.verify_class()? {
        return Err(ClassCheckFailed(format!("agent {agent} is not {}: {w}", instance.class().as_str())).into());
    }
    Ok(())
}

fn report_json(instance: &Instance, dist: &AllocationDistribution) -> anyhow::Result<Value> {
    Ok(io::report_to_json(&expost_report(instance, dist)?))
}

fn allocate(
    arg: &InstanceArg,
    algorithm: Algorithm,
    seed: u64,
    trace: bool,
    exact: bool,
    verify: bool,
) -> anyhow::Result<Value> {
    let instance = load(arg)?;
    if verify {
        verify_declared(&instance)?;
    }
    let m = instance.m();
    let padded = pad_with_dummies(&instance);
    let mut out = serde_json::Map::new();
    match algorithm {
        Algorithm::Fair => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (a, log) = fair_envy_cycles_sample_with(&padded, &mut rng, UnenviedRule::LowestIndex)?;
            let a = a.restrict(m);
            out.insert("report".into(), io::report_to_json(&allocation_report(&instance, &a)?));
            out.insert("allocation".into(), io::allocation_to_json(&a));
            if trace {
                let first = phase_one(&padded)?;
                out.insert(
                    "trace".into(),
                    json!({
                        "eating": io::trace_to_json(&first.trace),
                        "fractional": io::fractional_to_json(&first.fractional),
                        "matchings": io::lottery_to_json(&first.lottery),
                        "steps": io::run_log_to_json(&log),
                    }),
                );
            }
        }
        Algorithm::Det => {
            let (a, log) = deterministic_envy_cycles(&padded)?;
            let a = a.restrict(m);
            out.insert("report".into(), io::report_to_json(&allocation_report(&instance, &a)?));
            out.insert("allocation".into(), io::allocation_to_json(&a));
            if trace {
                out.insert("trace".into(), json!({ "steps": io::run_log_to_json(&log) }));
            }
        }
        Algorithm::PsLottery => {
            let d = multi_step_ps_lottery(&instance)?;
            out.insert("report".into(), report_json(&instance, &d)?);
            out.insert("distribution".into(), io::distribution_to_json(&d));
        }
        Algorithm::Rsd if exact => {
            let d = rsd_enumerate(&instance)?;
            out.insert("report".into(), report_json(&instance, &d)?);
            out.insert("distribution".into(), io::distribution_to_json(&d));
        }
        Algorithm::Rsd => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = rsd_sample(&instance, &mut rng)?;
            out.insert("report".into(), io::report_to_json(&allocation_report(&instance, &a)?));
            out.insert("allocation".into(), io::allocation_to_json(&a));
        }
    }
    let name = match algorithm {
        Algorithm::Fair => "fair",
        Algorithm::Det => "det",
        Algorithm::PsLottery => "ps-lottery",
        Algorithm::Rsd => "rsd",
    };
    out.insert("algorithm".into(), json!(name));
    Ok(Value::Object(out))
}

fn enumerate(arg: &InstanceArg, max_leaves: usize, rule: Rule, verify: bool) -> anyhow::Result<Value> {
    let instance = load(arg)?;
    if verify {
        verify_declared(&instance)?;
    }
    let padded = pad_with_dummies(&instance);
    let (dist, tree) = fair_envy_cycles_enumerate_with(&padded, max_leaves, rule.into())?;
    let checks = verify_execution(&padded, &tree)?;
    let dist = dist.restrict(instance.m());
    let report = expost_report(&instance, &dist)?;
    Ok(json!({
        "distribution": io::distribution_to_json(&dist),
        "report": io::report_to_json(&report),
        "meets_half_guarantees": report.meets_half_guarantees(),
        "checks": io::verification_to_json(&checks),
        "all_checks_passed": checks.all_passed(),
        "tree": { "nodes": tree.len(), "leaves": tree.leaves().len() },
    }))
}

fn verify_distribution(arg: &InstanceArg, path: &str) -> anyhow::Result<Value> {
    let instance = load(arg)?;
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
    let dist = io::parse_distribution(&text, instance.m())?;
    if dist.n() != instance.n() {
        return Err(Error::MalformedInstance(format!("distribution has {} agents, instance {}", dist.n(), instance.n())).into());
    }
    let report = expost_report(&instance, &dist)?;
    Ok(json!({
        "report": io::report_to_json(&report),
        "meets_half_guarantees": report.meets_half_guarantees(),
        "complete": dist.is_complete(),
    }))
}

fn check_valuations(arg: &InstanceArg, class: Option<Class>) -> anyhow::Result<Value> {
    let instance = load(arg)?;
    let class = class.map(ValuationClass::from).unwrap_or(instance.class());
    let mut agents = Vec::new();
    let mut failed = None;
    for (i, v) in instance.valuations().iter().enumerate() {
        let verdict = check_class(v, instance.m(), class)?;
        let violation = match &verdict {
            ClassVerdict::Holds => Value::Null,
            ClassVerdict::Violated(w) => {
                failed.get_or_insert_with(|| format!("agent {i}: {w}"));
                json!(w.to_string())
            }
        };
        agents.push(json!({"agent": i, "holds": verdict.holds(), "violation": violation}));
    }
    let out = json!({"class": class.as_str(), "agents": agents});
    if let Some(w) = failed {
        println!("{}", io::to_canonical_string(&out));
        return Err(ClassCheckFailed(w).into());
    }
    Ok(out)
}

fn run(cli: Cli) -> anyhow::Result<String> {
    let value = match cli.command {
        Command::Allocate { instance, algorithm, seed, trace, exact, verify_class } => {
            allocate(&instance, algorithm, seed, trace, exact, verify_class)?
        }
        Command::Enumerate { instance, max_leaves, rule, verify_class } => {
            enumerate(&instance, max_leaves, rule, verify_class)?
        }
        Command::Verify { instance, distribution } => verify_distribution(&instance, &distribution)?,
        Command::Partition { instance, agent, kind } => {
            let inst = load(&instance)?;
            let p = match kind {
                PartitionKind::Balanced => balanced_partition(&inst, agent)?,
                PartitionKind::Efx => efx_partition(&inst, agent)?,
            };
            io::partition_to_json(&inst, &p)
        }
        Command::TwoAgent { instance, target } => {
            let inst = load(&instance)?;
            let target = match target {
                Target::Ef => LotteryTarget::EfPriority,
                Target::Efx => LotteryTarget::EfxPriority,
                Target::Additive => LotteryTarget::Additive,
            };
            let d = two_agent_lottery(&inst, target)?;
            json!({"distribution": io::distribution_to_json(&d), "report": report_json(&inst, &d)?})
        }
        Command::Frontier { instance, efx_level } => {
            let inst = load(&instance)?;
            let level = match (rational_arg(&efx_level, "efx-level")?, rational_arg(&instance.beta, "beta")?) {
                (Some(l), _) | (None, Some(l)) => l,
                (None, None) => Rational::from_integer(1.into()),
            };
            let mut v = io::frontier_to_json(&impossibility_frontier(&inst, &level)?);
            v["efx_level"] = json!(fairdiv_core::rational::format_rational(&level));
            v
        }
        Command::Experiment { which } => {
            let (result, csv) = match which {
                Experiment::Rsd { run } => {
                    (rsd_experiment(run.n, run.k, rational_arg(&run.eps, "eps")?, run.trials, run.seed)?, run.csv)
                }
                Experiment::Tight { run, rule } => (
                    tight_experiment(run.n, run.k, rational_arg(&run.eps, "eps")?, run.trials, run.seed, rule.into())?,
                    run.csv,
                ),
            };
            if csv {
                return Ok(to_csv(&result));
            }
            serde_json::to_value(&result)?
        }
        Command::Instances { action: Instances::List } => {
            Value::Array(CATALOG.iter().map(|(name, about)| json!({"name": name, "description": about})).collect())
        }
        Command::Instances { action: Instances::Emit { name, n, k, eps, beta, big_k } } => {
            io::instance_to_json(&load(&InstanceArg { instance: name, n, k, eps, beta, big_k })?)
        }
        Command::CheckValuation { instance, class } => check_valuations(&instance, class)?,
    };
    Ok(io::to_canonical_string(&value) + "\n")
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<ClassCheckFailed>().is_some() {
        return 3;
    }
    match e.downcast_ref::<Error>() {
        Some(Error::ClassMismatch(_)) => 3,
        Some(Error::EnumerationLimit { .. }) => 4,
        Some(Error::Invariant(_)) => 5,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
