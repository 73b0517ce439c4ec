mod demo;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use blockstoch::extension::FiniteGenerator;
use blockstoch::instance::{
    a1_json, a2_json, counting_json, decomposition_json, extension_json, instance_json, membership_json,
    parse_instance, path_json, render, vertex_set_json, verdict_json, witness_json, Instance, InstanceError,
};
use blockstoch::{
    build_graph, check_a1, check_a2, classify_extreme, classify_membership, counting_identity, cross_validate,
    decompose, enumerate_vertices, extend_tn, find_primitive_cycles, gen_random, generator_by_name,
    parse_rational, require_in_s, verify_extension, ElementId, ExtensionError, ExtremalityError,
    ExtremalityVerdict, FamilyError, FamilyGenerator, OracleError, OracleOptions, Parity, Truncation,
    WeightFunction,
};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "blockstoch", version, about = "Extreme points of block-stochastic weight functions")]
struct Cli {
    /// Worker threads for vertex enumeration (1 disables parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct OracleArgs {
    /// Maximum number of candidate supports visited during enumeration.
    #[arg(long)]
    budget: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Membership, injectivity, covering/containment and the counting identity.
    Check {
        instance: PathBuf,
        /// Number of leading blocks tested as a cover.
        #[arg(long)]
        m: Option<usize>,
    },
    /// Primitive-cycle census of the associated graph.
    Graph {
        instance: PathBuf,
        /// Print the plain edge list (`g h : k1,k2`) instead.
        #[arg(long)]
        edges: bool,
    },
    /// Decide whether the weights are an extreme point.
    Classify { instance: PathBuf },
    /// Print a pair `w±` in S averaging to the weights.
    Witness { instance: PathBuf },
    /// All vertices of S.
    Vertices {
        instance: PathBuf,
        #[command(flatten)]
        oracle: OracleArgs,
    },
    /// Write the weights as a convex combination of vertices.
    Decompose {
        instance: PathBuf,
        #[command(flatten)]
        oracle: OracleArgs,
    },
    /// Extend a truncated function block by block.
    Extend {
        /// `path`, `disjoint-growing`, `grid`, or `finite` (blocks from the instance).
        #[arg(long)]
        generator: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        horizon: usize,
        /// Instance file; required for `finite`, otherwise only its weights are read.
        #[arg(long)]
        instance: Option<PathBuf>,
        /// Inline weights such as `1=1/3,2=2/3`.
        #[arg(long)]
        weights: Option<String>,
    },
    /// Compare the classifier with the vertex oracle on vertices and random mixtures.
    Validate {
        instance: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        samples: usize,
        #[command(flatten)]
        oracle: OracleArgs,
    },
    /// Run a bundled worked example and compare with its known answer.
    Demo {
        #[arg(value_parser = demo::NAMES)]
        name: String,
    },
    /// Emit a random instance.
    Gen {
        #[arg(long)]
        elements: usize,
        #[arg(long)]
        blocks: usize,
        #[arg(long, default_value_t = 2)]
        kappa_max: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// A failed command: exit code plus message.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

const INVALID_INPUT: u8 = 1;
const PRECONDITION: u8 = 2;
const EXHAUSTED: u8 = 3;

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

impl From<InstanceError> for Failure {
    fn from(e: InstanceError) -> Self {
        Failure::new(INVALID_INPUT, e.to_string())
    }
}

impl From<FamilyError> for Failure {
    fn from(e: FamilyError) -> Self {
        let code = match e {
            FamilyError::NotInS(_) => PRECONDITION,
            _ => INVALID_INPUT,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<ExtremalityError> for Failure {
    fn from(e: ExtremalityError) -> Self {
        match e {
            ExtremalityError::Family(f) => f.into(),
            other => Failure::new(PRECONDITION, other.to_string()),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Family(f) => f.into(),
            OracleError::Extremality(x) => x.into(),
            OracleError::InstanceTooLarge { .. } | OracleError::DepthExceeded(_) => {
                Failure::new(EXHAUSTED, e.to_string())
            }
            OracleError::Inconsistent(_) => Failure::new(PRECONDITION, e.to_string()),
        }
    }
}

impl From<ExtensionError> for Failure {
    fn from(e: ExtensionError) -> Self {
        match e {
            ExtensionError::Oracle(o) => o.into(),
            ExtensionError::HorizonExhausted { .. } => Failure::new(EXHAUSTED, e.to_string()),
            ExtensionError::InvalidTruncation(_) => Failure::new(PRECONDITION, e.to_string()),
            ExtensionError::GeneratorInconsistent(_) | ExtensionError::HorizonTooSmall { .. } => {
                Failure::new(INVALID_INPUT, e.to_string())
            }
        }
    }
}

fn load(path: &PathBuf) -> Result<Instance, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::new(INVALID_INPUT, format!("cannot read {}: {e}", path.display())))?;
    Ok(parse_instance(&text)?)
}

fn weights_of(instance: &Instance) -> Result<&WeightFunction, Failure> {
    instance.weights.as_ref().ok_or_else(|| Failure::new(INVALID_INPUT, "the instance has no `weights` field"))
}

fn parse_inline_weights(text: &str) -> Result<WeightFunction, Failure> {
    let mut w = WeightFunction::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let bad = || Failure::new(INVALID_INPUT, format!("weight `{item}` is not of the form label=value"));
        let (label, value) = item.split_once('=').ok_or_else(bad)?;
        let g = label.trim().parse::<u64>().map_err(|_| bad())?;
        let v = parse_rational(value.trim())
            .map_err(|e| Failure::new(INVALID_INPUT, format!("weight of element {g}: {e}")))?;
        w.set(ElementId(g), v);
    }
    Ok(w)
}

fn oracle_options(jobs: Option<usize>, args: Option<&OracleArgs>) -> OracleOptions {
    let mut opts = OracleOptions::default();
    if let Some(budget) = args.and_then(|a| a.budget) {
        opts.budget = budget;
    }
    opts.parallel = jobs != Some(1);
    opts
}

fn run(cli: Cli) -> Result<String, Failure> {
    let jobs = cli.jobs;
    let doc = match cli.command {
        Command::Check { instance, m } => {
            let inst = load(&instance)?;
            let f = &inst.family;
            let ground: BTreeSet<ElementId> = f.ground().iter().copied().collect();
            let mut doc = json!({
                "elements": f.ground().len(),
                "blocks": f.block_count(),
                "kappa": f.kappa_max(),
                "a1": a1_json(&check_a1(f, &ground)?),
                "a2": a2_json(&check_a2(f, m.unwrap_or(f.block_count()))),
            });
            if let Some(w) = &inst.weights {
                let report = classify_membership(f, w)?;
                doc["membership"] = membership_json(&report);
                doc["counting_identity"] =
                    if report.in_s { counting_json(&counting_identity(f, w)?) } else { Value::Null };
            }
            doc
        }
        Command::Graph { instance, edges } => {
            let inst = load(&instance)?;
            let graph = build_graph(&inst.family);
            if edges {
                return Ok(graph.edge_list_dump());
            }
            let census = |parity| {
                let cycles = find_primitive_cycles(&graph, &inst.family, parity);
                json!({ "count": cycles.len(), "cycles": cycles.iter().map(path_json).collect::<Vec<_>>() })
            };
            json!({
                "vertices": graph.vertices().len(),
                "edges": graph.edge_count(),
                "components": graph.connected_components().len(),
                "odd_primitive_cycles": census(Parity::Odd),
                "even_primitive_cycles": census(Parity::Even),
            })
        }
        Command::Classify { instance } => {
            let inst = load(&instance)?;
            verdict_json(&classify_extreme(&inst.family, weights_of(&inst)?)?)
        }
        Command::Witness { instance } => {
            let inst = load(&instance)?;
            match classify_extreme(&inst.family, weights_of(&inst)?)? {
                ExtremalityVerdict::NotExtreme { witness } => witness_json(&witness),
                ExtremalityVerdict::Extreme { .. } => {
                    return Err(Failure::new(PRECONDITION, "the weights are an extreme point; no witness exists"))
                }
                ExtremalityVerdict::Unsupported { reason } => {
                    return Err(Failure::new(PRECONDITION, format!("no witness construction applies: {reason}")))
                }
            }
        }
        Command::Vertices { instance, oracle } => {
            let inst = load(&instance)?;
            vertex_set_json(&enumerate_vertices(&inst.family, &oracle_options(jobs, Some(&oracle)))?)
        }
        Command::Decompose { instance, oracle } => {
            let inst = load(&instance)?;
            let w = weights_of(&inst)?;
            require_in_s(&inst.family, w)?;
            decomposition_json(&decompose(&inst.family, w, &oracle_options(jobs, Some(&oracle)))?)
        }
        Command::Extend { generator, n, horizon, instance, weights } => {
            let inst = instance.as_ref().map(load).transpose()?;
            let generator: Box<dyn FamilyGenerator> = match generator.as_str() {
                "finite" => {
                    let inst = inst.as_ref().ok_or_else(|| {
                        Failure::new(INVALID_INPUT, "the finite generator needs --instance")
                    })?;
                    Box::new(FiniteGenerator::new(inst.family.clone())?)
                }
                name => generator_by_name(name)
                    .ok_or_else(|| Failure::new(INVALID_INPUT, format!("unknown generator `{name}`")))?,
            };
            let w = match (weights, &inst) {
                (Some(text), _) => parse_inline_weights(&text)?,
                (None, Some(inst)) => weights_of(inst)?.clone(),
                (None, None) => return Err(Failure::new(INVALID_INPUT, "give --weights or --instance")),
            };
            if horizon <= n {
                return Err(ExtensionError::HorizonTooSmall { n, horizon }.into());
            }
            let trunc = Truncation::new(generator.as_ref(), n, w, horizon)?;
            let result = extend_tn(generator.as_ref(), &trunc, horizon)?;
            let report = verify_extension(&result, generator.as_ref(), &trunc);
            extension_json(&result, Some(&report))
        }
        Command::Validate { instance, seed, samples, oracle } => {
            let inst = load(&instance)?;
            let report = cross_validate(&inst.family, seed, samples, &oracle_options(jobs, Some(&oracle)))?;
            let doc = blockstoch::instance::cross_validation_json(&report);
            if !report.passed() {
                print!("{}", render(&doc));
                return Err(Failure::new(
                    PRECONDITION,
                    format!("cross-validation found {} discrepancies", report.discrepancies.len()),
                ));
            }
            doc
        }
        Command::Demo { name } => {
            let (doc, ok) = demo::run(&name, &oracle_options(jobs, None))?;
            if !ok {
                print!("{}", render(&doc));
                return Err(Failure::new(PRECONDITION, format!("demo {name} did not reproduce its expected values")));
            }
            doc
        }
        Command::Gen { elements, blocks, kappa_max, seed } => {
            if kappa_max == 0 {
                return Err(Failure::new(INVALID_INPUT, "--kappa-max must be at least 1"));
            }
            let g = gen_random(elements, blocks, kappa_max, seed, &oracle_options(jobs, None))?;
            let mut doc = instance_json(&g.family, g.weights.as_ref());
            doc["infeasible"] = json!(g.infeasible);
            doc
        }
    };
    Ok(render(&doc))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs.filter(|j| *j > 0) {
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().expect("thread pool is built once");
    }
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inline_weights() {
        let w = parse_inline_weights("1=1/3, 2=2/3").unwrap();
        assert_eq!(w.get(ElementId(2)), blockstoch::rational::ratio(2, 3));
        assert_eq!(parse_inline_weights("1:1").err().map(|f| f.code), Some(INVALID_INPUT));
        assert_eq!(parse_inline_weights("1=0.5").err().map(|f| f.code), Some(INVALID_INPUT));
        assert!(parse_inline_weights("").unwrap().is_zero());
    }

    #[test]
    fn error_codes() {
        assert_eq!(Failure::from(OracleError::DepthExceeded(3)).code, EXHAUSTED);
        let exhausted = ExtensionError::HorizonExhausted { block: 2, horizon: 5 };
        assert_eq!(Failure::from(exhausted).code, EXHAUSTED);
        assert_eq!(Failure::from(FamilyError::UnknownElement(ElementId(9))).code, INVALID_INPUT);
    }
}
