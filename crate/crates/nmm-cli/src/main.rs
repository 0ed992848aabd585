use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use admg::causal::{evaluate_effect, identify, CausalQuery};
use admg::fixing::{apply_sequence, fixable, intrinsic_sets, reachable_sets};
use admg::functional::{identifying_functional, render};
use admg::io::{
    graph_json, id_json, kernel_json, parse_distribution, parse_graph, render_distribution, report_json, to_pretty,
};
use admg::kernel::apply_sequence_kernel;
use admg::nested::{check_membership_with, constraints, order_from_names, Mode};
use admg::separation::m_separated;
use admg::{oracle, projection, Error, Kernel, Limits, MixedGraph, NodeSet, StateSpace};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "nmm", version, about = "Nested Markov models on acyclic directed mixed graphs")]
struct Cli {
    /// Largest random-vertex count for reachable/intrinsic enumeration.
    #[arg(long, global = true, default_value_t = Limits::default().max_vertices)]
    max_vertices: usize,
    /// Largest number of cells in any kernel table.
    #[arg(long, global = true, default_value_t = Limits::default().max_cells)]
    max_cells: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GraphArg {
    /// Graph file.
    #[arg(long)]
    graph: PathBuf,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    treatment: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    outcome: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Latent projection onto the kept vertices (default: all non-latent ones).
    Project {
        #[command(flatten)]
        g: GraphArg,
        #[arg(long, value_delimiter = ',')]
        keep: Option<Vec<String>>,
    },
    /// m-separation of A and B given C, optionally after fixing a sequence.
    Msep {
        #[command(flatten)]
        g: GraphArg,
        #[arg(long, value_delimiter = ',')]
        fix: Vec<String>,
        #[arg(short = 'A', value_delimiter = ',', required = true)]
        a: Vec<String>,
        #[arg(short = 'B', value_delimiter = ',', required = true)]
        b: Vec<String>,
        #[arg(short = 'C', value_delimiter = ',')]
        c: Vec<String>,
    },
    /// The fixable vertices.
    Fixable {
        #[command(flatten)]
        g: GraphArg,
        #[arg(long, value_delimiter = ',')]
        fix: Vec<String>,
    },
    /// Apply a fixing sequence to the graph and, if given, a distribution.
    Fix {
        #[command(flatten)]
        g: GraphArg,
        #[arg(long, value_delimiter = ',', required = true)]
        sequence: Vec<String>,
        #[arg(long)]
        distribution: Option<PathBuf>,
    },
    /// Every reachable set with a witnessing sequence.
    Reachable {
        #[command(flatten)]
        g: GraphArg,
    },
    /// Every intrinsic set with a witnessing sequence.
    Intrinsic {
        #[command(flatten)]
        g: GraphArg,
    },
    /// The nested constraint list of one mode.
    Constraints {
        #[command(flatten)]
        g: GraphArg,
        #[arg(long, default_value = "global")]
        mode: Mode,
        /// Explicit topological order for local and tian modes.
        #[arg(long, value_delimiter = ',')]
        order: Option<Vec<String>>,
    },
    /// Check a distribution against the nested model.
    Verify {
        #[command(flatten)]
        g: GraphArg,
        #[arg(long)]
        distribution: PathBuf,
        #[arg(long, default_value = "global")]
        mode: Mode,
        #[arg(long, value_delimiter = ',')]
        order: Option<Vec<String>>,
        /// Include wall-clock time in the report.
        #[arg(long)]
        timing: bool,
    },
    /// Identify p(Y | do(A)) and print the functional.
    Identify {
        #[command(flatten)]
        g: GraphArg,
        #[command(flatten)]
        q: QueryArgs,
    },
    /// Evaluate an identified effect on a distribution.
    Evaluate {
        #[command(flatten)]
        g: GraphArg,
        #[arg(long)]
        distribution: PathBuf,
        #[command(flatten)]
        q: QueryArgs,
    },
    /// Reference generators and brute-force checkers.
    Oracle {
        #[command(subcommand)]
        command: OracleCommand,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// A random model for a DAG; latent vertices are summed out unless --joint.
    DagModel {
        #[command(flatten)]
        g: GraphArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        card: usize,
        #[arg(long)]
        joint: bool,
    },
    /// A random member of the nested model of an ADMG, via its canonical DAG.
    Member {
        #[command(flatten)]
        g: GraphArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        card: usize,
    },
    /// An arbitrary strictly positive kernel over the graph's vertices.
    Arbitrary {
        #[command(flatten)]
        g: GraphArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        card: usize,
    },
    /// Marginalize a distribution onto the kept vertices.
    Margin {
        #[command(flatten)]
        g: GraphArg,
        #[arg(long)]
        distribution: PathBuf,
        #[arg(long, value_delimiter = ',')]
        keep: Vec<String>,
    },
    /// All labeled ADMGs on n vertices.
    Enumerate {
        #[arg(long)]
        n: usize,
    },
    /// Path-enumeration m-separation.
    Msep {
        #[command(flatten)]
        g: GraphArg,
        #[arg(short = 'A', value_delimiter = ',', required = true)]
        a: Vec<String>,
        #[arg(short = 'B', value_delimiter = ',', required = true)]
        b: Vec<String>,
        #[arg(short = 'C', value_delimiter = ',')]
        c: Vec<String>,
    },
    /// Path-enumeration latent projection.
    Project {
        #[command(flatten)]
        g: GraphArg,
        #[arg(long, value_delimiter = ',')]
        keep: Option<Vec<String>>,
    },
    /// A random DAG with latent vertices marked.
    RandomDag {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        latent: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// What a command printed and how it ended.
enum Outcome {
    Holds(Value),
    Fails(Value),
    Text(String),
}

enum Failure {
    Lib(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Run = std::result::Result<Outcome, Failure>;

fn read(path: &PathBuf) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn load_graph(a: &GraphArg) -> std::result::Result<MixedGraph, Failure> {
    Ok(parse_graph(&read(&a.graph)?)?)
}

fn load_distribution(path: &PathBuf, g: &MixedGraph) -> std::result::Result<Kernel, Failure> {
    Ok(parse_distribution(&read(path)?, g)?)
}

fn indices(g: &MixedGraph, names: &[String]) -> admg::Result<Vec<usize>> {
    names.iter().map(|n| g.index(n)).collect()
}

fn order(g: &MixedGraph, names: &Option<Vec<String>>) -> admg::Result<Vec<usize>> {
    match names {
        Some(n) => order_from_names(g, n),
        None => Ok(g.topological_order()),
    }
}

fn keep_set(g: &MixedGraph, keep: &Option<Vec<String>>) -> admg::Result<NodeSet> {
    match keep {
        Some(k) => g.set(k),
        None => Ok(g.vertices().minus(g.latent())),
    }
}

fn sets_json(g: &MixedGraph, items: impl Iterator<Item = (NodeSet, Vec<String>)>, key: &str) -> Value {
    Value::Array(
        items
            .map(|(s, w)| json!({ key: g.names_of(s), "witness": w }))
            .collect(),
    )
}

fn bool_outcome(v: Value, holds: bool) -> Outcome {
    if holds {
        Outcome::Holds(v)
    } else {
        Outcome::Fails(v)
    }
}

fn run(cli: &Cli) -> Run {
    let limits = Limits {
        max_vertices: cli.max_vertices,
        max_cells: cli.max_cells,
    };
    match &cli.command {
        Command::Project { g, keep } => {
            let g = load_graph(g)?;
            let p = projection::project(&g, keep_set(&g, keep)?)?;
            Ok(Outcome::Holds(graph_json(&p)))
        }
        Command::Msep { g, fix, a, b, c } => {
            let g = load_graph(g)?;
            let h = apply_sequence(&g, &indices(&g, fix)?)?;
            let sep = m_separated(&h, h.set(a)?, h.set(b)?, h.set(c)?)?;
            Ok(bool_outcome(json!({ "separated": sep }), sep))
        }
        Command::Fixable { g, fix } => {
            let g = load_graph(g)?;
            let h = apply_sequence(&g, &indices(&g, fix)?)?;
            Ok(Outcome::Holds(json!({ "fixable": h.names_of(fixable(&h)) })))
        }
        Command::Fix { g, sequence, distribution } => {
            let g = load_graph(g)?;
            let steps = indices(&g, sequence)?;
            let h = match apply_sequence(&g, &steps) {
                Ok(h) => h,
                Err(Error::InvalidSequence { position, vertex, evidence }) => {
                    return Ok(Outcome::Fails(json!({
                        "valid": false,
                        "position": position,
                        "vertex": vertex,
                        "evidence": evidence,
                    })));
                }
                Err(e) => return Err(e.into()),
            };
            let mut out = json!({ "valid": true, "graph": graph_json(&h) });
            if let Some(path) = distribution {
                let p = load_distribution(path, &g)?;
                let (q, _) = apply_sequence_kernel(&p, &steps, &g)?;
                out["kernel"] = kernel_json(&h, &q);
            }
            Ok(Outcome::Holds(out))
        }
        Command::Reachable { g } => {
            let g = load_graph(g)?;
            let list = reachable_sets(&g, &limits)?;
            Ok(Outcome::Holds(sets_json(
                &g,
                list.iter().map(|r| (r.remaining, r.witness.names(&g))),
                "remaining",
            )))
        }
        Command::Intrinsic { g } => {
            let g = load_graph(g)?;
            let list = intrinsic_sets(&g, &limits)?;
            Ok(Outcome::Holds(sets_json(
                &g,
                list.iter().map(|r| (r.members, r.witness.names(&g))),
                "members",
            )))
        }
        Command::Constraints { g, mode, order: o } => {
            let g = load_graph(g)?;
            let list = constraints(&g, *mode, &order(&g, o)?, &limits)?;
            let items: Vec<Value> = list.iter().map(|c| admg::io::constraint_json(&g, c)).collect();
            Ok(Outcome::Holds(json!({ "mode": mode.name(), "constraints": items })))
        }
        Command::Verify { g, distribution, mode, order: o, timing } => {
            let g = load_graph(g)?;
            let p = load_distribution(distribution, &g)?;
            let start = Instant::now();
            let r = check_membership_with(&g, &p, *mode, &order(&g, o)?, &limits)?;
            let ms = timing.then(|| start.elapsed().as_millis());
            Ok(bool_outcome(report_json(&g, &r, ms), r.passed()))
        }
        Command::Identify { g, q } => {
            let g = load_graph(g)?;
            let query = CausalQuery::from_names(&g, &q.treatment, &q.outcome)?;
            let id = identify(&g, &query)?;
            if id.is_identifiable() {
                let f = render(&g, &identifying_functional(&g, &id)?);
                Ok(Outcome::Holds(id_json(&g, &id, Some(&f))))
            } else {
                Ok(Outcome::Fails(id_json(&g, &id, None)))
            }
        }
        Command::Evaluate { g, distribution, q } => {
            let g = load_graph(g)?;
            let p = load_distribution(distribution, &g)?;
            let query = CausalQuery::from_names(&g, &q.treatment, &q.outcome)?;
            let id = identify(&g, &query)?;
            if !id.is_identifiable() {
                return Ok(Outcome::Fails(id_json(&g, &id, None)));
            }
            let k = evaluate_effect(&g, &p, &query)?;
            Ok(Outcome::Holds(kernel_json(&g, &k)))
        }
        Command::Oracle { command } => run_oracle(command),
    }
}

fn run_oracle(cmd: &OracleCommand) -> Run {
    match cmd {
        OracleCommand::DagModel { g, seed, card, joint } => {
            let g = load_graph(g)?;
            let space = StateSpace::uniform(g.universe_size(), *card);
            let p = oracle::random_dag_model(&g, &space, *seed)?;
            if *joint {
                return Ok(Outcome::Text(render_distribution(&p, &g)));
            }
            let keep = g.vertices().minus(g.latent());
            let m = oracle::margin(&p, keep)?;
            let observed = projection::project(&g, keep)?;
            Ok(Outcome::Text(render_distribution(&m, &observed)))
        }
        OracleCommand::Member { g, seed, card } => {
            let g = load_graph(g)?;
            let space = StateSpace::uniform(g.universe_size(), *card);
            let p = oracle::member_distribution(&g, &space, *seed)?;
            Ok(Outcome::Text(render_distribution(&p, &g)))
        }
        OracleCommand::Arbitrary { g, seed, card } => {
            let g = load_graph(g)?;
            let space = StateSpace::uniform(g.universe_size(), *card);
            let p = oracle::arbitrary_kernel(&space, g.random(), g.fixed(), *seed)?;
            Ok(Outcome::Text(render_distribution(&p, &g)))
        }
        OracleCommand::Margin { g, distribution, keep } => {
            let g = load_graph(g)?;
            let p = load_distribution(distribution, &g)?;
            let keep = g.set(keep)?;
            let m = oracle::margin(&p, keep)?;
            let h = g.induced_subgraph(keep.union(g.fixed()))?;
            Ok(Outcome::Text(render_distribution(&m, &h)))
        }
        OracleCommand::Enumerate { n } => {
            let all = oracle::enumerate_admgs(*n)?;
            let items: Vec<Value> = all.iter().map(|g| json!(admg::io::render_graph(g))).collect();
            Ok(Outcome::Holds(json!({ "n": n, "count": all.len(), "graphs": items })))
        }
        OracleCommand::Msep { g, a, b, c } => {
            let g = load_graph(g)?;
            let sep = oracle::brute_force_msep(&g, g.set(a)?, g.set(b)?, g.set(c)?)?;
            Ok(bool_outcome(json!({ "separated": sep }), sep))
        }
        OracleCommand::Project { g, keep } => {
            let g = load_graph(g)?;
            let p = oracle::brute_force_projection(&g, keep_set(&g, keep)?)?;
            Ok(Outcome::Holds(graph_json(&p)))
        }
        OracleCommand::RandomDag { n, latent, seed } => {
            let g = oracle::random_latent_dag(*n, *latent, *seed)?;
            Ok(Outcome::Text(admg::io::render_graph(&g)))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(Outcome::Holds(v)) => {
            print!("{}", to_pretty(&v));
            ExitCode::SUCCESS
        }
        Ok(Outcome::Fails(v)) => {
            print!("{}", to_pretty(&v));
            ExitCode::from(1)
        }
        Ok(Outcome::Text(t)) => {
            print!("{t}");
            ExitCode::SUCCESS
        }
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::ResourceLimit(_) => 3,
                _ => 2,
            })
        }
    }
}
