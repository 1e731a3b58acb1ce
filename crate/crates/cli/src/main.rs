use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use mrws::builders::{epsilon_step_from_point_cloud, from_weighted_graph, grid_kernel_neumann, PointCloud, WeightedGraph};
use mrws::connectivity::{invariant_blocks, is_ergodic, is_m_connected, reachability};
use mrws::curvature::{be_best_constant, ollivier_global, Dimension, PairPolicy, ALL_PAIRS_LIMIT};
use mrws::geometry::{cheeger, interaction, mean_curvature, perimeter, CheegerMode, EXACT_CHEEGER_LIMIT};
use mrws::heat::{heat_trajectory, HeatMethod};
use mrws::io::{read_field, read_space, space_to_value, to_canonical_json};
use mrws::report::{analyze, AnalysisOptions};
use mrws::spectral::spectral_gap;
use mrws::transport::{verify_transport_inequality, wasserstein, InequalityKind};
use mrws::{fixtures, Error, ScalarField, Space, Subset};

const EXIT_STRUCTURAL: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_HYPOTHESIS: u8 = 3;
const EXIT_USAGE: u8 = 64;

/// Analysis of finite metric random walk spaces.
#[derive(Parser)]
#[command(name = "mrws", version)]
struct Cli {
    /// Worker threads for the parallel sections (falls back to MRWS_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a space and print it as JSON.
    #[command(subcommand)]
    Build(Build),
    /// Check every axiom and list the residuals.
    Validate(Input),
    /// Connectivity, ergodicity and reachability from a set.
    Connect {
        #[command(flatten)]
        input: Input,
        /// Comma-separated point indices or labels.
        #[arg(long)]
        set: Option<String>,
    },
    /// Evolve a field under the heat semigroup.
    Heat {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        init: PathBuf,
        #[arg(long, required_unless_present = "grid")]
        t: Option<f64>,
        #[arg(long, default_value = "spectral")]
        method: HeatMethod,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Comma-separated increasing times.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
    /// Spectrum of the Laplacian and the spectral gap.
    Spectral(Input),
    /// Bounds on the Cheeger constant.
    Cheeger {
        #[command(flatten)]
        input: Input,
        #[arg(long, conflicts_with = "sweep")]
        exact: bool,
        #[arg(long)]
        sweep: bool,
    },
    /// Perimeter and mean curvature of a set.
    Geometry {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        set: String,
    },
    /// Bakry-Émery constants and Ollivier-Ricci curvature.
    Curvature {
        #[command(flatten)]
        input: Input,
        /// Comma-separated dimensions; `inf` for the dimension-free condition.
        #[arg(long, value_delimiter = ',', default_value = "2,inf")]
        be: Vec<Dimension>,
        /// Pairs to evaluate: `all` or `edges`.
        #[arg(long)]
        ollivier: Option<PairPolicy>,
    },
    /// Optimal transport between two distributions.
    Transport {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        mu: PathBuf,
        /// Defaults to the normalized invariant measure.
        #[arg(long)]
        nu: Option<PathBuf>,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=2))]
        p: u32,
    },
    /// Check a transport inequality on random densities.
    Verify {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        inequality: InequalityKind,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the full pipeline and print the report.
    Analyze {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_delimiter = ',', default_value = "2,inf")]
        be: Vec<Dimension>,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Record wall-clock seconds per section.
        #[arg(long)]
        timings: bool,
    },
}

#[derive(Args)]
struct Input {
    /// Space JSON, or `-` for stdin.
    space: PathBuf,
}

#[derive(Subcommand)]
enum Build {
    /// From an edge list `u,v,w`.
    Graph { edges: PathBuf },
    /// ε-step walk on a point cloud `x1,...,xk,mu`.
    Cloud {
        points: PathBuf,
        #[arg(long)]
        eps: f64,
    },
    /// Convolution kernel on a grid over a union of intervals.
    Grid {
        #[arg(long, num_args = 2, value_names = ["A", "B"], required = true, allow_negative_numbers = true)]
        interval: Vec<f64>,
        #[arg(long)]
        h: f64,
        #[arg(long)]
        radius: f64,
    },
    /// A named test space.
    Fixture {
        /// p3, k3, linear_chain, two_block, cycle or lazy_cycle.
        name: String,
        /// Number of points or segments.
        #[arg(long, default_value_t = 6)]
        size: usize,
        /// Grid spacing for two_block, laziness for lazy_cycle.
        #[arg(long, default_value_t = 0.5)]
        param: f64,
    },
}

enum Failure {
    Core(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome = Result<Value, Failure>;

fn read_input(path: &Path) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    let res = if path.as_os_str() == "-" {
        io::stdin().read_to_end(&mut buf).map(|_| ())
    } else {
        File::open(path).and_then(|mut f| f.read_to_end(&mut buf)).map(|_| ())
    };
    res.map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Ok(buf)
}

fn read_text(path: &Path) -> Result<String, Failure> {
    String::from_utf8(read_input(path)?).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn load(input: &Input) -> Result<Space, Failure> {
    Ok(read_space(&read_text(&input.space)?)?)
}

fn load_valid(input: &Input) -> Result<Space, Failure> {
    Ok(load(input)?.validated()?)
}

fn load_field(path: &Path) -> Result<ScalarField, Failure> {
    Ok(read_field(&read_text(path)?)?)
}

fn parse_set(space: &Space, spec: &str) -> Result<Subset, Failure> {
    let mut idx = Vec::new();
    for tok in spec.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let i = match space.index_of(tok) {
            Some(i) => i,
            None => tok
                .parse::<usize>()
                .map_err(|_| Error::InvalidArgument(format!("unknown point {tok:?}")))?,
        };
        idx.push(i);
    }
    Ok(Subset::from_indices(space.len(), &idx)?)
}

fn build(cmd: &Build) -> Outcome {
    let space = match cmd {
        Build::Graph { edges } => {
            let g = WeightedGraph::from_csv(read_input(edges)?.as_slice())?;
            from_weighted_graph(&g)?
        }
        Build::Cloud { points, eps } => {
            let pc = PointCloud::from_csv(read_input(points)?.as_slice())?;
            epsilon_step_from_point_cloud(&pc, *eps)?
        }
        Build::Grid { interval, h, radius } => {
            let intervals: Vec<(f64, f64)> = interval.chunks(2).map(|c| (c[0], c[1])).collect();
            grid_kernel_neumann(&intervals, *h, *radius)?
        }
        Build::Fixture { name, size, param } => match name.as_str() {
            "p3" => fixtures::p3(),
            "k3" => fixtures::k3(),
            "linear_chain" => fixtures::linear_chain(*size),
            "two_block" => fixtures::two_block(*param),
            "cycle" => fixtures::cycle(*size),
            "lazy_cycle" => fixtures::lazy_cycle(*size, *param),
            other => return Err(Error::InvalidArgument(format!("unknown fixture {other:?}")).into()),
        },
    };
    Ok(space_to_value(&space))
}

fn run(cmd: &Command) -> Outcome {
    match cmd {
        Command::Build(b) => build(b),
        Command::Validate(input) => {
            let report = mrws::validate_space(&load(input)?);
            if report.is_valid() {
                Ok(serde_json::to_value(&report).expect("report serializes"))
            } else {
                println!("{}", to_canonical_json(&report));
                Err(Error::Validation(Box::new(report)).into())
            }
        }
        Command::Connect { input, set } => {
            let space = load_valid(input)?;
            let blocks: Vec<Vec<usize>> = invariant_blocks(&space).blocks.iter().map(Subset::indices).collect();
            let erg = is_ergodic(&space);
            let (n_set, h_set) = match set {
                Some(s) => {
                    let r = reachability(&space, &parse_set(&space, s)?)?;
                    (Some(r.n_set.indices()), Some(r.h_set.indices()))
                }
                None => (None, None),
            };
            Ok(json!({
                "m_connected": is_m_connected(&space),
                "ergodic": erg.ergodic,
                "kernel_dim": erg.kernel_dim,
                "blocks": blocks,
                "n_set": n_set,
                "h_set": h_set,
            }))
        }
        Command::Heat {
            input,
            init,
            t,
            method,
            tol,
            grid,
        } => {
            let space = load_valid(input)?;
            let u0 = load_field(init)?;
            let times = grid.clone().unwrap_or_else(|| t.iter().copied().collect());
            let traj = heat_trajectory(&space, &u0, &times, *method, *tol)?;
            let states: Vec<&[f64]> = traj.states.iter().map(ScalarField::as_slice).collect();
            Ok(json!({ "times": traj.times, "states": states, "method": traj.method }))
        }
        Command::Spectral(input) => {
            let r = spectral_gap(&load_valid(input)?);
            Ok(json!({
                "gap": r.gap,
                "spectrum": r.spectrum,
                "gap_ibe": r.gap_ibe,
                "kernel_dim": r.kernel_dim,
                "decay_fit": r.decay_fit,
            }))
        }
        Command::Cheeger { input, exact, sweep } => {
            let space = load_valid(input)?;
            let mode = if *exact || (!*sweep && space.len() <= EXACT_CHEEGER_LIMIT) {
                CheegerMode::Exact
            } else {
                CheegerMode::Sweep
            };
            let c = cheeger(&space, mode)?;
            Ok(json!({
                "lower": c.lower,
                "upper": c.upper,
                "exact": c.exact,
                "method": c.method,
                "witness": c.witness.indices(),
            }))
        }
        Command::Geometry { input, set } => {
            let space = load_valid(input)?;
            let e = parse_set(&space, set)?;
            Ok(json!({
                "perimeter": perimeter(&space, &e)?,
                "interaction_complement": interaction(&space, &e, &e.complement())?,
                "mean_curvature": mean_curvature(&space, &e)?.as_slice(),
            }))
        }
        Command::Curvature { input, be, ollivier } => {
            let space = load_valid(input)?;
            let policy = ollivier.unwrap_or(if space.len() <= ALL_PAIRS_LIMIT {
                PairPolicy::AllPairs
            } else {
                PairPolicy::SupportEdges
            });
            let mut constants = serde_json::Map::new();
            for &dim in be {
                constants.insert(dim.to_string(), json!(be_best_constant(&space, dim)?.k_best_global));
            }
            let o = ollivier_global(&space, policy)?;
            Ok(json!({
                "be": constants,
                "kappa_global": o.kappa_global,
                "kappa_pairs": o.kappa_pairs,
                "pair_policy": o.pair_policy,
            }))
        }
        Command::Transport { input, mu, nu, p } => {
            let space = load_valid(input)?;
            let a = load_field(mu)?;
            let b = match nu {
                Some(path) => load_field(path)?,
                None => ScalarField::from(space.probability()),
            };
            let plan = wasserstein(&space, &a, &b, *p)?;
            Ok(json!({
                "cost": plan.cost,
                "plan": plan
                    .coupling
                    .row_iter()
                    .map(|r| r.iter().copied().collect::<Vec<f64>>())
                    .collect::<Vec<_>>(),
                "dual_gap": plan.duality_gap,
                "p": plan.p,
            }))
        }
        Command::Verify {
            input,
            inequality,
            trials,
            seed,
        } => {
            let space = load_valid(input)?;
            let r = verify_transport_inequality(&space, *inequality, *trials, *seed)?;
            Ok(serde_json::to_value(&r).expect("report serializes"))
        }
        Command::Analyze {
            input,
            be,
            trials,
            seed,
            timings,
        } => {
            let bytes = read_input(&input.space)?;
            let text = String::from_utf8(bytes.clone()).map_err(|e| Failure::Io(e.to_string()))?;
            let space = read_space(&text)?;
            let opts = AnalysisOptions {
                be_dimensions: be.clone(),
                trials: *trials,
                seed: *seed,
                timings: *timings,
            };
            let report = analyze(&space, &hex::encode(Sha256::digest(&bytes)), &opts)?;
            Ok(serde_json::to_value(&report).expect("report serializes"))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Validation(_) | Error::NoInvariantMeasure | Error::NotReversible(_) => EXIT_VALIDATION,
        Error::Hypothesis(_) => EXIT_HYPOTHESIS,
        _ => EXIT_STRUCTURAL,
    }
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, String> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("MRWS_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| format!("MRWS_THREADS must be a positive integer, got {v:?}")),
        _ => Ok(None),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match thread_count(cli.threads) {
        Ok(Some(0)) | Err(_) => {
            eprintln!("error: thread count must be a positive integer");
            return ExitCode::from(EXIT_USAGE);
        }
        Ok(Some(t)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_STRUCTURAL);
            }
        }
        Ok(None) => {}
    }
    match run(&cli.command) {
        Ok(value) => {
            let mut out = io::stdout().lock();
            if writeln!(out, "{}", to_canonical_json(&value)).is_err() {
                return ExitCode::from(EXIT_STRUCTURAL);
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Core(e)) => {
            if let Error::Validation(report) = &e {
                for r in &report.violations {
                    eprintln!(
                        "{}: residual {:e} > {:e} at {:?}",
                        r.axiom, r.max_residual, r.tolerance, r.location
                    );
                }
            }
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_STRUCTURAL)
        }
    }
}
