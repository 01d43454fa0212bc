mod config;
mod error;
mod output;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use multidelay::approx::{classify_coeffs, critical_delay, taylor_coeffs, CosineForm};
use multidelay::compare23::{compare_stability, SymmetricPair};
use multidelay::integrator::{
    default_step, integrate_approx, integrate_fluid_mnl, integrate_multi_delay, HistorySpec,
};
use multidelay::moments::{abs_moment_maximizers, central_moment_two_point, extreme_points};
use multidelay::queue_sim::{fluid_error, simulate_scaled_queue};
use multidelay::spectral::{char_roots_constant, rightmost_root};
use multidelay::sweep::{
    accuracy, accuracy_table, render_svg, run_sweep, table_layout, write_comparison_csv,
    write_map_csv, Classifier,
};
use multidelay::{DeltaStarRule, GridSpec, GroundTruthMethod, LinearModel, QueueModel};
use serde_json::json;

use crate::config::{parse_kind, RunConfig};
use crate::error::{lib, CliError};
use crate::output::{to_bytes, Artifacts};

#[derive(Parser)]
#[command(
    name = "multidelay",
    version,
    about = "Stability of multi-delay equations through single-delay approximations"
)]
struct Cli {
    /// JSON file with alpha0, C, delays, probs, delta_star_rule, kind, seed
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for output artifacts
    #[arg(long, global = true, env = "MULTIDELAY_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads for sweeps (default: available parallelism)
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct ModelArgs {
    #[arg(long, allow_hyphen_values = true)]
    alpha0: Option<f64>,
    #[arg(long = "C", allow_hyphen_values = true)]
    c: Option<f64>,
    /// Comma-separated delays
    #[arg(long, value_delimiter = ',')]
    delays: Option<Vec<f64>>,
    /// Comma-separated probabilities
    #[arg(long, value_delimiter = ',')]
    probs: Option<Vec<f64>>,
    /// first, second, midpoint, mean, median or fixed=<x>
    #[arg(long)]
    rule: Option<DeltaStarRule>,
    /// constant, neutral, second, second-published, second-positive
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ModelArgs {
    fn into_config(self) -> RunConfig {
        RunConfig {
            alpha0: self.alpha0,
            c: self.c,
            delays: self.delays,
            probs: self.probs,
            delta_star_rule: self.rule,
            kind: self.kind,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Truth {
    Spectral,
    Integrator,
}

#[derive(Clone, Copy, ValueEnum)]
enum SecondForm {
    Published,
    Solved,
}

#[derive(Subcommand)]
enum Command {
    /// Taylor coefficients, crossing frequency, critical delay and verdict of one point
    Critical(ModelArgs),
    /// Stability maps over a grid of delays, with accuracy against the ground truth
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0.01)]
        lo: f64,
        #[arg(long, default_value_t = 1.0)]
        hi: f64,
        #[arg(long, default_value_t = 100)]
        resolution: usize,
        /// Approximations to compare, comma-separated
        #[arg(long, value_delimiter = ',', default_value = "neutral,second")]
        approx: Vec<String>,
        #[arg(long, value_enum, default_value = "spectral")]
        truth: Truth,
        /// Also write one SVG per approximation
        #[arg(long)]
        svg: bool,
    },
    /// Reproduce one of the accuracy tables (1 to 6)
    Tables {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=6))]
        which: u8,
        /// Cosine formula for second-derivative columns
        #[arg(long, value_enum, default_value = "published")]
        second_form: SecondForm,
        /// Override the grid resolution per axis
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Central moments of the two-point delay against p, and their extreme points
    Moments {
        #[arg(long, default_value_t = 1.4)]
        delta1: f64,
        #[arg(long, default_value_t = 0.4)]
        delta2: f64,
        #[arg(long, default_value_t = 10)]
        max_order: u32,
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Rightmost characteristic root, and Lambert W branch roots for a single delay
    Roots {
        #[command(flatten)]
        model: ModelArgs,
        /// Branches -K..=K for the single-delay case
        #[arg(long, default_value_t = 3)]
        branches: i32,
    },
    /// Time-step the multi-delay equation or one of its approximations
    Integrate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 50.0)]
        t_end: f64,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        history: f64,
        /// Integrate this approximation instead of the multi-delay equation
        #[arg(long)]
        approx: Option<String>,
        /// Write every n-th node
        #[arg(long, default_value_t = 1)]
        stride: usize,
    },
    /// Scaled queueing simulation against the fluid limit
    QueueSim {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 2)]
        queues: usize,
        #[arg(long, default_value_t = 2.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, default_value_t = 5.0)]
        theta: f64,
        /// Comma-separated initial fluid levels (default: equilibrium)
        #[arg(long, value_delimiter = ',')]
        history: Option<Vec<f64>>,
        #[arg(long, default_value_t = 200)]
        eta: u64,
        #[arg(long, default_value_t = 10.0)]
        t_end: f64,
        #[arg(long, default_value_t = 0.01)]
        spacing: f64,
    },
    /// Symmetric two-delay versus three-delay verdicts
    Compare23 {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0.3)]
        delta1: f64,
        #[arg(long, default_value_t = 0.7)]
        delta3: f64,
        #[arg(
            long = "p",
            value_delimiter = ',',
            default_value = "0.1,0.2,0.3,0.4,0.5"
        )]
        ps: Vec<f64>,
    },
}

fn resolve(file: &Option<PathBuf>, flags: ModelArgs) -> Result<RunConfig, CliError> {
    let base = match file {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let mut cfg = base.merged(flags.into_config());
    cfg.delta_star_rule.get_or_insert(DeltaStarRule::Mean);
    Ok(cfg)
}

/// The model of the published tables unless one is given.
fn model_or_default(cfg: &mut RunConfig) -> Result<LinearModel, CliError> {
    cfg.alpha0.get_or_insert(-1.0);
    cfg.c.get_or_insert(-5.0);
    cfg.model()
}

fn print_json(value: &serde_json::Value) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(
        out,
        "{}",
        serde_json::to_string_pretty(value).expect("serializable")
    );
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot set workers: {e}")))?;
    }
    let out = &cli.out_dir;
    match cli.command {
        Command::Critical(flags) => {
            let cfg = resolve(&cli.config, flags)?;
            let model = cfg.model()?;
            let dist = cfg.dist()?;
            let rule = cfg.rule();
            let kind = cfg.approx_kind()?;
            let cfg = RunConfig {
                kind: Some(kind.to_string()),
                ..cfg
            };
            let coeffs = taylor_coeffs(&model, &dist, rule).map_err(lib)?;
            let crossing = critical_delay(&model, &coeffs, kind).map_err(lib)?;
            let verdict = classify_coeffs(&model, &coeffs, kind);
            let record = json!({
                "kind": kind.to_string(),
                "rule": rule.to_string(),
                "delta_star": coeffs.delta_star,
                "A0": coeffs.a0,
                "A1": coeffs.a1,
                "A2": coeffs.a2,
                "omega": crossing.omega,
                "delta_cr": crossing.delay,
                "verdict": verdict.class.to_string(),
                "diagnostic": verdict.diagnostic,
            });
            print_json(&record);
            let mut files = Artifacts::new(out)?;
            files.write_json("critical.json", &record)?;
            files.finish("critical", &cfg, None)
        }
        Command::Sweep {
            model,
            lo,
            hi,
            resolution,
            approx,
            truth,
            svg,
        } => {
            let cfg = resolve(&cli.config, model)?;
            let lin = cfg.model()?;
            let probs = cfg.probs()?;
            let grid = GridSpec::new(
                vec![lo; probs.len()],
                vec![hi; probs.len()],
                vec![resolution; probs.len()],
            )
            .map_err(lib)?;
            let kinds = approx
                .iter()
                .map(|k| parse_kind(k))
                .collect::<Result<Vec<_>, _>>()?;
            let method = match truth {
                Truth::Spectral => GroundTruthMethod::Spectral,
                Truth::Integrator => GroundTruthMethod::Integrator,
            };
            let rule = cfg.rule();
            let mut files = Artifacts::new(out)?;
            let reference =
                run_sweep(&lin, &probs, &grid, Classifier::GroundTruth(method)).map_err(lib)?;
            files.write("map_truth.csv", &to_bytes(|b| write_map_csv(&reference, b)))?;
            let mut summary = serde_json::Map::new();
            for kind in kinds {
                let map = run_sweep(&lin, &probs, &grid, Classifier::Approx { kind, rule })
                    .map_err(lib)?;
                let acc = accuracy(&map, &reference).map_err(lib)?;
                summary.insert(format!("{kind}/{rule}"), json!(acc));
                files.write(
                    &format!("map_{kind}.csv"),
                    &to_bytes(|b| write_map_csv(&map, b)),
                )?;
                files.write(
                    &format!("comparison_{kind}.csv"),
                    &to_bytes(|b| write_comparison_csv(&map, &reference, b)),
                )?;
                if svg {
                    let image = render_svg(&map, Some(&reference)).map_err(lib)?;
                    files.write(&format!("map_{kind}.svg"), image.as_bytes())?;
                }
            }
            let summary = json!({ "probs": probs, "accuracy": summary });
            print_json(&summary);
            files.write_json("accuracy.json", &summary)?;
            files.finish("sweep", &cfg, None)
        }
        Command::Tables {
            model,
            which,
            second_form,
            resolution,
        } => {
            let mut cfg = resolve(&cli.config, model)?;
            let lin = model_or_default(&mut cfg)?;
            let form = match second_form {
                SecondForm::Published => CosineForm::Published,
                SecondForm::Solved => CosineForm::Solved,
            };
            let (probs, columns, mut grid) = table_layout(which, form).map_err(lib)?;
            if let Some(n) = resolution {
                grid = GridSpec::new(grid.lo().to_vec(), grid.hi().to_vec(), vec![n; grid.dims()])
                    .map_err(lib)?;
            }
            let table = accuracy_table(&lin, &probs, &columns, &grid).map_err(lib)?;
            let mut files = Artifacts::new(out)?;
            files.write(
                &format!("table{which}.csv"),
                &to_bytes(|b| table.write_csv(b)),
            )?;
            let averages: serde_json::Map<_, _> = table
                .columns
                .iter()
                .zip(&table.averages)
                .map(|((k, r), a)| (format!("{k}/{r}"), json!(a)))
                .collect();
            print_json(&json!({ "table": which, "averages": averages }));
            files.finish("tables", &cfg, None)
        }
        Command::Moments {
            delta1,
            delta2,
            max_order,
            points,
        } => {
            if points < 2 || max_order == 0 {
                return Err(CliError::Usage(
                    "need --points >= 2 and --max-order >= 1".into(),
                ));
            }
            let mut csv = String::from("p");
            for n in 1..=max_order {
                csv.push_str(&format!(",m{n}"));
            }
            csv.push('\n');
            for i in 0..points {
                let p = i as f64 / (points - 1) as f64;
                csv.push_str(&p.to_string());
                for n in 1..=max_order {
                    csv.push_str(&format!(
                        ",{}",
                        central_moment_two_point(delta1, delta2, p, n)
                    ));
                }
                csv.push('\n');
            }
            let extremes: Vec<_> = (2..=max_order)
                .map(|n| {
                    json!({
                        "n": n,
                        "extreme_points": extreme_points(n),
                        "abs_maximizers": abs_moment_maximizers(delta1, delta2, n),
                    })
                })
                .collect();
            let mut files = Artifacts::new(out)?;
            files.write("moments.csv", csv.as_bytes())?;
            files.write_json("extremes.json", &extremes)?;
            let cfg = json!({ "delta1": delta1, "delta2": delta2, "max_order": max_order, "points": points });
            files.finish("moments", &cfg, None)
        }
        Command::Roots { model, branches } => {
            let cfg = resolve(&cli.config, model)?;
            let lin = cfg.model()?;
            let dist = cfg.dist()?;
            let root = rightmost_root(&lin, &dist).map_err(lib)?;
            let mut record = json!({ "rightmost": root });
            if dist.min_delay() == dist.max_delay() {
                let b = branches.abs();
                let roots = char_roots_constant(&lin, dist.min_delay(), -b..=b).map_err(lib)?;
                record["branches"] = json!(roots);
            }
            print_json(&record);
            let mut files = Artifacts::new(out)?;
            files.write_json("roots.json", &record)?;
            files.finish("roots", &cfg, None)
        }
        Command::Integrate {
            model,
            t_end,
            step,
            history,
            approx,
            stride,
        } => {
            let cfg = resolve(&cli.config, model)?;
            let lin = cfg.model()?;
            let dist = cfg.dist()?;
            let hist = HistorySpec::constant(history).map_err(lib)?;
            let traj = match approx {
                None => integrate_multi_delay(
                    &lin,
                    &dist,
                    &hist,
                    t_end,
                    step.unwrap_or_else(|| default_step(dist.min_delay())),
                ),
                Some(k) => {
                    let kind = parse_kind(&k)?;
                    let coeffs = taylor_coeffs(&lin, &dist, cfg.rule()).map_err(lib)?;
                    let h = step.unwrap_or_else(|| default_step(coeffs.delta_star));
                    integrate_approx(&lin, &coeffs, kind, &hist, t_end, h)
                }
            }
            .map_err(lib)?;
            let mut files = Artifacts::new(out)?;
            files.write(
                "trajectory.csv",
                &to_bytes(|b| traj.write_csv(b, stride.max(1))),
            )?;
            files.finish("integrate", &cfg, None)
        }
        Command::QueueSim {
            model,
            queues,
            lambda,
            mu,
            theta,
            history,
            eta,
            t_end,
            spacing,
        } => {
            let cfg = resolve(&cli.config, model)?;
            let dist = cfg.dist()?;
            let seed = cfg.seed.unwrap_or(0);
            let q = match history {
                Some(h) => QueueModel::new(queues, lambda, mu, theta, dist.clone(), h),
                None => QueueModel::at_equilibrium(queues, lambda, mu, theta, dist.clone()),
            }
            .map_err(lib)?;
            let log = simulate_scaled_queue(&q, eta, t_end, seed);
            let fluid =
                integrate_fluid_mnl(&q, t_end, default_step(dist.min_delay())).map_err(lib)?;
            let err = fluid_error(&q, eta, t_end, seed).map_err(lib)?;
            let summary = json!({
                "eta": eta,
                "seed": seed,
                "arrivals": log.arrivals,
                "departures": log.departures,
                "fluid_error": err,
            });
            print_json(&summary);
            let mut files = Artifacts::new(out)?;
            files.write(
                "queue_path.csv",
                &to_bytes(|b| log.write_path_csv(b, spacing)),
            )?;
            files.write("fluid.csv", &to_bytes(|b| fluid.write_csv(b, 1)))?;
            files.write_json("queue_summary.json", &summary)?;
            let resolved = json!({
                "model": cfg, "queues": queues, "lambda": lambda, "mu": mu, "theta": theta,
                "history": q.history, "eta": eta, "t_end": t_end, "spacing": spacing,
            });
            files.finish("queue-sim", &resolved, Some(seed))
        }
        Command::Compare23 {
            model,
            delta1,
            delta3,
            ps,
        } => {
            let mut cfg = resolve(&cli.config, model)?;
            let lin = model_or_default(&mut cfg)?;
            let mut csv = String::from("p,verdict2,verdict3\n");
            for p in &ps {
                let pair = SymmetricPair::new(delta1, delta3, *p).map_err(lib)?;
                let (two, three) = compare_stability(&pair, &lin);
                csv.push_str(&format!("{p},{},{}\n", two.class, three.class));
            }
            let mut files = Artifacts::new(out)?;
            files.write("compare23.csv", csv.as_bytes())?;
            print!("{csv}");
            let resolved = json!({ "model": cfg, "delta1": delta1, "delta3": delta3, "p": ps });
            files.finish("compare23", &resolved, None)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
