use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde::Serialize;

use nnreach::bounds::{crown_bounds, CrownOptions};
use nnreach::controllers::{quadrotor_controller, vehicle_controller};
use nnreach::parallel::Workers;
use nnreach::reach::montecarlo::trajectories_csv;
use nnreach::reach::{
    check_containment, check_safety, monte_carlo_trajectories, run_algorithm1, Method, ReachRun, ReachTube,
    Scenario, ScenarioConfig,
};
use nnreach::{FeedForwardNetwork, IntervalBox, ReachError, Strategy};

const MC_SLACK: f64 = 1e-7;
const NEST_SLACK: f64 = 1e-7;

#[derive(Parser)]
#[command(name = "nnreach", version, about = "Interval reachability of neural-network controlled systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a reach tube and check it against the scenario's obstacles.
    Reach(Manifest),
    /// Run several strategies on one scenario and check how the tubes nest.
    Compare {
        #[command(flatten)]
        manifest: Manifest,
        /// Comma separated strategy names or tags.
        #[arg(long, value_delimiter = ',', default_value = "global,hybrid,local")]
        strategies: Vec<Strategy>,
    },
    /// Sample closed-loop trajectories and check they stay in the tube.
    Validate {
        #[command(flatten)]
        manifest: Manifest,
        /// Existing tube file; computed from the scenario when omitted.
        #[arg(long)]
        tube: Option<PathBuf>,
        /// Defaults to the scenario's `mc_samples`.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Rectangle corners of a tube projected on two coordinates, as CSV.
    Plotdata {
        #[arg(long)]
        tube: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0,1")]
        dims: Vec<usize>,
        /// Written to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump the CROWN envelopes of a network on a box as JSON.
    Bounds {
        #[arg(long)]
        network: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        lower: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        upper: Vec<f64>,
        /// ibp or crown
        #[arg(long, default_value = "ibp")]
        intermediate: String,
        /// linear or constant
        #[arg(long, default_value = "linear")]
        relaxation: String,
        /// adaptive, zero or one
        #[arg(long, default_value = "adaptive")]
        relu_lower: String,
    },
    /// Write the reference controllers' weight files.
    Controllers {
        #[arg(long, default_value = "networks")]
        out: PathBuf,
    },
}

/// Scenario plus command-line overrides.
#[derive(Args, Clone, Serialize)]
struct Manifest {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    strategy: Option<Strategy>,
    #[arg(long = "Da")]
    d_a: Option<usize>,
    #[arg(long = "Ds")]
    d_s: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "T")]
    horizon: Option<f64>,
    #[arg(long)]
    integrator: Option<Method>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for partition branches; 1 runs sequentially.
    #[arg(long)]
    workers: Option<usize>,
    /// Repeat the run this many times for the timing summary.
    #[arg(long, default_value_t = 1)]
    repeat: usize,
    /// Output directory; defaults to the scenario's, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Violation(String),
    Error(ReachError),
}

impl From<ReachError> for Failure {
    fn from(e: ReachError) -> Self {
        Failure::Error(e)
    }
}

type CliResult<T = ()> = Result<T, Failure>;

impl Manifest {
    fn load(&self) -> CliResult<(Scenario, PathBuf, Workers)> {
        let mut cfg = ScenarioConfig::load(&self.scenario)?;
        if let Some(s) = self.strategy {
            cfg.strategy = s;
        }
        if let Some(d) = self.d_a {
            cfg.d_a = d;
        }
        if let Some(d) = self.d_s {
            cfg.d_s = d;
        }
        if let Some(dt) = self.dt {
            cfg.dt = dt;
        }
        if let Some(t) = self.horizon {
            cfg.horizon = t;
        }
        if self.integrator.is_some() || self.step.is_some() {
            let mut spec = cfg.integrator.clone().unwrap_or(nnreach::reach::scenario::IntegratorSpec {
                method: Method::Rk4,
                step: None,
            });
            if let Some(m) = self.integrator {
                spec.method = m;
            }
            if self.step.is_some() {
                spec.step = self.step;
            }
            cfg.integrator = Some(spec);
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if self.repeat == 0 {
            return Err(ReachError::Config("--repeat must be at least 1".into()).into());
        }
        let out = self
            .out
            .clone()
            .or_else(|| cfg.output_dir.as_ref().map(|p| cfg.resolve(p)))
            .unwrap_or_else(|| PathBuf::from("out"));
        let scenario = cfg.build()?;
        let workers = Workers::new(self.workers)?;
        Ok((scenario, out, workers))
    }
}

fn write(path: &Path, contents: &str) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| ReachError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, contents).map_err(|source| ReachError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    info!("wrote {}", path.display());
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

#[derive(Serialize)]
struct Timing {
    strategy: Strategy,
    repeat: usize,
    total_seconds: Vec<f64>,
    mean_seconds: f64,
    std_seconds: f64,
    mean_frame_seconds: Vec<f64>,
    crown_calls: u64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Runs `repeat` times; the tube is the same every time, so the last is kept.
fn run_repeated(sc: &Scenario, strategy: Strategy, repeat: usize, workers: &Workers) -> CliResult<(ReachRun, Timing)> {
    let mut settings = sc.config.settings();
    settings.strategy = strategy;
    let mut runs = Vec::with_capacity(repeat);
    for r in 0..repeat {
        let run = run_algorithm1(&sc.closed_loop, &sc.initial, &sc.disturbance, &settings, workers)?;
        info!("run {} of {}: {:.3}s", r + 1, repeat, run.stats.total_seconds);
        runs.push(run);
    }
    let totals: Vec<f64> = runs.iter().map(|r| r.stats.total_seconds).collect();
    let (mean, std) = mean_std(&totals);
    let frames = runs[0].stats.frame_seconds.len();
    let mean_frame_seconds = (0..frames)
        .map(|j| runs.iter().map(|r| r.stats.frame_seconds[j]).sum::<f64>() / repeat as f64)
        .collect();
    let run = runs.pop().expect("at least one run");
    let timing = Timing {
        strategy,
        repeat,
        total_seconds: totals,
        mean_seconds: mean,
        std_seconds: std,
        mean_frame_seconds,
        crown_calls: run.stats.crown_calls,
    };
    Ok((run, timing))
}

fn write_manifest(out: &Path, m: &Manifest, sc: &Scenario) -> CliResult {
    let doc = serde_json::json!({
        "manifest": m,
        "scenario": sc.config,
        "seed": sc.config.seed,
    });
    write(&out.join("manifest.json"), &to_json(&doc))
}

fn cmd_reach(m: &Manifest) -> CliResult {
    let (sc, out, workers) = m.load()?;
    let strategy = sc.config.strategy;
    let (run, timing) = run_repeated(&sc, strategy, m.repeat, &workers)?;
    let tube = &run.tube;
    write(&out.join("tube.json"), &tube.to_json())?;
    write(&out.join("tube.csv"), &tube.to_csv())?;
    let safety = check_safety(tube, &sc.config.obstacles)?;
    write(&out.join("safety.json"), &to_json(&safety))?;
    write(&out.join("timing.json"), &to_json(&timing))?;
    write_manifest(&out, m, &sc)?;

    println!(
        "{}: {}-frame tube ({} steps of {}s, Da={}, Ds={})",
        sc.config.name,
        tube.len(),
        tube.len() - 1,
        sc.config.dt,
        sc.config.d_a,
        sc.config.d_s
    );
    println!(
        "strategy {} ({}): {:.3}s ± {:.3}s over {} run(s), {} CROWN calls",
        strategy,
        strategy.tag(),
        timing.mean_seconds,
        timing.std_seconds,
        timing.repeat,
        timing.crown_calls
    );
    let final_hull = tube.final_hull();
    println!("final hull: lower {:?}", final_hull.lower());
    println!("            upper {:?}", final_hull.upper());
    if sc.config.obstacles.is_empty() {
        println!("safety: no obstacles declared");
    } else {
        let worst = safety.frames.iter().map(|f| f.min_clearance).fold(f64::INFINITY, f64::min);
        println!("safety: {:?} (smallest clearance {:.4})", safety.verdict, worst);
    }
    println!("artifacts in {}", out.display());
    Ok(())
}

/// Pairs `(inner, outer)` the theory says must nest.
const ORDERINGS: [(Strategy, Strategy); 4] = [
    (Strategy::Local, Strategy::Hybrid),
    (Strategy::Hybrid, Strategy::Global),
    (Strategy::Linear, Strategy::LinearHybrid),
    (Strategy::Linear, Strategy::Hybrid),
];

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn cmd_compare(m: &Manifest, strategies: &[Strategy]) -> CliResult {
    let (sc, out, workers) = m.load()?;
    let mut strategies = strategies.to_vec();
    strategies.dedup();
    let mut tubes = Vec::new();
    let mut table = String::from("strategy,tag,final_volume,mean_seconds,std_seconds,crown_calls\n");
    println!("{:<14} {:>5} {:>14} {:>18} {:>12}", "strategy", "tag", "final volume", "wall time (s)", "CROWN calls");
    for &s in &strategies {
        let (run, timing) = run_repeated(&sc, s, m.repeat, &workers)?;
        let vol = run.tube.final_hull().volume();
        println!(
            "{:<14} {:>5} {:>14.6e} {:>10.3} ± {:<5.3} {:>12}",
            s.cli_name(),
            s.tag(),
            vol,
            timing.mean_seconds,
            timing.std_seconds,
            timing.crown_calls
        );
        let _ = writeln!(
            table,
            "{},{},{vol},{},{},{}",
            s.cli_name(),
            s.tag(),
            timing.mean_seconds,
            timing.std_seconds,
            timing.crown_calls
        );
        write(&out.join(format!("tube_{}.json", s.cli_name())), &run.tube.to_json())?;
        write(&out.join(format!("timing_{}.json", s.cli_name())), &to_json(&timing))?;
        tubes.push((s, run.tube));
    }
    write(&out.join("compare.csv"), &table)?;

    let find = |s: Strategy| tubes.iter().find(|(t, _)| *t == s).map(|(_, tube)| tube);
    let mut checks = Vec::new();
    for (inner, outer) in ORDERINGS {
        let (Some(a), Some(b)) = (find(inner), find(outer)) else {
            continue;
        };
        let excess = a.excess_over(b)?;
        let ok = excess.iter().all(|e| *e <= NEST_SLACK);
        let worst = excess.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let bad: Vec<usize> = (0..excess.len()).filter(|&j| excess[j] > NEST_SLACK).collect();
        print!("{} ⊆ {}: {} (largest excess {:.3e})", inner.tag(), outer.tag(), verdict(ok), worst);
        if bad.is_empty() {
            println!();
        } else {
            println!(", frames {bad:?}");
        }
        checks.push((inner, outer, ok, excess));
    }
    let passed = |i: Strategy, o: Strategy| checks.iter().any(|c| c.0 == i && c.1 == o && c.2);
    if [Strategy::Local, Strategy::Hybrid, Strategy::Global].iter().all(|s| find(*s).is_some()) {
        let ok = passed(Strategy::Local, Strategy::Hybrid) && passed(Strategy::Hybrid, Strategy::Global);
        println!("L ⊆ H ⊆ G: {}", verdict(ok));
    }
    let json: Vec<_> = checks
        .iter()
        .map(|(i, o, ok, e)| serde_json::json!({"inner": i, "outer": o, "pass": ok, "excess_per_frame": e}))
        .collect();
    write(&out.join("compare.json"), &to_json(&serde_json::json!({ "nesting": json })))?;
    if checks.iter().all(|c| c.2) {
        Ok(())
    } else {
        Err(Failure::Violation("tubes do not nest as expected".into()))
    }
}

fn cmd_validate(m: &Manifest, tube_path: Option<&Path>, samples: Option<usize>) -> CliResult {
    let (sc, out, workers) = m.load()?;
    let settings = sc.config.settings();
    let tube = match tube_path {
        Some(p) => ReachTube::load(p)?,
        None => run_algorithm1(&sc.closed_loop, &sc.initial, &sc.disturbance, &settings, &workers)?.tube,
    };
    if tube.len() != settings.steps() + 1 {
        return Err(ReachError::Config(format!(
            "tube has {} frames but the scenario needs {}",
            tube.len(),
            settings.steps() + 1
        ))
        .into());
    }
    let n = samples.unwrap_or(sc.config.mc_samples);
    if n == 0 {
        warn!("no samples requested; containment holds trivially");
    }
    let trajs = monte_carlo_trajectories(
        &sc.closed_loop,
        &sc.initial,
        &sc.disturbance,
        &settings,
        n,
        sc.config.seed,
        &workers,
    )?;
    let report = check_containment(&tube, &trajs, MC_SLACK)?;
    write(&out.join("containment.json"), &to_json(&report))?;
    write(
        &out.join("mc.csv"),
        &trajectories_csv(&trajs, &tube.times, &tube.state_labels),
    )?;
    write_manifest(&out, m, &sc)?;
    println!(
        "{} violations / {} frames ({} samples, seed {}, slack {:e})",
        report.violations.len(),
        tube.len() - 1,
        n,
        sc.config.seed,
        MC_SLACK
    );
    let margin = report.min_margin.iter().copied().fold(f64::INFINITY, f64::min);
    if n > 0 {
        println!("smallest margin to a hull face: {margin:.3e}");
    }
    if report.passed() {
        Ok(())
    } else {
        for j in report.violating_frames() {
            let count = report.violations.iter().filter(|v| v.frame == j).count();
            println!("frame {j}: {count} violation(s)");
        }
        Err(Failure::Violation("sampled trajectories leave the tube".into()))
    }
}

fn cmd_plotdata(tube: &Path, dims: &[usize], out: Option<&Path>) -> CliResult {
    let &[a, b] = dims else {
        return Err(ReachError::Config(format!("--dims takes two coordinates, got {}", dims.len())).into());
    };
    let tube = ReachTube::load(tube)?;
    let csv = tube.projection_csv(a, b)?;
    match out {
        Some(p) => write(p, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn parse_option<T: serde::de::DeserializeOwned>(flag: &str, v: &str) -> CliResult<T> {
    serde_json::from_value(serde_json::Value::String(v.to_string()))
        .map_err(|_| ReachError::Config(format!("invalid value `{v}` for --{flag}")).into())
}

fn cmd_bounds(network: &Path, lower: &[f64], upper: &[f64], opts: [&str; 3]) -> CliResult {
    let net = FeedForwardNetwork::load(network)?;
    let b = IntervalBox::new(lower.to_vec(), upper.to_vec())?;
    let options = CrownOptions {
        intermediate: parse_option("intermediate", opts[0])?,
        relaxation: parse_option("relaxation", opts[1])?,
        relu_lower: parse_option("relu-lower", opts[2])?,
    };
    let lb = crown_bounds(&net, &b, &options)?;
    let mut doc = lb.to_json();
    let ob = lb.output_box();
    doc["output_box"] = serde_json::json!({"lower": ob.lower(), "upper": ob.upper()});
    print!("{}", to_json(&doc));
    Ok(())
}

fn cmd_controllers(out: &Path) -> CliResult {
    write(&out.join("vehicle.json"), &(vehicle_controller().to_json() + "\n"))?;
    write(&out.join("quadrotor6d.json"), &(quadrotor_controller(9.8).to_json() + "\n"))?;
    Ok(())
}

fn exit_code(e: &ReachError) -> u8 {
    if e.is_numerical() {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("REACH_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Reach(m) => cmd_reach(m),
        Command::Compare { manifest, strategies } => cmd_compare(manifest, strategies),
        Command::Validate {
            manifest,
            tube,
            samples,
        } => cmd_validate(manifest, tube.as_deref(), *samples),
        Command::Plotdata { tube, dims, out } => cmd_plotdata(tube, dims, out.as_deref()),
        Command::Bounds {
            network,
            lower,
            upper,
            intermediate,
            relaxation,
            relu_lower,
        } => cmd_bounds(network, lower, upper, [intermediate, relaxation, relu_lower]),
        Command::Controllers { out } => cmd_controllers(out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
