//! Command-line front end: train / eval / reach / gen-ref / inspect-buffer.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stbound::checkpoint::Checkpoint;
use stbound::config::RunConfig;
use stbound::dynsys::SystemKind;
use stbound::feasible::{
    backward_reach, feasible_region, forward_reach, max_abs_x_center, region_volume, toy_bound_b1,
    toy_bound_b2, toy_end, toy_start, GridSpec, ToyBound,
};
use stbound::rlcore::{action_channels, feature_dim};
use stbound::svg::{region_csv, region_svg};
use stbound::train::{evaluate, run_training, TrainError};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(name = "stbound", version, about = "Spacetime-bounded policy training toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train a policy from a run configuration.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// override run.seed from the config
        #[arg(long)]
        seed: Option<u64>,
        /// override run.out from the config
        #[arg(long)]
        out: Option<PathBuf>,
        /// worker threads; any count gives identical results
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
    },
    /// Evaluate a checkpoint with exploration off.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// directory for per-episode trajectory CSVs
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Feasible-region analysis for the bounded double integrator.
    Reach {
        /// optional run config; the system must be the double integrator
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "reach_out")]
        out: PathBuf,
        /// grid refinement factor applied to all three axes
        #[arg(long, default_value_t = 1)]
        refine: usize,
    },
    /// Write a generated reference motion to CSV.
    GenRef {
        /// builtin name; see `gen-ref list`
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize a dumped elite start buffer.
    InspectBuffer {
        /// run output directory, or the elite_buffer.csv itself
        path: PathBuf,
    },
}

fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Train {
            config,
            seed,
            out,
            workers,
        } => cmd_train(&config, seed, out, workers),
        Cmd::Eval {
            config,
            checkpoint,
            episodes,
            seed,
            out,
        } => cmd_eval(&config, &checkpoint, episodes, seed, out),
        Cmd::Reach {
            config,
            out,
            refine,
        } => cmd_reach(config.as_deref(), &out, refine),
        Cmd::GenRef { name, out } => cmd_gen_ref(&name, out),
        Cmd::InspectBuffer { path } => cmd_inspect_buffer(&path),
    }
}

fn load_config(path: &Path, seed: Option<u64>, out: Option<&PathBuf>) -> Result<RunConfig, u8> {
    let mut cfg = RunConfig::load(path).map_err(|e| {
        eprintln!("config error: {e}");
        EXIT_CONFIG
    })?;
    if let Some(s) = seed {
        cfg.run.seed = s;
    }
    if let Some(o) = out {
        cfg.run.out = o.display().to_string();
    }
    Ok(cfg)
}

fn cmd_train(config: &Path, seed: Option<u64>, out: Option<PathBuf>, workers: usize) -> ExitCode {
    let cfg = match load_config(config, seed, out.as_ref()) {
        Ok(c) => c,
        Err(code) => return ExitCode::from(code),
    };
    let out_dir = PathBuf::from(cfg.run.out.clone());
    match run_training(cfg, workers, &out_dir) {
        Ok(outcome) => {
            for log in &outcome.logs {
                println!("{}", log.csv_row());
            }
            if let Some(epoch) = outcome.aborted_epoch {
                eprintln!(
                    "training aborted: non-finite state at epoch {epoch}; last checkpoint kept at {}",
                    outcome.final_checkpoint.display()
                );
                return ExitCode::from(EXIT_NUMERIC);
            }
            println!("final checkpoint: {}", outcome.final_checkpoint.display());
            ExitCode::SUCCESS
        }
        Err(TrainError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(TrainError::NonFinite(epoch)) => {
            eprintln!("training aborted: non-finite state at epoch {epoch}");
            ExitCode::from(EXIT_NUMERIC)
        }
        Err(e) => {
            eprintln!("training failed: {e}");
            ExitCode::from(EXIT_NUMERIC)
        }
    }
}

fn cmd_eval(
    config: &Path,
    checkpoint: &Path,
    episodes: usize,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> ExitCode {
    let cfg = match load_config(config, seed, None) {
        Ok(c) => c,
        Err(code) => return ExitCode::from(code),
    };
    let spec = cfg.build_system();
    let motion = match cfg.build_reference() {
        Ok(m) => m,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let bounds = match cfg.build_bounds(&spec, &motion) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let ck = match Checkpoint::load(checkpoint) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("checkpoint error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let expected = action_channels(spec.kind);
    if ck.action_channels != expected {
        eprintln!(
            "checkpoint mismatch: trained for action channels {:?}, config needs {:?}",
            ck.action_channels, expected
        );
        return ExitCode::from(EXIT_CONFIG);
    }
    let indices = match motion.action_indices(&expected) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let (policy, value_net) = match ck.to_nets(indices) {
        Ok(n) => n,
        Err(e) => {
            eprintln!("checkpoint error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if policy.fbc.input_dim() != feature_dim(spec.kind) {
        eprintln!(
            "checkpoint mismatch: policy input dim {} does not fit system feature dim {}",
            policy.fbc.input_dim(),
            feature_dim(spec.kind)
        );
        return ExitCode::from(EXIT_CONFIG);
    }
    let report = match evaluate(
        &cfg,
        &spec,
        &motion,
        &bounds,
        &policy,
        &value_net,
        episodes,
        cfg.run.seed,
        out.as_deref(),
    ) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("evaluation failed: {e}");
            return ExitCode::from(EXIT_NUMERIC);
        }
    };
    println!("episodes: {}", report.episodes);
    println!("completion_rate: {}", report.completion_rate());
    println!("mean_length: {}", report.mean_len);
    println!("mean_return: {}", report.mean_return);
    println!("mean_energy: {}", report.mean_energy);
    for (name, d) in &report.max_dev {
        println!("max_dev.{name}: {d}");
    }
    ExitCode::SUCCESS
}

fn cmd_reach(config: Option<&Path>, out: &Path, refine: usize) -> ExitCode {
    let a_max = if let Some(path) = config {
        let cfg = match load_config(path, None, None) {
            Ok(c) => c,
            Err(code) => return ExitCode::from(code),
        };
        if cfg.system.kind != SystemKind::DoubleIntegrator1D {
            eprintln!("config error: reach analysis supports only the double integrator");
            return ExitCode::from(EXIT_CONFIG);
        }
        cfg.system.a_max
    } else {
        2.0
    };
    if refine == 0 {
        eprintln!("config error: --refine must be >= 1");
        return ExitCode::from(EXIT_CONFIG);
    }
    if let Err(e) = std::fs::create_dir_all(out) {
        eprintln!("output error: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    let grid = GridSpec::default().refined(refine);
    let start = toy_start();
    let end = toy_end(grid.t_end);
    let sets: [(&str, Vec<ToyBound>); 3] = [
        ("e1_e2", vec![start.clone(), end.clone()]),
        ("e1_e2_b1", vec![start.clone(), end.clone(), toy_bound_b1()]),
        (
            "e1_e2_b1_b2",
            vec![start.clone(), end.clone(), toy_bound_b1(), toy_bound_b2()],
        ),
    ];
    let mut volumes = Vec::new();
    for (name, bounds) in &sets {
        let fwd = match forward_reach(&grid, a_max, &start, bounds) {
            Ok(g) => g,
            Err(e) => {
                eprintln!("reach failed: {e}");
                return ExitCode::from(EXIT_NUMERIC);
            }
        };
        let bwd = match backward_reach(&grid, a_max, &end, bounds) {
            Ok(g) => g,
            Err(e) => {
                eprintln!("reach failed: {e}");
                return ExitCode::from(EXIT_NUMERIC);
            }
        };
        let region = match feasible_region(&fwd, &bwd) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("reach failed: {e}");
                return ExitCode::from(EXIT_NUMERIC);
            }
        };
        let vol = region_volume(&region);
        let max_x = max_abs_x_center(&grid, &region);
        println!(
            "{name}: volume = {vol}, cells = {}, max |x| = {max_x}",
            region.marked_count()
        );
        let csv = region_csv(&grid, &region);
        let svg = region_svg(&grid, &region, bounds, Some(&[(0.0, 0.0), (grid.t_end, 0.0)]));
        let w = std::fs::write(out.join(format!("region_{name}.csv")), csv)
            .and_then(|_| std::fs::write(out.join(format!("region_{name}.svg")), svg));
        if let Err(e) = w {
            eprintln!("output error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
        volumes.push(vol);
    }
    if !(volumes[0] > volumes[1] && volumes[1] > volumes[2]) {
        eprintln!("reach failed: volumes do not strictly decrease: {volumes:?}");
        return ExitCode::from(EXIT_NUMERIC);
    }
    println!("volumes strictly decrease as bounds are added");
    ExitCode::SUCCESS
}

fn cmd_gen_ref(name: &str, out: Option<PathBuf>) -> ExitCode {
    if name == "list" {
        for n in stbound::reference_gen::builtin_names() {
            println!("{n}");
        }
        return ExitCode::SUCCESS;
    }
    let motion = match stbound::reference_gen::builtin(name) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let csv = motion.to_csv();
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, csv) {
                eprintln!("output error: {e}");
                return ExitCode::from(EXIT_CONFIG);
            }
            println!("wrote {}", path.display());
        }
        None => print!("{csv}"),
    }
    ExitCode::SUCCESS
}

fn cmd_inspect_buffer(path: &Path) -> ExitCode {
    let file = if path.is_dir() {
        path.join("elite_buffer.csv")
    } else {
        path.to_path_buf()
    };
    let text = match std::fs::read_to_string(&file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("config error: cannot read {}: {e}", file.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    // segment -> (count, sum w, min t, max t)
    let mut stats: Vec<(usize, usize, f64, f64, f64)> = Vec::new();
    for line in text.lines().skip(1) {
        let mut it = line.split(',');
        let (Some(seg), Some(t), _, _, Some(w)) = (
            it.next().and_then(|s| s.parse::<usize>().ok()),
            it.next().and_then(|s| s.parse::<f64>().ok()),
            it.next(),
            it.next(),
            it.next().and_then(|s| s.parse::<f64>().ok()),
        ) else {
            eprintln!("config error: malformed buffer line '{line}'");
            return ExitCode::from(EXIT_CONFIG);
        };
        match stats.iter_mut().find(|s| s.0 == seg) {
            Some(s) => {
                s.1 += 1;
                s.2 += w;
                s.3 = s.3.min(t);
                s.4 = s.4.max(t);
            }
            None => stats.push((seg, 1, w, t, t)),
        }
    }
    if stats.is_empty() {
        println!("buffer is empty");
        return ExitCode::SUCCESS;
    }
    stats.sort_by_key(|s| s.0);
    println!("segment,entries,mean_w,t_min,t_max");
    for (seg, n, wsum, tmin, tmax) in stats {
        println!("{seg},{n},{},{tmin},{tmax}", wsum / n as f64);
    }
    ExitCode::SUCCESS
}
