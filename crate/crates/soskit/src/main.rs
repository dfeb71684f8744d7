//! `soskit`: extract, edit, and serve salient orientation symbol scripts.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use soskit_core::features::Part;
use soskit_core::optimizer::{l2_rot6d, sos_accuracy, Mode, StepRule};
use soskit_core::svg::{render_staff_svg, SvgOptions};
use soskit_core::{parse_sos_json, serialize_motion_json, serialize_sos_json, synth, Motion, SosScript};
use soskit::ops::{self, ExtractParams};
use soskit::Config;

/// Bad invocation: exit code 2.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Parser)]
#[command(name = "soskit", version, about = "Salient orientation symbol scripts for skeletal motion")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

fn unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn part_list(s: &str) -> Result<Part, String> {
    s.parse::<Part>().map_err(|e| e.to_string())
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Direct,
    Periodic,
}

#[derive(Clone, Copy, ValueEnum)]
enum StepArg {
    Backtracking,
    Fixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum FixtureKind {
    Static,
    ArmSwing,
    Dance,
    Perturbed,
}

#[derive(Subcommand)]
enum Command {
    /// Extract an SOS script from a motion (JSON or BVH).
    Extract {
        motion: PathBuf,
        /// Relative saliency threshold in [0, 1].
        #[arg(long, value_parser = unit_interval, conflicts_with = "percentiles")]
        threshold: Option<f64>,
        /// Six per-part percentiles in staff order (RT,LA,LL,RL,RA,SP).
        #[arg(long, value_parser = unit_interval, value_delimiter = ',')]
        percentiles: Option<Vec<f64>>,
        /// Keep only these columns, e.g. `LA,RA`.
        #[arg(long, value_parser = part_list, value_delimiter = ',')]
        parts: Option<Vec<Part>>,
        /// Also place every column's symbol on frame 0.
        #[arg(long)]
        first_frame: bool,
        #[arg(long)]
        text: Option<String>,
        /// Script output; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Per-part saliency tracks as JSON.
        #[arg(long)]
        saliency: Option<PathBuf>,
    },
    /// Edit a motion until it realizes a script.
    Optimize {
        motion: PathBuf,
        sos: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        harmonics: Option<usize>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, value_enum)]
        step: Option<StepArg>,
        #[arg(long)]
        step_weight: Option<f64>,
        #[arg(long)]
        lambda_smooth: Option<f64>,
        #[arg(long)]
        lambda_init: Option<f64>,
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Loss per iteration as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// SOS accuracy of a motion and its 6D rotation distance to a reference.
    Metrics {
        motion: PathBuf,
        reference: PathBuf,
        sos: PathBuf,
    },
    /// Sample scripts at random per-part saliency percentiles.
    Augment {
        motion: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        samples: usize,
        /// Directory receiving `sos_000.json`, `sos_001.json`, ...
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Draw a script as an SVG staff.
    Render {
        sos: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        pixels_per_frame: Option<f64>,
        #[arg(long)]
        column_width: Option<f64>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "SOSKIT_PORT")]
        port: Option<u16>,
        #[arg(long)]
        bind: Option<std::net::IpAddr>,
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
    /// Write a synthetic motion.
    Fixture {
        #[arg(value_enum)]
        kind: FixtureKind,
        #[arg(long)]
        frames: Option<usize>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read_input(path: &Path) -> anyhow::Result<String> {
    if !path.exists() {
        return Err(usage(format!("{}: no such file", path.display())));
    }
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_motion(path: &Path, cfg: &Config) -> anyhow::Result<Motion> {
    let text = read_input(path)?;
    ops::parse_motion_file(path, &text, cfg).with_context(|| format!("loading {}", path.display()))
}

fn load_script(path: &Path) -> anyhow::Result<SosScript> {
    let text = read_input(path)?;
    parse_sos_json(&text).with_context(|| format!("loading {}", path.display()))
}

/// Writes `text` plus a newline to `path`, or to standard output.
fn emit(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = Config::load(cli.config.as_deref()).map_err(|e| usage(format!("{e:#}")))?;
    match cli.command {
        Command::Extract {
            motion,
            threshold,
            percentiles,
            parts,
            first_frame,
            text,
            out,
            svg,
            saliency,
        } => {
            let percentiles = match percentiles {
                Some(p) => Some(<[f64; 6]>::try_from(p.as_slice()).map_err(|_| usage(format!("--percentiles takes 6 values, got {}", p.len())))?),
                None => None,
            };
            let m = load_motion(&motion, &cfg)?;
            let params = ExtractParams {
                theta: threshold,
                percentiles,
                parts,
                include_first_frame: first_frame,
                text,
            };
            let x = ops::run_extract(&m, &params, &cfg)?;
            emit(out.as_deref(), &serialize_sos_json(&x.script))?;
            if let Some(p) = svg {
                emit(Some(&p), &render_staff_svg(&x.script, &SvgOptions::default()))?;
            }
            if let Some(p) = saliency {
                emit(Some(&p), &serde_json::to_string_pretty(&ops::saliency_dump(&x.saliency))?)?;
            }
        }
        Command::Optimize {
            motion,
            sos,
            mode,
            harmonics,
            iters,
            beta,
            step,
            step_weight,
            lambda_smooth,
            lambda_init,
            tolerance,
            out,
            trace,
        } => {
            let script = load_script(&sos)?;
            let m = load_motion(&motion, &cfg)?;
            let mut s = cfg.optimizer.clone();
            if let Some(v) = mode {
                s.mode = match v {
                    ModeArg::Direct => Mode::Direct,
                    ModeArg::Periodic => Mode::Periodic,
                };
            }
            if let Some(v) = step {
                s.step = match v {
                    StepArg::Backtracking => StepRule::Backtracking,
                    StepArg::Fixed => StepRule::Fixed,
                };
            }
            s.harmonics = harmonics.unwrap_or(s.harmonics);
            s.max_iters = iters.unwrap_or(s.max_iters);
            s.beta = beta.unwrap_or(s.beta);
            s.step_weight = step_weight.unwrap_or(s.step_weight);
            s.lambda_smooth = lambda_smooth.unwrap_or(s.lambda_smooth);
            s.lambda_init = lambda_init.unwrap_or(s.lambda_init);
            s.tolerance = tolerance.unwrap_or(s.tolerance);
            s.validate().map_err(|e| usage(e.to_string()))?;
            let r = ops::run_optimize(m, script, s)?;
            if let Some(p) = out {
                emit(Some(&p), &serialize_motion_json(&r.motion))?;
            }
            if let Some(p) = trace {
                std::fs::write(&p, r.loss_trace_csv()).with_context(|| format!("writing {}", p.display()))?;
            }
            let summary = json!({
                "sos_acc": r.sos_acc,
                "l2_rot6d": r.l2_rot6d,
                "converged": r.converged,
                "iterations": r.iterations,
                "final_loss": r.loss_trace.last(),
            });
            println!("{summary}");
        }
        Command::Metrics { motion, reference, sos } => {
            let script = load_script(&sos)?;
            let m = load_motion(&motion, &cfg)?;
            let r = load_motion(&reference, &cfg)?;
            let out = json!({
                "sos_acc": sos_accuracy(&m, &script)?,
                "l2_rot6d": l2_rot6d(&m, &r)?,
            });
            println!("{out}");
        }
        Command::Augment {
            motion,
            seed,
            samples,
            out_dir,
        } => {
            let m = load_motion(&motion, &cfg)?;
            std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            for (i, (script, p)) in ops::run_augment(&m, seed, samples)?.into_iter().enumerate() {
                let path = out_dir.join(format!("sos_{i:03}.json"));
                emit(Some(&path), &serialize_sos_json(&script))?;
                eprintln!("{}: percentiles {:?}, {} entries", path.display(), p, script.len());
            }
        }
        Command::Render {
            sos,
            out,
            pixels_per_frame,
            column_width,
        } => {
            let script = load_script(&sos)?;
            let mut opts = SvgOptions::default();
            for (given, slot) in [(pixels_per_frame, &mut opts.pixels_per_frame), (column_width, &mut opts.column_width)] {
                if let Some(v) = given {
                    if !(v.is_finite() && v > 0.0) {
                        return Err(usage(format!("render sizes must be positive, got {v}")));
                    }
                    *slot = v;
                }
            }
            emit(out.as_deref(), &render_staff_svg(&script, &opts))?;
        }
        Command::Serve { port, bind, data_dir } => {
            let mut cfg = cfg;
            cfg.port = port.unwrap_or(cfg.port);
            cfg.bind = bind.unwrap_or(cfg.bind);
            if data_dir.is_some() {
                cfg.data_dir = data_dir;
            }
            cfg.validate().map_err(|e| usage(format!("{e:#}")))?;
            tracing_subscriber::fmt().with_writer(std::io::stderr).init();
            tokio::runtime::Runtime::new()?.block_on(soskit::http::serve(cfg))?;
        }
        Command::Fixture { kind, frames, seed, out } => {
            let m = match kind {
                FixtureKind::Static => synth::static_motion(&synth::rest_pose(), frames.unwrap_or(40)),
                FixtureKind::ArmSwing => synth::arm_swing_motion(frames.unwrap_or(48)),
                FixtureKind::Dance => synth::dance_motion(frames.unwrap_or(synth::TASK_FRAMES), seed),
                FixtureKind::Perturbed => {
                    if frames.is_some() {
                        return Err(usage("the perturbed fixture has a fixed length"));
                    }
                    synth::perturbation_task(seed).perturbed
                }
            };
            emit(out.as_deref(), &serialize_motion_json(&m))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
