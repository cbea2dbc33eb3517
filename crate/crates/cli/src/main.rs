use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context as _, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use hoi2bot::augment::segment_trajectory;
use hoi2bot::io::{
    gripper_jsonl, joints_jsonl, load_clip, read_gripper_trajectory, read_pose_stream, write_dir_atomic,
    write_gripper_trajectory, write_hand_stream, write_pose_stream,
};
use hoi2bot::metrics::{metrics_csv, MetricReport};
use hoi2bot::pipeline::{
    build_episodes, canonicalize_clip, check_penetration, discover_manifests, episode_metrics, object_grid,
    replay_on, retarget_clip, run_pipeline, Context, PenetrationMode, PipelineConfig,
};
use hoi2bot::plausibility::load_obj;

#[derive(Parser, Debug)]
#[command(name = "hoi2bot", version, about = "Turn hand-object interaction tracks into robot trajectories")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for clip-level parallelism (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Restrict replay to these robots; repeatable.
    #[arg(long = "robot", global = true)]
    robots: Vec<String>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct ClipArg {
    /// Clip manifest (JSON) or a directory containing `manifest.json`.
    clip: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Express a clip's hand and object streams in the canonical frame.
    Canonicalize {
        #[command(flatten)]
        clip: ClipArg,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Retarget a clip to a gripper trajectory.
    Retarget {
        #[command(flatten)]
        clip: ClipArg,
        /// Output trajectory (JSONL).
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Check hand-object penetration; prints a JSON report.
    Check {
        #[command(flatten)]
        clip: ClipArg,
        /// Move penetrating wrists out of the object instead of only flagging.
        #[arg(long)]
        resolve: bool,
    },
    /// Augment a gripper trajectory.
    Augment {
        /// Gripper trajectory (JSONL).
        trajectory: PathBuf,
        /// Object pose stream in the same frame as the trajectory.
        #[arg(long)]
        object: Option<PathBuf>,
        /// Number of object-frame transforms (overrides the config).
        #[arg(long)]
        count: Option<usize>,
        /// Also emit a mirrored episode.
        #[arg(long)]
        mirror: bool,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Replay a gripper trajectory on each robot.
    Replay {
        trajectory: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Trajectory metrics as CSV on stdout.
    Metrics {
        /// Gripper trajectories (JSONL).
        #[arg(required = true)]
        trajectories: Vec<PathBuf>,
        /// Object pose stream for relative-pose consistency.
        #[arg(long)]
        object: Option<PathBuf>,
        /// Reconstructed and ground-truth meshes (OBJ) for chamfer/F-score.
        #[arg(long, num_args = 2, value_names = ["RECON", "GT"])]
        surfaces: Option<Vec<PathBuf>>,
    },
    /// Run every stage on every clip.
    Run {
        /// Manifests or directories of clips.
        inputs: Vec<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Write the bundled synthetic fixture.
    Fixture { dir: PathBuf },
}

/// Failures that map to exit code 2.
#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(e: hoi2bot::Error) -> anyhow::Error {
    match e {
        hoi2bot::Error::Config(m) => ConfigError(m).into(),
        other => ConfigError(other.to_string()).into(),
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    match &cli.config {
        Some(p) => PipelineConfig::load(p).map_err(config_err),
        None => Ok(PipelineConfig::default()),
    }
}

fn context(cli: &Cli) -> Result<Context> {
    Context::new(load_config(cli)?, cli.seed, &cli.robots).map_err(config_err)
}

fn manifest_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(hoi2bot::pipeline::MANIFEST_NAME)
    } else {
        p.to_path_buf()
    }
}

fn json_pretty<T: serde::Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn run(cli: Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Canonicalize { clip, out } => {
            let cfg = load_config(&cli)?;
            let clip = load_clip(&manifest_path(&clip.clip))?;
            let c = canonicalize_clip(&clip, &cfg)?;
            std::fs::create_dir_all(out)?;
            write_hand_stream(&out.join("hand.jsonl"), &c.hand)?;
            if let Some(o) = &c.object {
                write_pose_stream(&out.join("object.jsonl"), o)?;
            }
            let w = hoi2bot::io::PoseRecord::from(&c.transform.world_to_canonical);
            let info = serde_json::json!({
                "world_to_canonical": w,
                "t0": c.transform.t0,
                "lateral_agreement": c.transform.lateral_agreement,
            });
            std::fs::write(out.join("canonical.json"), json_pretty(&info)?)?;
        }
        Command::Retarget { clip, out } => {
            let ctx = Context::new(load_config(&cli)?, cli.seed, &[]).map_err(config_err)?;
            let clip = load_clip(&manifest_path(&clip.clip))?;
            let mut c = canonicalize_clip(&clip, &ctx.cfg)?;
            if ctx.cfg.penetration.mode == PenetrationMode::Resolve {
                if let (Some(g), Some(o)) = (object_grid(&clip, &ctx.cfg)?, c.object.as_ref()) {
                    check_penetration(&mut c.hand, o, &g, &ctx.cfg);
                }
            }
            let r = retarget_clip(&clip, &c, ctx.classifier.as_ref(), &ctx.cfg)?;
            for w in &r.warnings {
                warn!("{w}");
            }
            write_gripper_trajectory(out, &r.trajectory)?;
            println!("{}", serde_json::json!({ "gesture": r.gesture, "frames": r.trajectory.len() }));
        }
        Command::Check { clip, resolve } => {
            let mut cfg = load_config(&cli)?;
            cfg.penetration.mode = if *resolve { PenetrationMode::Resolve } else { PenetrationMode::Flag };
            let clip = load_clip(&manifest_path(&clip.clip))?;
            let mut c = canonicalize_clip(&clip, &cfg)?;
            let (Some(grid), Some(obj)) = (object_grid(&clip, &cfg)?, c.object.clone()) else {
                bail!("{}: penetration check needs an object mesh and pose stream", clip.id);
            };
            let report = check_penetration(&mut c.hand, &obj, &grid, &cfg);
            print!("{}", json_pretty(&report)?);
        }
        Command::Augment {
            trajectory,
            object,
            count,
            mirror,
            out,
        } => {
            let mut ctx = context(&cli)?;
            if let Some(n) = count {
                ctx.cfg.augment.transforms = *n;
            }
            ctx.cfg.augment.mirror |= *mirror;
            let traj = read_gripper_trajectory(trajectory)?;
            let obj = object.as_deref().map(read_pose_stream).transpose()?;
            let id = trajectory
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "trajectory".into());
            let (eps, failures) = build_episodes(&id, &traj, obj.as_deref(), None, &[], &ctx.cfg, ctx.seed);
            for f in &failures {
                warn!("{} not emitted: {}", f.episode, f.reason);
            }
            for ep in eps.iter().filter(|e| e.id != "base") {
                let mut files = vec![
                    ("trajectory.jsonl".to_string(), gripper_jsonl(&ep.trajectory)?),
                    ("lineage.json".to_string(), json_pretty(&ep.lineage)?),
                ];
                if let Some(o) = &ep.object {
                    let recs: Vec<_> = o.iter().map(hoi2bot::io::PoseRecord::from).collect();
                    files.push((
                        "object.jsonl".into(),
                        hoi2bot::io::jsonl_string(&hoi2bot::io::StreamHeader::new("pose"), &recs)?,
                    ));
                }
                write_dir_atomic(&out.join(&ep.id), &files)?;
                info!("wrote {}", out.join(&ep.id).display());
            }
            println!("{}", serde_json::json!({ "emitted": eps.len() - 1, "failed": failures }));
        }
        Command::Replay { trajectory, out } => {
            let ctx = context(&cli)?;
            let traj = read_gripper_trajectory(trajectory)?;
            let mut reports = BTreeMap::new();
            let mut files = Vec::new();
            for robot in &ctx.robots {
                let r = replay_on(robot, &traj, &ctx.cfg);
                files.push((format!("joints_{}.jsonl", robot.name), joints_jsonl(&robot.name, &r.configs)?));
                reports.insert(robot.name.clone(), r);
            }
            files.push(("replay.json".into(), json_pretty(&reports)?));
            write_dir_atomic(out, &files)?;
            let feasible = reports.values().filter(|r| r.report.feasible).count();
            println!("{}", serde_json::json!({ "robots": reports.len(), "feasible": feasible }));
            if feasible == 0 {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Metrics {
            trajectories,
            object,
            surfaces,
        } => {
            let cfg = load_config(&cli)?;
            let obj = object.as_deref().map(read_pose_stream).transpose()?;
            let clouds = match surfaces {
                Some(p) => {
                    let mut rng = hoi2bot::synth::rng(cli.seed.unwrap_or(cfg.seed));
                    let a = load_obj(&p[0])?.sample_surface(10_000, &mut rng);
                    let b = load_obj(&p[1])?.sample_surface(10_000, &mut rng);
                    Some((a, b))
                }
                None => None,
            };
            let mut rows: Vec<(String, MetricReport)> = Vec::new();
            for path in trajectories {
                let traj = read_gripper_trajectory(path)?;
                let segments = segment_trajectory(&traj);
                let mut m = episode_metrics(&traj, obj.as_deref(), &segments)
                    .with_context(|| format!("{}", path.display()))?;
                if let Some((a, b)) = &clouds {
                    let s = MetricReport::compute(&[], None, None, Some((a.as_slice(), b.as_slice())), traj.fps)?;
                    m.chamfer_cm = s.chamfer_cm;
                    m.f5_pct = s.f5_pct;
                    m.f10_pct = s.f10_pct;
                }
                rows.push((path.display().to_string(), m));
            }
            print!("{}", metrics_csv(rows.iter().map(|(id, m)| (id.as_str(), m))));
        }
        Command::Run { inputs, out } => {
            let ctx = context(&cli)?;
            let manifests = discover_manifests(inputs)?;
            let summary = run_pipeline(&manifests, out, &ctx, cli.jobs)?;
            println!(
                "{} clip(s), {} failed; {} episode(s), {} feasible on every robot",
                summary.clips_total, summary.clips_failed, summary.episodes_total, summary.episodes_feasible
            );
            if summary.total_failure() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Fixture { dir } => {
            let manifests = hoi2bot::pipeline::fixture::write_fixture(dir)?;
            for m in manifests {
                println!("{}", m.display());
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
