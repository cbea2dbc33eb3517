use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::augment::ObjectAsset;
use crate::error::{Error, Result};
use crate::io::{gripper_jsonl, joints_jsonl, load_clip, read_asset_library, write_dir_atomic, Clip};
use crate::metrics::{metrics_csv, MetricReport};
use crate::retarget::GestureClassifier;

use super::config::{PipelineConfig, Robot};
use super::stages::*;

pub const MANIFEST_NAME: &str = "manifest.json";

/// Expands inputs into manifest paths. A directory contributes its own
/// `manifest.json` if present, otherwise those of its subdirectories.
pub fn discover_manifests(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_file() {
            out.push(p.clone());
        } else if p.is_dir() {
            let own = p.join(MANIFEST_NAME);
            if own.is_file() {
                out.push(own);
                continue;
            }
            let mut subs: Vec<PathBuf> = std::fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path().join(MANIFEST_NAME)))
                .filter(|m| m.is_file())
                .collect();
            subs.sort();
            out.extend(subs);
        } else {
            return Err(Error::invalid(format!("{}: no such file or directory", p.display())));
        }
    }
    Ok(out)
}

/// Everything computed for one clip, before anything is written.
pub struct ClipResult {
    pub clip: String,
    pub episodes: Vec<(Episode, EpisodeReport, BTreeMap<String, RobotReplay>)>,
    pub augment_failures: Vec<AugmentFailure>,
    pub penetration: PenetrationReport,
}

/// Shared, read-only state for a run.
pub struct Context {
    pub cfg: PipelineConfig,
    pub robots: Vec<Robot>,
    pub classifier: Option<GestureClassifier>,
    pub library: Vec<ObjectAsset>,
    pub seed: u64,
}

impl Context {
    /// Loads everything the config points at. Failures here are config errors.
    pub fn new(cfg: PipelineConfig, seed: Option<u64>, only_robots: &[String]) -> Result<Context> {
        let as_config = |e: Error| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        };
        let robots = cfg.robots(only_robots).map_err(as_config)?;
        let classifier = cfg.classifier().map_err(as_config)?;
        let library = match &cfg.augment.asset_library {
            Some(p) => read_asset_library(p).map_err(as_config)?,
            None => Vec::new(),
        };
        Ok(Context {
            seed: seed.unwrap_or(cfg.seed),
            cfg,
            robots,
            classifier,
            library,
        })
    }
}

pub fn process_clip(clip: &Clip, ctx: &Context) -> Result<ClipResult> {
    let cfg = &ctx.cfg;
    let mut canon = canonicalize_clip(clip, cfg)?;
    let mut penetration = PenetrationReport::default();
    if let (Some(grid), Some(obj)) = (object_grid(clip, cfg)?, canon.object.as_ref()) {
        penetration = check_penetration(&mut canon.hand, obj, &grid, cfg);
    }
    let ret = retarget_clip(clip, &canon, ctx.classifier.as_ref(), cfg)?;
    let src_asset = object_asset(clip);
    let (episodes, augment_failures) = build_episodes(
        &clip.id,
        &ret.trajectory,
        canon.object.as_deref(),
        src_asset.as_ref(),
        &ctx.library,
        cfg,
        ctx.seed,
    );
    for f in &augment_failures {
        warn!("{}: {} not emitted: {}", clip.id, f.episode, f.reason);
    }
    let mut out = Vec::with_capacity(episodes.len());
    for ep in episodes {
        let segments = segments_of(&ep.trajectory);
        let replays: BTreeMap<String, RobotReplay> = ctx
            .robots
            .iter()
            .map(|r| (r.name.clone(), replay_on(r, &ep.trajectory, cfg)))
            .collect();
        let metrics = episode_metrics(&ep.trajectory, ep.object.as_deref(), &segments)?;
        let report = EpisodeReport {
            clip: clip.id.clone(),
            episode: ep.id.clone(),
            gesture: ret.gesture,
            frames: ep.trajectory.len(),
            segments,
            penetration: penetration.clone(),
            replay: replays.clone(),
            metrics,
            warnings: ret.warnings.clone(),
        };
        out.push((ep, report, replays));
    }
    Ok(ClipResult {
        clip: clip.id.clone(),
        episodes: out,
        augment_failures,
        penetration,
    })
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

pub fn write_clip_result(out: &Path, r: &ClipResult) -> Result<()> {
    for (ep, report, replays) in &r.episodes {
        let mut files = vec![
            ("trajectory.jsonl".to_string(), gripper_jsonl(&ep.trajectory)?),
            ("report.json".to_string(), json(report)?),
            ("lineage.json".to_string(), json(&ep.lineage)?),
        ];
        for (robot, rep) in replays {
            files.push((format!("joints_{robot}.jsonl"), joints_jsonl(robot, &rep.configs)?));
        }
        write_dir_atomic(&out.join(&r.clip).join(&ep.id), &files)?;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct EpisodeSummary {
    pub episode: String,
    /// Robots on which every frame replayed feasibly.
    pub feasible_on: Vec<String>,
    pub infeasible_on: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClipSummary {
    pub clip: String,
    pub source: PathBuf,
    pub ok: bool,
    pub error: Option<String>,
    pub episodes: Vec<EpisodeSummary>,
    pub augment_failures: Vec<AugmentFailure>,
    pub penetrating_frames: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub seed: u64,
    pub robots: Vec<String>,
    pub clips_total: usize,
    pub clips_failed: usize,
    pub episodes_total: usize,
    pub episodes_feasible: usize,
    pub clips: Vec<ClipSummary>,
}

impl RunSummary {
    /// True when there was input and every clip failed.
    pub fn total_failure(&self) -> bool {
        self.clips_total > 0 && self.clips_failed == self.clips_total
    }
}

fn clip_id_hint(path: &Path) -> String {
    path.parent()
        .and_then(|p| p.file_name())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Runs every stage on every manifest, writing episodes under `out` along
/// with `summary.json` and `metrics.csv`. Per-clip failures are isolated and
/// reported in the summary.
pub fn run_pipeline(manifests: &[PathBuf], out: &Path, ctx: &Context, jobs: Option<usize>) -> Result<RunSummary> {
    if manifests.is_empty() {
        warn!("no clips to process");
    }
    std::fs::create_dir_all(out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<(PathBuf, Result<ClipResult>)> = pool.install(|| {
        manifests
            .par_iter()
            .map(|m| {
                let r = load_clip(m).and_then(|clip| {
                    info!("processing {}", clip.id);
                    let r = process_clip(&clip, ctx)?;
                    write_clip_result(out, &r)?;
                    Ok(r)
                });
                (m.clone(), r)
            })
            .collect()
    });

    let mut clips = Vec::new();
    let mut rows: Vec<(String, MetricReport)> = Vec::new();
    for (path, r) in results {
        match r {
            Ok(r) => {
                let episodes = r
                    .episodes
                    .iter()
                    .map(|(ep, report, replays)| {
                        rows.push((format!("{}/{}", r.clip, ep.id), report.metrics.clone()));
                        let (ok, bad): (Vec<_>, Vec<_>) = replays.iter().partition(|(_, rep)| rep.report.feasible);
                        EpisodeSummary {
                            episode: ep.id.clone(),
                            feasible_on: ok.into_iter().map(|(n, _)| n.clone()).collect(),
                            infeasible_on: bad.into_iter().map(|(n, _)| n.clone()).collect(),
                        }
                    })
                    .collect();
                clips.push(ClipSummary {
                    clip: r.clip.clone(),
                    source: path,
                    ok: true,
                    error: None,
                    episodes,
                    augment_failures: r.augment_failures,
                    penetrating_frames: r.penetration.penetrating_frames.len(),
                });
            }
            Err(e) => {
                warn!("{}: {e}", path.display());
                clips.push(ClipSummary {
                    clip: clip_id_hint(&path),
                    source: path,
                    ok: false,
                    error: Some(e.to_string()),
                    episodes: Vec::new(),
                    augment_failures: Vec::new(),
                    penetrating_frames: 0,
                });
            }
        }
    }
    let episodes_total = clips.iter().map(|c| c.episodes.len()).sum();
    let episodes_feasible = clips
        .iter()
        .flat_map(|c| &c.episodes)
        .filter(|e| e.infeasible_on.is_empty())
        .count();
    let summary = RunSummary {
        schema_version: crate::io::SCHEMA_VERSION,
        seed: ctx.seed,
        robots: ctx.robots.iter().map(|r| r.name.clone()).collect(),
        clips_total: clips.len(),
        clips_failed: clips.iter().filter(|c| !c.ok).count(),
        episodes_total,
        episodes_feasible,
        clips,
    };
    std::fs::write(out.join("summary.json"), json(&summary)?)?;
    std::fs::write(
        out.join("metrics.csv"),
        metrics_csv(rows.iter().map(|(id, m)| (id.as_str(), m))),
    )?;
    Ok(summary)
}
