use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{EvalDomain, MeshEntry, RunConfig};
use super::report::{write_metric_rows, SCHEMA_VERSION};
use super::PIPELINE_VERSION;
use crate::error::{Error, Result};
use crate::gaze::{read_gaze_log, synth_turntable_session, write_gaze_log, GazeSample};
use crate::geom::Vec3;
use crate::hcd::{run_pipeline, DiffusionConfig, DistanceMetric, SaliencyResult};
use crate::mesh::{io, AdjacencyIndex, PointGrid, RayAccel, TriangleMesh};
use crate::metrics::{
    fixation_density, improvement_factor, internal_consistency_from_hits, kl_divergence, pearson_cc, shuffled_auc,
    FixationSet, MetricReport, NegativeSource, KL_EPS,
};
use crate::rng::{domain, stream_rng};
use crate::sampler::{accumulate_raw, cast_session_synchronous, coverage, write_hit_log, AcquisitionMode, Scene, SynchronousHits};

/// Files written per mesh, in `<output_dir>/<mesh-stem>/`.
pub const ARTIFACT_FILES: [&str; 6] = [
    "normalized.ply",
    "gaze.jsonl",
    "hits.csv",
    "saliency.csv",
    "saliency.ply",
    "metrics.csv",
];

const ACQUISITIONS: [AcquisitionMode; 2] = [AcquisitionMode::SingleRay, AcquisitionMode::Vcs];
const PROCESSINGS: [DistanceMetric; 3] = [DistanceMetric::Hopcount, DistanceMetric::Euclidean, DistanceMetric::Geodesic];

/// A normalized mesh with its derived structures, gaze session and hits.
pub struct MeshRun {
    pub name: String,
    pub mesh: TriangleMesh<f64>,
    pub adjacency: AdjacencyIndex<f64>,
    pub accel: RayAccel<f64>,
    pub samples: Vec<GazeSample<f64>>,
    pub hits: SynchronousHits<f64>,
}

impl MeshRun {
    pub fn scene(&self) -> Scene<'_, f64> {
        Scene::new(&self.mesh, &self.accel)
    }

    /// Up to `max` hit points of `mode`, relative to the AABB center.
    fn fixation_points(&self, mode: AcquisitionMode, max: usize) -> Vec<Vec3<f64>> {
        let hits = self.hits.for_mode(mode);
        let stride = hits.len().div_ceil(max.max(1)).max(1);
        let c = self.mesh.aabb.center();
        hits.iter().step_by(stride).map(|h| h.point - c).collect()
    }
}

/// Loads and normalizes the mesh, builds adjacency and the ray index,
/// synthesizes (or reads) the gaze session and casts it in both modes.
pub fn acquire(entry: &MeshEntry, cfg: &RunConfig) -> Result<MeshRun> {
    let name = entry.stem();
    let mesh: TriangleMesh<f64> = io::load_mesh(entry.path())?;
    let (mesh, _) = mesh.normalize_unit_diag()?;
    let mesh = mesh.compute_face_normals();
    log::info!("{name}: {} faces, {} vertices", mesh.face_count(), mesh.vertex_count());
    let adjacency = AdjacencyIndex::build(&mesh, cfg.evaluation.step_samples, cfg.seed);
    let accel = RayAccel::build(&mesh);
    let samples = match entry.gaze_log() {
        Some(path) => read_gaze_log(path)?,
        None => synth_turntable_session(&mesh, &cfg.session)?,
    };
    log::info!("{name}: casting {} gaze samples", samples.len());
    let hits = cast_session_synchronous(&Scene::new(&mesh, &accel), &samples, &cfg.cone)?;
    Ok(MeshRun {
        name,
        mesh,
        adjacency,
        accel,
        samples,
        hits,
    })
}

/// Fixation points of the other meshes, per acquisition mode, for sAUC.
pub type NegativePool = [Vec<Vec3<f64>>; 2];

fn mode_index(m: AcquisitionMode) -> usize {
    match m {
        AcquisitionMode::SingleRay => 0,
        AcquisitionMode::Vcs => 1,
    }
}

fn metric_index(m: DistanceMetric) -> u64 {
    match m {
        DistanceMetric::Hopcount => 0,
        DistanceMetric::Euclidean => 1,
        DistanceMetric::Geodesic => 2,
    }
}

/// Runs every configured `(acquisition, processing)` cell and returns the
/// metric rows plus the saliency of the primary cell (`cone.mode`,
/// `diffusion.metric`).
pub fn evaluate_mesh(
    run: &MeshRun,
    cfg: &RunConfig,
    digest: &str,
    negatives: Option<&NegativePool>,
) -> Result<(Vec<MetricReport>, SaliencyResult<f64>)> {
    let primary = (cfg.cone.mode, cfg.diffusion.metric);
    let cells: Vec<(AcquisitionMode, DistanceMetric)> = if cfg.ablation_grid {
        ACQUISITIONS
            .iter()
            .flat_map(|&a| PROCESSINGS.iter().map(move |&p| (a, p)))
            .collect()
    } else {
        vec![primary]
    };
    let scene = run.scene();
    let adj = &run.adjacency;
    let face_count = run.mesh.face_count();
    let cov_vcs = coverage(&accumulate_raw(&run.hits.bundle, face_count));
    let cov_single = coverage(&accumulate_raw(&run.hits.central, face_count));
    let improvement = improvement_factor(cov_vcs, cov_single);

    let domain_points: Vec<Vec3<f64>> = match cfg.evaluation.domain {
        EvalDomain::Vertex => run.mesh.vertices.clone(),
        EvalDomain::Face => run.mesh.centroids().into_owned(),
    };
    let center = run.mesh.aabb.center();
    let grid = negatives.map(|_| PointGrid::new(domain_points.iter().map(|&p| p - center).collect()));

    let mut rows = Vec::with_capacity(cells.len());
    let mut primary_result = None;
    for (acq, proc) in cells {
        let hits = run.hits.for_mode(acq);
        let diffusion = DiffusionConfig {
            metric: proc,
            ..cfg.diffusion.clone()
        };
        let result = run_pipeline(&run.mesh, adj, hits, &diffusion, &cfg.smoothing)?.with_provenance(digest);
        let (density, saliency) = match cfg.evaluation.domain {
            EvalDomain::Vertex => (fixation_density(hits, adj).values, result.saliency.values.clone()),
            EvalDomain::Face => (result.raw.values.clone(), result.diffused.values.clone()),
        };
        let cc = pearson_cc(&saliency, &density);
        let kl = kl_divergence(&density, &saliency, KL_EPS);
        let positives = FixationSet::from_density(&density, run.name.clone());
        let (pool, source) = match (negatives, &grid) {
            (Some(neg), Some(grid)) if !neg[mode_index(acq)].is_empty() => {
                let ids = neg[mode_index(acq)]
                    .iter()
                    .filter_map(|&p| grid.nearest(p).map(|i| i as u32))
                    .collect();
                (FixationSet::from_ids(ids, "batch"), NegativeSource::Batch)
            }
            _ => (FixationSet::uniform(density.len()), NegativeSource::Uniform),
        };
        let mut rng = stream_rng(cfg.seed, &[domain::SAUC, mode_index(acq) as u64, metric_index(proc)]);
        let sauc = shuffled_auc(&saliency, &positives, &pool, &mut rng, cfg.evaluation.sauc_repetitions);
        let ic = if cfg.evaluation.internal_consistency {
            internal_consistency_from_hits(&scene, adj, hits, &diffusion, &cfg.smoothing)
                .map_err(|e| log::warn!("{}: IC undefined for {}/{}: {e}", run.name, acq.name(), proc.name()))
                .ok()
        } else {
            None
        };
        let ok = |r: Result<f64>, what: &str| {
            r.map_err(|e| log::warn!("{}: {what} undefined for {}/{}: {e}", run.name, acq.name(), proc.name()))
                .ok()
        };
        rows.push(MetricReport {
            schema_version: SCHEMA_VERSION,
            pipeline_version: PIPELINE_VERSION.to_string(),
            config_digest: digest.to_string(),
            seed: cfg.seed,
            mesh: run.name.clone(),
            face_count,
            acquisition: acq.name().to_string(),
            processing: proc.name().to_string(),
            ic,
            sauc: ok(sauc, "sAUC"),
            cc: ok(cc, "CC"),
            kl: ok(kl, "KL"),
            coverage_vcs: cov_vcs,
            coverage_single: cov_single,
            improvement,
            negatives: source,
        });
        if (acq, proc) == primary {
            primary_result = Some(result);
        }
    }
    Ok((rows, primary_result.expect("primary cell is always evaluated")))
}

fn provenance(digest: &str, seed: u64) -> String {
    format!("config_digest={digest} seed={seed} version={PIPELINE_VERSION}")
}

fn write_artifacts(
    dir: &Path,
    run: &MeshRun,
    cfg: &RunConfig,
    digest: &str,
    rows: &[MetricReport],
    saliency: &SaliencyResult<f64>,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let note = provenance(digest, cfg.seed);
    io::write_ply(&dir.join("normalized.ply"), &run.mesh, None, std::slice::from_ref(&note))?;
    write_gaze_log(&dir.join("gaze.jsonl"), &run.samples, Some(&note))?;
    if cfg.write_hit_log {
        write_hit_log(&dir.join("hits.csv"), run.hits.for_mode(cfg.cone.mode), &note)?;
    }
    saliency.saliency.write_csv(&dir.join("saliency.csv"), "vertex", &note)?;
    io::write_ply(&dir.join("saliency.ply"), &run.mesh, Some(&saliency.rgb), std::slice::from_ref(&note))?;
    write_metric_rows(&dir.join("metrics.csv"), rows, &note)?;
    Ok(())
}

/// Result of a batch: every metric row of the meshes that succeeded, and
/// the meshes that failed.
#[derive(Debug, Default)]
pub struct BatchOutcome {
    pub rows: Vec<MetricReport>,
    pub mesh_dirs: Vec<PathBuf>,
    pub failures: Vec<(String, Error)>,
}

impl BatchOutcome {
    pub fn succeeded(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Validates the configuration, then processes every mesh. A failing mesh
/// is logged and skipped; the error is returned only for invalid
/// configurations.
pub fn run_batch(cfg: &RunConfig) -> Result<BatchOutcome> {
    cfg.validate()?;
    let digest = cfg.digest();
    let cfg = cfg.effective();
    log::info!("config digest {digest}");

    // With more than one mesh, sAUC negatives come from the other meshes'
    // fixations, so every session is cast once up front.
    let pools: Option<Vec<NegativePool>> = (cfg.meshes.len() > 1).then(|| {
        cfg.meshes
            .par_iter()
            .map(|m| match acquire(m, &cfg) {
                Ok(run) => {
                    let max = cfg.evaluation.negative_points;
                    [
                        run.fixation_points(AcquisitionMode::SingleRay, max),
                        run.fixation_points(AcquisitionMode::Vcs, max),
                    ]
                }
                Err(_) => [Vec::new(), Vec::new()],
            })
            .collect()
    });

    let results: Vec<Result<(PathBuf, Vec<MetricReport>)>> = cfg
        .meshes
        .par_iter()
        .enumerate()
        .map(|(i, entry)| {
            let run = acquire(entry, &cfg)?;
            let negatives = pools.as_ref().map(|pools| {
                let mut pool: NegativePool = [Vec::new(), Vec::new()];
                for (j, p) in pools.iter().enumerate() {
                    if j != i {
                        pool[0].extend_from_slice(&p[0]);
                        pool[1].extend_from_slice(&p[1]);
                    }
                }
                pool
            });
            let (rows, saliency) = evaluate_mesh(&run, &cfg, &digest, negatives.as_ref())?;
            let dir = cfg.output_dir.join(&run.name);
            write_artifacts(&dir, &run, &cfg, &digest, &rows, &saliency)?;
            log::info!("{}: wrote {}", run.name, dir.display());
            Ok((dir, rows))
        })
        .collect();

    let mut out = BatchOutcome::default();
    for (entry, r) in cfg.meshes.iter().zip(results) {
        match r {
            Ok((dir, rows)) => {
                out.mesh_dirs.push(dir);
                out.rows.extend(rows);
            }
            Err(e) => {
                log::error!("{}: {e}", entry.path().display());
                out.failures.push((entry.stem(), e));
            }
        }
    }
    Ok(out)
}
