use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use mesh_saliency::experiment::{aggregate, read_metric_rows, run_batch, RunConfig};
use mesh_saliency::gaze::{read_gaze_log, synth_turntable_session, write_gaze_log, SessionConfig};
use mesh_saliency::hcd::{run_pipeline, DiffusionConfig, DistanceMetric, MergeMode, SmoothConfig};
use mesh_saliency::mesh::{io, AdjacencyIndex, RayAccel, DEFAULT_STEP_SAMPLES};
use mesh_saliency::metrics::{
    fixation_density, kl_divergence, pearson_cc, shuffled_auc, FixationSet, KL_EPS, SAUC_REPETITIONS,
};
use mesh_saliency::rng::stream_rng;
use mesh_saliency::sampler::{accumulate_raw, cast_session, coverage, read_hit_log, write_hit_log, AcquisitionMode, ConeConfig, Scene};
use mesh_saliency::{Field, Mesh, Stage};

#[derive(Parser)]
#[command(name = "mesh-saliency", version, about = "Gaze-driven saliency fields on triangle meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline for every mesh in a TOML config.
    Pipeline {
        config: PathBuf,
        /// Fixed-order diffusion merge; byte-identical outputs for a fixed seed.
        #[arg(long)]
        deterministic: bool,
        #[arg(long)]
        seed: Option<u64>,
        /// Evaluate {single_ray, vcs} × {hopcount, euclidean, geodesic}.
        #[arg(long)]
        ablation_grid: bool,
        #[arg(long, short)]
        output_dir: Option<PathBuf>,
    },
    /// Aggregate metrics CSVs into per-cell means and coverage buckets.
    Report {
        /// Files or glob patterns.
        #[arg(required = true)]
        inputs: Vec<String>,
    },
    /// Scale a mesh to unit AABB diagonal and write it as PLY.
    Normalize {
        mesh: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Generate a synthetic turntable gaze log for a (normalized) mesh.
    SynthGaze {
        mesh: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long, default_value_t = 22)]
        subjects: u32,
        #[arg(long, default_value_t = 25.0)]
        duration: f64,
        #[arg(long, default_value_t = 0.0)]
        noise_deg: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Cast a gaze log against a mesh and write the hit log.
    Sample {
        mesh: PathBuf,
        gaze: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Vcs)]
        mode: Mode,
        #[arg(long, default_value_t = 64)]
        rays: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Turn a hit log into a per-vertex saliency CSV (and optionally a colored PLY).
    Diffuse {
        mesh: PathBuf,
        hits: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long)]
        ply: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Metric::Geodesic)]
        metric: Metric,
        #[arg(long, default_value_t = 0.02)]
        sigma2: f64,
        #[arg(long)]
        deterministic: bool,
    },
    /// Score a saliency CSV against the fixation density of a hit log.
    Metrics {
        mesh: PathBuf,
        hits: PathBuf,
        saliency: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Vcs,
    SingleRay,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Geodesic,
    Euclidean,
    Hopcount,
}

impl From<Metric> for DistanceMetric {
    fn from(m: Metric) -> Self {
        match m {
            Metric::Geodesic => DistanceMetric::Geodesic,
            Metric::Euclidean => DistanceMetric::Euclidean,
            Metric::Hopcount => DistanceMetric::Hopcount,
        }
    }
}

fn load_normalized(path: &Path) -> Result<Mesh> {
    let mesh: Mesh = io::load_mesh(path).with_context(|| format!("loading {}", path.display()))?;
    let (mesh, scale) = mesh.normalize_unit_diag()?;
    log::info!(
        "{}: {} faces, {} vertices, scale {scale}",
        path.display(),
        mesh.face_count(),
        mesh.vertex_count()
    );
    Ok(mesh.compute_face_normals())
}

fn pipeline(config: &Path, deterministic: bool, seed: Option<u64>, ablation: bool, out: Option<PathBuf>) -> Result<ExitCode> {
    let mut cfg = RunConfig::load(config)?;
    cfg.deterministic |= deterministic;
    cfg.ablation_grid |= ablation;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    let outcome = run_batch(&cfg)?;
    for (mesh, err) in &outcome.failures {
        eprintln!("failed: {mesh}: {err}");
    }
    log::info!(
        "{} meshes done, {} failed, {} metric rows",
        outcome.mesh_dirs.len(),
        outcome.failures.len(),
        outcome.rows.len()
    );
    Ok(if outcome.succeeded() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn report(inputs: &[String]) -> Result<()> {
    let mut files = Vec::new();
    for pat in inputs {
        let matched: Vec<PathBuf> = glob::glob(pat)
            .with_context(|| format!("bad pattern {pat}"))?
            .collect::<Result<_, _>>()?;
        if matched.is_empty() {
            bail!("no files match {pat}");
        }
        files.extend(matched);
    }
    files.sort();
    files.dedup();
    let mut rows = Vec::new();
    for f in &files {
        rows.extend(read_metric_rows(f)?);
    }
    let rep = aggregate(&rows)?;
    print!("{rep}");
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Pipeline {
            config,
            deterministic,
            seed,
            ablation_grid,
            output_dir,
        } => return pipeline(&config, deterministic, seed, ablation_grid, output_dir),
        Command::Report { inputs } => report(&inputs)?,
        Command::Normalize { mesh, output } => {
            let m = load_normalized(&mesh)?;
            io::write_ply(&output, &m, None, &[])?;
        }
        Command::SynthGaze {
            mesh,
            output,
            subjects,
            duration,
            noise_deg,
            seed,
        } => {
            let m = load_normalized(&mesh)?;
            let cfg = SessionConfig {
                subjects,
                duration,
                gaze_noise_deg: noise_deg,
                seed,
                ..Default::default()
            };
            let samples = synth_turntable_session(&m, &cfg)?;
            write_gaze_log(&output, &samples, Some(&format!("seed={seed}")))?;
            log::info!("wrote {} samples", samples.len());
        }
        Command::Sample {
            mesh,
            gaze,
            output,
            mode,
            rays,
            seed,
        } => {
            let m = load_normalized(&mesh)?;
            let accel = RayAccel::build(&m);
            let samples = read_gaze_log(&gaze)?;
            let cfg = ConeConfig {
                mode: match mode {
                    Mode::Vcs => AcquisitionMode::Vcs,
                    Mode::SingleRay => AcquisitionMode::SingleRay,
                },
                rays_per_sample: rays,
                seed,
                ..Default::default()
            };
            let hits = cast_session(&Scene::new(&m, &accel), &samples, &cfg)?;
            let cov = coverage(&accumulate_raw(&hits, m.face_count()));
            write_hit_log(&output, &hits, &format!("seed={seed} mode={}", cfg.mode.name()))?;
            log::info!("{} hits, coverage {cov:.4}", hits.len());
        }
        Command::Diffuse {
            mesh,
            hits,
            output,
            ply,
            metric,
            sigma2,
            deterministic,
        } => {
            let m = load_normalized(&mesh)?;
            let adj = AdjacencyIndex::build(&m, DEFAULT_STEP_SAMPLES, 0);
            let hits = read_hit_log(&hits, m.face_count())?;
            let diffusion = DiffusionConfig {
                metric: metric.into(),
                sigma2,
                merge: if deterministic { MergeMode::Ordered } else { MergeMode::Unordered },
                ..Default::default()
            };
            let result = run_pipeline(&m, &adj, &hits, &diffusion, &SmoothConfig::default())?;
            result
                .saliency
                .write_csv(&output, "vertex", &format!("metric={}", diffusion.metric.name()))?;
            if let Some(p) = ply {
                io::write_ply(&p, &m, Some(&result.rgb), &[])?;
            }
        }
        Command::Metrics {
            mesh,
            hits,
            saliency,
            seed,
        } => {
            let m = load_normalized(&mesh)?;
            let adj = AdjacencyIndex::build(&m, DEFAULT_STEP_SAMPLES, 0);
            let hits = read_hit_log(&hits, m.face_count())?;
            let sal: Field<f64> = Field::read_csv(&saliency, Stage::Normalized)?;
            if sal.len() != m.vertex_count() {
                bail!("saliency has {} values, mesh has {} vertices", sal.len(), m.vertex_count());
            }
            let density = fixation_density(&hits, &adj);
            let positives = FixationSet::from_density(&density.values, "hits");
            let mut rng = stream_rng(seed, &[]);
            let sauc = shuffled_auc(
                &sal.values,
                &positives,
                &FixationSet::uniform(m.vertex_count()),
                &mut rng,
                SAUC_REPETITIONS,
            )?;
            let cc = pearson_cc(&sal.values, &density.values)?;
            let kl = kl_divergence(&density.values, &sal.values, KL_EPS)?;
            let cov = coverage(&accumulate_raw(&hits, m.face_count()));
            println!("sauc,cc,kl,coverage");
            println!("{sauc},{cc},{kl},{cov}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
