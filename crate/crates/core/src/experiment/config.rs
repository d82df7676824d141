use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gaze::SessionConfig;
use crate::hcd::{DiffusionConfig, MergeMode, SmoothConfig};
use crate::mesh::DEFAULT_STEP_SAMPLES;
use crate::metrics::SAUC_REPETITIONS;
use crate::sampler::ConeConfig;

/// A mesh path, optionally with a recorded gaze log in normalized mesh
/// coordinates. Without a log a synthetic turntable session is generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeshEntry {
    Path(PathBuf),
    WithGaze { path: PathBuf, gaze_log: Option<PathBuf> },
}

impl MeshEntry {
    pub fn path(&self) -> &Path {
        match self {
            MeshEntry::Path(p) => p,
            MeshEntry::WithGaze { path, .. } => path,
        }
    }

    pub fn gaze_log(&self) -> Option<&Path> {
        match self {
            MeshEntry::Path(_) => None,
            MeshEntry::WithGaze { gaze_log, .. } => gaze_log.as_deref(),
        }
    }

    /// Output directory name.
    pub fn stem(&self) -> String {
        self.path()
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "mesh".into())
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match self {
            MeshEntry::Path(p) => fix(p),
            MeshEntry::WithGaze { path, gaze_log } => {
                fix(path);
                if let Some(g) = gaze_log {
                    fix(g);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalDomain {
    Vertex,
    /// Raw face counts against the diffused face field.
    Face,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub domain: EvalDomain,
    pub sauc_repetitions: usize,
    pub internal_consistency: bool,
    /// Adjacent face pairs sampled for the average step length.
    pub step_samples: usize,
    /// Fixation points per mesh offered to the other meshes as sAUC
    /// negatives.
    pub negative_points: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            domain: EvalDomain::Vertex,
            sauc_repetitions: SAUC_REPETITIONS,
            internal_consistency: true,
            step_samples: DEFAULT_STEP_SAMPLES,
            negative_points: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub meshes: Vec<MeshEntry>,
    pub output_dir: PathBuf,
    /// Seeds the session generator, the cone sampler and sAUC shuffles.
    pub seed: u64,
    /// Sums diffusion contributions in a fixed order.
    pub deterministic: bool,
    /// Evaluates {single_ray, vcs} × {hopcount, euclidean, geodesic}.
    pub ablation_grid: bool,
    pub write_hit_log: bool,
    pub session: SessionConfig,
    pub cone: ConeConfig,
    pub diffusion: DiffusionConfig,
    pub smoothing: SmoothConfig,
    pub evaluation: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            meshes: Vec::new(),
            output_dir: PathBuf::from("out"),
            seed: 0,
            deterministic: false,
            ablation_grid: false,
            write_hit_log: true,
            session: SessionConfig::default(),
            cone: ConeConfig::default(),
            diffusion: DiffusionConfig::default(),
            smoothing: SmoothConfig::default(),
            evaluation: EvalConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parses TOML. Relative paths are taken relative to `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for m in &mut cfg.meshes {
            m.resolve(base_dir);
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base_dir.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base)
    }

    /// Checks every parameter and that every referenced file exists.
    pub fn validate(&self) -> Result<()> {
        if self.meshes.is_empty() {
            return Err(Error::Config("no meshes configured".into()));
        }
        let mut stems = std::collections::HashSet::new();
        for m in &self.meshes {
            if !m.path().is_file() {
                return Err(Error::Config(format!("mesh not found: {}", m.path().display())));
            }
            if let Some(g) = m.gaze_log() {
                if !g.is_file() {
                    return Err(Error::Config(format!("gaze log not found: {}", g.display())));
                }
            }
            if !stems.insert(m.stem()) {
                return Err(Error::Config(format!("two meshes share the output name {:?}", m.stem())));
            }
        }
        self.session.validate()?;
        self.cone.validate()?;
        self.diffusion.validate()?;
        self.smoothing.validate()?;
        if self.evaluation.sauc_repetitions == 0 {
            return Err(Error::Config("sauc_repetitions must be >= 1".into()));
        }
        Ok(())
    }

    /// The configuration actually run: the global seed replaces the
    /// per-stage seeds and deterministic mode forces ordered merging.
    pub fn effective(&self) -> RunConfig {
        let mut cfg = self.clone();
        cfg.session.seed = self.seed;
        cfg.cone.seed = self.seed;
        if self.deterministic {
            cfg.diffusion.merge = MergeMode::Ordered;
        }
        cfg
    }

    /// SHA-256 over the effective configuration, excluding the output
    /// directory.
    pub fn digest(&self) -> String {
        let mut cfg = self.effective();
        cfg.output_dir = PathBuf::new();
        let json = serde_json::to_string(&cfg).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hcd::DistanceMetric;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = RunConfig::from_toml_str("meshes = [\"a.obj\"]", Path::new("/data")).unwrap();
        assert_eq!(cfg.meshes[0].path(), Path::new("/data/a.obj"));
        assert_eq!(cfg.output_dir, PathBuf::from("/data/out"));
        assert_eq!(cfg.cone.aperture_deg, 5.0);
        assert_eq!(cfg.cone.sigma1_deg(), 5.0 / 6.0);
        assert_eq!(cfg.diffusion.sigma2, 0.02);
        assert_eq!(cfg.diffusion.d_max(), 0.06);
        assert_eq!(cfg.smoothing.gamma, 0.5);
        assert_eq!(cfg.session.turntable_rate, 15.0);
        assert_eq!(cfg.session.duration, 25.0);
        assert_eq!(cfg.session.frame_rate, 90.0);
    }

    #[test]
    fn nested_sections_and_gaze_entries() {
        let text = r#"
seed = 7
deterministic = true
meshes = ["a.obj", { path = "b.ply", gaze_log = "b.jsonl" }]

[diffusion]
metric = "euclidean"

[session]
subjects = 2
"#;
        let cfg = RunConfig::from_toml_str(text, Path::new("/x")).unwrap();
        assert_eq!(cfg.meshes[1].gaze_log(), Some(Path::new("/x/b.jsonl")));
        assert_eq!(cfg.diffusion.metric, DistanceMetric::Euclidean);
        let eff = cfg.effective();
        assert_eq!(eff.session.seed, 7);
        assert_eq!(eff.cone.seed, 7);
        assert_eq!(eff.diffusion.merge, MergeMode::Ordered);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml_str("meshes = []\n[cone]\napex = 3", Path::new(".")).is_err());
    }

    #[test]
    fn missing_mesh_fails_validation() {
        let cfg = RunConfig::from_toml_str("meshes = [\"nope.obj\"]", Path::new("/nonexistent")).unwrap();
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("mesh not found"), "{err}");
    }

    #[test]
    fn digest_ignores_output_dir_only() {
        let a = RunConfig::from_toml_str("meshes = [\"a.obj\"]\noutput_dir = \"o1\"", Path::new("/")).unwrap();
        let b = RunConfig::from_toml_str("meshes = [\"a.obj\"]\noutput_dir = \"o2\"", Path::new("/")).unwrap();
        let c = RunConfig::from_toml_str("meshes = [\"a.obj\"]\nseed = 1", Path::new("/")).unwrap();
        assert_eq!(a.digest(), b.digest());
        assert_ne!(a.digest(), c.digest());
        assert_eq!(a.digest().len(), 64);
    }
}
