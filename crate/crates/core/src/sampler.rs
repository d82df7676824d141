//! View-cone sampling: every gaze frame becomes a bundle of rays whose spread
//! angle from the gaze axis is Gaussian (Box–Muller) and whose roll is uniform.
//! Hits that graze or face away from the ray are discarded before per-face
//! hit counts are accumulated.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FaceField, Stage};
use crate::gaze::GazeSample;
use crate::geom::{Mat3, Vec3};
use crate::mesh::{RayAccel, TriangleMesh};
use crate::rng::{domain, stream_rng};
use crate::scalar::Scalar;

/// Redraw cap for [`sample_spread_angle`].
pub const MAX_SPREAD_REDRAWS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcquisitionMode {
    Vcs,
    SingleRay,
}

impl AcquisitionMode {
    pub fn name(self) -> &'static str {
        match self {
            AcquisitionMode::Vcs => "vcs",
            AcquisitionMode::SingleRay => "single_ray",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConeConfig {
    /// Cone apex angle `R_f`, degrees.
    pub aperture_deg: f64,
    /// Spread-angle standard deviation, degrees; `aperture_deg / 6` when unset.
    pub sigma1_deg: Option<f64>,
    pub rays_per_sample: usize,
    pub mode: AcquisitionMode,
    /// Hits need `n_f · (−D̂) > backface_threshold`.
    pub backface_threshold: f64,
    pub seed: u64,
}

impl Default for ConeConfig {
    fn default() -> Self {
        Self {
            aperture_deg: 5.0,
            sigma1_deg: None,
            rays_per_sample: 64,
            mode: AcquisitionMode::Vcs,
            backface_threshold: 0.1,
            seed: 0,
        }
    }
}

impl ConeConfig {
    pub fn sigma1_deg(&self) -> f64 {
        self.sigma1_deg.unwrap_or(self.aperture_deg / 6.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.aperture_deg > 0.0 && self.aperture_deg < 180.0) {
            return Err(Error::Config("aperture_deg must be in (0, 180)".into()));
        }
        if !(self.sigma1_deg() > 0.0) {
            return Err(Error::Config("sigma1_deg must be > 0".into()));
        }
        if self.rays_per_sample == 0 {
            return Err(Error::Config("rays_per_sample must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RayKind {
    Central,
    Bundle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SampleId {
    pub subject: u32,
    pub frame: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HitRecord<T> {
    pub face: u32,
    pub point: Vec3<T>,
    /// `n_f · (−D̂_n)`.
    pub incidence: T,
    pub sample: SampleId,
    pub kind: RayKind,
}

/// Mesh (with normals) and its ray index.
#[derive(Clone, Copy)]
pub struct Scene<'a, T> {
    pub mesh: &'a TriangleMesh<T>,
    pub accel: &'a RayAccel<T>,
}

impl<'a, T: Scalar> Scene<'a, T> {
    pub fn new(mesh: &'a TriangleMesh<T>, accel: &'a RayAccel<T>) -> Self {
        assert!(mesh.has_normals(), "scene mesh needs face normals");
        Self { mesh, accel }
    }
}

/// Signed Box–Muller spread angle `σ₁·√(−2 ln u₁)·sin(2π u₂)`, in the units
/// of `sigma1`.
pub fn spread_angle_from_uniforms<T: Scalar>(u1: T, u2: T, sigma1: T) -> T {
    sigma1 * (-T::lit(2.0) * u1.ln()).sqrt() * (T::TAU() * u2).sin()
}

/// Draws a spread angle in the open interval `(0, aperture/2)` degrees:
/// absolute value of a Box–Muller draw, redrawn until it lands inside.
pub fn sample_spread_angle<T: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    sigma1_deg: T,
    aperture_deg: T,
) -> Result<T> {
    let limit = aperture_deg * T::lit(0.5);
    for _ in 0..MAX_SPREAD_REDRAWS {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        if u1 == 0.0 {
            continue;
        }
        let s = spread_angle_from_uniforms(T::lit(u1), T::lit(u2), sigma1_deg).abs();
        if s > T::zero() && s < limit {
            return Ok(s);
        }
    }
    Err(Error::PathologicalSigma(MAX_SPREAD_REDRAWS))
}

/// Direction of one bundle ray: `d₀ = [0,0,1]ᵀ` tilted by `spread_deg` about
/// the local x axis, rolled by `roll_rad` about the local z axis, then mapped
/// to world space by `m_c`.
pub fn cone_ray_direction<T: Scalar>(roll_rad: T, spread_deg: T, m_c: &Mat3<T>) -> Vec3<T> {
    let d0 = Vec3::new(T::zero(), T::zero(), T::one());
    let local = Mat3::rotation_z(roll_rad).mul_vec(Mat3::rotation_x(spread_deg.to_radians()).mul_vec(d0));
    m_c.mul_vec(local).normalized()
}

/// `n_f · (−D̂) > threshold`, strictly.
pub fn backface_accept<T: Scalar>(normal: Vec3<T>, dir: Vec3<T>, threshold: T) -> bool {
    normal.dot(-dir) > threshold
}

fn cast_ray<T: Scalar>(
    scene: &Scene<'_, T>,
    origin: Vec3<T>,
    dir: Vec3<T>,
    threshold: T,
    sample: SampleId,
    kind: RayKind,
) -> Option<HitRecord<T>> {
    let hit = scene.accel.nearest_hit(origin, dir)?;
    let normal = scene.mesh.face_normals[hit.face as usize];
    if !backface_accept(normal, dir, threshold) {
        return None;
    }
    Some(HitRecord {
        face: hit.face,
        point: hit.point,
        incidence: normal.dot(-dir),
        sample,
        kind,
    })
}

fn sample_id<T>(s: &GazeSample<T>) -> SampleId {
    SampleId {
        subject: s.subject,
        frame: s.frame,
    }
}

/// Hits of the bundle rays of one sample. The ray stream is seeded by
/// `(cfg.seed, subject, frame)` only.
fn bundle_hits<T: Scalar>(scene: &Scene<'_, T>, sample: &GazeSample<T>, cfg: &ConeConfig) -> Result<Vec<HitRecord<T>>> {
    let id = sample_id(sample);
    let mut rng = stream_rng(cfg.seed, &[domain::CONE, id.subject as u64, id.frame as u64]);
    let sigma1 = T::lit(cfg.sigma1_deg());
    let aperture = T::lit(cfg.aperture_deg);
    let threshold = T::lit(cfg.backface_threshold);
    let mut out = Vec::new();
    for _ in 0..cfg.rays_per_sample {
        let roll = T::lit(rng.random_range(0.0..std::f64::consts::TAU));
        let spread = sample_spread_angle(&mut rng, sigma1, aperture)?;
        let dir = cone_ray_direction(roll, spread, &sample.gaze_to_world);
        out.extend(cast_ray(scene, sample.origin, dir, threshold, id, RayKind::Bundle));
    }
    Ok(out)
}

fn central_hit<T: Scalar>(scene: &Scene<'_, T>, sample: &GazeSample<T>, cfg: &ConeConfig) -> Option<HitRecord<T>> {
    let dir = sample.gaze_dir().normalized();
    cast_ray(
        scene,
        sample.origin,
        dir,
        T::lit(cfg.backface_threshold),
        sample_id(sample),
        RayKind::Central,
    )
}

/// Casts one gaze sample according to `cfg.mode`. Misses produce no record.
pub fn cast_sample<T: Scalar>(scene: &Scene<'_, T>, sample: &GazeSample<T>, cfg: &ConeConfig) -> Result<Vec<HitRecord<T>>> {
    match cfg.mode {
        AcquisitionMode::Vcs => bundle_hits(scene, sample, cfg),
        AcquisitionMode::SingleRay => Ok(central_hit(scene, sample, cfg).into_iter().collect()),
    }
}

/// Casts every sample in parallel; output keeps input order.
pub fn cast_session<T: Scalar>(
    scene: &Scene<'_, T>,
    samples: &[GazeSample<T>],
    cfg: &ConeConfig,
) -> Result<Vec<HitRecord<T>>> {
    cfg.validate()?;
    let per: Vec<Vec<HitRecord<T>>> = samples
        .par_iter()
        .map(|s| cast_sample(scene, s, cfg))
        .collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

/// Bundle hits and the central-axis hits of the same frames, recorded in one
/// pass. The bundle part equals `cast_session` in VCS mode and the central
/// part equals it in single-ray mode.
#[derive(Debug, Clone)]
pub struct SynchronousHits<T> {
    pub bundle: Vec<HitRecord<T>>,
    pub central: Vec<HitRecord<T>>,
}

impl<T> SynchronousHits<T> {
    pub fn for_mode(&self, mode: AcquisitionMode) -> &[HitRecord<T>] {
        match mode {
            AcquisitionMode::Vcs => &self.bundle,
            AcquisitionMode::SingleRay => &self.central,
        }
    }
}

pub fn cast_session_synchronous<T: Scalar>(
    scene: &Scene<'_, T>,
    samples: &[GazeSample<T>],
    cfg: &ConeConfig,
) -> Result<SynchronousHits<T>> {
    cfg.validate()?;
    let per: Vec<(Vec<HitRecord<T>>, Option<HitRecord<T>>)> = samples
        .par_iter()
        .map(|s| Ok((bundle_hits(scene, s, cfg)?, central_hit(scene, s, cfg))))
        .collect::<Result<_>>()?;
    let mut bundle = Vec::new();
    let mut central = Vec::new();
    for (b, c) in per {
        bundle.extend(b);
        central.extend(c);
    }
    Ok(SynchronousHits { bundle, central })
}

/// Per-face hit counts, summed over all subjects, frames and rays with no
/// time weighting.
pub fn accumulate_raw<T: Scalar>(hits: &[HitRecord<T>], face_count: usize) -> FaceField<T> {
    let mut counts = vec![0u64; face_count];
    for h in hits {
        counts[h.face as usize] += 1;
    }
    FaceField::new(
        counts.into_iter().map(|c| T::lit(c as f64)).collect(),
        Stage::Raw,
    )
}

/// Fraction of faces with at least one hit.
pub fn coverage<T: Scalar>(raw: &FaceField<T>) -> T {
    if raw.is_empty() {
        return T::zero();
    }
    let hit = raw.values.iter().filter(|&&v| v > T::zero()).count();
    T::from_count(hit) / T::from_count(raw.len())
}

#[derive(Debug, Serialize, Deserialize)]
struct HitRow {
    subject: u32,
    frame: u32,
    ray_kind: RayKind,
    face: u32,
    px: f64,
    py: f64,
    pz: f64,
    incidence: f64,
}

pub fn write_hit_log<T: Scalar>(path: &Path, hits: &[HitRecord<T>], comment: &str) -> Result<()> {
    let mut file = std::io::BufWriter::new(fs::File::create(path).map_err(|e| Error::io(path, e))?);
    writeln!(file, "# {comment}").map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    for h in hits {
        w.serialize(HitRow {
            subject: h.sample.subject,
            frame: h.sample.frame,
            ray_kind: h.kind,
            face: h.face,
            px: h.point.x.to_f64_lossless(),
            py: h.point.y.to_f64_lossless(),
            pz: h.point.z.to_f64_lossless(),
            incidence: h.incidence.to_f64_lossless(),
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads a hit log, checking face indices against `face_count`.
pub fn read_hit_log<T: Scalar>(path: &Path, face_count: usize) -> Result<Vec<HitRecord<T>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)?;
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<HitRow>().enumerate() {
        let r = row?;
        if r.face as usize >= face_count {
            return Err(Error::HitLog {
                record: i + 1,
                msg: format!("face {} out of range ({face_count} faces)", r.face),
            });
        }
        out.push(HitRecord {
            face: r.face,
            point: Vec3::new(T::lit(r.px), T::lit(r.py), T::lit(r.pz)),
            incidence: T::lit(r.incidence),
            sample: SampleId {
                subject: r.subject,
                frame: r.frame,
            },
            kind: r.ray_kind,
        });
    }
    Ok(out)
}
