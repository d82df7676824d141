//! Scripted turntable sessions standing in for recorded headset data.
//!
//! The stimulus stays fixed and the viewpoint orbits it; a model spinning in
//! front of a static viewer is the same relative motion. Each subject starts
//! at a random orbit phase.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::GazeSample;
use crate::error::{Error, Result};
use crate::geom::{Mat3, Vec3};
use crate::mesh::TriangleMesh;
use crate::rng::{domain, stream_rng};
use crate::scalar::Scalar;

/// Orbit radius in normalized (unit-diagonal) mesh units.
pub const ORBIT_RADIUS: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixationTarget {
    /// Point in normalized mesh coordinates.
    Point([f64; 3]),
    /// Centroid of a face.
    Face(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixationWindow {
    pub start: f64,
    pub end: f64,
    pub target: FixationTarget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    /// Seconds.
    pub duration: f64,
    /// Hz.
    pub frame_rate: f64,
    /// Degrees per second.
    pub turntable_rate: f64,
    pub subjects: u32,
    /// Windows `[start, end)` in seconds; the first one containing `t` wins.
    /// Outside every window the gaze targets the AABB center.
    pub fixation_script: Vec<FixationWindow>,
    /// Standard deviation of the isotropic angular gaze jitter, degrees.
    pub gaze_noise_deg: f64,
    pub seed: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            duration: 25.0,
            frame_rate: 90.0,
            turntable_rate: 15.0,
            subjects: 22,
            fixation_script: Vec::new(),
            gaze_noise_deg: 0.0,
            seed: 0,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) {
            return Err(Error::Config("session duration must be > 0".into()));
        }
        if !(self.frame_rate > 0.0) {
            return Err(Error::Config("session frame_rate must be > 0".into()));
        }
        if !(self.gaze_noise_deg >= 0.0) {
            return Err(Error::Config("gaze_noise_deg must be >= 0".into()));
        }
        Ok(())
    }

    pub fn frames_per_subject(&self) -> usize {
        (self.duration * self.frame_rate).round() as usize
    }
}

/// Generates `frames_per_subject · subjects` samples, grouped by subject and
/// time-ascending. Deterministic for a fixed seed.
pub fn synth_turntable_session<T: Scalar>(
    mesh: &TriangleMesh<T>,
    cfg: &SessionConfig,
) -> Result<Vec<GazeSample<T>>> {
    cfg.validate()?;
    let center = mesh.aabb.center();
    let mut resolved = Vec::with_capacity(cfg.fixation_script.len());
    for w in &cfg.fixation_script {
        let p = match w.target {
            FixationTarget::Point(p) => Vec3::from_array(p).cast::<T>(),
            FixationTarget::Face(f) => {
                if f >= mesh.face_count() {
                    return Err(Error::TargetOutOfRange {
                        face: f,
                        count: mesh.face_count(),
                    });
                }
                mesh.centroid(f)
            }
        };
        resolved.push((w.start, w.end, p));
    }
    let target_at = |t: f64| {
        resolved
            .iter()
            .find(|(s, e, _)| t >= *s && t < *e)
            .map(|w| w.2)
            .unwrap_or(center)
    };

    let frames = cfg.frames_per_subject();
    let noise = Normal::new(0.0, cfg.gaze_noise_deg.to_radians())
        .map_err(|e| Error::Config(format!("gaze noise: {e}")))?;
    let radius = T::lit(ORBIT_RADIUS);

    let per_subject: Vec<Vec<GazeSample<T>>> = (0..cfg.subjects)
        .into_par_iter()
        .map(|subject| {
            let mut rng = stream_rng(cfg.seed, &[domain::SESSION, subject as u64]);
            let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            (0..frames)
                .map(|k| {
                    let t = k as f64 / cfg.frame_rate;
                    let theta = T::lit(phase + (cfg.turntable_rate * t).to_radians());
                    let origin = center + Vec3::new(theta.sin(), T::zero(), theta.cos()) * radius;
                    let mut dir = (target_at(t) - origin).normalized();
                    if cfg.gaze_noise_deg > 0.0 {
                        let dx = noise.sample(&mut rng);
                        let dy = noise.sample(&mut rng);
                        let r = T::lit(dx.hypot(dy));
                        let phi = T::lit(dy.atan2(dx));
                        let local = Vec3::new(r.sin() * phi.cos(), r.sin() * phi.sin(), r.cos());
                        dir = Mat3::look_frame(dir).mul_vec(local).normalized();
                    }
                    GazeSample {
                        t: T::lit(t),
                        subject,
                        frame: k as u32 + 1,
                        origin,
                        gaze_to_world: Mat3::look_frame(dir),
                    }
                })
                .collect()
        })
        .collect();
    Ok(per_subject.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;

    fn one_subject() -> SessionConfig {
        SessionConfig {
            subjects: 1,
            ..Default::default()
        }
    }

    #[test]
    fn default_frame_count() {
        let (m, _) = shapes::unit_cube::<f64>().normalize_unit_diag().unwrap();
        let s = synth_turntable_session(&m, &one_subject()).unwrap();
        assert_eq!(s.len(), 2250);
        assert_eq!(s.last().unwrap().frame, 2250);
    }

    #[test]
    fn noiseless_gaze_hits_center() {
        let (m, _) = shapes::icosphere::<f64>(3).normalize_unit_diag().unwrap();
        let cfg = SessionConfig {
            subjects: 2,
            duration: 2.0,
            ..Default::default()
        };
        let s = synth_turntable_session(&m, &cfg).unwrap();
        let c = m.aabb.center();
        for g in &s {
            let want = (c - g.origin).normalized();
            assert!(g.gaze_dir().distance(want) < 1e-12);
            assert!((g.origin.distance(c) - ORBIT_RADIUS).abs() < 1e-12);
            let m_c = g.gaze_to_world;
            assert!(m_c.orthonormality_error() < 1e-12);
            assert!((m_c.determinant() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn orbit_advances_at_turntable_rate() {
        let (m, _) = shapes::unit_cube::<f64>().normalize_unit_diag().unwrap();
        let s = synth_turntable_session(&m, &one_subject()).unwrap();
        let c = m.aabb.center();
        let a = (s[0].origin - c).angle_to(s[90].origin - c);
        assert!((a.to_degrees() - 15.0).abs() < 1e-9);
    }

    #[test]
    fn same_seed_same_session() {
        let (m, _) = shapes::unit_cube::<f64>().normalize_unit_diag().unwrap();
        let cfg = SessionConfig {
            subjects: 3,
            gaze_noise_deg: 1.0,
            seed: 11,
            duration: 1.0,
            ..Default::default()
        };
        let a = synth_turntable_session(&m, &cfg).unwrap();
        let b = synth_turntable_session(&m, &cfg).unwrap();
        assert_eq!(a, b);
        let c = synth_turntable_session(&m, &SessionConfig { seed: 12, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn jitter_has_requested_spread() {
        let (m, _) = shapes::unit_cube::<f64>().normalize_unit_diag().unwrap();
        let cfg = SessionConfig {
            subjects: 4,
            gaze_noise_deg: 1.0,
            ..Default::default()
        };
        let s = synth_turntable_session(&m, &cfg).unwrap();
        let c = m.aabb.center();
        // Squared angular offset of a 2D isotropic Gaussian has mean 2σ².
        let mean_sq: f64 = s
            .iter()
            .map(|g| g.gaze_dir().angle_to(c - g.origin).to_degrees().powi(2))
            .sum::<f64>()
            / s.len() as f64;
        assert!((mean_sq - 2.0).abs() < 0.1, "mean squared offset {mean_sq}");
    }

    #[test]
    fn face_target_out_of_range() {
        let (m, _) = shapes::unit_cube::<f64>().normalize_unit_diag().unwrap();
        let cfg = SessionConfig {
            fixation_script: vec![FixationWindow {
                start: 0.0,
                end: 1.0,
                target: FixationTarget::Face(12),
            }],
            ..one_subject()
        };
        assert!(matches!(
            synth_turntable_session(&m, &cfg),
            Err(Error::TargetOutOfRange { face: 12, count: 12 })
        ));
    }

    #[test]
    fn script_window_redirects_gaze() {
        let (m, _) = shapes::unit_cube::<f64>().normalize_unit_diag().unwrap();
        let p = [0.1, 0.2, 0.0];
        let cfg = SessionConfig {
            duration: 2.0,
            fixation_script: vec![FixationWindow {
                start: 1.0,
                end: 2.0,
                target: FixationTarget::Point(p),
            }],
            ..one_subject()
        };
        let s = synth_turntable_session(&m, &cfg).unwrap();
        let late = &s[100];
        let want = (Vec3::from_array(p) - late.origin).normalized();
        assert!(late.gaze_dir().distance(want) < 1e-12);
    }
}
