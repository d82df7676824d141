//! Saliency evaluation: correlation, KL divergence, shuffled AUC, internal
//! consistency and coverage improvement.

use std::collections::HashSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::VertexField;
use crate::gaze::{split_parity, GazeSample};
use crate::hcd::{face_to_vertex, run_pipeline, DiffusionConfig, SmoothConfig};
use crate::mesh::AdjacencyIndex;
use crate::sampler::{accumulate_raw, cast_session, ConeConfig, HitRecord, Scene};
use crate::scalar::Scalar;

pub const KL_EPS: f64 = 1e-12;
pub const SAUC_REPETITIONS: usize = 10;

/// Pearson correlation coefficient.
pub fn pearson_cc<T: Scalar>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(Error::UndefinedCc("fewer than 2 values"));
    }
    let n = T::from_count(a.len());
    let ma = a.iter().copied().sum::<T>() / n;
    let mb = b.iter().copied().sum::<T>() / n;
    let (mut sab, mut saa, mut sbb) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if !(saa > T::zero()) || !(sbb > T::zero()) {
        return Err(Error::UndefinedCc("zero variance"));
    }
    let r = sab / (saa.sqrt() * sbb.sqrt());
    Ok(r.max(-T::one()).min(T::one()))
}

/// `KL(p ‖ q)` after shifting both by `eps` and renormalizing to unit mass.
/// `p` is the fixation density, `q` the saliency map.
pub fn kl_divergence<T: Scalar>(p: &[T], q: &[T], eps: T) -> Result<T> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch(p.len(), q.len()));
    }
    let sp: T = p.iter().copied().sum();
    let sq: T = q.iter().copied().sum();
    if !(sp > T::zero()) || !(sq > T::zero()) {
        return Err(Error::EmptyField);
    }
    let n = T::from_count(p.len());
    let zp = sp + eps * n;
    let zq = sq + eps * n;
    let mut kl = T::zero();
    for (&a, &b) in p.iter().zip(q) {
        let pi = (a + eps) / zp;
        let qi = (b + eps) / zq;
        kl += pi * (pi / qi).ln();
    }
    Ok(kl.max(T::zero()))
}

/// Vertex (or face) ids with positive weight.
#[derive(Debug, Clone, PartialEq)]
pub struct FixationSet {
    pub ids: Vec<u32>,
    pub weights: Vec<f64>,
    pub source: String,
}

impl FixationSet {
    /// Every id with `density > 0`, weighted by the density.
    pub fn from_density<T: Scalar>(density: &[T], source: impl Into<String>) -> Self {
        let (ids, weights) = density
            .iter()
            .enumerate()
            .filter(|(_, &d)| d > T::zero())
            .map(|(i, &d)| (i as u32, d.to_f64_lossless()))
            .unzip();
        Self {
            ids,
            weights,
            source: source.into(),
        }
    }

    pub fn from_ids(ids: Vec<u32>, source: impl Into<String>) -> Self {
        let weights = vec![1.0; ids.len()];
        Self {
            ids,
            weights,
            source: source.into(),
        }
    }

    /// All ids `0..count`, used when no other stimuli supply negatives.
    pub fn uniform(count: usize) -> Self {
        Self::from_ids((0..count as u32).collect(), "uniform")
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Mann–Whitney AUC of `pos` against `neg`; ties count one half.
fn auc<T: Scalar>(pos: &[T], neg: &mut [T]) -> f64 {
    neg.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut score = 0.0;
    for &p in pos {
        let below = neg.partition_point(|&v| v < p);
        let up_to = neg.partition_point(|&v| v <= p);
        score += below as f64 + 0.5 * (up_to - below) as f64;
    }
    score / (pos.len() as f64 * neg.len() as f64)
}

/// Shuffled AUC: saliency at fixated ids against saliency at ids drawn (with
/// replacement, as many as there are positives) from `negative_pool` minus
/// the positives. Averaged over `repetitions` draws.
pub fn shuffled_auc<T: Scalar, R: Rng + ?Sized>(
    saliency: &[T],
    positives: &FixationSet,
    negative_pool: &FixationSet,
    rng: &mut R,
    repetitions: usize,
) -> Result<T> {
    if positives.is_empty() {
        return Err(Error::EmptyPositives);
    }
    let check = |ids: &[u32]| match ids.iter().find(|&&i| i as usize >= saliency.len()) {
        Some(&i) => Err(Error::LengthMismatch(i as usize, saliency.len())),
        None => Ok(()),
    };
    check(&positives.ids)?;
    check(&negative_pool.ids)?;
    let taken: HashSet<u32> = positives.ids.iter().copied().collect();
    let pool: Vec<u32> = negative_pool.ids.iter().copied().filter(|i| !taken.contains(i)).collect();
    if pool.is_empty() {
        return Err(Error::Config("negative pool is empty after removing positives".into()));
    }
    let pos: Vec<T> = positives.ids.iter().map(|&i| saliency[i as usize]).collect();
    let reps = repetitions.max(1);
    let mut neg = vec![T::zero(); pos.len()];
    let mut total = 0.0;
    for _ in 0..reps {
        for slot in neg.iter_mut() {
            *slot = saliency[pool[rng.random_range(0..pool.len())] as usize];
        }
        total += auc(&pos, &mut neg);
    }
    Ok(T::lit(total / reps as f64))
}

/// Fixation density on vertices: raw hit counts mapped through the face to
/// vertex mean, with no diffusion.
pub fn fixation_density<T: Scalar>(hits: &[HitRecord<T>], adj: &AdjacencyIndex<T>) -> VertexField<T> {
    face_to_vertex(&accumulate_raw(hits, adj.face_count()), adj)
}

fn halves_cc<T: Scalar>(a: &[T], b: &[T]) -> Result<T> {
    pearson_cc(a, b).map_err(|e| match e {
        Error::UndefinedCc(why) => Error::DegenerateHalves(why.to_string()),
        other => other,
    })
}

/// Splits a session into odd and even frames, runs the whole pipeline on each
/// half and correlates the two normalized vertex fields.
pub fn internal_consistency<T: Scalar>(
    scene: &Scene<'_, T>,
    adj: &AdjacencyIndex<T>,
    samples: &[GazeSample<T>],
    cone: &ConeConfig,
    diffusion: &DiffusionConfig,
    smoothing: &SmoothConfig,
) -> Result<T> {
    if samples.len() < 2 {
        return Err(Error::DegenerateHalves("need at least 2 frames".into()));
    }
    let (odd, even) = split_parity(samples);
    let a = cast_session(scene, &odd, cone)?;
    let b = cast_session(scene, &even, cone)?;
    let sa = run_pipeline(scene.mesh, adj, &a, diffusion, smoothing)?;
    let sb = run_pipeline(scene.mesh, adj, &b, diffusion, smoothing)?;
    halves_cc(&sa.saliency.values, &sb.saliency.values)
}

/// Same as [`internal_consistency`] for hits already cast from a numbered
/// session: hits are split by the parity of their frame index. Because ray
/// streams depend only on `(seed, subject, frame)`, this equals recasting each
/// half.
pub fn internal_consistency_from_hits<T: Scalar>(
    scene: &Scene<'_, T>,
    adj: &AdjacencyIndex<T>,
    hits: &[HitRecord<T>],
    diffusion: &DiffusionConfig,
    smoothing: &SmoothConfig,
) -> Result<T> {
    let (odd, even): (Vec<_>, Vec<_>) = hits.iter().cloned().partition(|h| h.sample.frame % 2 == 1);
    let sa = run_pipeline(scene.mesh, adj, &odd, diffusion, smoothing)?;
    let sb = run_pipeline(scene.mesh, adj, &even, diffusion, smoothing)?;
    halves_cc(&sa.saliency.values, &sb.saliency.values)
}

/// `coverage_vcs / coverage_single`; infinite when the single-ray coverage is
/// zero.
pub fn improvement_factor<T: Scalar>(coverage_vcs: T, coverage_single: T) -> T {
    if coverage_single > T::zero() {
        coverage_vcs / coverage_single
    } else {
        T::infinity()
    }
}

/// Face-count buckets used when aggregating coverage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FaceBucket {
    Under100k,
    From100kTo200k,
    From200kTo300k,
    From300kTo600k,
    From600kTo900k,
    Over900k,
}

impl FaceBucket {
    pub const ALL: [FaceBucket; 6] = [
        FaceBucket::Under100k,
        FaceBucket::From100kTo200k,
        FaceBucket::From200kTo300k,
        FaceBucket::From300kTo600k,
        FaceBucket::From600kTo900k,
        FaceBucket::Over900k,
    ];

    pub fn for_face_count(n: usize) -> Self {
        match n {
            0..100_000 => FaceBucket::Under100k,
            100_000..200_000 => FaceBucket::From100kTo200k,
            200_000..300_000 => FaceBucket::From200kTo300k,
            300_000..600_000 => FaceBucket::From300kTo600k,
            600_000..=900_000 => FaceBucket::From600kTo900k,
            _ => FaceBucket::Over900k,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FaceBucket::Under100k => "<100k",
            FaceBucket::From100kTo200k => "100k-200k",
            FaceBucket::From200kTo300k => "200k-300k",
            FaceBucket::From300kTo600k => "300k-600k",
            FaceBucket::From600kTo900k => "600k-900k",
            FaceBucket::Over900k => ">900k",
        }
    }
}

impl fmt::Display for FaceBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Where sAUC negatives came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeSource {
    /// Fixations of the other meshes in the batch.
    Batch,
    /// Uniformly random vertices of the same mesh.
    Uniform,
}

/// One evaluated `(mesh, acquisition, processing)` cell; also the row
/// layout of the metrics CSV. Metrics that could not be computed are empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub schema_version: u32,
    pub pipeline_version: String,
    pub config_digest: String,
    pub seed: u64,
    pub mesh: String,
    pub face_count: usize,
    pub acquisition: String,
    pub processing: String,
    pub ic: Option<f64>,
    pub sauc: Option<f64>,
    pub cc: Option<f64>,
    pub kl: Option<f64>,
    pub coverage_vcs: f64,
    pub coverage_single: f64,
    pub improvement: f64,
    pub negatives: NegativeSource,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cc_hand_value() {
        // mean b = 7/3; deviations a (−1,0,1), b (−4/3,−1/3,5/3):
        // sab = 3, saa = 2, sbb = 42/9 → 3 / √(2·42/9)
        let r = pearson_cc(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
        let want = 3.0 / (2.0f64 * 42.0 / 9.0).sqrt();
        assert!((r - want).abs() < 1e-12);
        assert!((r - 0.98198).abs() < 1e-5);
    }

    #[test]
    fn cc_errors() {
        assert!(matches!(pearson_cc(&[1.0, 1.0], &[1.0, 2.0]), Err(Error::UndefinedCc(_))));
        assert!(matches!(pearson_cc(&[1.0], &[1.0]), Err(Error::UndefinedCc(_))));
        assert!(pearson_cc(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn kl_point_mass_vs_uniform() {
        let kl = kl_divergence(&[1.0, 0.0], &[0.5, 0.5], KL_EPS).unwrap();
        assert!((kl - std::f64::consts::LN_2).abs() < 1e-9);
        assert!(kl_divergence(&[0.0, 0.0], &[0.5, 0.5], KL_EPS).is_err());
    }

    #[test]
    fn auc_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sal: Vec<f64> = (0..100).map(|i| if i < 10 { 1.0 } else { 0.0 }).collect();
        let pos = FixationSet::from_ids((0..10).collect(), "t");
        let pool = FixationSet::uniform(100);
        assert_eq!(shuffled_auc(&sal, &pos, &pool, &mut rng, 10).unwrap(), 1.0);
        let inv: Vec<f64> = sal.iter().map(|v| 1.0 - v).collect();
        assert_eq!(shuffled_auc(&inv, &pos, &pool, &mut rng, 10).unwrap(), 0.0);
        let flat = vec![0.3; 100];
        assert_eq!(shuffled_auc(&flat, &pos, &pool, &mut rng, 10).unwrap(), 0.5);
    }

    #[test]
    fn auc_needs_positives_and_pool() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let empty = FixationSet::from_ids(vec![], "t");
        assert!(matches!(
            shuffled_auc(&[0.0; 4], &empty, &FixationSet::uniform(4), &mut rng, 1),
            Err(Error::EmptyPositives)
        ));
        let all = FixationSet::uniform(4);
        assert!(shuffled_auc(&[0.0; 4], &all, &all, &mut rng, 1).is_err());
    }

    #[test]
    fn improvement_values() {
        assert!((improvement_factor(0.4650f64, 0.1150) - 4.0435).abs() < 1e-4);
        assert!((improvement_factor(0.1150f64, 0.0037) - 31.08).abs() < 1e-2);
        assert_eq!(improvement_factor(0.3f64, 0.3), 1.0);
        assert!(improvement_factor(0.3f64, 0.0).is_infinite());
    }

    #[test]
    fn bucket_edges() {
        assert_eq!(FaceBucket::for_face_count(99_999), FaceBucket::Under100k);
        assert_eq!(FaceBucket::for_face_count(100_000), FaceBucket::From100kTo200k);
        assert_eq!(FaceBucket::for_face_count(299_999), FaceBucket::From200kTo300k);
        assert_eq!(FaceBucket::for_face_count(600_000), FaceBucket::From600kTo900k);
        assert_eq!(FaceBucket::for_face_count(900_001), FaceBucket::Over900k);
    }
}
