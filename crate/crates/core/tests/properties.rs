mod common;

use mesh_saliency::field::{FaceField, Stage, VertexField};
use mesh_saliency::hcd::{diffuse, finalize, laplacian_smooth, DiffusionConfig, SmoothConfig};
use mesh_saliency::mesh::{shapes, AdjacencyIndex, TriangleMesh};
use mesh_saliency::metrics::{kl_divergence, pearson_cc, shuffled_auc, FixationSet, KL_EPS};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

fn sphere() -> &'static (TriangleMesh<f64>, AdjacencyIndex<f64>) {
    static S: OnceLock<(TriangleMesh<f64>, AdjacencyIndex<f64>)> = OnceLock::new();
    S.get_or_init(|| {
        let (m, _) = shapes::icosphere::<f64>(4).normalize_unit_diag().unwrap();
        let m = m.compute_face_normals();
        let a = AdjacencyIndex::build(&m, 10_000, 0);
        (m, a)
    })
}

fn vertex_field() -> impl Strategy<Value = Vec<f64>> {
    let n = sphere().0.vertex_count();
    prop::collection::vec(-10.0f64..10.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn smoothing_respects_max_principle(values in vertex_field(), k in 0usize..5, lambda in 0.0f64..=1.0) {
        let (_, adj) = sphere();
        let f = VertexField::new(values.clone(), Stage::Mapped);
        let s = laplacian_smooth(&f, adj, lambda, k);
        let (lo, hi) = f.min_max().unwrap();
        for v in &s.values {
            prop_assert!(*v >= lo - 1e-12 && *v <= hi + 1e-12);
        }
        if k == 0 {
            prop_assert_eq!(&s.values, &values);
        }
    }

    #[test]
    fn finalize_lands_in_unit_interval(values in vertex_field(), gamma in 0.1f64..3.0) {
        let f = VertexField::new(values, Stage::Smoothed);
        let cfg = SmoothConfig { gamma, ..Default::default() };
        let (n, rgb) = finalize(&f, &cfg).unwrap();
        prop_assert_eq!(rgb.len(), n.len());
        let (lo, hi) = n.min_max().unwrap();
        prop_assert_eq!(lo, 0.0);
        prop_assert_eq!(hi, 1.0);
    }

    #[test]
    fn cc_is_affine_invariant(
        a in prop::collection::vec(-5.0f64..5.0, 3..60),
        scale in 0.01f64..100.0,
        shift in -50.0f64..50.0,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b: Vec<f64> = a.iter().map(|x| x * 0.5 + rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
        let t: Vec<f64> = a.iter().map(|x| x * scale + shift).collect();
        if let (Ok(r1), Ok(r2)) = (pearson_cc(&a, &b), pearson_cc(&t, &b)) {
            prop_assert!((r1 - r2).abs() < 1e-9);
            prop_assert!((-1.0..=1.0).contains(&r1));
        }
    }

    #[test]
    fn kl_is_nonnegative(
        p in prop::collection::vec(0.0f64..1.0, 2..50),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q: Vec<f64> = p.iter().map(|_| rand::Rng::random_range(&mut rng, 0.0..1.0)).collect();
        if let Ok(kl) = kl_divergence(&p, &q, KL_EPS) {
            prop_assert!(kl >= 0.0);
        }
        if let Ok(kl) = kl_divergence(&p, &p, KL_EPS) {
            prop_assert!(kl.abs() < 1e-9);
        }
    }

    #[test]
    fn metrics_ignore_a_common_permutation(
        sal in prop::collection::vec(0.0f64..1.0, 20..80),
        seed in any::<u64>(),
    ) {
        let n = sal.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let density: Vec<f64> = (0..n).map(|i| if i % 3 == 0 { rand::Rng::random_range(&mut rng, 1.0..4.0) } else { 0.0 }).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
        let ps: Vec<f64> = perm.iter().map(|&i| sal[i]).collect();
        let pd: Vec<f64> = perm.iter().map(|&i| density[i]).collect();
        let cc = pearson_cc(&sal, &density).unwrap();
        prop_assert!((cc - pearson_cc(&ps, &pd).unwrap()).abs() < 1e-9);
        let kl = kl_divergence(&density, &sal, KL_EPS).unwrap();
        prop_assert!((kl - kl_divergence(&pd, &ps, KL_EPS).unwrap()).abs() < 1e-9);
        // With every non-positive id as a negative, the AUC is exact and
        // independent of the draw order.
        let pos = FixationSet::from_density(&density, "p");
        let ppos = FixationSet::from_density(&pd, "p");
        let exact = |s: &[f64], p: &FixationSet| {
            let negs: Vec<f64> = (0..n).filter(|i| !p.ids.contains(&(*i as u32))).map(|i| s[i]).collect();
            let mut score = 0.0;
            for &id in &p.ids {
                for &v in &negs {
                    let x = s[id as usize];
                    score += if x > v { 1.0 } else if x == v { 0.5 } else { 0.0 };
                }
            }
            score / (p.len() * negs.len()) as f64
        };
        prop_assert!((exact(&sal, &pos) - exact(&ps, &ppos)).abs() < 1e-12);
        let a = shuffled_auc(&sal, &pos, &FixationSet::uniform(n), &mut ChaCha8Rng::seed_from_u64(1), 10).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
    }
}

#[test]
fn kernel_decreases_with_geodesic_distance() {
    let (m, adj) = sphere();
    let mut raw = vec![0.0; m.face_count()];
    raw[0] = 1.0;
    let d = diffuse(&FaceField::new(raw, Stage::Raw), m, adj, &DiffusionConfig::default()).unwrap();
    let dist = mesh_saliency::hcd::truncated_geodesic_field(m, adj, 0, 0.06);
    for &(fa, da) in &dist {
        for &(fb, db) in &dist {
            if da < db {
                assert!(d.values[fa as usize] > d.values[fb as usize]);
            }
        }
    }
    assert!(d.values.iter().all(|&v| v <= 1.0 && v >= 0.0));
}

#[test]
fn top_decile_positives_beat_constant_map() {
    let (m, _) = sphere();
    let n = m.vertex_count();
    // Smooth synthetic saliency: height along one axis.
    let sal: Vec<f64> = m.vertices.iter().map(|v| v.y).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sal[b].partial_cmp(&sal[a]).unwrap());
    let top = FixationSet::from_ids(order[..n / 10].iter().map(|&i| i as u32).collect(), "top");
    let pool = FixationSet::uniform(n);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let good = shuffled_auc(&sal, &top, &pool, &mut rng, 10).unwrap();
    let flat = shuffled_auc(&vec![0.5; n], &top, &pool, &mut rng, 10).unwrap();
    assert!(good - flat >= 0.3, "{good} vs {flat}");
}
