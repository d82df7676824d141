//! Gaze samples: the eye-tracker frames that drive ray sampling.

mod log;
mod synth;

pub use log::{parse_gaze_log, read_gaze_log, write_gaze_log, write_gaze_log_to};
pub use synth::{synth_turntable_session, FixationTarget, FixationWindow, SessionConfig, ORBIT_RADIUS};

use std::collections::HashMap;

use crate::geom::{Mat3, Vec3};
use crate::scalar::Scalar;

/// One eye-tracker frame.
#[derive(Debug, Clone, PartialEq)]
pub struct GazeSample<T> {
    /// Seconds since session start.
    pub t: T,
    pub subject: u32,
    /// 1-based frame index within the subject's time-sorted sequence.
    /// Derived on load, never serialized.
    pub frame: u32,
    /// Viewpoint in mesh coordinates.
    pub origin: Vec3<T>,
    /// `M_C`: rotation from the gaze-local frame (whose +z is the primary
    /// gaze axis) to world coordinates.
    pub gaze_to_world: Mat3<T>,
}

impl<T: Scalar> GazeSample<T> {
    /// Primary gaze axis in world space, `M_C · [0, 0, 1]ᵀ`.
    pub fn gaze_dir(&self) -> Vec3<T> {
        self.gaze_to_world.column(2)
    }
}

/// Sorts by `(subject, t)` (stable) and assigns per-subject 1-based frame
/// indices.
pub fn sort_and_number<T: Scalar>(samples: &mut [GazeSample<T>]) {
    samples.sort_by(|a, b| {
        a.subject
            .cmp(&b.subject)
            .then(a.t.partial_cmp(&b.t).unwrap_or(std::cmp::Ordering::Equal))
    });
    let mut counters: HashMap<u32, u32> = HashMap::new();
    for s in samples.iter_mut() {
        let c = counters.entry(s.subject).or_insert(0);
        *c += 1;
        s.frame = *c;
    }
}

/// Splits a time-sorted session into odd and even frames per subject
/// (1-based positions: 1, 3, 5, … are odd). Order is preserved in both halves.
pub fn split_parity<T: Scalar>(samples: &[GazeSample<T>]) -> (Vec<GazeSample<T>>, Vec<GazeSample<T>>) {
    let mut counters: HashMap<u32, u32> = HashMap::new();
    let mut odd = Vec::with_capacity(samples.len() / 2 + 1);
    let mut even = Vec::with_capacity(samples.len() / 2);
    for s in samples {
        let c = counters.entry(s.subject).or_insert(0);
        *c += 1;
        if *c % 2 == 1 {
            odd.push(s.clone());
        } else {
            even.push(s.clone());
        }
    }
    (odd, even)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(subject: u32, t: f64) -> GazeSample<f64> {
        GazeSample {
            t,
            subject,
            frame: 0,
            origin: Vec3::zero(),
            gaze_to_world: Mat3::identity(),
        }
    }

    #[test]
    fn parity_counts() {
        let four: Vec<_> = (0..4).map(|i| sample(0, i as f64)).collect();
        let (o, e) = split_parity(&four);
        assert_eq!((o.len(), e.len()), (2, 2));
        assert_eq!(o[1].t, 2.0);

        let (o, e) = split_parity(&four[..1]);
        assert_eq!((o.len(), e.len()), (1, 0));

        let many: Vec<_> = (0..2250).map(|i| sample(0, i as f64 / 90.0)).collect();
        let (o, e) = split_parity(&many);
        assert_eq!((o.len(), e.len()), (1125, 1125));
    }

    #[test]
    fn parity_is_per_subject() {
        let mut s = vec![sample(0, 0.0), sample(0, 1.0), sample(0, 2.0), sample(1, 0.0), sample(1, 1.0)];
        sort_and_number(&mut s);
        let (o, e) = split_parity(&s);
        assert_eq!(o.iter().map(|x| (x.subject, x.frame)).collect::<Vec<_>>(), vec![(0, 1), (0, 3), (1, 1)]);
        assert_eq!(e.iter().map(|x| (x.subject, x.frame)).collect::<Vec<_>>(), vec![(0, 2), (1, 2)]);
    }
}
