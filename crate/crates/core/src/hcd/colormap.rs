use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const VIRIDIS: &str = include_str!("../../data/viridis.csv");

/// Piecewise-linear colormap over evenly spaced RGB stops.
#[derive(Debug, Clone)]
pub struct Colormap {
    stops: Vec<[f64; 3]>,
}

impl Colormap {
    pub fn by_name(name: &str) -> Result<&'static Colormap> {
        static VIRIDIS_MAP: OnceLock<Colormap> = OnceLock::new();
        static GRAY_MAP: OnceLock<Colormap> = OnceLock::new();
        match name {
            "viridis" => Ok(VIRIDIS_MAP.get_or_init(|| Colormap::parse(VIRIDIS))),
            "gray" | "grey" => Ok(GRAY_MAP.get_or_init(|| Colormap {
                stops: vec![[0.0; 3], [1.0; 3]],
            })),
            other => Err(Error::Config(format!("unknown colormap {other:?}"))),
        }
    }

    fn parse(text: &str) -> Colormap {
        let stops = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                let mut it = l.split(',').map(|c| c.trim().parse::<f64>().expect("bundled colormap"));
                [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()]
            })
            .collect();
        Colormap { stops }
    }

    pub fn len(&self) -> usize {
        self.stops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stops.is_empty()
    }

    pub fn stop(&self, i: usize) -> [f64; 3] {
        self.stops[i]
    }

    /// Color for `s`, clamped to `[0, 1]`.
    pub fn rgb<T: Scalar>(&self, s: T) -> [u8; 3] {
        let s = s.to_f64_lossless();
        let s = if s.is_nan() { 0.0 } else { s.clamp(0.0, 1.0) };
        let last = self.stops.len() - 1;
        let pos = s * last as f64;
        let i = (pos.floor() as usize).min(last - 1);
        let frac = pos - i as f64;
        let (a, b) = (self.stops[i], self.stops[i + 1]);
        let mut out = [0u8; 3];
        for k in 0..3 {
            let c = a[k] * (1.0 - frac) + b[k] * frac;
            out[k] = (c * 255.0).round().clamp(0.0, 255.0) as u8;
        }
        out
    }
}
