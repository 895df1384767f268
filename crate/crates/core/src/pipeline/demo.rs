//! Synthetic mammogram-like images: a bright blob on textured background,
//! with outline irregularity, margin blur and inner texture tied to the
//! class, so the whole pipeline can run without external data.

use std::f64::consts::TAU;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::manifest::{DatasetManifest, ManifestEntry};
use crate::error::{Error, Result};
use crate::fsutil::write_png;
use crate::imaging::{BiRads, GrayImage, Pixel, View};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DemoParams {
    pub count: usize,
    pub image_side: usize,
    pub roi_radius: usize,
    pub spacing_mm: f64,
    pub seed: u64,
}

impl Default for DemoParams {
    fn default() -> Self {
        Self { count: 40, image_side: 96, roi_radius: 24, spacing_mm: 0.1, seed: 0 }
    }
}

struct Look {
    aspect: f64,
    lobes: f64,
    lobe_depth: f64,
    spikes: f64,
    spike_depth: f64,
    blur: f64,
    grain: f64,
}

fn look(class: BiRads) -> Look {
    match class {
        BiRads::B2 => Look { aspect: 1.0, lobes: 3.0, lobe_depth: 0.03, spikes: 0.0, spike_depth: 0.0, blur: 0.6, grain: 4.0 },
        BiRads::B3 => Look { aspect: 1.35, lobes: 3.0, lobe_depth: 0.05, spikes: 0.0, spike_depth: 0.0, blur: 1.2, grain: 6.0 },
        BiRads::B4 => Look { aspect: 1.15, lobes: 4.0, lobe_depth: 0.18, spikes: 0.0, spike_depth: 0.0, blur: 2.0, grain: 9.0 },
        BiRads::B5 => Look { aspect: 1.1, lobes: 5.0, lobe_depth: 0.08, spikes: 9.0, spike_depth: 0.35, blur: 2.8, grain: 13.0 },
    }
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Renders one case. The mass is centered within a few pixels of `center`.
pub fn render_case(class: BiRads, side: usize, center: Pixel, rng: &mut impl Rng) -> GrayImage {
    let lk = look(class);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let base_r = rng.random_range(9.0..13.0);
    let tilt = rng.random_range(0.0..TAU);
    let phase = rng.random_range(0.0..TAU);
    let spike_phase = rng.random_range(0.0..TAU);
    let (cy, cx) = (center.row as f64, center.col as f64);
    let (fy, fx) = (rng.random_range(0.05..0.12), rng.random_range(0.05..0.12));
    let mut pixels = Vec::with_capacity(side * side);
    for r in 0..side {
        for c in 0..side {
            let (dy, dx) = (r as f64 - cy, c as f64 - cx);
            let (s, co) = tilt.sin_cos();
            let (u, v) = (dx * co + dy * s, (-dx * s + dy * co) * lk.aspect);
            let rho = u.hypot(v);
            let theta = v.atan2(u);
            let mut edge = base_r * (1.0 + lk.lobe_depth * (lk.lobes * theta + phase).sin());
            if lk.spikes > 0.0 {
                edge *= 1.0 + lk.spike_depth * (lk.spikes * theta + spike_phase).sin().max(0.0).powi(4);
            }
            let inside = logistic((edge - rho) / lk.blur);
            let background = 55.0 + 12.0 * (fy * r as f64).sin() * (fx * c as f64).cos()
                + 5.0 * noise.sample(rng);
            let mass = 175.0 + lk.grain * noise.sample(rng);
            let v = background * (1.0 - inside) + mass * inside;
            pixels.push(v.round().clamp(0.0, 255.0) as u16);
        }
    }
    GrayImage::new(side, side, 8, 1.0, pixels).expect("valid synthetic image")
}

/// Writes `images/case_NNN.png` and `manifest.jsonl` under `out_dir`.
/// Classes cycle B-2, B-3, B-4, B-5; splits are left to the seeded default.
pub fn generate_demo(out_dir: &Path, params: &DemoParams) -> Result<DatasetManifest> {
    if params.count == 0 {
        return Err(Error::InvalidInput("demo count must be >= 1".into()));
    }
    if params.image_side < 2 * params.roi_radius + 1 || params.roi_radius < 8 {
        return Err(Error::InvalidInput("image_side must hold a ROI of radius >= 8".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut entries = Vec::with_capacity(params.count);
    for i in 0..params.count {
        let class = BiRads::ALL[i % 4];
        let half = params.image_side / 2;
        let jitter = (params.image_side / 8) as i64;
        let center = Pixel::new(
            (half as i64 + rng.random_range(-jitter..=jitter)) as usize,
            (half as i64 + rng.random_range(-jitter..=jitter)) as usize,
        );
        let img = render_case(class, params.image_side, center, &mut rng);
        let name = format!("images/case_{i:03}.png");
        write_png(&out_dir.join(&name), &img)?;
        let age = (38.0 + 7.0 * class.index() as f64 + rng.random_range(-6.0..6.0)).round();
        entries.push(ManifestEntry {
            case_id: format!("case_{i:03}"),
            image: name.into(),
            center,
            radius: params.roi_radius,
            spacing_mm: params.spacing_mm,
            patient_age: age,
            view: if i % 2 == 0 { View::Cc } else { View::Mlo },
            birads_label: class,
            split: None,
        });
    }
    let manifest = DatasetManifest::new(entries, out_dir)?;
    manifest.save(&out_dir.join("manifest.jsonl"))?;
    Ok(manifest)
}
