//! Seeded synthetic texture sets with four staining-like classes.
//!
//! Each image is white noise smoothed by a class-specific box kernel, mapped
//! into a class-specific intensity band, and overlaid with dark disks whose
//! density grows with the class index.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::forest::Label;
use crate::seed;
use crate::texture::GrayImage;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassTexture {
    /// Box-kernel radius; the kernel is `(2r+1) x (2r+1)`.
    pub blur_radius: usize,
    /// Gray band the smoothed field is mapped into.
    pub band: (f64, f64),
    /// Random per-image shift of the band, uniform in `[-jitter, jitter]`.
    pub band_jitter: f64,
    /// Expected disks per 1000 pixels.
    pub blob_density: f64,
    /// Gray value at disk centers.
    pub blob_level: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub classes: Vec<ClassTexture>,
    pub per_class: usize,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(per_class: usize, seed: u64) -> Self {
        Self {
            classes: default_classes(),
            per_class,
            width: 96,
            height: 96,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.per_class == 0 {
            return Err(invalid("per-class count must be at least 1"));
        }
        if self.width < 8 || self.height < 8 {
            return Err(invalid(format!(
                "synthetic images must be at least 8x8, got {}x{}",
                self.width, self.height
            )));
        }
        if self.classes.is_empty() {
            return Err(invalid("no texture classes"));
        }
        Ok(())
    }
}

/// Four archetypes ordered by staining severity (label 0 = lightest).
pub fn default_classes() -> Vec<ClassTexture> {
    vec![
        ClassTexture {
            blur_radius: 1,
            band: (120.0, 220.0),
            band_jitter: 35.0,
            blob_density: 0.0,
            blob_level: 60.0,
        },
        ClassTexture {
            blur_radius: 2,
            band: (105.0, 205.0),
            band_jitter: 35.0,
            blob_density: 0.4,
            blob_level: 70.0,
        },
        ClassTexture {
            blur_radius: 2,
            band: (85.0, 190.0),
            band_jitter: 35.0,
            blob_density: 1.2,
            blob_level: 55.0,
        },
        ClassTexture {
            blur_radius: 3,
            band: (70.0, 175.0),
            band_jitter: 35.0,
            blob_density: 2.5,
            blob_level: 40.0,
        },
    ]
}

/// Separable box blur with clamped borders.
fn box_blur(field: &[f64], w: usize, h: usize, r: usize) -> Vec<f64> {
    if r == 0 {
        return field.to_vec();
    }
    let k = (2 * r + 1) as f64;
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        let row = &field[y * w..(y + 1) * w];
        for x in 0..w {
            let mut s = 0.0;
            for d in -(r as isize)..=(r as isize) {
                s += row[clamp(x as isize + d, w)];
            }
            tmp[y * w + x] = s / k;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut s = 0.0;
            for d in -(r as isize)..=(r as isize) {
                s += tmp[clamp(y as isize + d, h) * w + x];
            }
            out[y * w + x] = s / k;
        }
    }
    out
}

fn render(class: &ClassTexture, w: usize, h: usize, rng: &mut ChaCha8Rng) -> GrayImage {
    let noise: Vec<f64> = (0..w * h).map(|_| rng.random::<f64>()).collect();
    let smooth = box_blur(&noise, w, h, class.blur_radius);
    let n = smooth.len() as f64;
    let mean = smooth.iter().sum::<f64>() / n;
    let std = (smooth.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n)
        .sqrt()
        .max(1e-12);

    let shift = if class.band_jitter > 0.0 {
        rng.random_range(-class.band_jitter..=class.band_jitter)
    } else {
        0.0
    };
    let (lo, hi) = (class.band.0 + shift, class.band.1 + shift);
    let mut gray: Vec<f64> = smooth
        .iter()
        .map(|v| {
            let t = (0.5 + (v - mean) / (4.0 * std)).clamp(0.0, 1.0);
            lo + (hi - lo) * t
        })
        .collect();

    let expected = class.blob_density * (w * h) as f64 / 1000.0;
    let blobs = if expected > 0.0 {
        // Uniform jitter of +-50% around the expected count.
        rng.random_range(0.5 * expected..=1.5 * expected).round() as usize
    } else {
        0
    };
    for _ in 0..blobs {
        let cx = rng.random_range(0.0..w as f64);
        let cy = rng.random_range(0.0..h as f64);
        let radius = rng.random_range(2.0..5.0f64);
        let x0 = (cx - radius).floor().max(0.0) as usize;
        let x1 = ((cx + radius).ceil() as usize).min(w - 1);
        let y0 = (cy - radius).floor().max(0.0) as usize;
        let y1 = ((cy + radius).ceil() as usize).min(h - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let d = ((x as f64 + 0.5 - cx).powi(2) + (y as f64 + 0.5 - cy).powi(2)).sqrt();
                if d <= radius {
                    // Darkest at the center, blending into the background at the rim.
                    let a = 1.0 - 0.5 * d / radius;
                    let px = &mut gray[y * w + x];
                    *px = *px * (1.0 - a) + class.blob_level * a;
                }
            }
        }
    }
    let pixels = gray
        .iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u8)
        .collect();
    GrayImage::new(w, h, pixels).expect("dimensions checked by caller")
}

/// Generates `per_class` images for each class, grouped by class, with labels
/// `0..classes.len()`.
pub fn synth_generate(spec: &SynthSpec) -> Result<(Vec<GrayImage>, Vec<Label>)> {
    spec.validate()?;
    let mut images = Vec::with_capacity(spec.per_class * spec.classes.len());
    let mut labels = Vec::with_capacity(images.capacity());
    for (c, class) in spec.classes.iter().enumerate() {
        for i in 0..spec.per_class {
            let stream = (c as u64) << 32 | i as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(spec.seed, stream));
            images.push(render(class, spec.width, spec.height, &mut rng));
            labels.push(c as Label);
        }
    }
    Ok((images, labels))
}
