//! The basic image manipulations and their serializable descriptions.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::clahe::clahe;
use super::raster::{FloatPlanes, RasterImage};
use super::resample::{remap, Border};
use crate::error::{Error, Result};

/// One augmentation step. Every variant preserves image dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum TransformSpec {
    #[serde(rename = "hflip")]
    HFlip,
    /// Black rectangle, clipped to the image.
    Occlusion { x: u32, y: u32, w: u32, h: u32 },
    /// Brightness, then contrast, then saturation; 1.0 is neutral for each.
    ColorJitter {
        brightness: f64,
        contrast: f64,
        saturation: f64,
    },
    Clahe { clip_limit: f64, tiles: u32 },
    GaussianBlur { sigma: f64 },
    /// Box-filter down by `factor`, bilinear back up to the original size.
    Downscale { factor: f64 },
    /// Additive Gaussian noise, `std` in 8-bit units.
    GaussNoise { std: f64 },
    /// Radial distortion about the image center.
    OpticalDistortion { k: f64 },
    /// Interior nodes of a `cells` x `cells` grid moved by up to `limit` of a cell.
    GridDistortion { cells: u32, limit: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::usage(format!("{name} must be positive and finite, got {v}")))
    }
}

impl TransformSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TransformSpec::HFlip => Ok(()),
            TransformSpec::Occlusion { w, h, .. } => {
                if w == 0 || h == 0 {
                    Err(Error::usage("occlusion rectangle must be non-empty"))
                } else {
                    Ok(())
                }
            }
            TransformSpec::ColorJitter {
                brightness,
                contrast,
                saturation,
            } => {
                positive("brightness", brightness)?;
                positive("contrast", contrast)?;
                positive("saturation", saturation)
            }
            TransformSpec::Clahe { clip_limit, tiles } => {
                positive("clip limit", clip_limit)?;
                if tiles == 0 {
                    return Err(Error::usage("clahe needs at least one tile"));
                }
                Ok(())
            }
            TransformSpec::GaussianBlur { sigma } => positive("blur sigma", sigma),
            TransformSpec::Downscale { factor } => {
                if factor > 0.0 && factor < 1.0 {
                    Ok(())
                } else {
                    Err(Error::usage(format!("downscale factor must lie in (0, 1), got {factor}")))
                }
            }
            TransformSpec::GaussNoise { std } => {
                if std.is_finite() && std >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::usage(format!("noise std must be non-negative, got {std}")))
                }
            }
            TransformSpec::OpticalDistortion { k } => {
                if k.is_finite() {
                    Ok(())
                } else {
                    Err(Error::usage("distortion coefficient must be finite"))
                }
            }
            TransformSpec::GridDistortion { cells, limit } => {
                if cells < 2 {
                    return Err(Error::usage("grid distortion needs at least 2 cells"));
                }
                if !(0.0..1.0).contains(&limit) {
                    return Err(Error::usage(format!("grid limit must lie in [0, 1), got {limit}")));
                }
                Ok(())
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TransformSpec::HFlip => "hflip",
            TransformSpec::Occlusion { .. } => "occlusion",
            TransformSpec::ColorJitter { .. } => "color_jitter",
            TransformSpec::Clahe { .. } => "clahe",
            TransformSpec::GaussianBlur { .. } => "gaussian_blur",
            TransformSpec::Downscale { .. } => "downscale",
            TransformSpec::GaussNoise { .. } => "gauss_noise",
            TransformSpec::OpticalDistortion { .. } => "optical_distortion",
            TransformSpec::GridDistortion { .. } => "grid_distortion",
        }
    }
}

/// Applies one transform. Stochastic variants (noise, grid displacement) draw from `rng`.
pub fn apply<R: Rng + ?Sized>(img: &RasterImage, t: &TransformSpec, rng: &mut R) -> RasterImage {
    match *t {
        TransformSpec::HFlip => hflip(img),
        TransformSpec::Occlusion { x, y, w, h } => occlude(img, x, y, w, h),
        TransformSpec::ColorJitter {
            brightness,
            contrast,
            saturation,
        } => color_jitter(img, brightness, contrast, saturation),
        TransformSpec::Clahe { clip_limit, tiles } => clahe(img, clip_limit, tiles),
        TransformSpec::GaussianBlur { sigma } => gaussian_blur(img, sigma),
        TransformSpec::Downscale { factor } => downscale(img, factor),
        TransformSpec::GaussNoise { std } => gauss_noise(img, std, rng),
        TransformSpec::OpticalDistortion { k } => optical_distortion(img, k),
        TransformSpec::GridDistortion { cells, limit } => grid_distortion(img, cells, limit, rng),
    }
}

pub fn apply_chain<R: Rng + ?Sized>(img: &RasterImage, chain: &[TransformSpec], rng: &mut R) -> RasterImage {
    chain.iter().fold(img.clone(), |acc, t| apply(&acc, t, rng))
}

pub fn hflip(img: &RasterImage) -> RasterImage {
    let w = img.width() as usize;
    let mut out = img.clone();
    let src = img.data();
    for (dst_row, src_row) in out.data_mut().chunks_exact_mut(w * 3).zip(src.chunks_exact(w * 3)) {
        for x in 0..w {
            dst_row[x * 3..x * 3 + 3].copy_from_slice(&src_row[(w - 1 - x) * 3..(w - x) * 3]);
        }
    }
    out
}

pub fn occlude(img: &RasterImage, x: u32, y: u32, w: u32, h: u32) -> RasterImage {
    let mut out = img.clone();
    let x1 = x.saturating_add(w).min(img.width());
    let y1 = y.saturating_add(h).min(img.height());
    for yy in y.min(y1)..y1 {
        for xx in x.min(x1)..x1 {
            out.set_pixel(xx, yy, [0, 0, 0]);
        }
    }
    out
}

pub fn color_jitter(img: &RasterImage, brightness: f64, contrast: f64, saturation: f64) -> RasterImage {
    let mut p = FloatPlanes::from_image(img);
    let n = p.width * p.height;
    let (b, c, s) = (brightness as f32, contrast as f32, saturation as f32);

    for plane in &mut p.planes {
        for v in plane.iter_mut() {
            *v = (*v * b).clamp(0.0, 255.0);
        }
    }
    for plane in &mut p.planes {
        let mean = (plane.iter().map(|&v| f64::from(v)).sum::<f64>() / n as f64) as f32;
        for v in plane.iter_mut() {
            *v = (mean + c * (*v - mean)).clamp(0.0, 255.0);
        }
    }
    for i in 0..n {
        let luma = 0.299 * p.planes[0][i] + 0.587 * p.planes[1][i] + 0.114 * p.planes[2][i];
        for plane in &mut p.planes {
            plane[i] = (luma + s * (plane[i] - luma)).clamp(0.0, 255.0);
        }
    }
    p.to_image()
}

fn gaussian_kernel(sigma: f64) -> Vec<f32> {
    let radius = (3.0 * sigma).ceil().max(1.0) as i64;
    let raw: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| (v / total) as f32).collect()
}

/// Separable Gaussian blur with edge replication.
pub fn gaussian_blur(img: &RasterImage, sigma: f64) -> RasterImage {
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as i64;
    let mut p = FloatPlanes::from_image(img);
    let (w, h) = (p.width as i64, p.height as i64);
    let mut tmp = vec![0.0f32; (w * h) as usize];
    for plane in &mut p.planes {
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for (k, kv) in kernel.iter().enumerate() {
                    let xs = (x + k as i64 - r).clamp(0, w - 1);
                    acc += kv * plane[(y * w + xs) as usize];
                }
                tmp[(y * w + x) as usize] = acc;
            }
        }
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for (k, kv) in kernel.iter().enumerate() {
                    let ys = (y + k as i64 - r).clamp(0, h - 1);
                    acc += kv * tmp[(ys * w + x) as usize];
                }
                plane[(y * w + x) as usize] = acc;
            }
        }
    }
    p.to_image()
}

/// Box-filter reduction by `factor` followed by bilinear enlargement back to the input size.
pub fn downscale(img: &RasterImage, factor: f64) -> RasterImage {
    let src = FloatPlanes::from_image(img);
    let (w, h) = (src.width, src.height);
    let dw = ((w as f64 * factor).round() as usize).clamp(1, w);
    let dh = ((h as f64 * factor).round() as usize).clamp(1, h);

    let span = |d: usize, len: usize, dlen: usize| -> (usize, usize) {
        let a = d * len / dlen;
        let b = ((d + 1) * len / dlen).max(a + 1);
        (a, b)
    };
    let mut small = FloatPlanes {
        width: dw,
        height: dh,
        planes: [vec![0.0; dw * dh], vec![0.0; dw * dh], vec![0.0; dw * dh]],
    };
    for dy in 0..dh {
        let (y0, y1) = span(dy, h, dh);
        for dx in 0..dw {
            let (x0, x1) = span(dx, w, dw);
            let count = ((y1 - y0) * (x1 - x0)) as f32;
            for c in 0..3 {
                let mut acc = 0.0f32;
                for y in y0..y1 {
                    for x in x0..x1 {
                        acc += src.planes[c][y * w + x];
                    }
                }
                small.planes[c][dy * dw + dx] = acc / count;
            }
        }
    }
    let sx = dw as f64 / w as f64;
    let sy = dh as f64 / h as f64;
    remap(&small, w, h, Border::Replicate, |x, y| {
        ((x as f64 + 0.5) * sx - 0.5, (y as f64 + 0.5) * sy - 0.5)
    })
    .to_image()
}

pub fn gauss_noise<R: Rng + ?Sized>(img: &RasterImage, std: f64, rng: &mut R) -> RasterImage {
    let mut out = img.clone();
    for s in out.data_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *s = (f64::from(*s) + std * z).round().clamp(0.0, 255.0) as u8;
    }
    out
}

/// Radial model: the output pixel at `p` reads the source at `p + (p - c) * k * r^2`,
/// with `r` measured from the center `c` in units of the larger half-extent.
pub fn optical_distortion(img: &RasterImage, k: f64) -> RasterImage {
    let src = FloatPlanes::from_image(img);
    let (w, h) = (src.width, src.height);
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    let scale = cx.max(cy).max(1.0);
    remap(&src, w, h, Border::Replicate, |x, y| {
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        let r2 = (dx * dx + dy * dy) / (scale * scale);
        let f = k * r2;
        (x as f64 + dx * f, y as f64 + dy * f)
    })
    .to_image()
}

/// Piecewise-bilinear warp driven by a `(cells + 1)^2` node grid whose interior
/// nodes are displaced uniformly within `limit` of a cell in each axis.
pub fn grid_distortion<R: Rng + ?Sized>(img: &RasterImage, cells: u32, limit: f64, rng: &mut R) -> RasterImage {
    let src = FloatPlanes::from_image(img);
    let (w, h) = (src.width, src.height);
    let n = cells as usize;
    let cell_w = w as f64 / n as f64;
    let cell_h = h as f64 / n as f64;
    let nodes = n + 1;
    let mut disp_x = vec![0.0f64; nodes * nodes];
    let mut disp_y = vec![0.0f64; nodes * nodes];
    for j in 1..n {
        for i in 1..n {
            let ux: f64 = rng.random::<f64>() * 2.0 - 1.0;
            let uy: f64 = rng.random::<f64>() * 2.0 - 1.0;
            disp_x[j * nodes + i] = ux * limit * cell_w;
            disp_y[j * nodes + i] = uy * limit * cell_h;
        }
    }
    let locate = |p: usize, cell: f64| -> (usize, f64) {
        let g = p as f64 / cell;
        let i = (g.floor() as usize).min(n - 1);
        (i, g - i as f64)
    };
    remap(&src, w, h, Border::Replicate, |x, y| {
        let (i, tx) = locate(x, cell_w);
        let (j, ty) = locate(y, cell_h);
        let blend = |d: &[f64]| {
            let a = d[j * nodes + i];
            let b = d[j * nodes + i + 1];
            let c = d[(j + 1) * nodes + i];
            let e = d[(j + 1) * nodes + i + 1];
            (1.0 - ty) * ((1.0 - tx) * a + tx * b) + ty * ((1.0 - tx) * c + tx * e)
        };
        (x as f64 + blend(&disp_x), y as f64 + blend(&disp_y))
    })
    .to_image()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngKey;

    fn pattern(w: u32, h: u32) -> RasterImage {
        RasterImage::from_fn(w, h, |x, y| {
            [(x * 7 + y * 3) as u8, (x * x + y) as u8, (255 - x * 5 - y) as u8]
        })
    }

    fn rng() -> crate::rng::StreamRng {
        RngKey::root(3).rng()
    }

    #[test]
    fn hflip_is_an_involution() {
        let img = pattern(13, 9);
        let once = hflip(&img);
        assert_ne!(once, img);
        assert_eq!(once.pixel(0, 4), img.pixel(12, 4));
        assert_eq!(hflip(&once), img);
    }

    #[test]
    fn full_occlusion_is_black_and_idempotent() {
        let img = pattern(10, 8);
        let all = occlude(&img, 0, 0, 10, 8);
        assert!(all.data().iter().all(|&v| v == 0));
        let part = occlude(&img, 3, 2, 50, 3);
        assert_eq!(part.pixel(9, 3), [0, 0, 0]);
        assert_eq!(part.pixel(2, 3), img.pixel(2, 3));
        assert_eq!(occlude(&part, 3, 2, 50, 3), part);
        // fully outside: nothing happens
        assert_eq!(occlude(&img, 20, 20, 5, 5), img);
    }

    #[test]
    fn neutral_parameters_are_identity() {
        let img = pattern(31, 23);
        let mut r = rng();
        assert_eq!(color_jitter(&img, 1.0, 1.0, 1.0), img);
        assert_eq!(optical_distortion(&img, 0.0), img);
        assert_eq!(grid_distortion(&img, 4, 0.0, &mut r), img);
        assert_eq!(gauss_noise(&img, 0.0, &mut r), img);
    }

    #[test]
    fn brightness_scales() {
        let img = RasterImage::filled(4, 4, [100, 50, 200]);
        let out = color_jitter(&img, 1.5, 1.0, 1.0);
        assert_eq!(out.pixel(1, 1), [150, 75, 255]);
        let gray = color_jitter(&img, 1.0, 1.0, 0.0);
        let p = gray.pixel(0, 0);
        assert!(p[0] == p[1] && p[1] == p[2]);
    }

    #[test]
    fn blur_keeps_constant_and_smooths_edges() {
        let flat = RasterImage::filled(12, 12, [90, 90, 90]);
        assert_eq!(gaussian_blur(&flat, 1.5), flat);
        let edge = RasterImage::from_fn(20, 4, |x, _| if x < 10 { [0; 3] } else { [255; 3] });
        let out = gaussian_blur(&edge, 1.0);
        let v = out.pixel(10, 2)[0];
        assert!(v > 100 && v < 255, "{v}");
    }

    #[test]
    fn downscale_keeps_dims_and_constant() {
        let flat = RasterImage::filled(30, 20, [7, 8, 9]);
        assert_eq!(downscale(&flat, 0.25), flat);
        let out = downscale(&pattern(30, 20), 0.5);
        assert_eq!(out.dims(), (30, 20));
    }

    #[test]
    fn distortions_move_pixels() {
        let img = pattern(40, 40);
        assert_ne!(optical_distortion(&img, 0.3), img);
        assert_ne!(grid_distortion(&img, 4, 0.4, &mut rng()), img);
    }

    #[test]
    fn every_transform_preserves_dims() {
        let img = pattern(37, 21);
        let specs = [
            TransformSpec::HFlip,
            TransformSpec::Occlusion { x: 30, y: 15, w: 20, h: 20 },
            TransformSpec::ColorJitter { brightness: 1.2, contrast: 0.8, saturation: 1.3 },
            TransformSpec::Clahe { clip_limit: 2.0, tiles: 8 },
            TransformSpec::GaussianBlur { sigma: 1.2 },
            TransformSpec::Downscale { factor: 0.3 },
            TransformSpec::GaussNoise { std: 12.0 },
            TransformSpec::OpticalDistortion { k: -0.2 },
            TransformSpec::GridDistortion { cells: 5, limit: 0.3 },
        ];
        let mut r = rng();
        for s in &specs {
            s.validate().unwrap();
            assert_eq!(apply(&img, s, &mut r).dims(), (37, 21), "{}", s.name());
        }
        assert_eq!(apply_chain(&img, &specs, &mut r).dims(), (37, 21));
    }

    #[test]
    fn validation_rejects_out_of_range() {
        assert!(TransformSpec::Downscale { factor: 1.0 }.validate().is_err());
        assert!(TransformSpec::GridDistortion { cells: 1, limit: 0.1 }.validate().is_err());
        assert!(TransformSpec::GridDistortion { cells: 4, limit: 1.0 }.validate().is_err());
        assert!(TransformSpec::GaussianBlur { sigma: 0.0 }.validate().is_err());
        assert!(TransformSpec::Occlusion { x: 0, y: 0, w: 0, h: 3 }.validate().is_err());
    }

    #[test]
    fn gauss_noise_mean_shift_is_small() {
        // mean of 10^4 zero-mean draws with std 10 has standard error 0.1;
        // a mid-gray image keeps clamping out of the picture
        let img = RasterImage::filled(100, 100, [128; 3]);
        for seed in 0..20 {
            let mut r = RngKey::root(seed).rng();
            let out = gauss_noise(&img, 10.0, &mut r);
            for c in 0..3 {
                let mean: f64 = out.data().iter().skip(c).step_by(3).map(|&v| f64::from(v)).sum::<f64>() / 1e4;
                assert!((mean - 128.0).abs() < 1.0, "seed {seed} channel {c}: {mean}");
            }
        }
    }

    #[test]
    fn serde_shape() {
        let s = TransformSpec::GridDistortion { cells: 4, limit: 0.25 };
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"op":"grid_distortion","cells":4,"limit":0.25}"#);
        assert_eq!(serde_json::from_str::<TransformSpec>(&json).unwrap(), s);
        assert_eq!(serde_json::to_string(&TransformSpec::HFlip).unwrap(), r#"{"op":"hflip"}"#);
    }
}
