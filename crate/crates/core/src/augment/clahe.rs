//! Contrast-limited adaptive histogram equalization on the luma channel.

use super::raster::{to_u8, RasterImage};

const BINS: usize = 256;

/// Clips every bin at `limit` and spreads the clipped mass back over all bins.
/// The total count is preserved exactly.
pub fn clip_histogram(hist: &mut [u32; BINS], limit: u32) {
    let mut excess: u32 = 0;
    for h in hist.iter_mut() {
        if *h > limit {
            excess += *h - limit;
            *h = limit;
        }
    }
    let batch = excess / BINS as u32;
    let mut residual = excess % BINS as u32;
    for h in hist.iter_mut() {
        *h += batch;
    }
    if let Some(step) = (BINS as u32).checked_div(residual) {
        let step = step.max(1) as usize;
        let mut i = 0;
        while residual > 0 && i < BINS {
            hist[i] += 1;
            residual -= 1;
            i += step;
        }
    }
}

/// Mirrors an index past either edge without repeating the edge sample.
fn reflect101(i: usize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len - 1);
    let r = i % period;
    if r < len {
        r
    } else {
        period - r
    }
}

fn luma(px: &[u8]) -> f32 {
    0.299 * f32::from(px[0]) + 0.587 * f32::from(px[1]) + 0.114 * f32::from(px[2])
}

/// Equalizes luma tile by tile with clipped histograms and blends the tile
/// mappings bilinearly. Chroma is kept: every channel is shifted by the luma change.
///
/// All tiles have the same size; when the image does not divide evenly the
/// last row and column of tiles read mirrored pixels past the border.
pub fn clahe(img: &RasterImage, clip_limit: f64, tiles: u32) -> RasterImage {
    let w = img.width() as usize;
    let h = img.height() as usize;
    let nx = (tiles as usize).clamp(1, w);
    let ny = (tiles as usize).clamp(1, h);
    let tw = w.div_ceil(nx);
    let th = h.div_ceil(ny);
    let area = (tw * th) as u32;
    let limit = ((clip_limit * f64::from(area) / BINS as f64) as u32).max(1);
    let scale = 255.0 / area as f32;

    let lum: Vec<f32> = img.data().chunks_exact(3).map(luma).collect();
    let lq: Vec<u8> = lum.iter().map(|&v| to_u8(v)).collect();

    let mut luts = vec![[0f32; BINS]; nx * ny];
    for ty in 0..ny {
        for tx in 0..nx {
            let mut hist = [0u32; BINS];
            for y in ty * th..(ty + 1) * th {
                let row = reflect101(y, h) * w;
                for x in tx * tw..(tx + 1) * tw {
                    hist[lq[row + reflect101(x, w)] as usize] += 1;
                }
            }
            clip_histogram(&mut hist, limit);
            let lut = &mut luts[ty * nx + tx];
            let mut cdf = 0u32;
            for (i, count) in hist.iter().enumerate() {
                cdf += count;
                lut[i] = (cdf as f32 * scale).round();
            }
        }
    }

    // Position of a pixel in tile-center coordinates, split into two tiles and a weight.
    let locate = |p: usize, size: usize, n: usize| -> (usize, usize, f32) {
        let g = (p as f32 + 0.5) / size as f32 - 0.5;
        if g <= 0.0 {
            (0, 0, 0.0)
        } else if g >= (n - 1) as f32 {
            (n - 1, n - 1, 0.0)
        } else {
            let i = g.floor() as usize;
            (i, i + 1, g - i as f32)
        }
    };

    let mut out = img.clone();
    let data = out.data_mut();
    for y in 0..h {
        let (y0, y1, wy) = locate(y, th, ny);
        for x in 0..w {
            let (x0, x1, wx) = locate(x, tw, nx);
            let i = y * w + x;
            let bin = lq[i] as usize;
            let top = (1.0 - wx) * luts[y0 * nx + x0][bin] + wx * luts[y0 * nx + x1][bin];
            let bottom = (1.0 - wx) * luts[y1 * nx + x0][bin] + wx * luts[y1 * nx + x1][bin];
            let mapped = (1.0 - wy) * top + wy * bottom;
            let delta = mapped - lum[i];
            for c in 0..3 {
                let s = &mut data[i * 3 + c];
                *s = to_u8(f32::from(*s) + delta);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_image_stays_constant() {
        for value in [0u8, 37, 128, 255] {
            let img = RasterImage::filled(40, 30, [value; 3]);
            let out = clahe(&img, 2.0, 8);
            let first = out.pixel(0, 0);
            assert!(out.data().chunks_exact(3).all(|p| p == first));
        }
        let colored = RasterImage::filled(33, 17, [200, 100, 50]);
        let out = clahe(&colored, 2.0, 8);
        let first = out.pixel(0, 0);
        assert!(out.data().chunks_exact(3).all(|p| p == first));
    }

    #[test]
    fn stretches_low_contrast_ramp() {
        let img = RasterImage::from_fn(64, 64, |x, _| [100 + (x / 8) as u8; 3]);
        let out = clahe(&img, 4.0, 2);
        let (lo, hi) = out.data().iter().fold((255u8, 0u8), |(a, b), &v| (a.min(v), b.max(v)));
        assert!(hi - lo > 7 * 2, "range {lo}..{hi}");
    }

    #[test]
    fn more_tiles_than_pixels() {
        let img = RasterImage::from_fn(3, 2, |x, y| [(x * 50 + y * 20) as u8; 3]);
        assert_eq!(clahe(&img, 2.0, 8).dims(), (3, 2));
    }

    proptest! {
        #[test]
        fn clipping_conserves_mass(counts in proptest::collection::vec(0u32..5000, BINS), limit in 1u32..400) {
            let mut hist = [0u32; BINS];
            hist.copy_from_slice(&counts);
            let before: u64 = hist.iter().map(|&v| u64::from(v)).sum();
            clip_histogram(&mut hist, limit);
            let after: u64 = hist.iter().map(|&v| u64::from(v)).sum();
            prop_assert_eq!(before, after);
        }
    }
}
