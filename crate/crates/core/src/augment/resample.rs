use super::raster::FloatPlanes;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Border {
    /// Coordinates outside the image read the nearest edge pixel.
    Replicate,
    /// Coordinates outside the image read black.
    Black,
}

/// Bilinear sample at continuous pixel coordinates (pixel centers on integers).
#[inline]
pub(crate) fn bilinear(p: &FloatPlanes, x: f64, y: f64, border: Border) -> [f32; 3] {
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = (x - x0) as f32;
    let fy = (y - y0) as f32;
    let (x0, y0) = (x0 as i64, y0 as i64);
    let w = p.width as i64;
    let h = p.height as i64;
    let index = |xi: i64, yi: i64| -> Option<usize> {
        match border {
            Border::Replicate => {
                let xc = xi.clamp(0, w - 1);
                let yc = yi.clamp(0, h - 1);
                Some((yc * w + xc) as usize)
            }
            Border::Black => {
                (xi >= 0 && xi < w && yi >= 0 && yi < h).then(|| (yi * w + xi) as usize)
            }
        }
    };
    let i00 = index(x0, y0);
    let i10 = index(x0 + 1, y0);
    let i01 = index(x0, y0 + 1);
    let i11 = index(x0 + 1, y0 + 1);
    let mut out = [0.0f32; 3];
    for (c, o) in out.iter_mut().enumerate() {
        let plane = &p.planes[c];
        let v = |i: Option<usize>| i.map_or(0.0, |i| plane[i]);
        let top = (1.0 - fx) * v(i00) + fx * v(i10);
        let bottom = (1.0 - fx) * v(i01) + fx * v(i11);
        *o = (1.0 - fy) * top + fy * bottom;
    }
    out
}

/// Builds an image by sampling `src` at `map(x, y)` for every output pixel.
pub(crate) fn remap(
    src: &FloatPlanes,
    out_w: usize,
    out_h: usize,
    border: Border,
    mut map: impl FnMut(usize, usize) -> (f64, f64),
) -> FloatPlanes {
    let n = out_w * out_h;
    let mut planes = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for y in 0..out_h {
        for x in 0..out_w {
            let (sx, sy) = map(x, y);
            let v = bilinear(src, sx, sy, border);
            let i = y * out_w + x;
            for c in 0..3 {
                planes[c][i] = v[c];
            }
        }
    }
    FloatPlanes {
        width: out_w,
        height: out_h,
        planes,
    }
}
