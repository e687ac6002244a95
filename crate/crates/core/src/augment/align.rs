//! Landmark-based affine alignment.
//!
//! The affine `A` is fitted so that `A(src_i) ~ template_i` in the least-squares
//! sense; the output image `out(p) = img(A^-1 p)`, so content moves onto the
//! template positions. Samples falling outside the source are black.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::raster::{FloatPlanes, RasterImage};
use super::resample::{remap, Border};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct LandmarkSet(Vec<Point>);

impl LandmarkSet {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Degenerate(format!("need at least 2 landmarks, got {}", points.len())));
        }
        if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::Degenerate("landmark coordinates must be finite".into()));
        }
        let first = points[0];
        if points.iter().all(|p| *p == first) {
            return Err(Error::Degenerate("all landmarks coincide".into()));
        }
        Ok(LandmarkSet(points))
    }

    pub fn points(&self) -> &[Point] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn centroid(&self) -> Point {
        let n = self.0.len() as f64;
        let (sx, sy) = self.0.iter().fold((0.0, 0.0), |(a, b), p| (a + p.x, b + p.y));
        Point::new(sx / n, sy / n)
    }
}

impl TryFrom<Vec<Point>> for LandmarkSet {
    type Error = Error;
    fn try_from(points: Vec<Point>) -> Result<Self> {
        LandmarkSet::new(points)
    }
}

impl From<LandmarkSet> for Vec<Point> {
    fn from(l: LandmarkSet) -> Self {
        l.0
    }
}

/// `[x', y'] = [[a, b], [d, e]] [x, y] + [c, f]`, stored row-major as `[a, b, c, d, e, f]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine2(pub [f64; 6]);

impl Affine2 {
    pub const IDENTITY: Affine2 = Affine2([1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);

    pub fn apply(&self, p: Point) -> Point {
        let [a, b, c, d, e, f] = self.0;
        Point::new(a * p.x + b * p.y + c, d * p.x + e * p.y + f)
    }

    pub fn determinant(&self) -> f64 {
        self.0[0] * self.0[4] - self.0[1] * self.0[3]
    }

    pub fn inverse(&self) -> Result<Affine2> {
        let [a, b, c, d, e, f] = self.0;
        let det = self.determinant();
        let scale = a.abs().max(b.abs()).max(d.abs()).max(e.abs());
        if !(det.abs() > 1e-12 * scale * scale) {
            return Err(Error::Degenerate("affine transform is not invertible".into()));
        }
        let (ia, ib, id, ie) = (e / det, -b / det, -d / det, a / det);
        Ok(Affine2([ia, ib, -(ia * c + ib * f), id, ie, -(id * c + ie * f)]))
    }
}

/// Least-squares affine mapping `src` onto `dst`. Two points give a similarity
/// (rotation, uniform scale, translation); three or more a full affine.
pub fn fit_affine(src: &LandmarkSet, dst: &LandmarkSet) -> Result<Affine2> {
    if src.len() != dst.len() {
        return Err(Error::Dimension {
            expected: dst.len(),
            found: src.len(),
            context: "landmark count vs template".into(),
        });
    }
    let cs = src.centroid();
    let cd = dst.centroid();
    let pairs: Vec<(Point, Point)> = src
        .points()
        .iter()
        .zip(dst.points())
        .map(|(s, d)| (Point::new(s.x - cs.x, s.y - cs.y), Point::new(d.x - cd.x, d.y - cd.y)))
        .collect();

    let (a, b, d, e) = if src.len() == 2 {
        // z_d = c z_s with complex c = (p + iq)
        let norm: f64 = pairs.iter().map(|(s, _)| s.x * s.x + s.y * s.y).sum();
        let p: f64 = pairs.iter().map(|(s, t)| s.x * t.x + s.y * t.y).sum::<f64>() / norm;
        let q: f64 = pairs.iter().map(|(s, t)| s.x * t.y - s.y * t.x).sum::<f64>() / norm;
        (p, -q, q, p)
    } else {
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        let (mut bx0, mut bx1, mut by0, mut by1) = (0.0, 0.0, 0.0, 0.0);
        for (s, t) in &pairs {
            sxx += s.x * s.x;
            sxy += s.x * s.y;
            syy += s.y * s.y;
            bx0 += s.x * t.x;
            bx1 += s.y * t.x;
            by0 += s.x * t.y;
            by1 += s.y * t.y;
        }
        let det = sxx * syy - sxy * sxy;
        let trace = sxx + syy;
        if !(det > 1e-12 * trace * trace) {
            return Err(Error::Degenerate("source landmarks are collinear".into()));
        }
        let solve = |r0: f64, r1: f64| ((syy * r0 - sxy * r1) / det, (sxx * r1 - sxy * r0) / det);
        let (a, b) = solve(bx0, bx1);
        let (d, e) = solve(by0, by1);
        (a, b, d, e)
    };
    let c = cd.x - (a * cs.x + b * cs.y);
    let f = cd.y - (d * cs.x + e * cs.y);
    Ok(Affine2([a, b, c, d, e, f]))
}

fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < 1e-9 {
        r
    } else {
        v
    }
}

/// Resamples `img` through `transform` into an output of the same size.
pub fn warp_affine(img: &RasterImage, transform: &Affine2) -> Result<RasterImage> {
    let inv = transform.inverse()?;
    let src = FloatPlanes::from_image(img);
    let out = remap(&src, src.width, src.height, Border::Black, |x, y| {
        let p = inv.apply(Point::new(x as f64, y as f64));
        (snap(p.x), snap(p.y))
    });
    Ok(out.to_image())
}

pub fn align_affine(img: &RasterImage, src: &LandmarkSet, template: &LandmarkSet) -> Result<RasterImage> {
    warp_affine(img, &fit_affine(src, template)?)
}

fn parse_landmark_line(line: &str, source: &str, lineno: usize) -> Result<(String, LandmarkSet)> {
    let perr = |message: String| Error::Parse {
        source_name: source.to_string(),
        line: lineno,
        message,
    };
    let mut fields = line.split_whitespace();
    let id = fields.next().ok_or_else(|| perr("empty line".into()))?;
    let coords = fields
        .map(|f| f.parse::<f64>().map_err(|_| perr(format!("bad coordinate {f:?}"))))
        .collect::<Result<Vec<_>>>()?;
    if coords.len() % 2 != 0 {
        return Err(perr(format!("odd number of coordinates ({})", coords.len())));
    }
    let points = coords.chunks(2).map(|c| Point::new(c[0], c[1])).collect();
    let set = LandmarkSet::new(points).map_err(|e| perr(e.to_string()))?;
    Ok((id.to_string(), set))
}

/// Parses `image_id x1 y1 ... xk yk` lines. Blank lines and `#` comments are skipped.
pub fn parse_landmarks(text: &str, source: &str) -> Result<BTreeMap<String, LandmarkSet>> {
    let mut out = BTreeMap::new();
    let mut k = None;
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (id, set) = parse_landmark_line(trimmed, source, i + 1)?;
        match k {
            None => k = Some(set.len()),
            Some(k) if k != set.len() => {
                return Err(Error::Parse {
                    source_name: source.to_string(),
                    line: i + 1,
                    message: format!("expected {k} landmarks, found {}", set.len()),
                })
            }
            _ => {}
        }
        if out.insert(id.clone(), set).is_some() {
            return Err(Error::Parse {
                source_name: source.to_string(),
                line: i + 1,
                message: format!("duplicate id {id:?}"),
            });
        }
    }
    Ok(out)
}

pub fn load_landmarks(path: impl AsRef<Path>) -> Result<BTreeMap<String, LandmarkSet>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_landmarks(&text, &path.display().to_string())
}

/// Reads a template file: the first landmark line, id ignored.
pub fn load_template(path: impl AsRef<Path>) -> Result<LandmarkSet> {
    let path = path.as_ref();
    load_landmarks(path)?
        .into_values()
        .next()
        .ok_or_else(|| Error::data(format!("{}: no template landmarks", path.display())))
}
