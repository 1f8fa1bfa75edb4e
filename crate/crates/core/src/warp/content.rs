//! Pass 1: the desired view, rendered from the user's eye onto the virtual
//! screen raster.

use std::f64::consts::PI;

use nalgebra::Vector3;

use super::image::{to_rgb, RasterImage, Rgb, BLACK, WHITE};
use crate::exec::Exec;
use crate::geometry::{rotation_about_axis, UnitAxis, Vec3};
use crate::scene::TriangleMesh;
use crate::upr::{dehomogenize, UprMatrix, Viewport};
use crate::{Error, Result};

/// Black/white board of `rows × cols` squares of `square_px` raster pixels,
/// centered in the pass-1 image. Everything outside the board is black.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "PatternFile", into = "PatternFile")]
pub struct CheckerPattern {
    pub rows: u32,
    pub cols: u32,
    pub square_px: u32,
}

#[derive(serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct PatternFile {
    rows: u32,
    cols: u32,
    square_px: u32,
}

impl TryFrom<PatternFile> for CheckerPattern {
    type Error = Error;

    fn try_from(f: PatternFile) -> Result<Self> {
        CheckerPattern::new(f.rows, f.cols, f.square_px)
    }
}

impl From<CheckerPattern> for PatternFile {
    fn from(p: CheckerPattern) -> Self {
        PatternFile { rows: p.rows, cols: p.cols, square_px: p.square_px }
    }
}

impl CheckerPattern {
    pub fn new(rows: u32, cols: u32, square_px: u32) -> Result<Self> {
        if rows < 2 || cols < 2 || square_px == 0 {
            return Err(Error::InvalidArgument(format!(
                "checker pattern needs at least 2×2 squares of positive size, got {rows}×{cols}×{square_px}"
            )));
        }
        Ok(CheckerPattern { rows, cols, square_px })
    }

    /// Continuous raster coordinate of the board's top-left edge.
    fn origin(&self, width: u32, height: u32) -> [f64; 2] {
        let ox = (width as i64 - (self.cols * self.square_px) as i64).div_euclid(2);
        let oy = (height as i64 - (self.rows * self.square_px) as i64).div_euclid(2);
        [ox as f64 - 0.5, oy as f64 - 0.5]
    }

    /// Inner corners in row-major order with their raster positions.
    pub fn corners(&self, width: u32, height: u32) -> Vec<(usize, [f64; 2])> {
        let [ox, oy] = self.origin(width, height);
        let s = self.square_px as f64;
        let mut out = Vec::new();
        for i in 1..self.rows {
            for j in 1..self.cols {
                let index = ((i - 1) * (self.cols - 1) + (j - 1)) as usize;
                out.push((index, [ox + j as f64 * s, oy + i as f64 * s]));
            }
        }
        out
    }

    pub fn color_at(&self, x: u32, y: u32, width: u32, height: u32) -> Rgb {
        let [ox, oy] = self.origin(width, height);
        let s = self.square_px as f64;
        let col = ((x as f64 - ox) / s).floor();
        let row = ((y as f64 - oy) / s).floor();
        if col < 0.0 || row < 0.0 || col >= self.cols as f64 || row >= self.rows as f64 {
            return BLACK;
        }
        if (col as u32 + row as u32).is_multiple_of(2) {
            WHITE
        } else {
            BLACK
        }
    }
}

/// 360° panorama, longitude along x and latitude along y; `yaw` turns the
/// sphere about world y.
#[derive(Debug, Clone)]
pub struct Equirect {
    pub panorama: RasterImage,
    pub yaw: f64,
}

impl Equirect {
    pub fn new(panorama: RasterImage, yaw: f64) -> Result<Self> {
        if panorama.width() != 2 * panorama.height() {
            return Err(Error::InvalidArgument(format!(
                "equirectangular panorama must be twice as wide as tall, got {}x{}",
                panorama.width(),
                panorama.height()
            )));
        }
        Ok(Equirect { panorama, yaw })
    }

    /// Color seen along a world direction.
    pub fn sample(&self, dir_world: &Vec3) -> [f64; 3] {
        let d = rotation_about_axis(&UnitAxis::y(), -self.yaw) * dir_world;
        let lon = d.x.atan2(d.z);
        let lat = (-d.y).atan2(d.x.hypot(d.z));
        let (w, h) = (self.panorama.width() as f64, self.panorama.height() as f64);
        let u = (lon / (2.0 * PI) + 0.5) * w - 0.5;
        let v = ((0.5 - lat / PI) * h - 0.5).clamp(0.0, h - 1.0);
        // Horizontal wrap: interpolate between the two neighbouring columns.
        let u0 = u.floor();
        let f = u - u0;
        let wrap = |x: f64| x.rem_euclid(w);
        let a = self.panorama.sample_bilinear(wrap(u0), v).expect("inside");
        let b = self.panorama.sample_bilinear(wrap(u0 + 1.0), v).expect("inside");
        [0, 1, 2].map(|k| a[k] * (1.0 - f) + b[k] * f)
    }
}

#[derive(Debug, Clone)]
pub struct ColoredMesh {
    pub mesh: TriangleMesh,
    pub color: Rgb,
}

#[derive(Debug, Clone)]
pub enum Content {
    Checker(CheckerPattern),
    Equirect(Equirect),
    MeshSet(Vec<ColoredMesh>),
}

/// Renders `content` as the user should see it, into the viewport raster.
pub fn render_user_view(content: &Content, upr: &UprMatrix, viewport: &Viewport, exec: Exec) -> Result<RasterImage> {
    viewport.validate()?;
    let (w, h) = (viewport.width_px, viewport.height_px);
    let mut img = RasterImage::new(w, h)?;
    match content {
        Content::Checker(p) => {
            exec.for_each_row(img.data_mut(), w as usize * 3, |y, row| {
                for x in 0..w {
                    let c = p.color_at(x, y as u32, w, h);
                    row[x as usize * 3..x as usize * 3 + 3].copy_from_slice(&c);
                }
            });
        }
        Content::Equirect(eq) => {
            let eye = upr.eye_world();
            exec.for_each_row(img.data_mut(), w as usize * 3, |y, row| {
                for x in 0..w {
                    let xy = viewport.from_raster([x as f64, y as f64]);
                    let dir = (upr.screen_to_world(xy) - eye).normalize();
                    let c = to_rgb(eq.sample(&dir));
                    row[x as usize * 3..x as usize * 3 + 3].copy_from_slice(&c);
                }
            });
        }
        Content::MeshSet(meshes) => rasterize_meshes(&mut img, meshes, upr, viewport, exec),
    }
    Ok(img)
}

struct ScreenTriangle {
    p: [[f64; 2]; 3],
    inv_w: [f64; 3],
    color: Rgb,
    y_min: f64,
    y_max: f64,
}

fn rasterize_meshes(img: &mut RasterImage, meshes: &[ColoredMesh], upr: &UprMatrix, viewport: &Viewport, exec: Exec) {
    const NEAR: f64 = 1e-6;
    // Positive in front of the eye.
    let facing = -upr.eye.e_z.signum();
    let mut tris = Vec::new();
    for m in meshes {
        for f in 0..m.mesh.faces.len() {
            let verts = m.mesh.triangle(f);
            let hs: [Vector3<f64>; 3] = verts.map(|v| upr.homogeneous(&v));
            if hs.iter().any(|h| facing * h[2] <= NEAR) {
                continue;
            }
            let p = hs.map(|h| viewport.to_raster(dehomogenize(&h).expect("in front")));
            let inv_w = hs.map(|h| 1.0 / (facing * h[2]));
            let ys = p.map(|q| q[1]);
            tris.push(ScreenTriangle {
                p,
                inv_w,
                color: m.color,
                y_min: ys.iter().copied().fold(f64::INFINITY, f64::min),
                y_max: ys.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            });
        }
    }
    let w = img.width();
    exec.for_each_row(img.data_mut(), w as usize * 3, |y, row| {
        let yc = y as f64;
        let mut depth = vec![0.0f64; w as usize];
        for t in tris.iter().filter(|t| t.y_min <= yc && yc <= t.y_max) {
            let [a, b, c] = t.p;
            let area = edge(a, b, c);
            if area == 0.0 {
                continue;
            }
            let xs = [a[0], b[0], c[0]];
            let x_lo = xs.iter().copied().fold(f64::INFINITY, f64::min).ceil().max(0.0);
            let x_hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max).floor().min(w as f64 - 1.0);
            if x_lo > x_hi {
                continue;
            }
            for x in x_lo as u32..=x_hi as u32 {
                let q = [x as f64, yc];
                let l0 = edge(b, c, q) / area;
                let l1 = edge(c, a, q) / area;
                let l2 = edge(a, b, q) / area;
                if l0 < 0.0 || l1 < 0.0 || l2 < 0.0 {
                    continue;
                }
                let inv = l0 * t.inv_w[0] + l1 * t.inv_w[1] + l2 * t.inv_w[2];
                let slot = &mut depth[x as usize];
                if inv > *slot {
                    *slot = inv;
                    row[x as usize * 3..x as usize * 3 + 3].copy_from_slice(&t.color);
                }
            }
        }
    });
}

fn edge(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}
