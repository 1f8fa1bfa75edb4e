use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::{Error, Result};

pub type Rgb = [u8; 3];

pub const BLACK: Rgb = [0, 0, 0];
pub const WHITE: Rgb = [255, 255, 255];

/// Packed RGB8 image, row-major from the top-left pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: u32, height: u32) -> Result<Self> {
        Self::filled(width, height, BLACK)
    }

    pub fn filled(width: u32, height: u32, color: Rgb) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!("image dimensions must be positive, got {width}x{height}")));
        }
        let data = color.iter().copied().cycle().take(width as usize * height as usize * 3).collect();
        Ok(RasterImage { width, height, data })
    }

    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width as usize * height as usize * 3 {
            return Err(Error::InvalidArgument(format!(
                "raw buffer of {} bytes does not describe a {width}x{height} RGB image",
                data.len()
            )));
        }
        Ok(RasterImage { width, height, data })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn pixel(&self, x: u32, y: u32) -> Rgb {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, c: Rgb) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&c);
    }

    /// Bilinear sample at continuous pixel coordinates. Points outside the
    /// image footprint `[-0.5, W-0.5) × [-0.5, H-0.5)` return `None`.
    pub fn sample_bilinear(&self, u: f64, v: f64) -> Option<[f64; 3]> {
        let (w, h) = (self.width as f64, self.height as f64);
        if !(u >= -0.5 && u < w - 0.5 && v >= -0.5 && v < h - 0.5) {
            return None;
        }
        let u = u.clamp(0.0, w - 1.0);
        let v = v.clamp(0.0, h - 1.0);
        let (x0, y0) = (u.floor() as u32, v.floor() as u32);
        let (x1, y1) = ((x0 + 1).min(self.width - 1), (y0 + 1).min(self.height - 1));
        let (fx, fy) = (u - x0 as f64, v - y0 as f64);
        let (a, b, c, d) = (self.pixel(x0, y0), self.pixel(x1, y0), self.pixel(x0, y1), self.pixel(x1, y1));
        let mut out = [0.0; 3];
        for k in 0..3 {
            let top = a[k] as f64 * (1.0 - fx) + b[k] as f64 * fx;
            let bottom = c[k] as f64 * (1.0 - fx) + d[k] as f64 * fx;
            out[k] = top * (1.0 - fy) + bottom * fy;
        }
        Some(out)
    }

    /// Largest per-channel absolute difference to another image of the same size.
    pub fn max_abs_diff(&self, other: &RasterImage) -> Option<u8> {
        if self.width != other.width || self.height != other.height {
            return None;
        }
        Some(self.data.iter().zip(&other.data).map(|(a, b)| a.abs_diff(*b)).max().unwrap_or(0))
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    pub fn from_ppm(bytes: &[u8]) -> Result<Self> {
        let mut reader = BufReader::new(bytes);
        let mut fields = Vec::new();
        // Header: magic, width, height, maxval, separated by whitespace with
        // optional comments, then exactly one whitespace byte.
        let mut token = Vec::new();
        while fields.len() < 4 {
            let mut byte = [0u8; 1];
            if reader.read(&mut byte).map_err(|e| Error::Image(e.to_string()))? == 0 {
                return Err(Error::Image("truncated PPM header".into()));
            }
            match byte[0] {
                b'#' if token.is_empty() => {
                    let mut skip = Vec::new();
                    reader.read_until(b'\n', &mut skip).map_err(|e| Error::Image(e.to_string()))?;
                }
                c if c.is_ascii_whitespace() => {
                    if !token.is_empty() {
                        fields.push(String::from_utf8_lossy(&token).into_owned());
                        token.clear();
                    }
                }
                c => token.push(c),
            }
        }
        if fields[0] != "P6" {
            return Err(Error::Image(format!("expected binary PPM (P6), found {:?}", fields[0])));
        }
        let parse = |s: &str| s.parse::<u32>().map_err(|_| Error::Image(format!("bad PPM header field {s:?}")));
        let (w, h, max) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
        if max != 255 {
            return Err(Error::Image(format!("only 8-bit PPM is supported (maxval {max})")));
        }
        let mut data = Vec::new();
        reader.read_to_end(&mut data).map_err(|e| Error::Image(e.to_string()))?;
        let expected = w as usize * h as usize * 3;
        if data.len() < expected {
            return Err(Error::Image(format!("PPM pixel data truncated: {} of {expected} bytes", data.len())));
        }
        data.truncate(expected);
        RasterImage::from_raw(w, h, data)
    }

    pub fn write_ppm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_ppm()).map_err(|e| Error::io(path, e))
    }

    pub fn read_ppm(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_ppm(&bytes)
    }

    /// Draws a plus-shaped marker centered on the nearest pixel.
    pub fn draw_cross(&mut self, u: f64, v: f64, arm: i64, color: Rgb) {
        let (cx, cy) = (u.round() as i64, v.round() as i64);
        for d in -arm..=arm {
            self.put(cx + d, cy, color);
            self.put(cx, cy + d, color);
        }
    }

    /// Draws a one-pixel square outline of half-size `r`.
    pub fn draw_box(&mut self, u: f64, v: f64, r: i64, color: Rgb) {
        let (cx, cy) = (u.round() as i64, v.round() as i64);
        for d in -r..=r {
            self.put(cx + d, cy - r, color);
            self.put(cx + d, cy + r, color);
            self.put(cx - r, cy + d, color);
            self.put(cx + r, cy + d, color);
        }
    }

    fn put(&mut self, x: i64, y: i64, color: Rgb) {
        if x >= 0 && y >= 0 && x < self.width as i64 && y < self.height as i64 {
            self.set_pixel(x as u32, y as u32, color);
        }
    }
}

pub(crate) fn to_rgb(c: [f64; 3]) -> Rgb {
    c.map(|v| v.round().clamp(0.0, 255.0) as u8)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_round_trip() {
        let mut img = RasterImage::new(3, 2).unwrap();
        img.set_pixel(2, 1, [10, 20, 30]);
        let back = RasterImage::from_ppm(&img.to_ppm()).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn ppm_with_comment() {
        let mut bytes = b"P6\n# made by hand\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3, 4, 5, 6]);
        let img = RasterImage::from_ppm(&bytes).unwrap();
        assert_eq!(img.pixel(1, 0), [4, 5, 6]);
    }

    #[test]
    fn rejects_ascii_ppm_and_zero_size() {
        assert!(matches!(RasterImage::from_ppm(b"P3\n1 1\n255\n0 0 0\n"), Err(Error::Image(_))));
        assert!(RasterImage::new(0, 4).is_err());
    }

    #[test]
    fn bilinear_at_centers_and_between() {
        let mut img = RasterImage::new(2, 1).unwrap();
        img.set_pixel(1, 0, [200, 100, 0]);
        assert_eq!(img.sample_bilinear(1.0, 0.0).unwrap(), [200.0, 100.0, 0.0]);
        assert_eq!(img.sample_bilinear(0.5, 0.0).unwrap(), [100.0, 50.0, 0.0]);
        assert!(img.sample_bilinear(1.5, 0.0).is_none());
        assert!(img.sample_bilinear(-0.6, 0.0).is_none());
    }
}
