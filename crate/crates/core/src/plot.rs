//! Minimal RGB raster output: image grids and line charts written as PNG.

use std::path::Path;

use crate::colormnist::{write_png, IMAGE_BYTES, PIXELS, SIDE};
use crate::error::{domain, Result};

pub type Rgb = [u8; 3];

pub const WHITE: Rgb = [255, 255, 255];
pub const BLACK: Rgb = [0, 0, 0];
pub const GREY: Rgb = [200, 200, 200];
pub const BLUE: Rgb = [31, 119, 180];
pub const ORANGE: Rgb = [255, 127, 14];
pub const GREEN: Rgb = [44, 160, 44];

#[derive(Clone, Debug, PartialEq)]
pub struct Canvas {
    pub width: usize,
    pub height: usize,
    /// Row-major RGB bytes.
    pub data: Vec<u8>,
}

impl Canvas {
    pub fn new(width: usize, height: usize, fill: Rgb) -> Self {
        Self { width, height, data: fill.repeat(width * height) }
    }

    pub fn pixel(&self, x: usize, y: usize) -> Rgb {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Ignores out-of-range coordinates.
    pub fn set(&mut self, x: i64, y: i64, c: Rgb) {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            return;
        }
        let i = (y as usize * self.width + x as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&c);
    }

    pub fn line(&mut self, (x0, y0): (i64, i64), (x1, y1): (i64, i64), c: Rgb) {
        let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
        let (sx, sy) = ((x1 - x0).signum(), (y1 - y0).signum());
        let (mut x, mut y, mut err) = (x0, y0, dx + dy);
        loop {
            self.set(x, y, c);
            if x == x1 && y == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }

    pub fn rect(&mut self, x: i64, y: i64, w: i64, h: i64, c: Rgb) {
        for yy in y..y + h {
            for xx in x..x + w {
                self.set(xx, yy, c);
            }
        }
    }

    /// Copies a channel-first 28×28 image in `[0, 1]` with its top-left at `(x, y)`.
    pub fn blit_image(&mut self, x: usize, y: usize, chw: &[f32]) {
        for py in 0..SIDE {
            for px in 0..SIDE {
                let c: Rgb = std::array::from_fn(|ch| (chw[ch * PIXELS + py * SIDE + px].clamp(0.0, 1.0) * 255.0).round() as u8);
                self.set((x + px) as i64, (y + py) as i64, c);
            }
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_png(path, &self.data, self.width, self.height)
    }
}

/// Lays out concatenated channel-first images row by row, `cols` per row,
/// separated by `pad` white pixels.
pub fn image_grid(images: &[f32], cols: usize, pad: usize) -> Result<Canvas> {
    if cols == 0 || images.is_empty() || images.len() % IMAGE_BYTES != 0 {
        return Err(domain("image grid needs whole images and at least one column"));
    }
    let n = images.len() / IMAGE_BYTES;
    let rows = n.div_ceil(cols);
    let cell = SIDE + pad;
    let mut canvas = Canvas::new(cols * cell + pad, rows * cell + pad, WHITE);
    for (i, img) in images.chunks_exact(IMAGE_BYTES).enumerate() {
        canvas.blit_image(pad + (i % cols) * cell, pad + (i / cols) * cell, img);
    }
    Ok(canvas)
}

pub struct Series {
    pub points: Vec<(f64, f64)>,
    pub color: Rgb,
}

const MARGIN: usize = 24;

/// Line chart with a frame and light grid; axes span the data range.
pub fn line_chart(series: &[Series], width: usize, height: usize) -> Result<Canvas> {
    let pts = || series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    if pts().next().is_none() || width <= 2 * MARGIN || height <= 2 * MARGIN {
        return Err(domain("line chart needs finite points and room for the frame"));
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts() {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let (pw, ph) = ((width - 2 * MARGIN) as f64, (height - 2 * MARGIN) as f64);
    let map = |x: f64, y: f64| {
        (
            MARGIN as i64 + ((x - x0) / (x1 - x0) * pw).round() as i64,
            (height - MARGIN) as i64 - ((y - y0) / (y1 - y0) * ph).round() as i64,
        )
    };
    let mut c = Canvas::new(width, height, WHITE);
    for k in 1..4 {
        let gx = MARGIN as i64 + (pw * k as f64 / 4.0) as i64;
        let gy = MARGIN as i64 + (ph * k as f64 / 4.0) as i64;
        c.line((gx, MARGIN as i64), (gx, (height - MARGIN) as i64), GREY);
        c.line((MARGIN as i64, gy), ((width - MARGIN) as i64, gy), GREY);
    }
    let (l, r, t, b) = (MARGIN as i64, (width - MARGIN) as i64, MARGIN as i64, (height - MARGIN) as i64);
    for (p, q) in [((l, t), (r, t)), ((r, t), (r, b)), ((r, b), (l, b)), ((l, b), (l, t))] {
        c.line(p, q, BLACK);
    }
    for s in series {
        let finite: Vec<_> = s.points.iter().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
        for w in finite.windows(2) {
            c.line(map(w[0].0, w[0].1), map(w[1].0, w[1].1), s.color);
        }
        for &&(x, y) in &finite {
            let (px, py) = map(x, y);
            c.rect(px - 1, py - 1, 3, 3, s.color);
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_layout() {
        let mut imgs = vec![0.0f32; 3 * IMAGE_BYTES];
        imgs[IMAGE_BYTES..2 * IMAGE_BYTES].fill(1.0);
        let g = image_grid(&imgs, 2, 2).unwrap();
        assert_eq!((g.width, g.height), (2 * 30 + 2, 2 * 30 + 2));
        assert_eq!(g.pixel(2, 2), BLACK);
        assert_eq!(g.pixel(32, 2), WHITE);
        assert_eq!(g.pixel(2, 32), BLACK);
        assert_eq!(g.pixel(0, 0), WHITE);
        assert!(image_grid(&imgs[1..], 2, 2).is_err());
    }

    #[test]
    fn chart_draws_series_and_saves() {
        let s = Series { points: vec![(0.0, 0.0), (1.0, 1.0), (2.0, f64::NAN)], color: BLUE };
        let c = line_chart(&[s], 100, 80).unwrap();
        assert_eq!(c.pixel(MARGIN, 80 - MARGIN), BLUE);
        assert_eq!(c.pixel(100 - MARGIN, MARGIN), BLUE);
        let dir = tempfile::tempdir().unwrap();
        c.save(dir.path().join("c.png")).unwrap();
        assert!(line_chart(&[], 100, 80).is_err());
    }
}
