// SPDX-License-Identifier: MIT OR Apache-2.0

//! Aliased rasterization and token-grid coverage.
//!
//! A pixel `(x, y)` belongs to an object when its center `(x + 0.5, y + 0.5)`
//! lies strictly inside the shape. Shape geometry (all inside the bounding
//! box of side `size`):
//!
//! - triangle: equilateral, point up, side `size`, vertically centered
//! - star: five points, point up, inner radius half the outer radius
//! - heart: two circles of radius `size/4` over a downward triangle
//! - cross: two bars of width `size/3`

use std::collections::BTreeSet;
use std::path::Path;

use super::{ObjectSpec, Palette, Rgb, SceneSpec, Shape};
use crate::error::{CvError, Result};
use crate::store::Grid;

/// Fraction of a cell's pixels an object must cover for the cell to count.
pub const COVERAGE_THRESHOLD: f64 = 0.25;

/// Point-membership test for one object.
pub(crate) struct ShapeMask {
    shape: Shape,
    cx: f64,
    cy: f64,
    r: f64,
    size: f64,
    poly: Vec<(f64, f64)>,
}

impl ShapeMask {
    pub fn new(o: &ObjectSpec) -> Self {
        let (cx, cy) = o.center;
        let r = o.size / 2.0;
        let poly = if o.shape == Shape::Star {
            (0..10)
                .map(|k| {
                    let ang = (-90.0 + 36.0 * f64::from(k)).to_radians();
                    let rad = if k % 2 == 0 { r } else { 0.5 * r };
                    (cx + rad * ang.cos(), cy + rad * ang.sin())
                })
                .collect()
        } else {
            Vec::new()
        };
        Self {
            shape: o.shape,
            cx,
            cy,
            r,
            size: o.size,
            poly,
        }
    }

    pub fn contains(&self, px: f64, py: f64) -> bool {
        let dx = px - self.cx;
        let dy = py - self.cy;
        let r = self.r;
        match self.shape {
            Shape::Circle => dx * dx + dy * dy < r * r,
            Shape::Square => dx.abs() < r && dy.abs() < r,
            Shape::Triangle => {
                let h = self.size * 3f64.sqrt() / 2.0;
                let top = -h / 2.0;
                dy > top && dy < h / 2.0 && dx.abs() < r * (dy - top) / h
            }
            Shape::Star => point_in_polygon(&self.poly, px, py),
            Shape::Heart => {
                let q = self.size / 4.0;
                let in_lobe = |ox: f64| {
                    let ex = dx - ox;
                    let ey = dy + q;
                    ex * ex + ey * ey < q * q
                };
                let in_tri = dy >= -q && dy < r && dx.abs() < r * (r - dy) / (r + q);
                in_lobe(-q) || in_lobe(q) || in_tri
            }
            Shape::Cross => {
                let w = self.size / 6.0;
                (dx.abs() < w && dy.abs() < r) || (dy.abs() < w && dx.abs() < r)
            }
        }
    }
}

fn point_in_polygon(poly: &[(f64, f64)], x: f64, y: f64) -> bool {
    let mut inside = false;
    let mut j = poly.len() - 1;
    for i in 0..poly.len() {
        let (xi, yi) = poly[i];
        let (xj, yj) = poly[j];
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Calls `f(x, y)` for every pixel of `o` inside `canvas`.
pub(crate) fn for_each_pixel(o: &ObjectSpec, canvas: (u32, u32), mut f: impl FnMut(u32, u32)) {
    let mask = ShapeMask::new(o);
    let (x0, y0, x1, y1) = o.bbox();
    let xs = x0.floor().max(0.0) as u32..(x1.ceil().min(f64::from(canvas.0))).max(0.0) as u32;
    let ys = y0.floor().max(0.0) as u32..(y1.ceil().min(f64::from(canvas.1))).max(0.0) as u32;
    for y in ys {
        let py = f64::from(y) + 0.5;
        for x in xs.clone() {
            if mask.contains(f64::from(x) + 0.5, py) {
                f(x, y);
            }
        }
    }
}

/// Per-pixel owner map (`0` = background, `i + 1` = object `i`).
/// Fails on the first pixel claimed by two objects.
pub(crate) fn occupancy(spec: &SceneSpec) -> Result<Vec<u16>> {
    let (w, h) = spec.canvas;
    let mut occ = vec![0u16; w as usize * h as usize];
    for (i, o) in spec.objects.iter().enumerate() {
        let mut clash = None;
        for_each_pixel(o, spec.canvas, |x, y| {
            let cell = &mut occ[(y * w + x) as usize];
            if *cell != 0 && clash.is_none() {
                clash = Some(*cell as usize - 1);
            }
            *cell = i as u16 + 1;
        });
        if let Some(j) = clash {
            return Err(CvError::Invariant(format!(
                "{}: objects {j} and {i} overlap",
                spec.id
            )));
        }
    }
    Ok(occ)
}

/// An 8-bit RGB image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl Raster {
    pub fn filled(width: u32, height: u32, rgb: Rgb) -> Self {
        let pixels = rgb
            .iter()
            .copied()
            .cycle()
            .take(width as usize * height as usize * 3)
            .collect();
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn get(&self, x: u32, y: u32) -> Rgb {
        let i = ((y * self.width + x) * 3) as usize;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    fn set(&mut self, x: u32, y: u32, rgb: Rgb) {
        let i = ((y * self.width + x) * 3) as usize;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn count(&self, rgb: Rgb) -> usize {
        self.pixels.chunks_exact(3).filter(|p| *p == rgb).count()
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        image::save_buffer(
            path,
            &self.pixels,
            self.width,
            self.height,
            image::ExtendedColorType::Rgb8,
        )
        .map_err(|e| CvError::Image(format!("{}: {e}", path.display())))
    }
}

/// Renders a scene. Rejects out-of-canvas or overlapping objects.
pub fn render_scene(spec: &SceneSpec, palette: &Palette) -> Result<Raster> {
    spec.check()?;
    let mut img = Raster::filled(spec.canvas.0, spec.canvas.1, spec.background);
    for o in &spec.objects {
        let fill = palette.fill(o.color)?;
        for_each_pixel(o, spec.canvas, |x, y| img.set(x, y, fill));
    }
    Ok(img)
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct CellGeometry {
    pub cell_w: u32,
    pub cell_h: u32,
    pub cols: u32,
    pub cells: usize,
    /// Minimum covered pixels for a cell to count.
    pub min_pixels: u32,
}

impl CellGeometry {
    pub fn new(canvas: (u32, u32), grid: Grid) -> Result<Self> {
        if grid.cols == 0
            || grid.rows == 0
            || !canvas.0.is_multiple_of(grid.cols)
            || !canvas.1.is_multiple_of(grid.rows)
        {
            return Err(CvError::InvalidInput(format!(
                "canvas {}x{} is not divisible by grid {}x{}",
                canvas.0, canvas.1, grid.rows, grid.cols
            )));
        }
        let cell_w = canvas.0 / grid.cols;
        let cell_h = canvas.1 / grid.rows;
        let area = f64::from(cell_w * cell_h);
        Ok(Self {
            cell_w,
            cell_h,
            cols: grid.cols,
            cells: grid.cells(),
            min_pixels: (COVERAGE_THRESHOLD * area).ceil() as u32,
        })
    }

    pub fn cell_of(&self, x: u32, y: u32) -> usize {
        ((y / self.cell_h) * self.cols + x / self.cell_w) as usize
    }
}

/// Covered pixel count per touched cell, sorted by cell index.
pub(crate) fn cell_coverage(
    o: &ObjectSpec,
    canvas: (u32, u32),
    geom: &CellGeometry,
) -> Vec<(usize, u32)> {
    let mut counts = std::collections::BTreeMap::new();
    for_each_pixel(o, canvas, |x, y| {
        *counts.entry(geom.cell_of(x, y)).or_insert(0u32) += 1
    });
    counts.into_iter().collect()
}

/// Token indices whose cell is at least 25% covered by object `index`.
pub fn token_mask(spec: &SceneSpec, index: usize, grid: Grid) -> Result<BTreeSet<usize>> {
    let o = spec
        .objects
        .get(index)
        .ok_or_else(|| CvError::InvalidInput(format!("{}: no object {index}", spec.id)))?;
    let geom = CellGeometry::new(spec.canvas, grid)?;
    Ok(cell_coverage(o, spec.canvas, &geom)
        .into_iter()
        .filter(|&(_, n)| n >= geom.min_pixels)
        .map(|(c, _)| c)
        .collect())
}

/// Owning object per token: among objects passing the coverage threshold for
/// a cell, the one covering most pixels (lowest index on ties).
pub fn token_owners(spec: &SceneSpec, grid: Grid) -> Result<Vec<Option<usize>>> {
    let geom = CellGeometry::new(spec.canvas, grid)?;
    let mut best: Vec<(u32, Option<usize>)> = vec![(0, None); geom.cells];
    for (i, o) in spec.objects.iter().enumerate() {
        for (cell, n) in cell_coverage(o, spec.canvas, &geom) {
            if n >= geom.min_pixels && n > best[cell].0 {
                best[cell] = (n, Some(i));
            }
        }
    }
    Ok(best.into_iter().map(|(_, o)| o).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{NamedColor, ObjectColor, CANVAS, GRID};

    fn obj(shape: Shape, cx: f64, cy: f64, size: f64) -> ObjectSpec {
        ObjectSpec {
            color: ObjectColor::Named(NamedColor::Red),
            shape,
            center: (cx, cy),
            size,
        }
    }

    fn grid() -> Grid {
        Grid::new(GRID, GRID)
    }

    #[test]
    fn empty_scene_is_background() {
        let spec = SceneSpec::new("e", vec![], 0);
        let img = render_scene(&spec, &Palette::default()).unwrap();
        assert_eq!(img.count(spec.background), (CANVAS * CANVAS) as usize);
    }

    #[test]
    fn centered_square_pixel_count() {
        let spec = SceneSpec::new("s", vec![obj(Shape::Square, 224.0, 224.0, 112.0)], 0);
        let img = render_scene(&spec, &Palette::default()).unwrap();
        // brute force: count pixels whose center lies in [168, 280)²
        let expected = (0..CANVAS)
            .flat_map(|y| (0..CANVAS).map(move |x| (x, y)))
            .filter(|&(x, y)| (168..280).contains(&x) && (168..280).contains(&y))
            .count();
        assert_eq!(expected, 112 * 112);
        assert_eq!(img.count([255, 0, 0]), expected);
        assert_eq!(
            img.count(spec.background),
            (CANVAS * CANVAS) as usize - expected
        );
    }

    #[test]
    fn overlap_rejected() {
        let spec = SceneSpec::new(
            "o",
            vec![
                obj(Shape::Square, 100.0, 100.0, 60.0),
                obj(Shape::Circle, 120.0, 110.0, 60.0),
            ],
            0,
        );
        assert!(matches!(
            render_scene(&spec, &Palette::default()),
            Err(CvError::Invariant(_))
        ));
    }

    #[test]
    fn out_of_canvas_rejected() {
        let spec = SceneSpec::new("c", vec![obj(Shape::Square, 10.0, 100.0, 60.0)], 0);
        assert!(spec.check().is_err());
    }

    #[test]
    fn single_cell_mask() {
        let spec = SceneSpec::new(
            "m",
            vec![obj(Shape::Square, 14.0 + 28.0, 14.0 + 28.0, 28.0)],
            0,
        );
        assert_eq!(
            token_mask(&spec, 0, grid())
                .unwrap()
                .into_iter()
                .collect::<Vec<_>>(),
            vec![17]
        );
    }

    #[test]
    fn full_canvas_mask() {
        let spec = SceneSpec::new("f", vec![obj(Shape::Square, 224.0, 224.0, 448.0)], 0);
        assert_eq!(token_mask(&spec, 0, grid()).unwrap().len(), 256);
    }

    #[test]
    fn aligned_56_square_covers_four_cells() {
        let o = obj(Shape::Square, 56.0 + 28.0, 28.0 + 28.0, 56.0);
        let spec = SceneSpec::new("a", vec![o.clone()], 0);
        // brute force: per-cell pixel counts from the raw membership test
        let mask = ShapeMask::new(&o);
        let mut per_cell = vec![0u32; 256];
        for y in 0..CANVAS {
            for x in 0..CANVAS {
                if mask.contains(f64::from(x) + 0.5, f64::from(y) + 0.5) {
                    per_cell[((y / 28) * 16 + x / 28) as usize] += 1;
                }
            }
        }
        let expected: Vec<usize> = (0..256).filter(|&c| per_cell[c] >= 196).collect();
        assert_eq!(expected, vec![18, 19, 34, 35]);
        assert_eq!(
            token_mask(&spec, 0, grid())
                .unwrap()
                .into_iter()
                .collect::<Vec<_>>(),
            expected
        );
    }

    #[test]
    fn grazing_cells_excluded() {
        // 30 px square at a cell corner region covers one cell fully-ish and slivers of others
        let spec = SceneSpec::new(
            "g",
            vec![obj(Shape::Square, 28.0 + 15.0, 28.0 + 15.0, 30.0)],
            0,
        );
        let m = token_mask(&spec, 0, grid()).unwrap();
        assert_eq!(m.into_iter().collect::<Vec<_>>(), vec![17]);
    }

    #[test]
    fn shapes_stay_inside_bbox_and_are_nonempty() {
        for shape in Shape::ALL {
            let o = obj(shape, 100.0, 100.0, 60.0);
            let mut n = 0;
            let mut inside = true;
            for_each_pixel(&o, (CANVAS, CANVAS), |x, y| {
                n += 1;
                inside &= (70..130).contains(&x) && (70..130).contains(&y);
            });
            assert!(n > 600, "{shape:?} has only {n} pixels");
            assert!(inside, "{shape:?} leaves its box");
        }
    }

    #[test]
    fn owners_prefer_larger_coverage() {
        let spec = SceneSpec::new(
            "w",
            vec![
                obj(Shape::Square, 28.0 + 14.0, 14.0, 28.0),
                obj(Shape::Square, 100.0, 100.0, 40.0),
            ],
            0,
        );
        let owners = token_owners(&spec, grid()).unwrap();
        assert_eq!(owners[1], Some(0));
        assert_eq!(
            owners.iter().filter(|o| o.is_none()).count(),
            256 - 1 - token_mask(&spec, 1, grid()).unwrap().len()
        );
    }
}
