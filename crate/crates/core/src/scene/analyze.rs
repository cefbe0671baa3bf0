use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use super::render::Grid;
use super::{Cell, Color, SceneError, SceneGraph, SceneObject, Shape, Size, BACKGROUND, GRID, MAX_OBJECTS};
use crate::image::Image;

/// Pixels within this Chebyshev distance of the background color are background.
pub const BACKGROUND_TOLERANCE: u8 = 16;
/// Circularity at or above this is a circle.
pub const CIRCLE_MIN_CIRCULARITY: f64 = 0.85;
/// Bounding-box fill at or above this is a square.
pub const SQUARE_MIN_FILL: f64 = 0.9;
/// Bounding-box fill in `[TRIANGLE_MIN_FILL, TRIANGLE_MAX_FILL)` is a triangle.
pub const TRIANGLE_MIN_FILL: f64 = 0.4;
pub const TRIANGLE_MAX_FILL: f64 = 0.7;
/// Large iff area exceeds this fraction of the squared cell extent
/// (half of 0.6, the midpoint between the small and large extents).
pub const LARGE_AREA_FRACTION: f64 = 0.5 * 0.6;
/// Centroids closer than this to a cell boundary are ambiguous.
pub const BOUNDARY_MARGIN: f64 = 2.0;

/// Measurements of one connected component of foreground pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentStats {
    pub area: usize,
    pub mean_rgb: [f64; 3],
    pub centroid: (f64, f64),
    /// Inclusive pixel bounds: (min_x, min_y, max_x, max_y).
    pub bbox: (usize, usize, usize, usize),
    pub perimeter: f64,
}

impl ComponentStats {
    pub fn circularity(&self) -> f64 {
        4.0 * PI * self.area as f64 / (self.perimeter * self.perimeter)
    }

    pub fn fill_ratio(&self) -> f64 {
        let (x0, y0, x1, y1) = self.bbox;
        self.area as f64 / ((x1 - x0 + 1) * (y1 - y0 + 1)) as f64
    }
}

fn is_foreground(px: [u8; 3]) -> bool {
    px.iter()
        .zip(BACKGROUND)
        .any(|(&p, b)| p.abs_diff(b) > BACKGROUND_TOLERANCE)
}

/// 8-connected labeling of foreground pixels. Returns per-pixel labels
/// (0 = background, components numbered from 1) and the component count.
fn label_components(img: &Image) -> (Vec<u32>, u32) {
    let (w, h) = (img.width(), img.height());
    let fg: Vec<bool> = img.pixels().iter().map(|&p| is_foreground(p)).collect();
    let mut labels = vec![0u32; w * h];
    let mut next = 0u32;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !fg[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if fg[j] && labels[j] == 0 {
                        labels[j] = next;
                        stack.push(j);
                    }
                }
            }
        }
    }
    (labels, next)
}

/// Length of the marching-squares contour around one labeled component.
///
/// Each 2x2 window of pixel centers contributes the contour segments that
/// cross it: a lone corner (inside or outside) cuts a diagonal of length
/// sqrt(2)/2, a straight half split contributes 1, and a saddle contributes
/// two diagonals.
fn contour_length(labels: &[u32], w: usize, h: usize, label: u32, bbox: (usize, usize, usize, usize)) -> f64 {
    let inside = |x: isize, y: isize| -> bool {
        x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && labels[y as usize * w + x as usize] == label
    };
    let (x0, y0, x1, y1) = bbox;
    let mut length = 0.0;
    for y in (y0 as isize - 1)..=(y1 as isize) {
        for x in (x0 as isize - 1)..=(x1 as isize) {
            let tl = inside(x, y);
            let tr = inside(x + 1, y);
            let bl = inside(x, y + 1);
            let br = inside(x + 1, y + 1);
            let count = tl as u8 + tr as u8 + bl as u8 + br as u8;
            length += match count {
                1 | 3 => FRAC_1_SQRT_2,
                2 if tl == br => SQRT_2,
                2 => 1.0,
                _ => 0.0,
            };
        }
    }
    length
}

fn component_stats(img: &Image, labels: &[u32], count: u32) -> Vec<ComponentStats> {
    let w = img.width();
    struct Acc {
        area: usize,
        rgb: [f64; 3],
        sx: f64,
        sy: f64,
        bbox: (usize, usize, usize, usize),
    }
    let mut acc: Vec<Acc> = (0..count)
        .map(|_| Acc {
            area: 0,
            rgb: [0.0; 3],
            sx: 0.0,
            sy: 0.0,
            bbox: (usize::MAX, usize::MAX, 0, 0),
        })
        .collect();
    for (i, &l) in labels.iter().enumerate() {
        if l == 0 {
            continue;
        }
        let (x, y) = (i % w, i / w);
        let a = &mut acc[l as usize - 1];
        a.area += 1;
        let px = img.pixels()[i];
        for k in 0..3 {
            a.rgb[k] += px[k] as f64;
        }
        a.sx += x as f64 + 0.5;
        a.sy += y as f64 + 0.5;
        a.bbox = (a.bbox.0.min(x), a.bbox.1.min(y), a.bbox.2.max(x), a.bbox.3.max(y));
    }
    acc.into_iter()
        .enumerate()
        .map(|(i, a)| {
            let n = a.area as f64;
            ComponentStats {
                area: a.area,
                mean_rgb: a.rgb.map(|v| v / n),
                centroid: (a.sx / n, a.sy / n),
                bbox: a.bbox,
                perimeter: contour_length(labels, w, img.height(), i as u32 + 1, a.bbox),
            }
        })
        .collect()
}

fn classify_shape(stats: &ComponentStats) -> Result<Shape, SceneError> {
    let circularity = stats.circularity();
    let fill = stats.fill_ratio();
    if circularity >= CIRCLE_MIN_CIRCULARITY {
        Ok(Shape::Circle)
    } else if fill >= SQUARE_MIN_FILL {
        Ok(Shape::Square)
    } else if (TRIANGLE_MIN_FILL..TRIANGLE_MAX_FILL).contains(&fill) {
        Ok(Shape::Triangle)
    } else {
        Err(SceneError::UnrecognizedShape {
            cx: stats.centroid.0,
            cy: stats.centroid.1,
            circularity,
            fill,
        })
    }
}

fn locate(grid: &Grid, (cx, cy): (f64, f64)) -> Result<Cell, SceneError> {
    let axis = |v: f64, step: usize| -> Option<u8> {
        let step = step as f64;
        let idx = (v / step).floor();
        if idx < 0.0 || idx >= GRID as f64 {
            return None;
        }
        let offset = v - idx * step;
        if offset < BOUNDARY_MARGIN || step - offset < BOUNDARY_MARGIN {
            return None;
        }
        Some(idx as u8)
    };
    match (axis(cx, grid.cell_w), axis(cy, grid.cell_h)) {
        (Some(col), Some(row)) => Cell::new(col, row),
        _ => Err(SceneError::Ambiguous(cx, cy)),
    }
}

/// Recovers the scene graph of an image produced by [`super::render`].
pub fn analyze(img: &Image) -> Result<SceneGraph, SceneError> {
    let (w, h) = (img.width(), img.height());
    if w % 4 != 0 || h % 4 != 0 {
        return Err(SceneError::BadDimensions(w, h));
    }
    let (labels, count) = label_components(img);
    match count as usize {
        0 => return Err(SceneError::NoObjects),
        n if n > MAX_OBJECTS => return Err(SceneError::TooManyObjects(n)),
        _ => {}
    }
    let grid = Grid::new(w, h);
    let large_area = LARGE_AREA_FRACTION * grid.extent() * grid.extent();

    let mut objects = Vec::with_capacity(count as usize);
    for stats in component_stats(img, &labels, count) {
        let cell = locate(&grid, stats.centroid)?;
        let shape = classify_shape(&stats)?;
        let size = if stats.area as f64 > large_area {
            Size::Large
        } else {
            Size::Small
        };
        let color = Color::nearest(stats.mean_rgb);
        if objects.iter().any(|o: &SceneObject| o.cell == cell) {
            return Err(SceneError::Ambiguous(stats.centroid.0, stats.centroid.1));
        }
        objects.push(SceneObject::new(shape, color, size, cell));
    }
    SceneGraph::new(objects)
}

/// Per-component measurements, exposed for diagnostics.
pub fn measure(img: &Image) -> Vec<ComponentStats> {
    let (labels, count) = label_components(img);
    component_stats(img, &labels, count)
}

#[cfg(test)]
mod tests {
    use super::super::render;
    use super::*;

    fn scene(objs: &[(Shape, Color, Size, u8, u8)]) -> SceneGraph {
        SceneGraph::new(
            objs.iter()
                .map(|&(s, c, z, col, row)| SceneObject::new(s, c, z, Cell::new(col, row).unwrap()))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn recovers_large_blue_square() {
        let s = scene(&[(Shape::Square, Color::Blue, Size::Large, 2, 1)]);
        assert_eq!(analyze(&render(&s, 256, 256).unwrap()).unwrap(), s);
    }

    #[test]
    fn exhaustive_single_objects() {
        let mut n = 0;
        for &shape in Shape::ALL {
            for &color in Color::ALL {
                for &size in Size::ALL {
                    for cell in 0..16u8 {
                        let s = scene(&[(shape, color, size, cell % 4, cell / 4)]);
                        let img = render(&s, 256, 256).unwrap();
                        assert_eq!(analyze(&img).unwrap(), s, "{s}");
                        n += 1;
                    }
                }
            }
        }
        assert_eq!(n, 3 * 8 * 2 * 16);
    }

    #[test]
    fn adjacent_cells() {
        let s = scene(&[
            (Shape::Circle, Color::White, Size::Large, 1, 2),
            (Shape::Triangle, Color::Black, Size::Large, 2, 2),
            (Shape::Square, Color::Yellow, Size::Large, 1, 3),
        ]);
        assert_eq!(analyze(&render(&s, 256, 256).unwrap()).unwrap(), s);
    }

    #[test]
    fn shape_measurements_are_well_separated() {
        for &size in Size::ALL {
            for &shape in Shape::ALL {
                let img = render(&scene(&[(shape, Color::Red, size, 0, 0)]), 256, 256).unwrap();
                let stats = &measure(&img)[0];
                let (c, f) = (stats.circularity(), stats.fill_ratio());
                match shape {
                    Shape::Circle => assert!(c >= CIRCLE_MIN_CIRCULARITY + 0.02, "{size} circle {c}"),
                    Shape::Square => assert!(c < CIRCLE_MIN_CIRCULARITY - 0.04 && f >= 0.95, "{c} {f}"),
                    Shape::Triangle => assert!(c < 0.75 && (0.45..0.65).contains(&f), "{c} {f}"),
                }
            }
        }
    }

    #[test]
    fn background_only_has_no_objects() {
        let img = Image::filled(256, 256, BACKGROUND).unwrap();
        assert_eq!(analyze(&img), Err(SceneError::NoObjects));
        // within tolerance of the background still counts as background
        let img = Image::filled(64, 64, [210, 190, 216]).unwrap();
        assert_eq!(analyze(&img), Err(SceneError::NoObjects));
    }

    #[test]
    fn too_many_objects() {
        let img = Image::from_fn(64, 64, |x, y| if x % 8 == 0 && y % 8 == 0 { [0, 0, 0] } else { BACKGROUND }).unwrap();
        assert_eq!(analyze(&img), Err(SceneError::TooManyObjects(64)));
    }

    #[test]
    fn straddling_object_is_ambiguous() {
        // a block centered on the vertical boundary between columns 0 and 1
        let img = Image::from_fn(256, 256, |x, y| {
            if (54..74).contains(&x) && (20..40).contains(&y) {
                [255, 0, 0]
            } else {
                BACKGROUND
            }
        })
        .unwrap();
        assert!(matches!(analyze(&img), Err(SceneError::Ambiguous(..))));
    }

    #[test]
    fn odd_dimensions_rejected() {
        let img = Image::filled(65, 64, BACKGROUND).unwrap();
        assert_eq!(analyze(&img), Err(SceneError::BadDimensions(65, 64)));
    }
}
