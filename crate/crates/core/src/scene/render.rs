use super::{SceneError, SceneGraph, SceneObject, Shape, BACKGROUND, GRID};
use crate::image::Image;

pub(crate) const MIN_SIDE: usize = 64;

pub(crate) fn check_dimensions(width: usize, height: usize) -> Result<(), SceneError> {
    if width < MIN_SIDE || height < MIN_SIDE || width % 4 != 0 || height % 4 != 0 {
        return Err(SceneError::BadDimensions(width, height));
    }
    Ok(())
}

/// Cell geometry for an image of the given size.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Grid {
    pub cell_w: usize,
    pub cell_h: usize,
}

impl Grid {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            cell_w: width / GRID as usize,
            cell_h: height / GRID as usize,
        }
    }

    /// Side length that object sizes are measured against.
    pub fn extent(&self) -> f64 {
        self.cell_w.min(self.cell_h) as f64
    }

    pub fn center(&self, col: u8, row: u8) -> (f64, f64) {
        (
            (col as usize * self.cell_w) as f64 + self.cell_w as f64 / 2.0,
            (row as usize * self.cell_h) as f64 + self.cell_h as f64 / 2.0,
        )
    }
}

/// Whether the pixel whose center sits at offset (dx, dy) from the object
/// center is covered by a shape with bounding side `side`.
fn covers(shape: Shape, side: f64, dx: f64, dy: f64) -> bool {
    let half = side / 2.0;
    match shape {
        Shape::Circle => dx * dx + dy * dy <= half * half,
        Shape::Square => dx.abs() <= half && dy.abs() <= half,
        // apex at the top center, base along the bottom edge
        Shape::Triangle => dy <= half && dx.abs() <= (dy + half) / 2.0,
    }
}

fn covers_pixel(grid: &Grid, obj: &SceneObject, x: usize, y: usize) -> bool {
    let (cx, cy) = grid.center(obj.cell.col, obj.cell.row);
    let side = obj.size.extent_fraction() * grid.extent();
    covers(obj.shape, side, x as f64 + 0.5 - cx, y as f64 + 0.5 - cy)
}

/// Draws each object centered in its cell on a flat background, with exact
/// palette colors and no anti-aliasing.
pub fn render(scene: &SceneGraph, width: usize, height: usize) -> Result<Image, SceneError> {
    check_dimensions(width, height)?;
    let grid = Grid::new(width, height);
    let mut lookup = [None; (GRID * GRID) as usize];
    for obj in scene.objects() {
        lookup[(obj.cell.row * GRID + obj.cell.col) as usize] = Some(obj);
    }
    let img = Image::from_fn(width, height, |x, y| {
        let col = (x / grid.cell_w).min(GRID as usize - 1);
        let row = (y / grid.cell_h).min(GRID as usize - 1);
        match lookup[row * GRID as usize + col] {
            Some(obj) if covers_pixel(&grid, obj, x, y) => obj.color.rgb(),
            _ => BACKGROUND,
        }
    })
    .expect("dimensions already validated");
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::super::{Cell, Color, SceneObject, Size};
    use super::*;

    fn single(shape: Shape, color: Color, size: Size, col: u8, row: u8) -> SceneGraph {
        SceneGraph::new(vec![SceneObject::new(shape, color, size, Cell::new(col, row).unwrap())]).unwrap()
    }

    #[test]
    fn circle_pixel_checks() {
        let img = render(&single(Shape::Circle, Color::Red, Size::Large, 0, 0), 256, 256).unwrap();
        assert_eq!(img.get(32, 32), [255, 0, 0]);
        assert_eq!(img.get(160, 160), BACKGROUND);
        assert_eq!(img.get(0, 0), BACKGROUND);
    }

    #[test]
    fn rejects_bad_dimensions() {
        let s = single(Shape::Square, Color::Blue, Size::Small, 0, 0);
        assert_eq!(render(&s, 60, 64), Err(SceneError::BadDimensions(60, 64)));
        assert_eq!(render(&s, 66, 64), Err(SceneError::BadDimensions(66, 64)));
        assert!(render(&s, 64, 64).is_ok());
    }

    #[test]
    fn deterministic() {
        let s = single(Shape::Triangle, Color::Cyan, Size::Large, 3, 2);
        assert_eq!(render(&s, 256, 256).unwrap(), render(&s, 256, 256).unwrap());
    }

    #[test]
    fn square_extent_matches_size_rule() {
        // 80% of a 64 px cell is 51.2 px; 40% is 25.6 px
        for (size, expect) in [(Size::Large, 51), (Size::Small, 25)] {
            let img = render(&single(Shape::Square, Color::Green, size, 1, 1), 256, 256).unwrap();
            let row: usize = (64..128).filter(|&x| img.get(x, 96) != BACKGROUND).count();
            assert!((row as i64 - expect).abs() <= 1, "{size}: {row}");
        }
    }
}
