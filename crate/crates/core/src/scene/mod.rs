//! Synthetic scene domain: a 4x4 grid of flat-colored shapes.
//!
//! [`render`] draws a [`SceneGraph`] and [`analyze`] recovers it from pixels.
//! `analyze` is only guaranteed to invert `render` (at 256x256 and larger);
//! arbitrary images may be rejected.

mod analyze;
mod render;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use analyze::{analyze, measure, ComponentStats};
pub use render::render;

use crate::image::Rgb;

pub const GRID: u8 = 4;
pub const MAX_OBJECTS: usize = 4;
pub const BACKGROUND: Rgb = [200, 200, 200];

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("scene must contain 1..=4 objects, got {0}")]
    ObjectCount(usize),
    #[error("cell ({0}, {1}) is outside the 4x4 grid")]
    CellOutOfRange(u8, u8),
    #[error("two objects occupy cell ({0}, {1})")]
    DuplicateCell(u8, u8),
    #[error("image must be at least 64x64 with sides divisible by 4, got {0}x{1}")]
    BadDimensions(usize, usize),
    #[error("no objects found")]
    NoObjects,
    #[error("found {0} objects, at most 4 allowed")]
    TooManyObjects(usize),
    #[error("object near ({0:.1}, {1:.1}) cannot be assigned to a single cell")]
    Ambiguous(f64, f64),
    #[error("object near ({cx:.1}, {cy:.1}) has unrecognized shape (circularity {circularity:.3}, fill {fill:.3})")]
    UnrecognizedShape {
        cx: f64,
        cy: f64,
        circularity: f64,
        fill: f64,
    },
    #[error("scene text line {line}: {message}")]
    Text { line: usize, message: String },
}

macro_rules! word_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $word:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn word(self) -> &'static str {
                match self {
                    $($name::$variant => $word),+
                }
            }

            pub fn from_word(w: &str) -> Option<Self> {
                match w {
                    $($word => Some($name::$variant),)+
                    _ => None,
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.word())
            }
        }
    };
}

word_enum!(Shape {
    Circle => "circle",
    Square => "square",
    Triangle => "triangle",
});

word_enum!(
    /// The eight palette entries; exact RGB values come from [`Color::rgb`].
    Color {
        Red => "red",
        Green => "green",
        Blue => "blue",
        Yellow => "yellow",
        Cyan => "cyan",
        Magenta => "magenta",
        White => "white",
        Black => "black",
    }
);

word_enum!(Size {
    Small => "small",
    Large => "large",
});

impl Color {
    pub fn rgb(self) -> Rgb {
        match self {
            Color::Red => [255, 0, 0],
            Color::Green => [0, 255, 0],
            Color::Blue => [0, 0, 255],
            Color::Yellow => [255, 255, 0],
            Color::Cyan => [0, 255, 255],
            Color::Magenta => [255, 0, 255],
            Color::White => [255, 255, 255],
            Color::Black => [0, 0, 0],
        }
    }

    /// Palette entry closest in Euclidean RGB distance.
    pub fn nearest(rgb: [f64; 3]) -> Color {
        let dist = |c: &Color| {
            let p = c.rgb();
            (0..3).map(|i| (rgb[i] - p[i] as f64).powi(2)).sum::<f64>()
        };
        *Color::ALL
            .iter()
            .min_by(|a, b| dist(a).total_cmp(&dist(b)))
            .unwrap()
    }
}

impl Size {
    /// Object extent as a fraction of the cell extent.
    pub fn extent_fraction(self) -> f64 {
        match self {
            Size::Small => 0.4,
            Size::Large => 0.8,
        }
    }
}

/// Grid position as (column, row), both in `0..4`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Cell {
    pub col: u8,
    pub row: u8,
}

impl Cell {
    pub fn new(col: u8, row: u8) -> Result<Self, SceneError> {
        if col >= GRID || row >= GRID {
            return Err(SceneError::CellOutOfRange(col, row));
        }
        Ok(Self { col, row })
    }

    /// Canonical (row, column) ordering key.
    pub fn order_key(self) -> (u8, u8) {
        (self.row, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SceneObject {
    pub shape: Shape,
    pub color: Color,
    pub size: Size,
    pub cell: Cell,
}

impl SceneObject {
    pub fn new(shape: Shape, color: Color, size: Size, cell: Cell) -> Self {
        Self {
            shape,
            color,
            size,
            cell,
        }
    }

    /// Number of differing attributes among shape, color, size and cell.
    pub fn attribute_distance(&self, other: &SceneObject) -> u32 {
        (self.shape != other.shape) as u32
            + (self.color != other.color) as u32
            + (self.size != other.size) as u32
            + (self.cell != other.cell) as u32
    }
}

impl fmt::Display for SceneObject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} {}",
            self.shape, self.color, self.size, self.cell.col, self.cell.row
        )
    }
}

/// 1 to 4 objects in distinct cells, kept in (row, column) order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SceneGraph {
    objects: Vec<SceneObject>,
}

impl SceneGraph {
    /// Validates and sorts into canonical order.
    pub fn new(mut objects: Vec<SceneObject>) -> Result<Self, SceneError> {
        if objects.is_empty() || objects.len() > MAX_OBJECTS {
            return Err(SceneError::ObjectCount(objects.len()));
        }
        objects.sort_by_key(|o| o.cell.order_key());
        for pair in objects.windows(2) {
            if pair[0].cell == pair[1].cell {
                return Err(SceneError::DuplicateCell(pair[0].cell.col, pair[0].cell.row));
            }
        }
        Ok(Self { objects })
    }

    pub fn objects(&self) -> &[SceneObject] {
        &self.objects
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn object_at(&self, cell: Cell) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.cell == cell)
    }

    /// One object per line: `shape color size col row`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for o in &self.objects {
            out.push_str(&o.to_string());
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for SceneGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for SceneGraph {
    type Err = SceneError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut objects = Vec::new();
        for (i, line) in s.lines().enumerate() {
            let line_no = i + 1;
            let err = |message: String| SceneError::Text {
                line: line_no,
                message,
            };
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [shape, color, size, col, row] = fields[..] else {
                return Err(err(format!("expected 5 fields, got {}", fields.len())));
            };
            let shape = Shape::from_word(shape).ok_or_else(|| err(format!("unknown shape {shape:?}")))?;
            let color = Color::from_word(color).ok_or_else(|| err(format!("unknown color {color:?}")))?;
            let size = Size::from_word(size).ok_or_else(|| err(format!("unknown size {size:?}")))?;
            let col: u8 = col.parse().map_err(|_| err(format!("bad column {col:?}")))?;
            let row: u8 = row.parse().map_err(|_| err(format!("bad row {row:?}")))?;
            objects.push(SceneObject::new(shape, color, size, Cell::new(col, row)?));
        }
        SceneGraph::new(objects)
    }
}

/// Cost of leaving an object unmatched.
pub const UNMATCHED_COST: u32 = 4;

/// Minimum-cost matching between the two object lists.
///
/// Pairs cost their attribute distance; every unmatched object costs
/// [`UNMATCHED_COST`]. Lists hold at most four objects, so all assignments
/// are enumerated.
pub fn scene_distance(a: &SceneGraph, b: &SceneGraph) -> u32 {
    let (small, large) = if a.len() <= b.len() {
        (a.objects(), b.objects())
    } else {
        (b.objects(), a.objects())
    };
    let mut best = u32::MAX;
    let mut perm: Vec<usize> = (0..large.len()).collect();
    permute(&mut perm, 0, &mut |p| {
        let matched: u32 = small
            .iter()
            .zip(p)
            .map(|(o, &j)| o.attribute_distance(&large[j]))
            .sum();
        let unmatched = (large.len() - small.len()) as u32 * UNMATCHED_COST;
        best = best.min(matched + unmatched);
    });
    best
}

fn permute(items: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn obj(shape: Shape, color: Color, size: Size, col: u8, row: u8) -> SceneObject {
        SceneObject::new(shape, color, size, Cell::new(col, row).unwrap())
    }

    #[test]
    fn palette_is_well_separated() {
        for (i, a) in Color::ALL.iter().enumerate() {
            for b in &Color::ALL[i + 1..] {
                let d: f64 = (0..3)
                    .map(|k| (a.rgb()[k] as f64 - b.rgb()[k] as f64).powi(2))
                    .sum::<f64>()
                    .sqrt();
                assert!(d >= 128.0, "{a} vs {b}: {d}");
            }
            let bg = a.rgb().iter().zip(BACKGROUND).map(|(&p, q)| (p as i32 - q as i32).abs()).max().unwrap();
            assert!(bg > 16, "{a} is too close to the background");
        }
    }

    #[test]
    fn graph_validation() {
        assert_eq!(SceneGraph::new(vec![]), Err(SceneError::ObjectCount(0)));
        let o = obj(Shape::Circle, Color::Red, Size::Large, 1, 1);
        assert_eq!(SceneGraph::new(vec![o, o]), Err(SceneError::DuplicateCell(1, 1)));
        assert_eq!(SceneGraph::new(vec![o; 5]), Err(SceneError::ObjectCount(5)));
        assert_eq!(Cell::new(4, 0), Err(SceneError::CellOutOfRange(4, 0)));

        let a = obj(Shape::Square, Color::Blue, Size::Small, 3, 0);
        let b = obj(Shape::Square, Color::Blue, Size::Small, 0, 2);
        let g = SceneGraph::new(vec![b, o, a]).unwrap();
        let cells: Vec<_> = g.objects().iter().map(|o| (o.cell.col, o.cell.row)).collect();
        assert_eq!(cells, vec![(3, 0), (1, 1), (0, 2)]);
    }

    #[test]
    fn text_round_trip() {
        let g = SceneGraph::new(vec![
            obj(Shape::Triangle, Color::Cyan, Size::Small, 2, 3),
            obj(Shape::Circle, Color::Black, Size::Large, 0, 0),
        ])
        .unwrap();
        assert_eq!(g.to_text(), "circle black large 0 0\ntriangle cyan small 2 3\n");
        assert_eq!(g.to_text().parse::<SceneGraph>().unwrap(), g);
        assert!(matches!(
            "circle black huge 0 0".parse::<SceneGraph>(),
            Err(SceneError::Text { line: 1, .. })
        ));
        assert!("circle black large 0".parse::<SceneGraph>().is_err());
        assert_eq!("\n".parse::<SceneGraph>(), Err(SceneError::ObjectCount(0)));
    }

    #[test]
    fn distance_examples() {
        let a = obj(Shape::Circle, Color::Red, Size::Large, 1, 1);
        let g1 = SceneGraph::new(vec![a]).unwrap();
        assert_eq!(scene_distance(&g1, &g1), 0);

        let recolored = SceneObject { color: Color::Green, ..a };
        assert_eq!(scene_distance(&g1, &SceneGraph::new(vec![recolored]).unwrap()), 1);

        let extra = obj(Shape::Square, Color::Blue, Size::Small, 3, 3);
        let g2 = SceneGraph::new(vec![a, extra]).unwrap();
        assert_eq!(scene_distance(&g1, &g2), 4);
        assert_eq!(scene_distance(&g2, &g1), 4);
    }

    #[test]
    fn distance_prefers_best_assignment() {
        // swapping cells of two otherwise distinct objects costs 2, not 6
        let a = obj(Shape::Circle, Color::Red, Size::Large, 0, 0);
        let b = obj(Shape::Square, Color::Blue, Size::Small, 1, 0);
        let g1 = SceneGraph::new(vec![a, b]).unwrap();
        let g2 = SceneGraph::new(vec![
            SceneObject { cell: b.cell, ..a },
            SceneObject { cell: a.cell, ..b },
        ])
        .unwrap();
        assert_eq!(scene_distance(&g1, &g2), 2);
    }

    pub(crate) fn arb_scene() -> impl Strategy<Value = SceneGraph> {
        let attrs = (0..3usize, 0..8usize, 0..2usize);
        (
            proptest::sample::subsequence((0..16u8).collect::<Vec<_>>(), 1..=4),
            proptest::collection::vec(attrs, 4),
        )
            .prop_map(|(cells, attrs)| {
                let objects = cells
                    .iter()
                    .zip(attrs)
                    .map(|(&c, (s, k, z))| {
                        obj(Shape::ALL[s], Color::ALL[k], Size::ALL[z], c % 4, c / 4)
                    })
                    .collect();
                SceneGraph::new(objects).unwrap()
            })
    }

    proptest! {
        #[test]
        fn distance_is_a_metric(a in arb_scene(), b in arb_scene(), c in arb_scene()) {
            prop_assert_eq!(scene_distance(&a, &a), 0);
            prop_assert_eq!(scene_distance(&a, &b), scene_distance(&b, &a));
            prop_assert!(scene_distance(&a, &c) <= scene_distance(&a, &b) + scene_distance(&b, &c));
        }
    }
}
