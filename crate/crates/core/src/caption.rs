//! The caption text domain.
//!
//! Captions follow a fixed LL(1) grammar, tokens separated by single spaces:
//!
//! ```text
//! caption  := object { relation object } ;
//! object   := "a" size color shape ;
//! size     := "small" | "large" ;
//! color    := "red" | "green" | "blue" | "yellow" | "cyan" | "magenta" | "white" | "black" ;
//! shape    := "circle" | "square" | "triangle" ;
//! relation := "left of" | "right of" | "above" | "below" ;
//! ```
//!
//! A relation describes the previous object relative to the next one, so
//! `"a red circle above a blue square"` puts the square under the circle.
//! Captions carry no absolute positions: [`parse`] anchors the first object
//! at cell (1, 1) and places each following object in the nearest free cell
//! in the stated direction from the previous one. Scenes laid out that way
//! are exactly the fixed points of `parse(describe(s))`; see
//! [`canonical_layout`].

use std::fmt;

use thiserror::Error;

use crate::scene::{Cell, Color, SceneGraph, SceneObject, Shape, Size, GRID, MAX_OBJECTS};

/// Cell of the first object in a parsed caption.
pub const ANCHOR: (u8, u8) = (1, 1);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CaptionError {
    #[error("empty caption")]
    Empty,
    #[error("at byte {offset}: expected {expected}, found {found}")]
    Syntax {
        offset: usize,
        expected: &'static str,
        found: String,
    },
    #[error("at byte {offset}: tokens must be separated by exactly one space")]
    Spacing { offset: usize },
    #[error("at byte {offset}: no free cell {relation} object {anchor_index}")]
    Placement {
        offset: usize,
        relation: &'static str,
        anchor_index: usize,
    },
    #[error("at byte {offset}: more than {MAX_OBJECTS} objects")]
    TooManyObjects { offset: usize },
}

impl CaptionError {
    /// Byte offset of the error, when it points into the input.
    pub fn offset(&self) -> Option<usize> {
        match self {
            Self::Empty => None,
            Self::Syntax { offset, .. }
            | Self::Spacing { offset }
            | Self::Placement { offset, .. }
            | Self::TooManyObjects { offset } => Some(*offset),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    LeftOf,
    RightOf,
    Above,
    Below,
}

impl Relation {
    pub const ALL: [Relation; 4] = [Relation::LeftOf, Relation::RightOf, Relation::Above, Relation::Below];

    pub fn phrase(self) -> &'static str {
        match self {
            Relation::LeftOf => "left of",
            Relation::RightOf => "right of",
            Relation::Above => "above",
            Relation::Below => "below",
        }
    }

    /// Relation of `prev` to `next`: rows dominate, columns break ties.
    pub fn between(prev: Cell, next: Cell) -> Relation {
        use std::cmp::Ordering::*;
        match (prev.row.cmp(&next.row), prev.col.cmp(&next.col)) {
            (Less, _) => Relation::Above,
            (Greater, _) => Relation::Below,
            (Equal, Greater) => Relation::RightOf,
            (Equal, _) => Relation::LeftOf,
        }
    }

    /// Grid step from the previous object toward the next one.
    fn step(self) -> (i8, i8) {
        match self {
            Relation::LeftOf => (1, 0),
            Relation::RightOf => (-1, 0),
            Relation::Above => (0, 1),
            Relation::Below => (0, -1),
        }
    }
}

/// A caption string. Produced by [`describe`] or wrapped from parsed input.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Caption(String);

impl Caption {
    /// Wraps `text` after checking that it parses.
    pub fn new(text: impl Into<String>) -> Result<Self, CaptionError> {
        let text = text.into();
        parse(&text)?;
        Ok(Self(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.0.as_bytes()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for Caption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Caption {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

fn push_object(out: &mut String, o: &SceneObject) {
    out.push_str("a ");
    out.push_str(o.size.word());
    out.push(' ');
    out.push_str(o.color.word());
    out.push(' ');
    out.push_str(o.shape.word());
}

/// Realizes a scene as a caption, objects in canonical order.
pub fn describe(scene: &SceneGraph) -> Caption {
    let mut out = String::new();
    let mut prev: Option<&SceneObject> = None;
    for o in scene.objects() {
        if let Some(p) = prev {
            out.push(' ');
            out.push_str(Relation::between(p.cell, o.cell).phrase());
            out.push(' ');
        }
        push_object(&mut out, o);
        prev = Some(o);
    }
    Caption(out)
}

/// Re-anchors a scene to the layout its caption encodes.
pub fn canonical_layout(scene: &SceneGraph) -> Result<SceneGraph, CaptionError> {
    parse(describe(scene).as_str())
}

#[derive(Clone, Copy, Debug)]
struct Token<'a> {
    text: &'a [u8],
    offset: usize,
}

/// Splits on single spaces; anything else around separators is an error.
struct Lexer<'a> {
    input: &'a [u8],
    pos: usize,
    peeked: Option<Option<Token<'a>>>,
}

impl<'a> Lexer<'a> {
    fn new(input: &'a [u8]) -> Self {
        Self {
            input,
            pos: 0,
            peeked: None,
        }
    }

    fn scan(&mut self) -> Result<Option<Token<'a>>, CaptionError> {
        if self.pos >= self.input.len() {
            return Ok(None);
        }
        if self.pos > 0 {
            // the previous token stopped on a space
            debug_assert_eq!(self.input[self.pos], b' ');
            self.pos += 1;
            if self.pos == self.input.len() {
                return Err(CaptionError::Spacing { offset: self.pos - 1 });
            }
            if self.input[self.pos] == b' ' {
                return Err(CaptionError::Spacing { offset: self.pos });
            }
        } else if self.input[0] == b' ' {
            return Err(CaptionError::Spacing { offset: 0 });
        }
        let start = self.pos;
        while self.pos < self.input.len() && self.input[self.pos] != b' ' {
            self.pos += 1;
        }
        Ok(Some(Token {
            text: &self.input[start..self.pos],
            offset: start,
        }))
    }

    fn peek(&mut self) -> Result<Option<Token<'a>>, CaptionError> {
        if self.peeked.is_none() {
            self.peeked = Some(self.scan()?);
        }
        Ok(self.peeked.unwrap())
    }

    fn next(&mut self) -> Result<Option<Token<'a>>, CaptionError> {
        let tok = self.peek()?;
        self.peeked = None;
        Ok(tok)
    }

    fn end_offset(&self) -> usize {
        self.input.len()
    }
}

fn describe_token(tok: Option<Token<'_>>) -> String {
    match tok {
        Some(t) => format!("{:?}", String::from_utf8_lossy(t.text)),
        None => "end of input".to_string(),
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
}

impl<'a> Parser<'a> {
    fn expect_word<T>(
        &mut self,
        expected: &'static str,
        lookup: impl Fn(&str) -> Option<T>,
    ) -> Result<(T, usize), CaptionError> {
        let tok = self.lexer.next()?;
        let offset = tok.map_or(self.lexer.end_offset(), |t| t.offset);
        tok.and_then(|t| std::str::from_utf8(t.text).ok())
            .and_then(lookup)
            .map(|v| (v, offset))
            .ok_or_else(|| CaptionError::Syntax {
                offset,
                expected,
                found: describe_token(tok),
            })
    }

    /// object := "a" size color shape
    fn object(&mut self) -> Result<(Shape, Color, Size, usize), CaptionError> {
        let ((), offset) = self.expect_word("\"a\"", |w| (w == "a").then_some(()))?;
        let (size, _) = self.expect_word("a size", Size::from_word)?;
        let (color, _) = self.expect_word("a color", Color::from_word)?;
        let (shape, _) = self.expect_word("a shape", Shape::from_word)?;
        Ok((shape, color, size, offset))
    }

    /// relation := "left of" | "right of" | "above" | "below"
    fn relation(&mut self) -> Result<(Relation, usize), CaptionError> {
        let (first, offset) = self.expect_word("a relation", |w| match w {
            "left" => Some(Relation::LeftOf),
            "right" => Some(Relation::RightOf),
            "above" => Some(Relation::Above),
            "below" => Some(Relation::Below),
            _ => None,
        })?;
        if matches!(first, Relation::LeftOf | Relation::RightOf) {
            self.expect_word("\"of\"", |w| (w == "of").then_some(()))?;
        }
        Ok((first, offset))
    }

    /// caption := object { relation object }
    fn caption(&mut self) -> Result<Vec<(Shape, Color, Size, Option<(Relation, usize)>)>, CaptionError> {
        let (shape, color, size, _) = self.object()?;
        let mut items = vec![(shape, color, size, None)];
        while self.lexer.peek()?.is_some() {
            let rel = self.relation()?;
            let (shape, color, size, offset) = self.object()?;
            if items.len() == MAX_OBJECTS {
                return Err(CaptionError::TooManyObjects { offset });
            }
            items.push((shape, color, size, Some(rel)));
        }
        Ok(items)
    }
}

fn place(occupied: &[Cell], from: Cell, relation: Relation) -> Option<Cell> {
    let (dx, dy) = relation.step();
    let (mut col, mut row) = (from.col as i8, from.row as i8);
    loop {
        col += dx;
        row += dy;
        if !(0..GRID as i8).contains(&col) || !(0..GRID as i8).contains(&row) {
            return None;
        }
        let cell = Cell::new(col as u8, row as u8).ok()?;
        if !occupied.contains(&cell) {
            return Some(cell);
        }
    }
}

/// Parses arbitrary bytes; never panics.
pub fn parse_bytes(input: &[u8]) -> Result<SceneGraph, CaptionError> {
    if input.is_empty() {
        return Err(CaptionError::Empty);
    }
    let mut parser = Parser {
        lexer: Lexer::new(input),
    };
    let items = parser.caption()?;

    let mut objects: Vec<SceneObject> = Vec::with_capacity(items.len());
    for (shape, color, size, rel) in items {
        let cell = match rel {
            None => Cell::new(ANCHOR.0, ANCHOR.1).expect("anchor is on the grid"),
            Some((relation, offset)) => {
                let prev = objects.last().expect("relations follow an object").cell;
                let occupied: Vec<Cell> = objects.iter().map(|o| o.cell).collect();
                place(&occupied, prev, relation).ok_or(CaptionError::Placement {
                    offset,
                    relation: relation.phrase(),
                    anchor_index: objects.len() - 1,
                })?
            }
        };
        objects.push(SceneObject::new(shape, color, size, cell));
    }
    // placement keeps cells distinct and the count was bounded while parsing
    Ok(SceneGraph::new(objects).expect("parsed objects form a valid scene"))
}

/// Parses a caption into the scene it encodes.
pub fn parse(text: &str) -> Result<SceneGraph, CaptionError> {
    parse_bytes(text.as_bytes())
}

/// Whether `text` parses.
pub fn validate(text: &str) -> bool {
    parse(text).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn obj(shape: Shape, color: Color, size: Size, col: u8, row: u8) -> SceneObject {
        SceneObject::new(shape, color, size, Cell::new(col, row).unwrap())
    }

    #[test]
    fn describe_examples() {
        let s = SceneGraph::new(vec![obj(Shape::Circle, Color::Red, Size::Large, 1, 1)]).unwrap();
        assert_eq!(describe(&s).as_str(), "a large red circle");

        let s = SceneGraph::new(vec![
            obj(Shape::Square, Color::Blue, Size::Small, 0, 0),
            obj(Shape::Triangle, Color::Green, Size::Large, 0, 2),
        ])
        .unwrap();
        assert_eq!(describe(&s).as_str(), "a small blue square above a large green triangle");
    }

    #[test]
    fn parse_examples() {
        assert_eq!(
            parse("a large red circle").unwrap(),
            SceneGraph::new(vec![obj(Shape::Circle, Color::Red, Size::Large, 1, 1)]).unwrap()
        );
        let err = parse("a red circle").unwrap_err();
        assert_eq!(err.offset(), Some(2));
        assert!(matches!(err, CaptionError::Syntax { expected: "a size", .. }));
        assert_eq!(parse(""), Err(CaptionError::Empty));
    }

    #[test]
    fn relations_place_in_stated_direction() {
        let g = parse("a small blue square above a large green triangle").unwrap();
        let cells: Vec<_> = g.objects().iter().map(|o| (o.cell.col, o.cell.row)).collect();
        assert_eq!(cells, vec![(1, 1), (1, 2)]);

        let g = parse("a small blue square right of a large green triangle").unwrap();
        assert_eq!(g.objects()[0].cell, Cell::new(0, 1).unwrap());
        assert_eq!(g.objects()[0].shape, Shape::Triangle);

        let g = parse("a small blue square below a large red circle").unwrap();
        assert_eq!(g.objects()[0].cell, Cell::new(1, 0).unwrap());
    }

    #[test]
    fn placement_skips_occupied_cells() {
        // (1,1) -> below goes to (1,2) -> "below" puts the third object above
        // (1,2), skipping the occupied (1,1) to reach (1,0)
        let g = parse("a small red circle above a small red square below a small red triangle").unwrap();
        let tri = g.objects().iter().find(|o| o.shape == Shape::Triangle).unwrap();
        assert_eq!(tri.cell, Cell::new(1, 0).unwrap());
    }

    #[test]
    fn placement_errors() {
        let err = parse("a small red circle right of a small red square right of a small red triangle").unwrap_err();
        assert!(matches!(err, CaptionError::Placement { relation: "right of", anchor_index: 1, .. }), "{err}");
        assert_eq!(err.offset(), Some(47));

        let err = parse("a small red circle below a small red square below a small red triangle").unwrap_err();
        assert!(matches!(err, CaptionError::Placement { .. }));
    }

    #[test]
    fn too_many_objects() {
        let five = "a small red circle above a small red circle left of a small red circle \
                    above a small red circle left of a small red circle";
        assert!(matches!(parse(five), Err(CaptionError::TooManyObjects { .. })));
    }

    #[test]
    fn validate_examples() {
        assert!(validate("a small cyan triangle"));
        assert!(!validate("the small cyan triangle"));
        assert!(!validate(""));
        assert!(!validate("a small cyan triangle "));
        assert!(!validate(" a small cyan triangle"));
        assert!(!validate("a  small cyan triangle"));
        assert!(!validate("a small cyan triangle left a small red circle"));
        assert!(!validate("a small cyan triangle above"));
        assert!(!validate("A small cyan triangle"));
    }

    #[test]
    fn spacing_offsets() {
        assert_eq!(parse(" a").unwrap_err().offset(), Some(0));
        assert_eq!(parse("a  small").unwrap_err(), CaptionError::Spacing { offset: 2 });
        assert_eq!(parse("a small red circle ").unwrap_err(), CaptionError::Spacing { offset: 18 });
    }

    #[test]
    fn unreachable_layouts_are_rejected_by_round_trip() {
        // four in a row cannot be re-anchored from (1,1)
        let s = SceneGraph::new((0..4).map(|c| obj(Shape::Circle, Color::Red, Size::Small, c, 0)).collect()).unwrap();
        assert!(canonical_layout(&s).is_err());
    }

    fn all_layouts(n: usize) -> Vec<Vec<u8>> {
        fn rec(start: u8, n: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
            if cur.len() == n {
                out.push(cur.clone());
                return;
            }
            for c in start..16 {
                cur.push(c);
                rec(c + 1, n, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(0, n, &mut Vec::new(), &mut out);
        out
    }

    #[test]
    fn four_object_caption_length() {
        // longest words everywhere: "magenta" and "triangle"
        let mut longest = 0;
        let mut longest_realizable = 0;
        for cells in all_layouts(4) {
            let s = SceneGraph::new(
                cells.iter().map(|&c| obj(Shape::Triangle, Color::Magenta, Size::Large, c % 4, c / 4)).collect(),
            )
            .unwrap();
            let len = describe(&s).len();
            longest = longest.max(len);
            if canonical_layout(&s).is_ok_and(|c| c == s) {
                longest_realizable = longest_realizable.max(len);
            }
        }
        assert_eq!(longest, 24 + 3 * 33);
        assert_eq!(longest_realizable, 24 + 2 * 33 + 31);
    }

    #[test]
    fn canonical_layout_is_a_projection() {
        for n in 1..=4 {
            for cells in all_layouts(n) {
                let s = SceneGraph::new(
                    cells.iter().map(|&c| obj(Shape::Circle, Color::Red, Size::Small, c % 4, c / 4)).collect(),
                )
                .unwrap();
                if let Ok(c) = canonical_layout(&s) {
                    assert_eq!(describe(&c), describe(&s));
                    assert_eq!(canonical_layout(&c).unwrap(), c);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn parse_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..200)) {
            let _ = parse_bytes(&bytes);
        }

        #[test]
        fn parse_never_panics_on_near_grammar_text(words in proptest::collection::vec(
            proptest::sample::select(vec!["a", "small", "large", "red", "blue", "circle", "square",
                "triangle", "left", "right", "of", "above", "below", "", "the"]), 0..24)) {
            let text = words.join(" ");
            let _ = parse(&text);
        }
    }
}
