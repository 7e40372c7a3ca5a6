//! Formal SignWriting in ASCII (FSW).
//!
//! A sign is written as an optional temporal sort prefix (`A` followed by one
//! or more bare symbol ids), a box marker with the maximum coordinate, and a
//! list of placed symbols:
//!
//! ```text
//! [A(Sxxxxx)+]? [BLMR] <x>x<y> (Sxxxxx<x>x<y>)*
//! ```
//!
//! Multi-sign text separates fragments with single spaces. A fragment that
//! starts with `S` is a standalone punctuation symbol with a position and no
//! box.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest symbol base accepted in the vocabulary.
pub const BASE_MIN: u16 = 0x100;
/// Largest symbol base accepted in lenient mode (656 bases in total).
pub const BASE_MAX: u16 = 0x38f;
/// Largest base defined by the symbol set; used by strict validation.
pub const BASE_MAX_STRICT: u16 = 0x38b;
/// Punctuation bases, which only appear as standalone fragments.
pub const PUNCTUATION: std::ops::RangeInclusive<u16> = 0x387..=0x38b;

pub const COORD_MIN: u16 = 250;
pub const COORD_MAX: u16 = 749;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed sign in fragment {fragment} at byte {offset}: {reason}")]
pub struct MalformedSign {
    /// Index of the space-separated fragment (0 for single-sign parsing).
    pub fragment: usize,
    /// Byte offset into the full input text.
    pub offset: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    #[default]
    Lenient,
    /// Additionally rejects the unassigned bases `0x38c..=0x38f`.
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolId {
    base: u16,
    fill: u8,
    rotation: u8,
}

impl SymbolId {
    pub fn new(base: u16, fill: u8, rotation: u8) -> Option<Self> {
        ((BASE_MIN..=BASE_MAX).contains(&base) && fill <= 5 && rotation <= 0xf).then_some(Self {
            base,
            fill,
            rotation,
        })
    }

    pub fn base(&self) -> u16 {
        self.base
    }

    pub fn fill(&self) -> u8 {
        self.fill
    }

    pub fn rotation(&self) -> u8 {
        self.rotation
    }

    pub fn is_punctuation(&self) -> bool {
        PUNCTUATION.contains(&self.base)
    }
}

impl fmt::Display for SymbolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{:03x}{:x}{:x}", self.base, self.fill, self.rotation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coordinate {
    x: u16,
    y: u16,
}

impl Coordinate {
    pub fn new(x: u16, y: u16) -> Option<Self> {
        (in_range(x) && in_range(y)).then_some(Self { x, y })
    }

    pub fn x(&self) -> u16 {
        self.x
    }

    pub fn y(&self) -> u16 {
        self.y
    }
}

fn in_range(v: u16) -> bool {
    (COORD_MIN..=COORD_MAX).contains(&v)
}

impl fmt::Display for Coordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:03}x{:03}", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PlacedSymbol {
    pub id: SymbolId,
    pub at: Coordinate,
}

impl fmt::Display for PlacedSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.id, self.at)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoxKind {
    B,
    L,
    M,
    R,
}

impl BoxKind {
    pub const ALL: [BoxKind; 4] = [BoxKind::B, BoxKind::L, BoxKind::M, BoxKind::R];

    pub fn as_char(self) -> char {
        match self {
            BoxKind::B => 'B',
            BoxKind::L => 'L',
            BoxKind::M => 'M',
            BoxKind::R => 'R',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'B' => Some(BoxKind::B),
            'L' => Some(BoxKind::L),
            'M' => Some(BoxKind::M),
            'R' => Some(BoxKind::R),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FswSign {
    /// Temporal sort prefix; `None` when the sign has no `A` section.
    pub sort_prefix: Option<Vec<SymbolId>>,
    pub box_kind: BoxKind,
    pub max: Coordinate,
    /// Placed symbols in source order. Never contains punctuation bases.
    pub symbols: Vec<PlacedSymbol>,
}

impl fmt::Display for FswSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(prefix) = &self.sort_prefix {
            f.write_str("A")?;
            for id in prefix {
                write!(f, "{id}")?;
            }
        }
        write!(f, "{}{}", self.box_kind.as_char(), self.max)?;
        for symbol in &self.symbols {
            write!(f, "{symbol}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SequenceItem {
    Sign(FswSign),
    Punctuation(PlacedSymbol),
}

impl fmt::Display for SequenceItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SequenceItem::Sign(sign) => sign.fmt(f),
            SequenceItem::Punctuation(symbol) => symbol.fmt(f),
        }
    }
}

/// Signs and standalone punctuation in their original interleaving.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct FswSequence {
    pub items: Vec<SequenceItem>,
}

impl FswSequence {
    pub fn new(items: Vec<SequenceItem>) -> Self {
        Self { items }
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Number of visual units: boxed signs plus standalone punctuation.
    pub fn sign_count(&self) -> usize {
        self.items.len()
    }

    pub fn signs(&self) -> impl Iterator<Item = &FswSign> {
        self.items.iter().filter_map(|item| match item {
            SequenceItem::Sign(sign) => Some(sign),
            SequenceItem::Punctuation(_) => None,
        })
    }
}

impl fmt::Display for FswSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, item) in self.items.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            item.fmt(f)?;
        }
        Ok(())
    }
}

impl FromStr for FswSequence {
    type Err = MalformedSign;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_sequence(s)
    }
}

impl FromStr for FswSign {
    type Err = MalformedSign;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_sign(s)
    }
}

pub fn parse_sign(text: &str) -> Result<FswSign, MalformedSign> {
    parse_sign_with(text, ParseMode::Lenient)
}

pub fn parse_sign_with(text: &str, mode: ParseMode) -> Result<FswSign, MalformedSign> {
    let mut cursor = Cursor::new(text, 0, 0, mode);
    let sign = cursor.sign()?;
    cursor.finish()?;
    Ok(sign)
}

pub fn parse_sequence(text: &str) -> Result<FswSequence, MalformedSign> {
    parse_sequence_with(text, ParseMode::Lenient)
}

pub fn parse_sequence_with(text: &str, mode: ParseMode) -> Result<FswSequence, MalformedSign> {
    if text.is_empty() {
        return Ok(FswSequence::default());
    }
    let mut items = Vec::new();
    let mut start = 0;
    for (fragment, piece) in text.split(' ').enumerate() {
        let mut cursor = Cursor::new(piece, start, fragment, mode);
        let item = if piece.starts_with('S') {
            SequenceItem::Punctuation(cursor.punctuation()?)
        } else {
            SequenceItem::Sign(cursor.sign()?)
        };
        cursor.finish()?;
        items.push(item);
        start += piece.len() + 1;
    }
    Ok(FswSequence { items })
}

pub fn serialize(sequence: &FswSequence) -> String {
    sequence.to_string()
}

pub fn count_signs(text: &str) -> Result<usize, MalformedSign> {
    parse_sequence(text).map(|seq| seq.sign_count())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    base_offset: usize,
    fragment: usize,
    mode: ParseMode,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str, base_offset: usize, fragment: usize, mode: ParseMode) -> Self {
        Self {
            bytes: text.as_bytes(),
            pos: 0,
            base_offset,
            fragment,
            mode,
        }
    }

    fn error_at(&self, pos: usize, reason: impl Into<String>) -> MalformedSign {
        MalformedSign {
            fragment: self.fragment,
            offset: self.base_offset + pos,
            reason: reason.into(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn expect(&mut self, want: u8, what: &str) -> Result<(), MalformedSign> {
        match self.peek() {
            Some(b) if b == want => {
                self.pos += 1;
                Ok(())
            }
            Some(_) => Err(self.error_at(self.pos, format!("expected {what}"))),
            None => Err(self.error_at(self.pos, format!("truncated: expected {what}"))),
        }
    }

    fn hex_digit(&mut self) -> Result<u8, MalformedSign> {
        let b = self
            .peek()
            .ok_or_else(|| self.error_at(self.pos, "truncated symbol"))?;
        let v = (b as char)
            .to_digit(16)
            .ok_or_else(|| self.error_at(self.pos, format!("invalid hex digit {:?}", b as char)))?;
        self.pos += 1;
        Ok(v as u8)
    }

    fn symbol_id(&mut self) -> Result<SymbolId, MalformedSign> {
        let start = self.pos;
        self.expect(b'S', "symbol marker 'S'")?;
        let mut base = 0u16;
        for _ in 0..3 {
            base = base * 16 + self.hex_digit()? as u16;
        }
        let fill_pos = self.pos;
        let fill = self.hex_digit()?;
        let rotation = self.hex_digit()?;
        let upper = match self.mode {
            ParseMode::Lenient => BASE_MAX,
            ParseMode::Strict => BASE_MAX_STRICT,
        };
        if !(BASE_MIN..=upper).contains(&base) {
            return Err(self.error_at(start + 1, format!("symbol base {base:03x} out of range")));
        }
        if fill > 5 {
            return Err(self.error_at(fill_pos, format!("fill {fill:x} out of range 0..5")));
        }
        Ok(SymbolId { base, fill, rotation })
    }

    fn number(&mut self) -> Result<u16, MalformedSign> {
        let start = self.pos;
        let mut value = 0u16;
        for _ in 0..3 {
            match self.peek() {
                Some(b) if b.is_ascii_digit() => {
                    value = value * 10 + (b - b'0') as u16;
                    self.pos += 1;
                }
                Some(_) => return Err(self.error_at(self.pos, "expected decimal digit")),
                None => return Err(self.error_at(self.pos, "truncated coordinate")),
            }
        }
        if !in_range(value) {
            return Err(self.error_at(
                start,
                format!("coordinate {value} outside {COORD_MIN}..={COORD_MAX}"),
            ));
        }
        Ok(value)
    }

    fn coordinate(&mut self) -> Result<Coordinate, MalformedSign> {
        let x = self.number()?;
        self.expect(b'x', "coordinate separator 'x'")?;
        let y = self.number()?;
        Ok(Coordinate { x, y })
    }

    fn sign(&mut self) -> Result<FswSign, MalformedSign> {
        let sort_prefix = if self.peek() == Some(b'A') {
            self.pos += 1;
            let mut ids = Vec::new();
            while self.peek() == Some(b'S') {
                ids.push(self.symbol_id()?);
            }
            if ids.is_empty() {
                return Err(self.error_at(self.pos, "empty sort prefix"));
            }
            Some(ids)
        } else {
            None
        };
        let box_kind = match self.peek() {
            Some(b) => BoxKind::from_char(b as char)
                .ok_or_else(|| self.error_at(self.pos, format!("invalid box marker {:?}", b as char)))?,
            None => return Err(self.error_at(self.pos, "truncated: expected box marker")),
        };
        self.pos += 1;
        let max = self.coordinate()?;
        let mut symbols = Vec::new();
        while self.pos < self.bytes.len() {
            let start = self.pos;
            let id = self.symbol_id()?;
            if id.is_punctuation() {
                return Err(self.error_at(start, "punctuation symbol inside a sign box"));
            }
            let at = self.coordinate()?;
            symbols.push(PlacedSymbol { id, at });
        }
        Ok(FswSign {
            sort_prefix,
            box_kind,
            max,
            symbols,
        })
    }

    fn punctuation(&mut self) -> Result<PlacedSymbol, MalformedSign> {
        let start = self.pos;
        let id = self.symbol_id()?;
        if !id.is_punctuation() {
            return Err(self.error_at(start, "standalone symbol is not punctuation"));
        }
        let at = self.coordinate()?;
        Ok(PlacedSymbol { id, at })
    }

    fn finish(&self) -> Result<(), MalformedSign> {
        if self.pos == self.bytes.len() {
            Ok(())
        } else {
            Err(self.error_at(self.pos, "unexpected trailing input"))
        }
    }
}
