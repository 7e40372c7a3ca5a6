//! Component-level tokenization of FSW sequences.
//!
//! Each sign becomes `box p<x> p<y>` followed by `S<base> c<fill> r<rot>
//! p<x> p<y>` per symbol. The `x` separators and the `S` of the full
//! symbol id disappear, and the sort prefix is dropped. The closed token
//! inventory has 1182 entries.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::fsw::{
    BoxKind, Coordinate, FswSequence, FswSign, PlacedSymbol, SequenceItem, SymbolId, BASE_MAX,
    BASE_MIN, COORD_MAX, COORD_MIN,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Token {
    Box(BoxKind),
    SymbolBase(u16),
    Fill(u8),
    Rotation(u8),
    Position(u16),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Box,
    SymbolBase,
    Fill,
    Rotation,
    Position,
}

impl Token {
    pub fn kind(&self) -> TokenKind {
        match self {
            Token::Box(_) => TokenKind::Box,
            Token::SymbolBase(_) => TokenKind::SymbolBase,
            Token::Fill(_) => TokenKind::Fill,
            Token::Rotation(_) => TokenKind::Rotation,
            Token::Position(_) => TokenKind::Position,
        }
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Box(b) => write!(f, "{}", b.as_char()),
            Token::SymbolBase(base) => write!(f, "S{base:03x}"),
            Token::Fill(fill) => write!(f, "c{fill}"),
            Token::Rotation(rot) => write!(f, "r{rot:x}"),
            Token::Position(p) => write!(f, "p{p:03}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TokenError {
    #[error("unknown token {0:?}")]
    UnknownToken(String),
    #[error("unknown token id {0}")]
    UnknownId(u32),
    #[error("malformed token stream at token {index}: {reason}")]
    MalformedTokenStream { index: usize, reason: String },
}

impl FromStr for Token {
    type Err = TokenError;

    /// Accepts only canonical surface forms (lowercase hex, 3-digit positions).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || TokenError::UnknownToken(s.to_string());
        let mut chars = s.chars();
        let head = chars.next().ok_or_else(unknown)?;
        let rest = chars.as_str();
        let is_lower_hex = |t: &str| t.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b));
        let token = match head {
            'B' | 'L' | 'M' | 'R' if rest.is_empty() => {
                Token::Box(BoxKind::from_char(head).ok_or_else(unknown)?)
            }
            'S' if rest.len() == 3 && is_lower_hex(rest) => {
                let base = u16::from_str_radix(rest, 16).map_err(|_| unknown())?;
                if !(BASE_MIN..=BASE_MAX).contains(&base) {
                    return Err(unknown());
                }
                Token::SymbolBase(base)
            }
            'c' if rest.len() == 1 && matches!(rest.as_bytes()[0], b'0'..=b'5') => {
                Token::Fill(rest.as_bytes()[0] - b'0')
            }
            'r' if rest.len() == 1 && is_lower_hex(rest) => {
                Token::Rotation(u8::from_str_radix(rest, 16).map_err(|_| unknown())?)
            }
            'p' if rest.len() == 3 && rest.bytes().all(|b| b.is_ascii_digit()) => {
                let p: u16 = rest.parse().map_err(|_| unknown())?;
                if !(COORD_MIN..=COORD_MAX).contains(&p) {
                    return Err(unknown());
                }
                Token::Position(p)
            }
            _ => return Err(unknown()),
        };
        Ok(token)
    }
}

/// Bidirectional token / id mapping over the closed inventory. Ids are
/// offsets into the contiguous kind ranges, so no lookup table is stored.
#[derive(Debug, Clone)]
pub struct TokenVocabulary {
    tokens: Vec<Token>,
}

const BASES: u32 = (BASE_MAX - BASE_MIN + 1) as u32;
const FILL_START: u32 = 4 + BASES;
const ROTATION_START: u32 = FILL_START + 6;
const POSITION_START: u32 = ROTATION_START + 16;

impl TokenVocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    /// Surface forms in id order.
    pub fn texts(&self) -> impl Iterator<Item = String> + '_ {
        self.tokens.iter().map(Token::to_string)
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        token.parse::<Token>().ok().map(|t| self.id_of(t))
    }

    /// Every well-formed [`Token`] is in the vocabulary.
    pub fn id_of(&self, token: Token) -> u32 {
        match token {
            Token::Box(b) => BoxKind::ALL.iter().position(|k| *k == b).expect("all boxes listed") as u32,
            Token::SymbolBase(base) => 4 + (base - BASE_MIN) as u32,
            Token::Fill(f) => FILL_START + f as u32,
            Token::Rotation(r) => ROTATION_START + r as u32,
            Token::Position(p) => POSITION_START + (p - COORD_MIN) as u32,
        }
    }

    pub fn token(&self, id: u32) -> Option<Token> {
        self.tokens.get(id as usize).copied()
    }

    pub fn count_kind(&self, kind: TokenKind) -> usize {
        self.tokens.iter().filter(|t| t.kind() == kind).count()
    }

    pub fn encode_ids<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<u32>, TokenError> {
        tokens
            .iter()
            .map(|t| {
                let t = t.as_ref();
                self.id(t).ok_or_else(|| TokenError::UnknownToken(t.to_string()))
            })
            .collect()
    }

    pub fn encode_tokens(&self, tokens: &[Token]) -> Result<Vec<u32>, TokenError> {
        Ok(tokens.iter().map(|t| self.id_of(*t)).collect())
    }

    pub fn decode_ids(&self, ids: &[u32]) -> Result<Vec<Token>, TokenError> {
        ids.iter()
            .map(|&id| self.token(id).ok_or(TokenError::UnknownId(id)))
            .collect()
    }
}

/// Boxes, then symbol bases, fills, rotations and positions, each ascending.
pub fn build_vocabulary() -> TokenVocabulary {
    let tokens = BoxKind::ALL
        .into_iter()
        .map(Token::Box)
        .chain((BASE_MIN..=BASE_MAX).map(Token::SymbolBase))
        .chain((0..=5).map(Token::Fill))
        .chain((0..=0xf).map(Token::Rotation))
        .chain((COORD_MIN..=COORD_MAX).map(Token::Position))
        .collect();
    TokenVocabulary { tokens }
}

pub fn tokenize(sequence: &FswSequence) -> Vec<Token> {
    let mut out = Vec::new();
    for item in &sequence.items {
        match item {
            SequenceItem::Sign(sign) => {
                out.push(Token::Box(sign.box_kind));
                push_position(&mut out, sign.max);
                for symbol in &sign.symbols {
                    push_symbol(&mut out, symbol);
                }
            }
            SequenceItem::Punctuation(symbol) => push_symbol(&mut out, symbol),
        }
    }
    out
}

fn push_position(out: &mut Vec<Token>, at: Coordinate) {
    out.push(Token::Position(at.x()));
    out.push(Token::Position(at.y()));
}

fn push_symbol(out: &mut Vec<Token>, symbol: &PlacedSymbol) {
    out.push(Token::SymbolBase(symbol.id.base()));
    out.push(Token::Fill(symbol.id.fill()));
    out.push(Token::Rotation(symbol.id.rotation()));
    push_position(out, symbol.at);
}

/// Inverse of [`tokenize`] on its image.
///
/// A punctuation base always opens a standalone fragment; any other base
/// continues the current sign.
pub fn detokenize(tokens: &[Token]) -> Result<FswSequence, TokenError> {
    let mut items = Vec::new();
    let mut current: Option<FswSign> = None;
    let mut i = 0;
    while i < tokens.len() {
        match tokens[i] {
            Token::Box(box_kind) => {
                if let Some(sign) = current.take() {
                    items.push(SequenceItem::Sign(sign));
                }
                let max = take_position(tokens, i + 1)?;
                current = Some(FswSign {
                    sort_prefix: None,
                    box_kind,
                    max,
                    symbols: Vec::new(),
                });
                i += 3;
            }
            Token::SymbolBase(base) => {
                let symbol = take_symbol(tokens, i, base)?;
                if symbol.id.is_punctuation() {
                    if let Some(sign) = current.take() {
                        items.push(SequenceItem::Sign(sign));
                    }
                    items.push(SequenceItem::Punctuation(symbol));
                } else {
                    match current.as_mut() {
                        Some(sign) => sign.symbols.push(symbol),
                        None => {
                            return Err(malformed(i, "symbol outside of a sign box"));
                        }
                    }
                }
                i += 5;
            }
            other => {
                return Err(malformed(
                    i,
                    format!("unexpected {other} where a box or symbol base is required"),
                ))
            }
        }
    }
    if let Some(sign) = current {
        items.push(SequenceItem::Sign(sign));
    }
    Ok(FswSequence { items })
}

fn malformed(index: usize, reason: impl Into<String>) -> TokenError {
    TokenError::MalformedTokenStream {
        index,
        reason: reason.into(),
    }
}

fn take_position(tokens: &[Token], at: usize) -> Result<Coordinate, TokenError> {
    let mut xy = [0u16; 2];
    for (k, slot) in xy.iter_mut().enumerate() {
        match tokens.get(at + k) {
            Some(Token::Position(p)) => *slot = *p,
            Some(other) => return Err(malformed(at + k, format!("expected position, found {other}"))),
            None => return Err(malformed(at + k, "truncated: expected position")),
        }
    }
    Coordinate::new(xy[0], xy[1]).ok_or_else(|| malformed(at, "position out of range"))
}

fn take_symbol(tokens: &[Token], at: usize, base: u16) -> Result<PlacedSymbol, TokenError> {
    let fill = match tokens.get(at + 1) {
        Some(Token::Fill(f)) => *f,
        Some(other) => return Err(malformed(at + 1, format!("expected fill, found {other}"))),
        None => return Err(malformed(at + 1, "truncated: expected fill")),
    };
    let rotation = match tokens.get(at + 2) {
        Some(Token::Rotation(r)) => *r,
        Some(other) => return Err(malformed(at + 2, format!("expected rotation, found {other}"))),
        None => return Err(malformed(at + 2, "truncated: expected rotation")),
    };
    let id = SymbolId::new(base, fill, rotation).ok_or_else(|| malformed(at, "invalid symbol id"))?;
    let at_coord = take_position(tokens, at + 3)?;
    Ok(PlacedSymbol { id, at: at_coord })
}

/// Parses a whitespace-separated token line.
pub fn parse_tokens(text: &str) -> Result<Vec<Token>, TokenError> {
    text.split_whitespace().map(str::parse).collect()
}

/// Space-joined surface form. `pretty` breaks the line before every box and
/// symbol base, one grapheme per line.
pub fn tokens_to_text(tokens: &[Token], pretty: bool) -> String {
    let mut out = String::new();
    for (i, token) in tokens.iter().enumerate() {
        if i > 0 {
            let breaks = pretty && matches!(token, Token::Box(_) | Token::SymbolBase(_));
            out.push(if breaks { '\n' } else { ' ' });
        }
        out.push_str(&token.to_string());
    }
    out
}
