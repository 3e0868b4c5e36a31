//! Recursive-descent parser for instruction text.
//!
//! ```text
//! instruction := sentence+
//! sentence    := ["then" [","]] body "."
//! body        := verb object relation
//!              | relation [","] verb object
//! verb        := "stack" | "build" | "put" | "place"
//! object      := numeral [color] "blocks"
//!              | "a" [color] ("stack" | "tower") ["of" numeral [color] "blocks"]
//! relation    := "behind" referent
//!              | "in" "front" "of" referent
//!              | ["directly"] "to" "the" ("left" | "right") "of" referent
//!              | "on" "top" "of" referent
//!              | ("in" | "at") "the" ("bottom" | "top") ("left" | "right") "corner"
//!              | "in" "the" "middle" "square" | "at" "the" "origin"
//! referent    := "the" "existing" color ("block" | "blocks")
//!              | "the" ("leftmost" | "rightmost") color "block"
//!              | "the" ("tower" | "stack") "you" "just" "built"
//!              | "the" color ("one" | "stack" | "tower") ["you" "just" "built"]
//! ```
//!
//! Matching is case-insensitive.

use std::fmt;

use thiserror::Error;

use super::{BuildClause, Corner, DslError, InstructionAst, Referent, Relation, Selector};
use crate::world::Color;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    /// Byte offset into the input where the problem was found.
    pub offset: usize,
    pub found: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "at byte {}: found {}, expected one of [{}]",
            self.offset,
            if self.found.is_empty() {
                "end of input".to_string()
            } else {
                format!("{:?}", self.found)
            },
            self.expected.join(", ")
        )
    }
}

#[derive(Debug, Clone)]
struct Token {
    text: String,
    offset: usize,
}

fn tokenize(input: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in input.char_indices() {
        if ch.is_alphanumeric() || ch == '\'' || ch == '-' {
            start.get_or_insert(i);
            continue;
        }
        if let Some(s) = start.take() {
            tokens.push(Token {
                text: input[s..i].to_ascii_lowercase(),
                offset: s,
            });
        }
        if !ch.is_whitespace() {
            tokens.push(Token {
                text: ch.to_string(),
                offset: i,
            });
        }
    }
    if let Some(s) = start {
        tokens.push(Token {
            text: input[s..].to_ascii_lowercase(),
            offset: s,
        });
    }
    tokens
}

const VERBS: [&str; 4] = ["stack", "build", "put", "place"];
const RELATION_STARTS: [&str; 6] = ["behind", "in", "to", "directly", "on", "at"];

fn numeral(word: &str) -> Option<u8> {
    match word {
        "two" | "2" => Some(2),
        "three" | "3" => Some(3),
        "four" | "4" => Some(4),
        _ => None,
    }
}

fn color_words() -> Vec<String> {
    Color::ALL.iter().map(|c| c.word().to_string()).collect()
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    input: &'a str,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&str> {
        self.tokens.get(self.pos).map(|t| t.text.as_str())
    }

    fn offset(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|t| t.offset)
            .unwrap_or(self.input.len())
    }

    fn error<S: AsRef<str>>(&self, expected: &[S]) -> ParseError {
        ParseError {
            offset: self.offset(),
            found: self.peek().unwrap_or("").to_string(),
            expected: expected.iter().map(|s| s.as_ref().to_string()).collect(),
        }
    }

    fn eat(&mut self, word: &str) -> bool {
        if self.peek() == Some(word) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, word: &str) -> Result<(), ParseError> {
        if self.eat(word) {
            Ok(())
        } else {
            Err(self.error(&[word]))
        }
    }

    fn expect_one(&mut self, words: &[&str]) -> Result<String, ParseError> {
        match self.peek() {
            Some(w) if words.contains(&w) => {
                let w = w.to_string();
                self.pos += 1;
                Ok(w)
            }
            _ => Err(self.error(words)),
        }
    }

    fn maybe_color(&mut self) -> Option<Color> {
        let c = self.peek().and_then(Color::from_word)?;
        self.pos += 1;
        Some(c)
    }

    fn color(&mut self) -> Result<Color, ParseError> {
        self.maybe_color().ok_or_else(|| self.error(&color_words()))
    }

    fn sentence(&mut self) -> Result<(BuildClause, usize), ParseError> {
        let start = self.offset();
        if self.eat("then") {
            self.eat(",");
        }
        let clause = match self.peek() {
            Some(w) if VERBS.contains(&w) => {
                self.pos += 1;
                let (count, color) = self.object()?;
                let (relation, referent) = self.relation()?;
                BuildClause {
                    count,
                    color,
                    relation,
                    referent,
                }
            }
            Some(w) if RELATION_STARTS.contains(&w) => {
                let (relation, referent) = self.relation()?;
                self.eat(",");
                self.expect_one(&VERBS)?;
                let (count, color) = self.object()?;
                BuildClause {
                    count,
                    color,
                    relation,
                    referent,
                }
            }
            _ => {
                let mut expected: Vec<&str> = vec!["then"];
                expected.extend(VERBS);
                expected.extend(RELATION_STARTS);
                return Err(self.error(&expected));
            }
        };
        self.expect(".")?;
        Ok((clause, start))
    }

    fn object(&mut self) -> Result<(Option<u8>, Option<Color>), ParseError> {
        if let Some(n) = self.peek().and_then(numeral) {
            self.pos += 1;
            let color = self.maybe_color();
            self.expect("blocks")?;
            return Ok((Some(n), color));
        }
        if self.eat("a") {
            let color = self.maybe_color();
            self.expect_one(&["stack", "tower"])?;
            if !self.eat("of") {
                return Ok((None, color));
            }
            let n = self
                .peek()
                .and_then(numeral)
                .ok_or_else(|| self.error(&["two", "three", "four"]))?;
            self.pos += 1;
            let inner = if color.is_none() {
                self.maybe_color()
            } else {
                None
            };
            self.expect("blocks")?;
            return Ok((Some(n), color.or(inner)));
        }
        Err(self.error(&["two", "three", "four", "a"]))
    }

    fn relation(&mut self) -> Result<(Relation, Option<Referent>), ParseError> {
        let word = self.expect_one(&RELATION_STARTS)?;
        let relation = match word.as_str() {
            "behind" => Relation::Behind,
            "directly" | "to" => {
                if word == "directly" {
                    self.expect("to")?;
                }
                self.expect("the")?;
                let side = self.expect_one(&["left", "right"])?;
                self.expect("of")?;
                if side == "left" {
                    Relation::LeftOf
                } else {
                    Relation::RightOf
                }
            }
            "on" => {
                self.expect("top")?;
                self.expect("of")?;
                Relation::OnTopOf
            }
            "in" if self.peek() == Some("front") => {
                self.pos += 1;
                self.expect("of")?;
                Relation::InFrontOf
            }
            "in" | "at" => return self.placement(&word).map(|r| (r, None)),
            _ => unreachable!("expect_one restricts the word"),
        };
        let referent = self.referent()?;
        Ok((relation, Some(referent)))
    }

    fn placement(&mut self, prep: &str) -> Result<Relation, ParseError> {
        if prep == "in" && self.peek() != Some("the") {
            return Err(self.error(&["front", "the"]));
        }
        self.expect("the")?;
        let mut options = vec!["bottom", "top"];
        options.push(if prep == "in" { "middle" } else { "origin" });
        let word = self.expect_one(&options)?;
        match word.as_str() {
            "middle" => {
                self.expect("square")?;
                Ok(Relation::AtOrigin)
            }
            "origin" => Ok(Relation::AtOrigin),
            vertical => {
                let side = self.expect_one(&["left", "right"])?;
                self.expect("corner")?;
                let corner = match (vertical, side.as_str()) {
                    ("bottom", "left") => Corner::BottomLeft,
                    ("bottom", _) => Corner::BottomRight,
                    ("top", "left") => Corner::TopLeft,
                    _ => Corner::TopRight,
                };
                Ok(Relation::AtCorner(corner))
            }
        }
    }

    fn just_built(&mut self) -> Result<(), ParseError> {
        self.expect("you")?;
        self.expect("just")?;
        self.expect("built")
    }

    fn referent(&mut self) -> Result<Referent, ParseError> {
        self.expect("the")?;
        match self.peek() {
            Some("existing") => {
                self.pos += 1;
                let color = self.color()?;
                self.expect_one(&["block", "blocks"])?;
                Ok(Referent::ExistingColored {
                    color,
                    selector: Selector::Unique,
                })
            }
            Some(w @ ("leftmost" | "rightmost")) => {
                let selector = if w == "leftmost" {
                    Selector::Leftmost
                } else {
                    Selector::Rightmost
                };
                self.pos += 1;
                let color = self.color()?;
                self.expect("block")?;
                Ok(Referent::ExistingColored { color, selector })
            }
            Some("tower" | "stack") => {
                self.pos += 1;
                self.just_built()?;
                Ok(Referent::LastBuilt)
            }
            _ => {
                let Some(color) = self.maybe_color() else {
                    let mut expected = vec![
                        "existing".to_string(),
                        "leftmost".into(),
                        "rightmost".into(),
                        "tower".into(),
                        "stack".into(),
                    ];
                    expected.extend(color_words());
                    return Err(self.error(&expected));
                };
                let noun = self.expect_one(&["one", "stack", "tower"])?;
                if noun != "one" && self.peek() == Some("you") {
                    self.just_built()?;
                }
                Ok(Referent::NamedColoredStack(color))
            }
        }
    }
}

/// Parses instruction text into an AST.
pub fn parse(text: &str) -> Result<InstructionAst, DslError> {
    let mut p = Parser {
        tokens: tokenize(text),
        pos: 0,
        input: text,
    };
    let mut clauses = Vec::new();
    let mut starts = Vec::new();
    while p.peek().is_some() {
        let (clause, start) = p.sentence()?;
        if let Err(e) = clause.validate() {
            return Err(match e {
                DslError::InvalidAst(msg) => ParseError {
                    offset: start,
                    found: msg,
                    expected: vec!["a count or a color".into()],
                }
                .into(),
                other => other,
            });
        }
        clauses.push(clause);
        starts.push(start);
    }
    if clauses.is_empty() {
        return Err(p.error(&["an instruction sentence"]).into());
    }
    if clauses.len() > 2 {
        return Err(ParseError {
            offset: starts[2],
            found: "a third sentence".into(),
            expected: vec!["end of input".into()],
        }
        .into());
    }
    if clauses.len() == 2 && clauses[0].spec_type().is_underspecified() {
        return Err(ParseError {
            offset: starts[0],
            found: "an underspecified context sentence".into(),
            expected: vec!["a count and a color".into()],
        }
        .into());
    }
    InstructionAst::new(clauses)
}
