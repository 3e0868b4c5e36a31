//! The templated instruction language.
//!
//! An instruction is one or two sentences, each describing a single
//! vertical stack: how many blocks, what color, and where relative to a
//! referent. Only the final sentence may omit its count or its color; the
//! omitted slot is what the builder must infer (or ask about).

mod parse;
mod render;
mod semantics;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{Color, WorldError};

pub use parse::{parse, ParseError};
pub use render::render;
pub use semantics::{
    apply_context, enumerate_interpretations, interpret, resolve, resolve_referent,
    Interpretation, InterpretationSet,
};

/// Counts an instruction may mention. A stack always has more than one block.
pub const COUNTS: [u8; 3] = [2, 3, 4];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid instruction: {0}")]
    InvalidAst(String),
    #[error("cannot resolve referent: {0}")]
    UnresolvableReferent(String),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("pragmatic candidate is not buildable: {0}")]
    PragmaticCandidateInvalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Corner {
    BottomLeft,
    BottomRight,
    TopLeft,
    TopRight,
}

impl Corner {
    pub const ALL: [Corner; 4] = [
        Corner::BottomLeft,
        Corner::BottomRight,
        Corner::TopLeft,
        Corner::TopRight,
    ];

    /// Ground coordinates `(x, z)`. "Bottom" is the edge nearest the viewer.
    pub fn xz(self) -> (i32, i32) {
        match self {
            Corner::BottomLeft => (-400, 400),
            Corner::BottomRight => (400, 400),
            Corner::TopLeft => (-400, -400),
            Corner::TopRight => (400, -400),
        }
    }

    pub(crate) fn words(self) -> (&'static str, &'static str) {
        match self {
            Corner::BottomLeft => ("bottom", "left"),
            Corner::BottomRight => ("bottom", "right"),
            Corner::TopLeft => ("top", "left"),
            Corner::TopRight => ("top", "right"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    Behind,
    InFrontOf,
    LeftOf,
    RightOf,
    OnTopOf,
    AtCorner(Corner),
    AtOrigin,
}

impl Relation {
    /// Whether the relation is anchored to a referent rather than a fixed cell.
    pub fn needs_referent(self) -> bool {
        !matches!(self, Relation::AtCorner(_) | Relation::AtOrigin)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Selector {
    Unique,
    Leftmost,
    Rightmost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Referent {
    /// "the existing green block", "the rightmost blue block"
    ExistingColored { color: Color, selector: Selector },
    /// "the tower you just built"
    LastBuilt,
    /// "the red one", "the red stack you just built"
    NamedColoredStack(Color),
}

/// A fully determined count and color for a stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fill {
    pub count: u8,
    pub color: Color,
}

/// Which attribute, if any, a clause leaves out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SpecType {
    Full,
    OmitColor,
    OmitCount,
}

impl SpecType {
    pub fn is_underspecified(self) -> bool {
        self != SpecType::Full
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BuildClause {
    pub count: Option<u8>,
    pub color: Option<Color>,
    pub relation: Relation,
    pub referent: Option<Referent>,
}

impl BuildClause {
    pub fn full(count: u8, color: Color, relation: Relation, referent: Option<Referent>) -> Self {
        BuildClause {
            count: Some(count),
            color: Some(color),
            relation,
            referent,
        }
    }

    pub fn spec_type(&self) -> SpecType {
        match (self.count, self.color) {
            (Some(_), Some(_)) => SpecType::Full,
            (Some(_), None) => SpecType::OmitColor,
            _ => SpecType::OmitCount,
        }
    }

    /// Completes the omitted slot (if any) from `fill`; given slots win.
    pub fn filled(&self, fill: Fill) -> Fill {
        Fill {
            count: self.count.unwrap_or(fill.count),
            color: self.color.unwrap_or(fill.color),
        }
    }

    pub fn fill(&self) -> Option<Fill> {
        Some(Fill {
            count: self.count?,
            color: self.color?,
        })
    }

    pub fn with_omission(&self, spec: SpecType) -> BuildClause {
        let mut c = *self;
        match spec {
            SpecType::Full => {}
            SpecType::OmitColor => c.color = None,
            SpecType::OmitCount => c.count = None,
        }
        c
    }

    pub fn validate(&self) -> Result<(), DslError> {
        if self.count.is_none() && self.color.is_none() {
            return Err(DslError::InvalidAst(
                "a clause may omit the count or the color, not both".into(),
            ));
        }
        if let Some(n) = self.count {
            if !COUNTS.contains(&n) {
                return Err(DslError::InvalidAst(format!(
                    "count {n} is outside {COUNTS:?}"
                )));
            }
        }
        match (self.relation.needs_referent(), self.referent.is_some()) {
            (true, false) => Err(DslError::InvalidAst(format!(
                "{:?} needs a referent",
                self.relation
            ))),
            (false, true) => Err(DslError::InvalidAst(format!(
                "{:?} takes no referent",
                self.relation
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InstructionAst {
    clauses: Vec<BuildClause>,
}

impl InstructionAst {
    pub fn new(clauses: Vec<BuildClause>) -> Result<Self, DslError> {
        if clauses.is_empty() || clauses.len() > 2 {
            return Err(DslError::InvalidAst(format!(
                "expected 1 or 2 clauses, got {}",
                clauses.len()
            )));
        }
        for c in &clauses {
            c.validate()?;
        }
        let context = &clauses[..clauses.len() - 1];
        if context.iter().any(|c| c.spec_type() != SpecType::Full) {
            return Err(DslError::InvalidAst(
                "only the final clause may omit information".into(),
            ));
        }
        Ok(InstructionAst { clauses })
    }

    pub fn clauses(&self) -> &[BuildClause] {
        &self.clauses
    }

    pub fn context(&self) -> &[BuildClause] {
        &self.clauses[..self.clauses.len() - 1]
    }

    pub fn target(&self) -> &BuildClause {
        self.clauses.last().expect("non-empty by construction")
    }

    pub fn spec_type(&self) -> SpecType {
        self.target().spec_type()
    }

    /// Same instruction with the final clause's slot omitted.
    pub fn with_omission(&self, spec: SpecType) -> Result<InstructionAst, DslError> {
        let mut clauses = self.clauses.clone();
        let last = clauses.last_mut().expect("non-empty");
        *last = last.with_omission(spec);
        InstructionAst::new(clauses)
    }
}
