//! Literal interpretation and pragmatic enrichment.

use super::{BuildClause, DslError, Fill, InstructionAst, Referent, Relation, Selector, SpecType};
use super::COUNTS;
use crate::world::{Block, Cell, Color, Structure};

/// One literal reading of the final clause and the grid it produces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interpretation {
    pub fill: Fill,
    pub structure: Structure,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterpretationSet {
    pub spec_type: SpecType,
    pub candidates: Vec<Interpretation>,
    /// Index of the contextually enriched reading; `None` when nothing was omitted.
    pub pragmatic_index: Option<usize>,
}

impl InterpretationSet {
    pub fn pragmatic(&self) -> Option<&Interpretation> {
        self.pragmatic_index.map(|i| &self.candidates[i])
    }

    /// The reading a builder commits to when it trusts the pragmatic default.
    pub fn default_reading(&self) -> &Interpretation {
        self.pragmatic().unwrap_or(&self.candidates[0])
    }

    pub fn position_of(&self, s: &Structure) -> Option<usize> {
        self.candidates
            .iter()
            .position(|c| crate::world::structures_equal(&c.structure, s))
    }

    pub fn find_fill(&self, fill: Fill) -> Option<&Interpretation> {
        self.candidates.iter().find(|c| c.fill == fill)
    }
}

fn single_cell<I: IntoIterator<Item = Cell>>(cells: I, what: &str) -> Result<Cell, DslError> {
    let mut cells: Vec<Cell> = cells.into_iter().collect();
    cells.sort();
    cells.dedup();
    match cells.as_slice() {
        [one] => Ok(*one),
        [] => Err(DslError::UnresolvableReferent(format!("no {what} on the grid"))),
        _ => Err(DslError::UnresolvableReferent(format!(
            "{what} is ambiguous ({} cells)",
            cells.len()
        ))),
    }
}

/// The ground cell a referent picks out in `state`.
pub fn resolve_referent(referent: Referent, state: &Structure) -> Result<Cell, DslError> {
    let cells_of = |color: Color| {
        state
            .blocks()
            .iter()
            .filter(move |b| b.color == color)
            .map(|b| b.position.cell())
    };
    match referent {
        Referent::ExistingColored { color, selector } => {
            let what = format!("{} block", color.word());
            match selector {
                Selector::Unique => single_cell(cells_of(color), &what),
                Selector::Leftmost | Selector::Rightmost => {
                    let xs = cells_of(color).map(|c| c.x);
                    let extreme = if selector == Selector::Leftmost {
                        xs.min()
                    } else {
                        xs.max()
                    };
                    let Some(x) = extreme else {
                        return Err(DslError::UnresolvableReferent(format!("no {what}")));
                    };
                    single_cell(cells_of(color).filter(|c| c.x == x), &what)
                }
            }
        }
        Referent::LastBuilt => state
            .blocks()
            .last()
            .map(|b| b.position.cell())
            .ok_or_else(|| DslError::UnresolvableReferent("nothing has been built".into())),
        Referent::NamedColoredStack(color) => state
            .blocks()
            .iter()
            .rev()
            .find(|b| b.color == color)
            .map(|b| b.position.cell())
            .ok_or_else(|| {
                DslError::UnresolvableReferent(format!("no {} stack", color.word()))
            }),
    }
}

/// Places the stack a clause describes, with omitted slots taken from `fill`.
pub fn resolve(clause: &BuildClause, state: &Structure, fill: Fill) -> Result<Structure, DslError> {
    let Fill { count, color } = clause.filled(fill);
    let anchor = || {
        clause
            .referent
            .ok_or_else(|| DslError::InvalidAst("missing referent".into()))
            .and_then(|r| resolve_referent(r, state))
    };
    let (cell, start_level) = match clause.relation {
        Relation::Behind => (anchor()?.offset(0, -1)?, 0),
        Relation::InFrontOf => (anchor()?.offset(0, 1)?, 0),
        Relation::LeftOf => (anchor()?.offset(-1, 0)?, 0),
        Relation::RightOf => (anchor()?.offset(1, 0)?, 0),
        Relation::OnTopOf => {
            let cell = anchor()?;
            (cell, state.height_at(cell))
        }
        Relation::AtCorner(corner) => {
            let (x, z) = corner.xz();
            (Cell::new(x, z)?, 0)
        }
        Relation::AtOrigin => (Cell::new(0, 0)?, 0),
    };
    let mut out = state.clone();
    for level in start_level..start_level + count as usize {
        out = out.place(Block::new(color, cell.at_level(level)?))?;
    }
    Ok(out)
}

/// Applies every context clause (all but the last) to `initial`.
pub fn apply_context(ast: &InstructionAst, initial: &Structure) -> Result<Structure, DslError> {
    ast.context().iter().try_fold(initial.clone(), |s, clause| {
        let fill = clause
            .fill()
            .ok_or_else(|| DslError::InvalidAst("context clause must be complete".into()))?;
        resolve(clause, &s, fill)
    })
}

/// Every literal reading of the final clause over `state`, which must
/// already include the context clauses.
pub fn enumerate_interpretations(
    ast: &InstructionAst,
    state: &Structure,
) -> Result<InterpretationSet, DslError> {
    let clause = ast.target();
    let spec_type = clause.spec_type();
    if let Some(fill) = clause.fill() {
        let structure = resolve(clause, state, fill)?;
        return Ok(InterpretationSet {
            spec_type,
            candidates: vec![Interpretation { fill, structure }],
            pragmatic_index: None,
        });
    }

    let recent = state.last_stack().ok_or_else(|| {
        DslError::PragmaticCandidateInvalid("no recently built structure to match".into())
    })?;
    let fills: Vec<Fill> = match spec_type {
        SpecType::OmitColor => {
            let count = clause.count.expect("color omitted means count given");
            Color::ALL.iter().map(|&color| Fill { count, color }).collect()
        }
        SpecType::OmitCount => {
            let color = clause.color.expect("count omitted means color given");
            COUNTS.iter().map(|&count| Fill { count, color }).collect()
        }
        SpecType::Full => unreachable!(),
    };
    let default_fill = match spec_type {
        SpecType::OmitColor => Fill {
            count: clause.count.unwrap_or_default(),
            color: recent.color,
        },
        _ => {
            let height = u8::try_from(recent.height).unwrap_or(u8::MAX);
            if !COUNTS.contains(&height) {
                return Err(DslError::PragmaticCandidateInvalid(format!(
                    "most recent stack has height {height}"
                )));
            }
            Fill {
                count: height,
                color: clause.color.unwrap_or(recent.color),
            }
        }
    };

    let mut candidates = Vec::with_capacity(fills.len());
    for fill in fills {
        match resolve(clause, state, fill) {
            Ok(structure) => candidates.push(Interpretation { fill, structure }),
            Err(e @ (DslError::UnresolvableReferent(_) | DslError::InvalidAst(_))) => return Err(e),
            Err(_) => {}
        }
    }
    let pragmatic_index = candidates
        .iter()
        .position(|c| c.fill == default_fill)
        .ok_or_else(|| {
            DslError::PragmaticCandidateInvalid(format!(
                "{default_fill:?} cannot be built here"
            ))
        })?;
    Ok(InterpretationSet {
        spec_type,
        candidates,
        pragmatic_index: Some(pragmatic_index),
    })
}

/// Context state and interpretation set of an instruction over `initial`.
pub fn interpret(
    ast: &InstructionAst,
    initial: &Structure,
) -> Result<(Structure, InterpretationSet), DslError> {
    let context = apply_context(ast, initial)?;
    let set = enumerate_interpretations(ast, &context)?;
    Ok((context, set))
}
