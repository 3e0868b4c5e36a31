//! Seeded item and list generation.
//!
//! Each seed yields one position schedule and two sets of 20 item frames.
//! A frame is a complete scene (initial grid, context stack, final stack)
//! that can be presented fully specified or with either slot omitted.
//! Lists counterbalance speaker order, which frame set each speaker gets,
//! and which frames land on critical positions.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    ExperimentList, FeedbackType, Item, Mode, Schedule, Speaker, SpeakerBlock, SpeakerError,
    BLOCK_LEN, FULL_PER_BLOCK, LISA_CONSISTENT, OMIT_COLOR_PER_BLOCK,
};
use crate::dsl::{
    self, BuildClause, Corner, Fill, InstructionAst, Referent, Relation, Selector, SpecType,
    COUNTS,
};
use crate::world::{Cell, Color, Structure};

const MAX_ATTEMPTS: usize = 10_000;

/// One scene, presentable in all three specification types.
#[derive(Debug, Clone)]
struct Frame {
    id: String,
    initial: Structure,
    context: BuildClause,
    /// Final clause with both slots given (the fully specified presentation).
    final_full: BuildClause,
    literal_color: Color,
    literal_count: u8,
    render_seed: u64,
}

fn random_cell(rng: &mut ChaCha8Rng) -> Cell {
    let x = rng.gen_range(-4..=4) * 100;
    let z = rng.gen_range(-4..=4) * 100;
    Cell::new(x, z).expect("sampled on the grid")
}

fn random_color(rng: &mut ChaCha8Rng) -> Color {
    *Color::ALL.choose(rng).expect("non-empty")
}

fn random_initial(rng: &mut ChaCha8Rng) -> Structure {
    let stacks = [0usize, 1, 1, 2, 2, 3][rng.gen_range(0..6)];
    let mut s = Structure::empty();
    for _ in 0..stacks {
        let cell = random_cell(rng);
        if s.height_at(cell) > 0 {
            continue;
        }
        let height = rng.gen_range(1..=2);
        s = s.stack(cell, random_color(rng), height).expect("empty cell");
    }
    s
}

fn existing_referent(rng: &mut ChaCha8Rng, initial: &Structure) -> Option<Referent> {
    let block = initial.blocks().choose(rng)?;
    let selector = *[Selector::Unique, Selector::Leftmost, Selector::Rightmost]
        .choose(rng)
        .expect("non-empty");
    Some(Referent::ExistingColored {
        color: block.color,
        selector,
    })
}

fn fixed_relation(rng: &mut ChaCha8Rng) -> Relation {
    if rng.gen_bool(0.2) {
        Relation::AtOrigin
    } else {
        Relation::AtCorner(*Corner::ALL.choose(rng).expect("non-empty"))
    }
}

const SIDES: [Relation; 4] = [
    Relation::Behind,
    Relation::InFrontOf,
    Relation::LeftOf,
    Relation::RightOf,
];

fn random_context(rng: &mut ChaCha8Rng, initial: &Structure) -> BuildClause {
    let count = *COUNTS.choose(rng).expect("non-empty");
    let color = random_color(rng);
    match existing_referent(rng, initial) {
        Some(referent) if rng.gen_bool(0.75) => BuildClause::full(
            count,
            color,
            *SIDES.choose(rng).expect("non-empty"),
            Some(referent),
        ),
        _ => BuildClause::full(count, color, fixed_relation(rng), None),
    }
}

fn random_final(rng: &mut ChaCha8Rng, context: &BuildClause) -> BuildClause {
    let fill = Fill {
        count: *COUNTS.choose(rng).expect("non-empty"),
        color: random_color(rng),
    };
    let context_color = context.color.expect("context is complete");
    let referent = if rng.gen_bool(0.5) {
        Referent::LastBuilt
    } else {
        Referent::NamedColoredStack(context_color)
    };
    let (relation, referent) = match rng.gen_range(0..10) {
        0 => (fixed_relation(rng), None),
        1 => (Relation::OnTopOf, Some(referent)),
        _ => (*SIDES.choose(rng).expect("non-empty"), Some(referent)),
    };
    BuildClause::full(fill.count, fill.color, relation, referent)
}

/// Checks a candidate frame and draws its literal-only fills.
fn complete_frame(
    rng: &mut ChaCha8Rng,
    id: String,
    initial: Structure,
    context: BuildClause,
    final_full: BuildClause,
) -> Option<Frame> {
    let full = InstructionAst::new(vec![context, final_full]).ok()?;
    let (ctx_state, full_set) = dsl::interpret(&full, &initial).ok()?;
    full_set.candidates.first()?;
    let recent = ctx_state.last_stack()?;
    // the context stack must be what "most recently built" refers to
    if recent.height != context.count? as usize || recent.color != context.color? {
        return None;
    }

    let mut literal_color = None;
    let mut literal_count = None;
    for spec in [SpecType::OmitColor, SpecType::OmitCount] {
        let ast = full.with_omission(spec).ok()?;
        let set = dsl::enumerate_interpretations(&ast, &ctx_state).ok()?;
        let default = set.pragmatic()?.fill;
        let alternatives: Vec<Fill> = set
            .candidates
            .iter()
            .map(|c| c.fill)
            .filter(|f| *f != default)
            .collect();
        match spec {
            SpecType::OmitColor => {
                literal_color = Some(alternatives.choose(rng)?.color);
            }
            _ => {
                literal_count = Some(alternatives.choose(rng)?.count);
            }
        }
    }
    Some(Frame {
        id,
        initial,
        context,
        final_full,
        literal_color: literal_color?,
        literal_count: literal_count?,
        render_seed: rng.gen(),
    })
}

fn generate_frame(rng: &mut ChaCha8Rng, id: String) -> Result<Frame, SpeakerError> {
    for _ in 0..MAX_ATTEMPTS {
        let initial = random_initial(rng);
        let context = random_context(rng, &initial);
        let final_full = random_final(rng, &context);
        if let Some(frame) = complete_frame(rng, id.clone(), initial, context, final_full) {
            return Ok(frame);
        }
    }
    Err(SpeakerError::GenerationFailure(format!(
        "no valid scene for frame {id} after {MAX_ATTEMPTS} attempts"
    )))
}

impl Frame {
    fn present(&self, spec: SpecType, feedback: FeedbackType) -> Result<Item, SpeakerError> {
        let full = InstructionAst::new(vec![self.context, self.final_full])?;
        let ast = full.with_omission(spec)?;
        let (ctx_state, set) = dsl::interpret(&ast, &self.initial)?;
        let given = self.final_full.fill().expect("complete final clause");
        let target_fill = match (spec, feedback) {
            (SpecType::Full, _) => given,
            (_, FeedbackType::PragmaticConsistent) => {
                set.pragmatic().expect("underspecified set has a default").fill
            }
            (SpecType::OmitColor, FeedbackType::LiteralOnly) => Fill {
                color: self.literal_color,
                ..given
            },
            (SpecType::OmitCount, FeedbackType::LiteralOnly) => Fill {
                count: self.literal_count,
                ..given
            },
        };
        let target = dsl::resolve(ast.target(), &ctx_state, target_fill)?;
        let item = Item {
            id: self.id.clone(),
            initial: self.initial.clone(),
            instruction: dsl::render(&ast, self.render_seed),
            ast,
            spec_type: spec,
            feedback_type: feedback,
            target,
            target_fill,
        };
        item.validate()?;
        Ok(item)
    }
}

fn make_schedule(rng: &mut ChaCha8Rng) -> Schedule {
    let mut slots: Vec<SpecType> = std::iter::repeat_n(SpecType::Full, FULL_PER_BLOCK)
        .chain(std::iter::repeat_n(SpecType::OmitColor, OMIT_COLOR_PER_BLOCK))
        .chain(std::iter::repeat_n(
            SpecType::OmitCount,
            BLOCK_LEN - FULL_PER_BLOCK - OMIT_COLOR_PER_BLOCK,
        ))
        .collect();
    slots.shuffle(rng);
    let critical: Vec<usize> = (0..BLOCK_LEN).filter(|&p| slots[p] != SpecType::Full).collect();
    let mut lisa_consistent: Vec<usize> = critical
        .choose_multiple(rng, LISA_CONSISTENT)
        .copied()
        .collect();
    lisa_consistent.sort_unstable();
    Schedule {
        slots,
        lisa_consistent,
    }
}

/// Frame index shown at each position. The rotated layout swaps the 8 full
/// positions with the first 8 critical ones, so frames shown fully
/// specified in one list are underspecified in its rotated partner.
fn layout(schedule: &Schedule, rotated: bool) -> Vec<usize> {
    let mut order: Vec<usize> = (0..BLOCK_LEN).collect();
    if rotated {
        let full: Vec<usize> = (0..BLOCK_LEN)
            .filter(|&p| schedule.slots[p] == SpecType::Full)
            .collect();
        let critical: Vec<usize> = (0..BLOCK_LEN)
            .filter(|&p| schedule.slots[p] != SpecType::Full)
            .collect();
        for (&f, &c) in full.iter().zip(&critical) {
            order.swap(f, c);
        }
    }
    order
}

fn build_block(
    speaker: Speaker,
    frames: &[Frame],
    schedule: &Schedule,
    rotated: bool,
) -> Result<SpeakerBlock, SpeakerError> {
    let items = layout(schedule, rotated)
        .into_iter()
        .enumerate()
        .map(|(pos, frame)| {
            let spec = schedule.slots[pos];
            let feedback = match speaker {
                Speaker::Lisa
                    if spec.is_underspecified() && !schedule.lisa_consistent.contains(&pos) =>
                {
                    FeedbackType::LiteralOnly
                }
                _ => FeedbackType::PragmaticConsistent,
            };
            frames[frame].present(spec, feedback)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SpeakerBlock { speaker, items })
}

/// Generates `n_lists` counterbalanced lists.
///
/// List `i` puts Pia first when `i` is even. With `k = (i / 2) % 4`, bit 0
/// of `k` selects the rotated frame layout and bit 1 swaps which frame set
/// each speaker receives. The schedule of critical positions is the same
/// for every list of a call.
pub fn generate_lists(
    mode: Mode,
    n_lists: usize,
    seed: u64,
) -> Result<Vec<ExperimentList>, SpeakerError> {
    if n_lists == 0 || !n_lists.is_multiple_of(2) {
        return Err(SpeakerError::GenerationFailure(format!(
            "number of lists must be positive and even, got {n_lists}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schedule = make_schedule(&mut rng);
    let mut sets: Vec<Vec<Frame>> = Vec::with_capacity(2);
    for set in ["A", "B"] {
        let frames = (0..BLOCK_LEN)
            .map(|i| generate_frame(&mut rng, format!("{set}{i:02}")))
            .collect::<Result<Vec<_>, _>>()?;
        sets.push(frames);
    }

    (0..n_lists)
        .map(|i| {
            let pia_first = i % 2 == 0;
            let k = (i / 2) % 4;
            let rotated = k & 1 == 1;
            let swapped = k & 2 == 2;
            let (pia_set, lisa_set) = if swapped { (1, 0) } else { (0, 1) };
            let pia = build_block(Speaker::Pia, &sets[pia_set], &schedule, rotated)?;
            let lisa = build_block(Speaker::Lisa, &sets[lisa_set], &schedule, rotated)?;
            let blocks = if pia_first {
                vec![pia, lisa]
            } else {
                vec![lisa, pia]
            };
            let list = ExperimentList {
                id: format!("{}-s{seed}-l{i}", mode.as_str()),
                mode,
                seed,
                index: i,
                schedule: schedule.clone(),
                blocks,
            };
            list.validate()?;
            Ok(list)
        })
        .collect()
}
