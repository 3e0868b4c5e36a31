//! Seeded surface realization from a fixed template bank.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BuildClause, InstructionAst, Referent, Relation, Selector};

fn numeral_word(n: u8) -> &'static str {
    match n {
        2 => "two",
        3 => "three",
        4 => "four",
        _ => unreachable!("validated clause counts are 2..=4"),
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, options: &[&'a str]) -> &'a str {
    options.choose(rng).copied().expect("non-empty template list")
}

fn referent_phrase(rng: &mut ChaCha8Rng, referent: Referent) -> String {
    match referent {
        Referent::ExistingColored { color, selector } => match selector {
            Selector::Unique => format!("the existing {} block", color.word()),
            Selector::Leftmost => format!("the leftmost {} block", color.word()),
            Selector::Rightmost => format!("the rightmost {} block", color.word()),
        },
        Referent::LastBuilt => pick(rng, &["the tower you just built", "the stack you just built"])
            .to_string(),
        Referent::NamedColoredStack(color) => {
            let template = pick(
                rng,
                &[
                    "the {} one",
                    "the {} stack",
                    "the {} tower",
                    "the {} stack you just built",
                ],
            );
            template.replace("{}", color.word())
        }
    }
}

fn relation_phrase(rng: &mut ChaCha8Rng, clause: &BuildClause) -> String {
    let head = match clause.relation {
        Relation::Behind => "behind",
        Relation::InFrontOf => "in front of",
        Relation::LeftOf => pick(rng, &["to the left of", "directly to the left of"]),
        Relation::RightOf => pick(rng, &["to the right of", "directly to the right of"]),
        Relation::OnTopOf => "on top of",
        Relation::AtCorner(corner) => {
            let (vertical, side) = corner.words();
            let prep = pick(rng, &["in", "at"]);
            return format!("{prep} the {vertical} {side} corner");
        }
        Relation::AtOrigin => {
            return pick(rng, &["in the middle square", "at the origin"]).to_string();
        }
    };
    let referent = clause.referent.expect("validated: relation has a referent");
    format!("{head} {}", referent_phrase(rng, referent))
}

/// Verb and object, e.g. `stack three green blocks` or `build a yellow stack`.
fn verb_object(rng: &mut ChaCha8Rng, clause: &BuildClause) -> String {
    match (clause.count, clause.color) {
        (Some(n), Some(c)) => {
            let num = numeral_word(n);
            match rng.gen_range(0..4) {
                0 => format!("{} {num} {} blocks", pick(rng, &["stack", "put", "place"]), c.word()),
                1 => format!("build a {} stack of {num} blocks", c.word()),
                2 => format!("build a {} tower of {num} blocks", c.word()),
                _ => format!("build a stack of {num} {} blocks", c.word()),
            }
        }
        (Some(n), None) => {
            let num = numeral_word(n);
            match rng.gen_range(0..3) {
                0 => format!("{} {num} blocks", pick(rng, &["stack", "put", "place"])),
                1 => format!("build a stack of {num} blocks"),
                _ => format!("build a tower of {num} blocks"),
            }
        }
        (None, Some(c)) => format!("build a {} {}", c.word(), pick(rng, &["stack", "tower"])),
        (None, None) => unreachable!("validated: at most one omission"),
    }
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn sentence(rng: &mut ChaCha8Rng, clause: &BuildClause, later: bool) -> String {
    let vo = verb_object(rng, clause);
    let rel = relation_phrase(rng, clause);
    let body = if rng.gen_bool(0.25) {
        format!("{rel}, {vo}")
    } else {
        format!("{vo} {rel}")
    };
    let body = if later && rng.gen_bool(0.3) {
        format!("then {body}")
    } else {
        body
    };
    format!("{}.", capitalize(&body))
}

/// Renders an instruction; the same `(ast, seed)` always gives the same text.
pub fn render(ast: &InstructionAst, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ast.clauses()
        .iter()
        .enumerate()
        .map(|(i, c)| sentence(&mut rng, c, i > 0))
        .collect::<Vec<_>>()
        .join(" ")
}
