//! Acceptance suite: prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Runs without a test harness so the lines show up
//! in plain `cargo test` output.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bwim_core::agents::{make_agent, run_agent, AdaptiveAgent, AdaptiveAgentConfig};
use bwim_core::dsl::{
    parse, render, BuildClause, Corner, InstructionAst, Referent, Relation, Selector, SpecType,
    COUNTS,
};
use bwim_core::metrics::{
    ols, ols_fit, records_from_transcript, MetricsError, RatingModel, ResponseClass, TrialRecord,
};
use bwim_core::session::{
    parse_build_response, replay, EventKind, Session, SessionConfig, Transcript,
};
use bwim_core::speakers::{
    generate_lists, read_list, ExperimentList, FeedbackType, Mode, Speaker,
};
use bwim_core::world::{
    parse_wire, render_wire, structures_equal, Block, Cell, Color, Structure,
};
use bwim_gateway::commands::run_external;

type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

// ---------------------------------------------------------------- tolerances

/// Coefficient error allowed when the planted data carry noise.
const NOISY_TOLERANCE: f64 = 0.02;
/// Coefficient error allowed on noiseless planted data.
const EXACT_TOLERANCE: f64 = 1e-8;
const PLANTED_SIGMA: f64 = 0.1;
const PLANTED_N: usize = 2000;
const ROUND_TRIP_PAIRS: usize = 10_000;
const WIRE_ROUND_TRIPS: usize = 2_000;
/// Generation seeds for the composition check; 8 lists per seed and mode.
const COMPOSITION_SEEDS: u64 = 13;
const CHILD_TIMEOUT: Duration = Duration::from_secs(20);

// ------------------------------------------------------------------ fixtures

fn data() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn load(path: &Path) -> Arc<ExperimentList> {
    let bytes = std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    Arc::new(read_list(bytes.as_slice()).unwrap())
}

fn shipped(mode: Option<Mode>) -> Vec<(PathBuf, Arc<ExperimentList>)> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(data().join("lists"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "list"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let list = load(&p);
            (p, list)
        })
        .filter(|(_, l)| mode.is_none_or(|m| l.mode == m))
        .collect()
}

fn run_reference(agent: &str, list: &Arc<ExperimentList>, seed: u64) -> Transcript {
    let mut builder = make_agent(agent, seed, false, Some(list.clone())).unwrap();
    run_agent(builder.as_mut(), SessionConfig::new(list.clone(), agent)).unwrap()
}

fn speaker_at(list: &ExperimentList, trial: usize) -> Speaker {
    let (block, _) = list.trial(trial).expect("trial in range");
    list.blocks[block].speaker
}

fn block_scores(t: &Transcript, list: &ExperimentList) -> BTreeMap<Speaker, i64> {
    let mut out = BTreeMap::new();
    for e in t.events() {
        if let EventKind::FeedbackGiven { trial, round_score, .. } = e.kind {
            *out.entry(speaker_at(list, trial)).or_insert(0) += round_score;
        }
    }
    out
}

fn questions_by_speaker(t: &Transcript, list: &ExperimentList) -> BTreeMap<Speaker, usize> {
    let mut out = BTreeMap::from([(Speaker::Pia, 0), (Speaker::Lisa, 0)]);
    for e in t.events() {
        if let EventKind::QuestionAsked { trial, .. } = e.kind {
            *out.get_mut(&speaker_at(list, trial)).unwrap() += 1;
        }
    }
    out
}

fn total(t: &Transcript) -> i64 {
    t.events()
        .iter()
        .find_map(|e| match e.kind {
            EventKind::SessionEnd { total_score } => Some(total_score),
            _ => None,
        })
        .expect("finished transcript")
}

// ------------------------------------------------------------------ criteria

fn figure() -> Check {
    const TEXT: &str = "Behind the rightmost blue block, build a red stack of three blocks. \
                        Build a yellow stack directly to the right of the red one.";
    const BUILD: &str = "Blue,0,50,0; Blue,-100,50,0;\n Blue,100,50,0; Red,100,50,-100;\n \
                         Red,100,150,-100; Red,100,250,-100; \nYellow,200,50,-100; \
                         Yellow,200,150,-100; Yellow,200,250,-100.";
    let list = load(&data().join("fixtures/figure.list"));
    let (mut session, _) = Session::start(SessionConfig::new(list, "scripted")).unwrap();
    for _ in 0..2 {
        let target = session.current_item().unwrap().target.clone();
        session.submit_build(&target, None).map_err(|e| e.to_string())?;
    }
    let prompt = session.current_prompt().unwrap();
    ensure!(prompt.instruction == TEXT, "third trial is {:?}", prompt.instruction);
    ensure!(
        render_wire(&prompt.existing) == "Blue,0,50,0;Blue,-100,50,0;Blue,100,50,0",
        "initial structure {}",
        render_wire(&prompt.existing)
    );
    let answer = session
        .submit_question("How high should the yellow stack be?")
        .map_err(|e| e.to_string())?;
    ensure!(answer.text.starts_with("3 blocks high"), "answer {:?}", answer.text);
    let turn = session.submit_build_text(BUILD, None).map_err(|e| e.to_string())?;
    ensure!(
        turn.feedback.text.starts_with("Correct structure built! (+10 points)"),
        "feedback {:?}",
        turn.feedback.text
    );
    ensure!(turn.feedback.round_score == 5, "round score {}", turn.feedback.round_score);
    let golden = std::fs::read_to_string(data().join("fixtures/figure.jsonl")).unwrap();
    ensure!(
        session.transcript().to_jsonl() == golden,
        "transcript differs from the golden file"
    );
    Ok(())
}

fn composition() -> Check {
    let mut checked = 0;
    for seed in 0..COMPOSITION_SEEDS {
        for mode in [Mode::Qa, Mode::Confidence] {
            let lists = generate_lists(mode, 8, seed).map_err(|e| e.to_string())?;
            let first = &lists[0];
            for list in &lists {
                ensure!(list.blocks.len() == 2, "{}: {} blocks", list.id, list.blocks.len());
                for block in &list.blocks {
                    let who = format!("{} {}", list.id, block.speaker.name());
                    let counts = [SpecType::Full, SpecType::OmitColor, SpecType::OmitCount]
                        .map(|s| block.count_spec(s));
                    ensure!(counts == [8, 6, 6], "{who}: spec counts {counts:?}");

                    // Confirm the labels against the semantics itself.
                    let mut consistent = 0;
                    let mut literal = 0;
                    for item in block.items.iter().filter(|i| i.spec_type.is_underspecified()) {
                        let set = item.interpretations().map_err(|e| e.to_string())?;
                        let pragmatic = set.pragmatic().ok_or(format!("{who}: no default"))?;
                        if structures_equal(&pragmatic.structure, &item.target) {
                            consistent += 1;
                            ensure!(
                                item.feedback_type == FeedbackType::PragmaticConsistent,
                                "{who}/{}: mislabeled",
                                item.id
                            );
                        } else {
                            literal += 1;
                            ensure!(
                                set.position_of(&item.target).is_some(),
                                "{who}/{}: target is not a literal reading",
                                item.id
                            );
                        }
                    }
                    let expected = match block.speaker {
                        Speaker::Pia => (12, 0),
                        Speaker::Lisa => (4, 8),
                    };
                    ensure!((consistent, literal) == expected, "{who}: split {consistent}/{literal}");

                    let reference = first.block_for(block.speaker).unwrap();
                    ensure!(
                        block.critical_positions() == reference.critical_positions(),
                        "{who}: critical positions differ from {}",
                        first.id
                    );
                }
                ensure!(
                    list.schedule.lisa_consistent == first.schedule.lisa_consistent,
                    "{}: Lisa's consistent positions move",
                    list.id
                );
                checked += 1;
            }
        }
    }
    ensure!(checked >= 100, "only {checked} lists");
    Ok(())
}

fn baselines() -> Check {
    let lists = shipped(Some(Mode::Qa));
    ensure!(!lists.is_empty(), "no shipped QA lists");
    let expect = |agent: &str, speaker: Speaker| match (agent, speaker) {
        ("pragmatic", Speaker::Pia) => 200,
        ("pragmatic", Speaker::Lisa) => 40,
        ("always-ask", _) => 140,
        ("oracle", _) => 200,
        _ => unreachable!(),
    };
    for (_, list) in &lists {
        for agent in ["pragmatic", "always-ask", "oracle"] {
            let scores = block_scores(&run_reference(agent, list, 0), list);
            for speaker in [Speaker::Pia, Speaker::Lisa] {
                let got = scores[&speaker];
                let want = expect(agent, speaker);
                ensure!(got == want, "{} {agent} vs {}: {got} != {want}", list.id, speaker.name());
            }
        }
    }
    Ok(())
}

fn adaptive_properties() -> Check {
    for (_, list) in shipped(Some(Mode::Qa)) {
        let mut agent = AdaptiveAgent::new(AdaptiveAgentConfig::default()).unwrap();
        let t = run_agent(&mut agent, SessionConfig::new(list.clone(), "adaptive"))
            .map_err(|e| e.to_string())?;
        let q = questions_by_speaker(&t, &list);
        ensure!(q[&Speaker::Lisa] > q[&Speaker::Pia], "{}: questions {q:?}", list.id);

        let best = total(&run_reference("pragmatic", &list, 0))
            .max(total(&run_reference("always-ask", &list, 0)));
        ensure!(total(&t) >= best, "{}: adaptive {} < baseline {best}", list.id, total(&t));

        // Realized counts from the list, independent of the agent.
        let lisa = list.block_for(Speaker::Lisa).unwrap();
        let (mut k, mut m) = (0.0, 0.0);
        for item in lisa.items.iter().filter(|i| i.spec_type.is_underspecified()) {
            let set = item.interpretations().unwrap();
            if structures_equal(&set.pragmatic().unwrap().structure, &item.target) {
                k += 1.0;
            } else {
                m += 1.0;
            }
        }
        let lisa_index = list.speaker_order().iter().position(|&s| s == Speaker::Lisa).unwrap();
        let post = agent.block_end_posteriors()[lisa_index];
        ensure!(
            post.a == 9.0 + k && post.b == 1.0 + m,
            "{}: posterior ({}, {}) but (k, m) = ({k}, {m})",
            list.id,
            post.a,
            post.b
        );
    }
    Ok(())
}

fn random_clause(rng: &mut ChaCha8Rng) -> BuildClause {
    let color = |rng: &mut ChaCha8Rng| Color::ALL[rng.gen_range(0..Color::ALL.len())];
    let count = COUNTS[rng.gen_range(0..COUNTS.len())];
    let c = color(rng);
    let (relation, referent) = match rng.gen_range(0..7) {
        0 => (Relation::AtCorner(Corner::ALL[rng.gen_range(0..4)]), None),
        1 => (Relation::AtOrigin, None),
        r => {
            let relation = [
                Relation::Behind,
                Relation::InFrontOf,
                Relation::LeftOf,
                Relation::RightOf,
                Relation::OnTopOf,
            ][r - 2];
            let referent = match rng.gen_range(0..3) {
                0 => Referent::ExistingColored {
                    color: color(rng),
                    selector: [Selector::Unique, Selector::Leftmost, Selector::Rightmost]
                        [rng.gen_range(0..3)],
                },
                1 => Referent::LastBuilt,
                _ => Referent::NamedColoredStack(color(rng)),
            };
            (relation, Some(referent))
        }
    };
    BuildClause::full(count, c, relation, referent)
}

fn parser_round_trips() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..ROUND_TRIP_PAIRS {
        let n = rng.gen_range(1..=2);
        let clauses = (0..n).map(|_| random_clause(&mut rng)).collect();
        let spec = [SpecType::Full, SpecType::OmitColor, SpecType::OmitCount][rng.gen_range(0..3)];
        let ast = InstructionAst::new(clauses)
            .and_then(|a| a.with_omission(spec))
            .map_err(|e| e.to_string())?;
        let seed: u64 = rng.gen();
        let text = render(&ast, seed);
        let back = parse(&text).map_err(|e| format!("{text:?}: {e}"))?;
        ensure!(back == ast, "{text:?} parsed to a different instruction");
    }

    let cells: Vec<Cell> = Cell::all().collect();
    for _ in 0..WIRE_ROUND_TRIPS {
        let mut s = Structure::empty();
        for _ in 0..rng.gen_range(0..30) {
            let cell = cells[rng.gen_range(0..cells.len())];
            let color = Color::ALL[rng.gen_range(0..Color::ALL.len())];
            if let Ok(next) = s.stack(cell, color, 1) {
                s = next;
            }
        }
        let wire = render_wire(&s);
        let back = parse_wire(&wire).map_err(|e| format!("{wire}: {e}"))?;
        ensure!(back == s && render_wire(&back) == wire, "{wire} does not round-trip");
    }

    // The three example items, one per condition.
    let green = Referent::ExistingColored {
        color: Color::Green,
        selector: Selector::Unique,
    };
    let number = parse(
        "Stack three green blocks behind the existing green block. \
         Build a yellow stack to the right of the green one.",
    )
    .map_err(|e| e.to_string())?;
    ensure!(
        number.clauses()
            == [
                BuildClause::full(3, Color::Green, Relation::Behind, Some(green)),
                BuildClause {
                    count: None,
                    color: Some(Color::Yellow),
                    relation: Relation::RightOf,
                    referent: Some(Referent::NamedColoredStack(Color::Green)),
                },
            ],
        "number-underspecified item: {number:?}"
    );
    let color = parse(
        "Stack three blue blocks in front of the existing blue blocks. \
         Then stack two blocks to the left of the tower you just built.",
    )
    .map_err(|e| e.to_string())?;
    ensure!(
        *color.target()
            == BuildClause {
                count: Some(2),
                color: None,
                relation: Relation::LeftOf,
                referent: Some(Referent::LastBuilt),
            },
        "color-underspecified item: {color:?}"
    );
    let full = parse(
        "Stack three red blocks in the bottom right corner. \
         Put two yellow blocks on top of the red stack you just built.",
    )
    .map_err(|e| e.to_string())?;
    ensure!(
        full.clauses()
            == [
                BuildClause::full(3, Color::Red, Relation::AtCorner(Corner::BottomRight), None),
                BuildClause::full(
                    2,
                    Color::Yellow,
                    Relation::OnTopOf,
                    Some(Referent::NamedColoredStack(Color::Red))
                ),
            ],
        "fully specified item: {full:?}"
    );

    // Wire examples from the prompt documentation.
    let (built, rating) = parse_build_response(
        "Coordinates: Purple,100,50,0; Purple,100,150,0; Purple,100,250,0; Purple,200,50,0; \
         Purple,300,50,0; Rating:3",
    )
    .map_err(|e| e.to_string())?;
    ensure!(rating == Some(3), "rating {rating:?}");
    ensure!(
        render_wire(&built)
            == "Purple,100,50,0;Purple,100,150,0;Purple,100,250,0;Purple,200,50,0;Purple,300,50,0",
        "built {}",
        render_wire(&built)
    );
    let correct = parse_wire(
        "Purple,100,50,0; Purple,100,150,0; Purple,100,250,0; Green,200,50,0; Green,300,50,0;",
    )
    .map_err(|e| e.to_string())?;
    ensure!(!structures_equal(&built, &correct), "feedback example compares equal");
    ensure!(parse_wire("nan") == Ok(Structure::empty()), "nan is not empty");
    ensure!(render_wire(&Structure::empty()) == "nan", "empty does not render as nan");
    let row = parse_wire("Blue,0,50,0;Blue,-100,50,0;Blue,100,50,0").map_err(|e| e.to_string())?;
    ensure!(row.len() == 3, "three-block row");
    let reordered = parse_wire("Blue,0,150,0;Blue,0,50,0").map_err(|e| e.to_string())?;
    ensure!(reordered.height_at(Cell::new(0, 0).unwrap()) == 2, "column reorder");
    for (corner, xz) in [
        (Corner::BottomLeft, (-400, 400)),
        (Corner::BottomRight, (400, 400)),
        (Corner::TopRight, (400, -400)),
        (Corner::TopLeft, (-400, -400)),
    ] {
        ensure!(corner.xz() == xz, "{corner:?} at {:?}", corner.xz());
    }
    ensure!(
        Block::at(Color::Yellow, 200, 50, -100).unwrap().to_string() == "Yellow,200,50,-100",
        "block rendering"
    );
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn confidence_direction() -> Check {
    let mut lists: Vec<Arc<ExperimentList>> =
        shipped(Some(Mode::Confidence)).into_iter().map(|(_, l)| l).collect();
    for seed in 100..104 {
        lists.extend(generate_lists(Mode::Confidence, 8, seed).unwrap().into_iter().map(Arc::new));
    }
    for list in &lists {
        let records = records_from_transcript(&run_reference("adaptive", list, 0), 0)
            .map_err(|e| e.to_string())?;
        let ratings = |speaker: Speaker, under: bool| -> Vec<f64> {
            records
                .iter()
                .filter(|r| r.speaker == speaker && r.spec_type.is_underspecified() == under)
                .map(|r| f64::from(r.rating.expect("confidence mode rates every trial")))
                .collect()
        };
        let (pia, lisa) = (mean(&ratings(Speaker::Pia, true)), mean(&ratings(Speaker::Lisa, true)));
        ensure!(lisa < pia, "{}: underspecified Lisa {lisa} vs Pia {pia}", list.id);
        let (pia_full, lisa_full) =
            (mean(&ratings(Speaker::Pia, false)), mean(&ratings(Speaker::Lisa, false)));
        ensure!(pia_full == lisa_full, "{}: full {pia_full} vs {lisa_full}", list.id);
    }
    Ok(())
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn record(agent: &str, speaker: Speaker, rating: u8, i: usize) -> TrialRecord {
    TrialRecord {
        agent: agent.into(),
        list_id: "synthetic".into(),
        session: i % 10,
        item: format!("0/I{:02}", i % 20),
        speaker,
        spec_type: SpecType::OmitCount,
        feedback_type: FeedbackType::PragmaticConsistent,
        position: i % 20 + 1,
        time_segment: i % 4 + 1,
        correct: true,
        rating: Some(rating),
        asked: false,
        forfeited: false,
        response_class: ResponseClass::Pragmatic,
    }
}

fn regression_recovery() -> Check {
    let names: Vec<String> = ["intercept", "agent=b", "speaker=Pia", "agent=b:speaker=Pia"]
        .map(String::from)
        .to_vec();
    let truth = [2.9, -0.6, 0.35, 0.15];
    for (sigma, tolerance) in [(PLANTED_SIGMA, NOISY_TOLERANCE), (0.0, EXACT_TOLERANCE)] {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let rows: Vec<[f64; 4]> = (0..PLANTED_N)
            .map(|_| {
                let b = f64::from(u8::from(rng.gen_bool(0.5)));
                let pia = f64::from(u8::from(rng.gen_bool(0.5)));
                [1.0, b, pia, b * pia]
            })
            .collect();
        let x = DMatrix::from_fn(PLANTED_N, 4, |r, c| rows[r][c]);
        let y = DVector::from_iterator(
            PLANTED_N,
            rows.iter()
                .map(|row| row.iter().zip(&truth).map(|(a, b)| a * b).sum::<f64>() + sigma * gaussian(&mut rng)),
        );
        let fit = ols(&names, &x, &y).map_err(|e| e.to_string())?;
        for (c, t) in fit.coefficients.iter().zip(truth) {
            ensure!((c.beta - t).abs() <= tolerance, "σ={sigma}: {} = {} vs {t}", c.name, c.beta);
        }
    }

    // Through the record-level model: integer cell means, no noise.
    let cell = |agent: &str, speaker: Speaker| match (agent, speaker) {
        ("a", Speaker::Lisa) => 3,
        ("a", Speaker::Pia) => 4,
        ("b", Speaker::Lisa) => 1,
        _ => 3,
    };
    let records: Vec<TrialRecord> = (0..PLANTED_N)
        .map(|i| {
            let agent = if i % 2 == 0 { "a" } else { "b" };
            let speaker = if (i / 2) % 2 == 0 { Speaker::Lisa } else { Speaker::Pia };
            record(agent, speaker, cell(agent, speaker), i)
        })
        .collect();
    let fit = ols_fit(&records, &RatingModel::default()).map_err(|e| e.to_string())?;
    for (name, t) in
        [("intercept", 3.0), ("agent=b", -2.0), ("speaker=Pia", 1.0), ("agent=b:speaker=Pia", 1.0)]
    {
        let c = fit.get(name).ok_or(format!("missing {name}"))?;
        ensure!((c.beta - t).abs() <= EXACT_TOLERANCE, "{name} = {} vs {t}", c.beta);
    }

    // Degenerate designs.
    let one_speaker: Vec<TrialRecord> =
        records.iter().filter(|r| r.speaker == Speaker::Pia).cloned().collect();
    ensure!(
        matches!(ols_fit(&one_speaker, &RatingModel::default()), Err(MetricsError::RankDeficient(_))),
        "single-speaker data were fitted"
    );
    let twin = DMatrix::from_fn(50, 3, |r, c| if c == 0 { 1.0 } else { (r % 7) as f64 });
    let y = DVector::from_fn(50, |r, _| r as f64);
    let names3: Vec<String> = ["intercept", "u", "v"].map(String::from).to_vec();
    ensure!(
        matches!(ols(&names3, &twin, &y), Err(MetricsError::RankDeficient(_))),
        "duplicated columns were fitted"
    );
    Ok(())
}

fn determinism_and_replay() -> Check {
    let (_, qa) = shipped(Some(Mode::Qa)).remove(0);
    let (_, conf) = shipped(Some(Mode::Confidence)).remove(0);
    for (list, agents) in [
        (&qa, &["pragmatic", "random", "always-ask", "adaptive", "oracle"][..]),
        (&conf, &["pragmatic", "random", "adaptive"][..]),
    ] {
        for agent in agents {
            for seed in [0, 99] {
                let a = run_reference(agent, list, seed).to_jsonl();
                let b = run_reference(agent, list, seed).to_jsonl();
                ensure!(a == b, "{} {agent} seed {seed}: runs differ", list.id);
            }
        }
    }
    let mut replayed = 0;
    for entry in std::fs::read_dir(data().join("transcripts")).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        let list_id = name.split('.').next().unwrap();
        let list = load(&data().join("lists").join(format!("{list_id}.list")));
        let t = Transcript::read(std::fs::read(&path).unwrap().as_slice())
            .map_err(|e| format!("{name}: {e}"))?;
        let session = replay(&t, list).map_err(|e| format!("{name}: {e}"))?;
        ensure!(session.state().total_score == total(&t), "{name}: score differs");
        replayed += 1;
    }
    ensure!(replayed > 0, "no shipped transcripts");
    Ok(())
}

fn transport_transparency() -> Check {
    let bin = env!("CARGO_BIN_EXE_bwim");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cases: Vec<(String, PathBuf, Arc<ExperimentList>)> = shipped(None)
        .into_iter()
        .map(|(p, l)| ("adaptive".to_string(), p, l))
        .collect();
    let (qa_path, qa) = shipped(Some(Mode::Qa)).remove(0);
    for agent in ["pragmatic", "random", "always-ask", "oracle"] {
        cases.push((agent.to_string(), qa_path.clone(), qa.clone()));
    }
    for (i, (agent, path, list)) in cases.iter().enumerate() {
        let cmd = format!(
            "'{bin}' child-agent --agent {agent} --list '{}'",
            path.display()
        );
        let out = dir.path().join(format!("{i}.jsonl"));
        let external = run_external(&cmd, path, &out, false, CHILD_TIMEOUT)
            .map_err(|e| format!("{} {agent}: {e}", list.id))?;
        let local = run_reference(agent, list, 0);
        ensure!(
            external.to_jsonl() == local.to_jsonl(),
            "{} {agent}: adapter transcript differs",
            list.id
        );
        ensure!(
            std::fs::read_to_string(&out).unwrap() == local.to_jsonl(),
            "{} {agent}: written file differs",
            list.id
        );
    }
    Ok(())
}

// --------------------------------------------------------------------- runner

struct Criterion {
    name: &'static str,
    budget: Duration,
    check: fn() -> Check,
}

const CRITERIA: [Criterion; 9] = [
    Criterion { name: "figure-reproduction", budget: Duration::from_secs(1), check: figure },
    Criterion { name: "composition-guarantees", budget: Duration::from_secs(30), check: composition },
    Criterion { name: "baseline-score-oracles", budget: Duration::from_secs(5), check: baselines },
    Criterion { name: "adaptive-agent-properties", budget: Duration::from_secs(10), check: adaptive_properties },
    Criterion { name: "parser-wire-round-trips", budget: Duration::from_secs(60), check: parser_round_trips },
    Criterion { name: "confidence-direction", budget: Duration::from_secs(10), check: confidence_direction },
    Criterion { name: "regression-recovery", budget: Duration::from_secs(5), check: regression_recovery },
    Criterion { name: "determinism-and-replay", budget: Duration::from_secs(10), check: determinism_and_replay },
    Criterion { name: "transport-transparency", budget: Duration::from_secs(10), check: transport_transparency },
];

fn main() -> ExitCode {
    // `cargo test -- --list` and filters are harness conventions; honour
    // `--list` so tooling that enumerates tests does not run the suite.
    if std::env::args().any(|a| a == "--list") {
        for c in &CRITERIA {
            println!("{}: test", c.name);
        }
        return ExitCode::SUCCESS;
    }
    std::panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for c in &CRITERIA {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.check)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(format!("panic: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|()| {
            if elapsed <= c.budget {
                Ok(())
            } else {
                Err(format!("over budget ({:.1} s allowed)", c.budget.as_secs_f64()))
            }
        });
        match outcome {
            Ok(()) => println!("PASS {:<26} {:>7.3} s", c.name, elapsed.as_secs_f64()),
            Err(why) => {
                failures += 1;
                println!("FAIL {:<26} {:>7.3} s  {why}", c.name, elapsed.as_secs_f64());
            }
        }
    }
    println!(
        "acceptance: {} passed, {failures} failed",
        CRITERIA.len() - failures
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
