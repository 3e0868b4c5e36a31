//! Fixed message texts shown to the builder.

use crate::speakers::{Mode, Speaker};
use crate::world::{render_wire, Structure};

const GRID_DESCRIPTION: &str = "Grid: 9x9 cells. Origin=\"middle square\": center (0,0), is highlighted. \
The grid is the x\u{2013}z plane. In front of you is the bottom left corner (-400,0,400) and the bottom right corner (400,0,400). \
Top right corner is (400,0,-400), top left corner is (-400,0,-400).";

const VALID_VALUES: &str = "Valid x,z:[-400,-300,-200,-100,0,100,200,300,400]. \
Y(ground)=50; each extra block adds +100; valid y values are [50,150,250,350,450].";

const RATING_REQUEST: &str = "On a scale of 1-4, rate how certain you are that this is the structure that the previous participant saw, \
1 means 'not certain at all', 4 means 'very certain'.";

pub const QUESTION_REFUSAL: &str = "No further questions allowed; please build.";

pub fn system_prompt(mode: Mode) -> String {
    match mode {
        Mode::Confidence => format!(
            "CONTEXT: \n{GRID_DESCRIPTION} \n{VALID_VALUES} The grid may or may not contain an existing structure. \
\"Existing structure: nan\" means that the grid is empty. \"A stack\" means more than one block. \n\n\
Output:\"Coordinates:Color,x,y,z; Color,x,y,z;Rating:\"; items separated by \";\"; no spaces; \
write coordinates of all blocks that are on the grid, including the initial coordinates; color should be capitalized.\n\n\
After every task: {RATING_REQUEST}"
        ),
        Mode::Qa => format!(
            "{GRID_DESCRIPTION} {VALID_VALUES} The grid may or may not contain an existing structure. The grid might be empty. \
Output: \"Coordinates: Color,x,y,z; Color,x,y,z;\" items separated by \";\"; no spaces; \
write coordinates of all blocks that are on the grid, including the initial coordinates; color should be capitalized. \n\n\
Only one question is allowed. Scoring: Building the correct structure earns +10 points. \
Asking a question costs -5 points. Building an incorrect structure costs -10 points."
        ),
    }
}

/// The per-trial message: the existing grid followed by the instruction.
pub fn trial_text(mode: Mode, existing: &Structure, instruction: &str) -> String {
    let task = format!("Existing structure: {}. {instruction}", render_wire(existing));
    match mode {
        Mode::Confidence => format!("YOUR TASK: \n{task}\n{RATING_REQUEST}\n\nYOUR ANSWER:"),
        Mode::Qa => task,
    }
}

pub fn speaker_change_text(speaker: Speaker) -> String {
    format!(
        "Speaker change: from now on your instructions come from a new speaker, {}.",
        speaker.name()
    )
}

pub fn debrief_text() -> String {
    "That was the last instruction. In a few sentences, how did the two speakers, Pia and Lisa, \
differ in the way they gave instructions?"
        .to_string()
}
