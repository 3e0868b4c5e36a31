use serde_json::Value;

use bwim_web::{interpret, parse_structure, simulate};

fn value(json: String) -> Value {
    let v: Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["ok"], true, "{v}");
    v["value"].clone()
}

#[test]
fn interpret_lists_readings_with_the_default_flagged() {
    let reading = value(interpret(
        "Blue,0,50,0;Blue,-100,50,0;Blue,100,50,0",
        "Behind the rightmost blue block, build a red stack of three blocks. \
         Build a yellow stack directly to the right of the red one.",
    ));
    assert_eq!(reading["spec_type"], "OmitCount");
    assert_eq!(reading["context"].as_array().unwrap().len(), 6);
    let candidates = reading["candidates"].as_array().unwrap();
    let counts: Vec<u64> = candidates.iter().map(|c| c["count"].as_u64().unwrap()).collect();
    assert_eq!(counts, [2, 3, 4]);
    let defaults: Vec<&Value> = candidates.iter().filter(|c| c["pragmatic"] == true).collect();
    assert_eq!(defaults.len(), 1);
    assert_eq!(defaults[0]["count"], 3);
    assert!(defaults[0]["wire"].as_str().unwrap().ends_with("Yellow,200,250,-100"));
}

#[test]
fn errors_come_back_in_the_envelope() {
    let v: Value = serde_json::from_str(&interpret("nan", "Stack one block.")).unwrap();
    assert_eq!(v["ok"], false);
    assert!(v["error"].as_str().unwrap().contains("at byte 6"), "{v}");

    let v: Value = serde_json::from_str(&parse_structure("Red,0,150,0")).unwrap();
    assert_eq!(v["ok"], false);

    let blocks = value(parse_structure("Blue,0,150,0; Blue,0,50,0"));
    assert_eq!(blocks["wire"], "Blue,0,50,0;Blue,0,150,0");

    let v: Value = serde_json::from_str(&simulate(0.0, 1.0, 0.75, false, 1, 0)).unwrap();
    assert_eq!(v["ok"], false);
}

#[test]
fn simulation_beats_the_fixed_builders() {
    let sim = value(simulate(9.0, 1.0, 0.75, false, 7, 0));
    let trials = sim["trials"].as_array().unwrap();
    assert_eq!(trials.len(), 40);
    let total = sim["total_score"].as_i64().unwrap();
    assert_eq!(trials.last().unwrap()["total_score"].as_i64().unwrap(), total);
    for pair in sim["baselines"].as_array().unwrap() {
        if pair[0] != "oracle" {
            assert!(total >= pair[1].as_i64().unwrap(), "{pair}");
        }
    }
    let q = sim["questions_per_block"].as_array().unwrap();
    let order = sim["speaker_order"].as_array().unwrap();
    let lisa = order.iter().position(|s| s == "Lisa").unwrap();
    assert!(q[lisa].as_u64().unwrap() > q[1 - lisa].as_u64().unwrap());
}
