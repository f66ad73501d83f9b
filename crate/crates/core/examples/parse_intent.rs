//! Parse a structured intent, print its canonical form, then show how a
//! malformed document is rejected.
//!
//!     cargo run --example parse_intent [path/to/intent.json]

use sai_core::parse_intent;

fn main() {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/intents/chain3.json").to_string());
    let text = std::fs::read_to_string(&path).expect("readable intent file");
    match parse_intent(&text) {
        Ok(intent) => {
            println!("{} task(s), k = {}", intent.task_requests.len(), intent.combination_count);
            println!("{}", intent.to_document());
        }
        Err(e) => println!("rejected: {} at {:?}: {}", e.error_kind, e.field_path, e),
    }

    let bad = r#"{"intent_id": "x", "goal": "", "task_requests": [], "utilization_budget": 2}"#;
    let err = parse_intent(bad).unwrap_err();
    println!("malformed document -> {} at {:?}", err.error_kind, err.field_path);
}
