//! Scores the shipped fixtures and prints their explanations.
//!
//! ```text
//! cargo run -p socialcredit-core --example explain_fixtures
//! ```

use socialcredit_core::service::{MemoryStore, Service, SystemClock};
use socialcredit_core::Pipeline;

fn main() {
    let svc = Service::new(Pipeline::default(), Box::new(MemoryStore::new()), Box::new(SystemClock));
    for src in [
        include_str!("../fixtures/user_a.json"),
        include_str!("../fixtures/user_b.json"),
        include_str!("../fixtures/user_c.json"),
    ] {
        let r = svc.submit_application(src.as_bytes()).expect("fixture scores");
        let report = svc.get_explanation(&r.application_id).expect("explanation");
        println!("{}", report.render_text());
    }
}
