//! Event-log export/import: a realized clock record roundtrips through its
//! CSV form exactly, so runs can be replayed and diffed across
//! implementations.
//!
//! Run: cargo run --release --example event_log_replay

use ssep_tree::engine::{evolve, sample_events, sample_nu_p, EventLog};
use ssep_tree::rng::RngStream;
use ssep_tree::tree::build_ball;

fn main() {
    let ball = build_ball(2, 2).unwrap();
    let mut rng = RngStream::new(314, 15);
    let log = sample_events(&ball, 2.0, &mut rng).unwrap();
    let eta0 = sample_nu_p(&ball, 0.5, &mut rng).unwrap();

    let csv = log.to_csv(&ball);
    println!("--- first rows of the exported log ---");
    for line in csv.lines().take(6) {
        println!("{line}");
    }
    println!("({} events total)", log.len());

    let replayed = EventLog::from_csv(&ball, &csv).unwrap();
    let direct = evolve(&ball, &eta0, &log, 2.0).unwrap();
    let via_csv = evolve(&ball, &eta0, &replayed, 2.0).unwrap();
    println!("replayed evolution identical: {}", direct == via_csv);
    println!("event lists identical: {}", log.events() == replayed.events());
}
