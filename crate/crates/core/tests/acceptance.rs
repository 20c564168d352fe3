//! One line per acceptance criterion; exits non-zero if any fails.

mod support;

use std::process::ExitCode;
use std::time::Instant;

use support::Check;

fn main() -> ExitCode {
    type Criterion = (&'static str, &'static str, fn() -> Check);
    let criteria: Vec<Criterion> = vec![
        ("AC1", "corpus verdicts and locations", support::corpus_verdicts),
        ("AC2", "max obligations dumped and valid", support::max_derivation),
        ("AC3", "worked qualifier instantiation", support::worked_instantiation),
        ("AC4", "strongest solution vs brute force", || support::strongest_solution(120, 0x5eed)),
        ("AC5", "oracle soundness on bounded queries", || support::oracle_soundness(10_000, 0xacc5)),
        ("AC6", "measure equations vs unfolded axioms", support::measure_agreement),
        ("AC7", "dynamic cross-check of safe programs", || support::dynamic_cross_check(1_000, 0xd1ce)),
        ("AC8", "deterministic diagnostics and solutions", support::determinism),
    ];
    let mut failed = 0;
    for (id, what, check) in criteria {
        let start = Instant::now();
        let r = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match r {
            Ok(detail) => println!("{id} PASS {what}: {detail} ({secs:.1}s)"),
            Err(why) => {
                failed += 1;
                println!("{id} FAIL {what}: {why} ({secs:.1}s)");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
