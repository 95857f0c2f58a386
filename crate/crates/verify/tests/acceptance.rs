//! Release acceptance run: one PASS/FAIL line per check, nonzero exit on any failure.

use std::process::ExitCode;
use std::time::Instant;

use workstat::verify::run_all;
use workstat::Execution;

fn main() -> ExitCode {
    let start = Instant::now();
    let outcomes = run_all(Execution::Parallel);
    for o in &outcomes {
        println!("{o}");
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        outcomes.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
