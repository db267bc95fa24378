//! One line per acceptance criterion. Set `TCM_ACCEPTANCE=quick` to skip
//! the slow run-based criteria.

use std::process::ExitCode;

use tcm_harness::checks;

fn main() -> ExitCode {
    let quick = std::env::var("TCM_ACCEPTANCE").is_ok_and(|v| v == "quick");
    let ids: Vec<u8> = if quick { checks::QUICK.to_vec() } else { (1..=11).collect() };
    let scratch = tempfile::tempdir().expect("scratch dir");
    let mut failed = 0;
    for id in ids {
        let o = checks::criterion(id, scratch.path());
        println!("{}", o.line());
        failed += usize::from(!o.passed);
    }
    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
