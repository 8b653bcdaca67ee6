//! Acceptance suite: one line per criterion, non-zero exit on any failure.

use std::process::ExitCode;

use parahyp::selftest;

fn main() -> ExitCode {
    println!("running acceptance criteria");
    let report = selftest::run_all(|r| println!("{}", r.line()));
    let failed = report.criteria.iter().filter(|c| !c.pass).count();
    println!(
        "acceptance: {} passed, {failed} failed, {:.2} s total (budget {:.0} s)",
        report.criteria.len() - failed,
        report.seconds,
        selftest::TOTAL_BUDGET
    );
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
