//! One PASS/FAIL line per acceptance criterion; exits non-zero on any failure.

use sheetlab_validation::{run, CRITERIA};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        for n in 1..=CRITERIA {
            println!("criterion_{n}: test");
        }
        return;
    }
    let selected: Vec<u32> = args.iter().filter_map(|a| a.parse().ok()).collect();
    let reports = run(&selected, |r| println!("{r}"));
    let passed = reports.iter().filter(|r| r.pass).count();
    println!("acceptance: {passed}/{} criteria passed", reports.len());
    if passed < reports.len() {
        std::process::exit(1);
    }
}
