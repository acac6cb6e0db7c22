//! Runs every acceptance criterion and prints one PASS/FAIL line each.

use std::process::{Command, ExitCode};
use std::time::Instant;

use smallball_cli::verify::{run_criterion, Check, CRITERIA};

/// Same arguments through the built binary, twice: stdout must match byte for byte.
fn binary_reproducibility() -> Check {
    let dir = tempfile::tempdir().expect("temp dir");
    let model = dir.path().join("model.json");
    std::fs::write(&model, r#"{"kind": "bogoliubov", "omega": 1.0}"#).expect("write model");
    let model = model.display().to_string();
    let cases: [&[&str]; 3] = [
        &["mc", "--lambda", "1,0.25", "--eps", "0.4", "--samples", "4096", "--seed", "11", "--tilt", "chernoff"],
        &["sample", "--model", &model, "--k", "32", "--grid", "128", "--seed", "11"],
        &["smallball", "--power", "1.5", "--terms", "500", "--eps", "0.5,0.1", "--mc-samples", "2000", "--seed", "11"],
    ];
    let mut check = Check {
        passed: true,
        lines: Vec::new(),
    };
    for args in cases {
        let go = || {
            Command::new(env!("CARGO_BIN_EXE_smallball"))
                .args(args)
                .env("SMALLBALL_WORKERS", "2")
                .output()
                .expect("spawn smallball")
        };
        let (a, b) = (go(), go());
        let ok = a.status.success() && a.stdout == b.stdout;
        check.passed &= ok;
        check.lines.push(format!("{} binary `{}` byte-identical", if ok { "ok  " } else { "FAIL" }, args[0]));
    }
    check
}

fn main() -> ExitCode {
    let workers = std::env::var("SMALLBALL_WORKERS").ok().and_then(|v| v.parse().ok()).unwrap_or(1);
    let mut failed = 0;
    for id in CRITERIA {
        let start = Instant::now();
        let mut check = run_criterion(id, workers).expect("known criterion");
        if id == "property-suites" {
            let extra = binary_reproducibility();
            check.passed &= extra.passed;
            check.lines.extend(extra.lines);
        }
        println!("{} {id} ({:.1}s)", if check.passed { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
        for line in &check.lines {
            println!("    {line}");
        }
        failed += usize::from(!check.passed);
    }
    println!("acceptance: {} of {} criteria passed", CRITERIA.len() - failed, CRITERIA.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
