//! Runs every property suite, then again with a corrupted norm to show the
//! harness catching it by name.

use yent::verify::{run_all, Canary, VerifyOptions};

fn main() -> yent::Result<()> {
    let opts = VerifyOptions { cases: 30, seed: 2, ..VerifyOptions::default() };
    let report = run_all(&opts)?;
    for p in &report.properties {
        println!(
            "{:4} {:22} {:38} worst {:.2e} / tol {:.0e}",
            if p.passed { "ok" } else { "FAIL" },
            p.module,
            p.property,
            p.worst,
            p.tolerance
        );
    }
    println!("all passed: {}", report.passed);

    let broken = run_all(&VerifyOptions { canary: Some(Canary::CorruptedNorm), ..opts })?;
    for p in broken.failed() {
        println!("canary caught by {}::{}: {}", p.module, p.property, p.notes[0]);
    }
    Ok(())
}
