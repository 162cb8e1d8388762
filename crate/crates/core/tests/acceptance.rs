//! Acceptance suite: one pass/fail line per criterion, nonzero exit on any
//! failure. `DELAYOSC_SEED` overrides the seed of the randomized criteria.

use delayosc::testgen::seed_from_env;
use delayosc::verify::acceptance;

fn main() {
    let seed = seed_from_env();
    println!("acceptance (seed {seed})");
    let checks = acceptance(seed);
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
