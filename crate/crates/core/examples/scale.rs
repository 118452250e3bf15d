//! Full-scale timing run: synthesize ~153k rows, fit both models, then run
//! cross-validated holdout validation.
//!
//! `cargo run --release -p trenchbt-core --example scale -- <seed>`

use std::time::Instant;

use trenchbt::evaluate::{run_validation, ValidationConfig};
use trenchbt::synth::{synth_generate, SynthConfig};

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let t0 = Instant::now();
    let out = synth_generate(&SynthConfig { seed, ..Default::default() }).unwrap();
    println!("rows {} in {:?}", out.table.len(), t0.elapsed());
    let t1 = Instant::now();
    let fit = trenchbt::BinaryFit::fit(&out.table, 1.0, &Default::default()).unwrap();
    println!("binary fit {:?} iters {}", t1.elapsed(), fit.iterations);
    let t1 = Instant::now();
    let fit = trenchbt::MultinomialFit::fit(&out.table, 1.0, &Default::default()).unwrap();
    println!("multinomial fit {:?} iters {}", t1.elapsed(), fit.iterations);
    let t1 = Instant::now();
    let rep = run_validation(&out.table, &ValidationConfig::<f64>::default()).unwrap();
    println!("validation {:?} {:?}", t1.elapsed(), rep.lambdas);
    for r in rep.rows {
        println!("{:?}", r);
    }
}
