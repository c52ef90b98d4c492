//! Measures the reference-corpus constants stored in `calibration.rs`.

use std::time::Instant;

use relaxlab::corpus::Corpus;
use relaxlab::properties::{
    average_poincare_ratio, capacity_axioms, harnack_average_ratio, kato_poincare_ratio, kato_reference_measures, CORPUS_SEED,
    CORPUS_SIZE,
};
use relaxlab::EllipticOperator;

fn main() -> relaxlab::Result<()> {
    let corpus = Corpus::new(CORPUS_SEED, CORPUS_SIZE);
    let op = EllipticOperator::laplace();
    let t = Instant::now();
    println!("kato_poincare    {:.6e}  ({:?})", kato_poincare_ratio(&kato_reference_measures(), &corpus)?, t.elapsed());
    let t = Instant::now();
    println!("harnack_average  {:.6e}  ({:?})", harnack_average_ratio(&op, &corpus)?, t.elapsed());
    let t = Instant::now();
    println!("average_poincare {:.6e}  ({:?})", average_poincare_ratio(&op, &corpus)?, t.elapsed());
    let t = Instant::now();
    for o in capacity_axioms(1, 20)? {
        println!("{} {}: {}", if o.passed { "ok  " } else { "FAIL" }, o.name, o.detail);
    }
    println!("axioms {:?}", t.elapsed());
    Ok(())
}
