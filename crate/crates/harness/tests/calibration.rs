use cvqkd_core::rng::{derive_seed, rng_for};
use cvqkd_harness::sweep::{run_cell, StopRule, Workers};
use rand::Rng;

#[test]
fn intervals_cover_a_known_fer() {
    // a synthetic decoder that fails with a known probability
    let workers = Workers::new(2).unwrap();
    let rule = StopRule { min_errors: 10, max_frames: 300 };
    for (k, fer) in [0.02f64, 0.1, 0.4].into_iter().enumerate() {
        let cells = 300;
        let mut covered = 0;
        for c in 0..cells {
            let count = run_cell(&workers, derive_seed(k as u64, &[c]), rule, |seed| Ok(rng_for(seed, &[]).random::<f64>() < fer)).unwrap();
            let (lo, hi) = count.interval();
            if lo <= fer && fer <= hi {
                covered += 1;
            }
        }
        let coverage = covered as f64 / cells as f64;
        assert!(coverage >= 0.93, "FER {fer}: coverage {coverage}");
    }
}

#[test]
fn counts_are_identical_for_any_worker_count() {
    let rule = StopRule { min_errors: 25, max_frames: 5000 };
    let trial = |seed: u64| Ok(rng_for(seed, &[]).random::<f64>() < 0.07);
    let reference = run_cell(&Workers::new(1).unwrap(), 99, rule, trial).unwrap();
    for threads in [2, 3, 7] {
        assert_eq!(run_cell(&Workers::new(threads).unwrap(), 99, rule, trial).unwrap(), reference);
    }
    assert_eq!(reference.errors, 25);
}
