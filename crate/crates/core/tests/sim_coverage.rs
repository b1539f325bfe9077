//! Statistical coverage of the simulator against the exact solver: across
//! independent replication batches, the exact probability of every resolvable
//! state on a 5x5 box must land inside the batch's 99% interval in at least
//! 95% of the batches.
//!
//! Intervals use the Student-t quantile for 10 replications
//! (t_{9, 0.995} = 3.2498) so the nominal level is honest at this batch size.
//! States below the resolvability cutoff are excluded: at probability p the
//! expected visit count per replication is roughly p * horizon * total-rate,
//! and below a few hundred visits the replication means are too skewed for
//! any interval with nominal coverage. The full 5x5 box at a long horizon is
//! exercised by the acceptance suite with its count-based bar.

use jsoq::compensation::CompensationSeries;
use jsoq::model::{ModelParams, Server};
use jsoq::sim::{simulate, SimConfig};

const T9_995: f64 = 3.249836;
const RESOLVABLE: f64 = 1e-3;

#[test]
fn per_state_coverage_over_100_batches() {
    let params = ModelParams::new(2.0, 10.0, 3.0).unwrap();
    let series = CompensationSeries::build(&params, 1e-12, 400).unwrap();
    let mut exact = Vec::new();
    for m in 0..5usize {
        for n in 0..5usize {
            for k in Server::BOTH {
                exact.push(series.probability(m, n, k).unwrap());
            }
        }
    }
    let tracked: Vec<usize> = (0..exact.len())
        .filter(|&i| exact[i] >= RESOLVABLE)
        .collect();
    assert!(
        tracked.len() >= 8,
        "cutoff left only {} states",
        tracked.len()
    );

    let batches = 100;
    let mut inside = vec![0u32; exact.len()];
    let mut busy_inside = 0u32;
    for batch in 0..batches {
        let config = SimConfig::new(params, 3e4, 5e2, 10, 7000 + batch as u64).unwrap();
        let est = simulate(&config, 4, 4).unwrap();
        let mut idx = 0;
        for m in 0..5 {
            for n in 0..5 {
                for k in Server::BOTH {
                    if est.prob(m, n, k).contains(exact[idx], T9_995) {
                        inside[idx] += 1;
                    }
                    idx += 1;
                }
            }
        }
        if est.p_busy.contains(0.2, T9_995) {
            busy_inside += 1;
        }
    }
    for &idx in &tracked {
        assert!(
            inside[idx] >= 95,
            "state {idx} (exact {:.3e}) covered in only {}/{batches} batches",
            exact[idx],
            inside[idx]
        );
    }
    assert!(
        busy_inside >= 95,
        "P_busy covered in {busy_inside}/{batches}"
    );
}
