mod common;

use common::scenario;
use impactopt::optimizer::run_optimization;

/// Largest single-iteration rise of the objective tolerated as MMA oscillation.
const MAX_RISE: f64 = 0.05;

#[test]
fn fixed_schedule_blast_objective_decreases() {
    let cfg = scenario("blast_small_20x5.toml");
    let mut vols = Vec::new();
    let res = run_optimization(&cfg, None, &mut |rec, raw, _| {
        assert!(raw.iter().all(|&x| (0.01..=1.0).contains(&x)));
        vols.push(rec.volume);
        Ok(())
    })
    .unwrap();
    let o: Vec<f64> = res.history.iter().map(|r| r.objective.total).collect();
    assert_eq!(o.len(), 60);
    assert!(vols.iter().all(|&v| v <= cfg.optimizer.volume_fraction + 1e-10));
    let tail = &o[o.len() - 50..];
    for w in tail.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + MAX_RISE), "rise {} -> {}", w[0], w[1]);
    }
    assert!(tail[tail.len() - 1] < tail[0], "{} !< {}", tail[tail.len() - 1], tail[0]);
    assert!(o[o.len() - 1] < 0.5 * o[0]);
}
