//! Every named scenario at its desk parameters.

use std::time::Instant;

use pilotwave::harness::{simulate, RunConfig, Scenario};

#[test]
fn every_scenario_finishes_within_a_minute() {
    for scenario in Scenario::ALL {
        let cfg = RunConfig::defaults(scenario);
        let start = Instant::now();
        let r = simulate(&cfg, |_| Ok(())).unwrap();
        let secs = start.elapsed().as_secs_f64();
        println!("{}: {} steps in {secs:.1} s", scenario.name(), r.steps);
        assert_eq!(r.rows.last().unwrap().t, cfg.t_end);
        assert!(r.rows.iter().all(|row| row.is_finite()));
        assert!(secs < 60.0, "{} took {secs:.1} s", scenario.name());
    }
}

#[test]
fn linear_ensemble_stays_close_to_its_start() {
    let mut cfg = RunConfig::defaults(Scenario::Equivariance);
    cfg.record_every = 10;
    let r = simulate(&cfg, |_| Ok(())).unwrap();
    let worst = r.ks.iter().copied().fold(0.0, f64::max);
    assert!(worst < 2.5 * r.ks[0], "KS {worst} against {} at t = 0", r.ks[0]);
}
