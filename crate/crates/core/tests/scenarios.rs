use vlcsec_core::config::Config;
use vlcsec_core::sim::{self, EvePlacement, SweepPoint};
use vlcsec_core::topology::Strategy;

fn campaign(scenario: &str, strategy: Strategy) -> vlcsec_core::CampaignConfig {
    let mut c = Config { scenario: scenario.into(), trials: 200, ..Config::default() }.resolve().unwrap();
    c.strategy = strategy;
    c
}

#[test]
fn smart_linking_merges_clustered_users() {
    let simple = campaign("2", Strategy::SimpleLinking).assignment();
    let smart = campaign("2", Strategy::SmartLinking).assignment();
    assert!(smart.groups().len() < simple.groups().len());
    let mut served: Vec<usize> = smart.groups().iter().flat_map(|g| g.users.clone()).collect();
    served.sort_unstable();
    served.dedup();
    assert_eq!(served.len(), smart.groups().iter().map(|g| g.users.len()).sum::<usize>());
}

#[test]
fn broadcasting_forms_one_group() {
    for s in ["1", "2", "3"] {
        let a = campaign(s, Strategy::Broadcasting).assignment();
        assert_eq!(a.groups().len(), 1);
        assert_eq!(a.groups()[0].users.len(), 6);
        assert_eq!(a.groups()[0].leds.len(), 23);
    }
}

#[test]
fn eavesdropper_grid_keys_rows() {
    let mut c = campaign("1", Strategy::SimpleLinking);
    c.trials = 5;
    c.eve = EvePlacement::GridOver { x_min: 1.0, x_max: 39.0, y_min: 1.0, y_max: 39.0, step: 19.0 };
    let rows = sim::sweep(&c).unwrap();
    let keys: Vec<_> = rows.iter().map(|r| r.point.eve.fixed_xy().unwrap()).collect();
    assert_eq!(keys.len(), 9);
    assert_eq!(keys[4], (20.0, 20.0));
}

#[test]
fn eavesdropper_far_from_users_leaks_less() {
    // Standing on top of a user versus in an empty corner region.
    let c = campaign("1", Strategy::SimpleLinking);
    let near = sim::run_point(&c, SweepPoint { power: 0.25, eve: EvePlacement::FixedAt { x: 6.5, y: 6.0 } }).unwrap();
    let far = sim::run_point(&c, SweepPoint { power: 0.25, eve: EvePlacement::FixedAt { x: 20.0, y: 20.0 } }).unwrap();
    assert!(far.mean_rs > near.mean_rs, "far {} near {}", far.mean_rs, near.mean_rs);
}

#[test]
fn optimized_allocation_is_not_worse_on_average() {
    let mut fixed = campaign("2", Strategy::SmartLinking);
    fixed.trials = 500;
    let mut opt = fixed.clone();
    opt.allocation = vlcsec_core::AllocationScheme::Optimized;
    let f = sim::run_campaign(&fixed).unwrap();
    let o = sim::run_campaign(&opt).unwrap();
    assert_eq!(o.diagnostics.flagged_trials, 0);
    assert!(o.mean_rd >= f.mean_rd - 2.0 * f.se_rd.max(o.se_rd), "opt {} fixed {}", o.mean_rd, f.mean_rd);
}
