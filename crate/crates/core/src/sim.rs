//! Monte Carlo campaigns over random device orientations and eavesdropper
//! placements.
//!
//! Every trial draws from its own ChaCha stream selected by the trial index,
//! so results do not depend on scheduling and a longer campaign with the same
//! seed extends a shorter one.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{self, BodyParams, LedParams, OrientationModel, PdParams, Receiver, ReceiverId};
use crate::error::AllocationError;
use crate::geom::Vec3;
use crate::noma::{self, AllocationScheme, GroupAssignment, InterferenceSet, LinkBudget, PowerAllocation, SolverOptions};
use crate::topology::{self, RoomLayout, Strategy};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub led: LedParams,
    pub pd: PdParams,
    pub body: BodyParams,
    pub orientation: OrientationModel,
    /// AWGN variance at every receiver, W.
    pub noise_variance: f64,
}

/// Where the eavesdropper stands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EvePlacement {
    FixedAt { x: f64, y: f64 },
    UniformBox { x_min: f64, x_max: f64, y_min: f64, y_max: f64 },
    /// Grid nodes `min, min + step, ...` up to `max` inclusive; one sweep row
    /// per node.
    GridOver { x_min: f64, x_max: f64, y_min: f64, y_max: f64, step: f64 },
    /// Same device position and orientation as a legitimate user.
    CloneOf { user: usize },
}

impl EvePlacement {
    pub const DEFAULT_BOX: EvePlacement = EvePlacement::UniformBox { x_min: 1.0, x_max: 39.0, y_min: 1.0, y_max: 39.0 };

    /// Fixed placements produced by expanding a grid; other placements are
    /// returned unchanged.
    pub fn expand(self) -> Vec<EvePlacement> {
        match self {
            EvePlacement::GridOver { x_min, x_max, y_min, y_max, step } => {
                let axis = |lo: f64, hi: f64| -> Vec<f64> {
                    let n = ((hi - lo) / step + 1e-9).floor() as usize;
                    (0..=n).map(|i| lo + i as f64 * step).collect()
                };
                let xs = axis(x_min, x_max);
                let ys = axis(y_min, y_max);
                ys.iter().flat_map(|&y| xs.iter().map(move |&x| EvePlacement::FixedAt { x, y })).collect()
            }
            other => vec![other],
        }
    }

    /// Coordinates when the placement is a fixed point.
    pub fn fixed_xy(&self) -> Option<(f64, f64)> {
        match *self {
            EvePlacement::FixedAt { x, y } => Some((x, y)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub users: Vec<(f64, f64)>,
}

impl Scenario {
    /// User layouts of the three reference scenarios: sparse, clustered and
    /// mixed.
    pub fn builtin(name: &str) -> Option<Scenario> {
        let users: &[(f64, f64)] = match name {
            "1" => &[(6.0, 6.0), (34.0, 6.0), (34.0, 34.0), (6.0, 34.0), (20.0, 10.0), (20.0, 30.0)],
            "2" => &[(13.0, 16.0), (20.0, 12.0), (27.0, 16.0), (27.0, 24.0), (20.0, 28.0), (13.0, 24.0)],
            "3" => &[(10.6, 14.5), (15.3, 22.7), (5.9, 22.7), (34.1, 20.0), (34.1, 32.2), (34.1, 7.8)],
            _ => return None,
        };
        Some(Scenario { name: name.to_string(), users: users.to_vec() })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub room: RoomLayout,
    pub system: SystemParams,
    pub scenario: Scenario,
    pub eve: EvePlacement,
    pub strategy: Strategy,
    pub allocation: AllocationScheme,
    /// Transmit powers per LED, W. One sweep row per entry.
    pub powers: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    pub interference: InterferenceSet,
    pub solver: SolverOptions,
}

impl CampaignConfig {
    pub fn user_positions(&self) -> Vec<Vec3> {
        self.scenario
            .users
            .iter()
            .map(|&(x, y)| Vec3::new(x, y, self.room.device_plane))
            .collect()
    }

    pub fn coverage_radius(&self) -> f64 {
        topology::coverage_radius(self.room.height, self.room.device_plane, self.system.led.half_angle)
    }

    /// Blockage-free gains predicted from positions: `[user][led]`.
    pub fn estimated_gains(&self) -> Vec<Vec<f64>> {
        self.user_positions()
            .iter()
            .map(|&d| {
                self.room
                    .leds
                    .iter()
                    .map(|&s| {
                        channel::estimated_channel_gain(s, d, self.system.orientation.polar_mean, &self.system.led, &self.system.pd)
                    })
                    .collect()
            })
            .collect()
    }

    /// Serving sets for the configured strategy with SIC order applied.
    pub fn assignment(&self) -> GroupAssignment {
        let mut a = topology::assign_groups(self.strategy, &self.room.leds, &self.user_positions(), self.coverage_radius());
        a.apply_sic_order(&self.estimated_gains());
        a
    }
}

/// One point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub power: f64,
    pub eve: EvePlacement,
}

/// Everything a trial needs that does not change between trials.
#[derive(Debug, Clone)]
pub struct TrialSetup<'a> {
    pub cfg: &'a CampaignConfig,
    pub users: Vec<Vec3>,
    pub assignment: GroupAssignment,
    pub allocations: Vec<PowerAllocation>,
    pub budget: LinkBudget,
    pub eve: EvePlacement,
    /// Raised when the allocation solver did not converge.
    pub flagged: bool,
}

impl<'a> TrialSetup<'a> {
    pub fn new(cfg: &'a CampaignConfig, point: SweepPoint) -> Result<Self, AllocationError> {
        let assignment = cfg.assignment();
        let budget = LinkBudget { transmit_power: point.power, noise_variance: cfg.system.noise_variance };
        let (allocations, flagged) =
            noma::allocate(&assignment, cfg.allocation, &cfg.estimated_gains(), budget, cfg.interference, &cfg.solver)?;
        Ok(Self { cfg, users: cfg.user_positions(), assignment, allocations, budget, eve: point.eve, flagged })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub rates: Vec<f64>,
    pub wiretap: Vec<f64>,
    pub secrecy: Vec<f64>,
    pub sum_rate: f64,
    pub sum_secrecy: f64,
    pub eve_position: (f64, f64),
    /// Receiver-LED links cut by at least one body.
    pub blocked_links: usize,
    pub unserved_users: usize,
    /// Users whose wiretap rate exceeded their own rate.
    pub clipped_secrecy: usize,
    pub flagged: bool,
}

/// RNG stream of trial `index` under `master_seed`.
pub fn trial_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Draws the random state of one trial and evaluates all rates.
pub fn run_trial<R: Rng>(setup: &TrialSetup<'_>, rng: &mut R) -> TrialResult {
    let cfg = setup.cfg;
    let sys = &cfg.system;
    let k_users = setup.users.len();

    let orientations: Vec<_> = (0..k_users).map(|_| sys.orientation.sample(rng)).collect();
    let mut eve_orientation = sys.orientation.sample(rng);
    let eve_xy = match setup.eve {
        EvePlacement::FixedAt { x, y } => (x, y),
        EvePlacement::UniformBox { x_min, x_max, y_min, y_max } => {
            (rng.random_range(x_min..=x_max), rng.random_range(y_min..=y_max))
        }
        EvePlacement::CloneOf { user } => {
            eve_orientation = orientations[user];
            (setup.users[user].x, setup.users[user].y)
        }
        EvePlacement::GridOver { .. } => panic!("grid placements must be expanded before running trials"),
    };

    let mut receivers: Vec<Receiver> = setup
        .users
        .iter()
        .zip(&orientations)
        .enumerate()
        .map(|(k, (&d, &o))| Receiver::new(ReceiverId::User(k), d, o, &sys.body))
        .collect();
    let eve_pd = Vec3::new(eve_xy.0, eve_xy.1, cfg.room.device_plane);
    receivers.push(Receiver::new(ReceiverId::Eavesdropper, eve_pd, eve_orientation, &sys.body));
    let bodies: Vec<_> = receivers.iter().map(|r| r.body).collect();

    let mut blocked_links = 0;
    let gains: Vec<Vec<f64>> = receivers
        .iter()
        .map(|rx| {
            cfg.room
                .leds
                .iter()
                .map(|&s| {
                    let link = channel::link_gain(s, rx, &bodies, &sys.led, &sys.pd);
                    blocked_links += usize::from(link.blocked);
                    link.gain
                })
                .collect()
        })
        .collect();

    let eve_gains = &gains[k_users];
    let (rates, wiretap): (Vec<f64>, Vec<f64>) = (0..k_users)
        .map(|k| {
            let a = &setup.assignment;
            let user = noma::user_sinr(k, a, &gains, &setup.allocations, setup.budget, cfg.interference);
            let eve = noma::eve_sinr(k, a, eve_gains, &setup.allocations, setup.budget, cfg.interference);
            (noma::rate(user), noma::rate(eve))
        })
        .unzip();
    let report = noma::secrecy_terms(&rates, &wiretap);
    let clipped_secrecy = rates.iter().zip(&wiretap).filter(|(r, e)| e > r).count();
    let unserved_users = (0..k_users).filter(|&k| !setup.assignment.is_served(k)).count();

    TrialResult {
        rates: report.rates,
        wiretap: report.wiretap,
        secrecy: report.secrecy,
        sum_rate: report.sum_rate,
        sum_secrecy: report.sum_secrecy,
        eve_position: eve_xy,
        blocked_links,
        unserved_users,
        clipped_secrecy,
        flagged: setup.flagged,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserStats {
    pub mean_rate: f64,
    pub mean_wiretap: f64,
    pub mean_secrecy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub blocked_links: usize,
    pub unserved_user_trials: usize,
    pub clipped_secrecy: usize,
    pub flagged_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignStats {
    pub trials: usize,
    /// Mean transmission sum rate.
    pub mean_rd: f64,
    pub se_rd: f64,
    /// Mean secrecy sum rate.
    pub mean_rs: f64,
    pub se_rs: f64,
    pub per_user: Vec<UserStats>,
    pub diagnostics: Diagnostics,
}

fn mean_and_se(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = values.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Aggregates trials in index order.
pub fn aggregate(results: &[TrialResult]) -> CampaignStats {
    let n = results.len();
    assert!(n > 0, "campaign needs at least one trial");
    let (mean_rd, se_rd) = mean_and_se(results.iter().map(|r| r.sum_rate), n);
    let (mean_rs, se_rs) = mean_and_se(results.iter().map(|r| r.sum_secrecy), n);
    let k_users = results[0].rates.len();
    let per_user = (0..k_users)
        .map(|k| UserStats {
            mean_rate: results.iter().map(|r| r.rates[k]).sum::<f64>() / n as f64,
            mean_wiretap: results.iter().map(|r| r.wiretap[k]).sum::<f64>() / n as f64,
            mean_secrecy: results.iter().map(|r| r.secrecy[k]).sum::<f64>() / n as f64,
        })
        .collect();
    let diagnostics = results.iter().fold(Diagnostics::default(), |d, r| Diagnostics {
        blocked_links: d.blocked_links + r.blocked_links,
        unserved_user_trials: d.unserved_user_trials + r.unserved_users,
        clipped_secrecy: d.clipped_secrecy + r.clipped_secrecy,
        flagged_trials: d.flagged_trials + usize::from(r.flagged),
    });
    CampaignStats { trials: n, mean_rd, se_rd, mean_rs, se_rs, per_user, diagnostics }
}

/// All trials of one sweep point, in trial order.
pub fn run_trials(cfg: &CampaignConfig, point: SweepPoint) -> Result<Vec<TrialResult>, AllocationError> {
    let setup = TrialSetup::new(cfg, point)?;
    Ok((0..cfg.trials as u64)
        .into_par_iter()
        .map(|i| run_trial(&setup, &mut trial_rng(cfg.master_seed, i)))
        .collect())
}

pub fn run_point(cfg: &CampaignConfig, point: SweepPoint) -> Result<CampaignStats, AllocationError> {
    Ok(aggregate(&run_trials(cfg, point)?))
}

/// Campaign at the first configured power and eavesdropper placement.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignStats, AllocationError> {
    run_point(cfg, sweep_points(cfg)[0])
}

/// Cartesian product of powers and (expanded) eavesdropper placements,
/// power-major.
pub fn sweep_points(cfg: &CampaignConfig) -> Vec<SweepPoint> {
    let eves = cfg.eve.expand();
    cfg.powers
        .iter()
        .flat_map(|&power| eves.iter().map(move |&eve| SweepPoint { power, eve }))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub point: SweepPoint,
    pub stats: CampaignStats,
}

pub fn sweep(cfg: &CampaignConfig) -> Result<Vec<SweepRow>, AllocationError> {
    sweep_points(cfg)
        .into_iter()
        .map(|point| Ok(SweepRow { point, stats: run_point(cfg, point)? }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::OrientationModel;
    use crate::config::Config;

    fn cfg(strategy: Strategy, trials: usize) -> CampaignConfig {
        let mut c = Config::default().resolve().unwrap();
        c.strategy = strategy;
        c.trials = trials;
        c
    }

    #[test]
    fn builtin_scenarios() {
        assert_eq!(Scenario::builtin("2").unwrap().users[3], (27.0, 24.0));
        assert_eq!(Scenario::builtin("3").unwrap().users.len(), 6);
        assert!(Scenario::builtin("4").is_none());
    }

    #[test]
    fn grid_expansion_shape() {
        let g = EvePlacement::GridOver { x_min: 1.0, x_max: 39.0, y_min: 1.0, y_max: 39.0, step: 19.0 };
        let nodes = g.expand();
        assert_eq!(nodes.len(), 9);
        assert_eq!(nodes[0].fixed_xy(), Some((1.0, 1.0)));
        assert_eq!(nodes[8].fixed_xy(), Some((39.0, 39.0)));
    }

    #[test]
    fn vanishing_power_gives_zero_rates() {
        let c = cfg(Strategy::Broadcasting, 5);
        let stats = run_point(&c, SweepPoint { power: 1e-30, eve: c.eve }).unwrap();
        assert!(stats.mean_rd < 1e-9);
        assert!(stats.mean_rs < 1e-9);
    }

    #[test]
    fn eavesdropper_out_of_reach_keeps_all_rate() {
        // A single LED in one corner and the eavesdropper in the far corner,
        // with devices held flat so the light arrives outside the field of view.
        let mut c = cfg(Strategy::SimpleLinking, 20);
        c.room.leds = vec![Vec3::new(6.0, 6.0, c.room.height)];
        c.system.orientation = OrientationModel { polar_mean: 0.0, polar_std: 0.0 };
        let point = SweepPoint { power: 0.25, eve: EvePlacement::FixedAt { x: 39.0, y: 39.0 } };
        for r in run_trials(&c, point).unwrap() {
            assert!(r.wiretap.iter().all(|&w| w == 0.0));
            assert_eq!(r.sum_secrecy, r.sum_rate);
        }
    }

    #[test]
    fn trials_are_deterministic() {
        let c = cfg(Strategy::Broadcasting, 10);
        let mut c = c;
        c.master_seed = 42;
        let p = sweep_points(&c)[0];
        assert_eq!(run_trials(&c, p).unwrap(), run_trials(&c, p).unwrap());
    }

    #[test]
    fn single_trial_stats_equal_trial_sums() {
        let c = cfg(Strategy::SmartLinking, 1);
        let p = sweep_points(&c)[0];
        let t = run_trials(&c, p).unwrap();
        let s = aggregate(&t);
        assert_eq!(s.mean_rd, t[0].sum_rate);
        assert_eq!(s.mean_rs, t[0].sum_secrecy);
        assert_eq!(s.se_rd, 0.0);
    }

    #[test]
    fn longer_campaign_extends_shorter() {
        let c = cfg(Strategy::SimpleLinking, 8);
        let mut long = c.clone();
        long.trials = 16;
        let p = sweep_points(&c)[0];
        let a = run_trials(&c, p).unwrap();
        let b = run_trials(&long, p).unwrap();
        assert_eq!(a[..], b[..8]);
    }

    #[test]
    fn secrecy_never_exceeds_rate() {
        for s in Strategy::ALL {
            let c = cfg(s, 50);
            for r in run_trials(&c, sweep_points(&c)[0]).unwrap() {
                assert!(r.sum_secrecy <= r.sum_rate);
                assert!(r.sum_secrecy >= 0.0);
            }
        }
    }

    #[test]
    fn clone_eavesdropper_has_zero_secrecy_for_target() {
        let c = cfg(Strategy::SimpleLinking, 30);
        for k in 0..6 {
            let p = SweepPoint { power: 0.25, eve: EvePlacement::CloneOf { user: k } };
            for r in run_trials(&c, p).unwrap() {
                assert_eq!(r.secrecy[k], 0.0);
                assert_eq!(r.rates[k], r.wiretap[k]);
            }
        }
    }

    #[test]
    fn sweep_rows_match_standalone_points() {
        let mut c = cfg(Strategy::Broadcasting, 6);
        c.powers = vec![0.01, 0.25];
        let rows = sweep(&c).unwrap();
        assert_eq!(rows.len(), 2);
        for row in rows {
            assert_eq!(row.stats, run_point(&c, row.point).unwrap());
        }
    }
}
