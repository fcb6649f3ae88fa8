//! Power-domain NOMA rate engine.
//!
//! Users served by an LED form a group; inside a group the users are ordered
//! for successive interference cancellation (SIC) with position 0 carrying the
//! most power and being decoded first by everyone. SINRs follow perfect SIC:
//! a user sees NOMA interference only from users after it in the order, plus
//! interference from LEDs that carry signals not meant for it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::AllocationError;

/// Which LEDs count as inter-LED interference for a user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterferenceSet {
    /// LEDs that transmit something but nothing for this user.
    #[default]
    Physical,
    /// Other LEDs serving this user, excluding the LED of the decoding group.
    Literal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserGroup {
    /// Users in SIC order.
    pub users: Vec<usize>,
    /// LEDs transmitting this group's superposition, ascending.
    pub leds: Vec<usize>,
}

/// Serving sets of every LED plus the distinct groups they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupAssignment {
    num_users: usize,
    led_sets: Vec<Vec<usize>>,
    led_group: Vec<Option<usize>>,
    groups: Vec<UserGroup>,
}

impl GroupAssignment {
    /// Builds the assignment from per-LED user sets. LEDs with identical sets
    /// share one group. The initial SIC order is ascending user index.
    pub fn from_led_sets(mut led_sets: Vec<Vec<usize>>, num_users: usize) -> Self {
        let mut groups: Vec<UserGroup> = Vec::new();
        let mut led_group = Vec::with_capacity(led_sets.len());
        for (n, set) in led_sets.iter_mut().enumerate() {
            set.sort_unstable();
            set.dedup();
            assert!(set.iter().all(|&k| k < num_users), "user index out of range");
            if set.is_empty() {
                led_group.push(None);
                continue;
            }
            let mut sorted_members = |g: &UserGroup| {
                let mut u = g.users.clone();
                u.sort_unstable();
                u == *set
            };
            match groups.iter().position(&mut sorted_members) {
                Some(g) => {
                    groups[g].leds.push(n);
                    led_group.push(Some(g));
                }
                None => {
                    groups.push(UserGroup { users: set.clone(), leds: vec![n] });
                    led_group.push(Some(groups.len() - 1));
                }
            }
        }
        Self { num_users, led_sets, led_group, groups }
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_leds(&self) -> usize {
        self.led_sets.len()
    }

    pub fn led_sets(&self) -> &[Vec<usize>] {
        &self.led_sets
    }

    pub fn groups(&self) -> &[UserGroup] {
        &self.groups
    }

    pub fn group_of_led(&self, n: usize) -> Option<usize> {
        self.led_group[n]
    }

    /// Groups containing user `k`.
    pub fn groups_of(&self, k: usize) -> Vec<usize> {
        (0..self.groups.len()).filter(|&g| self.groups[g].users.contains(&k)).collect()
    }

    /// LEDs whose serving set contains `k`.
    pub fn serving_leds(&self, k: usize) -> Vec<usize> {
        (0..self.led_sets.len()).filter(|&n| self.led_sets[n].binary_search(&k).is_ok()).collect()
    }

    pub fn is_served(&self, k: usize) -> bool {
        self.led_sets.iter().any(|s| s.binary_search(&k).is_ok())
    }

    /// LEDs that interfere with user `k` when decoding through `group`.
    pub fn interfering_leds(&self, k: usize, group: usize, rule: InterferenceSet) -> Vec<usize> {
        match rule {
            InterferenceSet::Physical => (0..self.led_sets.len())
                .filter(|&n| !self.led_sets[n].is_empty() && self.led_sets[n].binary_search(&k).is_err())
                .collect(),
            InterferenceSet::Literal => {
                let anchor = self.groups[group].leds[0];
                self.serving_leds(k).into_iter().filter(|&n| n != anchor).collect()
            }
        }
    }

    /// Re-orders every group by ascending estimated gain summed over the
    /// group's LEDs. `estimated[k][n]` is the estimated gain of user `k` from
    /// LED `n`.
    pub fn apply_sic_order(&mut self, estimated: &[Vec<f64>]) {
        for g in &mut self.groups {
            let combined: Vec<f64> = g
                .users
                .iter()
                .map(|&k| g.leds.iter().map(|&n| estimated[k][n]).sum())
                .collect();
            let pairs: Vec<(usize, f64)> = g.users.iter().copied().zip(combined).collect();
            g.users = sic_order(&pairs);
        }
    }
}

/// Orders `(user, gain)` pairs weakest first, ties by ascending user index.
pub fn sic_order(members: &[(usize, f64)]) -> Vec<usize> {
    let mut v = members.to_vec();
    v.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    v.into_iter().map(|(k, _)| k).collect()
}

/// Power split of one group, aligned with the group's SIC order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub order: Vec<usize>,
    pub betas: Vec<f64>,
}

impl PowerAllocation {
    pub fn new(order: Vec<usize>, betas: Vec<f64>) -> Self {
        assert_eq!(order.len(), betas.len());
        Self { order, betas }
    }

    fn position(&self, k: usize) -> Option<usize> {
        self.order.iter().position(|&u| u == k)
    }

    pub fn beta(&self, k: usize) -> Option<f64> {
        self.position(k).map(|i| self.betas[i])
    }

    /// Total power of users decoded after `k`.
    pub fn tail_after(&self, k: usize) -> Option<f64> {
        self.position(k).map(|i| self.betas[i + 1..].iter().sum())
    }
}

/// Fixed split with ratio `zeta` between consecutive users; the last user
/// takes the remainder so the betas sum to one.
pub fn fixed_allocation(group_size: usize, zeta: f64) -> Result<Vec<f64>, AllocationError> {
    if !(zeta > 0.5 && zeta <= 1.0) {
        return Err(AllocationError::InvalidZeta(zeta));
    }
    if group_size == 0 {
        return Err(AllocationError::EmptyGroup);
    }
    let rest = 1.0 - zeta;
    Ok((0..group_size)
        .map(|i| {
            if i + 1 < group_size {
                zeta * rest.powi(i as i32)
            } else {
                rest.powi(i as i32)
            }
        })
        .collect())
}

/// Transmit power per LED and receiver noise variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub transmit_power: f64,
    pub noise_variance: f64,
}

impl LinkBudget {
    fn noise_floor(&self) -> f64 {
        self.noise_variance / self.transmit_power
    }
}

/// Terms of one SINR evaluation, kept for diagnostics and oracles.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SinrTerms {
    pub signal: f64,
    pub noma_interference: f64,
    pub led_interference: f64,
    pub noise: f64,
}

impl SinrTerms {
    pub fn sinr(&self) -> f64 {
        if self.signal == 0.0 {
            return 0.0;
        }
        self.signal / (self.noma_interference + self.led_interference + self.noise)
    }
}

/// Group through which user `k` decodes: the one granting `k` the largest
/// share, ties by smaller tail then lower group index.
pub fn decoding_group(k: usize, assignment: &GroupAssignment, allocs: &[PowerAllocation]) -> Option<usize> {
    assignment.groups_of(k).into_iter().max_by(|&a, &b| {
        let (ba, bb) = (allocs[a].beta(k).unwrap_or(0.0), allocs[b].beta(k).unwrap_or(0.0));
        let (ta, tb) = (allocs[a].tail_after(k).unwrap_or(0.0), allocs[b].tail_after(k).unwrap_or(0.0));
        ba.total_cmp(&bb).then(tb.total_cmp(&ta)).then(b.cmp(&a))
    })
}

/// SINR terms for the message of user `k` observed by a receiver whose
/// per-LED gains are `rx_gains`.
pub fn sinr_terms(
    k: usize,
    assignment: &GroupAssignment,
    rx_gains: &[f64],
    allocs: &[PowerAllocation],
    budget: LinkBudget,
    rule: InterferenceSet,
) -> SinrTerms {
    let Some(g) = decoding_group(k, assignment, allocs) else {
        return SinrTerms::default();
    };
    let serving: f64 = assignment.serving_leds(k).iter().map(|&n| rx_gains[n]).sum();
    let interfering: f64 = assignment.interfering_leds(k, g, rule).iter().map(|&n| rx_gains[n]).sum();
    let alloc = &allocs[g];
    let power = serving * serving;
    SinrTerms {
        signal: power * alloc.beta(k).unwrap_or(0.0),
        noma_interference: power * alloc.tail_after(k).unwrap_or(0.0),
        led_interference: interfering * interfering,
        noise: budget.noise_floor(),
    }
}

/// SINR of legitimate user `k`; `gains[k][n]` is the gain from LED `n`.
pub fn user_sinr(
    k: usize,
    assignment: &GroupAssignment,
    gains: &[Vec<f64>],
    allocs: &[PowerAllocation],
    budget: LinkBudget,
    rule: InterferenceSet,
) -> f64 {
    sinr_terms(k, assignment, &gains[k], allocs, budget, rule).sinr()
}

/// SINR at which the eavesdropper, using the same SIC procedure, recovers the
/// message of user `k`.
pub fn eve_sinr(
    k: usize,
    assignment: &GroupAssignment,
    eve_gains: &[f64],
    allocs: &[PowerAllocation],
    budget: LinkBudget,
    rule: InterferenceSet,
) -> f64 {
    sinr_terms(k, assignment, eve_gains, allocs, budget, rule).sinr()
}

/// Achievable rate in bits/s/Hz of a real-valued intensity-modulated link.
pub fn rate(sinr: f64) -> f64 {
    0.5 * (1.0 + sinr).log2()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub rates: Vec<f64>,
    pub wiretap: Vec<f64>,
    pub secrecy: Vec<f64>,
    pub sum_rate: f64,
    pub sum_secrecy: f64,
}

pub fn secrecy_terms(rates: &[f64], wiretap: &[f64]) -> RateReport {
    assert_eq!(rates.len(), wiretap.len());
    let secrecy: Vec<f64> = rates.iter().zip(wiretap).map(|(r, e)| (r - e).max(0.0)).collect();
    RateReport {
        rates: rates.to_vec(),
        wiretap: wiretap.to_vec(),
        sum_rate: rates.iter().sum(),
        sum_secrecy: secrecy.iter().sum(),
        secrecy,
    }
}

/// Estimated sum rate of one group as a function of its betas.
///
/// With `S_i` the power of positions `i..`, the rate of position `i` is
/// `0.5 * log2((G_i S_i + c_i) / (G_i S_{i+1} + c_i))` where `G_i` is the
/// squared combined estimated gain and `c_i` the interference-plus-noise floor.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupObjective {
    pub gains_sq: Vec<f64>,
    pub floor: Vec<f64>,
}

impl GroupObjective {
    /// Objective of group `g`; `estimated[k][n]` is the blockage-free estimate.
    pub fn new(
        assignment: &GroupAssignment,
        g: usize,
        estimated: &[Vec<f64>],
        budget: LinkBudget,
        rule: InterferenceSet,
    ) -> Self {
        let group = &assignment.groups()[g];
        let mut gains_sq = Vec::with_capacity(group.users.len());
        let mut floor = Vec::with_capacity(group.users.len());
        for &k in &group.users {
            let serving: f64 = assignment.serving_leds(k).iter().map(|&n| estimated[k][n]).sum();
            let interfering: f64 = assignment.interfering_leds(k, g, rule).iter().map(|&n| estimated[k][n]).sum();
            gains_sq.push(serving * serving);
            floor.push(interfering * interfering + budget.noise_floor());
        }
        Self { gains_sq, floor }
    }

    pub fn len(&self) -> usize {
        self.gains_sq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains_sq.is_empty()
    }

    pub fn value(&self, betas: &[f64]) -> f64 {
        let mut tail = 0.0;
        let mut total = 0.0;
        for i in (0..betas.len()).rev() {
            let (g, c) = (self.gains_sq[i], self.floor[i]);
            let upto = tail + betas[i];
            let sinr = if g * betas[i] == 0.0 { 0.0 } else { g * betas[i] / (g * tail + c) };
            total += rate(sinr);
            tail = upto;
        }
        total
    }

    pub fn gradient(&self, betas: &[f64]) -> Vec<f64> {
        let n = betas.len();
        let inv = 0.5 / std::f64::consts::LN_2;
        let mut suffix = vec![0.0; n + 1];
        for i in (0..n).rev() {
            suffix[i] = suffix[i + 1] + betas[i];
        }
        let mut grad = vec![0.0; n];
        for i in 0..n {
            let (g, c) = (self.gains_sq[i], self.floor[i]);
            if g == 0.0 {
                continue;
            }
            let with = g / (g * suffix[i] + c);
            let without = g / (g * suffix[i + 1] + c);
            // d/d beta_j of log(G S_i + c) for j >= i, minus log(G S_{i+1} + c) for j > i.
            grad[i] += inv * with;
            for gj in grad.iter_mut().skip(i + 1) {
                *gj += inv * (with - without);
            }
        }
        grad
    }
}

/// Pool-adjacent-violators fit of a nonincreasing sequence (least squares).
pub fn isotonic_nonincreasing(x: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(x.len());
    for &v in x {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (m2, w2) = blocks[blocks.len() - 1];
            let (m1, w1) = blocks[blocks.len() - 2];
            if m1 >= m2 {
                break;
            }
            blocks.pop();
            let w = w1 + w2;
            *blocks.last_mut().unwrap() = ((m1 * w1 as f64 + m2 * w2 as f64) / w as f64, w);
        }
    }
    blocks.into_iter().flat_map(|(m, w)| std::iter::repeat_n(m, w)).collect()
}

/// Euclidean projection onto `{x >= 0, sum(x) <= 1}`.
pub fn project_capped_simplex(x: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= 1.0 {
        return clipped;
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        cumulative += v;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if v - t > 0.0 {
            tau = t;
        } else {
            break;
        }
    }
    x.iter().map(|v| (v - tau).max(0.0)).collect()
}

/// Projection onto `{beta_1 >= ... >= beta_n >= 0, sum <= 1}`: isotonic fit
/// followed by the capped-simplex projection, which keeps the order.
pub fn project_monotone_simplex(x: &[f64]) -> Vec<f64> {
    project_capped_simplex(&isotonic_nonincreasing(x))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub restarts: usize,
    pub max_iterations: usize,
    /// Minimum objective gain over `patience` iterations to keep iterating.
    pub tolerance: f64,
    pub patience: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { restarts: 8, max_iterations: 10_000, tolerance: 1e-9, patience: 50, seed: 0x5eed_a110c }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizedAllocation {
    pub betas: Vec<f64>,
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl OptimizedAllocation {
    pub fn check(&self) -> Result<(), AllocationError> {
        if self.converged {
            Ok(())
        } else {
            Err(AllocationError::SolverNonConvergence { iterations: self.iterations })
        }
    }
}

struct Run {
    betas: Vec<f64>,
    objective: f64,
    converged: bool,
    iterations: usize,
}

fn ascend(objective: &GroupObjective, start: Vec<f64>, opts: &SolverOptions) -> Run {
    let mut x = project_monotone_simplex(&start);
    let mut fx = objective.value(&x);
    let mut step = 1.0;
    let mut history = vec![fx];
    for it in 1..=opts.max_iterations {
        let grad = objective.gradient(&x);
        let mut accepted = None;
        let mut trial_step = step;
        for _ in 0..60 {
            let cand: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi + trial_step * gi).collect();
            let cand = project_monotone_simplex(&cand);
            let ascent: f64 = cand.iter().zip(&x).zip(&grad).map(|((c, xi), gi)| (c - xi) * gi).sum();
            let fc = objective.value(&cand);
            if ascent <= 0.0 {
                break;
            }
            if fc >= fx + 1e-4 * ascent {
                accepted = Some((cand, fc));
                break;
            }
            trial_step *= 0.5;
        }
        let Some((cand, fc)) = accepted else {
            return Run { betas: x, objective: fx, converged: true, iterations: it };
        };
        x = cand;
        fx = fc;
        step = (trial_step * 2.0).min(1e6);
        history.push(fx);
        if history.len() > opts.patience {
            let past = history[history.len() - 1 - opts.patience];
            if fx - past < opts.tolerance {
                return Run { betas: x, objective: fx, converged: true, iterations: it };
            }
        }
    }
    Run { betas: x, objective: fx, converged: false, iterations: opts.max_iterations }
}

/// Maximises the estimated group sum rate over the monotone capped simplex by
/// projected gradient ascent with backtracking and random restarts.
pub fn optimize_allocation(
    objective: &GroupObjective,
    opts: &SolverOptions,
) -> Result<OptimizedAllocation, AllocationError> {
    let n = objective.len();
    if n == 0 {
        return Err(AllocationError::EmptyGroup);
    }
    if n == 1 {
        return Ok(OptimizedAllocation {
            betas: vec![1.0],
            objective: objective.value(&[1.0]),
            converged: true,
            iterations: 0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<Run> = None;
    let mut all_converged = true;
    let mut iterations = 0;
    // The objective is not concave, so every vertex of the feasible set
    // (equal split over the first m positions) is tried before random starts.
    let vertices = (1..=n).map(|m| (0..n).map(|i| if i < m { 1.0 / m as f64 } else { 0.0 }).collect::<Vec<f64>>());
    let random = (0..opts.restarts).map(|_| random_monotone_point(&mut rng, n)).collect::<Vec<_>>();
    for start in vertices.chain(random) {
        let run = ascend(objective, start, opts);
        all_converged &= run.converged;
        iterations = iterations.max(run.iterations);
        if best.as_ref().is_none_or(|b| run.objective > b.objective) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");
    Ok(OptimizedAllocation { betas: best.betas, objective: best.objective, converged: all_converged, iterations })
}

/// Uniform point on the unit simplex, sorted nonincreasing.
fn random_monotone_point<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut e: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().max(f64::MIN_POSITIVE).ln()).collect();
    let s: f64 = e.iter().sum();
    e.iter_mut().for_each(|v| *v /= s);
    e.sort_by(|a, b| b.total_cmp(a));
    e
}

/// Whether `betas` satisfies the allocation constraints within `tol`.
pub fn is_feasible(betas: &[f64], tol: f64) -> bool {
    betas.iter().sum::<f64>() <= 1.0 + tol
        && betas.windows(2).all(|w| w[0] + tol >= w[1])
        && betas.iter().all(|&b| b >= -tol)
}

/// Allocation scheme for every group of an assignment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "lowercase")]
pub enum AllocationScheme {
    Fixed { zeta: f64 },
    Optimized,
}

impl AllocationScheme {
    pub fn label(&self) -> &'static str {
        match self {
            AllocationScheme::Fixed { .. } => "fixed",
            AllocationScheme::Optimized => "optimized",
        }
    }
}

/// Betas of every group. The flag is raised when any solver run failed to
/// converge.
pub fn allocate(
    assignment: &GroupAssignment,
    scheme: AllocationScheme,
    estimated: &[Vec<f64>],
    budget: LinkBudget,
    rule: InterferenceSet,
    opts: &SolverOptions,
) -> Result<(Vec<PowerAllocation>, bool), AllocationError> {
    let mut flagged = false;
    let mut out = Vec::with_capacity(assignment.groups().len());
    for (g, group) in assignment.groups().iter().enumerate() {
        let betas = match scheme {
            AllocationScheme::Fixed { zeta } => fixed_allocation(group.users.len(), zeta)?,
            AllocationScheme::Optimized => {
                let obj = GroupObjective::new(assignment, g, estimated, budget, rule);
                let sol = optimize_allocation(&obj, opts)?;
                flagged |= !sol.converged;
                sol.betas
            }
        };
        out.push(PowerAllocation::new(group.users.clone(), betas));
    }
    Ok((out, flagged))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn budget(p: f64) -> LinkBudget {
        LinkBudget { transmit_power: p, noise_variance: 1.462e-13 }
    }

    #[test]
    fn fixed_allocation_examples() {
        assert_eq!(fixed_allocation(1, 0.7).unwrap(), vec![1.0]);
        let b = fixed_allocation(2, 0.6).unwrap();
        assert_relative_eq!(b[0], 0.6, epsilon = 1e-15);
        assert_relative_eq!(b[1], 0.4, epsilon = 1e-15);
        let b = fixed_allocation(3, 0.6).unwrap();
        for (x, y) in b.iter().zip([0.6, 0.24, 0.16]) {
            assert_relative_eq!(*x, y, epsilon = 1e-15);
        }
        assert_eq!(fixed_allocation(2, 0.5), Err(AllocationError::InvalidZeta(0.5)));
        assert!(fixed_allocation(2, 1.01).is_err());
        assert!(fixed_allocation(0, 0.6).is_err());
    }

    #[test]
    fn sic_order_examples() {
        assert_eq!(sic_order(&[(0, 2e-6), (1, 8e-6)]), vec![0, 1]);
        assert_eq!(sic_order(&[(1, 3e-6), (0, 3e-6)]), vec![0, 1]);
        assert_eq!(sic_order(&[(0, 3.0), (1, 2.0), (2, 1.0)]), vec![2, 1, 0]);
    }

    #[test]
    fn rate_examples() {
        assert_eq!(rate(0.0), 0.0);
        assert_relative_eq!(rate(3.0), 1.0, epsilon = 1e-15);
        assert_relative_eq!(rate(1.0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn secrecy_examples() {
        let r = secrecy_terms(&[1.0], &[0.3]);
        assert_relative_eq!(r.secrecy[0], 0.7, epsilon = 1e-15);
        assert_eq!(secrecy_terms(&[0.2], &[0.5]).secrecy, vec![0.0]);
        let r = secrecy_terms(&[1.0, 1.0], &[1.0, 0.0]);
        assert_eq!(r.sum_secrecy, 1.0);
        assert_eq!(r.sum_rate, 2.0);
    }

    #[test]
    fn single_led_single_user() {
        let a = GroupAssignment::from_led_sets(vec![vec![0]], 1);
        let allocs = vec![PowerAllocation::new(vec![0], vec![1.0])];
        let h = 3e-6;
        let b = budget(0.5);
        let g = user_sinr(0, &a, &[vec![h]], &allocs, b, InterferenceSet::Physical);
        assert_relative_eq!(g, h * h * 0.5 / 1.462e-13, max_relative = 1e-12);
    }

    #[test]
    fn two_user_textbook_noma() {
        let a = GroupAssignment::from_led_sets(vec![vec![0, 1]], 2);
        let allocs = vec![PowerAllocation::new(vec![0, 1], fixed_allocation(2, 0.6).unwrap())];
        let h = 4e-6;
        let b = budget(1.0);
        let gains = vec![vec![h], vec![h]];
        let nf = 1.462e-13;
        let weak = user_sinr(0, &a, &gains, &allocs, b, InterferenceSet::Physical);
        let strong = user_sinr(1, &a, &gains, &allocs, b, InterferenceSet::Physical);
        assert_relative_eq!(strong, 0.4 * h * h / nf, max_relative = 1e-12);
        assert_relative_eq!(weak, 0.6 * h * h / (0.4 * h * h + nf), max_relative = 1e-12);
    }

    #[test]
    fn blind_eavesdropper_and_clone() {
        let a = GroupAssignment::from_led_sets(vec![vec![0, 1], vec![1]], 2);
        let allocs: Vec<PowerAllocation> = a
            .groups()
            .iter()
            .map(|g| PowerAllocation::new(g.users.clone(), fixed_allocation(g.users.len(), 0.6).unwrap()))
            .collect();
        let gains = vec![vec![2e-6, 1e-6], vec![3e-6, 5e-6]];
        let b = budget(0.1);
        for k in 0..2 {
            assert_eq!(eve_sinr(k, &a, &[0.0, 0.0], &allocs, b, InterferenceSet::Physical), 0.0);
            assert_eq!(
                eve_sinr(k, &a, &gains[k], &allocs, b, InterferenceSet::Physical),
                user_sinr(k, &a, &gains, &allocs, b, InterferenceSet::Physical)
            );
        }
    }

    #[test]
    fn unserved_user_has_zero_sinr() {
        let a = GroupAssignment::from_led_sets(vec![vec![0], vec![]], 2);
        let allocs = vec![PowerAllocation::new(vec![0], vec![1.0])];
        assert!(!a.is_served(1));
        assert_eq!(user_sinr(1, &a, &[vec![1.0, 1.0], vec![1.0, 1.0]], &allocs, budget(1.0), InterferenceSet::Physical), 0.0);
    }

    #[test]
    fn group_dedup_and_interference_sets() {
        let a = GroupAssignment::from_led_sets(vec![vec![1, 0], vec![0, 1], vec![2], vec![]], 3);
        assert_eq!(a.groups().len(), 2);
        assert_eq!(a.groups()[0].leds, vec![0, 1]);
        assert_eq!(a.serving_leds(0), vec![0, 1]);
        assert_eq!(a.interfering_leds(0, 0, InterferenceSet::Physical), vec![2]);
        assert_eq!(a.interfering_leds(0, 0, InterferenceSet::Literal), vec![1]);
        assert_eq!(a.interfering_leds(2, 1, InterferenceSet::Physical), vec![0, 1]);
        assert!(a.interfering_leds(2, 1, InterferenceSet::Literal).is_empty());
    }

    #[test]
    fn sic_order_applied_per_group() {
        let mut a = GroupAssignment::from_led_sets(vec![vec![0, 1, 2]], 3);
        a.apply_sic_order(&[vec![5.0], vec![1.0], vec![3.0]]);
        assert_eq!(a.groups()[0].users, vec![1, 2, 0]);
    }

    #[test]
    fn pav_and_projection() {
        assert_eq!(isotonic_nonincreasing(&[1.0, 3.0, 2.0]), vec![2.0, 2.0, 2.0]);
        assert_eq!(isotonic_nonincreasing(&[3.0, 1.0, 2.0]), vec![3.0, 1.5, 1.5]);
        let p = project_capped_simplex(&[0.2, -0.1, 0.3]);
        assert_eq!(p, vec![0.2, 0.0, 0.3]);
        let p = project_capped_simplex(&[1.0, 1.0]);
        assert_relative_eq!(p[0], 0.5, epsilon = 1e-15);
        let p = project_monotone_simplex(&[0.1, 0.9, 0.4]);
        assert!(is_feasible(&p, 1e-12));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let obj = GroupObjective { gains_sq: vec![1e-11, 4e-11, 9e-11], floor: vec![2e-13, 5e-13, 1e-13] };
        let x = [0.5, 0.3, 0.15];
        let g = obj.gradient(&x);
        for j in 0..3 {
            let h = 1e-7;
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let fd = (obj.value(&xp) - obj.value(&xm)) / (2.0 * h);
            assert_relative_eq!(g[j], fd, max_relative = 1e-5);
        }
    }

    #[test]
    fn single_user_gets_everything() {
        let obj = GroupObjective { gains_sq: vec![1e-11], floor: vec![1e-13] };
        let sol = optimize_allocation(&obj, &SolverOptions::default()).unwrap();
        assert_eq!(sol.betas, vec![1.0]);
        assert!(sol.converged);
    }

    #[test]
    fn optimizer_beats_fixed_on_identical_gains() {
        let obj = GroupObjective { gains_sq: vec![2e-11, 2e-11], floor: vec![1.5e-13, 1.5e-13] };
        let sol = optimize_allocation(&obj, &SolverOptions::default()).unwrap();
        assert!(is_feasible(&sol.betas, 1e-9));
        assert!(sol.objective >= obj.value(&fixed_allocation(2, 0.6).unwrap()));
    }

    proptest! {
        #[test]
        fn fixed_betas_sum_to_one(size in 1usize..8, zeta in 0.5001f64..1.0) {
            let b = fixed_allocation(size, zeta).unwrap();
            prop_assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(b.windows(2).all(|w| w[0] > w[1]));
        }

        #[test]
        fn projection_is_feasible_and_idempotent(x in proptest::collection::vec(-2.0f64..2.0, 1..6)) {
            let p = project_monotone_simplex(&x);
            prop_assert!(is_feasible(&p, 1e-12));
            let q = project_monotone_simplex(&p);
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn sinr_monotone_in_power(h0 in 1e-7f64..1e-5, h1 in 1e-7f64..1e-5, p in 1e-4f64..10.0) {
            let a = GroupAssignment::from_led_sets(vec![vec![0, 1], vec![1]], 2);
            let allocs: Vec<PowerAllocation> = a.groups().iter()
                .map(|g| PowerAllocation::new(g.users.clone(), fixed_allocation(g.users.len(), 0.6).unwrap()))
                .collect();
            let gains = vec![vec![h0, h1], vec![h1, h0]];
            for k in 0..2 {
                let lo = user_sinr(k, &a, &gains, &allocs, budget(p), InterferenceSet::Physical);
                let hi = user_sinr(k, &a, &gains, &allocs, budget(2.0 * p), InterferenceSet::Physical);
                prop_assert!(hi >= lo);
            }
        }

        #[test]
        fn noiseless_sinr_scale_invariant(h0 in 1e-7f64..1e-5, h1 in 1e-7f64..1e-5, c in 0.1f64..10.0) {
            let a = GroupAssignment::from_led_sets(vec![vec![0, 1], vec![0]], 2);
            let allocs: Vec<PowerAllocation> = a.groups().iter()
                .map(|g| PowerAllocation::new(g.users.clone(), fixed_allocation(g.users.len(), 0.7).unwrap()))
                .collect();
            let b = LinkBudget { transmit_power: 1.0, noise_variance: 0.0 };
            let gains = vec![vec![h0, h1], vec![h1, h0]];
            let scaled: Vec<Vec<f64>> = gains.iter().map(|r| r.iter().map(|g| g * c).collect()).collect();
            for k in 0..2 {
                let x = user_sinr(k, &a, &gains, &allocs, b, InterferenceSet::Physical);
                let y = user_sinr(k, &a, &scaled, &allocs, b, InterferenceSet::Physical);
                // Interference-free users have infinite SINR at zero noise.
                prop_assert!(x == y || (x - y).abs() <= 1e-9 * x.abs().max(1.0));
            }
        }

        #[test]
        fn secrecy_bounded_by_rate(pairs in proptest::collection::vec((0.0f64..5.0, 0.0f64..5.0), 1..8)) {
            let (r, e): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let rep = secrecy_terms(&r, &e);
            for (s, rk) in rep.secrecy.iter().zip(&r) {
                prop_assert!(*s >= 0.0 && s <= rk);
            }
        }
    }
}
