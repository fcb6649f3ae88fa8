//! Independent checks of the geometric, SINR and optimisation kernels.
//!
//! Each oracle draws `n` random instances from `seed`, compares the library
//! against a slower reference, and returns a report with a pass verdict.

use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{self, LedParams, OrientationModel, PdParams};
use crate::geom::{self, BodyCylinder, Plane, RectangleAzimuth, Vec3};
use crate::noma::{self, GroupAssignment, GroupObjective, InterferenceSet, LinkBudget, PowerAllocation, SolverOptions};
use crate::sim::trial_rng;

/// Oracle names accepted by [`run`].
pub const KINDS: [&str; 4] = ["blockage", "sinr", "alloc", "azimuth"];

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Report {
    Blockage(BlockageReport),
    Sinr(SinrReport),
    Alloc(AllocReport),
    Azimuth(AzimuthReport),
}

impl Report {
    pub fn passed(&self) -> bool {
        match self {
            Report::Blockage(r) => r.passed(),
            Report::Sinr(r) => r.passed(),
            Report::Alloc(r) => r.passed(),
            Report::Azimuth(r) => r.passed(),
        }
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Report::Blockage(r) => r.fmt(f),
            Report::Sinr(r) => r.fmt(f),
            Report::Alloc(r) => r.fmt(f),
            Report::Azimuth(r) => r.fmt(f),
        }
    }
}

/// Runs the oracle called `kind`; `None` for an unknown name.
pub fn run(kind: &str, n: usize, seed: u64) -> Option<Report> {
    Some(match kind {
        "blockage" => Report::Blockage(blockage(n, seed)),
        "sinr" => Report::Sinr(sinr(n, seed)),
        "alloc" => Report::Alloc(alloc(n, seed)),
        "azimuth" => Report::Azimuth(azimuth(n, seed)),
        _ => return None,
    })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

// ---------------------------------------------------------------- blockage

pub const ROOM: f64 = 40.0;
pub const CEILING: f64 = 3.98;
pub const DEVICE_PLANE: f64 = 0.85;
pub const BODY_HEIGHT: f64 = 1.6;
pub const BODY_RADIUS: f64 = 0.2;
pub const DEVICE_OFFSET: f64 = 0.4;

pub const BLOCKAGE_SAMPLES: usize = 10_000;
pub const BOUNDARY_BAND: f64 = 1e-6;
pub const MIN_AGREEMENT: f64 = 0.999;
pub const RESIDUAL_TOL: f64 = 1e-9;

/// One random LED / photodiode / body triple.
#[derive(Debug, Clone, Copy)]
pub struct BlockageCase {
    pub led: Vec3,
    pub pd: Vec3,
    pub body: BodyCylinder,
}

/// Draws a case in the reference room. A third of the bodies belong to the
/// photodiode holder, a third straddle the light path and a third stand
/// nearby at random.
pub fn random_blockage_case<R: Rng>(rng: &mut R) -> BlockageCase {
    let led = Vec3::new(rng.random_range(0.0..=ROOM), rng.random_range(0.0..=ROOM), CEILING);
    let reach = 12.0 * rng.random::<f64>().sqrt();
    let bearing = rng.random_range(-PI..PI);
    let pd = Vec3::new(
        (led.x + reach * bearing.cos()).clamp(0.0, ROOM),
        (led.y + reach * bearing.sin()).clamp(0.0, ROOM),
        DEVICE_PLANE,
    );
    let top = match rng.random_range(0..3) {
        0 => geom::body_top_center(pd, rng.random_range(-PI..PI), DEVICE_OFFSET, BODY_HEIGHT),
        1 => {
            let a = pd - led;
            let t_top = (BODY_HEIGHT - led.z) / a.z;
            let t = rng.random_range((t_top - 0.05)..=1.0);
            let along = led + a * t;
            let h = a.horizontal();
            let side = if h.norm() > 0.0 { Vec3::new(-h.y, h.x, 0.0) * (1.0 / h.norm()) } else { Vec3::new(1.0, 0.0, 0.0) };
            along + side * rng.random_range(-0.5..=0.5)
        }
        _ => {
            let r = 3.0 * rng.random::<f64>().sqrt();
            let b = rng.random_range(-PI..PI);
            Vec3::new(pd.x + r * b.cos(), pd.y + r * b.sin(), BODY_HEIGHT)
        }
    };
    let body = BodyCylinder::new(top, BODY_RADIUS, BODY_HEIGHT).expect("valid body");
    BlockageCase { led, pd, body }
}

/// Part of the segment `S -> D` at heights in `[0, H]`, as line parameters.
fn low_part(c: &BlockageCase) -> Option<(f64, f64)> {
    let a = c.pd - c.led;
    let param = |z: f64| (z - c.led.z) / a.z;
    let (t0, t1) = if a.z == 0.0 {
        if (0.0..=c.body.height).contains(&c.led.z) {
            (0.0, 1.0)
        } else {
            return None;
        }
    } else {
        let (ta, tb) = (param(c.body.height), param(0.0));
        (ta.min(tb).max(0.0), ta.max(tb).min(1.0))
    };
    (t0 <= t1).then_some((t0, t1))
}

/// Reference answer: dense sampling of the segment with a point-in-solid test.
pub fn sampled_blocked(c: &BlockageCase, samples: usize) -> bool {
    let Some((t0, t1)) = low_part(c) else {
        return false;
    };
    let a = c.pd - c.led;
    (0..samples).any(|i| {
        let t = t0 + (t1 - t0) * i as f64 / (samples - 1) as f64;
        c.body.contains(c.led + a * t)
    })
}

/// Signed horizontal clearance between the body surface and the part of the
/// segment inside the body's height range; negative means penetration.
pub fn closest_approach_margin(c: &BlockageCase) -> f64 {
    let Some((t0, t1)) = low_part(c) else {
        return f64::INFINITY;
    };
    let a = c.pd - c.led;
    let p = (c.led + a * t0).horizontal();
    let q = (c.led + a * t1).horizontal();
    let u = c.body.top_center.horizontal();
    let pq = q - p;
    let len2 = pq.dot(pq);
    let s = if len2 > 0.0 { ((u - p).dot(pq) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p + pq * s - u).norm() - c.body.radius
}

/// Largest plane and collinearity residual of the two intersections used by
/// the blockage test.
pub fn intersection_residual(c: &BlockageCase) -> f64 {
    let a = c.pd - c.led;
    let u = c.body.top_center;
    let mut worst: f64 = 0.0;
    let h = a.horizontal();
    let planes = [Some(Vec3::UNIT_Z), (h.norm() > 0.0).then(|| h * (1.0 / h.norm()))];
    for normal in planes.into_iter().flatten() {
        let plane = Plane { point: u, normal };
        if let Ok(p) = geom::line_plane_intersection(c.led, a, &plane) {
            let collinear = (p - c.led).cross(a).norm() / a.norm();
            worst = worst.max(plane.residual(p).abs()).max(collinear);
        }
    }
    worst
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct BlockageReport {
    pub cases: usize,
    pub blocked: usize,
    pub agree: usize,
    /// Cases with `|margin| > BOUNDARY_BAND`.
    pub outside_band: usize,
    pub disagree_outside_band: usize,
    pub max_residual: f64,
    /// Cases where orienting the rectangle by the first-quadrant bearing
    /// changes the verdict.
    pub first_quadrant_disagree: usize,
}

impl BlockageReport {
    pub fn agreement(&self) -> f64 {
        self.agree as f64 / self.cases.max(1) as f64
    }

    pub fn agreement_ok(&self) -> bool {
        self.agreement() >= MIN_AGREEMENT
    }

    pub fn band_ok(&self) -> bool {
        self.disagree_outside_band == 0
    }

    pub fn residual_ok(&self) -> bool {
        self.max_residual <= RESIDUAL_TOL
    }

    pub fn passed(&self) -> bool {
        self.agreement_ok() && self.band_ok() && self.residual_ok()
    }
}

impl fmt::Display for BlockageReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "blockage: {} cases, {} blocked by the sampling reference", self.cases, self.blocked)?;
        writeln!(f, "  [{}] agreement {:.6} (>= {MIN_AGREEMENT})", verdict(self.agreement_ok()), self.agreement())?;
        writeln!(
            f,
            "  [{}] {} disagreements among {} cases with |margin| > {BOUNDARY_BAND:e} m",
            verdict(self.band_ok()),
            self.disagree_outside_band,
            self.outside_band
        )?;
        writeln!(f, "  [{}] max intersection residual {:.3e} (<= {RESIDUAL_TOL:e})", verdict(self.residual_ok()), self.max_residual)?;
        write!(
            f,
            "  info: first-quadrant rectangle bearing disagrees on {} cases ({:.3}%)",
            self.first_quadrant_disagree,
            100.0 * self.first_quadrant_disagree as f64 / self.cases.max(1) as f64
        )
    }
}

struct BlockageOutcome {
    blocked: bool,
    agree: bool,
    outside_band: bool,
    residual: f64,
    first_quadrant_disagree: bool,
}

pub fn blockage(n: usize, seed: u64) -> BlockageReport {
    let outcomes: Vec<BlockageOutcome> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let c = random_blockage_case(&mut trial_rng(seed, i));
            let fast = geom::is_blocked(c.led, c.pd, &c.body);
            let reference = sampled_blocked(&c, BLOCKAGE_SAMPLES);
            let literal = geom::blockage_with(c.led, c.pd, &c.body, RectangleAzimuth::FirstQuadrant).blocked();
            BlockageOutcome {
                blocked: reference,
                agree: fast == reference,
                outside_band: closest_approach_margin(&c).abs() > BOUNDARY_BAND,
                residual: intersection_residual(&c),
                first_quadrant_disagree: literal != fast,
            }
        })
        .collect();
    let mut r = BlockageReport { cases: n, ..Default::default() };
    for o in outcomes {
        r.blocked += usize::from(o.blocked);
        r.agree += usize::from(o.agree);
        r.outside_band += usize::from(o.outside_band);
        r.disagree_outside_band += usize::from(o.outside_band && !o.agree);
        r.max_residual = r.max_residual.max(o.residual);
        r.first_quadrant_disagree += usize::from(o.first_quadrant_disagree);
    }
    r
}

// -------------------------------------------------------------------- sinr

pub const SINR_TOL: f64 = 1e-12;

/// A small random network: serving sets, gains for users and eavesdropper,
/// and per-group betas.
#[derive(Debug, Clone)]
pub struct SinrCase {
    pub assignment: GroupAssignment,
    pub gains: Vec<Vec<f64>>,
    pub eve_gains: Vec<f64>,
    pub allocs: Vec<PowerAllocation>,
    pub budget: LinkBudget,
}

fn random_gain<R: Rng>(rng: &mut R) -> f64 {
    if rng.random_bool(0.15) {
        0.0
    } else {
        10f64.powf(rng.random_range(-7.0..-4.0))
    }
}

pub fn random_sinr_case<R: Rng>(rng: &mut R) -> SinrCase {
    let num_leds = rng.random_range(1..=3);
    let num_users = rng.random_range(1..=3);
    let sets: Vec<Vec<usize>> =
        (0..num_leds).map(|_| (0..num_users).filter(|_| rng.random_bool(0.6)).collect()).collect();
    let mut assignment = GroupAssignment::from_led_sets(sets, num_users);
    let gains: Vec<Vec<f64>> = (0..num_users).map(|_| (0..num_leds).map(|_| random_gain(rng)).collect()).collect();
    let eve_gains = (0..num_leds).map(|_| random_gain(rng)).collect();
    let estimated: Vec<Vec<f64>> = (0..num_users).map(|_| (0..num_leds).map(|_| random_gain(rng)).collect()).collect();
    assignment.apply_sic_order(&estimated);
    let allocs = assignment
        .groups()
        .iter()
        .map(|g| {
            let mut b: Vec<f64> = (0..g.users.len()).map(|_| rng.random::<f64>()).collect();
            b.sort_by(|x, y| y.total_cmp(x));
            let s: f64 = b.iter().sum::<f64>() / rng.random_range(0.5..=1.0);
            PowerAllocation::new(g.users.clone(), b.iter().map(|v| v / s).collect())
        })
        .collect();
    let budget = LinkBudget { transmit_power: 10f64.powf(rng.random_range(-4.0..0.0)), noise_variance: 1.462e-13 };
    SinrCase { assignment, gains, eve_gains, allocs, budget }
}

/// Straight re-evaluation of the SINR of the message for user `k` seen through
/// per-LED gains `h`, written directly from the serving sets.
pub fn reference_sinr(c: &SinrCase, k: usize, h: &[f64], rule: InterferenceSet) -> f64 {
    let sets = c.assignment.led_sets();
    // Groups holding k with its share and the power of weaker-decoded messages.
    let mut best: Option<(usize, f64, f64)> = None;
    for (g, alloc) in c.allocs.iter().enumerate() {
        let Some(pos) = alloc.order.iter().position(|&u| u == k) else {
            continue;
        };
        let beta = alloc.betas[pos];
        let mut tail = 0.0;
        for j in pos + 1..alloc.betas.len() {
            tail += alloc.betas[j];
        }
        let better = match best {
            None => true,
            Some((_, b, t)) => beta > b || (beta == b && tail < t),
        };
        if better {
            best = Some((g, beta, tail));
        }
    }
    let Some((g, beta, tail)) = best else {
        return 0.0;
    };
    let mut serving = 0.0;
    for n in 0..sets.len() {
        if sets[n].contains(&k) {
            serving += h[n];
        }
    }
    let mut members = c.assignment.groups()[g].users.clone();
    members.sort_unstable();
    let first_led_of_group = (0..sets.len()).find(|&n| sets[n] == members).expect("group has an LED");
    let mut interfering = 0.0;
    for n in 0..sets.len() {
        let counts = match rule {
            InterferenceSet::Physical => !sets[n].is_empty() && !sets[n].contains(&k),
            InterferenceSet::Literal => sets[n].contains(&k) && n != first_led_of_group,
        };
        if counts {
            interfering += h[n];
        }
    }
    let num = serving * serving * beta;
    if num == 0.0 {
        return 0.0;
    }
    num / (serving * serving * tail + interfering * interfering + c.budget.noise_variance / c.budget.transmit_power)
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SinrReport {
    pub cases: usize,
    pub evaluations: usize,
    pub max_rel_err: f64,
}

impl SinrReport {
    pub fn passed(&self) -> bool {
        self.max_rel_err <= SINR_TOL
    }
}

impl fmt::Display for SinrReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "sinr: {} cases, {} user/eavesdropper evaluations", self.cases, self.evaluations)?;
        write!(f, "  [{}] max relative error {:.3e} (<= {SINR_TOL:e})", verdict(self.passed()), self.max_rel_err)
    }
}

pub fn sinr(n: usize, seed: u64) -> SinrReport {
    let mut r = SinrReport { cases: n, ..Default::default() };
    for i in 0..n as u64 {
        let c = random_sinr_case(&mut trial_rng(seed, i));
        for rule in [InterferenceSet::Physical, InterferenceSet::Literal] {
            for k in 0..c.assignment.num_users() {
                let user = noma::user_sinr(k, &c.assignment, &c.gains, &c.allocs, c.budget, rule);
                let eve = noma::eve_sinr(k, &c.assignment, &c.eve_gains, &c.allocs, c.budget, rule);
                r.max_rel_err = r.max_rel_err.max(rel_err(user, reference_sinr(&c, k, &c.gains[k], rule)));
                r.max_rel_err = r.max_rel_err.max(rel_err(eve, reference_sinr(&c, k, &c.eve_gains, rule)));
                r.evaluations += 2;
            }
        }
    }
    r
}

// ------------------------------------------------------------------- alloc

pub const GRID_STEP: f64 = 0.01;
pub const ALLOC_REL_GAP: f64 = 0.01;
pub const FEASIBILITY_TOL: f64 = 1e-9;

pub fn random_objective<R: Rng>(rng: &mut R, size: usize) -> GroupObjective {
    let floor: Vec<f64> = (0..size).map(|_| 10f64.powf(rng.random_range(-13.0..-9.0))).collect();
    let gains_sq = floor.iter().map(|c| c * 10f64.powf(rng.random_range(-1.0..4.0))).collect();
    GroupObjective { gains_sq, floor }
}

/// Best objective over the monotone capped simplex sampled at `step`.
pub fn grid_optimum(obj: &GroupObjective, step: f64) -> (f64, Vec<f64>) {
    let m = (1.0 / step).round() as usize;
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut cur = vec![0.0; obj.len()];
    fn walk(obj: &GroupObjective, i: usize, max_level: usize, budget: usize, step: f64, cur: &mut Vec<f64>, best: &mut (f64, Vec<f64>)) {
        if i == cur.len() {
            let v = obj.value(cur);
            if v > best.0 {
                *best = (v, cur.clone());
            }
            return;
        }
        for level in 0..=max_level.min(budget) {
            cur[i] = level as f64 * step;
            walk(obj, i + 1, level, budget - level, step, cur, best);
        }
    }
    walk(obj, 0, m, m, step, &mut cur, &mut best);
    best
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct AllocReport {
    pub cases: usize,
    /// Largest `(grid - optimizer) / grid` over all cases.
    pub max_rel_gap: f64,
    pub infeasible: usize,
    pub unconverged: usize,
    /// Fixed-scheme instances whose betas do not sum to 1 within 1e-12 or are
    /// not strictly decreasing.
    pub fixed_violations: usize,
    pub fixed_checked: usize,
}

impl AllocReport {
    pub fn gap_ok(&self) -> bool {
        self.max_rel_gap <= ALLOC_REL_GAP
    }

    pub fn passed(&self) -> bool {
        self.gap_ok() && self.infeasible == 0 && self.fixed_violations == 0
    }
}

impl fmt::Display for AllocReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "alloc: {} optimizer cases (group sizes 1..=3)", self.cases)?;
        writeln!(f, "  [{}] max relative gap to {GRID_STEP} grid {:.3e} (<= {ALLOC_REL_GAP})", verdict(self.gap_ok()), self.max_rel_gap)?;
        writeln!(f, "  [{}] {} infeasible solutions (tol {FEASIBILITY_TOL:e})", verdict(self.infeasible == 0), self.infeasible)?;
        writeln!(
            f,
            "  [{}] {} of {} fixed-ratio allocations violate sum = 1 or strict decrease",
            verdict(self.fixed_violations == 0),
            self.fixed_violations,
            self.fixed_checked
        )?;
        write!(f, "  info: {} solver runs flagged as not converged", self.unconverged)
    }
}

/// Whether fixed betas sum to one within 1e-12 and strictly decrease.
pub fn fixed_betas_ok(betas: &[f64]) -> bool {
    (betas.iter().sum::<f64>() - 1.0).abs() <= 1e-12 && betas.windows(2).all(|w| w[0] > w[1])
}

pub fn alloc(n: usize, seed: u64) -> AllocReport {
    let results: Vec<(f64, bool, bool, usize, usize)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let size = rng.random_range(1..=3);
            let obj = random_objective(&mut rng, size);
            let opts = SolverOptions { seed: rng.random(), ..SolverOptions::default() };
            let sol = noma::optimize_allocation(&obj, &opts).expect("nonempty group");
            let (grid, _) = grid_optimum(&obj, GRID_STEP);
            let gap = (grid - sol.objective) / grid.abs().max(f64::MIN_POSITIVE);
            // Fixed ratios strictly inside (0.5, 1) for sizes 2..=6.
            let zeta = rng.random_range(0.5..1.0f64).max(0.5 + 1e-9);
            let mut checked = 0;
            let mut violations = 0;
            for size in 2..=6 {
                let b = noma::fixed_allocation(size, zeta).expect("valid zeta");
                checked += 1;
                violations += usize::from(!fixed_betas_ok(&b));
            }
            (gap, noma::is_feasible(&sol.betas, FEASIBILITY_TOL), sol.converged, checked, violations)
        })
        .collect();
    let mut r = AllocReport { cases: n, ..Default::default() };
    for (gap, feasible, converged, checked, violations) in results {
        r.max_rel_gap = r.max_rel_gap.max(gap);
        r.infeasible += usize::from(!feasible);
        r.unconverged += usize::from(!converged);
        r.fixed_checked += checked;
        r.fixed_violations += violations;
    }
    r
}

// ----------------------------------------------------------------- azimuth

pub const AZIMUTH_GRID: usize = 3600;
pub const AZIMUTH_TOL: f64 = 1e-9;

/// Relative loss of the incidence cosine at half a grid spacing; no grid
/// point can be further than this from the continuous optimum.
pub fn azimuth_grid_bound() -> f64 {
    1.0 - (PI / AZIMUTH_GRID as f64).cos()
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct AzimuthReport {
    pub cases: usize,
    /// Cases with a nonzero best gain.
    pub lit: usize,
    /// Largest `(grid - closed) / closed`: how far the grid beats the closed
    /// form.
    pub max_grid_excess: f64,
    /// Largest `(closed - grid) / closed`.
    pub max_grid_shortfall: f64,
    /// Largest two-sided relative gap after refining the best grid cell.
    pub max_refined_gap: f64,
}

impl AzimuthReport {
    pub fn excess_ok(&self) -> bool {
        self.max_grid_excess <= AZIMUTH_TOL
    }

    pub fn shortfall_ok(&self) -> bool {
        self.max_grid_shortfall <= azimuth_grid_bound() + AZIMUTH_TOL
    }

    pub fn refined_ok(&self) -> bool {
        self.max_refined_gap <= AZIMUTH_TOL
    }

    pub fn passed(&self) -> bool {
        self.excess_ok() && self.shortfall_ok() && self.refined_ok()
    }
}

impl fmt::Display for AzimuthReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "azimuth: {} geometries ({} in view), {AZIMUTH_GRID}-point grid", self.cases, self.lit)?;
        writeln!(f, "  [{}] grid never beats closed form: max excess {:.3e} (<= {AZIMUTH_TOL:e})", verdict(self.excess_ok()), self.max_grid_excess)?;
        writeln!(
            f,
            "  [{}] grid shortfall {:.3e} (<= spacing bound {:.3e})",
            verdict(self.shortfall_ok()),
            self.max_grid_shortfall,
            azimuth_grid_bound()
        )?;
        write!(f, "  [{}] refined grid gap {:.3e} (<= {AZIMUTH_TOL:e})", verdict(self.refined_ok()), self.max_refined_gap)
    }
}

/// Golden-section refinement of a unimodal function on `[lo, hi]`.
fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..100 {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        }
    }
    fa.max(fb).max(f(lo)).max(f(hi))
}

pub fn azimuth(n: usize, seed: u64) -> AzimuthReport {
    let led = LedParams::new(70f64.to_radians());
    let pd = PdParams { area: 1e-4, fov: 60f64.to_radians(), refractive_index: 1.5, responsivity: 1.0 };
    let polar = OrientationModel::default().polar_mean;
    let step = 2.0 * PI / AZIMUTH_GRID as f64;
    let rows: Vec<Option<(f64, f64, f64)>> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let s = Vec3::new(rng.random_range(0.0..=ROOM), rng.random_range(0.0..=ROOM), CEILING);
            let reach = 8.0 * rng.random::<f64>().sqrt();
            let b = rng.random_range(-PI..PI);
            let d = Vec3::new(s.x + reach * b.cos(), s.y + reach * b.sin(), DEVICE_PLANE);
            let gain = |w: f64| channel::estimated_gain_at_azimuth(s, d, w, polar, &led, &pd);
            let closed = channel::estimated_channel_gain(s, d, polar, &led, &pd);
            let (j_best, grid) = (0..AZIMUTH_GRID)
                .map(|j| (j, gain(-PI + j as f64 * step)))
                .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
            if closed == 0.0 && grid == 0.0 {
                return None;
            }
            let centre = -PI + j_best as f64 * step;
            let refined = golden_max(gain, centre - step, centre + step).max(grid);
            let scale = closed.max(grid);
            Some(((grid - closed) / scale, (closed - grid) / scale, (refined - closed).abs() / scale))
        })
        .collect();
    let mut r = AzimuthReport { cases: n, ..Default::default() };
    for (excess, shortfall, refined) in rows.into_iter().flatten() {
        r.lit += 1;
        r.max_grid_excess = r.max_grid_excess.max(excess);
        r.max_grid_shortfall = r.max_grid_shortfall.max(shortfall);
        r.max_refined_gap = r.max_refined_gap.max(refined);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_oracle_finds_textbook_split() {
        // Two users, noiseless floor tiny: the optimum puts nearly all power on
        // the first user only when its gain dominates; sanity check shape.
        let obj = GroupObjective { gains_sq: vec![1.0, 1.0], floor: vec![1e-3, 1e-3] };
        let (v, b) = grid_optimum(&obj, 0.01);
        assert!(noma::is_feasible(&b, 1e-12));
        assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(v > 0.0);
    }

    #[test]
    fn margin_sign_matches_obvious_cases() {
        let led = Vec3::new(5.0, 5.0, CEILING);
        let pd = Vec3::new(5.0, 5.0, DEVICE_PLANE);
        let through = BlockageCase { led, pd, body: BodyCylinder::new(Vec3::new(5.0, 5.1, 1.6), 0.2, 1.6).unwrap() };
        assert!(closest_approach_margin(&through) < 0.0);
        assert!(sampled_blocked(&through, 100));
        let clear = BlockageCase { led, pd, body: BodyCylinder::new(Vec3::new(8.0, 5.0, 1.6), 0.2, 1.6).unwrap() };
        assert!((closest_approach_margin(&clear) - 2.8).abs() < 1e-12);
        assert!(!sampled_blocked(&clear, 100));
    }

    #[test]
    fn small_runs_pass() {
        assert!(blockage(2000, 3).passed());
        assert!(sinr(200, 3).passed());
        assert!(azimuth(100, 3).passed());
    }
}
