//! Incompatibility robustness of channel and measurement pairs.
//!
//! A pair is compatible at mixing weight `r` if the noisy channels
//! `(Λᵢ + r·Λ̄ᵢ)/(1+r)` admit a joint channel for some noise channels `Λ̄ᵢ` in
//! the chosen class. Feasibility is probed by maximizing the smallest
//! eigenvalue `q` of the joint Choi matrix subject to the marginal equalities;
//! the pair is compatible iff `q ≥ 0`. The robustness is the smallest such `r`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain_err, Error, Result};
use crate::linalg::{trace_distance, ComplexMatrix};
use crate::qchannel::{Channel, DynamicalMap, Povm};
use crate::sdp::{
    self, BlockId, BlockMap, MatrixEquality, SdpProblem, Sense, SolveStatus, SolverSettings,
};

/// A probe counts as feasible when its optimal `q` is at least `−FEASIBILITY_TOL`.
/// Points on the boundary of the compatible region have `q = 0` exactly, and
/// the solver returns them to within its own tolerance.
pub const FEASIBILITY_TOL: f64 = 1e-7;

/// Width to which [`robustness`] refines the bracketing grid cell.
pub const REFINE_WIDTH: f64 = 1e-5;

/// Largest mixing weight searched before giving up.
const R_LIMIT: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseClass {
    /// Any CPTP noise channel.
    Generic,
    /// Noise restricted to channels `ρ ↦ Tr(ρ)·η`.
    CompletelyDepolarizing,
}

impl fmt::Display for NoiseClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Generic => "generic",
            Self::CompletelyDepolarizing => "cd",
        })
    }
}

impl FromStr for NoiseClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "generic" => Ok(Self::Generic),
            "cd" | "completely-depolarizing" => Ok(Self::CompletelyDepolarizing),
            _ => Err(Error::Parse(format!("unknown noise class '{s}'"))),
        }
    }
}

/// How the δr grid is searched for its first feasible point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scan {
    /// Probe r = 0, δr, 2δr, … in order.
    Linear,
    /// Bisect over grid indices. Returns the same grid point as the linear
    /// scan because the feasible set is upward closed in `r`.
    Bisection,
}

impl FromStr for Scan {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Self::Linear),
            "bisection" => Ok(Self::Bisection),
            _ => Err(Error::Parse(format!("unknown scan '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    Grid,
    GridPlusBisection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub dr: f64,
    pub refine: bool,
    pub scan: Scan,
    /// Stop each probe once the sign of `q` is settled instead of solving to
    /// full accuracy. The reported `q` values are then only bounds-consistent.
    pub decide_early: bool,
    pub solver: SolverSettings,
}

impl SearchOptions {
    fn probe_settings(&self) -> SolverSettings {
        SolverSettings {
            decide_threshold: self.decide_early.then_some(-FEASIBILITY_TOL),
            ..self.solver.clone()
        }
    }
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            dr: 0.005,
            refine: false,
            scan: Scan::Bisection,
            decide_early: true,
            solver: SolverSettings::default(),
        }
    }
}

/// One feasibility evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub r: f64,
    pub q: f64,
    /// The solver hit its iteration cap even after a retry; `q` is the last
    /// iterate's value and its sign may be wrong.
    pub indeterminate: bool,
}

impl Probe {
    pub fn feasible(&self) -> bool {
        self.q >= -FEASIBILITY_TOL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessResult {
    pub r_star: f64,
    pub q_at_r_star: f64,
    pub search_trace: Vec<Probe>,
    pub method: SearchMethod,
    /// Some probe that decided the result was indeterminate.
    pub indeterminate: bool,
}

fn check_pair(ch1: &Channel, ch2: &Channel) -> Result<()> {
    if ch1.din() != ch2.din() {
        return Err(Error::Dimension(format!(
            "channels act on different inputs ({} vs {})",
            ch1.din(),
            ch2.din()
        )));
    }
    Ok(())
}

/// Noise variable of one marginal and the map that turns it into a Choi matrix.
fn add_noise(p: &mut SdpProblem, din: usize, dout: usize, noise: NoiseClass) -> (BlockId, BlockMap) {
    match noise {
        NoiseClass::Generic => {
            let b = p.add_block(din * dout);
            p.add_matrix_equality(MatrixEquality::new(ComplexMatrix::identity(din)).block(
                b,
                1.0,
                BlockMap::PartialTrace { dims: vec![din, dout], keep: vec![0] },
            ));
            (b, BlockMap::Identity)
        }
        NoiseClass::CompletelyDepolarizing => {
            let b = p.add_block(dout);
            p.add_trace_equality(b, 1.0);
            (b, BlockMap::IdentityKron { left: din, right: 1 })
        }
    }
}

/// The feasibility program at mixing weight `r`, in the form
/// `max q  s.t.  C = Z + q𝟙, Z ⪰ 0, (1+r)·Tr_{out₂} C − r·C̄₁ = C₁,
/// (1+r)·Tr_{out₁} C − r·C̄₂ = C₂`, with `C` on `in ⊗ out₁ ⊗ out₂`.
pub fn channel_feasibility_problem(
    ch1: &Channel,
    ch2: &Channel,
    r: f64,
    noise: NoiseClass,
) -> Result<SdpProblem> {
    check_pair(ch1, ch2)?;
    if !(r >= 0.0 && r.is_finite()) {
        return domain_err(format!("mixing weight must be finite and non-negative, got {r}"));
    }
    let (din, d1, d2) = (ch1.din(), ch1.dout(), ch2.dout());
    let mut p = SdpProblem::new();
    let z = p.add_block(din * d1 * d2);
    let q = p.add_scalar();
    let (n1, map1) = add_noise(&mut p, din, d1, noise);
    let (n2, map2) = add_noise(&mut p, din, d2, noise);
    let dims = vec![din, d1, d2];
    for (keep, ch, other_dim, noise_block, noise_map) in [
        (vec![0, 1], ch1, d2, n1, map1),
        (vec![0, 2], ch2, d1, n2, map2),
    ] {
        let marg_dim = din * ch.dout();
        let eq = MatrixEquality::new(ch.choi().clone())
            .block(z, 1.0 + r, BlockMap::PartialTrace { dims: dims.clone(), keep })
            .scalar(q, ComplexMatrix::identity(marg_dim).scale((1.0 + r) * other_dim as f64))
            .block(noise_block, -r, noise_map);
        p.add_matrix_equality(eq);
    }
    p.optimize_scalar(Sense::Maximize, q);
    Ok(p)
}

/// Solves a max-`q` program, retrying once with four times the iteration
/// budget if the first attempt does not converge. Returns `q` and whether it
/// is indeterminate.
fn solve_q(p: &SdpProblem, settings: &SolverSettings) -> Result<(f64, bool)> {
    let decided = |sol: &sdp::SdpSolution| -> Option<f64> {
        match sol.status {
            SolveStatus::Optimal => Some(sol.objective_value),
            SolveStatus::ThresholdDecided => {
                let (lo, hi) = sol.bounds;
                Some(sol.objective_value.max(lo).min(hi))
            }
            SolveStatus::Infeasible | SolveStatus::MaxIterations => None,
        }
    };
    let sol = sdp::solve_with(p, settings)?;
    if let Some(q) = decided(&sol) {
        return Ok((q, false));
    }
    let retry = SolverSettings {
        max_iters: settings.max_iters.saturating_mul(4),
        ..settings.clone()
    };
    let sol = sdp::solve_with(p, &retry)?;
    Ok(match decided(&sol) {
        Some(q) => (q, false),
        // The max-q program always has feasible points, so an infeasibility
        // verdict is a solver failure as well.
        None if sol.status == SolveStatus::Infeasible => (f64::NEG_INFINITY, true),
        None => (sol.objective_value, true),
    })
}

pub fn channel_probe(
    ch1: &Channel,
    ch2: &Channel,
    r: f64,
    noise: NoiseClass,
    settings: &SolverSettings,
) -> Result<Probe> {
    let p = channel_feasibility_problem(ch1, ch2, r, noise)?;
    let (q, indeterminate) = solve_q(&p, settings)?;
    Ok(Probe { r, q, indeterminate })
}

/// Optimal `q` of the feasibility program; `q ≥ 0` iff the noisy pair is
/// compatible at weight `r`.
pub fn feasibility_q(ch1: &Channel, ch2: &Channel, r: f64, noise: NoiseClass) -> Result<f64> {
    Ok(channel_probe(ch1, ch2, r, noise, &SolverSettings::default())?.q)
}

/// Smallest grid point `r = i·δr` (and, with `refine`, the bisected
/// threshold inside the preceding grid cell) at which `probe` is feasible.
pub fn search(
    mut probe: impl FnMut(f64) -> Result<Probe>,
    opts: &SearchOptions,
) -> Result<RobustnessResult> {
    if !(opts.dr > 0.0 && opts.dr.is_finite()) {
        return domain_err(format!("dr must be positive, got {}", opts.dr));
    }
    let dr = opts.dr;
    let max_index = (R_LIMIT / dr).ceil() as usize;
    let mut trace = Vec::new();
    let mut at = |i: usize, trace: &mut Vec<Probe>| -> Result<Probe> {
        let pr = probe(i as f64 * dr)?;
        trace.push(pr);
        Ok(pr)
    };

    let (hit, hit_probe) = match opts.scan {
        Scan::Linear => {
            let mut found = None;
            for i in 0..=max_index {
                let pr = at(i, &mut trace)?;
                if pr.feasible() {
                    found = Some((i, pr));
                    break;
                }
            }
            found.ok_or_else(|| Error::Domain(format!("no feasible r up to {R_LIMIT}")))?
        }
        Scan::Bisection => {
            let first = at(0, &mut trace)?;
            if first.feasible() {
                (0, first)
            } else {
                let mut hi = ((1.0 / dr).round() as usize).max(1);
                let mut hi_probe = at(hi, &mut trace)?;
                let mut lo = 0;
                while !hi_probe.feasible() {
                    lo = hi;
                    if hi >= max_index {
                        return domain_err(format!("no feasible r up to {R_LIMIT}"));
                    }
                    hi = (hi * 2).min(max_index);
                    hi_probe = at(hi, &mut trace)?;
                }
                while hi - lo > 1 {
                    let mid = lo + (hi - lo) / 2;
                    let pr = at(mid, &mut trace)?;
                    if pr.feasible() {
                        hi = mid;
                        hi_probe = pr;
                    } else {
                        lo = mid;
                    }
                }
                (hi, hi_probe)
            }
        }
    };

    let mut r_star = hit as f64 * dr;
    let mut q_star = hit_probe.q;
    let mut indeterminate = hit_probe.indeterminate;
    if hit > 0 {
        // The probe just below the hit decided the bracket as well.
        indeterminate |= trace
            .iter()
            .any(|p| p.indeterminate && (p.r - (hit - 1) as f64 * dr).abs() < 0.5 * dr);
    }
    let method = if opts.refine && hit > 0 {
        let mut lo = (hit - 1) as f64 * dr;
        let mut hi = r_star;
        while hi - lo > REFINE_WIDTH {
            let mid = 0.5 * (lo + hi);
            let pr = probe(mid)?;
            trace.push(pr);
            if pr.feasible() {
                hi = mid;
                q_star = pr.q;
                indeterminate = pr.indeterminate;
            } else {
                lo = mid;
            }
        }
        r_star = hi;
        SearchMethod::GridPlusBisection
    } else {
        SearchMethod::Grid
    };
    Ok(RobustnessResult {
        r_star,
        q_at_r_star: q_star,
        search_trace: trace,
        method,
        indeterminate,
    })
}

/// Incompatibility robustness of a channel pair against the given noise class.
pub fn robustness(
    ch1: &Channel,
    ch2: &Channel,
    noise: NoiseClass,
    opts: &SearchOptions,
) -> Result<RobustnessResult> {
    check_pair(ch1, ch2)?;
    let settings = opts.probe_settings();
    search(|r| channel_probe(ch1, ch2, r, noise, &settings), opts)
}

/// Robustness under `(generic, completely depolarizing)` noise.
pub fn robustness_both(
    ch1: &Channel,
    ch2: &Channel,
    opts: &SearchOptions,
) -> Result<(RobustnessResult, RobustnessResult)> {
    Ok((
        robustness(ch1, ch2, NoiseClass::Generic, opts)?,
        robustness(ch1, ch2, NoiseClass::CompletelyDepolarizing, opts)?,
    ))
}

/// The joint-measurement program at weight `r` for POVMs `{M₁(i)}`, `{M₂(j)}`:
/// `max q  s.t.  G(i,j) = Z(i,j) + q𝟙, Z(i,j) ⪰ 0,
/// (1+r)·Σⱼ G(i,j) − r·N₁(i) = M₁(i), (1+r)·Σᵢ G(i,j) − r·N₂(j) = M₂(j)`,
/// with `N₁`, `N₂` arbitrary POVMs with the same outcome counts.
pub fn measurement_feasibility_problem(m1: &Povm, m2: &Povm, r: f64) -> Result<SdpProblem> {
    if m1.dim() != m2.dim() {
        return Err(Error::Dimension(format!(
            "POVMs act on different dimensions ({} vs {})",
            m1.dim(),
            m2.dim()
        )));
    }
    if !(r >= 0.0 && r.is_finite()) {
        return domain_err(format!("mixing weight must be finite and non-negative, got {r}"));
    }
    let d = m1.dim();
    let (a, b) = (m1.outcomes(), m2.outcomes());
    let mut p = SdpProblem::new();
    let g: Vec<Vec<BlockId>> = (0..a).map(|_| (0..b).map(|_| p.add_block(d)).collect()).collect();
    let q = p.add_scalar();
    let noise = |p: &mut SdpProblem, k: usize| -> Vec<BlockId> {
        let blocks: Vec<BlockId> = (0..k).map(|_| p.add_block(d)).collect();
        let mut eq = MatrixEquality::new(ComplexMatrix::identity(d));
        for &nb in &blocks {
            eq = eq.block(nb, 1.0, BlockMap::Identity);
        }
        p.add_matrix_equality(eq);
        blocks
    };
    let n1 = noise(&mut p, a);
    let n2 = noise(&mut p, b);
    let id = ComplexMatrix::identity(d);
    for i in 0..a {
        let mut eq = MatrixEquality::new(m1.effects()[i].clone())
            .scalar(q, id.scale((1.0 + r) * b as f64))
            .block(n1[i], -r, BlockMap::Identity);
        for j in 0..b {
            eq = eq.block(g[i][j], 1.0 + r, BlockMap::Identity);
        }
        p.add_matrix_equality(eq);
    }
    for j in 0..b {
        let mut eq = MatrixEquality::new(m2.effects()[j].clone())
            .scalar(q, id.scale((1.0 + r) * a as f64))
            .block(n2[j], -r, BlockMap::Identity);
        for gi in &g {
            eq = eq.block(gi[j], 1.0 + r, BlockMap::Identity);
        }
        p.add_matrix_equality(eq);
    }
    p.optimize_scalar(Sense::Maximize, q);
    Ok(p)
}

pub fn measurement_probe(m1: &Povm, m2: &Povm, r: f64, settings: &SolverSettings) -> Result<Probe> {
    let p = measurement_feasibility_problem(m1, m2, r)?;
    let (q, indeterminate) = solve_q(&p, settings)?;
    Ok(Probe { r, q, indeterminate })
}

/// Incompatibility robustness of a pair of POVMs against arbitrary POVM noise.
pub fn measurement_robustness(m1: &Povm, m2: &Povm, opts: &SearchOptions) -> Result<RobustnessResult> {
    measurement_feasibility_problem(m1, m2, 0.0)?;
    let settings = opts.probe_settings();
    search(|r| measurement_probe(m1, m2, r, &settings), opts)
}

/// Which noise classes a sweep evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSelection {
    Generic,
    Cd,
    Both,
}

impl FromStr for NoiseSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "generic" => Ok(Self::Generic),
            "cd" => Ok(Self::Cd),
            "both" => Ok(Self::Both),
            _ => Err(Error::Parse(format!("unknown noise selection '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub t: f64,
    pub r_generic: Option<f64>,
    pub r_cd: Option<f64>,
    /// Trace distance between `Λ²_t(|0⟩⟨0|)` and `Λ²_t(|1⟩⟨1|)`.
    pub trace_distance: f64,
    pub indeterminate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub search: SearchOptions,
    pub noise: NoiseSelection,
    /// Number of worker threads; 1 evaluates points sequentially.
    pub workers: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            search: SearchOptions::default(),
            noise: NoiseSelection::Both,
            workers: 1,
        }
    }
}

/// `t_min + i·t_step` for `i = 0..=⌊(t_max − t_min)/t_step⌋`.
pub fn time_grid(t_min: f64, t_max: f64, t_step: f64) -> Result<Vec<f64>> {
    if !(t_step > 0.0 && t_step.is_finite()) {
        return domain_err(format!("t_step must be positive, got {t_step}"));
    }
    if !(t_min >= 0.0 && t_min <= t_max && t_max.is_finite()) {
        return domain_err(format!("need 0 ≤ t_min ≤ t_max, got [{t_min}, {t_max}]"));
    }
    // Guard against (0.3 − 0.0)/0.1 = 2.9999999999999996.
    let n = ((t_max - t_min) / t_step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| t_min + i as f64 * t_step).collect())
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return domain_err("empty time grid");
    }
    if t_grid[0] < 0.0 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return domain_err("time grid must be non-negative and strictly increasing");
    }
    Ok(())
}

fn sweep_point(
    map1: &DynamicalMap,
    map2: &DynamicalMap,
    t: f64,
    opts: &SweepOptions,
) -> Result<SweepRecord> {
    let ch1 = map1.evaluate(t)?;
    let ch2 = map2.evaluate(t)?;
    let (generic, cd) = match opts.noise {
        NoiseSelection::Both => {
            let (g, c) = robustness_both(&ch1, &ch2, &opts.search)?;
            (Some(g), Some(c))
        }
        NoiseSelection::Generic => (Some(robustness(&ch1, &ch2, NoiseClass::Generic, &opts.search)?), None),
        NoiseSelection::Cd => (
            None,
            Some(robustness(&ch1, &ch2, NoiseClass::CompletelyDepolarizing, &opts.search)?),
        ),
    };
    let d = ch2.din();
    let rho0 = ComplexMatrix::basis_projector(d, 0);
    let rho1 = ComplexMatrix::basis_projector(d, 1);
    let td = trace_distance(&ch2.apply(&rho0)?, &ch2.apply(&rho1)?)?;
    Ok(SweepRecord {
        t,
        r_generic: generic.as_ref().map(|g| g.r_star),
        r_cd: cd.as_ref().map(|c| c.r_star),
        trace_distance: td,
        indeterminate: generic.is_some_and(|g| g.indeterminate) || cd.is_some_and(|c| c.indeterminate),
    })
}

/// Robustness of `(map1(t), map2(t))` at every grid time. Records come back
/// in grid order regardless of the worker count.
pub fn sweep(
    map1: &DynamicalMap,
    map2: &DynamicalMap,
    t_grid: &[f64],
    opts: &SweepOptions,
) -> Result<Vec<SweepRecord>> {
    check_grid(t_grid)?;
    if map1.input_dim() != map2.input_dim() {
        return Err(Error::Dimension("dynamical maps act on different inputs".into()));
    }
    if opts.workers <= 1 {
        return t_grid.iter().map(|&t| sweep_point(map1, map2, t, opts)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| Error::Domain(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        t_grid
            .par_iter()
            .map(|&t| sweep_point(map1, map2, t, opts))
            .collect()
    })
}

/// The maximum over the grid of the per-time robustness, i.e. the robustness
/// of the pair of dynamical maps up to grid resolution.
pub fn dynamical_map_robustness(
    map1: &DynamicalMap,
    map2: &DynamicalMap,
    t_grid: &[f64],
    noise: NoiseClass,
    opts: &SweepOptions,
) -> Result<f64> {
    let opts = SweepOptions {
        noise: match noise {
            NoiseClass::Generic => NoiseSelection::Generic,
            NoiseClass::CompletelyDepolarizing => NoiseSelection::Cd,
        },
        ..opts.clone()
    };
    let records = sweep(map1, map2, t_grid, &opts)?;
    Ok(records
        .iter()
        .filter_map(|r| r.r_generic.or(r.r_cd))
        .fold(0.0, f64::max))
}
