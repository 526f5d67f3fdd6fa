//! Operator-splitting solver for the compiled conic program
//! `min cᵀz  s.t.  A z = b,  z ∈ K`.
//!
//! Iterates `x = Π_aff(z − u − c/ρ)`, `z = Π_K(αx + (1−α)z + u)`, `u += αx +
//! (1−α)z − z`. The affine projection uses an orthonormal basis of the row
//! space, so it does not depend on `ρ` and the step size can adapt freely.

use serde::{Deserialize, Serialize};

use super::compile::{dot, CompiledProblem};
use super::problem::coords_to_herm;
use crate::linalg::{jacobi::identity, symmetric_eigen_warm, ComplexMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub max_iters: usize,
    pub eps_abs: f64,
    pub eps_rel: f64,
    /// Over-relaxation factor.
    pub alpha: f64,
    pub rho: f64,
    pub adaptive_rho: bool,
    /// Soft guard on `Σ 2·d_b + #scalars`.
    pub max_real_dim: usize,
    /// Consecutive stagnant iterations with a large primal residual that
    /// trigger an infeasibility verdict.
    pub stall_iters: usize,
    pub infeasible_residual: f64,
    /// Termination is tested every this many iterations.
    pub check_every: usize,
    /// If set, stop as soon as the optimal value is known to lie strictly on
    /// one side of this threshold (in the problem's own sense).
    pub decide_threshold: Option<f64>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iters: 100_000,
            eps_abs: 1e-8,
            eps_rel: 1e-8,
            alpha: 1.5,
            rho: 1.0,
            adaptive_rho: true,
            max_real_dim: 64,
            stall_iters: 5_000,
            infeasible_residual: 1e-4,
            check_every: 10,
            decide_threshold: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    /// Stopped early because the optimum is certified to lie on one side of
    /// [`SolverSettings::decide_threshold`]; see [`SdpSolution::bounds`].
    ThresholdDecided,
    Infeasible,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SolveStatus,
    /// Objective in the problem's own sense.
    pub objective_value: f64,
    pub block_values: Vec<ComplexMatrix>,
    pub scalar_values: Vec<f64>,
    /// Largest absolute violation of any compiled equality.
    pub primal_residual: f64,
    /// Norm of the dual stationarity defect.
    pub dual_residual: f64,
    /// `|primal objective − dual objective|`.
    pub gap: f64,
    /// Interval containing the optimal value, estimated from the last dual
    /// iterate (lower end for minimization) and the primal iterate corrected
    /// to first order for its constraint violation.
    pub bounds: (f64, f64),
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Progress {
    dual_residual: f64,
    gap: f64,
    /// Bounds on the minimization-form optimum.
    lower: f64,
    upper: f64,
}

impl Progress {
    const UNKNOWN: Self = Self {
        dual_residual: f64::INFINITY,
        gap: f64::INFINITY,
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
    };
}

/// Orthonormal basis `Q` of the (normalized) row space and the matching
/// right-hand side `b̃`, so that `A z = b ⇔ Q z = b̃`.
struct RowSpace {
    q: Vec<Vec<f64>>,
    b: Vec<f64>,
}

const DEPENDENT_ROW_TOL: f64 = 1e-10;
const INCONSISTENT_TOL: f64 = 1e-8;

impl RowSpace {
    /// `None` if the equalities are inconsistent.
    fn new(rows: &[Vec<f64>], rhs: &[f64]) -> Option<Self> {
        let mut q: Vec<Vec<f64>> = Vec::new();
        let mut bt: Vec<f64> = Vec::new();
        for (row, &b) in rows.iter().zip(rhs) {
            let norm = dot(row, row).sqrt();
            if norm == 0.0 {
                if b.abs() > INCONSISTENT_TOL {
                    return None;
                }
                continue;
            }
            let mut v: Vec<f64> = row.iter().map(|x| x / norm).collect();
            let mut beta = b / norm;
            // Two passes of modified Gram–Schmidt keep the basis orthonormal
            // to working precision.
            for _ in 0..2 {
                for (qk, bk) in q.iter().zip(&bt) {
                    let c = dot(qk, &v);
                    for (vi, qi) in v.iter_mut().zip(qk) {
                        *vi -= c * qi;
                    }
                    beta -= c * bk;
                }
            }
            let rn = dot(&v, &v).sqrt();
            if rn < DEPENDENT_ROW_TOL {
                if beta.abs() > INCONSISTENT_TOL {
                    return None;
                }
                continue;
            }
            for vi in &mut v {
                *vi /= rn;
            }
            q.push(v);
            bt.push(beta / rn);
        }
        Some(Self { q, b: bt })
    }

    /// `Q w`.
    fn apply(&self, w: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.q.iter().map(|qk| dot(qk, w)));
    }

    /// In-place `w ← w − Qᵀ(Q w − b̃)`.
    fn project(&self, w: &mut [f64]) {
        for (qk, bk) in self.q.iter().zip(&self.b) {
            let c = dot(qk, w) - bk;
            for (wi, qi) in w.iter_mut().zip(qk) {
                *wi -= c * qi;
            }
        }
    }

    /// In-place `w ← w − QᵀQ w`.
    fn project_nullspace(&self, w: &mut [f64]) {
        for qk in &self.q {
            let c = dot(qk, w);
            for (wi, qi) in w.iter_mut().zip(qk) {
                *wi -= c * qi;
            }
        }
    }
}

/// Projection onto one Hermitian PSD block through its real symmetric
/// embedding, warm-started from the previous eigenbasis.
struct PsdProjector {
    d: usize,
    basis: Vec<f64>,
    embed: Vec<f64>,
}

impl PsdProjector {
    fn new(d: usize) -> Self {
        Self {
            d,
            basis: identity(2 * d),
            embed: vec![0.0; 4 * d * d],
        }
    }

    fn project(&mut self, c: &mut [f64]) {
        let d = self.d;
        let m = 2 * d;
        if d == 1 {
            c[0] = c[0].max(0.0);
            return;
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let e = &mut self.embed;
        for i in 0..d {
            e[i * m + i] = c[i];
            e[(i + d) * m + (i + d)] = c[i];
        }
        let mut k = d;
        for i in 0..d {
            for j in (i + 1)..d {
                let re = c[k] * s;
                let im = c[k + 1] * s;
                k += 2;
                e[i * m + j] = re;
                e[j * m + i] = re;
                e[(i + d) * m + (j + d)] = re;
                e[(j + d) * m + (i + d)] = re;
                e[i * m + (j + d)] = -im;
                e[(j + d) * m + i] = -im;
                e[(i + d) * m + j] = im;
                e[j * m + (i + d)] = im;
            }
        }
        let eig = symmetric_eigen_warm(e, m, &self.basis);
        let positive: Vec<usize> = (0..m).filter(|&k| eig.values[k] > 0.0).collect();
        let v = &eig.vectors;
        let entry = |a: usize, b: usize| -> f64 {
            positive
                .iter()
                .map(|&k| eig.values[k] * v[a * m + k] * v[b * m + k])
                .sum()
        };
        // Recover H₊ = R + iI from the projected embedding [[R, −I], [I, R]],
        // averaging the duplicated entries.
        for i in 0..d {
            c[i] = 0.5 * (entry(i, i) + entry(i + d, i + d));
        }
        let mut k = d;
        let r2 = std::f64::consts::SQRT_2;
        for i in 0..d {
            for j in (i + 1)..d {
                let re = 0.5 * (entry(i, j) + entry(i + d, j + d));
                let im = 0.5 * (entry(i + d, j) - entry(i, j + d));
                c[k] = r2 * re;
                c[k + 1] = r2 * im;
                k += 2;
            }
        }
        self.basis = eig.vectors;
    }
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

const RHO_MIN: f64 = 1e-6;
const RHO_MAX: f64 = 1e6;
const RHO_ADAPT_EVERY: usize = 50;
const STALL_STEP_TOL: f64 = 1e-9;

/// Runs the solver on an already compiled problem.
pub fn solve_compiled(p: &CompiledProblem, s: &SolverSettings) -> SdpSolution {
    let n = p.num_vars;
    let Some(space) = RowSpace::new(&p.rows, &p.rhs) else {
        return finish(p, SolveStatus::Infeasible, &vec![0.0; n], Progress::UNKNOWN, 0);
    };
    let mut projectors: Vec<PsdProjector> = p.blocks.iter().map(|b| PsdProjector::new(b.dim)).collect();
    let c = &p.cost;
    let c_norm = norm(c);
    let b_norm = space.b.iter().fold(0.0f64, |m, x| m.max(x.abs()));

    let mut rho = s.rho;
    let mut x = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut z_prev = vec![0.0; n];
    let mut xhat = vec![0.0; n];
    let mut work = vec![0.0; n];
    let mut lam = Vec::new();
    let mut stalled = 0usize;
    let mut progress = Progress::UNKNOWN;
    // Minimization-form threshold.
    let threshold = s.decide_threshold.map(|t| match p.sense {
        super::problem::Sense::Minimize => t,
        super::problem::Sense::Maximize => -t,
    });

    for it in 1..=s.max_iters {
        for i in 0..n {
            x[i] = z[i] - u[i] - c[i] / rho;
        }
        space.project(&mut x);
        z_prev.copy_from_slice(&z);
        for i in 0..n {
            xhat[i] = s.alpha * x[i] + (1.0 - s.alpha) * z[i];
            z[i] = xhat[i] + u[i];
        }
        for (proj, lay) in projectors.iter_mut().zip(&p.blocks) {
            proj.project(&mut z[lay.offset..lay.offset + lay.dim * lay.dim]);
        }
        for i in 0..n {
            u[i] += xhat[i] - z[i];
        }

        let mut step = 0.0;
        let mut prim = 0.0;
        for i in 0..n {
            step += (z[i] - z_prev[i]).powi(2);
            prim += (x[i] - z[i]).powi(2);
        }
        let step = step.sqrt();
        let prim = prim.sqrt();
        let z_norm = norm(&z);
        if step <= STALL_STEP_TOL * z_norm.max(1.0) && prim > s.infeasible_residual {
            stalled += 1;
            if stalled >= s.stall_iters {
                return finish(p, SolveStatus::Infeasible, &z, progress, it);
            }
        } else {
            stalled = 0;
        }

        if it % s.check_every != 0 {
            continue;
        }

        // Dual estimate: s = −ρu ∈ K*, λ = Q(c − s).
        for i in 0..n {
            work[i] = c[i] + rho * u[i];
        }
        space.apply(&work, &mut lam);
        let dual_obj = dot(&space.b, &lam);
        let y_norm = rho * norm(&u);
        space.project_nullspace(&mut work);
        let dual_res = norm(&work);
        let primal_obj = dot(c, &z);
        let gap = (primal_obj - dual_obj).abs();
        // cᵀz ≥ λᵀb̃ − ‖r_d‖·‖z‖ for every feasible z; the feasible iterates
        // are taken to lie within twice the current norm.
        let lower = dual_obj - dual_res * 2.0 * z_norm.max(1.0);
        let mut affine_defect = 0.0;
        for (qk, bk) in space.q.iter().zip(&space.b) {
            affine_defect += (dot(qk, &z) - bk).powi(2);
        }
        let upper = primal_obj + norm(&lam) * affine_defect.sqrt();
        progress = Progress {
            dual_residual: dual_res,
            gap,
            lower,
            upper,
        };

        let viol = p.max_violation(&z);
        let tol_p = s.eps_abs + s.eps_rel * b_norm.max(1.0);
        let tol_d = s.eps_abs + s.eps_rel * c_norm.max(y_norm).max(1.0);
        let tol_g = s.eps_abs + s.eps_rel * primal_obj.abs().max(dual_obj.abs()).max(1.0);
        if viol <= tol_p && prim <= tol_p && dual_res <= tol_d && gap <= tol_g {
            return finish(p, SolveStatus::Optimal, &z, progress, it);
        }
        if let Some(t) = threshold {
            if lower > t || upper < t {
                return finish(p, SolveStatus::ThresholdDecided, &z, progress, it);
            }
        }

        if s.adaptive_rho && it % RHO_ADAPT_EVERY == 0 {
            let x_scale = norm(&x).max(z_norm).max(1e-12);
            let d_scale = c_norm.max(y_norm).max(1e-12);
            let ratio = ((prim / x_scale) / (dual_res / d_scale).max(1e-300)).sqrt();
            if !(0.2..=5.0).contains(&ratio) {
                let new_rho = (rho * ratio).clamp(RHO_MIN, RHO_MAX);
                let f = rho / new_rho;
                for ui in &mut u {
                    *ui *= f;
                }
                rho = new_rho;
            }
        }
    }
    finish(p, SolveStatus::MaxIterations, &z, progress, s.max_iters)
}

fn finish(
    p: &CompiledProblem,
    status: SolveStatus,
    z: &[f64],
    progress: Progress,
    iterations: usize,
) -> SdpSolution {
    let block_values = p
        .blocks
        .iter()
        .map(|lay| coords_to_herm(&z[lay.offset..lay.offset + lay.dim * lay.dim], lay.dim))
        .collect();
    let scalar_values = z[p.scalar_offset..p.scalar_offset + p.num_scalars].to_vec();
    let min_obj = dot(&p.cost, z);
    let (objective_value, bounds) = match p.sense {
        super::problem::Sense::Minimize => (min_obj, (progress.lower, progress.upper)),
        super::problem::Sense::Maximize => (-min_obj, (-progress.upper, -progress.lower)),
    };
    SdpSolution {
        status,
        objective_value,
        block_values,
        scalar_values,
        primal_residual: p.max_violation(z),
        dual_residual: progress.dual_residual,
        gap: progress.gap,
        bounds,
        iterations,
    }
}
