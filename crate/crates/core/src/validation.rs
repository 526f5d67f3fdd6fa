//! The named validation checks run by `chancompat validate` and by the
//! acceptance test target. Figure sweeps are computed once and shared
//! between checks.

use std::cell::OnceCell;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::figures::{figure_spec, run_figure, FamilyParams, FigureRow};
use crate::linalg::{hermitian_eig, min_eigenvalue, ComplexMatrix};
use crate::qchannel::{Channel, DynamicalMap};
use crate::random::{ginibre, random_channel, random_hermitian, random_projective};
use crate::robustness::{
    channel_feasibility_problem, feasibility_q, measurement_robustness, robustness, time_grid,
    NoiseClass, SearchOptions, SweepOptions,
};
use crate::sdp::{
    solve, BlockMap, MatrixEquality, Objective, ScalarEquality, SdpProblem, Sense, SolveStatus,
};
use crate::witness::{
    cp_indivisibility_measure, measure_from_curve, rising_segments, CurvePoint, Integrand,
};

/// Frozen reference values and tolerances for the checks.
pub const DEFAULT_GOLDEN: &str = include_str!("../data/golden.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Golden {
    pub zero_crossing: ZeroCrossingGolden,
    pub monotonicity_tol: f64,
    pub backflow: BackflowGolden,
    pub lemma1: Lemma1Golden,
    pub theorem3: Theorem3Golden,
    pub dominance_cap: f64,
    pub identity_self: Expected,
    pub teleportation_tol: f64,
    pub normalization_tol: f64,
    pub sdp: SdpGolden,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroCrossingGolden {
    pub window: [f64; 2],
    pub analytic_t: f64,
    pub runtime_limit_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackflowGolden {
    pub dead_band: f64,
    pub min_segments: usize,
    pub align_tol: f64,
    pub trace_distance_segments: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Golden {
    pub pairs: usize,
    pub seed: u64,
    pub offsets: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem3Golden {
    pub pairs: usize,
    pub seed: u64,
    pub times: Vec<f64>,
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Expected {
    pub expected: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpGolden {
    pub seed: u64,
    pub eigen_instances: usize,
    pub eigen_tol: f64,
    pub planted_instances: usize,
    pub planted_tol: f64,
}

impl Golden {
    pub fn parse(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::Parse(format!("golden file: {e}")))
    }
}

impl Default for Golden {
    fn default() -> Self {
        Self::parse(DEFAULT_GOLDEN).expect("embedded golden data parses")
    }
}

/// Check names in the order they are run.
pub const CHECK_NAMES: [&str; 12] = [
    "zero_crossing",
    "monotonicity",
    "backflow_depolarizing",
    "backflow_amplitude_damping",
    "eternal",
    "lemma1",
    "theorem3",
    "dominance",
    "identity_self",
    "teleportation",
    "measure_signs",
    "sdp_suite",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Runs checks against one golden data set, caching figure sweeps.
pub struct Validator {
    golden: Golden,
    params: FamilyParams,
    grid: Vec<f64>,
    sweep: SweepOptions,
    figures: [OnceCell<(Vec<FigureRow>, Duration)>; 7],
}

impl Validator {
    pub fn new(golden: Golden, workers: usize) -> Self {
        Self {
            golden,
            params: FamilyParams::default(),
            grid: time_grid(0.0, 1.0, 0.01).expect("valid grid"),
            sweep: SweepOptions {
                workers: workers.max(1),
                ..SweepOptions::default()
            },
            figures: Default::default(),
        }
    }

    pub fn golden(&self) -> &Golden {
        &self.golden
    }

    /// Rows of figure `id` and the wall time the sweep took.
    fn figure(&self, id: u8) -> Result<&(Vec<FigureRow>, Duration)> {
        let cell = &self.figures[usize::from(id) - 1];
        if let Some(v) = cell.get() {
            return Ok(v);
        }
        let spec = figure_spec(id, &self.params)?;
        let start = Instant::now();
        let rows = run_figure(&spec, &self.grid, &self.sweep)?;
        let _ = cell.set((rows, start.elapsed()));
        Ok(cell.get().expect("just set"))
    }

    pub fn run(&self, name: &str) -> Result<CheckOutcome> {
        let (name, res) = match name {
            "zero_crossing" => ("zero_crossing", self.zero_crossing()),
            "monotonicity" => ("monotonicity", self.monotonicity()),
            "backflow_depolarizing" => ("backflow_depolarizing", self.backflow(4)),
            "backflow_amplitude_damping" => ("backflow_amplitude_damping", self.backflow(5)),
            "eternal" => ("eternal", self.eternal()),
            "lemma1" => ("lemma1", self.lemma1()),
            "theorem3" => ("theorem3", self.theorem3()),
            "dominance" => ("dominance", self.dominance()),
            "identity_self" => ("identity_self", self.identity_self()),
            "teleportation" => ("teleportation", self.teleportation()),
            "measure_signs" => ("measure_signs", self.measure_signs()),
            "sdp_suite" => ("sdp_suite", self.sdp_suite()),
            other => {
                return Err(Error::Parse(format!(
                    "unknown check '{other}'; known checks: {}",
                    CHECK_NAMES.join(", ")
                )))
            }
        };
        Ok(match res {
            Ok((passed, detail)) => CheckOutcome { name, passed, detail },
            Err(e) => CheckOutcome {
                name,
                passed: false,
                detail: format!("error: {e}"),
            },
        })
    }

    pub fn run_all(&self) -> Vec<CheckOutcome> {
        CHECK_NAMES
            .iter()
            .map(|n| self.run(n).expect("known check"))
            .collect()
    }

    fn zero_crossing(&self) -> Result<(bool, String)> {
        let g = &self.golden.zero_crossing;
        let (rows, elapsed) = self.figure(1)?;
        let cd = column(rows, |r| r.record.r_cd);
        let first_zero = (0..cd.len())
            .find(|&i| cd[i..].iter().all(|p| p.value == 0.0))
            .map(|i| cd[i].t);
        let secs = elapsed.as_secs_f64();
        let Some(t0) = first_zero else {
            return Ok((false, "robustness never settles at zero".into()));
        };
        let in_window = t0 >= g.window[0] - 1e-12 && t0 <= g.window[1] + 1e-12;
        let fast = secs <= g.runtime_limit_secs;
        Ok((
            in_window && fast,
            format!(
                "first permanently-zero grid point t={t0:.2} (window [{}, {}], analytic threshold {:.4}); 101-point sweep took {secs:.1}s",
                g.window[0], g.window[1], g.analytic_t
            ),
        ))
    }

    fn monotonicity(&self) -> Result<(bool, String)> {
        let tol = self.golden.monotonicity_tol;
        let (rows, _) = self.figure(1)?;
        let mut worst = f64::NEG_INFINITY;
        for col in [column(rows, |r| r.record.r_generic), column(rows, |r| r.record.r_cd)] {
            for w in col.windows(2) {
                worst = worst.max(w[1].value - w[0].value);
            }
        }
        Ok((worst <= tol, format!("largest increase {worst:.3e} (tolerance {tol:e})")))
    }

    fn backflow(&self, id: u8) -> Result<(bool, String)> {
        let g = &self.golden.backflow;
        let (rows, _) = self.figure(id)?;
        let td: Vec<CurvePoint> = rows
            .iter()
            .map(|r| CurvePoint {
                t: r.record.t,
                value: r.record.trace_distance,
            })
            .collect();
        let td_segments = rising_segments(&td, g.dead_band);
        let frozen_ok = td_segments.len() == g.trace_distance_segments.len()
            && td_segments
                .iter()
                .zip(&g.trace_distance_segments)
                .all(|(a, b)| (a.0 - b[0]).abs() < 1e-9 && (a.1 - b[1]).abs() < 1e-9);
        let mut passed = frozen_ok;
        let mut detail = vec![format!("trace-distance rising segments {}", fmt_segments(&td_segments))];
        if !frozen_ok {
            detail.push("trace-distance segments differ from the golden data".into());
        }
        if id == 4 {
            // The trace distance of this family has a closed form.
            let p = &self.params;
            let worst = rows
                .iter()
                .map(|r| {
                    let t = r.record.t;
                    let exact = (-p.lambda * t).exp() * (p.omega * t).cos().powi(2);
                    (r.record.trace_distance - exact).abs()
                })
                .fold(0.0, f64::max);
            if worst > 1e-9 {
                passed = false;
                detail.push(format!("trace distance deviates from closed form by {worst:e}"));
            }
        }
        for (label, col) in [
            ("generic", column(rows, |r| r.record.r_generic)),
            ("cd", column(rows, |r| r.record.r_cd)),
        ] {
            let segs = rising_segments(&col, g.dead_band);
            let aligned = segs.iter().all(|s| {
                td_segments
                    .iter()
                    .any(|d| (s.0 - d.0).abs() <= g.align_tol && (s.1 - d.1).abs() <= g.align_tol)
            });
            let ok = segs.len() >= g.min_segments && aligned;
            passed &= ok;
            detail.push(format!(
                "{label}: {} rising segments {}{}",
                segs.len(),
                fmt_segments(&segs),
                if aligned { "" } else { " (misaligned)" }
            ));
        }
        Ok((passed, detail.join("; ")))
    }

    fn eternal(&self) -> Result<(bool, String)> {
        let (rows, _) = self.figure(6)?;
        let db = self.golden.backflow.dead_band;
        let g = rising_segments(&column(rows, |r| r.record.r_generic), db);
        let c = rising_segments(&column(rows, |r| r.record.r_cd), db);
        Ok((
            g.is_empty() && c.is_empty(),
            format!(
                "rising segments: generic {}, cd {}",
                fmt_segments(&g),
                fmt_segments(&c)
            ),
        ))
    }

    fn lemma1(&self) -> Result<(bool, String)> {
        let g = &self.golden.lemma1;
        let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
        let opts = SearchOptions {
            refine: true,
            ..SearchOptions::default()
        };
        let mut min_q = f64::INFINITY;
        let mut failures = 0;
        for _ in 0..g.pairs {
            let a = random_channel(&mut rng, 2, 2);
            let b = random_channel(&mut rng, 2, 2);
            for noise in [NoiseClass::Generic, NoiseClass::CompletelyDepolarizing] {
                let res = robustness(&a, &b, noise, &opts)?;
                for off in &g.offsets {
                    let q = feasibility_q(&a, &b, res.r_star + off, noise)?;
                    min_q = min_q.min(q);
                    if q < 0.0 {
                        failures += 1;
                    }
                }
            }
        }
        Ok((
            failures == 0,
            format!(
                "{} pairs x 2 noise classes x {} offsets: {failures} infeasible, smallest q {min_q:.3e}",
                g.pairs,
                g.offsets.len()
            ),
        ))
    }

    fn theorem3(&self) -> Result<(bool, String)> {
        let g = &self.golden.theorem3;
        let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
        let opts = SearchOptions {
            refine: true,
            ..SearchOptions::default()
        };
        let map1 = self.params.depolarizing();
        let map2 = self.params.depolarizing_indiv();
        let pairs: Vec<_> = (0..g.pairs)
            .map(|_| (random_projective(&mut rng, 2), random_projective(&mut rng, 2)))
            .collect();
        let mut worst = f64::NEG_INFINITY;
        let mut failures = 0;
        for &t in &g.times {
            let ch1 = map1.evaluate(t)?;
            let ch2 = map2.evaluate(t)?;
            let r_channel = robustness(&ch1, &ch2, NoiseClass::Generic, &opts)?.r_star;
            for (m1, m2) in &pairs {
                let r_meas =
                    measurement_robustness(&m1.pulled_back(&ch1)?, &m2.pulled_back(&ch2)?, &opts)?
                        .r_star;
                let excess = r_meas - r_channel;
                worst = worst.max(excess);
                if excess > g.tol {
                    failures += 1;
                }
            }
        }
        Ok((
            failures == 0,
            format!(
                "{} instances: {failures} violations, largest measurement-minus-channel robustness {worst:.3e}",
                g.pairs * g.times.len()
            ),
        ))
    }

    fn dominance(&self) -> Result<(bool, String)> {
        let cap = 1.0 + self.golden.dominance_cap;
        let mut bad = Vec::new();
        let mut points = 0;
        for id in [1u8, 2, 3, 4, 5, 6, 7] {
            let (rows, _) = self.figure(id)?;
            for r in rows {
                points += 1;
                let (Some(g), Some(c)) = (r.record.r_generic, r.record.r_cd) else {
                    bad.push(format!("fig {id} t={:.2}: missing column", r.record.t));
                    continue;
                };
                if !(0.0 <= g && g <= c && c <= cap) {
                    bad.push(format!("fig {id} t={:.2}: generic {g}, cd {c}", r.record.t));
                }
            }
        }
        Ok((
            bad.is_empty(),
            if bad.is_empty() {
                format!("{points} sweep points satisfy 0 <= generic <= cd <= 1")
            } else {
                format!("{} violations: {}", bad.len(), bad.join(", "))
            },
        ))
    }

    fn identity_self(&self) -> Result<(bool, String)> {
        let e = self.golden.identity_self;
        let id = Channel::identity(2);
        let opts = SearchOptions {
            refine: true,
            ..SearchOptions::default()
        };
        let r = robustness(&id, &id, NoiseClass::CompletelyDepolarizing, &opts)?.r_star;
        Ok((
            (r - e.expected).abs() <= e.tol,
            format!("r = {r:.6} (expected {} ± {})", e.expected, e.tol),
        ))
    }

    fn teleportation(&self) -> Result<(bool, String)> {
        let tol = self.golden.teleportation_tol;
        let (rows, _) = self.figure(7)?;
        let p = &self.params;
        let mut worst = 0.0f64;
        let mut plateau_errors = 0;
        for r in rows {
            let t = r.record.t;
            let (Some(n), Some(f)) = (r.n_value, r.f_max) else {
                return Ok((false, "figure rows lack teleportation columns".into()));
            };
            let exact = 3.0 * (-p.lambda * t).exp() * (p.omega * t).cos().powi(2);
            worst = worst.max((n - exact).abs());
            let on_plateau = f == 2.0 / 3.0;
            if on_plateau != (n <= 1.0) {
                plateau_errors += 1;
            }
        }
        Ok((
            worst <= tol && plateau_errors == 0,
            format!("largest |n - 3w| = {worst:.2e}; {plateau_errors} plateau mismatches"),
        ))
    }

    fn measure_signs(&self) -> Result<(bool, String)> {
        let tol = self.golden.normalization_tol;
        let db = self.golden.backflow.dead_band;
        let search = SearchOptions::default();
        let d1 = cp_indivisibility_measure(
            &self.params.depolarizing(),
            &DynamicalMap::Identity,
            &self.grid,
            NoiseClass::Generic,
            &search,
            Integrand::Robustness,
        )?;
        let from_figure = |id: u8| -> Result<_> {
            let (rows, _) = self.figure(id)?;
            measure_from_curve(
                &column(rows, |r| r.record.r_generic),
                db,
                Integrand::Robustness,
                "identity",
            )
        };
        let d2 = from_figure(4)?;
        let ad = from_figure(5)?;
        let norm_ok = [&d1, &d2, &ad]
            .iter()
            .all(|m| (m.n_normalized - m.n_raw / (1.0 + m.n_raw)).abs() <= tol);
        Ok((
            d1.n_raw == 0.0 && d2.n_raw > 0.0 && ad.n_raw > 0.0 && norm_ok,
            format!(
                "N(D1) = {:.4e}, N(D2) = {:.4e}, N(Dad) = {:.4e}; normalized {:.4e}, {:.4e}, {:.4e}",
                d1.n_raw, d2.n_raw, ad.n_raw, d1.n_normalized, d2.n_normalized, ad.n_normalized
            ),
        ))
    }

    fn sdp_suite(&self) -> Result<(bool, String)> {
        let g = &self.golden.sdp;
        let mut rng = ChaCha8Rng::seed_from_u64(g.seed);

        let mut eig_worst = 0.0f64;
        let mut eig_fail = 0;
        for k in 0..g.eigen_instances {
            let h = random_hermitian(&mut rng, 2 + k % 4);
            let lmin = min_eigenvalue(&h)?;
            let sol = solve(&eigen_lp_problem(&h))?;
            let err = (sol.objective_value - lmin).abs();
            eig_worst = eig_worst.max(err);
            if sol.status != SolveStatus::Optimal || err > g.eigen_tol {
                eig_fail += 1;
            }
        }

        let mut planted_worst = 0.0f64;
        let mut planted_fail = 0;
        for k in 0..g.planted_instances {
            let (p, opt) = planted_problem(&mut rng, 3 + k % 2, 1 + k % 2)?;
            let sol = solve(&p)?;
            let err = (sol.objective_value - opt).abs();
            planted_worst = planted_worst.max(err);
            if sol.status != SolveStatus::Optimal || err > g.planted_tol {
                planted_fail += 1;
            }
        }

        let replay = {
            let ch = Channel::identity(2);
            let p = channel_feasibility_problem(&ch, &ch, 0.3, NoiseClass::Generic)?;
            let a = solve(&p)?;
            let b = solve(&p)?;
            a.iterations == b.iterations
                && a.objective_value.to_bits() == b.objective_value.to_bits()
                && a.block_values == b.block_values
                && a.scalar_values.iter().map(|x| x.to_bits()).eq(b.scalar_values.iter().map(|x| x.to_bits()))
        };

        Ok((
            eig_fail == 0 && planted_fail == 0 && replay,
            format!(
                "eigenvalue LP: {eig_fail}/{} failures, worst error {eig_worst:.2e}; planted: {planted_fail}/{} failures, worst error {planted_worst:.2e}; replay {}",
                g.eigen_instances,
                g.planted_instances,
                if replay { "identical" } else { "differs" }
            ),
        ))
    }
}

fn column(rows: &[FigureRow], f: impl Fn(&FigureRow) -> Option<f64>) -> Vec<CurvePoint> {
    rows.iter()
        .map(|r| CurvePoint {
            t: r.record.t,
            value: f(r).unwrap_or(f64::NAN),
        })
        .collect()
}

fn fmt_segments(segs: &[(f64, f64)]) -> String {
    let parts: Vec<String> = segs.iter().map(|(a, b)| format!("[{a:.2}, {b:.2}]")).collect();
    format!("[{}]", parts.join(", "))
}

/// `max t  s.t.  X + t𝟙 = H, X ⪰ 0`, whose optimum is the smallest
/// eigenvalue of `H`.
pub fn eigen_lp_problem(h: &ComplexMatrix) -> SdpProblem {
    let d = h.rows();
    let mut p = SdpProblem::new();
    let x = p.add_block(d);
    let t = p.add_scalar();
    p.add_matrix_equality(
        MatrixEquality::new(h.clone())
            .block(x, 1.0, BlockMap::Identity)
            .scalar(t, ComplexMatrix::identity(d)),
    );
    p.optimize_scalar(Sense::Maximize, t);
    p
}

/// A minimization problem with a known optimum: a PSD `X*` of the given rank,
/// a PSD `S*` supported on its kernel, random constraints `Tr(Aᵢ X) =
/// Tr(Aᵢ X*)` and cost `Σ λᵢ Aᵢ + S*`. Complementary slackness makes `X*`
/// optimal with value `Σ λᵢ Tr(Aᵢ X*)`.
pub fn planted_problem(rng: &mut impl Rng, d: usize, rank: usize) -> Result<(SdpProblem, f64)> {
    let g = ginibre(rng, d, d);
    let basis = hermitian_eig(&(&g + &g.adjoint()))?.vectors;
    let mut xs = ComplexMatrix::zeros(d, d);
    let mut ss = ComplexMatrix::zeros(d, d);
    for k in 0..d {
        let col: Vec<_> = (0..d).map(|i| basis[(i, k)]).collect();
        let proj = ComplexMatrix::outer(&col);
        if k < rank {
            xs += &proj.scale(1.0 + k as f64);
        } else {
            ss += &proj.scale(0.5 + k as f64);
        }
    }
    let mut p = SdpProblem::new();
    let x = p.add_block(d);
    let mut cost = ss;
    let mut opt = 0.0;
    for _ in 0..d * d - 2 {
        let a = random_hermitian(rng, d);
        let rhs = a.inner(&xs).re;
        let lam: f64 = rng.gen_range(-1.0..1.0);
        cost += &a.scale(lam);
        opt += lam * rhs;
        p.add_scalar_equality(ScalarEquality {
            block_terms: vec![(x, a)],
            scalar_terms: Vec::new(),
            rhs,
        });
    }
    p.set_objective(
        Sense::Minimize,
        Objective {
            block_terms: vec![(x, cost.hermitian_part())],
            scalar_terms: Vec::new(),
        },
    );
    Ok((p, opt))
}
