//! Witnesses of non-Markovian dynamics: trace-distance curves, teleportation
//! fidelity of the evolved singlet, and the robustness-based
//! CP-indivisibility measure.

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, domain_err, Result};
use crate::linalg::{kron, trace_distance, trace_norm, ComplexMatrix, C64};
use crate::qchannel::DynamicalMap;
use crate::robustness::{self, NoiseClass, NoiseSelection, SearchOptions, SweepOptions};

/// Forward differences at or below this are treated as flat.
pub const DEAD_BAND: f64 = 2e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    pub value: f64,
}

/// `t ↦ D(Λ_t(ρ₁), Λ_t(ρ₂))`.
pub fn blp_curve(
    map: &DynamicalMap,
    rho1: &ComplexMatrix,
    rho2: &ComplexMatrix,
    t_grid: &[f64],
) -> Result<Vec<CurvePoint>> {
    let d = map.input_dim();
    if rho1.rows() != d || rho2.rows() != d {
        return dim_err(format!("states must be {d}x{d} to match the map"));
    }
    t_grid
        .iter()
        .map(|&t| {
            let ch = map.evaluate(t)?;
            Ok(CurvePoint {
                t,
                value: trace_distance(&ch.apply(rho1)?, &ch.apply(rho2)?)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Teleportation {
    /// Trace norm of the correlation matrix `S_ij = Tr[ρ'(σᵢ ⊗ σⱼ)]`.
    pub n_value: f64,
    /// Best achievable teleportation fidelity with the state as a resource.
    pub f_max: f64,
}

/// `|Ψ⁻⟩⟨Ψ⁻|` with `|Ψ⁻⟩ = (|01⟩ − |10⟩)/√2`.
pub fn singlet() -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::outer(&[
        C64::new(0.0, 0.0),
        C64::new(s, 0.0),
        C64::new(-s, 0.0),
        C64::new(0.0, 0.0),
    ])
}

/// Teleportation figures of merit of `(𝟙 ⊗ Λ_t)(|Ψ⁻⟩⟨Ψ⁻|)`.
pub fn teleport_fidelity(map: &DynamicalMap, t: f64) -> Result<Teleportation> {
    let ch = map.evaluate(t)?;
    if ch.din() != 2 || ch.dout() != 2 {
        return domain_err("teleportation fidelity needs a qubit map");
    }
    let rho = ch.apply_to_second(&singlet(), 2)?;
    let paulis = [
        ComplexMatrix::pauli_x(),
        ComplexMatrix::pauli_y(),
        ComplexMatrix::pauli_z(),
    ];
    let mut s = ComplexMatrix::zeros(3, 3);
    for (i, a) in paulis.iter().enumerate() {
        for (j, b) in paulis.iter().enumerate() {
            let v = (&rho * &kron(a, b)).trace().re;
            s[(i, j)] = C64::new(v, 0.0);
        }
    }
    let n_value = trace_norm(&s)?;
    let f_max = if n_value > 1.0 {
        0.5 * (1.0 + n_value / 3.0)
    } else {
        2.0 / 3.0
    };
    Ok(Teleportation { n_value, f_max })
}

/// Maximal runs of grid steps whose forward difference exceeds `dead_band`,
/// as `(t_start, t_end)` pairs of grid times.
pub fn rising_segments(curve: &[CurvePoint], dead_band: f64) -> Vec<(f64, f64)> {
    rising_index_runs(curve, dead_band)
        .into_iter()
        .map(|(a, b)| (curve[a].t, curve[b].t))
        .collect()
}

/// A run opens on a step rising by more than `dead_band`, survives flat
/// steps (within the dead-band either way), closes on a falling step, and
/// ends at its last rising step. Flat steps appear inside rising stretches
/// because grid-searched robustness is quantized to multiples of δr.
fn rising_index_runs(curve: &[CurvePoint], dead_band: f64) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    // (start index, end index of the last rising step)
    let mut open: Option<(usize, usize)> = None;
    for (i, w) in curve.windows(2).enumerate() {
        let diff = w[1].value - w[0].value;
        if diff > dead_band {
            open = Some(open.map_or((i, i + 1), |(s, _)| (s, i + 1)));
        } else if diff < -dead_band {
            if let Some(run) = open.take() {
                runs.push(run);
            }
        }
    }
    runs.extend(open);
    runs
}

/// What is integrated over the rising segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrand {
    /// The robustness itself (trapezoid rule).
    Robustness,
    /// Its time derivative, i.e. the total rise over each segment.
    Derivative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndivisibilityReport {
    pub n_raw: f64,
    pub n_normalized: f64,
    pub rising_segments: Vec<(f64, f64)>,
    pub reference_family: String,
}

/// The measure computed from an already sampled robustness curve.
pub fn measure_from_curve(
    curve: &[CurvePoint],
    dead_band: f64,
    integrand: Integrand,
    reference_family: &str,
) -> Result<IndivisibilityReport> {
    if curve.len() < 3 {
        return domain_err(format!(
            "need at least 3 grid points to detect rising segments, got {}",
            curve.len()
        ));
    }
    let runs = rising_index_runs(curve, dead_band);
    let mut n_raw = 0.0;
    for &(a, b) in &runs {
        n_raw += match integrand {
            Integrand::Robustness => curve[a..=b]
                .windows(2)
                .map(|w| 0.5 * (w[0].value + w[1].value) * (w[1].t - w[0].t))
                .sum::<f64>(),
            Integrand::Derivative => curve[b].value - curve[a].value,
        };
    }
    Ok(IndivisibilityReport {
        n_raw,
        n_normalized: n_raw / (1.0 + n_raw),
        rising_segments: runs.iter().map(|&(a, b)| (curve[a].t, curve[b].t)).collect(),
        reference_family: reference_family.to_string(),
    })
}

/// CP-indivisibility measure of `map` against a fixed reference family: the
/// robustness curve of `(reference_t, map_t)` integrated over the segments
/// where it rises.
pub fn cp_indivisibility_measure(
    map: &DynamicalMap,
    reference: &DynamicalMap,
    t_grid: &[f64],
    noise: NoiseClass,
    search: &SearchOptions,
    integrand: Integrand,
) -> Result<IndivisibilityReport> {
    if t_grid.len() < 3 {
        return domain_err(format!(
            "need at least 3 grid points to detect rising segments, got {}",
            t_grid.len()
        ));
    }
    let opts = SweepOptions {
        search: search.clone(),
        noise: match noise {
            NoiseClass::Generic => NoiseSelection::Generic,
            NoiseClass::CompletelyDepolarizing => NoiseSelection::Cd,
        },
        workers: 1,
    };
    let records = robustness::sweep(reference, map, t_grid, &opts)?;
    let curve: Vec<CurvePoint> = records
        .iter()
        .map(|r| CurvePoint {
            t: r.t,
            value: r.r_generic.or(r.r_cd).unwrap_or(0.0),
        })
        .collect();
    measure_from_curve(&curve, DEAD_BAND, integrand, &reference.describe())
}
