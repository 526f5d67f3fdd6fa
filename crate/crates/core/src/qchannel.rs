//! Quantum channels stored as Choi matrices, POVMs, and the closed-form
//! dynamical-map families.
//!
//! Choi convention: `C = Σᵢⱼ |i⟩⟨j| ⊗ Λ(|i⟩⟨j|)`, unnormalized (`Tr C = d_in`),
//! subsystem order input ⊗ output.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, domain_err, Error, Result};
use crate::linalg::{self, kron, partial_trace, ComplexMatrix, SubsystemShape, C64};

/// Smallest Choi eigenvalue accepted as completely positive.
pub const CP_FLOOR: f64 = -1e-9;
/// Trace-preservation tolerance on `Tr_out C − 𝟙`.
pub const TP_TOL: f64 = 1e-9;
/// Tolerance for POVM positivity and completeness.
pub const POVM_TOL: f64 = 1e-10;

/// A completely positive trace-preserving map.
#[derive(Clone, PartialEq)]
pub struct Channel {
    din: usize,
    dout: usize,
    choi: ComplexMatrix,
}

impl Channel {
    /// Wraps a Choi matrix after checking Hermiticity, CP and TP.
    pub fn from_choi(din: usize, dout: usize, choi: ComplexMatrix) -> Result<Self> {
        if din == 0 || dout == 0 {
            return dim_err("channel dimensions must be positive");
        }
        if choi.rows() != din * dout || choi.cols() != din * dout {
            return dim_err(format!(
                "Choi matrix is {}x{}, expected {}x{}",
                choi.rows(),
                choi.cols(),
                din * dout,
                din * dout
            ));
        }
        if !choi.is_hermitian_within(1e-10) {
            return domain_err("Choi matrix is not Hermitian");
        }
        let choi = choi.hermitian_part();
        let min = linalg::min_eigenvalue(&choi)?;
        if min < CP_FLOOR {
            return domain_err(format!("map is not completely positive (min Choi eigenvalue {min:.3e})"));
        }
        let ch = Self { din, dout, choi };
        let tp = ch.tp_defect();
        if tp > TP_TOL {
            return domain_err(format!("map is not trace preserving (defect {tp:.3e})"));
        }
        Ok(ch)
    }

    /// Builds the channel whose action on operators is `f`. `f` must accept
    /// arbitrary (non-Hermitian) `din × din` inputs.
    pub fn from_map(
        din: usize,
        dout: usize,
        f: impl Fn(&ComplexMatrix) -> Result<ComplexMatrix>,
    ) -> Result<Self> {
        Self::from_choi(din, dout, choi_of_map(din, dout, f)?)
    }

    /// Channel with Kraus operators `Kₖ` (each `dout × din`).
    pub fn from_kraus(kraus: &[ComplexMatrix]) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| Error::Domain("no Kraus operators".into()))?;
        let (dout, din) = (first.rows(), first.cols());
        if kraus.iter().any(|k| k.rows() != dout || k.cols() != din) {
            return dim_err("Kraus operators have inconsistent shapes");
        }
        Self::from_map(din, dout, |rho| {
            let mut out = ComplexMatrix::zeros(dout, dout);
            for k in kraus {
                out += &(&(k * rho) * &k.adjoint());
            }
            Ok(out)
        })
    }

    pub fn identity(d: usize) -> Self {
        let choi = choi_of_map(d, d, |x| Ok(x.clone())).expect("identity map");
        Self { din: d, dout: d, choi }
    }

    /// Completely depolarizing channel `ρ ↦ η Tr ρ`.
    pub fn completely_depolarizing(din: usize, eta: &ComplexMatrix) -> Result<Self> {
        Self::from_choi(din, eta.rows(), kron(&ComplexMatrix::identity(din), eta))
    }

    pub fn din(&self) -> usize {
        self.din
    }

    pub fn dout(&self) -> usize {
        self.dout
    }

    pub fn choi(&self) -> &ComplexMatrix {
        &self.choi
    }

    fn shape(&self) -> SubsystemShape {
        SubsystemShape::new([self.din, self.dout]).expect("positive dims")
    }

    /// Largest entry of `|Tr_out C − 𝟙|`.
    pub fn tp_defect(&self) -> f64 {
        let marg = partial_trace(&self.choi, &self.shape(), &[0]).expect("consistent shape");
        marg.max_abs_diff(&ComplexMatrix::identity(self.din))
    }

    /// `Λ(ρ) = Tr_in[(ρᵀ ⊗ 𝟙) C]`.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.rows() != self.din || rho.cols() != self.din {
            return dim_err(format!(
                "channel input is {0}x{0}, got {1}x{2}",
                self.din,
                rho.rows(),
                rho.cols()
            ));
        }
        let d = self.dout;
        let mut out = ComplexMatrix::zeros(d, d);
        for i in 0..self.din {
            for j in 0..self.din {
                let r = rho[(i, j)];
                if r == C64::new(0.0, 0.0) {
                    continue;
                }
                for a in 0..d {
                    for b in 0..d {
                        out[(a, b)] += r * self.choi[(i * d + a, j * d + b)];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Heisenberg-picture action: the unique `Λ*(E)` with
    /// `Tr[ρ Λ*(E)] = Tr[Λ(ρ) E]`.
    pub fn dual_apply(&self, effect: &ComplexMatrix) -> Result<ComplexMatrix> {
        if effect.rows() != self.dout || effect.cols() != self.dout {
            return dim_err(format!(
                "dual map input is {0}x{0}, got {1}x{2}",
                self.dout,
                effect.rows(),
                effect.cols()
            ));
        }
        let d = self.dout;
        Ok(ComplexMatrix::from_fn(self.din, self.din, |a, b| {
            // Λ*(E)_{ab} = Tr[C_{ba} E]
            let mut acc = C64::new(0.0, 0.0);
            for x in 0..d {
                for y in 0..d {
                    acc += self.choi[(b * d + x, a * d + y)] * effect[(y, x)];
                }
            }
            acc
        }))
    }

    /// `(𝟙_A ⊗ Λ)(ρ_AB)` where the channel acts on the trailing factor.
    pub fn apply_to_second(&self, rho: &ComplexMatrix, dim_a: usize) -> Result<ComplexMatrix> {
        let din = self.din;
        if rho.rows() != dim_a * din || rho.cols() != dim_a * din {
            return dim_err("state does not factor as A ⊗ channel input");
        }
        let dout = self.dout;
        let mut out = ComplexMatrix::zeros(dim_a * dout, dim_a * dout);
        for i in 0..dim_a {
            for j in 0..dim_a {
                let sub = ComplexMatrix::from_fn(din, din, |a, b| rho[(i * din + a, j * din + b)]);
                let img = self.apply(&sub)?;
                for a in 0..dout {
                    for b in 0..dout {
                        out[(i * dout + a, j * dout + b)] = img[(a, b)];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Convex mixture `p·self + (1−p)·other`.
    pub fn mix(&self, other: &Self, p: f64) -> Result<Self> {
        if self.din != other.din || self.dout != other.dout {
            return dim_err("mixing channels of different shape");
        }
        if !(0.0..=1.0).contains(&p) {
            return domain_err(format!("mixing weight {p} outside [0, 1]"));
        }
        Ok(Self {
            din: self.din,
            dout: self.dout,
            choi: &self.choi.scale(p) + &other.choi.scale(1.0 - p),
        })
    }

    pub fn to_json(&self) -> ChannelJson {
        ChannelJson {
            din: self.din,
            dout: self.dout,
            choi_re: self.choi.re_rows(),
            choi_im: self.choi.im_rows(),
        }
    }

    pub fn from_json(j: &ChannelJson) -> Result<Self> {
        let choi = ComplexMatrix::from_parts(&j.choi_re, &j.choi_im)?;
        Self::from_choi(j.din, j.dout, choi)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let j: ChannelJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_json(&j)
    }
}

impl fmt::Debug for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Channel {}→{} choi={:?}", self.din, self.dout, self.choi)
    }
}

/// On-disk channel format: `{din, dout, choi_re, choi_im}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ChannelJson {
    pub din: usize,
    pub dout: usize,
    pub choi_re: Vec<Vec<f64>>,
    pub choi_im: Vec<Vec<f64>>,
}

fn choi_of_map(
    din: usize,
    dout: usize,
    f: impl Fn(&ComplexMatrix) -> Result<ComplexMatrix>,
) -> Result<ComplexMatrix> {
    let mut choi = ComplexMatrix::zeros(din * dout, din * dout);
    for i in 0..din {
        for j in 0..din {
            let img = f(&ComplexMatrix::unit(din, i, j))?;
            if img.rows() != dout || img.cols() != dout {
                return dim_err("map output has the wrong dimension");
            }
            for a in 0..dout {
                for b in 0..dout {
                    choi[(i * dout + a, j * dout + b)] = img[(a, b)];
                }
            }
        }
    }
    Ok(choi)
}

/// `after ∘ before`.
pub fn compose(after: &Channel, before: &Channel) -> Result<Channel> {
    if after.din != before.dout {
        return dim_err(format!(
            "cannot compose: outer map takes dimension {}, inner map produces {}",
            after.din, before.dout
        ));
    }
    let choi = choi_of_map(before.din, after.dout, |x| after.apply(&before.apply(x)?))?;
    Ok(Channel {
        din: before.din,
        dout: after.dout,
        choi: choi.hermitian_part(),
    })
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Qubit depolarizing channel `ρ ↦ wρ + (1−w)𝟙/2`, CP for `−1/3 ≤ w ≤ 1`.
pub fn depolarizing_choi(w: f64) -> Result<Channel> {
    if !(-1.0 / 3.0 - 1e-15..=1.0 + 1e-15).contains(&w) || w.is_nan() {
        return domain_err(format!("depolarizing parameter {w} outside [-1/3, 1]"));
    }
    let a = (1.0 + w) / 2.0;
    let b = (1.0 - w) / 2.0;
    let mut c = ComplexMatrix::diag_real(&[a, b, b, a]);
    c[(0, 3)] = real(w);
    c[(3, 0)] = real(w);
    Ok(Channel { din: 2, dout: 2, choi: c })
}

/// Qubit amplitude damping with decay probability `w`: `|1⟩⟨1| ↦ w|0⟩⟨0| + (1−w)|1⟩⟨1|`,
/// coherences shrink by `√(1−w)`.
pub fn amplitude_damping_choi(w: f64) -> Result<Channel> {
    if !(0.0..=1.0).contains(&w) {
        return domain_err(format!("amplitude damping parameter {w} outside [0, 1]"));
    }
    let s = (1.0 - w).sqrt();
    let mut c = ComplexMatrix::diag_real(&[1.0, 0.0, w, 1.0 - w]);
    c[(0, 3)] = real(s);
    c[(3, 0)] = real(s);
    Ok(Channel { din: 2, dout: 2, choi: c })
}

/// `A(t) = (1 + e^{−2t})/2`.
pub fn eternal_a(t: f64) -> f64 {
    0.5 * (1.0 + (-2.0 * t).exp())
}

/// `B(t) = exp(−∫₀ᵗ (1 − tanh x) dx) = e^{−t} cosh t`.
pub fn eternal_b(t: f64) -> f64 {
    // e^{-t} cosh t = (1 + e^{-2t})/2; this form does not overflow for large t
    0.5 * (1.0 + (-2.0 * t).exp())
}

/// The eternally CP-indivisible qubit map at time `t`.
pub fn eternal_choi(t: f64) -> Result<Channel> {
    if !(t >= 0.0) {
        return domain_err(format!("eternal map evaluated at negative time {t}"));
    }
    let a = eternal_a(t);
    let b = eternal_b(t);
    let mut c = ComplexMatrix::diag_real(&[a, 1.0 - a, 1.0 - a, a]);
    c[(0, 3)] = real(b);
    c[(3, 0)] = real(b);
    Ok(Channel { din: 2, dout: 2, choi: c })
}

/// A named time-parametrized family `t ↦ Λ_t`.
#[derive(Debug, Clone, PartialEq)]
pub enum DynamicalMap {
    /// `w(t) = e^{−λt}` (CP-divisible).
    Depolarizing { lambda: f64 },
    /// `w(t) = e^{−λt} cos²(ωt)` (CP-indivisible).
    DepolarizingOscillating { lambda: f64, omega: f64 },
    /// Amplitude damping with decay `1 − e^{−αt} cos²(ωt)`.
    AmplitudeDamping { alpha: f64, omega: f64 },
    Eternal,
    Identity,
    /// A time-independent user-supplied channel.
    Constant(Channel),
}

impl DynamicalMap {
    /// Shrink or decay parameter `w(t)` for the parametric families.
    pub fn parameter(&self, t: f64) -> Option<f64> {
        match *self {
            Self::Depolarizing { lambda } => Some((-lambda * t).exp()),
            Self::DepolarizingOscillating { lambda, omega } => {
                Some((-lambda * t).exp() * (omega * t).cos().powi(2))
            }
            Self::AmplitudeDamping { alpha, omega } => {
                Some(1.0 - (-alpha * t).exp() * (omega * t).cos().powi(2))
            }
            _ => None,
        }
    }

    pub fn evaluate(&self, t: f64) -> Result<Channel> {
        if !(t >= 0.0) {
            return domain_err(format!("dynamical map evaluated at negative time {t}"));
        }
        match self {
            Self::Depolarizing { .. } | Self::DepolarizingOscillating { .. } => {
                depolarizing_choi(self.parameter(t).expect("parametric"))
            }
            Self::AmplitudeDamping { .. } => {
                amplitude_damping_choi(self.parameter(t).expect("parametric").clamp(0.0, 1.0))
            }
            Self::Eternal => eternal_choi(t),
            Self::Identity => Ok(Channel::identity(2)),
            Self::Constant(ch) => Ok(ch.clone()),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Self::Constant(ch) => ch.din(),
            _ => 2,
        }
    }

    /// Short machine-readable name.
    pub fn name(&self) -> &'static str {
        match self {
            Self::Depolarizing { .. } => "depolarizing",
            Self::DepolarizingOscillating { .. } => "depolarizing-indiv",
            Self::AmplitudeDamping { .. } => "amplitude-damping",
            Self::Eternal => "eternal",
            Self::Identity => "identity",
            Self::Constant(_) => "constant",
        }
    }

    /// Human-readable descriptor including parameters.
    pub fn describe(&self) -> String {
        match *self {
            Self::Depolarizing { lambda } => format!("depolarizing(lambda={lambda})"),
            Self::DepolarizingOscillating { lambda, omega } => {
                format!("depolarizing-indiv(lambda={lambda}, omega={omega})")
            }
            Self::AmplitudeDamping { alpha, omega } => {
                format!("amplitude-damping(alpha={alpha}, omega={omega})")
            }
            _ => self.name().to_string(),
        }
    }

    /// Looks up a family by name with the given parameters.
    pub fn from_name(name: &str, lambda: f64, omega: f64, alpha: f64) -> Result<Self> {
        Ok(match name {
            "depolarizing" | "depolarizing-div" => Self::Depolarizing { lambda },
            "depolarizing-indiv" => Self::DepolarizingOscillating { lambda, omega },
            "amplitude-damping" | "amplitude_damping" => Self::AmplitudeDamping { alpha, omega },
            "eternal" => Self::Eternal,
            "identity" => Self::Identity,
            other => return domain_err(format!("unknown dynamical map family '{other}'")),
        })
    }
}

/// A positive operator-valued measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    effects: Vec<ComplexMatrix>,
}

impl Povm {
    pub fn new(effects: Vec<ComplexMatrix>) -> Result<Self> {
        let first = effects.first().ok_or_else(|| Error::Domain("POVM has no effects".into()))?;
        let d = first.rows();
        let mut sum = ComplexMatrix::zeros(d, d);
        for e in &effects {
            if e.rows() != d || e.cols() != d {
                return dim_err("POVM effects have inconsistent dimension");
            }
            if !e.is_hermitian_within(POVM_TOL) {
                return domain_err("POVM effect is not Hermitian");
            }
            if linalg::min_eigenvalue(&e.hermitian_part())? < -POVM_TOL {
                return domain_err("POVM effect is not positive semidefinite");
            }
            sum += e;
        }
        if sum.max_abs_diff(&ComplexMatrix::identity(d)) > POVM_TOL {
            return domain_err("POVM effects do not sum to the identity");
        }
        Ok(Self {
            effects: effects.iter().map(|e| e.hermitian_part()).collect(),
        })
    }

    /// Projective measurement in the orthonormal basis given by the columns of `u`.
    pub fn projective(u: &ComplexMatrix) -> Result<Self> {
        let d = u.rows();
        let effects = (0..u.cols())
            .map(|k| {
                let v: Vec<C64> = (0..d).map(|i| u[(i, k)]).collect();
                ComplexMatrix::outer(&v)
            })
            .collect();
        Self::new(effects)
    }

    /// The single-outcome measurement `{𝟙}`.
    pub fn trivial(d: usize) -> Self {
        Self {
            effects: vec![ComplexMatrix::identity(d)],
        }
    }

    pub fn effects(&self) -> &[ComplexMatrix] {
        &self.effects
    }

    pub fn dim(&self) -> usize {
        self.effects[0].rows()
    }

    pub fn outcomes(&self) -> usize {
        self.effects.len()
    }

    /// `Λ*(M) = {Λ*(M(x))}`.
    pub fn pulled_back(&self, ch: &Channel) -> Result<Self> {
        let effects = self
            .effects
            .iter()
            .map(|e| ch.dual_apply(e).map(|x| x.hermitian_part()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(effects)
    }
}
