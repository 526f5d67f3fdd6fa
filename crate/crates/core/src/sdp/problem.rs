use serde::{Deserialize, Serialize};

use crate::linalg::{partial_trace, ComplexMatrix, SubsystemShape, C64};

/// Handle to a Hermitian positive semidefinite variable block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockId(pub usize);

/// Handle to a free real scalar variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScalarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// A linear, Hermiticity-preserving map applied to a block inside a
/// matrix-valued constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BlockMap {
    Identity,
    /// Partial trace keeping the listed subsystems of `dims`.
    PartialTrace { dims: Vec<usize>, keep: Vec<usize> },
    /// `X ↦ 𝟙_left ⊗ X ⊗ 𝟙_right`.
    IdentityKron { left: usize, right: usize },
}

impl BlockMap {
    /// Output dimension for an input block of dimension `d`, or `None` if the
    /// map does not accept that dimension.
    pub fn output_dim(&self, d: usize) -> Option<usize> {
        match self {
            Self::Identity => Some(d),
            Self::PartialTrace { dims, keep } => {
                if dims.is_empty()
                    || dims.contains(&0)
                    || dims.iter().product::<usize>() != d
                    || keep.iter().any(|&k| k >= dims.len())
                {
                    return None;
                }
                Some(keep.iter().map(|&k| dims[k]).product())
            }
            Self::IdentityKron { left, right } => {
                if *left == 0 || *right == 0 {
                    None
                } else {
                    Some(left * d * right)
                }
            }
        }
    }

    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        match self {
            Self::Identity => x.clone(),
            Self::PartialTrace { dims, keep } => {
                let shape = SubsystemShape::new(dims.clone()).expect("validated shape");
                partial_trace(x, &shape, keep).expect("validated shape")
            }
            Self::IdentityKron { left, right } => {
                let k = crate::linalg::kron(&ComplexMatrix::identity(*left), x);
                crate::linalg::kron(&k, &ComplexMatrix::identity(*right))
            }
        }
    }
}

/// `coeff · map(X_block)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixTerm {
    pub block: BlockId,
    pub coeff: f64,
    pub map: BlockMap,
}

/// `Σ coeff·map(X_b) + Σ s·S = rhs`, a Hermitian `dim × dim` equality.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixEquality {
    pub dim: usize,
    pub block_terms: Vec<MatrixTerm>,
    pub scalar_terms: Vec<(ScalarId, ComplexMatrix)>,
    pub rhs: ComplexMatrix,
}

impl MatrixEquality {
    pub fn new(rhs: ComplexMatrix) -> Self {
        Self {
            dim: rhs.rows(),
            block_terms: Vec::new(),
            scalar_terms: Vec::new(),
            rhs,
        }
    }

    pub fn block(mut self, block: BlockId, coeff: f64, map: BlockMap) -> Self {
        self.block_terms.push(MatrixTerm { block, coeff, map });
        self
    }

    pub fn scalar(mut self, s: ScalarId, coeff: ComplexMatrix) -> Self {
        self.scalar_terms.push((s, coeff));
        self
    }
}

/// `Σ Tr(A_b X_b) + Σ a_s s = rhs` with Hermitian `A_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarEquality {
    pub block_terms: Vec<(BlockId, ComplexMatrix)>,
    pub scalar_terms: Vec<(ScalarId, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    Scalar(ScalarEquality),
    Matrix(MatrixEquality),
}

/// Linear objective `Σ Tr(C_b X_b) + Σ c_s s`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Objective {
    pub block_terms: Vec<(BlockId, ComplexMatrix)>,
    pub scalar_terms: Vec<(ScalarId, f64)>,
}

/// A semidefinite program over Hermitian PSD blocks and free scalars with
/// affine equality constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub(crate) blocks: Vec<usize>,
    pub(crate) scalars: usize,
    pub(crate) sense: Sense,
    pub(crate) objective: Objective,
    pub(crate) constraints: Vec<Constraint>,
}

impl Default for SdpProblem {
    fn default() -> Self {
        Self::new()
    }
}

impl SdpProblem {
    pub fn new() -> Self {
        Self {
            blocks: Vec::new(),
            scalars: 0,
            sense: Sense::Minimize,
            objective: Objective::default(),
            constraints: Vec::new(),
        }
    }

    /// Adds a `dim × dim` Hermitian PSD variable.
    pub fn add_block(&mut self, dim: usize) -> BlockId {
        self.blocks.push(dim);
        BlockId(self.blocks.len() - 1)
    }

    pub fn add_scalar(&mut self) -> ScalarId {
        self.scalars += 1;
        ScalarId(self.scalars - 1)
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.blocks
    }

    pub fn num_scalars(&self) -> usize {
        self.scalars
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn set_objective(&mut self, sense: Sense, objective: Objective) {
        self.sense = sense;
        self.objective = objective;
    }

    /// Shorthand for maximizing or minimizing a single scalar.
    pub fn optimize_scalar(&mut self, sense: Sense, s: ScalarId) {
        self.set_objective(
            sense,
            Objective {
                block_terms: Vec::new(),
                scalar_terms: vec![(s, 1.0)],
            },
        );
    }

    pub fn add_constraint(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    pub fn add_matrix_equality(&mut self, eq: MatrixEquality) {
        self.constraints.push(Constraint::Matrix(eq));
    }

    pub fn add_scalar_equality(&mut self, eq: ScalarEquality) {
        self.constraints.push(Constraint::Scalar(eq));
    }

    /// `Tr X_b = value`.
    pub fn add_trace_equality(&mut self, b: BlockId, value: f64) {
        let d = self.blocks[b.0];
        self.add_scalar_equality(ScalarEquality {
            block_terms: vec![(b, ComplexMatrix::identity(d))],
            scalar_terms: Vec::new(),
            rhs: value,
        });
    }

    /// Size of the real symmetric embedding of all variables: `Σ 2d_b + #scalars`.
    pub fn real_dimension(&self) -> usize {
        self.blocks.iter().map(|d| 2 * d).sum::<usize>() + self.scalars
    }
}

/// Coordinates of a Hermitian `d × d` block: the `d` diagonal entries followed
/// by `√2·Re h_ij, √2·Im h_ij` for `i < j` in row-major order. The Euclidean
/// norm of the coordinates equals the Frobenius norm of the matrix.
pub(crate) fn herm_coords(h: &ComplexMatrix, out: &mut [f64]) {
    let d = h.rows();
    debug_assert_eq!(out.len(), d * d);
    for i in 0..d {
        out[i] = h[(i, i)].re;
    }
    let mut k = d;
    for i in 0..d {
        for j in (i + 1)..d {
            let z = h[(i, j)];
            out[k] = std::f64::consts::SQRT_2 * z.re;
            out[k + 1] = std::f64::consts::SQRT_2 * z.im;
            k += 2;
        }
    }
}

pub(crate) fn coords_to_herm(c: &[f64], d: usize) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(d, d);
    for i in 0..d {
        h[(i, i)] = C64::new(c[i], 0.0);
    }
    let mut k = d;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        for j in (i + 1)..d {
            let z = C64::new(c[k] * s, c[k + 1] * s);
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
            k += 2;
        }
    }
    h
}

/// Hermitian matrix of the `k`-th coordinate basis element.
pub(crate) fn coord_basis(d: usize, k: usize) -> ComplexMatrix {
    let mut c = vec![0.0; d * d];
    c[k] = 1.0;
    coords_to_herm(&c, d)
}
