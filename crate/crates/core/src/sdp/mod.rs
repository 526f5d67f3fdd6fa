//! Small dense semidefinite programs over Hermitian PSD blocks and free
//! scalars, solved by operator splitting in real coordinates.

mod admm;
mod compile;
mod problem;

pub use admm::{solve_compiled, SdpSolution, SolveStatus, SolverSettings};
pub use compile::{compile, BlockLayout, CompiledProblem, RowOrigin};
pub use problem::{
    BlockId, BlockMap, Constraint, MatrixEquality, MatrixTerm, Objective, ScalarEquality,
    ScalarId, SdpProblem, Sense,
};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

/// Real symmetric embedding `[[Re H, −Im H], [Im H, Re H]]` of a Hermitian
/// matrix, row-major `2n × 2n`. `H ⪰ 0` iff the embedding is, and every
/// eigenvalue of `H` appears twice in the embedding's spectrum.
pub fn real_embed(h: &ComplexMatrix) -> Vec<f64> {
    crate::linalg::embed_real(h)
}

/// Compiles and solves `p` with default settings.
pub fn solve(p: &SdpProblem) -> Result<SdpSolution> {
    solve_with(p, &SolverSettings::default())
}

pub fn solve_with(p: &SdpProblem, settings: &SolverSettings) -> Result<SdpSolution> {
    let dim = p.real_dimension();
    if dim > settings.max_real_dim {
        return Err(Error::TooLarge {
            dim,
            limit: settings.max_real_dim,
        });
    }
    let compiled = compile(p)?;
    Ok(solve_compiled(&compiled, settings))
}
