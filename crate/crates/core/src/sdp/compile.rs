use serde::Serialize;

use super::problem::{
    coord_basis, herm_coords, Constraint, MatrixEquality, ScalarEquality, SdpProblem,
    Sense,
};
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

/// Tolerance for Hermiticity of user-supplied coefficient matrices.
const COEFF_HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlockLayout {
    pub dim: usize,
    pub offset: usize,
}

/// Where a compiled row came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RowOrigin {
    Scalar { constraint: usize },
    Re { constraint: usize, i: usize, j: usize },
    Im { constraint: usize, i: usize, j: usize },
}

/// The problem in real coordinates: minimize `cᵀz` subject to `A z = b`,
/// `z ∈ K`, where `K` is a product of Hermitian PSD cones (one per block, in
/// the coordinates of [`super::problem`]) followed by free scalars.
#[derive(Debug, Clone, Serialize)]
pub struct CompiledProblem {
    pub num_vars: usize,
    pub blocks: Vec<BlockLayout>,
    pub scalar_offset: usize,
    pub num_scalars: usize,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub origins: Vec<RowOrigin>,
    /// Minimization objective; negated for maximization problems.
    pub cost: Vec<f64>,
    pub sense: Sense,
}

impl CompiledProblem {
    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Largest absolute violation over the original (unnormalized) rows.
    pub fn max_violation(&self, z: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(row, b)| (dot(row, z) - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("compiled problem serializes")
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn malformed<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Malformed(msg.into()))
}

fn check_coeff(m: &ComplexMatrix, d: usize, what: &str) -> Result<()> {
    if m.rows() != d || m.cols() != d {
        return malformed(format!(
            "{what}: coefficient is {}x{}, expected {d}x{d}",
            m.rows(),
            m.cols()
        ));
    }
    if !m.is_hermitian_within(COEFF_HERMITIAN_TOL) {
        return malformed(format!("{what}: coefficient is not Hermitian"));
    }
    Ok(())
}

pub fn compile(p: &SdpProblem) -> Result<CompiledProblem> {
    if p.blocks.contains(&0) {
        return malformed("zero-dimensional block");
    }
    let mut blocks = Vec::with_capacity(p.blocks.len());
    let mut offset = 0;
    for &d in &p.blocks {
        blocks.push(BlockLayout { dim: d, offset });
        offset += d * d;
    }
    let scalar_offset = offset;
    let num_vars = offset + p.scalars;

    let check_block = |b: usize| -> Result<BlockLayout> {
        blocks
            .get(b)
            .copied()
            .ok_or_else(|| Error::Malformed(format!("unknown block {b}")))
    };
    let check_scalar = |s: usize| -> Result<usize> {
        if s < p.scalars {
            Ok(scalar_offset + s)
        } else {
            Err(Error::Malformed(format!("unknown scalar {s}")))
        }
    };

    let mut cost = vec![0.0; num_vars];
    for (b, m) in &p.objective.block_terms {
        let lay = check_block(b.0)?;
        check_coeff(m, lay.dim, "objective")?;
        let mut c = vec![0.0; lay.dim * lay.dim];
        herm_coords(&m.hermitian_part(), &mut c);
        for (k, v) in c.into_iter().enumerate() {
            cost[lay.offset + k] += v;
        }
    }
    for (s, a) in &p.objective.scalar_terms {
        cost[check_scalar(s.0)?] += a;
    }
    if p.sense == Sense::Maximize {
        for c in &mut cost {
            *c = -*c;
        }
    }

    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    let mut origins = Vec::new();
    for (ci, con) in p.constraints.iter().enumerate() {
        match con {
            Constraint::Scalar(eq) => {
                let row = compile_scalar(eq, num_vars, &check_block, &check_scalar)?;
                rows.push(row);
                rhs.push(eq.rhs);
                origins.push(RowOrigin::Scalar { constraint: ci });
            }
            Constraint::Matrix(eq) => {
                compile_matrix(
                    ci,
                    eq,
                    num_vars,
                    &check_block,
                    &check_scalar,
                    &mut rows,
                    &mut rhs,
                    &mut origins,
                )?;
            }
        }
    }

    Ok(CompiledProblem {
        num_vars,
        blocks,
        scalar_offset,
        num_scalars: p.scalars,
        rows,
        rhs,
        origins,
        cost,
        sense: p.sense,
    })
}

fn compile_scalar(
    eq: &ScalarEquality,
    n: usize,
    check_block: &impl Fn(usize) -> Result<BlockLayout>,
    check_scalar: &impl Fn(usize) -> Result<usize>,
) -> Result<Vec<f64>> {
    let mut row = vec![0.0; n];
    for (b, m) in &eq.block_terms {
        let lay = check_block(b.0)?;
        check_coeff(m, lay.dim, "scalar constraint")?;
        let mut c = vec![0.0; lay.dim * lay.dim];
        herm_coords(&m.hermitian_part(), &mut c);
        for (k, v) in c.into_iter().enumerate() {
            row[lay.offset + k] += v;
        }
    }
    for (s, a) in &eq.scalar_terms {
        row[check_scalar(s.0)?] += a;
    }
    Ok(row)
}

#[allow(clippy::too_many_arguments)]
fn compile_matrix(
    ci: usize,
    eq: &MatrixEquality,
    n: usize,
    check_block: &impl Fn(usize) -> Result<BlockLayout>,
    check_scalar: &impl Fn(usize) -> Result<usize>,
    rows: &mut Vec<Vec<f64>>,
    rhs: &mut Vec<f64>,
    origins: &mut Vec<RowOrigin>,
) -> Result<()> {
    let d = eq.dim;
    check_coeff(&eq.rhs, d, "matrix constraint right-hand side")?;

    // Image of every coordinate basis element, collected column by column.
    let mut columns: Vec<(usize, ComplexMatrix)> = Vec::new();
    for term in &eq.block_terms {
        let lay = check_block(term.block.0)?;
        match term.map.output_dim(lay.dim) {
            Some(out) if out == d => {}
            Some(out) => {
                return malformed(format!(
                    "constraint {ci}: map output is {out}x{out}, constraint is {d}x{d}"
                ))
            }
            None => {
                return malformed(format!(
                    "constraint {ci}: map {:?} does not accept a block of dimension {}",
                    term.map, lay.dim
                ))
            }
        }
        for k in 0..lay.dim * lay.dim {
            let img = term.map.apply(&coord_basis(lay.dim, k)).scale(term.coeff);
            columns.push((lay.offset + k, img));
        }
    }
    for (s, m) in &eq.scalar_terms {
        check_coeff(m, d, "matrix constraint scalar coefficient")?;
        columns.push((check_scalar(s.0)?, m.clone()));
    }

    for i in 0..d {
        for j in i..d {
            let mut re = vec![0.0; n];
            for (col, img) in &columns {
                re[*col] += img[(i, j)].re;
            }
            rows.push(re);
            rhs.push(eq.rhs[(i, j)].re);
            origins.push(RowOrigin::Re { constraint: ci, i, j });
            if i < j {
                let mut im = vec![0.0; n];
                for (col, img) in &columns {
                    im[*col] += img[(i, j)].im;
                }
                rows.push(im);
                rhs.push(eq.rhs[(i, j)].im);
                origins.push(RowOrigin::Im { constraint: ci, i, j });
            }
        }
    }
    Ok(())
}
