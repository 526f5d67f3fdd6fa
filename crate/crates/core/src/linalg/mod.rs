//! Dense complex linear algebra for operators of dimension ≤ 8.
//!
//! Everything here is a pure function of its inputs. Hermitian spectra are
//! computed with cyclic Jacobi on the real symmetric embedding
//! `[[Re H, −Im H], [Im H, Re H]]`, whose eigenvalues come in duplicate pairs.

pub(crate) mod jacobi;
mod matrix;

pub use jacobi::{symmetric_eigen, symmetric_eigen_warm, SymmetricEigen};
pub use matrix::{ComplexMatrix, C64, HERMITIAN_TOL};

use crate::error::{dim_err, domain_err, Result};

/// Eigendecomposition residual tolerance.
pub const EIG_TOL: f64 = 1e-10;
/// Smallest eigenvalue still accepted as positive semidefinite.
pub const PSD_FLOOR: f64 = -1e-10;

/// Factorization of a Hilbert space into an ordered tensor product.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsystemShape {
    dims: Vec<usize>,
}

impl SubsystemShape {
    pub fn new(dims: impl Into<Vec<usize>>) -> Result<Self> {
        let dims = dims.into();
        if dims.is_empty() || dims.contains(&0) {
            return dim_err("subsystem dimensions must be a non-empty list of positive integers");
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac, br, bc) = (a.rows(), a.cols(), b.rows(), b.cols());
    ComplexMatrix::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Traces out every subsystem not listed in `keep`. Kept subsystems retain
/// their original order. An empty `keep` traces everything and returns the
/// 1×1 matrix holding `Tr m`.
pub fn partial_trace(
    m: &ComplexMatrix,
    shape: &SubsystemShape,
    keep: &[usize],
) -> Result<ComplexMatrix> {
    let n = shape.total();
    if !m.is_square() || m.rows() != n {
        return dim_err(format!(
            "shape {:?} describes dimension {n}, matrix is {}x{}",
            shape.dims(),
            m.rows(),
            m.cols()
        ));
    }
    let dims = shape.dims();
    let mut kept = vec![false; dims.len()];
    for &k in keep {
        if k >= dims.len() {
            return dim_err(format!("subsystem index {k} out of range for {:?}", dims));
        }
        kept[k] = true;
    }
    let (kept_index, traced_index) = split_indices(dims, &kept);
    let out_dim: usize = dims
        .iter()
        .zip(&kept)
        .filter(|(_, &k)| k)
        .map(|(d, _)| d)
        .product();
    let mut out = ComplexMatrix::zeros(out_dim, out_dim);
    for a in 0..n {
        for b in 0..n {
            if traced_index[a] == traced_index[b] {
                out[(kept_index[a], kept_index[b])] += m[(a, b)];
            }
        }
    }
    Ok(out)
}

/// For each full multi-index, its linear index within the kept and within the
/// traced subsystems.
fn split_indices(dims: &[usize], kept: &[bool]) -> (Vec<usize>, Vec<usize>) {
    let n: usize = dims.iter().product();
    let mut kept_index = vec![0; n];
    let mut traced_index = vec![0; n];
    for full in 0..n {
        let mut rem = full;
        let mut stride = n;
        let (mut ki, mut ti) = (0, 0);
        for (s, &d) in dims.iter().enumerate() {
            stride /= d;
            let digit = rem / stride;
            rem %= stride;
            if kept[s] {
                ki = ki * d + digit;
            } else {
                ti = ti * d + digit;
            }
        }
        kept_index[full] = ki;
        traced_index[full] = ti;
    }
    (kept_index, traced_index)
}

/// Real symmetric embedding `[[Re H, −Im H], [Im H, Re H]]`, row-major `2n × 2n`.
pub(crate) fn embed_real(h: &ComplexMatrix) -> Vec<f64> {
    let n = h.rows();
    let m = 2 * n;
    let mut x = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            x[i * m + j] = z.re;
            x[(i + n) * m + (j + n)] = z.re;
            x[i * m + (j + n)] = -z.im;
            x[(i + n) * m + j] = z.im;
        }
    }
    x
}

/// Spectrum of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Unitary whose columns are the matching eigenvectors.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let v = &self.vectors;
        let n = v.rows();
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| v[(i, k)] * self.values[k] * v[(j, k)].conj())
                .sum()
        })
    }
}

/// Eigendecomposition of a Hermitian matrix.
pub fn hermitian_eig(h: &ComplexMatrix) -> Result<HermitianEigen> {
    if !h.is_square() {
        return dim_err("eigendecomposition needs a square matrix");
    }
    if !h.is_hermitian() {
        return domain_err("eigendecomposition input is not Hermitian");
    }
    let n = h.rows();
    let m = 2 * n;
    let eig = symmetric_eigen(&embed_real(h), m);

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.values[b].total_cmp(&eig.values[a]));
    let scale = eig.values.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let cluster_tol = 1e-11 * scale;

    // Consecutive pairs of the sorted embedding spectrum are the duplicated
    // eigenvalues; eigenvalues that agree within tolerance form one cluster.
    let mut vectors: Vec<Vec<C64>> = Vec::with_capacity(n);
    let mut start = 0;
    while start < m {
        let mut end = start + 2;
        while end < m && (eig.values[order[end - 1]] - eig.values[order[end]]).abs() <= cluster_tol {
            end += 2;
        }
        end = end.min(m);
        let wanted = (end - start) / 2;
        let candidates: Vec<Vec<C64>> = order[start..end]
            .iter()
            .map(|&col| {
                (0..n)
                    .map(|i| C64::new(eig.vectors[i * m + col], eig.vectors[(i + n) * m + col]))
                    .collect()
            })
            .collect();
        let mut chosen: Vec<Vec<C64>> = Vec::with_capacity(wanted);
        let mut used = vec![false; candidates.len()];
        for _ in 0..wanted {
            let mut best: Option<(usize, Vec<C64>, f64)> = None;
            for (ci, cand) in candidates.iter().enumerate() {
                if used[ci] {
                    continue;
                }
                let mut r = cand.clone();
                for q in chosen.iter().chain(vectors.iter()) {
                    let overlap: C64 = q.iter().zip(&r).map(|(a, b)| a.conj() * b).sum();
                    for (ri, qi) in r.iter_mut().zip(q) {
                        *ri -= overlap * qi;
                    }
                }
                let norm = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if best.as_ref().is_none_or(|b| norm > b.2) {
                    best = Some((ci, r, norm));
                }
            }
            let (ci, mut r, norm) = best.expect("cluster has enough candidates");
            used[ci] = true;
            for z in &mut r {
                *z /= norm;
            }
            chosen.push(r);
        }
        vectors.extend(chosen);
        start = end;
    }

    // Rayleigh quotients give eigenvalues consistent with the chosen vectors.
    let mut pairs: Vec<(f64, Vec<C64>)> = vectors
        .into_iter()
        .map(|v| {
            let hv: Vec<C64> = (0..n)
                .map(|i| (0..n).map(|j| h[(i, j)] * v[j]).sum())
                .collect();
            let lambda: C64 = v.iter().zip(&hv).map(|(a, b)| a.conj() * b).sum();
            (lambda.re, v)
        })
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let values = pairs.iter().map(|p| p.0).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, k| pairs[k].1[i]);
    Ok(HermitianEigen { values, vectors })
}

/// Eigenvalues of a Hermitian matrix, descending.
pub fn hermitian_eigenvalues(h: &ComplexMatrix) -> Result<Vec<f64>> {
    if !h.is_square() {
        return dim_err("eigenvalues need a square matrix");
    }
    if !h.is_hermitian() {
        return domain_err("eigenvalue input is not Hermitian");
    }
    let m = 2 * h.rows();
    let eig = symmetric_eigen(&embed_real(h), m);
    let mut vals = eig.values;
    vals.sort_by(|a, b| b.total_cmp(a));
    Ok(vals.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect())
}

pub fn min_eigenvalue(h: &ComplexMatrix) -> Result<f64> {
    Ok(*hermitian_eigenvalues(h)?.last().expect("non-empty"))
}

/// Projection onto the positive semidefinite cone in Frobenius norm.
pub fn project_psd(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(h)?;
    let clipped = HermitianEigen {
        values: eig.values.iter().map(|v| v.max(0.0)).collect(),
        vectors: eig.vectors,
    };
    Ok(clipped.reconstruct())
}

/// Sum of singular values.
///
/// Hermitian input uses `Σ|λᵢ|` directly; anything else goes through the
/// Hermitian dilation `[[0, M], [M†, 0]]`, whose spectrum is `±σᵢ`.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    if !m.is_square() {
        return dim_err(format!("trace norm needs a square matrix, got {}x{}", m.rows(), m.cols()));
    }
    if m.is_hermitian() {
        return Ok(hermitian_eigenvalues(m)?.iter().map(|v| v.abs()).sum());
    }
    let n = m.rows();
    let dil = ComplexMatrix::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        (true, false) => m[(i, j - n)],
        (false, true) => m[(j, i - n)].conj(),
        _ => C64::new(0.0, 0.0),
    });
    Ok(0.5 * hermitian_eigenvalues(&dil)?.iter().map(|v| v.abs()).sum::<f64>())
}

/// Trace distance `½‖ρ − σ‖₁` between two density matrices.
pub fn trace_distance(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    if rho.rows() != sigma.rows() || rho.cols() != sigma.cols() {
        return dim_err("trace distance between states of different dimension");
    }
    for (name, s) in [("rho", rho), ("sigma", sigma)] {
        if !s.is_hermitian_within(1e-10) {
            return domain_err(format!("{name} is not Hermitian"));
        }
        if (s.trace() - C64::new(1.0, 0.0)).norm() > 1e-9 {
            return domain_err(format!("{name} does not have unit trace"));
        }
    }
    let diff = (rho - sigma).hermitian_part();
    Ok(0.5 * trace_norm(&diff)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn random_matrix(rng: &mut impl Rng, r: usize, cols: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(r, cols, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    fn random_hermitian(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
        random_matrix(rng, n, n).hermitian_part()
    }

    fn random_density(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
        let g = random_matrix(rng, n, n);
        let p = &g * &g.adjoint();
        let t = p.trace().re;
        p.scale(1.0 / t)
    }

    #[test]
    fn kron_identities_and_paulis() {
        assert_eq!(kron(&ComplexMatrix::identity(2), &ComplexMatrix::identity(2)), ComplexMatrix::identity(4));
        let zz = kron(&ComplexMatrix::pauli_z(), &ComplexMatrix::pauli_z());
        assert_eq!(zz, ComplexMatrix::diag_real(&[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn kron_matches_index_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_matrix(&mut rng, 2, 2);
        let b = random_matrix(&mut rng, 2, 2);
        let k = kron(&a, &b);
        for i in 0..2 {
            for j in 0..2 {
                for p in 0..2 {
                    for q in 0..2 {
                        assert_eq!(k[(2 * i + p, 2 * j + q)], a[(i, j)] * b[(p, q)]);
                    }
                }
            }
        }
    }

    #[test]
    fn partial_trace_of_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_matrix(&mut rng, 2, 2);
        let b = random_matrix(&mut rng, 2, 2);
        let shape = SubsystemShape::new([2, 2]).unwrap();
        let out = partial_trace(&kron(&a, &b), &shape, &[0]).unwrap();
        assert!(out.max_abs_diff(&a.scale_c(b.trace())) < 1e-14);
        let out = partial_trace(&kron(&a, &b), &shape, &[1]).unwrap();
        assert!(out.max_abs_diff(&b.scale_c(a.trace())) < 1e-14);
    }

    #[test]
    fn singlet_marginal_is_maximally_mixed() {
        let s = 1.0 / 2f64.sqrt();
        let psi = [c(0.0), c(s), c(-s), c(0.0)];
        let rho = ComplexMatrix::outer(&psi);
        let shape = SubsystemShape::new([2, 2]).unwrap();
        let marg = partial_trace(&rho, &shape, &[1]).unwrap();
        assert!(marg.max_abs_diff(&ComplexMatrix::identity(2).scale(0.5)) < 1e-15);
    }

    #[test]
    fn partial_trace_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_matrix(&mut rng, 8, 8);
        let m = &g * &g.adjoint();
        let shape = SubsystemShape::new([2, 2, 2]).unwrap();
        let out = partial_trace(&m, &shape, &[0, 1]).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..2 {
                    acc += m[(2 * i + k, 2 * j + k)];
                }
                assert!((out[(i, j)] - acc).norm() < 1e-14);
            }
        }
        // middle subsystem, to exercise non-trailing traces
        let mid = partial_trace(&m, &shape, &[0, 2]).unwrap();
        for a in 0..2 {
            for cc in 0..2 {
                for b in 0..2 {
                    for d in 0..2 {
                        let mut acc = C64::new(0.0, 0.0);
                        for k in 0..2 {
                            acc += m[(4 * a + 2 * k + cc, 4 * b + 2 * k + d)];
                        }
                        assert!((mid[(2 * a + cc, 2 * b + d)] - acc).norm() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn partial_trace_rejects_bad_shape() {
        let m = ComplexMatrix::identity(4);
        let shape = SubsystemShape::new([2, 3]).unwrap();
        assert!(partial_trace(&m, &shape, &[0]).is_err());
        let shape = SubsystemShape::new([2, 2]).unwrap();
        assert!(partial_trace(&m, &shape, &[2]).is_err());
    }

    #[test]
    fn eig_of_diagonal_and_pauli() {
        let e = hermitian_eig(&ComplexMatrix::diag_real(&[3.0, 1.0])).unwrap();
        assert_eq!(e.values, vec![3.0, 1.0]);
        assert!((e.vectors[(0, 0)].norm() - 1.0).abs() < 1e-14);
        assert!((e.vectors[(1, 1)].norm() - 1.0).abs() < 1e-14);

        let e = hermitian_eig(&ComplexMatrix::pauli_x()).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14 && (e.values[1] + 1.0).abs() < 1e-14);
        let s = 1.0 / 2f64.sqrt();
        // eigenvectors agree with (1, ±1)/√2 up to a phase
        let plus = [c(s), c(s)];
        let minus = [c(s), c(-s)];
        for (k, target) in [plus, minus].iter().enumerate() {
            let overlap: C64 = (0..2).map(|i| target[i].conj() * e.vectors[(i, k)]).sum();
            assert!((overlap.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(hermitian_eig(&m), Err(crate::Error::Domain(_))));
    }

    #[test]
    fn eig_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let h = random_hermitian(&mut rng, 8);
            let e = hermitian_eig(&h).unwrap();
            assert!((&e.reconstruct() - &h).frobenius_norm() < EIG_TOL);
            let vv = &e.vectors.adjoint() * &e.vectors;
            assert!((&vv - &ComplexMatrix::identity(8)).frobenius_norm() < EIG_TOL);
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn eig_handles_degenerate_spectra() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // U diag(2,2,2,-1,-1,0) U†
        let g = random_matrix(&mut rng, 6, 6);
        let q = hermitian_eig(&(&g + &g.adjoint())).unwrap().vectors;
        let d = ComplexMatrix::diag_real(&[2.0, 2.0, 2.0, -1.0, -1.0, 0.0]);
        let h = (&(&q * &d) * &q.adjoint()).hermitian_part();
        let e = hermitian_eig(&h).unwrap();
        assert!((&e.reconstruct() - &h).frobenius_norm() < EIG_TOL);
        let vv = &e.vectors.adjoint() * &e.vectors;
        assert!((&vv - &ComplexMatrix::identity(6)).frobenius_norm() < EIG_TOL);
        // the identity is maximally degenerate
        let e = hermitian_eig(&ComplexMatrix::identity(4)).unwrap();
        assert!((&e.reconstruct() - &ComplexMatrix::identity(4)).frobenius_norm() < EIG_TOL);
    }

    #[test]
    fn trace_norm_examples() {
        let w = 0.37;
        let s = ComplexMatrix::diag_real(&[-w, -w, -w]);
        assert!((trace_norm(&s).unwrap() - 3.0 * w).abs() < 1e-14);
        assert!((trace_norm(&ComplexMatrix::identity(5)).unwrap() - 5.0).abs() < 1e-14);
        assert!(trace_norm(&ComplexMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn trace_norm_matches_gram_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10 {
            let s = ComplexMatrix::from_fn(3, 3, |_, _| c(rng.gen_range(-1.0..1.0)));
            // oracle: Σ √eig(SᵀS)
            let gram = &s.transpose() * &s;
            let oracle: f64 = hermitian_eigenvalues(&gram)
                .unwrap()
                .iter()
                .map(|v| v.max(0.0).sqrt())
                .sum();
            assert!((trace_norm(&s).unwrap() - oracle).abs() < 1e-7, "{} vs {oracle}", trace_norm(&s).unwrap());
        }
    }

    #[test]
    fn trace_distance_examples() {
        let p0 = ComplexMatrix::basis_projector(2, 0);
        let p1 = ComplexMatrix::basis_projector(2, 1);
        assert!((trace_distance(&p0, &p1).unwrap() - 1.0).abs() < 1e-14);
        assert!(trace_distance(&p0, &p0).unwrap().abs() < 1e-14);
        // depolarized |0⟩⟨0| and |1⟩⟨1| differ by w·σz
        let w = 0.42;
        let half = ComplexMatrix::identity(2).scale(0.5);
        let a = &p0.scale(w) + &half.scale(1.0 - w);
        let b = &p1.scale(w) + &half.scale(1.0 - w);
        assert!((trace_distance(&a, &b).unwrap() - w).abs() < 1e-14);
        assert!(trace_distance(&p0, &ComplexMatrix::identity(3).scale(1.0 / 3.0)).is_err());
    }

    #[test]
    fn full_partial_trace_is_scalar_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = random_matrix(&mut rng, 8, 8);
        let shape = SubsystemShape::new([2, 2, 2]).unwrap();
        let t = partial_trace(&m, &shape, &[]).unwrap();
        assert_eq!((t.rows(), t.cols()), (1, 1));
        assert!((t[(0, 0)] - m.trace()).norm() < 1e-14);
    }

    #[test]
    fn projected_matrices_are_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let h = random_hermitian(&mut rng, 6);
            let p = project_psd(&h).unwrap().hermitian_part();
            assert!(min_eigenvalue(&p).unwrap() >= PSD_FLOOR);
        }
    }

    proptest! {
        #[test]
        fn trace_norm_triangle_inequality(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_matrix(&mut rng, 3, 3);
            let b = random_matrix(&mut rng, 3, 3);
            let cm = random_matrix(&mut rng, 3, 3);
            let ab = trace_norm(&(&a - &b)).unwrap();
            let bc = trace_norm(&(&b - &cm)).unwrap();
            let ac = trace_norm(&(&a - &cm)).unwrap();
            prop_assert!(ac <= ab + bc + 1e-9);
        }

        #[test]
        fn trace_distance_symmetric_and_bounded(seed in any::<u64>(), n in 2usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = random_density(&mut rng, n);
            let s = random_density(&mut rng, n);
            let d1 = trace_distance(&r, &s).unwrap();
            let d2 = trace_distance(&s, &r).unwrap();
            prop_assert!((d1 - d2).abs() < 1e-12);
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&d1));
        }
    }
}
