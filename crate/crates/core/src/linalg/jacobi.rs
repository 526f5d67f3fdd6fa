//! Cyclic Jacobi diagonalization of small dense real symmetric matrices.

/// Eigendecomposition of a real symmetric matrix.
///
/// `vectors` is row-major `n × n`; column `k` is the eigenvector of `values[k]`.
/// Values are in the order Jacobi leaves them (unsorted).
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub n: usize,
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
    pub sweeps: usize,
}

const MAX_SWEEPS: usize = 60;

/// Diagonalizes `a` (row-major, symmetric) in place. On return the diagonal of
/// `a` holds the eigenvalues and `v` has been right-multiplied by the
/// accumulated rotations. Returns the number of sweeps performed.
pub(crate) fn jacobi_in_place(a: &mut [f64], v: &mut [f64], n: usize) -> usize {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(v.len(), n * n);
    let fro2: f64 = a.iter().map(|x| x * x).sum();
    if fro2 == 0.0 {
        return 0;
    }
    let stop = 1e-32 * fro2;
    let skip = 1e-20 * fro2.sqrt();
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off <= stop {
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= skip {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.is_infinite() {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    let new_rp = c * arp - s * arq;
                    let new_rq = s * arp + c * arq;
                    a[r * n + p] = new_rp;
                    a[p * n + r] = new_rp;
                    a[r * n + q] = new_rq;
                    a[q * n + r] = new_rq;
                }
                for r in 0..n {
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = c * vrp - s * vrq;
                    v[r * n + q] = s * vrp + c * vrq;
                }
            }
        }
    }
    sweeps
}

/// Eigendecomposition of the symmetric row-major matrix `a`.
pub fn symmetric_eigen(a: &[f64], n: usize) -> SymmetricEigen {
    let mut work = a.to_vec();
    let mut v = identity(n);
    let sweeps = jacobi_in_place(&mut work, &mut v, n);
    let values = (0..n).map(|i| work[i * n + i]).collect();
    SymmetricEigen {
        n,
        values,
        vectors: v,
        sweeps,
    }
}

/// Eigendecomposition seeded with an approximate eigenbasis `guess`
/// (orthogonal, row-major). The matrix is first rotated into that basis so
/// Jacobi only has to clean up a nearly diagonal residual.
pub fn symmetric_eigen_warm(a: &[f64], n: usize, guess: &[f64]) -> SymmetricEigen {
    // work = guessᵀ · a · guess
    let mut tmp = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            let row = &guess[k * n..(k + 1) * n];
            let out = &mut tmp[i * n..(i + 1) * n];
            for j in 0..n {
                out[j] += aik * row[j];
            }
        }
    }
    let mut work = vec![0.0; n * n];
    for k in 0..n {
        let grow = &guess[k * n..(k + 1) * n];
        let trow = &tmp[k * n..(k + 1) * n];
        for i in 0..n {
            let gki = grow[i];
            if gki == 0.0 {
                continue;
            }
            let out = &mut work[i * n..(i + 1) * n];
            for j in 0..n {
                out[j] += gki * trow[j];
            }
        }
    }
    // Symmetrize away rounding before rotating.
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (work[i * n + j] + work[j * n + i]);
            work[i * n + j] = m;
            work[j * n + i] = m;
        }
    }
    let mut v = guess.to_vec();
    let sweeps = jacobi_in_place(&mut work, &mut v, n);
    let values = (0..n).map(|i| work[i * n + i]).collect();
    SymmetricEigen {
        n,
        values,
        vectors: v,
        sweeps,
    }
}

pub(crate) fn identity(n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    v
}
