//! Seeded random generators for states, unitaries, channels and measurements.
//! Used by property tests and the validation suite.

use rand::Rng;

use crate::linalg::{hermitian_eig, ComplexMatrix, C64};
use crate::qchannel::{Channel, Povm};

fn gaussian_pair(rng: &mut impl Rng) -> (f64, f64) {
    // Box–Muller
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    let phi = 2.0 * std::f64::consts::PI * u2;
    (r * phi.cos(), r * phi.sin())
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let (a, b) = gaussian_pair(rng);
        C64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
    })
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
    ginibre(rng, n, n).hermitian_part()
}

/// Full-rank density matrix `GG†/Tr(GG†)`.
pub fn random_density(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
    let g = ginibre(rng, n, n);
    let p = &g * &g.adjoint();
    let t = p.trace().re;
    p.scale(1.0 / t).hermitian_part()
}

/// Haar-ish unitary from Gram–Schmidt on a Ginibre matrix.
pub fn random_unitary(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
    let g = ginibre(rng, n, n);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    for k in 0..n {
        let mut v: Vec<C64> = (0..n).map(|i| g[(i, k)]).collect();
        for q in &cols {
            let ov: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= ov * qi;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut v {
            *z /= norm;
        }
        cols.push(v);
    }
    ComplexMatrix::from_fn(n, n, |i, k| cols[k][i])
}

/// Random channel from `din·dout` Kraus operators normalized by `S^{-1/2}`,
/// `S = Σ Gₖ† Gₖ`.
pub fn random_channel(rng: &mut impl Rng, din: usize, dout: usize) -> Channel {
    let k = din * dout;
    let gs: Vec<ComplexMatrix> = (0..k).map(|_| ginibre(rng, dout, din)).collect();
    let mut s = ComplexMatrix::zeros(din, din);
    for g in &gs {
        s += &(&g.adjoint() * g);
    }
    let eig = hermitian_eig(&s.hermitian_part()).expect("Hermitian");
    let v = &eig.vectors;
    let inv_sqrt = ComplexMatrix::from_fn(din, din, |i, j| {
        (0..din)
            .map(|m| v[(i, m)] * (1.0 / eig.values[m].sqrt()) * v[(j, m)].conj())
            .sum()
    });
    let kraus: Vec<ComplexMatrix> = gs.iter().map(|g| g * &inv_sqrt).collect();
    Channel::from_kraus(&kraus).expect("normalized Kraus operators form a channel")
}

/// Projective measurement in a random orthonormal basis.
pub fn random_projective(rng: &mut impl Rng, d: usize) -> Povm {
    Povm::projective(&random_unitary(rng, d)).expect("unitary columns form a basis")
}
