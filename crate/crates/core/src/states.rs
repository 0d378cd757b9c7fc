//! Named states and seeded random ensembles.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::algebra::{c, Bipartite, CMatrix, CVector, Density, Hermitian};
use crate::error::{Error, Result};

fn two_qubit(state: Density) -> Bipartite {
    Bipartite::new(state, 2, 2).expect("two-qubit state has dimension 4")
}

/// `|Φ+> = (|00> + |11>)/√2`.
pub fn bell() -> Bipartite {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let psi = CVector::from_vec(vec![c(h, 0.), c(0., 0.), c(0., 0.), c(h, 0.)]);
    two_qubit(Density::pure(&psi).expect("normalized"))
}

/// `(|00><00| + |11><11|)/2`.
pub fn classical_mixture() -> Bipartite {
    two_qubit(Density::from_diagonal(&[0.5, 0., 0., 0.5]).expect("valid populations"))
}

/// `p |Φ+><Φ+| + (1 - p) I/4`.
pub fn werner(p: f64) -> Result<Bipartite> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("werner p = {p} outside [0, 1]")));
    }
    let phi = bell();
    let noise = Density::maximally_mixed(4);
    Ok(two_qubit(noise.mix(phi.state(), p)))
}

pub fn random_complex_matrix<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Hermitian {
    let g = random_complex_matrix(dim, rng);
    Hermitian::new((&g + g.adjoint()) * c(0.5, 0.0)).expect("symmetrized")
}

/// Full-rank Hilbert-Schmidt (Ginibre) random state.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Density {
    random_density_with_rank(dim, dim, rng)
}

pub fn random_density_with_rank<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> Density {
    let g = CMatrix::from_fn(dim, rank, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let w = &g * g.adjoint();
    let tr = w.trace().re;
    Density::validate(w * c(1.0 / tr, 0.0)).expect("Ginibre state is valid")
}

/// Haar-random unitary via QR of a Ginibre matrix with the phase fix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let qr = random_complex_matrix(dim, rng).qr();
    let (q, r) = qr.unpack();
    let mut u = q;
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1., 0.) };
        for i in 0..dim {
            u[(i, j)] *= phase;
        }
    }
    u
}

pub fn random_two_qubit(seed: u64) -> Bipartite {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    two_qubit(random_density(4, &mut rng))
}

/// `Σ_k q_k ρ_S^(k) ⊗ |k><k|` with the ancilla basis rotated by `u_a`
/// (pass the identity for the computational basis).
pub fn random_classical_quantum<R: Rng + ?Sized>(d_s: usize, d_a: usize, u_a: &CMatrix, rng: &mut R) -> Bipartite {
    let weights: Vec<f64> = (0..d_a).map(|_| rng.random::<f64>() + 0.05).collect();
    let total: f64 = weights.iter().sum();
    let mut acc = CMatrix::zeros(d_s * d_a, d_s * d_a);
    for (k, w) in weights.iter().enumerate() {
        let rho_k = random_density(d_s, rng);
        let col = u_a.column(k).into_owned();
        let proj = &col * col.adjoint();
        acc += rho_k.matrix().kronecker(&proj) * c(w / total, 0.0);
    }
    Bipartite::new(Density::validate(acc).expect("convex mixture"), d_s, d_a).expect("dims")
}
