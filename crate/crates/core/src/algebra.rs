//! Dense complex operators: Hermitian eigensystems, matrix functions,
//! tensor products, partial traces and density-operator validation.
//!
//! Bipartite indices are S-major throughout: the basis vector `|s>|a>`
//! sits at row `s * d_a + a`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Max-norm tolerance on `M - M^dagger` for Hermitian inputs.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Smallest eigenvalue a density operator may carry before it is rejected.
pub const PSD_TOL: f64 = 1e-10;
/// Allowed deviation of a density operator's trace from one.
pub const TRACE_TOL: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

fn check_square(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Kronecker product `a ⊗ b`; the first factor owns the major index.
pub fn tensor_product(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `Tr[a b]` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Spectral decomposition with eigenvalues in ascending order and the
/// matching orthonormal eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigensystem {
    fn of(m: &CMatrix) -> Self {
        let n = m.nrows();
        let eig = SymmetricEigen::new(m.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = CMatrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
        Eigensystem { values, vectors }
    }

    /// Builds an eigensystem from unsorted eigenpairs, sorting ascending.
    pub(crate) fn sorted(values: Vec<f64>, vectors: &CMatrix) -> Self {
        let n = values.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        Eigensystem {
            values: order.iter().map(|&i| values[i]).collect(),
            vectors: CMatrix::from_fn(vectors.nrows(), n, |r, col| vectors[(r, order[col])]),
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, i: usize) -> CVector {
        self.vectors.column(i).into_owned()
    }

    /// `V diag(w) V^dagger` for arbitrary real weights.
    pub fn compose(&self, weights: &[f64]) -> CMatrix {
        let n = self.dim();
        let mut out = CMatrix::zeros(n, n);
        for (k, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vi = self.vectors[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += vi * self.vectors[(j, k)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.compose(&self.values)
    }
}

/// Observable or Hamiltonian.
#[derive(Clone, Debug, PartialEq)]
pub struct Hermitian(CMatrix);

impl Hermitian {
    /// Accepts `m` if it is Hermitian within [`HERMITIAN_TOL`] and stores
    /// the symmetrized matrix.
    pub fn new(m: CMatrix) -> Result<Self> {
        check_square(&m)?;
        let deviation = hermitian_deviation(&m);
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Hermitian(symmetrize(&m)))
    }

    pub(crate) fn from_matrix_unchecked(m: CMatrix) -> Self {
        Hermitian(m)
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Hermitian(CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                c(diag[i], 0.0)
            } else {
                c(0.0, 0.0)
            }
        }))
    }

    pub fn zeros(dim: usize) -> Self {
        Hermitian(CMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Hermitian(CMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn eigensystem(&self) -> Eigensystem {
        Eigensystem::of(&self.0)
    }

    /// `Tr[H rho]`.
    pub fn expectation(&self, rho: &Density) -> f64 {
        trace_product(&self.0, rho.matrix()).re
    }

    pub fn scaled(&self, factor: f64) -> Hermitian {
        Hermitian(&self.0 * c(factor, 0.0))
    }

    pub fn plus(&self, other: &Hermitian) -> Hermitian {
        Hermitian(&self.0 + &other.0)
    }

    pub fn minus(&self, other: &Hermitian) -> Hermitian {
        Hermitian(&self.0 - &other.0)
    }

    /// `(1 - t) self + t other`.
    pub fn lerp(&self, other: &Hermitian, t: f64) -> Hermitian {
        Hermitian(&self.0 * c(1.0 - t, 0.0) + &other.0 * c(t, 0.0))
    }

    pub fn tensor(&self, other: &Hermitian) -> Hermitian {
        Hermitian(tensor_product(&self.0, &other.0))
    }

    /// `H_S ⊗ I + I ⊗ H_A`.
    pub fn local_sum(h_s: &Hermitian, h_a: &Hermitian) -> Hermitian {
        let id_s = CMatrix::identity(h_s.dim(), h_s.dim());
        let id_a = CMatrix::identity(h_a.dim(), h_a.dim());
        Hermitian(tensor_product(&h_s.0, &id_a) + tensor_product(&id_s, &h_a.0))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

pub fn hermitian_eigensystem(h: &Hermitian) -> Eigensystem {
    h.eigensystem()
}

/// `V f(Λ) V^dagger`; fails if `f` is not finite on some eigenvalue.
pub fn matrix_function(h: &Hermitian, f: impl Fn(f64) -> f64) -> Result<Hermitian> {
    let eig = h.eigensystem();
    let mut mapped = Vec::with_capacity(eig.dim());
    for &v in &eig.values {
        let fv = f(v);
        if !fv.is_finite() {
            return Err(Error::Domain { eigenvalue: v });
        }
        mapped.push(fv);
    }
    Ok(Hermitian(eig.compose(&mapped)))
}

/// Hermitian, positive-semidefinite, unit-trace operator. The spectrum is
/// computed once at construction and kept alongside the matrix.
#[derive(Clone, Debug)]
pub struct Density {
    matrix: CMatrix,
    eigen: Eigensystem,
}

impl Density {
    pub fn validate(m: CMatrix) -> Result<Self> {
        validate_density(m)
    }

    /// For matrices that are states by construction (partial traces, Gibbs
    /// states, convex mixtures of states).
    pub(crate) fn from_matrix_unchecked(m: CMatrix) -> Self {
        let matrix = symmetrize(&m);
        let eigen = Eigensystem::of(&matrix);
        Density { matrix, eigen }
    }

    pub(crate) fn from_spectral(eigen: Eigensystem) -> Self {
        let matrix = eigen.reconstruct();
        Density { matrix, eigen }
    }

    pub fn from_diagonal(populations: &[f64]) -> Result<Self> {
        Density::validate(Hermitian::from_diagonal(populations).into_matrix())
    }

    pub fn pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if !norm.is_finite() || norm <= 0.0 {
            return Err(Error::InvalidArgument("state vector has zero norm".into()));
        }
        let v = psi / c(norm, 0.0);
        Ok(Density::from_matrix_unchecked(&v * v.adjoint()))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let p = 1.0 / dim as f64;
        Density::from_matrix_unchecked(CMatrix::identity(dim, dim) * c(p, 0.0))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn eigensystem(&self) -> &Eigensystem {
        &self.eigen
    }

    /// Ascending eigenvalues, with float noise below zero clamped to zero.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigen.values.iter().map(|&v| v.max(0.0)).collect()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn tensor(&self, other: &Density) -> Density {
        Density::from_matrix_unchecked(tensor_product(&self.matrix, &other.matrix))
    }

    /// `(1 - t) self + t other`.
    pub fn mix(&self, other: &Density, t: f64) -> Density {
        Density::from_matrix_unchecked(&self.matrix * c(1.0 - t, 0.0) + &other.matrix * c(t, 0.0))
    }

    /// `U rho U^dagger`.
    pub fn conjugate(&self, u: &CMatrix) -> Density {
        Density::from_matrix_unchecked(u * &self.matrix * u.adjoint())
    }

    /// Trace distance `||self - other||_1 / 2`.
    pub fn trace_distance(&self, other: &Density) -> f64 {
        let diff = Eigensystem::of(&symmetrize(&(&self.matrix - &other.matrix)));
        0.5 * diff.values.iter().map(|v| v.abs()).sum::<f64>()
    }

    pub fn max_difference(&self, other: &Density) -> f64 {
        max_abs(&(&self.matrix - &other.matrix))
    }
}

pub fn validate_density(m: CMatrix) -> Result<Density> {
    check_square(&m)?;
    let deviation = hermitian_deviation(&m);
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let matrix = symmetrize(&m);
    let eigen = Eigensystem::of(&matrix);
    let min_eigenvalue = eigen.values[0];
    if min_eigenvalue < -PSD_TOL {
        return Err(Error::NotPositive { min_eigenvalue });
    }
    let trace = matrix.trace().re;
    if (trace - 1.0).abs() > TRACE_TOL {
        return Err(Error::TraceMismatch { trace });
    }
    Ok(Density { matrix, eigen })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    /// The system of interest (major index).
    S,
    /// The ancilla (minor index).
    A,
}

/// Density operator on `C^{d_s} ⊗ C^{d_a}`.
#[derive(Clone, Debug)]
pub struct Bipartite {
    state: Density,
    d_s: usize,
    d_a: usize,
}

impl Bipartite {
    pub fn new(state: Density, d_s: usize, d_a: usize) -> Result<Self> {
        if d_s == 0 || d_a == 0 || d_s * d_a != state.dim() {
            return Err(Error::DimensionMismatch {
                expected: d_s * d_a,
                found: state.dim(),
            });
        }
        Ok(Bipartite { state, d_s, d_a })
    }

    pub fn product(rho_s: &Density, rho_a: &Density) -> Self {
        Bipartite {
            state: rho_s.tensor(rho_a),
            d_s: rho_s.dim(),
            d_a: rho_a.dim(),
        }
    }

    pub fn state(&self) -> &Density {
        &self.state
    }

    pub fn d_s(&self) -> usize {
        self.d_s
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn marginal_s(&self) -> Density {
        partial_trace(self, Subsystem::A)
    }

    pub fn marginal_a(&self) -> Density {
        partial_trace(self, Subsystem::S)
    }

    /// `(U_S ⊗ U_A) rho (U_S ⊗ U_A)^dagger`.
    pub fn local_conjugate(&self, u_s: &CMatrix, u_a: &CMatrix) -> Bipartite {
        Bipartite {
            state: self.state.conjugate(&tensor_product(u_s, u_a)),
            d_s: self.d_s,
            d_a: self.d_a,
        }
    }
}

/// Traces out `over`, returning the state of the other subsystem.
pub fn partial_trace(rho: &Bipartite, over: Subsystem) -> Density {
    Density::from_matrix_unchecked(partial_trace_matrix(rho.state.matrix(), rho.d_s, rho.d_a, over))
}

pub(crate) fn partial_trace_matrix(m: &CMatrix, d_s: usize, d_a: usize, over: Subsystem) -> CMatrix {
    match over {
        Subsystem::A => CMatrix::from_fn(d_s, d_s, |s, t| (0..d_a).map(|a| m[(s * d_a + a, t * d_a + a)]).sum()),
        Subsystem::S => CMatrix::from_fn(d_a, d_a, |a, b| (0..d_s).map(|s| m[(s * d_a + a, s * d_a + b)]).sum()),
    }
}
