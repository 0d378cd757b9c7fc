//! Mutual information, ancilla measurements and their backaction on the
//! system, measurement-extracted information and discord.
//!
//! Measurements are complete sets of `d_A` orthogonal rank-1 projectors on
//! the ancilla. The basis is parametrized by a product of `d_A (d_A - 1)/2`
//! two-level rotations, each carrying a polar angle and a phase, which gives
//! `d_A (d_A - 1)` real parameters. For a qubit ancilla that is the Bloch
//! sphere `(theta, phi)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::algebra::{c, max_abs, Bipartite, CMatrix, CVector, Density};
use crate::error::{Error, Result};
use crate::optimize::nelder_mead;
use crate::thermo::{shannon_entropy, von_neumann_entropy};

/// Outcomes with probability at or below this are null: no conditional
/// state, zero contribution to entropy sums.
pub const NULL_OUTCOME: f64 = 1e-12;
/// Projector-algebra tolerance used by [`ProjectiveMeasurement::check`].
pub const PROJECTOR_TOL: f64 = 1e-9;
/// Largest ancilla dimension the optimizer accepts.
pub const MAX_ANCILLA_DIM: usize = 4;

const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct ProjectiveMeasurement {
    basis: CMatrix,
    projectors: Vec<CMatrix>,
    params: Vec<f64>,
}

impl ProjectiveMeasurement {
    /// Rank-1 projectors onto the columns of a unitary.
    pub fn from_basis(basis: CMatrix, params: Vec<f64>) -> Result<Self> {
        let d = basis.nrows();
        if basis.ncols() != d {
            return Err(Error::NotSquare {
                rows: d,
                cols: basis.ncols(),
            });
        }
        let projectors = (0..d)
            .map(|k| {
                let u = basis.column(k);
                u * u.adjoint()
            })
            .collect();
        let m = ProjectiveMeasurement {
            basis,
            projectors,
            params,
        };
        m.check()?;
        Ok(m)
    }

    pub fn computational(d: usize) -> Self {
        parametrize_basis(&vec![0.0; d * (d - 1)], d).expect("zero parameters")
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn projectors(&self) -> &[CMatrix] {
        &self.projectors
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Idempotence, mutual orthogonality and completeness within
    /// [`PROJECTOR_TOL`].
    pub fn check(&self) -> Result<()> {
        let d = self.dim();
        let mut sum = CMatrix::zeros(d, d);
        for (j, pj) in self.projectors.iter().enumerate() {
            sum += pj;
            for (k, pk) in self.projectors.iter().enumerate() {
                let prod = pj * pk;
                let err = if j == k { max_abs(&(prod - pj)) } else { max_abs(&prod) };
                if err > PROJECTOR_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "projectors {j},{k} violate the projector algebra by {err:e}"
                    )));
                }
            }
        }
        let err = max_abs(&(sum - CMatrix::identity(d, d)));
        if err > PROJECTOR_TOL {
            return Err(Error::InvalidArgument(format!("projectors are incomplete by {err:e}")));
        }
        Ok(())
    }

    /// Unselective post-measurement ancilla state `Σ_k p_k Π_k`.
    pub fn dephased(&self, probabilities: &[f64]) -> Density {
        let d = self.dim();
        let mut out = CMatrix::zeros(d, d);
        for (p, proj) in probabilities.iter().zip(&self.projectors) {
            out += proj * c(*p, 0.0);
        }
        Density::from_matrix_unchecked(out)
    }
}

pub fn parameter_count(d_a: usize) -> usize {
    d_a * (d_a - 1)
}

/// Unitary whose columns are the measurement basis.
pub fn basis_unitary(params: &[f64], d_a: usize) -> Result<CMatrix> {
    let expected = parameter_count(d_a);
    if params.len() != expected {
        return Err(Error::ParameterCount {
            expected,
            found: params.len(),
        });
    }
    let mut u = CMatrix::identity(d_a, d_a);
    let mut next = params.chunks_exact(2);
    for i in 0..d_a {
        for j in (i + 1)..d_a {
            let pair = next.next().expect("parameter count checked");
            let (theta, phi) = (pair[0], pair[1]);
            let (cos, sin) = ((theta / 2.0).cos(), (theta / 2.0).sin());
            let phase = c(phi.cos(), phi.sin());
            // right-multiply by the rotation acting on basis states i, j
            for r in 0..d_a {
                let (ui, uj) = (u[(r, i)], u[(r, j)]);
                u[(r, i)] = ui * cos + uj * phase * sin;
                u[(r, j)] = -ui * phase.conj() * sin + uj * cos;
            }
        }
    }
    Ok(u)
}

pub fn parametrize_basis(params: &[f64], d_a: usize) -> Result<ProjectiveMeasurement> {
    ProjectiveMeasurement::from_basis(basis_unitary(params, d_a)?, params.to_vec())
}

/// Representative parameters used for deterministic tie-breaking. For a
/// qubit ancilla: `theta` in `[0, pi]`, `phi` in `[0, 2 pi)`, and `phi = 0`
/// at the poles.
pub fn canonical_params(params: &[f64], d_a: usize) -> Vec<f64> {
    let wrap = |x: f64, period: f64| {
        let r = x.rem_euclid(period);
        if r >= period {
            0.0
        } else {
            r
        }
    };
    if d_a == 2 {
        let mut theta = wrap(params[0], 2.0 * PI);
        let mut phi = params[1];
        if theta > PI {
            theta = 2.0 * PI - theta;
            phi += PI;
        }
        if theta.sin().abs() < 1e-12 {
            phi = 0.0;
        }
        return vec![theta, wrap(phi, 2.0 * PI)];
    }
    params
        .chunks_exact(2)
        .flat_map(|p| [wrap(p[0], 4.0 * PI), wrap(p[1], 2.0 * PI)])
        .collect()
}

#[derive(Clone, Debug)]
pub struct MeasurementOutcome {
    pub index: usize,
    pub probability: f64,
    /// `None` for null outcomes.
    pub conditional: Option<Density>,
}

impl MeasurementOutcome {
    pub fn is_null(&self) -> bool {
        self.conditional.is_none()
    }
}

/// `Tr_A[(I ⊗ Π) rho (I ⊗ Π)] = Tr_A[(I ⊗ Π) rho]` for a projector `Π`.
fn unnormalized_conditional(rho: &Bipartite, proj: &CMatrix) -> CMatrix {
    let (d_s, d_a) = (rho.d_s(), rho.d_a());
    let m = rho.state().matrix();
    CMatrix::from_fn(d_s, d_s, |s, t| {
        let mut acc = c(0.0, 0.0);
        for a in 0..d_a {
            for b in 0..d_a {
                acc += proj[(b, a)] * m[(s * d_a + a, t * d_a + b)];
            }
        }
        acc
    })
}

fn check_measurement_dim(rho: &Bipartite, m: &ProjectiveMeasurement) -> Result<()> {
    if m.dim() != rho.d_a() {
        return Err(Error::DimensionMismatch {
            expected: rho.d_a(),
            found: m.dim(),
        });
    }
    Ok(())
}

/// Outcome probabilities and the updated system states.
pub fn measure_ancilla(rho: &Bipartite, m: &ProjectiveMeasurement) -> Result<Vec<MeasurementOutcome>> {
    check_measurement_dim(rho, m)?;
    Ok(m.projectors()
        .iter()
        .enumerate()
        .map(|(index, proj)| {
            let sigma = unnormalized_conditional(rho, proj);
            let probability = sigma.trace().re.max(0.0);
            let conditional =
                (probability > NULL_OUTCOME).then(|| Density::from_matrix_unchecked(sigma * c(1.0 / probability, 0.0)));
            MeasurementOutcome {
                index,
                probability,
                conditional,
            }
        })
        .collect())
}

pub fn average_conditional_entropy(outcomes: &[MeasurementOutcome]) -> f64 {
    outcomes
        .iter()
        .filter_map(|o| o.conditional.as_ref().map(|s| o.probability * von_neumann_entropy(s)))
        .sum()
}

/// `I = S(rho_S) + S(rho_A) - S(rho_SA)`.
pub fn mutual_information(rho: &Bipartite) -> f64 {
    von_neumann_entropy(&rho.marginal_s()) + von_neumann_entropy(&rho.marginal_a()) - von_neumann_entropy(rho.state())
}

/// `J_π = S(rho_S) - Σ_k p_k S(rho_S|k)`.
pub fn extracted_information(rho: &Bipartite, m: &ProjectiveMeasurement) -> Result<f64> {
    let outcomes = measure_ancilla(rho, m)?;
    Ok(von_neumann_entropy(&rho.marginal_s()) - average_conditional_entropy(&outcomes))
}

/// `J_π` for basis vectors given as unitary columns, skipping the
/// projector construction. Hot path of the optimizer and the grid.
fn extracted_information_in_basis(rho: &Bipartite, s_marginal: f64, basis: &CMatrix) -> f64 {
    let (d_s, d_a) = (rho.d_s(), rho.d_a());
    let m = rho.state().matrix();
    let mut conditional_entropy = 0.0;
    for k in 0..d_a {
        let u: CVector = basis.column(k).into_owned();
        let sigma = CMatrix::from_fn(d_s, d_s, |s, t| {
            let mut acc = c(0.0, 0.0);
            for a in 0..d_a {
                let ua = u[a].conj();
                for b in 0..d_a {
                    acc += ua * m[(s * d_a + a, t * d_a + b)] * u[b];
                }
            }
            acc
        });
        let p = sigma.trace().re;
        if p <= NULL_OUTCOME {
            continue;
        }
        let eig = Density::from_matrix_unchecked(sigma * c(1.0 / p, 0.0));
        conditional_entropy += p * shannon_entropy(&eig.eigenvalues());
    }
    s_marginal - conditional_entropy
}

#[derive(Clone, Debug)]
pub struct SearchSettings {
    pub restarts: usize,
    pub seed: u64,
    /// `(theta_steps, phi_steps)` seed grid, used when `d_A = 2`.
    pub coarse_grid: Option<(usize, usize)>,
    pub max_evaluations: usize,
    pub initial_step: f64,
}

impl Default for SearchSettings {
    fn default() -> Self {
        SearchSettings {
            restarts: 32,
            seed: 0,
            coarse_grid: Some((24, 48)),
            max_evaluations: 4000,
            initial_step: 0.4,
        }
    }
}

impl SearchSettings {
    pub fn with_seed(seed: u64) -> Self {
        SearchSettings {
            seed,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug)]
pub struct CorrelationReport {
    pub mutual_information: f64,
    pub classical_j: f64,
    pub discord: f64,
    pub optimal_measurement: ProjectiveMeasurement,
    /// Optimum minus the best coarse-grid value (qubit ancilla only).
    pub grid_gap: Option<f64>,
    pub evaluations: usize,
}

#[derive(Clone, Debug)]
struct Candidate {
    value: f64,
    params: Vec<f64>,
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    if a.value > b.value + TIE_TOL {
        return true;
    }
    if b.value > a.value + TIE_TOL {
        return false;
    }
    a.params.partial_cmp(&b.params) == Some(std::cmp::Ordering::Less)
}

fn pick(cands: impl IntoIterator<Item = Candidate>) -> Option<Candidate> {
    cands.into_iter().fold(None, |best, cand| match best {
        Some(b) if !better(&cand, &b) => Some(b),
        _ => Some(cand),
    })
}

/// Derived per-restart seed (SplitMix64 finalizer).
fn restart_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn qubit_grid(rho: &Bipartite, s_marginal: f64, theta_steps: usize, phi_steps: usize) -> Candidate {
    let mut best: Option<Candidate> = None;
    for i in 0..=theta_steps {
        let theta = PI * i as f64 / theta_steps as f64;
        for j in 0..phi_steps {
            let phi = 2.0 * PI * j as f64 / phi_steps as f64;
            let params = vec![theta, phi];
            let basis = basis_unitary(&params, 2).expect("two parameters");
            let cand = Candidate {
                value: extracted_information_in_basis(rho, s_marginal, &basis),
                params: canonical_params(&params, 2),
            };
            best = pick(best.into_iter().chain(std::iter::once(cand)));
        }
    }
    best.expect("non-empty grid")
}

/// Exhaustive qubit-ancilla grid maximum of `J_π` at resolution
/// `pi / grid_steps` in both angles (`grid_steps + 1` polar values,
/// `2 grid_steps` azimuths).
pub fn brute_force_j(rho: &Bipartite, grid_steps: usize) -> Result<f64> {
    if rho.d_a() != 2 {
        return Err(Error::UnsupportedDimension(rho.d_a()));
    }
    if grid_steps == 0 {
        return Err(Error::InvalidArgument("grid_steps must be positive".into()));
    }
    let s_marginal = von_neumann_entropy(&rho.marginal_s());
    Ok(qubit_grid(rho, s_marginal, grid_steps, 2 * grid_steps).value)
}

/// Multi-start Nelder-Mead maximization of `J_π` over ancilla bases.
pub fn maximize_classical_correlations(rho: &Bipartite, settings: &SearchSettings) -> Result<CorrelationReport> {
    let d_a = rho.d_a();
    if d_a > MAX_ANCILLA_DIM {
        return Err(Error::UnsupportedDimension(d_a));
    }
    let mutual = mutual_information(rho);
    let s_marginal = von_neumann_entropy(&rho.marginal_s());
    let n_params = parameter_count(d_a);
    let objective = |x: &[f64]| -> f64 {
        let basis = basis_unitary(x, d_a).expect("parameter count fixed");
        -extracted_information_in_basis(rho, s_marginal, &basis)
    };
    let local = |start: &[f64], step: f64| {
        let m = nelder_mead(objective, start, step, 1e-15, 1e-10, settings.max_evaluations);
        (
            Candidate {
                value: -m.value,
                params: canonical_params(&m.point, d_a),
            },
            m.evaluations,
        )
    };

    let mut evaluations = 0;
    let mut candidates = Vec::new();

    let grid = match settings.coarse_grid {
        Some((nt, np)) if d_a == 2 && nt > 0 && np > 0 => {
            let g = qubit_grid(rho, s_marginal, nt, np);
            evaluations += (nt + 1) * np;
            let (polished, evals) = local(&g.params, PI / nt as f64);
            evaluations += evals;
            candidates.push(g.clone());
            candidates.push(polished);
            Some(g.value)
        }
        _ => None,
    };

    let restarts: Vec<(Candidate, usize)> = (0..settings.restarts as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(settings.seed, i));
            let start: Vec<f64> = (0..n_params)
                .map(|k| {
                    let upper = if k % 2 == 0 { PI } else { 2.0 * PI };
                    rng.random::<f64>() * upper
                })
                .collect();
            local(&start, settings.initial_step)
        })
        .collect();
    for (cand, evals) in restarts {
        evaluations += evals;
        candidates.push(cand);
    }
    if n_params == 0 {
        candidates.push(Candidate {
            value: -objective(&[]),
            params: Vec::new(),
        });
    }

    let best = pick(candidates).expect("at least one candidate");
    let (polished, evals) = local(&best.params, 1e-3);
    evaluations += evals;
    let best = pick([best, polished]).expect("two candidates");

    let optimal_measurement = parametrize_basis(&best.params, d_a)?;
    Ok(CorrelationReport {
        mutual_information: mutual,
        classical_j: best.value,
        discord: mutual - best.value,
        optimal_measurement,
        grid_gap: grid.map(|g| best.value - g),
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{partial_trace, tensor_product, Subsystem};
    use crate::states;

    const LN2: f64 = std::f64::consts::LN_2;

    fn x_basis() -> ProjectiveMeasurement {
        parametrize_basis(&[PI / 2.0, 0.0], 2).unwrap()
    }

    // (I ⊗ Π) rho (I ⊗ Π) by explicit matrix products, then Tr_A.
    fn conditional_oracle(rho: &Bipartite, proj: &CMatrix) -> (f64, CMatrix) {
        let lift = tensor_product(&CMatrix::identity(rho.d_s(), rho.d_s()), proj);
        let post = &lift * rho.state().matrix() * &lift;
        let p = post.trace().re;
        let b = Bipartite::new(
            Density::from_matrix_unchecked(post * c(1.0 / p, 0.0)),
            rho.d_s(),
            rho.d_a(),
        )
        .unwrap();
        (p, partial_trace(&b, Subsystem::A).matrix().clone())
    }

    #[test]
    fn qubit_parametrization_examples() {
        let z = parametrize_basis(&[0.0, 0.0], 2).unwrap();
        assert!(
            max_abs(&(&z.projectors()[0] - CMatrix::from_diagonal(&CVector::from_vec(vec![c(1., 0.), c(0., 0.)]))))
                < 1e-15
        );

        // explicit rotation oracle: |±> = (|0> ± |1>)/√2
        let x = x_basis();
        let half = c(0.5, 0.0);
        let plus = CMatrix::from_element(2, 2, half);
        let minus = CMatrix::from_row_slice(2, 2, &[half, -half, -half, half]);
        assert!(max_abs(&(&x.projectors()[0] - plus)) < 1e-15);
        assert!(max_abs(&(&x.projectors()[1] - minus)) < 1e-15);
    }

    #[test]
    fn parametrization_is_complete_for_all_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for d in 2..=4 {
            for _ in 0..20 {
                let params: Vec<f64> = (0..parameter_count(d))
                    .map(|_| rng.random::<f64>() * 7.0 - 1.0)
                    .collect();
                let m = parametrize_basis(&params, d).unwrap();
                let sum = m.projectors().iter().fold(CMatrix::zeros(d, d), |acc, p| acc + p);
                assert!(max_abs(&(sum - CMatrix::identity(d, d))) < 1e-10);
                m.check().unwrap();
            }
        }
    }

    #[test]
    fn wrong_parameter_count() {
        assert_eq!(
            parametrize_basis(&[0.1], 2).unwrap_err(),
            Error::ParameterCount { expected: 2, found: 1 }
        );
        assert!(matches!(
            parametrize_basis(&[0.0; 4], 3),
            Err(Error::ParameterCount { .. })
        ));
    }

    #[test]
    fn canonical_params_describe_the_same_projectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let p = [rng.random::<f64>() * 20.0 - 10.0, rng.random::<f64>() * 20.0 - 10.0];
            let q = canonical_params(&p, 2);
            assert!((0.0..=PI).contains(&q[0]) && (0.0..2.0 * PI).contains(&q[1]));
            let a = parametrize_basis(&p, 2).unwrap();
            let b = parametrize_basis(&q, 2).unwrap();
            for k in 0..2 {
                assert!(max_abs(&(&a.projectors()[k] - &b.projectors()[k])) < 1e-12);
            }
        }
    }

    #[test]
    fn mutual_information_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let prod = Bipartite::product(
            &states::random_density(2, &mut rng),
            &states::random_density(3, &mut rng),
        );
        assert!(mutual_information(&prod).abs() < 1e-12);
        assert!((mutual_information(&states::bell()) - 2.0 * LN2).abs() < 1e-12);
        assert!((mutual_information(&states::classical_mixture()) - LN2).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_matches_relative_entropy_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let rho = Bipartite::new(states::random_density(6, &mut rng), 2, 3).unwrap();
            let product = rho.marginal_s().tensor(&rho.marginal_a());
            let d = crate::thermo::relative_entropy(rho.state(), &product).unwrap();
            assert!((d - mutual_information(&rho)).abs() < 1e-9);
        }
    }

    #[test]
    fn product_state_backaction_is_trivial() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let rho_s = states::random_density(2, &mut rng);
        let prod = Bipartite::product(&rho_s, &states::random_density(2, &mut rng));
        for params in [[0.3, 1.1], [2.0, 4.0]] {
            let out = measure_ancilla(&prod, &parametrize_basis(&params, 2).unwrap()).unwrap();
            for o in out {
                assert!(o.conditional.unwrap().max_difference(&rho_s) < 1e-12);
            }
        }
    }

    #[test]
    fn bell_computational_outcomes() {
        let bell = states::bell();
        let z = ProjectiveMeasurement::computational(2);
        let out = measure_ancilla(&bell, &z).unwrap();
        for (k, o) in out.iter().enumerate() {
            let (p, cond) = conditional_oracle(&bell, &z.projectors()[k]);
            assert!((o.probability - p).abs() < 1e-14);
            assert!((o.probability - 0.5).abs() < 1e-14);
            assert!(max_abs(&(o.conditional.as_ref().unwrap().matrix() - &cond)) < 1e-14);
            let mut expected = [0.0, 0.0];
            expected[k] = 1.0;
            let target = Density::from_diagonal(&expected).unwrap();
            assert!(o.conditional.as_ref().unwrap().max_difference(&target) < 1e-14);
        }
    }

    #[test]
    fn classical_mixture_x_basis_outcomes() {
        let mix = states::classical_mixture();
        let x = x_basis();
        let out = measure_ancilla(&mix, &x).unwrap();
        for (k, o) in out.iter().enumerate() {
            let (p, cond) = conditional_oracle(&mix, &x.projectors()[k]);
            assert!((o.probability - p).abs() < 1e-14);
            assert!((p - 0.5).abs() < 1e-14);
            assert!(max_abs(&(&cond - Density::maximally_mixed(2).matrix())) < 1e-14);
            assert!(
                o.conditional
                    .as_ref()
                    .unwrap()
                    .max_difference(&Density::maximally_mixed(2))
                    < 1e-14
            );
        }
    }

    #[test]
    fn no_signalling_on_system_marginal() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let rho = Bipartite::new(states::random_density(6, &mut rng), 3, 2).unwrap();
            let params = [rng.random::<f64>() * PI, rng.random::<f64>() * 2.0 * PI];
            let out = measure_ancilla(&rho, &parametrize_basis(&params, 2).unwrap()).unwrap();
            let total: f64 = out.iter().map(|o| o.probability).sum();
            assert!((total - 1.0).abs() < 1e-9);
            let mut avg = CMatrix::zeros(3, 3);
            for o in &out {
                avg += o.conditional.as_ref().unwrap().matrix() * c(o.probability, 0.0);
            }
            assert!(max_abs(&(avg - rho.marginal_s().matrix())) < 1e-9);
        }
    }

    #[test]
    fn null_outcomes_are_flagged() {
        let rho = Bipartite::product(
            &Density::maximally_mixed(2),
            &Density::from_diagonal(&[1.0, 0.0]).unwrap(),
        );
        let out = measure_ancilla(&rho, &ProjectiveMeasurement::computational(2)).unwrap();
        assert!(!out[0].is_null());
        assert!(out[1].is_null());
        assert!(
            extracted_information(&rho, &ProjectiveMeasurement::computational(2))
                .unwrap()
                .abs()
                < 1e-14
        );
    }

    #[test]
    fn measurement_dimension_mismatch() {
        let err = measure_ancilla(&states::bell(), &ProjectiveMeasurement::computational(3));
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn extracted_information_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let prod = Bipartite::product(
            &states::random_density(2, &mut rng),
            &states::random_density(2, &mut rng),
        );
        assert!(extracted_information(&prod, &x_basis()).unwrap().abs() < 1e-12);

        let bell = states::bell();
        for params in [[0.0, 0.0], [PI / 2.0, 0.0], [1.0, 2.5]] {
            let j = extracted_information(&bell, &parametrize_basis(&params, 2).unwrap()).unwrap();
            assert!((j - LN2).abs() < 1e-12);
        }

        let mix = states::classical_mixture();
        let jz = extracted_information(&mix, &ProjectiveMeasurement::computational(2)).unwrap();
        let jx = extracted_information(&mix, &x_basis()).unwrap();
        assert!((jz - LN2).abs() < 1e-12);
        assert!(jx.abs() < 1e-12);
    }

    #[test]
    fn fast_path_matches_projector_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for d_a in 2..=3 {
            let rho = Bipartite::new(states::random_density(2 * d_a, &mut rng), 2, d_a).unwrap();
            let s = von_neumann_entropy(&rho.marginal_s());
            let params: Vec<f64> = (0..parameter_count(d_a)).map(|_| rng.random::<f64>() * 3.0).collect();
            let m = parametrize_basis(&params, d_a).unwrap();
            let slow = extracted_information(&rho, &m).unwrap();
            let fast = extracted_information_in_basis(&rho, s, m.basis());
            assert!((slow - fast).abs() < 1e-12);
        }
    }

    #[test]
    fn optimizer_examples() {
        let settings = SearchSettings::default();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let prod = Bipartite::product(
            &states::random_density(2, &mut rng),
            &states::random_density(2, &mut rng),
        );
        let r = maximize_classical_correlations(&prod, &settings).unwrap();
        assert!(r.classical_j.abs() < 1e-10 && r.discord.abs() < 1e-10);

        let r = maximize_classical_correlations(&states::bell(), &settings).unwrap();
        assert!((r.classical_j - LN2).abs() < 1e-9);
        assert!((r.discord - LN2).abs() < 1e-9);
        // every basis is optimal; the tie-break picks the computational one
        assert_eq!(r.optimal_measurement.params(), &[0.0, 0.0]);

        let r = maximize_classical_correlations(&states::classical_mixture(), &settings).unwrap();
        assert!((r.classical_j - LN2).abs() < 1e-9);
        assert!(r.discord.abs() < 1e-9);
        assert!(r.grid_gap.unwrap() >= 0.0);
    }

    #[test]
    fn brute_force_examples() {
        assert!((brute_force_j(&states::bell(), 180).unwrap() - LN2).abs() < 1e-4);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let prod = Bipartite::product(
            &states::random_density(2, &mut rng),
            &states::random_density(2, &mut rng),
        );
        assert!(brute_force_j(&prod, 30).unwrap().abs() < 1e-12);
        let werner = states::werner(1.0).unwrap();
        let opt = maximize_classical_correlations(&werner, &SearchSettings::default()).unwrap();
        assert!((brute_force_j(&werner, 180).unwrap() - opt.classical_j).abs() < 1e-4);
    }

    #[test]
    fn brute_force_requires_qubit_ancilla() {
        let rho = Bipartite::new(Density::maximally_mixed(6), 2, 3).unwrap();
        assert_eq!(brute_force_j(&rho, 10), Err(Error::UnsupportedDimension(3)));
    }

    #[test]
    fn optimizer_rejects_large_ancilla() {
        let rho = Bipartite::new(Density::maximally_mixed(10), 2, 5).unwrap();
        assert!(matches!(
            maximize_classical_correlations(&rho, &SearchSettings::default()),
            Err(Error::UnsupportedDimension(5))
        ));
    }

    #[test]
    fn qutrit_ancilla_classical_quantum_state_has_no_discord() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let u = states::random_unitary(3, &mut rng);
        let rho = states::random_classical_quantum(2, 3, &u, &mut rng);
        let r = maximize_classical_correlations(&rho, &SearchSettings::default()).unwrap();
        assert!(r.grid_gap.is_none());
        assert!(r.discord.abs() < 1e-6, "discord {}", r.discord);
    }

    #[test]
    fn trivial_ancilla() {
        let rho = Bipartite::new(Density::maximally_mixed(2), 2, 1).unwrap();
        let r = maximize_classical_correlations(&rho, &SearchSettings::default()).unwrap();
        assert_eq!(r.classical_j, 0.0);
        assert!(r.discord.abs() < 1e-14);
    }

    #[test]
    fn optimizer_is_deterministic_for_a_seed() {
        let rho = states::random_two_qubit(3);
        let a = maximize_classical_correlations(&rho, &SearchSettings::with_seed(5)).unwrap();
        let b = maximize_classical_correlations(&rho, &SearchSettings::with_seed(5)).unwrap();
        assert_eq!(a.classical_j.to_bits(), b.classical_j.to_bits());
        assert_eq!(a.optimal_measurement.params(), b.optimal_measurement.params());
    }
}
