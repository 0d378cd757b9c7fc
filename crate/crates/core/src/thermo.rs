//! Entropies, free energies, Gibbs states, ergotropy and the comparison
//! between isothermal work and the entropy-matched ergotropy bound.

use crate::algebra::{Density, Eigensystem, Hermitian};
use crate::error::{Error, Result};

/// Eigenvalue of `sigma` treated as zero by the support check.
const SUPPORT_EIGENVALUE: f64 = 1e-14;
/// Weight of `rho` on the kernel of `sigma` that makes `D(rho||sigma)` infinite.
const SUPPORT_WEIGHT: f64 = 1e-12;

const BETA_BRACKET: (f64, f64) = (1e-6, 1e6);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermalContext {
    beta: f64,
    k_b: f64,
}

impl ThermalContext {
    pub fn new(beta: f64) -> Result<Self> {
        Self::with_boltzmann(beta, 1.0)
    }

    pub fn with_boltzmann(beta: f64, k_b: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "beta must be finite and positive, got {beta}"
            )));
        }
        if !(k_b.is_finite() && k_b > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "k_B must be finite and positive, got {k_b}"
            )));
        }
        Ok(ThermalContext { beta, k_b })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn k_b(&self) -> f64 {
        self.k_b
    }

    pub fn temperature(&self) -> f64 {
        1.0 / (self.k_b * self.beta)
    }

    /// `k_B T`, the energy scale that multiplies entropies.
    pub fn kt(&self) -> f64 {
        1.0 / self.beta
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WorkKind {
    Ergotropy,
    IsothermalBound,
    Gain,
    Cost,
    Budget,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorkValue {
    pub value: f64,
    pub kind: WorkKind,
}

impl WorkValue {
    pub fn new(value: f64, kind: WorkKind) -> Self {
        WorkValue { value, kind }
    }
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Shannon entropy in nats with `0 ln 0 = 0`.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

pub fn von_neumann_entropy(rho: &Density) -> f64 {
    shannon_entropy(&rho.eigenvalues())
}

/// `D(rho||sigma) = Tr[rho (ln rho - ln sigma)]` in nats.
pub fn relative_entropy(rho: &Density, sigma: &Density) -> Result<f64> {
    check_dims(rho.dim(), sigma.dim())?;
    let sig = sigma.eigensystem();
    let mut cross = 0.0;
    for (k, &lambda) in sig.values.iter().enumerate() {
        let v = sig.vector(k);
        let weight = (v.adjoint() * rho.matrix() * &v)[(0, 0)].re;
        if lambda < SUPPORT_EIGENVALUE {
            if weight > SUPPORT_WEIGHT {
                return Err(Error::InfiniteDivergence);
            }
            continue;
        }
        cross += weight * lambda.ln();
    }
    Ok(-von_neumann_entropy(rho) - cross)
}

/// Boltzmann populations for the given energies, shifted by the minimum
/// energy so nothing overflows. Zero entries mean underflow.
pub fn gibbs_populations(energies: &[f64], beta: f64) -> Vec<f64> {
    let e_min = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = energies.iter().map(|&e| (-beta * (e - e_min)).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// `ln Tr[e^{-beta H}]`.
pub fn log_partition_function(h: &Hermitian, ctx: &ThermalContext) -> f64 {
    let energies = h.eigensystem().values;
    let e_min = energies[0];
    let sum: f64 = energies.iter().map(|&e| (-ctx.beta() * (e - e_min)).exp()).sum();
    -ctx.beta() * e_min + sum.ln()
}

pub(crate) fn gibbs_from_eigensystem(eig: &Eigensystem, beta: f64) -> Result<Density> {
    let spread = eig.values[eig.dim() - 1] - eig.values[0];
    let exponent = beta * spread;
    let populations = gibbs_populations(&eig.values, beta);
    if populations.iter().any(|&p| !p.is_finite() || p <= 0.0) {
        return Err(Error::Range { exponent });
    }
    Ok(Density::from_spectral(Eigensystem::sorted(populations, &eig.vectors)))
}

/// `e^{-beta H} / Z`.
pub fn gibbs_state(h: &Hermitian, ctx: &ThermalContext) -> Result<Density> {
    if !h.is_finite() {
        return Err(Error::NonFinite);
    }
    gibbs_from_eigensystem(&h.eigensystem(), ctx.beta())
}

/// `F = Tr[H rho] - k_B T S(rho)`.
pub fn noneq_free_energy(rho: &Density, h: &Hermitian, ctx: &ThermalContext) -> Result<f64> {
    check_dims(h.dim(), rho.dim())?;
    Ok(h.expectation(rho) - ctx.kt() * von_neumann_entropy(rho))
}

/// Maximum isothermal work, evaluated both as a free-energy drop and as a
/// scaled relative entropy to the Gibbs state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsothermalWork {
    pub free_energy_form: f64,
    pub relative_entropy_form: f64,
}

impl IsothermalWork {
    pub fn work(&self) -> WorkValue {
        WorkValue::new(self.free_energy_form, WorkKind::IsothermalBound)
    }

    pub fn residual(&self) -> f64 {
        self.free_energy_form - self.relative_entropy_form
    }
}

pub fn isothermal_extractable_work(rho: &Density, h: &Hermitian, ctx: &ThermalContext) -> Result<IsothermalWork> {
    let gibbs = gibbs_state(h, ctx)?;
    let free_energy_form = noneq_free_energy(rho, h, ctx)? - noneq_free_energy(&gibbs, h, ctx)?;
    let relative_entropy_form = ctx.kt() * relative_entropy(rho, &gibbs)?;
    Ok(IsothermalWork {
        free_energy_form,
        relative_entropy_form,
    })
}

/// Passive state (populations sorted against ascending energies) and the
/// ergotropy `Tr[H rho] - Tr[H passive]`.
pub fn passive_state_and_ergotropy(rho: &Density, h: &Hermitian) -> Result<(Density, WorkValue)> {
    check_dims(h.dim(), rho.dim())?;
    let energy = h.eigensystem();
    // ascending eigenvalues reversed gives the descending populations
    let populations: Vec<f64> = rho.eigenvalues().into_iter().rev().collect();
    let passive_energy: f64 = populations.iter().zip(&energy.values).map(|(p, e)| p * e).sum();
    let ergotropy = h.expectation(rho) - passive_energy;
    let passive = Density::from_spectral(Eigensystem::sorted(populations, &energy.vectors));
    Ok((passive, WorkValue::new(ergotropy, WorkKind::Ergotropy)))
}

fn gibbs_entropy(energies: &[f64], beta: f64) -> f64 {
    shannon_entropy(&gibbs_populations(energies, beta))
}

/// Inverse temperature whose Gibbs state has the same entropy as `rho`.
pub fn beta_star(rho: &Density, h: &Hermitian) -> Result<f64> {
    check_dims(h.dim(), rho.dim())?;
    let energies = h.eigensystem().values;
    let dim = energies.len();
    let target = von_neumann_entropy(rho);
    let max_entropy = (dim as f64).ln();
    if (target - max_entropy).abs() <= 1e-12 {
        return Ok(0.0);
    }
    let scale = energies.iter().fold(1.0f64, |m, e| m.max(e.abs()));
    let spread = energies[dim - 1] - energies[0];
    if spread <= 1e-14 * scale {
        return Err(Error::NoSolution { entropy: target });
    }
    let ground = energies.iter().filter(|&&e| e - energies[0] <= 1e-12 * scale).count();
    if target <= (ground as f64).ln() + 1e-12 {
        return Err(Error::UnboundedBeta);
    }

    let (lo, hi) = BETA_BRACKET;
    if gibbs_entropy(&energies, hi) > target {
        return Err(Error::UnboundedBeta);
    }
    // entropy decreases in beta: keep S(lo) >= target >= S(hi)
    let root = if gibbs_entropy(&energies, lo) < target {
        let (mut a, mut b) = (0.0, lo);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if gibbs_entropy(&energies, mid) > target {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    } else {
        let (mut a, mut b) = (lo.ln(), hi.ln());
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if gibbs_entropy(&energies, mid.exp()) > target {
                a = mid;
            } else {
                b = mid;
            }
        }
        (0.5 * (a + b)).exp()
    };
    Ok(root)
}

/// Isothermal work against the entropy-matched energy drop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErgotropyComparison {
    pub beta_star: f64,
    pub w_beta: WorkValue,
    pub w_max: WorkValue,
    /// `w_beta - w_max`.
    pub gap: f64,
    /// `k_B T D(Gibbs(beta*) || Gibbs(beta))`, equal to `gap` analytically.
    pub gap_relative_entropy: f64,
}

impl ErgotropyComparison {
    pub fn residual(&self) -> f64 {
        self.gap - self.gap_relative_entropy
    }
}

fn gibbs_at(h: &Hermitian, beta: f64) -> Result<Density> {
    if beta == 0.0 {
        return Ok(Density::maximally_mixed(h.dim()));
    }
    gibbs_from_eigensystem(&h.eigensystem(), beta)
}

pub fn ergotropy_vs_isothermal(rho: &Density, h: &Hermitian, ctx: &ThermalContext) -> Result<ErgotropyComparison> {
    let beta_star = beta_star(rho, h)?;
    let w_beta = isothermal_extractable_work(rho, h, ctx)?.work();
    let matched = gibbs_at(h, beta_star)?;
    let w_max = h.expectation(rho) - h.expectation(&matched);
    let gap_relative_entropy = ctx.kt() * relative_entropy(&matched, &gibbs_state(h, ctx)?)?;
    Ok(ErgotropyComparison {
        beta_star,
        w_beta,
        w_max: WorkValue::new(w_max, WorkKind::Ergotropy),
        gap: w_beta.value - w_max,
        gap_relative_entropy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn qubit() -> Hermitian {
        Hermitian::from_diagonal(&[0.0, 1.0])
    }

    fn ctx(beta: f64) -> ThermalContext {
        ThermalContext::new(beta).unwrap()
    }

    fn diag(p: &[f64]) -> Density {
        Density::from_diagonal(p).unwrap()
    }

    // Scalar oracles, independent of the matrix code paths.
    fn scalar_entropy(p: &[f64]) -> f64 {
        -p.iter().filter(|&&x| x > 0.0).map(|x| x * x.ln()).sum::<f64>()
    }

    fn scalar_kl(p: &[f64], q: &[f64]) -> f64 {
        p.iter()
            .zip(q)
            .filter(|(a, _)| **a > 0.0)
            .map(|(a, b)| a * (a.ln() - b.ln()))
            .sum()
    }

    fn scalar_gibbs_qubit(beta: f64) -> [f64; 2] {
        let z = 1.0 + (-beta).exp();
        [1.0 / z, (-beta).exp() / z]
    }

    #[test]
    fn entropy_examples() {
        assert!(von_neumann_entropy(&diag(&[1.0, 0.0])).abs() < 1e-15);
        assert!((von_neumann_entropy(&Density::maximally_mixed(2)) - 2f64.ln()).abs() < 1e-14);
        let expected = scalar_entropy(&[0.3, 0.7]);
        assert!((expected - 0.610864).abs() < 1e-6);
        assert!((von_neumann_entropy(&diag(&[0.3, 0.7])) - expected).abs() < 1e-14);
    }

    #[test]
    fn relative_entropy_examples() {
        let rho = diag(&[0.7, 0.3]);
        assert!(relative_entropy(&rho, &rho).unwrap().abs() < 1e-14);

        let g = scalar_gibbs_qubit(1.0);
        let expected = scalar_kl(&[0.7, 0.3], &g);
        assert!((expected - 0.0023973854633293).abs() < 1e-12);
        let got = relative_entropy(&rho, &diag(&g)).unwrap();
        assert!((got - expected).abs() < 1e-12);

        let pure = diag(&[1.0, 0.0]);
        let got = relative_entropy(&pure, &Density::maximally_mixed(2)).unwrap();
        assert!((got - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn relative_entropy_support_violation() {
        let rho = Density::maximally_mixed(2);
        let sigma = diag(&[1.0, 0.0]);
        assert_eq!(relative_entropy(&rho, &sigma), Err(Error::InfiniteDivergence));
        assert!(relative_entropy(&sigma, &rho).is_ok());
    }

    #[test]
    fn relative_entropy_dimension_mismatch() {
        let err = relative_entropy(&Density::maximally_mixed(2), &Density::maximally_mixed(3));
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn gibbs_examples() {
        let g = gibbs_state(&Hermitian::zeros(2), &ctx(3.7)).unwrap();
        assert!(g.max_difference(&Density::maximally_mixed(2)) < 1e-15);

        let g = gibbs_state(&qubit(), &ctx(1.0)).unwrap();
        let oracle = scalar_gibbs_qubit(1.0);
        assert!((oracle[0] - 0.731059).abs() < 1e-6);
        assert!(g.max_difference(&diag(&oracle)) < 1e-14);

        let w5 = gibbs_state(&qubit(), &ctx(5.0)).unwrap().matrix()[(0, 0)].re;
        let w10 = gibbs_state(&qubit(), &ctx(10.0)).unwrap().matrix()[(0, 0)].re;
        assert!((w5 - scalar_gibbs_qubit(5.0)[0]).abs() < 1e-14);
        assert!((w10 - scalar_gibbs_qubit(10.0)[0]).abs() < 1e-14);
        assert!(oracle[0] < w5 && w5 < w10 && w10 < 1.0);
    }

    #[test]
    fn gibbs_commutes_with_hamiltonian() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let h = states::random_hermitian(3, &mut rng);
        let g = gibbs_state(&h, &ctx(0.8)).unwrap();
        let comm = h.matrix() * g.matrix() - g.matrix() * h.matrix();
        assert!(crate::algebra::max_abs(&comm) < 1e-12);
    }

    #[test]
    fn gibbs_underflow_is_range_error() {
        let err = gibbs_state(&Hermitian::from_diagonal(&[0.0, 1.0]), &ctx(1e4));
        assert!(matches!(err, Err(Error::Range { .. })));
    }

    #[test]
    fn free_energy_examples() {
        let c = ctx(1.0);
        let g = gibbs_state(&qubit(), &c).unwrap();
        let ln_z = (1.0 + (-1.0f64).exp()).ln();
        assert!((ln_z - 0.313262).abs() < 1e-6);
        assert!((noneq_free_energy(&g, &qubit(), &c).unwrap() + ln_z).abs() < 1e-9);
        assert!((log_partition_function(&qubit(), &c) - ln_z).abs() < 1e-14);

        assert!(noneq_free_energy(&diag(&[1.0, 0.0]), &qubit(), &c).unwrap().abs() < 1e-15);

        let expected = 0.7 - scalar_entropy(&[0.3, 0.7]);
        assert!((expected - 0.089136).abs() < 1e-6);
        assert!((noneq_free_energy(&diag(&[0.3, 0.7]), &qubit(), &c).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn isothermal_work_examples() {
        let c = ctx(1.0);
        let g = gibbs_state(&qubit(), &c).unwrap();
        assert!(
            isothermal_extractable_work(&g, &qubit(), &c)
                .unwrap()
                .work()
                .value
                .abs()
                < 1e-12
        );

        let w = isothermal_extractable_work(&diag(&[0.3, 0.7]), &qubit(), &c).unwrap();
        let oracle = scalar_kl(&[0.3, 0.7], &scalar_gibbs_qubit(1.0));
        assert!((oracle - 0.4023973854633293).abs() < 1e-12);
        assert!((w.free_energy_form - oracle).abs() < 1e-12);
        assert!(w.residual().abs() <= 1e-9);

        let excited = isothermal_extractable_work(&diag(&[0.0, 1.0]), &qubit(), &c).unwrap();
        let expected = 1.0 + (1.0 + (-1.0f64).exp()).ln();
        assert!((excited.work().value - expected).abs() < 1e-12);
        assert!(excited.residual().abs() <= 1e-9);
    }

    #[test]
    fn ergotropy_examples() {
        let (passive, w) = passive_state_and_ergotropy(&diag(&[0.7, 0.3]), &qubit()).unwrap();
        assert!(w.value.abs() < 1e-14);
        assert!(passive.max_difference(&diag(&[0.7, 0.3])) < 1e-14);

        // exhaustive permutation oracle over the two orderings
        let perms = [[0.3, 0.7], [0.7, 0.3]];
        let min_energy = perms.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
        let (passive, w) = passive_state_and_ergotropy(&diag(&[0.3, 0.7]), &qubit()).unwrap();
        assert!((w.value - (0.7 - min_energy)).abs() < 1e-14);
        assert!((w.value - 0.4).abs() < 1e-14);
        assert!(passive.max_difference(&diag(&[0.7, 0.3])) < 1e-14);
        assert_eq!(w.kind, WorkKind::Ergotropy);

        let (_, w) = passive_state_and_ergotropy(&diag(&[0.0, 1.0]), &qubit()).unwrap();
        assert!((w.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn beta_star_examples() {
        let beta0 = 1.3;
        let g = gibbs_state(&qubit(), &ctx(beta0)).unwrap();
        assert!((beta_star(&g, &qubit()).unwrap() - beta0).abs() < 1e-9);

        let b = beta_star(&diag(&[0.3, 0.7]), &qubit()).unwrap();
        assert!((b - (7.0f64 / 3.0).ln()).abs() < 1e-9);
        assert!((gibbs_entropy(&[0.0, 1.0], b) - scalar_entropy(&[0.3, 0.7])).abs() <= 1e-10);

        let h = Hermitian::from_diagonal(&[0.2, 1.7]);
        assert_eq!(beta_star(&Density::maximally_mixed(2), &h).unwrap(), 0.0);
    }

    #[test]
    fn beta_star_errors() {
        assert_eq!(beta_star(&diag(&[1.0, 0.0]), &qubit()), Err(Error::UnboundedBeta));
        assert!(matches!(
            beta_star(&diag(&[0.3, 0.7]), &Hermitian::identity(2)),
            Err(Error::NoSolution { .. })
        ));
        // degenerate ground pair: S(rho) = ln 2 cannot be reached at finite beta
        let h = Hermitian::from_diagonal(&[0.0, 0.0, 1.0]);
        assert_eq!(beta_star(&diag(&[0.5, 0.5, 0.0]), &h), Err(Error::UnboundedBeta));
    }

    #[test]
    fn beta_star_small_root_below_bracket() {
        let h = qubit();
        let beta0 = 3e-7;
        let g = gibbs_state(&h, &ctx(beta0)).unwrap();
        let b = beta_star(&g, &h).unwrap();
        let resid = gibbs_entropy(&[0.0, 1.0], b) - von_neumann_entropy(&g);
        assert!(resid.abs() <= 1e-10);
    }

    #[test]
    fn comparison_examples() {
        let rho = diag(&[0.3, 0.7]);
        let cmp = ergotropy_vs_isothermal(&rho, &qubit(), &ctx(1.0)).unwrap();
        assert!((cmp.w_max.value - 0.4).abs() < 1e-9);
        assert!((cmp.gap - 0.0023973854633293).abs() < 1e-9);
        assert!(cmp.residual().abs() < 1e-9);

        let at_star = ergotropy_vs_isothermal(&rho, &qubit(), &ctx(cmp.beta_star)).unwrap();
        assert!(at_star.gap.abs() <= 1e-9);

        let mixed = Density::maximally_mixed(2);
        let cmp = ergotropy_vs_isothermal(&mixed, &qubit(), &ctx(1.0)).unwrap();
        assert_eq!(cmp.beta_star, 0.0);
        assert!(cmp.w_max.value.abs() < 1e-15);
        let oracle = scalar_kl(&[0.5, 0.5], &scalar_gibbs_qubit(1.0));
        assert!((cmp.gap - oracle).abs() < 1e-12);
        assert!(cmp.gap > 0.0);
    }

    #[test]
    fn comparison_propagates_pure_state_error() {
        let err = ergotropy_vs_isothermal(&diag(&[0.0, 1.0]), &qubit(), &ctx(1.0));
        assert_eq!(err, Err(Error::UnboundedBeta));
    }

    #[test]
    fn ergotropy_value_ignores_degenerate_tie_break() {
        let h = Hermitian::from_diagonal(&[0.0, 1.0, 1.0]);
        let base = diag(&[0.2, 0.4, 0.4]);
        let (_, w0) = passive_state_and_ergotropy(&base, &h).unwrap();
        for eps in [1e-12, -1e-12] {
            let hp = Hermitian::from_diagonal(&[0.0, 1.0 + eps, 1.0 - eps]);
            let rp = diag(&[0.2, 0.4 + eps, 0.4 - eps]);
            let (_, w) = passive_state_and_ergotropy(&rp, &hp).unwrap();
            assert!((w.value - w0.value).abs() < 1e-10);
        }
    }
}
