//! Discretized quasi-static isothermal extraction.
//!
//! A state `rho` is first given the Hamiltonian `-kT ln rho` (a sudden
//! quench), then the Hamiltonian is walked back to the target in `N` small
//! steps. Each step is a quench at fixed state followed by a Gibbs-preserving
//! map of the new Hamiltonian. Work is the energy change during quenches,
//! heat the energy change during the maps.

use crate::algebra::{Bipartite, Density, Hermitian};
use crate::error::{Error, Result};
use crate::thermo::{
    gibbs_from_eigensystem, isothermal_extractable_work, noneq_free_energy, von_neumann_entropy, ThermalContext,
};

/// Eigenvalues of a state below this span its numerical kernel.
pub const KERNEL_EIGENVALUE: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelRegularization {
    alpha: f64,
}

impl KernelRegularization {
    pub const DEFAULT_ALPHA: f64 = 1e-10;
    pub const MAX_ALPHA: f64 = 1e-3;

    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= Self::MAX_ALPHA) {
            return Err(Error::InvalidArgument(format!("alpha = {alpha} outside (0, 1e-3]")));
        }
        Ok(KernelRegularization { alpha })
    }

    /// `min(1e-10, epsilon_scale)`, tying the kernel lift to the step size.
    pub fn auto(epsilon_scale: f64) -> Self {
        let alpha = if epsilon_scale > 0.0 {
            epsilon_scale.min(Self::DEFAULT_ALPHA)
        } else {
            Self::DEFAULT_ALPHA
        };
        KernelRegularization { alpha }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl Default for KernelRegularization {
    fn default() -> Self {
        KernelRegularization {
            alpha: Self::DEFAULT_ALPHA,
        }
    }
}

/// `-kT ln(rho + alpha I_ker)`.
pub fn quench_hamiltonian(rho: &Density, ctx: &ThermalContext, reg: KernelRegularization) -> Hermitian {
    let eig = rho.eigensystem();
    let energies: Vec<f64> = eig
        .values
        .iter()
        .map(|&p| {
            let lifted = if p < KERNEL_EIGENVALUE {
                p.max(0.0) + reg.alpha
            } else {
                p
            };
            -ctx.kt() * lifted.ln()
        })
        .collect();
    Hermitian::from_matrix_unchecked(eig.compose(&energies))
}

#[derive(Clone, Debug)]
pub struct HamiltonianSchedule {
    pub steps: Vec<Hermitian>,
    /// Largest entry of `H_N - H_0` divided by `N`.
    pub epsilon_scale: f64,
}

impl HamiltonianSchedule {
    pub fn len(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `H_n = (1 - n/N) h_start + (n/N) h_end`, `n = 0..=N`.
pub fn linear_schedule(h_start: &Hermitian, h_end: &Hermitian, n: usize) -> Result<HamiltonianSchedule> {
    if n == 0 {
        return Err(Error::InvalidArgument("schedule needs at least one step".into()));
    }
    if h_start.dim() != h_end.dim() {
        return Err(Error::DimensionMismatch {
            expected: h_start.dim(),
            found: h_end.dim(),
        });
    }
    let steps = (0..=n).map(|k| h_start.lerp(h_end, k as f64 / n as f64)).collect();
    let spread = crate::algebra::max_abs(h_end.minus(h_start).matrix());
    Ok(HamiltonianSchedule {
        steps,
        epsilon_scale: spread / n as f64,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GibbsMapSpec {
    /// Replace the state by the Gibbs state.
    Full,
    /// `(1 - lambda) rho + lambda Gibbs`, `lambda` in `(0, 1]`.
    Partial { lambda: f64 },
}

impl GibbsMapSpec {
    pub fn validate(self) -> Result<Self> {
        match self {
            GibbsMapSpec::Partial { lambda } if !(lambda > 0.0 && lambda <= 1.0) => Err(Error::InvalidArgument(
                format!("thermalization strength {lambda} outside (0, 1]"),
            )),
            spec => Ok(spec),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub n: usize,
    /// `Tr[rho_prev (H_n - H_{n-1})]`, work done on the system.
    pub quench_work: f64,
    /// `Tr[H_n (rho_n - rho_prev)]`, heat absorbed from the bath.
    pub heat: f64,
    pub entropy_change: f64,
    /// `ΔS - beta q`; second order in the step for a Gibbs map.
    pub reversibility_residual: f64,
}

#[derive(Clone, Debug)]
pub struct TrajectoryReport {
    pub records: Vec<StepRecord>,
    pub total_work_extracted: f64,
    pub ideal_work: f64,
    pub dissipation: f64,
    pub final_state: Density,
}

/// Quench `H_{n-1} -> H_n` at fixed state, then apply the Gibbs map of `H_n`.
pub fn apply_step(
    n: usize,
    rho_prev: &Density,
    h_prev: &Hermitian,
    h_n: &Hermitian,
    spec: GibbsMapSpec,
    ctx: &ThermalContext,
) -> Result<(Density, StepRecord)> {
    let spec = spec.validate()?;
    let quench_work = h_n.expectation(rho_prev) - h_prev.expectation(rho_prev);
    let gibbs = gibbs_from_eigensystem(&h_n.eigensystem(), ctx.beta())?;
    let rho_n = match spec {
        GibbsMapSpec::Full => gibbs,
        GibbsMapSpec::Partial { lambda } => rho_prev.mix(&gibbs, lambda),
    };
    let heat = h_n.expectation(&rho_n) - h_n.expectation(rho_prev);
    let entropy_change = von_neumann_entropy(&rho_n) - von_neumann_entropy(rho_prev);
    let record = StepRecord {
        n,
        quench_work,
        heat,
        entropy_change,
        reversibility_residual: entropy_change - ctx.beta() * heat,
    };
    Ok((rho_n, record))
}

fn quench_only(n: usize, rho: &Density, h_from: &Hermitian, h_to: &Hermitian) -> StepRecord {
    StepRecord {
        n,
        quench_work: h_to.expectation(rho) - h_from.expectation(rho),
        heat: 0.0,
        entropy_change: 0.0,
        reversibility_residual: 0.0,
    }
}

fn drive(
    rho: &Density,
    schedule: &HamiltonianSchedule,
    spec: GibbsMapSpec,
    ctx: &ThermalContext,
    records: &mut Vec<StepRecord>,
) -> Result<Density> {
    let mut state = rho.clone();
    for (k, pair) in schedule.steps.windows(2).enumerate() {
        let (next, rec) = apply_step(k + 1, &state, &pair[0], &pair[1], spec, ctx)?;
        records.push(rec);
        state = next;
    }
    Ok(state)
}

fn extracted(records: &[StepRecord]) -> f64 {
    -records.iter().map(|r| r.quench_work).sum::<f64>()
}

/// Quench to `-kT ln rho`, then drive linearly back to `h_target` in `n`
/// steps. Record 0 is the initial quench.
pub fn run_isothermal_extraction(
    rho: &Density,
    h_target: &Hermitian,
    n: usize,
    spec: GibbsMapSpec,
    ctx: &ThermalContext,
    reg: KernelRegularization,
) -> Result<TrajectoryReport> {
    if rho.dim() != h_target.dim() {
        return Err(Error::DimensionMismatch {
            expected: h_target.dim(),
            found: rho.dim(),
        });
    }
    let h0 = quench_hamiltonian(rho, ctx, reg);
    let schedule = linear_schedule(&h0, h_target, n)?;
    let mut records = Vec::with_capacity(n + 1);
    records.push(quench_only(0, rho, h_target, &h0));
    let final_state = drive(rho, &schedule, spec, ctx, &mut records)?;
    let total_work_extracted = extracted(&records);
    let ideal_work = isothermal_extractable_work(rho, h_target, ctx)?.free_energy_form;
    Ok(TrajectoryReport {
        records,
        total_work_extracted,
        ideal_work,
        dissipation: ideal_work - total_work_extracted,
        final_state,
    })
}

/// Largest and summed `|ΔS - beta q|` over the steps.
pub fn reversibility_profile(report: &TrajectoryReport) -> (f64, f64) {
    report.records.iter().fold((0.0, 0.0), |(max, sum), r| {
        let a = r.reversibility_residual.abs();
        (f64::max(max, a), sum + a)
    })
}

/// Quench `H_S + H_A -> -kT ln rho_SA`, drive to `-kT ln target`, quench
/// back to `H_S + H_A` (recorded as step `n + 1`). The ideal work is the
/// free-energy drop `F(rho_SA) - F(target)`.
#[allow(clippy::too_many_arguments)]
pub fn run_joint_stroke(
    rho_sa: &Bipartite,
    target: &Bipartite,
    h_s: &Hermitian,
    h_a: &Hermitian,
    n: usize,
    ctx: &ThermalContext,
    reg: KernelRegularization,
) -> Result<TrajectoryReport> {
    if (rho_sa.d_s(), rho_sa.d_a()) != (target.d_s(), target.d_a()) {
        return Err(Error::DimensionMismatch {
            expected: rho_sa.state().dim(),
            found: target.state().dim(),
        });
    }
    if (h_s.dim(), h_a.dim()) != (rho_sa.d_s(), rho_sa.d_a()) {
        return Err(Error::DimensionMismatch {
            expected: rho_sa.state().dim(),
            found: h_s.dim() * h_a.dim(),
        });
    }
    let h_sa = Hermitian::local_sum(h_s, h_a);
    let h_from = quench_hamiltonian(rho_sa.state(), ctx, reg);
    let h_to = quench_hamiltonian(target.state(), ctx, reg);
    let schedule = linear_schedule(&h_from, &h_to, n)?;

    let mut records = Vec::with_capacity(n + 2);
    records.push(quench_only(0, rho_sa.state(), &h_sa, &h_from));
    let driven = drive(rho_sa.state(), &schedule, GibbsMapSpec::Full, ctx, &mut records)?;
    records.push(quench_only(n + 1, &driven, &h_to, &h_sa));

    let total_work_extracted = extracted(&records);
    let ideal_work = noneq_free_energy(rho_sa.state(), &h_sa, ctx)? - noneq_free_energy(target.state(), &h_sa, ctx)?;
    Ok(TrajectoryReport {
        records,
        total_work_extracted,
        ideal_work,
        dissipation: ideal_work - total_work_extracted,
        final_state: driven,
    })
}
