//! Work budgets for feedback protocols: measure the ancilla, condition the
//! system's extraction on the outcome, and account for what the
//! correlations and the measurement contribute or cost.
//!
//! Every operation returns a [`WorkLedger`] holding the named work values
//! and the leftovers of the identities that tie them together.

use crate::algebra::{Bipartite, CMatrix, Density, Hermitian};
use crate::correlations::{
    average_conditional_entropy, extracted_information, maximize_classical_correlations, measure_ancilla,
    mutual_information, CorrelationReport, ProjectiveMeasurement, SearchSettings,
};
use crate::error::{Error, Result};
use crate::thermo::{
    gibbs_state, isothermal_extractable_work, noneq_free_energy, von_neumann_entropy, ThermalContext, WorkKind,
    WorkValue,
};

/// Tolerance for identities that hold exactly in exact arithmetic.
pub const ALGEBRAIC_TOL: f64 = 1e-9;
/// Tolerance for identities that depend on the correlation optimizer.
pub const SEARCH_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct Residual {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
}

impl Residual {
    pub fn passed(&self) -> bool {
        self.value.abs() <= self.tolerance
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WorkLedger {
    pub entries: Vec<(String, WorkValue)>,
    pub residuals: Vec<Residual>,
}

impl WorkLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, label: &str, value: f64, kind: WorkKind) {
        self.entries.push((label.to_string(), WorkValue::new(value, kind)));
    }

    pub fn check(&mut self, name: &str, value: f64, tolerance: f64) {
        self.residuals.push(Residual {
            name: name.to_string(),
            value,
            tolerance,
        });
    }

    /// One-sided check: passes when `value >= -tolerance`.
    pub fn check_nonnegative(&mut self, name: &str, value: f64, tolerance: f64) {
        self.check(name, value.min(0.0), tolerance);
    }

    pub fn value(&self, label: &str) -> Option<f64> {
        self.entries.iter().find(|(l, _)| l == label).map(|(_, w)| w.value)
    }

    pub fn residual(&self, name: &str) -> Option<&Residual> {
        self.residuals.iter().find(|r| r.name == name)
    }

    pub fn all_passed(&self) -> bool {
        self.residuals.iter().all(Residual::passed)
    }

    pub fn extend(&mut self, other: WorkLedger) {
        self.entries.extend(other.entries);
        self.residuals.extend(other.residuals);
    }
}

#[derive(Clone, Debug)]
pub struct FeedbackScenario {
    rho_sa: Bipartite,
    h_s: Hermitian,
    h_a: Hermitian,
    ctx: ThermalContext,
    measurement: ProjectiveMeasurement,
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

fn check_local(rho: &Bipartite, h_s: &Hermitian, h_a: &Hermitian) -> Result<()> {
    check_dims(rho.d_s(), h_s.dim())?;
    check_dims(rho.d_a(), h_a.dim())
}

impl FeedbackScenario {
    pub fn new(
        rho_sa: Bipartite,
        h_s: Hermitian,
        h_a: Hermitian,
        ctx: ThermalContext,
        measurement: ProjectiveMeasurement,
    ) -> Result<Self> {
        check_local(&rho_sa, &h_s, &h_a)?;
        check_dims(rho_sa.d_a(), measurement.dim())?;
        Ok(FeedbackScenario {
            rho_sa,
            h_s,
            h_a,
            ctx,
            measurement,
        })
    }

    /// Scenario using the measurement that maximizes `J`.
    pub fn optimal(
        rho_sa: Bipartite,
        h_s: Hermitian,
        h_a: Hermitian,
        ctx: ThermalContext,
        settings: &SearchSettings,
    ) -> Result<(Self, CorrelationReport)> {
        check_local(&rho_sa, &h_s, &h_a)?;
        let report = maximize_classical_correlations(&rho_sa, settings)?;
        let s = Self::new(rho_sa, h_s, h_a, ctx, report.optimal_measurement.clone())?;
        Ok((s, report))
    }

    pub fn rho_sa(&self) -> &Bipartite {
        &self.rho_sa
    }

    pub fn h_s(&self) -> &Hermitian {
        &self.h_s
    }

    pub fn h_a(&self) -> &Hermitian {
        &self.h_a
    }

    pub fn ctx(&self) -> &ThermalContext {
        &self.ctx
    }

    pub fn measurement(&self) -> &ProjectiveMeasurement {
        &self.measurement
    }

    pub fn with_measurement(&self, measurement: ProjectiveMeasurement) -> Result<Self> {
        Self::new(
            self.rho_sa.clone(),
            self.h_s.clone(),
            self.h_a.clone(),
            self.ctx,
            measurement,
        )
    }

    fn h_sa(&self) -> Hermitian {
        Hermitian::local_sum(&self.h_s, &self.h_a)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalChange {
    pub probability: f64,
    /// `F(rho_S|k) - F(rho_S)`; `None` for null outcomes.
    pub delta_f: Option<f64>,
}

/// Free-energy change of the system for each ancilla outcome.
pub fn conditional_free_energy_change(s: &FeedbackScenario) -> Result<Vec<ConditionalChange>> {
    let rho_s = s.rho_sa.marginal_s();
    let f_s = noneq_free_energy(&rho_s, &s.h_s, &s.ctx)?;
    measure_ancilla(&s.rho_sa, &s.measurement)?
        .into_iter()
        .map(|o| {
            let delta_f = match &o.conditional {
                Some(sigma) => Some(noneq_free_energy(sigma, &s.h_s, &s.ctx)? - f_s),
                None => None,
            };
            Ok(ConditionalChange {
                probability: o.probability,
                delta_f,
            })
        })
        .collect()
}

/// Average work extracted from `S` when the protocol is chosen per outcome.
///
/// Entries: `W_S`, `W_S|pi`, `gain`, `kT*J_pi`.
pub fn feedback_extractable_work(s: &FeedbackScenario) -> Result<WorkLedger> {
    let rho_s = s.rho_sa.marginal_s();
    let gibbs = gibbs_state(&s.h_s, &s.ctx)?;
    let f_gibbs = noneq_free_energy(&gibbs, &s.h_s, &s.ctx)?;
    let w_s = isothermal_extractable_work(&rho_s, &s.h_s, &s.ctx)?.free_energy_form;

    let mut w_cond = 0.0;
    for o in measure_ancilla(&s.rho_sa, &s.measurement)? {
        if let Some(sigma) = &o.conditional {
            w_cond += o.probability * (noneq_free_energy(sigma, &s.h_s, &s.ctx)? - f_gibbs);
        }
    }
    let gain = w_cond - w_s;
    let kt_j = s.ctx.kt() * extracted_information(&s.rho_sa, &s.measurement)?;

    let mut ledger = WorkLedger::new();
    ledger.record("W_S", w_s, WorkKind::IsothermalBound);
    ledger.record("W_S|pi", w_cond, WorkKind::IsothermalBound);
    ledger.record("gain", gain, WorkKind::Gain);
    ledger.record("kT*J_pi", kt_j, WorkKind::Gain);
    ledger.check("gain - kT*J_pi", gain - kt_j, ALGEBRAIC_TOL);
    ledger.check_nonnegative("gain >= 0", gain, ALGEBRAIC_TOL);
    Ok(ledger)
}

/// Feedback gain at the `J`-maximizing measurement.
///
/// Entries: those of [`feedback_extractable_work`] plus `kT*J`.
pub fn optimal_feedback_gain(
    rho_sa: &Bipartite,
    h_s: &Hermitian,
    h_a: &Hermitian,
    ctx: &ThermalContext,
    settings: &SearchSettings,
) -> Result<(WorkLedger, ProjectiveMeasurement)> {
    let (s, report) = FeedbackScenario::optimal(rho_sa.clone(), h_s.clone(), h_a.clone(), *ctx, settings)?;
    let mut ledger = feedback_extractable_work(&s)?;
    let kt_j = ctx.kt() * report.classical_j;
    ledger.record("kT*J", kt_j, WorkKind::Gain);
    let gain = ledger.value("gain").expect("recorded above");
    ledger.check("gain - kT*J", gain - kt_j, SEARCH_TOL);
    Ok((ledger, report.optimal_measurement))
}

fn joint_work(rho_sa: &Bipartite, h_sa: &Hermitian, ctx: &ThermalContext) -> Result<f64> {
    Ok(isothermal_extractable_work(rho_sa.state(), h_sa, ctx)?.free_energy_form)
}

/// Work from the whole `SA` system against the product of local Gibbs
/// states.
///
/// Entries: `W_SA`, `W_S`, `W_A`, `kT*I`.
pub fn joint_extractable_work(
    rho_sa: &Bipartite,
    h_s: &Hermitian,
    h_a: &Hermitian,
    ctx: &ThermalContext,
) -> Result<WorkLedger> {
    check_local(rho_sa, h_s, h_a)?;
    let h_sa = Hermitian::local_sum(h_s, h_a);
    let thermal = gibbs_state(h_s, ctx)?.tensor(&gibbs_state(h_a, ctx)?);
    let w_sa = noneq_free_energy(rho_sa.state(), &h_sa, ctx)? - noneq_free_energy(&thermal, &h_sa, ctx)?;
    let w_s = isothermal_extractable_work(&rho_sa.marginal_s(), h_s, ctx)?.free_energy_form;
    let w_a = isothermal_extractable_work(&rho_sa.marginal_a(), h_a, ctx)?.free_energy_form;
    let kt_i = ctx.kt() * mutual_information(rho_sa);

    let mut ledger = WorkLedger::new();
    ledger.record("W_SA", w_sa, WorkKind::IsothermalBound);
    ledger.record("W_S", w_s, WorkKind::IsothermalBound);
    ledger.record("W_A", w_a, WorkKind::IsothermalBound);
    ledger.record("kT*I", kt_i, WorkKind::Gain);
    ledger.check("W_SA - (W_S + W_A + kT*I)", w_sa - (w_s + w_a + kt_i), ALGEBRAIC_TOL);
    Ok(ledger)
}

/// Shortfall of local feedback extraction with respect to joint extraction.
///
/// Entries: `W_S|A`, `W_A`, `W_SA`, `kT*D`, `deficit`.
pub fn discord_work_deficit(s: &FeedbackScenario, report: &CorrelationReport) -> Result<WorkLedger> {
    let feedback = feedback_extractable_work(s)?;
    let joint = joint_extractable_work(&s.rho_sa, &s.h_s, &s.h_a, &s.ctx)?;
    let w_s_given_a = feedback.value("W_S|pi").expect("recorded");
    let w_a = joint.value("W_A").expect("recorded");
    let w_sa = joint.value("W_SA").expect("recorded");
    let kt_d = s.ctx.kt() * report.discord;
    let deficit = w_sa - (w_s_given_a + w_a);

    let mut ledger = WorkLedger::new();
    ledger.record("W_S|A", w_s_given_a, WorkKind::IsothermalBound);
    ledger.record("W_A", w_a, WorkKind::IsothermalBound);
    ledger.record("W_SA", w_sa, WorkKind::IsothermalBound);
    ledger.record("kT*D", kt_d, WorkKind::Gain);
    ledger.record("deficit", deficit, WorkKind::Gain);
    ledger.check("deficit - kT*D", deficit - kt_d, SEARCH_TOL);
    Ok(ledger)
}

/// Average ancilla energy change caused by the unselective measurement.
pub fn measurement_cost(rho_sa: &Bipartite, h_a: &Hermitian, m: &ProjectiveMeasurement) -> Result<WorkValue> {
    check_dims(rho_sa.d_a(), h_a.dim())?;
    let probabilities: Vec<f64> = measure_ancilla(rho_sa, m)?.iter().map(|o| o.probability).collect();
    let dephased = m.dephased(&probabilities);
    let cost = h_a.expectation(&dephased) - h_a.expectation(&rho_sa.marginal_a());
    Ok(WorkValue::new(cost, WorkKind::Cost))
}

/// Free energy of the post-measurement joint state minus the initial one,
/// net of the measurement cost.
///
/// Entries: `dW_SA|pi`, `C`, `net`, `kT*[S_SA - <S_S|k>]`, `kT*[S_A - D]`.
pub fn net_measurement_gain(s: &FeedbackScenario, report: &CorrelationReport) -> Result<WorkLedger> {
    let h_sa = s.h_sa();
    let f_initial = noneq_free_energy(s.rho_sa.state(), &h_sa, &s.ctx)?;
    let outcomes = measure_ancilla(&s.rho_sa, &s.measurement)?;
    let mut f_after = 0.0;
    for (o, proj) in outcomes.iter().zip(s.measurement.projectors()) {
        if let Some(sigma) = &o.conditional {
            let branch = sigma.tensor(&Density::from_matrix_unchecked(proj.clone()));
            f_after += o.probability * noneq_free_energy(&branch, &h_sa, &s.ctx)?;
        }
    }
    let d_w = f_after - f_initial;
    let cost = measurement_cost(&s.rho_sa, &s.h_a, &s.measurement)?.value;
    let net = d_w - cost;
    let kt = s.ctx.kt();
    let entropy_form = kt * (von_neumann_entropy(s.rho_sa.state()) - average_conditional_entropy(&outcomes));
    let discord_form = kt * (von_neumann_entropy(&s.rho_sa.marginal_a()) - report.discord);

    let mut ledger = WorkLedger::new();
    ledger.record("dW_SA|pi", d_w, WorkKind::Gain);
    ledger.record("C", cost, WorkKind::Cost);
    ledger.record("net", net, WorkKind::Gain);
    ledger.record("kT*[S_SA - <S_S|k>]", entropy_form, WorkKind::Gain);
    ledger.record("kT*[S_A - D]", discord_form, WorkKind::Gain);
    ledger.check("net - kT*[S_SA - <S_S|k>]", net - entropy_form, ALGEBRAIC_TOL);
    ledger.check("net - kT*[S_A - D]", net - discord_form, SEARCH_TOL);
    ledger.check_nonnegative("net >= 0", net, SEARCH_TOL);
    Ok(ledger)
}

/// `rho'_SA = Σ_k p_k rho_S|k ⊗ Π_k`: quantum correlations removed,
/// classical ones kept.
pub fn decorrelation_target(rho_sa: &Bipartite, m: &ProjectiveMeasurement) -> Result<Bipartite> {
    let dim = rho_sa.d_s() * rho_sa.d_a();
    let mut acc = CMatrix::zeros(dim, dim);
    for (o, proj) in measure_ancilla(rho_sa, m)?.iter().zip(m.projectors()) {
        if let Some(sigma) = &o.conditional {
            acc += sigma.matrix().kronecker(proj) * crate::algebra::c(o.probability, 0.0);
        }
    }
    let trace = acc.trace().re;
    let state = Density::from_matrix_unchecked(acc * crate::algebra::c(1.0 / trace, 0.0));
    Bipartite::new(state, rho_sa.d_s(), rho_sa.d_a())
}

/// Work of the reversible stroke `rho_SA -> rho'_SA` (quench to
/// `-kT ln rho'`, isothermal drive, quench back).
///
/// Entries: `W_SA(rho)`, `W_SA(rho')`, `stroke`, `kT*D`, `W_in`,
/// `ancilla_marginal_shift`. The literal identity `stroke = kT*D` holds only
/// when the measurement leaves `rho_A` unchanged; the exact identity carries
/// the ancilla shift `W_A(rho_A) - W_A(rho'_A)`.
pub fn discord_stroke_work(
    rho_sa: &Bipartite,
    h_s: &Hermitian,
    h_a: &Hermitian,
    ctx: &ThermalContext,
    report: &CorrelationReport,
) -> Result<WorkLedger> {
    check_local(rho_sa, h_s, h_a)?;
    let m = &report.optimal_measurement;
    let target = decorrelation_target(rho_sa, m)?;
    let h_sa = Hermitian::local_sum(h_s, h_a);
    let w_initial = joint_work(rho_sa, &h_sa, ctx)?;
    let w_target = joint_work(&target, &h_sa, ctx)?;
    let stroke = w_initial - w_target;
    let kt_d = ctx.kt() * report.discord;

    let w_s = isothermal_extractable_work(&rho_sa.marginal_s(), h_s, ctx)?.free_energy_form;
    let w_a = isothermal_extractable_work(&rho_sa.marginal_a(), h_a, ctx)?.free_energy_form;
    let w_a_target = isothermal_extractable_work(&target.marginal_a(), h_a, ctx)?.free_energy_form;
    let w_in = w_s + w_a + ctx.kt() * report.classical_j;
    let shift = w_a - w_a_target;

    let mut ledger = WorkLedger::new();
    ledger.record("W_SA(rho)", w_initial, WorkKind::IsothermalBound);
    ledger.record("W_SA(rho')", w_target, WorkKind::IsothermalBound);
    ledger.record("stroke", stroke, WorkKind::IsothermalBound);
    ledger.record("kT*D", kt_d, WorkKind::Gain);
    ledger.record("W_in", w_in, WorkKind::IsothermalBound);
    ledger.record("ancilla_marginal_shift", shift, WorkKind::IsothermalBound);
    ledger.check("stroke - kT*D", stroke - kt_d, SEARCH_TOL);
    ledger.check(
        "stroke - kT*D - ancilla_marginal_shift",
        stroke - kt_d - shift,
        SEARCH_TOL,
    );
    Ok(ledger)
}

/// Total work budget with the `J`-optimal measurement, assembled from the
/// discord stroke, joint extraction from `rho'` and the measurement gain,
/// and compared with the closed form `W_S + W_A + kT*I + kT*S(rho_A)`.
///
/// Entries: `kT*D`, `W_SA(rho')`, `kT*S_A`, `net(rho')`, `stroke`,
/// `assembled`, `closed_form`, `stepwise`.
pub fn total_feedback_budget(
    rho_sa: &Bipartite,
    h_s: &Hermitian,
    h_a: &Hermitian,
    ctx: &ThermalContext,
    settings: &SearchSettings,
) -> Result<WorkLedger> {
    let (s, report) = FeedbackScenario::optimal(rho_sa.clone(), h_s.clone(), h_a.clone(), *ctx, settings)?;
    let kt = ctx.kt();
    let stroke = discord_stroke_work(rho_sa, h_s, h_a, ctx, &report)?;
    let target = decorrelation_target(rho_sa, &report.optimal_measurement)?;
    let joint_target = joint_extractable_work(&target, h_s, h_a, ctx)?;
    let joint = joint_extractable_work(rho_sa, h_s, h_a, ctx)?;

    // rho' is classical-quantum in the optimal basis, so that basis is also
    // optimal for it and its discord is zero up to rounding
    let target_scenario = FeedbackScenario::new(target.clone(), s.h_s, s.h_a, *ctx, s.measurement)?;
    let target_j = extracted_information(&target, &report.optimal_measurement)?;
    let target_report = CorrelationReport {
        mutual_information: mutual_information(&target),
        classical_j: target_j,
        discord: mutual_information(&target) - target_j,
        optimal_measurement: report.optimal_measurement.clone(),
        grid_gap: None,
        evaluations: 0,
    };
    let net_target = net_measurement_gain(&target_scenario, &target_report)?;

    let kt_d = kt * report.discord;
    let w_target = joint_target.value("W_SA").expect("recorded");
    let kt_s_a = kt * von_neumann_entropy(&rho_sa.marginal_a());
    let assembled = kt_d + w_target + kt_s_a;
    let closed_form = joint.value("W_S").expect("recorded")
        + joint.value("W_A").expect("recorded")
        + joint.value("kT*I").expect("recorded")
        + kt_s_a;

    let mut ledger = WorkLedger::new();
    ledger.record("kT*D", kt_d, WorkKind::Gain);
    ledger.record("W_SA(rho')", w_target, WorkKind::IsothermalBound);
    ledger.record("kT*S_A", kt_s_a, WorkKind::Gain);
    ledger.record("net(rho')", net_target.value("net").expect("recorded"), WorkKind::Gain);
    ledger.record(
        "stroke",
        stroke.value("stroke").expect("recorded"),
        WorkKind::IsothermalBound,
    );
    ledger.record("assembled", assembled, WorkKind::Budget);
    ledger.record("closed_form", closed_form, WorkKind::Budget);
    ledger.check("assembled - closed_form", assembled - closed_form, SEARCH_TOL);
    let stepwise = stroke.value("stroke").expect("recorded") + w_target + net_target.value("net").expect("recorded");
    ledger.record("stepwise", stepwise, WorkKind::Budget);
    // the stepwise sum is W_SA(rho) + kT*S(rho'_A) whatever the basis
    ledger.check(
        "stepwise - W_SA(rho) - kT*S(rho'_A)",
        stepwise - joint.value("W_SA").expect("recorded") - kt * von_neumann_entropy(&target.marginal_a()),
        ALGEBRAIC_TOL,
    );
    Ok(ledger)
}
