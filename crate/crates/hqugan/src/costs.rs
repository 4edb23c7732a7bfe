//! Cost functionals of the minimax game and their first-order gradients
//! with respect to the control values.
//!
//! Gradients use the adjoint formulation: one forward sweep for the states
//! ρ(t_j), one backward sweep for the Heisenberg-picture observable, O(N)
//! propagations in total. Entry (j, i) of the result is
//! `2·Δt·Im⟨a(t_j)|H_i|ψ(t_j)⟩`, which is the first-order-in-Δt propagator
//! derivative with the rotation inserted after U(t_j).

use ndarray::Array2;
use num_complex::Complex64;

use crate::controls::{ControlSchedule, HamiltonianModel};
use crate::error::{Error, Result};
use crate::qcore::{
    dagger, identity, max_abs_diff, real_part_checked, CMat, CVec, Observable, QuantumState,
};

/// Which scalar objective the generator is minimizing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    /// `Tr(D(ρ − σ))`.
    TraceSigned,
    /// `|Tr(D(ρ − σ))|²`.
    AbsSquared,
    /// Sum of `AbsSquared` terms over input/target pairs sharing one
    /// generator unitary.
    MultiPair,
    /// `AbsSquared` against a Choi target state on the doubled register.
    ChoiAbsSquared,
}

/// One input/target pair for unitary learning; pair k is scored by the
/// discriminator in slot k.
#[derive(Debug, Clone)]
pub struct PairSpec {
    pub input: QuantumState,
    pub target: QuantumState,
}

/// Cost-function specification for a generator optimization.
#[derive(Debug, Clone)]
pub struct CostSpec {
    pub kind: CostKind,
    /// Weight of the bandwidth penalty; 0 disables it.
    pub penalty_alpha: f64,
    pub pairs: Option<Vec<PairSpec>>,
}

impl CostSpec {
    pub fn new(kind: CostKind, penalty_alpha: f64) -> Result<Self> {
        if !(penalty_alpha >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "penalty_alpha must be ≥ 0, got {penalty_alpha}"
            )));
        }
        Ok(Self {
            kind,
            penalty_alpha,
            pairs: None,
        })
    }

    pub fn with_pairs(kind: CostKind, penalty_alpha: f64, pairs: Vec<PairSpec>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidArgument(
                "multi-pair cost needs at least one pair".into(),
            ));
        }
        let mut spec = Self::new(kind, penalty_alpha)?;
        spec.pairs = Some(pairs);
        Ok(spec)
    }
}

/// Main term and penalty term of an evaluated cost.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct CostValue {
    pub total: f64,
    pub main_term: f64,
    pub penalty_term: f64,
}

impl CostValue {
    pub fn new(main_term: f64, penalty_term: f64) -> Self {
        Self {
            total: main_term + penalty_term,
            main_term,
            penalty_term,
        }
    }
}

/// `Tr(D(ρ − σ))` as a real number.
pub fn cost_trace_signed(
    d: &Observable,
    rho: &QuantumState,
    sigma: &QuantumState,
) -> Result<f64> {
    Ok(d.expectation(rho)? - d.expectation(sigma)?)
}

/// `|Tr(D(ρ − σ))|²`.
pub fn cost_abs_squared(d: &Observable, rho: &QuantumState, sigma: &QuantumState) -> Result<f64> {
    let e = cost_trace_signed(d, rho, sigma)?;
    Ok(e * e)
}

/// Bandwidth penalty `α Σ_{i,j} |ε_i(t_j) − ε_i(t_{j−1})|²`, no wraparound.
pub fn penalty_bandwidth(schedule: &ControlSchedule, alpha: f64) -> f64 {
    if alpha == 0.0 {
        return 0.0;
    }
    let v = schedule.values();
    let mut sum = 0.0;
    for i in 0..schedule.n_controls() {
        for j in 1..schedule.n_steps() {
            let diff = v[[j, i]] - v[[j - 1, i]];
            sum += diff * diff;
        }
    }
    alpha * sum
}

/// Gradient of [`penalty_bandwidth`] with free boundaries.
pub fn penalty_gradient(schedule: &ControlSchedule, alpha: f64) -> Array2<f64> {
    let n = schedule.n_steps();
    let k = schedule.n_controls();
    let mut grad = Array2::zeros((n, k));
    if alpha == 0.0 {
        return grad;
    }
    let v = schedule.values();
    for i in 0..k {
        for j in 0..n {
            let mut g = 0.0;
            if j >= 1 {
                g += 2.0 * (v[[j, i]] - v[[j - 1, i]]);
            }
            if j + 1 < n {
                g -= 2.0 * (v[[j + 1, i]] - v[[j, i]]);
            }
            grad[[j, i]] = alpha * g;
        }
    }
    grad
}

/// One weighted pure-state trajectory of a trace objective.
pub struct TraceTerm {
    pub initial: CVec,
    pub weight: f64,
}

/// Value and gradient of `Σ_k w_k ⟨ψ_k(T)|D|ψ_k(T)⟩` over the schedule.
///
/// This is the workhorse behind every gradient in the crate: the generator
/// costs use a single trajectory, the pulse-based discriminator uses two
/// (weights ±1), and multi-pair objectives call it once per pair.
pub fn trace_objective_gradient(
    model: &HamiltonianModel,
    schedule: &ControlSchedule,
    d_matrix: &CMat,
    terms: &[TraceTerm],
) -> Result<(f64, Array2<f64>)> {
    let n = schedule.n_steps();
    let k = schedule.n_controls();
    if schedule.n_controls() != model.n_controls() {
        return Err(Error::DimensionMismatch(format!(
            "schedule has {} controls, model has {}",
            schedule.n_controls(),
            model.n_controls()
        )));
    }
    if d_matrix.nrows() != model.dim() {
        return Err(Error::DimensionMismatch(format!(
            "observable dim {} vs model dim {}",
            d_matrix.nrows(),
            model.dim()
        )));
    }
    let dt = schedule.dt();
    let mut value = 0.0;
    let mut grad: Array2<f64> = Array2::zeros((n, k));
    for term in terms {
        if term.initial.len() != model.dim() {
            return Err(Error::DimensionMismatch(
                "trajectory initial state dim mismatch".into(),
            ));
        }
        // Forward sweep, caching states and step unitaries.
        let mut forward: Vec<CVec> = Vec::with_capacity(n + 1);
        let mut unitaries: Vec<CMat> = Vec::with_capacity(n);
        forward.push(term.initial.clone());
        for j in 0..n {
            let row: Vec<f64> = schedule.values().row(j).to_vec();
            let u = model.step_unitary(&row, dt)?;
            let next = u.dot(forward.last().unwrap());
            forward.push(next);
            unitaries.push(u);
        }
        let final_state = forward.last().unwrap();
        let d_psi = d_matrix.dot(final_state);
        let expect: Complex64 = final_state
            .iter()
            .zip(d_psi.iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        value += term.weight * real_part_checked(expect, "trace objective")?;

        // Backward sweep with the adjoint vector a(t_j) = U_{>j}† D ψ(T).
        let mut adjoint = d_psi;
        for j in (0..n).rev() {
            let state = &forward[j + 1];
            for i in 0..k {
                let h_psi = model.controls()[i].dot(state);
                let inner: Complex64 = adjoint
                    .iter()
                    .zip(h_psi.iter())
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                grad[[j, i]] += term.weight * 2.0 * dt * inner.im;
            }
            adjoint = dagger(&unitaries[j]).dot(&adjoint);
        }
    }
    if !value.is_finite() || !grad.iter().all(|g| g.is_finite()) {
        return Err(Error::NonFinite("trace objective gradient"));
    }
    Ok((value, grad))
}

/// Cost and exact-simulation first-order gradient of the generator
/// objective for a pure initial state.
///
/// `AbsSquared` applies the chain-rule prefactor `2·Tr(D(ρ(T)−σ))` to the
/// signed-trace gradient; the bandwidth-penalty gradient is added when
/// `penalty_alpha > 0`; row 0 (the t = 0 column) is zeroed when `pin_t0`
/// is set, after the penalty contribution is accumulated.
pub fn gradient_first_order(
    model: &HamiltonianModel,
    schedule: &ControlSchedule,
    d: &Observable,
    sigma: &QuantumState,
    spec: &CostSpec,
    initial: &QuantumState,
    pin_t0: bool,
) -> Result<(CostValue, Array2<f64>)> {
    let psi0 = initial
        .as_pure()
        .ok_or_else(|| Error::InvalidState("generator gradient needs a pure initial state".into()))?;
    let sigma_expect = d.expectation(sigma)?;
    let (rho_expect, base_grad) = trace_objective_gradient(
        model,
        schedule,
        d.matrix(),
        &[TraceTerm {
            initial: psi0.clone(),
            weight: 1.0,
        }],
    )?;
    let e = rho_expect - sigma_expect;
    let (main, mut grad) = match spec.kind {
        CostKind::TraceSigned => (e, base_grad),
        CostKind::AbsSquared | CostKind::ChoiAbsSquared => {
            (e * e, base_grad.mapv(|g| 2.0 * e * g))
        }
        CostKind::MultiPair => {
            return Err(Error::InvalidArgument(
                "multi-pair gradients go through gradient_multipair".into(),
            ))
        }
    };
    let penalty = penalty_bandwidth(schedule, spec.penalty_alpha);
    if spec.penalty_alpha > 0.0 {
        grad += &penalty_gradient(schedule, spec.penalty_alpha);
    }
    if pin_t0 {
        grad.row_mut(0).fill(0.0);
    }
    Ok((CostValue::new(main, penalty), grad))
}

/// Sum of `AbsSquared` terms over the spec's pairs, one discriminator per
/// pair, all sharing the generator unitary of `schedule`.
pub fn cost_multipair(
    spec: &CostSpec,
    model: &HamiltonianModel,
    schedule: &ControlSchedule,
    discriminators: &[Observable],
) -> Result<f64> {
    let (value, _) = multipair_value_and_gradient(spec, model, schedule, discriminators, false)?;
    Ok(value)
}

/// Value and gradient of the multi-pair objective.
pub fn gradient_multipair(
    spec: &CostSpec,
    model: &HamiltonianModel,
    schedule: &ControlSchedule,
    discriminators: &[Observable],
    pin_t0: bool,
) -> Result<(CostValue, Array2<f64>)> {
    let (main, grad) = multipair_value_and_gradient(spec, model, schedule, discriminators, true)?;
    let mut grad = grad.expect("gradient requested");
    let penalty = penalty_bandwidth(schedule, spec.penalty_alpha);
    if spec.penalty_alpha > 0.0 {
        grad += &penalty_gradient(schedule, spec.penalty_alpha);
    }
    if pin_t0 {
        grad.row_mut(0).fill(0.0);
    }
    Ok((CostValue::new(main, penalty), grad))
}

fn multipair_value_and_gradient(
    spec: &CostSpec,
    model: &HamiltonianModel,
    schedule: &ControlSchedule,
    discriminators: &[Observable],
    with_gradient: bool,
) -> Result<(f64, Option<Array2<f64>>)> {
    let pairs = spec
        .pairs
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("multi-pair cost without pairs".into()))?;
    if pairs.len() != discriminators.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} pairs vs {} discriminators",
            pairs.len(),
            discriminators.len()
        )));
    }
    let mut total = 0.0;
    let mut grad = with_gradient.then(|| Array2::zeros((schedule.n_steps(), schedule.n_controls())));
    for (pair, d) in pairs.iter().zip(discriminators) {
        let psi0 = pair.input.as_pure().ok_or_else(|| {
            Error::InvalidState("multi-pair cost needs pure input states".into())
        })?;
        let sigma_expect = d.expectation(&pair.target)?;
        if with_gradient {
            let (rho_expect, pair_grad) = trace_objective_gradient(
                model,
                schedule,
                d.matrix(),
                &[TraceTerm {
                    initial: psi0.clone(),
                    weight: 1.0,
                }],
            )?;
            let e = rho_expect - sigma_expect;
            total += e * e;
            let g = grad.as_mut().expect("gradient accumulator");
            g.zip_mut_with(&pair_grad, |acc, &p| *acc += 2.0 * e * p);
        } else {
            let (out, _) = crate::controls::propagate(model, schedule, &pair.input, false)?;
            let e = d.expectation(&out)? - sigma_expect;
            total += e * e;
        }
    }
    Ok((total, grad))
}

/// Choi state `(I ⊗ U)|Ω⟩` of a unitary, with `|Ω⟩ = 2^{−n/2} Σ_b |b⟩|b⟩`.
pub fn choi_state(u: &CMat) -> Result<QuantumState> {
    let dim = u.nrows();
    if u.ncols() != dim {
        return Err(Error::DimensionMismatch("Choi state needs a square matrix".into()));
    }
    let udu = dagger(u).dot(u);
    let dev = max_abs_diff(&udu, &identity(dim));
    if dev > 1e-8 {
        return Err(Error::NotUnitary { max_dev: dev });
    }
    let scale = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
    let mut v = ndarray::Array1::from_elem(dim * dim, Complex64::new(0.0, 0.0));
    for b in 0..dim {
        for c in 0..dim {
            // amplitude of |b⟩|c⟩ = 2^{−n/2} U[c, b]
            v[b * dim + c] = scale * u[[c, b]];
        }
    }
    QuantumState::pure(v)
}

/// Bell pair register `|Ω⟩⟨Ω|`-ready maximally entangled state for n qubits
/// per factor, i.e. the Choi state of the identity.
pub fn bell_omega(n_qubits: usize) -> Result<QuantumState> {
    choi_state(&identity(1 << n_qubits))
}
