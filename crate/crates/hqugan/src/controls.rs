//! Control schedules, Hamiltonian model builders, and piecewise-constant
//! forward/backward propagation.
//!
//! Grid convention: the value in row `j` (0-indexed) holds on the interval
//! `[j·dt, (j+1)·dt)` and is sampled at the interval's left edge, so row 0
//! is the `t = 0` column that the generator keeps pinned.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qcore::{
    dagger, identity, kron, pauli, zeros, CMat, CVec, Observable, Pauli, QuantumState, StateData,
    expm_hermitian_i, hermiticity_deviation, HERMITICITY_TOL,
};

/// Piecewise-constant control fields ε_i(t_j) on an N-step grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSchedule {
    dt: f64,
    /// N×K: one row per time step, one column per control.
    values: Array2<f64>,
    /// Optional per-control amplitude interval, enforced by clamping.
    bounds: Option<Vec<(f64, f64)>>,
}

impl ControlSchedule {
    pub fn new(dt: f64, values: Array2<f64>, bounds: Option<Vec<(f64, f64)>>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::InvalidArgument(
                "schedule needs at least one step and one control".into(),
            ));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("control schedule values"));
        }
        if let Some(b) = &bounds {
            if b.len() != values.ncols() {
                return Err(Error::DimensionMismatch(format!(
                    "{} bounds for {} controls",
                    b.len(),
                    values.ncols()
                )));
            }
            for (k, &(lo, hi)) in b.iter().enumerate() {
                if !(lo < hi) {
                    return Err(Error::InvalidArgument(format!(
                        "empty bound interval [{lo}, {hi}] for control {k}"
                    )));
                }
                if values.column(k).iter().any(|&v| v < lo || v > hi) {
                    return Err(Error::InvalidArgument(format!(
                        "control {k} value outside bounds [{lo}, {hi}]"
                    )));
                }
            }
        }
        Ok(Self { dt, values, bounds })
    }

    pub fn n_steps(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_controls(&self) -> usize {
        self.values.ncols()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_total(&self) -> f64 {
        self.dt * self.n_steps() as f64
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn bounds(&self) -> Option<&[(f64, f64)]> {
        self.bounds.as_deref()
    }

    /// Replace the value grid, keeping dt and bounds; values are clamped
    /// into the bounds if any are set.
    pub fn with_values(&self, mut values: Array2<f64>) -> Result<Self> {
        if values.dim() != self.values.dim() {
            return Err(Error::DimensionMismatch(format!(
                "value grid {:?} does not match schedule {:?}",
                values.dim(),
                self.values.dim()
            )));
        }
        if let Some(b) = &self.bounds {
            for (k, &(lo, hi)) in b.iter().enumerate() {
                values.column_mut(k).mapv_inplace(|v| v.clamp(lo, hi));
            }
        }
        Self::new(self.dt, values, self.bounds.clone())
    }

    /// Attach (or replace) amplitude bounds, clamping existing values.
    pub fn with_bounds(&self, bounds: Option<Vec<(f64, f64)>>) -> Result<Self> {
        let mut values = self.values.clone();
        if let Some(b) = &bounds {
            if b.len() != values.ncols() {
                return Err(Error::DimensionMismatch(format!(
                    "{} bounds for {} controls",
                    b.len(),
                    values.ncols()
                )));
            }
            for (k, &(lo, hi)) in b.iter().enumerate() {
                values.column_mut(k).mapv_inplace(|v| v.clamp(lo, hi));
            }
        }
        Self::new(self.dt, values, bounds)
    }

    /// Grid times t_j = j·dt for j = 0..N−1 (left edges).
    pub fn grid_times(&self) -> Vec<f64> {
        (0..self.n_steps()).map(|j| j as f64 * self.dt).collect()
    }

    /// Linear interpolation of each control onto a finer grid with the
    /// same total duration. Original values are treated as nodes at
    /// `j/(N−1)` of the horizon, so endpoints are preserved exactly.
    pub fn resample_linear(&self, new_n: usize) -> Result<Self> {
        let n = self.n_steps();
        if new_n < n {
            return Err(Error::InvalidArgument(format!(
                "resample target {new_n} is coarser than the current {n} steps"
            )));
        }
        if new_n == n {
            return Ok(self.clone());
        }
        let k = self.n_controls();
        let mut out = Array2::zeros((new_n, k));
        for jn in 0..new_n {
            // Position in [0, 1] along the node axis.
            let u = if new_n == 1 {
                0.0
            } else {
                jn as f64 / (new_n - 1) as f64
            };
            let x = u * (n - 1) as f64;
            let j0 = (x.floor() as usize).min(n - 1);
            let j1 = (j0 + 1).min(n - 1);
            let w = x - j0 as f64;
            for c in 0..k {
                out[[jn, c]] = (1.0 - w) * self.values[[j0, c]] + w * self.values[[j1, c]];
            }
        }
        Self::new(self.t_total() / new_n as f64, out, self.bounds.clone())
    }

    /// Serialize as CSV with header `t, eps_1, ..., eps_K`, one row per
    /// grid point, 17 significant digits.
    pub fn to_csv<W: std::io::Write>(&self, writer: &mut W) -> Result<()> {
        write!(writer, "t")?;
        for k in 0..self.n_controls() {
            write!(writer, ", eps_{}", k + 1)?;
        }
        writeln!(writer)?;
        for j in 0..self.n_steps() {
            write!(writer, "{:.16e}", j as f64 * self.dt)?;
            for k in 0..self.n_controls() {
                write!(writer, ", {:.16e}", self.values[[j, k]])?;
            }
            writeln!(writer)?;
        }
        Ok(())
    }

    /// Parse the CSV format written by [`Self::to_csv`]. Bounds are not
    /// recorded in the file and come back as `None`.
    pub fn from_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let text = std::io::read_to_string(reader)?;
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty schedule CSV".into()))?;
        let n_controls = header.split(',').count().saturating_sub(1);
        if n_controls == 0 {
            return Err(Error::InvalidArgument("schedule CSV has no controls".into()));
        }
        let mut times = Vec::new();
        let mut rows: Vec<f64> = Vec::new();
        for line in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != n_controls + 1 {
                return Err(Error::InvalidArgument(format!(
                    "schedule CSV row has {} fields, expected {}",
                    fields.len(),
                    n_controls + 1
                )));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|e| Error::InvalidArgument(format!("bad float {s:?}: {e}")))
            };
            times.push(parse(fields[0])?);
            for f in &fields[1..] {
                rows.push(parse(f)?);
            }
        }
        let n = times.len();
        if n == 0 {
            return Err(Error::InvalidArgument("schedule CSV has no rows".into()));
        }
        let dt = if n == 1 { times[0].max(1.0) } else { times[1] - times[0] };
        let values = Array2::from_shape_vec((n, n_controls), rows)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Self::new(dt, values, None)
    }
}

/// Drift plus control operators on an n-qubit register.
#[derive(Debug, Clone)]
pub struct HamiltonianModel {
    n_qubits: usize,
    drift: CMat,
    controls: Vec<CMat>,
    /// For controls that are a single Pauli on a single qubit: the axis and
    /// target qubit, used by the shot-based rotation-insertion gradient.
    control_axis: Vec<Option<(Pauli, usize)>>,
}

impl HamiltonianModel {
    pub fn new(
        n_qubits: usize,
        drift: CMat,
        controls: Vec<CMat>,
        control_axis: Vec<Option<(Pauli, usize)>>,
    ) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if drift.dim() != (dim, dim) {
            return Err(Error::DimensionMismatch(format!(
                "drift is {:?}, expected {dim}×{dim}",
                drift.dim()
            )));
        }
        if control_axis.len() != controls.len() {
            return Err(Error::DimensionMismatch(
                "one axis entry per control required".into(),
            ));
        }
        for (k, c) in controls.iter().enumerate() {
            if c.dim() != (dim, dim) {
                return Err(Error::DimensionMismatch(format!(
                    "control {k} is {:?}, expected {dim}×{dim}",
                    c.dim()
                )));
            }
            let dev = hermiticity_deviation(c);
            if dev > HERMITICITY_TOL {
                return Err(Error::NotHermitian { max_dev: dev, tol: HERMITICITY_TOL });
            }
        }
        let dev = hermiticity_deviation(&drift);
        if dev > HERMITICITY_TOL {
            return Err(Error::NotHermitian { max_dev: dev, tol: HERMITICITY_TOL });
        }
        Ok(Self {
            n_qubits,
            drift,
            controls,
            control_axis,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_qubits
    }

    pub fn n_controls(&self) -> usize {
        self.controls.len()
    }

    pub fn drift(&self) -> &CMat {
        &self.drift
    }

    pub fn controls(&self) -> &[CMat] {
        &self.controls
    }

    pub fn control_axis(&self, index: usize) -> Option<(Pauli, usize)> {
        self.control_axis.get(index).copied().flatten()
    }

    /// `H(t_j) = H0 + Σ_i ε_i(t_j) H_i` for one row of schedule values.
    pub fn hamiltonian_at(&self, eps_row: &[f64]) -> Result<CMat> {
        if eps_row.len() != self.controls.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} control values for {} controls",
                eps_row.len(),
                self.controls.len()
            )));
        }
        let mut h = self.drift.clone();
        for (eps, hc) in eps_row.iter().zip(&self.controls) {
            h.zip_mut_with(hc, |a, b| *a += b * Complex64::new(*eps, 0.0));
        }
        Ok(h)
    }

    /// Step propagator `exp(−i·dt·H(t_j))`.
    pub fn step_unitary(&self, eps_row: &[f64], dt: f64) -> Result<CMat> {
        let h = self.hamiltonian_at(eps_row)?;
        expm_hermitian_i(&h, dt)
    }

    /// Lift to `I ⊗ H` on a doubled register, for propagating Choi states.
    /// Pauli axes shift to the second half of the register.
    pub fn lift_choi(&self) -> Result<Self> {
        let eye = identity(self.dim());
        let drift = kron(&eye, &self.drift);
        let controls: Vec<CMat> = self.controls.iter().map(|c| kron(&eye, c)).collect();
        let control_axis = self
            .control_axis
            .iter()
            .map(|a| a.map(|(p, q)| (p, q + self.n_qubits)))
            .collect();
        Self::new(2 * self.n_qubits, drift, controls, control_axis)
    }
}

/// LTFIM chain: drift `−J·Σ Z_i Z_{i+1}` (open boundaries) with local
/// `X_1..X_n, Z_1..Z_n` controls, 2n in total.
pub fn build_ltfim(n_qubits: usize, coupling: f64) -> Result<HamiltonianModel> {
    if n_qubits == 0 {
        return Err(Error::InvalidArgument("LTFIM needs at least one qubit".into()));
    }
    let dim = 1usize << n_qubits;
    let mut drift = zeros(dim);
    for i in 0..n_qubits.saturating_sub(1) {
        let zz = pauli(Pauli::Z, i, n_qubits)?.dot(&pauli(Pauli::Z, i + 1, n_qubits)?);
        drift.zip_mut_with(&zz, |a, b| *a -= b * Complex64::new(coupling, 0.0));
    }
    let mut controls = Vec::with_capacity(2 * n_qubits);
    let mut axes = Vec::with_capacity(2 * n_qubits);
    for i in 0..n_qubits {
        controls.push(pauli(Pauli::X, i, n_qubits)?);
        axes.push(Some((Pauli::X, i)));
    }
    for i in 0..n_qubits {
        controls.push(pauli(Pauli::Z, i, n_qubits)?);
        axes.push(Some((Pauli::Z, i)));
    }
    HamiltonianModel::new(n_qubits, drift, controls, axes)
}

/// Single-control variant: drift `−Σ Z_i Z_{i+1}`, one shared control
/// operator `Σ_i (X_i + Z_i)`. Used for bandwidth experiments.
pub fn build_single_control_ltfim(n_qubits: usize) -> Result<HamiltonianModel> {
    if n_qubits == 0 {
        return Err(Error::InvalidArgument("LTFIM needs at least one qubit".into()));
    }
    let dim = 1usize << n_qubits;
    let mut drift = zeros(dim);
    for i in 0..n_qubits.saturating_sub(1) {
        let zz = pauli(Pauli::Z, i, n_qubits)?.dot(&pauli(Pauli::Z, i + 1, n_qubits)?);
        drift.zip_mut_with(&zz, |a, b| *a -= b);
    }
    let mut control = zeros(dim);
    for i in 0..n_qubits {
        control.zip_mut_with(&pauli(Pauli::X, i, n_qubits)?, |a, b| *a += b);
        control.zip_mut_with(&pauli(Pauli::Z, i, n_qubits)?, |a, b| *a += b);
    }
    // Not a single-qubit Pauli: the rotation-insertion gradient does not
    // apply to this control.
    HamiltonianModel::new(n_qubits, drift, vec![control], vec![None])
}

/// Initial-pulse styles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialStyle {
    /// `sin(10 t/T)` on the X controls, `cos(10 t/T)` on the Z controls.
    Sinusoidal,
    /// All ones.
    Constant,
}

/// Default initial schedule for a model: sinusoidal shapes for the
/// 2n-control LTFIM layout, or a constant field.
pub fn default_initial_schedule(
    model: &HamiltonianModel,
    t_total: f64,
    n_steps: usize,
    style: InitialStyle,
) -> Result<ControlSchedule> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("schedule needs n_steps ≥ 1".into()));
    }
    let k = model.n_controls();
    let dt = t_total / n_steps as f64;
    let values = match style {
        InitialStyle::Constant => Array2::from_elem((n_steps, k), 1.0),
        InitialStyle::Sinusoidal => {
            let n = model.n_qubits();
            if k != 2 * n {
                return Err(Error::InvalidArgument(format!(
                    "sinusoidal initial pulses assume the 2n-control LTFIM layout, got {k} controls for {n} qubits"
                )));
            }
            Array2::from_shape_fn((n_steps, k), |(j, i)| {
                let phase = 10.0 * (j as f64 * dt) / t_total;
                if i < n {
                    phase.sin()
                } else {
                    phase.cos()
                }
            })
        }
    };
    ControlSchedule::new(dt, values, None)
}

/// Workspace of states produced by a forward sweep.
#[derive(Debug, Clone)]
pub struct PropagationLog {
    /// States after each step, including the t = 0 state; length N+1.
    pub forward_states: Vec<QuantumState>,
    /// Cached step unitaries (length N) when requested.
    pub step_unitaries: Option<Vec<CMat>>,
}

fn check_compat(model: &HamiltonianModel, schedule: &ControlSchedule) -> Result<()> {
    if schedule.n_controls() != model.n_controls() {
        return Err(Error::DimensionMismatch(format!(
            "schedule has {} controls, model has {}",
            schedule.n_controls(),
            model.n_controls()
        )));
    }
    Ok(())
}

/// Apply `U(t_j) = exp(−i·dt·H(t_j))` for j = 1..N in order.
///
/// Pure states stay vectors; density matrices are conjugated.
pub fn propagate(
    model: &HamiltonianModel,
    schedule: &ControlSchedule,
    initial: &QuantumState,
    keep_log: bool,
) -> Result<(QuantumState, Option<PropagationLog>)> {
    check_compat(model, schedule)?;
    if initial.dim() != model.dim() {
        return Err(Error::DimensionMismatch(format!(
            "initial state dim {} vs model dim {}",
            initial.dim(),
            model.dim()
        )));
    }
    let mut log = keep_log.then(|| PropagationLog {
        forward_states: vec![initial.clone()],
        step_unitaries: Some(Vec::with_capacity(schedule.n_steps())),
    });
    let mut state = initial.clone();
    for j in 0..schedule.n_steps() {
        let row: Vec<f64> = schedule.values().row(j).to_vec();
        let u = model.step_unitary(&row, schedule.dt())?;
        state = apply_unitary(&u, &state);
        if let Some(log) = log.as_mut() {
            log.forward_states.push(state.clone());
            if let Some(us) = log.step_unitaries.as_mut() {
                us.push(u);
            }
        }
    }
    Ok((state, log))
}

/// Apply a unitary to a state without re-validating invariants; the caller
/// guarantees `u` is unitary so norms are preserved.
pub fn apply_unitary(u: &CMat, state: &QuantumState) -> QuantumState {
    match state.data() {
        StateData::Pure(v) => {
            let w = u.dot(v);
            QuantumState::pure(renormalize(w)).expect("unitary preserves norm")
        }
        StateData::Density(m) => {
            let out = u.dot(m).dot(&dagger(u));
            // Re-symmetrize roundoff before revalidation.
            let dim = out.nrows();
            let sym = Array2::from_shape_fn((dim, dim), |(i, j)| {
                (out[[i, j]] + out[[j, i]].conj()) * 0.5
            });
            QuantumState::density(sym).expect("unitary conjugation preserves density invariants")
        }
    }
}

fn renormalize(mut v: CVec) -> CVec {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.mapv_inplace(|z| z / norm);
    }
    v
}

/// Heisenberg-picture observable at each grid point:
/// `D(t_j) = U_{j+1..N}† D U_{j+1..N}`, so the entry at j = N equals `D`.
/// Returns N+1 observables.
pub fn propagate_observable_backward(
    model: &HamiltonianModel,
    schedule: &ControlSchedule,
    observable: &Observable,
) -> Result<Vec<Observable>> {
    check_compat(model, schedule)?;
    if observable.dim() != model.dim() {
        return Err(Error::DimensionMismatch(format!(
            "observable dim {} vs model dim {}",
            observable.dim(),
            model.dim()
        )));
    }
    let n = schedule.n_steps();
    let mut out = vec![observable.clone()];
    let mut current = observable.matrix().clone();
    for j in (0..n).rev() {
        let row: Vec<f64> = schedule.values().row(j).to_vec();
        let u = model.step_unitary(&row, schedule.dt())?;
        current = dagger(&u).dot(&current).dot(&u);
        out.push(Observable::new(current.clone(), observable.norm_tag())?);
    }
    out.reverse();
    Ok(out)
}
