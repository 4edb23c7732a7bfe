//! Dense complex linear algebra and qubit-register primitives.
//!
//! Everything downstream (propagation, cost gradients, discriminators)
//! works with row-major `ndarray` matrices of `Complex64`. Registers are
//! small (≤ 10 qubits), so all operators are dense and the matrix
//! exponential goes through a Hermitian eigendecomposition rather than
//! Padé scaling-and-squaring.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

/// Dense complex matrix, row-major.
pub type CMat = Array2<Complex64>;
/// Dense complex vector.
pub type CVec = Array1<Complex64>;

/// Tolerance for Hermiticity checks.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Tolerance for state normalization checks.
pub const STATE_TOL: f64 = 1e-10;
/// Eigenvalues inside `±EIG_CUTOFF` belong to neither the strictly
/// positive nor the strictly negative eigenspace.
pub const EIG_CUTOFF: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Single-qubit Pauli label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    /// The 2×2 matrix for this label.
    pub fn matrix(self) -> CMat {
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::I => ndarray::array![[ONE, ZERO], [ZERO, ONE]],
            Pauli::X => ndarray::array![[ZERO, ONE], [ONE, ZERO]],
            Pauli::Y => ndarray::array![[ZERO, -i], [i, ZERO]],
            Pauli::Z => ndarray::array![[ONE, ZERO], [ZERO, -ONE]],
        }
    }
}

/// Identity matrix of the given dimension.
pub fn identity(dim: usize) -> CMat {
    Array2::from_diag_elem(dim, ONE)
}

/// All-zero matrix of the given dimension.
pub fn zeros(dim: usize) -> CMat {
    Array2::from_elem((dim, dim), ZERO)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::from_elem((ar * br, ac * bc), ZERO);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            if aij == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = aij * b[[k, l]];
                }
            }
        }
    }
    out
}

/// Conjugate transpose.
pub fn dagger(m: &CMat) -> CMat {
    let (r, c) = m.dim();
    Array2::from_shape_fn((c, r), |(i, j)| m[[j, i]].conj())
}

/// Trace of a square matrix.
pub fn trace(m: &CMat) -> Complex64 {
    m.diag().sum()
}

/// Largest absolute entry of `a − b`.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Largest absolute entry.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

fn check_finite(m: &CMat, ctx: &'static str) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(ctx))
    }
}

/// Maximum deviation from Hermiticity, `max |M − M†|`.
pub fn hermiticity_deviation(m: &CMat) -> f64 {
    let (r, c) = m.dim();
    if r != c {
        return f64::INFINITY;
    }
    let mut dev: f64 = 0.0;
    for i in 0..r {
        for j in i..c {
            dev = dev.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    dev
}

fn check_hermitian(m: &CMat, tol: f64) -> Result<()> {
    check_finite(m, "hermiticity check")?;
    let dev = hermiticity_deviation(m);
    if dev <= tol {
        Ok(())
    } else {
        Err(Error::NotHermitian { max_dev: dev, tol })
    }
}

/// Tensor product with the named Pauli at `qubit` and identity elsewhere.
///
/// Qubit 0 is the leftmost (most significant) tensor factor.
pub fn pauli(label: Pauli, qubit: usize, n_qubits: usize) -> Result<CMat> {
    if n_qubits == 0 {
        return Err(Error::InvalidArgument("n_qubits must be ≥ 1".into()));
    }
    if qubit >= n_qubits {
        return Err(Error::InvalidArgument(format!(
            "qubit index {qubit} out of range for {n_qubits} qubits"
        )));
    }
    let mut out = identity(1);
    for slot in 0..n_qubits {
        let factor = if slot == qubit {
            label.matrix()
        } else {
            Pauli::I.matrix()
        };
        out = kron(&out, &factor);
    }
    Ok(out)
}

fn to_nalgebra(m: &CMat) -> nalgebra::DMatrix<Complex64> {
    let (r, c) = m.dim();
    nalgebra::DMatrix::from_fn(r, c, |i, j| m[[i, j]])
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as columns.
pub fn eigh(h: &CMat) -> Result<(Vec<f64>, CMat)> {
    let (r, c) = h.dim();
    if r != c {
        return Err(Error::DimensionMismatch(format!(
            "eigh expects a square matrix, got {r}×{c}"
        )));
    }
    check_hermitian(h, HERMITICITY_TOL)?;
    // Symmetrize before handing off so roundoff asymmetry cannot leak
    // into the decomposition.
    let sym = Array2::from_shape_fn((r, r), |(i, j)| (h[[i, j]] + h[[j, i]].conj()) * 0.5);
    let eig = to_nalgebra(&sym).symmetric_eigen();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = Array2::from_shape_fn((r, r), |(i, j)| eig.eigenvectors[(i, order[j])]);
    Ok((values, vectors))
}

/// `exp(−i · scale · H)` for Hermitian `H`, via eigendecomposition.
pub fn expm_hermitian_i(h: &CMat, scale: f64) -> Result<CMat> {
    let (values, vectors) = eigh(h)?;
    // U = V · diag(e^{−i·scale·λ}) · V†
    let mut scaled = vectors.clone();
    for (k, &lambda) in values.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, -scale * lambda);
        scaled.column_mut(k).mapv_inplace(|z| z * phase);
    }
    Ok(scaled.dot(&dagger(&vectors)))
}

/// Spectral norm (largest |eigenvalue|) of a Hermitian matrix.
pub fn spectral_norm(h: &CMat) -> Result<f64> {
    let (values, _) = eigh(h)?;
    Ok(values.iter().fold(0.0f64, |acc, &v| acc.max(v.abs())))
}

/// Schatten-p norm of a Hermitian matrix; `p = ∞` gives the spectral norm.
pub fn schatten_norm(h: &CMat, p: f64) -> Result<f64> {
    if p < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "Schatten index must be ≥ 1, got {p}"
        )));
    }
    let (values, _) = eigh(h)?;
    if p.is_infinite() {
        Ok(values.iter().fold(0.0f64, |acc, &v| acc.max(v.abs())))
    } else {
        Ok(values
            .iter()
            .map(|v| v.abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p))
    }
}

/// Principal square root of a positive semidefinite Hermitian matrix.
///
/// Eigenvalues below `1e-12 · λ_max` are clipped to zero so that roundoff
/// noise in a rank-deficient input does not get amplified by the root.
pub fn sqrtm_psd(h: &CMat) -> Result<CMat> {
    let (values, vectors) = eigh(h)?;
    let lambda_max = values.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
    let cutoff = 1e-12 * lambda_max;
    let mut scaled = vectors.clone();
    for (k, &lambda) in values.iter().enumerate() {
        let clipped = if lambda <= cutoff { 0.0 } else { lambda };
        let root = Complex64::new(clipped.sqrt(), 0.0);
        scaled.column_mut(k).mapv_inplace(|z| z * root);
    }
    Ok(scaled.dot(&dagger(&vectors)))
}

/// Pure state vector or density matrix on an n-qubit register.
#[derive(Debug, Clone)]
pub enum StateData {
    Pure(CVec),
    Density(CMat),
}

/// A validated quantum state.
#[derive(Debug, Clone)]
pub struct QuantumState {
    n_qubits: usize,
    data: StateData,
}

fn qubits_for_dim(dim: usize, what: &str) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::InvalidState(format!(
            "{what} dimension {dim} is not a power of two"
        )));
    }
    Ok(dim.trailing_zeros() as usize)
}

impl QuantumState {
    /// Wrap a pure state vector; the Euclidean norm must be 1 within 1e-10.
    pub fn pure(v: CVec) -> Result<Self> {
        let n_qubits = qubits_for_dim(v.len(), "state vector")?;
        if !v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite("state vector"));
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "pure state norm {norm} deviates from 1 beyond {STATE_TOL:e}"
            )));
        }
        Ok(Self {
            n_qubits,
            data: StateData::Pure(v),
        })
    }

    /// Wrap a density matrix; must be Hermitian, unit trace, and positive
    /// semidefinite within 1e-10.
    pub fn density(m: CMat) -> Result<Self> {
        let (r, c) = m.dim();
        if r != c {
            return Err(Error::DimensionMismatch(format!(
                "density matrix must be square, got {r}×{c}"
            )));
        }
        let n_qubits = qubits_for_dim(r, "density matrix")?;
        check_hermitian(&m, HERMITICITY_TOL)?;
        let tr = trace(&m);
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix trace {tr} deviates from 1"
            )));
        }
        let (values, _) = eigh(&m)?;
        if let Some(&min) = values.first() {
            if min < -STATE_TOL {
                return Err(Error::InvalidState(format!(
                    "density matrix has negative eigenvalue {min:.3e}"
                )));
            }
        }
        Ok(Self {
            n_qubits,
            data: StateData::Density(m),
        })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis_state(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        let mut v = Array1::from_elem(dim, ZERO);
        v[index] = ONE;
        Self::pure(v)
    }

    /// `|1⟩^⊗n`, the ground state of the Ising drift with positive Z fields.
    pub fn all_ones(n_qubits: usize) -> Result<Self> {
        Self::basis_state(n_qubits, (1usize << n_qubits) - 1)
    }

    /// Rotated GHZ state `cosθ|0…0⟩ + sinθ|1…1⟩`.
    pub fn ghz_rotated(n_qubits: usize, theta: f64) -> Result<Self> {
        let dim = 1usize << n_qubits;
        let mut v = Array1::from_elem(dim, ZERO);
        v[0] = Complex64::new(theta.cos(), 0.0);
        v[dim - 1] = Complex64::new(theta.sin(), 0.0);
        Self::pure(v)
    }

    /// The n-qubit GHZ state `(|0…0⟩ + |1…1⟩)/√2`.
    pub fn ghz(n_qubits: usize) -> Result<Self> {
        Self::ghz_rotated(n_qubits, std::f64::consts::FRAC_PI_4)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_qubits
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.data, StateData::Pure(_))
    }

    /// The state vector, if pure.
    pub fn as_pure(&self) -> Option<&CVec> {
        match &self.data {
            StateData::Pure(v) => Some(v),
            StateData::Density(_) => None,
        }
    }

    pub fn data(&self) -> &StateData {
        &self.data
    }

    /// Density-matrix view: `|ψ⟩⟨ψ|` for pure states, the matrix itself
    /// otherwise.
    pub fn to_density(&self) -> CMat {
        match &self.data {
            StateData::Pure(v) => {
                let dim = v.len();
                Array2::from_shape_fn((dim, dim), |(i, j)| v[i] * v[j].conj())
            }
            StateData::Density(m) => m.clone(),
        }
    }
}

/// Haar-ish random pure state (normalized complex Gaussian amplitudes).
pub fn random_pure_state<R: Rng>(n_qubits: usize, rng: &mut R) -> QuantumState {
    let dim = 1usize << n_qubits;
    let mut v: CVec = Array1::from_shape_fn(dim, |_| {
        Complex64::new(gaussian(rng), gaussian(rng))
    });
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.mapv_inplace(|z| z / norm);
    QuantumState::pure(v).expect("normalized by construction")
}

/// Random Hermitian matrix with O(1) entries.
pub fn random_hermitian<R: Rng>(dim: usize, rng: &mut R) -> CMat {
    let mut m = Array2::from_elem((dim, dim), ZERO);
    for i in 0..dim {
        m[[i, i]] = Complex64::new(gaussian(rng), 0.0);
        for j in (i + 1)..dim {
            let z = Complex64::new(gaussian(rng), gaussian(rng));
            m[[i, j]] = z;
            m[[j, i]] = z.conj();
        }
    }
    m
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; avoids pulling in rand_distr for one distribution.
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Norm-constraint tag attached to a measurement operator.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum NormTag {
    /// `‖D‖_p ≤ 1` for the given Schatten index (∞ allowed).
    SchattenP(f64),
    /// Quantum Lipschitz ball `‖D‖_L ≤ 1`.
    Lipschitz,
    Unconstrained,
}

/// Hermitian measurement operator with its norm-constraint tag.
#[derive(Debug, Clone)]
pub struct Observable {
    matrix: CMat,
    norm_tag: NormTag,
}

impl Observable {
    /// Validate Hermiticity (1e-10) and, for `SchattenP(p)`, that the
    /// Schatten-p norm does not exceed 1 + 1e-8.
    pub fn new(matrix: CMat, norm_tag: NormTag) -> Result<Self> {
        check_hermitian(&matrix, HERMITICITY_TOL)?;
        if let NormTag::SchattenP(p) = norm_tag {
            let norm = schatten_norm(&matrix, p)?;
            if norm > 1.0 + 1e-8 {
                return Err(Error::InvalidArgument(format!(
                    "Schatten-{p} norm {norm} exceeds the unit ball"
                )));
            }
        }
        Ok(Self { matrix, norm_tag })
    }

    /// The zero operator on `n_qubits`; the game loop reads it as an
    /// equilibrium signal.
    pub fn zero(n_qubits: usize, norm_tag: NormTag) -> Self {
        Self {
            matrix: zeros(1 << n_qubits),
            norm_tag,
        }
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn norm_tag(&self) -> NormTag {
        self.norm_tag
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_zero(&self) -> bool {
        max_abs(&self.matrix) == 0.0
    }

    /// `Tr(D ρ)`, discarding the O(1e-10) imaginary residue.
    pub fn expectation(&self, state: &QuantumState) -> Result<f64> {
        if self.dim() != state.dim() {
            return Err(Error::DimensionMismatch(format!(
                "observable dim {} vs state dim {}",
                self.dim(),
                state.dim()
            )));
        }
        match state.data() {
            StateData::Pure(v) => {
                let dv = self.matrix.dot(v);
                let val: Complex64 = v.iter().zip(dv.iter()).map(|(a, b)| a.conj() * b).sum();
                real_part_checked(val, "observable expectation")
            }
            StateData::Density(m) => {
                real_part_checked(trace(&self.matrix.dot(m)), "observable expectation")
            }
        }
    }
}

/// Take the real part after verifying `|imag| ≤ 1e-8`; a larger residue
/// signals a non-Hermitian bug upstream.
pub fn real_part_checked(z: Complex64, ctx: &'static str) -> Result<f64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::NonFinite(ctx));
    }
    if z.im.abs() > 1e-8 {
        return Err(Error::InvalidArgument(format!(
            "{ctx}: imaginary residue {:.3e} exceeds 1e-8",
            z.im
        )));
    }
    Ok(z.re)
}

/// Uhlmann fidelity between two states, in [0, 1].
///
/// Pure/pure pairs reduce to the squared overlap `|⟨a|b⟩|²`; any mixed
/// operand goes through `(Tr√(√a b √a))²`.
pub fn fidelity(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    if a.n_qubits() != b.n_qubits() {
        return Err(Error::DimensionMismatch(format!(
            "fidelity between {}-qubit and {}-qubit states",
            a.n_qubits(),
            b.n_qubits()
        )));
    }
    let f = match (a.data(), b.data()) {
        (StateData::Pure(u), StateData::Pure(v)) => {
            let overlap: Complex64 = u.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum();
            overlap.norm_sqr()
        }
        (StateData::Pure(u), StateData::Density(m))
        | (StateData::Density(m), StateData::Pure(u)) => {
            let mu = m.dot(u);
            let val: Complex64 = u.iter().zip(mu.iter()).map(|(x, y)| x.conj() * y).sum();
            real_part_checked(val, "fidelity")?
        }
        (StateData::Density(x), StateData::Density(y)) => {
            // Tr√(√x y √x) equals the nuclear norm of √x·√y; singular
            // values don't suffer the √-of-roundoff amplification that
            // eigenvalues of the sandwiched product do.
            let product = sqrtm_psd(x)?.dot(&sqrtm_psd(y)?);
            let svd = to_nalgebra(&product).svd(false, false);
            let tr_sqrt: f64 = svd.singular_values.iter().sum();
            tr_sqrt * tr_sqrt
        }
    };
    Ok(f.clamp(0.0, 1.0))
}

/// Optimal Schatten-p discrimination operator `D* = 2^{−1/p}(P₊ − P₋)`
/// built from the eigenspaces of `ρ − σ`.
///
/// Returns the zero operator when `ρ = σ` within 1e-10 (equilibrium).
pub fn helstrom_operator(rho: &QuantumState, sigma: &QuantumState, p: f64) -> Result<Observable> {
    if rho.n_qubits() != sigma.n_qubits() {
        return Err(Error::DimensionMismatch(
            "helstrom operator on states of different size".into(),
        ));
    }
    if p < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "Schatten index must be in [1, ∞], got {p}"
        )));
    }
    let delta = rho.to_density() - sigma.to_density();
    if max_abs(&delta) < EIG_CUTOFF {
        return Ok(Observable::zero(rho.n_qubits(), NormTag::SchattenP(p)));
    }
    let scale = if p.is_infinite() {
        1.0
    } else {
        2f64.powf(-1.0 / p)
    };
    let (values, vectors) = eigh(&delta)?;
    let dim = values.len();
    let mut d = zeros(dim);
    for (k, &lambda) in values.iter().enumerate() {
        let sign = if lambda > EIG_CUTOFF {
            1.0
        } else if lambda < -EIG_CUTOFF {
            -1.0
        } else {
            continue;
        };
        let col = vectors.column(k);
        let w = Complex64::new(sign * scale, 0.0);
        for i in 0..dim {
            for j in 0..dim {
                d[[i, j]] += w * col[i] * col[j].conj();
            }
        }
    }
    // Rank > 2 differences (mixed inputs) can exceed the unit p-ball;
    // tag them honestly.
    let tag = if schatten_norm(&d, p)? <= 1.0 + 1e-8 {
        NormTag::SchattenP(p)
    } else {
        NormTag::Unconstrained
    };
    Observable::new(d, tag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pauli_z_single_qubit() {
        let z = pauli(Pauli::Z, 0, 1).unwrap();
        assert_eq!(z[[0, 0]], ONE);
        assert_eq!(z[[1, 1]], -ONE);
        assert_eq!(z[[0, 1]], ZERO);
    }

    #[test]
    fn pauli_x_on_second_qubit_is_ix() {
        let m = pauli(Pauli::X, 1, 2).unwrap();
        let expected = kron(&Pauli::I.matrix(), &Pauli::X.matrix());
        assert!(max_abs_diff(&m, &expected) < 1e-15);
    }

    #[test]
    fn pauli_involution() {
        let y = pauli(Pauli::Y, 0, 2).unwrap();
        let sq = y.dot(&y);
        assert!(max_abs_diff(&sq, &identity(4)) < 1e-14);
    }

    #[test]
    fn pauli_rejects_out_of_range_qubit() {
        assert!(pauli(Pauli::X, 2, 2).is_err());
        assert!(pauli(Pauli::X, 0, 0).is_err());
    }

    #[test]
    fn expm_x_half_pi_is_minus_i_x() {
        let x = Pauli::X.matrix();
        let u = expm_hermitian_i(&x, std::f64::consts::FRAC_PI_2).unwrap();
        let minus_ix = x.mapv(|z| z * Complex64::new(0.0, -1.0));
        assert!(max_abs_diff(&u, &minus_ix) < 1e-12);
    }

    #[test]
    fn expm_zero_is_identity() {
        let h = zeros(4);
        let u = expm_hermitian_i(&h, 3.7).unwrap();
        assert!(max_abs_diff(&u, &identity(4)) < 1e-14);
    }

    #[test]
    fn expm_diagonal_phases() {
        let z = Pauli::Z.matrix();
        let u = expm_hermitian_i(&z, 0.1).unwrap();
        assert_relative_eq!(u[[0, 0]].re, (0.1f64).cos(), epsilon = 1e-12);
        assert_relative_eq!(u[[0, 0]].im, -(0.1f64).sin(), epsilon = 1e-12);
        assert_relative_eq!(u[[1, 1]].im, (0.1f64).sin(), epsilon = 1e-12);
    }

    #[test]
    fn expm_rejects_non_hermitian() {
        let mut m = zeros(2);
        m[[0, 1]] = ONE; // missing conjugate partner
        assert!(expm_hermitian_i(&m, 1.0).is_err());
    }

    #[test]
    fn expm_is_unitary_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let n = 1 + (rng.random::<u32>() % 4) as usize;
            let h = random_hermitian(1 << n, &mut rng);
            let u = expm_hermitian_i(&h, 0.3).unwrap();
            let udu = dagger(&u).dot(&u);
            assert!(
                max_abs_diff(&udu, &identity(1 << n)) <= 1e-10,
                "U†U deviates from identity"
            );
        }
    }

    #[test]
    fn fidelity_identity_case() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_pure_state(3, &mut rng);
        assert_relative_eq!(fidelity(&s, &s).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn fidelity_all_ones_vs_ghz_is_half() {
        for n in 1..=4 {
            let ones = QuantumState::all_ones(n).unwrap();
            let ghz = QuantumState::ghz(n).unwrap();
            assert_relative_eq!(fidelity(&ones, &ghz).unwrap(), 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn fidelity_matches_inner_product_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let a = random_pure_state(3, &mut rng);
            let b = random_pure_state(3, &mut rng);
            let (va, vb) = (a.as_pure().unwrap(), b.as_pure().unwrap());
            let overlap: Complex64 = va
                .iter()
                .zip(vb.iter())
                .map(|(x, y)| x.conj() * y)
                .sum();
            assert_relative_eq!(
                fidelity(&a, &b).unwrap(),
                overlap.norm_sqr(),
                epsilon = 1e-12
            );
            // symmetry
            assert_relative_eq!(
                fidelity(&a, &b).unwrap(),
                fidelity(&b, &a).unwrap(),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn fidelity_pure_agrees_with_uhlmann_on_projectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let a = random_pure_state(2, &mut rng);
            let b = random_pure_state(2, &mut rng);
            let da = QuantumState::density(a.to_density()).unwrap();
            let db = QuantumState::density(b.to_density()).unwrap();
            assert_relative_eq!(
                fidelity(&a, &b).unwrap(),
                fidelity(&da, &db).unwrap(),
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn fidelity_rejects_dimension_mismatch() {
        let a = QuantumState::ghz(2).unwrap();
        let b = QuantumState::ghz(3).unwrap();
        assert!(fidelity(&a, &b).is_err());
    }

    fn appendix_bloch_states() -> (QuantumState, QuantumState) {
        // σ = (1 + cos(π/6)X + sin(π/6)Y)/2, ρ with the Y sign flipped.
        let c = (std::f64::consts::PI / 6.0).cos();
        let s = (std::f64::consts::PI / 6.0).sin();
        let x = Pauli::X.matrix();
        let y = Pauli::Y.matrix();
        let sigma = (identity(2) + x.mapv(|z| z * c) + y.mapv(|z| z * s)).mapv(|z| z * 0.5);
        let rho = (identity(2) + x.mapv(|z| z * c) - y.mapv(|z| z * s)).mapv(|z| z * 0.5);
        (
            QuantumState::density(rho).unwrap(),
            QuantumState::density(sigma).unwrap(),
        )
    }

    #[test]
    fn helstrom_bloch_pair_gives_y_at_p_infinity() {
        let (rho, sigma) = appendix_bloch_states();
        // σ − ρ = Y/2, so the operator for (σ, ρ) ordering is Y itself.
        let d = helstrom_operator(&sigma, &rho, f64::INFINITY).unwrap();
        assert!(max_abs_diff(d.matrix(), &Pauli::Y.matrix()) < 1e-10);
        let val = d.expectation(&sigma).unwrap() - d.expectation(&rho).unwrap();
        assert_relative_eq!(val, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn helstrom_equal_states_returns_zero_operator() {
        let s = QuantumState::ghz(2).unwrap();
        let d = helstrom_operator(&s, &s, 1.0).unwrap();
        assert!(d.is_zero());
    }

    #[test]
    fn helstrom_value_matches_lemma_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for &p in &[1.0, 2.0, f64::INFINITY] {
            for _ in 0..40 {
                let n = 1 + (rng.random::<u32>() % 3) as usize;
                let rho = random_pure_state(n, &mut rng);
                let sigma = random_pure_state(n, &mut rng);
                let delta = rho.to_density() - sigma.to_density();
                let (values, _) = eigh(&delta).unwrap();
                let lambda = values.last().unwrap();
                let d = helstrom_operator(&rho, &sigma, p).unwrap();
                let achieved =
                    d.expectation(&rho).unwrap() - d.expectation(&sigma).unwrap();
                // Lemma closed form 2^{1−1/p}·λ; the exponent tends to 1
                // as p → ∞.
                let scale = if p.is_infinite() { 2.0 } else { 2f64.powf(1.0 - 1.0 / p) };
                assert_relative_eq!(achieved, scale * lambda, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn helstrom_dominates_random_unit_norm_observables() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for &p in &[1.0, 2.0, f64::INFINITY] {
            let rho = random_pure_state(2, &mut rng);
            let sigma = random_pure_state(2, &mut rng);
            let d_star = helstrom_operator(&rho, &sigma, p).unwrap();
            let best = d_star.expectation(&rho).unwrap() - d_star.expectation(&sigma).unwrap();
            for _ in 0..200 {
                let mut h = random_hermitian(4, &mut rng);
                let norm = schatten_norm(&h, p).unwrap();
                h.mapv_inplace(|z| z / norm);
                let d = Observable::new(h, NormTag::SchattenP(p)).unwrap();
                let val = d.expectation(&rho).unwrap() - d.expectation(&sigma).unwrap();
                assert!(val <= best + 1e-9, "random D beat the Helstrom operator");
            }
        }
    }

    #[test]
    fn observable_rejects_oversized_schatten_norm() {
        let m = Pauli::Z.matrix().mapv(|z| z * 2.0);
        assert!(Observable::new(m, NormTag::SchattenP(f64::INFINITY)).is_err());
    }

    #[test]
    fn state_validation_catches_bad_inputs() {
        let v = Array1::from_elem(2, ONE); // norm √2
        assert!(QuantumState::pure(v).is_err());
        let m = identity(2); // trace 2
        assert!(QuantumState::density(m).is_err());
        let v3 = Array1::from_elem(3, ONE); // not a qubit register
        assert!(QuantumState::pure(v3).is_err());
    }

    #[test]
    fn schatten_norms_of_pauli() {
        let z = Pauli::Z.matrix();
        assert_relative_eq!(schatten_norm(&z, 1.0).unwrap(), 2.0, epsilon = 1e-12);
        assert_relative_eq!(
            schatten_norm(&z, 2.0).unwrap(),
            2f64.sqrt(),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            schatten_norm(&z, f64::INFINITY).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn eigh_reconstructs_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let h = random_hermitian(8, &mut rng);
        let (values, vectors) = eigh(&h).unwrap();
        let mut scaled = vectors.clone();
        for (k, &v) in values.iter().enumerate() {
            scaled
                .column_mut(k)
                .mapv_inplace(|z| z * Complex64::new(v, 0.0));
        }
        let rebuilt = scaled.dot(&dagger(&vectors));
        assert!(max_abs_diff(&rebuilt, &h) < 1e-10);
        assert!(values.windows(2).all(|w| w[0] <= w[1]));
    }
}
