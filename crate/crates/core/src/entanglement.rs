//! Entanglement generated by the collision model: Wootters concurrence,
//! tangles, CKW monogamy residuals, and the state |Ω_n⟩ of the system plus
//! N reservoir qubits after n collisions.
//!
//! Register layout: qubit 0 is the system, qubits 1..=N the reservoir,
//! qubit 0 being the most significant bit of a basis index.

use crate::channels::{check_density, DensityMatrix};
use crate::collisions::{build_unitary, reservoir_vector, CollisionSpec};
use crate::error::{Error, Result};
use crate::smallmat::{
    herm_eig, index_tables, kron, kron_vec, normalize_keep, pauli, singular_values, vec_norm,
    ComplexMatrix, QubitRegisterShape, C64, DEFAULT_TOL, ONE, ZERO,
};

/// Largest register the statevector routines accept.
pub const STATEVECTOR_CAP: usize = 20;
/// Largest register for the all-pairs CKW computation.
pub const CKW_CAP: usize = 12;
/// Negative tangles and residuals down to this value are reported as 0.
pub const CLAMP_TOL: f64 = 1e-8;
/// Eigenvalues of ϱ below this are dropped before the concurrence overlap
/// matrix is formed.
const RANK_CUTOFF: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct PureMultiQubitState {
    amplitudes: Vec<C64>,
    shape: QubitRegisterShape,
}

impl PureMultiQubitState {
    pub fn new(amplitudes: Vec<C64>, tol: f64) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Dimension(format!(
                "{len} amplitudes is not a qubit register"
            )));
        }
        let num_qubits = len.trailing_zeros() as usize;
        if num_qubits > STATEVECTOR_CAP {
            return Err(Error::RegisterTooLarge {
                num_qubits,
                cap: STATEVECTOR_CAP,
            });
        }
        let norm = vec_norm(&amplitudes);
        if (norm - 1.0).abs() > tol {
            return Err(Error::InvalidParameter(format!(
                "state norm {norm} != 1"
            )));
        }
        Ok(Self {
            amplitudes,
            shape: QubitRegisterShape::new(num_qubits),
        })
    }

    /// Tensor product of single-qubit vectors, factor 0 first.
    pub fn product(factors: &[[C64; 2]]) -> Result<Self> {
        let amps = factors
            .iter()
            .fold(vec![ONE], |acc, f| kron_vec(&acc, f));
        Self::new(amps, DEFAULT_TOL)
    }

    /// (|10..0⟩ + |01..0⟩ + ... + |0..01⟩)/√n
    pub fn w_state(num_qubits: usize) -> Result<Self> {
        check_register(num_qubits, STATEVECTOR_CAP)?;
        let mut amps = vec![ZERO; 1 << num_qubits];
        let a = C64::new(1.0 / (num_qubits as f64).sqrt(), 0.0);
        for q in 0..num_qubits {
            amps[1 << q] = a;
        }
        Self::new(amps, DEFAULT_TOL)
    }

    /// (|0..0⟩ + |1..1⟩)/√2
    pub fn ghz_state(num_qubits: usize) -> Result<Self> {
        check_register(num_qubits, STATEVECTOR_CAP)?;
        let mut amps = vec![ZERO; 1 << num_qubits];
        let a = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amps[0] = a;
        amps[(1 << num_qubits) - 1] = a;
        Self::new(amps, DEFAULT_TOL)
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn shape(&self) -> QubitRegisterShape {
        self.shape
    }

    pub fn num_qubits(&self) -> usize {
        self.shape.num_qubits()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Reduced density operator on `keep` (ascending), straight from the
    /// amplitudes.
    pub fn reduced_density(&self, keep: &[usize]) -> Result<ComplexMatrix> {
        let kept = normalize_keep(self.shape, keep)?;
        let (kept_idx, traced_idx) = index_tables(self.shape, &kept);
        let psi = &self.amplitudes;
        let k = kept_idx.len();
        let mut out = ComplexMatrix::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let (ki, kj) = (kept_idx[i], kept_idx[j]);
                let v: C64 = traced_idx
                    .iter()
                    .map(|&t| psi[ki | t] * psi[kj | t].conj())
                    .sum();
                out[(i, j)] = v;
                out[(j, i)] = v.conj();
            }
        }
        Ok(out)
    }

    /// Applies a 4x4 gate to the ordered qubit pair (`qa`, `qb`); `qa` is
    /// the more significant factor of the gate.
    pub fn apply_two_qubit(&mut self, gate: &ComplexMatrix, qa: usize, qb: usize) -> Result<()> {
        let n = self.num_qubits();
        if gate.rows() != 4 || gate.cols() != 4 {
            return Err(Error::Dimension("two-qubit gate must be 4x4".into()));
        }
        for q in [qa, qb] {
            if q >= n {
                return Err(Error::QubitIndex { index: q, num_qubits: n });
            }
        }
        if qa == qb {
            return Err(Error::InvalidParameter("gate qubits must differ".into()));
        }
        let ma = 1usize << self.shape.bit(qa);
        let mb = 1usize << self.shape.bit(qb);
        for base in 0..self.amplitudes.len() {
            if base & (ma | mb) != 0 {
                continue;
            }
            let idx = [base, base | mb, base | ma, base | ma | mb];
            let old = idx.map(|i| self.amplitudes[i]);
            for (r, &i) in idx.iter().enumerate() {
                self.amplitudes[i] = (0..4).map(|s| gate[(r, s)] * old[s]).sum();
            }
        }
        Ok(())
    }
}

fn check_register(num_qubits: usize, cap: usize) -> Result<()> {
    if num_qubits == 0 {
        return Err(Error::InvalidParameter("register needs at least one qubit".into()));
    }
    if num_qubits > cap {
        return Err(Error::RegisterTooLarge { num_qubits, cap });
    }
    Ok(())
}

/// Wootters concurrence of a two-qubit density operator.
///
/// With ϱ = Σ w_i w_i† (w_i = √p_i v_i over the non-negligible eigenpairs),
/// the square roots of the eigenvalues of ϱϱ̃ are the singular values of the
/// symmetric matrix T_ij = w_iᵀ (σ_y⊗σ_y) w_j.
pub fn concurrence(rho2: &ComplexMatrix, tol: f64) -> Result<f64> {
    if rho2.rows() != 4 || rho2.cols() != 4 {
        return Err(Error::Dimension(format!(
            "concurrence needs a 4x4 state, got {}x{}",
            rho2.rows(),
            rho2.cols()
        )));
    }
    check_density(rho2, tol)?;
    let eig = herm_eig(rho2, tol)?;
    let w: Vec<Vec<C64>> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > RANK_CUTOFF)
        .map(|(i, &p)| eig.vector(i).into_iter().map(|z| z * p.sqrt()).collect())
        .collect();
    if w.is_empty() {
        return Ok(0.0);
    }
    let yy = kron(&pauli::y(), &pauli::y());
    let r = w.len();
    let t = ComplexMatrix::from_fn(r, r, |i, j| {
        let yw = yy.mul_vec(&w[j]);
        w[i].iter().zip(&yw).map(|(a, b)| a * b).sum()
    });
    let mut l = singular_values(&t);
    l.resize(4, 0.0);
    Ok((l[0] - l[1] - l[2] - l[3]).max(0.0))
}

/// 4 det ϱ = 2 (1 - Tr ϱ²).
pub fn tangle(rho1: &DensityMatrix) -> f64 {
    det_tangle(rho1.matrix())
}

fn det_tangle(m: &ComplexMatrix) -> f64 {
    4.0 * (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re
}

fn clamp_noise(x: f64) -> f64 {
    if x < 0.0 && x >= -CLAMP_TOL {
        0.0
    } else {
        x
    }
}

#[derive(Debug, Clone)]
pub struct EntanglementReport {
    /// Number of collisions, when the report describes |Ω_n⟩.
    pub collisions: Option<usize>,
    /// Tangle of the system qubit.
    pub tau0: f64,
    /// Tangle of reservoir qubit 1 (0 if the register has no reservoir).
    pub tauk: f64,
    /// C_0k² for k = 1..
    pub tau0k: Vec<f64>,
    /// Largest reservoir-reservoir C_jk².
    pub taujk: f64,
    /// τ_j for every qubit.
    pub tangles: Vec<f64>,
    /// C_jk² for every pair, symmetric with zero diagonal.
    pub pair_tangles: Vec<Vec<f64>>,
    /// τ_j - Σ_{k≠j} C_jk², unclamped.
    pub raw_delta_j: Vec<f64>,
    pub delta_j: Vec<f64>,
    /// Mean of `delta_j` over all qubits.
    pub delta: f64,
}

impl EntanglementReport {
    fn from_tangles(collisions: Option<usize>, tangles: Vec<f64>, pair: Vec<Vec<f64>>) -> Self {
        let m = tangles.len();
        let tangles: Vec<f64> = tangles.into_iter().map(clamp_noise).collect();
        let pair: Vec<Vec<f64>> = pair
            .into_iter()
            .map(|row| row.into_iter().map(clamp_noise).collect())
            .collect();
        let raw_delta_j: Vec<f64> = (0..m)
            .map(|j| tangles[j] - pair[j].iter().sum::<f64>())
            .collect();
        let delta_j: Vec<f64> = raw_delta_j.iter().copied().map(clamp_noise).collect();
        let delta = delta_j.iter().sum::<f64>() / m as f64;
        let taujk = (1..m)
            .flat_map(|j| (j + 1..m).map(move |k| (j, k)))
            .map(|(j, k)| pair[j][k])
            .fold(0.0, f64::max);
        Self {
            collisions,
            tau0: tangles[0],
            tauk: tangles.get(1).copied().unwrap_or(0.0),
            tau0k: pair[0][1..].to_vec(),
            taujk,
            tangles,
            pair_tangles: pair,
            raw_delta_j,
            delta_j,
            delta,
        }
    }

    pub fn sum_tau0k(&self) -> f64 {
        self.tau0k.iter().sum()
    }

    pub fn min_raw_delta(&self) -> f64 {
        self.raw_delta_j.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Tangles of every qubit and concurrence² of every pair of a pure state.
pub fn ckw_check(state: &PureMultiQubitState) -> Result<EntanglementReport> {
    let m = state.num_qubits();
    check_register(m, CKW_CAP)?;
    let tangles = (0..m)
        .map(|j| state.reduced_density(&[j]).map(|r| det_tangle(&r)))
        .collect::<Result<Vec<f64>>>()?;
    let mut pair = vec![vec![0.0; m]; m];
    for j in 0..m {
        for k in j + 1..m {
            let rho = state.reduced_density(&[j, k])?;
            let c = concurrence(&rho, DEFAULT_TOL)?;
            pair[j][k] = c * c;
            pair[k][j] = c * c;
        }
    }
    Ok(EntanglementReport::from_tangles(None, tangles, pair))
}

fn check_amplitudes(alpha: C64, beta: C64) -> Result<()> {
    let norm = alpha.norm_sqr() + beta.norm_sqr();
    if (norm - 1.0).abs() > DEFAULT_TOL {
        return Err(Error::InvalidParameter(format!(
            "|alpha|^2 + |beta|^2 = {norm} != 1"
        )));
    }
    Ok(())
}

fn check_network(alpha: C64, beta: C64, total: usize, n: usize) -> Result<()> {
    check_amplitudes(alpha, beta)?;
    if n > total {
        return Err(Error::InvalidParameter(format!(
            "{n} collisions with only {total} reservoir qubits"
        )));
    }
    check_register(total + 1, STATEVECTOR_CAP)
}

/// The reservoir vector |ψ⟩ and its images |ψ0⟩ = V0|ψ⟩, |ψ1⟩ = V1|ψ⟩.
pub fn reservoir_images(spec: &CollisionSpec) -> Result<[[C64; 2]; 3]> {
    let psi = reservoir_vector(spec, DEFAULT_TOL)?;
    let to_arr = |v: Vec<C64>| [v[0], v[1]];
    Ok([
        psi,
        to_arr(spec.v0().mul_vec(&psi)),
        to_arr(spec.v1().mul_vec(&psi)),
    ])
}

/// ⟨ψ1|ψ0⟩ = ⟨ψ|V1†V0|ψ⟩, equal to ⟨X⟩_ξ for pure ξ.
pub fn reservoir_overlap(spec: &CollisionSpec) -> Result<C64> {
    let [_, psi0, psi1] = reservoir_images(spec)?;
    Ok(psi1[0].conj() * psi0[0] + psi1[1].conj() * psi0[1])
}

fn system_vectors(spec: &CollisionSpec) -> [[C64; 2]; 2] {
    let b = spec.basis();
    let v0 = b.vector(0);
    let v1 = b.vector(1);
    [[v0[0], v0[1]], [v1[0], v1[1]]]
}

/// |Ω_n⟩ by applying the controlled-U between the system and reservoir
/// qubits 1..=n in turn, starting from (α|e0⟩ + β|e1⟩) ⊗ |ψ⟩^⊗N.
pub fn evolve_network(
    spec: &CollisionSpec,
    alpha: C64,
    beta: C64,
    total: usize,
    n: usize,
) -> Result<PureMultiQubitState> {
    check_network(alpha, beta, total, n)?;
    let [psi, _, _] = reservoir_images(spec)?;
    let [e0, e1] = system_vectors(spec);
    let system = [alpha * e0[0] + beta * e1[0], alpha * e0[1] + beta * e1[1]];
    let mut factors = vec![system];
    factors.extend(std::iter::repeat(psi).take(total));
    let mut state = PureMultiQubitState::product(&factors)?;
    let u = build_unitary(spec);
    for k in 1..=n {
        state.apply_two_qubit(&u, 0, k)?;
    }
    Ok(state)
}

/// |Ω_n⟩ = α|e0⟩|ψ0⟩^⊗n|ψ⟩^⊗(N-n) + β|e1⟩|ψ1⟩^⊗n|ψ⟩^⊗(N-n), assembled directly.
pub fn network_state_closed_form(
    spec: &CollisionSpec,
    alpha: C64,
    beta: C64,
    total: usize,
    n: usize,
) -> Result<PureMultiQubitState> {
    check_network(alpha, beta, total, n)?;
    let branch = |e: [C64; 2], moved: [C64; 2], psi: [C64; 2]| -> Vec<C64> {
        let mut v = e.to_vec();
        for k in 0..total {
            v = kron_vec(&v, if k < n { &moved } else { &psi });
        }
        v
    };
    let [psi, psi0, psi1] = reservoir_images(spec)?;
    let [e0, e1] = system_vectors(spec);
    let b0 = branch(e0, psi0, psi);
    let b1 = branch(e1, psi1, psi);
    let amps = b0
        .iter()
        .zip(&b1)
        .map(|(x, y)| alpha * x + beta * y)
        .collect();
    PureMultiQubitState::new(amps, DEFAULT_TOL)
}

/// Closed-form reduced states of |Ω_n⟩; none depends on which collided
/// reservoir qubits are picked.
#[derive(Debug, Clone)]
pub struct ReducedStates {
    /// System qubit.
    pub rho0: ComplexMatrix,
    /// A collided reservoir qubit.
    pub rhok: ComplexMatrix,
    /// System plus a collided reservoir qubit.
    pub rho0k: ComplexMatrix,
    /// Two collided reservoir qubits; `None` when n < 2.
    pub rhojk: Option<ComplexMatrix>,
}

/// With s = ⟨ψ1|ψ0⟩:
/// ϱ0 = |α|²|e0⟩⟨e0| + |β|²|e1⟩⟨e1| + (αβ* sⁿ |e0⟩⟨e1| + h.c.),
/// ϱk = |α|²|ψ0⟩⟨ψ0| + |β|²|ψ1⟩⟨ψ1|,
/// ϱ0k = |α|²|e0ψ0⟩⟨e0ψ0| + |β|²|e1ψ1⟩⟨e1ψ1| + (αβ* s^{n-1} |e0ψ0⟩⟨e1ψ1| + h.c.),
/// ϱjk = |α|²|ψ0ψ0⟩⟨ψ0ψ0| + |β|²|ψ1ψ1⟩⟨ψ1ψ1|.
pub fn analytic_reduced_states(
    spec: &CollisionSpec,
    alpha: C64,
    beta: C64,
    n: usize,
) -> Result<ReducedStates> {
    check_amplitudes(alpha, beta)?;
    if n == 0 {
        return Err(Error::InvalidParameter("reduced states need n >= 1".into()));
    }
    let [_, psi0, psi1] = reservoir_images(spec)?;
    let [e0, e1] = system_vectors(spec);
    let s = reservoir_overlap(spec)?;
    let (pa, pb) = (alpha.norm_sqr(), beta.norm_sqr());
    let coherence = alpha * beta.conj();

    let mixture = |u: &[C64], v: &[C64], cross: C64| -> ComplexMatrix {
        let diag = &ComplexMatrix::projector(u).scale_real(pa) + &ComplexMatrix::projector(v).scale_real(pb);
        let off = ComplexMatrix::outer(u, v).scale(cross);
        &(&diag + &off) + &off.adjoint()
    };

    let rho0 = mixture(&e0, &e1, coherence * s.powu(n as u32));
    let rhok = mixture(&psi0, &psi1, ZERO);
    let rho0k = mixture(
        &kron_vec(&e0, &psi0),
        &kron_vec(&e1, &psi1),
        coherence * s.powu(n as u32 - 1),
    );
    let rhojk = (n >= 2).then(|| mixture(&kron_vec(&psi0, &psi0), &kron_vec(&psi1, &psi1), ZERO));
    Ok(ReducedStates {
        rho0,
        rhok,
        rho0k,
        rhojk,
    })
}

/// Closed-form tangles of |Ω_n⟩ over the n + 1 qubits that took part, with
/// overlap = |⟨ψ0|ψ1⟩|:
/// τ0 = 4|αβ|²(1 - overlap^{2n}), τk = 4|αβ|²(1 - overlap²),
/// τ0k = 4|αβ|² overlap^{2(n-1)} (1 - overlap²), τjk = 0.
pub fn analytic_tangles(overlap: f64, alpha: C64, beta: C64, n: usize) -> Result<EntanglementReport> {
    if !(0.0..=1.0).contains(&overlap) {
        return Err(Error::InvalidParameter(format!(
            "overlap {overlap} outside [0, 1]"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("analytic tangles need n >= 1".into()));
    }
    check_amplitudes(alpha, beta)?;
    let weight = 4.0 * alpha.norm_sqr() * beta.norm_sqr();
    let o2 = overlap * overlap;
    let tau0 = weight - weight * o2.powi(n as i32);
    let tauk = weight * (1.0 - o2);
    let tau0k = weight * o2.powi(n as i32 - 1) * (1.0 - o2);

    let m = n + 1;
    let mut tangles = vec![tauk; m];
    tangles[0] = tau0;
    let mut pair = vec![vec![0.0; m]; m];
    for k in 1..m {
        pair[0][k] = tau0k;
        pair[k][0] = tau0k;
    }
    Ok(EntanglementReport::from_tangles(Some(n), tangles, pair))
}

/// Largest entry of |Tr_0 |Ω_n⟩⟨Ω_n| - M| where
/// M = |α|²(|ψ0⟩⟨ψ0|)^⊗n ⊗ (|ψ⟩⟨ψ|)^⊗(N-n) + |β|²(|ψ1⟩⟨ψ1|)^⊗n ⊗ (|ψ⟩⟨ψ|)^⊗(N-n).
pub fn environment_deviation(
    spec: &CollisionSpec,
    alpha: C64,
    beta: C64,
    total: usize,
    n: usize,
) -> Result<f64> {
    if total == 0 {
        return Err(Error::InvalidParameter("no reservoir qubits".into()));
    }
    let state = evolve_network(spec, alpha, beta, total, n)?;
    let env: Vec<usize> = (1..=total).collect();
    let reduced = state.reduced_density(&env)?;
    let [psi, psi0, psi1] = reservoir_images(spec)?;
    let branch = |moved: [C64; 2]| -> Vec<C64> {
        (0..total).fold(vec![ONE], |acc, k| {
            kron_vec(&acc, if k < n { &moved } else { &psi })
        })
    };
    let b0 = branch(psi0);
    let b1 = branch(psi1);
    let (pa, pb) = (alpha.norm_sqr(), beta.norm_sqr());
    let dim = b0.len();
    let mut worst: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let expected = b0[i] * b0[j].conj() * pa + b1[i] * b1[j].conj() * pb;
            worst = worst.max((reduced[(i, j)] - expected).norm());
        }
    }
    Ok(worst)
}

/// Whether the environment after n collisions is the separable mixture of
/// product states, within `tol`.
pub fn env_state_check(
    spec: &CollisionSpec,
    alpha: C64,
    beta: C64,
    total: usize,
    n: usize,
    tol: f64,
) -> Result<bool> {
    Ok(environment_deviation(spec, alpha, beta, total, n)? <= tol)
}
