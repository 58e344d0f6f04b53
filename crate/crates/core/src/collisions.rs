//! Collision model: a system qubit meets a stream of fresh reservoir qubits,
//! each through a controlled-U interaction
//! `U = |e0⟩⟨e0| ⊗ V0 + |e1⟩⟨e1| ⊗ V1` with the system as control.

use crate::channels::{
    make_decoherence_channel, DecoherenceBasis, DecoherenceParams, DensityMatrix, TransferMatrix,
};
use crate::error::{Error, Result};
use crate::smallmat::{self, c, kron, partial_trace, ComplexMatrix, QubitRegisterShape, C64, DEFAULT_TOL, ZERO};

#[derive(Debug, Clone)]
pub struct CollisionSpec {
    v0: ComplexMatrix,
    v1: ComplexMatrix,
    xi: DensityMatrix,
    basis: DecoherenceBasis,
}

impl CollisionSpec {
    pub fn new(
        v0: ComplexMatrix,
        v1: ComplexMatrix,
        xi: DensityMatrix,
        basis: DecoherenceBasis,
        tol: f64,
    ) -> Result<Self> {
        for v in [&v0, &v1] {
            if v.rows() != 2 || v.cols() != 2 {
                return Err(Error::Dimension(format!(
                    "controlled block must be 2x2, got {}x{}",
                    v.rows(),
                    v.cols()
                )));
            }
            let deviation = v.unitary_deviation();
            if deviation > tol {
                return Err(Error::NotUnitary { deviation });
            }
        }
        Ok(Self { v0, v1, xi, basis })
    }

    pub fn v0(&self) -> &ComplexMatrix {
        &self.v0
    }

    pub fn v1(&self) -> &ComplexMatrix {
        &self.v1
    }

    pub fn xi(&self) -> &DensityMatrix {
        &self.xi
    }

    pub fn basis(&self) -> &DecoherenceBasis {
        &self.basis
    }
}

/// X = V1† V0 and its mean ⟨X⟩_ξ = Tr(X ξ).
#[derive(Debug, Clone)]
pub struct XOperator {
    pub x: ComplexMatrix,
    pub mean: C64,
}

impl XOperator {
    pub fn lambda(&self) -> f64 {
        self.mean.norm()
    }

    pub fn phi(&self) -> f64 {
        self.mean.arg()
    }

    pub fn params(&self) -> DecoherenceParams {
        // |mean| <= 1 for unitary X; clamp the rounding excess
        DecoherenceParams::new(self.lambda().min(1.0), self.phi())
            .expect("mean of a unitary has modulus <= 1")
    }

    /// Induced channel entries (E_11, E_12) = (Re⟨X⟩, Im⟨X⟩).
    pub fn ab(&self) -> (f64, f64) {
        (self.mean.re, self.mean.im)
    }
}

pub fn build_unitary(spec: &CollisionSpec) -> ComplexMatrix {
    let e0 = spec.basis.vector(0);
    let e1 = spec.basis.vector(1);
    let p0 = ComplexMatrix::projector(&e0);
    let p1 = ComplexMatrix::projector(&e1);
    &kron(&p0, &spec.v0) + &kron(&p1, &spec.v1)
}

pub fn x_operator(spec: &CollisionSpec) -> XOperator {
    let x = spec.v1.adjoint().matmul(&spec.v0);
    let mean = x.matmul(spec.xi.matrix()).trace();
    XOperator { x, mean }
}

/// The single-collision channel over the S-basis of the control basis,
/// from the closed form ⟨X⟩_ξ = λ e^{iφ}.
pub fn induced_channel(spec: &CollisionSpec) -> TransferMatrix {
    make_decoherence_channel(&x_operator(spec).params())
}

/// One collision by brute force: Tr_res[U (ρ ⊗ ξ) U†].
pub fn collide_once(spec: &CollisionSpec, rho: &ComplexMatrix) -> ComplexMatrix {
    let u = build_unitary(spec);
    let joint = kron(rho, spec.xi.matrix());
    let out = u.matmul(&joint).matmul(&u.adjoint());
    partial_trace(&out, QubitRegisterShape::new(2), &[0]).expect("4x4 two-qubit operator")
}

/// Sequential collisions with fresh reservoir qubits; returns the n + 1
/// states ρ^(0) .. ρ^(n).
pub fn simulate_collisions(
    spec: &CollisionSpec,
    rho0: &DensityMatrix,
    n: usize,
) -> Vec<DensityMatrix> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(rho0.clone());
    let mut rho = rho0.matrix().clone();
    for _ in 0..n {
        rho = collide_once(spec, &rho);
        out.push(
            DensityMatrix::new(rho.clone(), 1e-8).expect("a collision maps states to states"),
        );
    }
    out
}

/// Splits a 4x4 unitary into controlled blocks (V0, V1) in the control
/// basis, or `None` when it has no controlled form.
///
/// Each returned block is rescaled by a global phase so its first non-zero
/// entry is real and positive.
pub fn check_controlled_form(
    u: &ComplexMatrix,
    basis: &DecoherenceBasis,
    tol: f64,
) -> Result<Option<(ComplexMatrix, ComplexMatrix)>> {
    if u.rows() != 4 || u.cols() != 4 {
        return Err(Error::Dimension(format!(
            "controlled form needs a 4x4 unitary, got {}x{}",
            u.rows(),
            u.cols()
        )));
    }
    let deviation = u.unitary_deviation();
    if deviation > tol {
        return Err(Error::NotUnitary { deviation });
    }
    let w = kron(basis.w(), &ComplexMatrix::identity(2));
    let local = w.adjoint().matmul(u).matmul(&w);
    let off = local.block(0, 2, 2, 2).max_abs().max(local.block(2, 0, 2, 2).max_abs());
    if off > tol {
        return Ok(None);
    }
    let v0 = canonical_phase(local.block(0, 0, 2, 2), tol);
    let v1 = canonical_phase(local.block(2, 2, 2, 2), tol);
    if !v0.is_unitary(tol) || !v1.is_unitary(tol) {
        return Ok(None);
    }
    Ok(Some((v0, v1)))
}

fn canonical_phase(m: ComplexMatrix, tol: f64) -> ComplexMatrix {
    match m.as_slice().iter().find(|z| z.norm() > tol) {
        Some(&lead) => m.scale((lead / lead.norm()).conj()),
        None => m,
    }
}

/// A collision realizing the target channel: V1 = I,
/// V0 = diag(e^{i(φ+δ)}, e^{i(φ-δ)}) with δ = arccos λ, and ξ = |+⟩⟨+|, so
/// that ⟨X⟩_ξ = e^{iφ} cos δ.
pub fn design_collision(target: &DecoherenceParams) -> CollisionSpec {
    design_collision_in(target, DecoherenceBasis::computational())
}

/// As [`design_collision`], with the system controlled in `basis`.
pub fn design_collision_in(target: &DecoherenceParams, basis: DecoherenceBasis) -> CollisionSpec {
    let delta = target.lambda().clamp(0.0, 1.0).acos();
    let phi = target.phi();
    let v0 = ComplexMatrix::diag(&[
        C64::from_polar(1.0, phi + delta),
        C64::from_polar(1.0, phi - delta),
    ]);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let xi = DensityMatrix::pure([c(h, 0.0), c(h, 0.0)]).expect("normalized");
    CollisionSpec::new(v0, ComplexMatrix::identity(2), xi, basis, DEFAULT_TOL)
        .expect("diagonal phases are unitary")
}

/// Populations of `rho` in the control basis.
pub fn system_diagonal(rho: &DensityMatrix, basis: &DecoherenceBasis) -> [f64; 2] {
    [
        rho.element_in(basis, 0, 0).re,
        rho.element_in(basis, 1, 1).re,
    ]
}

/// Pure reservoir vector |ψ⟩ with ξ = |ψ⟩⟨ψ|, or an error for mixed ξ.
pub fn reservoir_vector(spec: &CollisionSpec, tol: f64) -> Result<[C64; 2]> {
    let purity = spec.xi.purity();
    if (purity - 1.0).abs() > tol {
        return Err(Error::MixedReservoir { purity });
    }
    let eig = smallmat::herm_eig(spec.xi.matrix(), tol)?;
    let v = eig.vector(0);
    // fix the phase so the output is deterministic
    let lead = v.iter().copied().find(|z| z.norm() > 1e-12).unwrap_or(ZERO);
    let ph = if lead.norm() > 0.0 { (lead / lead.norm()).conj() } else { c(1.0, 0.0) };
    Ok([v[0] * ph, v[1] * ph])
}
