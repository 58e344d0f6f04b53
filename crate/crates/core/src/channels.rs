//! Qubit channels in the left-right (Pauli transfer) representation.
//!
//! A channel is stored as a real 4x4 matrix `E[k][l] = ½ Tr(S_k E[S_l])`
//! over an operator basis `S_0 = I, S_j = W σ_j W†` fixed by a
//! [`DecoherenceBasis`]. Matrices that are not tied to a particular basis
//! (classification input, the `{"transfer": ...}` JSON form) are taken in the
//! computational Pauli frame, i.e. `W = I`.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::smallmat::{self, c, herm_eig, pauli, ComplexMatrix, C64, DEFAULT_TOL, ONE};

pub type Mat3 = [[f64; 3]; 3];

/// Bloch vector `r_j = Tr(ρ S_j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector(pub [f64; 3]);

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self([x, y, z])
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Checks that `m` is a density operator of any dimension: Hermitian, unit
/// trace and positive semidefinite, each within `tol`.
pub fn check_density(m: &ComplexMatrix, tol: f64) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidDensity(format!(
            "{}x{} is not square",
            m.rows(),
            m.cols()
        )));
    }
    let deviation = m.hermitian_deviation();
    if deviation > tol {
        return Err(Error::InvalidDensity(format!(
            "not Hermitian (deviation {deviation:e})"
        )));
    }
    let tr = m.trace();
    if (tr - ONE).norm() > tol {
        return Err(Error::InvalidDensity(format!("trace {tr} != 1")));
    }
    let min = herm_eig(m, tol)?.min_value();
    if min < -tol {
        return Err(Error::InvalidDensity(format!(
            "negative eigenvalue {min:e}"
        )));
    }
    Ok(())
}

/// A single-qubit density operator.
#[derive(Debug, Clone)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(m: ComplexMatrix, tol: f64) -> Result<Self> {
        if m.rows() != 2 || m.cols() != 2 {
            return Err(Error::InvalidDensity(format!(
                "expected 2x2, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        check_density(&m, tol)?;
        Ok(Self(m))
    }

    pub fn maximally_mixed() -> Self {
        Self(ComplexMatrix::identity(2).scale_real(0.5))
    }

    /// |v><v| for a normalized state vector `v`.
    pub fn pure(v: [C64; 2]) -> Result<Self> {
        let norm = smallmat::vec_norm(&v);
        if (norm - 1.0).abs() > DEFAULT_TOL {
            return Err(Error::InvalidDensity(format!(
                "state vector has norm {norm}"
            )));
        }
        Ok(Self(ComplexMatrix::projector(&v)))
    }

    /// ½(I + r·S) in the given basis.
    pub fn from_bloch(r: BlochVector, basis: &DecoherenceBasis) -> Result<Self> {
        if r.norm() > 1.0 + DEFAULT_TOL {
            return Err(Error::InvalidDensity(format!(
                "Bloch vector length {} exceeds 1",
                r.norm()
            )));
        }
        Ok(Self(bloch_operator(&r.0, basis)))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn purity(&self) -> f64 {
        self.0.matmul(&self.0).trace().re
    }

    /// <e_j|ρ|e_k> for the vectors of `basis`.
    pub fn element_in(&self, basis: &DecoherenceBasis, j: usize, k: usize) -> C64 {
        let ej = basis.vector(j);
        let ek = basis.vector(k);
        smallmat::inner(&ej, &self.0.mul_vec(&ek))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0.max_abs_diff(&other.0)
    }
}

/// ½(r_0 I + Σ r_j S_j) with r_0 = 1.
fn bloch_operator(r: &[f64; 3], basis: &DecoherenceBasis) -> ComplexMatrix {
    let mut m = ComplexMatrix::identity(2);
    for (j, &rj) in r.iter().enumerate() {
        m = &m + &basis.s(j + 1).scale_real(rj);
    }
    m.scale_real(0.5)
}

/// Orthonormal qubit basis {|ψ⟩, |ψ⊥⟩}, stored as the unitary `W` whose
/// columns are the basis vectors.
#[derive(Debug, Clone)]
pub struct DecoherenceBasis {
    w: ComplexMatrix,
}

impl DecoherenceBasis {
    pub fn new(w: ComplexMatrix, tol: f64) -> Result<Self> {
        if w.rows() != 2 || w.cols() != 2 {
            return Err(Error::Dimension(format!(
                "basis matrix must be 2x2, got {}x{}",
                w.rows(),
                w.cols()
            )));
        }
        let deviation = w.unitary_deviation();
        if deviation > tol {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { w })
    }

    pub fn computational() -> Self {
        Self {
            w: ComplexMatrix::identity(2),
        }
    }

    /// Basis whose S_3 has Bloch axis `axis` (normalized internally).
    pub fn from_axis(axis: [f64; 3]) -> Result<Self> {
        let n = norm3(&axis);
        if n < 1e-12 {
            return Err(Error::InvalidParameter("zero basis axis".into()));
        }
        let u = axis.map(|v| v / n);
        let theta = u[2].clamp(-1.0, 1.0).acos();
        let azimuth = u[1].atan2(u[0]);
        let (ch, sh) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let e = C64::from_polar(1.0, azimuth);
        // columns: |ψ⟩ = (cos θ/2, e^{iϕ} sin θ/2), |ψ⊥⟩ = (-e^{-iϕ} sin θ/2, cos θ/2)
        let w = ComplexMatrix::from_vec(
            2,
            2,
            vec![c(ch, 0.0), -e.conj() * sh, e * sh, c(ch, 0.0)],
        )?;
        Ok(Self { w })
    }

    pub fn w(&self) -> &ComplexMatrix {
        &self.w
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.w.column(k)
    }

    /// S_j = W σ_j W†.
    pub fn s(&self, j: usize) -> ComplexMatrix {
        self.w.matmul(&pauli::sigma(j)).matmul(&self.w.adjoint())
    }

    /// Columns are the Bloch vectors of S_1, S_2, S_3 in the Pauli frame.
    pub fn rotation(&self) -> Mat3 {
        let mut r = [[0.0; 3]; 3];
        for j in 0..3 {
            let s = self.s(j + 1);
            for (i, row) in r.iter_mut().enumerate() {
                row[j] = 0.5 * pauli::sigma(i + 1).matmul(&s).trace().re;
            }
        }
        r
    }

    /// Bloch axis of S_3.
    pub fn axis(&self) -> [f64; 3] {
        let r = self.rotation();
        [r[0][2], r[1][2], r[2][2]]
    }
}

/// Decoherence parameters: off-diagonal scale `lambda` and rotation `phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoherenceParams {
    lambda: f64,
    phi: f64,
}

impl DecoherenceParams {
    /// Canonicalizes to `lambda >= 0` (a negative scale becomes a rotation by
    /// an extra π) and `phi` in [0, 2π).
    pub fn new(lambda: f64, phi: f64) -> Result<Self> {
        if !lambda.is_finite() || !phi.is_finite() {
            return Err(Error::InvalidParameter("non-finite lambda or phi".into()));
        }
        if lambda.abs() > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "lambda = {lambda} outside [0, 1]"
            )));
        }
        let (lambda, phi) = if lambda < 0.0 {
            (-lambda, phi + PI)
        } else {
            (lambda, phi)
        };
        Ok(Self {
            lambda,
            phi: wrap_angle(phi),
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Channel entries a = λ cos φ, b = λ sin φ.
    pub fn ab(&self) -> (f64, f64) {
        (self.lambda * self.phi.cos(), self.lambda * self.phi.sin())
    }

    /// Strict contraction, i.e. a genuine decoherence rather than a rotation.
    pub fn is_decoherence(&self, tol: f64) -> bool {
        self.lambda < 1.0 - tol
    }
}

/// Angle reduced to [0, 2π).
pub fn wrap_angle(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Shortest signed distance between two angles.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// R_φ = [[cos φ, sin φ], [-sin φ, cos φ]].
pub fn rotation2(phi: f64) -> [[f64; 2]; 2] {
    let (s, c) = phi.sin_cos();
    [[c, s], [-s, c]]
}

#[derive(Debug, Clone, Copy)]
pub struct TransferMatrix([[f64; 4]; 4]);

impl TransferMatrix {
    pub fn new(entries: [[f64; 4]; 4]) -> Self {
        Self(entries)
    }

    pub fn identity() -> Self {
        let mut e = [[0.0; 4]; 4];
        for (i, row) in e.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Self(e)
    }

    /// diag(1, l1, l2, l3)
    pub fn diagonal(l: [f64; 3]) -> Self {
        let mut e = Self::identity().0;
        for i in 0..3 {
            e[i + 1][i + 1] = l[i];
        }
        Self(e)
    }

    pub fn entries(&self) -> &[[f64; 4]; 4] {
        &self.0
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.0[k][l]
    }

    /// The 3x3 linear part T.
    pub fn block(&self) -> Mat3 {
        let mut t = [[0.0; 3]; 3];
        for (i, row) in t.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.0[i + 1][j + 1];
            }
        }
        t
    }

    /// The translation vector t.
    pub fn translation(&self) -> [f64; 3] {
        [self.0[1][0], self.0[2][0], self.0[3][0]]
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        (self.0[0][0] - 1.0).abs() <= tol && self.0[0][1..].iter().all(|v| v.abs() <= tol)
    }

    pub fn is_unital(&self, tol: f64) -> bool {
        self.translation().iter().all(|v| v.abs() <= tol)
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        let mut out = [[0.0; 4]; 4];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..4).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        Self(out)
    }

    pub fn transpose(&self) -> Self {
        let mut out = [[0.0; 4]; 4];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.0[j][i];
            }
        }
        Self(out)
    }

    pub fn apply_vector(&self, v: &[f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..4).map(|k| self.0[i][k] * v[k]).sum();
        }
        out
    }

    /// r -> T r + t
    pub fn apply_bloch(&self, r: &BlochVector) -> BlochVector {
        let out = self.apply_vector(&[1.0, r.0[0], r.0[1], r.0[2]]);
        BlochVector([out[1], out[2], out[3]])
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }

    /// Re-expresses a matrix given over the S-basis of `basis` in the Pauli
    /// frame.
    pub fn to_pauli_frame(&self, basis: &DecoherenceBasis) -> Self {
        let r = lift(&basis.rotation());
        r.matmul(self).matmul(&r.transpose())
    }

    /// Re-expresses a Pauli-frame matrix over the S-basis of `basis`.
    pub fn from_pauli_frame(&self, basis: &DecoherenceBasis) -> Self {
        let r = lift(&basis.rotation());
        r.transpose().matmul(self).matmul(&r)
    }

    /// Tomography of an arbitrary linear map: `E[k][l] = ½ Re Tr(S_k f(S_l))`.
    pub fn from_action(
        basis: &DecoherenceBasis,
        mut f: impl FnMut(&ComplexMatrix) -> ComplexMatrix,
    ) -> Self {
        let s: Vec<ComplexMatrix> = (0..4).map(|j| basis.s(j)).collect();
        let mut e = [[0.0; 4]; 4];
        for l in 0..4 {
            let image = f(&s[l]);
            for k in 0..4 {
                e[k][l] = 0.5 * s[k].matmul(&image).trace().re;
            }
        }
        Self(e)
    }

    /// Unitary channel ρ -> U ρ U† in the Pauli frame.
    pub fn unitary(u: &ComplexMatrix, tol: f64) -> Result<Self> {
        DecoherenceBasis::new(u.clone(), tol)?;
        Ok(Self::from_action(&DecoherenceBasis::computational(), |s| {
            u.matmul(s).matmul(&u.adjoint())
        }))
    }

    /// Action on an arbitrary (not necessarily Hermitian) 2x2 operator.
    pub fn apply_operator(&self, a: &ComplexMatrix, basis: &DecoherenceBasis) -> ComplexMatrix {
        let s: Vec<ComplexMatrix> = (0..4).map(|j| basis.s(j)).collect();
        let coeffs: Vec<C64> = s.iter().map(|sl| sl.matmul(a).trace()).collect();
        let mut out = ComplexMatrix::zeros(2, 2);
        for (k, sk) in s.iter().enumerate() {
            let ck: C64 = (0..4).map(|l| coeffs[l] * self.0[k][l]).sum();
            out = &out + &sk.scale(ck * 0.5);
        }
        out
    }
}

fn lift(r: &Mat3) -> TransferMatrix {
    let mut e = TransferMatrix::identity().0;
    for i in 0..3 {
        for j in 0..3 {
            e[i + 1][j + 1] = r[i][j];
        }
    }
    TransferMatrix(e)
}

/// A decoherence channel together with its basis.
#[derive(Debug, Clone)]
pub struct DecoherenceChannel {
    pub basis: DecoherenceBasis,
    pub params: DecoherenceParams,
}

impl DecoherenceChannel {
    /// Transfer matrix over the channel's own S-basis.
    pub fn transfer(&self) -> TransferMatrix {
        make_decoherence_channel(&self.params)
    }

    /// Transfer matrix in the Pauli frame.
    pub fn pauli_transfer(&self) -> TransferMatrix {
        self.transfer().to_pauli_frame(&self.basis)
    }
}

pub fn to_bloch(rho: &DensityMatrix, basis: &DecoherenceBasis) -> BlochVector {
    let mut r = [0.0; 3];
    for (j, v) in r.iter_mut().enumerate() {
        *v = rho.matrix().matmul(&basis.s(j + 1)).trace().re;
    }
    BlochVector(r)
}

pub fn from_bloch(r: BlochVector, basis: &DecoherenceBasis) -> Result<DensityMatrix> {
    DensityMatrix::from_bloch(r, basis)
}

/// diag(1, λ R_φ, 1)
pub fn make_decoherence_channel(p: &DecoherenceParams) -> TransferMatrix {
    block_channel(p.lambda(), p.phi())
}

fn block_channel(scale: f64, angle: f64) -> TransferMatrix {
    let r = rotation2(angle);
    let mut e = TransferMatrix::identity().0;
    e[1][1] = scale * r[0][0];
    e[1][2] = scale * r[0][1];
    e[2][1] = scale * r[1][0];
    e[2][2] = scale * r[1][1];
    TransferMatrix(e)
}

/// Applies `e` (given over the S-basis of `basis`) to `rho`.
pub fn apply(
    e: &TransferMatrix,
    rho: &DensityMatrix,
    basis: &DecoherenceBasis,
) -> Result<DensityMatrix> {
    if !e.is_trace_preserving(DEFAULT_TOL) {
        return Err(Error::NotTracePreserving);
    }
    let r = e.apply_bloch(&to_bloch(rho, basis));
    let len = r.norm();
    if len > 1.0 + DEFAULT_TOL {
        return Err(Error::NotPositive {
            min_eigenvalue: 0.5 * (1.0 - len),
        });
    }
    Ok(DensityMatrix(bloch_operator(&r.0, basis)))
}

/// `e1 ∘ e2`: apply `e2` first.
pub fn compose(e1: &TransferMatrix, e2: &TransferMatrix) -> TransferMatrix {
    e1.matmul(e2)
}

/// diag(1, λⁿ R_{nφ}, 1)
pub fn power(p: &DecoherenceParams, n: u32) -> TransferMatrix {
    block_channel(p.lambda().powi(n as i32), n as f64 * p.phi())
}

/// Continuous interpolation `E_t = diag(1, λ^{t/τ} R_{(t/τ)φ}, 1)`.
pub fn interpolate(p: &DecoherenceParams, t: f64, tau: f64) -> Result<TransferMatrix> {
    if p.lambda() == 0.0 {
        return Err(Error::NoFiniteGenerator);
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau = {tau} must be > 0")));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("t = {t} must be >= 0")));
    }
    let s = t / tau;
    Ok(block_channel(p.lambda().powf(s), s * p.phi()))
}

/// μ E1 + (1 - μ) E2
pub fn convex_mix(e1: &TransferMatrix, e2: &TransferMatrix, mu: f64) -> Result<TransferMatrix> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::InvalidParameter(format!("mu = {mu} outside [0, 1]")));
    }
    let mut out = [[0.0; 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = mu * e1.0[i][j] + (1.0 - mu) * e2.0[i][j];
        }
    }
    Ok(TransferMatrix(out))
}

/// Unnormalized Choi matrix `Σ_jk |j⟩⟨k| ⊗ E[|j⟩⟨k|]` (trace 2), input
/// index first.
pub fn transfer_to_choi(e: &TransferMatrix, basis: &DecoherenceBasis) -> ComplexMatrix {
    let mut choi = ComplexMatrix::zeros(4, 4);
    for j in 0..2 {
        for k in 0..2 {
            let mut unit = ComplexMatrix::zeros(2, 2);
            unit[(j, k)] = ONE;
            let image = e.apply_operator(&unit, basis);
            for a in 0..2 {
                for b in 0..2 {
                    choi[(2 * j + a, 2 * k + b)] = image[(a, b)];
                }
            }
        }
    }
    choi
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpVerdict {
    pub completely_positive: bool,
    /// Smallest eigenvalue of the Choi matrix.
    pub min_eigenvalue: f64,
}

pub fn is_completely_positive(
    e: &TransferMatrix,
    basis: &DecoherenceBasis,
    tol: f64,
) -> Result<CpVerdict> {
    if !e.is_trace_preserving(tol) {
        return Err(Error::NotTracePreserving);
    }
    let choi = transfer_to_choi(e, basis);
    let min_eigenvalue = herm_eig(&choi, tol)?.min_value();
    Ok(CpVerdict {
        completely_positive: min_eigenvalue >= -tol,
        min_eigenvalue,
    })
}

/// Membership of (λ1, λ2, λ3) in the tetrahedron spanned by (1,1,1),
/// (1,-1,-1), (-1,1,-1), (-1,-1,1).
pub fn tetrahedron_contains(l: [f64; 3], tol: f64) -> bool {
    let [a, b, c3] = l;
    [
        a + b - c3,
        a - b + c3,
        -a + b + c3,
        -a - b - c3,
    ]
    .iter()
    .all(|&v| v <= 1.0 + tol)
}

/// `T = left · diag(singulars) · right` with proper rotations on both sides.
#[derive(Debug, Clone, Copy)]
pub struct SvdDecomposition {
    pub left: Mat3,
    pub singulars: [f64; 3],
    pub right: Mat3,
}

impl SvdDecomposition {
    pub fn reconstruct(&self) -> Mat3 {
        let mut scaled = self.left;
        for row in scaled.iter_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v *= self.singulars[j];
            }
        }
        mat3_mul(&scaled, &self.right)
    }
}

pub fn svd_decompose(e: &TransferMatrix, tol: f64) -> Result<SvdDecomposition> {
    if !e.is_unital(tol) {
        return Err(Error::NotUnital);
    }
    let t = e.block();
    let tt = mat3_mul(&transpose3(&t), &t);
    let flat: Vec<f64> = tt.iter().flatten().copied().collect();
    let eig = herm_eig(&ComplexMatrix::from_real(3, 3, &flat)?, tol)?;

    let mut v = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            v[i][j] = eig.vectors[(i, j)].re;
        }
    }
    let mut vcols: Vec<[f64; 3]> = (0..3).map(|j| [v[0][j], v[1][j], v[2][j]]).collect();
    if det3(&v) < 0.0 {
        vcols[2] = vcols[2].map(|x| -x);
    }

    // Left vectors: T v_i / σ_i where σ_i is resolvable, completed to a
    // right-handed frame otherwise.
    let scale = eig.values[0].max(0.0).sqrt().max(1.0);
    let mut ucols: Vec<[f64; 3]> = Vec::with_capacity(3);
    for vc in vcols.iter().take(2) {
        let tv = mat3_vec(&t, vc);
        let mut u = tv;
        for prev in &ucols {
            let d = dot3(&u, prev);
            u = sub3(&u, &prev.map(|x| x * d));
        }
        let n = norm3(&u);
        if n > 1e-12 * scale {
            ucols.push(u.map(|x| x / n));
        } else {
            ucols.push(orthogonal_completion(&ucols));
        }
    }
    ucols.push(cross3(&ucols[0], &ucols[1]));

    let mut singulars = [0.0; 3];
    for i in 0..3 {
        singulars[i] = dot3(&ucols[i], &mat3_vec(&t, &vcols[i]));
    }
    let mut left = [[0.0; 3]; 3];
    let mut right = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            left[i][j] = ucols[j][i];
            right[j][i] = vcols[j][i];
        }
    }
    Ok(SvdDecomposition {
        left,
        singulars,
        right,
    })
}

fn orthogonal_completion(existing: &[[f64; 3]]) -> [f64; 3] {
    let candidates = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut best = [0.0; 3];
    let mut best_norm = -1.0;
    for cand in candidates {
        let mut u = cand;
        for prev in existing {
            let d = dot3(&u, prev);
            u = sub3(&u, &prev.map(|x| x * d));
        }
        let n = norm3(&u);
        if n > best_norm {
            best_norm = n;
            best = u.map(|x| x / n);
        }
    }
    best
}

/// Decides whether a Pauli-frame transfer matrix is a decoherence channel and
/// extracts its basis and parameters.
///
/// The basis axis is only defined up to sign; flipping it maps φ to -φ. The
/// returned axis is oriented with its first non-negligible component among
/// (z, x, y) positive.
pub fn classify_decoherence(e: &TransferMatrix, tol: f64) -> Option<DecoherenceChannel> {
    if !e.is_trace_preserving(tol) || !e.is_unital(tol) {
        return None;
    }
    let t = e.block();
    let tmi = sub_identity(&t);
    let ttmi = sub_identity(&transpose3(&t));
    let m = add3(
        &mat3_mul(&transpose3(&tmi), &tmi),
        &mat3_mul(&transpose3(&ttmi), &ttmi),
    );
    let flat: Vec<f64> = m.iter().flatten().copied().collect();
    let eig = herm_eig(&ComplexMatrix::from_real(3, 3, &flat).ok()?, tol).ok()?;
    // A unique fixed axis: exactly one (numerically) vanishing eigenvalue.
    if eig.values[2] >= 1e-9 || eig.values[1] < 1e-9 {
        return None;
    }
    let mut axis = [
        eig.vectors[(0, 2)].re,
        eig.vectors[(1, 2)].re,
        eig.vectors[(2, 2)].re,
    ];
    let n = norm3(&axis);
    axis = axis.map(|x| x / n);
    let lead = [axis[2], axis[0], axis[1]]
        .into_iter()
        .find(|v| v.abs() > 1e-12)
        .unwrap_or(1.0);
    if lead < 0.0 {
        axis = axis.map(|x| -x);
    }

    let basis = DecoherenceBasis::from_axis(axis).ok()?;
    let local = e.from_pauli_frame(&basis);
    let b = local.block();
    // Remaining structure: unit S_3 row/column, a = d, b = -c.
    let structural = [b[0][2], b[1][2], b[2][0], b[2][1], b[2][2] - 1.0]
        .iter()
        .all(|v| v.abs() <= tol);
    if !structural || (b[0][0] - b[1][1]).abs() > tol || (b[0][1] + b[1][0]).abs() > tol {
        return None;
    }
    let a = 0.5 * (b[0][0] + b[1][1]);
    let bb = 0.5 * (b[0][1] - b[1][0]);
    let lambda = a.hypot(bb);
    if lambda >= 1.0 - tol {
        return None;
    }
    let phi = if lambda > 0.0 { bb.atan2(a) } else { 0.0 };
    let params = DecoherenceParams::new(lambda, phi).ok()?;
    Some(DecoherenceChannel { basis, params })
}

pub(crate) fn mat3_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub(crate) fn transpose3(a: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[j][i];
        }
    }
    out
}

pub(crate) fn det3(a: &Mat3) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

fn add3(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = *a;
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] += b[i][j];
        }
    }
    out
}

fn sub_identity(a: &Mat3) -> Mat3 {
    let mut out = *a;
    for (i, row) in out.iter_mut().enumerate() {
        row[i] -= 1.0;
    }
    out
}

fn mat3_vec(a: &Mat3, v: &[f64; 3]) -> [f64; 3] {
    [dot3(&a[0], v), dot3(&a[1], v), dot3(&a[2], v)]
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sub3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm3(a: &[f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}
