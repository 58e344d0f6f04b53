//! Continuous-time decoherence: the semigroup generator, its Lindblad
//! coefficients, trajectory integration and the double-commutator form.
//!
//! Generators are real 4x4 matrices over the S-basis, acting on the Bloch
//! 4-vector (1, r). A decoherence generator has the central block
//! `[[a, b], [-b, a]]` with `a < 0` and zeros elsewhere; `exp(tG)` is then
//! `diag(1, e^{at} R_{bt}, 1)`.

use std::fmt;

use crate::channels::{
    rotation2, to_bloch, BlochVector, DecoherenceBasis, DecoherenceParams, DensityMatrix,
    TransferMatrix,
};
use crate::error::{Error, Result};
use crate::smallmat::{c, commutator, expm, herm_eig, ComplexMatrix, C64, DEFAULT_TOL, I, ZERO};

#[derive(Debug, Clone, Copy)]
pub struct Generator([[f64; 4]; 4]);

impl Generator {
    pub fn new(entries: [[f64; 4]; 4]) -> Self {
        Self(entries)
    }

    pub fn zero() -> Self {
        Self([[0.0; 4]; 4])
    }

    /// Generator whose only non-zero part is the central block
    /// `[[a, b], [c, d]]`.
    pub fn from_block(a: f64, b: f64, c: f64, d: f64) -> Self {
        let mut g = [[0.0; 4]; 4];
        g[1][1] = a;
        g[1][2] = b;
        g[2][1] = c;
        g[2][2] = d;
        Self(g)
    }

    pub fn entries(&self) -> &[[f64; 4]; 4] {
        &self.0
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.0[k][l]
    }

    /// `[[a, b], [c, d]]` = rows/columns 1..2.
    pub fn block(&self) -> [[f64; 2]; 2] {
        [[self.0[1][1], self.0[1][2]], [self.0[2][1], self.0[2][2]]]
    }

    pub fn apply_vector(&self, v: &[f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..4).map(|k| self.0[i][k] * v[k]).sum();
        }
        out
    }

    /// G[A] for an arbitrary 2x2 operator, with S-basis of `basis`.
    pub fn apply_operator(&self, a: &ComplexMatrix, basis: &DecoherenceBasis) -> ComplexMatrix {
        TransferMatrix::new(self.0).apply_operator(a, basis)
    }

    /// exp(t G) by scaling and squaring.
    pub fn exp(&self, t: f64) -> TransferMatrix {
        let flat: Vec<f64> = self.0.iter().flatten().map(|v| v * t).collect();
        let m = ComplexMatrix::from_real(4, 4, &flat).expect("4x4");
        let e = expm(&m).re();
        let mut out = [[0.0; 4]; 4];
        for (i, row) in out.iter_mut().enumerate() {
            row.copy_from_slice(&e[4 * i..4 * i + 4]);
        }
        TransferMatrix::new(out)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Generator of the semigroup interpolating the collision channel:
/// central block `[[ln λ, φ], [-φ, ln λ]] / τ`.
pub fn generator_from_params(p: &DecoherenceParams, tau: f64) -> Result<Generator> {
    if p.lambda() == 0.0 {
        return Err(Error::NoFiniteGenerator);
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!("tau = {tau} must be > 0")));
    }
    let rate = p.lambda().ln() / tau;
    let angle = p.phi() / tau;
    Ok(Generator::from_block(rate, angle, -angle, rate))
}

/// Hamiltonian coefficients `h` (H = Σ h_a S_a) and the coefficient matrix
/// `c_ab = d_ab - i e_ab` of the dissipator
/// `½ Σ c_ab ([S_a, ρ S_b] + [S_a ρ, S_b])`.
#[derive(Debug, Clone, Copy)]
pub struct LindbladSpec {
    pub h: [f64; 3],
    pub c: [[C64; 3]; 3],
}

impl LindbladSpec {
    /// Builds `c` from a symmetric `d` and antisymmetric `e`.
    pub fn from_parts(h: [f64; 3], d: [[f64; 3]; 3], e: [[f64; 3]; 3]) -> Self {
        let mut cm = [[ZERO; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                cm[i][j] = c(d[i][j], -e[i][j]);
            }
        }
        Self { h, c: cm }
    }

    pub fn d(&self) -> [[f64; 3]; 3] {
        self.c.map(|row| row.map(|z| z.re))
    }

    pub fn e(&self) -> [[f64; 3]; 3] {
        self.c.map(|row| row.map(|z| -z.im))
    }

    pub fn hamiltonian(&self, basis: &DecoherenceBasis) -> ComplexMatrix {
        let mut h = ComplexMatrix::zeros(2, 2);
        for (a, &ha) in self.h.iter().enumerate() {
            h = &h + &basis.s(a + 1).scale_real(ha);
        }
        h
    }

    /// Right-hand side of the master equation for an operator `rho`.
    pub fn rhs(&self, rho: &ComplexMatrix, basis: &DecoherenceBasis) -> ComplexMatrix {
        let s: Vec<ComplexMatrix> = (1..4).map(|j| basis.s(j)).collect();
        let mut out = commutator(&self.hamiltonian(basis), rho).scale(-I);
        for a in 0..3 {
            for b in 0..3 {
                let cab = self.c[a][b];
                if cab == ZERO {
                    continue;
                }
                let rho_sb = rho.matmul(&s[b]);
                let sa_rho = s[a].matmul(rho);
                let term = &commutator(&s[a], &rho_sb) + &commutator(&sa_rho, &s[b]);
                out = &out + &term.scale(cab * 0.5);
            }
        }
        out
    }

    /// The generator matrix of `rhs`, obtained by tomography.
    pub fn to_generator(&self, basis: &DecoherenceBasis) -> Generator {
        let e = TransferMatrix::from_action(basis, |s| self.rhs(s, basis));
        Generator(*e.entries())
    }

    /// Eigenvalues (descending) of the Hermitian coefficient matrix `c`.
    pub fn coefficient_eigenvalues(&self) -> Vec<f64> {
        let flat: Vec<C64> = self.c.iter().flatten().copied().collect();
        let m = ComplexMatrix::from_vec(3, 3, flat).expect("3x3");
        herm_eig(&m, 1e-6).expect("c is Hermitian").values
    }
}

/// Reads the Hamiltonian and dissipator coefficients off a generator.
pub fn generator_to_lindblad(g: &Generator) -> LindbladSpec {
    let m = &g.0;
    let h = [
        (m[3][2] - m[2][3]) / 4.0,
        (m[1][3] - m[3][1]) / 4.0,
        (m[2][1] - m[1][2]) / 4.0,
    ];
    let mut e = [[0.0; 3]; 3];
    e[1][2] = m[1][0] / 4.0;
    e[2][0] = m[2][0] / 4.0;
    e[0][1] = m[3][0] / 4.0;
    e[2][1] = -e[1][2];
    e[0][2] = -e[2][0];
    e[1][0] = -e[0][1];
    let mut d = [[0.0; 3]; 3];
    d[0][0] = (m[1][1] - m[2][2] - m[3][3]) / 4.0;
    d[1][1] = (m[2][2] - m[1][1] - m[3][3]) / 4.0;
    d[2][2] = (m[3][3] - m[1][1] - m[2][2]) / 4.0;
    d[0][1] = (m[1][2] + m[2][1]) / 4.0;
    d[1][2] = (m[2][3] + m[3][2]) / 4.0;
    d[0][2] = (m[1][3] + m[3][1]) / 4.0;
    d[1][0] = d[0][1];
    d[2][1] = d[1][2];
    d[2][0] = d[0][2];
    LindbladSpec::from_parts(h, d, e)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorDiagnosis {
    Valid,
    /// Trace or the S_3 component is not conserved.
    BrokenStructure,
    /// a != d
    UnequalDiagonal,
    /// b != -c
    NotRotational,
    /// a >= 0: off-diagonals do not contract.
    NotContracting,
}

impl fmt::Display for GeneratorDiagnosis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            Self::Valid => "valid decoherence generator",
            Self::BrokenStructure => "outer rows/columns must vanish (trace and S3 conservation)",
            Self::UnequalDiagonal => "central block has a != d",
            Self::NotRotational => "central block has b != -c",
            Self::NotContracting => "central block has a >= 0",
        };
        f.write_str(msg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneratorVerdict {
    pub valid: bool,
    pub diagnosis: GeneratorDiagnosis,
}

pub fn validate_decoherence_generator(g: &Generator, tol: f64) -> GeneratorVerdict {
    let verdict = |diagnosis| GeneratorVerdict {
        valid: diagnosis == GeneratorDiagnosis::Valid,
        diagnosis,
    };
    let m = &g.0;
    let outer_zero = (0..4).all(|i| {
        [m[0][i], m[3][i], m[i][0], m[i][3]]
            .iter()
            .all(|v| v.abs() <= tol)
    });
    if !outer_zero {
        return verdict(GeneratorDiagnosis::BrokenStructure);
    }
    let [[a, b], [cc, d]] = g.block();
    if (a - d).abs() > tol {
        return verdict(GeneratorDiagnosis::UnequalDiagonal);
    }
    if (b + cc).abs() > tol {
        return verdict(GeneratorDiagnosis::NotRotational);
    }
    if a >= -tol {
        return verdict(GeneratorDiagnosis::NotContracting);
    }
    verdict(GeneratorDiagnosis::Valid)
}

/// Valid generators plus the unitary limit a = 0.
fn require_evolvable(g: &Generator) -> Result<()> {
    let v = validate_decoherence_generator(g, DEFAULT_TOL);
    match v.diagnosis {
        GeneratorDiagnosis::Valid => Ok(()),
        GeneratorDiagnosis::NotContracting if g.block()[0][0].abs() <= DEFAULT_TOL => Ok(()),
        d => Err(Error::InvalidGenerator(d.to_string())),
    }
}

pub fn check_time_grid(t_grid: &[f64]) -> Result<()> {
    if let Some(t) = t_grid.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidTimeGrid(format!("time {t} is negative or not finite")));
    }
    if t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidTimeGrid("times must be nondecreasing".into()));
    }
    Ok(())
}

/// `steps + 1` equally spaced points from `t0` to `t1`.
pub fn time_grid(t0: f64, t1: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Ok(vec![t0]);
    }
    let grid: Vec<f64> = (0..=steps)
        .map(|i| {
            if i == steps {
                t1
            } else {
                t0 + (t1 - t0) * i as f64 / steps as f64
            }
        })
        .collect();
    check_time_grid(&grid)?;
    Ok(grid)
}

/// Closed-form trajectory: diagonals fixed, the off-diagonal element scaled
/// by e^{a t} and rotated by b t. Accepts a = 0 (pure precession).
pub fn evolve(
    g: &Generator,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    basis: &DecoherenceBasis,
) -> Result<Vec<DensityMatrix>> {
    require_evolvable(g)?;
    check_time_grid(t_grid)?;
    let [[a, b], _] = g.block();
    let r0 = to_bloch(rho0, basis);
    t_grid
        .iter()
        .map(|&t| {
            let rot = rotation2(b * t);
            let scale = (a * t).exp();
            let [x, y, z] = r0.0;
            let r = BlochVector::new(
                scale * (rot[0][0] * x + rot[0][1] * y),
                scale * (rot[1][0] * x + rot[1][1] * y),
                z,
            );
            DensityMatrix::from_bloch(r, basis)
        })
        .collect()
}

/// Fourth-order Runge-Kutta integration of d(1, r)/dt = G (1, r), with each
/// grid interval split into equal steps no longer than `step`.
pub fn evolve_numerical(
    g: &Generator,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    basis: &DecoherenceBasis,
    step: f64,
) -> Result<Vec<DensityMatrix>> {
    check_time_grid(t_grid)?;
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(format!("step {step} must be > 0")));
    }
    let r0 = to_bloch(rho0, basis);
    let mut v = [1.0, r0.0[0], r0.0[1], r0.0[2]];
    let mut t = 0.0;
    let mut out = Vec::with_capacity(t_grid.len());
    for &target in t_grid {
        let span = target - t;
        if span > 0.0 {
            let n = (span / step).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for _ in 0..n {
                v = rk4_step(g, &v, h);
            }
        }
        t = target;
        out.push(DensityMatrix::from_bloch(BlochVector::new(v[1], v[2], v[3]), basis)?);
    }
    Ok(out)
}

fn rk4_step(g: &Generator, v: &[f64; 4], h: f64) -> [f64; 4] {
    let axpy = |x: &[f64; 4], k: &[f64; 4], s: f64| -> [f64; 4] {
        [x[0] + s * k[0], x[1] + s * k[1], x[2] + s * k[2], x[3] + s * k[3]]
    };
    let k1 = g.apply_vector(v);
    let k2 = g.apply_vector(&axpy(v, &k1, h / 2.0));
    let k3 = g.apply_vector(&axpy(v, &k2, h / 2.0));
    let k4 = g.apply_vector(&axpy(v, &k3, h));
    let mut out = *v;
    for i in 0..4 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// ρ̇ = -i[H, ρ] - (1/2γ)[H, [H, ρ]] with H = h3 S_3.
#[derive(Debug, Clone, Copy)]
pub struct DoubleCommutatorForm {
    pub h3: f64,
    pub gamma: f64,
}

impl DoubleCommutatorForm {
    pub fn hamiltonian(&self, basis: &DecoherenceBasis) -> ComplexMatrix {
        basis.s(3).scale_real(self.h3)
    }

    pub fn rhs(&self, rho: &ComplexMatrix, basis: &DecoherenceBasis) -> ComplexMatrix {
        let h = self.hamiltonian(basis);
        let inner = commutator(&h, rho);
        let unitary = inner.scale(-I);
        let double = commutator(&h, &inner).scale_real(-1.0 / (2.0 * self.gamma));
        &unitary + &double
    }
}

/// For a valid generator with block `[[a, b], [-b, a]]`: H = -(b/2) S_3
/// (the Hamiltonian coefficient read off the antisymmetric part) and
/// γ = -b²/(2a).
pub fn to_double_commutator(g: &Generator, tol: f64) -> Result<DoubleCommutatorForm> {
    let verdict = validate_decoherence_generator(g, tol);
    let [[a, b], _] = g.block();
    match verdict.diagnosis {
        GeneratorDiagnosis::Valid => {}
        GeneratorDiagnosis::NotContracting if a.abs() <= tol => {
            return Err(Error::DegenerateDoubleCommutator(
                "no dissipation (a = 0): gamma diverges".into(),
            ))
        }
        d => return Err(Error::InvalidGenerator(d.to_string())),
    }
    if b.abs() <= tol {
        return Err(Error::DegenerateDoubleCommutator(format!(
            "b = 0: pure dephasing, use rho' = -(a/2)(S3 rho S3 - rho) with a = {a}"
        )));
    }
    let h3 = generator_to_lindblad(g).h[2];
    Ok(DoubleCommutatorForm {
        h3,
        gamma: -b * b / (2.0 * a),
    })
}
