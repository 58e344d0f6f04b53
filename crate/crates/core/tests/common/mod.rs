#![allow(dead_code)]

use qubit_decoherence::channels::{angle_distance, DecoherenceBasis, DecoherenceChannel, DensityMatrix};
use qubit_decoherence::collisions::CollisionSpec;
use qubit_decoherence::smallmat::{c, expm, kron, pauli, ComplexMatrix, C64, DEFAULT_TOL, ONE, ZERO};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::f64::consts::TAU;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn gauss(rng: &mut StdRng) -> f64 {
    // Box-Muller
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (TAU * v).cos()
}

pub fn random_complex(rng: &mut StdRng) -> C64 {
    c(gauss(rng), gauss(rng))
}

pub fn random_vector(n: usize, rng: &mut StdRng) -> Vec<C64> {
    let v: Vec<C64> = (0..n).map(|_| random_complex(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

pub fn random_matrix(n: usize, rng: &mut StdRng) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| random_complex(rng))
}

pub fn random_hermitian(n: usize, rng: &mut StdRng) -> ComplexMatrix {
    let a = random_matrix(n, rng);
    (&a + &a.adjoint()).scale_real(0.5)
}

/// e^{iγ} [[a, -b*], [b, a*]] for 2x2, exp(iH) otherwise.
pub fn random_unitary(n: usize, rng: &mut StdRng) -> ComplexMatrix {
    if n == 2 {
        let v = random_vector(2, rng);
        let ph = C64::from_polar(1.0, rng.gen_range(0.0..TAU));
        return ComplexMatrix::from_vec(2, 2, vec![v[0] * ph, -v[1].conj() * ph, v[1] * ph, v[0].conj() * ph])
            .unwrap();
    }
    expm(&random_hermitian(n, rng).scale(c(0.0, 1.0)))
}

/// Full-rank mixed state G G† / Tr.
pub fn random_density(n: usize, rng: &mut StdRng) -> ComplexMatrix {
    let g = random_matrix(n, rng);
    let p = g.matmul(&g.adjoint());
    let tr = p.trace().re;
    p.scale_real(1.0 / tr)
}

pub fn random_pure2(rng: &mut StdRng) -> [C64; 2] {
    let v = random_vector(2, rng);
    [v[0], v[1]]
}

pub fn random_qubit_state(rng: &mut StdRng) -> DensityMatrix {
    DensityMatrix::new(random_density(2, rng), DEFAULT_TOL).unwrap()
}

pub fn random_basis(rng: &mut StdRng) -> DecoherenceBasis {
    DecoherenceBasis::new(random_unitary(2, rng), 1e-10).unwrap()
}

pub fn random_spec(rng: &mut StdRng, pure_reservoir: bool) -> CollisionSpec {
    let xi = if pure_reservoir {
        DensityMatrix::pure(random_pure2(rng)).unwrap()
    } else {
        random_qubit_state(rng)
    };
    CollisionSpec::new(
        random_unitary(2, rng),
        random_unitary(2, rng),
        xi,
        random_basis(rng),
        1e-10,
    )
    .unwrap()
}

pub fn random_amplitudes(rng: &mut StdRng) -> (C64, C64) {
    let v = random_vector(2, rng);
    (v[0], v[1])
}

/// Whether two classifications agree up to the axis flip (u, φ) ~ (-u, -φ).
pub fn same_channel(a: &DecoherenceChannel, axis: [f64; 3], lambda: f64, phi: f64, tol: f64) -> bool {
    let u = a.basis.axis();
    let dist = |s: f64| (0..3).map(|i| (u[i] - s * axis[i]).abs()).fold(0.0, f64::max);
    let lam_ok = (a.params.lambda() - lambda).abs() <= tol;
    let direct = dist(1.0) <= tol && angle_distance(a.params.phi(), phi) <= tol;
    let flipped = dist(-1.0) <= tol && angle_distance(a.params.phi(), -phi) <= tol;
    lam_ok && (direct || flipped)
}

/// Concurrence from the roots of the characteristic polynomial
/// det(zI - ϱϱ̃), found by Durand-Kerner iteration with the determinant
/// evaluated by pivoted elimination.
pub fn concurrence_oracle(rho: &ComplexMatrix) -> f64 {
    let yy = kron(&pauli::y(), &pauli::y());
    let tilde = yy.matmul(&rho.conj()).matmul(&yy);
    let r = rho.matmul(&tilde);
    let n = r.rows();
    let char_poly = |z: C64| {
        let mut m = r.scale_real(-1.0);
        for i in 0..n {
            m[(i, i)] += z;
        }
        det(m)
    };
    let mut l: Vec<f64> = durand_kerner(n, char_poly)
        .into_iter()
        .map(|z| z.re.max(0.0).sqrt())
        .collect();
    l.sort_by(|a, b| b.partial_cmp(a).unwrap());
    (l[0] - l[1] - l[2] - l[3]).max(0.0)
}

pub fn det(mut m: ComplexMatrix) -> C64 {
    let n = m.rows();
    let mut d = ONE;
    for k in 0..n {
        let p = (k..n)
            .max_by(|&a, &b| m[(a, k)].norm().partial_cmp(&m[(b, k)].norm()).unwrap())
            .unwrap();
        if m[(p, k)] == ZERO {
            return ZERO;
        }
        if p != k {
            for j in 0..n {
                let t = m[(k, j)];
                m[(k, j)] = m[(p, j)];
                m[(p, j)] = t;
            }
            d = -d;
        }
        d *= m[(k, k)];
        for i in k + 1..n {
            let f = m[(i, k)] / m[(k, k)];
            for j in k..n {
                let v = m[(k, j)];
                m[(i, j)] -= f * v;
            }
        }
    }
    d
}

/// Roots of a monic degree-n polynomial given by its values.
pub fn durand_kerner(n: usize, eval: impl Fn(C64) -> C64) -> Vec<C64> {
    let seed = c(0.4, 0.9);
    let mut roots: Vec<C64> = (0..n).map(|k| seed.powu(k as u32)).collect();
    for _ in 0..500 {
        let mut shift = 0.0f64;
        for i in 0..n {
            let denom: C64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| roots[i] - roots[j])
                .product();
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            shift = shift.max(step.norm());
        }
        if shift < 1e-18 {
            break;
        }
    }
    roots
}

pub fn bell_projector() -> ComplexMatrix {
    let h = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    ComplexMatrix::projector(&[h, ZERO, ZERO, h])
}
