//! Brute-force two-qubit numerics used as ground truth for the closed forms.
//!
//! Nothing here uses the dimer's Bell-diagonal structure: states are dense 4×4
//! complex matrices, entropies come from Hermitian eigensolves, and discord is
//! found by searching over projective measurements on qubit B.
//!
//! Basis ordering is |ab⟩ with index 2a + b, qubit A first.

use std::f64::consts::PI;

use nalgebra::{Complex, Matrix2, Matrix4, SymmetricEigen};

use crate::dimer::DimerParams;
use crate::error::{invalid, Error, Result};
use crate::measures::{binary_entropy, xlog2x};
use crate::units::{CONSTANTS, MU_0};

pub type C64 = Complex<f64>;
pub type Mat4 = Matrix4<C64>;
pub type Mat2 = Matrix2<C64>;

const STATE_TOL: f64 = 1e-12;

/// Coarse search grid over the Bloch sphere of qubit B.
pub const GRID_THETA: usize = 32;
pub const GRID_PHI: usize = 64;
/// Refinement stops once both angle steps are below this.
pub const ANGLE_TOL: f64 = 1e-7;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Pauli matrices x, y, z.
pub fn pauli() -> [Mat2; 3] {
    let i = C64::i();
    [
        Mat2::new(c(0.0), c(1.0), c(1.0), c(0.0)),
        Mat2::new(c(0.0), -i, i, c(0.0)),
        Mat2::new(c(1.0), c(0.0), c(0.0), c(-1.0)),
    ]
}

pub fn kron(a: &Mat2, b: &Mat2) -> Mat4 {
    Mat4::from_fn(|r, col| a[(r / 2, col / 2)] * b[(r % 2, col % 2)])
}

/// Eigenvalues of a Hermitian matrix after explicit symmetrization.
fn hermitian_eigenvalues(m: &Mat4) -> [f64; 4] {
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut v = [0.0; 4];
    for (k, e) in eig.eigenvalues.iter().enumerate() {
        v[k] = *e;
    }
    v
}

/// f(M) for Hermitian M via its eigendecomposition.
fn hermitian_map(m: &Mat4, f: impl Fn(f64) -> f64) -> Mat4 {
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(sym);
    let d = Mat4::from_diagonal(&eig.eigenvalues.map(|e| c(f(e))));
    eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Trace norm Tr√(X†X) of a Hermitian matrix, i.e. the sum of |eigenvalues|.
pub fn trace_norm(m: &Mat4) -> f64 {
    hermitian_eigenvalues(m).iter().map(|e| e.abs()).sum()
}

/// A validated two-qubit density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitDensityMatrix(Mat4);

impl TwoQubitDensityMatrix {
    /// Checks hermiticity, unit trace and positivity, then symmetrizes.
    pub fn new(m: Mat4) -> Result<Self> {
        let asym = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if asym.is_nan() || asym > STATE_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {asym:e})")));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let m = (m + m.adjoint()).scale(0.5);
        let min = hermitian_eigenvalues(&m).iter().copied().fold(f64::INFINITY, f64::min);
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(TwoQubitDensityMatrix(m))
    }

    pub fn maximally_mixed() -> Self {
        TwoQubitDensityMatrix(Mat4::identity().scale(0.25))
    }

    /// Projector onto (|01⟩ − |10⟩)/√2.
    pub fn singlet() -> Self {
        TwoQubitDensityMatrix(bell_projectors()[0])
    }

    /// diag(a, 1−a) ⊗ diag(b, 1−b).
    pub fn product_diagonal(a: f64, b: f64) -> Result<Self> {
        let m = |p: f64| Mat2::new(c(p), c(0.0), c(0.0), c(1.0 - p));
        Self::new(kron(&m(a), &m(b)))
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.0
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        hermitian_eigenvalues(&self.0)
    }

    /// (U_A ⊗ U_B) ρ (U_A ⊗ U_B)†.
    pub fn rotate_locally(&self, ua: &Mat2, ub: &Mat2) -> Self {
        let u = kron(ua, ub);
        TwoQubitDensityMatrix(u * self.0 * u.adjoint())
    }

    /// Populations on the Bell states, in the order Ψ⁻, Ψ⁺, Φ⁺, Φ⁻.
    pub fn bell_populations(&self) -> [f64; 4] {
        let p = bell_projectors();
        let mut out = [0.0; 4];
        for (k, proj) in p.iter().enumerate() {
            out[k] = (proj * self.0).trace().re;
        }
        out
    }

    pub fn reduced_a(&self) -> Mat2 {
        let m = &self.0;
        Mat2::from_fn(|a, ap| m[(2 * a, 2 * ap)] + m[(2 * a + 1, 2 * ap + 1)])
    }

    pub fn reduced_b(&self) -> Mat2 {
        let m = &self.0;
        Mat2::from_fn(|b, bp| m[(b, bp)] + m[(2 + b, 2 + bp)])
    }
}

/// Bell projectors Ψ⁻, Ψ⁺, Φ⁺, Φ⁻.
fn bell_projectors() -> [Mat4; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let vecs: [[f64; 4]; 4] = [[0.0, h, -h, 0.0], [0.0, h, h, 0.0], [h, 0.0, 0.0, h], [h, 0.0, 0.0, -h]];
    vecs.map(|v| Mat4::from_fn(|r, col| c(v[r] * v[col])))
}

/// Matrix of −J S₁·S₂ (K) in the product basis, with S = σ/2.
pub fn heisenberg_hamiltonian(j: f64) -> Mat4 {
    pauli().iter().map(|s| kron(s, s)).fold(Mat4::zeros(), |acc, m| acc + m).scale(-j / 4.0)
}

fn check_temperature(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("temperature must be positive and finite, got {t}")))
    }
}

/// ρ = e^{−H/T}/Z built from an explicit diagonalization of H.
pub fn gibbs_state(params: &DimerParams, t: f64) -> Result<TwoQubitDensityMatrix> {
    check_temperature(t)?;
    let eig = SymmetricEigen::new(heisenberg_hamiltonian(params.j));
    let e_min = eig.eigenvalues.min();
    let w = eig.eigenvalues.map(|e| (-(e - e_min) / t).exp());
    let z: f64 = w.sum();
    let d = Mat4::from_diagonal(&w.map(|x| c(x / z)));
    let rho = eig.eigenvectors * d * eig.eigenvectors.adjoint();
    Ok(TwoQubitDensityMatrix((rho + rho.adjoint()).scale(0.5)))
}

/// von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &TwoQubitDensityMatrix) -> f64 {
    -rho.eigenvalues().iter().map(|&l| xlog2x(l.max(0.0))).sum::<f64>()
}

/// Entropy of a 2×2 density matrix from its closed-form eigenvalues.
fn qubit_entropy(m: &Mat2) -> f64 {
    let tr = (m[(0, 0)] + m[(1, 1)]).re;
    let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re;
    if tr <= 0.0 {
        return 0.0;
    }
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    binary_entropy(((0.5 * tr + disc) / tr).min(1.0))
}

pub fn mutual_information(rho: &TwoQubitDensityMatrix) -> f64 {
    qubit_entropy(&rho.reduced_a()) + qubit_entropy(&rho.reduced_b()) - von_neumann_entropy(rho)
}

/// Wootters concurrence.
///
/// With ρ̃ = (σ_y⊗σ_y)ρ*(σ_y⊗σ_y), the λᵢ are the square roots of the
/// eigenvalues of ρρ̃. They are computed as the singular values of √ρ·√ρ̃,
/// which avoids taking square roots of tiny, rounding-dominated eigenvalues.
pub fn wootters_concurrence(rho: &TwoQubitDensityMatrix) -> f64 {
    let [_, sy, _] = pauli();
    let yy = kron(&sy, &sy);
    let sqrt_rho = hermitian_map(&rho.0, |e| e.max(0.0).sqrt());
    let sqrt_tilde = yy * sqrt_rho.conjugate() * yy;
    let a = sqrt_rho * sqrt_tilde;
    let mut lambda: Vec<f64> = a.singular_values().iter().copied().collect();
    lambda.sort_by(|a, b| b.total_cmp(a));
    (lambda[0] - lambda[1] - lambda[2] - lambda[3]).max(0.0)
}

/// Projective measurement on qubit B along Bloch direction (θ, φ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementBasis {
    pub theta: f64,
    pub phi: f64,
}

impl MeasurementBasis {
    pub fn new(theta: f64, phi: f64) -> Self {
        MeasurementBasis { theta, phi }
    }

    /// The antipodal direction, whose projectors are these two swapped.
    pub fn antipode(&self) -> Self {
        MeasurementBasis { theta: PI - self.theta, phi: (self.phi + PI).rem_euclid(2.0 * PI) }
    }

    /// Rank-1 projectors ½(I ± n·σ).
    pub fn projectors(&self) -> [Mat2; 2] {
        let n = [self.theta.sin() * self.phi.cos(), self.theta.sin() * self.phi.sin(), self.theta.cos()];
        let [sx, sy, sz] = pauli();
        let ndots = sx.scale(n[0]) + sy.scale(n[1]) + sz.scale(n[2]);
        let id = Mat2::identity();
        [(id + ndots).scale(0.5), (id - ndots).scale(0.5)]
    }
}

/// Unnormalized conditional state of A: Tr_B[(I⊗Π)ρ(I⊗Π)] = Tr_B[(I⊗Π)ρ].
fn conditional_a(rho: &Mat4, proj: &Mat2) -> Mat2 {
    Mat2::from_fn(|a, ap| {
        let mut s = C64::new(0.0, 0.0);
        for b in 0..2 {
            for bp in 0..2 {
                s += rho[(2 * a + b, 2 * ap + bp)] * proj[(bp, b)];
            }
        }
        s
    })
}

/// Σ_k p_k S(ρ_k) for the two outcomes of `basis` on qubit B.
pub fn measured_conditional_entropy(rho: &TwoQubitDensityMatrix, basis: &MeasurementBasis) -> f64 {
    basis
        .projectors()
        .iter()
        .map(|proj| {
            let m = conditional_a(&rho.0, proj);
            let p = (m[(0, 0)] + m[(1, 1)]).re;
            if p <= 0.0 {
                0.0
            } else {
                p * qubit_entropy(&m.unscale(p))
            }
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscordSearch {
    pub discord: f64,
    pub classical_correlation: f64,
    pub mutual_information: f64,
    /// Measurement that minimizes the conditional entropy.
    pub basis: MeasurementBasis,
    /// Objective evaluations spent.
    pub evaluations: usize,
}

/// Entropic discord by explicit optimization over projective measurements on B.
///
/// A fixed θ×φ grid is scanned, then the best point is refined by coordinate
/// descent with step halving. The schedule is deterministic.
pub fn numerical_discord(rho: &TwoQubitDensityMatrix) -> DiscordSearch {
    let objective = |theta: f64, phi: f64| measured_conditional_entropy(rho, &MeasurementBasis::new(theta, phi));
    let d_theta = PI / (GRID_THETA - 1) as f64;
    let d_phi = 2.0 * PI / GRID_PHI as f64;

    let mut best = (f64::INFINITY, 0.0, 0.0);
    let mut evaluations = 0;
    for i in 0..GRID_THETA {
        for k in 0..GRID_PHI {
            let (theta, phi) = (i as f64 * d_theta, k as f64 * d_phi);
            let v = objective(theta, phi);
            evaluations += 1;
            if v < best.0 {
                best = (v, theta, phi);
            }
        }
    }

    let (mut value, mut theta, mut phi) = best;
    let (mut s_theta, mut s_phi) = (d_theta, d_phi);
    while s_theta > ANGLE_TOL || s_phi > ANGLE_TOL {
        let mut moved = false;
        for (dt, dp) in [(s_theta, 0.0), (-s_theta, 0.0), (0.0, s_phi), (0.0, -s_phi)] {
            let v = objective(theta + dt, phi + dp);
            evaluations += 1;
            if v < value {
                value = v;
                theta += dt;
                phi += dp;
                moved = true;
                break;
            }
        }
        if !moved {
            s_theta *= 0.5;
            s_phi *= 0.5;
        }
    }

    let s_a = qubit_entropy(&rho.reduced_a());
    let mi = mutual_information(rho);
    let classical = s_a - value;
    DiscordSearch {
        discord: mi - classical,
        classical_correlation: classical,
        mutual_information: mi,
        basis: MeasurementBasis::new(theta, phi),
        evaluations,
    }
}

/// Linear-response susceptibility χ = N g²μ_B² ⟨(S₁ᶻ+S₂ᶻ)²⟩/(k_B T) in m³/mol.
pub fn fluctuation_susceptibility(params: &DimerParams, t: f64) -> Result<f64> {
    let rho = gibbs_state(params, t)?;
    let [_, _, sz] = pauli();
    let id = Mat2::identity();
    let sz_tot = (kron(&sz, &id) + kron(&id, &sz)).scale(0.5);
    let sz2 = (rho.matrix() * sz_tot * sz_tot).trace().re;
    let k = &CONSTANTS;
    let prefactor = MU_0 * k.n_a * (params.g * k.mu_b).powi(2) / k.k_b;
    Ok(prefactor * sz2 / t)
}

/// ¼(I + Σ cᵢ σᵢ⊗σᵢ); errors if any Bell population is negative.
pub fn bell_diagonal_state(c1: f64, c2: f64, c3: f64) -> Result<TwoQubitDensityMatrix> {
    let p = pauli();
    let coeffs = [c1, c2, c3];
    let m = (0..3).fold(Mat4::identity(), |acc, i| acc + kron(&p[i], &p[i]).scale(coeffs[i]));
    TwoQubitDensityMatrix::new(m.scale(0.25))
        .map_err(|e| invalid(format!("({c1}, {c2}, {c3}) is not a valid Bell-diagonal state: {e}")))
}

/// Closed Bell-diagonal 1-norm geometric discord, ½·int(|c₁|, |c₂|, |c₃|),
/// where int picks the intermediate value.
pub fn bell_diagonal_geometric_discord_reference(c1: f64, c2: f64, c3: f64) -> Result<f64> {
    bell_diagonal_state(c1, c2, c3)?;
    let mut a = [c1.abs(), c2.abs(), c3.abs()];
    a.sort_by(f64::total_cmp);
    Ok(0.5 * a[1])
}

/// Matrix route for the same quantity: ½ min_k ‖ρ − ρ_k‖₁ over the three
/// classical-quantum candidates ρ_k = ¼(I + c_k σ_k⊗σ_k).
pub fn bell_diagonal_geometric_discord_by_trace_norm(c1: f64, c2: f64, c3: f64) -> Result<f64> {
    let rho = bell_diagonal_state(c1, c2, c3)?;
    let p = pauli();
    let coeffs = [c1, c2, c3];
    let best = (0..3)
        .map(|k| {
            let cand = (Mat4::identity() + kron(&p[k], &p[k]).scale(coeffs[k])).scale(0.25);
            trace_norm(&(rho.matrix() - cand))
        })
        .fold(f64::INFINITY, f64::min);
    Ok(0.5 * best)
}

/// SU(2) element from Euler angles, used to build random local rotations.
pub fn su2(alpha: f64, beta: f64, gamma: f64) -> Mat2 {
    let (cb, sb) = ((beta / 2.0).cos(), (beta / 2.0).sin());
    let e = |a: f64| C64::from_polar(1.0, a);
    Mat2::new(
        e(-(alpha + gamma) / 2.0) * cb,
        -e(-(alpha - gamma) / 2.0) * sb,
        e((alpha - gamma) / 2.0) * sb,
        e((alpha + gamma) / 2.0) * cb,
    )
}
