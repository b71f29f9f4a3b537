//! Harmonic expansion of a single ReLU neuron `x ↦ max(0, wᵀx)` on S².
//!
//! About the north pole the neuron is the axisymmetric cap `max(0, cos τ)`
//! with coefficients
//!
//! ```text
//! c_ℓ = 2π √((2ℓ+1)/(4π)) ∫₀¹ t P_ℓ(t) dt.
//! ```
//!
//! The integral has a closed form: `1/2` for ℓ = 0, `1/3` for ℓ = 1, zero for
//! odd ℓ ≥ 3, and for even ℓ = 2k ≥ 2
//!
//! ```text
//! ∫₀¹ t P_2k(t) dt = (−1)^{k+1} (2k−2)! / (4^k (k−1)! (k+1)!)
//! ```
//!
//! so the even coefficients alternate in sign and decay like `ℓ^{-2}`. The
//! frequently quoted form `(√π/24)(1/2)^ℓ √(2ℓ+1)(ℓ²+3ℓ+2)` agrees with the
//! integral only at ℓ = 2; it is kept as [`quoted_closed_form`] for
//! comparison tables and is never used in the numerics.
//!
//! For a general direction `w`, rotating the cap by `R_w` mixes orders within
//! each degree: `coeff(ℓ, j) = c_ℓ D^{(ℓ)}_{j0}(R_w)` with
//! `D^{(ℓ)}_{j0}(R_w) = √(4π/(2ℓ+1)) conj(Y_ℓ^j(τ_w, φ_w))`. The conjugate is
//! the convention fixed by `Y_ℓ^0(R_w⁻¹x) = Σ_j D^{(ℓ)}_{j0}(R_w) Y_ℓ^j(x)`;
//! the unit tests check that identity directly.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::geometry::Direction;
use crate::harmonics::{
    gauss_legendre, sph_harm, sph_harm_all, sph_harm_with_dtau, HarmonicSpectrum, SphereGrid,
};

/// Smallest `sin τ_w` for which the direction gradient is evaluated.
pub const POLAR_GRADIENT_LIMIT: f64 = 1e-8;

/// `∫₀¹ t P_ℓ(t) dt` in closed form.
pub fn cap_moment(ell: usize) -> f64 {
    match ell {
        0 => 0.5,
        1 => 1.0 / 3.0,
        l if l % 2 == 1 => 0.0,
        l => {
            // I_2 = 1/8, I_{2k+2} / I_{2k} = −(2k−1) / (2(k+2))
            let mut moment = 0.125;
            for k in 1..(l / 2) {
                moment *= -((2 * k - 1) as f64) / (2 * (k + 2)) as f64;
            }
            moment
        }
    }
}

/// Exact cap coefficient `c_ℓ`.
pub fn relu_coefficient(ell: usize) -> f64 {
    2.0 * PI * ((2 * ell + 1) as f64 / (4.0 * PI)).sqrt() * cap_moment(ell)
}

/// The widely quoted closed form: `π/2` at ℓ = 0, `√(3π)/3` at ℓ = 1 and
/// `(√π/24)(1/2)^ℓ √(2ℓ+1)(ℓ²+3ℓ+2)` for ℓ ≥ 2. Only ℓ ∈ {1, 2} agree with
/// the defining integral.
pub fn quoted_closed_form(ell: usize) -> f64 {
    match ell {
        0 => PI / 2.0,
        1 => (3.0 * PI).sqrt() / 3.0,
        l => {
            let lf = l as f64;
            PI.sqrt() / 24.0 * 0.5f64.powi(l as i32) * (2.0 * lf + 1.0).sqrt() * (lf * lf + 3.0 * lf + 2.0)
        }
    }
}

/// `c_ℓ` by Gauss–Legendre quadrature of `∫₀¹ t P_ℓ(t) dt`, using as many
/// nodes on `[0, 1]` as the grid places on one hemisphere.
pub fn relu_coefficient_quadrature(ell: usize, grid: &SphereGrid) -> Result<f64> {
    if grid.exactness_degree() < 2 * ell + 2 {
        return Err(domain(format!(
            "grid exactness {} is below {} needed for degree {ell}",
            grid.exactness_degree(),
            2 * ell + 2
        )));
    }
    let n = grid.exactness_degree() / 2 + 1;
    let (x, w) = gauss_legendre(n);
    let moment: f64 = x
        .iter()
        .zip(&w)
        .map(|(xi, wi)| {
            let t = (xi + 1.0) / 2.0;
            wi / 2.0 * t * legendre(ell, t)
        })
        .sum();
    Ok(2.0 * PI * ((2 * ell + 1) as f64 / (4.0 * PI)).sqrt() * moment)
}

fn legendre(ell: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if ell == 0 {
        return 1.0;
    }
    for k in 2..=ell {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Tabulated `c_ℓ` for `ℓ = 0..=ell_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct CapCoefficients {
    c: Vec<f64>,
}

impl CapCoefficients {
    pub fn new(ell_max: usize) -> Self {
        Self {
            c: (0..=ell_max).map(relu_coefficient).collect(),
        }
    }

    pub fn ell_max(&self) -> usize {
        self.c.len() - 1
    }

    pub fn get(&self, ell: usize) -> f64 {
        self.c[ell]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.c
    }
}

/// Rotation-mixing element `D^{(ℓ)}_{j0}(R_w)`.
pub fn wigner_d_j0(ell: usize, j: i64, w: &Direction) -> Result<Complex64> {
    let y = sph_harm(ell, j, &w.to_point())?;
    Ok(y.conj() * (4.0 * PI / (2 * ell + 1) as f64).sqrt())
}

/// Spectrum of `x ↦ max(0, wᵀx)` through degree `ell_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronSpectrum {
    spectrum: HarmonicSpectrum,
    direction: Direction,
}

impl NeuronSpectrum {
    pub fn spectrum(&self) -> &HarmonicSpectrum {
        &self.spectrum
    }

    pub fn direction(&self) -> &Direction {
        &self.direction
    }

    pub fn into_spectrum(self) -> HarmonicSpectrum {
        self.spectrum
    }
}

pub fn neuron_spectrum(w: &Direction, ell_max: usize) -> NeuronSpectrum {
    let ys = sph_harm_all(ell_max, &w.to_point());
    let mut spectrum = HarmonicSpectrum::zeros(ell_max);
    for ell in 0..=ell_max {
        let scale = relu_coefficient(ell) * (4.0 * PI / (2 * ell + 1) as f64).sqrt();
        let base = ell * ell + ell;
        for k in (base - ell)..=(base + ell) {
            spectrum.coeffs_mut()[k] = ys[k].conj() * scale;
        }
    }
    NeuronSpectrum {
        spectrum,
        direction: *w,
    }
}

/// Spectrum of `Σ_i a_i max(0, w_iᵀx)`.
pub fn network_spectrum(a: &[f64], w: &[Direction], ell_max: usize) -> HarmonicSpectrum {
    let mut total = HarmonicSpectrum::zeros(ell_max);
    for (ai, wi) in a.iter().zip(w) {
        if *ai != 0.0 {
            total.add_scaled(*ai, neuron_spectrum(wi, ell_max).spectrum());
        }
    }
    total
}

/// Gradient of `c_ℓ D^{(ℓ)}_{j0}(R_w)` with respect to the Cartesian
/// components of `w`.
///
/// The angles are read as `cos τ = w_z/‖w‖`, `tan φ = w_y/w_x`, so
///
/// ```text
/// ∇τ = (w_x w_z, w_y w_z, −ρ²) / (‖w‖² ρ),   ∇φ = (−w_y, w_x, 0) / ρ²,   ρ² = w_x² + w_y²
/// ```
///
/// and the harmonic contributes `∂Y/∂τ` (the Legendre bracket) and
/// `∂Y/∂φ = ijY`. Both blocks are conjugated along with `Y`.
pub fn neuron_spectrum_grad(w: &Direction, ell: usize, j: i64) -> Result<[Complex64; 3]> {
    gradient_at(w.as_vector(), ell, j)
}

pub(crate) fn gradient_at(v: &Vector3<f64>, ell: usize, j: i64) -> Result<[Complex64; 3]> {
    if j.unsigned_abs() as usize > ell {
        return Err(domain(format!("order {j} exceeds degree {ell}")));
    }
    let r2 = v.norm_squared();
    let rho2 = v.x * v.x + v.y * v.y;
    let rho = rho2.sqrt();
    if rho / r2.sqrt() <= POLAR_GRADIENT_LIMIT {
        return Err(domain("direction gradient is singular at the poles"));
    }
    let c = relu_coefficient(ell);
    if c == 0.0 {
        return Ok([Complex64::new(0.0, 0.0); 3]);
    }
    let point = Direction::normalize(*v)?.to_point();
    let (y, dy_dtau) = sph_harm_with_dtau(ell, j, &point);
    let dy_dphi = Complex64::new(0.0, j as f64) * y;
    let scale = c * (4.0 * PI / (2 * ell + 1) as f64).sqrt();

    let grad_tau = Vector3::new(v.x * v.z, v.y * v.z, -rho2) / (r2 * rho);
    let grad_phi = Vector3::new(-v.y, v.x, 0.0) / rho2;
    let (a, b) = (dy_dtau.conj() * scale, dy_dphi.conj() * scale);
    Ok([0, 1, 2].map(|k| a * grad_tau[k] + b * grad_phi[k]))
}
