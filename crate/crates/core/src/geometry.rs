//! Points, directions and rotations on the unit sphere S².

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Result};

/// Accepted deviation of `‖v‖` from one for inputs that claim to be unit.
pub const UNIT_TOLERANCE: f64 = 1e-9;

/// Squared equatorial radius below which a direction is treated as a pole.
pub const POLE_THRESHOLD_SQ: f64 = 1e-24;

/// A point of S² in polar coordinates, `tau ∈ [0, π]` from the north pole
/// and `phi ∈ [0, 2π)` the azimuth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint {
    tau: f64,
    phi: f64,
}

impl SpherePoint {
    /// Builds a point, wrapping `phi` into `[0, 2π)`.
    pub fn new(tau: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&tau) || !phi.is_finite() {
            return Err(domain(format!("polar angle {tau} outside [0, π]")));
        }
        Ok(Self {
            tau,
            phi: wrap_azimuth(phi),
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Cartesian embedding `(sin τ cos φ, sin τ sin φ, cos τ)`.
    pub fn to_cartesian(&self) -> Vector3<f64> {
        let (st, ct) = self.tau.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Vector3::new(st * cp, st * sp, ct)
    }

    /// Inverse of [`to_cartesian`](Self::to_cartesian). The azimuth of the
    /// two poles is defined as 0.
    pub fn from_cartesian(v: &Vector3<f64>) -> Result<Self> {
        let n = v.norm();
        if !n.is_finite() || (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(domain(format!("vector of norm {n} is not on S²")));
        }
        Ok(Self::from_unit_unchecked(v))
    }

    pub(crate) fn from_unit_unchecked(v: &Vector3<f64>) -> Self {
        let rho2 = v.x * v.x + v.y * v.y;
        if rho2 < POLE_THRESHOLD_SQ {
            let tau = if v.z >= 0.0 { 0.0 } else { PI };
            return Self { tau, phi: 0.0 };
        }
        // atan2 keeps full precision near both poles, unlike acos(z).
        let tau = rho2.sqrt().atan2(v.z);
        let phi = wrap_azimuth(v.y.atan2(v.x));
        Self { tau, phi }
    }
}

fn wrap_azimuth(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs.
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// A unit vector in ℝ³, used for neuron directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction(Vector3<f64>);

impl Direction {
    pub const NORTH: Direction = Direction(Vector3::new(0.0, 0.0, 1.0));

    /// Accepts a vector that is already unit to within [`UNIT_TOLERANCE`]
    /// and snaps it onto the sphere.
    pub fn new(v: Vector3<f64>) -> Result<Self> {
        let n = v.norm();
        if !n.is_finite() || (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(domain(format!("direction of norm {n} is not unit")));
        }
        Ok(Self(v / n))
    }

    /// Scales any non-zero finite vector onto the sphere.
    pub fn normalize(v: Vector3<f64>) -> Result<Self> {
        let n = v.norm();
        if !n.is_finite() || n == 0.0 {
            return Err(domain(format!("cannot normalise vector of norm {n}")));
        }
        Ok(Self(v / n))
    }

    pub fn from_point(p: &SpherePoint) -> Self {
        Self(p.to_cartesian())
    }

    pub fn as_vector(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn to_point(&self) -> SpherePoint {
        SpherePoint::from_unit_unchecked(&self.0)
    }

    /// True when the direction sits on (or numerically at) a pole.
    pub fn is_polar(&self) -> bool {
        self.0.x * self.0.x + self.0.y * self.0.y < POLE_THRESHOLD_SQ
    }

    pub fn dot(&self, x: &Vector3<f64>) -> f64 {
        self.0.dot(x)
    }
}

/// A proper rotation of ℝ³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation3(Matrix3<f64>);

impl Rotation3 {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.transpose())
    }

    /// The Rodrigues rotation `I + sin θ K + (1 − cos θ) K²` about the axis
    /// `k = (−w_y, w_x, 0)/‖·‖` with `θ = arccos w_z`, which carries the north
    /// pole onto `w`. At the south pole the axis is fixed to `(1, 0, 0)`.
    pub fn to_direction(w: &Direction) -> Self {
        let v = w.as_vector();
        let rho2 = v.x * v.x + v.y * v.y;
        let (axis, theta) = if rho2 < POLE_THRESHOLD_SQ {
            if v.z > 0.0 {
                return Self::identity();
            }
            (Vector3::new(1.0, 0.0, 0.0), PI)
        } else {
            let rho = rho2.sqrt();
            (
                Vector3::new(-v.y / rho, v.x / rho, 0.0),
                rho.atan2(v.z),
            )
        };
        let k = axis.cross_matrix();
        let (s, c) = theta.sin_cos();
        Self(Matrix3::identity() + k * s + k * k * (1.0 - c))
    }
}

/// Convenience alias for [`Rotation3::to_direction`].
pub fn rotation_to(w: &Direction) -> Rotation3 {
    Rotation3::to_direction(w)
}

/// How sample points are laid out on the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingScheme {
    /// i.i.d. area-uniform draws: `cos τ ~ U[−1, 1]`, `φ ~ U[0, 2π)`.
    #[default]
    Random,
    /// Deterministic Fibonacci lattice; the seed is ignored.
    Fibonacci,
}

/// `n` i.i.d. area-uniform points, reproducible for a fixed seed.
pub fn sample_uniform(n: usize, seed: u64) -> Result<Vec<SpherePoint>> {
    if n == 0 {
        return Err(domain("sample count must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(draw_uniform(n, &mut rng))
}

pub(crate) fn draw_uniform<R: Rng>(n: usize, rng: &mut R) -> Vec<SpherePoint> {
    (0..n)
        .map(|_| {
            let z: f64 = rng.random_range(-1.0..=1.0);
            let phi: f64 = rng.random_range(0.0..TAU);
            SpherePoint {
                tau: z.clamp(-1.0, 1.0).acos(),
                phi,
            }
        })
        .collect()
}

/// `n` points of the spherical Fibonacci lattice (equal-area latitude bands,
/// golden-angle azimuths).
pub fn fibonacci_lattice(n: usize) -> Result<Vec<SpherePoint>> {
    if n == 0 {
        return Err(domain("sample count must be at least 1"));
    }
    let golden = PI * (3.0 - 5f64.sqrt());
    Ok((0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            SpherePoint {
                tau: z.acos(),
                phi: wrap_azimuth(golden * i as f64),
            }
        })
        .collect())
}

pub fn sample(scheme: SamplingScheme, n: usize, seed: u64) -> Result<Vec<SpherePoint>> {
    match scheme {
        SamplingScheme::Random => sample_uniform(n, seed),
        SamplingScheme::Fibonacci => fibonacci_lattice(n),
    }
}
