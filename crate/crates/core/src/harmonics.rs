//! Associated Legendre functions, orthonormal complex spherical harmonics,
//! product quadrature on S² and projection onto harmonic spectra.
//!
//! Conventions: `P_ℓ^j` carries the Condon–Shortley factor `(−1)^j`, and
//!
//! ```text
//! Y_ℓ^j(τ, φ) = N_ℓ^j P_ℓ^j(cos τ) e^{ijφ},   N_ℓ^j = √((2ℓ+1)/(4π) · (ℓ−j)!/(ℓ+j)!)
//! Y_ℓ^{−j}    = (−1)^j conj(Y_ℓ^j)
//! ```
//!
//! so that `∫ Y_ℓ^j conj(Y_ℓ'^j') dΩ = δ_ℓℓ' δ_jj'`.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use num_complex::Complex64;

use crate::csvfmt::{self, CsvBuilder, CsvTable};
use crate::error::{domain, Error, Result};
use crate::geometry::{Rotation3, SpherePoint};

/// Degree `ell` and order `j` of a spherical harmonic, `|j| ≤ ell`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HarmonicIndex {
    ell: usize,
    j: i64,
}

impl HarmonicIndex {
    pub fn new(ell: usize, j: i64) -> Result<Self> {
        if j.unsigned_abs() as usize > ell {
            return Err(domain(format!("order {j} exceeds degree {ell}")));
        }
        Ok(Self { ell, j })
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn j(&self) -> i64 {
        self.j
    }

    /// Position in the flat `(ℓ, j)` layout used by [`HarmonicSpectrum`].
    pub fn flat(&self) -> usize {
        flat_index(self.ell, self.j)
    }

    /// All indices with `ℓ ≤ ell_max`, ordered by degree then order.
    pub fn all(ell_max: usize) -> impl Iterator<Item = HarmonicIndex> {
        (0..=ell_max).flat_map(|ell| {
            let l = ell as i64;
            (-l..=l).map(move |j| HarmonicIndex { ell, j })
        })
    }
}

#[inline]
fn flat_index(ell: usize, j: i64) -> usize {
    ((ell * ell + ell) as i64 + j) as usize
}

/// Complex coefficients `c(ℓ, j)` for every `ℓ ≤ ell_max`, `|j| ≤ ℓ`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicSpectrum {
    ell_max: usize,
    coeffs: Vec<Complex64>,
}

impl HarmonicSpectrum {
    pub fn zeros(ell_max: usize) -> Self {
        Self {
            ell_max,
            coeffs: vec![Complex64::new(0.0, 0.0); (ell_max + 1) * (ell_max + 1)],
        }
    }

    /// Wraps coefficients laid out in [`HarmonicIndex::all`] order.
    pub fn from_coeffs(ell_max: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != (ell_max + 1) * (ell_max + 1) {
            return Err(domain(format!(
                "spectrum of degree {ell_max} needs {} coefficients, got {}",
                (ell_max + 1) * (ell_max + 1),
                coeffs.len()
            )));
        }
        Ok(Self { ell_max, coeffs })
    }

    pub fn ell_max(&self) -> usize {
        self.ell_max
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient at `(ell, j)`; zero beyond the stored band.
    pub fn get(&self, ell: usize, j: i64) -> Complex64 {
        if ell > self.ell_max || j.unsigned_abs() as usize > ell {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs[flat_index(ell, j)]
    }

    pub fn set(&mut self, ell: usize, j: i64, value: Complex64) -> Result<()> {
        let idx = HarmonicIndex::new(ell, j)?;
        if ell > self.ell_max {
            return Err(domain(format!("degree {ell} above band limit {}", self.ell_max)));
        }
        self.coeffs[idx.flat()] = value;
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (HarmonicIndex, Complex64)> + '_ {
        HarmonicIndex::all(self.ell_max).zip(self.coeffs.iter().copied())
    }

    /// Entrywise `self − other` over the common band.
    pub fn sub(&self, other: &HarmonicSpectrum) -> HarmonicSpectrum {
        let ell_max = self.ell_max.min(other.ell_max);
        let coeffs = HarmonicIndex::all(ell_max)
            .map(|i| self.get(i.ell, i.j) - other.get(i.ell, i.j))
            .collect();
        HarmonicSpectrum { ell_max, coeffs }
    }

    pub fn scale(&self, factor: f64) -> HarmonicSpectrum {
        HarmonicSpectrum {
            ell_max: self.ell_max,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// `self += factor · other` on the common band.
    pub fn add_scaled(&mut self, factor: f64, other: &HarmonicSpectrum) {
        let ell_max = self.ell_max.min(other.ell_max);
        let n = (ell_max + 1) * (ell_max + 1);
        for (a, b) in self.coeffs[..n].iter_mut().zip(&other.coeffs[..n]) {
            *a += b * factor;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `Σ |c|²` over the whole band.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `Σ_j |c(ℓ, j)|²` for each degree.
    pub fn degree_energy(&self) -> Vec<f64> {
        (0..=self.ell_max)
            .map(|ell| {
                let l = ell as i64;
                (-l..=l).map(|j| self.get(ell, j).norm_sqr()).sum()
            })
            .collect()
    }

    /// Largest violation of `c(ℓ, −j) = (−1)^j conj(c(ℓ, j))`, which holds
    /// for spectra of real-valued functions.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        self.iter()
            .filter(|(i, _)| i.j > 0)
            .map(|(i, c)| {
                let sign = if i.j % 2 == 0 { 1.0 } else { -1.0 };
                (self.get(i.ell, -i.j) - c.conj() * sign).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Synthesis `Σ c(ℓ, j) Y_ℓ^j(p)`.
    pub fn evaluate(&self, p: &SpherePoint) -> Complex64 {
        let ys = sph_harm_all(self.ell_max, p);
        self.coeffs.iter().zip(&ys).map(|(c, y)| c * y).sum()
    }

    /// CSV with header `ell,j,re,im`.
    pub fn to_csv(&self) -> String {
        let mut csv = CsvBuilder::with_header("ell,j,re,im");
        for (i, c) in self.iter() {
            csv.row([
                i.ell.to_string(),
                i.j.to_string(),
                csvfmt::float(c.re),
                csvfmt::float(c.im),
            ]);
        }
        csv.as_str().to_string()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let table = CsvTable::read(path)?;
        Self::from_table(&table).map_err(|msg| Error::Parse {
            path: path.to_path_buf(),
            msg,
        })
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let table = CsvTable::parse(text).map_err(Error::Domain)?;
        Self::from_table(&table).map_err(Error::Domain)
    }

    fn from_table(table: &CsvTable) -> std::result::Result<Self, String> {
        table.expect_header(&["ell", "j", "re", "im"])?;
        let mut entries = Vec::with_capacity(table.rows.len());
        let mut ell_max = 0;
        for row in &table.rows {
            let ell: usize = csvfmt::parse_field(&row[0], "ell")?;
            let j: i64 = csvfmt::parse_field(&row[1], "j")?;
            let re: f64 = csvfmt::parse_field(&row[2], "re")?;
            let im: f64 = csvfmt::parse_field(&row[3], "im")?;
            if j.unsigned_abs() as usize > ell {
                return Err(format!("order {j} exceeds degree {ell}"));
            }
            ell_max = ell_max.max(ell);
            entries.push((ell, j, Complex64::new(re, im)));
        }
        let mut spec = Self::zeros(ell_max);
        for (ell, j, c) in entries {
            spec.coeffs[flat_index(ell, j)] = c;
        }
        Ok(spec)
    }
}

/// Unnormalised associated Legendre function `P_ℓ^j(x)` for `0 ≤ j ≤ ℓ`,
/// Condon–Shortley phase included, by upward recurrence in `ℓ`.
pub fn assoc_legendre(ell: usize, j: usize, x: f64) -> Result<f64> {
    if j > ell {
        return Err(domain(format!("order {j} exceeds degree {ell}")));
    }
    if !(-1.0..=1.0).contains(&x) {
        return Err(domain(format!("argument {x} outside [−1, 1]")));
    }
    Ok(legendre_unchecked(ell, j, x))
}

fn legendre_unchecked(ell: usize, j: usize, x: f64) -> f64 {
    if j > ell {
        return 0.0;
    }
    // P_j^j = (−1)^j (2j−1)!! (1−x²)^{j/2}
    let s = ((1.0 - x) * (1.0 + x)).max(0.0).sqrt();
    let mut pjj = 1.0;
    for k in 1..=j {
        pjj *= -((2 * k - 1) as f64) * s;
    }
    if ell == j {
        return pjj;
    }
    let mut prev = pjj;
    let mut cur = x * (2 * j + 1) as f64 * pjj;
    for l in (j + 2)..=ell {
        let next = (x * (2 * l - 1) as f64 * cur - (l + j - 1) as f64 * prev) / (l - j) as f64;
        prev = cur;
        cur = next;
    }
    cur
}

/// `d/dτ P_ℓ^j(cos τ)` through the identity
/// `[ℓ cos τ P_ℓ^j(cos τ) − (ℓ+j) P_{ℓ−1}^j(cos τ)] / sin τ`.
pub fn assoc_legendre_dtau(ell: usize, j: usize, tau: f64) -> Result<f64> {
    if j > ell {
        return Err(domain(format!("order {j} exceeds degree {ell}")));
    }
    let (s, c) = tau.sin_cos();
    if !(tau > 0.0 && tau < PI) || s.abs() < 1e-12 {
        return Err(domain(format!("τ-derivative is singular at τ = {tau}")));
    }
    Ok(legendre_dtau_unchecked(ell, j, s, c))
}

fn legendre_dtau_unchecked(ell: usize, j: usize, sin_tau: f64, cos_tau: f64) -> f64 {
    if ell == 0 {
        return 0.0;
    }
    let p = legendre_unchecked(ell, j, cos_tau);
    let q = legendre_unchecked(ell - 1, j, cos_tau);
    (ell as f64 * cos_tau * p - (ell + j) as f64 * q) / sin_tau
}

/// `N_ℓ^j = √((2ℓ+1)/(4π) · (ℓ−j)!/(ℓ+j)!)` for `j ≥ 0`.
pub fn normalization(ell: usize, j: usize) -> f64 {
    let mut ratio = 1.0;
    for k in (ell - j + 1)..=(ell + j) {
        ratio /= k as f64;
    }
    ((2 * ell + 1) as f64 / (4.0 * PI) * ratio).sqrt()
}

/// Orthonormal complex spherical harmonic `Y_ℓ^j(p)`.
pub fn sph_harm(ell: usize, j: i64, p: &SpherePoint) -> Result<Complex64> {
    if j.unsigned_abs() as usize > ell {
        return Err(domain(format!("order {j} exceeds degree {ell}")));
    }
    let m = j.unsigned_abs() as usize;
    let value = normalized_legendre(ell, m, p.tau().cos(), p.tau().sin());
    let y = Complex64::from_polar(value, m as f64 * p.phi());
    Ok(if j >= 0 {
        y
    } else if m.is_multiple_of(2) {
        y.conj()
    } else {
        -y.conj()
    })
}

/// `N_ℓ^j P_ℓ^j(x)` by the normalised recurrence, stable for large `ℓ`.
fn normalized_legendre(ell: usize, m: usize, x: f64, s: f64) -> f64 {
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for k in 1..=m {
        pmm *= -((2 * k + 1) as f64 / (2 * k) as f64).sqrt() * s;
    }
    if ell == m {
        return pmm;
    }
    let mut prev = pmm;
    let mut cur = x * ((2 * m + 3) as f64).sqrt() * pmm;
    let mut a_prev = ((2 * m + 3) as f64).sqrt();
    for l in (m + 2)..=ell {
        let lf = l as f64;
        let mf = m as f64;
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let next = a * (x * cur - prev / a_prev);
        prev = cur;
        cur = next;
        a_prev = a;
    }
    cur
}

/// Fills `out[ℓ(ℓ+1)/2 + m] = N_ℓ^m P_ℓ^m(x)` for all `m ≤ ℓ ≤ ell_max`.
fn normalized_legendre_table(ell_max: usize, x: f64, s: f64, out: &mut Vec<f64>) {
    out.clear();
    out.resize((ell_max + 1) * (ell_max + 2) / 2, 0.0);
    let tri = |l: usize, m: usize| l * (l + 1) / 2 + m;
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for m in 0..=ell_max {
        if m > 0 {
            pmm *= -((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s;
        }
        out[tri(m, m)] = pmm;
        if m == ell_max {
            break;
        }
        let a1 = ((2 * m + 3) as f64).sqrt();
        out[tri(m + 1, m)] = x * a1 * pmm;
        let mut a_prev = a1;
        for l in (m + 2)..=ell_max {
            let lf = l as f64;
            let mf = m as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            out[tri(l, m)] = a * (x * out[tri(l - 1, m)] - out[tri(l - 2, m)] / a_prev);
            a_prev = a;
        }
    }
}

/// Every `Y_ℓ^j(p)` with `ℓ ≤ ell_max`, in [`HarmonicIndex::all`] order.
pub fn sph_harm_all(ell_max: usize, p: &SpherePoint) -> Vec<Complex64> {
    let mut table = Vec::new();
    let mut out = vec![Complex64::new(0.0, 0.0); (ell_max + 1) * (ell_max + 1)];
    sph_harm_all_into(ell_max, p, &mut table, &mut out);
    out
}

fn sph_harm_all_into(
    ell_max: usize,
    p: &SpherePoint,
    scratch: &mut Vec<f64>,
    out: &mut [Complex64],
) {
    let (s, x) = p.tau().sin_cos();
    normalized_legendre_table(ell_max, x, s, scratch);
    let phase: Vec<Complex64> = (0..=ell_max)
        .map(|m| Complex64::from_polar(1.0, m as f64 * p.phi()))
        .collect();
    for ell in 0..=ell_max {
        let base = ell * ell + ell;
        for m in 0..=ell {
            let y = phase[m] * scratch[ell * (ell + 1) / 2 + m];
            out[base + m] = y;
            if m > 0 {
                out[base - m] = if m % 2 == 0 { y.conj() } else { -y.conj() };
            }
        }
    }
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, x);
        dp = if d.is_finite() { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// One quadrature node on S².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridNode {
    pub point: SpherePoint,
    pub weight: f64,
}

/// Product quadrature on S²: Gauss–Legendre in `cos τ`, split at the
/// equator, times a uniform azimuthal rule.
///
/// Splitting the polar rule at `cos τ = 0` makes integrands with a kink on
/// the equator (ReLU caps about the poles, hemisphere integrals) piecewise
/// polynomial, so they are integrated exactly as well.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    nodes: Vec<GridNode>,
    exactness_degree: usize,
}

impl SphereGrid {
    /// `n_half` Gauss nodes on each hemisphere and `n_azimuth` equispaced
    /// azimuths. Exact for polynomials of degree `min(2·n_half − 1, n_azimuth − 1)`.
    pub fn product(n_half: usize, n_azimuth: usize) -> Result<Self> {
        if n_half == 0 || n_azimuth == 0 {
            return Err(domain("grid needs at least one node per axis"));
        }
        let (x, w) = gauss_legendre(n_half);
        let dphi = TAU / n_azimuth as f64;
        let mut nodes = Vec::with_capacity(2 * n_half * n_azimuth);
        // Southern half first so z increases along the node list.
        for (shift, _) in [(-1.0, ()), (1.0, ())] {
            for (xi, wi) in x.iter().zip(&w) {
                let t: f64 = (xi + shift) / 2.0;
                let tau = t.clamp(-1.0, 1.0).acos();
                for k in 0..n_azimuth {
                    nodes.push(GridNode {
                        point: SpherePoint::new(tau, k as f64 * dphi)?,
                        weight: wi / 2.0 * dphi,
                    });
                }
            }
        }
        Ok(Self {
            nodes,
            exactness_degree: (2 * n_half - 1).min(n_azimuth - 1),
        })
    }

    pub fn nodes(&self) -> &[GridNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Highest total polynomial degree integrated exactly.
    pub fn exactness_degree(&self) -> usize {
        self.exactness_degree
    }

    /// Largest band limit `L` such that all products `Y_ℓ conj(Y_ℓ')` with
    /// `ℓ, ℓ' ≤ L` are integrated exactly.
    pub fn capacity(&self) -> usize {
        self.exactness_degree / 2
    }

    /// The same rule with every node moved by `r`. Rotation preserves the
    /// surface measure, so the exactness degree is unchanged and the
    /// equatorial split now follows the great circle `r(equator)`.
    pub fn rotated(&self, r: &Rotation3) -> Self {
        let nodes = self
            .nodes
            .iter()
            .map(|n| GridNode {
                point: SpherePoint::from_unit_unchecked(&r.apply(&n.point.to_cartesian())),
                weight: n.weight,
            })
            .collect();
        Self {
            nodes,
            exactness_degree: self.exactness_degree,
        }
    }

    /// Weighted sum `Σ w_k f(p_k)`, pairwise-reduced.
    pub fn integrate<F: Fn(&SpherePoint) -> f64>(&self, f: F) -> f64 {
        let terms: Vec<f64> = self.nodes.iter().map(|n| n.weight * f(&n.point)).collect();
        pairwise_sum(&terms)
    }
}

/// Grid sized for band limit `ell_max`: `ell_max + 1` Gauss nodes per
/// hemisphere and `2·ell_max + 2` azimuths (exactness `2·ell_max + 1`).
pub fn build_grid(ell_max: usize) -> SphereGrid {
    SphereGrid::product(ell_max + 1, 2 * ell_max + 2).expect("grid sizes are positive")
}

/// Pairwise summation; the reduction tree depends only on the length.
pub fn pairwise_sum<T>(xs: &[T]) -> T
where
    T: Copy + Default + std::ops::Add<Output = T>,
{
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        return xs.iter().fold(T::default(), |acc, &x| acc + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Conjugated, quadrature-weighted harmonics tabulated on a grid, so that
/// repeated projections cost one matrix-vector product each.
#[derive(Debug, Clone)]
pub struct GridBasis {
    ell_max: usize,
    points: Vec<SpherePoint>,
    /// `rows[c][k] = w_k · conj(Y_c(p_k))`
    rows: Vec<Vec<Complex64>>,
}

impl GridBasis {
    pub fn new(grid: &SphereGrid, ell_max: usize) -> Result<Self> {
        if ell_max > grid.capacity() {
            return Err(domain(format!(
                "band limit {ell_max} exceeds grid capacity {} (exactness {})",
                grid.capacity(),
                grid.exactness_degree()
            )));
        }
        let n_coeff = (ell_max + 1) * (ell_max + 1);
        let mut rows = vec![Vec::with_capacity(grid.len()); n_coeff];
        let mut scratch = Vec::new();
        let mut ys = vec![Complex64::new(0.0, 0.0); n_coeff];
        for node in grid.nodes() {
            sph_harm_all_into(ell_max, &node.point, &mut scratch, &mut ys);
            for (row, y) in rows.iter_mut().zip(&ys) {
                row.push(y.conj() * node.weight);
            }
        }
        Ok(Self {
            ell_max,
            points: grid.nodes().iter().map(|n| n.point).collect(),
            rows,
        })
    }

    pub fn ell_max(&self) -> usize {
        self.ell_max
    }

    pub fn points(&self) -> &[SpherePoint] {
        &self.points
    }

    /// Projects values sampled at [`points`](Self::points).
    pub fn project_values(&self, values: &[f64]) -> HarmonicSpectrum {
        assert_eq!(values.len(), self.points.len(), "one value per grid node");
        let mut terms = vec![Complex64::new(0.0, 0.0); values.len()];
        let coeffs = self
            .rows
            .iter()
            .map(|row| {
                for ((t, r), v) in terms.iter_mut().zip(row).zip(values) {
                    *t = r * v;
                }
                pairwise_sum(&terms)
            })
            .collect();
        HarmonicSpectrum {
            ell_max: self.ell_max,
            coeffs,
        }
    }

    pub fn project_complex(&self, values: &[Complex64]) -> HarmonicSpectrum {
        assert_eq!(values.len(), self.points.len(), "one value per grid node");
        let mut terms = vec![Complex64::new(0.0, 0.0); values.len()];
        let coeffs = self
            .rows
            .iter()
            .map(|row| {
                for ((t, r), v) in terms.iter_mut().zip(row).zip(values) {
                    *t = r * v;
                }
                pairwise_sum(&terms)
            })
            .collect();
        HarmonicSpectrum {
            ell_max: self.ell_max,
            coeffs,
        }
    }
}

/// `c(ℓ, j) = Σ_k w_k f(p_k) conj(Y_ℓ^j(p_k))` for every `ℓ ≤ ell_max`.
pub fn project<F, T>(f: F, grid: &SphereGrid, ell_max: usize) -> Result<HarmonicSpectrum>
where
    F: Fn(&SpherePoint) -> T,
    T: Into<Complex64>,
{
    let basis = GridBasis::new(grid, ell_max)?;
    let values: Vec<Complex64> = basis.points().iter().map(|p| f(p).into()).collect();
    Ok(basis.project_complex(&values))
}

/// Free-function form of [`HarmonicSpectrum::evaluate`].
pub fn evaluate(spec: &HarmonicSpectrum, p: &SpherePoint) -> Complex64 {
    spec.evaluate(p)
}

/// Evaluates `Y_ℓ^j` together with its polar derivative `∂Y_ℓ^j/∂τ`.
pub(crate) fn sph_harm_with_dtau(ell: usize, j: i64, p: &SpherePoint) -> (Complex64, Complex64) {
    let m = j.unsigned_abs() as usize;
    let (s, c) = p.tau().sin_cos();
    let n = normalization(ell, m);
    let value = n * legendre_unchecked(ell, m, c);
    let dvalue = n * legendre_dtau_unchecked(ell, m, s, c);
    let phase = Complex64::from_polar(1.0, m as f64 * p.phi());
    let (y, dy) = (phase * value, phase * dvalue);
    if j >= 0 {
        (y, dy)
    } else if m.is_multiple_of(2) {
        (y.conj(), dy.conj())
    } else {
        (-y.conj(), -dy.conj())
    }
}
