//! Frequency-resolved diagnostics: the error field and its spectrum, the
//! fixed-direction update factor `D_ℓ`, the trained-weight evolution terms
//! `C_ℓ^j` / `G_ℓ^j`, power-law decay fits and the trajectory-level
//! frequency-principle classifier.

use std::f64::consts::PI;
use std::fmt;
use std::ops::RangeInclusive;
use std::path::Path;
use std::str::FromStr;

use nalgebra::Vector3;

use crate::csvfmt::{self, CsvBuilder, CsvTable};
use crate::error::{Error, Result};
use crate::geometry::{Direction, Rotation3, SpherePoint};
use crate::harmonics::{pairwise_sum, project, HarmonicIndex, HarmonicSpectrum, SphereGrid};
use crate::network::{forward, DirectionMode, ErrorTrace, NetworkParams, TargetFunction};
use crate::relu_spectral::{self, neuron_spectrum, relu_coefficient};

/// Initial harmonic errors below this are treated as absent.
pub const NEGLIGIBLE_ERROR: f64 = 1e-8;

/// Default convergence threshold, as a fraction of the initial error.
pub const DEFAULT_THRESHOLD: f64 = 0.2;

/// Tolerance on `‖w − north‖` for the aligned-direction hypothesis.
pub const ALIGNMENT_TOLERANCE: f64 = 1e-9;

/// A real function on S², usually `D = u − h`.
pub struct ErrorField<'a> {
    eval: Box<dyn Fn(&SpherePoint) -> f64 + 'a>,
}

impl<'a> ErrorField<'a> {
    /// `D(p) = forward(params, p) − h(p)`.
    pub fn new(params: &'a NetworkParams, h: &'a TargetFunction) -> Self {
        Self {
            eval: Box::new(move |p| forward(params, p) - h.eval(p)),
        }
    }

    pub fn from_fn(f: impl Fn(&SpherePoint) -> f64 + 'a) -> Self {
        Self { eval: Box::new(f) }
    }

    pub fn eval(&self, p: &SpherePoint) -> f64 {
        (self.eval)(p)
    }

    /// Largest `|D|` over the grid nodes.
    pub fn max_abs_on(&self, grid: &SphereGrid) -> f64 {
        grid.nodes()
            .iter()
            .map(|n| self.eval(&n.point).abs())
            .fold(0.0, f64::max)
    }
}

impl fmt::Debug for ErrorField<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ErrorField")
    }
}

/// Harmonic spectrum of `D = forward − h` by grid projection.
pub fn error_spectrum(
    params: &NetworkParams,
    h: &TargetFunction,
    grid: &SphereGrid,
    ell_max: usize,
) -> Result<HarmonicSpectrum> {
    let field = ErrorField::new(params, h);
    project(|p: &SpherePoint| field.eval(p), grid, ell_max)
}

/// `grid` rotated so that its equatorial split lies on the boundary of the
/// cap `{wᵀx > 0}`; the cap is then exactly the upper half of the nodes.
fn cap_grid(w: &Direction, grid: &SphereGrid) -> SphereGrid {
    grid.rotated(&Rotation3::to_direction(w))
}

/// Where the cap integrals place their quadrature nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CapRule {
    /// Rotate the grid so its equatorial split follows the cap boundary;
    /// exact for smooth `D` up to the grid's degree.
    #[default]
    Rotated,
    /// Use the grid as given, e.g. to reproduce what a gradient step on
    /// that grid as a dataset sees.
    AsGiven,
}

fn rule_grid(w: &Direction, grid: &SphereGrid, rule: CapRule) -> SphereGrid {
    match rule {
        CapRule::Rotated => cap_grid(w, grid),
        CapRule::AsGiven => grid.clone(),
    }
}

/// `∫ D(x) ReLU(wᵀx) dΩ`.
pub fn cap_integral_scalar(d: &ErrorField<'_>, w: &Direction, grid: &SphereGrid) -> f64 {
    cap_integral_scalar_with(d, w, grid, CapRule::Rotated)
}

pub fn cap_integral_scalar_with(d: &ErrorField<'_>, w: &Direction, grid: &SphereGrid, rule: CapRule) -> f64 {
    let rotated = rule_grid(w, grid, rule);
    let terms: Vec<f64> = rotated
        .nodes()
        .iter()
        .filter_map(|n| {
            let z = w.dot(&n.point.to_cartesian());
            (z > 0.0).then(|| n.weight * z * d.eval(&n.point))
        })
        .collect();
    pairwise_sum(&terms)
}

/// `∫_{wᵀx > 0} D(x) x dΩ`, the integral behind `∇_w ReLU(wᵀx)`.
pub fn cap_integral_vector(d: &ErrorField<'_>, w: &Direction, grid: &SphereGrid) -> Vector3<f64> {
    cap_integral_vector_with(d, w, grid, CapRule::Rotated)
}

pub fn cap_integral_vector_with(
    d: &ErrorField<'_>,
    w: &Direction,
    grid: &SphereGrid,
    rule: CapRule,
) -> Vector3<f64> {
    let rotated = rule_grid(w, grid, rule);
    let terms: Vec<Vector3<f64>> = rotated
        .nodes()
        .iter()
        .filter_map(|n| {
            let x = n.point.to_cartesian();
            (w.dot(&x) > 0.0).then(|| x * (n.weight * d.eval(&n.point)))
        })
        .collect();
    Vector3::new(
        pairwise_sum(&terms.iter().map(|v| v.x).collect::<Vec<_>>()),
        pairwise_sum(&terms.iter().map(|v| v.y).collect::<Vec<_>>()),
        pairwise_sum(&terms.iter().map(|v| v.z).collect::<Vec<_>>()),
    )
}

/// `C(h) = ∫_0^{2π} ∫_0^{π/2} h cos τ sin τ dτ dφ`.
pub fn c_of_h(h: &TargetFunction, grid: &SphereGrid) -> f64 {
    let field = ErrorField::from_fn(|p| h.eval(p));
    cap_integral_scalar(&field, &Direction::NORTH, grid)
}

/// `D_ℓ = m (2π/3 Σ_k a_k − C(h)) c_ℓ` for `ℓ = 0..=ell_max`.
///
/// Only meaningful when every direction is the north pole; anything else
/// is rejected.
pub fn fixed_mode_d_ell(
    params: &NetworkParams,
    h: &TargetFunction,
    grid: &SphereGrid,
    ell_max: usize,
) -> Result<Vec<f64>> {
    if let Some((i, w)) = params
        .w()
        .iter()
        .enumerate()
        .find(|(_, w)| (w.as_vector() - Direction::NORTH.as_vector()).norm() > ALIGNMENT_TOLERANCE)
    {
        return Err(Error::Precondition(format!(
            "direction {i} = {:?} is not aligned with the polar axis",
            w.as_vector().as_slice()
        )));
    }
    let m = params.width() as f64;
    let factor = m * (2.0 * PI / 3.0 * params.sum_a() - c_of_h(h, grid));
    Ok((0..=ell_max).map(|ell| factor * relu_coefficient(ell)).collect())
}

/// Output-weight (`c`) and direction (`g`) contributions to the time
/// derivative of the error spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionTerms {
    pub c: HarmonicSpectrum,
    pub g: HarmonicSpectrum,
    /// Neurons left out of `g` because their direction is at a pole.
    pub skipped: Vec<usize>,
}

impl EvolutionTerms {
    pub fn ell_max(&self) -> usize {
        self.c.ell_max()
    }

    /// `max_j |C_ℓ^j|` per degree.
    pub fn c_magnitude(&self, j: i64) -> Vec<f64> {
        (0..=self.ell_max())
            .map(|ell| if j.unsigned_abs() as usize <= ell { self.c.get(ell, j).norm() } else { 0.0 })
            .collect()
    }

    pub fn g_magnitude(&self, j: i64) -> Vec<f64> {
        (0..=self.ell_max())
            .map(|ell| if j.unsigned_abs() as usize <= ell { self.g.get(ell, j).norm() } else { 0.0 })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.c.max_abs().max(self.g.max_abs())
    }

    /// CSV `ell,j,C_re,C_im,G_re,G_im`.
    pub fn to_csv(&self) -> String {
        let mut csv = CsvBuilder::with_header("ell,j,C_re,C_im,G_re,G_im");
        for idx in HarmonicIndex::all(self.ell_max()) {
            let c = self.c.get(idx.ell(), idx.j());
            let g = self.g.get(idx.ell(), idx.j());
            csv.row([
                idx.ell().to_string(),
                idx.j().to_string(),
                csvfmt::float(c.re),
                csvfmt::float(c.im),
                csvfmt::float(g.re),
                csvfmt::float(g.im),
            ]);
        }
        csv.as_str().to_string()
    }
}

/// `C(ℓ,j) = −Σ_i S_i c_ℓ D_{j0}^{(ℓ)}(R_{w_i})` with
/// `S_i = ∫ D ReLU(w_iᵀx) dΩ`, and, for trainable directions,
/// `G(ℓ,j) = −Σ_i a_i² V_i · ∇_{w_i}[c_ℓ D_{j0}^{(ℓ)}(R_{w_i})]` with
/// `V_i = ∫_{cap_i} D x dΩ`. Both integrals are evaluated on copies of
/// `grid` rotated to `w_i`.
///
/// Under gradient flow on `∫ D² dΩ` the error spectrum moves at `2(C + G)`.
pub fn evolution_terms(
    params: &NetworkParams,
    h: &TargetFunction,
    grid: &SphereGrid,
    ell_max: usize,
) -> Result<EvolutionTerms> {
    evolution_terms_with(params, h, grid, ell_max, CapRule::Rotated)
}

/// [`evolution_terms`] with a choice of cap quadrature.
pub fn evolution_terms_with(
    params: &NetworkParams,
    h: &TargetFunction,
    grid: &SphereGrid,
    ell_max: usize,
    rule: CapRule,
) -> Result<EvolutionTerms> {
    let field = ErrorField::new(params, h);
    let mut c = HarmonicSpectrum::zeros(ell_max);
    let mut g = HarmonicSpectrum::zeros(ell_max);
    let mut skipped = Vec::new();
    let trainable = params.mode() == DirectionMode::Trainable;

    for (i, (&a, w)) in params.a().iter().zip(params.w()).enumerate() {
        let s = cap_integral_scalar_with(&field, w, grid, rule);
        c.add_scaled(-s, neuron_spectrum(w, ell_max).spectrum());

        if !trainable || a == 0.0 {
            continue;
        }
        let v = cap_integral_vector_with(&field, w, grid, rule);
        let mut contribution = HarmonicSpectrum::zeros(ell_max);
        let mut polar = false;
        for idx in HarmonicIndex::all(ell_max) {
            match relu_spectral::neuron_spectrum_grad(w, idx.ell(), idx.j()) {
                Ok(grad) => {
                    let dot = grad[0] * v.x + grad[1] * v.y + grad[2] * v.z;
                    contribution.coeffs_mut()[idx.flat()] = dot;
                }
                Err(_) => {
                    polar = true;
                    break;
                }
            }
        }
        if polar {
            log::warn!("neuron {i} points at a pole; left out of the rotation term");
            skipped.push(i);
            continue;
        }
        g.add_scaled(-a * a, &contribution);
    }
    Ok(EvolutionTerms { c, g, skipped })
}

/// Result of a least-squares power-law fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// `k` in `|v_ℓ| ≈ 2^b ℓ^k / 2^ℓ`.
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

/// Fits `log₂ v_ℓ + ℓ = k log₂ ℓ + b` over `ell_range`, where `values` is
/// indexed by `ℓ`. Non-positive (and non-finite) values are left out.
pub fn decay_fit(values: &[f64], ell_range: RangeInclusive<usize>) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = ell_range
        .filter(|&ell| ell >= 1)
        .filter_map(|ell| values.get(ell).map(|&v| (ell, v)))
        .filter(|&(_, v)| v > 0.0 && v.is_finite())
        .map(|(ell, v)| ((ell as f64).log2(), v.log2() + ell as f64))
        .collect();
    if pts.len() < 4 {
        return Err(Error::Domain(format!(
            "decay fit needs at least 4 positive values, got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let k = sxy / sxx;
    let b = my - k * mx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - k * p.0 - b).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(DecayFit {
        exponent: k,
        intercept: b,
        r_squared,
        n_points: pts.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FpLabel {
    Adheres,
    Partial,
    Violates,
}

impl fmt::Display for FpLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Adheres => "adheres",
            Self::Partial => "partial",
            Self::Violates => "violates",
        })
    }
}

impl FromStr for FpLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adheres" => Ok(Self::Adheres),
            "partial" => Ok(Self::Partial),
            "violates" => Ok(Self::Violates),
            other => Err(Error::Config(format!("unknown verdict label `{other}`"))),
        }
    }
}

/// Knobs of [`classify_fp_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct FpOptions {
    pub threshold: f64,
    pub floor: f64,
    pub ell_range: RangeInclusive<usize>,
}

impl Default for FpOptions {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            floor: NEGLIGIBLE_ERROR,
            ell_range: 1..=10,
        }
    }
}

/// Convergence behaviour of one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeConvergence {
    pub ell: usize,
    pub initial: f64,
    /// First recorded epoch with error ≤ threshold × initial.
    pub epoch: Option<usize>,
    /// Final error over initial error.
    pub final_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FpVerdict {
    pub j: i64,
    pub label: FpLabel,
    /// Modes that entered the comparison, in increasing `ℓ`.
    pub modes: Vec<ModeConvergence>,
    /// Pairs `(ℓ₁, ℓ₂)`, `ℓ₁ < ℓ₂`, where `ℓ₂` converged first.
    pub witnesses: Vec<(usize, usize)>,
    pub n_pairs: usize,
}

impl FpVerdict {
    pub fn n_inverted(&self) -> usize {
        self.witnesses.len()
    }

    pub fn convergence_epoch(&self, ell: usize) -> Option<usize> {
        self.modes.iter().find(|m| m.ell == ell).and_then(|m| m.epoch)
    }

    pub fn report(&self) -> String {
        let mut out = format!(
            "j = {}: {} ({} of {} comparable pairs inverted)\n",
            self.j,
            self.label,
            self.n_inverted(),
            self.n_pairs
        );
        for m in &self.modes {
            let epoch = m.epoch.map_or_else(|| "never".to_string(), |e| e.to_string());
            out.push_str(&format!(
                "  ell {:>2}: initial {:.3e}, converged at {epoch}, final/initial {:.3e}\n",
                m.ell, m.initial, m.final_ratio
            ));
        }
        if !self.witnesses.is_empty() {
            let list: Vec<String> = self.witnesses.iter().map(|(a, b)| format!("({a},{b})")).collect();
            out.push_str(&format!("  inverted pairs: {}\n", list.join(" ")));
        }
        out
    }
}

/// CSV `j,label,n_pairs,n_inverted`.
pub fn verdicts_csv(verdicts: &[FpVerdict]) -> String {
    let mut csv = CsvBuilder::with_header("j,label,n_pairs,n_inverted");
    for v in verdicts {
        csv.row([
            v.j.to_string(),
            v.label.to_string(),
            v.n_pairs.to_string(),
            v.n_inverted().to_string(),
        ]);
    }
    csv.as_str().to_string()
}

/// Reads back `(j, label)` pairs from a verdict CSV.
pub fn read_verdicts(path: &Path) -> Result<Vec<(i64, FpLabel)>> {
    let table = CsvTable::read(path)?;
    let err = |msg: String| Error::Parse {
        path: path.to_path_buf(),
        msg,
    };
    table
        .expect_header(&["j", "label", "n_pairs", "n_inverted"])
        .map_err(err)?;
    table
        .rows
        .iter()
        .map(|row| {
            let j = csvfmt::parse_field(&row[0], "j").map_err(err)?;
            let label = row[1].parse().map_err(|e: Error| err(e.to_string()))?;
            Ok((j, label))
        })
        .collect()
}

/// [`classify_fp_with`] with the default floor and `ℓ ∈ 1..=10`.
pub fn classify_fp(trace: &ErrorTrace, j: i64, threshold: f64) -> Result<FpVerdict> {
    classify_fp_with(
        trace,
        j,
        &FpOptions {
            threshold,
            ..FpOptions::default()
        },
    )
}

/// Trajectory-level frequency-principle verdict for order `j`.
///
/// Each mode with initial error ≥ `floor` gets a convergence epoch, the
/// first record at which its error is ≤ `threshold` × initial. A pair
/// `ℓ₁ < ℓ₂` is inverted when `ℓ₂` converges strictly earlier; when either
/// never converges, the final/initial ratios are compared instead. No
/// inversions: adheres; at least half inverted: violates; else partial.
pub fn classify_fp_with(trace: &ErrorTrace, j: i64, opts: &FpOptions) -> Result<FpVerdict> {
    if trace.records.len() < 2 {
        return Err(Error::Precondition(
            "the trace needs at least two recorded epochs".into(),
        ));
    }
    if !(opts.threshold > 0.0 && opts.threshold < 1.0) {
        return Err(Error::Config(format!(
            "threshold must lie in (0, 1), got {}",
            opts.threshold
        )));
    }
    let lo = (*opts.ell_range.start()).max(j.unsigned_abs() as usize);
    let hi = (*opts.ell_range.end()).min(trace.ell_max);
    let mut modes = Vec::new();
    for ell in lo..=hi {
        let series = trace.series(ell, j);
        let initial = series[0];
        if !(initial >= opts.floor) {
            continue;
        }
        let epoch = series
            .iter()
            .zip(&trace.records)
            .find(|(e, _)| **e <= opts.threshold * initial)
            .map(|(_, r)| r.epoch);
        modes.push(ModeConvergence {
            ell,
            initial,
            epoch,
            final_ratio: series[series.len() - 1] / initial,
        });
    }

    let mut witnesses = Vec::new();
    let mut n_pairs = 0;
    for (k, low) in modes.iter().enumerate() {
        for high in &modes[k + 1..] {
            n_pairs += 1;
            let inverted = match (low.epoch, high.epoch) {
                (Some(e1), Some(e2)) => e2 < e1,
                _ => high.final_ratio < low.final_ratio,
            };
            if inverted {
                witnesses.push((low.ell, high.ell));
            }
        }
    }
    let label = if witnesses.is_empty() {
        FpLabel::Adheres
    } else if 2 * witnesses.len() >= n_pairs {
        FpLabel::Violates
    } else {
        FpLabel::Partial
    };
    Ok(FpVerdict {
        j,
        label,
        modes,
        witnesses,
        n_pairs,
    })
}

/// Instantaneous check of the pointwise FP inequality between two
/// consecutive records.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstantaneousFp {
    pub epoch: usize,
    /// Pairs `ℓ₁ < ℓ₂` whose update real parts are both negative.
    pub n_eligible: usize,
    /// Eligible pairs with `|Re Δ_{ℓ₁}| > |Re Δ_{ℓ₂}|`.
    pub n_adhering: usize,
}

/// Per-interval evaluation of `|Re Δ_{ℓ₁j}| > |Re Δ_{ℓ₂j}|` for pairs with
/// both updates negative, where `Δ` is the change of the complex error
/// spectrum per epoch. Requires a trace with complex spectra.
pub fn instantaneous_fp(
    trace: &ErrorTrace,
    j: i64,
    ell_range: RangeInclusive<usize>,
) -> Result<Vec<InstantaneousFp>> {
    let lo = (*ell_range.start()).max(j.unsigned_abs() as usize);
    let hi = (*ell_range.end()).min(trace.ell_max);
    let mut out = Vec::with_capacity(trace.records.len().saturating_sub(1));
    for pair in trace.records.windows(2) {
        let (prev, next) = (&pair[0], &pair[1]);
        let (Some(e0), Some(e1)) = (&prev.error, &next.error) else {
            return Err(Error::Precondition(
                "instantaneous FP needs complex error spectra in the trace".into(),
            ));
        };
        let dt = (next.epoch - prev.epoch) as f64;
        let rates: Vec<(usize, f64)> = (lo..=hi)
            .map(|ell| (ell, ((e1.get(ell, j) - e0.get(ell, j)) / dt).re))
            .collect();
        let mut n_eligible = 0;
        let mut n_adhering = 0;
        for (k, &(_, r1)) in rates.iter().enumerate() {
            for &(_, r2) in &rates[k + 1..] {
                if r1 < 0.0 && r2 < 0.0 {
                    n_eligible += 1;
                    if r1.abs() > r2.abs() {
                        n_adhering += 1;
                    }
                }
            }
        }
        out.push(InstantaneousFp {
            epoch: next.epoch,
            n_eligible,
            n_adhering,
        });
    }
    Ok(out)
}

pub fn instantaneous_csv(series: &[InstantaneousFp]) -> String {
    let mut csv = CsvBuilder::with_header("epoch,n_eligible,n_adhering");
    for s in series {
        csv.row([s.epoch.to_string(), s.n_eligible.to_string(), s.n_adhering.to_string()]);
    }
    csv.as_str().to_string()
}
