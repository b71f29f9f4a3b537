//! The shallow ReLU network `u(x) = Σ_i a_i max(0, w_iᵀx)` on S², its
//! sin τ-weighted loss, gradients, initialisation and training loop.

use std::f64::consts::TAU;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Vector3};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::csvfmt::{self, CsvBuilder, CsvTable};
use crate::diagnostics;
use crate::error::{domain, Error, Result};
use crate::geometry::{self, Direction, SamplingScheme, SpherePoint};
use crate::harmonics::{build_grid, GridBasis, HarmonicIndex, HarmonicSpectrum, SphereGrid};
use crate::relu_spectral::network_spectrum;

/// Loss above which training is declared divergent.
pub const DIVERGENCE_LOSS: f64 = 1e6;

/// Initial ridge parameter for the least-squares initialisation.
pub const INITIAL_RIDGE: f64 = 1e-8;

/// RNG stream identifiers; each consumer of the run seed gets its own stream.
const STREAM_SAMPLES: u64 = 0;
const STREAM_DIRECTIONS: u64 = 1;
const STREAM_WEIGHTS: u64 = 2;
const STREAM_BATCHES: u64 = 3;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DirectionMode {
    /// Only the output weights `a` are trained.
    #[default]
    Fixed,
    /// Output weights and directions are trained; directions are projected
    /// back onto S² after every step.
    Trainable,
}

impl fmt::Display for DirectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Fixed => "fixed",
            Self::Trainable => "trainable",
        })
    }
}

impl FromStr for DirectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" | "fixed_directions" => Ok(Self::Fixed),
            "trainable" | "trainable_directions" => Ok(Self::Trainable),
            other => Err(Error::Config(format!("unknown direction mode `{other}`"))),
        }
    }
}

/// Output weights and unit directions of a network with `m ≥ 1` neurons.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    a: Vec<f64>,
    w: Vec<Direction>,
    mode: DirectionMode,
}

impl NetworkParams {
    pub fn new(a: Vec<f64>, w: Vec<Direction>, mode: DirectionMode) -> Result<Self> {
        if a.is_empty() {
            return Err(domain("a network needs at least one neuron"));
        }
        if a.len() != w.len() {
            return Err(domain(format!(
                "{} output weights but {} directions",
                a.len(),
                w.len()
            )));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(domain("output weights must be finite"));
        }
        Ok(Self { a, w, mode })
    }

    pub fn width(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn w(&self) -> &[Direction] {
        &self.w
    }

    pub fn mode(&self) -> DirectionMode {
        self.mode
    }

    pub fn with_mode(mut self, mode: DirectionMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_output_weights(mut self, a: Vec<f64>) -> Result<Self> {
        if a.len() != self.w.len() {
            return Err(domain("output weight count must match the width"));
        }
        self.a = a;
        Ok(self)
    }

    pub fn sum_a(&self) -> f64 {
        self.a.iter().sum()
    }

    /// Harmonic spectrum of the network output through degree `ell_max`,
    /// computed from the exact single-neuron expansions.
    pub fn spectrum(&self, ell_max: usize) -> HarmonicSpectrum {
        network_spectrum(&self.a, &self.w, ell_max)
    }

    /// CSV snapshot `i,a,wx,wy,wz`.
    pub fn to_csv(&self) -> String {
        let mut csv = CsvBuilder::with_header("i,a,wx,wy,wz");
        for (i, (a, w)) in self.a.iter().zip(&self.w).enumerate() {
            let v = w.as_vector();
            csv.row([
                i.to_string(),
                csvfmt::float(*a),
                csvfmt::float(v.x),
                csvfmt::float(v.y),
                csvfmt::float(v.z),
            ]);
        }
        csv.as_str().to_string()
    }

    pub fn read_csv(path: &Path, mode: DirectionMode) -> Result<Self> {
        let table = CsvTable::read(path)?;
        let parse = || -> std::result::Result<(Vec<f64>, Vec<Direction>), String> {
            table.expect_header(&["i", "a", "wx", "wy", "wz"])?;
            let mut a = Vec::new();
            let mut w = Vec::new();
            for row in &table.rows {
                a.push(csvfmt::parse_field(&row[1], "a")?);
                let v = Vector3::new(
                    csvfmt::parse_field(&row[2], "wx")?,
                    csvfmt::parse_field(&row[3], "wy")?,
                    csvfmt::parse_field(&row[4], "wz")?,
                );
                w.push(Direction::new(v).map_err(|e| e.to_string())?);
            }
            Ok((a, w))
        };
        let (a, w) = parse().map_err(|msg| Error::Parse {
            path: path.to_path_buf(),
            msg,
        })?;
        Self::new(a, w, mode)
    }
}

/// Network output `Σ_i a_i max(0, w_iᵀx(p))`.
pub fn forward(params: &NetworkParams, p: &SpherePoint) -> f64 {
    forward_cartesian(&params.a, &params.w, &p.to_cartesian())
}

fn forward_cartesian(a: &[f64], w: &[Direction], x: &Vector3<f64>) -> f64 {
    a.iter()
        .zip(w)
        .map(|(ai, wi)| ai * wi.dot(x).max(0.0))
        .sum()
}

/// One term `amp · sin(p τ) · cos(q φ)` of a trigonometric target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigTerm {
    pub amp: f64,
    pub p: i32,
    pub q: i32,
}

impl TrigTerm {
    pub fn eval(&self, x: &SpherePoint) -> f64 {
        self.amp * (self.p as f64 * x.tau()).sin() * (self.q as f64 * x.phi()).cos()
    }
}

/// Target functions `h(τ, φ)`.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetFunction {
    Zero,
    /// `sin τ cos 3φ + sin 3τ cos 5φ`.
    Trig,
    HarmonicSum(Vec<TrigTerm>),
    /// The output of another network; fitting it exactly makes `D ≡ 0`.
    Teacher(Box<NetworkParams>),
}

impl TargetFunction {
    /// The high-frequency pattern `sin 10τ cos 10φ` used for initialisation.
    pub fn high_frequency_pattern() -> Self {
        Self::HarmonicSum(vec![TrigTerm {
            amp: 1.0,
            p: 10,
            q: 10,
        }])
    }

    pub fn eval(&self, x: &SpherePoint) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Trig => {
                x.tau().sin() * (3.0 * x.phi()).cos()
                    + (3.0 * x.tau()).sin() * (5.0 * x.phi()).cos()
            }
            Self::HarmonicSum(terms) => terms.iter().map(|t| t.eval(x)).sum(),
            Self::Teacher(params) => forward(params, x),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Zero => true,
            Self::HarmonicSum(terms) => terms.iter().all(|t| t.amp == 0.0),
            Self::Trig => false,
            Self::Teacher(params) => params.a.iter().all(|&a| a == 0.0),
        }
    }
}

impl fmt::Display for TargetFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => f.write_str("zero"),
            Self::Trig => f.write_str("trig"),
            Self::HarmonicSum(terms) => {
                f.write_str("sum:")?;
                for (i, t) in terms.iter().enumerate() {
                    if i > 0 {
                        f.write_str(";")?;
                    }
                    write!(f, "{}/{}/{}", t.amp, t.p, t.q)?;
                }
                Ok(())
            }
            Self::Teacher(params) => write!(f, "teacher:{}", params.width()),
        }
    }
}

impl FromStr for TargetFunction {
    type Err = Error;

    /// `zero`, `trig`, `high_frequency`, or
    /// `sum:amp/p/q;amp/p/q;…` for `Σ amp sin(pτ) cos(qφ)`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => return Ok(Self::Zero),
            "trig" => return Ok(Self::Trig),
            "high_frequency" | "highfreq" => return Ok(Self::high_frequency_pattern()),
            _ => {}
        }
        let body = s
            .strip_prefix("sum:")
            .ok_or_else(|| Error::Config(format!("unknown target `{s}`")))?;
        let mut terms = Vec::new();
        for chunk in body.split(';').filter(|c| !c.is_empty()) {
            let parts: Vec<&str> = chunk.split('/').collect();
            let bad = || Error::Config(format!("bad target term `{chunk}`, expected amp/p/q"));
            if parts.len() != 3 {
                return Err(bad());
            }
            terms.push(TrigTerm {
                amp: parts[0].trim().parse().map_err(|_| bad())?,
                p: parts[1].trim().parse().map_err(|_| bad())?,
                q: parts[2].trim().parse().map_err(|_| bad())?,
            });
        }
        if terms.is_empty() {
            return Err(Error::Config("empty harmonic sum".into()));
        }
        Ok(Self::HarmonicSum(terms))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitScheme {
    /// Area-uniform directions, `a_i ~ N(0, 1/m)`.
    #[default]
    Default,
    /// Area-uniform directions, `a` fitted to `sin 10τ cos 10φ`.
    HighFrequency,
}

impl fmt::Display for InitScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Default => "default",
            Self::HighFrequency => "high_frequency",
        })
    }
}

impl FromStr for InitScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(Self::Default),
            "high_frequency" | "highfreq" => Ok(Self::HighFrequency),
            other => Err(Error::Config(format!("unknown init scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BatchMode {
    #[default]
    Full,
    /// Shuffled mini-batches of the given size; size 1 is plain SGD.
    MiniBatch(usize),
}

impl fmt::Display for BatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Full => f.write_str("full"),
            Self::MiniBatch(k) => write!(f, "{k}"),
        }
    }
}

impl FromStr for BatchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "full" {
            return Ok(Self::Full);
        }
        s.parse::<usize>()
            .ok()
            .filter(|&k| k >= 1)
            .map(Self::MiniBatch)
            .ok_or_else(|| Error::Config(format!("batch must be `full` or a positive size, got `{s}`")))
    }
}

/// Everything that determines a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub m: usize,
    pub lr: f64,
    pub epochs: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub ell_max: usize,
    pub mode: DirectionMode,
    pub init: InitScheme,
    pub record_every: usize,
    pub batch: BatchMode,
    pub sampling: SamplingScheme,
    /// Band limit of the grid used to project the target.
    pub target_grid_ell: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            m: 100,
            lr: 1e-3,
            epochs: 10_000,
            n_samples: 100,
            seed: 0,
            ell_max: 12,
            mode: DirectionMode::Fixed,
            init: InitScheme::Default,
            record_every: 10,
            batch: BatchMode::Full,
            sampling: SamplingScheme::Random,
            target_grid_ell: 64,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.m == 0 {
            return fail("m must be at least 1");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return fail("lr must be positive");
        }
        if self.epochs == 0 {
            return fail("epochs must be at least 1");
        }
        if self.n_samples == 0 {
            return fail("n_samples must be at least 1");
        }
        if self.record_every == 0 {
            return fail("record_every must be at least 1");
        }
        if self.target_grid_ell < self.ell_max {
            return fail("target_grid_ell must be at least ell_max");
        }
        Ok(())
    }

    pub fn samples(&self) -> Result<Vec<SpherePoint>> {
        match self.sampling {
            SamplingScheme::Random => {
                let mut rng = rng_for(self.seed, STREAM_SAMPLES);
                Ok(geometry::draw_uniform(self.n_samples, &mut rng))
            }
            SamplingScheme::Fibonacci => geometry::fibonacci_lattice(self.n_samples),
        }
    }
}

/// Points with per-point loss weights: `L = Σ_k ω_k (u(p_k) − h(p_k))²`.
#[derive(Debug, Clone)]
pub struct Dataset {
    points: Vec<SpherePoint>,
    cart: Vec<Vector3<f64>>,
    weights: Vec<f64>,
}

impl Dataset {
    /// Training samples with `ω_k = sin τ_k / N`.
    pub fn from_samples(points: Vec<SpherePoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(domain("the sample set is empty"));
        }
        let n = points.len() as f64;
        let weights = points.iter().map(|p| p.tau().sin() / n).collect();
        Ok(Self::with_weights(points, weights))
    }

    /// Quadrature nodes with their weights, so the loss approximates
    /// `∫ (u − h)² dΩ`.
    pub fn from_grid(grid: &SphereGrid) -> Self {
        let points = grid.nodes().iter().map(|n| n.point).collect();
        let weights = grid.nodes().iter().map(|n| n.weight).collect();
        Self::with_weights(points, weights)
    }

    fn with_weights(points: Vec<SpherePoint>, weights: Vec<f64>) -> Self {
        let cart = points.iter().map(SpherePoint::to_cartesian).collect();
        Self {
            points,
            cart,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[SpherePoint] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn loss(&self, params: &NetworkParams, h: &TargetFunction) -> f64 {
        let targets: Vec<f64> = self.points.iter().map(|p| h.eval(p)).collect();
        self.loss_with_targets(&params.a, &params.w, &targets)
    }

    fn loss_with_targets(&self, a: &[f64], w: &[Direction], targets: &[f64]) -> f64 {
        self.cart
            .iter()
            .zip(&self.weights)
            .zip(targets)
            .map(|((x, wt), t)| {
                let r = forward_cartesian(a, w, x) - t;
                wt * r * r
            })
            .sum()
    }

    pub fn gradient(&self, params: &NetworkParams, h: &TargetFunction) -> Gradient {
        let targets: Vec<f64> = self.points.iter().map(|p| h.eval(p)).collect();
        let all: Vec<usize> = (0..self.len()).collect();
        let dirs: Vec<Vector3<f64>> = params.w.iter().map(|d| *d.as_vector()).collect();
        let mut scratch = GradScratch::new(params.width());
        self.accumulate_gradient(&params.a, &dirs, &targets, &all, 1.0, params.mode, &mut scratch);
        Gradient {
            da: scratch.da,
            dw: (params.mode == DirectionMode::Trainable).then_some(scratch.dw),
        }
    }

    /// Gradient of `scale · Σ_{k ∈ idx} ω_k r_k²` into `scratch`.
    #[allow(clippy::too_many_arguments)]
    fn accumulate_gradient(
        &self,
        a: &[f64],
        dirs: &[Vector3<f64>],
        targets: &[f64],
        idx: &[usize],
        scale: f64,
        mode: DirectionMode,
        scratch: &mut GradScratch,
    ) {
        scratch.reset();
        let m = a.len();
        for &k in idx {
            let x = &self.cart[k];
            let mut u = 0.0;
            for i in 0..m {
                let z = dirs[i].dot(x);
                scratch.pre[i] = z;
                if z > 0.0 {
                    u += a[i] * z;
                }
            }
            let coef = 2.0 * scale * self.weights[k] * (u - targets[k]);
            if coef == 0.0 {
                continue;
            }
            for i in 0..m {
                let z = scratch.pre[i];
                if z > 0.0 {
                    scratch.da[i] += coef * z;
                    if mode == DirectionMode::Trainable {
                        scratch.dw[i] += x * (coef * a[i]);
                    }
                }
            }
        }
    }
}

struct GradScratch {
    pre: Vec<f64>,
    da: Vec<f64>,
    dw: Vec<Vector3<f64>>,
}

impl GradScratch {
    fn new(m: usize) -> Self {
        Self {
            pre: vec![0.0; m],
            da: vec![0.0; m],
            dw: vec![Vector3::zeros(); m],
        }
    }

    fn reset(&mut self) {
        self.da.iter_mut().for_each(|x| *x = 0.0);
        self.dw.iter_mut().for_each(|x| *x = Vector3::zeros());
    }
}

/// Loss gradient. `dw` is present only for trainable directions.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub da: Vec<f64>,
    pub dw: Option<Vec<Vector3<f64>>>,
}

/// `(1/N) Σ_k (u(p_k) − h(p_k))² sin τ_k`.
pub fn loss(params: &NetworkParams, samples: &[SpherePoint], h: &TargetFunction) -> Result<f64> {
    let data = Dataset::from_samples(samples.to_vec())?;
    Ok(data.loss(params, h))
}

/// Exact gradient of [`loss`]. The ReLU subgradient at zero is zero.
pub fn gradient(
    params: &NetworkParams,
    samples: &[SpherePoint],
    h: &TargetFunction,
) -> Result<Gradient> {
    let data = Dataset::from_samples(samples.to_vec())?;
    Ok(data.gradient(params, h))
}

/// Scales raw direction vectors back onto S².
pub fn renormalize_directions(vectors: &[Vector3<f64>]) -> Result<Vec<Direction>> {
    vectors
        .iter()
        .enumerate()
        .map(|(i, v)| {
            Direction::normalize(*v)
                .map_err(|_| domain(format!("direction {i} collapsed to norm {}", v.norm())))
        })
        .collect()
}

fn draw_directions(config: &TrainingConfig) -> Vec<Direction> {
    let mut rng = rng_for(config.seed, STREAM_DIRECTIONS);
    geometry::draw_uniform(config.m, &mut rng)
        .iter()
        .map(Direction::from_point)
        .collect()
}

/// Area-uniform directions and `a_i ~ N(0, 1/m)`, both from the run seed.
pub fn init_default(config: &TrainingConfig) -> Result<NetworkParams> {
    if config.m == 0 {
        return Err(Error::Config("m must be at least 1".into()));
    }
    let w = draw_directions(config);
    let normal = Normal::new(0.0, 1.0 / (config.m as f64).sqrt()).expect("positive std");
    let mut rng = rng_for(config.seed, STREAM_WEIGHTS);
    let a = (0..config.m).map(|_| normal.sample(&mut rng)).collect();
    NetworkParams::new(a, w, config.mode)
}

/// Result of the least-squares high-frequency initialisation.
#[derive(Debug, Clone)]
pub struct HighFrequencyInit {
    pub params: NetworkParams,
    /// Ridge parameter that made the normal equations solvable.
    pub ridge: f64,
    /// Relative weighted L² misfit on the fitting data.
    pub fit_rel_error: f64,
    /// Relative L² misfit over the whole sphere (grid quadrature).
    pub sphere_rel_error: f64,
}

/// Places the network at `g = sin 10τ cos 10φ` by ridge least squares on
/// the output weights, directions fixed at their default draw.
///
/// The fit uses the training samples and the training-loss weights. A fit in
/// the continuum L² norm degenerates: every bias-free network is a linear
/// function plus an even function, while `g` is odd with all of its energy
/// in degrees ≥ 11, so the continuum optimum is `a = 0`. The misfit over
/// the sphere is reported in `sphere_rel_error`.
pub fn init_high_frequency(config: &TrainingConfig, grid: &SphereGrid) -> Result<HighFrequencyInit> {
    let data = Dataset::from_samples(config.samples()?)?;
    fit_output_weights(config, &data, grid, &TargetFunction::high_frequency_pattern())
}

pub(crate) fn fit_output_weights(
    config: &TrainingConfig,
    data: &Dataset,
    grid: &SphereGrid,
    g: &TargetFunction,
) -> Result<HighFrequencyInit> {
    let w = draw_directions(config);
    let m = w.len();
    let n = data.len();
    let features = DMatrix::from_fn(n, m, |k, i| w[i].dot(&data.cart[k]).max(0.0));
    let targets = DVector::from_iterator(n, data.points.iter().map(|p| g.eval(p)));
    let weights = DVector::from_column_slice(&data.weights);
    let weighted = DMatrix::from_fn(n, m, |k, i| features[(k, i)] * weights[k]);
    let gram = weighted.transpose() * &features;
    let rhs = weighted.transpose() * &targets;

    let mut ridge = INITIAL_RIDGE;
    let a = loop {
        let mut system = gram.clone();
        for i in 0..m {
            system[(i, i)] += ridge;
        }
        if let Some(chol) = system.cholesky() {
            let sol = chol.solve(&rhs);
            if sol.iter().all(|x| x.is_finite()) {
                break sol;
            }
        }
        ridge *= 10.0;
        if ridge > 1e6 {
            return Err(domain("least-squares initialisation is singular for every ridge"));
        }
    };
    let params = NetworkParams::new(a.iter().copied().collect(), w, config.mode)?;

    let residual = &features * &a - &targets;
    let fit_num: f64 = residual.iter().zip(weights.iter()).map(|(r, w)| w * r * r).sum();
    let fit_den: f64 = targets.iter().zip(weights.iter()).map(|(t, w)| w * t * t).sum();
    let sphere_num = grid.integrate(|p| (forward(&params, p) - g.eval(p)).powi(2));
    let sphere_den = grid.integrate(|p| g.eval(p).powi(2));
    Ok(HighFrequencyInit {
        params,
        ridge,
        fit_rel_error: (fit_num / fit_den).sqrt(),
        sphere_rel_error: (sphere_num / sphere_den).sqrt(),
    })
}

/// One recorded epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub epoch: usize,
    pub loss: f64,
    /// `|c_pred(ℓ, j) − c_true(ℓ, j)|` in [`HarmonicIndex::all`] order.
    pub abs_err: Vec<f64>,
    /// Complex error spectrum, when recorded by a live run.
    pub error: Option<HarmonicSpectrum>,
    pub sum_a: Option<f64>,
}

impl TraceRecord {
    pub fn abs_err_at(&self, ell: usize, j: i64) -> f64 {
        HarmonicIndex::new(ell, j)
            .ok()
            .and_then(|i| self.abs_err.get(i.flat()).copied())
            .unwrap_or(0.0)
    }
}

/// Loss and harmonic-error history of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTrace {
    pub ell_max: usize,
    pub records: Vec<TraceRecord>,
    /// Upper-hemisphere moment `C(h)` of the target.
    pub c_h: Option<f64>,
}

impl ErrorTrace {
    pub fn new(ell_max: usize) -> Self {
        Self {
            ell_max,
            records: Vec::new(),
            c_h: None,
        }
    }

    pub fn push(&mut self, record: TraceRecord) -> Result<()> {
        if record.abs_err.len() != (self.ell_max + 1) * (self.ell_max + 1) {
            return Err(domain("harmonic error vector has the wrong length"));
        }
        if !(record.loss >= 0.0) {
            return Err(domain(format!("loss {} is not non-negative", record.loss)));
        }
        if let Some(last) = self.records.last() {
            if record.epoch <= last.epoch {
                return Err(domain("trace epochs must increase strictly"));
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn epochs(&self) -> impl Iterator<Item = usize> + '_ {
        self.records.iter().map(|r| r.epoch)
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.records.last().map(|r| r.loss)
    }

    pub fn best_loss(&self) -> Option<f64> {
        self.records.iter().map(|r| r.loss).reduce(f64::min)
    }

    /// Error magnitude of `(ell, j)` over time.
    pub fn series(&self, ell: usize, j: i64) -> Vec<f64> {
        self.records.iter().map(|r| r.abs_err_at(ell, j)).collect()
    }

    pub fn loss_csv(&self) -> String {
        let mut csv = CsvBuilder::with_header("epoch,loss");
        for r in &self.records {
            csv.row([r.epoch.to_string(), csvfmt::float(r.loss)]);
        }
        csv.as_str().to_string()
    }

    pub fn harmonics_csv(&self) -> String {
        let mut csv = CsvBuilder::with_header("epoch,ell,j,abs_err");
        for r in &self.records {
            for (idx, e) in HarmonicIndex::all(self.ell_max).zip(&r.abs_err) {
                csv.row([
                    r.epoch.to_string(),
                    idx.ell().to_string(),
                    idx.j().to_string(),
                    csvfmt::float(*e),
                ]);
            }
        }
        csv.as_str().to_string()
    }

    /// Rebuilds a trace from `loss.csv` and `harmonics.csv`.
    pub fn read_csv(loss_path: &Path, harmonics_path: &Path) -> Result<Self> {
        let loss_table = CsvTable::read(loss_path)?;
        let harm_table = CsvTable::read(harmonics_path)?;
        let err = |path: &Path, msg: String| Error::Parse {
            path: path.to_path_buf(),
            msg,
        };
        loss_table
            .expect_header(&["epoch", "loss"])
            .map_err(|m| err(loss_path, m))?;
        harm_table
            .expect_header(&["epoch", "ell", "j", "abs_err"])
            .map_err(|m| err(harmonics_path, m))?;

        let mut losses = Vec::new();
        for row in &loss_table.rows {
            let epoch: usize = csvfmt::parse_field(&row[0], "epoch").map_err(|m| err(loss_path, m))?;
            let loss: f64 = csvfmt::parse_field(&row[1], "loss").map_err(|m| err(loss_path, m))?;
            losses.push((epoch, loss));
        }
        let mut ell_max = 0usize;
        let mut entries = Vec::with_capacity(harm_table.rows.len());
        for row in &harm_table.rows {
            let parse = || -> std::result::Result<(usize, usize, i64, f64), String> {
                Ok((
                    csvfmt::parse_field(&row[0], "epoch")?,
                    csvfmt::parse_field(&row[1], "ell")?,
                    csvfmt::parse_field(&row[2], "j")?,
                    csvfmt::parse_field(&row[3], "abs_err")?,
                ))
            };
            let e = parse().map_err(|m| err(harmonics_path, m))?;
            if e.2.unsigned_abs() as usize > e.1 {
                return Err(err(harmonics_path, format!("order {} exceeds degree {}", e.2, e.1)));
            }
            ell_max = ell_max.max(e.1);
            entries.push(e);
        }
        let n_coeff = (ell_max + 1) * (ell_max + 1);
        let mut trace = ErrorTrace::new(ell_max);
        for (epoch, loss) in losses {
            let mut abs_err = vec![0.0; n_coeff];
            for &(e, ell, j, v) in &entries {
                if e == epoch {
                    abs_err[HarmonicIndex::new(ell, j)?.flat()] = v;
                }
            }
            trace
                .push(TraceRecord {
                    epoch,
                    loss,
                    abs_err,
                    error: None,
                    sum_a: None,
                })
                .map_err(|e| err(loss_path, e.to_string()))?;
        }
        Ok(trace)
    }
}

/// Everything a finished (or aborted) run produced.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: NetworkParams,
    pub initial: NetworkParams,
    pub trace: ErrorTrace,
    pub target_spectrum: HarmonicSpectrum,
    /// Set when the run stopped early because the loss blew up.
    pub divergence: Option<(usize, f64)>,
    pub init_report: Option<HighFrequencyInit>,
}

/// Gradient-descent trainer holding the sampled data and the projected
/// target so that runs can be started from arbitrary parameters.
#[derive(Debug, Clone)]
pub struct Trainer {
    config: TrainingConfig,
    target: TargetFunction,
    data: Dataset,
    targets: Vec<f64>,
    target_spectrum: HarmonicSpectrum,
    c_h: f64,
}

impl Trainer {
    pub fn new(config: TrainingConfig, target: TargetFunction) -> Result<Self> {
        config.validate()?;
        let data = Dataset::from_samples(config.samples()?)?;
        Self::with_dataset(config, target, data)
    }

    /// Trains on an explicit dataset instead of the sampled one.
    pub fn with_dataset(config: TrainingConfig, target: TargetFunction, data: Dataset) -> Result<Self> {
        config.validate()?;
        let grid = build_grid(config.target_grid_ell);
        let basis = GridBasis::new(&grid, config.ell_max)?;
        let values: Vec<f64> = basis.points().iter().map(|p| target.eval(p)).collect();
        let target_spectrum = basis.project_values(&values);
        let targets = data.points.iter().map(|p| target.eval(p)).collect();
        let c_h = diagnostics::c_of_h(&target, &grid);
        Ok(Self {
            config,
            target,
            data,
            targets,
            target_spectrum,
            c_h,
        })
    }

    pub fn config(&self) -> &TrainingConfig {
        &self.config
    }

    pub fn dataset(&self) -> &Dataset {
        &self.data
    }

    pub fn target(&self) -> &TargetFunction {
        &self.target
    }

    pub fn target_spectrum(&self) -> &HarmonicSpectrum {
        &self.target_spectrum
    }

    /// Initial parameters according to `config.init`.
    pub fn initialize(&self) -> Result<(NetworkParams, Option<HighFrequencyInit>)> {
        match self.config.init {
            InitScheme::Default => Ok((init_default(&self.config)?, None)),
            InitScheme::HighFrequency => {
                let grid = build_grid(self.config.target_grid_ell.min(40));
                let report = fit_output_weights(
                    &self.config,
                    &self.data,
                    &grid,
                    &TargetFunction::high_frequency_pattern(),
                )?;
                Ok((report.params.clone(), Some(report)))
            }
        }
    }

    pub fn run(&self) -> Result<TrainOutcome> {
        let (params, report) = self.initialize()?;
        let mut outcome = self.run_from(params)?;
        outcome.init_report = report;
        Ok(outcome)
    }

    pub fn loss(&self, a: &[f64], w: &[Direction]) -> f64 {
        self.data.loss_with_targets(a, w, &self.targets)
    }

    fn record(&self, epoch: usize, a: &[f64], w: &[Direction]) -> TraceRecord {
        let predicted = network_spectrum(a, w, self.config.ell_max);
        let error = predicted.sub(&self.target_spectrum);
        TraceRecord {
            epoch,
            loss: self.loss(a, w),
            abs_err: error.coeffs().iter().map(|c| c.norm()).collect(),
            error: Some(error),
            sum_a: Some(a.iter().sum()),
        }
    }

    /// Runs `config.epochs` epochs starting from `initial`.
    pub fn run_from(&self, initial: NetworkParams) -> Result<TrainOutcome> {
        let cfg = &self.config;
        let mode = cfg.mode;
        let m = initial.width();
        let mut a = initial.a.clone();
        let mut w = initial.w.clone();
        let mut dirs: Vec<Vector3<f64>> = w.iter().map(|d| *d.as_vector()).collect();
        let mut trace = ErrorTrace::new(cfg.ell_max);
        trace.c_h = Some(self.c_h);
        trace.push(self.record(0, &a, &w))?;

        let n = self.data.len();
        let mut order: Vec<usize> = (0..n).collect();
        let mut batch_rng = rng_for(cfg.seed, STREAM_BATCHES);
        let mut scratch = GradScratch::new(m);
        let mut divergence = None;

        for epoch in 1..=cfg.epochs {
            match cfg.batch {
                BatchMode::Full => {
                    self.step(&mut a, &mut dirs, &order, 1.0, mode, &mut scratch)?;
                }
                BatchMode::MiniBatch(k) => {
                    order.shuffle(&mut batch_rng);
                    let k = k.min(n);
                    let scale = n as f64 / k as f64;
                    for chunk in order.chunks(k) {
                        let s = if chunk.len() == k { scale } else { n as f64 / chunk.len() as f64 };
                        self.step(&mut a, &mut dirs, chunk, s, mode, &mut scratch)?;
                    }
                }
            }
            if mode == DirectionMode::Trainable {
                w = renormalize_directions(&dirs)?;
            }
            let current = self.loss(&a, &w);
            if !current.is_finite() || current > DIVERGENCE_LOSS {
                divergence = Some((epoch, current));
                log::error!("training diverged at epoch {epoch}: loss = {current:e}");
                break;
            }
            if epoch % cfg.record_every == 0 || epoch == cfg.epochs {
                trace.push(self.record(epoch, &a, &w))?;
            }
        }

        let params = NetworkParams::new(a, w, mode).unwrap_or(initial.clone());
        Ok(TrainOutcome {
            params,
            initial,
            trace,
            target_spectrum: self.target_spectrum.clone(),
            divergence,
            init_report: None,
        })
    }

    fn step(
        &self,
        a: &mut [f64],
        dirs: &mut [Vector3<f64>],
        idx: &[usize],
        scale: f64,
        mode: DirectionMode,
        scratch: &mut GradScratch,
    ) -> Result<()> {
        self.data
            .accumulate_gradient(a, dirs, &self.targets, idx, scale, mode, scratch);
        let lr = self.config.lr;
        for (ai, g) in a.iter_mut().zip(&scratch.da) {
            *ai -= lr * g;
        }
        if mode == DirectionMode::Trainable {
            for (i, (d, g)) in dirs.iter_mut().zip(&scratch.dw).enumerate() {
                let next = *d - g * lr;
                let norm = next.norm();
                if !(norm > 0.0 && norm.is_finite()) {
                    return Err(domain(format!("direction {i} collapsed to norm {norm}")));
                }
                *d = next / norm;
            }
        }
        Ok(())
    }
}

/// Trains according to `config`. Divergence is reported as an error; use
/// [`Trainer::run`] to keep the partial trace.
pub fn train(config: &TrainingConfig, h: &TargetFunction) -> Result<(NetworkParams, ErrorTrace)> {
    let outcome = Trainer::new(config.clone(), h.clone())?.run()?;
    if let Some((epoch, loss)) = outcome.divergence {
        return Err(Error::Divergence { epoch, loss });
    }
    Ok((outcome.params, outcome.trace))
}

/// Samples of `target`, `output` and `|output − target|` on a `n_tau × n_phi`
/// raster of cell centres.
pub fn raster(
    params: &NetworkParams,
    h: &TargetFunction,
    n_tau: usize,
    n_phi: usize,
) -> Vec<(SpherePoint, f64, f64)> {
    let mut out = Vec::with_capacity(n_tau * n_phi);
    for i in 0..n_tau {
        let tau = (i as f64 + 0.5) * std::f64::consts::PI / n_tau as f64;
        for k in 0..n_phi {
            let phi = (k as f64 + 0.5) * TAU / n_phi as f64;
            let p = SpherePoint::new(tau, phi).expect("raster angles are in range");
            out.push((p, h.eval(&p), forward(params, &p)));
        }
    }
    out
}
