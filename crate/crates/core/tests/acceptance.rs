//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.
//!
//! Criteria 1–3 test the quoted cap-coefficient closed form and the decay
//! law built on it. The quoted closed form agrees with the defining
//! integral only at ℓ = 1, 2, and the true coefficients decay
//! algebraically, so those three fail by design; the printed notes show
//! the measured numbers next to the corrected statements.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::Vector3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sphere_spectra::diagnostics::{
    c_of_h, classify_fp, decay_fit, error_spectrum, evolution_terms, evolution_terms_with,
    fixed_mode_d_ell, CapRule, FpLabel,
};
use sphere_spectra::experiment::{self, expand_relu_table, find};
use sphere_spectra::geometry::sample_uniform;
use sphere_spectra::harmonics::{
    build_grid, normalization, sph_harm, sph_harm_all, GridBasis, HarmonicIndex, HarmonicSpectrum,
};
use sphere_spectra::network::{gradient, Dataset, Trainer, TrigTerm};
use sphere_spectra::relu_spectral::{
    neuron_spectrum, neuron_spectrum_grad, quoted_closed_form, relu_coefficient,
    relu_coefficient_quadrature,
};
use sphere_spectra::{
    BatchMode, Direction, DirectionMode, NetworkParams, SpherePoint, TargetFunction,
    TrainingConfig,
};

struct Outcome {
    pass: bool,
    summary: String,
    notes: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, summary: impl Into<String>) -> Self {
        Self {
            pass,
            summary: summary.into(),
            notes: Vec::new(),
        }
    }

    fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}

fn timed(budget: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut out = f();
    let elapsed = start.elapsed();
    if elapsed > budget {
        out.pass = false;
        out.summary = format!("{} [runtime {:.1?} over budget {:.0?}]", out.summary, elapsed, budget);
    } else {
        out.summary = format!("{} [{:.2?}]", out.summary, elapsed);
    }
    out
}

fn random_direction(rng: &mut impl Rng) -> Direction {
    loop {
        let v: Vector3<f64> = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 && (v.x * v.x + v.y * v.y).sqrt() / n > 0.05 {
            return Direction::normalize(v).unwrap();
        }
    }
}

fn random_params(rng: &mut impl Rng, m: usize, mode: DirectionMode) -> NetworkParams {
    let a = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let w = (0..m).map(|_| random_direction(rng)).collect();
    NetworkParams::new(a, w, mode).unwrap()
}

/// Criterion 1: quoted closed form against quadrature of its integral.
fn closed_form_vs_quadrature() -> Outcome {
    let grid = build_grid(21);
    let ells: Vec<usize> = [1, 2].into_iter().chain((4..=20).step_by(2)).collect();
    let mut worst = (0usize, 0.0f64);
    let mut exact_worst = 0.0f64;
    for &ell in &ells {
        let quad = relu_coefficient_quadrature(ell, &grid).unwrap();
        let diff = (quoted_closed_form(ell) - quad).abs();
        if diff > worst.1 {
            worst = (ell, diff);
        }
        exact_worst = exact_worst.max((relu_coefficient(ell) - quad).abs());
    }
    let failing: Vec<usize> = ells
        .iter()
        .copied()
        .filter(|&ell| {
            (quoted_closed_form(ell) - relu_coefficient_quadrature(ell, &grid).unwrap()).abs() >= 1e-10
        })
        .collect();
    let table = expand_relu_table(20).unwrap();
    let mut out = Outcome::new(
        failing.is_empty(),
        format!(
            "quoted closed form vs quadrature, |diff| < 1e-10 on ℓ ∈ {{1,2,4,…,20}}: worst ℓ = {} with |diff| = {:.3e}; failing ℓ = {:?}",
            worst.0, worst.1, failing
        ),
    )
    .note(format!(
        "exact moments (I_2 = 1/8, I_(2k+2)/I_(2k) = −(2k−1)/(2(k+2))) vs quadrature: max |diff| = {exact_worst:.2e}"
    ));
    for ell in [0usize, 3, 5] {
        out = out.note(format!(
            "ℓ = {ell}: quoted {:.6e}, quadrature {:.6e}",
            quoted_closed_form(ell),
            relu_coefficient_quadrature(ell, &grid).unwrap()
        ));
    }
    out.note(format!("expand-relu table has {} rows", table.lines().count() - 1))
}

/// Criterion 2: decay law of c_ℓ.
fn cap_decay_law() -> Outcome {
    let values: Vec<f64> = (0..=24).map(|ell| relu_coefficient(ell).abs()).collect();
    let fit = decay_fit(&values, 6..=24).unwrap();
    let pass = (fit.exponent - 2.5).abs() <= 0.3 && fit.r_squared > 0.99;
    let quoted: Vec<f64> = (0..=24).map(quoted_closed_form).collect();
    let quoted_fit = decay_fit(&quoted, 6..=24).unwrap();
    // Algebraic decay check on the true coefficients: fit log|c_ℓ| = p log ℓ + b.
    let pts: Vec<(f64, f64)> = (6..=24)
        .step_by(2)
        .map(|ell| ((ell as f64).ln(), relu_coefficient(ell).abs().ln()))
        .collect();
    let slope = {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>()
    };
    Outcome::new(
        pass,
        format!(
            "decay_fit(|c_ℓ|, ℓ ∈ [6,24]): exponent {:.3} (want 2.5 ± 0.3), R² {:.4} (want > 0.99)",
            fit.exponent, fit.r_squared
        ),
    )
    .note(format!(
        "true |c_ℓ| decays algebraically: log|c_ℓ| vs log ℓ slope {slope:.3} over even ℓ"
    ))
    .note(format!(
        "quoted closed form gives exponent {:.3}, R² {:.4}",
        quoted_fit.exponent, quoted_fit.r_squared
    ))
}

/// Criterion 3: decay law of the evolution terms.
fn evolution_decay_law() -> Outcome {
    let grid = build_grid(40);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut c_exps = Vec::new();
    let mut g_exps = Vec::new();
    let mut ok = true;
    for _ in 0..5 {
        let params = random_params(&mut rng, 20, DirectionMode::Trainable);
        let terms = evolution_terms(&params, &TargetFunction::Trig, &grid, 20).unwrap();
        let c = decay_fit(&terms.c_magnitude(0), 6..=20).unwrap();
        let g = decay_fit(&terms.g_magnitude(0), 6..=20).unwrap();
        ok &= (c.exponent - 2.5).abs() <= 0.4 && (g.exponent - 3.5).abs() <= 0.5;
        c_exps.push(c.exponent);
        g_exps.push(g.exponent);
    }
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join(", ");
    Outcome::new(
        ok,
        format!(
            "evolution-term decay on 5 random m = 20 configs: |C_ℓ^0| exponents [{}] (want 2.5 ± 0.4), |G_ℓ^0| exponents [{}] (want 3.5 ± 0.5)",
            fmt(&c_exps),
            fmt(&g_exps)
        ),
    )
}

/// Criterion 4: harmonics invariants at ℓ_max = 12, tolerance 1e-9.
fn harmonics_invariants() -> Outcome {
    const L: usize = 12;
    const TOL: f64 = 1e-9;
    let grid = build_grid(L);
    let basis = GridBasis::new(&grid, L).unwrap();
    let mut checks: Vec<(&str, f64)> = Vec::new();

    // Orthonormality: project each Y_ℓ^j and compare with the unit vector.
    let mut ortho = 0.0f64;
    for idx in HarmonicIndex::all(L) {
        let values: Vec<Complex64> = basis
            .points()
            .iter()
            .map(|p| sph_harm(idx.ell(), idx.j(), p).unwrap())
            .collect();
        let spec = basis.project_complex(&values);
        for (k, c) in spec.coeffs().iter().enumerate() {
            let want = if k == idx.flat() { 1.0 } else { 0.0 };
            ortho = ortho.max((c - Complex64::new(want, 0.0)).norm());
        }
    }
    checks.push(("orthonormality", ortho));

    // Round trip of a random real band-limited function.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut spec = HarmonicSpectrum::zeros(L);
    for ell in 0..=L {
        spec.set(ell, 0, Complex64::new(rng.random_range(-1.0..1.0), 0.0)).unwrap();
        for j in 1..=ell as i64 {
            let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            spec.set(ell, j, c).unwrap();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            spec.set(ell, -j, c.conj() * sign).unwrap();
        }
    }
    let values: Vec<f64> = basis.points().iter().map(|p| spec.evaluate(p).re).collect();
    let imag: f64 = basis.points().iter().map(|p| spec.evaluate(p).im.abs()).fold(0.0, f64::max);
    let back = basis.project_values(&values);
    checks.push(("projection round trip", back.sub(&spec).max_abs()));
    checks.push(("real function has real values", imag));
    checks.push(("conjugate symmetry", back.conjugate_symmetry_defect()));

    // Parseval: ∫ f² = Σ |c|².
    let l2 = grid.integrate(|p| spec.evaluate(p).re.powi(2));
    checks.push(("Parseval", (l2 - spec.energy()).abs() / spec.energy()));

    // Addition theorem: Σ_j |Y_ℓ^j|² = (2ℓ+1)/4π.
    let mut addition = 0.0f64;
    for p in sample_uniform(50, 5).unwrap() {
        let ys = sph_harm_all(L, &p);
        for ell in 0..=L {
            let s: f64 = (-(ell as i64)..=ell as i64)
                .map(|j| ys[HarmonicIndex::new(ell, j).unwrap().flat()].norm_sqr())
                .sum();
            addition = addition.max((s - (2 * ell + 1) as f64 / (4.0 * PI)).abs());
        }
    }
    checks.push(("addition theorem", addition));

    // Normalisation constant at j = 0.
    let norm0 = (0..=L)
        .map(|ell| (normalization(ell, 0) - ((2 * ell + 1) as f64 / (4.0 * PI)).sqrt()).abs())
        .fold(0.0, f64::max);
    checks.push(("normalisation", norm0));

    let worst = checks.iter().cloned().fold(("", 0.0), |a, b| if b.1 > a.1 { b } else { a });
    let pass = checks.iter().all(|c| c.1 < TOL);
    let mut out = Outcome::new(
        pass,
        format!(
            "harmonics invariants at ℓ_max = 12: {} checks, worst `{}` = {:.2e} (tol 1e-9)",
            checks.len(),
            worst.0,
            worst.1
        ),
    );
    for (name, v) in checks {
        out = out.note(format!("{name}: {v:.2e}"));
    }
    out
}

/// Loss on raw (not necessarily unit) directions, written out directly.
fn raw_loss(a: &[f64], w: &[Vector3<f64>], samples: &[SpherePoint], h: &TargetFunction) -> f64 {
    let n = samples.len() as f64;
    samples
        .iter()
        .map(|p| {
            let x = p.to_cartesian();
            let u: f64 = a.iter().zip(w).map(|(ai, wi)| ai * wi.dot(&x).max(0.0)).sum();
            (u - h.eval(p)).powi(2) * p.tau().sin() / n
        })
        .sum()
}

/// Criterion 5: loss gradient and spectrum gradient against finite differences.
fn gradient_suites() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let step = 1e-6;
    let margin = 1e-4;
    let mut worst_loss = 0.0f64;
    let mut checked = 0usize;
    let mut skipped = 0usize;
    for config in 0..100 {
        let m = rng.random_range(1..=20);
        let n = rng.random_range(5..=60);
        let params = random_params(&mut rng, m, DirectionMode::Trainable);
        let samples = sample_uniform(n, 1000 + config).unwrap();
        let h = if config % 2 == 0 {
            TargetFunction::Trig
        } else {
            TargetFunction::HarmonicSum(vec![TrigTerm { amp: rng.random_range(-2.0..2.0), p: 2, q: 1 }])
        };
        let g = gradient(&params, &samples, &h).unwrap();
        let dw = g.dw.unwrap();
        let w: Vec<Vector3<f64>> = params.w().iter().map(|d| *d.as_vector()).collect();
        let a = params.a().to_vec();
        for i in 0..m {
            let mut ap = a.clone();
            let mut am = a.clone();
            ap[i] += step;
            am[i] -= step;
            let fd = (raw_loss(&ap, &w, &samples, &h) - raw_loss(&am, &w, &samples, &h)) / (2.0 * step);
            worst_loss = worst_loss.max((g.da[i] - fd).abs() / fd.abs().max(1e-3));
            checked += 1;
            if samples.iter().any(|p| w[i].dot(&p.to_cartesian()).abs() < margin) {
                skipped += 1;
                continue;
            }
            for k in 0..3 {
                let mut wp = w.clone();
                let mut wm = w.clone();
                wp[i][k] += step;
                wm[i][k] -= step;
                let fd = (raw_loss(&a, &wp, &samples, &h) - raw_loss(&a, &wm, &samples, &h)) / (2.0 * step);
                worst_loss = worst_loss.max((dw[i][k] - fd).abs() / fd.abs().max(1e-3));
                checked += 1;
            }
        }
    }

    let mut worst_spec = 0.0f64;
    for _ in 0..20 {
        let w = random_direction(&mut rng);
        let v = *w.as_vector();
        for idx in HarmonicIndex::all(6) {
            let grad = neuron_spectrum_grad(&w, idx.ell(), idx.j()).unwrap();
            let f = |u: Vector3<f64>| {
                neuron_spectrum(&Direction::normalize(u).unwrap(), 6)
                    .spectrum()
                    .get(idx.ell(), idx.j())
            };
            for k in 0..3 {
                let mut e = Vector3::zeros();
                e[k] = step;
                let fd = (f(v + e) - f(v - e)) / (2.0 * step);
                worst_spec = worst_spec.max((grad[k] - fd).norm() / fd.norm().max(1e-3));
            }
        }
    }
    Outcome::new(
        worst_loss < 1e-5 && worst_spec < 1e-4,
        format!(
            "(a) loss gradient vs FD over 100 configs: worst rel {worst_loss:.2e} (tol 1e-5); (b) spectrum gradient vs FD, ℓ ≤ 6, 20 directions: worst rel {worst_spec:.2e} (tol 1e-4)"
        ),
    )
    .note(format!(
        "{checked} loss partials checked; {skipped} neurons had a sample within {margin:e} of their kink and were excluded from the direction check"
    ))
}

/// Criterion 6: fixed-direction degenerate case and sign flip.
fn fixed_direction_theorems() -> Outcome {
    let grid = build_grid(32);
    let h = TargetFunction::HarmonicSum(vec![
        TrigTerm { amp: 1.0, p: 1, q: 0 },
        TrigTerm { amp: 0.5, p: 3, q: 2 },
    ]);
    let critical = 3.0 / (2.0 * PI) * c_of_h(&h, &grid);
    let aligned = |sum: f64| {
        let a = vec![0.5 * sum, 0.3 * sum, 0.2 * sum];
        NetworkParams::new(a, vec![Direction::NORTH; 3], DirectionMode::Fixed).unwrap()
    };
    let d = fixed_mode_d_ell(&aligned(critical), &h, &grid, 20).unwrap();
    let degenerate = d.iter().map(|v| v.abs()).fold(0.0, f64::max);

    let sign_below = signs_on_positive_c(&fixed_mode_d_ell(&aligned(critical - 0.05), &h, &grid, 20).unwrap());
    let sign_above = signs_on_positive_c(&fixed_mode_d_ell(&aligned(critical + 0.05), &h, &grid, 20).unwrap());
    let flip = sign_below == Some(-1.0) && sign_above == Some(1.0);
    let tilted = NetworkParams::new(
        vec![1.0],
        vec![Direction::normalize(Vector3::new(0.1, 0.0, 1.0)).unwrap()],
        DirectionMode::Fixed,
    )
    .unwrap();
    let rejects = fixed_mode_d_ell(&tilted, &h, &grid, 4).is_err();
    Outcome::new(
        degenerate < 1e-10 && flip && rejects,
        format!(
            "Σa = (3/2π)C(h): max |D_ℓ| = {degenerate:.2e} (tol 1e-10); common sign of D_ℓ over ℓ ≥ 1 with c_ℓ > 0: {:?} below, {:?} above the threshold",
            sign_below, sign_above
        ),
    )
    .note(format!("C(h) = {:.6}, threshold Σa = {critical:.6}; misaligned directions rejected: {rejects}", c_of_h(&h, &grid)))
}

fn signs_on_positive_c(d: &[f64]) -> Option<f64> {
    let signs: Vec<f64> = (1..d.len())
        .filter(|&ell| relu_coefficient(ell) > 0.0)
        .map(|ell| d[ell].signum())
        .collect();
    (!signs.is_empty() && signs.iter().all(|&s| s == signs[0])).then(|| signs[0])
}

/// Criterion 7: D ≡ 0 on the grid gives vanishing evolution terms.
fn degenerate_stationarity() -> Outcome {
    let grid = build_grid(24);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let params = random_params(&mut rng, 15, DirectionMode::Trainable);
    // The teacher holds the same neurons in reverse order, so u = h only up
    // to summation round-off.
    let teacher = NetworkParams::new(
        params.a().iter().rev().copied().collect(),
        params.w().iter().rev().copied().collect(),
        DirectionMode::Fixed,
    )
    .unwrap();
    let h = TargetFunction::Teacher(Box::new(teacher));
    let field_max = grid
        .nodes()
        .iter()
        .map(|n| (sphere_spectra::network::forward(&params, &n.point) - h.eval(&n.point)).abs())
        .fold(0.0, f64::max);
    let terms = evolution_terms(&params, &h, &grid, 12).unwrap();
    let fixed = evolution_terms(&params.clone().with_mode(DirectionMode::Fixed), &h, &grid, 12).unwrap();
    let worst = terms.max_abs().max(fixed.max_abs());
    Outcome::new(
        worst < 1e-10,
        format!("forward ≡ h on the grid: max |C|, |G| = {worst:.2e} (tol 1e-10)"),
    )
    .note(format!("max |D| on the grid = {field_max:.2e}"))
}

/// Criteria 8 and 9: the registry runs.
fn experiments() -> (Outcome, Outcome) {
    let dir = tempfile::tempdir().unwrap();
    let mut lines = Vec::new();
    let mut ok = true;
    let mut zero_fixed = None;
    for name in [
        "zero_fixed_default",
        "zero_trainable_default",
        "zero_fixed_highfreq",
        "trig_trainable_highfreq",
    ] {
        let spec = find(name).unwrap();
        let start = Instant::now();
        let run = experiment::run_experiment(&spec, &dir.path().join(name)).unwrap();
        let elapsed = start.elapsed();
        let label = run.verdict(0).map(|v| v.label);
        let passed = match name {
            "zero_fixed_default" | "zero_trainable_default" => run.final_loss() <= 1e-4,
            _ => matches!(label, Some(FpLabel::Partial | FpLabel::Violates)),
        } && elapsed <= Duration::from_secs(300);
        ok &= passed;
        lines.push(format!(
            "{name}: final loss {:.3e}, j = 0 verdict {}, {:.1?} → {}",
            run.final_loss(),
            label.map_or("none".to_string(), |l| l.to_string()),
            elapsed,
            if passed { "ok" } else { "FAILED" }
        ));
        if name == "zero_fixed_default" {
            zero_fixed = Some(run);
        }
    }
    let mut eight = Outcome::new(
        ok,
        "registry runs: zero_fixed_default and zero_trainable_default loss ≤ 1e-4; zero_fixed_highfreq and trig_trainable_highfreq verdict ∈ {partial, violates}; each ≤ 5 min",
    );
    for l in lines {
        eight = eight.note(l);
    }

    let run = zero_fixed.unwrap();
    let verdict = classify_fp(&run.outcome.trace, 0, 0.2).unwrap();
    let low: Vec<Option<usize>> = verdict.modes.iter().filter(|m| m.ell <= 3).map(|m| m.epoch).collect();
    let high: Vec<Option<usize>> = verdict
        .modes
        .iter()
        .filter(|m| (8..=10).contains(&m.ell))
        .map(|m| m.epoch)
        .collect();
    let latest_low = low.iter().map(|e| e.unwrap_or(usize::MAX)).max();
    let earliest_high = high.iter().map(|e| e.unwrap_or(usize::MAX)).min();
    let pass = match (latest_low, earliest_high) {
        (Some(l), Some(h)) => l != usize::MAX && l <= h,
        _ => false,
    };
    let show = |v: &[Option<usize>]| {
        v.iter().map(|e| e.map_or("never".into(), |e| e.to_string())).collect::<Vec<String>>().join(", ")
    };
    let nine = Outcome::new(
        pass,
        format!(
            "zero_fixed_default low-first ordering: ℓ = 1..3 converge at [{}], ℓ = 8..10 at [{}]",
            show(&low),
            show(&high)
        ),
    )
    .note("odd ℓ ≥ 3 carry no error (their cap coefficients vanish) and are excluded as negligible");
    (eight, nine)
}

/// Criterion 10: one small full-batch step with the grid as dataset moves
/// the error spectrum in proportion to −C.
fn spectral_bookkeeping() -> Outcome {
    const L: usize = 10;
    let grid = build_grid(288);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let params = random_params(&mut rng, 20, DirectionMode::Fixed);
    let h = TargetFunction::Trig;
    let lr = 1e-6;
    let config = TrainingConfig {
        m: 20,
        lr,
        epochs: 1,
        record_every: 1,
        ell_max: L,
        batch: BatchMode::Full,
        mode: DirectionMode::Fixed,
        target_grid_ell: 32,
        ..TrainingConfig::default()
    };
    let trainer = Trainer::with_dataset(config, h.clone(), Dataset::from_grid(&grid)).unwrap();
    let stepped = trainer.run_from(params.clone()).unwrap().params;
    let before = error_spectrum(&params, &h, &grid, L).unwrap();
    let after = error_spectrum(&stepped, &h, &grid, L).unwrap();
    let rate = after.sub(&before).scale(1.0 / lr);
    let minus_c = evolution_terms_with(&params, &h, &grid, L, CapRule::AsGiven)
        .unwrap()
        .c
        .scale(-1.0);
    let aligned = evolution_terms(&params, &h, &grid, L).unwrap().c.scale(-1.0);
    let rule_gap = aligned.sub(&minus_c).max_abs() / minus_c.max_abs();

    // Proportionality constant by least squares, then entrywise comparison.
    let dot: f64 = rate.coeffs().iter().zip(minus_c.coeffs()).map(|(r, c)| (r * c.conj()).re).sum();
    let kappa = dot / minus_c.energy();
    let scale = kappa.abs() * minus_c.max_abs();
    let floor = 1e-6 * scale;
    let mut worst = 0.0f64;
    let mut worst_small = 0.0f64;
    let mut compared = 0;
    for (r, c) in rate.coeffs().iter().zip(minus_c.coeffs()) {
        let want = c * kappa;
        if want.norm() < floor {
            worst_small = worst_small.max((r - want).norm() / scale);
        } else {
            compared += 1;
            worst = worst.max((r - want).norm() / want.norm());
        }
    }
    let worst = worst.max(worst_small);
    // The same step through the exact network spectrum, free of the
    // projection error of the kinked error field.
    let exact = stepped.spectrum(L).sub(&params.spectrum(L)).scale(1.0 / lr);
    let exact_worst = exact
        .coeffs()
        .iter()
        .zip(minus_c.coeffs())
        .filter(|(_, c)| c.norm() * kappa.abs() >= floor)
        .map(|(e, c)| (e - c * kappa).norm() / (c * kappa).norm())
        .fold(0.0, f64::max);
    Outcome::new(
        worst < 1e-3,
        format!(
            "FD of the error spectrum under one full-batch step vs −C: proportionality {kappa:.6}, worst entrywise rel {worst:.2e} over {compared} entries (tol 1e-3)"
        ),
    )
    .note(format!(
        "through the exact network spectrum instead of grid projection: worst rel {exact_worst:.2e}"
    ))
    .note(format!(
        "C uses the dataset grid as its quadrature; cap-aligned quadrature differs by {rule_gap:.2e} of max |C|"
    ))
    .note(format!(
        "the constant is −2: C already carries the minus sign, so a step on ∫ D² dΩ moves the spectrum along +2C; entries of −C below 1e-6·max are compared relative to the largest entry (worst {worst_small:.2e})"
    ))
}

fn main() -> ExitCode {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    results.push(("1", timed(Duration::from_secs(1), closed_form_vs_quadrature)));
    results.push(("2", timed(Duration::from_secs(1), cap_decay_law)));
    results.push(("3", timed(Duration::from_secs(30), evolution_decay_law)));
    results.push(("4", timed(Duration::from_secs(10), harmonics_invariants)));
    results.push(("5", timed(Duration::from_secs(60), gradient_suites)));
    results.push(("6", fixed_direction_theorems()));
    results.push(("7", degenerate_stationarity()));
    let (eight, nine) = experiments();
    results.push(("8", eight));
    results.push(("9", nine));
    results.push(("10", timed(Duration::from_secs(30), spectral_bookkeeping)));

    let mut failed = 0;
    for (id, out) in &results {
        println!("{} criterion {id:>2}: {}", if out.pass { "PASS" } else { "FAIL" }, out.summary);
        for n in &out.notes {
            println!("                 {n}");
        }
        failed += usize::from(!out.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
