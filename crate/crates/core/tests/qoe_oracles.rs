use dasim_core::qoe::{
    distance_correlation, eval_qoe, fit_model, qos_score, truncated_normal_mean, FactorSample, Impact, QoeModel,
    Structure,
};
use dasim_core::rng::lane_rng;
use rand::Rng;

fn random_model<R: Rng>(rng: &mut R) -> QoeModel {
    let s = Structure::ALL[rng.random_range(0..3)];
    QoeModel::new(s, Impact::new(rng.random_range(0.0..2.0), rng.random_range(0.0..2.0)))
}

#[test]
fn neutral_context_returns_the_qos_score() {
    let mut rng = lane_rng(1, 0);
    for _ in 0..10_000 {
        let m = random_model(&mut rng);
        let r = rng.random_range(0.0..15.0);
        let q = rng.random_range(0.0..=1.0);
        let e = eval_qoe(&m, r, q, 1.0, 1.0);
        let s = qos_score(m.structure_index(), r, q).unwrap();
        assert!((e - s).abs() <= 1e-12, "{m:?} r={r} q={q}: {e} vs {s}");
    }
}

#[test]
fn qoe_degrades_with_context() {
    let mut rng = lane_rng(2, 0);
    for _ in 0..10_000 {
        let m = random_model(&mut rng);
        let r = rng.random_range(0.0..15.0);
        let q = rng.random_range(0.0..=1.0);
        let (b1, b2) = {
            let a: f64 = rng.random_range(1.0..=2.0);
            let b: f64 = rng.random_range(1.0..=2.0);
            (a.min(b), a.max(b))
        };
        let c = rng.random_range(1.0..=2.0);
        assert!(eval_qoe(&m, r, q, b2, c) <= eval_qoe(&m, r, q, b1, c) + 1e-15);
        assert!(eval_qoe(&m, r, q, c, b2) <= eval_qoe(&m, r, q, c, b1) + 1e-15);
    }
}

/// Textbook distance correlation with explicit n x n matrices.
fn dcor_dense(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let centred = |v: &[f64]| {
        let d: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| (v[i] - v[j]).abs()).collect()).collect();
        let row: Vec<f64> = d.iter().map(|r| r.iter().sum::<f64>() / n as f64).collect();
        let grand = row.iter().sum::<f64>() / n as f64;
        (0..n).map(|i| (0..n).map(|j| d[i][j] - row[i] - row[j] + grand).collect::<Vec<_>>()).collect::<Vec<_>>()
    };
    let (a, b) = (centred(x), centred(y));
    let dot = |p: &Vec<Vec<f64>>, q: &Vec<Vec<f64>>| {
        p.iter().zip(q).map(|(r, s)| r.iter().zip(s).map(|(u, v)| u * v).sum::<f64>()).sum::<f64>()
    };
    let v2 = dot(&a, &b) / (dot(&a, &a) * dot(&b, &b)).sqrt();
    v2.max(0.0).sqrt()
}

#[test]
fn dcor_of_affine_dependence_is_one() {
    let mut rng = lane_rng(3, 0);
    for _ in 0..1000 {
        let n = rng.random_range(4..60);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let a = loop {
            let a: f64 = rng.random_range(-3.0..3.0);
            if a.abs() > 0.05 {
                break a;
            }
        };
        let b = rng.random_range(-10.0..10.0);
        let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let d = distance_correlation(&x, &y).unwrap();
        assert!((d - 1.0).abs() <= 1e-9, "{d}");
    }
}

#[test]
fn dcor_symmetry_invariance_and_dense_oracle() {
    let mut rng = lane_rng(4, 0);
    for case in 0..1000 {
        let n = rng.random_range(4..40);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v * rng.random_range(0.0..1.0) + rng.random_range(-2.0..2.0)).collect();
        let d = distance_correlation(&x, &y).unwrap();
        assert!((0.0..=1.0 + 1e-12).contains(&d));
        assert!((d - distance_correlation(&y, &x).unwrap()).abs() <= 1e-12);
        let (a, b, c, e) = (rng.random_range(0.1..4.0), rng.random_range(-9.0..9.0), -rng.random_range(0.1..4.0), 3.0);
        let xs: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let ys: Vec<f64> = y.iter().map(|v| c * v + e).collect();
        assert!((d - distance_correlation(&xs, &ys).unwrap()).abs() <= 1e-9, "case {case}");
        if case < 200 {
            assert!((d - dcor_dense(&x, &y)).abs() <= 1e-9, "case {case}");
        }
    }
}

#[test]
fn dcor_of_independent_samples_is_small() {
    let mut rng = lane_rng(5, 0);
    let x: Vec<f64> = (0..2000).map(|_| rng.random_range(0.0..1.0)).collect();
    let y: Vec<f64> = (0..2000).map(|_| rng.random_range(0.0..1.0)).collect();
    let d = distance_correlation(&x, &y).unwrap();
    assert!(d < 0.1, "{d}");
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn truncated_normal_mean_matches_quadrature() {
    let mut rng = lane_rng(6, 0);
    for _ in 0..300 {
        let mu = rng.random_range(-2.0..8.0);
        let var = rng.random_range(0.05..9.0);
        let pdf = |x: f64| (-(x - mu) * (x - mu) / (2.0 * var)).exp();
        let mass = simpson(pdf, 1.0, 5.0, 4000);
        let first = simpson(|x| x * pdf(x), 1.0, 5.0, 4000);
        if mass < 1e-200 {
            continue;
        }
        let m = truncated_normal_mean(mu, var, 1.0, 5.0);
        assert!((m - first / mass).abs() < 1e-7, "mu={mu} var={var}: {m} vs {}", first / mass);
    }
}

fn synthetic(structure: Structure, impact: Impact, n: usize, seed: u64) -> Vec<FactorSample> {
    let mut rng = lane_rng(seed, 1);
    let m = QoeModel::new(structure, impact);
    (0..n)
        .map(|_| {
            let (r, q, b, c) = (
                rng.random_range(0.0..3.0),
                rng.random_range(0.2..1.0),
                rng.random_range(1.0..=2.0),
                rng.random_range(1.0..=2.0),
            );
            FactorSample { qoe: eval_qoe(&m, r, q, b, c), rebuffer: r, quality: q, behavior: b, complexity: c }
        })
        .collect()
}

#[test]
fn noiseless_fits_recover_parameters() {
    let mut rng = lane_rng(7, 0);
    for i in 0..100 {
        let s = Structure::ALL[i % 3];
        let truth = Impact::new(rng.random_range(0.2..1.0), rng.random_range(0.2..1.0));
        let samples = synthetic(s, truth, 200, 100 + i as u64);
        let fit = fit_model(s.index(), &samples).unwrap();
        let got = fit.model.impact;
        assert!(
            (got.alpha - truth.alpha).abs() <= 1e-4 && (got.beta - truth.beta).abs() <= 1e-4,
            "{s:?} {truth:?} -> {got:?}"
        );
    }
}

fn sse(s: Structure, alpha: f64, beta: f64, samples: &[FactorSample]) -> f64 {
    let m = QoeModel::new(s, Impact::new(alpha, beta));
    samples.iter().map(|x| (x.qoe - eval_qoe(&m, x.rebuffer, x.quality, x.behavior, x.complexity)).powi(2)).sum()
}

/// Coarse grid over [0, 3]^2, then two successively finer grids around the
/// best point.
fn grid_minimum(s: Structure, samples: &[FactorSample]) -> f64 {
    let (mut ca, mut cb, mut half) = (1.5, 1.5, 1.5);
    let mut best = f64::INFINITY;
    for _ in 0..3 {
        let (mut ba, mut bb) = (ca, cb);
        for i in 0..=60 {
            for j in 0..=60 {
                let a = (ca - half + 2.0 * half * i as f64 / 60.0).max(0.0);
                let b = (cb - half + 2.0 * half * j as f64 / 60.0).max(0.0);
                let v = sse(s, a, b, samples);
                if v < best {
                    best = v;
                    (ba, bb) = (a, b);
                }
            }
        }
        (ca, cb) = (ba, bb);
        half /= 15.0;
    }
    best
}

#[test]
fn fits_agree_with_grid_search() {
    let mut rng = lane_rng(8, 0);
    for i in 0..100 {
        let s = Structure::ALL[i % 3];
        let truth = Impact::new(rng.random_range(0.2..1.0), rng.random_range(0.2..1.0));
        let mut samples = synthetic(s, truth, 60, 500 + i as u64);
        for x in &mut samples {
            x.qoe = (x.qoe + rng.random_range(-0.4..0.4)).clamp(1.0, 5.0);
        }
        let fit = fit_model(s.index(), &samples).unwrap();
        let ours = sse(s, fit.model.impact.alpha, fit.model.impact.beta, &samples);
        let grid = grid_minimum(s, &samples);
        assert!(ours <= grid + 1e-3, "instance {i}: fit {ours} grid {grid}");
        assert!((ours - grid).abs() <= 1e-3, "instance {i}: fit {ours} grid {grid}");
    }
}
