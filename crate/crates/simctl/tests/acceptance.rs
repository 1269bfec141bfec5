//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero when any fails. The scheme comparison uses the default
//! scenario with full training, so this target takes several minutes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dasim_core::bench::SchemeId;
use dasim_core::da1::{user_allocate, UserUtility};
use dasim_core::da2::{best_response_adjust, greedy_slice, marginal_gains, Capacities, Cell, DemandDistribution, Quanta, SliceConfig};
use dasim_core::learn::{train_episodes, AgentConfig, BdqNetwork, Environment, Transition};
use dasim_core::qoe::{distance_correlation, eval_qoe, fit_model, qos_score, FactorSample, Impact, QoeModel, Structure};
use dasim_core::rng::{lane_rng, SimRng};
use dasim_core::scenario::{Mode, ScenarioConfig, STANDARD_USER_COUNTS};
use rand::Rng;
use simctl::{parse_scenario, run_schemes, worker_pool, RunOptions, Summary, TraceLevel};

struct Check {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Check {
    Check { pass, detail: detail.into() }
}

fn out_root() -> PathBuf {
    Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance")
}

const SEEDS: [u64; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

fn by_scheme(results: Vec<simctl::SchemeResult>) -> BTreeMap<SchemeId, Summary> {
    results.into_iter().map(|r| (r.scheme, r.summary.expect("every seed ran"))).collect()
}

// Criterion 1: ordering of the seed-mean ELA achievable ratio.
fn scheme_ordering(s: &BTreeMap<SchemeId, Summary>) -> Check {
    let r = |id| s[&id].mean_ela_ratio;
    let (p, w, d, h) = (r(SchemeId::Proposed), r(SchemeId::WoDa), r(SchemeId::PdrlL1), r(SchemeId::HslaL2));
    let beats = p > w && p > d && p > h;
    let hsla_worst = h < w && h < d;
    let margin = p - h >= 0.05;
    check(
        beats && hsla_worst && margin,
        format!(
            "ela ratio proposed {p:.4}, wo-da {w:.4}, pdrl-l1 {d:.4}, hsla-l2 {h:.4}; proposed best {beats}, \
             hsla-l2 worst {hsla_worst}, proposed - hsla-l2 = {:.4} (need >= 0.05)",
            p - h
        ),
    )
}

// Criterion 2: median QoE ordering and spread.
fn median_ordering(s: &BTreeMap<SchemeId, Summary>) -> Check {
    let med = |id: SchemeId| s[&id].qoe_box.median;
    let iqr = |id: SchemeId| s[&id].qoe_box.iqr;
    let p = med(SchemeId::Proposed);
    let highest = [SchemeId::WoDa, SchemeId::PdrlL1, SchemeId::HslaL2].iter().all(|id| p >= med(*id));
    let wide = iqr(SchemeId::WoDa) >= iqr(SchemeId::Proposed);
    check(
        highest && wide,
        format!(
            "median proposed {p:.4}, wo-da {:.4}, pdrl-l1 {:.4}, hsla-l2 {:.4}; iqr wo-da {:.4} vs proposed {:.4}",
            med(SchemeId::WoDa),
            med(SchemeId::PdrlL1),
            med(SchemeId::HslaL2),
            iqr(SchemeId::WoDa),
            iqr(SchemeId::Proposed)
        ),
    )
}

// Criterion 3: the QoE model in a neutral context and its monotonicity.
fn qoe_unit_suite() -> Check {
    let mut rng = lane_rng(301, 0);
    let mut worst = 0.0f64;
    let mut monotone = true;
    for _ in 0..10_000 {
        let m = QoeModel::new(
            Structure::ALL[rng.random_range(0..3)],
            Impact::new(rng.random_range(0.0..2.0), rng.random_range(0.0..2.0)),
        );
        let (r, q) = (rng.random_range(0.0..15.0), rng.random_range(0.0..=1.0));
        worst = worst.max((eval_qoe(&m, r, q, 1.0, 1.0) - qos_score(m.structure_index(), r, q).unwrap()).abs());
        let (lo, hi) = (rng.random_range(1.0..1.5), rng.random_range(1.5..=2.0));
        let c = rng.random_range(1.0..=2.0);
        monotone &= eval_qoe(&m, r, q, hi, c) <= eval_qoe(&m, r, q, lo, c) && eval_qoe(&m, r, q, c, hi) <= eval_qoe(&m, r, q, c, lo);
    }
    check(worst <= 1e-12 && monotone, format!("10^4 models: max |E(1,1) - S| = {worst:.1e} (tol 1e-12), monotone {monotone}"))
}

// Criterion 4: distance correlation.
fn dcor_oracle() -> Check {
    let mut rng = lane_rng(302, 0);
    let (mut affine_err, mut sym_err, mut inv_err) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let n = rng.random_range(4..50);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let a = if rng.random_bool(0.5) { rng.random_range(0.1..3.0) } else { -rng.random_range(0.1..3.0) };
        let b = rng.random_range(-5.0..5.0);
        let lin: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        affine_err = affine_err.max((distance_correlation(&x, &lin).unwrap() - 1.0).abs());
        let y: Vec<f64> = x.iter().map(|v| v.sin() + rng.random_range(-1.0..1.0)).collect();
        let d = distance_correlation(&x, &y).unwrap();
        sym_err = sym_err.max((d - distance_correlation(&y, &x).unwrap()).abs());
        let xs: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let ys: Vec<f64> = y.iter().map(|v| 2.0 * v - 1.0).collect();
        inv_err = inv_err.max((d - distance_correlation(&xs, &ys).unwrap()).abs());
    }
    let u: Vec<f64> = (0..2000).map(|_| rng.random_range(0.0..1.0)).collect();
    let v: Vec<f64> = (0..2000).map(|_| rng.random_range(0.0..1.0)).collect();
    let indep = distance_correlation(&u, &v).unwrap();
    check(
        affine_err <= 1e-9 && sym_err <= 1e-9 && inv_err <= 1e-9 && indep < 0.1,
        format!(
            "affine |dCor-1| {affine_err:.1e}, symmetry {sym_err:.1e}, invariance {inv_err:.1e} (tol 1e-9); \
             independent n=2000 dCor {indep:.4} (< 0.1)"
        ),
    )
}

fn synthetic(s: Structure, truth: Impact, n: usize, rng: &mut SimRng) -> Vec<FactorSample> {
    let m = QoeModel::new(s, truth);
    (0..n)
        .map(|_| {
            let (r, q, b, c) =
                (rng.random_range(0.0..3.0), rng.random_range(0.2..1.0), rng.random_range(1.0..=2.0), rng.random_range(1.0..=2.0));
            FactorSample { qoe: eval_qoe(&m, r, q, b, c), rebuffer: r, quality: q, behavior: b, complexity: c }
        })
        .collect()
}

fn sse(s: Structure, a: f64, b: f64, xs: &[FactorSample]) -> f64 {
    let m = QoeModel::new(s, Impact::new(a, b));
    xs.iter().map(|x| (x.qoe - eval_qoe(&m, x.rebuffer, x.quality, x.behavior, x.complexity)).powi(2)).sum()
}

// Criterion 5: parameter recovery and agreement with grid search.
fn fitting_recovery() -> Check {
    let mut rng = lane_rng(303, 0);
    let mut param_err = 0.0f64;
    for i in 0..100 {
        let s = Structure::ALL[i % 3];
        let truth = Impact::new(rng.random_range(0.2..1.0), rng.random_range(0.2..1.0));
        let xs = synthetic(s, truth, 200, &mut rng);
        let got = fit_model(s.index(), &xs).unwrap().model.impact;
        param_err = param_err.max((got.alpha - truth.alpha).abs().max((got.beta - truth.beta).abs()));
    }
    let mut obj_gap = 0.0f64;
    for i in 0..100 {
        let s = Structure::ALL[i % 3];
        let truth = Impact::new(rng.random_range(0.2..1.0), rng.random_range(0.2..1.0));
        let mut xs = synthetic(s, truth, 60, &mut rng);
        for x in &mut xs {
            x.qoe = (x.qoe + rng.random_range(-0.4..0.4)).clamp(1.0, 5.0);
        }
        let fit = fit_model(s.index(), &xs).unwrap().model.impact;
        let ours = sse(s, fit.alpha, fit.beta, &xs);
        let (mut ca, mut cb, mut half, mut best) = (1.5, 1.5, 1.5, f64::INFINITY);
        for _ in 0..3 {
            let (mut ba, mut bb) = (ca, cb);
            for p in 0..=60 {
                for q in 0..=60 {
                    let a = (ca - half + 2.0 * half * p as f64 / 60.0).max(0.0);
                    let b = (cb - half + 2.0 * half * q as f64 / 60.0).max(0.0);
                    let v = sse(s, a, b, &xs);
                    if v < best {
                        (best, ba, bb) = (v, a, b);
                    }
                }
            }
            (ca, cb, half) = (ba, bb, half / 15.0);
        }
        obj_gap = obj_gap.max(ours - best);
    }
    check(
        param_err <= 1e-4 && obj_gap <= 1e-3,
        format!("noiseless max parameter error {param_err:.1e} (tol 1e-4); max objective excess over grid {obj_gap:.1e} (tol 1e-3)"),
    )
}

fn prefix(c: &[f64], n: usize) -> f64 {
    c[..n.min(c.len())].iter().sum()
}

fn quanta_of(x: f64, q: f64) -> usize {
    (x / q - 1e-9).ceil().max(0.0) as usize
}

// Criterion 6: user solver, greedy slicing and the game.
fn solver_oracles() -> Check {
    let mut rng = lane_rng(304, 0);
    let mut rel = 0.0f64;
    for _ in 0..50 {
        let mut mk = || UserUtility {
            impact: rng.random_range(0.4..1.0),
            score: rng.random_range(1.5..5.0),
            bw_demand: rng.random_range(0.5e6..5e6),
            cpu_demand: rng.random_range(0.1e9..0.7e9),
            bs: 0,
        };
        let us = [mk(), mk()];
        let bw = rng.random_range(0.2..1.5) * (us[0].bw_demand + us[1].bw_demand);
        let cpu = rng.random_range(0.2..1.5) * (us[0].cpu_demand + us[1].cpu_demand);
        let sol = user_allocate(&us, &[bw], cpu, 500);
        let ours: f64 = us.iter().zip(&sol.allocations).map(|(u, a)| u.value(a.0, a.1)).sum();
        let mut grid = f64::NEG_INFINITY;
        for i in 0..100 {
            for j in 0..100 {
                let (x, y) = (bw * i as f64 / 99.0, cpu * j as f64 / 99.0);
                grid = grid.max(us[0].value(x, y) + us[1].value(bw - x, cpu - y));
            }
        }
        // The solver may beat the grid; it may not fall short of it.
        rel = rel.max((grid - ours) / grid);
    }

    let q = Quanta { bandwidth: 1e6, compute: 0.5e9 };
    let mut greedy_ok = true;
    let mut instances = 0;
    for _ in 0..200 {
        let mut dist = DemandDistribution { groups: vec![1, 2, 3], num_bs: 1, ..Default::default() };
        for g in 1..=3u32 {
            let (bw, gain, w) = (rng.random_range(0.0..8.0) * q.bandwidth, rng.random_range(0.5..4.0), rng.random_range(1.0..4.0));
            dist.cells.insert((g, 0), Cell { bandwidth: bw, compute: 0.0, users: 1, bw_curve: marginal_gains(bw, q.bandwidth, gain, w) });
            dist.compute.insert(g, 0.0);
        }
        let curves: Vec<Vec<f64>> = (1..=3u32).map(|g| dist.cells[&(g, 0)].bw_curve.clone()).collect();
        for cap in 0..=10usize {
            let cfg = greedy_slice(&dist, &Capacities { bandwidth: vec![cap as f64 * q.bandwidth], compute: 0.0 }, q, 9);
            let got: f64 = (1..=3u32).zip(&curves).map(|(g, c)| prefix(c, quanta_of(cfg.bandwidth_of(g, 0), q.bandwidth))).sum();
            let mut best = 0.0f64;
            for a in 0..=cap {
                for b in 0..=cap - a {
                    best = best.max(prefix(&curves[0], a) + prefix(&curves[1], b) + prefix(&curves[2], cap - a - b));
                }
            }
            greedy_ok &= (got - best).abs() <= 1e-9;
            instances += 1;
        }
    }

    let cap = 5usize;
    let caps = Capacities { bandwidth: vec![cap as f64 * q.bandwidth], compute: cap as f64 * q.compute };
    let mut nash_ok = true;
    for _ in 0..200 {
        let price = rng.random_range(0.0..0.6);
        let mut dist = DemandDistribution { groups: vec![1, 2], num_bs: 1, ..Default::default() };
        for g in 1..=2u32 {
            let mut bw: Vec<f64> = (0..rng.random_range(0..=6)).map(|_| rng.random_range(0.0..1.0)).collect();
            bw.sort_by(|a, b| b.total_cmp(a));
            let mut cpu: Vec<f64> = (0..rng.random_range(0..=6)).map(|_| rng.random_range(0.0..1.0)).collect();
            cpu.sort_by(|a, b| b.total_cmp(a));
            let (tb, tc) = (bw.len() as f64 * q.bandwidth, cpu.len() as f64 * q.compute);
            dist.cells.insert((g, 0), Cell { bandwidth: tb, compute: tc, users: 1, bw_curve: bw });
            dist.compute.insert(g, tc);
            dist.cpu_curves.insert(g, cpu);
        }
        let a = rng.random_range(0..=cap);
        let mut init = SliceConfig::uniform(&[1, 2], 1, 0.0, 0.0, 9);
        init.bandwidth.insert((1, 0), a as f64 * q.bandwidth);
        init.compute.insert(2, a as f64 * q.compute);
        let (out, rep) = best_response_adjust(&init, &dist, &caps, q, price, 100);
        nash_ok &= rep.converged;
        let pools = [
            ([dist.cells[&(1, 0)].bw_curve.clone(), dist.cells[&(2, 0)].bw_curve.clone()], [quanta_of(out.bandwidth_of(1, 0), q.bandwidth), quanta_of(out.bandwidth_of(2, 0), q.bandwidth)]),
            ([dist.cpu_curves[&1].clone(), dist.cpu_curves[&2].clone()], [quanta_of(out.compute_of(1), q.compute), quanta_of(out.compute_of(2), q.compute)]),
        ];
        for (curves, held) in &pools {
            for p in 0..2 {
                let u = |n: usize| prefix(&curves[p], n) - price * n as f64;
                let room = cap - held[1 - p];
                nash_ok &= (0..=room).all(|m| u(m) <= u(held[p]) + 1e-12);
            }
        }
    }
    check(
        rel <= 1e-3 && greedy_ok && nash_ok,
        format!(
            "user_allocate shortfall vs 100x100 grid {rel:.1e} (tol 1e-3, 50 instances); greedy = exhaustive on {instances} \
             instances: {greedy_ok}; 200 games pass the deviation scan: {nash_ok}"
        ),
    )
}

struct Bandit {
    context: usize,
    optimal: Vec<bool>,
}

const PAYOFF: [[f64; 3]; 2] = [[0.2, 1.0, 0.5], [0.9, 0.1, 0.4]];

impl Environment for Bandit {
    fn state_dim(&self) -> usize {
        2
    }
    fn num_branches(&self) -> usize {
        1
    }
    fn actions_per_branch(&self) -> usize {
        3
    }
    fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<f64> {
        self.context = rng.random_range(0..2);
        let mut s = vec![0.0; 2];
        s[self.context] = 1.0;
        s
    }
    fn step<R: Rng + ?Sized>(&mut self, action: &[usize], rng: &mut R) -> dasim_core::Result<(Vec<f64>, f64, bool)> {
        let row = PAYOFF[self.context];
        let best = (0..3).max_by(|a, b| row[*a].total_cmp(&row[*b])).unwrap();
        self.optimal.push(action[0] == best);
        Ok((vec![0.0; 2], row[action[0]] + rng.random_range(-0.1..0.1), true))
    }
}

// Criterion 7: gradients, the dueling identity and a toy bandit.
fn learning_checks() -> Check {
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let mut rng = lane_rng(seed, 305);
        let input = rng.random_range(1..5);
        let widths: Vec<usize> =
            std::iter::once(input).chain((0..rng.random_range(1..3)).map(|_| rng.random_range(2..7))).collect();
        let (br, act) = (rng.random_range(1..4), rng.random_range(2..5));
        let mut net = BdqNetwork::new(&widths, br, act, &mut rng);
        for l in &mut net.trunk {
            l.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
        }
        let batch: Vec<Transition> = (0..5)
            .map(|_| Transition {
                state: (0..input).map(|_| rng.random_range(-1.0..1.0)).collect(),
                action: (0..br).map(|_| rng.random_range(0..act)).collect(),
                reward: 0.0,
                next_state: vec![0.0; input],
                terminal: true,
            })
            .collect();
        let y: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
        let g = net.loss_and_gradients(&batch, &y).unwrap().1.params();
        let base = net.params();
        let mut probe = net.clone();
        for (k, gk) in g.iter().enumerate() {
            let mut p = base.clone();
            p[k] += 1e-6;
            probe.set_params(&p).unwrap();
            let up = probe.loss_and_gradients(&batch, &y).unwrap().0;
            p[k] -= 2e-6;
            probe.set_params(&p).unwrap();
            let down = probe.loss_and_gradients(&batch, &y).unwrap().0;
            let fd = (up - down) / 2e-6;
            let scale = gk.abs().max(fd.abs());
            if scale >= 1e-7 {
                worst = worst.max((gk - fd).abs() / scale);
            }
        }
    }
    let mut duel = 0.0f64;
    for seed in 0..100u64 {
        let mut rng = lane_rng(seed, 306);
        let net = BdqNetwork::new(&[3, 8, 8], 3, 6, &mut rng);
        let s: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
        let v = net.value_of(&s).unwrap();
        for q in net.forward(&s).unwrap() {
            duel = duel.max((q.iter().sum::<f64>() / q.len() as f64 - v).abs());
        }
    }
    let mut rng = lane_rng(21, 0);
    let cfg = AgentConfig {
        learning_rate: 1e-2,
        epsilon_decay_episodes: 250,
        epsilon_end: 0.02,
        batch_size: 16,
        target_sync_steps: 20,
        ..Default::default()
    };
    let mut env = Bandit { context: 0, optimal: Vec::new() };
    train_episodes(&mut env, BdqNetwork::new(&[2, 16], 1, 3, &mut rng), &cfg, 500, 1, &mut rng).unwrap();
    let rate = env.optimal[400..].iter().filter(|o| **o).count() as f64 / 100.0;
    check(
        worst < 1e-4 && duel <= 1e-9 && rate >= 0.95,
        format!(
            "finite-difference max relative error {worst:.1e} (< 1e-4, 100 nets); |mean Q - V| {duel:.1e} (tol 1e-9); \
             bandit optimal-action rate over the last 100 of 500 episodes {rate:.2} (>= 0.95)"
        ),
    )
}

fn read_dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect()
}

// Criterion 8: identical inputs give identical bytes.
fn determinism(pool: &rayon::ThreadPool) -> Check {
    let cfg = parse_scenario(
        "",
        &["sim_duration=900.0".into(), "training.epochs=100".into(), "training.profiling_slots=600".into()],
    )
    .unwrap();
    let root = out_root().join("determinism");
    let _ = std::fs::remove_dir_all(&root);
    let opts = RunOptions { trace: TraceLevel::Full, ..Default::default() };
    for rep in ["a", "b"] {
        run_schemes(pool, &cfg, &SchemeId::ALL, &[7], &root.join(rep), &opts).unwrap();
    }
    let mut same = true;
    let mut files = 0;
    for s in SchemeId::ALL {
        let (a, b) = (read_dir_bytes(&root.join("a").join(s.name())), read_dir_bytes(&root.join("b").join(s.name())));
        same &= a == b;
        files += a.len();
    }
    check(same, format!("{files} CSV/summary files over 4 schemes, byte-identical across two runs: {same}"))
}

// Criterion 9: no capacity violation over the population sweep.
fn conservation(pool: &rayon::ThreadPool, k16: &BTreeMap<SchemeId, Summary>) -> Check {
    let mut total = k16.values().map(|s| s.violations).sum::<u64>();
    let mut parts = vec![format!("k=16: {total}")];
    for k in STANDARD_USER_COUNTS.into_iter().filter(|k| *k != 16) {
        let mut cfg = ScenarioConfig { num_users: k, mode: Mode::Standard, ..Default::default() };
        cfg.training.epochs = 500;
        let opts = RunOptions { trace: TraceLevel::Summary, ..Default::default() };
        let res = by_scheme(run_schemes(pool, &cfg, &SchemeId::ALL, &[1], &out_root().join(format!("k{k}")), &opts).unwrap());
        let v: u64 = res.values().map(|s| s.violations).sum();
        total += v;
        parts.push(format!("k={k}: {v}"));
    }
    check(total == 0, format!("capacity violations over 4 schemes: {}", parts.join(", ")))
}

fn main() {
    let started = Instant::now();
    let pool = worker_pool().expect("worker pool");
    let mut lines = Vec::new();
    let mut report = |id: u32, name: &str, c: Check| {
        let line = format!("{} [{id}] {name}: {}", if c.pass { "PASS" } else { "FAIL" }, c.detail);
        println!("{line}");
        lines.push((c.pass, line));
    };

    report(3, "qoe model unit suite", qoe_unit_suite());
    report(4, "distance correlation oracle", dcor_oracle());
    report(5, "fitting recovery", fitting_recovery());
    report(6, "solver oracles", solver_oracles());
    report(7, "learning correctness", learning_checks());
    report(8, "determinism", determinism(&pool));

    let t = Instant::now();
    let cfg = ScenarioConfig::default();
    let opts = RunOptions { trace: TraceLevel::Windows, ..Default::default() };
    let k16 = by_scheme(run_schemes(&pool, &cfg, &SchemeId::ALL, &SEEDS, &out_root().join("k16"), &opts).unwrap());
    let compare_secs = t.elapsed().as_secs_f64();
    report(1, "scheme ordering, k=16, 10 seeds", scheme_ordering(&k16));
    report(2, "median qoe ordering, same runs", median_ordering(&k16));
    report(9, "conservation over k-sweep", conservation(&pool, &k16));

    println!(
        "scheme comparison took {compare_secs:.0} s (target < 1800 s); whole target {:.0} s; bundles under {}",
        started.elapsed().as_secs_f64(),
        out_root().display()
    );
    let text: String = lines.iter().map(|(_, l)| format!("{l}\n")).collect();
    std::fs::create_dir_all(out_root()).unwrap();
    std::fs::write(out_root().join("verdicts.txt"), text).unwrap();
    let failed = lines.iter().filter(|(p, _)| !p).count();
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
