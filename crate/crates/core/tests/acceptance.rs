//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the report is always printed.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use torus_dipole::analytics::{exact_two_level_params, two_level_solve};
use torus_dipole::geometry::{Current, Geometry};
use torus_dipole::integrals::{self, AspectRatio};
use torus_dipole::operators::{self, oracle, OperatorSet};
use torus_dipole::spectral::{level_split, level_table};
use torus_dipole::sweep::{parse_config_str, run_sweep, CellResult, SweepResult};

const CELLS_A: [f64; 3] = [1.2, 2.0, 3.0];
const CELLS_M: [i64; 3] = [0, 1, 2];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn cur(i: f64) -> Current {
    Current::new(i).unwrap()
}

/// Plain trapezoid mean over one period, independent of the crate's ladder.
fn trapezoid(f: impl Fn(f64) -> Complex64, points: usize) -> Complex64 {
    let h = 2.0 * PI / points as f64;
    (0..points).map(|k| f(k as f64 * h)).sum::<Complex64>() / points as f64
}

fn criterion_1() -> Outcome {
    const N: usize = 2048;
    let mut worst: f64 = 0.0;
    let mut recurrence: f64 = 0.0;
    for av in [1.2, 2.0, 3.0, 10.0] {
        let a = AspectRatio::new(av).unwrap();
        for n in -12i64..=12 {
            let nf = n as f64;
            let e = |t: f64| Complex64::from_polar(1.0, nf * t);
            let i_n = trapezoid(|t| e(t) / (av + t.cos()), N).re;
            let i_ln = trapezoid(|t| e(t) * (av + t.cos()).ln(), N).re;
            let k2 = trapezoid(|t| e(t) * (t.sin() / (av + t.cos())), N) * (av * av - 1.0) / 2.0;
            worst = worst.max((integrals::fourier_integral(a, n) - i_n).abs());
            worst = worst.max((integrals::log_integral(a, n) - i_ln).abs());
            worst = worst.max((integrals::kernel_k2(n, a) - k2).norm());
            for n2 in [-2i64, 0, 1, 5] {
                let n2f = n2 as f64;
                let k1 = trapezoid(
                    |t| {
                        let (s, c) = t.sin_cos();
                        let g = 3.0 * av * (2.0 * t).cos() + 4.0 * (av * av + 1.0) * c + 5.0 * av;
                        e(t) * Complex64::new((3.0 * av * c - av * av + 2.0) * s, n2f * g)
                    },
                    N,
                ) / (2.0 * av);
                worst = worst.max((integrals::kernel_k1(n2, n, a) - k1).norm() / (1.0 + n2f.abs()));
            }
            let i = |k| integrals::fourier_integral(a, k);
            let d = if n == 0 { 1.0 } else { 0.0 };
            recurrence = recurrence.max((0.5 * (i(n + 1) + i(n - 1)) + av * i(n) - d).abs());
        }
    }
    outcome(
        worst <= 1e-12 && recurrence <= 1e-12,
        format!("max closed-form deviation {worst:.2e}, recurrence residual {recurrence:.2e}"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = StdRng::seed_from_u64(20240917);
    let cases = 320;
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let g = Geometry::with_wire(rng.gen_range(1.1..8.0), rng.gen_range(3.0..30.0)).unwrap();
        let m = rng.gen_range(-3i64..=3);
        let n1 = rng.gen_range(-8i64..=8);
        let n2 = rng.gen_range(-8i64..=8);
        let i = cur(rng.gen_range(-10.0..10.0));
        let h = operators::free_element(g.a, m, n1, n2) + operators::interaction_element(&g, n2, n2 - n1, i).unwrap();
        let h_ref = oracle::free_element(g.a, m, n1, n2).unwrap() + oracle::interaction_element(&g, n1, n2, i).unwrap();
        let t = operators::t3_free_element(g.a, n2, n2 - n1) + operators::t3_current_element(&g, n2 - n1, i);
        let t_ref = oracle::t3_element(&g, n1, n2, i).unwrap();
        worst = worst.max((h - h_ref).norm()).max((t_ref - t).norm());
    }
    outcome(worst <= 1e-10, format!("{cases} random cases, max deviation {worst:.2e}"))
}

fn criterion_3() -> Outcome {
    let mut worst: f64 = 0.0;
    for a in CELLS_A {
        for m in CELLS_M {
            let set = OperatorSet::new(Geometry::new(a).unwrap(), m, 60).unwrap();
            let (_, t) = level_table(&set, cur(0.0), 11).unwrap();
            worst = t.t3.iter().fold(worst, |w, v| w.max(v.abs()));
        }
    }
    outcome(worst <= 1e-8, format!("9 cells x 11 levels, max |<T3>(0)| = {worst:.2e}"))
}

/// `(n, i, ΔE_n, <T3>_{2n−1}, <T3>_{2n})`.
type WeakCase = (usize, f64, f64, f64, f64);

/// Weak-current cases for a=3, m=0 that pass the δ_I/ε_I ≥ 10 gate.
fn weak_current_cases() -> (Vec<WeakCase>, usize) {
    let g = Geometry::new(3.0).unwrap();
    let set = OperatorSet::new(g, 0, 60).unwrap();
    let mut cases = Vec::new();
    let mut gated = 0;
    for x in [0.05, 0.1, 0.2] {
        let (spec, t) = level_table(&set, cur(x), 11).unwrap();
        for n in [2usize, 3] {
            if !exact_two_level_params(&g, n as i64, 0, cur(x)).unwrap().gated(10.0) {
                gated += 1;
                continue;
            }
            cases.push((n, x, level_split(&spec, n).unwrap(), t.t3[2 * n - 1], t.t3[2 * n]));
        }
    }
    (cases, gated)
}

fn criterion_4() -> Outcome {
    let (cases, gated) = weak_current_cases();
    let worst = cases
        .iter()
        .map(|&(n, x, de, _, _)| (de - n as f64 * x).abs() / (n as f64 * x))
        .fold(0.0, f64::max);
    outcome(
        !cases.is_empty() && worst <= 0.05,
        format!("{} cases ({gated} outside the gate), max |dE - n i|/(n i) = {worst:.3e}", cases.len()),
    )
}

fn criterion_5() -> Outcome {
    let (cases, _) = weak_current_cases();
    let (mut quant, mut anti) = (0.0f64, 0.0f64);
    for &(n, _, _, lower, upper) in &cases {
        quant = quant.max((upper + 2.5 * n as f64).abs());
        anti = anti.max((upper + lower).abs());
    }
    outcome(
        !cases.is_empty() && quant <= 0.1 && anti <= 0.1,
        format!("max |<T3>_2n + 5n/2| = {quant:.3e}, max |<T3>_2n + <T3>_2n-1| = {anti:.3e}"),
    )
}

fn criterion_6() -> Outcome {
    let (cases, _) = weak_current_cases();
    let worst = cases
        .iter()
        .map(|&(_, x, de, _, upper)| (de - 0.4 * x * upper.abs()).abs() / de)
        .fold(0.0, f64::max);
    outcome(
        !cases.is_empty() && worst <= 0.05,
        format!("max |dE - (2/5) i |<T3>||/dE = {worst:.3e}"),
    )
}

fn full_sweep() -> (SweepResult, Duration) {
    let cfg = parse_config_str("a = 1.2, 2, 3\nm = 0, 1, 2\ni = 0:20:2000\nn_max = 60\nlevels = 11\n").unwrap();
    let start = Instant::now();
    let r = run_sweep(&cfg, None).unwrap();
    (r, start.elapsed())
}

fn criterion_7(result: &SweepResult, elapsed: Duration) -> Outcome {
    let mut passed = elapsed < Duration::from_secs(600);
    let mut parts = Vec::new();
    let mut means = Vec::new();
    for a in CELLS_A {
        let cells: Vec<&CellResult> = result.cells.iter().filter(|c| c.a == a).collect();
        let step = cells[0].grid.step();
        let mut periods = Vec::new();
        for c in &cells {
            if let Some(e) = &c.error {
                passed = false;
                parts.push(format!("a={a} m={}: {e}", c.m));
                continue;
            }
            for eta in 1..=10 {
                match &c.levels[eta].period {
                    Ok(p) => periods.push(*p),
                    Err(e) => {
                        passed = false;
                        parts.push(format!("a={a} m={} eta={eta}: {e}", c.m));
                    }
                }
            }
        }
        let (lo, hi) = periods.iter().fold((f64::MAX, f64::MIN), |(l, h), p| (l.min(*p), h.max(*p)));
        passed &= hi - lo <= 2.0 * step;
        let mean = periods.iter().sum::<f64>() / periods.len().max(1) as f64;
        means.push(mean);
        let ext = cells.iter().map(|c| c.grid.hi).fold(0.0, f64::max);
        // Reported only: the measured period is not assumed to have a closed form.
        let flux = Geometry::new(a).unwrap().flux_period();
        parts.push(format!(
            "a={a}: 2I_s={mean:.4} spread {:.2} steps, 2a(a+s)={flux:.4} (grid to i={ext})",
            (hi - lo) / step
        ));
    }
    passed &= means.windows(2).all(|w| w[1] > w[0] * 1.5);
    parts.push(format!("sweep {:.0} s", elapsed.as_secs_f64()));
    outcome(passed, parts.join("; "))
}

fn criterion_8(result: &SweepResult) -> Outcome {
    let cell = result.cells.iter().find(|c| c.a == 3.0 && c.m == 0).unwrap();
    let mut passed = true;
    let (mut drop_dev, mut diff_dev) = (0.0f64, 0.0f64);
    let mut checked = 0;
    for eta in 4..=10 {
        let level = &cell.levels[eta];
        let Some(drop) = level.drop_per_half_period() else {
            passed = false;
            continue;
        };
        drop_dev = drop_dev.max((drop - 1.25).abs() / 1.25);
        let segments = &level.segmentation.as_ref().unwrap().segments;
        for s in segments {
            let mid = 0.5 * (s.i_start + s.i_end);
            let row = cell
                .rows
                .iter()
                .min_by(|p, q| (p.i - mid).abs().total_cmp(&(q.i - mid).abs()))
                .unwrap();
            diff_dev = diff_dev.max(((row.t3[eta] - row.t3[eta - 2]).abs() - 2.5).abs());
            checked += 1;
        }
    }
    passed &= checked > 0 && drop_dev <= 0.1 && diff_dev <= 0.15;
    outcome(
        passed,
        format!("a=3 m=0 eta 4..10: drop per half period within {:.3}% of 5/4, |difference| within {diff_dev:.3e} of 5/2 at {checked} segment midpoints", 100.0 * drop_dev),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = StdRng::seed_from_u64(99);
    let mut solve: f64 = 0.0;
    for _ in 0..2000 {
        let (eps, delta) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let s = two_level_solve(eps, delta);
        let e = Matrix2::new(1.0 + delta, eps, eps, 1.0 - delta).symmetric_eigenvalues();
        solve = solve.max((s.alpha_plus - e.max()).abs()).max((s.alpha_minus - e.min()).abs());
    }
    let g = Geometry::new(3.0).unwrap();
    let set = OperatorSet::new(g, 0, 60).unwrap();
    let mut rel: f64 = 0.0;
    let mut count = 0;
    for x in [0.05, 0.1, 0.2] {
        let (_, t) = level_table(&set, cur(x), 11).unwrap();
        for n in [2usize, 3, 4] {
            let p = exact_two_level_params(&g, n as i64, 0, cur(x)).unwrap();
            if !p.gated(10.0) {
                continue;
            }
            let (u, v) = p.eigenvalues();
            rel = rel.max((u.min(v) - t.energies[2 * n - 1]).abs() / t.energies[2 * n - 1]);
            rel = rel.max((u.max(v) - t.energies[2 * n]).abs() / t.energies[2 * n]);
            count += 1;
        }
    }
    outcome(
        solve <= 1e-12 && count > 0 && rel <= 0.01,
        format!("2x2 solve deviation {solve:.2e}; two-level vs full rel {rel:.2e} over {count} pairs"),
    )
}

fn criterion_10() -> Outcome {
    let mut worst: f64 = 0.0;
    for a in CELLS_A {
        for m in CELLS_M {
            let g = Geometry::new(a).unwrap();
            let small = OperatorSet::new(g, m, 60).unwrap();
            let large = OperatorSet::new(g, m, 120).unwrap();
            for x in [0.0, 1.0, 5.0] {
                let (_, p) = level_table(&small, cur(x), 11).unwrap();
                let (_, q) = level_table(&large, cur(x), 11).unwrap();
                for (e, f) in p.energies.iter().zip(&q.energies) {
                    worst = worst.max((e - f).abs());
                }
            }
        }
    }
    outcome(worst <= 1e-9, format!("9 cells x i in {{0,1,5}}, max drift {worst:.2e}"))
}

fn report(index: usize, name: &str, run: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = run();
    println!(
        "[{}] {index:>2}. {name}: {} ({:.2} s)",
        if o.passed { "PASS" } else { "FAIL" },
        o.detail,
        start.elapsed().as_secs_f64()
    );
    o.passed
}

fn main() {
    // `cargo test -- --list` and name filters come through as arguments.
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut all = true;
    all &= report(1, "integral oracle suite", criterion_1);
    all &= report(2, "element oracle suite", criterion_2);
    all &= report(3, "zero-current dipole", criterion_3);
    all &= report(4, "splitting law", criterion_4);
    all &= report(5, "quantization", criterion_5);
    all &= report(6, "linear energy-dipole relation", criterion_6);
    let (result, elapsed) = full_sweep();
    all &= report(7, "periodicity", || criterion_7(&result, elapsed));
    all &= report(8, "universal slope and differences", || criterion_8(&result));
    all &= report(9, "two-level model fidelity", criterion_9);
    all &= report(10, "truncation convergence", criterion_10);
    if !all {
        eprintln!("acceptance: some criteria failed");
        std::process::exit(1);
    }
}
