//! Self-check suite behind the `verify` subcommand: closed forms against
//! quadrature, selection rules, the weak-current laws, the two-level model,
//! periodicity and truncation drift, at reduced sizes.

use nalgebra::Matrix2;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::analytics::{exact_two_level_params, two_level_solve};
use crate::error::Result;
use crate::geometry::{Current, Geometry};
use crate::integrals::{self, AspectRatio};
use crate::operators::{self, OperatorSet};
use crate::spectral::{level_split, level_table};
use crate::sweep::{detect_period, mirror, parse_config_str, run_sweep};

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn from(name: &'static str, outcome: Result<(bool, String)>) -> Self {
        match outcome {
            Ok((passed, detail)) => Check { name, passed, detail },
            Err(e) => Check {
                name,
                passed: false,
                detail: format!("error: {e}"),
            },
        }
    }

    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

const CELLS_A: [f64; 3] = [1.2, 2.0, 3.0];
const CELLS_M: [i64; 3] = [0, 1, 2];

fn integral_oracles() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for av in [1.2, 2.0, 3.0, 10.0] {
        let a = AspectRatio::new(av)?;
        for n in -12i64..=12 {
            worst = worst.max((integrals::fourier_integral(a, n) - integrals::oracle::fourier_integral(a, n)?).abs());
            worst = worst.max((integrals::log_integral(a, n) - integrals::oracle::log_integral(a, n)?).abs());
            worst = worst.max((integrals::kernel_k2(n, a) - integrals::oracle::kernel_k2(n, a)?).norm());
            for n2 in [-3, 0, 4] {
                worst = worst.max((integrals::kernel_k1(n2, n, a) - integrals::oracle::kernel_k1(n2, n, a)?).norm());
            }
        }
    }
    Ok((worst <= 1e-12, format!("max |closed - quadrature| = {worst:.2e}")))
}

fn element_oracles() -> Result<(bool, String)> {
    let mut rng = StdRng::seed_from_u64(0x7025);
    let mut worst: f64 = 0.0;
    let cases = 60;
    for _ in 0..cases {
        let av = rng.gen_range(1.1..6.0);
        let g = Geometry::with_wire(av, rng.gen_range(4.0..20.0))?;
        let m = rng.gen_range(-2i64..=2);
        let n1 = rng.gen_range(-6i64..=6);
        let n2 = rng.gen_range(-6i64..=6);
        let i = Current::new(rng.gen_range(-5.0..5.0))?;
        let h = operators::free_element(g.a, m, n1, n2) + operators::interaction_element(&g, n2, n2 - n1, i)?;
        let h_ref = operators::oracle::free_element(g.a, m, n1, n2)? + operators::oracle::interaction_element(&g, n1, n2, i)?;
        worst = worst.max((h - h_ref).norm());
        let t = operators::t3_free_element(g.a, n2, n2 - n1) + operators::t3_current_element(&g, n2 - n1, i);
        let t_ref = operators::oracle::t3_element(&g, n1, n2, i)?;
        worst = worst.max((t_ref - t).norm());
    }
    Ok((worst <= 1e-10, format!("{cases} random cases, max deviation {worst:.2e}")))
}

fn zero_current_dipole() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for &a in &CELLS_A {
        for &m in &CELLS_M {
            let set = OperatorSet::new(Geometry::new(a)?, m, 30)?;
            let (_, t) = level_table(&set, Current::new(0.0)?, 11)?;
            worst = t.t3.iter().fold(worst, |w, v| w.max(v.abs()));
        }
    }
    Ok((worst <= 1e-8, format!("max |<T3>(0)| = {worst:.2e}")))
}

/// Splitting, quantization and the energy-dipole relation for a=3, m=0.
fn weak_current_laws() -> Result<(bool, String)> {
    let g = Geometry::new(3.0)?;
    let set = OperatorSet::new(g, 0, 40)?;
    let (mut split, mut quant, mut linear) = (0.0f64, 0.0f64, 0.0f64);
    for x in [0.05, 0.1, 0.2] {
        let i = Current::new(x)?;
        let (spec, t) = level_table(&set, i, 9)?;
        for n in [2usize, 3] {
            let nf = n as f64;
            if !exact_two_level_params(&g, n as i64, 0, i)?.gated(10.0) {
                continue;
            }
            let de = level_split(&spec, n)?;
            split = split.max((de - nf * x).abs() / (nf * x));
            quant = quant.max((t.t3[2 * n] + 2.5 * nf).abs());
            quant = quant.max((t.t3[2 * n] + t.t3[2 * n - 1]).abs());
            linear = linear.max((de - 0.4 * x * t.t3[2 * n].abs()).abs() / de);
        }
    }
    let ok = split <= 0.05 && quant <= 0.1 && linear <= 0.05;
    Ok((
        ok,
        format!("split rel {split:.2e}, quantization {quant:.2e}, linear rel {linear:.2e}"),
    ))
}

fn two_level_model() -> Result<(bool, String)> {
    let mut rng = StdRng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let eps = rng.gen_range(-2.0..2.0);
        let delta = rng.gen_range(-2.0..2.0);
        let s = two_level_solve(eps, delta);
        let eig = Matrix2::new(1.0 + delta, eps, eps, 1.0 - delta).symmetric_eigenvalues();
        let (lo, hi) = (eig[0].min(eig[1]), eig[0].max(eig[1]));
        worst = worst.max((s.alpha_plus - hi).abs()).max((s.alpha_minus - lo).abs());
    }
    let g = Geometry::new(3.0)?;
    let set = OperatorSet::new(g, 0, 40)?;
    let mut rel: f64 = 0.0;
    for x in [0.05, 0.1, 0.2] {
        let i = Current::new(x)?;
        let (_, t) = level_table(&set, i, 9)?;
        for n in [2usize, 3] {
            let (lo, hi) = {
                let (p, q) = exact_two_level_params(&g, n as i64, 0, i)?.eigenvalues();
                (p.min(q), p.max(q))
            };
            rel = rel.max((lo - t.energies[2 * n - 1]).abs() / t.energies[2 * n - 1]);
            rel = rel.max((hi - t.energies[2 * n]).abs() / t.energies[2 * n]);
        }
    }
    Ok((
        worst <= 1e-12 && rel <= 0.01,
        format!("2x2 solve {worst:.2e}, two-level vs full rel {rel:.2e}"),
    ))
}

fn periodicity() -> Result<(bool, String)> {
    let cfg = parse_config_str("a = 1.2\nm = 0, 1, 2\ni = 0:12:600\nn_max = 30\nlevels = 11\ni_max = 12\n")?;
    let r = run_sweep(&cfg, None)?;
    let mut periods = Vec::new();
    for c in &r.cells {
        for eta in 1..11 {
            periods.push(detect_period(&mirror(&c.series_t3(eta), true))?);
        }
    }
    let (lo, hi) = periods.iter().fold((f64::MAX, f64::MIN), |(l, h), p| (l.min(*p), h.max(*p)));
    let step = cfg.i_grid.step();
    Ok((
        hi - lo <= 2.0 * step,
        format!("a=1.2: 2I_s in [{lo:.4}, {hi:.4}], spread {:.2} grid steps", (hi - lo) / step),
    ))
}

fn truncation() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for (a, m) in [(1.2, 0), (3.0, 2)] {
        let g = Geometry::new(a)?;
        let small = OperatorSet::new(g, m, 60)?;
        let large = OperatorSet::new(g, m, 120)?;
        for x in [0.0, 1.0, 5.0] {
            let i = Current::new(x)?;
            let (_, p) = level_table(&small, i, 11)?;
            let (_, q) = level_table(&large, i, 11)?;
            for (e, f) in p.energies.iter().zip(&q.energies) {
                worst = worst.max((e - f).abs());
            }
        }
    }
    Ok((worst <= 1e-9, format!("lowest 11 levels drift {worst:.2e} from n_max 60 to 120")))
}

/// Runs every check; the caller decides the exit status.
pub fn run_all() -> Vec<Check> {
    vec![
        Check::from("integral oracles", integral_oracles()),
        Check::from("element oracles", element_oracles()),
        Check::from("zero-current dipole", zero_current_dipole()),
        Check::from("splitting, quantization, energy-dipole relation", weak_current_laws()),
        Check::from("two-level model", two_level_model()),
        Check::from("periodicity", periodicity()),
        Check::from("truncation drift", truncation()),
    ]
}
