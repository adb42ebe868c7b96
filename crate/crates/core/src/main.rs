use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use torus_dipole::analytics::{
    divergence_current, exact_k_coefficients, exact_two_level_params, k_coefficients, peak_current_and_ratio,
    two_level_solve, KCoefficients,
};
use torus_dipole::basis::BasisKind;
use torus_dipole::geometry::{Current, Geometry, DEFAULT_L_OVER_R};
use torus_dipole::integrals::{self, AspectRatio, DEFAULT_TAYLOR_ORDER};
use torus_dipole::operators::OperatorSet;
use torus_dipole::spectral::{coefficients, level_table};
use torus_dipole::sweep::{self, Grid};
use torus_dipole::{verify, Error};

#[derive(Parser)]
#[command(name = "torus-dipole", version, about = "Energy levels and toroidal dipole of a charged particle on a current-threaded torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum IntegralKind {
    #[value(name = "In")]
    In,
    #[value(name = "Iln")]
    Iln,
    /// Large-a series against quadrature.
    #[value(name = "Iln2")]
    Iln2,
    /// Imaginary part of K2.
    #[value(name = "K2")]
    K2,
}

#[derive(Clone, Copy, ValueEnum)]
enum BasisArg {
    Lambda,
    Parity,
}

#[derive(Clone, Copy, ValueEnum)]
enum OperatorArg {
    H,
    T3,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form integrals, optionally beside their quadrature values.
    Integrals {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        n_max: i64,
        #[arg(long, value_enum, default_value = "In")]
        kind: IntegralKind,
        #[arg(long)]
        oracle: bool,
    },
    /// Dump the Hamiltonian or dipole matrix as `row,col,re,im`.
    Matrix {
        #[arg(long)]
        a: f64,
        #[arg(long, default_value_t = 0)]
        m: i64,
        #[arg(long)]
        n_max: usize,
        #[arg(long, default_value_t = 0.0)]
        i: f64,
        #[arg(long, value_enum, default_value = "lambda")]
        basis: BasisArg,
        #[arg(long, value_enum, default_value = "h")]
        operator: OperatorArg,
        #[arg(long = "L-over-R", default_value_t = DEFAULT_L_OVER_R)]
        l_over_r: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lowest levels and their dipole expectations at one current.
    Spectrum {
        #[arg(long)]
        a: f64,
        #[arg(long, default_value_t = 0)]
        m: i64,
        #[arg(long, default_value_t = 0.0)]
        i: f64,
        #[arg(long, default_value_t = 60)]
        n_max: usize,
        #[arg(long, default_value_t = 11)]
        levels: usize,
        #[arg(long = "L-over-R", default_value_t = DEFAULT_L_OVER_R)]
        l_over_r: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the leading basis amplitudes of each level here.
        #[arg(long)]
        coeffs: Option<PathBuf>,
        #[arg(long, default_value_t = 6)]
        top: usize,
    },
    /// Two-level model of the pair `±n` over a current range.
    Perturbation {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        n: i64,
        #[arg(long, default_value_t = 0)]
        m: i64,
        #[arg(long, default_value = "0:1:100")]
        i_range: String,
        #[arg(long = "L-over-R", default_value_t = DEFAULT_L_OVER_R)]
        l_over_r: f64,
    },
    /// Sweep the current over a grid of (a, m) cells and write CSV files.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
        /// Print the parsed configuration in canonical form and exit.
        #[arg(long)]
        dump_config: bool,
    },
    /// Run the self-check suite.
    Verify,
}

enum Failure {
    Usage(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::AspectRatio(_) | Error::InvalidParameter(_) | Error::IndexOutOfRange { .. } | Error::Config { .. } => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Check(other.to_string()),
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Check(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_integrals(a: f64, n_max: i64, kind: IntegralKind, oracle: bool) -> Result<(), Failure> {
    let a = AspectRatio::new(a)?;
    if n_max < 0 {
        return Err(Failure::Usage("--n-max must be non-negative".into()));
    }
    let mut s = String::from("n,closed_form,oracle,abs_diff\n");
    for n in -n_max..=n_max {
        let closed = match kind {
            IntegralKind::In => integrals::fourier_integral(a, n),
            IntegralKind::Iln => integrals::log_integral(a, n),
            IntegralKind::Iln2 => integrals::taylor_log2_integral(a, n, DEFAULT_TAYLOR_ORDER),
            IntegralKind::K2 => integrals::kernel_k2(n, a).im,
        };
        if oracle {
            let reference = match kind {
                IntegralKind::In => integrals::oracle::fourier_integral(a, n)?,
                IntegralKind::Iln => integrals::oracle::log_integral(a, n)?,
                IntegralKind::Iln2 => integrals::log2_integral(a, n)?,
                IntegralKind::K2 => integrals::oracle::kernel_k2(n, a)?.im,
            };
            let _ = writeln!(s, "{n},{closed:.17e},{reference:.17e},{:.3e}", (closed - reference).abs());
        } else {
            let _ = writeln!(s, "{n},{closed:.17e},,");
        }
    }
    if matches!(kind, IntegralKind::Iln2) && !integrals::in_taylor_regime(a) {
        eprintln!("warning: the large-a series is outside its regime for a = {}", a.get());
    }
    emit(&s, None)
}

#[allow(clippy::too_many_arguments)]
fn cmd_matrix(
    a: f64,
    m: i64,
    n_max: usize,
    i: f64,
    basis: BasisArg,
    operator: OperatorArg,
    l_over_r: f64,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let g = Geometry::with_wire(a, l_over_r)?;
    let cur = Current::new(i)?;
    let kind = match basis {
        BasisArg::Lambda => BasisKind::SignedLambda,
        BasisArg::Parity => BasisKind::Parity,
    };
    let set = OperatorSet::new(g, m, n_max)?;
    let (matrix, name) = match operator {
        OperatorArg::H => (set.hamiltonian(kind, cur)?, "h"),
        OperatorArg::T3 => (set.t3(kind, cur), "t3"),
    };
    let basis_name = match basis {
        BasisArg::Lambda => "lambda",
        BasisArg::Parity => "parity",
    };
    let mut s = format!("# a={a} m={m} n_max={n_max} i={i} basis={basis_name} operator={name} L_over_R={l_over_r}\nrow,col,re,im\n");
    let e = &matrix.entries;
    for r in 0..e.nrows() {
        for c in 0..e.ncols() {
            let z = e[(r, c)];
            let _ = writeln!(s, "{r},{c},{},{}", sweep::fmt12(z.re), sweep::fmt12(z.im));
        }
    }
    emit(&s, out.as_deref())
}

#[allow(clippy::too_many_arguments)]
fn cmd_spectrum(
    a: f64,
    m: i64,
    i: f64,
    n_max: usize,
    levels: usize,
    l_over_r: f64,
    out: Option<PathBuf>,
    coeffs: Option<PathBuf>,
    top: usize,
) -> Result<(), Failure> {
    let g = Geometry::with_wire(a, l_over_r)?;
    let set = OperatorSet::new(g, m, n_max)?;
    if levels == 0 || levels > set.dim() {
        return Err(Failure::Usage(format!("--levels must be in 1..={}", set.dim())));
    }
    let (spectrum, table) = level_table(&set, Current::new(i)?, levels)?;
    let mut s = String::from("eta,energy,t3\n");
    for (eta, (e, t)) in table.energies.iter().zip(&table.t3).enumerate() {
        let _ = writeln!(s, "{eta},{},{}", sweep::fmt12(*e), sweep::fmt12(*t));
    }
    emit(&s, out.as_deref())?;
    if let Some(path) = coeffs {
        let mut c = String::from("eta,n,re,im\n");
        for eta in 0..levels {
            for (n, z) in coefficients(&spectrum, eta, top)? {
                let _ = writeln!(c, "{eta},{n},{},{}", sweep::fmt12(z.re), sweep::fmt12(z.im));
            }
        }
        emit(&c, Some(&path))?;
    }
    Ok(())
}

fn parse_range(text: &str) -> Result<Grid, Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Failure::Usage(format!("--i-range must be lo:hi:steps, got `{text}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let steps: usize = parts[2].trim().parse().map_err(|_| bad())?;
    Ok(Grid::new(lo, hi, steps)?)
}

fn k_line(label: &str, k: &KCoefficients) -> String {
    let mut s = format!("# {label}: k1={},k2={},k3={}", sweep::fmt12(k.k1), sweep::fmt12(k.k2), sweep::fmt12(k.k3));
    if k.k3 < 0.0 {
        if let Ok(x) = divergence_current(k) {
            let _ = write!(s, ",x_d={}", sweep::fmt12(x));
        }
    } else if let Ok((x, r)) = peak_current_and_ratio(k) {
        let _ = write!(s, ",i_max={},ratio_max={}", sweep::fmt12(x), sweep::fmt12(r));
    }
    s.push('\n');
    s
}

fn cmd_perturbation(a: f64, n: i64, m: i64, range: &str, l_over_r: f64) -> Result<(), Failure> {
    let g = Geometry::with_wire(a, l_over_r)?;
    let grid = parse_range(range)?;
    let mut s = String::from("i,A_I,delta_I,eps_I,ratio,alpha_plus,alpha_minus,theta_plus,theta_minus\n");
    for x in grid.points() {
        let p = exact_two_level_params(&g, n, m, Current::new(x)?)?;
        let sol = two_level_solve(p.eps_i, p.delta_i);
        let cols = [x, p.a_i, p.delta_i, p.eps_i, p.ratio(), sol.alpha_plus, sol.alpha_minus, sol.theta_plus, sol.theta_minus];
        let row: Vec<String> = cols.iter().map(|v| sweep::fmt12(*v)).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s.push_str(&k_line("large-a", &k_coefficients(g.a, n, m, l_over_r)?));
    s.push_str(&k_line("exact", &exact_k_coefficients(&g, n, m)?));
    emit(&s, None)
}

fn cmd_sweep(config: &Path, out: Option<PathBuf>, jobs: Option<usize>, dump: bool) -> Result<(), Failure> {
    let mut cfg = sweep::parse_config(config)?;
    if let Some(dir) = out {
        cfg.out_dir = dir;
    }
    if dump {
        print!("{}", sweep::dump_config(&cfg));
        return Ok(());
    }
    if jobs == Some(0) {
        return Err(Failure::Usage("--jobs must be positive".into()));
    }
    let result = sweep::run_sweep(&cfg, jobs)?;
    let files = sweep::export_csv(&result, &cfg.out_dir)?;
    let mut failed = 0;
    for c in &result.cells {
        match &c.error {
            Some(e) => {
                failed += 1;
                eprintln!("a={} m={}: failed: {e}", c.a, c.m);
            }
            None if c.extended => eprintln!("a={} m={}: grid extended to i={}", c.a, c.m, c.grid.hi),
            None => {}
        }
    }
    eprintln!("wrote {} files to {}", files.len(), cfg.out_dir.display());
    if failed > 0 {
        return Err(Failure::Check(format!("{failed} cell(s) failed")));
    }
    Ok(())
}

fn cmd_verify() -> Result<(), Failure> {
    let checks = verify::run_all();
    for c in &checks {
        println!("{}", c.line());
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(Failure::Check(format!("{failed} of {} checks failed", checks.len())));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Integrals { a, n_max, kind, oracle } => cmd_integrals(a, n_max, kind, oracle),
        Command::Matrix {
            a,
            m,
            n_max,
            i,
            basis,
            operator,
            l_over_r,
            out,
        } => cmd_matrix(a, m, n_max, i, basis, operator, l_over_r, out),
        Command::Spectrum {
            a,
            m,
            i,
            n_max,
            levels,
            l_over_r,
            out,
            coeffs,
            top,
        } => cmd_spectrum(a, m, i, n_max, levels, l_over_r, out, coeffs, top),
        Command::Perturbation {
            a,
            n,
            m,
            i_range,
            l_over_r,
        } => cmd_perturbation(a, n, m, &i_range, l_over_r),
        Command::Sweep {
            config,
            out,
            jobs,
            dump_config,
        } => cmd_sweep(&config, out, jobs, dump_config),
        Command::Verify => cmd_verify(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Check(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
