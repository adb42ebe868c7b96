//! Current sweeps: configuration, the parallel run, period and slope
//! extraction, CSV output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Current, Geometry, DEFAULT_L_OVER_R};
use crate::operators::OperatorSet;
use crate::spectral::level_table;

/// Uniform grid `lo:hi:steps` with `steps` intervals (`steps + 1` points).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, steps: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(Error::InvalidParameter(format!("grid needs hi > lo, got {lo}:{hi}")));
        }
        if steps < 2 {
            return Err(Error::InvalidParameter(format!("grid needs steps >= 2, got {steps}")));
        }
        Ok(Grid { lo, hi, steps })
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / self.steps as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        if k == self.steps {
            self.hi
        } else {
            self.lo + k as f64 * self.step()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.point(k)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub a_list: Vec<f64>,
    pub m_list: Vec<i64>,
    pub i_grid: Grid,
    pub n_max: usize,
    pub levels: usize,
    pub l_over_r: f64,
    pub out_dir: PathBuf,
    /// Ceiling for automatic grid extension.
    pub i_max: f64,
    /// Amount added to `hi` per extension round.
    pub extend_by: f64,
    /// Periods the mirrored series must span before the period is trusted.
    pub min_periods: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            a_list: vec![2.0],
            m_list: vec![0],
            i_grid: Grid {
                lo: 0.0,
                hi: 10.0,
                steps: 1000,
            },
            n_max: 60,
            levels: 11,
            l_over_r: DEFAULT_L_OVER_R,
            out_dir: PathBuf::from("sweep_out"),
            i_max: 100.0,
            extend_by: 20.0,
            min_periods: 2.5,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.a_list.is_empty() || self.m_list.is_empty() {
            return bad("a and m lists must be non-empty".into());
        }
        for &a in &self.a_list {
            Geometry::with_wire(a, self.l_over_r)?;
        }
        Grid::new(self.i_grid.lo, self.i_grid.hi, self.i_grid.steps)?;
        if self.n_max == 0 {
            return bad("n_max must be positive".into());
        }
        if self.levels == 0 || self.levels > 2 * self.n_max + 1 {
            return bad(format!("levels must be in 1..={}, got {}", 2 * self.n_max + 1, self.levels));
        }
        if !(self.extend_by > 0.0 && self.min_periods > 0.0) {
            return bad("extend_by and min_periods must be positive".into());
        }
        Ok(())
    }
}

const KEYS: &[&str] = &["a", "m", "i", "n_max", "levels", "l_over_r", "out", "i_max", "extend_by", "min_periods"];

fn parse_list<T: std::str::FromStr>(value: &str, line: usize, key: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|s| {
            s.trim().parse::<T>().map_err(|_| Error::Config {
                line,
                message: format!("`{key}`: cannot parse `{}`", s.trim()),
            })
        })
        .collect()
}

fn parse_one<T: std::str::FromStr>(value: &str, line: usize, key: &str) -> Result<T> {
    value.trim().parse::<T>().map_err(|_| Error::Config {
        line,
        message: format!("`{key}`: cannot parse `{}`", value.trim()),
    })
}

/// Parses the `key = value` format. `#` starts a comment; lists are comma
/// separated and the current grid is `i = lo:hi:steps`.
pub fn parse_config_str(text: &str) -> Result<SweepConfig> {
    let mut cfg = SweepConfig::default();
    let mut seen: Vec<&str> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or(Error::Config {
            line,
            message: format!("expected `key = value`, got `{body}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        let known = KEYS.iter().find(|k| **k == key).ok_or(Error::Config {
            line,
            message: format!("unknown key `{key}` (known: {})", KEYS.join(", ")),
        })?;
        if seen.contains(known) {
            return Err(Error::Config {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
        seen.push(known);
        let fail = |message: String| Error::Config { line, message };
        match *known {
            "a" => {
                cfg.a_list = parse_list(value, line, key)?;
                for &a in &cfg.a_list {
                    if a.is_nan() || a <= 1.0 {
                        return Err(fail(format!("`a` must exceed 1, got {a}")));
                    }
                }
            }
            "m" => cfg.m_list = parse_list(value, line, key)?,
            "i" => {
                let parts: Vec<&str> = value.split(':').collect();
                if parts.len() != 3 {
                    return Err(fail(format!("`i` must be lo:hi:steps, got `{value}`")));
                }
                let lo: f64 = parse_one(parts[0], line, key)?;
                let hi: f64 = parse_one(parts[1], line, key)?;
                let steps: usize = parse_one(parts[2], line, key)?;
                if hi <= lo {
                    return Err(fail(format!("`i` range needs hi > lo, got {lo}:{hi}")));
                }
                if steps < 2 {
                    return Err(fail(format!("`i` range needs steps >= 2, got {steps}")));
                }
                cfg.i_grid = Grid { lo, hi, steps };
            }
            "n_max" => cfg.n_max = parse_one(value, line, key)?,
            "levels" => cfg.levels = parse_one(value, line, key)?,
            "l_over_r" => cfg.l_over_r = parse_one(value, line, key)?,
            "out" => cfg.out_dir = PathBuf::from(value),
            "i_max" => cfg.i_max = parse_one(value, line, key)?,
            "extend_by" => cfg.extend_by = parse_one(value, line, key)?,
            "min_periods" => cfg.min_periods = parse_one(value, line, key)?,
            _ => unreachable!(),
        }
    }
    cfg.validate().map_err(|e| Error::Config {
        line: 0,
        message: e.to_string(),
    })?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<SweepConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text)
}

/// Canonical text form; parses back to an equal config.
pub fn dump_config(cfg: &SweepConfig) -> String {
    let join = |v: Vec<String>| v.join(", ");
    let mut s = String::new();
    let _ = writeln!(s, "a = {}", join(cfg.a_list.iter().map(|a| a.to_string()).collect()));
    let _ = writeln!(s, "m = {}", join(cfg.m_list.iter().map(|m| m.to_string()).collect()));
    let _ = writeln!(s, "i = {}:{}:{}", cfg.i_grid.lo, cfg.i_grid.hi, cfg.i_grid.steps);
    let _ = writeln!(s, "n_max = {}", cfg.n_max);
    let _ = writeln!(s, "levels = {}", cfg.levels);
    let _ = writeln!(s, "l_over_r = {}", cfg.l_over_r);
    let _ = writeln!(s, "out = {}", cfg.out_dir.display());
    let _ = writeln!(s, "i_max = {}", cfg.i_max);
    let _ = writeln!(s, "extend_by = {}", cfg.extend_by);
    let _ = writeln!(s, "min_periods = {}", cfg.min_periods);
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub i: f64,
    pub energies: Vec<f64>,
    pub t3: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub i_start: f64,
    pub i_end: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub segments: Vec<Segment>,
    /// Widest region around a breakpoint where the data follow neither
    /// neighbouring line.
    pub crossover_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSummary {
    pub eta: usize,
    pub period: std::result::Result<f64, String>,
    pub segmentation: std::result::Result<Segmentation, String>,
}

impl LevelSummary {
    /// Mean `|slope|·I_s` over complete segments, `I_s` half the period.
    pub fn drop_per_half_period(&self) -> Option<f64> {
        let (p, s) = (self.period.as_ref().ok()?, self.segmentation.as_ref().ok()?);
        if s.segments.is_empty() {
            return None;
        }
        let mean = s.segments.iter().map(|g| g.slope.abs()).sum::<f64>() / s.segments.len() as f64;
        Some(mean * p / 2.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub a: f64,
    pub m: i64,
    pub grid: Grid,
    /// Set when the grid had to grow past the configured `hi`.
    pub extended: bool,
    pub rows: Vec<Row>,
    pub levels: Vec<LevelSummary>,
    pub error: Option<String>,
}

impl CellResult {
    pub fn series_t3(&self, eta: usize) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.i, r.t3[eta])).collect()
    }

    pub fn series_energy(&self, eta: usize) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.i, r.energies[eta])).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub levels: usize,
    pub cells: Vec<CellResult>,
}

fn compute_rows(set: &OperatorSet, points: &[f64], levels: usize) -> Result<Vec<Row>> {
    points
        .par_iter()
        .map(|&i| {
            let (_, t) = level_table(set, Current::new(i)?, levels)?;
            Ok(Row {
                i,
                energies: t.energies,
                t3: t.t3,
            })
        })
        .collect()
}

/// Odd (`t3`) or even (`energy`) continuation of a series starting at `i = 0`
/// to negative currents, which the `i → −i` symmetry makes exact.
pub fn mirror(series: &[(f64, f64)], odd: bool) -> Vec<(f64, f64)> {
    if series.first().map(|p| p.0) != Some(0.0) {
        return series.to_vec();
    }
    let sign = if odd { -1.0 } else { 1.0 };
    let mut out: Vec<(f64, f64)> = series[1..].iter().rev().map(|&(i, v)| (-i, sign * v)).collect();
    out.extend_from_slice(series);
    out
}

fn period_of(rows: &[Row], eta: usize) -> Result<f64> {
    let s: Vec<(f64, f64)> = rows.iter().map(|r| (r.i, r.t3[eta])).collect();
    detect_period(&mirror(&s, true))
}

fn covered(grid: &Grid, period: f64, min_periods: f64) -> bool {
    let span = if grid.lo == 0.0 { 2.0 * grid.hi } else { grid.hi - grid.lo };
    span >= min_periods * period
}

fn run_cell(cfg: &SweepConfig, a: f64, m: i64) -> Result<CellResult> {
    let geometry = Geometry::with_wire(a, cfg.l_over_r)?;
    let set = OperatorSet::new(geometry, m, cfg.n_max)?;
    let mut grid = cfg.i_grid;
    let mut rows = compute_rows(&set, &grid.points(), cfg.levels)?;
    let h = grid.step();
    let mut extended = false;
    loop {
        // The highest recorded level decides coverage; it has the sharpest sawtooth.
        let probe = period_of(&rows, cfg.levels - 1);
        let enough = matches!(probe, Ok(p) if covered(&grid, p, cfg.min_periods));
        if enough || grid.hi + 0.5 * h >= cfg.i_max {
            break;
        }
        let new_hi = (grid.hi + cfg.extend_by).min(cfg.i_max);
        let extra = ((new_hi - grid.hi) / h).round() as usize;
        if extra == 0 {
            break;
        }
        let next = Grid {
            lo: grid.lo,
            hi: grid.lo + (grid.steps + extra) as f64 * h,
            steps: grid.steps + extra,
        };
        let points: Vec<f64> = (grid.steps + 1..=next.steps).map(|k| next.point(k)).collect();
        rows.extend(compute_rows(&set, &points, cfg.levels)?);
        grid = next;
        extended = true;
    }
    let levels = (0..cfg.levels)
        .map(|eta| {
            let series: Vec<(f64, f64)> = rows.iter().map(|r| (r.i, r.t3[eta])).collect();
            LevelSummary {
                eta,
                period: period_of(&rows, eta)
                    .and_then(|p| {
                        if covered(&grid, p, cfg.min_periods) {
                            Ok(p)
                        } else {
                            Err(Error::NoPeriod(format!("period {p} not covered {} times", cfg.min_periods)))
                        }
                    })
                    .map_err(|e| e.to_string()),
                segmentation: fit_linear_segments(&series).map_err(|e| e.to_string()),
            }
        })
        .collect();
    Ok(CellResult {
        a,
        m,
        grid,
        extended,
        rows,
        levels,
        error: None,
    })
}

/// Runs every `(a, m)` cell. Grid points of a cell are spread over `jobs`
/// workers (all cores when `None`); a failing cell records its error and the
/// others continue.
pub fn run_sweep(cfg: &SweepConfig, jobs: Option<usize>) -> Result<SweepResult> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let cells = pool.install(|| {
        let mut cells = Vec::new();
        for &a in &cfg.a_list {
            for &m in &cfg.m_list {
                cells.push(run_cell(cfg, a, m).unwrap_or_else(|e| CellResult {
                    a,
                    m,
                    grid: cfg.i_grid,
                    extended: false,
                    rows: Vec::new(),
                    levels: Vec::new(),
                    error: Some(e.to_string()),
                }));
            }
        }
        cells
    });
    Ok(SweepResult {
        levels: cfg.levels,
        cells,
    })
}

fn uniform_step(series: &[(f64, f64)]) -> Result<f64> {
    if series.len() < 8 {
        return Err(Error::NoPeriod(format!("series too short ({} points)", series.len())));
    }
    let h = (series[series.len() - 1].0 - series[0].0) / (series.len() - 1) as f64;
    if h.is_nan() || h <= 0.0 || series.windows(2).any(|w| ((w[1].0 - w[0].0) - h).abs() > 1e-6 * h) {
        return Err(Error::NoPeriod("grid must be uniform and increasing".into()));
    }
    Ok(h)
}

/// Correlation a periodic series must reach at its period lag.
pub const PERIOD_CORRELATION: f64 = 0.8;

/// Period of a uniformly sampled series: the first autocorrelation peak
/// after the correlation turns negative, refined by a parabola through the
/// peak and its neighbours. Lags are searched up to `len/2`.
pub fn detect_period(series: &[(f64, f64)]) -> Result<f64> {
    let h = uniform_step(series)?;
    let n = series.len();
    let mean = series.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let x: Vec<f64> = series.iter().map(|p| p.1 - mean).collect();
    let scale = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if scale <= 1e-12 * mean.abs().max(1.0) {
        return Err(Error::NoPeriod("series is flat".into()));
    }
    let corr = |k: usize| -> f64 {
        let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
        for j in 0..n - k {
            xy += x[j] * x[j + k];
            xx += x[j] * x[j];
            yy += x[j + k] * x[j + k];
        }
        if xx == 0.0 || yy == 0.0 {
            0.0
        } else {
            xy / (xx * yy).sqrt()
        }
    };
    let max_lag = n / 2;
    let r: Vec<f64> = (0..=max_lag + 1).map(corr).collect();
    let Some(start) = (1..=max_lag).find(|&k| r[k] < 0.0) else {
        return Err(Error::NoPeriod("autocorrelation never turns negative".into()));
    };
    let peak = (start..=max_lag)
        .find(|&k| r[k] >= PERIOD_CORRELATION && r[k] >= r[k - 1] && r[k] >= r[k + 1])
        .ok_or_else(|| Error::NoPeriod("no autocorrelation peak within half the series".into()))?;
    let (y0, y1, y2) = (r[peak - 1], r[peak], r[peak + 1]);
    let denom = y0 - 2.0 * y1 + y2;
    let shift = if denom != 0.0 { 0.5 * (y0 - y2) / denom } else { 0.0 };
    Ok((peak as f64 + shift.clamp(-0.5, 0.5)) * h)
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Fraction trimmed from each end of a segment before the slope fit.
const TRIM: f64 = 0.2;
/// Runs of same-sign derivative shorter than this many steps are crossovers.
const MIN_RUN: usize = 8;
/// Steps steeper than this multiple of the median step are jumps.
const STEEP: f64 = 20.0;

/// Splits a series into runs where its derivative keeps one sign and stays
/// moderate. Long runs are the linear segments; what lies between them (sign
/// reversals, steep jumps in either direction) are crossovers, and the widest
/// one is reported. Each complete
/// segment gets a least-squares slope over its central part; runs touching
/// the ends of the series are dropped.
pub fn fit_linear_segments(series: &[(f64, f64)]) -> Result<Segmentation> {
    let h = uniform_step(series).map_err(|e| Error::Segmentation(e.to_string()))?;
    let d: Vec<f64> = series.windows(2).map(|w| (w[1].1 - w[0].1) / h).collect();
    let mut mags: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    mags.sort_by(f64::total_cmp);
    let typical = mags[mags.len() / 2];
    if typical == 0.0 {
        return Err(Error::Segmentation("series is flat".into()));
    }
    // Negligible steps inherit the class of the previous one; steep steps
    // get a class of their own so they never join a segment.
    let mut signs = Vec::with_capacity(d.len());
    let mut current = 0.0;
    for &v in &d {
        if v.abs() > STEEP * typical {
            current = 2.0 * v.signum();
        } else if v.abs() >= 1e-3 * typical {
            current = v.signum();
        }
        signs.push(current);
    }
    // Runs as half-open step ranges [start, end).
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for k in 1..=signs.len() {
        if k == signs.len() || signs[k] != signs[start] {
            runs.push((start, k));
            start = k;
        }
    }
    let long: Vec<(usize, usize)> = runs
        .iter()
        .copied()
        .filter(|r| r.1 - r.0 >= MIN_RUN && signs[r.0].abs() == 1.0)
        .collect();
    let last_step = d.len();
    let mut segments = Vec::new();
    for &(s, e) in &long {
        if s == 0 || e == last_step {
            continue;
        }
        let len = e - s;
        let cut = (TRIM * len as f64).round() as usize;
        let pts = &series[s + cut..=e - cut];
        segments.push(Segment {
            i_start: series[s].0,
            i_end: series[e].0,
            slope: least_squares_slope(pts),
        });
    }
    if segments.is_empty() {
        return Err(Error::Segmentation(format!(
            "no complete linear segment among {} derivative runs",
            runs.len()
        )));
    }
    let crossover_width = long
        .windows(2)
        .map(|w| series[w[1].0].0 - series[w[0].1].0)
        .fold(0.0, f64::max);
    Ok(Segmentation {
        segments,
        crossover_width,
    })
}

/// `x` with 12 significant digits.
pub fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}

fn a_tag(a: f64) -> String {
    a.to_string()
}

pub fn cell_file_name(a: f64, m: i64) -> String {
    format!("sweep_a{}_m{m}.csv", a_tag(a))
}

pub fn cell_csv(cell: &CellResult, levels: usize) -> String {
    let mut s = String::from("i");
    for k in 0..levels {
        let _ = write!(s, ",E_{k}");
    }
    for k in 0..levels {
        let _ = write!(s, ",t3_{k}");
    }
    s.push('\n');
    for r in &cell.rows {
        s.push_str(&fmt12(r.i));
        for v in r.energies.iter().chain(&r.t3) {
            s.push(',');
            s.push_str(&fmt12(*v));
        }
        s.push('\n');
    }
    s
}

pub const SUMMARY_HEADER: &str = "a,m,i_hi,extended,eta,period,segments,drop_per_half_period,crossover_width,diagnostic";

pub fn summary_csv(result: &SweepResult) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for c in &result.cells {
        if let Some(err) = &c.error {
            let _ = writeln!(s, "{},{},{},{},,,,,,{}", c.a, c.m, fmt12(c.grid.hi), c.extended, sanitize(err));
            continue;
        }
        for l in &c.levels {
            let period = l.period.as_ref().map(|p| fmt12(*p)).unwrap_or_default();
            let (count, width) = match &l.segmentation {
                Ok(seg) => (seg.segments.len().to_string(), fmt12(seg.crossover_width)),
                Err(_) => (String::new(), String::new()),
            };
            let drop = l.drop_per_half_period().map(fmt12).unwrap_or_default();
            let mut diag: Vec<String> = Vec::new();
            if let Err(e) = &l.period {
                diag.push(e.clone());
            }
            if let Err(e) = &l.segmentation {
                diag.push(e.clone());
            }
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                c.a,
                c.m,
                fmt12(c.grid.hi),
                c.extended,
                l.eta,
                period,
                count,
                drop,
                width,
                sanitize(&diag.join("; "))
            );
        }
    }
    s
}

fn sanitize(s: &str) -> String {
    s.replace([',', '\n'], " ")
}

/// Writes one CSV per cell and `summary.csv`; returns the paths written.
pub fn export_csv(result: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for c in &result.cells {
        let path = dir.join(cell_file_name(c.a, c.m));
        std::fs::write(&path, cell_csv(c, result.levels)).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    let path = dir.join("summary.csv");
    std::fs::write(&path, summary_csv(result)).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(written)
}
