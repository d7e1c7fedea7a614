use std::io::Read;
use std::path::{Path, PathBuf};

use chemstack_core::sim::{replay, run_experiment, Experiment, Scenario};
use rayon::prelude::*;

use crate::analysis::{analyze, load_network, write_curve};
use crate::config::load_scenario;
use crate::output::{self, one_line};
use crate::Error;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub scenario: PathBuf,
    pub seed: u64,
    pub out: PathBuf,
    pub generations: Option<usize>,
    /// Run `i` uses seed `seed + i`.
    pub runs: usize,
}

fn scenario_with(path: &Path, generations: Option<usize>) -> Result<Scenario, Error> {
    let mut s = load_scenario(path)?;
    if let Some(g) = generations {
        s.evolution.generations = g;
        s.validate()?;
    }
    Ok(s)
}

fn summary(i: usize, seed: u64, e: &Experiment) -> String {
    let last = e.best_curve().last().copied().unwrap_or(0.0);
    let path = e.final_best().map(|r| r.path.as_str()).unwrap_or("-");
    format!("run {i} seed {seed} final_best {last} path {path}")
}

/// `run`: evolutionary experiments. One run writes straight into `out`;
/// several write `out/run-NNN/` each plus `out/mean_best.csv`.
pub fn run(opts: &RunOptions) -> Result<Vec<String>, Error> {
    let s = scenario_with(&opts.scenario, opts.generations)?;
    if opts.runs == 0 {
        return Err(Error::Config("--runs must be at least 1".into()));
    }
    output::create_dir(&opts.out)?;
    if opts.runs == 1 {
        let e = run_experiment(&s, opts.seed)?;
        output::write_experiment(&opts.out, &e)?;
        return Ok(vec![summary(0, opts.seed, &e)]);
    }
    let results: Vec<Result<(String, Vec<f64>, Option<Vec<f64>>), Error>> = (0..opts.runs)
        .into_par_iter()
        .map(|i| {
            let seed = opts.seed.wrapping_add(i as u64);
            let e = run_experiment(&s, seed)?;
            output::write_experiment(&opts.out.join(format!("run-{i:03}")), &e)?;
            Ok((summary(i, seed, &e), e.best_curve(), e.normalized_curve(&s).ok()))
        })
        .collect();
    let mut lines = Vec::with_capacity(opts.runs);
    let mut curves = Vec::with_capacity(opts.runs);
    let mut normalized = Vec::with_capacity(opts.runs);
    for r in results {
        let (line, curve, norm) = r?;
        lines.push(line);
        curves.push(curve);
        normalized.push(norm);
    }
    let normalized: Option<Vec<Vec<f64>>> = normalized.into_iter().collect();
    output::write_mean_curve(&opts.out.join(output::MEAN_BEST_CSV), &curves, normalized.as_deref())?;
    Ok(lines)
}

#[derive(Debug, Clone)]
pub struct ReplayOptions {
    pub scenario: PathBuf,
    /// Blueprint text file; `-` reads stdin.
    pub blueprint: PathBuf,
    pub seed: u64,
    pub out: PathBuf,
}

/// Reads blueprint text. Chromosomes may be separated by newlines or `;`,
/// so `fitness.csv` cells paste back unchanged.
pub fn read_blueprint(path: &Path) -> Result<String, Error> {
    let text = if path == Path::new("-") {
        let mut t = String::new();
        std::io::stdin().read_to_string(&mut t).map_err(|e| Error::Runtime(format!("stdin: {e}")))?;
        t
    } else {
        std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?
    };
    Ok(text.replace(';', "\n"))
}

/// `replay`: one trial of a fixed blueprint; writes `rates.csv`.
pub fn replay_blueprint(opts: &ReplayOptions) -> Result<Vec<String>, Error> {
    let s = load_scenario(&opts.scenario)?;
    let layout = s.layout()?;
    let text = read_blueprint(&opts.blueprint)?;
    let genome = layout.parse(&text).map_err(|e| Error::Config(format!("blueprint: {e}")))?;
    let rec = replay(&s, &genome, opts.seed)?;
    output::create_dir(&opts.out)?;
    output::write_rates(&opts.out.join(output::RATES_CSV), [&rec])?;
    let mut lines = vec![format!("blueprint {}", one_line(&rec.blueprint))];
    match &rec.invalid {
        Some(code) => lines.push(format!("invalid {code}")),
        None => {
            lines.push(format!("path {}", rec.path));
            lines.push(format!("duration {} settle {} extended {}", rec.duration, rec.settle, rec.extended));
            if let Some(r) = rec.mean_phy_rate() {
                lines.push(format!("mean_phy_rate {r}"));
            }
            lines.push(format!("delivery_ratio {}", rec.delivery_ratio()));
            lines.push(format!("mean_delay {}", rec.mean_delay));
        }
    }
    lines.push(format!("fitness {}", rec.fitness));
    Ok(lines)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub file: PathBuf,
    pub inflows: Vec<(String, f64)>,
    pub tolerance: f64,
    pub format: Format,
    /// Where `mm_curve.csv` goes; `None` skips the curve.
    pub out: Option<PathBuf>,
    pub curve: (f64, f64, usize),
}

pub const MM_CURVE_CSV: &str = "mm_curve.csv";

/// `analyze` and `derive-odes`: the report text (or JSON), and the
/// saturation curve when `out` is set.
pub fn analyze_file(opts: &AnalyzeOptions) -> Result<String, Error> {
    let parsed = load_network(&opts.file)?;
    let a = analyze(&parsed, &opts.inflows, opts.tolerance)?;
    let mut report = match opts.format {
        Format::Text => a.to_text(),
        Format::Json => {
            serde_json::to_string_pretty(&a.to_json()).map_err(|e| Error::Runtime(e.to_string()))? + "\n"
        }
    };
    if let Some(dir) = &opts.out {
        let (lo, hi, n) = opts.curve;
        let curve = a.saturation_curve(lo, hi, n)?;
        output::create_dir(dir)?;
        let path = dir.join(MM_CURVE_CSV);
        write_curve(&path, &curve)?;
        if opts.format == Format::Text {
            report.push_str(&format!("\nsaturation curve ({} points) written to {}\n", curve.len(), path.display()));
        }
    }
    Ok(report)
}

/// Parses `name=value`.
pub fn parse_inflow(s: &str) -> Result<(String, f64), String> {
    let (n, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, found `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("`{v}` is not a number"))?;
    Ok((n.trim().to_string(), v))
}
