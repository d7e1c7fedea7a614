//! Artifact files of runs and replays.
//!
//! | file | columns |
//! |------|---------|
//! | `fitness.csv` | `generation, genome, fitness, path, blueprint` |
//! | `best.csv` | `generation, best_fitness, best_genome` |
//! | `rates.csv` | `generation, genome, time, app_rate, phy_rate` |
//! | `mean_best.csv` | `generation, runs, mean_best, std_best, mean_normalized` |
//!
//! Rates are bytes per second over 1 s bins; `time` is the bin start.
//! Blueprints in CSV cells use `; ` between chromosomes. `path` lists the
//! modules from the application down, `>`-separated, and is `invalid:<code>`
//! for blueprints that do not compose.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use chemstack_core::sim::Experiment;
use chemstack_core::stack::TrialRecord;
use serde::Serialize;

use crate::Error;

pub const FITNESS_CSV: &str = "fitness.csv";
pub const BEST_CSV: &str = "best.csv";
pub const RATES_CSV: &str = "rates.csv";
pub const BLUEPRINTS_LOG: &str = "blueprints.log";
pub const MEAN_BEST_CSV: &str = "mean_best.csv";

pub fn one_line(blueprint: &str) -> String {
    blueprint.trim_end().replace('\n', "; ")
}

fn path_of(r: &TrialRecord) -> String {
    match &r.invalid {
        Some(code) => format!("invalid:{code}"),
        None => r.path.clone(),
    }
}

#[derive(Serialize)]
struct FitnessRow<'a> {
    generation: usize,
    genome: usize,
    fitness: f64,
    path: String,
    blueprint: &'a str,
}

#[derive(Serialize)]
struct BestRow {
    generation: usize,
    best_fitness: f64,
    best_genome: usize,
}

#[derive(Serialize)]
struct RateRow {
    generation: usize,
    genome: usize,
    time: usize,
    app_rate: f64,
    phy_rate: f64,
}

#[derive(Serialize)]
struct MeanRow {
    generation: usize,
    runs: usize,
    mean_best: f64,
    std_best: f64,
    mean_normalized: Option<f64>,
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::Runtime(format!("{}: {e}", path.display()))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Runtime(format!("{}: {e}", path.display()))
}

fn writer(path: &Path) -> Result<csv::Writer<File>, Error> {
    csv::Writer::from_path(path).map_err(csv_err(path))
}

pub fn create_dir(dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(io(dir))
}

pub fn write_rates<'a>(path: &Path, records: impl IntoIterator<Item = &'a TrialRecord>) -> Result<(), Error> {
    let mut w = writer(path)?;
    for r in records {
        for (time, (app, phy)) in r.app_rate.iter().zip(&r.phy_rate).enumerate() {
            w.serialize(RateRow { generation: r.generation, genome: r.index, time, app_rate: *app, phy_rate: *phy })
                .map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(io(path))
}

/// Writes `fitness.csv`, `best.csv`, `rates.csv` and `blueprints.log` into
/// `dir`.
pub fn write_experiment(dir: &Path, exp: &Experiment) -> Result<(), Error> {
    create_dir(dir)?;

    let path = dir.join(FITNESS_CSV);
    let mut w = writer(&path)?;
    for r in &exp.records {
        let blueprint = one_line(&r.blueprint);
        w.serialize(FitnessRow {
            generation: r.generation,
            genome: r.index,
            fitness: r.fitness,
            path: path_of(r),
            blueprint: &blueprint,
        })
        .map_err(csv_err(&path))?;
    }
    w.flush().map_err(io(&path))?;

    let path = dir.join(BEST_CSV);
    let mut w = writer(&path)?;
    for (g, h) in exp.history.iter().enumerate() {
        w.serialize(BestRow { generation: g + 1, best_fitness: h.best_fitness(), best_genome: h.best })
            .map_err(csv_err(&path))?;
    }
    w.flush().map_err(io(&path))?;

    write_rates(&dir.join(RATES_CSV), &exp.records)?;

    let path = dir.join(BLUEPRINTS_LOG);
    let mut log = BufWriter::new(File::create(&path).map_err(io(&path))?);
    for r in &exp.records {
        writeln!(
            log,
            "# generation {} genome {} fitness {} path {}",
            r.generation,
            r.index,
            r.fitness,
            path_of(r)
        )
        .and_then(|_| writeln!(log, "{}", r.blueprint.trim_end()))
        .and_then(|_| writeln!(log))
        .map_err(io(&path))?;
    }
    log.flush().map_err(io(&path))
}

/// Per-generation mean and population standard deviation of the best
/// fitness over runs, with the mean of the normalized curves when given.
pub fn write_mean_curve(path: &Path, curves: &[Vec<f64>], normalized: Option<&[Vec<f64>]>) -> Result<(), Error> {
    let mut w = writer(path)?;
    let generations = curves.iter().map(Vec::len).min().unwrap_or(0);
    let n = curves.len() as f64;
    for g in 0..generations {
        let mean = curves.iter().map(|c| c[g]).sum::<f64>() / n;
        let var = curves.iter().map(|c| (c[g] - mean).powi(2)).sum::<f64>() / n;
        let mean_normalized = normalized.map(|ns| ns.iter().map(|c| c[g]).sum::<f64>() / ns.len() as f64);
        w.serialize(MeanRow { generation: g + 1, runs: curves.len(), mean_best: mean, std_best: var.sqrt(), mean_normalized })
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(io(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blueprint_cells_are_single_line() {
        assert_eq!(one_line("pubsub to=0\ncrc present=1\n"), "pubsub to=0; crc present=1");
    }

    #[test]
    fn mean_curve_columns() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        write_mean_curve(&p, &[vec![0.5, 1.0], vec![1.0, 1.0]], Some(&[vec![0.5, 1.0], vec![1.0, 1.0]])).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(
            text,
            "generation,runs,mean_best,std_best,mean_normalized\n1,2,0.75,0.25,0.75\n2,2,1.0,0.0,1.0\n"
        );
    }
}
