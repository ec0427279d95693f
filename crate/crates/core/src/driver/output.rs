use std::fs;
use std::path::Path;

use super::config::RunConfig;
use super::RunOutcome;
use crate::pareto::{Canonical, ObjectiveVector};
use crate::problem::Simulator;
use crate::{Error, Result};

/// Create `dir` and check it is writable before any work is done.
pub fn prepare_output_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?)
}

/// Write trace.csv, front.csv, hypervolume.csv, models.csv, timing.csv and
/// config.echo into `dir`.
///
/// Every file except timing.csv is a pure function of the configuration, so
/// reruns with the same seed reproduce them byte for byte.
pub fn emit_results(
    outcome: &RunOutcome,
    cfg: &RunConfig,
    reference: Option<Canonical>,
    dir: &Path,
) -> Result<()> {
    prepare_output_dir(dir)?;
    let sim = Simulator::new(cfg.simulator.clone())?;
    let names: Vec<&str> = sim.space().dims().iter().map(|d| d.name.as_str()).collect();
    let archive = outcome.archive(reference);

    let mut w = writer(&dir.join("trace.csv"))?;
    let mut header = vec!["iteration", "evaluation"];
    header.extend(&names);
    header.extend([
        "replications",
        "total_replications",
        "mean_strength",
        "cost",
        "feasible",
        "failed",
        "scalarized",
        "criterion",
        "hypervolume",
    ]);
    w.write_record(&header)?;
    for (i, r) in outcome.records.iter().enumerate() {
        let mut row = vec![r.iteration.to_string(), (i + 1).to_string()];
        row.extend(r.design.values().iter().map(|&v| num(v)));
        row.extend([
            r.replications.to_string(),
            r.total_replications.to_string(),
            num(r.mean_strength),
            num(r.cost),
            r.feasible.to_string(),
            r.failed.to_string(),
            opt(r.scalarized),
            opt(r.criterion),
            opt(archive.trace().get(i).copied()),
        ]);
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(dir, e))?;

    let mut w = writer(&dir.join("front.csv"))?;
    let mut header = names.clone();
    header.extend(["strength", "cost", "replications"]);
    w.write_record(&header)?;
    for m in archive.members() {
        let mut row: Vec<String> = m.design.values().iter().map(|&v| num(v)).collect();
        row.extend([num(m.objectives.strength), num(m.objectives.cost), m.replications.to_string()]);
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(dir, e))?;

    let mut w = writer(&dir.join("hypervolume.csv"))?;
    w.write_record(["iteration", "evaluations", "hypervolume"])?;
    if let Some(r) = reference {
        for p in outcome.hypervolume_trace(&r) {
            w.write_record([p.iteration.to_string(), p.evaluations.to_string(), num(p.hypervolume)])?;
        }
    }
    w.flush().map_err(|e| Error::io(dir, e))?;

    let mut w = writer(&dir.join("models.csv"))?;
    let ls: Vec<String> = names.iter().map(|n| format!("lengthscale_{n}")).collect();
    let mut header: Vec<&str> = vec![
        "iteration",
        "weight_strength",
        "weight_cost",
        "ideal_strength",
        "ideal_cost",
        "range_strength",
        "range_cost",
        "y_star",
        "trend",
        "process_variance",
    ];
    header.extend(ls.iter().map(String::as_str));
    header.extend(["nugget", "fitted_nugget", "log_likelihood", "classifier", "classifier_iterations"]);
    w.write_record(&header)?;
    for m in &outcome.models {
        let s = &m.scalarizer;
        let [w1, w2] = s.weights.as_array();
        let h = &m.hyperparameters;
        let mut row = vec![
            m.iteration.to_string(),
            num(w1),
            num(w2),
            num(s.ideal[0]),
            num(s.ideal[1]),
            num(s.ranges[0]),
            num(s.ranges[1]),
            num(m.y_star),
            num(m.trend),
            num(h.process_variance),
        ];
        row.extend(h.lengthscales.iter().map(|&l| num(l)));
        row.extend([
            num(h.nugget),
            m.fitted_nugget.to_string(),
            num(m.log_likelihood),
            format!("{:?}", m.classifier.kind).to_lowercase(),
            m.classifier.report.iterations.to_string(),
        ]);
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(dir, e))?;

    let mut w = writer(&dir.join("timing.csv"))?;
    w.write_record(["evaluation", "iteration", "wall_clock_seconds"])?;
    for (i, r) in outcome.records.iter().enumerate() {
        w.write_record([(i + 1).to_string(), r.iteration.to_string(), num(r.wall_clock)])?;
    }
    w.flush().map_err(|e| Error::io(dir, e))?;

    let echo = dir.join("config.echo");
    fs::write(&echo, cfg.echo()).map_err(|e| Error::io(&echo, e))
}

/// Objective vectors from a front file with `strength` and `cost` columns.
pub fn read_front_csv(path: &Path) -> Result<Vec<ObjectiveVector>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("{}: missing `{name}` column", path.display())))
    };
    let (si, ci) = (col("strength")?, col("cost")?);
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|t| t.trim().parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Config(format!("{}: bad number on data row {}", path.display(), line + 1)))
        };
        out.push(ObjectiveVector {
            strength: parse(si)?,
            cost: parse(ci)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn front_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        fs::write(&p, "power,strength,cost\n500,10.5,2\n600,12,3.25\n").unwrap();
        let f = read_front_csv(&p).unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f[1].strength, 12.0);
        assert_eq!(f[1].cost, 3.25);
        fs::write(&p, "strength\n1\n").unwrap();
        assert!(matches!(read_front_csv(&p), Err(Error::Config(_))));
        fs::write(&p, "strength,cost\n1,x\n").unwrap();
        assert!(matches!(read_front_csv(&p), Err(Error::Config(_))));
    }

    #[test]
    fn unwritable_directory_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain");
        fs::write(&file, b"x").unwrap();
        assert!(matches!(prepare_output_dir(&file.join("sub")), Err(Error::Io { .. })));
    }
}
