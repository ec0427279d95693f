use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use mosk::driver::{emit_results, prepare_output_dir, read_front_csv, run_experiment, run_mosk, run_nsga2, Algorithm, RunConfig};
use mosk::pareto::hypervolume_2d;
use mosk::{Error, Result};

#[derive(Parser)]
#[command(name = "mosk", version, about = "Constrained multi-objective simulation optimization for adhesive bonding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one optimization and write its result files.
    Optimize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        algorithm: Option<Algorithm>,
        #[arg(long)]
        seed: Option<u64>,
        /// Design evaluations (NSGA-II: a multiple of the population).
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run MOSK and NSGA-II on seeds 1..=N and summarize final hypervolumes.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hypervolume of a front file against a reference point.
    Hypervolume {
        #[arg(long)]
        front: PathBuf,
        /// Reference as `strength,cost`.
        #[arg(long = "ref", value_parser = parse_reference)]
        reference: [f64; 2],
    },
}

fn parse_reference(text: &str) -> std::result::Result<[f64; 2], String> {
    let parts: Vec<&str> = text.split(',').collect();
    match parts.as_slice() {
        [s, c] => {
            let s: f64 = s.trim().parse().map_err(|_| format!("bad strength `{s}`"))?;
            let c: f64 = c.trim().parse().map_err(|_| format!("bad cost `{c}`"))?;
            Ok([s, c])
        }
        _ => Err("expected `strength,cost`".into()),
    }
}

fn optimize(
    config: &Path,
    algorithm: Option<Algorithm>,
    seed: Option<u64>,
    budget: Option<usize>,
    out: Option<PathBuf>,
) -> Result<()> {
    let mut cfg = RunConfig::from_path(config)?;
    if let Some(a) = algorithm {
        cfg.run.algorithm = a;
    }
    if let Some(s) = seed {
        cfg.run.seed = s;
    }
    if let Some(b) = budget {
        cfg.set_budget(b)?;
    }
    if let Some(o) = out {
        cfg.run.output_dir = o;
    }
    cfg.validate()?;
    prepare_output_dir(&cfg.run.output_dir)?;
    info!("{} seed {} budget {}", cfg.run.algorithm, cfg.run.seed, cfg.evaluations());
    let outcome = match cfg.run.algorithm {
        Algorithm::Mosk => run_mosk(&cfg)?,
        Algorithm::Nsga2 => run_nsga2(&cfg)?,
    };
    let reference = outcome.reference(&cfg);
    emit_results(&outcome, &cfg, reference, &cfg.run.output_dir)?;
    let front = outcome.archive(None);
    println!(
        "{} seed {}: {} evaluations, {} replications, {} front points, hypervolume {}",
        outcome.algorithm,
        outcome.seed,
        outcome.evaluations,
        outcome.replications,
        front.members().len(),
        reference.map_or("undefined".to_string(), |r| format!("{:.6}", front.hypervolume(&r))),
    );
    Ok(())
}

fn compare(config: &Path, seeds: u64, out: Option<PathBuf>) -> Result<()> {
    if seeds == 0 {
        return Err(Error::Config("--seeds must be at least 1".into()));
    }
    let cfg = RunConfig::from_path(config)?;
    let dir = out.unwrap_or_else(|| cfg.run.output_dir.clone());
    prepare_output_dir(&dir)?;
    let seed_list: Vec<u64> = (1..=seeds).collect();
    let report = run_experiment(&cfg, &cfg, &seed_list)?;

    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(dir.join("comparison.csv"))?;
    w.write_record(["seed", "mosk_hypervolume", "nsga2_hypervolume", "mosk_evaluations", "nsga2_evaluations"])?;
    for s in &report.seeds {
        w.write_record([
            s.seed.to_string(),
            s.mosk_hypervolume.to_string(),
            s.nsga2_hypervolume.to_string(),
            s.mosk_evaluations.to_string(),
            s.nsga2_evaluations.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&dir, e))?;
    for (a, b) in &report.runs {
        for (outcome, name) in [(a, "mosk"), (b, "nsga2")] {
            let mut c = cfg.clone();
            c.run.seed = outcome.seed;
            c.run.algorithm = outcome.algorithm;
            let sub = dir.join(format!("{name}-seed{}", outcome.seed));
            emit_results(outcome, &c, Some(report.reference), &sub)?;
        }
    }
    println!(
        "reference strength {} cost {}",
        -report.reference[0], report.reference[1]
    );
    for s in [&report.mosk, &report.nsga2] {
        println!(
            "{:6} median {:.6} q1 {:.6} q3 {:.6} iqr {:.6}",
            s.algorithm.to_string(),
            s.median,
            s.q1,
            s.q3,
            s.iqr
        );
    }
    println!("median ratio mosk/nsga2 {:.4}", report.median_ratio());
    Ok(())
}

fn hypervolume(front: &Path, reference: [f64; 2]) -> Result<()> {
    let points: Vec<_> = read_front_csv(front)?.iter().map(|o| o.canonical()).collect();
    let r = [-reference[0], reference[1]];
    println!("{}", hypervolume_2d(&points, &r));
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Optimize {
            config,
            algorithm,
            seed,
            budget,
            out,
        } => optimize(&config, algorithm, seed, budget, out),
        Command::Compare { config, seeds, out } => compare(&config, seeds, out),
        Command::Hypervolume { front, reference } => hypervolume(&front, reference),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
