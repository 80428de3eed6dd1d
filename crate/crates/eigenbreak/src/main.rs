use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use eigenbreak::analyze::{analyze, AnalysisConfig};
use eigenbreak::config::{PivotSettings, RunFile};
use eigenbreak::harness::{epsilon_sweep, run_experiment, with_workers};
use eigenbreak::ingest::{ingest_daily_path, write_daily};
use eigenbreak::quantiles::{load_cache, load_or_simulate, save_cache, simulate_pivot_parallel};
use eigenbreak::{output, synth};
use eigenbreak_core::datagen::{generate, Dependence, DgpSpec, StructuralBreak};
use eigenbreak_core::selfnorm::PivotDistribution;

#[derive(Parser)]
#[command(name = "eigenbreak", version, about = "Tests for relevant changes in covariance eigensystems of functional time series")]
struct Cli {
    /// Master seed; overrides the seed in a config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Pivot quantile table to read (and create if missing).
    #[arg(long, global = true)]
    quantile_cache: Option<PathBuf>,
    #[arg(long, global = true, env = "EIGENBREAK_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the pivot and write its quantile table.
    Quantiles {
        #[arg(long, default_value_t = 20)]
        k: usize,
        #[arg(long, default_value_t = eigenbreak::quantiles::DEFAULT_REPLICATES)]
        replicates: usize,
        /// Output file; defaults to `<out-dir>/quantiles_k<K>.csv`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a rejection-probability experiment from a TOML file.
    Simulate { config: PathBuf },
    /// Draw a synthetic sample.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 21)]
        order: usize,
        #[arg(long = "break", value_enum, default_value_t = BreakArg::None)]
        change: BreakArg,
        /// `E` for an eigenvalue shift, `φ` in radians for a rotation.
        #[arg(long, default_value_t = 0.0)]
        magnitude: f64,
        #[arg(long, default_value_t = 0.5)]
        theta0: f64,
        #[arg(long, value_enum, default_value_t = DependenceArg::Iid)]
        dependence: DependenceArg,
        #[arg(long, value_enum, default_value_t = FormatArg::Coefficients)]
        format: FormatArg,
        /// Year of the first curve in `daily` output.
        #[arg(long, default_value_t = 1901)]
        first_year: i32,
        /// Annual mean added to `daily` output.
        #[arg(long, default_value_t = 0.0)]
        baseline: f64,
        /// Amplitude of the seasonal cycle added to `daily` output.
        #[arg(long, default_value_t = 0.0)]
        seasonal_amplitude: f64,
        /// Output file; defaults to `<out-dir>/generated.csv`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Locate the break in a daily series and test every relevance cell.
    Analyze {
        data: PathBuf,
        /// TOML file with an `[analyze]` and optional `[pivot]` section.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        min_days: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BreakArg {
    None,
    Eigenvalue,
    Rotation,
}

#[derive(Clone, Copy, ValueEnum)]
enum DependenceArg {
    Iid,
    Fma1,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Coefficients,
    Daily,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let workers = cli.workers;
    with_workers(workers, move || run(cli))?
}

fn pivot_for(cli: &Cli, settings: &PivotSettings) -> Result<PivotDistribution> {
    match &cli.quantile_cache {
        Some(path) if path.exists() => {
            let p = load_cache(path).with_context(|| format!("reading {}", path.display()))?;
            if p.k() != settings.k {
                bail!("{}: table has K = {}, run needs K = {}", path.display(), p.k(), settings.k);
            }
            Ok(p)
        }
        path => Ok(load_or_simulate(path.as_deref(), settings.k, settings.replicates, settings.seed)?),
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Quantiles { k, replicates, output } => {
            let seed = cli.seed.unwrap_or(eigenbreak::quantiles::DEFAULT_SEED);
            let pivot = simulate_pivot_parallel(*k, *replicates, seed)?;
            let path = output
                .clone()
                .or_else(|| cli.quantile_cache.clone())
                .unwrap_or_else(|| cli.out_dir.join(format!("quantiles_k{k}.csv")));
            save_cache(&pivot, &path)?;
            println!("K = {k}, R = {replicates}, seed = {seed} -> {}", path.display());
            for p in [0.99, 0.95, 0.90] {
                println!("q_{p:.2} = {:.3}", pivot.quantile(p));
            }
        }
        Command::Simulate { config } => {
            let mut file = RunFile::load(config)?;
            if let Some(seed) = cli.seed {
                if let Some(exp) = file.experiment.as_mut() {
                    exp.seed = seed;
                }
            }
            let exp = file.experiment()?.clone();
            let pivot = pivot_for(&cli, &file.pivot)?;
            let name = stem(config);
            match &file.sweep {
                Some(sweep) => {
                    let runs = epsilon_sweep(&exp, &sweep.epsilons, sweep.bins, &pivot)?;
                    output::write_sweep(&runs, &cli.out_dir, &name)?;
                    for run in &runs {
                        print_table(&format!("epsilon = {}", run.epsilon), &run.table);
                    }
                }
                None => {
                    let table = run_experiment(&exp, &pivot)?;
                    output::write_table(&table, &cli.out_dir, &name)?;
                    print_table(&name, &table);
                }
            }
            println!("results in {}", cli.out_dir.display());
        }
        Command::Generate {
            n,
            order,
            change,
            magnitude,
            theta0,
            dependence,
            format,
            first_year,
            baseline,
            seasonal_amplitude,
            output,
        } => {
            let Some(seed) = cli.seed else {
                bail!("generate needs an explicit --seed");
            };
            let change = match change {
                BreakArg::None => StructuralBreak::None,
                BreakArg::Eigenvalue => StructuralBreak::EigenvalueShift(*magnitude),
                BreakArg::Rotation => StructuralBreak::Rotation(*magnitude),
            };
            let dependence = match dependence {
                DependenceArg::Iid => Dependence::Iid,
                DependenceArg::Fma1 => Dependence::Fma1,
            };
            let spec = DgpSpec::new(*n, seed)
                .with_order(*order)
                .with_theta0(*theta0)
                .with_dependence(dependence)
                .with_break(change);
            let series = generate(&spec)?;
            let path = output.clone().unwrap_or_else(|| cli.out_dir.join("generated.csv"));
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            let file = BufWriter::new(fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?);
            match format {
                FormatArg::Coefficients => synth::write_coefficients(&series, file)?,
                FormatArg::Daily => write_daily(&series, *first_year, synth::seasonal(*baseline, *seasonal_amplitude), file)?,
            }
            println!("{} curves -> {}", series.len(), path.display());
        }
        Command::Analyze {
            data,
            config,
            order,
            epsilon,
            alpha,
            min_days,
        } => {
            let file = match config {
                Some(path) => RunFile::load(path)?,
                None => RunFile::default(),
            };
            let mut cfg = file.analyze.clone().unwrap_or_default();
            cfg.order = order.unwrap_or(cfg.order);
            cfg.epsilon = epsilon.unwrap_or(cfg.epsilon);
            cfg.alpha = alpha.unwrap_or(cfg.alpha);
            cfg.min_days = min_days.unwrap_or(cfg.min_days);
            cfg.validate()?;
            let mut settings = file.pivot.clone();
            settings.k = cfg.k;
            if let Some(seed) = cli.seed {
                settings.seed = seed;
            }
            let curves = ingest_daily_path(data, cfg.order, cfg.min_days)?;
            for ex in &curves.excluded {
                eprintln!("excluded {}: {} valid days", ex.year, ex.valid_days);
            }
            let pivot = pivot_for(&cli, &settings)?;
            let report = analyze(&curves, &cfg, &pivot)?;
            report.write(&cli.out_dir)?;
            print_report(&report, &cfg);
            println!("results in {}", cli.out_dir.display());
        }
    }
    Ok(())
}

fn print_table(title: &str, table: &eigenbreak::harness::RejectionTable) {
    println!("{title} [{}]", table.config_hash);
    println!("{:>6} {:>10} {:>8} {:>8} {:>8}", "N", "magnitude", "rate", "se", "theta");
    for r in &table.rows {
        println!(
            "{:>6} {:>10.4} {:>8.4} {:>8.4} {:>8.4}",
            r.n, r.magnitude, r.rate, r.se, r.mean_theta_hat
        );
    }
}

fn print_report(report: &eigenbreak::analyze::AnalysisReport, cfg: &AnalysisConfig) {
    println!(
        "{} years, break after {} (k = {}, theta = {:.3})",
        report.years.len(),
        report.split_year,
        report.k_hat,
        report.theta_hat
    );
    for (title, m) in [("eigenfunctions", &report.eigenfunction_table), ("eigenvalues", &report.eigenvalue_table)] {
        println!("{title} (alpha = {}):", cfg.alpha);
        let header: Vec<String> = m.js.iter().map(|j| format!("{:>12}", format!("j={j}"))).collect();
        println!("{:>10}{}", m.row_label, header.join(""));
        for (r, row) in m.rows.iter().zip(&m.cells) {
            let cells: Vec<String> = row.iter().map(|c| format!("{:>12}", c.label())).collect();
            println!("{r:>10.4}{}", cells.join(""));
        }
    }
}
