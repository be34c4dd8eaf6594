// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use polysplit::bench::{self, BenchConfig, SuiteRegistry};
use polysplit::frontends::LanguageRegistry;
use polysplit::partition::{self, Partition, TRUSTED_MANIFEST, UNTRUSTED_MANIFEST};
use polysplit::pipeline::{self, Mode, Outcome, RunOptions};
use polysplit::polytaint::AnalysisReport;
use polysplit::teesim::DEFAULT_COST;
use polysplit::Error;

const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "polysplit", version, about = "Taint-track, partition and run guest programs in a simulated enclave")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Source {
    /// Function to start from. Defaults to the top-level script, or `main`.
    #[arg(long)]
    entry: Option<String>,
    /// Frontend to use instead of detecting it from the file extension.
    #[arg(long, value_parser = ["minijs", "minipy"])]
    lang: Option<String>,
    /// Output directory.
    #[arg(short = 'o', long = "out", default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run the program once under taint tracking and write analysis.json.
    Analyze {
        file: PathBuf,
        #[command(flatten)]
        src: Source,
    },
    /// Write trusted.manifest.json and untrusted.manifest.json.
    Partition {
        file: PathBuf,
        /// Use an existing analysis.json instead of analyzing inline.
        #[arg(long)]
        analysis: Option<PathBuf>,
        #[command(flatten)]
        src: Source,
    },
    /// Run a manifest directory, or a source file, and write stats.json.
    Run {
        path: PathBuf,
        /// Put every executed function inside the enclave.
        #[arg(long, conflicts_with = "plain")]
        unpartitioned: bool,
        /// Run the source file in the plain interpreter.
        #[arg(long)]
        plain: bool,
        /// Cycles charged per transition.
        #[arg(long, default_value_t = DEFAULT_COST)]
        cost: u64,
        #[command(flatten)]
        src: Source,
    },
    /// Run a benchmark suite and write bench.csv.
    Bench {
        /// secnodes, taint or partition.
        suite: String,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        /// Functions in the synthetic bubble-sort suite.
        #[arg(long, default_value_t = 100)]
        functions: usize,
        /// Array length sorted by each synthetic function.
        #[arg(long, default_value_t = 100)]
        array_len: usize,
        #[arg(long, default_value_t = DEFAULT_COST)]
        cost: u64,
        #[arg(short = 'o', long = "out", default_value = ".")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e
                .downcast_ref::<Error>()
                .map_or(1, |e| e.exit_code() as u8);
            ExitCode::from(code)
        }
    }
}

fn dispatch(cmd: Command) -> anyhow::Result<()> {
    let registry = LanguageRegistry::with_defaults();
    match cmd {
        Command::Analyze { file, src } => analyze(&registry, &file, &src),
        Command::Partition {
            file,
            analysis,
            src,
        } => partition_cmd(&registry, &file, analysis.as_deref(), &src),
        Command::Run {
            path,
            unpartitioned,
            plain,
            cost,
            src,
        } => run(&registry, &path, unpartitioned, plain, cost, &src),
        Command::Bench {
            suite,
            reps,
            functions,
            array_len,
            cost,
            out,
        } => {
            let cfg = BenchConfig {
                reps,
                functions,
                array_len,
                cost,
                ..BenchConfig::default()
            };
            bench_cmd(&suite, &cfg, &out)
        }
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).map_err(Error::from)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .map_err(Error::from)
        .with_context(|| format!("writing {}", path.display()))
}

fn options(src: &Source, cost: u64, echo: bool) -> RunOptions {
    RunOptions {
        entry: src.entry.clone(),
        cost,
        echo,
        ..RunOptions::default()
    }
}

fn analyze(registry: &LanguageRegistry, file: &Path, src: &Source) -> anyhow::Result<()> {
    let program = pipeline::load_program(registry, file, src.lang.as_deref())?;
    let report = pipeline::analyze(&program, registry, &options(src, DEFAULT_COST, true))?;
    write(&src.out, "analysis.json", &report.to_json())?;
    let c = &report.classification;
    eprintln!("T: {}", c.trusted.join(", "));
    eprintln!("N: {}", c.neutral.join(", "));
    eprintln!("U: {}", c.untrusted.join(", "));
    Ok(())
}

fn partition_cmd(
    registry: &LanguageRegistry,
    file: &Path,
    analysis: Option<&Path>,
    src: &Source,
) -> anyhow::Result<()> {
    let program = pipeline::load_program(registry, file, src.lang.as_deref())?;
    let report = match analysis {
        Some(path) => {
            if !path.is_file() {
                return Err(Error::Usage(format!("no such analysis file: {}", path.display())).into());
            }
            let text = std::fs::read_to_string(path).map_err(Error::from)?;
            AnalysisReport::from_json(&text).map_err(Error::from)?
        }
        None => pipeline::analyze(&program, registry, &options(src, DEFAULT_COST, false))?,
    };
    let split = partition::partition(&program, &report).map_err(Error::from)?;
    split.write(&src.out).map_err(Error::from)?;
    eprintln!(
        "trusted: {} real, {} proxies; untrusted: {} real, {} proxies",
        split.trusted.tcb_size(),
        split.trusted.proxies().count(),
        split.untrusted.tcb_size(),
        split.untrusted.proxies().count()
    );
    Ok(())
}

fn run(
    registry: &LanguageRegistry,
    path: &Path,
    unpartitioned: bool,
    plain: bool,
    cost: u64,
    src: &Source,
) -> anyhow::Result<()> {
    let opts = options(src, cost, true);
    let outcome = if path.is_dir() {
        if unpartitioned || plain {
            return Err(Error::Usage("--plain and --unpartitioned take a source file, not a manifest directory".into()).into());
        }
        if !path.join(TRUSTED_MANIFEST).is_file() || !path.join(UNTRUSTED_MANIFEST).is_file() {
            return Err(Error::Usage(format!("{} holds no manifests", path.display())).into());
        }
        let split = Partition::read(path)?;
        pipeline::run_partition(split, registry, Mode::PartitionedSim, &opts)
    } else {
        let program = pipeline::load_program(registry, path, src.lang.as_deref())?;
        if plain {
            pipeline::run_plain(&program, registry, &opts)
        } else {
            pipeline::run_simulated(&program, registry, unpartitioned, &opts)?.0
        }
    };
    report(outcome, &src.out)
}

fn report(outcome: Outcome, out: &Path) -> anyhow::Result<()> {
    if let Some(s) = &outcome.report.stats {
        write(out, "stats.json", &outcome.report.to_json())?;
        eprintln!(
            "ecalls={} ocalls={} shimOcalls={} chargedCycles={}",
            s.ecalls, s.ocalls, s.shim_ocalls, s.charged_cycles
        );
    }
    outcome.result?;
    Ok(())
}

fn bench_cmd(suite: &str, cfg: &BenchConfig, out: &Path) -> anyhow::Result<()> {
    let suites = SuiteRegistry::default();
    let Some(s) = suites.get(suite) else {
        let known = suites.names().collect::<Vec<_>>().join(", ");
        return Err(Error::Usage(format!("unknown suite `{suite}` (known: {known})")).into());
    };
    let rows = s.run(cfg)?;
    let csv = bench::to_csv(&rows)?;
    write(out, "bench.csv", &csv)?;
    print!("{csv}");
    Ok(())
}
