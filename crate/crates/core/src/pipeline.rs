// SPDX-License-Identifier: Apache-2.0

//! End-to-end drivers: analyze, partition, and run a program in one of the
//! four execution modes.

use std::fmt;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ast::BufferedHost;
use crate::error::Error;
use crate::frontends::{LanguageRegistry, Program};
use crate::partition::{self, Partition};
use crate::polytaint::{self, AnalysisReport, AnalyzeOptions, Classification, Entry};
use crate::teesim::{Runtime, TransitionStats, DEFAULT_COST};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Plain,
    Instrumented,
    UnpartitionedSim,
    PartitionedSim,
}

impl Mode {
    pub const ALL: [Mode; 4] = [
        Mode::Plain,
        Mode::Instrumented,
        Mode::UnpartitionedSim,
        Mode::PartitionedSim,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Plain => "plain",
            Mode::Instrumented => "instrumented",
            Mode::UnpartitionedSim => "unpartitioned-sim",
            Mode::PartitionedSim => "partitioned-sim",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Summary of one run, written as `stats.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunReport {
    pub mode: Mode,
    pub program: String,
    pub wall_time_ms: f64,
    #[serde(flatten, default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<TransitionStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classification: Option<Classification>,
    pub output_digest: String,
    #[serde(skip)]
    pub output: String,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Hex SHA-256 of program output.
pub fn output_digest(output: &str) -> String {
    hex::encode(Sha256::digest(output.as_bytes()))
}

/// How to run a program.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub entry: Option<String>,
    pub cost: u64,
    pub input: Vec<String>,
    /// Copy program output to the process stdout as it is produced.
    pub echo: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            entry: None,
            cost: DEFAULT_COST,
            input: Vec::new(),
            echo: false,
        }
    }
}

/// A completed or aborted run. `result` carries the error of an aborted
/// run; output produced before the abort is kept.
#[derive(Debug)]
pub struct Outcome {
    pub report: RunReport,
    pub result: Result<(), Error>,
}

impl Outcome {
    pub fn into_result(self) -> Result<RunReport, Error> {
        self.result.map(|()| self.report)
    }
}

pub fn load_program(registry: &LanguageRegistry, path: &Path, lang: Option<&str>) -> Result<Program, Error> {
    if !path.is_file() {
        return Err(Error::Usage(format!("no such input file: {}", path.display())));
    }
    Ok(registry.parse_file(path, lang)?)
}

fn host(opts: &RunOptions) -> BufferedHost {
    BufferedHost::with_input(opts.input.iter().cloned()).echo(opts.echo)
}

fn finish(
    mode: Mode,
    program: &str,
    started: Instant,
    io: &BufferedHost,
    stats: Option<TransitionStats>,
    classification: Option<Classification>,
    result: Result<(), Error>,
) -> Outcome {
    let output = io.output();
    Outcome {
        report: RunReport {
            mode,
            program: program.to_string(),
            wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
            stats,
            classification,
            output_digest: output_digest(&output),
            output,
        },
        result,
    }
}

/// One uninstrumented run.
pub fn run_plain(program: &Program, registry: &LanguageRegistry, opts: &RunOptions) -> Outcome {
    let started = Instant::now();
    let io = host(opts);
    let result = (|| -> Result<(), Error> {
        let entry = Entry::resolve(program, opts.entry.as_deref())?;
        let interp = program.interpreter(Arc::new(registry.clone()));
        let prelude: Vec<_> = entry
            .prelude(program)
            .into_iter()
            .map(|i| program.globals[i].clone())
            .collect();
        interp.run_toplevel(&prelude, &io)?;
        if let Some(f) = entry.function() {
            interp.call_entry(f, Vec::new(), &io)?;
        }
        Ok(())
    })();
    finish(Mode::Plain, &program.stem, started, &io, None, None, result)
}

pub fn analyze(program: &Program, registry: &LanguageRegistry, opts: &RunOptions) -> Result<AnalysisReport, Error> {
    let aopts = AnalyzeOptions {
        entry: opts.entry.clone(),
        input: opts.input.clone(),
    };
    let report = polytaint::analyze(program, registry, &aopts)?;
    if opts.echo {
        print!("{}", report.output);
    }
    Ok(report)
}

/// One instrumented run, timed, with its analysis.
pub fn run_instrumented(
    program: &Program,
    registry: &LanguageRegistry,
    opts: &RunOptions,
) -> Result<(RunReport, AnalysisReport), Error> {
    let started = Instant::now();
    let analysis = analyze(program, registry, opts)?;
    let report = RunReport {
        mode: Mode::Instrumented,
        program: program.stem.clone(),
        wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
        stats: None,
        classification: Some(analysis.classification.clone()),
        output_digest: output_digest(&analysis.output),
        output: analysis.output.clone(),
    };
    Ok((report, analysis))
}

/// Runs both manifests in the simulator.
pub fn run_partition(
    partition: Partition,
    registry: &LanguageRegistry,
    mode: Mode,
    opts: &RunOptions,
) -> Outcome {
    let started = Instant::now();
    let program = partition.untrusted.program.clone();
    let io = host(opts);
    let mut stats = None;
    let result = (|| -> Result<(), Error> {
        let rt = Runtime::load(partition, registry, &io, opts.cost)?;
        let r = match &opts.entry {
            Some(f) => rt.invoke_entry(f, Vec::new()).map(drop),
            None => rt.run(),
        };
        stats = Some(rt.stats());
        Ok(r?)
    })();
    finish(mode, &program, started, &io, stats, None, result)
}

/// Analyzes `program`, then runs it split (or whole-in-enclave when
/// `unpartitioned`) in the simulator. The analysis run is not timed.
pub fn run_simulated(
    program: &Program,
    registry: &LanguageRegistry,
    unpartitioned: bool,
    opts: &RunOptions,
) -> Result<(Outcome, AnalysisReport), Error> {
    let quiet = RunOptions {
        echo: false,
        ..opts.clone()
    };
    let analysis = analyze(program, registry, &quiet)?;
    let (mode, split) = if unpartitioned {
        (Mode::UnpartitionedSim, partition::unpartitioned(program, &analysis)?)
    } else {
        (Mode::PartitionedSim, partition::partition(program, &analysis)?)
    };
    // The entry was fixed by the analysis and travels in the manifests.
    let run_opts = RunOptions {
        entry: None,
        ..opts.clone()
    };
    let mut outcome = run_partition(split, registry, mode, &run_opts);
    outcome.report.classification = Some(analysis.classification.clone());
    Ok((outcome, analysis))
}

/// Runs `program` in `mode` and returns its report.
pub fn run_mode(program: &Program, registry: &LanguageRegistry, mode: Mode, opts: &RunOptions) -> Outcome {
    match mode {
        Mode::Plain => run_plain(program, registry, opts),
        Mode::Instrumented => match run_instrumented(program, registry, opts) {
            Ok((report, _)) => Outcome {
                report,
                result: Ok(()),
            },
            Err(e) => failed(mode, program, e),
        },
        Mode::UnpartitionedSim | Mode::PartitionedSim => {
            match run_simulated(program, registry, mode == Mode::UnpartitionedSim, opts) {
                Ok((outcome, _)) => outcome,
                Err(e) => failed(mode, program, e),
            }
        }
    }
}

fn failed(mode: Mode, program: &Program, e: Error) -> Outcome {
    Outcome {
        report: RunReport {
            mode,
            program: program.stem.clone(),
            wall_time_ms: 0.0,
            stats: None,
            classification: None,
            output_digest: output_digest(""),
            output: String::new(),
        },
        result: Err(e),
    }
}
