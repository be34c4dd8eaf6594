// SPDX-License-Identifier: Apache-2.0

//! Overhead benchmarks, registered by name.
//!
//! * `secnodes`: the same loop over plain and over secure values.
//! * `taint`: corpus programs with and without the taint agent.
//! * `partition`: a synthetic suite of bubble-sort functions with a varying
//!   share of secure arrays, run plain, partitioned and whole-in-enclave.

use std::fmt::Write as _;
use std::time::Instant;

use indexmap::IndexMap;
use serde::Serialize;

use crate::corpus;
use crate::error::Error;
use crate::frontends::{LanguageRegistry, Program};
use crate::pipeline::{self, Mode, RunOptions};
use crate::teesim::DEFAULT_COST;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// Repetitions per measurement; the median is reported.
    pub reps: usize,
    /// Functions in the bubble-sort suite.
    pub functions: usize,
    /// Array length each bubble-sort function sorts.
    pub array_len: usize,
    /// Iterations of the secure-node loops.
    pub loop_len: usize,
    pub cost: u64,
    /// Secure-function percentages swept by the partition suite.
    pub sweep: Vec<u32>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            reps: 3,
            functions: 100,
            array_len: 100,
            loop_len: 200_000,
            cost: DEFAULT_COST,
            sweep: vec![0, 25, 50, 75, 100],
        }
    }
}

impl BenchConfig {
    /// Small sizes for tests.
    pub fn quick() -> Self {
        BenchConfig {
            reps: 1,
            functions: 20,
            array_len: 12,
            loop_len: 20_000,
            ..Self::default()
        }
    }
}

/// One CSV row. Columns not measured by a suite stay empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub struct BenchRow {
    pub suite: String,
    pub case: String,
    pub mode: String,
    pub ms: f64,
    pub overhead_factor: Option<f64>,
    pub secure_percent: Option<u32>,
    pub trusted: Option<usize>,
    pub neutral: Option<usize>,
    pub untrusted: Option<usize>,
    pub ecalls: Option<u64>,
    pub ocalls: Option<u64>,
    pub shim_ocalls: Option<u64>,
    pub charged_cycles: Option<u64>,
}

pub trait BenchSuite: Send + Sync {
    fn name(&self) -> &str;
    fn run(&self, cfg: &BenchConfig) -> Result<Vec<BenchRow>, Error>;
}

/// Suites by name.
pub struct SuiteRegistry {
    suites: IndexMap<String, Box<dyn BenchSuite>>,
}

impl Default for SuiteRegistry {
    fn default() -> Self {
        let mut r = SuiteRegistry {
            suites: IndexMap::new(),
        };
        r.register(SecNodes);
        r.register(Taint);
        r.register(PartitionSweep);
        r
    }
}

impl SuiteRegistry {
    pub fn register(&mut self, suite: impl BenchSuite + 'static) {
        self.suites.insert(suite.name().to_string(), Box::new(suite));
    }

    pub fn get(&self, name: &str) -> Option<&dyn BenchSuite> {
        self.suites.get(name).map(|s| s.as_ref())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.suites.keys().map(String::as_str)
    }
}

pub fn to_csv(rows: &[BenchRow]) -> Result<String, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

/// Median wall time of `reps` runs of `f`, in milliseconds.
fn time_ms(reps: usize, mut f: impl FnMut() -> Result<(), Error>) -> Result<f64, Error> {
    let mut samples = Vec::with_capacity(reps.max(1));
    for _ in 0..reps.max(1) {
        let t = Instant::now();
        f()?;
        samples.push(t.elapsed().as_secs_f64() * 1e3);
    }
    Ok(median(samples))
}

fn row(suite: &str, case: &str, mode: &str, ms: f64) -> BenchRow {
    BenchRow {
        suite: suite.into(),
        case: case.into(),
        mode: mode.into(),
        ms,
        ..BenchRow::default()
    }
}

fn parse(registry: &LanguageRegistry, src: &str, path: &str) -> Result<Program, Error> {
    Ok(registry.parse(src, path, None)?)
}

fn plain_ms(program: &Program, registry: &LanguageRegistry, reps: usize) -> Result<f64, Error> {
    let opts = RunOptions::default();
    time_ms(reps, || pipeline::run_plain(program, registry, &opts).result)
}

pub struct SecNodes;

/// Loop bodies run once over plain and once over secure values.
fn secnode_cases(n: usize) -> Vec<(&'static str, String, String)> {
    let int_loop = |init: &str| {
        format!(
            "var x = {init};\nfor (var i = 0; i < {n}; i++) {{\n  x = x + i % 7;\n}}\nconsole.log(x > 0);\n"
        )
    };
    let array_sum = |init: &str| {
        let len = (n / 10).max(1);
        format!(
            "var a = newArray({len}, {init});\nvar s = 0.0;\nfor (var r = 0; r < 10; r++) {{\n  for (var i = 0; i < {len}; i++) {{\n    s = s + a[i];\n  }}\n}}\nconsole.log(s > 0.0);\n"
        )
    };
    let sec = |snippet: &str| format!("Polyglot.eval(\"secV\", \"{snippet}\")");
    vec![
        ("int-loop", int_loop("0"), int_loop(&sec("sInt(0)"))),
        ("double-array-sum", array_sum("1.5"), array_sum(&sec("sDouble(1.5)"))),
    ]
}

impl BenchSuite for SecNodes {
    fn name(&self) -> &str {
        "secnodes"
    }

    fn run(&self, cfg: &BenchConfig) -> Result<Vec<BenchRow>, Error> {
        let registry = LanguageRegistry::with_defaults();
        let mut rows = Vec::new();
        for (case, plain, secure) in secnode_cases(cfg.loop_len) {
            let p = parse(&registry, &plain, &format!("{case}.mjs.txt"))?;
            let s = parse(&registry, &secure, &format!("{case}-secure.mjs.txt"))?;
            let base = plain_ms(&p, &registry, cfg.reps)?;
            let sec = plain_ms(&s, &registry, cfg.reps)?;
            rows.push(BenchRow {
                overhead_factor: Some(1.0),
                ..row("secnodes", case, "plain-value", base)
            });
            rows.push(BenchRow {
                overhead_factor: Some(sec / base),
                ..row("secnodes", case, "secure-value", sec)
            });
        }
        Ok(rows)
    }
}

pub struct Taint;

impl BenchSuite for Taint {
    fn name(&self) -> &str {
        "taint"
    }

    fn run(&self, cfg: &BenchConfig) -> Result<Vec<BenchRow>, Error> {
        let registry = LanguageRegistry::with_defaults();
        let bubble = bubble_sort_suite(cfg.functions, cfg.array_len, 50);
        let cases = [
            ("regression", corpus::REGRESSION.minijs.to_string(), "regression.mjs.txt"),
            ("pagerank", corpus::PAGERANK.minijs.to_string(), "pagerank.mjs.txt"),
            ("bubble-sort", bubble, "bubble.mjs.txt"),
        ];
        let opts = RunOptions::default();
        let mut rows = Vec::new();
        for (case, src, path) in cases {
            let program = parse(&registry, &src, path)?;
            let base = plain_ms(&program, &registry, cfg.reps)?;
            let instr = time_ms(cfg.reps, || {
                pipeline::run_instrumented(&program, &registry, &opts).map(drop)
            })?;
            rows.push(BenchRow {
                overhead_factor: Some(1.0),
                ..row("taint", case, Mode::Plain.as_str(), base)
            });
            rows.push(BenchRow {
                overhead_factor: Some(instr / base),
                ..row("taint", case, Mode::Instrumented.as_str(), instr)
            });
        }
        Ok(rows)
    }
}

pub struct PartitionSweep;

impl BenchSuite for PartitionSweep {
    fn name(&self) -> &str {
        "partition"
    }

    fn run(&self, cfg: &BenchConfig) -> Result<Vec<BenchRow>, Error> {
        let registry = LanguageRegistry::with_defaults();
        let opts = RunOptions {
            cost: cfg.cost,
            ..RunOptions::default()
        };
        let mut rows = Vec::new();
        for &pct in &cfg.sweep {
            let src = bubble_sort_suite(cfg.functions, cfg.array_len, pct);
            let program = parse(&registry, &src, "bubble.mjs.txt")?;
            let analysis = pipeline::analyze(&program, &registry, &opts)?;
            let cls = &analysis.classification;
            let case = format!("bubble-{pct}");
            let base = plain_ms(&program, &registry, cfg.reps)?;
            rows.push(BenchRow {
                overhead_factor: Some(1.0),
                secure_percent: Some(pct),
                ..row("partition", &case, Mode::Plain.as_str(), base)
            });
            for (mode, split) in [
                (Mode::PartitionedSim, crate::partition::partition(&program, &analysis)?),
                (Mode::UnpartitionedSim, crate::partition::unpartitioned(&program, &analysis)?),
            ] {
                let mut stats = None;
                let ms = time_ms(cfg.reps, || {
                    let o = pipeline::run_partition(split.clone(), &registry, mode, &opts);
                    stats = o.report.stats;
                    o.result
                })?;
                let stats = stats.expect("simulated runs report stats");
                rows.push(BenchRow {
                    overhead_factor: Some(ms / base),
                    secure_percent: Some(pct),
                    trusted: Some(cls.trusted.len()),
                    neutral: Some(cls.neutral.len()),
                    untrusted: Some(cls.untrusted.len()),
                    ecalls: Some(stats.ecalls),
                    ocalls: Some(stats.ocalls),
                    shim_ocalls: Some(stats.shim_ocalls),
                    charged_cycles: Some(stats.charged_cycles),
                    ..row("partition", &case, mode.as_str(), ms)
                });
            }
        }
        Ok(rows)
    }
}

/// Which of `functions` sort functions use a secure array for a given
/// percentage; spread evenly, exactly `functions * pct / 100` of them.
pub fn secure_slots(functions: usize, pct: u32) -> Vec<bool> {
    let m = functions * pct.min(100) as usize / 100;
    (0..functions)
        .map(|i| (i + 1) * m / functions != i * m / functions)
        .collect()
}

/// MiniJS source of the synthetic suite: `functions` functions, each
/// bubble-sorting a local array of `array_len` elements, `pct` percent of
/// them over a secure array. `main` calls every function once.
pub fn bubble_sort_suite(functions: usize, array_len: usize, pct: u32) -> String {
    let mut out = String::new();
    for (f, secure) in secure_slots(functions, pct).into_iter().enumerate() {
        let items: Vec<String> = (0..array_len)
            .map(|i| ((i * 37 + f * 11 + 5) % 101).to_string())
            .collect();
        let init = if secure {
            format!("Polyglot.eval(\"secV\", \"sArray([{}])\")", items.join(", "))
        } else {
            format!("[{}]", items.join(", "))
        };
        writeln!(
            out,
            "function sort{f}() {{
  var a = {init};
  var n = len(a);
  for (var i = 0; i < n - 1; i++) {{
    for (var j = 0; j < n - 1 - i; j++) {{
      if (a[j] > a[j + 1]) {{
        var t = a[j];
        a[j] = a[j + 1];
        a[j + 1] = t;
      }}
    }}
  }}
}}
"
        )
        .unwrap();
    }
    out.push_str("function main() {\n");
    for f in 0..functions {
        writeln!(out, "  sort{f}();").unwrap();
    }
    writeln!(out, "  console.log(\"sorted\", {functions});\n}}").unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytaint::{analyze, AnalyzeOptions};

    #[test]
    fn slots_hit_the_requested_share() {
        for pct in [0, 25, 50, 75, 100] {
            assert_eq!(secure_slots(100, pct).iter().filter(|s| **s).count(), pct as usize);
        }
        assert_eq!(secure_slots(20, 25).iter().filter(|s| **s).count(), 5);
    }

    #[test]
    fn suite_trusted_set_equals_secure_functions() {
        let registry = LanguageRegistry::with_defaults();
        for pct in [0, 25, 100] {
            let src = bubble_sort_suite(8, 6, pct);
            let program = registry.parse(&src, "bubble.mjs.txt", None).unwrap();
            let report = analyze(&program, &registry, &AnalyzeOptions::default()).unwrap();
            let secure: Vec<String> = secure_slots(8, pct)
                .into_iter()
                .enumerate()
                .filter(|(_, s)| *s)
                .map(|(i, _)| format!("sort{i}"))
                .collect();
            assert_eq!(report.classification.trusted, secure, "{pct}%");
            assert!(report.classification.neutral.is_empty());
        }
    }

    #[test]
    fn registry_knows_all_suites() {
        let r = SuiteRegistry::default();
        assert_eq!(r.names().collect::<Vec<_>>(), ["secnodes", "taint", "partition"]);
        assert!(r.get("nope").is_none());
    }

    #[test]
    fn csv_has_header_and_empty_optionals() {
        let csv = to_csv(&[row("s", "c", "m", 1.5)]).unwrap();
        let mut lines = csv.lines();
        assert!(lines.next().unwrap().starts_with("suite,case,mode,ms,overhead_factor"));
        assert_eq!(lines.next().unwrap(), "s,c,m,1.5,,,,,,,,,");
    }

    #[test]
    fn partition_sweep_reports_transitions() {
        let cfg = BenchConfig {
            sweep: vec![0, 50],
            functions: 4,
            array_len: 5,
            ..BenchConfig::quick()
        };
        let rows = PartitionSweep.run(&cfg).unwrap();
        assert_eq!(rows.len(), 6);
        let part0 = rows.iter().find(|r| r.case == "bubble-0" && r.mode == "partitioned-sim").unwrap();
        assert_eq!((part0.trusted, part0.ecalls), (Some(0), Some(0)));
        let part50 = rows.iter().find(|r| r.case == "bubble-50" && r.mode == "partitioned-sim").unwrap();
        assert_eq!((part50.trusted, part50.ecalls), (Some(2), Some(2)));
        assert_eq!(part50.charged_cycles, Some(2 * DEFAULT_COST));
    }
}
