// SPDX-License-Identifier: Apache-2.0

mod common;

use polysplit::ast::BufferedHost;
use polysplit::corpus;
use polysplit::frontends::{LanguageRegistry, Program};
use polysplit::partition::{self, Partition};
use polysplit::polytaint::{analyze, AnalysisReport, AnalyzeOptions};
use polysplit::teesim::{Runtime, TransitionStats, DEFAULT_COST};

fn simulate(split: Partition, registry: &LanguageRegistry) -> (Result<(), polysplit::EngineError>, TransitionStats, String) {
    let io = BufferedHost::new();
    let rt = Runtime::load(split, registry, &io, DEFAULT_COST).unwrap();
    let r = rt.run();
    let stats = rt.stats();
    (r, stats, io.output())
}

fn assert_counts(label: &str, stats: &TransitionStats, want: common::Crossings) {
    assert_eq!(
        (stats.ecalls, stats.ocalls, stats.shim_ocalls),
        (want.ecalls, want.ocalls, want.shim_ocalls),
        "{label}"
    );
    assert_eq!(stats.charged_cycles, (stats.ecalls + stats.ocalls) * DEFAULT_COST);
    assert!(stats.shim_ocalls <= stats.ocalls);
}

/// Checks both simulated modes against the trace oracle. Returns false
/// when the program trips the guard, in which case counts are not
/// comparable with a full trace.
fn check(program: &Program, registry: &LanguageRegistry) -> bool {
    let report: AnalysisReport = analyze(program, registry, &AnalyzeOptions::default()).unwrap();
    let trace = common::record(program, registry);
    let (r, stats, out) = simulate(partition::partition(program, &report).unwrap(), registry);
    if r.as_ref().is_err_and(|e| e.guard().is_some()) {
        return false;
    }
    r.unwrap();
    assert_eq!(out, trace.output, "{}", program.path);
    let cls = &report.classification;
    assert_counts(&program.path, &stats, common::partitioned_crossings(&trace.events, cls));

    let (r, stats, out) = simulate(partition::unpartitioned(program, &report).unwrap(), registry);
    if r.is_ok() {
        assert_eq!(out, trace.output);
        assert_counts(&program.path, &stats, common::unpartitioned_crossings(&trace.events, cls));
    }
    true
}

#[test]
fn corpus_counts_match_trace() {
    let registry = LanguageRegistry::with_defaults();
    for ex in corpus::ALL.iter().filter(|e| e.guard_clean) {
        for (path, src) in ex.sources() {
            let program = registry.parse(src, &path, None).unwrap();
            assert!(check(&program, &registry), "{path} tripped the guard");
        }
    }
}

#[test]
fn regression_counts() {
    let registry = LanguageRegistry::with_defaults();
    let program = registry.parse(corpus::REGRESSION.minijs, "regression.mjs.txt", None).unwrap();
    let report = analyze(&program, &registry, &AnalyzeOptions::default()).unwrap();
    let (_, split, _) = simulate(partition::partition(&program, &report).unwrap(), &registry);
    let (_, whole, _) = simulate(partition::unpartitioned(&program, &report).unwrap(), &registry);
    assert_eq!(split.ecalls, 1);
    assert!(split.ocalls >= 2);
    assert!(split.ocalls < whole.ocalls);
    assert_eq!(whole.ecalls, 1);
    assert_eq!(whole.shim_ocalls, whole.ocalls);
}

#[test]
fn generated_counts_match_trace() {
    let registry = LanguageRegistry::with_defaults();
    let mut compared = 0;
    for seed in 300..340 {
        let g = common::generate(seed);
        for (path, src) in g.sources() {
            let program = registry.parse(src, &path, None).unwrap();
            compared += usize::from(check(&program, &registry));
        }
    }
    assert!(compared >= 20, "only {compared} generated programs ran to completion");
}
