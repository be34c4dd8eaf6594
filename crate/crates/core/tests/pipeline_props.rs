// SPDX-License-Identifier: Apache-2.0

mod common;

use polysplit::corpus;
use polysplit::frontends::{LanguageRegistry, Program};
use polysplit::partition;
use polysplit::pipeline::{run_mode, Mode, RunOptions};
use polysplit::polytaint::{analyze, AnalyzeOptions};

fn programs(registry: &LanguageRegistry) -> Vec<Program> {
    let mut out = Vec::new();
    for ex in corpus::ALL {
        for (path, src) in ex.sources() {
            out.push(registry.parse(src, &path, None).unwrap());
        }
    }
    for seed in 500..520 {
        let g = common::generate(seed);
        for (path, src) in g.sources() {
            out.push(registry.parse(src, &path, None).unwrap());
        }
    }
    out
}

#[test]
fn manifests_follow_classification() {
    let registry = LanguageRegistry::with_defaults();
    for program in programs(&registry) {
        let report = analyze(&program, &registry, &AnalyzeOptions::default()).unwrap();
        let split = partition::partition(&program, &report).unwrap();
        if let Some(v) = common::manifest_violation(&split, &report.classification) {
            panic!("{}: {v}", program.path);
        }
        let tcb = split.trusted.tcb_size();
        assert_eq!(tcb, report.classification.trusted.len() + report.classification.neutral.len());
        assert!(tcb <= report.function_records.len());
    }
}

#[test]
fn real_entries_reparse_to_the_same_tree() {
    let registry = LanguageRegistry::with_defaults();
    for program in programs(&registry) {
        let report = analyze(&program, &registry, &AnalyzeOptions::default()).unwrap();
        let split = partition::partition(&program, &report).unwrap();
        for manifest in [&split.trusted, &split.untrusted] {
            let reparsed = manifest.parse(&registry).unwrap();
            for e in manifest.reals() {
                let orig = program.function(&e.name).unwrap();
                let again = reparsed.function(&e.name).unwrap();
                assert_eq!(common::shape(orig), common::shape(again), "{} {}", program.path, e.name);
                assert_eq!(e.source_text.as_deref(), Some(orig.source.text()));
            }
        }
    }
}

#[test]
fn guard_clean_modes_print_the_same_bytes() {
    let registry = LanguageRegistry::with_defaults();
    let opts = RunOptions::default();
    for ex in corpus::ALL.iter().filter(|e| e.guard_clean) {
        for (path, src) in ex.sources() {
            let program = registry.parse(src, &path, None).unwrap();
            let outs: Vec<String> = [Mode::Plain, Mode::UnpartitionedSim, Mode::PartitionedSim]
                .into_iter()
                .map(|m| {
                    let o = run_mode(&program, &registry, m, &opts);
                    o.result.as_ref().unwrap_or_else(|e| panic!("{path} {m}: {e}"));
                    o.report.output
                })
                .collect();
            assert!(!outs[0].is_empty());
            assert_eq!(outs[0], outs[1], "{path}");
            assert_eq!(outs[0], outs[2], "{path}");
        }
    }
}

#[test]
fn twins_agree_on_classification_and_stats() {
    let registry = LanguageRegistry::with_defaults();
    let opts = RunOptions::default();
    for ex in corpus::ALL.iter().filter(|e| e.guard_clean) {
        let [(p1, s1), (p2, s2)] = ex.sources();
        let a = run_mode(&registry.parse(s1, &p1, None).unwrap(), &registry, Mode::PartitionedSim, &opts);
        let b = run_mode(&registry.parse(s2, &p2, None).unwrap(), &registry, Mode::PartitionedSim, &opts);
        assert_eq!(a.report.classification, b.report.classification, "{}", ex.name);
        let (sa, sb) = (a.report.stats.unwrap(), b.report.stats.unwrap());
        assert_eq!(
            serde_json::to_value(&sa).unwrap(),
            serde_json::to_value(&sb).unwrap(),
            "{}",
            ex.name
        );
        assert_eq!(a.report.output_digest, b.report.output_digest);
    }
}

#[test]
fn pipeline_is_idempotent() {
    let registry = LanguageRegistry::with_defaults();
    let program = registry.parse(corpus::PAGERANK.minijs, "pagerank.mjs.txt", None).unwrap();
    let once = || {
        let report = analyze(&program, &registry, &AnalyzeOptions::default()).unwrap();
        let split = partition::partition(&program, &report).unwrap();
        let run = run_mode(&program, &registry, Mode::PartitionedSim, &RunOptions::default());
        (
            split.trusted.to_json(),
            split.untrusted.to_json(),
            report.classification,
            serde_json::to_value(run.report.stats.unwrap()).unwrap(),
        )
    };
    assert_eq!(once(), once());
}
