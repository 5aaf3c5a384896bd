//! The fuzz targets' round-trip properties, run on stable over the checked-in
//! corpus and generated near-valid inputs.

use std::fs;
use std::path::Path;

use proptest::prelude::*;

use psa_core::io::{read_design_csv, read_trace_csv, write_design_csv, write_trace_csv};
use psa_core::{CriterionSpec, ExperimentConfig, GridSpace};

fn config_round_trip(text: &str) {
    if let Ok(cfg) = ExperimentConfig::parse(text) {
        let back = ExperimentConfig::parse(&cfg.to_canonical()).expect("canonical form loads");
        assert_eq!(back, cfg);
    }
}

fn design_round_trip(levels: u8, text: &str) {
    let space = GridSpace::new(2, u32::from(levels).max(2)).unwrap();
    if let Ok(parsed) = read_design_csv(text, &space) {
        let again = read_design_csv(&write_design_csv(&parsed.points, &space), &space).unwrap();
        assert_eq!(again.points, parsed.points);
        assert!(again.warnings.is_empty());
    }
}

fn trace_round_trip(text: &str) {
    if let Ok(rows) = read_trace_csv(text) {
        assert_eq!(read_trace_csv(&write_trace_csv(&rows)).unwrap(), rows);
    }
}

fn criterion_round_trip(dim: u8, text: &str) {
    let dim = usize::from(dim % 8) + 1;
    if let Ok(spec) = CriterionSpec::parse(text, dim) {
        assert_eq!(CriterionSpec::parse(&spec.to_string(), dim).unwrap(), spec);
    }
}

fn corpus(target: &str) -> Vec<Vec<u8>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut files: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    assert!(!files.is_empty());
    files.into_iter().map(|p| fs::read(p).unwrap()).collect()
}

fn split(data: &[u8]) -> (u8, &str) {
    let (&head, rest) = data.split_first().unwrap();
    (head, std::str::from_utf8(rest).unwrap())
}

#[test]
fn corpus_seeds_parse() {
    for seed in corpus("config_parse") {
        let text = std::str::from_utf8(&seed).unwrap();
        ExperimentConfig::parse(text).unwrap();
        config_round_trip(text);
    }
    for seed in corpus("design_csv") {
        let (levels, text) = split(&seed);
        let space = GridSpace::new(2, u32::from(levels)).unwrap();
        read_design_csv(text, &space).unwrap();
        design_round_trip(levels, text);
    }
    for seed in corpus("trace_csv") {
        let text = std::str::from_utf8(&seed).unwrap();
        read_trace_csv(text).unwrap();
        trace_round_trip(text);
    }
    for seed in corpus("criterion_spec") {
        let (dim, text) = split(&seed);
        criterion_round_trip(dim, text);
    }
}

fn config_line() -> impl Strategy<Value = String> {
    prop_oneof![
        "(dim|runs|levels|grid_k|seed|restarts|probe_uniform) = [0-9]{1,3}",
        "(delta|time_budget|sample_interval) = [0-9]{0,2}\\.?[0-9]{0,4}(e-?[0-9])?",
        "privacy = (bridge|latin|lhd|classical|interval|other)",
        "criterion = (d:linear|d:quadratic|ard:z=[12],lambda=[1-3]|ard:J=1\\+2|maxpro:z=[0-9.]{1,3})",
        "constraint = (-?[0-9.]{1,3} ){1,3}<= -?[0-9.]{1,3}",
        "probe_vertices = (true|false|yes|maybe)",
        "out_dir = [a-z/ ]{0,8}",
        "report = (ard:J=1|d:linear|maxpro)",
        "[#;].{0,10}",
        ".{0,12}",
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn config_text(lines in prop::collection::vec(config_line(), 0..14)) {
        config_round_trip(&lines.join("\n"));
    }

    #[test]
    fn design_text(
        levels in any::<u8>(),
        header in "(x1,x2|x2,x1|x1,x2,x1\\.idx,x2\\.idx|x1|x1,x2,y)",
        rows in prop::collection::vec("-?[01]?\\.?[0-9]{0,14}(,-?[0-9.]{1,6}){1,3}", 0..6),
    ) {
        design_round_trip(levels, &format!("{header}\n{}", rows.join("\n")));
    }

    #[test]
    fn trace_text(rows in prop::collection::vec("-?[0-9.]{1,5}(e[0-9])?,(-?inf|-?[0-9.]{1,8}|NaN),[0-2]", 0..6)) {
        trace_round_trip(&format!("elapsed,best_value,restart\n{}", rows.join("\n")));
    }

    #[test]
    fn criterion_text(dim in any::<u8>(), text in "(d|ard|maxpro|x)(:([a-zA-Z]{1,6}(=[0-9.e+-]{0,6})?,?){0,4})?") {
        criterion_round_trip(dim, &text);
    }
}
