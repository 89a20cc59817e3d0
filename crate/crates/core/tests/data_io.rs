mod common;

use std::fs;
use std::path::Path;

use common::bundle;
use smixup::data::{
    generate_sbm, load_dataset, load_dataset_with_meta, save_dataset, FeatureFormat, SbmSpec,
};
use smixup::graph::{build_graph, mean_homophily, GraphInput, Splits};
use smixup::linalg::{Csr, Matrix};
use smixup::Error;

fn check_counts(name: &str, n: usize, f: usize, c: usize, splits: (usize, usize, usize), reported: Option<usize>) {
    let Some(dir) = bundle(name) else {
        eprintln!("skipping {name}: bundle not found under {}", common::data_root().display());
        return;
    };
    let (g, meta, report) = load_dataset_with_meta::<f32>(&dir).unwrap();
    assert_eq!((g.num_nodes(), g.num_features(), g.num_classes()), (n, f, c));
    let s = g.splits();
    assert_eq!((s.train.len(), s.val.len(), s.test.len()), splits);
    assert_eq!(meta.reported_edge_count, reported);
    let stats = g.build_stats();
    assert_eq!(
        g.num_edges() + stats.self_loops_dropped + stats.duplicates_dropped,
        report.edge_records
    );
}

#[test]
fn cora_counts() {
    check_counts("cora", 2708, 1433, 7, (140, 500, 1000), Some(5429));
}

#[test]
fn citeseer_counts() {
    check_counts("citeseer", 3327, 3703, 6, (120, 500, 1000), Some(4732));
}

#[test]
fn pubmed_counts() {
    check_counts("pubmed", 19717, 500, 3, (60, 500, 1000), Some(44338));
}

fn tiny() -> smixup::Graph64 {
    let x = Matrix::from_rows(&[
        vec![1.0, 0.0, 0.5],
        vec![0.0, 0.0, 0.0],
        vec![0.25, -3.0, 0.0],
        vec![0.0, 1e-7, 2.0],
    ])
    .unwrap();
    build_graph(GraphInput {
        name: "tiny".into(),
        num_classes: 2,
        class_names: vec!["a".into(), "b".into()],
        features: Csr::from_dense(&x),
        labels: vec![Some(0), Some(1), None, Some(0)],
        edges: vec![(0, 1), (1, 2), (3, 0)],
        splits: Splits {
            train: vec![0],
            val: vec![1],
            test: vec![3],
        },
    })
    .unwrap()
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn round_trip_is_exact() {
    for format in [FeatureFormat::Csv, FeatureFormat::F32] {
        let tmp = tempfile::tempdir().unwrap();
        let a = tmp.path().join("a");
        let b = tmp.path().join("b");
        let g = tiny();
        save_dataset(&g, &a, format).unwrap();
        let back = load_dataset::<f64>(&a).unwrap();
        assert_eq!(back.edges(), g.edges());
        assert_eq!(back.labels(), g.labels());
        assert_eq!(back.splits(), g.splits());
        assert_eq!(back.class_names(), g.class_names());
        if format == FeatureFormat::Csv {
            assert_eq!(back.features().values(), g.features().values());
        }
        save_dataset(&back, &b, format).unwrap();
        assert_eq!(read_all(&a), read_all(&b));
    }
}

fn corrupt(edit: impl FnOnce(&Path)) -> Error {
    let tmp = tempfile::tempdir().unwrap();
    save_dataset(&tiny(), tmp.path(), FeatureFormat::Csv).unwrap();
    edit(tmp.path());
    load_dataset::<f64>(tmp.path()).unwrap_err()
}

fn expect_parse(err: Error, file: &str, line: usize, needle: &str) {
    match &err {
        Error::Parse { path, line: l, message } => {
            assert!(path.ends_with(file), "{err}");
            assert_eq!(*l, line, "{err}");
            assert!(message.contains(needle), "{err}");
        }
        other => panic!("expected parse error, got {other}"),
    }
}

fn replace(dir: &Path, file: &str, from: &str, to: &str) {
    let p = dir.join(file);
    let s = fs::read_to_string(&p).unwrap();
    assert!(s.contains(from));
    fs::write(&p, s.replacen(from, to, 1)).unwrap();
}

#[test]
fn missing_files_are_io_errors() {
    for file in ["meta.json", "features.csv", "labels.csv", "edges.csv", "splits.json"] {
        let err = corrupt(|d| fs::remove_file(d.join(file)).unwrap());
        match err {
            Error::Io { path, .. } => assert!(path.ends_with(file)),
            other => panic!("{file}: {other}"),
        }
    }
}

#[test]
fn non_numeric_feature_cell_names_line_and_column() {
    let err = corrupt(|d| replace(d, "features.csv", "0.25,-3", "0.25,abc"));
    expect_parse(err, "features.csv", 3, "column 2: non-numeric cell `abc`");
}

#[test]
fn non_finite_feature_cell_rejected() {
    let err = corrupt(|d| replace(d, "features.csv", "0.25,-3", "0.25,NaN"));
    expect_parse(err, "features.csv", 3, "non-finite");
}

#[test]
fn feature_row_count_mismatch() {
    let err = corrupt(|d| replace(d, "meta.json", "\"num_nodes\": 4", "\"num_nodes\": 5"));
    expect_parse(err, "features.csv", 4, "4 feature rows, meta declares num_nodes = 5");
    let err = corrupt(|d| replace(d, "meta.json", "\"num_nodes\": 4", "\"num_nodes\": 3"));
    expect_parse(err, "features.csv", 4, "more than num_nodes = 3");
}

#[test]
fn feature_width_mismatch() {
    let err = corrupt(|d| replace(d, "features.csv", "0.25,-3,0", "0.25,-3"));
    expect_parse(err, "features.csv", 3, "expected 3 columns, found 2");
}

#[test]
fn binary_feature_size_mismatch() {
    let err = corrupt(|d| {
        replace(d, "meta.json", "\"csv\"", "\"f32\"");
        fs::write(d.join("features.f32"), [0u8; 20]).unwrap();
    });
    expect_parse(err, "features.f32", 0, "20 bytes, expected 48");
}

#[test]
fn label_errors() {
    let err = corrupt(|d| replace(d, "labels.csv", "1,1", "1,x"));
    expect_parse(err, "labels.csv", 2, "non-numeric");
    let err = corrupt(|d| replace(d, "labels.csv", "1,1", "1,2"));
    expect_parse(err, "labels.csv", 2, "label 2 out of range");
    let err = corrupt(|d| replace(d, "labels.csv", "1,1", "0,1"));
    expect_parse(err, "labels.csv", 2, "node 0 labelled twice");
    let err = corrupt(|d| replace(d, "labels.csv", "1,1", "9,1"));
    expect_parse(err, "labels.csv", 2, "node id 9 out of range");
}

#[test]
fn edge_errors() {
    let err = corrupt(|d| replace(d, "edges.csv", "1,2", "1,7"));
    expect_parse(err, "edges.csv", 3, "target 7 out of range");
    let err = corrupt(|d| replace(d, "edges.csv", "1,2", "1;2"));
    expect_parse(err, "edges.csv", 3, "expected 2 columns, found 1");
    let err = corrupt(|d| replace(d, "edges.csv", "1,2\n", ""));
    expect_parse(err, "edges.csv", 2, "2 edge records, meta declares 3");
}

#[test]
fn malformed_json_reports_line() {
    let err = corrupt(|d| replace(d, "meta.json", "\"name\"", "name"));
    expect_parse(err, "meta.json", 2, "");
    let err = corrupt(|d| fs::write(d.join("splits.json"), "{\"train\": [0],\n \"val\": [1],\n \"test\": oops}").unwrap());
    expect_parse(err, "splits.json", 3, "");
}

#[test]
fn class_name_count_mismatch() {
    let err = corrupt(|d| replace(d, "meta.json", "\"num_classes\": 2", "\"num_classes\": 3"));
    expect_parse(err, "meta.json", 0, "2 class names for num_classes = 3");
}

#[test]
fn split_errors_name_splits_file() {
    let err = corrupt(|d| fs::write(d.join("splits.json"), r#"{"train":[0],"val":[2],"test":[3]}"#).unwrap());
    assert!(matches!(&err, Error::Validation { location, .. } if location.contains("splits.json")), "{err}");
    assert!(err.to_string().contains("has no label"), "{err}");
    let err = corrupt(|d| fs::write(d.join("splits.json"), r#"{"train":[0],"val":[0],"test":[3]}"#).unwrap());
    assert!(err.to_string().contains("node 0 is in both train and val"), "{err}");
}

#[test]
fn sbm_homophily_calibrates() {
    for seed in 0..5 {
        let spec = SbmSpec {
            num_nodes: 2000,
            num_classes: 4,
            homophily: 0.8,
            mean_degree: 10.0,
            seed,
            ..SbmSpec::default()
        };
        let g = generate_sbm::<f32>(&spec).unwrap();
        let h = mean_homophily(&g).unwrap();
        assert!((h - 0.8).abs() <= 0.03, "seed {seed}: {h}");
        let mean_degree = 2.0 * g.num_edges() as f64 / 2000.0;
        assert!((mean_degree - 10.0).abs() < 0.5, "seed {seed}: {mean_degree}");
    }
}
