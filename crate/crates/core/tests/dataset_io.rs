use std::fs;
use std::path::Path;

use pdf_core::dataset::{
    dataset_from_json, dataset_to_json, load_json, load_tudataset, save_json, synth_dataset, Dataset, Splits,
    SynthKind, Task,
};
use pdf_core::graph::NodeFeatures;
use pdf_core::Error;

fn write(dir: &Path, name: &str, suffix: &str, body: &str) {
    fs::write(dir.join(format!("{name}_{suffix}.txt")), body).unwrap();
}

fn fixture(a: &str, indicator: &str, labels: &str, node_labels: Option<&str>) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "T", "A", a);
    write(dir.path(), "T", "graph_indicator", indicator);
    write(dir.path(), "T", "graph_labels", labels);
    if let Some(nl) = node_labels {
        write(dir.path(), "T", "node_labels", nl);
    }
    dir
}

#[test]
fn duplicate_directed_pairs_collapse() {
    let dir = fixture("1, 2\n2, 1\n", "1\n1\n", "1\n", None);
    let ds = load_tudataset(dir.path(), "T").unwrap();
    assert_eq!(ds.len(), 1);
    let g = &ds.graphs()[0];
    assert_eq!(g.n(), 2);
    assert_eq!(g.edges().len(), 1);
    assert_eq!(ds.targets(), &[0.0]);
    assert_eq!(g.features(), &NodeFeatures::Labels(vec![0, 0]));
}

#[test]
fn class_labels_remap_by_sorted_value() {
    let dir = fixture("", "1\n2\n", "1\n-1\n", None);
    let ds = load_tudataset(dir.path(), "T").unwrap();
    assert_eq!(ds.len(), 2);
    assert_eq!(ds.targets(), &[1.0, 0.0]);
    assert_eq!(ds.task(), Task::Classification { num_classes: 2 });
}

#[test]
fn empty_edge_file_gives_isolated_node() {
    let dir = fixture("", "1\n", "3\n", None);
    let ds = load_tudataset(dir.path(), "T").unwrap();
    assert_eq!(ds.graphs()[0].n(), 1);
    assert!(ds.graphs()[0].edges().is_empty());
}

#[test]
fn malformed_line_reports_line_number() {
    let dir = fixture("1, 2\n2; 1\n", "1\n1\n", "1\n", None);
    match load_tudataset(dir.path(), "T") {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn label_count_mismatch_is_structural() {
    let dir = fixture("1, 2\n", "1\n1\n", "1\n2\n", None);
    assert!(matches!(load_tudataset(dir.path(), "T"), Err(Error::Structure(_))));
    let dir = fixture("1, 2\n", "1\n1\n", "1\n", Some("0\n"));
    assert!(matches!(load_tudataset(dir.path(), "T"), Err(Error::Structure(_))));
}

#[test]
fn cross_graph_edge_is_rejected() {
    let dir = fixture("1, 2\n", "1\n2\n", "0\n1\n", None);
    assert!(matches!(load_tudataset(dir.path(), "T"), Err(Error::Parse { line: 1, .. })));
}

fn sorted_edges(ds: &Dataset) -> Vec<Vec<(usize, usize, u64)>> {
    ds.graphs()
        .iter()
        .map(|g| {
            let mut e: Vec<_> = g
                .canonical_edges()
                .into_iter()
                .map(|(u, v, w)| (u, v, w.to_bits()))
                .collect();
            e.sort();
            e
        })
        .collect()
}

#[test]
fn tudataset_survives_json_round_trip() {
    let a = "1, 2\n2, 1\n2, 3\n3, 1\n4, 5\n5, 6\n6, 5\n";
    let dir = fixture(a, "1\n1\n1\n2\n2\n2\n", "2\n5\n", Some("0\n1\n2\n1\n1\n0\n"));
    let ds = load_tudataset(dir.path(), "T").unwrap();
    let path = dir.path().join("t.json");
    save_json(&ds, &path).unwrap();
    let back = load_json(&path).unwrap();
    assert_eq!(back.len(), ds.len());
    assert_eq!(back.targets(), ds.targets());
    assert_eq!(back.task(), ds.task());
    for (g, h) in ds.graphs().iter().zip(back.graphs()) {
        assert_eq!(g.n(), h.n());
        assert_eq!(g.features(), h.features());
    }
    assert_eq!(sorted_edges(&ds), sorted_edges(&back));
}

#[test]
fn json_fixture_parses_weights_features_and_splits() {
    let text = r#"{"task":"regression","graphs":[
        {"n":3,"edges":[[0,1,0.5],[1,2]],"node_features":[[1,0],[0,1],[1,1]],"target":1.5},
        {"n":1,"edges":[],"target":-2}],
        "splits":{"train":[0],"val":[1],"test":[]}}"#;
    let ds = dataset_from_json(text).unwrap();
    assert_eq!(ds.graphs()[0].edges()[0].weight, 0.5);
    assert_eq!(ds.graphs()[0].edges()[1].weight, 1.0);
    match ds.graphs()[0].features() {
        NodeFeatures::Dense(x) => assert_eq!(x.dim(), (3, 2)),
        other => panic!("expected dense features, got {other:?}"),
    }
    assert_eq!(ds.splits().train, vec![0]);
    let again = dataset_from_json(&dataset_to_json(&ds)).unwrap();
    assert_eq!(dataset_to_json(&again), dataset_to_json(&ds));
}

#[test]
fn json_rejects_invalid_graphs() {
    let self_loop = r#"{"task":"regression","graphs":[{"n":2,"edges":[[0,0]],"target":1}]}"#;
    assert!(dataset_from_json(self_loop).is_err());
    let negative = r#"{"task":"regression","graphs":[{"n":2,"edges":[[0,1,-1]],"target":1}]}"#;
    assert!(dataset_from_json(negative).is_err());
    let out_of_range = r#"{"task":"regression","graphs":[{"n":2,"edges":[[0,2]],"target":1}]}"#;
    assert!(dataset_from_json(out_of_range).is_err());
}

#[test]
fn synthetic_sets_round_trip_and_respect_splits() {
    for kind in [SynthKind::CycleVsPath, SynthKind::DegreeRegression] {
        let ds = synth_dataset(kind, 10, (4, 6), 3).unwrap();
        let s = ds.splits();
        assert_eq!(s.train.len() + s.val.len() + s.test.len(), 10);
        let back = dataset_from_json(&dataset_to_json(&ds)).unwrap();
        assert_eq!(dataset_to_json(&back), dataset_to_json(&ds));
    }
    let ds = synth_dataset(SynthKind::CycleVsPath, 10, (4, 6), 3).unwrap();
    let k = ds.clone().with_splits(Splits::kfold(10, 5, 2, 1).unwrap()).unwrap();
    assert_eq!(k.splits().test.len(), 2);
}
