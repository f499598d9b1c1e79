use std::path::PathBuf;

use gsgp::data::{parse_csv, train_size, write_csv};
use gsgp::{load_csv, split_70_30, Dataset, Error, Matrix};
use proptest::prelude::*;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/fixtures").join(name)
}

#[test]
fn airfoil_excerpt_loads_with_header() {
    let d = load_csv(fixture("airfoil_excerpt.csv"), true).unwrap();
    assert_eq!((d.rows(), d.n_features()), (10, 5));
    assert_eq!(d.inputs.row(0), &[800.0, 0.0, 0.3048, 71.3, 0.00266337]);
    assert_eq!(d.targets[0], 126.201);
}

#[test]
fn concrete_excerpt_loads_with_header() {
    let d = load_csv(fixture("concrete_excerpt.csv"), true).unwrap();
    assert_eq!((d.rows(), d.n_features()), (10, 8));
    assert_eq!(d.inputs.row(2)[7], 270.0);
}

#[test]
fn header_read_as_data_is_a_parse_error_on_line_one() {
    match load_csv(fixture("airfoil_excerpt.csv"), false) {
        Err(Error::ParseCell { line, column, .. }) => assert_eq!((line, column), (1, 1)),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn ragged_rows_report_their_line() {
    match parse_csv("t", "a,b,y\n1,2,3\n4,5\n", true) {
        Err(Error::RaggedRow { line, expected, found }) => assert_eq!((line, expected, found), (3, 3, 2)),
        other => panic!("expected a ragged row error, got {other:?}"),
    }
}

#[test]
fn split_of_airfoil_excerpt_is_7_and_3() {
    let d = load_csv(fixture("airfoil_excerpt.csv"), true).unwrap();
    let s = split_70_30(&d, 1);
    assert_eq!((s.train.rows(), s.test.rows()), (7, 3));
    assert_eq!(train_size(1503), 1052);
}

prop_compose! {
    fn dataset()(rows in 2usize..20, cols in 1usize..5)
        (values in prop::collection::vec(-1e6f64..1e6, rows * cols),
         targets in prop::collection::vec(-1e6f64..1e6, rows),
         cols in Just(cols), rows in Just(rows)) -> Dataset {
        Dataset::new("p", Matrix::new(rows, cols, values).unwrap(), targets).unwrap()
    }
}

proptest! {
    #[test]
    fn csv_round_trip_is_exact(d in dataset()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        write_csv(&d, &path).unwrap();
        let back = load_csv(&path, false).unwrap();
        prop_assert_eq!(back.inputs, d.inputs);
        prop_assert_eq!(back.targets, d.targets);
    }
}
