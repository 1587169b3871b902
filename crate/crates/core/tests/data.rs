use std::fs;
use std::path::PathBuf;

use ndarray::{array, Array2};
use proptest::prelude::*;
use qvp_core::data::{ingest_csv, read_table, Rescaling};
use qvp_core::Error;

fn write_tmp(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qvp-data-tests-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

#[test]
fn three_columns_give_two_covariates() {
    let p = write_tmp("ok.csv", "y,a,b\n1,0,10\n2,5,20\n3,10,40\n");
    let d = ingest_csv(&p, "y").unwrap();
    assert_eq!(d.covariates, vec!["a", "b"]);
    assert_eq!(d.n_covariates(), 2);
    assert_eq!(d.y.to_vec(), vec![1.0, 2.0, 3.0]);
    assert_eq!(d.x.column(0).to_vec(), vec![-1.0, 0.0, 1.0]);
    assert!((d.x[[1, 1]] - (-1.0 + 2.0 * 10.0 / 30.0)).abs() < 1e-15);
    // targets by 1-based position too
    let by_pos = ingest_csv(&p, "2").unwrap();
    assert_eq!(by_pos.target, "a");
    assert!(ingest_csv(&p, "zz").is_err());
}

#[test]
fn missing_and_non_numeric_cells_are_located() {
    let p = write_tmp("na.csv", "y,a\n1,2\n3,NA\n");
    match ingest_csv(&p, "y") {
        Err(Error::Ingestion { row, column, .. }) => assert_eq!((row, column.as_str()), (3, "a")),
        other => panic!("expected ingestion error, got {other:?}"),
    }
    let p = write_tmp("empty.csv", "y,a\n1,\n");
    assert!(matches!(ingest_csv(&p, "y"), Err(Error::Ingestion { row: 2, .. })));
    let p = write_tmp("text.csv", "y,a\n1,2\nx,3\n");
    match ingest_csv(&p, "y") {
        Err(Error::Ingestion { row, column, message }) => {
            assert_eq!((row, column.as_str()), (3, "y"));
            assert!(message.contains("'x'"));
        }
        other => panic!("expected ingestion error, got {other:?}"),
    }
    let p = write_tmp("ragged.csv", "y,a\n1,2,3\n");
    assert!(read_table(&p).is_err());
    let p = write_tmp("header.csv", "y,a\n");
    assert!(read_table(&p).is_err());
}

#[test]
fn constant_column_maps_to_zero() {
    let p = write_tmp("const.csv", "y,a,c\n1,0,7\n2,1,7\n");
    let d = ingest_csv(&p, "y").unwrap();
    assert!(d.rescaling.is_degenerate(1));
    assert!(d.x.column(1).iter().all(|v| *v == 0.0));
}

proptest! {
    #[test]
    fn rescaled_fit_matches_original_scale(
        vals in prop::collection::vec(-100.0f64..100.0, 6..40),
        a in -2.0f64..2.0,
        b0 in -2.0f64..2.0,
        b1 in -2.0f64..2.0,
    ) {
        let t = vals.len() / 2;
        let x = Array2::from_shape_vec((t, 2), vals[..2 * t].to_vec()).unwrap();
        let r = Rescaling::fit(x.view());
        let xs = r.apply(x.view()).unwrap();
        for (j, col) in xs.columns().into_iter().enumerate() {
            if !r.is_degenerate(j) {
                let lo = col.fold(f64::INFINITY, |m, v| m.min(*v));
                let hi = col.fold(f64::NEG_INFINITY, |m, v| m.max(*v));
                prop_assert!((lo + 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
            }
        }
        // a + xs b on the rescaled design equals a' + x b' on the original
        let beta = array![b0, b1];
        let (ao, bo) = r.back_transform(a, beta.view());
        for i in 0..t {
            let scaled = a + xs.row(i).dot(&beta);
            let orig = ao + x.row(i).dot(&bo);
            prop_assert!((scaled - orig).abs() < 1e-9 * (1.0 + orig.abs()));
        }
    }
}
