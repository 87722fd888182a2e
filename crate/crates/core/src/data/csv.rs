//! CSV load/save for datasets.
//!
//! Layout: header `f_0..f_{d-1}` then optional `label` then optional
//! `weak_0..weak_{t-1}`; one row per sample, plain commas, no quoting.
//! Floats are written with Rust's shortest-round-trip formatting, so a
//! save/load cycle reproduces every 64-bit value exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::labels::LabelMatrix;
use crate::matrix::Matrix;
use crate::scalar::{cast, to_f64, Scalar};

use super::Dataset;

pub fn save_csv<T: Scalar>(dataset: &Dataset<T>, path: impl AsRef<Path>) -> Result<()> {
    if dataset.weak.any_absent() {
        return Err(Error::config(
            "cannot save a dataset with absence-masked weak labels; the CSV schema has no mask column",
        ));
    }
    let d = dataset.dim();
    let t = dataset.num_sources();

    let mut header: Vec<String> = (0..d).map(|c| format!("f_{c}")).collect();
    if dataset.ground_truth.is_some() {
        header.push("label".to_string());
    }
    header.extend((0..t).map(|s| format!("weak_{s}")));

    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for r in 0..dataset.len() {
        let mut cells: Vec<String> = dataset
            .features
            .row(r)
            .iter()
            .map(|&x| format!("{}", to_f64(x)))
            .collect();
        if let Some(gt) = &dataset.ground_truth {
            cells.push(format!("{}", gt[r]));
        }
        for s in 0..t {
            cells.push(format!("{}", dataset.weak.value(r, s)));
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }

    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

pub fn load_csv<T: Scalar>(path: impl AsRef<Path>) -> Result<Dataset<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();

    let (_, header) = lines.next().ok_or_else(|| Error::Csv {
        line: 1,
        column: 1,
        message: "empty file".into(),
    })?;
    let columns: Vec<&str> = header.split(',').collect();

    // expected order: f_0..f_{d-1}, [label], [weak_0..weak_{t-1}]
    let mut d = 0;
    let mut pos = 0;
    while pos < columns.len() && columns[pos] == format!("f_{d}") {
        d += 1;
        pos += 1;
    }
    if d == 0 {
        return Err(Error::Csv {
            line: 1,
            column: 1,
            message: format!("expected feature column f_0, found `{}`", columns[0]),
        });
    }
    let has_label = pos < columns.len() && columns[pos] == "label";
    if has_label {
        pos += 1;
    }
    let mut t = 0;
    while pos < columns.len() && columns[pos] == format!("weak_{t}") {
        t += 1;
        pos += 1;
    }
    if pos != columns.len() {
        return Err(Error::Csv {
            line: 1,
            column: pos + 1,
            message: format!("unexpected column `{}`", columns[pos]),
        });
    }

    let mut features: Vec<T> = Vec::new();
    let mut gt: Vec<u8> = Vec::new();
    let mut weak: Vec<u8> = Vec::new();
    let mut n = 0;
    for (line_idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let line_no = line_idx + 1;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != columns.len() {
            return Err(Error::Csv {
                line: line_no,
                column: cells.len(),
                message: format!(
                    "ragged row: expected {} cells, found {}",
                    columns.len(),
                    cells.len()
                ),
            });
        }
        for (c, cell) in cells.iter().enumerate().take(d) {
            let v: f64 = cell.parse().map_err(|_| Error::Csv {
                line: line_no,
                column: c + 1,
                message: format!("non-numeric cell `{cell}`"),
            })?;
            features.push(cast(v));
        }
        let mut pos = d;
        if has_label {
            gt.push(parse_binary(cells[pos], line_no, pos + 1)?);
            pos += 1;
        }
        for s in 0..t {
            weak.push(parse_binary(cells[pos + s], line_no, pos + s + 1)?);
        }
        n += 1;
    }

    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    let weak = if t == 0 {
        LabelMatrix::empty(n)
    } else {
        LabelMatrix::new(n, t, weak)
    };
    Dataset::new(
        Matrix::from_vec(n, d, features),
        if has_label { Some(gt) } else { None },
        weak,
        name,
    )
}

fn parse_binary(cell: &str, line: usize, column: usize) -> Result<u8> {
    match cell {
        "0" => Ok(0),
        "1" => Ok(1),
        _ => Err(Error::Csv {
            line,
            column,
            message: format!("expected binary 0/1, found `{cell}`"),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;

    fn tmp(name: &str) -> std::path::PathBuf {
        let mut p = std::env::temp_dir();
        p.push(format!("admoe-csv-{}-{name}", std::process::id()));
        p
    }

    #[test]
    fn hand_written_file_round_trips() {
        let path = tmp("hand.csv");
        fs::write(
            &path,
            "f_0,f_1,label,weak_0\n0.25,-1.5,1,0\n3,0.1,0,1\n1e-3,2.75,0,0\n",
        )
        .unwrap();
        let ds: Dataset<f64> = load_csv(&path).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.num_sources(), 1);
        assert_eq!(ds.ground_truth.as_ref().unwrap(), &vec![1, 0, 0]);

        let path2 = tmp("hand2.csv");
        save_csv(&ds, &path2).unwrap();
        let ds2: Dataset<f64> = load_csv(&path2).unwrap();
        assert_eq!(ds.features, ds2.features);
        assert_eq!(ds.weak, ds2.weak);
        fs::remove_file(path).ok();
        fs::remove_file(path2).ok();
    }

    #[test]
    fn file_without_weak_columns_is_accepted() {
        let path = tmp("noweak.csv");
        fs::write(&path, "f_0,label\n1.0,0\n2.0,1\n").unwrap();
        let ds: Dataset<f64> = load_csv(&path).unwrap();
        assert_eq!(ds.num_sources(), 0);
        fs::remove_file(path).ok();
    }

    #[test]
    fn errors_carry_row_and_column() {
        let path = tmp("bad.csv");
        fs::write(&path, "f_0,label\n1.0,0\nxyz,1\n").unwrap();
        match load_csv::<f64>(&path) {
            Err(Error::Csv { line, column, .. }) => {
                assert_eq!((line, column), (3, 1));
            }
            other => panic!("expected Csv error, got {other:?}"),
        }
        fs::remove_file(path).ok();

        let path = tmp("ragged.csv");
        fs::write(&path, "f_0,f_1\n1.0,2.0\n1.0\n").unwrap();
        assert!(matches!(load_csv::<f64>(&path), Err(Error::Csv { line: 3, .. })));
        fs::remove_file(path).ok();

        let path = tmp("nonbin.csv");
        fs::write(&path, "f_0,label\n1.0,2\n").unwrap();
        assert!(matches!(load_csv::<f64>(&path), Err(Error::Csv { line: 2, column: 2, .. })));
        fs::remove_file(path).ok();
    }

    #[test]
    fn generated_file_round_trips_with_exact_floats() {
        let mut rng = rng_from_seed(5);
        let n = 500;
        let features = Matrix::from_fn(n, 4, |_, _| {
            (rng.random::<f64>() - 0.5) * 10f64.powi((rng.random::<u32>() % 7) as i32 - 3)
        });
        let gt: Vec<u8> = (0..n).map(|_| rng.random::<bool>() as u8).collect();
        let weak = LabelMatrix::from_columns(&[
            (0..n).map(|_| rng.random::<bool>() as u8).collect(),
            (0..n).map(|_| rng.random::<bool>() as u8).collect(),
        ]);
        let ds = Dataset::new(features, Some(gt), weak, "gen").unwrap();

        let path = tmp("gen.csv");
        save_csv(&ds, &path).unwrap();
        let back: Dataset<f64> = load_csv(&path).unwrap();
        assert_eq!(back.len(), n);
        assert_eq!(ds.features, back.features);
        assert_eq!(ds.ground_truth, back.ground_truth);
        assert_eq!(ds.weak, back.weak);
        fs::remove_file(path).ok();
    }

    #[test]
    fn masked_dataset_refuses_to_save() {
        let mut ds = Dataset::new(
            Matrix::from_fn(3, 1, |r, _| r as f64),
            Some(vec![0, 1, 0]),
            LabelMatrix::from_columns(&[vec![0, 1, 1]]),
            "masked",
        )
        .unwrap();
        let mut weak = ds.weak.clone();
        weak.push_masked_source(&[1, 0, 0], &[true, false, true]);
        ds.weak = weak;
        ds.source_weights = vec![1.0, 5.0];
        assert!(save_csv(&ds, tmp("masked.csv")).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn float_cells_are_lossless(bits in proptest::array::uniform8(any::<u64>())) {
            // arbitrary finite doubles, including subnormals and -0.0
            let vals: Vec<f64> = bits
                .iter()
                .map(|&b| f64::from_bits(b))
                .map(|x| if x.is_finite() { x } else { 1.25 })
                .collect();
            let features = Matrix::from_vec(4, 2, vals.clone());
            let ds = Dataset::new(features, None, LabelMatrix::empty(4), "pp").unwrap();
            let path = tmp(&format!("pp-{}.csv", bits[0]));
            save_csv(&ds, &path).unwrap();
            let back: Dataset<f64> = load_csv(&path).unwrap();
            std::fs::remove_file(&path).ok();
            for (a, b) in ds.features.data().iter().zip(back.features.data()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
