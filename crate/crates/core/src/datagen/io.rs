use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datagen::dataset::{Dataset, GeneratorConfig};
use crate::error::{invalid, Error, Result};

/// Contents of the JSON file written next to the split CSVs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSidecar {
    pub benchmark: String,
    pub config: GeneratorConfig,
    pub n_features: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub image_side: Option<usize>,
}

/// Formats rows as CSV with header `x0,...,x{d-1},y`.
///
/// Features use 17 significant digits so the text round-trips exactly;
/// labels are written as integers.
pub fn to_csv(x: &[Vec<f64>], y: &[f64]) -> String {
    let d = x.first().map(Vec::len).unwrap_or(0);
    let mut s = String::new();
    for j in 0..d {
        let _ = write!(s, "x{j},");
    }
    s.push_str("y\n");
    for (row, &label) in x.iter().zip(y) {
        for v in row {
            let _ = write!(s, "{v:.16e},");
        }
        let _ = writeln!(s, "{}", label as i64);
    }
    s
}

pub fn parse_csv(text: &str) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.last() != Some(&"y") {
        return Err(Error::Parse("CSV header must end with column y".into()));
    }
    let d = cols.len() - 1;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<&str> = line.split(',').collect();
        if vals.len() != d + 1 {
            return Err(Error::Parse(format!(
                "CSV line {} has {} fields, expected {}",
                ln + 2,
                vals.len(),
                d + 1
            )));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {}: {s:?}: {e}", ln + 2)))
        };
        x.push(vals[..d].iter().map(|s| parse(s)).collect::<Result<Vec<f64>>>()?);
        y.push(parse(vals[d])?);
    }
    Ok((x, y))
}

/// Paths `(train.csv, test.csv, sidecar.json)` for a dataset stem.
pub fn dataset_paths(dir: &Path, stem: &str) -> (PathBuf, PathBuf, PathBuf) {
    (
        dir.join(format!("{stem}_train.csv")),
        dir.join(format!("{stem}_test.csv")),
        dir.join(format!("{stem}.json")),
    )
}

/// Writes both splits and the sidecar; returns the file stem.
pub fn write_dataset(ds: &Dataset, dir: &Path) -> Result<String> {
    fs::create_dir_all(dir)?;
    let stem = ds.file_stem();
    let (train, test, side) = dataset_paths(dir, &stem);
    fs::write(train, to_csv(&ds.x_train, &ds.y_train))?;
    fs::write(test, to_csv(&ds.x_test, &ds.y_test))?;
    let meta = DatasetSidecar {
        benchmark: ds.benchmark.clone(),
        config: ds.config.clone(),
        n_features: ds.n_features(),
        n_train: ds.n_train(),
        n_test: ds.n_test(),
        image_side: ds.image_side,
    };
    fs::write(side, serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(stem)
}

/// Reads a dataset from its sidecar JSON (or any of its three files).
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| invalid(format!("bad dataset path {}", path.display())))?;
    let stem = name
        .strip_suffix("_train.csv")
        .or_else(|| name.strip_suffix("_test.csv"))
        .or_else(|| name.strip_suffix(".json"))
        .ok_or_else(|| invalid(format!("{name} is not a dataset file")))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let (train, test, side) = dataset_paths(dir, stem);
    let meta: DatasetSidecar = serde_json::from_str(&fs::read_to_string(side)?)?;
    let train = parse_csv(&fs::read_to_string(train)?)?;
    let test = parse_csv(&fs::read_to_string(test)?)?;
    Dataset::new(meta.benchmark, meta.config, train, test, meta.image_side)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn write_then_read() {
        let dir = tempfile::tempdir().unwrap();
        let ds = crate::datagen::gen_two_curves(2, 30, 3, 0.1, 0.01, 7).unwrap();
        let stem = write_dataset(&ds, dir.path()).unwrap();
        let (train, test, side) = dataset_paths(dir.path(), &stem);
        for p in [&train, &test, &side] {
            assert_eq!(read_dataset(p).unwrap(), ds);
        }
        assert!(read_dataset(&dir.path().join("other.txt")).is_err());
    }

    #[test]
    fn malformed_csv() {
        assert!(parse_csv("").is_err());
        assert!(parse_csv("x0,z\n1,1\n").is_err());
        assert!(parse_csv("x0,y\n1,2,3\n").is_err());
        assert!(parse_csv("x0,y\nabc,1\n").is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trips_exactly(
            x in proptest::collection::vec(proptest::collection::vec(proptest::num::f64::NORMAL, 3), 1..20),
        ) {
            let y: Vec<f64> = (0..x.len()).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
            let (x2, y2) = parse_csv(&to_csv(&x, &y)).unwrap();
            prop_assert_eq!(x2, x);
            prop_assert_eq!(y2, y);
        }
    }
}
