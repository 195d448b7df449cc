use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kernel::{ClassId, DataMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
    Svmlight,
}

impl std::str::FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(DataFormat::Csv),
            "svmlight" | "libsvm" => Ok(DataFormat::Svmlight),
            other => Err(Error::input(format!(
                "unknown data format '{other}' (expected csv or svmlight)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: DataMatrix,
    pub y: Vec<ClassId>,
    pub name: String,
}

impl Dataset {
    pub fn new(x: DataMatrix, y: Vec<ClassId>, name: impl Into<String>) -> Result<Self> {
        if y.len() != x.rows() {
            return Err(Error::input(format!(
                "{} labels for {} samples",
                y.len(),
                x.rows()
            )));
        }
        Ok(Dataset {
            x,
            y,
            name: name.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Distinct class ids, ascending.
    pub fn classes(&self) -> Vec<ClassId> {
        self.y.iter().copied().collect::<BTreeSet<_>>().into_iter().collect()
    }
}

pub fn load_dataset(path: impl AsRef<Path>, format: DataFormat) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "data".into());
    match format {
        DataFormat::Csv => parse_csv(&text, &name),
        DataFormat::Svmlight => parse_svmlight(&text, &name),
    }
}

fn parse_label(tok: &str, line: usize) -> Result<ClassId> {
    let v: f64 = tok.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad label '{tok}'"),
    })?;
    if v.fract() != 0.0 || !v.is_finite() || v.abs() > 9.0e15 {
        return Err(Error::Parse {
            line,
            msg: format!("class label '{tok}' is not an integer"),
        });
    }
    Ok(v as ClassId)
}

fn parse_value(tok: &str, line: usize) -> Result<f64> {
    match tok.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            line,
            msg: format!("bad feature value '{tok}'"),
        }),
    }
}

/// Label in column 0, features after it. A first row that does not parse as
/// numbers is taken as a header.
pub fn parse_csv(text: &str, name: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut labels = Vec::new();
    let mut values = Vec::new();
    let mut dim = None;
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(k + 1, |p| p.line() as usize);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        if k == 0 && rec.iter().any(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        if rec.len() < 2 {
            return Err(Error::Parse {
                line,
                msg: "expected a label followed by at least one feature".into(),
            });
        }
        let d = rec.len() - 1;
        match dim {
            None => dim = Some(d),
            Some(expected) if expected != d => {
                return Err(Error::input(format!(
                    "row {} (line {line}) has {d} features, expected {expected}",
                    labels.len()
                )))
            }
            _ => {}
        }
        labels.push(parse_label(&rec[0], line)?);
        for f in rec.iter().skip(1) {
            values.push(parse_value(f, line)?);
        }
    }
    let d = dim.ok_or_else(|| Error::input("no data rows"))?;
    Dataset::new(DataMatrix::new(labels.len(), d, values)?, labels, name)
}

/// `label idx:val idx:val ...` with 1-based feature indices; `#` starts a
/// comment and `qid:` tokens are ignored. Missing features are zero and the
/// dimension is the largest index seen.
pub fn parse_svmlight(text: &str, name: &str) -> Result<Dataset> {
    let mut labels = Vec::new();
    let mut sparse: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut dim = 0usize;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut toks = body.split_whitespace();
        let label = parse_label(toks.next().expect("non-empty line"), line)?;
        let mut row = Vec::new();
        for tok in toks {
            let (idx, val) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line,
                msg: format!("feature '{tok}' is not of the form index:value"),
            })?;
            if idx == "qid" {
                continue;
            }
            let idx: usize = idx.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("bad feature index '{idx}'"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    line,
                    msg: "feature indices start at 1".into(),
                });
            }
            if row.iter().any(|&(i, _)| i == idx - 1) {
                return Err(Error::Parse {
                    line,
                    msg: format!("feature {idx} given twice"),
                });
            }
            row.push((idx - 1, parse_value(val, line)?));
            dim = dim.max(idx);
        }
        labels.push(label);
        sparse.push(row);
    }
    if labels.is_empty() {
        return Err(Error::input("no data rows"));
    }
    let dim = dim.max(1);
    let mut values = vec![0.0; labels.len() * dim];
    for (r, row) in sparse.iter().enumerate() {
        for &(c, v) in row {
            values[r * dim + c] = v;
        }
    }
    Dataset::new(DataMatrix::new(labels.len(), dim, values)?, labels, name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_basic() {
        let ds = parse_csv("1,0.5,0.5\n2,1.0,0.0", "t").unwrap();
        assert_eq!((ds.x.rows(), ds.x.cols()), (2, 2));
        assert_eq!(ds.classes(), vec![1, 2]);
        assert_eq!(ds.x.row(1), &[1.0, 0.0]);
    }

    #[test]
    fn csv_header_and_blank_lines() {
        let ds = parse_csv("label,a,b\n-1, 0.5 ,2\n\n+1,3,4\n", "t").unwrap();
        assert_eq!(ds.y, vec![-1, 1]);
        assert_eq!(ds.x.row(0), &[0.5, 2.0]);
    }

    #[test]
    fn csv_ragged_row_is_named() {
        let err = parse_csv("1,0,0\n2,1,1\n1,2,2,2\n", "t").unwrap_err();
        match err {
            Error::Input(msg) => assert!(msg.contains("row 2") && msg.contains("line 3"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_bad_value_has_line_number() {
        let err = parse_csv("1,0,0\n2,x,1\n", "t").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
        assert!(matches!(parse_csv("1.5,0\n", "t"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn svmlight_densifies() {
        let ds = parse_svmlight("1 1:0.5 3:2.0", "t").unwrap();
        assert_eq!(ds.x.row(0), &[0.5, 0.0, 2.0]);
        let ds = parse_svmlight("# header\n+1 qid:3 2:1 # c\n-1 1:4\n", "t").unwrap();
        assert_eq!(ds.y, vec![1, -1]);
        assert_eq!(ds.x.row(0), &[0.0, 1.0]);
        assert_eq!(ds.x.row(1), &[4.0, 0.0]);
    }

    #[test]
    fn svmlight_errors() {
        assert!(matches!(parse_svmlight("1 1:0\n1 0:3\n", "t"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_svmlight("1 1:a\n", "t"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_svmlight("1 13\n", "t"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_svmlight("1 2:1 2:3\n", "t"), Err(Error::Parse { line: 1, .. })));
        assert!(parse_svmlight("\n# only comments\n", "t").is_err());
    }
}
