//! Flat `key = value` experiment configs. `#` starts a comment; unknown or
//! repeated keys are parse errors.
//!
//! Experiment keys: `m` (integer or `auto`), `landmark_method`, `bandwidth`
//! (`heuristic` or a number), `labeled_per_run`, `repeats`, `seed`, `lambda`,
//! `lambda_grid` (comma list or `default`), `c`, `svm_iters`, `side_labels`,
//! `pinv_tol`, `max_iters`, `grad_norm_tol`, `armijo_a0`, `max_backtracks`.
//!
//! Synthetic data keys: `data.kind` (`blobs`, `moons` or `xor`), `data.n`,
//! `data.d`, `data.classes`, `data.separation`, `data.noise`, `data.seed`.

use std::collections::BTreeMap;
use std::str::FromStr;

use super::experiment::{Bandwidth, ExperimentConfig, LambdaChoice};
use super::synth::{BlobSpec, Generator};
use crate::error::{Error, Result};
use crate::select::LambdaGrid;

#[derive(Debug, Clone)]
pub struct ConfigFile {
    pub experiment: ExperimentConfig,
    pub generator: Option<Generator>,
}

struct Entry {
    line: usize,
    value: String,
}

fn parsed<T: FromStr>(e: &Entry, key: &str) -> Result<T> {
    e.value.parse().map_err(|_| Error::Parse {
        line: e.line,
        msg: format!("bad value '{}' for {key}", e.value),
    })
}

pub fn parse_config(text: &str) -> Result<ConfigFile> {
    let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| Error::Parse {
            line,
            msg: format!("expected 'key = value', got '{body}'"),
        })?;
        let key = key.trim().to_string();
        if let Some(prev) = entries.get(&key) {
            return Err(Error::Parse {
                line,
                msg: format!("{key} already set on line {}", prev.line),
            });
        }
        entries.insert(
            key,
            Entry {
                line,
                value: value.trim().to_string(),
            },
        );
    }

    let mut cfg = ExperimentConfig::default();
    let mut blob = BlobSpec::default();
    let mut kind: Option<Entry> = None;
    let mut lambda_line = None;
    for (key, e) in entries {
        match key.as_str() {
            "m" => {
                cfg.landmark_count = if e.value == "auto" {
                    None
                } else {
                    Some(parsed(&e, &key)?)
                }
            }
            "landmark_method" => {
                cfg.landmark_method = e.value.parse().map_err(|err: Error| Error::Parse {
                    line: e.line,
                    msg: err.to_string(),
                })?
            }
            "bandwidth" => {
                cfg.bandwidth = if e.value == "heuristic" {
                    Bandwidth::Heuristic
                } else {
                    Bandwidth::Fixed(parsed(&e, &key)?)
                }
            }
            "labeled_per_run" => cfg.labeled_per_run = parsed(&e, &key)?,
            "repeats" => cfg.repeats = parsed(&e, &key)?,
            "seed" => cfg.seed = parsed(&e, &key)?,
            "lambda" | "lambda_grid" => {
                if let Some(prev) = lambda_line {
                    return Err(Error::Parse {
                        line: e.line,
                        msg: format!("lambda and lambda_grid both given (also line {prev})"),
                    });
                }
                lambda_line = Some(e.line);
                cfg.lambda = if key == "lambda" {
                    LambdaChoice::Fixed(parsed(&e, &key)?)
                } else {
                    LambdaChoice::Grid(parse_grid(&e.value).map_err(|err| Error::Parse {
                        line: e.line,
                        msg: err.to_string(),
                    })?)
                };
            }
            "c" => cfg.svm.c = parsed(&e, &key)?,
            "svm_iters" => cfg.svm.iterations = parsed(&e, &key)?,
            "side_labels" => cfg.side_labels = parsed(&e, &key)?,
            "pinv_tol" => cfg.pinv_tol = parsed(&e, &key)?,
            "max_iters" => cfg.learn.max_iters = parsed(&e, &key)?,
            "grad_norm_tol" => cfg.learn.grad_norm_tol = Some(parsed(&e, &key)?),
            "armijo_a0" => cfg.learn.armijo_a0 = Some(parsed(&e, &key)?),
            "max_backtracks" => cfg.learn.max_backtracks = parsed(&e, &key)?,
            "data.kind" => kind = Some(e),
            "data.n" => blob.n = parsed(&e, &key)?,
            "data.d" => blob.d = parsed(&e, &key)?,
            "data.classes" => blob.classes = parsed(&e, &key)?,
            "data.separation" => blob.separation = parsed(&e, &key)?,
            "data.noise" => blob.noise = parsed(&e, &key)?,
            "data.seed" => blob.seed = parsed(&e, &key)?,
            _ => {
                return Err(Error::Parse {
                    line: e.line,
                    msg: format!("unknown key '{key}'"),
                })
            }
        }
    }
    let generator = match kind {
        None => None,
        Some(e) => Some(match e.value.as_str() {
            "blobs" => Generator::Blobs(blob),
            "moons" => Generator::Moons {
                n: blob.n,
                noise: blob.noise,
                seed: blob.seed,
            },
            "xor" => Generator::Xor {
                n: blob.n,
                noise: blob.noise,
                seed: blob.seed,
            },
            other => {
                return Err(Error::Parse {
                    line: e.line,
                    msg: format!("unknown data.kind '{other}'"),
                })
            }
        }),
    };
    Ok(ConfigFile {
        experiment: cfg,
        generator,
    })
}

/// Comma-separated λ values, or `default` for the logarithmic grid.
pub fn parse_grid(s: &str) -> Result<LambdaGrid> {
    if s.trim() == "default" {
        return Ok(LambdaGrid::default_log());
    }
    let values = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::input(format!("bad lambda '{}'", t.trim())))
        })
        .collect::<Result<Vec<_>>>()?;
    LambdaGrid::new(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landmarks::LandmarkMethod;

    #[test]
    fn full_config() {
        let text = "# demo\nm = 20\nlandmark_method = random  # inline\nbandwidth = 2.5\n\
                    labeled_per_run = 20\nrepeats = 3\nseed = 9\nlambda_grid = 0.001, 0.1, 10\n\
                    c = 2\nside_labels = false\ndata.kind = blobs\ndata.n = 100\ndata.d = 3\n";
        let f = parse_config(text).unwrap();
        let c = &f.experiment;
        assert_eq!(c.landmark_count, Some(20));
        assert_eq!(c.landmark_method, LandmarkMethod::Random);
        assert_eq!(c.bandwidth, Bandwidth::Fixed(2.5));
        assert_eq!((c.labeled_per_run, c.repeats, c.seed), (20, 3, 9));
        assert_eq!(c.lambda, LambdaChoice::Grid(LambdaGrid::new(vec![1e-3, 0.1, 10.0]).unwrap()));
        assert_eq!(c.svm.c, 2.0);
        assert!(!c.side_labels);
        match &f.generator {
            Some(Generator::Blobs(b)) => assert_eq!((b.n, b.d), (100, 3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn errors_carry_lines() {
        let cases = [
            ("m = 3\nbogus = 1\n", 2),
            ("m = x\n", 1),
            ("\n\nnot a pair\n", 3),
            ("m = 3\nm = 4\n", 2),
            ("lambda = 1\nlambda_grid = 1,2\n", 2),
            ("lambda_grid = 2,1\n", 1),
            ("data.kind = spirals\n", 1),
        ];
        for (text, line) in cases {
            match parse_config(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?} gave {other:?}"),
            }
        }
    }

    #[test]
    fn defaults() {
        let f = parse_config("# nothing\n").unwrap();
        assert!(f.generator.is_none());
        assert_eq!(f.experiment.landmark_count, None);
        assert!(matches!(f.experiment.lambda, LambdaChoice::Grid(_)));
    }
}
