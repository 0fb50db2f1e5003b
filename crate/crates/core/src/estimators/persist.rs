//! Versioned flat-text model files.
//!
//! One `key: value` pair per line. Numbers are written in Rust's shortest
//! round-trip form, so a reloaded model is bit-identical. Matrices are
//! written as `rows cols v…` in row-major order.
//!
//! ```text
//! wellcast-model v1
//! kind: ridge
//! alpha: 0.2
//! descriptor: ridge(alpha=0.2)
//! look_back: 15
//! ...
//! ```

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::{Activation, Estimator, FitInfo, LinearKind, LinearModel, MlpModel, TrainedModel};
use crate::error::{Error, Result};
use crate::windowing::{ColumnKey, Normalizer, Scope, WindowConfig};

const MAGIC: &str = "wellcast-model v1";

fn join(v: impl IntoIterator<Item = f64>) -> String {
    v.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn matrix(m: &DMatrix<f64>) -> String {
    let mut s = format!("{} {}", m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            s.push(' ');
            s.push_str(&m[(r, c)].to_string());
        }
    }
    s
}

fn keys(k: &[ColumnKey]) -> String {
    k.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",")
}

pub(super) fn to_text(m: &TrainedModel) -> String {
    let mut lines = vec![MAGIC.to_string()];
    let mut put = |k: &str, v: String| lines.push(format!("{k}: {v}"));
    match &m.estimator {
        Estimator::Linear(l) => {
            put("kind", l.kind.as_str().into());
            put("alpha", l.alpha.to_string());
        }
        Estimator::Mlp(n) => {
            put("kind", "mlp".into());
            put("activation", n.activation.as_str().into());
            put("hidden_size", n.hidden_size().to_string());
        }
    }
    put("descriptor", m.descriptor.clone());
    put("train_rows", m.train_rows.to_string());
    put("look_back", m.window.look_back.to_string());
    put("look_forward", m.window.look_forward.to_string());
    put("scope", m.window.scope.as_str().into());
    put("x_keys", keys(&m.normalizer.x_keys));
    put("y_keys", keys(&m.normalizer.y_keys));
    put("x_mean", join(m.normalizer.x_mean.iter().copied()));
    put("x_std", join(m.normalizer.x_std.iter().copied()));
    put("y_mean", join(m.normalizer.y_mean.iter().copied()));
    put("y_std", join(m.normalizer.y_std.iter().copied()));
    match &m.estimator {
        Estimator::Linear(l) => {
            put("rank_deficient", l.info.rank_deficient.to_string());
            put("iterations", l.info.iterations.to_string());
            put("converged", l.info.converged.to_string());
            put("weights", matrix(&l.weights));
            put("intercepts", join(l.intercepts.iter().copied()));
        }
        Estimator::Mlp(n) => {
            put("w_in", matrix(&n.w_in));
            put("b_hidden", join(n.b_hidden.iter().copied()));
            put("w_out", matrix(&n.w_out));
            put("b_out", join(n.b_out.iter().copied()));
        }
    }
    let mut text = lines.join("\n");
    text.push('\n');
    text
}

struct Fields<'a> {
    map: HashMap<&'a str, (usize, &'a str)>,
}

impl<'a> Fields<'a> {
    fn get(&self, key: &str) -> Result<(usize, &'a str)> {
        self.map.get(key).copied().ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("model file is missing `{key}`"),
        })
    }

    fn str(&self, key: &str) -> Result<&'a str> {
        Ok(self.get(key)?.1)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let (line, v) = self.get(key)?;
        v.trim().parse().map_err(|_| Error::Parse {
            line,
            message: format!("bad value for `{key}`: {v:?}"),
        })
    }

    fn floats(&self, key: &str) -> Result<Vec<f64>> {
        let (line, v) = self.get(key)?;
        v.split_whitespace()
            .map(|t| {
                t.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    message: format!("bad number {t:?} in `{key}`"),
                })
            })
            .collect()
    }

    fn matrix(&self, key: &str) -> Result<DMatrix<f64>> {
        let (line, _) = self.get(key)?;
        let v = self.floats(key)?;
        let bad = || Error::Parse {
            line,
            message: format!("malformed matrix `{key}`"),
        };
        if v.len() < 2 {
            return Err(bad());
        }
        let (r, c) = (v[0] as usize, v[1] as usize);
        if v.len() != 2 + r * c {
            return Err(bad());
        }
        Ok(DMatrix::from_row_slice(r, c, &v[2..]))
    }

    fn keys(&self, key: &str) -> Result<Vec<ColumnKey>> {
        let (line, v) = self.get(key)?;
        if v.trim().is_empty() {
            return Ok(Vec::new());
        }
        v.split(',')
            .map(|k| {
                ColumnKey::parse(k.trim()).ok_or_else(|| Error::Parse {
                    line,
                    message: format!("bad column key {k:?}"),
                })
            })
            .collect()
    }
}

pub(super) fn from_text(text: &str) -> Result<TrainedModel> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == MAGIC => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("not a model file (expected `{MAGIC}`)"),
            })
        }
    }
    let mut map = HashMap::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let (k, v) = line.split_once(": ").ok_or_else(|| Error::Parse {
            line: i + 1,
            message: "expected `key: value`".into(),
        })?;
        map.insert(k.trim(), (i + 1, v));
    }
    let f = Fields { map };
    let scope_str = f.str("scope")?;
    let window = WindowConfig::new(
        f.parse("look_back")?,
        f.parse("look_forward")?,
        Scope::parse(scope_str.trim()).ok_or_else(|| Error::Parse {
            line: f.get("scope").map(|x| x.0).unwrap_or(0),
            message: format!("unknown scope {scope_str:?}"),
        })?,
    )?;
    let normalizer = Normalizer {
        x_keys: f.keys("x_keys")?,
        y_keys: f.keys("y_keys")?,
        x_mean: f.floats("x_mean")?,
        x_std: f.floats("x_std")?,
        y_mean: f.floats("y_mean")?,
        y_std: f.floats("y_std")?,
    };
    let kind = f.str("kind")?.trim();
    let estimator = match kind {
        "ols" | "ridge" | "lasso" => Estimator::Linear(LinearModel {
            kind: match kind {
                "ols" => LinearKind::Ols,
                "ridge" => LinearKind::Ridge,
                _ => LinearKind::Lasso,
            },
            alpha: f.parse("alpha")?,
            weights: f.matrix("weights")?,
            intercepts: DVector::from_vec(f.floats("intercepts")?),
            info: FitInfo {
                rank_deficient: f.parse("rank_deficient")?,
                iterations: f.parse("iterations")?,
                converged: f.parse("converged")?,
            },
        }),
        "mlp" => {
            let act = f.str("activation")?.trim();
            Estimator::Mlp(MlpModel {
                activation: Activation::parse(act).ok_or_else(|| Error::Parse {
                    line: 0,
                    message: format!("unknown activation {act:?}"),
                })?,
                w_in: f.matrix("w_in")?,
                b_hidden: DVector::from_vec(f.floats("b_hidden")?),
                w_out: f.matrix("w_out")?,
                b_out: DVector::from_vec(f.floats("b_out")?),
            })
        }
        other => {
            return Err(Error::Parse {
                line: 0,
                message: format!("unknown model kind {other:?}"),
            })
        }
    };
    let nx = normalizer.x_keys.len();
    let ny = normalizer.y_keys.len();
    let consistent = normalizer.x_mean.len() == nx
        && normalizer.x_std.len() == nx
        && normalizer.y_mean.len() == ny
        && normalizer.y_std.len() == ny
        && estimator.n_inputs() == nx
        && estimator.n_outputs() == ny
        && match &estimator {
            Estimator::Linear(l) => l.intercepts.len() == ny,
            Estimator::Mlp(m) => {
                m.b_hidden.len() == m.hidden_size()
                    && m.w_out.nrows() == m.hidden_size()
                    && m.b_out.len() == ny
            }
        };
    if !consistent {
        return Err(Error::Schema("model file shapes are inconsistent".into()));
    }
    Ok(TrainedModel {
        window,
        normalizer,
        estimator,
        descriptor: f.str("descriptor")?.to_string(),
        train_rows: f.parse("train_rows")?,
    })
}
