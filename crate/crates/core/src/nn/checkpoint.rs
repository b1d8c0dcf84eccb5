//! Plain-text parameter dump.
//!
//! ```text
//! xchurn-mlp v1
//! layers 2
//! layer 3 4
//! <3 rows of 4 weights>
//! <1 row of 3 biases>
//! ...
//! ```
//!
//! Floats are written in shortest round-trip form, so reading a dump back
//! reproduces the parameters bit for bit.

use std::path::Path;

use ndarray::{Array1, Array2};

use super::mlp::{Layer, MlpParams};
use crate::error::{Error, Result};

const MAGIC: &str = "xchurn-mlp v1";

pub fn write_checkpoint(p: &MlpParams) -> String {
    let mut s = format!("{MAGIC}\nlayers {}\n", p.layers.len());
    let join = |it: &mut dyn Iterator<Item = &f64>| {
        it.map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" ")
    };
    for l in &p.layers {
        let (out, inp) = l.w.dim();
        s.push_str(&format!("layer {out} {inp}\n"));
        for row in l.w.rows() {
            s.push_str(&join(&mut row.iter()));
            s.push('\n');
        }
        s.push_str(&join(&mut l.b.iter()));
        s.push('\n');
    }
    s
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

fn parse_floats(line: Option<&str>, expected: usize) -> Result<Vec<f64>> {
    let line = line.ok_or_else(|| bad("unexpected end of file"))?;
    let vals = line
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| bad(format!("bad number `{t}`"))))
        .collect::<Result<Vec<_>>>()?;
    if vals.len() != expected {
        return Err(bad(format!("expected {expected} values, found {}", vals.len())));
    }
    Ok(vals)
}

pub fn read_checkpoint(text: &str) -> Result<MlpParams> {
    let mut lines = text.lines();
    if lines.next() != Some(MAGIC) {
        return Err(bad("missing header"));
    }
    let n: usize = lines
        .next()
        .and_then(|l| l.strip_prefix("layers "))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| bad("missing layer count"))?;
    let mut layers = Vec::with_capacity(n);
    for _ in 0..n {
        let head: Vec<usize> = lines
            .next()
            .and_then(|l| l.strip_prefix("layer "))
            .map(|l| l.split_whitespace().filter_map(|t| t.parse().ok()).collect())
            .ok_or_else(|| bad("missing layer header"))?;
        let [out, inp] = head[..] else {
            return Err(bad("layer header needs two sizes"));
        };
        let mut w = Vec::with_capacity(out * inp);
        for _ in 0..out {
            w.extend(parse_floats(lines.next(), inp)?);
        }
        let b = parse_floats(lines.next(), out)?;
        layers.push(Layer {
            w: Array2::from_shape_vec((out, inp), w).map_err(|e| bad(e.to_string()))?,
            b: Array1::from(b),
        });
    }
    if layers.is_empty() {
        return Err(bad("no layers"));
    }
    for pair in layers.windows(2) {
        if pair[0].w.nrows() != pair[1].w.ncols() {
            return Err(bad("layer sizes do not chain"));
        }
    }
    let p = MlpParams { layers };
    if !p.is_finite() {
        return Err(bad("non-finite parameter"));
    }
    Ok(p)
}

pub fn save_checkpoint(p: &MlpParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_checkpoint(p)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<MlpParams> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_checkpoint(&text)
}
