//! Plain-text network format.
//!
//! ```text
//! # widths k_0, …, k_n
//! 1, 2, 1
//! relu
//! 1
//! -1
//! 0, 0
//! id
//! 1, 1
//! 0
//! ```
//!
//! After the width line each layer gives its activation (`relu` or `id`),
//! one line per weight row and a final bias line. Blank lines and anything
//! after `#` are ignored.

use crate::error::{Error, Result};
use crate::nn::{Activation, Layer, Network};

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_content(&mut self) -> Option<(usize, &'a str)> {
        for (i, raw) in self.inner.by_ref() {
            self.last = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if !body.is_empty() {
                return Some((i + 1, body));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.next_content().ok_or_else(|| Error::Parse {
            line: self.last + 1,
            msg: format!("unexpected end of input, expected {what}"),
        })
    }
}

fn parse_reals(line: usize, body: &str, expected: usize, what: &str) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(expected.min(4096));
    for tok in body.split(',') {
        let tok = tok.trim();
        let v: f64 =
            tok.parse().map_err(|_| Error::Parse { line, msg: format!("invalid number {tok:?} in {what}") })?;
        if !v.is_finite() {
            return Err(Error::Parse { line, msg: format!("non-finite number in {what}") });
        }
        out.push(v);
    }
    if out.len() != expected {
        return Err(Error::Parse { line, msg: format!("{what} has {} entries, expected {expected}", out.len()) });
    }
    Ok(out)
}

pub fn parse_network(src: &str) -> Result<Network> {
    let mut lines = Lines { inner: src.lines().enumerate(), last: 0 };
    let (wline, wbody) = lines.expect("layer widths")?;
    let mut widths = Vec::new();
    for tok in wbody.split(',') {
        let tok = tok.trim();
        let k: usize =
            tok.parse().map_err(|_| Error::Parse { line: wline, msg: format!("invalid layer width {tok:?}") })?;
        if k == 0 {
            return Err(Error::Parse { line: wline, msg: "layer width must be positive".into() });
        }
        widths.push(k);
    }
    if widths.len() < 2 {
        return Err(Error::Parse { line: wline, msg: "need at least input and output widths".into() });
    }
    let mut layers = Vec::with_capacity(widths.len() - 1);
    for pair in widths.windows(2) {
        let (k_in, k_out) = (pair[0], pair[1]);
        let (aline, abody) = lines.expect("activation")?;
        let activation = match abody.to_ascii_lowercase().as_str() {
            "relu" => Activation::ReLU,
            "id" | "identity" | "linear" => Activation::Id,
            other => return Err(Error::Parse { line: aline, msg: format!("unknown activation {other:?}") }),
        };
        let mut rows = Vec::with_capacity(k_out.min(4096));
        for _ in 0..k_out {
            let (l, body) = lines.expect("weight row")?;
            rows.push(parse_reals(l, body, k_in, "weight row")?);
        }
        let (bline, bbody) = lines.expect("bias")?;
        let bias = parse_reals(bline, bbody, k_out, "bias")?;
        let layer =
            Layer::from_rows(&rows, bias, activation).map_err(|e| Error::Parse { line: bline, msg: e.to_string() })?;
        layers.push(layer);
    }
    if let Some((l, _)) = lines.next_content() {
        return Err(Error::Parse { line: l, msg: "trailing content after last layer".into() });
    }
    Network::new(layers).map_err(|e| Error::Parse { line: wline, msg: e.to_string() })
}

pub fn write_network(net: &Network) -> String {
    let join = |v: &mut dyn Iterator<Item = String>| v.collect::<Vec<_>>().join(", ");
    let mut out = String::new();
    out.push_str(&join(&mut net.widths().iter().map(|k| k.to_string())));
    out.push('\n');
    for layer in net.layers() {
        out.push_str(layer.activation.name());
        out.push('\n');
        for i in 0..layer.output_dim() {
            out.push_str(&join(&mut (0..layer.input_dim()).map(|j| format!("{}", layer.weights[(i, j)]))));
            out.push('\n');
        }
        out.push_str(&join(&mut layer.bias.iter().map(|b| format!("{b}"))));
        out.push('\n');
    }
    out
}
