//! Plain-text weight snapshots.
//!
//! ```text
//! mlp-snapshot 1
//! input_dim 7
//! hidden 10 10
//! output_dim 2
//! activation tanh
//! params 212
//! <one parameter per line>
//! ```
//!
//! Parameters are printed with Rust's shortest round-trip float formatting,
//! so reading a snapshot restores bit-identical weights.

use std::fmt::Write as _;

use super::{Activation, Mlp, MlpArchitecture, NeuralError};

const MAGIC: &str = "mlp-snapshot 1";

pub fn write_snapshot(net: &Mlp) -> String {
    let arch = net.architecture();
    let mut out = String::new();
    let hidden: Vec<String> = arch.hidden_layers.iter().map(|h| h.to_string()).collect();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "input_dim {}", arch.input_dim).unwrap();
    writeln!(out, "hidden {}", hidden.join(" ")).unwrap();
    writeln!(out, "output_dim {}", arch.output_dim).unwrap();
    writeln!(out, "activation {}", arch.hidden_activation.name()).unwrap();
    writeln!(out, "params {}", net.params().len()).unwrap();
    for p in net.params() {
        writeln!(out, "{p:?}").unwrap();
    }
    out
}

fn bad(msg: impl Into<String>) -> NeuralError {
    NeuralError::Snapshot(msg.into())
}

fn header<'a>(lines: &mut impl Iterator<Item = &'a str>, key: &str) -> Result<&'a str, NeuralError> {
    let line = lines.next().ok_or_else(|| bad(format!("missing {key}")))?;
    let rest = line
        .strip_prefix(key)
        .ok_or_else(|| bad(format!("expected {key}, found {line:?}")))?;
    Ok(rest.trim())
}

fn parse_usize(s: &str) -> Result<usize, NeuralError> {
    s.parse().map_err(|_| bad(format!("not an integer: {s:?}")))
}

pub fn read_snapshot(text: &str) -> Result<Mlp, NeuralError> {
    let mut lines = text.lines();
    if lines.next() != Some(MAGIC) {
        return Err(bad("missing header"));
    }
    let input_dim = parse_usize(header(&mut lines, "input_dim")?)?;
    let hidden_layers = header(&mut lines, "hidden")?
        .split_whitespace()
        .map(parse_usize)
        .collect::<Result<Vec<_>, _>>()?;
    let output_dim = parse_usize(header(&mut lines, "output_dim")?)?;
    let act = header(&mut lines, "activation")?;
    let hidden_activation =
        Activation::from_name(act).ok_or_else(|| bad(format!("unknown activation {act:?}")))?;
    let count = parse_usize(header(&mut lines, "params")?)?;
    let params = lines
        .filter(|l| !l.is_empty())
        .map(|l| l.parse::<f64>().map_err(|_| bad(format!("not a number: {l:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    if params.len() != count {
        return Err(bad(format!("expected {count} params, found {}", params.len())));
    }
    let arch = MlpArchitecture {
        input_dim,
        hidden_layers,
        output_dim,
        hidden_activation,
    };
    Mlp::from_params(arch, params)
}
