//! Network weight export/import.
//!
//! Plain text: one architecture header (`layers,4,24,24,2`) followed by one
//! record per parameter, `layer,kind,row,col,value`, where `kind` is
//! `weight` or `bias` (biases use column 0). Values use shortest
//! round-trip decimal formatting, so export → import reproduces the
//! network bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use aqil_core::{QNetwork, WeightKind, WeightRecord};

use crate::{io_err, parse_fail_at, AqilError};

/// Render a network as weight-file text.
pub fn weights_string(net: &QNetwork) -> String {
    let arch = net.arch();
    let mut out = String::with_capacity(48 * net.param_count() / 2 + 64);
    out.push_str("layers");
    for width in &arch {
        let _ = write!(out, ",{width}");
    }
    out.push('\n');
    for r in net.to_records() {
        let kind = match r.kind {
            WeightKind::Weight => "weight",
            WeightKind::Bias => "bias",
        };
        let _ = writeln!(out, "{},{},{},{},{}", r.layer, kind, r.row, r.col, r.value);
    }
    out
}

/// Write a network's weight file.
pub fn write_weights(path: &Path, net: &QNetwork) -> Result<(), AqilError> {
    std::fs::write(path, weights_string(net)).map_err(|e| io_err(path, e))
}

/// Read a weight file back into a network.
pub fn read_weights(path: &Path) -> Result<QNetwork, AqilError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_weights(&text, path)
}

/// Parse weight-file text.
pub fn parse_weights(text: &str, origin: &Path) -> Result<QNetwork, AqilError> {
    let mut lines = text.lines().enumerate();

    let arch: Vec<usize> = match lines.next() {
        Some((_, header)) => {
            let mut parts = header.trim_end().split(',');
            if parts.next() != Some("layers") {
                return parse_fail_at(origin, 1, format!("expected `layers,...`, got `{header}`"));
            }
            parts
                .map(|p| {
                    p.parse::<usize>()
                        .or_else(|_| parse_fail_at(origin, 1, format!("bad layer width `{p}`")))
                })
                .collect::<Result<_, _>>()?
        }
        None => return parse_fail_at(origin, 1, "empty file".into()),
    };

    let mut records = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return parse_fail_at(
                origin,
                line_no,
                format!("expected 5 fields, got {}", fields.len()),
            );
        }
        let kind = match fields[1] {
            "weight" => WeightKind::Weight,
            "bias" => WeightKind::Bias,
            other => return parse_fail_at(origin, line_no, format!("unknown kind `{other}`")),
        };
        let index = |pos: usize, what: &str| -> Result<usize, AqilError> {
            fields[pos].parse::<usize>().or_else(|_| {
                parse_fail_at(origin, line_no, format!("bad {what} `{}`", fields[pos]))
            })
        };
        records.push(WeightRecord {
            layer: index(0, "layer")?,
            kind,
            row: index(2, "row")?,
            col: index(3, "col")?,
            value: fields[4].parse::<f64>().or_else(|_| {
                parse_fail_at(origin, line_no, format!("bad value `{}`", fields[4]))
            })?,
        });
    }

    Ok(QNetwork::from_records(&arch, &records)?)
}
