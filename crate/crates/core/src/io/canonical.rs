//! The canonical `CPDQS 1` text format.
//!
//! ```text
//! CPDQS 1
//! 2            # n
//! 2 2          # block sizes
//! u 1 1 1      # u <i> <r> <value>
//! p 1 2 1 2 1  # p <i> <j> <r> <s> <value>, i < j
//! ```
//!
//! Indices are 1-based, `#` starts a comment, omitted energies are zero and
//! a pair block is stored as soon as one of its entries appears.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{InstanceSpec, PairBlock};

pub const HEADER: &str = "CPDQS 1";

pub fn parse_instance(path: impl AsRef<Path>) -> Result<InstanceSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_instance_str(&text, &instance_name(path)).map_err(|e| e.with_path(path))
}

/// File stem used as the instance name.
pub fn instance_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "instance".to_string())
}

pub fn parse_instance_str(text: &str, name: &str) -> Result<InstanceSpec> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (line, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty file, expected header 'CPDQS 1'"))?;
    if header.split_whitespace().collect::<Vec<_>>() != ["CPDQS", "1"] {
        return Err(Error::parse(
            line,
            format!("expected header 'CPDQS 1', found '{header}'"),
        ));
    }

    let (line, n_text) = lines
        .next()
        .ok_or_else(|| Error::parse(line, "missing position count"))?;
    let n: usize = parse_field(n_text, line, "position count")?;
    if n == 0 {
        return Err(Error::parse(line, "position count must be positive"));
    }

    let (line, sizes_text) = lines
        .next()
        .ok_or_else(|| Error::parse(line, "missing block sizes"))?;
    let sizes = sizes_text
        .split_whitespace()
        .map(|t| parse_field::<usize>(t, line, "block size"))
        .collect::<Result<Vec<_>>>()?;
    if sizes.len() != n {
        return Err(Error::parse(
            line,
            format!("expected {n} block sizes, found {}", sizes.len()),
        ));
    }
    if sizes.contains(&0) {
        return Err(Error::parse(line, "block sizes must be positive"));
    }

    let mut offsets = vec![0usize; n];
    for i in 1..n {
        offsets[i] = offsets[i - 1] + sizes[i - 1];
    }
    let mut unary = vec![0.0; sizes.iter().sum()];
    let mut pairs: BTreeMap<(usize, usize), PairBlock> = BTreeMap::new();
    let mut seen_unary = HashSet::new();
    let mut seen_pair = HashSet::new();

    for (line, record) in lines {
        let fields: Vec<&str> = record.split_whitespace().collect();
        match fields[0] {
            "u" => {
                if fields.len() != 4 {
                    return Err(Error::parse(line, "unary record needs 'u <i> <r> <value>'"));
                }
                let i = parse_index(fields[1], n, line, "position")?;
                let r = parse_index(fields[2], sizes[i], line, "rotamer")?;
                let value = parse_energy(fields[3], line)?;
                if !seen_unary.insert((i, r)) {
                    return Err(Error::parse(
                        line,
                        format!("duplicate unary record u {} {}", i + 1, r + 1),
                    ));
                }
                unary[offsets[i] + r] = value;
            }
            "p" => {
                if fields.len() != 6 {
                    return Err(Error::parse(
                        line,
                        "pair record needs 'p <i> <j> <r> <s> <value>'",
                    ));
                }
                let i = parse_index(fields[1], n, line, "position")?;
                let j = parse_index(fields[2], n, line, "position")?;
                if i >= j {
                    return Err(Error::parse(
                        line,
                        format!(
                            "pair record requires i < j, got i = {} and j = {}",
                            i + 1,
                            j + 1
                        ),
                    ));
                }
                let r = parse_index(fields[3], sizes[i], line, "rotamer")?;
                let s = parse_index(fields[4], sizes[j], line, "rotamer")?;
                let value = parse_energy(fields[5], line)?;
                if !seen_pair.insert((i, j, r, s)) {
                    return Err(Error::parse(
                        line,
                        format!(
                            "duplicate pair record p {} {} {} {}",
                            i + 1,
                            j + 1,
                            r + 1,
                            s + 1
                        ),
                    ));
                }
                pairs
                    .entry((i, j))
                    .or_insert_with(|| PairBlock::zeros(sizes[i], sizes[j]))
                    .set(r, s, value);
            }
            other => {
                return Err(Error::parse(line, format!("unknown record type '{other}'")));
            }
        }
    }

    InstanceSpec::new(name, sizes, unary, pairs)
}

/// Serializes every unary entry and every entry of each stored pair block,
/// so that parsing the output rebuilds an identical instance.
pub fn to_canonical_string(spec: &InstanceSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "# {}", spec.name());
    let _ = writeln!(out, "{}", spec.n());
    let sizes: Vec<String> = spec.block_sizes().iter().map(usize::to_string).collect();
    let _ = writeln!(out, "{}", sizes.join(" "));
    for i in 0..spec.n() {
        for (r, v) in spec.unary_block(i).iter().enumerate() {
            let _ = writeln!(out, "u {} {} {}", i + 1, r + 1, v);
        }
    }
    for (&(i, j), block) in spec.pairwise() {
        for r in 0..block.rows() {
            for (s, v) in block.row(r).iter().enumerate() {
                let _ = writeln!(out, "p {} {} {} {} {}", i + 1, j + 1, r + 1, s + 1, v);
            }
        }
    }
    out
}

pub fn write_instance(spec: &InstanceSpec, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_canonical_string(spec))?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(text: &str, line: usize, what: &str) -> Result<T> {
    text.trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("invalid {what} '{text}'")))
}

fn parse_index(text: &str, bound: usize, line: usize, what: &str) -> Result<usize> {
    let idx: usize = parse_field(text, line, what)?;
    if idx == 0 || idx > bound {
        return Err(Error::parse(
            line,
            format!("{what} index {idx} outside 1..={bound}"),
        ));
    }
    Ok(idx - 1)
}

fn parse_energy(text: &str, line: usize) -> Result<f64> {
    let v: f64 = parse_field(text, line, "energy")?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("energy '{text}' is not finite")));
    }
    Ok(v)
}
