//! Adapter for instances from the public CPD benchmark archive.
//!
//! The archive ships weighted CSPs in the toulbar2 `.wcsp` layout:
//!
//! ```text
//! <name> <nvars> <max domain> <nfunctions> <upper bound>
//! <domain size of each variable>
//! <arity> <var>... <default cost> <ntuples>
//! <val>... <cost>            (ntuples lines)
//! ...
//! ```
//!
//! Variables and values are 0-based. Unary functions add to `a`, binary
//! functions add to the corresponding block of `B` (transposed when the scope
//! is listed in decreasing order), and nullary functions are constant offsets.
//! A constant is folded into every unary energy of the first position: each
//! feasible point selects exactly one rotamer there, so the objective of every
//! assignment shifts by exactly that constant. Costs at or above the upper
//! bound (forbidden tuples) are kept verbatim.
//!
//! Other layouts found in such archives (UAI Markov networks, JSON cost
//! function networks, LP/MPS) are detected and rejected by name.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::io::canonical;
use crate::model::{InstanceSpec, PairBlock};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FormatHint {
    #[default]
    Auto,
    Canonical,
    Wcsp,
}

impl FromStr for FormatHint {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" => Ok(FormatHint::Auto),
            "canonical" | "cpdqs" => Ok(FormatHint::Canonical),
            "wcsp" => Ok(FormatHint::Wcsp),
            other => Err(format!(
                "unknown format '{other}' (expected auto|canonical|wcsp)"
            )),
        }
    }
}

/// Layout recognized from the first lines of a file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DetectedFormat {
    Canonical,
    Wcsp,
    Unsupported(String),
}

impl fmt::Display for DetectedFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DetectedFormat::Canonical => f.write_str("canonical CPDQS text"),
            DetectedFormat::Wcsp => f.write_str("toulbar2 wcsp"),
            DetectedFormat::Unsupported(what) => f.write_str(what),
        }
    }
}

pub fn detect_format(text: &str) -> DetectedFormat {
    let mut lines = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty());
    let Some(first) = lines.next() else {
        return DetectedFormat::Unsupported("empty file".into());
    };
    let tokens: Vec<&str> = first.split_whitespace().collect();
    match tokens[0] {
        "CPDQS" => return DetectedFormat::Canonical,
        "MARKOV" | "BAYES" => {
            return DetectedFormat::Unsupported(format!("UAI {} network", tokens[0]))
        }
        t if t.starts_with('{') => {
            return DetectedFormat::Unsupported("JSON cost function network (cfn)".into())
        }
        "NAME" | "ROWS" => return DetectedFormat::Unsupported("MPS linear program".into()),
        t if t.eq_ignore_ascii_case("minimize") || t.starts_with('\\') => {
            return DetectedFormat::Unsupported("LP-format linear program".into())
        }
        _ => {}
    }
    let header_ok = tokens.len() >= 5
        && tokens[1..4].iter().all(|t| t.parse::<usize>().is_ok())
        && tokens[4].parse::<f64>().is_ok();
    if header_ok {
        let nvars: usize = tokens[1].parse().unwrap_or(0);
        if let Some(second) = lines.next() {
            let domains: Vec<&str> = second.split_whitespace().collect();
            if domains.len() == nvars && domains.iter().all(|t| t.parse::<usize>().is_ok()) {
                return DetectedFormat::Wcsp;
            }
        }
    }
    let preview: String = first.chars().take(40).collect();
    DetectedFormat::Unsupported(format!("unrecognized layout starting with '{preview}'"))
}

/// Loads a benchmark or canonical instance from disk.
pub fn import_benchmark(path: impl AsRef<Path>, hint: FormatHint) -> Result<InstanceSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let name = canonical::instance_name(path);
    import_str(&text, &name, hint).map_err(|e| e.with_path(path))
}

pub fn import_str(text: &str, name: &str, hint: FormatHint) -> Result<InstanceSpec> {
    let format = match hint {
        FormatHint::Canonical => DetectedFormat::Canonical,
        FormatHint::Wcsp => DetectedFormat::Wcsp,
        FormatHint::Auto => detect_format(text),
    };
    match format {
        DetectedFormat::Canonical => canonical::parse_instance_str(text, name),
        DetectedFormat::Wcsp => parse_wcsp(text, name),
        DetectedFormat::Unsupported(detected) => Err(Error::UnsupportedFormat { detected }),
    }
}

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .flat_map(|(k, l)| l.split_whitespace().map(move |t| (k + 1, t)))
            .collect();
        Self { items, pos: 0 }
    }

    fn line(&self) -> usize {
        self.items
            .get(self.pos)
            .or_else(|| self.items.last())
            .map_or(1, |(l, _)| *l)
    }

    fn next_raw(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let item = self.items.get(self.pos).copied().ok_or_else(|| {
            Error::parse(
                self.line(),
                format!("unexpected end of file, expected {what}"),
            )
        })?;
        self.pos += 1;
        Ok(item)
    }

    fn next<T: FromStr>(&mut self, what: &str) -> Result<T> {
        let (line, tok) = self.next_raw(what)?;
        tok.parse()
            .map_err(|_| Error::parse(line, format!("invalid {what} '{tok}'")))
    }

    fn next_cost(&mut self) -> Result<f64> {
        let (line, tok) = self.next_raw("cost")?;
        let v: f64 = tok
            .parse()
            .map_err(|_| Error::parse(line, format!("invalid cost '{tok}'")))?;
        if !v.is_finite() {
            return Err(Error::parse(line, format!("cost '{tok}' is not finite")));
        }
        Ok(v)
    }
}

fn parse_wcsp(text: &str, name: &str) -> Result<InstanceSpec> {
    let mut tok = Tokens::new(text);
    let _problem_name = tok.next_raw("problem name")?;
    let nvars: usize = tok.next("variable count")?;
    let _max_domain: usize = tok.next("maximum domain size")?;
    let nfuncs: usize = tok.next("cost function count")?;
    let _upper_bound = tok.next_cost()?;
    if nvars == 0 {
        return Err(Error::parse(1, "instance declares no variables"));
    }
    let sizes = (0..nvars)
        .map(|_| tok.next::<usize>("domain size"))
        .collect::<Result<Vec<_>>>()?;
    if let Some(i) = sizes.iter().position(|&d| d == 0) {
        return Err(Error::parse(
            tok.line(),
            format!("variable {i} has an empty domain"),
        ));
    }
    let mut offsets = vec![0usize; nvars];
    for i in 1..nvars {
        offsets[i] = offsets[i - 1] + sizes[i - 1];
    }
    let mut unary = vec![0.0; sizes.iter().sum()];
    let mut pairs: BTreeMap<(usize, usize), PairBlock> = BTreeMap::new();
    let mut constant = 0.0;

    for _ in 0..nfuncs {
        let line = tok.line();
        let (_, arity_tok) = tok.next_raw("arity")?;
        let arity: usize = arity_tok.parse().map_err(|_| Error::UnsupportedFormat {
            detected: format!("wcsp global cost function with arity '{arity_tok}' (line {line})"),
        })?;
        if arity > 2 {
            return Err(Error::UnsupportedFormat {
                detected: format!("wcsp cost function of arity {arity} (line {line})"),
            });
        }
        let scope = (0..arity)
            .map(|_| {
                let v: usize = tok.next("variable index")?;
                if v >= nvars {
                    Err(Error::parse(
                        line,
                        format!("variable index {v} outside 0..{nvars}"),
                    ))
                } else {
                    Ok(v)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let (_, default_tok) = tok.next_raw("default cost")?;
        // global cost functions put a keyword (optionally after -1) here
        let default = match default_tok.parse::<f64>() {
            Ok(v) if v >= 0.0 && v.is_finite() => v,
            _ => {
                return Err(Error::UnsupportedFormat {
                    detected: format!("wcsp global cost function '{default_tok}' (line {line})"),
                })
            }
        };
        let ntuples: usize = tok.next("tuple count")?;
        match scope.as_slice() {
            [] => {
                constant += default;
                for _ in 0..ntuples {
                    constant += tok.next_cost()? - default;
                }
            }
            &[i] => {
                let mut costs = vec![default; sizes[i]];
                for _ in 0..ntuples {
                    let r = domain_value(&mut tok, sizes[i])?;
                    costs[r] = tok.next_cost()?;
                }
                for (r, c) in costs.into_iter().enumerate() {
                    unary[offsets[i] + r] += c;
                }
            }
            &[i, j] => {
                if i == j {
                    return Err(Error::parse(
                        line,
                        format!("binary function on variable {i} twice"),
                    ));
                }
                let mut block = PairBlock::from_row_major(
                    sizes[i],
                    sizes[j],
                    vec![default; sizes[i] * sizes[j]],
                )?;
                for _ in 0..ntuples {
                    let r = domain_value(&mut tok, sizes[i])?;
                    let s = domain_value(&mut tok, sizes[j])?;
                    block.set(r, s, tok.next_cost()?);
                }
                let (key, block) = if i < j {
                    ((i, j), block)
                } else {
                    ((j, i), block.transpose())
                };
                match pairs.get_mut(&key) {
                    Some(existing) => {
                        for r in 0..block.rows() {
                            for s in 0..block.cols() {
                                existing.set(r, s, existing.get(r, s) + block.get(r, s));
                            }
                        }
                    }
                    None => {
                        pairs.insert(key, block);
                    }
                }
            }
            _ => unreachable!("arity checked above"),
        }
    }
    if tok.pos < tok.items.len() {
        return Err(Error::parse(
            tok.line(),
            format!("trailing data after {nfuncs} cost functions"),
        ));
    }
    if constant != 0.0 {
        unary[..sizes[0]].iter_mut().for_each(|a| *a += constant);
    }
    InstanceSpec::new(name, sizes, unary, pairs)
}

fn domain_value(tok: &mut Tokens<'_>, size: usize) -> Result<usize> {
    let line = tok.line();
    let v: usize = tok.next("domain value")?;
    if v >= size {
        return Err(Error::parse(
            line,
            format!("domain value {v} outside 0..{size}"),
        ));
    }
    Ok(v)
}
