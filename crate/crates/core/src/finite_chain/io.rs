//! Plain-text chain format: the state count `n`, then `n` rows of the
//! generator, then one row of `n` reference weights. Blank lines and `#`
//! comments are ignored.

use std::fmt::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::finite_chain::model::ChainModel;

pub fn chain_to_text(chain: &ChainModel) -> String {
    let n = chain.n();
    let mut out = format!("{n}\n");
    let row = |vals: &mut dyn Iterator<Item = f64>| vals.map(|v| format!("{v:e}")).collect::<Vec<_>>().join(" ");
    for i in 0..n {
        let _ = writeln!(out, "{}", row(&mut chain.generator().row(i).iter().copied()));
    }
    let _ = writeln!(out, "{}", row(&mut chain.weights().iter().copied()));
    out
}

fn numbers(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>().map_err(|_| Error::Parse(format!("line {lineno}: cannot read '{tok}' as a number")))
        })
        .collect()
}

pub fn chain_from_text(text: &str) -> Result<ChainModel> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (lineno, first) = lines.next().ok_or_else(|| Error::Parse("empty chain file".into()))?;
    let n: usize =
        first.parse().map_err(|_| Error::Parse(format!("line {lineno}: expected the state count, got '{first}'")))?;
    if n == 0 {
        return Err(Error::Parse("state count must be positive".into()));
    }
    let mut rows = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        let (lineno, line) =
            lines.next().ok_or_else(|| Error::Parse(format!("expected {} data rows, found {}", n + 1, rows.len())))?;
        let row = numbers(line, lineno)?;
        if row.len() != n {
            return Err(Error::Parse(format!("line {lineno}: expected {n} numbers, got {}", row.len())));
        }
        rows.push(row);
    }
    if let Some((lineno, _)) = lines.next() {
        return Err(Error::Parse(format!("line {lineno}: unexpected trailing data")));
    }
    let m = DVector::from_vec(rows.pop().expect("n + 1 rows"));
    let g = DMatrix::from_row_iterator(n, n, rows.into_iter().flatten());
    ChainModel::new(g, m)
}

/// A chain file's contents or `random:n:seed` (a sub-Markov chain from
/// [`ChainModel::random_sub_markov`]).
pub fn parse_chain_source(source: &str, read_file: impl FnOnce(&str) -> std::io::Result<String>) -> Result<ChainModel> {
    if let Some(rest) = source.strip_prefix("random:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let bad = || Error::Parse(format!("expected random:n:seed, got '{source}'"));
        if parts.len() != 2 {
            return Err(bad());
        }
        let n: usize = parts[0].parse().map_err(|_| bad())?;
        let seed: u64 = parts[1].parse().map_err(|_| bad())?;
        return ChainModel::random_sub_markov(n, seed);
    }
    let text = read_file(source).map_err(|e| Error::Parse(format!("cannot read {source}: {e}")))?;
    chain_from_text(&text)
}
