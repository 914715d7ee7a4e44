//! Text formats: score tables, arc matrices, data CSV and arity sidecars.
//!
//! Every format starts with a `# format=1` comment line where comments are
//! legal. Score tables look like
//!
//! ```text
//! # format=1
//! 3
//! # node=0 epsilon=0 K=2 original=4 ground=1,2
//! A 4
//! -1.2345e1 0
//! -1.3e1 1 2
//! ...
//! ```
//!
//! with one block per node: a `name count` header followed by
//! `log_score k parent...` lines (0-based parent ids).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::nodeset::NodeSet;
use crate::pruning::{PrunedScoreTable, ScoreTables};
use crate::scoring::Dataset;

pub const FORMAT_LINE: &str = "# format=1";

fn check_format_comment(line: &str, lineno: usize) -> Result<()> {
    if let Some(v) = line.trim_start_matches('#').trim().strip_prefix("format=") {
        if v.trim() != "1" {
            return Err(Error::parse(lineno, format!("unsupported format version {v}")));
        }
    }
    Ok(())
}

fn fmt_score(v: f64) -> String {
    format!("{v:.16e}")
}

/// Serializes score tables, pruned or not.
pub fn write_score_tables(tables: &ScoreTables) -> String {
    let mut out = String::new();
    out.push_str(FORMAT_LINE);
    out.push('\n');
    let eps = tables.tables().iter().map(|t| t.epsilon).fold(0.0, f64::max);
    if eps > 0.0 {
        let k = tables.tables().iter().map(|t| t.k_eff).max().unwrap_or(0);
        let _ = writeln!(out, "# epsilon={eps:e} K={k}");
    }
    let _ = writeln!(out, "{}", tables.tables().len());
    for (t, name) in tables.tables().iter().zip(tables.names()) {
        let ground: Vec<String> = t.ground_set.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(
            out,
            "# node={} epsilon={:e} K={} original={} ground={}",
            t.node,
            t.epsilon,
            t.k_eff,
            t.original_len,
            ground.join(",")
        );
        let _ = writeln!(out, "{name} {}", t.len());
        for (s, v) in t.kept() {
            let _ = write!(out, "{} {}", fmt_score(*v), s.len());
            for p in s.iter() {
                let _ = write!(out, " {p}");
            }
            out.push('\n');
        }
    }
    out
}

#[derive(Default)]
struct BlockMeta {
    epsilon: Option<f64>,
    k: Option<usize>,
    original: Option<usize>,
    ground: Option<Vec<usize>>,
}

fn parse_meta(body: &str, lineno: usize) -> Result<BlockMeta> {
    let mut m = BlockMeta::default();
    for kv in body.split_whitespace() {
        let Some((k, v)) = kv.split_once('=') else { continue };
        let bad = |what: &str| Error::parse(lineno, format!("bad {what} value {v:?}"));
        match k {
            "epsilon" => m.epsilon = Some(v.parse().map_err(|_| bad("epsilon"))?),
            "K" => m.k = Some(v.parse().map_err(|_| bad("K"))?),
            "original" => m.original = Some(v.parse().map_err(|_| bad("original"))?),
            "ground" => {
                m.ground = Some(if v.is_empty() {
                    Vec::new()
                } else {
                    v.split(',').map(|x| x.parse().map_err(|_| bad("ground"))).collect::<Result<_>>()?
                })
            }
            _ => {}
        }
    }
    Ok(m)
}

/// Parses the score-table format. Blocks without a metadata comment are
/// taken as unpruned tables whose ground set is the union of their sets.
pub fn parse_score_tables(text: &str) -> Result<ScoreTables> {
    let mut global_eps = 0.0;
    let mut pending = BlockMeta::default();
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut next_line = |pending: &mut BlockMeta, global_eps: &mut f64| -> Result<Option<(usize, &str)>> {
        for (no, l) in lines.by_ref() {
            if l.is_empty() {
                continue;
            }
            if let Some(body) = l.strip_prefix('#') {
                check_format_comment(l, no)?;
                let body = body.trim();
                if body.starts_with("node=") {
                    *pending = parse_meta(body, no)?;
                } else if body.starts_with("epsilon=") {
                    *global_eps = parse_meta(body, no)?.epsilon.unwrap_or(0.0);
                }
                continue;
            }
            return Ok(Some((no, l)));
        }
        Ok(None)
    };

    let (no, first) = next_line(&mut pending, &mut global_eps)?.ok_or_else(|| Error::parse(0, "empty score file"))?;
    let n: usize = first.parse().map_err(|_| Error::parse(no, format!("expected node count, got {first:?}")))?;
    let mut names = Vec::with_capacity(n);
    let mut tables = Vec::with_capacity(n);
    for node in 0..n {
        let (no, header) =
            next_line(&mut pending, &mut global_eps)?.ok_or_else(|| Error::parse(0, format!("missing block for node {node}")))?;
        let mut it = header.split_whitespace();
        let name = it.next().ok_or_else(|| Error::parse(no, "missing node name"))?.to_string();
        let count: usize = it
            .next()
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| Error::parse(no, format!("expected '<name> <count>', got {header:?}")))?;
        let meta = std::mem::take(&mut pending);
        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            let (no, l) = next_line(&mut pending, &mut global_eps)?
                .ok_or_else(|| Error::parse(0, format!("node {name}: expected {count} entries")))?;
            let mut it = l.split_whitespace();
            let v: f64 = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::parse(no, format!("bad score line {l:?}")))?;
            let k: usize = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::parse(no, format!("bad parent count in {l:?}")))?;
            let parents: Vec<usize> = it
                .map(|s| s.parse().map_err(|_| Error::parse(no, format!("bad parent id {s:?}"))))
                .collect::<Result<_>>()?;
            if parents.len() != k {
                return Err(Error::parse(no, format!("declared {k} parents, listed {}", parents.len())));
            }
            if let Some(&p) = parents.iter().find(|&&p| p >= n || p == node) {
                return Err(Error::parse(no, format!("parent id {p} invalid for node {node} of {n}")));
            }
            let s = NodeSet::from_nodes(n, parents.iter().copied());
            if s.len() != k {
                return Err(Error::parse(no, "repeated parent id"));
            }
            entries.push((s, v));
        }
        let ground = match meta.ground {
            Some(g) => NodeSet::from_nodes(n, g),
            None => entries.iter().fold(NodeSet::empty(n), |mut acc, (s, _)| {
                acc.union_with(s);
                acc
            }),
        };
        let k = meta.k.unwrap_or(ground.len());
        let eps = meta.epsilon.unwrap_or(global_eps);
        let original = meta.original.unwrap_or(count);
        if entries.iter().any(|(_, v)| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::parse(no, format!("node {name}: scores must be finite or -inf")));
        }
        tables.push(PrunedScoreTable::assemble(n, node, entries, eps, ground, k, original)?);
        names.push(name);
    }
    if let Some((no, l)) = next_line(&mut pending, &mut global_eps)? {
        return Err(Error::parse(no, format!("trailing content {l:?}")));
    }
    ScoreTables::new(names, tables)
}

/// Row-major `n × n` matrix as CSV: `# format=1`, any extra `# key=value`
/// comments, a header row of names, then one row per tail node.
pub fn arc_matrix_to_csv(names: &[String], values: &[f64], comments: &[String]) -> String {
    let n = names.len();
    let mut out = String::new();
    out.push_str(FORMAT_LINE);
    out.push('\n');
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    out.push_str(&names.join(","));
    out.push('\n');
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| format!("{}", values[i * n + j])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// An arc matrix read back from CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct ArcMatrix {
    pub names: Vec<String>,
    pub values: Vec<f64>,
    /// `key=value` pairs from comment lines.
    pub meta: Vec<(String, String)>,
}

impl ArcMatrix {
    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

pub fn parse_arc_matrix(text: &str) -> Result<ArcMatrix> {
    let mut meta = Vec::new();
    let mut names: Option<Vec<String>> = None;
    let mut values = Vec::new();
    let mut rows = 0;
    for (i, l) in text.lines().enumerate() {
        let no = i + 1;
        let l = l.trim();
        if l.is_empty() {
            continue;
        }
        if let Some(body) = l.strip_prefix('#') {
            check_format_comment(l, no)?;
            if let Some((k, v)) = body.trim().split_once('=') {
                meta.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        match &names {
            None => names = Some(l.split(',').map(|s| s.trim().to_string()).collect()),
            Some(ns) => {
                let row: Vec<f64> = l
                    .split(',')
                    .map(|s| s.trim().parse().map_err(|_| Error::parse(no, format!("bad number {s:?}"))))
                    .collect::<Result<_>>()?;
                if row.len() != ns.len() {
                    return Err(Error::parse(no, format!("row has {} cells, expected {}", row.len(), ns.len())));
                }
                values.extend(row);
                rows += 1;
            }
        }
    }
    let names = names.ok_or_else(|| Error::parse(0, "missing header row"))?;
    if rows != names.len() {
        return Err(Error::ShapeMismatch(format!("{rows} rows for {} columns", names.len())));
    }
    Ok(ArcMatrix { names, values, meta })
}

/// Per-column state labels, indexed by code.
pub type Labels = Vec<Vec<String>>;

/// Parses an arity sidecar: one `name arity` pair per line, `#` comments.
pub fn parse_arity_file(text: &str) -> Result<HashMap<String, usize>> {
    let mut out = HashMap::new();
    for (i, l) in text.lines().enumerate() {
        let l = l.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let mut it = l.split_whitespace();
        let (Some(name), Some(a), None) = (it.next(), it.next(), it.next()) else {
            return Err(Error::parse(i + 1, format!("expected '<name> <arity>', got {l:?}")));
        };
        let a: usize = a.parse().map_err(|_| Error::parse(i + 1, format!("bad arity {a:?}")))?;
        out.insert(name.to_string(), a);
    }
    Ok(out)
}

/// Reads a data CSV. Cells are labels coded per column by first
/// appearance; `arity` may raise (never lower) the inferred arities.
pub fn read_data_csv<R: Read>(reader: R, arity: Option<&HashMap<String, usize>>) -> Result<(Dataset, Labels)> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
    let names: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if names.is_empty() {
        return Err(Error::InvalidInput("data CSV has no columns".into()));
    }
    let n = names.len();
    let mut codes: Vec<HashMap<String, u32>> = vec![HashMap::new(); n];
    let mut labels: Labels = vec![Vec::new(); n];
    let mut columns: Vec<Vec<u32>> = vec![Vec::new(); n];
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != n {
            return Err(Error::ShapeMismatch(format!("record with {} cells, expected {n}", rec.len())));
        }
        for (c, cell) in rec.iter().enumerate() {
            let next = codes[c].len() as u32;
            let code = *codes[c].entry(cell.to_string()).or_insert_with(|| {
                labels[c].push(cell.to_string());
                next
            });
            columns[c].push(code);
        }
    }
    let mut arities: Vec<usize> = labels.iter().map(|l| l.len().max(1)).collect();
    if let Some(over) = arity {
        for (name, &a) in over {
            let c = names
                .iter()
                .position(|x| x == name)
                .ok_or_else(|| Error::InvalidInput(format!("arity file names unknown variable {name:?}")))?;
            if a < labels[c].len() {
                return Err(Error::InvalidInput(format!(
                    "arity {a} for {name} is below the {} observed states",
                    labels[c].len()
                )));
            }
            arities[c] = a;
        }
    }
    Ok((Dataset::new(names, arities, columns)?, labels))
}

/// Writes data as CSV, using `labels` when given and integer codes otherwise.
pub fn write_data_csv<W: Write>(data: &Dataset, labels: Option<&Labels>, writer: W) -> Result<()> {
    let mut writer = writer;
    writeln!(writer, "{FORMAT_LINE}")?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(data.names())?;
    let mut row = Vec::with_capacity(data.n());
    for r in 0..data.rows() {
        row.clear();
        for c in 0..data.n() {
            let code = data.column(c)[r] as usize;
            row.push(match labels {
                Some(l) => l[c][code].clone(),
                None => code.to_string(),
            });
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Arity sidecar text for `data`.
pub fn arity_file(data: &Dataset) -> String {
    let mut out = String::from(FORMAT_LINE);
    out.push('\n');
    for (name, a) in data.names().iter().zip(data.arities()) {
        let _ = writeln!(out, "{name} {a}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pruning::{prune_complete, PruneMode};
    use crate::scoring::{enumerate_scores, ScoreConfig};

    fn small_data() -> Dataset {
        let rows: Vec<Vec<u32>> = (0..40u32).map(|r| vec![r % 2, (r / 2) % 2, (r % 3 == 0) as u32]).collect();
        Dataset::from_rows(vec![2, 2, 2], &rows).unwrap()
    }

    #[test]
    fn score_tables_round_trip() {
        let data = small_data();
        let cfg = ScoreConfig::unrestricted(3, 2);
        for mode in [PruneMode::Off, PruneMode::Complete] {
            let t = ScoreTables::build(&data, &cfg, 0.01, mode).unwrap();
            let text = write_score_tables(&t);
            assert!(text.starts_with(FORMAT_LINE));
            let back = parse_score_tables(&text).unwrap();
            assert_eq!(back, t);
            assert_eq!(back.kept_fraction(), t.kept_fraction());
        }
    }

    #[test]
    fn pruned_header_line() {
        let data = small_data();
        let cfg = ScoreConfig::unrestricted(3, 2);
        let tables: Vec<_> = (0..3)
            .map(|i| prune_complete(&enumerate_scores(&data, i, &cfg).unwrap(), 0.25, None).unwrap())
            .collect();
        let t = ScoreTables::new(data.names().to_vec(), tables).unwrap();
        let text = write_score_tables(&t);
        assert!(text.lines().nth(1).unwrap().starts_with("# epsilon=2.5e-1 K=2"));
    }

    #[test]
    fn score_table_without_metadata() {
        let text = "2\nA 2\n-1.5 0\n-2 1 1\nB 1\n-3 0\n";
        let t = parse_score_tables(text).unwrap();
        assert_eq!(t.names(), &["A".to_string(), "B".to_string()]);
        assert_eq!(t.table(0).len(), 2);
        assert_eq!(t.table(0).kept()[0].1, -1.5);
        assert_eq!(t.table(1).k_eff, 0);
    }

    #[test]
    fn score_table_errors() {
        assert!(matches!(parse_score_tables(""), Err(Error::Parse { .. })));
        assert!(matches!(parse_score_tables("1\nA 1\n-1 1 0\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse_score_tables("2\nA 1\n-1 2 1\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse_score_tables("# format=2\n1\nA 1\n-1 0\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_score_tables("1\nA 1\n-1 0\nextra\n"), Err(Error::Parse { line: 4, .. })));
    }

    #[test]
    fn arc_matrix_round_trip() {
        let names = vec!["a".to_string(), "b".to_string()];
        let vals = vec![0.0, 0.25, 0.125, 0.0];
        let text = arc_matrix_to_csv(&names, &vals, &["logZ=-3.5".into()]);
        let m = parse_arc_matrix(&text).unwrap();
        assert_eq!(m.names, names);
        assert_eq!(m.values, vals);
        assert_eq!(m.meta("logZ"), Some("-3.5"));
        assert!(parse_arc_matrix("a,b\n0,1\n").is_err());
    }

    #[test]
    fn data_csv_coding_and_arity() {
        let text = "# format=1\nx,y\nlo,on\nhi,on\nlo,off\n";
        let (d, labels) = read_data_csv(text.as_bytes(), None).unwrap();
        assert_eq!(d.column(0), &[0, 1, 0]);
        assert_eq!(d.column(1), &[0, 0, 1]);
        assert_eq!(labels[0], vec!["lo", "hi"]);
        let over = parse_arity_file("y 3\n").unwrap();
        let (d, _) = read_data_csv(text.as_bytes(), Some(&over)).unwrap();
        assert_eq!(d.arities(), &[2, 3]);
        let bad = parse_arity_file("y 1\n").unwrap();
        assert!(read_data_csv(text.as_bytes(), Some(&bad)).is_err());

        let mut buf = Vec::new();
        write_data_csv(&d, Some(&labels), &mut buf).unwrap();
        let (d2, l2) = read_data_csv(buf.as_slice(), Some(&over)).unwrap();
        assert_eq!(d2, d);
        assert_eq!(l2, labels);
        assert!(arity_file(&d).contains("y 3"));
    }
}
