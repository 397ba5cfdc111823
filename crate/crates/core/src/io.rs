//! File formats: aligned dot-bracket records, Newick, a Stockholm subset,
//! and CSV/JSON result tables.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::phylogeny::Phylogeny;
use crate::structure::SecondaryStructure;

/// An id with an aligned dot-bracket string over `( ) . -`.
pub type Record = (String, String);

/// Parses `>id` lines each followed by one structure line.
pub fn parse_structures(text: &str) -> Result<Vec<Record>> {
    const FORMAT: &str = "structures";
    let mut records: Vec<Record> = Vec::new();
    let mut ids = HashSet::new();
    let mut pending: Option<(String, usize)> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(id) = line.strip_prefix('>') {
            if let Some((prev, at)) = pending {
                return Err(Error::parse(
                    FORMAT,
                    at,
                    1,
                    format!("record {prev:?} has no structure"),
                ));
            }
            let id = id.trim();
            if id.is_empty() {
                return Err(Error::parse(FORMAT, line_no, 2, "empty record id"));
            }
            if !ids.insert(id.to_string()) {
                return Err(Error::parse(
                    FORMAT,
                    line_no,
                    2,
                    format!("duplicate id {id:?}"),
                ));
            }
            pending = Some((id.to_string(), line_no));
            continue;
        }
        let Some((id, _)) = pending.take() else {
            return Err(Error::parse(
                FORMAT,
                line_no,
                1,
                "structure line without a preceding >id line",
            ));
        };
        if let Some((col, ch)) = line
            .chars()
            .enumerate()
            .find(|(_, c)| !matches!(c, '(' | ')' | '.' | '-'))
        {
            return Err(Error::parse(
                FORMAT,
                line_no,
                col + 1,
                format!("illegal character {ch:?}"),
            ));
        }
        if let Some((first_id, first)) = records.first() {
            if first.len() != line.len() {
                return Err(Error::parse(
                    FORMAT,
                    line_no,
                    1,
                    format!(
                        "record {id:?} has length {} but {first_id:?} has length {}",
                        line.len(),
                        first.len()
                    ),
                ));
            }
        }
        records.push((id, line.to_string()));
    }
    if let Some((prev, at)) = pending {
        return Err(Error::parse(
            FORMAT,
            at,
            1,
            format!("record {prev:?} has no structure"),
        ));
    }
    if records.is_empty() {
        return Err(Error::EmptyInput("no structure records".into()));
    }
    Ok(records)
}

pub fn read_structures(path: &Path) -> Result<Vec<Record>> {
    parse_structures(&fs::read_to_string(path)?)
}

pub fn format_structures(records: &[Record]) -> String {
    let mut out = String::new();
    for (id, s) in records {
        out.push('>');
        out.push_str(id);
        out.push('\n');
        out.push_str(s);
        out.push('\n');
    }
    out
}

pub fn write_structures(path: &Path, records: &[Record]) -> Result<()> {
    fs::write(path, format_structures(records))?;
    Ok(())
}

/// Pairs of an aligned string, with `-` counted as unpaired; 0-based columns.
fn aligned_pairs(id: &str, s: &str) -> Result<Vec<(usize, usize)>> {
    let mut stack = Vec::new();
    let mut pairs = Vec::new();
    for (col, ch) in s.chars().enumerate() {
        match ch {
            '(' => stack.push(col),
            ')' => match stack.pop() {
                Some(open) => pairs.push((open, col)),
                None => {
                    return Err(Error::InvalidStructure(format!(
                        "record {id:?}: unbalanced ')' at column {}",
                        col + 1
                    )))
                }
            },
            '.' | '-' => {}
            other => {
                return Err(Error::InvalidStructure(format!(
                    "record {id:?}: illegal character {other:?} at column {}",
                    col + 1
                )))
            }
        }
    }
    if let Some(open) = stack.pop() {
        return Err(Error::InvalidStructure(format!(
            "record {id:?}: unbalanced '(' at column {}",
            open + 1
        )));
    }
    Ok(pairs)
}

/// 0-based columns holding a gap in at least one record.
pub fn gap_columns(records: &[Record]) -> Vec<usize> {
    let width = records
        .iter()
        .map(|(_, s)| s.chars().count())
        .max()
        .unwrap_or(0);
    (0..width)
        .filter(|&c| records.iter().any(|(_, s)| s.chars().nth(c) == Some('-')))
        .collect()
}

/// Drops every column that has a gap in any record. A pair that loses one
/// endpoint leaves its other endpoint unpaired.
pub fn degap(records: &[Record]) -> Result<Vec<(String, SecondaryStructure)>> {
    if records.is_empty() {
        return Err(Error::EmptyInput("no records to degap".into()));
    }
    let width = records[0].1.chars().count();
    for (id, s) in records {
        let len = s.chars().count();
        if len != width {
            return Err(Error::InvalidStructure(format!(
                "record {id:?} has length {len}, expected {width}"
            )));
        }
    }
    let dropped: HashSet<usize> = gap_columns(records).into_iter().collect();
    if dropped.len() == width {
        return Err(Error::EmptyInput("every column contains a gap".into()));
    }
    // New 1-based position of each kept column.
    let mut position = vec![None; width];
    let mut next = 0;
    for (col, slot) in position.iter_mut().enumerate() {
        if !dropped.contains(&col) {
            next += 1;
            *slot = Some(next);
        }
    }
    records
        .iter()
        .map(|(id, s)| {
            let pairs = aligned_pairs(id, s)?
                .into_iter()
                .filter_map(|(a, b)| Some((position[a]?, position[b]?)));
            Ok((id.clone(), SecondaryStructure::new(next, pairs)?))
        })
        .collect()
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

struct NewickParser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    labels: Vec<Option<String>>,
    parents: Vec<Option<usize>>,
}

impl<'a> NewickParser<'a> {
    fn error(&self, message: impl Into<String>) -> Error {
        let (line, column) = line_col(self.text, self.pos);
        Error::parse("newick", line, column, message)
    }

    fn skip_space(&mut self) -> Result<()> {
        loop {
            match self.bytes.get(self.pos) {
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(b'[') => match self.text[self.pos..].find(']') {
                    Some(end) => self.pos += end + 1,
                    None => return Err(self.error("unterminated comment")),
                },
                _ => return Ok(()),
            }
        }
    }

    fn peek(&mut self) -> Result<Option<u8>> {
        self.skip_space()?;
        Ok(self.bytes.get(self.pos).copied())
    }

    fn label(&mut self) -> Result<Option<String>> {
        self.skip_space()?;
        if self.bytes.get(self.pos) == Some(&b'\'') {
            let mut out = String::new();
            self.pos += 1;
            loop {
                let rest = &self.text[self.pos..];
                let Some(q) = rest.find('\'') else {
                    return Err(self.error("unterminated quoted label"));
                };
                out.push_str(&rest[..q]);
                self.pos += q + 1;
                if self.bytes.get(self.pos) == Some(&b'\'') {
                    out.push('\'');
                    self.pos += 1;
                } else {
                    return Ok(Some(out));
                }
            }
        }
        let start = self.pos;
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() || b"()[]':;,".contains(&b) {
                break;
            }
            self.pos += 1;
        }
        let raw = &self.text[start..self.pos];
        Ok((!raw.is_empty()).then(|| raw.to_string()))
    }

    fn branch_length(&mut self) -> Result<()> {
        if self.peek()? == Some(b':') {
            self.pos += 1;
            self.skip_space()?;
            let start = self.pos;
            while let Some(&b) = self.bytes.get(self.pos) {
                if b.is_ascii_digit() || b"+-.eE".contains(&b) {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            if self.text[start..self.pos].parse::<f64>().is_err() {
                self.pos = start;
                return Err(self.error("invalid branch length"));
            }
        }
        Ok(())
    }

    fn subtree(&mut self, parent: Option<usize>) -> Result<()> {
        let me = self.labels.len();
        self.labels.push(None);
        self.parents.push(parent);
        let at = self.pos;
        if self.peek()? == Some(b'(') {
            self.pos += 1;
            loop {
                self.subtree(Some(me))?;
                match self.peek()? {
                    Some(b',') => self.pos += 1,
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(self.error("expected ',' or ')'")),
                }
            }
            self.labels[me] = self.label()?;
        } else {
            let label = self.label()?;
            if label.is_none() {
                self.pos = at;
                self.skip_space()?;
                return Err(self.error("unlabeled leaf"));
            }
            self.labels[me] = label;
        }
        self.branch_length()
    }
}

/// Parses one Newick tree; branch lengths are accepted and ignored.
pub fn parse_newick(text: &str) -> Result<Phylogeny> {
    let mut p = NewickParser {
        text,
        bytes: text.as_bytes(),
        pos: 0,
        labels: Vec::new(),
        parents: Vec::new(),
    };
    if p.peek()?.is_none() {
        return Err(Error::EmptyInput("empty Newick input".into()));
    }
    p.subtree(None)?;
    if p.peek()? != Some(b';') {
        return Err(p.error("expected ';'"));
    }
    p.pos += 1;
    if p.peek()?.is_some() {
        return Err(p.error("trailing text after ';'"));
    }
    Phylogeny::from_parents(p.labels, p.parents)
}

pub fn read_newick(path: &Path) -> Result<Phylogeny> {
    parse_newick(&fs::read_to_string(path)?)
}

fn newick_label(label: &str) -> String {
    let plain = label
        .bytes()
        .all(|b| !b.is_ascii_whitespace() && !b"()[]':;,".contains(&b));
    if plain {
        label.to_string()
    } else {
        format!("'{}'", label.replace('\'', "''"))
    }
}

/// Newick text with one line and a trailing newline.
pub fn format_newick(phy: &Phylogeny) -> String {
    fn go(phy: &Phylogeny, v: usize, out: &mut String) {
        let kids = phy.children(v);
        if !kids.is_empty() {
            out.push('(');
            for (k, &c) in kids.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                go(phy, c, out);
            }
            out.push(')');
        }
        if let Some(l) = phy.label(v) {
            out.push_str(&newick_label(l));
        }
    }
    let mut out = String::new();
    go(phy, phy.root(), &mut out);
    out.push_str(";\n");
    out
}

pub fn write_newick(path: &Path, phy: &Phylogeny) -> Result<()> {
    fs::write(path, format_newick(phy))?;
    Ok(())
}

/// Aligned rows and consensus structure of a Stockholm file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stockholm {
    pub rows: Vec<Record>,
    /// Consensus structure normalized to `( ) .`.
    pub ss_cons: String,
}

/// Maps WUSS to plain dot-bracket: every nested bracket type becomes a
/// parenthesis pair, everything else (including pseudoknot letters) a dot.
fn normalize_wuss(raw: &str) -> Result<String> {
    const OPEN: &str = "(<[{";
    const CLOSE: &str = ")>]}";
    let mut stacks: [Vec<usize>; 4] = Default::default();
    let mut pairs = Vec::new();
    let chars: Vec<char> = raw.chars().collect();
    for (col, &ch) in chars.iter().enumerate() {
        if let Some(k) = OPEN.find(ch) {
            stacks[k].push(col);
        } else if let Some(k) = CLOSE.find(ch) {
            let open = stacks[k].pop().ok_or_else(|| {
                Error::parse(
                    "stockholm",
                    0,
                    col + 1,
                    format!("unbalanced {ch:?} in SS_cons"),
                )
            })?;
            pairs.push((open + 1, col + 1));
        }
    }
    if let Some(col) = stacks.iter().flatten().next() {
        return Err(Error::parse(
            "stockholm",
            0,
            col + 1,
            "unbalanced bracket in SS_cons",
        ));
    }
    let s = SecondaryStructure::new(chars.len(), pairs)
        .map_err(|e| Error::Unsupported(format!("crossing pairs in SS_cons: {e}")))?;
    Ok(s.to_dotbracket())
}

/// Parses sequence rows (blocks may be interleaved) and `#=GC SS_cons`.
pub fn parse_stockholm(text: &str) -> Result<Stockholm> {
    const FORMAT: &str = "stockholm";
    let mut order: Vec<String> = Vec::new();
    let mut seqs: BTreeMap<String, String> = BTreeMap::new();
    let mut ss_cons: Option<(String, usize)> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end();
        if line.trim().is_empty() || line.starts_with("//") {
            continue;
        }
        if let Some(rest) = line.strip_prefix("#=GC") {
            let mut parts = rest.split_whitespace();
            if parts.next() == Some("SS_cons") {
                let body = parts.next().unwrap_or("");
                let entry = ss_cons.get_or_insert_with(|| (String::new(), line_no));
                entry.0.push_str(body);
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(id), Some(seq), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse(
                FORMAT,
                line_no,
                1,
                "expected '<id> <aligned sequence>'",
            ));
        };
        if !seqs.contains_key(id) {
            order.push(id.to_string());
        }
        seqs.entry(id.to_string()).or_default().push_str(seq);
    }
    let (raw_cons, cons_line) =
        ss_cons.ok_or_else(|| Error::parse(FORMAT, 0, 0, "missing #=GC SS_cons line"))?;
    if order.is_empty() {
        return Err(Error::EmptyInput("no sequences in Stockholm file".into()));
    }
    let width = raw_cons.chars().count();
    let mut rows = Vec::with_capacity(order.len());
    for id in order {
        let seq = seqs.remove(&id).expect("id was recorded");
        let len = seq.chars().count();
        if len != width {
            return Err(Error::parse(
                FORMAT,
                cons_line,
                1,
                format!("row {id:?} has {len} columns, SS_cons has {width}"),
            ));
        }
        rows.push((id, seq));
    }
    let ss_cons = normalize_wuss(&raw_cons).map_err(|e| match e {
        Error::Parse {
            column, message, ..
        } => Error::parse(FORMAT, cons_line, column, message),
        other => other,
    })?;
    Ok(Stockholm { rows, ss_cons })
}

pub fn read_stockholm(path: &Path) -> Result<Stockholm> {
    parse_stockholm(&fs::read_to_string(path)?)
}

fn is_gap(ch: char) -> bool {
    matches!(ch, '-' | '.' | '_' | '~')
}

fn canonical(a: char, b: char) -> bool {
    let norm = |c: char| match c.to_ascii_uppercase() {
        'T' => 'U',
        other => other,
    };
    matches!(
        (norm(a), norm(b)),
        ('A', 'U') | ('U', 'A') | ('G', 'C') | ('C', 'G') | ('G', 'U') | ('U', 'G')
    )
}

/// Per-sequence structure: a consensus pair survives where the sequence
/// holds a canonical pair; gap columns become `-`, the rest `.`.
pub fn project_consensus(alignment: &Stockholm) -> Result<Vec<Record>> {
    let cons = SecondaryStructure::from_dotbracket(&alignment.ss_cons)?;
    let mut partner = vec![None; cons.len() + 1];
    for &(i, j) in cons.pairs() {
        partner[i] = Some(j);
        partner[j] = Some(i);
    }
    Ok(alignment
        .rows
        .iter()
        .map(|(id, seq)| {
            let chars: Vec<char> = seq.chars().collect();
            let s: String = (1..=chars.len())
                .map(|p| {
                    let c = chars[p - 1];
                    if is_gap(c) {
                        return '-';
                    }
                    match partner[p] {
                        Some(q) if !is_gap(chars[q - 1]) && canonical(c, chars[q - 1]) => {
                            if p < q {
                                '('
                            } else {
                                ')'
                            }
                        }
                        _ => '.',
                    }
                })
                .collect();
            (id.clone(), s)
        })
        .collect())
}

/// One cell of a result table.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    /// Blank in CSV, `null` in JSON.
    Empty,
    Text(String),
    Int(i64),
    Float(f64),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Empty => String::new(),
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => x.to_string(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Empty => serde_json::Value::Null,
            Cell::Text(s) => serde_json::Value::from(s.as_str()),
            Cell::Int(i) => serde_json::Value::from(*i),
            Cell::Float(x) => serde_json::Value::from(*x),
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

/// A header plus rows, written as CSV or as a JSON array of objects.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let io_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(&self.header).map_err(io_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))
                .map_err(io_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: serde_json::Map<String, serde_json::Value> = self
                    .header
                    .iter()
                    .cloned()
                    .zip(row.iter().map(Cell::json))
                    .collect();
                serde_json::Value::Object(obj)
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&rows).expect("values serialize");
        s.push('\n');
        s
    }

    /// Writes to `path`, or to standard output when `path` is `None`.
    pub fn write(&self, path: Option<&Path>, json: bool) -> Result<()> {
        let text = if json { self.to_json() } else { self.to_csv()? };
        match path {
            Some(p) => fs::write(p, text)?,
            None => std::io::stdout().lock().write_all(text.as_bytes())?,
        }
        Ok(())
    }
}
