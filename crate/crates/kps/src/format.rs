//! The canonical text instance format.
//!
//! ```text
//! KPI v1 N M K L mode          mode: dense | diag
//! B b_1 ... b_K
//! S c count item_1 ... item_count     (L lines, items sorted ascending)
//! <M profits of group 1>
//! <costs of group 1: M lines of K values (dense) or one line of M (diag)>
//! ...repeated for all N groups
//! ```
//!
//! All ids are 1-based. Reals are written in shortest round-trip form, so
//! save followed by load reproduces every field bit-exactly.

use std::fmt;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use kps_core::model::{CostData, Instance, LocalConstraint, LocalConstraintSet};

#[derive(Debug)]
pub enum FormatError {
    Io(io::Error),
    Parse { line: usize, message: String },
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormatError::Io(err) => write!(f, "io error: {err}"),
            FormatError::Parse { line, message } => write!(f, "line {line}: {message}"),
        }
    }
}

impl std::error::Error for FormatError {}

impl From<io::Error> for FormatError {
    fn from(err: io::Error) -> Self {
        FormatError::Io(err)
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse {
        line,
        message: message.into(),
    }
}

/// Writes `inst` to `path` in the canonical text format.
pub fn save_instance(inst: &Instance, path: &Path) -> Result<(), FormatError> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    let mode = if inst.is_diag() { "diag" } else { "dense" };
    writeln!(
        w,
        "KPI v1 {} {} {} {} {}",
        inst.num_groups(),
        inst.num_items(),
        inst.num_resources(),
        inst.locals().len(),
        mode
    )?;
    write!(w, "B")?;
    for b in inst.budgets() {
        write!(w, " {b}")?;
    }
    writeln!(w)?;
    for c in inst.locals().constraints() {
        write!(w, "S {} {}", c.capacity, c.items.len())?;
        for item in &c.items {
            write!(w, " {item}")?;
        }
        writeln!(w)?;
    }
    for g in inst.groups() {
        let mut first = true;
        for p in g.profits {
            if !first {
                write!(w, " ")?;
            }
            write!(w, "{p}")?;
            first = false;
        }
        writeln!(w)?;
        match g.costs {
            kps_core::CostView::Dense { rows, num_resources } => {
                for row in rows.chunks(num_resources) {
                    let mut first = true;
                    for b in row {
                        if !first {
                            write!(w, " ")?;
                        }
                        write!(w, "{b}")?;
                        first = false;
                    }
                    writeln!(w)?;
                }
            }
            kps_core::CostView::Diag(diag) => {
                let mut first = true;
                for b in diag {
                    if !first {
                        write!(w, " ")?;
                    }
                    write!(w, "{b}")?;
                    first = false;
                }
                writeln!(w)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

struct Lines<R> {
    reader: R,
    number: usize,
    buffer: String,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<Option<(usize, &str)>, FormatError> {
        loop {
            self.buffer.clear();
            self.number += 1;
            if self.reader.read_line(&mut self.buffer)? == 0 {
                return Ok(None);
            }
            if !self.buffer.trim().is_empty() {
                return Ok(Some((self.number, self.buffer.trim_end())));
            }
        }
    }

    fn expect_line(&mut self, what: &str) -> Result<(usize, &str), FormatError> {
        let number_hint = self.number + 1;
        match self.next_line()? {
            Some(line) => Ok(line),
            None => Err(parse_error(
                number_hint,
                format!("unexpected end of file, expected {what}"),
            )),
        }
    }
}

fn parse_floats(line: usize, text: &str, expected: usize, what: &str) -> Result<Vec<f64>, FormatError> {
    let values: Vec<f64> = text
        .split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| parse_error(line, format!("bad real `{tok}` in {what}")))
        })
        .collect::<Result<_, _>>()?;
    if values.len() != expected {
        return Err(parse_error(
            line,
            format!("{what} has {} values, expected {expected}", values.len()),
        ));
    }
    Ok(values)
}

/// Loads an instance from the canonical text format.
pub fn load_instance(path: &Path) -> Result<Instance, FormatError> {
    let file = std::fs::File::open(path)?;
    let mut lines = Lines {
        reader: BufReader::new(file),
        number: 0,
        buffer: String::new(),
    };

    let (line_no, header) = lines.expect_line("header")?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 7 || tokens[0] != "KPI" || tokens[1] != "v1" {
        return Err(parse_error(line_no, "expected header `KPI v1 N M K L mode`"));
    }
    let parse_dim = |idx: usize, what: &str| {
        tokens[idx]
            .parse::<usize>()
            .map_err(|_| parse_error(line_no, format!("bad {what} `{}`", tokens[idx])))
    };
    let n = parse_dim(2, "N")?;
    let m = parse_dim(3, "M")?;
    let k = parse_dim(4, "K")?;
    let l = parse_dim(5, "L")?;
    if n == 0 {
        return Err(parse_error(line_no, "N must be >= 1"));
    }
    if m == 0 {
        return Err(parse_error(line_no, "M must be >= 1"));
    }
    if k == 0 {
        return Err(parse_error(line_no, "K must be >= 1"));
    }
    let diag = match tokens[6] {
        "dense" => false,
        "diag" => true,
        other => return Err(parse_error(line_no, format!("unknown mode `{other}`"))),
    };
    if diag && m != k {
        return Err(parse_error(line_no, "diag mode requires M == K"));
    }

    let (line_no, budget_line) = lines.expect_line("budget line")?;
    let rest = budget_line
        .strip_prefix("B ")
        .or_else(|| budget_line.strip_prefix("B\t"))
        .ok_or_else(|| parse_error(line_no, "expected budget line starting with `B`"))?;
    let budgets = parse_floats(line_no, rest, k, "budget line")?;

    let mut constraints = Vec::with_capacity(l);
    for _ in 0..l {
        let (line_no, text) = lines.expect_line("local constraint line")?;
        let mut toks = text.split_whitespace();
        if toks.next() != Some("S") {
            return Err(parse_error(line_no, "expected constraint line starting with `S`"));
        }
        let capacity: u32 = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_error(line_no, "bad capacity"))?;
        let count: usize = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_error(line_no, "bad item count"))?;
        let items: Vec<u32> = toks
            .map(|t| {
                t.parse::<u32>()
                    .map_err(|_| parse_error(line_no, format!("bad item id `{t}`")))
            })
            .collect::<Result<_, _>>()?;
        if items.len() != count {
            return Err(parse_error(
                line_no,
                format!("constraint lists {} items, declared {count}", items.len()),
            ));
        }
        if !items.windows(2).all(|w| w[0] < w[1]) {
            return Err(parse_error(line_no, "item ids must be sorted and unique"));
        }
        constraints.push(LocalConstraint::new(items, capacity));
    }

    let mut profits = Vec::with_capacity(n * m);
    let mut costs = Vec::with_capacity(if diag { n * m } else { n * m * k });
    for _ in 0..n {
        let (line_no, text) = lines.expect_line("profit line")?;
        profits.extend(parse_floats(line_no, text, m, "profit line")?);
        if diag {
            let (line_no, text) = lines.expect_line("diagonal cost line")?;
            costs.extend(parse_floats(line_no, text, m, "diagonal cost line")?);
        } else {
            for _ in 0..m {
                let (line_no, text) = lines.expect_line("cost line")?;
                costs.extend(parse_floats(line_no, text, k, "cost line")?);
            }
        }
    }
    if let Some((line_no, _)) = lines.next_line()? {
        return Err(parse_error(line_no, "trailing content after last group"));
    }

    let cost_data = if diag {
        CostData::Diag(costs)
    } else {
        CostData::Dense(costs)
    };
    Instance::new(n, m, budgets, LocalConstraintSet::new(constraints), profits, cost_data)
        .map_err(|e| parse_error(0, e.to_string()))
}
