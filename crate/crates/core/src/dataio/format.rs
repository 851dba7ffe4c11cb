//! Transaction file format.
//!
//! ```text
//! # n=<universe_size> D=<count>
//! <ascending space-separated item ids>
//! ...
//! ```
//!
//! UTF-8, one transaction per LF-terminated line. An empty transaction is an
//! empty line.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::itemsets::{Item, Itemset, TransactionDb};

use super::write_atomic;

pub fn format_db(db: &TransactionDb) -> String {
    let mut out = String::with_capacity(db.count() * 8 + 32);
    let _ = writeln!(out, "# n={} D={}", db.universe_size(), db.count());
    for t in db.iter() {
        for (i, item) in t.items().iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{item}");
        }
        out.push('\n');
    }
    out
}

pub fn parse_db(text: &str, path: &Path) -> Result<TransactionDb> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.split_terminator('\n');
    let header = lines
        .next()
        .ok_or_else(|| err(1, "missing header".into()))?;
    let (n, d) = parse_header(header).ok_or_else(|| {
        err(
            1,
            format!("expected header \"# n=<items> D=<count>\", found {header:?}"),
        )
    })?;

    let mut transactions = Vec::with_capacity(d);
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 2;
        let mut items: Vec<Item> = Vec::new();
        for tok in line.split(' ').filter(|t| !t.is_empty()) {
            let item: Item = tok
                .parse()
                .map_err(|_| err(lineno, format!("non-numeric item {tok:?}")))?;
            if item >= n {
                return Err(err(
                    lineno,
                    format!("item {item} outside universe of {n} items"),
                ));
            }
            if let Some(&prev) = items.last() {
                if item == prev {
                    return Err(err(lineno, format!("duplicate item {item}")));
                }
                if item < prev {
                    return Err(err(
                        lineno,
                        format!("items not ascending ({prev} before {item})"),
                    ));
                }
            }
            items.push(item);
        }
        transactions.push(Itemset::new(items).expect("checked ascending"));
    }
    if transactions.len() != d {
        return Err(err(
            1,
            format!(
                "header declares D={d} but file holds {} transactions",
                transactions.len()
            ),
        ));
    }
    TransactionDb::new(n, transactions)
}

fn parse_header(line: &str) -> Option<(u32, usize)> {
    let rest = line.strip_prefix("# ")?;
    let mut parts = rest.split(' ');
    let n = parts.next()?.strip_prefix("n=")?.parse().ok()?;
    let d = parts.next()?.strip_prefix("D=")?.parse().ok()?;
    parts.next().is_none().then_some((n, d))
}

pub fn write_db(db: &TransactionDb, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), format_db(db).as_bytes())
}

pub fn read_db(path: impl AsRef<Path>) -> Result<TransactionDb> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_db(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> TransactionDb {
        TransactionDb::from_rows(
            4,
            [
                vec![1, 2, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3],
                vec![1, 2, 3],
            ],
        )
        .unwrap()
    }

    #[test]
    fn toy_format_is_exact() {
        assert_eq!(
            format_db(&toy()),
            "# n=4 D=5\n1 2 3\n1 2\n1 3\n2 3\n1 2 3\n"
        );
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.txt");
        write_db(&toy(), &path).unwrap();
        assert_eq!(read_db(&path).unwrap(), toy());
    }

    #[test]
    fn empty_transactions_survive() {
        let db = TransactionDb::from_rows(3, [vec![], vec![2], vec![]]).unwrap();
        let text = format_db(&db);
        assert_eq!(text, "# n=3 D=3\n\n2\n\n");
        assert_eq!(parse_db(&text, Path::new("x")).unwrap(), db);
    }

    fn parse_err_line(text: &str) -> usize {
        match parse_db(text, Path::new("f")) {
            Err(Error::Parse { line, .. }) => line,
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unsorted_line_reports_its_number() {
        assert_eq!(parse_err_line("# n=4 D=2\n1 2\n3 1\n"), 3);
    }

    #[test]
    fn malformed_lines() {
        assert_eq!(parse_err_line("# n=4 D=1\n1 x\n"), 2);
        assert_eq!(parse_err_line("# n=4 D=1\n2 2\n"), 2);
        assert_eq!(parse_err_line("# n=4 D=1\n7\n"), 2);
        assert_eq!(parse_err_line("1 2\n"), 1);
        assert_eq!(parse_err_line("# n=4 D=3\n1\n"), 1);
        assert_eq!(parse_err_line(""), 1);
    }
}
