//! Reader for the G-set benchmark text format: a header `n m` followed by
//! `m` lines `u v w` with 1-indexed vertices.

use std::path::Path;

use super::{Edge, WeightedGraph};
use crate::error::{CimError, Result};

pub fn parse_gset(text: &str) -> Result<WeightedGraph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty());

    let (hline, header) = lines.next().ok_or_else(|| CimError::Parse {
        line: 1,
        message: "empty input, expected header `n m`".into(),
    })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [n, m] = fields[..] else {
        return Err(CimError::Parse {
            line: hline,
            message: format!("expected header `n m`, found {} fields", fields.len()),
        });
    };
    let n: usize = parse_field(n, hline, "vertex count")?;
    let m: usize = parse_field(m, hline, "edge count")?;
    if n == 0 {
        return Err(CimError::Parse {
            line: hline,
            message: "vertex count must be positive".into(),
        });
    }

    let mut edges = Vec::with_capacity(m);
    for (lno, line) in lines {
        if edges.len() == m {
            return Err(CimError::Parse {
                line: lno,
                message: format!("unexpected content after {m} edge lines"),
            });
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [u, v, w] = fields[..] else {
            return Err(CimError::Parse {
                line: lno,
                message: format!("expected edge `u v w`, found {} fields", fields.len()),
            });
        };
        let u: usize = parse_field(u, lno, "vertex")?;
        let v: usize = parse_field(v, lno, "vertex")?;
        let w: f64 = parse_field(w, lno, "weight")?;
        for x in [u, v] {
            if x == 0 || x > n {
                return Err(CimError::Parse {
                    line: lno,
                    message: format!("vertex {x} outside 1..={n}"),
                });
            }
        }
        edges.push(Edge { u: u - 1, v: v - 1, w });
    }
    if edges.len() != m {
        return Err(CimError::Parse {
            line: text.lines().count().max(1),
            message: format!("header declares {m} edges, found {}", edges.len()),
        });
    }
    WeightedGraph::new(n, edges)
}

pub fn read_gset(path: impl AsRef<Path>) -> Result<WeightedGraph> {
    parse_gset(&std::fs::read_to_string(path)?)
}

fn parse_field<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T> {
    s.parse().map_err(|_| CimError::Parse {
        line,
        message: format!("invalid {what} `{s}`"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file() {
        let g = parse_gset("3 2\n1 2 1\n2 3 -1\n").unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.edges(), &[Edge { u: 0, v: 1, w: 1.0 }, Edge { u: 1, v: 2, w: -1.0 }]);
        assert_eq!(g.negative_edge_count(), 1);
    }

    #[test]
    fn crlf_and_repeated_whitespace() {
        let g = parse_gset("\r\n  3   2 \r\n1\t2  1\r\n2 3 -1\r\n\r\n").unwrap();
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert!(matches!(parse_gset(""), Err(CimError::Parse { .. })));
        assert!(matches!(parse_gset("   \n"), Err(CimError::Parse { .. })));
        assert!(matches!(parse_gset("3\n"), Err(CimError::Parse { line: 1, .. })));
        assert!(matches!(
            parse_gset("3 2\n1 2 1\n2 x 1\n"),
            Err(CimError::Parse { line: 3, .. })
        ));
        assert!(matches!(parse_gset("3 2\n1 2 1\n"), Err(CimError::Parse { .. })));
        assert!(matches!(
            parse_gset("3 1\n1 2 1\n2 3 1\n"),
            Err(CimError::Parse { line: 3, .. })
        ));
        assert!(matches!(
            parse_gset("3 1\n1 4 1\n"),
            Err(CimError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(parse_gset("3 1\n2 2 1\n"), Err(CimError::Validation(_))));
        assert!(matches!(
            parse_gset("3 2\n1 2 1\n2 1 1\n"),
            Err(CimError::Validation(_))
        ));
    }

    #[test]
    fn g1_sized_header() {
        let mut text = String::from("800 19176\n");
        let mut count = 0;
        'outer: for u in 1..=800usize {
            for v in u + 1..=800 {
                if count == 19176 {
                    break 'outer;
                }
                text.push_str(&format!("{u} {v} 1\n"));
                count += 1;
            }
        }
        let g = parse_gset(&text).unwrap();
        assert_eq!((g.n(), g.edge_count()), (800, 19176));
    }
}
