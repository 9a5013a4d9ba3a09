//! Line-oriented roadmap text format.
//!
//! ```text
//! roadmap agent=0 vertices=3 edges=2 lineage=17:64,18:64
//! v 0 1.5 2.25
//! v 1 3 4
//! v 2 0.5 0.5
//! e 0 1 1.80277563773e0
//! e 1 2 4.30116263352e0
//! ```
//!
//! Vertex coordinates use the shortest representation that reads back to
//! the same float; edge weights carry 12 significant digits. Lineage is `-`
//! when empty.

use std::fmt::Write as _;

use super::{LineageRecord, Roadmap};
use crate::error::{Error, Result};
use crate::geometry::Configuration;

fn field<'a>(line: usize, tok: Option<&'a str>, key: &str) -> Result<&'a str> {
    tok.and_then(|t| t.strip_prefix(key)?.strip_prefix('='))
        .ok_or_else(|| Error::parse(line, format!("expected `{key}=`")))
}

fn num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::parse(line, format!("bad number `{s}`")))
}

impl Roadmap {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let lineage = if self.lineage.is_empty() {
            "-".to_string()
        } else {
            self.lineage
                .iter()
                .map(|l| format!("{}:{}", l.seed, l.samples))
                .collect::<Vec<_>>()
                .join(",")
        };
        writeln!(
            out,
            "roadmap agent={} vertices={} edges={} lineage={}",
            self.agent,
            self.vertex_count(),
            self.edge_count(),
            lineage
        )
        .unwrap();
        for (i, q) in self.vertices.iter().enumerate() {
            write!(out, "v {i}").unwrap();
            for x in q.values() {
                write!(out, " {x}").unwrap();
            }
            out.push('\n');
        }
        for e in self.edges() {
            writeln!(out, "e {} {} {:.11e}", e.a, e.b, e.weight).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Roadmap> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (ln, header) = lines.next().ok_or_else(|| Error::parse(1, "empty roadmap file"))?;
        let mut toks = header.split_whitespace();
        if toks.next() != Some("roadmap") {
            return Err(Error::parse(ln, "expected `roadmap` header"));
        }
        let agent: usize = num(ln, field(ln, toks.next(), "agent")?)?;
        let nv: usize = num(ln, field(ln, toks.next(), "vertices")?)?;
        let ne: usize = num(ln, field(ln, toks.next(), "edges")?)?;
        let lineage_str = field(ln, toks.next(), "lineage")?;
        let mut r = Roadmap::new(agent);
        if lineage_str != "-" {
            for rec in lineage_str.split(',') {
                let (seed, samples) = rec
                    .split_once(':')
                    .ok_or_else(|| Error::parse(ln, format!("bad lineage record `{rec}`")))?;
                r.lineage.push(LineageRecord {
                    seed: num(ln, seed)?,
                    samples: num(ln, samples)?,
                });
            }
        }
        for (ln, line) in lines {
            let mut toks = line.split_whitespace();
            match toks.next() {
                Some("v") => {
                    let idx: usize = num(ln, toks.next().unwrap_or(""))?;
                    if idx != r.vertex_count() {
                        return Err(Error::parse(ln, format!("vertex {idx} out of order")));
                    }
                    let values = toks.map(|t| num(ln, t)).collect::<Result<Vec<f64>>>()?;
                    r.add_vertex(Configuration::new(values));
                }
                Some("e") => {
                    let a: usize = num(ln, toks.next().unwrap_or(""))?;
                    let b: usize = num(ln, toks.next().unwrap_or(""))?;
                    let w: f64 = num(ln, toks.next().unwrap_or(""))?;
                    if a >= r.vertex_count() || b >= r.vertex_count() || a == b {
                        return Err(Error::parse(ln, format!("bad edge {a}-{b}")));
                    }
                    if w.is_nan() || w <= 0.0 {
                        return Err(Error::parse(ln, format!("edge weight must be positive, got {w}")));
                    }
                    r.add_edge(a, b, w);
                }
                _ => return Err(Error::parse(ln, format!("unexpected line `{line}`"))),
            }
        }
        if r.vertex_count() != nv || r.edge_count() != ne {
            return Err(Error::parse(
                ln,
                format!(
                    "header promises {nv} vertices and {ne} edges, found {} and {}",
                    r.vertex_count(),
                    r.edge_count()
                ),
            ));
        }
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Environment, RobotModel};
    use crate::roadmap::build_roadmap;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn text_round_trip_is_exact(seed in any::<u64>(), n in 1usize..30, k in 1usize..10) {
            let env = Environment::open(10.0, 7.0).unwrap();
            let robot = RobotModel::disk(3, 0.4, 1.3).unwrap();
            let r = build_roadmap(&env, &robot, n, k, seed).unwrap();
            let text = r.to_text();
            let back = Roadmap::from_text(&text).unwrap();
            prop_assert_eq!(&back, &r);
            prop_assert_eq!(back.to_text(), text);
        }
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let text = "roadmap agent=0 vertices=1 edges=0 lineage=-\nv 0 1 2\nx 3\n";
        match Roadmap::from_text(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
