//! Edge-list text format.
//!
//! ```text
//! #vertices 3
//! 0	1	0.5
//! 1	2	1
//! ```
//!
//! Indices are 0-based and every undirected edge is listed once. Weights are
//! written in shortest round-trip form so a save/load cycle is bit-exact.

use std::io::{BufRead, Write};

use super::SparseGraph;
use crate::error::{Error, Result};

pub fn write_edge_list<W: Write>(g: &SparseGraph, mut out: W) -> Result<()> {
    writeln!(out, "#vertices {}", g.n())?;
    for (i, j, w) in g.edges() {
        writeln!(out, "{i}\t{j}\t{w:?}")?;
    }
    Ok(())
}

pub fn read_edge_list<R: BufRead>(input: R) -> Result<SparseGraph> {
    let mut offset = 0usize;
    let mut n: Option<usize> = None;
    let mut edges = Vec::new();
    for line in input.lines() {
        let line = line?;
        let here = offset;
        offset += line.len() + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix("#vertices") {
            let count = rest.trim().parse::<usize>().map_err(|_| Error::Parse {
                offset: here,
                msg: format!("bad vertex count {:?}", rest.trim()),
            })?;
            n = Some(count);
            continue;
        }
        if trimmed.starts_with('#') {
            continue;
        }
        if n.is_none() {
            return Err(Error::Parse {
                offset: here,
                msg: "edge before #vertices header".into(),
            });
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                offset: here,
                msg: format!("expected 3 tab-separated fields, got {}", fields.len()),
            });
        }
        let bad = |what: &str| Error::Parse {
            offset: here,
            msg: format!("bad {what} in {trimmed:?}"),
        };
        let i = fields[0].parse::<usize>().map_err(|_| bad("source index"))?;
        let j = fields[1].parse::<usize>().map_err(|_| bad("target index"))?;
        let w = fields[2].parse::<f64>().map_err(|_| bad("weight"))?;
        edges.push((i, j, w));
    }
    let n = n.ok_or_else(|| Error::Parse {
        offset: 0,
        msg: "missing #vertices header".into(),
    })?;
    SparseGraph::from_edges(n, edges)
}
