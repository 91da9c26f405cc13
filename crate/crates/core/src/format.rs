//! Text file format for graphs.
//!
//! One format serves both graph kinds. Lines may carry `#` comments;
//! blank lines are ignored. A file is a sequence of `key:` headers, some
//! with inline values, some opening a block of data rows:
//!
//! ```text
//! type: finite            # or: periodic
//! vertices: 6             # finite only
//! rank: 2                 # periodic only
//! cell_size: 1            # periodic only
//! edges:
//! 0 1                     # finite: one unordered pair per row
//! 0 0 1 0                 # periodic: i j followed by rank offset entries
//! action:                 # finite only, optional
//! 2 3 4 5 0 1             # one generator permutation per row
//! ```
//!
//! Unknown or duplicate keys are rejected with their line number. Parsing
//! canonicalizes edges (pair order, offset orientation), so
//! parse → serialize → parse is the identity.

use crate::action::{Instance, PermutationGroup};
use crate::error::{Error, Result};
use crate::graph::{PeriodicGraph, SimpleGraph};
use std::fmt::Write as _;

/// The file model: a graph plus, for finite graphs, optional generator
/// permutations of a free action.
#[derive(Clone, Debug, PartialEq)]
pub enum GraphFile {
    Finite { graph: SimpleGraph, generators: Vec<Vec<usize>> },
    Periodic(PeriodicGraph),
}

impl GraphFile {
    /// Builds the validated instance this file describes.
    pub fn into_instance(self) -> Result<Instance> {
        match self {
            GraphFile::Finite { graph, generators } => {
                if generators.is_empty() {
                    Ok(Instance::finite(graph))
                } else {
                    let group =
                        PermutationGroup::from_generators(graph.vertex_count(), generators)?;
                    Instance::with_action(graph, group)
                }
            }
            GraphFile::Periodic(pg) => Ok(Instance::periodic(pg)),
        }
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_fields<T: std::str::FromStr>(line_no: usize, s: &str) -> Result<Vec<T>> {
    s.split_whitespace()
        .map(|tok| tok.parse::<T>().map_err(|_| parse_err(line_no, format!("bad integer `{tok}`"))))
        .collect()
}

#[derive(PartialEq, Clone, Copy)]
enum Section {
    None,
    Edges,
    Action,
}

/// Parses the text format; errors carry 1-based line numbers.
pub fn parse(text: &str) -> Result<GraphFile> {
    let mut kind: Option<(bool, usize)> = None; // (is_finite, line)
    let mut vertices: Option<usize> = None;
    let mut rank: Option<usize> = None;
    let mut cell_size: Option<usize> = None;
    let mut edge_rows: Vec<(usize, Vec<i64>)> = Vec::new();
    let mut action_rows: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut seen_edges = false;
    let mut seen_action = false;
    let mut section = Section::None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(colon) = line.find(':') {
            let key = line[..colon].trim();
            let value = line[colon + 1..].trim();
            let set_unique = |slot: &mut Option<usize>, what: &str| -> Result<()> {
                if slot.is_some() {
                    return Err(parse_err(line_no, format!("duplicate key `{what}`")));
                }
                *slot = Some(
                    value
                        .parse::<usize>()
                        .map_err(|_| parse_err(line_no, format!("bad value for `{what}`: `{value}`")))?,
                );
                Ok(())
            };
            match key {
                "type" => {
                    if kind.is_some() {
                        return Err(parse_err(line_no, "duplicate key `type`"));
                    }
                    kind = Some(match value {
                        "finite" => (true, line_no),
                        "periodic" => (false, line_no),
                        other => {
                            return Err(parse_err(
                                line_no,
                                format!("`type` must be finite or periodic, got `{other}`"),
                            ))
                        }
                    });
                    section = Section::None;
                }
                "vertices" => {
                    set_unique(&mut vertices, "vertices")?;
                    section = Section::None;
                }
                "rank" => {
                    set_unique(&mut rank, "rank")?;
                    section = Section::None;
                }
                "cell_size" => {
                    set_unique(&mut cell_size, "cell_size")?;
                    section = Section::None;
                }
                "edges" => {
                    if seen_edges {
                        return Err(parse_err(line_no, "duplicate key `edges`"));
                    }
                    if !value.is_empty() {
                        return Err(parse_err(line_no, "`edges:` takes no inline value"));
                    }
                    seen_edges = true;
                    section = Section::Edges;
                }
                "action" => {
                    if seen_action {
                        return Err(parse_err(line_no, "duplicate key `action`"));
                    }
                    if !value.is_empty() {
                        return Err(parse_err(line_no, "`action:` takes no inline value"));
                    }
                    seen_action = true;
                    section = Section::Action;
                }
                other => return Err(parse_err(line_no, format!("unknown field `{other}`"))),
            }
        } else {
            match section {
                Section::Edges => edge_rows.push((line_no, parse_fields::<i64>(line_no, line)?)),
                Section::Action => {
                    action_rows.push((line_no, parse_fields::<usize>(line_no, line)?))
                }
                Section::None => {
                    return Err(parse_err(line_no, "data row outside `edges:`/`action:` block"))
                }
            }
        }
    }

    let (is_finite, type_line) = kind.ok_or_else(|| parse_err(1, "missing `type`"))?;
    if !seen_edges {
        return Err(parse_err(type_line, "missing `edges:` block"));
    }

    if is_finite {
        if rank.is_some() || cell_size.is_some() {
            return Err(parse_err(type_line, "`rank`/`cell_size` are for periodic graphs"));
        }
        let n = vertices.ok_or_else(|| parse_err(type_line, "missing `vertices`"))?;
        let mut edges = Vec::with_capacity(edge_rows.len());
        for (line_no, row) in &edge_rows {
            let &[u, v] = row.as_slice() else {
                return Err(parse_err(*line_no, "finite edge rows are `u v`"));
            };
            if u < 0 || v < 0 {
                return Err(parse_err(*line_no, "vertex indices are nonnegative"));
            }
            edges.push((u as usize, v as usize));
        }
        let graph = SimpleGraph::new(n, &edges)?;
        let mut generators = Vec::with_capacity(action_rows.len());
        for (line_no, row) in action_rows {
            if row.len() != n {
                return Err(parse_err(line_no, format!("permutation rows carry {n} images")));
            }
            generators.push(row);
        }
        Ok(GraphFile::Finite { graph, generators })
    } else {
        if vertices.is_some() {
            return Err(parse_err(type_line, "`vertices` is for finite graphs"));
        }
        if seen_action {
            return Err(parse_err(type_line, "`action` is for finite graphs"));
        }
        let d = rank.ok_or_else(|| parse_err(type_line, "missing `rank`"))?;
        let cell = cell_size.ok_or_else(|| parse_err(type_line, "missing `cell_size`"))?;
        let mut edges = Vec::with_capacity(edge_rows.len());
        for (line_no, row) in &edge_rows {
            if row.len() != 2 + d {
                return Err(parse_err(
                    *line_no,
                    format!("periodic edge rows are `i j` plus {d} offset entries"),
                ));
            }
            if row[0] < 0 || row[1] < 0 {
                return Err(parse_err(*line_no, "cell indices are nonnegative"));
            }
            edges.push((row[0] as usize, row[1] as usize, row[2..].to_vec()));
        }
        Ok(GraphFile::Periodic(PeriodicGraph::new(d, cell, &edges)?))
    }
}

/// Canonical serialization; `parse(to_text(f)) == f`.
pub fn to_text(file: &GraphFile) -> String {
    let mut out = String::new();
    match file {
        GraphFile::Finite { graph, generators } => {
            writeln!(out, "type: finite").unwrap();
            writeln!(out, "vertices: {}", graph.vertex_count()).unwrap();
            writeln!(out, "edges:").unwrap();
            for &(u, v) in graph.edges() {
                writeln!(out, "{u} {v}").unwrap();
            }
            if !generators.is_empty() {
                writeln!(out, "action:").unwrap();
                for g in generators {
                    let row: Vec<String> = g.iter().map(|x| x.to_string()).collect();
                    writeln!(out, "{}", row.join(" ")).unwrap();
                }
            }
        }
        GraphFile::Periodic(pg) => {
            writeln!(out, "type: periodic").unwrap();
            writeln!(out, "rank: {}", pg.rank()).unwrap();
            writeln!(out, "cell_size: {}", pg.cell_size()).unwrap();
            writeln!(out, "edges:").unwrap();
            for e in pg.edges() {
                let offs: Vec<String> = e.offset.iter().map(|x| x.to_string()).collect();
                if offs.is_empty() {
                    writeln!(out, "{} {}", e.i, e.j).unwrap();
                } else {
                    writeln!(out, "{} {} {}", e.i, e.j, offs.join(" ")).unwrap();
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const K4: &str = "\
# complete graph on four vertices
type: finite
vertices: 4
edges:
0 1
0 2
0 3
1 2
1 3
2 3
";

    const Z2: &str = "\
type: periodic
rank: 2
cell_size: 1
edges:
0 0 1 0
0 0 0 1
";

    const C6_Z3: &str = "\
type: finite
vertices: 6
edges:
0 1
1 2
2 3
3 4
4 5
0 5
action:
2 3 4 5 0 1
";

    #[test]
    fn parses_k4() {
        let GraphFile::Finite { graph, generators } = parse(K4).unwrap() else {
            panic!("finite expected")
        };
        assert_eq!(graph, SimpleGraph::complete(4));
        assert!(generators.is_empty());
    }

    #[test]
    fn parses_square_lattice() {
        let GraphFile::Periodic(pg) = parse(Z2).unwrap() else { panic!("periodic expected") };
        assert_eq!(pg, PeriodicGraph::hypercubic(2));
    }

    #[test]
    fn parses_action_and_builds_instance() {
        let inst = parse(C6_Z3).unwrap().into_instance().unwrap();
        let q = inst.quotient().unwrap();
        assert_eq!(q.vb, 2);
        assert_eq!(q.eb, 2);
    }

    #[test]
    fn round_trips_canonically() {
        for text in [K4, Z2, C6_Z3] {
            let file = parse(text).unwrap();
            let again = parse(&to_text(&file)).unwrap();
            assert_eq!(file, again);
        }
    }

    #[test]
    fn unknown_field_rejected() {
        let err = parse("type: finite\nvertices: 2\ncolor: blue\nedges:\n0 1\n").unwrap_err();
        let Error::Parse { line, msg } = err else { panic!("parse error expected") };
        assert_eq!(line, 3);
        assert!(msg.contains("color"));
    }

    #[test]
    fn self_loop_surfaces_from_parser() {
        let err = parse("type: finite\nvertices: 2\nedges:\n0 0\n").unwrap_err();
        assert!(matches!(err, Error::SelfLoop(0)));
    }

    #[test]
    fn bad_integer_carries_line_number() {
        let err = parse("type: finite\nvertices: 2\nedges:\n0 x\n").unwrap_err();
        let Error::Parse { line, .. } = err else { panic!("parse error expected") };
        assert_eq!(line, 4);
    }

    #[test]
    fn missing_sections_rejected() {
        assert!(parse("vertices: 3\nedges:\n").is_err());
        assert!(parse("type: finite\nedges:\n0 1\n").is_err());
        assert!(parse("type: periodic\nrank: 1\nedges:\n").is_err());
    }

    #[test]
    fn mixed_kind_fields_rejected() {
        assert!(parse("type: finite\nvertices: 2\nrank: 1\nedges:\n0 1\n").is_err());
        assert!(parse("type: periodic\nrank: 1\ncell_size: 1\nvertices: 2\nedges:\n0 0 1\n").is_err());
    }

    #[test]
    fn wrong_offset_arity_rejected() {
        let err = parse("type: periodic\nrank: 2\ncell_size: 1\nedges:\n0 0 1\n").unwrap_err();
        let Error::Parse { line, .. } = err else { panic!("parse error expected") };
        assert_eq!(line, 5);
    }
}
