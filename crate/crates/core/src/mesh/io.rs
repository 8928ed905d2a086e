//! Plain-text mesh files.
//!
//! ```text
//! afvm-mesh v1
//! vertices N
//! <id> <x> <y>            (N lines)
//! triangles M
//! <id> <v0> <v1> <v2> <ref_edge>   (M lines)
//! boundary K
//! <v_a> <v_b> <marker>    (K lines, marker 1 = Dirichlet)
//! ```

use std::collections::HashSet;
use std::io::{BufRead, Write};

use super::{edge_key, Mesh, Triangle};
use crate::error::{Error, Result};

const HEADER: &str = "afvm-mesh v1";
const DIRICHLET: u32 = 1;

pub fn write_mesh<W: Write>(mesh: &Mesh, mut out: W) -> Result<()> {
    writeln!(out, "{HEADER}")?;
    writeln!(out, "vertices {}", mesh.num_vertices())?;
    for (i, p) in mesh.vertices.iter().enumerate() {
        writeln!(out, "{i} {} {}", p[0], p[1])?;
    }
    writeln!(out, "triangles {}", mesh.num_triangles())?;
    for (i, t) in mesh.triangles.iter().enumerate() {
        let [a, b, c] = t.vertices;
        writeln!(out, "{i} {a} {b} {c} {}", t.ref_edge)?;
    }
    let boundary: Vec<_> = mesh.edges.iter().filter(|e| e.is_boundary()).collect();
    writeln!(out, "boundary {}", boundary.len())?;
    for e in boundary {
        writeln!(out, "{} {} {DIRICHLET}", e.vertices[0], e.vertices[1])?;
    }
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_tokens(&mut self) -> Result<Vec<String>> {
        loop {
            self.line += 1;
            match self.inner.next() {
                None => return Err(self.error("unexpected end of file")),
                Some(line) => {
                    let line = line?;
                    let tokens: Vec<String> = line.split_whitespace().map(str::to_owned).collect();
                    if !tokens.is_empty() {
                        return Ok(tokens);
                    }
                }
            }
        }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            message: message.into(),
        }
    }

    fn section(&mut self, name: &str) -> Result<usize> {
        let tokens = self.next_tokens()?;
        if tokens.len() != 2 || tokens[0] != name {
            return Err(self.error(format!("expected '{name} <count>'")));
        }
        self.parse(&tokens[1])
    }

    fn parse<T: std::str::FromStr>(&self, token: &str) -> Result<T> {
        token
            .parse()
            .map_err(|_| self.error(format!("cannot parse '{token}'")))
    }

    fn record(&mut self, fields: usize, expected_id: Option<usize>) -> Result<Vec<String>> {
        let tokens = self.next_tokens()?;
        if tokens.len() != fields {
            return Err(self.error(format!("expected {fields} fields, found {}", tokens.len())));
        }
        if let Some(id) = expected_id {
            let found: usize = self.parse(&tokens[0])?;
            if found != id {
                return Err(self.error(format!("expected id {id}, found {found}")));
            }
        }
        Ok(tokens)
    }
}

pub fn read_mesh<R: BufRead>(input: R) -> Result<Mesh> {
    let mut lines = Lines {
        inner: input.lines(),
        line: 0,
    };
    if lines.next_tokens()?.join(" ") != HEADER {
        return Err(lines.error(format!("expected header '{HEADER}'")));
    }
    let nv = lines.section("vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for i in 0..nv {
        let tok = lines.record(3, Some(i))?;
        vertices.push([lines.parse(&tok[1])?, lines.parse(&tok[2])?]);
    }
    let nt = lines.section("triangles")?;
    let mut triangles = Vec::with_capacity(nt);
    for i in 0..nt {
        let tok = lines.record(5, Some(i))?;
        let v = [
            lines.parse(&tok[1])?,
            lines.parse(&tok[2])?,
            lines.parse(&tok[3])?,
        ];
        triangles.push(Triangle::new(v, lines.parse(&tok[4])?));
    }
    let nb = lines.section("boundary")?;
    let mut listed = HashSet::with_capacity(nb);
    for _ in 0..nb {
        let tok = lines.record(3, None)?;
        let (a, b): (usize, usize) = (lines.parse(&tok[0])?, lines.parse(&tok[1])?);
        let marker: u32 = lines.parse(&tok[2])?;
        if marker != DIRICHLET {
            return Err(lines.error(format!("unsupported boundary marker {marker}")));
        }
        listed.insert(edge_key(a, b));
    }
    let mesh = Mesh::new(vertices, triangles, 0)?;
    let actual: HashSet<_> = mesh
        .edges
        .iter()
        .filter(|e| e.is_boundary())
        .map(|e| (e.vertices[0], e.vertices[1]))
        .collect();
    if actual != listed {
        return Err(Error::InvalidMesh(
            "boundary section does not match the triangulation's boundary edges".into(),
        ));
    }
    Ok(mesh)
}
