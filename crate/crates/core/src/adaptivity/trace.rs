use std::io::{BufRead, Write};

use serde::Serialize;

use crate::error::{Error, Result};

pub const TRACE_HEADER: &str = "level,n_elements,n_vertices,eta,osc,h1_error,l2_error,n_marked_eta,n_marked_total,mark_ratio,osc_fraction,solve_residual,wall_time_s";

/// One iteration of the adaptive loop.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub level: usize,
    pub n_elements: usize,
    pub n_vertices: usize,
    pub eta: f64,
    pub osc: f64,
    pub h1_error: Option<f64>,
    pub l2_error: Option<f64>,
    pub n_marked_eta: usize,
    pub n_marked_total: usize,
    /// `#M / #M_η`
    pub mark_ratio: f64,
    /// `osc(M_η)² / osc²`
    pub osc_fraction: f64,
    pub solve_residual: f64,
    pub wall_time_s: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AdaptiveTrace {
    pub rows: Vec<TraceRow>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:e}")).unwrap_or_default()
}

impl AdaptiveTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{TRACE_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{:e},{:e},{},{},{},{},{:e},{:e},{:e},{}",
                r.level,
                r.n_elements,
                r.n_vertices,
                r.eta,
                r.osc,
                opt(r.h1_error),
                opt(r.l2_error),
                r.n_marked_eta,
                r.n_marked_total,
                r.mark_ratio,
                r.osc_fraction,
                r.solve_residual,
                opt(r.wall_time_s),
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let header = lines.next().map(|(_, h)| h).transpose()?;
        match header {
            Some(h) if h.trim() == TRACE_HEADER => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("expected header '{TRACE_HEADER}'"),
                })
            }
        }
        let mut rows = Vec::new();
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            rows.push(parse_row(&line).map_err(|message| Error::Parse {
                line: i + 1,
                message,
            })?);
        }
        Ok(Self { rows })
    }
}

fn parse_row(line: &str) -> std::result::Result<TraceRow, String> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 13 {
        return Err(format!("expected 13 fields, found {}", fields.len()));
    }
    fn num<T: std::str::FromStr>(s: &str, name: &str) -> std::result::Result<T, String> {
        s.parse().map_err(|_| format!("cannot parse {name} '{s}'"))
    }
    fn maybe(s: &str, name: &str) -> std::result::Result<Option<f64>, String> {
        if s.is_empty() {
            Ok(None)
        } else {
            num(s, name).map(Some)
        }
    }
    Ok(TraceRow {
        level: num(fields[0], "level")?,
        n_elements: num(fields[1], "n_elements")?,
        n_vertices: num(fields[2], "n_vertices")?,
        eta: num(fields[3], "eta")?,
        osc: num(fields[4], "osc")?,
        h1_error: maybe(fields[5], "h1_error")?,
        l2_error: maybe(fields[6], "l2_error")?,
        n_marked_eta: num(fields[7], "n_marked_eta")?,
        n_marked_total: num(fields[8], "n_marked_total")?,
        mark_ratio: num(fields[9], "mark_ratio")?,
        osc_fraction: num(fields[10], "osc_fraction")?,
        solve_residual: num(fields[11], "solve_residual")?,
        wall_time_s: maybe(fields[12], "wall_time_s")?,
    })
}
