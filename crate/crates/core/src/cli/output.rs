use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde_json::{json, Value};

use super::config::ExperimentConfig;
use crate::adaptivity::{fit_rate, AdaptiveRun, AdaptiveTrace, Quantity, RateWindow, TraceRow};
use crate::error::{Error, Result};
use crate::fvm::RESIDUAL_TOLERANCE;
use crate::problem::{AssumptionReport, Quadrature};

const RATE_QUANTITIES: [Quantity; 4] = [
    Quantity::Eta,
    Quantity::Osc,
    Quantity::H1Error,
    Quantity::L2Error,
];

/// Mark ratios are reported from this level on; the first levels are dominated by the initial mesh.
pub const MARK_RATIO_FROM_LEVEL: usize = 5;

fn rates(trace: &AdaptiveTrace, window: RateWindow) -> Value {
    let mut m = serde_json::Map::new();
    for q in RATE_QUANTITIES {
        m.insert(q.key().into(), fit_rate(trace, q, window).ok().into());
    }
    Value::Object(m)
}

fn max_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    values.reduce(f64::max)
}

/// Metadata written next to the trace.
pub fn summary(
    config: &ExperimentConfig,
    run: &AdaptiveRun,
    assumptions: &AssumptionReport,
    quadrature: &Quadrature,
    total_seconds: Option<f64>,
) -> Value {
    let rows = &run.trace.rows;
    let last = rows.last();
    let window = RateWindow::default();
    json!({
        "software": { "name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") },
        "config": config,
        "status": if run.failure.is_some() { "solver_failure" } else { "ok" },
        "failure": run.failure.as_ref().map(|e| e.to_string()),
        "levels": rows.len(),
        "final": last.map(|r| json!({
            "level": r.level,
            "n_elements": r.n_elements,
            "n_vertices": r.n_vertices,
            "eta": r.eta,
            "osc": r.osc,
            "h1_error": r.h1_error,
            "l2_error": r.l2_error,
        })),
        "rate_window": window.to_string(),
        "rates": rates(&run.trace, window),
        "max_mark_ratio": max_of(rows.iter().skip(MARK_RATIO_FROM_LEVEL).map(|r| r.mark_ratio)),
        "mark_ratio_from_level": MARK_RATIO_FROM_LEVEL,
        "min_osc_fraction": rows.iter().filter(|r| r.n_marked_eta > 0).map(|r| r.osc_fraction).reduce(f64::min),
        "assumptions": {
            "report": assumptions,
            "elliptic": assumptions.is_elliptic(),
            "drift_condition": assumptions.drift_condition_holds(),
        },
        "solver": {
            "method": "sparse LU with iterative refinement",
            "residual_tolerance": RESIDUAL_TOLERANCE,
            "max_relative_residual": max_of(rows.iter().map(|r| r.solve_residual)),
        },
        "quadrature": {
            "degree": quadrature.degree(),
            "triangle_points": quadrature.triangle.len(),
            "segment_points": quadrature.segment.len(),
            "flux_rule": quadrature.flux,
        },
        "wall_time_s": total_seconds,
    })
}

pub const DIAGNOSTICS_HEADER: &str = "level,n_elements,box_area_error,sub_volume_error,conforming,min_angle,angle_floor,\
shape_regularity,shape_ceiling,orthogonality_defect,source_l2,defect_identity,increment_h1_sq,quasi_orthogonality,\
fvm_h1_error,fem_h1_error,fvm_osc,fem_osc,fem_ratio,concentration";

fn cell(v: Option<f64>) -> String {
    v.map(|v| format!("{v:e}")).unwrap_or_default()
}

pub fn write_diagnostics<W: Write>(run: &AdaptiveRun, mut out: W) -> Result<()> {
    let quasi = run.quasi_orthogonality().ok();
    writeln!(out, "{DIAGNOSTICS_HEADER}")?;
    for (i, d) in run.diagnostics.iter().enumerate() {
        let g = &d.geometry;
        writeln!(
            out,
            "{},{},{:e},{:e},{},{:e},{:e},{:e},{:e},{},{},{},{},{},{},{},{},{},{},{}",
            d.level,
            d.n_elements,
            g.box_area_error,
            g.sub_volume_error,
            g.conforming,
            g.min_angle,
            g.angle_floor,
            g.shape_regularity,
            g.shape_ceiling,
            cell(d.orthogonality_defect),
            cell(d.source_l2),
            cell(d.defect_identity),
            cell(d.increment_h1_sq),
            cell(quasi.as_ref().and_then(|q| q.get(i).copied())),
            cell(d.fem.map(|f| f.fvm_h1_error)),
            cell(d.fem.map(|f| f.fem_h1_error)),
            cell(d.fem.map(|f| f.fvm_osc)),
            cell(d.fem.map(|f| f.fem_osc)),
            cell(d.fem.map(|f| f.ratio)),
            cell(d.concentration.map(|c| c.ratio)),
        )?;
    }
    Ok(())
}

/// Rate of one quantity in two traces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateDelta {
    pub quantity: Quantity,
    pub a: Option<f64>,
    pub b: Option<f64>,
}

impl RateDelta {
    pub fn delta(&self) -> Option<f64> {
        Some(self.a? - self.b?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    /// Rows of both traces keyed by level.
    pub levels: BTreeMap<usize, (Option<TraceRow>, Option<TraceRow>)>,
    pub rates: Vec<RateDelta>,
}

pub const COMPARE_HEADER: &str =
    "level,n_elements_a,eta_a,osc_a,h1_error_a,n_elements_b,eta_b,osc_b,h1_error_b";

pub fn compare_traces(a: &AdaptiveTrace, b: &AdaptiveTrace, window: RateWindow) -> Comparison {
    let mut levels: BTreeMap<usize, (Option<TraceRow>, Option<TraceRow>)> = BTreeMap::new();
    for r in &a.rows {
        levels.entry(r.level).or_default().0 = Some(r.clone());
    }
    for r in &b.rows {
        levels.entry(r.level).or_default().1 = Some(r.clone());
    }
    let rates = RATE_QUANTITIES
        .iter()
        .map(|&quantity| RateDelta {
            quantity,
            a: fit_rate(a, quantity, window).ok(),
            b: fit_rate(b, quantity, window).ok(),
        })
        .collect();
    Comparison { levels, rates }
}

fn nan_or(v: Option<f64>) -> String {
    v.map(|v| format!("{v:e}")).unwrap_or_else(|| "nan".into())
}

impl Comparison {
    /// Merged CSV followed by `# rate` comment lines with `delta = a - b`.
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{COMPARE_HEADER}")?;
        let side = |r: &Option<TraceRow>| match r {
            Some(r) => format!(
                "{},{:e},{:e},{}",
                r.n_elements,
                r.eta,
                r.osc,
                cell(r.h1_error)
            ),
            None => ",,,".into(),
        };
        for (level, (a, b)) in &self.levels {
            writeln!(out, "{level},{},{}", side(a), side(b))?;
        }
        for r in &self.rates {
            writeln!(
                out,
                "# rate {}: a = {} b = {} delta = {}",
                r.quantity.key(),
                nan_or(r.a),
                nan_or(r.b),
                nan_or(r.delta())
            )?;
        }
        Ok(())
    }
}

pub const PLOT_HEADER: &str = "# N eta osc err";

/// Whitespace separated `N eta osc err` lines; a missing error is `nan`.
pub fn write_plot_data<W: Write>(trace: &AdaptiveTrace, mut out: W) -> Result<()> {
    writeln!(out, "{PLOT_HEADER}")?;
    for r in &trace.rows {
        writeln!(
            out,
            "{} {:e} {:e} {}",
            r.n_elements,
            r.eta,
            r.osc,
            nan_or(r.h1_error)
        )?;
    }
    Ok(())
}

pub fn read_plot_data<R: BufRead>(input: R) -> Result<Vec<[f64; 4]>> {
    let mut rows = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let values: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                line: i + 1,
                message: format!("{e}"),
            })?;
        let row: [f64; 4] = values.try_into().map_err(|v: Vec<f64>| Error::Parse {
            line: i + 1,
            message: format!("expected 4 columns, found {}", v.len()),
        })?;
        rows.push(row);
    }
    Ok(rows)
}
