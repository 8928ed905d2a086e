use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::trace::{AdaptiveTrace, TraceRow};
use crate::error::{Error, Result};
use crate::mesh::{dist, signed_area, Domain, MarkSet, Mesh, Point};

/// Fewest rows a rate is fitted to.
pub const MIN_FIT_ROWS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Eta,
    Osc,
    H1Error,
    L2Error,
}

impl Quantity {
    pub fn of(self, row: &TraceRow) -> Option<f64> {
        match self {
            Quantity::Eta => Some(row.eta),
            Quantity::Osc => Some(row.osc),
            Quantity::H1Error => row.h1_error,
            Quantity::L2Error => row.l2_error,
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Quantity::Eta => "eta",
            Quantity::Osc => "osc",
            Quantity::H1Error => "h1_error",
            Quantity::L2Error => "l2_error",
        }
    }
}

/// Rows of a trace used for a rate fit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateWindow {
    /// The last decade of `N`, widened to the last [`MIN_FIT_ROWS`] rows
    /// when it holds fewer (uniform runs grow fourfold per level).
    #[default]
    Auto,
    /// The last `ceil(f * len)` rows.
    Fraction(f64),
    /// Rows with `N ≥ N_last / 10^d`.
    Decades(f64),
    LastRows(usize),
}

impl fmt::Display for RateWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateWindow::Auto => write!(f, "auto"),
            RateWindow::Fraction(x) => write!(f, "fraction:{x}"),
            RateWindow::Decades(d) => write!(f, "decades:{d}"),
            RateWindow::LastRows(k) => write!(f, "last:{k}"),
        }
    }
}

impl FromStr for RateWindow {
    type Err = Error;

    /// `auto`, `fraction:<f>`, `decades:<d>` or `last:<k>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidParameter(format!(
                "bad rate window '{s}' (auto|fraction:F|decades:D|last:K)"
            ))
        };
        let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
        let window = match kind {
            "auto" if arg.is_empty() => RateWindow::Auto,
            "fraction" => RateWindow::Fraction(arg.parse().map_err(|_| bad())?),
            "decades" => RateWindow::Decades(arg.parse().map_err(|_| bad())?),
            "last" => RateWindow::LastRows(arg.parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        };
        match window {
            RateWindow::Fraction(x) if !(x > 0.0 && x <= 1.0) => Err(bad()),
            RateWindow::Decades(d) if !(d > 0.0 && d.is_finite()) => Err(bad()),
            _ => Ok(window),
        }
    }
}

impl RateWindow {
    fn select<'a>(&self, rows: &'a [TraceRow]) -> &'a [TraceRow] {
        let start = match *self {
            RateWindow::Auto => {
                let decade = rows.len() - RateWindow::Decades(1.0).select(rows).len();
                decade.min(rows.len().saturating_sub(MIN_FIT_ROWS))
            }
            RateWindow::Fraction(f) => {
                rows.len() - ((f * rows.len() as f64).ceil() as usize).min(rows.len())
            }
            RateWindow::Decades(d) => match rows.last() {
                Some(last) => {
                    let floor = last.n_elements as f64 / 10f64.powf(d);
                    rows.iter()
                        .position(|r| r.n_elements as f64 >= floor)
                        .unwrap_or(0)
                }
                None => 0,
            },
            RateWindow::LastRows(k) => rows.len().saturating_sub(k),
        };
        &rows[start..]
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(sx, sy), &(x, y)| (sx + x.ln(), sy + y.ln()));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(sxy, sxx), &(x, y)| {
        let dx = x.ln() - mx;
        (sxy + dx * (y.ln() - my), sxx + dx * dx)
    });
    sxy / sxx
}

/// Decay rate `-s` of `quantity ~ N^s` over `window`, so that a rate of 1/2
/// means `O(N^{-1/2})`.
pub fn fit_rate(trace: &AdaptiveTrace, quantity: Quantity, window: RateWindow) -> Result<f64> {
    let rows = window.select(&trace.rows);
    let points: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| match quantity.of(r) {
            Some(q) if q > 0.0 && q.is_finite() => Ok((r.n_elements as f64, q)),
            _ => Err(Error::InsufficientData(format!(
                "{} is missing or not positive at level {}",
                quantity.key(),
                r.level
            ))),
        })
        .collect::<Result<_>>()?;
    let distinct =
        points.windows(2).filter(|w| w[0].0 != w[1].0).count() + usize::from(!points.is_empty());
    if points.len() < MIN_FIT_ROWS || distinct < 2 {
        return Err(Error::InsufficientData(format!(
            "{} rows in the fit window, need at least {MIN_FIT_ROWS}",
            points.len()
        )));
    }
    Ok(-log_log_slope(&points))
}

/// `Σ_{k≥ℓ} ‖u_{k+1} − u_k‖²_{H¹} / η_ℓ²` for every `ℓ` with a recorded
/// increment; `increments_sq[k]` is `‖u_{k+1} − u_k‖²_{H¹}`.
pub fn quasi_orthogonality_ratios(increments_sq: &[f64], eta: &[f64]) -> Result<Vec<f64>> {
    if increments_sq.len() > eta.len() {
        return Err(Error::InsufficientData(
            "more increments than estimator values".into(),
        ));
    }
    let mut tail = 0.0;
    let mut out = vec![0.0; increments_sq.len()];
    for l in (0..increments_sq.len()).rev() {
        tail += increments_sq[l];
        out[l] = tail / (eta[l] * eta[l]);
    }
    Ok(out)
}

/// Geometric region for the refinement concentration check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Ball {
        center: Point,
        radius: f64,
    },
    Annulus {
        center: Point,
        inner: f64,
        outer: f64,
    },
}

fn segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len_sq = d[0] * d[0] + d[1] * d[1];
    let s = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len_sq).clamp(0.0, 1.0);
    dist(p, &[a[0] + s * d[0], a[1] + s * d[1]])
}

fn triangle_distance(p: &Point, c: &[Point; 3]) -> f64 {
    let inside = (0..3).all(|k| signed_area(&c[k], &c[(k + 1) % 3], p) >= 0.0);
    if inside {
        0.0
    } else {
        (0..3)
            .map(|k| segment_distance(p, &c[k], &c[(k + 1) % 3]))
            .fold(f64::INFINITY, f64::min)
    }
}

impl Region {
    pub fn contains(&self, p: Point) -> bool {
        match *self {
            Region::Ball { center, radius } => dist(&center, &p) <= radius,
            Region::Annulus {
                center,
                inner,
                outer,
            } => (inner..=outer).contains(&dist(&center, &p)),
        }
    }

    /// Whether the closed triangle with counter-clockwise corners `c` meets the region.
    pub fn intersects(&self, c: &[Point; 3]) -> bool {
        let (center, inner, outer) = match *self {
            Region::Ball { center, radius } => (center, 0.0, radius),
            Region::Annulus {
                center,
                inner,
                outer,
            } => (center, inner, outer),
        };
        let nearest = triangle_distance(&center, c);
        let farthest = c.iter().map(|v| dist(&center, v)).fold(0.0, f64::max);
        nearest <= outer && farthest >= inner
    }

    /// `|region ∩ Ω| / |Ω|` by midpoint sampling on a 1000 x 1000 grid.
    pub fn area_fraction(&self, domain: Domain) -> f64 {
        const SAMPLES: usize = 1000;
        let (lo, hi) = match domain {
            Domain::UnitSquare => (0.0, 1.0),
            Domain::UnitSquareShifted | Domain::LShape => (-1.0, 1.0),
        };
        let step = (hi - lo) / SAMPLES as f64;
        let (mut inside, mut total) = (0usize, 0usize);
        for i in 0..SAMPLES {
            for j in 0..SAMPLES {
                let p = [lo + (i as f64 + 0.5) * step, lo + (j as f64 + 0.5) * step];
                if domain.contains(p) {
                    total += 1;
                    inside += usize::from(self.contains(p));
                }
            }
        }
        inside as f64 / total as f64
    }
}

/// Share of marked elements meeting a region against the region's area share.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Concentration {
    pub marked_fraction: f64,
    pub area_fraction: f64,
    /// `marked_fraction / area_fraction`
    pub ratio: f64,
}

pub fn concentration(
    mesh: &Mesh,
    marked: &MarkSet,
    region: &Region,
    area_fraction: f64,
) -> Concentration {
    let hits = marked
        .iter()
        .filter(|&t| region.intersects(&mesh.corners(t)))
        .count();
    let marked_fraction = if marked.is_empty() {
        0.0
    } else {
        hits as f64 / marked.len() as f64
    };
    Concentration {
        marked_fraction,
        area_fraction,
        ratio: marked_fraction / area_fraction,
    }
}

/// Region where refinement is expected to concentrate for a benchmark:
/// a ball around the reentrant corner, or the circular layer swept by the
/// edge of the transported pulse.
pub fn benchmark_region(problem_name: &str) -> Option<Region> {
    match problem_name {
        "lshape" => Some(Region::Ball {
            center: [0.0, 0.0],
            radius: 0.1,
        }),
        "convection" => Some(Region::Annulus {
            center: [0.5, 0.0],
            inner: 0.25,
            outer: 0.35,
        }),
        _ => None,
    }
}
