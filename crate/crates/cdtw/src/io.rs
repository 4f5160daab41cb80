// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Curve and norm file formats.
//!
//! Curves are CSV (`x,y` per line, no header) or JSON
//! (`{"vertices": [[x, y], ...]}`). Norms are JSON objects tagged by
//! `type`: `l1`, `l2`, `linf`, `polygon` (with `vertices`) or `approx`
//! (with `base` and `epsilon`).

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{CdtwError, Result};
use crate::geometry::{Point2, PolygonalCurve};
use crate::norms::{approximate_norm, ApproxConfig, GaugePolygon, NormHandle};

/// Accuracy used for the 2-norm when none is given.
pub const DEFAULT_EPSILON: f64 = 0.1;

#[derive(Debug, Deserialize, Serialize)]
struct CurveJson {
    vertices: Vec<[f64; 2]>,
}

pub fn parse_curve_csv(text: &str) -> Result<PolygonalCurve> {
    let mut vs = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| CdtwError::Parse { line: k + 1, message };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(err(format!("expected 2 fields \"x,y\", got {}", fields.len())));
        }
        let num = |f: &str| -> Result<f64> {
            let v: f64 = f.parse().map_err(|_| err(format!("not a number: {f:?}")))?;
            if !v.is_finite() {
                return Err(err(format!("non-finite coordinate {v}")));
            }
            Ok(v)
        };
        vs.push(Point2::new(num(fields[0])?, num(fields[1])?));
    }
    PolygonalCurve::new(vs)
}

pub fn parse_curve_json(text: &str) -> Result<PolygonalCurve> {
    let c: CurveJson = serde_json::from_str(text).map_err(|e| CdtwError::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    PolygonalCurve::new(c.vertices.into_iter().map(Point2::from).collect())
}

/// JSON if the text starts with `{`, CSV otherwise.
pub fn parse_curve(text: &str) -> Result<PolygonalCurve> {
    if text.trim_start().starts_with('{') {
        parse_curve_json(text)
    } else {
        parse_curve_csv(text)
    }
}

pub fn load_curve(path: impl AsRef<Path>) -> Result<PolygonalCurve> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| {
        CdtwError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })?;
    parse_curve(&text)
}

pub fn curve_to_csv(c: &PolygonalCurve) -> String {
    c.vertices()
        .iter()
        .map(|v| format!("{},{}\n", v.x, v.y))
        .collect()
}

pub fn curve_to_json(c: &PolygonalCurve) -> Value {
    json!({ "vertices": c.vertices().iter().map(|v| [v.x, v.y]).collect::<Vec<_>>() })
}

/// A norm as written in a file or on the command line.
#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum NormSpec {
    L1,
    L2,
    Linf,
    Polygon { vertices: Vec<[f64; 2]> },
    Approx { base: String, epsilon: f64 },
}

/// Accepts `l1`, `l2`, `linf`, inline JSON, or a path to a JSON file.
pub fn parse_norm_spec(arg: &str) -> Result<NormSpec> {
    let a = arg.trim();
    match a.to_ascii_lowercase().as_str() {
        "l1" => return Ok(NormSpec::L1),
        "l2" => return Ok(NormSpec::L2),
        "linf" => return Ok(NormSpec::Linf),
        _ => {}
    }
    let text = if a.starts_with('{') {
        a.to_string()
    } else {
        std::fs::read_to_string(a).map_err(|e| {
            CdtwError::Io(std::io::Error::new(e.kind(), format!("norm spec {a}: {e}")))
        })?
    };
    serde_json::from_str(&text).map_err(|e| CdtwError::Parse {
        line: e.line(),
        message: format!("norm spec: {e}"),
    })
}

/// A norm ready for the propagation, and the factor it guarantees.
#[derive(Clone, Debug)]
pub struct ResolvedNorm {
    pub handle: NormHandle,
    /// The requested norm's name.
    pub source: &'static str,
    /// Accuracy of the polygonal replacement, if one was made.
    pub norm_epsilon: Option<f64>,
    pub factor_bound: f64,
}

impl ResolvedNorm {
    pub fn to_json(&self) -> Value {
        let mut v = match &self.handle {
            NormHandle::L1 => json!({"type": "l1"}),
            NormHandle::Linf => json!({"type": "linf"}),
            NormHandle::L2 => json!({"type": "l2"}),
            NormHandle::Gauge(g) => json!({
                "type": "polygon",
                "vertices": g.vertices().iter().map(|v| [v.x, v.y]).collect::<Vec<_>>(),
            }),
        };
        v["source"] = json!(self.source);
        if let Some(e) = self.norm_epsilon {
            v["norm_epsilon"] = json!(e);
        }
        v
    }
}

fn named(base: &str) -> Result<NormSpec> {
    match base.to_ascii_lowercase().as_str() {
        "l1" => Ok(NormSpec::L1),
        "l2" => Ok(NormSpec::L2),
        "linf" => Ok(NormSpec::Linf),
        other => Err(CdtwError::Config(format!("unknown base norm {other:?}"))),
    }
}

/// Turns a spec into a polygonal norm.
///
/// For the 2-norm with overall accuracy `ε` (default
/// [`DEFAULT_EPSILON`]), the polygon is built with accuracy
/// `min(ε / 15, 1)`, which keeps the final factor at `5 + ε`. An `approx`
/// spec uses its own `epsilon` for the polygon directly, giving factor
/// `5 (1 + epsilon)²`.
pub fn resolve_norm(spec: &NormSpec, epsilon: Option<f64>) -> Result<ResolvedNorm> {
    if let Some(e) = epsilon {
        ApproxConfig::new(e)?;
    }
    Ok(match spec {
        NormSpec::L1 => ResolvedNorm {
            handle: NormHandle::L1,
            source: "l1",
            norm_epsilon: None,
            factor_bound: 5.0,
        },
        NormSpec::Linf => ResolvedNorm {
            handle: NormHandle::Linf,
            source: "linf",
            norm_epsilon: None,
            factor_bound: 5.0,
        },
        NormSpec::Polygon { vertices } => {
            let g = GaugePolygon::new(vertices.iter().copied().map(Point2::from).collect())?;
            ResolvedNorm {
                handle: g.into(),
                source: "polygon",
                norm_epsilon: None,
                factor_bound: 5.0,
            }
        }
        NormSpec::L2 => {
            let e = epsilon.unwrap_or(DEFAULT_EPSILON);
            let e0 = (e / 15.0).min(1.0);
            let g = approximate_norm(&NormHandle::L2, ApproxConfig::new(e0)?)?;
            ResolvedNorm {
                handle: g.into(),
                source: "l2",
                norm_epsilon: Some(e0),
                factor_bound: 5.0 + e,
            }
        }
        NormSpec::Approx { base, epsilon: e } => {
            let cfg = ApproxConfig::new(*e)?;
            match named(base)? {
                NormSpec::L2 => ResolvedNorm {
                    handle: approximate_norm(&NormHandle::L2, cfg)?.into(),
                    source: "l2",
                    norm_epsilon: Some(*e),
                    factor_bound: 5.0 * (1.0 + e) * (1.0 + e),
                },
                exact => resolve_norm(&exact, None)?,
            }
        }
    })
}

/// The norm a spec describes, unapproximated (for the oracle).
pub fn exact_norm(spec: &NormSpec) -> Result<NormHandle> {
    Ok(match spec {
        NormSpec::L1 => NormHandle::L1,
        NormSpec::L2 => NormHandle::L2,
        NormSpec::Linf => NormHandle::Linf,
        NormSpec::Polygon { vertices } => {
            GaugePolygon::new(vertices.iter().copied().map(Point2::from).collect())?.into()
        }
        NormSpec::Approx { base, .. } => exact_norm(&named(base)?)?,
    })
}
