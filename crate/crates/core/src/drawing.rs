//! Drawings DSL: evaluation of base programs to flat 2D geometry, and SVG output.
//!
//! Shapes are anchored as follows: `line` runs from (0,0) to (1,0), `circle`
//! is centred on the origin with radius 1, `square` and `scaled_rect` are
//! centred on the origin. Angles are radians; geometry is y-up.

use std::fmt::Write as _;

use nalgebra::{Matrix3, Vector3};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::program::Expr;

pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("repeat count {0} is not a non-negative integer")]
    BadRepeatCount(f64),
    #[error("non-positive scale {0}")]
    NonPositiveScale(f64),
    #[error("symbol `{0}` has no drawings semantics")]
    NoSemantics(String),
    #[error("`{op}` expected {expected} as argument {index}")]
    Type {
        op: String,
        index: usize,
        expected: &'static str,
    },
    #[error("non-finite value produced by `{0}`")]
    NonFinite(String),
}

/// A similarity transform stored as a 3x3 homogeneous matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformMatrix(Matrix3<f64>);

impl TransformMatrix {
    pub fn identity() -> Self {
        TransformMatrix(Matrix3::identity())
    }

    /// Translation * rotation * uniform scale.
    pub fn new(scale: f64, theta: f64, x: f64, y: f64) -> Result<Self, EvalError> {
        if scale.is_nan() || scale <= 0.0 {
            return Err(EvalError::NonPositiveScale(scale));
        }
        let (s, c) = theta.sin_cos();
        Ok(TransformMatrix(Matrix3::new(
            scale * c,
            -scale * s,
            x,
            scale * s,
            scale * c,
            y,
            0.0,
            0.0,
            1.0,
        )))
    }

    /// `self` applied after `first`.
    pub fn compose(&self, first: &TransformMatrix) -> TransformMatrix {
        TransformMatrix(self.0 * first.0)
    }

    pub fn scale(&self) -> f64 {
        (self.0[(0, 0)] * self.0[(1, 1)] - self.0[(0, 1)] * self.0[(1, 0)])
            .abs()
            .sqrt()
    }

    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let v = self.0 * Vector3::new(x, y, 1.0);
        (v.x, v.y)
    }

    pub fn entries(&self) -> [[f64; 3]; 3] {
        let m = &self.0;
        [
            [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
            [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
            [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
        ]
    }
}

/// Flat drawing output: line segments `(x1, y1, x2, y2)` and circles `(cx, cy, r)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Geometry {
    pub segments: Vec<[f64; 4]>,
    pub circles: Vec<[f64; 3]>,
    canonical: bool,
}

fn cmp_slices(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

impl Geometry {
    pub fn new(segments: Vec<[f64; 4]>, circles: Vec<[f64; 3]>) -> Self {
        Geometry {
            segments,
            circles,
            canonical: false,
        }
        .canonicalize()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty() && self.circles.is_empty()
    }

    pub fn len(&self) -> usize {
        self.segments.len() + self.circles.len()
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    /// Orders each segment's endpoints, sorts both lists and drops duplicates.
    pub fn canonicalize(mut self) -> Self {
        for s in &mut self.segments {
            for v in s.iter_mut() {
                if *v == 0.0 {
                    *v = 0.0;
                }
            }
            if cmp_slices(&s[2..4], &s[0..2]).is_lt() {
                *s = [s[2], s[3], s[0], s[1]];
            }
        }
        for c in &mut self.circles {
            for v in c.iter_mut() {
                if *v == 0.0 {
                    *v = 0.0;
                }
            }
        }
        self.segments.sort_by(|a, b| cmp_slices(a, b));
        self.segments.dedup();
        self.circles.sort_by(|a, b| cmp_slices(a, b));
        self.circles.dedup();
        self.canonical = true;
        self
    }

    fn transformed(&self, m: &TransformMatrix) -> Geometry {
        let k = m.scale();
        Geometry {
            segments: self
                .segments
                .iter()
                .map(|s| {
                    let (a, b) = m.apply(s[0], s[1]);
                    let (c, d) = m.apply(s[2], s[3]);
                    [a, b, c, d]
                })
                .collect(),
            circles: self
                .circles
                .iter()
                .map(|c| {
                    let (x, y) = m.apply(c[0], c[1]);
                    [x, y, c[2] * k]
                })
                .collect(),
            canonical: false,
        }
    }

    fn union(mut self, other: Geometry) -> Geometry {
        self.segments.extend(other.segments);
        self.circles.extend(other.circles);
        self.canonical = false;
        self
    }

    /// `(min_x, min_y, max_x, max_y)`, or `None` when empty.
    pub fn bounds(&self) -> Option<(f64, f64, f64, f64)> {
        let mut b: Option<(f64, f64, f64, f64)> = None;
        let mut add = |x0: f64, y0: f64, x1: f64, y1: f64| {
            b = Some(match b {
                None => (x0, y0, x1, y1),
                Some((a, c, d, e)) => (a.min(x0), c.min(y0), d.max(x1), e.max(y1)),
            });
        };
        for s in &self.segments {
            add(
                s[0].min(s[2]),
                s[1].min(s[3]),
                s[0].max(s[2]),
                s[1].max(s[3]),
            );
        }
        for c in &self.circles {
            add(c[0] - c[2], c[1] - c[2], c[0] + c[2], c[1] + c[2]);
        }
        b
    }

    /// Hex SHA-256 of the canonical geometry rounded to 1e-6.
    pub fn digest(&self) -> String {
        let g = if self.canonical {
            self.clone()
        } else {
            self.clone().canonicalize()
        };
        let mut text = String::new();
        for s in &g.segments {
            let _ = writeln!(
                text,
                "S {} {} {} {}",
                r6(s[0]),
                r6(s[1]),
                r6(s[2]),
                r6(s[3])
            );
        }
        for c in &g.circles {
            let _ = writeln!(text, "C {} {} {}", r6(c[0]), r6(c[1]), r6(c[2]));
        }
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

fn r6(v: f64) -> String {
    let r = (v * 1e6).round() / 1e6;
    let r = if r == 0.0 { 0.0 } else { r };
    format!("{r:.6}")
}

fn unit_line() -> Geometry {
    Geometry {
        segments: vec![[0.0, 0.0, 1.0, 0.0]],
        ..Default::default()
    }
}

fn rect(w: f64, h: f64) -> Geometry {
    let (x0, y0, x1, y1) = (-w / 2.0, -h / 2.0, w / 2.0, h / 2.0);
    Geometry {
        segments: vec![
            [x0, y0, x1, y0],
            [x1, y0, x1, y1],
            [x0, y1, x1, y1],
            [x0, y0, x0, y1],
        ],
        ..Default::default()
    }
}

enum Value {
    Num(f64),
    Matrix(TransformMatrix),
    Shape(Geometry),
}

fn expect_num(v: Value, op: &str, index: usize) -> Result<f64, EvalError> {
    match v {
        Value::Num(x) => Ok(x),
        _ => Err(EvalError::Type {
            op: op.to_string(),
            index,
            expected: "a number",
        }),
    }
}

fn expect_shape(v: Value, op: &str, index: usize) -> Result<Geometry, EvalError> {
    match v {
        Value::Shape(g) => Ok(g),
        _ => Err(EvalError::Type {
            op: op.to_string(),
            index,
            expected: "a shape",
        }),
    }
}

fn expect_matrix(v: Value, op: &str, index: usize) -> Result<TransformMatrix, EvalError> {
    match v {
        Value::Matrix(m) => Ok(m),
        _ => Err(EvalError::Type {
            op: op.to_string(),
            index,
            expected: "a matrix",
        }),
    }
}

fn eval_value(e: &Expr) -> Result<Value, EvalError> {
    let (name, args) = match e {
        Expr::Num(l) => return Ok(Value::Num(l.value())),
        Expr::Var(v) => return Err(EvalError::NoSemantics(format!("${v}"))),
        Expr::Node { name, args, .. } => (name.as_str(), args.as_slice()),
    };
    let arg = |i: usize| eval_value(&args[i]);
    let num = |i: usize| expect_num(eval_value(&args[i])?, name, i);
    let arith = |x: f64| {
        if x.is_finite() {
            Ok(Value::Num(x))
        } else {
            Err(EvalError::NonFinite(name.to_string()))
        }
    };
    match (name, args.len()) {
        ("line", 0) => Ok(Value::Shape(unit_line())),
        ("circle", 0) => Ok(Value::Shape(Geometry {
            circles: vec![[0.0, 0.0, 1.0]],
            ..Default::default()
        })),
        ("square", 0) => Ok(Value::Shape(rect(1.0, 1.0))),
        ("scaled_rect", 2) => {
            let (w, h) = (num(0)?, num(1)?);
            if w.is_nan() || w <= 0.0 {
                return Err(EvalError::NonPositiveScale(w));
            }
            if h.is_nan() || h <= 0.0 {
                return Err(EvalError::NonPositiveScale(h));
            }
            Ok(Value::Shape(rect(w, h)))
        }
        ("graphics_matrix", 4) => Ok(Value::Matrix(TransformMatrix::new(
            num(0)?,
            num(1)?,
            num(2)?,
            num(3)?,
        )?)),
        ("apply_transform", 2) => {
            let g = expect_shape(arg(0)?, name, 0)?;
            let m = expect_matrix(arg(1)?, name, 1)?;
            Ok(Value::Shape(g.transformed(&m)))
        }
        ("repeat", 3) => {
            let g = expect_shape(arg(0)?, name, 0)?;
            let n = num(1)?;
            if !(n >= 0.0 && n.fract() == 0.0 && n < 1e6) {
                return Err(EvalError::BadRepeatCount(n));
            }
            let m = expect_matrix(arg(2)?, name, 2)?;
            let mut acc = Geometry::default();
            let mut power = TransformMatrix::identity();
            for _ in 0..n as usize {
                power = m.compose(&power);
                acc = acc.union(g.transformed(&power));
            }
            Ok(Value::Shape(acc))
        }
        ("connect", 2) => {
            let a = expect_shape(arg(0)?, name, 0)?;
            let b = expect_shape(arg(1)?, name, 1)?;
            Ok(Value::Shape(a.union(b)))
        }
        ("plus", 2) => arith(num(0)? + num(1)?),
        ("minus", 2) => arith(num(0)? - num(1)?),
        ("times", 2) => arith(num(0)? * num(1)?),
        ("div", 2) => arith(num(0)? / num(1)?),
        ("sin", 1) => arith(num(0)?.sin()),
        ("cos", 1) => arith(num(0)?.cos()),
        _ => Err(EvalError::NoSemantics(name.to_string())),
    }
}

/// Evaluates a base-library drawings program to canonical geometry.
///
/// Library calls must be expanded first (see [`crate::library::ConceptLibrary::expand`]).
pub fn eval_drawing(program: &Expr) -> Result<Geometry, EvalError> {
    match eval_value(program)? {
        Value::Shape(g) => Ok(g.canonicalize()),
        _ => Err(EvalError::Type {
            op: "program".into(),
            index: 0,
            expected: "a shape",
        }),
    }
}

/// True iff element counts match and matched elements agree within `tol`
/// in every coordinate.
pub fn geometry_equal(a: &Geometry, b: &Geometry, tol: f64) -> bool {
    let close = |x: &[f64], y: &[f64]| x.iter().zip(y).all(|(p, q)| (p - q).abs() < tol);
    a.segments.len() == b.segments.len()
        && a.circles.len() == b.circles.len()
        && a.segments.iter().zip(&b.segments).all(|(x, y)| close(x, y))
        && a.circles.iter().zip(&b.circles).all(|(x, y)| close(x, y))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvgStyle {
    pub stroke_width: f64,
    pub padding: f64,
}

impl Default for SvgStyle {
    fn default() -> Self {
        SvgStyle {
            stroke_width: 0.05,
            padding: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot render empty geometry")]
pub struct EmptyGeometry;

fn f4(v: f64) -> String {
    let s = format!("{v:.4}");
    if s == "-0.0000" {
        "0.0000".into()
    } else {
        s
    }
}

/// SVG 1.1 document with one `path` per segment and one `circle` per circle.
/// The y axis is flipped here, once.
pub fn render_drawing_svg(geometry: &Geometry, style: SvgStyle) -> Result<String, EmptyGeometry> {
    let g = if geometry.is_canonical() {
        geometry.clone()
    } else {
        geometry.clone().canonicalize()
    };
    let (x0, y0, x1, y1) = g.bounds().ok_or(EmptyGeometry)?;
    let p = style.padding;
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="{} {} {} {}">"#,
        f4(x0 - p),
        f4(-y1 - p),
        f4(x1 - x0 + 2.0 * p),
        f4(y1 - y0 + 2.0 * p)
    );
    let _ = writeln!(
        out,
        r#"<g fill="none" stroke="black" stroke-width="{}" stroke-linecap="round">"#,
        f4(style.stroke_width)
    );
    for s in &g.segments {
        let _ = writeln!(
            out,
            r#"<path d="M {} {} L {} {}"/>"#,
            f4(s[0]),
            f4(-s[1]),
            f4(s[2]),
            f4(-s[3])
        );
    }
    for c in &g.circles {
        let _ = writeln!(
            out,
            r#"<circle cx="{}" cy="{}" r="{}"/>"#,
            f4(c[0]),
            f4(-c[1]),
            f4(c[2])
        );
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}
