//! Measured laminations on a 2-complex, recorded as transverse weights on
//! its edges.

use std::fmt;
use std::ops::{Add, Div, Mul, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum LamError {
    #[error("no weight for edge {0}")]
    MissingWeight(String),
    #[error("unknown edge {0}")]
    UnknownEdge(String),
    #[error("duplicate edge {0}")]
    DuplicateEdge(String),
    #[error("negative weight {value} on edge {edge}")]
    Negative { edge: String, value: String },
    #[error("all weights are zero")]
    AllZero,
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Exact rationals, or floats compared with an absolute tolerance.
pub trait Scalar:
    Clone
    + PartialOrd
    + fmt::Display
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    fn zero() -> Self;
    fn from_int(n: i64) -> Self;
    /// `self ≥ 0` up to the mode's tolerance.
    fn nonnegative(&self) -> bool;
    fn parse(s: &str) -> Option<Self>;
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }

    fn from_int(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn nonnegative(&self) -> bool {
        !self.is_negative()
    }

    /// `p`, `p/q`, or a decimal such as `-0.125`, read exactly.
    fn parse(s: &str) -> Option<Self> {
        if let Ok(x) = BigRational::from_str(s) {
            return Some(x);
        }
        let (neg, body) = s.strip_prefix('-').map_or((false, s), |b| (true, b));
        let (int, frac) = body.split_once('.')?;
        if frac.is_empty() && int.is_empty()
            || !(int.chars().chain(frac.chars())).all(|c| c.is_ascii_digit())
        {
            return None;
        }
        let digits: BigInt = format!("{int}{frac}").parse().ok()?;
        let x = BigRational::new(digits, BigInt::from(10).pow(frac.len() as u32));
        Some(if neg { -x } else { x })
    }
}

/// Tolerance for inequality checks on floating weights.
pub const FLOAT_TOLERANCE: f64 = 1e-12;

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }

    fn from_int(n: i64) -> Self {
        n as f64
    }

    fn nonnegative(&self) -> bool {
        *self >= -FLOAT_TOLERANCE
    }

    fn parse(s: &str) -> Option<Self> {
        s.parse().ok().filter(|x: &f64| x.is_finite())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Complex2 {
    edges: Vec<String>,
    cells: Vec<[usize; 3]>,
}

impl Complex2 {
    pub fn new<S: Into<String>>(
        edges: impl IntoIterator<Item = S>,
        cells: &[[&str; 3]],
    ) -> Result<Complex2, LamError> {
        let edges: Vec<String> = edges.into_iter().map(Into::into).collect();
        for (i, e) in edges.iter().enumerate() {
            if edges[..i].contains(e) {
                return Err(LamError::DuplicateEdge(e.clone()));
            }
        }
        let mut k = Complex2 {
            edges,
            cells: Vec::new(),
        };
        for cell in cells {
            let idx = [
                k.edge_index(cell[0])?,
                k.edge_index(cell[1])?,
                k.edge_index(cell[2])?,
            ];
            k.cells.push(idx);
        }
        Ok(k)
    }

    fn edge_index(&self, id: &str) -> Result<usize, LamError> {
        self.edges
            .iter()
            .position(|e| e == id)
            .ok_or_else(|| LamError::UnknownEdge(id.to_string()))
    }

    pub fn edges(&self) -> &[String] {
        &self.edges
    }

    /// Edge indices of each triangular cell.
    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    /// The boundary of the octahedron: vertices `±x, ±y, ±z`, one edge per
    /// pair of non-antipodal vertices, one cell per octant.
    pub fn octahedron() -> Complex2 {
        let verts = ["x+", "x-", "y+", "y-", "z+", "z-"];
        let antipodal = |i: usize, j: usize| i / 2 == j / 2;
        let mut edges = Vec::new();
        for i in 0..6 {
            for j in i + 1..6 {
                if !antipodal(i, j) {
                    edges.push(format!("{}{}", verts[i], verts[j]));
                }
            }
        }
        let name = |i: usize, j: usize| format!("{}{}", verts[i.min(j)], verts[i.max(j)]);
        let mut cells = Vec::new();
        for x in 0..2 {
            for y in 2..4 {
                for z in 4..6 {
                    cells.push([name(x, y), name(y, z), name(x, z)]);
                }
            }
        }
        let cell_refs: Vec<[&str; 3]> = cells
            .iter()
            .map(|c| [c[0].as_str(), c[1].as_str(), c[2].as_str()])
            .collect();
        Complex2::new(edges.clone(), &cell_refs).expect("well-formed octahedron")
    }

    /// `edge <id>` and `cell <e1> <e2> <e3>` lines.
    pub fn from_text(text: &str) -> Result<Complex2, LamError> {
        let mut edges = Vec::new();
        let mut cells: Vec<(usize, [String; 3])> = Vec::new();
        for (no, line) in crate::homs::content_lines(text) {
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks.as_slice() {
                ["edge", id] => edges.push(id.to_string()),
                ["cell", a, b, c] => {
                    cells.push((no, [a.to_string(), b.to_string(), c.to_string()]))
                }
                _ => {
                    return Err(LamError::Parse {
                        line: no,
                        msg: "expected `edge <id>` or `cell <e1> <e2> <e3>`".into(),
                    })
                }
            }
        }
        let mut k = Complex2::new(edges, &[])?;
        for (no, c) in cells {
            let idx = c
                .iter()
                .map(|e| k.edge_index(e))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| LamError::Parse {
                    line: no,
                    msg: e.to_string(),
                })?;
            k.cells.push([idx[0], idx[1], idx[2]]);
        }
        Ok(k)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for e in &self.edges {
            s += &format!("edge {e}\n");
        }
        for c in &self.cells {
            s += &format!(
                "cell {} {} {}\n",
                self.edges[c[0]], self.edges[c[1]], self.edges[c[2]]
            );
        }
        s
    }
}

/// Nonnegative weights, one per edge of a complex, in edge order.
#[derive(Clone, Debug, PartialEq)]
pub struct Weights<T> {
    values: Vec<T>,
}

impl<T: Scalar> Weights<T> {
    pub fn new(k: &Complex2, values: Vec<T>) -> Result<Weights<T>, LamError> {
        if values.len() < k.edges.len() {
            return Err(LamError::MissingWeight(k.edges[values.len()].clone()));
        }
        if values.len() > k.edges.len() {
            return Err(LamError::UnknownEdge(format!("#{}", k.edges.len())));
        }
        for (e, v) in k.edges.iter().zip(&values) {
            if !v.nonnegative() {
                return Err(LamError::Negative {
                    edge: e.clone(),
                    value: v.to_string(),
                });
            }
        }
        Ok(Weights { values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn scaled(&self, lambda: &T) -> Weights<T> {
        Weights {
            values: self
                .values
                .iter()
                .map(|v| v.clone() * lambda.clone())
                .collect(),
        }
    }

    /// `w <edge-id> <value>` lines; every edge must appear once.
    pub fn from_text(k: &Complex2, text: &str) -> Result<Weights<T>, LamError> {
        let mut values: Vec<Option<T>> = vec![None; k.edges.len()];
        for (no, line) in crate::homs::content_lines(text) {
            let perr = |msg: String| LamError::Parse { line: no, msg };
            let toks: Vec<&str> = line.split_whitespace().collect();
            let ["w", id, value] = toks.as_slice() else {
                return Err(perr("expected `w <edge-id> <value>`".into()));
            };
            let i = k.edge_index(id)?;
            let v = T::parse(value).ok_or_else(|| perr(format!("bad weight {value:?}")))?;
            if values[i].replace(v).is_some() {
                return Err(perr(format!("edge {id} weighted twice")));
            }
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or_else(|| LamError::MissingWeight(k.edges[i].clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Weights::new(k, values)
    }

    pub fn to_text(&self, k: &Complex2) -> String {
        k.edges
            .iter()
            .zip(&self.values)
            .map(|(e, v)| format!("w {e} {v}\n"))
            .collect()
    }
}

/// Corner weights `((w₁+w₂−w₃)/2, (w₂+w₃−w₁)/2, (w₃+w₁−w₂)/2)` of a cell.
pub fn corner_coordinates<T: Scalar>(w: [&T; 3]) -> [T; 3] {
    let two = T::from_int(2);
    let half = |a: &T, b: &T, c: &T| (a.clone() + b.clone() - c.clone()) / two.clone();
    [
        half(w[0], w[1], w[2]),
        half(w[1], w[2], w[0]),
        half(w[2], w[0], w[1]),
    ]
}

/// Every cell satisfies the triangle inequalities, i.e. has nonnegative
/// corners.
pub fn validate<T: Scalar>(k: &Complex2, w: &Weights<T>) -> bool {
    first_violation(k, w).is_none()
}

/// Index of the first cell with a negative corner.
pub fn first_violation<T: Scalar>(k: &Complex2, w: &Weights<T>) -> Option<usize> {
    k.cells.iter().position(|c| {
        let corners = corner_coordinates([&w.values[c[0]], &w.values[c[1]], &w.values[c[2]]]);
        !corners.iter().all(Scalar::nonnegative)
    })
}

/// Rescales so the weights sum to 1.
pub fn projectivize<T: Scalar>(w: &Weights<T>) -> Result<Weights<T>, LamError> {
    let total = w.values.iter().fold(T::zero(), |acc, v| acc + v.clone());
    if total <= T::zero() {
        return Err(LamError::AllZero);
    }
    Ok(Weights {
        values: w.values.iter().map(|v| v.clone() / total.clone()).collect(),
    })
}
