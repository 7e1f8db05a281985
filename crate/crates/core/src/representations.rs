//! Exact matrix images of free and limit groups in `SL₂(ℚ)` and `SO(3, ℚ)`,
//! and a numerical search for `SL₂(ℝ)` representations of presented groups.

use std::fmt;

use nalgebra::{DMatrix, DVector, Matrix2};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::clg::{discriminate, Clg, ClgError, Mode};
use crate::homs::{pairwise_quotients, Hom, Presentation};
use crate::word::Word;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum RepError {
    #[error(transparent)]
    Clg(#[from] ClgError),
    #[error("determinant is {0}, not 1")]
    Determinant(String),
    #[error("matrix is not orthogonal")]
    NotOrthogonal,
    #[error("entry {0} has a denominator that is not a power of 5")]
    Denominator(String),
    #[error("element {0} is trivial in the group")]
    TrivialElement(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

fn perr(line: usize, msg: impl Into<String>) -> RepError {
    RepError::Parse {
        line,
        msg: msg.into(),
    }
}

/// `matrix <gen> <entries...>` lines, checked against the generator names.
fn matrix_lines<'t>(
    text: &'t str,
    names: &[String],
) -> Result<Vec<(usize, Vec<&'t str>)>, RepError> {
    let mut rows: Vec<Option<(usize, Vec<&str>)>> = vec![None; names.len()];
    for (no, line) in crate::homs::content_lines(text) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.first() != Some(&"matrix") {
            continue;
        }
        let name = toks.get(1).ok_or_else(|| perr(no, "missing generator"))?;
        let i = names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| perr(no, format!("unknown generator {name:?}")))?;
        rows[i] = Some((no, toks[2..].to_vec()));
    }
    rows.into_iter()
        .enumerate()
        .map(|(i, r)| r.ok_or_else(|| perr(0, format!("no matrix for {}", names[i]))))
        .collect()
}

fn parse_q(no: usize, s: &str) -> Result<BigRational, RepError> {
    s.parse()
        .map_err(|_| perr(no, format!("bad rational {s:?}")))
}

fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn q2(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn fmt_q(x: &BigRational) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// An element of `SL₂(ℚ)`, entries row by row.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mat2([BigRational; 4]);

impl Mat2 {
    pub fn new(
        a: BigRational,
        b: BigRational,
        c: BigRational,
        d: BigRational,
    ) -> Result<Mat2, RepError> {
        let det = &a * &d - &b * &c;
        if !det.is_one() {
            return Err(RepError::Determinant(fmt_q(&det)));
        }
        Ok(Mat2([a, b, c, d]))
    }

    pub fn from_ints(a: i64, b: i64, c: i64, d: i64) -> Result<Mat2, RepError> {
        Mat2::new(q(a), q(b), q(c), q(d))
    }

    pub fn identity() -> Mat2 {
        Mat2([q(1), q(0), q(0), q(1)])
    }

    pub fn entries(&self) -> &[BigRational; 4] {
        &self.0
    }

    pub fn trace(&self) -> BigRational {
        &self.0[0] + &self.0[3]
    }

    pub fn inverse(&self) -> Mat2 {
        let [a, b, c, d] = &self.0;
        Mat2([d.clone(), -b.clone(), -c.clone(), a.clone()])
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let [a, b, c, d] = &self.0;
        let [e, f, g, h] = &o.0;
        Mat2([a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h])
    }

    pub fn is_identity(&self) -> bool {
        *self == Mat2::identity()
    }

    /// `±I`, the kernel of `SL₂ → PSL₂`.
    pub fn is_central(&self) -> bool {
        self.0[1].is_zero() && self.0[2].is_zero() && self.0[0] == self.0[3]
    }

    /// Image of a word with `gens[i]` as the image of generator `i + 1`.
    pub fn of_word(w: &Word, gens: &[Mat2]) -> Mat2 {
        let mut m = Mat2::identity();
        for l in w.letters() {
            let g = &gens[l.index() as usize - 1];
            m = if l.is_positive() {
                m.mul(g)
            } else {
                m.mul(&g.inverse())
            };
        }
        m
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e: Vec<String> = self.0.iter().map(fmt_q).collect();
        write!(f, "[[{}, {}], [{}, {}]]", e[0], e[1], e[2], e[3])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IsometryClass {
    Identity,
    Elliptic,
    Parabolic,
    Hyperbolic,
}

impl IsometryClass {
    pub fn label(self) -> &'static str {
        match self {
            IsometryClass::Identity => "identity",
            IsometryClass::Elliptic => "elliptic",
            IsometryClass::Parabolic => "parabolic",
            IsometryClass::Hyperbolic => "hyperbolic",
        }
    }
}

pub fn classify_isometry(m: &Mat2) -> IsometryClass {
    if m.is_central() {
        return IsometryClass::Identity;
    }
    let t = m.trace().abs();
    let two = q(2);
    if t > two {
        IsometryClass::Hyperbolic
    } else if t == two {
        IsometryClass::Parabolic
    } else {
        IsometryClass::Elliptic
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepCertificate {
    pub depth: usize,
    pub words_checked: usize,
    /// First word that failed, if any.
    pub counterexample: Option<Word>,
}

impl SweepCertificate {
    pub fn holds(&self) -> bool {
        self.counterexample.is_none()
    }
}

/// `A = diag(3, 1/3)` and `B = T A T⁻¹` with `T = [[1, 1], [1, 2]]`.
pub fn schottky_matrices() -> [Mat2; 2] {
    let a = Mat2::new(q(3), q(0), q(0), q2(1, 3)).unwrap();
    let t = Mat2::from_ints(1, 1, 1, 2).unwrap();
    let b = t.mul(&a).mul(&t.inverse());
    [a, b]
}

/// Visits every nontrivial reduced word of length at most `depth` in two
/// generators with the product of its letters, extending prefixes on the
/// right. `letters` holds `x₁, x₁⁻¹, x₂, x₂⁻¹`. Stops early when `visit`
/// returns false.
fn sweep_words<M>(
    depth: usize,
    letters: &[M; 4],
    mul: &dyn Fn(&M, &M) -> M,
    visit: &mut dyn FnMut(&Word, &M) -> bool,
) {
    fn go<M>(
        prefix: &mut Vec<i32>,
        m: &M,
        depth: usize,
        letters: &[M; 4],
        mul: &dyn Fn(&M, &M) -> M,
        visit: &mut dyn FnMut(&Word, &M) -> bool,
    ) -> bool {
        if prefix.len() == depth {
            return true;
        }
        for (k, x) in [1, -1, 2, -2].into_iter().enumerate() {
            if prefix.last() == Some(&-x) {
                continue;
            }
            prefix.push(x);
            let next = mul(m, &letters[k]);
            let keep = visit(&Word::from_signed(2, prefix), &next)
                && go(prefix, &next, depth, letters, mul, visit);
            prefix.pop();
            if !keep {
                return false;
            }
        }
        true
    }
    for (k, x) in [1, -1, 2, -2].into_iter().enumerate() {
        let mut prefix = vec![x];
        if !(visit(&Word::from_signed(2, &prefix), &letters[k])
            && go(&mut prefix, &letters[k], depth, letters, mul, visit))
        {
            return;
        }
    }
}

/// The Schottky pair with a check that every nontrivial reduced word of
/// length at most `depth` has `|tr| > 2`. The trace of each word's inverse
/// and of a cyclic permutation are compared along the way.
pub fn schottky_pair(depth: usize) -> ([Mat2; 2], SweepCertificate) {
    let gens = schottky_matrices();
    let letters = [
        gens[0].clone(),
        gens[0].inverse(),
        gens[1].clone(),
        gens[1].inverse(),
    ];
    let mut counterexample = None;
    let mut words_checked = 0;
    sweep_words(depth, &letters, &|x, y| x.mul(y), &mut |w, m| {
        words_checked += 1;
        let tr = m.trace();
        // tr(w⁻¹) = tr(w) in SL₂; the rotated word is compared directly.
        let inv_ok = m.inverse().trace() == tr;
        let mut rotated = w.letters().to_vec();
        rotated.rotate_left(1);
        let rot = Word::reduce(2, rotated).unwrap();
        let rot_ok = rot.len() != w.len() || Mat2::of_word(&rot, &gens).trace() == tr;
        let ok = inv_ok && rot_ok && classify_isometry(m) == IsometryClass::Hyperbolic;
        if !ok {
            counterexample = Some(w.clone());
        }
        ok
    });
    (
        gens,
        SweepCertificate {
            depth,
            words_checked,
            counterexample,
        },
    )
}

/// An element of `SO(3)` with entries in `ℤ[1/5]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mat3([[BigRational; 3]; 3]);

impl Mat3 {
    pub fn new(rows: [[BigRational; 3]; 3]) -> Result<Mat3, RepError> {
        for x in rows.iter().flatten() {
            let mut d = x.denom().clone();
            let five = BigInt::from(5);
            while (&d % &five).is_zero() {
                d /= &five;
            }
            if !d.is_one() {
                return Err(RepError::Denominator(fmt_q(x)));
            }
        }
        let m = Mat3(rows);
        if !m.is_orthogonal() {
            return Err(RepError::NotOrthogonal);
        }
        let det = m.determinant();
        if !det.is_one() {
            return Err(RepError::Determinant(fmt_q(&det)));
        }
        Ok(m)
    }

    pub fn identity() -> Mat3 {
        Mat3(std::array::from_fn(|i| {
            std::array::from_fn(|j| q((i == j) as i64))
        }))
    }

    pub fn rows(&self) -> &[[BigRational; 3]; 3] {
        &self.0
    }

    pub fn transpose(&self) -> Mat3 {
        Mat3(std::array::from_fn(|i| {
            std::array::from_fn(|j| self.0[j][i].clone())
        }))
    }

    pub fn mul(&self, o: &Mat3) -> Mat3 {
        Mat3(std::array::from_fn(|i| {
            std::array::from_fn(|j| (0..3).fold(q(0), |acc, k| acc + &self.0[i][k] * &o.0[k][j]))
        }))
    }

    pub fn apply(&self, v: &[BigRational; 3]) -> [BigRational; 3] {
        std::array::from_fn(|i| (0..3).fold(q(0), |acc, k| acc + &self.0[i][k] * &v[k]))
    }

    pub fn determinant(&self) -> BigRational {
        let m = &self.0;
        &m[0][0] * (&m[1][1] * &m[2][2] - &m[1][2] * &m[2][1])
            - &m[0][1] * (&m[1][0] * &m[2][2] - &m[1][2] * &m[2][0])
            + &m[0][2] * (&m[1][0] * &m[2][1] - &m[1][1] * &m[2][0])
    }

    pub fn is_orthogonal(&self) -> bool {
        self.transpose().mul(self) == Mat3::identity()
    }

    pub fn of_word(w: &Word, gens: &[Mat3]) -> Mat3 {
        let mut m = Mat3::identity();
        for l in w.letters() {
            let g = &gens[l.index() as usize - 1];
            m = if l.is_positive() {
                m.mul(g)
            } else {
                m.mul(&g.transpose())
            };
        }
        m
    }
}

impl fmt::Display for Mat3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .0
            .iter()
            .map(|r| format!("[{}]", r.iter().map(fmt_q).collect::<Vec<_>>().join(", ")))
            .collect();
        write!(f, "[{}]", rows.join(", "))
    }
}

/// Rotations by `arccos(3/5)` about the z-axis and the x-axis.
pub fn so3_matrices() -> [Mat3; 2] {
    let (c, s) = (q2(3, 5), q2(4, 5));
    let (o, z) = (q(1), q(0));
    let p = Mat3::new([
        [c.clone(), -s.clone(), z.clone()],
        [s.clone(), c.clone(), z.clone()],
        [z.clone(), z.clone(), o.clone()],
    ])
    .unwrap();
    let x = Mat3::new([
        [o, z.clone(), z.clone()],
        [z.clone(), c.clone(), -s.clone()],
        [z, s, c],
    ])
    .unwrap();
    [p, x]
}

type IntMat3 = [[BigInt; 3]; 3];

fn int_mul(a: &IntMat3, b: &IntMat3) -> IntMat3 {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| (0..3).fold(BigInt::zero(), |acc, k| acc + &a[i][k] * &b[k][j]))
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RotationCertificate {
    pub depth: usize,
    pub words_checked: usize,
    /// Words that fix `(1, 0, 0)`. The second rotation has that axis, so its
    /// powers always appear here.
    pub fixing_e1: Vec<Word>,
    /// First word whose matrix is the identity or fails to be orthogonal.
    pub counterexample: Option<Word>,
}

impl RotationCertificate {
    /// Every nontrivial word of length at most `depth` moves `(1, 0, 0)`.
    pub fn moves_e1(&self) -> bool {
        self.fixing_e1.is_empty()
    }

    /// Every nontrivial word of length at most `depth` is a non-identity
    /// rotation.
    pub fn holds(&self) -> bool {
        self.counterexample.is_none()
    }

    /// Whether the words fixing `(1, 0, 0)` are exactly the powers of the
    /// rotation about the x-axis.
    pub fn fixers_are_axis_powers(&self) -> bool {
        self.fixing_e1.iter().all(|w| w.support() == vec![2])
    }
}

/// The rotation pair, checked on every nontrivial reduced word of length at
/// most `depth` in scaled integer arithmetic (`5^{|w|}` times the word's
/// matrix): whether it moves `(1, 0, 0)`, whether it is the identity, and
/// that it is orthogonal.
pub fn so3_pair(depth: usize) -> ([Mat3; 2], RotationCertificate) {
    let gens = so3_matrices();
    let int = |m: [[i64; 3]; 3]| -> IntMat3 { m.map(|r| r.map(BigInt::from)) };
    // 5·P, 5·P⁻¹, 5·Q, 5·Q⁻¹.
    let letters = [
        int([[3, -4, 0], [4, 3, 0], [0, 0, 5]]),
        int([[3, 4, 0], [-4, 3, 0], [0, 0, 5]]),
        int([[5, 0, 0], [0, 3, -4], [0, 4, 3]]),
        int([[5, 0, 0], [0, 3, 4], [0, -4, 3]]),
    ];
    let mut fixing_e1 = Vec::new();
    let mut counterexample = None;
    let mut words_checked = 0;
    sweep_words(depth, &letters, &int_mul, &mut |w, m| {
        words_checked += 1;
        let scale = BigInt::from(5).pow(w.len() as u32);
        // The first column is the scaled image of (1, 0, 0).
        let on_axis = m[0][0] == scale && m[1][0].is_zero() && m[2][0].is_zero();
        if on_axis {
            fixing_e1.push(w.clone());
        }
        let diagonal = |d: &BigInt| -> IntMat3 {
            std::array::from_fn(|i| {
                std::array::from_fn(|j| if i == j { d.clone() } else { BigInt::zero() })
            })
        };
        let mt: IntMat3 = std::array::from_fn(|i| std::array::from_fn(|j| m[j][i].clone()));
        let orthogonal = int_mul(&mt, m) == diagonal(&(&scale * &scale));
        if counterexample.is_none() && (*m == diagonal(&scale) || !orthogonal) {
            counterexample = Some(w.clone());
        }
        true
    });
    (
        gens,
        RotationCertificate {
            depth,
            words_checked,
            fixing_e1,
            counterexample,
        },
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Sl2,
    So3,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Matrices {
    Sl2(Vec<Mat2>),
    So3(Vec<Mat3>),
}

impl Matrices {
    /// `matrix <gen> <entries row by row>` with entries written `p/q`.
    pub fn to_text(&self, names: &[String]) -> String {
        let mut s = String::new();
        let entries: Vec<Vec<String>> = match self {
            Matrices::Sl2(ms) => ms
                .iter()
                .map(|m| m.entries().iter().map(fmt_q).collect())
                .collect(),
            Matrices::So3(ms) => ms
                .iter()
                .map(|m| m.rows().iter().flatten().map(fmt_q).collect())
                .collect(),
        };
        for (name, e) in names.iter().zip(entries) {
            s += &format!("matrix {name} {}\n", e.join(" "));
        }
        s
    }

    /// Four entries per line for `SL₂`, nine for `SO(3)`; other lines are
    /// ignored.
    pub fn from_text(text: &str, names: &[String]) -> Result<Matrices, RepError> {
        let rows = matrix_lines(text, names)?;
        let width = rows.first().map_or(4, |(_, r)| r.len());
        let mut sl2 = Vec::new();
        let mut so3 = Vec::new();
        for (no, r) in rows {
            if r.len() != width || !(width == 4 || width == 9) {
                return Err(perr(no, "expected 4 or 9 entries, the same on every line"));
            }
            let q: Vec<BigRational> = r.iter().map(|x| parse_q(no, x)).collect::<Result<_, _>>()?;
            if width == 4 {
                let [a, b, c, d]: [BigRational; 4] = q.try_into().unwrap();
                sl2.push(Mat2::new(a, b, c, d)?);
            } else {
                let m: [[BigRational; 3]; 3] =
                    std::array::from_fn(|i| std::array::from_fn(|j| q[3 * i + j].clone()));
                so3.push(Mat3::new(m)?);
            }
        }
        Ok(if width == 4 {
            Matrices::Sl2(sl2)
        } else {
            Matrices::So3(so3)
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmbeddingReport {
    /// Every element of the set maps to a non-identity matrix.
    pub nontrivial: bool,
    /// For `SL₂`: every element of the set maps to a hyperbolic matrix.
    pub hyperbolic: bool,
    /// For `SL₂`: number of sampled nontrivial elements with a parabolic image.
    pub parabolic_samples: usize,
    pub samples: usize,
    pub classes: Vec<IsometryClass>,
}

impl EmbeddingReport {
    pub fn passed(&self) -> bool {
        self.nontrivial && self.hyperbolic && self.parabolic_samples == 0
    }
}

#[derive(Clone, Debug)]
pub struct Embedding {
    pub hom: Hom,
    pub matrices: Matrices,
    pub report: EmbeddingReport,
}

/// Composes a discriminating homomorphism, injective on `xs`, with the fixed
/// Schottky or rotation pair. The sampled elements are `xs` and the
/// quotients `x y⁻¹` that are nontrivial in the group.
pub fn embed_clg(c: &Clg, xs: &[Word], target: Target) -> Result<Embedding, RepError> {
    if let Some(x) = xs.iter().find(|x| c.is_trivial(x)) {
        return Err(RepError::TrivialElement(c.alphabet().format(x)));
    }
    let d = discriminate(c, xs, Mode::Injective)?;
    let hom = d.hom;
    let images: Vec<Word> = xs
        .iter()
        .map(|x| hom.evaluate(x).expect("rank checked"))
        .collect();
    let samples: Vec<Word> = pairwise_quotients(xs)
        .into_iter()
        .filter(|w| !c.is_trivial(w))
        .map(|w| hom.evaluate(&w).expect("rank checked"))
        .chain(images.iter().cloned())
        .collect();
    match target {
        Target::Sl2 => {
            let pair = schottky_matrices();
            let matrices: Vec<Mat2> = hom
                .images()
                .iter()
                .map(|w| Mat2::of_word(w, &pair))
                .collect();
            let classes: Vec<IsometryClass> = images
                .iter()
                .map(|w| classify_isometry(&Mat2::of_word(w, &pair)))
                .collect();
            let parabolic_samples = samples
                .iter()
                .filter(|w| classify_isometry(&Mat2::of_word(w, &pair)) == IsometryClass::Parabolic)
                .count();
            let report = EmbeddingReport {
                nontrivial: classes.iter().all(|&k| k != IsometryClass::Identity),
                hyperbolic: classes.iter().all(|&k| k == IsometryClass::Hyperbolic),
                parabolic_samples,
                samples: samples.len(),
                classes,
            };
            Ok(Embedding {
                hom,
                matrices: Matrices::Sl2(matrices),
                report,
            })
        }
        Target::So3 => {
            let pair = so3_matrices();
            let matrices: Vec<Mat3> = hom
                .images()
                .iter()
                .map(|w| Mat3::of_word(w, &pair))
                .collect();
            let nontrivial = images
                .iter()
                .all(|w| Mat3::of_word(w, &pair) != Mat3::identity());
            let report = EmbeddingReport {
                nontrivial,
                hyperbolic: true,
                parabolic_samples: 0,
                samples: samples.len(),
                classes: Vec::new(),
            };
            Ok(Embedding {
                hom,
                matrices: Matrices::So3(matrices),
                report,
            })
        }
    }
}

#[derive(Clone, Debug)]
pub struct NumericOptions {
    pub attempts: usize,
    pub tolerance: f64,
    pub seed: u64,
    /// Traces are pushed past `2 + trace_margin` during the descent.
    pub trace_margin: f64,
    pub max_iterations: usize,
}

impl Default for NumericOptions {
    fn default() -> Self {
        NumericOptions {
            attempts: 50,
            tolerance: 1e-9,
            seed: 0,
            trace_margin: 0.01,
            max_iterations: 400,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NumericRep {
    /// Per generator, row by row, each with determinant 1.
    pub matrices: Vec<[f64; 4]>,
    /// Largest Frobenius distance from a relator image to the identity.
    pub residual: f64,
    pub traces: Vec<f64>,
    pub success: bool,
    /// Index of the restart that produced this result.
    pub attempt: usize,
}

impl NumericRep {
    pub fn to_text(&self, p: &Presentation) -> String {
        let mut s = String::new();
        for (name, m) in p.generators().iter().zip(&self.matrices) {
            s += &format!(
                "matrix {name} {:.16e} {:.16e} {:.16e} {:.16e}\n",
                m[0], m[1], m[2], m[3]
            );
        }
        s += &format!("residual {:.16e}\n", self.residual);
        for t in &self.traces {
            s += &format!("trace {t:.16e}\n");
        }
        s += &format!("attempt {}\n", self.attempt);
        s += &format!("success {}\n", self.success);
        s
    }

    pub fn from_text(p: &Presentation, text: &str) -> Result<NumericRep, RepError> {
        let float = |no: usize, x: &str| {
            x.parse::<f64>()
                .map_err(|_| perr(no, format!("bad number {x:?}")))
        };
        let mut matrices = Vec::new();
        for (no, r) in matrix_lines(text, p.generators())? {
            let v: Vec<f64> = r.iter().map(|x| float(no, x)).collect::<Result<_, _>>()?;
            matrices.push(v.try_into().map_err(|_| perr(no, "expected 4 entries"))?);
        }
        let (mut residual, mut traces, mut attempt, mut success) = (None, Vec::new(), 0, None);
        for (no, line) in crate::homs::content_lines(text) {
            match line.split_whitespace().collect::<Vec<_>>().as_slice() {
                ["matrix", ..] => {}
                ["residual", x] => residual = Some(float(no, x)?),
                ["trace", x] => traces.push(float(no, x)?),
                ["attempt", x] => attempt = x.parse().map_err(|_| perr(no, "bad attempt"))?,
                ["success", x] => success = Some(x.parse().map_err(|_| perr(no, "bad flag"))?),
                _ => return Err(perr(no, "unknown line")),
            }
        }
        Ok(NumericRep {
            matrices,
            residual: residual.ok_or_else(|| perr(0, "missing residual"))?,
            traces,
            success: success.ok_or_else(|| perr(0, "missing success"))?,
            attempt,
        })
    }
}

type M2 = Matrix2<f64>;

/// Scales to determinant 1, flipping the first row if the determinant is
/// negative.
fn normalize(x: &[f64]) -> M2 {
    let mut m = M2::new(x[0], x[1], x[2], x[3]);
    let mut det = m.determinant();
    if det < 0.0 {
        m[(0, 0)] = -m[(0, 0)];
        m[(0, 1)] = -m[(0, 1)];
        det = -det;
    }
    m / det.max(1e-300).sqrt()
}

fn word_matrix(w: &Word, gens: &[M2]) -> M2 {
    let mut m = M2::identity();
    for l in w.letters() {
        let g = gens[l.index() as usize - 1];
        let g = if l.is_positive() {
            g
        } else {
            M2::new(g[(1, 1)], -g[(0, 1)], -g[(1, 0)], g[(0, 0)])
        };
        m *= g;
    }
    m
}

struct Problem<'a> {
    relators: &'a [Word],
    targets: &'a [Word],
    margin: f64,
}

impl Problem<'_> {
    fn gens(&self, x: &[f64]) -> Vec<M2> {
        x.chunks(4).map(normalize).collect()
    }

    fn residuals(&self, x: &[f64]) -> DVector<f64> {
        let gens = self.gens(x);
        let mut r = Vec::new();
        for w in self.relators {
            let d = word_matrix(w, &gens) - M2::identity();
            r.extend(d.iter());
        }
        for w in self.targets {
            let t = word_matrix(w, &gens).trace().abs();
            r.push((2.0 + self.margin - t).max(0.0));
        }
        DVector::from_vec(r)
    }

    fn relator_residual(&self, x: &[f64]) -> f64 {
        let gens = self.gens(x);
        self.relators
            .iter()
            .map(|w| (word_matrix(w, &gens) - M2::identity()).norm())
            .fold(0.0, f64::max)
    }

    fn jacobian(&self, x: &[f64], r0: &DVector<f64>) -> DMatrix<f64> {
        let h = 1e-7;
        let mut j = DMatrix::zeros(r0.len(), x.len());
        let mut xp = x.to_vec();
        for k in 0..x.len() {
            let step = h * x[k].abs().max(1.0);
            xp[k] = x[k] + step;
            let rp = self.residuals(&xp);
            xp[k] = x[k] - step;
            let rm = self.residuals(&xp);
            xp[k] = x[k];
            j.set_column(k, &((rp - rm) / (2.0 * step)));
        }
        j
    }

    /// Damped Gauss–Newton on the residual vector with finite-difference
    /// Jacobians.
    fn descend(&self, mut x: Vec<f64>, iterations: usize, tolerance: f64) -> Vec<f64> {
        let mut r = self.residuals(&x);
        let mut cost = r.norm_squared();
        let mut lambda = 1e-3;
        for _ in 0..iterations {
            if cost < tolerance * tolerance * 1e-4 {
                break;
            }
            let j = self.jacobian(&x, &r);
            let jt = j.transpose();
            let g = &jt * &r;
            let mut jtj = &jt * &j;
            let diag = jtj.diagonal();
            let mut improved = false;
            for _ in 0..12 {
                for k in 0..x.len() {
                    jtj[(k, k)] = diag[k] * (1.0 + lambda) + 1e-12;
                }
                let Some(delta) = jtj.clone().lu().solve(&(-&g)) else {
                    lambda *= 10.0;
                    continue;
                };
                let xn: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, d)| a + d).collect();
                let rn = self.residuals(&xn);
                let cn = rn.norm_squared();
                if cn < cost {
                    x = xn;
                    r = rn;
                    cost = cn;
                    lambda = (lambda * 0.3).max(1e-12);
                    improved = true;
                    break;
                }
                lambda *= 10.0;
            }
            if !improved {
                break;
            }
            // Keep the parameters near determinant 1 so the scale stays tame.
            x = x
                .chunks(4)
                .flat_map(|c| {
                    let m = normalize(c);
                    [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]
                })
                .collect();
        }
        x
    }
}

/// Random restarts of a damped least-squares descent on the relator
/// residual, with a hinge pushing each target's trace past `2`. Success
/// means residual below `tolerance` and every target with `|tr| > 2 +
/// tolerance`; the best attempt is reported either way.
pub fn numeric_solve(p: &Presentation, targets: &[Word], opts: &NumericOptions) -> NumericRep {
    let problem = Problem {
        relators: p.relators(),
        targets,
        margin: opts.trace_margin,
    };
    let n = 4 * p.rank() as usize;
    let mut best: Option<NumericRep> = None;
    for attempt in 0..opts.attempts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(attempt as u64));
        let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let mut x = problem.descend(x0, opts.max_iterations, opts.tolerance);
        let mut residual = problem.relator_residual(&x);
        // Replace a generator by its negative when that keeps the relators
        // satisfied and makes its trace positive.
        for g in 0..p.rank() as usize {
            let m = normalize(&x[4 * g..4 * g + 4]);
            if m.trace() < 0.0 {
                let mut flipped = x.clone();
                flipped[4 * g..4 * g + 4].copy_from_slice(&[
                    -m[(0, 0)],
                    -m[(0, 1)],
                    -m[(1, 0)],
                    -m[(1, 1)],
                ]);
                let r = problem.relator_residual(&flipped);
                if r <= residual.max(opts.tolerance / 2.0) {
                    x = flipped;
                    residual = r;
                }
            }
        }
        let gens = problem.gens(&x);
        let traces: Vec<f64> = targets
            .iter()
            .map(|w| word_matrix(w, &gens).trace())
            .collect();
        let success =
            residual < opts.tolerance && traces.iter().all(|t| t.abs() > 2.0 + opts.tolerance);
        let rep = NumericRep {
            matrices: gens
                .iter()
                .map(|m| [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]])
                .collect(),
            residual,
            traces,
            success,
            attempt,
        };
        let better = match &best {
            None => true,
            Some(b) => {
                (rep.success && !b.success)
                    || (rep.success == b.success && rep.residual < b.residual)
            }
        };
        if better {
            best = Some(rep);
        }
        if best.as_ref().is_some_and(|b| b.success) {
            break;
        }
    }
    best.expect("at least one attempt")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gad::{surface_double, z2_hnn};
    use crate::word::Alphabet;

    #[test]
    fn classification_examples() {
        assert_eq!(
            classify_isometry(&Mat2::from_ints(2, 1, 1, 1).unwrap()),
            IsometryClass::Hyperbolic
        );
        assert_eq!(
            classify_isometry(&Mat2::from_ints(1, 1, 0, 1).unwrap()),
            IsometryClass::Parabolic
        );
        assert_eq!(
            classify_isometry(&Mat2::from_ints(0, -1, 1, 0).unwrap()),
            IsometryClass::Elliptic
        );
        assert_eq!(
            classify_isometry(&Mat2::from_ints(-1, 0, 0, -1).unwrap()),
            IsometryClass::Identity
        );
        assert!(Mat2::from_ints(2, 0, 0, 1).is_err());
    }

    #[test]
    fn schottky_examples() {
        let ([a, b], cert) = schottky_pair(6);
        assert_eq!(a.trace(), q2(10, 3));
        assert_eq!(cert.words_checked, 4 * (1 + 3 + 9 + 27 + 81 + 243));
        assert!(cert.holds());
        let w = Alphabet::standard(2).parse("a b^-1 a").unwrap();
        assert_eq!(
            classify_isometry(&Mat2::of_word(&w, &[a, b])),
            IsometryClass::Hyperbolic
        );
    }

    #[test]
    fn so3_examples() {
        let ([p, _], cert) = so3_pair(5);
        let e1 = [q(1), q(0), q(0)];
        assert_eq!(p.apply(&e1), [q2(3, 5), q2(4, 5), q(0)]);
        assert!(cert.holds());
        assert!(!cert.moves_e1());
        assert!(cert.fixers_are_axis_powers());
        assert_eq!(cert.fixing_e1.len(), 10);
        assert!(Mat3::new([[q(2), q(0), q(0)], [q(0), q(1), q(0)], [q(0), q(0), q(1)]]).is_err());
        assert!(matches!(
            Mat3::new([
                [q2(1, 3), q(0), q(0)],
                [q(0), q(1), q(0)],
                [q(0), q(0), q(1)]
            ]),
            Err(RepError::Denominator(_))
        ));
    }

    #[test]
    fn embedding_examples() {
        let z2 = Clg::indecomposable_parsed(
            crate::gad::Gad::new(
                vec![crate::gad::Vertex::abelian(
                    "Z",
                    ["a", "t"],
                    vec![vec![1, 0]],
                )],
                vec![],
            )
            .unwrap(),
            Clg::free(["c"]),
            &["c", "c"],
        )
        .unwrap();
        let xs: Vec<Word> = ["a", "t"]
            .iter()
            .map(|s| z2.parse_word(s).unwrap())
            .collect();
        let e = embed_clg(&z2, &xs, Target::Sl2).unwrap();
        assert!(e.report.passed());
        assert_eq!(e.report.classes, vec![IsometryClass::Hyperbolic; 2]);

        let f2 = Clg::free(["a", "b"]);
        let xs: Vec<Word> = ["a", "b", "a b a^-1 b^-1"]
            .iter()
            .map(|s| f2.parse_word(s).unwrap())
            .collect();
        let e = embed_clg(&f2, &xs, Target::Sl2).unwrap();
        assert!(e.report.passed());
        let names = f2.presentation().generators();
        assert_eq!(
            Matrices::from_text(&e.matrices.to_text(names), names).unwrap(),
            e.matrices
        );
        let e = embed_clg(&f2, &xs, Target::So3).unwrap();
        assert!(e.report.passed());
        assert_eq!(
            Matrices::from_text(&e.matrices.to_text(names), names).unwrap(),
            e.matrices
        );
        assert!(matches!(
            embed_clg(&f2, &[f2.parse_word("1").unwrap()], Target::Sl2),
            Err(RepError::TrivialElement(_))
        ));

        let double = Clg::indecomposable_parsed(
            surface_double(),
            Clg::free(["a", "b"]),
            &["a", "b", "b", "a"],
        )
        .unwrap();
        let xs: Vec<Word> = ["a", "c d", "a b a^-1 b^-1"]
            .iter()
            .map(|s| double.parse_word(s).unwrap())
            .collect();
        assert!(embed_clg(&double, &xs, Target::Sl2)
            .unwrap()
            .report
            .passed());
    }

    #[test]
    fn numeric_examples() {
        let free = Presentation::free(["a", "b"]);
        let rep = numeric_solve(&free, &[], &NumericOptions::default());
        assert!(rep.success && rep.residual == 0.0 && rep.attempt == 0);

        let p = z2_hnn().fundamental_presentation();
        let targets: Vec<Word> = ["a", "t"]
            .iter()
            .map(|s| p.alphabet().parse(s).unwrap())
            .collect();
        let rep = numeric_solve(&p, &targets, &NumericOptions::default());
        assert!(rep.success, "residual {}", rep.residual);
        assert!(rep.traces.iter().all(|t| t.abs() > 2.001));

        let back = NumericRep::from_text(&p, &rep.to_text(&p)).unwrap();
        assert_eq!(back.matrices, rep.matrices);
        assert_eq!(back.residual, rep.residual);

        let torsion = Presentation::parse(&["x"], &["x x"]).unwrap();
        let x = torsion.alphabet().parse("x").unwrap();
        let opts = NumericOptions {
            attempts: 5,
            ..NumericOptions::default()
        };
        assert!(!numeric_solve(&torsion, &[x], &opts).success);
    }
}
