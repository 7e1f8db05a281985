//! Constructible limit groups and discriminating homomorphisms into `F(a, b)`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::gad::aut::fixed_lattice;
use crate::gad::splitting::{Cut, Piece};
use crate::gad::{AutTag, Gad, GadError, ModAut, VertexKind, View};
use crate::homs::{
    abelian_discriminator, embed_free_into_rank2, pairwise_quotients, Hom, HomError, Presentation,
};
use crate::linalg;
use crate::word::{reduced_words_up_to, Alphabet, Letter, Word, WordError};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ClgError {
    #[error(transparent)]
    Gad(#[from] GadError),
    #[error(transparent)]
    Hom(#[from] HomError),
    #[error(transparent)]
    Word(#[from] WordError),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Io(String),
    #[error("declared level {declared} but the structure has level {actual}")]
    LevelMismatch { declared: u32, actual: u32 },
    #[error("retraction: {0}")]
    Rho(String),
    #[error("criterion instance: {0}")]
    Criterion(String),
    #[error("element {0} is trivial in the group")]
    TrivialElement(String),
    #[error("hypothesis failed: {0}")]
    Hypothesis(String),
    #[error("no twist exponent up to {limit} works for edge {edge}")]
    NoExponent { edge: String, limit: i64 },
    #[error("validation failed:\n{0}")]
    Invalid(String),
    #[error("result failed verification: {0}")]
    Verification(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClgForm {
    Free(Vec<String>),
    FreeProduct(Vec<Clg>),
    /// A graph of groups with a retraction onto a lower-level group, given as
    /// images of the generators over the lower group's generators.
    Indecomposable {
        gad: Gad,
        lower: Box<Clg>,
        rho: Vec<Word>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clg {
    form: ClgForm,
    level: u32,
    presentation: Presentation,
}

impl Clg {
    pub fn free<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Clg {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let presentation = Presentation::free(names.clone());
        Clg {
            form: ClgForm::Free(names),
            level: 0,
            presentation,
        }
    }

    pub fn free_product(factors: Vec<Clg>) -> Result<Clg, ClgError> {
        if factors.is_empty() {
            return Err(ClgError::Invalid(
                "a free product needs at least one factor".into(),
            ));
        }
        let names: Vec<String> = factors
            .iter()
            .flat_map(|f| f.presentation.generators().to_vec())
            .collect();
        let rank = names.len() as u32;
        let mut relators = Vec::new();
        let mut offset = 0;
        for f in &factors {
            for r in f.presentation.relators() {
                relators.push(shift(r, offset as i64, rank));
            }
            offset += f.rank();
        }
        let presentation = Presentation::new(names, relators)?;
        let level = factors.iter().map(|f| f.level).max().unwrap_or(0);
        Ok(Clg {
            form: ClgForm::FreeProduct(factors),
            level,
            presentation,
        })
    }

    pub fn indecomposable(gad: Gad, lower: Clg, rho: Vec<Word>) -> Result<Clg, ClgError> {
        if rho.len() != gad.rank() as usize {
            return Err(ClgError::Rho(format!(
                "expected {} images, got {}",
                gad.rank(),
                rho.len()
            )));
        }
        if rho.iter().any(|w| w.rank() != lower.rank()) {
            return Err(ClgError::Rho(
                "images must be words over the lower group's generators".into(),
            ));
        }
        let presentation = gad.fundamental_presentation();
        for r in presentation.relators() {
            let image = r.substitute(&rho, lower.rank());
            if !lower.is_trivial(&image) {
                return Err(ClgError::Rho(format!(
                    "relator {} maps to {}",
                    gad.alphabet().format(r),
                    lower.alphabet().format(&image)
                )));
            }
        }
        let level = lower.level + 1;
        Ok(Clg {
            form: ClgForm::Indecomposable {
                gad,
                lower: Box::new(lower),
                rho,
            },
            level,
            presentation,
        })
    }

    /// Retraction images written as text over the lower group's generators.
    pub fn indecomposable_parsed<S: AsRef<str>>(
        gad: Gad,
        lower: Clg,
        rho: &[S],
    ) -> Result<Clg, ClgError> {
        let al = lower.alphabet();
        let rho = rho
            .iter()
            .map(|s| al.parse(s.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        Clg::indecomposable(gad, lower, rho)
    }

    pub fn form(&self) -> &ClgForm {
        &self.form
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn presentation(&self) -> &Presentation {
        &self.presentation
    }

    pub fn alphabet(&self) -> Alphabet {
        self.presentation.alphabet()
    }

    pub fn rank(&self) -> u32 {
        self.presentation.rank()
    }

    pub fn parse_word(&self, s: &str) -> Result<Word, ClgError> {
        Ok(self.alphabet().parse(s)?)
    }

    /// Word problem.
    pub fn is_trivial(&self, w: &Word) -> bool {
        match &self.form {
            ClgForm::Free(_) => w.is_identity(),
            ClgForm::Indecomposable { gad, .. } => gad.is_trivial(w),
            ClgForm::FreeProduct(factors) => free_product_form(factors, w).is_empty(),
        }
    }

    pub fn equal(&self, x: &Word, y: &Word) -> bool {
        self.is_trivial(&(x * &y.inverse()))
    }

    /// Reads a structure file; referenced files are resolved relative to it.
    pub fn from_file(path: &Path) -> Result<Clg, ClgError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ClgError::Io(format!("{}: {e}", path.display())))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Clg::from_text(&text, &dir)
    }

    /// `clg level=<n> form=free gens=a,b`, or `form=product` followed by
    /// `factor <file>` lines, or `form=indec gad=<file> lower=<file>
    /// rho=<file>` where the retraction file has `image <gen> <word>` lines.
    pub fn from_text(text: &str, dir: &Path) -> Result<Clg, ClgError> {
        let perr = |line: usize, msg: &str| ClgError::Parse {
            line,
            msg: msg.to_string(),
        };
        let mut lines = crate::homs::content_lines(text);
        let (no, head) = lines
            .next()
            .ok_or_else(|| perr(1, "empty structure file"))?;
        let mut toks = head.split_whitespace();
        if toks.next() != Some("clg") {
            return Err(perr(no, "expected a `clg` header"));
        }
        let kv: Vec<(&str, &str)> = toks
            .map(|t| {
                t.split_once('=')
                    .ok_or_else(|| perr(no, "expected key=value"))
            })
            .collect::<Result<_, _>>()?;
        let get = |k: &str| kv.iter().find(|(key, _)| *key == k).map(|(_, v)| *v);
        let need = |k: &str| get(k).ok_or_else(|| perr(no, &format!("missing {k}=")));
        let resolve = |f: &str| -> PathBuf { dir.join(f) };
        let clg = match need("form")? {
            "free" => Clg::free(need("gens")?.split(',').filter(|s| !s.is_empty())),
            "product" => {
                let mut factors = Vec::new();
                for (no, line) in lines {
                    match line.split_once(char::is_whitespace) {
                        Some(("factor", f)) => factors.push(Clg::from_file(&resolve(f.trim()))?),
                        _ => return Err(perr(no, "expected `factor <file>`")),
                    }
                }
                Clg::free_product(factors)?
            }
            "indec" => {
                let gad_path = resolve(need("gad")?);
                let gad_text = std::fs::read_to_string(&gad_path)
                    .map_err(|e| ClgError::Io(format!("{}: {e}", gad_path.display())))?;
                let gad = Gad::from_text(&gad_text)?;
                let lower = Clg::from_file(&resolve(need("lower")?))?;
                let rho_path = resolve(need("rho")?);
                let rho_text = std::fs::read_to_string(&rho_path)
                    .map_err(|e| ClgError::Io(format!("{}: {e}", rho_path.display())))?;
                let rho = parse_images(&rho_text, gad.alphabet(), &lower.alphabet())?;
                Clg::indecomposable(gad, lower, rho)?
            }
            other => return Err(perr(no, &format!("unknown form {other:?}"))),
        };
        if let Some(l) = get("level") {
            let declared: u32 = l.parse().map_err(|_| perr(no, "bad level"))?;
            if declared != clg.level {
                return Err(ClgError::LevelMismatch {
                    declared,
                    actual: clg.level,
                });
            }
        }
        Ok(clg)
    }
}

/// `image <gen> <word>` lines; other keys (`target_rank`, `target_gens`) are
/// accepted and ignored.
fn parse_images(text: &str, domain: &Alphabet, target: &Alphabet) -> Result<Vec<Word>, ClgError> {
    let mut images: Vec<Option<Word>> = vec![None; domain.rank() as usize];
    for (no, line) in crate::homs::content_lines(text) {
        let (key, rest) = crate::homs::split_key(line);
        match key {
            "image" => {
                let (g, w) = crate::homs::split_key(rest);
                let i = domain.index_of(g).ok_or_else(|| ClgError::Parse {
                    line: no,
                    msg: format!("unknown generator {g:?}"),
                })?;
                images[i as usize - 1] = Some(target.parse(w)?);
            }
            "target_rank" | "target_gens" => {}
            _ => {
                return Err(ClgError::Parse {
                    line: no,
                    msg: format!("unknown key {key:?}"),
                })
            }
        }
    }
    images
        .into_iter()
        .enumerate()
        .map(|(i, w)| {
            w.ok_or_else(|| ClgError::Rho(format!("no image for {}", domain.name(i as u32 + 1))))
        })
        .collect()
}

/// Moves a word between a factor's generators and the product's.
fn shift(w: &Word, offset: i64, rank: u32) -> Word {
    let letters = w
        .letters()
        .iter()
        .map(|l| Letter::new((l.index() as i64 + offset) as u32, l.is_positive()));
    Word::reduce(rank, letters).expect("shifted letters in range")
}

/// Reduced free-product form: maximal runs of letters from one factor, with
/// runs trivial in their factor removed until none remain. Returns
/// `(factor, local word)` pairs.
fn free_product_form(factors: &[Clg], w: &Word) -> Vec<(usize, Word)> {
    let mut bounds = Vec::new();
    let mut offset = 0u32;
    for f in factors {
        bounds.push(offset);
        offset += f.rank();
    }
    let factor_of = |i: u32| {
        bounds
            .iter()
            .rposition(|&b| i > b)
            .expect("letter in range")
    };
    let mut runs: Vec<(usize, Word)> = Vec::new();
    for &l in w.letters() {
        let k = factor_of(l.index());
        let local = shift(
            &Word::reduce(w.rank(), [l]).unwrap(),
            -(bounds[k] as i64),
            factors[k].rank(),
        );
        match runs.last_mut() {
            Some((f, u)) if *f == k => *u = &*u * &local,
            _ => runs.push((k, local)),
        }
    }
    loop {
        let Some(i) = runs.iter().position(|(k, u)| factors[*k].is_trivial(u)) else {
            break;
        };
        runs.remove(i);
        if i > 0 && i < runs.len() && runs[i - 1].0 == runs[i].0 {
            let (_, right) = runs.remove(i);
            runs[i - 1].1 = &runs[i - 1].1 * &right;
        }
    }
    runs
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Set when the check is a finite sample rather than a proof.
    pub approximate: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let status = if c.passed { "pass" } else { "fail" };
            let approx = if c.approximate { " approx" } else { "" };
            writeln!(s, "check {} {status}{approx} {}", c.name, c.detail).unwrap();
        }
        s
    }

    fn push(&mut self, name: String, passed: bool, approximate: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name,
            passed,
            approximate,
            detail: detail.into(),
        });
    }
}

pub fn validate_clg(c: &Clg, radius: usize) -> Result<ValidationReport, ClgError> {
    if radius == 0 {
        return Err(ClgError::Invalid("ball radius must be at least 1".into()));
    }
    let mut report = ValidationReport::default();
    validate_into(c, radius, "", &mut report);
    Ok(report)
}

fn validate_into(c: &Clg, radius: usize, prefix: &str, report: &mut ValidationReport) {
    match &c.form {
        ClgForm::Free(names) => report.push(
            format!("{prefix}free"),
            true,
            false,
            format!("rank {}", names.len()),
        ),
        ClgForm::FreeProduct(factors) => {
            for (i, f) in factors.iter().enumerate() {
                validate_into(f, radius, &format!("{prefix}factor{i}."), report);
            }
        }
        ClgForm::Indecomposable { gad, lower, rho } => {
            let rho_of = |w: &Word| w.substitute(rho, lower.rank());
            let lower_free = matches!(lower.form, ClgForm::Free(_));
            for (v, vertex) in gad.vertices().iter().enumerate() {
                let gens: Vec<Word> = gad.local_range(v).map(|i| gad.generator(i)).collect();
                let name = format!("{prefix}vertex.{}", vertex.id);
                match &vertex.kind {
                    VertexKind::Abelian { peripheral } => {
                        let lattice = fixed_lattice(gad, v, peripheral);
                        let (ok, approx, detail) =
                            lattice_injective(gad, v, &lattice, lower, &rho_of, radius);
                        report.push(
                            format!("{name}.peripheral"),
                            ok,
                            approx || !lower_free,
                            detail,
                        );
                    }
                    VertexKind::Qh { .. } => {
                        let witness = noncommuting_pair(&gens, |x, y| {
                            !lower.is_trivial(&rho_of(&x.commutator(y)))
                        });
                        let detail = match &witness {
                            Some((i, j)) => format!(
                                "images of {} and {} do not commute",
                                vertex.gens[*i], vertex.gens[*j]
                            ),
                            None => "image is abelian".into(),
                        };
                        report.push(
                            format!("{name}.nonabelian"),
                            witness.is_some(),
                            false,
                            detail,
                        );
                    }
                    VertexKind::Rigid => {
                        let ball = local_ball(gad, v, radius);
                        let mut bad = None;
                        for (i, x) in ball.iter().enumerate() {
                            for y in &ball[i + 1..] {
                                if lower.is_trivial(&rho_of(&(x * &y.inverse()))) {
                                    bad = Some((x.clone(), y.clone()));
                                    break;
                                }
                            }
                            if bad.is_some() {
                                break;
                            }
                        }
                        let detail = match &bad {
                            None => format!(
                                "injective on {} elements of the radius-{radius} ball",
                                ball.len()
                            ),
                            Some((x, y)) => format!(
                                "{} and {} have equal images",
                                gad.alphabet().format(x),
                                gad.alphabet().format(y)
                            ),
                        };
                        report.push(format!("{name}.injective"), bad.is_none(), true, detail);
                    }
                }
            }
            for e in gad.edges() {
                let v = e.from;
                let vecs: Vec<Vec<i64>> = if let VertexKind::Abelian { .. } = gad.vertices()[v].kind
                {
                    e.img1.iter().map(|w| gad.local_vector(v, w)).collect()
                } else {
                    Vec::new()
                };
                let (ok, approx, detail) = if vecs.is_empty() {
                    // Cyclic edge group: injective iff the generator survives.
                    let img = rho_of(&e.img1[0]);
                    (
                        !lower.is_trivial(&img),
                        !lower_free,
                        format!("generator maps to {}", lower.alphabet().format(&img)),
                    )
                } else {
                    let (ok, approx, detail) =
                        lattice_injective(gad, v, &vecs, lower, &rho_of, radius);
                    (ok, approx || !lower_free, detail)
                };
                report.push(
                    format!("{prefix}edge.{}.injective", e.id),
                    ok,
                    approx,
                    detail,
                );
            }
            validate_into(lower, radius, &format!("{prefix}lower."), report);
        }
    }
}

fn local_ball(gad: &Gad, v: usize, radius: usize) -> Vec<Word> {
    let range = gad.local_range(v);
    let n = range.len() as u32;
    let images: Vec<Word> = range.map(|i| gad.generator(i)).collect();
    reduced_words_up_to(n, radius)
        .iter()
        .map(|w| w.substitute(&images, gad.rank()))
        .collect()
}

fn noncommuting_pair(
    gens: &[Word],
    noncommuting: impl Fn(&Word, &Word) -> bool,
) -> Option<(usize, usize)> {
    for i in 0..gens.len() {
        for j in i + 1..gens.len() {
            if noncommuting(&gens[i], &gens[j]) {
                return Some((i, j));
            }
        }
    }
    None
}

/// Injectivity of the retraction on the sublattice of an abelian vertex
/// spanned by `lattice`. Exact when the lower group is free: the images are
/// powers of one root `c`, so the retraction is the functional `v ↦ ⟨r, v⟩`.
fn lattice_injective(
    gad: &Gad,
    v: usize,
    lattice: &[Vec<i64>],
    lower: &Clg,
    rho_of: &dyn Fn(&Word) -> Word,
    radius: usize,
) -> (bool, bool, String) {
    let rank = linalg::rank(lattice);
    if rank == 0 {
        return (true, false, "empty peripheral lattice".into());
    }
    if matches!(lower.form, ClgForm::Free(_)) {
        let images: Vec<Word> = gad
            .local_range(v)
            .map(|i| rho_of(&gad.generator(i)))
            .collect();
        let Some(root) = images
            .iter()
            .find(|w| !w.is_identity())
            .map(|w| w.primitive_root().unwrap().0)
        else {
            return (false, false, "vertex maps to the identity".into());
        };
        let r: Option<Vec<i64>> = images.iter().map(|w| w.power_of(&root)).collect();
        let Some(r) = r else {
            return (false, false, "images do not commute".into());
        };
        let values: Vec<Vec<i64>> = lattice
            .iter()
            .map(|p| vec![crate::homs::inner(&r, p)])
            .collect();
        let image_rank = linalg::rank(&values);
        let ok = image_rank == rank;
        return (
            ok,
            false,
            format!("lattice rank {rank}, image rank {image_rank}"),
        );
    }
    // Sample small combinations of the lattice vectors.
    let k = lattice.len();
    let bound = radius as i64;
    let mut coeffs = vec![-bound; k];
    loop {
        if coeffs.iter().any(|&c| c != 0) {
            let vec: Vec<i64> = (0..lattice[0].len())
                .map(|j| coeffs.iter().zip(lattice).map(|(c, p)| c * p[j]).sum())
                .collect();
            if vec.iter().any(|&x| x != 0) && lower.is_trivial(&rho_of(&gad.local_element(v, &vec)))
            {
                return (false, true, format!("vector {vec:?} maps to the identity"));
            }
        }
        let mut i = 0;
        while i < k && coeffs[i] == bound {
            coeffs[i] = -bound;
            i += 1;
        }
        if i == k {
            break;
        }
        coeffs[i] += 1;
    }
    (
        true,
        true,
        format!("no kernel among combinations with coefficients up to {bound}"),
    )
}

/// Least `N` with `N·|c| ≥ |a_{k−1}| + |a_k| + |c|` for every `k`, where `c`
/// is the primitive root of the cyclic core of `z`.
pub fn sufficient_exponent(z: &Word, a: &[Word]) -> Result<u64, ClgError> {
    if z.is_identity() {
        return Err(ClgError::Criterion("z is trivial".into()));
    }
    let (_, core) = z.cyclic_reduce();
    let (root, _) = core.primitive_root()?;
    let c = root.len() as u64;
    let bound = a
        .windows(2)
        .map(|p| (p[0].len() + p[1].len()) as u64 + c)
        .max()
        .unwrap_or(c);
    Ok(bound.div_ceil(c).max(1))
}

/// `g = a₀ z^{i₁} a₁ ⋯ z^{iₙ} aₙ` with `[aₖ, z] ≠ 1` for `0 < k < n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CriterionInstance {
    z: Word,
    a: Vec<Word>,
    exponents: Vec<i64>,
}

impl CriterionInstance {
    pub fn new(z: Word, a: Vec<Word>, exponents: Vec<i64>) -> Result<CriterionInstance, ClgError> {
        if z.is_identity() {
            return Err(ClgError::Criterion("z must be nontrivial".into()));
        }
        if exponents.is_empty() || a.len() != exponents.len() + 1 {
            return Err(ClgError::Criterion(
                "need n ≥ 1 exponents and n + 1 words".into(),
            ));
        }
        if exponents.contains(&0) {
            return Err(ClgError::Criterion("exponents must be nonzero".into()));
        }
        for (k, ak) in a.iter().enumerate().take(exponents.len()).skip(1) {
            if ak.commutes(&z)? {
                return Err(ClgError::Criterion(format!("a{k} commutes with z")));
            }
        }
        Ok(CriterionInstance { z, a, exponents })
    }

    pub fn z(&self) -> &Word {
        &self.z
    }

    pub fn a(&self) -> &[Word] {
        &self.a
    }

    pub fn exponents(&self) -> &[i64] {
        &self.exponents
    }

    pub fn evaluate(&self) -> Word {
        let mut g = self.a[0].clone();
        for (i, &k) in self.exponents.iter().enumerate() {
            g = &(&g * &self.z.pow(k)) * &self.a[i + 1];
        }
        g
    }

    pub fn sufficient_exponent(&self) -> u64 {
        sufficient_exponent(&self.z, &self.a).expect("z is nontrivial")
    }
}

/// Decides `g ≠ 1` by reduction.
pub fn criterion_nontrivial(inst: &CriterionInstance) -> bool {
    let nontrivial = !inst.evaluate().is_identity();
    let n = inst.sufficient_exponent();
    debug_assert!(
        nontrivial || inst.exponents.iter().any(|k| k.unsigned_abs() < n),
        "exponents at the sufficient bound gave the identity"
    );
    nontrivial
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SurfaceCase {
    /// Boundary indices (1-based) grouped by commutation of their images, and
    /// the adjacent pair `(i, i+1)` whose product is the curve.
    PuncturedSphere {
        classes: Vec<Vec<usize>>,
        pair: (usize, usize),
        complement_nonabelian: bool,
    },
    /// Crosscaps with trivial image, each replaced by `d₁cᵢ` before treating
    /// the generators like boundary curves.
    NonOrientable {
        replaced: Vec<usize>,
        classes: Vec<Vec<usize>>,
        pair: (usize, usize),
    },
    /// `a₁` when its image is nontrivial, else `a₁d₁`.
    PositiveGenus { used_boundary: bool },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurfaceCertificate {
    pub case: SurfaceCase,
    /// The curve's image under the retraction, certified nontrivial.
    pub image: Word,
}

/// Picks a curve on a surface vertex whose image stays nontrivial. Words are
/// local: generators in the standard order for the surface type. `images`
/// are the retraction images of those generators in some group whose word
/// problem is `trivial`.
pub fn choose_surface_curve(
    genus: u32,
    orientable: bool,
    boundary: u32,
    images: &[Word],
    trivial: &dyn Fn(&Word) -> bool,
) -> Result<(Word, SurfaceCertificate), ClgError> {
    let handles = if orientable { 2 * genus } else { genus } as usize;
    let n = handles + boundary as usize;
    if images.len() != n {
        return Err(ClgError::Hypothesis(format!(
            "expected {n} images, got {}",
            images.len()
        )));
    }
    let chi = if orientable {
        2 - 2 * genus as i64
    } else {
        2 - genus as i64
    } - boundary as i64;
    if boundary == 0 || chi > -1 {
        return Err(ClgError::Hypothesis(
            "surface needs boundary and Euler characteristic ≤ -1".into(),
        ));
    }
    let commute = |x: &Word, y: &Word| trivial(&x.commutator(y));
    if noncommuting_pair(images, |x, y| !commute(x, y)).is_none() {
        return Err(ClgError::Hypothesis(
            "image of the surface group is abelian".into(),
        ));
    }
    if let Some(j) = (handles..n).find(|&j| trivial(&images[j])) {
        return Err(ClgError::Hypothesis(format!(
            "boundary d{} has trivial image",
            j - handles + 1
        )));
    }
    let rank = n as u32;
    let g = |i: usize| Word::generator(rank, i as u32 + 1);
    if orientable && genus > 0 {
        if !trivial(&images[0]) {
            let cert = SurfaceCertificate {
                case: SurfaceCase::PositiveGenus {
                    used_boundary: false,
                },
                image: images[0].clone(),
            };
            return Ok((g(0), cert));
        }
        let image = &images[0] * &images[handles];
        if trivial(&image) {
            return Err(ClgError::Hypothesis(
                "both a1 and a1 d1 have trivial image".into(),
            ));
        }
        let cert = SurfaceCertificate {
            case: SurfaceCase::PositiveGenus {
                used_boundary: true,
            },
            image,
        };
        return Ok((&g(0) * &g(handles), cert));
    }
    // Sequence of curves around which the surface is a punctured sphere.
    let mut words: Vec<Word> = (0..n).map(g).collect();
    let mut imgs: Vec<Word> = images.to_vec();
    let mut replaced = Vec::new();
    for i in 0..handles {
        if trivial(&imgs[i]) {
            words[i] = &g(handles) * &g(i);
            imgs[i] = &images[handles] * &images[i];
            replaced.push(i + 1);
        }
    }
    let classes = commutation_classes(&imgs, &commute);
    let m = imgs.len();
    let pair = (0..m)
        .map(|i| (i, (i + 1) % m))
        .find(|&(i, j)| !commute(&imgs[i], &imgs[j]))
        .ok_or_else(|| ClgError::Hypothesis("all adjacent curves commute".into()))?;
    let zeta = &words[pair.0] * &words[pair.1];
    let image = &imgs[pair.0] * &imgs[pair.1];
    let one_based = (pair.0 + 1, pair.1 + 1);
    let case = if orientable {
        let rest: Vec<Word> = (0..m)
            .filter(|&i| i != pair.0 && i != pair.1)
            .map(|i| imgs[i].clone())
            .collect();
        let complement_nonabelian = noncommuting_pair(&rest, |x, y| !commute(x, y)).is_some();
        SurfaceCase::PuncturedSphere {
            classes,
            pair: one_based,
            complement_nonabelian,
        }
    } else {
        SurfaceCase::NonOrientable {
            replaced,
            classes,
            pair: one_based,
        }
    };
    Ok((zeta, SurfaceCertificate { case, image }))
}

/// Classes of `i ∼ j ⟺ [xᵢ, xⱼ] = 1` (1-based), in order of first member.
pub fn commutation_classes(xs: &[Word], commute: &dyn Fn(&Word, &Word) -> bool) -> Vec<Vec<usize>> {
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for i in 0..xs.len() {
        match classes.iter_mut().find(|c| commute(&xs[c[0] - 1], &xs[i])) {
            Some(c) => c.push(i + 1),
            None => classes.push(vec![i + 1]),
        }
    }
    classes
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Nontrivial,
    Injective,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscriminationStep {
    /// `edge=<id>` for twists along an edge, `vertex=<id>` for vertex moves.
    pub location: String,
    pub zeta: Word,
    pub zeta_text: String,
    pub k: i64,
    pub recursed: Vec<Word>,
}

impl DiscriminationStep {
    pub fn to_line(&self) -> String {
        format!(
            "step {} zeta={} k={}",
            self.location, self.zeta_text, self.k
        )
    }
}

#[derive(Clone, Debug)]
pub struct Discrimination {
    pub hom: Hom,
    pub trace: Vec<DiscriminationStep>,
}

/// Doublings tried after the sufficient exponent before giving up.
const MAX_DOUBLINGS: u32 = 12;
/// Largest transvection multiplier tried on an abelian vertex.
const MAX_TRANSVECTION: i64 = 24;

/// A homomorphism to `F(a, b)` that is nontrivial on `xs`, or injective on it.
pub fn discriminate(c: &Clg, xs: &[Word], mode: Mode) -> Result<Discrimination, ClgError> {
    for x in xs {
        if x.rank() != c.rank() {
            return Err(WordError::RankMismatch {
                left: c.rank(),
                right: x.rank(),
            }
            .into());
        }
    }
    let report = validate_clg(c, 2)?;
    if !report.passed() {
        return Err(ClgError::Invalid(report.to_text()));
    }
    let al = c.alphabet();
    let targets: Vec<Word> = match mode {
        Mode::Nontrivial => {
            if let Some(x) = xs.iter().find(|x| c.is_trivial(x)) {
                return Err(ClgError::TrivialElement(al.format(x)));
            }
            xs.to_vec()
        }
        Mode::Injective => {
            let mut distinct: Vec<Word> = Vec::new();
            for x in xs {
                if !distinct.iter().any(|y| c.equal(x, y)) {
                    distinct.push(x.clone());
                }
            }
            let mut t: Vec<Word> = distinct
                .iter()
                .filter(|x| !c.is_trivial(x))
                .cloned()
                .collect();
            t.extend(pairwise_quotients(&distinct));
            t
        }
    };
    let mut trace = Vec::new();
    let images = disc(c, &targets, &mut trace)?;
    let hom = Hom::new(c.presentation().clone(), Alphabet::standard(2), images)
        .map_err(|e| ClgError::Verification(e.to_string()))?;
    let ok = match mode {
        Mode::Nontrivial => hom.nontrivial_on(xs),
        Mode::Injective => (0..xs.len()).all(|i| {
            (i + 1..xs.len())
                .all(|j| c.equal(&xs[i], &xs[j]) || hom.evaluate(&xs[i]) != hom.evaluate(&xs[j]))
        }),
    };
    if !ok {
        return Err(ClgError::Verification(
            "homomorphism does not separate the set".into(),
        ));
    }
    Ok(Discrimination { hom, trace })
}

fn free_images(r: u32) -> Vec<Word> {
    if r <= 2 {
        (1..=r).map(|i| Word::generator(2, i)).collect()
    } else {
        embed_free_into_rank2(r).images().to_vec()
    }
}

/// Images in `F(a, b)` of the generators of `c`, nontrivial on `ys`.
fn disc(c: &Clg, ys: &[Word], trace: &mut Vec<DiscriminationStep>) -> Result<Vec<Word>, ClgError> {
    match &c.form {
        ClgForm::Free(names) => Ok(free_images(names.len() as u32)),
        ClgForm::FreeProduct(factors) => {
            let mut syllables: Vec<Vec<Word>> = vec![Vec::new(); factors.len()];
            for y in ys {
                for (k, u) in free_product_form(factors, y) {
                    if !syllables[k].contains(&u) {
                        syllables[k].push(u);
                    }
                }
            }
            // Each factor goes to its own copy of F(a, b) inside F(2m), which
            // embeds in F(a, b).
            let m = factors.len() as u32;
            let embed = free_images(2 * m);
            let mut images = Vec::new();
            for (k, f) in factors.iter().enumerate() {
                let local = disc(f, &syllables[k], trace)?;
                let copy = [embed[2 * k].clone(), embed[2 * k + 1].clone()];
                images.extend(local.iter().map(|w| w.substitute(&copy, 2)));
            }
            Ok(images)
        }
        ClgForm::Indecomposable { gad, lower, rho } => {
            if gad.edges().is_empty() {
                let v = &gad.vertices()[0];
                match &v.kind {
                    VertexKind::Abelian { .. } => {
                        let vectors: Vec<Vec<i64>> =
                            ys.iter().map(|y| y.exponent_vector()).collect();
                        let z = abelian_discriminator(&vectors, v.gens.len())?;
                        let a = Word::generator(2, 1);
                        return Ok(z.iter().map(|&k| a.pow(k)).collect());
                    }
                    VertexKind::Qh { .. } => {
                        // A surface group with boundary is free on all but the
                        // last boundary generator.
                        let n = gad.rank();
                        let free = free_images(n - 1);
                        let mut padded = free.clone();
                        padded.push(Word::identity(2));
                        let last = gad.free_model(0, &gad.generator(n)).substitute(&padded, 2);
                        let mut images = free;
                        images.push(last);
                        return Ok(images);
                    }
                    VertexKind::Rigid => {}
                }
            }
            let ctx = Ctx { gad, lower, rho };
            let alpha = ctx.find_alpha(&View::whole(gad), ys, trace)?;
            let lowered: Vec<Word> = ys.iter().map(|y| ctx.rho(&alpha.apply(y))).collect();
            let lower_images = disc(lower, &lowered, trace)?;
            Ok((1..=gad.rank())
                .map(|i| {
                    ctx.rho(&alpha.apply(&gad.generator(i)))
                        .substitute(&lower_images, 2)
                })
                .collect())
        }
    }
}

struct Ctx<'c> {
    gad: &'c Gad,
    lower: &'c Clg,
    rho: &'c [Word],
}

enum Token {
    Piece(Word),
    /// A power `z^{±k}` of the twisting element.
    Twist(i64),
}

impl Ctx<'_> {
    fn rho(&self, w: &Word) -> Word {
        w.substitute(self.rho, self.lower.rank())
    }

    fn survives(&self, images: &[Word], y: &Word) -> bool {
        !self
            .lower
            .is_trivial(&self.rho(&y.substitute(images, self.gad.rank())))
    }

    fn all_survive(&self, images: &[Word], ys: &[Word]) -> bool {
        ys.iter().all(|y| self.survives(images, y))
    }

    fn format(&self, w: &Word) -> String {
        self.gad.alphabet().format(w)
    }

    /// A modular automorphism `α` with `ρ(α(y)) ≠ 1` for every `y`.
    fn find_alpha(
        &self,
        view: &View,
        ys: &[Word],
        trace: &mut Vec<DiscriminationStep>,
    ) -> Result<ModAut, ClgError> {
        let identity = ModAut::identity(self.gad);
        let Some(cut) = view.cut() else {
            let v = view.vertices()[0];
            if self.all_survive(identity.images(), ys) {
                return Ok(identity);
            }
            return match &self.gad.vertices()[v].kind {
                VertexKind::Rigid => Err(ClgError::Hypothesis(format!(
                    "retraction kills an element of rigid vertex {}",
                    self.gad.vertices()[v].id
                ))),
                VertexKind::Abelian { peripheral } => self.abelian_alpha(v, peripheral, ys, trace),
                VertexKind::Qh { .. } => self.surface_alpha(v, ys, trace),
            };
        };
        let e = cut.edge();
        let edge = &self.gad.edges()[e];
        let zeta = edge.img1[0].clone();
        let zetas = [edge.img1[0].clone(), edge.img2[0].clone()];

        // Conditions the pieces must satisfy before twisting.
        let mut needed: [Vec<Word>; 2] = [vec![zetas[0].clone()], vec![zetas[1].clone()]];
        let mut forms = Vec::new();
        for y in ys {
            let nf = cut.normal_form(y)?;
            for (side, s) in nf.syllables() {
                let part = cut.part(side);
                if part.is_trivial(s)? {
                    continue;
                }
                let push = |n: &mut Vec<Word>, w: Word| {
                    if !n.contains(&w) {
                        n.push(w);
                    }
                };
                push(&mut needed[side], s.clone());
                if !part.commute(&zetas[side], s)? {
                    push(&mut needed[side], zetas[side].commutator(s));
                }
            }
            forms.push(nf);
        }
        let alpha = match &cut {
            Cut::Amalgam { sides, .. } => {
                let a0 = self.find_alpha(&sides[0], &needed[0], trace)?;
                let a1 = self.find_alpha(&sides[1], &needed[1], trace)?;
                a0.compose(&a1)
            }
            Cut::Hnn { base, .. } => {
                let mut all = needed[0].clone();
                all.extend(needed[1].iter().cloned());
                all.dedup();
                self.find_alpha(base, &all, trace)?
            }
        };

        // Criterion instances after α, with the twist as the growing power.
        let z = self.rho(&zeta);
        if self.lower.is_trivial(&z) {
            return Err(ClgError::Hypothesis(format!(
                "retraction kills the edge group of {}",
                edge.id
            )));
        }
        let t_image = edge
            .stable
            .map(|t| self.rho(&alpha.apply(&self.gad.generator(t))));
        let mut start = 1u64;
        for nf in &forms {
            let mut tokens = Vec::new();
            for p in &nf.pieces {
                match p {
                    Piece::Syllable { side, word } => {
                        let w = self.rho(&alpha.apply(word));
                        if cut.is_amalgam() && *side == 1 {
                            tokens.extend([Token::Twist(1), Token::Piece(w), Token::Twist(-1)]);
                        } else {
                            tokens.push(Token::Piece(w));
                        }
                    }
                    Piece::Stable(s) => {
                        let t = t_image.clone().expect("stable letter");
                        if *s > 0 {
                            tokens.extend([Token::Piece(t), Token::Twist(1)]);
                        } else {
                            tokens.extend([Token::Twist(-1), Token::Piece(t.inverse())]);
                        }
                    }
                }
            }
            let a = criterion_words(tokens, z.rank());
            if a.len() > 1 {
                start = start.max(sufficient_exponent(&z, &a)?);
            }
        }
        let side = if cut.is_amalgam() { 1 } else { 0 };
        let mut k = start as i64;
        for _ in 0..=MAX_DOUBLINGS {
            let delta = ModAut::edge_twist(self.gad, e, &zeta.pow(k), side)?;
            let candidate = delta.compose(&alpha);
            if self.all_survive(candidate.images(), ys) {
                let mut recursed = needed[0].clone();
                recursed.extend(needed[1].iter().cloned());
                trace.push(DiscriminationStep {
                    location: format!("edge={}", edge.id),
                    zeta_text: self.format(&zeta),
                    zeta,
                    k,
                    recursed,
                });
                return Ok(candidate);
            }
            k *= 2;
        }
        Err(ClgError::NoExponent {
            edge: edge.id.clone(),
            limit: k / 2,
        })
    }

    /// Searches automorphisms `v ↦ v(I + m·k wᵀ)` of an abelian vertex, with
    /// `k` orthogonal to the peripheral lattice and `w ⊥ k`; these fix the
    /// lattice and are unimodular.
    fn abelian_alpha(
        &self,
        v: usize,
        peripheral: &[Vec<i64>],
        ys: &[Word],
        trace: &mut Vec<DiscriminationStep>,
    ) -> Result<ModAut, ClgError> {
        let n = self.gad.vertices()[v].gens.len();
        let lattice = fixed_lattice(self.gad, v, peripheral);
        let kernel = linalg::integer_nullspace(&lattice, n);
        let mut moves: Vec<(Vec<i64>, Vec<i64>)> = Vec::new();
        for k in &kernel {
            for i in 0..n {
                if k[i] == 0 {
                    let mut w = vec![0; n];
                    w[i] = 1;
                    moves.push((k.clone(), w));
                }
                for j in i + 1..n {
                    if k[i] != 0 || k[j] != 0 {
                        let mut w = vec![0; n];
                        w[i] = k[j];
                        w[j] = -k[i];
                        moves.push((k.clone(), w));
                    }
                }
            }
        }
        let matrix = |k: &[i64], w: &[i64], m: i64| -> Vec<Vec<i64>> {
            (0..n)
                .map(|i| (0..n).map(|j| (i == j) as i64 + m * k[i] * w[j]).collect())
                .collect()
        };
        let images_for = |mat: &[Vec<i64>]| -> Vec<Word> {
            let mut images: Vec<Word> = (1..=self.gad.rank())
                .map(|i| self.gad.generator(i))
                .collect();
            for (row, i) in self.gad.local_range(v).enumerate() {
                images[i as usize - 1] = self.gad.local_element(v, &mat[row]);
            }
            images
        };
        for m in (1..=MAX_TRANSVECTION).flat_map(|m| [m, -m]) {
            for (k, w) in &moves {
                let mat = matrix(k, w, m);
                if self.all_survive(&images_for(&mat), ys) {
                    let id = &self.gad.vertices()[v].id;
                    let alpha = ModAut::generalized_dehn_twist(self.gad, id, &mat)?;
                    trace.push(DiscriminationStep {
                        location: format!("vertex={id}"),
                        zeta: self.gad.local_element(v, k),
                        zeta_text: self.format(&self.gad.local_element(v, k)),
                        k: m,
                        recursed: ys.to_vec(),
                    });
                    return Ok(alpha);
                }
            }
        }
        Err(ClgError::Hypothesis(format!(
            "no automorphism of abelian vertex {} fixing its peripheral lattice keeps the set nontrivial",
            self.gad.vertices()[v].id
        )))
    }

    /// Twists along handle curves of an orientable surface vertex, which fix
    /// every boundary generator; the curve from [`choose_surface_curve`] is
    /// tried first.
    fn surface_alpha(
        &self,
        v: usize,
        ys: &[Word],
        trace: &mut Vec<DiscriminationStep>,
    ) -> Result<ModAut, ClgError> {
        let vertex = &self.gad.vertices()[v];
        let VertexKind::Qh {
            genus,
            orientable,
            boundary,
        } = vertex.kind
        else {
            unreachable!()
        };
        let fail = || {
            ClgError::Hypothesis(format!(
                "no boundary-fixing twist of surface vertex {} keeps the set nontrivial",
                vertex.id
            ))
        };
        if !orientable || genus == 0 {
            return Err(fail());
        }
        let range: Vec<u32> = self.gad.local_range(v).collect();
        let local_images: Vec<Word> = range
            .iter()
            .map(|&i| self.rho(&self.gad.generator(i)))
            .collect();
        let trivial = |w: &Word| self.lower.is_trivial(w);
        let (curve, _) =
            choose_surface_curve(genus, orientable, boundary, &local_images, &trivial)?;
        let first_handle = curve.len() == 1;
        let gen = |i: usize| self.gad.generator(range[i]);
        let mut handles: Vec<usize> = (0..genus as usize).collect();
        if !first_handle && handles.len() > 1 {
            handles.rotate_left(1);
        }
        for m in (1..=MAX_TRANSVECTION).flat_map(|m| [m, -m]) {
            for &h in &handles {
                // Twist along aₕ: bₕ ↦ bₕ aₕ^m; along bₕ: aₕ ↦ aₕ bₕ^m.
                for (moved, fixed) in [(2 * h + 1, 2 * h), (2 * h, 2 * h + 1)] {
                    let mut images: Vec<Word> = (1..=self.gad.rank())
                        .map(|i| self.gad.generator(i))
                        .collect();
                    let mut inverse = images.clone();
                    images[range[moved] as usize - 1] = &gen(moved) * &gen(fixed).pow(m);
                    inverse[range[moved] as usize - 1] = &gen(moved) * &gen(fixed).pow(-m);
                    if self.all_survive(&images, ys) {
                        let label = format!(
                            "twist {} along {} power {m}",
                            vertex.gens[moved], vertex.gens[fixed]
                        );
                        let alpha = ModAut::verified(
                            self.gad,
                            images,
                            inverse,
                            AutTag::Vertex {
                                vertex: vertex.id.clone(),
                                label,
                            },
                        )?;
                        trace.push(DiscriminationStep {
                            location: format!("vertex={}", vertex.id),
                            zeta: gen(fixed),
                            zeta_text: vertex.gens[fixed].clone(),
                            k: m,
                            recursed: ys.to_vec(),
                        });
                        return Ok(alpha);
                    }
                }
            }
        }
        Err(fail())
    }
}

/// Collapses tokens into `a₀, a₁, …, aₙ` around the twist powers, merging
/// powers separated by a trivial piece.
fn criterion_words(tokens: Vec<Token>, rank: u32) -> Vec<Word> {
    let mut a = vec![Word::identity(rank)];
    let mut exps: Vec<i64> = Vec::new();
    for t in tokens {
        match t {
            Token::Piece(w) => {
                let last = a.last_mut().unwrap();
                *last = &*last * &w;
            }
            Token::Twist(e) => {
                if a.len() > 1 && a.last().unwrap().is_identity() {
                    a.pop();
                    let merged = exps.pop().unwrap() + e;
                    if merged != 0 {
                        exps.push(merged);
                        a.push(Word::identity(rank));
                    }
                } else {
                    exps.push(e);
                    a.push(Word::identity(rank));
                }
            }
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gad::{surface_double, z2_hnn, EdgeSpec, Vertex};

    fn w2(s: &str) -> Word {
        Alphabet::standard(2).parse(s).unwrap()
    }

    #[test]
    fn sufficient_exponent_examples() {
        assert_eq!(
            sufficient_exponent(&w2("a b"), &[w2("b"), w2("b")]).unwrap(),
            2
        );
        assert_eq!(
            sufficient_exponent(&w2("a"), &[w2("1"), w2("1")]).unwrap(),
            1
        );
        assert_eq!(
            sufficient_exponent(&w2("a b a^-1"), &[w2("b"), w2("b")]).unwrap(),
            3
        );
        assert!(sufficient_exponent(&w2("1"), &[]).is_err());
    }

    #[test]
    fn criterion_examples() {
        let inst = CriterionInstance::new(w2("a b"), vec![w2("b"), w2("b")], vec![2]).unwrap();
        assert_eq!(inst.evaluate(), w2("b a b a b b"));
        assert!(criterion_nontrivial(&inst));
        let bad = CriterionInstance::new(w2("a"), vec![w2("1"), w2("a^-2"), w2("1")], vec![1, 1]);
        assert!(matches!(bad, Err(ClgError::Criterion(_))));
    }

    #[test]
    fn criterion_words_merge_trivial_gaps() {
        let toks = vec![
            Token::Piece(w2("b")),
            Token::Twist(1),
            Token::Twist(-1),
            Token::Piece(w2("a")),
            Token::Twist(1),
            Token::Piece(w2("b")),
        ];
        assert_eq!(criterion_words(toks, 2), vec![w2("b a"), w2("b")]);
    }

    fn z2_over_z(peripheral: Vec<Vec<i64>>) -> Clg {
        let gad = Gad::new(vec![Vertex::abelian("Z", ["a", "t"], peripheral)], vec![]).unwrap();
        Clg::indecomposable_parsed(gad, Clg::free(["c"]), &["c", "c"]).unwrap()
    }

    #[test]
    fn validation_examples() {
        assert!(validate_clg(&Clg::free(["a", "b"]), 1).unwrap().passed());
        assert!(validate_clg(&z2_over_z(vec![vec![1, 0]]), 2)
            .unwrap()
            .passed());
        assert!(!validate_clg(&z2_over_z(vec![vec![1, 0], vec![0, 1]]), 2)
            .unwrap()
            .passed());
        let qh = Gad::new(vec![Vertex::qh("S", 0, true, 3)], vec![]).unwrap();
        let abelian_image =
            Clg::indecomposable_parsed(qh, Clg::free(["c"]), &["c", "c^2", "c^-3"]).unwrap();
        let report = validate_clg(&abelian_image, 2).unwrap();
        assert!(!report.passed());
        assert!(report.to_text().contains("vertex.S.nonabelian fail"));
    }

    #[test]
    fn retraction_must_be_a_homomorphism() {
        let gad = Gad::new(vec![Vertex::abelian("Z", ["a", "t"], vec![])], vec![]).unwrap();
        let bad = Clg::indecomposable_parsed(gad, Clg::free(["c", "d"]), &["c", "d"]);
        assert!(matches!(bad, Err(ClgError::Rho(_))));
    }

    #[test]
    fn surface_curve_examples() {
        let f = Alphabet::standard(2);
        let trivial = |w: &Word| w.is_identity();
        let imgs: Vec<Word> = ["a", "b", "a^-1", "b^-1"]
            .iter()
            .map(|s| f.parse(s).unwrap())
            .collect();
        let (zeta, cert) = choose_surface_curve(0, true, 4, &imgs, &trivial).unwrap();
        assert_eq!(zeta, Word::from_signed(4, &[1, 2]));
        match cert.case {
            SurfaceCase::PuncturedSphere { classes, pair, .. } => {
                assert_eq!(classes, vec![vec![1, 3], vec![2, 4]]);
                assert_eq!(pair, (1, 2));
            }
            other => panic!("unexpected case {other:?}"),
        }
        let imgs: Vec<Word> = ["a", "b", "a b a^-1 b^-1"]
            .iter()
            .map(|s| f.parse(s).unwrap())
            .collect();
        let (zeta, cert) = choose_surface_curve(1, true, 1, &imgs, &trivial).unwrap();
        assert_eq!(zeta, Word::from_signed(3, &[1]));
        assert_eq!(
            cert.case,
            SurfaceCase::PositiveGenus {
                used_boundary: false
            }
        );
        let imgs: Vec<Word> = ["1", "a", "b"]
            .iter()
            .map(|s| f.parse(s).unwrap())
            .collect();
        let (zeta, cert) = choose_surface_curve(1, true, 1, &imgs, &trivial).unwrap();
        assert_eq!(zeta, Word::from_signed(3, &[1, 3]));
        assert_eq!(cert.image, f.parse("b").unwrap());
        let abelian: Vec<Word> = ["a", "a^2", "a^-3"]
            .iter()
            .map(|s| f.parse(s).unwrap())
            .collect();
        assert!(choose_surface_curve(0, true, 3, &abelian, &trivial).is_err());
    }

    #[test]
    fn discriminate_z2() {
        let c = z2_over_z(vec![vec![1, 0]]);
        let xs = [c.parse_word("a").unwrap(), c.parse_word("t").unwrap()];
        let d = discriminate(&c, &xs, Mode::Injective).unwrap();
        assert_eq!(d.hom.images(), [w2("a^-1"), w2("a")]);
    }

    #[test]
    fn discriminate_free() {
        let c = Clg::free(["x", "y", "z"]);
        let xs = [
            c.parse_word("x y").unwrap(),
            c.parse_word("z").unwrap(),
            c.parse_word("y x").unwrap(),
        ];
        let d = discriminate(&c, &xs, Mode::Injective).unwrap();
        assert!(d.hom.injective_on(&xs));
    }

    fn double_clg() -> Clg {
        Clg::indecomposable_parsed(
            surface_double(),
            Clg::free(["a", "b"]),
            &["a", "b", "b", "a"],
        )
        .unwrap()
    }

    #[test]
    fn discriminate_double() {
        let c = double_clg();
        let xs: Vec<Word> = ["a", "c", "a c", "a b a^-1 b^-1"]
            .iter()
            .map(|s| c.parse_word(s).unwrap())
            .collect();
        let d = discriminate(&c, &xs, Mode::Injective).unwrap();
        let images: Vec<Word> = xs.iter().map(|x| d.hom.evaluate(x).unwrap()).collect();
        for i in 0..images.len() {
            for j in i + 1..images.len() {
                assert_ne!(images[i], images[j]);
            }
        }
        assert!(d.trace.iter().any(|s| s.location == "edge=e" && s.k >= 1));
    }

    #[test]
    fn discriminate_hnn_and_product() {
        let gad = Gad::new(
            vec![Vertex::rigid("F", ["a", "b"])],
            vec![EdgeSpec::loop_edge(
                "e",
                "F",
                "F",
                ["a b a^-1 b^-1"],
                ["a b a^-1 b^-1"],
                "t",
            )],
        )
        .unwrap();
        let c = Clg::indecomposable_parsed(gad, Clg::free(["a", "b"]), &["a", "b", "1"]).unwrap();
        let xs: Vec<Word> = ["a", "t", "a t", "t a t^-1 a^-1"]
            .iter()
            .map(|s| c.parse_word(s).unwrap())
            .collect();
        let d = discriminate(&c, &xs, Mode::Injective).unwrap();
        assert!(d.hom.injective_on(&xs));
        let z2 = Clg::indecomposable_parsed(z2_hnn(), Clg::free(["c"]), &["c", "1"]).unwrap();
        let p = Clg::free_product(vec![z2, Clg::free(["x"])]).unwrap();
        let xs: Vec<Word> = ["a t x", "x a", "t"]
            .iter()
            .map(|s| p.parse_word(s).unwrap())
            .collect();
        let d = discriminate(&p, &xs, Mode::Nontrivial).unwrap();
        assert!(d.hom.nontrivial_on(&xs));
    }

    #[test]
    fn rejects_trivial_elements() {
        let c = double_clg();
        let r = c.parse_word("a b a^-1 b^-1 c d c^-1 d^-1").unwrap();
        assert!(matches!(
            discriminate(&c, &[r], Mode::Nontrivial),
            Err(ClgError::TrivialElement(_))
        ));
    }

    #[test]
    fn free_product_word_problem() {
        let z2 = Clg::indecomposable_parsed(z2_hnn(), Clg::free(["c"]), &["c", "1"]).unwrap();
        let p = Clg::free_product(vec![Clg::free(["x"]), z2]).unwrap();
        assert!(p.is_trivial(&p.parse_word("x a t a^-1 t^-1 x^-1").unwrap()));
        assert!(!p.is_trivial(&p.parse_word("x a x^-1 a^-1").unwrap()));
    }

    fn random_word(rng: &mut impl rand::Rng, max: usize) -> Word {
        let len = rng.gen_range(0..=max);
        let raw: Vec<i32> = (0..len)
            .map(|_| if rng.gen_bool(0.5) { 1 } else { -1 } * rng.gen_range(1..=2))
            .collect();
        Word::from_signed(2, &raw)
    }

    #[test]
    fn random_instances_at_the_bound_are_nontrivial() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut done = 0;
        while done < 500 {
            let z = random_word(&mut rng, 6);
            let n = rng.gen_range(1..=4);
            let a: Vec<Word> = (0..=n).map(|_| random_word(&mut rng, 6)).collect();
            let Ok(probe) = CriterionInstance::new(z.clone(), a.clone(), vec![1; n]) else {
                continue;
            };
            let bound = probe.sufficient_exponent() as i64;
            let exps: Vec<i64> = (0..n)
                .map(|_| if rng.gen_bool(0.5) { 1 } else { -1 } * (bound + rng.gen_range(0..3)))
                .collect();
            let inst = CriterionInstance::new(z, a, exps).unwrap();
            assert!(criterion_nontrivial(&inst), "{inst:?}");
            done += 1;
        }
    }

    proptest::proptest! {
        #[test]
        fn commutation_classes_partition(raw in proptest::collection::vec(proptest::collection::vec(-2i32..=2, 0..4), 1..7)) {
            let xs: Vec<Word> = raw.iter().map(|r| {
                let r: Vec<i32> = r.iter().copied().filter(|&x| x != 0).collect();
                Word::from_signed(2, &r)
            }).collect();
            let commute = |x: &Word, y: &Word| x.commutes(y).unwrap();
            let classes = commutation_classes(&xs, &commute);
            let mut seen: Vec<usize> = classes.iter().flatten().copied().collect();
            seen.sort();
            proptest::prop_assert_eq!(seen, (1..=xs.len()).collect::<Vec<_>>());
            let nontrivial: Vec<usize> = (0..xs.len()).filter(|&i| !xs[i].is_identity()).collect();
            // Commutation is transitive on nontrivial elements of a free group.
            for &i in &nontrivial {
                for &j in &nontrivial {
                    let same = classes.iter().any(|c| c.contains(&(i + 1)) && c.contains(&(j + 1)));
                    let trivial_first = classes.iter().any(|c| xs[c[0] - 1].is_identity() && c.contains(&(i + 1)));
                    if !trivial_first {
                        proptest::prop_assert_eq!(same, commute(&xs[i], &xs[j]));
                    }
                }
            }
        }
    }
}
