//! Finite presentations and verified homomorphisms into free groups.

use std::fmt::Write as _;

use thiserror::Error;

use crate::gad::folding::FoldedGraph;
use crate::word::{Alphabet, Word, WordError};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum HomError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error("expected {expected} generator images, got {got}")]
    ImageCount { expected: usize, got: usize },
    #[error("relator {index} ({relator}) maps to {image}, not the identity")]
    RelatorViolated {
        index: usize,
        relator: String,
        image: String,
    },
    #[error("duplicate generator {0:?}")]
    DuplicateGenerator(String),
    #[error("relators must be nonempty reduced words (relator {0})")]
    EmptyRelator(usize),
    #[error("homomorphisms do not share domain and target rank")]
    Incompatible,
    #[error("empty sequence of homomorphisms")]
    EmptySequence,
    #[error("zero vector at position {0}")]
    ZeroVector(usize),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Presentation {
    generators: Vec<String>,
    relators: Vec<Word>,
}

impl Presentation {
    pub fn new(generators: Vec<String>, relators: Vec<Word>) -> Result<Presentation, HomError> {
        for (i, g) in generators.iter().enumerate() {
            if generators[..i].contains(g) {
                return Err(HomError::DuplicateGenerator(g.clone()));
            }
        }
        let rank = generators.len() as u32;
        for (i, r) in relators.iter().enumerate() {
            if r.is_identity() {
                return Err(HomError::EmptyRelator(i));
            }
            if r.rank() != rank {
                return Err(WordError::RankMismatch {
                    left: rank,
                    right: r.rank(),
                }
                .into());
            }
        }
        Ok(Presentation {
            generators,
            relators,
        })
    }

    /// The free group on the given generator names.
    pub fn free<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Presentation {
        let generators: Vec<String> = names.into_iter().map(Into::into).collect();
        Presentation::new(generators, Vec::new()).expect("free presentation")
    }

    /// Parses relators given as text over the generator names.
    pub fn parse<S: AsRef<str>>(
        generators: &[&str],
        relators: &[S],
    ) -> Result<Presentation, HomError> {
        let alpha = Alphabet::new(generators.iter().copied());
        let rels = relators
            .iter()
            .map(|r| alpha.parse(r.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        Presentation::new(generators.iter().map(|s| s.to_string()).collect(), rels)
    }

    pub fn generators(&self) -> &[String] {
        &self.generators
    }

    pub fn relators(&self) -> &[Word] {
        &self.relators
    }

    pub fn rank(&self) -> u32 {
        self.generators.len() as u32
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet::new(self.generators.iter().cloned())
    }

    pub fn generator(&self, name: &str) -> Option<Word> {
        self.alphabet()
            .index_of(name)
            .map(|i| Word::generator(self.rank(), i))
    }

    /// Line format: `gens a b t` then `rel <word>` lines.
    pub fn from_text(text: &str) -> Result<Presentation, HomError> {
        let mut gens: Option<Vec<String>> = None;
        let mut rels = Vec::new();
        for (ln, line) in content_lines(text) {
            let (key, rest) = split_key(line);
            match key {
                "gens" => gens = Some(rest.split_whitespace().map(String::from).collect()),
                "rel" => {
                    let g = gens
                        .as_ref()
                        .ok_or_else(|| parse_err(ln, "rel before gens"))?;
                    let w = Alphabet::new(g.iter().cloned())
                        .parse(rest)
                        .map_err(|e| parse_err(ln, &e.to_string()))?;
                    rels.push(w);
                }
                other => return Err(parse_err(ln, &format!("unknown directive {other:?}"))),
            }
        }
        let gens = gens.ok_or_else(|| parse_err(0, "missing gens line"))?;
        Presentation::new(gens, rels)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("gens {}\n", self.generators.join(" "));
        let alpha = self.alphabet();
        for r in &self.relators {
            let _ = writeln!(s, "rel {}", alpha.format(r));
        }
        s
    }
}

pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub(crate) fn split_key(line: &str) -> (&str, &str) {
    match line.split_once(char::is_whitespace) {
        Some((k, r)) => (k, r.trim()),
        None => (line, ""),
    }
}

pub(crate) fn parse_err(line: usize, msg: &str) -> HomError {
    HomError::Parse {
        line,
        msg: msg.to_string(),
    }
}

/// A homomorphism from a presented group to a free group, checked on
/// construction to send every relator to the identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hom {
    domain: Presentation,
    target: Alphabet,
    images: Vec<Word>,
}

impl Hom {
    /// Checks well-definedness; fails naming the first violated relator.
    pub fn new(domain: Presentation, target: Alphabet, images: Vec<Word>) -> Result<Hom, HomError> {
        if images.len() != domain.generators.len() {
            return Err(HomError::ImageCount {
                expected: domain.generators.len(),
                got: images.len(),
            });
        }
        let rank = target.rank();
        for img in &images {
            if img.rank() != rank {
                return Err(WordError::RankMismatch {
                    left: rank,
                    right: img.rank(),
                }
                .into());
            }
        }
        let hom = Hom {
            domain,
            target,
            images,
        };
        hom.check_relators()?;
        Ok(hom)
    }

    pub fn check_relators(&self) -> Result<(), HomError> {
        for (i, r) in self.domain.relators.iter().enumerate() {
            let img = self.evaluate_unchecked(r);
            if !img.is_identity() {
                let alpha = self.domain.alphabet();
                return Err(HomError::RelatorViolated {
                    index: i,
                    relator: alpha.format(r),
                    image: self.target.format(&img),
                });
            }
        }
        Ok(())
    }

    pub fn domain(&self) -> &Presentation {
        &self.domain
    }

    pub fn target(&self) -> &Alphabet {
        &self.target
    }

    pub fn target_rank(&self) -> u32 {
        self.target.rank()
    }

    pub fn images(&self) -> &[Word] {
        &self.images
    }

    pub fn image_of(&self, name: &str) -> Option<&Word> {
        self.domain
            .alphabet()
            .index_of(name)
            .map(|i| &self.images[i as usize - 1])
    }

    pub fn evaluate(&self, w: &Word) -> Result<Word, HomError> {
        if w.rank() != self.domain.rank() {
            return Err(WordError::RankMismatch {
                left: self.domain.rank(),
                right: w.rank(),
            }
            .into());
        }
        Ok(self.evaluate_unchecked(w))
    }

    fn evaluate_unchecked(&self, w: &Word) -> Word {
        w.substitute(&self.images, self.target.rank())
    }

    /// Maximum image length over the listed generators.
    pub fn length(&self) -> usize {
        self.images.iter().map(Word::len).max().unwrap_or(0)
    }

    pub fn total_length(&self) -> usize {
        self.images.iter().map(Word::len).sum()
    }

    /// `ε ∉ f(X)`.
    pub fn nontrivial_on(&self, xs: &[Word]) -> bool {
        xs.iter().all(|x| !self.evaluate_unchecked(x).is_identity())
    }

    /// Pairwise distinct images, tested through the products `x y⁻¹`.
    pub fn injective_on(&self, xs: &[Word]) -> bool {
        self.nontrivial_on(&pairwise_quotients(xs))
    }

    /// `self ∘ g` where `g` maps this hom's domain generators to words over
    /// another presentation; the caller guarantees `g` is a homomorphism.
    pub fn precompose(&self, domain: Presentation, substitution: &[Word]) -> Result<Hom, HomError> {
        let images = substitution
            .iter()
            .map(|w| self.evaluate_unchecked(w))
            .collect();
        Hom::new(domain, self.target.clone(), images)
    }

    /// `h ∘ self` for a homomorphism `h` out of the free group on this hom's
    /// target generators.
    pub fn postcompose(&self, target: Alphabet, target_images: &[Word]) -> Hom {
        let images = self
            .images
            .iter()
            .map(|w| w.substitute(target_images, target.rank()))
            .collect();
        Hom {
            domain: self.domain.clone(),
            target,
            images,
        }
    }

    /// `x ↦ u⁻¹ f(x) u`.
    pub fn conjugated(&self, u: &Word) -> Hom {
        let ui = u.inverse();
        let images = self.images.iter().map(|w| &(&ui * w) * u).collect();
        Hom {
            domain: self.domain.clone(),
            target: self.target.clone(),
            images,
        }
    }

    /// `target_rank r`, `target_gens ...`, then `image <gen> <word>` lines.
    pub fn from_text(domain: Presentation, text: &str) -> Result<Hom, HomError> {
        let mut rank: Option<u32> = None;
        let mut names: Option<Vec<String>> = None;
        let mut images: Vec<Option<Word>> = vec![None; domain.generators.len()];
        let dalpha = domain.alphabet();
        for (ln, line) in content_lines(text) {
            let (key, rest) = split_key(line);
            match key {
                "target_rank" => {
                    rank = Some(rest.parse().map_err(|_| parse_err(ln, "bad target_rank"))?)
                }
                "target_gens" => names = Some(rest.split_whitespace().map(String::from).collect()),
                "image" => {
                    let (g, word) = split_key(rest);
                    let idx = dalpha
                        .index_of(g)
                        .ok_or_else(|| parse_err(ln, &format!("unknown domain generator {g:?}")))?;
                    let talpha = target_alphabet(rank, &names)
                        .ok_or_else(|| parse_err(ln, "image before target_rank"))?;
                    let w = talpha
                        .parse(word)
                        .map_err(|e| parse_err(ln, &e.to_string()))?;
                    images[idx as usize - 1] = Some(w);
                }
                other => return Err(parse_err(ln, &format!("unknown directive {other:?}"))),
            }
        }
        let talpha =
            target_alphabet(rank, &names).ok_or_else(|| parse_err(0, "missing target_rank"))?;
        let images = images
            .into_iter()
            .enumerate()
            .map(|(i, w)| {
                w.ok_or_else(|| parse_err(0, &format!("no image for {}", domain.generators[i])))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Hom::new(domain, talpha, images)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("target_rank {}\n", self.target.rank());
        let _ = writeln!(s, "target_gens {}", self.target.names().join(" "));
        for (g, w) in self.domain.generators.iter().zip(&self.images) {
            let _ = writeln!(s, "image {g} {}", self.target.format(w));
        }
        s
    }
}

fn target_alphabet(rank: Option<u32>, names: &Option<Vec<String>>) -> Option<Alphabet> {
    match (rank, names) {
        (_, Some(n)) => Some(Alphabet::new(n.iter().cloned())),
        (Some(r), None) => Some(Alphabet::standard(r)),
        (None, None) => None,
    }
}

/// `{ x y⁻¹ : x ≠ y ∈ X }` over unordered pairs, in input order.
pub fn pairwise_quotients(xs: &[Word]) -> Vec<Word> {
    let mut out = Vec::new();
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            out.push(&xs[i] * &xs[j].inverse());
        }
    }
    out
}

/// `xᵢ ↦ bⁱ a b⁻ⁱ` from the free group of rank `n` into the free group on `a, b`.
pub fn embed_free_into_rank2(n: u32) -> Hom {
    let domain = Presentation::free((1..=n).map(|i| format!("x{i}")));
    let a = Word::generator(2, 1);
    let b = Word::generator(2, 2);
    let images = (1..=n as i64).map(|i| a.conjugate_by(&b.pow(i))).collect();
    Hom::new(domain, Alphabet::standard(2), images).expect("free domain has no relators")
}

/// Folded graph of the image subgroup; rank `n` and a folded core certify
/// that the images freely generate a free group of rank `n`.
pub fn image_subgroup_graph(h: &Hom) -> FoldedGraph {
    FoldedGraph::new(h.target_rank(), h.images())
}

/// Nonzero lattice points in increasing max-norm shells; each shell in
/// lexicographic order over components `-k..=k`.
pub fn canonical_vectors(n: usize) -> impl Iterator<Item = Vec<i64>> {
    (1i64..).flat_map(move |k| shell(n, k))
}

fn shell(n: usize, k: i64) -> impl Iterator<Item = Vec<i64>> {
    let side = (2 * k + 1) as u64;
    let total = side.checked_pow(n as u32).unwrap_or(u64::MAX);
    (0..total).filter_map(move |mut code| {
        let mut v = vec![0i64; n];
        for i in (0..n).rev() {
            v[i] = (code % side) as i64 - k;
            code /= side;
        }
        v.iter().any(|c| c.abs() == k).then_some(v)
    })
}

pub fn inner(z: &[i64], v: &[i64]) -> i64 {
    z.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// First `z` in canonical order with `⟨z, v⟩ ≠ 0` for every input vector.
pub fn abelian_discriminator(vectors: &[Vec<i64>], n: usize) -> Result<Vec<i64>, HomError> {
    for (i, v) in vectors.iter().enumerate() {
        if v.len() != n {
            return Err(HomError::Incompatible);
        }
        if v.iter().all(|&c| c == 0) {
            return Err(HomError::ZeroVector(i));
        }
    }
    if vectors.is_empty() {
        let mut z = vec![0; n];
        if n > 0 {
            z[0] = 1;
        }
        return Ok(z);
    }
    Ok(canonical_vectors(n)
        .find(|z| vectors.iter().all(|v| inner(z, v) != 0))
        .expect("a nonzero vector avoids finitely many hyperplanes"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StableVerdict {
    EventuallyTrivial,
    EventuallyNontrivial,
    UnstableInWindow,
}

impl StableVerdict {
    pub fn label(self) -> &'static str {
        match self {
            StableVerdict::EventuallyTrivial => "eventually-trivial",
            StableVerdict::EventuallyNontrivial => "eventually-nontrivial",
            StableVerdict::UnstableInWindow => "unstable-in-window",
        }
    }
}

/// Windowed (heuristic) stability verdict for one element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StableReport {
    pub element: Word,
    /// `true` where the image is trivial.
    pub pattern: Vec<bool>,
    pub verdict: StableVerdict,
}

pub fn stable_kernel_window(fs: &[Hom], xs: &[Word]) -> Result<Vec<StableReport>, HomError> {
    let first = fs.first().ok_or(HomError::EmptySequence)?;
    if fs
        .iter()
        .any(|f| f.domain != first.domain || f.target_rank() != first.target_rank())
    {
        return Err(HomError::Incompatible);
    }
    xs.iter()
        .map(|x| {
            let pattern = fs
                .iter()
                .map(|f| f.evaluate(x).map(|w| w.is_identity()))
                .collect::<Result<Vec<_>, _>>()?;
            let last = *pattern.last().expect("nonempty window");
            let tail = pattern.iter().rev().take_while(|&&p| p == last).count();
            let verdict = if 2 * tail >= pattern.len() {
                if last {
                    StableVerdict::EventuallyTrivial
                } else {
                    StableVerdict::EventuallyNontrivial
                }
            } else {
                StableVerdict::UnstableInWindow
            };
            Ok(StableReport {
                element: x.clone(),
                pattern,
                verdict,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z2() -> Presentation {
        Presentation::parse(&["a", "t"], &["a t a^-1 t^-1"]).unwrap()
    }

    fn cd() -> Alphabet {
        Alphabet::new(["c", "d"])
    }

    fn hom(p: &Presentation, imgs: &[&str]) -> Result<Hom, HomError> {
        let t = cd();
        let images = imgs.iter().map(|s| t.parse(s).unwrap()).collect();
        Hom::new(p.clone(), t, images)
    }

    #[test]
    fn validate_examples() {
        let free = Presentation::free(["a", "b"]);
        assert!(Hom::new(
            free,
            Alphabet::standard(2),
            vec![Word::generator(2, 1), Word::generator(2, 2)]
        )
        .is_ok());
        assert!(hom(&z2(), &["c", "c^2"]).is_ok());
        match hom(&z2(), &["c", "d"]) {
            Err(HomError::RelatorViolated { index: 0, .. }) => {}
            other => panic!("expected relator violation, got {other:?}"),
        }
        assert!(matches!(
            hom(&z2(), &["c"]),
            Err(HomError::ImageCount { .. })
        ));
    }

    #[test]
    fn evaluate_examples() {
        let p = z2();
        let f = hom(&p, &["c", "c^2"]).unwrap();
        let w = p.alphabet().parse("a t^-1").unwrap();
        assert_eq!(f.evaluate(&w).unwrap(), cd().parse("c^-1").unwrap());
        assert!(f.evaluate(&Word::identity(2)).unwrap().is_identity());
        assert!(f.evaluate(&Word::identity(3)).is_err());
    }

    #[test]
    fn length_examples() {
        let p = z2();
        assert_eq!(hom(&p, &["c", "c^2"]).unwrap().length(), 2);
        let free = Presentation::free(["a", "b"]);
        let ab = Alphabet::standard(2);
        let id = Hom::new(
            free.clone(),
            ab.clone(),
            vec![ab.parse("a").unwrap(), ab.parse("b").unwrap()],
        )
        .unwrap();
        assert_eq!(id.length(), 1);
        let f = Hom::new(
            free,
            ab.clone(),
            vec![ab.parse("a").unwrap(), ab.parse("a b a^-1").unwrap()],
        )
        .unwrap();
        assert_eq!(f.length(), 3);
    }

    #[test]
    fn injectivity_examples() {
        let p = z2();
        let x = vec![p.generator("a").unwrap(), p.generator("t").unwrap()];
        assert!(hom(&p, &["c", "c^2"]).unwrap().injective_on(&x));
        assert!(!hom(&p, &["c", "c"]).unwrap().injective_on(&x));
    }

    #[test]
    fn embed_free_examples() {
        let h = embed_free_into_rank2(1);
        assert_eq!(
            h.images()[0],
            Alphabet::standard(2).parse("b a b^-1").unwrap()
        );
        let h = embed_free_into_rank2(2);
        assert_eq!(
            h.images()[1],
            Alphabet::standard(2).parse("b^2 a b^-2").unwrap()
        );
        for n in 1..=6 {
            let g = image_subgroup_graph(&embed_free_into_rank2(n));
            assert_eq!(g.subgroup_rank(), n as usize);
            assert!(g.is_folded());
        }
    }

    #[test]
    fn abelian_discriminator_examples() {
        assert_eq!(
            abelian_discriminator(&[vec![1, 2], vec![3, -1]], 2).unwrap(),
            vec![-1, -1]
        );
        assert_eq!(
            abelian_discriminator(&[vec![1, 0], vec![0, 1], vec![1, -1]], 2).unwrap(),
            vec![-1, 1]
        );
        assert_eq!(abelian_discriminator(&[vec![5]], 1).unwrap(), vec![-1]);
        assert_eq!(abelian_discriminator(&[], 3).unwrap(), vec![1, 0, 0]);
        assert!(matches!(
            abelian_discriminator(&[vec![0, 0]], 2),
            Err(HomError::ZeroVector(0))
        ));
    }

    #[test]
    fn canonical_order_starts_with_first_shell() {
        let first: Vec<Vec<i64>> = canonical_vectors(2).take(9).collect();
        assert_eq!(first[0], vec![-1, -1]);
        assert_eq!(first[7], vec![1, 1]);
        assert_eq!(first[8], vec![-2, -2]);
    }

    #[test]
    fn stable_window_examples() {
        let p = z2();
        let fs: Vec<Hom> = (1..=10)
            .map(|k| {
                let t = cd();
                Hom::new(
                    p.clone(),
                    t,
                    vec![Word::generator(2, 1), Word::generator(2, 1).pow(k)],
                )
                .unwrap()
            })
            .collect();
        let t = p.generator("t").unwrap();
        let r = stable_kernel_window(&fs, &[t.clone()]).unwrap();
        assert_eq!(r[0].verdict, StableVerdict::EventuallyNontrivial);

        let trivial: Vec<Hom> = (0..10)
            .map(|_| Hom::new(p.clone(), cd(), vec![Word::identity(2), Word::identity(2)]).unwrap())
            .collect();
        assert_eq!(
            stable_kernel_window(&trivial, &[t.clone()]).unwrap()[0].verdict,
            StableVerdict::EventuallyTrivial
        );

        let alternating: Vec<Hom> = (0..10)
            .map(|i| {
                let img = if i % 2 == 0 {
                    Word::identity(2)
                } else {
                    Word::generator(2, 1)
                };
                Hom::new(p.clone(), cd(), vec![img.clone(), img]).unwrap()
            })
            .collect();
        assert_eq!(
            stable_kernel_window(&alternating, &[t]).unwrap()[0].verdict,
            StableVerdict::UnstableInWindow
        );
        assert_eq!(stable_kernel_window(&[], &[]), Err(HomError::EmptySequence));
    }

    #[test]
    fn text_formats_round_trip() {
        let p = z2();
        assert_eq!(Presentation::from_text(&p.to_text()).unwrap(), p);
        let f = hom(&p, &["c", "c^2"]).unwrap();
        assert_eq!(Hom::from_text(p.clone(), &f.to_text()).unwrap(), f);
        let g = Hom::from_text(p, "target_rank 2\nimage a a\nimage t a^3\n").unwrap();
        assert_eq!(g.target().names(), &["a".to_string(), "b".to_string()]);
    }
}
