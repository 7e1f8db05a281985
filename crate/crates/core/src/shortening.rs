//! Shortening homomorphisms to free groups by precomposing with modular
//! automorphisms and conjugating in the target.

use std::collections::HashSet;
use std::fmt::Write as _;

use num_rational::Ratio;
use thiserror::Error;

use crate::gad::splitting::Cut;
use crate::gad::{AutTag, Gad, GadError, ModAut, View};
use crate::homs::{Hom, HomError};
use crate::word::{Alphabet, Letter, Word};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ShortenError {
    #[error(transparent)]
    Gad(#[from] GadError),
    #[error(transparent)]
    Hom(#[from] HomError),
    #[error("generator {0} acts on a group of a different rank")]
    RankMismatch(usize),
    #[error("empty sequence of homomorphisms")]
    EmptySequence,
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Lexicographic size: longest image, then total image length.
pub fn hom_key(f: &Hom) -> (usize, usize) {
    (f.length(), f.total_length())
}

/// `u⁻¹ f(·) u` for the conjugator `u` reached by greedy single-letter steps,
/// and `u` itself.
pub fn optimal_conjugator(f: &Hom) -> (Hom, Word) {
    let rank = f.target_rank();
    let mut u = Word::identity(rank);
    let mut best = f.clone();
    loop {
        let mut step: Option<(Hom, Word)> = None;
        for i in 1..=rank {
            for positive in [true, false] {
                let x = Word::reduce(rank, [Letter::new(i, positive)]).unwrap();
                let g = best.conjugated(&x);
                let current = step.as_ref().map_or(hom_key(&best), |(h, _)| hom_key(h));
                if hom_key(&g) < current {
                    step = Some((g, x));
                }
            }
        }
        match step {
            Some((g, x)) => {
                best = g;
                u = &u * &x;
            }
            None => return (best, u),
        }
    }
}

pub fn optimal_conjugation(f: &Hom) -> Hom {
    optimal_conjugator(f).0
}

#[derive(Clone, Debug)]
pub struct ShorteningProblem {
    pub f: Hom,
    pub mod_generators: Vec<ModAut>,
    pub conjugation: bool,
}

impl ShorteningProblem {
    pub fn new(
        f: Hom,
        mod_generators: Vec<ModAut>,
        conjugation: bool,
    ) -> Result<ShorteningProblem, ShortenError> {
        if let Some(i) = mod_generators
            .iter()
            .position(|a| a.rank() != f.domain().rank())
        {
            return Err(ShortenError::RankMismatch(i));
        }
        Ok(ShorteningProblem {
            f,
            mod_generators,
            conjugation,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Move {
    /// Precomposition with generator `index`, or its inverse when `exponent`
    /// is `-1`.
    Aut { index: usize, exponent: i64 },
    /// `f ↦ u⁻¹ f u`.
    Conj(Word),
}

#[derive(Clone, Debug)]
pub struct ShorteningResult {
    pub f_short: Hom,
    pub applied: Vec<Move>,
    pub certified_radius: usize,
}

/// Applies moves in order.
pub fn replay(f: &Hom, generators: &[ModAut], moves: &[Move]) -> Result<Hom, ShortenError> {
    let mut g = f.clone();
    for m in moves {
        g = match m {
            Move::Aut { index, exponent } => precompose(
                &g,
                generators
                    .get(*index)
                    .ok_or(ShortenError::RankMismatch(*index))?,
                *exponent,
            )?,
            Move::Conj(u) => g.conjugated(u),
        };
    }
    Ok(g)
}

fn precompose(f: &Hom, a: &ModAut, exponent: i64) -> Result<Hom, ShortenError> {
    let images = if exponent >= 0 {
        a.images()
    } else {
        a.inverse_images()
    };
    Ok(f.precompose(f.domain().clone(), images)?)
}

fn step(
    f: &Hom,
    a: &ModAut,
    exponent: i64,
    conjugation: bool,
) -> Result<(Hom, Option<Word>), ShortenError> {
    let g = precompose(f, a, exponent)?;
    if conjugation {
        let (h, u) = optimal_conjugator(&g);
        Ok((h, Some(u)))
    } else {
        Ok((g, None))
    }
}

/// Greedy descent: the first single move that lowers [`hom_key`] is taken,
/// until none does.
pub fn shorten(p: &ShorteningProblem) -> Result<ShorteningResult, ShortenError> {
    let mut applied = Vec::new();
    let mut f = p.f.clone();
    let push_conj = |applied: &mut Vec<Move>, u: Option<Word>| {
        if let Some(u) = u.filter(|u| !u.is_identity()) {
            applied.push(Move::Conj(u));
        }
    };
    if p.conjugation {
        let (g, u) = optimal_conjugator(&f);
        f = g;
        push_conj(&mut applied, Some(u));
    }
    'descent: loop {
        for (index, a) in p.mod_generators.iter().enumerate() {
            for exponent in [1, -1] {
                let (g, u) = step(&f, a, exponent, p.conjugation)?;
                if hom_key(&g) < hom_key(&f) {
                    f = g;
                    applied.push(Move::Aut { index, exponent });
                    push_conj(&mut applied, u);
                    continue 'descent;
                }
            }
        }
        break;
    }
    Ok(ShorteningResult {
        f_short: f,
        applied,
        certified_radius: 1,
    })
}

/// No product of at most `radius` generator moves, followed by conjugation,
/// gives a homomorphism with a smaller [`hom_key`] than `f`.
pub fn certify_local_min(
    f: &Hom,
    generators: &[ModAut],
    radius: usize,
) -> Result<bool, ShortenError> {
    let key = hom_key(f);
    let mut seen: HashSet<Vec<Word>> = HashSet::new();
    seen.insert(f.images().to_vec());
    let mut frontier = vec![f.clone()];
    for _ in 0..radius {
        let mut next = Vec::new();
        for g in &frontier {
            for a in generators {
                for exponent in [1, -1] {
                    let h = precompose(g, a, exponent)?;
                    if !seen.insert(h.images().to_vec()) {
                        continue;
                    }
                    if hom_key(&optimal_conjugation(&h)) < key {
                        return Ok(false);
                    }
                    next.push(h);
                }
            }
        }
        frontier = next;
    }
    Ok(true)
}

/// One twist per edge by the edge group's generator: the side that moves
/// for an amalgam, `t ↦ t·z` for an HNN extension.
pub fn twist_generators(gad: &Gad) -> Result<Vec<ModAut>, ShortenError> {
    let whole = View::whole(gad);
    let mut gens = Vec::new();
    for (e, edge) in gad.edges().iter().enumerate() {
        let side = match whole.cut_at(e) {
            Ok(Cut::Amalgam { .. }) => 1,
            _ => 0,
        };
        gens.push(ModAut::edge_twist(gad, e, &edge.img1[0], side)?);
    }
    Ok(gens)
}

/// `move twist <edge-id> <word> <exponent>` and `move conj <word>` lines.
/// Generators that are not edge twists are written `move aut <index>
/// <exponent>`.
pub fn moves_to_text(
    moves: &[Move],
    generators: &[ModAut],
    domain: &Alphabet,
    target: &Alphabet,
) -> String {
    let mut s = String::new();
    for m in moves {
        match m {
            Move::Aut { index, exponent } => match generators[*index].tag() {
                AutTag::DehnTwist { edge, z, .. } => {
                    writeln!(s, "move twist {edge} {} {exponent}", domain.format(z)).unwrap()
                }
                _ => writeln!(s, "move aut {index} {exponent}").unwrap(),
            },
            Move::Conj(u) => writeln!(s, "move conj {}", target.format(u)).unwrap(),
        }
    }
    s
}

/// Inverse of [`moves_to_text`]; twist lines are matched to the generator
/// with the same edge and word.
pub fn moves_from_text(
    text: &str,
    generators: &[ModAut],
    domain: &Alphabet,
    target: &Alphabet,
) -> Result<Vec<Move>, ShortenError> {
    let mut moves = Vec::new();
    for (no, line) in crate::homs::content_lines(text) {
        let perr = |msg: &str| ShortenError::Parse {
            line: no,
            msg: msg.to_string(),
        };
        let toks: Vec<&str> = line.split_whitespace().collect();
        let exponent = |t: &str| -> Result<i64, ShortenError> {
            match t.parse::<i64>() {
                Ok(e @ (1 | -1)) => Ok(e),
                _ => Err(perr("exponent must be 1 or -1")),
            }
        };
        match toks.as_slice() {
            ["move", "conj", rest @ ..] => {
                let u = target
                    .parse(&rest.join(" "))
                    .map_err(|e| perr(&e.to_string()))?;
                moves.push(Move::Conj(u));
            }
            ["move", "aut", i, e] => {
                let index: usize = i.parse().map_err(|_| perr("bad generator index"))?;
                if index >= generators.len() {
                    return Err(perr("generator index out of range"));
                }
                moves.push(Move::Aut {
                    index,
                    exponent: exponent(e)?,
                });
            }
            ["move", "twist", edge, word @ .., e] if !word.is_empty() => {
                let z = domain
                    .parse(&word.join(" "))
                    .map_err(|e| perr(&e.to_string()))?;
                let index = generators
                    .iter()
                    .position(|a| matches!(a.tag(), AutTag::DehnTwist { edge: id, z: w, .. } if id == edge && *w == z))
                    .ok_or_else(|| perr("no matching twist generator"))?;
                moves.push(Move::Aut {
                    index,
                    exponent: exponent(e)?,
                });
            }
            _ => return Err(perr("expected a move line")),
        }
    }
    Ok(moves)
}

/// Rows indexed by `elements`, columns by `fs`: translation length of
/// `fᵢ(g)` divided by the length of `fᵢ`, or `None` when `fᵢ` is trivial.
pub fn rescaled_length_table(
    fs: &[Hom],
    elements: &[Word],
) -> Result<Vec<Vec<Option<Ratio<u64>>>>, ShortenError> {
    if fs.is_empty() {
        return Err(ShortenError::EmptySequence);
    }
    elements
        .iter()
        .map(|g| {
            fs.iter()
                .map(|f| {
                    let len = f.length() as u64;
                    let t = f.evaluate(g)?.translation_length() as u64;
                    Ok((len > 0).then(|| Ratio::new(t, len)))
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gad::{surface_double, Vertex};
    use crate::homs::Presentation;
    use crate::word::reduced_words_up_to;
    use rand::{Rng, SeedableRng};

    fn f2() -> Alphabet {
        Alphabet::standard(2)
    }

    fn hom(domain: &Presentation, images: &[&str]) -> Hom {
        let images = images.iter().map(|s| f2().parse(s).unwrap()).collect();
        Hom::new(domain.clone(), f2(), images).unwrap()
    }

    /// Least key over all conjugators of length ≤ `r`.
    fn bfs_conjugation_key(f: &Hom, r: usize) -> (usize, usize) {
        reduced_words_up_to(2, r)
            .iter()
            .map(|u| hom_key(&f.conjugated(u)))
            .min()
            .unwrap()
    }

    #[test]
    fn conjugation_examples() {
        let p = Presentation::free(["x", "y"]);
        let f = hom(&p, &["a", "a b a^-1"]);
        let (g, u) = optimal_conjugator(&f);
        assert_eq!(g, hom(&p, &["a", "b"]));
        assert_eq!(u, f2().parse("a").unwrap());
        let id = hom(&p, &["a", "b"]);
        assert_eq!(optimal_conjugation(&id), id);
    }

    #[test]
    fn conjugated_identities_recover_length_one() {
        let p = Presentation::free(["x", "y"]);
        let id = hom(&p, &["a", "b"]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let pool = reduced_words_up_to(2, 4);
        for _ in 0..200 {
            let u = &pool[rng.gen_range(0..pool.len())];
            let g = optimal_conjugation(&id.conjugated(u));
            assert_eq!(g.length(), 1);
            assert_eq!(optimal_conjugation(&g), g);
        }
    }

    #[test]
    fn greedy_conjugation_matches_search() {
        let p = Presentation::free(["x", "y"]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let pool = reduced_words_up_to(2, 3);
        let short = reduced_words_up_to(2, 6);
        for _ in 0..100 {
            let f = Hom::new(
                p.clone(),
                f2(),
                vec![
                    short[rng.gen_range(1..short.len())].clone(),
                    short[rng.gen_range(1..short.len())].clone(),
                ],
            )
            .unwrap();
            let base = optimal_conjugation(&f);
            assert!(base.length() <= bfs_conjugation_key(&f, 3).0);
            for u in &pool {
                assert!(optimal_conjugation(&f.conjugated(u)).length() <= base.length());
            }
        }
    }

    fn double_setup() -> (Gad, Vec<ModAut>, Hom) {
        let gad = surface_double();
        let gens = twist_generators(&gad).unwrap();
        let f0 = hom(&gad.fundamental_presentation(), &["a", "b", "b", "a"]);
        (gad, gens, f0)
    }

    #[test]
    fn shorten_undoes_a_cubed_twist() {
        let (_, gens, f0) = double_setup();
        let perturbed = replay(
            &f0,
            &gens,
            &[Move::Aut {
                index: 0,
                exponent: 3,
            }],
        )
        .unwrap();
        assert!(perturbed.length() > f0.length());
        let p = ShorteningProblem::new(perturbed.clone(), gens.clone(), true).unwrap();
        let r = shorten(&p).unwrap();
        assert_eq!(r.f_short.length(), f0.length());
        assert_eq!(replay(&perturbed, &gens, &r.applied).unwrap(), r.f_short);
        assert!(certify_local_min(&r.f_short, &gens, 2).unwrap());
        let stationary =
            shorten(&ShorteningProblem::new(r.f_short.clone(), gens, true).unwrap()).unwrap();
        assert!(stationary.applied.is_empty());
    }

    #[test]
    fn certification_examples() {
        let (_, gens, f0) = double_setup();
        let once = replay(
            &f0,
            &gens,
            &[Move::Aut {
                index: 0,
                exponent: 1,
            }],
        )
        .unwrap();
        assert!(!certify_local_min(&once, &gens, 1).unwrap());
        assert!(certify_local_min(&once, &gens, 0).unwrap());

        // Partial conjugations of F(a, b) fix the identity up to conjugacy.
        let gad = Gad::new(vec![Vertex::rigid("F", ["a", "b"])], vec![]).unwrap();
        let g = |s: &str| gad.alphabet().parse(s).unwrap();
        let partial = |images: Vec<Word>, inverse: Vec<Word>, label: &str| {
            ModAut::verified(
                &gad,
                images,
                inverse,
                AutTag::Vertex {
                    vertex: "F".into(),
                    label: label.into(),
                },
            )
            .unwrap()
        };
        let gens = vec![
            partial(
                vec![g("a"), g("a b a^-1")],
                vec![g("a"), g("a^-1 b a")],
                "b by a",
            ),
            partial(
                vec![g("b a b^-1"), g("b")],
                vec![g("b^-1 a b"), g("b")],
                "a by b",
            ),
        ];
        let id = hom(&gad.fundamental_presentation(), &["a", "b"]);
        assert!(certify_local_min(&id, &gens, 2).unwrap());
    }

    #[test]
    fn move_text_round_trip() {
        let (gad, gens, _) = double_setup();
        let moves = vec![
            Move::Aut {
                index: 0,
                exponent: -1,
            },
            Move::Conj(f2().parse("a b^-1").unwrap()),
        ];
        let text = moves_to_text(&moves, &gens, gad.alphabet(), &f2());
        assert_eq!(text, "move twist e a b a^-1 b^-1 -1\nmove conj a b^-1\n");
        assert_eq!(
            moves_from_text(&text, &gens, gad.alphabet(), &f2()).unwrap(),
            moves
        );
    }

    #[test]
    fn rescaled_lengths() {
        let p = Presentation::parse(&["x", "t"], &["x t x^-1 t^-1"]).unwrap();
        let one = Alphabet::new(["c"]);
        let fs: Vec<Hom> = (1..=4)
            .map(|k| {
                Hom::new(
                    p.clone(),
                    one.clone(),
                    vec![one.parse("c").unwrap(), one.parse("c").unwrap().pow(k)],
                )
                .unwrap()
            })
            .collect();
        let t = p.alphabet().parse("t").unwrap();
        let x = p.alphabet().parse("x").unwrap();
        let table = rescaled_length_table(&fs, &[t, x]).unwrap();
        assert!(table[0].iter().all(|r| *r == Some(Ratio::from_integer(1))));
        assert_eq!(
            table[1],
            (1..=4).map(|k| Some(Ratio::new(1, k))).collect::<Vec<_>>()
        );
        assert!(rescaled_length_table(&[], &[]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn shorten_never_lengthens_and_replays(word in proptest::collection::vec((0usize..1, proptest::bool::ANY), 0..6)) {
            let (_, gens, f0) = double_setup();
            let moves: Vec<Move> = word.iter().map(|&(i, s)| Move::Aut { index: i, exponent: if s { 1 } else { -1 } }).collect();
            let perturbed = replay(&f0, &gens, &moves).unwrap();
            let r = shorten(&ShorteningProblem::new(perturbed.clone(), gens.clone(), true).unwrap()).unwrap();
            proptest::prop_assert!(hom_key(&r.f_short) <= hom_key(&perturbed));
            proptest::prop_assert_eq!(replay(&perturbed, &gens, &r.applied).unwrap(), r.f_short.clone());
            proptest::prop_assert!(certify_local_min(&r.f_short, &gens, 1).unwrap());
        }
    }
}
