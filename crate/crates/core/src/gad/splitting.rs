//! One-edge splittings and reduced forms.
//!
//! A [`View`] is a connected sub-graph of a [`Gad`]; its fundamental group is
//! the subgroup generated by its vertex groups and stable letters. Cutting a
//! view along one edge gives an amalgam of two smaller views or an HNN
//! extension of one, and the word problem, edge-group membership and reduced
//! forms are computed by recursion on the number of edges.

use super::{Gad, GadError};
use crate::word::Word;

#[derive(Clone, Debug)]
pub struct View<'g> {
    gad: &'g Gad,
    vertices: Vec<usize>,
    edges: Vec<usize>,
}

/// A view cut along one of its edges.
#[derive(Clone, Debug)]
pub enum Cut<'g> {
    /// `sides[0]` contains the edge's `from` vertex.
    Amalgam {
        edge: usize,
        sides: [View<'g>; 2],
    },
    Hnn {
        edge: usize,
        base: View<'g>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Piece {
    /// A syllable in side 0 or 1 of an amalgam, or in the base (side 0) of an
    /// HNN extension.
    Syllable { side: usize, word: Word },
    /// A power `t^{±1}` of the stable letter.
    Stable(i8),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalForm {
    pub pieces: Vec<Piece>,
}

impl NormalForm {
    pub fn syllable_count(&self) -> usize {
        self.pieces
            .iter()
            .filter(|p| matches!(p, Piece::Syllable { .. }))
            .count()
    }

    pub fn stable_count(&self) -> usize {
        self.pieces.len() - self.syllable_count()
    }

    pub fn syllables(&self) -> impl Iterator<Item = (usize, &Word)> {
        self.pieces.iter().filter_map(|p| match p {
            Piece::Syllable { side, word } => Some((*side, word)),
            Piece::Stable(_) => None,
        })
    }

    /// Multiplies the pieces back together.
    pub fn evaluate(&self, rank: u32, stable: Option<u32>) -> Word {
        let mut out = Word::identity(rank);
        for p in &self.pieces {
            let w = match p {
                Piece::Syllable { word, .. } => word.clone(),
                Piece::Stable(e) => Word::generator(rank, stable.expect("HNN form")).pow(*e as i64),
            };
            out = &out * &w;
        }
        out
    }
}

impl<'g> View<'g> {
    pub fn whole(gad: &'g Gad) -> View<'g> {
        View {
            gad,
            vertices: (0..gad.vertices().len()).collect(),
            edges: (0..gad.edges().len()).collect(),
        }
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    pub fn gad(&self) -> &'g Gad {
        self.gad
    }

    /// Global generator indices belonging to this view.
    pub fn letters(&self) -> Vec<u32> {
        let mut out: Vec<u32> = self
            .vertices
            .iter()
            .flat_map(|&v| self.gad.local_range(v))
            .collect();
        out.extend(
            self.edges
                .iter()
                .filter_map(|&e| self.gad.edges()[e].stable),
        );
        out
    }

    pub fn contains_word(&self, w: &Word) -> bool {
        let letters = self.letters();
        w.letters().iter().all(|l| letters.contains(&l.index()))
    }

    fn check(&self, w: &Word) -> Result<(), GadError> {
        if self.contains_word(w) {
            Ok(())
        } else {
            Err(GadError::OutsidePiece(self.gad.alphabet().format(w)))
        }
    }

    /// Default cut: the last edge outside the tree, else the last tree edge.
    pub fn cut(&self) -> Option<Cut<'g>> {
        let edges = self.gad.edges();
        let e = self
            .edges
            .iter()
            .rev()
            .find(|&&e| !edges[e].tree)
            .or_else(|| self.edges.last())
            .copied()?;
        Some(self.cut_at(e).expect("default cut always exists"))
    }

    pub fn cut_at(&self, e: usize) -> Result<Cut<'g>, GadError> {
        let edge = &self.gad.edges()[e];
        if !self.edges.contains(&e) {
            return Err(GadError::NoSuchEdge(edge.id.clone()));
        }
        let rest: Vec<usize> = self.edges.iter().copied().filter(|&x| x != e).collect();
        if !edge.tree {
            let base = View {
                gad: self.gad,
                vertices: self.vertices.clone(),
                edges: rest,
            };
            return Ok(Cut::Hnn { edge: e, base });
        }
        // Component of the `from` endpoint once the edge is removed.
        let mut side0 = vec![edge.from];
        let mut grew = true;
        while grew {
            grew = false;
            for &x in &rest {
                let f = &self.gad.edges()[x];
                for (a, b) in [(f.from, f.to), (f.to, f.from)] {
                    if side0.contains(&a) && !side0.contains(&b) {
                        side0.push(b);
                        grew = true;
                    }
                }
            }
        }
        if side0.contains(&edge.to) {
            return Err(GadError::Unsupported(format!(
                "edge {} does not separate",
                edge.id
            )));
        }
        side0.sort_unstable();
        let side1: Vec<usize> = self
            .vertices
            .iter()
            .copied()
            .filter(|v| !side0.contains(v))
            .collect();
        let part = |vs: &Vec<usize>| {
            let es = rest
                .iter()
                .copied()
                .filter(|&x| vs.contains(&self.gad.edges()[x].from))
                .collect();
            View {
                gad: self.gad,
                vertices: vs.clone(),
                edges: es,
            }
        };
        Ok(Cut::Amalgam {
            edge: e,
            sides: [part(&side0), part(&side1)],
        })
    }

    /// Word problem in this piece.
    pub fn is_trivial(&self, w: &Word) -> Result<bool, GadError> {
        self.check(w)?;
        let Some(cut) = self.cut() else {
            return Ok(self.gad.vertex_trivial(self.vertices[0], w));
        };
        let nf = cut.normal_form(w)?;
        if nf.stable_count() > 0 || nf.syllable_count() > 1 {
            return Ok(false);
        }
        let (side, u) = nf.syllables().next().expect("at least one syllable");
        cut.part(side).is_trivial(u)
    }

    /// Coordinates of `w` in the abelian subgroup of vertex `v` generated by
    /// `basis` (independent), when `w` lies in it.
    pub fn membership(
        &self,
        v: usize,
        basis: &[Word],
        w: &Word,
    ) -> Result<Option<Vec<i64>>, GadError> {
        self.check(w)?;
        let Some(cut) = self.cut() else {
            return Ok(self.gad.vertex_membership(v, basis, w));
        };
        let nf = cut.normal_form(w)?;
        if nf.stable_count() > 0 || nf.syllable_count() > 1 {
            return Ok(None);
        }
        let (side, u) = nf.syllables().next().expect("at least one syllable");
        match &cut {
            Cut::Hnn { base, .. } => base.membership(v, basis, u),
            Cut::Amalgam { sides, .. } => {
                let home = if sides[0].vertices.contains(&v) { 0 } else { 1 };
                if side == home {
                    return sides[home].membership(v, basis, u);
                }
                match cut.edge_coordinates(side, u)? {
                    None => Ok(None),
                    Some(c) => sides[home].membership(v, basis, &cut.edge_element(home, &c)),
                }
            }
        }
    }
}

impl<'g> Cut<'g> {
    pub fn edge(&self) -> usize {
        match self {
            Cut::Amalgam { edge, .. } | Cut::Hnn { edge, .. } => *edge,
        }
    }

    pub fn is_amalgam(&self) -> bool {
        matches!(self, Cut::Amalgam { .. })
    }

    /// The view holding syllables of the given side.
    pub fn part(&self, side: usize) -> &View<'g> {
        match self {
            Cut::Amalgam { sides, .. } => &sides[side],
            Cut::Hnn { base, .. } => base,
        }
    }

    fn gad(&self) -> &'g Gad {
        self.part(0).gad
    }

    /// Coordinates of `w` (in the part for `side`) in the edge group as
    /// embedded on that side.
    pub fn edge_coordinates(&self, side: usize, w: &Word) -> Result<Option<Vec<i64>>, GadError> {
        let edge = &self.gad().edges()[self.edge()];
        self.part(side)
            .membership(edge.endpoint(side), edge.images(side), w)
    }

    /// The edge-group element with coordinates `c`, on the given side.
    pub fn edge_element(&self, side: usize, c: &[i64]) -> Word {
        let edge = &self.gad().edges()[self.edge()];
        let mut out = Word::identity(self.gad().rank());
        for (img, &k) in edge.images(side).iter().zip(c) {
            out = &out * &img.pow(k);
        }
        out
    }

    pub fn normal_form(&self, w: &Word) -> Result<NormalForm, GadError> {
        match self {
            Cut::Amalgam { sides, .. } => self.amalgam_form(sides, w),
            Cut::Hnn { edge, base } => self.hnn_form(*edge, base, w),
        }
    }

    fn amalgam_form(&self, sides: &[View<'g>; 2], w: &Word) -> Result<NormalForm, GadError> {
        let rank = w.rank();
        let l0 = sides[0].letters();
        let l1 = sides[1].letters();
        let mut syl: Vec<(usize, Word)> = Vec::new();
        for &l in w.letters() {
            let side = if l0.contains(&l.index()) {
                0
            } else if l1.contains(&l.index()) {
                1
            } else {
                return Err(GadError::OutsidePiece(self.gad().alphabet().format(w)));
            };
            let letter = Word::reduce(rank, [l]).expect("same rank");
            match syl.last_mut() {
                Some((s, u)) if *s == side => *u = &*u * &letter,
                _ => syl.push((side, letter)),
            }
        }
        if syl.is_empty() {
            syl.push((0, Word::identity(rank)));
        }
        // Pinch syllables lying in the edge group into their neighbours.
        'outer: while syl.len() > 1 {
            for i in 0..syl.len() {
                let (side, ref u) = syl[i];
                if let Some(c) = self.edge_coordinates(side, u)? {
                    let other = 1 - side;
                    let mut merged = self.edge_element(other, &c);
                    let mut lo = i;
                    let mut hi = i + 1;
                    if i > 0 {
                        merged = &syl[i - 1].1 * &merged;
                        lo = i - 1;
                    }
                    if i + 1 < syl.len() {
                        merged = &merged * &syl[i + 1].1;
                        hi = i + 2;
                    }
                    syl.splice(lo..hi, [(other, merged)]);
                    continue 'outer;
                }
            }
            break;
        }
        Ok(NormalForm {
            pieces: syl
                .into_iter()
                .map(|(side, word)| Piece::Syllable { side, word })
                .collect(),
        })
    }

    fn hnn_form(&self, e: usize, base: &View<'g>, w: &Word) -> Result<NormalForm, GadError> {
        let rank = w.rank();
        let t = self.gad().edges()[e]
            .stable
            .expect("HNN edge has a stable letter");
        let letters = base.letters();
        // Alternating base, stable, base, …, base.
        let mut bases: Vec<Word> = vec![Word::identity(rank)];
        let mut stables: Vec<i8> = Vec::new();
        for &l in w.letters() {
            if l.index() == t {
                stables.push(l.sign() as i8);
                bases.push(Word::identity(rank));
            } else if letters.contains(&l.index()) {
                let last = bases.last_mut().unwrap();
                *last = &*last * &Word::reduce(rank, [l]).expect("same rank");
            } else {
                return Err(GadError::OutsidePiece(self.gad().alphabet().format(w)));
            }
        }
        'outer: loop {
            for j in 0..stables.len().saturating_sub(1) {
                let (e1, e2) = (stables[j], stables[j + 1]);
                if e1 != -e2 {
                    continue;
                }
                // t g t⁻¹ with g in the first image, or t⁻¹ g t with g in the second.
                let (from, to) = if e1 > 0 { (0, 1) } else { (1, 0) };
                let g = &bases[j + 1];
                if let Some(c) = self.edge_coordinates(from, g)? {
                    let merged = &(&bases[j] * &self.edge_element(to, &c)) * &bases[j + 2];
                    bases.splice(j..j + 3, [merged]);
                    stables.drain(j..j + 2);
                    continue 'outer;
                }
            }
            break;
        }
        let mut pieces = Vec::new();
        for (i, b) in bases.into_iter().enumerate() {
            pieces.push(Piece::Syllable { side: 0, word: b });
            if let Some(&s) = stables.get(i) {
                pieces.push(Piece::Stable(s));
            }
        }
        Ok(NormalForm { pieces })
    }
}

/// A one-edge splitting of the fundamental group of a [`Gad`].
#[derive(Clone, Debug)]
pub struct Splitting {
    gad: Gad,
    edge: usize,
}

impl Splitting {
    pub fn new(gad: Gad, edge: &str) -> Result<Splitting, GadError> {
        let e = gad
            .edge_index(edge)
            .ok_or_else(|| GadError::NoSuchEdge(edge.to_string()))?;
        View::whole(&gad).cut_at(e)?;
        Ok(Splitting { gad, edge: e })
    }

    pub fn gad(&self) -> &Gad {
        &self.gad
    }

    pub fn edge_index(&self) -> usize {
        self.edge
    }

    pub fn cut(&self) -> Cut<'_> {
        View::whole(&self.gad)
            .cut_at(self.edge)
            .expect("checked on construction")
    }

    pub fn is_amalgam(&self) -> bool {
        self.gad.edges()[self.edge].tree
    }

    pub fn stable_letter(&self) -> Option<u32> {
        self.gad.edges()[self.edge].stable
    }

    /// Generators of one side (the base, for an HNN splitting).
    pub fn side_generators(&self, side: usize) -> Vec<u32> {
        self.cut().part(side).letters()
    }

    pub fn edge_words(&self, side: usize) -> &[Word] {
        self.gad.edges()[self.edge].images(side)
    }

    pub fn normal_form(&self, w: &Word) -> Result<NormalForm, GadError> {
        if w.rank() != self.gad.rank() {
            return Err(GadError::GeneratorMismatch);
        }
        self.cut().normal_form(w)
    }

    /// Syllables of the reduced forms of `xs`, sorted into the two sides. For
    /// an HNN splitting, side 0 collects the syllables at either end of a form
    /// and side 1 those between two stable letters. An element of the edge
    /// group is a single syllable assigned to the side where the edge group is
    /// maximal abelian, preferring side 0.
    pub fn syllables_of(&self, xs: &[Word]) -> Result<(Vec<Word>, Vec<Word>), GadError> {
        let cut = self.cut();
        let mut out: [Vec<Word>; 2] = [Vec::new(), Vec::new()];
        let push = |out: &mut [Vec<Word>; 2], side: usize, w: Word| {
            if !out[side].contains(&w) {
                out[side].push(w);
            }
        };
        for x in xs {
            let nf = self.normal_form(x)?;
            let syl: Vec<(usize, &Word)> = nf.syllables().collect();
            if syl.len() == 1 && nf.stable_count() == 0 {
                let (side, u) = syl[0];
                if let Some(c) = cut.edge_coordinates(side, u)? {
                    let target = if self.gad.edge_maximal_abelian(self.edge, 0)
                        || !self.gad.edge_maximal_abelian(self.edge, 1)
                    {
                        0
                    } else {
                        1
                    };
                    let w = if target == side || !cut.is_amalgam() {
                        u.clone()
                    } else {
                        cut.edge_element(target, &c)
                    };
                    push(&mut out, target, w);
                    continue;
                }
            }
            if cut.is_amalgam() {
                for (side, u) in syl {
                    push(&mut out, side, u.clone());
                }
            } else {
                let n = syl.len();
                for (i, (_, u)) in syl.into_iter().enumerate() {
                    let side = if i == 0 || i + 1 == n { 0 } else { 1 };
                    push(&mut out, side, u.clone());
                }
            }
        }
        let [a, b] = out;
        Ok((a, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gad::{surface_double, z2_hnn};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn double() -> Splitting {
        Splitting::new(surface_double(), "e").unwrap()
    }

    #[test]
    fn double_normal_forms() {
        let s = double();
        let al = s.gad().alphabet().clone();
        let nf = s.normal_form(&al.parse("a c").unwrap()).unwrap();
        assert_eq!(
            nf.pieces,
            vec![
                Piece::Syllable {
                    side: 0,
                    word: al.parse("a").unwrap()
                },
                Piece::Syllable {
                    side: 1,
                    word: al.parse("c").unwrap()
                },
            ]
        );
        let nf = s.normal_form(&al.parse("a b a^-1 b^-1").unwrap()).unwrap();
        assert_eq!(nf.syllable_count(), 1);
        // [a,b][c,d] = ε pinches down to a single trivial syllable.
        let r = al.parse("a b a^-1 b^-1 c d c^-1 d^-1").unwrap();
        assert!(s.gad().is_trivial(&r));
        assert!(!s.gad().is_trivial(&al.parse("a c a^-1 c^-1").unwrap()));
    }

    #[test]
    fn hnn_normal_forms() {
        let s = Splitting::new(z2_hnn(), "e").unwrap();
        let al = s.gad().alphabet().clone();
        let nf = s.normal_form(&al.parse("t a t^-1").unwrap()).unwrap();
        assert_eq!(
            nf.pieces,
            vec![Piece::Syllable {
                side: 0,
                word: al.parse("a").unwrap()
            }]
        );
        assert!(s.gad().is_trivial(&al.parse("t a t^-1 a^-1").unwrap()));
        assert!(!s.gad().is_trivial(&al.parse("t a^2 t^-1 a^-1").unwrap()));
    }

    #[test]
    fn syllables_of_examples() {
        let s = double();
        let al = s.gad().alphabet().clone();
        let (x1, x2) = s.syllables_of(&[al.parse("a c").unwrap()]).unwrap();
        assert_eq!(
            (x1, x2),
            (vec![al.parse("a").unwrap()], vec![al.parse("c").unwrap()])
        );
        let ab = al.parse("a b a^-1 b^-1").unwrap();
        assert_eq!(s.syllables_of(&[ab.clone()]).unwrap(), (vec![ab], vec![]));
        assert_eq!(s.syllables_of(&[]).unwrap(), (vec![], vec![]));
    }

    fn random_word(rng: &mut ChaCha8Rng, rank: u32, len: usize) -> Word {
        let raw: Vec<i32> = (0..len)
            .map(|_| {
                let i = rng.gen_range(1..=rank as i32);
                if rng.gen_bool(0.5) {
                    i
                } else {
                    -i
                }
            })
            .collect();
        Word::from_signed(rank, &raw)
    }

    #[test]
    fn forms_evaluate_back_and_are_stable() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for s in [double(), Splitting::new(z2_hnn(), "e").unwrap()] {
            let rank = s.gad().rank();
            for _ in 0..200 {
                let w = random_word(&mut rng, rank, 12);
                let nf = s.normal_form(&w).unwrap();
                let back = nf.evaluate(rank, s.stable_letter());
                assert!(s.gad().equal(&back, &w));
                let again = s.normal_form(&back).unwrap();
                assert_eq!(again.syllable_count(), nf.syllable_count());
                assert_eq!(again.stable_count(), nf.stable_count());
            }
        }
    }

    #[test]
    fn hnn_word_problem_matches_abelianization() {
        // In ℤ² a word is trivial exactly when its exponent sums vanish.
        let g = z2_hnn();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let w = random_word(&mut rng, 2, 10);
            assert_eq!(
                g.is_trivial(&w),
                w.exponent_vector().iter().all(|&x| x == 0),
                "{w}"
            );
        }
    }
}
