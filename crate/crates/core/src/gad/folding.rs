//! Stallings foldings for finitely generated subgroups of a free group.
//!
//! Every edge carries, besides its letter, a weight in the free group on the
//! subgroup generators. Folding keeps the invariant that the weights along any
//! closed path at the base vertex spell an expression of the path label in
//! the subgroup generators, so membership queries come with a witness.

use crate::word::{Letter, Word};

#[derive(Clone, Debug)]
struct Edge {
    from: usize,
    to: usize,
    /// Positive generator index of the label.
    label: u32,
    weight: Word,
    alive: bool,
}

/// Half-edge view: traversing `edge` forwards or backwards.
#[derive(Clone, Copy, Debug)]
struct Half {
    edge: usize,
    forward: bool,
}

/// Folded core graph of a subgroup `⟨g₁, …, gₖ⟩ ≤ F(rank)`.
#[derive(Clone, Debug)]
pub struct FoldedGraph {
    rank: u32,
    generator_count: u32,
    vertex_alive: Vec<bool>,
    edges: Vec<Edge>,
}

/// Result of a membership query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Membership {
    pub member: bool,
    /// Expression of the queried word in the subgroup generators (a word in a
    /// free group whose rank is the number of generators), when a member.
    pub witness: Option<Word>,
}

const BASE: usize = 0;

impl FoldedGraph {
    pub fn new(rank: u32, generators: &[Word]) -> FoldedGraph {
        let k = generators.len() as u32;
        let mut g = FoldedGraph {
            rank,
            generator_count: k,
            vertex_alive: vec![true],
            edges: Vec::new(),
        };
        for (i, gen) in generators.iter().enumerate() {
            assert_eq!(gen.rank(), rank, "subgroup generator of wrong rank");
            if gen.is_identity() {
                continue;
            }
            let tag = Word::generator(k, i as u32 + 1);
            let n = gen.len();
            let mut prev = BASE;
            for (j, &l) in gen.letters().iter().enumerate() {
                let next = if j + 1 == n {
                    BASE
                } else {
                    g.vertex_alive.push(true);
                    g.vertex_alive.len() - 1
                };
                let weight = if j == 0 {
                    tag.clone()
                } else {
                    Word::identity(k)
                };
                let (from, to, weight) = if l.is_positive() {
                    (prev, next, weight)
                } else {
                    (next, prev, weight.inverse())
                };
                g.edges.push(Edge {
                    from,
                    to,
                    label: l.index(),
                    weight,
                    alive: true,
                });
                prev = next;
            }
        }
        g.fold();
        g
    }

    fn halves_at(&self, v: usize) -> Vec<(i32, Half)> {
        let mut out = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            if !e.alive {
                continue;
            }
            if e.from == v {
                out.push((
                    e.label as i32,
                    Half {
                        edge: i,
                        forward: true,
                    },
                ));
            }
            if e.to == v {
                out.push((
                    -(e.label as i32),
                    Half {
                        edge: i,
                        forward: false,
                    },
                ));
            }
        }
        out
    }

    fn half_end(&self, h: Half) -> usize {
        let e = &self.edges[h.edge];
        if h.forward {
            e.to
        } else {
            e.from
        }
    }

    fn half_weight(&self, h: Half) -> Word {
        let e = &self.edges[h.edge];
        if h.forward {
            e.weight.clone()
        } else {
            e.weight.inverse()
        }
    }

    fn find_fold(&self) -> Option<(Half, Half)> {
        for v in 0..self.vertex_alive.len() {
            if !self.vertex_alive[v] {
                continue;
            }
            let mut hs = self.halves_at(v);
            hs.sort_by_key(|(l, h)| (*l, h.edge));
            for pair in hs.windows(2) {
                if pair[0].0 == pair[1].0 && pair[0].1.edge != pair[1].1.edge {
                    return Some((pair[0].1, pair[1].1));
                }
            }
        }
        None
    }

    fn fold(&mut self) {
        while let Some((h1, h2)) = self.find_fold() {
            let (mut keep, mut drop) = (h1, h2);
            if self.half_end(drop) == BASE && self.half_end(keep) != BASE {
                std::mem::swap(&mut keep, &mut drop);
            }
            let v1 = self.half_end(keep);
            let v2 = self.half_end(drop);
            let w1 = self.half_weight(keep);
            let w2 = self.half_weight(drop);
            self.edges[drop.edge].alive = false;
            if v1 == v2 {
                continue;
            }
            // Re-root everything at v2 onto v1.
            let out_prefix = &w1.inverse() * &w2;
            let in_suffix = &w2.inverse() * &w1;
            for e in self.edges.iter_mut().filter(|e| e.alive) {
                if e.from == v2 {
                    e.weight = &out_prefix * &e.weight;
                    e.from = v1;
                }
                if e.to == v2 {
                    e.weight = &e.weight * &in_suffix;
                    e.to = v1;
                }
            }
            self.vertex_alive[v2] = false;
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_alive.iter().filter(|&&a| a).count()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().filter(|e| e.alive).count()
    }

    /// Rank of the subgroup: `E − V + 1` of the folded (connected) graph.
    pub fn subgroup_rank(&self) -> usize {
        self.edge_count() + 1 - self.vertex_count()
    }

    /// True when no vertex has two half-edges with the same label.
    pub fn is_folded(&self) -> bool {
        self.find_fold().is_none()
    }

    /// Every vertex other than the base has valence at least two.
    pub fn is_core(&self) -> bool {
        (1..self.vertex_alive.len())
            .filter(|&v| self.vertex_alive[v])
            .all(|v| self.halves_at(v).len() >= 2)
    }

    /// Vertices of valence `2·rank`, i.e. with no missing label.
    pub fn full_vertices(&self) -> usize {
        (0..self.vertex_alive.len())
            .filter(|&v| self.vertex_alive[v])
            .filter(|&v| self.halves_at(v).len() == 2 * self.rank as usize)
            .count()
    }

    fn step(&self, v: usize, l: Letter) -> Option<Half> {
        let want = l.index();
        self.edges.iter().enumerate().find_map(|(i, e)| {
            if !e.alive || e.label != want {
                return None;
            }
            if l.is_positive() && e.from == v {
                Some(Half {
                    edge: i,
                    forward: true,
                })
            } else if !l.is_positive() && e.to == v {
                Some(Half {
                    edge: i,
                    forward: false,
                })
            } else {
                None
            }
        })
    }

    pub fn membership(&self, w: &Word) -> Membership {
        assert_eq!(w.rank(), self.rank, "queried word of wrong rank");
        let mut v = BASE;
        let mut witness = Word::identity(self.generator_count);
        for &l in w.letters() {
            match self.step(v, l) {
                Some(h) => {
                    witness = &witness * &self.half_weight(h);
                    v = self.half_end(h);
                }
                None => {
                    return Membership {
                        member: false,
                        witness: None,
                    }
                }
            }
        }
        if v == BASE {
            Membership {
                member: true,
                witness: Some(witness),
            }
        } else {
            Membership {
                member: false,
                witness: None,
            }
        }
    }
}

/// Decides whether `w ∈ ⟨generators⟩` and, if so, expresses it in them.
pub fn stallings_membership(generators: &[Word], w: &Word) -> Membership {
    FoldedGraph::new(w.rank(), generators).membership(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::word::Alphabet;

    fn w(s: &str) -> Word {
        Alphabet::standard(2).parse(s).unwrap()
    }

    #[test]
    fn membership_examples() {
        let gens = [w("a^2"), w("b")];
        let m = stallings_membership(&gens, &w("a^2 b"));
        assert!(m.member);
        let witness = m.witness.unwrap();
        assert_eq!(witness, Word::from_signed(2, &[1, 2]));
        assert_eq!(witness.substitute(&gens, 2), w("a^2 b"));

        assert!(!stallings_membership(&gens, &w("a")).member);
        assert!(stallings_membership(&gens, &Word::identity(2)).member);
    }

    #[test]
    fn witness_reevaluates_after_nontrivial_folds() {
        let gens = [w("a b a^-1"), w("a b^2 a^-1"), w("b a")];
        let g = FoldedGraph::new(2, &gens);
        assert!(g.is_folded());
        for target in [w("a b^3 a^-1"), w("b a b a^-1"), w("a b a^-1 b a b a^-1")] {
            let m = g.membership(&target);
            if m.member {
                assert_eq!(m.witness.unwrap().substitute(&gens, 2), target);
            }
        }
        let m = g.membership(&w("b a a b a^-1"));
        assert!(m.member);
        assert_eq!(m.witness.unwrap().substitute(&gens, 2), w("b a a b a^-1"));
    }

    #[test]
    fn rank_of_redundant_generating_set() {
        let g = FoldedGraph::new(2, &[w("a"), w("a^2"), w("b a b^-1")]);
        assert_eq!(g.subgroup_rank(), 2);
        assert!(g.is_core());
    }
}
