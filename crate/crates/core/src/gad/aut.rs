//! Modular automorphisms as generator substitutions with verified inverses.

use std::fmt::Write as _;

use super::splitting::Splitting;
use super::{Gad, GadError, VertexKind, View};
use crate::homs::Hom;
use crate::linalg;
use crate::word::{Alphabet, Word};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AutTag {
    Identity,
    /// Twist along an edge by `z`. For an amalgam, `side` is the side whose
    /// generators are conjugated; for an HNN extension, side 0 means
    /// `t ↦ t·z` and side 1 means `t ↦ z·t`.
    DehnTwist {
        edge: String,
        z: Word,
        side: usize,
    },
    GeneralizedDehnTwist {
        vertex: String,
        matrix: Vec<Vec<i64>>,
    },
    Inner(Word),
    /// An automorphism of a single vertex group that fixes its boundary.
    Vertex {
        vertex: String,
        label: String,
    },
    /// Applied right to left: `Composite([α, β])` is `α ∘ β`.
    Composite(Vec<AutTag>),
    Inverse(Box<AutTag>),
}

impl AutTag {
    fn describe(&self, al: &Alphabet) -> String {
        match self {
            AutTag::Identity => "identity".into(),
            AutTag::DehnTwist { edge, z, side } => {
                format!("dehn-twist edge={edge} z={} side={side}", al.format(z))
            }
            AutTag::GeneralizedDehnTwist { vertex, matrix } => {
                let m: Vec<String> = matrix
                    .iter()
                    .map(|r| r.iter().map(i64::to_string).collect::<Vec<_>>().join(" "))
                    .collect();
                format!(
                    "generalized-dehn-twist vertex={vertex} matrix={}",
                    m.join(";")
                )
            }
            AutTag::Inner(u) => format!("inner {}", al.format(u)),
            AutTag::Vertex { vertex, label } => format!("vertex {vertex} {label}"),
            AutTag::Composite(parts) => {
                let p: Vec<String> = parts
                    .iter()
                    .map(|t| format!("({})", t.describe(al)))
                    .collect();
                format!("composite {}", p.join(" "))
            }
            AutTag::Inverse(t) => format!("inverse ({})", t.describe(al)),
        }
    }
}

/// An automorphism of the fundamental group of a [`Gad`], stored as images of
/// the generators together with the images under its inverse.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModAut {
    images: Vec<Word>,
    inverse: Vec<Word>,
    tag: AutTag,
}

impl ModAut {
    /// Checks that `images` define an endomorphism of the group, that
    /// `inverse` does too, and that the two compose to the identity both ways.
    pub fn verified(
        gad: &Gad,
        images: Vec<Word>,
        inverse: Vec<Word>,
        tag: AutTag,
    ) -> Result<ModAut, GadError> {
        let rank = gad.rank();
        if images.len() != rank as usize || inverse.len() != rank as usize {
            return Err(GadError::GeneratorMismatch);
        }
        let a = ModAut {
            images,
            inverse,
            tag,
        };
        let relators = gad.fundamental_presentation().relators().to_vec();
        for r in &relators {
            if !gad.is_trivial(&a.apply(r)) || !gad.is_trivial(&a.apply_inverse(r)) {
                return Err(GadError::Unsupported(format!(
                    "substitution does not preserve relator {}",
                    gad.alphabet().format(r)
                )));
            }
        }
        for i in 1..=rank {
            let g = gad.generator(i);
            if !gad.equal(&a.apply(&a.apply_inverse(&g)), &g)
                || !gad.equal(&a.apply_inverse(&a.apply(&g)), &g)
            {
                return Err(GadError::Unsupported(
                    "substitutions are not mutually inverse".into(),
                ));
            }
        }
        Ok(a)
    }

    pub fn identity(gad: &Gad) -> ModAut {
        let gens: Vec<Word> = (1..=gad.rank()).map(|i| gad.generator(i)).collect();
        ModAut {
            images: gens.clone(),
            inverse: gens,
            tag: AutTag::Identity,
        }
    }

    /// `g ↦ u g u⁻¹`.
    pub fn inner(gad: &Gad, u: &Word) -> Result<ModAut, GadError> {
        if u.rank() != gad.rank() {
            return Err(GadError::GeneratorMismatch);
        }
        let gens = (1..=gad.rank()).map(|i| gad.generator(i));
        let images = gens.clone().map(|g| g.conjugate_by(u)).collect();
        let inverse = gens.map(|g| g.conjugate_by(&u.inverse())).collect();
        ModAut::verified(gad, images, inverse, AutTag::Inner(u.clone()))
    }

    pub fn images(&self) -> &[Word] {
        &self.images
    }

    pub fn inverse_images(&self) -> &[Word] {
        &self.inverse
    }

    pub fn tag(&self) -> &AutTag {
        &self.tag
    }

    pub fn rank(&self) -> u32 {
        self.images.len() as u32
    }

    pub fn apply(&self, w: &Word) -> Word {
        w.substitute(&self.images, self.rank())
    }

    pub fn apply_inverse(&self, w: &Word) -> Word {
        w.substitute(&self.inverse, self.rank())
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &ModAut) -> ModAut {
        assert_eq!(
            self.rank(),
            other.rank(),
            "automorphisms of different groups"
        );
        let images = other.images.iter().map(|w| self.apply(w)).collect();
        let inverse = self
            .inverse
            .iter()
            .map(|w| other.apply_inverse(w))
            .collect();
        let mut parts = Vec::new();
        for t in [&self.tag, &other.tag] {
            match t {
                AutTag::Identity => {}
                AutTag::Composite(ps) => parts.extend(ps.iter().cloned()),
                t => parts.push(t.clone()),
            }
        }
        let tag = match parts.len() {
            0 => AutTag::Identity,
            1 => parts.pop().unwrap(),
            _ => AutTag::Composite(parts),
        };
        ModAut {
            images,
            inverse,
            tag,
        }
    }

    pub fn inverse(&self) -> ModAut {
        let tag = match &self.tag {
            AutTag::Identity => AutTag::Identity,
            AutTag::Inverse(t) => (**t).clone(),
            t => AutTag::Inverse(Box::new(t.clone())),
        };
        ModAut {
            images: self.inverse.clone(),
            inverse: self.images.clone(),
            tag,
        }
    }

    pub fn pow(&self, k: i64) -> ModAut {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut out = ModAut {
            images: self.identity_images(),
            inverse: self.identity_images(),
            tag: AutTag::Identity,
        };
        for _ in 0..k.unsigned_abs() {
            out = out.compose(&base);
        }
        out
    }

    fn identity_images(&self) -> Vec<Word> {
        (1..=self.rank())
            .map(|i| Word::generator(self.rank(), i))
            .collect()
    }

    /// Whether the two automorphisms agree on generators as group elements.
    pub fn agrees_with(&self, other: &ModAut, gad: &Gad) -> bool {
        self.images
            .iter()
            .zip(&other.images)
            .all(|(x, y)| gad.equal(x, y))
    }

    /// `aut <gen> <word>` lines preceded by a tag comment.
    pub fn to_text(&self, al: &Alphabet) -> String {
        let mut s = format!("# tag {}\n", self.tag.describe(al));
        for (i, w) in self.images.iter().enumerate() {
            writeln!(s, "aut {} {}", al.name(i as u32 + 1), al.format(w)).unwrap();
        }
        s
    }

    pub fn dehn_twist(s: &Splitting, z: &Word, side: usize) -> Result<ModAut, GadError> {
        ModAut::edge_twist(s.gad(), s.edge_index(), z, side)
    }

    /// Twist along any edge. For a tree edge, the vertex groups in the
    /// component of the tree (minus the edge) containing the endpoint on
    /// `side` are conjugated by `z`, and stable letters crossing into that
    /// component are adjusted so every edge relation still holds.
    pub fn edge_twist(gad: &Gad, e: usize, z: &Word, side: usize) -> Result<ModAut, GadError> {
        if z.rank() != gad.rank() || side > 1 || e >= gad.edges().len() {
            return Err(GadError::GeneratorMismatch);
        }
        let edge = &gad.edges()[e];
        let centralizes = |imgs: &[Word]| imgs.iter().all(|c| gad.is_trivial(&z.commutator(c)));
        let gens: Vec<Word> = (1..=gad.rank()).map(|i| gad.generator(i)).collect();
        let mut images = gens.clone();
        let mut inverse = gens.clone();
        let zi = z.inverse();
        match edge.stable {
            None => {
                if !centralizes(&edge.img1) {
                    return Err(GadError::NotCentralizing(gad.alphabet().format(z)));
                }
                let comp = tree_component(gad, e, edge.endpoint(side));
                for &v in &comp {
                    for i in gad.local_range(v) {
                        let g = &gens[i as usize - 1];
                        images[i as usize - 1] = g.conjugate_by(z);
                        inverse[i as usize - 1] = g.conjugate_by(&zi);
                    }
                }
                for f in gad.edges() {
                    let Some(t) = f.stable else { continue };
                    let tw = &gens[t as usize - 1];
                    let (img, inv) = match (comp.contains(&f.from), comp.contains(&f.to)) {
                        (true, true) => (tw.conjugate_by(z), tw.conjugate_by(&zi)),
                        (true, false) => (tw * &zi, tw * z),
                        (false, true) => (z * tw, &zi * tw),
                        (false, false) => continue,
                    };
                    images[t as usize - 1] = img;
                    inverse[t as usize - 1] = inv;
                }
            }
            Some(t) => {
                if !centralizes(edge.images(side)) {
                    return Err(GadError::NotCentralizing(gad.alphabet().format(z)));
                }
                let tw = &gens[t as usize - 1];
                let (img, inv) = if side == 0 {
                    (tw * z, tw * &zi)
                } else {
                    (z * tw, &zi * tw)
                };
                images[t as usize - 1] = img;
                inverse[t as usize - 1] = inv;
            }
        }
        let tag = AutTag::DehnTwist {
            edge: edge.id.clone(),
            z: z.clone(),
            side,
        };
        ModAut::verified(gad, images, inverse, tag)
    }

    /// Acts on an abelian vertex by `v ↦ v·M` on exponent row vectors, so
    /// generator `aᵢ` goes to the element with exponents given by row `i`.
    pub fn generalized_dehn_twist(
        gad: &Gad,
        vertex: &str,
        m: &[Vec<i64>],
    ) -> Result<ModAut, GadError> {
        let v = gad
            .vertex_index(vertex)
            .ok_or_else(|| GadError::NoSuchVertex(vertex.to_string()))?;
        let VertexKind::Abelian { peripheral } = &gad.vertices()[v].kind else {
            return Err(GadError::Unsupported(format!(
                "vertex {vertex} is not abelian"
            )));
        };
        let n = gad.vertices()[v].gens.len();
        if m.len() != n || m.iter().any(|r| r.len() != n) {
            return Err(GadError::GeneratorMismatch);
        }
        let det = linalg::determinant(m);
        let Some(inv) = linalg::unimodular_inverse(m) else {
            return Err(GadError::NotUnimodular(det));
        };
        for p in fixed_lattice(gad, v, peripheral) {
            if linalg::vec_mat(&p, m) != p {
                return Err(GadError::PeripheralMoved(p));
            }
        }
        let mut images: Vec<Word> = (1..=gad.rank()).map(|i| gad.generator(i)).collect();
        let mut inverse = images.clone();
        for (k, i) in gad.local_range(v).enumerate() {
            images[i as usize - 1] = gad.local_element(v, &m[k]);
            inverse[i as usize - 1] = gad.local_element(v, &inv[k]);
        }
        let tag = AutTag::GeneralizedDehnTwist {
            vertex: vertex.to_string(),
            matrix: m.to_vec(),
        };
        ModAut::verified(gad, images, inverse, tag)
    }
}

/// Vertices reachable from `start` along tree edges other than `e`.
fn tree_component(gad: &Gad, e: usize, start: usize) -> Vec<usize> {
    let mut comp = vec![start];
    let mut grew = true;
    while grew {
        grew = false;
        for (i, f) in gad.edges().iter().enumerate() {
            if i == e || !f.tree {
                continue;
            }
            for (a, b) in [(f.from, f.to), (f.to, f.from)] {
                if comp.contains(&a) && !comp.contains(&b) {
                    comp.push(b);
                    grew = true;
                }
            }
        }
    }
    comp
}

/// Peripheral vectors of an abelian vertex together with the exponent
/// vectors of the edge groups attached to it; automorphisms of the vertex
/// that extend to the whole group must fix all of them.
pub fn fixed_lattice(gad: &Gad, v: usize, peripheral: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let mut out: Vec<Vec<i64>> = peripheral.to_vec();
    for e in gad.edges() {
        for side in 0..2 {
            if e.endpoint(side) == v {
                for w in e.images(side) {
                    let p = gad.local_vector(v, w);
                    if !out.contains(&p) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

/// Something a modular automorphism acts on.
pub trait AutTarget: Sized {
    fn apply_aut(&self, a: &ModAut) -> Result<Self, GadError>;
}

impl AutTarget for Word {
    fn apply_aut(&self, a: &ModAut) -> Result<Word, GadError> {
        if self.rank() != a.rank() {
            return Err(GadError::GeneratorMismatch);
        }
        Ok(a.apply(self))
    }
}

impl AutTarget for Hom {
    /// Precomposition `f ∘ α`.
    fn apply_aut(&self, a: &ModAut) -> Result<Hom, GadError> {
        if self.domain().rank() != a.rank() {
            return Err(GadError::GeneratorMismatch);
        }
        Ok(self.precompose(self.domain().clone(), a.images())?)
    }
}

pub fn apply_aut<T: AutTarget>(a: &ModAut, target: &T) -> Result<T, GadError> {
    target.apply_aut(a)
}

impl View<'_> {
    /// Whether `x` and `y` commute in this piece.
    pub fn commute(&self, x: &Word, y: &Word) -> Result<bool, GadError> {
        self.is_trivial(&x.commutator(y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gad::{surface_double, z2_hnn, EdgeSpec, Vertex};
    use crate::homs::{Hom, Presentation};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn parse(g: &Gad, s: &str) -> Word {
        g.alphabet().parse(s).unwrap()
    }

    #[test]
    fn z2_twist() {
        let s = Splitting::new(z2_hnn(), "e").unwrap();
        let g = s.gad().clone();
        let d = ModAut::dehn_twist(&s, &parse(&g, "a"), 0).unwrap();
        assert_eq!(d.images(), [parse(&g, "a"), parse(&g, "t a")]);
        assert_eq!(apply_aut(&d, &parse(&g, "t")).unwrap(), parse(&g, "t a"));
        assert!(ModAut::dehn_twist(&s, &parse(&g, "t"), 0).is_err());
    }

    #[test]
    fn double_twist() {
        let s = Splitting::new(surface_double(), "e").unwrap();
        let g = s.gad().clone();
        let z = parse(&g, "a b a^-1 b^-1");
        let d = ModAut::dehn_twist(&s, &z, 1).unwrap();
        assert_eq!(d.images()[0], parse(&g, "a"));
        assert_eq!(d.images()[1], parse(&g, "b"));
        assert_eq!(d.images()[2], parse(&g, "c").conjugate_by(&z));
        assert_eq!(d.images()[3], parse(&g, "d").conjugate_by(&z));
        assert!(matches!(
            ModAut::dehn_twist(&s, &parse(&g, "a"), 1),
            Err(GadError::NotCentralizing(_))
        ));
    }

    #[test]
    fn twist_powers_match_power_twists() {
        for (s, z, side) in [
            (Splitting::new(z2_hnn(), "e").unwrap(), "a", 0),
            (
                Splitting::new(surface_double(), "e").unwrap(),
                "a b a^-1 b^-1",
                1,
            ),
        ] {
            let g = s.gad().clone();
            let z = parse(&g, z);
            let d = ModAut::dehn_twist(&s, &z, side).unwrap();
            for k in 0..=5 {
                let dk = ModAut::dehn_twist(&s, &z.pow(k), side).unwrap();
                assert!(d.pow(k).agrees_with(&dk, &g));
            }
        }
    }

    #[test]
    fn twist_and_inverse_compose_to_identity() {
        let s = Splitting::new(surface_double(), "e").unwrap();
        let g = s.gad().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let z = parse(&g, "a b a^-1 b^-1");
        for _ in 0..50 {
            let k = rng.gen_range(-6..=6);
            let side = rng.gen_range(0..2);
            let d = ModAut::dehn_twist(&s, &z.pow(k), side).unwrap();
            let back = ModAut::dehn_twist(&s, &z.pow(-k), side).unwrap();
            assert!(d.compose(&back).agrees_with(&ModAut::identity(&g), &g));
        }
    }

    #[test]
    fn twist_along_a_tree_edge_adjusts_crossing_stable_letters() {
        // A path A - B - C closed up by a loop edge from C back to A.
        let g = Gad::new(
            vec![
                Vertex::rigid("A", ["a", "b"]),
                Vertex::rigid("B", ["c", "d"]),
                Vertex::rigid("C", ["x", "y"]),
            ],
            vec![
                EdgeSpec::tree("e", "A", "B", ["a"], ["c"]),
                EdgeSpec::tree("f", "B", "C", ["d"], ["x"]),
                EdgeSpec::loop_edge("h", "C", "A", ["y"], ["b"], "t"),
            ],
        )
        .unwrap();
        for side in 0..2 {
            let z = if side == 0 {
                parse(&g, "a")
            } else {
                parse(&g, "c")
            };
            let d = ModAut::edge_twist(&g, 0, &z, side).unwrap();
            assert!(d
                .compose(&d.inverse())
                .agrees_with(&ModAut::identity(&g), &g));
        }
        assert!(Splitting::new(g, "e").is_err());
    }

    #[test]
    fn generalized_twists() {
        let g = Gad::new(
            vec![Vertex::abelian("Z", ["a1", "a2"], vec![vec![1, 0]])],
            vec![],
        )
        .unwrap();
        let id = ModAut::generalized_dehn_twist(&g, "Z", &[vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(id.images(), ModAut::identity(&g).images());
        let m = ModAut::generalized_dehn_twist(&g, "Z", &[vec![1, 0], vec![1, 1]]).unwrap();
        assert_eq!(m.images()[1], parse(&g, "a1 a2"));
        assert_eq!(
            ModAut::generalized_dehn_twist(&g, "Z", &[vec![2, 0], vec![0, 1]]),
            Err(GadError::NotUnimodular(2))
        );
        assert_eq!(
            ModAut::generalized_dehn_twist(&g, "Z", &[vec![1, 1], vec![0, 1]]),
            Err(GadError::PeripheralMoved(vec![1, 0]))
        );
    }

    #[test]
    fn twists_in_a_graph_with_an_abelian_vertex() {
        let g = Gad::new(
            vec![
                Vertex::rigid("F", ["a", "b"]),
                Vertex::abelian("Z", ["u", "v"], vec![]),
            ],
            vec![EdgeSpec::tree("e", "F", "Z", ["a b a^-1 b^-1"], ["u"])],
        )
        .unwrap();
        let m = ModAut::generalized_dehn_twist(&g, "Z", &[vec![1, 0], vec![3, 1]]).unwrap();
        assert_eq!(m.images()[3], parse(&g, "u^3 v"));
        assert!(matches!(
            ModAut::generalized_dehn_twist(&g, "Z", &[vec![1, 1], vec![0, 1]]),
            Err(GadError::PeripheralMoved(_))
        ));
    }

    #[test]
    fn application_is_functorial() {
        let s = Splitting::new(surface_double(), "e").unwrap();
        let g = s.gad().clone();
        let z = parse(&g, "a b a^-1 b^-1");
        let gens = [
            ModAut::dehn_twist(&s, &z, 1).unwrap(),
            ModAut::dehn_twist(&s, &z.inverse(), 0).unwrap(),
            ModAut::inner(&g, &parse(&g, "a")).unwrap(),
            ModAut::inner(&g, &parse(&g, "d^-1")).unwrap(),
        ];
        let f = Hom::new(
            Presentation::new(
                g.alphabet().names().to_vec(),
                g.fundamental_presentation().relators().to_vec(),
            )
            .unwrap(),
            Alphabet::standard(2),
            ["a", "b", "b", "a"]
                .iter()
                .map(|s| Alphabet::standard(2).parse(s).unwrap())
                .collect(),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let a = &gens[rng.gen_range(0..gens.len())];
            let b = &gens[rng.gen_range(0..gens.len())];
            let raw: Vec<i32> = (0..8)
                .map(|_| rng.gen_range(1..=4) * if rng.gen_bool(0.5) { 1 } else { -1 })
                .collect();
            let w = Word::from_signed(4, &raw);
            let ab = a.compose(b);
            assert_eq!(apply_aut(&ab, &w).unwrap(), a.apply(&b.apply(&w)));
            let lhs = apply_aut(&ab, &f).unwrap();
            let rhs = apply_aut(b, &apply_aut(a, &f).unwrap()).unwrap();
            assert_eq!(lhs.images(), rhs.images());
        }
        let id = ModAut::identity(&g);
        assert_eq!(apply_aut(&id, &f).unwrap(), f);
        assert!(id
            .to_text(g.alphabet())
            .starts_with("# tag identity\naut a a\n"));
    }
}
