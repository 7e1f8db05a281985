//! Graphs of groups whose vertex groups are free, free abelian, or
//! fundamental groups of surfaces with boundary, glued along free abelian
//! edge groups.
//!
//! All words live in one global free group: the vertex generators in vertex
//! order, followed by one stable letter per edge outside the spanning tree.

pub mod aut;
pub mod folding;
pub mod splitting;

use std::collections::HashSet;
use std::fmt::Write as _;
use std::ops::Range;

use thiserror::Error;

use crate::homs::{HomError, Presentation};
use crate::linalg;
use crate::word::{Alphabet, Word, WordError};

pub use aut::{apply_aut, AutTag, AutTarget, ModAut};
pub use folding::{stallings_membership, FoldedGraph, Membership};
pub use splitting::{NormalForm, Piece, Splitting, View};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum GadError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Hom(#[from] HomError),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("vertex {vertex}: {msg}")]
    Vertex { vertex: String, msg: String },
    #[error("edge {edge}: {msg}")]
    Edge { edge: String, msg: String },
    #[error("graph is disconnected")]
    Disconnected,
    #[error("spanning tree: {0}")]
    Tree(String),
    #[error("{0} does not centralize the edge group")]
    NotCentralizing(String),
    #[error("matrix has determinant {0}, not ±1")]
    NotUnimodular(i128),
    #[error("matrix moves peripheral vector {0:?}")]
    PeripheralMoved(Vec<i64>),
    #[error("generator sets do not match")]
    GeneratorMismatch,
    #[error("no edge {0}")]
    NoSuchEdge(String),
    #[error("no vertex {0}")]
    NoSuchVertex(String),
    #[error("word uses generators outside the group piece: {0}")]
    OutsidePiece(String),
    #[error("{0}")]
    Unsupported(String),
}

fn perr(line: usize, msg: impl Into<String>) -> GadError {
    GadError::Parse {
        line,
        msg: msg.into(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VertexKind {
    /// A free group on the listed generators.
    Rigid,
    /// Free abelian on the listed generators, with a peripheral sublattice
    /// given by integer vectors.
    Abelian { peripheral: Vec<Vec<i64>> },
    /// A compact surface with boundary. Generators are `a₁ b₁ … a_g b_g`
    /// (orientable) or `c₁ … c_g` (non-orientable), then `d₁ … d_b`.
    Qh {
        genus: u32,
        orientable: bool,
        boundary: u32,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vertex {
    pub id: String,
    pub kind: VertexKind,
    pub gens: Vec<String>,
}

impl Vertex {
    pub fn rigid<S: Into<String>>(id: &str, gens: impl IntoIterator<Item = S>) -> Vertex {
        Vertex {
            id: id.into(),
            kind: VertexKind::Rigid,
            gens: gens.into_iter().map(Into::into).collect(),
        }
    }

    pub fn abelian<S: Into<String>>(
        id: &str,
        gens: impl IntoIterator<Item = S>,
        peripheral: Vec<Vec<i64>>,
    ) -> Vertex {
        Vertex {
            id: id.into(),
            kind: VertexKind::Abelian { peripheral },
            gens: gens.into_iter().map(Into::into).collect(),
        }
    }

    /// Surface vertex with standard generator names.
    pub fn qh(id: &str, genus: u32, orientable: bool, boundary: u32) -> Vertex {
        let mut gens = Vec::new();
        if orientable {
            for i in 1..=genus {
                gens.push(format!("a{i}"));
                gens.push(format!("b{i}"));
            }
        } else {
            gens.extend((1..=genus).map(|i| format!("c{i}")));
        }
        gens.extend((1..=boundary).map(|i| format!("d{i}")));
        Vertex {
            id: id.into(),
            kind: VertexKind::Qh {
                genus,
                orientable,
                boundary,
            },
            gens,
        }
    }

    pub fn with_gens<S: Into<String>>(mut self, gens: impl IntoIterator<Item = S>) -> Vertex {
        self.gens = gens.into_iter().map(Into::into).collect();
        self
    }

    pub fn euler_characteristic(&self) -> Option<i64> {
        match self.kind {
            VertexKind::Qh {
                genus,
                orientable,
                boundary,
            } => Some(if orientable {
                2 - 2 * genus as i64 - boundary as i64
            } else {
                2 - genus as i64 - boundary as i64
            }),
            _ => None,
        }
    }

    fn expected_gens(&self) -> Option<usize> {
        match self.kind {
            VertexKind::Qh {
                genus,
                orientable,
                boundary,
            } => Some(if orientable { 2 * genus } else { genus } as usize + boundary as usize),
            _ => None,
        }
    }
}

/// Edge description with images written in generator names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeSpec {
    pub id: String,
    pub from: String,
    pub to: String,
    pub img1: Vec<String>,
    pub img2: Vec<String>,
    pub tree: bool,
    pub stable: Option<String>,
}

impl EdgeSpec {
    pub fn tree<S: Into<String>>(
        id: &str,
        from: &str,
        to: &str,
        img1: impl IntoIterator<Item = S>,
        img2: impl IntoIterator<Item = S>,
    ) -> EdgeSpec {
        EdgeSpec {
            id: id.into(),
            from: from.into(),
            to: to.into(),
            img1: img1.into_iter().map(Into::into).collect(),
            img2: img2.into_iter().map(Into::into).collect(),
            tree: true,
            stable: None,
        }
    }

    pub fn loop_edge<S: Into<String>>(
        id: &str,
        from: &str,
        to: &str,
        img1: impl IntoIterator<Item = S>,
        img2: impl IntoIterator<Item = S>,
        stable: &str,
    ) -> EdgeSpec {
        EdgeSpec {
            tree: false,
            stable: Some(stable.into()),
            ..EdgeSpec::tree(id, from, to, img1, img2)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub id: String,
    pub from: usize,
    pub to: usize,
    /// Images of the edge-group generators in the `from` vertex group.
    pub img1: Vec<Word>,
    /// Images in the `to` vertex group.
    pub img2: Vec<Word>,
    pub tree: bool,
    /// Global index of the stable letter, for edges outside the tree.
    pub stable: Option<u32>,
}

impl Edge {
    pub fn rank(&self) -> usize {
        self.img1.len()
    }

    pub fn images(&self, side: usize) -> &[Word] {
        if side == 0 {
            &self.img1
        } else {
            &self.img2
        }
    }

    pub fn endpoint(&self, side: usize) -> usize {
        if side == 0 {
            self.from
        } else {
            self.to
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gad {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    alphabet: Alphabet,
    offsets: Vec<u32>,
}

impl Gad {
    pub fn new(vertices: Vec<Vertex>, edges: Vec<EdgeSpec>) -> Result<Gad, GadError> {
        let mut names: Vec<String> = Vec::new();
        let mut offsets = Vec::new();
        for v in &vertices {
            offsets.push(names.len() as u32);
            names.extend(v.gens.iter().cloned());
        }
        names.extend(edges.iter().filter_map(|e| e.stable.clone()));
        let mut seen = HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(GadError::Hom(HomError::DuplicateGenerator(n.clone())));
            }
        }
        let alphabet = Alphabet::new(names);
        let vid = |id: &str| {
            vertices
                .iter()
                .position(|v| v.id == id)
                .ok_or_else(|| GadError::NoSuchVertex(id.to_string()))
        };
        let mut built = Vec::new();
        for e in &edges {
            let parse = |ws: &[String]| -> Result<Vec<Word>, GadError> {
                ws.iter()
                    .map(|w| alphabet.parse(w).map_err(GadError::from))
                    .collect()
            };
            let stable = match (&e.stable, e.tree) {
                (None, true) => None,
                (Some(s), false) => alphabet.index_of(s),
                _ => {
                    return Err(GadError::Edge {
                        edge: e.id.clone(),
                        msg: "edges outside the tree need exactly one stable letter".into(),
                    })
                }
            };
            built.push(Edge {
                id: e.id.clone(),
                from: vid(&e.from)?,
                to: vid(&e.to)?,
                img1: parse(&e.img1)?,
                img2: parse(&e.img2)?,
                tree: e.tree,
                stable,
            });
        }
        let g = Gad {
            vertices,
            edges: built,
            alphabet,
            offsets,
        };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<(), GadError> {
        let verr = |v: &Vertex, msg: &str| GadError::Vertex {
            vertex: v.id.clone(),
            msg: msg.into(),
        };
        if self.vertices.is_empty() {
            return Err(GadError::Disconnected);
        }
        for v in &self.vertices {
            match &v.kind {
                VertexKind::Rigid => {}
                VertexKind::Abelian { peripheral } => {
                    for p in peripheral {
                        if p.len() != v.gens.len() {
                            return Err(verr(v, "peripheral vector has wrong length"));
                        }
                        if p.iter().all(|&x| x == 0) {
                            return Err(verr(v, "peripheral vector is zero"));
                        }
                    }
                }
                VertexKind::Qh { boundary, .. } => {
                    if v.expected_gens() != Some(v.gens.len()) {
                        return Err(verr(v, "generator count does not match the surface type"));
                    }
                    if *boundary == 0 {
                        return Err(verr(v, "surface must have boundary"));
                    }
                    if v.euler_characteristic().unwrap() > -1 {
                        return Err(verr(v, "surface must have Euler characteristic at most -1"));
                    }
                }
            }
        }
        for e in &self.edges {
            let eerr = |msg: &str| GadError::Edge {
                edge: e.id.clone(),
                msg: msg.into(),
            };
            if e.img1.is_empty() || e.img1.len() != e.img2.len() {
                return Err(eerr(
                    "edge group rank must be positive and equal on both sides",
                ));
            }
            for side in 0..2 {
                let v = e.endpoint(side);
                let range = self.local_range(v);
                for w in e.images(side) {
                    if w.letters().iter().any(|l| !range.contains(&l.index())) {
                        return Err(eerr("image uses letters outside its endpoint vertex"));
                    }
                }
                match &self.vertices[v].kind {
                    VertexKind::Abelian { .. } => {
                        let vecs: Vec<Vec<i64>> = e
                            .images(side)
                            .iter()
                            .map(|w| self.local_vector(v, w))
                            .collect();
                        if linalg::rank(&vecs) != vecs.len() {
                            return Err(eerr("edge images are not independent"));
                        }
                    }
                    _ => {
                        if e.rank() != 1 {
                            return Err(eerr("edge groups into free vertex groups must be cyclic"));
                        }
                        if self.free_model(v, &e.images(side)[0]).is_identity() {
                            return Err(eerr("edge image is trivial"));
                        }
                    }
                }
            }
        }
        // Tree edges must form a spanning tree.
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut Vec<usize>, x: usize) -> usize {
            let mut x = x;
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut tree_edges = 0;
        for e in self.edges.iter().filter(|e| e.tree) {
            let (a, b) = (find(&mut parent, e.from), find(&mut parent, e.to));
            if a == b {
                return Err(GadError::Tree(format!("tree edge {} closes a cycle", e.id)));
            }
            parent[a] = b;
            tree_edges += 1;
        }
        if tree_edges + 1 != n {
            let mut all = parent.clone();
            for e in &self.edges {
                let (a, b) = (find(&mut all, e.from), find(&mut all, e.to));
                all[a] = b;
            }
            let root = find(&mut all, 0);
            if (0..n).any(|v| find(&mut all, v) != root) {
                return Err(GadError::Disconnected);
            }
            return Err(GadError::Tree("tree edges do not span the graph".into()));
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn rank(&self) -> u32 {
        self.alphabet.rank()
    }

    pub fn vertex_index(&self, id: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.id == id)
    }

    pub fn edge_index(&self, id: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.id == id)
    }

    /// Global generator indices (1-based) of a vertex group.
    pub fn local_range(&self, v: usize) -> Range<u32> {
        let start = self.offsets[v] + 1;
        start..start + self.vertices[v].gens.len() as u32
    }

    pub fn generator(&self, index: u32) -> Word {
        Word::generator(self.rank(), index)
    }

    /// Exponent vector of `w` over the generators of vertex `v`.
    pub fn local_vector(&self, v: usize, w: &Word) -> Vec<i64> {
        let range = self.local_range(v);
        let full = w.exponent_vector();
        range.map(|i| full[i as usize - 1]).collect()
    }

    /// The element `Π aᵢ^{vᵢ}` of an abelian vertex.
    pub fn local_element(&self, v: usize, vector: &[i64]) -> Word {
        let mut out = Word::identity(self.rank());
        for (i, &k) in self.local_range(v).zip(vector) {
            out = &out * &self.generator(i).pow(k);
        }
        out
    }

    /// Relators of a vertex group, over the global generators.
    pub fn vertex_relators(&self, v: usize) -> Vec<Word> {
        let range: Vec<u32> = self.local_range(v).collect();
        let g = |i: usize| self.generator(range[i]);
        match self.vertices[v].kind {
            VertexKind::Rigid => Vec::new(),
            VertexKind::Abelian { .. } => {
                let mut out = Vec::new();
                for i in 0..range.len() {
                    for j in i + 1..range.len() {
                        out.push(g(i).commutator(&g(j)));
                    }
                }
                out
            }
            VertexKind::Qh { .. } => vec![self.surface_relator(v)],
        }
    }

    /// `Π[aᵢ,bᵢ]·Πdⱼ` or `Πcᵢ²·Πdⱼ`.
    pub fn surface_relator(&self, v: usize) -> Word {
        let VertexKind::Qh {
            genus,
            orientable,
            boundary,
        } = self.vertices[v].kind
        else {
            panic!("not a surface vertex");
        };
        let start = self.offsets[v] + 1;
        let g = |i: u32| self.generator(start + i);
        let mut r = Word::identity(self.rank());
        let handles = if orientable { 2 * genus } else { genus };
        if orientable {
            for i in 0..genus {
                r = &r * &g(2 * i).commutator(&g(2 * i + 1));
            }
        } else {
            for i in 0..genus {
                r = &r * &g(i).pow(2);
            }
        }
        for j in 0..boundary {
            r = &r * &g(handles + j);
        }
        r
    }

    /// Boundary generator `dⱼ` (1-based) of a surface vertex.
    pub fn boundary_generator(&self, v: usize, j: u32) -> Word {
        let VertexKind::Qh {
            genus, orientable, ..
        } = self.vertices[v].kind
        else {
            panic!("not a surface vertex");
        };
        let handles = if orientable { 2 * genus } else { genus };
        self.generator(self.offsets[v] + handles + j)
    }

    /// For a free or surface vertex, rewrites a local word as an element of
    /// a free group: surface groups with boundary are free on all generators
    /// but the last boundary letter, which the relator expresses in the rest.
    pub fn free_model(&self, v: usize, w: &Word) -> Word {
        match self.vertices[v].kind {
            VertexKind::Qh { .. } => {
                let rank = self.rank();
                let last = self.local_range(v).end - 1;
                let r = self.surface_relator(v);
                // The relator ends with the last boundary letter.
                let prefix = Word::reduce(rank, r.letters()[..r.len() - 1].iter().copied())
                    .expect("same rank");
                let mut images: Vec<Word> = (1..=rank).map(|i| self.generator(i)).collect();
                images[last as usize - 1] = prefix.inverse();
                w.substitute(&images, rank)
            }
            _ => w.clone(),
        }
    }

    /// Word problem inside a single vertex group.
    pub fn vertex_trivial(&self, v: usize, w: &Word) -> bool {
        match self.vertices[v].kind {
            VertexKind::Abelian { .. } => self.local_vector(v, w).iter().all(|&x| x == 0),
            _ => self.free_model(v, w).is_identity(),
        }
    }

    /// Coordinates of `w` in the free abelian subgroup of vertex `v` generated
    /// by `basis`, if `w` lies in it.
    pub fn vertex_membership(&self, v: usize, basis: &[Word], w: &Word) -> Option<Vec<i64>> {
        match self.vertices[v].kind {
            VertexKind::Abelian { .. } => {
                let vecs: Vec<Vec<i64>> = basis.iter().map(|b| self.local_vector(v, b)).collect();
                linalg::integer_coordinates(&vecs, &self.local_vector(v, w))
            }
            _ => {
                let gens: Vec<Word> = basis.iter().map(|b| self.free_model(v, b)).collect();
                let m = stallings_membership(&gens, &self.free_model(v, w));
                if !m.member {
                    return None;
                }
                let witness = m
                    .witness
                    .unwrap_or_else(|| Word::identity(gens.len() as u32));
                // Edge groups are abelian, so the witness is determined by its exponents.
                Some(witness.exponent_vector())
            }
        }
    }

    /// Whether the edge group is maximal abelian in the given endpoint.
    pub fn edge_maximal_abelian(&self, e: usize, side: usize) -> bool {
        let edge = &self.edges[e];
        let v = edge.endpoint(side);
        match self.vertices[v].kind {
            VertexKind::Abelian { .. } => {
                let vecs: Vec<Vec<i64>> = edge
                    .images(side)
                    .iter()
                    .map(|w| self.local_vector(v, w))
                    .collect();
                vecs.len() == self.vertices[v].gens.len() && linalg::determinant(&vecs).abs() == 1
            }
            _ => {
                let w = self.free_model(v, &edge.images(side)[0]);
                matches!(w.primitive_root(), Ok((_, 1)))
            }
        }
    }

    pub fn fundamental_presentation(&self) -> Presentation {
        let mut relators = Vec::new();
        for v in 0..self.vertices.len() {
            relators.extend(self.vertex_relators(v));
        }
        for e in &self.edges {
            for (x, y) in e.img1.iter().zip(&e.img2) {
                let lhs = match e.stable {
                    Some(t) => x.conjugate_by(&self.generator(t)),
                    None => x.clone(),
                };
                let r = &lhs * &y.inverse();
                if !r.is_identity() && !relators.contains(&r) {
                    relators.push(r);
                }
            }
        }
        Presentation::new(self.alphabet.names().to_vec(), relators)
            .expect("generators are distinct")
    }

    /// Word problem in the fundamental group.
    pub fn is_trivial(&self, w: &Word) -> bool {
        View::whole(self)
            .is_trivial(w)
            .expect("word over the group's generators")
    }

    pub fn equal(&self, x: &Word, y: &Word) -> bool {
        self.is_trivial(&(x * &y.inverse()))
    }

    pub fn from_text(text: &str) -> Result<Gad, GadError> {
        let mut vertices = Vec::new();
        let mut edges = Vec::new();
        for (no, line) in crate::homs::content_lines(text) {
            let toks = tokenize(line).map_err(|m| perr(no, m))?;
            let (head, rest) = toks.split_first().ok_or_else(|| perr(no, "empty line"))?;
            match head.as_str() {
                "vertex" => vertices.push(parse_vertex(no, rest)?),
                "edge" => edges.push(parse_edge(no, rest)?),
                other => return Err(perr(no, format!("unknown directive {other:?}"))),
            }
        }
        Gad::new(vertices, edges)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            let gens = v.gens.join(",");
            match &v.kind {
                VertexKind::Rigid => writeln!(s, "vertex {} kind=rigid gens={gens}", v.id),
                VertexKind::Abelian { peripheral } => {
                    let p: Vec<String> = peripheral
                        .iter()
                        .map(|p| p.iter().map(i64::to_string).collect::<Vec<_>>().join(" "))
                        .collect();
                    writeln!(
                        s,
                        "vertex {} kind=abelian gens={gens} peripheral=\"{}\"",
                        v.id,
                        p.join(";")
                    )
                }
                VertexKind::Qh {
                    genus,
                    orientable,
                    boundary,
                } => writeln!(
                    s,
                    "vertex {} kind=qh genus={genus} orientable={} boundary={boundary} gens={gens}",
                    v.id, *orientable as u8
                ),
            }
            .unwrap();
        }
        for e in &self.edges {
            let words = |ws: &[Word]| {
                ws.iter()
                    .map(|w| self.alphabet.format(w))
                    .collect::<Vec<_>>()
                    .join(";")
            };
            write!(
                s,
                "edge {} {} {} rank={} img1=\"{}\" img2=\"{}\" tree={}",
                e.id,
                self.vertices[e.from].id,
                self.vertices[e.to].id,
                e.rank(),
                words(&e.img1),
                words(&e.img2),
                e.tree as u8
            )
            .unwrap();
            if let Some(t) = e.stable {
                write!(s, " stable={}", self.alphabet.name(t)).unwrap();
            }
            s.push('\n');
        }
        s
    }
}

/// Splits on whitespace outside double quotes; quotes are removed.
fn tokenize(line: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut any = false;
    for ch in line.chars() {
        match ch {
            '"' => {
                quoted = !quoted;
                any = true;
            }
            c if c.is_whitespace() && !quoted => {
                if any {
                    out.push(std::mem::take(&mut cur));
                    any = false;
                }
            }
            c => {
                cur.push(c);
                any = true;
            }
        }
    }
    if quoted {
        return Err("unterminated quote".into());
    }
    if any {
        out.push(cur);
    }
    Ok(out)
}

fn key_values(no: usize, toks: &[String]) -> Result<Vec<(String, String)>, GadError> {
    toks.iter()
        .map(|t| {
            t.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| perr(no, format!("expected key=value, got {t:?}")))
        })
        .collect()
}

fn lookup<'a>(kv: &'a [(String, String)], key: &str) -> Option<&'a str> {
    kv.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

fn required<'a>(no: usize, kv: &'a [(String, String)], key: &str) -> Result<&'a str, GadError> {
    lookup(kv, key).ok_or_else(|| perr(no, format!("missing {key}=")))
}

fn number<T: std::str::FromStr>(
    no: usize,
    kv: &[(String, String)],
    key: &str,
) -> Result<T, GadError> {
    required(no, kv, key)?
        .parse()
        .map_err(|_| perr(no, format!("bad value for {key}")))
}

fn flag(no: usize, kv: &[(String, String)], key: &str) -> Result<bool, GadError> {
    match required(no, kv, key)? {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        _ => Err(perr(no, format!("{key} must be 0 or 1"))),
    }
}

fn list(s: &str, sep: char) -> Vec<String> {
    s.split(sep)
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(String::from)
        .collect()
}

fn parse_vertex(no: usize, toks: &[String]) -> Result<Vertex, GadError> {
    let (id, rest) = toks
        .split_first()
        .ok_or_else(|| perr(no, "vertex needs an id"))?;
    let kv = key_values(no, rest)?;
    let gens = lookup(&kv, "gens").map(|g| list(g, ','));
    let v = match required(no, &kv, "kind")? {
        "rigid" => Vertex::rigid(id, gens.ok_or_else(|| perr(no, "missing gens="))?),
        "abelian" => {
            let peripheral = match lookup(&kv, "peripheral") {
                None => Vec::new(),
                Some(p) => list(p, ';')
                    .iter()
                    .map(|v| {
                        v.split_whitespace()
                            .map(|x| {
                                x.parse::<i64>()
                                    .map_err(|_| perr(no, "bad peripheral vector"))
                            })
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<_, _>>()?,
            };
            Vertex::abelian(
                id,
                gens.ok_or_else(|| perr(no, "missing gens="))?,
                peripheral,
            )
        }
        "qh" => {
            let v = Vertex::qh(
                id,
                number(no, &kv, "genus")?,
                flag(no, &kv, "orientable")?,
                number(no, &kv, "boundary")?,
            );
            match gens {
                Some(g) => v.with_gens(g),
                None => v,
            }
        }
        other => return Err(perr(no, format!("unknown vertex kind {other:?}"))),
    };
    Ok(v)
}

fn parse_edge(no: usize, toks: &[String]) -> Result<EdgeSpec, GadError> {
    if toks.len() < 3 {
        return Err(perr(no, "edge needs an id and two endpoints"));
    }
    let kv = key_values(no, &toks[3..])?;
    let img1 = list(required(no, &kv, "img1")?, ';');
    let img2 = list(required(no, &kv, "img2")?, ';');
    if let Some(r) = lookup(&kv, "rank") {
        let r: usize = r.parse().map_err(|_| perr(no, "bad rank"))?;
        if r != img1.len() || r != img2.len() {
            return Err(perr(no, "rank does not match the number of images"));
        }
    }
    let tree = match lookup(&kv, "tree") {
        Some(_) => flag(no, &kv, "tree")?,
        None => true,
    };
    Ok(EdgeSpec {
        id: toks[0].clone(),
        from: toks[1].clone(),
        to: toks[2].clone(),
        img1,
        img2,
        tree,
        stable: lookup(&kv, "stable").map(String::from),
    })
}

/// Two free groups `⟨a,b⟩`, `⟨c,d⟩` glued along `[a,b] = [d,c]`.
pub fn surface_double() -> Gad {
    Gad::new(
        vec![
            Vertex::rigid("A", ["a", "b"]),
            Vertex::rigid("B", ["c", "d"]),
        ],
        vec![EdgeSpec::tree(
            "e",
            "A",
            "B",
            ["a b a^-1 b^-1"],
            ["d c d^-1 c^-1"],
        )],
    )
    .expect("valid double")
}

/// `ℤ²` as the HNN extension of `⟨a⟩` over `⟨a⟩` with trivial twisting.
pub fn z2_hnn() -> Gad {
    Gad::new(
        vec![Vertex::rigid("A", ["a"])],
        vec![EdgeSpec::loop_edge("e", "A", "A", ["a"], ["a"], "t")],
    )
    .expect("valid HNN")
}
