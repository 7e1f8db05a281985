//! Reduced words in a free group of finite rank.
//!
//! A [`Word`] always holds a freely reduced letter sequence together with the
//! rank of the ambient free group, so that identity elements of different
//! ranks stay distinguishable.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Mul;

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("letter index {index} outside rank {rank}")]
    LetterOutOfRank { index: u32, rank: u32 },
    #[error("rank mismatch: {left} vs {right}")]
    RankMismatch { left: u32, right: u32 },
    #[error("operation undefined on the identity word")]
    Identity,
    #[error("unknown generator {0:?}")]
    UnknownGenerator(String),
    #[error("malformed token {0:?}")]
    BadToken(String),
}

/// A generator of the free group or its inverse.
///
/// Stored as a signed, 1-based generator index.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Letter(i32);

impl Letter {
    pub fn new(index: u32, positive: bool) -> Letter {
        assert!(index >= 1, "letter indices are 1-based");
        let i = index as i32;
        Letter(if positive { i } else { -i })
    }

    pub fn gen(index: u32) -> Letter {
        Letter::new(index, true)
    }

    pub fn index(self) -> u32 {
        self.0.unsigned_abs()
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn sign(self) -> i32 {
        self.0.signum()
    }

    pub fn inverse(self) -> Letter {
        Letter(-self.0)
    }

    /// Shortlex key: a < A < b < B < ...
    fn order_key(self) -> (u32, bool) {
        (self.index(), !self.is_positive())
    }
}

impl PartialOrd for Letter {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Letter {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order_key().cmp(&other.order_key())
    }
}

/// A freely reduced word in the free group of rank `rank`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Word {
    rank: u32,
    letters: Vec<Letter>,
}

/// Appends `l` to a reduced stack of letters, cancelling if possible.
#[inline]
fn push_reduced(stack: &mut Vec<Letter>, l: Letter) {
    if stack.last() == Some(&l.inverse()) {
        stack.pop();
    } else {
        stack.push(l);
    }
}

impl Word {
    pub fn identity(rank: u32) -> Word {
        Word {
            rank,
            letters: Vec::new(),
        }
    }

    /// Free reduction of an arbitrary letter sequence.
    pub fn reduce<I: IntoIterator<Item = Letter>>(rank: u32, raw: I) -> Result<Word, WordError> {
        let mut letters = Vec::new();
        for l in raw {
            if l.index() > rank {
                return Err(WordError::LetterOutOfRank {
                    index: l.index(),
                    rank,
                });
            }
            push_reduced(&mut letters, l);
        }
        Ok(Word { rank, letters })
    }

    /// Builds a word from signed 1-based indices (`-2` is the inverse of the
    /// second generator). Panics on out-of-rank input; meant for literals.
    pub fn from_signed(rank: u32, raw: &[i32]) -> Word {
        Word::reduce(
            rank,
            raw.iter().map(|&i| Letter::new(i.unsigned_abs(), i > 0)),
        )
        .expect("letter within rank")
    }

    pub fn generator(rank: u32, index: u32) -> Word {
        Word::reduce(rank, [Letter::gen(index)]).expect("generator within rank")
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    /// Reinterprets the word in a free group of (at least as large) rank.
    pub fn with_rank(&self, rank: u32) -> Result<Word, WordError> {
        Word::reduce(rank, self.letters.iter().copied())
    }

    pub fn multiply(&self, other: &Word) -> Result<Word, WordError> {
        if self.rank != other.rank {
            return Err(WordError::RankMismatch {
                left: self.rank,
                right: other.rank,
            });
        }
        let mut letters = self.letters.clone();
        for &l in &other.letters {
            push_reduced(&mut letters, l);
        }
        Ok(Word {
            rank: self.rank,
            letters,
        })
    }

    pub fn inverse(&self) -> Word {
        Word {
            rank: self.rank,
            letters: self.letters.iter().rev().map(|l| l.inverse()).collect(),
        }
    }

    pub fn pow(&self, k: i64) -> Word {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let (conj, core) = base.cyclic_reduce();
        let mut letters = Vec::with_capacity(core.len() * k.unsigned_abs() as usize);
        for _ in 0..k.unsigned_abs() {
            letters.extend_from_slice(&core.letters);
        }
        let core_pow = Word {
            rank: self.rank,
            letters,
        };
        &(&conj * &core_pow) * &conj.inverse()
    }

    /// `u w u⁻¹`.
    pub fn conjugate_by(&self, u: &Word) -> Word {
        &(u * self) * &u.inverse()
    }

    /// `[x, y] = x y x⁻¹ y⁻¹`.
    pub fn commutator(&self, other: &Word) -> Word {
        &(&(self * other) * &self.inverse()) * &other.inverse()
    }

    /// Returns `(conjugator, core)` with `self = conjugator · core · conjugator⁻¹`
    /// and `core` cyclically reduced.
    pub fn cyclic_reduce(&self) -> (Word, Word) {
        let n = self.letters.len();
        let mut i = 0;
        while 2 * i + 1 < n && self.letters[i] == self.letters[n - 1 - i].inverse() {
            i += 1;
        }
        let conj = Word {
            rank: self.rank,
            letters: self.letters[..i].to_vec(),
        };
        let core = Word {
            rank: self.rank,
            letters: self.letters[i..n - i].to_vec(),
        };
        (conj, core)
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.letters.first(), self.letters.last()) {
            (Some(&f), Some(&l)) => self.letters.len() == 1 || f != l.inverse(),
            _ => true,
        }
    }

    /// Translation length on the Cayley tree: the length of the cyclic core.
    pub fn translation_length(&self) -> usize {
        self.cyclic_reduce().1.len()
    }

    /// Maximal-exponent root: `self = root^exponent`, exponent ≥ 1.
    pub fn primitive_root(&self) -> Result<(Word, u64), WordError> {
        if self.is_identity() {
            return Err(WordError::Identity);
        }
        let (conj, core) = self.cyclic_reduce();
        let period = smallest_period(&core.letters);
        let n = core.len();
        let (root_core, exp) = if n % period == 0 {
            (core.letters[..period].to_vec(), (n / period) as u64)
        } else {
            (core.letters.clone(), 1)
        };
        let root_core = Word {
            rank: self.rank,
            letters: root_core,
        };
        Ok((root_core.conjugate_by(&conj), exp))
    }

    /// If `self = base^k`, returns `k`. `base` must be nontrivial.
    pub fn power_of(&self, base: &Word) -> Option<i64> {
        if self.is_identity() {
            return Some(0);
        }
        let (root, e) = base.primitive_root().ok()?;
        let (sroot, se) = self.primitive_root().ok()?;
        let sign = if sroot == root {
            1
        } else if sroot == root.inverse() {
            -1
        } else {
            return None;
        };
        if se % e == 0 {
            Some(sign * (se / e) as i64)
        } else {
            None
        }
    }

    pub fn commutes(&self, other: &Word) -> Result<bool, WordError> {
        Ok(self.multiply(other)? == other.multiply(self)?)
    }

    /// Second route for commutation: nontrivial words commute iff their
    /// primitive roots agree up to inversion.
    pub fn commutes_via_roots(&self, other: &Word) -> Result<bool, WordError> {
        if self.rank != other.rank {
            return Err(WordError::RankMismatch {
                left: self.rank,
                right: other.rank,
            });
        }
        if self.is_identity() || other.is_identity() {
            return Ok(true);
        }
        let (r1, _) = self.primitive_root()?;
        let (r2, _) = other.primitive_root()?;
        Ok(r1 == r2 || r1 == r2.inverse())
    }

    /// Applies the substitution `generator i ↦ images[i-1]`.
    pub fn substitute(&self, images: &[Word], target_rank: u32) -> Word {
        let mut letters = Vec::new();
        for &l in &self.letters {
            let img = &images[l.index() as usize - 1];
            if l.is_positive() {
                for &m in &img.letters {
                    push_reduced(&mut letters, m);
                }
            } else {
                for &m in img.letters.iter().rev() {
                    push_reduced(&mut letters, m.inverse());
                }
            }
        }
        Word {
            rank: target_rank,
            letters,
        }
    }

    /// Exponent sum of each generator (the image in the abelianization).
    pub fn exponent_vector(&self) -> Vec<i64> {
        let mut v = vec![0i64; self.rank as usize];
        for l in &self.letters {
            v[l.index() as usize - 1] += l.sign() as i64;
        }
        v
    }

    /// Generators that occur in the word.
    pub fn support(&self) -> Vec<u32> {
        let mut s: Vec<u32> = self.letters.iter().map(|l| l.index()).collect();
        s.sort_unstable();
        s.dedup();
        s
    }
}

/// Smallest period of a nonempty sequence via the failure function.
fn smallest_period(s: &[Letter]) -> usize {
    let n = s.len();
    let mut fail = vec![0usize; n + 1];
    let mut k = 0;
    for i in 1..n {
        while k > 0 && s[i] != s[k] {
            k = fail[k];
        }
        if s[i] == s[k] {
            k += 1;
        }
        fail[i + 1] = k;
    }
    n - fail[n]
}

impl Mul for &Word {
    type Output = Word;

    /// Panics on rank mismatch; use [`Word::multiply`] for a checked product.
    fn mul(self, rhs: &Word) -> Word {
        self.multiply(rhs)
            .expect("multiplying words of different rank")
    }
}

impl Mul for Word {
    type Output = Word;

    fn mul(self, rhs: Word) -> Word {
        &self * &rhs
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortlex order.
impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank
            .cmp(&other.rank)
            .then(self.letters.len().cmp(&other.letters.len()))
            .then_with(|| self.letters.cmp(&other.letters))
    }
}

/// Generator names for text input and output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    names: Vec<String>,
}

impl Alphabet {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Alphabet {
        Alphabet {
            names: names.into_iter().map(Into::into).collect(),
        }
    }

    /// `a, b, c, ...` for small ranks, `x1, x2, ...` beyond 26.
    pub fn standard(rank: u32) -> Alphabet {
        if rank <= 26 {
            Alphabet::new((0..rank).map(|i| ((b'a' + i as u8) as char).to_string()))
        } else {
            Alphabet::new((1..=rank).map(|i| format!("x{i}")))
        }
    }

    pub fn rank(&self) -> u32 {
        self.names.len() as u32
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<u32> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| i as u32 + 1)
    }

    pub fn name(&self, index: u32) -> &str {
        &self.names[index as usize - 1]
    }

    /// Parses whitespace-separated tokens `g`, `g^-1`, `g^k`; `1` is the
    /// identity. The result is reduced.
    pub fn parse(&self, text: &str) -> Result<Word, WordError> {
        let rank = self.rank();
        let mut letters = Vec::new();
        for tok in text.split_whitespace() {
            if tok == "1" {
                continue;
            }
            let (name, exp) = match tok.split_once('^') {
                Some((n, e)) => {
                    let e: i64 = e
                        .parse()
                        .map_err(|_| WordError::BadToken(tok.to_string()))?;
                    if e == 0 {
                        return Err(WordError::BadToken(tok.to_string()));
                    }
                    (n, e)
                }
                None => (tok, 1),
            };
            let idx = self
                .index_of(name)
                .ok_or_else(|| WordError::UnknownGenerator(name.to_string()))?;
            let l = Letter::new(idx, exp > 0);
            for _ in 0..exp.unsigned_abs() {
                push_reduced(&mut letters, l);
            }
        }
        Ok(Word { rank, letters })
    }

    /// Inverse of [`Alphabet::parse`]; runs of one letter are written as powers.
    pub fn format(&self, w: &Word) -> String {
        if w.is_identity() {
            return "1".to_string();
        }
        let mut out: Vec<String> = Vec::new();
        let mut i = 0;
        let ls = w.letters();
        while i < ls.len() {
            let mut j = i;
            while j < ls.len() && ls[j] == ls[i] {
                j += 1;
            }
            let run = (j - i) as i64 * ls[i].sign() as i64;
            let name = self.name(ls[i].index());
            out.push(if run == 1 {
                name.to_string()
            } else {
                format!("{name}^{run}")
            });
            i = j;
        }
        out.join(" ")
    }
}

/// Every reduced word of length at most `max_len`, shortest first.
pub fn reduced_words_up_to(rank: u32, max_len: usize) -> Vec<Word> {
    let mut all = vec![Word::identity(rank)];
    let mut frontier = vec![Word::identity(rank)];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &frontier {
            for i in 1..=rank {
                for pos in [true, false] {
                    let l = Letter::new(i, pos);
                    if w.letters.last() == Some(&l.inverse()) {
                        continue;
                    }
                    let mut letters = w.letters.clone();
                    letters.push(l);
                    next.push(Word { rank, letters });
                }
            }
        }
        all.extend(next.iter().cloned());
        frontier = next;
    }
    all
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&Alphabet::standard(self.rank).format(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        Alphabet::standard(2).parse(s).unwrap()
    }

    /// Naive oracle: repeatedly delete the first cancelling pair.
    fn naive_reduce(raw: &[Letter]) -> Vec<Letter> {
        let mut v = raw.to_vec();
        loop {
            let pos = v.windows(2).position(|p| p[0] == p[1].inverse());
            match pos {
                Some(i) => {
                    v.drain(i..i + 2);
                }
                None => return v,
            }
        }
    }

    #[test]
    fn reduce_examples() {
        assert!(w("a a^-1").is_identity());
        assert_eq!(w("a b b^-1 a"), w("a^2"));
        let err = Word::reduce(2, [Letter::gen(3)]).unwrap_err();
        assert_eq!(err, WordError::LetterOutOfRank { index: 3, rank: 2 });
    }

    #[test]
    fn reduce_matches_naive_on_random_sequences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let raw: Vec<Letter> = (0..50)
                .map(|_| Letter::new(rng.gen_range(1..=2), rng.gen_bool(0.5)))
                .collect();
            let fast = Word::reduce(2, raw.iter().copied()).unwrap();
            assert_eq!(fast.letters(), naive_reduce(&raw).as_slice());
        }
    }

    #[test]
    fn multiply_examples() {
        assert_eq!(&w("a b") * &w("b^-1 a"), w("a^2"));
        let x = w("a b a^-1 b^2");
        assert!((&x * &x.inverse()).is_identity());
        let err = w("a").multiply(&Word::generator(3, 1)).unwrap_err();
        assert_eq!(err, WordError::RankMismatch { left: 2, right: 3 });
    }

    #[test]
    fn cyclic_reduce_examples() {
        let (c, core) = w("a b a^-1").cyclic_reduce();
        assert_eq!((c, core), (w("a"), w("b")));
        let (c, core) = w("a b").cyclic_reduce();
        assert!(c.is_identity());
        assert_eq!(core, w("a b"));
    }

    #[test]
    fn primitive_root_examples() {
        assert_eq!(w("a b a b").primitive_root().unwrap(), (w("a b"), 2));
        assert_eq!(w("a").primitive_root().unwrap(), (w("a"), 1));
        assert_eq!(
            w("b a b a b a^-1 b^-1 a^-1 b^-1")
                .primitive_root()
                .unwrap()
                .1,
            1
        );
        assert_eq!(
            w("b a^2 b^-1").primitive_root().unwrap(),
            (w("b a b^-1"), 2)
        );
        assert_eq!(Word::identity(2).primitive_root(), Err(WordError::Identity));
    }

    #[test]
    fn commutes_examples() {
        assert!(w("a b").commutes(&w("a b a b")).unwrap());
        assert!(!w("a").commutes(&w("b")).unwrap());
    }

    #[test]
    fn translation_length_examples() {
        assert_eq!(w("a b a^-1").translation_length(), 1);
        assert_eq!(Word::identity(2).translation_length(), 0);
    }

    #[test]
    fn power_of_detects_cyclic_membership() {
        let z = w("a b a^-1 b^-1");
        assert_eq!(z.pow(3).power_of(&z), Some(3));
        assert_eq!(z.pow(-2).power_of(&z), Some(-2));
        assert_eq!(w("a").power_of(&z), None);
        assert_eq!(w("a^4").power_of(&w("a^2")), Some(2));
        assert_eq!(w("a^3").power_of(&w("a^2")), None);
    }

    #[test]
    fn text_form_round_trip() {
        let alpha = Alphabet::new(["x", "y", "t"]);
        let word = alpha.parse("x^2 y^-1 t t x^-3 1").unwrap();
        assert_eq!(alpha.format(&word), "x^2 y^-1 t^2 x^-3");
        assert_eq!(alpha.parse(&alpha.format(&word)).unwrap(), word);
        assert_eq!(alpha.format(&Word::identity(3)), "1");
        assert!(matches!(
            alpha.parse("z"),
            Err(WordError::UnknownGenerator(_))
        ));
        assert!(matches!(alpha.parse("x^0"), Err(WordError::BadToken(_))));
    }

    #[test]
    fn reduced_word_counts() {
        // 1 + 4 + 12 + 36
        assert_eq!(reduced_words_up_to(2, 3).len(), 53);
    }
}
