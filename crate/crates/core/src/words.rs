//! Elements of free groups: parsing, free reduction, evaluation and
//! length-lex enumeration.
//!
//! Generator indices are 1-based in text (`x1`, `x2`, ...) and 0-based in
//! [`Letter::gen`].

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::groups::GroupOps;

/// A generator or its inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Letter {
    pub gen: u32,
    pub inverse: bool,
}

impl Letter {
    pub fn new(gen: u32, inverse: bool) -> Self {
        Letter { gen, inverse }
    }

    /// Position in the letter order `x1 < x1^-1 < x2 < x2^-1 < ...`.
    pub fn key(self) -> u32 {
        2 * self.gen + self.inverse as u32
    }

    pub fn from_key(key: u32) -> Self {
        Letter {
            gen: key / 2,
            inverse: key % 2 == 1,
        }
    }

    pub fn inv(self) -> Self {
        Letter {
            gen: self.gen,
            inverse: !self.inverse,
        }
    }
}

impl PartialOrd for Letter {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Letter {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}

/// A freely reduced word. Construction always reduces.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn empty() -> Self {
        Word::default()
    }

    /// The generator `x_{index}` (1-based).
    pub fn generator(index: u32) -> Result<Self> {
        if index == 0 {
            return Err(Error::invalid("generator index 0"));
        }
        Ok(Word {
            letters: vec![Letter::new(index - 1, false)],
        })
    }

    /// Freely reduces an arbitrary letter sequence.
    pub fn reduce<I: IntoIterator<Item = Letter>>(raw: I) -> Self {
        let mut letters: Vec<Letter> = Vec::new();
        for l in raw {
            if letters.last() == Some(&l.inv()) {
                letters.pop();
            } else {
                letters.push(l);
            }
        }
        Word { letters }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Parser::new(text).parse_all()
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

    /// Smallest n with the word in F_n (0 for the empty word).
    pub fn rank(&self) -> usize {
        self.letters
            .iter()
            .map(|l| l.gen as usize + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn invert(&self) -> Self {
        Word {
            letters: self.letters.iter().rev().map(|l| l.inv()).collect(),
        }
    }

    pub fn concat(&self, other: &Word) -> Self {
        Word::reduce(self.letters.iter().chain(other.letters.iter()).copied())
    }

    pub fn pow(&self, k: i64) -> Self {
        let base = if k < 0 { self.invert() } else { self.clone() };
        Word::reduce(
            std::iter::repeat_n(base.letters.iter().copied(), k.unsigned_abs() as usize).flatten(),
        )
    }

    /// `[u, v] = u^-1 v^-1 u v`.
    pub fn commutator(u: &Word, v: &Word) -> Self {
        u.invert().concat(&v.invert()).concat(u).concat(v)
    }

    /// Evaluates the word map at `tuple`, substituting `tuple[i]` for `x_{i+1}`.
    pub fn evaluate<G: GroupOps>(&self, tuple: &[G::Elem], group: &G) -> Result<G::Elem> {
        if tuple.len() < self.rank() {
            return Err(Error::invalid(format!(
                "word of rank {} evaluated on a tuple of length {}",
                self.rank(),
                tuple.len()
            )));
        }
        let inverses: Vec<Option<G::Elem>> = (0..self.rank())
            .map(|i| {
                self.letters
                    .iter()
                    .any(|l| l.gen as usize == i && l.inverse)
                    .then(|| group.inv(&tuple[i]))
            })
            .collect();
        let mut acc = group.identity();
        for l in &self.letters {
            let g = if l.inverse {
                inverses[l.gen as usize].as_ref().unwrap()
            } else {
                &tuple[l.gen as usize]
            };
            acc = group.mul(&acc, g);
        }
        Ok(acc)
    }

    /// Canonical text: runs of one letter collapse into a power, no brackets,
    /// explicit `^-1`. The empty word prints as `1`.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("1");
        }
        let mut first = true;
        let mut i = 0;
        while i < self.letters.len() {
            let l = self.letters[i];
            let mut run = 1;
            while i + run < self.letters.len() && self.letters[i + run] == l {
                run += 1;
            }
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            write!(f, "x{}", l.gen + 1)?;
            match (run, l.inverse) {
                (1, false) => {}
                (r, false) => write!(f, "^{r}")?,
                (r, true) => write!(f, "^-{r}")?,
            }
            i += run;
        }
        Ok(())
    }
}

impl std::str::FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Word::parse(s)
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_text())
    }
}

const MAX_EXPONENT: i64 = 1 << 20;

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            src: text.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        match self.peek() {
            Some(got) if got == c => {
                self.pos += 1;
                Ok(())
            }
            Some(got) => Err(Error::parse(
                self.pos,
                format!("expected '{}', found '{}'", c as char, got as char),
            )),
            None => Err(Error::parse(
                self.pos,
                format!("expected '{}', found end of input", c as char),
            )),
        }
    }

    fn parse_all(mut self) -> Result<Word> {
        if self.peek().is_none() {
            return Err(Error::parse(self.pos, "empty word text"));
        }
        let w = self.word()?;
        if let Some(c) = self.peek() {
            return Err(Error::parse(
                self.pos,
                format!("unexpected character '{}'", c as char),
            ));
        }
        Ok(w)
    }

    fn word(&mut self) -> Result<Word> {
        let mut w = self.term()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let t = self.term()?;
                    w = w.concat(&t);
                }
                Some(b'x' | b'X' | b'[' | b'(' | b'1') => {
                    let t = self.term()?;
                    w = w.concat(&t);
                }
                _ => return Ok(w),
            }
        }
    }

    fn term(&mut self) -> Result<Word> {
        let a = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let start = self.pos;
            let k = self.integer()?;
            if k.abs() > MAX_EXPONENT {
                return Err(Error::parse(start, format!("exponent {k} too large")));
            }
            return Ok(a.pow(k));
        }
        Ok(a)
    }

    fn atom(&mut self) -> Result<Word> {
        let start = self.pos;
        match self.peek() {
            Some(b'x' | b'X') => {
                self.pos += 1;
                let at = self.pos;
                let digits = self.digits();
                if digits.is_empty() {
                    return Err(Error::parse(at, "expected generator index after 'x'"));
                }
                let index: u32 = digits
                    .parse()
                    .map_err(|_| Error::parse(at, "generator index out of range"))?;
                if index == 0 {
                    return Err(Error::parse(at, "generator index 0 is not allowed"));
                }
                Word::generator(index)
            }
            Some(b'1') => {
                self.pos += 1;
                Ok(Word::empty())
            }
            Some(b'[') => {
                self.pos += 1;
                let u = self.word()?;
                self.expect(b',')?;
                let v = self.word()?;
                self.expect(b']')?;
                Ok(Word::commutator(&u, &v))
            }
            Some(b'(') => {
                self.pos += 1;
                let u = self.word()?;
                self.expect(b')')?;
                Ok(u)
            }
            Some(c) => Err(Error::parse(
                self.pos,
                format!("unexpected character '{}'", c as char),
            )),
            None => Err(Error::parse(start.max(self.pos), "unexpected end of input")),
        }
    }

    fn digits(&mut self) -> &'a str {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap()
    }

    fn integer(&mut self) -> Result<i64> {
        self.skip_ws();
        let start = self.pos;
        let neg = match self.src.get(self.pos) {
            Some(b'-') => {
                self.pos += 1;
                true
            }
            Some(b'+') => {
                self.pos += 1;
                false
            }
            _ => false,
        };
        let digits = self.digits();
        if digits.is_empty() {
            return Err(Error::parse(start, "expected integer exponent"));
        }
        let v: i64 = digits
            .parse()
            .map_err(|_| Error::parse(start, "exponent out of range"))?;
        Ok(if neg { -v } else { v })
    }
}

/// Number of nontrivial reduced words of length `1..=max_len` in F_n.
pub fn count_reduced(n: usize, max_len: usize) -> u128 {
    if n == 0 {
        return 0;
    }
    let n = n as u128;
    let mut total = 0u128;
    let mut layer = 2 * n;
    for _ in 0..max_len {
        total = total.saturating_add(layer);
        layer = layer.saturating_mul(2 * n - 1);
    }
    total
}

/// Length-then-lexicographic stream of nontrivial reduced words of F_n.
///
/// [`ReducedWords::starting_with`] restricts the stream to one first
/// letter; the streams for all first letters partition the full stream,
/// and each is itself in length-lex order.
#[derive(Debug, Clone)]
pub struct ReducedWords {
    alphabet: u32,
    max_len: usize,
    first: Option<u32>,
    keys: Vec<u32>,
    done: bool,
    primed: bool,
}

impl ReducedWords {
    pub fn new(n: usize, max_len: usize) -> Self {
        ReducedWords {
            alphabet: 2 * n as u32,
            max_len,
            first: None,
            keys: Vec::new(),
            done: n == 0 || max_len == 0,
            primed: false,
        }
    }

    pub fn starting_with(n: usize, max_len: usize, first: Letter) -> Self {
        let mut it = ReducedWords::new(n, max_len);
        if first.key() >= it.alphabet {
            it.done = true;
        }
        it.first = Some(first.key());
        it
    }

    fn smallest_after(&self, prev: Option<u32>, above: Option<u32>) -> Option<u32> {
        let start = above.map_or(0, |a| a + 1);
        (start..self.alphabet).find(|&k| prev != Some(k ^ 1))
    }

    /// Fills `keys[from..len]` with the lexicographically smallest valid tail.
    fn fill_from(&mut self, from: usize, len: usize) {
        self.keys.truncate(from);
        while self.keys.len() < len {
            let prev = self.keys.last().copied();
            let k = if self.keys.is_empty() {
                self.first.unwrap_or(0)
            } else {
                self.smallest_after(prev, None).unwrap()
            };
            self.keys.push(k);
        }
    }

    fn advance(&mut self) -> bool {
        let len = self.keys.len();
        let lowest = if self.first.is_some() { 1 } else { 0 };
        for i in (lowest..len).rev() {
            let prev = if i == 0 { None } else { Some(self.keys[i - 1]) };
            if let Some(k) = self.smallest_after(prev, Some(self.keys[i])) {
                self.keys[i] = k;
                self.fill_from(i + 1, len);
                return true;
            }
        }
        if len < self.max_len {
            self.fill_from(0, len + 1);
            return true;
        }
        false
    }
}

impl Iterator for ReducedWords {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        if self.done {
            return None;
        }
        if !self.primed {
            self.primed = true;
            self.fill_from(0, 1);
        } else if !self.advance() {
            self.done = true;
            return None;
        }
        Some(Word {
            letters: self.keys.iter().map(|&k| Letter::from_key(k)).collect(),
        })
    }
}

pub fn enumerate_reduced(n: usize, max_len: usize) -> ReducedWords {
    ReducedWords::new(n, max_len)
}

/// Orders words by length, then lexicographically by letter keys.
pub fn length_lex_cmp(a: &Word, b: &Word) -> std::cmp::Ordering {
    a.len()
        .cmp(&b.len())
        .then_with(|| a.letters.cmp(&b.letters))
}
