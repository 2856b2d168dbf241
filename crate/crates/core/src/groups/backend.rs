use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::seq::SliceRandom;
use rand::Rng;
use smallvec::{smallvec, SmallVec};

use super::modular::{gcd, gl_order, prime_power, sl_order, MatOps};
use super::GroupOps;
use crate::error::{Error, Result};

/// Canonical element encoding. Equal elements have equal encodings, and the
/// total order on elements is the lexicographic order on encodings.
pub type Elem = SmallVec<[u32; 16]>;

const MAX_DEGREE: u32 = 16;
const MAX_MATRIX_RANK: u32 = 4;
const MAX_MODULUS: u32 = 1 << 31;

/// A concrete finite group with a canonical element encoding.
///
/// Encodings per family:
/// * `Cyclic`: `[a]` for the residue `a` mod `m`.
/// * `Dihedral`: `[k, s]` for `rho^k sigma^s`, with `rho` the rotation by one step.
/// * `Symmetric` / `Alternating`: the image array `[pi(0), ..., pi(m-1)]`;
///   `a * b` applies `b` first.
/// * `GeneralLinear` / `SpecialLinear`: row-major residues mod `m`.
/// * `ProjectiveSpecialLinear`: an `SL_2(Z/q)` matrix whose first nonzero
///   entry (row-major) lies in `1..=(q-1)/2`.
/// * `DirectProduct`: concatenated factor encodings.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GroupBackend {
    Cyclic { m: u32 },
    Dihedral { m: u32 },
    Symmetric { m: u32 },
    Alternating { m: u32 },
    GeneralLinear { r: u32, m: u32 },
    SpecialLinear { r: u32, m: u32 },
    ProjectiveSpecialLinear { q: u32 },
    DirectProduct(Vec<GroupBackend>),
}

impl GroupBackend {
    /// Parses the group-spec mini-language, e.g. `"D:6"`, `"SL:2:5"`,
    /// `"PSL:2:3^2"`, `"S:4 x C:2"`. Case-insensitive.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut factors = Vec::new();
        let mut expecting_factor = true;
        for (pos, tok) in tokens(spec) {
            if tok.eq_ignore_ascii_case("x") {
                if expecting_factor {
                    return Err(Error::parse(pos, "expected a group before 'x'"));
                }
                expecting_factor = true;
            } else {
                if !expecting_factor {
                    return Err(Error::parse(pos, "expected ' x ' between factors"));
                }
                factors.push(parse_factor(tok, pos)?);
                expecting_factor = false;
            }
        }
        if factors.is_empty() || expecting_factor {
            return Err(Error::parse(spec.len(), "incomplete group spec"));
        }
        Ok(GroupBackend::product(factors))
    }

    /// Flattens nested products; a single factor is returned as is.
    pub fn product(factors: Vec<GroupBackend>) -> Self {
        let mut flat = Vec::new();
        for f in factors {
            match f {
                GroupBackend::DirectProduct(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            GroupBackend::DirectProduct(flat)
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            GroupBackend::Cyclic { .. } => "cyclic",
            GroupBackend::Dihedral { .. } => "dihedral",
            GroupBackend::Symmetric { .. } => "symmetric",
            GroupBackend::Alternating { .. } => "alternating",
            GroupBackend::GeneralLinear { .. } => "general_linear",
            GroupBackend::SpecialLinear { .. } => "special_linear",
            GroupBackend::ProjectiveSpecialLinear { .. } => "central_quotient",
            GroupBackend::DirectProduct(_) => "direct_product",
        }
    }

    pub fn order(&self) -> BigUint {
        match self {
            GroupBackend::Cyclic { m } => BigUint::from(*m),
            GroupBackend::Dihedral { m } => BigUint::from(*m) * 2u32,
            GroupBackend::Symmetric { m } => factorial(*m),
            GroupBackend::Alternating { m } => factorial(*m) / 2u32,
            GroupBackend::GeneralLinear { r, m } => gl_order(*r, *m as u64),
            GroupBackend::SpecialLinear { r, m } => sl_order(*r, *m as u64),
            GroupBackend::ProjectiveSpecialLinear { q } => sl_order(2, *q as u64) / 2u32,
            GroupBackend::DirectProduct(fs) => fs.iter().map(|f| f.order()).product(),
        }
    }

    /// Number of `u32` words in an encoding.
    pub fn width(&self) -> usize {
        match self {
            GroupBackend::Cyclic { .. } => 1,
            GroupBackend::Dihedral { .. } => 2,
            GroupBackend::Symmetric { m } | GroupBackend::Alternating { m } => *m as usize,
            GroupBackend::GeneralLinear { r, .. } | GroupBackend::SpecialLinear { r, .. } => {
                (r * r) as usize
            }
            GroupBackend::ProjectiveSpecialLinear { .. } => 4,
            GroupBackend::DirectProduct(fs) => fs.iter().map(|f| f.width()).sum(),
        }
    }

    fn mat_ops(&self) -> MatOps {
        match self {
            GroupBackend::GeneralLinear { r, m } | GroupBackend::SpecialLinear { r, m } => MatOps {
                r: *r as usize,
                m: *m as u64,
            },
            GroupBackend::ProjectiveSpecialLinear { q } => MatOps { r: 2, m: *q as u64 },
            _ => unreachable!("not a matrix group"),
        }
    }

    fn canonicalize_sign(q: u32, a: &mut [u32]) {
        if let Some(&e) = a.iter().find(|&&e| e != 0) {
            if e > (q - 1) / 2 {
                for x in a.iter_mut() {
                    *x = (q - *x) % q;
                }
            }
        }
    }

    /// Number of candidate encodings an exhaustive enumeration visits.
    pub fn enumeration_cost(&self) -> BigUint {
        match self {
            GroupBackend::GeneralLinear { r, m } | GroupBackend::SpecialLinear { r, m } => {
                num_traits::pow(BigUint::from(*m), (r * r) as usize)
            }
            GroupBackend::ProjectiveSpecialLinear { q } => num_traits::pow(BigUint::from(*q), 4),
            GroupBackend::DirectProduct(fs) => {
                fs.iter().map(|f| f.enumeration_cost()).sum::<BigUint>() + self.order()
            }
            _ => self.order(),
        }
    }

    /// All elements, sorted in the fixed element order.
    pub fn elements(&self) -> Vec<Elem> {
        match self {
            GroupBackend::Cyclic { m } => (0..*m).map(|a| smallvec![a]).collect(),
            GroupBackend::Dihedral { m } => (0..*m)
                .flat_map(|k| [smallvec![k, 0], smallvec![k, 1]])
                .collect(),
            GroupBackend::Symmetric { m } => permutations(*m as usize),
            GroupBackend::Alternating { m } => permutations(*m as usize)
                .into_iter()
                .filter(|p| is_even(p))
                .collect(),
            GroupBackend::GeneralLinear { .. }
            | GroupBackend::SpecialLinear { .. }
            | GroupBackend::ProjectiveSpecialLinear { .. } => {
                let ops = self.mat_ops();
                let cells = ops.r * ops.r;
                let mut out = Vec::new();
                let mut a: Elem = smallvec![0; cells];
                loop {
                    if self.contains(&a) {
                        out.push(a.clone());
                    }
                    // odometer, most significant cell first, so output is sorted
                    let mut i = cells;
                    loop {
                        if i == 0 {
                            return out;
                        }
                        i -= 1;
                        a[i] += 1;
                        if a[i] as u64 == ops.m {
                            a[i] = 0;
                        } else {
                            break;
                        }
                    }
                }
            }
            GroupBackend::DirectProduct(fs) => {
                let mut out: Vec<Elem> = vec![Elem::new()];
                for f in fs {
                    let part = f.elements();
                    out = out
                        .iter()
                        .flat_map(|prefix| {
                            part.iter().map(move |e| {
                                let mut v = prefix.clone();
                                v.extend_from_slice(e);
                                v
                            })
                        })
                        .collect();
                }
                out
            }
        }
    }

    /// Whether `a` is the canonical encoding of an element.
    pub fn contains(&self, a: &[u32]) -> bool {
        if a.len() != self.width() {
            return false;
        }
        match self {
            GroupBackend::Cyclic { m } => a[0] < *m,
            GroupBackend::Dihedral { m } => a[0] < *m && a[1] < 2,
            GroupBackend::Symmetric { m } => is_permutation(a, *m),
            GroupBackend::Alternating { m } => is_permutation(a, *m) && is_even(a),
            GroupBackend::GeneralLinear { m, .. } => {
                a.iter().all(|&x| x < *m) && gcd(self.mat_ops().det(a), *m as u64) == 1
            }
            GroupBackend::SpecialLinear { m, .. } => {
                a.iter().all(|&x| x < *m) && self.mat_ops().det(a) == 1 % *m as u64
            }
            GroupBackend::ProjectiveSpecialLinear { q } => {
                let mut c: Elem = a.into();
                Self::canonicalize_sign(*q, &mut c);
                a.iter().all(|&x| x < *q) && self.mat_ops().det(a) == 1 && c.as_slice() == a
            }
            GroupBackend::DirectProduct(fs) => {
                let mut off = 0;
                fs.iter().all(|f| {
                    let w = f.width();
                    let ok = f.contains(&a[off..off + w]);
                    off += w;
                    ok
                })
            }
        }
    }

    /// Uniform random element.
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> Elem {
        match self {
            GroupBackend::Cyclic { m } => smallvec![rng.random_range(0..*m)],
            GroupBackend::Dihedral { m } => {
                smallvec![rng.random_range(0..*m), rng.random_range(0..2u32)]
            }
            GroupBackend::Symmetric { m } => {
                let mut p: Elem = (0..*m).collect();
                p.shuffle(rng);
                p
            }
            GroupBackend::Alternating { m } => {
                let mut p: Elem = (0..*m).collect();
                p.shuffle(rng);
                if !is_even(&p) {
                    // right multiplication by (0 1) is a bijection odd -> even
                    p.swap(0, 1);
                }
                p
            }
            GroupBackend::GeneralLinear { .. }
            | GroupBackend::SpecialLinear { .. }
            | GroupBackend::ProjectiveSpecialLinear { .. } => {
                let ops = self.mat_ops();
                let special = !matches!(self, GroupBackend::GeneralLinear { .. });
                loop {
                    let mut a: Elem = (0..ops.r * ops.r)
                        .map(|_| rng.random_range(0..ops.m) as u32)
                        .collect();
                    let d = ops.det(&a);
                    let ok = if special {
                        d == 1 % ops.m
                    } else {
                        gcd(d, ops.m) == 1
                    };
                    if ok {
                        if let GroupBackend::ProjectiveSpecialLinear { q } = self {
                            Self::canonicalize_sign(*q, &mut a);
                        }
                        return a;
                    }
                }
            }
            GroupBackend::DirectProduct(fs) => {
                let mut out = Elem::new();
                for f in fs {
                    out.extend_from_slice(&f.random_element(rng));
                }
                out
            }
        }
    }

    /// A generating set, as canonical encodings.
    pub fn generators(&self) -> Vec<Elem> {
        match self {
            GroupBackend::Cyclic { m } => {
                if *m > 1 {
                    vec![smallvec![1]]
                } else {
                    vec![]
                }
            }
            GroupBackend::Dihedral { m } => {
                let mut g = vec![smallvec![0, 1]];
                if *m > 1 {
                    g.push(smallvec![1, 0]);
                }
                g
            }
            GroupBackend::Symmetric { m } => {
                let m = *m as usize;
                if m < 2 {
                    return vec![];
                }
                let mut t: Elem = (0..m as u32).collect();
                t.swap(0, 1);
                let cycle: Elem = (0..m as u32).map(|i| (i + 1) % m as u32).collect();
                vec![t, cycle]
            }
            GroupBackend::Alternating { m } => (2..*m)
                .map(|i| {
                    // 3-cycle 0 -> 1 -> i -> 0
                    let mut p: Elem = (0..*m).collect();
                    p[0] = 1;
                    p[1] = i;
                    p[i as usize] = 0;
                    p
                })
                .collect(),
            GroupBackend::GeneralLinear { .. }
            | GroupBackend::SpecialLinear { .. }
            | GroupBackend::ProjectiveSpecialLinear { .. } => {
                let ops = self.mat_ops();
                let r = ops.r;
                let mut gens: Vec<Elem> = Vec::new();
                for i in 0..r {
                    for j in (0..r).filter(|&j| j != i) {
                        let mut e: Elem = ops.identity().into();
                        e[i * r + j] = (1 % ops.m) as u32;
                        gens.push(e);
                    }
                }
                if let GroupBackend::GeneralLinear { .. } = self {
                    for u in (2..ops.m).filter(|&u| gcd(u, ops.m) == 1) {
                        let mut d: Elem = ops.identity().into();
                        d[0] = u as u32;
                        gens.push(d);
                    }
                }
                if let GroupBackend::ProjectiveSpecialLinear { q } = self {
                    for g in gens.iter_mut() {
                        Self::canonicalize_sign(*q, g);
                    }
                }
                gens.retain(|g| g.as_slice() != self.identity().as_slice());
                gens
            }
            GroupBackend::DirectProduct(fs) => {
                let ids: Vec<Elem> = fs.iter().map(|f| f.identity()).collect();
                let mut out = Vec::new();
                for (i, f) in fs.iter().enumerate() {
                    for g in f.generators() {
                        let mut e = Elem::new();
                        for (j, id) in ids.iter().enumerate() {
                            if i == j {
                                e.extend_from_slice(&g);
                            } else {
                                e.extend_from_slice(id);
                            }
                        }
                        out.push(e);
                    }
                }
                out
            }
        }
    }

    /// Text form of an element: residues, permutation images (1-based) and
    /// matrix entries are joined by `;`, product components by `:`.
    /// Dihedral elements print as `r<k>` or `r<k>s`.
    pub fn format_element(&self, a: &[u32]) -> String {
        match self {
            GroupBackend::Cyclic { .. } => a[0].to_string(),
            GroupBackend::Dihedral { .. } => {
                if a[1] == 0 {
                    format!("r{}", a[0])
                } else {
                    format!("r{}s", a[0])
                }
            }
            GroupBackend::Symmetric { .. } | GroupBackend::Alternating { .. } => a
                .iter()
                .map(|x| (x + 1).to_string())
                .collect::<Vec<_>>()
                .join(";"),
            GroupBackend::GeneralLinear { .. }
            | GroupBackend::SpecialLinear { .. }
            | GroupBackend::ProjectiveSpecialLinear { .. } => a
                .iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(";"),
            GroupBackend::DirectProduct(fs) => {
                let mut off = 0;
                fs.iter()
                    .map(|f| {
                        let w = f.width();
                        let s = f.format_element(&a[off..off + w]);
                        off += w;
                        s
                    })
                    .collect::<Vec<_>>()
                    .join(":")
            }
        }
    }

    /// Inverse of [`GroupBackend::format_element`]. Central-quotient input is
    /// canonicalized; anything else must already be a valid element.
    pub fn parse_element(&self, text: &str) -> Result<Elem> {
        let text = text.trim();
        let bad = |msg: &str| Error::parse(0, format!("element '{text}': {msg}"));
        let nums = |s: &str| -> Result<Vec<u32>> {
            s.split(';')
                .map(|t| {
                    t.trim()
                        .parse::<u32>()
                        .map_err(|_| bad("expected integers"))
                })
                .collect()
        };
        let a: Elem = match self {
            GroupBackend::Cyclic { .. } => nums(text)?.into_iter().collect(),
            GroupBackend::Dihedral { .. } => {
                let body = text
                    .strip_prefix(['r', 'R'])
                    .ok_or_else(|| bad("dihedral elements look like r<k> or r<k>s"))?;
                let (k, s) = match body.strip_suffix(['s', 'S']) {
                    Some(k) => (k, 1),
                    None => (body, 0),
                };
                let k = k.parse::<u32>().map_err(|_| bad("bad rotation exponent"))?;
                smallvec![k, s]
            }
            GroupBackend::Symmetric { .. } | GroupBackend::Alternating { .. } => nums(text)?
                .into_iter()
                .map(|x| x.checked_sub(1).ok_or_else(|| bad("images are 1-based")))
                .collect::<Result<_>>()?,
            GroupBackend::GeneralLinear { .. } | GroupBackend::SpecialLinear { .. } => {
                nums(text)?.into_iter().collect()
            }
            GroupBackend::ProjectiveSpecialLinear { q } => {
                let mut a: Elem = nums(text)?.into_iter().collect();
                if a.iter().any(|&x| x >= *q) {
                    return Err(bad("entry out of range"));
                }
                Self::canonicalize_sign(*q, &mut a);
                a
            }
            GroupBackend::DirectProduct(fs) => {
                let parts: Vec<&str> = text.split(':').collect();
                if parts.len() != fs.len() {
                    return Err(bad("wrong number of product components"));
                }
                let mut out = Elem::new();
                for (f, p) in fs.iter().zip(parts) {
                    out.extend_from_slice(&f.parse_element(p)?);
                }
                out
            }
        };
        if !self.contains(&a) {
            return Err(bad(&format!("not an element of {self}")));
        }
        Ok(a)
    }
}

impl GroupOps for GroupBackend {
    type Elem = Elem;

    fn identity(&self) -> Elem {
        match self {
            GroupBackend::Cyclic { .. } => smallvec![0],
            GroupBackend::Dihedral { .. } => smallvec![0, 0],
            GroupBackend::Symmetric { m } | GroupBackend::Alternating { m } => (0..*m).collect(),
            GroupBackend::GeneralLinear { .. }
            | GroupBackend::SpecialLinear { .. }
            | GroupBackend::ProjectiveSpecialLinear { .. } => self.mat_ops().identity().into(),
            GroupBackend::DirectProduct(fs) => {
                fs.iter().flat_map(|f| f.identity().into_iter()).collect()
            }
        }
    }

    fn mul(&self, a: &Elem, b: &Elem) -> Elem {
        match self {
            GroupBackend::Cyclic { m } => {
                smallvec![((a[0] as u64 + b[0] as u64) % *m as u64) as u32]
            }
            GroupBackend::Dihedral { m } => {
                let k = if a[1] == 0 {
                    (a[0] as u64 + b[0] as u64) % *m as u64
                } else {
                    (a[0] as u64 + *m as u64 - b[0] as u64) % *m as u64
                };
                smallvec![k as u32, a[1] ^ b[1]]
            }
            GroupBackend::Symmetric { .. } | GroupBackend::Alternating { .. } => {
                b.iter().map(|&i| a[i as usize]).collect()
            }
            GroupBackend::GeneralLinear { .. } | GroupBackend::SpecialLinear { .. } => {
                let ops = self.mat_ops();
                let mut out: Elem = smallvec![0; ops.r * ops.r];
                ops.mul_into(a, b, &mut out);
                out
            }
            GroupBackend::ProjectiveSpecialLinear { q } => {
                let ops = self.mat_ops();
                let mut out: Elem = smallvec![0; 4];
                ops.mul_into(a, b, &mut out);
                Self::canonicalize_sign(*q, &mut out);
                out
            }
            GroupBackend::DirectProduct(fs) => {
                let mut out = Elem::new();
                let mut off = 0;
                for f in fs {
                    let w = f.width();
                    let x: Elem = a[off..off + w].into();
                    let y: Elem = b[off..off + w].into();
                    out.extend_from_slice(&f.mul(&x, &y));
                    off += w;
                }
                out
            }
        }
    }

    fn inv(&self, a: &Elem) -> Elem {
        match self {
            GroupBackend::Cyclic { m } => smallvec![(*m - a[0]) % *m],
            GroupBackend::Dihedral { m } => {
                if a[1] == 0 {
                    smallvec![(*m - a[0]) % *m, 0]
                } else {
                    a.clone()
                }
            }
            GroupBackend::Symmetric { .. } | GroupBackend::Alternating { .. } => {
                let mut out: Elem = smallvec![0; a.len()];
                for (i, &x) in a.iter().enumerate() {
                    out[x as usize] = i as u32;
                }
                out
            }
            GroupBackend::GeneralLinear { .. } | GroupBackend::SpecialLinear { .. } => {
                self.mat_ops().inverse(a).into()
            }
            GroupBackend::ProjectiveSpecialLinear { q } => {
                let mut out: Elem = self.mat_ops().inverse(a).into();
                Self::canonicalize_sign(*q, &mut out);
                out
            }
            GroupBackend::DirectProduct(fs) => {
                let mut out = Elem::new();
                let mut off = 0;
                for f in fs {
                    let w = f.width();
                    let x: Elem = a[off..off + w].into();
                    out.extend_from_slice(&f.inv(&x));
                    off += w;
                }
                out
            }
        }
    }
}

impl fmt::Display for GroupBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupBackend::Cyclic { m } => write!(f, "C:{m}"),
            GroupBackend::Dihedral { m } => write!(f, "D:{m}"),
            GroupBackend::Symmetric { m } => write!(f, "S:{m}"),
            GroupBackend::Alternating { m } => write!(f, "A:{m}"),
            GroupBackend::GeneralLinear { r, m } => write!(f, "GL:{r}:{m}"),
            GroupBackend::SpecialLinear { r, m } => write!(f, "SL:{r}:{m}"),
            GroupBackend::ProjectiveSpecialLinear { q } => {
                let (p, k) = prime_power(*q as u64).unwrap();
                if k == 1 {
                    write!(f, "PSL:2:{p}")
                } else {
                    write!(f, "PSL:2:{p}^{k}")
                }
            }
            GroupBackend::DirectProduct(fs) => {
                let parts: Vec<String> = fs.iter().map(|g| g.to_string()).collect();
                f.write_str(&parts.join(" x "))
            }
        }
    }
}

impl std::str::FromStr for GroupBackend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GroupBackend::parse(s)
    }
}

fn tokens(s: &str) -> impl Iterator<Item = (usize, &str)> {
    s.split_ascii_whitespace()
        .map(move |t| (t.as_ptr() as usize - s.as_ptr() as usize, t))
}

fn parse_factor(tok: &str, pos: usize) -> Result<GroupBackend> {
    let parts: Vec<&str> = tok.split(':').collect();
    let mut offsets = Vec::with_capacity(parts.len());
    let mut off = pos;
    for p in &parts {
        offsets.push(off);
        off += p.len() + 1;
    }
    let int = |i: usize| -> Result<u32> {
        let text = parts[i];
        let v = match text.split_once('^') {
            Some((b, e)) => {
                let b: u32 = b
                    .parse()
                    .map_err(|_| Error::parse(offsets[i], "expected integer"))?;
                let e: u32 = e
                    .parse()
                    .map_err(|_| Error::parse(offsets[i], "expected integer"))?;
                b.checked_pow(e)
                    .ok_or_else(|| Error::parse(offsets[i], "parameter too large"))?
            }
            None => text.parse().map_err(|_| {
                Error::parse(offsets[i], format!("expected integer, found '{text}'"))
            })?,
        };
        Ok(v)
    };
    let arity = |n: usize| -> Result<()> {
        if parts.len() != n {
            Err(Error::parse(
                pos,
                format!("'{tok}' takes {} parameter(s)", n - 1),
            ))
        } else {
            Ok(())
        }
    };
    let fam = parts[0].to_ascii_uppercase();
    let g = match fam.as_str() {
        "C" | "D" | "S" | "A" => {
            arity(2)?;
            let m = int(1)?;
            let err = |msg: &str| Err(Error::parse(offsets[1], msg.to_string()));
            match fam.as_str() {
                "C" if m < 1 => return err("C:m needs m >= 1"),
                "D" if m < 1 => return err("D:m needs m >= 1"),
                "S" if !(1..=MAX_DEGREE).contains(&m) => return err("S:m needs 1 <= m <= 16"),
                "A" if !(3..=MAX_DEGREE).contains(&m) => return err("A:m needs 3 <= m <= 16"),
                _ => {}
            }
            match fam.as_str() {
                "C" => GroupBackend::Cyclic { m },
                "D" => GroupBackend::Dihedral { m },
                "S" => GroupBackend::Symmetric { m },
                _ => GroupBackend::Alternating { m },
            }
        }
        "GL" | "SL" | "PSL" => {
            arity(3)?;
            let r = int(1)?;
            let m = int(2)?;
            if !(1..=MAX_MATRIX_RANK).contains(&r) {
                return Err(Error::parse(offsets[1], "matrix rank must be 1..=4"));
            }
            if !(2..MAX_MODULUS).contains(&m) {
                return Err(Error::parse(offsets[2], "modulus must be in 2..2^31"));
            }
            match fam.as_str() {
                "GL" => GroupBackend::GeneralLinear { r, m },
                "SL" => GroupBackend::SpecialLinear { r, m },
                _ => {
                    if r != 2 {
                        return Err(Error::parse(offsets[1], "PSL is only supported in rank 2"));
                    }
                    match prime_power(m as u64) {
                        Some((p, _)) if p != 2 => GroupBackend::ProjectiveSpecialLinear { q: m },
                        _ => {
                            return Err(Error::parse(
                                offsets[2],
                                "PSL:2:q needs q an odd prime power",
                            ))
                        }
                    }
                }
            }
        }
        _ => {
            return Err(Error::parse(
                pos,
                format!("unknown group family '{}'", parts[0]),
            ))
        }
    };
    Ok(g)
}

fn factorial(m: u32) -> BigUint {
    (1..=m).fold(BigUint::one(), |acc, i| acc * i)
}

fn is_permutation(a: &[u32], m: u32) -> bool {
    let mut seen = vec![false; m as usize];
    a.len() == m as usize
        && a.iter()
            .all(|&x| x < m && !std::mem::replace(&mut seen[x as usize], true))
}

pub(crate) fn is_even(p: &[u32]) -> bool {
    let mut seen = vec![false; p.len()];
    let mut transpositions = 0;
    for start in 0..p.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = p[i] as usize;
            len += 1;
        }
        transpositions += len - 1;
    }
    transpositions % 2 == 0
}

/// All permutations of `0..m` in lexicographic order.
fn permutations(m: usize) -> Vec<Elem> {
    let mut p: Elem = (0..m as u32).collect();
    let mut out = vec![p.clone()];
    loop {
        let Some(i) = (0..m.saturating_sub(1)).rev().find(|&i| p[i] < p[i + 1]) else {
            return out;
        };
        let j = (i + 1..m).rev().find(|&j| p[j] > p[i]).unwrap();
        p.swap(i, j);
        p[i + 1..].reverse();
        out.push(p.clone());
    }
}

/// `|G|` as `u64`, if it fits.
pub fn order_u64(g: &GroupBackend) -> Option<u64> {
    g.order().to_u64()
}
