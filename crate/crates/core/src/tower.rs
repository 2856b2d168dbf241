//! Random tuples in the congruence tower `SL_2(Z/p) <- SL_2(Z/p^2) <- ...`
//! and certificates that a sampled tuple satisfies no short relation.
//!
//! A level-`k` tuple is drawn by rejection at level 1 followed by `k - 1`
//! uniform lifts. The fiber of the reduction map `SL_2(Z/p^k) -> SL_2(Z/p^{k-1})`
//! over `X` is the coset `X' (I + p^{k-1} M)`, `tr M = 0 mod p`, for any
//! lift `X'` of `X` with determinant 1, so a uniform traceless `M` gives a
//! uniform point of the fiber.
//!
//! Words are evaluated once, at the top level; a value is the identity at
//! level `k` exactly when it is congruent to `I` mod `p^k`.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::error::{Budget, Error, Result};
use crate::groups::modular::{inv_mod, is_prime, sl_order};
use crate::groups::GroupOps;
use crate::stats::trial_rng;
use crate::words::{count_reduced, length_lex_cmp, Letter, Word};

/// Row-major 2x2 matrix `[a, b, c, d]`.
pub type Mat = [BigUint; 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TowerSpec {
    pub p: u64,
    pub levels: u32,
    pub rank: usize,
}

impl TowerSpec {
    pub fn new(p: u64, levels: u32, rank: usize) -> Result<Self> {
        if p == 2 || !is_prime(p) {
            return Err(Error::invalid(format!(
                "tower prime must be an odd prime, got {p}"
            )));
        }
        if levels == 0 || levels > 256 {
            return Err(Error::invalid("tower depth must be in 1..=256"));
        }
        if rank == 0 {
            return Err(Error::invalid("tuple rank must be at least 1"));
        }
        Ok(TowerSpec { p, levels, rank })
    }

    pub fn modulus(&self, level: u32) -> BigUint {
        num_traits::pow(BigUint::from(self.p), level as usize)
    }

    /// `|SL_2(Z/p^k)| = p^{3(k-1)} p (p^2 - 1)`.
    pub fn level_order(&self, level: u32) -> BigUint {
        sl_order(2, self.p) * num_traits::pow(BigUint::from(self.p), 3 * (level as usize - 1))
    }
}

fn identity_mat() -> Mat {
    [
        BigUint::one(),
        BigUint::zero(),
        BigUint::zero(),
        BigUint::one(),
    ]
}

fn mat_mul_mod(a: &Mat, b: &Mat, m: &BigUint) -> Mat {
    [
        (&a[0] * &b[0] + &a[1] * &b[2]) % m,
        (&a[0] * &b[1] + &a[1] * &b[3]) % m,
        (&a[2] * &b[0] + &a[3] * &b[2]) % m,
        (&a[2] * &b[1] + &a[3] * &b[3]) % m,
    ]
}

fn det_mod(a: &Mat, m: &BigUint) -> BigUint {
    let ad = &a[0] * &a[3] % m;
    let bc = &a[1] * &a[2] % m;
    (ad + m - bc) % m
}

/// Entrywise reduction mod `m`.
pub fn project(a: &Mat, m: &BigUint) -> Mat {
    [&a[0] % m, &a[1] % m, &a[2] % m, &a[3] % m]
}

/// `SL_2(Z/m)` on [`Mat`] entries; the reference arithmetic for checks.
#[derive(Debug, Clone)]
pub struct Sl2Mod {
    pub modulus: BigUint,
}

impl GroupOps for Sl2Mod {
    type Elem = Mat;

    fn identity(&self) -> Mat {
        project(&identity_mat(), &self.modulus)
    }

    fn mul(&self, a: &Mat, b: &Mat) -> Mat {
        mat_mul_mod(a, b, &self.modulus)
    }

    fn inv(&self, a: &Mat) -> Mat {
        let m = &self.modulus;
        [a[3].clone(), (m - &a[1]) % m, (m - &a[2]) % m, a[0].clone()]
    }
}

fn random_residue<R: Rng + ?Sized>(rng: &mut R, p: u64) -> BigUint {
    BigUint::from(rng.random_range(0..p))
}

/// Uniform element of `SL_2(Z/p)` by rejection on the determinant.
pub fn sample_level_one<R: Rng + ?Sized>(p: u64, rng: &mut R) -> Mat {
    let m = BigUint::from(p);
    loop {
        let a: Mat = std::array::from_fn(|_| random_residue(rng, p));
        if det_mod(&a, &m).is_one() {
            return a;
        }
    }
}

/// Uniform lift of `x in SL_2(Z/p^{level})` to `SL_2(Z/p^{level+1})`.
pub fn lift_uniform<R: Rng + ?Sized>(x: &Mat, p: u64, level: u32, rng: &mut R) -> Mat {
    let q = num_traits::pow(BigUint::from(p), level as usize);
    let big_q = &q * p;
    // det of the naive lift is 1 + q t mod pq; rescale by (1 + q c) with 2c = -t
    let det = det_mod(x, &big_q);
    let t = ((det + &big_q - 1u32) % &big_q) / &q;
    let half = inv_mod(2, p).unwrap();
    let t = t.to_u64().unwrap();
    let c = (p - t % p) % p * half % p;
    let scale = (BigUint::one() + &q * c) % &big_q;
    let fixed: Mat = std::array::from_fn(|i| &x[i] * &scale % &big_q);
    debug_assert!(det_mod(&fixed, &big_q).is_one());

    let a = rng.random_range(0..p);
    let b = rng.random_range(0..p);
    let c = rng.random_range(0..p);
    let d = (p - a) % p;
    let kernel: Mat = [
        (BigUint::one() + &q * a) % &big_q,
        &q * b % &big_q,
        &q * c % &big_q,
        (BigUint::one() + &q * d) % &big_q,
    ];
    mat_mul_mod(&fixed, &kernel, &big_q)
}

/// A compatible chain of `n`-tuples, one per level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TowerSample {
    pub spec: TowerSpec,
    pub seed: u64,
    pub stream: u64,
    /// `levels[k - 1]` is the tuple in `SL_2(Z/p^k)`.
    levels: Vec<Vec<Mat>>,
}

impl TowerSample {
    pub fn level(&self, k: u32) -> &[Mat] {
        &self.levels[k as usize - 1]
    }

    pub fn top(&self) -> &[Mat] {
        self.levels.last().unwrap()
    }

    /// Row-major decimal residues, entries joined by `;`, matrices by `:`.
    pub fn format_level(&self, k: u32) -> String {
        self.level(k)
            .iter()
            .map(|m| {
                m.iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(";")
            })
            .collect::<Vec<_>>()
            .join(":")
    }
}

pub fn tower_sample(spec: TowerSpec, seed: u64) -> TowerSample {
    tower_sample_stream(spec, seed, 0)
}

/// Sample drawn from `trial_rng(seed, stream)`.
pub fn tower_sample_stream(spec: TowerSpec, seed: u64, stream: u64) -> TowerSample {
    let mut rng = trial_rng(seed, stream);
    let mut levels = Vec::with_capacity(spec.levels as usize);
    levels.push(
        (0..spec.rank)
            .map(|_| sample_level_one(spec.p, &mut rng))
            .collect::<Vec<_>>(),
    );
    for k in 1..spec.levels {
        let next = levels[k as usize - 1]
            .iter()
            .map(|x| lift_uniform(x, spec.p, k, &mut rng))
            .collect();
        levels.push(next);
    }
    TowerSample {
        spec,
        seed,
        stream,
        levels,
    }
}

/// Residue arithmetic mod `p^K` used for word evaluation.
trait Residues: Sync {
    type R: Clone + Send + Sync;

    fn residue(&self, x: &BigUint) -> Self::R;
    fn mul(&self, a: &[Self::R; 4], b: &[Self::R; 4]) -> [Self::R; 4];
    fn inv(&self, a: &[Self::R; 4]) -> [Self::R; 4];
    fn identity(&self) -> [Self::R; 4];
    /// Largest `k <= K` with `a = I mod p^k`.
    fn identity_depth(&self, a: &[Self::R; 4]) -> u32;
}

/// Moduli below `2^32`: products fit in `u64`, reduced after every product.
struct SmallResidues {
    p: u64,
    levels: u32,
    m: u64,
}

impl Residues for SmallResidues {
    type R = u64;

    fn residue(&self, x: &BigUint) -> u64 {
        (x % self.m).to_u64().unwrap()
    }

    #[inline]
    fn mul(&self, a: &[u64; 4], b: &[u64; 4]) -> [u64; 4] {
        let m = self.m;
        let mm = |x: u64, y: u64| x * y % m;
        [
            (mm(a[0], b[0]) + mm(a[1], b[2])) % m,
            (mm(a[0], b[1]) + mm(a[1], b[3])) % m,
            (mm(a[2], b[0]) + mm(a[3], b[2])) % m,
            (mm(a[2], b[1]) + mm(a[3], b[3])) % m,
        ]
    }

    fn inv(&self, a: &[u64; 4]) -> [u64; 4] {
        let m = self.m;
        [a[3], (m - a[1]) % m, (m - a[2]) % m, a[0]]
    }

    fn identity(&self) -> [u64; 4] {
        [1 % self.m, 0, 0, 1 % self.m]
    }

    fn identity_depth(&self, a: &[u64; 4]) -> u32 {
        let m = self.m;
        let diffs = [(a[0] + m - 1) % m, a[1], a[2], (a[3] + m - 1) % m];
        diffs
            .iter()
            .map(|&x| {
                let mut x = x;
                if x == 0 {
                    return self.levels;
                }
                let mut v = 0;
                while x % self.p == 0 {
                    x /= self.p;
                    v += 1;
                }
                v
            })
            .min()
            .unwrap()
    }
}

/// Arbitrary-precision residues.
struct BigResidues {
    p: BigUint,
    levels: u32,
    m: BigUint,
}

impl Residues for BigResidues {
    type R = BigUint;

    fn residue(&self, x: &BigUint) -> BigUint {
        x % &self.m
    }

    fn mul(&self, a: &Mat, b: &Mat) -> Mat {
        mat_mul_mod(a, b, &self.m)
    }

    fn inv(&self, a: &Mat) -> Mat {
        Sl2Mod {
            modulus: self.m.clone(),
        }
        .inv(a)
    }

    fn identity(&self) -> Mat {
        project(&identity_mat(), &self.m)
    }

    fn identity_depth(&self, a: &Mat) -> u32 {
        let m = &self.m;
        let diffs = [
            (&a[0] + m - 1u32) % m,
            a[1].clone(),
            a[2].clone(),
            (&a[3] + m - 1u32) % m,
        ];
        diffs
            .iter()
            .map(|x| {
                if x.is_zero() {
                    return self.levels;
                }
                let mut x = x.clone();
                let mut v = 0;
                loop {
                    let (q, r) = x.div_rem(&self.p);
                    if !r.is_zero() {
                        return v;
                    }
                    x = q;
                    v += 1;
                }
            })
            .min()
            .unwrap()
    }
}

/// Arithmetic path for the top-level evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arithmetic {
    /// `u64` residues when `p^K < 2^32`, multi-precision otherwise.
    Auto,
    /// Multi-precision regardless of size.
    Big,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LevelOutcome {
    Pass,
    /// The first word in length-lex order that vanishes at this level.
    Fail(Word),
}

impl LevelOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, LevelOutcome::Pass)
    }

    pub fn witness(&self) -> Option<&Word> {
        match self {
            LevelOutcome::Pass => None,
            LevelOutcome::Fail(w) => Some(w),
        }
    }
}

/// Per-level freeness certificates for one sample, up to word length `max_len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreenessReport {
    pub spec: TowerSpec,
    pub seed: u64,
    pub stream: u64,
    pub max_len: usize,
    /// `levels[k - 1]` is the outcome at level `k`.
    pub levels: Vec<LevelOutcome>,
    /// Length-lex minimal word vanishing at some level.
    pub minimal_failing: Option<Word>,
}

impl FreenessReport {
    pub fn passed(&self, level: u32) -> bool {
        self.levels[level as usize - 1].passed()
    }
}

/// Depth-first walk over reduced words of each length in lexicographic order,
/// keeping prefix products. `first` pins the first letter.
fn first_failures<A: Residues>(
    ring: &A,
    gens: &[[A::R; 4]],
    inverses: &[[A::R; 4]],
    top: u32,
    max_len: usize,
    first: u32,
) -> Vec<Option<Vec<u32>>> {
    let mut found: Vec<Option<Vec<u32>>> = vec![None; top as usize];
    let alphabet = 2 * gens.len() as u32;
    let letter = |k: u32| -> &[A::R; 4] {
        if k.is_multiple_of(2) {
            &gens[(k / 2) as usize]
        } else {
            &inverses[(k / 2) as usize]
        }
    };
    let mut keys: Vec<u32> = Vec::with_capacity(max_len);
    let mut prefix: Vec<[A::R; 4]> = Vec::with_capacity(max_len + 1);
    for len in 1..=max_len {
        keys.clear();
        prefix.clear();
        prefix.push(ring.identity());
        // descend along the smallest valid letters
        let push = |keys: &mut Vec<u32>, prefix: &mut Vec<[A::R; 4]>, k: u32| {
            let next = ring.mul(prefix.last().unwrap(), letter(k));
            keys.push(k);
            prefix.push(next);
        };
        push(&mut keys, &mut prefix, first);
        loop {
            while keys.len() < len {
                let prev = *keys.last().unwrap();
                let k = if prev == 1 { 1 } else { 0 };
                push(&mut keys, &mut prefix, k);
            }
            let depth = ring.identity_depth(prefix.last().unwrap());
            for slot in found.iter_mut().take(depth as usize) {
                if slot.is_none() {
                    *slot = Some(keys.clone());
                }
            }
            if found[top as usize - 1].is_some() {
                return found;
            }
            // advance to the lexicographically next word of this length
            let mut advanced = false;
            while keys.len() > 1 {
                let cur = keys.pop().unwrap();
                prefix.pop();
                let prev = *keys.last().unwrap();
                if let Some(k) = (cur + 1..alphabet).find(|&k| k ^ 1 != prev) {
                    push(&mut keys, &mut prefix, k);
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                break;
            }
        }
    }
    found
}

fn certify_with<A: Residues>(
    ring: &A,
    tuple: &[Mat],
    top: u32,
    max_len: usize,
) -> Vec<Option<Word>> {
    let gens: Vec<[A::R; 4]> = tuple
        .iter()
        .map(|m| std::array::from_fn(|i| ring.residue(&m[i])))
        .collect();
    let inverses: Vec<[A::R; 4]> = gens.iter().map(|g| ring.inv(g)).collect();
    let per_first: Vec<Vec<Option<Vec<u32>>>> = (0..2 * gens.len() as u32)
        .into_par_iter()
        .map(|first| first_failures(ring, &gens, &inverses, top, max_len, first))
        .collect();
    (0..top as usize)
        .map(|level| {
            per_first
                .iter()
                .filter_map(|f| f[level].as_ref())
                .map(|keys| Word::reduce(keys.iter().map(|&k| Letter::from_key(k))))
                .min_by(length_lex_cmp)
        })
        .collect()
}

fn certify_tuple(
    spec: &TowerSpec,
    tuple: &[Mat],
    level: u32,
    max_len: usize,
    arithmetic: Arithmetic,
) -> Vec<Option<Word>> {
    let m = spec.modulus(level);
    if arithmetic == Arithmetic::Auto && m < BigUint::from(1u64 << 32) {
        let ring = SmallResidues {
            p: spec.p,
            levels: level,
            m: m.to_u64().unwrap(),
        };
        certify_with(&ring, tuple, level, max_len)
    } else {
        let ring = BigResidues {
            p: BigUint::from(spec.p),
            levels: level,
            m,
        };
        certify_with(&ring, tuple, level, max_len)
    }
}

fn check_certify_budget(spec: &TowerSpec, max_len: usize, budget: Budget) -> Result<()> {
    if max_len == 0 {
        return Err(Error::invalid("word-length bound must be at least 1"));
    }
    let words = count_reduced(spec.rank, max_len);
    budget.check_u128(words.saturating_mul(max_len as u128))
}

/// Certificates at every level `1..=K` of the sample, from one top-level pass.
pub fn certify_levels(
    sample: &TowerSample,
    max_len: usize,
    budget: Budget,
    arithmetic: Arithmetic,
) -> Result<FreenessReport> {
    check_certify_budget(&sample.spec, max_len, budget)?;
    let witnesses = certify_tuple(
        &sample.spec,
        sample.top(),
        sample.spec.levels,
        max_len,
        arithmetic,
    );
    Ok(report_from(sample, max_len, witnesses))
}

/// Certificate at a single level `k`, evaluating in `SL_2(Z/p^k)`.
pub fn certify_free(
    sample: &TowerSample,
    level: u32,
    max_len: usize,
    budget: Budget,
) -> Result<LevelOutcome> {
    if level == 0 || level > sample.spec.levels {
        return Err(Error::invalid(format!(
            "level {level} outside 1..={}",
            sample.spec.levels
        )));
    }
    check_certify_budget(&sample.spec, max_len, budget)?;
    let witnesses = certify_tuple(
        &sample.spec,
        sample.level(level),
        level,
        max_len,
        Arithmetic::Auto,
    );
    Ok(match witnesses.into_iter().last().flatten() {
        Some(w) => LevelOutcome::Fail(w),
        None => LevelOutcome::Pass,
    })
}

fn report_from(
    sample: &TowerSample,
    max_len: usize,
    witnesses: Vec<Option<Word>>,
) -> FreenessReport {
    let minimal_failing = witnesses
        .iter()
        .flatten()
        .min_by(|a, b| length_lex_cmp(a, b))
        .cloned();
    FreenessReport {
        spec: sample.spec,
        seed: sample.seed,
        stream: sample.stream,
        max_len,
        levels: witnesses
            .into_iter()
            .map(|w| match w {
                Some(w) => LevelOutcome::Fail(w),
                None => LevelOutcome::Pass,
            })
            .collect(),
        minimal_failing,
    }
}

/// Seeded trials of [`certify_levels`]; trial `t` uses stream `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreenessExperiment {
    pub spec: TowerSpec,
    pub max_len: usize,
    pub seed: u64,
    pub samples: Vec<TowerSample>,
    pub reports: Vec<FreenessReport>,
}

pub const FREENESS_CSV_HEADER: &str = "trial,seed,level,pass,witness_word";

impl FreenessExperiment {
    pub fn trials(&self) -> usize {
        self.reports.len()
    }

    pub fn pass_counts(&self) -> Vec<u64> {
        (1..=self.spec.levels)
            .map(|k| self.reports.iter().filter(|r| r.passed(k)).count() as u64)
            .collect()
    }

    pub fn pass_fractions(&self) -> Vec<f64> {
        self.pass_counts()
            .into_iter()
            .map(|c| c as f64 / self.trials() as f64)
            .collect()
    }

    /// Trials whose pass/fail sequence is not monotone in the level.
    pub fn monotonicity_violations(&self) -> usize {
        self.reports
            .iter()
            .filter(|r| r.levels.windows(2).any(|w| w[0].passed() && !w[1].passed()))
            .count()
    }

    pub fn csv_rows(&self) -> Vec<String> {
        let mut rows = Vec::new();
        for (t, r) in self.reports.iter().enumerate() {
            for (k, outcome) in r.levels.iter().enumerate() {
                rows.push(format!(
                    "{t},{},{},{},{}",
                    self.seed,
                    k + 1,
                    outcome.passed(),
                    outcome.witness().map(|w| w.to_text()).unwrap_or_default()
                ));
            }
        }
        rows
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "p": self.spec.p,
            "levels": self.spec.levels,
            "rank": self.spec.rank,
            "max_len": self.max_len,
            "seed": self.seed,
            "trials": self.trials(),
            "certified_scope": format!(
                "words of length <= {} in {} generators, levels 1..={}",
                self.max_len, self.spec.rank, self.spec.levels
            ),
            "pass_counts": self.pass_counts(),
            "pass_fractions": self.pass_fractions(),
            "per_trial": self.samples.iter().zip(&self.reports).enumerate().map(|(t, (s, r))| json!({
                "trial": t,
                "tuple_top_level": s.format_level(self.spec.levels),
                "levels": r.levels.iter().enumerate().map(|(k, o)| json!({
                    "level": k + 1,
                    "pass": o.passed(),
                    "witness_word": o.witness().map(|w| w.to_text()),
                })).collect::<Vec<_>>(),
                "minimal_failing": r.minimal_failing.as_ref().map(|w| w.to_text()),
            })).collect::<Vec<_>>(),
        })
    }
}

pub fn randomly_free_experiment(
    spec: TowerSpec,
    max_len: usize,
    trials: u64,
    seed: u64,
    budget: Budget,
) -> Result<FreenessExperiment> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    check_certify_budget(&spec, max_len, budget)?;
    let results: Vec<(TowerSample, FreenessReport)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let sample = tower_sample_stream(spec, seed, t);
            let report = certify_levels(&sample, max_len, budget, Arithmetic::Auto).unwrap();
            (sample, report)
        })
        .collect();
    let (samples, reports) = results.into_iter().unzip();
    Ok(FreenessExperiment {
        spec,
        max_len,
        seed,
        samples,
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::enumerate_reduced;
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    use std::collections::HashMap;

    fn spec(p: u64, k: u32, n: usize) -> TowerSpec {
        TowerSpec::new(p, k, n).unwrap()
    }

    fn big(v: [u64; 4]) -> Mat {
        v.map(BigUint::from)
    }

    fn chi_square_critical(df: f64) -> f64 {
        ChiSquared::new(df).unwrap().inverse_cdf(1.0 - 1e-3)
    }

    #[test]
    fn spec_validation() {
        assert!(TowerSpec::new(2, 3, 2).is_err());
        assert!(TowerSpec::new(9, 3, 2).is_err());
        assert!(TowerSpec::new(3, 0, 2).is_err());
        assert!(TowerSpec::new(3, 2, 0).is_err());
        assert_eq!(spec(3, 2, 1).level_order(2), BigUint::from(648u32));
    }

    #[test]
    fn samples_are_compatible_and_in_sl2() {
        for seed in 0..20 {
            let s = tower_sample(spec(5, 4, 3), seed);
            for k in 1..=4 {
                let m = s.spec.modulus(k);
                for x in s.level(k) {
                    assert!(det_mod(x, &m).is_one());
                }
                for j in 1..=k {
                    let mj = s.spec.modulus(j);
                    let projected: Vec<Mat> = s.level(k).iter().map(|x| project(x, &mj)).collect();
                    assert_eq!(projected, s.level(j));
                }
            }
        }
    }

    #[test]
    fn level_one_uniform_chi_square() {
        let trials = 100_000;
        let mut counts: HashMap<Mat, u64> = HashMap::new();
        let mut rng = trial_rng(1, 0);
        for _ in 0..trials {
            *counts.entry(sample_level_one(3, &mut rng)).or_default() += 1;
        }
        assert_eq!(counts.len(), 24);
        let expected = trials as f64 / 24.0;
        let stat: f64 = counts
            .values()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(stat < chi_square_critical(23.0), "chi-square {stat}");
    }

    #[test]
    fn lifts_of_identity_fill_the_fiber_uniformly() {
        let id = identity_mat();
        let m9 = BigUint::from(9u32);
        let three = BigUint::from(3u32);
        // exhaustive: lifts of I mod 3 inside SL_2(Z/9)
        let mut fiber = 0;
        for a in 0..9u64 {
            for b in 0..9u64 {
                for c in 0..9u64 {
                    for d in 0..9u64 {
                        let x = big([a, b, c, d]);
                        if det_mod(&x, &m9).is_one() && project(&x, &three) == id {
                            fiber += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(fiber, 27);
        let mut rng = trial_rng(2, 0);
        let mut counts: HashMap<Mat, u64> = HashMap::new();
        let start = big([2, 1, 0, 2]);
        for _ in 0..10_000 {
            let x = lift_uniform(&start, 3, 1, &mut rng);
            assert_eq!(project(&x, &three), start);
            assert!(det_mod(&x, &m9).is_one());
            *counts.entry(x).or_default() += 1;
        }
        assert_eq!(counts.len(), 27);
        let expected = 10_000.0 / 27.0;
        let stat: f64 = counts
            .values()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(stat < chi_square_critical(26.0), "chi-square {stat}");
    }

    #[test]
    fn certificate_examples() {
        let budget = Budget::DEFAULT;
        let mut s = tower_sample(spec(3, 2, 2), 4);
        // force the identity into coordinate 1 at both levels
        for k in 0..2 {
            s.levels[k][0] = identity_mat();
        }
        assert_eq!(
            certify_free(&s, 1, 3, budget).unwrap(),
            LevelOutcome::Fail(Word::parse("x1").unwrap())
        );

        let minus_one = big([2, 0, 0, 2]);
        let s = TowerSample {
            spec: spec(3, 1, 1),
            seed: 0,
            stream: 0,
            levels: vec![vec![minus_one]],
        };
        assert_eq!(
            certify_free(&s, 1, 2, budget).unwrap(),
            LevelOutcome::Fail(Word::parse("x1^2").unwrap())
        );

        for seed in 0..30 {
            let s = tower_sample(spec(3, 3, 2), seed);
            let has_identity = s.level(1).iter().any(|x| *x == identity_mat());
            assert_eq!(
                certify_free(&s, 1, 1, budget).unwrap().passed(),
                !has_identity
            );
        }
        assert!(certify_free(&s, 2, 2, budget).is_err());
    }

    /// Independent rescan: enumerate words in length-lex order and evaluate
    /// each with the reference arithmetic at the given level.
    fn first_failing_by_rescan(s: &TowerSample, level: u32, max_len: usize) -> Option<Word> {
        let ring = Sl2Mod {
            modulus: s.spec.modulus(level),
        };
        let id = ring.identity();
        enumerate_reduced(s.spec.rank, max_len)
            .find(|w| w.evaluate(s.level(level), &ring).unwrap() == id)
    }

    #[test]
    fn witnesses_are_minimal_and_monotone() {
        for seed in 0..25 {
            let s = tower_sample(spec(3, 3, 2), seed);
            let r = certify_levels(&s, 4, Budget::DEFAULT, Arithmetic::Auto).unwrap();
            for k in 1..=3 {
                assert_eq!(
                    r.levels[k as usize - 1].witness().cloned(),
                    first_failing_by_rescan(&s, k, 4),
                    "seed {seed} level {k}"
                );
                assert_eq!(
                    certify_free(&s, k, 4, Budget::DEFAULT).unwrap(),
                    r.levels[k as usize - 1]
                );
            }
            assert!(!r.levels.windows(2).any(|w| w[0].passed() && !w[1].passed()));
            assert_eq!(r.minimal_failing.as_ref(), r.levels[0].witness());
        }
    }

    #[test]
    fn small_and_big_arithmetic_agree() {
        for seed in 0..10 {
            let s = tower_sample(spec(3, 6, 2), seed);
            let a = certify_levels(&s, 5, Budget::DEFAULT, Arithmetic::Auto).unwrap();
            let b = certify_levels(&s, 5, Budget::DEFAULT, Arithmetic::Big).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn deep_towers_use_multi_precision() {
        // 3^45 exceeds 2^64
        let s = tower_sample(spec(3, 45, 2), 8);
        let m = s.spec.modulus(45);
        assert!(s.top().iter().all(|x| det_mod(x, &m).is_one()));
        let r = certify_levels(&s, 3, Budget::DEFAULT, Arithmetic::Auto).unwrap();
        assert_eq!(r.levels.len(), 45);
        assert!(!r.levels.windows(2).any(|w| w[0].passed() && !w[1].passed()));
    }

    #[test]
    fn experiment_is_reproducible_and_thread_independent() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    randomly_free_experiment(spec(3, 3, 2), 3, 40, 17, Budget::DEFAULT).unwrap()
                })
        };
        let a = run(1);
        let b = run(3);
        assert_eq!(a, b);
        assert_eq!(a.csv_rows(), b.csv_rows());
        assert_eq!(a.monotonicity_violations(), 0);
        let f = a.pass_fractions();
        assert!(f.windows(2).all(|w| w[0] <= w[1]));
    }
}
