//! Word-map fiber distributions: exact counts, Monte Carlo estimates, coset
//! identities and the generation probability of random tuples.
//!
//! Exact probabilities are kept as integer counts over `|G|^n`; floating
//! point only appears in estimates and in the informational decimal column.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{Budget, Error, Result};
use crate::groups::modular::is_prime;
use crate::groups::{Elem, FiniteGroup, GroupBackend, GroupOps};
use crate::stats::{decimal_string, trial_rng, wilson_interval};
use crate::words::Word;

pub fn ratio(num: impl Into<BigUint>, den: impl Into<BigUint>) -> BigRational {
    BigRational::new(BigInt::from(num.into()), BigInt::from(den.into()))
}

/// Fiber data for one conjugacy class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassFiber {
    pub representative: u32,
    pub representative_text: String,
    pub class_size: u64,
    /// Number of tuples mapping to any single element of the class.
    pub count: BigUint,
}

/// Exact distribution of a word map `G^n -> G`, stored per conjugacy class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordDistribution {
    pub group: String,
    pub word: String,
    pub n: usize,
    pub classes: Vec<ClassFiber>,
    /// `|G|^n`.
    pub total: BigUint,
    pub identity_class: usize,
}

pub const DISTRIBUTION_CSV_HEADER: &str =
    "group,word,n,class_rep,class_size,count,total,probability_decimal";

impl WordDistribution {
    /// Probability that the word map hits one given element of class `class`.
    pub fn probability(&self, class: usize) -> BigRational {
        ratio(self.classes[class].count.clone(), self.total.clone())
    }

    /// `P_G(w)`, the probability of the identity.
    pub fn prob_identity(&self) -> BigRational {
        self.probability(self.identity_class)
    }

    /// `max_g P_{G,w}(g)` and the class attaining it; ties go to the smallest
    /// representative.
    pub fn norm_infinity(&self) -> (BigRational, &ClassFiber) {
        let mut best = 0;
        for (i, c) in self.classes.iter().enumerate() {
            if c.count > self.classes[best].count {
                best = i;
            }
        }
        (self.probability(best), &self.classes[best])
    }

    /// Whether every tuple maps to the same element.
    pub fn is_point_mass(&self) -> bool {
        self.classes
            .iter()
            .filter(|c| !c.count.is_zero())
            .map(|c| c.class_size)
            .sum::<u64>()
            == 1
    }

    pub fn csv_rows(&self) -> Vec<String> {
        self.classes
            .iter()
            .enumerate()
            .map(|(i, c)| {
                format!(
                    "{},{},{},{},{},{},{},{}",
                    self.group,
                    self.word,
                    self.n,
                    c.representative_text,
                    c.class_size,
                    c.count,
                    self.total,
                    decimal_string(&self.probability(i), 20)
                )
            })
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let (norm, witness) = self.norm_infinity();
        json!({
            "group": self.group,
            "word": self.word,
            "n": self.n,
            "total": self.total.to_string(),
            "prob_identity": self.prob_identity().to_string(),
            "norm_infinity": norm.to_string(),
            "norm_infinity_witness": witness.representative_text,
            "classes": self.classes.iter().enumerate().map(|(i, c)| json!({
                "class_rep": c.representative_text,
                "class_size": c.class_size,
                "count": c.count.to_string(),
                "total": self.total.to_string(),
                "probability_decimal": decimal_string(&self.probability(i), 20),
            })).collect::<Vec<_>>(),
        })
    }
}

/// Element operations `exact_distribution` needs: `k(G) |G|^{n-1} len(w)`.
pub fn exact_cost(group_order: usize, classes: usize, w: &Word) -> BigUint {
    let n = w.rank().max(1);
    num_traits::pow(BigUint::from(group_order), n - 1)
        * BigUint::from(classes)
        * BigUint::from(w.len().max(1))
}

struct CompiledWord {
    letters: Vec<(usize, bool)>,
}

impl CompiledWord {
    fn new(w: &Word) -> Self {
        CompiledWord {
            letters: w
                .letters()
                .iter()
                .map(|l| (l.gen as usize, l.inverse))
                .collect(),
        }
    }

    #[inline]
    fn eval(&self, g: &FiniteGroup, tuple: &[u32], inverses: &[u32]) -> u32 {
        let mut acc = g.identity_index();
        for &(c, inv) in &self.letters {
            acc = g.mul_idx(acc, if inv { inverses[c] } else { tuple[c] });
        }
        acc
    }
}

/// Exact fiber counts of `w` on `G^n`, `n = rank(w)`.
///
/// Simultaneous conjugation of the inputs conjugates the output, so the
/// first coordinate only runs over class representatives, weighted by class
/// size. The remaining coordinates are split by the second coordinate into
/// blocks counted in parallel and merged by addition.
pub fn exact_distribution(g: &FiniteGroup, w: &Word, budget: Budget) -> Result<WordDistribution> {
    let n = w.rank();
    if n == 0 {
        return Err(Error::invalid("the empty word has no word map to count"));
    }
    let conj = g.conjugacy_data(budget)?;
    budget.check(&exact_cost(g.order(), conj.len(), w))?;

    let k = conj.len();
    let order = g.order() as u32;
    let word = CompiledWord::new(w);
    let reps: Vec<(u32, u64)> = conj
        .classes()
        .iter()
        .map(|c| (c.representative, c.size))
        .collect();

    let count_block = |acc: &mut Vec<u128>, rep: u32, weight: u64, second: Option<u32>| {
        let mut tuple = vec![0u32; n];
        let mut inverses = vec![g.inv_idx(0); n];
        tuple[0] = rep;
        inverses[0] = g.inv_idx(rep);
        if let Some(s) = second {
            tuple[1] = s;
            inverses[1] = g.inv_idx(s);
        }
        loop {
            let v = word.eval(g, &tuple, &inverses);
            acc[conj.class_of(v)] += weight as u128;
            // odometer over coordinates 2..n
            let mut i = n;
            loop {
                if i <= 2 {
                    return;
                }
                i -= 1;
                tuple[i] += 1;
                if tuple[i] == order {
                    tuple[i] = 0;
                    inverses[i] = g.inv_idx(0);
                } else {
                    inverses[i] = g.inv_idx(tuple[i]);
                    break;
                }
            }
        }
    };

    let acc: Vec<u128> = if n == 1 {
        let mut acc = vec![0u128; k];
        for &(rep, size) in &reps {
            count_block(&mut acc, rep, size, None);
        }
        acc
    } else {
        let blocks = reps.len() as u64 * order as u64;
        (0..blocks)
            .into_par_iter()
            .fold(
                || vec![0u128; k],
                |mut acc, b| {
                    let (rep, size) = reps[(b / order as u64) as usize];
                    count_block(&mut acc, rep, size, Some((b % order as u64) as u32));
                    acc
                },
            )
            .reduce(
                || vec![0u128; k],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            )
    };

    let classes = conj
        .classes()
        .iter()
        .zip(&acc)
        .map(|(c, &hits)| {
            debug_assert_eq!(hits % c.size as u128, 0);
            ClassFiber {
                representative: c.representative,
                representative_text: g.format(c.representative),
                class_size: c.size,
                count: BigUint::from(hits / c.size as u128),
            }
        })
        .collect();
    Ok(WordDistribution {
        group: g.backend().to_string(),
        word: w.to_text(),
        n,
        classes,
        total: num_traits::pow(BigUint::from(g.order()), n),
        identity_class: conj.class_of(g.identity_index()),
    })
}

/// `P_G(w)`.
pub fn prob_identity(g: &FiniteGroup, w: &Word, budget: Budget) -> Result<BigRational> {
    Ok(exact_distribution(g, w, budget)?.prob_identity())
}

/// `#{g : g^k = 1} / |G|`, from element orders.
pub fn count_power_word(g: &FiniteGroup, k: u64, budget: Budget) -> Result<BigRational> {
    if k == 0 {
        return Err(Error::invalid("power must be positive"));
    }
    let hits = g
        .element_orders(budget)?
        .into_iter()
        .filter(|o| k.is_multiple_of(*o))
        .count();
    Ok(ratio(hits, g.order()))
}

/// `k(G) / |G|`, the probability that two uniform elements commute.
pub fn commuting_probability(g: &FiniteGroup, budget: Budget) -> Result<BigRational> {
    let k = g.conjugacy_data(budget)?.len();
    Ok(ratio(k, g.order()))
}

/// Monte Carlo estimate of `P(w(g_1..g_n) = target)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub group: String,
    pub word: String,
    pub target: String,
    pub trials: u64,
    pub hits: u64,
    pub estimate: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    pub seed: u64,
}

pub const ESTIMATE_CSV_HEADER: &str = "group,word,trials,hits,estimate,wilson_lo,wilson_hi,seed";

impl EstimateReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.group,
            self.word,
            self.trials,
            self.hits,
            self.estimate,
            self.wilson_lo,
            self.wilson_hi,
            self.seed
        )
    }
}

/// Samples `trials` uniform tuples and counts those mapping to `target`
/// (the identity when `None`). Trial `t` draws from `trial_rng(seed, t)`.
pub fn monte_carlo(
    g: &GroupBackend,
    w: &Word,
    target: Option<&Elem>,
    trials: u64,
    seed: u64,
) -> Result<EstimateReport> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let n = w.rank();
    let target = target.cloned().unwrap_or_else(|| g.identity());
    if !g.contains(&target) {
        return Err(Error::invalid("target is not an element of the group"));
    }
    let hits = (0..trials)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = trial_rng(seed, t);
            let tuple: Vec<Elem> = (0..n).map(|_| g.random_element(&mut rng)).collect();
            w.evaluate(&tuple, g).unwrap() == target
        })
        .count() as u64;
    let (wilson_lo, wilson_hi) = wilson_interval(hits, trials);
    Ok(EstimateReport {
        group: g.to_string(),
        word: w.to_text(),
        target: g.format_element(&target),
        trials,
        hits,
        estimate: hits as f64 / trials as f64,
        wilson_lo,
        wilson_hi,
        seed,
    })
}

/// Outcome of a coset-identity check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CosetCheck {
    pub holds: bool,
    /// First tuple (in subgroup order per coordinate) where `w != 1`.
    pub witness: Option<Vec<u32>>,
}

/// Whether `w` vanishes on every tuple of `reps[0] H x ... x reps[n-1] H`.
pub fn check_coset_identity(
    g: &FiniteGroup,
    cosets: &crate::groups::CosetSystem,
    reps: &[u32],
    w: &Word,
    budget: Budget,
) -> Result<CosetCheck> {
    let n = w.rank();
    if n == 0 {
        return Err(Error::invalid("the empty word is trivially an identity"));
    }
    if reps.len() != n {
        return Err(Error::invalid(format!(
            "word has rank {n} but {} coset representatives were given",
            reps.len()
        )));
    }
    let h = cosets.subgroup_order();
    budget.check(&(num_traits::pow(BigUint::from(h), n) * BigUint::from(w.len().max(1))))?;
    let word = CompiledWord::new(w);
    let mut digits = vec![0usize; n];
    let mut tuple = vec![0u32; n];
    let mut inverses = vec![0u32; n];
    loop {
        for i in 0..n {
            tuple[i] = g.mul_idx(reps[i], cosets.subgroup[digits[i]]);
            inverses[i] = g.inv_idx(tuple[i]);
        }
        if word.eval(g, &tuple, &inverses) != g.identity_index() {
            return Ok(CosetCheck {
                holds: false,
                witness: Some(tuple),
            });
        }
        let mut i = n;
        loop {
            if i == 0 {
                return Ok(CosetCheck {
                    holds: true,
                    witness: None,
                });
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] == h {
                digits[i] = 0;
            } else {
                break;
            }
        }
    }
}

/// Probability that `n` uniform vectors span `(Z/p)^r`:
/// `prod_{i=n-r+1}^{n} (1 - p^{-i})`.
pub fn generation_probability(p: u64, n: u32, r: u32) -> Result<BigRational> {
    if !is_prime(p) {
        return Err(Error::invalid(format!("{p} is not prime")));
    }
    if r > n {
        return Err(Error::invalid(format!(
            "{n} vectors cannot span a space of dimension {r}"
        )));
    }
    Ok(spanning_product(p, n - r + 1, n))
}

/// `prod_{i=1}^{n} (1 - p^{-i})`, the lower bound for `n`-generated `p`-groups.
pub fn generation_bound(p: u64, n: u32) -> Result<BigRational> {
    if !is_prime(p) {
        return Err(Error::invalid(format!("{p} is not prime")));
    }
    Ok(spanning_product(p, 1, n))
}

fn spanning_product(p: u64, from: u32, to: u32) -> BigRational {
    let mut acc = BigRational::one();
    for i in from..=to {
        let pi = num_traits::pow(BigUint::from(p), i as usize);
        acc *= ratio(&pi - 1u32, pi);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn group(spec: &str) -> FiniteGroup {
        FiniteGroup::from_spec(spec, Budget::DEFAULT).unwrap()
    }

    fn word(text: &str) -> Word {
        Word::parse(text).unwrap()
    }

    fn q(n: u64, d: u64) -> BigRational {
        ratio(n, d)
    }

    #[test]
    fn evaluate_examples() {
        let d5 = group("D:5");
        let b = d5.backend();
        let r = b.parse_element("r1").unwrap();
        assert_eq!(
            word("x1^2").evaluate(&[r], b).unwrap(),
            b.parse_element("r2").unwrap()
        );
        let c6 = group("C:6");
        let (a, c) = (c6.element(2).clone(), c6.element(5).clone());
        assert_eq!(
            word("[x1,x2]").evaluate(&[a, c], c6.backend()).unwrap(),
            c6.backend().identity()
        );
        let s4 = group("S:4");
        let id = s4.backend().identity();
        let w = word("x1 x2^-1 x3^2 [x1,x3]");
        assert_eq!(
            w.evaluate(&[id.clone(), id.clone(), id.clone()], s4.backend())
                .unwrap(),
            id
        );
        assert!(w.evaluate(std::slice::from_ref(&id), s4.backend()).is_err());
    }

    #[test]
    fn exact_examples() {
        let d = exact_distribution(&group("S:3"), &word("[x1,x2]"), Budget::DEFAULT).unwrap();
        assert_eq!(d.classes[d.identity_class].count, BigUint::from(18u32));
        assert_eq!(d.total, BigUint::from(36u32));
        assert_eq!(d.prob_identity(), q(1, 2));
        assert_eq!(
            prob_identity(&group("D:5"), &word("x1^2"), Budget::DEFAULT).unwrap(),
            q(6, 10)
        );
        assert_eq!(
            prob_identity(&group("SL:2:3"), &word("x1^2"), Budget::DEFAULT).unwrap(),
            q(2, 24)
        );
        assert_eq!(
            prob_identity(&group("C:6 x C:4"), &word("[x1,x2]"), Budget::DEFAULT).unwrap(),
            q(1, 1)
        );
        assert_eq!(
            prob_identity(&group("C:2"), &word("x1^3"), Budget::DEFAULT).unwrap(),
            q(1, 2)
        );
    }

    #[test]
    fn norm_infinity_examples() {
        let d = exact_distribution(&group("S:3"), &word("x1^2"), Budget::DEFAULT).unwrap();
        let (norm, witness) = d.norm_infinity();
        assert_eq!(norm, q(2, 3));
        assert_eq!(witness.representative, group("S:3").identity_index());
        let d = exact_distribution(&group("C:5"), &word("[x1,x2]"), Budget::DEFAULT).unwrap();
        assert_eq!(d.norm_infinity().0, q(1, 1));
        assert!(d.is_point_mass());
        let a4 = group("A:4");
        let d = exact_distribution(&a4, &word("x1"), Budget::DEFAULT).unwrap();
        let (norm, witness) = d.norm_infinity();
        assert_eq!(norm, q(1, 12));
        // ties resolve to the smallest representative, which is the identity here
        assert_eq!(witness.representative, 0);
        assert!(!d.is_point_mass());
    }

    #[test]
    fn specialised_counts() {
        assert_eq!(
            count_power_word(&group("C:6"), 3, Budget::DEFAULT).unwrap(),
            q(3, 6)
        );
        for m in (3..=15).step_by(2) {
            let g = group(&format!("D:{m}"));
            let closed = q(m + 1, 2 * m);
            assert_eq!(count_power_word(&g, 2, Budget::DEFAULT).unwrap(), closed);
            assert_eq!(
                prob_identity(&g, &word("x1^2"), Budget::DEFAULT).unwrap(),
                closed
            );
        }
        for spec in ["S:4", "A:5", "SL:2:5", "C:7"] {
            let g = group(spec);
            assert_eq!(
                count_power_word(&g, 1, Budget::DEFAULT).unwrap(),
                q(1, g.order() as u64)
            );
            for k in 1..=6 {
                assert_eq!(
                    count_power_word(&g, k, Budget::DEFAULT).unwrap(),
                    prob_identity(&g, &word(&format!("x1^{k}")), Budget::DEFAULT).unwrap(),
                    "{spec} k={k}"
                );
            }
        }
        assert_eq!(
            commuting_probability(&group("S:3"), Budget::DEFAULT).unwrap(),
            q(3, 6)
        );
        assert_eq!(
            commuting_probability(&group("C:4 x C:3"), Budget::DEFAULT).unwrap(),
            q(1, 1)
        );
        assert_eq!(
            commuting_probability(&group("S:5"), Budget::DEFAULT).unwrap(),
            q(7, 120)
        );
    }

    #[test]
    fn monte_carlo_basics() {
        let c1 = GroupBackend::parse("C:1").unwrap();
        let r = monte_carlo(&c1, &word("[x1,x2] x3"), None, 50, 1).unwrap();
        assert_eq!((r.hits, r.estimate, r.wilson_hi), (50, 1.0, 1.0));
        let s3 = GroupBackend::parse("S:3").unwrap();
        let a = monte_carlo(&s3, &word("[x1,x2]"), None, 4000, 11).unwrap();
        let b = monte_carlo(&s3, &word("[x1,x2]"), None, 4000, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.wilson_lo <= a.estimate && a.estimate <= a.wilson_hi);
        let three_cycle = s3.parse_element("2;3;1").unwrap();
        let never = monte_carlo(&s3, &word("x1^6"), Some(&three_cycle), 100, 3).unwrap();
        assert_eq!((never.hits, never.wilson_lo), (0, 0.0));
        assert!(never.wilson_hi > 0.0 && never.wilson_hi < 0.05);
        assert!(monte_carlo(&s3, &word("x1"), None, 0, 3).is_err());
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let g = group("S:4");
        let w = word("[x1,x2] x3^2");
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    (
                        exact_distribution(&g, &w, Budget::DEFAULT).unwrap(),
                        monte_carlo(g.backend(), &w, None, 3000, 5).unwrap(),
                    )
                })
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn coset_identity_examples() {
        let d12 = group("D:12");
        let rot = d12.parse_element("r1").unwrap();
        let h = d12.subgroup_closure(&[rot], Budget::DEFAULT).unwrap();
        let refl = d12.parse_element("r0s").unwrap();
        let sq = word("x1^2");
        let c = check_coset_identity(&d12, &h, &[refl], &sq, Budget::DEFAULT).unwrap();
        assert!(c.holds && c.witness.is_none());
        let c =
            check_coset_identity(&d12, &h, &[d12.identity_index()], &sq, Budget::DEFAULT).unwrap();
        assert!(!c.holds);
        assert_eq!(d12.format(c.witness.unwrap()[0]), "r1");

        let s3 = group("S:3");
        let trivial = s3.subgroup_closure(&[], Budget::DEFAULT).unwrap();
        let t = s3.parse_element("2;1;3").unwrap();
        assert!(
            check_coset_identity(&s3, &trivial, &[t], &sq, Budget::DEFAULT)
                .unwrap()
                .holds
        );
        let a3 = s3
            .subgroup_closure(&[s3.parse_element("2;3;1").unwrap()], Budget::DEFAULT)
            .unwrap();
        let c =
            check_coset_identity(&s3, &a3, &[s3.identity_index()], &sq, Budget::DEFAULT).unwrap();
        let witness = c.witness.unwrap()[0];
        assert!(!c.holds);
        assert_eq!(
            s3.element_orders(Budget::DEFAULT).unwrap()[witness as usize],
            3
        );
        assert!(check_coset_identity(&s3, &a3, &[0, 0], &sq, Budget::DEFAULT).is_err());
    }

    #[test]
    fn generation_probability_examples() {
        assert_eq!(generation_probability(2, 2, 2).unwrap(), q(3, 8));
        assert_eq!(generation_bound(2, 2).unwrap(), q(3, 8));
        assert_eq!(generation_probability(5, 3, 0).unwrap(), q(1, 1));
        assert!(generation_probability(2, 2, 3).is_err());
        assert!(generation_probability(4, 2, 1).is_err());
    }

    #[test]
    fn budget_refusal() {
        let g = group("S:5");
        let err = exact_distribution(&g, &word("[x1,x2] x3"), Budget(1000)).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
        assert!(exact_distribution(&g, &Word::empty(), Budget::DEFAULT).is_err());
    }
}
