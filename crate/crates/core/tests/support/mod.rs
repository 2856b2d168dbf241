//! Test oracles that avoid the indexed group and the conjugation shortcut.

#![allow(dead_code)]

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use wordfiber::groups::Elem;
use wordfiber::words::Letter;
use wordfiber::{GroupBackend, Word};

/// Number of tuples in `G^n` mapping to each element, by evaluating the word
/// on every tuple directly on backend encodings.
pub fn naive_fiber_counts(g: &GroupBackend, w: &Word) -> HashMap<Elem, u64> {
    let elements = g.elements();
    let n = w.rank().max(1);
    let size = elements.len();
    (0..size)
        .into_par_iter()
        .map(|first| {
            let mut counts: HashMap<Elem, u64> = HashMap::new();
            let mut digits = vec![0usize; n];
            digits[0] = first;
            loop {
                let tuple: Vec<Elem> = digits.iter().map(|&d| elements[d].clone()).collect();
                *counts.entry(w.evaluate(&tuple, g).unwrap()).or_default() += 1;
                let mut i = n;
                loop {
                    if i == 1 {
                        return counts;
                    }
                    i -= 1;
                    digits[i] += 1;
                    if digits[i] == size {
                        digits[i] = 0;
                    } else {
                        break;
                    }
                }
            }
        })
        .reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_default() += v;
            }
            a
        })
}

/// Freely reduced word with `len` raw letters over `rank` generators; may
/// come out shorter after reduction.
pub fn random_word<R: Rng>(rng: &mut R, rank: u32, len: usize) -> Word {
    Word::reduce((0..len).map(|_| Letter::new(rng.random_range(0..rank), rng.random())))
}

/// Random word whose rank is exactly `rank` and whose length is in `1..=max_len`.
pub fn random_word_of_rank<R: Rng>(rng: &mut R, rank: u32, max_len: usize) -> Word {
    loop {
        let len = rng.random_range(1..=max_len);
        let w = random_word(rng, rank, len);
        if !w.is_empty() && w.rank() == rank as usize {
            return w;
        }
    }
}

/// Pearson statistic of observed counts against a uniform distribution on
/// `cells` outcomes (cells never observed count as zero).
pub fn chi_square_uniform(counts: &HashMap<Elem, u64>, cells: usize) -> f64 {
    let total: u64 = counts.values().sum();
    let expected = total as f64 / cells as f64;
    let observed: f64 = counts
        .values()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    observed + (cells - counts.len()) as f64 * expected
}
