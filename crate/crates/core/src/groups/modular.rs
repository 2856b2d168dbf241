//! Residue arithmetic and small square matrices over Z/m.

use num_bigint::BigUint;
use num_traits::{One, Pow};

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Prime factorization as `(p, k)` pairs in increasing `p`.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            let mut k = 0;
            while n.is_multiple_of(d) {
                n /= d;
                k += 1;
            }
            out.push((d, k));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// `Some((p, k))` when `n = p^k` with `p` prime and `k >= 1`.
pub fn prime_power(n: u64) -> Option<(u64, u32)> {
    match factorize(n).as_slice() {
        [single] => Some(*single),
        _ => None,
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let (mut old_r, mut r) = (a as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}

/// `|GL_r(Z/m)|`: the prime-power formula `p^{(k-1)r^2} prod_{i<r} (p^r - p^i)`
/// combined over the factors of `m` by the Chinese remainder theorem.
pub fn gl_order(r: u32, m: u64) -> BigUint {
    let mut total = BigUint::one();
    for (p, k) in factorize(m) {
        let p = BigUint::from(p);
        let pr: BigUint = Pow::pow(&p, r);
        let mut field = BigUint::one();
        for i in 0..r {
            field *= &pr - Pow::pow(&p, i);
        }
        total *= field * Pow::pow(&p, (k - 1) * r * r);
    }
    total
}

/// `|SL_r(Z/m)| = |GL_r(Z/m)| / phi(m)`; the determinant is onto the units.
pub fn sl_order(r: u32, m: u64) -> BigUint {
    let phi: u64 = factorize(m)
        .into_iter()
        .map(|(p, k)| p.pow(k - 1) * (p - 1))
        .product();
    gl_order(r, m) / BigUint::from(phi)
}

/// Row-major square matrices with entries in `[0, m)`.
#[derive(Debug, Clone, Copy)]
pub struct MatOps {
    pub r: usize,
    pub m: u64,
}

impl MatOps {
    pub fn identity(&self) -> Vec<u32> {
        let mut out = vec![0; self.r * self.r];
        for i in 0..self.r {
            out[i * self.r + i] = (1 % self.m) as u32;
        }
        out
    }

    pub fn mul_into(&self, a: &[u32], b: &[u32], out: &mut [u32]) {
        let r = self.r;
        for i in 0..r {
            for j in 0..r {
                let mut acc = 0u64;
                for t in 0..r {
                    acc = (acc + a[i * r + t] as u64 * b[t * r + j] as u64) % self.m;
                }
                out[i * r + j] = acc as u32;
            }
        }
    }

    pub fn det(&self, a: &[u32]) -> u64 {
        let entries: Vec<u64> = a.iter().map(|&x| x as u64).collect();
        det_rec(&entries, self.r, self.m)
    }

    /// Adjugate times the inverse determinant. Caller guarantees a unit determinant.
    pub fn inverse(&self, a: &[u32]) -> Vec<u32> {
        let r = self.r;
        let m = self.m;
        let d = self.det(a);
        let dinv = inv_mod(d, m).expect("matrix with non-unit determinant");
        if r == 1 {
            return vec![dinv as u32];
        }
        let entries: Vec<u64> = a.iter().map(|&x| x as u64).collect();
        let mut out = vec![0u32; r * r];
        for i in 0..r {
            for j in 0..r {
                let minor = minor(&entries, r, i, j);
                let c = det_rec(&minor, r - 1, m);
                let c = if (i + j) % 2 == 1 { (m - c) % m } else { c };
                // adj[j][i] = cofactor[i][j]
                out[j * r + i] = ((c as u128 * dinv as u128) % m as u128) as u32;
            }
        }
        out
    }
}

fn minor(a: &[u64], r: usize, row: usize, col: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity((r - 1) * (r - 1));
    for i in (0..r).filter(|&i| i != row) {
        for j in (0..r).filter(|&j| j != col) {
            out.push(a[i * r + j]);
        }
    }
    out
}

fn det_rec(a: &[u64], r: usize, m: u64) -> u64 {
    match r {
        0 => 1 % m,
        1 => a[0] % m,
        2 => {
            let p = (a[0] as u128 * a[3] as u128) % m as u128;
            let q = (a[1] as u128 * a[2] as u128) % m as u128;
            ((p + m as u128 - q) % m as u128) as u64
        }
        _ => {
            let mut acc = 0u128;
            for j in 0..r {
                let c = det_rec(&minor(a, r, 0, j), r - 1, m) as u128 * a[j] as u128 % m as u128;
                acc = if j % 2 == 0 {
                    (acc + c) % m as u128
                } else {
                    (acc + m as u128 - c) % m as u128
                };
            }
            acc as u64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count_by_enumeration(r: usize, m: u64, special: bool) -> u64 {
        let ops = MatOps { r, m };
        let cells = r * r;
        let mut count = 0;
        let mut a = vec![0u32; cells];
        loop {
            let d = ops.det(&a);
            if (special && d == 1 % m) || (!special && gcd(d, m) == 1) {
                count += 1;
            }
            let mut i = 0;
            loop {
                if i == cells {
                    return count;
                }
                a[i] += 1;
                if a[i] as u64 == m {
                    a[i] = 0;
                    i += 1;
                } else {
                    break;
                }
            }
        }
    }

    #[test]
    fn primes_and_factors() {
        assert!(is_prime(2) && is_prime(13) && !is_prime(1) && !is_prime(9));
        assert_eq!(factorize(360), vec![(2, 3), (3, 2), (5, 1)]);
        assert_eq!(prime_power(27), Some((3, 3)));
        assert_eq!(prime_power(12), None);
        assert_eq!(inv_mod(3, 7), Some(5));
        assert_eq!(inv_mod(2, 4), None);
    }

    #[test]
    fn order_formulas_match_counting() {
        assert_eq!(sl_order(2, 5), BigUint::from(120u32));
        for (r, m) in [
            (2, 2),
            (2, 3),
            (2, 4),
            (2, 5),
            (2, 6),
            (2, 9),
            (3, 2),
            (1, 7),
        ] {
            assert_eq!(
                gl_order(r as u32, m),
                BigUint::from(count_by_enumeration(r, m, false)),
                "GL({r},{m})"
            );
            assert_eq!(
                sl_order(r as u32, m),
                BigUint::from(count_by_enumeration(r, m, true)),
                "SL({r},{m})"
            );
        }
    }

    #[test]
    fn sl2_prime_power_lifting_formula() {
        // |SL_2(Z/p^k)| = p^{3(k-1)} |SL_2(Z/p)|
        for (p, k) in [(3u64, 2u32), (5, 2), (3, 3)] {
            let expect = sl_order(2, p) * BigUint::from(p.pow(3 * (k - 1)));
            assert_eq!(sl_order(2, p.pow(k)), expect);
        }
    }

    #[test]
    fn inverse_and_det() {
        let ops = MatOps { r: 3, m: 7 };
        let a = [2, 1, 0, 0, 3, 1, 1, 0, 4];
        let inv = ops.inverse(&a);
        let mut prod = vec![0; 9];
        ops.mul_into(&a, &inv, &mut prod);
        assert_eq!(prod, ops.identity());
        assert_eq!(ops.det(&a), (2 * 12 + 1i64).rem_euclid(7) as u64);
    }
}
