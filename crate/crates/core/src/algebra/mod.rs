//! Exact arithmetic in F_q, A = F_q[T] and K = F_q(T).

pub mod field;
pub mod poly;
pub mod scalar;
pub mod text;
pub mod xpoly;

pub use field::{Field, FieldSpec};
pub use poly::{Acc, Poly, RawAcc};
pub use scalar::Scalar;
pub use text::{parse_poly, parse_scalar};
pub use xpoly::XPoly;

/// Binomial coefficient C(n, k) reduced mod p (Lucas).
pub fn binomial_mod_p(mut n: u64, mut k: u64, p: u32) -> u32 {
    let p64 = p as u64;
    let mut acc = 1u64;
    while n > 0 || k > 0 {
        let (ni, ki) = (n % p64, k % p64);
        if ki > ni {
            return 0;
        }
        // small binomial by direct product mod p
        let mut num = 1u64;
        let mut den = 1u64;
        for j in 0..ki {
            num = num * ((ni - j) % p64) % p64;
            den = den * ((j + 1) % p64) % p64;
        }
        let mut inv = 1u64;
        let mut b = den;
        let mut e = p64 - 2;
        while e > 0 {
            if e & 1 == 1 {
                inv = inv * b % p64;
            }
            b = b * b % p64;
            e >>= 1;
        }
        acc = acc * num % p64 * inv % p64;
        n /= p64;
        k /= p64;
    }
    acc as u32
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lucas_matches_pascal() {
        let p = 5u32;
        let mut row = vec![1u64];
        for n in 0..60u64 {
            for k in 0..=n {
                assert_eq!(binomial_mod_p(n, k, p) as u64, row[k as usize] % p as u64, "C({n},{k})");
            }
            let mut next = vec![1u64; row.len() + 1];
            for k in 1..row.len() {
                next[k] = (row[k - 1] + row[k]) % p as u64;
            }
            row = next;
        }
    }
}
