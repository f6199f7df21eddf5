//! Integer combinatorics shared by the engines and the cost model.

use num_bigint::BigUint;
use num_traits::One;

/// `C(n, k)` as a checked `u128`; `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step.
        let num = u128::from(n - i);
        let den = u128::from(i + 1);
        let g = gcd(acc, den);
        let (a, d) = (acc / g, den / g);
        acc = a.checked_mul(num / d)?;
    }
    Some(acc)
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// `C(n, k)` with arbitrary precision.
pub fn binomial_big(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::ZERO;
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `C(n, k)` as `usize`, or `None` if it does not fit.
pub fn binomial_usize(n: usize, k: usize) -> Option<usize> {
    binomial(n as u64, k as u64).and_then(|b| usize::try_from(b).ok())
}

/// Exact factorial; `None` beyond `20!`.
pub fn factorial(n: u64) -> Option<u64> {
    (1..=n).try_fold(1u64, |acc, i| acc.checked_mul(i))
}

/// `ln(n!)` by direct summation.
pub fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// `prod_i occ_i!` as a float. Exact integers are used while every factor is
/// at most `20!`; otherwise the product is accumulated in log space.
pub fn factorial_product(occupations: &[usize]) -> f64 {
    if occupations.iter().all(|&s| s <= 20) {
        occupations
            .iter()
            .map(|&s| factorial(s as u64).expect("20! fits in u64") as f64)
            .product()
    } else {
        occupations
            .iter()
            .map(|&s| ln_factorial(s as u64))
            .sum::<f64>()
            .exp()
    }
}

/// Number of integer partitions `p(k)` for every `k` in `0..=n`.
pub fn partition_counts(n: usize) -> Vec<u128> {
    let mut p = vec![0u128; n + 1];
    p[0] = 1;
    for part in 1..=n {
        for total in part..=n {
            p[total] += p[total - part];
        }
    }
    p
}
