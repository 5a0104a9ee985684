//! Lexicographic combination/permutation stepping and binomial counts.

/// First `k`-combination of `[n]` in lexicographic order.
pub fn first_combination(k: usize) -> Vec<usize> {
    (0..k).collect()
}

/// Advances `c` (strictly increasing, entries `< n`) to the next
/// combination in lexicographic order. Returns `false` after the last one.
pub fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Advances `p` to the next permutation in lexicographic order. Returns
/// `false` (leaving `p` unspecified) once `p` was the last permutation.
pub fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// All `k`-combinations of `[n]`, lexicographic.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k > n {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut c = first_combination(k);
    loop {
        out.push(c.clone());
        if k == 0 || !next_combination(&mut c, n) {
            break;
        }
    }
    out
}

/// Exact `binom(n, k)`, saturating at `u128::MAX`.
pub fn binom_u128(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

pub fn factorial_u128(m: usize) -> u128 {
    (1..=m as u128).try_fold(1u128, |a, b| a.checked_mul(b)).unwrap_or(u128::MAX)
}

pub fn pairs(k: usize) -> usize {
    k * k.saturating_sub(1) / 2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combination_counts() {
        assert_eq!(combinations(5, 2).len(), 10);
        assert_eq!(combinations(4, 0), vec![Vec::<usize>::new()]);
        assert_eq!(combinations(4, 4), vec![vec![0, 1, 2, 3]]);
        assert!(combinations(3, 4).is_empty());
        let c = combinations(5, 3);
        assert!(c.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn permutation_order() {
        let mut p = vec![0, 1, 2];
        let mut seen = vec![p.clone()];
        while next_permutation(&mut p) {
            seen.push(p.clone());
        }
        assert_eq!(seen.len(), 6);
        assert!(seen.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn binomials() {
        assert_eq!(binom_u128(25, 4), 12650);
        assert_eq!(binom_u128(50, 25), 126_410_606_437_752);
        assert_eq!(binom_u128(3, 5), 0);
        assert_eq!(factorial_u128(5), 120);
        assert_eq!(factorial_u128(40), u128::MAX);
    }
}
