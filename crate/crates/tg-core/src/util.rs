//! Shared numeric helpers: exactly rounded summation, correlation
//! coefficients, and deterministic seed derivation.

use rand::Rng;

/// Exactly rounded sum of a slice of finite doubles.
///
/// Ports the partials algorithm used by CPython's `math.fsum`: the result is
/// the true real-number sum rounded once, so it does not depend on the order
/// of the inputs. RDM computations rely on this for exact invariance under
/// feature permutations.
pub fn exact_sum(values: &[f64]) -> f64 {
    let mut partials: Vec<f64> = Vec::with_capacity(8);
    for &value in values {
        debug_assert!(value.is_finite());
        let mut x = value;
        let mut i = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        partials.truncate(i);
        partials.push(x);
    }

    // Sum partials from largest to smallest with a round-half-even fixup.
    let mut n = partials.len();
    if n == 0 {
        return 0.0;
    }
    n -= 1;
    let mut hi = partials[n];
    let mut lo = 0.0;
    while n > 0 {
        let x = hi;
        n -= 1;
        let y = partials[n];
        hi = x + y;
        let yr = hi - x;
        lo = y - yr;
        if lo != 0.0 {
            break;
        }
    }
    if n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0)) {
        let y = lo * 2.0;
        let x = hi + y;
        if y == x - hi {
            hi = x;
        }
    }
    hi
}

/// Exactly rounded mean.
pub fn exact_mean(values: &[f64]) -> f64 {
    exact_sum(values) / values.len() as f64
}

/// Pearson correlation coefficient, `None` when either input has zero
/// variance. Uses exact summation so the result is independent of element
/// order.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "pearson inputs must have equal length");
    let n = x.len();
    if n < 2 {
        return None;
    }
    let mx = exact_mean(x);
    let my = exact_mean(y);
    let cx: Vec<f64> = x.iter().map(|v| v - mx).collect();
    let cy: Vec<f64> = y.iter().map(|v| v - my).collect();
    let sxx = exact_sum(&cx.iter().map(|v| v * v).collect::<Vec<_>>());
    let syy = exact_sum(&cy.iter().map(|v| v * v).collect::<Vec<_>>());
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    let sxy = exact_sum(&cx.iter().zip(&cy).map(|(a, b)| a * b).collect::<Vec<_>>());
    // sqrt(sxx*syy) rather than sqrt(sxx)*sqrt(syy): identical inputs then
    // yield exactly 1.0 (sqrt(x*x) == |x| in IEEE round-to-nearest).
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Ranks with ties assigned their average rank (1-based).
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation, `None` when either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&average_ranks(x), &average_ranks(y))
}

/// SplitMix64 step; used to derive independent substream seeds from a base
/// seed and an index without sharing RNG state across samples.
pub fn mix_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Standard normal draw via Box-Muller; keeps the sampling scheme pinned to
/// this crate rather than a distribution crate's internals.
pub fn sample_normal<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u1: f64 = rng.random();
        if u1 <= f64::MIN_POSITIVE {
            continue;
        }
        let u2: f64 = rng.random();
        return (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
    }
}

/// Hex SHA-256 of a byte string; used for probe-set hashes and state digests.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn exact_sum_is_order_independent() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let values: Vec<f64> = (0..500).map(|_| sample_normal(&mut rng) * 1e6).collect();
        let forward = exact_sum(&values);
        let mut reversed = values.clone();
        reversed.reverse();
        assert_eq!(forward, exact_sum(&reversed));
        let mut shuffled = values.clone();
        for i in (1..shuffled.len()).rev() {
            let j = rng.random_range(0..=i);
            shuffled.swap(i, j);
        }
        assert_eq!(forward, exact_sum(&shuffled));
    }

    #[test]
    fn exact_sum_handles_cancellation() {
        assert_eq!(exact_sum(&[1e16, 1.0, -1e16]), 1.0);
        assert_eq!(exact_sum(&[]), 0.0);
    }

    #[test]
    fn pearson_basic_cases() {
        let x = [1.0, 2.0, 3.0];
        assert_eq!(pearson(&x, &[2.0, 4.0, 6.0]), Some(1.0));
        assert_eq!(pearson(&x, &[3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(pearson(&x, &[5.0, 5.0, 5.0]), None);
    }

    #[test]
    fn spearman_is_rank_based() {
        // Monotone but nonlinear relation still ranks perfectly.
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 10.0, 100.0, 1000.0];
        assert_eq!(spearman(&x, &y), Some(1.0));
    }

    #[test]
    fn average_ranks_ties() {
        assert_eq!(average_ranks(&[2.0, 1.0, 2.0]), vec![2.5, 1.0, 2.5]);
    }

    #[test]
    fn mix_seed_separates_streams() {
        assert_ne!(mix_seed(1, 0), mix_seed(1, 1));
        assert_ne!(mix_seed(1, 0), mix_seed(2, 0));
        assert_eq!(mix_seed(3, 4), mix_seed(3, 4));
    }
}
