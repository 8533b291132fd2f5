//! Seeded random inputs for the checkers and experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `m` i.i.d. uniform draws from `[lo, hi)`.
pub fn uniform_vec(rng: &mut impl Rng, m: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..m).map(|_| rng.gen_range(lo..hi)).collect()
}

/// A probability vector with every weight at least `floor`.
///
/// Requires `floor · m < 1`.
pub fn simplex_with_floor(rng: &mut impl Rng, m: usize, floor: f64) -> Vec<f64> {
    assert!(floor * (m as f64) < 1.0, "floor too large for {m} points");
    let raw = uniform_vec(rng, m, 0.0, 1.0);
    let total: f64 = raw.iter().sum();
    let free = 1.0 - floor * m as f64;
    raw.iter().map(|r| floor + free * r / total).collect()
}

/// Rate values from `[0, hi]` with a fraction of `+∞` entries and at least one
/// exact zero.
pub fn rate_vec(rng: &mut impl Rng, m: usize, hi: f64, infinite_fraction: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..m)
        .map(|_| {
            if rng.gen_bool(infinite_fraction) {
                f64::INFINITY
            } else {
                rng.gen_range(0.0..=hi)
            }
        })
        .collect();
    let zero_at = rng.gen_range(0..m);
    v[zero_at] = 0.0;
    let min = v
        .iter()
        .copied()
        .filter(|x| x.is_finite())
        .fold(f64::INFINITY, f64::min);
    v.iter_mut().filter(|x| x.is_finite()).for_each(|x| *x -= min);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_is_respected() {
        let mut r = rng(3);
        for m in 1..20 {
            let w = simplex_with_floor(&mut r, m, 0.01);
            assert!(w.iter().all(|x| *x >= 0.01));
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rates_have_zero_minimum() {
        let mut r = rng(9);
        for _ in 0..100 {
            let v = rate_vec(&mut r, 7, 10.0, 0.3);
            assert!(v.contains(&0.0));
            assert!(v.iter().all(|x| *x >= 0.0));
        }
    }

    #[test]
    fn same_seed_same_stream() {
        assert_eq!(uniform_vec(&mut rng(5), 4, -1.0, 1.0), uniform_vec(&mut rng(5), 4, -1.0, 1.0));
    }
}
