use crate::error::{Error, Result};

/// Number of ordered quartets `(k1, k2, k3, k4)`, each in `1..N`, with
/// `k1 + k2 = k3 + k4` and `|ω_{k1} + ω_{k2} − ω_{k3} − ω_{k4}| < δ`.
///
/// `omega` holds `ω_k` at index `k − 1`. Sums are compared as integers, so
/// umklapp quartets (`k1 + k2 = k3 + k4 ± N`) are not counted.
pub fn near_resonance_count(n: usize, omega: &[f64], delta: f64) -> Result<u64> {
    if !(delta > 0.0) {
        return Err(Error::param(format!("resonance width must be positive, got {delta}")));
    }
    if omega.len() + 1 != n {
        return Err(Error::param(format!(
            "frequency table has {} entries, expected {}",
            omega.len(),
            n - 1
        )));
    }
    let w = |k: usize| omega[k - 1];
    let mut count = 0u64;
    for k1 in 1..n {
        for k2 in 1..n {
            let sum = k1 + k2;
            let left = w(k1) + w(k2);
            let lo = sum.saturating_sub(n - 1).max(1);
            let hi = (sum - 1).min(n - 1);
            for k3 in lo..=hi {
                let k4 = sum - k3;
                if (left - w(k3) - w(k4)).abs() < delta {
                    count += 1;
                }
            }
        }
    }
    Ok(count)
}

/// Ordered quartets with `{k1, k2} = {k3, k4}`.
pub fn trivial_quartet_count(n: usize) -> u64 {
    let m = (n - 1) as u64;
    m + 2 * m * (m - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::Dispersion;

    fn exhaustive(n: usize, omega: &[f64], delta: f64) -> u64 {
        let mut c = 0;
        for a in 1..n {
            for b in 1..n {
                for c3 in 1..n {
                    for d in 1..n {
                        if a + b == c3 + d && (omega[a - 1] + omega[b - 1] - omega[c3 - 1] - omega[d - 1]).abs() < delta {
                            c += 1;
                        }
                    }
                }
            }
        }
        c
    }

    #[test]
    fn matches_exhaustive_enumeration() {
        let omega = Dispersion::BARE.table(8);
        for delta in [0.1, 0.5, 1.0] {
            assert_eq!(near_resonance_count(8, &omega, delta).unwrap(), exhaustive(8, &omega, delta));
        }
    }

    #[test]
    fn vanishing_width_leaves_only_trivial_quartets() {
        for n in [8, 16, 64] {
            let omega = Dispersion::BARE.table(n);
            assert_eq!(near_resonance_count(n, &omega, 1e-9).unwrap(), trivial_quartet_count(n));
        }
    }

    #[test]
    fn wide_window_counts_every_constrained_quartet() {
        let n = 16;
        let omega = Dispersion::BARE.table(n);
        let all: u64 = (2..=2 * (n - 1))
            .map(|s| {
                let c = (1..n).filter(|k| s > *k && s - k < n).count() as u64;
                c * c
            })
            .sum();
        assert_eq!(near_resonance_count(n, &omega, 4.0 + 1e-9).unwrap(), all);
        assert!(near_resonance_count(n, &omega, 0.0).is_err());
    }
}
