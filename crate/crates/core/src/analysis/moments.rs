use crate::error::{Error, Result};
use crate::modes::{bare_omega, Dispersion, ModeState};

/// Running second moments of the mode amplitudes.
///
/// `⟨|P_k|²⟩`, `⟨|Q_k|²⟩` and `⟨Im(P_k Q_k*)⟩` determine the time-averaged
/// power of the normal variables for any dispersion chosen after the fact:
/// `|P − iωQ|² = |P|² + ω²|Q|² − 2ω Im(P Q*)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeMoments {
    n: usize,
    count: u64,
    q_sq: Vec<f64>,
    p_sq: Vec<f64>,
    cross: Vec<f64>,
}

impl ModeMoments {
    pub fn new(n: usize) -> Self {
        ModeMoments {
            n,
            count: 0,
            q_sq: vec![0.0; n],
            p_sq: vec![0.0; n],
            cross: vec![0.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn push(&mut self, modes: &ModeState) {
        assert_eq!(modes.len(), self.n, "mode record length mismatch");
        for k in 0..self.n {
            let q = modes.q[k];
            let p = modes.p[k];
            self.q_sq[k] += q.norm_sqr();
            self.p_sq[k] += p.norm_sqr();
            self.cross[k] += (p * q.conj()).im;
        }
        self.count += 1;
    }

    fn ensure_data(&self) -> Result<f64> {
        if self.count == 0 {
            return Err(Error::InsufficientData("no mode samples accumulated".into()));
        }
        Ok(1.0 / self.count as f64)
    }

    /// `⟨|Q_k|²⟩` for `k = 1..N` at index `k − 1`.
    pub fn mean_q_sq(&self) -> Result<Vec<f64>> {
        let inv = self.ensure_data()?;
        Ok(self.q_sq[1..].iter().map(|s| s * inv).collect())
    }

    pub fn mean_p_sq(&self) -> Result<Vec<f64>> {
        let inv = self.ensure_data()?;
        Ok(self.p_sq[1..].iter().map(|s| s * inv).collect())
    }

    /// `⟨|a_k|²⟩` for the given dispersion, index `k − 1`.
    pub fn mean_sq_normal(&self, dispersion: Dispersion) -> Result<Vec<f64>> {
        let inv = self.ensure_data()?;
        Ok((1..self.n)
            .map(|k| {
                let w = dispersion.omega(self.n, k);
                inv * (self.p_sq[k] + w * w * self.q_sq[k] - 2.0 * w * self.cross[k]) / (2.0 * w)
            })
            .collect())
    }

    /// Time-averaged harmonic mode energies `½(|P_k|² + ω_k²|Q_k|²)`.
    pub fn mode_energies(&self) -> Result<Vec<f64>> {
        let inv = self.ensure_data()?;
        Ok((1..self.n)
            .map(|k| {
                let w = bare_omega(self.n, k);
                0.5 * inv * (self.p_sq[k] + w * w * self.q_sq[k])
            })
            .collect())
    }

    pub fn merge(&mut self, other: &ModeMoments) {
        assert_eq!(self.n, other.n, "cannot merge moments of different chains");
        self.count += other.count;
        for k in 0..self.n {
            self.q_sq[k] += other.q_sq[k];
            self.p_sq[k] += other.p_sq[k];
            self.cross[k] += other.cross[k];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{random_initial_state, ChainParams};
    use crate::modes::{normal_vars, to_modes};
    use approx::assert_relative_eq;

    #[test]
    fn moments_reproduce_direct_normal_power() {
        let params = ChainParams::new(16, 1.0, 10.0).unwrap();
        let mut moments = ModeMoments::new(16);
        let mut direct = vec![0.0; 15];
        let disp = Dispersion::renormalized(1.3).unwrap();
        for seed in 0..5 {
            let modes = to_modes(&random_initial_state(&params, seed));
            moments.push(&modes);
            let a = normal_vars(&modes, &disp.table(16)).unwrap();
            for (d, z) in direct.iter_mut().zip(&a) {
                *d += z.norm_sqr() / 5.0;
            }
        }
        let via = moments.mean_sq_normal(disp).unwrap();
        for (x, y) in via.iter().zip(&direct) {
            assert_relative_eq!(x, y, max_relative = 1e-12);
        }
    }

    #[test]
    fn empty_moments_are_an_error() {
        assert!(ModeMoments::new(8).mean_q_sq().is_err());
    }
}
