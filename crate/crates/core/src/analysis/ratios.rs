use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{ChainParams, ChainState, EnergyParts};

/// Time-averaged quartic-to-quadratic energy ratios before and after the
/// frequency renormalization.
///
/// After renormalization `H̃2 = K + η²U2` and `H̃4 = H − H̃2`, where `K` is
/// the kinetic and `U2` the harmonic spring energy. `H̃4` is typically
/// negative, so the strength of the residual interaction is its magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearityRatios {
    pub h4_over_h2: f64,
    /// Signed time average of `H̃4/H̃2`.
    pub h4t_over_h2t: f64,
    pub eta: f64,
}

impl NonlinearityRatios {
    /// `|⟨H̃4/H̃2⟩|`, the effective nonlinearity of the renormalized waves.
    pub fn effective_after(&self) -> f64 {
        self.h4t_over_h2t.abs()
    }
}

pub fn nonlinearity_ratios_from_parts(parts: &[EnergyParts], eta: f64) -> Result<NonlinearityRatios> {
    if parts.is_empty() {
        return Err(Error::InsufficientData("no energy samples".into()));
    }
    let eta2 = eta * eta;
    let (mut before, mut after) = (0.0, 0.0);
    for e in parts {
        let total = e.total();
        before += e.quartic / e.h2();
        let h2t = e.kinetic + eta2 * e.harmonic;
        after += (total - h2t) / h2t;
    }
    let m = parts.len() as f64;
    Ok(NonlinearityRatios {
        h4_over_h2: before / m,
        h4t_over_h2t: after / m,
        eta,
    })
}

pub fn nonlinearity_ratios(trajectory: &[ChainState], params: &ChainParams, eta: f64) -> Result<NonlinearityRatios> {
    let parts: Vec<EnergyParts> = trajectory.iter().map(|s| EnergyParts::of(s, params)).collect();
    nonlinearity_ratios_from_parts(&parts, eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::random_initial_state;

    #[test]
    fn linear_chain_has_no_nonlinearity() {
        let params = ChainParams::new(16, 0.0, 5.0).unwrap();
        let traj: Vec<ChainState> = (0..4).map(|s| random_initial_state(&params, s)).collect();
        let r = nonlinearity_ratios(&traj, &params, 1.0).unwrap();
        assert_eq!(r.h4_over_h2, 0.0);
        assert!(r.h4t_over_h2t.abs() < 1e-15);
    }

    #[test]
    fn renormalization_lowers_the_ratio() {
        let params = ChainParams::new(32, 4.0, 40.0).unwrap();
        let traj: Vec<ChainState> = (0..4).map(|s| random_initial_state(&params, s)).collect();
        let r = nonlinearity_ratios(&traj, &params, 1.5).unwrap();
        assert!(r.h4t_over_h2t < r.h4_over_h2);
    }
}
