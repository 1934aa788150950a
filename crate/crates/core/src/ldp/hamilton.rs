use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::sde::SdeModel;

/// Position `phi` and conjugate momentum `psi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianState {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
}

impl HamiltonianState {
    pub fn new(phi: Vec<f64>, psi: Vec<f64>) -> Result<Self> {
        if phi.len() != psi.len() {
            return Err(invalid("phi and psi differ in dimension"));
        }
        if phi.iter().chain(&psi).any(|v| !v.is_finite()) {
            return Err(invalid("Hamiltonian state must be finite"));
        }
        Ok(Self { phi, psi })
    }
}

/// `H(φ, ψ) = ½⟨ψ, D(φ)ψ⟩ + ⟨ψ, f(φ)⟩`.
pub fn hamiltonian(model: &SdeModel, state: &HamiltonianState) -> f64 {
    h_value(model, &state.phi, &state.psi)
}

fn h_value(model: &SdeModel, phi: &[f64], psi: &[f64]) -> f64 {
    let n = phi.len();
    let d = model.diffusion_matrix(phi);
    let f = model.drift(phi);
    let mut h = 0.0;
    for i in 0..n {
        h += psi[i] * f[i];
        for j in 0..n {
            h += 0.5 * psi[i] * d[i * n + j] * psi[j];
        }
    }
    h
}

/// Finite-difference step for `∇_φ H`.
pub const FLOW_FD_STEP: f64 = 1e-5;

/// `(φ̇, ψ̇) = (Dψ + f, −∇_φ H)`.
fn vector_field(model: &SdeModel, phi: &[f64], psi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = phi.len();
    let d = model.diffusion_matrix(phi);
    let f = model.drift(phi);
    let dphi: Vec<f64> = (0..n)
        .map(|i| f[i] + (0..n).map(|j| d[i * n + j] * psi[j]).sum::<f64>())
        .collect();
    let mut probe = phi.to_vec();
    let dpsi = (0..n)
        .map(|j| {
            let s = FLOW_FD_STEP * (1.0 + phi[j].abs());
            probe[j] = phi[j] + s;
            let hp = h_value(model, &probe, psi);
            probe[j] = phi[j] - s;
            let hm = h_value(model, &probe, psi);
            probe[j] = phi[j];
            -(hp - hm) / (2.0 * s)
        })
        .collect();
    (dphi, dpsi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonTrajectory {
    pub states: Vec<HamiltonianState>,
    /// `H` at every node.
    pub energy: Vec<f64>,
    /// `max_k |H_k − H_0|`.
    pub max_drift: f64,
    /// Set when the drift exceeds `1e-6 (1 + |H_0|)`.
    pub flagged: bool,
}

/// Classical RK4 integration of Hamilton's equations over `[0, T]`.
pub fn hamilton_flow(
    model: &SdeModel,
    state0: &HamiltonianState,
    t: f64,
    n_steps: usize,
) -> Result<HamiltonTrajectory> {
    if state0.phi.len() != model.dim {
        return Err(invalid("state dimension differs from the model"));
    }
    if !(t > 0.0) || n_steps == 0 {
        return Err(invalid("need T > 0 and n_steps ≥ 1"));
    }
    let h = t / n_steps as f64;
    let n = model.dim;
    let axpy = |x: &[f64], k: &[f64], c: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + c * b).collect() };
    let mut states = vec![state0.clone()];
    let h0 = hamiltonian(model, state0);
    let mut energy = vec![h0];
    let mut max_drift = 0.0f64;
    let (mut phi, mut psi) = (state0.phi.clone(), state0.psi.clone());
    for _ in 0..n_steps {
        let (a1, b1) = vector_field(model, &phi, &psi);
        let (a2, b2) = vector_field(model, &axpy(&phi, &a1, 0.5 * h), &axpy(&psi, &b1, 0.5 * h));
        let (a3, b3) = vector_field(model, &axpy(&phi, &a2, 0.5 * h), &axpy(&psi, &b2, 0.5 * h));
        let (a4, b4) = vector_field(model, &axpy(&phi, &a3, h), &axpy(&psi, &b3, h));
        for i in 0..n {
            phi[i] += h / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
            psi[i] += h / 6.0 * (b1[i] + 2.0 * b2[i] + 2.0 * b3[i] + b4[i]);
        }
        let state = HamiltonianState::new(phi.clone(), psi.clone())?;
        let e = hamiltonian(model, &state);
        max_drift = max_drift.max((e - h0).abs());
        energy.push(e);
        states.push(state);
    }
    Ok(HamiltonTrajectory {
        states,
        energy,
        max_drift,
        flagged: !(max_drift <= 1e-6 * (1.0 + h0.abs())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::Potential;

    #[test]
    fn zero_momentum_gives_the_deterministic_flow() {
        let m = SdeModel::ornstein_uhlenbeck();
        let s = HamiltonianState::new(vec![1.5], vec![0.0]).unwrap();
        assert_eq!(hamiltonian(&m, &s), 0.0);
        let tr = hamilton_flow(&m, &s, 1.0, 200).unwrap();
        let last = tr.states.last().unwrap();
        assert!((last.phi[0] - 1.5 * (-1.0f64).exp()).abs() < 1e-9);
        assert_eq!(last.psi[0], 0.0);
    }

    #[test]
    fn ou_conserves_energy() {
        let m = SdeModel::ornstein_uhlenbeck();
        let s = HamiltonianState::new(vec![0.3], vec![0.8]).unwrap();
        assert!((hamiltonian(&m, &s) - (0.32 - 0.24)).abs() < 1e-15);
        let tr = hamilton_flow(&m, &s, 5.0, 5000).unwrap();
        assert!(tr.max_drift < 1e-8, "{}", tr.max_drift);
        assert!(!tr.flagged);
    }

    #[test]
    fn reversed_gradient_flow_lies_on_zero_level() {
        // D = 2 for the √2-normalised gradient system, so ψ = ∇U gives H = 0
        // and with D = 1 the momentum is 2∇U
        let pot = Potential::double_well();
        let m = SdeModel::gradient_with_noise(pot.clone(), 1, 1.0);
        for x in [-1.3, -0.9, -0.4, 0.0, 0.6] {
            let s = HamiltonianState::new(vec![x], pot.grad(&[x]).iter().map(|g| 2.0 * g).collect()).unwrap();
            assert!(hamiltonian(&m, &s).abs() < 1e-8);
        }
    }

    #[test]
    fn large_step_is_flagged() {
        let m = SdeModel::ornstein_uhlenbeck();
        let s = HamiltonianState::new(vec![0.3], vec![0.8]).unwrap();
        let tr = hamilton_flow(&m, &s, 5.0, 10).unwrap();
        assert!(tr.flagged);
    }

    #[test]
    fn rejects_mismatched_state() {
        assert!(HamiltonianState::new(vec![0.0], vec![]).is_err());
        assert!(HamiltonianState::new(vec![f64::NAN], vec![0.0]).is_err());
    }
}
