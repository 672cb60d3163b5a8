//! Closed-form propagator of a two-level system coupled through σ_z to a
//! bath of oscillators, its driven variant, and the induced pure dephasing.
//!
//! With φ_k(t) = (ω/2)(g_k/ω_k)(1 − e^{−iω_k t}) the kernel is
//!
//! ```text
//! exp{Σ α*_k α′_k e^{−iω_k t}} · e^A · diag(e^B, e^{−B})
//! A = i(ω/2)² Σ g_k²/ω_k · t − (ω/2)² Σ g_k²/ω_k² (1 − e^{−iω_k t})
//! B = Σ φ_k (α*_k + α′_k) + iωt/2
//! ```
//!
//! in (down, up) order. The driven model multiplies an extra free-mode factor
//! exp{ν*ν′ e^{−iΩt}} and replaces ωt/2 in B by (ω − Ω)t/2.

use crate::error::{Error, Result};
use crate::linalg::{C64, I, Mat2};
use crate::model::{BathKind, CoherentVector, Model, Propagator2x2};

/// Scalar pieces of the QND kernel at a given time and label pair.
#[derive(Debug, Clone, PartialEq)]
pub struct OscQndAmplitudes {
    pub a: C64,
    pub b: C64,
    pub phi: Vec<C64>,
    /// B with the drive detuning; `None` when the model has no drive.
    pub b2: Option<C64>,
}

/// Driven propagator: the oscillator-bath kernel times the free drive-mode factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrivenPropagator {
    pub propagator: Propagator2x2,
    /// exp{ν*ν′ e^{−iΩt}}
    pub drive_factor: C64,
}

impl DrivenPropagator {
    pub fn kernel_matrix(&self) -> Mat2 {
        self.propagator.kernel_matrix() * self.drive_factor
    }
}

fn phi_unchecked(omega: f64, coupling: f64, frequency: f64, t: f64) -> C64 {
    let e = (-I * frequency * t).exp();
    (1.0 - e) * (0.5 * omega * coupling / frequency)
}

/// φ_k(t) = (ω/2)(g_k/ω_k)(1 − e^{−iω_k t}).
pub fn phase_phi(model: &Model, k: usize, t: f64) -> Result<C64> {
    let mode = model.mode(k)?;
    Ok(phi_unchecked(model.omega(), mode.coupling, mode.frequency, t))
}

/// A(t); purely a function of time, shared by both diagonal amplitudes.
pub fn amplitude_a(model: &Model, t: f64) -> C64 {
    model.modes().iter().map(|m| mode_amplitude_a(model.omega(), m.coupling, m.frequency, t)).sum()
}

fn mode_amplitude_a(omega: f64, coupling: f64, frequency: f64, t: f64) -> C64 {
    let lam2 = (0.5 * omega * coupling).powi(2);
    let e = (-I * frequency * t).exp();
    I * (lam2 / frequency * t) - (1.0 - e) * (lam2 / (frequency * frequency))
}

fn label_sum(model: &Model, t: f64, alpha_star: &CoherentVector, alpha_prime: &CoherentVector) -> C64 {
    model
        .modes()
        .iter()
        .enumerate()
        .map(|(k, m)| phi_unchecked(model.omega(), m.coupling, m.frequency, t) * (alpha_star[k] + alpha_prime[k]))
        .sum()
}

fn check_pair(model: &Model, alpha_star: &CoherentVector, alpha_prime: &CoherentVector) -> Result<()> {
    model.require_kind(BathKind::Oscillator)?;
    model.check_labels(alpha_star)?;
    model.check_labels(alpha_prime)
}

/// B(t) = Σ φ_k(α*_k + α′_k) + iωt/2.
pub fn amplitude_b(
    model: &Model,
    t: f64,
    alpha_star: &CoherentVector,
    alpha_prime: &CoherentVector,
) -> Result<C64> {
    check_pair(model, alpha_star, alpha_prime)?;
    Ok(label_sum(model, t, alpha_star, alpha_prime) + I * (0.5 * model.omega() * t))
}

/// B₂(t) = Σ φ_k(α*_k + α′_k) + i(ω − Ω)t/2.
pub fn amplitude_b2(
    model: &Model,
    t: f64,
    alpha_star: &CoherentVector,
    alpha_prime: &CoherentVector,
) -> Result<C64> {
    check_pair(model, alpha_star, alpha_prime)?;
    let drive = model.drive_omega().ok_or(Error::MissingDrive)?;
    Ok(label_sum(model, t, alpha_star, alpha_prime) + I * (0.5 * (model.omega() - drive) * t))
}

pub fn amplitudes(
    model: &Model,
    t: f64,
    alpha_star: &CoherentVector,
    alpha_prime: &CoherentVector,
) -> Result<OscQndAmplitudes> {
    let b = amplitude_b(model, t, alpha_star, alpha_prime)?;
    let b2 = match model.drive_omega() {
        Some(_) => Some(amplitude_b2(model, t, alpha_star, alpha_prime)?),
        None => None,
    };
    let phi = model
        .modes()
        .iter()
        .map(|m| phi_unchecked(model.omega(), m.coupling, m.frequency, t))
        .collect();
    Ok(OscQndAmplitudes { a: amplitude_a(model, t), b, phi, b2 })
}

/// exp{Σ α*_k α′_k e^{−iω_k t}}
pub fn free_bath_kernel(model: &Model, t: f64, alpha_star: &CoherentVector, alpha_prime: &CoherentVector) -> C64 {
    model
        .modes()
        .iter()
        .enumerate()
        .map(|(k, m)| alpha_star[k] * alpha_prime[k] * (-I * m.frequency * t).exp())
        .sum::<C64>()
        .exp()
}

fn squeeze_amplitudes(a: C64, b: C64) -> Mat2 {
    let zero = C64::new(0.0, 0.0);
    Mat2::new((a + b).exp(), zero, zero, (a - b).exp())
}

/// Kernel of the undriven QND model. Off-diagonal amplitudes are exactly zero.
pub fn propagator_qnd(
    model: &Model,
    t: f64,
    alpha_star: &CoherentVector,
    alpha_prime: &CoherentVector,
) -> Result<Propagator2x2> {
    let b = amplitude_b(model, t, alpha_star, alpha_prime)?;
    Ok(Propagator2x2 {
        bath_kernel: free_bath_kernel(model, t, alpha_star, alpha_prime),
        amplitudes: squeeze_amplitudes(amplitude_a(model, t), b),
    })
}

/// Kernel of the driven model; `nu_star`, `nu_prime` label the drive mode.
pub fn propagator_driven(
    model: &Model,
    t: f64,
    alpha_star: &CoherentVector,
    alpha_prime: &CoherentVector,
    nu_star: C64,
    nu_prime: C64,
) -> Result<DrivenPropagator> {
    let drive = model.drive_omega().ok_or(Error::MissingDrive)?;
    let b2 = amplitude_b2(model, t, alpha_star, alpha_prime)?;
    Ok(DrivenPropagator {
        propagator: Propagator2x2 {
            bath_kernel: free_bath_kernel(model, t, alpha_star, alpha_prime),
            amplitudes: squeeze_amplitudes(amplitude_a(model, t), b2),
        },
        drive_factor: (nu_star * nu_prime * (-I * drive * t).exp()).exp(),
    })
}

/// Coherence ratio r(t) = ρ_01(t)/ρ_01(0) of the reduced two-level state when
/// the bath starts in the product coherent state |μ⟩ (μ = 0 is the vacuum).
///
/// Each sector maps |μ⟩ to a coherent state: the kernel's reproducing property
/// gives U_j|μ⟩⟩ = e^{A ± φμ ± iωt/2} |μe^{−iω_k t} ± φ⟩⟩, and r is the overlap
/// of the two sector images. Per mode this is
/// exp{2 Re A_k − |φ_k|² + 2i Im(φ_k μ_k) + 2i Im(μ_k* e^{iω_k t} φ_k)},
/// times the bare phase e^{iωt}.
pub fn dephasing_factor(model: &Model, t: f64, bath_initial: &CoherentVector) -> Result<C64> {
    model.require_kind(BathKind::Oscillator)?;
    model.check_labels(bath_initial)?;
    let omega = model.omega();
    let exponent: C64 = model
        .modes()
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let phi = phi_unchecked(omega, m.coupling, m.frequency, t);
            let a_k = mode_amplitude_a(omega, m.coupling, m.frequency, t);
            let mu = bath_initial[k];
            let back = (I * m.frequency * t).exp();
            let cross = phi * mu + mu.conj() * back * phi;
            C64::new(2.0 * a_k.re - phi.norm_sqr(), 2.0 * cross.im)
        })
        .sum();
    Ok((exponent + I * omega * t).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, max_abs_diff2};
    use crate::model::{validate_model, BathMode, BathSpec, SystemSpec};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn model(omega: f64, modes: &[(f64, f64)]) -> Model {
        let modes = modes.iter().map(|&(w, g)| BathMode::new(w, g)).collect();
        validate_model(SystemSpec::new(omega), BathSpec::oscillators(modes)).unwrap()
    }

    fn labels(v: &[C64]) -> CoherentVector {
        CoherentVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn phi_vanishes_at_zero_and_full_period() {
        let m = model(2.0, &[(1.0, 0.5)]);
        assert_eq!(phase_phi(&m, 0, 0.0).unwrap(), c(0.0, 0.0));
        assert!(phase_phi(&m, 0, 2.0 * PI).unwrap().norm() < 1e-15);
    }

    #[test]
    fn phi_half_period() {
        // (ω/2)(g/ω_k)(1 − e^{−iπ}) = 0.5 · 2 = 1
        let m = model(2.0, &[(1.0, 0.5)]);
        let v = phase_phi(&m, 0, PI).unwrap();
        assert!((v - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn phi_rejects_bad_index() {
        let m = model(2.0, &[(1.0, 0.5)]);
        assert_eq!(phase_phi(&m, 1, 0.3), Err(Error::ModeIndex { index: 1, modes: 1 }));
    }

    #[test]
    fn a_vanishes_at_zero_and_for_zero_coupling() {
        let m = model(1.0, &[(1.0, 0.2), (1.7, 0.1)]);
        assert_eq!(amplitude_a(&m, 0.0), c(0.0, 0.0));
        let free = model(1.0, &[(1.0, 0.0), (1.7, 0.0)]);
        for t in [0.3, 1.0, 5.0] {
            assert_eq!(amplitude_a(&free, t), c(0.0, 0.0));
        }
    }

    #[test]
    fn a_has_nonpositive_real_part() {
        let m = model(1.5, &[(0.6, 0.3), (2.5, 0.2)]);
        for i in 0..200 {
            let t = i as f64 * 0.07;
            assert!(amplitude_a(&m, t).re <= 0.0);
        }
    }

    #[test]
    fn b_free_phase_only_for_zero_labels() {
        let m = model(1.3, &[(1.0, 0.2)]);
        let z = CoherentVector::zeros(1);
        let b = amplitude_b(&m, 0.7, &z, &z).unwrap();
        assert!((b - c(0.0, 1.3 * 0.7 / 2.0)).norm() < 1e-15);
        assert_eq!(amplitude_b(&m, 0.0, &labels(&[c(0.3, 0.0)]), &z).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn b_rejects_label_mismatch() {
        let m = model(1.0, &[(1.0, 0.2)]);
        let bad = CoherentVector::zeros(2);
        assert!(matches!(amplitude_b(&m, 1.0, &bad, &bad), Err(Error::LabelLength { .. })));
    }

    #[test]
    fn propagator_is_diagonal_and_identity_at_zero() {
        let m = model(1.0, &[(1.0, 0.15), (1.7, 0.1)]);
        let a = labels(&[c(0.2, 0.0), c(-0.1, 0.0)]);
        let b = labels(&[c(0.0, 0.1), c(0.3, 0.0)]);
        let p0 = propagator_qnd(&m, 0.0, &a, &b).unwrap();
        assert!(max_abs_diff2(&p0.amplitudes, &Mat2::identity()) < 1e-15);
        let expected = (a[0] * b[0] + a[1] * b[1]).exp();
        assert!((p0.bath_kernel - expected).norm() < 1e-15);
        for t in [0.5, 1.0, 2.0] {
            let p = propagator_qnd(&m, t, &a, &b).unwrap();
            assert_eq!(p.amplitudes[(0, 1)], c(0.0, 0.0));
            assert_eq!(p.amplitudes[(1, 0)], c(0.0, 0.0));
        }
    }

    #[test]
    fn determinant_is_exp_two_a() {
        let m = model(1.2, &[(0.8, 0.25), (2.0, 0.1)]);
        let a = labels(&[c(0.2, 0.1), c(-0.3, 0.0)]);
        let b = labels(&[c(0.0, 0.4), c(0.1, -0.2)]);
        for t in [0.0, 0.4, 1.9, 3.3] {
            let p = propagator_qnd(&m, t, &a, &b).unwrap();
            let det = p.amplitudes.determinant();
            let expected = (amplitude_a(&m, t) * 2.0).exp();
            assert!((det - expected).norm() <= 1e-12 * expected.norm());
        }
    }

    #[test]
    fn periodic_times_give_pure_phases() {
        // ω_k t multiples of 2π for both modes
        let m = model(1.0, &[(1.0, 0.3), (2.0, 0.2)]);
        let t = 2.0 * PI;
        let a = labels(&[c(0.2, 0.1), c(-0.3, 0.0)]);
        let p = propagator_qnd(&m, t, &a, &a).unwrap();
        for k in 0..2 {
            assert!(phase_phi(&m, k, t).unwrap().norm() < 1e-14);
        }
        assert_relative_eq!(amplitude_a(&m, t).exp().norm(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(p.amplitudes[(0, 0)].norm(), 1.0, epsilon = 1e-13);
        assert_relative_eq!(p.amplitudes[(1, 1)].norm(), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn free_bath_amplitudes_compose() {
        let m = model(1.4, &[(1.0, 0.0), (0.6, 0.0)]);
        let a = labels(&[c(0.2, 0.1), c(-0.3, 0.0)]);
        let b = labels(&[c(0.1, 0.0), c(0.0, 0.2)]);
        let (t1, t2) = (0.7, 1.9);
        let u = |t| propagator_qnd(&m, t, &a, &b).unwrap().amplitudes;
        assert!(max_abs_diff2(&u(t1 + t2), &(u(t1) * u(t2))) < 1e-14);
    }

    #[test]
    fn driven_reduces_to_undriven_without_drive() {
        let bath = BathSpec::oscillators(vec![BathMode::new(1.0, 0.2)]);
        let plain = validate_model(SystemSpec::new(1.0), bath.clone()).unwrap();
        let driven = validate_model(SystemSpec::driven(1.0, 0.0), bath).unwrap();
        let a = labels(&[c(0.3, 0.0)]);
        let b = labels(&[c(0.0, -0.1)]);
        let p = propagator_qnd(&plain, 1.3, &a, &b).unwrap();
        let d = propagator_driven(&driven, 1.3, &a, &b, c(0.0, 0.0), c(0.0, 0.0)).unwrap();
        assert_eq!(d.drive_factor, c(1.0, 0.0));
        assert_eq!(d.propagator, p);
    }

    #[test]
    fn resonant_drive_cancels_spin_phase() {
        let m = validate_model(
            SystemSpec::driven(1.3, 1.3),
            BathSpec::oscillators(vec![BathMode::new(0.9, 0.2)]),
        )
        .unwrap();
        let z = CoherentVector::zeros(1);
        for t in [0.5, 2.0, 7.0] {
            assert_eq!(amplitude_b2(&m, t, &z, &z).unwrap(), c(0.0, 0.0));
        }
    }

    #[test]
    fn driven_requires_drive_frequency() {
        let m = model(1.0, &[(1.0, 0.2)]);
        let z = CoherentVector::zeros(1);
        assert_eq!(
            propagator_driven(&m, 1.0, &z, &z, c(0.0, 0.0), c(0.0, 0.0)).unwrap_err(),
            Error::MissingDrive
        );
    }

    #[test]
    fn dephasing_trivial_limits() {
        let m = model(1.1, &[(1.0, 0.3)]);
        let mu = labels(&[c(0.4, -0.2)]);
        assert!((dephasing_factor(&m, 0.0, &mu).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        let free = model(1.1, &[(1.0, 0.0)]);
        for t in [0.3, 2.0, 9.0] {
            let r = dephasing_factor(&free, t, &mu).unwrap();
            assert_relative_eq!(r.norm(), 1.0, epsilon = 1e-15);
            assert!((r - (I * 1.1 * t).exp()).norm() < 1e-14);
        }
    }

    #[test]
    fn dephasing_is_contractive_and_recurs() {
        let m = model(1.0, &[(1.0, 0.3)]);
        let vac = CoherentVector::zeros(1);
        for i in 1..100 {
            let t = i as f64 * 0.05;
            assert!(dephasing_factor(&m, t, &vac).unwrap().norm() <= 1.0);
        }
        let r = dephasing_factor(&m, 2.0 * PI, &vac).unwrap();
        assert_relative_eq!(r.norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn vacuum_dephasing_modulus_matches_textbook_envelope() {
        // |r| = exp{−Σ ω² g_k² (1 − cos ω_k t) / ω_k²}
        let m = model(1.3, &[(0.7, 0.2), (1.9, 0.25)]);
        let vac = CoherentVector::zeros(2);
        let t = 1.7;
        let expected: f64 = m
            .modes()
            .iter()
            .map(|md| -(1.3f64 * md.coupling / md.frequency).powi(2) * (1.0 - (md.frequency * t).cos()))
            .sum::<f64>()
            .exp();
        assert_relative_eq!(dephasing_factor(&m, t, &vac).unwrap().norm(), expected, max_relative = 1e-14);
    }
}
