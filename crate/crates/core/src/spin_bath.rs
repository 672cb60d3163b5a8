//! Propagator of a two-level system coupled through S_z to a bath of spins.
//!
//! The system sector is labelled by s = ±1, the eigenvalue of diag(1, −1) in
//! (down, up) order: s = +1 is the spin-down slot 0, so the physical S_z is −s.
//! Within a sector the system contributes the phase e^{iωst/2} and every bath
//! spin evolves independently under exp{it(ω_k Z + (ω/2)c_k s σ_x)}. The series
//! form of that per-mode factor is
//!
//! ```text
//! Σ_n (iω_k)ⁿ ∫_simplex Zⁿ e^{iΘσ_x},   Θ = (ω/2) s c_k A_n,
//! A_n = Σ_j (−1)^{j+1} 2τ_j + (−1)ⁿ t,
//! ```
//!
//! and Zⁿ e^{iΘσ_x} = [[cos Θ, i sin Θ], [(−1)ⁿ i sin Θ, (−1)ⁿ cos Θ]].

use crate::error::{Error, Result};
use crate::linalg::{c, exp_i_real_zx, is_finite2, kron_all, max_abs2, to_dense, z, CMatrix, C64, I, Mat2};
use crate::model::{BathKind, Model};
use crate::quadrature::{check_ordered, IteratedIntegrator, SimplexRule};

/// Largest bath for which the full tensor product may be materialized.
pub const MAX_MATERIALIZED_MODES: usize = 10;

/// Validated sector label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    /// s = +1, system slot 0 (spin down).
    Plus,
    /// s = −1, system slot 1 (spin up).
    Minus,
}

impl Sector {
    pub fn new(s: i32) -> Result<Self> {
        match s {
            1 => Ok(Self::Plus),
            -1 => Ok(Self::Minus),
            other => Err(Error::InvalidSector(other)),
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Self::Plus => 1.0,
            Self::Minus => -1.0,
        }
    }

    /// Index of the system basis state in (down, up) order.
    pub fn slot(self) -> usize {
        match self {
            Self::Plus => 0,
            Self::Minus => 1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Self::Plus => Self::Minus,
            Self::Minus => Self::Plus,
        }
    }
}

/// How the order-n simplex integrals are evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeriesMethod {
    /// Iterated Gauss rule with the given points per dimension.
    Simplex { points: usize },
    /// Collocation integrator exploiting the separable integrand.
    Iterated,
    /// Exact piecewise integration, available for N ≤ 2.
    ClosedForm,
}

/// Per-mode factors used to assemble a sector propagator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeFactors {
    Exact,
    Series { order: usize, method: SeriesMethod },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesResult {
    pub matrix: Mat2,
    /// Largest entry of the last retained order.
    pub error_estimate: f64,
}

/// Propagator of one system sector: phase times ⊗_k per-mode factors.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinBathPropagator {
    pub sector: Sector,
    pub system_phase: C64,
    pub modes: Vec<Mat2>,
    /// Sum of the per-mode series estimates; zero for exact factors.
    pub error_estimate: f64,
}

impl SpinBathPropagator {
    /// Dense 2^M × 2^M bath-space matrix including the system phase.
    pub fn materialize(&self) -> Result<CMatrix> {
        if self.modes.len() > MAX_MATERIALIZED_MODES {
            return Err(Error::DimensionOverflow {
                dim: 1usize.checked_shl(self.modes.len() as u32).unwrap_or(usize::MAX),
                limit: 1 << MAX_MATERIALIZED_MODES,
            });
        }
        let factors: Vec<CMatrix> = self.modes.iter().map(to_dense).collect();
        Ok(kron_all(&factors) * self.system_phase)
    }
}

/// A_n(τ, t) = Σ_j (−1)^{j+1} 2τ_j + (−1)ⁿ t.
pub fn a_n(tau: &[f64], t: f64) -> Result<f64> {
    check_ordered(tau, t)?;
    Ok(a_n_unchecked(tau, t))
}

fn a_n_unchecked(tau: &[f64], t: f64) -> f64 {
    let mut sum = 0.0;
    for (j, &x) in tau.iter().enumerate() {
        // j is zero-based, so (−1)^{j+1} with one-based j is + for even index
        sum += if j % 2 == 0 { 2.0 * x } else { -2.0 * x };
    }
    sum + if tau.len().is_multiple_of(2) { t } else { -t }
}

fn spin_mode(model: &Model, k: usize) -> Result<(f64, f64)> {
    model.require_kind(BathKind::Spin)?;
    let m = model.mode(k)?;
    Ok((m.frequency, m.coupling))
}

/// Θ^{k(n)} = (ω/2) s c_k A_n(τ, t).
pub fn theta_kn(model: &Model, k: usize, s: i32, tau: &[f64], t: f64) -> Result<f64> {
    let sector = Sector::new(s)?;
    let (_, coupling) = spin_mode(model, k)?;
    Ok(0.5 * model.omega() * sector.value() * coupling * a_n(tau, t)?)
}

/// exp{it(ω_k Z + (ω/2) c_k s σ_x)} on the (down, up) states of bath spin k.
pub fn mode_propagator_exact(model: &Model, k: usize, s: i32, t: f64) -> Result<Mat2> {
    let sector = Sector::new(s)?;
    let (frequency, coupling) = spin_mode(model, k)?;
    Ok(exp_i_real_zx(frequency * t, 0.5 * model.omega() * coupling * sector.value() * t))
}

// E1(z) = (e^z − 1)/z and E2(z) = (e^z − 1 − z)/z², continuous at 0.
fn e1(z: C64) -> C64 {
    if z.norm() < 1e-3 {
        c(1.0, 0.0) + z / 2.0 + z * z / 6.0 + z * z * z / 24.0 + z * z * z * z / 120.0
    } else {
        (z.exp() - 1.0) / z
    }
}

fn e2(z: C64) -> C64 {
    if z.norm() < 1e-2 {
        let mut term = c(0.5, 0.0);
        let mut sum = term;
        for m in 3..12 {
            term = term * z / m as f64;
            sum += term;
        }
        sum
    } else {
        (z.exp() - 1.0 - z) / (z * z)
    }
}

/// ∫_simplex e^{iκA_n} in closed form for n ≤ 2.
fn phase_integral_closed(kappa: f64, n: usize, t: f64) -> Option<C64> {
    match n {
        0 => Some((I * kappa * t).exp()),
        1 => Some((-I * kappa * t).exp() * t * e1(I * 2.0 * kappa * t)),
        2 => Some((I * kappa * t).exp() * t * t * e2(-I * 2.0 * kappa * t)),
        _ => None,
    }
}

fn phase_integral(kappa: f64, n: usize, t: f64, method: SeriesMethod, iterated: Option<&IteratedIntegrator>) -> Result<C64> {
    match method {
        SeriesMethod::ClosedForm => phase_integral_closed(kappa, n, t)
            .ok_or_else(|| Error::Truncation(format!("closed-form simplex integrals stop at order 2, got {n}"))),
        SeriesMethod::Simplex { points } => {
            if points < 2 {
                return Err(Error::Truncation("quad_points must be at least 2".into()));
            }
            Ok(SimplexRule::new(n, points).integrate(t, |tau| (I * kappa * a_n_unchecked(tau, t)).exp()))
        }
        SeriesMethod::Iterated => {
            let integ = iterated.expect("iterated integrator prepared by caller");
            let tail = (I * kappa * if n.is_multiple_of(2) { t } else { -t }).exp();
            let body = integ.integrate(n, t, |j, tau| {
                let sign = if j % 2 == 1 { 2.0 } else { -2.0 };
                (I * kappa * sign * tau).exp()
            });
            Ok(body * tail)
        }
    }
}

fn series_from_parts(frequency: f64, kappa: f64, t: f64, order: usize, method: SeriesMethod) -> Result<SeriesResult> {
    let iterated = matches!(method, SeriesMethod::Iterated).then(IteratedIntegrator::default);
    let mut total = Mat2::zeros();
    let mut last = Mat2::zeros();
    for n in 0..=order {
        // ∫cos Θ + i σ_x ∫sin Θ, with the integrals the real and imaginary parts of ∫e^{iΘ}
        let integral = phase_integral(kappa, n, t, method, iterated.as_ref())?;
        let (cos_part, sin_part) = (integral.re, integral.im);
        let rot = Mat2::new(c(cos_part, 0.0), c(0.0, sin_part), c(0.0, sin_part), c(cos_part, 0.0));
        let zn = if n.is_multiple_of(2) { Mat2::identity() } else { z() };
        last = zn * rot * (I * frequency).powi(n as i32);
        total += last;
    }
    if !is_finite2(&total) {
        return Err(Error::NonFinite("spin-bath series"));
    }
    Ok(SeriesResult { matrix: total, error_estimate: max_abs2(&last) })
}

/// Order-N series for bath spin k in sector s.
pub fn mode_propagator_series(
    model: &Model,
    k: usize,
    s: i32,
    t: f64,
    order: usize,
    method: SeriesMethod,
) -> Result<SeriesResult> {
    let sector = Sector::new(s)?;
    let (frequency, coupling) = spin_mode(model, k)?;
    if !t.is_finite() {
        return Err(Error::NonFinite("evolution time"));
    }
    let kappa = 0.5 * model.omega() * sector.value() * coupling;
    series_from_parts(frequency, kappa, t, order, method)
}

/// Sector propagator: system phase e^{iωst/2} and one 2×2 factor per bath spin.
pub fn propagator_spinbath(model: &Model, t: f64, s: i32, factors: ModeFactors) -> Result<SpinBathPropagator> {
    let sector = Sector::new(s)?;
    model.require_kind(BathKind::Spin)?;
    let mut modes = Vec::with_capacity(model.num_modes());
    let mut error_estimate = 0.0;
    for k in 0..model.num_modes() {
        match factors {
            ModeFactors::Exact => modes.push(mode_propagator_exact(model, k, s, t)?),
            ModeFactors::Series { order, method } => {
                let r = mode_propagator_series(model, k, s, t, order, method)?;
                error_estimate += r.error_estimate;
                modes.push(r.matrix);
            }
        }
    }
    Ok(SpinBathPropagator {
        sector,
        system_phase: (I * 0.5 * model.omega() * sector.value() * t).exp(),
        modes,
        error_estimate,
    })
}

/// Full propagator on system ⊗ spin_1 ⊗ … ⊗ spin_M (system most significant),
/// block diagonal in the system index.
pub fn full_propagator(model: &Model, t: f64, factors: ModeFactors) -> Result<CMatrix> {
    let plus = propagator_spinbath(model, t, 1, factors)?.materialize()?;
    let minus = propagator_spinbath(model, t, -1, factors)?.materialize()?;
    let d = plus.nrows();
    let mut full = CMatrix::zeros(2 * d, 2 * d);
    full.view_mut((0, 0), (d, d)).copy_from(&plus);
    full.view_mut((d, d), (d, d)).copy_from(&minus);
    Ok(full)
}

/// System-space blocks of one order-n integrand for bath spin k:
/// e^{iωS t/2} cos Θ and e^{iωS t/2} i sin Θ with S = diag(1, −1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemExpansion {
    pub cos_block: Mat2,
    pub sin_block: Mat2,
}

pub fn system_expansion(model: &Model, k: usize, tau: &[f64], t: f64) -> Result<SystemExpansion> {
    let (_, coupling) = spin_mode(model, k)?;
    let arg = 0.5 * model.omega() * coupling * a_n(tau, t)?;
    let plus = (I * 0.5 * model.omega() * t).exp();
    let minus = (-I * 0.5 * model.omega() * t).exp();
    let zero = c(0.0, 0.0);
    Ok(SystemExpansion {
        cos_block: Mat2::new(plus, zero, zero, minus) * c(arg.cos(), 0.0),
        sin_block: Mat2::new(plus, zero, zero, -minus) * (I * arg.sin()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff2, sigma_z, unitarity_residual2};
    use crate::model::{validate_model, BathMode, BathSpec, SystemSpec};
    use approx::assert_relative_eq;

    fn model(omega: f64, modes: &[(f64, f64)]) -> Model {
        let modes = modes.iter().map(|&(w, cpl)| BathMode::new(w, cpl)).collect();
        validate_model(SystemSpec::new(omega), BathSpec::spins(modes)).unwrap()
    }

    #[test]
    fn a_n_examples() {
        assert_eq!(a_n(&[], 1.3).unwrap(), 1.3);
        assert_eq!(a_n(&[0.7], 0.7).unwrap(), 0.7);
        assert_relative_eq!(a_n(&[0.2, 0.5], 1.0).unwrap(), 0.4, epsilon = 1e-15);
        assert!(a_n(&[0.5, 0.2], 1.0).is_err());
    }

    #[test]
    fn a_n_stays_in_range() {
        let rule = SimplexRule::new(5, 4);
        rule.for_each_node(2.0, |tau, _| {
            let a = a_n(tau, 2.0).unwrap();
            assert!((-2.0..=2.0).contains(&a));
        });
    }

    #[test]
    fn theta_examples() {
        let m = model(1.0, &[(0.8, 0.5), (1.0, 0.0)]);
        assert_relative_eq!(theta_kn(&m, 0, 1, &[], 2.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_eq!(theta_kn(&m, 1, 1, &[0.3], 2.0).unwrap(), 0.0);
        let plus = theta_kn(&m, 0, 1, &[0.3, 1.1], 2.0).unwrap();
        let minus = theta_kn(&m, 0, -1, &[0.3, 1.1], 2.0).unwrap();
        assert_eq!(plus, -minus);
        assert_eq!(theta_kn(&m, 0, 0, &[], 1.0), Err(Error::InvalidSector(0)));
    }

    #[test]
    fn zeroth_order_is_a_rotation() {
        let m = model(1.0, &[(0.8, 0.4)]);
        let r = mode_propagator_series(&m, 0, 1, 1.0, 0, SeriesMethod::Simplex { points: 4 }).unwrap();
        let th: f64 = 0.5 * 0.4;
        let expected = Mat2::new(c(th.cos(), 0.0), c(0.0, th.sin()), c(0.0, th.sin()), c(th.cos(), 0.0));
        assert!(max_abs_diff2(&r.matrix, &expected) < 1e-15);
    }

    #[test]
    fn exact_mode_limits() {
        let m = model(1.0, &[(0.8, 0.4), (1.3, 0.0)]);
        assert!(max_abs_diff2(&mode_propagator_exact(&m, 0, 1, 0.0).unwrap(), &Mat2::identity()) < 1e-15);
        let free = mode_propagator_exact(&m, 1, -1, 0.9).unwrap();
        let expected = Mat2::new((I * 1.3 * 0.9).exp(), c(0.0, 0.0), c(0.0, 0.0), (-I * 1.3 * 0.9).exp());
        assert!(max_abs_diff2(&free, &expected) < 1e-15);
    }

    #[test]
    fn exact_modes_are_unitary_and_flip_symmetric() {
        let m = model(1.2, &[(0.8, 0.4), (1.1, -0.3)]);
        for k in 0..2 {
            for t in [0.3, 1.0, 4.0] {
                let up = mode_propagator_exact(&m, k, 1, t).unwrap();
                let down = mode_propagator_exact(&m, k, -1, t).unwrap();
                assert!(unitarity_residual2(&up) <= 1e-12);
                assert_relative_eq!(up.determinant().norm(), 1.0, epsilon = 1e-12);
                let sz = sigma_z();
                assert!(max_abs_diff2(&down, &(sz * up * sz)) <= 1e-12);
            }
        }
    }

    #[test]
    fn closed_form_matches_quadrature_through_order_two() {
        let m = model(1.0, &[(0.8, 0.4)]);
        for s in [1, -1] {
            for t in [1e-4, 0.5, 1.0, 2.0, -0.7] {
                let closed = mode_propagator_series(&m, 0, s, t, 2, SeriesMethod::ClosedForm).unwrap();
                let quad = mode_propagator_series(&m, 0, s, t, 2, SeriesMethod::Simplex { points: 16 }).unwrap();
                let iter = mode_propagator_series(&m, 0, s, t, 2, SeriesMethod::Iterated).unwrap();
                assert!(max_abs_diff2(&closed.matrix, &quad.matrix) < 1e-14, "t = {t}");
                assert!(max_abs_diff2(&closed.matrix, &iter.matrix) < 1e-14, "t = {t}");
            }
        }
        assert!(mode_propagator_series(&m, 0, 1, 1.0, 3, SeriesMethod::ClosedForm).is_err());
    }

    #[test]
    fn series_converges_to_exact() {
        let m = model(1.0, &[(0.8, 0.4)]);
        let exact = mode_propagator_exact(&m, 0, 1, 1.0).unwrap();
        let mut prev = f64::INFINITY;
        for order in [2, 4, 6, 8, 10, 12] {
            let r = mode_propagator_series(&m, 0, 1, 1.0, order, SeriesMethod::Iterated).unwrap();
            let err = max_abs_diff2(&r.matrix, &exact);
            assert!(err < prev);
            prev = err;
        }
        assert!(prev <= 1e-6);
    }

    #[test]
    fn long_series_resums_exactly() {
        let m = model(1.0, &[(0.8, 0.4), (1.1, 0.3)]);
        for k in 0..2 {
            for s in [1, -1] {
                let exact = mode_propagator_exact(&m, k, s, 2.5).unwrap();
                let r = mode_propagator_series(&m, k, s, 2.5, 30, SeriesMethod::Iterated).unwrap();
                assert!(max_abs_diff2(&r.matrix, &exact) < 1e-12);
            }
        }
    }

    #[test]
    fn free_spins_keep_populations() {
        let m = model(1.0, &[(0.8, 0.0), (1.1, 0.0)]);
        for s in [1, -1] {
            let p = propagator_spinbath(&m, 1.7, s, ModeFactors::Exact).unwrap();
            let u = p.materialize().unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    if i != j {
                        assert_eq!(u[(i, j)], c(0.0, 0.0));
                    }
                }
                assert_relative_eq!(u[(i, i)].norm(), 1.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn full_propagator_is_block_diagonal_and_unitary() {
        let m = model(1.0, &[(0.8, 0.4), (1.1, 0.3)]);
        let u = full_propagator(&m, 1.0, ModeFactors::Exact).unwrap();
        assert_eq!(u.nrows(), 8);
        assert!(crate::linalg::unitarity_residual(&u) < 1e-13);
        for i in 0..4 {
            for j in 4..8 {
                assert_eq!(u[(i, j)], c(0.0, 0.0));
                assert_eq!(u[(j, i)], c(0.0, 0.0));
            }
        }
    }

    #[test]
    fn materialization_is_bounded() {
        let modes: Vec<(f64, f64)> = (0..11).map(|k| (1.0 + k as f64 * 0.1, 0.1)).collect();
        let m = model(1.0, &modes);
        let p = propagator_spinbath(&m, 1.0, 1, ModeFactors::Exact).unwrap();
        assert!(matches!(p.materialize(), Err(Error::DimensionOverflow { .. })));
    }

    #[test]
    fn system_expansion_is_diagonal_and_matches_sectors() {
        let m = model(1.3, &[(0.8, 0.4)]);
        let (tau, t) = ([0.2, 0.6], 1.0);
        let e = system_expansion(&m, 0, &tau, t).unwrap();
        for blk in [e.cos_block, e.sin_block] {
            assert_eq!(blk[(0, 1)], c(0.0, 0.0));
            assert_eq!(blk[(1, 0)], c(0.0, 0.0));
        }
        for s in [Sector::Plus, Sector::Minus] {
            let th = theta_kn(&m, 0, s.value() as i32, &tau, t).unwrap();
            let phase = (I * 0.5 * 1.3 * s.value() * t).exp();
            let i = s.slot();
            assert!((e.cos_block[(i, i)] - phase * th.cos()).norm() < 1e-15);
            assert!((e.sin_block[(i, i)] - phase * I * th.sin()).norm() < 1e-15);
        }
    }

    #[test]
    fn oscillator_bath_is_rejected() {
        let m = validate_model(SystemSpec::new(1.0), BathSpec::oscillators(vec![BathMode::new(1.0, 0.1)])).unwrap();
        assert!(matches!(mode_propagator_exact(&m, 0, 1, 1.0), Err(Error::BathKind(_))));
    }
}
