//! Series propagator of the non-QND spin–boson model, where the bath couples
//! through σ_x.
//!
//! Treating the coupling exactly and the splitting ω perturbatively, the order-n
//! term is an integral over the ordered simplex of e^{κ⁽ⁿ⁾} times
//! [[cosh χ⁽ⁿ⁾, sinh χ⁽ⁿ⁾], [(−1)ⁿ sinh χ⁽ⁿ⁾, (−1)ⁿ cosh χ⁽ⁿ⁾]], weighted by
//! (iω/2)ⁿ. κ⁽ⁿ⁾ is label independent and χ⁽ⁿ⁾ is linear in the labels. The
//! expansion parameter is ωt/2, not the coupling strength.

use crate::error::{Error, Result};
use crate::linalg::{is_finite2, max_abs2, C64, I, Mat2};
use crate::model::{BathKind, CoherentVector, Model, Propagator2x2, TruncationSpec};
use crate::osc_qnd::free_bath_kernel;
use crate::quadrature::{check_ordered, SimplexRule};

/// Truncated series together with its individual order-n terms.
#[derive(Debug, Clone, PartialEq)]
pub struct NonQndSeries {
    pub propagator: Propagator2x2,
    /// Amplitude terms for n = 0..=N, already weighted by (iω/2)ⁿ.
    pub terms: Vec<Mat2>,
    /// Largest entry of the last kernel term |bath_kernel|·|T_N|.
    pub error_estimate: f64,
}

// Per-mode sums Σ_l (−1)^{l+1} e^{−iω_k τ_l}, Σ_l (−1)^{l+1} e^{−iω_k(t−τ_l)}
// and Σ_{p>q} (−1)^{p+q} e^{−iω_k(τ_p−τ_q)}, the last accumulated in one pass.
fn mode_sums(frequency: f64, tau: &[f64], t: f64) -> (C64, C64, C64) {
    let mut single = C64::new(0.0, 0.0);
    let mut reversed = C64::new(0.0, 0.0);
    let mut double = C64::new(0.0, 0.0);
    // running Σ_{q<p} (−1)^q e^{+iω_k τ_q}
    let mut running = C64::new(0.0, 0.0);
    for (idx, &tl) in tau.iter().enumerate() {
        let l = idx + 1;
        let sign = if l % 2 == 1 { 1.0 } else { -1.0 };
        let e = (-I * frequency * tl).exp();
        single += e * sign;
        reversed += (-I * frequency * (t - tl)).exp() * sign;
        // (−1)^{p+q} = (−1)^p (−1)^q with (−1)^p = −sign
        double += e * running * (-sign);
        running += e.conj() * (-sign);
    }
    (single, reversed, double)
}

fn kappa_unchecked(model: &Model, t: f64, tau: &[f64]) -> C64 {
    let n = tau.len();
    let lam = 0.5 * model.omega();
    let parity = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    model
        .modes()
        .iter()
        .map(|m| {
            let (single, reversed, double) = mode_sums(m.frequency, tau, t);
            let et = (-I * m.frequency * t).exp();
            let s = C64::new((2 * n + 1) as f64, -m.frequency * t) - et * parity - single * 2.0
                + reversed * (2.0 * parity)
                + double * 4.0;
            -s * (lam * lam * m.coupling * m.coupling / (m.frequency * m.frequency))
        })
        .sum()
}

fn chi_unchecked(model: &Model, t: f64, tau: &[f64], alpha_star: &CoherentVector, alpha_prime: &CoherentVector) -> C64 {
    let n = tau.len();
    let lam = 0.5 * model.omega();
    let parity = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    model
        .modes()
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let (a, ap) = (alpha_star[k], alpha_prime[k]);
            if m.coupling == 0.0 || (a == C64::new(0.0, 0.0) && ap == C64::new(0.0, 0.0)) {
                return C64::new(0.0, 0.0);
            }
            let (single, reversed, _) = mode_sums(m.frequency, tau, t);
            let et = (-I * m.frequency * t).exp();
            let s = (ap + a * parity) * (1.0 - et * parity) + a * reversed * 2.0 - ap * single * 2.0;
            -s * (lam * m.coupling / m.frequency)
        })
        .sum()
}

/// κ⁽ⁿ⁾(τ, t) for n = τ.len(); τ must be ordered from 0 toward t.
pub fn kappa_n(model: &Model, t: f64, tau: &[f64]) -> Result<C64> {
    model.require_kind(BathKind::Oscillator)?;
    check_ordered(tau, t)?;
    Ok(kappa_unchecked(model, t, tau))
}

/// χ⁽ⁿ⁾(τ, t; α*, α′) for n = τ.len().
pub fn chi_n(
    model: &Model,
    t: f64,
    tau: &[f64],
    alpha_star: &CoherentVector,
    alpha_prime: &CoherentVector,
) -> Result<C64> {
    model.require_kind(BathKind::Oscillator)?;
    check_ordered(tau, t)?;
    model.check_labels(alpha_star)?;
    model.check_labels(alpha_prime)?;
    Ok(chi_unchecked(model, t, tau, alpha_star, alpha_prime))
}

fn term_matrix(kappa: C64, chi: C64, parity: f64) -> Mat2 {
    let e = kappa.exp();
    let (ch, sh) = (chi.cosh() * e, chi.sinh() * e);
    Mat2::new(ch, sh, sh * parity, ch * parity)
}

/// Order-n amplitude term (iω/2)ⁿ ∫ e^κ [[cosh χ, sinh χ], [±sinh χ, ±cosh χ]]
/// with q Gauss points per simplex dimension.
pub fn series_term(
    model: &Model,
    t: f64,
    alpha_star: &CoherentVector,
    alpha_prime: &CoherentVector,
    n: usize,
    q: usize,
) -> Result<Mat2> {
    model.require_kind(BathKind::Oscillator)?;
    model.check_labels(alpha_star)?;
    model.check_labels(alpha_prime)?;
    Ok(series_term_unchecked(model, t, alpha_star, alpha_prime, n, q))
}

fn series_term_unchecked(
    model: &Model,
    t: f64,
    alpha_star: &CoherentVector,
    alpha_prime: &CoherentVector,
    n: usize,
    q: usize,
) -> Mat2 {
    let parity = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut integral = Mat2::zeros();
    SimplexRule::new(n, q).for_each_node(t, |tau, w| {
        let kappa = kappa_unchecked(model, t, tau);
        let chi = chi_unchecked(model, t, tau, alpha_star, alpha_prime);
        integral += term_matrix(kappa, chi, parity) * C64::new(w, 0.0);
    });
    integral * (I * (0.5 * model.omega())).powi(n as i32)
}

/// Order-N truncation of the non-QND kernel, N = `trunc.series_order`.
pub fn propagator_nonqnd(
    model: &Model,
    t: f64,
    alpha_star: &CoherentVector,
    alpha_prime: &CoherentVector,
    trunc: &TruncationSpec,
) -> Result<NonQndSeries> {
    model.require_kind(BathKind::Oscillator)?;
    model.check_labels(alpha_star)?;
    model.check_labels(alpha_prime)?;
    trunc.validate()?;
    if !t.is_finite() {
        return Err(Error::NonFinite("evolution time"));
    }
    let terms: Vec<Mat2> = (0..=trunc.series_order)
        .map(|n| series_term_unchecked(model, t, alpha_star, alpha_prime, n, trunc.quad_points))
        .collect();
    let amplitudes = terms.iter().fold(Mat2::zeros(), |acc, m| acc + m);
    let bath_kernel = free_bath_kernel(model, t, alpha_star, alpha_prime);
    if !is_finite2(&amplitudes) || !(bath_kernel.re.is_finite() && bath_kernel.im.is_finite()) {
        return Err(Error::NonFinite("non-QND series"));
    }
    let last = terms.last().map(max_abs2).unwrap_or(0.0);
    Ok(NonQndSeries {
        propagator: Propagator2x2 { bath_kernel, amplitudes },
        error_estimate: last * bath_kernel.norm(),
        terms,
    })
}
