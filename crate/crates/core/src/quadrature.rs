//! Quadrature over the time-ordered simplex 0 ≤ τ_1 ≤ … ≤ τ_n ≤ t.
//!
//! [`SimplexRule`] is an iterated Gauss rule: the outermost time τ_n is placed
//! on [0, t] and each inner τ_j on [0, τ_{j+1}]. Writing τ_j = t·x_n⋯x_j with
//! x ∈ (0, 1), the Jacobian is tⁿ ∏ x_j^{j−1}, and that factor is absorbed into
//! a Gauss–Jacobi weight per dimension. Constant integrands are therefore
//! integrated exactly (to tⁿ/n!) at any number of points.
//!
//! [`IteratedIntegrator`] handles integrands that factor as ∏ f_j(τ_j); it
//! carries the running inner integral on a fixed collocation grid, so its cost is
//! linear in n instead of exponential.
//!
//! Negative t is accepted by both: the simplex is then oriented from 0 down to t
//! and the weights pick up the sign of tⁿ.

use std::ops::{Add, Mul};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::C64;

/// Checks 0 ≤ τ_1 ≤ … ≤ τ_n ≤ t, or the mirrored chain 0 ≥ τ_1 ≥ … ≥ τ_n ≥ t
/// when t is negative.
pub fn check_ordered(tau: &[f64], t: f64) -> Result<()> {
    let sign = if t < 0.0 { -1.0 } else { 1.0 };
    let mut prev = 0.0;
    for &x in tau.iter().chain(std::iter::once(&t)) {
        if !x.is_finite() || sign * (x - prev) < 0.0 {
            return Err(Error::UnorderedTimes { t });
        }
        prev = x;
    }
    Ok(())
}

/// Upper bound on the number of nodes a [`SimplexRule`] may enumerate.
pub const MAX_SIMPLEX_NODES: usize = 1 << 18;

/// Gauss rule on [0, 1] for the weight x^power.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    power: u32,
}

impl GaussRule {
    /// q-point Gauss–Jacobi rule: Σ w_i f(x_i) ≈ ∫₀¹ x^power f(x) dx, exact for
    /// polynomials f of degree ≤ 2q − 1.
    pub fn jacobi_unit(q: usize, power: u32) -> Self {
        assert!(q >= 1, "a Gauss rule needs at least one point");
        let beta = power as f64;
        // Golub–Welsch on the Jacobi matrix of P_k^{(0, β)} over [-1, 1].
        let mut jac = DMatrix::<f64>::zeros(q, q);
        for k in 0..q {
            let kf = k as f64;
            let s = 2.0 * kf + beta;
            jac[(k, k)] = if k == 0 {
                beta / (beta + 2.0)
            } else {
                beta * beta / (s * (s + 2.0))
            };
            if k + 1 < q {
                let j = kf + 1.0;
                let s1 = 2.0 * j + beta;
                let b = 4.0 * j * j * (j + beta) * (j + beta) / (s1 * s1 * (s1 + 1.0) * (s1 - 1.0));
                jac[(k, k + 1)] = b.sqrt();
                jac[(k + 1, k)] = b.sqrt();
            }
        }
        let eig = SymmetricEigen::new(jac);
        let mut pairs: Vec<(f64, f64)> = (0..q)
            .map(|i| {
                let v0 = eig.eigenvectors[(0, i)];
                // μ₀ = 2^{β+1}/(β+1); mapping to [0, 1] divides by 2^{β+1}
                ((1.0 + eig.eigenvalues[i]) / 2.0, v0 * v0 / (beta + 1.0))
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
            power,
        }
    }

    pub fn legendre_unit(q: usize) -> Self {
        Self::jacobi_unit(q, 0)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn power(&self) -> u32 {
        self.power
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Number of points per dimension actually used for an order-n rule when `q`
/// is requested: capped so that qⁿ stays below [`MAX_SIMPLEX_NODES`].
pub fn effective_points(q: usize, n: usize) -> usize {
    if n <= 1 {
        return q.max(1);
    }
    let mut cap = (MAX_SIMPLEX_NODES as f64).powf(1.0 / n as f64).floor() as usize;
    while cap > 1 && cap.pow(n as u32) > MAX_SIMPLEX_NODES {
        cap -= 1;
    }
    q.min(cap).max(1)
}

/// Iterated Gauss rule on the ordered n-simplex.
#[derive(Debug, Clone)]
pub struct SimplexRule {
    order: usize,
    points: usize,
    // rules[j] integrates the x_{j+1} direction with weight x^j
    rules: Vec<GaussRule>,
}

impl SimplexRule {
    /// Order-n rule with q points per dimension (capped by [`effective_points`]).
    pub fn new(order: usize, q: usize) -> Self {
        let points = effective_points(q, order);
        let rules = (0..order).map(|j| GaussRule::jacobi_unit(points, j as u32)).collect();
        Self { order, points, rules }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn points_per_dim(&self) -> usize {
        self.points
    }

    pub fn num_nodes(&self) -> usize {
        self.points.pow(self.order as u32)
    }

    /// Visit every node: `f(tau, weight)` with `tau` ordered from τ_1 (closest to
    /// 0) to τ_n (closest to t). For order 0 there is one node with empty `tau`
    /// and weight 1.
    pub fn for_each_node<F: FnMut(&[f64], f64)>(&self, t: f64, mut f: F) {
        let n = self.order;
        if n == 0 {
            f(&[], 1.0);
            return;
        }
        let q = self.points;
        let mut digits = vec![0usize; n];
        let mut tau = vec![0.0; n];
        let scale = t.powi(n as i32);
        loop {
            // outermost to innermost
            let mut upper = t;
            let mut w = scale;
            for j in (0..n).rev() {
                let rule = &self.rules[j];
                upper *= rule.nodes[digits[j]];
                tau[j] = upper;
                w *= rule.weights[digits[j]];
            }
            f(&tau, w);

            // odometer, innermost digit fastest
            let mut j = 0;
            loop {
                digits[j] += 1;
                if digits[j] < q {
                    break;
                }
                digits[j] = 0;
                j += 1;
                if j == n {
                    return;
                }
            }
        }
    }

    pub fn integrate<T, F>(&self, t: f64, mut integrand: F) -> T
    where
        T: Add<Output = T> + Mul<f64, Output = T> + Default,
        F: FnMut(&[f64]) -> T,
    {
        let mut acc = T::default();
        self.for_each_node(t, |tau, w| {
            let v = integrand(tau) * w;
            acc = std::mem::take(&mut acc) + v;
        });
        acc
    }
}

/// Nested collocation integrator for separable simplex integrands
/// ∫ ∏_{j=1}^n f_j(τ_j) dτ over the ordered simplex.
#[derive(Debug, Clone)]
pub struct IteratedIntegrator {
    rule: GaussRule,
    // cumulative[(i, l)] = ∫₀^{x_i} ℓ_l(x) dx for the Lagrange basis on the rule nodes
    cumulative: DMatrix<f64>,
}

impl Default for IteratedIntegrator {
    fn default() -> Self {
        Self::new(32)
    }
}

impl IteratedIntegrator {
    pub fn new(points: usize) -> Self {
        let rule = GaussRule::legendre_unit(points);
        let x = rule.nodes();
        let p = x.len();
        let bary: Vec<f64> = (0..p)
            .map(|l| {
                let prod: f64 = (0..p).filter(|&m| m != l).map(|m| x[l] - x[m]).product();
                1.0 / prod
            })
            .collect();
        let lagrange = |y: f64| -> Vec<f64> {
            if let Some(hit) = x.iter().position(|&xl| (y - xl).abs() < 1e-15) {
                let mut v = vec![0.0; p];
                v[hit] = 1.0;
                return v;
            }
            let terms: Vec<f64> = (0..p).map(|l| bary[l] / (y - x[l])).collect();
            let denom: f64 = terms.iter().sum();
            terms.into_iter().map(|tl| tl / denom).collect()
        };
        let mut cumulative = DMatrix::<f64>::zeros(p, p);
        for i in 0..p {
            // ℓ_l has degree p − 1, so the p-point rule on [0, x_i] is exact
            for (&ym, &wm) in x.iter().zip(rule.weights()) {
                let basis = lagrange(x[i] * ym);
                for l in 0..p {
                    cumulative[(i, l)] += x[i] * wm * basis[l];
                }
            }
        }
        Self { rule, cumulative }
    }

    /// ∫_{simplex(n, t)} ∏_j f(j, τ_j) dτ, with j = 1..=n (τ_1 innermost).
    pub fn integrate<F>(&self, n: usize, t: f64, f: F) -> C64
    where
        F: Fn(usize, f64) -> C64,
    {
        if n == 0 {
            return C64::new(1.0, 0.0);
        }
        let x = self.rule.nodes();
        let p = x.len();
        let mut inner = vec![C64::new(1.0, 0.0); p];
        for j in 1..n {
            let g: Vec<C64> = (0..p).map(|i| f(j, t * x[i]) * inner[i]).collect();
            inner = (0..p)
                .map(|i| (0..p).map(|l| g[l] * self.cumulative[(i, l)]).sum::<C64>() * t)
                .collect();
        }
        (0..p)
            .map(|i| f(n, t * x[i]) * inner[i] * self.rule.weights()[i])
            .sum::<C64>()
            * t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use approx::assert_relative_eq;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn jacobi_rule_is_exact_on_monomials() {
        for q in 1..=12 {
            for power in 0..8u32 {
                let rule = GaussRule::jacobi_unit(q, power);
                for m in 0..(2 * q) {
                    let got: f64 = rule
                        .nodes()
                        .iter()
                        .zip(rule.weights())
                        .map(|(x, w)| w * x.powi(m as i32))
                        .sum();
                    let exact = 1.0 / (power as f64 + m as f64 + 1.0);
                    assert_relative_eq!(got, exact, max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn weights_positive_nodes_interior() {
        let rule = GaussRule::jacobi_unit(16, 5);
        assert!(rule.weights().iter().all(|&w| w > 0.0));
        assert!(rule.nodes().iter().all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn simplex_volume_is_exact_at_any_point_count() {
        for n in 0..=8 {
            for q in [1, 2, 3] {
                let rule = SimplexRule::new(n, q);
                let vol: f64 = rule.integrate(1.7, |_| 1.0);
                assert_relative_eq!(vol, 1.7f64.powi(n as i32) / factorial(n), max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn simplex_nodes_are_strictly_ordered_inside() {
        let rule = SimplexRule::new(3, 4);
        let mut count = 0;
        rule.for_each_node(2.0, |tau, w| {
            assert!(w > 0.0);
            assert!(0.0 < tau[0] && tau[0] < tau[1] && tau[1] < tau[2] && tau[2] < 2.0);
            count += 1;
        });
        assert_eq!(count, 64);
    }

    #[test]
    fn simplex_polynomial_moment() {
        // ∫ τ_1 τ_2 over 0 ≤ τ_1 ≤ τ_2 ≤ t = t⁴/8
        let rule = SimplexRule::new(2, 3);
        let got: f64 = rule.integrate(1.3, |tau| tau[0] * tau[1]);
        assert_relative_eq!(got, 1.3f64.powi(4) / 8.0, max_relative = 1e-13);
    }

    #[test]
    fn negative_time_orients_the_simplex() {
        let rule = SimplexRule::new(3, 4);
        let vol: f64 = rule.integrate(-2.0, |_| 1.0);
        assert_relative_eq!(vol, -8.0 / 6.0, max_relative = 1e-13);
    }

    #[test]
    fn ordering_check() {
        assert!(check_ordered(&[], 0.0).is_ok());
        assert!(check_ordered(&[0.2, 0.2, 0.9], 1.0).is_ok());
        assert!(check_ordered(&[0.5, 0.2], 1.0).is_err());
        assert!(check_ordered(&[0.5], 0.4).is_err());
        assert!(check_ordered(&[-0.1], 1.0).is_err());
        assert!(check_ordered(&[-0.2, -0.7], -1.0).is_ok());
        assert!(check_ordered(&[f64::NAN], 1.0).is_err());
    }

    #[test]
    fn node_budget_caps_high_orders() {
        assert_eq!(effective_points(16, 2), 16);
        assert_eq!(effective_points(16, 4), 16);
        let q12 = effective_points(16, 12);
        assert!(q12 >= 2 && q12.pow(12) <= MAX_SIMPLEX_NODES);
    }

    #[test]
    fn iterated_integrator_matches_exponential_closed_form() {
        // ∫_{0<τ1<τ2<t} e^{a τ1} e^{b τ2} = [ (e^{(a+b)t} − 1)/(a+b) − (e^{bt} − 1)/b ] / a
        let integ = IteratedIntegrator::default();
        let (a, b) = (c(0.0, 0.7), c(0.2, -1.1));
        let t = 1.6;
        let got = integ.integrate(2, t, |j, tau| if j == 1 { (a * tau).exp() } else { (b * tau).exp() });
        let exact = (((a + b) * t).exp() - 1.0) / (a + b) / a - ((b * t).exp() - 1.0) / b / a;
        assert!((got - exact).norm() < 1e-14);
    }

    #[test]
    fn iterated_integrator_agrees_with_simplex_rule() {
        let integ = IteratedIntegrator::default();
        let f = |j: usize, tau: f64| C64::new(0.0, 0.3 * j as f64 * tau).exp();
        let t = 1.2;
        for n in 0..=5 {
            let rule = SimplexRule::new(n, 10);
            let quad: C64 = rule.integrate(t, |tau| {
                tau.iter().enumerate().map(|(j, &s)| f(j + 1, s)).product::<C64>()
            });
            assert!((integ.integrate(n, t, f) - quad).norm() < 1e-13, "n = {n}");
        }
    }
}
