//! Linear canonical structure: quadratic Hamiltonians on phase space, the two
//! conjugations relating coordinate coupling to velocity coupling, and the
//! squeeze/rotation reading of the 2×2 amplitude matrices.
//!
//! Phase-space coordinates are ordered z = (Q, P, q_1..q_M, p_1..p_M) and a
//! quadratic Hamiltonian is H(z) = ½ zᵀKz + lᵀz + c. A linear map acts in the
//! Heisenberg sense, z ↦ Sz + d, and pulls H back to H(Sz + d).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{c, max_abs_diff2, unitarity_residual2, z, C64, I, Mat2, Mat3};

/// Entrywise tolerance of [`classify_2x2`].
pub const CLASSIFY_TOL: f64 = 1e-9;
/// Tolerance on SᵀJS = J and on the equivalence check.
pub const CANONICAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticHamiltonian {
    pub modes: usize,
    /// Symmetric Hessian K.
    pub matrix: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub offset: f64,
}

/// Index helpers for z = (Q, P, q_1..q_M, p_1..p_M).
pub fn idx_q_big() -> usize {
    0
}

pub fn idx_p_big() -> usize {
    1
}

pub fn idx_q(j: usize) -> usize {
    2 + j
}

pub fn idx_p(m: usize, j: usize) -> usize {
    2 + m + j
}

impl QuadraticHamiltonian {
    pub fn zero(modes: usize) -> Self {
        let n = 2 * (modes + 1);
        Self { modes, matrix: DMatrix::zeros(n, n), linear: DVector::zeros(n), offset: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Coefficient of the monomial z_i z_j (z_i² when i = j) in H.
    pub fn monomial_coefficient(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.5 * self.matrix[(i, i)]
        } else {
            self.matrix[(i, j)]
        }
    }

    pub fn evaluate(&self, zv: &DVector<f64>) -> f64 {
        0.5 * zv.dot(&(&self.matrix * zv)) + self.linear.dot(zv) + self.offset
    }

    /// H(Sz + d).
    pub fn pull_back(&self, map: &LinearCanonicalMap) -> Self {
        let s = &map.matrix;
        let d = &map.translation;
        Self {
            modes: self.modes,
            matrix: s.transpose() * &self.matrix * s,
            linear: s.transpose() * (&self.matrix * d + &self.linear),
            offset: 0.5 * d.dot(&(&self.matrix * d)) + self.linear.dot(d) + self.offset,
        }
    }

    /// Largest entrywise difference over K, l and c.
    pub fn max_abs_deviation(&self, other: &Self) -> f64 {
        let k = (&self.matrix - &other.matrix).amax();
        let l = (&self.linear - &other.linear).amax();
        k.max(l).max((self.offset - other.offset).abs())
    }

    pub fn symmetry_residual(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).amax()
    }
}

fn check_frequencies(omegas: &[f64]) -> Result<()> {
    for (index, &value) in omegas.iter().enumerate() {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::NonPositiveFrequency { index, value });
        }
    }
    Ok(())
}

/// P²/2 + ½ Σ_j (p_j² + ω_j²(q_j − Q)²).
pub fn coordinate_coupling_form(omegas: &[f64]) -> Result<QuadraticHamiltonian> {
    check_frequencies(omegas)?;
    let m = omegas.len();
    let mut h = QuadraticHamiltonian::zero(m);
    let k = &mut h.matrix;
    k[(idx_p_big(), idx_p_big())] = 1.0;
    for (j, &w) in omegas.iter().enumerate() {
        let w2 = w * w;
        k[(idx_p(m, j), idx_p(m, j))] = 1.0;
        k[(idx_q(j), idx_q(j))] = w2;
        k[(idx_q_big(), idx_q_big())] += w2;
        k[(idx_q_big(), idx_q(j))] = -w2;
        k[(idx_q(j), idx_q_big())] = -w2;
    }
    Ok(h)
}

/// P²/2 + P Σ ω_j q_j + ½ Σ (p_j² + ω_j² q_j²) + ½ (Σ ω_j q_j)².
pub fn velocity_coupling_form(omegas: &[f64]) -> Result<QuadraticHamiltonian> {
    check_frequencies(omegas)?;
    let m = omegas.len();
    let mut h = QuadraticHamiltonian::zero(m);
    let k = &mut h.matrix;
    k[(idx_p_big(), idx_p_big())] = 1.0;
    for (j, &wj) in omegas.iter().enumerate() {
        k[(idx_p(m, j), idx_p(m, j))] = 1.0;
        k[(idx_p_big(), idx_q(j))] = wj;
        k[(idx_q(j), idx_p_big())] = wj;
        for (l, &wl) in omegas.iter().enumerate() {
            let diag = if j == l { wj * wj } else { 0.0 };
            k[(idx_q(j), idx_q(l))] = diag + wj * wl;
        }
    }
    Ok(h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearCanonicalMap {
    pub matrix: DMatrix<f64>,
    pub translation: DVector<f64>,
}

/// Standard symplectic form pairing Q with P and q_j with p_j.
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let n = 2 * (modes + 1);
    let mut j = DMatrix::zeros(n, n);
    j[(idx_q_big(), idx_p_big())] = 1.0;
    j[(idx_p_big(), idx_q_big())] = -1.0;
    for k in 0..modes {
        j[(idx_q(k), idx_p(modes, k))] = 1.0;
        j[(idx_p(modes, k), idx_q(k))] = -1.0;
    }
    j
}

impl LinearCanonicalMap {
    pub fn homogeneous(matrix: DMatrix<f64>) -> Self {
        let n = matrix.nrows();
        Self { matrix, translation: DVector::zeros(n) }
    }

    pub fn modes(&self) -> usize {
        self.matrix.nrows() / 2 - 1
    }

    /// max |SᵀJS − J|.
    pub fn symplectic_residual(&self) -> f64 {
        let j = symplectic_form(self.modes());
        (self.matrix.transpose() * &j * &self.matrix - j).amax()
    }

    pub fn check_symplectic(&self) -> Result<()> {
        let r = self.symplectic_residual();
        if r > CANONICAL_TOL {
            return Err(Error::NotSymplectic(r));
        }
        Ok(())
    }

    /// The map z ↦ self(other(z)).
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            matrix: &self.matrix * &other.matrix,
            translation: &self.matrix * &other.translation + &self.translation,
        }
    }

    pub fn apply(&self, zv: &DVector<f64>) -> DVector<f64> {
        &self.matrix * zv + &self.translation
    }
}

/// Direction of the quarter-period rotation of each bath oscillator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationSense {
    /// q_j → p_j/ω_j, p_j → −ω_j q_j.
    Forward,
    /// q_j → −p_j/ω_j, p_j → ω_j q_j.
    Reverse,
}

/// (U1, U2): the quarter-period rotation of every bath oscillator and the shear
/// generated by Q Σ ω_j q_j (P → P + Σ ω_j q_j, p_j → p_j + ω_j Q).
pub fn conjugation_maps(omegas: &[f64], sense: RotationSense) -> Result<(LinearCanonicalMap, LinearCanonicalMap)> {
    check_frequencies(omegas)?;
    let m = omegas.len();
    let n = 2 * (m + 1);
    let sign = match sense {
        RotationSense::Forward => 1.0,
        RotationSense::Reverse => -1.0,
    };
    let mut s1 = DMatrix::zeros(n, n);
    s1[(idx_q_big(), idx_q_big())] = 1.0;
    s1[(idx_p_big(), idx_p_big())] = 1.0;
    let mut s2 = DMatrix::identity(n, n);
    for (j, &w) in omegas.iter().enumerate() {
        s1[(idx_q(j), idx_p(m, j))] = sign / w;
        s1[(idx_p(m, j), idx_q(j))] = -sign * w;
        s2[(idx_p_big(), idx_q(j))] = w;
        s2[(idx_p(m, j), idx_q_big())] = w;
    }
    Ok((LinearCanonicalMap::homogeneous(s1), LinearCanonicalMap::homogeneous(s2)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub max_abs_deviation: f64,
    pub symplectic_residual: f64,
    pub passed: bool,
}

/// Pulls the coordinate-coupling form back through U1 then U2 and compares it
/// with the velocity-coupling form.
pub fn verify_equivalence_with(omegas: &[f64], sense: RotationSense) -> Result<EquivalenceReport> {
    let (u1, u2) = conjugation_maps(omegas, sense)?;
    let composite = u1.compose(&u2);
    let symplectic_residual = [&u1, &u2, &composite]
        .iter()
        .map(|m| m.symplectic_residual())
        .fold(0.0, f64::max);
    let pulled = coordinate_coupling_form(omegas)?.pull_back(&composite);
    let max_abs_deviation = pulled.max_abs_deviation(&velocity_coupling_form(omegas)?);
    Ok(EquivalenceReport {
        max_abs_deviation,
        symplectic_residual,
        passed: max_abs_deviation <= CANONICAL_TOL && symplectic_residual <= CANONICAL_TOL,
    })
}

pub fn verify_equivalence(omegas: &[f64]) -> Result<EquivalenceReport> {
    verify_equivalence_with(omegas, RotationSense::Forward)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TwoByTwoClassification {
    /// diag(e^B, e^{−B}); Im B in (−π, π].
    SqueezeLike { b: C64 },
    /// Zⁿ e^{iΘσ_x} with Z = diag(1, −1); Θ in (−π, π], parity = n mod 2.
    RotationLike { theta: f64, parity: u8 },
    Other,
}

pub fn make_squeeze(b: C64) -> Mat2 {
    Mat2::new(b.exp(), c(0.0, 0.0), c(0.0, 0.0), (-b).exp())
}

pub fn make_rotation(theta: f64, parity: u8) -> Mat2 {
    let rot = Mat2::new(c(theta.cos(), 0.0), I * theta.sin(), I * theta.sin(), c(theta.cos(), 0.0));
    if parity.is_multiple_of(2) {
        rot
    } else {
        z() * rot
    }
}

/// det diag(e^B, e^{−B}), identically 1.
pub fn squeeze_jacobian(b: C64) -> C64 {
    make_squeeze(b).determinant()
}

/// Identifies squeeze-like and rotation-like matrices entrywise to
/// [`CLASSIFY_TOL`]. The identity is both; it is reported as squeeze-like.
pub fn classify_2x2(m: &Mat2) -> TwoByTwoClassification {
    if !m.iter().all(|x| x.re.is_finite() && x.im.is_finite()) {
        return TwoByTwoClassification::Other;
    }
    if m[(0, 0)].norm() > 0.0 {
        let b = m[(0, 0)].ln();
        if max_abs_diff2(m, &make_squeeze(b)) <= CLASSIFY_TOL {
            return TwoByTwoClassification::SqueezeLike { b };
        }
    }
    for parity in [0u8, 1] {
        let sign = if parity == 0 { 1.0 } else { -1.0 };
        // cos Θ from the (0,0) entry, sin Θ from the (0,1) entry
        let theta = m[(0, 1)].im.atan2(m[(0, 0)].re);
        let candidate = make_rotation(theta, parity);
        if max_abs_diff2(m, &candidate) <= CLASSIFY_TOL && (m.determinant() - c(sign, 0.0)).norm() <= CLASSIFY_TOL {
            return TwoByTwoClassification::RotationLike { theta, parity };
        }
    }
    TwoByTwoClassification::Other
}

/// Pauli matrices in the abstract basis where σ_z = diag(1, −1).
pub fn pauli_basis() -> [Mat2; 3] {
    let zero = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    [
        Mat2::new(zero, one, one, zero),
        Mat2::new(zero, -I, I, zero),
        Mat2::new(one, zero, zero, -one),
    ]
}

/// R with U σ_a U† = Σ_b R_ab σ_b.
pub fn pauli_adjoint_action(u: &Mat2) -> Result<Mat3> {
    let residual = unitarity_residual2(u);
    if residual.is_nan() || residual > 1e-10 {
        return Err(Error::NonUnitary(residual));
    }
    let paulis = pauli_basis();
    let ud = u.adjoint();
    Ok(Mat3::from_fn(|a, b| 0.5 * (u * paulis[a] * ud * paulis[b]).trace().re))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn coordinate_form_examples() {
        let h = coordinate_coupling_form(&[1.0]).unwrap();
        assert_eq!(h.monomial_coefficient(0, 0), 0.5);
        assert_eq!(h.monomial_coefficient(0, idx_q(0)), -1.0);
        assert_eq!(h.monomial_coefficient(idx_q(0), idx_q(0)), 0.5);
        let h0 = coordinate_coupling_form(&[]).unwrap();
        assert_eq!(h0.dim(), 2);
        assert_eq!(h0.monomial_coefficient(1, 1), 0.5);
        assert_eq!(h0.monomial_coefficient(0, 0), 0.0);
        let h2 = coordinate_coupling_form(&[1.0, 2.0]).unwrap();
        assert_eq!(h2.monomial_coefficient(0, 0), 2.5);
    }

    #[test]
    fn velocity_form_examples() {
        let h = velocity_coupling_form(&[1.0, 2.0]).unwrap();
        assert_eq!(h.monomial_coefficient(idx_p_big(), idx_q(0)), 1.0);
        assert_eq!(h.monomial_coefficient(idx_p_big(), idx_q(1)), 2.0);
        // ½(ω_1² + ω_1²) from the free and squared-sum parts
        assert_eq!(h.monomial_coefficient(idx_q(0), idx_q(0)), 1.0);
        assert_eq!(h.monomial_coefficient(idx_q(0), idx_q(1)), 2.0);
        assert_eq!(h.symmetry_residual(), 0.0);
    }

    #[test]
    fn forms_agree_with_direct_evaluation() {
        let om = [0.5f64, 1.0, 2.0];
        let zv: DVector<f64> = DVector::from_vec(vec![0.3, -0.7, 0.1, 0.4, -0.2, 0.9, -0.5, 0.25]);
        let (qq, pp) = (zv[0], zv[1]);
        let coord: f64 = 0.5 * pp * pp
            + om.iter().enumerate().map(|(j, w)| 0.5 * (zv[5 + j].powi(2) + w * w * (zv[2 + j] - qq).powi(2))).sum::<f64>();
        let s: f64 = om.iter().enumerate().map(|(j, w)| w * zv[2 + j]).sum();
        let vel: f64 = 0.5 * pp * pp
            + pp * s
            + om.iter().enumerate().map(|(j, w)| 0.5 * (zv[5 + j].powi(2) + w * w * zv[2 + j].powi(2))).sum::<f64>()
            + 0.5 * s * s;
        assert_relative_eq!(coordinate_coupling_form(&om).unwrap().evaluate(&zv), coord, epsilon = 1e-14);
        assert_relative_eq!(velocity_coupling_form(&om).unwrap().evaluate(&zv), vel, epsilon = 1e-14);
    }

    #[test]
    fn rejects_non_positive_frequency() {
        assert!(coordinate_coupling_form(&[1.0, 0.0]).is_err());
        assert!(conjugation_maps(&[-1.0], RotationSense::Forward).is_err());
    }

    #[test]
    fn rotation_twice_inverts_bath_coordinates() {
        let om = [0.5, 1.0, 2.0];
        let (u1, u2) = conjugation_maps(&om, RotationSense::Forward).unwrap();
        let twice = u1.compose(&u1);
        let m = om.len();
        for j in 0..m {
            assert_eq!(twice.matrix[(idx_q(j), idx_q(j))], -1.0);
            assert_eq!(twice.matrix[(idx_p(m, j), idx_p(m, j))], -1.0);
        }
        assert_eq!(twice.matrix[(0, 0)], 1.0);
        // U2 leaves Q and every q_j unchanged
        let zv = DVector::from_fn(2 * (m + 1), |i, _| 0.1 * i as f64 + 0.3);
        let image = u2.apply(&zv);
        assert_eq!(image[idx_q_big()], zv[idx_q_big()]);
        for j in 0..m {
            assert_eq!(image[idx_q(j)], zv[idx_q(j)]);
        }
    }

    #[test]
    fn maps_are_symplectic() {
        for sense in [RotationSense::Forward, RotationSense::Reverse] {
            let (u1, u2) = conjugation_maps(&[0.5, 1.0, 2.0], sense).unwrap();
            assert!(u1.check_symplectic().is_ok());
            assert!(u2.check_symplectic().is_ok());
            assert!(u1.compose(&u2).check_symplectic().is_ok());
        }
        let bad = LinearCanonicalMap::homogeneous(DMatrix::identity(4, 4) * 2.0);
        assert!(matches!(bad.check_symplectic(), Err(Error::NotSymplectic(_))));
    }

    #[test]
    fn equivalence_holds_only_for_forward_rotation() {
        for om in [vec![1.0], vec![0.5, 1.0, 2.0]] {
            let good = verify_equivalence(&om).unwrap();
            assert!(good.passed && good.max_abs_deviation <= 1e-12);
            let bad = verify_equivalence_with(&om, RotationSense::Reverse).unwrap();
            assert!(!bad.passed && bad.max_abs_deviation > 0.1);
        }
    }

    #[test]
    fn pull_back_with_translation() {
        let h = coordinate_coupling_form(&[1.3]).unwrap();
        let (u1, _) = conjugation_maps(&[1.3], RotationSense::Forward).unwrap();
        let map = LinearCanonicalMap { translation: DVector::from_vec(vec![0.2, -0.1, 0.4, 0.3]), ..u1 };
        let zv = DVector::from_vec(vec![0.5, 0.1, -0.3, 0.8]);
        assert_relative_eq!(h.pull_back(&map).evaluate(&zv), h.evaluate(&map.apply(&zv)), epsilon = 1e-14);
    }

    #[test]
    fn identity_classifies_as_squeeze() {
        assert_eq!(classify_2x2(&Mat2::identity()), TwoByTwoClassification::SqueezeLike { b: c(0.0, 0.0) });
    }

    #[test]
    fn odd_rotation_and_other() {
        let r = make_rotation(0.4, 1);
        assert_relative_eq!(r.determinant().re, -1.0, epsilon = 1e-15);
        assert_eq!(classify_2x2(&r), TwoByTwoClassification::RotationLike { theta: 0.4, parity: 1 });
        let other = Mat2::new(c(1.0, 0.0), c(2.0, 0.0), c(0.0, 0.0), c(1.0, 0.0));
        assert_eq!(classify_2x2(&other), TwoByTwoClassification::Other);
        let nan = Mat2::new(c(f64::NAN, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0));
        assert_eq!(classify_2x2(&nan), TwoByTwoClassification::Other);
    }

    #[test]
    fn squeeze_jacobian_is_unity() {
        for b in [c(0.0, 0.0), c(0.3, -1.2), c(-2.0, 2.5)] {
            assert!((squeeze_jacobian(b) - c(1.0, 0.0)).norm() <= 1e-12);
        }
    }

    #[test]
    fn adjoint_action_examples() {
        let r = pauli_adjoint_action(&Mat2::identity()).unwrap();
        assert!((r - Mat3::identity()).amax() < 1e-15);

        let r = pauli_adjoint_action(&make_rotation(PI / 4.0, 0)).unwrap();
        // σ_y → −σ_z, σ_z → σ_y
        let expected = Mat3::new(1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0);
        assert!((r - expected).amax() < 1e-15);

        let th: f64 = 0.37;
        let r = pauli_adjoint_action(&make_rotation(th, 1)).unwrap();
        let (c2, s2) = ((2.0 * th).cos(), (2.0 * th).sin());
        let twisted = Mat3::new(-1.0, 0.0, 0.0, 0.0, -c2, -s2, 0.0, -s2, c2);
        assert!((r - twisted).amax() < 1e-14);
        assert_relative_eq!(r.determinant(), 1.0, epsilon = 1e-14);

        let non_unitary = Mat2::identity() * c(2.0, 0.0);
        assert!(matches!(pauli_adjoint_action(&non_unitary), Err(Error::NonUnitary(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn squeeze_round_trip(re in -3.0f64..3.0, im in -3.1f64..3.1) {
            let b = c(re, im);
            match classify_2x2(&make_squeeze(b)) {
                TwoByTwoClassification::SqueezeLike { b: got } => prop_assert!((got - b).norm() < 1e-9),
                other => prop_assert!(false, "{other:?}"),
            }
        }

        #[test]
        fn rotation_round_trip(theta in -3.1f64..3.1, parity in 0u8..2) {
            // Θ = 0 with even parity is the identity, which ties to squeeze-like
            prop_assume!(theta.abs() > 1e-6 || parity == 1);
            match classify_2x2(&make_rotation(theta, parity)) {
                TwoByTwoClassification::RotationLike { theta: got, parity: p } => {
                    prop_assert!((got - theta).abs() < 1e-9);
                    prop_assert_eq!(p, parity);
                }
                other => prop_assert!(false, "{other:?}"),
            }
        }

        #[test]
        fn rotations_act_orthogonally(theta in -6.3f64..6.3, parity in 0u8..2) {
            let r = pauli_adjoint_action(&make_rotation(theta, parity)).unwrap();
            prop_assert!((r.transpose() * r - Mat3::identity()).amax() < 1e-12);
            prop_assert!((r.determinant() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn equivalence_for_random_frequencies(om in proptest::collection::vec(0.1f64..5.0, 0..6)) {
            let report = verify_equivalence(&om).unwrap();
            prop_assert!(report.passed, "{report:?}");
        }
    }
}
