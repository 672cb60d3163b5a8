//! Validated model description shared by every computation module.
//!
//! Conventions fixed here and used throughout the crate:
//! * ħ = 1, so frequencies are the only dimensionful inputs.
//! * Two-level slots are ordered (down, up): slot 0 is spin-down, slot 1 is spin-up.
//! * Propagators are unnormalized Bargmann kernels. At t = 0 the oscillator
//!   kernel is exp{Σ α*_k α′_k} times the identity on the two-level system.

use crate::error::{Error, Result};
use crate::linalg::{identity2, C64, Mat2};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BathKind {
    Oscillator,
    Spin,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathMode {
    /// Angular frequency ω_k.
    pub frequency: f64,
    /// Dimensionless coupling (g_k for oscillators, c_k for spins).
    pub coupling: f64,
}

impl BathMode {
    pub fn new(frequency: f64, coupling: f64) -> Self {
        Self { frequency, coupling }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BathSpec {
    pub kind: BathKind,
    pub modes: Vec<BathMode>,
}

impl BathSpec {
    pub fn oscillators(modes: Vec<BathMode>) -> Self {
        Self { kind: BathKind::Oscillator, modes }
    }

    pub fn spins(modes: Vec<BathMode>) -> Self {
        Self { kind: BathKind::Spin, modes }
    }

    /// Build from parallel frequency/coupling slices.
    pub fn from_slices(kind: BathKind, frequencies: &[f64], couplings: &[f64]) -> Result<Self> {
        if frequencies.len() != couplings.len() {
            return Err(Error::LabelLength { expected: frequencies.len(), got: couplings.len() });
        }
        let modes = frequencies
            .iter()
            .zip(couplings)
            .map(|(&w, &g)| BathMode::new(w, g))
            .collect();
        Ok(Self { kind, modes })
    }

    pub fn empty(kind: BathKind) -> Self {
        Self { kind, modes: Vec::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemSpec {
    /// Two-level splitting ω.
    pub omega: f64,
    /// Drive frequency Ω of the driven variant.
    pub drive_omega: Option<f64>,
}

impl SystemSpec {
    pub fn new(omega: f64) -> Self {
        Self { omega, drive_omega: None }
    }

    pub fn driven(omega: f64, drive_omega: f64) -> Self {
        Self { omega, drive_omega: Some(drive_omega) }
    }
}

/// Validated (system, bath) pair. Construction is the only place invariants are
/// checked; every other module takes a `&Model` and trusts them.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    system: SystemSpec,
    bath: BathSpec,
}

/// Validate a model description, reporting the first violated invariant.
pub fn validate_model(system: SystemSpec, bath: BathSpec) -> Result<Model> {
    Model::new(system, bath)
}

impl Model {
    pub fn new(system: SystemSpec, bath: BathSpec) -> Result<Self> {
        if !system.omega.is_finite() {
            return Err(Error::NonFiniteOmega(system.omega));
        }
        if let Some(drive) = system.drive_omega {
            if !drive.is_finite() {
                return Err(Error::NonFiniteDrive(drive));
            }
        }
        for (index, mode) in bath.modes.iter().enumerate() {
            // also rejects NaN
            if !(mode.frequency > 0.0 && mode.frequency.is_finite()) {
                return Err(Error::NonPositiveFrequency { index, value: mode.frequency });
            }
            if !mode.coupling.is_finite() {
                return Err(Error::NonFiniteCoupling { index, value: mode.coupling });
            }
        }
        Ok(Self { system, bath })
    }

    pub fn omega(&self) -> f64 {
        self.system.omega
    }

    pub fn drive_omega(&self) -> Option<f64> {
        self.system.drive_omega
    }

    pub fn system(&self) -> &SystemSpec {
        &self.system
    }

    pub fn bath(&self) -> &BathSpec {
        &self.bath
    }

    pub fn kind(&self) -> BathKind {
        self.bath.kind
    }

    pub fn modes(&self) -> &[BathMode] {
        &self.bath.modes
    }

    /// Number of bath modes M.
    pub fn num_modes(&self) -> usize {
        self.bath.modes.len()
    }

    pub fn mode(&self, k: usize) -> Result<&BathMode> {
        self.bath
            .modes
            .get(k)
            .ok_or(Error::ModeIndex { index: k, modes: self.num_modes() })
    }

    /// Checks a label vector against this model's mode count.
    pub fn check_labels(&self, labels: &CoherentVector) -> Result<()> {
        if labels.len() != self.num_modes() {
            return Err(Error::LabelLength { expected: self.num_modes(), got: labels.len() });
        }
        Ok(())
    }

    pub fn require_kind(&self, kind: BathKind) -> Result<()> {
        if self.kind() != kind {
            return Err(Error::BathKind(match kind {
                BathKind::Oscillator => "operation requires an oscillator bath",
                BathKind::Spin => "operation requires a spin bath",
            }));
        }
        Ok(())
    }
}

/// Per-mode complex Bargmann labels.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentVector(Vec<C64>);

impl CoherentVector {
    pub fn new(labels: Vec<C64>) -> Result<Self> {
        if let Some(k) = labels.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFiniteLabel(k));
        }
        Ok(Self(labels))
    }

    pub fn zeros(m: usize) -> Self {
        Self(vec![C64::new(0.0, 0.0); m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn conj(&self) -> Self {
        Self(self.0.iter().map(|z| z.conj()).collect())
    }
}

impl std::ops::Index<usize> for CoherentVector {
    type Output = C64;

    fn index(&self, k: usize) -> &C64 {
        &self.0[k]
    }
}

/// Scalar bath kernel times a 2×2 matrix of system amplitudes in (down, up) order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagator2x2 {
    pub bath_kernel: C64,
    pub amplitudes: Mat2,
}

impl Propagator2x2 {
    /// Kernel matrix K_ij = bath_kernel · U_ij.
    pub fn kernel_matrix(&self) -> Mat2 {
        self.amplitudes * self.bath_kernel
    }

    /// The t = 0 kernel exp{Σ α*_k α′_k}·1.
    pub fn initial(alpha_star: &CoherentVector, alpha_prime: &CoherentVector) -> Self {
        let s: C64 = alpha_star
            .as_slice()
            .iter()
            .zip(alpha_prime.as_slice())
            .map(|(a, b)| a * b)
            .sum();
        Self { bath_kernel: s.exp(), amplitudes: identity2() }
    }
}

/// Truncation and accuracy settings for oracle and series computations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationSpec {
    /// Highest retained Fock level per oscillator mode (levels 0..=fock_cutoff).
    pub fock_cutoff: usize,
    /// Highest series order N kept in the Dyson-type expansions.
    pub series_order: usize,
    /// Gauss points per simplex dimension.
    pub quad_points: usize,
    pub tol: f64,
}

impl Default for TruncationSpec {
    fn default() -> Self {
        Self { fock_cutoff: 30, series_order: 4, quad_points: 16, tol: 1e-8 }
    }
}

impl TruncationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.fock_cutoff < 1 {
            return Err(Error::Truncation("fock_cutoff must be at least 1".into()));
        }
        if self.quad_points < 2 {
            return Err(Error::Truncation("quad_points must be at least 2".into()));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::Truncation(format!("tol {} outside (0, 1)", self.tol)));
        }
        Ok(())
    }

    pub fn with_cutoff(mut self, cutoff: usize) -> Self {
        self.fock_cutoff = cutoff;
        self
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.series_order = order;
        self
    }

    pub fn with_quad_points(mut self, q: usize) -> Self {
        self.quad_points = q;
        self
    }
}
