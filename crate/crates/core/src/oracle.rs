//! Brute-force reference: truncated matrix Hamiltonians, their exponentials via
//! Hermitian eigendecomposition, Bargmann kernels and reduced density matrices.
//!
//! Tensor order is system ⊗ mode_1 ⊗ … ⊗ mode_M, the first factor most
//! significant. Oscillator modes use Fock levels 0..=fock_cutoff; spins and the
//! system use (down, up) with physical σ_z = diag(−1, 1). The drive mode of the
//! driven model is appended after the bath modes.

use faer::{Mat, Side};
use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{c, embed, hermiticity_residual, kron_all, sigma_x, sigma_z, to_dense, CMatrix, C64, I, Mat2};
use crate::model::{BathKind, CoherentVector, Model, Propagator2x2, TruncationSpec};

pub type CVector = DVector<C64>;

/// Default cap on the Hilbert-space dimension of dense operators.
pub const DEFAULT_DIMENSION_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HamiltonianKind {
    /// σ_z coupling to oscillators.
    H1,
    /// H1 plus a resonant drive mode.
    H2,
    /// σ_x coupling to oscillators.
    H3,
    /// S_z coupling to a spin bath.
    H4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteBasis {
    Spin,
    Fock { levels: usize },
}

impl SiteBasis {
    pub fn dim(self) -> usize {
        match self {
            Self::Spin => 2,
            Self::Fock { levels } => levels,
        }
    }
}

/// Dense operator on a tensor-product space.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedOperator {
    pub matrix: CMatrix,
    /// Sites in tensor order; the first entry is the system.
    pub sites: Vec<SiteBasis>,
}

impl TruncatedOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.sites.iter().map(|s| s.dim()).collect()
    }

    /// Dimension of everything after the system factor.
    pub fn bath_dim(&self) -> usize {
        self.dims()[1..].iter().product()
    }
}

/// System, bath and coupling pieces of a Hamiltonian; their sum is the total.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianParts {
    pub system: CMatrix,
    pub bath: CMatrix,
    pub coupling: CMatrix,
    pub sites: Vec<SiteBasis>,
}

impl HamiltonianParts {
    pub fn total(&self) -> TruncatedOperator {
        TruncatedOperator { matrix: &self.system + &self.bath + &self.coupling, sites: self.sites.clone() }
    }

    /// max |[H_S, H_SR]| entrywise.
    pub fn system_coupling_commutator(&self) -> f64 {
        let comm = &self.system * &self.coupling - &self.coupling * &self.system;
        comm.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub fn annihilation(levels: usize) -> CMatrix {
    CMatrix::from_fn(levels, levels, |i, j| if j == i + 1 { c((j as f64).sqrt(), 0.0) } else { c(0.0, 0.0) })
}

pub fn number(levels: usize) -> CMatrix {
    CMatrix::from_fn(levels, levels, |i, j| if i == j { c(i as f64, 0.0) } else { c(0.0, 0.0) })
}

fn sites_for(kind: HamiltonianKind, model: &Model, trunc: &TruncationSpec) -> Result<Vec<SiteBasis>> {
    let expected = if kind == HamiltonianKind::H4 { BathKind::Spin } else { BathKind::Oscillator };
    model.require_kind(expected)?;
    trunc.validate()?;
    if kind == HamiltonianKind::H2 && model.drive_omega().is_none() {
        return Err(Error::MissingDrive);
    }
    let site = if kind == HamiltonianKind::H4 { SiteBasis::Spin } else { SiteBasis::Fock { levels: trunc.fock_cutoff + 1 } };
    let mut sites = vec![SiteBasis::Spin];
    sites.extend(std::iter::repeat_n(site, model.num_modes()));
    if kind == HamiltonianKind::H2 {
        sites.push(SiteBasis::Fock { levels: trunc.fock_cutoff + 1 });
    }
    Ok(sites)
}

fn check_dimension(sites: &[SiteBasis], limit: usize) -> Result<usize> {
    let dim = sites
        .iter()
        .try_fold(1usize, |acc, s| acc.checked_mul(s.dim()))
        .unwrap_or(usize::MAX);
    if dim > limit {
        return Err(Error::DimensionOverflow { dim, limit });
    }
    Ok(dim)
}

/// sys_op ⊗ … ⊗ op (at `site`) ⊗ …, formed without dense products.
fn embed_pair(sys_op: &CMatrix, op: &CMatrix, site: usize, dims: &[usize]) -> CMatrix {
    let factors: Vec<CMatrix> = dims
        .iter()
        .enumerate()
        .map(|(k, &d)| match k {
            0 => sys_op.clone(),
            _ if k == site => op.clone(),
            _ => CMatrix::identity(d, d),
        })
        .collect();
    kron_all(&factors)
}

/// Builds the pieces of the chosen Hamiltonian with at most `limit` states.
pub fn hamiltonian_parts_with_limit(
    kind: HamiltonianKind,
    model: &Model,
    trunc: &TruncationSpec,
    limit: usize,
) -> Result<HamiltonianParts> {
    let sites = sites_for(kind, model, trunc)?;
    let dim = check_dimension(&sites, limit)?;
    let dims: Vec<usize> = sites.iter().map(|s| s.dim()).collect();
    let half = 0.5 * model.omega();
    let sz = to_dense(&sigma_z());
    let sx = to_dense(&sigma_x());
    let sys_sz = embed(&sz, 0, &dims);

    let mut system = &sys_sz * c(half, 0.0);
    let mut bath = CMatrix::zeros(dim, dim);
    let mut coupling = CMatrix::zeros(dim, dim);

    for (k, mode) in model.modes().iter().enumerate() {
        let site = k + 1;
        match kind {
            HamiltonianKind::H4 => {
                bath += embed(&sz, site, &dims) * c(mode.frequency, 0.0);
                coupling += embed_pair(&sz, &sx, site, &dims) * c(half * mode.coupling, 0.0);
            }
            _ => {
                let levels = dims[site];
                let b = annihilation(levels);
                let x = &b + b.adjoint();
                bath += embed(&number(levels), site, &dims) * c(mode.frequency, 0.0);
                let sys_op = if kind == HamiltonianKind::H3 { &sx } else { &sz };
                coupling += embed_pair(sys_op, &x, site, &dims) * c(half * mode.coupling, 0.0);
            }
        }
    }
    if kind == HamiltonianKind::H2 {
        let drive = model.drive_omega().ok_or(Error::MissingDrive)?;
        let site = sites.len() - 1;
        bath += embed(&number(dims[site]), site, &dims) * c(drive, 0.0);
        system -= &sys_sz * c(0.5 * drive, 0.0);
    }
    Ok(HamiltonianParts { system, bath, coupling, sites })
}

pub fn hamiltonian_parts(kind: HamiltonianKind, model: &Model, trunc: &TruncationSpec) -> Result<HamiltonianParts> {
    hamiltonian_parts_with_limit(kind, model, trunc, DEFAULT_DIMENSION_LIMIT)
}

pub fn build_hamiltonian(kind: HamiltonianKind, model: &Model, trunc: &TruncationSpec) -> Result<TruncatedOperator> {
    let h = hamiltonian_parts(kind, model, trunc)?.total();
    let herm = hermiticity_residual(&h.matrix);
    if herm > 1e-12 {
        return Err(Error::NonFinite("Hamiltonian is not Hermitian"));
    }
    Ok(h)
}

/// Eigendecomposition H = V diag(λ) V† reused for many evolution times.
#[derive(Debug, Clone)]
pub struct Spectral {
    values: Vec<f64>,
    vectors: CMatrix,
    sites: Vec<SiteBasis>,
}

impl Spectral {
    pub fn new(h: &TruncatedOperator) -> Result<Self> {
        let n = h.dim();
        let m = &h.matrix;
        let a: Mat<C64> = Mat::from_fn(n, n, |i, j| m[(i, j)]);
        let eig = a.self_adjoint_eigen(Side::Lower).map_err(|_| Error::Eigendecomposition)?;
        let values: Vec<f64> = (0..n).map(|i| eig.S()[i].re).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Eigendecomposition);
        }
        let u = eig.U();
        let vectors = CMatrix::from_fn(n, n, |i, j| u[(i, j)]);
        Ok(Self { values, vectors, sites: h.sites.clone() })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    fn phases(&self, t: f64) -> Vec<C64> {
        self.values.iter().map(|&v| (-I * v * t).exp()).collect()
    }

    /// e^{−iHt} as a dense operator.
    pub fn evolve(&self, t: f64) -> TruncatedOperator {
        let phases = self.phases(t);
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= phases[j];
        }
        TruncatedOperator { matrix: scaled * self.vectors.adjoint(), sites: self.sites.clone() }
    }

    /// e^{−iHt} v without forming the full matrix.
    pub fn apply(&self, t: f64, v: &CVector) -> CVector {
        let mut coeffs = self.vectors.adjoint() * v;
        for (x, p) in coeffs.iter_mut().zip(self.phases(t)) {
            *x *= p;
        }
        &self.vectors * coeffs
    }
}

/// e^{−iHt} via Hermitian eigendecomposition.
pub fn evolve(h: &TruncatedOperator, t: f64) -> Result<TruncatedOperator> {
    Ok(Spectral::new(h)?.evolve(t))
}

/// Truncated Bargmann vector (α^m/√m!)_{m ≤ levels−1}.
pub fn bargmann_vector(alpha: C64, levels: usize) -> CVector {
    let mut v = CVector::zeros(levels);
    let mut term = c(1.0, 0.0);
    for m in 0..levels {
        v[m] = term;
        term = term * alpha / ((m + 1) as f64).sqrt();
    }
    v
}

// Σ_{m > cutoff} x^m/m! summed directly, so no cancellation against e^x.
fn poisson_tail(x: f64, cutoff: usize) -> f64 {
    let mut term: f64 = (1..=cutoff + 1).fold(1.0, |acc, m| acc * x / m as f64);
    let mut sum = 0.0;
    let mut m = cutoff + 1;
    while term > 0.0 && term > sum * 1e-17 {
        sum += term;
        m += 1;
        term *= x / m as f64;
        if m > cutoff + 10_000 {
            break;
        }
    }
    sum
}

fn poisson_head(x: f64, cutoff: usize) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..=cutoff {
        term *= x / m as f64;
        sum += term;
    }
    sum
}

/// Squared norms (retained, discarded) of a truncated product Bargmann vector.
fn product_norms(labels: &[C64], cutoff: usize) -> (f64, f64) {
    let mut head = 1.0;
    let mut tail = 0.0;
    for z in labels {
        let x = z.norm_sqr();
        let (h, t) = (poisson_head(x, cutoff), poisson_tail(x, cutoff));
        tail = tail * (h + t) + head * t;
        head *= h;
    }
    (head, tail)
}

/// Bound on the kernel error from discarding Fock levels above the cutoff:
/// ‖v_tail‖‖w‖ + ‖v‖‖w_tail‖ for unitary U.
pub fn kernel_tail_bound(alpha_star: &[C64], alpha_prime: &[C64], cutoff: usize) -> f64 {
    let (hv, tv) = product_norms(alpha_star, cutoff);
    let (hw, tw) = product_norms(alpha_prime, cutoff);
    tv.sqrt() * (hw + tw).sqrt() + (hv + tv).sqrt() * tw.sqrt()
}

/// Oracle kernel with its truncation diagnostics. The whole kernel sits in
/// `propagator.amplitudes`; `bath_kernel` is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleKernel {
    pub propagator: Propagator2x2,
    pub tail_bound: f64,
    /// Tail bound above the requested tolerance.
    pub flagged: bool,
}

impl OracleKernel {
    pub fn kernel_matrix(&self) -> Mat2 {
        self.propagator.kernel_matrix()
    }
}

fn label_vector(sites: &[SiteBasis], labels: &[C64]) -> Result<CVector> {
    let bath = &sites[1..];
    if bath.len() != labels.len() {
        return Err(Error::LabelLength { expected: bath.len(), got: labels.len() });
    }
    let mut v = CVector::from_element(1, c(1.0, 0.0));
    for (site, &z) in bath.iter().zip(labels) {
        let levels = match site {
            SiteBasis::Fock { levels } => *levels,
            SiteBasis::Spin => return Err(Error::BathKind("Bargmann kernels need oscillator sites")),
        };
        v = v.kronecker(&bargmann_vector(z, levels));
    }
    Ok(v)
}

fn fock_cutoff_of(sites: &[SiteBasis]) -> usize {
    sites[1..]
        .iter()
        .map(|s| s.dim().saturating_sub(1))
        .min()
        .unwrap_or(usize::MAX / 2)
}

fn kernel_from<F: Fn(usize, &CVector) -> CVector>(
    sites: &[SiteBasis],
    alpha_star: &[C64],
    alpha_prime: &[C64],
    tol: f64,
    apply_u: F,
) -> Result<OracleKernel> {
    let v = label_vector(sites, alpha_star)?;
    let w = label_vector(sites, alpha_prime)?;
    let db = v.len();
    let mut k = Mat2::zeros();
    for j in 0..2 {
        let mut input = CVector::zeros(2 * db);
        input.rows_mut(j * db, db).copy_from(&w);
        let out = apply_u(j, &input);
        for i in 0..2 {
            k[(i, j)] = out.rows(i * db, db).iter().zip(v.iter()).map(|(a, b)| a * b).sum();
        }
    }
    let tail_bound = kernel_tail_bound(alpha_star, alpha_prime, fock_cutoff_of(sites));
    Ok(OracleKernel {
        propagator: Propagator2x2 { bath_kernel: c(1.0, 0.0), amplitudes: k },
        tail_bound,
        flagged: tail_bound > tol,
    })
}

/// K_ij = Σ (α*)^m (α′)^n/√(m!n!) ⟨i, m|U|j, n⟩ over the retained Fock states.
pub fn bargmann_kernel(u: &TruncatedOperator, alpha_star: &[C64], alpha_prime: &[C64], tol: f64) -> Result<OracleKernel> {
    kernel_from(&u.sites, alpha_star, alpha_prime, tol, |_, x| &u.matrix * x)
}

/// Same kernel computed from a spectral decomposition without forming U.
pub fn bargmann_kernel_spectral(
    spectral: &Spectral,
    t: f64,
    alpha_star: &[C64],
    alpha_prime: &[C64],
    tol: f64,
) -> Result<OracleKernel> {
    kernel_from(&spectral.sites, alpha_star, alpha_prime, tol, |_, x| spectral.apply(t, x))
}

/// Oscillator labels plus the drive-mode labels, in oracle site order.
pub fn with_drive_labels(labels: &CoherentVector, nu: C64) -> Vec<C64> {
    let mut v = labels.as_slice().to_vec();
    v.push(nu);
    v
}

/// Kernel of the QND models H1/H2 by exact sector factorization.
///
/// Both Hamiltonians are block diagonal in the system basis, and within a
/// block the truncated bath operator is a sum of commuting single-mode terms
/// ω_k n_k + λ_k σ (b_k + b_k†). Its exponential is therefore the tensor
/// product of single-mode exponentials, each obtained by diagonalizing a
/// (cutoff+1)-dimensional matrix. Off-diagonal kernel entries vanish
/// structurally on this route.
pub fn factorized_qnd_kernel(
    kind: HamiltonianKind,
    model: &Model,
    trunc: &TruncationSpec,
    t: f64,
    alpha_star: &[C64],
    alpha_prime: &[C64],
) -> Result<OracleKernel> {
    let sites = sites_for(kind, model, trunc)?;
    if !matches!(kind, HamiltonianKind::H1 | HamiltonianKind::H2) {
        return Err(Error::BathKind("sector factorization needs a QND oscillator model"));
    }
    let n_sites = sites.len() - 1;
    if alpha_star.len() != n_sites || alpha_prime.len() != n_sites {
        return Err(Error::LabelLength { expected: n_sites, got: alpha_star.len().min(alpha_prime.len()) });
    }
    let levels = trunc.fock_cutoff + 1;
    let drive = if kind == HamiltonianKind::H2 { model.drive_omega() } else { None };
    // (frequency, coupling) per oracle site
    let mut mode_list: Vec<(f64, f64)> = model.modes().iter().map(|m| (m.frequency, m.coupling)).collect();
    if let Some(d) = drive {
        mode_list.push((d, 0.0));
    }
    let splitting = model.omega() - drive.unwrap_or(0.0);
    let b = annihilation(levels);
    let x = &b + b.adjoint();
    let n_op = number(levels);

    let mut k = Mat2::zeros();
    for slot in 0..2 {
        // physical σ_z eigenvalue of the slot in (down, up) order
        let sigma = if slot == 0 { -1.0 } else { 1.0 };
        let mut value = (-I * 0.5 * splitting * sigma * t).exp();
        for (idx, &(freq, coupling)) in mode_list.iter().enumerate() {
            let lam = 0.5 * model.omega() * coupling * sigma;
            let h = TruncatedOperator {
                matrix: &n_op * c(freq, 0.0) + &x * c(lam, 0.0),
                sites: vec![SiteBasis::Spin, SiteBasis::Fock { levels }],
            };
            let spectral = Spectral::new(&h)?;
            let w = bargmann_vector(alpha_prime[idx], levels);
            let v = bargmann_vector(alpha_star[idx], levels);
            let uw = spectral.apply(t, &w);
            value *= uw.iter().zip(v.iter()).map(|(a, b)| a * b).sum::<C64>();
        }
        k[(slot, slot)] = value;
    }
    let tail_bound = kernel_tail_bound(alpha_star, alpha_prime, trunc.fock_cutoff);
    Ok(OracleKernel {
        propagator: Propagator2x2 { bath_kernel: c(1.0, 0.0), amplitudes: k },
        tail_bound,
        flagged: tail_bound > trunc.tol,
    })
}

/// Initial product state of the bath.
#[derive(Debug, Clone, PartialEq)]
pub enum BathState {
    /// Product of coherent states |μ_k⟩, normalized after truncation.
    Coherent(Vec<C64>),
    /// Product of pure spin states (amplitude of down, amplitude of up).
    Spins(Vec<[C64; 2]>),
}

fn bath_vector(sites: &[SiteBasis], state: &BathState) -> Result<CVector> {
    let bath = &sites[1..];
    let factors: Vec<CVector> = match state {
        BathState::Coherent(mu) => {
            if mu.len() != bath.len() {
                return Err(Error::LabelLength { expected: bath.len(), got: mu.len() });
            }
            bath.iter()
                .zip(mu)
                .map(|(s, &z)| match s {
                    SiteBasis::Fock { levels } => Ok(bargmann_vector(z, *levels)),
                    SiteBasis::Spin => Err(Error::BathKind("coherent states need oscillator sites")),
                })
                .collect::<Result<_>>()?
        }
        BathState::Spins(amps) => {
            if amps.len() != bath.len() {
                return Err(Error::LabelLength { expected: bath.len(), got: amps.len() });
            }
            bath.iter()
                .zip(amps)
                .map(|(s, a)| match s {
                    SiteBasis::Spin => Ok(CVector::from_column_slice(a)),
                    SiteBasis::Fock { .. } => Err(Error::BathKind("spin states need spin sites")),
                })
                .collect::<Result<_>>()?
        }
    };
    let mut v = CVector::from_element(1, c(1.0, 0.0));
    for f in &factors {
        let norm = f.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Density("bath state has zero or non-finite norm".into()));
        }
        v = v.kronecker(&(f / c(norm, 0.0)));
    }
    Ok(v)
}

fn check_density(rho: &Mat2) -> Result<()> {
    let herm = (rho[(0, 1)] - rho[(1, 0)].conj()).norm();
    let trace = rho[(0, 0)] + rho[(1, 1)];
    if herm > 1e-12 || rho[(0, 0)].im.abs() > 1e-12 || rho[(1, 1)].im.abs() > 1e-12 {
        return Err(Error::Density("not Hermitian".into()));
    }
    if (trace - c(1.0, 0.0)).norm() > 1e-12 {
        return Err(Error::Density(format!("trace {} differs from 1", trace.re)));
    }
    let det = rho[(0, 0)].re * rho[(1, 1)].re - rho[(0, 1)].norm_sqr();
    if rho[(0, 0)].re < -1e-12 || rho[(1, 1)].re < -1e-12 || det < -1e-12 {
        return Err(Error::Density("not positive semidefinite".into()));
    }
    Ok(())
}

/// Tr_bath[U (ρ_sys ⊗ |ψ⟩⟨ψ|) U†] for a product bath state |ψ⟩.
pub fn reduced_density_spectral(spectral: &Spectral, rho_sys: &Mat2, bath: &BathState, t: f64) -> Result<Mat2> {
    check_density(rho_sys)?;
    let psi = bath_vector(&spectral.sites, bath)?;
    let db = psi.len();
    let phi: Vec<CVector> = (0..2)
        .map(|j| {
            let mut input = CVector::zeros(2 * db);
            input.rows_mut(j * db, db).copy_from(&psi);
            spectral.apply(t, &input)
        })
        .collect();
    let mut rho = Mat2::zeros();
    for a in 0..2 {
        for b in 0..2 {
            let mut acc = c(0.0, 0.0);
            for j in 0..2 {
                for l in 0..2 {
                    let overlap: C64 = phi[j]
                        .rows(a * db, db)
                        .iter()
                        .zip(phi[l].rows(b * db, db).iter())
                        .map(|(x, y)| x * y.conj())
                        .sum();
                    acc += rho_sys[(j, l)] * overlap;
                }
            }
            rho[(a, b)] = acc;
        }
    }
    Ok(rho)
}

pub fn reduced_density(
    kind: HamiltonianKind,
    model: &Model,
    trunc: &TruncationSpec,
    rho_sys: &Mat2,
    bath: &BathState,
    t: f64,
) -> Result<Mat2> {
    let spectral = Spectral::new(&build_hamiltonian(kind, model, trunc)?)?;
    reduced_density_spectral(&spectral, rho_sys, bath, t)
}

/// Dense product of single-site operators in the oracle tensor order.
pub fn product_operator(factors: &[CMatrix]) -> CMatrix {
    kron_all(factors)
}
