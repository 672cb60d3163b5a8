//! Task evaluation: each function turns a configuration into a result table.

use crate::canonical::{classify_2x2, pauli_adjoint_action, verify_equivalence, TwoByTwoClassification};
use crate::linalg::{max_abs2, max_abs_diff, max_abs_diff2, Mat2, Mat3};
use crate::model::{BathKind, Model, TruncationSpec};
use crate::oracle::{
    bargmann_kernel_spectral, build_hamiltonian, factorized_qnd_kernel, with_drive_labels, HamiltonianKind,
    OracleKernel, Spectral,
};
use crate::osc_qnd::{amplitudes, dephasing_factor, propagator_driven, propagator_qnd};
use crate::spin_bath::{mode_propagator_exact, mode_propagator_series, propagator_spinbath, ModeFactors, SeriesMethod};
use crate::spin_bose::propagator_nonqnd;

use super::config::{ModelKind, TaskConfig};
use super::output::{complex_columns, matrix_columns, push_complex, push_matrix, Cell, Table};
use super::CliError;

/// Largest dimension for which oracle-compare diagonalizes the full H1/H2
/// Hamiltonian; larger instances use the per-sector factorization.
pub const DENSE_ORACLE_DIM: usize = 1024;

/// Table plus the rows that exceeded the tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskOutput {
    pub table: Table,
    pub breaches: usize,
    pub worst: f64,
}

impl TaskOutput {
    fn plain(table: Table) -> Self {
        Self { table, breaches: 0, worst: 0.0 }
    }
}

pub fn evaluate(cfg: &TaskConfig, trunc: &TruncationSpec) -> Result<TaskOutput, CliError> {
    cfg.check_task()?;
    use super::config::TaskKind::*;
    match cfg.task {
        Propagator => propagator(cfg, trunc).map(TaskOutput::plain),
        Dephasing => dephasing(cfg).map(TaskOutput::plain),
        Convergence => convergence(cfg, trunc).map(TaskOutput::plain),
        OracleCompare => oracle_compare(cfg, trunc),
        EquivalenceCheck => equivalence(cfg),
        Classify => classify(cfg).map(TaskOutput::plain),
    }
}

fn kernel_table() -> Table {
    let mut cols = vec!["t".to_string()];
    complex_columns(&mut cols, "kernel");
    matrix_columns(&mut cols, "u");
    Table::new(cols)
}

fn propagator(cfg: &TaskConfig, trunc: &TruncationSpec) -> Result<Table, CliError> {
    let model = cfg.model()?;
    let times = cfg.time.points()?;
    if cfg.model == ModelKind::H4 {
        return spin_propagator(&model, &times);
    }
    let m = model.num_modes();
    let (a, b) = (cfg.alpha_star(m)?, cfg.alpha_prime(m)?);
    let (nu_s, nu_p) = cfg.drive_labels();
    let mut table = kernel_table();
    if cfg.model == ModelKind::H3 {
        table.columns.push("error_estimate".into());
    }
    for &t in &times {
        let mut row = vec![Cell::from(t)];
        let mut estimate = None;
        let (kernel, u) = match cfg.model {
            ModelKind::H1 => {
                let p = propagator_qnd(&model, t, &a, &b)?;
                (p.bath_kernel, p.amplitudes)
            }
            ModelKind::H2 => {
                let p = propagator_driven(&model, t, &a, &b, nu_s, nu_p)?;
                (p.propagator.bath_kernel * p.drive_factor, p.propagator.amplitudes)
            }
            _ => {
                let s = propagator_nonqnd(&model, t, &a, &b, trunc)?;
                estimate = Some(s.error_estimate);
                (s.propagator.bath_kernel, s.propagator.amplitudes)
            }
        };
        push_complex(&mut row, kernel);
        push_matrix(&mut row, &u);
        if let Some(e) = estimate {
            row.push(e.into());
        }
        table.push(row);
    }
    Ok(table)
}

fn spin_propagator(model: &Model, times: &[f64]) -> Result<Table, CliError> {
    let mut cols: Vec<String> = ["t", "s", "k"].iter().map(|s| s.to_string()).collect();
    complex_columns(&mut cols, "system_phase");
    matrix_columns(&mut cols, "m");
    let mut table = Table::new(cols);
    for &t in times {
        for s in [1, -1] {
            let p = propagator_spinbath(model, t, s, ModeFactors::Exact)?;
            for (k, m) in p.modes.iter().enumerate() {
                let mut row = vec![Cell::from(t), Cell::from(s as i64), Cell::from(k as i64)];
                push_complex(&mut row, p.system_phase);
                push_matrix(&mut row, m);
                table.push(row);
            }
        }
    }
    Ok(table)
}

fn dephasing(cfg: &TaskConfig) -> Result<Table, CliError> {
    let model = cfg.model()?;
    let mu = cfg.mu(model.num_modes())?;
    let mut table = Table::with_columns(&["t", "r_re", "r_im", "r_abs"]);
    for t in cfg.time.points()? {
        let r = dephasing_factor(&model, t, &mu)?;
        table.push(vec![t.into(), r.re.into(), r.im.into(), r.norm().into()]);
    }
    Ok(table)
}

fn dense_spectral(kind: HamiltonianKind, model: &Model, trunc: &TruncationSpec) -> Result<Spectral, CliError> {
    Ok(Spectral::new(&build_hamiltonian(kind, model, trunc)?)?)
}

fn convergence(cfg: &TaskConfig, trunc: &TruncationSpec) -> Result<Table, CliError> {
    let model = cfg.model()?;
    let times = cfg.time.points()?;
    if cfg.model == ModelKind::H4 {
        let mut table = Table::with_columns(&["t", "k", "s", "n", "deviation", "error_estimate"]);
        for &t in &times {
            for k in 0..model.num_modes() {
                for s in [1, -1] {
                    let exact = mode_propagator_exact(&model, k, s, t)?;
                    for n in 0..=trunc.series_order {
                        let r = mode_propagator_series(&model, k, s, t, n, SeriesMethod::Iterated)?;
                        table.push(vec![
                            t.into(),
                            (k as i64).into(),
                            (s as i64).into(),
                            (n as i64).into(),
                            max_abs_diff2(&r.matrix, &exact).into(),
                            r.error_estimate.into(),
                        ]);
                    }
                }
            }
        }
        return Ok(table);
    }
    let m = model.num_modes();
    let (a, b) = (cfg.alpha_star(m)?, cfg.alpha_prime(m)?);
    let spectral = dense_spectral(HamiltonianKind::H3, &model, trunc)?;
    let mut table = Table::with_columns(&["t", "n", "deviation", "error_estimate", "tail_bound"]);
    for &t in &times {
        let oracle = bargmann_kernel_spectral(&spectral, t, a.as_slice(), b.as_slice(), trunc.tol)?;
        for n in 0..=trunc.series_order {
            let s = propagator_nonqnd(&model, t, &a, &b, &trunc.with_order(n))?;
            let dev = max_abs_diff2(&s.propagator.kernel_matrix(), &oracle.kernel_matrix());
            table.push(vec![t.into(), (n as i64).into(), dev.into(), s.error_estimate.into(), oracle.tail_bound.into()]);
        }
    }
    Ok(table)
}

fn relative_deviation(closed: &Mat2, oracle: &Mat2) -> f64 {
    let scale = max_abs2(closed);
    let diff = max_abs_diff2(closed, oracle);
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

fn oracle_compare(cfg: &TaskConfig, trunc: &TruncationSpec) -> Result<TaskOutput, CliError> {
    let model = cfg.model()?;
    let times = cfg.time.points()?;
    let mut table = Table::with_columns(&["t", "deviation", "tail_bound", "route", "within_tol"]);
    let mut out = TaskOutput::plain(Table::new(Vec::new()));
    let mut record = |table: &mut Table, t: f64, dev: f64, tail: f64, route: &str| {
        let ok = dev <= trunc.tol && tail <= trunc.tol;
        if !ok {
            out.breaches += 1;
        }
        out.worst = out.worst.max(dev);
        table.push(vec![t.into(), dev.into(), tail.into(), route.into(), (ok as i64).into()]);
    };

    if cfg.model == ModelKind::H4 {
        let spectral = dense_spectral(HamiltonianKind::H4, &model, trunc)?;
        for &t in &times {
            let closed = crate::spin_bath::full_propagator(&model, t, ModeFactors::Exact)?;
            let dev = max_abs_diff(&closed, &spectral.evolve(t).matrix);
            record(&mut table, t, dev, 0.0, "dense");
        }
        out.table = table;
        return Ok(out);
    }

    let m = model.num_modes();
    let (a, b) = (cfg.alpha_star(m)?, cfg.alpha_prime(m)?);
    let (nu_s, nu_p) = cfg.drive_labels();
    let kind = match cfg.model {
        ModelKind::H1 => HamiltonianKind::H1,
        ModelKind::H2 => HamiltonianKind::H2,
        _ => HamiltonianKind::H3,
    };
    let (oa, ob) = if kind == HamiltonianKind::H2 {
        (with_drive_labels(&a, nu_s), with_drive_labels(&b, nu_p))
    } else {
        (a.as_slice().to_vec(), b.as_slice().to_vec())
    };
    let sites = oa.len();
    let dim = (trunc.fock_cutoff + 1).checked_pow(sites as u32).and_then(|d| d.checked_mul(2));
    let dense = kind == HamiltonianKind::H3 || dim.is_some_and(|d| d <= DENSE_ORACLE_DIM);
    let spectral = if dense { Some(dense_spectral(kind, &model, trunc)?) } else { None };
    for &t in &times {
        let oracle: OracleKernel = match &spectral {
            Some(sp) => bargmann_kernel_spectral(sp, t, &oa, &ob, trunc.tol)?,
            None => factorized_qnd_kernel(kind, &model, trunc, t, &oa, &ob)?,
        };
        let closed = match kind {
            HamiltonianKind::H1 => propagator_qnd(&model, t, &a, &b)?.kernel_matrix(),
            HamiltonianKind::H2 => propagator_driven(&model, t, &a, &b, nu_s, nu_p)?.kernel_matrix(),
            _ => propagator_nonqnd(&model, t, &a, &b, trunc)?.propagator.kernel_matrix(),
        };
        let route = if dense { "dense" } else { "factorized" };
        record(&mut table, t, relative_deviation(&closed, &oracle.kernel_matrix()), oracle.tail_bound, route);
    }
    out.table = table;
    Ok(out)
}

fn equivalence(cfg: &TaskConfig) -> Result<TaskOutput, CliError> {
    let report = verify_equivalence(&cfg.bath.frequencies)?;
    let mut table = Table::with_columns(&["modes", "max_abs_deviation", "symplectic_residual", "passed"]);
    table.push(vec![
        (cfg.bath.frequencies.len() as i64).into(),
        report.max_abs_deviation.into(),
        report.symplectic_residual.into(),
        (report.passed as i64).into(),
    ]);
    let breaches = usize::from(!report.passed);
    Ok(TaskOutput { table, breaches, worst: report.max_abs_deviation })
}

fn orthogonality_residual(r: &Mat3) -> f64 {
    (r.transpose() * r - Mat3::identity()).abs().max()
}

fn classify(cfg: &TaskConfig) -> Result<Table, CliError> {
    let osc = cfg.model_with(BathKind::Oscillator)?;
    let spin = cfg.model_with(BathKind::Spin)?;
    let m = osc.num_modes();
    let (a, b) = (cfg.alpha_star(m)?, cfg.alpha_prime(m)?);
    let mut table = Table::with_columns(&[
        "t", "source", "k", "s", "class", "param_re", "param_im", "parity", "det_r", "orthogonality_residual",
    ]);
    let empty = || Cell::from("");
    for t in cfg.time.points()? {
        let amp = amplitudes(&osc, t, &a, &b)?;
        let normalized = propagator_qnd(&osc, t, &a, &b)?.amplitudes * (-amp.a).exp();
        let mut row = vec![t.into(), "oscillator".into(), empty(), empty()];
        match classify_2x2(&normalized) {
            TwoByTwoClassification::SqueezeLike { b } => {
                row.push("squeeze-like".into());
                push_complex(&mut row, b);
            }
            _ => {
                row.push("other".into());
                row.extend([empty(), empty()]);
            }
        }
        row.extend([empty(), empty(), empty()]);
        table.push(row);

        for k in 0..m {
            for s in [1, -1] {
                let u = mode_propagator_series(&spin, k, s, t, 0, SeriesMethod::ClosedForm)?.matrix;
                let mut row = vec![t.into(), "spin".into(), (k as i64).into(), (s as i64).into()];
                match classify_2x2(&u) {
                    TwoByTwoClassification::RotationLike { theta, parity } => {
                        row.extend(["rotation-like".into(), theta.into(), 0.0.into(), (parity as i64).into()]);
                    }
                    TwoByTwoClassification::SqueezeLike { b } => {
                        row.push("squeeze-like".into());
                        push_complex(&mut row, b);
                        row.push(empty());
                    }
                    TwoByTwoClassification::Other => row.extend(["other".into(), empty(), empty(), empty()]),
                }
                let r = pauli_adjoint_action(&u)?;
                row.extend([r.determinant().into(), orthogonality_residual(&r).into()]);
                table.push(row);
            }
        }
    }
    Ok(table)
}
