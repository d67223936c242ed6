//! Fixed-step RK4 integration of the two-atom Lindblad master equation.
//!
//! Production runs integrate in the diagonal frame of
//! [`build_static_frame_hamiltonian`](crate::model::build_static_frame_hamiltonian),
//! where the Hamiltonian has no explicit fast phases, restricted to the
//! subspace reachable from the initial state. The final density matrix is
//! rotated back to the laser-phase frame. [`evolve_phase_frame`] integrates
//! the literal phase-frame Hamiltonian with dense matrices and serves as an
//! independent cross-check.

use std::io::{self, Write};

use nalgebra::{DMatrix, SMatrix};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::{
    basis_index, basis_label, basis_levels, build_decay_channels, build_dephasing_channels,
    build_hamiltonian, drive, static_to_phase_frame, two_atom_frame_energies, GateParameters,
    Level, Matrix16, Operator, QuantumState, DIM, RR,
};
use crate::noise::NoiseRealization;
use crate::quad::simpson;

/// Smallest accepted step count.
pub const MIN_STEPS: usize = 1000;

/// Trace drift or negative eigenvalue beyond this aborts the integration.
pub const QUALITY_TOLERANCE: f64 = 1e-6;

/// Steps between full eigenvalue checks.
const EIGEN_STRIDE: usize = 250;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diagnostics {
    /// max |Tr ρ(t) − Tr ρ(0)| over the grid.
    pub max_trace_drift: f64,
    /// max |ρ − ρ†| after a step, before re-symmetrisation.
    pub max_hermiticity_error: f64,
    /// Smallest eigenvalue seen at the checked steps.
    pub min_eigenvalue: f64,
}

impl Diagnostics {
    fn new() -> Self {
        Self {
            max_trace_drift: 0.0,
            max_hermiticity_error: 0.0,
            min_eigenvalue: f64::INFINITY,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Diagonal of ρ(t) in the two-atom basis at every grid time.
    pub populations: Vec<[f64; DIM]>,
    /// ρ(T_g) in the laser-phase frame.
    pub rho_final: QuantumState,
    pub diagnostics: Diagnostics,
}

impl Trajectory {
    /// Population of basis state `index` at each grid time.
    pub fn population_series(&self, index: usize) -> Vec<f64> {
        self.populations.iter().map(|p| p[index]).collect()
    }

    pub fn step(&self) -> f64 {
        match self.times.len() {
            0 | 1 => 0.0,
            n => (self.times[n - 1] - self.times[0]) / (n - 1) as f64,
        }
    }

    pub fn csv_header() -> String {
        let mut h = String::from("t_us");
        for i in 0..DIM {
            h.push_str(",p_");
            h.push_str(&basis_label(i));
        }
        h
    }

    /// One row per grid time: `t_us` followed by the 16 populations.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", Self::csv_header())?;
        for (t, pops) in self.times.iter().zip(&self.populations) {
            write!(w, "{t:.9}")?;
            for p in pops {
                write!(w, ",{p:.12e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// `−i[H,ρ] + ½Σⱼ(2LⱼρLⱼ† − Lⱼ†Lⱼρ − ρLⱼ†Lⱼ)`.
pub fn lindblad_rhs(rho: &Matrix16, h: &Operator, channels: &[Operator]) -> Matrix16 {
    let minus_i = C64::new(0.0, -1.0);
    let mut out = (h.0 * rho - rho * h.0) * minus_i;
    for l in channels {
        let ld = l.0.adjoint();
        let ldl = ld * l.0;
        out += l.0 * rho * ld - (ldl * rho + rho * ldl) * C64::new(0.5, 0.0);
    }
    out
}

/// Integrated population of basis state `label` over the gate, `∫ρ_kk dt`.
pub fn time_in_state(traj: &Trajectory, label: usize) -> f64 {
    simpson(&traj.population_series(label), traj.step())
}

pub(crate) trait RkState: Sized {
    fn lincomb(&self, a: f64, k: &Self) -> Self;
}

impl<const R: usize, const C: usize> RkState for SMatrix<C64, R, C> {
    fn lincomb(&self, a: f64, k: &Self) -> Self {
        self + k * C64::new(a, 0.0)
    }
}

/// One classical RK4 step of `y' = f(t, y)`.
pub(crate) fn rk4_step<S: RkState, F: FnMut(f64, &S) -> S>(y: &S, t: f64, dt: f64, mut f: F) -> S {
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * dt, &y.lincomb(0.5 * dt, &k1));
    let k3 = f(t + 0.5 * dt, &y.lincomb(0.5 * dt, &k2));
    let k4 = f(t + dt, &y.lincomb(dt, &k3));
    y.lincomb(dt / 6.0, &k1)
        .lincomb(dt / 3.0, &k2)
        .lincomb(dt / 3.0, &k3)
        .lincomb(dt / 6.0, &k4)
}

fn check_initial(state: &QuantumState) -> Result<()> {
    if state.hermiticity_error() > 1e-10 {
        return Err(Error::invalid("initial state is not Hermitian"));
    }
    if (state.trace() - C64::new(1.0, 0.0)).norm() > 1e-8 {
        return Err(Error::invalid("initial state must have unit trace"));
    }
    if state.min_eigenvalue() < -1e-8 {
        return Err(Error::invalid("initial state is not positive semidefinite"));
    }
    Ok(())
}

fn check_steps(steps: usize) -> Result<()> {
    if steps < MIN_STEPS {
        return Err(Error::domain(format!(
            "at least {MIN_STEPS} integration steps required, got {steps}"
        )));
    }
    Ok(())
}

/// Integrate the master equation from `initial` over the gate.
///
/// Returns the populations at every step. Fails with
/// [`Error::IntegrationQuality`] if the trace drifts or an eigenvalue drops
/// below `−1e-6`.
pub fn evolve(
    initial: &QuantumState,
    params: &GateParameters,
    realization: &NoiseRealization,
    steps: usize,
) -> Result<Trajectory> {
    params.validate()?;
    realization.validate()?;
    check_initial(initial)?;
    check_steps(steps)?;
    let gen = Generator::new(params, realization, initial.matrix());
    gen.run(initial.matrix(), params, realization, steps, true)
}

/// Final density matrix (phase frame) and diagnostics without recording the
/// population history.
pub(crate) fn evolve_final(
    initial: &QuantumState,
    params: &GateParameters,
    realization: &NoiseRealization,
    steps: usize,
) -> Result<(QuantumState, Diagnostics)> {
    params.validate()?;
    realization.validate()?;
    check_initial(initial)?;
    check_steps(steps)?;
    let gen = Generator::new(params, realization, initial.matrix());
    let traj = gen.run(initial.matrix(), params, realization, steps, false)?;
    Ok((traj.rho_final, traj.diagnostics))
}

/// Dense RK4 integration of the literal phase-frame Hamiltonian
/// [`build_hamiltonian`], rebuilt at every stage time.
///
/// The explicit `e^{−iΔt}` phases make this route converge far more slowly
/// than [`evolve`]; use it with several times more steps.
pub fn evolve_phase_frame(
    initial: &QuantumState,
    params: &GateParameters,
    realization: &NoiseRealization,
    steps: usize,
) -> Result<Trajectory> {
    params.validate()?;
    realization.validate()?;
    check_initial(initial)?;
    check_steps(steps)?;

    let mut channels: Vec<Operator> = build_decay_channels(params.gamma, &params.branching)
        .into_iter()
        .filter(|l| !l.is_zero())
        .collect();
    if realization.gamma0_realized > 0.0 {
        channels.extend(build_dephasing_channels(realization.gamma0_realized)?);
    }

    let dt = params.t_gate / steps as f64;
    let mut rho = *initial.matrix();
    let trace0 = rho.trace();
    let mut diag = Diagnostics::new();
    let mut times = Vec::with_capacity(steps + 1);
    let mut populations = Vec::with_capacity(steps + 1);
    times.push(0.0);
    populations.push(QuantumState::from_matrix(rho).populations());

    for n in 0..steps {
        let t = params.t_gate * n as f64 / steps as f64;
        let mut failure = None;
        rho = rk4_step(&rho, t, dt, |ts, r| {
            match build_hamiltonian(ts.min(params.t_gate), params, realization) {
                Ok(h) => lindblad_rhs(r, &h, &channels),
                Err(e) => {
                    failure = Some(e);
                    Matrix16::zeros()
                }
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        let asym = crate::model::max_abs(&(rho - rho.adjoint()));
        rho = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
        diag.max_hermiticity_error = diag.max_hermiticity_error.max(asym);
        let drift = (rho.trace() - trace0).norm();
        diag.max_trace_drift = diag.max_trace_drift.max(drift);
        if drift > QUALITY_TOLERANCE {
            return Err(Error::IntegrationQuality {
                step: n + 1,
                reason: format!("trace drift {drift:.3e}"),
            });
        }
        if (n + 1) % EIGEN_STRIDE == 0 || n + 1 == steps {
            let ev = crate::model::min_eigenvalue(&rho);
            diag.min_eigenvalue = diag.min_eigenvalue.min(ev);
            if ev < -QUALITY_TOLERANCE {
                return Err(Error::IntegrationQuality {
                    step: n + 1,
                    reason: format!("negative eigenvalue {ev:.3e}"),
                });
            }
        }
        times.push(params.t_gate * (n + 1) as f64 / steps as f64);
        populations.push(QuantumState::from_matrix(rho).populations());
    }

    Ok(Trajectory {
        times,
        populations,
        rho_final: QuantumState::from_matrix(rho),
        diagnostics: diag,
    })
}

/// Recycling term `ρ[dst_row, dst_col] += weight · ρ[src_row, src_col]` of one
/// pair of jump-operator entries.
#[derive(Clone, Copy, Debug)]
struct Jump {
    dst: usize,
    src: usize,
    weight: f64,
}

/// Off-diagonal Hamiltonian entry `H[row, col] = drive_k(t)` in the static
/// frame, with `k = 2·laser + atom`.
#[derive(Clone, Copy, Debug)]
struct Coupling {
    row: usize,
    col: usize,
    drive: usize,
}

/// Static-frame Lindbladian compiled onto the reachable subspace.
struct Generator {
    dim: usize,
    /// Subspace index → two-atom index.
    basis: Vec<usize>,
    h_diag: Vec<f64>,
    couplings: Vec<Coupling>,
    /// Real factor multiplying ρᵢⱼ from anticommutator and dephasing terms.
    damping: Vec<f64>,
    jumps: Vec<Jump>,
}

impl Generator {
    fn new(params: &GateParameters, realization: &NoiseRealization, rho0: &Matrix16) -> Self {
        // Full-space structure first.
        let mut full_couplings = Vec::new();
        for atom in 0..2 {
            for (laser, ground) in [(0usize, Level::Zero), (1, Level::One)] {
                for other in Level::ALL {
                    let (r, g) = if atom == 0 {
                        (
                            basis_index(Level::Rydberg, other),
                            basis_index(ground, other),
                        )
                    } else {
                        (
                            basis_index(other, Level::Rydberg),
                            basis_index(other, ground),
                        )
                    };
                    let drive = 2 * laser + atom;
                    full_couplings.push(Coupling {
                        row: r,
                        col: g,
                        drive,
                    });
                    full_couplings.push(Coupling {
                        row: g,
                        col: r,
                        drive,
                    });
                }
            }
        }
        // (to, from, amplitude) of every non-zero jump matrix element.
        let decay = build_decay_channels(params.gamma, &params.branching);
        let jump_entries: Vec<Vec<(usize, usize, f64)>> = decay
            .iter()
            .map(|l| {
                let mut e = Vec::new();
                for i in 0..DIM {
                    for j in 0..DIM {
                        if l[(i, j)].norm() > 0.0 {
                            e.push((i, j, l[(i, j)].re));
                        }
                    }
                }
                e
            })
            .filter(|e| !e.is_empty())
            .collect();

        // Reachable subspace from the support of ρ₀.
        let mut reach = [false; DIM];
        for i in 0..DIM {
            reach[i] = (0..DIM).any(|j| rho0[(i, j)].norm() > 0.0);
        }
        loop {
            let mut changed = false;
            for c in &full_couplings {
                if reach[c.col] && !reach[c.row] {
                    reach[c.row] = true;
                    changed = true;
                }
            }
            for entries in &jump_entries {
                for &(to, from, _) in entries {
                    if reach[from] && !reach[to] {
                        reach[to] = true;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let basis: Vec<usize> = (0..DIM).filter(|&i| reach[i]).collect();
        let dim = basis.len();
        let mut local = [usize::MAX; DIM];
        for (k, &i) in basis.iter().enumerate() {
            local[i] = k;
        }

        let energies = two_atom_frame_energies(params, realization);
        let h_diag: Vec<f64> = basis
            .iter()
            .map(|&i| -energies[i] + if i == RR { realization.v_realized } else { 0.0 })
            .collect();

        let couplings = full_couplings
            .iter()
            .filter(|c| reach[c.row] && reach[c.col])
            .map(|c| Coupling {
                row: local[c.row],
                col: local[c.col],
                drive: c.drive,
            })
            .collect();

        // Σ L†L for decay is diagonal: γ per Rydberg excitation.
        let kappa: Vec<f64> = basis
            .iter()
            .map(|&i| {
                let (a, b) = basis_levels(i);
                params.gamma * ((a == Level::Rydberg) as u8 + (b == Level::Rydberg) as u8) as f64
            })
            .collect();
        // Diagonal dephasing channels contribute −½Σ_c (l_ci − l_cj)² ρᵢⱼ.
        let dephasing: Vec<Vec<f64>> = if realization.gamma0_realized > 0.0 {
            build_dephasing_channels(realization.gamma0_realized)
                .expect("validated non-negative")
                .iter()
                .map(|l| basis.iter().map(|&i| l[(i, i)].re).collect())
                .collect()
        } else {
            Vec::new()
        };
        let mut damping = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                let deph: f64 = dephasing.iter().map(|l| (l[i] - l[j]).powi(2)).sum();
                damping[i * dim + j] = -0.5 * (kappa[i] + kappa[j]) - 0.5 * deph;
            }
        }

        let mut jumps = Vec::new();
        for entries in &jump_entries {
            for &(a, b, va) in entries {
                for &(c, d, vc) in entries {
                    if reach[a] && reach[b] && reach[c] && reach[d] {
                        jumps.push(Jump {
                            dst: local[a] * dim + local[c],
                            src: local[b] * dim + local[d],
                            weight: va * vc,
                        });
                    }
                }
            }
        }

        Self {
            dim,
            basis,
            h_diag,
            couplings,
            damping,
            jumps,
        }
    }

    #[inline]
    fn drives(params: &GateParameters, realization: &NoiseRealization, t: f64) -> [f64; 4] {
        let t = t.clamp(0.0, params.t_gate);
        std::array::from_fn(|k| drive(params, realization, k / 2, k % 2, t))
    }

    fn rhs(&self, drives: &[f64; 4], rho: &[C64], x: &mut [C64], out: &mut [C64]) {
        let d = self.dim;
        for i in 0..d {
            let h = self.h_diag[i];
            for j in 0..d {
                x[i * d + j] = rho[i * d + j] * h;
            }
        }
        for c in &self.couplings {
            let a = drives[c.drive];
            if a != 0.0 {
                let (src, dst) = (c.col * d, c.row * d);
                for j in 0..d {
                    let v = rho[src + j] * a;
                    x[dst + j] += v;
                }
            }
        }
        // −i(Hρ − ρH) with ρH = (Hρ)†.
        for i in 0..d {
            for j in 0..d {
                let comm = x[i * d + j] - x[j * d + i].conj();
                out[i * d + j] =
                    C64::new(comm.im, -comm.re) + rho[i * d + j] * self.damping[i * d + j];
            }
        }
        for jump in &self.jumps {
            out[jump.dst] += rho[jump.src] * jump.weight;
        }
    }

    fn run(
        &self,
        rho0: &Matrix16,
        params: &GateParameters,
        realization: &NoiseRealization,
        steps: usize,
        record: bool,
    ) -> Result<Trajectory> {
        let d = self.dim;
        let n2 = d * d;
        let mut rho: Vec<C64> = Vec::with_capacity(n2);
        for &i in &self.basis {
            for &j in &self.basis {
                rho.push(rho0[(i, j)]);
            }
        }
        let mut k1 = vec![C64::default(); n2];
        let mut k2 = vec![C64::default(); n2];
        let mut k3 = vec![C64::default(); n2];
        let mut k4 = vec![C64::default(); n2];
        let mut tmp = vec![C64::default(); n2];
        let mut x = vec![C64::default(); n2];

        let trace = |r: &[C64]| -> f64 { (0..d).map(|i| r[i * d + i].re).sum() };
        let trace0 = trace(&rho);
        let dt = params.t_gate / steps as f64;
        let mut diag = Diagnostics::new();

        let cap = if record { steps + 1 } else { 0 };
        let mut times = Vec::with_capacity(cap);
        let mut populations = Vec::with_capacity(cap);
        let record_pops = |r: &[C64]| -> [f64; DIM] {
            let mut p = [0.0; DIM];
            for (k, &i) in self.basis.iter().enumerate() {
                p[i] = r[k * d + k].re;
            }
            p
        };
        if record {
            times.push(0.0);
            populations.push(record_pops(&rho));
        }

        let mut drives_now = Self::drives(params, realization, 0.0);
        for n in 0..steps {
            let t = params.t_gate * n as f64 / steps as f64;
            let drives_mid = Self::drives(params, realization, t + 0.5 * dt);
            let drives_end = Self::drives(params, realization, t + dt);

            self.rhs(&drives_now, &rho, &mut x, &mut k1);
            for i in 0..n2 {
                tmp[i] = rho[i] + k1[i] * (0.5 * dt);
            }
            self.rhs(&drives_mid, &tmp, &mut x, &mut k2);
            for i in 0..n2 {
                tmp[i] = rho[i] + k2[i] * (0.5 * dt);
            }
            self.rhs(&drives_mid, &tmp, &mut x, &mut k3);
            for i in 0..n2 {
                tmp[i] = rho[i] + k3[i] * dt;
            }
            self.rhs(&drives_end, &tmp, &mut x, &mut k4);
            for i in 0..n2 {
                rho[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
            }
            drives_now = drives_end;

            // Re-symmetrise, tracking how far the step left Hermiticity.
            let mut asym: f64 = 0.0;
            for i in 0..d {
                let ii = i * d + i;
                asym = asym.max(2.0 * rho[ii].im.abs());
                rho[ii].im = 0.0;
                for j in (i + 1)..d {
                    let (a, b) = (rho[i * d + j], rho[j * d + i]);
                    asym = asym.max((a - b.conj()).norm());
                    let m = (a + b.conj()) * 0.5;
                    rho[i * d + j] = m;
                    rho[j * d + i] = m.conj();
                }
            }
            diag.max_hermiticity_error = diag.max_hermiticity_error.max(asym);

            let drift = (trace(&rho) - trace0).abs();
            diag.max_trace_drift = diag.max_trace_drift.max(drift);
            if drift > QUALITY_TOLERANCE || !drift.is_finite() {
                return Err(Error::IntegrationQuality {
                    step: n + 1,
                    reason: format!("trace drift {drift:.3e}"),
                });
            }
            if (n + 1) % EIGEN_STRIDE == 0 || n + 1 == steps {
                let ev = self.min_eigenvalue(&rho);
                diag.min_eigenvalue = diag.min_eigenvalue.min(ev);
                if ev < -QUALITY_TOLERANCE || ev.is_nan() {
                    return Err(Error::IntegrationQuality {
                        step: n + 1,
                        reason: format!("negative eigenvalue {ev:.3e}"),
                    });
                }
            }
            if record {
                times.push(params.t_gate * (n + 1) as f64 / steps as f64);
                populations.push(record_pops(&rho));
            }
        }

        let mut full = Matrix16::zeros();
        for (a, &i) in self.basis.iter().enumerate() {
            for (b, &j) in self.basis.iter().enumerate() {
                full[(i, j)] = rho[a * d + b];
            }
        }
        if !record {
            times = vec![0.0, params.t_gate];
            populations = vec![
                QuantumState::from_matrix(*rho0).populations(),
                QuantumState::from_matrix(full).populations(),
            ];
        }
        let rho_final = QuantumState::from_matrix(static_to_phase_frame(
            &full,
            params.t_gate,
            params,
            realization,
        ));
        Ok(Trajectory {
            times,
            populations,
            rho_final,
            diagnostics: diag,
        })
    }

    fn min_eigenvalue(&self, rho: &[C64]) -> f64 {
        let d = self.dim;
        DMatrix::from_fn(d, d, |i, j| rho[i * d + j])
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}
