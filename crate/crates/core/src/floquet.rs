//! Time-ordered propagators, the exact effective Hamiltonian with its
//! micromotion, and the analytic node-sum (rotating-wave / stationary-phase)
//! Hamiltonians.
//!
//! The lab-frame circuit Hamiltonian is
//! `H(t) = (h f0/2)[phi^2/(2 pi zeta) + 2 pi zeta n^2] - E_J cos(phi - Phi(t))`.
//! Propagation uses Strang splitting between the momentum-diagonal kinetic
//! part and the phi-diagonal rest, each factor exponentiated exactly, with
//! the drive sampled at step midpoints.
//!
//! The Floquet decomposition is kept in the gauge of the comoving phase-space
//! frame: `U~(t) = R_{Omega~ t}^dag U_lab(t)` is the rotating-frame
//! propagator, `H_eff = i log U~(T~) / T~` with the logarithm branch selected
//! by matching eigenstate expectations of an analytic reference (the node-sum
//! Hamiltonian), and `M(t) = U~(t) exp(+i H_eff t)` is the micromotion, which
//! approaches the identity in the rapid-driving limit and satisfies
//! `M(0) = M(T~) = 1` up to integrator tolerance.

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use ndarray::{Array1, Array2, Axis};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::drive::{self, PhaseSignal, Waveform};
use crate::grid::{self, MomentumBasis, Operator, PhaseGrid, Rotor};
use crate::linalg::{self, dagger};
use crate::{Error, Result, ANGULAR};

/// Circuit configuration: detuning, junction energy, impedance, drive signal
/// and the commensurability `Omega~ = (p/q) Omega`.
#[derive(Clone, Debug)]
pub struct CircuitParams {
    /// Detuning `delta_f = f0 - (p/q) f_dr` in units of `f0`.
    pub delta_f: f64,
    /// Josephson energy in units of `h f0`.
    pub josephson_energy: f64,
    /// Dimensionless impedance `zeta`.
    pub impedance: f64,
    /// Drive signal (odd-harmonic waveform plus any protocol tones).
    pub signal: PhaseSignal,
    pub p: u32,
    pub q: u32,
}

fn gcd(a: u32, b: u32) -> u32 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl CircuitParams {
    pub fn new(
        delta_f: f64,
        josephson_energy: f64,
        impedance: f64,
        signal: PhaseSignal,
        p: u32,
        q: u32,
    ) -> Result<Self> {
        if josephson_energy < 0.0 {
            return Err(Error::Params("Josephson energy must be non-negative".into()));
        }
        if impedance <= 0.0 {
            return Err(Error::Params("impedance must be positive".into()));
        }
        if p == 0 || q == 0 || gcd(p, q) != 1 {
            return Err(Error::Params(format!("p = {p}, q = {q} must be coprime and nonzero")));
        }
        if !(1..=3).contains(&q) {
            return Err(Error::Params(format!("q = {q} unsupported (q in {{1,2,3}})")));
        }
        let f_dr = signal.waveform.base_frequency;
        let implied = 1.0 - (p as f64 / q as f64) * f_dr;
        if (implied - delta_f).abs() > 1e-12 {
            return Err(Error::Params(format!(
                "delta_f = {delta_f} inconsistent with f_dr = {f_dr}, p/q = {p}/{q} \
                 (implied {implied})"
            )));
        }
        Ok(Self { delta_f, josephson_energy, impedance, signal, p, q })
    }

    /// Square-code configuration (`p = 1`, `q = 2`), with the waveform
    /// frequency checked against the detuning.
    pub fn square(
        delta_f: f64,
        josephson_energy: f64,
        impedance: f64,
        waveform: Waveform,
    ) -> Result<Self> {
        Self::new(delta_f, josephson_energy, impedance, drive::phase_signal(&waveform), 1, 2)
    }

    pub fn drive_period(&self) -> f64 {
        self.signal.waveform.period()
    }

    /// Extended period `T~ = q T` of the rotating-frame Hamiltonian.
    pub fn extended_period(&self) -> f64 {
        self.q as f64 * self.drive_period()
    }

    /// Sideband angular frequency `Omega~ = (p/q) Omega` (radians per `1/f0`).
    pub fn sideband_angular(&self) -> f64 {
        (self.p as f64 / self.q as f64) * self.signal.waveform.angular_frequency()
    }

    /// Sideband quantum `hbar Omega~` in units of `h f0`.
    pub fn sideband_energy(&self) -> f64 {
        self.sideband_angular() / TAU
    }

    /// Adaptive grid for this configuration from the effective barrier.
    pub fn default_grid(&self) -> Result<PhaseGrid> {
        let barrier = effective_barrier_general(self).abs();
        grid::build_grid(barrier, self.delta_f.abs(), self.impedance)
    }
}

/// Propagation and operator workspace for one circuit configuration on one
/// grid.
pub struct FloquetEngine {
    pub params: CircuitParams,
    pub grid: PhaseGrid,
    basis: MomentumBasis,
    rotor: Rotor,
    phi: Array1<f64>,
    kinetic: Array1<f64>,
}

impl FloquetEngine {
    pub fn new(params: CircuitParams, grid: PhaseGrid) -> Result<Self> {
        let basis = MomentumBasis::new(grid);
        let rotor = Rotor::new(&grid)?;
        let phi = grid.phi_values();
        let kinetic = basis.momenta().mapv(|nk| PI * grid.impedance * nk * nk);
        Ok(Self { params, grid, basis, rotor, phi, kinetic })
    }

    pub fn rotor(&self) -> &Rotor {
        &self.rotor
    }

    pub fn basis(&self) -> &MomentumBasis {
        &self.basis
    }

    /// Time integral of the phi-diagonal part of `H(t)` over `[t, t+dt]`
    /// (units `h f0 / f0`). The phi-diagonal factors at different times
    /// commute, so integrating the drive inside the step removes the fast
    /// phase sweep from the splitting error:
    /// `Int cos(phi - Phi(s)) ds = Re[e^{i phi} Int e^{-i Phi(s)} ds]`.
    fn potential_integral(&self, t: f64, dt: f64) -> Array1<f64> {
        let zeta = self.grid.impedance;
        let ej = self.params.josephson_energy;
        // 8-point Gauss-Legendre handles the <~2.5 rad intrastep phase sweep
        const GL_X: [f64; 8] = [
            -0.960_289_856_497_536_2,
            -0.796_666_477_413_626_7,
            -0.525_532_409_916_329,
            -0.183_434_642_495_649_8,
            0.183_434_642_495_649_8,
            0.525_532_409_916_329,
            0.796_666_477_413_626_7,
            0.960_289_856_497_536_2,
        ];
        const GL_W: [f64; 8] = [
            0.101_228_536_290_376_26,
            0.222_381_034_453_374_47,
            0.313_706_645_877_887_3,
            0.362_683_783_378_362,
            0.362_683_783_378_362,
            0.313_706_645_877_887_3,
            0.222_381_034_453_374_47,
            0.101_228_536_290_376_26,
        ];
        let mut c = C64::new(0.0, 0.0);
        for (x, w) in GL_X.iter().zip(GL_W.iter()) {
            let s = t + 0.5 * dt * (1.0 + x);
            c += C64::from_polar(*w, -self.params.signal.phi(s));
        }
        c *= 0.5 * dt;
        self.phi.mapv(|phi| {
            phi * phi / (2.0 * TAU * zeta) * dt - ej * (C64::from_polar(1.0, phi) * c).re
        })
    }

    fn apply_kinetic(&self, dt: f64, u: &mut Array2<C64>) {
        let diag: Vec<C64> = self
            .kinetic
            .iter()
            .map(|&e| C64::from_polar(1.0, -ANGULAR * e * dt))
            .collect();
        let cols: Vec<_> = u.axis_iter_mut(Axis(1)).collect();
        cols.into_par_iter().for_each(|mut col| {
            let mut buf: Vec<C64> = col.iter().copied().collect();
            self.basis.to_momentum(&mut buf);
            for (b, g) in buf.iter_mut().zip(diag.iter()) {
                *b *= g;
            }
            self.basis.to_position(&mut buf);
            for (x, b) in col.iter_mut().zip(buf.iter()) {
                *x = *b;
            }
        });
    }

    fn apply_potential(&self, t: f64, dt: f64, u: &mut Array2<C64>) {
        let v = self.potential_integral(t, dt);
        let phases: Vec<C64> = v.iter().map(|&e| C64::from_polar(1.0, -ANGULAR * e)).collect();
        for (mut row, ph) in u.axis_iter_mut(Axis(0)).zip(phases.iter()) {
            row.mapv_inplace(|z| z * ph);
        }
    }

    /// Lab-frame propagator `U(t1, t0)` by Strang splitting with `steps`
    /// uniform steps, visiting `U` at the requested sample steps.
    pub fn propagate_lab_visit(
        &self,
        t0: f64,
        t1: f64,
        steps: usize,
        sample_steps: &[usize],
        mut visit: impl FnMut(usize, f64, &Array2<C64>),
    ) -> Array2<C64> {
        let d = self.grid.dimension;
        let dt = (t1 - t0) / steps as f64;
        // invariant: U(t_m) = exp(-i K dt/2) W_m
        let mut w: Array2<C64> = Array2::eye(d).mapv(|x: f64| C64::new(x, 0.0));
        self.apply_kinetic(-0.5 * dt, &mut w);
        let mut samp_iter = sample_steps.iter().peekable();
        for m in 0..=steps {
            let t = t0 + m as f64 * dt;
            while samp_iter.peek() == Some(&&m) {
                samp_iter.next();
                let mut u = w.clone();
                self.apply_kinetic(0.5 * dt, &mut u);
                visit(m, t, &u);
            }
            if m == steps {
                break;
            }
            self.apply_kinetic(dt, &mut w);
            self.apply_potential(t, dt, &mut w);
        }
        self.apply_kinetic(0.5 * dt, &mut w);
        w
    }

    /// Lab-frame propagator over `[t0, t1]`.
    pub fn propagator_lab(&self, t0: f64, t1: f64, steps_per_period: usize) -> Result<Operator> {
        if steps_per_period < 64 {
            return Err(Error::Params(format!(
                "steps_per_period = {steps_per_period} below the minimum of 64"
            )));
        }
        let steps =
            ((t1 - t0) / self.params.drive_period() * steps_per_period as f64).round() as usize;
        let steps = steps.max(4);
        let u = self.propagate_lab_visit(t0, t1, steps, &[], |_, _, _| {});
        Ok(Operator::new(u, self.grid))
    }

    /// Rotating-frame propagator `U~(t) = R_{Omega~ t}^dag U_lab(t)` from the
    /// window start at `t = 0`.
    pub fn propagator_rotating(&self, t: f64, steps_per_period: usize) -> Result<Operator> {
        let u = self.propagator_lab(0.0, t, steps_per_period)?;
        let r = self.rotor.at(self.params.sideband_angular() * t);
        Ok(Operator::new(dagger(&r.matrix).dot(&u.matrix), self.grid))
    }
}

/// Lab-frame propagator with a step-doubling convergence check.
///
/// Returns the finer result and the doubling difference; errors if doubling
/// changed the result by more than `1e-4` in max norm.
pub fn propagator(
    params: &CircuitParams,
    grid: &PhaseGrid,
    t0: f64,
    t1: f64,
    steps_per_period: usize,
) -> Result<(Operator, f64)> {
    let engine = FloquetEngine::new(params.clone(), *grid)?;
    let coarse = engine.propagator_lab(t0, t1, steps_per_period)?;
    let fine = engine.propagator_lab(t0, t1, 2 * steps_per_period)?;
    let diff = linalg::max_abs(&(&fine.matrix - &coarse.matrix));
    if diff > 1e-4 {
        return Err(Error::PropagatorConvergence(diff));
    }
    Ok((fine, diff))
}

/// Effective Hamiltonian, quasienergies and eigenstates from one extended
/// period of the propagator.
#[derive(Clone)]
pub struct FloquetDecomposition {
    pub grid: PhaseGrid,
    /// Extended period `T~`.
    pub extended_period: f64,
    /// Sideband quantum `hbar Omega~` in `h f0` units.
    pub sideband_energy: f64,
    /// One-extended-period rotating-frame propagator `U~(T~)`.
    pub propagator: Operator,
    pub effective_hamiltonian: Operator,
    /// Quasienergies, branch-matched to the reference, ascending.
    pub quasienergies: Array1<f64>,
    /// Eigenstate columns, same order as `quasienergies`.
    pub eigenstates: Array2<C64>,
    /// Marked when the branch assignment was ambiguous for a state.
    pub branch_flags: Vec<bool>,
    /// Sampled micromotion `(t_k, M(t_k))`; empty when skipped for size.
    pub micromotion_samples: Vec<(f64, Array2<C64>)>,
}

impl FloquetDecomposition {
    pub fn flagged(&self) -> usize {
        self.branch_flags.iter().filter(|&&f| f).count()
    }

    /// `exp(+2 pi i H_eff t)` from the spectral data.
    pub fn exp_heff(&self, t: f64) -> Array2<C64> {
        let d = self.quasienergies.len();
        let mut scaled = Array2::zeros((d, d));
        for (k, col) in self.eigenstates.axis_iter(Axis(1)).enumerate() {
            let ph = C64::from_polar(1.0, ANGULAR * self.quasienergies[k] * t);
            scaled.column_mut(k).assign(&col.mapv(|z| z * ph));
        }
        scaled.dot(&dagger(&self.eigenstates))
    }

    /// Ground-pair splitting and the gap to the third state.
    pub fn ground_gap(&self) -> (f64, f64) {
        (
            self.quasienergies[1] - self.quasienergies[0],
            self.quasienergies[2] - self.quasienergies[1],
        )
    }
}

/// Branch-matched logarithm of a unitary propagator.
///
/// Eigenphases define quasienergies modulo `1/T~` (in `h f0` units); each
/// branch is chosen so the quasienergy is as close as possible to the
/// eigenstate expectation of `reference`. States whose two nearest branches
/// are almost equidistant from the reference expectation are flagged, not
/// failed.
pub fn effective_hamiltonian(
    u: &Operator,
    extended_period: f64,
    reference: &Operator,
) -> Result<(Array1<f64>, Array2<C64>, Vec<bool>)> {
    let resid = u.unitarity_residual();
    if resid > 1e-6 {
        return Err(Error::Params(format!("propagator is not unitary: residual {resid:.3e}")));
    }
    let (vals, vecs) = linalg::eig_normal(&u.matrix, 1e-6)?;
    let d = vals.len();
    let zone = 1.0 / extended_period;

    let mut eps = Array1::zeros(d);
    let mut flags = vec![false; d];
    for a in 0..d {
        // lambda = exp(-2 pi i eps T~)
        let theta = -vals[a].arg() / (ANGULAR * extended_period);
        let col = vecs.column(a).to_owned();
        let r = linalg::expectation(&reference.matrix, &col).re;
        let x = (r - theta) / zone;
        let m = x.round();
        eps[a] = theta + m * zone;
        // ambiguous: the two nearest branches equidistant within 1e-3 hbar/T~
        if (x - m).abs() > 0.5 - 1e-3 / TAU {
            flags[a] = true;
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eps[i].partial_cmp(&eps[j]).unwrap());
    let eps_sorted = Array1::from(order.iter().map(|&i| eps[i]).collect::<Vec<_>>());
    let mut vecs_sorted = Array2::zeros((d, d));
    for (newc, &oldc) in order.iter().enumerate() {
        vecs_sorted.column_mut(newc).assign(&vecs.column(oldc));
    }
    let flags_sorted: Vec<bool> = order.iter().map(|&i| flags[i]).collect();
    Ok((eps_sorted, vecs_sorted, flags_sorted))
}

/// Options for the full Floquet build.
#[derive(Clone, Copy, Debug)]
pub struct BuildOptions {
    pub steps_per_period: usize,
    /// Micromotion samples stored in the decomposition (0 to skip).
    pub stored_micromotion: usize,
    /// Verify step-doubling convergence of the one-period propagator.
    pub check_convergence: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { steps_per_period: 512, stored_micromotion: 16, check_convergence: false }
    }
}

/// Full pipeline: propagate one extended period, take the branch-matched
/// logarithm against the reference, and sample the micromotion.
pub fn build_floquet(
    engine: &FloquetEngine,
    reference: &Operator,
    opts: BuildOptions,
) -> Result<FloquetDecomposition> {
    let params = &engine.params;
    let t_ext = params.extended_period();
    let u_rot = engine.propagator_rotating(t_ext, opts.steps_per_period)?;
    if opts.check_convergence {
        let u2 = engine.propagator_rotating(t_ext, 2 * opts.steps_per_period)?;
        let diff = linalg::max_abs(&(&u2.matrix - &u_rot.matrix));
        if diff > 1e-4 {
            return Err(Error::PropagatorConvergence(diff));
        }
    }
    let (eps, vecs, flags) = effective_hamiltonian(&u_rot, t_ext, reference)?;

    let scaled = {
        let d = engine.grid.dimension;
        let mut s: Array2<C64> = Array2::zeros((d, d));
        for (k, col) in vecs.axis_iter(Axis(1)).enumerate() {
            let e = C64::new(eps[k], 0.0);
            s.column_mut(k).assign(&col.mapv(|z| z * e));
        }
        s
    };
    let heff = scaled.dot(&dagger(&vecs));

    let mut decomp = FloquetDecomposition {
        grid: engine.grid,
        extended_period: t_ext,
        sideband_energy: params.sideband_energy(),
        propagator: u_rot,
        effective_hamiltonian: Operator::new(heff, engine.grid),
        quasienergies: eps,
        eigenstates: vecs,
        branch_flags: flags,
        micromotion_samples: Vec::new(),
    };
    if opts.stored_micromotion > 0 {
        decomp.micromotion_samples =
            micromotion(engine, &decomp, opts.stored_micromotion, opts.steps_per_period)?;
    }
    Ok(decomp)
}

/// Micromotion samples `M(t_k) = U~(t_k) exp(+i H_eff t_k)` at `count`
/// uniform times spanning `[0, T~]` inclusive.
pub fn micromotion(
    engine: &FloquetEngine,
    decomp: &FloquetDecomposition,
    count: usize,
    steps_per_period: usize,
) -> Result<Vec<(f64, Array2<C64>)>> {
    let mut out = Vec::with_capacity(count + 1);
    micromotion_visit(engine, decomp, count, steps_per_period, |t, m| {
        out.push((t, m.clone()));
    })?;
    Ok(out)
}

/// Stream micromotion samples without storing them.
pub fn micromotion_visit(
    engine: &FloquetEngine,
    decomp: &FloquetDecomposition,
    count: usize,
    steps_per_period: usize,
    mut visit: impl FnMut(f64, &Array2<C64>),
) -> Result<()> {
    let t_ext = engine.params.extended_period();
    let steps = (engine.params.q as usize) * steps_per_period;
    if steps % count != 0 {
        return Err(Error::Params(format!(
            "micromotion sample count {count} must divide the step count {steps}"
        )));
    }
    let stride = steps / count;
    let sample_steps: Vec<usize> = (0..=count).map(|k| k * stride).collect();
    let omega_tilde = engine.params.sideband_angular();
    engine.propagate_lab_visit(0.0, t_ext, steps, &sample_steps, |_, t, u_lab| {
        let r = engine.rotor.at(omega_tilde * t);
        let u_rot = dagger(&r.matrix).dot(u_lab);
        let m = u_rot.dot(&decomp.exp_heff(t));
        visit(t, &m);
    });
    Ok(())
}

/// Node-sum barrier prefactor for a general `p/q` configuration.
fn effective_barrier_general(params: &CircuitParams) -> f64 {
    let w = &params.signal.waveform;
    let phi0 = drive::phase_amplitude(w);
    let slope = w.slope(0.0).abs();
    let t = w.period();
    params.josephson_energy * (phi0 - FRAC_PI_4).cos() / (t * (2.0 * slope).sqrt())
}

/// Signed effective barrier
/// `E~_J = E_J cos(Phi0 - pi/4) / (T sqrt(2e|V'(0)|/h))`
/// of the square configuration. A negative value means the wells sit at
/// `phi = pi + 2 pi Z`.
pub fn effective_barrier(params: &CircuitParams) -> Result<f64> {
    if params.q != 2 || params.p != 1 {
        return Err(Error::Params(
            "effective barrier defined for the square (p=1, q=2) configuration".into(),
        ));
    }
    Ok(effective_barrier_general(params))
}

/// Analytic rotating-wave Hamiltonian of the square configuration:
/// `H_d - E~_J [cos phi + cos(2 pi zeta n)]`.
pub fn rwa_hamiltonian_square(params: &CircuitParams, grid: &PhaseGrid) -> Result<Operator> {
    let barrier = effective_barrier(params)?;
    let mut h = grid::oscillator_generator(grid).matrix * C64::new(params.delta_f, 0.0);
    for j in 0..grid.dimension {
        h[(j, j)] -= C64::new(barrier * grid.phi(j).cos(), 0.0);
    }
    let basis = MomentumBasis::new(*grid);
    let zeta = grid.impedance;
    let s2 = basis.momentum_function(|nk| (TAU * zeta * nk).cos());
    h = h - s2 * C64::new(barrier, 0.0);
    let hd = dagger(&h);
    h = (&h + &hd) * C64::new(0.5, 0.0);
    Ok(Operator::new(h, *grid))
}

/// General node-sum rotating-wave Hamiltonian:
/// `H_d - sum_i E_J cos[phi cos(Omega~ t_i) - 2 pi zeta n sin(Omega~ t_i)
///  - Phi(t_i) - (pi/4) mu_i] / (q T sqrt(2e|V'(t_i)|/h))`,
/// over the voltage nodes of one extended period. Node times and slopes come
/// from the odd-harmonic waveform; `Phi(t_i)` includes any offset tones.
pub fn rwa_hamiltonian_general(params: &CircuitParams, grid: &PhaseGrid) -> Result<Operator> {
    let t_period = params.drive_period();
    let q = params.q as f64;
    let omega_tilde = params.sideband_angular();
    let nodes = drive::nodes(&params.signal.waveform, 0.0, params.q)?;

    let mut h = grid::oscillator_generator(grid).matrix * C64::new(params.delta_f, 0.0);
    let basis = MomentumBasis::new(*grid);
    let zeta = grid.impedance;
    let phi_op = grid::phase_operator(grid);
    let n_op = grid::number_operator(grid);

    for node in &nodes {
        let c = (omega_tilde * node.time).cos();
        let s = (omega_tilde * node.time).sin();
        let chi = params.signal.phi(node.time) + FRAC_PI_4 * node.mu;
        let weight =
            params.josephson_energy / (q * t_period * (2.0 * node.slope.abs()).sqrt());
        // the node contributes cos(c*phi + beta*n - chi), beta = -2*pi*zeta*s
        let beta = -TAU * zeta * s;
        let shift_sites = beta / grid.spacing;
        let term: Array2<C64> = if s.abs() < 1e-12 {
            let d = grid.dimension;
            let mut m = Array2::zeros((d, d));
            for j in 0..d {
                m[(j, j)] = C64::new((c * grid.phi(j) - chi).cos(), 0.0);
            }
            m
        } else if c.abs() < 1e-12 {
            basis.momentum_function(|nk| (beta * nk - chi).cos())
        } else if (shift_sites - shift_sites.round()).abs() < 1e-9 {
            // lattice-commensurate translation: exact circular-shift form,
            // e^{i(c phi + beta n)} = e^{i c beta / 2} diag(e^{i c phi}) Shift
            cos_displacement(grid, c, beta, chi)
        } else {
            // generic quadrature direction: diagonalize c*phi + beta*n
            let a = &phi_op.matrix * C64::new(c, 0.0) + &n_op.matrix * C64::new(beta, 0.0);
            let (vals, vecs) = linalg::eigh(&a)?;
            let d = grid.dimension;
            let mut scaled = Array2::zeros((d, d));
            for (k, col) in vecs.axis_iter(Axis(1)).enumerate() {
                let f = C64::new((vals[k] - chi).cos(), 0.0);
                scaled.column_mut(k).assign(&col.mapv(|z| z * f));
            }
            scaled.dot(&dagger(&vecs))
        };
        h = h - term * C64::new(weight, 0.0);
    }
    let hd = dagger(&h);
    h = (&h + &hd) * C64::new(0.5, 0.0);
    Ok(Operator::new(h, *grid))
}

/// `cos(c*phi + beta*n - chi)` as an exact lattice operator when `beta` is a
/// whole number of grid sites: split `e^{i(c phi + beta n)}` into the phase
/// diagonal and the circular shift by `beta/dphi` sites (central BCH factor
/// `e^{i c beta / 2}`), then take the hermitian cosine combination.
fn cos_displacement(grid: &PhaseGrid, c: f64, beta: f64, chi: f64) -> Array2<C64> {
    let d = grid.dimension;
    let m = (beta / grid.spacing).round() as i64;
    let scalar = C64::from_polar(0.5, c * beta / 2.0 - chi);
    let mut out: Array2<C64> = Array2::zeros((d, d));
    for j in 0..d as i64 {
        let k = (j + m).rem_euclid(d as i64);
        let p = scalar * C64::from_polar(1.0, c * grid.phi(j as usize));
        out[(j as usize, k as usize)] += p;
        out[(k as usize, j as usize)] += p.conj();
    }
    out
}

/// Spectral comparison of the exact effective Hamiltonian against the
/// node-sum approximation.
#[derive(Clone, Debug)]
pub struct RwaExactReport {
    /// Eigenvalue differences (exact - analytic) over the compared band.
    pub eigenvalue_differences: Vec<f64>,
    /// Overlap fidelity of the twofold ground manifolds,
    /// `(1/2) sum_{ab} |<exact_a|rwa_b>|^2`.
    pub ground_manifold_fidelity: f64,
    /// Ground-manifold stabilizer expectations of the exact decomposition.
    pub exact_stabilizers: (f64, f64),
    /// Same for the analytic ground manifold.
    pub rwa_stabilizers: (f64, f64),
    pub compared_states: usize,
}

impl RwaExactReport {
    /// Structured text record, `key: value` lines.
    pub fn to_text(&self) -> String {
        let max_diff = self
            .eigenvalue_differences
            .iter()
            .fold(0.0_f64, |m, &v| m.max(v.abs()));
        format!(
            "compared_states: {}\nground_manifold_fidelity: {}\n\
             exact_s1: {}\nexact_s2: {}\nrwa_s1: {}\nrwa_s2: {}\n\
             max_eigenvalue_difference: {}\n",
            self.compared_states,
            self.ground_manifold_fidelity,
            self.exact_stabilizers.0,
            self.exact_stabilizers.1,
            self.rwa_stabilizers.0,
            self.rwa_stabilizers.1,
            max_diff
        )
    }
}

pub fn rwa_vs_exact_report(
    decomp: &FloquetDecomposition,
    rwa: &Operator,
) -> Result<RwaExactReport> {
    let grid = decomp.grid;
    let (rvals, rvecs) = linalg::eigh(&rwa.matrix)?;
    let _ = rvals;
    let wells = (2.0 * grid.extent / TAU).round() as usize + 1;
    let count = (2 * wells).min(grid.dimension);

    let diffs: Vec<f64> = (0..count)
        .map(|k| {
            decomp.quasienergies[k]
                - linalg::eigh(&rwa.matrix).map(|(v, _)| v[k]).unwrap_or(f64::NAN)
        })
        .collect();

    let mut fid = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            let ov: C64 = decomp
                .eigenstates
                .column(a)
                .iter()
                .zip(rvecs.column(b).iter())
                .map(|(x, y)| x.conj() * y)
                .sum();
            fid += ov.norm_sqr();
        }
    }
    fid /= 2.0;

    let (s1, s2) = grid::stabilizer_operators(&grid);
    let manifold_stabs = |vecs: &Array2<C64>| {
        let mut e1 = 0.0;
        let mut e2 = 0.0;
        for a in 0..2 {
            let col = vecs.column(a).to_owned();
            e1 += linalg::expectation(&s1.matrix, &col).re;
            e2 += linalg::expectation(&s2.matrix, &col).re;
        }
        (e1 / 2.0, e2 / 2.0)
    };

    Ok(RwaExactReport {
        eigenvalue_differences: diffs,
        ground_manifold_fidelity: fid,
        exact_stabilizers: manifold_stabs(&decomp.eigenstates),
        rwa_stabilizers: manifold_stabs(&rvecs),
        compared_states: count,
    })
}


#[cfg(test)]
mod tests {
    use super::test_support::{mini_grid, table1_params};
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn effective_barrier_table1() {
        let p = table1_params();
        let e = effective_barrier(&p).unwrap();
        assert!((e - 0.11).abs() / 0.11 < 0.05, "E~_J = {e}");
        assert!(e > 0.0);
    }

    #[test]
    fn effective_barrier_scaling_and_zero() {
        let p = table1_params();
        let phi0 = drive::phase_amplitude(&p.signal.waveform);
        let e1 = effective_barrier(&p).unwrap();

        // |V'(0)|^(-1/2) scaling: doubling V0 doubles the slope, and the
        // cosine factor tracks the doubled Phi0
        let w2 = drive::capped_waveform(
            2.0 * p.signal.waveform.amplitude_scale,
            p.signal.waveform.base_frequency,
        )
        .unwrap();
        let p2 = CircuitParams::square(p.delta_f, p.josephson_energy, p.impedance, w2).unwrap();
        let e2 = effective_barrier(&p2).unwrap();
        let expected =
            e1 * (2.0 * phi0 - FRAC_PI_4).cos() / (phi0 - FRAC_PI_4).cos() / 2.0_f64.sqrt();
        assert_abs_diff_eq!(e2, expected, epsilon = 1e-12);

        // Phi0 - pi/4 = pi/2 kills the barrier
        let offset = (phi0 - FRAC_PI_4).rem_euclid(TAU);
        let target = phi0 + (FRAC_PI_4 + std::f64::consts::FRAC_PI_2 + TAU - offset) - FRAC_PI_4;
        let scale = (target - (target - phi0 - (std::f64::consts::FRAC_PI_2 + TAU - offset)))
            / phi0;
        let _ = scale;
        let v0_new = p.signal.waveform.amplitude_scale
            * (phi0 + std::f64::consts::FRAC_PI_2 + TAU - offset)
            / phi0;
        let w3 = drive::capped_waveform(v0_new, p.signal.waveform.base_frequency).unwrap();
        let p3 = CircuitParams::square(p.delta_f, p.josephson_energy, p.impedance, w3).unwrap();
        let e3 = effective_barrier(&p3).unwrap();
        assert!(e3.abs() < 1e-9 * e1.abs(), "barrier at the cosine zero: {e3}");
    }

    #[test]
    fn rwa_general_reduces_to_square() {
        let p = table1_params();
        let g = mini_grid();
        let hs = rwa_hamiltonian_square(&p, &g).unwrap();
        let hg = rwa_hamiltonian_general(&p, &g).unwrap();
        let diff = linalg::max_abs(&(&hs.matrix - &hg.matrix));
        assert!(diff < 1e-10, "square vs general node sum: {diff}");
    }

    #[test]
    fn rwa_general_ej_zero_is_detuning_oscillator() {
        let p = CircuitParams { josephson_energy: 0.0, ..table1_params() };
        let g = mini_grid();
        let h = rwa_hamiltonian_general(&p, &g).unwrap();
        let hd = grid::oscillator_generator(&g).matrix * C64::new(p.delta_f, 0.0);
        assert!(linalg::max_abs(&(&h.matrix - &hd)) < 1e-12);
    }

    #[test]
    fn hexagonal_node_sum_symmetry() {
        // q = 3, zeta = 4/sqrt(3), Phi0 = pi/4 + 2 pi z
        let zeta = 4.0 / 3.0_f64.sqrt();
        let delta_f = 0.004;
        let f_dr = 3.0 * (1.0 - delta_f);
        let omega = TAU * f_dr;
        let phi0_target = FRAC_PI_4 + 5.0 * TAU;
        let wf = Waveform::sine(f_dr, phi0_target * omega / drive::PHASE_RATE);
        assert_abs_diff_eq!(drive::phase_amplitude(&wf), phi0_target, epsilon = 1e-9);
        let p = CircuitParams::new(delta_f, 2.25, zeta, drive::phase_signal(&wf), 1, 3).unwrap();

        let g = PhaseGrid::with_points(20, 20 * 9, zeta).unwrap();
        let h = rwa_hamiltonian_general(&p, &g).unwrap();
        assert!(h.herm_residual() < 1e-10);
        let r = grid::rotation(&g, TAU / 3.0).unwrap();
        let comm = h.matrix.dot(&r.matrix) - r.matrix.dot(&h.matrix);
        let psi = grid::gaussian_state(&g, 0.0, 0.0, 1.5);
        let nrm = linalg::norm(&comm.dot(&psi));
        assert!(nrm < 1e-6, "hexagonal rotation symmetry violated: {nrm}");
    }

    #[test]
    fn propagator_free_oscillator_is_rotation() {
        let wf = Waveform::sine(2.0, 1.0);
        let p = CircuitParams::square(0.0, 0.0, 2.0, wf).unwrap();
        let g = PhaseGrid::with_points(12, 12 * 4, 2.0).unwrap();
        let engine = FloquetEngine::new(p.clone(), g).unwrap();
        let t_ext = p.extended_period();
        let u = engine.propagator_lab(0.0, t_ext, 256).unwrap();
        assert!(u.unitarity_residual() < 1e-8, "{}", u.unitarity_residual());
        let r = engine.rotor().at(TAU * t_ext);
        let psi = grid::gaussian_state(&g, 1.0, 0.2, 1.5);
        let upsi = u.matrix.dot(&psi);
        let rpsi = r.matrix.dot(&psi);
        let ov: C64 = rpsi.iter().zip(upsi.iter()).map(|(a, b)| a.conj() * b).sum();
        assert!(ov.norm() > 1.0 - 1e-6, "overlap {}", ov.norm());
    }

    #[test]
    fn propagator_detuned_oscillator_quasienergies() {
        let delta_f = 0.0012;
        let wf = Waveform::sine(2.0 * (1.0 - delta_f), 1.0);
        let p = CircuitParams::square(delta_f, 0.0, 2.0, wf).unwrap();
        let g = PhaseGrid::with_points(16, 16 * 6, 2.0).unwrap();
        let engine = FloquetEngine::new(p.clone(), g).unwrap();
        let reference = rwa_hamiltonian_general(&p, &g).unwrap();
        let decomp = build_floquet(
            &engine,
            &reference,
            BuildOptions { steps_per_period: 4096, stored_micromotion: 0, check_convergence: false },
        )
        .unwrap();
        for m in 0..20 {
            let expect = (m as f64 + 0.5) * delta_f;
            let got = decomp.quasienergies[m];
            assert!(
                (got - expect).abs() < 1e-3 * delta_f,
                "state {m}: {got} vs {expect}"
            );
            assert!(!decomp.branch_flags[m], "state {m} flagged");
        }
    }

    #[test]
    fn effective_hamiltonian_log_exp_inverse() {
        let g = PhaseGrid::with_points(8, 16, 2.0).unwrap();
        let gen = grid::oscillator_generator(&g);
        let h0 = Operator::new(gen.matrix.mapv(|z| z * 0.002), g);
        let t_ext = 1.0;
        let (vals, vecs) = linalg::eigh(&h0.matrix).unwrap();
        let u = Operator::new(linalg::exp_from_eigh(&vals, &vecs, ANGULAR * t_ext), g);
        let (eps, evecs, flags) = effective_hamiltonian(&u, t_ext, &h0).unwrap();
        assert!(flags.iter().all(|&f| !f));
        let d = g.dimension;
        let mut scaled: Array2<C64> = Array2::zeros((d, d));
        for (k, col) in evecs.axis_iter(Axis(1)).enumerate() {
            scaled.column_mut(k).assign(&col.mapv(|z| z * C64::new(eps[k], 0.0)));
        }
        let h = scaled.dot(&dagger(&evecs));
        assert!(linalg::max_abs(&(&h - &h0.matrix)) < 1e-8);
    }

    #[test]
    fn micromotion_identity_for_free_oscillator() {
        let wf = Waveform::sine(2.0, 1.0);
        let p = CircuitParams::square(0.0, 0.0, 2.0, wf).unwrap();
        let g = PhaseGrid::with_points(10, 10 * 4, 2.0).unwrap();
        let engine = FloquetEngine::new(p.clone(), g).unwrap();
        let reference = Operator::zeros(g);
        let decomp = build_floquet(
            &engine,
            &reference,
            BuildOptions { steps_per_period: 2048, stored_micromotion: 8, check_convergence: false },
        )
        .unwrap();
        let psi = grid::gaussian_state(&g, 0.5, 0.1, 1.5);
        for (t, m) in &decomp.micromotion_samples {
            let dev = {
                let mpsi = m.dot(&psi);
                let diff: f64 = mpsi
                    .iter()
                    .zip(psi.iter())
                    .map(|(a, b)| (a - b).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                diff
            };
            // intra-period deviation is the second-order splitting error
            assert!(dev < 1e-6, "M({t}) deviates from identity on an interior state by {dev}");
        }
        // endpoint samples are exact stroboscopically
        let (t_end, m_end) = decomp.micromotion_samples.last().unwrap();
        assert_abs_diff_eq!(*t_end, p.extended_period(), epsilon = 1e-12);
        let dev = linalg::max_abs(
            &(m_end - &Array2::eye(g.dimension).mapv(|x: f64| C64::new(x, 0.0))),
        );
        assert!(dev < 1e-7, "M(T~) far from identity: {dev}");
    }

    #[test]
    fn gauge_covariance_under_origin_shift() {
        let p = table1_params();
        let g = PhaseGrid::with_points(12, 12 * 3, 2.0).unwrap();
        let engine = FloquetEngine::new(p.clone(), g).unwrap();
        let t_ext = p.extended_period();
        let steps = 512;
        let u0 = engine.propagator_lab(0.0, t_ext, steps).unwrap();
        let t0 = t_ext / 3.0;
        let u1 = engine.propagator_lab(t0, t0 + t_ext, steps).unwrap();
        let (v0, _) = linalg::eig_normal(&u0.matrix, 1e-6).unwrap();
        let (v1, _) = linalg::eig_normal(&u1.matrix, 1e-6).unwrap();
        let mut p0: Vec<f64> = v0.iter().map(|z| z.arg()).collect();
        let mut p1: Vec<f64> = v1.iter().map(|z| z.arg()).collect();
        p0.sort_by(|a, b| a.partial_cmp(b).unwrap());
        p1.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let worst = p0
            .iter()
            .zip(p1.iter())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(worst < 1e-6, "origin shift moved eigenphases by {worst}");
    }
}
