//! Open-system evolution of the stroboscopic master equation: a dense
//! density-matrix integrator as the oracle, and Monte-Carlo wave-function
//! trajectories for production runs.
//!
//! Everything here works in a fixed orthonormal basis chosen by the caller
//! (normally the `H_eff` eigenbasis). Hamiltonians are in `h f0` units and
//! pick up the `2 pi = 1/hbar` phase factor inside the integrators; jump
//! operators are rate-normalized so `L† L` is a rate in `f0` units.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::floquet::FloquetDecomposition;
use crate::grid::{Operator, PhaseGrid};
use crate::linalg::{self, dagger};
use crate::{Error, Result, ANGULAR};

/// Inputs of one evolution run.
#[derive(Clone)]
pub struct EvolutionSpec {
    /// Hamiltonian in the evolution basis (units `h f0`).
    pub hamiltonian: Array2<C64>,
    /// Rate-normalized jump operators, same basis.
    pub jumps: Vec<Array2<C64>>,
    /// Stroboscopic sample times, ascending, starting at 0.
    pub t_grid: Vec<f64>,
    pub n_traj: usize,
    pub seed: u64,
    /// Inner resolution: jump times are located to within `dt`, and the
    /// dense integrator uses it as its base step.
    pub dt: f64,
}

impl EvolutionSpec {
    /// Total jump rate bound: `sum_k <L_k† L_k> dt` must stay below 0.1 on
    /// the given states.
    pub fn validate_step(&self, states: &[Array1<C64>]) -> Result<()> {
        for psi in states {
            let mut rate = 0.0;
            for l in &self.jumps {
                let v = l.dot(psi);
                rate += v.iter().map(|x| x.norm_sqr()).sum::<f64>();
            }
            if rate * self.dt >= 0.1 {
                return Err(Error::Dynamics(format!(
                    "jump probability per step {:.3} exceeds 0.1; reduce dt",
                    rate * self.dt
                )));
            }
        }
        Ok(())
    }
}

/// Weighted ensemble of pure states.
#[derive(Clone)]
pub struct Ensemble {
    pub members: Vec<Array1<C64>>,
    pub weights: Vec<f64>,
}

impl Ensemble {
    pub fn pure(state: Array1<C64>) -> Self {
        Self { members: vec![state], weights: vec![1.0] }
    }

    /// Density matrix of the ensemble.
    pub fn density(&self) -> Array2<C64> {
        let d = self.members[0].len();
        let mut rho = Array2::zeros((d, d));
        let total: f64 = self.weights.iter().sum();
        for (psi, w) in self.members.iter().zip(self.weights.iter()) {
            let w = w / total;
            for i in 0..d {
                for j in 0..d {
                    rho[(i, j)] += C64::new(w, 0.0) * psi[i] * psi[j].conj();
                }
            }
        }
        rho
    }

    /// Transform members into the column basis of `q` (`psi -> q† psi`).
    pub fn into_basis(self, q: &Array2<C64>) -> Self {
        let qd = dagger(q);
        Self {
            members: self.members.into_iter().map(|m| qd.dot(&m)).collect(),
            weights: self.weights,
        }
    }
}

/// Incoherent mixture of grid-uniform random states,
/// `psi_j = (a_j + i b_j)/N` with `a_j, b_j` uniform on `[-1, 1]`.
pub fn random_mixed_state(grid: &PhaseGrid, member_count: usize, seed: u64) -> Ensemble {
    assert!(member_count >= 1);
    let mut members = Vec::with_capacity(member_count);
    for m in 0..member_count {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(0xC0DE_0000 + m as u64);
        let mut v: Vec<C64> = Vec::with_capacity(grid.dimension);
        for _ in 0..grid.dimension {
            let a: f64 = rng.gen_range(-1.0..=1.0);
            let b: f64 = rng.gen_range(-1.0..=1.0);
            v.push(C64::new(a, b));
        }
        let mut psi = Array1::from(v);
        let nrm = linalg::norm(&psi);
        psi.mapv_inplace(|z| z / nrm);
        members.push(psi);
    }
    let weights = vec![1.0 / member_count as f64; member_count];
    Ensemble { members, weights }
}

/// Per-time-point mean and standard error across trajectories.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
}

/// Stroboscopic record of one run.
#[derive(Clone, Serialize, Deserialize)]
pub struct EvolutionRecord {
    pub times: Vec<f64>,
    pub observables: BTreeMap<String, ObservableSeries>,
    /// Per-trajectory jump events `(time, channel)`.
    pub jump_log: Vec<Vec<(f64, usize)>>,
    pub seed: u64,
    pub n_traj: usize,
    /// Dense runs: worst trace deviation over the run.
    pub trace_drift: f64,
    /// Dense runs: most negative density eigenvalue seen.
    pub min_eigenvalue: f64,
    /// Final states (trajectory runs) in the evolution basis.
    #[serde(skip)]
    pub final_states: Option<Vec<(f64, Array1<C64>)>>,
    /// Final density matrix (dense runs).
    #[serde(skip)]
    pub final_density: Option<Array2<C64>>,
    /// States stored at requested sample indices, per trajectory, for
    /// estimators needing the full state (readout).
    #[serde(skip)]
    pub stored_states: Option<Vec<Vec<Array1<C64>>>>,
}

/// Named hermitian observables in the evolution basis.
pub type ObservableSet = Vec<(String, Array2<C64>)>;

/// Observables transformed into the `H_eff` eigenbasis of a decomposition.
pub fn observables_in_eigenbasis(
    decomp: &FloquetDecomposition,
    ops: &[(&str, &Operator)],
) -> ObservableSet {
    ops.iter()
        .map(|(name, op)| {
            let m = dagger(&decomp.eigenstates).dot(&op.matrix).dot(&decomp.eigenstates);
            (name.to_string(), m)
        })
        .collect()
}

fn lindblad_rhs(
    h: &Array2<C64>,
    jumps: &[Array2<C64>],
    w_half: &Array2<C64>,
    rho: &Array2<C64>,
) -> Array2<C64> {
    let hrho = h.dot(rho);
    let mut out = (&hrho - &dagger(&hrho)) * C64::new(0.0, -ANGULAR);
    for l in jumps {
        let lrho = l.dot(rho);
        out = out + lrho.dot(&dagger(l));
    }
    let wrho = w_half.dot(rho);
    out = out - &wrho - &dagger(&wrho);
    out
}

/// Dense density-matrix integration of the master equation (the oracle).
///
/// Classic fourth-order Runge-Kutta with a first-interval step-halving
/// check; trace and positivity are monitored at every sample time.
pub fn evolve_density(
    spec: &EvolutionSpec,
    rho0: &Array2<C64>,
    observables: &ObservableSet,
) -> Result<EvolutionRecord> {
    let d = rho0.nrows();
    let tr: C64 = (0..d).map(|i| rho0[(i, i)]).sum();
    if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-10 {
        return Err(Error::NotNormalized((tr - C64::new(1.0, 0.0)).norm()));
    }
    if linalg::herm_residual(rho0) > 1e-10 {
        return Err(Error::Dynamics("initial density matrix is not hermitian".into()));
    }
    {
        let (vals, _) = linalg::eigh(rho0)?;
        if vals.iter().any(|&v| v < -1e-10) {
            return Err(Error::Dynamics("initial density matrix is not positive".into()));
        }
    }

    let w_half: Array2<C64> = {
        let mut w: Array2<C64> = Array2::zeros((d, d));
        for l in &spec.jumps {
            w = w + dagger(l).dot(l);
        }
        w * C64::new(0.5, 0.0)
    };

    // step-halving check on the first interval
    let mut dt = spec.dt;
    if spec.t_grid.len() > 1 {
        let t1 = spec.t_grid[1] - spec.t_grid[0];
        loop {
            let a = rk4_span(&spec.hamiltonian, &spec.jumps, &w_half, rho0.clone(), t1, dt);
            let b = rk4_span(&spec.hamiltonian, &spec.jumps, &w_half, rho0.clone(), t1, dt / 2.0);
            let err = linalg::max_abs(&(&a - &b));
            if err < 1e-7 || dt < spec.dt / 64.0 {
                break;
            }
            dt /= 2.0;
        }
    }

    let mut rho = rho0.clone();
    let mut record = new_record(spec, observables);
    let mut worst_trace = 0.0_f64;
    let mut min_eig = f64::INFINITY;

    for (k, &t) in spec.t_grid.iter().enumerate() {
        if k > 0 {
            let span = t - spec.t_grid[k - 1];
            rho = rk4_span(&spec.hamiltonian, &spec.jumps, &w_half, rho, span, dt);
        }
        let tr: C64 = (0..d).map(|i| rho[(i, i)]).sum();
        worst_trace = worst_trace.max((tr.re - 1.0).abs().max(tr.im.abs()));
        if worst_trace > 1e-6 {
            return Err(Error::Dynamics(format!(
                "trace drift {worst_trace:.3e} beyond 1e-6 at t = {t}"
            )));
        }
        let herm = (&rho + &dagger(&rho)) * C64::new(0.5, 0.0);
        let (vals, _) = linalg::eigh(&herm)?;
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        min_eig = min_eig.min(lo);
        if lo < -1e-6 {
            return Err(Error::Dynamics(format!(
                "positivity violation {lo:.3e} at t = {t}; step too large"
            )));
        }
        for (name, op) in observables {
            let v = linalg::expectation_rho(op, &rho).re;
            let series = record.observables.get_mut(name).unwrap();
            series.mean.push(v);
            series.std_error.push(0.0);
        }
    }
    record.trace_drift = worst_trace;
    record.min_eigenvalue = min_eig;
    record.final_density = Some(rho);
    Ok(record)
}

fn rk4_span(
    h: &Array2<C64>,
    jumps: &[Array2<C64>],
    w_half: &Array2<C64>,
    mut rho: Array2<C64>,
    span: f64,
    dt: f64,
) -> Array2<C64> {
    let steps = (span / dt).ceil().max(1.0) as usize;
    let h_step = span / steps as f64;
    for _ in 0..steps {
        let k1 = lindblad_rhs(h, jumps, w_half, &rho);
        let k2 = lindblad_rhs(h, jumps, w_half, &(&rho + &(&k1 * C64::new(h_step / 2.0, 0.0))));
        let k3 = lindblad_rhs(h, jumps, w_half, &(&rho + &(&k2 * C64::new(h_step / 2.0, 0.0))));
        let k4 = lindblad_rhs(h, jumps, w_half, &(&rho + &(&k3 * C64::new(h_step, 0.0))));
        rho = &rho
            + &((&k1 + &(&k2 * C64::new(2.0, 0.0)) + &(&k3 * C64::new(2.0, 0.0)) + &k4)
                * C64::new(h_step / 6.0, 0.0));
    }
    rho
}

fn new_record(spec: &EvolutionSpec, observables: &ObservableSet) -> EvolutionRecord {
    EvolutionRecord {
        times: spec.t_grid.clone(),
        observables: observables
            .iter()
            .map(|(n, _)| {
                (n.clone(), ObservableSeries { mean: Vec::new(), std_error: Vec::new() })
            })
            .collect(),
        jump_log: Vec::new(),
        seed: spec.seed,
        n_traj: spec.n_traj,
        trace_drift: 0.0,
        min_eigenvalue: f64::INFINITY,
        final_states: None,
        final_density: None,
        stored_states: None,
    }
}

struct TrajectoryOutput {
    series: Vec<Vec<f64>>,
    jumps: Vec<(f64, usize)>,
    final_state: Array1<C64>,
    stored: Vec<Array1<C64>>,
}

/// Reusable no-jump propagator for one time-independent `(H, {L})` block:
/// the non-hermitian drift is diagonalized once and deterministic segments
/// are evaluated exactly at any time.
pub struct StochasticEngine {
    factors: linalg::SpectralFactors,
    pub jumps: Vec<Array2<C64>>,
    /// Jump-time bisection resolution.
    pub dt: f64,
}

impl StochasticEngine {
    pub fn new(hamiltonian: &Array2<C64>, jumps: Vec<Array2<C64>>, dt: f64) -> Result<Self> {
        let d = hamiltonian.nrows();
        let mut k_nh = hamiltonian.mapv(|z| z * ANGULAR);
        let mut w: Array2<C64> = Array2::zeros((d, d));
        for l in &jumps {
            w = w + dagger(l).dot(l);
        }
        k_nh = k_nh - w.mapv(|z| z * C64::new(0.0, 0.5));
        let factors = linalg::SpectralFactors::new(&k_nh)?;
        Ok(Self { factors, jumps, dt })
    }

    fn eval(&self, coeff: &Array1<C64>, dt: f64) -> Array1<C64> {
        let scaled = Array1::from_iter(
            coeff
                .iter()
                .zip(self.factors.values.iter())
                .map(|(c, l)| c * (C64::new(0.0, -1.0) * l * dt).exp()),
        );
        self.factors.vectors.dot(&scaled)
    }

    /// Advance a normalized state by `span`, applying jumps along the way.
    /// Returns the normalized state at the end; events are appended to
    /// `jump_log` with absolute times offset by `t_abs`.
    pub fn advance(
        &self,
        psi: Array1<C64>,
        span: f64,
        t_abs: f64,
        rng: &mut ChaCha12Rng,
        jump_log: &mut Vec<(f64, usize)>,
    ) -> Result<Array1<C64>> {
        let mut coeff = self.factors.coefficients(&psi)?;
        let mut t0 = 0.0;
        let mut threshold: f64 = rng.gen_range(1e-300..1.0_f64);
        loop {
            let out = self.eval(&coeff, span - t0);
            let nrm2: f64 = out.iter().map(|x| x.norm_sqr()).sum();
            if nrm2 > threshold {
                if nrm2 < 1e-280 {
                    return Err(Error::Dynamics("trajectory norm underflow".into()));
                }
                let nrm = nrm2.sqrt();
                return Ok(out.mapv(|z| z / nrm));
            }
            // bisect the jump time within (t0, span]
            let (mut lo, mut hi) = (0.0, span - t0);
            while hi - lo > self.dt.min(1e-3 * (span - t0).max(self.dt)) {
                let mid = 0.5 * (lo + hi);
                let nm: f64 = self.eval(&coeff, mid).iter().map(|x| x.norm_sqr()).sum();
                if nm > threshold {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let t_jump = t0 + 0.5 * (lo + hi);
            let psi_pre = self.eval(&coeff, 0.5 * (lo + hi));
            let mut rates: Vec<f64> = Vec::with_capacity(self.jumps.len());
            let mut post: Vec<Array1<C64>> = Vec::with_capacity(self.jumps.len());
            for l in &self.jumps {
                let v = l.dot(&psi_pre);
                rates.push(v.iter().map(|x| x.norm_sqr()).sum());
                post.push(v);
            }
            let total: f64 = rates.iter().sum();
            if total <= 0.0 {
                return Err(Error::ZeroJumpWeight);
            }
            let pick: f64 = rng.gen_range(0.0..total);
            let mut acc = 0.0;
            let mut channel = 0;
            for (ci, r) in rates.iter().enumerate() {
                acc += r;
                if pick <= acc {
                    channel = ci;
                    break;
                }
            }
            let mut psi_new = post.swap_remove(channel);
            let nrm = linalg::norm(&psi_new);
            psi_new.mapv_inplace(|z| z / nrm);
            jump_log.push((t_abs + t_jump, channel));
            t0 = t_jump;
            coeff = self.factors.coefficients(&psi_new)?;
            threshold = rng.gen_range(1e-300..1.0_f64);
        }
    }

    /// Condition diagnostic of the drift eigenbasis.
    pub fn basis_residual(&self) -> f64 {
        self.factors.basis_residual()
    }
}

/// Monte-Carlo wave-function unraveling with norm-threshold (waiting-time)
/// jump triggering.
///
/// The no-jump drift `H_eff - (i/2) sum L†L` is diagonalized once, so
/// deterministic segments are propagated exactly; jump times are bisected to
/// within `spec.dt`. Trajectory `k` draws from an independent, reproducible
/// stream `k` of the seeded generator, and results are reduced in index
/// order, so records are bit-identical for identical inputs.
pub fn evolve_trajectories(
    spec: &EvolutionSpec,
    ensemble: &Ensemble,
    observables: &ObservableSet,
    store_states_at: Option<&[usize]>,
) -> Result<EvolutionRecord> {
    let d = spec.hamiltonian.nrows();
    for psi in &ensemble.members {
        let nrm = linalg::norm(psi);
        if (nrm - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized((nrm - 1.0).abs()));
        }
    }
    spec.validate_step(&ensemble.members)?;

    let engine = StochasticEngine::new(&spec.hamiltonian, spec.jumps.clone(), spec.dt)?;
    if !engine.basis_residual().is_finite() {
        return Err(Error::Linalg("drift eigenbasis is singular".into()));
    }
    let _ = d;

    let weight_sum: f64 = ensemble.weights.iter().sum();
    let cum_weights: Vec<f64> = ensemble
        .weights
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w / weight_sum;
            Some(*acc)
        })
        .collect();

    let outputs: Result<Vec<TrajectoryOutput>> = (0..spec.n_traj)
        .into_par_iter()
        .map(|traj| {
            let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
            rng.set_stream(traj as u64 + 1);
            let pick: f64 = rng.gen();
            let member = cum_weights.iter().position(|&c| pick <= c).unwrap_or(0);
            run_trajectory(
                spec,
                &engine,
                ensemble.members[member].clone(),
                observables,
                store_states_at,
                &mut rng,
            )
        })
        .collect();
    let outputs = outputs?;

    let mut record = new_record(spec, observables);
    let nt = spec.n_traj as f64;
    for (oi, (name, _)) in observables.iter().enumerate() {
        let series = record.observables.get_mut(name).unwrap();
        for k in 0..spec.t_grid.len() {
            let mut mean = 0.0;
            for out in &outputs {
                mean += out.series[oi][k];
            }
            mean /= nt;
            let mut var = 0.0;
            for out in &outputs {
                var += (out.series[oi][k] - mean).powi(2);
            }
            let std_error = if spec.n_traj > 1 {
                (var / (nt * (nt - 1.0))).sqrt()
            } else {
                0.0
            };
            series.mean.push(mean);
            series.std_error.push(std_error);
        }
    }
    record.jump_log = outputs.iter().map(|o| o.jumps.clone()).collect();
    record.final_states =
        Some(outputs.iter().map(|o| (1.0 / nt, o.final_state.clone())).collect());
    if store_states_at.is_some() {
        record.stored_states = Some(outputs.into_iter().map(|o| o.stored).collect());
    }
    Ok(record)
}

fn run_trajectory(
    spec: &EvolutionSpec,
    factors: &linalg::SpectralFactors,
    psi0: Array1<C64>,
    observables: &ObservableSet,
    store_states_at: Option<&[usize]>,
    rng: &mut ChaCha12Rng,
) -> Result<TrajectoryOutput> {
    let d = psi0.len();
    let mut series = vec![Vec::with_capacity(spec.t_grid.len()); observables.len()];
    let mut jumps_out = Vec::new();
    let mut stored = Vec::new();

    // segment state: psi(t) = V exp(-i lambda (t - t0)) c, monotone norm
    let mut t0 = spec.t_grid[0];
    let mut coeff = factors.coefficients(&psi0)?;
    let mut threshold: f64 = rng.gen_range(1e-300..1.0_f64);

    let eval = |coeff: &Array1<C64>, dt: f64| -> Array1<C64> {
        let scaled = Array1::from_iter(coeff.iter().zip(factors.values.iter()).map(|(c, l)| {
            c * (C64::new(0.0, -1.0) * l * dt).exp()
        }));
        factors.vectors.dot(&scaled)
    };

    for (k, &t) in spec.t_grid.iter().enumerate() {
        // propagate to t, applying any jumps on the way
        loop {
            let psi = eval(&coeff, t - t0);
            let nrm2: f64 = psi.iter().map(|x| x.norm_sqr()).sum();
            if nrm2 > threshold {
                // no jump before t: sample observables on the normalized state
                if nrm2 < 1e-280 {
                    return Err(Error::Dynamics("trajectory norm underflow".into()));
                }
                for (oi, (_, op)) in observables.iter().enumerate() {
                    let v = linalg::expectation(op, &psi).re / nrm2;
                    series[oi].push(v);
                }
                if let Some(idxs) = store_states_at {
                    if idxs.contains(&k) {
                        let nrm = nrm2.sqrt();
                        stored.push(psi.mapv(|z| z / nrm));
                    }
                }
                break;
            }
            // bisect the jump time in (t0, t]
            let (mut lo, mut hi) = (0.0, t - t0);
            while hi - lo > spec.dt.min(1e-3 * (t - t0).max(spec.dt)) {
                let mid = 0.5 * (lo + hi);
                let nm: f64 = eval(&coeff, mid).iter().map(|x| x.norm_sqr()).sum();
                if nm > threshold {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let t_jump = t0 + 0.5 * (lo + hi);
            let psi_pre = eval(&coeff, 0.5 * (lo + hi));
            // channel selection proportional to <L† L>
            let mut rates: Vec<f64> = Vec::with_capacity(spec.jumps.len());
            let mut post: Vec<Array1<C64>> = Vec::with_capacity(spec.jumps.len());
            for l in &spec.jumps {
                let v = l.dot(&psi_pre);
                rates.push(v.iter().map(|x| x.norm_sqr()).sum());
                post.push(v);
            }
            let total: f64 = rates.iter().sum();
            if total <= 0.0 {
                return Err(Error::ZeroJumpWeight);
            }
            let pick: f64 = rng.gen_range(0.0..total);
            let mut acc = 0.0;
            let mut channel = 0;
            for (ci, r) in rates.iter().enumerate() {
                acc += r;
                if pick <= acc {
                    channel = ci;
                    break;
                }
            }
            let mut psi_new = post.swap_remove(channel);
            let nrm = linalg::norm(&psi_new);
            psi_new.mapv_inplace(|z| z / nrm);
            jumps_out.push((t_jump, channel));
            t0 = t_jump;
            coeff = factors.coefficients(&psi_new)?;
            threshold = rng.gen_range(1e-300..1.0_f64);
        }
        let _ = d;
    }

    // normalized final state
    let t_end = *spec.t_grid.last().unwrap();
    let psi = eval(&coeff, t_end - t0);
    let nrm = linalg::norm(&psi);
    Ok(TrajectoryOutput {
        series,
        jumps: jumps_out,
        final_state: psi.mapv(|z| z / nrm),
        stored,
    })
}

/// Logical Bloch targets on the code manifold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogicalTarget {
    Zero,
    One,
    Plus,
    PlusI,
    /// Equal Bloch components, `<sx> = <sy> = <sz> = 1/sqrt(3)`.
    EqualXyz,
}

/// Build a code state in the `H_eff` eigenbasis by diagonalizing the
/// projected `sigma_z` on the twofold ground manifold.
pub fn code_state(
    decomp: &FloquetDecomposition,
    sigma_z: &Operator,
    sigma_x: &Operator,
    target: LogicalTarget,
) -> Result<Array1<C64>> {
    let (splitting, gap) = decomp.ground_gap();
    if gap < 5.0 * splitting {
        return Err(Error::NotQuasiDegenerate { splitting, gap });
    }
    let d = decomp.quasienergies.len();
    let q01 = decomp.eigenstates.slice(ndarray::s![.., 0..2]).to_owned();
    let bz = dagger(&q01).dot(&sigma_z.matrix).dot(&q01);
    let (vals, vecs) = linalg::eigh(&bz)?;
    // columns ordered so index 0 has the larger sigma_z eigenvalue
    let (c0, c1) = if vals[0] >= vals[1] { (0, 1) } else { (1, 0) };
    let zero2 = vecs.column(c0).to_owned();
    let mut one2 = vecs.column(c1).to_owned();
    // fix the relative phase so <0|sigma_x|1> is real positive
    let bx = dagger(&q01).dot(&sigma_x.matrix).dot(&q01);
    let off: C64 = {
        let v = bx.dot(&one2);
        zero2.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum()
    };
    if off.norm() > 1e-12 {
        let ph = off / off.norm();
        one2.mapv_inplace(|z| z * ph.conj());
    }

    let (a, b): (C64, C64) = match target {
        LogicalTarget::Zero => (C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
        LogicalTarget::One => (C64::new(0.0, 0.0), C64::new(1.0, 0.0)),
        LogicalTarget::Plus => {
            (C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0), C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0))
        }
        LogicalTarget::PlusI => (
            C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            C64::new(0.0, std::f64::consts::FRAC_1_SQRT_2),
        ),
        LogicalTarget::EqualXyz => {
            let theta = (1.0 / 3.0_f64.sqrt()).acos();
            let phi = std::f64::consts::FRAC_PI_4;
            (
                C64::new((theta / 2.0).cos(), 0.0),
                C64::from_polar((theta / 2.0).sin(), phi),
            )
        }
    };
    let two = Array1::from(vec![
        a * zero2[0] + b * one2[0],
        a * zero2[1] + b * one2[1],
    ]);
    let mut full = Array1::zeros(d);
    full[0] = two[0];
    full[1] = two[1];
    Ok(full)
}
