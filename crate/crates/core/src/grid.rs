//! Phase-space discretization and the static operators living on it.
//!
//! The resonator phase `phi` is decompactified and discretized on a uniform
//! grid spanning `[-phi_max, phi_max]` with an integer number of points per
//! `2*pi` period, so `cos(phi)` is exactly periodic on the lattice. The
//! conjugate number variable `n = -i d/dphi` is represented spectrally on the
//! periodic extension of the grid.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use ndarray::{Array1, Array2, Axis};
use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::linalg::{self, dagger};
use crate::{Error, Result};

/// Uniform discretization of the dimensionless phase.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseGrid {
    /// Grid step `dphi = 2*pi / points_per_period`.
    pub spacing: f64,
    /// Half-width of the grid; points run over `[-extent, extent]`.
    pub extent: f64,
    /// Number of grid points (always odd here).
    pub dimension: usize,
    /// Dimensionless impedance `zeta = Z / (h/4e^2)`.
    pub impedance: f64,
    points_per_period: usize,
}

impl PhaseGrid {
    /// Build a grid with `points_per_period` points per `2*pi` and
    /// `half_points` points on each side of zero.
    pub fn with_points(points_per_period: usize, half_points: usize, impedance: f64) -> Result<Self> {
        if points_per_period < 4 {
            return Err(Error::Grid(format!(
                "{points_per_period} points per 2*pi well cannot resolve the wells (need >= 4)"
            )));
        }
        if impedance <= 0.0 {
            return Err(Error::Grid("impedance must be positive".into()));
        }
        let dimension = 2 * half_points + 1;
        if dimension < 8 {
            return Err(Error::Grid(format!("grid dimension {dimension} < 8")));
        }
        let spacing = TAU / points_per_period as f64;
        Ok(Self {
            spacing,
            extent: half_points as f64 * spacing,
            dimension,
            impedance,
            points_per_period,
        })
    }

    /// Number of grid points per `2*pi` period.
    pub fn points_per_period(&self) -> usize {
        self.points_per_period
    }

    /// Total length of the periodic extension, `D * dphi`.
    pub fn length(&self) -> f64 {
        self.dimension as f64 * self.spacing
    }

    /// Grid point `phi_j = -phi_max + j*dphi`.
    pub fn phi(&self, j: usize) -> f64 {
        -self.extent + j as f64 * self.spacing
    }

    pub fn phi_values(&self) -> Array1<f64> {
        Array1::from_iter((0..self.dimension).map(|j| self.phi(j)))
    }

    /// Momentum quantum of the periodic extension, `2*pi / (D*dphi)`.
    pub fn momentum_quantum(&self) -> f64 {
        TAU / self.length()
    }

    /// Discrete momenta in FFT index order (`0, 1, ..., -1` pattern).
    pub fn momentum_values_fft_order(&self) -> Array1<f64> {
        let d = self.dimension as i64;
        let dn = self.momentum_quantum();
        Array1::from_iter((0..d).map(|k| {
            let signed = if k <= d / 2 { k } else { k - d };
            signed as f64 * dn
        }))
    }

    /// Nearest grid index to a phase value, if it lies on the grid.
    pub fn index_of(&self, phi: f64) -> Option<usize> {
        let x = (phi + self.extent) / self.spacing;
        let j = x.round();
        if (x - j).abs() < 1e-9 && j >= 0.0 && (j as usize) < self.dimension {
            Some(j as usize)
        } else {
            None
        }
    }
}

/// Adaptive grid from the effective barrier height and detuning.
///
/// `barrier` is the effective Josephson energy (units `h*f0`), `detuning` the
/// frequency detuning `df` (units `f0`), so the level spacing `hbar*domega`
/// equals `h*df`. The spacing and extent resolve, respectively, the intrawell
/// structure and the envelope of the confined GKP states.
pub fn build_grid(barrier: f64, detuning: f64, impedance: f64) -> Result<PhaseGrid> {
    if barrier <= 0.0 || detuning <= 0.0 || impedance <= 0.0 {
        return Err(Error::Grid(
            "barrier, detuning and impedance must all be positive".into(),
        ));
    }
    let x = 2.0 * barrier / (PI * detuning);
    let per_period = (4.0 * x.sqrt()).floor() as usize;
    if per_period < 4 {
        return Err(Error::Grid(format!(
            "barrier {barrier:.3e} too shallow at detuning {detuning:.3e}: \
             {per_period} points per 2*pi well (need >= 4)"
        )));
    }
    let well_periods = (2.0 * x.sqrt()).floor() as usize;
    PhaseGrid::with_points(per_period, well_periods * per_period, impedance)
}

/// A dense operator in the phi basis, tied to its grid.
#[derive(Clone, Debug)]
pub struct Operator {
    pub matrix: Array2<C64>,
    pub grid: PhaseGrid,
}

impl Operator {
    pub fn new(matrix: Array2<C64>, grid: PhaseGrid) -> Self {
        assert_eq!(matrix.nrows(), grid.dimension);
        assert_eq!(matrix.ncols(), grid.dimension);
        Self { matrix, grid }
    }

    pub fn from_diag_real(diag: &Array1<f64>, grid: PhaseGrid) -> Self {
        let d = grid.dimension;
        let mut m = Array2::zeros((d, d));
        for j in 0..d {
            m[(j, j)] = C64::new(diag[j], 0.0);
        }
        Self::new(m, grid)
    }

    pub fn zeros(grid: PhaseGrid) -> Self {
        Self::new(Array2::zeros((grid.dimension, grid.dimension)), grid)
    }

    pub fn identity(grid: PhaseGrid) -> Self {
        Array2::eye(grid.dimension).mapv(|x: f64| C64::new(x, 0.0)).pipe(|m| Self::new(m, grid))
    }

    pub fn herm_residual(&self) -> f64 {
        linalg::herm_residual(&self.matrix)
    }

    pub fn unitarity_residual(&self) -> f64 {
        linalg::unitarity_residual(&self.matrix)
    }

    pub fn dagger(&self) -> Self {
        Self::new(dagger(&self.matrix), self.grid)
    }

    pub fn dot(&self, other: &Self) -> Self {
        Self::new(self.matrix.dot(&other.matrix), self.grid)
    }

    pub fn expectation(&self, psi: &Array1<C64>) -> C64 {
        linalg::expectation(&self.matrix, psi)
    }

    pub fn expectation_rho(&self, rho: &Array2<C64>) -> C64 {
        linalg::expectation_rho(&self.matrix, rho)
    }
}

trait Pipe: Sized {
    fn pipe<T>(self, f: impl FnOnce(Self) -> T) -> T {
        f(self)
    }
}
impl<T> Pipe for T {}

/// Unitary transform between the phi basis and the discrete momentum basis
/// of the periodic extension.
pub struct MomentumBasis {
    grid: PhaseGrid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// phase factors exp(+i n_k phi_max), FFT index order
    twiddle: Vec<C64>,
    momenta: Array1<f64>,
}

impl MomentumBasis {
    pub fn new(grid: PhaseGrid) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(grid.dimension);
        let inv = planner.plan_fft_inverse(grid.dimension);
        let momenta = grid.momentum_values_fft_order();
        let twiddle = momenta
            .iter()
            .map(|&nk| C64::from_polar(1.0, nk * grid.extent))
            .collect();
        Self { grid, fwd, inv, twiddle, momenta }
    }

    pub fn momenta(&self) -> &Array1<f64> {
        &self.momenta
    }

    /// phi basis -> momentum amplitudes (unitary), in place.
    pub fn to_momentum(&self, buf: &mut [C64]) {
        self.fwd.process(buf);
        let s = 1.0 / (self.grid.dimension as f64).sqrt();
        for (x, t) in buf.iter_mut().zip(self.twiddle.iter()) {
            *x *= t * s;
        }
    }

    /// momentum amplitudes -> phi basis (unitary), in place.
    pub fn to_position(&self, buf: &mut [C64]) {
        let s = 1.0 / (self.grid.dimension as f64).sqrt();
        for (x, t) in buf.iter_mut().zip(self.twiddle.iter()) {
            *x = *x * t.conj() * s;
        }
        self.inv.process(buf);
    }

    /// Apply a momentum-diagonal function elementwise to every column of `m`.
    pub fn apply_momentum_diag(&self, diag: &[C64], m: &mut Array2<C64>) {
        let d = self.grid.dimension;
        let mut buf = vec![C64::new(0.0, 0.0); d];
        for mut col in m.axis_iter_mut(Axis(1)) {
            for (b, x) in buf.iter_mut().zip(col.iter()) {
                *b = *x;
            }
            self.to_momentum(&mut buf);
            for (b, g) in buf.iter_mut().zip(diag.iter()) {
                *b *= g;
            }
            self.to_position(&mut buf);
            for (x, b) in col.iter_mut().zip(buf.iter()) {
                *x = *b;
            }
        }
    }

    /// Dense matrix of a momentum-diagonal operator `g(n)`.
    pub fn momentum_function(&self, g: impl Fn(f64) -> f64) -> Array2<C64> {
        let d = self.grid.dimension;
        let diag: Vec<C64> = self.momenta.iter().map(|&nk| C64::new(g(nk), 0.0)).collect();
        let mut m = Array2::eye(d).mapv(|x: f64| C64::new(x, 0.0));
        self.apply_momentum_diag(&diag, &mut m);
        m
    }
}

/// Diagonal phase operator.
pub fn phase_operator(grid: &PhaseGrid) -> Operator {
    Operator::from_diag_real(&grid.phi_values(), *grid)
}

/// Spectral number operator `n = -i d/dphi` on the periodic extension.
pub fn number_operator(grid: &PhaseGrid) -> Operator {
    let basis = MomentumBasis::new(*grid);
    let mut m = basis.momentum_function(|nk| nk);
    // symmetrize away the last bits of FFT noise
    let md = dagger(&m);
    m = (&m + &md) * C64::new(0.5, 0.0);
    Operator::new(m, *grid)
}

/// Harmonic generator `(phi^2/(2 pi zeta) + 2 pi zeta n^2) / 2` whose
/// exponential rotates phase space.
pub fn oscillator_generator(grid: &PhaseGrid) -> Operator {
    let basis = MomentumBasis::new(*grid);
    let zeta = grid.impedance;
    let mut m = basis.momentum_function(|nk| PI * zeta * nk * nk);
    for j in 0..grid.dimension {
        let phi = grid.phi(j);
        m[(j, j)] += C64::new(phi * phi / (4.0 * PI * zeta), 0.0);
    }
    let md = dagger(&m);
    m = (&m + &md) * C64::new(0.5, 0.0);
    Operator::new(m, *grid)
}

/// Cached spectral factorization of the oscillator generator, for building
/// many rotations on the same grid.
pub struct Rotor {
    grid: PhaseGrid,
    vals: Array1<f64>,
    vecs: Array2<C64>,
}

impl Rotor {
    pub fn new(grid: &PhaseGrid) -> Result<Self> {
        let gen = oscillator_generator(grid);
        let (vals, vecs) = linalg::eigh(&gen.matrix)?;
        Ok(Self { grid: *grid, vals, vecs })
    }

    /// `R_theta = exp[-i (theta/2) (phi^2/(2 pi zeta) + 2 pi zeta n^2)]`.
    pub fn at(&self, theta: f64) -> Operator {
        Operator::new(linalg::exp_from_eigh(&self.vals, &self.vecs, theta), self.grid)
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }
}

/// One-shot phase-space rotation by `theta`.
pub fn rotation(grid: &PhaseGrid, theta: f64) -> Result<Operator> {
    if theta.abs() > 4.0 * PI + 1e-12 {
        return Err(Error::Params(format!("rotation angle {theta} out of range [-4pi, 4pi]")));
    }
    Ok(Rotor::new(grid)?.at(theta))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

/// Count of grid points that landed exactly on a sign-function node and were
/// assigned +1.
#[derive(Clone, Copy, Debug, Default)]
pub struct CrenelationDiag {
    pub node_hits: usize,
}

/// Crenelation sign `sgn(cos(pi x))`, with exact nodes assigned +1.
fn crenelation_sign(x: f64, diag: &mut CrenelationDiag) -> f64 {
    let c = (PI * x).cos();
    if c.abs() < 1e-12 {
        diag.node_hits += 1;
        1.0
    } else {
        c.signum()
    }
}

/// Logical Pauli operators from phase-space parity.
///
/// `sigma_z = Xi(phi/2pi)` in the phi basis, `sigma_x = Xi(2n)` in the
/// momentum basis, `sigma_y = -i sigma_x sigma_z`.
pub fn crenelation_operator_with_diag(grid: &PhaseGrid, axis: PauliAxis) -> (Operator, CrenelationDiag) {
    let mut diag = CrenelationDiag::default();
    match axis {
        PauliAxis::Z => {
            let signs = Array1::from_iter(
                (0..grid.dimension).map(|j| crenelation_sign(grid.phi(j) / TAU, &mut diag)),
            );
            (Operator::from_diag_real(&signs, *grid), diag)
        }
        PauliAxis::X => {
            let basis = MomentumBasis::new(*grid);
            let diag_vals: Vec<C64> = basis
                .momenta()
                .iter()
                .map(|&nk| C64::new(crenelation_sign(2.0 * nk, &mut diag), 0.0))
                .collect();
            let d = grid.dimension;
            let mut m = Array2::eye(d).mapv(|x: f64| C64::new(x, 0.0));
            basis.apply_momentum_diag(&diag_vals, &mut m);
            let md = dagger(&m);
            m = (&m + &md) * C64::new(0.5, 0.0);
            (Operator::new(m, *grid), diag)
        }
        PauliAxis::Y => {
            let (sx, d1) = crenelation_operator_with_diag(grid, PauliAxis::X);
            let (sz, d2) = crenelation_operator_with_diag(grid, PauliAxis::Z);
            let m = sx.matrix.dot(&sz.matrix) * C64::new(0.0, -1.0);
            (
                Operator::new(m, *grid),
                CrenelationDiag { node_hits: d1.node_hits + d2.node_hits },
            )
        }
    }
}

pub fn crenelation_operator(grid: &PhaseGrid, axis: PauliAxis) -> Operator {
    crenelation_operator_with_diag(grid, axis).0
}

/// GKP stabilizers `S1 = cos(phi)` and `S2 = cos(2 pi zeta n)`.
pub fn stabilizer_operators(grid: &PhaseGrid) -> (Operator, Operator) {
    let s1 = Operator::from_diag_real(&grid.phi_values().mapv(f64::cos), *grid);
    let basis = MomentumBasis::new(*grid);
    let zeta = grid.impedance;
    let mut m2 = basis.momentum_function(|nk| (TAU * zeta * nk).cos());
    let md = dagger(&m2);
    m2 = (&m2 + &md) * C64::new(0.5, 0.0);
    (s1, Operator::new(m2, *grid))
}

/// Real two-dimensional Wigner map over `(phi, n)` sample points.
#[derive(Clone, Debug)]
pub struct WignerMap {
    /// `values[[i, j]]` at `(phi_axis[i], n_axis[j])`.
    pub values: Array2<f64>,
    pub phi_axis: Array1<f64>,
    pub n_axis: Array1<f64>,
}

impl WignerMap {
    /// Integral of the map with measure `dphi * dn`.
    pub fn integral(&self) -> f64 {
        let dphi = self.phi_axis[1] - self.phi_axis[0];
        let dn = self.n_axis[1] - self.n_axis[0];
        self.values.sum() * dphi * dn
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
    }

    /// Marginal over n at a phi sample index.
    pub fn n_marginal(&self, i: usize) -> f64 {
        let dn = self.n_axis[1] - self.n_axis[0];
        self.values.row(i).sum() * dn
    }

    /// Plain-text export: two header lines with the axis coordinates
    /// (comma-separated), then the values row-major, one row per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let join = |a: &Array1<f64>| {
            a.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(",")
        };
        out.push_str(&join(&self.phi_axis));
        out.push('\n');
        out.push_str(&join(&self.n_axis));
        out.push('\n');
        for row in self.values.rows() {
            let line = row.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(",");
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    pub fn from_text(s: &str) -> Result<Self> {
        let mut lines = s.lines();
        let parse_axis = |line: Option<&str>| -> Result<Array1<f64>> {
            let line = line.ok_or_else(|| Error::Io(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                "missing header line",
            )))?;
            line.split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|e| {
                    Error::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, e))
                }))
                .collect::<Result<Vec<f64>>>()
                .map(Array1::from)
        };
        let phi_axis = parse_axis(lines.next())?;
        let n_axis = parse_axis(lines.next())?;
        let mut values = Array2::zeros((phi_axis.len(), n_axis.len()));
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            for (j, tok) in line.split(',').enumerate() {
                values[(i, j)] = tok.trim().parse::<f64>().map_err(|e| {
                    Error::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, e))
                })?;
            }
        }
        Ok(Self { values, phi_axis, n_axis })
    }
}

/// Wigner transform of a density matrix on the grid.
///
/// `W(phi, n) = (1/pi) Int dx <phi-x|rho|phi+x> e^{2 i n x}`, evaluated by
/// discrete transforms along the antidiagonals of `rho`. Samples are placed
/// every `dphi/resolution_step` in phi (default two per cell). The n axis
/// covers the non-redundant transform zone `[-pi/(2 dphi), pi/(2 dphi))`,
/// which contains the full momentum support of states confined by the grid
/// extent rule.
pub fn wigner(rho: &Array2<C64>, grid: &PhaseGrid, resolution: usize) -> Result<WignerMap> {
    let d = grid.dimension;
    assert_eq!(rho.nrows(), d);
    let tr: C64 = (0..d).map(|j| rho[(j, j)]).sum();
    if (tr.re - 1.0).abs() > 1e-6 || tr.im.abs() > 1e-6 {
        return Err(Error::NotNormalized((tr - C64::new(1.0, 0.0)).norm()));
    }
    let resolution = resolution.max(1).min(2);

    // phi samples: grid points for resolution 1, midpoints included for 2
    let n_phi = if resolution == 2 { 2 * d - 1 } else { d };
    let phi_axis = Array1::from_iter((0..n_phi).map(|c| {
        -grid.extent + c as f64 * grid.spacing / resolution as f64
    }));

    // n samples: one transform zone, D points
    let dn = PI / grid.length();
    let half = (d / 2) as i64;
    let n_axis = Array1::from_iter((-half..=half).map(|m| m as f64 * dn));

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_inverse(d); // e^{+2 pi i m k / D} kernel
    let mut values = Array2::zeros((n_phi, d));
    let mut buf = vec![C64::new(0.0, 0.0); d];

    for c in 0..n_phi {
        // centers sit at index c (in units of dphi/resolution over the grid)
        // even parity: offsets x = k*dphi between genuine grid points
        // odd parity (midpoints): x = (k+1/2)*dphi
        let (base, half_step) = if resolution == 2 {
            (c / 2, c % 2 == 1)
        } else {
            (c, false)
        };
        for b in buf.iter_mut() {
            *b = C64::new(0.0, 0.0);
        }
        for k in 0..d as i64 {
            // signed offset index, folded to the FFT bin
            let ks = if k <= (d as i64) / 2 { k } else { k - d as i64 };
            let (jl, jr) = if half_step {
                (base as i64 - ks, base as i64 + 1 + ks)
            } else {
                (base as i64 - ks, base as i64 + ks)
            };
            if jl < 0 || jr < 0 || jl >= d as i64 || jr >= d as i64 {
                continue;
            }
            buf[k as usize] = rho[(jl as usize, jr as usize)];
        }
        fft.process(&mut buf);
        for (m_out, m_fft) in (-half..=half).enumerate() {
            let idx = m_fft.rem_euclid(d as i64) as usize;
            let mut v = buf[idx];
            if half_step {
                // x carries an extra dphi/2: kernel picks up e^{i pi m / D}
                v *= C64::from_polar(1.0, PI * m_fft as f64 / d as f64);
            }
            values[(c, m_out)] = v.re / PI;
        }
    }

    Ok(WignerMap { values, phi_axis, n_axis })
}

/// Wigner transform of a pure state.
pub fn wigner_state(psi: &Array1<C64>, grid: &PhaseGrid, resolution: usize) -> Result<WignerMap> {
    let nrm = linalg::norm(psi);
    if (nrm - 1.0).abs() > 1e-6 {
        return Err(Error::NotNormalized((nrm - 1.0).abs()));
    }
    let d = psi.len();
    let mut rho = Array2::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            rho[(i, j)] = psi[i] * psi[j].conj();
        }
    }
    wigner(&rho, grid, resolution)
}

/// Normalized Gaussian wavepacket centered at `(phi0, n0)` with rms phi-width `w`.
pub fn gaussian_state(grid: &PhaseGrid, phi0: f64, n0: f64, w: f64) -> Array1<C64> {
    let mut psi = Array1::from_iter((0..grid.dimension).map(|j| {
        let phi = grid.phi(j);
        let envelope = (-((phi - phi0) * (phi - phi0)) / (4.0 * w * w)).exp();
        C64::from_polar(envelope, n0 * phi)
    }));
    let nrm = linalg::norm(&psi);
    psi.mapv_inplace(|z| z / nrm);
    psi
}
