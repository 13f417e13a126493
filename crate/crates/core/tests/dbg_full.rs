use gkpsim::bath::*;
use gkpsim::drive::{self, capped_waveform};
use gkpsim::floquet::*;
use gkpsim::grid;
use gkpsim::linalg;
use num_complex::Complex64 as C64;
use std::time::Instant;

#[test]
#[ignore]
fn probe_full_jumps() {
    let delta_f = 0.0012;
    let f_dr = 2.0 * (1.0 - delta_f);
    let wf = capped_waveform(70.0 / drive::CAPPED_PEAK_FRACTION, f_dr).unwrap();
    let p = CircuitParams::square(delta_f, 4.0, 2.0, wf).unwrap();
    let barrier = effective_barrier(&p).unwrap();
    let g = grid::build_grid(barrier, delta_f, 2.0).unwrap();
    println!("D = {}", g.dimension);
    let engine = FloquetEngine::new(p.clone(), g).unwrap();
    let rwa = rwa_hamiltonian_general(&p, &g).unwrap();
    let t0 = Instant::now();
    let decomp = build_floquet(&engine, &rwa, BuildOptions {
        steps_per_period: 1024, stored_micromotion: 0, check_convergence: false }).unwrap();
    println!("build {:?} flagged {}", t0.elapsed(), decomp.flagged());
    let t0 = Instant::now();
    let nbar = sideband_components(&engine, &decomp, CouplingForm::RotatingQuadrature, 2, 1024, 1024).unwrap();
    println!("nbar {:?} samples {} conv {:.2e}", t0.elapsed(), nbar.samples, nbar.convergence);
    let spec = bandpass_spectral(0.002, 0.07, 0.2, p.sideband_energy()).unwrap();
    let jumps = jump_operators(&decomp, &nbar, &spec).unwrap();
    for z in -2..=2 {
        println!("z={z}: {:.4e}", jumps.column_norm(z, 12));
    }
    let l1 = &jumps.operators[&1];
    let sz = grid::crenelation_operator(&g, grid::PauliAxis::Z);
    let sz_eig = linalg::dagger(&decomp.eigenstates).dot(&sz.matrix).dot(&decomp.eigenstates);
    for pair in [(2usize, 3usize), (4, 5), (6, 7), (8, 9)] {
        let block = ndarray::arr2(&[
            [sz_eig[(pair.0, pair.0)], sz_eig[(pair.0, pair.1)]],
            [sz_eig[(pair.1, pair.0)], sz_eig[(pair.1, pair.1)]],
        ]);
        let (_, bv) = linalg::eigh(&block).unwrap();
        for col in 0..2 {
            let mut psi = ndarray::Array1::<C64>::zeros(g.dimension);
            psi[pair.0] = bv[(0, col)];
            psi[pair.1] = bv[(1, col)];
            let pol = linalg::expectation(&sz_eig, &psi).re;
            match logical_error_probability(l1, &sz_eig, &psi) {
                Ok(v) => println!("pair {pair:?} pol {pol:.3}: err {v:.3e}"),
                Err(e) => println!("pair {pair:?}: {e}"),
            }
        }
    }
}
