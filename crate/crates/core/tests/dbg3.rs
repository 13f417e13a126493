use gkpsim::bath::*;
use gkpsim::drive::{self, capped_waveform};
use gkpsim::floquet::*;
use gkpsim::grid::PhaseGrid;
use gkpsim::linalg;
use ndarray::Array2;
use num_complex::Complex64 as C64;

#[test]
fn probe_jump_set() {
    let delta_f = 0.0012;
    let f_dr = 2.0 * (1.0 - delta_f);
    let wf = capped_waveform(70.0 / drive::CAPPED_PEAK_FRACTION, f_dr).unwrap();
    let p = CircuitParams::square(delta_f, 4.0, 2.0, wf).unwrap();
    let g = PhaseGrid::with_points(20, 20 * 9, 2.0).unwrap();
    let engine = FloquetEngine::new(p.clone(), g).unwrap();
    let rwa = rwa_hamiltonian_general(&p, &g).unwrap();
    let decomp = build_floquet(&engine, &rwa, BuildOptions {
        steps_per_period: 1024, stored_micromotion: 0, check_convergence: false }).unwrap();
    println!("flagged {} of {}", decomp.flagged(), g.dimension);
    let t0 = std::time::Instant::now();
    let nbar = sideband_components(&engine, &decomp, CouplingForm::RotatingQuadrature, 3, 128, 1024).unwrap();
    println!("nbar took {:?}, samples {}, conv {:.2e}", t0.elapsed(), nbar.samples, nbar.convergence);

    // n~_1 vs analytic (n - i phi)/2 on the code subspace
    let qn = {
        let n = gkpsim::grid::number_operator(&g);
        let phi = gkpsim::grid::phase_operator(&g);
        let a = &n.matrix - &phi.matrix.mapv(|z| z * C64::new(0.0, 1.0));
        let a = a.mapv(|z| 0.5 * z);
        linalg::dagger(&decomp.eigenstates).dot(&a).dot(&decomp.eigenstates)
    };
    let y1 = &nbar.components[&1];
    let mut num = 0.0; let mut den = 0.0;
    for a in 0..12 { for b in 0..12 {
        num += (y1[(a,b)] - qn[(a,b)]).norm_sqr();
        den += qn[(a,b)].norm_sqr();
    }}
    println!("n~_1 vs (n-i phi)/2 on low block: rel dev {:.3}", (num/den).sqrt());

    let spec = bandpass_spectral(0.002, 0.07, 0.2, p.sideband_energy()).unwrap();
    let jumps = jump_operators(&decomp, &nbar, &spec).unwrap();
    for z in -3..=3 {
        println!("z={z}: ||L_z|| code cols = {:.4e}", jumps.column_norm(z, 12));
    }
    // upward vs downward weight out of the ground pair for L_1
    let l1 = &jumps.operators[&1];
    let (mut up, mut down) = (0.0, 0.0);
    for gidx in 0..2 {
        for b in 0..g.dimension {
            let w = l1[(b, gidx)].norm_sqr();
            if decomp.quasienergies[b] > decomp.quasienergies[gidx] { up += w; } else if b != gidx { down += w; }
        }
    }
    // and downward INTO the ground pair from excited states
    let mut into = 0.0;
    for gidx in 0..2 {
        for b in 2..g.dimension {
            into += l1[(gidx, b)].norm_sqr();
        }
    }
    println!("L1 weights: up-out-of-ground {up:.3e}, down-out {down:.3e}, into-ground {into:.3e}");

    // logical error prob of L1 on excited code states (states 2..6)
    let sz = gkpsim::grid::crenelation_operator(&g, gkpsim::grid::PauliAxis::Z);
    let sz_eig = linalg::dagger(&decomp.eigenstates).dot(&sz.matrix).dot(&decomp.eigenstates);
    for pair in [(2usize, 3usize), (4, 5), (6, 7)] {
        // diagonalize sigma_z within the quasi-degenerate excited pair
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
                Ok(v) => println!("pair {pair:?} pol {pol:.3}: logical error prob {v:.3e}"),
                Err(e) => println!("pair {pair:?}: {e}"),
            }
        }
    }
    let _ = Array2::<C64>::zeros((1,1));
}
