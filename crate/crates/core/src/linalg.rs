//! Dense complex linear algebra helpers shared across the engine.

use ndarray::{Array1, Array2, Axis};
use ndarray_linalg::{Eig, Eigh, Solve, UPLO};
use num_complex::Complex64 as C64;

use crate::{Error, Result};

pub fn dagger(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

pub fn max_abs(a: &Array2<C64>) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn frobenius(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Deviation from hermiticity in max norm.
pub fn herm_residual(a: &Array2<C64>) -> f64 {
    max_abs(&(a - &dagger(a)))
}

/// Deviation from unitarity `max|A†A - 1|`.
pub fn unitarity_residual(a: &Array2<C64>) -> f64 {
    let mut g = dagger(a).dot(a);
    for i in 0..g.nrows() {
        g[(i, i)] -= C64::new(1.0, 0.0);
    }
    max_abs(&g)
}

pub fn expectation(op: &Array2<C64>, psi: &Array1<C64>) -> C64 {
    let opsi = op.dot(psi);
    psi.iter().zip(opsi.iter()).map(|(a, b)| a.conj() * b).sum()
}

pub fn expectation_rho(op: &Array2<C64>, rho: &Array2<C64>) -> C64 {
    // tr(rho op) without forming the product
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..rho.nrows() {
        for j in 0..rho.ncols() {
            acc += rho[(i, j)] * op[(j, i)];
        }
    }
    acc
}

pub fn norm(psi: &Array1<C64>) -> f64 {
    psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Hermitian eigendecomposition, eigenvalues ascending.
pub fn eigh(a: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    let (vals, vecs) = a.eigh(UPLO::Lower)?;
    Ok((vals, vecs))
}

/// Eigendecomposition of a normal (typically unitary) matrix with a
/// guaranteed orthonormal eigenbasis.
///
/// The general eigensolver loses orthogonality on tightly packed spectra, so
/// instead diagonalize the hermitian combination
/// `H_mu = (A + A†)/2 + mu (A - A†)/(2i)`, which shares eigenvectors with a
/// normal `A` wherever the combination is non-degenerate. Accidental
/// collisions (`cos t + mu sin t` coinciding for distinct eigenphases) leave
/// small coupled blocks in `V† A V`; those are re-diagonalized in place.
pub fn eig_normal(a: &Array2<C64>, _cluster_tol: f64) -> Result<(Array1<C64>, Array2<C64>)> {
    let (vals, vecs) = eig_normal_level(a, 0)?;
    let resid = unitarity_residual(&vecs);
    if resid > 1e-10 {
        return Err(Error::Linalg(format!(
            "eigenvector basis of normal matrix not unitary: residual {resid:.3e}"
        )));
    }
    Ok((vals, vecs))
}

// generic slopes; collisions of cos t + mu sin t at one level are resolved
// at the next
const EIG_NORMAL_SLOPES: [f64; 3] = [0.618_033_988_749_894_9, -1.273_239_544_735_162_7, 2.414_213_562_373_095];

fn eig_normal_level(a: &Array2<C64>, depth: usize) -> Result<(Array1<C64>, Array2<C64>)> {
    let d = a.nrows();
    let adag = dagger(a);
    let herm = (a + &adag).mapv(|z| 0.5 * z);
    let anti = (a - &adag).mapv(|z| z * C64::new(0.0, -0.5));
    let mu = EIG_NORMAL_SLOPES[depth];
    let combo = &herm + &anti.mapv(|z| z * mu);
    let (_, mut vecs) = combo.eigh(UPLO::Lower)?;

    // A in the eigh basis: block diagonal up to collision blocks
    let t = dagger(&vecs).dot(a).dot(&vecs);
    let scale = max_abs(&t).max(1e-300);
    let couple_tol = 1e-9 * scale;

    // connected components over significant off-diagonal couplings
    let mut parent: Vec<usize> = (0..d).collect();
    fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..d {
        for j in (i + 1)..d {
            if t[(i, j)].norm() > couple_tol || t[(j, i)].norm() > couple_tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut components: std::collections::HashMap<usize, Vec<usize>> = Default::default();
    for i in 0..d {
        let r = find(&mut parent, i);
        components.entry(r).or_default().push(i);
    }

    let mut vals: Array1<C64> = Array1::zeros(d);
    for idx in components.values() {
        if idx.len() == 1 {
            vals[idx[0]] = t[(idx[0], idx[0])];
            continue;
        }
        // collided block: re-diagonalize the (still normal) submatrix with
        // the next slope, or fall back to the general solver plus QR
        let k = idx.len();
        let mut block: Array2<C64> = Array2::zeros((k, k));
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                block[(a, b)] = t[(i, j)];
            }
        }
        let (q, bvals) = if depth + 1 < EIG_NORMAL_SLOPES.len() && k > 1 {
            let (bv, bq) = eig_normal_level(&block, depth + 1)?;
            (bq, bv)
        } else {
            let (_, bvecs) = block.eig()?;
            let (q, _r) = {
                use ndarray_linalg::QR;
                bvecs.qr()?
            };
            let tq = dagger(&q).dot(&block).dot(&q);
            let bv = Array1::from_iter((0..k).map(|a| tq[(a, a)]));
            (q, bv)
        };
        let mut cols: Array2<C64> = Array2::zeros((d, k));
        for (a, &i) in idx.iter().enumerate() {
            cols.column_mut(a).assign(&vecs.column(i));
        }
        let rotated = cols.dot(&q);
        for (a, &i) in idx.iter().enumerate() {
            vecs.column_mut(i).assign(&rotated.column(a));
            vals[i] = bvals[a];
        }
    }
    Ok((vals, vecs))
}

/// General (non-normal) eigendecomposition together with the inverse of the
/// eigenvector matrix, for exact propagation of mildly non-hermitian
/// generators.
pub struct SpectralFactors {
    pub values: Array1<C64>,
    pub vectors: Array2<C64>,
    vectors_t_factorized: ndarray_linalg::LUFactorized<ndarray::OwnedRepr<C64>>,
}

impl SpectralFactors {
    pub fn new(a: &Array2<C64>) -> Result<Self> {
        use ndarray_linalg::Factorize;
        let (values, vectors) = a.eig()?;
        let f = vectors.factorize()?;
        Ok(Self {
            values,
            vectors,
            vectors_t_factorized: f,
        })
    }

    /// Expansion coefficients of `psi` in the eigenbasis.
    pub fn coefficients(&self, psi: &Array1<C64>) -> Result<Array1<C64>> {
        Ok(self.vectors_t_factorized.solve(psi)?)
    }

    /// Condition estimate of the eigenvector basis via `|V| |V^-1|` column norms.
    pub fn basis_residual(&self) -> f64 {
        unitarity_residual(&self.vectors)
    }
}

/// Unitary exponential `exp(-i s H)` of a hermitian `H` given its
/// eigendecomposition.
pub fn exp_from_eigh(vals: &Array1<f64>, vecs: &Array2<C64>, s: f64) -> Array2<C64> {
    let d = vals.len();
    let mut scaled = Array2::zeros((d, d));
    for (k, col) in vecs.axis_iter(Axis(1)).enumerate() {
        let ph = C64::from_polar(1.0, -s * vals[k]);
        scaled.column_mut(k).assign(&col.mapv(|z| z * ph));
    }
    scaled.dot(&dagger(vecs))
}
