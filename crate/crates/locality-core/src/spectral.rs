//! Eigenstructure: ground space, gap, projectors, positive-energy parts, and
//! ground-space projections of observables.
//!
//! Dense path (≤ 12 sites): full LAPACK eigendecomposition; real-symmetric
//! Hamiltonians keep a real eigenbasis, which halves memory and doubles
//! matvec speed downstream. Sparse path: Lanczos with full
//! reorthogonalization, block size 1, deflation restarts, and a seeded
//! deterministic start vector.

use crate::blas;
use crate::error::{Error, Result};
use crate::models::HamiltonianSpec;
use crate::operator::{
    c, seeded_unit_vector, sparse_matvec, vec_dot, vec_norm, MatrixOperator, Storage,
    DENSE_MAX_SITES,
};
use ndarray::prelude::*;
use num_complex::Complex64;
use std::path::{Path, PathBuf};

/// Default degeneracy tolerance as a fraction of the energy scale.
pub const DEGENERACY_TOL_FRACTION: f64 = 1e-8;
/// Residual contract: ‖Hψ − Eψ‖ ≤ RESIDUAL_TOL·scale(H).
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Eigenbasis storage; real when the Hamiltonian matrix is real symmetric.
#[derive(Debug, Clone)]
pub enum Basis {
    Real(Array2<f64>),
    Complex(Array2<Complex64>),
}

impl Basis {
    pub fn n_states(&self) -> usize {
        match self {
            Basis::Real(v) => v.ncols(),
            Basis::Complex(v) => v.ncols(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Basis::Real(v) => v.nrows(),
            Basis::Complex(v) => v.nrows(),
        }
    }

    pub fn state(&self, j: usize) -> Vec<Complex64> {
        match self {
            Basis::Real(v) => v.column(j).iter().map(|&x| c(x, 0.0)).collect(),
            Basis::Complex(v) => v.column(j).to_vec(),
        }
    }

    /// y = V x (state-coefficients to full space).
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        match self {
            Basis::Real(v) => blas::gemv_real_cplx(&v.view(), x, false),
            Basis::Complex(v) => blas::gemv_complex(&v.view(), x, false),
        }
    }

    /// y = V† x (full space to state coefficients).
    pub fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        match self {
            Basis::Real(v) => blas::gemv_real_cplx(&v.view(), x, true),
            Basis::Complex(v) => {
                let xc: Vec<Complex64> = x.iter().map(|z| z.conj()).collect();
                blas::gemv_complex(&v.view(), &xc, true)
                    .into_iter()
                    .map(|z| z.conj())
                    .collect()
            }
        }
    }

    /// V† O V for a dense operator (full-basis rotation).
    pub fn rotate_into(&self, o: &Array2<Complex64>) -> Array2<Complex64> {
        match self {
            Basis::Real(v) => {
                let ore = o.mapv(|z| z.re);
                let oim = o.mapv(|z| z.im);
                let re = blas::gemm_real(&v.t().to_owned().view(), &blas::gemm_real(&ore.view(), &v.view()).view());
                let im = blas::gemm_real(&v.t().to_owned().view(), &blas::gemm_real(&oim.view(), &v.view()).view());
                let mut out = Array2::zeros(re.dim());
                for i in 0..re.nrows() {
                    for j in 0..re.ncols() {
                        out[[i, j]] = c(re[[i, j]], im[[i, j]]);
                    }
                }
                out
            }
            Basis::Complex(v) => {
                let vd = adjoint_dense(v);
                blas::gemm(&vd.view(), &blas::gemm(&o.view(), &v.view()).view())
            }
        }
    }

    /// V M V† back from the eigenbasis (requires square M of n_states size).
    pub fn rotate_out(&self, m: &Array2<Complex64>) -> Array2<Complex64> {
        match self {
            Basis::Real(v) => {
                let mre = m.mapv(|z| z.re);
                let mim = m.mapv(|z| z.im);
                let vt = v.t().to_owned();
                let re = blas::gemm_real(&v.view(), &blas::gemm_real(&mre.view(), &vt.view()).view());
                let im = blas::gemm_real(&v.view(), &blas::gemm_real(&mim.view(), &vt.view()).view());
                let mut out = Array2::zeros(re.dim());
                for i in 0..re.nrows() {
                    for j in 0..re.ncols() {
                        out[[i, j]] = c(re[[i, j]], im[[i, j]]);
                    }
                }
                out
            }
            Basis::Complex(v) => {
                let vd = adjoint_dense(v);
                blas::gemm(&v.view(), &blas::gemm(&m.view(), &vd.view()).view())
            }
        }
    }

    fn set_column(&mut self, j: usize, col: &[Complex64]) {
        match self {
            Basis::Real(v) => {
                // Mutating a real basis with complex data promotes it.
                let mut cv: Array2<Complex64> = v.mapv(|x| c(x, 0.0));
                for (i, z) in col.iter().enumerate() {
                    cv[[i, j]] = *z;
                }
                *self = Basis::Complex(cv);
            }
            Basis::Complex(v) => {
                for (i, z) in col.iter().enumerate() {
                    v[[i, j]] = *z;
                }
            }
        }
    }
}

fn adjoint_dense(m: &Array2<Complex64>) -> Array2<Complex64> {
    let (r, cdim) = m.dim();
    let mut out = Array2::zeros((cdim, r));
    for i in 0..r {
        for j in 0..cdim {
            out[[j, i]] = m[[i, j]].conj();
        }
    }
    out
}

/// Eigenvalues/eigenvectors with ground-space bookkeeping.
#[derive(Debug, Clone)]
pub struct SpectralData {
    /// Ascending energies (all of them on the dense path, k lowest on sparse).
    pub energies: Vec<f64>,
    pub basis: Basis,
    pub ground_degeneracy: usize,
    /// E_k − E_{k−1} with k = ground_degeneracy; 0 when unresolved.
    pub gap: f64,
    /// Whether the full spectrum is present.
    pub full: bool,
    /// Energy scale used for residual/degeneracy tolerances.
    pub scale: f64,
}

impl SpectralData {
    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    pub fn ground_state(&self, a: usize) -> Vec<Complex64> {
        self.basis.state(a)
    }

    /// Count of retained states.
    pub fn n_states(&self) -> usize {
        self.energies.len()
    }

    fn recompute_degeneracy(&mut self, tol: f64) {
        let e0 = self.energies[0];
        let k = self.energies.iter().take_while(|&&e| e - e0 <= tol).count();
        self.ground_degeneracy = k;
        self.gap = if k < self.energies.len() {
            self.energies[k] - self.energies[k - 1]
        } else {
            0.0
        };
    }
}

/// Diagonalize a Hamiltonian; k is the number of low-lying pairs wanted (the
/// dense path keeps everything anyway).
pub fn diagonalize(
    h: &HamiltonianSpec,
    k: usize,
    degeneracy_tol: Option<f64>,
) -> Result<SpectralData> {
    if k < 2 {
        return Err(Error::Domain("diagonalize requires k ≥ 2".into()));
    }
    let n = h.site_count();
    if n <= DENSE_MAX_SITES {
        diagonalize_dense(h, degeneracy_tol)
    } else {
        diagonalize_sparse(h, k, degeneracy_tol)
    }
}

fn diagonalize_dense(h: &HamiltonianSpec, degeneracy_tol: Option<f64>) -> Result<SpectralData> {
    let m = h.to_dense()?;
    let imag_max = m.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let (energies, basis) = if imag_max < 1e-14 {
        let re = m.mapv(|z| z.re);
        let (w, v) = blas::eigh_real(&re.view());
        (w, Basis::Real(v))
    } else {
        let (w, v) = blas::eigh_complex(&m.view());
        (w, Basis::Complex(v))
    };
    let scale = energies
        .iter()
        .map(|e| e.abs())
        .fold(0.0, f64::max)
        .max(1e-300);
    let mut sd = SpectralData {
        energies,
        basis,
        ground_degeneracy: 1,
        gap: 0.0,
        full: true,
        scale,
    };
    sd.recompute_degeneracy(degeneracy_tol.unwrap_or(DEGENERACY_TOL_FRACTION * scale));
    verify_residuals(&m, &sd, sd.ground_degeneracy + 1)?;
    Ok(sd)
}

fn verify_residuals(m: &Array2<Complex64>, sd: &SpectralData, n_check: usize) -> Result<()> {
    for j in 0..n_check.min(sd.n_states()) {
        let psi = sd.basis.state(j);
        let hpsi = blas::gemv_complex(&m.view(), &psi, false);
        let mut r = 0.0f64;
        for i in 0..psi.len() {
            r += (hpsi[i] - psi[i] * sd.energies[j]).norm_sqr();
        }
        let r = r.sqrt();
        if r > RESIDUAL_TOL * sd.scale {
            return Err(Error::Numeric(format!(
                "eigenpair {j} residual {r:.3e} above {:.3e}",
                RESIDUAL_TOL * sd.scale
            )));
        }
    }
    Ok(())
}

fn diagonalize_sparse(
    h: &HamiltonianSpec,
    k: usize,
    degeneracy_tol: Option<f64>,
) -> Result<SpectralData> {
    let hs = h.to_sparse()?;
    let dim = hs.rows();
    let scale = h.term_norm_sum().max(1e-300);
    let imag_max = hs.data().iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if imag_max >= 1e-14 {
        return Err(Error::Unsupported(
            "sparse Lanczos path currently handles real-symmetric Hamiltonians".into(),
        ));
    }
    // Real CSR copy for speed.
    let data: Vec<f64> = hs.data().iter().map(|z| z.re).collect();
    let indptr_owned = hs.indptr().to_owned();
    let indptr = indptr_owned.as_slice().unwrap();
    let indices = hs.indices();
    let matvec = |x: &[f64]| -> Vec<f64> {
        let mut y = vec![0.0; dim];
        for row in 0..dim {
            let mut acc = 0.0;
            for idx in indptr[row]..indptr[row + 1] {
                acc += data[idx] * x[indices[idx]];
            }
            y[row] = acc;
        }
        y
    };

    let (energies, vectors) = lanczos_lowest(matvec, dim, k, RESIDUAL_TOL * scale)?;
    let mut varr = Array2::<f64>::zeros((dim, energies.len()));
    for (j, v) in vectors.iter().enumerate() {
        for (i, &x) in v.iter().enumerate() {
            varr[[i, j]] = x;
        }
    }
    let mut sd = SpectralData {
        energies,
        basis: Basis::Real(varr),
        ground_degeneracy: 1,
        gap: 0.0,
        full: false,
        scale,
    };
    sd.recompute_degeneracy(degeneracy_tol.unwrap_or(DEGENERACY_TOL_FRACTION * scale));
    Ok(sd)
}

/// Lanczos with full reorthogonalization and deflation restarts: converged
/// eigenvectors are locked and the next run is kept orthogonal to them, so
/// exactly degenerate levels are resolved one copy at a time.
fn lanczos_lowest(
    matvec: impl Fn(&[f64]) -> Vec<f64>,
    dim: usize,
    k: usize,
    res_tol: f64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let k = k.min(dim);
    let max_basis = 240usize.min(dim);
    let max_restarts = 2 * k + 6;
    let mut locked: Vec<(f64, Vec<f64>)> = Vec::new();

    for restart in 0..max_restarts {
        if locked.len() >= k {
            break;
        }
        let mut v0: Vec<f64> = seeded_unit_vector(dim, 0xA5A5 + restart as u64)
            .into_iter()
            .map(|z| z.re)
            .collect();
        orthogonalize_real(&mut v0, locked.iter().map(|(_, v)| v));
        let n0 = norm_real(&v0);
        if n0 < 1e-12 {
            continue;
        }
        scale_real(&mut v0, 1.0 / n0);

        let mut basis: Vec<Vec<f64>> = vec![v0];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut converged: Option<(f64, Vec<f64>)> = None;

        for it in 0..max_basis {
            let vj = basis.last().unwrap().clone();
            let mut w = matvec(&vj);
            // Project out locked directions so the run stays deflated.
            orthogonalize_real(&mut w, locked.iter().map(|(_, v)| v));
            let alpha = dot_real(&vj, &w);
            alphas.push(alpha);
            axpy_real(&mut w, -alpha, &vj);
            if basis.len() >= 2 {
                let beta_prev = betas[basis.len() - 2];
                let v_prev = &basis[basis.len() - 2];
                axpy_real(&mut w, -beta_prev, v_prev);
            }
            // Two full reorthogonalization passes against the whole basis.
            orthogonalize_real(&mut w, basis.iter());
            orthogonalize_real(&mut w, basis.iter());

            // Check convergence of the lowest Ritz pair every few steps.
            if it >= 2 && (it % 4 == 0 || it + 1 == max_basis) {
                if let Some((theta, y)) = lowest_ritz(&alphas, &betas) {
                    let mut ritz = vec![0.0; dim];
                    for (ci, b) in basis.iter().enumerate() {
                        axpy_real(&mut ritz, y[ci], b);
                    }
                    let r = residual_real(&matvec, &ritz, theta, &locked);
                    if r <= res_tol {
                        let n = norm_real(&ritz);
                        scale_real(&mut ritz, 1.0 / n);
                        converged = Some((theta, ritz));
                        break;
                    }
                }
            }

            let beta = norm_real(&w);
            if beta < 1e-13 {
                // Invariant subspace exhausted; take the Ritz pair as-is.
                if let Some((theta, y)) = lowest_ritz(&alphas, &betas) {
                    let mut ritz = vec![0.0; dim];
                    for (ci, b) in basis.iter().enumerate() {
                        axpy_real(&mut ritz, y[ci], b);
                    }
                    let n = norm_real(&ritz);
                    if n > 1e-12 {
                        scale_real(&mut ritz, 1.0 / n);
                        converged = Some((theta, ritz));
                    }
                }
                break;
            }
            betas.push(beta);
            scale_real(&mut w, 1.0 / beta);
            basis.push(w);
        }

        match converged {
            Some((theta, v)) => locked.push((theta, v)),
            None => {
                return Err(Error::Convergence(format!(
                    "Lanczos failed to converge eigenpair {} after {max_basis} iterations \
                     (restart {restart}); lowest residual tolerance {res_tol:.3e}",
                    locked.len()
                )))
            }
        }
    }

    if locked.len() < k {
        return Err(Error::Convergence(format!(
            "Lanczos found only {} of {k} requested eigenpairs",
            locked.len()
        )));
    }
    locked.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    locked.truncate(k);
    let energies: Vec<f64> = locked.iter().map(|(e, _)| *e).collect();
    let vectors: Vec<Vec<f64>> = locked.into_iter().map(|(_, v)| v).collect();
    Ok((energies, vectors))
}

fn lowest_ritz(alphas: &[f64], betas: &[f64]) -> Option<(f64, Vec<f64>)> {
    let m = alphas.len();
    if m == 0 {
        return None;
    }
    let mut t = Array2::<f64>::zeros((m, m));
    for i in 0..m {
        t[[i, i]] = alphas[i];
        if i + 1 < m {
            t[[i, i + 1]] = betas[i];
            t[[i + 1, i]] = betas[i];
        }
    }
    let (w, v) = blas::eigh_real(&t.view());
    Some((w[0], v.column(0).to_vec()))
}

fn residual_real(
    matvec: &impl Fn(&[f64]) -> Vec<f64>,
    v: &[f64],
    theta: f64,
    locked: &[(f64, Vec<f64>)],
) -> f64 {
    let n = norm_real(v);
    if n < 1e-12 {
        return f64::INFINITY;
    }
    let mut hv = matvec(v);
    // Residual measured in the deflated subspace.
    orthogonalize_real(&mut hv, locked.iter().map(|(_, u)| u));
    let mut r = 0.0;
    for i in 0..v.len() {
        let d = hv[i] - theta * v[i];
        r += d * d;
    }
    r.sqrt() / n
}

fn dot_real(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm_real(a: &[f64]) -> f64 {
    dot_real(a, a).sqrt()
}

fn scale_real(a: &mut [f64], s: f64) {
    for x in a {
        *x *= s;
    }
}

fn axpy_real(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn orthogonalize_real<'a>(v: &mut Vec<f64>, others: impl Iterator<Item = &'a Vec<f64>>) {
    for u in others {
        let coef = dot_real(u, v);
        axpy_real(v, -coef, u);
    }
}

/// P₀ = Σ_a |ψ₀^a⟩⟨ψ₀^a| over the resolved ground space.
pub fn ground_projector(sd: &SpectralData) -> MatrixOperator {
    let dim = sd.basis.dim();
    let k = sd.ground_degeneracy;
    let mut p = Array2::zeros((dim, dim));
    for a in 0..k {
        let psi = sd.basis.state(a);
        for i in 0..dim {
            for j in 0..dim {
                p[[i, j]] += psi[i] * psi[j].conj();
            }
        }
    }
    MatrixOperator::dense(p)
}

/// Ground-space matrix M_ab = ⟨ψ₀^a, O ψ₀^b⟩ of an observable.
#[derive(Debug, Clone)]
pub struct GroundProjection {
    pub matrix: Array2<Complex64>,
    pub operator_label: String,
}

pub fn project_to_ground_space(
    sd: &SpectralData,
    o: &MatrixOperator,
    label: impl Into<String>,
) -> Result<GroundProjection> {
    if o.dim != sd.basis.dim() {
        return Err(Error::Dimension(format!(
            "operator dim {} vs spectral dim {}",
            o.dim,
            sd.basis.dim()
        )));
    }
    let k = sd.ground_degeneracy;
    let states: Vec<Vec<Complex64>> = (0..k).map(|a| sd.basis.state(a)).collect();
    let mut m = Array2::zeros((k, k));
    for b in 0..k {
        let opsi = o.apply(&states[b]);
        for a in 0..k {
            m[[a, b]] = vec_dot(&states[a], &opsi);
        }
    }
    Ok(GroundProjection {
        matrix: m,
        operator_label: label.into(),
    })
}

/// Positive-energy part: (B⁺)_ij = B_ij θ(E_i−E_j) in the energy eigenbasis,
/// with θ(0) = 1/2, rotated back to the computational basis.
pub fn positive_energy_part(sd: &SpectralData, b: &MatrixOperator) -> Result<MatrixOperator> {
    if !sd.full {
        return Err(Error::Unsupported(
            "positive_energy_part needs the full dense spectrum".into(),
        ));
    }
    let bd = b.to_dense();
    let mut bt = sd.basis.rotate_into(&bd);
    let n = sd.n_states();
    for i in 0..n {
        for j in 0..n {
            let de = sd.energies[i] - sd.energies[j];
            let theta = if de > 0.0 {
                1.0
            } else if de < 0.0 {
                0.0
            } else {
                0.5
            };
            bt[[i, j]] *= theta;
        }
    }
    Ok(MatrixOperator::dense(sd.basis.rotate_out(&bt)))
}

/// Rotate the resolved ground basis into the joint eigenbasis of the given
/// commuting symmetry operators, with deterministic phases (the largest
/// component of each state is made real positive). Returns, per symmetry, the
/// eigenvalue of each final basis state.
pub fn fix_ground_basis(
    sd: &mut SpectralData,
    symmetries: &[&MatrixOperator],
) -> Result<Vec<Vec<Complex64>>> {
    let k = sd.ground_degeneracy;
    let dim = sd.basis.dim();
    let mut states: Vec<Vec<Complex64>> = (0..k).map(|a| sd.basis.state(a)).collect();
    // Blocks of still-indistinguishable states.
    let mut blocks: Vec<Vec<usize>> = vec![(0..k).collect()];
    let mut recorded: Vec<Vec<Complex64>> = Vec::new();

    for sym in symmetries {
        if sym.dim != dim {
            return Err(Error::Dimension("symmetry dim mismatch".into()));
        }
        let mut eigs = vec![c(0.0, 0.0); k];
        let mut new_blocks = Vec::new();
        for block in &blocks {
            if block.len() == 1 {
                let a = block[0];
                let spsi = sym.apply(&states[a]);
                eigs[a] = vec_dot(&states[a], &spsi);
                new_blocks.push(block.clone());
                continue;
            }
            let nb = block.len();
            let mut m = Array2::zeros((nb, nb));
            for (bj, &j) in block.iter().enumerate() {
                let spsi = sym.apply(&states[j]);
                for (bi, &i) in block.iter().enumerate() {
                    m[[bi, bj]] = vec_dot(&states[i], &spsi);
                }
            }
            let (w, vecs) = blas::eig_complex(&m.view());
            // Deterministic eigenvalue order: by (re, im).
            let mut order: Vec<usize> = (0..nb).collect();
            order.sort_by(|&a, &b| {
                (w[a].re, w[a].im)
                    .partial_cmp(&(w[b].re, w[b].im))
                    .unwrap()
            });
            // Rotate the block states.
            let mut rotated: Vec<Vec<Complex64>> = Vec::with_capacity(nb);
            for &col in &order {
                let mut v = vec![c(0.0, 0.0); dim];
                for (bj, &j) in block.iter().enumerate() {
                    let coef = vecs[[bj, col]];
                    for i in 0..dim {
                        v[i] += coef * states[j][i];
                    }
                }
                rotated.push(v);
            }
            // Split into sub-blocks of equal eigenvalue and re-orthonormalize
            // within each (eigenvectors of a normal matrix are orthogonal
            // across distinct eigenvalues already).
            let mut sub: Vec<Vec<usize>> = Vec::new();
            let mut last_ev: Option<Complex64> = None;
            for (pos, &col) in order.iter().enumerate() {
                let ev = w[col];
                let global = block[pos];
                eigs[global] = ev;
                match last_ev {
                    Some(prev) if (prev - ev).norm() < 1e-6 => {
                        sub.last_mut().unwrap().push(global)
                    }
                    _ => sub.push(vec![global]),
                }
                last_ev = Some(ev);
            }
            for (pos, &global) in block.iter().enumerate() {
                states[global] = rotated[pos].clone();
            }
            // Gram-Schmidt inside each equal-eigenvalue sub-block.
            for s in &sub {
                for (si, &gi) in s.iter().enumerate() {
                    let mut v = states[gi].clone();
                    for &gj in &s[..si] {
                        let proj = vec_dot(&states[gj], &v);
                        for i in 0..dim {
                            v[i] -= proj * states[gj][i];
                        }
                    }
                    let n = vec_norm(&v);
                    if n < 1e-10 {
                        return Err(Error::Numeric(
                            "ground basis degenerated during symmetry rotation".into(),
                        ));
                    }
                    for z in &mut v {
                        *z /= n;
                    }
                    states[gi] = v;
                }
            }
            new_blocks.extend(sub);
        }
        blocks = new_blocks;
        recorded.push(eigs);
    }

    // Deterministic phase: largest-magnitude component real positive.
    for v in &mut states {
        let mut best = 0usize;
        for i in 0..dim {
            if v[i].norm() > v[best].norm() {
                best = i;
            }
        }
        let ph = v[best] / v[best].norm();
        for z in v.iter_mut() {
            *z /= ph;
        }
    }

    for (a, v) in states.iter().enumerate() {
        sd.basis.set_column(a, v);
    }
    Ok(recorded)
}

/// On-disk eigendata cache keyed by model hash (raw f64 arrays + a JSON
/// manifest). Enable by setting the `LOCALITY_LAB_CACHE` directory.
pub struct SpectralCache {
    dir: PathBuf,
}

impl SpectralCache {
    pub fn new(dir: impl AsRef<Path>) -> Result<Self> {
        std::fs::create_dir_all(dir.as_ref())?;
        Ok(SpectralCache {
            dir: dir.as_ref().to_path_buf(),
        })
    }

    pub fn from_env() -> Option<Self> {
        std::env::var_os("LOCALITY_LAB_CACHE").and_then(|d| Self::new(d).ok())
    }

    fn manifest_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    fn data_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.f64"))
    }

    pub fn load(&self, key: &str) -> Option<SpectralData> {
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(self.manifest_path(key)).ok()?).ok()?;
        let dim = manifest["dim"].as_u64()? as usize;
        let n_states = manifest["n_states"].as_u64()? as usize;
        let real = manifest["real_basis"].as_bool()?;
        let full = manifest["full"].as_bool()?;
        let ground_degeneracy = manifest["ground_degeneracy"].as_u64()? as usize;
        let gap = manifest["gap"].as_f64()?;
        let scale = manifest["scale"].as_f64()?;
        let energies: Vec<f64> = manifest["energies"]
            .as_array()?
            .iter()
            .map(|v| v.as_f64().unwrap())
            .collect();
        let bytes = std::fs::read(self.data_path(key)).ok()?;
        let floats: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|ch| f64::from_le_bytes(ch.try_into().unwrap()))
            .collect();
        let basis = if real {
            if floats.len() != dim * n_states {
                return None;
            }
            let mut v = Array2::zeros((dim, n_states));
            for j in 0..n_states {
                for i in 0..dim {
                    v[[i, j]] = floats[j * dim + i];
                }
            }
            Basis::Real(v)
        } else {
            if floats.len() != 2 * dim * n_states {
                return None;
            }
            let mut v = Array2::zeros((dim, n_states));
            for j in 0..n_states {
                for i in 0..dim {
                    let base = 2 * (j * dim + i);
                    v[[i, j]] = c(floats[base], floats[base + 1]);
                }
            }
            Basis::Complex(v)
        };
        Some(SpectralData {
            energies,
            basis,
            ground_degeneracy,
            gap,
            full,
            scale,
        })
    }

    pub fn store(&self, key: &str, sd: &SpectralData) -> Result<()> {
        let dim = sd.basis.dim();
        let n_states = sd.basis.n_states();
        let (real, bytes) = match &sd.basis {
            Basis::Real(v) => {
                let mut b = Vec::with_capacity(8 * dim * n_states);
                for j in 0..n_states {
                    for i in 0..dim {
                        b.extend_from_slice(&v[[i, j]].to_le_bytes());
                    }
                }
                (true, b)
            }
            Basis::Complex(v) => {
                let mut b = Vec::with_capacity(16 * dim * n_states);
                for j in 0..n_states {
                    for i in 0..dim {
                        b.extend_from_slice(&v[[i, j]].re.to_le_bytes());
                        b.extend_from_slice(&v[[i, j]].im.to_le_bytes());
                    }
                }
                (false, b)
            }
        };
        let manifest = serde_json::json!({
            "dim": dim,
            "n_states": n_states,
            "real_basis": real,
            "full": sd.full,
            "ground_degeneracy": sd.ground_degeneracy,
            "gap": sd.gap,
            "scale": sd.scale,
            "energies": sd.energies,
        });
        let tmp_m = self.manifest_path(key).with_extension("json.tmp");
        std::fs::write(&tmp_m, serde_json::to_string(&manifest).unwrap())?;
        std::fs::rename(&tmp_m, self.manifest_path(key))?;
        let tmp_d = self.data_path(key).with_extension("f64.tmp");
        std::fs::write(&tmp_d, &bytes)?;
        std::fs::rename(&tmp_d, self.data_path(key))?;
        Ok(())
    }
}

/// Diagonalize with optional disk cache.
pub fn diagonalize_cached(
    h: &HamiltonianSpec,
    k: usize,
    degeneracy_tol: Option<f64>,
    cache: Option<&SpectralCache>,
) -> Result<SpectralData> {
    let key = cache.map(|_| {
        let tol_bits = degeneracy_tol.unwrap_or(-1.0).to_bits();
        format!("{}-k{}-t{:016x}", h.content_hash(), k, tol_bits)
    });
    if let (Some(cache), Some(key)) = (cache, &key) {
        if let Some(sd) = cache.load(key) {
            return Ok(sd);
        }
    }
    let sd = diagonalize(h, k, degeneracy_tol)?;
    if let (Some(cache), Some(key)) = (cache, &key) {
        cache.store(key, &sd)?;
    }
    Ok(sd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_majumdar_ghosh, build_tfim, build_toric_code};
    use crate::operator::commutator;

    #[test]
    fn test_free_spins_spectrum() {
        // J = 0, B = 1: two free spins in a transverse field.
        let h = build_tfim(2, 0.0, 1.0, 0.0, false).unwrap();
        let sd = diagonalize(&h, 4, None).unwrap();
        let want = [-1.0, 0.0, 0.0, 1.0];
        for (e, w) in sd.energies.iter().zip(want.iter()) {
            assert!((e - w).abs() < 1e-10, "{e} vs {w}");
        }
        assert_eq!(sd.ground_degeneracy, 1);
        assert!((sd.gap - 1.0).abs() < 1e-10);
    }

    #[test]
    fn test_mg_ground_degeneracy_two() {
        let h = build_majumdar_ghosh(8, 0.5).unwrap();
        let sd = diagonalize(&h, 4, None).unwrap();
        assert_eq!(sd.ground_degeneracy, 2);
        assert!(sd.gap > 0.1);
    }

    #[test]
    fn test_toric_ground_degeneracy_four() {
        let h = build_toric_code(2, 2).unwrap();
        let sd = diagonalize(&h, 6, None).unwrap();
        assert_eq!(sd.ground_degeneracy, 4);
        assert!((sd.ground_energy() + 8.0).abs() < 1e-9);
        assert!(sd.gap > 1.0);
    }

    #[test]
    fn test_ground_projector_properties() {
        let h = build_tfim(4, 1.0, 2.0, 0.0, false).unwrap();
        let sd = diagonalize(&h, 2, None).unwrap();
        let p = ground_projector(&sd);
        // Rank-1 projector: P² = P, P† = P, tr P = 1.
        let p2 = p.matmul(&p).unwrap();
        assert!(p2.sub(&p).unwrap().frobenius_norm() < 1e-10);
        assert!((p.trace().re - 1.0).abs() < 1e-10);
        let hm = h.to_matrix().unwrap();
        let cm = commutator(&p, &hm).unwrap();
        assert!(cm.norm() <= 1e-9 * sd.scale);
    }

    #[test]
    fn test_project_identity_to_ground_space() {
        let h = build_majumdar_ghosh(6, 0.5).unwrap();
        let sd = diagonalize(&h, 4, None).unwrap();
        let k = sd.ground_degeneracy;
        let eye = MatrixOperator::identity_dense(h.dim());
        let gp = project_to_ground_space(&sd, &eye, "I").unwrap();
        for a in 0..k {
            for b in 0..k {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((gp.matrix[[a, b]] - c(want, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn test_positive_energy_part_identities() {
        // Diagonal-in-energy operator: B⁺ = B/2 by the θ(0)=1/2 convention.
        let h = build_tfim(3, 1.3, 0.9, 0.2, false).unwrap();
        let sd = diagonalize(&h, 2, None).unwrap();
        let hm = MatrixOperator::dense(h.to_dense().unwrap());
        // H itself is diagonal in its eigenbasis... but has distinct energies,
        // so instead use the identity (fully diagonal, all θ(0) terms).
        let eye = MatrixOperator::identity_dense(h.dim());
        let plus = positive_energy_part(&sd, &eye).unwrap();
        assert!(
            plus.sub(&eye.scale(c(0.5, 0.0)))
                .unwrap()
                .frobenius_norm()
                < 1e-10
        );

        // (B⁺) + (B⁺)† reconstructs Hermitian B up to the diagonal θ(0) terms
        // counted twice at weight 1/2 each.
        let b = crate::operator::embed(
            &crate::operator::LocalOperator::single(1, crate::operator::spin::sz(), "sz"),
            &h.lattice,
        )
        .unwrap();
        let plus = positive_energy_part(&sd, &b).unwrap();
        let rebuilt = plus.add(&plus.adjoint()).unwrap();
        assert!(rebuilt.sub(&b).unwrap().frobenius_norm() < 1e-9);

        // B⁺ψ₀ = Bψ₀ when ⟨ψ₀,Bψ₀⟩ = 0 and ψ₀ is the unique lowest state.
        let psi0 = sd.ground_state(0);
        let expect = b.expectation(&psi0);
        if expect.norm() < 1e-10 {
            let d1 = plus.apply(&psi0);
            let d2 = b.apply(&psi0);
            let diff: f64 = d1
                .iter()
                .zip(d2.iter())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(diff < 1e-9);
        }
        let _ = hm;
    }

    #[test]
    fn test_sparse_matches_dense_low_states() {
        // N = 13 forces the sparse path; compare against the dense answer of
        // the same model computed through an explicit dense matrix.
        let h = build_tfim(13, 1.0, 1.6, 0.0, false).unwrap();
        let sparse = diagonalize(&h, 3, None).unwrap();
        // Dense oracle: embed terms by hand at full dimension.
        let dim = h.dim();
        let hs = h.to_sparse().unwrap();
        let mut dense = Array2::<Complex64>::zeros((dim, dim));
        for (row, vecr) in hs.outer_iterator().enumerate() {
            for (col, &v) in vecr.iter() {
                dense[[i_(row), i_(col)]] = v;
            }
        }
        let re = dense.mapv(|z| z.re);
        let (w, _) = blas::eigh_real(&re.view());
        for j in 0..3 {
            assert!(
                (sparse.energies[j] - w[j]).abs() < 1e-8,
                "state {j}: {} vs {}",
                sparse.energies[j],
                w[j]
            );
        }
    }

    fn i_(x: usize) -> usize {
        x
    }

    #[test]
    fn test_lanczos_resolves_degeneracy() {
        // 13-site TFIM at B=0.05 has a nearly-degenerate ground doublet.
        let h = build_tfim(13, 1.0, 0.05, 0.0, false).unwrap();
        let sd = diagonalize(&h, 3, Some(1e-2)).unwrap();
        assert_eq!(sd.ground_degeneracy, 2);
        assert!(sd.energies[1] - sd.energies[0] < 1e-4);
        assert!(sd.gap > 0.01);
    }

    #[test]
    fn test_cache_round_trip() {
        let dir = std::env::temp_dir().join(format!("locality-cache-test-{}", std::process::id()));
        let cache = SpectralCache::new(&dir).unwrap();
        let h = build_tfim(4, 1.0, 0.8, 0.0, true).unwrap();
        let sd1 = diagonalize_cached(&h, 2, None, Some(&cache)).unwrap();
        let sd2 = diagonalize_cached(&h, 2, None, Some(&cache)).unwrap();
        assert_eq!(sd1.energies, sd2.energies);
        assert_eq!(sd1.ground_degeneracy, sd2.ground_degeneracy);
        for j in 0..3 {
            let a = sd1.basis.state(j);
            let b = sd2.basis.state(j);
            for i in 0..a.len() {
                assert_eq!(a[i], b[i], "cache must be bit-exact");
            }
        }
        std::fs::remove_dir_all(&dir).ok();
    }
}
