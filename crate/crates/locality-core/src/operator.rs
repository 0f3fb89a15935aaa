//! Tensor-product embedding of local operators, operator norms, commutators,
//! partial traces, and Haar-average localization.
//!
//! Operators live either as dense matrices (up to [`DENSE_MAX_SITES`] spins)
//! or as CSR sparse matrices (up to [`SPARSE_MAX_SITES`]). Operator norms use
//! power iteration on m†m with a seeded deterministic start vector.

use crate::blas;
use crate::error::{Error, Result};
use crate::lattice::{Lattice, SiteSet};
use ndarray::prelude::*;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sprs::{CsMat, TriMat};

/// Largest site count handled with dense matrices (dim 4096 at D=2).
pub const DENSE_MAX_SITES: usize = 12;
/// Largest site count handled at all (dim 262144 at D=2).
pub const SPARSE_MAX_SITES: usize = 18;

/// Relative tolerance for power-iteration operator norms.
pub const NORM_REL_TOL: f64 = 1e-10;
/// Iteration cap for power-iteration operator norms.
pub const NORM_MAX_ITERS: usize = 10_000;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Spin-1/2 matrices with S = σ/2 (norm 1/2), plus raising/lowering.
pub mod spin {
    use super::*;

    pub fn sx() -> Array2<Complex64> {
        array![[c(0.0, 0.0), c(0.5, 0.0)], [c(0.5, 0.0), c(0.0, 0.0)]]
    }

    pub fn sy() -> Array2<Complex64> {
        array![[c(0.0, 0.0), c(0.0, -0.5)], [c(0.0, 0.5), c(0.0, 0.0)]]
    }

    pub fn sz() -> Array2<Complex64> {
        array![[c(0.5, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-0.5, 0.0)]]
    }

    /// S⁺ = Sx + iSy; maps |↓⟩ to |↑⟩ (basis order: index 0 = up).
    pub fn sp() -> Array2<Complex64> {
        array![[c(0.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]]
    }

    pub fn sm() -> Array2<Complex64> {
        array![[c(0.0, 0.0), c(0.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]]
    }

    pub fn id() -> Array2<Complex64> {
        Array2::eye(2)
    }

    /// Named single-site matrix lookup for the term-list file vocabulary.
    pub fn by_name(name: &str) -> Option<Array2<Complex64>> {
        match name {
            "Sx" => Some(sx()),
            "Sy" => Some(sy()),
            "Sz" => Some(sz()),
            "Sp" => Some(sp()),
            "Sm" => Some(sm()),
            "I" => Some(id()),
            _ => None,
        }
    }
}

/// Kronecker product, first factor most significant.
pub fn kron(a: &ArrayView2<Complex64>, b: &ArrayView2<Complex64>) -> Array2<Complex64> {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = Array2::zeros((ra * rb, ca * cb));
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[[i, j]];
            if aij == c(0.0, 0.0) {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out[[i * rb + k, j * cb + l]] = aij * b[[k, l]];
                }
            }
        }
    }
    out
}

/// A labeled operator on a declared support set.
#[derive(Debug, Clone)]
pub struct LocalOperator {
    pub support: SiteSet,
    pub local_dim: usize,
    /// Matrix on the D^|support| space, support sites in ascending order,
    /// the smallest site being the most significant tensor factor.
    pub matrix: Array2<Complex64>,
    pub label: String,
}

impl LocalOperator {
    pub fn new(
        support: SiteSet,
        local_dim: usize,
        matrix: Array2<Complex64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let want = local_dim.pow(support.len() as u32);
        if matrix.nrows() != want || matrix.ncols() != want {
            return Err(Error::Dimension(format!(
                "local matrix is {}x{}, expected {want}x{want} for |support|={} at D={local_dim}",
                matrix.nrows(),
                matrix.ncols(),
                support.len()
            )));
        }
        Ok(LocalOperator {
            support,
            local_dim,
            matrix,
            label: label.into(),
        })
    }

    /// Single-site spin operator.
    pub fn single(site: usize, matrix: Array2<Complex64>, label: impl Into<String>) -> Self {
        LocalOperator {
            support: SiteSet::single(site),
            local_dim: matrix.nrows(),
            matrix,
            label: label.into(),
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let m = &self.matrix;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if (m[[i, j]] - m[[j, i]].conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }
}

/// Dense or sparse realization on the full Hilbert space.
#[derive(Debug, Clone)]
pub enum Storage {
    Dense(Array2<Complex64>),
    Sparse(CsMat<Complex64>),
}

/// An operator on the full D^N-dimensional space.
#[derive(Debug, Clone)]
pub struct MatrixOperator {
    pub dim: usize,
    pub storage: Storage,
    pub hermitian: bool,
}

impl MatrixOperator {
    pub fn dense(m: Array2<Complex64>) -> Self {
        let dim = m.nrows();
        assert_eq!(dim, m.ncols());
        let hermitian = dense_is_hermitian(&m, 1e-12);
        MatrixOperator {
            dim,
            storage: Storage::Dense(m),
            hermitian,
        }
    }

    pub fn sparse(m: CsMat<Complex64>) -> Self {
        let dim = m.rows();
        assert_eq!(dim, m.cols());
        let hermitian = sparse_is_hermitian(&m, 1e-12);
        MatrixOperator {
            dim,
            storage: Storage::Sparse(m),
            hermitian,
        }
    }

    pub fn identity_dense(dim: usize) -> Self {
        MatrixOperator::dense(Array2::eye(dim))
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    pub fn as_dense(&self) -> Result<&Array2<Complex64>> {
        match &self.storage {
            Storage::Dense(m) => Ok(m),
            Storage::Sparse(_) => Err(Error::Unsupported(
                "dense storage required for this operation".into(),
            )),
        }
    }

    pub fn to_dense(&self) -> Array2<Complex64> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Sparse(m) => {
                let mut out = Array2::zeros((self.dim, self.dim));
                for (row, vec) in m.outer_iterator().enumerate() {
                    for (col, &v) in vec.iter() {
                        out[[row, col]] = v;
                    }
                }
                out
            }
        }
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        match &self.storage {
            Storage::Dense(m) => blas::gemv_complex(&m.view(), x, false),
            Storage::Sparse(m) => sparse_matvec(m, x),
        }
    }

    pub fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        if self.hermitian {
            return self.apply(x);
        }
        match &self.storage {
            Storage::Dense(m) => {
                let xc: Vec<Complex64> = x.iter().map(|z| z.conj()).collect();
                blas::gemv_complex(&m.view(), &xc, true)
                    .into_iter()
                    .map(|z| z.conj())
                    .collect()
            }
            Storage::Sparse(m) => {
                // A† x accumulated column-wise from the CSR rows.
                let mut y = vec![c(0.0, 0.0); self.dim];
                for (row, vec) in m.outer_iterator().enumerate() {
                    let xr = x[row];
                    for (col, &v) in vec.iter() {
                        y[col] += v.conj() * xr;
                    }
                }
                y
            }
        }
    }

    /// Scalar multiple a·self.
    pub fn scale(&self, a: Complex64) -> MatrixOperator {
        let hermitian = self.hermitian && a.im == 0.0;
        let storage = match &self.storage {
            Storage::Dense(m) => Storage::Dense(m.mapv(|z| z * a)),
            Storage::Sparse(m) => Storage::Sparse(m.map(|z| z * a)),
        };
        MatrixOperator {
            dim: self.dim,
            storage,
            hermitian,
        }
    }

    pub fn add(&self, other: &MatrixOperator) -> Result<MatrixOperator> {
        self.combine(other, c(1.0, 0.0))
    }

    pub fn sub(&self, other: &MatrixOperator) -> Result<MatrixOperator> {
        self.combine(other, c(-1.0, 0.0))
    }

    fn combine(&self, other: &MatrixOperator, sign: Complex64) -> Result<MatrixOperator> {
        if self.dim != other.dim {
            return Err(Error::Dimension(format!(
                "operator dims {} vs {}",
                self.dim, other.dim
            )));
        }
        let storage = match (&self.storage, &other.storage) {
            (Storage::Sparse(a), Storage::Sparse(b)) => {
                let b_scaled = b.map(|z| z * sign);
                Storage::Sparse(&a.view() + &b_scaled.view())
            }
            _ => {
                let a = self.to_dense();
                let b = other.to_dense();
                Storage::Dense(&a + &b.mapv(|z| z * sign))
            }
        };
        let m = match storage {
            Storage::Dense(d) => MatrixOperator::dense(d),
            Storage::Sparse(s) => MatrixOperator::sparse(s),
        };
        Ok(m)
    }

    pub fn matmul(&self, other: &MatrixOperator) -> Result<MatrixOperator> {
        if self.dim != other.dim {
            return Err(Error::Dimension(format!(
                "operator dims {} vs {}",
                self.dim, other.dim
            )));
        }
        let storage = match (&self.storage, &other.storage) {
            (Storage::Sparse(a), Storage::Sparse(b)) => Storage::Sparse(a * b),
            _ => {
                let a = self.to_dense();
                let b = other.to_dense();
                Storage::Dense(blas::gemm(&a.view(), &b.view()))
            }
        };
        Ok(match storage {
            Storage::Dense(d) => MatrixOperator::dense(d),
            Storage::Sparse(s) => MatrixOperator::sparse(s),
        })
    }

    pub fn adjoint(&self) -> MatrixOperator {
        match &self.storage {
            Storage::Dense(m) => {
                let mut out = Array2::zeros((self.dim, self.dim));
                for i in 0..self.dim {
                    for j in 0..self.dim {
                        out[[i, j]] = m[[j, i]].conj();
                    }
                }
                MatrixOperator::dense(out)
            }
            Storage::Sparse(m) => {
                let t = m.transpose_view().to_csr().map(|z| z.conj());
                MatrixOperator::sparse(t)
            }
        }
    }

    pub fn trace(&self) -> Complex64 {
        match &self.storage {
            Storage::Dense(m) => (0..self.dim).map(|i| m[[i, i]]).sum(),
            Storage::Sparse(m) => (0..self.dim)
                .map(|i| m.get(i, i).copied().unwrap_or(c(0.0, 0.0)))
                .sum(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        let s: f64 = match &self.storage {
            Storage::Dense(m) => m.iter().map(|z| z.norm_sqr()).sum(),
            Storage::Sparse(m) => m.data().iter().map(|z| z.norm_sqr()).sum(),
        };
        s.sqrt()
    }

    /// ⟨ψ|M|ψ⟩.
    pub fn expectation(&self, psi: &[Complex64]) -> Complex64 {
        let mpsi = self.apply(psi);
        psi.iter()
            .zip(mpsi.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Largest singular value via power iteration on m†m.
    pub fn norm(&self) -> f64 {
        operator_norm(self)
    }
}

fn dense_is_hermitian(m: &Array2<Complex64>, tol: f64) -> bool {
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            if (m[[i, j]] - m[[j, i]].conj()).norm() > tol {
                return false;
            }
        }
    }
    true
}

fn sparse_is_hermitian(m: &CsMat<Complex64>, tol: f64) -> bool {
    let adj = m.transpose_view().to_csr().map(|z| z.conj());
    let diff = &m.view() + &adj.map(|z| -z).view();
    diff.data().iter().all(|z| z.norm() <= tol)
}

pub fn sparse_matvec(m: &CsMat<Complex64>, x: &[Complex64]) -> Vec<Complex64> {
    let mut y = vec![c(0.0, 0.0); m.rows()];
    for (row, vec) in m.outer_iterator().enumerate() {
        let mut acc = c(0.0, 0.0);
        for (col, &v) in vec.iter() {
            acc += v * x[col];
        }
        y[row] = acc;
    }
    y
}

/// Embed a local operator into the full lattice Hilbert space, identity on
/// all sites outside the support. Storage is dense up to [`DENSE_MAX_SITES`]
/// sites and sparse up to [`SPARSE_MAX_SITES`].
pub fn embed(op: &LocalOperator, lat: &Lattice) -> Result<MatrixOperator> {
    let n = lat.site_count();
    if n <= DENSE_MAX_SITES {
        embed_dense(op, lat).map(MatrixOperator::dense)
    } else if n <= SPARSE_MAX_SITES {
        embed_sparse(op, lat).map(MatrixOperator::sparse)
    } else {
        Err(Error::Capacity(format!(
            "{n} sites exceeds the sparse cap of {SPARSE_MAX_SITES}"
        )))
    }
}

struct EmbedIndexer {
    support_strides: Vec<usize>,
    comp_strides: Vec<usize>,
    comp_count: usize,
    local_dim: usize,
}

fn embed_indexer(op: &LocalOperator, lat: &Lattice) -> Result<EmbedIndexer> {
    let n = lat.site_count();
    let d = op.local_dim;
    if let Some(&max) = op.support.members().last() {
        if max >= n {
            return Err(Error::Domain(format!(
                "support site {max} outside lattice of {n} sites"
            )));
        }
    }
    let stride = |site: usize| d.pow((n - 1 - site) as u32);
    let support_strides: Vec<usize> = op.support.members().iter().map(|&s| stride(s)).collect();
    let comp_sites: Vec<usize> = (0..n).filter(|s| !op.support.contains(*s)).collect();
    let comp_strides: Vec<usize> = comp_sites.iter().map(|&s| stride(s)).collect();
    let comp_count = d.pow(comp_sites.len() as u32);
    Ok(EmbedIndexer {
        support_strides,
        comp_strides,
        comp_count,
        local_dim: d,
    })
}

impl EmbedIndexer {
    /// Full-space offset of a support configuration (local row/col index).
    fn support_offset(&self, local_index: usize) -> usize {
        let d = self.local_dim;
        let k = self.support_strides.len();
        let mut rem = local_index;
        let mut off = 0;
        for slot in (0..k).rev() {
            off += (rem % d) * self.support_strides[slot];
            rem /= d;
        }
        off
    }

    /// Full-space offset of a complement configuration.
    fn comp_offset(&self, comp_index: usize) -> usize {
        let d = self.local_dim;
        let k = self.comp_strides.len();
        let mut rem = comp_index;
        let mut off = 0;
        for slot in (0..k).rev() {
            off += (rem % d) * self.comp_strides[slot];
            rem /= d;
        }
        off
    }
}

pub fn embed_dense(op: &LocalOperator, lat: &Lattice) -> Result<Array2<Complex64>> {
    let n = lat.site_count();
    let dim = op.local_dim.pow(n as u32);
    let ix = embed_indexer(op, lat)?;
    let mut out = Array2::zeros((dim, dim));
    let ldim = op.matrix.nrows();
    for a in 0..ldim {
        for b in 0..ldim {
            let v = op.matrix[[a, b]];
            if v == c(0.0, 0.0) {
                continue;
            }
            let (ra, cb) = (ix.support_offset(a), ix.support_offset(b));
            for ci in 0..ix.comp_count {
                let co = ix.comp_offset(ci);
                out[[ra + co, cb + co]] += v;
            }
        }
    }
    Ok(out)
}

pub fn embed_sparse(op: &LocalOperator, lat: &Lattice) -> Result<CsMat<Complex64>> {
    let n = lat.site_count();
    let dim = op.local_dim.pow(n as u32);
    let ix = embed_indexer(op, lat)?;
    let mut tri = TriMat::new((dim, dim));
    let ldim = op.matrix.nrows();
    for a in 0..ldim {
        for b in 0..ldim {
            let v = op.matrix[[a, b]];
            if v == c(0.0, 0.0) {
                continue;
            }
            let (ra, cb) = (ix.support_offset(a), ix.support_offset(b));
            for ci in 0..ix.comp_count {
                let co = ix.comp_offset(ci);
                tri.add_triplet(ra + co, cb + co, v);
            }
        }
    }
    Ok(tri.to_csr())
}

/// Deterministic unit start vector for iterative norm estimates.
pub fn seeded_unit_vector(dim: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<Complex64> = (0..dim)
        .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let norm = vec_norm(&v);
    for z in &mut v {
        *z /= norm;
    }
    v
}

pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vec_dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Operator norm (largest singular value) via power iteration on m†m,
/// relative tolerance [`NORM_REL_TOL`], at most [`NORM_MAX_ITERS`] iterations.
pub fn operator_norm(m: &MatrixOperator) -> f64 {
    operator_norm_apply(m.dim, |x| m.apply_adjoint(&m.apply(x)))
}

/// Power iteration on a Hermitian positive semidefinite map `g = m†m`;
/// returns sqrt of the largest eigenvalue.
pub fn operator_norm_apply(dim: usize, g: impl Fn(&[Complex64]) -> Vec<Complex64>) -> f64 {
    let mut v = seeded_unit_vector(dim, 0x5EED_CAFE);
    let mut prev = f64::INFINITY;
    for _ in 0..NORM_MAX_ITERS {
        let gv = g(&v);
        // Rayleigh quotient of the PSD map; ⟨v,Gv⟩ is real.
        let lambda = vec_dot(&v, &gv).re.max(0.0);
        let est = lambda.sqrt();
        let gn = vec_norm(&gv);
        if gn < 1e-300 {
            return 0.0;
        }
        if (est - prev).abs() <= NORM_REL_TOL * est.max(1e-300) {
            return est;
        }
        prev = est;
        v = gv.into_iter().map(|z| z / gn).collect();
    }
    prev
}

/// Commutator ab − ba.
pub fn commutator(a: &MatrixOperator, b: &MatrixOperator) -> Result<MatrixOperator> {
    let ab = a.matmul(b)?;
    let ba = b.matmul(a)?;
    ab.sub(&ba)
}

/// Anticommutator ab + ba.
pub fn anticommutator(a: &MatrixOperator, b: &MatrixOperator) -> Result<MatrixOperator> {
    let ab = a.matmul(b)?;
    let ba = b.matmul(a)?;
    ab.add(&ba)
}

/// Partial trace of a dense full-space matrix onto the `keep` subsystem.
pub fn partial_trace(
    m: &Array2<Complex64>,
    n_sites: usize,
    local_dim: usize,
    keep: &SiteSet,
) -> Result<Array2<Complex64>> {
    let dim = local_dim.pow(n_sites as u32);
    if m.nrows() != dim {
        return Err(Error::Dimension(format!(
            "matrix dim {} vs lattice dim {dim}",
            m.nrows()
        )));
    }
    let d = local_dim;
    let stride = |site: usize| d.pow((n_sites - 1 - site) as u32);
    let keep_strides: Vec<usize> = keep.members().iter().map(|&s| stride(s)).collect();
    let comp_sites: Vec<usize> = (0..n_sites).filter(|s| !keep.contains(*s)).collect();
    let comp_strides: Vec<usize> = comp_sites.iter().map(|&s| stride(s)).collect();

    let dim_keep = d.pow(keep.len() as u32);
    let comp_count = d.pow(comp_sites.len() as u32);
    let offset = |strides: &[usize], idx: usize| -> usize {
        let mut rem = idx;
        let mut off = 0;
        for slot in (0..strides.len()).rev() {
            off += (rem % d) * strides[slot];
            rem /= d;
        }
        off
    };

    let mut out = Array2::zeros((dim_keep, dim_keep));
    for a in 0..dim_keep {
        let ra = offset(&keep_strides, a);
        for b in 0..dim_keep {
            let cb = offset(&keep_strides, b);
            let mut acc = c(0.0, 0.0);
            for ci in 0..comp_count {
                let co = offset(&comp_strides, ci);
                acc += m[[ra + co, cb + co]];
            }
            out[[a, b]] = acc;
        }
    }
    Ok(out)
}

/// Haar average ∫dU U m U† over unitaries supported on the complement of
/// `keep`, computed exactly as (partial trace over the complement divided by
/// the complement dimension) tensored with identity. The result is supported
/// on `keep`.
pub fn haar_localize(m: &MatrixOperator, keep: &SiteSet, lat: &Lattice) -> Result<MatrixOperator> {
    let n = lat.site_count();
    let dense = m.to_dense();
    let local_dim = infer_local_dim(m.dim, n)?;
    let reduced = partial_trace(&dense, n, local_dim, keep)?;
    let comp_dim = local_dim.pow((n - keep.len()) as u32) as f64;
    let scaled = reduced.mapv(|z| z / comp_dim);
    let lop = LocalOperator::new(keep.clone(), local_dim, scaled, "haar-localized")?;
    if m.is_dense() {
        Ok(MatrixOperator::dense(embed_dense(&lop, lat)?))
    } else {
        Ok(MatrixOperator::sparse(embed_sparse(&lop, lat)?))
    }
}

fn infer_local_dim(dim: usize, n_sites: usize) -> Result<usize> {
    for d in 2..=8usize {
        if d.pow(n_sites as u32) == dim {
            return Ok(d);
        }
    }
    Err(Error::Dimension(format!(
        "dim {dim} is not D^{n_sites} for any small D"
    )))
}

/// Permutation operator |b_0 … b_{N−1}⟩ → |b_{perm(0)} … b_{perm(N−1)}⟩
/// mapping site `i`'s state onto site `perm(i)`.
pub fn site_permutation_operator(
    n_sites: usize,
    local_dim: usize,
    perm: &[usize],
) -> Result<MatrixOperator> {
    if perm.len() != n_sites {
        return Err(Error::Dimension("permutation length != site count".into()));
    }
    let dim = local_dim.pow(n_sites as u32);
    let d = local_dim;
    let mut tri = TriMat::new((dim, dim));
    for b in 0..dim {
        // Digits of b, site 0 most significant.
        let mut digits = vec![0usize; n_sites];
        let mut rem = b;
        for s in (0..n_sites).rev() {
            digits[s] = rem % d;
            rem /= d;
        }
        let mut out_digits = vec![0usize; n_sites];
        for s in 0..n_sites {
            out_digits[perm[s]] = digits[s];
        }
        let mut target = 0usize;
        for s in 0..n_sites {
            target = target * d + out_digits[s];
        }
        tri.add_triplet(target, b, c(1.0, 0.0));
    }
    Ok(MatrixOperator::sparse(tri.to_csr()))
}

/// Translation by one site on a periodic ring (site i → i+1 mod N).
pub fn translation_operator(lat: &Lattice, local_dim: usize) -> Result<MatrixOperator> {
    let (coord, period) = lat
        .ring_coordinate()
        .ok_or_else(|| Error::Domain("lattice has no periodic coordinate".into()))?;
    let n = lat.site_count();
    if period != n {
        return Err(Error::Domain(
            "translation operator only built for pure rings".into(),
        ));
    }
    let mut perm = vec![0usize; n];
    for (i, &x) in coord.iter().enumerate() {
        perm[i] = (x + 1) % n;
    }
    site_permutation_operator(n, local_dim, &perm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize) -> Lattice {
        Lattice::chain_open(n)
    }

    #[test]
    fn test_embed_single_site_norm() {
        // S^z embedded anywhere keeps norm 1/2.
        let lat = chain(4);
        let op = LocalOperator::single(2, spin::sz(), "Sz2");
        let m = embed(&op, &lat).unwrap();
        assert_eq!(m.dim, 16);
        assert!((m.norm() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn test_embed_identity() {
        let lat = chain(3);
        let op = LocalOperator::single(0, spin::id(), "I0");
        let m = embed(&op, &lat).unwrap().to_dense();
        let eye = Array2::<Complex64>::eye(8);
        assert!((&m - &eye).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn test_embed_two_site_matches_kron_oracle() {
        // Independent oracle: I ⊗ Sz ⊗ Sz ⊗ I by explicit kron.
        let lat = chain(4);
        let zz = kron(&spin::sz().view(), &spin::sz().view());
        let op = LocalOperator::new(SiteSet::new(vec![1, 2]).unwrap(), 2, zz, "SzSz").unwrap();
        let m = embed(&op, &lat).unwrap().to_dense();

        let oracle = kron(
            &kron(
                &kron(&spin::id().view(), &spin::sz().view()).view(),
                &spin::sz().view(),
            )
            .view(),
            &spin::id().view(),
        );
        assert!((&m - &oracle).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn test_embed_noncontiguous_support_matches_kron_oracle() {
        let lat = chain(3);
        let xz = kron(&spin::sx().view(), &spin::sz().view());
        let op = LocalOperator::new(SiteSet::new(vec![0, 2]).unwrap(), 2, xz, "SxSz").unwrap();
        let m = embed(&op, &lat).unwrap().to_dense();
        let oracle = kron(
            &kron(&spin::sx().view(), &spin::id().view()).view(),
            &spin::sz().view(),
        );
        assert!((&m - &oracle).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn test_norm_pauli_string_and_zero() {
        let lat = chain(3);
        let xx = kron(
            &spin::sx().mapv(|z| z * 2.0).view(),
            &spin::sy().mapv(|z| z * 2.0).view(),
        );
        let op = LocalOperator::new(SiteSet::new(vec![0, 1]).unwrap(), 2, xx, "XY").unwrap();
        let m = embed(&op, &lat).unwrap();
        assert!((m.norm() - 1.0).abs() < 1e-9);

        let zero = MatrixOperator::dense(Array2::zeros((8, 8)));
        assert_eq!(zero.norm(), 0.0);
    }

    #[test]
    fn test_commutator_disjoint_supports_vanishes() {
        let lat = chain(5);
        let a = embed(&LocalOperator::single(0, spin::sz(), "a"), &lat).unwrap();
        let b = embed(&LocalOperator::single(4, spin::sz(), "b"), &lat).unwrap();
        let comm = commutator(&a, &b).unwrap();
        assert!(comm.frobenius_norm() < 1e-14);
    }

    #[test]
    fn test_commutator_spin_algebra() {
        // [Sx, Sy] = i Sz on one site.
        let lat = chain(1);
        let a = embed(&LocalOperator::single(0, spin::sx(), "sx"), &lat).unwrap();
        let b = embed(&LocalOperator::single(0, spin::sy(), "sy"), &lat).unwrap();
        let comm = commutator(&a, &b).unwrap().to_dense();
        let want = spin::sz().mapv(|z| z * c(0.0, 1.0));
        assert!((&comm - &want).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn test_commutator_antisymmetric() {
        let lat = chain(2);
        let a = embed(&LocalOperator::single(0, spin::sx(), "a"), &lat).unwrap();
        let b = embed(&LocalOperator::single(0, spin::sz(), "b"), &lat).unwrap();
        let ab = commutator(&a, &b).unwrap().to_dense();
        let ba = commutator(&b, &a).unwrap().to_dense();
        assert!((&ab + &ba).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn test_partial_trace_product_state() {
        // Tr_B(A ⊗ B) = A · tr(B).
        let a = spin::sz();
        let b = array![[c(0.5, 0.0), c(1.0, 0.2)], [c(1.0, -0.2), c(0.5, 0.0)]];
        let full = kron(&a.view(), &b.view());
        let keep = SiteSet::single(0);
        let red = partial_trace(&full, 2, 2, &keep).unwrap();
        let trb: Complex64 = (0..2).map(|i| b[[i, i]]).sum();
        let want = a.mapv(|z| z * trb);
        assert!((&red - &want).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn test_haar_localize_fixed_point() {
        // Already supported on keep: unchanged.
        let lat = chain(3);
        let m = embed(&LocalOperator::single(1, spin::sx(), "sx"), &lat).unwrap();
        let keep = SiteSet::single(1);
        let h = haar_localize(&m, &keep, &lat).unwrap();
        let diff = h.sub(&m).unwrap();
        assert!(diff.frobenius_norm() < 1e-12);
    }

    #[test]
    fn test_haar_localize_traceless_discard() {
        // S^z on a discarded site averages to zero.
        let lat = chain(3);
        let m = embed(&LocalOperator::single(2, spin::sz(), "sz"), &lat).unwrap();
        let keep = SiteSet::new(vec![0, 1]).unwrap();
        let h = haar_localize(&m, &keep, &lat).unwrap();
        assert!(h.frobenius_norm() < 1e-12);
    }

    #[test]
    fn test_haar_localize_keep_all() {
        let lat = chain(3);
        let m = embed(&LocalOperator::single(2, spin::sy(), "sy"), &lat).unwrap();
        let h = haar_localize(&m, &lat.all_sites(), &lat).unwrap();
        assert!(h.sub(&m).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn test_haar_localize_is_projection() {
        let lat = chain(4);
        // Something not supported on keep: a two-site term.
        let zz = kron(&spin::sz().view(), &spin::sx().view());
        let op = LocalOperator::new(SiteSet::new(vec![1, 2]).unwrap(), 2, zz, "zx").unwrap();
        let m = embed(&op, &lat).unwrap();
        let keep = SiteSet::new(vec![0, 1]).unwrap();
        let once = haar_localize(&m, &keep, &lat).unwrap();
        let twice = haar_localize(&once, &keep, &lat).unwrap();
        assert!(twice.sub(&once).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn test_embed_norm_preserved_sparse() {
        // Same operator embedded at 13 sites (sparse path) keeps its norm.
        let lat = Lattice::chain_open(13);
        let op = LocalOperator::single(5, spin::sz(), "sz");
        let m = embed(&op, &lat).unwrap();
        assert!(!m.is_dense());
        assert!((m.norm() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn test_capacity_error_beyond_sparse_cap() {
        let lat = Lattice::chain_open(19);
        let op = LocalOperator::single(0, spin::sz(), "sz");
        assert!(matches!(embed(&op, &lat), Err(Error::Capacity(_))));
    }

    #[test]
    fn test_translation_operator_ring() {
        let lat = Lattice::chain_periodic(3);
        let t = translation_operator(&lat, 2).unwrap();
        // T S^z_0 T† = S^z_1.
        let s0 = embed(&LocalOperator::single(0, spin::sz(), "sz0"), &lat).unwrap();
        let s1 = embed(&LocalOperator::single(1, spin::sz(), "sz1"), &lat).unwrap();
        let moved = t.matmul(&s0).unwrap().matmul(&t.adjoint()).unwrap();
        assert!(moved.sub(&s1).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn test_adjoint_apply_consistency() {
        let lat = chain(2);
        let m = embed(&LocalOperator::single(0, spin::sp(), "sp"), &lat).unwrap();
        let x = seeded_unit_vector(4, 7);
        let y = seeded_unit_vector(4, 8);
        // ⟨y, Mx⟩ = ⟨M†y, x⟩.
        let lhs = vec_dot(&y, &m.apply(&x));
        let rhs = vec_dot(&m.apply_adjoint(&y), &x);
        assert!((lhs - rhs).norm() < 1e-12);
    }
}
