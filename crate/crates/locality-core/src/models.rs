//! Built-in Hamiltonians and charge structures.
//!
//! All spin models use S = σ/2 (operator norm 1/2 per component), so the
//! ferromagnetic ground-space matrix of S^z has ±1/2 off-diagonals.

use crate::blas;
use crate::error::{Error, Result};
use crate::lattice::{set_diameter, Lattice, SiteSet};
use crate::operator::{
    c, embed_dense, embed_sparse, kron, spin, LocalOperator, MatrixOperator, DENSE_MAX_SITES,
    SPARSE_MAX_SITES,
};
use ndarray::prelude::*;
use num_complex::Complex64;
use sprs::CsMat;
use std::collections::BTreeMap;

/// One interaction term H_Z with its support.
#[derive(Debug, Clone)]
pub struct HamiltonianTerm {
    pub support: SiteSet,
    pub matrix: Array2<Complex64>,
    pub label: String,
}

impl HamiltonianTerm {
    pub fn new(support: SiteSet, matrix: Array2<Complex64>, label: impl Into<String>) -> Self {
        HamiltonianTerm {
            support,
            matrix,
            label: label.into(),
        }
    }

    pub fn to_local(&self, local_dim: usize) -> Result<LocalOperator> {
        LocalOperator::new(
            self.support.clone(),
            local_dim,
            self.matrix.clone(),
            self.label.clone(),
        )
    }

    /// Operator norm of the local matrix (small dense, exact).
    pub fn norm(&self) -> f64 {
        local_matrix_norm(&self.matrix)
    }
}

/// Operator norm of a small dense matrix via eigenvalues of m†m.
pub fn local_matrix_norm(m: &Array2<Complex64>) -> f64 {
    let n = m.nrows();
    let mut g = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let mut acc = c(0.0, 0.0);
            for k in 0..n {
                acc += m[[k, i]].conj() * m[[k, j]];
            }
            g[[i, j]] = acc;
        }
    }
    let (w, _) = blas::eigh_complex(&g.view());
    w.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// A collection of interaction terms plus optional conserved charge.
#[derive(Debug, Clone)]
pub struct HamiltonianSpec {
    pub lattice: Lattice,
    pub terms: Vec<HamiltonianTerm>,
    /// Per-site charge operators q_i (same order as sites), when present.
    pub charge: Option<Vec<Array2<Complex64>>>,
    pub params: BTreeMap<String, f64>,
    pub local_dim: usize,
    pub name: String,
}

impl HamiltonianSpec {
    pub fn site_count(&self) -> usize {
        self.lattice.site_count()
    }

    pub fn dim(&self) -> usize {
        self.local_dim.pow(self.site_count() as u32)
    }

    pub fn to_dense(&self) -> Result<Array2<Complex64>> {
        let n = self.site_count();
        if n > DENSE_MAX_SITES {
            return Err(Error::Capacity(format!(
                "{n} sites exceeds the dense cap of {DENSE_MAX_SITES}"
            )));
        }
        let dim = self.dim();
        let mut h = Array2::zeros((dim, dim));
        for term in &self.terms {
            let local = term.to_local(self.local_dim)?;
            h += &embed_dense(&local, &self.lattice)?;
        }
        Ok(h)
    }

    pub fn to_sparse(&self) -> Result<CsMat<Complex64>> {
        let n = self.site_count();
        if n > SPARSE_MAX_SITES {
            return Err(Error::Capacity(format!(
                "{n} sites exceeds the sparse cap of {SPARSE_MAX_SITES}"
            )));
        }
        let dim = self.dim();
        let mut h: CsMat<Complex64> = CsMat::zero((dim, dim));
        for term in &self.terms {
            let local = term.to_local(self.local_dim)?;
            let e = embed_sparse(&local, &self.lattice)?;
            h = &h + &e;
        }
        Ok(h)
    }

    pub fn to_matrix(&self) -> Result<MatrixOperator> {
        if self.site_count() <= DENSE_MAX_SITES {
            Ok(MatrixOperator::dense(self.to_dense()?))
        } else {
            Ok(MatrixOperator::sparse(self.to_sparse()?))
        }
    }

    /// Σ_Z ‖H_Z‖ — cheap upper bound on ‖H‖ for tolerance scales.
    pub fn term_norm_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.norm()).sum()
    }

    /// Total charge Q = Σ_i q_i as a full-space operator.
    pub fn total_charge(&self) -> Result<MatrixOperator> {
        let qs = self
            .charge
            .as_ref()
            .ok_or_else(|| Error::Domain("model has no conserved charge".into()))?;
        let n = self.site_count();
        let use_dense = n <= DENSE_MAX_SITES;
        let dim = self.dim();
        if use_dense {
            let mut q = Array2::zeros((dim, dim));
            for (i, qi) in qs.iter().enumerate() {
                let local = LocalOperator::single(i, qi.clone(), format!("q{i}"));
                q += &embed_dense(&local, &self.lattice)?;
            }
            Ok(MatrixOperator::dense(q))
        } else {
            let mut q: CsMat<Complex64> = CsMat::zero((dim, dim));
            for (i, qi) in qs.iter().enumerate() {
                let local = LocalOperator::single(i, qi.clone(), format!("q{i}"));
                let e = embed_sparse(&local, &self.lattice)?;
                q = &q + &e;
            }
            Ok(MatrixOperator::sparse(q))
        }
    }

    /// Check term hermiticity and, when a charge is attached, that each q_i
    /// has integer spectrum and that [Q,H] vanishes.
    pub fn validate(&self) -> Result<()> {
        for term in &self.terms {
            let m = &term.matrix;
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    if (m[[i, j]] - m[[j, i]].conj()).norm() > 1e-12 {
                        return Err(Error::Numeric(format!(
                            "term '{}' is not Hermitian",
                            term.label
                        )));
                    }
                }
            }
            if let Some(&max) = term.support.members().last() {
                if max >= self.site_count() {
                    return Err(Error::Domain(format!(
                        "term '{}' supported outside the lattice",
                        term.label
                    )));
                }
            }
        }
        if let Some(qs) = &self.charge {
            if qs.len() != self.site_count() {
                return Err(Error::Dimension(
                    "one charge operator per site required".into(),
                ));
            }
            for (i, qi) in qs.iter().enumerate() {
                let (w, _) = blas::eigh_complex(&qi.view());
                for ev in &w {
                    if (ev - ev.round()).abs() > 1e-10 {
                        return Err(Error::Numeric(format!(
                            "charge q_{i} has non-integer eigenvalue {ev}"
                        )));
                    }
                }
            }
            let q = self.total_charge()?;
            let h = self.to_matrix()?;
            let comm = crate::operator::commutator(&q, &h)?;
            // Frobenius bounds the operator norm from above.
            let f = comm.frobenius_norm();
            if f > 1e-10 {
                let n = comm.norm();
                if n > 1e-10 {
                    return Err(Error::Numeric(format!("‖[Q,H]‖ = {n:.3e} > 1e-10")));
                }
            }
        }
        Ok(())
    }

    /// max over q_i of ‖q_i‖.
    pub fn charge_bound(&self) -> Option<f64> {
        self.charge
            .as_ref()
            .map(|qs| qs.iter().map(local_matrix_norm).fold(0.0, f64::max))
    }

    /// Stable content hash of the model (terms, params, metric) for caching.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update(self.name.as_bytes());
        hasher.update((self.site_count() as u64).to_le_bytes());
        hasher.update((self.local_dim as u64).to_le_bytes());
        for (k, v) in &self.params {
            hasher.update(k.as_bytes());
            hasher.update(v.to_le_bytes());
        }
        for term in &self.terms {
            hasher.update(term.label.as_bytes());
            for &s in term.support.members() {
                hasher.update((s as u64).to_le_bytes());
            }
            for z in term.matrix.iter() {
                hasher.update(z.re.to_le_bytes());
                hasher.update(z.im.to_le_bytes());
            }
        }
        if let Some(qs) = &self.charge {
            for q in qs {
                for z in q.iter() {
                    hasher.update(z.re.to_le_bytes());
                    hasher.update(z.im.to_le_bytes());
                }
            }
        }
        let n = self.site_count();
        for i in 0..n {
            for j in 0..n {
                hasher.update(self.lattice.dist(i, j).to_le_bytes());
            }
        }
        hex_string(&hasher.finalize())
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Decay constants (μ, s) satisfying Σ_{X∋i} ‖H_X‖|X|e^{μ diam X} ≤ s.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct DecayConstants {
    pub mu: f64,
    pub s: f64,
}

/// Compute s = max_i Σ_{X∋i} ‖H_X‖·|X|·exp(μ·diam X) exhaustively.
pub fn decay_constants(h: &HamiltonianSpec, mu: f64) -> Result<DecayConstants> {
    if mu <= 0.0 {
        return Err(Error::Domain("mu must be positive".into()));
    }
    let n = h.site_count();
    let mut s: f64 = 0.0;
    for i in 0..n {
        let mut sum = 0.0;
        for term in &h.terms {
            if term.support.contains(i) {
                let diam = set_diameter(&h.lattice, &term.support)?;
                sum += term.norm() * term.support.len() as f64 * (mu * diam).exp();
            }
        }
        s = s.max(sum);
    }
    Ok(DecayConstants { mu, s })
}

fn two_site(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
    kron(&a.view(), &b.view())
}

fn heisenberg_bond() -> Array2<Complex64> {
    let mut m = two_site(&spin::sx(), &spin::sx());
    m += &two_site(&spin::sy(), &spin::sy());
    m += &two_site(&spin::sz(), &spin::sz());
    m
}

/// Transverse-field Ising chain: −J Σ S^z_i S^z_{i+1} + B Σ S^x_i
/// (+ H_field Σ S^z_i), open or periodic.
pub fn build_tfim(n: usize, j: f64, b: f64, h_field: f64, periodic: bool) -> Result<HamiltonianSpec> {
    if n < 2 {
        return Err(Error::Domain("TFIM needs at least 2 sites".into()));
    }
    let lattice = if periodic {
        Lattice::chain_periodic(n)
    } else {
        Lattice::chain_open(n)
    };
    let mut terms = Vec::new();
    let zz = two_site(&spin::sz(), &spin::sz()).mapv(|z| z * (-j));
    let bonds = if periodic { n } else { n - 1 };
    for i in 0..bonds {
        let jn = (i + 1) % n;
        let support = SiteSet::new(vec![i, jn])?;
        terms.push(HamiltonianTerm::new(
            support,
            zz.clone(),
            format!("ising[{i},{jn}]"),
        ));
    }
    for i in 0..n {
        terms.push(HamiltonianTerm::new(
            SiteSet::single(i),
            spin::sx().mapv(|z| z * b),
            format!("field_x[{i}]"),
        ));
    }
    if h_field != 0.0 {
        for i in 0..n {
            terms.push(HamiltonianTerm::new(
                SiteSet::single(i),
                spin::sz().mapv(|z| z * h_field),
                format!("field_z[{i}]"),
            ));
        }
    }
    let mut params = BTreeMap::new();
    params.insert("J".into(), j);
    params.insert("B".into(), b);
    params.insert("H_field".into(), h_field);
    params.insert("periodic".into(), periodic as u8 as f64);
    Ok(HamiltonianSpec {
        lattice,
        terms,
        charge: None,
        params,
        local_dim: 2,
        name: "tfim".into(),
    })
}

/// Global spin-flip parity Π = ∏_i (2S^x_i) of the TFIM.
pub fn tfim_parity_operator(n: usize) -> Result<MatrixOperator> {
    let lat = Lattice::chain_open(n);
    let mut m = MatrixOperator::identity_dense(1 << n);
    for i in 0..n {
        let x = spin::sx().mapv(|z| z * 2.0);
        let e = crate::operator::embed(&LocalOperator::single(i, x, "X"), &lat)?;
        m = m.matmul(&e)?;
    }
    Ok(m)
}

/// Periodic spin-1/2 Heisenberg ring Σ S⃗_i·S⃗_{i+1} with charge q_i = S^z_i + 1/2.
pub fn build_heisenberg_ring(n: usize) -> Result<HamiltonianSpec> {
    if n % 2 != 0 || n < 4 {
        return Err(Error::Domain(
            "Heisenberg ring needs even n ≥ 4 (half filling convention)".into(),
        ));
    }
    let lattice = Lattice::chain_periodic(n);
    let bond = heisenberg_bond();
    let mut terms = Vec::new();
    for i in 0..n {
        let jn = (i + 1) % n;
        terms.push(HamiltonianTerm::new(
            SiteSet::new(vec![i, jn])?,
            bond.clone(),
            format!("heis[{i},{jn}]"),
        ));
    }
    let q = spin::sz() + Array2::<Complex64>::eye(2).mapv(|z| z * 0.5);
    let mut params = BTreeMap::new();
    params.insert("n".into(), n as f64);
    Ok(HamiltonianSpec {
        lattice,
        terms,
        charge: Some(vec![q; n]),
        params,
        local_dim: 2,
        name: "heisenberg_ring".into(),
    })
}

/// Majumdar-Ghosh ring Σ S⃗_i·S⃗_{i+1} + j2 Σ S⃗_i·S⃗_{i+2}; at j2 = 1/2 the two
/// dimer coverings are exact degenerate ground states.
pub fn build_majumdar_ghosh(n: usize, j2: f64) -> Result<HamiltonianSpec> {
    if n % 2 != 0 || n < 6 {
        return Err(Error::Domain("MG ring needs even n ≥ 6".into()));
    }
    let lattice = Lattice::chain_periodic(n);
    let bond = heisenberg_bond();
    let mut terms = Vec::new();
    for i in 0..n {
        let jn = (i + 1) % n;
        terms.push(HamiltonianTerm::new(
            SiteSet::new(vec![i, jn])?,
            bond.clone(),
            format!("j1[{i},{jn}]"),
        ));
    }
    for i in 0..n {
        let jn = (i + 2) % n;
        terms.push(HamiltonianTerm::new(
            SiteSet::new(vec![i, jn])?,
            bond.mapv(|z| z * j2),
            format!("j2[{i},{jn}]"),
        ));
    }
    let q = spin::sz() + Array2::<Complex64>::eye(2).mapv(|z| z * 0.5);
    let mut params = BTreeMap::new();
    params.insert("n".into(), n as f64);
    params.insert("j2".into(), j2);
    Ok(HamiltonianSpec {
        lattice,
        terms,
        charge: Some(vec![q; n]),
        params,
        local_dim: 2,
        name: "majumdar_ghosh".into(),
    })
}

/// The two explicit dimer product states of the MG ring at j2 = 1/2.
///
/// State A pairs (0,1)(2,3)…; state B is A translated by one site, pairing
/// (1,2)(3,4)…(n−1,0). Both are unit-normalized products of two-site singlets.
pub fn mg_dimer_states(n: usize) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if n % 2 != 0 || n < 4 {
        return Err(Error::Domain("dimer states need even n ≥ 4".into()));
    }
    let dim = 1usize << n;
    let singlet_amp = 1.0 / (2.0f64).powf(n as f64 / 4.0); // (1/√2)^(n/2)
    let build = |pairs: &[(usize, usize)]| -> Vec<Complex64> {
        let mut v = vec![c(0.0, 0.0); dim];
        for b in 0..dim {
            // bit = 0 means spin up at that site (site 0 = most significant).
            let bit = |site: usize| (b >> (n - 1 - site)) & 1;
            let mut amp = 1.0f64;
            let mut ok = true;
            for &(p, q) in pairs {
                match (bit(p), bit(q)) {
                    (0, 1) => amp *= 1.0,
                    (1, 0) => amp *= -1.0,
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                v[b] = c(amp * singlet_amp, 0.0);
            }
        }
        v
    };
    let pairs_a: Vec<(usize, usize)> = (0..n / 2).map(|k| (2 * k, 2 * k + 1)).collect();
    let pairs_b: Vec<(usize, usize)> = (0..n / 2).map(|k| ((2 * k + 1) % n, (2 * k + 2) % n)).collect();
    Ok((build(&pairs_a), build(&pairs_b)))
}

/// Gapped U(1)-conserving XXZ chain Σ [S^x S^x + S^y S^y + Δ S^z S^z], open,
/// with charge q_i = 1/2 − S^z_i (so S⁺ transforms as a charge-raising vector).
pub fn build_xxz_chain(n: usize, delta: f64) -> Result<HamiltonianSpec> {
    if n < 2 {
        return Err(Error::Domain("XXZ chain needs at least 2 sites".into()));
    }
    let lattice = Lattice::chain_open(n);
    let mut bond = two_site(&spin::sx(), &spin::sx());
    bond += &two_site(&spin::sy(), &spin::sy());
    bond += &two_site(&spin::sz(), &spin::sz()).mapv(|z| z * delta);
    let mut terms = Vec::new();
    for i in 0..n - 1 {
        terms.push(HamiltonianTerm::new(
            SiteSet::new(vec![i, i + 1])?,
            bond.clone(),
            format!("xxz[{i},{}]", i + 1),
        ));
    }
    let q = Array2::<Complex64>::eye(2).mapv(|z| z * 0.5) - spin::sz();
    let mut params = BTreeMap::new();
    params.insert("n".into(), n as f64);
    params.insert("delta".into(), delta);
    Ok(HamiltonianSpec {
        lattice,
        terms,
        charge: Some(vec![q; n]),
        params,
        local_dim: 2,
        name: "xxz_chain".into(),
    })
}

/// Edge indices of the lx×ly torus used by the toric code.
#[derive(Debug, Clone, Copy)]
pub struct TorusEdges {
    pub lx: usize,
    pub ly: usize,
}

impl TorusEdges {
    pub fn horizontal(&self, x: usize, y: usize) -> usize {
        2 * (y * self.lx + x % self.lx)
    }

    pub fn vertical(&self, x: usize, y: usize) -> usize {
        2 * ((y % self.ly) * self.lx + x % self.lx) + 1
    }

    /// The four edges of the star at vertex (x,y).
    pub fn star(&self, x: usize, y: usize) -> Vec<usize> {
        vec![
            self.horizontal(x, y),
            self.horizontal((x + self.lx - 1) % self.lx, y),
            self.vertical(x, y),
            self.vertical(x, (y + self.ly - 1) % self.ly),
        ]
    }

    /// The four edges of the plaquette north-east of vertex (x,y).
    pub fn plaquette(&self, x: usize, y: usize) -> Vec<usize> {
        vec![
            self.horizontal(x, y),
            self.horizontal(x, (y + 1) % self.ly),
            self.vertical(x, y),
            self.vertical((x + 1) % self.lx, y),
        ]
    }
}

fn pauli_product(paulis: &[(usize, Array2<Complex64>)]) -> (SiteSet, Array2<Complex64>) {
    let mut sorted: Vec<&(usize, Array2<Complex64>)> = paulis.iter().collect();
    sorted.sort_by_key(|(s, _)| *s);
    let sites: Vec<usize> = sorted.iter().map(|(s, _)| *s).collect();
    let mut m = sorted[0].1.clone();
    for p in &sorted[1..] {
        m = kron(&m.view(), &p.1.view());
    }
    (SiteSet::new(sites).unwrap(), m)
}

/// Kitaev toric code on the lx×ly torus: H = −Σ_s A_s − Σ_p B_p with unit
/// couplings; qubits on the 2·lx·ly edges.
pub fn build_toric_code(lx: usize, ly: usize) -> Result<HamiltonianSpec> {
    if lx < 2 || ly < 2 {
        return Err(Error::Domain("toric code needs lx, ly ≥ 2".into()));
    }
    let n = 2 * lx * ly;
    if n > SPARSE_MAX_SITES {
        return Err(Error::Capacity(format!(
            "toric {lx}x{ly} needs {n} qubits, above the sparse cap {SPARSE_MAX_SITES}"
        )));
    }
    let lattice = Lattice::torus_edges(lx, ly);
    let edges = TorusEdges { lx, ly };
    let x = spin::sx().mapv(|z| z * 2.0);
    let z = spin::sz().mapv(|z| z * 2.0);
    let mut terms = Vec::new();
    for yy in 0..ly {
        for xx in 0..lx {
            let star_edges = edges.star(xx, yy);
            let ops: Vec<(usize, Array2<Complex64>)> =
                star_edges.iter().map(|&e| (e, x.clone())).collect();
            let (support, m) = pauli_product(&ops);
            terms.push(HamiltonianTerm::new(
                support,
                m.mapv(|v| -v),
                format!("star[{xx},{yy}]"),
            ));
            let plaq_edges = edges.plaquette(xx, yy);
            let ops: Vec<(usize, Array2<Complex64>)> =
                plaq_edges.iter().map(|&e| (e, z.clone())).collect();
            let (support, m) = pauli_product(&ops);
            terms.push(HamiltonianTerm::new(
                support,
                m.mapv(|v| -v),
                format!("plaq[{xx},{yy}]"),
            ));
        }
    }
    let mut params = BTreeMap::new();
    params.insert("lx".into(), lx as f64);
    params.insert("ly".into(), ly as f64);
    Ok(HamiltonianSpec {
        lattice,
        terms,
        charge: None,
        params,
        local_dim: 2,
        name: "toric_code".into(),
    })
}

/// The two commuting non-contractible Z loops (Wilson pair) used to fix the
/// toric ground basis: a horizontal loop at row 0 and a vertical loop at
/// column 0.
pub fn toric_wilson_z_pair(lx: usize, ly: usize) -> (LocalOperator, LocalOperator) {
    let edges = TorusEdges { lx, ly };
    let z = spin::sz().mapv(|v| v * 2.0);
    let hor: Vec<(usize, Array2<Complex64>)> =
        (0..lx).map(|x| (edges.horizontal(x, 0), z.clone())).collect();
    let (s1, m1) = pauli_product(&hor);
    let ver: Vec<(usize, Array2<Complex64>)> =
        (0..ly).map(|y| (edges.vertical(0, y), z.clone())).collect();
    let (s2, m2) = pauli_product(&ver);
    (
        LocalOperator::new(s1, 2, m1, "wilson_z_h").unwrap(),
        LocalOperator::new(s2, 2, m2, "wilson_z_v").unwrap(),
    )
}

/// String operators for the E₁ M E₂ signature: the electric loop E (Z string
/// along row 0) split in two halves, and a magnetic loop M (product of the
/// stars in column lx/2) that crosses each half exactly once.
pub struct ToricStrings {
    pub e_full: LocalOperator,
    pub e1: LocalOperator,
    pub e2: LocalOperator,
    pub m: LocalOperator,
}

pub fn toric_string_operators(lx: usize, ly: usize) -> ToricStrings {
    let edges = TorusEdges { lx, ly };
    let z = spin::sz().mapv(|v| v * 2.0);
    let x = spin::sx().mapv(|v| v * 2.0);
    let half = lx / 2;

    let full: Vec<(usize, Array2<Complex64>)> =
        (0..lx).map(|xx| (edges.horizontal(xx, 0), z.clone())).collect();
    let (sf, mf) = pauli_product(&full);

    let e1_ops: Vec<(usize, Array2<Complex64>)> =
        (0..half).map(|xx| (edges.horizontal(xx, 0), z.clone())).collect();
    let (s1, m1) = pauli_product(&e1_ops);

    let e2_ops: Vec<(usize, Array2<Complex64>)> =
        (half..lx).map(|xx| (edges.horizontal(xx, 0), z.clone())).collect();
    let (s2, m2) = pauli_product(&e2_ops);

    // Product of stars over the column x = half: vertical edges cancel in
    // pairs, leaving X on the horizontal edges of columns half and half−1.
    let mut m_ops: Vec<(usize, Array2<Complex64>)> = Vec::new();
    for y in 0..ly {
        m_ops.push((edges.horizontal(half, y), x.clone()));
        m_ops.push((edges.horizontal((half + lx - 1) % lx, y), x.clone()));
    }
    let (sm, mm) = pauli_product(&m_ops);

    ToricStrings {
        e_full: LocalOperator::new(sf, 2, mf, "E").unwrap(),
        e1: LocalOperator::new(s1, 2, m1, "E1").unwrap(),
        e2: LocalOperator::new(s2, 2, m2, "E2").unwrap(),
        m: LocalOperator::new(sm, 2, mm, "M").unwrap(),
    }
}

/// Parse a custom model from term-list text: lines of
/// `sites… : matrix-name : coefficient`, e.g. `0 1 : Sz*Sz : -1.0`.
///
/// Factors in a `*`-joined product correspond to the sites in listed order.
pub fn parse_term_list(lattice: Lattice, text: &str) -> Result<HamiltonianSpec> {
    let mut terms = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split(':').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::Domain(format!(
                "line {}: expected 'sites : matrix : coeff'",
                lineno + 1
            )));
        }
        let sites: Vec<usize> = parts[0]
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| Error::Domain(format!("line {}: bad site index", lineno + 1)))
            })
            .collect::<Result<_>>()?;
        let names: Vec<&str> = parts[1].split('*').map(str::trim).collect();
        if names.len() != sites.len() {
            return Err(Error::Domain(format!(
                "line {}: {} sites but {} matrix factors",
                lineno + 1,
                sites.len(),
                names.len()
            )));
        }
        let coeff: f64 = parts[2]
            .parse()
            .map_err(|_| Error::Domain(format!("line {}: bad coefficient", lineno + 1)))?;
        let factors: Vec<(usize, Array2<Complex64>)> = sites
            .iter()
            .zip(names.iter())
            .map(|(&s, name)| {
                spin::by_name(name)
                    .map(|m| (s, m))
                    .ok_or_else(|| Error::Domain(format!("line {}: unknown matrix '{name}'", lineno + 1)))
            })
            .collect::<Result<_>>()?;
        let (support, m) = pauli_product(&factors);
        if support.len() != sites.len() {
            return Err(Error::Domain(format!(
                "line {}: repeated site in support",
                lineno + 1
            )));
        }
        terms.push(HamiltonianTerm::new(
            support,
            m.mapv(|z| z * coeff),
            format!("custom[line {}]", lineno + 1),
        ));
    }
    if terms.is_empty() {
        return Err(Error::Domain("term list is empty".into()));
    }
    Ok(HamiltonianSpec {
        lattice,
        terms,
        charge: None,
        params: BTreeMap::new(),
        local_dim: 2,
        name: "custom".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::commutator;

    #[test]
    fn test_tfim_term_counts() {
        let h = build_tfim(4, 1.0, 1.0, 0.0, false).unwrap();
        assert_eq!(h.terms.len(), 3 + 4);
        let h = build_tfim(4, 1.0, 1.0, 0.5, true).unwrap();
        assert_eq!(h.terms.len(), 4 + 4 + 4);
        assert!(build_tfim(1, 1.0, 1.0, 0.0, false).is_err());
    }

    #[test]
    fn test_tfim_hermitian_and_validates() {
        let h = build_tfim(6, 1.0, 0.7, 0.3, true).unwrap();
        h.validate().unwrap();
        let m = h.to_dense().unwrap();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                assert!((m[[i, j]] - m[[j, i]].conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn test_heisenberg_charge_structure() {
        let h = build_heisenberg_ring(4).unwrap();
        h.validate().unwrap();
        // q_i eigenvalues {0, 1}.
        let q = &h.charge.as_ref().unwrap()[0];
        let (w, _) = blas::eigh_complex(&q.view());
        assert!((w[0] - 0.0).abs() < 1e-12 && (w[1] - 1.0).abs() < 1e-12);
        // [Q,H] = 0 exactly.
        let qop = h.total_charge().unwrap();
        let hop = h.to_matrix().unwrap();
        assert!(commutator(&qop, &hop).unwrap().frobenius_norm() < 1e-12);
        assert!(build_heisenberg_ring(5).is_err());
    }

    #[test]
    fn test_xxz_charge_conserved() {
        let h = build_xxz_chain(6, 2.0).unwrap();
        h.validate().unwrap();
    }

    #[test]
    fn test_decay_constants_tfim_hand_formula() {
        // Bulk site: B/2 from the field + two Ising terms ‖·‖=J/4, |X|=2, e^μ.
        let h = build_tfim(8, 1.0, 1.0, 0.0, false).unwrap();
        let dc = decay_constants(&h, 1.0).unwrap();
        let expect = 0.5 + 2.0 * (2.0 * 0.25 * 1.0f64.exp());
        assert!((dc.s - expect).abs() < 1e-10, "s = {}, want {}", dc.s, expect);
    }

    #[test]
    fn test_decay_constants_single_site_only() {
        let h = build_tfim(4, 0.0, 2.0, 0.0, false).unwrap();
        // J = 0 still stores Ising terms with zero matrices; their norm is 0,
        // so only the field survives: s = max_i ‖B S^x‖ = 1.
        let dc = decay_constants(&h, 3.0).unwrap();
        assert!((dc.s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn test_decay_constants_linear_in_norms() {
        let h1 = build_tfim(6, 1.0, 1.0, 0.0, false).unwrap();
        let h2 = build_tfim(6, 2.0, 2.0, 0.0, false).unwrap();
        let s1 = decay_constants(&h1, 0.7).unwrap().s;
        let s2 = decay_constants(&h2, 0.7).unwrap().s;
        assert!((s2 - 2.0 * s1).abs() < 1e-10);
    }

    #[test]
    fn test_toric_code_structure() {
        let h = build_toric_code(2, 2).unwrap();
        assert_eq!(h.site_count(), 8);
        assert_eq!(h.terms.len(), 8);
        h.validate().unwrap();
        // Stabilizers pairwise commute.
        let mats: Vec<MatrixOperator> = h
            .terms
            .iter()
            .map(|t| {
                crate::operator::embed(&t.to_local(2).unwrap(), &h.lattice).unwrap()
            })
            .collect();
        for i in 0..mats.len() {
            for j in (i + 1)..mats.len() {
                assert!(
                    commutator(&mats[i], &mats[j]).unwrap().frobenius_norm() < 1e-12,
                    "terms {i},{j} do not commute"
                );
            }
        }
    }

    #[test]
    fn test_toric_star_product_is_identity() {
        // Every X appears twice in the product of all stars.
        let h = build_toric_code(2, 2).unwrap();
        let mut prod = MatrixOperator::identity_dense(h.dim());
        for t in h.terms.iter().filter(|t| t.label.starts_with("star")) {
            let m = crate::operator::embed(&t.to_local(2).unwrap(), &h.lattice).unwrap();
            // star term is −A_s; flip the sign back.
            prod = prod.matmul(&m.scale(c(-1.0, 0.0))).unwrap();
        }
        let eye = MatrixOperator::identity_dense(h.dim());
        assert!(prod.sub(&eye).unwrap().frobenius_norm() < 1e-10);
    }

    #[test]
    fn test_toric_capacity() {
        assert!(matches!(build_toric_code(4, 3), Err(Error::Capacity(_))));
    }

    #[test]
    fn test_mg_dimer_states_are_normalized_translates() {
        let n = 8;
        let (a, b) = mg_dimer_states(n).unwrap();
        let na: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum();
        assert!((na - 1.0).abs() < 1e-12 && (nb - 1.0).abs() < 1e-12);

        // Translation maps one dimer covering to the other (up to sign).
        let lat = Lattice::chain_periodic(n);
        let t = crate::operator::translation_operator(&lat, 2).unwrap();
        let ta = t.apply(&a);
        let overlap: Complex64 = crate::operator::vec_dot(&b, &ta);
        assert!(
            (overlap.norm() - 1.0).abs() < 1e-12,
            "‖⟨B|T|A⟩‖ = {}",
            overlap.norm()
        );
    }

    #[test]
    fn test_parse_term_list_matches_builder() {
        // The TFIM written as a term list reproduces build_tfim.
        let text = "\
0 1 : Sz*Sz : -1.0
1 2 : Sz*Sz : -1.0
0 : Sx : 1.0
1 : Sx : 1.0
2 : Sx : 1.0
";
        let lat = Lattice::chain_open(3);
        let custom = parse_term_list(lat, text).unwrap();
        let built = build_tfim(3, 1.0, 1.0, 0.0, false).unwrap();
        let d = &custom.to_dense().unwrap() - &built.to_dense().unwrap();
        assert!(d.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn test_parse_term_list_rejects_malformed() {
        let lat = Lattice::chain_open(3);
        assert!(parse_term_list(lat.clone(), "0 1 : Sz : 1.0").is_err());
        assert!(parse_term_list(lat.clone(), "0 : Qz : 1.0").is_err());
        assert!(parse_term_list(lat, "").is_err());
    }
}
