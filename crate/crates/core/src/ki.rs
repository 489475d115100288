//! Koashi-Imoto decomposition of a bipartite state `ρ^{AR}`.
//!
//! The decomposition is found from the operator algebra generated by the
//! conditional states of `A`. Writing `ρ̄ = Tr_R ρ` and
//! `ρ_M = Tr_R[(I ⊗ M)ρ]` for operators `M` on `R`, the ratios
//! `ρ̄^{-1/2} ρ_M ρ̄^{-1/2}` on the support of `ρ̄` are split into their
//! spectral components under conjugation by `ρ̄^{it}` and generate a
//! *-algebra `𝒜 = ⊕_c I_{N_c} ⊗ B(Q_c)`. Its commutant is
//! `𝒜' = ⊕_c B(N_c) ⊗ I_{Q_c}`, and random elements of the center and of
//! the commutant expose the `C`, `N` and `Q` structure.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::entropics::{matrix_entropy, shannon_entropy};
use crate::error::{Error, Result};
use crate::tensor::{
    eigh, left_apply, polar_unitary, CMatrix, DensityOperator, LinearOperator, SystemLabel, SystemLayout, C64, ZERO,
};

/// Tuning for [`ki_decompose`].
#[derive(Clone, Debug, PartialEq)]
pub struct KiConfig {
    /// Eigenvalue splittings below this are treated as degeneracies.
    pub tolerance: f64,
    /// Eigenvalues of `ρ^A` at or below this are outside the support.
    pub support_cutoff: f64,
    /// Seed for the random algebra elements.
    pub seed: u64,
    /// Attempts before giving up when independent draws disagree.
    pub max_attempts: usize,
}

impl Default for KiConfig {
    fn default() -> Self {
        KiConfig {
            tolerance: 1e-7,
            support_cutoff: 1e-10,
            seed: 0,
            max_attempts: 5,
        }
    }
}

/// One block `c`: `p_c`, `ω_c` on `N_c` and `ρ_c` on `Q_c ⊗ R`.
#[derive(Clone, Debug, PartialEq)]
pub struct KiBlock {
    pub probability: f64,
    pub dim_n: usize,
    pub dim_q: usize,
    /// State on the single factor `N`.
    pub omega: DensityOperator,
    /// State on `Q` followed by the `R` factors.
    pub rho: DensityOperator,
}

impl KiBlock {
    pub fn signature(&self) -> (f64, usize, usize) {
        (self.probability, self.dim_n, self.dim_q)
    }
}

/// Diagnostics of a decomposition run.
#[derive(Clone, Debug, PartialEq)]
pub struct KiDiagnostics {
    /// Draw attempts used (1 when the first two draws agreed).
    pub attempts: usize,
    /// Dimension of the commutant `𝒜'`.
    pub commutant_dim: usize,
    /// Dimension of the algebra `𝒜`.
    pub algebra_dim: usize,
    /// Eigenvalue clusters that merged values differing by more than
    /// round-off but less than the tolerance.
    pub near_degenerate_merges: usize,
}

/// Block data plus the unitary `U_KI: A → (⊕_c N_c ⊗ Q_c) ⊕ Null`.
#[derive(Clone, Debug, PartialEq)]
pub struct KIDecomposition {
    pub blocks: Vec<KiBlock>,
    /// Unitary on `A`; output factor `CNQ` with the blocks stacked in order
    /// and the kernel of `ρ^A` last. Within block `c` the index is
    /// `n·Q_c + q`.
    pub u_ki: LinearOperator,
    /// Dimension of the kernel of `ρ^A`.
    pub null_dim: usize,
    /// The `A` factors, in the order of the input layout.
    pub a_layout: SystemLayout,
    /// The `R` factors, in the order of the input layout.
    pub r_layout: SystemLayout,
    /// Layout of the decomposed state.
    pub layout: SystemLayout,
    pub diagnostics: KiDiagnostics,
}

/// `S(C)`, `S(CQ)` and `S(CNQ)` of `ω^{CNQR}`, in bits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KiEntropies {
    pub s_c: f64,
    pub s_cq: f64,
    pub s_cnq: f64,
}

type Structure = Vec<BlockBasis>;

/// Orthonormal basis of one block on the support, columns ordered `(n, q)`.
#[derive(Clone, Debug)]
struct BlockBasis {
    dim_n: usize,
    dim_q: usize,
    basis: CMatrix,
}

/// Row-major vectorization.
fn vec_r(m: &CMatrix) -> Vec<C64> {
    let (r, c) = m.shape();
    (0..r).flat_map(|i| (0..c).map(move |j| m[(i, j)])).collect()
}

fn unvec_r(v: &[C64], n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| v[i * n + j])
}

/// Orthonormal basis (as matrices) of the linear span of `gens`. Directions
/// weaker than `tol` relative to the largest generator are dropped, so
/// round-off residue does not enter the span.
fn span_basis(gens: &[CMatrix], n: usize, tol: f64) -> Result<Vec<CMatrix>> {
    let nn = n * n;
    let scale = gens.iter().map(crate::tensor::frobenius).fold(0.0f64, f64::max);
    if scale == 0.0 {
        return Ok(Vec::new());
    }
    let mut gram = CMatrix::zeros(nn, nn);
    for g in gens {
        let v: Vec<C64> = vec_r(g).into_iter().map(|z| z / scale).collect();
        for a in 0..nn {
            if v[a] == ZERO {
                continue;
            }
            for b in 0..nn {
                gram[(a, b)] += v[a] * v[b].conj();
            }
        }
    }
    let eig = eigh(&gram)?;
    Ok((0..nn)
        .filter(|&k| eig.values[k] > tol * tol)
        .map(|k| {
            let col: Vec<C64> = eig.vectors.column(k).iter().copied().collect();
            unvec_r(&col, n)
        })
        .collect())
}

/// Basis of `{X : [X, g] = 0 for all g}`.
fn commutant(gens: &[CMatrix], n: usize, tol: f64) -> Result<Vec<CMatrix>> {
    let basis = span_basis(gens, n, tol)?;
    let nn = n * n;
    let mut h = CMatrix::zeros(nn, nn);
    let id = CMatrix::identity(n, n);
    for g in &basis {
        // vec_r(Xg − gX) = (I ⊗ gᵀ − g ⊗ I) vec_r(X)
        let l = id.kronecker(&g.transpose()) - g.kronecker(&id);
        h += l.adjoint() * &l;
    }
    let eig = eigh(&h)?;
    let scale = eig.values.first().copied().unwrap_or(0.0).max(1.0);
    Ok((0..nn)
        .filter(|&k| eig.values[k] <= tol * tol * scale)
        .map(|k| {
            let col: Vec<C64> = eig.vectors.column(k).iter().copied().collect();
            unvec_r(&col, n)
        })
        .collect())
}

/// Groups sorted-descending values into clusters separated by more than
/// `tol`. Returns index ranges and the number of merges above round-off.
fn cluster(values: &[f64], tol: f64) -> (Vec<std::ops::Range<usize>>, usize) {
    let mut ranges = Vec::new();
    let mut merges = 0;
    let mut start = 0;
    for k in 1..=values.len() {
        if k == values.len() || (values[k - 1] - values[k]).abs() > tol {
            if k > start && (values[start] - values[k - 1]).abs() > 1e-12 {
                merges += 1;
            }
            ranges.push(start..k);
            start = k;
        }
    }
    (ranges, merges)
}

fn random_hermitian_in(basis: &[CMatrix], n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let mut x = CMatrix::zeros(n, n);
    for b in basis {
        let c = C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng));
        x += b * c;
    }
    (&x + x.adjoint()).scale(0.5)
}

fn random_element_in(basis: &[CMatrix], n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let mut x = CMatrix::zeros(n, n);
    for b in basis {
        let c = C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng));
        x += b * c;
    }
    x
}

/// Spectral decomposition of a random Hermitian element, grouped into
/// eigenspaces; values are rescaled so the tolerance is relative.
fn eigenspaces(x: &CMatrix, tol: f64, merges: &mut usize) -> Result<Vec<CMatrix>> {
    let eig = eigh(x)?;
    let scale = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let normed: Vec<f64> = eig.values.iter().map(|v| v / scale).collect();
    let (ranges, m) = cluster(&normed, tol.sqrt());
    *merges += m;
    Ok(ranges
        .into_iter()
        .map(|r| eig.vectors.columns(r.start, r.len()).into_owned())
        .collect())
}

/// One random draw of the block structure on the support.
fn draw_structure(
    commutant_basis: &[CMatrix],
    center_basis: &[CMatrix],
    r: usize,
    tol: f64,
    rng: &mut ChaCha8Rng,
    merges: &mut usize,
) -> Result<Structure> {
    let z = random_hermitian_in(center_basis, r, rng);
    let mut blocks = Vec::new();
    for p in eigenspaces(&z, tol, merges)? {
        let m = p.ncols();
        let restricted: Vec<CMatrix> = commutant_basis.iter().map(|x| p.adjoint() * x * &p).collect();
        let y = random_hermitian_in(&restricted, m, rng);
        let spaces = eigenspaces(&y, tol, merges)?;
        let dim_n = spaces.len();
        let dim_q = spaces[0].ncols();
        if spaces.iter().any(|s| s.ncols() != dim_q) {
            return Err(Error::Decomposition(
                "commutant eigenspaces of unequal dimension".into(),
            ));
        }
        // Align the Q bases of the eigenspaces through a generic commutant
        // element, which maps eigenspace 0 onto each other eigenspace as a
        // multiple of a unitary.
        let t = random_element_in(&restricted, m, rng);
        let mut basis = CMatrix::zeros(r, m);
        for (idx, s) in spaces.iter().enumerate() {
            let link = s.adjoint() * &t * &spaces[0];
            let aligned = s * polar_unitary(&link);
            let global = &p * aligned;
            for q in 0..dim_q {
                basis.set_column(idx * dim_q + q, &global.column(q));
            }
        }
        blocks.push(BlockBasis { dim_n, dim_q, basis });
    }
    Ok(blocks)
}

fn signature_of(structure: &Structure) -> Vec<(usize, usize)> {
    let mut s: Vec<(usize, usize)> = structure.iter().map(|b| (b.dim_n, b.dim_q)).collect();
    s.sort_unstable();
    s
}

/// Decomposes `state` with `A = a_labels` and `R` the remaining factors.
///
/// ```
/// use qrs_core::ki::{ki_decompose, ki_entropies, KiConfig};
/// use qrs_core::Ket;
/// let bell = Ket::maximally_entangled("A", "R", 2).unwrap().to_density();
/// let dec = ki_decompose(&bell, &["A"], &KiConfig::default()).unwrap();
/// assert_eq!(dec.blocks.len(), 1);
/// assert_eq!((dec.blocks[0].dim_n, dec.blocks[0].dim_q), (1, 2));
/// let s = ki_entropies(&dec).unwrap();
/// assert!((s.s_cq - 1.0).abs() < 1e-9 && s.s_c.abs() < 1e-9);
/// ```
pub fn ki_decompose<L: AsRef<str>>(
    state: &DensityOperator,
    a_labels: &[L],
    config: &KiConfig,
) -> Result<KIDecomposition> {
    let layout = state.layout().clone();
    let a_pos = {
        let mut p = layout.positions(a_labels)?;
        p.sort_unstable();
        p
    };
    if a_pos.is_empty() {
        return Err(Error::Decomposition("empty A system".into()));
    }
    let r_pos = layout.complement_positions(&a_pos);
    let a_layout = layout.pick(&a_pos);
    let r_layout = layout.pick(&r_pos);
    let order: Vec<SystemLabel> = a_layout.labels().chain(r_layout.labels()).cloned().collect();
    let staged = state.permute(&order)?;
    let (da, dr) = (a_layout.total_dim(), r_layout.total_dim());
    let rho = staged.matrix();
    let tol = config.tolerance;

    // ρ^A, its support W and spectrum Λ
    let mut rho_a = CMatrix::zeros(da, da);
    for a in 0..da {
        for b in 0..da {
            for x in 0..dr {
                rho_a[(a, b)] += rho[(a * dr + x, b * dr + x)];
            }
        }
    }
    let eig_a = eigh(&rho_a)?;
    let rank = eig_a.values.iter().filter(|&&v| v > config.support_cutoff).count();
    if rank == 0 {
        return Err(Error::Decomposition("zero state".into()));
    }
    let lambda: Vec<f64> = eig_a.values[..rank].to_vec();
    let w = eig_a.vectors.columns(0, rank).into_owned();
    let w_perp = eig_a.vectors.columns(rank, da - rank).into_owned();

    // ratio operators for the blocks ρ[(·, x), (·, y)]
    let inv_sqrt: Vec<f64> = lambda.iter().map(|l| 1.0 / l.sqrt()).collect();
    let mut ratios = Vec::with_capacity(dr * dr);
    for x in 0..dr {
        for y in 0..dr {
            let block = CMatrix::from_fn(da, da, |a, b| rho[(a * dr + x, b * dr + y)]);
            let mut t = w.adjoint() * block * &w;
            for i in 0..rank {
                for j in 0..rank {
                    t[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
                }
            }
            ratios.push(t);
        }
    }

    // spectral components under the modular group: classes of ln λ_i − ln λ_j
    let logs: Vec<f64> = lambda.iter().map(|l| l.ln()).collect();
    let mut diffs: Vec<(f64, usize, usize)> = Vec::with_capacity(rank * rank);
    for i in 0..rank {
        for j in 0..rank {
            diffs.push((logs[i] - logs[j], i, j));
        }
    }
    diffs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let diff_values: Vec<f64> = diffs.iter().map(|d| d.0).collect();
    let mut merges = 0;
    let (classes, m) = cluster(&diff_values, tol);
    merges += m;
    let mut generators = Vec::with_capacity(ratios.len() * classes.len());
    for class in &classes {
        for t in &ratios {
            let mut g = CMatrix::zeros(rank, rank);
            for &(_, i, j) in &diffs[class.clone()] {
                g[(i, j)] = t[(i, j)];
            }
            generators.push(g);
        }
    }

    let commutant_basis = commutant(&generators, rank, tol)?;
    let mut with_commutant = generators.clone();
    with_commutant.extend(commutant_basis.iter().cloned());
    let center_basis = commutant(&with_commutant, rank, tol)?;
    let algebra_dim = commutant(&commutant_basis, rank, tol)?.len();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut chosen = None;
    let mut attempts = 0;
    for _ in 0..config.max_attempts.max(1) {
        attempts += 1;
        let mut m1 = 0;
        let first = draw_structure(&commutant_basis, &center_basis, rank, tol, &mut rng, &mut m1);
        let mut m2 = 0;
        let second = draw_structure(&commutant_basis, &center_basis, rank, tol, &mut rng, &mut m2);
        let (first, second) = match (first, second) {
            (Ok(a), Ok(b)) => (a, b),
            _ => continue,
        };
        let sig = signature_of(&first);
        let sum_n2: usize = sig.iter().map(|(n, _)| n * n).sum();
        let sum_q2: usize = sig.iter().map(|(_, q)| q * q).sum();
        let sum_nq: usize = sig.iter().map(|(n, q)| n * q).sum();
        if sig == signature_of(&second) && sum_n2 == commutant_basis.len() && sum_q2 == algebra_dim && sum_nq == rank {
            merges += m1;
            chosen = Some(first);
            break;
        }
    }
    let structure = chosen
        .ok_or_else(|| Error::Decomposition(format!("block structure not certified after {attempts} attempts")))?;

    assemble(
        staged,
        structure,
        &w,
        &w_perp,
        a_layout,
        r_layout,
        layout,
        KiDiagnostics {
            attempts,
            commutant_dim: commutant_basis.len(),
            algebra_dim,
            near_degenerate_merges: merges,
        },
    )
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    staged: DensityOperator,
    structure: Structure,
    w: &CMatrix,
    w_perp: &CMatrix,
    a_layout: SystemLayout,
    r_layout: SystemLayout,
    layout: SystemLayout,
    diagnostics: KiDiagnostics,
) -> Result<KIDecomposition> {
    let (da, dr) = (a_layout.total_dim(), r_layout.total_dim());
    let rho = staged.matrix();

    // block data in the support basis, then sorted
    let mut raw = Vec::new();
    for b in structure {
        let basis_a = w * &b.basis; // da × (N·Q)
        let m = basis_a.ncols();
        // (B† ⊗ I) ρ (B ⊗ I)
        let bt = basis_a.adjoint();
        let half = left_apply(&bt, rho, dr);
        let local = left_apply(&bt, &half.adjoint(), dr).adjoint();
        debug_assert_eq!(local.nrows(), m * dr);
        let p = local.trace().re;
        raw.push((p, b.dim_n, b.dim_q, basis_a, local));
    }
    raw.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    let mut columns = CMatrix::zeros(da, da);
    let mut col = 0;
    let mut blocks = Vec::new();
    for (p, dim_n, dim_q, basis_a, local) in raw {
        for k in 0..basis_a.ncols() {
            columns.set_column(col, &basis_a.column(k));
            col += 1;
        }
        // local is over (n, q, x); reduce to N and to Q ⊗ R
        let mut omega = CMatrix::zeros(dim_n, dim_n);
        let qr = dim_q * dr;
        let mut rho_c = CMatrix::zeros(qr, qr);
        for n1 in 0..dim_n {
            for n2 in 0..dim_n {
                for s in 0..qr {
                    omega[(n1, n2)] += local[(n1 * qr + s, n2 * qr + s)];
                }
            }
        }
        for n in 0..dim_n {
            for s in 0..qr {
                for t in 0..qr {
                    rho_c[(s, t)] += local[(n * qr + s, n * qr + t)];
                }
            }
        }
        let n_layout = SystemLayout::single("N", dim_n)?;
        let qr_layout = SystemLayout::single("Q", dim_q)?.concat(&r_layout)?;
        blocks.push(KiBlock {
            probability: p,
            dim_n,
            dim_q,
            omega: DensityOperator::from_unnormalized(n_layout, omega)?,
            rho: DensityOperator::from_unnormalized(qr_layout, rho_c)?,
        });
    }
    for k in 0..w_perp.ncols() {
        columns.set_column(col, &w_perp.column(k));
        col += 1;
    }
    debug_assert_eq!(col, da);
    let u_ki = LinearOperator::new(a_layout.clone(), SystemLayout::single("CNQ", da)?, columns.adjoint())?;
    Ok(KIDecomposition {
        blocks,
        u_ki,
        null_dim: w_perp.ncols(),
        a_layout,
        r_layout,
        layout,
        diagnostics,
    })
}

/// `ρ^{AR} = (U_KI† ⊗ I)(Σ_c p_c |c⟩⟨c| ⊗ ω_c ⊗ ρ_c)(U_KI ⊗ I)`, returned
/// in the layout of the decomposed state.
pub fn ki_reconstruct(dec: &KIDecomposition) -> Result<DensityOperator> {
    let da = dec.a_layout.total_dim();
    let dr = dec.r_layout.total_dim();
    let mut omega = CMatrix::zeros(da * dr, da * dr);
    let mut offset = 0;
    for b in &dec.blocks {
        let local = b.omega.matrix().kronecker(b.rho.matrix()) * C64::new(b.probability, 0.0);
        let m = b.dim_n * b.dim_q * dr;
        omega.view_mut((offset * dr, offset * dr), (m, m)).copy_from(&local);
        offset += b.dim_n * b.dim_q;
    }
    let u_dag = dec.u_ki.matrix().adjoint();
    let half = left_apply(&u_dag, &omega, dr);
    let full = left_apply(&u_dag, &half.adjoint(), dr).adjoint();
    let staged_layout = dec.a_layout.concat(&dec.r_layout)?;
    let staged = DensityOperator::from_unnormalized(staged_layout, full)?;
    let order: Vec<SystemLabel> = dec.layout.labels().cloned().collect();
    staged.permute(&order)
}

/// Entropies of the decomposition: `S(C) = H(p)`,
/// `S(CQ) = H(p) + Σ_c p_c S(Tr_R ρ_c)` and
/// `S(CNQ) = S(CQ) + Σ_c p_c S(ω_c)`.
pub fn ki_entropies(dec: &KIDecomposition) -> Result<KiEntropies> {
    let p: Vec<f64> = dec.blocks.iter().map(|b| b.probability).collect();
    let s_c = shannon_entropy(&p);
    let mut s_q = 0.0;
    let mut s_n = 0.0;
    for b in &dec.blocks {
        s_q += b.probability * crate::entropics::von_neumann_entropy(&b.rho, &["Q"])?;
        s_n += b.probability * matrix_entropy(b.omega.matrix())?;
    }
    Ok(KiEntropies {
        s_c,
        s_cq: s_c + s_q,
        s_cnq: s_c + s_q + s_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Ket;

    #[test]
    fn correlated_bit_is_classical() {
        let layout = SystemLayout::new([("A", 2), ("R", 2)]).unwrap();
        let rho = DensityOperator::diagonal(layout, &[0.5, 0.0, 0.0, 0.5]).unwrap();
        let dec = ki_decompose(&rho, &["A"], &KiConfig::default()).unwrap();
        assert_eq!(dec.blocks.len(), 2);
        for b in &dec.blocks {
            assert_eq!((b.dim_n, b.dim_q), (1, 1));
            assert!((b.probability - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn product_state_is_all_redundant() {
        let a = DensityOperator::diagonal(SystemLayout::single("A", 2).unwrap(), &[0.7, 0.3]).unwrap();
        let r = DensityOperator::diagonal(SystemLayout::single("R", 2).unwrap(), &[0.4, 0.6]).unwrap();
        let dec = ki_decompose(&a.tensor(&r).unwrap(), &["A"], &KiConfig::default()).unwrap();
        assert_eq!(dec.blocks.len(), 1);
        assert_eq!((dec.blocks[0].dim_n, dec.blocks[0].dim_q), (2, 1));
    }

    #[test]
    fn nonorthogonal_pure_ensemble_is_one_quantum_block() {
        // ½(|0⟩⟨0| ⊗ |0⟩⟨0| + |+⟩⟨+| ⊗ |1⟩⟨1|): the ratio operators alone
        // commute here, so this case needs the modular components.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let c = |x: f64| C64::new(x, 0.0);
        let k0 = Ket::new(
            SystemLayout::new([("A", 2), ("R", 2)]).unwrap(),
            crate::tensor::CVector::from_vec(vec![c(1.0), c(0.0), c(0.0), c(0.0)]),
        )
        .unwrap();
        let k1 = Ket::new(
            SystemLayout::new([("A", 2), ("R", 2)]).unwrap(),
            crate::tensor::CVector::from_vec(vec![c(0.0), c(s), c(0.0), c(s)]),
        )
        .unwrap();
        let m = (k0.to_density().matrix() + k1.to_density().matrix()).scale(0.5);
        let rho = DensityOperator::new(k0.layout().clone(), m).unwrap();
        let dec = ki_decompose(&rho, &["A"], &KiConfig::default()).unwrap();
        assert_eq!(dec.blocks.len(), 1);
        assert_eq!((dec.blocks[0].dim_n, dec.blocks[0].dim_q), (1, 2));
    }
}
