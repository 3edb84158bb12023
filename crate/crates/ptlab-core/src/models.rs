//! Hamiltonian, perturbation, state and observable builders.
//!
//! Everything here is deterministic given its inputs; the Wigner sampler is
//! deterministic given (seed, stream). Outputs are plain owned matrices and
//! safe to share across threads.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{CoreError, Result};
use crate::linalg;
use crate::spectra::Eigensystem;

pub const HERMITICITY_TOL: f64 = 1e-12;
const MATRIX_MAGIC: &[u8; 8] = b"PTLB0001";

/// Dense Hermitian matrix with a recorded operator-norm bound (max row sum,
/// an upper bound on the spectral norm).
#[derive(Debug, Clone)]
pub struct HermitianMatrix {
    data: Array2<C64>,
    norm_bound: f64,
    diagonal: Option<Array1<f64>>,
}

impl HermitianMatrix {
    /// Validates Hermiticity to 1e-12 absolute and records the norm bound.
    pub fn new(data: Array2<C64>) -> Result<Self> {
        if data.nrows() != data.ncols() || data.nrows() == 0 {
            return Err(CoreError::DimensionMismatch {
                context: "Hermitian matrix must be square and nonempty".into(),
            });
        }
        let defect = linalg::hermiticity_defect(&data);
        if defect > HERMITICITY_TOL {
            return Err(CoreError::NotHermitian {
                defect,
                tol: HERMITICITY_TOL,
            });
        }
        let norm_bound = data
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0f64, f64::max);
        let diagonal = detect_diagonal(&data);
        Ok(Self {
            data,
            norm_bound,
            diagonal,
        })
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn data(&self) -> &Array2<C64> {
        &self.data
    }

    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    /// Real diagonal if the matrix has no off-diagonal entries; lets the
    /// dynamics and overlap code skip dense products.
    pub fn as_diagonal(&self) -> Option<&Array1<f64>> {
        self.diagonal.as_ref()
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        match &self.diagonal {
            Some(d) => d
                .iter()
                .zip(x.iter())
                .map(|(di, xi)| xi * *di)
                .collect(),
            None => linalg::mat_vec(&self.data, x),
        }
    }

    pub fn trace(&self) -> C64 {
        self.data.diag().iter().sum()
    }

    /// Binary export: 8-byte magic "PTLB0001", rows and cols as little-endian
    /// u64, then column-major complex doubles (re, im) little-endian.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(MATRIX_MAGIC)?;
        let n = self.dim() as u64;
        f.write_all(&n.to_le_bytes())?;
        f.write_all(&n.to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.dim() * self.dim() * 16);
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                let z = self.data[[i, j]];
                buf.extend_from_slice(&z.re.to_le_bytes());
                buf.extend_from_slice(&z.im.to_le_bytes());
            }
        }
        f.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut f = std::fs::File::open(path)?;
        let mut magic = [0u8; 8];
        f.read_exact(&mut magic)?;
        if &magic != MATRIX_MAGIC {
            return Err(CoreError::BadMatrixFile(format!(
                "bad magic {:?} in {}",
                magic,
                path.display()
            )));
        }
        let mut dims = [0u8; 16];
        f.read_exact(&mut dims)?;
        let rows = u64::from_le_bytes(dims[..8].try_into().unwrap()) as usize;
        let cols = u64::from_le_bytes(dims[8..].try_into().unwrap()) as usize;
        if rows != cols || rows == 0 || rows > 1 << 16 {
            return Err(CoreError::BadMatrixFile(format!(
                "unsupported dimensions {rows}x{cols}"
            )));
        }
        let mut buf = vec![0u8; rows * cols * 16];
        f.read_exact(&mut buf)?;
        let mut data = Array2::<C64>::zeros((rows, cols));
        let mut off = 0;
        for j in 0..cols {
            for i in 0..rows {
                let re = f64::from_le_bytes(buf[off..off + 8].try_into().unwrap());
                let im = f64::from_le_bytes(buf[off + 8..off + 16].try_into().unwrap());
                data[[i, j]] = C64::new(re, im);
                off += 16;
            }
        }
        Self::new(data)
    }
}

fn detect_diagonal(data: &Array2<C64>) -> Option<Array1<f64>> {
    let n = data.nrows();
    for i in 0..n {
        for j in 0..n {
            if i != j && data[[i, j]] != C64::new(0.0, 0.0) {
                return None;
            }
        }
    }
    Some(data.diag().mapv(|z| z.re))
}

/// Which physical model produced a Hamiltonian; gates model-specific
/// observables and states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Periodic chain with next-nearest-neighbor hopping; `sites` = matrix dim.
    NnnLattice { sites: usize },
    /// Spinless fermions on a ring of `sites` sites, full 2^sites Fock space.
    FreeFermion { sites: usize },
    Custom,
}

#[derive(Debug, Clone, Copy)]
pub struct ModelInfo {
    pub kind: ModelKind,
    pub dim: usize,
}

/// Periodic chain Hamiltonian (H psi)(x) = 2 psi(x) - psi(x-2) - psi(x+2),
/// indices mod N. Conserves the even/odd sublattice parity, so every level
/// carries an extra degeneracy.
pub fn build_nnn_hamiltonian(n: usize) -> Result<(HermitianMatrix, ModelInfo)> {
    if n < 4 || n % 2 != 0 {
        return Err(CoreError::InvalidParameter(format!(
            "NNN chain needs even N >= 4, got {n}"
        )));
    }
    let mut h = Array2::<C64>::zeros((n, n));
    for x in 0..n {
        h[[x, x]] += C64::new(2.0, 0.0);
        // accumulate: for N=4 both hops land on the same entry
        h[[x, (x + n - 2) % n]] += C64::new(-1.0, 0.0);
        h[[x, (x + 2) % n]] += C64::new(-1.0, 0.0);
    }
    Ok((
        HermitianMatrix::new(h)?,
        ModelInfo {
            kind: ModelKind::NnnLattice { sites: n },
            dim: n,
        },
    ))
}

/// Limiting density of states of the NNN chain on [0, 4].
pub fn nnn_dos(x: f64) -> f64 {
    if x <= 0.0 || x >= 4.0 {
        0.0
    } else {
        1.0 / (std::f64::consts::PI * (x * (4.0 - x)).sqrt())
    }
}

/// Second-quantized nearest-neighbor hopping for spinless fermions on a ring
/// of `l` sites, assembled directly in the 2^l occupation basis with the
/// usual fermionic sign strings. Prefactor 1/sqrt(l). Conserves particle
/// number.
pub fn build_free_fermion_hamiltonian(l: usize) -> Result<(HermitianMatrix, ModelInfo)> {
    if l % 2 != 0 || !(4..=12).contains(&l) {
        return Err(CoreError::InvalidParameter(format!(
            "free-fermion chain needs even 4 <= L <= 12, got {l}"
        )));
    }
    let dim = 1usize << l;
    let scale = 1.0 / (l as f64).sqrt();
    let mut h = Array2::<C64>::zeros((dim, dim));
    let sign_below = |state: usize, site: usize| -> f64 {
        let mask = (1usize << site) - 1;
        if (state & mask).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    };
    for state in 0..dim {
        for a in 0..l {
            let b = (a + 1) % l;
            // c^dag_a c_b |state>
            if state & (1 << b) != 0 && state & (1 << a) == 0 {
                let s1 = sign_below(state, b);
                let mid = state & !(1 << b);
                let s2 = sign_below(mid, a);
                let out = mid | (1 << a);
                h[[out, state]] += C64::new(scale * s1 * s2, 0.0);
            }
            // c^dag_b c_a |state>
            if state & (1 << a) != 0 && state & (1 << b) == 0 {
                let s1 = sign_below(state, a);
                let mid = state & !(1 << a);
                let s2 = sign_below(mid, b);
                let out = mid | (1 << b);
                h[[out, state]] += C64::new(scale * s1 * s2, 0.0);
            }
        }
    }
    Ok((
        HermitianMatrix::new(h)?,
        ModelInfo {
            kind: ModelKind::FreeFermion { sites: l },
            dim,
        },
    ))
}

/// Particle-number operator on the Fock space of `l` sites.
pub fn fock_number_operator(l: usize) -> HermitianMatrix {
    let dim = 1usize << l;
    let mut h = Array2::<C64>::zeros((dim, dim));
    for state in 0..dim {
        h[[state, state]] = C64::new(state.count_ones() as f64, 0.0);
    }
    HermitianMatrix::new(h).expect("diagonal matrix is Hermitian")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SymmetryClass {
    ComplexHermitian,
    RealSymmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum EntryLaw {
    Gaussian,
    Rademacher,
    Uniform,
}

/// Specification of a Wigner perturbation: off-diagonal variance 1/N,
/// diagonal variance 1/N, all laws centered with finite moments.
#[derive(Debug, Clone, Copy)]
pub struct WignerSpec {
    pub dim: usize,
    pub symmetry_class: SymmetryClass,
    pub entry_law: EntryLaw,
    pub seed: u64,
}

/// Counter-based stream derivation: one master seed keys the cipher, the
/// realization index selects an independent stream. Order-independent and
/// reproducible.
pub fn realization_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw_unit_variance(rng: &mut ChaCha12Rng, law: EntryLaw) -> f64 {
    match law {
        EntryLaw::Gaussian => rng.sample(StandardNormal),
        EntryLaw::Rademacher => {
            if rng.gen::<bool>() {
                1.0
            } else {
                -1.0
            }
        }
        EntryLaw::Uniform => (rng.gen::<f64>() * 2.0 - 1.0) * 3.0f64.sqrt(),
    }
}

/// Samples W from stream 0 of the spec's seed.
pub fn sample_wigner(spec: &WignerSpec) -> HermitianMatrix {
    sample_wigner_stream(spec, 0)
}

/// Samples the `stream`-th independent realization of the spec.
pub fn sample_wigner_stream(spec: &WignerSpec, stream: u64) -> HermitianMatrix {
    let n = spec.dim;
    let mut rng = realization_rng(spec.seed, stream);
    let scale = 1.0 / (n as f64).sqrt();
    let mut w = Array2::<C64>::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let z = match spec.symmetry_class {
                SymmetryClass::ComplexHermitian => {
                    // E chi^2 = 0, E |chi|^2 = 1
                    let re = draw_unit_variance(&mut rng, spec.entry_law);
                    let im = draw_unit_variance(&mut rng, spec.entry_law);
                    C64::new(re, im) / 2.0f64.sqrt()
                }
                SymmetryClass::RealSymmetric => {
                    C64::new(draw_unit_variance(&mut rng, spec.entry_law), 0.0)
                }
            };
            w[[i, j]] = z * scale;
            w[[j, i]] = z.conj() * scale;
        }
    }
    for i in 0..n {
        w[[i, i]] = C64::new(draw_unit_variance(&mut rng, spec.entry_law) * scale, 0.0);
    }
    HermitianMatrix::new(w).expect("sampler output is Hermitian by construction")
}

/// H_lambda = H0 + lambda W.
pub fn assemble_deformed(
    h0: &HermitianMatrix,
    lambda: f64,
    w: &HermitianMatrix,
) -> Result<HermitianMatrix> {
    if h0.dim() != w.dim() {
        return Err(CoreError::DimensionMismatch {
            context: format!("H0 dim {} vs W dim {}", h0.dim(), w.dim()),
        });
    }
    if lambda < 0.0 {
        return Err(CoreError::InvalidParameter(
            "coupling lambda must be nonnegative".into(),
        ));
    }
    let data = h0.data() + &w.data().mapv(|z| z * lambda);
    HermitianMatrix::new(data)
}

/// Energy window around a reference energy, with the admissibility constants
/// carried along.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct EnergyWindow {
    pub e0: f64,
    pub delta: f64,
    pub kappa0: f64,
    pub c0: f64,
}

impl EnergyWindow {
    pub fn new(e0: f64, delta: f64, kappa0: f64, c0: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < kappa0 / 6.0) {
            return Err(CoreError::InvalidParameter(format!(
                "need 0 < delta < kappa0/6, got delta={delta}, kappa0={kappa0}"
            )));
        }
        if c0 <= 0.0 {
            return Err(CoreError::InvalidParameter("c0 must be positive".into()));
        }
        Ok(Self {
            e0,
            delta,
            kappa0,
            c0,
        })
    }

    pub fn lo(&self) -> f64 {
        self.e0 - self.delta
    }

    pub fn hi(&self) -> f64 {
        self.e0 + self.delta
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo() && x <= self.hi()
    }
}

/// Density matrix of rank r, stored as weights and orthonormal vectors, all
/// supported on eigenvectors inside an energy window.
#[derive(Debug, Clone)]
pub struct QuantumState {
    weights: Vec<f64>,
    vectors: Array2<C64>,
    window: EnergyWindow,
}

impl QuantumState {
    pub fn new(weights: Vec<f64>, vectors: Array2<C64>, window: EnergyWindow) -> Result<Self> {
        let r = weights.len();
        if vectors.ncols() != r || r == 0 {
            return Err(CoreError::DimensionMismatch {
                context: "state needs one vector per weight".into(),
            });
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| *w < -1e-12) || (total - 1.0).abs() > 1e-12 {
            return Err(CoreError::InvalidParameter(format!(
                "state weights must be nonnegative and sum to 1 (sum = {total})"
            )));
        }
        for i in 0..r {
            for j in i..r {
                let mut dot = C64::new(0.0, 0.0);
                for row in 0..vectors.nrows() {
                    dot += vectors[[row, i]].conj() * vectors[[row, j]];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                if (dot - C64::new(target, 0.0)).norm() > 1e-10 {
                    return Err(CoreError::InvalidParameter(format!(
                        "state vectors not orthonormal: <v{i}, v{j}> = {dot}"
                    )));
                }
            }
        }
        Ok(Self {
            weights,
            vectors,
            window,
        })
    }

    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn vectors(&self) -> &Array2<C64> {
        &self.vectors
    }

    pub fn window(&self) -> &EnergyWindow {
        &self.window
    }

    /// Dense density matrix; intended for small dimensions and tests.
    pub fn density_matrix(&self) -> Array2<C64> {
        linalg::weighted_outer(&self.vectors, &self.weights)
    }

    /// Tr[P A].
    pub fn expectation(&self, a: &HermitianMatrix) -> Result<f64> {
        if a.dim() != self.dim() {
            return Err(CoreError::DimensionMismatch {
                context: "expectation: observable dim != state dim".into(),
            });
        }
        let mut total = C64::new(0.0, 0.0);
        for (i, w) in self.weights.iter().enumerate() {
            let v: Vec<C64> = self.vectors.column(i).to_vec();
            let av = a.apply(&v);
            let mut dot = C64::new(0.0, 0.0);
            for (x, y) in v.iter().zip(av.iter()) {
                dot += x.conj() * y;
            }
            total += dot * *w;
        }
        Ok(total.re)
    }

    /// Frobenius distance between P and its compression into the window's
    /// spectral subspace; zero for states built from in-window eigenvectors.
    pub fn localization_defect(&self, eig: &Eigensystem) -> f64 {
        let mut defect = 0.0f64;
        for (i, w) in self.weights.iter().enumerate() {
            let v: Vec<C64> = self.vectors.column(i).to_vec();
            let coeffs = linalg::mat_vec_adjoint(eig.eigenvectors(), &v);
            let mut out_of_window = 0.0f64;
            for (j, c) in coeffs.iter().enumerate() {
                if !self.window.contains(eig.eigenvalues()[j]) {
                    out_of_window += c.norm_sqr();
                }
            }
            defect += w * out_of_window;
        }
        defect.sqrt()
    }
}

/// Spectral projector onto the eigenvalues inside the window.
pub fn spectral_projector(eig: &Eigensystem, window: &EnergyWindow) -> Result<HermitianMatrix> {
    let idx = in_window_indices(eig, window);
    if idx.is_empty() {
        return Err(CoreError::EmptyWindow {
            lo: window.lo(),
            hi: window.hi(),
        });
    }
    let n = eig.dim();
    let mut cols = Array2::<C64>::zeros((n, idx.len()));
    for (c, &j) in idx.iter().enumerate() {
        cols.column_mut(c).assign(&eig.eigenvectors().column(j));
    }
    let weights = vec![1.0; idx.len()];
    HermitianMatrix::new(linalg::weighted_outer(&cols, &weights))
}

pub fn in_window_indices(eig: &Eigensystem, window: &EnergyWindow) -> Vec<usize> {
    eig.eigenvalues()
        .iter()
        .enumerate()
        .filter(|(_, mu)| window.contains(**mu))
        .map(|(j, _)| j)
        .collect()
}

/// How to populate the window with probability weight.
#[derive(Debug, Clone, Copy)]
pub enum StateKind {
    /// Rank-1 projector onto the eigenvector with this (global) index.
    Eigenprojector(usize),
    /// Equal weights over every in-window eigenvector.
    UniformMixture,
    /// Gaussian weights exp(-(mu - E0)^2 / (2 width^2)) over the window.
    GaussianWeighted(f64),
}

pub fn build_localized_state(
    eig: &Eigensystem,
    window: &EnergyWindow,
    kind: StateKind,
) -> Result<QuantumState> {
    let idx = in_window_indices(eig, window);
    if idx.is_empty() {
        return Err(CoreError::EmptyWindow {
            lo: window.lo(),
            hi: window.hi(),
        });
    }
    let n = eig.dim();
    match kind {
        StateKind::Eigenprojector(k) => {
            if !idx.contains(&k) {
                return Err(CoreError::IndexOutsideWindow { index: k });
            }
            let mut v = Array2::<C64>::zeros((n, 1));
            v.column_mut(0).assign(&eig.eigenvectors().column(k));
            QuantumState::new(vec![1.0], v, *window)
        }
        StateKind::UniformMixture => {
            let m = idx.len();
            let mut v = Array2::<C64>::zeros((n, m));
            for (c, &j) in idx.iter().enumerate() {
                v.column_mut(c).assign(&eig.eigenvectors().column(j));
            }
            QuantumState::new(vec![1.0 / m as f64; m], v, *window)
        }
        StateKind::GaussianWeighted(width) => {
            if width <= 0.0 {
                return Err(CoreError::InvalidParameter(
                    "gaussian state width must be positive".into(),
                ));
            }
            let m = idx.len();
            let mut v = Array2::<C64>::zeros((n, m));
            let mut w = Vec::with_capacity(m);
            for (c, &j) in idx.iter().enumerate() {
                v.column_mut(c).assign(&eig.eigenvectors().column(j));
                let u = (eig.eigenvalues()[j] - window.e0) / width;
                w.push((-0.5 * u * u).exp());
            }
            let total: f64 = w.iter().sum();
            for wi in &mut w {
                *wi /= total;
            }
            QuantumState::new(w, v, *window)
        }
    }
}

/// Rank-1 projector onto the even-sublattice eigenvector of the degenerate
/// cluster nearest the reference energy. The parity sectors of the NNN chain
/// share every eigenvalue, so the raw solver basis mixes them; we pick the
/// cluster combination with maximal even-sector weight, zero the odd
/// components and renormalize.
pub fn even_sector_eigenprojector(
    eig: &Eigensystem,
    window: &EnergyWindow,
) -> Result<QuantumState> {
    let idx = in_window_indices(eig, window);
    if idx.is_empty() {
        return Err(CoreError::EmptyWindow {
            lo: window.lo(),
            hi: window.hi(),
        });
    }
    let n = eig.dim();
    let k = *idx
        .iter()
        .min_by(|a, b| {
            let da = (eig.eigenvalues()[**a] - window.e0).abs();
            let db = (eig.eigenvalues()[**b] - window.e0).abs();
            da.partial_cmp(&db).unwrap()
        })
        .unwrap();
    let mu_k = eig.eigenvalues()[k];
    let cluster: Vec<usize> = (0..n)
        .filter(|&j| (eig.eigenvalues()[j] - mu_k).abs() <= 1e-8)
        .collect();
    // Gram matrix of even-site restrictions of the cluster vectors.
    let m = cluster.len();
    let mut gram = Array2::<C64>::zeros((m, m));
    for (a, &ja) in cluster.iter().enumerate() {
        for (b, &jb) in cluster.iter().enumerate() {
            let mut dot = C64::new(0.0, 0.0);
            for row in (0..n).step_by(2) {
                dot += eig.eigenvectors()[[row, ja]].conj() * eig.eigenvectors()[[row, jb]];
            }
            gram[[a, b]] = dot;
        }
    }
    let (gvals, gvecs) = linalg::eigh(&gram)?;
    let top = gvals.len() - 1;
    if gvals[top] < 1e-6 {
        return Err(CoreError::Other(
            "no even-sector weight in the degenerate cluster".into(),
        ));
    }
    let mut v = vec![C64::new(0.0, 0.0); n];
    for (a, &ja) in cluster.iter().enumerate() {
        let c = gvecs[[a, top]];
        for row in 0..n {
            v[row] += c * eig.eigenvectors()[[row, ja]];
        }
    }
    // project onto the even sublattice and renormalize
    for (row, entry) in v.iter_mut().enumerate() {
        if row % 2 == 1 {
            *entry = C64::new(0.0, 0.0);
        }
    }
    let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm < 1e-8 {
        return Err(CoreError::Other(
            "even-sector projection annihilated the candidate vector".into(),
        ));
    }
    let mut cols = Array2::<C64>::zeros((n, 1));
    for row in 0..n {
        cols[[row, 0]] = v[row] / norm;
    }
    QuantumState::new(vec![1.0], cols, *window)
}

/// Observable constructions.
pub enum ObservableKind<'a> {
    /// Projector onto the odd sublattice sites of a lattice model.
    OddSublattice,
    /// f(H0) for a real function of energy.
    EnergyFunction(&'a dyn Fn(f64) -> f64),
    /// Normalized random Hermitian matrix, reproducible from the seed.
    RandomHermitian(u64),
    /// Identity on the complement of the n-particle sector of a Fock space.
    SectorComplement(usize),
}

pub fn build_observable(
    kind: ObservableKind<'_>,
    model: &ModelInfo,
    eig: &Eigensystem,
) -> Result<HermitianMatrix> {
    match kind {
        ObservableKind::OddSublattice => {
            let sites = match model.kind {
                ModelKind::NnnLattice { sites } => sites,
                _ => {
                    return Err(CoreError::ObservableModelMismatch(
                        "odd-sublattice projector needs a lattice model".into(),
                    ))
                }
            };
            let mut a = Array2::<C64>::zeros((sites, sites));
            for x in (1..sites).step_by(2) {
                a[[x, x]] = C64::new(1.0, 0.0);
            }
            HermitianMatrix::new(a)
        }
        ObservableKind::EnergyFunction(f) => {
            let n = eig.dim();
            let mut scaled = eig.eigenvectors().clone();
            for j in 0..n {
                let fj = f(eig.eigenvalues()[j]);
                scaled.column_mut(j).mapv_inplace(|z| z * fj);
            }
            // A = U diag(f) U^dagger
            let udag = eig.eigenvectors().t().mapv(|z| z.conj());
            let mut a = linalg::mat_mul(&scaled, &udag.to_owned());
            // symmetrize away the last-bit rounding so the constructor check passes
            let at = a.t().mapv(|z| z.conj());
            a = (&a + &at).mapv(|z| z * 0.5);
            HermitianMatrix::new(a)
        }
        ObservableKind::RandomHermitian(seed) => {
            let spec = WignerSpec {
                dim: model.dim,
                symmetry_class: SymmetryClass::ComplexHermitian,
                entry_law: EntryLaw::Gaussian,
                seed,
            };
            let w = sample_wigner(&spec);
            // ||W|| <= 2 + o(1) w.h.p.; scaling by 2.2 keeps the bound O(1)
            let a = w.data().mapv(|z| z / 2.2);
            HermitianMatrix::new(a)
        }
        ObservableKind::SectorComplement(n_particles) => {
            let sites = match model.kind {
                ModelKind::FreeFermion { sites } => sites,
                _ => {
                    return Err(CoreError::ObservableModelMismatch(
                        "sector-complement needs a Fock-space model".into(),
                    ))
                }
            };
            let dim = 1usize << sites;
            let mut a = Array2::<C64>::zeros((dim, dim));
            for state in 0..dim {
                if state.count_ones() as usize != n_particles {
                    a[[state, state]] = C64::new(1.0, 0.0);
                }
            }
            HermitianMatrix::new(a)
        }
    }
}
