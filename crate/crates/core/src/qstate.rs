//! Dense pure and mixed n-qudit states and the primitives built on them:
//! partial trace, partial transpose, realignment, site permutations, the
//! permutation-averaged part, local unitaries, and the named state families
//! used throughout the crate.
//!
//! Basis convention: computational basis, row-major, site 1 most significant.
//! Basis index i in {1..D} corresponds to the mixed-radix digits of i - 1.

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, ONE, ZERO};
use crate::partitions::Partition;
use itertools::Itertools;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

const NORM_TOL: f64 = 1e-12;
const HERM_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = -1e-10;
const UNITARY_TOL: f64 = 1e-10;

/// Ordered local dimensions d_1..d_n of an n-qudit tensor space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteDims {
    dims: Vec<usize>,
}

impl SiteDims {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidDims("need at least one site".into()));
        }
        if let Some(&d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidDims(format!("local dimension {d} < 2")));
        }
        Ok(Self { dims })
    }

    pub fn qubits(n: usize) -> Result<Self> {
        Self::new(vec![2; n])
    }

    pub fn n(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Total dimension D = product of the local dimensions.
    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    /// Some(d) when every site has the same dimension d.
    pub fn uniform(&self) -> Option<usize> {
        let d = self.dims[0];
        self.dims.iter().all(|&x| x == d).then_some(d)
    }

    pub fn is_qubits(&self) -> bool {
        self.uniform() == Some(2)
    }

    /// Row-major strides: stride of site i is the product of the dimensions
    /// to its right.
    pub(crate) fn strides(&self) -> Vec<usize> {
        let n = self.n();
        let mut s = vec![1usize; n];
        for i in (0..n.saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.dims[i + 1];
        }
        s
    }

    /// Check and convert a 1-based site list to sorted 0-based indices.
    fn sites_to_zero_based(&self, sites: &[usize]) -> Result<Vec<usize>> {
        if sites.is_empty() {
            return Err(Error::EmptySubsystem);
        }
        let n = self.n();
        let mut out = Vec::with_capacity(sites.len());
        for &s in sites {
            if s < 1 || s > n {
                return Err(Error::SiteOutOfRange { site: s, n });
            }
            out.push(s - 1);
        }
        out.sort_unstable();
        out.dedup();
        if out.len() != sites.len() {
            return Err(Error::InvalidDims("repeated site index".into()));
        }
        Ok(out)
    }

    /// Subspace size and full-index offsets for a set of 0-based sites.
    ///
    /// `table[a]` is the contribution of subspace basis index `a` (row-major
    /// over the selected sites, original order preserved) to the full index.
    fn embed_table(&self, sites0: &[usize]) -> (usize, Vec<usize>) {
        let strides = self.strides();
        let sub_dims: Vec<usize> = sites0.iter().map(|&s| self.dims[s]).collect();
        let d_sub: usize = sub_dims.iter().product();
        let mut sub_strides = vec![1usize; sub_dims.len()];
        for i in (0..sub_dims.len().saturating_sub(1)).rev() {
            sub_strides[i] = sub_strides[i + 1] * sub_dims[i + 1];
        }
        let mut table = vec![0usize; d_sub];
        for (a, slot) in table.iter_mut().enumerate() {
            let mut off = 0;
            for (j, &s) in sites0.iter().enumerate() {
                let dig = (a / sub_strides[j]) % sub_dims[j];
                off += dig * strides[s];
            }
            *slot = off;
        }
        (d_sub, table)
    }
}

/// A normalized pure state over an n-qudit tensor space.
#[derive(Debug, Clone)]
pub struct PureState {
    dims: SiteDims,
    amplitudes: CVector,
}

impl PureState {
    pub fn new(dims: SiteDims, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != dims.total() {
            return Err(Error::InvalidDims(format!(
                "amplitude length {} does not match total dimension {}",
                amplitudes.len(),
                dims.total()
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { dims, amplitudes })
    }

    /// Build from raw complex amplitudes, normalizing them.
    pub fn from_amplitudes_normalized(dims: SiteDims, amps: Vec<Complex64>) -> Result<Self> {
        let v = CVector::from_vec(amps);
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::NotNormalized(0.0));
        }
        Self::new(dims, v / Complex64::new(norm, 0.0))
    }

    pub fn dims(&self) -> &SiteDims {
        &self.dims
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    /// Reduced density matrix over `keep` (1-based sites, order preserved).
    pub fn reduced_density(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let keep0 = self.dims.sites_to_zero_based(keep)?;
        let traced0: Vec<usize> = (0..self.dims.n()).filter(|s| !keep0.contains(s)).collect();
        let (dk, keep_table) = self.dims.embed_table(&keep0);
        let (_, trace_table) = self.dims.embed_table(&traced0);
        let mut out = CMatrix::zeros(dk, dk);
        for a in 0..dk {
            for b in 0..dk {
                let mut acc = ZERO;
                for &off in &trace_table {
                    acc += self.amplitudes[keep_table[a] + off]
                        * self.amplitudes[keep_table[b] + off].conj();
                }
                out[(a, b)] = acc;
            }
        }
        let sub_dims: Vec<usize> = keep0.iter().map(|&s| self.dims.dims()[s]).collect();
        Ok(DensityMatrix::from_trusted(SiteDims::new(sub_dims)?, out))
    }

    /// Eigenvalues of the reduced state on `block`, computed on the smaller
    /// side of the cut (the nonzero spectra of the two sides coincide for a
    /// pure state).
    pub fn block_spectrum(&self, block: &[usize]) -> Result<Vec<f64>> {
        let block0 = self.dims.sites_to_zero_based(block)?;
        let comp: Vec<usize> = (1..=self.dims.n())
            .filter(|s| !block.contains(s))
            .collect();
        let d_block: usize = block0.iter().map(|&s| self.dims.dims()[s]).product();
        let d_comp = self.dims.total() / d_block;
        let side = if d_block <= d_comp || comp.is_empty() {
            block.to_vec()
        } else {
            comp
        };
        let reduced = self.reduced_density(&side)?;
        Ok(linalg::hermitian_eigenvalues(reduced.matrix()))
    }
}

/// A density operator: Hermitian, unit trace, positive semidefinite up to
/// numerical tolerance.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    dims: SiteDims,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validating constructor; checks shape, Hermiticity, trace, and the
    /// spectrum. Violations are reported, never repaired.
    pub fn new(dims: SiteDims, matrix: CMatrix) -> Result<Self> {
        let d = dims.total();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::ShapeMismatch {
                expected: d,
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        let dm = Self { dims, matrix };
        dm.validate()?;
        Ok(dm)
    }

    /// Construction for operations whose output is valid by construction;
    /// still guards the cheap invariants in debug builds.
    pub(crate) fn from_trusted(dims: SiteDims, matrix: CMatrix) -> Self {
        debug_assert_eq!(matrix.nrows(), dims.total());
        debug_assert_eq!(matrix.ncols(), dims.total());
        Self { dims, matrix }
    }

    /// Full invariant check: Hermitian within 1e-12 elementwise, trace 1
    /// within 1e-12, minimum eigenvalue >= -1e-10.
    pub fn validate(&self) -> Result<()> {
        let defect = linalg::hermiticity_defect(&self.matrix);
        if defect > HERM_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::TraceNotOne(tr));
        }
        let min_eig = linalg::hermitian_eigenvalues(&self.matrix)
            .first()
            .copied()
            .unwrap_or(0.0);
        if min_eig < PSD_TOL {
            return Err(Error::NotPsd(min_eig));
        }
        Ok(())
    }

    pub fn dims(&self) -> &SiteDims {
        &self.dims
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    /// Tr rho^2, computed as the squared Frobenius norm.
    pub fn purity(&self) -> f64 {
        self.matrix.norm_squared()
    }

    /// Eigenvalues, ascending.
    pub fn spectrum(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.matrix)
    }

    /// Number of eigenvalues above `threshold`.
    pub fn rank(&self, threshold: f64) -> usize {
        self.spectrum().iter().filter(|&&v| v > threshold).count()
    }

    /// If the state is pure up to `tol` (largest eigenvalue within tol of 1),
    /// return the corresponding eigenvector as a pure state.
    pub fn as_pure(&self, tol: f64) -> Option<PureState> {
        let (vals, vecs) = linalg::hermitian_eigen(&self.matrix);
        let top = *vals.last()?;
        if (top - 1.0).abs() > tol {
            return None;
        }
        let v = vecs.column(vals.len() - 1).clone_owned();
        let norm = v.norm();
        PureState::new(self.dims.clone(), v / Complex64::new(norm, 0.0)).ok()
    }
}

/// One unitary per site, the i-th of side d_i.
#[derive(Debug, Clone)]
pub struct LocalUnitarySet {
    dims: SiteDims,
    unitaries: Vec<CMatrix>,
}

impl LocalUnitarySet {
    pub fn new(dims: SiteDims, unitaries: Vec<CMatrix>) -> Result<Self> {
        if unitaries.len() != dims.n() {
            return Err(Error::DimensionMismatch(format!(
                "{} unitaries for {} sites",
                unitaries.len(),
                dims.n()
            )));
        }
        for (i, u) in unitaries.iter().enumerate() {
            let d = dims.dims()[i];
            if u.nrows() != d || u.ncols() != d {
                return Err(Error::ShapeMismatch {
                    expected: d,
                    rows: u.nrows(),
                    cols: u.ncols(),
                });
            }
            let defect = (u * u.adjoint() - CMatrix::identity(d, d))
                .iter()
                .map(|z| z.norm())
                .fold(0.0f64, f64::max);
            if defect > UNITARY_TOL {
                return Err(Error::NotUnitary(defect));
            }
        }
        Ok(Self { dims, unitaries })
    }

    pub fn identity(dims: &SiteDims) -> Self {
        let unitaries = dims
            .dims()
            .iter()
            .map(|&d| CMatrix::identity(d, d))
            .collect();
        Self {
            dims: dims.clone(),
            unitaries,
        }
    }

    /// Independent Haar-random unitaries on every site.
    pub fn random<R: Rng>(dims: &SiteDims, rng: &mut R) -> Self {
        let unitaries = dims
            .dims()
            .iter()
            .map(|&d| linalg::random_unitary(d, rng))
            .collect();
        Self {
            dims: dims.clone(),
            unitaries,
        }
    }

    pub fn dims(&self) -> &SiteDims {
        &self.dims
    }

    pub fn unitaries(&self) -> &[CMatrix] {
        &self.unitaries
    }

    /// The full tensor-product operator.
    pub fn tensor(&self) -> CMatrix {
        let mut acc = CMatrix::identity(1, 1);
        for u in &self.unitaries {
            acc = acc.kronecker(u);
        }
        acc
    }
}

/// |psi><psi|.
pub fn to_density(psi: &PureState) -> DensityMatrix {
    let v = psi.amplitudes();
    let m = v * v.adjoint();
    DensityMatrix::from_trusted(psi.dims().clone(), m)
}

/// Reduced density operator over `keep` (1-based sites, original order
/// preserved).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let keep0 = rho.dims.sites_to_zero_based(keep)?;
    let traced0: Vec<usize> = (0..rho.dims.n()).filter(|s| !keep0.contains(s)).collect();
    let (dk, keep_table) = rho.dims.embed_table(&keep0);
    let (_, trace_table) = rho.dims.embed_table(&traced0);
    let mut out = CMatrix::zeros(dk, dk);
    for a in 0..dk {
        for b in 0..dk {
            let mut acc = ZERO;
            for &off in &trace_table {
                acc += rho.matrix[(keep_table[a] + off, keep_table[b] + off)];
            }
            out[(a, b)] = acc;
        }
    }
    let sub_dims: Vec<usize> = keep0.iter().map(|&s| rho.dims.dims()[s]).collect();
    Ok(DensityMatrix::from_trusted(SiteDims::new(sub_dims)?, out))
}

/// Partial transpose with respect to site `p` (1-based). The result is
/// Hermitian and trace-one but in general not positive, so it is returned
/// as a bare matrix.
pub fn partial_transpose(rho: &DensityMatrix, p: usize) -> Result<CMatrix> {
    partial_transpose_sites(rho, &[p])
}

/// Partial transpose over a set of sites jointly (single-site transposes
/// commute).
pub fn partial_transpose_sites(rho: &DensityMatrix, sites: &[usize]) -> Result<CMatrix> {
    let sites0 = rho.dims.sites_to_zero_based(sites)?;
    let strides = rho.dims.strides();
    let dims = rho.dims.dims();
    let d = rho.dims.total();
    let mut out = CMatrix::zeros(d, d);
    for x in 0..d {
        for y in 0..d {
            let mut xs = x;
            let mut ys = y;
            for &s in &sites0 {
                let dx = (x / strides[s]) % dims[s];
                let dy = (y / strides[s]) % dims[s];
                xs = xs + dy * strides[s] - dx * strides[s];
                ys = ys + dx * strides[s] - dy * strides[s];
            }
            out[(x, y)] = rho.matrix[(xs, ys)];
        }
    }
    Ok(out)
}

/// Realignment of rho across a bipartition: entries R[(i,j),(k,l)] =
/// rho[(i,k),(j,l)] in the row-major composite basis of the two blocks.
/// Returns a dA^2 x dB^2 rectangular matrix.
pub fn realign(rho: &DensityMatrix, bipart: &Partition) -> Result<CMatrix> {
    if bipart.k() != 2 {
        return Err(Error::NonBipartition(bipart.k()));
    }
    if bipart.n() != rho.dims.n() {
        return Err(Error::DimensionMismatch(format!(
            "partition over {} sites, state has {}",
            bipart.n(),
            rho.dims.n()
        )));
    }
    let a0 = rho.dims.sites_to_zero_based(&bipart.blocks()[0])?;
    let b0 = rho.dims.sites_to_zero_based(&bipart.blocks()[1])?;
    let (da, ta) = rho.dims.embed_table(&a0);
    let (db, tb) = rho.dims.embed_table(&b0);
    let mut out = CMatrix::zeros(da * da, db * db);
    for i in 0..da {
        for j in 0..da {
            for k in 0..db {
                for l in 0..db {
                    out[(i * da + j, k * db + l)] = rho.matrix[(ta[i] + tb[k], ta[j] + tb[l])];
                }
            }
        }
    }
    Ok(out)
}

/// Conjugate by the permutation operator that sends site i to site perm[i-1].
pub fn permute_sites(rho: &DensityMatrix, perm: &[usize]) -> Result<DensityMatrix> {
    let n = rho.dims.n();
    if perm.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "permutation length {} for {} sites",
            perm.len(),
            n
        )));
    }
    let mut seen = vec![false; n];
    for &t in perm {
        if t < 1 || t > n || seen[t - 1] {
            return Err(Error::InvalidDims(format!("not a permutation: {perm:?}")));
        }
        seen[t - 1] = true;
    }
    let dims = rho.dims.dims();
    for (i, &t) in perm.iter().enumerate() {
        if dims[i] != dims[t - 1] {
            return Err(Error::DimensionMismatch(format!(
                "site {} (dim {}) cannot move to site {} (dim {})",
                i + 1,
                dims[i],
                t,
                dims[t - 1]
            )));
        }
    }
    let strides = rho.dims.strides();
    let d = rho.dims.total();
    // relabel basis indices: digit at site i lands at site perm(i)
    let mut map = vec![0usize; d];
    for (x, slot) in map.iter_mut().enumerate() {
        let mut y = 0;
        for i in 0..n {
            let dig = (x / strides[i]) % dims[i];
            y += dig * strides[perm[i] - 1];
        }
        *slot = y;
    }
    let mut out = CMatrix::zeros(d, d);
    for x in 0..d {
        for y in 0..d {
            out[(map[x], map[y])] = rho.matrix[(x, y)];
        }
    }
    Ok(DensityMatrix::from_trusted(rho.dims.clone(), out))
}

/// Permutation-averaged part: the mean of rho over all n! site permutations.
/// Requires equal local dimensions and n <= 8.
pub fn pi_part(rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dims.uniform().is_none() {
        return Err(Error::UnequalDims(rho.dims.dims().to_vec()));
    }
    let n = rho.dims.n();
    if n > 8 {
        return Err(Error::InvalidDims(format!(
            "permutation average limited to n <= 8, got {n}"
        )));
    }
    let d = rho.dims.total();
    let mut acc = CMatrix::zeros(d, d);
    let mut count = 0usize;
    for perm in (1..=n).permutations(n) {
        acc += permute_sites(rho, &perm)?.matrix;
        count += 1;
    }
    acc /= Complex64::new(count as f64, 0.0);
    Ok(DensityMatrix::from_trusted(rho.dims.clone(), acc))
}

/// (U_1 x ... x U_n) rho (U_1 x ... x U_n)†.
pub fn apply_local_unitaries(rho: &DensityMatrix, u: &LocalUnitarySet) -> Result<DensityMatrix> {
    if u.dims() != rho.dims() {
        return Err(Error::DimensionMismatch(format!(
            "unitary set dims {:?} vs state dims {:?}",
            u.dims().dims(),
            rho.dims().dims()
        )));
    }
    let full = u.tensor();
    let out = &full * &rho.matrix * full.adjoint();
    Ok(DensityMatrix::from_trusted(rho.dims.clone(), out))
}

/// Apply local unitaries to a pure state.
pub fn apply_local_unitaries_pure(psi: &PureState, u: &LocalUnitarySet) -> Result<PureState> {
    if u.dims() != psi.dims() {
        return Err(Error::DimensionMismatch(format!(
            "unitary set dims {:?} vs state dims {:?}",
            u.dims().dims(),
            psi.dims().dims()
        )));
    }
    let v = u.tensor() * psi.amplitudes();
    let norm = v.norm();
    PureState::new(psi.dims().clone(), v / Complex64::new(norm, 0.0))
}

/// The named state families used by the examples and the CLI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateFamily {
    /// (|0..0> + |1..1>)/sqrt(2)
    Ghz,
    /// Equal superposition of the single-excitation basis states.
    W,
    /// t |GHZ><GHZ| + (1-t) I/2^n
    GhzNoise { t: f64 },
    /// a |W><W| + (1-a) I/2^n
    WNoise { a: f64 },
    /// a |GHZ><GHZ| + b |W><W| + (1-a-b) I/2^n
    GhzWNoise { a: f64, b: f64 },
    /// -cos(theta)/2 |010> + sqrt(3) cos(theta)/2 |100> + sin(theta) |011>
    PhiTheta { theta: f64 },
}

impl StateFamily {
    /// Parse a family tag plus positional parameters. Tags accept both
    /// hyphen and underscore spellings.
    pub fn parse(name: &str, params: &[f64]) -> Result<Self> {
        let tag = name.to_ascii_lowercase().replace('_', "-");
        let want = |count: usize| -> Result<()> {
            if params.len() != count {
                Err(Error::ParamOutOfRange(format!(
                    "family '{name}' takes {count} parameter(s), got {}",
                    params.len()
                )))
            } else {
                Ok(())
            }
        };
        match tag.as_str() {
            "ghz" => {
                want(0)?;
                Ok(Self::Ghz)
            }
            "w" => {
                want(0)?;
                Ok(Self::W)
            }
            "ghz-noise" => {
                want(1)?;
                Ok(Self::GhzNoise { t: params[0] })
            }
            "w-noise" => {
                want(1)?;
                Ok(Self::WNoise { a: params[0] })
            }
            "ghz-w-noise" => {
                want(2)?;
                Ok(Self::GhzWNoise {
                    a: params[0],
                    b: params[1],
                })
            }
            "phi-theta" => {
                want(1)?;
                Ok(Self::PhiTheta { theta: params[0] })
            }
            _ => Err(Error::UnknownFamily(name.to_string())),
        }
    }

    fn check_params(&self) -> Result<()> {
        let unit = |x: f64, name: &str| -> Result<()> {
            if !(0.0..=1.0).contains(&x) {
                Err(Error::ParamOutOfRange(format!("{name} = {x} outside [0, 1]")))
            } else {
                Ok(())
            }
        };
        match *self {
            Self::Ghz | Self::W | Self::PhiTheta { .. } => Ok(()),
            Self::GhzNoise { t } => unit(t, "t"),
            Self::WNoise { a } => unit(a, "a"),
            Self::GhzWNoise { a, b } => {
                unit(a, "a")?;
                unit(b, "b")?;
                if a + b > 1.0 + 1e-12 {
                    return Err(Error::ParamOutOfRange(format!("a + b = {} > 1", a + b)));
                }
                Ok(())
            }
        }
    }
}

fn ghz_vector(n: usize) -> CVector {
    let d = 1usize << n;
    let mut v = CVector::zeros(d);
    let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    v[0] = amp;
    v[d - 1] = amp;
    v
}

fn w_vector(n: usize) -> CVector {
    let d = 1usize << n;
    let mut v = CVector::zeros(d);
    let amp = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
    for j in 0..n {
        v[1 << j] = amp;
    }
    v
}

fn phi_theta_vector(theta: f64) -> CVector {
    let mut v = CVector::zeros(8);
    v[0b010] = Complex64::new(-0.5 * theta.cos(), 0.0);
    v[0b100] = Complex64::new(3.0f64.sqrt() / 2.0 * theta.cos(), 0.0);
    v[0b011] = Complex64::new(theta.sin(), 0.0);
    v
}

fn check_factory_n(family: &StateFamily, n: usize) -> Result<()> {
    if let StateFamily::PhiTheta { .. } = family {
        if n != 3 {
            return Err(Error::ParamOutOfRange(format!(
                "phi-theta is a 3-qubit family, got n = {n}"
            )));
        }
        return Ok(());
    }
    if !(2..=12).contains(&n) {
        return Err(Error::ParamOutOfRange(format!(
            "factory supports 2 <= n <= 12 qubits, got n = {n}"
        )));
    }
    Ok(())
}

/// Pure member of a family, for the families that have one.
pub fn pure_state_factory(family: &StateFamily, n: usize) -> Result<PureState> {
    family.check_params()?;
    check_factory_n(family, n)?;
    let dims = SiteDims::qubits(n)?;
    let v = match *family {
        StateFamily::Ghz => ghz_vector(n),
        StateFamily::W => w_vector(n),
        StateFamily::PhiTheta { theta } => phi_theta_vector(theta),
        _ => {
            return Err(Error::UnknownFamily(
                "family has no pure representative".into(),
            ))
        }
    };
    PureState::new(dims, v)
}

/// Build the named family as a density matrix.
pub fn state_factory(family: &StateFamily, n: usize) -> Result<DensityMatrix> {
    family.check_params()?;
    check_factory_n(family, n)?;
    let dims = SiteDims::qubits(n)?;
    let d = dims.total();
    let projector = |v: &CVector, weight: f64, m: &mut CMatrix| {
        if weight == 0.0 {
            return;
        }
        let w = Complex64::new(weight, 0.0);
        for (i, zi) in v.iter().enumerate() {
            if zi.norm_sqr() == 0.0 {
                continue;
            }
            for (j, zj) in v.iter().enumerate() {
                if zj.norm_sqr() == 0.0 {
                    continue;
                }
                m[(i, j)] += w * zi * zj.conj();
            }
        }
    };
    let mut m = CMatrix::zeros(d, d);
    let add_noise = |weight: f64, m: &mut CMatrix| {
        let z = Complex64::new(weight / d as f64, 0.0);
        for i in 0..d {
            m[(i, i)] += z;
        }
    };
    match *family {
        StateFamily::Ghz => projector(&ghz_vector(n), 1.0, &mut m),
        StateFamily::W => projector(&w_vector(n), 1.0, &mut m),
        StateFamily::PhiTheta { theta } => projector(&phi_theta_vector(theta), 1.0, &mut m),
        StateFamily::GhzNoise { t } => {
            projector(&ghz_vector(n), t, &mut m);
            add_noise(1.0 - t, &mut m);
        }
        StateFamily::WNoise { a } => {
            projector(&w_vector(n), a, &mut m);
            add_noise(1.0 - a, &mut m);
        }
        StateFamily::GhzWNoise { a, b } => {
            projector(&ghz_vector(n), a, &mut m);
            projector(&w_vector(n), b, &mut m);
            add_noise(1.0 - a - b, &mut m);
        }
    }
    Ok(DensityMatrix::from_trusted(dims, m))
}

/// Haar-random pure state.
pub fn random_pure_state<R: Rng>(dims: &SiteDims, rng: &mut R) -> PureState {
    let v = linalg::random_pure_vector(dims.total(), rng);
    PureState::new(dims.clone(), v).expect("normalized by construction")
}

/// Random mixed state of the given rank (Ginibre construction).
pub fn random_density_matrix<R: Rng>(dims: &SiteDims, rank: usize, rng: &mut R) -> DensityMatrix {
    let d = dims.total();
    let rank = rank.clamp(1, d);
    let g = linalg::ginibre(d, rank, rng);
    let mut m = &g * g.adjoint();
    let tr: f64 = m.diagonal().iter().map(|z| z.re).sum();
    m /= Complex64::new(tr, 0.0);
    DensityMatrix::from_trusted(dims.clone(), m)
}

/// Either kind of state, as stored in state files.
#[derive(Debug, Clone)]
pub enum State {
    Pure(PureState),
    Mixed(DensityMatrix),
}

impl State {
    pub fn dims(&self) -> &SiteDims {
        match self {
            State::Pure(p) => p.dims(),
            State::Mixed(m) => m.dims(),
        }
    }

    /// View as a density matrix (projector for pure states).
    pub fn to_density(&self) -> DensityMatrix {
        match self {
            State::Pure(p) => to_density(p),
            State::Mixed(m) => m.clone(),
        }
    }

    /// Extract a pure state: directly, or from a rank-one density matrix.
    pub fn as_pure(&self) -> Option<PureState> {
        match self {
            State::Pure(p) => Some(p.clone()),
            State::Mixed(m) => m.as_pure(1e-9),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct StateFileRepr {
    dims: Vec<usize>,
    kind: String,
    data: Vec<[f64; 2]>,
}

/// Parse the JSON state file format:
/// `{"dims":[..], "kind":"pure"|"mixed", "data":[[re,im],..]}` with row-major
/// matrix flattening for mixed states.
pub fn state_from_json(text: &str) -> Result<State> {
    let repr: StateFileRepr =
        serde_json::from_str(text).map_err(|e| Error::StateParse(e.to_string()))?;
    let dims = SiteDims::new(repr.dims)?;
    let d = dims.total();
    let data: Vec<Complex64> = repr
        .data
        .iter()
        .map(|&[re, im]| Complex64::new(re, im))
        .collect();
    match repr.kind.as_str() {
        "pure" => {
            if data.len() != d {
                return Err(Error::StateParse(format!(
                    "pure state needs {d} amplitudes, got {}",
                    data.len()
                )));
            }
            Ok(State::Pure(PureState::new(dims, CVector::from_vec(data))?))
        }
        "mixed" => {
            if data.len() != d * d {
                return Err(Error::StateParse(format!(
                    "mixed state needs {} entries, got {}",
                    d * d,
                    data.len()
                )));
            }
            let m = CMatrix::from_fn(d, d, |i, j| data[i * d + j]);
            Ok(State::Mixed(DensityMatrix::new(dims, m)?))
        }
        other => Err(Error::StateParse(format!("unknown kind '{other}'"))),
    }
}

/// Serialize a state to the JSON file format.
pub fn state_to_json(state: &State) -> String {
    let (dims, kind, data) = match state {
        State::Pure(p) => (
            p.dims().dims().to_vec(),
            "pure".to_string(),
            p.amplitudes().iter().map(|z| [z.re, z.im]).collect(),
        ),
        State::Mixed(m) => {
            let d = m.dims().total();
            let mut data = Vec::with_capacity(d * d);
            for i in 0..d {
                for j in 0..d {
                    let z = m.matrix()[(i, j)];
                    data.push([z.re, z.im]);
                }
            }
            (m.dims().dims().to_vec(), "mixed".to_string(), data)
        }
    };
    serde_json::to_string(&StateFileRepr { dims, kind, data }).expect("serializable")
}

/// Single-qubit computational basis vector.
pub fn basis_qubit(bit: usize) -> CVector {
    let mut v = CVector::zeros(2);
    v[bit] = ONE;
    v
}

/// Kronecker product of state vectors.
pub fn kron_vectors(parts: &[CVector]) -> CVector {
    let mut acc = CVector::from_vec(vec![ONE]);
    for p in parts {
        let mut next = CVector::zeros(acc.len() * p.len());
        for i in 0..acc.len() {
            for j in 0..p.len() {
                next[i * p.len() + j] = acc[i] * p[j];
            }
        }
        acc = next;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bell() -> PureState {
        let dims = SiteDims::qubits(2).unwrap();
        let mut v = CVector::zeros(4);
        v[0] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        v[3] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        PureState::new(dims, v).unwrap()
    }

    fn ghz3() -> PureState {
        pure_state_factory(&StateFamily::Ghz, 3).unwrap()
    }

    fn w3() -> PureState {
        pure_state_factory(&StateFamily::W, 3).unwrap()
    }

    #[test]
    fn to_density_basis_projector() {
        let dims = SiteDims::qubits(1).unwrap();
        let psi = PureState::new(dims, basis_qubit(0)).unwrap();
        let rho = to_density(&psi);
        assert_abs_diff_eq!(rho.matrix()[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rho.matrix()[(1, 1)].re, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn to_density_bell_corners() {
        let rho = to_density(&bell());
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert_abs_diff_eq!(rho.matrix()[(i, j)].re, 0.5, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(rho.matrix()[(1, 1)].re, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn to_density_purity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dims = SiteDims::qubits(3).unwrap();
        let psi = random_pure_state(&dims, &mut rng);
        let rho = to_density(&psi);
        assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-12);
        rho.validate().unwrap();
    }

    #[test]
    fn partial_trace_ghz_and_w() {
        let rho = to_density(&ghz3());
        let r1 = partial_trace(&rho, &[1]).unwrap();
        assert_abs_diff_eq!(r1.matrix()[(0, 0)].re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r1.matrix()[(1, 1)].re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r1.matrix()[(0, 1)].norm(), 0.0, epsilon = 1e-12);

        let rho = to_density(&w3());
        let r1 = partial_trace(&rho, &[1]).unwrap();
        assert_abs_diff_eq!(r1.matrix()[(0, 0)].re, 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r1.matrix()[(1, 1)].re, 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn partial_trace_product_factor() {
        // |0> x |+>, keep site 2 -> |+><+|
        let dims = SiteDims::qubits(2).unwrap();
        let plus = CVector::from_vec(vec![
            Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        ]);
        let psi = PureState::new(dims, kron_vectors(&[basis_qubit(0), plus])).unwrap();
        let rho = to_density(&psi);
        let r2 = partial_trace(&rho, &[2]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(r2.matrix()[(i, j)].re, 0.5, epsilon = 1e-12);
            }
        }
        assert!(matches!(
            partial_trace(&rho, &[]),
            Err(Error::EmptySubsystem)
        ));
    }

    #[test]
    fn partial_trace_full_keep_is_identity_map() {
        let rho = to_density(&ghz3());
        let same = partial_trace(&rho, &[1, 2, 3]).unwrap();
        assert!((same.matrix() - rho.matrix()).norm() < 1e-14);
    }

    #[test]
    fn partial_trace_random_product_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let a = random_pure_state(&SiteDims::qubits(2).unwrap(), &mut rng);
            let b = random_pure_state(&SiteDims::qubits(1).unwrap(), &mut rng);
            let joint = PureState::new(
                SiteDims::qubits(3).unwrap(),
                kron_vectors(&[a.amplitudes().clone(), b.amplitudes().clone()]),
            )
            .unwrap();
            let reduced = partial_trace(&to_density(&joint), &[1, 2]).unwrap();
            let expect = to_density(&a);
            assert!((reduced.matrix() - expect.matrix()).norm() < 1e-12);
        }
    }

    #[test]
    fn partial_transpose_bell_spectrum() {
        let rho = to_density(&bell());
        let pt = partial_transpose(&rho, 1).unwrap();
        let eigs = linalg::hermitian_eigenvalues(&pt);
        let expect = [-0.5, 0.5, 0.5, 0.5];
        for (e, x) in eigs.iter().zip(expect) {
            assert_abs_diff_eq!(*e, x, epsilon = 1e-12);
        }
    }

    #[test]
    fn partial_transpose_ghz3_min_eig() {
        let rho = to_density(&ghz3());
        let pt = partial_transpose(&rho, 1).unwrap();
        let eigs = linalg::hermitian_eigenvalues(&pt);
        assert_abs_diff_eq!(eigs[0], -0.5, epsilon = 1e-12);
    }

    #[test]
    fn partial_transpose_product_stays_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random_density_matrix(&SiteDims::qubits(1).unwrap(), 2, &mut rng);
        let b = random_density_matrix(&SiteDims::qubits(1).unwrap(), 2, &mut rng);
        let m = a.matrix().kronecker(b.matrix());
        let rho = DensityMatrix::new(SiteDims::qubits(2).unwrap(), m).unwrap();
        let pt = partial_transpose(&rho, 1).unwrap();
        assert!(linalg::hermitian_eigenvalues(&pt)[0] > -1e-12);
    }

    #[test]
    fn partial_transpose_involutive_trace_preserving() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for trial in 0..200 {
            let n = 2 + trial % 2;
            let dims = SiteDims::qubits(n).unwrap();
            let rho = random_density_matrix(&dims, 1 + trial % 4, &mut rng);
            let p = 1 + trial % n;
            let pt = partial_transpose(&rho, p).unwrap();
            let tr: f64 = pt.diagonal().iter().map(|z| z.re).sum();
            assert_abs_diff_eq!(tr, 1.0, epsilon = 1e-12);
            let back = partial_transpose(
                &DensityMatrix::from_trusted(dims.clone(), pt.clone()),
                p,
            )
            .unwrap();
            assert!((back - rho.matrix()).norm() < 1e-13);
            assert!(linalg::hermiticity_defect(&pt) < 1e-12);
        }
        let rho = to_density(&bell());
        assert!(partial_transpose(&rho, 3).is_err());
    }

    #[test]
    fn realign_reference_values() {
        // maximally mixed two-qubit state
        let dims = SiteDims::qubits(2).unwrap();
        let id = CMatrix::identity(4, 4) * Complex64::new(0.25, 0.0);
        let rho = DensityMatrix::new(dims.clone(), id).unwrap();
        let cut: Partition = "1|2".parse().unwrap();
        let r = realign(&rho, &cut).unwrap();
        assert_abs_diff_eq!(linalg::trace_norm_rect(&r), 0.5, epsilon = 1e-10);

        let rho = to_density(&bell());
        let r = realign(&rho, &cut).unwrap();
        assert_abs_diff_eq!(linalg::trace_norm_rect(&r), 2.0, epsilon = 1e-10);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_pure_state(&SiteDims::qubits(1).unwrap(), &mut rng);
        let b = random_pure_state(&SiteDims::qubits(1).unwrap(), &mut rng);
        let prod = PureState::new(
            dims,
            kron_vectors(&[a.amplitudes().clone(), b.amplitudes().clone()]),
        )
        .unwrap();
        let r = realign(&to_density(&prod), &cut).unwrap();
        assert_abs_diff_eq!(linalg::trace_norm_rect(&r), 1.0, epsilon = 1e-10);

        let tri: Partition = "1|2|3".parse().unwrap();
        assert!(realign(&to_density(&ghz3()), &tri).is_err());
    }

    #[test]
    fn permute_sites_behaviour() {
        let rho = to_density(&ghz3());
        let same = permute_sites(&rho, &[1, 2, 3]).unwrap();
        assert!((same.matrix() - rho.matrix()).norm() < 1e-15);

        // |01><01| under swap -> |10><10|
        let dims = SiteDims::qubits(2).unwrap();
        let psi = PureState::new(dims, kron_vectors(&[basis_qubit(0), basis_qubit(1)])).unwrap();
        let swapped = permute_sites(&to_density(&psi), &[2, 1]).unwrap();
        assert_abs_diff_eq!(swapped.matrix()[(2, 2)].re, 1.0, epsilon = 1e-15);

        let w = to_density(&w3());
        for perm in (1..=3).permutations(3) {
            let moved = permute_sites(&w, &perm).unwrap();
            assert!((moved.matrix() - w.matrix()).norm() < 1e-13, "perm {perm:?}");
        }

        let mixed_dims = SiteDims::new(vec![2, 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let rho23 = random_density_matrix(&mixed_dims, 2, &mut rng);
        assert!(permute_sites(&rho23, &[2, 1]).is_err());
    }

    #[test]
    fn pi_part_examples() {
        let ghz = to_density(&ghz3());
        let avg = pi_part(&ghz).unwrap();
        assert!((avg.matrix() - ghz.matrix()).norm() < 1e-13);

        let dims = SiteDims::qubits(2).unwrap();
        let psi01 = PureState::new(
            dims.clone(),
            kron_vectors(&[basis_qubit(0), basis_qubit(1)]),
        )
        .unwrap();
        let avg = pi_part(&to_density(&psi01)).unwrap();
        assert_abs_diff_eq!(avg.matrix()[(1, 1)].re, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(avg.matrix()[(2, 2)].re, 0.5, epsilon = 1e-14);

        let bad = SiteDims::new(vec![2, 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = random_density_matrix(&bad, 2, &mut rng);
        assert!(pi_part(&rho).is_err());
    }

    #[test]
    fn pi_part_idempotent_and_commutes() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let dims = SiteDims::qubits(3).unwrap();
        let rho = random_density_matrix(&dims, 5, &mut rng);
        let avg = pi_part(&rho).unwrap();
        let twice = pi_part(&avg).unwrap();
        assert!((twice.matrix() - avg.matrix()).norm() < 1e-12);
        for perm in (1..=3).permutations(3) {
            let moved = permute_sites(&avg, &perm).unwrap();
            // commutator via conjugation: Pi rho Pi† == rho
            assert!(
                (moved.matrix() - avg.matrix()).norm() < 1e-10,
                "perm {perm:?}"
            );
        }
        avg.validate().unwrap();
    }

    #[test]
    fn local_unitaries_examples() {
        let ghz = to_density(&ghz3());
        let dims = ghz.dims().clone();
        let id = LocalUnitarySet::identity(&dims);
        let same = apply_local_unitaries(&ghz, &id).unwrap();
        assert!((same.matrix() - ghz.matrix()).norm() < 1e-14);

        // X on site 1 of |0><0| x sigma
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let sigma = random_density_matrix(&SiteDims::qubits(1).unwrap(), 2, &mut rng);
        let rho = DensityMatrix::new(
            SiteDims::qubits(2).unwrap(),
            to_density(
                &PureState::new(SiteDims::qubits(1).unwrap(), basis_qubit(0)).unwrap(),
            )
            .matrix()
            .kronecker(sigma.matrix()),
        )
        .unwrap();
        let x = CMatrix::from_fn(2, 2, |i, j| if i != j { ONE } else { ZERO });
        let u = LocalUnitarySet::new(
            SiteDims::qubits(2).unwrap(),
            vec![x, CMatrix::identity(2, 2)],
        )
        .unwrap();
        let flipped = apply_local_unitaries(&rho, &u).unwrap();
        let expect = to_density(
            &PureState::new(SiteDims::qubits(1).unwrap(), basis_qubit(1)).unwrap(),
        )
        .matrix()
        .kronecker(sigma.matrix());
        assert!((flipped.matrix() - expect).norm() < 1e-13);

        let haar = LocalUnitarySet::random(&dims, &mut rng);
        let rotated = apply_local_unitaries(&ghz, &haar).unwrap();
        assert_abs_diff_eq!(rotated.purity(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn local_unitaries_preserve_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let dims = SiteDims::qubits(3).unwrap();
        for _ in 0..10 {
            let rho = random_density_matrix(&dims, 4, &mut rng);
            let u = LocalUnitarySet::random(&dims, &mut rng);
            let rotated = apply_local_unitaries(&rho, &u).unwrap();
            let a = rho.spectrum();
            let b = rotated.spectrum();
            let dist: f64 = a
                .iter()
                .zip(&b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(dist < 1e-10, "spectrum moved by {dist}");
        }
    }

    #[test]
    fn factory_families() {
        let ghz = state_factory(&StateFamily::GhzNoise { t: 1.0 }, 3).unwrap();
        let pure = to_density(&ghz3());
        assert!((ghz.matrix() - pure.matrix()).norm() < 1e-14);

        let noise = state_factory(&StateFamily::GhzNoise { t: 0.0 }, 3).unwrap();
        let expect = CMatrix::identity(8, 8) * Complex64::new(0.125, 0.0);
        assert!((noise.matrix() - expect).norm() < 1e-14);

        let prod = state_factory(
            &StateFamily::PhiTheta {
                theta: std::f64::consts::FRAC_PI_2,
            },
            3,
        )
        .unwrap();
        assert_abs_diff_eq!(prod.matrix()[(0b011, 0b011)].re, 1.0, epsilon = 1e-12);
        prod.validate().unwrap();

        assert!(StateFamily::parse("ghz-noise", &[1.5]).is_ok());
        assert!(state_factory(&StateFamily::GhzNoise { t: 1.5 }, 3).is_err());
        assert!(StateFamily::parse("squeezed", &[]).is_err());
        assert!(state_factory(&StateFamily::GhzWNoise { a: 0.7, b: 0.6 }, 3).is_err());

        let w = state_factory(&StateFamily::WNoise { a: 0.5 }, 4).unwrap();
        w.validate().unwrap();
    }

    #[test]
    fn factory_matches_parse() {
        let f = StateFamily::parse("ghz_w_noise", &[0.3, 0.2]).unwrap();
        assert_eq!(f, StateFamily::GhzWNoise { a: 0.3, b: 0.2 });
        let f = StateFamily::parse("GHZ", &[]).unwrap();
        assert_eq!(f, StateFamily::Ghz);
    }

    #[test]
    fn state_json_round_trip() {
        let psi = ghz3();
        let text = state_to_json(&State::Pure(psi.clone()));
        let back = state_from_json(&text).unwrap();
        match back {
            State::Pure(p) => {
                assert!((p.amplitudes() - psi.amplitudes()).norm() < 1e-15)
            }
            _ => panic!("kind changed"),
        }

        let rho = state_factory(&StateFamily::GhzNoise { t: 0.4 }, 2).unwrap();
        let text = state_to_json(&State::Mixed(rho.clone()));
        let back = state_from_json(&text).unwrap();
        match back {
            State::Mixed(m) => assert!((m.matrix() - rho.matrix()).norm() < 1e-15),
            _ => panic!("kind changed"),
        }

        assert!(state_from_json("{\"bad\":1}").is_err());
        // non-normalized pure data must be rejected
        let bad = r#"{"dims":[2],"kind":"pure","data":[[1.0,0.0],[1.0,0.0]]}"#;
        assert!(state_from_json(bad).is_err());
    }

    #[test]
    fn reduced_density_matches_partial_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let dims = SiteDims::new(vec![2, 3, 2]).unwrap();
        let psi = random_pure_state(&dims, &mut rng);
        let rho = to_density(&psi);
        for keep in [vec![1], vec![2], vec![1, 3], vec![2, 3]] {
            let a = psi.reduced_density(&keep).unwrap();
            let b = partial_trace(&rho, &keep).unwrap();
            assert!((a.matrix() - b.matrix()).norm() < 1e-12, "keep {keep:?}");
        }
    }

    #[test]
    fn block_spectrum_uses_small_side_consistently() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let dims = SiteDims::qubits(4).unwrap();
        let psi = random_pure_state(&dims, &mut rng);
        let big = psi.reduced_density(&[1, 2, 3]).unwrap();
        let direct = linalg::hermitian_eigenvalues(big.matrix());
        let via_small = psi.block_spectrum(&[1, 2, 3]).unwrap();
        // nonzero parts must agree
        let direct_nz: Vec<f64> = direct.iter().copied().filter(|v| *v > 1e-10).collect();
        let small_nz: Vec<f64> = via_small.iter().copied().filter(|v| *v > 1e-10).collect();
        assert_eq!(direct_nz.len(), small_nz.len());
        for (a, b) in direct_nz.iter().zip(&small_nz) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-10);
        }
    }
}
