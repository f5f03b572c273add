//! The parameterized entanglement measures: bipartite q- and alpha-
//! concurrence, their block-averaged minima over k-partitions for pure
//! states, the genuine-multipartite (k = 2) specializations, a stochastic
//! upper estimator for the convex-roof extension to mixed states, and the
//! permutation-average lower-bound search.

use crate::bounds::{BoundInputs, BoundReport};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::partitions::{bipartitions, k_partitions, Partition};
use crate::qstate::{
    apply_local_unitaries, pi_part, DensityMatrix, LocalUnitarySet, PureState,
};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Eigenvalues below this are treated as zero when counting ranks.
pub const RANK_TOL: f64 = 1e-10;

/// Which one-parameter family a measure belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// 1 - Tr rho^q per block, q >= 2.
    Q,
    /// Tr rho^alpha - 1 per block, 0 <= alpha <= 1/2.
    Alpha,
}

/// A measure selection: family, parameter value, and block count k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureSpec {
    family: Family,
    param: f64,
    k: usize,
}

impl MeasureSpec {
    pub fn q(q: f64, k: usize) -> Result<Self> {
        if q < 2.0 || !q.is_finite() {
            return Err(Error::ParamOutOfRange(format!("q = {q}, need q >= 2")));
        }
        if k < 2 {
            return Err(Error::KOutOfRange { k, n: usize::MAX });
        }
        Ok(Self {
            family: Family::Q,
            param: q,
            k,
        })
    }

    pub fn alpha(alpha: f64, k: usize) -> Result<Self> {
        if !(0.0..=0.5).contains(&alpha) {
            return Err(Error::ParamOutOfRange(format!(
                "alpha = {alpha}, need 0 <= alpha <= 1/2"
            )));
        }
        if k < 2 {
            return Err(Error::KOutOfRange { k, n: usize::MAX });
        }
        Ok(Self {
            family: Family::Alpha,
            param: alpha,
            k,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn param(&self) -> f64 {
        self.param
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn name(&self) -> &'static str {
        match self.family {
            Family::Q => "q-k-ME",
            Family::Alpha => "alpha-k-ME",
        }
    }
}

/// Sum of eigenvalues raised to the power p; the rank for p = 0.
///
/// Eigenvalues at or below the rank threshold count as exact zeros for every
/// power, not just p = 0: fractional powers would otherwise amplify the
/// ~1e-17 residue of analytically-zero eigenvalues into visible values
/// (sqrt of 1e-17 is 3e-9), while for p >= 2 the difference is below 1e-20.
fn spectrum_power(spectrum: &[f64], p: f64) -> f64 {
    if p == 0.0 {
        return spectrum.iter().filter(|&&v| v > RANK_TOL).count() as f64;
    }
    spectrum
        .iter()
        .filter(|&&v| v > RANK_TOL)
        .map(|&v| v.powf(p))
        .sum()
}

/// Tr rho^p over the clamped spectrum; p = 0 returns the rank (eigenvalue
/// count above 1e-10).
pub fn trace_power(rho: &DensityMatrix, p: f64) -> Result<f64> {
    if p < 0.0 {
        return Err(Error::ParamOutOfRange(format!("power p = {p} < 0")));
    }
    Ok(spectrum_power(&rho.spectrum(), p))
}

fn family_term(spectrum: &[f64], family: Family, param: f64) -> f64 {
    match family {
        Family::Q => 1.0 - spectrum_power(spectrum, param),
        Family::Alpha => spectrum_power(spectrum, param) - 1.0,
    }
}

fn check_bipartition(psi: &PureState, bipart: &Partition) -> Result<()> {
    if bipart.k() != 2 {
        return Err(Error::NonBipartition(bipart.k()));
    }
    if bipart.n() != psi.dims().n() {
        return Err(Error::DimensionMismatch(format!(
            "partition over {} sites, state has {}",
            bipart.n(),
            psi.dims().n()
        )));
    }
    Ok(())
}

/// Bipartite q-concurrence of a pure state across a cut: 1 - Tr rho_A^q.
/// Symmetric in the two blocks.
pub fn q_concurrence(psi: &PureState, bipart: &Partition, q: f64) -> Result<f64> {
    if q < 2.0 {
        return Err(Error::ParamOutOfRange(format!("q = {q}, need q >= 2")));
    }
    check_bipartition(psi, bipart)?;
    let spectrum = psi.block_spectrum(&bipart.blocks()[0])?;
    Ok(family_term(&spectrum, Family::Q, q))
}

/// Bipartite alpha-concurrence of a pure state: Tr rho_A^alpha - 1.
pub fn alpha_concurrence(psi: &PureState, bipart: &Partition, alpha: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&alpha) {
        return Err(Error::ParamOutOfRange(format!(
            "alpha = {alpha}, need 0 <= alpha <= 1/2"
        )));
    }
    check_bipartition(psi, bipart)?;
    let spectrum = psi.block_spectrum(&bipart.blocks()[0])?;
    Ok(family_term(&spectrum, Family::Alpha, alpha))
}

/// Block-averaged score of one partition.
fn partition_score(
    psi: &PureState,
    partition: &Partition,
    family: Family,
    param: f64,
) -> Result<f64> {
    let mut sum = 0.0;
    for block in partition.blocks() {
        let spectrum = psi.block_spectrum(block)?;
        sum += family_term(&spectrum, family, param);
    }
    Ok(sum / partition.k() as f64)
}

fn check_scan_size(n: usize, k: usize) -> Result<()> {
    let limit = if k == 2 { 12 } else { 9 };
    if n > limit {
        return Err(Error::ParamOutOfRange(format!(
            "exhaustive partition scan supports n <= {limit} for k = {k}, got n = {n}"
        )));
    }
    Ok(())
}

fn minimize_over_partitions(
    psi: &PureState,
    k: usize,
    family: Family,
    param: f64,
) -> Result<(f64, Partition)> {
    let n = psi.dims().n();
    if k < 2 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    check_scan_size(n, k)?;
    let mut best: Option<(f64, Partition)> = None;
    for partition in k_partitions(n, k)? {
        let score = partition_score(psi, &partition, family, param)?;
        // strict comparison keeps the first partition on ties
        if best.as_ref().is_none_or(|(b, _)| score < *b) {
            best = Some((score, partition));
        }
    }
    Ok(best.expect("k_partitions is never empty"))
}

/// Pure-state q family over k-partitions: the minimum over all k-partitions
/// of the block-averaged q-concurrence, plus the first minimizing partition
/// in enumeration order.
pub fn q_k_me_pure(psi: &PureState, spec: &MeasureSpec) -> Result<(f64, Partition)> {
    if spec.family != Family::Q {
        return Err(Error::ParamOutOfRange("expected a q-family spec".into()));
    }
    minimize_over_partitions(psi, spec.k, Family::Q, spec.param)
}

/// Pure-state alpha family over k-partitions.
pub fn alpha_k_me_pure(psi: &PureState, spec: &MeasureSpec) -> Result<(f64, Partition)> {
    if spec.family != Family::Alpha {
        return Err(Error::ParamOutOfRange(
            "expected an alpha-family spec".into(),
        ));
    }
    minimize_over_partitions(psi, spec.k, Family::Alpha, spec.param)
}

/// Genuine-multipartite form of the q family: the minimum over bipartitions
/// of the single-cut value 1 - Tr rho_cut^q (not the two-block average,
/// though the two coincide for pure states since both reduced spectra agree).
pub fn q_gme_pure(psi: &PureState, q: f64) -> Result<(f64, Partition)> {
    if q < 2.0 {
        return Err(Error::ParamOutOfRange(format!("q = {q}, need q >= 2")));
    }
    single_cut_minimum(psi, Family::Q, q)
}

/// Genuine-multipartite form of the alpha family: min over bipartitions of
/// Tr rho_cut^alpha - 1.
pub fn alpha_gme_pure(psi: &PureState, alpha: f64) -> Result<(f64, Partition)> {
    if !(0.0..=0.5).contains(&alpha) {
        return Err(Error::ParamOutOfRange(format!(
            "alpha = {alpha}, need 0 <= alpha <= 1/2"
        )));
    }
    single_cut_minimum(psi, Family::Alpha, alpha)
}

fn single_cut_minimum(psi: &PureState, family: Family, param: f64) -> Result<(f64, Partition)> {
    let n = psi.dims().n();
    if n < 2 {
        return Err(Error::KOutOfRange { k: 2, n });
    }
    check_scan_size(n, 2)?;
    let mut best: Option<(f64, Partition)> = None;
    for cut in bipartitions(n)? {
        let spectrum = psi.block_spectrum(&cut.blocks()[0])?;
        let score = family_term(&spectrum, family, param);
        if best.as_ref().is_none_or(|(b, _)| score < *b) {
            best = Some((score, cut));
        }
    }
    Ok(best.expect("bipartitions is never empty"))
}

/// Evaluate the k-partition measure selected by `spec` on a pure state.
pub fn pure_measure(psi: &PureState, spec: &MeasureSpec) -> Result<(f64, Partition)> {
    match spec.family {
        Family::Q => q_k_me_pure(psi, spec),
        Family::Alpha => alpha_k_me_pure(psi, spec),
    }
}

/// One evaluated measure, in the shape the CLI serializes.
#[derive(Debug, Clone, Serialize)]
pub struct MeasureResult {
    pub measure: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub k: usize,
    pub value: f64,
    pub argmin_partition: String,
    pub certified: bool,
}

impl MeasureResult {
    pub fn new(
        measure: &str,
        spec: &MeasureSpec,
        value: f64,
        argmin: Option<&Partition>,
        certified: bool,
    ) -> Self {
        let (q, alpha) = match spec.family {
            Family::Q => (Some(spec.param), None),
            Family::Alpha => (None, Some(spec.param)),
        };
        Self {
            measure: measure.to_string(),
            q,
            alpha,
            k: spec.k,
            value,
            argmin_partition: argmin.map(|p| p.to_string()).unwrap_or_default(),
            certified,
        }
    }
}

/// Options for the convex-roof upper estimator.
#[derive(Debug, Clone)]
pub struct RoofOptions {
    /// Ensemble size L; defaults to rank + 2.
    pub ensemble_size: Option<usize>,
    pub restarts: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for RoofOptions {
    fn default() -> Self {
        Self {
            ensemble_size: None,
            restarts: 16,
            seed: 42,
            max_iters: 2000,
            tol: 1e-8,
        }
    }
}

/// Result of the convex-roof search: an upper bound on the roof value,
/// together with the best decomposition found.
#[derive(Debug, Clone)]
pub struct RoofEstimate {
    pub value: f64,
    pub ensemble_size: usize,
    pub restarts: usize,
    pub converged: bool,
    pub best_decomposition: Vec<(f64, PureState)>,
}

/// Spectral data shared by all restarts of one roof search.
struct RoofProblem<'a> {
    sqrt_eigs: Vec<f64>,
    eigvecs: CMatrix, // D x r, orthonormal columns
    ensemble: usize,
    rank: usize,
    spec: &'a MeasureSpec,
    dims: crate::qstate::SiteDims,
}

impl RoofProblem<'_> {
    /// Decode a flat real parameter vector into an ensemble x rank isometry
    /// (orthonormal columns).
    fn isometry(&self, params: &[f64]) -> CMatrix {
        let m = CMatrix::from_fn(self.ensemble, self.rank, |i, j| {
            let base = 2 * (i * self.rank + j);
            Complex64::new(params[base], params[base + 1])
        });
        linalg::orthonormal_columns(&m)
    }

    /// Ensemble members (probability, normalized state) induced by an
    /// isometry row: sqrt(p_i) |phi_i> = sum_j V_ij sqrt(lambda_j) |e_j>.
    fn members(&self, v: &CMatrix) -> Vec<(f64, PureState)> {
        let mut out = Vec::with_capacity(self.ensemble);
        for i in 0..self.ensemble {
            let mut w = nalgebra::DVector::<Complex64>::zeros(self.rank);
            for j in 0..self.rank {
                w[j] = v[(i, j)] * Complex64::new(self.sqrt_eigs[j], 0.0);
            }
            let p = w.norm_squared();
            if p < 1e-14 {
                continue;
            }
            let amps = &self.eigvecs * w / Complex64::new(p.sqrt(), 0.0);
            if let Ok(state) = PureState::from_amplitudes_normalized(self.dims.clone(), amps.iter().copied().collect()) {
                out.push((p, state));
            }
        }
        out
    }

    fn objective(&self, params: &[f64]) -> f64 {
        let v = self.isometry(params);
        self.members(&v)
            .iter()
            .map(|(p, state)| {
                p * pure_measure(state, self.spec)
                    .map(|(val, _)| val)
                    .unwrap_or(f64::INFINITY)
            })
            .sum()
    }
}

/// Upper-bound estimate of the convex roof of the selected measure.
///
/// Decompositions of size L are parameterized by an L x rank isometry acting
/// on the eigen-ensemble (every ensemble of that size arises this way), and
/// the ensemble average is minimized by Nelder-Mead restarts on the
/// isometry's free parameters. The first restart always starts from the
/// eigendecomposition itself, so the returned value never exceeds the
/// eigen-ensemble average. Pure inputs are returned exactly.
pub fn roof_estimate(
    rho: &DensityMatrix,
    spec: &MeasureSpec,
    opts: &RoofOptions,
) -> Result<RoofEstimate> {
    let n = rho.dims().n();
    if spec.k > n {
        return Err(Error::KOutOfRange { k: spec.k, n });
    }
    let (vals, vecs) = linalg::hermitian_eigen(rho.matrix());
    let kept: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > RANK_TOL).collect();
    let rank = kept.len();
    let ensemble = opts.ensemble_size.unwrap_or(rank + 2);
    if ensemble < rank {
        return Err(Error::EnsembleTooSmall {
            given: ensemble,
            rank,
        });
    }

    let mut eigvecs = CMatrix::zeros(vals.len(), rank);
    let mut sqrt_eigs = Vec::with_capacity(rank);
    for (col, &i) in kept.iter().enumerate() {
        eigvecs.set_column(col, &vecs.column(i));
        sqrt_eigs.push(vals[i].sqrt());
    }

    // rank-one states have a single pure member; every isometry reproduces it
    if rank == 1 {
        let amps = eigvecs.column(0).iter().copied().collect();
        let state = PureState::from_amplitudes_normalized(rho.dims().clone(), amps)?;
        let (value, _) = pure_measure(&state, spec)?;
        return Ok(RoofEstimate {
            value,
            ensemble_size: ensemble,
            restarts: 0,
            converged: true,
            best_decomposition: vec![(1.0, state)],
        });
    }

    let problem = RoofProblem {
        sqrt_eigs,
        eigvecs,
        ensemble,
        rank,
        spec,
        dims: rho.dims().clone(),
    };

    let dim = 2 * ensemble * rank;
    let restarts = opts.restarts.max(1);
    let runs: Vec<(f64, Vec<f64>, bool)> = (0..restarts)
        .into_par_iter()
        .map(|ri| {
            let mut x0 = vec![0.0; dim];
            if ri == 0 {
                // start from the eigen-ensemble embedding
                for j in 0..rank {
                    x0[2 * (j * rank + j)] = 1.0;
                }
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(ri as u64));
                for slot in x0.iter_mut() {
                    let g = linalg::gaussian_complex(&mut rng);
                    *slot = g.re;
                }
            }
            let res = optim::nelder_mead(
                |x| problem.objective(x),
                &x0,
                0.35,
                opts.max_iters,
                opts.tol,
            );
            (res.value, res.x, res.converged)
        })
        .collect();

    let best = runs
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.0.partial_cmp(&b.0).unwrap().then(ia.cmp(ib)))
        .map(|(_, r)| r)
        .expect("at least one restart");

    let v = problem.isometry(&best.1);
    let decomposition = problem.members(&v);
    let value = decomposition
        .iter()
        .map(|(p, s)| p * pure_measure(s, spec).map(|(v, _)| v).unwrap_or(f64::INFINITY))
        .sum::<f64>();
    Ok(RoofEstimate {
        value,
        ensemble_size: ensemble,
        restarts,
        converged: runs.iter().any(|r| r.2),
        best_decomposition: decomposition,
    })
}

/// Options for the local-unitary search inside `pi_lower_bound`.
#[derive(Debug, Clone)]
pub struct UnitarySearch {
    pub restarts: usize,
    pub seed: u64,
    pub max_iters: usize,
}

impl Default for UnitarySearch {
    fn default() -> Self {
        Self {
            restarts: 8,
            seed: 42,
            max_iters: 2000,
        }
    }
}

/// Indicator from the permutation-average route: the maximum over sampled
/// local-unitary frames of the measure evaluated on the permutation-averaged
/// state.
///
/// The inner mixed-state evaluation is itself an upper estimator, so the
/// report is certified only when the averaged state is pure (rank one),
/// where the inner value is exact. The identity frame is always included.
pub fn pi_lower_bound(
    rho: &DensityMatrix,
    spec: &MeasureSpec,
    search: &UnitarySearch,
) -> Result<BoundReport> {
    let m = rho
        .dims()
        .uniform()
        .ok_or_else(|| Error::UnequalDims(rho.dims().dims().to_vec()))?;
    let n = rho.dims().n();
    if spec.k > n {
        return Err(Error::KOutOfRange { k: spec.k, n });
    }

    let candidates: Vec<(f64, bool)> = (0..=search.restarts)
        .into_par_iter()
        .map(|ri| -> Result<(f64, bool)> {
            let frame = if ri == 0 {
                LocalUnitarySet::identity(rho.dims())
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(search.seed.wrapping_add(ri as u64));
                LocalUnitarySet::random(rho.dims(), &mut rng)
            };
            let averaged = pi_part(&apply_local_unitaries(rho, &frame)?)?;
            if let Some(pure) = averaged.as_pure(1e-9) {
                let (value, _) = pure_measure(&pure, spec)?;
                return Ok((value, true));
            }
            let roof = roof_estimate(
                &averaged,
                spec,
                &RoofOptions {
                    seed: search.seed.wrapping_add(1000 + ri as u64),
                    max_iters: search.max_iters,
                    restarts: 8,
                    ..Default::default()
                },
            )?;
            Ok((roof.value, false))
        })
        .collect::<Result<Vec<_>>>()?;

    let (value, certified) = candidates
        .iter()
        .copied()
        .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .expect("identity frame always present");

    let (qv, av) = match spec.family {
        Family::Q => (Some(spec.param), None),
        Family::Alpha => (None, Some(spec.param)),
    };
    let inputs = BoundInputs {
        q: qv,
        alpha: av,
        n,
        m: Some(m),
        ..Default::default()
    };
    Ok(if certified {
        BoundReport::certified("pi-roof", value, inputs)
    } else {
        BoundReport::heuristic("pi-roof", value, inputs)
    })
}

/// Derivative-free simplex minimizer used by the roof search.
mod optim {
    pub struct NmResult {
        pub x: Vec<f64>,
        pub value: f64,
        pub converged: bool,
    }

    pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
        f: F,
        x0: &[f64],
        step: f64,
        max_iters: usize,
        tol: f64,
    ) -> NmResult {
        let dim = x0.len();
        let mut pts: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
        pts.push(x0.to_vec());
        for i in 0..dim {
            let mut p = x0.to_vec();
            p[i] += step;
            pts.push(p);
        }
        let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();
        let mut converged = false;

        for _ in 0..max_iters {
            let mut order: Vec<usize> = (0..pts.len()).collect();
            order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap());
            let best = order[0];
            let worst = order[dim];
            let second_worst = order[dim - 1];

            if vals[worst] - vals[best] < tol {
                converged = true;
                break;
            }

            let mut centroid = vec![0.0; dim];
            for &i in order.iter().take(dim) {
                for (c, &x) in centroid.iter_mut().zip(&pts[i]) {
                    *c += x;
                }
            }
            for c in centroid.iter_mut() {
                *c /= dim as f64;
            }

            let lerp = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&pts[worst])
                    .map(|(&c, &w)| c + t * (c - w))
                    .collect()
            };

            let reflected = lerp(1.0);
            let fr = f(&reflected);
            if fr < vals[best] {
                let expanded = lerp(2.0);
                let fe = f(&expanded);
                if fe < fr {
                    pts[worst] = expanded;
                    vals[worst] = fe;
                } else {
                    pts[worst] = reflected;
                    vals[worst] = fr;
                }
            } else if fr < vals[second_worst] {
                pts[worst] = reflected;
                vals[worst] = fr;
            } else {
                let contracted = if fr < vals[worst] {
                    lerp(0.5)
                } else {
                    lerp(-0.5)
                };
                let fc = f(&contracted);
                if fc < vals[worst].min(fr) {
                    pts[worst] = contracted;
                    vals[worst] = fc;
                } else {
                    // shrink toward the best vertex
                    let anchor = pts[best].clone();
                    for i in 0..pts.len() {
                        if i == best {
                            continue;
                        }
                        for (x, &a) in pts[i].iter_mut().zip(&anchor) {
                            *x = a + 0.5 * (*x - a);
                        }
                        vals[i] = f(&pts[i]);
                    }
                }
            }
        }

        let (idx, &value) = vals
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        NmResult {
            x: pts[idx].clone(),
            value,
            converged,
        }
    }

}
