//! Certified, optimization-free lower bounds on the block-averaged
//! concurrence families, built from partial-transpose trace norms
//! (global negativity) and realignment trace norms.

use crate::error::{Error, Result};
use crate::linalg;
use crate::partitions::Partition;
use crate::qstate::{partial_transpose, partial_transpose_sites, realign, DensityMatrix};
use serde::Serialize;

/// Regime constant for the two-qubit-block bound family: it covers
/// s <= q < 3 with s inclusive.
pub const WEI_S: f64 = 2.4721;

/// Strictly-positive threshold for declaring a certified bound a witness.
pub const WITNESS_TOL: f64 = 1e-10;

/// Parameters that produced a bound value.
#[derive(Debug, Clone, Default, Serialize)]
pub struct BoundInputs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub negativities: Vec<f64>,
}

impl BoundInputs {
    /// Compact "key=value;..." rendering for CSV emission.
    pub fn compact(&self) -> String {
        let mut parts = Vec::new();
        if let Some(q) = self.q {
            parts.push(format!("q={q}"));
        }
        if let Some(a) = self.alpha {
            parts.push(format!("alpha={a}"));
        }
        parts.push(format!("n={}", self.n));
        if let Some(m) = self.m {
            parts.push(format!("m={m}"));
        }
        if !self.negativities.is_empty() {
            let ns: Vec<String> = self.negativities.iter().map(|v| format!("{v:.6}")).collect();
            parts.push(format!("neg=[{}]", ns.join(" ")));
        }
        parts.join(";")
    }
}

/// A named lower-bound value with its certification status.
///
/// `certified` bounds are valid lower bounds of the target measure on the
/// given state. A negative raw value carries no information for a
/// nonnegative measure, so it is clamped to zero and marked `vacuous`.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub value: f64,
    pub certified: bool,
    pub vacuous: bool,
    pub inputs: BoundInputs,
}

impl BoundReport {
    pub(crate) fn certified(name: &str, raw: f64, inputs: BoundInputs) -> Self {
        Self {
            name: name.to_string(),
            value: raw.max(0.0),
            certified: true,
            vacuous: raw <= 0.0,
            inputs,
        }
    }

    pub(crate) fn heuristic(name: &str, raw: f64, inputs: BoundInputs) -> Self {
        Self {
            name: name.to_string(),
            value: raw.max(0.0),
            certified: false,
            vacuous: raw <= 0.0,
            inputs,
        }
    }
}

/// ||rho^{T_p}||_1 for a single site.
fn pt_trace_norm(rho: &DensityMatrix, p: usize) -> Result<f64> {
    Ok(linalg::trace_norm_hermitian(&partial_transpose(rho, p)?))
}

/// Global negativity of the cut p | rest:
/// N^p = (||rho^{T_p}||_1 - 1) / (d_p - 1), zero for all PPT states.
pub fn global_negativity(rho: &DensityMatrix, p: usize) -> Result<f64> {
    let n = rho.dims().n();
    if p < 1 || p > n {
        return Err(Error::SiteOutOfRange { site: p, n });
    }
    let d_p = rho.dims().dims()[p - 1];
    Ok(((pt_trace_norm(rho, p)? - 1.0) / (d_p - 1) as f64).max(0.0))
}

/// Global negativity of every site.
pub fn all_negativities(rho: &DensityMatrix) -> Result<Vec<f64>> {
    (1..=rho.dims().n())
        .map(|p| global_negativity(rho, p))
        .collect()
}

fn block_dims(rho: &DensityMatrix, bipart: &Partition) -> Result<(usize, usize)> {
    if bipart.k() != 2 {
        return Err(Error::NonBipartition(bipart.k()));
    }
    if bipart.n() != rho.dims().n() {
        return Err(Error::DimensionMismatch(format!(
            "partition over {} sites, state has {}",
            bipart.n(),
            rho.dims().n()
        )));
    }
    let dim_of = |block: &[usize]| -> usize {
        block
            .iter()
            .map(|&s| rho.dims().dims()[s - 1])
            .product()
    };
    Ok((dim_of(&bipart.blocks()[0]), dim_of(&bipart.blocks()[1])))
}

/// Larger of the two entanglement-witness trace norms across the cut:
/// the blockwise partial transpose and the realignment.
fn witness_norms(rho: &DensityMatrix, bipart: &Partition) -> Result<(f64, f64)> {
    let pt = partial_transpose_sites(rho, &bipart.blocks()[0])?;
    let pt_norm = linalg::trace_norm_hermitian(&pt);
    let re_norm = linalg::trace_norm_rect(&realign(rho, bipart)?);
    Ok((pt_norm, re_norm))
}

/// Bipartite bound on the q-concurrence across a cut:
/// [max(||rho^{T_A}||_1, ||R(rho)||_1)^{q-1} - 1]^2 / (m^{2q-2} - m^{q-1}),
/// with m the smaller block dimension.
pub fn q_bipartite_bound(
    rho: &DensityMatrix,
    bipart: &Partition,
    q: f64,
) -> Result<BoundReport> {
    if q < 2.0 {
        return Err(Error::ParamOutOfRange(format!("q = {q} < 2")));
    }
    let (da, db) = block_dims(rho, bipart)?;
    let m = da.min(db) as f64;
    let (pt_norm, re_norm) = witness_norms(rho, bipart)?;
    let top = pt_norm.powf(q - 1.0).max(re_norm.powf(q - 1.0)) - 1.0;
    let raw = if top > 0.0 {
        top * top / (m.powf(2.0 * q - 2.0) - m.powf(q - 1.0))
    } else {
        0.0
    };
    Ok(BoundReport::certified(
        "q-bipartite",
        raw,
        BoundInputs {
            q: Some(q),
            n: rho.dims().n(),
            m: Some(da.min(db)),
            ..Default::default()
        },
    ))
}

/// Alternative bipartite bound with sharper constants:
/// (1 - m^{1-q})/(m-1)^2 T^2 when q >= 2 with m >= 3, or q >= 3 with m = 2;
/// (1 - 2^{1-q})/(2 - 2^{2-s}) T^2 when s <= q < 3 with m = 2;
/// where T = max(||rho^{T_A}||_1, ||R(rho)||_1) - 1.
pub fn wei_bipartite_bound(
    rho: &DensityMatrix,
    bipart: &Partition,
    q: f64,
) -> Result<BoundReport> {
    if q < 2.0 {
        return Err(Error::ParamOutOfRange(format!("q = {q} < 2")));
    }
    let (da, db) = block_dims(rho, bipart)?;
    let m = da.min(db);
    let mf = m as f64;
    let coeff = if m >= 3 || q >= 3.0 {
        (1.0 - mf.powf(1.0 - q)) / ((mf - 1.0) * (mf - 1.0))
    } else if q >= WEI_S {
        (1.0 - 2f64.powf(1.0 - q)) / (2.0 - 2f64.powf(2.0 - WEI_S))
    } else {
        return Err(Error::RegimeNotCovered(format!(
            "q = {q} with two-dimensional smaller block needs q >= {WEI_S}"
        )));
    };
    let (pt_norm, re_norm) = witness_norms(rho, bipart)?;
    let t = pt_norm.max(re_norm) - 1.0;
    let raw = if t > 0.0 { coeff * t * t } else { 0.0 };
    Ok(BoundReport::certified(
        "wei-bipartite",
        raw,
        BoundInputs {
            q: Some(q),
            n: rho.dims().n(),
            m: Some(m),
            ..Default::default()
        },
    ))
}

fn require_qubits(rho: &DensityMatrix) -> Result<()> {
    if !rho.dims().is_qubits() {
        return Err(Error::NonQubit(rho.dims().dims().to_vec()));
    }
    Ok(())
}

fn require_uniform(rho: &DensityMatrix) -> Result<usize> {
    rho.dims()
        .uniform()
        .ok_or_else(|| Error::UnequalDims(rho.dims().dims().to_vec()))
}

/// Negativity bound on the full n-block average for qubits:
/// sum_k [(N^k + 1)^{q-1} - 1]^2 / (n (2^{2q-2} - 2^{q-1})).
/// Saturates on n-qubit pure states at q = 2.
pub fn qn_bound_qubit(rho: &DensityMatrix, q: f64) -> Result<BoundReport> {
    require_qubits(rho)?;
    if q < 2.0 {
        return Err(Error::ParamOutOfRange(format!("q = {q} < 2")));
    }
    let n = rho.dims().n();
    let negs = all_negativities(rho)?;
    let num: f64 = negs
        .iter()
        .map(|&nk| {
            let t = (nk + 1.0).powf(q - 1.0) - 1.0;
            t * t
        })
        .sum();
    let raw = num / (n as f64 * (2f64.powf(2.0 * q - 2.0) - 2f64.powf(q - 1.0)));
    Ok(BoundReport::certified(
        "qn-qubit",
        raw,
        BoundInputs {
            q: Some(q),
            n,
            m: Some(2),
            negativities: negs,
            ..Default::default()
        },
    ))
}

/// Equal-dimension qudit generalization:
/// sum_k {[(m-1) N^k + 1]^{q-1} - 1}^2 / (n (m^{2q-2} - m^{q-1})).
pub fn qn_bound_qudit(rho: &DensityMatrix, q: f64) -> Result<BoundReport> {
    let m = require_uniform(rho)?;
    if q < 2.0 {
        return Err(Error::ParamOutOfRange(format!("q = {q} < 2")));
    }
    let n = rho.dims().n();
    let mf = m as f64;
    let negs = all_negativities(rho)?;
    let num: f64 = negs
        .iter()
        .map(|&nk| {
            let t = ((mf - 1.0) * nk + 1.0).powf(q - 1.0) - 1.0;
            t * t
        })
        .sum();
    let raw = num / (n as f64 * (mf.powf(2.0 * q - 2.0) - mf.powf(q - 1.0)));
    Ok(BoundReport::certified(
        "qn-qudit",
        raw,
        BoundInputs {
            q: Some(q),
            n,
            m: Some(m),
            negativities: negs,
            ..Default::default()
        },
    ))
}

/// Sharper negativity bounds on the full n-block average.
///
/// Qubits: (2^{q-1} - 1)/(2^{q-1} n) sum (N^k)^2 for q >= 3, or
/// (1 - 2^{1-q})/((2 - 2^{2-s}) n) sum (N^k)^2 for s <= q < 3; the window
/// 2 <= q < s is not covered. Equal-dimension qudits with m >= 3:
/// (1 - m^{1-q})/(n (m-1)^2) sum (N^k)^2 for q >= 2.
pub fn qn_bound_improved(rho: &DensityMatrix, q: f64) -> Result<BoundReport> {
    let m = require_uniform(rho)?;
    if q < 2.0 {
        return Err(Error::ParamOutOfRange(format!("q = {q} < 2")));
    }
    let n = rho.dims().n();
    let mf = m as f64;
    let coeff = if m == 2 {
        if q >= 3.0 {
            (2f64.powf(q - 1.0) - 1.0) / (2f64.powf(q - 1.0) * n as f64)
        } else if q >= WEI_S {
            (1.0 - 2f64.powf(1.0 - q)) / ((2.0 - 2f64.powf(2.0 - WEI_S)) * n as f64)
        } else {
            return Err(Error::RegimeNotCovered(format!(
                "qubit case needs q >= {WEI_S}, got q = {q}"
            )));
        }
    } else {
        (1.0 - mf.powf(1.0 - q)) / (n as f64 * (mf - 1.0) * (mf - 1.0))
    };
    let negs = all_negativities(rho)?;
    let raw = coeff * negs.iter().map(|&nk| nk * nk).sum::<f64>();
    Ok(BoundReport::certified(
        "qn-improved",
        raw,
        BoundInputs {
            q: Some(q),
            n,
            m: Some(m),
            negativities: negs,
            ..Default::default()
        },
    ))
}

/// Negativity bound on the alpha family over the full n-block average:
/// (2^{1-alpha} - 1)/n sum N^k for qubits,
/// (m^{1-alpha} - 1)/(n (m-1)) sum N^k for equal dimension m.
pub fn alphan_bound(rho: &DensityMatrix, alpha: f64) -> Result<BoundReport> {
    let m = require_uniform(rho)?;
    if !(0.0..=0.5).contains(&alpha) {
        return Err(Error::ParamOutOfRange(format!(
            "alpha = {alpha} outside [0, 1/2]"
        )));
    }
    let n = rho.dims().n();
    let mf = m as f64;
    let negs = all_negativities(rho)?;
    let sum: f64 = negs.iter().sum();
    let raw = (mf.powf(1.0 - alpha) - 1.0) / (n as f64 * (mf - 1.0)) * sum;
    Ok(BoundReport::certified(
        "alpha-n",
        raw,
        BoundInputs {
            alpha: Some(alpha),
            n,
            m: Some(m),
            negativities: negs,
            ..Default::default()
        },
    ))
}

/// A bound to evaluate, for `entanglement_verdict` and the CLI.
#[derive(Debug, Clone)]
pub enum BoundRequest {
    GlobalNegativity,
    QBipartite { bipart: Partition, q: f64 },
    WeiBipartite { bipart: Partition, q: f64 },
    QnQubit { q: f64 },
    QnQudit { q: f64 },
    QnImproved { q: f64 },
    AlphaN { alpha: f64 },
}

/// Outcome of running a batch of bounds on one state.
#[derive(Debug, Clone, Serialize)]
pub struct VerdictSummary {
    pub entangled: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    pub reports: Vec<BoundReport>,
}

/// Run the requested bounds; the state is declared entangled
/// (n-nonseparable) iff some certified bound exceeds 1e-10.
pub fn entanglement_verdict(
    rho: &DensityMatrix,
    requests: &[BoundRequest],
) -> Result<VerdictSummary> {
    let mut reports = Vec::new();
    for req in requests {
        match req {
            BoundRequest::GlobalNegativity => {
                let negs = all_negativities(rho)?;
                for (i, &v) in negs.iter().enumerate() {
                    reports.push(BoundReport::certified(
                        &format!("negativity-site-{}", i + 1),
                        v,
                        BoundInputs {
                            n: rho.dims().n(),
                            negativities: vec![v],
                            ..Default::default()
                        },
                    ));
                }
            }
            BoundRequest::QBipartite { bipart, q } => {
                reports.push(q_bipartite_bound(rho, bipart, *q)?)
            }
            BoundRequest::WeiBipartite { bipart, q } => {
                reports.push(wei_bipartite_bound(rho, bipart, *q)?)
            }
            BoundRequest::QnQubit { q } => reports.push(qn_bound_qubit(rho, *q)?),
            BoundRequest::QnQudit { q } => reports.push(qn_bound_qudit(rho, *q)?),
            BoundRequest::QnImproved { q } => reports.push(qn_bound_improved(rho, *q)?),
            BoundRequest::AlphaN { alpha } => reports.push(alphan_bound(rho, *alpha)?),
        }
    }
    let witness = reports
        .iter()
        .find(|r| r.certified && r.value > WITNESS_TOL)
        .map(|r| r.name.clone());
    Ok(VerdictSummary {
        entangled: witness.is_some(),
        witness,
        reports,
    })
}

/// Detection onset of the single-excitation noise family:
/// negativities turn positive above a = n / (n + 2^n sqrt(n-1)).
pub fn w_noise_onset(n: usize) -> f64 {
    let nf = n as f64;
    nf / (nf + 2f64.powi(n as i32) * (nf - 1.0).sqrt())
}

/// The analytic negativity of the single-excitation noise family above
/// onset: ((2^n sqrt(n-1) + n) a - n) / (n 2^{n-1}).
pub fn w_noise_negativity(n: usize, a: f64) -> f64 {
    let nf = n as f64;
    ((2f64.powi(n as i32) * (nf - 1.0).sqrt() + nf) * a - nf) / (nf * 2f64.powi(n as i32 - 1))
}
