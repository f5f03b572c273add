//! Matrix-element separability criteria for n-qubit states and the derived
//! separability degrees.
//!
//! Matrix indices follow the 1-based computational-basis convention, index 1
//! being |0..0>. Terms:
//!   A = |rho_{1,2^n}|
//!   B = sum_{i=2}^{2^n-1} sqrt(rho_{i,i} rho_{2^n-i+1,2^n-i+1})
//!   C = sum_{0<=i!=j<=n-1} |rho_{2^i+1,2^j+1}|
//!   D = sum_{0<=i!=j<=n-1} sqrt(rho_{1,1} rho_{2^i+2^j+1,2^i+2^j+1})
//!   E = sum_{i=0}^{n-1} |rho_{2^i+1,2^i+1}|
//! A k-separable state satisfies (2^k - 2) A <= B and C <= D + (n-k) E;
//! violating either certifies k-nonseparability.

use crate::error::{Error, Result};
use crate::qstate::{state_factory, DensityMatrix, StateFamily};
use rayon::prelude::*;
use serde::Serialize;

/// Strict-violation guard against floating-point noise on saturating states.
pub const VIOLATION_TOL: f64 = 1e-12;

/// The five matrix-element aggregates of the two criteria.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CriterionTerms {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

/// Compute the criterion terms of an n-qubit state.
pub fn criterion_terms(rho: &DensityMatrix) -> Result<CriterionTerms> {
    if !rho.dims().is_qubits() {
        return Err(Error::NonQubit(rho.dims().dims().to_vec()));
    }
    let n = rho.dims().n();
    let d = rho.dims().total();
    let m = rho.matrix();
    let diag = |i: usize| m[(i, i)].norm();

    let a = m[(0, d - 1)].norm();
    let mut b = 0.0;
    for x in 1..d - 1 {
        b += (m[(x, x)].re.max(0.0) * m[(d - 1 - x, d - 1 - x)].re.max(0.0)).sqrt();
    }
    let mut c = 0.0;
    let mut dd = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            c += m[(1 << i, 1 << j)].norm();
            dd += (m[(0, 0)].re.max(0.0)
                * m[((1 << i) + (1 << j), (1 << i) + (1 << j))].re.max(0.0))
            .sqrt();
        }
    }
    let e = (0..n).map(|i| diag(1 << i)).sum();
    Ok(CriterionTerms { a, b, c, d: dd, e })
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k < 2 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    Ok(())
}

/// True iff (2^k - 2) A > B beyond tolerance: the state is k-nonseparable.
pub fn ghz_criterion(rho: &DensityMatrix, k: usize) -> Result<bool> {
    check_k(rho.dims().n(), k)?;
    let t = criterion_terms(rho)?;
    Ok((2f64.powi(k as i32) - 2.0) * t.a > t.b + VIOLATION_TOL)
}

/// True iff C > D + (n - k) E beyond tolerance: the state is k-nonseparable.
pub fn w_criterion(rho: &DensityMatrix, k: usize) -> Result<bool> {
    let n = rho.dims().n();
    check_k(n, k)?;
    let t = criterion_terms(rho)?;
    Ok(t.c > t.d + (n - k) as f64 * t.e + VIOLATION_TOL)
}

/// Separability degrees obtained by inverting the two criteria:
/// k_eff1 = log2(2 + B/A), k_eff2 = n - (C - D)/E.
///
/// A vanishing denominator leaves the corresponding degree undefined; it is
/// reported as +infinity and the criterion stays silent. Values above n are
/// uninformative but reported as computed.
pub fn k_eff(rho: &DensityMatrix) -> Result<(f64, f64)> {
    let n = rho.dims().n();
    let t = criterion_terms(rho)?;
    let k1 = if t.a > 0.0 {
        (2.0 + t.b / t.a).log2()
    } else {
        f64::INFINITY
    };
    let k2 = if t.e > 0.0 {
        n as f64 - (t.c - t.d) / t.e
    } else {
        f64::INFINITY
    };
    Ok((k1, k2))
}

/// Verdict of both criteria at one k.
#[derive(Debug, Clone, Serialize)]
pub struct SeparabilityVerdict {
    pub k: usize,
    pub ghz_test_violated: bool,
    pub w_test_violated: bool,
    pub k_eff1: f64,
    pub k_eff2: f64,
}

impl SeparabilityVerdict {
    /// Some test fired, so the state is k-nonseparable.
    pub fn k_nonseparable(&self) -> bool {
        self.ghz_test_violated || self.w_test_violated
    }

    /// Genuine multipartite entanglement: a separability degree below 2.
    pub fn genuinely_entangled(&self) -> bool {
        self.k_eff1 < 2.0 || self.k_eff2 < 2.0
    }

    /// Degrees above n carry no information.
    pub fn k_eff1_informative(&self, n: usize) -> bool {
        self.k_eff1 <= n as f64
    }

    pub fn k_eff2_informative(&self, n: usize) -> bool {
        self.k_eff2 <= n as f64
    }
}

/// Run both criteria and the separability degrees at one k.
pub fn detect(rho: &DensityMatrix, k: usize) -> Result<SeparabilityVerdict> {
    let (k_eff1, k_eff2) = k_eff(rho)?;
    Ok(SeparabilityVerdict {
        k,
        ghz_test_violated: ghz_criterion(rho, k)?,
        w_test_violated: w_criterion(rho, k)?,
        k_eff1,
        k_eff2,
    })
}

/// One axis of a parameter grid: inclusive start..=stop by step.
#[derive(Debug, Clone)]
pub struct GridAxis {
    pub name: String,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridAxis {
    pub fn new(name: &str, start: f64, stop: f64, step: f64) -> Result<Self> {
        if step <= 0.0 && start != stop {
            return Err(Error::ParamOutOfRange(format!(
                "grid step {step} must be positive"
            )));
        }
        Ok(Self {
            name: name.to_string(),
            start,
            stop,
            step,
        })
    }

    /// Grid values, endpoint included up to a half-step rounding guard.
    pub fn values(&self) -> Vec<f64> {
        if self.start == self.stop || self.step <= 0.0 {
            return vec![self.start];
        }
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=count).map(|i| self.start + i as f64 * self.step).collect()
    }
}

/// One row of a detection scan.
#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub family: String,
    pub n: usize,
    pub k: usize,
    pub param1: f64,
    pub param2: Option<f64>,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub ghz_violated: bool,
    pub w_violated: bool,
    pub k_eff1: f64,
    pub k_eff2: f64,
}

/// Positional parameter names of each family, in factory order.
pub fn family_param_names(tag: &str) -> Result<&'static [&'static str]> {
    let tag = tag.to_ascii_lowercase().replace('_', "-");
    Ok(match tag.as_str() {
        "ghz" | "w" => &[],
        "ghz-noise" => &["t"],
        "w-noise" => &["a"],
        "ghz-w-noise" => &["a", "b"],
        "phi-theta" => &["theta"],
        _ => return Err(Error::UnknownFamily(tag)),
    })
}

/// Evaluate both criteria and the separability degrees of a state family
/// over a one- or two-axis parameter grid. Rows come out in row-major grid
/// order (first axis outermost); grid points the family rejects (e.g.
/// a + b > 1) are skipped.
pub fn detection_scan(
    family_tag: &str,
    n: usize,
    k: usize,
    grid: &[GridAxis],
) -> Result<Vec<ScanRow>> {
    let names = family_param_names(family_tag)?;
    if grid.len() != names.len() {
        return Err(Error::ParamOutOfRange(format!(
            "family '{family_tag}' takes parameters {names:?}, got {} grid axes",
            grid.len()
        )));
    }
    for (axis, &expect) in grid.iter().zip(names) {
        if axis.name != expect {
            return Err(Error::ParamOutOfRange(format!(
                "grid axis '{}' does not match family parameter '{expect}'",
                axis.name
            )));
        }
    }
    check_k(n, k)?;

    let points: Vec<Vec<f64>> = match grid.len() {
        0 => vec![vec![]],
        1 => grid[0].values().into_iter().map(|v| vec![v]).collect(),
        2 => {
            let outer = grid[0].values();
            let inner = grid[1].values();
            outer
                .iter()
                .flat_map(|&x| inner.iter().map(move |&y| vec![x, y]))
                .collect()
        }
        more => {
            return Err(Error::ParamOutOfRange(format!(
                "at most two grid axes supported, got {more}"
            )))
        }
    };

    let rows: Vec<Option<ScanRow>> = points
        .par_iter()
        .map(|params| -> Result<Option<ScanRow>> {
            let family = match StateFamily::parse(family_tag, params) {
                Ok(f) => f,
                Err(_) => return Ok(None),
            };
            let rho = match state_factory(&family, n) {
                Ok(r) => r,
                Err(Error::ParamOutOfRange(_)) => return Ok(None),
                Err(e) => return Err(e),
            };
            let terms = criterion_terms(&rho)?;
            let verdict = detect(&rho, k)?;
            Ok(Some(ScanRow {
                family: family_tag.to_string(),
                n,
                k,
                param1: params.first().copied().unwrap_or(f64::NAN),
                param2: params.get(1).copied(),
                a: terms.a,
                b: terms.b,
                c: terms.c,
                d: terms.d,
                e: terms.e,
                ghz_violated: verdict.ghz_test_violated,
                w_violated: verdict.w_test_violated,
                k_eff1: verdict.k_eff1,
                k_eff2: verdict.k_eff2,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Locate the switching point of a boolean predicate on [lo, hi] by
/// bisection, assuming exactly one sign change. Returns None when the
/// predicate does not change over the interval.
pub fn bisect_boundary<F: Fn(f64) -> bool>(f: F, lo: f64, hi: f64, resolution: f64) -> Option<f64> {
    let flo = f(lo);
    if f(hi) == flo {
        return None;
    }
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        if f(mid) == flo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Closed-form detection threshold of the two-ended-superposition noise
/// family: the k-nonseparability boundary sits at (2^n - 2)/(2^{n+k-1} - 2).
pub fn ghz_noise_threshold(n: usize, k: usize) -> f64 {
    (2f64.powi(n as i32) - 2.0) / (2f64.powi((n + k - 1) as i32) - 2.0)
}

/// Closed-form separability degree of the same family:
/// k_eff1(t, n) = log2((2^n - 2)(1 - t)/(2^{n-1} t) + 2).
pub fn ghz_noise_k_eff1(n: usize, t: f64) -> f64 {
    ((2f64.powi(n as i32) - 2.0) * (1.0 - t) / (2f64.powi(n as i32 - 1) * t) + 2.0).log2()
}
