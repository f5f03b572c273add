//! Comparison measures for genuine multipartite entanglement: the
//! Heron-formula concurrence fill on three qubits, the geometric mean of
//! bipartite q-concurrences, and side-by-side tables over the one-parameter
//! benchmark family.

use crate::error::{Error, Result};
use crate::measures::q_gme_pure;
use crate::partitions::bipartitions;
use crate::qstate::{pure_state_factory, PureState, StateFamily};
use rayon::prelude::*;
use serde::Serialize;

/// Products this close to zero are analytically-degenerate triangles; the
/// quartic root would amplify their floating-point residue (~1e-32) into
/// visible values (~1e-8), so they are snapped to zero.
pub(crate) const FILL_CLAMP_TOL: f64 = 1e-10;

/// Concurrence fill of a 3-qubit pure state: the Heron-formula area of the
/// triangle whose sides are the squared one-to-other concurrences
/// C_i^2 = 2 (1 - Tr rho_i^2),
/// F = [16/3 P (P - C_1^2)(P - C_2^2)(P - C_3^2)]^{1/4},
/// P = (C_1^2 + C_2^2 + C_3^2)/2.
/// The inner product is clamped at zero (tolerance 1e-10) before the quartic
/// root; the triangle inequality keeps it nonnegative analytically.
pub fn concurrence_fill(psi: &PureState) -> Result<f64> {
    if psi.dims().n() != 3 || !psi.dims().is_qubits() {
        return Err(Error::NonQubit(psi.dims().dims().to_vec()));
    }
    let sides = fill_sides(psi)?;
    let p = 0.5 * sides.iter().sum::<f64>();
    let product = (16.0 / 3.0) * p * sides.iter().map(|&s| p - s).product::<f64>();
    Ok(if product < FILL_CLAMP_TOL {
        0.0
    } else {
        product.powf(0.25)
    })
}

/// The squared one-to-other concurrences of the three single-site cuts.
pub(crate) fn fill_sides(psi: &PureState) -> Result<[f64; 3]> {
    let mut sides = [0.0; 3];
    for (i, side) in sides.iter_mut().enumerate() {
        let reduced = psi.reduced_density(&[i + 1])?;
        *side = 2.0 * (1.0 - reduced.purity());
    }
    Ok(sides)
}

/// Cut values below this are vanishing cuts up to eigensolver round-off
/// (~1e-15); without the clamp the geometric mean would amplify the residue
/// of an exactly-product cut into ~1e-6.
pub(crate) const GQC_ZERO_TOL: f64 = 1e-12;

/// Geometric mean of the bipartite q-concurrences over all 2^{n-1} - 1 cuts.
/// Returns 0 as soon as any cut vanishes (below 1e-12).
pub fn gqc(psi: &PureState, q: f64) -> Result<f64> {
    if q < 2.0 {
        return Err(Error::ParamOutOfRange(format!("q = {q}, need q >= 2")));
    }
    let n = psi.dims().n();
    if n < 2 {
        return Err(Error::KOutOfRange { k: 2, n });
    }
    let mut log_sum = 0.0;
    let mut count = 0usize;
    for cut in bipartitions(n)? {
        let spectrum = psi.block_spectrum(&cut.blocks()[0])?;
        let value = 1.0
            - spectrum
                .iter()
                .map(|&v| v.max(0.0).powf(q))
                .sum::<f64>();
        if value <= GQC_ZERO_TOL {
            return Ok(0.0);
        }
        log_sum += value.ln();
        count += 1;
    }
    Ok((log_sum / count as f64).exp())
}

/// One row of the comparison table.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub theta: f64,
    pub q: f64,
    pub c_q_gme: f64,
    pub gqc: f64,
    pub fill: f64,
}

/// Evaluate the genuine-multipartite q family, the geometric mean, and the
/// concurrence fill on the one-parameter benchmark state per grid point.
pub fn example4_table(theta_grid: &[f64], q: f64) -> Result<Vec<ComparisonRow>> {
    theta_grid
        .par_iter()
        .map(|&theta| -> Result<ComparisonRow> {
            let psi = pure_state_factory(&StateFamily::PhiTheta { theta }, 3)?;
            let (c_q_gme, _) = q_gme_pure(&psi, q)?;
            Ok(ComparisonRow {
                theta,
                q,
                c_q_gme,
                gqc: gqc(&psi, q)?,
                fill: concurrence_fill(&psi)?,
            })
        })
        .collect()
}

/// Search a comparison table for a pair of rows ordered oppositely by the
/// minimum-based measure and by both alternatives. Returns the first such
/// index pair.
pub fn find_ordering_flip(rows: &[ComparisonRow], margin: f64) -> Option<(usize, usize)> {
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let dc = rows[j].c_q_gme - rows[i].c_q_gme;
            let dg = rows[j].gqc - rows[i].gqc;
            let df = rows[j].fill - rows[i].fill;
            if dc > margin && dg < -margin && df < -margin {
                return Some((i, j));
            }
            if dc < -margin && dg > margin && df > margin {
                return Some((i, j));
            }
        }
    }
    None
}

/// Closed forms of the benchmark family used as an independent route in
/// tests: the two distinct cut spectra are {x, y} and {(1 +- u)/2} with
/// x = 1/4 + 3 sin^2(theta)/4, y = 3 cos^2(theta)/4,
/// u = sqrt(1 - 3 sin^2(theta) cos^2(theta)).
pub mod phi_theta_closed_forms {
    /// min of the two cut values of the q family.
    pub fn c_q_gme(theta: f64, q: f64) -> f64 {
        let (b1, b3) = branches(theta, q);
        b1.min(b3)
    }

    /// Geometric mean over the three cuts (the first branch appears twice),
    /// under the same vanishing-cut clamp as the general form.
    pub fn gqc(theta: f64, q: f64) -> f64 {
        let (b1, b3) = branches(theta, q);
        if b1 <= super::GQC_ZERO_TOL || b3 <= super::GQC_ZERO_TOL {
            return 0.0;
        }
        b1.powf(2.0 / 3.0) * b3.powf(1.0 / 3.0)
    }

    /// Fill through the specialized display [16/3 P (P - C1)^2 (P - C2)]^{1/4}
    /// with repeated first side, under the same degenerate-product clamp as
    /// the general form.
    pub fn fill(theta: f64) -> f64 {
        let (c1, c2) = sides(theta);
        let p = c1 + 0.5 * c2;
        let product = (16.0 / 3.0) * p * (p - c1).powi(2) * (p - c2);
        if product < super::FILL_CLAMP_TOL {
            0.0
        } else {
            product.powf(0.25)
        }
    }

    /// The two distinct squared-concurrence sides (C1 doubled in the triangle).
    pub fn sides(theta: f64) -> (f64, f64) {
        let (x, y, u) = spectra(theta);
        let c1 = 2.0 - 2.0 * (x * x + y * y);
        let c2 = 1.0 - u * u;
        (c1, c2)
    }

    fn branches(theta: f64, q: f64) -> (f64, f64) {
        let (x, y, u) = spectra(theta);
        let b1 = 1.0 - (x.powf(q) + y.powf(q));
        let b3 = 1.0 - (((1.0 + u) / 2.0).powf(q) + ((1.0 - u) / 2.0).powf(q));
        (b1, b3)
    }

    fn spectra(theta: f64) -> (f64, f64, f64) {
        let s2 = theta.sin().powi(2);
        let c2 = theta.cos().powi(2);
        let x = 0.25 + 0.75 * s2;
        let y = 0.75 * c2;
        let u = (1.0 - 3.0 * s2 * c2).sqrt();
        (x, y, u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CVector;
    use crate::measures::{alpha_gme_pure, MeasureSpec};
    use crate::qstate::{
        basis_qubit, kron_vectors, random_pure_state, SiteDims,
    };
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn ghz3() -> PureState {
        pure_state_factory(&StateFamily::Ghz, 3).unwrap()
    }

    fn w3() -> PureState {
        pure_state_factory(&StateFamily::W, 3).unwrap()
    }

    fn bisep() -> PureState {
        let bell = pure_state_factory(&StateFamily::Ghz, 2).unwrap();
        PureState::new(
            SiteDims::qubits(3).unwrap(),
            kron_vectors(&[basis_qubit(0), bell.amplitudes().clone()]),
        )
        .unwrap()
    }

    #[test]
    fn fill_reference_values() {
        assert_abs_diff_eq!(concurrence_fill(&ghz3()).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(concurrence_fill(&bisep()).unwrap(), 0.0, epsilon = 1e-12);
        // all sides 8/9 gives area 8/9
        assert_abs_diff_eq!(
            concurrence_fill(&w3()).unwrap(),
            8.0 / 9.0,
            epsilon = 1e-12
        );
        let two = pure_state_factory(&StateFamily::Ghz, 2).unwrap();
        assert!(concurrence_fill(&two).is_err());
    }

    #[test]
    fn fill_matches_specialized_display() {
        for i in 0..=72 {
            let theta = i as f64 * PI / 72.0;
            let psi = pure_state_factory(&StateFamily::PhiTheta { theta }, 3).unwrap();
            assert_abs_diff_eq!(
                concurrence_fill(&psi).unwrap(),
                phi_theta_closed_forms::fill(theta),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn fill_triangle_inequality_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let dims = SiteDims::qubits(3).unwrap();
        for _ in 0..1000 {
            let psi = random_pure_state(&dims, &mut rng);
            let sides = fill_sides(&psi).unwrap();
            let p = 0.5 * sides.iter().sum::<f64>();
            for &s in &sides {
                assert!(p - s >= -1e-10, "triangle inequality violated: {sides:?}");
            }
        }
    }

    #[test]
    fn gqc_reference_values() {
        for q in [2.0, 2.5, 3.0, 5.0, 12.0] {
            assert_abs_diff_eq!(
                gqc(&ghz3(), q).unwrap(),
                1.0 - 2f64.powf(1.0 - q),
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(
                gqc(&w3(), q).unwrap(),
                1.0 - ((2.0f64 / 3.0).powf(q) + (1.0f64 / 3.0).powf(q)),
                epsilon = 1e-12
            );
        }
        assert_abs_diff_eq!(gqc(&bisep(), 3.0).unwrap(), 0.0, epsilon = 1e-15);
        assert!(gqc(&ghz3(), 1.0).is_err());
    }

    #[test]
    fn min_and_geometric_mean_agree_on_symmetric_states() {
        // random superpositions of the four symmetric basis kets
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let dims = SiteDims::qubits(3).unwrap();
        let dicke: [Vec<usize>; 4] = [
            vec![0b000],
            vec![0b001, 0b010, 0b100],
            vec![0b011, 0b101, 0b110],
            vec![0b111],
        ];
        for _ in 0..20 {
            let mut amps = vec![Complex64::new(0.0, 0.0); 8];
            for kets in &dicke {
                let coeff = crate::linalg::gaussian_complex(&mut rng)
                    / Complex64::new((kets.len() as f64).sqrt(), 0.0);
                for &k in kets {
                    amps[k] = coeff;
                }
            }
            let v = CVector::from_vec(amps);
            let norm = v.norm();
            let psi = PureState::new(dims.clone(), v / Complex64::new(norm, 0.0)).unwrap();
            let q = 2.0 + 3.0 * rng.gen::<f64>();
            let (min_val, _) = q_gme_pure(&psi, q).unwrap();
            let gq = gqc(&psi, q).unwrap();
            assert_abs_diff_eq!(min_val, gq, epsilon = 1e-10);
        }
    }

    #[test]
    fn table_closed_form_and_zeros() {
        let grid: Vec<f64> = (0..=360).map(|i| i as f64 * PI / 360.0).collect();
        let rows = example4_table(&grid, 3.0).unwrap();
        assert_eq!(rows.len(), grid.len());
        for row in &rows {
            assert_abs_diff_eq!(
                row.c_q_gme,
                phi_theta_closed_forms::c_q_gme(row.theta, 3.0),
                epsilon = 1e-10
            );
            assert_abs_diff_eq!(
                row.gqc,
                phi_theta_closed_forms::gqc(row.theta, 3.0),
                epsilon = 1e-10
            );
        }
        for idx in [0, 180, 360] {
            assert!((grid[idx] - [0.0, FRAC_PI_2, PI][idx / 180]).abs() < 1e-12);
            assert!(rows[idx].c_q_gme.abs() < 1e-10);
            assert!(rows[idx].gqc.abs() < 1e-10);
            assert!(rows[idx].fill.abs() < 1e-10);
        }
    }

    #[test]
    fn ordering_flip_exists() {
        let grid: Vec<f64> = (0..=720).map(|i| i as f64 * PI / 720.0).collect();
        let rows = example4_table(&grid, 3.0).unwrap();
        let flip = find_ordering_flip(&rows, 1e-6);
        assert!(flip.is_some(), "no ordering flip found on the theta grid");
    }

    #[test]
    fn lu_invariance_of_comparison_measures() {
        use crate::qstate::{apply_local_unitaries_pure, LocalUnitarySet};
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let dims = SiteDims::qubits(3).unwrap();
        for _ in 0..20 {
            let psi = random_pure_state(&dims, &mut rng);
            let frame = LocalUnitarySet::random(&dims, &mut rng);
            let rotated = apply_local_unitaries_pure(&psi, &frame).unwrap();
            assert_abs_diff_eq!(
                concurrence_fill(&psi).unwrap(),
                concurrence_fill(&rotated).unwrap(),
                epsilon = 1e-9
            );
            assert_abs_diff_eq!(
                gqc(&psi, 3.0).unwrap(),
                gqc(&rotated, 3.0).unwrap(),
                epsilon = 1e-9
            );
            let (a, _) = alpha_gme_pure(&psi, 0.5).unwrap();
            let (b, _) = alpha_gme_pure(&rotated, 0.5).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
            let spec = MeasureSpec::q(2.0, 2).unwrap();
            let (a, _) = crate::measures::q_k_me_pure(&psi, &spec).unwrap();
            let (b, _) = crate::measures::q_k_me_pure(&rotated, &spec).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }
}
