//! Per-frequency update rules shared by the three engines.
//!
//! All functions here are pure in their matrix operands; the engine decides
//! which frequency bin and source they are applied to. Demixing matrices
//! store `wᴴ` in each row, so a source output is `row · x` without
//! conjugation.

use crate::error::{Error, Result};
use crate::numerics::{
    dotc, dotu, hermitian_solve, lifted_cov_left, lifted_cov_right, norm, quad_form, rank_one_update,
    solve_column, unit, CMat, CVec, Lu, C64,
};
use crate::stft::SpectralFrame;

/// Time-varying Gaussian contrast weight `φ = 1 / max(Σ_i |w_iᴴ x_i|², ε)`
/// for source `n`, using the demixing rows currently stored in `demix`.
pub fn contrast_weight(demix: &[CMat], frame: &SpectralFrame, n: usize, floor: f64) -> f64 {
    let power: f64 = demix
        .iter()
        .enumerate()
        .map(|(i, w)| dotu(w.row(n), frame.bin(i)).norm_sqr())
        .sum();
    1.0 / power.max(floor)
}

/// `V ← α·V + (1 − α)·φ·x xᴴ`.
pub fn update_weighted_cov(v: &mut CMat, x: &[C64], phi: f64, alpha: f64) {
    rank_one_update(v, alpha, (1.0 - alpha) * phi, x);
}

/// `C ← α·C + (1 − α)·x xᴴ`.
pub fn update_spatial_cov(c: &mut CMat, x: &[C64], alpha: f64) {
    rank_one_update(c, alpha, 1.0 - alpha, x);
}

fn normalize_against(w: &mut [C64], cov: &CMat, what: &str) -> Result<()> {
    let q = quad_form(cov, w);
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::singular(format!("{what}: non-positive normalizer {q:e}")));
    }
    let s = 1.0 / q.sqrt();
    for z in w.iter_mut() {
        *z *= s;
    }
    Ok(())
}

/// Iterative-projection update of source `n`:
/// `w = (W V)⁻¹ e_n = V⁻¹ (W⁻¹ e_n)`, then scaled so that `wᴴ V w = 1`.
pub fn ip_update(demix: &CMat, weighted: &CMat, n: usize, loading: f64) -> Result<CVec> {
    let target = solve_column(demix, n).map_err(|e| e.within("demixing matrix"))?;
    ip_step(&target, weighted, loading)
}

/// [`ip_update`] with `W⁻¹ e_n` already computed.
pub fn ip_step(target: &[C64], weighted: &CMat, loading: f64) -> Result<CVec> {
    let mut w = hermitian_solve(weighted, target, loading).map_err(|e| e.within("weighted covariance"))?;
    normalize_against(&mut w, weighted, "ip normalization")?;
    Ok(w)
}

/// One IP sweep over all rows of a determined demixing matrix, refreshing
/// each row as soon as it is updated.
pub fn ip_sweep(demix: &mut CMat, weighted: &[CMat], loading: f64) -> Result<()> {
    for (n, v) in weighted.iter().enumerate() {
        let w = ip_update(demix, v, n, loading)?;
        set_filter_row(demix, n, &w);
    }
    Ok(())
}

/// Writes `wᴴ` into row `n`.
pub fn set_filter_row(demix: &mut CMat, n: usize, w: &[C64]) {
    for (dst, src) in demix.row_mut(n).iter_mut().zip(w) {
        *dst = src.conj();
    }
}

/// Extraction filter `w` stored (as `wᴴ`) in row `n`.
pub fn filter_row(demix: &CMat, n: usize) -> CVec {
    demix.row(n).iter().map(|z| z.conj()).collect()
}

/// Auxiliary objective `Σ_n w_nᴴ V_n w_n − 2·log|det W|` of one bin.
pub fn auxiliary_objective(demix: &CMat, weighted: &[CMat]) -> Result<f64> {
    let quad: f64 = weighted
        .iter()
        .enumerate()
        .map(|(n, v)| quad_form(v, &filter_row(demix, n)))
        .sum();
    Ok(quad - 2.0 * Lu::factor(demix)?.log_abs_det())
}

/// Pivot ratio below which the orthogonal-constraint solve is treated as
/// singular.
pub const OC_PIVOT_RATIO: f64 = 1e-6;

/// Orthogonal-constraint solution for the noise block,
/// `J = (R_N C W_sᴴ)(R_S C W_sᴴ)⁻¹`, where `source_rows` is the `N × M`
/// block `W_s` (rows hold `wᴴ`).
///
/// Returns `SingularMatrix` when `R_S C W_sᴴ` is singular or nearly so
/// (pivot ratio under [`OC_PIVOT_RATIO`]); `J` would otherwise blow up.
pub fn oc_update(spatial: &CMat, source_rows: &CMat) -> Result<CMat> {
    let m = spatial.rows();
    let n = source_rows.rows();
    if !spatial.is_square() || source_rows.cols() != m || n >= m {
        return Err(Error::dim(
            "oc_update",
            format!("C is {}x{}, W_s is {}x{}", m, spatial.cols(), n, source_rows.cols()),
        ));
    }
    // G = C W_sᴴ, split into its first N rows (R_S G) and the rest (R_N G).
    let g = spatial.matmul(&source_rows.adjoint())?;
    let top = CMat::from_fn(n, n, |r, c| g[(r, c)]);
    // J · top = bottom  ⇔  topᵀ · J_rᵀ = bottom_rᵀ for every row r.
    let lu = Lu::factor(&top.transpose()).map_err(|e| e.within("orthogonal constraint"))?;
    if lu.pivot_ratio() < OC_PIVOT_RATIO {
        return Err(Error::singular(format!(
            "orthogonal constraint: pivot ratio {:e}",
            lu.pivot_ratio()
        )));
    }
    let mut j = CMat::zeros(m - n, n);
    for r in 0..m - n {
        let sol = lu.solve(g.row(n + r));
        j.row_mut(r).copy_from_slice(&sol);
    }
    Ok(j)
}

/// Writes the noise block `U = [J, −I]` into rows `N..M` of `demix`.
pub fn set_noise_rows(demix: &mut CMat, coupling: &CMat) {
    let n = coupling.cols();
    let m = demix.cols();
    for r in 0..m - n {
        let row = demix.row_mut(n + r);
        row[..n].copy_from_slice(coupling.row(r));
        for (k, z) in row[n..].iter_mut().enumerate() {
            *z = if k == r { C64::new(-1.0, 0.0) } else { C64::new(0.0, 0.0) };
        }
    }
}

/// First `N` columns of `W⁻¹` for a demixing matrix whose rows `N..M` are
/// `[J, −I]`. Writing the source rows as `[A, B]`, these columns are
/// `[X; J X]` with `X = (A + B J)⁻¹`, so only an `N × N` system is factored.
pub fn source_columns_of_inverse(demix: &CMat, coupling: &CMat) -> Result<CMat> {
    let m = demix.rows();
    let n = coupling.cols();
    if !demix.is_square() || coupling.rows() + n != m {
        return Err(Error::dim(
            "source_columns_of_inverse",
            format!("W is {}x{}, J is {}x{}", m, demix.cols(), coupling.rows(), n),
        ));
    }
    let schur = CMat::from_fn(n, n, |r, c| {
        let row = demix.row(r);
        row[c] + (0..m - n).map(|k| row[n + k] * coupling[(k, c)]).sum::<C64>()
    });
    let lu = Lu::factor(&schur)?;
    let mut out = CMat::zeros(m, n);
    for c in 0..n {
        let x = lu.solve(&unit(n, c));
        for (r, &v) in x.iter().enumerate() {
            out[(r, c)] = v;
        }
        for k in 0..m - n {
            out[(n + k, c)] = dotu(coupling.row(k), &x);
        }
    }
    Ok(out)
}

/// Result of one sub-filter solve in the alternating bilinear update.
#[derive(Debug, Clone)]
pub struct SubFilterStep {
    /// Normalized sub-filter, `filterᴴ · lifted_cov · filter = 1`.
    pub filter: CVec,
    /// Solution of `lifted_cov · w = rhs` before normalization.
    pub unnormalized: CVec,
    /// Lifted covariance `Δᴴ V Δ`.
    pub lifted_cov: CMat,
    /// Right-hand side `Δᴴ W⁻¹ e_n`.
    pub rhs: CVec,
}

fn sub_filter_step(lifted_cov: CMat, rhs: CVec, loading: f64, what: &str) -> Result<SubFilterStep> {
    let unnormalized = hermitian_solve(&lifted_cov, &rhs, loading).map_err(|e| e.within(what))?;
    let mut filter = unnormalized.clone();
    normalize_against(&mut filter, &lifted_cov, what)?;
    Ok(SubFilterStep {
        filter,
        unnormalized,
        lifted_cov,
        rhs,
    })
}

/// Updates the first (length `M1`) factor with the second held fixed.
///
/// `target` is `W⁻¹ e_n` for the current demixing matrix. The lift is
/// `Δ1 = I_{M1} ⊗ w2`, giving `w1 = (Δ1ᴴ V Δ1)⁻¹ Δ1ᴴ W⁻¹ e_n`.
pub fn bilinear_update_first(
    target: &[C64],
    weighted: &CMat,
    second: &[C64],
    m1: usize,
    loading: f64,
) -> Result<SubFilterStep> {
    if m1 * second.len() != target.len() {
        return Err(Error::dim(
            "bilinear_update_first",
            format!("{m1}·{} != {}", second.len(), target.len()),
        ));
    }
    let m2 = second.len();
    let rhs = (0..m1).map(|p| dotc(second, &target[p * m2..(p + 1) * m2])).collect();
    sub_filter_step(lifted_cov_left(weighted, second, m1)?, rhs, loading, "first sub-filter")
}

/// Updates the second (length `M2`) factor with the first held fixed,
/// using `Δ2 = w1 ⊗ I_{M2}`.
pub fn bilinear_update_second(
    target: &[C64],
    weighted: &CMat,
    first: &[C64],
    m2: usize,
    loading: f64,
) -> Result<SubFilterStep> {
    if m2 * first.len() != target.len() {
        return Err(Error::dim(
            "bilinear_update_second",
            format!("{}·{m2} != {}", first.len(), target.len()),
        ));
    }
    let rhs = (0..m2)
        .map(|q| first.iter().enumerate().map(|(p, a)| a.conj() * target[p * m2 + q]).sum())
        .collect();
    sub_filter_step(lifted_cov_right(weighted, first, m2)?, rhs, loading, "second sub-filter")
}

/// Moves scale between the factors so that `‖w1‖ = 1`; `w1 ⊗ w2` is unchanged.
pub fn balance_factors(first: &mut [C64], second: &mut [C64]) {
    let s = norm(first);
    if s > 0.0 && s.is_finite() {
        for z in first.iter_mut() {
            *z /= s;
        }
        for z in second.iter_mut() {
            *z *= s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{kron, unit, CVec, ONE, ZERO};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn rvec(rng: &mut ChaCha8Rng, n: usize) -> CVec {
        (0..n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
    }

    fn rmat(rng: &mut ChaCha8Rng, r: usize, cols: usize) -> CMat {
        CMat::from_fn(r, cols, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn rpd(rng: &mut ChaCha8Rng, n: usize) -> CMat {
        let g = rmat(rng, n, n);
        let mut a = g.adjoint_matmul(&g).unwrap();
        for i in 0..n {
            a[(i, i)] += 0.5;
        }
        a
    }

    fn well_conditioned(rng: &mut ChaCha8Rng, n: usize) -> CMat {
        let mut w = rmat(rng, n, n);
        for i in 0..n {
            w[(i, i)] += 2.5;
        }
        w
    }

    fn residual(a: &CMat, x: &[C64], b: &[C64]) -> f64 {
        let ax = a.matvec(x).unwrap();
        let r: CVec = ax.iter().zip(b).map(|(p, q)| p - q).collect();
        norm(&r) / norm(b)
    }

    fn colinear(a: &[C64], b: &[C64]) -> bool {
        // |aᴴb| = ‖a‖‖b‖ iff a and b differ by a complex scalar
        let ab = crate::numerics::dotc(a, b).norm();
        (ab - norm(a) * norm(b)).abs() <= 1e-10 * norm(a) * norm(b)
    }

    #[test]
    fn contrast_weight_examples() {
        let bins = 4;
        let demix = vec![CMat::identity(2); bins];
        let frame = SpectralFrame::from_bins(0, &vec![vec![c(0.6, 0.8), c(3.0, 0.0)]; bins]).unwrap();
        assert!((contrast_weight(&demix, &frame, 0, 1e-12) - 0.25).abs() < 1e-15);

        let doubled = SpectralFrame::from_bins(0, &vec![vec![c(1.2, 1.6), c(6.0, 0.0)]; bins]).unwrap();
        let ratio = contrast_weight(&demix, &frame, 0, 1e-12) / contrast_weight(&demix, &doubled, 0, 1e-12);
        assert!((ratio - 4.0).abs() < 1e-12);

        let silent = SpectralFrame::zeros(0, bins, 2);
        let phi = contrast_weight(&demix, &silent, 1, 1e-12);
        assert_eq!(phi, 1e12);
        assert!(phi.is_finite());
    }

    #[test]
    fn weighted_cov_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v0 = rpd(&mut rng, 3);
        let x = rvec(&mut rng, 3);

        let mut v = v0.clone();
        update_weighted_cov(&mut v, &x, 3.0, 1.0);
        assert_eq!(v, v0);

        let mut v = v0.clone();
        update_weighted_cov(&mut v, &x, 1.0, 0.0);
        let outer = CMat::from_fn(3, 3, |r, k| x[r] * x[k].conj());
        assert!(v.sub(&outer).unwrap().max_abs() < 1e-15);

        let mut v = CMat::identity(3);
        update_weighted_cov(&mut v, &unit(3, 0), 2.0, 0.5);
        assert_eq!(v, CMat::from_diag(&[c(1.5, 0.0), c(0.5, 0.0), c(0.5, 0.0)]));
    }

    #[test]
    fn spatial_cov_examples() {
        let c0 = CMat::from_rows(&[[c(2.0, 0.0), c(0.0, 1.0)], [c(0.0, -1.0), c(1.0, 0.0)]]);
        let x = [ONE, c(0.0, 1.0)];
        let mut cc = c0.clone();
        update_spatial_cov(&mut cc, &x, 1.0);
        assert_eq!(cc, c0);
        let mut cc = c0.clone();
        update_spatial_cov(&mut cc, &x, 0.0);
        assert_eq!(cc, CMat::from_rows(&[[ONE, c(0.0, -1.0)], [c(0.0, 1.0), ONE]]));
        let mut cc = c0.clone();
        update_spatial_cov(&mut cc, &x, 0.5);
        assert_eq!(cc, CMat::from_diag(&[c(1.5, 0.0), ONE]));
    }

    #[test]
    fn ip_update_closed_forms() {
        assert_eq!(ip_update(&CMat::identity(3), &CMat::identity(3), 1, 0.0).unwrap(), unit(3, 1));
        let v = CMat::from_diag(&[c(4.0, 0.0), ONE]);
        let w = ip_update(&CMat::identity(2), &v, 0, 0.0).unwrap();
        assert!((w[0] - c(0.5, 0.0)).norm() < 1e-15 && w[1] == ZERO);
    }

    #[test]
    fn ip_update_random_residual_and_normalization() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let w = well_conditioned(&mut rng, 3);
            let v = rpd(&mut rng, 3);
            let n = rng.random_range(0..3);
            let out = ip_update(&w, &v, n, 0.0).unwrap();
            assert!((quad_form(&v, &out) - 1.0).abs() <= 1e-10);
            // pre-normalization solution is a scalar multiple of out
            let wv = w.matmul(&v).unwrap();
            let pre = crate::numerics::lu_solve(&wv, &unit(3, n)).unwrap();
            assert!(residual(&wv, &pre, &unit(3, n)) <= 1e-9);
            assert!(colinear(&pre, &out));
        }
    }

    #[test]
    fn ip_update_singular_demix_reports_context() {
        let err = ip_update(&CMat::zeros(2, 2), &CMat::identity(2), 0, 0.0).unwrap_err();
        assert!(err.to_string().contains("demixing matrix"), "{err}");
    }

    #[test]
    fn oc_update_orthogonal_blocks() {
        let rs = CMat::from_fn(2, 4, |r, k| if r == k { ONE } else { ZERO });
        let j = oc_update(&CMat::identity(4), &rs).unwrap();
        assert_eq!(j, CMat::zeros(2, 2));
        let diag = CMat::from_diag(&[c(3.0, 0.0), c(1.0, 0.0), c(7.0, 0.0), c(0.2, 0.0)]);
        assert_eq!(oc_update(&diag, &rs).unwrap(), CMat::zeros(2, 2));
    }

    #[test]
    fn source_columns_of_inverse_match_full_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let m = rng.random_range(2..10);
            let n = rng.random_range(1..m);
            let mut demix = rmat(&mut rng, m, m);
            let j = rmat(&mut rng, m - n, n);
            set_noise_rows(&mut demix, &j);
            let fast = source_columns_of_inverse(&demix, &j).unwrap();
            for c in 0..n {
                let full = solve_column(&demix, c).unwrap();
                let scale = norm(&full).max(1.0);
                for (r, v) in full.iter().enumerate() {
                    assert!((fast[(r, c)] - v).norm() <= 1e-9 * scale);
                }
            }
        }
    }

    #[test]
    fn oc_update_rejects_nearly_singular_blocks() {
        // Source rows e_0, e_3 against C = I + tiny data: R_S C W_sᴴ is
        // nearly singular and J would be of order 1/ε.
        let rs = CMat::from_fn(2, 4, |r, k| if k == 3 * r { ONE } else { ZERO });
        let x = [c(1e-5, 0.0), c(1e-5, 1e-5), c(0.0, 1e-5), c(1e-5, 0.0)];
        let mut cov = CMat::identity(4);
        update_spatial_cov(&mut cov, &x, 0.5);
        let err = oc_update(&cov, &rs).unwrap_err();
        assert!(matches!(err, Error::SingularMatrix { .. }), "{err}");
        assert!(matches!(oc_update(&CMat::identity(4), &rs), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn oc_update_orthogonality_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let m = rng.random_range(2..8);
            let n = rng.random_range(1..m);
            let cov = rpd(&mut rng, m);
            let ws = rmat(&mut rng, n, m);
            let j = oc_update(&cov, &ws).unwrap();
            let mut u = CMat::zeros(m - n, m);
            for r in 0..m - n {
                u.row_mut(r)[..n].copy_from_slice(j.row(r));
                u[(r, n + r)] = c(-1.0, 0.0);
            }
            let res = u.matmul(&cov).unwrap().matmul(&ws.adjoint()).unwrap().frobenius_norm();
            assert!(res <= 1e-8 * cov.frobenius_norm() * ws.frobenius_norm());
        }
    }

    #[test]
    fn set_noise_rows_layout() {
        let mut w = CMat::identity(4);
        let j = CMat::from_rows(&[[c(1.0, 1.0), c(2.0, 0.0)], [c(3.0, 0.0), c(4.0, 0.0)]]);
        set_noise_rows(&mut w, &j);
        assert_eq!(w.row(2), &[c(1.0, 1.0), c(2.0, 0.0), c(-1.0, 0.0), ZERO]);
        assert_eq!(w.row(3), &[c(3.0, 0.0), c(4.0, 0.0), ZERO, c(-1.0, 0.0)]);
        assert_eq!(w.row(0), unit(4, 0).as_slice());
    }

    #[test]
    fn bilinear_first_identity_case() {
        let target = solve_column(&CMat::identity(4), 0).unwrap();
        let step = bilinear_update_first(&target, &CMat::identity(4), &unit(2, 0), 2, 0.0).unwrap();
        assert_eq!(step.lifted_cov, CMat::identity(2));
        assert_eq!(step.rhs, unit(2, 0));
        assert_eq!(step.filter, unit(2, 0));
    }

    #[test]
    fn bilinear_second_identity_case() {
        let target = solve_column(&CMat::identity(4), 0).unwrap();
        let step = bilinear_update_second(&target, &CMat::identity(4), &unit(2, 0), 2, 0.0).unwrap();
        assert_eq!(step.filter, unit(2, 0));
    }

    #[test]
    fn bilinear_first_degenerates_to_ip_when_second_is_scalar() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let m = rng.random_range(2..7);
            let demix = well_conditioned(&mut rng, m);
            let v = rpd(&mut rng, m);
            let n = rng.random_range(0..m);
            let target = solve_column(&demix, n).unwrap();
            let pre_ip = hermitian_solve(&v, &target, 0.0).unwrap();
            let ip = ip_update(&demix, &v, n, 0.0).unwrap();
            let step = bilinear_update_first(&target, &v, &[ONE], m, 0.0).unwrap();
            assert!(colinear(&step.unnormalized, &pre_ip));
            // normalization makes them equal up to a unit-modulus scalar
            assert!(colinear(&ip, &step.filter));
            assert!((norm(&ip) - norm(&step.filter)).abs() <= 1e-10 * norm(&ip));
            assert!((quad_form(&v, &step.filter) - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn bilinear_second_degenerates_to_ip_when_first_is_scalar() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let m = rng.random_range(2..7);
            let demix = well_conditioned(&mut rng, m);
            let v = rpd(&mut rng, m);
            let n = rng.random_range(0..m);
            let target = solve_column(&demix, n).unwrap();
            let ip = ip_update(&demix, &v, n, 0.0).unwrap();
            let step = bilinear_update_second(&target, &v, &[c(0.3, -0.4)], m, 0.0).unwrap();
            assert!(colinear(&step.filter, &ip));
        }
    }

    #[test]
    fn bilinear_stationarity_and_normalization() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let m2 = rng.random_range(1..4);
            let m1 = rng.random_range(m2..5);
            let m = m1 * m2;
            let demix = well_conditioned(&mut rng, m);
            let v = rpd(&mut rng, m);
            let n = rng.random_range(0..m);
            let target = solve_column(&demix, n).unwrap();
            let w2 = rvec(&mut rng, m2);
            let s1 = bilinear_update_first(&target, &v, &w2, m1, 0.0).unwrap();
            assert!(residual(&s1.lifted_cov, &s1.unnormalized, &s1.rhs) <= 1e-9);
            assert!((quad_form(&s1.lifted_cov, &s1.filter) - 1.0).abs() <= 1e-10);
            let s2 = bilinear_update_second(&target, &v, &s1.filter, m2, 0.0).unwrap();
            assert!(residual(&s2.lifted_cov, &s2.unnormalized, &s2.rhs) <= 1e-9);
            assert!((quad_form(&s2.lifted_cov, &s2.filter) - 1.0).abs() <= 1e-10);
            // the combined filter has the same quadratic form against V
            let w = kron(&s1.filter, &s2.filter);
            assert!((quad_form(&v, &w) - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn balance_keeps_kronecker_product() {
        let mut a = vec![c(3.0, 4.0), c(0.0, 0.0)];
        let mut b = vec![c(1.0, -1.0), c(2.0, 0.5)];
        let before = kron(&a, &b);
        balance_factors(&mut a, &mut b);
        assert!((norm(&a) - 1.0).abs() < 1e-15);
        for (x, y) in kron(&a, &b).iter().zip(&before) {
            assert!((x - y).norm() <= 1e-14);
        }
    }

    #[test]
    fn ip_sweeps_never_increase_the_auxiliary_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let n = rng.random_range(2..5);
            let vs: Vec<CMat> = (0..n).map(|_| rpd(&mut rng, n)).collect();
            let mut w = well_conditioned(&mut rng, n);
            let mut prev = auxiliary_objective(&w, &vs).unwrap();
            for _ in 0..20 {
                ip_sweep(&mut w, &vs, crate::numerics::DEFAULT_LOADING).unwrap();
                let cur = auxiliary_objective(&w, &vs).unwrap();
                assert!(cur <= prev + 1e-9 * prev.abs().max(1.0), "{cur} > {prev}");
                prev = cur;
            }
        }
    }
}
