//! Verification suite: every criterion below prints a single PASS line with
//! the measured quantities (run with `--nocapture` to see them). All
//! tolerances are pinned here, not computed.

use std::time::Instant;

use confcurve::asymptotics::{cornish_fisher_quantile, edgeworth_tail, lemma1_invert, median_expansion};
use confcurve::calib::mc_calibration_for;
use confcurve::confidence::{cc_from_w, exact_cd};
use confcurve::dist::{gamma_cdf, gamma_quantile, std_normal_cdf, std_normal_quantile};
use confcurve::expfam::ExpFamModel;
use confcurve::export::write_comparison_csv;
use confcurve::gpd::GpdStudy;
use confcurve::grid::linspace;
use confcurve::mbc::{corrected_curve, gpd_corrected_curve, GpdPipelineConfig, MedianFunction};
use confcurve::mc::{run_pool, substream, McConfig};
use confcurve::models::{ExpRate, GammaMean, Model, NormalTransform, NormalVariance};
use confcurve::series::TruncatedSeries;
use confcurve::studies::{
    self, corrected_vs_exact_gap, directed_equivalence_gap, directed_normality, pivot_tail_cells, uniformity_ks,
    UniformityKind,
};
use num_rational::BigRational;
use num_traits::One;
use rand::Rng;

const DATA_LANE: u64 = u32::MAX as u64;

fn central_grid(theta_hat: f64, sigma: f64, points: usize) -> Vec<f64> {
    linspace(theta_hat - 2.0 * sigma, theta_hat + 2.0 * sigma, points)
}

/// Criterion 1: variance-model demo at n = 10, theta = 4, 50000 calibration
/// replicates. The corrected distribution must sit within 0.01 of the exact
/// one on the central grid while the uncorrected gap stays at least 5x
/// wider, single-threaded, within 60 s.
#[test]
fn acceptance_1_variance_demo() {
    let t0 = Instant::now();
    let (gap_star, gap_plain) = run_pool(1, || {
        let m = NormalVariance::new(10);
        let mut rng = substream(1, DATA_LANE, 0);
        let data = m.sample(4.0, &mut rng);
        let mc = McConfig::new(1, 50_000).with_workers(1);
        let calib = mc_calibration_for(&m, false, &mc).unwrap().unwrap();
        let calib_star = mc_calibration_for(&m, true, &mc).unwrap().unwrap();
        let median = MedianFunction::exact_from_model(&m).unwrap();
        let cc = cc_from_w(&m, &data, &calib).unwrap();
        let star = corrected_curve(&m, &data, &median, &calib_star).unwrap();
        let cd = exact_cd(&m, &data).unwrap();
        let theta_hat = m.mle(&data).unwrap();
        let mut gap_star: f64 = 0.0;
        let mut gap_plain: f64 = 0.0;
        for t in central_grid(theta_hat, m.stderr(theta_hat), 101) {
            let c = cd.cdf(t).unwrap();
            gap_star = gap_star.max((star.hstar(t).unwrap() - c).abs());
            gap_plain = gap_plain.max((cc.h(t).unwrap() - c).abs());
        }
        (gap_star, gap_plain)
    });
    let secs = t0.elapsed().as_secs_f64();
    assert!(gap_star <= 0.01, "corrected gap {gap_star}");
    assert!(gap_plain >= 5.0 * gap_star, "plain {gap_plain} vs corrected {gap_star}");
    assert!(secs <= 60.0, "runtime {secs:.1}s");
    println!("ACCEPTANCE 1: PASS - max|H*-C| = {gap_star:.4} <= 0.01, max|H-C| = {gap_plain:.4} >= 5x, {secs:.1}s");
}

/// Criterion 2: normal-transformation demo, a = z0 = 0.3, estimate 10, with
/// 100000 calibration replicates: corrected gap at most 0.005 within 120 s.
#[test]
fn acceptance_2_transform_demo() {
    let t0 = Instant::now();
    let m = NormalTransform::new(0.3, 0.3);
    let data = vec![10.0];
    let mc = McConfig::new(1, 100_000);
    let calib_star = mc_calibration_for(&m, true, &mc).unwrap().unwrap();
    let median = MedianFunction::exact_from_model(&m).unwrap();
    let star = corrected_curve(&m, &data, &median, &calib_star).unwrap();
    let cd = exact_cd(&m, &data).unwrap();
    let phi_hat = m.mle(&data).unwrap();
    let mut gap: f64 = 0.0;
    for t in central_grid(phi_hat, m.stderr(phi_hat), 101) {
        gap = gap.max((star.hstar(t).unwrap() - cd.cdf(t).unwrap()).abs());
    }
    let secs = t0.elapsed().as_secs_f64();
    assert!(gap <= 0.005, "corrected gap {gap}");
    assert!(secs <= 120.0, "runtime {secs:.1}s");
    println!("ACCEPTANCE 2: PASS - max|H*-C| = {gap:.5} <= 0.005, {secs:.1}s");
}

/// Criterion 3: third-order tail-symmetry rate check. e(n) is the median
/// over 500 simulated datasets of the sup gap |H* - C| on the central
/// window; quadrupling n must at least halve it, for both the variance and
/// the exponential-rate model, within 10 minutes.
#[test]
fn acceptance_3_tail_symmetry_rate() {
    let t0 = Instant::now();
    let datasets = 500;
    let mut lines = Vec::new();
    for (name, build, theta) in [
        ("normal-var", (|n| Box::new(NormalVariance::new(n)) as Box<dyn Model>) as fn(usize) -> Box<dyn Model>, 4.0),
        ("exp-rate", (|n| Box::new(ExpRate::new(n)) as Box<dyn Model>) as fn(usize) -> Box<dyn Model>, 1.0),
    ] {
        let gap = |n: usize| {
            let m = build(n);
            corrected_vs_exact_gap(m.as_ref(), theta, datasets, &McConfig::new(33, datasets)).unwrap()
        };
        let (e10, e40, e160) = (gap(10), gap(40), gap(160));
        let (r1, r2) = (e40 / e10, e160 / e40);
        assert!(r1 <= 0.5, "{name}: e(40)/e(10) = {r1:.3}");
        assert!(r2 <= 0.5, "{name}: e(160)/e(40) = {r2:.3}");
        lines.push(format!("{name} e = ({e10:.2e}, {e40:.2e}, {e160:.2e}), ratios ({r1:.3}, {r2:.3})"));
    }
    let secs = t0.elapsed().as_secs_f64();
    assert!(secs <= 600.0, "runtime {secs:.1}s");
    println!("ACCEPTANCE 3: PASS - {}; {secs:.1}s", lines.join("; "));
}

/// Criterion 4: second-order equivalence of the corrected and modified
/// directed likelihoods: d(4n)/d(n) <= 0.35, plus the corrected root is
/// closer to N(0,1) than the plain one at n = 10 over 10^4 replicates.
#[test]
fn acceptance_4_directed_equivalence_rate() {
    let mut lines = Vec::new();
    for (name, build, theta) in [
        ("normal-var", (|n| Box::new(NormalVariance::new(n)) as Box<dyn Model>) as fn(usize) -> Box<dyn Model>, 4.0),
        ("exp-mean", (|n| Box::new(GammaMean::new(1.0, n)) as Box<dyn Model>) as fn(usize) -> Box<dyn Model>, 1.0),
    ] {
        let gap = |n: usize| {
            let m = build(n);
            directed_equivalence_gap(m.as_ref(), theta, 500, &McConfig::new(34, 500)).unwrap()
        };
        let (d10, d40, d160) = (gap(10), gap(40), gap(160));
        let (r1, r2) = (d40 / d10, d160 / d40);
        assert!(r1 <= 0.35, "{name}: d(40)/d(10) = {r1:.3}");
        assert!(r2 <= 0.35, "{name}: d(160)/d(40) = {r2:.3}");
        let m10 = build(10);
        let (ks_rb, ks_r) = directed_normality(m10.as_ref(), theta, &McConfig::new(35, 10_000)).unwrap();
        assert!(ks_rb < ks_r, "{name}: KS corrected {ks_rb:.4} !< plain {ks_r:.4}");
        lines.push(format!("{name} ratios ({r1:.3}, {r2:.3}), KS {ks_rb:.4} < {ks_r:.4}"));
    }
    println!("ACCEPTANCE 4: PASS - {}", lines.join("; "));
}

/// Criterion 5: exactness of the rational series inversion: the printed
/// coefficient formulas, plus f(g(x)) - f(x) = 0 through order 6 for 100
/// random rational inputs, inside 5 seconds.
#[test]
fn acceptance_5_series_inversion_exact() {
    let t0 = Instant::now();
    let rat = |n: i64, d: i64| BigRational::new(n.into(), d.into());
    // coefficient formulas on a fixed input
    let (b3, b4, b5, b6) = (rat(3, 7), rat(-2, 5), rat(1, 9), rat(4, 11));
    let a = lemma1_invert(&[b3.clone(), b4.clone(), b5.clone(), b6]).unwrap();
    assert_eq!(a[0], b3);
    assert_eq!(a[1], &b3 * &b3);
    assert_eq!(a[2], &b5 - rat(2, 1) * &b3 * &b4 + rat(2, 1) * &b3 * &b3 * &b3);
    assert_eq!(a[3], rat(3, 1) * &b3 * &b5 - rat(6, 1) * &b3 * &b3 * &b4 + rat(4, 1) * &b3 * &b3 * &b3 * &b3);

    // self-consistency through order 6 on random rational coefficients
    let mut rng = substream(55, 0, 0);
    for trial in 0..100 {
        let mut bs = Vec::new();
        for _ in 0..4 {
            let num = rng.random_range(-20i64..=20);
            let den = rng.random_range(1i64..=20);
            bs.push(rat(num, den * 20)); // |b| <= 1
        }
        let a = lemma1_invert(&bs).unwrap();
        let order = 6;
        let mut f = TruncatedSeries::zero(order);
        f.set_coeff(2, BigRational::one());
        for (i, b) in bs.iter().enumerate() {
            f.set_coeff(i + 3, b.clone());
        }
        let mut g = TruncatedSeries::zero(order);
        g.set_coeff(1, -BigRational::one());
        for (i, ak) in a.iter().enumerate() {
            if i + 2 <= order {
                g.set_coeff(i + 2, -ak.clone());
            }
        }
        let fg = f.compose(&g).unwrap();
        for k in 0..=order {
            assert_eq!(fg.coeff(k), f.coeff(k), "trial {trial}, order {k}");
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    assert!(secs <= 5.0, "runtime {secs:.2}s");
    println!("ACCEPTANCE 5: PASS - printed coefficients exact, 100 random inversions cancel through order 6, {secs:.2}s");
}

/// Criterion 6: the quantile, tail and median expansions each beat their
/// zeroth-order counterparts against exact gamma-family oracles at
/// n in {20, 80}, with strictly decreasing error in n at every probed alpha.
#[test]
fn acceptance_6_expansion_oracles() {
    let alphas = [0.05, 0.25, 0.5, 0.75, 0.95];
    // gamma-pivot families: (rho3, rho4, pivot shape s(n) = kappa n)
    for (name, rho3, rho4, kappa) in [("normal-var", 2.0 * 2.0_f64.sqrt(), 12.0, 0.5), ("exp-mean", 2.0, 6.0, 1.0)] {
        for &alpha in &alphas {
            let exact_q = |n: usize| {
                let s = kappa * n as f64;
                (gamma_quantile(s, 1.0 / s, alpha) - 1.0) / (1.0 / s.sqrt())
            };
            let cf_err = |n: usize| (cornish_fisher_quantile(rho3, rho4, n, alpha) - exact_q(n)).abs();
            let z_err = |n: usize| (std_normal_quantile(alpha) - exact_q(n)).abs();
            assert!(cf_err(20) < z_err(20), "{name} alpha {alpha}: quantile expansion fails to beat normal at n=20");
            assert!(cf_err(80) < z_err(80), "{name} alpha {alpha}: quantile expansion fails to beat normal at n=80");
            assert!(cf_err(80) < cf_err(20), "{name} alpha {alpha}: quantile error not decreasing");

            let u = std_normal_quantile(alpha);
            let exact_tail = |n: usize| {
                let s = kappa * n as f64;
                1.0 - gamma_cdf(s, 1.0 / s, 1.0 + u / s.sqrt())
            };
            let ew_err = |n: usize| (edgeworth_tail(rho3, n, u) - exact_tail(n)).abs();
            let z_tail_err = |n: usize| (std_normal_cdf(-u) - exact_tail(n)).abs();
            assert!(ew_err(20) < z_tail_err(20), "{name} alpha {alpha}: tail expansion fails at n=20");
            assert!(ew_err(80) < z_tail_err(80), "{name} alpha {alpha}: tail expansion fails at n=80");
            assert!(ew_err(80) < ew_err(20), "{name} alpha {alpha}: tail error not decreasing");
        }
        // median expansion against the exact median, zeroth order b = theta
        let med_err = |n: usize| {
            let expfam = if kappa == 0.5 { ExpFamModel::normal_variance(n) } else { ExpFamModel::exponential_mean(n) };
            let s = kappa * n as f64;
            let exact = gamma_quantile(s, 1.0 / s, 0.5);
            (median_expansion(&expfam, 1.0) - exact).abs()
        };
        let zeroth = |n: usize| {
            let s = kappa * n as f64;
            (1.0 - gamma_quantile(s, 1.0 / s, 0.5)).abs()
        };
        assert!(med_err(20) < zeroth(20) && med_err(80) < zeroth(80), "{name}: median expansion fails to beat zeroth order");
        assert!(med_err(80) < med_err(20), "{name}: median expansion error not decreasing");
    }
    println!("ACCEPTANCE 6: PASS - quantile/tail/median expansions beat zeroth order with decreasing error at n = 20, 80");
}

/// Criterion 7: uniformity of C(theta; X) and cc*(theta; X) at the truth
/// (KS below the 1% critical value over 10^4 replicates), equal-tailed 90%
/// level sets for cc*, and exact-F coverage at three levels.
#[test]
fn acceptance_7_uniformity_and_coverage() {
    let reps = 10_000;
    let critical = studies::ks_critical_1pct(reps);
    let models: Vec<(Box<dyn Model>, f64)> = vec![
        (Box::new(NormalVariance::new(10)), 4.0),
        (Box::new(ExpRate::new(10)), 1.0),
        (Box::new(GammaMean::new(2.0, 10)), 1.0),
        (Box::new(NormalTransform::new(0.3, 0.3)), 5.0),
    ];
    for (m, theta) in &models {
        let cfg = McConfig::new(71, reps);
        let ks_c = uniformity_ks(m.as_ref(), *theta, UniformityKind::ExactCd, &cfg).unwrap();
        assert!(ks_c < critical, "{}: C uniformity KS {ks_c:.4}", m.key());
        let ks_star = uniformity_ks(m.as_ref(), *theta, UniformityKind::CorrectedCurve, &cfg).unwrap();
        assert!(ks_star < critical, "{}: cc* uniformity KS {ks_star:.4}", m.key());
    }
    // equal-tailed property of the corrected 90% level set
    let tail_models: Vec<(Box<dyn Model>, f64)> =
        vec![(Box::new(NormalVariance::new(10)), 4.0), (Box::new(ExpRate::new(10)), 1.0)];
    for (m, theta) in &tail_models {
        let res = pivot_tail_cells(m.as_ref(), *theta, true, &[0.1], &McConfig::new(72, reps)).unwrap();
        let c = &res.cells[0];
        assert!((c.left_miss - 0.05).abs() <= 3.0 * c.se, "{}: left {:.4}", m.key(), c.left_miss);
        assert!((c.right_miss - 0.05).abs() <= 3.0 * c.se, "{}: right {:.4}", m.key(), c.right_miss);
    }
    // coverage of the uncorrected exact-F curve at three levels
    let m = NormalVariance::new(10);
    let res = pivot_tail_cells(&m, 4.0, false, &[0.5, 0.1, 0.05], &McConfig::new(73, reps)).unwrap();
    for c in &res.cells {
        let se_cov = (c.alpha * (1.0 - c.alpha) / c.replicates as f64).sqrt();
        assert!(
            (c.coverage - (1.0 - c.alpha)).abs() <= 3.0 * se_cov,
            "coverage at alpha {}: {:.4}",
            c.alpha,
            c.coverage
        );
    }
    println!("ACCEPTANCE 7: PASS - C and cc* uniform (KS < {critical:.4}), cc* tails equal at 90%, exact-F coverage on target");
}

/// Criterion 8: the GPD pipeline completes end to end on synthetic data at
/// the default budget (41 nodes, 15000 replicates per node), with at least
/// 90% of nodes succeeding, the median function anchored at zero and
/// monotone, and the curve minimized at the median-unbiased back-transform.
///
/// Reference values reported with the original (unpublished) race data:
/// a = 0.1821, sigma = 0.0745, p = 0.0345, 90% interval [0.0002, 0.1965],
/// corrected upper quantile 0.2278, Bartlett factor about 1.07. They are
/// documentation, not assertions; the synthetic run prints its own values.
#[test]
fn acceptance_8_gpd_pipeline() {
    let t0 = Instant::now();
    let mut rng = substream(11, DATA_LANE, 0);
    let study = GpdStudy::synthetic(0.18, 0.075, 195, 24.375, 0.285, &mut rng).unwrap();
    let cfg = GpdPipelineConfig::default();
    assert_eq!(cfg.nodes, 41);
    assert_eq!(cfg.replicates_per_node, 15_000);
    let pipe = gpd_corrected_curve(&study, &cfg).unwrap();

    assert!(pipe.p_nodes.len() * 10 >= cfg.nodes * 9, "only {}/{} nodes", pipe.p_nodes.len(), cfg.nodes);
    assert_eq!(pipe.median.eval(0.0).unwrap(), 0.0, "median anchor");
    let p_hi = *pipe.p_nodes.last().unwrap();
    let mut prev = -1.0;
    for i in 0..=400 {
        let b = pipe.median.eval(p_hi * i as f64 / 400.0).unwrap();
        assert!(b >= prev - 1e-12, "median not monotone");
        prev = b;
    }
    let want = pipe.median.inverse(study.p_hat()).unwrap();
    assert!((pipe.corrected.minimizer() - want).abs() < 1e-9, "minimizer");

    // direction check: when b(p) < p near the upper tail the correction
    // pushes the upper confidence quantile outward
    let b_at = pipe.median.eval(study.p_hat() * 2.0).unwrap();
    let (_, upper_star) = pipe.corrected.curve().level_set(0.90).unwrap();
    let upper_bartlett = {
        let f = |p: f64| pipe.cc_bartlett(p).map(|c| c - 0.90).unwrap_or(f64::NAN);
        confcurve::roots::bisect(&f, study.p_hat(), p_hi, 1e-10).unwrap()
    };
    if b_at < study.p_hat() * 2.0 {
        assert!(
            upper_star > upper_bartlett,
            "corrected upper quantile {upper_star:.4} vs Bartlett {upper_bartlett:.4}"
        );
    }
    let secs = t0.elapsed().as_secs_f64();
    println!(
        "ACCEPTANCE 8: PASS - a_hat {:.4}, sigma_hat {:.4}, p_hat {:.5}, bartlett {:.3}, nodes {}/{}, upper95 {:.4} vs bartlett90-upper {:.4}; {secs:.0}s",
        study.shape(),
        study.scale(),
        study.p_hat(),
        pipe.bartlett,
        pipe.p_nodes.len(),
        cfg.nodes,
        upper_star,
        upper_bartlett
    );
}

/// Criterion 9: exported CSVs are byte-identical across worker counts.
#[test]
fn acceptance_9_worker_determinism() {
    let m = NormalVariance::new(10);
    let mut rng = substream(1, DATA_LANE, 0);
    let data = m.sample(4.0, &mut rng);
    let dir = std::env::temp_dir();
    let render = |workers: usize| -> Vec<u8> {
        let mc = McConfig::new(1, 20_000).with_workers(workers);
        let calib = mc_calibration_for(&m, false, &mc).unwrap().unwrap();
        let calib_star = mc_calibration_for(&m, true, &mc).unwrap().unwrap();
        let median = MedianFunction::exact_from_model(&m).unwrap();
        let cc = cc_from_w(&m, &data, &calib).unwrap();
        let star = corrected_curve(&m, &data, &median, &calib_star).unwrap();
        let cd = exact_cd(&m, &data).unwrap();
        let dom = star.curve().domain();
        let grid = linspace(dom.lo, dom.hi, 101);
        let path = dir.join(format!("confcurve_acc9_w{workers}.csv"));
        write_comparison_csv(&path, &grid, &cc, &star, &cd).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::remove_file(&path).ok();
        bytes
    };
    let one = render(1);
    let four = render(4);
    assert_eq!(one, four, "CSV bytes differ between 1 and 4 workers");
    println!("ACCEPTANCE 9: PASS - {} bytes identical across worker counts 1 and 4", one.len());
}
