use netecon::dyadic::{bootstrap, fit_composite, variance_report, DyadicDataset, Family, FitOptions, OmegaKind, Scheme};
use netecon::graphon::logistic;
use netecon::numeric::{max_abs_diff, min_eigenvalue};
use proptest::prelude::*;
use rand::Rng;

fn dataset(n: usize, directed: bool, seed: u64) -> DyadicDataset {
    let mut r = netecon::rng::stream(seed, "test/dyadic-int", &[]);
    let u: Vec<f64> = (0..n).map(|_| r.random_range(-0.7..0.7)).collect();
    let x: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
    DyadicDataset::complete(n, directed, vec!["const".into(), "absdiff".into()], |i, j| {
        let d = (x[i] - x[j]).abs();
        ((r.random::<f64>() < logistic(-0.3 + u[i] + u[j] + d)) as u8 as f64, vec![1.0, d])
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn estimator_identities(n in 6usize..30, directed in any::<bool>(), seed in any::<u64>(), probit in any::<bool>()) {
        let data = dataset(n, directed, seed);
        let family = if probit { Family::Probit } else { Family::Logit };
        let Ok(fit) = fit_composite(&data, family, &FitOptions::default()) else {
            // Tiny samples can separate; that is reported, not a failure.
            return Ok(());
        };
        let r = variance_report(&fit).unwrap();
        prop_assert!(max_abs_diff(&r.omega_fg, &r.omega_jk_bc) <= 1e-10);
        prop_assert!(min_eigenvalue(&r.omega_jk) >= -1e-12);
        let nf = n as f64;
        let tilde = &r.sigma1 + (&r.sigma23 - &r.sigma1) / (nf - 1.0);
        prop_assert!(max_abs_diff(&r.sigma1_tilde, &tilde) <= 1e-12);
    }

    #[test]
    fn relabelling_nodes_changes_nothing(n in 8usize..25, seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let data = dataset(n, true, seed);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut netecon::rng::stream(seed, "test/perm", &[]));
        let moved = data.permuted(&perm).unwrap();
        let (Ok(a), Ok(b)) = (
            fit_composite(&data, Family::Logit, &FitOptions::default()),
            fit_composite(&moved, Family::Logit, &FitOptions::default()),
        ) else {
            return Ok(());
        };
        prop_assert!((&a.theta - &b.theta).amax() <= 1e-10);
        let (ra, rb) = (variance_report(&a).unwrap(), variance_report(&b).unwrap());
        for kind in [OmegaKind::Fg, OmegaKind::Jk, OmegaKind::JkBc, OmegaKind::Sb] {
            prop_assert!(max_abs_diff(ra.omega(kind), rb.omega(kind)) <= 1e-10);
        }
    }
}

#[test]
fn independent_dyads_shrink_sigma1() {
    let norm = |n: usize, s: u64| {
        let mut r = netecon::rng::stream(s, "test/indep", &[n as u64]);
        let x: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
        let data = DyadicDataset::complete(n, false, vec!["const".into(), "absdiff".into()], |i, j| {
            let d = (x[i] - x[j]).abs();
            ((r.random::<f64>() < logistic(-0.5 + d)) as u8 as f64, vec![1.0, d])
        })
        .unwrap();
        let fit = fit_composite(&data, Family::Logit, &FitOptions::default()).unwrap();
        variance_report(&fit).unwrap().sigma1.norm()
    };
    let med = |n: usize| {
        let mut v: Vec<f64> = (0..41).map(|s| norm(n, s)).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[20]
    };
    let (a, b, c) = (med(25), med(50), med(100));
    assert!(b < a && c < b, "{a} {b} {c}");
}

#[test]
fn pigeonhole_and_fg_agree_on_the_mean() {
    let n = 80;
    let data = dataset(n, false, 11);
    let one = DyadicDataset::complete(n, false, vec!["const".into()], |i, j| {
        let row = data.row_of(i, j).unwrap();
        (data.y()[row], vec![1.0])
    })
    .unwrap();
    let fit = fit_composite(&one, Family::Linear, &FitOptions::default()).unwrap();
    let fg = variance_report(&fit).unwrap().se(OmegaKind::Fg)[0];
    let boot = bootstrap(&one, &fit, Scheme::Pigeonhole, 400, 3, 0.95).unwrap();
    let ratio = boot.vcov[(0, 0)].sqrt() / fg;
    assert!((0.8..=1.25).contains(&ratio), "ratio {ratio}");
}
