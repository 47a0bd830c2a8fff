use rand::Rng;
use rand_distr::StandardNormal;
use twotier_core::bocs::{
    all_structures, encode, fit_bocs, n_features, propose_structural, quadratic_value, sa_maximize,
    sample_acquisition, AnnealSchedule, BocsConfig,
};
use twotier_core::seed::{rng_from, Rng as StreamRng};

fn all_vectors(d: usize) -> Vec<Vec<bool>> {
    (0..1u32 << d).map(|i| (0..d).map(|b| i >> b & 1 == 1).collect()).collect()
}

fn exhaustive_max(coeffs: &[f64], d: usize) -> f64 {
    all_vectors(d)
        .iter()
        .map(|x| quadratic_value(coeffs, x))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn random_coeffs(d: usize, rng: &mut StreamRng) -> Vec<f64> {
    (0..n_features(d)).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn sa_hits(d: usize) -> usize {
    (0..100u64)
        .filter(|&seed| {
            let coeffs = random_coeffs(d, &mut rng_from(10_000 + seed));
            let x = sa_maximize(&coeffs, d, &AnnealSchedule::default(), &mut rng_from(seed));
            (quadratic_value(&coeffs, &x) - exhaustive_max(&coeffs, d)).abs() < 1e-12
        })
        .count()
}

#[test]
fn annealing_finds_exhaustive_argmax_d4() {
    assert_eq!(sa_hits(4), 100);
}

#[test]
fn annealing_finds_exhaustive_argmax_d10() {
    let hits = sa_hits(10);
    assert!(hits >= 95, "{hits}/100");
}

#[test]
fn recovers_linear_coefficients() {
    let truth = [2.0, -1.0, 0.5, 3.0, -2.5];
    let observations: Vec<(Vec<bool>, f64)> = all_vectors(4)
        .into_iter()
        .map(|x| {
            let y = truth[0] + x.iter().zip(&truth[1..]).map(|(b, w)| if *b { *w } else { 0.0 }).sum::<f64>();
            (x, y)
        })
        .collect();
    let cfg = BocsConfig {
        prior_precision: 1e-10,
        ..BocsConfig::default()
    };
    let m = fit_bocs(&observations, &cfg).unwrap();
    let w = m.mean_coefficients();
    for (i, t) in truth.iter().enumerate() {
        assert!((w[i] - t).abs() < 1e-6, "coefficient {i}: {} vs {t}", w[i]);
    }
    for (i, v) in w.iter().enumerate().skip(5) {
        assert!(v.abs() < 1e-6, "interaction {i}: {v}");
    }
}

#[test]
fn conflicting_duplicates_predict_between() {
    let x = vec![true, false, false, true];
    let obs = vec![(x.clone(), 1.0), (x.clone(), 3.0), (vec![false; 4], 0.0)];
    let m = fit_bocs(&obs, &BocsConfig::default()).unwrap();
    let p = m.predict_mean(&x);
    assert!(p > 1.0 && p < 3.0, "{p}");
}

#[test]
fn thompson_draws_centre_on_posterior_mean() {
    let mut rng = rng_from(5);
    let obs: Vec<(Vec<bool>, f64)> = all_vectors(4)
        .into_iter()
        .map(|x| {
            let y = quadratic_value(&random_coeffs(4, &mut rng_from(1)), &x) + rng.random::<f64>();
            (x, y)
        })
        .collect();
    let m = fit_bocs(&obs, &BocsConfig::default()).unwrap();
    let n = 10_000;
    let p = n_features(4);
    let mut sums = vec![0.0; p];
    let mut draw_rng = rng_from(6);
    for _ in 0..n {
        for (s, v) in sums.iter_mut().zip(sample_acquisition(&m, &mut draw_rng)) {
            *s += v;
        }
    }
    for i in 0..p {
        let se = (m.covariance()[(i, i)] / n as f64).sqrt();
        let mean = sums[i] / n as f64;
        assert!((mean - m.mean()[i]).abs() < 4.0 * se, "coefficient {i}");
    }
    assert_eq!(sample_acquisition(&m, &mut rng_from(9)), sample_acquisition(&m, &mut rng_from(9)));
}

#[test]
fn predictive_mean_tracks_replicate_average() {
    let target = vec![true, true, false, true];
    let mut rng = rng_from(31);
    let mut obs: Vec<(Vec<bool>, f64)> = all_vectors(4)
        .into_iter()
        .filter(|x| *x != target)
        .map(|x| (x, rng.sample::<f64, _>(StandardNormal)))
        .collect();
    let replicates: Vec<f64> = (0..100).map(|_| 2.0 + rng.sample::<f64, _>(StandardNormal)).collect();
    obs.extend(replicates.iter().map(|y| (target.clone(), *y)));
    let m = fit_bocs(&obs, &BocsConfig::default()).unwrap();
    let empirical = replicates.iter().sum::<f64>() / 100.0;
    let sd = (replicates.iter().map(|y| (y - empirical).powi(2)).sum::<f64>() / 99.0).sqrt();
    assert!((m.predict_mean(&target) - empirical).abs() < 3.0 * sd / 10.0);
}

#[test]
fn full_history_concentrates_on_the_maximizer() {
    let coeffs = random_coeffs(4, &mut rng_from(404));
    let structures = all_structures();
    let value = |p| quadratic_value(&coeffs, &encode(p));
    let best = *structures
        .iter()
        .max_by(|a, b| value(a).total_cmp(&value(b)))
        .unwrap();
    let mut noise = rng_from(405);
    let history: Vec<_> = structures
        .iter()
        .map(|p| (*p, value(p) + 0.01 * noise.sample::<f64, _>(StandardNormal)))
        .collect();
    let hits = (0..10)
        .filter(|&s| propose_structural(&history, &BocsConfig::default(), &mut rng_from(s)).unwrap() == best)
        .count();
    assert!(hits >= 9, "{hits}/10");
}

#[test]
fn proposals_are_deterministic_per_seed() {
    let history: Vec<_> = all_structures().into_iter().take(6).enumerate().map(|(i, p)| (p, i as f64)).collect();
    for seed in 0..5 {
        let a = propose_structural(&history, &BocsConfig::default(), &mut rng_from(seed)).unwrap();
        let b = propose_structural(&history, &BocsConfig::default(), &mut rng_from(seed)).unwrap();
        assert_eq!(a, b);
    }
    let first = propose_structural(&[], &BocsConfig::default(), &mut rng_from(3)).unwrap();
    let mut order = all_structures();
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng_from(3));
    assert_eq!(first, order[0]);
}
