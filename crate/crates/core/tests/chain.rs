use proptest::prelude::*;
use simplex_walks::chain::*;
use simplex_walks::distributions::{arcsine_cdf, jump_tail};
use simplex_walks::stationarity::sethuraman_onestep;
use simplex_walks::stats::{ks_critical, ks_one_sample, ks_two_critical, ks_two_sample, marginal};
use simplex_walks::{Dirichlet, JumpLaw, RngStream, SimplexPoint};

fn pt(c: &[f64]) -> SimplexPoint {
    SimplexPoint::new(c.to_vec()).unwrap()
}

#[test]
fn linear_choice_examples() {
    let (b, c) = (0.3, 0.6);
    let cf = ChoiceFunction::linear(vec![b, c]).unwrap();
    for i in 0..=20 {
        let z = i as f64 / 20.0;
        let p = choice_probs(&cf, &pt(&[z])).unwrap();
        assert!((p[1] - (b * (1.0 - z) + (1.0 - c) * z)).abs() < 1e-15);
        assert!((p[0] + p[1] - 1.0).abs() < 1e-15);
    }
    // sum of betas equal to one gives constant probabilities
    let cf = ChoiceFunction::linear(vec![0.2, 0.5, 0.3]).unwrap();
    for z in [[0.1, 0.2], [0.6, 0.3], [0.0, 0.0], [0.0, 1.0]] {
        let p = choice_probs(&cf, &pt(&z)).unwrap();
        for (got, want) in p.iter().zip([0.3, 0.2, 0.5]) {
            assert!((got - want).abs() < 1e-15);
        }
    }
}

#[test]
fn linear_probabilities_on_grid() {
    let cf = ChoiceFunction::linear(vec![0.3, 0.3, 0.3]).unwrap();
    for i in 0..=100 {
        for j in 0..=(100 - i) {
            let z = pt(&[i as f64 / 100.0, j as f64 / 100.0]);
            let p = choice_probs(&cf, &z).unwrap();
            assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn degenerate_jumps() {
    let cf = ChoiceFunction::constant(vec![0.2, 0.3]).unwrap();
    let mut rng = RngStream::new(1, 0);
    let mut s = ChainState::initial(pt(&[0.1, 0.4]));
    for _ in 0..50 {
        let next = step(&s, &cf, &JumpLaw::PointMass { value: 1.0 }, &mut rng).unwrap();
        let v = next.last_vertex.unwrap();
        let mut e = vec![0.0, 0.0];
        if v > 0 {
            e[v - 1] = 1.0;
        }
        assert_eq!(next.z.coords(), &e[..]);
        assert_eq!(next.n, s.n + 1);
        s = next;
    }
    let s = ChainState::initial(pt(&[0.1, 0.4]));
    let next = step(&s, &cf, &JumpLaw::PointMass { value: 0.0 }, &mut rng).unwrap();
    assert_eq!(next.z, s.z);
}

#[test]
fn run_chain_contracts() {
    let cf = ChoiceFunction::linear(vec![0.5, 0.5]).unwrap();
    let mut cfg = ChainConfig::new(cf, JumpLaw::Uniform, 200, 11);
    cfg.burn_in = Some(0);
    assert_eq!(run_chain(&cfg).unwrap(), run_chain(&cfg).unwrap());
    assert_eq!(run_chain(&cfg).unwrap().len(), 201);

    let mut zero = cfg.clone();
    zero.steps = 0;
    let t = run_chain(&zero).unwrap();
    assert_eq!(t.len(), 1);
    assert_eq!(t[0].z, cfg.initial_point());

    let mut det = ChainConfig::new(
        ChoiceFunction::constant(vec![1.0]).unwrap(),
        JumpLaw::PointMass { value: 0.5 },
        40,
        0,
    );
    det.initial = Some(pt(&[0.0]));
    det.burn_in = Some(0);
    for s in run_chain(&det).unwrap() {
        let want = 1.0 - 0.5f64.powi(s.n as i32);
        assert!((s.z.coords()[0] - want).abs() < 1e-15, "n = {}", s.n);
    }
}

#[test]
fn ensemble_of_one_is_the_chain_terminal() {
    let cf = ChoiceFunction::linear(vec![0.3, 0.3, 0.3]).unwrap();
    let mut cfg = ChainConfig::new(cf, JumpLaw::beta_one(2.0), 300, 5);
    let t = run_chain(&cfg).unwrap();
    cfg.ensemble = 1;
    let e = run_ensemble(&cfg).unwrap();
    assert_eq!(e.len(), 1);
    assert_eq!(&e[0], &t.last().unwrap().z);
}

#[test]
fn ensemble_independent_of_thread_count() {
    let cf = ChoiceFunction::linear(vec![0.3, 0.3, 0.3]).unwrap();
    let mut cfg = ChainConfig::new(cf, JumpLaw::beta_one(2.0), 100, 77);
    cfg.ensemble = 500;
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_ensemble(&cfg).unwrap())
    };
    let one = run(1);
    for threads in [2, 4, 7] {
        let other = run(threads);
        assert!(one.iter().zip(&other).all(|(a, b)| a
            .coords()
            .iter()
            .zip(b.coords())
            .all(|(x, y)| x.to_bits() == y.to_bits())));
    }
}

#[test]
fn arcsine_limit_d1() {
    let cf = ChoiceFunction::linear(vec![0.5, 0.5]).unwrap();
    let mut cfg = ChainConfig::new(cf, JumpLaw::Beta { a: 1.0, b: 1.0 }, 500, 2024);
    cfg.ensemble = 10_000;
    let s = run_ensemble(&cfg).unwrap();
    let d = ks_one_sample(&marginal(&s, 0), arcsine_cdf).unwrap();
    assert!(d < 0.0163, "D = {d}");
}

#[test]
fn sethuraman_constant_d2_means() {
    let cf = ChoiceFunction::constant(vec![0.3, 0.3]).unwrap();
    let mut cfg = ChainConfig::new(cf, JumpLaw::beta_one(2.0), 300, 31);
    cfg.ensemble = 10_000;
    let s = run_ensemble(&cfg).unwrap();
    let dir = Dirichlet::new(vec![0.6, 0.6, 0.8]).unwrap();
    let cov = dir.covariance();
    for i in 0..2 {
        let m = marginal(&s, i).iter().sum::<f64>() / s.len() as f64;
        let sigma = (cov[i][i] / s.len() as f64).sqrt();
        assert!((m - 0.3).abs() < 3.0 * sigma, "coordinate {i}: {m}");
    }
}

#[test]
fn linear_config_d2_marginals() {
    let cf = ChoiceFunction::linear(vec![0.3, 0.3, 0.3]).unwrap();
    let mut cfg = ChainConfig::new(cf, JumpLaw::beta_one(2.0), 500, 8);
    cfg.ensemble = 10_000;
    let s = run_ensemble(&cfg).unwrap();
    let law = JumpLaw::Beta { a: 0.6, b: 1.2 };
    let sigma = (0.6 * 1.2 / (1.8 * 1.8 * 2.8) / s.len() as f64).sqrt();
    for i in 0..2 {
        let x = marginal(&s, i);
        let d = ks_one_sample(&x, |v| 1.0 - jump_tail(&law, v)).unwrap();
        assert!(d < 0.0163, "coordinate {i}: D = {d}");
        let m = x.iter().sum::<f64>() / x.len() as f64;
        assert!(
            (m - 1.0 / 3.0).abs() < 4.0 * sigma,
            "coordinate {i}: mean {m}"
        );
    }
}

#[test]
fn sethuraman_fixed_point() {
    let n = 100_000;
    for (p, gamma) in [(vec![0.5], 1.0), (vec![0.3], 2.0), (vec![0.3, 0.3], 2.0)] {
        let p0 = 1.0 - p.iter().sum::<f64>();
        let mut alpha: Vec<f64> = p.iter().map(|x| x * gamma).collect();
        alpha.push(p0 * gamma);
        let dir = Dirichlet::new(alpha).unwrap();
        let mut r1 = RngStream::new(13, 0);
        let mut r2 = RngStream::new(13, 1);
        let moved: Vec<SimplexPoint> = (0..n)
            .map(|_| sethuraman_onestep(&dir, &p, gamma, &mut r1).unwrap())
            .collect();
        let fresh: Vec<SimplexPoint> = (0..n).map(|_| dir.sample(&mut r2)).collect();
        for i in 0..p.len() {
            let d = ks_two_sample(&marginal(&moved, i), &marginal(&fresh, i)).unwrap();
            assert!(
                d < ks_two_critical(n, n, 0.001),
                "p = {p:?}, coordinate {i}: D = {d}"
            );
        }
    }
    // d = 1, p = 1/2, gamma = 1 against the arcsine law itself
    let dir = Dirichlet::new(vec![0.5, 0.5]).unwrap();
    let mut rng = RngStream::new(14, 0);
    let moved: Vec<f64> = (0..n)
        .map(|_| {
            sethuraman_onestep(&dir, &[0.5], 1.0, &mut rng)
                .unwrap()
                .coords()[0]
        })
        .collect();
    let d = ks_one_sample(&moved, arcsine_cdf).unwrap();
    assert!(d < ks_critical(n, 0.001), "D = {d}");
}

#[test]
fn linear_dirichlet_is_stationary() {
    let n = 100_000;
    let cases = [
        (vec![0.5, 0.5], 1.0),
        (vec![0.3, 0.7], 2.0),
        (vec![0.3, 0.3, 0.3], 2.0),
    ];
    for (beta, gamma) in cases {
        let dir = Dirichlet::new(beta.iter().map(|b| b * gamma).collect()).unwrap();
        let cf = ChoiceFunction::linear(beta.clone()).unwrap();
        let jump = JumpLaw::beta_one(gamma).sampler().unwrap();
        let evolve = |stream: u64, steps: usize| -> Vec<SimplexPoint> {
            let mut rng = RngStream::new(21, stream);
            (0..n)
                .map(|_| {
                    let mut s = ChainState::initial(dir.sample(&mut rng));
                    for _ in 0..steps {
                        s = step_with(&s, &cf, &jump, &mut rng).unwrap();
                    }
                    s.z
                })
                .collect()
        };
        let one = evolve(0, 1);
        let hundred = evolve(1, 100);
        for i in 0..dir.dim() {
            let d = ks_two_sample(&marginal(&one, i), &marginal(&hundred, i)).unwrap();
            assert!(
                d < ks_two_critical(n, n, 0.001),
                "beta = {beta:?}, coordinate {i}: D = {d}"
            );
        }
    }
}

#[test]
fn config_round_trips_through_json() {
    let cf = ChoiceFunction::linear(vec![0.3, 0.3, 0.3]).unwrap();
    let cfg = ChainConfig::new(cf, JumpLaw::beta_one(2.0), 100, 3);
    let text = serde_json::to_string(&cfg).unwrap();
    let back: ChainConfig = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string(&back).unwrap(), text);
    let bad = text.replacen("\"seed\"", "\"sead\"", 1);
    assert!(serde_json::from_str::<ChainConfig>(&bad).is_err());
}

fn choice_strategy() -> impl Strategy<Value = ChoiceFunction> {
    prop_oneof![
        (1usize..4, prop::collection::vec(0.0f64..1.0, 4)).prop_map(|(d, w)| {
            let s: f64 = w.iter().sum::<f64>() + 1e-9;
            ChoiceFunction::constant(w[..d].iter().map(|x| x / s).collect()).unwrap()
        }),
        (1usize..4, prop::collection::vec(0.01f64..1.0, 5)).prop_map(|(d, w)| {
            // scale so that the sum of all but one coefficient stays below one
            let s: f64 = w[..=d].iter().sum::<f64>() * 1.01;
            ChoiceFunction::linear(w[..=d].iter().map(|x| x / s).collect()).unwrap()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chain_stays_in_simplex(cf in choice_strategy(), a in 0.05f64..3.0, b in 0.05f64..3.0, seed in 0u64..10_000) {
        let mut cfg = ChainConfig::new(cf, JumpLaw::Beta { a, b }, 500, seed);
        cfg.burn_in = Some(0);
        for s in run_chain(&cfg).unwrap() {
            prop_assert!(s.z.coords().iter().all(|&c| c >= -1e-12));
            prop_assert!(s.z.z0() >= -1e-12);
        }
    }
}
