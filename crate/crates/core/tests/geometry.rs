use proptest::prelude::*;
use rand::Rng;
use simplex_walks::assumptions::{verify_lemma1, verify_lemma1_shrunk};
use simplex_walks::geometry::*;
use simplex_walks::{RngStream, SimplexPoint};

fn random_interior<R: Rng>(d: usize, rng: &mut R) -> SimplexPoint {
    let e: Vec<f64> = (0..=d).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    SimplexPoint::new(e[1..].iter().map(|x| x / s).collect()).unwrap()
}

fn random_cube<R: Rng>(d: usize, rng: &mut R) -> CubePoint {
    CubePoint::new((0..d).map(|_| rng.random::<f64>()).collect()).unwrap()
}

/// Smallest partial product `prod_{l > j} (1 - x_l)`.
fn min_tail(x: &[f64]) -> f64 {
    let mut tail = 1.0f64;
    let mut m = 1.0f64;
    for &c in x.iter().rev() {
        m = m.min(tail);
        tail *= 1.0 - c;
    }
    m
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Determinant by Gaussian elimination with partial pivoting.
fn det(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))
            .unwrap();
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        det *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    det
}

/// Central-difference Jacobian determinant of `f` at `x`.
fn fd_det<F: Fn(&[f64]) -> Vec<f64>>(f: F, x: &[f64]) -> f64 {
    let h = 1e-6;
    let n = x.len();
    let mut jac = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        let (fp, fm) = (f(&xp), f(&xm));
        for i in 0..n {
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    det(jac)
}

#[test]
fn spec_examples() {
    let x = CubePoint::new(vec![0.37]).unwrap();
    assert_eq!(forward_T(&x).unwrap().coords(), &[0.37]);
    let x = CubePoint::new(vec![0.5, 0.5]).unwrap();
    assert_eq!(forward_T(&x).unwrap().coords(), &[0.25, 0.5]);
    let z = SimplexPoint::new(vec![0.25, 0.5]).unwrap();
    assert_eq!(inverse_T(&z).unwrap().coords(), &[0.5, 0.5]);
    let z = SimplexPoint::new(vec![1.0 / 3.0, 1.0 / 3.0]).unwrap();
    let x = inverse_T(&z).unwrap();
    assert!(max_diff(x.coords(), &[0.5, 1.0 / 3.0]) < 1e-15);
    assert!(inverse_T(&SimplexPoint::new(vec![0.4, 0.6]).unwrap()).is_err());

    let z = SimplexPoint::new(vec![0.2, 0.3]).unwrap();
    let u = SimplexPoint::new(vec![0.1, 0.2]).unwrap();
    let g = apply_G(&z, &u).unwrap();
    assert!(max_diff(g.coords(), &[0.24, 0.41]) < 1e-15);
    assert!(max_diff(invert_G(&z, &g).unwrap().coords(), u.coords()) < 1e-15);
    assert_eq!(apply_G(&z, &SimplexPoint::origin(2)).unwrap(), z);
    assert!(max_diff(invert_G(&z, &z).unwrap().coords(), &[0.0, 0.0]) < 1e-15);
    assert!(invert_G(&SimplexPoint::new(vec![0.5, 0.5]).unwrap(), &u).is_err());

    assert!(max_diff(rotate_R(0, &u).unwrap().coords(), &[0.7, 0.1]) < 1e-15);
    assert!(max_diff(rotate_R(1, &u).unwrap().coords(), &[0.7, 0.2]) < 1e-15);
    assert!(rotate_R(3, &u).is_err());

    assert!((jacobian_det_Ginv(&z).unwrap() - 2.0).abs() < 1e-15);
    assert_eq!(jacobian_det_Ginv(&SimplexPoint::origin(3)).unwrap(), 1.0);
    assert_eq!(
        jacobian_det_Tinv(&SimplexPoint::new(vec![0.6]).unwrap()).unwrap(),
        1.0
    );
    assert_eq!(
        jacobian_det_Tinv(&SimplexPoint::new(vec![0.25, 0.5]).unwrap()).unwrap(),
        2.0
    );
}

#[test]
fn region_examples() {
    let v0 = RegionSpec::Vertex { j: 0, delta: 0.1 };
    assert!(in_region(
        &v0,
        &SimplexPoint::new(vec![0.05, 0.03]).unwrap()
    ));
    let v1 = RegionSpec::Vertex { j: 1, delta: 0.1 };
    assert!(in_region(
        &v1,
        &SimplexPoint::new(vec![0.95, 0.01]).unwrap()
    ));
    let k = RegionSpec::K { s: 0.3, t: 0.6 };
    assert!(in_region(&k, &SimplexPoint::new(vec![0.45]).unwrap()));
    assert!(!in_region(&k, &SimplexPoint::new(vec![0.7]).unwrap()));
}

#[test]
fn round_trips_10k_per_dimension() {
    let mut rng = RngStream::new(2024, 1);
    for d in [1usize, 2, 3, 5] {
        let (mut e_t, mut e_ti, mut e_g, mut e_r) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for _ in 0..10_000 {
            // Recovering x_j divides by prod_{l > j}(1 - x_l), formed from z by
            // subtraction; the strict bound applies where that is at least 1e-3.
            let x = random_cube(d, &mut rng);
            let back = inverse_T(&forward_T(&x).unwrap()).unwrap();
            let err = max_diff(back.coords(), x.coords());
            let tail = min_tail(x.coords());
            assert!(
                err <= 4e-16 * d as f64 / tail,
                "d = {d}: {err} at tail {tail}"
            );
            if tail >= 1e-3 {
                e_t = e_t.max(err);
            }

            let z = random_interior(d, &mut rng);
            let back = forward_T(&inverse_T(&z).unwrap()).unwrap();
            e_ti = e_ti.max(max_diff(back.coords(), z.coords()));

            // G_z^{-1} amplifies rounding by 1/z_0, so the base point keeps z_0 >= 0.01.
            let mut zg = random_interior(d, &mut rng);
            while zg.z0() < 0.01 {
                zg = random_interior(d, &mut rng);
            }
            let u = random_interior(d, &mut rng);
            let back = invert_G(&zg, &apply_G(&zg, &u).unwrap()).unwrap();
            e_g = e_g.max(max_diff(back.coords(), u.coords()));

            for j in 0..=d {
                let back = rotate_R_inverse(j, &rotate_R(j, &u).unwrap()).unwrap();
                e_r = e_r.max(max_diff(back.coords(), u.coords()));
            }
        }
        assert!(e_t < 1e-12, "d = {d}: T round trip {e_t}");
        assert!(e_ti < 1e-12, "d = {d}: T^-1 round trip {e_ti}");
        assert!(e_g < 1e-12, "d = {d}: G round trip {e_g}");
        assert!(e_r < 1e-12, "d = {d}: R round trip {e_r}");
    }
}

#[test]
fn jacobians_match_finite_differences_and_exceed_one() {
    let mut rng = RngStream::new(99, 0);
    for d in [1usize, 2, 3, 5] {
        for _ in 0..2_500 {
            let z = random_interior(d, &mut rng);
            if z.z0() < 0.01 {
                continue;
            }
            let jg = jacobian_det_Ginv(&z).unwrap();
            let u = random_interior(d, &mut rng);
            let zc = z.coords().to_vec();
            let fd = fd_det(
                |v| {
                    let u0 = 1.0 - v.iter().sum::<f64>();
                    v.iter()
                        .zip(&zc)
                        .map(|(&vj, &zj)| vj - zj * u0 / (1.0 - zc.iter().sum::<f64>()))
                        .collect()
                },
                u.coords(),
            );
            assert!((fd - jg).abs() < 1e-6 * jg.max(1.0), "G: {fd} vs {jg}");
            assert!(jg >= 1.0);

            let v = random_interior(d, &mut rng);
            let tail_ok = (0..d).all(|j| 1.0 - v.coords()[j + 1..].iter().sum::<f64>() > 0.05);
            if !tail_ok {
                continue;
            }
            let jt = jacobian_det_Tinv(&v).unwrap();
            let fd = fd_det(
                |w| {
                    let p = SimplexPoint::new(w.to_vec()).unwrap();
                    inverse_T(&p).unwrap().into_coords()
                },
                v.coords(),
            );
            assert!((fd - jt).abs() < 1e-6 * jt.max(1.0), "T: {fd} vs {jt}");
            assert!(jt >= 1.0);
        }
    }
}

#[test]
fn reconstruction_identity() {
    let mut rng = RngStream::new(5, 5);
    for d in [1usize, 2, 3, 5] {
        for _ in 0..1000 {
            let u = random_interior(d, &mut rng);
            for k in 1..=d {
                let z = sample_in_vertex_region(k, d, 0.01, &mut rng).unwrap();
                let rz = rotate_R(k, &z).unwrap();
                let ru_img = apply_G(&rz, &u).unwrap();
                let got = rotate_R_inverse(k, &ru_img).unwrap();
                let u0 = u.z0();
                let uc = u.coords();
                let zc = z.coords();
                let expected: Vec<f64> = (1..=d)
                    .map(|i| {
                        if i < k {
                            u0 * zc[i - 1] + uc[i]
                        } else if i == k {
                            u0 * zc[k - 1]
                        } else {
                            u0 * zc[i - 1] + uc[i - 1]
                        }
                    })
                    .collect();
                assert!(max_diff(got.coords(), &expected) < 1e-12);
            }
        }
    }
}

#[test]
fn lemma1_inclusions_hold_and_shrunken_box_fails() {
    for d in [1usize, 2, 3] {
        let mut rng = RngStream::new(17, d as u64);
        let r = verify_lemma1(d, 0.005, 0.3, 0.6, 100_000, &mut rng).unwrap();
        assert_eq!(r.part_a.violations, 0, "d = {d}");
        assert!(r.part_a.worst_margin >= 0.0);
        for p in &r.part_b {
            assert_eq!(p.violations, 0, "d = {d}, {}", p.part);
            assert!(p.worst_margin >= 0.0);
        }
        let r = verify_lemma1_shrunk(d, 0.005, 0.3, 0.6, 10_000, 0.1, &mut rng).unwrap();
        assert!(r.total_violations() > 0, "d = {d}");
    }
}

#[test]
fn sampled_regions_contain_their_points() {
    let mut rng = RngStream::new(8, 0);
    for d in [1usize, 2, 3] {
        let k = RegionSpec::k_set(d, 0.005, 0.3, 0.6).unwrap();
        for _ in 0..1000 {
            assert!(k.contains(&sample_in_k(d, 0.3, 0.6, &mut rng)));
            for j in 0..=d {
                let z = sample_in_vertex_region(j, d, 0.05, &mut rng).unwrap();
                assert!(RegionSpec::Vertex { j, delta: 0.05 }.contains(&z));
            }
        }
    }
}

proptest! {
    #[test]
    fn t_round_trip(x in prop::collection::vec(0.001f64..0.999, 1..6)) {
        let c = CubePoint::new(x.clone()).unwrap();
        let back = inverse_T(&forward_T(&c).unwrap()).unwrap();
        prop_assert!(max_diff(back.coords(), &x) < 1e-12);
    }

    #[test]
    fn g_maps_into_simplex(w in prop::collection::vec(0.01f64..1.0, 3..7), v in prop::collection::vec(0.01f64..1.0, 3..7)) {
        let d = w.len().min(v.len()) - 1;
        let sw: f64 = w[..=d].iter().sum();
        let sv: f64 = v[..=d].iter().sum();
        let z = SimplexPoint::new(w[1..=d].iter().map(|x| x / sw).collect()).unwrap();
        let u = SimplexPoint::new(v[1..=d].iter().map(|x| x / sv).collect()).unwrap();
        let g = apply_G(&z, &u).unwrap();
        prop_assert!(g.coords().iter().all(|&c| c >= 0.0));
        prop_assert!(g.z0() >= -1e-12);
        // G_z(u) dominates u_0 z coordinatewise
        for (gi, zi) in g.coords().iter().zip(z.coords()) {
            prop_assert!(*gi + 1e-15 >= u.z0() * zi);
        }
    }

    #[test]
    fn rotation_is_a_bijection(w in prop::collection::vec(0.0f64..1.0, 2..7), j in 0usize..6) {
        let s: f64 = w.iter().sum::<f64>() + 1e-9;
        let u = SimplexPoint::new(w[1..].iter().map(|x| x / s).collect()).unwrap();
        let j = j % (u.dim() + 1);
        let back = rotate_R_inverse(j, &rotate_R(j, &u).unwrap()).unwrap();
        prop_assert!(max_diff(back.coords(), u.coords()) < 1e-12);
    }
}

#[test]
fn property_checks_pass_and_report_floors() {
    let mut rng = RngStream::new(31, 0);
    for d in [1usize, 4] {
        let r = round_trip_check(d, 2_000, &mut rng).unwrap();
        assert!(r.passed(1e-12), "{r:?}");
        assert_eq!((r.tail_floor, r.z0_floor), (1e-3, 1e-2));
        let j = jacobian_check(d, 500, &mut rng).unwrap();
        assert!(j.passed(1e-6), "{j:?}");
        assert_eq!((j.g_points, j.t_points), (500, 500));
    }
    // a tolerance below rounding level is not met
    assert!(!round_trip_check(3, 2_000, &mut rng).unwrap().passed(1e-18));
}
