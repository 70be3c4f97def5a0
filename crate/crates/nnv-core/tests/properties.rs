use nalgebra::{DMatrix, DVector};
use nnv_core::bounds::{bounds_from_box, get_gradient, get_gradient_bounds, interval_map};
use nnv_core::encoding::{encode_network, parallel_relaxation_bounds, EncodingKind};
use nnv_core::geometry::{
    affine_image, h_to_v, member, split_interval, subset, v_to_h, vertices, GeometricSet, HPolytope, Hyperrectangle,
    VPolytope,
};
use nnv_core::lp::{solve_lp, solve_milp, LinearModel, LpStatus, Relation, Sense};
use nnv_core::sat::{sat_solve, Cnf};
use nnv_core::text::{parse_network, write_network};
use nnv_core::{get_activation, relu, Activation, ActivationPattern, Layer, Network};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_net(r: &mut ChaCha8Rng, inputs: usize, max_hidden: usize) -> Network {
    let mut layers = Vec::new();
    let mut prev = inputs;
    for _ in 0..r.gen_range(1..=max_hidden) {
        let w = r.gen_range(1..=4);
        let weights = DMatrix::from_fn(w, prev, |_, _| r.gen_range(-2.0..2.0));
        let bias = (0..w).map(|_| r.gen_range(-1.0..1.0)).collect();
        layers.push(Layer::new(weights, bias, Activation::ReLU).unwrap());
        prev = w;
    }
    let out = r.gen_range(1..=2);
    let weights = DMatrix::from_fn(out, prev, |_, _| r.gen_range(-2.0..2.0));
    layers.push(Layer::new(weights, vec![0.0; out], Activation::Id).unwrap());
    Network::new(layers).unwrap()
}

fn random_box(r: &mut ChaCha8Rng, dim: usize) -> Hyperrectangle {
    let c = (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect();
    let rad = (0..dim).map(|_| r.gen_range(0.05..1.0)).collect();
    Hyperrectangle::new(c, rad).unwrap()
}

fn sample(r: &mut ChaCha8Rng, h: &Hyperrectangle) -> Vec<f64> {
    h.low().iter().zip(h.high()).map(|(&l, u)| if u > l { r.gen_range(l..=u) } else { l }).collect()
}

/// Random bounded polytope: a box plus cuts that keep the origin inside.
fn random_polytope(r: &mut ChaCha8Rng, dim: usize, cuts: usize) -> HPolytope {
    let mut rows = Vec::new();
    let mut d = Vec::new();
    for j in 0..dim {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; dim];
            e[j] = s;
            rows.push(e);
            d.push(r.gen_range(0.5..2.0));
        }
    }
    for _ in 0..cuts {
        rows.push((0..dim).map(|_| r.gen_range(-1.0..1.0)).collect());
        d.push(r.gen_range(0.2..1.5));
    }
    HPolytope::from_rows(&rows, d).unwrap()
}

fn rows_hold(rows: &[(Vec<f64>, f64)], x: &[f64], tol: f64) -> bool {
    rows.iter().all(|(c, d)| c.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() <= d + tol)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn forward_is_linear_inside_a_region(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=3);
        let net = random_net(&mut r, n, 3);
        let x: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let h: Vec<f64> = (0..n).map(|_| r.gen_range(-1e-4..1e-4)).collect();
        let xh: Vec<f64> = x.iter().zip(&h).map(|(a, b)| a + b).collect();
        prop_assume!(get_activation(&net, &x).unwrap() == get_activation(&net, &xh).unwrap());
        let g = get_gradient(&net, &x).unwrap();
        let (fx, fxh) = (net.forward(&x).unwrap(), net.forward(&xh).unwrap());
        let lin = &g * DVector::from_column_slice(&h);
        for k in 0..fx.len() {
            prop_assert!((fxh[k] - fx[k] - lin[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn relu_is_idempotent(v in prop::collection::vec(-10.0..10.0f64, 0..8)) {
        prop_assert_eq!(relu(&relu(&v)), relu(&v));
    }

    #[test]
    fn standard_lp_admits_its_own_point(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=3);
        let net = random_net(&mut r, n, 3);
        let x: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let d = get_activation(&net, &x).unwrap();
        let mut m = LinearModel::new();
        let vars = encode_network(&mut m, &net, EncodingKind::StandardLP(&d)).unwrap();
        for (&v, &xv) in vars.input().iter().zip(&x) {
            m.fix(v, xv).unwrap();
        }
        let out = solve_lp(&m);
        prop_assert!(out.is_optimal());
        let y = net.forward(&x).unwrap();
        for (&v, &yv) in vars.output().iter().zip(&y) {
            prop_assert!((out.point[v] - yv).abs() < 1e-7);
        }
    }

    #[test]
    fn h_v_round_trip_keeps_membership(seed in any::<u64>()) {
        let mut r = rng(seed);
        let dim = r.gen_range(1..=3);
        let cuts = r.gen_range(0..=3);
        let p = random_polytope(&mut r, dim, cuts);
        let back = v_to_h(&h_to_v(&p).unwrap()).unwrap();
        let (a, b): (GeometricSet, GeometricSet) = (p.clone().into(), back.into());
        for _ in 0..200 {
            let x: Vec<f64> = (0..dim).map(|_| r.gen_range(-2.5..2.5)).collect();
            let rows_a = a.constraint_rows().unwrap();
            let rows_b = b.constraint_rows().unwrap();
            let slack = |rows: &[(Vec<f64>, f64)]| rows.iter().map(|(c, d)| c.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() - d).fold(f64::NEG_INFINITY, f64::max);
            // skip points within tolerance of the boundary
            prop_assume!(slack(&rows_a).abs() > 1e-6);
            prop_assert_eq!(rows_hold(&rows_a, &x, 1e-7), rows_hold(&rows_b, &x, 1e-7), "{:?}", x);
        }
    }

    #[test]
    fn affine_image_is_exact(seed in any::<u64>()) {
        let mut r = rng(seed);
        let dim = r.gen_range(1..=3);
        let out = r.gen_range(1..=3);
        let h = random_box(&mut r, dim);
        let w = DMatrix::from_fn(out, dim, |_, _| r.gen_range(-2.0..2.0));
        let b: Vec<f64> = (0..out).map(|_| r.gen_range(-1.0..1.0)).collect();
        let image = affine_image(&h.clone().into(), &w, &b).unwrap();
        for _ in 0..50 {
            let x = sample(&mut r, &h);
            let y: Vec<f64> = (w.clone() * DVector::from_vec(x)).iter().zip(&b).map(|(p, q)| p + q).collect();
            prop_assert!(member(&image, &y).unwrap());
        }
        let verts = vertices(&image).unwrap();
        for _ in 0..20 {
            let mut lambda: Vec<f64> = verts.iter().map(|_| r.gen_range(0.0..1.0)).collect();
            let s: f64 = lambda.iter().sum();
            lambda.iter_mut().for_each(|l| *l /= s);
            let y: Vec<f64> = (0..out).map(|k| verts.iter().zip(&lambda).map(|(v, l)| v[k] * l).sum()).collect();
            let mut m = LinearModel::new();
            let x: Vec<_> = (0..dim).map(|j| m.add_continuous(h.low()[j], h.high()[j])).collect();
            for k in 0..out {
                let row = x.iter().enumerate().map(|(j, &v)| (v, w[(k, j)])).collect();
                m.add_constraint(row, Relation::Eq, y[k] - b[k]).unwrap();
            }
            prop_assert!(solve_lp(&m).is_optimal());
        }
    }

    #[test]
    fn split_partitions_the_box(seed in any::<u64>()) {
        let mut r = rng(seed);
        let dim = r.gen_range(1..=4);
        let h = random_box(&mut r, dim);
        let i = r.gen_range(0..dim);
        let (a, b) = split_interval(&h, i).unwrap();
        let (hs, as_, bs): (GeometricSet, GeometricSet, GeometricSet) = (h.clone().into(), a.into(), b.into());
        for _ in 0..100 {
            let x: Vec<f64> = h.low().iter().zip(h.high()).map(|(&l, u)| r.gen_range(l - 0.5..u + 0.5)).collect();
            prop_assert_eq!(member(&hs, &x).unwrap(), member(&as_, &x).unwrap() || member(&bs, &x).unwrap());
        }
    }

    #[test]
    fn subset_is_antisymmetric(seed in any::<u64>()) {
        let mut r = rng(seed);
        let dim = r.gen_range(1..=3);
        let p = random_polytope(&mut r, dim, 2);
        let v = h_to_v(&p).unwrap();
        let (a, b): (GeometricSet, GeometricSet) = (p.into(), VPolytope::new(v.vertices.clone()).unwrap().into());
        prop_assert!(subset(&a, &b).unwrap() && subset(&b, &a).unwrap());
        let h = random_box(&mut r, dim);
        let mut big = h.clone();
        big.radius.iter_mut().for_each(|x| *x += 0.5);
        let (small, big): (GeometricSet, GeometricSet) = (h.into(), big.into());
        prop_assert!(subset(&small, &big).unwrap() && !subset(&big, &small).unwrap());
    }

    #[test]
    fn lp_matches_vertex_enumeration(seed in any::<u64>()) {
        let mut r = rng(seed);
        let dim = r.gen_range(2..=5);
        let cuts = r.gen_range(0..=10 - 2 * dim.min(5));
        let p = random_polytope(&mut r, dim, cuts);
        let c: Vec<f64> = (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect();
        let best = h_to_v(&p).unwrap().vertices.iter().map(|v| v.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>()).fold(f64::NEG_INFINITY, f64::max);
        let mut m = LinearModel::new();
        let x = m.add_free_vec(dim);
        for (row, d) in p.rows() {
            m.add_constraint(x.iter().copied().zip(row).collect(), Relation::Le, d).unwrap();
        }
        m.set_objective(x.iter().copied().zip(c.iter().copied()).collect(), 0.0, Sense::Maximize).unwrap();
        let out = solve_lp(&m);
        prop_assert!(out.is_optimal());
        prop_assert!((out.value - best).abs() < 1e-6, "{} vs {}", out.value, best);
        prop_assert_eq!(format!("{:?}", solve_lp(&m)), format!("{out:?}"));
    }

    #[test]
    fn milp_matches_enumeration(seed in any::<u64>()) {
        let mut r = rng(seed);
        let k = r.gen_range(1..=10);
        let mut m = LinearModel::new();
        let bins: Vec<_> = (0..k).map(|_| m.add_binary()).collect();
        let y = m.add_continuous(-1.0, 1.0);
        let mut rows = Vec::new();
        for _ in 0..r.gen_range(1..=3) {
            let coeffs: Vec<f64> = (0..=k).map(|_| r.gen_range(-2.0..2.0)).collect();
            let rhs = r.gen_range(-1.0..2.0);
            let vars: Vec<_> = bins.iter().copied().chain([y]).zip(coeffs.iter().copied()).collect();
            m.add_constraint(vars, Relation::Le, rhs).unwrap();
            rows.push((coeffs, rhs));
        }
        let c: Vec<f64> = (0..=k).map(|_| r.gen_range(-1.0..1.0)).collect();
        m.set_objective(bins.iter().copied().chain([y]).zip(c.iter().copied()).collect(), 0.0, Sense::Maximize).unwrap();
        let mut best: Option<f64> = None;
        for code in 0u32..1 << k {
            let mut fixed = m.clone();
            for (j, &b) in bins.iter().enumerate() {
                fixed.fix(b, f64::from(code >> j & 1)).unwrap();
            }
            let out = solve_lp(&fixed);
            if out.is_optimal() {
                best = Some(best.map_or(out.value, |b: f64| b.max(out.value)));
            }
        }
        let out = solve_milp(&m);
        match best {
            None => prop_assert_eq!(out.status, LpStatus::Infeasible),
            Some(b) => {
                prop_assert!(out.is_optimal());
                prop_assert!((out.value - b).abs() < 1e-6);
                for &v in &bins {
                    prop_assert!(out.point[v] == 0.0 || out.point[v] == 1.0);
                }
            }
        }
        prop_assert_eq!(format!("{:?}", solve_milp(&m)), format!("{out:?}"));
    }

    #[test]
    fn sat_matches_truth_table(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=12);
        let clauses: Vec<Vec<i32>> = (0..r.gen_range(1..=3 * n + 2))
            .map(|_| (0..r.gen_range(1..=3)).map(|_| {
                let v = r.gen_range(1..=n as i32);
                if r.gen_bool(0.5) { v } else { -v }
            }).collect())
            .collect();
        let cnf = Cnf::new(n, clauses.clone()).unwrap();
        let any = (0u32..1 << n).any(|code| {
            let a: Vec<bool> = (0..n).map(|j| code >> j & 1 == 1).collect();
            cnf.satisfied_by(&a)
        });
        let got = sat_solve(&cnf);
        prop_assert_eq!(got.is_some(), any);
        if let Some(a) = &got {
            prop_assert!(cnf.satisfied_by(a));
        }
        prop_assert_eq!(sat_solve(&cnf), got);
    }

    #[test]
    fn interval_bounds_hold_at_every_layer(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=3);
        let net = random_net(&mut r, n, 3);
        let h = random_box(&mut r, n);
        let b = bounds_from_box(&net, &h);
        for _ in 0..50 {
            let x = sample(&mut r, &h);
            let (pre, post) = net.trace(&x).unwrap();
            for (i, z) in post.iter().enumerate() {
                let (lo, hi) = (b.post[i].low(), b.post[i].high());
                prop_assert!(z.iter().zip(lo).zip(hi).all(|((v, l), u)| *v >= l - 1e-9 && *v <= u + 1e-9));
            }
            for (i, z) in pre.iter().enumerate() {
                let (lo, hi) = (b.pre[i].low(), b.pre[i].high());
                prop_assert!(z.iter().zip(lo).zip(hi).all(|((v, l), u)| *v >= l - 1e-9 && *v <= u + 1e-9));
            }
        }
    }

    #[test]
    fn gradients_match_differences_and_bounds(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=3);
        let net = random_net(&mut r, n, 3);
        let h = random_box(&mut r, n);
        let gb = get_gradient_bounds(&net, &h.clone().into()).unwrap();
        for _ in 0..20 {
            let x = sample(&mut r, &h);
            let g = get_gradient(&net, &x).unwrap();
            prop_assert!(g.iter().zip(gb.lg.iter()).zip(gb.ug.iter()).all(|((v, l), u)| *l - 1e-9 <= *v && *v <= *u + 1e-9));
            let (pre, _) = net.trace(&x).unwrap();
            let smooth = net.layers().iter().zip(&pre).all(|(l, z)| l.activation == Activation::Id || z.iter().all(|v| v.abs() > 1e-3));
            if smooth {
                for k in 0..n {
                    let (mut a, mut b) = (x.clone(), x.clone());
                    a[k] += 1e-6;
                    b[k] -= 1e-6;
                    let (fa, fb) = (net.forward(&a).unwrap(), net.forward(&b).unwrap());
                    for j in 0..fa.len() {
                        prop_assert!(((fa[j] - fb[j]) / 2e-6 - g[(j, k)]).abs() < 1e-4);
                    }
                }
            }
        }
    }

    #[test]
    fn interval_map_matches_corners(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=4);
        let k = r.gen_range(1..=3);
        let w = DMatrix::from_fn(k, n, |_, _| r.gen_range(-2.0..2.0));
        let h = random_box(&mut r, n);
        let (lo, hi) = interval_map(&w, &h.low(), &h.high()).unwrap();
        for j in 0..k {
            let vals: Vec<f64> = h.vertices().iter().map(|v| (0..n).map(|c| w[(j, c)] * v[c]).sum()).collect();
            let (mn, mx) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            prop_assert!((mn - lo[j]).abs() < 1e-9 && (mx - hi[j]).abs() < 1e-9);
        }
    }

    #[test]
    fn relaxations_nest(l in -3.0..-0.01f64, u in 0.01..3.0f64, s in 0.0..1.0f64, t in 0.0..1.0f64) {
        let zh = l + s * (u - l);
        let top = u * (zh - l) / (u - l);
        let par = parallel_relaxation_bounds(l, u).unwrap();
        let in_band = |z: f64| par.slope * zh + par.lower_intercept <= z + 1e-12 && z <= par.slope * zh + par.upper_intercept + 1e-12;
        let exact = zh.max(0.0);
        prop_assert!(exact >= 0.0 && exact >= zh && exact <= top + 1e-12);
        prop_assert!(in_band(exact));
        let z = zh.max(0.0) + t * (top - zh.max(0.0));
        prop_assert!(in_band(z));
    }

    #[test]
    fn mip_encodings_reproduce_the_graph(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=2);
        let net = random_net(&mut r, n, 2);
        prop_assume!(net.relu_count() <= 8);
        let h = random_box(&mut r, n);
        let b = bounds_from_box(&net, &h);
        let x = sample(&mut r, &h);
        let y = net.forward(&x).unwrap();
        for kind in [EncodingKind::NaiveMIP(1e3), EncodingKind::BoundedMIP(&b)] {
            for sense in [Sense::Minimize, Sense::Maximize] {
                let mut m = LinearModel::new();
                let vars = encode_network(&mut m, &net, kind).unwrap();
                for (&v, &xv) in vars.input().iter().zip(&x) {
                    m.fix(v, xv).unwrap();
                }
                m.set_objective(vec![(vars.output()[0], 1.0)], 0.0, sense).unwrap();
                let out = solve_milp(&m);
                prop_assert!(out.is_optimal());
                prop_assert!((out.value - y[0]).abs() < 1e-6, "{:?} {} vs {}", sense, out.value, y[0]);
            }
        }
    }

    #[test]
    fn zero_slack_equals_standard_lp(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=3);
        let net = random_net(&mut r, n, 2);
        let h = random_box(&mut r, n);
        let d = get_activation(&net, &h.center).unwrap();
        let c: Vec<f64> = (0..net.output_dim()).map(|_| r.gen_range(-1.0..1.0)).collect();
        let solve = |kind: EncodingKind| {
            let mut m = LinearModel::new();
            let vars = encode_network(&mut m, &net, kind).unwrap();
            for (v, j) in vars.input().iter().zip(0..) {
                m.set_bounds(*v, h.low()[j], h.high()[j]).unwrap();
            }
            for (_, _, s) in vars.all_slacks() {
                m.fix(s, 0.0).unwrap();
            }
            m.set_objective(vars.output().iter().copied().zip(c.iter().copied()).collect(), 0.0, Sense::Maximize).unwrap();
            solve_lp(&m)
        };
        let (a, b) = (solve(EncodingKind::StandardLP(&d)), solve(EncodingKind::SlackLP(&d)));
        prop_assert_eq!(a.status, b.status);
        if a.is_optimal() {
            prop_assert!((a.value - b.value).abs() < 1e-7);
        }
    }

    #[test]
    fn text_round_trips(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=4);
        let net = random_net(&mut r, n, 3);
        prop_assert_eq!(parse_network(&write_network(&net)).unwrap(), net);
    }

    #[test]
    fn text_parser_never_panics(src in "[0-9a-z,.# \\-\\n]{0,200}") {
        let _ = parse_network(&src);
    }
}

#[test]
fn pattern_enumeration_covers_every_region() {
    let mut r = rng(5);
    let net = random_net(&mut r, 2, 2);
    let all = ActivationPattern::enumerate(&net);
    assert_eq!(all.len(), 1 << net.relu_count());
    for _ in 0..200 {
        let x = vec![r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)];
        assert!(all.contains(&get_activation(&net, &x).unwrap()));
    }
}
