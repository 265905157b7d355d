mod common;

use common::{chain, optima, random_instance, random_mixture, random_uneven};
use maxpersist::mapping::{linear_extension_apply, verify_improving, PixelwiseMapping};
use maxpersist::persistency::{
    apply_fractional_xi, l1_program, max_improve, max_strong_all_to_one_unknown, necessary_condition_filter,
    passes_necessary, schlesinger_facet, select_y, solve_eps_l1, solve_l1, FractionalXi,
};
use maxpersist::{EnergyInstance, Labeling, Mode, Solver};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn subset(a: &[(usize, usize)], b: &[(usize, usize)]) -> bool {
    a.iter().all(|x| b.contains(x))
}

fn lp_y(f: &EnergyInstance, solver: &Solver) -> Labeling {
    select_y(&schlesinger_facet(f, solver).unwrap(), solver.tol.supp)
}

#[test]
fn program_has_one_indicator_per_other_label() {
    let f = EnergyInstance::new(vec![3, 2, 4]).unwrap();
    let prog = l1_program(&f, &Labeling(vec![0, 1, 2]), None, None).unwrap();
    let count = prog.xi_vars.iter().flatten().filter(|v| v.is_some()).count();
    assert_eq!(count, 2 + 1 + 3);
    assert_eq!(prog.xi_vars[1][1], None);
    let window = [true, false, false];
    let prog = l1_program(&f, &Labeling(vec![0, 1, 2]), None, Some(&window)).unwrap();
    assert_eq!(prog.xi_vars.iter().flatten().filter(|v| v.is_some()).count(), 2);
}

#[test]
fn unique_tree_optimum_is_fully_persistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let solver = Solver::default();
    let mut seen = 0;
    while seen < 10 {
        let mut f = chain(&mut rng, 6, 3, 20);
        f.unary_mut(0)[0] += rng.gen_range(0.0..0.5);
        let (_, opt) = optima(&f);
        if opt.len() != 1 {
            continue;
        }
        seen += 1;
        let y = Labeling(opt[0].clone());
        let out = solve_l1(&f, &y, &solver).unwrap();
        assert_eq!(out.certificate.completeness, 100.0);
        assert_eq!(out.certificate.num_eliminated(), 6 * 2);
    }
}

#[test]
fn separable_instance_keeps_only_minimizers() {
    let mut f = EnergyInstance::new(vec![3, 3, 3]).unwrap();
    for (s, u) in [[1.0, 0.0, 2.0], [5.0, 4.0, 3.0], [0.0, 0.0, 1.0]].iter().enumerate() {
        f.unary_mut(s).copy_from_slice(u);
    }
    let solver = Solver::default();
    let out = solve_l1(&f, &Labeling(vec![1, 2, 0]), &solver).unwrap();
    let alive = out.certificate.alive();
    assert_eq!(alive[0], vec![false, true, false]);
    assert_eq!(alive[1], vec![false, false, true]);
    // A tie at node 2: label 1 may go to 0 in the weak sense.
    assert_eq!(alive[2], vec![true, false, false]);
    // The strict variant must keep both tied labels.
    let strict = solve_eps_l1(&f, &Labeling(vec![1, 2, 0]), 1e-3, &solver).unwrap();
    assert_eq!(strict.certificate.mode, Mode::Strict);
    assert_eq!(strict.certificate.alive()[2], vec![true, true, false]);
}

#[test]
fn strict_elimination_is_inside_weak_elimination() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let solver = Solver::default();
    for _ in 0..30 {
        let f = random_instance(&mut rng, 6, 3, 0.4, 10);
        let y = lp_y(&f, &solver);
        let weak = solve_l1(&f, &y, &solver).unwrap().certificate;
        let mut last = usize::MAX;
        for eps in [1e-4, 1e-2, 1.0] {
            let strict = solve_eps_l1(&f, &y, eps, &solver).unwrap().certificate;
            assert!(subset(&strict.eliminated, &weak.eliminated));
            assert!(strict.num_eliminated() <= last);
            last = strict.num_eliminated();
        }
    }
}

#[test]
fn huge_margin_moves_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let solver = Solver::default();
    for _ in 0..10 {
        let f = random_instance(&mut rng, 5, 3, 0.5, 10);
        let out = solve_eps_l1(&f, &lp_y(&f, &solver), 1e4, &solver).unwrap();
        assert_eq!(out.xi.num_moved(), 0);
        assert!(out.certificate.eliminated.is_empty());
    }
}

#[test]
fn strict_certificates_keep_every_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let solver = Solver::default();
    for round in 0..40 {
        // Small integer costs produce ties between optima.
        let f = random_instance(&mut rng, 6, if round % 2 == 0 { 2 } else { 3 }, 0.5, 2);
        let (_, opt) = optima(&f);
        let strict = solve_eps_l1(&f, &lp_y(&f, &solver), 1e-3, &solver).unwrap().certificate;
        let alive = strict.alive();
        for x in &opt {
            assert!((0..6).all(|s| alive[s][x[s]]), "optimum {x:?} eliminated");
        }
    }
}

#[test]
fn all_to_one_unknown_on_binary_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let solver = Solver::default();
    for _ in 0..20 {
        let f = random_instance(&mut rng, 8, 2, 0.4, 5);
        let out = max_strong_all_to_one_unknown(&f, None, &solver).unwrap();
        let cert = &out.certificate;
        assert_eq!(cert.mode, Mode::Strict);
        assert!(cert.verification.improving);
        let alive = cert.alive();
        for x in optima(&f).1 {
            assert!((0..8).all(|s| alive[s][x[s]]));
        }
    }
}

#[test]
fn max_improve_is_inside_l1() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let solver = Solver::default();
    for _ in 0..30 {
        let f = random_instance(&mut rng, 6, 3, 0.5, 10);
        let y = lp_y(&f, &solver);
        let mi = max_improve(&f, &y, &solver).unwrap();
        let l1 = solve_l1(&f, &y, &solver).unwrap();
        assert!(mi.certificate.verification.improving);
        assert!(subset(&mi.certificate.eliminated, &l1.certificate.eliminated));
    }
}

#[test]
fn necessary_condition_filter_examples() {
    let mut f = EnergyInstance::new(vec![3]).unwrap();
    f.unary_mut(0).copy_from_slice(&[0.0, 0.0, 1.0]);
    let solver = Solver::default();
    let facet = schlesinger_facet(&f, &solver).unwrap();
    assert_eq!(facet.node_support[0], vec![true, true, false]);
    let candidates = vec![
        PixelwiseMapping::new(vec![vec![0, 1, 2]]).unwrap(),
        PixelwiseMapping::new(vec![vec![0, 0, 0]]).unwrap(),
        PixelwiseMapping::new(vec![vec![0, 1, 0]]).unwrap(),
        PixelwiseMapping::new(vec![vec![2, 2, 2]]).unwrap(),
    ];
    assert_eq!(necessary_condition_filter(&facet, &candidates, Mode::Weak).len(), 3);
    let strict = necessary_condition_filter(&facet, &candidates, Mode::Strict);
    assert_eq!(strict.len(), 2);
    assert!(strict.iter().all(|p| p.get(0, 0) == 0 && p.get(0, 1) == 1));
}

#[test]
fn verified_maps_pass_the_filter() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let solver = Solver::default();
    for _ in 0..20 {
        let f = random_instance(&mut rng, 6, 3, 0.5, 3);
        let facet = schlesinger_facet(&f, &solver).unwrap();
        let y = select_y(&facet, solver.tol.supp);
        let weak = solve_l1(&f, &y, &solver).unwrap().certificate;
        assert!(passes_necessary(&facet, &weak.mapping, Mode::Weak));
        let strict = solve_eps_l1(&f, &y, 1e-3, &solver).unwrap().certificate;
        let report = verify_improving(&f, &strict.mapping, Mode::Strict, Some(1e-3), &solver).unwrap();
        assert!(report.improving);
        assert!(passes_necessary(&facet, &strict.mapping, Mode::Strict));
    }
}

#[test]
fn fractional_xi_stays_in_the_polytope() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..30 {
        let f = random_instance(&mut rng, 4, 3, 0.6, 5);
        let y = Labeling((0..4).map(|_| rng.gen_range(0..3)).collect());
        let node =
            (0..4).map(|s| (0..3).map(|i| if i == y[s] { 0.0 } else { rng.gen_range(0.0..1.0) }).collect()).collect();
        let mut xi = FractionalXi::from_nodes(&f, &y, node);
        assert!(xi.max_violation(&f) < 1e-12);
        // Move each pair value to a random point of its admissible interval.
        for (e, &(s, t)) in f.edges().iter().enumerate() {
            for (k, v) in xi.edge[e].iter_mut().enumerate() {
                let (a, b) = (xi.node[s][k / 3], xi.node[t][k % 3]);
                *v = rng.gen_range((a + b - 1.0).max(0.0)..=a.min(b));
            }
        }
        assert!(xi.max_violation(&f) < 1e-12);
        let mu = random_mixture(&f, &mut rng);
        apply_fractional_xi(&f, &xi, &mu).check_feasible(&f, 1e-9).unwrap();
    }
}

#[test]
fn integral_xi_matches_the_label_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let f = random_instance(&mut rng, 4, 3, 0.6, 5);
        let y = Labeling((0..4).map(|_| rng.gen_range(0..3)).collect());
        let moved: Vec<Vec<bool>> = (0..4).map(|s| (0..3).map(|i| i != y[s] && rng.gen_bool(0.5)).collect()).collect();
        let node = moved.iter().map(|r| r.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()).collect();
        let xi = FractionalXi::from_nodes(&f, &y, node);
        let p = PixelwiseMapping::subset_to_one(&y, &moved).unwrap();
        let mu = random_mixture(&f, &mut rng);
        let a = apply_fractional_xi(&f, &xi, &mu);
        let b = linear_extension_apply(&f, &p, &mu);
        for (u, v) in a
            .node
            .iter()
            .flatten()
            .chain(a.edge.iter().flatten())
            .zip(b.node.iter().flatten().chain(b.edge.iter().flatten()))
        {
            assert!((u - v).abs() < 1e-12);
        }
    }
}

#[test]
fn uneven_label_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let solver = Solver::default();
    for _ in 0..40 {
        let f = random_uneven(&mut rng, 6, 4, 0.5, 5);
        let opt = optima(&f).1;
        let y = lp_y(&f, &solver);
        let l1 = solve_l1(&f, &y, &solver).unwrap().certificate;
        let mi = max_improve(&f, &y, &solver).unwrap().certificate;
        assert!(subset(&mi.eliminated, &l1.eliminated));
        for cert in [&l1, &mi] {
            let alive = cert.alive();
            assert!(opt.iter().any(|x| (0..6).all(|s| alive[s][x[s]])));
        }
        let strict = solve_eps_l1(&f, &y, 1e-3, &solver).unwrap().certificate.alive();
        assert!(opt.iter().all(|x| (0..6).all(|s| strict[s][x[s]])));
    }
}
