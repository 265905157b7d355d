mod common;

use common::{chain, optima, random_instance};
use maxpersist::certificate::completeness_of;
use maxpersist::harness::{
    brute_force_minimize, dp_minimize, dp_split, generate, integrality_gap, min_energy, Family, GenSpec, DEFAULT_CAP,
};
use maxpersist::lp::build_schlesinger_lp;
use maxpersist::{EnergyInstance, Error, Solver};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn generation_is_deterministic() {
    for family in [Family::Potts, Family::Full] {
        let spec = GenSpec::grid(42, 4, 5, 3, family);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        assert_ne!(generate(&spec).unwrap(), generate(&GenSpec { seed: 43, ..spec }).unwrap());
    }
}

#[test]
fn grid_sizes() {
    let f = generate(&GenSpec::grid(0, 10, 10, 3, Family::Potts)).unwrap();
    assert_eq!(f.num_nodes(), 100);
    assert_eq!(f.num_edges(), 180);
    let spec = GenSpec { connectivity: 8, ..GenSpec::grid(0, 10, 10, 3, Family::Potts) };
    assert_eq!(generate(&spec).unwrap().num_edges(), 180 + 2 * 81);
}

#[test]
fn cost_ranges_and_potts_structure() {
    let f = generate(&GenSpec::grid(7, 5, 5, 4, Family::Potts)).unwrap();
    for s in 0..25 {
        assert!(f.unary(s).iter().all(|&v| (0.0..=100.0).contains(&v) && v.fract() == 0.0));
    }
    for e in 0..f.num_edges() {
        for i in 0..4 {
            for j in 0..4 {
                let v = f.pair(e, i, j);
                if i == j {
                    assert!((-50.0..=0.0).contains(&v));
                } else {
                    assert_eq!(v, 0.0);
                }
            }
        }
    }
    let spec = GenSpec { potts_per_edge: true, ..GenSpec::grid(7, 5, 5, 4, Family::Potts) };
    let g = generate(&spec).unwrap();
    for e in 0..g.num_edges() {
        assert!((1..4).all(|i| g.pair(e, i, i) == g.pair(e, 0, 0)));
    }
    let full = generate(&GenSpec::grid(7, 5, 5, 4, Family::Full)).unwrap();
    for e in 0..full.num_edges() {
        assert!((0..16).all(|k| (0.0..=100.0).contains(&full.pair(e, k / 4, k % 4))));
    }
}

#[test]
fn invalid_specs() {
    assert!(generate(&GenSpec::grid(0, 0, 3, 3, Family::Potts)).is_err());
    assert!(generate(&GenSpec::grid(0, 3, 3, 1, Family::Potts)).is_err());
    assert!(generate(&GenSpec { connectivity: 6, ..GenSpec::grid(0, 3, 3, 3, Family::Potts) }).is_err());
}

#[test]
fn brute_force_on_small_cases() {
    let mut f = EnergyInstance::new(vec![3, 2]).unwrap();
    f.unary_mut(0).copy_from_slice(&[1.0, 0.0, 2.0]);
    f.unary_mut(1).copy_from_slice(&[4.0, 3.0]);
    let bf = brute_force_minimize(&f, 100).unwrap();
    assert_eq!(bf.value, 3.0);
    assert_eq!(bf.argmin.len(), 1);
    assert_eq!(bf.argmin[0].0, vec![1, 1]);

    let flat = EnergyInstance::new(vec![2, 3]).unwrap();
    assert_eq!(brute_force_minimize(&flat, 100).unwrap().argmin.len(), 6);
    assert!(matches!(brute_force_minimize(&flat, 5), Err(Error::CapExceeded { .. })));
}

#[test]
fn tree_minimum_matches_relaxation() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let solver = Solver::default();
    for _ in 0..10 {
        let f = chain(&mut rng, 6, 3, 20);
        let lp = solver.solve(&build_schlesinger_lp(&f).lp).unwrap().value;
        assert!((min_energy(&f, DEFAULT_CAP).unwrap() - lp).abs() < 1e-7);
        assert!(integrality_gap(&f, &solver, DEFAULT_CAP).unwrap().abs() < 1e-7);
    }
}

#[test]
fn gap_is_never_negative() {
    let solver = Solver::default();
    for seed in 0..30 {
        let f = generate(&GenSpec::grid(seed, 3, 3, 3, Family::Potts)).unwrap();
        let gap = integrality_gap(&f, &solver, DEFAULT_CAP).unwrap();
        assert!(gap > -1e-7, "seed {seed}: {gap}");
    }
    // Frustrated cycle.
    let mut f = EnergyInstance::new(vec![2, 2, 2]).unwrap();
    for (s, t, want_equal) in [(0, 1, true), (1, 2, true), (0, 2, false)] {
        f.add_edge(s, t).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                if (i == j) == want_equal {
                    f.set_pair(s, t, i, j, -1.0).unwrap();
                }
            }
        }
    }
    assert!(integrality_gap(&f, &solver, DEFAULT_CAP).unwrap() > 0.5);
}

#[test]
fn completeness_percentages() {
    let f = EnergyInstance::new(vec![2; 10]).unwrap();
    assert_eq!(completeness_of(&f, 0), 0.0);
    assert_eq!(completeness_of(&f, 10), 100.0);
    assert!((completeness_of(&f, 3) - 30.0).abs() < 1e-12);
}

#[test]
fn dp_agrees_with_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for round in 0..100 {
        let f = random_instance(&mut rng, 6, 3, if round % 2 == 0 { 0.3 } else { 0.7 }, 10);
        let (min, _) = optima(&f);
        assert_eq!(dp_minimize(&f, None, None, DEFAULT_CAP).unwrap(), Some(min));

        let alive: Vec<Vec<bool>> = (0..6).map(|_| (0..3).map(|_| rng.gen_bool(0.7)).collect()).collect();
        let excluded: Vec<Vec<bool>> =
            (0..f.num_edges()).map(|_| (0..9).map(|_| rng.gen_bool(0.2)).collect()).collect();
        let marked: Vec<Vec<bool>> = (0..6).map(|_| (0..3).map(|_| rng.gen_bool(0.2)).collect()).collect();
        let mut want = [f64::INFINITY; 2];
        for x in common::labelings(&f) {
            let ok = (0..6).all(|s| alive[s][x[s]])
                && f.edges().iter().enumerate().all(|(e, &(s, t))| !excluded[e][x[s] * 3 + x[t]]);
            if ok {
                let k = usize::from((0..6).any(|s| marked[s][x[s]]));
                want[k] = want[k].min(f.eval(&x));
            }
        }
        let got = dp_split(&f, Some(&alive), Some(&excluded), Some(&marked), DEFAULT_CAP).unwrap();
        assert_eq!(got, want);
        let restricted = dp_minimize(&f, Some(&alive), Some(&excluded), DEFAULT_CAP).unwrap();
        let m = want[0].min(want[1]);
        assert_eq!(restricted, (m < f64::INFINITY).then_some(m));
    }
}

#[test]
fn dp_respects_the_cap() {
    let f = generate(&GenSpec::grid(0, 6, 6, 4, Family::Potts)).unwrap();
    assert!(matches!(dp_minimize(&f, None, None, 100), Err(Error::CapExceeded { .. })));
    assert!(dp_minimize(&f, None, None, DEFAULT_CAP).unwrap().is_some());
}
