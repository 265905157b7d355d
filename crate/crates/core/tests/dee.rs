mod common;

use common::{optima, random_instance, random_uneven};
use maxpersist::dee::{dee1, dee2, DeeOptions};
use maxpersist::{EnergyInstance, Mode, Solver};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WEAK: DeeOptions = DeeOptions { mode: Mode::Weak, pair_feedback: false };
const STRICT: DeeOptions = DeeOptions { mode: Mode::Strict, pair_feedback: false };

#[test]
fn separable_instance_collapses_to_minimizers() {
    let mut f = EnergyInstance::new(vec![3, 3]).unwrap();
    f.unary_mut(0).copy_from_slice(&[2.0, 0.0, 1.0]);
    f.unary_mut(1).copy_from_slice(&[0.0, 3.0, 0.0]);
    let solver = Solver::default();
    let out = dee1(&f, WEAK, &solver).unwrap();
    assert_eq!(out.alive[0], vec![false, true, false]);
    assert_eq!(out.alive[1].iter().filter(|&&b| b).count(), 1);
    let strict = dee1(&f, STRICT, &solver).unwrap();
    assert_eq!(strict.alive[0], vec![false, true, false]);
    assert_eq!(strict.alive[1], vec![true, false, true]);
}

#[test]
fn flat_costs_weak_versus_strict() {
    let mut f = EnergyInstance::new(vec![3, 3]).unwrap();
    f.add_edge(0, 1).unwrap();
    let solver = Solver::default();
    let weak = dee1(&f, WEAK, &solver).unwrap();
    assert!(weak.alive.iter().all(|row| row.iter().filter(|&&b| b).count() == 1));
    let strict = dee1(&f, STRICT, &solver).unwrap();
    assert!(strict.certificate.eliminated.is_empty());
    assert!(strict.swaps.is_empty());
}

#[test]
fn swaps_are_recorded_with_slack() {
    let mut f = EnergyInstance::new(vec![2]).unwrap();
    f.unary_mut(0).copy_from_slice(&[4.0, 1.0]);
    let out = dee1(&f, WEAK, &Solver::default()).unwrap();
    assert_eq!(out.swaps.len(), 1);
    let swap = out.swaps[0];
    assert_eq!((swap.node, swap.from, swap.to), (0, 0, 1));
    assert_eq!(swap.slack, 3.0);
}

#[test]
fn without_pairwise_terms_dee2_is_dee1() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let solver = Solver::default();
    for _ in 0..10 {
        let mut f = EnergyInstance::new(vec![4; 5]).unwrap();
        for s in 0..5 {
            for v in f.unary_mut(s) {
                *v = rng.gen_range(-5..=5) as f64;
            }
        }
        let a = dee1(&f, WEAK, &solver).unwrap();
        let b = dee2(&f, WEAK, &solver).unwrap();
        assert_eq!(a.alive, b.alive);
    }
}

#[test]
fn surviving_labels_and_pairs_keep_an_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let solver = Solver::default();
    for _ in 0..60 {
        let f = random_instance(&mut rng, 6, 3, 0.5, 10);
        let (_, opt) = optima(&f);
        let out = dee2(&f, WEAK, &solver).unwrap();
        assert!(out.certificate.verification.improving);
        let kept = |x: &Vec<usize>| {
            (0..6).all(|s| out.alive[s][x[s]])
                && f.edges().iter().enumerate().all(|(e, &(s, t))| !out.excluded[e][x[s] * 3 + x[t]])
        };
        assert!(opt.iter().any(kept));
    }
}

#[test]
fn strict_dee_keeps_every_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let solver = Solver::default();
    for _ in 0..60 {
        let f = random_instance(&mut rng, 6, 3, 0.5, 2);
        let out = dee1(&f, STRICT, &solver).unwrap();
        for x in optima(&f).1 {
            assert!((0..6).all(|s| out.alive[s][x[s]]));
        }
    }
}

#[test]
fn dee2_eliminates_at_least_dee1() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let solver = Solver::default();
    for _ in 0..30 {
        let f = random_instance(&mut rng, 6, 3, 0.5, 10);
        let a = dee1(&f, WEAK, &solver).unwrap();
        let b = dee2(&f, WEAK, &solver).unwrap();
        for s in 0..6 {
            for i in 0..3 {
                assert!(a.alive[s][i] || !b.alive[s][i]);
            }
        }
    }
}

#[test]
fn result_is_a_fixpoint() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let solver = Solver::default();
    for _ in 0..20 {
        let f = random_instance(&mut rng, 6, 3, 0.5, 10);
        let out = dee1(&f, WEAK, &solver).unwrap();
        // Restricting to the survivors, no label is dominated any more.
        for s in 0..6 {
            for i in (0..3).filter(|&i| out.alive[s][i]) {
                for j in (0..3).filter(|&j| j != i && out.alive[s][j]) {
                    let mut gain = f.unary(s)[i] - f.unary(s)[j];
                    for &(t, e) in f.neighbors(s) {
                        let cost =
                            |a: usize, b: usize| if f.edges()[e].0 == s { f.pair(e, a, b) } else { f.pair(e, b, a) };
                        gain += (0..3)
                            .filter(|&k| out.alive[t][k])
                            .map(|k| cost(i, k) - cost(j, k))
                            .fold(f64::INFINITY, f64::min);
                    }
                    assert!(gain < 0.0, "{s}: {i} dominated by {j}");
                }
            }
        }
    }
}

#[test]
fn pair_feedback_is_certified_or_refused() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let solver = Solver::default();
    let opts = DeeOptions { mode: Mode::Weak, pair_feedback: true };
    for _ in 0..40 {
        let f = random_instance(&mut rng, 6, 3, 0.5, 10);
        if let Ok(out) = dee2(&f, opts, &solver) {
            assert!(out.certificate.verification.improving);
            let alive = &out.alive;
            assert!(optima(&f).1.iter().any(|x| (0..6).all(|s| alive[s][x[s]])));
        }
    }
}

#[test]
fn uneven_label_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let solver = Solver::default();
    for _ in 0..60 {
        let f = random_uneven(&mut rng, 6, 4, 0.5, 5);
        let opt = optima(&f).1;
        let out = dee2(&f, WEAK, &solver).unwrap();
        let kept = |x: &Vec<usize>| {
            (0..6).all(|s| out.alive[s][x[s]])
                && f.edges().iter().enumerate().all(|(e, &(s, t))| !out.excluded[e][x[s] * f.labels(t) + x[t]])
        };
        assert!(opt.iter().any(kept));
        let strict = dee1(&f, STRICT, &solver).unwrap();
        assert!(opt.iter().all(|x| (0..6).all(|s| strict.alive[s][x[s]])));
    }
}
