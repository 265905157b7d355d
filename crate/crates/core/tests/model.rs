mod common;

use common::{chain2, labelings, naive_energy, random_instance, random_mixture};
use maxpersist::model::{delta_embed, inner, reparametrize, zero_top_normalize};
use maxpersist::{EnergyInstance, Labeling, Reparametrization};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn zero_instance_has_zero_energy() {
    let f = EnergyInstance::new(vec![3, 2, 4]).unwrap();
    for x in labelings(&f) {
        assert_eq!(f.eval(&x), 0.0);
    }
}

#[test]
fn chain_energy_by_hand() {
    let f = chain2();
    assert_eq!(f.energy(&Labeling(vec![0, 0])).unwrap(), 1.0);
    assert_eq!(f.energy(&Labeling(vec![1, 0])).unwrap(), 4.0);
    assert_eq!(f.energy(&Labeling(vec![1, 1])).unwrap(), 6.0);
}

#[test]
fn energy_matches_naive_summation() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let f = random_instance(&mut rng, 4, 3, 0.6, 20);
        for x in labelings(&f) {
            assert_eq!(f.eval(&x), naive_energy(&f, &x));
        }
    }
}

#[test]
fn energy_rejects_bad_labelings() {
    let f = chain2();
    assert!(f.energy(&Labeling(vec![0])).is_err());
    assert!(f.energy(&Labeling(vec![0, 2])).is_err());
}

#[test]
fn delta_embedding_of_chain() {
    let f = chain2();
    let mu = delta_embed(&f, &Labeling(vec![0, 0])).unwrap();
    assert_eq!(mu.node, vec![vec![1.0, 0.0], vec![1.0, 0.0]]);
    assert_eq!(mu.edge, vec![vec![1.0, 0.0, 0.0, 0.0]]);
    mu.check_feasible(&f, 0.0).unwrap();
}

#[test]
fn inner_product_with_indicator_is_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let f = random_instance(&mut rng, 5, 3, 0.5, 10);
        let x: Vec<usize> = (0..5).map(|_| rng.gen_range(0..3)).collect();
        let mu = delta_embed(&f, &Labeling(x.clone())).unwrap();
        mu.check_feasible(&f, 0.0).unwrap();
        assert_eq!(inner(&f, &mu), f.eval(&x));
    }
}

#[test]
fn zero_reparametrization_is_identity() {
    let f = chain2();
    assert_eq!(reparametrize(&f, &Reparametrization::zeros(&f)).unwrap(), f);
}

fn random_phi(f: &EnergyInstance, rng: &mut ChaCha8Rng) -> Reparametrization {
    let mut phi = Reparametrization::zeros(f);
    for (a, b) in &mut phi.messages {
        a.iter_mut().chain(b.iter_mut()).for_each(|v| *v = rng.gen_range(-5.0..5.0));
    }
    phi.offsets.iter_mut().for_each(|v| *v = rng.gen_range(-5.0..5.0));
    phi
}

#[test]
fn reparametrization_keeps_energies() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let f = random_instance(&mut rng, 3, 3, 1.0, 10);
    for _ in 0..10 {
        let g = reparametrize(&f, &random_phi(&f, &mut rng)).unwrap();
        assert_ne!(g, f);
        for x in labelings(&f) {
            assert!((g.eval(&x) - f.eval(&x)).abs() < 1e-9);
        }
        for _ in 0..10 {
            let mu = random_mixture(&f, &mut rng);
            assert!((inner(&g, &mu) - inner(&f, &mu)).abs() < 1e-9);
        }
    }
}

#[test]
fn zero_top_normalization_of_chain() {
    let f = chain2();
    let g = zero_top_normalize(&f, &Labeling(vec![0, 0])).unwrap();
    assert_eq!(g.unary(0)[0], 0.0);
    assert_eq!(g.unary(1)[0], 0.0);
    assert_eq!(g.pair(0, 0, 0), 0.0);
    assert_eq!(g.pair(0, 0, 1), 0.0);
    assert_eq!(g.pair(0, 1, 0), 0.0);
    for x in labelings(&f) {
        assert_eq!(g.eval(&x), f.eval(&x));
    }
    assert_eq!(zero_top_normalize(&g, &Labeling(vec![0, 0])).unwrap(), g);
}

#[test]
fn zero_top_normalization_keeps_relaxed_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let f = random_instance(&mut rng, 5, 3, 0.5, 10);
        let y = Labeling((0..5).map(|_| rng.gen_range(0..3)).collect());
        let g = zero_top_normalize(&f, &y).unwrap();
        for _ in 0..10 {
            let mu = random_mixture(&f, &mut rng);
            assert!((inner(&g, &mu) - inner(&f, &mu)).abs() < 1e-9);
        }
    }
}

#[test]
fn malformed_instances_are_rejected() {
    assert!(EnergyInstance::new(vec![2, 0]).is_err());
    let mut f = EnergyInstance::new(vec![2, 2]).unwrap();
    assert!(f.add_edge(0, 0).is_err());
    assert!(f.add_edge(0, 2).is_err());
    f.add_edge(0, 1).unwrap();
    assert!(f.add_edge(1, 0).is_err());
    assert!(f.set_unary(0, 2, 1.0).is_err());
}
