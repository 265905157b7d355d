#![allow(dead_code)]

use maxpersist::{EnergyInstance, RelaxedLabeling};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Two nodes, two labels: `f0 = 1`, `f_s = (0, 2)`, `f_t = (0, 3)`, `f_st = [[0, 1], [1, 0]]`.
pub fn chain2() -> EnergyInstance {
    let mut f = EnergyInstance::new(vec![2, 2]).unwrap();
    f.set_f0(1.0);
    f.set_unary(0, 1, 2.0).unwrap();
    f.set_unary(1, 1, 3.0).unwrap();
    f.add_edge(0, 1).unwrap();
    f.set_pair(0, 1, 0, 1, 1.0).unwrap();
    f.set_pair(0, 1, 1, 0, 1.0).unwrap();
    f
}

/// Integer costs in `-range..=range` on a random graph.
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize, k: usize, edge_p: f64, range: i32) -> EnergyInstance {
    let mut f = EnergyInstance::new(vec![k; n]).unwrap();
    for s in 0..n {
        for t in s + 1..n {
            if rng.gen_bool(edge_p) {
                f.add_edge(s, t).unwrap();
            }
        }
    }
    fill_random(&mut f, rng, range);
    f
}

pub fn fill_random(f: &mut EnergyInstance, rng: &mut ChaCha8Rng, range: i32) {
    for s in 0..f.num_nodes() {
        for v in f.unary_mut(s) {
            *v = rng.gen_range(-range..=range) as f64;
        }
    }
    for e in 0..f.num_edges() {
        for v in f.pair_table_mut(e) {
            *v = rng.gen_range(-range..=range) as f64;
        }
    }
}

/// Path `0 - 1 - ... - (n-1)`.
pub fn chain(rng: &mut ChaCha8Rng, n: usize, k: usize, range: i32) -> EnergyInstance {
    let mut f = EnergyInstance::new(vec![k; n]).unwrap();
    for s in 1..n {
        f.add_edge(s - 1, s).unwrap();
    }
    fill_random(&mut f, rng, range);
    f
}

/// Every labeling in lexicographic order.
pub fn labelings(f: &EnergyInstance) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for s in 0..f.num_nodes() {
        out = out.into_iter().flat_map(|x| (0..f.labels(s)).map(move |i| [x.clone(), vec![i]].concat())).collect();
    }
    out
}

/// Independent summation of the energy.
pub fn naive_energy(f: &EnergyInstance, x: &[usize]) -> f64 {
    let mut v = f.f0();
    for s in 0..f.num_nodes() {
        v += f.unary(s)[x[s]];
    }
    for (e, &(s, t)) in f.edges().iter().enumerate() {
        v += f.pair_table(e)[x[s] * f.labels(t) + x[t]];
    }
    v
}

/// Minimum and all minimizers by enumeration.
pub fn optima(f: &EnergyInstance) -> (f64, Vec<Vec<usize>>) {
    let all: Vec<(f64, Vec<usize>)> = labelings(f).into_iter().map(|x| (naive_energy(f, &x), x)).collect();
    let best = all.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    (best, all.into_iter().filter(|p| p.0 <= best + 1e-9).map(|p| p.1).collect())
}

/// A mixture of a few labelings, which lies in the local polytope.
pub fn random_mixture(f: &EnergyInstance, rng: &mut ChaCha8Rng) -> RelaxedLabeling {
    let mut mu = RelaxedLabeling::zeros(f);
    mu.mu0 = 1.0;
    let m = rng.gen_range(1..=3);
    for _ in 0..m {
        let x: Vec<usize> = (0..f.num_nodes()).map(|s| rng.gen_range(0..f.labels(s))).collect();
        for s in 0..f.num_nodes() {
            mu.node[s][x[s]] += 1.0 / m as f64;
        }
        for (e, &(s, t)) in f.edges().iter().enumerate() {
            mu.edge[e][x[s] * f.labels(t) + x[t]] += 1.0 / m as f64;
        }
    }
    mu
}

/// Like [`random_instance`] with label counts drawn from `2..=kmax`.
pub fn random_uneven(rng: &mut ChaCha8Rng, n: usize, kmax: usize, edge_p: f64, range: i32) -> EnergyInstance {
    let mut f = EnergyInstance::new((0..n).map(|_| rng.gen_range(2..=kmax)).collect()).unwrap();
    for s in 0..n {
        for t in s + 1..n {
            if rng.gen_bool(edge_p) {
                f.add_edge(s, t).unwrap();
            }
        }
    }
    fill_random(&mut f, rng, range);
    f
}
