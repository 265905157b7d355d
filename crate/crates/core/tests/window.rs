mod common;

use common::{optima, random_instance};
use maxpersist::harness::{generate, Family, GenSpec};
use maxpersist::persistency::{schlesinger_facet, select_y, solve_l1};
use maxpersist::window::{bfs_windows, grid_windows, window_persistency, write_trace_csv, Window, WindowOptions};
use maxpersist::{EnergyInstance, Solver};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn grid_window_layout() {
    let ws = grid_windows(5, 5, 3, 3, 2);
    assert_eq!(ws.len(), 4);
    assert_eq!(ws[0].nodes(), &[0, 1, 2, 5, 6, 7, 10, 11, 12]);
    assert_eq!(ws[3].nodes()[0], 12);
    // Windows larger than the grid are clipped to it.
    assert_eq!(
        grid_windows(2, 2, 8, 8, 4),
        vec![Window::new(&EnergyInstance::new(vec![2; 4]).unwrap(), vec![0, 1, 2, 3]).unwrap()]
    );
}

#[test]
fn bfs_windows_cover_every_node() {
    let f = generate(&GenSpec::grid(1, 4, 5, 2, Family::Potts)).unwrap();
    let ws = bfs_windows(&f, 1);
    let mut covered = [false; 20];
    ws.iter().flat_map(|w| w.nodes()).for_each(|&s| covered[s] = true);
    assert!(covered.iter().all(|&b| b));
}

#[test]
fn window_validation() {
    let f = EnergyInstance::new(vec![2; 3]).unwrap();
    assert!(Window::new(&f, vec![]).is_err());
    assert!(Window::new(&f, vec![3]).is_err());
    assert_eq!(Window::new(&f, vec![2, 0, 2]).unwrap().nodes(), &[0, 2]);
}

#[test]
fn single_separable_node_keeps_its_minimizer() {
    let mut f = EnergyInstance::new(vec![4]).unwrap();
    f.unary_mut(0).copy_from_slice(&[3.0, -1.0, 2.0, 0.0]);
    let out = window_persistency(&f, &[Window::all(&f)], &WindowOptions::default(), &Solver::default()).unwrap();
    assert_eq!(out.certificate.alive()[0], vec![false, true, false, false]);
}

#[test]
fn whole_graph_window_matches_l1() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let solver = Solver::default();
    for _ in 0..20 {
        let f = random_instance(&mut rng, 6, 3, 0.5, 10);
        let y = select_y(&schlesinger_facet(&f, &solver).unwrap(), solver.tol.supp);
        let l1 = solve_l1(&f, &y, &solver).unwrap().certificate;
        let opts = WindowOptions { y: Some(y), ..WindowOptions::default() };
        let w = window_persistency(&f, &[Window::all(&f)], &opts, &solver).unwrap().certificate;
        assert_eq!(w.eliminated, l1.eliminated);
    }
}

#[test]
fn windowed_maps_keep_an_optimum() {
    let solver = Solver::default();
    for seed in 0..10 {
        let f = generate(&GenSpec::grid(seed, 3, 4, 3, Family::Potts)).unwrap();
        for parallel in [false, true] {
            let opts = WindowOptions { parallel, scans: 2, ..WindowOptions::default() };
            let out = window_persistency(&f, &grid_windows(3, 4, 2, 2, 2), &opts, &solver).unwrap();
            assert!(out.certificate.verification.improving);
            let alive = out.certificate.alive();
            assert!(optima(&f).1.iter().any(|x| (0..12).all(|s| alive[s][x[s]])));
        }
    }
}

#[test]
fn small_budget_rejects_windows() {
    let f = generate(&GenSpec::grid(2, 3, 3, 3, Family::Full)).unwrap();
    let opts = WindowOptions { budget: 5, ..WindowOptions::default() };
    let out = window_persistency(&f, &grid_windows(3, 3, 2, 2, 1), &opts, &Solver::default()).unwrap();
    assert_eq!(out.rejected.len(), 4);
    assert!(out.certificate.eliminated.is_empty());
}

#[test]
fn trace_csv() {
    let f = generate(&GenSpec::grid(3, 2, 2, 3, Family::Potts)).unwrap();
    let opts = WindowOptions { dee_first: true, ..WindowOptions::default() };
    let out = window_persistency(&f, &[Window::all(&f)], &opts, &Solver::default()).unwrap();
    let mut buf = Vec::new();
    write_trace_csv(&out.trace, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "iteration,stage,node,remaining");
    assert_eq!(lines.len(), 1 + 3 * 4);
    assert_eq!(lines[1], "0,initial,0,3");
    assert!(lines[5].starts_with("1,dee,0,"));
    assert!(lines[9].starts_with("1,windows,0,"));
}
