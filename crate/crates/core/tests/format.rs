mod common;

use common::random_instance;
use maxpersist::format::{parse_instance, parse_labeling, parse_mapping, write_instance, write_mapping};
use maxpersist::harness::{generate, Family, GenSpec};
use maxpersist::{EnergyInstance, Error, Labeling, PixelwiseMapping};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn parse_line(text: &str) -> usize {
    match parse_instance(text) {
        Err(Error::Parse { line, .. }) => line,
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn small_instance_text() {
    let text = "# two nodes\nnodes 2\nlabels 0 2\nlabels 1 2\n\nf0 1\nunary 0 1 2\nunary 1 1 3\nedge 0 1\npair 0 1 0 1 1\npair 0 1 1 0 1\n";
    let f = parse_instance(text).unwrap();
    assert_eq!(f.num_nodes(), 2);
    assert_eq!(f.f0(), 1.0);
    assert_eq!(f.energy(&Labeling(vec![1, 0])).unwrap(), 4.0);
    assert_eq!(parse_instance(&write_instance(&f)).unwrap(), f);
}

#[test]
fn instances_roundtrip() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let mut f = random_instance(&mut rng, 5, 3, 0.5, 10);
        f.set_f0(-2.5);
        f.unary_mut(0)[1] = 0.1 + 0.2;
        let text = write_instance(&f);
        assert_eq!(parse_instance(&text).unwrap(), f);
        assert_eq!(write_instance(&parse_instance(&text).unwrap()), text);
    }
    for family in [Family::Potts, Family::Full] {
        let f = generate(&GenSpec::grid(3, 4, 4, 3, family)).unwrap();
        assert_eq!(parse_instance(&write_instance(&f)).unwrap(), f);
    }
}

#[test]
fn parse_errors_carry_line_numbers() {
    assert_eq!(parse_line("labels 0 2\n"), 1);
    assert_eq!(parse_line("nodes 2\nlabels 0 2\nlabels 1 x\n"), 3);
    assert_eq!(parse_line("nodes 2\nlabels 0 2\nlabels 1 2\nunary 0 5 1\n"), 4);
    assert_eq!(parse_line("nodes 2\nlabels 0 2\nlabels 1 2\nbogus 1\n"), 4);
    assert_eq!(parse_line("nodes 2\nlabels 0 2\nlabels 1 2\n\n# c\nunary 0 0 inf\n"), 6);
    assert_eq!(parse_line("nodes 2\nlabels 0 2\nlabels 1 2\npair 0 1 0 0 1\n"), 4);
    assert_eq!(parse_line("nodes 2\nlabels 0 2\nlabels 1 2\nedge 0 1 7\n"), 4);
}

#[test]
fn mapping_roundtrip_and_errors() {
    let f = EnergyInstance::new(vec![3, 2]).unwrap();
    let p = PixelwiseMapping::new(vec![vec![0, 0, 2], vec![1, 1]]).unwrap();
    let text = write_mapping(&p);
    assert_eq!(text, "map 0 1 0\nmap 1 0 1\n");
    assert_eq!(parse_mapping(&text, &f).unwrap(), p);
    assert_eq!(parse_mapping("", &f).unwrap(), PixelwiseMapping::identity(&f));
    assert!(matches!(parse_mapping("map 0 1 0\nmap 0 5 0\n", &f), Err(Error::Parse { line: 2, .. })));
    assert!(matches!(parse_mapping("map 0 1\n", &f), Err(Error::Parse { line: 1, .. })));
    // Not idempotent.
    assert!(parse_mapping("map 0 0 1\nmap 0 1 2\n", &f).is_err());
}

#[test]
fn labelings() {
    assert_eq!(parse_labeling("0 2\n1").unwrap(), Labeling(vec![0, 2, 1]));
    assert!(parse_labeling("0 a").is_err());
}
