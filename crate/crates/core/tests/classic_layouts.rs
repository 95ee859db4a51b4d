use marll_core::classic::{dgc_run, fr_run, stress_majorize_run, DgcParams, FrParams, StressParams};
use marll_core::corpus;
use marll_core::graph::all_pairs_hop_distance;
use marll_core::layout::{rng_from_seed, Layout};
use marll_core::{Graph, Point};

/// Independent reference: explicit Euler on the force field with a small
/// capped step, run until the largest force is negligible. `attract(d)` is
/// the pull along an edge, `repel(d)` the push between any pair.
fn relax(
    graph: &Graph,
    mut pos: Vec<(f64, f64)>,
    attract: impl Fn(f64) -> f64,
    repel: impl Fn(f64) -> f64,
) -> Vec<(f64, f64)> {
    let n = pos.len();
    for _ in 0..200_000 {
        let mut force = vec![(0.0, 0.0); n];
        for v in 0..n {
            for u in 0..n {
                if u == v {
                    continue;
                }
                let (dx, dy) = (pos[v].0 - pos[u].0, pos[v].1 - pos[u].1);
                let d = (dx * dx + dy * dy).sqrt();
                let mut f = repel(d);
                if graph.has_edge(u, v) {
                    f -= attract(d);
                }
                force[v].0 += dx / d * f;
                force[v].1 += dy / d * f;
            }
        }
        let biggest = force.iter().map(|f| f.0.hypot(f.1)).fold(0.0, f64::max);
        if biggest < 1e-9 {
            break;
        }
        let dt = (0.05 / biggest).min(0.01);
        for v in 0..n {
            pos[v].0 += dt * force[v].0;
            pos[v].1 += dt * force[v].1;
        }
    }
    pos
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::MIN, f64::max);
    let min = values.iter().copied().fold(f64::MAX, f64::min);
    (max - min) / min
}

fn pairwise(layout: &Layout) -> Vec<f64> {
    let p = &layout.positions;
    let mut out = Vec::new();
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            out.push(p[i].dist(p[j]));
        }
    }
    out
}

#[test]
fn fr_triangle_is_equilateral() {
    let g = corpus::complete(3);
    let k = FrParams::default().k;
    let reference = relax(&g, vec![(0.0, 0.0), (80.0, 5.0), (20.0, 60.0)], |d| d * d / k, |d| k * k / d);
    let ref_side = dist(reference[0], reference[1]);
    assert!(spread(&[ref_side, dist(reference[1], reference[2]), dist(reference[0], reference[2])]) < 1e-3);

    for seed in 0..5 {
        let run = fr_run(&g, &FrParams::default(), seed).unwrap();
        let sides = pairwise(&run.layout);
        assert!(spread(&sides) <= 0.05, "seed {seed}: sides {sides:?}");
        let mean = sides.iter().sum::<f64>() / 3.0;
        assert!((mean - ref_side).abs() / ref_side <= 0.05, "seed {seed}: mean side {mean}, reference {ref_side}");
    }
}

#[test]
fn dgc_star_leaves_equidistant() {
    let g = corpus::star(4);
    let p = DgcParams::default();
    let (lambda, zeta, mu) = (p.lambda, p.zeta, p.mu);
    let start = vec![(0.0, 0.0), (70.0, 0.0), (5.0, 40.0), (-30.0, 10.0), (10.0, -90.0)];
    let reference = relax(
        &g,
        start,
        |d| (d - lambda) * (d - lambda).abs() / zeta,
        |d| mu / (d * d),
    );
    let ref_radius: Vec<f64> = (1..5).map(|l| dist(reference[0], reference[l])).collect();
    assert!(spread(&ref_radius) < 1e-3, "{ref_radius:?}");
    let ref_mean = ref_radius.iter().sum::<f64>() / 4.0;

    let hub = (0..5).find(|&v| g.degree(v) == 4).unwrap();
    for seed in 0..5 {
        let run = dgc_run(&g, &p, seed).unwrap();
        let c = run.layout.positions[hub];
        let radii: Vec<f64> = (0..5).filter(|&v| v != hub).map(|v| run.layout.positions[v].dist(c)).collect();
        assert!(spread(&radii) <= 0.05, "seed {seed}: radii {radii:?}");
        let mean = radii.iter().sum::<f64>() / 4.0;
        assert!((mean - ref_mean).abs() / ref_mean <= 0.05, "seed {seed}: mean {mean}, reference {ref_mean}");
    }
}

#[test]
fn single_node_keeps_its_start() {
    let g = corpus::path(1);
    let params = FrParams::default();
    let start = Layout::random(1, params.frame, &mut rng_from_seed(9));
    assert_eq!(fr_run(&g, &params, 9).unwrap().layout, start);
    assert_eq!(dgc_run(&g, &DgcParams::default(), 9).unwrap().layout, start);
}

#[test]
fn seeds_determine_classic_layouts() {
    let g = corpus::karate();
    let fr = FrParams::default();
    let dgc = DgcParams::default();
    let sm = StressParams::default();
    let hops = all_pairs_hop_distance(&g);

    let a = fr_run(&g, &fr, 3).unwrap();
    let b = fr_run(&g, &fr, 3).unwrap();
    assert_eq!(a.layout, b.layout);
    assert_eq!((a.iterations, a.reason), (b.iterations, b.reason));
    assert_ne!(a.layout, fr_run(&g, &fr, 4).unwrap().layout);

    let a = dgc_run(&g, &dgc, 3).unwrap();
    assert_eq!(a.layout, dgc_run(&g, &dgc, 3).unwrap().layout);
    assert_ne!(a.layout, dgc_run(&g, &dgc, 4).unwrap().layout);

    let a = stress_majorize_run(&g, &sm, &hops, 3).unwrap();
    let b = stress_majorize_run(&g, &sm, &hops, 3).unwrap();
    assert_eq!(a.layout, b.layout);
    assert_ne!(a.layout, stress_majorize_run(&g, &sm, &hops, 4).unwrap().layout);
}

#[test]
fn outputs_are_finite() {
    for g in [corpus::karate(), corpus::grid(4, 4), corpus::cycle(7)] {
        let l = fr_run(&g, &FrParams::default(), 1).unwrap().layout;
        assert!(l.is_finite());
        assert!(l.positions.iter().all(|p: &Point| p.is_finite()));
        assert!(dgc_run(&g, &DgcParams::default(), 1).unwrap().layout.is_finite());
    }
}
