use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use psa_core::criteria::{
    ard_mean, d_from_info_matrix, efficiency, eval_ard, eval_d, eval_maxpro, ArdParams,
};
use psa_core::privacy::{sample_outside_privacy, AvailabilityMask};
use psa_core::psa::{greedy_augment, local_tune, mutate};
use psa_core::{
    psa_run, CriterionSpec, Design, GridPoint, GridSpace, LinearConstraints, ModelSpec, PrivacyKind,
    PrivacySpec, PsaConfig,
};

fn kinds(dim: usize) -> Vec<PrivacySpec> {
    let mut out = vec![
        PrivacySpec::classical(),
        PrivacySpec::latin(),
        PrivacySpec::bridge(1).unwrap(),
        PrivacySpec::bridge(3).unwrap(),
    ];
    if dim == 1 {
        out.push(PrivacySpec::new(PrivacyKind::Interval { steps: 2 }, 1).unwrap());
    }
    out
}

fn random_point(rng: &mut ChaCha8Rng, dim: usize, levels: u32) -> GridPoint {
    GridPoint::new((0..dim).map(|_| rng.random_range(0..levels)).collect())
}

fn all_points(dim: usize, levels: u32) -> Vec<GridPoint> {
    let total = (levels as usize).pow(dim as u32);
    (0..total)
        .map(|mut k| {
            GridPoint::new(
                (0..dim)
                    .map(|_| {
                        let v = (k % levels as usize) as u32;
                        k /= levels as usize;
                        v
                    })
                    .collect(),
            )
        })
        .collect()
}

// ---- grid -------------------------------------------------------------

proptest! {
    #[test]
    fn coordinates_symmetric_and_ordered(levels in 2u32..5000) {
        let g = GridSpace::new(1, levels).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in (0..levels).step_by((levels as usize / 50).max(1)) {
            let x = g.level_coord(i);
            prop_assert!((-1.0..=1.0).contains(&x));
            prop_assert!(x > prev);
            prev = x;
            prop_assert!((x + g.level_coord(levels - 1 - i)).abs() <= 1e-15);
        }
        prop_assert_eq!(g.level_coord(0), -1.0);
        prop_assert_eq!(g.level_coord(levels - 1), 1.0);
    }

    #[test]
    fn delta_steps_round_trip(levels in 2u32..2000, frac in 0.0f64..1.0) {
        let g = GridSpace::new(2, levels).unwrap();
        let s = 1 + ((levels - 2) as f64 * frac) as u32;
        let delta = 2.0 * f64::from(s) / f64::from(levels - 1);
        prop_assert_eq!(g.delta_to_steps(delta).unwrap(), s);
    }

    #[test]
    fn unconstrained_region_is_everything(levels in 2u32..100, idx in prop::collection::vec(0u32..100, 3)) {
        let g = GridSpace::new(3, levels).unwrap();
        let p = GridPoint::new(idx.into_iter().map(|v| v % levels).collect());
        prop_assert!(g.in_region(&p));
    }
}

// ---- privacy ----------------------------------------------------------

#[test]
fn privacy_symmetric_and_reflexive() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for dim in [1, 2, 4] {
        for spec in kinds(dim) {
            for _ in 0..10_000 {
                let x = random_point(&mut rng, dim, 9);
                let y = random_point(&mut rng, dim, 9);
                assert_eq!(spec.in_privacy(&x, &y).unwrap(), spec.in_privacy(&y, &x).unwrap());
                assert!(spec.in_privacy(&x, &x).unwrap());
            }
        }
    }
}

#[test]
fn mask_matches_pairwise_test() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (dim, levels) in [(1, 40), (2, 12), (3, 9), (4, 6)] {
        let space = GridSpace::new(dim, levels).unwrap();
        let grid = all_points(dim, levels);
        for steps in [1, 2] {
            let spec = PrivacySpec::bridge(steps).unwrap();
            for _ in 0..20 {
                let size = rng.random_range(0..=4);
                let pts = sample_outside_privacy(&space, &Design::new(1), &spec, 1, &mut rng)
                    .unwrap()
                    .into_iter()
                    .chain((0..size).map(|_| random_point(&mut rng, dim, levels)));
                // Keep a permissible subset.
                let mut design = Design::new(8);
                for p in pts {
                    if design.iter().all(|q| !spec.in_privacy(&p, q).unwrap()) {
                        design.insert(p);
                    }
                }
                let mask = AvailabilityMask::for_design(&space, &spec, &design).unwrap();
                for x in &grid {
                    let free = design.iter().all(|p| !spec.in_privacy(x, p).unwrap());
                    assert_eq!(mask.is_free(x), free, "{x} against {design:?}");
                }
            }
        }
    }
}

#[test]
fn latin_degeneracy_exhaustive() {
    // All 4-subsets of the 4x4 grid.
    let grid = all_points(2, 4);
    let spec = PrivacySpec::bridge(1).unwrap();
    let mut permissible = 0;
    for a in 0..16 {
        for b in a + 1..16 {
            for c in b + 1..16 {
                for d in c + 1..16 {
                    let pts = [a, b, c, d].map(|k| grid[k].clone());
                    let design = Design::from_points(pts.clone(), 4).unwrap();
                    let latin = (0..2).all(|axis| {
                        let mut levels: Vec<u32> = pts.iter().map(|p| p.indices()[axis]).collect();
                        levels.sort_unstable();
                        levels == [0, 1, 2, 3]
                    });
                    assert_eq!(design.is_permissible(&spec), latin);
                    permissible += usize::from(latin);
                }
            }
        }
    }
    assert_eq!(permissible, 24);
}

#[test]
fn samples_keep_design_permissible() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let c = LinearConstraints::new(vec![vec![0.5, -1.0]], vec![0.5]).unwrap();
    let spaces = [
        GridSpace::new(2, 30).unwrap(),
        GridSpace::new(2, 30).unwrap().with_constraints(c).unwrap(),
    ];
    for space in &spaces {
        for spec in kinds(2) {
            let mut design = Design::new(10);
            for _ in 0..8 {
                let Ok(p) = sample_outside_privacy(space, &design, &spec, 1, &mut rng) else {
                    break;
                };
                for q in sample_outside_privacy(space, &design, &spec, 5, &mut rng).unwrap() {
                    let mut trial = design.clone();
                    trial.insert(q.clone());
                    assert!(trial.is_permissible(&spec) && space.in_region(&q));
                }
                design.insert(p[0].clone());
                assert!(design.is_permissible(&spec));
            }
        }
    }
}

// ---- criteria ---------------------------------------------------------

fn random_psd(rng: &mut ChaCha8Rng, m: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(m, m + 2, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose()
}

#[test]
fn d_criterion_is_positively_homogeneous() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for m in 1..=8 {
        for _ in 0..20 {
            let info = random_psd(&mut rng, m);
            let base = d_from_info_matrix(&info);
            assert!(base > 0.0);
            for alpha in [0.5, 2.0, 10.0] {
                let scaled = d_from_info_matrix(&(&info * alpha));
                assert!((scaled - alpha * base).abs() <= 1e-10 * alpha * base);
            }
        }
    }
}

#[test]
fn efficiency_reciprocity() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..1000 {
        let a: f64 = rng.random_range(1e-3..1e3);
        let b: f64 = rng.random_range(1e-3..1e3);
        let p = efficiency(a, b).unwrap() * efficiency(b, a).unwrap();
        assert!((p - 1.0).abs() <= 1e-12);
    }
}

fn random_design(rng: &mut ChaCha8Rng, space: &GridSpace, n: usize) -> Vec<GridPoint> {
    let spec = PrivacySpec::bridge(1).unwrap();
    let mut design = Design::new(n);
    while design.len() < n {
        let p = sample_outside_privacy(space, &design, &spec, 1, rng).unwrap();
        design.insert(p[0].clone());
    }
    design.points().to_vec()
}

#[test]
fn criteria_ignore_point_and_axis_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let space = GridSpace::new(3, 25).unwrap();
    let ard = ArdParams::new(1.0, 2.0, vec![1, 2, 3]).unwrap();
    for _ in 0..30 {
        let pts = random_design(&mut rng, &space, 12);
        let design = Design::from_points(pts.clone(), 12).unwrap();
        let mut shuffled = pts.clone();
        shuffled.reverse();
        let reordered = Design::from_points(shuffled, 12).unwrap();
        let model = ModelSpec::full_quadratic(3);
        assert_eq!(eval_d(&model, &design, &space), eval_d(&model, &reordered, &space));
        // Cyclic permutation of the axes.
        let rotated = Design::from_points(
            pts.iter().map(|p| {
                let i = p.indices();
                GridPoint::new(vec![i[1], i[2], i[0]])
            }),
            12,
        )
        .unwrap();
        let a = eval_ard(&ard, &design, &space).unwrap();
        let b = eval_ard(&ard, &rotated, &space).unwrap();
        assert!((a - b).abs() <= 1e-12 * a);
        let a = eval_maxpro(2.0, &design, &space).unwrap();
        let b = eval_maxpro(2.0, &rotated, &space).unwrap();
        assert!((a - b).abs() <= 1e-12 * a);
    }
}

#[test]
fn d_criterion_scales_with_capacity() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let space = GridSpace::new(2, 21).unwrap();
    let model = ModelSpec::full_quadratic(2);
    for _ in 0..20 {
        let pts = random_design(&mut rng, &space, 10);
        let small = eval_d(&model, &Design::from_points(pts.clone(), 10).unwrap(), &space);
        let large = eval_d(&model, &Design::from_points(pts, 16).unwrap(), &space);
        assert!((large - small * 10.0 / 16.0).abs() <= 1e-12 * small);
    }
}

#[test]
fn one_dimensional_ard_matches_direct_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let space = GridSpace::new(1, 60).unwrap();
    let params = ArdParams::new(1.0, 1.0, vec![1]).unwrap();
    for _ in 0..50 {
        let n = rng.random_range(2..15);
        let pts = random_design(&mut rng, &space, n);
        let xs: Vec<f64> = pts.iter().map(|p| space.level_coord(p.indices()[0])).collect();
        let mut reciprocal = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                reciprocal += 1.0 / (xs[i] - xs[j]).abs();
            }
        }
        let pairs = (n * (n - 1) / 2) as f64;
        let direct = pairs / reciprocal;
        let design = Design::from_points(pts, n).unwrap();
        let generic = eval_ard(&params, &design, &space).unwrap();
        assert!((generic - direct).abs() <= 1e-12 * direct, "{generic} vs {direct}");
        assert!((ard_mean(&params, &design, &space).unwrap() - 1.0 / direct).abs() <= 1e-12 / direct);
    }
}

#[test]
fn d_criterion_pair_optimum_is_the_endpoints() {
    let space = GridSpace::new(1, 15).unwrap();
    let model = ModelSpec::linear(1);
    let mut best = (0.0, (0, 0));
    for a in 0..15 {
        for b in a + 1..15 {
            let d = Design::from_points([GridPoint::new(vec![a]), GridPoint::new(vec![b])], 2).unwrap();
            let v = eval_d(&model, &d, &space);
            if v > best.0 {
                best = (v, (a, b));
            }
        }
    }
    assert_eq!(best.1, (0, 14));
    assert!((best.0 - 1.0).abs() < 1e-12);
}

// ---- psa --------------------------------------------------------------

fn small_configs() -> Vec<PsaConfig> {
    let c = LinearConstraints::new(vec![vec![0.5, -1.0]], vec![0.5]).unwrap();
    vec![
        PsaConfig::new(
            GridSpace::new(2, 21).unwrap(),
            PrivacySpec::bridge(2).unwrap(),
            CriterionSpec::D(ModelSpec::full_quadratic(2)),
            8,
        ),
        PsaConfig::new(
            GridSpace::new(2, 30).unwrap().with_constraints(c).unwrap(),
            PrivacySpec::bridge(1).unwrap(),
            CriterionSpec::Ard(ArdParams::new(1.0, 1.0, vec![1, 2]).unwrap()),
            12,
        ),
        PsaConfig::new(
            GridSpace::new(3, 6).unwrap(),
            PrivacySpec::latin(),
            CriterionSpec::MaxPro { z: 2.0 },
            6,
        ),
        PsaConfig::new(
            GridSpace::new(2, 7).unwrap(),
            PrivacySpec::classical(),
            CriterionSpec::D(ModelSpec::linear(2)),
            5,
        ),
    ]
}

#[test]
fn outputs_are_full_and_permissible() {
    for (k, mut cfg) in small_configs().into_iter().enumerate() {
        for seed in 0..3 {
            cfg.seed = seed;
            let (design, trace) = psa_run(&cfg).unwrap();
            assert_eq!(design.len(), cfg.runs, "config {k}");
            assert!(design.is_permissible(&cfg.privacy));
            assert!(design.iter().all(|p| cfg.space.in_region(p)));
            let values: Vec<f64> = trace.samples.iter().map(|s| s.value).collect();
            assert!(values.windows(2).all(|w| w[0] < w[1]), "config {k}: {values:?}");

            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            assert_eq!(greedy_augment(&design, &cfg, &mut rng).unwrap(), design);
            let tuned = local_tune(&design, 0, &cfg).unwrap();
            assert_eq!(tuned.len(), cfg.runs);
            assert!(tuned.is_permissible(&cfg.privacy));
            for _ in 0..10 {
                let x = random_point(&mut rng, cfg.space.dim(), cfg.space.levels());
                if design.contains(&x) || !cfg.space.in_region(&x) {
                    continue;
                }
                let eta = mutate(&design, &x, &cfg, &mut rng).unwrap();
                assert!(eta.contains(&x));
                assert_eq!(eta.len(), cfg.runs);
                assert!(eta.is_permissible(&cfg.privacy));
            }
        }
    }
}

#[test]
fn runs_are_deterministic() {
    for mut cfg in small_configs() {
        cfg.seed = 42;
        cfg.restarts = 2;
        let (a, ta) = psa_run(&cfg).unwrap();
        let (b, tb) = psa_run(&cfg).unwrap();
        assert_eq!(a, b);
        let va: Vec<f64> = ta.samples.iter().map(|s| s.value).collect();
        let vb: Vec<f64> = tb.samples.iter().map(|s| s.value).collect();
        assert_eq!(va, vb);
        assert_eq!(ta.counters, tb.counters);
    }
}
