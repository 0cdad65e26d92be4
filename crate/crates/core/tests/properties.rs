use actrack::activity::moving_std;
use actrack::assignment::stage1_greedy;
use actrack::evaluation::{tra, PenaltyWeights};
use actrack::io::{self, BitDepth};
use actrack::linking::{candidates_for, LinkConfig};
use actrack::model::{CellInstance, ImageStack, LabelMaskStack, Point};
use actrack::pipeline::{compute_activities, track, TrackOptions};
use actrack::synthgen::{contract_graph, simulate, DivisionMode, SimParams};
use approx::assert_relative_eq;
use ndarray::Array2;
use proptest::prelude::*;

fn arb_cells(frame: usize, max: usize) -> impl Strategy<Value = Vec<CellInstance<f64>>> {
    prop::collection::vec((0.0..40.0f64, 0.0..40.0f64, 1usize..200, 0.0..30.0f64), 0..max).prop_map(move |v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (x, y, area, activity))| CellInstance {
                frame,
                label: i as u32 + 1,
                centroid: Point::new(x, y),
                area,
                activity,
            })
            .collect()
    })
}

fn arb_stack() -> impl Strategy<Value = ImageStack<f64>> {
    (1usize..6, 1usize..6, 1usize..6)
        .prop_flat_map(|(n, h, w)| prop::collection::vec(0.0..255.0f64, n * h * w).prop_map(move |v| (h, w, v)))
        .prop_map(|(h, w, v)| {
            let frames = v
                .chunks(h * w)
                .map(|c| Array2::from_shape_vec((h, w), c.to_vec()).unwrap())
                .collect();
            ImageStack::new(frames).unwrap()
        })
}

fn colony(seed: u64, snap: bool) -> SimParams {
    SimParams {
        seed,
        frame_count: 14,
        initial_cells: 3,
        division_mode: if snap {
            DivisionMode::AsymmetricSnap {
                snap_degrees: 30.0,
                smaller_fraction: 0.4,
            }
        } else {
            DivisionMode::Symmetric
        },
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn candidates_ignore_integer_translation(
        mother in arb_cells(1, 2).prop_filter("one mother", |v| v.len() == 1),
        daughters in arb_cells(2, 8),
        dx in -50i32..50,
        dy in -50i32..50,
    ) {
        let cfg = LinkConfig::default();
        let shift = |c: &CellInstance<f64>| CellInstance {
            centroid: Point::new(c.centroid.x + dx as f64, c.centroid.y + dy as f64),
            ..*c
        };
        let ids = |m: &CellInstance<f64>, ds: &[CellInstance<f64>]| {
            candidates_for(m, ds, &cfg).iter().map(|c| c.daughter_label).collect::<Vec<_>>()
        };
        let moved: Vec<_> = daughters.iter().map(shift).collect();
        prop_assert_eq!(ids(&mother[0], &daughters), ids(&shift(&mother[0]), &moved));
    }

    #[test]
    fn moving_std_is_affine_equivariant(stack in arb_stack(), scale in 0.1..10.0f64, offset in -100.0..100.0f64) {
        let moved = ImageStack::new(stack.frames().iter().map(|f| f.mapv(|v| scale * v + offset)).collect()).unwrap();
        for t in 1..=stack.len() {
            let a = moving_std(&stack, t, 1, 1).unwrap().values;
            let b = moving_std(&moved, t, 1, 1).unwrap().values;
            for (x, y) in a.iter().zip(b.iter()) {
                prop_assert!((x * scale - y).abs() <= 1e-9 * (1.0 + y.abs()));
            }
        }
    }

    #[test]
    fn stage1_ignores_input_order(mothers in arb_cells(1, 6), daughters in arb_cells(2, 8)) {
        let cfg = LinkConfig::default();
        let a = stage1_greedy(&mothers, &daughters, &cfg);
        let mut rm = mothers.clone();
        rm.reverse();
        let mut rd = daughters.clone();
        rd.reverse();
        let b = stage1_greedy(&rm, &rd, &cfg);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn tra_ignores_weight_scale(seed in 0u64..4, factor in 0.1..20.0f64) {
        let sim = simulate(&colony(seed, true)).unwrap();
        let r = track(&sim.images, &sim.masks, &TrackOptions::default()).unwrap();
        let res = r.graph.relabeled();
        let w = PenaltyWeights::default();
        let (a, _) = tra(&sim.ground_truth, &sim.masks, &res, &r.masks, &w).unwrap();
        let (b, _) = tra(&sim.ground_truth, &sim.masks, &res, &r.masks, &w.scaled(factor)).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn contraction_composes() {
    for seed in 0..4 {
        let gt = simulate(&SimParams {
            frame_count: 20,
            ..colony(seed, true)
        })
        .unwrap()
        .ground_truth;
        assert_eq!(
            contract_graph(&contract_graph(&gt, 2), 2),
            contract_graph(&gt, 4),
            "seed {seed}"
        );
        assert_eq!(contract_graph(&gt, 1), gt);
        for f in [2, 3, 4] {
            contract_graph(&gt, f).validate().unwrap();
        }
    }
}

#[test]
fn track_file_round_trips_generated_lineages() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..4 {
        let gt = simulate(&colony(seed, seed % 2 == 0)).unwrap().ground_truth;
        let path = dir.path().join(format!("man_track_{seed}.txt"));
        io::write_track_file(&gt, &path).unwrap();
        assert_eq!(io::read_track_file(&path, Some(gt.frame_count)).unwrap(), gt);
    }
}

#[test]
fn generated_masks_round_trip_through_tiff() {
    let sim = simulate(&colony(3, true)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    io::write_masks(dir.path(), &sim.masks, "man_track").unwrap();
    assert_eq!(io::read_masks(dir.path()).unwrap(), sim.masks);
}

#[test]
fn bit_depth_does_not_change_activities() {
    let sim = simulate(&colony(1, false)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (eight, sixteen) = (dir.path().join("8"), dir.path().join("16"));
    io::write_images(&eight, &sim.images, BitDepth::Eight).unwrap();
    let wide = ImageStack::new(
        sim.images
            .frames()
            .iter()
            .map(|f| f.mapv(|v| v.round() * 257.0))
            .collect(),
    )
    .unwrap();
    io::write_images(&sixteen, &wide, BitDepth::Sixteen).unwrap();

    let a = compute_activities(&io::read_images::<f64>(&eight).unwrap(), &sim.masks, 0).unwrap();
    let b = compute_activities(&io::read_images::<f64>(&sixteen).unwrap(), &sim.masks, 0).unwrap();
    for (x, y) in a.instances.iter().flatten().zip(b.instances.iter().flatten()) {
        assert_eq!((x.frame, x.label), (y.frame, y.label));
        assert_relative_eq!(x.activity, y.activity, max_relative = 1e-9, epsilon = 1e-12);
    }
}

#[test]
fn easy_colonies_are_tracked_exactly() {
    for seed in 0..4 {
        let sim = simulate(&colony(seed, false)).unwrap();
        let r = track(&sim.images, &sim.masks, &TrackOptions::default()).unwrap();
        assert_eq!(
            r.graph.relabeled().tracks.len(),
            sim.ground_truth.tracks.len(),
            "seed {seed}"
        );
        let (score, d) = tra(
            &sim.ground_truth,
            &sim.masks,
            &r.graph.relabeled(),
            &r.masks,
            &PenaltyWeights::default(),
        )
        .unwrap();
        assert_eq!(score, 1.0, "seed {seed}: {d:?}");
    }
}

#[test]
fn f32_pipeline_agrees_with_f64() {
    let sim = simulate(&colony(2, false)).unwrap();
    let narrow = ImageStack::<f32>::new(sim.images.frames().iter().map(|f| f.mapv(|v| v as f32)).collect()).unwrap();
    let a = track(&sim.images, &sim.masks, &TrackOptions::default()).unwrap();
    let b = track(&narrow, &sim.masks, &TrackOptions::default()).unwrap();
    assert_eq!(a.graph, b.graph);
    assert_eq!(a.masks, b.masks);
}

#[test]
fn empty_masks_give_empty_lineage() {
    let images = ImageStack::new(vec![Array2::<f64>::zeros((4, 4)); 3]).unwrap();
    let masks = LabelMaskStack::new(vec![Array2::zeros((4, 4)); 3]).unwrap();
    let r = track(&images, &masks, &TrackOptions::default()).unwrap();
    assert!(r.graph.tracks.is_empty());
}
