mod common;

use pat_adjoint::container::Container;
use pat_adjoint::grid::{Grid, Medium, Shift, SpectralDerivative};
use pat_adjoint::operators::BoundaryData;
use pat_adjoint::receivers::{delta_kernel, delta_kernel_staggered};
use pat_adjoint::verify::{boundary_inner, inner_product_pair, rd_percent};
use proptest::prelude::*;

use common::{interior_image, tiny_operator};

fn close(a: &[f64], b: &[f64], rel: f64) -> bool {
    let scale = a.iter().chain(b).fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= rel * scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn forward_is_linear(
        x in prop::collection::vec(0.0f64..1.0, 196),
        y in prop::collection::vec(0.0f64..1.0, 196),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let op = tiny_operator(4);
        let (px, py) = (interior_image(&op, &x), interior_image(&op, &y));
        let combined = op.forward(&px.scaled(a).axpy(b, &py)).unwrap();
        let separate = op.forward(&px).unwrap().scaled(a).axpy(b, &op.forward(&py).unwrap());
        prop_assert!(close(&combined.values, &separate.values, 1e-11));
    }

    #[test]
    fn adjoint_is_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let op = tiny_operator(4);
        let f = pat_adjoint::verify::random_boundary_data(&op, seed);
        let g = pat_adjoint::verify::random_boundary_data(&op, seed.wrapping_add(1));
        let combined = op.adjoint(&f.scaled(a).axpy(b, &g)).unwrap();
        let separate = op.adjoint(&f).unwrap().scaled(a).axpy(b, &op.adjoint(&g).unwrap());
        prop_assert!(close(&combined.values, &separate.values, 1e-11));
    }

    #[test]
    fn dot_product_discrepancy_ignores_scaling(
        seed in any::<u64>(),
        s in -6.0f64..6.0,
        t in -6.0f64..6.0,
    ) {
        let op = tiny_operator(0);
        let p0 = interior_image(&op, &[0.3, 0.9, 0.1, 0.6, 0.45]);
        let f = pat_adjoint::verify::random_boundary_data(&op, seed);
        let base = inner_product_pair(&op, &p0, &f, seed).unwrap();
        let scaled = inner_product_pair(&op, &p0.scaled(10f64.powf(s)), &f.scaled(10f64.powf(t)), seed).unwrap();
        prop_assert!((base.rd_percent - scaled.rd_percent).abs() < 1e-9);
        let (rd, _) = rd_percent(base.lhs * 10f64.powf(s), base.rhs * 10f64.powf(s));
        prop_assert!((rd - base.rd_percent).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn staggered_derivatives_are_negative_transposes(
        f in prop::collection::vec(-1.0f64..1.0, 24 * 20),
        g in prop::collection::vec(-1.0f64..1.0, 24 * 20),
        axis in 0usize..2,
        kspace in any::<bool>(),
    ) {
        let grid = Grid::new([16, 12], 1e-3, 4, 2.0, 10, 0.2e-6).unwrap();
        let medium = Medium::homogeneous(&grid, 1500.0, 1000.0).unwrap();
        let mut d = SpectralDerivative::new(&grid, kspace.then_some(&medium));
        let df = d.apply(&f, axis, Shift::Forward).unwrap();
        let dg = d.apply(&g, axis, Shift::Backward).unwrap();
        let lhs: f64 = df.iter().zip(&g).map(|(a, b)| a * b).sum();
        let rhs: f64 = f.iter().zip(&dg).map(|(a, b)| a * b).sum();
        let scale = df.iter().map(|v| v * v).sum::<f64>().sqrt() * g.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((lhs + rhs).abs() <= 1e-12 * scale);
    }

    #[test]
    fn container_round_trip_is_bit_exact(
        arrays in prop::collection::vec(
            ("[a-z_]{1,12}", "[A-Za-z/^0-9]{0,6}", prop::collection::vec(any::<u64>(), 0..40)),
            0..5,
        ),
        meta in prop::collection::btree_map("[a-z_]{1,10}", "\\PC{0,20}", 0..6),
    ) {
        let mut c = Container::new();
        let mut seen = std::collections::HashSet::new();
        for (name, unit, bits) in &arrays {
            if !seen.insert(name.clone()) {
                continue;
            }
            let data: Vec<f64> = bits.iter().map(|b| f64::from_bits(*b)).collect();
            c.push(name, unit, vec![data.len()], data).unwrap();
        }
        for (k, v) in &meta {
            c.set_meta(k, v);
        }
        let back = Container::from_bytes(&c.to_bytes()).unwrap();
        prop_assert_eq!(&back.metadata, &c.metadata);
        prop_assert_eq!(back.arrays.len(), c.arrays.len());
        for (a, b) in back.arrays.iter().zip(&c.arrays) {
            prop_assert_eq!(&a.name, &b.name);
            prop_assert_eq!(&a.unit, &b.unit);
            prop_assert_eq!(&a.shape, &b.shape);
            let (ab, bb): (Vec<u64>, Vec<u64>) =
                (a.data.iter().map(|v| v.to_bits()).collect(), b.data.iter().map(|v| v.to_bits()).collect());
            prop_assert_eq!(ab, bb);
        }
    }

    #[test]
    fn raising_the_threshold_only_drops_entries(
        x in -6.0e-3f64..6.0e-3,
        y in -6.0e-3f64..6.0e-3,
        lo in 1e-4f64..0.05,
        ratio in 1.0f64..20.0,
        axis in 0usize..3,
    ) {
        let grid = Grid::new([16, 16], 1e-3, 4, 2.0, 10, 0.2e-6).unwrap();
        let b = grid.dx;
        let build = |factor: f64| {
            let eps = factor / (b * b);
            match axis {
                2 => delta_kernel([x, y], &grid, b, eps),
                a => delta_kernel_staggered([x, y], &grid, b, eps, a),
            }
        };
        let loose = build(lo).expect("kernel near a grid point is never empty");
        if let Some(tight) = build(lo * ratio) {
            prop_assert!(tight.entries.len() <= loose.entries.len());
            for e in &tight.entries {
                prop_assert!(loose.entries.contains(e));
            }
        }
    }

    #[test]
    fn boundary_inner_is_symmetric_and_weighted(
        vals in prop::collection::vec(-1.0f64..1.0, 3 * 7),
        other in prop::collection::vec(-1.0f64..1.0, 3 * 7),
        w in prop::collection::vec(0.0f64..2.0, 3),
    ) {
        let f = BoundaryData { n_nodes: 3, n_times: 7, dt: 1e-7, values: vals };
        let g = BoundaryData { n_nodes: 3, n_times: 7, dt: 1e-7, values: other };
        let fg = boundary_inner(&f, &g, &w);
        prop_assert_eq!(fg, boundary_inner(&g, &f, &w));
        prop_assert!(boundary_inner(&f, &f, &w) >= 0.0);
    }
}
