//! Line receivers and their band-limited delta kernels: node quadrature
//! weights, how many grid points each kernel touches as the threshold
//! changes, and the exact zeros an on-grid node produces.
//!
//! ```bash
//! cargo run --release --example receivers
//! ```

use pat_adjoint::grid::Grid;
use pat_adjoint::receivers::{
    build_circular_array, build_ongrid_lines, delta_kernel, quadrature_weights, sinc_pi, Side,
};

fn main() -> pat_adjoint::Result<()> {
    let grid = Grid::new([128, 128], 0.4e-3, 20, 2.0, 10, 0.08e-6)?;

    let array = build_circular_array(32, 22.5e-3, 2e-3, 40, [0.0, 0.0])?;
    let w = quadrature_weights(&array);
    println!(
        "{} receivers, {} nodes; weights sum to {:.15e} m (32 x 4 mm = {:.15e})",
        array.receivers.len(),
        array.n_nodes(),
        w.iter().sum::<f64>(),
        32.0 * 4e-3
    );

    let node = array.node_positions()[7];
    let b = grid.dx;
    println!("kernel of node 7 at ({:.3}, {:.3}) mm:", node[0] * 1e3, node[1] * 1e3);
    for factor in [0.001, 0.01, 0.1] {
        let k = delta_kernel(node, &grid, b, factor / (b * b)).expect("node inside the grid");
        let mass: f64 = k.entries.iter().map(|e| e.1).sum::<f64>() * b * b;
        println!("  eps {factor:>5}/b^2: {:>5} entries, integral {mass:.6}", k.entries.len());
    }

    let ongrid = build_ongrid_lines(&grid, &[Side::Left, Side::Bottom, Side::Right], 2)?;
    let p = ongrid.node_positions()[10];
    let k = delta_kernel(p, &grid, b, 1e-9 / (b * b)).map_or(0, |k| k.entries.len());
    println!("on-grid node: {k} kernel entry above 1e-9 of the peak");
    println!("sinc(pi k) for k = 1..4: {:?}", (1..5).map(|k| sinc_pi(k as f64)).collect::<Vec<_>>());
    Ok(())
}
