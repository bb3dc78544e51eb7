//! Discrete inner products, the dot-product adjointness test, the dense
//! transpose oracle and the image relative-error metric.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::operators::{BoundaryData, Image, PatOperator};
use crate::phantom::make_disc_phantom;
use crate::receivers::Point;

/// `sum_i a_i b_i dx^d` over the interior.
pub fn domain_inner(a: &Image, b: &Image) -> f64 {
    assert_eq!(a.dims, b.dims, "images on different grids");
    let vol = a.dx.powi(a.dims.len() as i32);
    a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum::<f64>() * vol
}

/// `sum_j w_j sum_t f_jt g_jt dt`.
pub fn boundary_inner(f: &BoundaryData, g: &BoundaryData, weights: &[f64]) -> f64 {
    assert_eq!(f.values.len(), g.values.len(), "boundary data of different shapes");
    assert_eq!(weights.len(), f.n_nodes, "one weight per node expected");
    let n = f.n_times;
    weights
        .iter()
        .enumerate()
        .map(|(j, w)| {
            let s = j * n..(j + 1) * n;
            w * f.values[s.clone()].iter().zip(&g.values[s]).map(|(x, y)| x * y).sum::<f64>()
        })
        .sum::<f64>()
        * f.dt
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerProductReport {
    pub seed: u64,
    /// `<data, F p0>` on the boundary.
    pub lhs: f64,
    /// `<F* data, p0>` on the domain.
    pub rhs: f64,
    /// `|lhs - rhs| / |lhs| * 100`, or the absolute difference when `absolute`.
    pub rd_percent: f64,
    /// Set when `|lhs|` is too small to divide by.
    pub absolute: bool,
    pub digest: String,
}

impl InnerProductReport {
    pub const CSV_HEADER: [&'static str; 6] = ["seed", "lhs", "rhs", "rd_percent", "absolute", "config_digest"];

    pub fn csv_row(&self) -> Vec<String> {
        vec![
            self.seed.to_string(),
            format!("{:.17e}", self.lhs),
            format!("{:.17e}", self.rhs),
            format!("{:.6e}", self.rd_percent),
            self.absolute.to_string(),
            self.digest.clone(),
        ]
    }
}

/// Relative discrepancy in percent; falls back to the absolute difference
/// when `|lhs| < 1e-300`.
pub fn rd_percent(lhs: f64, rhs: f64) -> (f64, bool) {
    if lhs.abs() < 1e-300 {
        ((lhs - rhs).abs(), true)
    } else {
        ((lhs - rhs).abs() / lhs.abs() * 100.0, false)
    }
}

/// Boundary data with i.i.d. uniform `[-1, 1]` samples.
pub fn random_boundary_data(op: &PatOperator, seed: u64) -> BoundaryData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = BoundaryData::zeros(op.n_nodes(), &op.grid);
    for v in data.values.iter_mut() {
        *v = rng.random_range(-1.0..=1.0);
    }
    data
}

/// Evaluates both sides of the adjoint identity for a given pair.
pub fn inner_product_pair(op: &PatOperator, p0: &Image, data: &BoundaryData, seed: u64) -> Result<InnerProductReport> {
    let lhs = boundary_inner(data, &op.forward(p0)?, op.weights());
    let rhs = domain_inner(&op.adjoint(data)?, p0);
    let (rd, absolute) = rd_percent(lhs, rhs);
    Ok(InnerProductReport {
        seed,
        lhs,
        rhs,
        rd_percent: rd,
        absolute,
        digest: String::new(),
    })
}

/// One dot-product trial: `p0` uniform on `[0, 1]` inside a disc of
/// `support_radius` about `center`, boundary data uniform on `[-1, 1]`.
/// The phantom uses `seed`, the data `seed + 1`-derived stream.
pub fn inner_product_test(op: &PatOperator, seed: u64, support_radius: f64, center: Point) -> Result<InnerProductReport> {
    let p0 = make_disc_phantom(&op.grid, support_radius, center, (0.0, 1.0), seed)?;
    let data = random_boundary_data(op, seed ^ 0x9e37_79b9_7f4a_7c15);
    inner_product_pair(op, &p0, &data, seed)
}

/// Dense matrices of the weighted forward and adjoint maps, scaled so that
/// the weighted inner products become Euclidean:
/// `A = W_b^(1/2) F W_d^(-1/2)`, `B = W_d^(1/2) F* W_b^(-1/2)`.
/// With this scaling "adjoint" means "matrix transpose", so `A = B^T`.
pub struct DenseOracle {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `rows x cols`.
    pub a: Vec<f64>,
    /// `B^T`, row-major `rows x cols`.
    pub b_t: Vec<f64>,
    row_scale: Vec<f64>,
    col_scale: f64,
}

/// Default element budget per matrix.
pub const ORACLE_BUDGET: usize = 4_000_000;

impl DenseOracle {
    pub fn assemble(op: &PatOperator, budget: usize) -> Result<Self> {
        let grid = &op.grid;
        let cols = grid.interior_len();
        let n_times = grid.nt + 1;
        let rows = op.n_nodes() * n_times;
        let needed = rows.saturating_mul(cols);
        if needed > budget {
            return Err(Error::OracleBudget { needed, budget });
        }
        let col_scale = grid.cell_volume().sqrt();
        let row_scale: Vec<f64> = op
            .weights()
            .iter()
            .flat_map(|w| std::iter::repeat_n((w * grid.dt).sqrt(), n_times))
            .collect();

        let columns = (0..cols)
            .into_par_iter()
            .map(|c| {
                let mut e = Image::zeros(grid);
                e.values[c] = 1.0 / col_scale;
                op.forward_unguarded(&e).map(|y| y.values)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut a = vec![0.0; needed];
        for (c, col) in columns.iter().enumerate() {
            for (r, v) in col.iter().enumerate() {
                a[r * cols + c] = row_scale[r] * v;
            }
        }
        drop(columns);

        let b_t = (0..rows)
            .into_par_iter()
            .map(|r| {
                let mut f = BoundaryData::zeros(op.n_nodes(), grid);
                f.values[r] = 1.0 / row_scale[r];
                op.adjoint(&f).map(|img| img.values.into_iter().map(|v| col_scale * v).collect::<Vec<_>>())
            })
            .collect::<Result<Vec<_>>>()?
            .concat();

        Ok(DenseOracle {
            rows,
            cols,
            a,
            b_t,
            row_scale,
            col_scale,
        })
    }

    /// `max |A - B^T| / max |A|`.
    pub fn discrepancy(&self) -> f64 {
        let diff = self.a.iter().zip(&self.b_t).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        diff / self.a_max()
    }

    pub fn a_max(&self) -> f64 {
        self.a.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Columns whose entries are all exactly zero.
    pub fn zero_columns(&self) -> Vec<usize> {
        (0..self.cols)
            .filter(|&c| (0..self.rows).all(|r| self.a[r * self.cols + c] == 0.0))
            .collect()
    }

    /// `max_r |A[r, c]|` per column.
    pub fn column_peaks(&self) -> Vec<f64> {
        let mut peaks = vec![0.0f64; self.cols];
        for row in self.a.chunks_exact(self.cols) {
            for (p, v) in peaks.iter_mut().zip(row) {
                *p = p.max(v.abs());
            }
        }
        peaks
    }

    /// The two sides of the adjoint identity computed from the matrices:
    /// `(<f~, A p~>, <B^T' f~, p~>)` with the weighted-to-Euclidean scalings.
    pub fn inner_products(&self, p0: &Image, data: &BoundaryData) -> (f64, f64) {
        let p: Vec<f64> = p0.values.iter().map(|v| v * self.col_scale).collect();
        let f: Vec<f64> = data.values.iter().zip(&self.row_scale).map(|(v, s)| v * s).collect();
        let dot = |m: &[f64]| -> f64 {
            m.chunks_exact(self.cols)
                .zip(&f)
                .map(|(row, fr)| fr * row.iter().zip(&p).map(|(x, y)| x * y).sum::<f64>())
                .sum()
        };
        (dot(&self.a), dot(&self.b_t))
    }
}

/// Relative error in percent of `recon` against `phantom`, after bilinear
/// interpolation of `recon` onto the phantom's points. Points outside the
/// reconstruction extent count as zero.
pub fn relative_error(recon: &Image, phantom: &Image) -> Result<f64> {
    let norm = phantom.norm();
    if norm == 0.0 {
        return Err(Error::Shape("relative error against an all-zero phantom".into()));
    }
    let interp = resample_bilinear(recon, phantom.dims, phantom.dx);
    let diff: f64 = interp.iter().zip(&phantom.values).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(diff.sqrt() / norm * 100.0)
}

/// Bilinear resampling onto a grid of `dims` points at spacing `dx`
/// (both grids centred on the origin).
pub fn resample_bilinear(src: &Image, dims: [usize; 2], dx: f64) -> Vec<f64> {
    let [sx, sy] = src.dims;
    let mut out = vec![0.0; dims[0] * dims[1]];
    for i in 0..dims[0] {
        let x = (i as f64 - (dims[0] / 2) as f64) * dx;
        let fx = x / src.dx + (sx / 2) as f64;
        for j in 0..dims[1] {
            let y = (j as f64 - (dims[1] / 2) as f64) * dx;
            let fy = y / src.dx + (sy / 2) as f64;
            out[i * dims[1] + j] = sample(src, fx, fy);
        }
    }
    out
}

fn sample(src: &Image, fx: f64, fy: f64) -> f64 {
    let [sx, sy] = src.dims;
    let (x0, y0) = (fx.floor(), fy.floor());
    let (tx, ty) = (fx - x0, fy - y0);
    let get = |i: f64, j: f64| -> f64 {
        if i < 0.0 || j < 0.0 || i >= sx as f64 || j >= sy as f64 {
            0.0
        } else {
            src.at(i as usize, j as usize)
        }
    };
    (1.0 - tx) * (1.0 - ty) * get(x0, y0)
        + tx * (1.0 - ty) * get(x0 + 1.0, y0)
        + (1.0 - tx) * ty * get(x0, y0 + 1.0)
        + tx * ty * get(x0 + 1.0, y0 + 1.0)
}

/// One finite-difference check of the objective's gradient along `v`.
#[derive(Debug, Clone, Copy)]
pub struct GradientCheck {
    /// Step, as a multiple of `||p|| / ||v||`.
    pub h: f64,
    /// `(chi(p + h v) - chi(p - h v)) / 2h`.
    pub finite_difference: f64,
    /// `<-d, v>` with `d` the descent direction.
    pub analytic: f64,
    pub rel_error: f64,
}

/// Central differences of `chi` along `v` over relative steps
/// `10^-1 ... 10^-8`; returns every step and the index of the best one.
pub fn gradient_check(
    op: &PatOperator,
    p: &Image,
    measured: &BoundaryData,
    v: &Image,
) -> Result<(Vec<GradientCheck>, usize)> {
    let (_, d) = crate::recon::objective_and_direction(op, p, measured)?;
    let analytic = -domain_inner(&d, v);
    let scale = if v.norm() > 0.0 { p.norm().max(1e-300) / v.norm() } else { 1.0 };
    let mut checks = Vec::new();
    for k in 1..=8 {
        let h = 10f64.powi(-k) * scale;
        let plus = crate::recon::objective(op, &p.axpy(h, v), measured)?;
        let minus = crate::recon::objective(op, &p.axpy(-h, v), measured)?;
        let fd = (plus - minus) / (2.0 * h);
        checks.push(GradientCheck {
            h: h / scale,
            finite_difference: fd,
            analytic,
            rel_error: (fd - analytic).abs() / analytic.abs().max(1e-300),
        });
    }
    let best = (0..checks.len())
        .min_by(|&a, &b| checks[a].rel_error.total_cmp(&checks[b].rel_error))
        .expect("at least one step");
    Ok((checks, best))
}
