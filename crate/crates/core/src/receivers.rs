//! Line receivers, their finite-element discretization and the sparse
//! band-limited delta kernels that couple receiver nodes to grid points.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Grid, DIM};

pub type Point = [f64; DIM];

/// A straight receiver made of consecutive line elements.
#[derive(Debug, Clone, PartialEq)]
pub struct Receiver {
    pub nodes: Vec<Point>,
    /// Local node index pairs.
    pub elements: Vec<[usize; 2]>,
    /// Unit normal pointing away from the imaging domain.
    pub normal_out: Point,
}

impl Receiver {
    /// Evenly spaced nodes along the segment `a -> b`.
    pub fn segment(a: Point, b: Point, n_nodes: usize, normal_out: Point) -> Result<Self> {
        if n_nodes < 2 {
            return Err(Error::InvalidGeometry(format!(
                "a line receiver needs at least 2 nodes, got {n_nodes}"
            )));
        }
        let norm = normal_out[0].hypot(normal_out[1]);
        if !(norm > 0.0) {
            return Err(Error::InvalidGeometry("receiver normal has zero length".into()));
        }
        let last = (n_nodes - 1) as f64;
        let nodes = (0..n_nodes)
            .map(|k| {
                let s = k as f64 / last;
                [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
            })
            .collect();
        Ok(Receiver {
            nodes,
            elements: (0..n_nodes - 1).map(|k| [k, k + 1]).collect(),
            normal_out: [normal_out[0] / norm, normal_out[1] / norm],
        })
    }

    pub fn normal_in(&self) -> Point {
        [-self.normal_out[0], -self.normal_out[1]]
    }

    pub fn element_lengths(&self) -> Vec<f64> {
        self.elements
            .iter()
            .map(|&[a, b]| {
                let (p, q) = (self.nodes[a], self.nodes[b]);
                (q[0] - p[0]).hypot(q[1] - p[1])
            })
            .collect()
    }

    pub fn length(&self) -> f64 {
        self.element_lengths().iter().sum()
    }

    /// Lumped node weights `w_j = sum_{K contains j} s_K / N_l(K)`.
    pub fn node_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.nodes.len()];
        for (el, s) in self.elements.iter().zip(self.element_lengths()) {
            let share = s / el.len() as f64;
            for &j in el {
                w[j] += share;
            }
        }
        w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverArray {
    pub receivers: Vec<Receiver>,
    /// Nodes coincide with grid points and couple through an exact point
    /// mass instead of the band-limited kernel.
    pub exact_delta: bool,
}

impl ReceiverArray {
    pub fn n_nodes(&self) -> usize {
        self.receivers.iter().map(|r| r.nodes.len()).sum()
    }

    pub fn n_elements(&self) -> usize {
        self.receivers.iter().map(|r| r.elements.len()).sum()
    }

    /// All node positions in global order (receiver by receiver).
    pub fn node_positions(&self) -> Vec<Point> {
        self.receivers.iter().flat_map(|r| r.nodes.iter().copied()).collect()
    }

    /// Outward normal of the receiver owning each global node.
    pub fn node_normals(&self) -> Vec<Point> {
        self.receivers
            .iter()
            .flat_map(|r| std::iter::repeat_n(r.normal_out, r.nodes.len()))
            .collect()
    }

    /// `(receiver, local node)` for every global node index.
    pub fn node_owners(&self) -> Vec<(usize, usize)> {
        self.receivers
            .iter()
            .enumerate()
            .flat_map(|(r, rec)| (0..rec.nodes.len()).map(move |k| (r, k)))
            .collect()
    }

    /// Re-discretizes every receiver into `n_nodes` equally spaced nodes
    /// between its end points.
    pub fn resampled(&self, n_nodes: usize) -> Result<Self> {
        let receivers = self
            .receivers
            .iter()
            .map(|r| {
                let (a, b) = (r.nodes[0], *r.nodes.last().unwrap());
                Receiver::segment(a, b, n_nodes, r.normal_out)
            })
            .collect::<Result<_>>()?;
        Ok(ReceiverArray {
            receivers,
            exact_delta: false,
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# receiver array: positions and normals in metres");
        let _ = writeln!(s, "exact_delta {}", self.exact_delta);
        let _ = writeln!(s, "receivers {}", self.receivers.len());
        for r in &self.receivers {
            let _ = writeln!(s, "receiver");
            let _ = writeln!(s, "normal {} {}", r.normal_out[0], r.normal_out[1]);
            let _ = writeln!(s, "nodes {}", r.nodes.len());
            for p in &r.nodes {
                let _ = writeln!(s, "{} {}", p[0], p[1]);
            }
            let _ = writeln!(s, "elements {}", r.elements.len());
            for e in &r.elements {
                let _ = writeln!(s, "{} {}", e[0], e[1]);
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::Format(format!("receiver file ended early, expected {what}")))
        };
        fn field<'a>(line: (usize, &'a str), key: &str) -> Result<Vec<&'a str>> {
            let mut parts = line.1.split_whitespace();
            match parts.next() {
                Some(k) if k == key => Ok(parts.collect()),
                _ => Err(Error::Format(format!("line {}: expected `{key}`", line.0))),
            }
        }
        fn num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
            s.parse()
                .map_err(|_| Error::Format(format!("line {line}: cannot parse `{s}`")))
        }
        fn pair<T: std::str::FromStr + Copy>(line: (usize, &str)) -> Result<[T; 2]> {
            let v: Vec<&str> = line.1.split_whitespace().collect();
            if v.len() != 2 {
                return Err(Error::Format(format!("line {}: expected two values", line.0)));
            }
            Ok([num(line.0, v[0])?, num(line.0, v[1])?])
        }

        let l = next("exact_delta")?;
        let exact_delta = num(l.0, field(l, "exact_delta")?.first().copied().unwrap_or(""))?;
        let l = next("receivers")?;
        let count: usize = num(l.0, field(l, "receivers")?.first().copied().unwrap_or(""))?;
        let mut receivers = Vec::with_capacity(count);
        for _ in 0..count {
            field(next("receiver")?, "receiver")?;
            let l = next("normal")?;
            let n = field(l, "normal")?;
            if n.len() != 2 {
                return Err(Error::Format(format!("line {}: normal needs 2 values", l.0)));
            }
            let normal_out = [num(l.0, n[0])?, num(l.0, n[1])?];
            let l = next("nodes")?;
            let nn: usize = num(l.0, field(l, "nodes")?.first().copied().unwrap_or(""))?;
            let nodes = (0..nn)
                .map(|_| pair::<f64>(next("node")?))
                .collect::<Result<Vec<_>>>()?;
            let l = next("elements")?;
            let ne: usize = num(l.0, field(l, "elements")?.first().copied().unwrap_or(""))?;
            let elements = (0..ne)
                .map(|_| pair::<usize>(next("element")?))
                .collect::<Result<Vec<_>>>()?;
            if elements.iter().flatten().any(|&k| k >= nn) {
                return Err(Error::Format("element references a missing node".into()));
            }
            receivers.push(Receiver {
                nodes,
                elements,
                normal_out,
            });
        }
        Ok(ReceiverArray {
            receivers,
            exact_delta,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::container::write_atomic(path, self.to_text().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

/// Per-node quadrature weights over the whole array.
pub fn quadrature_weights(array: &ReceiverArray) -> Vec<f64> {
    array.receivers.iter().flat_map(|r| r.node_weights()).collect()
}

/// Receivers tangent to a circle, centres equally spaced in angle, normals
/// pointing radially outward.
pub fn build_circular_array(
    n_receivers: usize,
    radius: f64,
    half_length: f64,
    nodes_per_receiver: usize,
    center: Point,
) -> Result<ReceiverArray> {
    if !(half_length > 0.0 && radius > half_length) {
        return Err(Error::InvalidGeometry(format!(
            "need radius > half_length > 0, got radius={radius}, half_length={half_length}"
        )));
    }
    if n_receivers == 0 {
        return Err(Error::InvalidGeometry("no receivers requested".into()));
    }
    let spacing = 2.0 * PI * radius / n_receivers as f64;
    if spacing < 2.0 * half_length {
        return Err(Error::InvalidGeometry(format!(
            "receivers overlap: arc spacing {spacing:e} m is shorter than the {:e} m segment",
            2.0 * half_length
        )));
    }
    let receivers = (0..n_receivers)
        .map(|r| {
            let theta = 2.0 * PI * r as f64 / n_receivers as f64;
            let (s, c) = theta.sin_cos();
            let mid = [center[0] + radius * c, center[1] + radius * s];
            let tangent = [-s, c];
            let a = [mid[0] - half_length * tangent[0], mid[1] - half_length * tangent[1]];
            let b = [mid[0] + half_length * tangent[0], mid[1] + half_length * tangent[1]];
            Receiver::segment(a, b, nodes_per_receiver, [c, s])
        })
        .collect::<Result<_>>()?;
    Ok(ReceiverArray {
        receivers,
        exact_delta: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Bottom,
    Right,
    Top,
}

impl std::str::FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Side::Left),
            "bottom" => Ok(Side::Bottom),
            "right" => Ok(Side::Right),
            "top" => Ok(Side::Top),
            _ => Err(Error::Config(format!("unknown side `{s}`"))),
        }
    }
}

/// One two-node receiver per pair of neighbouring grid points along the
/// `inset`-th interior row/column from each selected side.
pub fn build_ongrid_lines(grid: &Grid, sides: &[Side], inset: usize) -> Result<ReceiverArray> {
    let [nx, ny] = grid.dims;
    if inset < 1 || inset > nx.min(ny) {
        return Err(Error::InvalidGeometry(format!("inset {inset} outside the interior")));
    }
    let pml = grid.pml_size as f64;
    let at = |i: usize, j: usize| -> Point {
        [grid.coordinate(0, i as f64 + pml), grid.coordinate(1, j as f64 + pml)]
    };
    let mut receivers = Vec::new();
    for side in sides {
        let (line, normal): (Vec<Point>, Point) = match side {
            Side::Left => ((0..ny).map(|j| at(inset - 1, j)).collect(), [-1.0, 0.0]),
            Side::Right => ((0..ny).map(|j| at(nx - inset, j)).collect(), [1.0, 0.0]),
            Side::Bottom => ((0..nx).map(|i| at(i, inset - 1)).collect(), [0.0, -1.0]),
            Side::Top => ((0..nx).map(|i| at(i, ny - inset)).collect(), [0.0, 1.0]),
        };
        for w in line.windows(2) {
            receivers.push(Receiver::segment(w[0], w[1], 2, normal)?);
        }
    }
    Ok(ReceiverArray {
        receivers,
        exact_delta: true,
    })
}

/// Sparse delta kernel of one node: `(full-grid flat index, value in m^-d)`,
/// sorted by index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DeltaKernel {
    pub entries: Vec<(usize, f64)>,
}

impl DeltaKernel {
    /// `sum_i w_i K_i f_i` over the stored entries.
    pub fn gather(&self, field: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * field[i]).sum()
    }

    pub fn scatter(&self, scale: f64, field: &mut [f64]) {
        for &(i, v) in &self.entries {
            field[i] += scale * v;
        }
    }
}

/// `sin(pi d) / (pi d)` with exact zeros at nonzero integers.
pub fn sinc_pi(d: f64) -> f64 {
    if d == 0.0 {
        return 1.0;
    }
    let n = d.round();
    let s = (PI * (d - n)).sin();
    let s = if n.rem_euclid(2.0) == 0.0 { s } else { -s };
    s / (PI * d)
}

/// Band-limited delta `prod_z (1/b) sinc(pi (x^z - X^z) / b)` evaluated at
/// the regular grid points of the interior, keeping entries with
/// `|value| > eps`.
pub fn delta_kernel(position: Point, grid: &Grid, b: f64, eps: f64) -> Option<DeltaKernel> {
    kernel_at(position, grid, b, eps, [0.0; DIM])
}

/// As [`delta_kernel`], evaluated at the points staggered by `+dx/2` along
/// `axis` (where the velocity and pressure gradient component live).
pub fn delta_kernel_staggered(
    position: Point,
    grid: &Grid,
    b: f64,
    eps: f64,
    axis: usize,
) -> Option<DeltaKernel> {
    let mut shift = [0.0; DIM];
    shift[axis] = 0.5;
    kernel_at(position, grid, b, eps, shift)
}

fn kernel_at(position: Point, grid: &Grid, b: f64, eps: f64, shift: [f64; DIM]) -> Option<DeltaKernel> {
    let dims = grid.total_dims();
    // the kernel lives on the physical domain only, never in the PML
    let factors: [Vec<f64>; DIM] = std::array::from_fn(|a| {
        let interior = grid.pml_size..grid.pml_size + grid.dims[a];
        (0..dims[a])
            .map(|i| {
                if !interior.contains(&i) {
                    return 0.0;
                }
                // offsets in index units keep on-grid nodes at exact integers
                let offset = grid.index_of(a, position[a]) - (i as f64 + shift[a]);
                sinc_pi(offset * (grid.dx / b)) / b
            })
            .collect()
    });
    let (fx, fy) = (&factors[0], &factors[1]);
    let mut order: Vec<usize> = (0..fy.len()).collect();
    order.sort_by(|&a, &c| fy[c].abs().total_cmp(&fy[a].abs()));
    let fy_max = fy[order[0]].abs();

    let mut entries = Vec::new();
    for (i, &vx) in fx.iter().enumerate() {
        if vx.abs() * fy_max <= eps {
            continue;
        }
        for &j in &order {
            let v = vx * fy[j];
            if v.abs() <= eps {
                break;
            }
            entries.push((i * dims[1] + j, v));
        }
    }
    if entries.is_empty() {
        return None;
    }
    entries.sort_by_key(|e| e.0);
    Some(DeltaKernel { entries })
}

/// Bandwidth and threshold of the band-limited delta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    /// Bandwidth `b` in metres.
    pub b: f64,
    /// Absolute threshold in m^-d.
    pub eps: f64,
}

impl KernelSpec {
    /// `b = dx` and `eps = factor / b^d`.
    pub fn relative(grid: &Grid, factor: f64) -> Self {
        let b = grid.dx;
        KernelSpec {
            b,
            eps: factor / b.powi(DIM as i32),
        }
    }
}

/// Kernels of every node, one per gradient component: component `z` is
/// evaluated at the `+dx/2` points along `z`.
#[derive(Debug, Clone)]
pub struct ArrayKernels {
    pub per_axis: [Vec<DeltaKernel>; DIM],
}

impl ArrayKernels {
    pub fn build(array: &ReceiverArray, grid: &Grid, spec: KernelSpec) -> Result<Self> {
        let positions = array.node_positions();
        if array.exact_delta {
            let inv_vol = 1.0 / grid.cell_volume();
            let kernels = positions
                .iter()
                .enumerate()
                .map(|(j, p)| {
                    let ix = grid.index_of(0, p[0]);
                    let iy = grid.index_of(1, p[1]);
                    let (rx, ry) = (ix.round(), iy.round());
                    let dims = grid.total_dims();
                    let on_grid = (ix - rx).abs() < 1e-6 && (iy - ry).abs() < 1e-6;
                    if !on_grid || rx < 0.0 || ry < 0.0 || rx >= dims[0] as f64 || ry >= dims[1] as f64 {
                        return Err(Error::InvalidGeometry(format!(
                            "node {j} does not coincide with a grid point"
                        )));
                    }
                    Ok(DeltaKernel {
                        entries: vec![(grid.full_index(rx as usize, ry as usize), inv_vol)],
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(ArrayKernels {
                per_axis: std::array::from_fn(|_| kernels.clone()),
            });
        }
        let per_axis = std::array::from_fn(|axis| {
            positions
                .iter()
                .enumerate()
                .map(|(j, &p)| {
                    delta_kernel_staggered(p, grid, spec.b, spec.eps, axis).ok_or(Error::EmptyKernel {
                        node: j,
                        x: p[0],
                        y: p[1],
                    })
                })
                .collect::<Result<Vec<_>>>()
        });
        let [a, c] = per_axis;
        Ok(ArrayKernels {
            per_axis: [a?, c?],
        })
    }

    /// Union of all grid points touched by any node kernel.
    pub fn support_mask(&self, grid: &Grid) -> Vec<bool> {
        let mut mask = vec![false; grid.total_len()];
        for k in self.per_axis.iter().flatten() {
            for &(i, _) in &k.entries {
                mask[i] = true;
            }
        }
        mask
    }

    pub fn n_entries(&self) -> usize {
        self.per_axis.iter().flatten().map(|k| k.entries.len()).sum()
    }
}
