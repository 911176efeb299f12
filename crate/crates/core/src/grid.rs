//! Uniform Cartesian grids on intervals, rectangles, disks and balls, with
//! second-order finite differences and Dirichlet data.
//!
//! Straight domains carry their boundary on lattice nodes. Curved domains
//! (disk, ball) are cut out of the lattice: nodes outside the shape are
//! exterior and hold no data, and every interior node whose axis neighbour is
//! exterior gets a *cut point* on the true boundary, at fraction `theta` of
//! the spacing. Boundary values live on boundary nodes and cut points, and the
//! Laplacian uses the Shortley-Weller unequal-arm stencil there.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::scalar::{lit, Real};
use crate::tensor::{QTensor, Rotation};
use crate::vec3::{self, Vec3};

/// Geometry of the computational domain. Straight shapes have a corner at
/// the origin; curved shapes are centred on it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape<T> {
    Interval { length: T },
    Rectangle { lx: T, ly: T },
    Disk { radius: T },
    Ball { radius: T },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DomainSpec<T> {
    pub shape: Shape<T>,
    /// Uniform grid spacing.
    pub h: T,
}

impl<T: Real> DomainSpec<T> {
    pub fn new(shape: Shape<T>, h: T) -> Self {
        Self { shape, h }
    }

    pub fn dim(&self) -> usize {
        match self.shape {
            Shape::Interval { .. } => 1,
            Shape::Rectangle { .. } | Shape::Disk { .. } => 2,
            Shape::Ball { .. } => 3,
        }
    }

    pub fn is_curved(&self) -> bool {
        matches!(self.shape, Shape::Disk { .. } | Shape::Ball { .. })
    }

    pub fn radius(&self) -> Option<T> {
        match self.shape {
            Shape::Disk { radius } | Shape::Ball { radius } => Some(radius),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeClass {
    Interior,
    Boundary,
    Exterior,
}

impl NodeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeClass::Interior => "interior",
            NodeClass::Boundary => "boundary",
            NodeClass::Exterior => "exterior",
        }
    }
}

/// Intersection of a lattice edge with a curved boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutPoint<T> {
    /// Active index of the interior node owning the arm.
    pub node: usize,
    pub axis: usize,
    /// True for the `+axis` arm.
    pub forward: bool,
    /// Arm length as a fraction of `h`, in `(0, 1]`.
    pub theta: T,
    pub position: Vec3<T>,
}

/// One arm of the stencil at an interior node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Arm {
    Node(usize),
    Cut(usize),
}

/// The two arms of an interior node along one axis, with their lengths.
#[derive(Clone, Copy, Debug)]
pub struct AxisStencil<T> {
    pub minus: Arm,
    pub plus: Arm,
    pub h_minus: T,
    pub h_plus: T,
}

impl<T: Real> AxisStencil<T> {
    /// Weights `(w_minus, w_plus)` of the unequal-arm second difference; the
    /// centre weight is `-(w_minus + w_plus)`.
    pub fn second_weights(&self) -> (T, T) {
        let s = self.h_minus + self.h_plus;
        let two = lit::<T>(2.0);
        (two / (s * self.h_minus), two / (s * self.h_plus))
    }
}

const NONE: u32 = u32::MAX;

/// Node layout and stencil topology; immutable once built.
#[derive(Debug)]
pub struct Grid<T> {
    spec: DomainSpec<T>,
    dim: usize,
    counts: [usize; 3],
    strides: [usize; 3],
    origin: Vec3<T>,
    class: Vec<NodeClass>,
    index: Vec<u32>,
    lattice_of: Vec<u32>,
    interior: Vec<u32>,
    cuts: Vec<CutPoint<T>>,
    cut_start: Vec<u32>,
}

impl<T: Real> Grid<T> {
    /// Builds the lattice and classifies its nodes.
    pub fn build(spec: DomainSpec<T>) -> Result<Self> {
        let h = spec.h;
        if !(h > T::zero()) || !h.is_finite() {
            return Err(invalid(format!("grid spacing must be positive, got {h}")));
        }
        let dim = spec.dim();
        let steps = |len: T, what: &str| -> Result<usize> {
            if !(len > T::zero()) || !len.is_finite() {
                return Err(invalid(format!("{what} must be positive, got {len}")));
            }
            let n = (len / h).round();
            if (n * h - len).abs() > lit::<T>(1e-9) * len {
                return Err(invalid(format!(
                    "{what} {len} is not a multiple of h = {h}"
                )));
            }
            n.to_usize().ok_or_else(|| invalid("grid too large"))
        };

        let (counts, origin, half) = match spec.shape {
            Shape::Interval { length } => {
                let n = steps(length, "interval length")?;
                ([n + 1, 1, 1], [T::zero(); 3], None)
            }
            Shape::Rectangle { lx, ly } => {
                let nx = steps(lx, "rectangle width")?;
                let ny = steps(ly, "rectangle height")?;
                ([nx + 1, ny + 1, 1], [T::zero(); 3], None)
            }
            Shape::Disk { radius } | Shape::Ball { radius } => {
                if !(radius > T::zero()) || !radius.is_finite() {
                    return Err(invalid(format!("radius must be positive, got {radius}")));
                }
                let k = (radius / h * (T::one() + lit(1e-12)))
                    .floor()
                    .to_usize()
                    .ok_or_else(|| invalid("grid too large"))?;
                let c = 2 * k + 1;
                let o = -h * lit(k as f64);
                if dim == 2 {
                    ([c, c, 1], [o, o, T::zero()], Some(radius))
                } else {
                    ([c, c, c], [o, o, o], Some(radius))
                }
            }
        };
        let total = counts[0]
            .checked_mul(counts[1])
            .and_then(|v| v.checked_mul(counts[2]))
            .filter(|&v| v < NONE as usize)
            .ok_or_else(|| invalid("grid too large"))?;
        let strides = [1, counts[0], counts[0] * counts[1]];

        let mut class = vec![NodeClass::Exterior; total];
        for (lat, slot) in class.iter_mut().enumerate() {
            let ijk = [
                lat % counts[0],
                (lat / counts[0]) % counts[1],
                lat / (counts[0] * counts[1]),
            ];
            *slot = match half {
                None => {
                    let on_edge = (0..dim).any(|a| ijk[a] == 0 || ijk[a] == counts[a] - 1);
                    if on_edge {
                        NodeClass::Boundary
                    } else {
                        NodeClass::Interior
                    }
                }
                Some(radius) => {
                    let p: Vec3<T> = std::array::from_fn(|a| {
                        if a < dim {
                            origin[a] + h * lit(ijk[a] as f64)
                        } else {
                            T::zero()
                        }
                    });
                    let rho = vec3::symmetric_norm(&p);
                    if (rho - radius).abs() <= lit::<T>(1e-9) * h {
                        NodeClass::Boundary
                    } else if rho < radius {
                        NodeClass::Interior
                    } else {
                        NodeClass::Exterior
                    }
                }
            };
        }

        let mut index = vec![NONE; total];
        let mut lattice_of = Vec::new();
        let mut interior = Vec::new();
        for (lat, c) in class.iter().enumerate() {
            if *c != NodeClass::Exterior {
                index[lat] = lattice_of.len() as u32;
                if *c == NodeClass::Interior {
                    interior.push(lattice_of.len() as u32);
                }
                lattice_of.push(lat as u32);
            }
        }

        let mut grid = Grid {
            spec,
            dim,
            counts,
            strides,
            origin,
            class,
            index,
            lattice_of,
            interior,
            cuts: Vec::new(),
            cut_start: Vec::new(),
        };
        grid.build_cuts();
        grid.validate_resolution()?;
        Ok(grid)
    }

    fn build_cuts(&mut self) {
        let n = self.lattice_of.len();
        let mut cut_start = Vec::with_capacity(n + 1);
        let mut cuts = Vec::new();
        let radius = self.spec.radius();
        for active in 0..n {
            cut_start.push(cuts.len() as u32);
            let Some(radius) = radius else { continue };
            if self.class_of(active) != NodeClass::Interior {
                continue;
            }
            let x = self.position(active);
            let rho2 = vec3::dot(&x, &x);
            for axis in 0..self.dim {
                for forward in [false, true] {
                    if self.neighbor_lattice(active, axis, forward).is_some() {
                        continue;
                    }
                    let sigma = if forward { T::one() } else { -T::one() };
                    let xa = x[axis];
                    let disc = (xa * xa - (rho2 - radius * radius)).max(T::zero());
                    let t = -sigma * xa + disc.sqrt();
                    let theta = (t / self.spec.h).min(T::one()).max(T::epsilon());
                    let mut position = x;
                    position[axis] = position[axis] + sigma * theta * self.spec.h;
                    cuts.push(CutPoint {
                        node: active,
                        axis,
                        forward,
                        theta,
                        position,
                    });
                }
            }
        }
        cut_start.push(cuts.len() as u32);
        self.cuts = cuts;
        self.cut_start = cut_start;
    }

    fn validate_resolution(&self) -> Result<()> {
        for axis in 0..self.dim {
            let count = match self.spec.shape {
                Shape::Interval { .. } | Shape::Rectangle { .. } => self.counts[axis] - 2,
                Shape::Disk { .. } | Shape::Ball { .. } => {
                    // interior nodes on the coordinate axis through the centre
                    let mid = (self.counts[0] - 1) / 2;
                    (0..self.counts[axis])
                        .filter(|&i| {
                            let mut ijk = [0; 3];
                            for (a, v) in ijk.iter_mut().enumerate().take(self.dim) {
                                *v = if a == axis { i } else { mid };
                            }
                            self.class[self.lattice_index(ijk)] == NodeClass::Interior
                        })
                        .count()
                }
            };
            if count < 3 {
                return Err(invalid(format!(
                    "grid too coarse: {count} interior nodes along axis {axis}, need at least 3"
                )));
            }
        }
        Ok(())
    }

    pub fn spec(&self) -> &DomainSpec<T> {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> T {
        self.spec.h
    }

    /// Lattice extent per axis (1 for unused axes).
    pub fn counts(&self) -> [usize; 3] {
        self.counts
    }

    pub fn origin(&self) -> Vec3<T> {
        self.origin
    }

    /// Number of non-exterior nodes.
    pub fn len(&self) -> usize {
        self.lattice_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lattice_of.is_empty()
    }

    /// Active indices of interior nodes, ascending.
    pub fn interior(&self) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.interior.iter().map(|&i| i as usize)
    }

    pub fn interior_count(&self) -> usize {
        self.interior.len()
    }

    pub fn class_of(&self, active: usize) -> NodeClass {
        self.class[self.lattice_of[active] as usize]
    }

    pub fn is_interior(&self, active: usize) -> bool {
        self.class_of(active) == NodeClass::Interior
    }

    pub fn cuts(&self) -> &[CutPoint<T>] {
        &self.cuts
    }

    /// Cut points owned by an active node.
    pub fn cuts_of(&self, active: usize) -> &[CutPoint<T>] {
        &self.cuts[self.cut_range(active)]
    }

    /// Global indices of the cut points owned by an active node.
    pub fn cut_range(&self, active: usize) -> std::ops::Range<usize> {
        self.cut_start[active] as usize..self.cut_start[active + 1] as usize
    }

    fn cut_index(&self, active: usize, axis: usize, forward: bool) -> Option<usize> {
        let a = self.cut_start[active] as usize;
        self.cuts_of(active)
            .iter()
            .position(|c| c.axis == axis && c.forward == forward)
            .map(|k| a + k)
    }

    fn lattice_index(&self, ijk: [usize; 3]) -> usize {
        ijk[0] * self.strides[0] + ijk[1] * self.strides[1] + ijk[2] * self.strides[2]
    }

    /// Lattice coordinates of an active node.
    pub fn lattice_coords(&self, active: usize) -> [usize; 3] {
        let lat = self.lattice_of[active] as usize;
        [
            lat % self.counts[0],
            (lat / self.counts[0]) % self.counts[1],
            lat / (self.counts[0] * self.counts[1]),
        ]
    }

    /// Active node at signed lattice coordinates, if any.
    pub fn active_at(&self, ijk: [i64; 3]) -> Option<usize> {
        for a in 0..3 {
            if ijk[a] < 0 || ijk[a] as usize >= self.counts[a] {
                return None;
            }
        }
        let lat = self.lattice_index(ijk.map(|v| v as usize));
        match self.index[lat] {
            NONE => None,
            i => Some(i as usize),
        }
    }

    pub fn position(&self, active: usize) -> Vec3<T> {
        let ijk = self.lattice_coords(active);
        std::array::from_fn(|a| {
            if a < self.dim {
                self.origin[a] + self.spec.h * lit(ijk[a] as f64)
            } else {
                T::zero()
            }
        })
    }

    fn neighbor_lattice(&self, active: usize, axis: usize, forward: bool) -> Option<usize> {
        let ijk = self.lattice_coords(active);
        let i = ijk[axis];
        let j = if forward {
            if i + 1 >= self.counts[axis] {
                return None;
            }
            i + 1
        } else {
            i.checked_sub(1)?
        };
        let mut nb = ijk;
        nb[axis] = j;
        let lat = self.lattice_index(nb);
        match self.index[lat] {
            NONE => None,
            k => Some(k as usize),
        }
    }

    /// Face-adjacent active nodes.
    pub fn neighbors(&self, active: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.dim).flat_map(move |axis| {
            [false, true]
                .into_iter()
                .filter_map(move |fwd| self.neighbor_lattice(active, axis, fwd))
        })
    }

    /// Stencil arms of an interior node along `axis`.
    pub fn axis_stencil(&self, active: usize, axis: usize) -> AxisStencil<T> {
        let h = self.spec.h;
        let arm = |forward: bool| -> (Arm, T) {
            match self.neighbor_lattice(active, axis, forward) {
                Some(j) => (Arm::Node(j), h),
                None => {
                    let c = self
                        .cut_index(active, axis, forward)
                        .expect("interior node without neighbour must own a cut point");
                    (Arm::Cut(c), self.cuts[c].theta * h)
                }
            }
        };
        let (minus, h_minus) = arm(false);
        let (plus, h_plus) = arm(true);
        AxisStencil {
            minus,
            plus,
            h_minus,
            h_plus,
        }
    }

    /// Centre coefficient magnitude of the Laplacian stencil at a node.
    pub fn stencil_diagonal(&self, active: usize) -> T {
        (0..self.dim)
            .map(|a| {
                let (wm, wp) = self.axis_stencil(active, a).second_weights();
                wm + wp
            })
            .fold(T::zero(), |s, v| s + v)
    }

    /// Quadrature weight (cell volume) of a node: trapezoidal on straight
    /// domains, `h^d` for interior nodes and zero for boundary nodes on
    /// curved ones.
    pub fn quadrature_weight(&self, active: usize) -> T {
        let hd = self.spec.h.powi(self.dim as i32);
        match self.spec.shape {
            Shape::Interval { .. } | Shape::Rectangle { .. } => {
                let ijk = self.lattice_coords(active);
                (0..self.dim).fold(hd, |w, a| {
                    if ijk[a] == 0 || ijk[a] == self.counts[a] - 1 {
                        w / lit(2.0)
                    } else {
                        w
                    }
                })
            }
            _ => {
                if self.is_interior(active) {
                    hd
                } else {
                    T::zero()
                }
            }
        }
    }

    /// Active node hit by `g^{-1} x` for every node `x`, when the lattice is
    /// mapped onto itself by `g` (signed permutations on centred grids).
    pub fn rotation_map(&self, g: &Rotation<T>) -> Result<Vec<usize>> {
        if !self.spec.is_curved() || !g.is_signed_permutation() {
            return Err(invalid(
                "lattice rotations need a centred disk/ball grid and an axis-aligned rotation",
            ));
        }
        if self.dim == 2 && g.matrix()[2][2].abs() != T::one() {
            return Err(invalid("rotation does not preserve the plane of the disk"));
        }
        let inv = g.inverse();
        let center = ((self.counts[0] - 1) / 2) as i64;
        (0..self.len())
            .map(|i| {
                let ijk = self.lattice_coords(i);
                let rel: Vec3<T> = std::array::from_fn(|a| {
                    if a < self.dim {
                        lit(ijk[a] as f64 - center as f64)
                    } else {
                        T::zero()
                    }
                });
                let src = inv.apply(&rel);
                let mut sijk = [0i64; 3];
                for a in 0..3 {
                    let v = src[a].to_f64().unwrap_or(f64::NAN).round() as i64;
                    sijk[a] = if a < self.dim { v + center } else { v };
                }
                self.active_at(sijk)
                    .ok_or_else(|| invalid("rotation does not map the lattice onto itself"))
            })
            .collect()
    }

    /// Cut point matching `cut` after the node map of [`rotation_map`].
    fn rotated_cut(&self, g_inv: &Rotation<T>, map: &[usize], cut: usize) -> Result<usize> {
        let c = &self.cuts[cut];
        let mut dir = [T::zero(); 3];
        dir[c.axis] = if c.forward { T::one() } else { -T::one() };
        let d = g_inv.apply(&dir);
        let axis = (0..3)
            .find(|&a| d[a] != T::zero())
            .ok_or_else(|| invalid("degenerate rotation"))?;
        let forward = d[axis] > T::zero();
        self.cut_index(map[c.node], axis, forward)
            .ok_or_else(|| invalid("rotation does not map cut points onto cut points"))
    }
}

/// Values that can live on grid nodes.
pub trait FieldValue<T>: Copy + Send + Sync + 'static {
    fn zero() -> Self;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn scale(self, k: T) -> Self;
    fn magnitude(&self) -> T;
}

impl<T: Real> FieldValue<T> for T {
    fn zero() -> Self {
        T::zero()
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn scale(self, k: T) -> Self {
        self * k
    }
    fn magnitude(&self) -> T {
        self.abs()
    }
}

impl<T: Real> FieldValue<T> for Vec3<T> {
    fn zero() -> Self {
        [T::zero(); 3]
    }
    fn add(self, o: Self) -> Self {
        vec3::add(&self, &o)
    }
    fn sub(self, o: Self) -> Self {
        vec3::sub(&self, &o)
    }
    fn scale(self, k: T) -> Self {
        vec3::scale(&self, k)
    }
    fn magnitude(&self) -> T {
        vec3::norm(self)
    }
}

impl<T: Real> FieldValue<T> for QTensor<T> {
    fn zero() -> Self {
        QTensor::zero()
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn scale(self, k: T) -> Self {
        QTensor::scale(&self, k)
    }
    fn magnitude(&self) -> T {
        self.norm()
    }
}

/// Grid function: one value per active node plus one per cut point.
#[derive(Clone, Debug)]
pub struct Field<T, V> {
    grid: Arc<Grid<T>>,
    values: Vec<V>,
    cut_values: Vec<V>,
}

pub type QField<T> = Field<T, QTensor<T>>;
pub type ScalarField<T> = Field<T, T>;
pub type VectorField<T> = Field<T, Vec3<T>>;

/// Dirichlet data: values for boundary nodes and cut points.
#[derive(Clone, Debug)]
pub struct BoundaryValues<T, V> {
    pub nodes: Vec<(usize, V)>,
    pub cuts: Vec<V>,
    pub warnings: Vec<String>,
    _scalar: std::marker::PhantomData<T>,
}

impl<T: Real, V: FieldValue<T>> BoundaryValues<T, V> {
    /// Samples `f` at every boundary node and cut point of `grid`.
    pub fn from_fn(grid: &Grid<T>, f: impl Fn(&Vec3<T>) -> V) -> Self {
        let nodes = (0..grid.len())
            .filter(|&i| grid.class_of(i) == NodeClass::Boundary)
            .map(|i| (i, f(&grid.position(i))))
            .collect();
        let cuts = grid.cuts().iter().map(|c| f(&c.position)).collect();
        Self {
            nodes,
            cuts,
            warnings: Vec::new(),
            _scalar: std::marker::PhantomData,
        }
    }
}

impl<T: Real, V: FieldValue<T>> Field<T, V> {
    pub fn zeros(grid: Arc<Grid<T>>) -> Self {
        let n = grid.len();
        let m = grid.cuts().len();
        Self {
            grid,
            values: vec![V::zero(); n],
            cut_values: vec![V::zero(); m],
        }
    }

    /// Samples `f` at every node and cut point.
    pub fn from_fn(grid: Arc<Grid<T>>, f: impl Fn(&Vec3<T>) -> V) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.position(i))).collect();
        let cut_values = grid.cuts().iter().map(|c| f(&c.position)).collect();
        Self {
            grid,
            values,
            cut_values,
        }
    }

    pub fn from_parts(grid: Arc<Grid<T>>, values: Vec<V>, cut_values: Vec<V>) -> Result<Self> {
        if values.len() != grid.len() || cut_values.len() != grid.cuts().len() {
            return Err(invalid("field data does not match the grid"));
        }
        Ok(Self {
            grid,
            values,
            cut_values,
        })
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[V] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [V] {
        &mut self.values
    }

    pub fn cut_values(&self) -> &[V] {
        &self.cut_values
    }

    pub fn cut_values_mut(&mut self) -> &mut [V] {
        &mut self.cut_values
    }

    pub fn value(&self, active: usize) -> V {
        self.values[active]
    }

    pub fn arm_value(&self, arm: Arm) -> V {
        match arm {
            Arm::Node(j) => self.values[j],
            Arm::Cut(c) => self.cut_values[c],
        }
    }

    pub fn apply_boundary(&mut self, bc: &BoundaryValues<T, V>) -> Result<()> {
        if bc.cuts.len() != self.cut_values.len() {
            return Err(invalid("boundary data does not match the grid"));
        }
        for &(i, v) in &bc.nodes {
            if self.grid.class_of(i) != NodeClass::Boundary {
                return Err(invalid(format!("node {i} is not a boundary node")));
            }
            self.values[i] = v;
        }
        self.cut_values.copy_from_slice(&bc.cuts);
        Ok(())
    }

    /// Copies boundary nodes and cut points from `other` (same grid).
    pub fn copy_boundary_from(&mut self, other: &Self) {
        for i in 0..self.grid.len() {
            if !self.grid.is_interior(i) {
                self.values[i] = other.values[i];
            }
        }
        self.cut_values.copy_from_slice(&other.cut_values);
    }

    pub fn map<W: FieldValue<T>>(&self, f: impl Fn(&V) -> W) -> Field<T, W> {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(&f).collect(),
            cut_values: self.cut_values.iter().map(&f).collect(),
        }
    }

    /// Largest magnitude over interior nodes.
    pub fn interior_sup(&self) -> T {
        self.grid
            .interior()
            .map(|i| self.values[i].magnitude())
            .fold(T::zero(), T::max)
    }

    /// Largest magnitude over all nodes and cut points.
    pub fn sup(&self) -> T {
        self.values
            .iter()
            .chain(&self.cut_values)
            .map(FieldValue::magnitude)
            .fold(T::zero(), T::max)
    }

    /// Largest magnitude over boundary nodes and cut points.
    pub fn boundary_sup(&self) -> T {
        (0..self.grid.len())
            .filter(|&i| !self.grid.is_interior(i))
            .map(|i| self.values[i].magnitude())
            .chain(self.cut_values.iter().map(FieldValue::magnitude))
            .fold(T::zero(), T::max)
    }

    /// Unequal-arm second difference along one axis at an interior node.
    pub fn second_difference(&self, active: usize, axis: usize) -> V {
        let st = self.grid.axis_stencil(active, axis);
        let (wm, wp) = st.second_weights();
        let v = self.values[active];
        let vm = self.arm_value(st.minus);
        let vp = self.arm_value(st.plus);
        vp.sub(v).scale(wp).add(vm.sub(v).scale(wm))
    }

    /// Three-point first derivative along one axis at an interior node;
    /// second order also on unequal arms.
    pub fn first_difference(&self, active: usize, axis: usize) -> V {
        let st = self.grid.axis_stencil(active, axis);
        let (hm, hp) = (st.h_minus, st.h_plus);
        let v = self.values[active];
        let vm = self.arm_value(st.minus);
        let vp = self.arm_value(st.plus);
        let den = hm * hp * (hm + hp);
        vp.sub(v)
            .scale(hm * hm / den)
            .add(v.sub(vm).scale(hp * hp / den))
    }

    /// Laplacian at one interior node.
    pub fn laplacian_at(&self, active: usize) -> V {
        (0..self.grid.dim).fold(V::zero(), |acc, a| {
            acc.add(self.second_difference(active, a))
        })
    }

    /// Discrete Laplacian on interior nodes (zero on boundary nodes and cut
    /// points). Second order on uniform stencils, Shortley-Weller at cut
    /// cells.
    pub fn laplacian(&self) -> Self {
        let grid = &self.grid;
        let values = par_map_nodes(grid, |i| {
            if grid.is_interior(i) {
                self.laplacian_at(i)
            } else {
                V::zero()
            }
        });
        Self {
            grid: grid.clone(),
            values,
            cut_values: vec![V::zero(); self.cut_values.len()],
        }
    }

    /// Harmonic extension of the boundary data into the interior.
    ///
    /// Exact linear interpolation on intervals; otherwise successive
    /// over-relaxation sweeps of the discrete Laplace equation, starting from
    /// the mean boundary value.
    pub fn fill_harmonic(&mut self, sweeps: usize) {
        let grid = self.grid.clone();
        if let Shape::Interval { length } = grid.spec.shape {
            let n = grid.len();
            let (a, b) = (self.values[0], self.values[n - 1]);
            for i in 1..n - 1 {
                let t = grid.position(i)[0] / length;
                self.values[i] = a.scale(T::one() - t).add(b.scale(t));
            }
            return;
        }
        let mut sum = V::zero();
        let mut count = 0usize;
        for i in 0..grid.len() {
            if !grid.is_interior(i) {
                sum = sum.add(self.values[i]);
                count += 1;
            }
        }
        for v in &self.cut_values {
            sum = sum.add(*v);
            count += 1;
        }
        let mean = if count > 0 {
            sum.scale(T::one() / lit(count as f64))
        } else {
            V::zero()
        };
        for i in grid.interior() {
            self.values[i] = mean;
        }
        let omega = lit::<T>(1.6);
        for _ in 0..sweeps {
            for i in grid.interior() {
                let mut acc = V::zero();
                let mut diag = T::zero();
                for a in 0..grid.dim {
                    let st = grid.axis_stencil(i, a);
                    let (wm, wp) = st.second_weights();
                    acc = acc
                        .add(self.arm_value(st.minus).scale(wm))
                        .add(self.arm_value(st.plus).scale(wp));
                    diag = diag + wm + wp;
                }
                let target = acc.scale(T::one() / diag);
                let old = self.values[i];
                self.values[i] = old.add(target.sub(old).scale(omega));
            }
        }
    }

    /// Multilinear interpolation at `p`; `None` unless every corner of the
    /// enclosing lattice cell is an active node.
    pub fn interpolate(&self, p: &Vec3<T>) -> Option<V> {
        let g = &self.grid;
        let mut base = [0usize; 3];
        let mut frac = [T::zero(); 3];
        for a in 0..g.dim {
            let u = (p[a] - g.origin[a]) / g.spec.h;
            if !u.is_finite() || u < -lit::<T>(1e-12) {
                return None;
            }
            let top = g.counts[a] - 1;
            let mut i = u.floor().to_usize()?;
            if i >= top {
                if u > lit::<T>(top as f64) + lit(1e-12) {
                    return None;
                }
                i = top - 1;
            }
            base[a] = i;
            frac[a] = (u - lit(i as f64)).max(T::zero()).min(T::one());
        }
        let corners = 1usize << g.dim;
        let mut acc = V::zero();
        for corner in 0..corners {
            let mut ijk = [0i64; 3];
            let mut w = T::one();
            for a in 0..g.dim {
                let up = corner & (1 << a) != 0;
                ijk[a] = (base[a] + usize::from(up)) as i64;
                w = w * if up { frac[a] } else { T::one() - frac[a] };
            }
            let node = g.active_at(ijk)?;
            acc = acc.add(self.values[node].scale(w));
        }
        Some(acc)
    }
}

impl<T: Real> QField<T> {
    /// The rotated configuration `(g . Q)(x) = g Q(g^{-1} x) g^T` on the same
    /// lattice. Only axis-aligned rotations of centred grids are supported.
    pub fn rotate_all(&self, g: &Rotation<T>) -> Result<Self> {
        let map = self.grid.rotation_map(g)?;
        let g_inv = g.inverse();
        let values = map.iter().map(|&src| self.values[src].rotate(g)).collect();
        let cut_values = (0..self.grid.cuts().len())
            .map(|c| {
                self.grid
                    .rotated_cut(&g_inv, &map, c)
                    .map(|src| self.cut_values[src].rotate(g))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid: self.grid.clone(),
            values,
            cut_values,
        })
    }
}

/// Evaluates `f` at every active node, in parallel for large grids. The
/// result does not depend on the thread count.
pub(crate) fn par_map_nodes<T: Real, V: Send>(
    grid: &Grid<T>,
    f: impl Fn(usize) -> V + Sync,
) -> Vec<V> {
    let n = grid.len();
    if n < 4096 {
        (0..n).map(f).collect()
    } else {
        (0..n).into_par_iter().map(&f).collect()
    }
}

/// Maps `f` over `items` in parallel, preserving order.
pub(crate) fn par_collect<I: Sync, V: Send>(items: &[I], f: impl Fn(&I) -> V + Sync) -> Vec<V> {
    items.par_iter().map(&f).collect()
}

/// Radial anchoring `s0 (x/|x| (x) x/|x| - I/3)` on every boundary node and
/// cut point of a disk or ball grid.
pub fn radial_bc<T: Real>(s0: T, grid: &Grid<T>) -> Result<BoundaryValues<T, QTensor<T>>> {
    if !grid.spec().is_curved() {
        return Err(invalid("radial anchoring needs a disk or ball domain"));
    }
    if !s0.is_finite() {
        return Err(invalid("s0 must be finite"));
    }
    let mut bc = BoundaryValues::from_fn(grid, |x| {
        let n = vec3::normalize(x).unwrap_or([T::zero(), T::zero(), T::one()]);
        QTensor::uniaxial_unchecked(s0, &n)
    });
    if s0 == T::zero() {
        let msg = "s0 = 0 gives isotropic anchoring; radial results assume s0 != 0".to_string();
        log::warn!("{msg}");
        bc.warnings.push(msg);
    }
    Ok(bc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(shape: Shape<f64>, h: f64) -> Arc<Grid<f64>> {
        Arc::new(Grid::build(DomainSpec::new(shape, h)).unwrap())
    }

    #[test]
    fn interval_counts() {
        let g = grid(Shape::Interval { length: 1.0 }, 0.25);
        assert_eq!(g.len(), 5);
        assert_eq!(g.interior_count(), 3);
        assert_eq!(g.class_of(0), NodeClass::Boundary);
        assert_eq!(g.class_of(4), NodeClass::Boundary);
    }

    #[test]
    fn disk_counts() {
        // Lattice points with x^2 + y^2 < 1 at h = 1/2: the centre, the four
        // axis points and the four diagonal points (0.5^2 + 0.5^2 < 1).
        let g = grid(Shape::Disk { radius: 1.0 }, 0.5);
        assert_eq!(g.interior_count(), 9);
        let boundary = (0..g.len())
            .filter(|&i| g.class_of(i) == NodeClass::Boundary)
            .count();
        assert_eq!(boundary, 4);
        // each diagonal node has two cut arms
        assert_eq!(g.cuts().len(), 8);
        for c in g.cuts() {
            let r = vec3::norm(&c.position);
            assert!((r - 1.0).abs() < 1e-14);
            assert!((c.theta - (0.75f64.sqrt() - 0.5) / 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn too_coarse_is_rejected() {
        assert!(Grid::build(DomainSpec::new(Shape::Ball { radius: 1.0 }, 2.0)).is_err());
        assert!(Grid::build(DomainSpec::new(Shape::Interval { length: 1.0 }, 0.5)).is_err());
        assert!(Grid::build(DomainSpec::new(Shape::Interval { length: 1.0 }, 0.3)).is_err());
        assert!(Grid::build(DomainSpec::new(Shape::Interval { length: 1.0 }, -0.1)).is_err());
    }

    #[test]
    fn constant_and_quadratic_laplacian() {
        let g = grid(Shape::Interval { length: 1.0 }, 0.1);
        let c = ScalarField::from_fn(g.clone(), |_| 3.5);
        assert!(c.laplacian().values().iter().all(|&v| v == 0.0));
        let q = ScalarField::from_fn(g.clone(), |x| x[0] * x[0]);
        let lap = q.laplacian();
        for i in g.interior() {
            assert!((lap.value(i) - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn shortley_weller_exact_on_quadratics() {
        let g = grid(Shape::Ball { radius: 1.0 }, 0.2);
        let f = ScalarField::from_fn(g.clone(), |x| {
            x[0] * x[0] + 2.0 * x[1] * x[2] - x[2] * x[2] + x[0]
        });
        let lap = f.laplacian();
        for i in g.interior() {
            assert!(lap.value(i).abs() < 1e-10, "node {i}: {}", lap.value(i));
        }
    }

    #[test]
    fn sine_refinement_is_second_order() {
        let err = |h: f64| {
            let g = grid(Shape::Interval { length: 1.0 }, h);
            let pi = std::f64::consts::PI;
            let f = ScalarField::from_fn(g.clone(), |x| (pi * x[0]).sin());
            let lap = f.laplacian();
            g.interior()
                .map(|i| (lap.value(i) + pi * pi * (pi * g.position(i)[0]).sin()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(1.0 / 16.0) / err(1.0 / 32.0);
        assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
    }

    #[test]
    fn harmonic_fill_reproduces_linear_data() {
        let g = grid(Shape::Rectangle { lx: 1.0, ly: 0.5 }, 0.0625);
        let exact = |x: &Vec3<f64>| 1.0 + 2.0 * x[0] - 3.0 * x[1];
        let mut f = ScalarField::zeros(g.clone());
        f.apply_boundary(&BoundaryValues::from_fn(&g, exact))
            .unwrap();
        f.fill_harmonic(2000);
        for i in g.interior() {
            assert!((f.value(i) - exact(&g.position(i))).abs() < 1e-9);
        }
    }

    #[test]
    fn radial_bc_axis_points() {
        let g = grid(Shape::Ball { radius: 1.0 }, 0.25);
        let bc = radial_bc(0.8, &g).unwrap();
        assert!(bc.warnings.is_empty());
        let ex = QTensor::uniaxial(0.8, &[1.0, 0.0, 0.0]).unwrap();
        let ez = QTensor::uniaxial(0.8, &[0.0, 0.0, 1.0]).unwrap();
        let mut seen = 0;
        for (i, q) in &bc.nodes {
            let p = g.position(*i);
            if (p[0] - 1.0).abs() < 1e-12 {
                assert!((*q - ex).norm() < 1e-15);
                seen += 1;
            }
            if (p[2] + 1.0).abs() < 1e-12 {
                assert!((*q - ez).norm() < 1e-15);
                seen += 1;
            }
        }
        assert_eq!(seen, 2);
        for q in bc.nodes.iter().map(|(_, q)| q).chain(&bc.cuts) {
            assert!(q.biaxiality() < 1e-12);
        }
        assert_eq!(radial_bc(0.0, &g).unwrap().warnings.len(), 1);
        let line = grid(Shape::Interval { length: 1.0 }, 0.25);
        assert!(radial_bc(1.0, &line).is_err());
    }

    #[test]
    fn interpolation_is_exact_on_multilinear_data() {
        let g = grid(Shape::Ball { radius: 1.0 }, 0.125);
        let f = ScalarField::from_fn(g.clone(), |x| {
            1.0 + x[0] - 2.0 * x[1] + 0.5 * x[2] + x[0] * x[1] * x[2]
        });
        let p = [0.1, -0.23, 0.31];
        let got = f.interpolate(&p).unwrap();
        assert!((got - (1.0 + 0.1 + 0.46 + 0.155 + 0.1 * -0.23 * 0.31)).abs() < 1e-14);
        assert!(f.interpolate(&[0.99, 0.5, 0.0]).is_none());
    }

    #[test]
    fn rotation_map_round_trip() {
        let g = grid(Shape::Ball { radius: 1.0 }, 0.25);
        let f = QField::from_fn(g.clone(), |x| {
            QTensor::from_coeffs([x[0], x[1] * x[2], 0.3, x[2], -x[0] * x[1]])
        });
        for r in Rotation::axis_aligned() {
            let back = f.rotate_all(&r).unwrap().rotate_all(&r.inverse()).unwrap();
            for (a, b) in back.values().iter().zip(f.values()) {
                assert!((*a - *b).norm() < 1e-14);
            }
            for (a, b) in back.cut_values().iter().zip(f.cut_values()) {
                assert!((*a - *b).norm() < 1e-14);
            }
        }
    }
}
