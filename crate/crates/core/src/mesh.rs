//! Structured triangulation with an embedded channel edge chain.
//!
//! The domain is split into `n × n` rectangular cells, each cut along the
//! diagonal from its lower-left to its upper-right corner. A channel is
//! embedded by snapping its polyline vertices to grid nodes and tracing the
//! grid edges between them, so the channel is always a chain of element
//! edges.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Domain2D, Point, VasculaturePath};
use crate::sparse::CsrMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum ElementOrder {
    Linear,
    Quadratic,
}

impl ElementOrder {
    pub fn degree(self) -> usize {
        match self {
            Self::Linear => 1,
            Self::Quadratic => 2,
        }
    }

    pub fn nodes_per_triangle(self) -> usize {
        match self {
            Self::Linear => 3,
            Self::Quadratic => 6,
        }
    }
}

impl TryFrom<u8> for ElementOrder {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Self::Linear),
            2 => Ok(Self::Quadratic),
            _ => Err(format!("element order must be 1 or 2, got {v}")),
        }
    }
}

impl From<ElementOrder> for u8 {
    fn from(o: ElementOrder) -> u8 {
        o.degree() as u8
    }
}

/// Uniform `(n+1)²`-node grid with `2n²` linear triangles.
#[derive(Clone, Debug, PartialEq)]
pub struct StructuredGrid {
    pub domain: Domain2D,
    pub n: usize,
    pub nodes: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
}

impl StructuredGrid {
    pub fn node_id(&self, i: usize, j: usize) -> usize {
        j * (self.n + 1) + i
    }

    pub fn spacing(&self) -> (f64, f64) {
        (self.domain.width / self.n as f64, self.domain.height / self.n as f64)
    }

    fn grid_index(&self, id: usize) -> (usize, usize) {
        (id % (self.n + 1), id / (self.n + 1))
    }
}

pub fn build_structured_mesh(domain: &Domain2D, n: usize) -> Result<StructuredGrid> {
    domain.validate()?;
    if n < 2 {
        return Err(Error::Mesh(format!("need at least 2 subdivisions, got {n}")));
    }
    let (dx, dy) = (domain.width / n as f64, domain.height / n as f64);
    let mut nodes = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            // exact endpoints avoid drift on the far boundary
            let x = if i == n { domain.width } else { i as f64 * dx };
            let y = if j == n { domain.height } else { j as f64 * dy };
            nodes.push([x, y]);
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    Ok(StructuredGrid {
        domain: *domain,
        n,
        nodes,
        triangles,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

/// Boundary condition on a boundary edge. Neumann fluxes are outward and
/// already multiplied by the thickness (W/m).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SideCondition {
    Neumann { flux: f64 },
    Dirichlet { temperature: f64 },
}

impl Default for SideCondition {
    fn default() -> Self {
        Self::Neumann { flux: 0.0 }
    }
}

impl SideCondition {
    pub fn is_dirichlet(&self) -> bool {
        matches!(self, Self::Dirichlet { .. })
    }
}

/// Per-side boundary conditions; the default is an adiabatic boundary.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundarySpec {
    pub bottom: SideCondition,
    pub right: SideCondition,
    pub top: SideCondition,
    pub left: SideCondition,
}

impl BoundarySpec {
    pub fn adiabatic() -> Self {
        Self::default()
    }

    pub fn all_dirichlet(temperature: f64) -> Self {
        let c = SideCondition::Dirichlet { temperature };
        Self {
            bottom: c,
            right: c,
            top: c,
            left: c,
        }
    }

    pub fn side(&self, side: Side) -> SideCondition {
        match side {
            Side::Bottom => self.bottom,
            Side::Right => self.right,
            Side::Top => self.top,
            Side::Left => self.left,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub mid: Option<usize>,
    pub side: Side,
    pub condition: SideCondition,
    pub length: f64,
}

impl BoundaryEdge {
    pub fn nodes(&self) -> impl Iterator<Item = usize> + '_ {
        [self.a, self.b].into_iter().chain(self.mid)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelEdge {
    pub a: usize,
    pub b: usize,
    pub mid: Option<usize>,
    pub tangent: Point,
    pub length: f64,
}

/// Discrete carrier of the vasculature, ordered inlet → outlet.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    pub edges: Vec<ChannelEdge>,
    pub inlet_node: usize,
    pub outlet_node: usize,
    /// Largest distance between a requested vertex and its snapped grid node.
    pub snap_error: f64,
    pub path: VasculaturePath,
}

impl Channel {
    pub fn arc_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    /// Same chain traversed outlet → inlet.
    pub fn reversed(&self) -> Self {
        let edges = self
            .edges
            .iter()
            .rev()
            .map(|e| ChannelEdge {
                a: e.b,
                b: e.a,
                mid: e.mid,
                tangent: [-e.tangent[0], -e.tangent[1]],
                length: e.length,
            })
            .collect();
        Self {
            edges,
            inlet_node: self.outlet_node,
            outlet_node: self.inlet_node,
            snap_error: self.snap_error,
            path: self.path.reversed(),
        }
    }

    /// Vertex nodes along the chain, inlet first.
    pub fn vertex_nodes(&self) -> Vec<usize> {
        let mut v = vec![self.inlet_node];
        v.extend(self.edges.iter().map(|e| e.b));
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeshStats {
    pub n_nodes: usize,
    pub n_triangles: usize,
    pub h_max: f64,
    pub total_area: f64,
}

#[derive(Clone, Debug)]
pub struct ChannelMesh {
    pub domain: Domain2D,
    pub n: usize,
    pub order: ElementOrder,
    nodes: Vec<Point>,
    vertex_count: usize,
    elements: Vec<usize>,
    boundary_edges: Vec<BoundaryEdge>,
    channel: Option<Channel>,
    pattern: CsrMatrix,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

fn point_dist(a: Point, b: Point) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

impl ChannelMesh {
    /// Mesh without vasculature.
    pub fn without_channel(grid: &StructuredGrid, order: ElementOrder) -> Self {
        let mut nodes = grid.nodes.clone();
        let vertex_count = nodes.len();
        let mut mids: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut elements = Vec::with_capacity(grid.triangles.len() * order.nodes_per_triangle());
        for t in &grid.triangles {
            elements.extend_from_slice(t);
            if order == ElementOrder::Quadratic {
                for (p, q) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                    let id = *mids.entry(edge_key(p, q)).or_insert_with(|| {
                        let (x, y) = (nodes[p], nodes[q]);
                        nodes.push([0.5 * (x[0] + y[0]), 0.5 * (x[1] + y[1])]);
                        nodes.len() - 1
                    });
                    elements.push(id);
                }
            }
        }
        let n = grid.n;
        let mut boundary_edges = Vec::with_capacity(4 * n);
        let mut push = |a: usize, b: usize, side: Side| {
            boundary_edges.push(BoundaryEdge {
                a,
                b,
                mid: mids.get(&edge_key(a, b)).copied(),
                side,
                condition: SideCondition::default(),
                length: point_dist(grid.nodes[a], grid.nodes[b]),
            })
        };
        for i in 0..n {
            push(grid.node_id(i, 0), grid.node_id(i + 1, 0), Side::Bottom);
        }
        for j in 0..n {
            push(grid.node_id(n, j), grid.node_id(n, j + 1), Side::Right);
        }
        for i in (0..n).rev() {
            push(grid.node_id(i + 1, n), grid.node_id(i, n), Side::Top);
        }
        for j in (0..n).rev() {
            push(grid.node_id(0, j + 1), grid.node_id(0, j), Side::Left);
        }
        let npe = order.nodes_per_triangle();
        let pattern = CsrMatrix::from_cliques(nodes.len(), elements.chunks(npe));
        Self {
            domain: grid.domain,
            n,
            order,
            nodes,
            vertex_count,
            elements,
            boundary_edges,
            channel: None,
            pattern,
        }
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Number of triangle-corner nodes; midside nodes follow them.
    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn n_triangles(&self) -> usize {
        self.elements.len() / self.order.nodes_per_triangle()
    }

    /// Node ids of triangle `e`: corners (CCW), then for quadratic order the
    /// midpoints of edges 0–1, 1–2, 2–0.
    pub fn element(&self, e: usize) -> &[usize] {
        let npe = self.order.nodes_per_triangle();
        &self.elements[e * npe..(e + 1) * npe]
    }

    pub fn elements(&self) -> impl Iterator<Item = &[usize]> {
        self.elements.chunks(self.order.nodes_per_triangle())
    }

    pub fn triangle_corners(&self, e: usize) -> [Point; 3] {
        let el = self.element(e);
        [self.nodes[el[0]], self.nodes[el[1]], self.nodes[el[2]]]
    }

    pub fn triangle_area(&self, e: usize) -> f64 {
        let [a, b, c] = self.triangle_corners(e);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn channel(&self) -> Option<&Channel> {
        self.channel.as_ref()
    }

    /// Empty matrix with the assembly sparsity pattern.
    pub fn pattern(&self) -> &CsrMatrix {
        &self.pattern
    }

    pub fn stats(&self) -> MeshStats {
        let (dx, dy) = (self.domain.width / self.n as f64, self.domain.height / self.n as f64);
        MeshStats {
            n_nodes: self.n_nodes(),
            n_triangles: self.n_triangles(),
            h_max: dx.hypot(dy),
            total_area: (0..self.n_triangles()).map(|e| self.triangle_area(e)).sum(),
        }
    }

    /// Boundary nodes (corners and midside) in ascending order.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.boundary_edges.iter().flat_map(|e| e.nodes()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Copy with the channel traversed in the opposite direction.
    pub fn with_reversed_channel(&self) -> Self {
        let mut m = self.clone();
        m.channel = self.channel.as_ref().map(Channel::reversed);
        m
    }

    /// Copy with the channel removed.
    pub fn without_vasculature(&self) -> Self {
        let mut m = self.clone();
        m.channel = None;
        m
    }

    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut s = String::from("node_id,x,y\n");
        for (i, p) in self.nodes.iter().enumerate() {
            writeln!(s, "{i},{:.12e},{:.12e}", p[0], p[1]).unwrap();
        }
        std::fs::write(dir.join("nodes.csv"), s)?;

        let npe = self.order.nodes_per_triangle();
        let mut s = String::from("triangle_id");
        for k in 0..npe {
            write!(s, ",n{k}").unwrap();
        }
        s.push('\n');
        for (e, el) in self.elements().enumerate() {
            write!(s, "{e}").unwrap();
            for id in el {
                write!(s, ",{id}").unwrap();
            }
            s.push('\n');
        }
        std::fs::write(dir.join("triangles.csv"), s)?;

        let mut s = String::from("edge_id,a,b,mid,side,tag,value\n");
        for (k, e) in self.boundary_edges.iter().enumerate() {
            let (tag, value) = match e.condition {
                SideCondition::Neumann { flux } => ("neumann", flux),
                SideCondition::Dirichlet { temperature } => ("dirichlet", temperature),
            };
            let mid = e.mid.map(|m| m.to_string()).unwrap_or_default();
            let side = serde_json::to_value(e.side).unwrap();
            writeln!(s, "{k},{},{},{mid},{},{tag},{value:.12e}", e.a, e.b, side.as_str().unwrap()).unwrap();
        }
        std::fs::write(dir.join("boundary.csv"), s)?;

        let mut s = String::from("node_id,s,tx,ty\n");
        if let Some(ch) = &self.channel {
            let mut arc = 0.0;
            for e in &ch.edges {
                writeln!(s, "{},{arc:.12e},{:.12e},{:.12e}", e.a, e.tangent[0], e.tangent[1]).unwrap();
                arc += e.length;
            }
            if let Some(last) = ch.edges.last() {
                writeln!(s, "{},{arc:.12e},{:.12e},{:.12e}", last.b, last.tangent[0], last.tangent[1]).unwrap();
            }
        }
        std::fs::write(dir.join("channel.csv"), s)?;
        Ok(())
    }
}

/// Snaps `path` onto `grid` and returns a mesh whose channel is the traced edge chain.
pub fn embed_vasculature(grid: &StructuredGrid, path: &VasculaturePath, order: ElementOrder) -> Result<ChannelMesh> {
    let mut mesh = ChannelMesh::without_channel(grid, order);
    let (dx, dy) = grid.spacing();
    let n = grid.n;
    let mut snap_error = 0.0f64;
    let mut snapped: Vec<(usize, usize)> = Vec::with_capacity(path.vertices().len());
    for p in path.vertices() {
        let i = (p[0] / dx).round();
        let j = (p[1] / dy).round();
        if i < 0.0 || j < 0.0 || i > n as f64 || j > n as f64 {
            return Err(Error::Mesh(format!("path vertex {p:?} lies outside the grid")));
        }
        let (i, j) = (i as usize, j as usize);
        snap_error = snap_error.max(point_dist(*p, grid.nodes[grid.node_id(i, j)]));
        snapped.push((i, j));
    }
    let mut chain = vec![grid.node_id(snapped[0].0, snapped[0].1)];
    for w in snapped.windows(2) {
        let ((i0, j0), (i1, j1)) = (w[0], w[1]);
        if (i0, j0) == (i1, j1) {
            return Err(Error::Mesh(format!(
                "consecutive path vertices snap to the same grid node ({i0}, {j0})"
            )));
        }
        if i0 != i1 && j0 != j1 {
            return Err(Error::Mesh(format!(
                "path segment ({i0}, {j0}) -> ({i1}, {j1}) is not aligned with the grid"
            )));
        }
        let steps = i0.abs_diff(i1) + j0.abs_diff(j1);
        for k in 1..=steps {
            let i = if i1 >= i0 { i0 + if i0 != i1 { k } else { 0 } } else { i0 - k };
            let j = if j1 >= j0 { j0 + if j0 != j1 { k } else { 0 } } else { j0 - k };
            chain.push(grid.node_id(i, j));
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    for &id in &chain {
        if !seen.insert(id) {
            return Err(Error::Mesh(format!("snapped path overlaps itself at node {id}")));
        }
    }
    for (label, id) in [("inlet", chain[0]), ("outlet", *chain.last().unwrap())] {
        let (i, j) = grid.grid_index(id);
        if !(i == 0 || j == 0 || i == n || j == n) {
            return Err(Error::Mesh(format!("snapped {label} node {id} is not on the domain boundary")));
        }
    }
    let mid_of = |a: usize, b: usize, mesh: &ChannelMesh| -> Option<usize> {
        if order == ElementOrder::Linear {
            return None;
        }
        let target = {
            let (p, q) = (mesh.nodes[a], mesh.nodes[b]);
            [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
        };
        // midside nodes of edge a-b are shared by elements containing both ends
        mesh.elements()
            .find(|el| el[..3].contains(&a) && el[..3].contains(&b))
            .and_then(|el| el[3..].iter().copied().find(|&m| point_dist(mesh.nodes[m], target) < 1e-12 * (dx + dy)))
    };
    let mut edges = Vec::with_capacity(chain.len() - 1);
    for w in chain.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (pa, pb) = (grid.nodes[a], grid.nodes[b]);
        let length = point_dist(pa, pb);
        edges.push(ChannelEdge {
            a,
            b,
            mid: mid_of(a, b, &mesh),
            tangent: [(pb[0] - pa[0]) / length, (pb[1] - pa[1]) / length],
            length,
        });
    }
    let snapped_vertices: Vec<Point> = snapped.iter().map(|&(i, j)| grid.nodes[grid.node_id(i, j)]).collect();
    let snapped_path = VasculaturePath::new(snapped_vertices)?;
    mesh.channel = Some(Channel {
        inlet_node: chain[0],
        outlet_node: *chain.last().unwrap(),
        edges,
        snap_error,
        path: snapped_path,
    });
    Ok(mesh)
}

/// Assigns conditions side by side.
pub fn tag_boundary(mesh: &ChannelMesh, spec: &BoundarySpec) -> ChannelMesh {
    let mut m = mesh.clone();
    for e in &mut m.boundary_edges {
        e.condition = spec.side(e.side);
    }
    m
}

/// Assigns one condition per boundary edge, in [`ChannelMesh::boundary_edges`] order.
pub fn tag_boundary_edges(mesh: &ChannelMesh, conditions: &[SideCondition]) -> Result<ChannelMesh> {
    if conditions.len() != mesh.boundary_edges.len() {
        return Err(Error::Mesh(format!(
            "{} boundary conditions supplied for {} boundary edges",
            conditions.len(),
            mesh.boundary_edges.len()
        )));
    }
    let mut m = mesh.clone();
    for (e, c) in m.boundary_edges.iter_mut().zip(conditions) {
        e.condition = *c;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_layout, LayoutKind, LayoutParams};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid(n: usize) -> StructuredGrid {
        build_structured_mesh(&Domain2D::default(), n).unwrap()
    }

    #[test]
    fn small_grid_counts() {
        let g = grid(2);
        assert_eq!(g.nodes.len(), 9);
        assert_eq!(g.triangles.len(), 8);
        let m = ChannelMesh::without_channel(&g, ElementOrder::Linear);
        let st = m.stats();
        assert_relative_eq!(st.total_area, 0.01, max_relative = 1e-12);
        assert_relative_eq!(st.h_max, 0.05 * 2f64.sqrt(), max_relative = 1e-12);
        assert!(build_structured_mesh(&Domain2D::default(), 1).is_err());
    }

    #[test]
    fn triangles_are_ccw() {
        for order in [ElementOrder::Linear, ElementOrder::Quadratic] {
            let m = ChannelMesh::without_channel(&grid(5), order);
            assert!((0..m.n_triangles()).all(|e| m.triangle_area(e) > 0.0));
        }
    }

    #[test]
    fn quadratic_midside_nodes_are_shared() {
        let n = 4;
        let m = ChannelMesh::without_channel(&grid(n), ElementOrder::Quadratic);
        let edges = 3 * n * n + 2 * n; // horizontal + vertical + diagonal
        assert_eq!(m.n_nodes(), (n + 1) * (n + 1) + edges);
        assert_eq!(m.n_nodes(), (2 * n + 1) * (2 * n + 1));
        let mut uses = vec![0usize; m.n_nodes()];
        for el in m.elements() {
            for &id in &el[3..] {
                uses[id] += 1;
            }
        }
        let interior_shared = uses[m.vertex_count()..].iter().filter(|&&u| u == 2).count();
        assert_eq!(interior_shared, edges - 4 * n);
        assert!(m.boundary_edges().iter().all(|e| e.mid.is_some()));
    }

    #[test]
    fn straight_channel_edge_count() {
        let g = grid(10);
        let p = VasculaturePath::new(vec![[0.05, 0.1], [0.05, 0.0]]).unwrap();
        let m = embed_vasculature(&g, &p, ElementOrder::Linear).unwrap();
        let ch = m.channel().unwrap();
        assert_eq!(ch.edges.len(), 10);
        assert_eq!(ch.inlet_node, g.node_id(5, 10));
        assert_eq!(ch.outlet_node, g.node_id(5, 0));
        assert_relative_eq!(ch.arc_length(), 0.1, max_relative = 1e-12);
    }

    #[test]
    fn u_shape_snaps_exactly_at_5mm() {
        let d = Domain2D::default();
        let p = generate_layout(&d, &LayoutParams::u_shape()).unwrap();
        let m = embed_vasculature(&grid(20), &p, ElementOrder::Linear).unwrap();
        let ch = m.channel().unwrap();
        assert!(ch.snap_error < 1e-12);
        assert_relative_eq!(ch.arc_length(), 0.19, max_relative = 1e-12);
        assert_eq!(ch.edges.len(), 38);
    }

    #[test]
    fn snapping_error_bounded_by_half_cell() {
        let g = grid(10);
        let p = VasculaturePath::new(vec![[0.033, 0.1], [0.033, 0.042], [0.071, 0.042], [0.071, 0.1]]).unwrap();
        let m = embed_vasculature(&g, &p, ElementOrder::Linear).unwrap();
        let ch = m.channel().unwrap();
        let h = 0.01;
        assert!(ch.snap_error <= 0.5 * h * 2f64.sqrt());
        assert_relative_eq!(ch.arc_length(), ch.path.arc_length(), max_relative = 1e-12);
    }

    #[test]
    fn embed_rejects_bad_paths() {
        let g = grid(10);
        let interior = VasculaturePath::new(vec![[0.05, 0.1], [0.05, 0.05]]).unwrap();
        assert!(embed_vasculature(&g, &interior, ElementOrder::Linear).is_err());
        let diagonal = VasculaturePath::new(vec![[0.0, 0.0], [0.1, 0.1]]).unwrap();
        assert!(embed_vasculature(&g, &diagonal, ElementOrder::Linear).is_err());
        let collapsing = VasculaturePath::new(vec![[0.05, 0.1], [0.051, 0.1], [0.051, 0.0]]).unwrap();
        assert!(embed_vasculature(&g, &collapsing, ElementOrder::Linear).is_err());
    }

    #[test]
    fn reversal_matches_embedding_reversed_path() {
        let d = Domain2D::default();
        for order in [ElementOrder::Linear, ElementOrder::Quadratic] {
            let p = generate_layout(&d, &LayoutParams::asymmetric()).unwrap();
            let fwd = embed_vasculature(&grid(20), &p, order).unwrap();
            let rev = embed_vasculature(&grid(20), &p.reversed(), order).unwrap();
            assert_eq!(fwd.with_reversed_channel().channel(), rev.channel());
            let (f, r) = (fwd.channel().unwrap(), rev.channel().unwrap());
            assert_eq!(f.inlet_node, r.outlet_node);
            assert_eq!(f.edges[0].tangent, [-r.edges.last().unwrap().tangent[0], -r.edges.last().unwrap().tangent[1]]);
        }
    }

    #[test]
    fn boundary_tagging() {
        let m = ChannelMesh::without_channel(&grid(4), ElementOrder::Linear);
        assert!(m.boundary_edges().iter().all(|e| e.condition == SideCondition::Neumann { flux: 0.0 }));
        let spec = BoundarySpec {
            left: SideCondition::Dirichlet { temperature: 300.0 },
            ..BoundarySpec::default()
        };
        let t = tag_boundary(&m, &spec);
        let dir = t.boundary_edges().iter().filter(|e| e.condition.is_dirichlet()).count();
        let neu = t.boundary_edges().iter().filter(|e| !e.condition.is_dirichlet()).count();
        assert_eq!(dir, 4);
        assert_eq!(dir + neu, 16);
        assert!(t.boundary_edges().iter().filter(|e| e.condition.is_dirichlet()).all(|e| e.side == Side::Left));
        assert!(tag_boundary_edges(&m, &[SideCondition::default(); 3]).is_err());
        assert!(tag_boundary_edges(&m, &[SideCondition::default(); 16]).is_ok());
    }

    #[test]
    fn boundary_covers_perimeter_once() {
        let m = ChannelMesh::without_channel(&grid(6), ElementOrder::Linear);
        let total: f64 = m.boundary_edges().iter().map(|e| e.length).sum();
        assert_relative_eq!(total, 0.4, max_relative = 1e-12);
        let mut keys: Vec<_> = m.boundary_edges().iter().map(|e| edge_key(e.a, e.b)).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), 24);
    }

    #[test]
    fn csv_export() {
        let d = Domain2D::default();
        let p = generate_layout(&d, &LayoutParams::u_shape()).unwrap();
        let m = embed_vasculature(&grid(20), &p, ElementOrder::Linear).unwrap();
        let dir = tempfile::tempdir().unwrap();
        m.write_csv(dir.path()).unwrap();
        let nodes = std::fs::read_to_string(dir.path().join("nodes.csv")).unwrap();
        assert_eq!(nodes.lines().count(), m.n_nodes() + 1);
        let chan = std::fs::read_to_string(dir.path().join("channel.csv")).unwrap();
        assert_eq!(chan.lines().count(), 38 + 2);
    }

    proptest! {
        #[test]
        fn area_and_channel_length_invariants(n in 2usize..30, kind in 0usize..3, quad in proptest::bool::ANY) {
            let d = Domain2D::default();
            let order = if quad { ElementOrder::Quadratic } else { ElementOrder::Linear };
            let g = build_structured_mesh(&d, n).unwrap();
            let m = ChannelMesh::without_channel(&g, order);
            prop_assert!((m.stats().total_area - d.area()).abs() <= 1e-12 * d.area());
            let p = generate_layout(&d, &LayoutParams::for_kind(LayoutKind::ALL[kind])).unwrap();
            if let Ok(cm) = embed_vasculature(&g, &p, order) {
                let ch = cm.channel().unwrap();
                prop_assert!((ch.arc_length() - ch.path.arc_length()).abs() <= 1e-12);
                let v = ch.vertex_nodes();
                prop_assert_eq!(v[0], ch.inlet_node);
                prop_assert_eq!(*v.last().unwrap(), ch.outlet_node);
                for w in ch.edges.windows(2) {
                    prop_assert_eq!(w[0].b, w[1].a);
                }
                if quad {
                    prop_assert!(ch.edges.iter().all(|e| e.mid.is_some()));
                }
            }
        }
    }
}
