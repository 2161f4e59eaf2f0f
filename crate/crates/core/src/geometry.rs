//! Domain and vasculature geometry.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

const GEOM_EPS: f64 = 1e-12;

/// Rectangular mid-surface `[0, width] × [0, height]` of a plate of given thickness.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain2D {
    pub width: f64,
    pub height: f64,
    pub thickness: f64,
}

impl Default for Domain2D {
    fn default() -> Self {
        Self {
            width: 0.1,
            height: 0.1,
            thickness: 0.005,
        }
    }
}

impl Domain2D {
    pub fn new(width: f64, height: f64, thickness: f64) -> Result<Self> {
        let d = Self {
            width,
            height,
            thickness,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if [self.width, self.height, self.thickness]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0)
        {
            Ok(())
        } else {
            Err(Error::Geometry(format!("domain dimensions must be positive: {self:?}")))
        }
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    fn tol(&self) -> f64 {
        GEOM_EPS * self.width.max(self.height)
    }

    pub fn on_boundary(&self, p: Point) -> bool {
        let t = self.tol();
        self.contains(p)
            && (p[0].abs() <= t
                || (p[0] - self.width).abs() <= t
                || p[1].abs() <= t
                || (p[1] - self.height).abs() <= t)
    }

    pub fn contains(&self, p: Point) -> bool {
        let t = self.tol();
        p[0] >= -t && p[0] <= self.width + t && p[1] >= -t && p[1] <= self.height + t
    }
}

/// Polyline carrying the coolant; the first vertex is the inlet (`s = 0`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VasculaturePath {
    vertices: Vec<Point>,
}

fn dist(a: Point, b: Point) -> f64 {
    ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn on_segment(p: Point, a: Point, b: Point, tol: f64) -> bool {
    cross(a, b, p).abs() <= tol * dist(a, b).max(tol)
        && p[0] >= a[0].min(b[0]) - tol
        && p[0] <= a[0].max(b[0]) + tol
        && p[1] >= a[1].min(b[1]) - tol
        && p[1] <= a[1].max(b[1]) + tol
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point, tol: f64) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > tol && d2 < -tol) || (d1 < -tol && d2 > tol)) && ((d3 > tol && d4 < -tol) || (d3 < -tol && d4 > tol)) {
        return true;
    }
    on_segment(a, c, d, tol) || on_segment(b, c, d, tol) || on_segment(c, a, b, tol) || on_segment(d, a, b, tol)
}

impl VasculaturePath {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::Geometry("a vasculature path needs at least two vertices".into()));
        }
        if vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Geometry("vasculature vertices must be finite".into()));
        }
        let scale = vertices
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1e-300);
        let tol = GEOM_EPS * scale;
        for w in vertices.windows(2) {
            if dist(w[0], w[1]) <= tol {
                return Err(Error::Geometry(format!("consecutive vertices coincide at {:?}", w[0])));
            }
        }
        let m = vertices.len() - 1;
        for i in 0..m {
            // adjacent segments may only share their common vertex
            if i + 1 < m {
                let (a, b, c) = (vertices[i], vertices[i + 1], vertices[i + 2]);
                let ab = [b[0] - a[0], b[1] - a[1]];
                let bc = [c[0] - b[0], c[1] - b[1]];
                if cross(a, b, c).abs() <= tol * dist(a, b).max(dist(b, c)) && ab[0] * bc[0] + ab[1] * bc[1] < 0.0 {
                    return Err(Error::Geometry(format!("path doubles back at {b:?}")));
                }
            }
            for j in (i + 2)..m {
                if segments_intersect(vertices[i], vertices[i + 1], vertices[j], vertices[j + 1], tol) {
                    return Err(Error::Geometry(format!("path self-intersects (segments {i} and {j})")));
                }
            }
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn inlet(&self) -> Point {
        self.vertices[0]
    }

    pub fn outlet(&self) -> Point {
        *self.vertices.last().unwrap()
    }

    /// Checks that the path lies in the domain with inlet and outlet on its boundary.
    pub fn validate_in(&self, domain: &Domain2D) -> Result<()> {
        if let Some(p) = self.vertices.iter().find(|p| !domain.contains(**p)) {
            return Err(Error::Geometry(format!("vertex {p:?} lies outside the domain")));
        }
        for (label, p) in [("inlet", self.inlet()), ("outlet", self.outlet())] {
            if !domain.on_boundary(p) {
                return Err(Error::Geometry(format!("{label} {p:?} is not on the domain boundary")));
            }
        }
        Ok(())
    }

    pub fn arc_length(&self) -> f64 {
        self.vertices.windows(2).map(|w| dist(w[0], w[1])).sum()
    }

    /// Point and unit tangent at arc length `s`; interior vertices take the downstream segment.
    pub fn point_and_tangent_at(&self, s: f64) -> Result<(Point, Point)> {
        let total = self.arc_length();
        let tol = GEOM_EPS * total.max(1.0);
        if !(s >= -tol && s <= total + tol) {
            return Err(Error::Geometry(format!("arc length {s} outside [0, {total}]")));
        }
        let mut start = 0.0;
        let last = self.vertices.len() - 2;
        for (k, w) in self.vertices.windows(2).enumerate() {
            let len = dist(w[0], w[1]);
            if s < start + len || k == last {
                let xi = ((s - start) / len).clamp(0.0, 1.0);
                let t = [(w[1][0] - w[0][0]) / len, (w[1][1] - w[0][1]) / len];
                let p = [w[0][0] + xi * (w[1][0] - w[0][0]), w[0][1] + xi * (w[1][1] - w[0][1])];
                return Ok((p, t));
            }
            start += len;
        }
        unreachable!("path has at least one segment")
    }

    /// Same curve traversed outlet → inlet (flow reversal).
    pub fn reversed(&self) -> Self {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        Self { vertices }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutKind {
    UShape,
    Serpentine,
    Asymmetric,
}

impl LayoutKind {
    pub const ALL: [LayoutKind; 3] = [Self::UShape, Self::Serpentine, Self::Asymmetric];

    pub fn name(self) -> &'static str {
        match self {
            Self::UShape => "u_shape",
            Self::Serpentine => "serpentine",
            Self::Asymmetric => "asymmetric",
        }
    }
}

impl std::str::FromStr for LayoutKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s || k.name().replace('_', "-") == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown layout `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InletEdge {
    Top,
    Bottom,
}

/// Parameters of the generated channel layouts.
///
/// The layouts are vertical passes entering from `inlet_edge`:
/// * `u_shape`: two legs at the centerline ± `spacing/2` joined at `bottom_margin`
///   from the far edge;
/// * `asymmetric`: the same U with legs at centerline − `left_offset` and
///   centerline + `right_offset`;
/// * `serpentine`: `pass_count` passes `spacing` apart, alternately turning at
///   `bottom_margin` and `turn_margin`; the last pass runs out to the boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayoutParams {
    pub kind: LayoutKind,
    pub spacing: f64,
    pub bottom_margin: f64,
    pub turn_margin: f64,
    pub pass_count: usize,
    pub left_offset: f64,
    pub right_offset: f64,
    pub inlet_edge: InletEdge,
}

impl Default for LayoutParams {
    fn default() -> Self {
        Self::u_shape()
    }
}

impl LayoutParams {
    pub fn u_shape() -> Self {
        Self {
            kind: LayoutKind::UShape,
            spacing: 0.03,
            bottom_margin: 0.02,
            turn_margin: 0.02,
            pass_count: 2,
            left_offset: 0.015,
            right_offset: 0.015,
            inlet_edge: InletEdge::Top,
        }
    }

    pub fn serpentine() -> Self {
        Self {
            kind: LayoutKind::Serpentine,
            spacing: 0.01,
            pass_count: 6,
            ..Self::u_shape()
        }
    }

    pub fn asymmetric() -> Self {
        Self {
            kind: LayoutKind::Asymmetric,
            left_offset: 0.03,
            right_offset: 0.01,
            ..Self::u_shape()
        }
    }

    pub fn for_kind(kind: LayoutKind) -> Self {
        match kind {
            LayoutKind::UShape => Self::u_shape(),
            LayoutKind::Serpentine => Self::serpentine(),
            LayoutKind::Asymmetric => Self::asymmetric(),
        }
    }
}

/// Builds the axis-aligned channel polyline for `params`.
pub fn generate_layout(domain: &Domain2D, params: &LayoutParams) -> Result<VasculaturePath> {
    domain.validate()?;
    let (w, h) = (domain.width, domain.height);
    let cx = 0.5 * w;
    let yb = params.bottom_margin;
    let yt = h - params.turn_margin;
    if !(yb > 0.0 && yb < h) {
        return Err(Error::Geometry(format!("bottom margin {yb} leaves no room in height {h}")));
    }
    // vertices in "inlet at top" orientation
    let mut verts: Vec<Point> = match params.kind {
        LayoutKind::UShape | LayoutKind::Asymmetric => {
            let (dl, dr) = match params.kind {
                LayoutKind::UShape => (0.5 * params.spacing, 0.5 * params.spacing),
                _ => (params.left_offset, params.right_offset),
            };
            if !(dl + dr > 0.0) {
                return Err(Error::Geometry("U legs must be separated".into()));
            }
            let (xl, xr) = (cx - dl, cx + dr);
            vec![[xl, h], [xl, yb], [xr, yb], [xr, h]]
        }
        LayoutKind::Serpentine => {
            let p = params.pass_count;
            if p == 0 {
                return Err(Error::Geometry("serpentine needs at least one pass".into()));
            }
            if p > 1 && !(params.spacing > 0.0) {
                return Err(Error::Geometry("serpentine spacing must be positive".into()));
            }
            if p > 2 && !(yt > yb) {
                return Err(Error::Geometry("serpentine turn margins overlap".into()));
            }
            let x = |i: usize| cx + (i as f64 - 0.5 * (p as f64 - 1.0)) * params.spacing;
            if p == 1 {
                vec![[x(0), h], [x(0), 0.0]]
            } else {
                let mut v = vec![[x(0), h]];
                for i in 0..p {
                    let down = i % 2 == 0;
                    let y_end = match (down, i + 1 == p) {
                        (true, false) => yb,
                        (false, false) => yt,
                        (true, true) => 0.0,
                        (false, true) => h,
                    };
                    if i > 0 {
                        // link from the previous pass end
                        let prev_y = v.last().unwrap()[1];
                        v.push([x(i), prev_y]);
                    }
                    v.push([x(i), y_end]);
                }
                v
            }
        }
    };
    if params.inlet_edge == InletEdge::Bottom {
        for v in &mut verts {
            v[1] = h - v[1];
        }
    }
    for v in &verts {
        if !(v[0] > 0.0 && v[0] < w) {
            return Err(Error::Geometry(format!(
                "layout vertex {v:?} violates the lateral margin of domain {w} x {h}"
            )));
        }
    }
    let path = VasculaturePath::new(verts)?;
    path.validate_in(domain)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn u_example() -> VasculaturePath {
        generate_layout(&Domain2D::default(), &LayoutParams::u_shape()).unwrap()
    }

    #[test]
    fn u_shape_matches_closed_form() {
        let p = u_example();
        assert_eq!(p.vertices().len(), 4);
        assert_relative_eq!(p.vertices()[0][0], 0.035, epsilon = 1e-15);
        assert_relative_eq!(p.vertices()[2][0], 0.065, epsilon = 1e-15);
        assert_relative_eq!(p.arc_length(), 0.19, epsilon = 1e-14);
        assert_relative_eq!(p.inlet()[1], 0.1);
        assert_relative_eq!(p.outlet()[1], 0.1);
    }

    #[test]
    fn serpentine_single_pass_is_straight() {
        let params = LayoutParams {
            pass_count: 1,
            ..LayoutParams::serpentine()
        };
        let p = generate_layout(&Domain2D::default(), &params).unwrap();
        assert_eq!(p.vertices(), &[[0.05, 0.1], [0.05, 0.0]]);
    }

    #[test]
    fn serpentine_default_shape() {
        let p = generate_layout(&Domain2D::default(), &LayoutParams::serpentine()).unwrap();
        assert_relative_eq!(p.inlet()[0], 0.025, epsilon = 1e-15);
        assert_relative_eq!(p.outlet()[0], 0.075, epsilon = 1e-15);
        assert_eq!(p.outlet()[1], 0.1);
        // 6 passes: first and last 0.08 long, four interior 0.06, five links of 0.01
        assert_relative_eq!(p.arc_length(), 2.0 * 0.08 + 4.0 * 0.06 + 5.0 * 0.01, epsilon = 1e-14);
    }

    #[test]
    fn asymmetric_with_equal_offsets_is_u_shape() {
        let params = LayoutParams {
            left_offset: 0.015,
            right_offset: 0.015,
            ..LayoutParams::asymmetric()
        };
        let a = generate_layout(&Domain2D::default(), &params).unwrap();
        assert_eq!(a, u_example());
    }

    #[test]
    fn layout_outside_domain_rejected() {
        let params = LayoutParams {
            spacing: 0.2,
            ..LayoutParams::u_shape()
        };
        assert!(generate_layout(&Domain2D::default(), &params).is_err());
        let params = LayoutParams {
            bottom_margin: 0.2,
            ..LayoutParams::u_shape()
        };
        assert!(generate_layout(&Domain2D::default(), &params).is_err());
    }

    #[test]
    fn bottom_inlet_mirrors() {
        let params = LayoutParams {
            inlet_edge: InletEdge::Bottom,
            ..LayoutParams::u_shape()
        };
        let p = generate_layout(&Domain2D::default(), &params).unwrap();
        assert_eq!(p.inlet()[1], 0.0);
        assert_relative_eq!(p.vertices()[1][1], 0.08, epsilon = 1e-15);
    }

    #[test]
    fn arc_length_and_tangents() {
        let p = VasculaturePath::new(vec![[0.0, 0.0], [0.0, 0.1]]).unwrap();
        assert_relative_eq!(p.arc_length(), 0.1);
        let with_mid = VasculaturePath::new(vec![[0.0, 0.0], [0.0, 0.04], [0.0, 0.1]]).unwrap();
        assert_relative_eq!(with_mid.arc_length(), 0.1);

        let u = u_example();
        let (p0, t0) = u.point_and_tangent_at(0.0).unwrap();
        assert_eq!(p0, u.inlet());
        assert_relative_eq!(t0[1], -1.0);
        let (pl, _) = u.point_and_tangent_at(u.arc_length()).unwrap();
        assert_relative_eq!(pl[0], u.outlet()[0], epsilon = 1e-15);
        assert_relative_eq!(pl[1], u.outlet()[1], epsilon = 1e-15);
        // corner at s = 0.08 takes the downstream direction
        let (_, tc) = u.point_and_tangent_at(0.08).unwrap();
        assert_relative_eq!(tc[0], 1.0);
        assert!(u.point_and_tangent_at(0.2).is_err());
        assert!(u.point_and_tangent_at(-0.01).is_err());
    }

    #[test]
    fn invalid_paths_rejected() {
        assert!(VasculaturePath::new(vec![[0.0, 0.0]]).is_err());
        assert!(VasculaturePath::new(vec![[0.0, 0.0], [0.0, 0.0]]).is_err());
        assert!(VasculaturePath::new(vec![[0.0, 0.0], [0.0, 1.0], [0.0, 0.5]]).is_err());
        let crossing = vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(VasculaturePath::new(crossing).is_err());
        let interior = VasculaturePath::new(vec![[0.02, 0.02], [0.05, 0.02]]).unwrap();
        assert!(interior.validate_in(&Domain2D::default()).is_err());
    }

    proptest! {
        #[test]
        fn tangent_unit_and_reversal(kind in 0usize..3, frac in 0.0f64..1.0) {
            let p = generate_layout(&Domain2D::default(), &LayoutParams::for_kind(LayoutKind::ALL[kind])).unwrap();
            let l = p.arc_length();
            let s = frac * l;
            let (x, t) = p.point_and_tangent_at(s).unwrap();
            prop_assert!((t[0].hypot(t[1]) - 1.0).abs() < 1e-14);
            let r = p.reversed();
            prop_assert!((r.arc_length() - l).abs() < 1e-14);
            let (xr, tr) = r.point_and_tangent_at(l - s).unwrap();
            prop_assert!((x[0] - xr[0]).abs() < 1e-12 && (x[1] - xr[1]).abs() < 1e-12);
            // away from corners the reversed tangent is the negation
            let on_corner = p.vertices().iter().any(|v| (v[0] - x[0]).abs() < 1e-9 && (v[1] - x[1]).abs() < 1e-9);
            if !on_corner {
                prop_assert!((t[0] + tr[0]).abs() < 1e-12 && (t[1] + tr[1]).abs() < 1e-12);
            }
        }

        #[test]
        fn layouts_are_pure(kind in 0usize..3) {
            let params = LayoutParams::for_kind(LayoutKind::ALL[kind]);
            let a = generate_layout(&Domain2D::default(), &params).unwrap();
            let b = generate_layout(&Domain2D::default(), &params).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
