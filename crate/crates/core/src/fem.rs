//! Lagrange shape functions and quadrature on the reference triangle and segment.

use crate::geometry::Point;
use crate::mesh::ElementOrder;

/// Quadrature point on the reference triangle `{ξ, η ≥ 0, ξ + η ≤ 1}`;
/// weights sum to the reference area ½.
#[derive(Clone, Copy, Debug)]
pub struct QuadPoint {
    pub xi: f64,
    pub eta: f64,
    pub weight: f64,
}

const fn qp(xi: f64, eta: f64, weight: f64) -> QuadPoint {
    QuadPoint { xi, eta, weight }
}

/// Degree-2 rule, 3 points.
pub const TRI_RULE_3: [QuadPoint; 3] = [
    qp(1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0),
    qp(2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0),
    qp(1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0),
];

const A6: f64 = 0.445_948_490_915_965;
const B6: f64 = 0.091_576_213_509_771;
const WA6: f64 = 0.223_381_589_678_011 / 2.0;
const WB6: f64 = 0.109_951_743_655_322 / 2.0;

/// Degree-4 rule, 6 points.
pub const TRI_RULE_6: [QuadPoint; 6] = [
    qp(A6, A6, WA6),
    qp(1.0 - 2.0 * A6, A6, WA6),
    qp(A6, 1.0 - 2.0 * A6, WA6),
    qp(B6, B6, WB6),
    qp(1.0 - 2.0 * B6, B6, WB6),
    qp(B6, 1.0 - 2.0 * B6, WB6),
];

pub fn triangle_rule(order: ElementOrder) -> &'static [QuadPoint] {
    match order {
        ElementOrder::Linear => &TRI_RULE_3,
        ElementOrder::Quadratic => &TRI_RULE_6,
    }
}

/// Gauss–Legendre points on `[0, 1]` as `(ζ, weight)`.
pub fn segment_rule(points: usize) -> &'static [(f64, f64)] {
    const G1: [(f64, f64); 1] = [(0.5, 1.0)];
    const R: f64 = 0.288_675_134_594_812_9; // 1/(2√3)
    const G2: [(f64, f64); 2] = [(0.5 - R, 0.5), (0.5 + R, 0.5)];
    const S: f64 = 0.387_298_334_620_741_7; // √(3/5)/2
    const G3: [(f64, f64); 3] = [(0.5 - S, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + S, 5.0 / 18.0)];
    match points {
        1 => &G1,
        2 => &G2,
        _ => &G3,
    }
}

/// Shape function values and reference gradients at `(ξ, η)`, in element node order.
pub fn triangle_shape(order: ElementOrder, xi: f64, eta: f64) -> (Vec<f64>, Vec<[f64; 2]>) {
    let l0 = 1.0 - xi - eta;
    let (l1, l2) = (xi, eta);
    match order {
        ElementOrder::Linear => (vec![l0, l1, l2], vec![[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]),
        ElementOrder::Quadratic => {
            let phi = vec![
                l0 * (2.0 * l0 - 1.0),
                l1 * (2.0 * l1 - 1.0),
                l2 * (2.0 * l2 - 1.0),
                4.0 * l0 * l1,
                4.0 * l1 * l2,
                4.0 * l2 * l0,
            ];
            // dL0 = (-1,-1), dL1 = (1,0), dL2 = (0,1)
            let g0 = 4.0 * l0 - 1.0;
            let grad = vec![
                [-g0, -g0],
                [4.0 * l1 - 1.0, 0.0],
                [0.0, 4.0 * l2 - 1.0],
                [4.0 * (l0 - l1), -4.0 * l1],
                [4.0 * l2, 4.0 * l1],
                [-4.0 * l2, 4.0 * (l0 - l2)],
            ];
            (phi, grad)
        }
    }
}

/// 1D Lagrange basis on `[0, 1]`, ordered `(a, b, mid)`, with derivatives in ζ.
pub fn segment_shape(order: ElementOrder, zeta: f64) -> (Vec<f64>, Vec<f64>) {
    match order {
        ElementOrder::Linear => (vec![1.0 - zeta, zeta], vec![-1.0, 1.0]),
        ElementOrder::Quadratic => (
            vec![
                (1.0 - zeta) * (1.0 - 2.0 * zeta),
                zeta * (2.0 * zeta - 1.0),
                4.0 * zeta * (1.0 - zeta),
            ],
            vec![4.0 * zeta - 3.0, 4.0 * zeta - 1.0, 4.0 - 8.0 * zeta],
        ),
    }
}

/// Tabulated basis at the quadrature points of one element type.
#[derive(Clone, Debug)]
pub struct ReferenceTable {
    pub points: Vec<QuadPoint>,
    pub phi: Vec<Vec<f64>>,
    pub dphi: Vec<Vec<[f64; 2]>>,
}

impl ReferenceTable {
    pub fn new(order: ElementOrder, rule: &[QuadPoint]) -> Self {
        let mut phi = Vec::with_capacity(rule.len());
        let mut dphi = Vec::with_capacity(rule.len());
        for q in rule {
            let (p, d) = triangle_shape(order, q.xi, q.eta);
            phi.push(p);
            dphi.push(d);
        }
        Self {
            points: rule.to_vec(),
            phi,
            dphi,
        }
    }

    pub fn for_order(order: ElementOrder) -> Self {
        Self::new(order, triangle_rule(order))
    }
}

/// Affine map of a triangle: `x = x0 + J (ξ, η)`.
#[derive(Clone, Copy, Debug)]
pub struct AffineMap {
    pub origin: Point,
    pub jac: [[f64; 2]; 2],
    pub det: f64,
    /// J⁻ᵀ, maps reference gradients to physical ones.
    pub inv_t: [[f64; 2]; 2],
}

impl AffineMap {
    pub fn new(corners: [Point; 3]) -> Self {
        let [a, b, c] = corners;
        let jac = [[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv_t = [[jac[1][1] / det, -jac[1][0] / det], [-jac[0][1] / det, jac[0][0] / det]];
        Self {
            origin: a,
            jac,
            det,
            inv_t,
        }
    }

    pub fn point(&self, xi: f64, eta: f64) -> Point {
        [
            self.origin[0] + self.jac[0][0] * xi + self.jac[0][1] * eta,
            self.origin[1] + self.jac[1][0] * xi + self.jac[1][1] * eta,
        ]
    }

    pub fn gradient(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.inv_t[0][0] * g[0] + self.inv_t[0][1] * g[1],
            self.inv_t[1][0] * g[0] + self.inv_t[1][1] * g[1],
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn integrate(rule: &[QuadPoint], f: impl Fn(f64, f64) -> f64) -> f64 {
        rule.iter().map(|q| q.weight * f(q.xi, q.eta)).sum()
    }

    // ∫_T ξ^a η^b = a! b! / (a + b + 2)!
    fn monomial_integral(a: u32, b: u32) -> f64 {
        let fact = |n: u32| (1..=n).map(|k| k as f64).product::<f64>();
        fact(a) * fact(b) / fact(a + b + 2)
    }

    #[test]
    fn triangle_rules_exact_to_degree() {
        for (rule, degree) in [(&TRI_RULE_3[..], 2), (&TRI_RULE_6[..], 4)] {
            for a in 0..=degree {
                for b in 0..=(degree - a) {
                    let got = integrate(rule, |x, y| x.powi(a as i32) * y.powi(b as i32));
                    assert_relative_eq!(got, monomial_integral(a, b), max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn partition_of_unity_and_nodality() {
        for order in [ElementOrder::Linear, ElementOrder::Quadratic] {
            let (phi, grad) = triangle_shape(order, 0.2, 0.3);
            assert_relative_eq!(phi.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
            let gs = grad.iter().fold([0.0, 0.0], |s, g| [s[0] + g[0], s[1] + g[1]]);
            assert!(gs[0].abs() < 1e-14 && gs[1].abs() < 1e-14);
        }
        let nodes = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (0.5, 0.0), (0.5, 0.5), (0.0, 0.5)];
        for (k, &(x, y)) in nodes.iter().enumerate() {
            let (phi, _) = triangle_shape(ElementOrder::Quadratic, x, y);
            for (m, v) in phi.iter().enumerate() {
                assert_relative_eq!(*v, if m == k { 1.0 } else { 0.0 }, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn quadratic_gradients_match_finite_differences() {
        let (x, y, h) = (0.23, 0.31, 1e-6);
        let (_, grad) = triangle_shape(ElementOrder::Quadratic, x, y);
        let (px, _) = triangle_shape(ElementOrder::Quadratic, x + h, y);
        let (mx, _) = triangle_shape(ElementOrder::Quadratic, x - h, y);
        let (py, _) = triangle_shape(ElementOrder::Quadratic, x, y + h);
        let (my, _) = triangle_shape(ElementOrder::Quadratic, x, y - h);
        for k in 0..6 {
            assert_relative_eq!(grad[k][0], (px[k] - mx[k]) / (2.0 * h), epsilon = 1e-7);
            assert_relative_eq!(grad[k][1], (py[k] - my[k]) / (2.0 * h), epsilon = 1e-7);
        }
    }

    #[test]
    fn segment_basis() {
        for order in [ElementOrder::Linear, ElementOrder::Quadratic] {
            for &(z, _) in segment_rule(2) {
                let (n, d) = segment_shape(order, z);
                assert_relative_eq!(n.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
                assert!(d.iter().sum::<f64>().abs() < 1e-14);
            }
        }
        let w: f64 = segment_rule(3).iter().map(|(z, w)| w * z.powi(5)).sum();
        assert_relative_eq!(w, 1.0 / 6.0, max_relative = 1e-14);
    }

    #[test]
    fn affine_map_gradients() {
        let m = AffineMap::new([[0.0, 0.0], [2.0, 0.0], [0.0, 3.0]]);
        assert_relative_eq!(m.det, 6.0);
        let g = m.gradient([1.0, 0.0]);
        assert_relative_eq!(g[0], 0.5);
        assert_relative_eq!(g[1], 0.0);
    }
}
