//! B-spline wavelet on the interval (BSWI) scaling functions and the
//! nodal shape functions built on them.
//!
//! The scaling space of order `m` at scale `j` is spanned by the
//! `2^j + m - 1` B-splines of degree `m - 1` on the clamped knot vector
//! `[0; m] ++ {k / 2^j : 0 < k < 2^j} ++ [1; m]`. The first and last
//! `m - 1` functions are the boundary scaling functions, the rest are the
//! inner ones. For the default element (m = 4, j = 3) this gives 11 cubic
//! functions on eight knot spans.
//!
//! Shape functions are `N(ξ) = Φ(ξ) R`, where `R` inverts the matrix of
//! basis values at the element nodes, so `N_i(ξ_j) = δ_ij`.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::error::{domain, Result, WaveError};

/// Cubic B-splines.
pub const BSWI_ORDER: usize = 4;
/// Eight knot spans on the unit interval.
pub const BSWI_SCALE: u32 = 3;
/// `2^3 + 4 - 1`.
pub const BSWI_FUNCS: usize = 11;

/// Largest accepted condition number of the nodal evaluation matrix.
pub const MAX_CONDITION: f64 = 1e12;

/// Scaling functions of order `m` at scale `j` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingBasis {
    order: usize,
    scale: u32,
    knots: Vec<f64>,
}

impl ScalingBasis {
    /// The cubic, scale-3 basis used by every wavelet element.
    pub fn bswi43() -> Self {
        Self::new(BSWI_ORDER, BSWI_SCALE).expect("BSWI4,3 satisfies 2^j >= 2m - 1")
    }

    /// Requires `2^j >= 2m - 1` so that at least one inner wavelet exists.
    pub fn new(order: usize, scale: u32) -> Result<Self> {
        if order < 2 {
            return domain(format!("B-spline order must be at least 2, got {order}"));
        }
        let spans = 1usize << scale;
        if spans < 2 * order - 1 {
            return domain(format!(
                "scale {scale} is too coarse for order {order}: need 2^j >= 2m - 1"
            ));
        }
        let mut knots = vec![0.0; order];
        knots.extend((1..spans).map(|k| k as f64 / spans as f64));
        knots.extend(std::iter::repeat(1.0).take(order));
        Ok(Self { order, scale, knots })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn degree(&self) -> usize {
        self.order - 1
    }

    pub fn n_funcs(&self) -> usize {
        (1usize << self.scale) + self.order - 1
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Distinct knot values, i.e. the span boundaries `0, 1/2^j, ..., 1`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let spans = 1usize << self.scale;
        (0..=spans).map(|k| k as f64 / spans as f64).collect()
    }

    /// Support `[knot_i, knot_{i+m}]` of function `i`.
    pub fn support(&self, i: usize) -> (f64, f64) {
        (self.knots[i], self.knots[i + self.order])
    }

    /// Knot span index `s` with `knots[s] <= ξ < knots[s + 1]`; the last
    /// non-degenerate span at `ξ = 1`.
    fn span(&self, xi: f64) -> usize {
        let n = self.n_funcs() - 1;
        let p = self.degree();
        if xi >= self.knots[n + 1] {
            return n;
        }
        let (mut lo, mut hi) = (p, n + 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if xi < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }

    fn check(xi: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&xi) || xi.is_nan() {
            return domain(format!("ξ = {xi} lies outside [0, 1]"));
        }
        Ok(())
    }

    /// Nonzero functions of degree `p` and `p - 1` on `span` (Cox–de Boor
    /// triangle). Returns `(values_p, values_pm1)`.
    fn nonzero(&self, span: usize, xi: f64) -> (Vec<f64>, Vec<f64>) {
        let p = self.degree();
        let u = &self.knots;
        let mut n = vec![0.0; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        let mut lower = Vec::new();
        n[0] = 1.0;
        for j in 1..=p {
            if j == p {
                lower = n[..p].to_vec();
            }
            left[j] = xi - u[span + 1 - j];
            right[j] = u[span + j] - xi;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = n[r] / (right[r + 1] + left[j - r]);
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }
        (n, lower)
    }

    /// `Φ(ξ)`: all scaling functions at `ξ`.
    pub fn eval(&self, xi: f64) -> Result<Vec<f64>> {
        Self::check(xi)?;
        let span = self.span(xi);
        let (vals, _) = self.nonzero(span, xi);
        let p = self.degree();
        let mut out = vec![0.0; self.n_funcs()];
        out[span - p..=span].copy_from_slice(&vals);
        Ok(out)
    }

    /// `dΦ/dξ`. Right derivative at interior knots, left derivative at 1.
    pub fn eval_derivatives(&self, xi: f64) -> Result<Vec<f64>> {
        Self::check(xi)?;
        let span = self.span(xi);
        let p = self.degree();
        let u = &self.knots;
        let (_, lower) = self.nonzero(span, xi);
        let mut out = vec![0.0; self.n_funcs()];
        for r in 0..=p {
            let i = span - p + r;
            let mut d = 0.0;
            if r >= 1 {
                d += lower[r - 1] / (u[i + p] - u[i]);
            }
            if r < p {
                d -= lower[r] / (u[i + p + 1] - u[i + 1]);
            }
            out[i] = p as f64 * d;
        }
        Ok(out)
    }
}

/// Element node coordinates in the reference interval.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeLayout {
    coords: Vec<f64>,
}

impl NodeLayout {
    /// Knot points plus one extra node inside each boundary span.
    pub fn bswi43() -> Self {
        Self {
            coords: vec![
                0.0,
                1.0 / 16.0,
                1.0 / 8.0,
                2.0 / 8.0,
                3.0 / 8.0,
                4.0 / 8.0,
                5.0 / 8.0,
                6.0 / 8.0,
                7.0 / 8.0,
                15.0 / 16.0,
                1.0,
            ],
        }
    }

    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return domain("a node layout needs at least two nodes");
        }
        if coords[0] != 0.0 || *coords.last().unwrap() != 1.0 {
            return domain(format!("node layout must start at 0 and end at 1: {coords:?}"));
        }
        if coords.windows(2).any(|w| w[1] <= w[0]) {
            return domain(format!("node layout must be strictly increasing: {coords:?}"));
        }
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

/// `R = T⁻¹` where row `j` of `T` is `Φ(ξ_j)`.
#[derive(Debug, Clone)]
pub struct TransformMatrix {
    r: DMatrix<f64>,
    condition: f64,
}

impl TransformMatrix {
    pub fn build(basis: &ScalingBasis, nodes: &NodeLayout) -> Result<Self> {
        let n = basis.n_funcs();
        if nodes.len() != n {
            return domain(format!(
                "{} nodes given for a basis with {n} functions",
                nodes.len()
            ));
        }
        let t = evaluation_matrix(basis, nodes)?;
        let sv = t.clone().singular_values();
        let smax = sv.max();
        let smin = sv.min();
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if !condition.is_finite() || condition > MAX_CONDITION {
            return Err(WaveError::IllConditioned {
                layout: nodes.coords().to_vec(),
                condition,
            });
        }
        let r = t.clone().try_inverse().ok_or_else(|| WaveError::IllConditioned {
            layout: nodes.coords().to_vec(),
            condition,
        })?;
        let residual = (&t * &r - DMatrix::<f64>::identity(n, n)).amax();
        if residual >= 1e-9 {
            return Err(WaveError::IllConditioned {
                layout: nodes.coords().to_vec(),
                condition,
            });
        }
        Ok(Self { r, condition })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.r
    }

    /// 2-norm condition number of the nodal evaluation matrix.
    pub fn condition(&self) -> f64 {
        self.condition
    }
}

/// Matrix whose row `j` holds `Φ(ξ_j)`.
pub fn evaluation_matrix(basis: &ScalingBasis, nodes: &NodeLayout) -> Result<DMatrix<f64>> {
    let n = basis.n_funcs();
    let mut t = DMatrix::zeros(nodes.len(), n);
    for (j, &xi) in nodes.coords().iter().enumerate() {
        let phi = basis.eval(xi)?;
        for (l, v) in phi.into_iter().enumerate() {
            t[(j, l)] = v;
        }
    }
    Ok(t)
}

/// Composite Gauss–Legendre rule with `points_per_span` points on each
/// interval between consecutive breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn per_span(breakpoints: &[f64], points_per_span: usize) -> Self {
        let (x, w) = gauss_legendre(points_per_span);
        let mut points = Vec::with_capacity(x.len() * breakpoints.len());
        let mut weights = Vec::with_capacity(points.capacity());
        for span in breakpoints.windows(2) {
            let (a, b) = (span[0], span[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (xi, wi) in x.iter().zip(&w) {
                points.push(mid + half * xi);
                weights.push(half * wi);
            }
        }
        Self { points, weights }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Gauss–Legendre abscissae and weights on `[-1, 1]` (Newton iteration on
/// the Legendre polynomial).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss rule needs at least one point");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for k in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * k + 1) as f64 * z * p1 - k as f64 * p2) / (k + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Scaling basis, nodes and transform bundled into nodal shape functions,
/// with the reference-interval integrals the element matrices need.
#[derive(Debug, Clone)]
pub struct ShapeFunctions {
    basis: ScalingBasis,
    nodes: NodeLayout,
    transform: TransformMatrix,
    quadrature: QuadratureRule,
    /// `Rᵀ ∫ Φᵀ Φ dξ R`
    mass: DMatrix<f64>,
    /// `Rᵀ ∫ Φ_ξᵀ Φ_ξ dξ R`
    stiffness: DMatrix<f64>,
    /// `Rᵀ ∫ Φ_ξᵀ Φ dξ R`
    coupling: DMatrix<f64>,
    /// `Rᵀ ∫ Φᵀ dξ`
    load: DVector<f64>,
}

impl ShapeFunctions {
    pub fn new(basis: ScalingBasis, nodes: NodeLayout) -> Result<Self> {
        let transform = TransformMatrix::build(&basis, &nodes)?;
        // degree 2(m-1) integrands, exact with m points per span
        let quadrature = QuadratureRule::per_span(&basis.breakpoints(), basis.order());
        let n = basis.n_funcs();
        let mut phi_phi = DMatrix::zeros(n, n);
        let mut d_d = DMatrix::zeros(n, n);
        let mut d_phi = DMatrix::zeros(n, n);
        let mut phi_sum = DVector::zeros(n);
        for (&x, &w) in quadrature.points.iter().zip(&quadrature.weights) {
            let p = DVector::from_vec(basis.eval(x)?);
            let d = DVector::from_vec(basis.eval_derivatives(x)?);
            phi_phi += w * &p * p.transpose();
            d_d += w * &d * d.transpose();
            d_phi += w * &d * p.transpose();
            phi_sum += w * &p;
        }
        let r = transform.matrix();
        let rt = r.transpose();
        Ok(Self {
            mass: &rt * phi_phi * r,
            stiffness: &rt * d_d * r,
            coupling: &rt * d_phi * r,
            load: &rt * phi_sum,
            basis,
            nodes,
            transform,
            quadrature,
        })
    }

    pub fn basis(&self) -> &ScalingBasis {
        &self.basis
    }

    pub fn nodes(&self) -> &NodeLayout {
        &self.nodes
    }

    pub fn transform(&self) -> &TransformMatrix {
        &self.transform
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.quadrature
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `N(ξ) = Φ(ξ) R`.
    pub fn eval(&self, xi: f64) -> Result<Vec<f64>> {
        let phi = DVector::from_vec(self.basis.eval(xi)?);
        Ok((self.transform.matrix().transpose() * phi).as_slice().to_vec())
    }

    /// `dN/dξ = dΦ/dξ · R`.
    pub fn eval_derivatives(&self, xi: f64) -> Result<Vec<f64>> {
        let d = DVector::from_vec(self.basis.eval_derivatives(xi)?);
        Ok((self.transform.matrix().transpose() * d).as_slice().to_vec())
    }

    pub fn mass_integral(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn stiffness_integral(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    /// Row index carries the derivative: `(Rᵀ ∫ Φ_ξᵀ Φ R)[i][j] = ∫ N_i' N_j`.
    pub fn coupling_integral(&self) -> &DMatrix<f64> {
        &self.coupling
    }

    /// `∫ N_i dξ`.
    pub fn load_integral(&self) -> &DVector<f64> {
        &self.load
    }
}

/// Shared BSWI4,3 shape functions with the default node layout.
pub fn bswi43() -> &'static ShapeFunctions {
    static SHAPES: OnceLock<ShapeFunctions> = OnceLock::new();
    SHAPES.get_or_init(|| {
        ShapeFunctions::new(ScalingBasis::bswi43(), NodeLayout::bswi43())
            .expect("default BSWI4,3 node layout is well conditioned")
    })
}
