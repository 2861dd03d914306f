//! Element matrices: wavelet (BSWI) rods and Timoshenko beams, two-node
//! conventional baselines, and the massless crack spring.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis;
use crate::error::{domain, Result, WaveError};

/// Rectangular-section shear coefficient in the `GA/k` convention.
pub const DEFAULT_SHEAR_COEFFICIENT: f64 = 6.0 / 5.0;

/// Isotropic linear elastic material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialProps {
    /// Young's modulus (Pa).
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    /// kg/m³
    pub density: f64,
}

impl MaterialProps {
    pub fn new(youngs_modulus: f64, poisson_ratio: f64, density: f64) -> Result<Self> {
        let m = Self {
            youngs_modulus,
            poisson_ratio,
            density,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn steel() -> Self {
        Self {
            youngs_modulus: 200e9,
            poisson_ratio: 0.3,
            density: 7800.0,
        }
    }

    pub fn aluminum() -> Self {
        Self {
            youngs_modulus: 70e9,
            poisson_ratio: 0.3,
            density: 2730.0,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "steel" => Some(Self::steel()),
            "aluminum" | "aluminium" => Some(Self::aluminum()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.youngs_modulus > 0.0) {
            return domain(format!("Young's modulus must be positive, got {}", self.youngs_modulus));
        }
        if !(self.density > 0.0) {
            return domain(format!("density must be positive, got {}", self.density));
        }
        if !(self.poisson_ratio > -1.0 && self.poisson_ratio < 0.5) {
            return domain(format!("Poisson ratio must lie in (-1, 0.5), got {}", self.poisson_ratio));
        }
        Ok(())
    }

    /// `G = E / (2(1 + ν))`
    pub fn shear_modulus(&self) -> f64 {
        self.youngs_modulus / (2.0 * (1.0 + self.poisson_ratio))
    }

    /// Bar velocity `√(E/ρ)`.
    pub fn bar_velocity(&self) -> f64 {
        (self.youngs_modulus / self.density).sqrt()
    }
}

/// Rectangular cross-section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionProps {
    pub width: f64,
    pub height: f64,
    /// `k` in `GA/k`.
    pub shear_coefficient: f64,
}

impl SectionProps {
    pub fn rectangular(width: f64, height: f64) -> Result<Self> {
        Self::new(width, height, DEFAULT_SHEAR_COEFFICIENT)
    }

    pub fn new(width: f64, height: f64, shear_coefficient: f64) -> Result<Self> {
        let s = Self {
            width,
            height,
            shear_coefficient,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.height > 0.0) {
            return domain(format!(
                "section dimensions must be positive, got b = {}, h = {}",
                self.width, self.height
            ));
        }
        if !(self.shear_coefficient > 0.0) {
            return domain(format!("shear coefficient must be positive, got {}", self.shear_coefficient));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    /// `b h³ / 12`
    pub fn second_moment(&self) -> f64 {
        self.width * self.height.powi(3) / 12.0
    }
}

/// Local DOF ordering of an element matrix pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofOrder {
    /// One axial displacement per node.
    Axial,
    /// `[w_1 … w_n, θ_1 … θ_n]`.
    BeamBlocked,
    /// `[w_1, θ_1, w_2, θ_2, …]`.
    BeamInterleaved,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementMatrices {
    pub k: DMatrix<f64>,
    pub m: DMatrix<f64>,
    pub dof_order: DofOrder,
}

impl ElementMatrices {
    pub fn ndof(&self) -> usize {
        self.k.nrows()
    }

    /// Reorders a blocked beam pair into interleaved per-node DOFs.
    pub fn interleaved(&self) -> Self {
        if self.dof_order != DofOrder::BeamBlocked {
            return self.clone();
        }
        let n = self.ndof() / 2;
        // new index 2i -> w_i (old i), 2i+1 -> θ_i (old n+i)
        let old = |new: usize| if new % 2 == 0 { new / 2 } else { n + new / 2 };
        let permute = |a: &DMatrix<f64>| DMatrix::from_fn(2 * n, 2 * n, |i, j| a[(old(i), old(j))]);
        Self {
            k: permute(&self.k),
            m: permute(&self.m),
            dof_order: DofOrder::BeamInterleaved,
        }
    }
}

fn check_length(l_e: f64) -> Result<()> {
    if !(l_e > 0.0) || !l_e.is_finite() {
        return domain(format!("element length must be positive, got {l_e}"));
    }
    Ok(())
}

/// 11-node wavelet rod element, one axial DOF per node.
pub fn bswi_rod_matrices(mat: &MaterialProps, sec: &SectionProps, l_e: f64) -> Result<ElementMatrices> {
    check_length(l_e)?;
    let s = basis::bswi43();
    let ea = mat.youngs_modulus * sec.area();
    let rho_a = mat.density * sec.area();
    Ok(ElementMatrices {
        k: s.stiffness_integral() * (ea / l_e),
        m: s.mass_integral() * (rho_a * l_e),
        dof_order: DofOrder::Axial,
    })
}

/// 11-node wavelet Timoshenko element, blocked DOFs `[w…, θ…]`.
///
/// The bending block is `EI/l_e` without the shear coefficient, as follows
/// from the strain energy `EI/2 ∫ θ'² + GA/(2k) ∫ (w' - θ)²`.
pub fn bswi_beam_matrices(mat: &MaterialProps, sec: &SectionProps, l_e: f64) -> Result<ElementMatrices> {
    check_length(l_e)?;
    let s = basis::bswi43();
    let n = s.len();
    let ga_k = mat.shear_modulus() * sec.area() / sec.shear_coefficient;
    let ei = mat.youngs_modulus * sec.second_moment();
    let stiff = s.stiffness_integral();
    let mass = s.mass_integral();
    let coup = s.coupling_integral();

    let k1 = stiff * (ga_k / l_e);
    let k2 = coup * (-ga_k);
    let k4 = stiff * (ei / l_e) + mass * (ga_k * l_e);
    let m1 = mass * (mat.density * sec.area() * l_e);
    let m2 = mass * (mat.density * sec.second_moment() * l_e);

    let mut k = DMatrix::zeros(2 * n, 2 * n);
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    k.view_mut((0, 0), (n, n)).copy_from(&k1);
    k.view_mut((0, n), (n, n)).copy_from(&k2);
    k.view_mut((n, 0), (n, n)).copy_from(&k2.transpose());
    k.view_mut((n, n), (n, n)).copy_from(&k4);
    m.view_mut((0, 0), (n, n)).copy_from(&m1);
    m.view_mut((n, n), (n, n)).copy_from(&m2);
    Ok(ElementMatrices {
        k,
        m,
        dof_order: DofOrder::BeamBlocked,
    })
}

/// Nodal forces of a uniform distributed load `q` (N/m) over a wavelet element.
pub fn bswi_distributed_load(q: f64, l_e: f64) -> Result<DVector<f64>> {
    check_length(l_e)?;
    Ok(basis::bswi43().load_integral() * (q * l_e))
}

/// Linear two-node rod with consistent mass.
pub fn conventional_rod_matrices(mat: &MaterialProps, sec: &SectionProps, l_e: f64) -> Result<ElementMatrices> {
    check_length(l_e)?;
    let ea_l = mat.youngs_modulus * sec.area() / l_e;
    let m6 = mat.density * sec.area() * l_e / 6.0;
    Ok(ElementMatrices {
        k: DMatrix::from_row_slice(2, 2, &[ea_l, -ea_l, -ea_l, ea_l]),
        m: DMatrix::from_row_slice(2, 2, &[2.0 * m6, m6, m6, 2.0 * m6]),
        dof_order: DofOrder::Axial,
    })
}

/// Linear two-node Timoshenko element `[w_1, θ_1, w_2, θ_2]`.
///
/// Bending uses 2-point Gauss (exact for the constant curvature), shear a
/// single reduced point to avoid locking. Mass is consistent for both the
/// translational and rotary inertia.
pub fn conventional_beam_matrices(mat: &MaterialProps, sec: &SectionProps, l_e: f64) -> Result<ElementMatrices> {
    check_length(l_e)?;
    let ei = mat.youngs_modulus * sec.second_moment();
    let ga_k = mat.shear_modulus() * sec.area() / sec.shear_coefficient;

    let mut k = DMatrix::zeros(4, 4);
    // bending: θ' = (θ_2 - θ_1)/l at both Gauss points
    let bb = [0.0, -1.0 / l_e, 0.0, 1.0 / l_e];
    let (_, gauss_w) = basis::gauss_legendre(2);
    for w in gauss_w {
        let jw = 0.5 * l_e * w;
        for i in 0..4 {
            for j in 0..4 {
                k[(i, j)] += ei * bb[i] * bb[j] * jw;
            }
        }
    }
    // shear at the midpoint: γ = w' - θ
    let bs = [-1.0 / l_e, -0.5, 1.0 / l_e, -0.5];
    for i in 0..4 {
        for j in 0..4 {
            k[(i, j)] += ga_k * bs[i] * bs[j] * l_e;
        }
    }

    let mw = mat.density * sec.area() * l_e / 6.0;
    let mr = mat.density * sec.second_moment() * l_e / 6.0;
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
        2.0 * mw, 0.0,      mw,       0.0,
        0.0,      2.0 * mr, 0.0,      mr,
        mw,       0.0,      2.0 * mw, 0.0,
        0.0,      mr,       0.0,      2.0 * mr,
    ]);
    Ok(ElementMatrices {
        k,
        m,
        dof_order: DofOrder::BeamInterleaved,
    })
}

/// Correction function used inside the crack flexibility integrals,
/// in terms of the depth coordinate `α` and the section height `h`.
#[derive(Debug, Clone, Copy)]
pub enum CorrectionFunction {
    /// Opening-mode stress-intensity correction `f_1(α)`.
    OpeningMode,
    /// User function of the depth ratio `α/h`.
    Custom(fn(f64) -> f64),
}

impl CorrectionFunction {
    pub fn eval(&self, alpha: f64, h: f64) -> f64 {
        match self {
            CorrectionFunction::OpeningMode => opening_mode_correction(alpha, h),
            CorrectionFunction::Custom(f) => f(alpha / h),
        }
    }
}

/// `f_1(α) = √(tan x / x) · (0.752 + 2.02 α/h + 0.37 (1 - sin x)³) / cos x`
/// with `x = πα/(2h)`.
pub fn opening_mode_correction(alpha: f64, h: f64) -> f64 {
    let x = std::f64::consts::PI * alpha / (2.0 * h);
    let ratio = if x.abs() < 1e-8 { 1.0 + x * x / 3.0 } else { x.tan() / x };
    ratio.sqrt() * (0.752 + 2.02 * alpha / h + 0.37 * (1.0 - x.sin()).powi(3)) / x.cos()
}

/// Options for the crack flexibility integrals.
#[derive(Debug, Clone, Copy)]
pub struct CrackModel {
    pub bending: CorrectionFunction,
    /// The shear integral reuses the opening-mode function by default.
    pub shear: CorrectionFunction,
}

impl Default for CrackModel {
    fn default() -> Self {
        Self {
            bending: CorrectionFunction::OpeningMode,
            shear: CorrectionFunction::OpeningMode,
        }
    }
}

/// Rotational (`c_b`, rad/(N·m)) and shear (`c_s`, m/N) flexibilities of an
/// open edge crack of depth `a`.
pub fn crack_flexibilities(mat: &MaterialProps, sec: &SectionProps, a: f64) -> Result<(f64, f64)> {
    crack_flexibilities_with(mat, sec, a, &CrackModel::default())
}

pub fn crack_flexibilities_with(
    mat: &MaterialProps,
    sec: &SectionProps,
    a: f64,
    model: &CrackModel,
) -> Result<(f64, f64)> {
    let (b, h) = (sec.width, sec.height);
    if !(a >= 0.0) {
        return domain(format!("crack depth must be non-negative, got {a}"));
    }
    if a >= h {
        return domain(format!("crack depth {a} reaches the section height {h}; through-cracks are unsupported"));
    }
    if a == 0.0 {
        return Ok((0.0, 0.0));
    }
    let e = mat.youngs_modulus;
    let k = sec.shear_coefficient;
    let pi = std::f64::consts::PI;
    let ib = adaptive_simpson(|al| al / (h * h) * model.bending.eval(al, h).powi(2), 0.0, a, 1e-8);
    let is = adaptive_simpson(|al| al / (h * h) * model.shear.eval(al, h).powi(2), 0.0, a, 1e-8);
    let c_b = 72.0 * pi / (e * b * h * h) * ib;
    let c_s = 2.0 * k * k * pi / (e * b) * is;
    Ok((c_b, c_s))
}

/// Adaptive Simpson quadrature to a relative tolerance.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(fa, fm, fb, a, b);
    // coarse estimate sets the absolute target
    let scale = whole.abs().max(f64::MIN_POSITIVE);
    recurse(&f, a, b, fa, fm, fb, whole, rel_tol * scale, 50)
}

/// An open edge crack at `position` (m from the left end).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrackSpec {
    pub position: f64,
    pub depth: f64,
    pub c_b: f64,
    pub c_s: f64,
}

impl CrackSpec {
    pub fn new(position: f64, depth: f64, mat: &MaterialProps, sec: &SectionProps) -> Result<Self> {
        Self::with_model(position, depth, mat, sec, &CrackModel::default())
    }

    pub fn with_model(
        position: f64,
        depth: f64,
        mat: &MaterialProps,
        sec: &SectionProps,
        model: &CrackModel,
    ) -> Result<Self> {
        let (c_b, c_s) = crack_flexibilities_with(mat, sec, depth, model)?;
        Ok(Self {
            position,
            depth,
            c_b,
            c_s,
        })
    }

    pub fn is_open(&self) -> bool {
        self.c_b > 0.0 && self.c_s > 0.0
    }
}

/// Massless spring joining `[w_L, θ_L, w_R, θ_R]`.
///
/// Zero flexibility means a perfect joint; that is reported as
/// [`WaveError::NoCrack`] so the mesher merges the nodes.
pub fn crack_spring_matrices(c_b: f64, c_s: f64) -> Result<ElementMatrices> {
    if c_b == 0.0 || c_s == 0.0 {
        return Err(WaveError::NoCrack);
    }
    if !(c_b > 0.0 && c_s > 0.0) {
        return domain(format!("crack flexibilities must be positive, got c_b = {c_b}, c_s = {c_s}"));
    }
    let (kb, ks) = (1.0 / c_b, 1.0 / c_s);
    #[rustfmt::skip]
    let k = DMatrix::from_row_slice(4, 4, &[
         ks, 0.0, -ks, 0.0,
        0.0,  kb, 0.0, -kb,
        -ks, 0.0,  ks, 0.0,
        0.0, -kb, 0.0,  kb,
    ]);
    Ok(ElementMatrices {
        k,
        m: DMatrix::zeros(4, 4),
        dof_order: DofOrder::BeamInterleaved,
    })
}
