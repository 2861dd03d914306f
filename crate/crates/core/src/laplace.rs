//! Numerical Laplace transform solver.
//!
//! The excitation is damped by `e^{-σt}` and transformed with an FFT; each
//! frequency `s_k = σ + iω_k` is solved on the condensed boundary system;
//! the inverse FFT is undamped by `e^{σt}`. Only `k = 0..=N/2` is solved,
//! the rest follows from Hermitian symmetry.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, WaveError};
use crate::linalg::{BandLu, BandMatrix};
use crate::mesh::{GlobalSystem, Probe, Prototype};

/// Window-end damping factor `e^{-σ T_w}`.
pub const DEFAULT_WINDOW_DECAY: f64 = 1e-3;

/// Spot checks against the full solve in debug builds.
const SPOT_CHECKS: usize = 8;
const SPOT_CHECK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceGrid {
    pub n: usize,
    pub dt: f64,
    pub sigma: f64,
}

impl LaplaceGrid {
    pub fn new(n: usize, dt: f64, sigma: f64) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return domain(format!("sample count must be a power of two ≥ 2, got {n}"));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return domain(format!("time step must be positive, got {dt}"));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return domain(format!("damping must be positive, got {sigma}"));
        }
        Ok(Self { n, dt, sigma })
    }

    /// Window of at least twice `duration`, with `σ = ln(1/decay)/T_w`.
    pub fn for_duration(dt: f64, duration: f64, decay: f64) -> Result<Self> {
        if !(duration > 0.0) || !duration.is_finite() {
            return domain(format!("duration must be positive, got {duration}"));
        }
        if !(decay > 0.0 && decay < 1.0) {
            return domain(format!("window decay must lie in (0, 1), got {decay}"));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return domain(format!("time step must be positive, got {dt}"));
        }
        let n = ((2.0 * duration / dt - 1e-9).ceil().max(2.0) as usize).next_power_of_two();
        let window = n as f64 * dt;
        Self::new(n, dt, (1.0 / decay).ln() / window)
    }

    pub fn window(&self) -> f64 {
        self.n as f64 * self.dt
    }

    pub fn omega(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.window()
    }

    pub fn s(&self, k: usize) -> Complex64 {
        Complex64::new(self.sigma, self.omega(k))
    }

    /// Number of solved frequencies, `N/2 + 1`.
    pub fn half_len(&self) -> usize {
        self.n / 2 + 1
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }
}

/// `F_k = Δt · DFT(f_n e^{-σ t_n})` over the whole window.
pub fn forward_transform(signal: &[f64], grid: &LaplaceGrid) -> Result<Vec<Complex64>> {
    if signal.len() > grid.n {
        return Err(WaveError::SignalTooLong {
            len: signal.len(),
            n: grid.n,
        });
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); grid.n];
    for (i, &v) in signal.iter().enumerate() {
        buf[i] = Complex64::new(v * (-grid.sigma * grid.time(i)).exp(), 0.0);
    }
    FftPlanner::new().plan_fft_forward(grid.n).process(&mut buf);
    for c in &mut buf {
        *c *= grid.dt;
    }
    Ok(buf)
}

/// Inverse of [`forward_transform`] for one channel given `k = 0..=N/2`.
pub fn inverse_transform_channel(half: &[Complex64], grid: &LaplaceGrid) -> Vec<f64> {
    let n = grid.n;
    assert_eq!(half.len(), grid.half_len(), "spectrum must hold N/2 + 1 entries");
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    buf[0] = Complex64::new(half[0].re, 0.0);
    for k in 1..n / 2 {
        buf[k] = half[k];
        buf[n - k] = half[k].conj();
    }
    buf[n / 2] = Complex64::new(half[n / 2].re, 0.0);
    for k in 1..n / 2 {
        debug_assert_eq!(buf[k], buf[n - k].conj());
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / (n as f64 * grid.dt);
    let peak = buf.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let out: Vec<f64> = buf
        .iter()
        .enumerate()
        .map(|(i, c)| {
            debug_assert!(c.im.abs() <= 1e-9 * peak.max(f64::MIN_POSITIVE) + 1e-300);
            c.re * scale * (grid.sigma * grid.time(i)).exp()
        })
        .collect();
    out
}

/// Per-channel time histories on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesField {
    pub dt: f64,
    pub labels: Vec<String>,
    pub positions: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl TimeSeriesField {
    pub fn len(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channels(&self) -> usize {
        self.values.len()
    }

    pub fn channel(&self, label: &str) -> Option<&[f64]> {
        self.labels.iter().position(|l| l == label).map(|i| self.values[i].as_slice())
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| i as f64 * self.dt).collect()
    }

    /// First `samples` samples of every channel.
    pub fn truncated(mut self, samples: usize) -> Self {
        for v in &mut self.values {
            v.truncate(samples);
        }
        self
    }

    /// Samples up to and including `duration`.
    pub fn until(self, duration: f64) -> Self {
        let n = (duration / self.dt + 1e-9).floor() as usize + 1;
        self.truncated(n)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().flatten().all(|v| v.is_finite())
    }
}

/// Spectra at `k = 0..=N/2`, indexed `[k][channel]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySolution {
    pub grid: LaplaceGrid,
    pub labels: Vec<String>,
    pub positions: Vec<f64>,
    pub spectra: Vec<Vec<Complex64>>,
}

pub fn inverse_transform(sol: &FrequencySolution) -> Result<TimeSeriesField> {
    let grid = &sol.grid;
    if sol.spectra.len() != grid.half_len() {
        return Err(WaveError::Config(format!(
            "spectrum holds {} frequencies, the grid needs {}",
            sol.spectra.len(),
            grid.half_len()
        )));
    }
    let channels = sol.labels.len();
    let values = (0..channels)
        .map(|c| {
            let half: Vec<Complex64> = sol.spectra.iter().map(|row| row[c]).collect();
            inverse_transform_channel(&half, grid)
        })
        .collect();
    Ok(TimeSeriesField {
        dt: grid.dt,
        labels: sol.labels.clone(),
        positions: sol.positions.clone(),
        values,
    })
}

/// Condensed form of one prototype at a fixed `s`.
#[derive(Debug, Clone)]
pub struct CondensedElement {
    /// `K11 − K12 K22⁻¹ K21` over the prototype's boundary DOFs.
    pub boundary: DMatrix<Complex64>,
    /// `−K22⁻¹ K21`, mapping boundary to interior values.
    pub recovery: DMatrix<Complex64>,
}

fn dynamic_matrix(p: &Prototype, s: Complex64) -> DMatrix<Complex64> {
    let s2 = s * s;
    DMatrix::from_fn(p.ndof(), p.ndof(), |i, j| s2 * p.m[(i, j)] + p.k[(i, j)])
}

pub fn condense_prototype(p: &Prototype, s: Complex64) -> Result<CondensedElement> {
    let a = dynamic_matrix(p, s);
    let nb = p.boundary.len();
    let ni = p.interior.len();
    let a11 = DMatrix::from_fn(nb, nb, |i, j| a[(p.boundary[i], p.boundary[j])]);
    if ni == 0 {
        return Ok(CondensedElement {
            boundary: a11,
            recovery: DMatrix::zeros(0, nb),
        });
    }
    let a12 = DMatrix::from_fn(nb, ni, |i, j| a[(p.boundary[i], p.interior[j])]);
    let a21 = DMatrix::from_fn(ni, nb, |i, j| a[(p.interior[i], p.boundary[j])]);
    let a22 = DMatrix::from_fn(ni, ni, |i, j| a[(p.interior[i], p.interior[j])]);
    let x = a22
        .lu()
        .solve(&a21)
        .ok_or_else(|| WaveError::Solver(format!("singular interior block at s = {s}")))?;
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(WaveError::Solver(format!("singular interior block at s = {s}")));
    }
    let boundary = a11 - &a12 * &x;
    Ok(CondensedElement {
        boundary,
        recovery: -x,
    })
}

/// Boundary-only system at one `s`.
#[derive(Debug, Clone)]
pub struct CondensedSystem {
    pub s: Complex64,
    pub elements: Vec<CondensedElement>,
    pub matrix: BandMatrix<Complex64>,
}

/// Condenses each distinct prototype once and assembles the boundary system.
pub fn condense(system: &GlobalSystem, s: Complex64) -> Result<CondensedSystem> {
    let elements = system
        .prototypes()
        .iter()
        .map(|p| condense_prototype(p, s))
        .collect::<Result<Vec<_>>>()?;
    let nb = system.boundary().len();
    let bw = system.boundary_bandwidth();
    let mut matrix = BandMatrix::zeros(nb, bw, bw);
    for b in system.blocks() {
        let p = &system.prototypes()[b.proto];
        let ce = &elements[b.proto];
        let pos: Vec<Option<usize>> = p
            .boundary
            .iter()
            .map(|&l| b.dofs[l].map(|g| system.boundary_position(g).expect("boundary DOF")))
            .collect();
        for (i, gi) in pos.iter().enumerate() {
            let Some(gi) = gi else { continue };
            for (j, gj) in pos.iter().enumerate() {
                let Some(gj) = gj else { continue };
                matrix.add(*gi, *gj, ce.boundary[(i, j)]);
            }
        }
    }
    Ok(CondensedSystem { s, elements, matrix })
}

impl CondensedSystem {
    pub fn dense(&self) -> DMatrix<Complex64> {
        let n = self.matrix.n();
        DMatrix::from_fn(n, n, |i, j| self.matrix.get(i, j))
    }

    pub fn factor(&self) -> Result<BandLu<Complex64>> {
        self.matrix
            .clone()
            .factor()
            .map_err(|_| WaveError::Solver(format!("singular condensed system at s = {}", self.s)))
    }

    /// Boundary load from a full-length load vector; interior entries must be zero.
    pub fn boundary_load(system: &GlobalSystem, f: &[Complex64]) -> Result<Vec<Complex64>> {
        for &d in system.interior() {
            if f[d] != Complex64::new(0.0, 0.0) {
                return Err(WaveError::InteriorLoad(d));
            }
        }
        Ok(system.boundary().iter().map(|&d| f[d]).collect())
    }

    pub fn solve(&self, system: &GlobalSystem, f: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut b = Self::boundary_load(system, f)?;
        self.factor()?.solve_in_place(&mut b);
        Ok(b)
    }
}

/// Full DOF vector from boundary values: `u2 = −K22⁻¹ K21 u1` per element.
pub fn recover_interior(system: &GlobalSystem, condensed: &CondensedSystem, u_boundary: &[Complex64]) -> Vec<Complex64> {
    let mut u = vec![Complex64::new(0.0, 0.0); system.n_dof()];
    for (&d, &v) in system.boundary().iter().zip(u_boundary) {
        u[d] = v;
    }
    for b in system.blocks() {
        let p = &system.prototypes()[b.proto];
        if p.interior.is_empty() {
            continue;
        }
        let ub = DVector::from_iterator(
            p.boundary.len(),
            p.boundary.iter().map(|&l| b.dofs[l].map_or(Complex64::new(0.0, 0.0), |g| u[g])),
        );
        let ui = &condensed.elements[b.proto].recovery * ub;
        for (&l, v) in p.interior.iter().zip(ui.iter()) {
            let g = b.dofs[l].expect("interior DOFs are never constrained");
            u[g] = *v;
        }
    }
    u
}

/// Uncondensed dense solve of `(s²M + K) u = f`.
pub fn solve_full_system(system: &GlobalSystem, s: Complex64, f: &[Complex64]) -> Result<Vec<Complex64>> {
    let m = system.dense_mass();
    let k = system.dense_stiffness();
    let s2 = s * s;
    let a = DMatrix::from_fn(system.n_dof(), system.n_dof(), |i, j| s2 * m[(i, j)] + k[(i, j)]);
    let x = a
        .lu()
        .solve(&DVector::from_column_slice(f))
        .ok_or_else(|| WaveError::Solver(format!("singular full system at s = {s}")))?;
    Ok(x.as_slice().to_vec())
}

/// Uncondensed banded solve, used for debug spot checks.
fn solve_full_banded(system: &GlobalSystem, s: Complex64, f: &[Complex64]) -> Result<Vec<Complex64>> {
    let bw = system.bandwidth();
    let (m, k) = (system.band_mass(), system.band_stiffness());
    let n = system.n_dof();
    let mut a = BandMatrix::zeros(n, bw, bw);
    let s2 = s * s;
    for i in 0..n {
        for j in i.saturating_sub(bw)..(i + bw + 1).min(n) {
            let v = s2 * m.get(i, j) + k.get(i, j);
            if v != Complex64::new(0.0, 0.0) {
                a.add(i, j, v);
            }
        }
    }
    Ok(a.factor()?.solve(f))
}

fn relative_error(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

fn scaled_load(load: &[f64], f: Complex64) -> Vec<Complex64> {
    load.iter().map(|&v| f * v).collect()
}

/// Boundary solution at `s_k` for spatial load `load` scaled by `spectrum[k]`.
pub fn solve_frequency(
    system: &GlobalSystem,
    grid: &LaplaceGrid,
    load: &[f64],
    spectrum: &[Complex64],
    k: usize,
) -> Result<Vec<Complex64>> {
    Ok(solve_frequency_full(system, grid, load, spectrum, k)?.1)
}

/// Condensed system, boundary solution and full DOF vector at `s_k`.
fn solve_frequency_full(
    system: &GlobalSystem,
    grid: &LaplaceGrid,
    load: &[f64],
    spectrum: &[Complex64],
    k: usize,
) -> Result<(CondensedSystem, Vec<Complex64>)> {
    if k > grid.n / 2 {
        return domain(format!("frequency index {k} beyond N/2 = {}", grid.n / 2));
    }
    if load.len() != system.n_dof() {
        return Err(WaveError::Config(format!(
            "load vector has {} entries for {} DOFs",
            load.len(),
            system.n_dof()
        )));
    }
    let s = grid.s(k);
    let singular = |_| WaveError::SingularFrequency { k, s };
    let condensed = condense(system, s).map_err(singular)?;
    let f = scaled_load(load, spectrum[k]);
    let mut b = CondensedSystem::boundary_load(system, &f)?;
    condensed.factor().map_err(singular)?.solve_in_place(&mut b);
    Ok((condensed, b))
}

/// Which DOFs an LWFEM run reports.
#[derive(Debug, Clone, Copy)]
pub enum Observe<'a> {
    AllDofs,
    Probes(&'a [Probe]),
}

/// Full pipeline for one load with time history `signal`.
pub fn run_lwfem(
    system: &GlobalSystem,
    load: &[f64],
    signal: &[f64],
    grid: &LaplaceGrid,
    observe: Observe<'_>,
) -> Result<TimeSeriesField> {
    let spectrum = forward_transform(signal, grid)?;
    let (labels, positions): (Vec<String>, Vec<f64>) = match observe {
        Observe::AllDofs => system.labels().iter().map(|l| (l.name(), l.x)).unzip(),
        Observe::Probes(p) => p.iter().map(|p| (p.label.clone(), p.x)).unzip(),
    };
    let half = grid.half_len();
    let spectra = (0..half)
        .into_par_iter()
        .map(|k| {
            let (condensed, ub) = solve_frequency_full(system, grid, load, &spectrum, k)?;
            let u = recover_interior(system, &condensed, &ub);
            Ok(match observe {
                Observe::AllDofs => u,
                Observe::Probes(p) => p.iter().map(|p| p.read(&u)).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    if cfg!(debug_assertions) {
        spot_check(system, grid, load, &spectrum)?;
    }

    inverse_transform(&FrequencySolution {
        grid: *grid,
        labels,
        positions,
        spectra,
    })
}

fn spot_check(system: &GlobalSystem, grid: &LaplaceGrid, load: &[f64], spectrum: &[Complex64]) -> Result<()> {
    let half = grid.half_len();
    let picks = SPOT_CHECKS.min(half);
    for j in 0..picks {
        let k = ((2 * j + 1) * half) / (2 * picks);
        let (condensed, ub) = solve_frequency_full(system, grid, load, spectrum, k)?;
        let u = recover_interior(system, &condensed, &ub);
        let reference = solve_full_banded(system, grid.s(k), &scaled_load(load, spectrum[k]))?;
        let err = relative_error(&u, &reference);
        debug_assert!(err < SPOT_CHECK_TOL, "condensed solve deviates from the full solve by {err:e} at k = {k}");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::{CrackSpec, MaterialProps, SectionProps};
    use crate::excitation::hanning_toneburst;
    use crate::mesh::{assemble, build_mesh, Component, ElementKind, MeshSpec};
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn beam_system(n: usize, crack_at: Option<f64>) -> GlobalSystem {
        let mat = MaterialProps::steel();
        let sec = SectionProps::rectangular(0.02, 0.02).unwrap();
        let mut spec = MeshSpec::uniform(0.3, n, ElementKind::BswiBeam, mat, sec);
        if let Some(x) = crack_at {
            spec.cracks.push(CrackSpec::new(x, 0.004, &mat, &sec).unwrap());
        }
        assemble(&build_mesh(&spec).unwrap()).unwrap()
    }

    #[test]
    fn grid_from_duration() {
        let g = LaplaceGrid::for_duration(1e-6, 1e-3, 1e-3).unwrap();
        assert_eq!(g.n, 2048);
        assert!(g.window() >= 2e-3);
        assert_relative_eq!((-g.sigma * g.window()).exp(), 1e-3, max_relative = 1e-12);
        assert!(LaplaceGrid::new(3, 1.0, 1.0).is_err());
        assert!(LaplaceGrid::new(4, 0.0, 1.0).is_err());
        assert!(LaplaceGrid::new(4, 1.0, 0.0).is_err());
    }

    #[test]
    fn impulse_transforms_to_unity() {
        let g = LaplaceGrid::new(64, 1e-6, 500.0).unwrap();
        let mut f = vec![0.0; 64];
        f[0] = 1.0 / g.dt;
        for v in forward_transform(&f, &g).unwrap() {
            assert!((v - c(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_damping_is_scaled_dft() {
        let g = LaplaceGrid { n: 16, dt: 0.5, sigma: 0.0 };
        let f: Vec<f64> = (0..16).map(|i| ((i * i) % 7) as f64 - 3.0).collect();
        let got = forward_transform(&f, &g).unwrap();
        for (k, v) in got.iter().enumerate() {
            let want: Complex64 = f
                .iter()
                .enumerate()
                .map(|(n, &x)| x * Complex64::from_polar(1.0, -2.0 * PI * (k * n) as f64 / 16.0))
                .sum::<Complex64>()
                * 0.5;
            assert!((v - want).norm() < 1e-12);
        }
    }

    #[test]
    fn damped_cosine_peaks_at_first_bin() {
        let g = LaplaceGrid::new(128, 1e-3, 3.0).unwrap();
        let f: Vec<f64> = (0..128)
            .map(|n| {
                let t = g.time(n);
                (g.sigma * t).exp() * (g.omega(1) * t).cos()
            })
            .collect();
        let spec = forward_transform(&f, &g).unwrap();
        let mags: Vec<f64> = spec.iter().map(|v| v.norm()).collect();
        assert!((mags[1] - mags[127]).abs() < 1e-9 * mags[1]);
        for (k, m) in mags.iter().enumerate() {
            if k != 1 && k != 127 {
                assert!(*m < 1e-9 * mags[1]);
            }
        }
    }

    #[test]
    fn signal_too_long() {
        let g = LaplaceGrid::new(4, 1.0, 1.0).unwrap();
        assert!(matches!(forward_transform(&[0.0; 5], &g), Err(WaveError::SignalTooLong { len: 5, n: 4 })));
    }

    #[test]
    fn round_trip() {
        let burst = hanning_toneburst(100e3, 5, 1e-6 / 3.0).unwrap();
        let g = LaplaceGrid::for_duration(burst.dt, 2.0 * burst.duration, DEFAULT_WINDOW_DECAY).unwrap();
        assert!(burst.len() * 4 < g.n);
        let spec = forward_transform(&burst.samples, &g).unwrap();
        let back = inverse_transform_channel(&spec[..g.half_len()], &g);
        let peak = burst.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let padded = burst.padded(g.n);
        let err = back.iter().zip(&padded).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-8 * peak, "{err}");
    }

    #[test]
    fn zero_spectrum_inverts_to_zero() {
        let g = LaplaceGrid::new(32, 1e-3, 10.0).unwrap();
        let out = inverse_transform_channel(&vec![c(0.0, 0.0); 17], &g);
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn no_interior_condensation_is_identity() {
        let mesh = build_mesh(&MeshSpec::uniform(
            1.0,
            5,
            ElementKind::FemBeam,
            MaterialProps::steel(),
            SectionProps::rectangular(0.02, 0.02).unwrap(),
        ))
        .unwrap();
        let sys = assemble(&mesh).unwrap();
        let s = c(300.0, 2.0e5);
        let cs = condense(&sys, s).unwrap();
        let (m, k) = (sys.dense_mass(), sys.dense_stiffness());
        let d = cs.dense();
        for i in 0..sys.n_dof() {
            for j in 0..sys.n_dof() {
                let want = s * s * m[(i, j)] + k[(i, j)];
                assert!((d[(i, j)] - want).norm() <= 1e-12 * want.norm().max(1.0));
            }
        }
    }

    #[test]
    fn two_dof_schur_by_hand() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let k = DMatrix::from_row_slice(2, 2, &[10.0, -4.0, -4.0, 6.0]);
        let sys = GlobalSystem::from_dense(m, k, vec![1]).unwrap();
        let s = c(0.7, 1.3);
        let s2 = s * s;
        let (a, b, d) = (2.0 * s2 + 10.0, 0.5 * s2 - 4.0, s2 + 6.0);
        let want = a - b * b / d;
        let cs = condense(&sys, s).unwrap();
        assert!((cs.dense()[(0, 0)] - want).norm() < 1e-14 * want.norm());
    }

    #[test]
    fn condensed_matches_full_solve_on_cracked_beam() {
        let sys = beam_system(3, Some(0.15));
        let mut f = vec![c(0.0, 0.0); sys.n_dof()];
        f[sys.dof(0, Component::Deflection).unwrap()] = c(1.0, 0.0);
        for (sigma, w) in [(2e3, 0.0), (2e3, 3e5), (50.0, 1e6), (1e4, 7.7e5)] {
            let s = c(sigma, w);
            let cs = condense(&sys, s).unwrap();
            let ub = cs.solve(&sys, &f).unwrap();
            let u = recover_interior(&sys, &cs, &ub);
            let full = solve_full_system(&sys, s, &f).unwrap();
            assert!(relative_error(&u, &full) < 1e-10, "{}", relative_error(&u, &full));
        }
    }

    #[test]
    fn single_dof_closed_form() {
        let sys = GlobalSystem::from_dense(
            DMatrix::from_element(1, 1, 3.0),
            DMatrix::from_element(1, 1, 1200.0),
            vec![],
        )
        .unwrap();
        let g = LaplaceGrid::new(64, 1e-3, 5.0).unwrap();
        let spectrum: Vec<Complex64> = (0..64).map(|k| c(1.0 + k as f64, -0.5)).collect();
        for k in [0, 3, 32] {
            let u = solve_frequency(&sys, &g, &[1.0], &spectrum, k).unwrap();
            let s = g.s(k);
            let want = spectrum[k] / (3.0 * s * s + 1200.0);
            assert!((u[0] - want).norm() < 1e-12 * want.norm());
        }
        let zero = vec![c(0.0, 0.0); 64];
        assert_eq!(solve_frequency(&sys, &g, &[1.0], &zero, 5).unwrap()[0], c(0.0, 0.0));
        assert!(solve_frequency(&sys, &g, &[1.0], &spectrum, 33).is_err());
    }

    #[test]
    fn four_element_rod_matches_full_solve() {
        let mesh = build_mesh(&MeshSpec::uniform(
            1.5,
            4,
            ElementKind::BswiRod,
            MaterialProps::steel(),
            SectionProps::rectangular(0.02, 0.02).unwrap(),
        ))
        .unwrap();
        let sys = assemble(&mesh).unwrap();
        let g = LaplaceGrid::for_duration(1e-6, 1e-3, DEFAULT_WINDOW_DECAY).unwrap();
        let mut load = vec![0.0; sys.n_dof()];
        load[0] = 1.0;
        let spectrum = vec![c(1.0, 0.0); g.n];
        let k = 7;
        let (cs, ub) = solve_frequency_full(&sys, &g, &load, &spectrum, k).unwrap();
        let u = recover_interior(&sys, &cs, &ub);
        let full = solve_full_system(&sys, g.s(k), &scaled_load(&load, spectrum[k])).unwrap();
        assert!(relative_error(&u, &full) < 1e-10);
    }

    #[test]
    fn interior_recovery_static_limit() {
        let sys = beam_system(2, None);
        let s = c(1e-3, 0.0);
        let cs = condense(&sys, s).unwrap();
        // rigid translation w = 1, θ = 0 on every boundary node
        let ub: Vec<Complex64> = sys
            .boundary()
            .iter()
            .map(|&d| {
                if sys.labels()[d].component == Component::Deflection {
                    c(1.0, 0.0)
                } else {
                    c(0.0, 0.0)
                }
            })
            .collect();
        let u = recover_interior(&sys, &cs, &ub);
        for &d in sys.interior() {
            let want = if sys.labels()[d].component == Component::Deflection { 1.0 } else { 0.0 };
            assert!((u[d] - c(want, 0.0)).norm() < 1e-6);
        }
        let zero = recover_interior(&sys, &cs, &vec![c(0.0, 0.0); ub.len()]);
        assert!(zero.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn interior_load_is_rejected() {
        let sys = beam_system(1, None);
        let mut f = vec![c(0.0, 0.0); sys.n_dof()];
        f[sys.interior()[0]] = c(1.0, 0.0);
        let cs = condense(&sys, c(1.0, 1.0)).unwrap();
        assert!(matches!(cs.solve(&sys, &f), Err(WaveError::InteriorLoad(_))));
    }

    #[test]
    fn zero_excitation_gives_zero_field() {
        let sys = beam_system(2, None);
        let g = LaplaceGrid::new(64, 1e-6, 1e4).unwrap();
        let mut load = vec![0.0; sys.n_dof()];
        load[0] = 1.0;
        let out = run_lwfem(&sys, &load, &[0.0; 10], &g, Observe::AllDofs).unwrap();
        assert_eq!(out.len(), 64);
        assert!(out.values.iter().flatten().all(|&v| v == 0.0));
    }
}
