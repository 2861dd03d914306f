//! Post-processing of time histories.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::element::adaptive_simpson;
use crate::error::{domain, Result, WaveError};
use crate::laplace::TimeSeriesField;

/// Arrival threshold as a fraction of the envelope maximum.
pub const DEFAULT_THRESHOLD: f64 = 0.05;
/// Half width of the crack gates relative to the predicted travel time.
pub const GATE_FRACTION: f64 = 0.15;
/// Morlet center frequency parameter.
pub const MORLET_OMEGA0: f64 = 6.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub dt: f64,
    pub magnitude: Vec<f64>,
}

impl Envelope {
    pub fn max(&self) -> f64 {
        self.magnitude.iter().fold(0.0f64, |m, &v| m.max(v))
    }

    pub fn argmax(&self) -> usize {
        self.magnitude
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
            .0
    }
}

/// Modulus of the analytic signal.
pub fn envelope(signal: &[f64], dt: f64) -> Result<Envelope> {
    analytic_modulus(signal, dt, None)
}

/// Envelope of the signal content between `f_lo` and `f_hi` (Hz).
pub fn band_envelope(signal: &[f64], dt: f64, f_lo: f64, f_hi: f64) -> Result<Envelope> {
    if !(0.0 <= f_lo && f_lo < f_hi) {
        return domain(format!("invalid band [{f_lo}, {f_hi}]"));
    }
    analytic_modulus(signal, dt, Some((f_lo, f_hi)))
}

fn analytic_modulus(signal: &[f64], dt: f64, band: Option<(f64, f64)>) -> Result<Envelope> {
    let n = signal.len();
    if n < 8 {
        return domain(format!("envelope needs at least 8 samples, got {n}"));
    }
    // zero padding keeps late energy from wrapping onto the start
    let m = (2 * n).next_power_of_two();
    let df = 1.0 / (m as f64 * dt);
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex64> = signal.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    buf.resize(m, Complex64::new(0.0, 0.0));
    planner.plan_fft_forward(m).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let outside = band.is_some_and(|(lo, hi)| {
            let f = k as f64 * df;
            f < lo || f > hi
        });
        if k > m / 2 || outside {
            *c = Complex64::new(0.0, 0.0);
        } else if k != 0 && k != m / 2 {
            *c *= 2.0;
        }
    }
    planner.plan_fft_inverse(m).process(&mut buf);
    buf.truncate(n);
    let scale = 1.0 / m as f64;
    Ok(Envelope {
        dt,
        magnitude: buf.iter().map(|c| c.norm() * scale).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arrival {
    pub time: f64,
    pub amplitude: f64,
}

/// Envelope peaks above `threshold · max`, at least `min_separation`
/// seconds apart, in time order.
pub fn pick_arrivals(env: &Envelope, threshold: f64, min_separation: f64) -> Result<Vec<Arrival>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return domain(format!("threshold must lie in (0, 1), got {threshold}"));
    }
    Ok(pick_arrivals_above(env, threshold * env.max(), min_separation))
}

/// Like [`pick_arrivals`] with an absolute level.
pub fn pick_arrivals_above(env: &Envelope, level: f64, min_separation: f64) -> Vec<Arrival> {
    let m = &env.magnitude;
    let n = m.len();
    if n < 3 || !(level > 0.0) {
        return Vec::new();
    }
    let mut peaks: Vec<Arrival> = (1..n - 1)
        .filter(|&i| m[i] > level && m[i] >= m[i - 1] && m[i] > m[i + 1])
        .map(|i| {
            let (y0, y1, y2) = (m[i - 1], m[i], m[i + 1]);
            let denom = y0 - 2.0 * y1 + y2;
            let (offset, amp) = if denom < 0.0 {
                let d = 0.5 * (y0 - y2) / denom;
                (d, y1 - 0.25 * (y0 - y2) * d)
            } else {
                (0.0, y1)
            };
            Arrival {
                time: (i as f64 + offset) * env.dt,
                amplitude: amp,
            }
        })
        .collect();
    peaks.sort_by(|a, b| b.amplitude.partial_cmp(&a.amplitude).unwrap());
    let mut kept: Vec<Arrival> = Vec::new();
    for p in peaks {
        if kept.iter().all(|k| (k.time - p.time).abs() >= min_separation) {
            kept.push(p);
        }
    }
    kept.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
    kept
}

/// `Δpath / Δtime` between the first two arrivals.
pub fn group_velocity(arrivals: &[Arrival], paths: &[f64]) -> Result<f64> {
    if arrivals.len() < 2 || paths.len() < 2 {
        return Err(WaveError::Analysis(format!(
            "group velocity needs two arrivals with known paths, got {} arrivals and {} paths",
            arrivals.len(),
            paths.len()
        )));
    }
    let dt = arrivals[1].time - arrivals[0].time;
    if !(dt > 0.0) {
        return Err(WaveError::Analysis("arrivals are not in time order".into()));
    }
    Ok((paths[1] - paths[0]) / dt)
}

/// Field values at one instant, normalized to unit peak.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub time: f64,
    pub positions: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn snapshot(field: &TimeSeriesField, t: f64) -> Result<Snapshot> {
    let n = field.len();
    let end = (n.saturating_sub(1)) as f64 * field.dt;
    if n == 0 || !(t >= 0.0 && t <= end) {
        return domain(format!("snapshot time {t} outside [0, {end}]"));
    }
    let i = ((t / field.dt).round() as usize).min(n - 1);
    let raw: Vec<f64> = field.values.iter().map(|v| v[i]).collect();
    let peak = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let values = if peak > 0.0 {
        raw.iter().map(|v| v / peak).collect()
    } else {
        raw
    };
    Ok(Snapshot {
        time: i as f64 * field.dt,
        positions: field.positions.clone(),
        values,
    })
}

/// Morlet CWT magnitudes, indexed `[frequency][time]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CwtMap {
    pub dt: f64,
    pub frequencies: Vec<f64>,
    pub magnitude: Vec<Vec<f64>>,
}

impl CwtMap {
    /// `(frequency index, time index)` of the global maximum.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for (fi, row) in self.magnitude.iter().enumerate() {
            for (ti, &v) in row.iter().enumerate() {
                if v > best.2 {
                    best = (fi, ti, v);
                }
            }
        }
        (best.0, best.1)
    }

    /// Maximum over time for each frequency.
    pub fn frequency_profile(&self) -> Vec<f64> {
        self.magnitude.iter().map(|r| r.iter().fold(0.0f64, |m, &v| m.max(v))).collect()
    }

    /// Indices of local maxima of the frequency profile above `fraction` of its peak.
    pub fn ridges(&self, fraction: f64) -> Vec<usize> {
        let p = self.frequency_profile();
        let top = p.iter().fold(0.0f64, |m, &v| m.max(v));
        (0..p.len())
            .filter(|&i| {
                let left = i == 0 || p[i] > p[i - 1];
                let right = i + 1 == p.len() || p[i] >= p[i + 1];
                left && right && p[i] >= fraction * top
            })
            .collect()
    }
}

/// Fourier transform of the analytic Morlet wavelet, scaled so that a
/// sinusoid of amplitude `A` at the matched scale gives `|W| = A`.
fn morlet_hat(w: f64) -> f64 {
    if w <= 0.0 {
        0.0
    } else {
        2.0 * (-0.5 * (w - MORLET_OMEGA0).powi(2)).exp()
    }
}

/// Complex Morlet transform by frequency-domain multiplication.
pub fn cwt_spectrum(signal: &[f64], dt: f64, frequencies: &[f64]) -> Result<CwtMap> {
    if frequencies.is_empty() {
        return domain("CWT needs at least one frequency");
    }
    let nyquist = 0.5 / dt;
    if let Some(f) = frequencies.iter().find(|&&f| !(f > 0.0 && f < nyquist)) {
        return domain(format!("CWT frequency {f} outside (0, {nyquist})"));
    }
    let n = signal.len();
    if n == 0 {
        return domain("CWT of an empty signal");
    }
    let m = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);
    let mut spec: Vec<Complex64> = signal.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    spec.resize(m, Complex64::new(0.0, 0.0));
    fwd.process(&mut spec);
    let magnitude = frequencies
        .iter()
        .map(|&f| {
            let a = MORLET_OMEGA0 / (2.0 * PI * f);
            let mut buf: Vec<Complex64> = spec
                .iter()
                .enumerate()
                .map(|(k, &x)| {
                    let kk = if k <= m / 2 { k as f64 } else { k as f64 - m as f64 };
                    let w = 2.0 * PI * kk / (m as f64 * dt);
                    x * morlet_hat(a * w)
                })
                .collect();
            inv.process(&mut buf);
            buf[..n].iter().map(|c| c.norm() / m as f64).collect()
        })
        .collect();
    Ok(CwtMap {
        dt,
        frequencies: frequencies.to_vec(),
        magnitude,
    })
}

/// Admissibility integral `∫₀^∞ |ψ̂(ξ)|² / ξ dξ` of the scaled wavelet.
pub fn morlet_admissibility() -> f64 {
    let f = |x: f64| if x <= 0.0 { 0.0 } else { morlet_hat(x).powi(2) / x };
    let upper = MORLET_OMEGA0 + 12.0;
    adaptive_simpson(f, 1e-6, 1.0, 1e-10) + adaptive_simpson(f, 1.0, upper, 1e-10)
}

/// CWT energy over signal energy for a log-spaced frequency grid.
pub fn cwt_energy_ratio(signal: &[f64], dt: f64, f_lo: f64, f_hi: f64, count: usize) -> Result<f64> {
    if count < 2 || !(f_lo > 0.0 && f_hi > f_lo) {
        return domain("energy check needs at least two increasing positive frequencies");
    }
    let step = (f_hi / f_lo).ln() / (count - 1) as f64;
    let freqs: Vec<f64> = (0..count).map(|i| f_lo * (i as f64 * step).exp()).collect();
    let map = cwt_spectrum(signal, dt, &freqs)?;
    let cwt: f64 = map.magnitude.iter().flatten().map(|v| v * v).sum::<f64>() * dt * step;
    let energy: f64 = signal.iter().map(|v| v * v).sum::<f64>() * dt;
    if energy == 0.0 {
        return Err(WaveError::Analysis("signal has zero energy".into()));
    }
    Ok(2.0 * cwt / (morlet_admissibility() * energy))
}

/// Width of the envelope around its global maximum at half that maximum.
pub fn half_amplitude_duration(env: &[f64], dt: f64) -> f64 {
    let (peak_i, peak) = env
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    if peak == 0.0 {
        return 0.0;
    }
    let half = 0.5 * peak;
    let mut left = 0.0;
    for i in (0..peak_i).rev() {
        if env[i] < half {
            left = i as f64 + (half - env[i]) / (env[i + 1] - env[i]);
            break;
        }
    }
    let mut right = (env.len() - 1) as f64;
    for i in peak_i + 1..env.len() {
        if env[i] < half {
            right = (i - 1) as f64 + (env[i - 1] - half) / (env[i - 1] - env[i]);
            break;
        }
    }
    (right - left) * dt
}

/// First-order crack reflection paths from a source at `x = 0` to a
/// receiver at `x = length`: via the left end, and via the right end.
pub fn reflection_paths(length: f64, crack_position: f64) -> Vec<f64> {
    let mut p = vec![length + 2.0 * crack_position, 3.0 * length - 2.0 * crack_position];
    p.sort_by(|a, b| a.partial_cmp(b).unwrap());
    p.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * length);
    p
}

/// Geometry and timing of a pitch-catch crack measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrackGate {
    /// Source to receiver distance (m).
    pub direct_path: f64,
    /// Time of the excitation envelope peak (s).
    pub burst_center: f64,
    /// Excitation support (s), also the minimum arrival separation.
    pub burst_duration: f64,
    /// Flaw path lengths (m).
    pub flaw_paths: Vec<f64>,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrackMetrics {
    pub direct_amplitude: f64,
    pub direct_arrival: f64,
    pub measured_velocity: f64,
    pub flaw_amplitude: f64,
    pub flaw_arrival: Option<f64>,
    pub flaw_arrivals: usize,
    pub below_detection: bool,
}

/// Direct and crack-reflected packet measures at the receiver.
///
/// The direct packet is the strongest envelope peak of the first wave
/// group, which ends where the earliest flaw gate could open.
/// With a `baseline` (the uncracked response) flaw packets are picked from
/// the difference signal; otherwise from the signal itself, ignoring the
/// direct packet.
pub fn crack_metrics(signal: &[f64], dt: f64, gate: &CrackGate, baseline: Option<&[f64]>) -> Result<CrackMetrics> {
    let env = envelope(signal, dt)?;
    let arrivals = pick_arrivals(&env, gate.threshold, gate.burst_duration)?;
    let first = *arrivals
        .first()
        .ok_or_else(|| WaveError::Analysis("no packet above threshold at the receiver".into()))?;
    let transit = first.time - gate.burst_center;
    if !(transit > 0.0) {
        return Err(WaveError::Analysis(format!("direct packet at {} precedes the excitation peak", first.time)));
    }
    // a dispersive direct packet can split into several peaks; take the
    // strongest one ahead of the earliest possible flaw gate
    let shortest = gate.flaw_paths.iter().copied().fold(f64::INFINITY, f64::min);
    let horizon = gate.burst_center + shortest * transit / gate.direct_path * (1.0 - GATE_FRACTION);
    let direct = arrivals
        .iter()
        .copied()
        .filter(|a| a.time < horizon)
        .fold(first, |best, a| if a.amplitude > best.amplitude { a } else { best });
    let velocity = gate.direct_path / (direct.time - gate.burst_center);
    let level = gate.threshold * env.max();

    let flaw_candidates = match baseline {
        Some(b) => {
            if b.len() != signal.len() {
                return Err(WaveError::Analysis("baseline and signal lengths differ".into()));
            }
            let residual: Vec<f64> = signal.iter().zip(b).map(|(s, b)| s - b).collect();
            pick_arrivals_above(&envelope(&residual, dt)?, level, gate.burst_duration)
        }
        None => arrivals
            .iter()
            .copied()
            .filter(|a| (a.time - direct.time).abs() >= gate.burst_duration)
            .collect(),
    };
    let gates: Vec<(f64, f64)> = gate
        .flaw_paths
        .iter()
        .map(|&p| {
            let tau = p / velocity;
            (gate.burst_center + tau * (1.0 - GATE_FRACTION), gate.burst_center + tau * (1.0 + GATE_FRACTION))
        })
        .collect();
    let gated: Vec<Arrival> = flaw_candidates
        .into_iter()
        .filter(|a| gates.iter().any(|&(lo, hi)| a.time >= lo && a.time <= hi))
        .collect();
    // like the direct packet, the flaw packet is the strongest peak inside
    // the earliest gate that caught anything
    let first = gated.first().map(|a0| {
        let (lo, hi) = gates
            .iter()
            .copied()
            .filter(|&(lo, hi)| a0.time >= lo && a0.time <= hi)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |acc, g| (acc.0.min(g.0), acc.1.max(g.1)));
        gated
            .iter()
            .copied()
            .filter(|a| a.time >= lo && a.time <= hi)
            .fold(*a0, |best, a| if a.amplitude > best.amplitude { a } else { best })
    });
    Ok(CrackMetrics {
        direct_amplitude: direct.amplitude,
        direct_arrival: direct.time,
        measured_velocity: velocity,
        flaw_amplitude: first.map_or(0.0, |a| a.amplitude),
        flaw_arrival: first.map(|a| a.time),
        flaw_arrivals: gated.len(),
        below_detection: first.is_none(),
    })
}
