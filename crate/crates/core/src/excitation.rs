//! Excitation signals and sampling parameters.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Window frequency of the dual-frequency burst (Hz).
pub const DUAL_WINDOW_FREQUENCY: f64 = 20e3;
/// Support of the dual-frequency burst (s).
pub const DUAL_DURATION: f64 = 50e-6;

/// A signal sampled from `t = 0` at a fixed step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSignal {
    pub dt: f64,
    pub samples: Vec<f64>,
    pub center_frequencies: Vec<f64>,
    /// Length of the nonzero support (s).
    pub duration: f64,
}

impl SampledSignal {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples.len()).map(move |n| n as f64 * self.dt)
    }

    /// Copy zero-padded (or truncated) to `n` samples.
    pub fn padded(&self, n: usize) -> Vec<f64> {
        let mut v = self.samples.clone();
        v.resize(n, 0.0);
        v
    }
}

fn check_step(dt: f64, fc: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return domain(format!("time step must be positive, got {dt}"));
    }
    if dt > 1.0 / (20.0 * fc) {
        log::info!(
            "time step {dt:e} s under-samples the {fc:e} Hz carrier (fewer than 20 points per cycle)"
        );
    }
    Ok(())
}

/// Hann-windowed sine burst of `n_cycles` periods at `fc`.
pub fn hanning_toneburst_value(fc: f64, n_cycles: u32, t: f64) -> f64 {
    let tf = n_cycles as f64 / fc;
    if t <= 0.0 || t >= tf {
        return 0.0;
    }
    0.5 * (1.0 - (2.0 * PI * fc * t / n_cycles as f64).cos()) * (2.0 * PI * fc * t).sin()
}

pub fn hanning_toneburst(fc: f64, n_cycles: u32, dt: f64) -> Result<SampledSignal> {
    if !(fc > 0.0) || !fc.is_finite() {
        return domain(format!("center frequency must be positive, got {fc}"));
    }
    if n_cycles == 0 {
        return domain("a toneburst needs at least one cycle");
    }
    check_step(dt, fc)?;
    let tf = n_cycles as f64 / fc;
    let n = (tf / dt).floor() as usize + 1;
    let samples = (0..n).map(|i| hanning_toneburst_value(fc, n_cycles, i as f64 * dt)).collect();
    Ok(SampledSignal {
        dt,
        samples,
        center_frequencies: vec![fc],
        duration: tf,
    })
}

/// Two half-amplitude carriers under a fixed 20 kHz Hann window.
pub fn dual_toneburst_value(fc1: f64, fc2: f64, t: f64) -> f64 {
    if t <= 0.0 || t >= DUAL_DURATION {
        return 0.0;
    }
    let w = 0.5 * (1.0 - (2.0 * PI * DUAL_WINDOW_FREQUENCY * t).cos());
    w * (0.5 * (2.0 * PI * fc1 * t).sin() + 0.5 * (2.0 * PI * fc2 * t).sin())
}

pub fn dual_toneburst(fc1: f64, fc2: f64, dt: f64) -> Result<SampledSignal> {
    for fc in [fc1, fc2] {
        if !(fc > 0.0) || !fc.is_finite() {
            return domain(format!("center frequencies must be positive, got {fc}"));
        }
    }
    check_step(dt, fc1.max(fc2))?;
    let n = (DUAL_DURATION / dt).floor() as usize + 1;
    let samples = (0..n).map(|i| dual_toneburst_value(fc1, fc2, i as f64 * dt)).collect();
    Ok(SampledSignal {
        dt,
        samples,
        center_frequencies: vec![fc1, fc2],
        duration: DUAL_DURATION,
    })
}

/// Time step `1/(f_max·spp)` and the smallest power-of-two sample count
/// covering `duration`.
pub fn sampling_plan(f_max: f64, spp: u32, duration: f64) -> Result<(f64, usize)> {
    if !(f_max > 0.0) || !f_max.is_finite() {
        return domain(format!("maximum frequency must be positive, got {f_max}"));
    }
    if spp == 0 {
        return domain("steps per period must be at least 1");
    }
    if !(duration > 0.0) || !duration.is_finite() {
        return domain(format!("duration must be positive, got {duration}"));
    }
    let dt = 1.0 / (f_max * spp as f64);
    let steps = (duration / dt - 1e-9).ceil().max(2.0) as usize;
    Ok((dt, steps.next_power_of_two()))
}

/// Shortest wavelength `c / f_max`.
pub fn min_wavelength(wave_speed: f64, f_max: f64) -> f64 {
    wave_speed / f_max
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rustfft::{num_complex::Complex64, FftPlanner};

    fn spectrum(x: &[f64], n: usize) -> Vec<f64> {
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        buf.resize(n, Complex64::new(0.0, 0.0));
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        buf.iter().map(|c| c.norm()).collect()
    }

    #[test]
    fn burst_endpoints_and_duration() {
        let s = hanning_toneburst(100e3, 5, 1e-6 / 3.0).unwrap();
        assert_eq!(s.samples[0], 0.0);
        assert_relative_eq!(s.duration, 5e-5, max_relative = 1e-12);
        assert_eq!(hanning_toneburst_value(100e3, 5, 5e-5), 0.0);
        assert_eq!(hanning_toneburst_value(100e3, 5, 6e-5), 0.0);
        assert_eq!(hanning_toneburst_value(100e3, 5, -1e-6), 0.0);
    }

    #[test]
    fn burst_peak() {
        let s = hanning_toneburst(100e3, 5, 0.33e-6).unwrap();
        let peak = s.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((0.95..=1.0).contains(&peak), "{peak}");
        // dense evaluation oracle
        let dense = (0..200_001)
            .map(|i| hanning_toneburst_value(100e3, 5, i as f64 * 5e-5 / 200_000.0).abs())
            .fold(0.0f64, f64::max);
        assert!(peak <= dense + 1e-12);
        assert!(dense <= 1.0);
    }

    #[test]
    fn burst_matches_millisecond_reading() {
        // with t in milliseconds the carrier is sin(200πt) and the window cos(40πt)
        for i in 1..50 {
            let t_ms = i as f64 * 1e-3;
            let lit = 0.5 * (1.0 - (40.0 * PI * t_ms).cos()) * (200.0 * PI * t_ms).sin();
            assert!((hanning_toneburst_value(100e3, 5, t_ms * 1e-3) - lit).abs() < 1e-12);
            let lit2 = 0.5 * (1.0 - (40.0 * PI * t_ms).cos())
                * (0.5 * (200.0 * PI * t_ms).sin() + 0.5 * (400.0 * PI * t_ms).sin());
            assert!((dual_toneburst_value(100e3, 200e3, t_ms * 1e-3) - lit2).abs() < 1e-12);
        }
    }

    #[test]
    fn burst_spectral_centroid() {
        let s = hanning_toneburst(100e3, 5, 1e-7).unwrap();
        let n = 1 << 16;
        let mag = spectrum(&s.samples, n);
        let df = 1.0 / (n as f64 * s.dt);
        let (num, den) = mag[..n / 2]
            .iter()
            .enumerate()
            .map(|(k, m)| (k as f64 * df * m * m, m * m))
            .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
        let centroid = num / den;
        assert!((centroid - 100e3).abs() < 5e3, "{centroid}");
    }

    #[test]
    fn dual_burst_has_two_peaks() {
        let s = dual_toneburst(100e3, 200e3, 1e-7).unwrap();
        assert_eq!(s.samples[0], 0.0);
        assert!(s.samples.iter().all(|v| v.abs() <= 1.0));
        let n = 1 << 16;
        let mag = spectrum(&s.samples, n);
        let df = 1.0 / (n as f64 * s.dt);
        let peak_near = |f: f64| {
            let lo = ((f - 30e3) / df) as usize;
            let hi = ((f + 30e3) / df) as usize;
            (lo..hi).max_by(|&a, &b| mag[a].partial_cmp(&mag[b]).unwrap()).unwrap() as f64 * df
        };
        assert!((peak_near(100e3) - 100e3).abs() < 3e3);
        assert!((peak_near(200e3) - 200e3).abs() < 3e3);
        // nothing between the two carriers rivals them
        let valley = mag[(150e3 / df) as usize];
        assert!(valley < 0.5 * mag[(100e3 / df) as usize]);
    }

    #[test]
    fn sampling_plan_values() {
        let (dt, n) = sampling_plan(150e3, 20, 5e-5).unwrap();
        assert_relative_eq!(dt, 1.0 / 3e6, max_relative = 1e-12);
        assert!((dt * 1e6 - 0.333).abs() < 1e-3);
        assert_eq!(n, 256);
        assert!(n as f64 * dt >= 5e-5);
        assert_relative_eq!(1.0 / 150e3, 6.666_666e-6, max_relative = 1e-6);
        let lambda = min_wavelength((200e9f64 / 7800.0).sqrt(), 150e3);
        assert!((lambda - 0.03375).abs() < 5e-5, "{lambda}");
        assert!(sampling_plan(0.0, 20, 1.0).is_err());
        assert!(sampling_plan(1.0, 0, 1.0).is_err());
    }

    #[test]
    fn invalid_inputs() {
        assert!(hanning_toneburst(0.0, 5, 1e-7).is_err());
        assert!(hanning_toneburst(1e5, 0, 1e-7).is_err());
        assert!(hanning_toneburst(1e5, 5, 0.0).is_err());
        assert!(dual_toneburst(1e5, -1.0, 1e-7).is_err());
    }
}
