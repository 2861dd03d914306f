//! Newmark time integration for the conventional reference path, and
//! waveform convergence measures.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, WaveError};
use crate::laplace::{Observe, TimeSeriesField};
use crate::linalg::BandMatrix;
use crate::mesh::GlobalSystem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewmarkParams {
    pub beta: f64,
    pub gamma: f64,
    pub dt: f64,
    pub steps: usize,
}

impl NewmarkParams {
    /// Average acceleration (`β = 1/4`, `γ = 1/2`).
    pub fn average_acceleration(dt: f64, steps: usize) -> Self {
        Self {
            beta: 0.25,
            gamma: 0.5,
            dt,
            steps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return domain(format!("time step must be positive, got {}", self.dt));
        }
        if !(self.beta > 0.0) || !(self.gamma > 0.0) {
            return domain(format!(
                "β and γ must be positive for the implicit scheme, got β = {}, γ = {}",
                self.beta, self.gamma
            ));
        }
        if !(self.gamma >= 0.5 && self.beta >= 0.5 * self.gamma) {
            log::warn!(
                "Newmark parameters β = {}, γ = {} are not unconditionally stable",
                self.beta,
                self.gamma
            );
        }
        Ok(())
    }
}

/// Displacement and velocity at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    pub displacement: Vec<f64>,
    pub velocity: Vec<f64>,
}

fn combine(a: &BandMatrix<f64>, alpha: f64, b: &BandMatrix<f64>) -> BandMatrix<f64> {
    let n = a.n();
    let bw = a.lower_bandwidth();
    let mut out = BandMatrix::zeros(n, bw, bw);
    for i in 0..n {
        for j in i.saturating_sub(bw)..(i + bw + 1).min(n) {
            let v = a.get(i, j) + alpha * b.get(i, j);
            if v != 0.0 {
                out.add(i, j, v);
            }
        }
    }
    out
}

/// Integrates `M ü + K u = load·signal(t)` from rest.
pub fn newmark_solve(
    system: &GlobalSystem,
    load: &[f64],
    signal: &[f64],
    params: &NewmarkParams,
    observe: Observe<'_>,
) -> Result<TimeSeriesField> {
    newmark_solve_from(system, load, signal, params, observe, None)
}

pub fn newmark_solve_from(
    system: &GlobalSystem,
    load: &[f64],
    signal: &[f64],
    params: &NewmarkParams,
    observe: Observe<'_>,
    initial: Option<&InitialState>,
) -> Result<TimeSeriesField> {
    params.validate()?;
    let n = system.n_dof();
    if load.len() != n {
        return Err(WaveError::Config(format!("load vector has {} entries for {n} DOFs", load.len())));
    }
    let (beta, gamma, dt) = (params.beta, params.gamma, params.dt);
    let a0 = 1.0 / (beta * dt * dt);
    let a2 = 1.0 / (beta * dt);
    let a3 = 1.0 / (2.0 * beta) - 1.0;
    let a6 = dt * (1.0 - gamma);
    let a7 = gamma * dt;

    let m = system.band_mass();
    let k = system.band_stiffness();
    let keff = combine(&k, a0, &m)
        .factor()
        .map_err(|e| WaveError::Solver(format!("effective stiffness: {e}")))?;

    let force = |step: usize| signal.get(step).copied().unwrap_or(0.0);
    let (mut u, mut v) = match initial {
        Some(s) => {
            if s.displacement.len() != n || s.velocity.len() != n {
                return Err(WaveError::Config("initial state has the wrong length".into()));
            }
            (s.displacement.clone(), s.velocity.clone())
        }
        None => (vec![0.0; n], vec![0.0; n]),
    };
    // M a₀ = F₀ − K u₀
    let ku = k.mul_vec(&u);
    let rhs: Vec<f64> = (0..n).map(|i| load[i] * force(0) - ku[i]).collect();
    let mut acc = if rhs.iter().all(|&x| x == 0.0) {
        vec![0.0; n]
    } else {
        m.clone()
            .factor()
            .map_err(|e| WaveError::Solver(format!("mass matrix: {e}")))?
            .solve(&rhs)
    };

    let (labels, positions): (Vec<String>, Vec<f64>) = match observe {
        Observe::AllDofs => system.labels().iter().map(|l| (l.name(), l.x)).unzip(),
        Observe::Probes(p) => p.iter().map(|p| (p.label.clone(), p.x)).unzip(),
    };
    let read = |u: &[f64]| -> Vec<f64> {
        match observe {
            Observe::AllDofs => u.to_vec(),
            Observe::Probes(p) => p.iter().map(|p| p.read(u)).collect(),
        }
    };
    let mut values: Vec<Vec<f64>> = vec![Vec::with_capacity(params.steps + 1); labels.len()];
    let push = |values: &mut Vec<Vec<f64>>, row: Vec<f64>| {
        for (c, x) in values.iter_mut().zip(row) {
            c.push(x);
        }
    };
    push(&mut values, read(&u));

    let mut work = vec![0.0; n];
    for step in 1..=params.steps {
        for i in 0..n {
            work[i] = a0 * u[i] + a2 * v[i] + a3 * acc[i];
        }
        let mut rhs = m.mul_vec(&work);
        let f = force(step);
        for i in 0..n {
            rhs[i] += load[i] * f;
        }
        keff.solve_in_place(&mut rhs);
        for i in 0..n {
            let a_new = a0 * (rhs[i] - u[i]) - a2 * v[i] - a3 * acc[i];
            v[i] += a6 * acc[i] + a7 * a_new;
            acc[i] = a_new;
            u[i] = rhs[i];
        }
        push(&mut values, read(&u));
    }
    let out = TimeSeriesField {
        dt,
        labels,
        positions,
        values,
    };
    if !out.is_finite() {
        return Err(WaveError::Solver("Newmark recursion produced non-finite values".into()));
    }
    Ok(out)
}

/// `u` sampled at `t_i = i·dt_new` by linear interpolation, `count` samples.
pub fn resample(values: &[f64], dt: f64, dt_new: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| {
            let pos = i as f64 * dt_new / dt;
            let j = pos.floor() as usize;
            if j + 1 >= values.len() {
                return values[values.len() - 1];
            }
            let frac = pos - j as f64;
            values[j] * (1.0 - frac) + values[j + 1] * frac
        })
        .collect()
}

/// `‖u − u_ref‖₂ / ‖u_ref‖₂` on the coarser of the two grids over the
/// common duration.
pub fn relative_l2_deviation(u: &[f64], dt: f64, reference: &[f64], dt_ref: f64) -> Result<f64> {
    if u.len() < 2 || reference.len() < 2 {
        return Err(WaveError::Analysis("series need at least two samples".into()));
    }
    let dt_c = dt.max(dt_ref);
    let common = ((u.len() - 1) as f64 * dt).min((reference.len() - 1) as f64 * dt_ref);
    let count = (common / dt_c + 1e-9).floor() as usize + 1;
    if count < 2 {
        return Err(WaveError::Analysis("series share fewer than two samples after resampling".into()));
    }
    let a = resample(u, dt, dt_c, count);
    let b = resample(reference, dt_ref, dt_c, count);
    let num: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if den == 0.0 {
        return if num == 0.0 {
            Ok(0.0)
        } else {
            Err(WaveError::Analysis("reference series is identically zero".into()))
        };
    }
    Ok(num / den)
}

/// One run of a parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRun {
    pub parameter: f64,
    pub dt: f64,
    pub values: Vec<f64>,
}

/// Deviation of every run from the run at `reference` (index into `runs`).
pub fn measure_convergence(runs: &[SweepRun], reference: usize) -> Result<Vec<(f64, f64)>> {
    let r = runs
        .get(reference)
        .ok_or_else(|| WaveError::Config(format!("reference index {reference} out of range")))?;
    runs.iter()
        .map(|run| Ok((run.parameter, relative_l2_deviation(&run.values, run.dt, &r.values, r.dt)?)))
        .collect()
}
