//! LWFEM rod responses against the closed-form free-free wave solution.

use wavesim::excitation::hanning_toneburst_value;
use wavesim::mesh::ElementKind;
use wavesim::scenario::{prepare, simulate, SimConfig};

/// Running integral of the 100 kHz, 5-cycle burst on a fine grid.
struct BurstIntegral {
    h: f64,
    g: Vec<f64>,
}

impl BurstIntegral {
    fn new() -> Self {
        let h = 1e-9;
        let n = (5e-5 / h) as usize + 1;
        let mut g = vec![0.0; n];
        for i in 1..n {
            let (a, b) = ((i - 1) as f64 * h, i as f64 * h);
            let m = 0.5 * (a + b);
            let f = |t| hanning_toneburst_value(100e3, 5, t);
            g[i] = g[i - 1] + h / 6.0 * (f(a) + 4.0 * f(m) + f(b));
        }
        Self { h, g }
    }

    fn at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let x = t / self.h;
        let i = x.floor() as usize;
        if i + 1 >= self.g.len() {
            return *self.g.last().unwrap();
        }
        let w = x - i as f64;
        self.g[i] * (1.0 - w) + self.g[i + 1] * w
    }
}

/// End force on a free-free rod: superposed images of the incident wave.
fn exact(x: f64, t: f64, l: f64, c: f64, ea: f64, g: &BurstIntegral) -> f64 {
    let mut u = 0.0;
    let mut n = 0;
    loop {
        let t1 = t - (2.0 * n as f64 * l + x) / c;
        if t1 <= 0.0 {
            break;
        }
        u += g.at(t1) + g.at(t - (2.0 * (n + 1) as f64 * l - x) / c);
        n += 1;
    }
    u * c / ea
}

fn rod_error(epw: f64, spp: u32, g: &BurstIntegral) -> f64 {
    let mut cfg = SimConfig::default();
    cfg.mesh.element = ElementKind::BswiRod;
    cfg.mesh.epw = Some(epw);
    cfg.grid.spp = Some(spp);
    let p = prepare(&cfg).unwrap();
    let r = simulate(&p).unwrap();
    let c = p.material.bar_velocity();
    let ea = p.material.youngs_modulus * p.section.area();
    let l = cfg.geometry.length;
    let f = &r.waveforms;
    let i = f.labels.iter().position(|s| s == "mid").unwrap();
    let (mut num, mut den) = (0.0, 0.0);
    for (n, &u) in f.values[i].iter().enumerate() {
        let e = exact(0.5 * l, n as f64 * f.dt, l, c, ea, g);
        num += (u - e).powi(2);
        den += e * e;
    }
    (num / den).sqrt()
}

#[test]
fn exact_solution_is_self_consistent() {
    let g = BurstIntegral::new();
    // net impulse of a whole-cycle burst vanishes to quadrature accuracy
    assert!(g.at(1.0).abs() < 1e-12);
    // before the first transit the mid-point is at rest
    assert_eq!(exact(0.75, 1e-4, 1.5, 5063.7, 1.0, &g), 0.0);
}

#[test]
fn refined_lwfem_rod_matches_exact_solution() {
    let g = BurstIntegral::new();
    let err = rod_error(0.9, 10, &g);
    assert!(err < 5e-3, "EPW 0.9 relative L2 error {err:e}");
}

#[test]
fn lwfem_rod_error_falls_with_epw() {
    let g = BurstIntegral::new();
    let errs: Vec<f64> = [0.3, 0.45, 0.6, 0.9].iter().map(|&e| rod_error(e, 10, &g)).collect();
    for w in errs.windows(2) {
        assert!(w[1] < w[0], "{errs:?}");
    }
}
