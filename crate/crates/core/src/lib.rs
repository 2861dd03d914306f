//! Wave propagation in 1D rods and Timoshenko beams with B-spline wavelet
//! on the interval (BSWI) elements solved in the Laplace domain, plus a
//! conventional FEM/Newmark reference path and signal analysis tools.

pub mod analysis;
pub mod basis;
pub mod cli;
pub mod element;
pub mod error;
pub mod linalg;
pub mod excitation;
pub mod laplace;
pub mod mesh;
pub mod newmark;
pub mod output;
pub mod scenario;

pub use error::{Result, WaveError};
