//! Truncated half-line grids. The continuum problem lives on [0, ∞); all
//! discrete work happens on [0, L] with either uniform spacing or mild
//! geometric stretching that concentrates nodes near the wall.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Node layout rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Stretching {
    Uniform,
    /// Consecutive cell widths grow by `ratio` (1 < ratio <= 1.05).
    Geometric { ratio: f64 },
}

/// Grid 0 = x_0 < x_1 < ... < x_M = L on the truncated half-line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfLineGrid {
    nodes: Vec<f64>,
    stretching: Stretching,
}

/// A periodic transverse direction with uniform spacing, used by the
/// multi-dimensional extension. Fields on a tensor grid are stored row-major
/// with the wall-normal index slowest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransverseAxis {
    /// Period length.
    pub length: f64,
    /// Number of nodes (and cells; the grid wraps).
    pub m: usize,
}

impl TransverseAxis {
    pub fn new(length: f64, m: usize) -> Result<Self> {
        Error::require(
            length > 0.0 && length.is_finite(),
            "transverse length must be positive",
        )?;
        Error::require(m >= 4, "transverse axis needs at least 4 nodes")?;
        Ok(TransverseAxis { length, m })
    }

    pub fn h(&self) -> f64 {
        self.length / self.m as f64
    }
}

impl HalfLineGrid {
    /// Uniform grid with `m` cells (m+1 nodes).
    pub fn uniform(l: f64, m: usize) -> Result<Self> {
        Self::validate_args(l, m)?;
        let h = l / m as f64;
        let mut nodes: Vec<f64> = (0..=m).map(|j| j as f64 * h).collect();
        nodes[0] = 0.0;
        nodes[m] = l;
        Ok(HalfLineGrid {
            nodes,
            stretching: Stretching::Uniform,
        })
    }

    /// Geometrically stretched grid: cell j has width h0·ratio^j.
    pub fn geometric(l: f64, m: usize, ratio: f64) -> Result<Self> {
        Self::validate_args(l, m)?;
        Error::require(
            ratio > 1.0 && ratio <= 1.05,
            format!("stretching ratio {ratio} outside (1, 1.05]"),
        )?;
        let rm = ratio.powi(m as i32);
        let h0 = l * (ratio - 1.0) / (rm - 1.0);
        let mut nodes = Vec::with_capacity(m + 1);
        let mut x = 0.0;
        let mut h = h0;
        nodes.push(0.0);
        for _ in 0..m {
            x += h;
            h *= ratio;
            nodes.push(x);
        }
        nodes[m] = l;
        Ok(HalfLineGrid {
            nodes,
            stretching: Stretching::Geometric { ratio },
        })
    }

    pub fn from_spec(l: f64, m: usize, stretching: Stretching) -> Result<Self> {
        match stretching {
            Stretching::Uniform => Self::uniform(l, m),
            Stretching::Geometric { ratio } => Self::geometric(l, m, ratio),
        }
    }

    fn validate_args(l: f64, m: usize) -> Result<()> {
        Error::require(l > 0.0 && l.is_finite(), "grid length must be positive")?;
        Error::require(m >= 64, format!("grid needs at least 64 cells, got {m}"))
    }

    /// Number of cells M (nodes are 0..=M).
    pub fn m(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Number of nodes, M + 1.
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Truncation length L.
    pub fn length(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn x(&self, j: usize) -> f64 {
        self.nodes[j]
    }

    /// Width of cell j (between nodes j and j+1).
    pub fn h(&self, j: usize) -> f64 {
        self.nodes[j + 1] - self.nodes[j]
    }

    pub fn min_h(&self) -> f64 {
        (0..self.m()).map(|j| self.h(j)).fold(f64::INFINITY, f64::min)
    }

    pub fn stretching(&self) -> Stretching {
        self.stretching
    }

    /// Trapezoid quadrature weights over the nodes.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let m = self.m();
        let mut w = vec![0.0; m + 1];
        for j in 0..m {
            let half = 0.5 * self.h(j);
            w[j] += half;
            w[j + 1] += half;
        }
        w
    }

    /// Self-similar refinement: double the cell count while keeping L and the
    /// stretching law, so every local spacing halves to leading order. Used by
    /// grid-convergence studies.
    pub fn refine(&self) -> Result<Self> {
        match self.stretching {
            Stretching::Uniform => Self::uniform(self.length(), 2 * self.m()),
            Stretching::Geometric { ratio } => {
                Self::geometric(self.length(), 2 * self.m(), ratio.sqrt())
            }
        }
    }
}
