//! Gauss-Legendre rules and composite panel integration.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Node placement within a panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PanelScheme {
    GaussLegendre,
    Midpoint,
}

/// Composite rule on `[a, b]`: equal panels no wider than `max_panel`, each
/// carrying `nodes` points of `scheme`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CompositeRule {
    pub fn new(a: f64, b: f64, max_panel: f64, nodes: usize, scheme: PanelScheme) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && max_panel.is_finite()) {
            return Err(Error::NonFinite("quadrature interval"));
        }
        if b <= a {
            return Err(Error::param("interval", "upper limit must exceed lower"));
        }
        if max_panel <= 0.0 || nodes == 0 {
            return Err(Error::param("panel", "panel width and node count must be positive"));
        }
        let panels = ((b - a) / max_panel).ceil().max(1.0) as usize;
        let h = (b - a) / panels as f64;
        let (ref_nodes, ref_weights) = match scheme {
            PanelScheme::GaussLegendre => gauss_legendre(nodes),
            PanelScheme::Midpoint => (
                (0..nodes).map(|k| -1.0 + (2 * k + 1) as f64 / nodes as f64).collect(),
                vec![2.0 / nodes as f64; nodes],
            ),
        };
        let mut out = Self {
            nodes: Vec::with_capacity(panels * nodes),
            weights: Vec::with_capacity(panels * nodes),
        };
        for k in 0..panels {
            let mid = a + (k as f64 + 0.5) * h;
            for (z, w) in ref_nodes.iter().zip(&ref_weights) {
                out.nodes.push(mid + 0.5 * h * z);
                out.weights.push(0.5 * h * w);
            }
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }
}
