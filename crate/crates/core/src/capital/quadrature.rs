//! Gauss-Legendre rules on the unit interval.
//!
//! Nodes carry their distance to 1 alongside their position so integrands
//! with a singular upper endpoint can be evaluated without cancellation.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

/// Five-point Gauss-Legendre nodes on `[-1, 1]` as tabulated for the
/// single-factor conditional loss.
pub const TASCHE_NODES: [f64; 5] = [
    -0.906_179_845_9,
    -0.538_469_310_1,
    0.0,
    0.538_469_310_1,
    0.906_179_845_9,
];

/// Matching weights; the rule is symmetric, so `w_4 = w_2` and `w_5 = w_1`.
pub const TASCHE_WEIGHTS: [f64; 5] = [
    0.236_926_885_1,
    0.478_628_670_5,
    128.0 / 225.0,
    0.478_628_670_5,
    0.236_926_885_1,
];

/// `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes are the roots of `P_n`, found by Newton iteration from the
    /// Chebyshev-like initial guesses `cos(π(i - 1/4)/(n + 1/2))`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "a Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut derivative = 0.0;
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                derivative = dp;
                let dx = p / dp;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            if dp != 0.0 {
                derivative = dp;
            }
            let w = 2.0 / ((1.0 - x * x) * derivative * derivative);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        half * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(mid + half * t))
            .sum::<f64>()
    }
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// A node on `(0, 1)` with `complement = 1 - y` held separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitNode {
    pub y: f64,
    pub complement: f64,
    pub weight: f64,
}

/// Quadrature rule on `[0, 1]`; weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitIntervalRule {
    nodes: Vec<UnitNode>,
}

impl UnitIntervalRule {
    /// The five-point rule mapped by `y = (t + 1)/2`.
    pub fn tasche5() -> Self {
        let nodes = TASCHE_NODES
            .iter()
            .zip(TASCHE_WEIGHTS)
            .map(|(&t, w)| UnitNode {
                y: 0.5 * (t + 1.0),
                complement: 0.5 * (1.0 - t),
                weight: 0.5 * w,
            })
            .collect();
        Self { nodes }
    }

    /// Composite rule with panels halving in width towards both endpoints.
    ///
    /// Each half of the interval is split into `[2^-(k+1), 2^-k]` panels for
    /// `k = 1..=levels` plus a final panel reaching the endpoint, and every
    /// panel gets its own `points`-node Gauss-Legendre rule. Integrands with
    /// algebraic endpoint singularities converge geometrically in `levels`.
    pub fn graded(points: usize, levels: u32) -> Self {
        let base = GaussLegendre::new(points);
        let mut panels: Vec<(f64, f64)> = (1..=levels)
            .map(|k| (0.5f64.powi(k as i32 + 1), 0.5f64.powi(k as i32)))
            .collect();
        panels.push((0.0, 0.5f64.powi(levels as i32 + 1)));

        let mut nodes = Vec::with_capacity(2 * panels.len() * points);
        for &(lo, hi) in &panels {
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for (&t, &w) in base.nodes().iter().zip(base.weights()) {
                let near = mid + half * t;
                let weight = half * w;
                nodes.push(UnitNode {
                    y: near,
                    complement: 1.0 - near,
                    weight,
                });
                nodes.push(UnitNode {
                    y: 1.0 - near,
                    complement: near,
                    weight,
                });
            }
        }
        nodes.sort_by(|a, b| a.y.total_cmp(&b.y));
        Self { nodes }
    }

    pub fn nodes(&self) -> &[UnitNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Which rule evaluates the conditional-loss integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    /// The tabulated five-point rule. Fast, but only accurate to a few
    /// percent for the endpoint-singular integrands met in practice.
    Tasche5,
    /// Graded composite Gauss-Legendre rule.
    #[default]
    Graded,
}

pub const GRADED_POINTS: usize = 8;
pub const GRADED_LEVELS: u32 = 44;

impl QuadratureRule {
    pub fn unit_rule(self) -> &'static UnitIntervalRule {
        static TASCHE: OnceLock<UnitIntervalRule> = OnceLock::new();
        static GRADED: OnceLock<UnitIntervalRule> = OnceLock::new();
        match self {
            QuadratureRule::Tasche5 => TASCHE.get_or_init(UnitIntervalRule::tasche5),
            QuadratureRule::Graded => GRADED.get_or_init(|| UnitIntervalRule::graded(GRADED_POINTS, GRADED_LEVELS)),
        }
    }
}
