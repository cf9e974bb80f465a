//! Fixed-order Gauss–Legendre rules.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

/// A Gauss–Legendre rule on `[-1, 1]` with nodes in ascending order, so that
/// summation order is fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pairs: Vec<(f64, f64)>,
}

impl Rule {
    pub fn new(order: usize) -> Self {
        let order = NonZeroUsize::new(order).expect("quadrature order must be positive");
        let mut pairs = GaussLegendre::new(order).as_node_weight_pairs().to_vec();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { pairs }
    }

    pub fn order(&self) -> usize {
        self.pairs.len()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn nodes_on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.pairs.iter().map(move |&(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes_on(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Tensor-product rule over `[a, b] × [c, d]`.
    pub fn integrate_2d(&self, (a, b): (f64, f64), (c, d): (f64, f64), mut f: impl FnMut(f64, f64) -> f64) -> f64 {
        self.nodes_on(a, b).map(|(x, wx)| wx * self.nodes_on(c, d).map(|(y, wy)| wy * f(x, y)).sum::<f64>()).sum()
    }
}
