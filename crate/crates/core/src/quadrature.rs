//! Quadrature rules on triangles (barycentric points, weights summing to 1)
//! and Gauss-Legendre rules on the unit interval.

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    /// Centroid rule, exact for affine functions.
    pub fn degree1() -> Self {
        QuadratureRule { points: vec![[1.0 / 3.0; 3]], weights: vec![1.0], degree: 1 }
    }

    /// Symmetric three-point rule with interior points, exact up to degree 2.
    /// Used for every bilinear form and load vector.
    pub fn degree2() -> Self {
        let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
        QuadratureRule { points: vec![[a, b, b], [b, a, b], [b, b, a]], weights: vec![1.0 / 3.0; 3], degree: 2 }
    }

    /// Seven-point rule exact up to degree 5, used for error norms and
    /// projections of analytic data.
    pub fn degree5() -> Self {
        let s15 = 15f64.sqrt();
        let a1 = (6.0 - s15) / 21.0;
        let b1 = (9.0 + 2.0 * s15) / 21.0;
        let a2 = (6.0 + s15) / 21.0;
        let b2 = (9.0 - 2.0 * s15) / 21.0;
        let w1 = (155.0 - s15) / 1200.0;
        let w2 = (155.0 + s15) / 1200.0;
        QuadratureRule {
            points: vec![
                [1.0 / 3.0; 3],
                [b1, a1, a1],
                [a1, b1, a1],
                [a1, a1, b1],
                [b2, a2, a2],
                [a2, b2, a2],
                [a2, a2, b2],
            ],
            weights: vec![9.0 / 40.0, w1, w1, w1, w2, w2, w2],
            degree: 5,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = ([f64; 3], f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Gauss-Legendre rule on `[0, 1]` with weights summing to 1: `(points, weights)`.
pub fn gauss_interval(n: usize) -> (Vec<f64>, Vec<f64>) {
    match n {
        1 => (vec![0.5], vec![1.0]),
        2 => {
            let d = 0.5 / 3f64.sqrt();
            (vec![0.5 - d, 0.5 + d], vec![0.5, 0.5])
        }
        _ => {
            let d = 0.5 * (0.6f64).sqrt();
            (vec![0.5 - d, 0.5, 0.5 + d], vec![5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])
        }
    }
}
