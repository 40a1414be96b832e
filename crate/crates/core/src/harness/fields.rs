//! Seeded smooth test fields: `xi^m (1 - xi)^r p(xi)` with a random cubic `p`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grid::{Field, Grid, Side};

pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestField {
    pub coeffs: Vec<f64>,
    pub vanish: f64,
    pub right: i32,
}

impl TestField {
    /// Constant term in `[1, 2]` and the rest in `[-1, 1]`, so the field is not small.
    pub fn random(rng: &mut impl Rng, vanish: f64, right: i32) -> TestField {
        let mut coeffs = vec![rng.random_range(1.0..2.0)];
        coeffs.extend((0..3).map(|_| rng.random_range(-1.0..1.0)));
        TestField { coeffs, vanish, right }
    }

    pub fn eval(&self, xi: f64) -> f64 {
        let p = self.coeffs.iter().rev().fold(0.0, |acc, c| acc * xi + c);
        xi.powf(self.vanish) * (1.0 - xi).powi(self.right) * p
    }

    pub fn sample(&self, grid: &Arc<Grid>, side: Side) -> Field {
        Field::sample(grid, side, |x| self.eval(x), self.vanish)
    }
}

/// A background `phi/xi = 2^(0.9 sin(p(xi)))`, which stays inside `[1/2, 2]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Background {
    pub coeffs: Vec<f64>,
}

impl Background {
    pub fn random(rng: &mut impl Rng) -> Background {
        Background { coeffs: (0..4).map(|_| rng.random_range(-1.0..1.0)).collect() }
    }

    pub fn eval(&self, xi: f64) -> f64 {
        let p = self.coeffs.iter().rev().fold(0.0, |acc, c| acc * xi + c);
        (0.9 * std::f64::consts::LN_2 * p.sin()).exp()
    }

    pub fn sample(&self, grid: &Arc<Grid>) -> Field {
        Field::sample(grid, Side::X, |x| self.eval(x), 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = TestField::random(&mut rng(1, 0), 1.0, 1);
        let b = TestField::random(&mut rng(1, 0), 1.0, 1);
        let c = TestField::random(&mut rng(1, 1), 1.0, 1);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn vanishing_and_background_range() {
        let mut r = rng(3, 0);
        let f = TestField::random(&mut r, 2.0, 2);
        assert_eq!(f.eval(0.0), 0.0);
        assert_eq!(f.eval(1.0), 0.0);
        let g = make_grid(64, 1.0).unwrap();
        for _ in 0..50 {
            let b = Background::random(&mut r).sample(&g);
            assert!(b.values.iter().all(|v| (0.5..=2.0).contains(v)));
        }
    }
}
