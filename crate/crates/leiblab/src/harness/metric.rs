//! Finite metric spaces and the Lipschitz seminorm of a function on one.

use num_complex::Complex64;

use crate::{Error, Result};

/// A finite metric space: pairwise distances stored densely, validated for
/// symmetry, positivity off the diagonal, and the triangle inequality.
#[derive(Clone, Debug)]
pub struct FiniteMetric {
    points: usize,
    distances: Vec<f64>,
}

impl FiniteMetric {
    pub fn new(points: usize, distances: Vec<f64>) -> Result<FiniteMetric> {
        if points == 0 {
            return Err(Error::Malformed("metric space needs at least one point".into()));
        }
        if distances.len() != points * points {
            return Err(Error::DimMismatch {
                left: distances.len(),
                right: points * points,
                context: "distance matrix entries",
            });
        }
        let m = FiniteMetric { points, distances };
        let mut scale = 0.0f64;
        for i in 0..points {
            if m.dist(i, i) != 0.0 {
                return Err(Error::Malformed(format!("nonzero diagonal at point {i}")));
            }
            for j in 0..points {
                let d = m.dist(i, j);
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::Malformed(format!(
                        "distance d({i},{j}) = {d} is not a nonnegative real"
                    )));
                }
                if i != j && d == 0.0 {
                    return Err(Error::Malformed(format!(
                        "distinct points {i},{j} at distance zero"
                    )));
                }
                if (d - m.dist(j, i)).abs() > 0.0 {
                    return Err(Error::Malformed(format!(
                        "asymmetric distances between {i} and {j}"
                    )));
                }
                scale = scale.max(d);
            }
        }
        for i in 0..points {
            for j in 0..points {
                for k in 0..points {
                    if m.dist(i, k) > m.dist(i, j) + m.dist(j, k) + 1e-12 * (1.0 + scale) {
                        return Err(Error::Malformed(format!(
                            "triangle inequality fails on ({i},{j},{k})"
                        )));
                    }
                }
            }
        }
        Ok(m)
    }

    /// Euclidean distances between the given points; triangle inequality is
    /// then automatic.
    pub fn from_points(coords: &[Vec<f64>]) -> Result<FiniteMetric> {
        let points = coords.len();
        let mut distances = vec![0.0; points * points];
        for i in 0..points {
            for j in 0..points {
                if coords[j].len() != coords[i].len() {
                    return Err(Error::DimMismatch {
                        left: coords[i].len(),
                        right: coords[j].len(),
                        context: "point coordinates",
                    });
                }
                let d = coords[i]
                    .iter()
                    .zip(&coords[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                distances[i * points + j] = d;
            }
        }
        FiniteMetric::new(points, distances)
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.distances[i * self.points + j]
    }
}

/// Largest slope max_{x != y} |f(x) - f(y)| / d(x, y); the brute-force pair
/// scan is the definition, so there is nothing to approximate.
pub fn lipschitz_seminorm(m: &FiniteMetric, f: &[Complex64]) -> Result<f64> {
    if f.len() != m.points() {
        return Err(Error::DimMismatch {
            left: f.len(),
            right: m.points(),
            context: "function values vs metric points",
        });
    }
    let mut best = 0.0f64;
    for i in 0..m.points() {
        for j in (i + 1)..m.points() {
            best = best.max((f[i] - f[j]).norm() / m.dist(i, j));
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_metrics() {
        assert!(FiniteMetric::new(0, vec![]).is_err());
        assert!(FiniteMetric::new(2, vec![0.0, 1.0, 2.0, 0.0]).is_err()); // asymmetric
        assert!(FiniteMetric::new(2, vec![0.0, 0.0, 0.0, 0.0]).is_err()); // zero off-diagonal
        assert!(FiniteMetric::new(2, vec![0.5, 1.0, 1.0, 0.0]).is_err()); // nonzero diagonal
        // 1-2-10 violates the triangle inequality
        let d = vec![0.0, 1.0, 10.0, 1.0, 0.0, 2.0, 10.0, 2.0, 0.0];
        assert!(FiniteMetric::new(3, d).is_err());
    }

    #[test]
    fn constant_function_has_zero_slope() {
        let m = FiniteMetric::new(2, vec![0.0, 2.0, 2.0, 0.0]).unwrap();
        let f = vec![Complex64::new(5.0, -1.0); 2];
        assert_eq!(lipschitz_seminorm(&m, &f).unwrap(), 0.0);
    }

    #[test]
    fn two_point_slope() {
        let m = FiniteMetric::new(2, vec![0.0, 2.0, 2.0, 0.0]).unwrap();
        let f = vec![Complex64::new(0.0, 0.0), Complex64::new(3.0, 0.0)];
        assert_eq!(lipschitz_seminorm(&m, &f).unwrap(), 1.5);

        let short = vec![Complex64::new(0.0, 0.0)];
        assert!(lipschitz_seminorm(&m, &short).is_err());
    }

    #[test]
    fn euclidean_construction_and_domination() {
        let coords: Vec<Vec<f64>> = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.5],
            vec![-0.3, 2.0],
            vec![4.0, -1.0],
        ];
        let m = FiniteMetric::from_points(&coords).unwrap();
        let f: Vec<Complex64> = coords
            .iter()
            .map(|p| Complex64::new(p[0] * 2.0 - p[1], p[1] * 0.5))
            .collect();
        let l = lipschitz_seminorm(&m, &f).unwrap();
        // every pair obeys the reported slope, and one pair attains it
        let mut attained = false;
        for i in 0..4 {
            for j in (i + 1)..4 {
                let ratio = (f[i] - f[j]).norm() / m.dist(i, j);
                assert!(ratio <= l + 1e-15);
                if (ratio - l).abs() <= 1e-12 {
                    attained = true;
                }
            }
        }
        assert!(attained);
    }
}
