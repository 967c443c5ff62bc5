use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    TTest,
    ChiSquared,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub kind: TestKind,
    pub statistic: f64,
    pub p_value: f64,
    pub df: f64,
}

/// Two-sample comparison. For the chi-squared test both vectors hold binary
/// outcomes (0 or 1) and are tabulated into a 2×2 contingency table.
pub fn two_group_test(a: &[f64], b: &[f64], kind: TestKind) -> Result<TestResult> {
    match kind {
        TestKind::TTest => student_t_test(a, b),
        TestKind::ChiSquared => {
            let mut table = [[0u64; 2]; 2];
            for (row, group) in [a, b].into_iter().enumerate() {
                for &v in group {
                    let col = if v == 0.0 {
                        0
                    } else if v == 1.0 {
                        1
                    } else {
                        return Err(Error::DegenerateInput(format!(
                            "chi-squared outcome {v} is not binary"
                        )));
                    };
                    table[row][col] += 1;
                }
            }
            chi_squared_2x2(table)
        }
    }
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let ss = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    (mean, ss)
}

/// Classic Student's t-test with pooled variance, two-tailed.
pub fn student_t_test(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::TooFewSamples(format!(
            "t-test needs two samples per group, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (ma, ssa) = mean_var(a);
    let (mb, ssb) = mean_var(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let df = na + nb - 2.0;
    let pooled = (ssa + ssb) / df;
    if !(pooled > 0.0) {
        return Err(Error::DegenerateVariance);
    }
    let t = (ma - mb) / (pooled * (1.0 / na + 1.0 / nb)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(TestResult {
        kind: TestKind::TTest,
        statistic: t,
        p_value: p,
        df,
    })
}

/// Pearson's chi-squared on a 2×2 table, no continuity correction.
pub fn chi_squared_2x2(table: [[u64; 2]; 2]) -> Result<TestResult> {
    let rows = [table[0][0] + table[0][1], table[1][0] + table[1][1]];
    let cols = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
    let total = (rows[0] + rows[1]) as f64;
    let mut stat = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let expected = rows[i] as f64 * cols[j] as f64 / total;
            if !(expected >= 1.0) {
                return Err(Error::SparseCell);
            }
            stat += (table[i][j] as f64 - expected).powi(2) / expected;
        }
    }
    let dist = ChiSquared::new(1.0).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok(TestResult {
        kind: TestKind::ChiSquared,
        statistic: stat,
        p_value: dist.sf(stat),
        df: 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    /// Two-tailed p for even degrees of freedom from the finite cosine
    /// series of the t distribution.
    fn series_p(t: f64, df: u32) -> f64 {
        assert!(df.is_multiple_of(2));
        let theta = (t.abs() / (df as f64).sqrt()).atan();
        let (s, c2) = (theta.sin(), theta.cos().powi(2));
        let mut term = 1.0;
        let mut inner = 1.0;
        for k in 1..(df / 2) {
            term *= c2 * (2 * k - 1) as f64 / (2 * k) as f64;
            inner += term;
        }
        let central = s * inner;
        1.0 - central
    }

    #[test]
    fn identical_groups() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let r = two_group_test(&a, &a, TestKind::TTest).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn swap_antisymmetry() {
        let a = [1.0, 2.5, 3.0, 4.2, 0.3];
        let b = [2.0, 2.1, 5.0];
        let ab = student_t_test(&a, &b).unwrap();
        let ba = student_t_test(&b, &a).unwrap();
        assert_eq!(ab.statistic, -ba.statistic);
        assert_eq!(ab.p_value, ba.p_value);
    }

    #[test]
    fn separated_normals_against_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a: Vec<f64> = Normal::new(0.0, 1.0)
            .unwrap()
            .sample_iter(&mut rng)
            .take(30)
            .collect();
        let b: Vec<f64> = Normal::new(5.0, 1.0)
            .unwrap()
            .sample_iter(&mut rng)
            .take(30)
            .collect();
        let r = student_t_test(&a, &b).unwrap();
        assert!(r.p_value < 1e-10, "p = {}", r.p_value);
        assert!((r.p_value - series_p(r.statistic, 58)).abs() < 1e-13);
        for t in [0.3, 1.0, 2.0, 3.5] {
            let p = student_t_test_p(t, 58.0);
            let q = series_p(t, 58);
            assert!((p - q).abs() < 1e-10, "t={t}: {p} vs {q}");
        }
    }

    fn student_t_test_p(t: f64, df: f64) -> f64 {
        2.0 * StudentsT::new(0.0, 1.0, df).unwrap().sf(t)
    }

    #[test]
    fn degenerate_variance() {
        assert!(matches!(
            student_t_test(&[1.0, 1.0], &[1.0, 1.0]),
            Err(Error::DegenerateVariance)
        ));
        assert!(matches!(
            student_t_test(&[1.0], &[1.0, 2.0]),
            Err(Error::TooFewSamples(_))
        ));
    }

    #[test]
    fn chi_squared_examples() {
        let r = chi_squared_2x2([[50, 50], [50, 50]]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        // 2×2 with known Pearson statistic: N(ad-bc)²/(r1 r2 c1 c2).
        let r = chi_squared_2x2([[30, 10], [15, 25]]).unwrap();
        let expect = 80.0 * (30.0 * 25.0 - 10.0 * 15.0f64).powi(2) / (40.0 * 40.0 * 45.0 * 35.0);
        assert!((r.statistic - expect).abs() < 1e-12);
        // df = 1 tail equals erfc(sqrt(x/2)).
        let tail = statrs::function::erf::erfc((expect / 2.0).sqrt());
        assert!((r.p_value - tail).abs() < 1e-12);
        assert!(matches!(
            chi_squared_2x2([[0, 5], [0, 5]]),
            Err(Error::SparseCell)
        ));

        let from_vectors = two_group_test(
            &[1.0, 1.0, 0.0, 0.0],
            &[1.0, 0.0, 1.0, 0.0],
            TestKind::ChiSquared,
        )
        .unwrap();
        assert_eq!(from_vectors.statistic, 0.0);
    }
}
