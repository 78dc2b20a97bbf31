//! Median, sample standard deviation and the two-sided Mann-Whitney U test.

use serde::Serialize;
use statrs::function::erf::erfc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("{0} requires a non-empty sample")]
    Empty(&'static str),
    #[error("sample standard deviation needs at least 2 values, got {0}")]
    TooFew(usize),
    #[error("sample contains a non-finite value")]
    NonFinite,
}

pub fn median(values: &[f64]) -> Result<f64, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty("median"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Ok(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Square root of the unbiased (n - 1) sample variance.
pub fn sample_sd(values: &[f64]) -> Result<f64, StatsError> {
    let n = values.len();
    if n < 2 {
        return Err(StatsError::TooFew(n));
    }
    // Deviations from the first value: identical inputs give exactly zero.
    let origin = values[0];
    let mean = values.iter().map(|x| x - origin).sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|x| (x - origin - mean).powi(2)).sum();
    Ok((ss / (n - 1) as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MwMode {
    /// Exact when both samples have at most 8 values and there are no ties.
    #[default]
    Auto,
    Exact,
    Approx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MwMethod {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MannWhitneyResult {
    pub u_x: f64,
    pub u_y: f64,
    pub p_two_sided: f64,
    pub method: MwMethod,
    pub tie_corrected: bool,
}

/// Largest sample size for which [`MwMode::Auto`] enumerates exactly.
pub const AUTO_EXACT_MAX_N: usize = 8;

pub fn mann_whitney(x: &[f64], y: &[f64], mode: MwMode) -> Result<MannWhitneyResult, StatsError> {
    if x.is_empty() || y.is_empty() {
        return Err(StatsError::Empty("mann_whitney"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let (nx, ny) = (x.len(), y.len());
    let ranks = Midranks::of(x, y);
    // Doubled units keep midranks integral.
    let u_x2 = ranks.x_rank_sum2 - (nx * (nx + 1)) as i64;
    let u_x = u_x2 as f64 / 2.0;
    let u_y = (nx * ny) as f64 - u_x;
    let has_ties = ranks.tie_sizes.iter().any(|&t| t > 1);

    let exact = match mode {
        MwMode::Exact => true,
        MwMode::Approx => false,
        MwMode::Auto => nx.max(ny) <= AUTO_EXACT_MAX_N && !has_ties,
    };

    let p = if exact {
        exact_p(&ranks.all2, nx, ranks.x_rank_sum2)
    } else {
        normal_p(u_x, nx, ny, &ranks.tie_sizes)
    };
    Ok(MannWhitneyResult {
        u_x,
        u_y,
        p_two_sided: p,
        method: if exact { MwMethod::Exact } else { MwMethod::NormalApprox },
        tie_corrected: !exact && has_ties,
    })
}

struct Midranks {
    /// Twice the midrank of every pooled observation.
    all2: Vec<i64>,
    x_rank_sum2: i64,
    tie_sizes: Vec<usize>,
}

impl Midranks {
    fn of(x: &[f64], y: &[f64]) -> Self {
        let mut pooled: Vec<(f64, bool)> = x.iter().map(|&v| (v, true)).chain(y.iter().map(|&v| (v, false))).collect();
        pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = pooled.len();
        let mut all2 = Vec::with_capacity(n);
        let mut x_rank_sum2 = 0;
        let mut tie_sizes = Vec::new();
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j + 1 < n && pooled[j + 1].0 == pooled[i].0 {
                j += 1;
            }
            // Ranks i+1..=j+1 share their mean; doubled that is i + j + 2.
            let r2 = (i + j + 2) as i64;
            for item in &pooled[i..=j] {
                all2.push(r2);
                if item.1 {
                    x_rank_sum2 += r2;
                }
            }
            tie_sizes.push(j - i + 1);
            i = j + 1;
        }
        Self {
            all2,
            x_rank_sum2,
            tie_sizes,
        }
    }
}

/// Exact permutation p-value: counts every size-`nx` subset of the pooled
/// doubled ranks by its rank sum.
fn exact_p(all2: &[i64], nx: usize, observed2: i64) -> f64 {
    let max_sum: usize = all2.iter().map(|&r| r as usize).sum();
    // counts[k][s]: subsets of size k with doubled rank sum s.
    let mut counts = vec![vec![0u128; max_sum + 1]; nx + 1];
    counts[0][0] = 1;
    for &r in all2 {
        let r = r as usize;
        for k in (1..=nx).rev() {
            let (lower, upper) = counts.split_at_mut(k);
            let prev = &lower[k - 1];
            let cur = &mut upper[0];
            for s in (r..=max_sum).rev() {
                if prev[s - r] != 0 {
                    cur[s] += prev[s - r];
                }
            }
        }
    }
    let dist = &counts[nx];
    let observed = observed2 as usize;
    let total: u128 = dist.iter().sum();
    let le: u128 = dist[..=observed].iter().sum();
    let ge: u128 = dist[observed..].iter().sum();
    two_sided_from_counts(le, ge, total)
}

pub(crate) fn two_sided_from_counts(le: u128, ge: u128, total: u128) -> f64 {
    let tail = 2 * le.min(ge);
    if tail >= total {
        1.0
    } else {
        tail as f64 / total as f64
    }
}

/// Normal approximation with tie-corrected variance and continuity correction.
fn normal_p(u_x: f64, nx: usize, ny: usize, tie_sizes: &[usize]) -> f64 {
    let (nxf, nyf) = (nx as f64, ny as f64);
    let n = nxf + nyf;
    let mean = nxf * nyf / 2.0;
    let tie_term: f64 = tie_sizes.iter().map(|&t| (t as f64).powi(3) - t as f64).sum();
    let var = if n > 1.0 {
        nxf * nyf / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)))
    } else {
        0.0
    };
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((u_x - mean).abs() - 0.5).max(0.0) / var.sqrt();
    erfc(z / std::f64::consts::SQRT_2).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn median_examples() {
        assert_eq!(median(&[2.0, 1.0, 3.0]).unwrap(), 2.0);
        assert_eq!(median(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 2.5);
        assert_relative_eq!(median(&[0.40, 0.50]).unwrap(), 0.45, epsilon = 1e-15);
        assert_eq!(median(&[]), Err(StatsError::Empty("median")));
    }

    #[test]
    fn sd_examples() {
        assert_eq!(sample_sd(&[5.0, 5.0, 5.0]).unwrap(), 0.0);
        assert_relative_eq!(sample_sd(&[1.0, 3.0]).unwrap(), 2f64.sqrt(), epsilon = 1e-15);
        // mean 5, squared deviations sum to 32, 32 / 7.
        let expected = (32.0f64 / 7.0).sqrt();
        assert_relative_eq!(sample_sd(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]).unwrap(), expected, epsilon = 1e-14);
        assert_relative_eq!(expected, 2.138, epsilon = 5e-4);
        assert_eq!(sample_sd(&[1.0]), Err(StatsError::TooFew(1)));
    }

    #[test]
    fn exact_small_cases() {
        let r = mann_whitney(&[1.0, 2.0], &[3.0, 4.0], MwMode::Auto).unwrap();
        assert_eq!(r.u_x, 0.0);
        assert_eq!(r.u_y, 4.0);
        assert_eq!(r.method, MwMethod::Exact);
        assert_eq!(r.p_two_sided, 1.0 / 3.0);
        let swapped = mann_whitney(&[3.0, 4.0], &[1.0, 2.0], MwMode::Auto).unwrap();
        assert_eq!(swapped.p_two_sided, r.p_two_sided);

        let r = mann_whitney(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], MwMode::Auto).unwrap();
        assert_eq!(r.u_x, 0.0);
        assert_eq!(r.p_two_sided, 0.1);
    }

    #[test]
    fn midranks_for_ties() {
        let r = mann_whitney(&[1.0, 2.0, 2.0], &[2.0, 3.0], MwMode::Auto).unwrap();
        // Pooled ranks: 1, 3, 3, 3, 5. x rank sum = 7, U_x = 7 - 6 = 1.
        assert_eq!(r.u_x, 1.0);
        assert_eq!(r.u_y, 5.0);
        assert_eq!(r.method, MwMethod::NormalApprox);
        assert!(r.tie_corrected);
    }

    #[test]
    fn auto_switches_to_normal_for_larger_samples() {
        let x: Vec<f64> = (0..9).map(f64::from).collect();
        let y: Vec<f64> = (20..29).map(f64::from).collect();
        let r = mann_whitney(&x, &y, MwMode::Auto).unwrap();
        assert_eq!(r.method, MwMethod::NormalApprox);
        assert!(!r.tie_corrected);
        assert!(r.p_two_sided < 0.001);
    }

    #[test]
    fn normal_approx_reference_value() {
        // U = 0, nx = ny = 9: z = (40.5 - 0.5) / sqrt(81 * 19 / 12) = 3.5326...
        let x: Vec<f64> = (0..9).map(f64::from).collect();
        let y: Vec<f64> = (20..29).map(f64::from).collect();
        let r = mann_whitney(&x, &y, MwMode::Approx).unwrap();
        let z = 40.0 / (81.0f64 * 19.0 / 12.0).sqrt();
        assert_relative_eq!(r.p_two_sided, erfc(z / 2f64.sqrt()), epsilon = 1e-15);
        // scipy.stats.mannwhitneyu(asymptotic, continuity) gives 4.1229480e-4.
        assert_relative_eq!(r.p_two_sided, 4.122_948_0e-4, epsilon = 1e-10);
    }

    #[test]
    fn all_tied_gives_one() {
        let r = mann_whitney(&[0.5, 0.5], &[0.5], MwMode::Auto).unwrap();
        assert_eq!(r.p_two_sided, 1.0);
        let r = mann_whitney(&[0.5, 0.5], &[0.5], MwMode::Exact).unwrap();
        assert_eq!(r.p_two_sided, 1.0);
    }

    #[test]
    fn empty_sample_rejected() {
        assert_eq!(mann_whitney(&[], &[1.0], MwMode::Auto), Err(StatsError::Empty("mann_whitney")));
    }
}
