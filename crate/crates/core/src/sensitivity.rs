//! Latin hypercube sampling and partial rank correlation coefficients (PRCC)
//! of the basic reproduction number.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::model::{r0_closed_form, ModelParams, ParamId};

/// Default Latin hypercube sample count.
pub const DEFAULT_SAMPLES: usize = 1000;

/// Relative singular value below which a regression design counts as
/// rank-deficient.
const RANK_TOL: f64 = 1e-10;

/// Uniform sampling range for one parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamRange {
    pub param: ParamId,
    pub low: f64,
    pub high: f64,
}

impl ParamRange {
    pub fn new(param: ParamId, low: f64, high: f64) -> Result<Self> {
        let r = Self { param, low, high };
        r.validate()?;
        Ok(r)
    }

    /// `[(1 - frac) v, (1 + frac) v]` around the value `v` in `baseline`.
    pub fn around(baseline: &ModelParams, param: ParamId, frac: f64) -> Result<Self> {
        let v = baseline.get(param);
        Self::new(param, v * (1.0 - frac), v * (1.0 + frac))
    }

    pub fn validate(&self) -> Result<()> {
        if self.low.is_finite() && self.high.is_finite() && self.low < self.high {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "range for {} must satisfy low < high, got [{}, {}]",
                self.param, self.low, self.high
            )))
        }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.low + self.high)
    }
}

/// ±50% ranges about `baseline` for every parameter entering R0.
pub fn default_r0_ranges(baseline: &ModelParams) -> Result<Vec<ParamRange>> {
    ParamId::R0_INPUTS
        .iter()
        .map(|id| ParamRange::around(baseline, *id, 0.5))
        .collect()
}

/// `n × k` Latin hypercube sample, one column per range.
///
/// Each column has exactly one point in each of its `n` equal-width strata;
/// the stratum order is an independent seeded permutation per column.
pub fn lhs_sample(ranges: &[ParamRange], n: usize, seed: u64) -> Result<DMatrix<f64>> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 samples, got {n}")));
    }
    if ranges.is_empty() {
        return Err(Error::InvalidInput("no parameter ranges given".into()));
    }
    for r in ranges {
        r.validate()?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = DMatrix::zeros(n, ranges.len());
    let mut strata: Vec<usize> = (0..n).collect();
    for (j, r) in ranges.iter().enumerate() {
        strata.shuffle(&mut rng);
        let width = r.high - r.low;
        for (i, s) in strata.iter().enumerate() {
            let u: f64 = rng.random();
            out[(i, j)] = r.low + width * (*s as f64 + u) / n as f64;
        }
    }
    Ok(out)
}

/// Ranks starting at 1; tied values share the mean of the ranks they cover.
pub fn rank_transform(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::InvalidInput("cannot rank an empty list".into()));
    }
    ensure_finite(values, "values to rank")?;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|a, b| values[*a].total_cmp(&values[*b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start..end hold ranks start+1..=end.
        let mean = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = mean;
        }
        start = end;
    }
    Ok(ranks)
}

/// Residuals of `y` after least squares on `design`.
fn ols_residuals(design: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = design.clone().svd(true, true);
    let sv = &svd.singular_values;
    let largest = sv.max();
    if sv.min() <= RANK_TOL * largest {
        return Err(Error::Degenerate(
            "regression design is rank-deficient".into(),
        ));
    }
    let beta = svd
        .solve(y, RANK_TOL * largest)
        .map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(y - design * beta)
}

fn pearson(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let ma = a.mean();
    let mb = b.mean();
    let da = a.add_scalar(-ma);
    let db = b.add_scalar(-mb);
    let sa = da.norm();
    let sb = db.norm();
    // Variance left after the regression can be pure round-off, e.g. when the
    // output is an exact function of the other parameters. No partial
    // association remains, so report zero.
    let scale = a.len() as f64;
    if sa <= 1e-9 * scale || sb <= 1e-9 * scale {
        return 0.0;
    }
    (da.dot(&db) / (sa * sb)).clamp(-1.0, 1.0)
}

/// PRCC of `outputs` against each column of `samples`.
///
/// All columns and the output are rank transformed. For each column `j`, both
/// its ranks and the output ranks are regressed (with intercept) on the
/// remaining columns and the residuals are correlated.
pub fn prcc(samples: &DMatrix<f64>, outputs: &[f64]) -> Result<Vec<f64>> {
    let (n, k) = samples.shape();
    if outputs.len() != n {
        return Err(Error::InvalidInput(format!(
            "{n} sample rows but {} outputs",
            outputs.len()
        )));
    }
    if k == 0 || n < k + 2 {
        return Err(Error::InvalidInput(format!(
            "PRCC needs at least k + 2 rows; have {n} rows for {k} parameters"
        )));
    }
    let mut ranked = DMatrix::zeros(n, k);
    for j in 0..k {
        let col: Vec<f64> = samples.column(j).iter().copied().collect();
        ranked.set_column(j, &DVector::from_vec(rank_transform(&col)?));
    }
    let y = DVector::from_vec(rank_transform(outputs)?);

    (0..k)
        .map(|j| {
            let mut design = DMatrix::from_element(n, k, 1.0);
            for (c, other) in (1..).zip((0..k).filter(|o| *o != j)) {
                design.set_column(c, &ranked.column(other));
            }
            let xj: DVector<f64> = ranked.column(j).into_owned();
            let rx = ols_residuals(&design, &xj)?;
            let ry = ols_residuals(&design, &y)?;
            Ok(pearson(&rx, &ry))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrccResult {
    /// One coefficient per parameter, in range order.
    pub coefficients: Vec<(ParamId, f64)>,
    pub n: usize,
    pub seed: u64,
}

impl PrccResult {
    pub fn get(&self, id: ParamId) -> Option<f64> {
        self.coefficients
            .iter()
            .find(|(p, _)| *p == id)
            .map(|(_, v)| *v)
    }

    /// Parameter with the largest positive coefficient.
    pub fn most_positive(&self) -> Option<(ParamId, f64)> {
        self.coefficients
            .iter()
            .copied()
            .filter(|(_, v)| *v > 0.0)
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// LHS over `ranges`, R0 per row, then PRCC.
///
/// `ranges` must cover exactly the parameters entering R0. Rows are evaluated
/// in parallel but collected in row order.
pub fn prcc_r0(baseline: &ModelParams, ranges: &[ParamRange], n: usize, seed: u64) -> Result<PrccResult> {
    let mut covered: Vec<ParamId> = ranges.iter().map(|r| r.param).collect();
    covered.sort();
    let mut expected = ParamId::R0_INPUTS.to_vec();
    expected.sort();
    if covered != expected {
        return Err(Error::InvalidInput(format!(
            "ranges must cover exactly {:?}, got {:?}",
            ParamId::R0_INPUTS.map(ParamId::symbol),
            ranges.iter().map(|r| r.param.symbol()).collect::<Vec<_>>()
        )));
    }
    let samples = lhs_sample(ranges, n, seed)?;
    let outputs: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut p = *baseline;
            for (j, r) in ranges.iter().enumerate() {
                p.set(r.param, samples[(i, j)]);
            }
            r0_closed_form(&p)
        })
        .collect::<Result<_>>()?;
    let coeffs = prcc(&samples, &outputs)?;
    Ok(PrccResult {
        coefficients: ranges.iter().map(|r| r.param).zip(coeffs).collect(),
        n,
        seed,
    })
}
