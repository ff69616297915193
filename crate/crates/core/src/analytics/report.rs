use super::configurations::BayDims;
use super::kernel::{expected_rehandles, expected_rehandles_to_empty};
use super::models::{PlacementModel, RelocationPolicy};
use super::monte_carlo::monte_carlo_oracle;
use super::AnalyticsError;
use crate::scalar::Scalar;
use crate::Rational;
use serde::Serialize;
use std::io::Write;

/// One line of the rehandle table. Empty cells mark values that do not exist
/// (a blocked pick in a single-row bay, or no trials requested).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    #[serde(rename = "R")]
    pub rows: u32,
    #[serde(rename = "T")]
    pub max_tier: u32,
    pub k: u32,
    pub v_k: Option<f64>,
    pub v_to_empty: Option<f64>,
    pub mc_mean: Option<f64>,
    pub mc_se: Option<f64>,
    pub trials: u64,
    pub seed: u64,
}

fn exact_or_none(
    r: Result<Rational, AnalyticsError>,
) -> Result<Option<f64>, AnalyticsError> {
    match r {
        Ok(v) => Ok(Some(Scalar::to_f64(&v))),
        Err(AnalyticsError::RelocationImpossible { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Rows for `1 ≤ k ≤ min(kmax, R·T)`. The analytic columns use exact
/// arithmetic; `trials == 0` leaves the Monte Carlo columns empty.
pub fn rehandle_table(
    dims: BayDims,
    kmax: u32,
    placement: &dyn PlacementModel,
    relocation: &dyn RelocationPolicy,
    trials: u64,
    seed: u64,
) -> Result<Vec<ReportRow>, AnalyticsError> {
    dims.check(0)?;
    let mut out = Vec::new();
    for k in 1..=kmax.min(dims.capacity()) {
        let v_k = exact_or_none(expected_rehandles::<Rational>(k, dims, placement, relocation))?;
        let v_to_empty = exact_or_none(expected_rehandles_to_empty::<Rational>(k, dims, placement, relocation))?;
        let (mc_mean, mc_se) = if trials > 0 {
            let est = monte_carlo_oracle(k, dims, placement, relocation, trials, seed)?;
            if est.trials > 0 {
                (Some(est.mean), Some(est.standard_error))
            } else {
                (None, None)
            }
        } else {
            (None, None)
        };
        out.push(ReportRow {
            rows: dims.rows,
            max_tier: dims.max_tier,
            k,
            v_k,
            v_to_empty,
            mc_mean,
            mc_se,
            trials,
            seed,
        });
    }
    Ok(out)
}

pub fn write_csv<W: Write>(rows: &[ReportRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(["R", "T", "k", "v_k", "v_to_empty", "mc_mean", "mc_se", "trials", "seed"])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::{LowestOtherRelocation, UniformPlacement};
    use super::*;

    #[test]
    fn csv_layout() {
        let rows = rehandle_table(BayDims::new(2, 2).unwrap(), 2, &UniformPlacement, &LowestOtherRelocation, 0, 9).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "R,T,k,v_k,v_to_empty,mc_mean,mc_se,trials,seed\n2,2,1,0.0,0.0,,,0,9\n2,2,2,0.25,0.25,,,0,9\n"
        );
    }

    #[test]
    fn single_row_leaves_blanks() {
        let rows = rehandle_table(BayDims::new(1, 3).unwrap(), 5, &UniformPlacement, &LowestOtherRelocation, 100, 1).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].v_k, Some(0.0));
        assert_eq!(rows[1].v_k, None);
    }
}
