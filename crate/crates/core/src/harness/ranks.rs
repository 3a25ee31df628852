use super::{HarnessError, ResultTable, REFERENCE_METHODS};

/// Per-method summary of ranks across tables.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodRank {
    pub method: String,
    pub best: f64,
    pub worst: f64,
    pub mean: f64,
    /// Rank in each input table; `None` where the method is absent.
    pub per_table: Vec<Option<f64>>,
}

/// 1-based ranks by descending value; tied values share the mean of the
/// positions they occupy.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|&v| {
            let above = values.iter().filter(|&&w| w > v).count();
            let tied = values.iter().filter(|&&w| w == v).count();
            above as f64 + (tied as f64 + 1.0) / 2.0
        })
        .collect()
}

/// Ranks the requested methods within each table on metric column `column`
/// and summarizes them. Methods missing from a table are skipped there.
pub fn aggregate_ranks_for(
    tables: &[ResultTable],
    column: usize,
    methods: &[String],
) -> Result<Vec<MethodRank>, HarnessError> {
    if tables.is_empty() {
        return Err(HarnessError::NoTables);
    }
    let mut per_method: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(tables.len()); methods.len()];
    for table in tables {
        let present: Vec<(usize, f64)> = methods
            .iter()
            .enumerate()
            .filter_map(|(mi, m)| table.row(m).map(|r| (mi, r.metrics[column])))
            .collect();
        if let Some(&(mi, _)) = present.iter().find(|(_, v)| !v.is_finite()) {
            return Err(HarnessError::NonFiniteMetric {
                table: table.name.clone(),
                method: methods[mi].clone(),
            });
        }
        let values: Vec<f64> = present.iter().map(|p| p.1).collect();
        let ranks = average_ranks(&values);
        per_method.iter_mut().for_each(|v| v.push(None));
        for ((mi, _), r) in present.iter().zip(ranks) {
            *per_method[*mi].last_mut().expect("pushed above") = Some(r);
        }
    }
    let mut out = Vec::with_capacity(methods.len());
    for (method, per_table) in methods.iter().zip(per_method) {
        let ranks: Vec<f64> = per_table.iter().flatten().copied().collect();
        if ranks.is_empty() {
            return Err(HarnessError::MethodMissing(method.clone()));
        }
        out.push(MethodRank {
            method: method.clone(),
            best: ranks.iter().copied().fold(f64::INFINITY, f64::min),
            worst: ranks.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean: ranks.iter().sum::<f64>() / ranks.len() as f64,
            per_table,
        });
    }
    out.sort_by(|a, b| a.mean.total_cmp(&b.mean));
    Ok(out)
}

/// [`aggregate_ranks_for`] over every method in the tables except the
/// reference rows (teacher and relevance-only baseline), in order of first
/// appearance. The result is sorted by mean rank; ties keep that order.
pub fn aggregate_ranks(tables: &[ResultTable], column: usize) -> Result<Vec<MethodRank>, HarnessError> {
    let mut methods: Vec<String> = Vec::new();
    for row in tables.iter().flat_map(|t| &t.rows) {
        if !REFERENCE_METHODS.contains(&row.method.as_str()) && !methods.contains(&row.method) {
            methods.push(row.method.clone());
        }
    }
    aggregate_ranks_for(tables, column, &methods)
}
