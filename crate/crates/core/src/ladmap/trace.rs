use std::io::Write;

/// One row of per-iteration diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// Iteration index (1-based: the record after the first update is `k = 1`).
    pub k: usize,
    /// Relative feasibility residual.
    pub feas_res: f64,
    /// Relative KKT-2 residual, scaled by the penalty used in the iteration.
    pub kkt2_res: f64,
    /// Penalty used in the iteration.
    pub beta: f64,
    /// Wall-clock time of the iteration in milliseconds.
    pub time_ms: f64,
    pub objective: Option<f64>,
    /// Rank of the low-rank block after the iteration, when there is one.
    pub rank: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
}

impl ConvergenceTrace {
    pub fn push(&mut self, record: TraceRecord) {
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn betas(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.beta)
    }

    pub fn total_time_ms(&self) -> f64 {
        self.records.iter().map(|r| r.time_ms).sum()
    }

    /// CSV with header `k,feas_res,kkt2_res,beta,time_ms,objective`; the
    /// objective cell is empty when it was not evaluated.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "k,feas_res,kkt2_res,beta,time_ms,objective")?;
        for r in &self.records {
            let objective = r.objective.map(|o| format!("{o:e}")).unwrap_or_default();
            writeln!(
                out,
                "{},{:e},{:e},{:e},{:.6},{}",
                r.k, r.feas_res, r.kkt2_res, r.beta, r.time_ms, objective
            )?;
        }
        Ok(())
    }
}
