//! Per-outer-iteration run records.

/// One row of a run trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    /// `None` when no optimal value was available.
    pub objective_gap: Option<f64>,
    pub grad_map_norm: f64,
    pub grad_f_count: u64,
    pub subgrad_h_count: u64,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
}

impl RunTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn push(&mut self, r: TraceRecord) {
        self.records.push(r);
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn iter(&self) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter()
    }

    /// Counts never decrease along a trace.
    pub fn counts_monotone(&self) -> bool {
        self.records
            .windows(2)
            .all(|w| w[0].grad_f_count <= w[1].grad_f_count && w[0].subgrad_h_count <= w[1].subgrad_h_count)
    }
}
