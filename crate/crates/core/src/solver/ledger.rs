/// One row of the energy ledger. Dissipation columns are accumulated from
/// `t = 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LedgerRecord {
    pub t: f64,
    pub kinetic: f64,
    pub elastic: f64,
    pub bulk: f64,
    pub penalty_q: f64,
    pub spring: f64,
    pub diss_visc: f64,
    pub diss_h: f64,
    pub diss_delta: f64,
    pub diss_damper: f64,
    /// `Σ ‖D u‖²_{L²(S)} dt`.
    pub strain_body: f64,
    pub residual: f64,
}

impl LedgerRecord {
    pub fn energy(&self) -> f64 {
        self.kinetic + self.elastic + self.bulk + self.penalty_q + self.spring
    }

    pub fn dissipation(&self) -> f64 {
        self.diss_visc + self.diss_h + self.diss_delta + self.diss_damper
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyLedger {
    pub records: Vec<LedgerRecord>,
    pub tolerance: f64,
    pub feedback: bool,
}

impl EnergyLedger {
    pub fn new(tolerance: f64, feedback: bool) -> Self {
        EnergyLedger { records: Vec::new(), tolerance, feedback }
    }

    pub fn e0(&self) -> f64 {
        self.records.first().map(|r| r.energy()).unwrap_or(0.0)
    }

    /// Appends a record after filling in its residual
    /// `(E + D − E₀) / |E₀|` (absolute when `E₀ = 0`). Returns whether the
    /// inequality holds within the tolerance.
    pub fn push(&mut self, mut rec: LedgerRecord) -> bool {
        let e0 = if self.records.is_empty() { rec.energy() } else { self.e0() };
        let excess = rec.energy() + rec.dissipation() - e0;
        rec.residual = if e0 != 0.0 { excess / e0.abs() } else { excess };
        self.records.push(rec);
        rec.residual <= self.tolerance
    }

    pub fn last(&self) -> Option<&LedgerRecord> {
        self.records.last()
    }

    pub fn max_residual(&self) -> f64 {
        self.records.iter().map(|r| r.residual).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn header(&self) -> Vec<&'static str> {
        let mut h = vec![
            "t", "kinetic", "elastic", "bulk", "penaltyQ", "diss_visc", "diss_H", "diss_delta", "residual",
        ];
        if self.feedback {
            h.extend(["spring", "diss_damper"]);
        }
        h
    }

    pub fn row(&self, r: &LedgerRecord) -> Vec<f64> {
        let mut v = vec![
            r.t, r.kinetic, r.elastic, r.bulk, r.penalty_q, r.diss_visc, r.diss_h, r.diss_delta, r.residual,
        ];
        if self.feedback {
            v.extend([r.spring, r.diss_damper]);
        }
        v
    }
}
