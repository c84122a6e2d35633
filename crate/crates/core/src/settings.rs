/// Tunables shared by the solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    /// Numeric-path tolerance under which two Q-values count as tied.
    pub tie_tolerance: f64,
    /// Largest horizon for which per-step tables are materialized.
    pub horizon_cap: usize,
    /// Largest number of static policies enumerated for degenerate-set work.
    pub enumeration_cap: usize,
    /// Players beyond the switch time that the verifier samples explicitly.
    pub tail_extra: usize,
    /// Slack added to pass thresholds in numeric verification.
    pub verify_tolerance: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            tie_tolerance: 1e-9,
            horizon_cap: 1_000_000,
            enumeration_cap: 10_000,
            tail_extra: 5,
            verify_tolerance: 1e-10,
        }
    }
}
