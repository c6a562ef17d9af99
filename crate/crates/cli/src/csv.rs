//! CSV schemas shared with downstream tooling.

/// Header of the per-step trace written by `run`.
pub const RUN_HEADER: &str = "trial,k,relative_error,dual_objective,edges_selected";

/// Header of the table written by `speedup`.
pub const SPEEDUP_HEADER: &str = "tau,mean_iters,std_iters,baseline_ell_over_tau,theoretical_inv_gap";

/// Reals use 17 significant digits so values round-trip exactly.
pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn opt_real(v: Option<f64>) -> String {
    v.map(real).unwrap_or_default()
}

pub fn joined(indices: &[usize]) -> String {
    indices
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(";")
}
