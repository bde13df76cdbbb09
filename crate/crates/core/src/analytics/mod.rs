//! Closed-form connectivity, design planners and the resource model.

pub mod connectivity;
pub mod planner;
pub mod poisson;
pub mod quadrature;
pub mod resources;

pub use connectivity::{
    connection_curve, disconnect_prob_integral, disconnect_prob_mgf, edge_privacy_closed_form, log_spaced_grid,
    CurvePoint, DisconnectEstimate,
};
pub use planner::{
    plan_light, plan_stream, replan_for_growth, table1, write_table1_csv, DesignPlan, Regime, Replan, Table1Row,
    TABLE1_CONFIDENCES,
};
pub use poisson::{conditional_stream_mean, lambda_for_confidence, poisson_lambda, poisson_pmf, prob_at_least};
pub use resources::{
    coupon_collector_expectation, harmonic, resource_rows, resource_table, write_resource_csv, ResourceEstimate,
    ResourceRow, RetrievalScheme,
};
