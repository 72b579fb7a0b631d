//! Prompt assembly, controller backends and the pre-execution filter.

mod backend;
mod catalog;
mod context;
mod filter;
#[cfg(feature = "http")]
mod http;
mod oracle;

pub use backend::{BackendError, ControllerBackend, MockScripted, Observation};
pub use catalog::{catalog, catalog_with, ContextAblation, ContextExample, ExampleCategory};
pub use context::{assemble_context, recycle, ControllerContext, Negative, RecycleError, WorkspaceLimits, DEFAULT_NEGATIVE_CAP};
pub use filter::{
    check_hardware_constraints, check_structure, check_task_appropriateness, filter_output, pre_execution_filter,
    FilterConfig, FilterVerdict, RejectReason, DEFAULT_MAX_DELTA,
};
#[cfg(feature = "http")]
pub use http::{HttpChat, HttpChatConfig, DEFAULT_KEY_VAR};
pub use oracle::{OracleLayout, OracleSolver, Region};
