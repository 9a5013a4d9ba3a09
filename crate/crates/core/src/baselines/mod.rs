//! Reference planners: a coupled PRM over the joint space, prioritized
//! planning on per-agent roadmaps, and an exhaustive joint search used as a
//! ground-truth oracle on small instances.

mod composite;
mod decoupled;
mod oracle;

pub use composite::{composite_prm_plan, project_joint_path, JointRoadmap};
pub use decoupled::{decoupled_prm_plan, decoupled_query, DecoupledOutcome};
pub use oracle::{joint_oracle, OracleSolution, ORACLE_STATE_BOUND};
