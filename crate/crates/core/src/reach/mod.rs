//! Integration of embedding systems, the partitioned reachability loop,
//! reach tubes, safety checks and Monte Carlo validation.

pub mod algorithm;
pub mod integrate;
pub mod montecarlo;
pub mod partition;
pub mod safety;
pub mod scenario;
pub mod tube;

pub use algorithm::{run_algorithm1, ReachRun, ReachSettings, ReachStats};
pub use integrate::{integrate_embedding, integrate_ode, IntegratorConfig, Method};
pub use montecarlo::{check_containment, monte_carlo_trajectories, ContainmentReport, Trajectory};
pub use partition::uniform_partition;
pub use safety::{check_safety, Obstacle, SafetyReport, Verdict};
pub use scenario::{Scenario, ScenarioConfig};
pub use tube::ReachTube;
