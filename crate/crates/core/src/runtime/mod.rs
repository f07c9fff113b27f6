//! Session runtime: the authoritative host, the participant client, scripted
//! agents, the deterministic simulator, and the live network front ends.

pub mod agent;
pub mod cli;
pub mod client;
pub mod config;
pub mod gateway;
pub mod host;
pub mod live;
pub mod sim;

pub use agent::{Agent, AgentOutput, AgentPolicy, AgentTiming, Interpretation, MisreadProbabilities};
pub use client::{ActiveTask, ClientCore};
pub use config::{CONFIG_ENV, Config, ConfigError};
pub use gateway::{GatewayClient, GatewayError};
pub use host::{BUTTON_PRIMARY, BUTTON_RETRY, HostConfig, Outgoing, Schedule, SessionHost, write_session_logs};
pub use live::{ClientOptions, ClientReport, LiveError, RunningServer, ServeOptions, ServeReport, Server, ServerStatus, read_frame, run_client};
pub use sim::{ClickDelivery, NetStats, NetworkModel, SimConfig, SimError, SimNetwork, SimOutcome, click_delivery, simulate_session};
