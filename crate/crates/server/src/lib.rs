//! HTTP front end for the portfolio service.
//!
//! [`api::Api`] does all request handling and knows nothing about sockets;
//! [`transport`] adapts it to axum. The `psn` binary wires both to a
//! [`psn_core::store::DiskStore`].

pub mod api;
pub mod config;
pub mod error;
pub mod fixture;
pub mod routes;
pub mod transport;

pub use api::{Api, ApiRequest, ApiResponse, Parts};
pub use error::{map_error, ApiError};
