//! Live MARL layout sessions over a line-delimited JSON protocol, so a
//! client can watch iterations and steer them: pause, step, lock and drag
//! nodes, change parameters.

pub mod net;
pub mod protocol;
pub mod worker;

pub use net::{serve, ServerOptions};
pub use protocol::{decode, encode, ErrorCode, Kind, Message, PROTOCOL_VERSION};
pub use worker::Worker;
