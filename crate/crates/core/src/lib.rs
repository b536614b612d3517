pub mod evaluation;
pub mod expectation;
pub mod io;
pub mod languages;
pub mod logic;
pub mod miner;
pub mod objectives;
pub mod oracle;
pub mod pipeline;
pub mod seed;
