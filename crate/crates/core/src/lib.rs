pub mod stats;
pub mod tabular;
pub mod encode;
pub mod coreset;
pub mod prompt;
pub mod feedback;
pub mod llm;
pub mod fidelity;
pub mod eval;
pub mod pipeline;
pub mod experiment;
