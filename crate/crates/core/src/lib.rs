//! Typed MILP modelling. A [`model::Model`] holds variables and constraints
//! from ten typed families; [`omt`] classifies each constraint to a leaf of
//! the optimization modelling tree, [`lowering`] turns the model into
//! canonical rows, and [`emit`] writes LP or MPS text. [`oracle`] checks
//! lowerings and solves small models by exhaustive enumeration, [`implicit`]
//! expands mapping templates such as `atsp-tour`, [`corpus`] builds four case
//! studies, and [`service`] serves guided elicitation over HTTP.

pub mod api;
pub mod corpus;
pub mod emit;
pub mod implicit;
pub mod lowering;
pub mod model;
pub mod omt;
pub mod oracle;
pub mod rational;
pub mod service;
