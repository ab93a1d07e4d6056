//! Synthesis of modular designs from typed component catalogs.
//!
//! Components are annotated with intersection types over a taxonomy; each
//! provided connection point becomes a combinator. A request is answered by
//! type inhabitation, and every solution term is turned into an assembly
//! program, a bill of materials and a posed scene.

pub mod assembler;
pub mod component;
pub mod crosscheck;
pub mod export;
pub mod inhabitation;
pub mod interpretation;
pub mod oracle;
pub mod pipeline;
pub mod repo_gen;
pub mod taxonomy;
pub mod types;

pub use assembler::{assemble, assemble_batch, assemble_posed, AssembleError, Pose, SceneGraph};
pub use component::{load_catalog, Catalog, CatalogError, ComponentSpec, ConnectionPoint, Frame, JointKind};
pub use export::{export, ExportFormat, MeshCache};
pub use inhabitation::{build_grammar, count, enumerate, Count, TreeGrammar};
pub use interpretation::{bom, interpret, AssemblyProgram, Bom, Instruction};
pub use pipeline::{solve, ResultRow, ResultsDocument, SolveError};
pub use repo_gen::{Aggregate, AggregateOp, Filter, FilterOp, Repository, Request};
pub use taxonomy::Taxonomy;
pub use types::{Atom, AtomSet, CombinatorType, Term};
