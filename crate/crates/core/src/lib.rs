// SPDX-License-Identifier: Apache-2.0

//! Linear lambda calculi (deterministic, probabilistic and quantum) with
//! applicative bisimilarity checking and context-equivalence search.

pub mod bisim;
pub mod ctxequiv;
pub mod gen;
pub mod quantum;
pub mod semantics;
pub mod syntax;
pub mod typecheck;
