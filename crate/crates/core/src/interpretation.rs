//! Terms to assembly programs and bills of materials.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::component::{Catalog, JointKind};
use crate::repo_gen::Repository;
use crate::types::Term;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Instruction {
    Insert {
        instance: String,
        component: String,
    },
    /// `parent` owns the required point, `child` the provided one.
    Joint {
        parent: String,
        parent_cp: String,
        child: String,
        child_cp: String,
        kind: JointKind,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssemblyProgram {
    pub instructions: Vec<Instruction>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InterpretError {
    #[error("combinator `{0}` has no catalog binding")]
    MissingBinding(String),
    #[error("component `{0}` is not in the catalog")]
    UnknownComponent(String),
    #[error("component `{component}` has no connection point `{cp}`")]
    UnknownConnectionPoint { component: String, cp: String },
    #[error("combinator `{combinator}` expects {expected} arguments, found {found}")]
    ArityMismatch { combinator: String, expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("instance `{0}` inserted twice")]
    DuplicateInstance(String),
    #[error("instruction {index} references instance `{instance}` before its insert")]
    UndefinedInstance { index: usize, instance: String },
    #[error("connection point `{cp}` of `{instance}` used by two joints")]
    PointReused { instance: String, cp: String },
    #[error("joints do not form a tree over the instances")]
    NotATree,
    #[error("component `{0}` is not in the catalog")]
    UnknownComponent(String),
}

impl AssemblyProgram {
    pub fn inserts(&self) -> impl Iterator<Item = (&str, &str)> {
        self.instructions.iter().filter_map(|i| match i {
            Instruction::Insert { instance, component } => Some((instance.as_str(), component.as_str())),
            Instruction::Joint { .. } => None,
        })
    }

    pub fn joints(&self) -> impl Iterator<Item = &Instruction> {
        self.instructions.iter().filter(|i| matches!(i, Instruction::Joint { .. }))
    }

    /// Checks the structural invariants: define-before-use, each point mated
    /// at most once, and joints forming a spanning tree.
    pub fn validate(&self) -> Result<(), ProgramError> {
        let mut defined = BTreeSet::new();
        let mut used_points = BTreeSet::new();
        let mut has_parent = BTreeSet::new();
        let mut joints = 0usize;
        for (index, ins) in self.instructions.iter().enumerate() {
            match ins {
                Instruction::Insert { instance, .. } => {
                    if !defined.insert(instance.as_str()) {
                        return Err(ProgramError::DuplicateInstance(instance.clone()));
                    }
                }
                Instruction::Joint { parent, parent_cp, child, child_cp, .. } => {
                    for inst in [parent, child] {
                        if !defined.contains(inst.as_str()) {
                            return Err(ProgramError::UndefinedInstance { index, instance: inst.clone() });
                        }
                    }
                    for (inst, cp) in [(parent, parent_cp), (child, child_cp)] {
                        if !used_points.insert((inst.as_str(), cp.as_str())) {
                            return Err(ProgramError::PointReused { instance: inst.clone(), cp: cp.clone() });
                        }
                    }
                    // one parent per child and no edge into the root rules out cycles
                    if !has_parent.insert(child.as_str()) || parent == child {
                        return Err(ProgramError::NotATree);
                    }
                    joints += 1;
                }
            }
        }
        let root = self.inserts().next().map(|(i, _)| i);
        if root.is_some_and(|r| has_parent.contains(r)) || joints + 1 != defined.len().max(1) {
            return Err(ProgramError::NotATree);
        }
        Ok(())
    }
}

/// Flattens `term` depth-first. Instances are numbered `i0, i1, …` in
/// pre-order; each child's subprogram is followed by the joint to its parent.
pub fn interpret(term: &Term, repo: &Repository, catalog: &Catalog) -> Result<AssemblyProgram, InterpretError> {
    let mut program = AssemblyProgram::default();
    let mut next = 0usize;
    emit(term, repo, catalog, &mut next, &mut program)?;
    Ok(program)
}

fn emit(
    term: &Term,
    repo: &Repository,
    catalog: &Catalog,
    next: &mut usize,
    program: &mut AssemblyProgram,
) -> Result<(String, String), InterpretError> {
    let binding =
        repo.binding(&term.combinator).ok_or_else(|| InterpretError::MissingBinding(term.combinator.clone()))?;
    if binding.slots.len() != term.args.len() {
        return Err(InterpretError::ArityMismatch {
            combinator: term.combinator.clone(),
            expected: binding.slots.len(),
            found: term.args.len(),
        });
    }
    let spec = catalog
        .component(&binding.component)
        .ok_or_else(|| InterpretError::UnknownComponent(binding.component.clone()))?;
    let instance = format!("i{next}");
    *next += 1;
    program.instructions.push(Instruction::Insert { instance: instance.clone(), component: spec.id.clone() });
    for (slot, arg) in binding.slots.iter().zip(&term.args) {
        let cp = spec
            .connection_point(slot)
            .ok_or_else(|| InterpretError::UnknownConnectionPoint { component: spec.id.clone(), cp: slot.clone() })?;
        let (child, child_cp) = emit(arg, repo, catalog, next, program)?;
        program.instructions.push(Instruction::Joint {
            parent: instance.clone(),
            parent_cp: slot.clone(),
            child,
            child_cp,
            kind: cp.joint,
        });
    }
    Ok((instance, binding.provided.clone()))
}

/// Bill of materials: quantity per component, metadata totals per key.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bom {
    pub lines: BTreeMap<String, u64>,
    pub totals: BTreeMap<String, u64>,
}

impl Bom {
    pub fn quantity(&self) -> u64 {
        self.lines.values().sum()
    }

    pub fn total(&self, key: &str) -> u64 {
        self.totals.get(key).copied().unwrap_or(0)
    }
}

/// Totals cover every metadata key of every component in the program.
pub fn bom(program: &AssemblyProgram, catalog: &Catalog) -> Result<Bom, ProgramError> {
    let mut out = Bom::default();
    for (_, component) in program.inserts() {
        let spec = catalog.component(component).ok_or_else(|| ProgramError::UnknownComponent(component.to_string()))?;
        *out.lines.entry(spec.id.clone()).or_default() += 1;
        for (key, value) in &spec.metadata {
            let slot = out.totals.entry(key.clone()).or_default();
            *slot = slot.saturating_add(*value);
        }
    }
    Ok(out)
}
