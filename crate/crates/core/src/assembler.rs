//! Assembly programs to posed scene graphs.
//!
//! Mating convention: a child is placed so that its provided frame coincides
//! with the parent's required frame turned by π about local x (`FLIP`),
//! i.e. the two z axes oppose and the origins coincide:
//!
//! `world(child) = world(parent) · F(parent_cp) · Rz(θ) · FLIP · F(child_cp)⁻¹`
//!
//! with `θ = 0` except for revolute joints posed via [`assemble_posed`].

use std::collections::{BTreeMap, HashMap, VecDeque};

use nalgebra::{Matrix3, Rotation3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::component::{Catalog, Frame, JointKind};
use crate::interpretation::{AssemblyProgram, Instruction, ProgramError};

/// Rotation drift above this is an error instead of being corrected.
pub const DRIFT_LIMIT: f64 = 1e-6;

/// A rigid transform; translation in millimetres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        rotation: Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0),
        translation: Vector3::new(0.0, 0.0, 0.0),
    };

    /// π about local x.
    pub const FLIP: Pose = Pose {
        rotation: Matrix3::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0),
        translation: Vector3::new(0.0, 0.0, 0.0),
    };

    pub fn rot_z(angle: f64) -> Pose {
        Pose {
            rotation: *Rotation3::from_axis_angle(&Vector3::z_axis(), angle).matrix(),
            translation: Vector3::zeros(),
        }
    }

    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose { rotation: rt, translation: -(rt * self.translation) }
    }

    /// Largest entry of `RᵀR − I`.
    pub fn drift(&self) -> f64 {
        (self.rotation.transpose() * self.rotation - Matrix3::identity()).abs().max()
    }

    /// Column-major 4×4, as glTF expects.
    pub fn to_column_major(&self) -> [f64; 16] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[(0, 0)],
            r[(1, 0)],
            r[(2, 0)],
            0.0,
            r[(0, 1)],
            r[(1, 1)],
            r[(2, 1)],
            0.0,
            r[(0, 2)],
            r[(1, 2)],
            r[(2, 2)],
            0.0,
            t[0],
            t[1],
            t[2],
            1.0,
        ]
    }

    fn orthonormalized(&self) -> Pose {
        let c0 = self.rotation.column(0).normalize();
        let c1 = (self.rotation.column(1) - c0 * c0.dot(&self.rotation.column(1))).normalize();
        let c2 = c0.cross(&c1);
        Pose { rotation: Matrix3::from_columns(&[c0, c1, c2]), translation: self.translation }
    }
}

impl From<&Frame> for Pose {
    fn from(f: &Frame) -> Pose {
        let r = &f.rotation;
        Pose {
            rotation: Matrix3::new(r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2]),
            translation: Vector3::from(f.origin),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct PoseRepr {
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
}

impl Serialize for Pose {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let r = &self.rotation;
        PoseRepr {
            rotation: [0, 1, 2].map(|i| [r[(i, 0)], r[(i, 1)], r[(i, 2)]]),
            translation: [self.translation[0], self.translation[1], self.translation[2]],
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Pose, D::Error> {
        let repr = PoseRepr::deserialize(d)?;
        Ok(Pose::from(&Frame { origin: repr.translation, rotation: repr.rotation }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneInstance {
    pub id: String,
    pub component: String,
    pub pose: Pose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneJoint {
    pub parent: String,
    pub parent_cp: String,
    pub child: String,
    pub child_cp: String,
    pub kind: JointKind,
    /// World rotation axis, revolute joints only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SceneGraph {
    /// In insert order; the first is the root.
    pub instances: Vec<SceneInstance>,
    /// Rigidly connected instance sets, each in insert order, ordered by
    /// their first member.
    pub links: Vec<Vec<String>>,
    /// Components used more than once.
    pub groups: BTreeMap<String, Vec<String>>,
    pub joints: Vec<SceneJoint>,
}

impl SceneGraph {
    pub fn instance(&self, id: &str) -> Option<&SceneInstance> {
        self.instances.iter().find(|i| i.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssembleError {
    #[error("invalid program: {0}")]
    Program(#[from] ProgramError),
    #[error("component `{component}` has no connection point `{cp}`")]
    UnknownConnectionPoint { component: String, cp: String },
    #[error("rotation of `{instance}` drifted {drift:e} from orthonormal")]
    Degenerate { instance: String, drift: f64 },
}

pub fn assemble(program: &AssemblyProgram, catalog: &Catalog) -> Result<SceneGraph, AssembleError> {
    assemble_posed(program, catalog, &BTreeMap::new())
}

/// Like [`assemble`], with revolute joints turned by `angles[child]` radians
/// about their axis. Entries for other instances are ignored.
pub fn assemble_posed(
    program: &AssemblyProgram,
    catalog: &Catalog,
    angles: &BTreeMap<String, f64>,
) -> Result<SceneGraph, AssembleError> {
    program.validate()?;
    let inserts: Vec<(&str, &str)> = program.inserts().collect();
    let order: HashMap<&str, usize> = inserts.iter().enumerate().map(|(i, (id, _))| (*id, i)).collect();
    let mut specs = Vec::with_capacity(inserts.len());
    for (_, component) in &inserts {
        specs.push(catalog.component(component).ok_or_else(|| ProgramError::UnknownComponent(component.to_string()))?);
    }
    let frame = |idx: usize, cp: &str| -> Result<Pose, AssembleError> {
        specs[idx].connection_point(cp).map(|p| Pose::from(&p.frame)).ok_or_else(|| {
            AssembleError::UnknownConnectionPoint { component: specs[idx].id.clone(), cp: cp.to_string() }
        })
    };

    let mut children: Vec<Vec<usize>> = vec![Vec::new(); inserts.len()];
    let mut joints = Vec::new();
    let mut uf = UnionFind::new(inserts.len());
    for ins in &program.instructions {
        if let Instruction::Joint { parent, parent_cp, child, child_cp, kind } = ins {
            let (p, c) = (order[parent.as_str()], order[child.as_str()]);
            children[p].push(joints.len());
            if *kind == JointKind::Rigid {
                uf.union(p, c);
            }
            joints.push((p, parent_cp.as_str(), c, child_cp.as_str(), *kind));
        }
    }

    // Breadth-first from the root; pre-order programs list inner joints first.
    let mut poses: Vec<Option<Pose>> = vec![None; inserts.len()];
    let mut axes: Vec<Option<[f64; 3]>> = vec![None; joints.len()];
    if !inserts.is_empty() {
        poses[0] = Some(Pose::IDENTITY);
    }
    let mut queue = VecDeque::from([0usize]);
    while let Some(p) = queue.pop_front() {
        let Some(parent_pose) = poses.get(p).copied().flatten() else { continue };
        for &j in &children[p] {
            let (_, pcp, c, ccp, kind) = joints[j];
            let mount = parent_pose.compose(&frame(p, pcp)?);
            let turn = match kind {
                JointKind::Revolute => {
                    let z = mount.rotation.column(2);
                    axes[j] = Some([z[0], z[1], z[2]]);
                    Pose::rot_z(angles.get(inserts[c].0).copied().unwrap_or(0.0))
                }
                JointKind::Rigid => Pose::IDENTITY,
            };
            let raw = mount.compose(&turn).compose(&Pose::FLIP).compose(&frame(c, ccp)?.inverse());
            let drift = raw.drift();
            if drift > DRIFT_LIMIT || !drift.is_finite() {
                return Err(AssembleError::Degenerate { instance: inserts[c].0.to_string(), drift });
            }
            poses[c] = Some(raw.orthonormalized());
            queue.push_back(c);
        }
    }

    let instances: Vec<SceneInstance> = inserts
        .iter()
        .zip(&poses)
        .map(|((id, component), pose)| SceneInstance {
            id: id.to_string(),
            component: component.to_string(),
            pose: pose.expect("validated program is a tree rooted at the first insert"),
        })
        .collect();

    let mut link_of_root: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    let mut first_seen: HashMap<usize, usize> = HashMap::new();
    for (i, (id, _)) in inserts.iter().enumerate() {
        let r = uf.find(i);
        let key = *first_seen.entry(r).or_insert(i);
        link_of_root.entry(key).or_default().push(id.to_string());
    }

    let mut by_component: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (id, component) in &inserts {
        by_component.entry(component.to_string()).or_default().push(id.to_string());
    }
    by_component.retain(|_, ids| ids.len() > 1);

    Ok(SceneGraph {
        instances,
        links: link_of_root.into_values().collect(),
        groups: by_component,
        joints: joints
            .iter()
            .zip(axes)
            .map(|(&(p, pcp, c, ccp, kind), axis)| SceneJoint {
                parent: inserts[p].0.to_string(),
                parent_cp: pcp.to_string(),
                child: inserts[c].0.to_string(),
                child_cp: ccp.to_string(),
                kind,
                axis,
            })
            .collect(),
    })
}

/// Assembles many programs in parallel; output order follows input order.
pub fn assemble_batch(programs: &[AssemblyProgram], catalog: &Catalog) -> Vec<Result<SceneGraph, AssembleError>> {
    programs.par_iter().map(|p| assemble(p, catalog)).collect()
}

/// Largest per-entry deviation between the two sides of the mate equation
/// over all joints of `scene`.
pub fn mate_residual(scene: &SceneGraph, catalog: &Catalog) -> f64 {
    let pose = |id: &str| scene.instance(id).map(|i| (i.pose, i.component.as_str()));
    let frame = |component: &str, cp: &str| {
        catalog.component(component).and_then(|c| c.connection_point(cp)).map(|p| Pose::from(&p.frame))
    };
    let mut worst: f64 = 0.0;
    for j in &scene.joints {
        let (Some((pp, pc)), Some((cp, cc))) = (pose(&j.parent), pose(&j.child)) else {
            return f64::INFINITY;
        };
        let (Some(fp), Some(fc)) = (frame(pc, &j.parent_cp), frame(cc, &j.child_cp)) else {
            return f64::INFINITY;
        };
        if j.kind == JointKind::Revolute {
            // posed joints carry an extra Rz; only the z axes and origins must agree
            let lhs = cp.compose(&fc);
            let rhs = pp.compose(&fp);
            worst = worst
                .max((lhs.translation - rhs.translation).abs().max())
                .max((lhs.rotation.column(2) + rhs.rotation.column(2)).abs().max());
            continue;
        }
        let lhs = cp.compose(&fc);
        let rhs = pp.compose(&fp).compose(&Pose::FLIP);
        worst =
            worst.max((lhs.rotation - rhs.rotation).abs().max()).max((lhs.translation - rhs.translation).abs().max());
    }
    worst
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}
