//! Scene serialisation: canonical scene JSON and binary glTF previews.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use serde_json::{json, Value};
use thiserror::Error;

use crate::assembler::SceneGraph;
use crate::component::{to_canonical_json, Catalog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExportFormat {
    SceneJson,
    Gltf,
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::SceneJson => "json",
            ExportFormat::Gltf => "glb",
        }
    }

    pub fn media_type(self) -> &'static str {
        match self {
            ExportFormat::SceneJson => "application/json",
            ExportFormat::Gltf => "model/gltf-binary",
        }
    }
}

impl fmt::Display for ExportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExportFormat::SceneJson => "scene-json",
            ExportFormat::Gltf => "gltf",
        })
    }
}

impl FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "scene-json" => Ok(ExportFormat::SceneJson),
            "gltf" | "glb" => Ok(ExportFormat::Gltf),
            other => Err(format!("unknown export format `{other}` (expected scene-json or gltf)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
}

/// Triangle mesh in component-local millimetres.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Mesh {
    pub positions: Vec<[f32; 3]>,
    pub indices: Vec<u32>,
}

/// Reads the `v` and `f` records of a Wavefront OBJ file. Polygons are
/// fan-triangulated; texture and normal references are ignored.
pub fn parse_obj(text: &str, path: &Path) -> Result<Mesh, MeshError> {
    let mut mesh = Mesh::default();
    let err = |line: usize, message: String| MeshError::Parse { path: path.to_path_buf(), line, message };
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let mut parts = raw.split_whitespace();
        match parts.next() {
            Some("v") => {
                let coords: Vec<f32> = parts
                    .take(3)
                    .map(|p| p.parse::<f32>().map_err(|e| err(line, format!("bad coordinate `{p}`: {e}"))))
                    .collect::<Result<_, _>>()?;
                let [x, y, z] = coords[..] else {
                    return Err(err(line, "vertex needs three coordinates".into()));
                };
                mesh.positions.push([x, y, z]);
            }
            Some("f") => {
                let count = mesh.positions.len() as i64;
                let mut corners = Vec::new();
                for p in parts {
                    let head = p.split('/').next().unwrap_or_default();
                    let i: i64 = head.parse().map_err(|_| err(line, format!("bad face index `{p}`")))?;
                    let idx = if i < 0 { count + i } else { i - 1 };
                    if !(0..count).contains(&idx) {
                        return Err(err(line, format!("face index {i} out of range")));
                    }
                    corners.push(idx as u32);
                }
                if corners.len() < 3 {
                    return Err(err(line, "face needs at least three vertices".into()));
                }
                for k in 1..corners.len() - 1 {
                    mesh.indices.extend([corners[0], corners[k], corners[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok(mesh)
}

pub fn load_obj(path: &Path) -> Result<Mesh, MeshError> {
    let text = std::fs::read_to_string(path).map_err(|source| MeshError::Io { path: path.to_path_buf(), source })?;
    parse_obj(&text, path)
}

/// Memoised mesh loads, shared across exports and threads. Failures are
/// cached too.
#[derive(Debug, Default)]
pub struct MeshCache {
    meshes: Mutex<HashMap<PathBuf, Result<Arc<Mesh>, String>>>,
}

impl MeshCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, path: &Path) -> Result<Arc<Mesh>, String> {
        if let Some(hit) = self.meshes.lock().expect("mesh cache poisoned").get(path) {
            return hit.clone();
        }
        let loaded = load_obj(path).map(Arc::new).map_err(|e| e.to_string());
        self.meshes.lock().expect("mesh cache poisoned").entry(path.to_path_buf()).or_insert(loaded).clone()
    }

    pub fn len(&self) -> usize {
        self.meshes.lock().expect("mesh cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Export {
    pub bytes: Vec<u8>,
    pub warnings: Vec<String>,
}

pub fn export(scene: &SceneGraph, format: ExportFormat, catalog: &Catalog, cache: &MeshCache) -> Export {
    match format {
        ExportFormat::SceneJson => Export { bytes: scene_json(scene).into_bytes(), warnings: Vec::new() },
        ExportFormat::Gltf => gltf(scene, catalog, cache),
    }
}

/// Lossless canonical form: pretty JSON, trailing newline.
pub fn scene_json(scene: &SceneGraph) -> String {
    to_canonical_json(scene)
}

fn resolve(catalog: &Catalog, geometry_ref: &str) -> PathBuf {
    let p = Path::new(geometry_ref);
    match catalog.root() {
        Some(root) if p.is_relative() => root.join(p),
        _ => p.to_path_buf(),
    }
}

const ARRAY_BUFFER: u32 = 34962;
const ELEMENT_ARRAY_BUFFER: u32 = 34963;
const FLOAT: u32 = 5126;
const UNSIGNED_INT: u32 = 5125;

/// Binary glTF 2.0. Node tree: one root (mm → m scale) → one node per link
/// → one node per repeated component within the link → instance nodes
/// carrying world matrices and `extras {instance, component}`.
pub fn gltf(scene: &SceneGraph, catalog: &Catalog, cache: &MeshCache) -> Export {
    let mut warnings = Vec::new();
    let mut bin: Vec<u8> = Vec::new();
    let mut views = Vec::new();
    let mut accessors = Vec::new();
    let mut meshes = Vec::new();
    // component id → mesh index; None when the component has no usable mesh
    let mut mesh_of: HashMap<&str, Option<usize>> = HashMap::new();

    for inst in &scene.instances {
        if mesh_of.contains_key(inst.component.as_str()) {
            continue;
        }
        let geometry = catalog.component(&inst.component).and_then(|c| c.geometry_ref.as_deref());
        let entry = match geometry {
            None => None,
            Some(g) => match cache.get(&resolve(catalog, g)) {
                Ok(mesh) if !mesh.indices.is_empty() => {
                    meshes.push(json!({
                        "name": inst.component,
                        "primitives": [{
                            "attributes": {"POSITION": accessors.len()},
                            "indices": accessors.len() + 1,
                        }],
                    }));
                    push_mesh(&mesh, &mut bin, &mut views, &mut accessors);
                    Some(meshes.len() - 1)
                }
                Ok(_) => {
                    warnings.push(format!("mesh for `{}` has no faces", inst.component));
                    None
                }
                Err(e) => {
                    warnings.push(format!("missing mesh for `{}`: {e}", inst.component));
                    None
                }
            },
        };
        mesh_of.insert(&inst.component, entry);
    }

    let mut nodes: Vec<Value> = vec![json!({"name": "assembly", "scale": [0.001, 0.001, 0.001]})];
    let mut root_children = Vec::new();
    for (li, link) in scene.links.iter().enumerate() {
        let link_node = nodes.len();
        nodes.push(Value::Null);
        root_children.push(link_node);
        let mut children = Vec::new();
        let mut group_nodes: Vec<(String, usize, Vec<usize>)> = Vec::new();
        for id in link {
            let Some(inst) = scene.instance(id) else { continue };
            let node = nodes.len();
            let mut n = json!({
                "name": inst.id,
                "matrix": inst.pose.to_column_major(),
                "extras": {"instance": inst.id, "component": inst.component},
            });
            if let Some(Some(m)) = mesh_of.get(inst.component.as_str()) {
                n["mesh"] = json!(m);
            }
            nodes.push(n);
            if scene.groups.contains_key(&inst.component) {
                match group_nodes.iter_mut().find(|(c, _, _)| *c == inst.component) {
                    Some((_, _, members)) => members.push(node),
                    None => {
                        let g = nodes.len();
                        nodes.push(Value::Null);
                        children.push(g);
                        group_nodes.push((inst.component.clone(), g, vec![node]));
                    }
                }
            } else {
                children.push(node);
            }
        }
        for (component, g, members) in group_nodes {
            nodes[g] = json!({"name": format!("group:{component}"), "children": members});
        }
        nodes[link_node] = json!({"name": format!("link{li}"), "children": children});
    }
    if !root_children.is_empty() {
        nodes[0]["children"] = json!(root_children);
    }

    let mut doc = json!({
        "asset": {"version": "2.0", "generator": "modsynth"},
        "scene": 0,
        "scenes": [{"nodes": [0]}],
        "nodes": nodes,
    });
    if !meshes.is_empty() {
        doc["meshes"] = json!(meshes);
        doc["accessors"] = json!(accessors);
        doc["bufferViews"] = json!(views);
        doc["buffers"] = json!([{"byteLength": bin.len()}]);
    }
    Export { bytes: glb(&doc, &bin), warnings }
}

fn push_mesh(mesh: &Mesh, bin: &mut Vec<u8>, views: &mut Vec<Value>, accessors: &mut Vec<Value>) {
    let mut min = [f32::INFINITY; 3];
    let mut max = [f32::NEG_INFINITY; 3];
    let start = bin.len();
    for p in &mesh.positions {
        for k in 0..3 {
            min[k] = min[k].min(p[k]);
            max[k] = max[k].max(p[k]);
            bin.extend_from_slice(&p[k].to_le_bytes());
        }
    }
    views.push(json!({"buffer": 0, "byteOffset": start, "byteLength": bin.len() - start, "target": ARRAY_BUFFER}));
    accessors.push(json!({
        "bufferView": views.len() - 1,
        "componentType": FLOAT,
        "count": mesh.positions.len(),
        "type": "VEC3",
        "min": min,
        "max": max,
    }));
    let start = bin.len();
    for i in &mesh.indices {
        bin.extend_from_slice(&i.to_le_bytes());
    }
    views.push(
        json!({"buffer": 0, "byteOffset": start, "byteLength": bin.len() - start, "target": ELEMENT_ARRAY_BUFFER}),
    );
    accessors.push(json!({
        "bufferView": views.len() - 1,
        "componentType": UNSIGNED_INT,
        "count": mesh.indices.len(),
        "type": "SCALAR",
    }));
}

fn glb(doc: &Value, bin: &[u8]) -> Vec<u8> {
    let mut json = serde_json::to_vec(doc).expect("glTF document serialises");
    while !json.len().is_multiple_of(4) {
        json.push(b' ');
    }
    let mut bin = bin.to_vec();
    while !bin.len().is_multiple_of(4) {
        bin.push(0);
    }
    let total = 12 + 8 + json.len() + if bin.is_empty() { 0 } else { 8 + bin.len() };
    let mut out = Vec::with_capacity(total);
    out.extend_from_slice(b"glTF");
    out.extend_from_slice(&2u32.to_le_bytes());
    out.extend_from_slice(&(total as u32).to_le_bytes());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(b"JSON");
    out.extend_from_slice(&json);
    if !bin.is_empty() {
        out.extend_from_slice(&(bin.len() as u32).to_le_bytes());
        out.extend_from_slice(b"BIN\0");
        out.extend_from_slice(&bin);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn obj_fan_triangulation() {
        let mesh =
            parse_obj("# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1 2/2 3/3 -1\n", Path::new("q.obj")).unwrap();
        assert_eq!(mesh.positions.len(), 4);
        assert_eq!(mesh.indices, vec![0, 1, 2, 0, 2, 3]);
    }

    #[test]
    fn obj_errors_carry_line() {
        let e = parse_obj("v 0 0 0\nf 1 2 3\n", Path::new("bad.obj")).unwrap_err();
        assert!(matches!(e, MeshError::Parse { line: 2, .. }), "{e}");
        assert!(parse_obj("v 0 0\n", Path::new("bad.obj")).is_err());
    }

    #[test]
    fn format_names() {
        assert_eq!("scene-json".parse::<ExportFormat>(), Ok(ExportFormat::SceneJson));
        assert_eq!("gltf".parse::<ExportFormat>(), Ok(ExportFormat::Gltf));
        assert!("step".parse::<ExportFormat>().is_err());
        assert_eq!(ExportFormat::Gltf.to_string(), "gltf");
    }

    #[test]
    fn empty_scene_is_valid_glb() {
        let out = gltf(&SceneGraph::default(), &Catalog::default(), &MeshCache::new());
        assert_eq!(&out.bytes[..4], b"glTF");
        assert_eq!(u32::from_le_bytes(out.bytes[8..12].try_into().unwrap()) as usize, out.bytes.len());
        assert!(out.warnings.is_empty());
        let json = scene_json(&SceneGraph::default());
        assert!(json.contains("\"instances\": []"));
    }
}
