//! Modular component descriptions and the on-disk catalog.
//!
//! A catalog is a directory tree of JSON documents: taxonomy documents
//! (`{"name", "nodes", "edges"}`) and one document per component. Files are
//! classified by their keys, read in sorted path order, and components are
//! keyed by id, so the resulting [`Catalog`] does not depend on file order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::taxonomy::{Taxonomy, TaxonomyError};
use crate::types::AtomSet;

const ORTHO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Rigid,
    Revolute,
}

impl fmt::Display for JointKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            JointKind::Rigid => "rigid",
            JointKind::Revolute => "revolute",
        })
    }
}

/// A coordinate frame in part coordinates (millimetres). `rotation` is given
/// row-major; its columns are the local x, y, z axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Frame {
    pub origin: [f64; 3],
    pub rotation: [[f64; 3]; 3],
}

impl Default for Frame {
    fn default() -> Self {
        Frame::IDENTITY
    }
}

impl Frame {
    pub const IDENTITY: Frame =
        Frame { origin: [0.0; 3], rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] };

    pub fn at(origin: [f64; 3]) -> Self {
        Frame { origin, ..Frame::IDENTITY }
    }

    /// Returns a description of the problem if the rotation is not proper
    /// orthonormal within 1e-9.
    pub fn check(&self) -> Result<(), String> {
        let r = &self.rotation;
        if r.iter().flatten().chain(&self.origin).any(|v| !v.is_finite()) {
            return Err("frame contains a non-finite value".into());
        }
        // ‖RᵀR − I‖_F
        let mut err = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| r[k][i] * r[k][j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                err += (dot - target) * (dot - target);
            }
        }
        let err = err.sqrt();
        if err > ORTHO_TOL {
            return Err(format!("rotation is not orthonormal (|RtR - I| = {err:e})"));
        }
        let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
        if (det - 1.0).abs() > ORTHO_TOL {
            return Err(format!("rotation determinant is {det}, expected +1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionPoint {
    pub id: String,
    pub joint: JointKind,
    pub frame: Frame,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub required: Option<AtomSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provided: Option<AtomSet>,
}

/// A modular part. `provided` sets are stored without the inherent atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub id: String,
    #[serde(default)]
    pub inherent: AtomSet,
    #[serde(default, deserialize_with = "de_metadata")]
    pub metadata: BTreeMap<String, u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry_ref: Option<String>,
    pub connection_points: Vec<ConnectionPoint>,
}

impl ComponentSpec {
    pub fn connection_point(&self, id: &str) -> Option<&ConnectionPoint> {
        self.connection_points.iter().find(|cp| cp.id == id)
    }

    /// Metadata value, 0 when absent.
    pub fn meta(&self, key: &str) -> u64 {
        self.metadata.get(key).copied().unwrap_or(0)
    }
}

// Floats are discretised to the nearest integer at ingestion.
fn de_metadata<'de, D: serde::Deserializer<'de>>(d: D) -> Result<BTreeMap<String, u64>, D::Error> {
    let raw = BTreeMap::<String, serde_json::Number>::deserialize(d)?;
    raw.into_iter()
        .map(|(k, n)| {
            let v = if let Some(u) = n.as_u64() {
                u
            } else {
                match n.as_f64() {
                    Some(f) if f.is_finite() && f >= -0.5 => f.round() as u64,
                    _ => {
                        return Err(serde::de::Error::custom(format!(
                            "metadata `{k}` must be a non-negative number, got {n}"
                        )))
                    }
                }
            };
            Ok((k, v))
        })
        .collect()
}

pub fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("{file}: schema violation at {pointer}: {message}")]
    Schema { file: PathBuf, pointer: String, message: String },
    #[error("{file}: {source}")]
    Json {
        file: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{file}: document is neither a taxonomy nor a component")]
    UnknownDocument { file: PathBuf },
    #[error("duplicate component id `{0}`")]
    DuplicateComponent(String),
    #[error("taxonomy: {0}")]
    Taxonomy(#[from] TaxonomyError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Components plus the taxonomies they are annotated against.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    taxonomies: Vec<Taxonomy>,
    taxonomy: Taxonomy,
    components: BTreeMap<String, ComponentSpec>,
    root: Option<PathBuf>,
}

impl PartialEq for Catalog {
    fn eq(&self, other: &Self) -> bool {
        self.taxonomies == other.taxonomies && self.components == other.components
    }
}

impl Catalog {
    pub fn new(
        taxonomies: Vec<Taxonomy>,
        components: impl IntoIterator<Item = ComponentSpec>,
    ) -> Result<Catalog, CatalogError> {
        let mut taxonomies = taxonomies;
        taxonomies.sort_by(|a, b| (a.name(), a.nodes(), a.edges()).cmp(&(b.name(), b.nodes(), b.edges())));
        let taxonomy = Taxonomy::merge(&taxonomies)?;
        let mut map = BTreeMap::new();
        for c in components {
            if map.contains_key(&c.id) {
                return Err(CatalogError::DuplicateComponent(c.id));
            }
            map.insert(c.id.clone(), c);
        }
        Ok(Catalog { taxonomies, taxonomy, components: map, root: None })
    }

    /// Directory that relative `geometry_ref` paths resolve against.
    pub fn with_root(mut self, root: impl Into<PathBuf>) -> Self {
        self.root = Some(root.into());
        self
    }

    pub fn root(&self) -> Option<&Path> {
        self.root.as_deref()
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    pub fn taxonomies(&self) -> &[Taxonomy] {
        &self.taxonomies
    }

    pub fn components(&self) -> impl Iterator<Item = &ComponentSpec> {
        self.components.values()
    }

    pub fn component(&self, id: &str) -> Option<&ComponentSpec> {
        self.components.get(id)
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn with_component(&self, spec: ComponentSpec) -> Catalog {
        let mut next = self.clone();
        next.components.insert(spec.id.clone(), spec);
        next
    }

    pub fn without_component(&self, id: &str) -> Catalog {
        let mut next = self.clone();
        next.components.remove(id);
        next
    }

    pub fn with_taxonomies(&self, taxonomies: Vec<Taxonomy>) -> Result<Catalog, CatalogError> {
        let mut next = Catalog::new(taxonomies, self.components.values().cloned())?;
        next.root = self.root.clone();
        Ok(next)
    }

    /// Components whose annotations mention the plain atom `atom`.
    pub fn components_referencing(&self, atom: &str) -> Vec<String> {
        self.components
            .values()
            .filter(|c| {
                let mut sets = std::iter::once(&c.inherent)
                    .chain(c.connection_points.iter().flat_map(|cp| cp.required.iter().chain(cp.provided.iter())));
                sets.any(|s| s.iter().any(|a| !a.is_property() && a.name == atom))
            })
            .map(|c| c.id.clone())
            .collect()
    }
}

/// Loads every JSON document under `paths` (files or directories).
pub fn load_catalog<P: AsRef<Path>>(paths: &[P]) -> Result<Catalog, CatalogError> {
    let mut files = Vec::new();
    for p in paths {
        collect_json_files(p.as_ref(), &mut files)?;
    }
    let mut taxonomies = Vec::new();
    let mut components = Vec::new();
    for file in &files {
        match parse_document(file)? {
            Document::Taxonomy(t) => taxonomies.push(t),
            Document::Component(c) => components.push(*c),
        }
    }
    let catalog = Catalog::new(taxonomies, components)?;
    let root = paths.first().map(|p| {
        let p = p.as_ref();
        if p.is_dir() {
            p.to_path_buf()
        } else {
            p.parent().map(Path::to_path_buf).unwrap_or_default()
        }
    });
    Ok(match root {
        Some(r) => catalog.with_root(r),
        None => catalog,
    })
}

fn collect_json_files(path: &Path, out: &mut Vec<PathBuf>) -> Result<(), CatalogError> {
    let io = |source| CatalogError::Io { path: path.to_path_buf(), source };
    if path.is_dir() {
        let mut entries: Vec<PathBuf> =
            fs::read_dir(path).map_err(io)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>().map_err(io)?;
        entries.sort();
        for e in entries {
            if e.is_dir() || e.extension().is_some_and(|x| x == "json") {
                collect_json_files(&e, out)?;
            }
        }
    } else {
        out.push(path.to_path_buf());
    }
    Ok(())
}

enum Document {
    Taxonomy(Taxonomy),
    Component(Box<ComponentSpec>),
}

fn parse_document(file: &Path) -> Result<Document, CatalogError> {
    let text = fs::read_to_string(file).map_err(|source| CatalogError::Io { path: file.to_path_buf(), source })?;
    parse_document_str(&text).map_err(|e| e.in_file(file))
}

/// Errors from parsing a single document before a file name is attached.
#[derive(Debug)]
pub enum DocumentError {
    Schema { pointer: String, message: String },
    Json(serde_json::Error),
    Unknown,
}

impl DocumentError {
    fn in_file(self, file: &Path) -> CatalogError {
        let file = file.to_path_buf();
        match self {
            DocumentError::Schema { pointer, message } => CatalogError::Schema { file, pointer, message },
            DocumentError::Json(source) => CatalogError::Json { file, source },
            DocumentError::Unknown => CatalogError::UnknownDocument { file },
        }
    }
}

impl fmt::Display for DocumentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DocumentError::Schema { pointer, message } => write!(f, "schema violation at {pointer}: {message}"),
            DocumentError::Json(e) => write!(f, "{e}"),
            DocumentError::Unknown => f.write_str("document is neither a taxonomy nor a component"),
        }
    }
}

fn parse_document_str(text: &str) -> Result<Document, DocumentError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(DocumentError::Json)?;
    let obj = value.as_object().ok_or(DocumentError::Unknown)?;
    if obj.contains_key("connection_points") {
        parse_component_value(value).map(|c| Document::Component(Box::new(c)))
    } else if obj.contains_key("nodes") || obj.contains_key("edges") {
        let doc: crate::taxonomy::TaxonomyDoc = deserialize_at(value)?;
        Taxonomy::try_from(doc)
            .map(Document::Taxonomy)
            .map_err(|e| DocumentError::Schema { pointer: "/edges".into(), message: e.to_string() })
    } else {
        Err(DocumentError::Unknown)
    }
}

/// Parses and structurally checks one component document, reporting the
/// JSON pointer of the first offending field.
pub fn parse_component_value(value: serde_json::Value) -> Result<ComponentSpec, DocumentError> {
    let spec: ComponentSpec = deserialize_at(value)?;
    for (i, cp) in spec.connection_points.iter().enumerate() {
        if let Err(message) = cp.frame.check() {
            return Err(DocumentError::Schema { pointer: format!("/connection_points/{i}/frame"), message });
        }
    }
    Ok(spec)
}

fn deserialize_at<T: serde::de::DeserializeOwned>(value: serde_json::Value) -> Result<T, DocumentError> {
    serde_path_to_error::deserialize(value)
        .map_err(|e| DocumentError::Schema { pointer: json_pointer(e.path()), message: e.inner().to_string() })
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

/// Canonical pretty JSON with a trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("catalog types serialize infallibly");
    s.push('\n');
    s
}

/// Writes `taxonomies/<name>.json` and `components/<id>.json` under `dir`.
pub fn save_catalog(catalog: &Catalog, dir: &Path) -> Result<(), CatalogError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CatalogError::Io { path, source }
    };
    let tax_dir = dir.join("taxonomies");
    let comp_dir = dir.join("components");
    fs::create_dir_all(&tax_dir).map_err(io(&tax_dir))?;
    fs::create_dir_all(&comp_dir).map_err(io(&comp_dir))?;
    let mut used = BTreeSet::new();
    for (i, t) in catalog.taxonomies.iter().enumerate() {
        let stem = if t.name().is_empty() { "taxonomy" } else { t.name() };
        let mut fname = format!("{stem}.json");
        if !used.insert(fname.clone()) {
            fname = format!("{stem}-{i}.json");
            used.insert(fname.clone());
        }
        let path = tax_dir.join(fname);
        fs::write(&path, to_canonical_json(t)).map_err(io(&path))?;
    }
    for c in catalog.components.values() {
        let path = comp_dir.join(format!("{}.json", c.id));
        fs::write(&path, to_canonical_json(c)).map_err(io(&path))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    /// JSON pointer into the component document.
    pub pointer: String,
    pub message: String,
}

impl Diagnostic {
    fn error(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Error, pointer: pointer.into(), message: message.into() }
    }

    fn warning(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Warning, pointer: pointer.into(), message: message.into() }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}: {} ({})", self.message, self.pointer)
    }
}

/// Checks `spec` against the catalog's merged taxonomy and its peers. An
/// empty result means every invariant holds.
pub fn validate_component(catalog: &Catalog, spec: &ComponentSpec) -> Vec<Diagnostic> {
    let tax = catalog.taxonomy();
    let mut out = Vec::new();
    if !valid_id(&spec.id) {
        out.push(Diagnostic::error("/id", format!("invalid component id `{}`", spec.id)));
    }
    let check_atoms = |set: &AtomSet, pointer: String, out: &mut Vec<Diagnostic>| {
        for a in set.unknown_atoms(tax) {
            out.push(Diagnostic::error(pointer.clone(), format!("unknown atom \"{}\"", a.name)));
        }
    };
    check_atoms(&spec.inherent, "/inherent".into(), &mut out);

    let mut seen = BTreeSet::new();
    for (i, cp) in spec.connection_points.iter().enumerate() {
        let at = format!("/connection_points/{i}");
        if !valid_id(&cp.id) {
            out.push(Diagnostic::error(format!("{at}/id"), format!("invalid connection point id `{}`", cp.id)));
        }
        if !seen.insert(cp.id.as_str()) {
            out.push(Diagnostic::error(format!("{at}/id"), format!("duplicate connection point id `{}`", cp.id)));
        }
        if cp.required.is_none() && cp.provided.is_none() {
            out.push(Diagnostic::error(at.clone(), format!("untyped connection point `{}`", cp.id)));
        }
        if let Err(msg) = cp.frame.check() {
            out.push(Diagnostic::error(format!("{at}/frame"), msg));
        }
        if let Some(r) = &cp.required {
            check_atoms(r, format!("{at}/required"), &mut out);
        }
        if let Some(p) = &cp.provided {
            check_atoms(p, format!("{at}/provided"), &mut out);
        }
    }
    if !spec.connection_points.iter().any(|cp| cp.provided.is_some()) {
        out.push(Diagnostic::warning(
            "/connection_points",
            "component has no provided connection point and can never be placed",
        ));
    }
    out.extend(overspecification_hints(catalog, spec));
    out
}

// A provided set is flagged when it strictly contains another component's
// provided set on the same joint kind and none of the extra atoms can
// satisfy any requirement in the catalog.
fn overspecification_hints(catalog: &Catalog, spec: &ComponentSpec) -> Vec<Diagnostic> {
    let tax = catalog.taxonomy();
    let required_atoms: BTreeSet<&str> = catalog
        .components()
        .chain(std::iter::once(spec))
        .flat_map(|c| c.connection_points.iter().filter_map(|cp| cp.required.as_ref()))
        .flat_map(|s| s.iter().filter(|a| !a.is_property()).map(|a| a.name.as_str()))
        .collect();
    let mut out = Vec::new();
    for (i, cp) in spec.connection_points.iter().enumerate() {
        let Some(mine) = &cp.provided else { continue };
        let hit = catalog
            .components()
            .filter(|other| other.id != spec.id)
            .flat_map(|other| other.connection_points.iter().map(move |q| (other, q)))
            .filter(|(_, q)| q.joint == cp.joint)
            .find_map(|(other, q)| {
                let theirs = q.provided.as_ref()?;
                if mine.len() <= theirs.len() || !mine.is_superset(theirs) {
                    return None;
                }
                let distinguishing = mine
                    .iter()
                    .filter(|a| !theirs.contains(a))
                    .any(|a| a.is_property() || required_atoms.iter().any(|r| tax.leq(&a.name, r)));
                (!distinguishing).then(|| format!("{}.{}", other.id, q.id))
            });
        if let Some(peer) = hit {
            out.push(Diagnostic::warning(
                format!("/connection_points/{i}/provided"),
                format!(
                    "provided type `{mine}` over-specifies `{peer}`: the extra atoms match no requirement in the catalog"
                ),
            ));
        }
    }
    out
}

/// Diagnostics for every component, keyed by component id.
pub fn validate_catalog(catalog: &Catalog) -> BTreeMap<String, Vec<Diagnostic>> {
    catalog
        .components()
        .map(|c| (c.id.clone(), validate_component(catalog, c)))
        .filter(|(_, d)| !d.is_empty())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Atom;

    fn tax() -> Taxonomy {
        Taxonomy::new(
            "t",
            ["stackable", "cube", "wood", "cap", "material"].map(String::from),
            [("wood".to_string(), "material".to_string())],
        )
        .unwrap()
    }

    fn cp(id: &str, required: Option<&[&str]>, provided: Option<&[&str]>) -> ConnectionPoint {
        ConnectionPoint {
            id: id.into(),
            joint: JointKind::Rigid,
            frame: Frame::IDENTITY,
            required: required.map(|r| AtomSet::of(r.iter().copied())),
            provided: provided.map(|p| AtomSet::of(p.iter().copied())),
        }
    }

    fn cube() -> ComponentSpec {
        ComponentSpec {
            id: "cube".into(),
            inherent: AtomSet::of(["cube", "wood"]),
            metadata: BTreeMap::from([("cubes".into(), 1)]),
            geometry_ref: None,
            connection_points: vec![cp("bottom", None, Some(&["stackable"])), cp("top", Some(&["stackable"]), None)],
        }
    }

    #[test]
    fn valid_cube_has_no_diagnostics() {
        let catalog = Catalog::new(vec![tax()], [cube()]).unwrap();
        assert_eq!(validate_component(&catalog, &cube()), vec![]);
    }

    #[test]
    fn untyped_point_is_an_error() {
        let mut c = cube();
        c.connection_points.push(cp("side", None, None));
        let catalog = Catalog::new(vec![tax()], []).unwrap();
        let d = validate_component(&catalog, &c);
        assert_eq!(d.len(), 1);
        assert!(d[0].is_error());
        assert!(d[0].message.contains("untyped connection point"));
    }

    #[test]
    fn unknown_atom_is_an_error() {
        let mut c = cube();
        c.inherent.insert(Atom::plain("titanium"));
        let catalog = Catalog::new(vec![tax()], []).unwrap();
        let d = validate_component(&catalog, &c);
        assert_eq!(d, vec![Diagnostic::error("/inherent", "unknown atom \"titanium\"")]);
    }

    #[test]
    fn duplicate_cp_and_bad_frame_reported() {
        let mut c = cube();
        c.connection_points[1].id = "bottom".into();
        c.connection_points[0].frame.rotation[2][2] = -1.0;
        let catalog = Catalog::new(vec![tax()], []).unwrap();
        let d = validate_component(&catalog, &c);
        assert!(d.iter().any(|d| d.message.contains("duplicate connection point")));
        assert!(d.iter().any(|d| d.pointer == "/connection_points/0/frame"));
    }

    #[test]
    fn overspecified_provided_type_warns() {
        let t = Taxonomy::new("t", ["stackable", "cube", "wood", "glossy"].map(String::from), []).unwrap();
        let plain = cube();
        let mut fancy = cube();
        fancy.id = "fancy".into();
        fancy.connection_points[0].provided = Some(AtomSet::of(["stackable", "glossy"]));
        let catalog = Catalog::new(vec![t], [plain.clone(), fancy.clone()]).unwrap();
        let d = validate_component(&catalog, &fancy);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].severity, Severity::Warning);
        assert!(validate_component(&catalog, &plain).is_empty());

        // once some requirement asks for `glossy`, the atom distinguishes
        let mut picky = cube();
        picky.id = "picky".into();
        picky.connection_points[1].required = Some(AtomSet::of(["glossy"]));
        let catalog = catalog.with_component(picky);
        assert!(validate_component(&catalog, &fancy).is_empty());
    }

    #[test]
    fn reflected_frame_is_schema_violation() {
        let doc = serde_json::json!({
            "id": "x",
            "connection_points": [{
                "id": "p", "joint": "rigid", "provided": ["cube"],
                "frame": {"origin": [0, 0, 0], "rotation": [[1, 0, 0], [0, 1, 0], [0, 0, -1]]}
            }]
        });
        match parse_component_value(doc) {
            Err(DocumentError::Schema { pointer, .. }) => assert_eq!(pointer, "/connection_points/0/frame"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn schema_errors_point_at_field() {
        let doc = serde_json::json!({
            "id": "x",
            "connection_points": [{"id": "p", "joint": "hinge", "frame": {"origin": [0,0,0], "rotation": [[1,0,0],[0,1,0],[0,0,1]]}}]
        });
        match parse_component_value(doc) {
            Err(DocumentError::Schema { pointer, .. }) => assert_eq!(pointer, "/connection_points/0/joint"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn metadata_floats_are_discretised() {
        let doc = serde_json::json!({"id": "x", "metadata": {"cost": 12.6, "n": 3}, "connection_points": []});
        let c = parse_component_value(doc).unwrap();
        assert_eq!(c.metadata["cost"], 13);
        assert_eq!(c.metadata["n"], 3);
        let neg = serde_json::json!({"id": "x", "metadata": {"cost": -4}, "connection_points": []});
        assert!(parse_component_value(neg).is_err());
    }

    #[test]
    fn empty_path_list_gives_empty_catalog() {
        let c = load_catalog::<&Path>(&[]).unwrap();
        assert!(c.is_empty());
        assert!(c.taxonomy().nodes().is_empty());
    }
}
