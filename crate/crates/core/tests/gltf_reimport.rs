use std::path::PathBuf;

use modsynth_core::crosscheck::{check_case, random_case};
use modsynth_core::pipeline::program_for;
use modsynth_core::{assemble, export, interpret, load_catalog, solve, ExportFormat, MeshCache, Request};

fn tower_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/tower"))
}

fn cubes3() -> Request {
    let text = std::fs::read_to_string(tower_dir().join("../requests/cubes3.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn instance_nodes(doc: &gltf::Document) -> Vec<(String, String, Option<usize>)> {
    doc.nodes()
        .filter_map(|n| {
            let extras: serde_json::Value = serde_json::from_str(n.extras().as_ref()?.get()).ok()?;
            Some((
                extras["instance"].as_str()?.to_string(),
                extras["component"].as_str()?.to_string(),
                n.mesh().map(|m| m.index()),
            ))
        })
        .collect()
}

#[test]
fn tower_glb_reimports_with_one_node_per_instance() {
    let dir = tower_dir();
    let catalog = load_catalog(&[&dir]).unwrap().with_root(&dir);
    let outcome = solve(&catalog, &cubes3()).unwrap();
    let row = &outcome.document.results[0];
    let scene = assemble(&program_for(row, &catalog).unwrap(), &catalog).unwrap();
    let out = export(&scene, ExportFormat::Gltf, &catalog, &MeshCache::new());
    assert!(out.warnings.is_empty(), "{:?}", out.warnings);

    let (doc, buffers, _) = gltf::import_slice(&out.bytes).unwrap();
    let nodes = instance_nodes(&doc);
    assert_eq!(nodes.len(), scene.instances.len());
    assert_eq!(nodes.len(), 5);
    assert!(nodes.iter().all(|(_, _, mesh)| mesh.is_some()));
    let cubes = nodes.iter().filter(|(_, c, _)| c == "cube").count();
    assert_eq!(cubes, 3);

    let root = doc.nodes().find(|n| n.name() == Some("assembly")).unwrap();
    let (_, _, scale) = root.transform().decomposed();
    assert_eq!(scale, [0.001; 3]);

    // instance matrices are local poses in millimetres below the scaled root
    for node in doc.nodes() {
        let Some(extras) = node.extras() else { continue };
        let extras: serde_json::Value = serde_json::from_str(extras.get()).unwrap();
        let inst = scene.instance(extras["instance"].as_str().unwrap()).unwrap();
        let m = node.transform().matrix();
        for (i, v) in inst.pose.to_column_major().iter().enumerate() {
            assert!((f64::from(m[i / 4][i % 4]) - v).abs() < 1e-4, "{i}: {} vs {v}", m[i / 4][i % 4]);
        }
    }

    for mesh in doc.meshes() {
        for prim in mesh.primitives() {
            let reader = prim.reader(|b| Some(&buffers[b.index()]));
            let positions: Vec<[f32; 3]> = reader.read_positions().unwrap().collect();
            let indices: Vec<u32> = reader.read_indices().unwrap().into_u32().collect();
            assert!(!positions.is_empty());
            assert_eq!(indices.len() % 3, 0);
            assert!(indices.iter().all(|&i| (i as usize) < positions.len()));
        }
    }
}

#[test]
fn meshless_glb_still_reimports() {
    for seed in 0..40 {
        let case = random_case(seed, 4);
        let report = check_case(&case, 1_000_000).unwrap();
        let repo = modsynth_core::repo_gen::dynamic_expand(
            &modsynth_core::repo_gen::static_repository(&case.catalog),
            &case.request,
            &case.catalog,
        )
        .unwrap();
        for t in report.terms.iter().take(4) {
            let scene = assemble(&interpret(t, &repo, &case.catalog).unwrap(), &case.catalog).unwrap();
            let out = export(&scene, ExportFormat::Gltf, &case.catalog, &MeshCache::new());
            let doc = gltf::Gltf::from_slice(&out.bytes).unwrap();
            assert_eq!(instance_nodes(&doc).len(), t.size());
            assert_eq!(doc.meshes().count(), 0);
        }
    }
}
