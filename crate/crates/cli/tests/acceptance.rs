//! Acceptance suite. Runs every primary criterion at its stated tolerance,
//! prints one PASS/FAIL line each and exits non-zero if any fails.
//!
//! Timing budgets: arm requests solve within 1 s, 2 s and 5 s for 4, 5 and
//! 6 degrees of freedom; one result interprets, assembles and exports
//! within 1 s.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use modsynth_core::assembler::{assemble_batch, mate_residual};
use modsynth_core::crosscheck::{chain_case, check_case, random_case, Violation};
use modsynth_core::oracle::inhabitants;
use modsynth_core::pipeline::program_for;
use modsynth_core::repo_gen::{dynamic_expand, static_repository, translate_request, AggregateOp};
use modsynth_core::types::typecheck;
use modsynth_core::{
    assemble, export, interpret, load_catalog, solve, AtomSet, Catalog, Count, ExportFormat, MeshCache, Request,
};
use modsynth_service::app::CreateProject;
use modsynth_service::{App, Config, MemoryStore};

const RANDOM_CATALOGS: u64 = 1024;
const ORACLE_LIMIT: usize = 5_000_000;
const RESIDUAL_TOLERANCE: f64 = 1e-9;
const CHAIN_NODES: usize = 1000;

type Verdict = Result<String, String>;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn catalog(name: &str) -> Catalog {
    let dir = fixtures().join(name);
    load_catalog(&[&dir]).expect("fixture catalog loads").with_root(dir)
}

fn request(name: &str) -> Request {
    let text = std::fs::read_to_string(fixtures().join("requests").join(name)).expect("fixture request exists");
    serde_json::from_str(&text).expect("fixture request parses")
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Shared random-catalog run; the oracle, aggregation and soundness
/// criteria all read from it.
struct RandomSuite {
    elapsed: Duration,
    terms: usize,
    eq_terms: usize,
    nonempty: usize,
    oracle: Vec<Violation>,
    aggregate: Vec<Violation>,
    typing: Vec<Violation>,
    other: Vec<Violation>,
}

fn random_suite() -> RandomSuite {
    let start = Instant::now();
    let mut s = RandomSuite {
        elapsed: Duration::ZERO,
        terms: 0,
        eq_terms: 0,
        nonempty: 0,
        oracle: Vec::new(),
        aggregate: Vec::new(),
        typing: Vec::new(),
        other: Vec::new(),
    };
    for seed in 0..RANDOM_CATALOGS {
        let case = random_case(seed, 6);
        match check_case(&case, ORACLE_LIMIT) {
            Ok(report) => {
                s.terms += report.terms.len();
                s.nonempty += usize::from(!report.terms.is_empty());
                if case.request.aggregates.iter().any(|a| a.op == AggregateOp::Eq) {
                    s.eq_terms += report.terms.len();
                }
            }
            Err(v @ (Violation::OracleMismatch { .. } | Violation::Order { .. } | Violation::Count { .. })) => {
                s.oracle.push(v)
            }
            Err(v @ Violation::Aggregate { .. }) => s.aggregate.push(v),
            Err(v @ (Violation::IllTyped { .. } | Violation::OffTarget { .. })) => s.typing.push(v),
            Err(v) => s.other.push(v),
        }
    }
    s.elapsed = start.elapsed();
    s
}

fn oracle_equivalence(s: &RandomSuite) -> Verdict {
    let detail = format!(
        "{RANDOM_CATALOGS} catalogs, {} terms ({} non-empty cases), {} mismatches, {} errors, {:.2} s",
        s.terms,
        s.nonempty,
        s.oracle.len(),
        s.other.len(),
        s.elapsed.as_secs_f64()
    );
    let first = s.oracle.first().or(s.other.first()).map(|v| format!("; first: {v}")).unwrap_or_default();
    check(s.oracle.is_empty() && s.other.is_empty() && s.elapsed < Duration::from_secs(60), detail + &first)
}

fn tower_fixtures() -> Verdict {
    let catalog = catalog("tower");
    let mut notes = Vec::new();
    let mut ok = true;
    let goal = AtomSet::of(["tower"]);
    for k in 0..=3u64 {
        let req = Request::new(goal.clone()).bounded(10, 256).with_aggregate("cubes", AggregateOp::Eq, k);
        let out = solve(&catalog, &req).map_err(|e| e.to_string())?;
        let expected = format!("base({}cap{})", "cube(".repeat(k as usize), ")".repeat(k as usize));
        let shown: Vec<&str> = out.document.results.iter().map(|r| r.display.as_str()).collect();
        // independent witness: the brute-force oracle over the same request
        let repo = dynamic_expand(&static_repository(&catalog), &req, &catalog).map_err(|e| e.to_string())?;
        let brute = inhabitants(&repo, catalog.taxonomy(), &translate_request(&req), 10, ORACLE_LIMIT)
            .map_err(|e| e.to_string())?;
        let good = out.document.count == Count::Finite(1) && shown == [expected.as_str()] && brute.len() == 1;
        ok &= good;
        notes.push(format!("k={k}: {} {}", out.document.count, shown.join(",")));
    }
    let out = solve(&catalog, &request("unconstrained.json")).map_err(|e| e.to_string())?;
    let good =
        out.document.count == Count::Infinite && out.document.results.len() == 2 && out.document.request.max_size == 3;
    ok &= good;
    notes.push(format!(
        "unconstrained: {} with {} terms at max_size 3",
        out.document.count,
        out.document.results.len()
    ));
    check(ok, notes.join("; "))
}

fn aggregation_consistency(s: &RandomSuite) -> Verdict {
    let first = s.aggregate.first().map(|v| format!("; first: {v}")).unwrap_or_default();
    check(
        s.aggregate.is_empty() && s.eq_terms > 0,
        format!("{} violations over {} terms under `eq` aggregates{first}", s.aggregate.len(), s.eq_terms),
    )
}

fn typecheck_soundness(s: &RandomSuite) -> Verdict {
    // fixture results go through the same checker as the random suite
    let mut checked = s.terms;
    let mut failures = s.typing.len();
    for (name, req) in [
        ("tower", "cubes3.json"),
        ("tower", "unconstrained.json"),
        ("arm", "arm_dof4.json"),
        ("arm", "arm_dof5.json"),
        ("arm", "arm_dof6.json"),
    ] {
        let catalog = catalog(name);
        let req = request(req);
        let out = solve(&catalog, &req).map_err(|e| e.to_string())?;
        let targets = translate_request(&req);
        for row in &out.document.results {
            // results carry static ids; their erased type must still meet the erased goal
            checked += 1;
            let erased: Vec<AtomSet> = targets.iter().map(AtomSet::erase).collect();
            let ok = typecheck(&static_repository(&catalog), catalog.taxonomy(), &row.term)
                .is_ok_and(|ty| erased.iter().any(|t| ty.leq(t, catalog.taxonomy())));
            failures += usize::from(!ok);
        }
    }
    let pct = if checked == 0 { 0.0 } else { 100.0 * (checked - failures) as f64 / checked as f64 };
    check(failures == 0 && checked > 0, format!("{pct:.1}% of {checked} terms typecheck below a start target"))
}

fn timing_envelope() -> Verdict {
    let catalog = catalog("arm");
    let combinators = static_repository(&catalog).len();
    let mut ok = combinators == 28;
    let mut notes = vec![format!("{combinators} combinators")];
    let mut sample = None;
    for (dof, budget) in [(4, 1.0), (5, 2.0), (6, 5.0)] {
        let req = request(&format!("arm_dof{dof}.json"));
        let start = Instant::now();
        let out = solve(&catalog, &req).map_err(|e| e.to_string())?;
        let secs = start.elapsed().as_secs_f64();
        ok &= secs <= budget && out.document.results.len() == 256;
        notes.push(format!("dof{dof} {:.3} s (<= {budget} s, count {})", secs, out.document.count));
        sample = out.document.results.into_iter().next();
    }
    let row = sample.ok_or("arm request produced no results")?;
    let start = Instant::now();
    let program = program_for(&row, &catalog).map_err(|e| e.to_string())?;
    let scene = assemble(&program, &catalog).map_err(|e| e.to_string())?;
    let glb = export(&scene, ExportFormat::Gltf, &catalog, &MeshCache::new());
    let json = export(&scene, ExportFormat::SceneJson, &catalog, &MeshCache::new());
    let secs = start.elapsed().as_secs_f64();
    ok &= secs <= 1.0 && glb.warnings.is_empty() && !json.bytes.is_empty();
    notes.push(format!("interpret+assemble+export {:.1} ms (<= 1 s)", secs * 1e3));
    check(ok, notes.join("; "))
}

fn geometry_invariants() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut joints = 0;
    for (name, reqs) in [
        ("tower", &["cubes3.json", "unconstrained.json"][..]),
        ("arm", &["arm_dof4.json", "arm_dof5.json", "arm_dof6.json"][..]),
    ] {
        let catalog = catalog(name);
        for req in reqs {
            let out = solve(&catalog, &request(req)).map_err(|e| e.to_string())?;
            let programs: Vec<_> = out
                .document
                .results
                .iter()
                .map(|r| program_for(r, &catalog))
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            for scene in assemble_batch(&programs, &catalog) {
                let scene = scene.map_err(|e| e.to_string())?;
                joints += scene.joints.len();
                worst = worst.max(mate_residual(&scene, &catalog));
            }
        }
    }
    for seed in 0..64 {
        let case = random_case(seed, 6);
        let repo = dynamic_expand(&static_repository(&case.catalog), &case.request, &case.catalog)
            .map_err(|e| e.to_string())?;
        let report = check_case(&case, ORACLE_LIMIT).map_err(|e| e.to_string())?;
        for t in report.terms.iter().take(32) {
            let program = interpret(t, &repo, &case.catalog).map_err(|e| e.to_string())?;
            let scene = assemble(&program, &case.catalog).map_err(|e| e.to_string())?;
            joints += scene.joints.len();
            worst = worst.max(mate_residual(&scene, &case.catalog));
        }
    }

    let (catalog, term) = chain_case(42, CHAIN_NODES);
    let program = interpret(&term, &static_repository(&catalog), &catalog).map_err(|e| e.to_string())?;
    let scene = assemble(&program, &catalog).map_err(|e| e.to_string())?;
    let orth = scene
        .instances
        .iter()
        .map(|i| {
            let r = i.pose.rotation;
            (r.transpose() * r - nalgebra::Matrix3::identity()).abs().max().max((r.determinant() - 1.0).abs())
        })
        .fold(0.0, f64::max);
    check(
        worst < RESIDUAL_TOLERANCE && orth < RESIDUAL_TOLERANCE && scene.instances.len() == CHAIN_NODES,
        format!(
            "max mate residual {worst:.2e} over {joints} joints; {CHAIN_NODES}-node chain orthonormality error {orth:.2e}"
        ),
    )
}

fn cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_modsynth")).args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    Ok(out.stdout)
}

fn service_run(dir: &Path, req: &Request) -> Result<(String, Vec<u8>), String> {
    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    runtime.block_on(async {
        let app = App::open(Arc::new(MemoryStore::new()), Config::default()).map_err(|e| e.to_string())?;
        let project = app
            .create_project(CreateProject { catalog_path: Some(dir.to_path_buf()), ..Default::default() })
            .map_err(|e| e.to_string())?;
        let pid = project["id"].as_str().ok_or("project id missing")?.to_string();
        let rid = app.submit(&pid, req.clone()).map_err(|e| e.to_string())?.id;
        app.wait(&pid, &rid, Duration::from_secs(60)).await.map_err(|e| e.to_string())?;
        let doc = app.results_document(&pid, &rid).map_err(|e| e.to_string())?;
        let art = app.assemble_result(&pid, &rid, 0, ExportFormat::SceneJson).map_err(|e| e.to_string())?;
        let (scene, _) = app.artifact(&art.id).map_err(|e| e.to_string())?;
        Ok((doc.as_str().to_owned(), scene))
    })
}

fn determinism() -> Verdict {
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, req) in [("tower", "cubes3.json"), ("tower", "unconstrained.json"), ("arm", "arm_dof4.json")] {
        let dir = fixtures().join(name);
        let req_path = fixtures().join("requests").join(req);
        let (dir_s, req_s) = (dir.to_str().ok_or("non-UTF-8 path")?, req_path.to_str().ok_or("non-UTF-8 path")?);
        let runs: Vec<Vec<u8>> =
            (0..3).map(|_| cli(&["solve", "--catalog", dir_s, "--request", req_s])).collect::<Result<_, _>>()?;
        let core = solve(&catalog(name), &request(req)).map_err(|e| e.to_string())?.document.to_json();
        let (service_doc, service_scene) = service_run(&dir, &request(req))?;
        let same_docs = runs.iter().all(|r| r == &runs[0])
            && runs[0] == core.as_bytes()
            && service_doc.as_bytes() == core.as_bytes();

        // scene-json of the first result, via CLI twice and via the service
        let out = solve(&catalog(name), &request(req)).map_err(|e| e.to_string())?;
        let row_term = out.document.results[0].term.to_string();
        let scenes: Vec<Vec<u8>> =
            (0..2).map(|_| cli(&["assemble", "--catalog", dir_s, "--term", &row_term])).collect::<Result<_, _>>()?;
        let same_scenes = scenes[0] == scenes[1] && scenes[0] == service_scene;
        ok &= same_docs && same_scenes;
        notes.push(format!(
            "{req}: results.json {} ({} bytes), scene-json {}",
            if same_docs { "identical" } else { "DIFFERS" },
            core.len(),
            if same_scenes { "identical" } else { "DIFFERS" }
        ));
    }
    check(ok, notes.join("; "))
}

fn main() {
    let suite = random_suite();
    let criteria: Vec<(&str, Verdict)> = vec![
        ("oracle equivalence", oracle_equivalence(&suite)),
        ("tower fixtures", tower_fixtures()),
        ("aggregation consistency", aggregation_consistency(&suite)),
        ("typecheck soundness", typecheck_soundness(&suite)),
        ("timing envelope", timing_envelope()),
        ("geometry invariants", geometry_invariants()),
        ("determinism", determinism()),
    ];
    let mut failed = 0;
    for (name, verdict) in &criteria {
        match verdict {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
