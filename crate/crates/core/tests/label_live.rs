mod common;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use common::{MockServer, Response};
use sdg_core::io::{read_jsonl, write_jsonl};
use sdg_core::labelgen::{
    generate_labels, BackendError, GenerationOptions, LabeledCourse, LiveBackend, LlmParams, Provenance,
};
use sdg_core::pipeline::{label_stage, LabelPaths};
use sdg_core::preprocess::CleanCourse;

const CLINICAL_PRACTICE_VECTOR: [u8; 17] = [0, 0, 1, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0];

fn clinical_practice() -> CleanCourse {
    let name = "Clinical Practice";
    let description = "Clinical Practice in nursing environment.";
    let objective = "Students- can apply the theoretical and clinical competence required by the clinical \
        practice environment to the nursing care of clients/patients- can maintain and promote the health of \
        clients/patients and their significant others in a client-oriented way in nursing care- follow the \
        ethical guidelines and principles of nursing- work responsibly as members of work groups and work \
        community- can assess their professional competence and develop it further.";
    CleanCourse {
        id: "NUR-101".into(),
        name: name.into(),
        description: description.into(),
        objective: objective.into(),
        year: 2022,
        degree: "Nursing".into(),
        combined_text: CleanCourse::render_combined(name, description, objective),
    }
}

fn course(id: &str) -> CleanCourse {
    CleanCourse {
        id: id.into(),
        ..clinical_practice()
    }
}

fn reply(text: &str) -> Response {
    Response::json(200, serde_json::json!({"predictions": [{"content": text}]}).to_string())
}

fn backend(server: &MockServer) -> LiveBackend {
    LiveBackend::new(
        &format!("{}/v1/complete", server.url),
        Some("tok".into()),
        "predictions.0.content",
        Duration::from_secs(5),
    )
}

fn fast() -> GenerationOptions {
    GenerationOptions {
        retry_delay: Duration::from_millis(1),
        ..GenerationOptions::default()
    }
}

#[test]
fn clinical_practice_course_encodes_to_expected_vector() {
    let server = MockServer::start(|_| reply("3, 5, 8"));
    let out = generate_labels(&[clinical_practice()], &backend(&server), &LlmParams::default(), &fast()).unwrap();
    let l = &out.labeled[0];
    assert_eq!(*l.labels.slots(), CLINICAL_PRACTICE_VECTOR);
    assert_eq!(l.provenance, Provenance::Generated);
    assert_eq!(l.raw_response.as_deref(), Some("3, 5, 8"));
    assert!(!l.needs_review);

    let req = &server.requests()[0];
    assert_eq!(req.method, "POST");
    assert_eq!(req.path(), "/v1/complete");
    assert_eq!(req.header("authorization"), Some("Bearer tok"));
    let body: serde_json::Value = serde_json::from_slice(&req.body).unwrap();
    assert_eq!(body["temperature"], 0.2);
    assert_eq!(body["max_output_tokens"], 500);
    let prompt = body["prompt"].as_str().unwrap();
    assert!(prompt.contains("Given a Clinical Practice, the student learns: Clinical Practice in nursing environment."));
    assert!(prompt.ends_with("never use the goal number 4."));
}

#[test]
fn auth_failure_stops_the_run() {
    let server = MockServer::start(|_| Response::json(401, "{}"));
    let courses: Vec<CleanCourse> = (0..5).map(|i| course(&format!("c{i}"))).collect();
    let err = generate_labels(&courses, &backend(&server), &LlmParams::default(), &fast()).unwrap_err();
    assert!(matches!(err, BackendError::Fatal(_)), "{err:?}");
    assert!(server.requests().len() <= GenerationOptions::default().max_in_flight);
}

#[test]
fn garbage_twice_then_valid_is_retried() {
    let hits = Arc::new(AtomicUsize::new(0));
    let h = Arc::clone(&hits);
    let server = MockServer::start(move |_| match h.fetch_add(1, Ordering::SeqCst) {
        0 => reply("I cannot say."),
        1 => Response::json(200, "not json"),
        _ => reply("Goals 13 and 7"),
    });
    let out = generate_labels(&[clinical_practice()], &backend(&server), &LlmParams::default(), &fast()).unwrap();
    let l = &out.labeled[0];
    assert_eq!(l.attempts, 3);
    assert_eq!(sdg_core::decode_labels(&l.labels).goals(), [7, 13]);
    assert_eq!(out.responses[0], ["I cannot say.", "Goals 13 and 7"]);
}

#[test]
fn persistent_garbage_routes_to_review() {
    let server = MockServer::start(|_| reply("Goal 4 only"));
    let out = generate_labels(&[clinical_practice()], &backend(&server), &LlmParams::default(), &fast()).unwrap();
    let l = &out.labeled[0];
    assert!(l.needs_review);
    assert!(l.labels.is_zero());
    assert_eq!(l.attempts, 3);
    assert_eq!(out.review_queue().count(), 1);
}

#[test]
fn output_order_matches_input_under_concurrency() {
    let server = MockServer::start(|req| {
        let body: serde_json::Value = serde_json::from_slice(&req.body).unwrap();
        let prompt = body["prompt"].as_str().unwrap().to_string();
        // Name is "Course N"; answer with goal N and make early courses slow.
        let n: u64 = prompt
            .split("Given a Course ")
            .nth(1)
            .and_then(|s| s.split(',').next())
            .and_then(|s| s.parse().ok())
            .unwrap();
        std::thread::sleep(Duration::from_millis(40 - 2 * n));
        reply(&format!("{}", if n == 4 { 17 } else { n }))
    });
    let courses: Vec<CleanCourse> = (1..=17)
        .map(|n| CleanCourse {
            name: format!("Course {n}"),
            ..course(&format!("c{n:02}"))
        })
        .collect();
    let out = generate_labels(&courses, &backend(&server), &LlmParams::default(), &fast()).unwrap();
    for (n, l) in (1..=17u8).zip(&out.labeled) {
        assert_eq!(l.course.id, format!("c{n:02}"));
        let expect = if n == 4 { 17 } else { n };
        assert_eq!(sdg_core::decode_labels(&l.labels).goals(), [expect]);
    }
}

#[test]
fn label_stage_archives_responses_and_applies_corrections() {
    let server = MockServer::start(|req| {
        let body: serde_json::Value = serde_json::from_slice(&req.body).unwrap();
        if body["prompt"].as_str().unwrap().contains("Given a Broken") {
            reply("no idea")
        } else {
            reply("3, 5, 8")
        }
    });
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("clean.jsonl");
    let broken = CleanCourse {
        name: "Broken".into(),
        ..course("B-1")
    };
    let fixed = CleanCourse {
        name: "Broken".into(),
        ..course("B-2")
    };
    write_jsonl(&input, &[clinical_practice(), broken, fixed]).unwrap();
    let corrections = dir.path().join("corrections.jsonl");
    std::fs::write(&corrections, "{\"course_id\": \"B-2\", \"labels\": [3, 8]}\n").unwrap();

    let paths = LabelPaths {
        input: &input,
        out: &dir.path().join("labeled.jsonl"),
        review_queue: &dir.path().join("review.jsonl"),
        responses_dir: &dir.path().join("responses"),
        corrections: Some(&corrections),
    };
    let summary = label_stage(&paths, &backend(&server), &LlmParams::default(), &fast()).unwrap();
    assert_eq!((summary.total, summary.corrected, summary.needs_review), (3, 1, 1));

    let labeled: Vec<LabeledCourse> = read_jsonl(paths.out).unwrap();
    assert_eq!(labeled[2].provenance, Provenance::Corrected);
    assert_eq!(labeled[2].labels.slots().iter().filter(|&&b| b == 1).count(), 2);
    assert!(labeled[2].labels.is_set(2) && labeled[2].labels.is_set(7));
    let queue: Vec<LabeledCourse> = read_jsonl(paths.review_queue).unwrap();
    assert_eq!(queue.len(), 1);
    assert_eq!(queue[0].course.id, "B-1");
    let archive = std::fs::read_to_string(dir.path().join("responses/NUR-101.txt")).unwrap();
    assert_eq!(archive, "--- attempt 1 ---\n3, 5, 8\n");
    let archive = std::fs::read_to_string(dir.path().join("responses/B-1.txt")).unwrap();
    assert_eq!(archive.matches("--- attempt").count(), 3);
}
