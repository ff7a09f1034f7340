use std::collections::HashSet;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;
use voxcap_core::calibration::Label;
use voxcap_core::challenge::{word_count, Corpus, ManualClock, MAX_WORDS, MIN_WORDS};
use voxcap_core::fixtures::generate;
use voxcap_core::wav::write_wav;
use voxcap_core::{analyze_wav, AudioBuffer, FramingConfig, Model};
use voxcap_service::{router, Service, ServiceConfig};

const START: u64 = 1_700_000_000;

fn service_with(config: ServiceConfig) -> (Router, Arc<Service>, Arc<ManualClock>) {
    let clock = Arc::new(ManualClock::new(START));
    let svc = Arc::new(Service::with_clock(
        Corpus::bundled(),
        Model::shipped_default(),
        config,
        clock.clone(),
    ));
    (router(svc.clone()), svc, clock)
}

fn seeded() -> (Router, Arc<Service>, Arc<ManualClock>) {
    service_with(ServiceConfig {
        seed: Some(7),
        ..Default::default()
    })
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, Value) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn challenge(app: &Router) -> Value {
    let (status, body) = send(app, Request::get("/api/v1/challenge").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    body
}

fn verify_req(id: &str, wav: Vec<u8>) -> Request<Body> {
    Request::post(format!("/api/v1/verify/{id}"))
        .header("content-type", "audio/wav")
        .body(Body::from(wav))
        .unwrap()
}

fn speech_wav() -> Vec<u8> {
    write_wav(&generate(Label::Natural, 42, 0, 16000).unwrap())
}

fn error_code(body: &Value) -> &str {
    body["code"].as_str().unwrap_or("<missing>")
}

#[tokio::test]
async fn challenge_shape() {
    let (app, _, _) = seeded();
    let body = challenge(&app).await;
    let sentence = body["sentence"].as_str().unwrap();
    assert!((MIN_WORDS..=MAX_WORDS).contains(&word_count(sentence)));
    assert_eq!(body["expires_at"].as_u64(), Some(START + 120));
    assert!(!body["id"].as_str().unwrap().is_empty());
}

#[tokio::test]
async fn verify_matches_direct_analysis() {
    let (app, _, _) = seeded();
    let id = challenge(&app).await["id"].as_str().unwrap().to_owned();
    let wav = speech_wav();
    let direct = analyze_wav(&wav, &FramingConfig::default(), &Model::shipped_default()).unwrap();

    let (status, body) = send(&app, verify_req(&id, wav)).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["challenge_id"], id.as_str());
    assert_eq!(body["verdict"], direct.decision.verdict.to_string());
    // f64 values survive the JSON round trip exactly
    assert_eq!(body["score"].as_f64(), Some(direct.decision.score));
    let raw = &body["features"]["raw"];
    assert_eq!(raw["energy"].as_f64(), Some(direct.raw.energy));
    assert_eq!(raw["amplitude"].as_f64(), Some(direct.raw.amplitude));
    assert_eq!(raw["zero_crossings"].as_f64(), Some(direct.raw.zero_crossings));
    assert_eq!(raw["frame_count"].as_u64(), Some(direct.raw.frame_count as u64));
    let norm = &body["features"]["normalized"];
    assert_eq!(norm["amplitude"].as_f64(), Some(direct.decision.features.amplitude));
}

#[tokio::test]
async fn second_verify_is_rejected() {
    let (app, _, _) = seeded();
    let id = challenge(&app).await["id"].as_str().unwrap().to_owned();
    let (first, _) = send(&app, verify_req(&id, speech_wav())).await;
    assert_eq!(first, StatusCode::OK);
    let (status, body) = send(&app, verify_req(&id, speech_wav())).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(error_code(&body), "ChallengeAlreadyUsed");
    assert!(body["message"].as_str().is_some());
}

#[tokio::test]
async fn expired_challenge_is_rejected() {
    let (app, _, clock) = seeded();
    let id = challenge(&app).await["id"].as_str().unwrap().to_owned();
    clock.advance(121);
    let (status, body) = send(&app, verify_req(&id, speech_wav())).await;
    assert_eq!(status, StatusCode::GONE);
    assert_eq!(error_code(&body), "ChallengeExpired");
}

#[tokio::test]
async fn unknown_challenge() {
    let (app, _, _) = seeded();
    let (status, body) = send(&app, verify_req("deadbeef", speech_wav())).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(error_code(&body), "UnknownChallenge");
}

#[tokio::test]
async fn audio_bounds_and_bad_audio() {
    let (app, svc, _) = seeded();
    let id = challenge(&app).await["id"].as_str().unwrap().to_owned();

    let short = write_wav(&AudioBuffer::new(vec![100; 3200], 16000).unwrap());
    let (status, body) = send(&app, verify_req(&id, short)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(error_code(&body), "AudioTooShort");

    let long = write_wav(&AudioBuffer::new(vec![100; 16000 * 31], 16000).unwrap());
    let (status, body) = send(&app, verify_req(&id, long)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(error_code(&body), "AudioTooLong");

    let (status, body) = send(&app, verify_req(&id, b"RIFF\x04\0\0\0WAVE".to_vec())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(error_code(&body), "BadAudio");

    // rejected uploads leave the challenge usable
    let (status, _) = send(&app, verify_req(&id, speech_wav())).await;
    assert_eq!(status, StatusCode::OK);
    assert!(svc.config().max_body_bytes > 0);
}

#[tokio::test]
async fn content_type_and_body_limit() {
    let (app, _, _) = service_with(ServiceConfig {
        max_body_bytes: 1024,
        ..Default::default()
    });
    let id = challenge(&app).await["id"].as_str().unwrap().to_owned();

    let req = Request::post(format!("/api/v1/verify/{id}"))
        .header("content-type", "text/plain")
        .body(Body::from(speech_wav()))
        .unwrap();
    let (status, body) = send(&app, req).await;
    assert_eq!(status, StatusCode::UNSUPPORTED_MEDIA_TYPE);
    assert_eq!(error_code(&body), "UnsupportedMediaType");

    let (status, body) = send(&app, verify_req(&id, speech_wav())).await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);
    assert_eq!(error_code(&body), "PayloadTooLarge");
}

#[tokio::test]
async fn unconfigured_service_is_unavailable() {
    let app = router(Arc::new(Service::unconfigured(ServiceConfig::default())));
    let (status, body) = send(&app, Request::get("/api/v1/challenge").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(error_code(&body), "ServiceUnavailable");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_duplicate_submits_have_one_winner() {
    let (app, _, _) = seeded();
    let id = challenge(&app).await["id"].as_str().unwrap().to_owned();
    let wav = speech_wav();
    let tasks: Vec<_> = (0..8)
        .map(|_| {
            let app = app.clone();
            let req = verify_req(&id, wav.clone());
            tokio::spawn(async move { send(&app, req).await })
        })
        .collect();
    let mut ok = 0;
    for t in tasks {
        let (status, body) = t.await.unwrap();
        if status == StatusCode::OK {
            ok += 1;
        } else {
            assert_eq!(error_code(&body), "ChallengeAlreadyUsed");
        }
    }
    assert_eq!(ok, 1);
}

#[tokio::test]
async fn ids_are_distinct() {
    let (app, _, _) = service_with(ServiceConfig::default());
    let mut seen = HashSet::new();
    for _ in 0..200 {
        let body = challenge(&app).await;
        assert!(seen.insert(body["id"].as_str().unwrap().to_owned()));
    }
}

#[tokio::test]
async fn seeded_sentence_sequence_is_reproducible() {
    async fn sentences() -> Vec<String> {
        let (app, _, _) = seeded();
        let mut out = Vec::new();
        for _ in 0..10 {
            out.push(challenge(&app).await["sentence"].as_str().unwrap().to_owned());
        }
        out
    }
    assert_eq!(sentences().await, sentences().await);
}

#[tokio::test]
async fn unknown_route_is_404() {
    let (app, _, _) = seeded();
    let resp = app
        .oneshot(Request::get("/api/v1/nothing").body(Body::empty()).unwrap())
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::NOT_FOUND);
}
