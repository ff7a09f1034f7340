//! Challenge/verify HTTP service.
//!
//! * `GET /api/v1/challenge` issues a single-use sentence challenge.
//! * `POST /api/v1/verify/{id}` takes a 16-bit PCM WAV body and returns the
//!   human/bot decision for that challenge.
//!
//! Errors are JSON objects `{"code": ..., "message": ...}`. Uploaded audio is
//! analysed in memory and never written to disk.

use std::future::Future;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;
use tokio::net::TcpListener;
use voxcap_core::analysis::{analyze_buffer, AnalysisError};
use voxcap_core::challenge::{
    ChallengeError, ChallengeId, ChallengeRegistry, Clock, Corpus, SystemClock, DEFAULT_TTL_SECS,
};
use voxcap_core::wav::parse_wav;
use voxcap_core::{FramingConfig, Model, NormalizedFeatures, RawFeatures, Verdict};

/// Content types accepted on the verify endpoint.
pub const WAV_CONTENT_TYPES: [&str; 5] = [
    "audio/wav",
    "audio/x-wav",
    "audio/wave",
    "audio/vnd.wave",
    "application/octet-stream",
];

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub ttl_secs: u64,
    pub min_duration_secs: f64,
    pub max_duration_secs: f64,
    pub framing: FramingConfig,
    /// Seeds sentence selection for reproducible runs.
    pub seed: Option<u64>,
    pub max_body_bytes: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            ttl_secs: DEFAULT_TTL_SECS,
            min_duration_secs: 1.0,
            max_duration_secs: 30.0,
            framing: FramingConfig::default(),
            seed: None,
            // 30 s of 48 kHz stereo plus headroom for extra chunks
            max_body_bytes: 8 * 1024 * 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ServiceError {
    ServiceUnavailable,
    UnknownChallenge,
    ChallengeExpired,
    ChallengeAlreadyUsed,
    UnsupportedMediaType(String),
    PayloadTooLarge,
    BadAudio(String),
    AudioTooShort { duration_secs: f64, min_secs: f64 },
    AudioTooLong { duration_secs: f64, max_secs: f64 },
    Internal(String),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::ServiceUnavailable => "ServiceUnavailable",
            ServiceError::UnknownChallenge => "UnknownChallenge",
            ServiceError::ChallengeExpired => "ChallengeExpired",
            ServiceError::ChallengeAlreadyUsed => "ChallengeAlreadyUsed",
            ServiceError::UnsupportedMediaType(_) => "UnsupportedMediaType",
            ServiceError::PayloadTooLarge => "PayloadTooLarge",
            ServiceError::BadAudio(_) => "BadAudio",
            ServiceError::AudioTooShort { .. } => "AudioTooShort",
            ServiceError::AudioTooLong { .. } => "AudioTooLong",
            ServiceError::Internal(_) => "Internal",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::ServiceUnavailable => StatusCode::SERVICE_UNAVAILABLE,
            ServiceError::UnknownChallenge => StatusCode::NOT_FOUND,
            ServiceError::ChallengeExpired => StatusCode::GONE,
            ServiceError::ChallengeAlreadyUsed => StatusCode::CONFLICT,
            ServiceError::UnsupportedMediaType(_) => StatusCode::UNSUPPORTED_MEDIA_TYPE,
            ServiceError::PayloadTooLarge => StatusCode::PAYLOAD_TOO_LARGE,
            ServiceError::BadAudio(_) => StatusCode::BAD_REQUEST,
            ServiceError::AudioTooShort { .. } | ServiceError::AudioTooLong { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn message(&self) -> String {
        match self {
            ServiceError::ServiceUnavailable => "service has no corpus or model loaded".into(),
            ServiceError::UnknownChallenge => "no such challenge".into(),
            ServiceError::ChallengeExpired => "challenge has expired; request a new one".into(),
            ServiceError::ChallengeAlreadyUsed => "challenge was already used; request a new one".into(),
            ServiceError::UnsupportedMediaType(ct) => {
                format!("content type {ct:?} not accepted; send audio/wav")
            }
            ServiceError::PayloadTooLarge => "request body too large".into(),
            ServiceError::BadAudio(m) => format!("could not read audio: {m}"),
            ServiceError::AudioTooShort {
                duration_secs,
                min_secs,
            } => {
                format!("recording is {duration_secs:.2} s, at least {min_secs} s required")
            }
            ServiceError::AudioTooLong {
                duration_secs,
                max_secs,
            } => {
                format!("recording is {duration_secs:.2} s, at most {max_secs} s allowed")
            }
            ServiceError::Internal(m) => m.clone(),
        }
    }
}

impl From<ChallengeError> for ServiceError {
    fn from(e: ChallengeError) -> Self {
        match e {
            ChallengeError::UnknownChallenge => ServiceError::UnknownChallenge,
            ChallengeError::ChallengeExpired => ServiceError::ChallengeExpired,
            ChallengeError::ChallengeAlreadyUsed => ServiceError::ChallengeAlreadyUsed,
            ChallengeError::EmptyCorpus | ChallengeError::NoEligibleSentences | ChallengeError::NoDocuments => {
                ServiceError::ServiceUnavailable
            }
            other => ServiceError::Internal(other.to_string()),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            code: self.code(),
            message: self.message(),
        };
        (self.status(), Json(body)).into_response()
    }
}

/// Public view of an issued challenge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChallengeView {
    pub id: ChallengeId,
    pub sentence: String,
    pub expires_at: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeatureView {
    pub raw: RawFeatures,
    pub normalized: NormalizedFeatures,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyResult {
    pub challenge_id: ChallengeId,
    pub verdict: Verdict,
    pub score: f64,
    pub features: FeatureView,
}

/// Shared state: the challenge registry and the immutable model.
pub struct Service {
    registry: Option<ChallengeRegistry>,
    model: Option<Model>,
    config: ServiceConfig,
}

impl Service {
    pub fn new(corpus: Corpus, model: Model, config: ServiceConfig) -> Self {
        Self::with_clock(corpus, model, config, Arc::new(SystemClock))
    }

    pub fn with_clock(corpus: Corpus, model: Model, config: ServiceConfig, clock: Arc<dyn Clock>) -> Self {
        let registry = ChallengeRegistry::new(Arc::new(corpus), config.ttl_secs, clock, config.seed);
        Self {
            registry: Some(registry),
            model: Some(model),
            config,
        }
    }

    /// A service with nothing loaded; every request is `ServiceUnavailable`.
    pub fn unconfigured(config: ServiceConfig) -> Self {
        Self {
            registry: None,
            model: None,
            config,
        }
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    fn parts(&self) -> Result<(&ChallengeRegistry, &Model), ServiceError> {
        match (&self.registry, &self.model) {
            (Some(r), Some(m)) => Ok((r, m)),
            _ => Err(ServiceError::ServiceUnavailable),
        }
    }

    pub fn create_challenge(&self) -> Result<ChallengeView, ServiceError> {
        let (registry, _) = self.parts()?;
        let c = registry.issue()?;
        Ok(ChallengeView {
            id: c.id,
            sentence: c.sentence,
            expires_at: c.expires_at,
        })
    }

    /// Validates the challenge and audio, runs the pipeline, then consumes
    /// the challenge. Only the consume step can race; exactly one concurrent
    /// caller wins it.
    pub fn verify(&self, id: &ChallengeId, audio: &[u8]) -> Result<VerifyResult, ServiceError> {
        let (registry, model) = self.parts()?;
        registry.check(id)?;
        let buffer = parse_wav(audio).map_err(|e| ServiceError::BadAudio(e.to_string()))?;
        let duration_secs = buffer.duration_secs();
        if duration_secs < self.config.min_duration_secs {
            return Err(ServiceError::AudioTooShort {
                duration_secs,
                min_secs: self.config.min_duration_secs,
            });
        }
        if duration_secs > self.config.max_duration_secs {
            return Err(ServiceError::AudioTooLong {
                duration_secs,
                max_secs: self.config.max_duration_secs,
            });
        }
        let analysis = analyze_buffer(&buffer, &self.config.framing, model).map_err(|e| match e {
            AnalysisError::Wav(e) => ServiceError::BadAudio(e.to_string()),
            AnalysisError::Features(e) => ServiceError::BadAudio(e.to_string()),
        })?;
        drop(buffer);
        registry.consume(id)?;
        Ok(VerifyResult {
            challenge_id: id.clone(),
            verdict: analysis.decision.verdict,
            score: analysis.decision.score,
            features: FeatureView {
                raw: analysis.raw,
                normalized: analysis.decision.features,
            },
        })
    }
}

async fn challenge_handler(State(svc): State<Arc<Service>>) -> Result<Json<ChallengeView>, ServiceError> {
    svc.create_challenge().map(Json)
}

fn check_content_type(headers: &HeaderMap) -> Result<(), ServiceError> {
    let raw = headers
        .get(header::CONTENT_TYPE)
        .map(|v| v.to_str().unwrap_or("<non-ascii>").to_owned())
        .unwrap_or_default();
    let essence = raw.split(';').next().unwrap_or("").trim().to_ascii_lowercase();
    if WAV_CONTENT_TYPES.contains(&essence.as_str()) {
        Ok(())
    } else {
        Err(ServiceError::UnsupportedMediaType(raw))
    }
}

async fn verify_handler(
    State(svc): State<Arc<Service>>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Result<Bytes, BytesRejection>,
) -> Result<Json<VerifyResult>, ServiceError> {
    check_content_type(&headers)?;
    let body = body.map_err(|rejection| {
        if rejection.status() == StatusCode::PAYLOAD_TOO_LARGE {
            ServiceError::PayloadTooLarge
        } else {
            ServiceError::BadAudio(rejection.body_text())
        }
    })?;
    let id = ChallengeId::from(id.as_str());
    let result = tokio::task::spawn_blocking(move || svc.verify(&id, &body))
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))??;
    tracing::debug!(challenge = %result.challenge_id, verdict = %result.verdict, score = result.score, "verified");
    Ok(Json(result))
}

pub fn router(service: Arc<Service>) -> Router {
    let limit = service.config.max_body_bytes;
    Router::new()
        .route("/api/v1/challenge", get(challenge_handler))
        .route("/api/v1/verify/{id}", post(verify_handler))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(service)
}

/// Serves until `shutdown` resolves, then drains in-flight requests.
pub async fn serve<F>(listener: TcpListener, service: Arc<Service>, shutdown: F) -> std::io::Result<()>
where
    F: Future<Output = ()> + Send + 'static,
{
    axum::serve(listener, router(service))
        .with_graceful_shutdown(shutdown)
        .await
}
