//! Sentence prompts and the single-use challenge lifecycle.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MIN_WORDS: usize = 8;
pub const MAX_WORDS: usize = 20;
pub const DEFAULT_TTL_SECS: u64 = 120;

const BUNDLED_TEXT: &str = include_str!("../corpus/default.txt");

#[derive(Debug, Error)]
pub enum ChallengeError {
    #[error("no documents supplied")]
    NoDocuments,
    #[error("no sentence of {MIN_WORDS} to {MAX_WORDS} words found")]
    NoEligibleSentences,
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("cannot read corpus text {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown challenge")]
    UnknownChallenge,
    #[error("challenge expired")]
    ChallengeExpired,
    #[error("challenge already used")]
    ChallengeAlreadyUsed,
}

/// Word count under the maximal-non-whitespace-run definition.
pub fn word_count(sentence: &str) -> usize {
    sentence.split_whitespace().count()
}

/// Splits at `.`, `!` or `?` when followed by whitespace or end of text.
/// Internal whitespace is collapsed to single spaces.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut chars = text.chars().peekable();
    while let Some(ch) = chars.next() {
        current.push(ch);
        let terminal = matches!(ch, '.' | '!' | '?');
        if chars.peek().is_none_or(|next| terminal && next.is_whitespace()) {
            let s = current.split_whitespace().collect::<Vec<_>>().join(" ");
            if !s.is_empty() {
                out.push(s);
            }
            current.clear();
        }
    }
    out
}

/// Eligible sentences drawn from one or more documents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    sentences: Vec<String>,
    source_names: Vec<String>,
}

impl Corpus {
    /// Keeps sentences of 8 to 20 words, first occurrence wins on duplicates.
    pub fn load<N, T>(documents: impl IntoIterator<Item = (N, T)>) -> Result<Self, ChallengeError>
    where
        N: Into<String>,
        T: AsRef<str>,
    {
        let mut sentences = Vec::new();
        let mut seen = std::collections::HashSet::new();
        let mut source_names = Vec::new();
        for (name, text) in documents {
            source_names.push(name.into());
            for s in split_sentences(text.as_ref()) {
                let n = word_count(&s);
                if (MIN_WORDS..=MAX_WORDS).contains(&n) && seen.insert(s.clone()) {
                    sentences.push(s);
                }
            }
        }
        if source_names.is_empty() {
            return Err(ChallengeError::NoDocuments);
        }
        if sentences.is_empty() {
            return Err(ChallengeError::NoEligibleSentences);
        }
        Ok(Self {
            sentences,
            source_names,
        })
    }

    pub fn from_paths<P: AsRef<Path>>(paths: &[P]) -> Result<Self, ChallengeError> {
        let docs = paths
            .iter()
            .map(|p| {
                let p = p.as_ref();
                std::fs::read_to_string(p)
                    .map(|t| (p.display().to_string(), t))
                    .map_err(|source| ChallengeError::Io {
                        path: p.display().to_string(),
                        source,
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::load(docs)
    }

    /// Small built-in text used when no corpus files are configured.
    pub fn bundled() -> Self {
        Self::load([("bundled", BUNDLED_TEXT)]).expect("bundled corpus has eligible sentences")
    }

    pub fn sentences(&self) -> &[String] {
        &self.sentences
    }

    pub fn source_names(&self) -> &[String] {
        &self.source_names
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Uniform draw with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<&str, ChallengeError> {
        if self.sentences.is_empty() {
            return Err(ChallengeError::EmptyCorpus);
        }
        Ok(&self.sentences[rng.random_range(0..self.sentences.len())])
    }
}

/// Opaque challenge token: 64 random bits followed by a process-wide counter.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChallengeId(String);

static ISSUE_COUNTER: AtomicU64 = AtomicU64::new(0);

impl ChallengeId {
    pub fn generate<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let n = ISSUE_COUNTER.fetch_add(1, Ordering::Relaxed);
        Self(format!("{:016x}{:016x}", rng.random::<u64>(), n))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for ChallengeId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl fmt::Display for ChallengeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChallengeState {
    Pending,
    Consumed,
    Expired,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Challenge {
    pub id: ChallengeId,
    pub sentence: String,
    pub issued_at: u64,
    pub expires_at: u64,
    state: ChallengeState,
}

impl Challenge {
    pub fn state(&self) -> ChallengeState {
        self.state
    }

    fn is_past_expiry(&self, now: u64) -> bool {
        now >= self.expires_at
    }

    /// Pending → Consumed.
    fn consume(&mut self, now: u64) -> Result<(), ChallengeError> {
        self.check(now)?;
        self.state = ChallengeState::Consumed;
        Ok(())
    }

    /// Fails unless pending and unexpired; lapses a pending challenge past
    /// its expiry to Expired.
    fn check(&mut self, now: u64) -> Result<(), ChallengeError> {
        match self.state {
            ChallengeState::Consumed => Err(ChallengeError::ChallengeAlreadyUsed),
            ChallengeState::Expired => Err(ChallengeError::ChallengeExpired),
            ChallengeState::Pending if self.is_past_expiry(now) => {
                self.state = ChallengeState::Expired;
                Err(ChallengeError::ChallengeExpired)
            }
            ChallengeState::Pending => Ok(()),
        }
    }
}

/// Draws a sentence and wraps it in a fresh pending challenge.
pub fn sample_sentence<R: Rng + ?Sized>(
    corpus: &Corpus,
    rng: &mut R,
    now: u64,
    ttl_secs: u64,
) -> Result<Challenge, ChallengeError> {
    let sentence = corpus.sample(rng)?.to_owned();
    Ok(Challenge {
        id: ChallengeId::generate(rng),
        sentence,
        issued_at: now,
        expires_at: now + ttl_secs.max(1),
        state: ChallengeState::Pending,
    })
}

/// Source of wall-clock seconds.
pub trait Clock: Send + Sync {
    fn now(&self) -> u64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> u64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    }
}

/// Manually advanced clock for tests.
#[derive(Debug, Default)]
pub struct ManualClock(AtomicU64);

impl ManualClock {
    pub fn new(start: u64) -> Self {
        Self(AtomicU64::new(start))
    }

    pub fn advance(&self, secs: u64) {
        self.0.fetch_add(secs, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }
}

impl<C: Clock + ?Sized> Clock for Arc<C> {
    fn now(&self) -> u64 {
        (**self).now()
    }
}

/// Issued challenges keyed by id. All transitions happen under one lock, so
/// concurrent consumers of the same id see exactly one success.
pub struct ChallengeRegistry {
    corpus: Arc<Corpus>,
    ttl_secs: u64,
    clock: Arc<dyn Clock>,
    rng: Mutex<ChaCha8Rng>,
    entries: Mutex<HashMap<ChallengeId, Challenge>>,
}

impl ChallengeRegistry {
    /// `seed` makes the sentence sequence reproducible.
    pub fn new(corpus: Arc<Corpus>, ttl_secs: u64, clock: Arc<dyn Clock>, seed: Option<u64>) -> Self {
        let rng = match seed {
            Some(s) => ChaCha8Rng::seed_from_u64(s),
            None => ChaCha8Rng::from_os_rng(),
        };
        Self {
            corpus,
            ttl_secs: ttl_secs.max(1),
            clock,
            rng: Mutex::new(rng),
            entries: Mutex::new(HashMap::new()),
        }
    }

    pub fn ttl_secs(&self) -> u64 {
        self.ttl_secs
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn issue(&self) -> Result<Challenge, ChallengeError> {
        let now = self.clock.now();
        let mut entries = self.entries.lock().expect("registry lock poisoned");
        // records are kept for one extra TTL past expiry so late submissions
        // still get a precise error
        let ttl = self.ttl_secs;
        entries.retain(|_, c| now < c.expires_at.saturating_add(ttl));
        let mut rng = self.rng.lock().expect("rng lock poisoned");
        loop {
            let c = sample_sentence(&self.corpus, &mut *rng, now, ttl)?;
            if !entries.contains_key(&c.id) {
                entries.insert(c.id.clone(), c.clone());
                return Ok(c);
            }
        }
    }

    /// Non-consuming validity check.
    pub fn check(&self, id: &ChallengeId) -> Result<Challenge, ChallengeError> {
        let now = self.clock.now();
        let mut entries = self.entries.lock().expect("registry lock poisoned");
        let c = entries.get_mut(id).ok_or(ChallengeError::UnknownChallenge)?;
        c.check(now)?;
        Ok(c.clone())
    }

    /// Atomically marks a pending challenge consumed.
    pub fn consume(&self, id: &ChallengeId) -> Result<Challenge, ChallengeError> {
        let now = self.clock.now();
        let mut entries = self.entries.lock().expect("registry lock poisoned");
        let c = entries.get_mut(id).ok_or(ChallengeError::UnknownChallenge)?;
        c.consume(now)?;
        Ok(c.clone())
    }

    pub fn state(&self, id: &ChallengeId) -> Option<ChallengeState> {
        let entries = self.entries.lock().expect("registry lock poisoned");
        entries.get(id).map(|c| c.state)
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("registry lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
