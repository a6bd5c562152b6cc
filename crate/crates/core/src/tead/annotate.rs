//! Corpus annotation: prompt each record, parse the reply, convert AUs to
//! blendshape weights. Failures are retried with exponential backoff and
//! eventually counted as skips — a record is never fabricated.

use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::facs::{au_to_blendshapes, AuBlendshapeMap};
use crate::scalar::Scalar;
use crate::tead::{
    build_annotation_prompt, parse_annotation, AnnotationClient, CorpusRecord, Quadruple,
};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnnotateConfig {
    /// Worker threads for live annotation. Offline fixture runs are
    /// deterministic regardless since results keep input order.
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    /// Additional attempts after the first failure.
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    /// Base backoff; attempt k sleeps base * 2^k.
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    /// Minimum spacing between request starts across all workers.
    #[serde(default)]
    pub min_request_interval_ms: u64,
}

fn default_concurrency() -> usize {
    4
}

fn default_max_retries() -> u32 {
    2
}

fn default_backoff_ms() -> u64 {
    250
}

impl Default for AnnotateConfig {
    fn default() -> Self {
        Self {
            concurrency: default_concurrency(),
            max_retries: default_max_retries(),
            backoff_ms: default_backoff_ms(),
            min_request_interval_ms: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SkippedRecord {
    pub id: String,
    pub reason: String,
}

/// Everything an annotation run produced: quadruples in input order, plus an
/// explicit account of what was skipped and why.
#[derive(Clone, Debug)]
pub struct AnnotateOutcome<T> {
    pub quadruples: Vec<Quadruple<T>>,
    pub skipped: Vec<SkippedRecord>,
}

impl<T> AnnotateOutcome<T> {
    pub fn ok_count(&self) -> usize {
        self.quadruples.len()
    }

    pub fn skip_count(&self) -> usize {
        self.skipped.len()
    }
}

enum RecordResult<T> {
    Ok(Quadruple<T>),
    Skipped(SkippedRecord),
}

/// Annotate every record. Output quadruple order matches input order even
/// under concurrency; skips are reported in input order too.
pub fn annotate_corpus<T: Scalar>(
    records: &[CorpusRecord],
    client: &dyn AnnotationClient,
    config: &AnnotateConfig,
    au_map: &AuBlendshapeMap<T>,
) -> AnnotateOutcome<T> {
    let workers = config.concurrency.max(1).min(records.len().max(1));
    let mut slots: Vec<Option<RecordResult<T>>> = Vec::new();
    slots.resize_with(records.len(), || None);

    if workers <= 1 {
        for (i, record) in records.iter().enumerate() {
            slots[i] = Some(annotate_one(record, client, config, au_map));
        }
    } else {
        let queue: Mutex<VecDeque<usize>> = Mutex::new((0..records.len()).collect());
        let slot_cells: Vec<Mutex<Option<RecordResult<T>>>> =
            (0..records.len()).map(|_| Mutex::new(None)).collect();
        let gate = Mutex::new(std::time::Instant::now());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let index = match queue.lock().unwrap().pop_front() {
                        Some(i) => i,
                        None => break,
                    };
                    if config.min_request_interval_ms > 0 {
                        rate_limit(&gate, config.min_request_interval_ms);
                    }
                    let result = annotate_one(&records[index], client, config, au_map);
                    *slot_cells[index].lock().unwrap() = Some(result);
                });
            }
        });
        for (slot, cell) in slots.iter_mut().zip(slot_cells) {
            *slot = cell.into_inner().unwrap();
        }
    }

    let mut quadruples = Vec::new();
    let mut skipped = Vec::new();
    for slot in slots {
        match slot.expect("every record produces a result") {
            RecordResult::Ok(q) => quadruples.push(q),
            RecordResult::Skipped(s) => {
                log::warn!("skipping record '{}': {}", s.id, s.reason);
                skipped.push(s);
            }
        }
    }
    AnnotateOutcome {
        quadruples,
        skipped,
    }
}

fn rate_limit(gate: &Mutex<std::time::Instant>, interval_ms: u64) {
    let interval = Duration::from_millis(interval_ms);
    loop {
        let now = std::time::Instant::now();
        let mut last = gate.lock().unwrap();
        let elapsed = now.duration_since(*last);
        if elapsed >= interval {
            *last = now;
            return;
        }
        let wait = interval - elapsed;
        drop(last);
        std::thread::sleep(wait);
    }
}

fn annotate_one<T: Scalar>(
    record: &CorpusRecord,
    client: &dyn AnnotationClient,
    config: &AnnotateConfig,
    au_map: &AuBlendshapeMap<T>,
) -> RecordResult<T> {
    let prompt = build_annotation_prompt(record, au_map);
    let mut last_error = String::new();
    for attempt in 0..=config.max_retries {
        if attempt > 0 {
            let backoff = config.backoff_ms.saturating_mul(1 << (attempt - 1));
            std::thread::sleep(Duration::from_millis(backoff));
        }
        let raw = match client.complete(&prompt) {
            Ok(raw) => raw,
            Err(e) => {
                last_error = format!("transport ({e})");
                continue;
            }
        };
        match parse_annotation(&raw) {
            Ok(annotation) => {
                let blendshapes = au_to_blendshapes(&annotation.aus, au_map);
                return RecordResult::Ok(Quadruple {
                    id: record.id.clone(),
                    transcript: record.transcript.clone(),
                    tags: annotation.tags,
                    blendshapes,
                    situation: annotation.situation,
                });
            }
            Err(e) => {
                last_error = format!("malformed response ({e})");
                continue;
            }
        }
    }
    RecordResult::Skipped(SkippedRecord {
        id: record.id.clone(),
        reason: last_error,
    })
}
