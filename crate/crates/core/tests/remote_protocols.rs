use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::State;
use axum::routing::post;
use axum::{Json, Router};

use sciqa_core::corpus::Passage;
use sciqa_core::eval::{RemoteScorer, ScoreRequest, ScoreResponse, SemanticScorer};
use sciqa_core::reader::{
    ReadRequest, ReadResponse, Reader, ReaderConfig, ReaderError, ReaderPassage, RemoteReader,
    WireAnswer,
};
use sciqa_core::retriever::TfIdfModel;
use sciqa_core::text::Tokenizer;

#[derive(Clone, Copy)]
enum Mode {
    Echo,
    ShiftByOne,
    Slow,
}

/// Answers with the first occurrence of the query inside each passage.
async fn read(State(mode): State<Mode>, Json(req): Json<ReadRequest>) -> Json<ReadResponse> {
    if let Mode::Slow = mode {
        tokio::time::sleep(Duration::from_secs(2)).await;
    }
    let mut answers = Vec::new();
    for p in &req.passages {
        if let Some(byte) = p.text.find(&req.query) {
            let start = p.text[..byte].chars().count();
            let end = start + req.query.chars().count();
            let start = if let Mode::ShiftByOne = mode {
                start + 1
            } else {
                start
            };
            let end = if let Mode::ShiftByOne = mode {
                end + 1
            } else {
                end
            };
            answers.push(WireAnswer {
                passage_id: p.passage_id.clone(),
                start,
                end,
                text: req.query.clone(),
                score: 0.9,
            });
        }
    }
    Json(ReadResponse { answers })
}

async fn score(Json(req): Json<ScoreRequest>) -> Json<ScoreResponse> {
    Json(ScoreResponse {
        scores: req
            .pairs
            .iter()
            .map(|p| if p.pred == p.gold { 1.0 } else { 0.25 })
            .collect(),
    })
}

fn spawn(mode: Mode) -> String {
    let (tx, rx) = std::sync::mpsc::channel::<SocketAddr>();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            let app = Router::new()
                .route("/read", post(read))
                .route("/score", post(score))
                .with_state(mode);
            axum::serve(listener, app).await.unwrap();
        });
    });
    format!("http://{}", rx.recv().unwrap())
}

fn passages() -> Vec<ReaderPassage> {
    let text =
        "Symptoms included tearing of the eyes, sore throat, cough, and runny nose in toddlers.";
    vec![ReaderPassage {
        passage: Passage {
            passage_id: "d1#0000".into(),
            doc_id: "d1".into(),
            index_in_doc: 0,
            char_start: 97_100,
            char_end: 97_100 + text.chars().count(),
            text: text.into(),
        },
        meta: [("name".to_string(), "Toddlers".to_string())].into(),
    }]
}

fn reader(url: &str, timeout: Duration) -> RemoteReader {
    let model = Arc::new(
        TfIdfModel::fit_texts(
            vec![("d1#0000".into(), "tearing".into())],
            Tokenizer::default(),
        )
        .unwrap(),
    );
    RemoteReader::new(url, timeout, model, ReaderConfig::default()).unwrap()
}

#[test]
fn echo_span_is_accepted_with_both_offset_frames() {
    let url = spawn(Mode::Echo);
    let out = reader(&url, Duration::from_secs(5))
        .read(
            "tearing of the eyes, sore throat, cough, and runny nose",
            &passages(),
            2,
        )
        .unwrap();
    assert_eq!(out.len(), 1);
    let a = &out[0];
    assert_eq!(a.offsets_in_context.width(), 55);
    assert_eq!(a.offsets_in_document.width(), 55);
    assert_eq!(
        a.offsets_in_document.start,
        97_100 + a.offsets_in_context.start
    );
    a.check_in_context().unwrap();
    assert_eq!(a.meta["name"], "Toddlers");
}

#[test]
fn shifted_span_is_a_protocol_violation() {
    let url = spawn(Mode::ShiftByOne);
    let err = reader(&url, Duration::from_secs(5))
        .read("sore throat", &passages(), 1)
        .unwrap_err();
    assert!(
        matches!(err, ReaderError::ProtocolViolation { index: 0, .. }),
        "{err:?}"
    );
}

#[test]
fn slow_server_times_out() {
    let url = spawn(Mode::Slow);
    let err = reader(&url, Duration::from_millis(200))
        .read("cough", &passages(), 1)
        .unwrap_err();
    assert!(matches!(err, ReaderError::RemoteUnavailable(_)), "{err:?}");
}

#[test]
fn no_match_yields_no_answer() {
    let url = spawn(Mode::Echo);
    let out = reader(&url, Duration::from_secs(5))
        .read("bocavirus", &passages(), 3)
        .unwrap();
    assert_eq!(out.len(), 1);
    assert!(out[0].is_no_answer());
}

#[test]
fn remote_scorer_round_trip() {
    let url = spawn(Mode::Echo);
    let scorer = RemoteScorer::new(&url, Duration::from_secs(5));
    let pairs = vec![
        ("a".to_string(), "a".to_string()),
        ("a".to_string(), "b".to_string()),
    ];
    assert_eq!(scorer.score_pairs(&pairs).unwrap(), vec![1.0, 0.25]);
}
