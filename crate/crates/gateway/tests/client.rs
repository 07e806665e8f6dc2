mod common;

use std::sync::Arc;

use common::{chat_body, prompt_of, StubServer};
use llmab_core::agents::PairEncoding;
use llmab_core::predictor::{PredictionKind, PredictionRequest, Predictor, Query};
use llmab_core::rng::rng_from_seed;
use llmab_core::types::{ArmSet, FeatureVector, History, HistoryKind};
use llmab_gateway::{
    baseline_direct_step, default_arm_labels, BaselineVariant, CachedClient, ChatRequest, DirectSettings, GatewayError,
    LlmPredictor, LlmSettings,
};

fn request(prompt: &str) -> ChatRequest {
    ChatRequest::user("stub-model", 0.0, prompt, 64)
}

#[test]
fn loopback_returns_content() {
    let stub = StubServer::constant("#1.0#");
    let c = stub.client().complete(&request("hello")).unwrap();
    assert_eq!(c.text, "#1.0#");
    assert_eq!(c.attempts, 1);
}

#[test]
fn rate_limited_then_ok_takes_two_attempts() {
    let stub = StubServer::start(|n, _| if n == 0 { (429, "slow down".into()) } else { (200, chat_body("#0.5#")) });
    let c = stub.client().complete(&request("x")).unwrap();
    assert_eq!((c.text.as_str(), c.attempts), ("#0.5#", 2));
    assert_eq!(stub.hits(), 2);
}

#[test]
fn server_errors_exhaust_retries() {
    let stub = StubServer::start(|_, _| (503, "down".into()));
    let err = stub.client().complete(&request("x")).unwrap_err();
    assert!(matches!(err, GatewayError::RetriesExhausted { attempts: 5, .. }), "{err}");
    assert_eq!(stub.hits(), 5);
}

#[test]
fn unauthorized_is_not_retried() {
    let stub = StubServer::start(|_, _| (401, "bad key".into()));
    let err = stub.client().complete(&request("x")).unwrap_err();
    assert!(matches!(err, GatewayError::Auth { status: 401, .. }));
    assert_eq!(stub.hits(), 1);
}

#[test]
fn malformed_envelope_is_reported() {
    let stub = StubServer::start(|_, _| (200, "{\"choices\": []}".into()));
    assert!(matches!(stub.client().complete(&request("x")), Err(GatewayError::Envelope(_))));
}

#[test]
fn identical_requests_hit_the_network_once() {
    let stub = StubServer::constant("#2#");
    let cached = CachedClient::live(stub.client());
    let r = request("same");
    assert_eq!(cached.cached_complete(&r, 0, 0).unwrap(), "#2#");
    assert_eq!(cached.cached_complete(&r, 0, 0).unwrap(), "#2#");
    assert_eq!(stub.hits(), 1);
    cached.cached_complete(&r, 1, 0).unwrap();
    assert_eq!(stub.hits(), 2);
    assert_eq!(cached.network_calls(), 2);
}

#[test]
fn record_then_replay_serves_the_same_text_offline() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("replay.jsonl");
    let stub = StubServer::start(|n, body| (200, chat_body(&format!("#{}# ({})", prompt_of(body).len(), n))));
    let recorded: Vec<String> = {
        let rec = CachedClient::record(stub.client(), &log).unwrap();
        ["a", "bb", "ccc"].iter().map(|p| rec.cached_complete(&request(p), 0, 0).unwrap()).collect()
    };
    drop(stub);
    let replay = CachedClient::replay(&log).unwrap();
    let replayed: Vec<String> =
        ["a", "bb", "ccc"].iter().map(|p| replay.cached_complete(&request(p), 0, 0).unwrap()).collect();
    assert_eq!(recorded, replayed);
    assert_eq!(replay.network_calls(), 0);
    assert!(matches!(replay.cached_complete(&request("a!"), 0, 0), Err(GatewayError::ReplayMiss { .. })));
}

#[test]
fn predictor_parses_and_retries_bad_completions() {
    // Attempt 0 of every prompt gets prose, later attempts a number.
    let stub = StubServer::start(|n, _| (200, chat_body(if n % 2 == 0 { "I think about 0.3" } else { "#0.3#" })));
    let gw = Arc::new(CachedClient::live(stub.client()));
    let p = LlmPredictor::new(gw, LlmSettings { model: "stub-model".into(), ..Default::default() });
    let h = History::<f64>::new(HistoryKind::Reward);
    let x = FeatureVector::from_f64(&[0.1, 0.2]).unwrap();
    let req = PredictionRequest { history: &h, query: Query::Arm(&x), temperature: 0.7, kind: PredictionKind::Reward, sample_index: 3 };
    let r = p.predict(&req, &mut rng_from_seed(0)).unwrap();
    assert_eq!(r.value, 0.3);
    assert_eq!(r.attempts, 2);
}

#[test]
fn predictor_gives_up_after_parse_budget() {
    let stub = StubServer::constant("no number here");
    let gw = Arc::new(CachedClient::live(stub.client()));
    let p = LlmPredictor::new(gw, LlmSettings { model: "m".into(), ..Default::default() });
    let h = History::<f64>::new(HistoryKind::Reward);
    let x = FeatureVector::from_f64(&[0.1]).unwrap();
    let req = PredictionRequest { history: &h, query: Query::Arm(&x), temperature: 0.0, kind: PredictionKind::Reward, sample_index: 0 };
    let err = p.predict(&req, &mut rng_from_seed(0)).unwrap_err();
    assert!(err.to_string().contains("3 attempts"), "{err}");
    assert_eq!(stub.hits(), 3);
}

#[test]
fn preference_predictions_are_clamped() {
    let stub = StubServer::constant("#1.7#");
    let p = LlmPredictor::new(Arc::new(CachedClient::live(stub.client())), LlmSettings { model: "m".into(), ..Default::default() });
    let h = History::<f64>::new(HistoryKind::Preference);
    let (a, b) = (FeatureVector::from_f64(&[0.5]).unwrap(), FeatureVector::from_f64(&[0.1]).unwrap());
    let encoded = llmab_core::agents::pair_feature(&a, &b, PairEncoding::Difference).unwrap();
    let query = Query::Pair { first: &a, second: &b, encoded };
    let req = PredictionRequest { history: &h, query, temperature: 1.0, kind: PredictionKind::PreferenceProbability, sample_index: 0 };
    assert_eq!(p.predict(&req, &mut rng_from_seed(0)).unwrap().value, 1.0);
}

fn sixteen_arms() -> ArmSet<f64> {
    ArmSet::new((0..16).map(|i| FeatureVector::from_f64(&[i as f64 / 16.0, 0.0]).unwrap()).collect()).unwrap()
}

#[test]
fn degenerate_direct_distribution_selects_that_button() {
    let labels = default_arm_labels(16);
    let answer = labels
        .iter()
        .map(|l| format!("{l}:{}", if l == "blue" { "1.0" } else { "0.0" }))
        .collect::<Vec<_>>()
        .join(",");
    let stub = StubServer::constant(&format!("Step by step... <Answer>#{answer}#</Answer>"));
    let gw = CachedClient::live(stub.client());
    let settings = DirectSettings { model: "m".into(), ..Default::default() };
    let arms = sixteen_arms();
    let mut h = History::new(HistoryKind::Reward);
    h.push_scalar(Some(2), arms.get(2).clone(), 0.4).unwrap();
    let mut rng = rng_from_seed(5);
    for variant in [BaselineVariant::NoFeature, BaselineVariant::FramingFeature, BaselineVariant::HistoryFeature] {
        for _ in 0..20 {
            let out = baseline_direct_step(variant, &gw, &settings, &labels, &arms, &h, 100, &mut rng).unwrap();
            assert_eq!(out.arm, 0);
        }
    }
    assert_eq!(stub.hits(), 3);
}

#[test]
fn direct_steps_replay_identically() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("direct.jsonl");
    let labels = default_arm_labels(16);
    let uniform = labels.iter().map(|l| format!("{l}:0.0625")).collect::<Vec<_>>().join(",");
    let stub = StubServer::constant(&format!("#{uniform}#"));
    let arms = sixteen_arms();
    let settings = DirectSettings { model: "m".into(), ..Default::default() };
    let run = |gw: &CachedClient| -> Vec<usize> {
        let mut h = History::new(HistoryKind::Reward);
        let mut rng = rng_from_seed(11);
        (0..10)
            .map(|_| {
                let arm = baseline_direct_step(BaselineVariant::NoFeature, gw, &settings, &labels, &arms, &h, 10, &mut rng).unwrap().arm;
                h.push_scalar(Some(arm), arms.get(arm).clone(), 0.5).unwrap();
                arm
            })
            .collect()
    };
    let recorded = run(&CachedClient::record(stub.client(), &log).unwrap());
    let replayed = run(&CachedClient::replay(&log).unwrap());
    assert_eq!(recorded, replayed);
}
