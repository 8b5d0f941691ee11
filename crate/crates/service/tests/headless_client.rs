//! Drives the HTTP API end to end with a scripted observer.

use std::path::Path;
use std::sync::Arc;

use colorfulness::color::RgbImage;
use colorfulness::dataset::{DatasetManifest, ManifestEntry};
use colorfulness::scaling::{grid_pairs, simulate_observer, SeedStream};
use colorfulness::stats::{spearman_slices, ScoreVector};
use colorfulness::synth::hsv_to_rgb;
use colorfulness_service::{replay_file, router, AppState};
use rand::SeedableRng;
use serde_json::{json, Value};

fn stimuli(dir: &Path, name: &str, n: usize) -> DatasetManifest {
    let entries = (0..n)
        .map(|k| {
            let id = format!("{name}{k:02}");
            let path = dir.join(format!("{id}.png"));
            let sat = k as f64 / n as f64;
            let rgb = hsv_to_rgb(0.1 * k as f64, sat, 0.8).map(|c| c.round() as u8);
            RgbImage::solid(4, 4, rgb).save_png(&path).unwrap();
            ManifestEntry {
                id,
                path,
                score: k as f64,
                source: name.into(),
            }
        })
        .collect();
    DatasetManifest::new(name, entries).unwrap()
}

struct Server {
    base: String,
    client: reqwest::Client,
}

impl Server {
    async fn start(data: &Path, manifests: Vec<DatasetManifest>) -> Self {
        let state = Arc::new(AppState::open(data, manifests).unwrap());
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        tokio::spawn(async move { axum::serve(listener, router(state)).await.unwrap() });
        Self {
            base,
            client: reqwest::Client::new(),
        }
    }

    async fn get(&self, path: &str) -> (u16, Value) {
        let r = self.client.get(format!("{}{path}", self.base)).send().await.unwrap();
        (r.status().as_u16(), r.json().await.unwrap())
    }

    async fn post(&self, path: &str, body: Value) -> (u16, Value) {
        let r = self.client.post(format!("{}{path}", self.base)).json(&body).send().await.unwrap();
        (r.status().as_u16(), r.json().await.unwrap())
    }

    async fn create(&self, manifest: &str, seed: u64, loops: usize) -> String {
        let (status, body) = self.post("/sessions", json!({ "manifest": manifest, "seed": seed, "loops": loops })).await;
        assert_eq!(status, 201, "{body}");
        body["session_id"].as_str().unwrap().to_string()
    }
}

fn score_vector(body: &Value) -> ScoreVector {
    let ids = body["ids"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()).collect();
    let values = body["scores"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    ScoreVector::new(ids, values).unwrap()
}

#[tokio::test]
async fn scripted_observer_completes_a_twelve_stimulus_session() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = stimuli(tmp.path(), "s", 12);
    let latent = ScoreVector::new(manifest.ids(), (0..12).map(|k| 1.5 * k as f64).collect()).unwrap();
    let data = tmp.path().join("sessions");
    let server = Server::start(&data, vec![manifest]).await;
    let id = server.create("s", 2020, 5).await;

    let (status, body) = server.get(&format!("/sessions/{id}/scores")).await;
    assert_eq!(status, 412, "{body}");
    assert_eq!(body["error"], "precondition_failed");

    let mut stream = SeedStream::seed_from_u64(17);
    let mut answered = 0;
    loop {
        let (status, pair) = server.get(&format!("/sessions/{id}/pair")).await;
        assert_eq!(status, 200);
        if pair["complete"] == json!(true) {
            assert_eq!(pair["progress"], json!(1.0));
            break;
        }
        let (l, r) = (pair["left_id"].as_str().unwrap(), pair["right_id"].as_str().unwrap());
        assert_eq!(pair["left"], json!(format!("/images/{l}")));
        let winner = simulate_observer(&latent, (l, r), &mut stream).unwrap().winner;
        let vote = json!({ "pair_token": pair["pair_token"], "winner": winner });
        let (status, ack) = server.post(&format!("/sessions/{id}/vote"), vote.clone()).await;
        assert_eq!((status, &ack["duplicate"]), (200, &json!(false)), "{ack}");
        // resubmitting the same vote is acknowledged without a second count
        let (status, again) = server.post(&format!("/sessions/{id}/vote"), vote).await;
        assert_eq!((status, &again["duplicate"]), (200, &json!(true)));
        assert_eq!(again["progress"], ack["progress"]);
        answered += 1;
    }
    assert_eq!(answered, 5 * grid_pairs(12).len());

    let (status, body) = server.get(&format!("/sessions/{id}/scores")).await;
    assert_eq!(status, 200, "{body}");
    let scores = score_vector(&body);
    let got: Vec<f64> = latent.ids().iter().map(|i| scores.get(i).unwrap()).collect();
    let rho = spearman_slices(&got, latent.values()).unwrap();
    assert!(rho >= 0.9, "spearman {rho}");
    assert!(scores.values().iter().all(|v| (1.0..=9.0).contains(v)));

    // the event log alone reproduces the scores exactly
    let replayed = replay_file(&data.join(format!("{id}.jsonl"))).unwrap();
    assert_eq!(replayed.scores(false).unwrap(), scores);
    assert_eq!(replayed.votes().total() as usize, answered);
}

#[tokio::test]
async fn error_responses_are_json() {
    let tmp = tempfile::tempdir().unwrap();
    let four = stimuli(tmp.path(), "f", 4);
    let one = stimuli(tmp.path(), "o", 1);
    let server = Server::start(&tmp.path().join("d"), vec![four, one]).await;

    let (status, body) = server.get("/sessions/nope/pair").await;
    assert_eq!((status, body["error"].as_str()), (404, Some("not_found")));
    assert!(body["detail"].as_str().unwrap().contains("nope"));
    let (status, _) = server.post("/sessions", json!({ "manifest": "missing" })).await;
    assert_eq!(status, 404);
    let (status, body) = server.post("/sessions", json!({ "manifest": "o", "seed": 1 })).await;
    assert_eq!((status, body["error"].as_str()), (422, Some("contract_violation")));

    let id = server.create("f", 9, 5).await;
    let (_, pair) = server.get(&format!("/sessions/{id}/pair")).await;
    assert_eq!(pair["progress"], json!(0.0));
    let token = pair["pair_token"].clone();
    let (status, body) = server
        .post(&format!("/sessions/{id}/vote"), json!({ "pair_token": token, "winner": "f99" }))
        .await;
    assert_eq!((status, body["error"].as_str()), (422, Some("contract_violation")));
    let (status, body) = server
        .post(&format!("/sessions/{id}/vote"), json!({ "pair_token": "t42", "winner": "f00" }))
        .await;
    assert_eq!((status, body["error"].as_str()), (409, Some("conflict")));

    // no votes yet: every stimulus is its own component
    let (status, body) = server.get(&format!("/sessions/{id}/scores?partial=true")).await;
    assert_eq!((status, body["error"].as_str()), (422, Some("scaling_error")));
    assert_eq!(body["components"].as_array().unwrap().len(), 4);

    let r = server.client.get(format!("{}/images/f01", server.base)).send().await.unwrap();
    assert_eq!(r.headers()["content-type"], "image/png");
    let bytes = r.bytes().await.unwrap();
    assert_eq!(colorfulness::color::decode_image(&bytes).unwrap().width(), 4);
    let (status, _) = server.get("/images/zzz").await;
    assert_eq!(status, 404);
}

#[tokio::test]
async fn concurrent_duplicate_votes_count_once() {
    let tmp = tempfile::tempdir().unwrap();
    let server = Arc::new(Server::start(&tmp.path().join("d"), vec![stimuli(tmp.path(), "c", 4)]).await);
    let id = server.create("c", 1, 5).await;
    let (_, pair) = server.get(&format!("/sessions/{id}/pair")).await;
    let vote = json!({ "pair_token": pair["pair_token"], "winner": pair["left_id"] });
    let tasks: Vec<_> = (0..16)
        .map(|_| {
            let (server, id, vote) = (server.clone(), id.clone(), vote.clone());
            tokio::spawn(async move { server.post(&format!("/sessions/{id}/vote"), vote).await })
        })
        .collect();
    let mut fresh = 0;
    for t in tasks {
        let (status, body) = t.await.unwrap();
        assert_eq!(status, 200);
        if body["duplicate"] == json!(false) {
            fresh += 1;
        }
    }
    assert_eq!(fresh, 1);
    let (_, scores) = server.get(&format!("/sessions/{id}/scores?partial=true")).await;
    assert_eq!(scores["components"].as_array().unwrap().len(), 3);
    let log = std::fs::read_to_string(tmp.path().join("d").join(format!("{id}.jsonl"))).unwrap();
    assert_eq!(log.lines().count(), 2);
}

#[tokio::test]
async fn sessions_resume_after_restart() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("d");
    let manifest = stimuli(tmp.path(), "r", 5);
    let first = Server::start(&data, vec![manifest.clone()]).await;
    let id = first.create("r", 4, 2).await;
    for _ in 0..3 {
        let (_, pair) = first.get(&format!("/sessions/{id}/pair")).await;
        first
            .post(&format!("/sessions/{id}/vote"), json!({ "pair_token": pair["pair_token"], "winner": pair["right_id"] }))
            .await;
    }
    let (_, before) = first.get(&format!("/sessions/{id}/scores?partial=true")).await;
    let (_, next_before) = first.get(&format!("/sessions/{id}/pair")).await;

    let second = Server::start(&data, vec![manifest]).await;
    let (_, after) = second.get(&format!("/sessions/{id}/scores?partial=true")).await;
    assert_eq!(before, after);
    let (_, next_after) = second.get(&format!("/sessions/{id}/pair")).await;
    assert_eq!(next_before["pair_token"], next_after["pair_token"]);
    assert_eq!(next_before["left_id"], next_after["left_id"]);
}
