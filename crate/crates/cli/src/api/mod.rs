//! The `/api/v1` JSON session service.
//!
//! Complex numbers travel as `[re, im]` pairs of doubles written in
//! shortest round-trip form, so clients decode the exact server values.

mod error;
mod store;

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use qmonty::engine::{RuleSet, Stage, Transcript, Variant};
use qmonty::hilbert::{Complex64, StateVector};
use qmonty::strategies::{FiniteCatalog, HostStrategy};
use qmonty::wire::{vec3_to_pairs, ComplexPair};

pub use error::{ApiError, ErrorCode};
pub use store::{DoorEvent, HintMode, ScoreboardEntry, SessionRecord, Store, TallyView};

/// Idle time after which a session is dropped.
pub const DEFAULT_IDLE_TIMEOUT: Duration = Duration::from_secs(3600);

type Shared = State<Arc<Store>>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub host: HostStrategy,
    #[serde(default)]
    pub rules: RuleSet,
    /// Whether the player may see the host strategy and use cheat hints.
    #[serde(default = "yes")]
    pub disclose_host: bool,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoorBody {
    #[serde(default)]
    pub phi: Option<StateVector>,
    /// A full orthonormal triple `(p, p′, p″)` for `triple_choice`.
    #[serde(default)]
    pub doors: Option<[StateVector; 3]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinalBody {
    #[serde(default)]
    pub mode: Option<HintMode>,
    #[serde(default)]
    pub vector: Option<StateVector>,
}

#[derive(Debug, Deserialize)]
pub struct HintQuery {
    pub mode: HintMode,
}

#[derive(Debug, Serialize)]
pub struct HintView {
    pub mode: HintMode,
    pub vector: StateVector,
}

/// A session as the client may see it. The prize and the transcript are
/// withheld until the game is over.
#[derive(Debug, Serialize)]
pub struct SessionView {
    pub session_id: String,
    pub created_at: u64,
    pub seed: u64,
    pub round: u64,
    pub stage: Stage,
    pub rules: RuleSet,
    pub disclose_host: bool,
    pub host: Option<HostStrategy>,
    pub host_label: Option<String>,
    pub hint_modes: Vec<HintMode>,
    pub phi: Option<StateVector>,
    pub doors: Option<[StateVector; 3]>,
    /// The announced door, truncated if the rules say so.
    pub chi: Option<[ComplexPair; 3]>,
    pub event: Option<DoorEvent>,
    pub final_mode: Option<String>,
    pub final_door: Option<StateVector>,
    pub won: Option<bool>,
    pub restarts: u32,
    pub stats: TallyView,
    pub by_mode: BTreeMap<String, TallyView>,
    pub transcript: Option<Transcript>,
}

impl SessionView {
    fn of(r: &SessionRecord) -> Self {
        let game = &r.game;
        let first = game.first_choice();
        Self {
            session_id: r.id.clone(),
            created_at: r.created_at,
            seed: r.seed,
            round: r.round,
            stage: game.stage(),
            rules: r.rules.clone(),
            disclose_host: r.disclose_host,
            host: r.disclose_host.then(|| (*r.host).clone()),
            host_label: r.disclose_host.then(|| r.host.label()),
            hint_modes: r.hint_modes(),
            phi: first.map(|f| f.phi().clone()),
            doors: first
                .and_then(|f| f.alternatives().map(|[a, b]| [f.phi().clone(), a.ket().clone(), b.ket().clone()])),
            chi: game.announcement().map(|a| vec3_to_pairs(&a.chi)),
            event: r.last_event,
            final_mode: r.final_mode.clone(),
            final_door: game.final_door().map(|p| p.ket().clone()),
            won: game.won(),
            restarts: game.restart_count(),
            stats: r.tally_view(),
            by_mode: r.by_mode_view(),
            transcript: r.is_over().then(|| game.transcript().clone()),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct HostEntry {
    pub kind: &'static str,
    pub description: &'static str,
    pub example: HostStrategy,
    pub hint_modes: Vec<HintMode>,
}

#[derive(Debug, Serialize)]
pub struct Preset {
    pub label: &'static str,
    pub phi: StateVector,
}

/// Choices for UI dropdowns.
#[derive(Debug, Serialize)]
pub struct Catalog {
    pub hosts: Vec<HostEntry>,
    pub variants: Vec<Variant>,
    pub hint_modes: Vec<HintMode>,
    pub presets: Vec<Preset>,
}

pub fn catalog() -> Catalog {
    let s = 0.5f64.sqrt();
    let c = Complex64::new;
    let small = FiniteCatalog::new(
        vec![
            StateVector::basis(0),
            StateVector::real(1.0, 1.0, 0.0).expect("nonzero"),
            StateVector::from_components([c(0.0, 0.0), c(s, 0.0), c(0.0, s)]).expect("nonzero"),
        ],
        None,
    )
    .expect("valid catalog");
    let hosts = [
        ("axes", "prize on a random basis axis", HostStrategy::axes()),
        ("finite_set", "prize drawn from a published list of vectors", HostStrategy::finite_set(small)),
        ("real_vector", "uniformly random real prize vector", HostStrategy::RealVector),
        ("haar", "uniformly random complex prize vector", HostStrategy::Haar),
        (
            "entangled",
            "prize entangled with a quantum notepad, consulted in the player's basis",
            HostStrategy::entangled_transpose(),
        ),
        ("ignore_notepad", "opens any door orthogonal to the player's; may hit the prize", HostStrategy::IgnoreNotepad),
        (
            "complete_vn",
            "public prize; the door is opened by a complete measurement",
            HostStrategy::CompleteVn {
                prize: StateVector::basis(0),
            },
        ),
    ];
    Catalog {
        hosts: hosts
            .into_iter()
            .map(|(kind, description, example)| HostEntry {
                kind,
                description,
                hint_modes: HintMode::ALL
                    .into_iter()
                    .filter(|m| store::mode_offered(*m, &example))
                    .collect(),
                example,
            })
            .collect(),
        variants: Variant::ALL.to_vec(),
        hint_modes: HintMode::ALL.to_vec(),
        presets: vec![
            Preset { label: "e1", phi: StateVector::basis(0) },
            Preset { label: "e2", phi: StateVector::basis(1) },
            Preset { label: "e3", phi: StateVector::basis(2) },
            Preset {
                label: "(1,1,1)/sqrt(3)",
                phi: StateVector::real(1.0, 1.0, 1.0).expect("nonzero"),
            },
            Preset {
                label: "(1,i,0)/sqrt(2)",
                phi: StateVector::from_components([c(s, 0.0), c(0.0, s), c(0.0, 0.0)]).expect("nonzero"),
            },
        ],
    }
}

async fn create_session(
    State(store): Shared,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let Json(body) = body?;
    let shared = store.create(body.host, body.rules, body.disclose_host, body.seed)?;
    let view = SessionView::of(&shared.lock().unwrap_or_else(|p| p.into_inner()));
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(State(store): Shared, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    store.with(&id, |r| Json(SessionView::of(r)))
}

async fn delete_session(State(store): Shared, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    if store.remove(&id) {
        Ok(StatusCode::NO_CONTENT)
    } else {
        Err(ApiError::not_found(&id))
    }
}

async fn open_door(
    State(store): Shared,
    Path(id): Path<String>,
    body: Result<Json<DoorBody>, JsonRejection>,
) -> Result<Json<SessionView>, ApiError> {
    let Json(body) = body?;
    store.with(&id, |r| {
        r.open_door(body.phi, body.doors, &store.scoreboard)?;
        Ok(Json(SessionView::of(r)))
    })?
}

async fn final_door(
    State(store): Shared,
    Path(id): Path<String>,
    body: Result<Json<FinalBody>, JsonRejection>,
) -> Result<Json<SessionView>, ApiError> {
    let Json(body) = body?;
    store.with(&id, |r| {
        r.final_door(body.mode, body.vector, &store.scoreboard)?;
        Ok(Json(SessionView::of(r)))
    })?
}

async fn hint(
    State(store): Shared,
    Path(id): Path<String>,
    query: Result<Query<HintQuery>, QueryRejection>,
) -> Result<Json<HintView>, ApiError> {
    let Query(query) = query?;
    store.with(&id, |r| {
        let vector = r.hint(query.mode)?;
        Ok(Json(HintView { mode: query.mode, vector }))
    })?
}

async fn strategies() -> Json<Catalog> {
    Json(catalog())
}

async fn scoreboard(State(store): Shared) -> Json<Vec<ScoreboardEntry>> {
    Json(store.scoreboard.entries())
}

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/api/v1/sessions", post(create_session))
        .route("/api/v1/sessions/{id}", get(get_session).delete(delete_session))
        .route("/api/v1/sessions/{id}/door", post(open_door))
        .route("/api/v1/sessions/{id}/final", post(final_door))
        .route("/api/v1/sessions/{id}/hint", get(hint))
        .route("/api/v1/strategies", get(strategies))
        .route("/api/v1/scoreboard", get(scoreboard))
        .with_state(store)
}

/// Serves the API until Ctrl-C.
pub async fn serve(addr: SocketAddr, idle_timeout: Duration) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    let store = Arc::new(Store::new(idle_timeout));
    let sweeper = store.clone();
    std::thread::spawn(move || loop {
        std::thread::sleep(idle_timeout.min(Duration::from_secs(60)));
        let dropped = sweeper.purge_expired();
        if dropped > 0 {
            tracing::debug!(dropped, "expired idle sessions");
        }
    });
    tracing::info!(address = %listener.local_addr()?, "serving /api/v1");
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
