//! Newline-delimited JSON protocol for live steering of the techniques.
//!
//! Each line received is one request object with an `op` field; each reply is
//! one line. Malformed requests get `{"error": ...}` and the connection stays
//! open.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::thread;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use curvecast::config::{Config, Preset};
use curvecast::geometry::{DisplayGeometry, SurfacePoint, UserPosition};
use curvecast::math::{Rotation, Vec3};
use curvecast::pointer::{ControllerSample, CursorState};
use curvecast::tasks::{generate_layout, hit_test, presets, SelectionMode, TaskSpec, TrialLayout};
use curvecast::transfer::{TechniqueConfig, TechniqueId, TransferParams};

#[derive(Debug, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Request {
    StartSession {
        #[serde(default = "default_technique")]
        technique: TechniqueId,
        #[serde(default = "one")]
        distance_multiple: f64,
        #[serde(default)]
        lateral_offset_m: f64,
        #[serde(default)]
        preset: Option<Preset>,
        #[serde(default)]
        seed: u64,
    },
    Step {
        session: u64,
        dt_s: f64,
        controller_delta: ControllerDelta,
    },
    Click {
        session: u64,
    },
    SetParams {
        session: u64,
        #[serde(default)]
        technique: Option<TechniqueId>,
        #[serde(default)]
        distance_multiple: Option<f64>,
        #[serde(default)]
        lateral_offset_m: Option<f64>,
        #[serde(default)]
        transfer: Option<TransferParams<f64>>,
    },
    Validate {
        pairs: Vec<(f64, f64)>,
        #[serde(default)]
        technique: Option<TechniqueId>,
        #[serde(default)]
        session: Option<u64>,
    },
}

fn default_technique() -> TechniqueId {
    TechniqueId::PaDistSize
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerDelta {
    #[serde(default)]
    pub yaw_rad: f64,
    #[serde(default)]
    pub pitch_rad: f64,
    #[serde(default)]
    pub pos_delta_m: [f64; 3],
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LayoutReply {
    pub start: SurfacePoint<f64>,
    pub target: SurfacePoint<f64>,
    pub width_m: f64,
}

impl From<&TrialLayout<f64>> for LayoutReply {
    fn from(l: &TrialLayout<f64>) -> Self {
        Self { start: l.start, target: l.target, width_m: l.spec.width_m }
    }
}

struct Session {
    technique: TechniqueConfig<f64>,
    transfer: TransferParams<f64>,
    position: UserPosition<f64>,
    specs: Vec<TaskSpec<f64>>,
    trial: usize,
    rng: ChaCha8Rng,
    layout: TrialLayout<f64>,
    yaw: f64,
    pitch: f64,
    cursor: CursorState<f64>,
    clock_s: f64,
    trial_start_s: f64,
}

/// Protocol state for one connection.
pub struct Handler {
    geom: DisplayGeometry<f64>,
    transfer: TransferParams<f64>,
    selection: SelectionMode,
    sessions: HashMap<u64, Session>,
    next_id: u64,
}

impl Handler {
    pub fn new(config: &Config) -> Self {
        Self {
            geom: config.geometry.unwrap_or_default(),
            transfer: config.transfer.unwrap_or_default(),
            selection: config.selection.unwrap_or_default(),
            sessions: HashMap::new(),
            next_id: 1,
        }
    }

    /// Answers one request line.
    pub fn handle_line(&mut self, line: &str) -> Value {
        let request = match serde_json::from_str::<Request>(line) {
            Ok(r) => r,
            Err(e) => return json!({ "error": format!("bad request: {e}") }),
        };
        self.handle(request).unwrap_or_else(|e| json!({ "error": e }))
    }

    pub fn handle(&mut self, request: Request) -> Result<Value, String> {
        match request {
            Request::StartSession { technique, distance_multiple, lateral_offset_m, preset, seed } => {
                let position = UserPosition::new(distance_multiple, lateral_offset_m);
                self.geom.validate_position(&position).map_err(|e| e.to_string())?;
                let technique = TechniqueConfig::from_params(technique, &self.transfer, &self.geom)
                    .map_err(|e| e.to_string())?;
                let specs = match preset.unwrap_or(Preset::Study2) {
                    Preset::Study1 => presets::study1(),
                    Preset::Study2 => presets::study2(),
                };
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let layout = generate_layout(&mut rng, specs[0], &self.geom).map_err(|e| e.to_string())?;
                let (yaw, pitch, cursor) = aligned(&self.geom, &position, &layout, &technique, 0.0)?;
                let id = self.next_id;
                self.next_id += 1;
                let s = Session {
                    technique,
                    transfer: self.transfer,
                    position,
                    specs,
                    trial: 0,
                    rng,
                    layout,
                    yaw,
                    pitch,
                    cursor,
                    clock_s: 0.0,
                    trial_start_s: 0.0,
                };
                self.sessions.insert(id, s);
                Ok(json!({ "session": id, "layout": LayoutReply::from(&layout) }))
            }
            Request::Step { session, dt_s, controller_delta: d } => {
                if !(dt_s > 0.0 && dt_s.is_finite()) {
                    return Err("dt_s must be positive".into());
                }
                let geom = self.geom;
                let s = self.session(session)?;
                s.yaw += d.yaw_rad;
                s.pitch += d.pitch_rad;
                s.clock_s += dt_s;
                let p = s.cursor.last_controller.position;
                let position = Vec3::new(p.x + d.pos_delta_m[0], p.y + d.pos_delta_m[1], p.z + d.pos_delta_m[2]);
                let sample = ControllerSample::new(position, Rotation::from_yaw_pitch(s.yaw, s.pitch), s.clock_s);
                let out = s.cursor.step(sample, &s.technique, &s.position, &geom).map_err(|e| e.to_string())?;
                s.cursor = out.state;
                Ok(json!({
                    "cursor": out.state.surface,
                    "diameter_m": out.state.diameter_m,
                    "gain": out.gain,
                    "controller_speed_mps": out.controller_speed_mps,
                }))
            }
            Request::Click { session } => {
                let (geom, mode) = (self.geom, self.selection);
                let s = self.session(session)?;
                let success = hit_test(s.cursor.surface, s.cursor.diameter_m, &s.layout, mode, &geom);
                let movement_time_s = s.clock_s - s.trial_start_s;
                s.trial += 1;
                let spec = s.specs[s.trial % s.specs.len()];
                s.layout = generate_layout(&mut s.rng, spec, &geom).map_err(|e| e.to_string())?;
                s.trial_start_s = s.clock_s;
                Ok(json!({
                    "success": success,
                    "movement_time_s": movement_time_s,
                    "next_layout": LayoutReply::from(&s.layout),
                }))
            }
            Request::SetParams { session, technique, distance_multiple, lateral_offset_m, transfer } => {
                let geom = self.geom;
                let s = self.session(session)?;
                let mut position = s.position;
                if let Some(d) = distance_multiple {
                    position.distance_multiple = d;
                }
                if let Some(x) = lateral_offset_m {
                    position.lateral_offset_m = x;
                }
                geom.validate_position(&position).map_err(|e| e.to_string())?;
                let params = transfer.unwrap_or(s.transfer);
                let id = technique.unwrap_or(s.technique.id);
                let cfg = TechniqueConfig::from_params(id, &params, &geom).map_err(|e| e.to_string())?;
                let moved = position != s.position;
                s.technique = cfg;
                s.transfer = params;
                s.position = position;
                if moved {
                    (s.yaw, s.pitch, s.cursor) = aligned(&geom, &s.position, &s.layout, &s.technique, s.clock_s)?;
                }
                Ok(json!({ "ok": true, "technique": id }))
            }
            Request::Validate { pairs, technique, session } => {
                let cfg = match (session, technique) {
                    (Some(id), None) => self.session(id)?.technique,
                    (None, t) => TechniqueConfig::from_params(t.unwrap_or_else(default_technique), &self.transfer, &self.geom)
                        .map_err(|e| e.to_string())?,
                    (Some(_), Some(_)) => return Err("give either session or technique, not both".into()),
                };
                let gains: Vec<f64> = pairs.iter().map(|&(v, d)| cfg.gain(v, d, &self.geom)).collect();
                let diameters: Vec<f64> = pairs.iter().map(|&(v, _)| cfg.cursor_diameter(v)).collect();
                Ok(json!({ "technique": cfg.id, "gains": gains, "diameters": diameters }))
            }
        }
    }

    fn session(&mut self, id: u64) -> Result<&mut Session, String> {
        self.sessions.get_mut(&id).ok_or_else(|| format!("unknown session {id}"))
    }
}

/// Controller angles and cursor pointing at the start circle.
fn aligned(
    geom: &DisplayGeometry<f64>,
    position: &UserPosition<f64>,
    layout: &TrialLayout<f64>,
    technique: &TechniqueConfig<f64>,
    clock_s: f64,
) -> Result<(f64, f64, CursorState<f64>), String> {
    let origin = geom.user_world_position(position);
    let (yaw, pitch) = geom.aim_yaw_pitch(origin, layout.start);
    let sample = ControllerSample::new(origin, Rotation::from_yaw_pitch(yaw, pitch), clock_s);
    let mut cursor = CursorState::aligned(sample, geom).map_err(|e| e.to_string())?;
    cursor.diameter_m = technique.cursor_diameter(0.0);
    Ok((yaw, pitch, cursor))
}

/// Binds the listener; the caller reports the bound address.
pub fn bind(port: u16) -> std::io::Result<TcpListener> {
    TcpListener::bind(("127.0.0.1", port))
}

/// Serves connections until the process is stopped.
pub fn run(listener: TcpListener, config: Config) -> std::io::Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let config = config.clone();
        thread::spawn(move || {
            if let Err(e) = serve_connection(stream, &config) {
                log::warn!("connection closed: {e}");
            }
        });
    }
    Ok(())
}

fn serve_connection(stream: TcpStream, config: &Config) -> std::io::Result<()> {
    let peer = stream.peer_addr()?;
    log::info!("session from {peer}");
    let mut out = stream.try_clone()?;
    let mut handler = Handler::new(config);
    for line in BufReader::new(stream).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = handler.handle_line(&line);
        writeln!(out, "{reply}")?;
        out.flush()?;
    }
    Ok(())
}
