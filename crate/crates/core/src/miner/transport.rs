use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::MinerError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Response {
    pub status: u16,
    /// Lower-cased header names.
    #[serde(default)]
    pub headers: BTreeMap<String, String>,
    pub body: String,
}

impl Response {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.get(&name.to_ascii_lowercase()).map(String::as_str)
    }
}

/// One GET request. Implementations must be shareable across fetch workers.
pub trait Transport: Send + Sync {
    fn get(&self, url: &str, token: Option<&str>) -> Result<Response, MinerError>;
}

pub struct LiveTransport {
    agent: ureq::Agent,
}

impl LiveTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build()
            .into();
        LiveTransport { agent }
    }
}

impl Default for LiveTransport {
    fn default() -> Self {
        LiveTransport::new(Duration::from_secs(30))
    }
}

impl Transport for LiveTransport {
    fn get(&self, url: &str, token: Option<&str>) -> Result<Response, MinerError> {
        let mut request = self
            .agent
            .get(url)
            .header("User-Agent", "skill-corpus")
            .header("Accept", "application/vnd.github+json");
        if let Some(token) = token {
            request = request.header("Authorization", format!("Bearer {token}"));
        }
        let mut response = request.call().map_err(|e| MinerError::Transport(format!("{url}: {e}")))?;
        let headers = response
            .headers()
            .iter()
            .filter_map(|(k, v)| Some((k.as_str().to_ascii_lowercase(), v.to_str().ok()?.to_string())))
            .collect();
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| MinerError::Transport(format!("{url}: {e}")))?;
        Ok(Response { status, headers, body })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub url: String,
    #[serde(flatten)]
    pub response: Response,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recording {
    pub exchanges: Vec<Exchange>,
}

/// Serves recorded exchanges and never touches the network. Repeated
/// requests for one url walk through its recorded responses in order and
/// then keep returning the last one.
pub struct ReplayTransport {
    responses: HashMap<String, Vec<Response>>,
    cursor: Mutex<HashMap<String, usize>>,
}

impl ReplayTransport {
    pub fn new(recording: Recording) -> Self {
        let mut responses: HashMap<String, Vec<Response>> = HashMap::new();
        for exchange in recording.exchanges {
            responses.entry(exchange.url).or_default().push(exchange.response);
        }
        ReplayTransport {
            responses,
            cursor: Mutex::new(HashMap::new()),
        }
    }

    pub fn load(path: &Path) -> crate::error::Result<Self> {
        let text = crate::io::read_text(path)?;
        Ok(ReplayTransport::new(serde_json::from_str(&text)?))
    }
}

impl Transport for ReplayTransport {
    fn get(&self, url: &str, _token: Option<&str>) -> Result<Response, MinerError> {
        let responses = self.responses.get(url).ok_or_else(|| MinerError::NotRecorded(url.to_string()))?;
        let mut cursor = self.cursor.lock().expect("replay cursor poisoned");
        let i = cursor.entry(url.to_string()).or_insert(0);
        let response = responses[(*i).min(responses.len() - 1)].clone();
        *i += 1;
        Ok(response)
    }
}

/// Passes requests through and keeps every exchange for later replay.
pub struct RecordingTransport<T> {
    inner: T,
    recording: Mutex<Recording>,
}

impl<T: Transport> RecordingTransport<T> {
    pub fn new(inner: T) -> Self {
        RecordingTransport {
            inner,
            recording: Mutex::new(Recording::default()),
        }
    }

    pub fn recording(&self) -> Recording {
        self.recording.lock().expect("recording poisoned").clone()
    }
}

impl<T: Transport> Transport for RecordingTransport<T> {
    fn get(&self, url: &str, token: Option<&str>) -> Result<Response, MinerError> {
        let response = self.inner.get(url, token)?;
        self.recording.lock().expect("recording poisoned").exchanges.push(Exchange {
            url: url.to_string(),
            response: response.clone(),
        });
        Ok(response)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok(body: &str) -> Response {
        Response {
            status: 200,
            headers: BTreeMap::new(),
            body: body.into(),
        }
    }

    #[test]
    fn replay_walks_responses() {
        let replay = ReplayTransport::new(Recording {
            exchanges: vec![
                Exchange { url: "u".into(), response: ok("1") },
                Exchange { url: "u".into(), response: ok("2") },
            ],
        });
        assert_eq!(replay.get("u", None).unwrap().body, "1");
        assert_eq!(replay.get("u", None).unwrap().body, "2");
        assert_eq!(replay.get("u", None).unwrap().body, "2");
        assert!(matches!(replay.get("v", None), Err(MinerError::NotRecorded(_))));
    }

    #[test]
    fn recording_round_trips() {
        let inner = ReplayTransport::new(Recording {
            exchanges: vec![Exchange { url: "u".into(), response: ok("x") }],
        });
        let rec = RecordingTransport::new(inner);
        rec.get("u", Some("t")).unwrap();
        let json = serde_json::to_string(&rec.recording()).unwrap();
        let back: Recording = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rec.recording());
    }
}
