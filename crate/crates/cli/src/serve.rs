//! Reward service: one JSON request per line in, one JSON response per line
//! out, in request order.
//!
//! Request: `{"id": any, "hypothesis": str, "reference": str, "rewards": [str]}`
//! Response: `{"id": .., "scores": {name: native value}, "total": scaled sum}`
//! or `{"id": .., "error": str}`. Lines that are not JSON objects get
//! `"id": null`. Blank lines are ignored.

use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::{TcpListener, TcpStream};

use serde::Deserialize;
use serde_json::{json, Map, Value};

use structeval::docmetrics::Metric;
use structeval::{score_reward, RewardSpec};

use crate::CliError;

#[derive(Debug, Deserialize)]
struct RewardRequest {
    hypothesis: String,
    reference: String,
    rewards: Vec<String>,
}

fn error_response(id: Value, message: impl Into<String>) -> Value {
    json!({"id": id, "error": message.into()})
}

/// Response for one request line.
pub fn handle_line(line: &str) -> Value {
    let value: Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => return error_response(Value::Null, format!("malformed request: {e}")),
    };
    let Some(obj) = value.as_object() else {
        return error_response(Value::Null, "request must be a JSON object");
    };
    let id = obj.get("id").cloned().unwrap_or(Value::Null);
    let req: RewardRequest = match serde_json::from_value(value.clone()) {
        Ok(r) => r,
        Err(e) => return error_response(id, format!("malformed request: {e}")),
    };
    let metrics = match req.rewards.iter().map(|r| r.parse::<Metric>()).collect::<Result<Vec<_>, _>>() {
        Ok(m) => m,
        Err(e) => return error_response(id, e.to_string()),
    };
    let spec = match RewardSpec::new(metrics) {
        Ok(s) => s,
        Err(e) => return error_response(id, e.to_string()),
    };
    match score_reward(&req.hypothesis, &req.reference, &spec) {
        Ok(score) => {
            let scores: Map<String, Value> = score
                .components
                .iter()
                .map(|(m, v)| (m.name().to_string(), json!(v)))
                .collect();
            json!({"id": id, "scores": scores, "total": score.total})
        }
        Err(e) => error_response(id, e.to_string()),
    }
}

/// Serves requests until end of input. Each response is flushed before the
/// next request is read.
pub fn serve_stream<R: BufRead, W: Write>(mut input: R, output: W) -> io::Result<()> {
    let mut output = BufWriter::new(output);
    let mut buf = Vec::new();
    loop {
        buf.clear();
        if input.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        let response = match std::str::from_utf8(&buf) {
            Ok(line) if line.trim().is_empty() => continue,
            Ok(line) => handle_line(line),
            Err(_) => error_response(Value::Null, "request is not valid UTF-8"),
        };
        serde_json::to_writer(&mut output, &response)?;
        output.write_all(b"\n")?;
        output.flush()?;
    }
    output.flush()
}

fn serve_connection(stream: TcpStream) -> io::Result<()> {
    let reader = BufReader::new(stream.try_clone()?);
    serve_stream(reader, stream)
}

/// Accepts connections forever, one thread per connection.
pub fn serve_tcp(addr: &str) -> Result<(), CliError> {
    let listener = TcpListener::bind(addr).map_err(|e| CliError(format!("cannot listen on {addr}: {e}")))?;
    eprintln!("listening on {}", listener.local_addr()?);
    for stream in listener.incoming() {
        match stream {
            Ok(s) => {
                std::thread::spawn(move || {
                    if let Err(e) = serve_connection(s) {
                        eprintln!("connection error: {e}");
                    }
                });
            }
            Err(e) => eprintln!("accept failed: {e}"),
        }
    }
    Ok(())
}
