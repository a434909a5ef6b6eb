//! `run.meta`: config echo, versions, timings and diagnostics as `key = value`.

use std::fmt::Write as _;
use std::path::Path;

use mfront::io::fmt_f;
use mfront::{ConservationReport, Error};

use crate::config::ScenarioConfig;

pub struct RunMeta {
    command: String,
    config: Vec<(String, String)>,
    entries: Vec<(String, String)>,
    error: Option<(String, String)>,
}

impl RunMeta {
    pub fn new(command: &str, cfg: &ScenarioConfig) -> Self {
        RunMeta { command: command.into(), config: cfg.entries.clone(), entries: vec![], error: None }
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn time(&mut self, stage: &str, secs: f64) {
        self.set(format!("time.{stage}_s"), format!("{secs:.3}"));
    }

    pub fn conservation(&mut self, r: &ConservationReport) {
        self.set("conservation.hamiltonian", fmt_f(r.hamiltonian));
        self.set("conservation.orthogonality", fmt_f(r.orthogonality));
        self.set("conservation.lagrangian", fmt_f(r.lagrangian));
        self.set("conservation.angular_momentum", r.angular_momentum.map_or("n/a".into(), fmt_f));
    }

    pub fn warnings(&mut self, ws: &[String]) {
        for w in ws {
            self.set("warning", w.replace('\n', " "));
        }
    }

    pub fn fail(&mut self, e: &Error) {
        self.error = Some((e.code().into(), e.to_string().replace('\n', " ")));
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command = {}", self.command);
        let _ = writeln!(s, "version = {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "status = {}", if self.error.is_some() { "error" } else { "ok" });
        match &self.error {
            Some((code, msg)) => {
                let _ = writeln!(s, "error_code = {code}");
                let _ = writeln!(s, "error_message = {msg}");
            }
            None => {
                let _ = writeln!(s, "error_code = none");
            }
        }
        for (k, v) in &self.config {
            let _ = writeln!(s, "config.{k} = {v}");
        }
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.render())
    }
}
