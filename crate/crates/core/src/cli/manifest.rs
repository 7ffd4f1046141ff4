use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

pub const MANIFEST: &str = "manifest.txt";

pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Record of one invocation, written last into its output directory.
#[derive(Clone, Debug, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub start_unix: f64,
    pub end_unix: f64,
    pub output_dir: String,
    pub exit_status: i32,
    pub status: String,
    pub max_ledger_residual: Option<f64>,
    /// Output files, excluding the manifest itself.
    pub files: Vec<String>,
    /// Canonical configuration text, if the command had one.
    pub config: Option<String>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, output_dir: &Path) -> Self {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            start_unix: unix_now(),
            end_unix: 0.0,
            output_dir: output_dir.display().to_string(),
            exit_status: 0,
            status: String::new(),
            max_ledger_residual: None,
            files: Vec::new(),
            config: None,
        }
    }

    pub fn render(&self) -> String {
        let mut files = self.files.clone();
        files.push(MANIFEST.to_string());
        let mut s = String::new();
        s += &format!("command = {}\n", self.command);
        s += &format!("version = {}\n", self.version);
        s += &format!("seed = {}\n", self.seed);
        s += &format!("start_unix = {:.3}\n", self.start_unix);
        s += &format!("end_unix = {:.3}\n", self.end_unix);
        s += &format!("output_dir = {}\n", self.output_dir);
        s += &format!("exit_status = {}\n", self.exit_status);
        s += &format!("status = {}\n", self.status);
        if let Some(r) = self.max_ledger_residual {
            s += &format!("max_ledger_residual = {r:.16e}\n");
        }
        s += &format!("files = {}\n", files.join(","));
        if let Some(cfg) = &self.config {
            s += "\n[config]\n";
            s += cfg;
        }
        s
    }

    pub fn write(&mut self, dir: &Path) -> std::io::Result<()> {
        self.end_unix = unix_now();
        let mut f = std::fs::File::create(dir.join(MANIFEST))?;
        f.write_all(self.render().as_bytes())
    }
}

/// Lists the `files` entry of a manifest.
pub fn manifest_files(text: &str) -> Vec<String> {
    text.lines()
        .find_map(|l| l.strip_prefix("files = "))
        .map(|v| v.split(',').map(str::to_string).collect())
        .unwrap_or_default()
}
