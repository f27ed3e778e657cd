use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;

/// Writes through a temporary file in the target directory, then renames it
/// into place.
pub fn write_atomic<F>(path: &Path, body: F) -> Result<(), String>
where
    F: FnOnce(&mut dyn Write) -> Result<(), String>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w)?;
        w.flush().map_err(|e| e.to_string())?;
    }
    tmp.persist(path).map_err(|e| format!("{}: {}", path.display(), e.error))?;
    Ok(())
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("meta.json")
}

#[derive(Serialize)]
struct Sidecar<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    output: String,
    derived: &'a Value,
}

pub fn write_sidecar(out: &Path, config: &RunConfig, derived: &Value) -> Result<PathBuf, String> {
    let path = sidecar_path(out);
    let record = Sidecar {
        tool: "kicked-top",
        version: env!("CARGO_PKG_VERSION"),
        config,
        output: out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        derived,
    };
    write_atomic(&path, |w| {
        serde_json::to_writer_pretty(&mut *w, &record).map_err(|e| e.to_string())?;
        w.write_all(b"\n").map_err(|e| e.to_string())
    })?;
    Ok(path)
}

/// Reads either a sidecar (using its `config` field) or a bare config object.
pub fn read_config(path: &Path) -> Result<RunConfig, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let inner = value.get("config").cloned().unwrap_or(value);
    serde_json::from_value(inner).map_err(|e| format!("{}: {e}", path.display()))
}

/// Body of the optional plotting helper for each command; `None` when the
/// table has no natural plot.
fn plot_body(command: &str) -> Option<&'static str> {
    Some(match command {
        "spectrum" => "ax.scatter(df.kappa1 / np.pi, df.quasienergy, s=1)\nax.set_xlabel('kappa1 / pi'); ax.set_ylabel('quasienergy')",
        "density" => "sc = ax.scatter(df.quasienergy, df.m, c=df.probability, s=1, cmap='viridis')\nfig.colorbar(sc); ax.set_xlabel('quasienergy'); ax.set_ylabel('m')",
        "winding" => "for (method, g) in df.groupby('method'):\n    ax.plot(g.m, g.w0, label=f'{method} w0')\n    ax.plot(g.m, g.wpi, '--', label=f'{method} wpi')\nax.legend(); ax.set_xlabel('m')",
        "cd" => "for (key, g) in df.groupby(['frame', 'm']):\n    ax.plot(g.n, g.value, label=str(key))\nax.legend(); ax.set_xlabel('n')",
        "probe" => "tab = df.pivot(index='m', columns='n', values='p_up')\nax.imshow(tab.values, aspect='auto', origin='lower', extent=[tab.columns.min(), tab.columns.max(), tab.index.min(), tab.index.max()])\nax.set_xlabel('n'); ax.set_ylabel('m')",
        "ipr" => "ax.plot(df.m0, df.ipr)\nax.set_xlabel('m0'); ax.set_ylabel('IPR')",
        _ => return None,
    })
}

pub fn write_plot_script(out: &Path, command: &str, json: bool) -> Result<Option<PathBuf>, String> {
    let Some(body) = plot_body(command) else {
        return Ok(None);
    };
    let path = out.with_extension("plot.py");
    let name = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let reader = if json { "pd.read_json" } else { "pd.read_csv" };
    let script = format!(
        "# Non-normative plotting helper generated by kicked-top.\nimport numpy as np\nimport pandas as pd\nimport matplotlib.pyplot as plt\n\ndf = {reader}('{name}')\nfig, ax = plt.subplots()\n{body}\nfig.savefig('{stem}.png', dpi=150)\n",
        stem = out.file_stem().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
    );
    write_atomic(&path, |w| w.write_all(script.as_bytes()).map_err(|e| e.to_string()))?;
    Ok(Some(path))
}
