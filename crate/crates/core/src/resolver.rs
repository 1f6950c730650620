//! Super-resolvers applied after correction: `x = f(h * y)`.
//!
//! `f` is either the built-in pseudo-inverse reconstructor or an external
//! program (typically a pretrained network's inference script) driven
//! through files:
//!
//! ```text
//! my_sr.py --input {in} --output {out} --scale {scale}
//! ```
//!
//! The program must exit 0 and write `{out}` as a binary PGM/PPM.

use std::io::Read;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use crate::correction::{apply_correction, CorrectionFilter};
use crate::error::{Error, Result};
use crate::image::{load_image, save_image, Image};
use crate::operators::pseudo_inverse_reconstruct;

/// Environment variable overriding the temp directory of external runs.
pub const TMP_ENV: &str = "CORRFILT_TMP";

const STDERR_EXCERPT: usize = 2000;

#[derive(Clone, Debug, PartialEq)]
pub enum ResolverSpec {
    BuiltinLinear,
    External { command_template: String, timeout: Duration },
}

impl ResolverSpec {
    /// Validates that the template mentions `{in}`, `{out}` and `{scale}`.
    pub fn external(command_template: impl Into<String>, timeout: Duration) -> Result<Self> {
        let command_template = command_template.into();
        for p in ["{in}", "{out}", "{scale}"] {
            if !command_template.contains(p) {
                return Err(Error::InvalidParameter(format!(
                    "resolver command template is missing the {p} placeholder"
                )));
            }
        }
        Ok(ResolverSpec::External {
            command_template,
            timeout,
        })
    }
}

/// Corrects `y` with `h`, then super-resolves by `scale`.
pub fn super_resolve(y: &Image, h: &CorrectionFilter, scale: usize, spec: &ResolverSpec) -> Result<Image> {
    let corrected = apply_correction(y, h)?;
    match spec {
        ResolverSpec::BuiltinLinear => resolve_builtin(&corrected, scale),
        ResolverSpec::External { .. } => resolve_external(&corrected, scale, spec),
    }
}

/// `R (R* R)^-1` with the bicubic kernel.
pub fn resolve_builtin(y: &Image, scale: usize) -> Result<Image> {
    pseudo_inverse_reconstruct(y, scale, 0.0)
}

fn shell_quote(p: &std::path::Path) -> String {
    format!("'{}'", p.display().to_string().replace('\'', r"'\''"))
}

fn temp_dir() -> Result<tempfile::TempDir> {
    let base = std::env::var_os(TMP_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(std::env::temp_dir);
    tempfile::Builder::new()
        .prefix("corrfilt-")
        .tempdir_in(&base)
        .map_err(|e| Error::io(base, e))
}

/// Runs an external resolver through temporary PNM files. The input is
/// quantized to 8 bits on the way out.
pub fn resolve_external(y: &Image, scale: usize, spec: &ResolverSpec) -> Result<Image> {
    let ResolverSpec::External {
        command_template,
        timeout,
    } = spec
    else {
        return Err(Error::InvalidParameter("resolve_external needs an external resolver spec".into()));
    };
    let dir = temp_dir()?;
    let ext = if y.num_channels() == 1 { "pgm" } else { "ppm" };
    let input = dir.path().join(format!("in.{ext}"));
    let output = dir.path().join(format!("out.{ext}"));
    save_image(y, &input)?;

    let command = command_template
        .replace("{in}", &shell_quote(&input))
        .replace("{out}", &shell_quote(&output))
        .replace("{scale}", &scale.to_string());
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(&command)
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| Error::io("sh", e))?;

    let mut stderr = child.stderr.take().expect("piped stderr");
    let reader = thread::spawn(move || {
        let mut buf = String::new();
        let _ = stderr.read_to_string(&mut buf);
        buf
    });

    let deadline = Instant::now() + *timeout;
    let status = loop {
        if let Some(status) = child.try_wait().map_err(|e| Error::io("sh", e))? {
            break status;
        }
        if Instant::now() >= deadline {
            let _ = child.kill();
            let _ = child.wait();
            return Err(Error::ResolverTimeout {
                seconds: timeout.as_secs_f64(),
            });
        }
        thread::sleep(Duration::from_millis(10));
    };
    let err_text = reader.join().unwrap_or_default();
    if !status.success() {
        let start = err_text.len().saturating_sub(STDERR_EXCERPT);
        let start = (start..err_text.len()).find(|&i| err_text.is_char_boundary(i)).unwrap_or(start);
        return Err(Error::ResolverExit {
            code: status.code(),
            stderr: err_text[start..].trim().to_string(),
        });
    }

    let result = load_image(&output)?;
    let expected = (y.height() * scale, y.width() * scale);
    if result.dim() != expected {
        return Err(Error::ResolverOutput {
            expected,
            found: result.dim(),
        });
    }
    Ok(result)
}
