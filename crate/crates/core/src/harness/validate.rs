use crate::orgmodel::load_org_spec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecReport {
    pub ok: bool,
    pub text: String,
}

/// Loads an org spec and renders either its faults or its summary.
pub fn validate_spec(text: &str) -> SpecReport {
    match load_org_spec(text) {
        Ok(spec) => SpecReport {
            ok: true,
            text: format!("OK\n{}", spec.summary()),
        },
        Err(e) => {
            let mut out = format!("{} fault(s)\n", e.0.len());
            for f in &e.0 {
                out.push_str(&format!("  - {f}\n"));
            }
            SpecReport { ok: false, text: out }
        }
    }
}
